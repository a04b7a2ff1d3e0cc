//! Skorokhod reflection: the deterministic transform of polyline driving
//! paths and the projected Euler step used by the simulator.

use serde::Serialize;

use crate::geometry::{Domain, Vec2};
use crate::{Error, Result};

/// Nearest boundary point of a region, seen from a query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    /// Positive inside the region.
    pub signed_distance: f64,
    pub position: Vec2,
    /// Inward unit normal at `position`.
    pub normal: Vec2,
    /// Signed curvature ν at `position`.
    pub curvature: f64,
    pub curve: usize,
    pub u: f64,
}

/// Anything we can reflect in: a closed region with a nearest-point map.
pub trait Region: Sync {
    fn locate(&self, z: Vec2) -> Result<Contact>;
    /// Smallest curvature radius or gap; `INFINITY` for flat regions.
    fn feature_size(&self) -> f64;
    /// Distance below which a point counts as on the boundary.
    fn boundary_tolerance(&self) -> f64;
}

impl Region for Domain {
    fn locate(&self, z: Vec2) -> Result<Contact> {
        let (bp, d) = self.project_to_boundary(z)?;
        let s = (z - bp.position).dot(&bp.normal);
        Ok(Contact {
            signed_distance: if s >= 0.0 { d } else { -d },
            position: bp.position,
            normal: bp.normal,
            curvature: bp.curvature,
            curve: bp.curve,
            u: bp.u,
        })
    }

    fn feature_size(&self) -> f64 {
        Domain::feature_size(self)
    }

    fn boundary_tolerance(&self) -> f64 {
        Domain::boundary_tolerance(self)
    }
}

/// The upper half-plane `{y > 0}`. The boundary parameter is the abscissa.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HalfPlane;

impl Region for HalfPlane {
    fn locate(&self, z: Vec2) -> Result<Contact> {
        if !(z.x.is_finite() && z.y.is_finite()) {
            return Err(Error::Domain("point is not finite".into()));
        }
        Ok(Contact {
            signed_distance: z.y,
            position: Vec2::new(z.x, 0.0),
            normal: Vec2::new(0.0, 1.0),
            curvature: 0.0,
            curve: 0,
            u: z.x,
        })
    }

    fn feature_size(&self) -> f64 {
        f64::INFINITY
    }

    fn boundary_tolerance(&self) -> f64 {
        1e-12
    }
}

/// Piecewise-linear driving path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DrivingPath {
    t: Vec<f64>,
    points: Vec<Vec2>,
}

impl DrivingPath {
    pub fn new(t: Vec<f64>, points: Vec<Vec2>) -> Result<Self> {
        if t.len() != points.len() {
            return Err(Error::Config(format!("{} times but {} points", t.len(), points.len())));
        }
        if t.is_empty() {
            return Err(Error::Config("driving path is empty".into()));
        }
        if t.iter().any(|v| !v.is_finite()) || points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::Config("driving path has non-finite entries".into()));
        }
        if let Some(k) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!("time grid is not strictly increasing at index {}", k + 1)));
        }
        Ok(Self { t, points })
    }

    /// Path on the grid `0, dt, 2dt, ...` from cumulative increments.
    pub fn from_increments(start: Vec2, dt: f64, increments: &[Vec2]) -> Result<Self> {
        let mut t = Vec::with_capacity(increments.len() + 1);
        let mut points = Vec::with_capacity(increments.len() + 1);
        t.push(0.0);
        points.push(start);
        let mut p = start;
        for (k, d) in increments.iter().enumerate() {
            p += d;
            t.push((k + 1) as f64 * dt);
            points.push(p);
        }
        Self::new(t, points)
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Output of the transform on the driving path's grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReflectedPath {
    pub t: Vec<f64>,
    pub beta: Vec<Vec2>,
    /// Cumulative local time, in length units.
    pub local_time: Vec<f64>,
    /// Total push over each grid step (`len() - 1` entries).
    pub push: Vec<Vec2>,
    /// Whether each grid point lies on the boundary.
    pub on_boundary: Vec<bool>,
    /// Total variation of the driving path, summed over substeps.
    pub variation_gamma: f64,
    /// Total variation of the reflected path, summed over substeps.
    pub variation_beta: f64,
    pub substeps: usize,
}

/// One projected Euler step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub position: Vec2,
    /// Local-time increment; zero when the proposal stayed in the closure.
    pub local_time: f64,
    /// `position - proposal`, along the inward normal.
    pub push: Vec2,
    /// Boundary data at `position` when a push happened.
    pub contact: Option<Contact>,
    /// Distance from `position` to the boundary.
    pub clearance: f64,
}

fn step_guard<R: Region + ?Sized>(region: &R, db: Vec2) -> Result<()> {
    let limit = 0.1 * region.feature_size();
    let len = db.norm();
    if !len.is_finite() {
        return Err(Error::Numerical("non-finite increment".into()));
    }
    if len >= limit {
        return Err(Error::StepTooLarge(format!(
            "increment of length {len:e} exceeds 0.1 x feature size = {limit:e}; use a smaller step"
        )));
    }
    Ok(())
}

/// Projection substep without the size guard.
pub(crate) fn project_step<R: Region + ?Sized>(region: &R, x: Vec2, db: Vec2) -> Result<Step> {
    let proposal = x + db;
    let c = region.locate(proposal)?;
    if c.signed_distance >= 0.0 {
        return Ok(Step {
            position: proposal,
            local_time: 0.0,
            push: Vec2::zeros(),
            contact: None,
            clearance: c.signed_distance,
        });
    }
    let depth = -c.signed_distance;
    if depth > region.feature_size() {
        return Err(Error::StepTooLarge(format!(
            "proposal lies {depth:e} outside the domain, beyond the reach of the projection"
        )));
    }
    Ok(Step { position: c.position, local_time: depth, push: c.position - proposal, contact: Some(c), clearance: 0.0 })
}

/// A single Euler step of the reflected equation from `x ∈ closure(D)`.
pub fn reflected_step<R: Region + ?Sized>(region: &R, x: Vec2, db: Vec2) -> Result<Step> {
    step_guard(region, db)?;
    project_step(region, x, db)
}

/// Skorokhod transform of a polyline, with each grid step cut into equal
/// substeps no longer than `h_max` in time.
pub fn skorokhod_transform<R: Region + ?Sized>(region: &R, path: &DrivingPath, h_max: f64) -> Result<ReflectedPath> {
    if !(h_max > 0.0 && h_max.is_finite()) {
        return Err(Error::Config(format!("h_max must be positive, got {h_max}")));
    }
    let n = path.len();
    let start = path.points[0];
    let c0 = region.locate(start)?;
    if c0.signed_distance < -region.boundary_tolerance() {
        return Err(Error::Domain(format!("path starts outside the domain at ({}, {})", start.x, start.y)));
    }
    let mut out = ReflectedPath {
        t: path.t.clone(),
        beta: Vec::with_capacity(n),
        local_time: Vec::with_capacity(n),
        push: Vec::with_capacity(n.saturating_sub(1)),
        on_boundary: Vec::with_capacity(n),
        variation_gamma: 0.0,
        variation_beta: 0.0,
        substeps: 0,
    };
    let mut beta = if c0.signed_distance < 0.0 { c0.position } else { start };
    let mut ell = 0.0;
    out.beta.push(beta);
    out.local_time.push(0.0);
    out.on_boundary.push(c0.signed_distance <= region.boundary_tolerance());
    for k in 0..n - 1 {
        let dt = path.t[k + 1] - path.t[k];
        let dg = path.points[k + 1] - path.points[k];
        let m = (dt / h_max).ceil().max(1.0) as usize;
        let sub = dg / m as f64;
        step_guard(region, sub).map_err(|e| match e {
            Error::StepTooLarge(msg) => Error::StepTooLarge(format!("grid step {k}: {msg}; reduce h_max")),
            e => e,
        })?;
        let sub_len = sub.norm();
        let mut push = Vec2::zeros();
        let mut touched = false;
        for _ in 0..m {
            let s = project_step(region, beta, sub).map_err(|e| match e {
                Error::Numerical(msg) => Error::Numerical(format!("grid step {k}: {msg}")),
                e => e,
            })?;
            out.variation_gamma += sub_len;
            if s.contact.is_some() {
                out.variation_beta += (s.position - beta).norm();
                ell += s.local_time;
                push += s.push;
                touched = true;
            } else {
                out.variation_beta += sub_len;
                touched = false;
            }
            beta = s.position;
        }
        out.substeps += m;
        out.beta.push(beta);
        out.local_time.push(ell);
        out.push.push(push);
        out.on_boundary.push(touched || region.locate(beta)?.signed_distance <= region.boundary_tolerance());
    }
    Ok(out)
}

/// Total variations `(⌊γ⌋, ⌊β⌋, ⌊γ⌋ - ⌊β⌋)` of a path and its reflection.
pub fn variation_gap_check<R: Region + ?Sized>(region: &R, path: &DrivingPath, h_max: f64) -> Result<(f64, f64, f64)> {
    let r = skorokhod_transform(region, path, h_max)?;
    Ok((r.variation_gamma, r.variation_beta, r.variation_gamma - r.variation_beta))
}

/// First grid time at which the local time reaches `level`. Level zero
/// returns the first time on the boundary.
pub fn inverse_local_time(t: &[f64], local_time: &[f64], on_boundary: &[bool], level: f64) -> Result<f64> {
    if !(level >= 0.0) {
        return Err(Error::Config(format!("local-time level must be non-negative, got {level}")));
    }
    let hit = if level == 0.0 {
        on_boundary.iter().position(|&b| b)
    } else {
        local_time.iter().position(|&l| l >= level)
    };
    match hit {
        Some(k) => Ok(t[k]),
        None => Err(Error::Horizon(format!(
            "local time {} at the horizon never reaches {level}",
            local_time.last().copied().unwrap_or(0.0)
        ))),
    }
}

impl ReflectedPath {
    pub fn inverse_local_time(&self, level: f64) -> Result<f64> {
        inverse_local_time(&self.t, &self.local_time, &self.on_boundary, level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_plane_downward_drive_is_absorbed() {
        let path = DrivingPath::new(vec![0.0, 1.0], vec![Vec2::zeros(), Vec2::new(0.0, -1.0)]).unwrap();
        let r = skorokhod_transform(&HalfPlane, &path, 0.01).unwrap();
        assert_eq!(r.beta[1], Vec2::zeros());
        assert!((r.local_time[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disc_projection_examples() {
        let d = Domain::disc(1.0, 256).unwrap();
        let s = reflected_step(&d, Vec2::new(0.99, 0.0), Vec2::new(0.02, 0.0)).unwrap();
        assert!((s.position - Vec2::new(1.0, 0.0)).norm() < 1e-12);
        assert!((s.local_time - 0.01).abs() < 1e-12);
        let s = reflected_step(&d, Vec2::new(0.9, 0.0), Vec2::new(0.05, 0.0)).unwrap();
        assert_eq!(s.local_time, 0.0);
        assert_eq!(s.position, Vec2::new(0.9, 0.0) + Vec2::new(0.05, 0.0));
    }

    #[test]
    fn guard_rejects_long_steps() {
        let d = Domain::disc(1.0, 256).unwrap();
        assert!(matches!(reflected_step(&d, Vec2::zeros(), Vec2::new(0.2, 0.0)), Err(Error::StepTooLarge(_))));
    }
}
