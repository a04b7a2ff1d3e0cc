//! Domain construction from configuration documents and from the compact
//! `kind:p1,p2` shorthand used on the command line.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, CurveShape, Domain, Side, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Disc,
    Ellipse,
    Annulus,
    DiscExterior,
    EllipseExterior,
    Fourier,
    DiscWithHoles,
}

impl DomainKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Disc => "disc",
            Self::Ellipse => "ellipse",
            Self::Annulus => "annulus",
            Self::DiscExterior => "disc_exterior",
            Self::EllipseExterior => "ellipse_exterior",
            Self::Fourier => "fourier",
            Self::DiscWithHoles => "disc_with_holes",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoleShape {
    #[default]
    Circle,
    Ellipse,
}

/// A hole: circle of `radius`, or axis-aligned ellipse with semi-axes `a`, `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSpec {
    pub center: [f64; 2],
    #[serde(default)]
    pub shape: HoleShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl HoleSpec {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self { center, shape: HoleShape::Circle, radius: Some(radius), a: None, b: None }
    }

    pub fn curve(&self, n_quad: usize) -> Result<BoundaryCurve> {
        let c = Vec2::new(self.center[0], self.center[1]);
        match self.shape {
            HoleShape::Circle => {
                let r = self.radius.ok_or_else(|| Error::Config("circular hole needs `radius`".into()))?;
                BoundaryCurve::circle(c, r, Side::Right, n_quad)
            }
            HoleShape::Ellipse => {
                let a = self.a.ok_or_else(|| Error::Config("elliptic hole needs `a`".into()))?;
                let b = self.b.ok_or_else(|| Error::Config("elliptic hole needs `b`".into()))?;
                BoundaryCurve::ellipse(c, a, b, Side::Right, n_quad)
            }
        }
    }

    /// Largest diameter of the hole.
    pub fn diameter(&self) -> f64 {
        match self.shape {
            HoleShape::Circle => 2.0 * self.radius.unwrap_or(0.0),
            HoleShape::Ellipse => 2.0 * self.a.unwrap_or(0.0).max(self.b.unwrap_or(0.0)),
        }
    }
}

fn default_n_quad() -> usize {
    512
}

/// Configuration-document form of a catalog domain.
///
/// | kind               | parameters                                   |
/// |--------------------|----------------------------------------------|
/// | `disc`             | `radius` (1)                                 |
/// | `ellipse`          | `a`, `b`                                     |
/// | `annulus`          | `inner`, `outer`                             |
/// | `disc_exterior`    | `radius` (1)                                 |
/// | `ellipse_exterior` | `map_a` in (0, 1)                            |
/// | `fourier`          | `x_cos`, `x_sin`, `y_cos`, `y_sin`           |
/// | `disc_with_holes`  | `radius` (1), `holes`                        |
///
/// Every kind also accepts `n_quad` (default 512).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_cos: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_sin: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_cos: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_sin: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<HoleSpec>,
    #[serde(default = "default_n_quad")]
    pub n_quad: usize,
}

impl DomainSpec {
    pub fn new(kind: DomainKind) -> Self {
        Self {
            kind,
            radius: None,
            a: None,
            b: None,
            inner: None,
            outer: None,
            map_a: None,
            x_cos: None,
            x_sin: None,
            y_cos: None,
            y_sin: None,
            holes: Vec::new(),
            n_quad: default_n_quad(),
        }
    }

    pub fn disc(radius: f64) -> Self {
        Self { radius: Some(radius), ..Self::new(DomainKind::Disc) }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self { a: Some(a), b: Some(b), ..Self::new(DomainKind::Ellipse) }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Self { inner: Some(inner), outer: Some(outer), ..Self::new(DomainKind::Annulus) }
    }

    pub fn disc_exterior(radius: f64) -> Self {
        Self { radius: Some(radius), ..Self::new(DomainKind::DiscExterior) }
    }

    pub fn ellipse_exterior(map_a: f64) -> Self {
        Self { map_a: Some(map_a), ..Self::new(DomainKind::EllipseExterior) }
    }

    pub fn disc_with_holes(radius: f64, holes: Vec<HoleSpec>) -> Self {
        Self { radius: Some(radius), holes, ..Self::new(DomainKind::DiscWithHoles) }
    }

    pub fn with_n_quad(mut self, n_quad: usize) -> Self {
        self.n_quad = n_quad;
        self
    }

    /// Parse `kind` or `kind:p1,p2,...`.
    pub fn parse_shorthand(text: &str) -> Result<Self> {
        let (kind, params) = match text.split_once(':') {
            Some((k, p)) => (k.trim(), Some(p)),
            None => (text.trim(), None),
        };
        let nums: Vec<f64> = match params {
            Some(p) => p
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number '{v}' in '{text}': {e}"))))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let arity = |min: usize, max: usize| -> Result<()> {
            if nums.len() < min || nums.len() > max {
                Err(Error::Config(format!("'{kind}' takes {min} to {max} parameters, got {} in '{text}'", nums.len())))
            } else {
                Ok(())
            }
        };
        let spec = match kind {
            "disc" => {
                arity(0, 1)?;
                Self::disc(nums.first().copied().unwrap_or(1.0))
            }
            "ellipse" => {
                arity(2, 2)?;
                Self::ellipse(nums[0], nums[1])
            }
            "annulus" => {
                arity(2, 2)?;
                Self::annulus(nums[0], nums[1])
            }
            "disc_exterior" => {
                arity(0, 1)?;
                Self::disc_exterior(nums.first().copied().unwrap_or(1.0))
            }
            "ellipse_exterior" => {
                arity(1, 1)?;
                Self::ellipse_exterior(nums[0])
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown domain shorthand '{other}' (fourier and disc_with_holes need a config file)"
                )))
            }
        };
        Ok(spec)
    }

    fn need(&self, v: Option<f64>, name: &str) -> Result<f64> {
        v.ok_or_else(|| Error::Config(format!("domain kind '{}' needs `{name}`", self.kind.as_str())))
    }

    pub fn build(&self) -> Result<Domain> {
        let n = self.n_quad;
        match self.kind {
            DomainKind::Disc => Domain::disc(self.radius.unwrap_or(1.0), n),
            DomainKind::Ellipse => Domain::ellipse(self.need(self.a, "a")?, self.need(self.b, "b")?, n),
            DomainKind::Annulus => Domain::annulus(self.need(self.inner, "inner")?, self.need(self.outer, "outer")?, n),
            DomainKind::DiscExterior => Domain::disc_exterior(self.radius.unwrap_or(1.0), n),
            DomainKind::EllipseExterior => Domain::ellipse_exterior(self.need(self.map_a, "map_a")?, n),
            DomainKind::Fourier => {
                let get = |v: &Option<Vec<f64>>, name: &str| {
                    v.clone().ok_or_else(|| Error::Config(format!("domain kind 'fourier' needs `{name}`")))
                };
                let shape = CurveShape::Fourier {
                    x_cos: get(&self.x_cos, "x_cos")?,
                    x_sin: get(&self.x_sin, "x_sin")?,
                    y_cos: get(&self.y_cos, "y_cos")?,
                    y_sin: get(&self.y_sin, "y_sin")?,
                };
                let holes = self.holes.iter().map(|h| h.curve(n)).collect::<Result<_>>()?;
                Domain::bounded(BoundaryCurve::new(shape, Side::Left, n)?, holes)
            }
            DomainKind::DiscWithHoles => {
                let outer = BoundaryCurve::circle(Vec2::zeros(), self.radius.unwrap_or(1.0), Side::Left, n)?;
                let holes = self.holes.iter().map(|h| h.curve(n)).collect::<Result<_>>()?;
                Domain::bounded(outer, holes)
            }
        }
    }

    /// Short identifier for tables.
    pub fn id(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "?".into());
        match self.kind {
            DomainKind::Disc => format!("disc:{}", f(self.radius.or(Some(1.0)))),
            DomainKind::Ellipse => format!("ellipse:{},{}", f(self.a), f(self.b)),
            DomainKind::Annulus => format!("annulus:{},{}", f(self.inner), f(self.outer)),
            DomainKind::DiscExterior => format!("disc_exterior:{}", f(self.radius.or(Some(1.0)))),
            DomainKind::EllipseExterior => format!("ellipse_exterior:{}", f(self.map_a)),
            DomainKind::Fourier => format!("fourier:{}holes", self.holes.len()),
            DomainKind::DiscWithHoles => format!("disc_with_holes:{}", self.holes.len()),
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthand_round_trip() {
        let s = DomainSpec::parse_shorthand("annulus:0.5,1").unwrap();
        assert_eq!(s.id(), "annulus:0.5,1");
        assert_eq!(s.build().unwrap().hole_count(), 1);
        assert_eq!(DomainSpec::parse_shorthand("disc").unwrap().radius, Some(1.0));
        assert!(DomainSpec::parse_shorthand("annulus:0.5").is_err());
        assert!(DomainSpec::parse_shorthand("square:1").is_err());
    }

    #[test]
    fn holes_from_spec() {
        let spec = DomainSpec::disc_with_holes(
            1.0,
            vec![HoleSpec::circle([0.5, 0.0], 0.1), HoleSpec::circle([-0.5, 0.0], 0.1)],
        );
        let d = spec.build().unwrap();
        assert_eq!(d.hole_count(), 2);
        assert_eq!(d.euler_characteristic(), -1);
    }
}
