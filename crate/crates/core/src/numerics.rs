//! Small numerical building blocks shared by the geometry, harmonic-measure
//! and Lyapunov modules: double-exponential quadrature, polynomial
//! extrapolation, least squares, and trigonometric interpolation of
//! periodic samples.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Result of an adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub evals: usize,
}

/// Tanh-sinh (double exponential) quadrature on `[a, b]`.
///
/// Integrable endpoint singularities (logarithmic, inverse square root) are
/// handled without special treatment; the abscissae are generated as offsets
/// from the nearest endpoint so that points close to `a` or `b` keep their
/// full relative precision.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    const MAX_LEVEL: usize = 10;
    if b == a {
        return Quadrature { value: 0.0, error: 0.0, evals: 0 };
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut evals = 0usize;

    // Sum over abscissae t = k*h for the given k iterator (t > 0 mirrored).
    let mut eval_at = |t: f64, f: &mut F| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        let cosh_s = s.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
        if !w.is_finite() || w < 1e-300 {
            return 0.0;
        }
        if t == 0.0 {
            evals += 1;
            return w * f(mid);
        }
        // 1 - tanh(s) = exp(-s) / cosh(s)
        let off = half * ((-s).exp() / cosh_s);
        if off.abs() == 0.0 {
            return 0.0;
        }
        let right = b - off;
        let left = a + off;
        let mut acc = 0.0;
        if right != b {
            evals += 1;
            acc += w * f(right);
        }
        if left != a {
            evals += 1;
            acc += w * f(left);
        }
        acc
    };

    let t_max = 6.5_f64;
    let mut h = 0.5_f64;
    let mut sum = eval_at(0.0, &mut f);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        sum += eval_at(k as f64 * h, &mut f);
        k += 1;
    }
    let mut prev = sum * h * half;
    let mut error = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1usize;
        while (k as f64) * h <= t_max {
            sum += eval_at(k as f64 * h, &mut f);
            k += 2;
        }
        let cur = sum * h * half;
        error = (cur - prev).abs();
        prev = cur;
        if level >= 3 && error <= tol {
            break;
        }
    }
    Quadrature { value: prev, error, evals }
}

/// Neville extrapolation of `values[i] = f(steps[i])` to step 0.
pub fn extrapolate_to_zero(steps: &[f64], values: &[f64]) -> f64 {
    assert_eq!(steps.len(), values.len());
    assert!(!steps.is_empty());
    let mut p = values.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            let (hi, hj) = (steps[i], steps[i + m]);
            p[i] = (hj * p[i] - hi * p[i + 1]) / (hj - hi);
        }
    }
    p[0]
}

/// Two-point first-order Richardson: value at step `h` and at `h/2`.
pub fn richardson_halving(coarse: f64, fine: f64) -> f64 {
    2.0 * fine - coarse
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Classical standard error of the slope under iid residuals.
    pub slope_stderr: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .sum();
    let slope_stderr = (rss / (nf - 2.0) / sxx).sqrt();
    Some(LinearFit { slope, intercept, slope_stderr, n })
}

/// Pairwise (tree) summation; the result depends only on the order of the
/// input, never on how work was scheduled to produce it.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// Trigonometric interpolant of `n` equispaced samples of a 1-periodic
/// function (`u_j = j / n`).
#[derive(Clone, Debug)]
pub struct TrigInterp {
    /// Coefficients for k = 0..=n/2, already scaled so that
    /// f(u) = Re sum_k c_k e^{2 pi i k u}.
    coeffs: Vec<Complex64>,
}

impl TrigInterp {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let fft = plan_forward(n);
        Self::with_plan(samples, fft.as_ref())
    }

    pub fn with_plan(samples: &[f64], fft: &dyn Fft<f64>) -> Self {
        let n = samples.len();
        assert!(n >= 2 && n % 2 == 0, "trigonometric interpolation needs an even sample count");
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        let nf = n as f64;
        let half = n / 2;
        let mut coeffs = Vec::with_capacity(half + 1);
        coeffs.push(buf[0] / nf);
        for k in 1..half {
            coeffs.push(buf[k] * (2.0 / nf));
        }
        coeffs.push(buf[half] / nf);
        Self { coeffs }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let step = Complex64::from_polar(1.0, TAU * u);
        let mut rot = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        let last = self.coeffs.len() - 1;
        for (k, c) in self.coeffs.iter().enumerate() {
            if k == last {
                // Nyquist term, real-symmetric form cos(pi n u)
                acc += c.re * (PI * (2 * last) as f64 * u).cos();
            } else {
                acc += (c * rot).re;
            }
            rot *= step;
        }
        acc
    }
}

pub fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

/// Cardinal functions of periodic trigonometric interpolation at `n`
/// equispaced nodes (n even), evaluated at `u`: `out[j] = L_j(u)`.
pub fn trig_cardinal_weights(n: usize, u: f64, out: &mut Vec<f64>) {
    out.clear();
    let nf = n as f64;
    for j in 0..n {
        let t = TAU * (u - j as f64 / nf);
        let half = 0.5 * t;
        let s = half.sin();
        if s.abs() < 1e-14 {
            out.push(1.0);
        } else {
            out.push((0.5 * nf * t).sin() * half.cos() / (nf * s));
        }
    }
}

/// Spectral differentiation matrix (with respect to the angle t = 2 pi u)
/// for `n` equispaced periodic samples, n even. Row-major.
pub fn spectral_diff_matrix(n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    let h = TAU / n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[i * n + j] = 0.5 * sign / (0.5 * (i as f64 - j as f64) * h).tan();
            }
        }
    }
    d
}

/// Kress weights for `int_0^{2pi} ln(4 sin^2((t - s)/2)) f(s) ds` on the
/// `2m` equispaced nodes `t_j = pi j / m`, evaluated at `t = t_i`.
/// Returned as `R[(i - j) mod 2m]` since the weights are circulant.
pub fn kress_log_weights(n: usize) -> Vec<f64> {
    assert!(n % 2 == 0);
    let m = n / 2;
    let mf = m as f64;
    (0..n)
        .map(|d| {
            let t = PI * d as f64 / mf;
            let mut s = 0.0;
            for k in 1..m {
                s += (k as f64 * t).cos() / k as f64;
            }
            -(2.0 * PI / mf) * s - (PI / (mf * mf)) * (mf * t).cos()
        })
        .collect()
}
