//! Reference spectra and eigenfunctions on `[0, 2π]`.
//!
//! Other interval lengths reduce to these by rescaling `x`, which rescales
//! eigenvalues by the square of the length ratio and the Robin constant `c`
//! by the length ratio.

use std::f64::consts::PI;

use crate::eigensolve::ReferenceFunction;
use crate::error::{Error, Result};
use crate::linalg::C64;

const TWO_PI: f64 = 2.0 * PI;
const BISECTION_WIDTH: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleFamily {
    Dirichlet,
    Neumann,
    Periodic,
    QuasiPeriodic { epsilon: f64 },
    /// Neumann at `0`, `Ψ'(2π) = c Ψ(2π)`.
    RobinInterval { c: f64 },
}

/// Closed-form eigenfunctions on `[0, 2π]`, normalized in `L²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleFunction {
    /// `e^{ikx}/√(2π)`
    Exponential { k: f64 },
    /// `sin(kx)/√π`
    Sine { k: f64 },
    /// `cos(kx)/‖cos(k·)‖`
    Cosine { k: f64, norm: f64 },
    /// `cosh(μx)/‖cosh(μ·)‖`, evaluated without overflow.
    Cosh { mu: f64, norm: f64 },
}

impl OracleFunction {
    fn cosine(k: f64) -> Self {
        let norm_sq = if k == 0.0 {
            TWO_PI
        } else {
            PI + (2.0 * TWO_PI * k).sin() / (4.0 * k)
        };
        OracleFunction::Cosine {
            k,
            norm: norm_sq.sqrt(),
        }
    }

    fn cosh(mu: f64) -> Self {
        // cosh(μx) ∝ e^{μ(x−2π)} + e^{−μ(x+2π)}
        let e = (-2.0 * TWO_PI * mu).exp();
        let norm_sq = (1.0 - e) / (2.0 * mu) + 2.0 * TWO_PI * e + (e - e * e) / (2.0 * mu);
        OracleFunction::Cosh {
            mu,
            norm: norm_sq.sqrt(),
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        match *self {
            OracleFunction::Exponential { k } => C64::from_polar(1.0 / TWO_PI.sqrt(), k * x),
            OracleFunction::Sine { k } => C64::new((k * x).sin() / PI.sqrt(), 0.0),
            OracleFunction::Cosine { k, norm } => C64::new((k * x).cos() / norm, 0.0),
            OracleFunction::Cosh { mu, norm } => {
                C64::new(((mu * (x - TWO_PI)).exp() + (-mu * (x + TWO_PI)).exp()) / norm, 0.0)
            }
        }
    }

    pub fn eval_derivative(&self, x: f64) -> C64 {
        match *self {
            OracleFunction::Exponential { k } => C64::new(0.0, k) * self.eval(x),
            OracleFunction::Sine { k } => C64::new(k * (k * x).cos() / PI.sqrt(), 0.0),
            OracleFunction::Cosine { k, norm } => C64::new(-k * (k * x).sin() / norm, 0.0),
            OracleFunction::Cosh { mu, norm } => C64::new(
                mu * ((mu * (x - TWO_PI)).exp() - (-mu * (x + TWO_PI)).exp()) / norm,
                0.0,
            ),
        }
    }
}

impl ReferenceFunction for OracleFunction {
    fn value(&self, _interval: usize, x: f64) -> C64 {
        self.eval(x)
    }

    fn derivative(&self, _interval: usize, x: f64) -> C64 {
        self.eval_derivative(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpectrum {
    pub family: OracleFamily,
    /// Ascending, repeated according to multiplicity.
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<OracleFunction>,
}

/// The `count` smallest values of `(n + ε)²`, `n ∈ ℤ`, with `ψ_n = e^{−i(n+ε)x}/√(2π)`.
pub fn quasi_periodic_spectrum(epsilon: f64, count: usize) -> OracleSpectrum {
    let reach = count as i64 / 2 + 2;
    let mut modes: Vec<(f64, i64)> = (-reach..=reach)
        .map(|n| ((n as f64 + epsilon).powi(2), n))
        .collect();
    modes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    modes.truncate(count);
    OracleSpectrum {
        family: OracleFamily::QuasiPeriodic { epsilon },
        eigenvalues: modes.iter().map(|m| m.0).collect(),
        eigenfunctions: modes
            .iter()
            .map(|&(_, n)| OracleFunction::Exponential {
                k: -(n as f64 + epsilon),
            })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalKind {
    Dirichlet,
    Neumann,
    Periodic,
}

pub fn classical_spectrum(kind: ClassicalKind, count: usize) -> OracleSpectrum {
    match kind {
        ClassicalKind::Dirichlet => OracleSpectrum {
            family: OracleFamily::Dirichlet,
            eigenvalues: (1..=count).map(|m| (m as f64 / 2.0).powi(2)).collect(),
            eigenfunctions: (1..=count)
                .map(|m| OracleFunction::Sine { k: m as f64 / 2.0 })
                .collect(),
        },
        ClassicalKind::Neumann => OracleSpectrum {
            family: OracleFamily::Neumann,
            eigenvalues: (0..count).map(|m| (m as f64 / 2.0).powi(2)).collect(),
            eigenfunctions: (0..count)
                .map(|m| OracleFunction::cosine(m as f64 / 2.0))
                .collect(),
        },
        ClassicalKind::Periodic => {
            let mut s = quasi_periodic_spectrum(0.0, count);
            s.family = OracleFamily::Periodic;
            s
        }
    }
}

/// `f(λ̃) = λ̃ sin(2πλ̃) + c cos(2πλ̃)`, whose positive roots give the
/// eigenvalues `λ̃²`; it is `tan(2πλ̃) = −c/λ̃` without the poles.
pub fn robin_positive_equation(lt: f64, c: f64) -> f64 {
    lt * (TWO_PI * lt).sin() + c * (TWO_PI * lt).cos()
}

/// `e^{−4πμ} − (μ − c)/(μ + c)`, whose root `μ > 0` gives the eigenvalue `−μ²`.
pub fn robin_negative_equation(mu: f64, c: f64) -> f64 {
    (-2.0 * TWO_PI * mu).exp() - (mu - c) / (mu + c)
}

/// Branch `m` of the positive equation: `((2m−1)/4, (2m+1)/4)`, clipped at 0.
pub fn robin_branch(m: usize) -> (f64, f64) {
    (((2 * m) as f64 - 1.0).max(0.0) / 4.0, (2 * m + 1) as f64 / 4.0)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, branch: usize) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootBracketFailure { branch });
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of the positive equation in branch `m`, or `None` when the branch
/// holds no positive root (`m = 0` with `c > 0`).
fn robin_positive_root(m: usize, c: f64) -> Result<Option<f64>> {
    let (lo, hi) = robin_branch(m);
    if m == 0 {
        if c > 0.0 {
            return Ok(None);
        }
        if c == 0.0 {
            return Ok(Some(0.0));
        }
    }
    let f = |x: f64| robin_positive_equation(x, c);
    let mut x = bisect(f, lo, hi, m)?;
    for _ in 0..2 {
        let w = TWO_PI * x;
        let df = w.sin() + x * TWO_PI * w.cos() - c * TWO_PI * w.sin();
        if df != 0.0 {
            let next = x - f(x) / df;
            if next > lo && next < hi && f(next).abs() <= f(x).abs() {
                x = next;
            }
        }
    }
    Ok(Some(x))
}

/// Unique `μ > 0` with `μ tanh(2πμ) = c`, for `c > 0`.
pub fn robin_edge_root(c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::RootBracketFailure { branch: 0 });
    }
    // g(μ) = μ tanh(2πμ) − c is increasing and convex on μ > 0
    let g = |mu: f64| mu * (TWO_PI * mu).tanh() - c;
    let dg = |mu: f64| {
        let t = (TWO_PI * mu).tanh();
        t + mu * TWO_PI * (1.0 - t * t)
    };
    let (mut lo, mut hi) = (0.0, c + 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut mu = c.max(0.1).min(hi);
    for _ in 0..200 {
        let gm = g(mu);
        if gm == 0.0 {
            return Ok(mu);
        }
        if gm < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let mut next = mu - gm / dg(mu);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - mu).abs() <= 4.0 * f64::EPSILON * mu {
            return Ok(next);
        }
        mu = next;
    }
    Err(Error::RootBracketFailure { branch: 0 })
}

/// Spectrum of `−d²/dx²` on `[0, 2π]` with `Ψ'(0) = 0` and `Ψ'(2π) = cΨ(2π)`.
pub fn robin_interval_spectrum(c: f64, count: usize) -> Result<OracleSpectrum> {
    if !c.is_finite() {
        return Err(Error::RootBracketFailure { branch: 0 });
    }
    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenfunctions = Vec::with_capacity(count);
    if c > 0.0 && count > 0 {
        let mu = robin_edge_root(c)?;
        eigenvalues.push(-mu * mu);
        eigenfunctions.push(OracleFunction::cosh(mu));
    }
    let mut m = 0;
    while eigenvalues.len() < count {
        if let Some(lt) = robin_positive_root(m, c)? {
            eigenvalues.push(lt * lt);
            eigenfunctions.push(OracleFunction::cosine(lt));
        }
        m += 1;
    }
    Ok(OracleSpectrum {
        family: OracleFamily::RobinInterval { c },
        eigenvalues,
        eigenfunctions,
    })
}

/// `c = tan(θ/2)` for the local Robin preset with angle `θ`.
pub fn robin_local_constant(theta: f64) -> f64 {
    (0.5 * theta).tan()
}
