//! Admissible radial weights `Ψ` and the derived profile `Φ(x) = xΨ'(x)`.
//!
//! The measure on `ℂ^d` is `e^{-Ψ(|z|²)} dm_d(z)`. Every built-in family has
//! closed-form derivatives; logarithmic forms are provided so that very fast
//! growing weights (the exponential one) stay usable far beyond the range
//! where `Ψ` itself overflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in weight families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum WeightFamily {
    /// `Ψ(x) = x`, the classical Fock space.
    Gaussian,
    /// `Ψ(x) = x^s` with `s = 1` or `s ≥ 2`.
    Power { s: f64 },
    /// `Ψ(x) = e^x`.
    Exp,
}

/// Which of the two profiles a diagnostic is run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Psi,
    Phi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightModel {
    family: WeightFamily,
    eta: f64,
}

/// Sampled validation grid used by [`make_weight`].
pub const VALIDATION_RANGE: (f64, f64) = (1e-3, 1e3);
pub const VALIDATION_POINTS: usize = 200;

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Builds and validates a weight. The default class-𝒮 exponent is 0 for the
/// polynomial families and 1/4 for the exponential one.
pub fn make_weight(family: WeightFamily) -> Result<WeightModel> {
    let eta = match family {
        WeightFamily::Exp => 0.25,
        _ => 0.0,
    };
    make_weight_with_eta(family, eta)
}

pub fn make_weight_with_eta(family: WeightFamily, eta: f64) -> Result<WeightModel> {
    if !(eta < 0.5) {
        return Err(Error::InadmissibleWeight(format!(
            "class-S exponent eta = {eta} must be < 1/2"
        )));
    }
    if let WeightFamily::Power { s } = family {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::InadmissibleWeight(format!("Ψ′ ≤ 0 for s = {s}")));
        }
        if s < 1.0 {
            return Err(Error::InadmissibleWeight(format!("Ψ″ < 0 for s = {s}")));
        }
        if s > 1.0 && s < 2.0 {
            return Err(Error::InadmissibleWeight(format!("Ψ‴ < 0 for s = {s}")));
        }
    }
    let w = WeightModel { family, eta };
    w.validate(&log_spaced(
        VALIDATION_RANGE.0,
        VALIDATION_RANGE.1,
        VALIDATION_POINTS,
    ))?;
    Ok(w)
}

impl WeightModel {
    pub fn gaussian() -> Self {
        WeightModel {
            family: WeightFamily::Gaussian,
            eta: 0.0,
        }
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn name(&self) -> String {
        match self.family {
            WeightFamily::Gaussian => "gaussian".into(),
            WeightFamily::Power { s } => format!("power-{s}"),
            WeightFamily::Exp => "exp".into(),
        }
    }

    /// Checks the sign conditions on `Ψ′, Ψ″, Ψ‴` and `Φ′` at the sample points.
    pub fn validate(&self, xs: &[f64]) -> Result<()> {
        for &x in xs {
            if !(self.dpsi(x, 1) > 0.0) {
                return Err(Error::InadmissibleWeight(format!("Ψ′({x}) ≤ 0")));
            }
            if self.dpsi(x, 2) < 0.0 {
                return Err(Error::InadmissibleWeight(format!("Ψ″({x}) < 0")));
            }
            if self.dpsi(x, 3) < 0.0 {
                return Err(Error::InadmissibleWeight(format!("Ψ‴({x}) < 0")));
            }
            if !(self.dphi(x, 1) > 0.0) {
                return Err(Error::InadmissibleWeight(format!("Φ′({x}) ≤ 0")));
            }
        }
        Ok(())
    }

    pub fn psi(&self, x: f64) -> f64 {
        self.dpsi(x, 0)
    }

    /// `Ψ^{(order)}(x)` for `order ≤ 3`.
    pub fn dpsi(&self, x: f64, order: u32) -> f64 {
        match self.family {
            WeightFamily::Gaussian => match order {
                0 => x,
                1 => 1.0,
                _ => 0.0,
            },
            WeightFamily::Power { s } => {
                let mut c = 1.0;
                for i in 0..order {
                    c *= s - i as f64;
                }
                if c == 0.0 {
                    0.0
                } else {
                    c * x.powf(s - order as f64)
                }
            }
            WeightFamily::Exp => x.exp(),
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        x * self.dpsi(x, 1)
    }

    /// `Φ^{(order)}(x)` for `order ≤ 2`, using `Φ′ = Ψ′ + xΨ″` and `Φ″ = 2Ψ″ + xΨ‴`.
    pub fn dphi(&self, x: f64, order: u32) -> f64 {
        match order {
            0 => self.phi(x),
            1 => self.dpsi(x, 1) + x * self.dpsi(x, 2),
            2 => 2.0 * self.dpsi(x, 2) + x * self.dpsi(x, 3),
            _ => panic!("Φ derivatives are provided up to order 2"),
        }
    }

    /// `ln g^{(order)}(x)` for `g ∈ {Ψ, Φ}`, `order ∈ {1, 2}`; `-∞` when the
    /// derivative vanishes identically.
    pub fn ln_derivative(&self, profile: Profile, order: u32, x: f64) -> f64 {
        assert!(order == 1 || order == 2);
        match (self.family, profile) {
            (WeightFamily::Gaussian, _) => {
                if order == 1 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            (WeightFamily::Power { s }, Profile::Psi) => {
                if order == 1 {
                    s.ln() + (s - 1.0) * x.ln()
                } else if s == 1.0 {
                    f64::NEG_INFINITY
                } else {
                    (s * (s - 1.0)).ln() + (s - 2.0) * x.ln()
                }
            }
            (WeightFamily::Power { s }, Profile::Phi) => {
                if order == 1 {
                    2.0 * s.ln() + (s - 1.0) * x.ln()
                } else if s == 1.0 {
                    f64::NEG_INFINITY
                } else {
                    (s * s * (s - 1.0)).ln() + (s - 2.0) * x.ln()
                }
            }
            (WeightFamily::Exp, Profile::Psi) => x,
            (WeightFamily::Exp, Profile::Phi) => {
                if order == 1 {
                    x.ln_1p() + x
                } else {
                    (2.0 + x).ln() + x
                }
            }
        }
    }

    /// `Ψ(x + t) − Ψ(x)` without cancellation, for `x ≥ 0` and `x + t ≥ 0`.
    pub fn psi_increment(&self, x: f64, t: f64) -> f64 {
        match self.family {
            WeightFamily::Gaussian => t,
            WeightFamily::Power { s } => {
                if x == 0.0 {
                    t.powf(s)
                } else {
                    x.powf(s) * (s * (t / x).ln_1p()).exp_m1()
                }
            }
            WeightFamily::Exp => x.exp() * t.exp_m1(),
        }
    }

    /// `ln Ψ(x)`, finite wherever `Ψ(x) > 0` even when `Ψ(x)` overflows.
    pub fn ln_psi(&self, x: f64) -> f64 {
        match self.family {
            WeightFamily::Gaussian => x.ln(),
            WeightFamily::Power { s } => s * x.ln(),
            WeightFamily::Exp => x,
        }
    }

    pub fn growth_diagnostic(&self, range: (f64, f64)) -> Result<GrowthReport> {
        if !(range.0 > 0.0 && range.1 >= range.0) {
            return Err(Error::Domain(format!("range {range:?} must lie in (0, ∞)")));
        }
        let ln1p_psi = |x: f64| {
            let l = self.ln_psi(x);
            if l > 0.0 {
                l + (-l).exp().ln_1p()
            } else {
                l.exp().ln_1p()
            }
        };
        let mut max_psi_ratio: f64 = 0.0;
        let mut max_phi_ratio: f64 = 0.0;
        for x in log_spaced(range.0, range.1, VALIDATION_POINTS) {
            let lp = ln1p_psi(x);
            let a = self.ln_derivative(Profile::Psi, 1, x) - lp / (1.0 - self.eta);
            let b = self.ln_derivative(Profile::Phi, 1, x) - x.ln_1p() - 3.0 * lp;
            max_psi_ratio = max_psi_ratio.max(a.exp());
            max_phi_ratio = max_phi_ratio.max(b.exp());
        }
        Ok(GrowthReport {
            eta: self.eta,
            max_psi_ratio,
            max_phi_ratio,
        })
    }

    /// `Ψ(x + t) − Ψ(x) − tΨ′(x)` without cancellation (second-order remainder).
    pub fn psi_remainder(&self, x: f64, t: f64) -> f64 {
        match self.family {
            WeightFamily::Gaussian => 0.0,
            WeightFamily::Power { s } => {
                if x == 0.0 {
                    return t.powf(s);
                }
                let u = t / x;
                let h = if u.abs() <= 0.25 {
                    // Σ_{k≥2} binom(s,k) u^k
                    let mut term = s * u;
                    let mut sum = 0.0;
                    for k in 2..200 {
                        term *= (s - (k - 1) as f64) / k as f64 * u;
                        sum += term;
                        if term.abs() <= 1e-17 * sum.abs() {
                            break;
                        }
                    }
                    sum
                } else {
                    (s * u.ln_1p()).exp_m1() - s * u
                };
                x.powf(s) * h
            }
            WeightFamily::Exp => {
                let h = if t.abs() <= 0.5 {
                    let mut term = t;
                    let mut sum = 0.0;
                    for k in 2..60 {
                        term *= t / k as f64;
                        sum += term;
                        if term.abs() <= 1e-17 * sum.abs() {
                            break;
                        }
                    }
                    sum
                } else {
                    t.exp_m1() - t
                };
                x.exp() * h
            }
        }
    }

    /// Class-𝒮 diagnostic: the sampled sup of `g″(x)·x^{1/2}/g′(x)^{1+η}`.
    pub fn class_s_diagnostic(
        &self,
        profile: Profile,
        eta: f64,
        range: (f64, f64),
        ceiling: f64,
    ) -> Result<ClassSReport> {
        if !(eta < 0.5) {
            return Err(Error::Domain(format!("eta = {eta} must be < 1/2")));
        }
        if !(range.0 > 0.0 && range.1 >= range.0) {
            return Err(Error::Domain(format!(
                "range {range:?} must lie in (0, ∞)"
            )));
        }
        let mut max_ratio: f64 = 0.0;
        let mut argmax = range.0;
        for x in log_spaced(range.0, range.1, VALIDATION_POINTS) {
            let l1 = self.ln_derivative(profile, 1, x);
            if l1 == f64::NEG_INFINITY || l1.is_nan() {
                return Err(Error::Domain(format!("g′ vanishes at x = {x}")));
            }
            let l2 = self.ln_derivative(profile, 2, x);
            let ratio = (l2 + 0.5 * x.ln() - (1.0 + eta) * l1).exp();
            if ratio > max_ratio {
                max_ratio = ratio;
                argmax = x;
            }
        }
        Ok(ClassSReport {
            profile,
            eta,
            max_ratio,
            argmax,
            ceiling,
            pass: max_ratio <= ceiling,
        })
    }
}

/// Sampled sups of `Ψ′/(1+Ψ)^{1/(1−η)}` and `Φ′/((1+x)(1+Ψ)³)`, the two
/// growth bounds that make Bloch symbols square-integrable against the kernel.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub eta: f64,
    pub max_psi_ratio: f64,
    pub max_phi_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSReport {
    pub profile: Profile,
    pub eta: f64,
    pub max_ratio: f64,
    pub argmax: f64,
    pub ceiling: f64,
    pub pass: bool,
}
