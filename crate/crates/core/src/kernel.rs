//! Radial moments, the reproducing kernel `K(z,w) = F(⟨z,w⟩)`, Bergman
//! geometry and polyballs.
//!
//! Everything is carried in log space. `M_k = ∫₀^∞ s^{k+d−1} e^{−Ψ(s)} ds`
//! is computed by adaptive Gauss–Legendre quadrature around the peak of the
//! integrand, `f_k = (d−1+k)!/(π^d k! M_k)` and `F(t) = Σ f_k t^k`.
//!
//! Radial quantities (`F(r)`, `F′/F`, `(F′/F)′`) come from the index
//! distribution `p_k ∝ f_k r^k`: `rF′/F = E[k]` and the Bergman eigenvalues are
//! `μ = E[k]/r`, `λ = Var[k]/r`. When the moment table does not reach the bulk
//! of `p_k` and the distribution is wide (σ ≥ 3), the sum over `k` is replaced
//! by an integral over a continuous index, anchored at `k₀ = Φ(r) − d + 1`
//! where the moment integrand peaks exactly at `s = r`. The Euler–Maclaurin
//! error of that replacement is below `e^{−2π²σ²}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::multi_index::{MultiIndex, C64};
use crate::quadrature::{adaptive, Chebyshev, GaussLegendre};
use crate::weights::{Profile, WeightModel};

/// Integrands are cut where they fall below `e^{−CUT}` of their maximum (10⁻³⁰).
const CUT: f64 = 69.077_552_789_821_37;
const QUAD_REL_TOL: f64 = 1e-13;
/// Relative truncation tolerance for radial sums.
pub const TAIL_TOL: f64 = 1e-12;
const WINDOW_CHEB_POINTS: usize = 64;
/// Largest moment table [`KernelCoeffs::covering`] will build.
pub const MAX_KMAX: usize = 400_000;

/// Peak of `s ↦ a ln s − Ψ(s)`, i.e. the root of `Φ(s) = a`.
pub(crate) fn moment_peak(weight: &WeightModel, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let ln_a = a.ln();
    let ln_phi = |s: f64| s.ln() + weight.ln_derivative(Profile::Psi, 1, s);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while ln_phi(hi) < ln_a {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_phi(mid) < ln_a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ln ∫ exp(a ln(1 + t/p) − (Ψ(p + t) − Ψ(p))) dt` over `t ≥ −p`, together
/// with the estimated relative quadrature error.
fn ln_peak_integral(weight: &WeightModel, a: f64, p: f64) -> std::result::Result<(f64, f64), String> {
    // Expanded around the stationary point so that no term is first order in t.
    let slope = if p > 0.0 { a / p - weight.dpsi(p, 1) } else { 0.0 };
    let g = |t: f64| {
        if a > 0.0 {
            a * ln1p_minus_x(t / p) + slope * t - weight.psi_remainder(p, t)
        } else {
            -weight.psi_increment(p, t)
        }
    };
    let bisect = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if g(mid) > -CUT {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        outside
    };
    let t_lo = if p > 0.0 && g(-p) > -CUT {
        -p
    } else if p > 0.0 {
        bisect(0.0, -p)
    } else {
        0.0
    };
    let mut t_out = p.max(1e-3);
    let mut guard = 0;
    while g(t_out) > -CUT {
        t_out *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err("upper integration limit not found".into());
        }
    }
    let t_hi = bisect(0.0, t_out);
    let r = adaptive(|t| g(t).exp(), t_lo, t_hi, QUAD_REL_TOL, 0.0);
    if !r.converged || !(r.value > 0.0) || !r.value.is_finite() {
        return Err(format!("adaptive quadrature failed (value {})", r.value));
    }
    Ok((r.value.ln(), r.abs_error / r.value))
}

/// `ln(1 + u) − u`.
fn ln1p_minus_x(u: f64) -> f64 {
    if u.abs() > 0.25 {
        return u.ln_1p() - u;
    }
    let mut pow = u;
    let mut sum = 0.0;
    for k in 2..200 {
        pow *= -u;
        let term = pow / k as f64;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `ln M(a)` for real exponent `a = k + d − 1 ≥ 0`.
fn ln_moment_exponent(weight: &WeightModel, a: f64) -> std::result::Result<(f64, f64), String> {
    let p = moment_peak(weight, a);
    let (ln_i, err) = ln_peak_integral(weight, a, p)?;
    let head = if a > 0.0 { a * p.ln() } else { 0.0 };
    Ok((head - weight.psi(p) + ln_i, err))
}

/// `ln J(a, r)` with `J = ∫₀^∞ (s/r)^a e^{−(Ψ(s)−Ψ(r))} ds`, evaluated without
/// forming `Ψ(r)` or `a ln r` separately.
fn ln_tilted_integral(weight: &WeightModel, a: f64, r: f64) -> std::result::Result<f64, String> {
    let p = moment_peak(weight, a);
    let offset = if a > 0.0 {
        a * ((p - r) / r).ln_1p() - weight.psi_increment(r, p - r)
    } else {
        -weight.psi_increment(r, p - r)
    };
    let (ln_i, _) = ln_peak_integral(weight, a, p)?;
    Ok(offset + ln_i)
}

/// Radial moments `M_k`, `0 ≤ k ≤ kmax`, stored as logarithms.
#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub d: usize,
    pub kmax: usize,
    pub ln_m: Vec<f64>,
    pub rel_err: Vec<f64>,
    /// Quadrature panels are 20-point Gauss–Legendre.
    pub nodes_per_panel: usize,
    /// Integrands are truncated below this fraction of their maximum.
    pub tail_cutoff: f64,
}

impl MomentTable {
    pub fn compute(weight: &WeightModel, d: usize, kmax: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Precondition("dimension d must be ≥ 1".into()));
        }
        let rows: Vec<std::result::Result<(f64, f64), Error>> = (0..=kmax)
            .into_par_iter()
            .map(|k| {
                let a = (k + d - 1) as f64;
                ln_moment_exponent(weight, a).map_err(|detail| Error::Quadrature {
                    k: k as f64,
                    detail,
                })
            })
            .collect();
        let mut ln_m = Vec::with_capacity(kmax + 1);
        let mut rel_err = Vec::with_capacity(kmax + 1);
        for row in rows {
            let (l, e) = row?;
            if e > 1e-10 {
                return Err(Error::Quadrature {
                    k: ln_m.len() as f64,
                    detail: format!("estimated relative error {e:e} above 1e-10"),
                });
            }
            ln_m.push(l);
            rel_err.push(e);
        }
        Ok(MomentTable {
            d,
            kmax,
            ln_m,
            rel_err,
            nodes_per_panel: 20,
            tail_cutoff: 1e-30,
        })
    }

    pub fn ln_moment(&self, k: usize) -> f64 {
        self.ln_m[k]
    }

    pub fn moment(&self, k: usize) -> f64 {
        self.ln_m[k].exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SumRoute {
    Discrete,
    Continuous,
}

/// Statistics of the index distribution `p_k ∝ f_k r^k` at `r = |z|²`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadialStats {
    pub r: f64,
    /// `ln F(r) − Ψ(r)`, computed without forming `Ψ(r)` on the continuous route.
    pub ln_f_minus_psi: f64,
    pub mean: f64,
    pub var: f64,
    /// Estimated relative truncation error of the sum.
    pub tail: f64,
    pub route: SumRoute,
}

impl RadialStats {
    /// `(F′/F)(r)`.
    pub fn mu(&self, coeffs: &KernelCoeffs) -> f64 {
        if self.r == 0.0 {
            coeffs.ratio_f1_f0()
        } else {
            self.mean / self.r
        }
    }

    /// `(F′/F)(r) + r(F′/F)′(r)`.
    pub fn lambda(&self, coeffs: &KernelCoeffs) -> f64 {
        if self.r == 0.0 {
            coeffs.ratio_f1_f0()
        } else {
            self.var / self.r
        }
    }

    pub fn ln_f(&self, weight: &WeightModel) -> f64 {
        self.ln_f_minus_psi + weight.psi(self.r)
    }
}

/// Kernel expansion coefficients `f_k` and monomial norms `w_ν`.
#[derive(Debug)]
pub struct KernelCoeffs {
    weight: WeightModel,
    moments: MomentTable,
    ln_f: Vec<f64>,
    continuous_cache: Mutex<HashMap<u64, RadialStats>>,
}

impl Clone for KernelCoeffs {
    fn clone(&self) -> Self {
        KernelCoeffs {
            weight: self.weight.clone(),
            moments: self.moments.clone(),
            ln_f: self.ln_f.clone(),
            continuous_cache: Mutex::new(self.continuous_cache.lock().unwrap().clone()),
        }
    }
}

impl KernelCoeffs {
    pub fn new(weight: &WeightModel, d: usize, kmax: usize) -> Result<Self> {
        let moments = MomentTable::compute(weight, d, kmax)?;
        Ok(Self::from_moments(weight, moments))
    }

    pub fn from_moments(weight: &WeightModel, moments: MomentTable) -> Self {
        let d = moments.d;
        let ln_pi_d = d as f64 * PI.ln();
        let ln_f = (0..=moments.kmax)
            .map(|k| ln_rising(k as f64, d) - ln_pi_d - moments.ln_m[k])
            .collect();
        KernelCoeffs {
            weight: weight.clone(),
            moments,
            ln_f,
            continuous_cache: Mutex::new(HashMap::new()),
        }
    }

    /// Default truncation: 120 for `d = 1`, 60 otherwise.
    pub fn with_default_kmax(weight: &WeightModel, d: usize) -> Result<Self> {
        Self::new(weight, d, if d == 1 { 120 } else { 60 })
    }

    /// Table for radial geometry (`F`, `λ`, `μ`) on `|z| ≤ radius`. Beyond the
    /// radius where the continuous-index route is valid the table stops
    /// growing. `extra` adds degrees of headroom.
    pub fn covering(weight: &WeightModel, d: usize, radius: f64, extra: usize) -> Result<Self> {
        let r = (radius * radius).min(continuous_threshold(weight, d));
        Self::covering_series(weight, d, r.sqrt(), extra)
    }

    /// Table whose discrete sums `Σ f_k r^k` converge for all `|z| ≤ radius`
    /// (needed for kernel values and series in the monomial basis).
    pub fn covering_series(weight: &WeightModel, d: usize, radius: f64, extra: usize) -> Result<Self> {
        let kmax = required_kmax(weight, d, radius * radius).saturating_add(extra);
        if kmax > MAX_KMAX {
            return Err(Error::Range(format!(
                "|z| ≤ {radius} needs kmax ≈ {kmax} > {MAX_KMAX} for {}",
                weight.name()
            )));
        }
        Self::new(weight, d, kmax.max(8))
    }

    pub fn weight(&self) -> &WeightModel {
        &self.weight
    }

    pub fn d(&self) -> usize {
        self.moments.d
    }

    pub fn kmax(&self) -> usize {
        self.moments.kmax
    }

    pub fn moments(&self) -> &MomentTable {
        &self.moments
    }

    pub fn ln_f(&self, k: usize) -> f64 {
        self.ln_f[k]
    }

    pub fn f(&self, k: usize) -> f64 {
        self.ln_f[k].exp()
    }

    fn ratio_f1_f0(&self) -> f64 {
        (self.ln_f[1] - self.ln_f[0]).exp()
    }

    /// `ln w_ν`, `w_ν = π^d ν! M_{|ν|}/(d−1+|ν|)!`.
    pub fn ln_w(&self, nu: &MultiIndex) -> f64 {
        let k = nu.degree() as usize;
        assert!(k <= self.kmax(), "degree {k} exceeds kmax {}", self.kmax());
        nu.ln_factorial() - self.ln_f[k] - ln_factorial_u(k)
    }

    pub fn w(&self, nu: &MultiIndex) -> f64 {
        self.ln_w(nu).exp()
    }

    /// Index-distribution statistics at `r = |z|²`.
    pub fn radial_stats(&self, r: f64) -> Result<RadialStats> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("radius² {r} must be finite and ≥ 0")));
        }
        if r == 0.0 {
            return Ok(RadialStats {
                r,
                ln_f_minus_psi: self.ln_f[0] - self.weight.psi(0.0),
                mean: 0.0,
                var: 0.0,
                tail: 0.0,
                route: SumRoute::Discrete,
            });
        }
        match self.discrete_stats(r) {
            Ok(s) => Ok(s),
            Err(discrete_err) => {
                if continuous_ok(&self.weight, self.d(), r) {
                    self.cached_continuous_stats(r)
                } else {
                    Err(discrete_err)
                }
            }
        }
    }

    fn discrete_stats(&self, r: f64) -> Result<RadialStats> {
        let ln_r = r.ln();
        let term = |k: usize| self.ln_f[k] + k as f64 * ln_r;
        // Log-concave terms: scan until well past the peak.
        let mut max = f64::NEG_INFINITY;
        let mut last = 0;
        for k in 0..=self.kmax() {
            let t = term(k);
            if t > max {
                max = t;
            }
            last = k;
            if k > 0 && t < term(k - 1) && t < max - 80.0 {
                break;
            }
        }
        let (mut s0, mut s1) = (0.0, 0.0);
        for k in 0..=last {
            let p = (term(k) - max).exp();
            s0 += p;
            s1 += p * k as f64;
        }
        let mean = s1 / s0;
        let mut s2 = 0.0;
        for k in 0..=last {
            let p = (term(k) - max).exp();
            s2 += p * (k as f64 - mean).powi(2);
        }
        let var = s2 / s0;
        let tail = if last < self.kmax() || last == 0 {
            if last == 0 {
                0.0
            } else {
                let q = (term(last) - term(last - 1)).exp();
                (term(last) - max).exp() * q / (1.0 - q) / s0
            }
        } else {
            let q = (term(last) - term(last - 1)).exp();
            if q >= 1.0 {
                f64::INFINITY
            } else {
                (term(last) - max).exp() * q / (1.0 - q) / s0
            }
        };
        if !(tail <= TAIL_TOL) {
            return Err(Error::Range(format!(
                "radial sum at r = {r} not converged within kmax = {} (tail {tail:e})",
                self.kmax()
            )));
        }
        Ok(RadialStats {
            r,
            ln_f_minus_psi: max + s0.ln() - self.weight.psi(r),
            mean,
            var,
            tail,
            route: SumRoute::Discrete,
        })
    }

    fn cached_continuous_stats(&self, r: f64) -> Result<RadialStats> {
        // Radii a few ulps apart (e.g. |ρu|² for different unit vectors u) share an entry.
        let key = r.to_bits() >> 6;
        if let Some(s) = self.continuous_cache.lock().unwrap().get(&key) {
            return Ok(RadialStats { r, ..*s });
        }
        // Computed at the bucket's representative so results do not depend on evaluation order.
        let s = self.continuous_stats(f64::from_bits(key << 6))?;
        self.continuous_cache.lock().unwrap().insert(key, s);
        Ok(RadialStats { r, ..s })
    }

    fn continuous_stats(&self, r: f64) -> Result<RadialStats> {
        let d = self.d();
        let w = &self.weight;
        let k0 = w.phi(r) - (d as f64 - 1.0);
        let sigma = (r * w.dphi(r, 1)).sqrt();
        let ln_pi_d = d as f64 * PI.ln();
        let ln_r = r.ln();
        let log_term = |delta: f64| -> Result<f64> {
            let k = k0 + delta;
            let a = k + d as f64 - 1.0;
            let ln_j = ln_tilted_integral(w, a, r).map_err(|detail| Error::Quadrature { k, detail })?;
            Ok(ln_rising(k, d) - ln_pi_d - (d as f64 - 1.0) * ln_r - ln_j)
        };
        let rule = GaussLegendre::g20();
        let mut half_width = 12.0 * sigma;
        for _ in 0..4 {
            if k0 - half_width <= 0.0 {
                break;
            }
            let panels = 24;
            let h = 2.0 * half_width / panels as f64;
            let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(panels * 20);
            for i in 0..panels {
                let lo = -half_width + h * i as f64;
                nodes.extend(rule.on(lo, lo + h));
            }
            let logs = self.window_logs(&log_term, half_width, &nodes)?;
            let edge = log_term(-half_width)?.max(log_term(half_width)?);
            let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if edge - max > -40.0 {
                half_width *= 2.0;
                continue;
            }
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for ((x, wt), l) in nodes.iter().zip(&logs) {
                let p = wt * (l - max).exp();
                s0 += p;
                s1 += p * x;
                s2 += p * x * x;
            }
            let m1 = s1 / s0;
            return Ok(RadialStats {
                r,
                ln_f_minus_psi: max + s0.ln(),
                mean: k0 + m1,
                var: s2 / s0 - m1 * m1,
                tail: (edge - max).exp(),
                route: SumRoute::Continuous,
            });
        }
        Err(Error::Range(format!(
            "continuous index summation at r = {r} could not bracket the distribution"
        )))
    }

    /// Log-terms at the window nodes: a Chebyshev interpolant of the
    /// (analytic, nearly quadratic) log-term, spot-checked against direct
    /// evaluation, with a direct fallback.
    fn window_logs<F: Fn(f64) -> Result<f64> + Sync>(
        &self,
        log_term: &F,
        half_width: f64,
        nodes: &[(f64, f64)],
    ) -> Result<Vec<f64>> {
        let cheb = Chebyshev::try_fit(log_term, -half_width, half_width, WINDOW_CHEB_POINTS)?;
        let mut agree = true;
        for &(x, _) in nodes.iter().step_by(nodes.len() / 5 + 1) {
            let direct = log_term(x)?;
            if (cheb.eval(x) - direct).abs() > 1e-11 * direct.abs().max(1.0) {
                agree = false;
                break;
            }
        }
        if agree {
            return Ok(nodes.iter().map(|&(x, _)| cheb.eval(x)).collect());
        }
        nodes.par_iter().map(|&(x, _)| log_term(x)).collect()
    }

    /// `(F′/F)(r)` and `(F′/F)′(r)`.
    pub fn eval_log_f_derivatives(&self, r: f64) -> Result<(f64, f64)> {
        let s = self.radial_stats(r)?;
        let mu = s.mu(self);
        let lambda = s.lambda(self);
        let deriv = if r == 0.0 {
            // (F′/F)′(0) = 2f₂/f₀ − (f₁/f₀)²
            2.0 * (self.ln_f[2] - self.ln_f[0]).exp() - mu * mu
        } else {
            (lambda - mu) / r
        };
        Ok((mu, deriv))
    }

    /// `F(t)` for real `t ≥ 0` (may overflow for large `t`; see [`RadialStats`]).
    pub fn eval_f(&self, t: f64) -> Result<f64> {
        let s = self.radial_stats(t)?;
        Ok(s.ln_f(&self.weight).exp())
    }

    /// `K(z,w) = Σ f_k ⟨z,w⟩^k` in scaled form, with its relative tail estimate.
    pub fn eval_kernel_scaled(&self, z: &[C64], w: &[C64]) -> Result<ScaledKernel> {
        check_dim(self.d(), z)?;
        check_dim(self.d(), w)?;
        let t: C64 = z.iter().zip(w).map(|(a, b)| a * b.conj()).sum();
        let rho = t.norm();
        if rho == 0.0 {
            return Ok(ScaledKernel {
                ln_scale: self.ln_f[0],
                value: c(1.0, 0.0),
                tail: 0.0,
            });
        }
        let stats = self.discrete_stats(rho)?;
        let theta = t.arg();
        let ln_rho = rho.ln();
        let max = stats.ln_f_minus_psi + self.weight.psi(rho);
        let mut acc = c(0.0, 0.0);
        for k in 0..=self.kmax() {
            let l = self.ln_f[k] + k as f64 * ln_rho - max;
            if l < -90.0 && k as f64 > stats.mean {
                break;
            }
            acc += C64::from_polar(l.exp(), k as f64 * theta);
        }
        Ok(ScaledKernel {
            ln_scale: max,
            value: acc,
            tail: stats.tail,
        })
    }

    pub fn eval_kernel(&self, z: &[C64], w: &[C64]) -> Result<C64> {
        let k = self.eval_kernel_scaled(z, w)?;
        Ok(k.value * k.ln_scale.exp())
    }

    /// `|K(z,w)|² / (K(z,z) K(w,w))`.
    pub fn kernel_coherence(&self, z: &[C64], w: &[C64]) -> Result<f64> {
        let kzw = self.eval_kernel_scaled(z, w)?;
        let kzz = self.radial_stats(norm_sq(z))?;
        let kww = self.radial_stats(norm_sq(w))?;
        let ln = 2.0 * (kzw.ln_scale + kzw.value.norm().ln())
            - kzz.ln_f(&self.weight)
            - kww.ln_f(&self.weight);
        Ok(ln.exp())
    }

    pub fn bergman_data(&self, z: &[C64]) -> Result<BergmanData> {
        check_dim(self.d(), z)?;
        let r = norm_sq(z);
        let stats = self.radial_stats(r)?;
        let lambda = stats.lambda(self);
        let mu = stats.mu(self);
        if !(lambda > 0.0 && mu > 0.0) {
            return Err(Error::Consistency(format!(
                "Bergman eigenvalues not positive at r = {r}: λ = {lambda}, μ = {mu}"
            )));
        }
        let d = self.d();
        let p = projection(z);
        let id = CMat::identity(d, d);
        let q = &id - &p;
        let mix = |a: f64, b: f64| &p * c(a, 0.0) + &q * c(b, 0.0);
        Ok(BergmanData {
            z: z.to_vec(),
            lambda,
            mu,
            b: mix(lambda, mu),
            b_inv: mix(1.0 / lambda, 1.0 / mu),
            b_inv_sqrt: mix(lambda.powf(-0.5), mu.powf(-0.5)),
            p_z: p,
            stats,
        })
    }

    /// `K(z,z) / (e^{Ψ} Φ′ Ψ′^{d−1})` at `|z|²`, evaluated in log space.
    pub fn kernel_diag_check(&self, z: &[C64]) -> Result<f64> {
        let r = norm_sq(z);
        let s = self.radial_stats(r)?;
        let w = &self.weight;
        let ln = s.ln_f_minus_psi
            - w.ln_derivative(Profile::Phi, 1, r)
            - (self.d() as f64 - 1.0) * w.ln_derivative(Profile::Psi, 1, r);
        Ok(ln.exp())
    }

    /// Degree `L` beyond which `p_k` at `r` carries less than `e^{−90}` mass,
    /// i.e. the expansion length needed by kernel-weighted series at `|z|² = r`.
    pub fn series_degree(&self, r: f64) -> Result<usize> {
        if r == 0.0 {
            return Ok(0);
        }
        let s = self.discrete_stats(r)?;
        let ln_r = r.ln();
        let max = s.ln_f_minus_psi + self.weight.psi(r);
        let mut k = s.mean.floor() as usize;
        while k < self.kmax() && self.ln_f[k] + k as f64 * ln_r - max > -90.0 {
            k += 1;
        }
        Ok(k)
    }
}

/// `K(z,w) = e^{ln_scale} · value`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledKernel {
    pub ln_scale: f64,
    pub value: C64,
    pub tail: f64,
}

fn check_dim(d: usize, z: &[C64]) -> Result<()> {
    if z.len() != d {
        return Err(Error::Precondition(format!(
            "point has dimension {} but the kernel has d = {d}",
            z.len()
        )));
    }
    Ok(())
}

pub fn norm_sq(z: &[C64]) -> f64 {
    z.iter().map(|x| x.norm_sqr()).sum()
}

/// `ln((k+1)(k+2)…(k+d−1)) = ln Γ(k+d) − ln Γ(k+1)` for real `k ≥ 0`.
fn ln_rising(k: f64, d: usize) -> f64 {
    (1..d).map(|i| (k + i as f64).ln()).sum()
}

fn ln_factorial_u(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// Orthogonal projection onto `span{z}`; zero at `z = 0`.
pub fn projection(z: &[C64]) -> CMat {
    let d = z.len();
    let r = norm_sq(z);
    if r == 0.0 {
        return CMat::zeros(d, d);
    }
    CMat::from_fn(d, d, |i, j| z[i] * z[j].conj() / c(r, 0.0))
}

/// Whether the continuous-index route applies at `r`: the index
/// distribution is wide (σ ≥ 3) and sits far from `k = 0`.
fn continuous_ok(weight: &WeightModel, d: usize, r: f64) -> bool {
    let ln_r = r.ln();
    let ln_sigma = 0.5 * (ln_r + weight.ln_derivative(Profile::Phi, 1, r));
    let ln_phi = ln_r + weight.ln_derivative(Profile::Psi, 1, r);
    let shift = d as f64 - 1.0;
    if ln_phi.exp() <= shift {
        return false;
    }
    let ln_k0 = ln_phi + (-shift * (-ln_phi).exp()).ln_1p();
    ln_sigma >= 3f64.ln() && ln_k0 > 24f64.ln() + ln_sigma
}

/// Smallest `r` from which on [`continuous_ok`] holds (monotone for the
/// built-in families).
pub fn continuous_threshold(weight: &WeightModel, d: usize) -> f64 {
    let (mut lo, mut hi) = (1e-3f64.ln(), 1e4f64.ln());
    if !continuous_ok(weight, d, hi.exp()) {
        return f64::INFINITY;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if continuous_ok(weight, d, mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // small margin so that the discrete table reaches into the valid region
    hi.exp() * 1.05
}

/// Kernel truncation needed for `|z|² ≤ r`: `Φ(r) + 15σ + 40` with `σ² ≈ rΦ′(r)`.
pub fn required_kmax(weight: &WeightModel, d: usize, r: f64) -> usize {
    let k0 = weight.phi(r).max(0.0);
    let sigma = (r * weight.dphi(r, 1)).max(0.0).sqrt();
    let est = k0 + 15.0 * sigma + 40.0 + d as f64;
    if est.is_finite() && est < 1e12 {
        est.ceil() as usize
    } else {
        usize::MAX / 2
    }
}

/// Bergman matrix `B(z) = λP_z + μ(I − P_z)` and its inverse square roots.
#[derive(Debug, Clone)]
pub struct BergmanData {
    pub z: Vec<C64>,
    pub lambda: f64,
    pub mu: f64,
    pub b: CMat,
    pub b_inv: CMat,
    pub b_inv_sqrt: CMat,
    pub p_z: CMat,
    pub stats: RadialStats,
}

impl BergmanData {
    /// `β(z,ξ) = √⟨B(z)ξ,ξ⟩`.
    pub fn metric(&self, xi: &[C64]) -> f64 {
        metric_from_eigen(&self.z, self.lambda, self.mu, xi)
    }

    /// Radial and tangential polyball scales `(Φ′(r)^{−1/2}, Ψ′(r)^{−1/2})`.
    pub fn polyball_radii(&self, weight: &WeightModel) -> (f64, f64) {
        let r = norm_sq(&self.z);
        (
            (-0.5 * weight.ln_derivative(Profile::Phi, 1, r)).exp(),
            (-0.5 * weight.ln_derivative(Profile::Psi, 1, r)).exp(),
        )
    }
}

fn metric_from_eigen(z: &[C64], lambda: f64, mu: f64, xi: &[C64]) -> f64 {
    let r = norm_sq(z);
    let xi2 = norm_sq(xi);
    let radial = if r == 0.0 {
        0.0
    } else {
        let ip: C64 = xi.iter().zip(z).map(|(a, b)| a * b.conj()).sum();
        ip.norm_sqr() / r
    };
    (lambda * radial + mu * (xi2 - radial).max(0.0)).sqrt()
}

/// Upper bound on the Bergman distance together with the path that attains it.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceEstimate {
    pub distance: f64,
    pub straight: f64,
    pub legs: usize,
    /// Always true: the value is the length of an explicit path.
    pub upper_bound: bool,
}

impl KernelCoeffs {
    /// `(λ, μ)` at `|z|² = r`.
    pub fn bergman_eigenvalues(&self, r: f64) -> Result<(f64, f64)> {
        let s = self.radial_stats(r)?;
        Ok((s.lambda(self), s.mu(self)))
    }

    fn leg_length(&self, a: &[C64], b: &[C64], rule: &GaussLegendre) -> Result<f64> {
        let dir: Vec<C64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        if norm_sq(&dir) == 0.0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (t, wt) in rule.on(0.0, 1.0) {
            let p: Vec<C64> = a.iter().zip(&dir).map(|(x, v)| x + v * t).collect();
            let (l, m) = self.bergman_eigenvalues(norm_sq(&p))?;
            total += wt * metric_from_eigen(&p, l, m, &dir);
        }
        Ok(total)
    }

    fn path_length(&self, pts: &[Vec<C64>], rule: &GaussLegendre) -> Result<f64> {
        let mut total = 0.0;
        for pair in pts.windows(2) {
            total += self.leg_length(&pair[0], &pair[1], rule)?;
        }
        Ok(total)
    }

    /// Bergman distance bound: the shorter of the straight segment and a
    /// four-leg polyline refined by coordinate descent.
    pub fn bergman_distance(&self, z: &[C64], w: &[C64]) -> Result<DistanceEstimate> {
        check_dim(self.d(), z)?;
        check_dim(self.d(), w)?;
        let g64 = GaussLegendre::g64();
        let sep = norm_sq(&z.iter().zip(w).map(|(a, b)| a - b).collect::<Vec<_>>()).sqrt();
        if sep == 0.0 {
            return Ok(DistanceEstimate {
                distance: 0.0,
                straight: 0.0,
                legs: 1,
                upper_bound: true,
            });
        }
        let straight = self.leg_length(z, w, g64)?;
        let legs = 4;
        let search = GaussLegendre::new(8);
        let mut pts: Vec<Vec<C64>> = (0..=legs)
            .map(|i| {
                let t = i as f64 / legs as f64;
                z.iter().zip(w).map(|(a, b)| a + (b - a) * t).collect()
            })
            .collect();
        let mut leg: Vec<f64> = pts
            .windows(2)
            .map(|p| self.leg_length(&p[0], &p[1], &search))
            .collect::<Result<_>>()?;
        let mut step = 0.25 * sep;
        while step > 1e-3 * sep {
            let mut improved = false;
            for i in 1..legs {
                for j in 0..self.d() {
                    for delta in [c(step, 0.0), c(-step, 0.0), c(0.0, step), c(0.0, -step)] {
                        let old = pts[i][j];
                        pts[i][j] = old + delta;
                        // only the two legs meeting at vertex i change
                        let before = self.leg_length(&pts[i - 1], &pts[i], &search)?;
                        let after = self.leg_length(&pts[i], &pts[i + 1], &search)?;
                        let current = leg[i - 1] + leg[i];
                        if before + after < current - 1e-12 * current {
                            leg[i - 1] = before;
                            leg[i] = after;
                            improved = true;
                        } else {
                            pts[i][j] = old;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        let refined = self.path_length(&pts, g64)?;
        Ok(DistanceEstimate {
            distance: refined.min(straight),
            straight,
            legs: if refined < straight { legs } else { 1 },
            upper_bound: true,
        })
    }
}

/// Membership in `D(z,a)`: `|z − P_z w| ≤ aΦ′(|z|²)^{−1/2}` and
/// `|w − P_z w| ≤ aΨ′(|z|²)^{−1/2}`.
pub fn polyball_contains(bd: &BergmanData, weight: &WeightModel, a: f64, w: &[C64]) -> bool {
    let (rad, tan) = polyball_deviations(&bd.z, w);
    let (r1, r2) = bd.polyball_radii(weight);
    rad <= a * r1 && tan <= a * r2
}

/// `(|z − P_z w|, |w − P_z w|)`.
pub fn polyball_deviations(z: &[C64], w: &[C64]) -> (f64, f64) {
    let r = norm_sq(z);
    if r == 0.0 {
        return (0.0, norm_sq(w).sqrt());
    }
    let ip: C64 = w.iter().zip(z).map(|(a, b)| a * b.conj()).sum::<C64>() / c(r, 0.0);
    let proj: Vec<C64> = z.iter().map(|x| x * ip).collect();
    let rad = z.iter().zip(&proj).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let tan = w.iter().zip(&proj).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    (rad, tan)
}

/// Lebesgue volume of `D(z,a)`.
pub fn polyball_volume(bd: &BergmanData, weight: &WeightModel, a: f64) -> f64 {
    let d = bd.z.len();
    let (r1, r2) = bd.polyball_radii(weight);
    let tangential = (PI * (a * r2).powi(2)).powi(d as i32 - 1) / ln_factorial_u(d - 1).exp();
    PI * (a * r1).powi(2) * tangential
}

/// Uniform sample from `D(z,a)` for `z ≠ 0`.
pub fn polyball_sample<R: Rng + ?Sized>(
    bd: &BergmanData,
    weight: &WeightModel,
    a: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    let d = bd.z.len();
    let r = norm_sq(&bd.z);
    if r == 0.0 {
        return Err(Error::Precondition("polyball sampling needs z ≠ 0".into()));
    }
    let (r1, r2) = bd.polyball_radii(weight);
    let u = crate::linalg::unitary_to_direction(&bd.z);
    let mut local = CVec::zeros(d);
    local[0] = c(r.sqrt(), 0.0) + uniform_ball(rng, 1)[0] * (a * r1);
    if d > 1 {
        for (i, x) in uniform_ball(rng, d - 1).into_iter().enumerate() {
            local[i + 1] = x * (a * r2);
        }
    }
    Ok((u * local).iter().copied().collect())
}

/// Uniform point of the unit ball of `ℂ^n`.
fn uniform_ball<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let dir = crate::linalg::random_unit_vector(rng, n);
    let radius = rng.gen::<f64>().powf(1.0 / (2 * n) as f64);
    dir.iter().map(|x| x * radius).collect()
}

/// Checks `U(D(z,a)) = D(Uz,a)` on `samples` points: each is drawn from a box
/// around `z` covering the polyball, and membership of `w` in `D(z,a)` must
/// match membership of `Uw` in `D(Uz,a)`.
pub fn polyball_unitary_check<R: Rng + ?Sized>(
    coeffs: &KernelCoeffs,
    u: &CMat,
    z: &[C64],
    a: f64,
    samples: usize,
    rng: &mut R,
) -> Result<bool> {
    let weight = coeffs.weight();
    let bd = coeffs.bergman_data(z)?;
    let uz: Vec<C64> = (u * CVec::from_column_slice(z)).iter().copied().collect();
    let bd_u = coeffs.bergman_data(&uz)?;
    let (r1, r2) = bd.polyball_radii(weight);
    let reach = 2.0 * a * r1.max(r2).min(1e6);
    for _ in 0..samples {
        let w: Vec<C64> = z
            .iter()
            .map(|x| x + c(rng.gen_range(-reach..reach), rng.gen_range(-reach..reach)))
            .collect();
        let uw: Vec<C64> = (u * CVec::from_column_slice(&w)).iter().copied().collect();
        if polyball_contains(&bd, weight, a, &w) != polyball_contains(&bd_u, weight, a, &uw) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;
    use crate::weights::{make_weight, WeightFamily};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn power2() -> WeightModel {
        make_weight(WeightFamily::Power { s: 2.0 }).unwrap()
    }

    fn exp_weight() -> WeightModel {
        make_weight(WeightFamily::Exp).unwrap()
    }

    fn pt(v: &[(f64, f64)]) -> Vec<C64> {
        v.iter().map(|&(a, b)| c(a, b)).collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gaussian_moments_are_gamma_values() {
        let g = WeightModel::gaussian();
        let t1 = MomentTable::compute(&g, 1, 30).unwrap();
        assert!(rel(t1.moment(3), 6.0) < 1e-12);
        let t2 = MomentTable::compute(&g, 2, 30).unwrap();
        assert!(rel(t2.moment(2), 6.0) < 1e-12);
        for k in 0..=30 {
            let gamma = ln_gamma(k as f64 + 1.0);
            assert!((t1.ln_moment(k) - gamma).abs() < 1e-11, "k = {k}");
        }
    }

    #[test]
    fn power2_first_moment() {
        let t = MomentTable::compute(&power2(), 1, 4).unwrap();
        assert!(rel(t.moment(1), 0.5) < 1e-12);
        // ∫ s^k e^{−s²} ds = Γ((k+1)/2)/2
        for k in 0..=4 {
            let exact = ln_gamma((k as f64 + 1.0) / 2.0) - 2f64.ln();
            assert!((t.ln_moment(k) - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn exp_weight_high_moments_match_laplace_scale() {
        // Large k: the moment integral sits far out where Ψ = e^s is steep.
        let t = MomentTable::compute(&exp_weight(), 1, 5000).unwrap();
        assert!(t.rel_err.iter().all(|&e| e <= 1e-10));
        for k in [0usize, 10, 100, 5000] {
            let direct = adaptive(
                |s: f64| (k as f64 * s.max(1e-300).ln() - s.exp() - t.ln_moment(k)).exp(),
                0.0,
                12.0,
                1e-12,
                0.0,
            );
            assert!(rel(direct.value, 1.0) < 1e-9, "k = {k}: {}", direct.value);
        }
    }

    #[test]
    fn moments_are_log_convex() {
        for w in [WeightModel::gaussian(), power2(), exp_weight()] {
            for d in [1, 2] {
                let t = MomentTable::compute(&w, d, 200).unwrap();
                for k in 1..200 {
                    let second = t.ln_m[k + 1] - 2.0 * t.ln_m[k] + t.ln_m[k - 1];
                    assert!(second > -1e-10, "{} d={d} k={k}: {second}", w.name());
                }
            }
        }
    }

    #[test]
    fn gaussian_coefficients_and_norms() {
        let g = WeightModel::gaussian();
        let k1 = KernelCoeffs::new(&g, 1, 40).unwrap();
        let k2 = KernelCoeffs::new(&g, 2, 40).unwrap();
        for k in 0..=20usize {
            let exact = -PI.ln() - ln_gamma(k as f64 + 1.0);
            assert!((k1.ln_f(k) - exact).abs() < 1e-11);
            assert!((k2.ln_f(k) - (exact - PI.ln())).abs() < 1e-11);
            let nu = MultiIndex(vec![k as u32]);
            assert!((k1.ln_w(&nu) - (PI.ln() + ln_gamma(k as f64 + 1.0))).abs() < 1e-11);
        }
        let nu = MultiIndex(vec![2, 3]);
        assert!(rel(k2.w(&nu), PI * PI * 2.0 * 6.0) < 1e-11);
    }

    #[test]
    fn f0_is_definition() {
        for w in [WeightModel::gaussian(), power2(), exp_weight()] {
            for d in [1usize, 2, 3] {
                let k = KernelCoeffs::new(&w, d, 4).unwrap();
                let exact = ln_gamma(d as f64) - d as f64 * PI.ln() - k.moments().ln_moment(0);
                assert!((k.ln_f(0) - exact).abs() < 1e-14);
                assert!(k.f(3) > 0.0);
            }
        }
    }

    #[test]
    fn gaussian_kernel_values() {
        let k = KernelCoeffs::with_default_kmax(&WeightModel::gaussian(), 1).unwrap();
        let zero = pt(&[(0.0, 0.0)]);
        let one = pt(&[(1.0, 0.0)]);
        assert!((k.eval_kernel(&zero, &zero).unwrap().re - 1.0 / PI).abs() < 1e-15);
        assert!(rel(k.eval_kernel(&one, &one).unwrap().re, 1f64.exp() / PI) < 1e-13);
        let z = pt(&[(0.7, -1.2)]);
        let w = pt(&[(-0.3, 0.9)]);
        let exact = (z[0] * w[0].conj()).exp() / PI;
        let kzw = k.eval_kernel(&z, &w).unwrap();
        assert!((kzw - exact).norm() < 1e-13 * exact.norm());
        let kwz = k.eval_kernel(&w, &z).unwrap();
        assert!((kzw - kwz.conj()).norm() < 1e-14);
    }

    #[test]
    fn kernel_at_zero_second_argument_is_f0() {
        for w in [WeightModel::gaussian(), power2()] {
            let k = KernelCoeffs::new(&w, 2, 60).unwrap();
            let z = pt(&[(1.3, 0.2), (-0.4, 0.8)]);
            let v = k.eval_kernel(&z, &pt(&[(0.0, 0.0), (0.0, 0.0)])).unwrap();
            assert!((v.re - k.f(0)).abs() < 1e-15 && v.im == 0.0);
        }
    }

    #[test]
    fn truncation_shortfall_is_a_range_error() {
        let k = KernelCoeffs::new(&WeightModel::gaussian(), 1, 20).unwrap();
        let z = pt(&[(6.0, 0.0)]);
        match k.eval_kernel(&z, &z) {
            Err(Error::Range(msg)) => assert!(msg.contains("kmax")),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn reproducing_property_by_quadrature() {
        // d = 1: ∫ w^n conj(K(w,z)) e^{−Ψ(|w|²)} dm(w) = z^n. The angular
        // integral picks k = n, leaving 2π f_n z^n ∫ ρ^{2n+1} e^{−Ψ(ρ²)} dρ.
        for w in [WeightModel::gaussian(), power2(), exp_weight()] {
            let k = KernelCoeffs::new(&w, 1, 40).unwrap();
            for n in [0usize, 1, 5, 12] {
                let radial = adaptive(
                    |rho: f64| {
                        if rho == 0.0 {
                            return 0.0;
                        }
                        ((2 * n + 1) as f64 * rho.ln() - w.psi(rho * rho) - k.moments().ln_moment(n) + 2f64.ln()).exp()
                    },
                    0.0,
                    8.0,
                    1e-12,
                    0.0,
                );
                // Normalised so that the exact answer is 1: 2π f_n M_n / 2 = 1.
                let factor = PI * (k.ln_f(n) + k.moments().ln_moment(n)).exp();
                assert!(rel(radial.value * factor, 1.0) < 1e-8, "{} n={n}", w.name());
            }
        }
    }

    #[test]
    fn gaussian_bergman_matrix_is_identity() {
        let k = KernelCoeffs::new(&WeightModel::gaussian(), 2, 80).unwrap();
        for z in [pt(&[(0.0, 0.0), (0.0, 0.0)]), pt(&[(1.0, 2.0), (-0.5, 0.3)])] {
            let bd = k.bergman_data(&z).unwrap();
            assert!((bd.lambda - 1.0).abs() < 1e-10 && (bd.mu - 1.0).abs() < 1e-10);
            assert!(crate::linalg::max_abs_diff(&bd.b, &CMat::identity(2, 2)) < 1e-10);
        }
    }

    #[test]
    fn bergman_at_origin_is_isotropic() {
        let k = KernelCoeffs::new(&power2(), 2, 60).unwrap();
        let bd = k.bergman_data(&pt(&[(0.0, 0.0), (0.0, 0.0)])).unwrap();
        let ratio = (k.ln_f(1) - k.ln_f(0)).exp();
        assert_eq!(bd.lambda, bd.mu);
        assert!((bd.lambda - ratio).abs() < 1e-15);
        assert!(crate::linalg::max_abs_diff(&bd.b, &(CMat::identity(2, 2) * c(ratio, 0.0))) < 1e-15);
    }

    #[test]
    fn bergman_inverse_matches_direct_inverse() {
        let k = KernelCoeffs::new(&power2(), 2, 400).unwrap();
        let bd = k.bergman_data(&pt(&[(1.1, -0.4), (0.3, 0.9)])).unwrap();
        let direct = bd.b.clone().try_inverse().unwrap();
        assert!(crate::linalg::max_abs_diff(&direct, &bd.b_inv) < 1e-12);
        let sq = &bd.b_inv_sqrt * &bd.b_inv_sqrt;
        assert!(crate::linalg::max_abs_diff(&sq, &bd.b_inv) < 1e-12);
    }

    #[test]
    fn power2_eigenvalue_comparison_at_two() {
        let w = power2();
        let k = KernelCoeffs::new(&w, 1, 400).unwrap();
        let bd = k.bergman_data(&pt(&[(2.0, 0.0)])).unwrap();
        let ratio = bd.lambda / w.dphi(4.0, 1);
        assert!((0.25..=4.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn log_derivatives_match_finite_differences() {
        let k = KernelCoeffs::new(&power2(), 1, 600).unwrap();
        let h = 1e-4;
        for r in [0.5, 2.0, 9.0] {
            let (g, dg) = k.eval_log_f_derivatives(r).unwrap();
            let lnf = |t: f64| k.radial_stats(t).unwrap().ln_f(k.weight());
            let g_fd = (lnf(r + h) - lnf(r - h)) / (2.0 * h);
            assert!(rel(g, g_fd) < 1e-6, "r={r}");
            let gp = |t: f64| k.eval_log_f_derivatives(t).unwrap().0;
            let dg_fd = (gp(r + h) - gp(r - h)) / (2.0 * h);
            assert!((dg - dg_fd).abs() < 1e-5 * dg.abs().max(1.0), "r={r}");
        }
    }

    #[test]
    fn continuous_route_matches_discrete_route() {
        let w = exp_weight();
        let r: f64 = 7.0;
        let big = KernelCoeffs::covering_series(&w, 1, r.sqrt(), 0).unwrap();
        let small = KernelCoeffs::new(&w, 1, 8).unwrap();
        let a = big.radial_stats(r).unwrap();
        let b = small.radial_stats(r).unwrap();
        assert_eq!(a.route, SumRoute::Discrete);
        assert_eq!(b.route, SumRoute::Continuous);
        assert!((a.ln_f_minus_psi - b.ln_f_minus_psi).abs() < 1e-9);
        assert!(rel(b.mean, a.mean) < 1e-9);
        assert!(rel(b.var, a.var) < 1e-8);
    }

    #[test]
    fn covering_tables_reach_large_radii() {
        for (w, d) in [(exp_weight(), 1), (power2(), 2)] {
            let k = KernelCoeffs::covering(&w, d, 8.0, 0).unwrap();
            assert!(k.kmax() < 20_000, "{} kmax {}", w.name(), k.kmax());
            let s = k.radial_stats(64.0).unwrap();
            assert_eq!(s.route, SumRoute::Continuous);
            let (l, m) = k.bergman_eigenvalues(64.0).unwrap();
            let rl = l / w.dphi(64.0, 1);
            let rm = m / w.dpsi(64.0, 1);
            assert!((0.5..2.0).contains(&rl) && (0.5..2.0).contains(&rm), "{rl} {rm}");
        }
    }

    #[test]
    fn diagonal_ratio_closed_forms() {
        let g = WeightModel::gaussian();
        let k1 = KernelCoeffs::with_default_kmax(&g, 1).unwrap();
        assert!(rel(k1.kernel_diag_check(&pt(&[(3.0, 0.0)])).unwrap(), 1.0 / PI) < 1e-12);
        let k2 = KernelCoeffs::with_default_kmax(&g, 2).unwrap();
        let z = pt(&[(2.0f64.sqrt(), 0.0), (0.0, 2.0f64.sqrt())]);
        assert!(rel(k2.kernel_diag_check(&z).unwrap(), 1.0 / (PI * PI)) < 1e-12);
    }

    #[test]
    fn power2_diagonal_ratio_band() {
        let k = KernelCoeffs::covering(&power2(), 1, 6.0, 0).unwrap();
        let ratios: Vec<f64> = (0..=20)
            .map(|i| k.kernel_diag_check(&pt(&[(1.0 + 0.25 * i as f64, 0.0)])).unwrap())
            .collect();
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(max / min < 10.0, "{ratios:?}");
    }

    #[test]
    fn gaussian_metric_is_euclidean() {
        let k = KernelCoeffs::new(&WeightModel::gaussian(), 2, 80).unwrap();
        let z = pt(&[(0.5, 0.1), (-0.2, 0.4)]);
        let w = pt(&[(1.5, -0.6), (0.7, 0.2)]);
        let bd = k.bergman_data(&z).unwrap();
        let xi = pt(&[(0.3, 0.4), (1.0, -2.0)]);
        assert!(rel(bd.metric(&xi), norm_sq(&xi).sqrt()) < 1e-10);
        assert_eq!(bd.metric(&pt(&[(0.0, 0.0), (0.0, 0.0)])), 0.0);
        let dist = k.bergman_distance(&z, &w).unwrap();
        let euclid = norm_sq(&z.iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>()).sqrt();
        assert!(rel(dist.distance, euclid) < 1e-9 && dist.upper_bound);
        assert_eq!(k.bergman_distance(&z, &z).unwrap().distance, 0.0);
    }

    #[test]
    fn polyline_does_not_lengthen_distance() {
        let k = KernelCoeffs::covering(&power2(), 1, 3.0, 0).unwrap();
        let z = pt(&[(2.0, 0.0)]);
        let w = pt(&[(-2.0, 0.1)]);
        let dist = k.bergman_distance(&z, &w).unwrap();
        assert!(dist.distance <= dist.straight);
        assert!(dist.distance > 0.0);
    }

    #[test]
    fn polyball_examples() {
        let g = WeightModel::gaussian();
        let k = KernelCoeffs::new(&g, 2, 60).unwrap();
        let bd = k.bergman_data(&pt(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        assert!(polyball_contains(&bd, &g, 1.0, &pt(&[(1.5, 0.0), (0.5, 0.0)])));
        assert!(!polyball_contains(&bd, &g, 0.1, &pt(&[(1.5, 0.0), (0.0, 0.0)])));
        let p = power2();
        let kp = KernelCoeffs::new(&p, 2, 200).unwrap();
        let z = pt(&[(0.4, 1.1), (-0.7, 0.2)]);
        let bdp = kp.bergman_data(&z).unwrap();
        assert!(polyball_contains(&bdp, &p, 0.01, &z));
    }

    #[test]
    fn polyball_samples_lie_inside() {
        let p = power2();
        let k = KernelCoeffs::new(&p, 2, 200).unwrap();
        let bd = k.bergman_data(&pt(&[(1.0, 0.5), (0.2, -0.3)])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let w = polyball_sample(&bd, &p, 0.25, &mut rng).unwrap();
            assert!(polyball_contains(&bd, &p, 0.25 * (1.0 + 1e-12), &w));
        }
        assert!(polyball_volume(&bd, &p, 0.25) > 0.0);
    }

    #[test]
    fn polyball_is_unitarily_invariant() {
        let p = power2();
        let k = KernelCoeffs::new(&p, 2, 200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = pt(&[(0.9, -0.2), (0.4, 0.6)]);
        for _ in 0..20 {
            let u = random_unitary(&mut rng, 2);
            assert!(polyball_unitary_check(&k, &u, &z, 0.5, 200, &mut rng).unwrap());
        }
    }
}
