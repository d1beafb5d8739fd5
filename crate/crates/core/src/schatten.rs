//! Partial integrals `∫_{|z|<R} F(z) dλ_φ(z)`, `dλ_φ = K(z,z) e^{−Ψ(|z|²)} dm`,
//! of Schatten-type integrands, and the growth of `Σ s_n²` with the
//! truncation degree.
//!
//! A sequence of partial values is called divergent when every step grows by
//! more than 5%, and convergent when the last step grows by at most 5%.

use rayon::prelude::*;
use serde::Serialize;

use crate::berezin::{mo_squared, MoRoute};
use crate::error::{Error, Result};
use crate::grid::sphere_directions;
use crate::hankel::{check_table, hankel_image};
use crate::kernel::KernelCoeffs;
use crate::linalg::psd_sqrt_schatten_pow;
use crate::multi_index::{up_to_degree, C64};
use crate::quadrature::GaussLegendre;
use crate::symbols::{q_at, OperatorSymbol};

/// Radial cutoffs for the partial integrals: three doublings.
pub const DEFAULT_CUTOFFS: [f64; 4] = [2.0, 4.0, 8.0, 16.0];
/// Truncation degrees for the `Σ s_n²` sweep.
pub const HS_DEGREES: [u32; 4] = [6, 10, 14, 18];
/// Relative growth per step separating "still growing" from "settled".
pub const GROWTH_THRESHOLD: f64 = 0.05;
pub const PANELS_PER_BAND: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct PartialIntegrals {
    pub p: f64,
    pub cutoffs: Vec<f64>,
    pub values: Vec<f64>,
    /// `values[i+1]/values[i] − 1`
    pub growth: Vec<f64>,
    pub divergent: bool,
    pub convergent: bool,
    /// `p < 2`: computed, but outside the range where the integrals characterize membership.
    pub below_two: bool,
}

/// Relative growth of consecutive partial values; a zero sequence does not grow.
pub fn relative_growth(values: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .map(|w| if w[0] == 0.0 { if w[1] == 0.0 { 0.0 } else { f64::INFINITY } } else { w[1] / w[0] - 1.0 })
        .collect()
}

/// `(divergent, convergent)` under the 5% rule.
pub fn classify_growth(growth: &[f64]) -> (bool, bool) {
    classify_growth_at(growth, GROWTH_THRESHOLD)
}

/// `(divergent, convergent)` with a custom per-step threshold.
pub fn classify_growth_at(growth: &[f64], threshold: f64) -> (bool, bool) {
    let divergent = !growth.is_empty() && growth.iter().all(|&g| g > threshold);
    let convergent = growth.last().is_some_and(|&g| g <= threshold);
    (divergent, convergent)
}

/// Partial integrals of `f` against `dλ_φ` over `|z| < R` for each cutoff `R`.
///
/// Radial GL20 panels (`panels` per band between consecutive cutoffs) times
/// an average over `directions` points of the unit sphere.
pub fn lambda_partial_integrals<F>(
    coeffs: &KernelCoeffs,
    cutoffs: &[f64],
    directions: usize,
    panels: usize,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[C64]) -> Result<f64> + Sync,
{
    if cutoffs.is_empty() || cutoffs[0] <= 0.0 || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(format!("cutoffs must be positive and increasing, got {cutoffs:?}")));
    }
    if directions == 0 || panels == 0 {
        return Err(Error::Precondition("need at least one direction and one panel".into()));
    }
    let d = coeffs.d();
    let dirs = sphere_directions(d, directions);
    // dm = (2π^d/(d−1)!) ρ^{2d−1} dρ dσ with σ the normalized surface measure
    let sphere = 2.0 * std::f64::consts::PI.powi(d as i32) / (1..d).product::<usize>() as f64;
    let rule = GaussLegendre::g20();
    let mut out = Vec::with_capacity(cutoffs.len());
    let mut total = 0.0;
    let mut lo = 0.0;
    for &hi in cutoffs {
        let h = (hi - lo) / panels as f64;
        let nodes: Vec<(f64, f64)> = (0..panels)
            .flat_map(|i| rule.on(lo + h * i as f64, lo + h * (i + 1) as f64).collect::<Vec<_>>())
            .collect();
        let band: Vec<f64> = nodes
            .par_iter()
            .map(|&(rho, wt)| -> Result<f64> {
                let ln_ke = coeffs.radial_stats(rho * rho)?.ln_f_minus_psi;
                let mut avg = 0.0;
                for u in &dirs {
                    let z: Vec<C64> = u.iter().map(|x| x * rho).collect();
                    avg += f(&z)?;
                }
                avg /= dirs.len() as f64;
                Ok(wt * sphere * rho.powi(2 * d as i32 - 1) * ln_ke.exp() * avg)
            })
            .collect::<Result<_>>()?;
        total += band.iter().sum::<f64>();
        out.push(total);
        lo = hi;
    }
    Ok(out)
}

fn partial_report(p: f64, cutoffs: &[f64], values: Vec<f64>) -> PartialIntegrals {
    let growth = relative_growth(&values);
    let (divergent, convergent) = classify_growth(&growth);
    PartialIntegrals {
        p,
        cutoffs: cutoffs.to_vec(),
        values,
        growth,
        divergent,
        convergent,
        below_two: p < 2.0,
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Precondition(format!("Schatten exponent {p} must be a finite number ≥ 1")));
    }
    Ok(())
}

/// Partial integrals of `‖Q_T(z)^{1/2}‖^p_{S^p}` against `dλ_φ`.
pub fn besov_integral(
    t: &OperatorSymbol,
    coeffs: &KernelCoeffs,
    p: f64,
    cutoffs: &[f64],
    directions: usize,
) -> Result<PartialIntegrals> {
    check_p(p)?;
    let values = lambda_partial_integrals(coeffs, cutoffs, directions, PANELS_PER_BAND, |z| {
        Ok(psd_sqrt_schatten_pow(&q_at(t, coeffs, z)?.q, p))
    })?;
    Ok(partial_report(p, cutoffs, values))
}

/// Partial integrals of `‖(MO²T*(z))^{1/2}‖^p_{S^p}` against `dλ_φ`, with
/// `MO²` from the Berezin series (the table must cover the largest cutoff).
pub fn mo_schatten_integral(
    t: &OperatorSymbol,
    coeffs: &KernelCoeffs,
    p: f64,
    cutoffs: &[f64],
    directions: usize,
) -> Result<PartialIntegrals> {
    check_p(p)?;
    let values = lambda_partial_integrals(coeffs, cutoffs, directions, PANELS_PER_BAND, |z| {
        Ok(psd_sqrt_schatten_pow(&mo_squared(t, coeffs, z, MoRoute::Series)?.mo, p))
    })?;
    Ok(partial_report(p, cutoffs, values))
}

/// `Σ s_n²` of the compression to degree `≤ n`, i.e. `Σ_{ν,j} ‖H_{T*}(u_ν ⊗ f_j)‖²`.
pub fn hs_sum(t: &OperatorSymbol, coeffs: &KernelCoeffs, n: u32) -> Result<f64> {
    check_table(coeffs, n + 2 * t.degree())?;
    let parts: Vec<f64> = up_to_degree(t.d(), n)
        .par_iter()
        .map(|nu| hankel_image(t, coeffs, nu).norms_sq(coeffs).iter().sum::<f64>())
        .collect();
    Ok(parts.iter().sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct HsSweep {
    pub degrees: Vec<u32>,
    pub sums: Vec<f64>,
    pub growth: Vec<f64>,
    /// Every step grew by more than 5%.
    pub divergent: bool,
}

pub fn hs_sweep(t: &OperatorSymbol, coeffs: &KernelCoeffs, degrees: &[u32]) -> Result<HsSweep> {
    let sums = degrees.iter().map(|&n| hs_sum(t, coeffs, n)).collect::<Result<Vec<_>>>()?;
    let growth = relative_growth(&sums);
    let (divergent, _) = classify_growth(&growth);
    Ok(HsSweep {
        degrees: degrees.to_vec(),
        sums,
        growth,
        divergent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::multi_index::MultiIndex;
    use crate::weights::{make_weight, WeightFamily, WeightModel};
    use statrs::function::gamma::ln_gamma;

    fn z_symbol() -> OperatorSymbol {
        OperatorSymbol::scalar(1, &[(MultiIndex::unit(1, 0), c(1.0, 0.0))])
    }

    #[test]
    fn gaussian_linear_symbol_grows_like_area() {
        // Q ≡ 1 and K(z,z)e^{−|z|²} = 1/π, so the partial integral is R².
        let k = KernelCoeffs::covering(&WeightModel::gaussian(), 1, 16.0, 8).unwrap();
        for p in [2.0, 3.0, 6.0] {
            let r = besov_integral(&z_symbol(), &k, p, &DEFAULT_CUTOFFS, 4).unwrap();
            for (v, cut) in r.values.iter().zip(DEFAULT_CUTOFFS) {
                assert!((v / (cut * cut) - 1.0).abs() < 1e-9, "{v} vs {}", cut * cut);
            }
            assert!(r.divergent && !r.convergent);
        }
    }

    #[test]
    fn constant_symbol_integrates_to_zero() {
        let k = KernelCoeffs::covering(&WeightModel::gaussian(), 1, 16.0, 8).unwrap();
        let t = OperatorSymbol::scalar(1, &[(MultiIndex::zero(1), c(2.0, 1.0))]);
        let r = besov_integral(&t, &k, 2.0, &DEFAULT_CUTOFFS, 4).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
        assert!(r.convergent && !r.divergent);
    }

    #[test]
    fn power2_besov_threshold() {
        let w = make_weight(WeightFamily::Power { s: 2.0 }).unwrap();
        let k = KernelCoeffs::covering(&w, 1, 16.0, 8).unwrap();
        let p6 = besov_integral(&z_symbol(), &k, 6.0, &DEFAULT_CUTOFFS, 4).unwrap();
        let p3 = besov_integral(&z_symbol(), &k, 3.0, &DEFAULT_CUTOFFS, 4).unwrap();
        assert!(p6.convergent, "{:?}", p6.growth);
        assert!(p3.divergent, "{:?}", p3.growth);
        let p1 = besov_integral(&z_symbol(), &k, 1.5, &[2.0, 4.0], 4).unwrap();
        assert!(p1.below_two);
    }

    #[test]
    fn hs_sum_closed_forms() {
        // gaussian: every s_n = 1, so Σ s_n² is the dimension N + 1
        let g = KernelCoeffs::new(&WeightModel::gaussian(), 1, 40).unwrap();
        for n in [6, 10, 14] {
            assert!((hs_sum(&z_symbol(), &g, n).unwrap() - (n + 1) as f64).abs() < 1e-9);
        }
        // power-2: the sum telescopes to M_{N+1}/M_N with M_k = Γ((k+1)/2)/2
        let w = make_weight(WeightFamily::Power { s: 2.0 }).unwrap();
        let k = KernelCoeffs::new(&w, 1, 40).unwrap();
        let sweep = hs_sweep(&z_symbol(), &k, &HS_DEGREES).unwrap();
        for (&n, &s) in sweep.degrees.iter().zip(&sweep.sums) {
            let n = n as f64;
            let exact = (ln_gamma((n + 2.0) / 2.0) - ln_gamma((n + 1.0) / 2.0)).exp();
            assert!((s / exact - 1.0).abs() < 1e-9, "{s} vs {exact}");
        }
        assert!(sweep.divergent);
    }

    #[test]
    fn growth_rule() {
        assert_eq!(classify_growth(&relative_growth(&[1.0, 2.0, 4.0, 8.0])), (true, false));
        assert_eq!(classify_growth(&relative_growth(&[1.0, 2.0, 2.01])), (false, true));
        assert_eq!(classify_growth(&relative_growth(&[0.0, 0.0])), (false, true));
    }
}
