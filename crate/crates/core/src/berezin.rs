//! Berezin transforms, the mean oscillation `MO²T*(z) = (TT*)~(z) − T(z)T(z)*`
//! and the BMO/Bloch/Hankel comparisons built on them.
//!
//! Everything at a point `z` is evaluated in a frame where `z = |z| e₁`
//! (the kernel and the measure are unitarily invariant), so the Berezin sum
//! runs over `ν = (n, 0, …, 0)` only.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hankel::{assemble_hankel, hankel_kernel_gram};
use crate::kernel::{norm_sq, polyball_sample, KernelCoeffs};
use crate::linalg::{c, hermitian_part, psd_norm, spectral_norm, unitary_to_direction, CMat, CVec};
use crate::mixed::MixedPolynomial;
use crate::multi_index::{up_to_degree, MultiIndex, C64};
use crate::symbols::{bloch_norm, q_at, OperatorSymbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoRoute {
    Series,
    Hankel,
}

#[derive(Debug, Clone)]
pub struct MoResult {
    pub z: Vec<C64>,
    pub mo: CMat,
    pub route: MoRoute,
    /// Degree at which the kernel-weighted sums were cut.
    pub truncation: usize,
}

impl MoResult {
    pub fn norm(&self) -> f64 {
        psd_norm(&self.mo)
    }
}

fn radial_point(d: usize, rho: f64) -> Vec<C64> {
    let mut p = vec![c(0.0, 0.0); d];
    p[0] = c(rho, 0.0);
    p
}

/// `g̃(ρ e₁)` by the one-dimensional sum
/// `Σ_n ρ^{2n+α₁−β₁} w_{(n+α₁,α′)} / (w_{(n,0)} w_{(n+α₁−β₁,0)}) / K`, where only
/// terms with `α′ = β′` (the exponents beyond the first coordinate) survive.
fn berezin_on_axis(g: &MixedPolynomial, coeffs: &KernelCoeffs, rho: f64) -> Result<(CMat, usize)> {
    let d = g.d;
    let r = rho * rho;
    let stats = coeffs.radial_stats(r)?;
    let ln_k = stats.ln_f(coeffs.weight());
    let l = coeffs.series_degree(r)? + g.degree() as usize;
    let need = l + g.degree() as usize;
    if need > coeffs.kmax() {
        return Err(Error::Range(format!(
            "Berezin sum at |z| = {rho} needs degree {need}, table stops at {}; increase kmax",
            coeffs.kmax()
        )));
    }
    let ln_rho = rho.ln();
    let axis = |n: usize| {
        let mut v = MultiIndex::zero(d);
        v.0[0] = n as u32;
        v
    };
    // K(ρe₁, ρe₁) summed over the same range, so that constants map to themselves exactly
    let mut norm = 0.0;
    for n in 0..=l {
        let ln_pow = if n == 0 { 0.0 } else if rho == 0.0 { break } else { 2.0 * n as f64 * ln_rho };
        norm += (ln_pow - coeffs.ln_w(&axis(n)) - ln_k).exp();
    }
    let mut out = CMat::zeros(g.m, g.m);
    for ((a, b), coef) in &g.terms {
        if a.0[1..] != b.0[1..] {
            continue;
        }
        let shift = a.0[0] as i64 - b.0[0] as i64;
        let start = if shift < 0 { (-shift) as usize } else { 0 };
        let mut acc = 0.0;
        for n in start..=l {
            let pow = 2 * n as i64 + shift;
            let ln_pow = if pow == 0 {
                0.0
            } else if rho == 0.0 {
                continue;
            } else {
                pow as f64 * ln_rho
            };
            let mut top = a.clone();
            top.0[0] += n as u32;
            let ln_t = ln_pow + coeffs.ln_w(&top)
                - coeffs.ln_w(&axis(n))
                - coeffs.ln_w(&axis((n as i64 + shift) as usize))
                - ln_k;
            acc += ln_t.exp();
        }
        out += coef * c(acc / norm, 0.0);
    }
    Ok((out, l))
}

/// Berezin transform `g̃(z) = ⟨g k_z, k_z⟩` of a mixed polynomial.
pub fn berezin_transform(g: &MixedPolynomial, coeffs: &KernelCoeffs, z: &[C64]) -> Result<CMat> {
    let rho = norm_sq(z).sqrt();
    let rotated = if rho > 0.0 { g.compose_unitary(&unitary_to_direction(z)) } else { g.clone() };
    Ok(berezin_on_axis(&rotated, coeffs, rho)?.0)
}

/// Unrotated Berezin sum over all `ν` with `|ν| ≤ degree`; `O(degree^d)`
/// terms, used as an independent check.
pub fn berezin_transform_direct(g: &MixedPolynomial, coeffs: &KernelCoeffs, z: &[C64], degree: u32) -> Result<CMat> {
    let ln_k = coeffs.radial_stats(norm_sq(z))?.ln_f(coeffs.weight());
    let mut out = CMat::zeros(g.m, g.m);
    for nu in up_to_degree(g.d, degree) {
        for ((a, b), coef) in &g.terms {
            let top = nu.add(a);
            let Some(nu2) = top.checked_sub(b) else { continue };
            let mono = nu.monomial(z).conj() * nu2.monomial(z);
            let scale = (coeffs.ln_w(&top) - coeffs.ln_w(&nu) - coeffs.ln_w(&nu2) - ln_k).exp();
            out += coef * (mono * scale);
        }
    }
    Ok(out)
}

pub fn mo_squared(t: &OperatorSymbol, coeffs: &KernelCoeffs, z: &[C64], route: MoRoute) -> Result<MoResult> {
    if z.len() != t.d() || t.d() != coeffs.d() {
        return Err(Error::Precondition("point, symbol and kernel dimensions differ".into()));
    }
    let rho = norm_sq(z).sqrt();
    let s = if rho > 0.0 { t.compose_unitary(&unitary_to_direction(z)) } else { t.clone() };
    let (mo, truncation) = match route {
        MoRoute::Series => {
            let (tt, l) = berezin_on_axis(&MixedPolynomial::gram_of_symbol(&s), coeffs, rho)?;
            let v = s.eval(&radial_point(t.d(), rho));
            (tt - &v * v.adjoint(), l)
        }
        MoRoute::Hankel => {
            let l = coeffs.series_degree(rho * rho)?;
            (hankel_kernel_gram(&s, coeffs, &radial_point(t.d(), rho))?, l)
        }
    };
    Ok(MoResult {
        z: z.to_vec(),
        mo: hermitian_part(&mo),
        route,
        truncation,
    })
}

/// Both routes and their largest entrywise discrepancy.
pub fn mo_route_discrepancy(t: &OperatorSymbol, coeffs: &KernelCoeffs, z: &[C64]) -> Result<(MoResult, MoResult, f64)> {
    let a = mo_squared(t, coeffs, z, MoRoute::Series)?;
    let b = mo_squared(t, coeffs, z, MoRoute::Hankel)?;
    let diff = crate::linalg::max_abs_diff(&a.mo, &b.mo);
    Ok((a, b, diff))
}

#[derive(Debug, Clone, Serialize)]
pub struct BmoReport {
    /// `‖T(0)‖ + max ‖MO²T*(z)‖^{1/2}`
    pub norm: f64,
    pub t0_norm: f64,
    pub seminorm: f64,
    pub points: usize,
}

fn grid_with_origin(grid: &Grid) -> Vec<Vec<C64>> {
    let mut pts = grid.points();
    pts.push(vec![c(0.0, 0.0); grid.d]);
    pts
}

pub fn bmo_norm(t: &OperatorSymbol, coeffs: &KernelCoeffs, grid: &Grid) -> Result<BmoReport> {
    let pts = grid_with_origin(grid);
    let vals: Vec<Result<f64>> = pts
        .par_iter()
        .map(|z| Ok(mo_squared(t, coeffs, z, MoRoute::Series)?.norm().sqrt()))
        .collect();
    let mut seminorm: f64 = 0.0;
    for v in vals {
        seminorm = seminorm.max(v?);
    }
    let t0_norm = spectral_norm(&t.constant_term());
    Ok(BmoReport {
        norm: t0_norm + seminorm,
        t0_norm,
        seminorm,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub max: f64,
}

/// `max ‖MO²T*(z)‖` over `|z| ∈ {R, 1.25R, …, 1.25^{steps−1}R}` and the given directions.
pub fn bmo_decay(
    t: &OperatorSymbol,
    coeffs: &KernelCoeffs,
    r: f64,
    steps: usize,
    directions: &[Vec<C64>],
) -> Result<DecayReport> {
    let radii: Vec<f64> = (0..steps as i32).map(|i| r * 1.25f64.powi(i)).collect();
    let mut values = Vec::new();
    for &rad in &radii {
        let vals: Vec<Result<f64>> = directions
            .par_iter()
            .map(|u| {
                let z: Vec<C64> = u.iter().map(|x| x * rad).collect();
                Ok(mo_squared(t, coeffs, &z, MoRoute::Series)?.norm())
            })
            .collect();
        let mut best: f64 = 0.0;
        for v in vals {
            best = best.max(v?);
        }
        values.push(best);
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(DecayReport { radii, values, max })
}

/// `max_z ‖Q_T(z)‖^{1/2}/‖MO²T*(z)‖^{1/2}` over the grid (points where both vanish are skipped).
pub fn bloch_bmo_ratio(t: &OperatorSymbol, coeffs: &KernelCoeffs, grid: &Grid) -> Result<f64> {
    let pts = grid.points();
    let vals: Vec<Result<Option<f64>>> = pts
        .par_iter()
        .map(|z| {
            let q = q_at(t, coeffs, z)?.norm();
            let mo = mo_squared(t, coeffs, z, MoRoute::Series)?.norm();
            Ok(if q <= 1e-28 && mo <= 1e-28 { None } else { Some((q / mo).sqrt()) })
        })
        .collect();
    let mut best: f64 = 0.0;
    for v in vals {
        if let Some(x) = v? {
            best = best.max(x);
        }
    }
    Ok(best)
}

/// The three norms whose mutual comparability is the boundedness theorem.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub bloch: f64,
    pub hankel_plus_t0: f64,
    pub bmo: f64,
    pub hankel_degree: u32,
    /// `max/min` of the three norms.
    pub spread: f64,
}

pub fn norm_equivalence(t: &OperatorSymbol, coeffs: &KernelCoeffs, grid: &Grid, n: u32) -> Result<EquivalenceReport> {
    let bloch = bloch_norm(t, coeffs, grid)?.norm;
    let bmo = bmo_norm(t, coeffs, grid)?;
    let h = assemble_hankel(t, coeffs, n)?.operator_norm()?;
    let hankel_plus_t0 = h + bmo.t0_norm;
    let vals = [bloch, hankel_plus_t0, bmo.norm];
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EquivalenceReport {
        bloch,
        hankel_plus_t0,
        bmo: bmo.norm,
        hankel_degree: n,
        spread: if max == 0.0 { 1.0 } else { max / min },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OscillationReport {
    pub a: f64,
    /// Monte-Carlo mean of `‖(T(z)* − T(w)*)e‖²` over `z ∈ D(w,a)`.
    pub polyball_mean: f64,
    /// `‖H_{T*}(k_w e)‖²`
    pub hankel_sq: f64,
    pub ratio: f64,
}

/// Averaged oscillation over a polyball against the Hankel operator on the
/// normalised kernel at its centre.
pub fn polyball_oscillation<R: Rng + ?Sized>(
    t: &OperatorSymbol,
    coeffs: &KernelCoeffs,
    w: &[C64],
    a: f64,
    e: &[C64],
    samples: usize,
    rng: &mut R,
) -> Result<OscillationReport> {
    let bd = coeffs.bergman_data(w)?;
    let tw = t.eval(w).adjoint();
    let ev = CVec::from_column_slice(e);
    let mut sum = 0.0;
    for _ in 0..samples {
        let z = polyball_sample(&bd, coeffs.weight(), a, rng)?;
        let diff = t.eval(&z).adjoint() - &tw;
        sum += (diff * &ev).norm_squared();
    }
    let polyball_mean = sum / samples as f64;
    let g = hankel_kernel_gram(t, coeffs, w)?;
    let hankel_sq = (ev.adjoint() * g * &ev)[(0, 0)].re.max(0.0);
    Ok(OscillationReport {
        a,
        polyball_mean,
        hankel_sq,
        ratio: if hankel_sq > 0.0 { polyball_mean / hankel_sq } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibleA {
    /// `(a, min coherence over the samples and centres)`
    pub sweep: Vec<(f64, f64)>,
    /// Largest swept `a` with coherence ≥ 1/2 everywhere, if any.
    pub admissible: Option<f64>,
}

/// For each `a`, the minimum of `|K(z,w)|²/(K(z,z)K(w,w))` over `samples`
/// points of `D(w,a)` for every centre `w`.
pub fn admissible_a<R: Rng + ?Sized>(
    coeffs: &KernelCoeffs,
    centers: &[Vec<C64>],
    a_values: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<AdmissibleA> {
    let mut sweep = Vec::new();
    for &a in a_values {
        let mut worst: f64 = 1.0;
        for w in centers {
            let bd = coeffs.bergman_data(w)?;
            for _ in 0..samples {
                let z = polyball_sample(&bd, coeffs.weight(), a, rng)?;
                worst = worst.min(coeffs.kernel_coherence(&z, w)?);
            }
        }
        sweep.push((a, worst));
    }
    let admissible = sweep
        .iter()
        .filter(|(_, v)| *v >= 0.5)
        .map(|(a, _)| *a)
        .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |b| b.max(a))));
    Ok(AdmissibleA { sweep, admissible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sphere_directions, GridSpec};
    use crate::linalg::{max_abs_diff, random_complex_matrix};
    use crate::weights::{make_weight, WeightFamily, WeightModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn pt(v: &[(f64, f64)]) -> Vec<C64> {
        v.iter().map(|&(a, b)| c(a, b)).collect()
    }

    fn power2() -> WeightModel {
        make_weight(WeightFamily::Power { s: 2.0 }).unwrap()
    }

    #[test]
    fn berezin_of_modulus_squared_gaussian() {
        let k = KernelCoeffs::covering_series(&WeightModel::gaussian(), 1, 3.0, 8).unwrap();
        let mut g = MixedPolynomial::zero(1, 1);
        g.add_term(mi(&[1]), mi(&[1]), CMat::identity(1, 1)).unwrap();
        for z in [pt(&[(0.0, 0.0)]), pt(&[(1.2, -2.0)])] {
            let v = berezin_transform(&g, &k, &z).unwrap()[(0, 0)];
            assert!((v - c(norm_sq(&z) + 1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn berezin_reproduces_holomorphic_and_constants() {
        let w = power2();
        let k = KernelCoeffs::covering_series(&w, 2, 2.0, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = OperatorSymbol::random(&mut rng, 2, 2, 3, 4, 1.0);
        let g = MixedPolynomial::from_holomorphic(&t);
        let z = pt(&[(0.7, -0.4), (1.1, 0.2)]);
        let v = berezin_transform(&g, &k, &z).unwrap();
        assert!(max_abs_diff(&v, &t.eval(&z)) < 1e-10);
        let cm = random_complex_matrix(&mut rng, 2, 2, 1.0);
        let v = berezin_transform(&MixedPolynomial::constant(2, cm.clone()), &k, &z).unwrap();
        assert!(max_abs_diff(&v, &cm) < 1e-12);
    }

    #[test]
    fn rotated_sum_matches_direct_sum() {
        let w = power2();
        let k = KernelCoeffs::new(&w, 2, 80).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = OperatorSymbol::random(&mut rng, 2, 2, 2, 3, 1.0);
        let g = MixedPolynomial::gram_of_symbol(&t);
        let z = pt(&[(0.5, 0.3), (-0.4, 0.6)]);
        let a = berezin_transform(&g, &k, &z).unwrap();
        let b = berezin_transform_direct(&g, &k, &z, 70).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-11 * (1.0 + psd_norm(&a)));
    }

    #[test]
    fn mo_examples() {
        let g = WeightModel::gaussian();
        let k = KernelCoeffs::covering_series(&g, 1, 3.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_complex_matrix(&mut rng, 2, 2, 1.0);
        let t = OperatorSymbol::monomial(mi(&[1]), a.clone());
        for z in [pt(&[(0.0, 0.0)]), pt(&[(2.0, 1.0)])] {
            for route in [MoRoute::Series, MoRoute::Hankel] {
                let mo = mo_squared(&t, &k, &z, route).unwrap();
                assert!(max_abs_diff(&mo.mo, &(&a * a.adjoint())) < 1e-9, "{route:?}");
            }
        }
        let cst = OperatorSymbol::constant(1, a);
        assert!(mo_squared(&cst, &k, &pt(&[(1.0, 1.0)]), MoRoute::Series).unwrap().norm() < 1e-12);
        let k2 = KernelCoeffs::covering_series(&g, 2, 2.0, 8).unwrap();
        let t2 = OperatorSymbol::monomial(mi(&[1, 0]), CMat::identity(2, 2));
        let mo = mo_squared(&t2, &k2, &pt(&[(1.0, 0.0), (1.0, 0.0)]), MoRoute::Series).unwrap();
        assert!(max_abs_diff(&mo.mo, &CMat::identity(2, 2)) < 1e-10);
    }

    #[test]
    fn routes_agree_power2() {
        let w = power2();
        let k = KernelCoeffs::covering_series(&w, 1, 3.0, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..4 {
            let t = OperatorSymbol::random(&mut rng, 1, 2, 3, 3, 1.0);
            let z = pt(&[(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))]);
            let (a, _, diff) = mo_route_discrepancy(&t, &k, &z).unwrap();
            assert!(diff < 1e-6 * (1.0 + a.norm()), "{diff}");
        }
    }

    #[test]
    fn bmo_norm_examples() {
        let g = WeightModel::gaussian();
        let k = KernelCoeffs::covering_series(&g, 1, 8.0, 8).unwrap();
        let grid = Grid::new(1, &GridSpec { radii: 6, r_min: 0.1, r_max: 8.0, directions: 4 });
        let t = OperatorSymbol::scalar(1, &[(mi(&[1]), c(1.0, 0.0))]);
        assert!((bmo_norm(&t, &k, &grid).unwrap().norm - 1.0).abs() < 1e-8);
        let cm = CMat::from_element(1, 1, c(0.0, 3.0));
        assert!((bmo_norm(&OperatorSymbol::constant(1, cm), &k, &grid).unwrap().norm - 3.0).abs() < 1e-10);
    }

    #[test]
    fn power2_bmo_decays() {
        let w = power2();
        let k = KernelCoeffs::covering_series(&w, 1, 5.0 * 1.25f64.powi(3), 8).unwrap();
        let t = OperatorSymbol::scalar(1, &[(mi(&[1]), c(1.0, 0.0))]);
        let dirs = sphere_directions(1, 2);
        let d2 = bmo_decay(&t, &k, 2.0, 4, &dirs).unwrap();
        let d5 = bmo_decay(&t, &k, 5.0, 4, &dirs).unwrap();
        assert!(d5.max < d2.max);
        assert!(d5.values.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn admissible_a_for_gaussian() {
        let k = KernelCoeffs::covering_series(&WeightModel::gaussian(), 1, 4.0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let centers = vec![pt(&[(1.0, 0.5)]), pt(&[(-1.5, 0.2)])];
        let rep = admissible_a(&k, &centers, &[0.1, 0.25, 0.5], 200, &mut rng).unwrap();
        // |K(z,w)|²/(K(z,z)K(w,w)) = e^{−|z−w|²} ≥ e^{−a²}
        assert_eq!(rep.admissible, Some(0.5));
        assert!(rep.sweep[2].1 >= (-0.25f64).exp() - 1e-12);
    }

    #[test]
    fn polyball_oscillation_is_controlled() {
        let w = power2();
        let k = KernelCoeffs::covering_series(&w, 1, 4.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let t = OperatorSymbol::scalar(1, &[(mi(&[1]), c(1.0, 0.0)), (mi(&[2]), c(0.3, 0.1))]);
        let rep = polyball_oscillation(&t, &k, &pt(&[(1.5, 0.5)]), 0.25, &[c(1.0, 0.0)], 500, &mut rng).unwrap();
        assert!(rep.ratio.is_finite() && rep.ratio < 1.0, "{rep:?}");
    }
}
