//! Integral identities on the truncated space of holomorphic polynomials
//! of degree `≤ N`, checked by quadrature against their algebraic side:
//!
//! * `tr S = ∫ Σ_k ⟨S(K_z e_k^z), K_z e_k^z⟩ e^{−Ψ(|z|²)} dm(z)` for PSD `S`
//!   and any pointwise orthonormal frame `{e_k^z}`;
//! * `Σ_{ν,j} ‖R u_ν f_j‖² = ∫ ‖R(z)‖²_{S²} K_N(z,z) e^{−Ψ(|z|²)} dm(z)` for a
//!   polynomial multiplier `R(z, z̄)`, with `K_N` the kernel of the truncation.

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hankel::{block_gram, check_table};
use crate::kernel::{moment_peak, KernelCoeffs};
use crate::linalg::{c, hermitian_eigenvalues, psd_norm, random_frame, spectral_norm, CMat, CVec};
use crate::mixed::{MixedExpansion, MixedPolynomial};
use crate::multi_index::{up_to_degree, MultiIndex, C64};
use crate::quadrature::{adaptive, GaussLegendre};
use crate::weights::WeightModel;

const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpaceIntegral {
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// `∫_{ℂ^d} f(z) e^{−Ψ(|z|²)} dm(z)` for `d ∈ {1, 2}`.
///
/// `f` must grow at most like `|z|^{2·growth}`. On each torus it must be a
/// trigonometric polynomial of degree `< angles` in every angle, and for
/// `d = 2`, after averaging over angles, a polynomial of degree `≤ tau_degree`
/// in `τ = |z₁|²/|z|²`. Angles use the trapezoid rule, `τ` Gauss–Legendre,
/// `s = |z|²` adaptive panels split at the peaks of `s^a e^{−Ψ(s)}`.
pub fn weighted_integral<F>(
    weight: &WeightModel,
    d: usize,
    growth: u32,
    angles: usize,
    tau_degree: u32,
    f: F,
) -> Result<SpaceIntegral>
where
    F: Fn(&[C64]) -> f64 + Sync,
{
    if !(1..=2).contains(&d) {
        return Err(Error::Precondition(format!("integral identities are implemented for d ≤ 2, got d = {d}")));
    }
    let angles = angles.max(1);
    let phases: Vec<C64> = (0..angles)
        .map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / angles as f64))
        .collect();
    let tau_rule = GaussLegendre::new(tau_degree as usize / 2 + 1);
    let pi = std::f64::consts::PI;
    let shell = |s: f64| -> f64 {
        let e = (-weight.psi(s)).exp();
        if e == 0.0 {
            return 0.0;
        }
        let rho = s.sqrt();
        if d == 1 {
            let avg: f64 = phases.iter().map(|p| f(&[p * rho])).sum::<f64>() / angles as f64;
            pi * avg * e
        } else {
            let mut acc = 0.0;
            for (tau, wt) in tau_rule.on(0.0, 1.0) {
                let (r1, r2) = ((s * tau).sqrt(), (s * (1.0 - tau)).sqrt());
                let mut avg = 0.0;
                for p1 in &phases {
                    for p2 in &phases {
                        avg += f(&[p1 * r1, p2 * r2]);
                    }
                }
                acc += wt * avg / (angles * angles) as f64;
            }
            pi * pi * s * acc * e
        }
    };
    // s^a e^{−Ψ(s)} with a = growth + d − 1 bounds the integrand's radial profile.
    let a = (growth + d as u32 - 1) as f64;
    let mut cuts: Vec<f64> = (1..=growth + d as u32 - 1).map(|k| moment_peak(weight, k as f64)).collect();
    cuts.insert(0, 0.0);
    let top = *cuts.last().unwrap();
    let log_profile = |s: f64| if s > 0.0 { a * s.ln() - weight.psi(s) } else { -weight.psi(0.0) };
    let peak_value = log_profile(top.max(1e-300)).max(log_profile(0.0));
    let mut end = top.max(1.0);
    while log_profile(end) > peak_value - 80.0 {
        end *= 1.5;
    }
    cuts.push(end);
    cuts.dedup();
    let mut out = SpaceIntegral {
        value: 0.0,
        evaluations: 0,
        converged: true,
    };
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let q = adaptive(&shell, w[0], w[1], REL_TOL, 0.0);
        out.value += q.value;
        out.evaluations += q.evaluations;
        out.converged &= q.converged;
    }
    Ok(out)
}

fn require_low_dimension(coeffs: &KernelCoeffs) -> Result<()> {
    if coeffs.d() > 2 {
        return Err(Error::Precondition(format!(
            "integral identities are implemented for d ≤ 2, got d = {}",
            coeffs.d()
        )));
    }
    Ok(())
}

/// `conj(z^ν)/√w_ν` for each basis element, i.e. the coordinates of `K_z`.
fn kernel_coordinates(basis: &[MultiIndex], ln_w: &[f64], z: &[C64]) -> Vec<C64> {
    basis
        .iter()
        .zip(ln_w)
        .map(|(nu, lw)| {
            let mut v = c((-0.5 * lw).exp(), 0.0);
            for (zi, &e) in z.iter().zip(&nu.0) {
                v *= zi.conj().powu(e);
            }
            v
        })
        .collect()
}

fn point_seed(seed: u64, z: &[C64]) -> u64 {
    let mut h = DefaultHasher::new();
    seed.hash(&mut h);
    for x in z {
        x.re.to_bits().hash(&mut h);
        x.im.to_bits().hash(&mut h);
    }
    h.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceIdentity {
    pub trace: f64,
    pub integral: f64,
    pub rel_err: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Both sides of the trace formula for a PSD matrix `s` acting on the
/// truncation `{u_ν ⊗ f_j : |ν| ≤ n}` (ordered `ν`-major like the Hankel
/// basis), with an orthonormal frame of `ℂ^m` drawn afresh at every
/// quadrature point.
pub fn trace_identity_check(s: &CMat, coeffs: &KernelCoeffs, n: u32, m: usize, seed: u64) -> Result<TraceIdentity> {
    require_low_dimension(coeffs)?;
    check_table(coeffs, n)?;
    let basis = up_to_degree(coeffs.d(), n);
    let dim = basis.len() * m;
    if s.nrows() != dim || s.ncols() != dim {
        return Err(Error::Precondition(format!(
            "operator is {}×{} but the truncation has dimension {dim}",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = spectral_norm(s);
    if (s - s.adjoint()).norm() > 1e-10 * scale.max(1e-300) {
        return Err(Error::Precondition("operator is not hermitian".into()));
    }
    let low = hermitian_eigenvalues(s)?.last().copied().unwrap_or(0.0);
    if low < -1e-9 * scale {
        return Err(Error::Precondition(format!("operator is not positive: eigenvalue {low:e}")));
    }
    let ln_w: Vec<f64> = basis.iter().map(|nu| coeffs.ln_w(nu)).collect();
    let integrand = |z: &[C64]| -> f64 {
        let kc = kernel_coordinates(&basis, &ln_w, z);
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed(seed, z));
        let frame = random_frame(&mut rng, m);
        let mut total = 0.0;
        for k in 0..m {
            let x = CVec::from_fn(dim, |i, _| kc[i / m] * frame[(i % m, k)]);
            total += x.dotc(&(s * &x)).re;
        }
        total
    };
    let q = weighted_integral(coeffs.weight(), coeffs.d(), n, n as usize + 2, n, integrand)?;
    let trace: f64 = s.diagonal().iter().map(|x| x.re).sum();
    Ok(TraceIdentity {
        trace,
        integral: q.value,
        rel_err: relative(q.value, trace),
        evaluations: q.evaluations,
        converged: q.converged,
    })
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn multiplier_images(r: &MixedPolynomial, coeffs: &KernelCoeffs, n: u32) -> Result<Vec<MixedExpansion>> {
    if r.d != coeffs.d() {
        return Err(Error::Precondition(format!(
            "multiplier has d = {} but the kernel has d = {}",
            r.d,
            coeffs.d()
        )));
    }
    check_table(coeffs, n + r.degree())?;
    Ok(up_to_degree(coeffs.d(), n)
        .par_iter()
        .map(|nu| r.apply_to_basis(coeffs, nu))
        .collect())
}

/// `Σ_{|ν| ≤ n, j} ‖R u_ν f_j‖²`, exact in moments.
pub fn multiplier_hs_sq(r: &MixedPolynomial, coeffs: &KernelCoeffs, n: u32) -> Result<f64> {
    Ok(multiplier_images(r, coeffs, n)?
        .iter()
        .map(|e| e.norms_sq(coeffs).iter().sum::<f64>())
        .sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct HsIdentity {
    pub direct: f64,
    pub integral: f64,
    pub rel_err: f64,
    /// Relative change of the direct side when the truncation grows by one degree.
    pub next_degree_excess: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// The multiplier `R` restricted to degree `≤ n`: its squared
/// Hilbert–Schmidt norm against `∫ ‖R‖²_{S²} K_n(z,z) dμ_φ`.
pub fn hs_multiplier_identity_check(r: &MixedPolynomial, coeffs: &KernelCoeffs, n: u32) -> Result<HsIdentity> {
    require_low_dimension(coeffs)?;
    let direct = multiplier_hs_sq(r, coeffs, n)?;
    let next = multiplier_hs_sq(r, coeffs, n + 1).ok();
    let basis = up_to_degree(coeffs.d(), n);
    let ln_w: Vec<f64> = basis.iter().map(|nu| coeffs.ln_w(nu)).collect();
    let deg = r.degree();
    let integrand = |z: &[C64]| -> f64 {
        let kn: f64 = kernel_coordinates(&basis, &ln_w, z).iter().map(|x| x.norm_sqr()).sum();
        r.eval(z).iter().map(|x| x.norm_sqr()).sum::<f64>() * kn
    };
    let q = weighted_integral(coeffs.weight(), coeffs.d(), n + deg, 2 * deg as usize + 2, n + deg, integrand)?;
    Ok(HsIdentity {
        direct,
        integral: q.value,
        rel_err: relative(q.value, direct),
        next_degree_excess: next.map_or(f64::NAN, |x| if direct > 0.0 { x / direct - 1.0 } else { 0.0 }),
        evaluations: q.evaluations,
        converged: q.converged,
    })
}

/// Operator norm of `f ↦ R f` on the truncation, from the Gram matrix of the images.
pub fn multiplier_norm(r: &MixedPolynomial, coeffs: &KernelCoeffs, n: u32) -> Result<f64> {
    let images = multiplier_images(r, coeffs, n)?;
    Ok(psd_norm(&block_gram(&images, coeffs, r.m)).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct Contractivity {
    pub operator_norm: f64,
    /// `max ‖R(z)‖` over the grid and the origin.
    pub sup_norm: f64,
    pub pass: bool,
}

/// `‖M_R‖ ≤ sup_z ‖R(z)‖`. The grid only bounds the supremum from below, so
/// this is meaningful for bounded `R` (exact for constants).
pub fn contractivity_check(r: &MixedPolynomial, coeffs: &KernelCoeffs, n: u32, grid: &Grid) -> Result<Contractivity> {
    let operator_norm = multiplier_norm(r, coeffs, n)?;
    let mut sup_norm = spectral_norm(&r.eval(&vec![c(0.0, 0.0); r.d]));
    for z in grid.points() {
        sup_norm = sup_norm.max(spectral_norm(&r.eval(&z)));
    }
    Ok(Contractivity {
        operator_norm,
        sup_norm,
        pass: operator_norm <= sup_norm * (1.0 + 1e-9) + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_complex_matrix;
    use crate::weights::{make_weight, WeightFamily};

    fn power2() -> WeightModel {
        make_weight(WeightFamily::Power { s: 2.0 }).unwrap()
    }

    #[test]
    fn trace_of_simple_operators() {
        for w in [WeightModel::gaussian(), power2()] {
            let k = KernelCoeffs::new(&w, 1, 20).unwrap();
            let zero = trace_identity_check(&CMat::zeros(5, 5), &k, 4, 1, 1).unwrap();
            assert_eq!(zero.integral, 0.0);
            // rank-one projector onto u_3
            let mut p = CMat::zeros(5, 5);
            p[(3, 3)] = c(1.0, 0.0);
            let one = trace_identity_check(&p, &k, 4, 1, 1).unwrap();
            assert!((one.integral - 1.0).abs() < 1e-9, "{}", one.integral);
            let id = trace_identity_check(&CMat::identity(5, 5), &k, 4, 1, 1).unwrap();
            assert!((id.integral - 5.0).abs() < 1e-8);
        }
    }

    #[test]
    fn trace_of_random_psd_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (d, n, m) in [(1usize, 9u32, 2usize), (2, 3, 2)] {
            let k = KernelCoeffs::new(&power2(), d, 20).unwrap();
            let dim = up_to_degree(d, n).len() * m;
            let g = random_complex_matrix(&mut rng, dim, dim, 1.0);
            let s = &g * g.adjoint();
            let t = trace_identity_check(&s, &k, n, m, 7).unwrap();
            assert!(t.converged);
            assert!(t.rel_err < 1e-8, "d={d}: {} vs {}", t.integral, t.trace);
        }
    }

    #[test]
    fn trace_rejects_indefinite_operators() {
        let k = KernelCoeffs::new(&WeightModel::gaussian(), 1, 20).unwrap();
        let mut s = CMat::identity(3, 3);
        s[(0, 0)] = c(-1.0, 0.0);
        assert!(matches!(trace_identity_check(&s, &k, 2, 1, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn hs_identity_for_identity_and_coordinate() {
        let k = KernelCoeffs::new(&WeightModel::gaussian(), 1, 30).unwrap();
        let id = MixedPolynomial::constant(1, CMat::identity(2, 2));
        let h = hs_multiplier_identity_check(&id, &k, 6).unwrap();
        assert!((h.direct - 14.0).abs() < 1e-10);
        assert!(h.rel_err < 1e-8);
        let mut zr = MixedPolynomial::zero(1, 1);
        zr.add_term(MultiIndex::unit(1, 0), MultiIndex::zero(1), CMat::identity(1, 1)).unwrap();
        let h = hs_multiplier_identity_check(&zr, &k, 10).unwrap();
        // ‖z u_n‖² = w_{n+1}/w_n = n + 1
        assert!((h.direct - 66.0).abs() < 1e-9);
        assert!(h.rel_err < 1e-8);
        let zero = hs_multiplier_identity_check(&MixedPolynomial::zero(1, 1), &k, 4).unwrap();
        assert_eq!((zero.direct, zero.integral), (0.0, 0.0));
    }

    #[test]
    fn constant_multipliers_are_contractive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = KernelCoeffs::new(&power2(), 2, 20).unwrap();
        let cm = random_complex_matrix(&mut rng, 3, 3, 1.0);
        let r = MixedPolynomial::constant(2, cm.clone());
        let grid = Grid::default_for(2);
        let rep = contractivity_check(&r, &k, 4, &grid).unwrap();
        assert!((rep.operator_norm - spectral_norm(&cm)).abs() < 1e-10);
        assert!(rep.pass);
    }
}
