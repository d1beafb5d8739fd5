//! The big Hankel operator `H_{T*} f = (I − P_φ)(T* f)` compressed to
//! holomorphic polynomials of total degree `≤ N`, assembled exactly from
//! monomial norms.
//!
//! The domain basis is `u_ν ⊗ f_j` with `u_ν = w^ν/√w_ν`. Since
//! `P_φ(w̄^γ w^ν) = (w_ν/w_{ν−γ}) w^{ν−γ}` when `ν ≥ γ` and `0` otherwise,
//! `H_{T*}(u_ν ⊗ f_j) = Σ_γ A_γ* f_j ⊗ (w̄^γ w^ν − [ν ≥ γ](w_ν/w_{ν−γ}) w^{ν−γ})/√w_ν`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{norm_sq, KernelCoeffs};
use crate::linalg::{c, hermitian_eigenvalues, unitary_to_direction, CMat};
use crate::mixed::{MixedExpansion, MixedKey};
use crate::multi_index::{up_to_degree, MultiIndex, C64};
use crate::symbols::OperatorSymbol;

/// Default truncation degree: 14 for `d = 1`, 8 otherwise.
pub fn default_degree(d: usize) -> u32 {
    if d == 1 {
        14
    } else {
        8
    }
}

pub(crate) fn check_table(coeffs: &KernelCoeffs, needed: u32) -> Result<()> {
    if needed as usize > coeffs.kmax() {
        return Err(Error::Range(format!(
            "Hankel assembly needs monomial norms up to degree {needed}, table stops at {}; increase kmax",
            coeffs.kmax()
        )));
    }
    Ok(())
}

/// Images of `u_ν ⊗ f_j` for all `j` at once (column `j`).
pub fn hankel_image(t: &OperatorSymbol, coeffs: &KernelCoeffs, nu: &MultiIndex) -> MixedExpansion {
    let m = t.m();
    let mut out = MixedExpansion::new(m, m);
    let ln_w_nu = coeffs.ln_w(nu);
    for (gamma, a) in t.terms() {
        if gamma.is_zero() {
            continue;
        }
        let a_adj = a.adjoint();
        let up = nu.add(gamma);
        let lift = (0.5 * (coeffs.ln_w(&up) - ln_w_nu)).exp();
        out.add(MixedKey::new(gamma.clone(), nu.clone()), &a_adj * c(lift, 0.0));
        if let Some(down) = nu.checked_sub(gamma) {
            let proj = (0.5 * (ln_w_nu - coeffs.ln_w(&down))).exp();
            out.add(MixedKey::holomorphic(down), &a_adj * c(-proj, 0.0));
        }
    }
    out.terms.retain(|_, v| v.iter().any(|x| *x != c(0.0, 0.0)));
    out
}

/// `H_{T*}(u_ν ⊗ f_j)` as a single-column expansion.
pub fn hankel_apply_basis(t: &OperatorSymbol, coeffs: &KernelCoeffs, nu: &MultiIndex, j: usize) -> MixedExpansion {
    let full = hankel_image(t, coeffs, nu);
    let mut out = MixedExpansion::new(t.m(), 1);
    for (k, v) in full.terms {
        out.add(k, v.columns(j, 1).into_owned());
    }
    out
}

/// `H_{T*}(Σ_ν u_ν ⊗ V_ν)` for `m × cols` blocks `V_ν`.
pub fn hankel_apply_combination(
    t: &OperatorSymbol,
    coeffs: &KernelCoeffs,
    combo: &[(MultiIndex, CMat)],
) -> Result<MixedExpansion> {
    let cols = combo.first().map(|(_, v)| v.ncols()).unwrap_or(1);
    let max_deg = combo.iter().map(|(nu, _)| nu.degree()).max().unwrap_or(0);
    check_table(coeffs, max_deg + 2 * t.degree())?;
    let parts: Vec<MixedExpansion> = combo
        .par_iter()
        .map(|(nu, v)| {
            let img = hankel_image(t, coeffs, nu);
            let mut out = MixedExpansion::new(t.m(), cols);
            for (k, a) in img.terms {
                out.add(k, a * v);
            }
            out
        })
        .collect();
    let mut out = MixedExpansion::new(t.m(), cols);
    for p in parts {
        for (k, v) in p.terms {
            out.add(k, v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TruncatedHankel {
    pub symbol: OperatorSymbol,
    pub degree: u32,
    pub basis: Vec<MultiIndex>,
    pub images: Vec<MixedExpansion>,
    /// `M[(ν,a),(ν′,b)] = ⟨H e_{ν′b}, H e_{νa}⟩`
    pub gram: CMat,
    pub warnings: Vec<String>,
}

pub fn assemble_hankel(t: &OperatorSymbol, coeffs: &KernelCoeffs, n: u32) -> Result<TruncatedHankel> {
    if t.d() != coeffs.d() {
        return Err(Error::Precondition(format!(
            "symbol has d = {} but the kernel has d = {}",
            t.d(),
            coeffs.d()
        )));
    }
    check_table(coeffs, n + 2 * t.degree())?;
    let mut warnings = Vec::new();
    if n < t.degree() {
        warnings.push(format!("truncation degree {n} is below the symbol degree {}", t.degree()));
    }
    let basis = up_to_degree(t.d(), n);
    let images: Vec<MixedExpansion> = basis.par_iter().map(|nu| hankel_image(t, coeffs, nu)).collect();
    let gram = block_gram(&images, coeffs, t.m());
    Ok(TruncatedHankel {
        symbol: t.clone(),
        degree: n,
        basis,
        images,
        gram,
        warnings,
    })
}

/// Hermitian matrix of pairwise inner products between the columns of
/// `images`, each of which carries `m` columns.
pub fn block_gram(images: &[MixedExpansion], coeffs: &KernelCoeffs, m: usize) -> CMat {
    let dim = images.len() * m;
    let indexed: Vec<_> = images.iter().map(|e| e.indexed()).collect();
    let rows: Vec<Vec<(usize, CMat)>> = (0..images.len())
        .into_par_iter()
        .map(|a| {
            (a..images.len())
                .map(|b| (b, indexed[a].gram(&indexed[b], coeffs)))
                .collect()
        })
        .collect();
    let mut gram = CMat::zeros(dim, dim);
    for (a, row) in rows.into_iter().enumerate() {
        for (b, block) in row {
            gram.view_mut((a * m, b * m), (m, m)).copy_from(&block);
            if a != b {
                gram.view_mut((b * m, a * m), (m, m)).copy_from(&block.adjoint());
            }
        }
    }
    gram
}

impl TruncatedHankel {
    pub fn dimension(&self) -> usize {
        self.gram.nrows()
    }

    /// Singular values, nonincreasing.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let eig = hermitian_eigenvalues(&self.gram)?;
        let top = eig.first().copied().unwrap_or(0.0).abs();
        if let Some(&low) = eig.last() {
            if low < -1e-9 * top.max(1e-300) && low < -1e-300 {
                return Err(Error::Consistency(format!(
                    "Hankel Gram matrix has eigenvalue {low:e} (largest {top:e})"
                )));
            }
        }
        Ok(eig.into_iter().map(|l| l.max(0.0).sqrt()).collect())
    }

    pub fn operator_norm(&self) -> Result<f64> {
        Ok(self.singular_values()?.first().copied().unwrap_or(0.0))
    }

    /// `(Σ s_n^p)^{1/p}` for `p ≥ 1`.
    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Precondition(format!("Schatten exponent {p} must be ≥ 1")));
        }
        let s = self.singular_values()?;
        Ok(s.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p))
    }

    /// `Σ s_n² = tr M`.
    pub fn hs_norm_sq(&self) -> f64 {
        self.gram.diagonal().iter().map(|x| x.re).sum()
    }

    /// `‖H_{T*} f‖²` for `f = Σ_ν u_ν ⊗ x_ν`, coefficients ordered like the basis.
    pub fn norm_sq_of(&self, coords: &[C64]) -> f64 {
        let v = crate::linalg::CVec::from_column_slice(coords);
        (v.adjoint() * &self.gram * &v)[(0, 0)].re
    }
}

/// Kernel vector `k_z` at `ρ e₁` as a combination of `u_{(n,0,…)}`, `n ≤ L`,
/// with `L` chosen so the omitted mass of `|k_z|²` is below `e^{−90}`.
pub fn kernel_vector_radial(coeffs: &KernelCoeffs, rho: f64) -> Result<Vec<(MultiIndex, f64)>> {
    let d = coeffs.d();
    let r = rho * rho;
    let l = coeffs.series_degree(r)?;
    let ln_f = coeffs.radial_stats(r)?.ln_f(coeffs.weight());
    let ln_r = if r > 0.0 { r.ln() } else { f64::NEG_INFINITY };
    let mut out = Vec::with_capacity(l + 1);
    for n in 0..=l {
        let ln_p = if n == 0 { coeffs.ln_f(0) - ln_f } else { coeffs.ln_f(n) + n as f64 * ln_r - ln_f };
        if ln_p < -200.0 {
            continue;
        }
        let mut nu = MultiIndex::zero(d);
        nu.0[0] = n as u32;
        out.push((nu, (0.5 * ln_p).exp()));
    }
    Ok(out)
}

/// `N(z) = H_{T*}(k_z ·)` as an expansion with `m` columns (column `i` is
/// `H_{T*}(k_z e_i)`), computed in a frame where `z = |z| e₁`.
pub fn hankel_kernel_columns(t: &OperatorSymbol, coeffs: &KernelCoeffs, z: &[C64]) -> Result<MixedExpansion> {
    let rho = norm_sq(z).sqrt();
    let s = if rho > 0.0 { t.compose_unitary(&unitary_to_direction(z)) } else { t.clone() };
    let kv = kernel_vector_radial(coeffs, rho)?;
    let id = CMat::identity(t.m(), t.m());
    let combo: Vec<(MultiIndex, CMat)> = kv.into_iter().map(|(nu, a)| (nu, &id * c(a, 0.0))).collect();
    hankel_apply_combination(&s, coeffs, &combo)
}

/// `[⟨N(z)e_j, N(z)e_i⟩]_{ij}`, equal to `MO²T*(z)`.
pub fn hankel_kernel_gram(t: &OperatorSymbol, coeffs: &KernelCoeffs, z: &[C64]) -> Result<CMat> {
    let cols = hankel_kernel_columns(t, coeffs, z)?;
    Ok(crate::linalg::hermitian_part(&cols.gram(&cols, coeffs)))
}

/// `‖H_{T*}(k_z e)‖` for a unit vector `e`.
pub fn hankel_on_kernel(t: &OperatorSymbol, coeffs: &KernelCoeffs, z: &[C64], e: &[C64]) -> Result<f64> {
    let n = e.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("vector must be a unit vector, has norm {n}")));
    }
    let g = hankel_kernel_gram(t, coeffs, z)?;
    let v = crate::linalg::CVec::from_column_slice(e);
    Ok((v.adjoint() * g * &v)[(0, 0)].re.max(0.0).sqrt())
}
