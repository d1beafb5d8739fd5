//! Non-holomorphic elements of `L²_φ(ℂ^m)` spanned by mixed monomials
//! `w̄^γ w^μ`, with exact inner products from the monomial norms:
//! `⟨w̄^γ w^μ, w̄^{γ′} w^{μ′}⟩ = [μ − γ = μ′ − γ′] · w_{μ+γ′}`.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::kernel::KernelCoeffs;
use crate::linalg::{c, CMat};
use crate::multi_index::{MultiIndex, C64};
use crate::symbols::OperatorSymbol;

/// The monomial `w̄^conj · w^holo`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MixedKey {
    pub conj: MultiIndex,
    pub holo: MultiIndex,
}

impl MixedKey {
    pub fn new(conj: MultiIndex, holo: MultiIndex) -> Self {
        MixedKey { conj, holo }
    }

    pub fn holomorphic(holo: MultiIndex) -> Self {
        let d = holo.dim();
        MixedKey {
            conj: MultiIndex::zero(d),
            holo,
        }
    }

    /// `holo − conj`; only equal charges have nonzero inner product.
    pub fn charge(&self) -> Vec<i64> {
        self.holo.charge(&self.conj)
    }

    /// `ln ‖w̄^γ w^μ‖² = ln w_{γ+μ}`.
    pub fn ln_norm_sq(&self, coeffs: &KernelCoeffs) -> f64 {
        coeffs.ln_w(&self.conj.add(&self.holo))
    }

    pub fn degree(&self) -> u32 {
        self.conj.degree() + self.holo.degree()
    }
}

/// Inner product of normalised monomials `w̄^γ w^μ/√w_{γ+μ}`.
pub fn normalized_gram(coeffs: &KernelCoeffs, a: &MixedKey, b: &MixedKey) -> f64 {
    if a.charge() != b.charge() {
        return 0.0;
    }
    let cross = coeffs.ln_w(&a.holo.add(&b.conj));
    (cross - 0.5 * (a.ln_norm_sq(coeffs) + b.ln_norm_sq(coeffs))).exp()
}

/// `cols` elements of `L²_φ(ℂ^m)` at once: column `j` of each `m × cols`
/// coefficient is the vector multiplying the normalised monomial of its key.
#[derive(Debug, Clone)]
pub struct MixedExpansion {
    pub m: usize,
    pub cols: usize,
    pub terms: BTreeMap<MixedKey, CMat>,
}

impl MixedExpansion {
    pub fn new(m: usize, cols: usize) -> Self {
        MixedExpansion {
            m,
            cols,
            terms: BTreeMap::new(),
        }
    }

    /// Adds `coef` (relative to the normalised monomial of `key`).
    pub fn add(&mut self, key: MixedKey, coef: CMat) {
        debug_assert_eq!((coef.nrows(), coef.ncols()), (self.m, self.cols));
        let entry = self.terms.entry(key).or_insert_with(|| CMat::zeros(coef.nrows(), coef.ncols()));
        *entry += coef;
    }

    /// Adds `coef · w̄^γ w^μ` given relative to the unnormalised monomial.
    pub fn add_unnormalized(&mut self, coeffs: &KernelCoeffs, key: MixedKey, coef: CMat) {
        let scale = (0.5 * key.ln_norm_sq(coeffs)).exp();
        self.add(key, coef * c(scale, 0.0));
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    pub fn indexed(&self) -> ChargeIndexed<'_> {
        let mut groups: HashMap<Vec<i64>, Vec<(&MixedKey, &CMat)>> = HashMap::new();
        for (k, v) in &self.terms {
            groups.entry(k.charge()).or_default().push((k, v));
        }
        ChargeIndexed { m: self.m, cols: self.cols, groups }
    }

    /// `G[a,b] = ⟨other_b, self_a⟩`.
    pub fn gram(&self, other: &MixedExpansion, coeffs: &KernelCoeffs) -> CMat {
        self.indexed().gram(&other.indexed(), coeffs)
    }

    /// Squared norm of each column.
    pub fn norms_sq(&self, coeffs: &KernelCoeffs) -> Vec<f64> {
        let g = self.gram(self, coeffs);
        (0..self.cols).map(|j| g[(j, j)].re).collect()
    }
}

/// A [`MixedExpansion`] grouped by charge for repeated Gram evaluations.
pub struct ChargeIndexed<'a> {
    pub m: usize,
    pub cols: usize,
    groups: HashMap<Vec<i64>, Vec<(&'a MixedKey, &'a CMat)>>,
}

impl ChargeIndexed<'_> {
    pub fn gram(&self, other: &ChargeIndexed<'_>, coeffs: &KernelCoeffs) -> CMat {
        let mut out = CMat::zeros(self.cols, other.cols);
        for (charge, mine) in &self.groups {
            let Some(theirs) = other.groups.get(charge) else {
                continue;
            };
            for (ka, va) in mine {
                let adj = va.adjoint();
                for (kb, vb) in theirs {
                    let g = normalized_gram(coeffs, ka, kb);
                    if g != 0.0 {
                        out += &adj * *vb * c(g, 0.0);
                    }
                }
            }
        }
        out
    }
}

/// `R(w) = Σ C_{αβ} w^α w̄^β` with `m × m` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPolynomial {
    pub d: usize,
    pub m: usize,
    /// key: (α, β)
    pub terms: BTreeMap<(MultiIndex, MultiIndex), CMat>,
}

impl MixedPolynomial {
    pub fn zero(d: usize, m: usize) -> Self {
        MixedPolynomial {
            d,
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn add_term(&mut self, alpha: MultiIndex, beta: MultiIndex, coef: CMat) -> Result<()> {
        if alpha.dim() != self.d || beta.dim() != self.d {
            return Err(Error::Precondition(format!(
                "exponents ({alpha}, {beta}) do not match d = {}",
                self.d
            )));
        }
        if coef.nrows() != self.m || coef.ncols() != self.m {
            return Err(Error::Precondition(format!("coefficient must be {m}×{m}", m = self.m)));
        }
        let e = self
            .terms
            .entry((alpha, beta))
            .or_insert_with(|| CMat::zeros(coef.nrows(), coef.ncols()));
        *e += coef;
        Ok(())
    }

    pub fn constant(d: usize, coef: CMat) -> Self {
        let mut p = Self::zero(d, coef.nrows());
        p.add_term(MultiIndex::zero(d), MultiIndex::zero(d), coef).expect("square");
        p
    }

    /// `T(w)` viewed as a mixed polynomial.
    pub fn from_holomorphic(t: &OperatorSymbol) -> Self {
        let mut p = Self::zero(t.d(), t.m());
        for (g, a) in t.terms() {
            p.add_term(g.clone(), MultiIndex::zero(t.d()), a.clone()).expect("shapes");
        }
        p
    }

    /// `T(w) T(w)* = Σ A_α A_β* w^α w̄^β`.
    pub fn gram_of_symbol(t: &OperatorSymbol) -> Self {
        let mut p = Self::zero(t.d(), t.m());
        for (a, ca) in t.terms() {
            for (b, cb) in t.terms() {
                p.add_term(a.clone(), b.clone(), ca * cb.adjoint()).expect("shapes");
            }
        }
        p
    }

    /// The polynomial `w ↦ R(Uw)`.
    pub fn compose_unitary(&self, u: &CMat) -> MixedPolynomial {
        let d = self.d;
        let rows: Vec<Vec<(usize, C64)>> = (0..d)
            .map(|i| (0..d).filter(|&j| u[(i, j)] != c(0.0, 0.0)).map(|j| (j, u[(i, j)])).collect())
            .collect();
        // (Uw)^α as a scalar polynomial in w
        let expand = |alpha: &MultiIndex| -> BTreeMap<MultiIndex, C64> {
            let mut p: BTreeMap<MultiIndex, C64> = [(MultiIndex::zero(d), c(1.0, 0.0))].into_iter().collect();
            for (i, &e) in alpha.0.iter().enumerate() {
                for _ in 0..e {
                    let mut next = BTreeMap::new();
                    for (mono, coef) in &p {
                        for &(j, uij) in &rows[i] {
                            *next.entry(mono.add(&MultiIndex::unit(d, j))).or_insert(c(0.0, 0.0)) += coef * uij;
                        }
                    }
                    p = next;
                }
            }
            p
        };
        let mut out = MixedPolynomial::zero(d, self.m);
        for ((a, b), coef) in &self.terms {
            let pa = expand(a);
            let pb = expand(b);
            for (ea, ca) in &pa {
                for (eb, cb) in &pb {
                    let f = ca * cb.conj();
                    if f != c(0.0, 0.0) {
                        out.add_term(ea.clone(), eb.clone(), coef * f).expect("shapes");
                    }
                }
            }
        }
        out
    }

    pub fn eval(&self, w: &[C64]) -> CMat {
        let mut out = CMat::zeros(self.m, self.m);
        for ((a, b), coef) in &self.terms {
            out += coef * (a.monomial(w) * b.monomial(w).conj());
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b)| a.degree() + b.degree()).max().unwrap_or(0)
    }

    /// `R · (w^ν/√w_ν) ⊗ I_m` as a mixed expansion with `m` columns.
    pub fn apply_to_basis(&self, coeffs: &KernelCoeffs, nu: &MultiIndex) -> MixedExpansion {
        let mut out = MixedExpansion::new(self.m, self.m);
        let inv = (-0.5 * coeffs.ln_w(nu)).exp();
        for ((a, b), coef) in &self.terms {
            let key = MixedKey::new(b.clone(), nu.add(a));
            out.add_unnormalized(coeffs, key, coef * c(inv, 0.0));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightModel;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn gaussian_mixed_norms() {
        // ‖w̄ w²‖² = w_3 = π·3! and ⟨w̄w², w⟩ = w_2 = 2π
        let k = KernelCoeffs::new(&WeightModel::gaussian(), 1, 20).unwrap();
        let a = MixedKey::new(mi(&[1]), mi(&[2]));
        let b = MixedKey::holomorphic(mi(&[1]));
        assert!((a.ln_norm_sq(&k) - (6.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        let g = normalized_gram(&k, &a, &b);
        let exact = 2.0 * std::f64::consts::PI / (6.0 * std::f64::consts::PI * std::f64::consts::PI).sqrt();
        assert!((g - exact).abs() < 1e-12);
        assert_eq!(normalized_gram(&k, &a, &MixedKey::holomorphic(mi(&[2]))), 0.0);
    }

    #[test]
    fn gram_matches_quadrature() {
        // d = 1 check of ⟨w̄^γ w^μ, w̄^γ′ w^μ′⟩ against 2-D quadrature
        let w = crate::weights::make_weight(crate::weights::WeightFamily::Power { s: 2.0 }).unwrap();
        let k = KernelCoeffs::new(&w, 1, 20).unwrap();
        let a = MixedKey::new(mi(&[2]), mi(&[3]));
        let b = MixedKey::new(mi(&[1]), mi(&[2]));
        let exact = normalized_gram(&k, &a, &b) * (0.5 * (a.ln_norm_sq(&k) + b.ln_norm_sq(&k))).exp();
        // angular integral is 2π (charges match); radial ∫ ρ^{2+3+1+2} e^{−ρ⁴} ρ dρ
        let r = crate::quadrature::adaptive(|p: f64| p.powi(9) * (-p.powi(4)).exp(), 0.0, 6.0, 1e-13, 0.0);
        assert!((exact - 2.0 * std::f64::consts::PI * r.value).abs() < 1e-10 * exact);
    }

    #[test]
    fn mixed_polynomial_eval() {
        let mut p = MixedPolynomial::zero(1, 1);
        p.add_term(mi(&[1]), mi(&[1]), CMat::from_element(1, 1, c(2.0, 0.0))).unwrap();
        let z = vec![c(1.0, 2.0)];
        assert!((p.eval(&z)[(0, 0)] - c(10.0, 0.0)).norm() < 1e-14);
    }
}
