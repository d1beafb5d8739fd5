//! Polynomial operator-valued symbols `T(z) = Σ_γ A_γ z^γ` with `m × m`
//! coefficients, and the quantities built from their derivatives: `Q_T`,
//! Bloch and Berg norms, Lipschitz ratios and Fejér means.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::{norm_sq, BergmanData, KernelCoeffs};
use crate::linalg::{c, psd_norm, random_complex_matrix, random_unit_vector, spectral_norm, CMat, CVec};
use crate::multi_index::{up_to_degree, MultiIndex, C64};

/// Largest degree accepted by default.
pub const DEFAULT_MAX_DEGREE: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSymbol {
    d: usize,
    m: usize,
    terms: BTreeMap<MultiIndex, CMat>,
}

/// Scalar polynomial used during substitution.
type Poly = BTreeMap<MultiIndex, C64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            *out.entry(ea.add(eb)).or_insert(c(0.0, 0.0)) += ca * cb;
        }
    }
    out
}

impl OperatorSymbol {
    pub fn zero(d: usize, m: usize) -> Self {
        OperatorSymbol {
            d,
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, CMat)>>(d: usize, m: usize, terms: I) -> Result<Self> {
        let mut s = Self::zero(d, m);
        for (gamma, a) in terms {
            s.add_term(gamma, a)?;
        }
        Ok(s)
    }

    /// Adds `A z^γ` to the symbol.
    pub fn add_term(&mut self, gamma: MultiIndex, a: CMat) -> Result<()> {
        if gamma.dim() != self.d {
            return Err(Error::Precondition(format!(
                "multi-index {gamma} has dimension {} but the symbol has d = {}",
                gamma.dim(),
                self.d
            )));
        }
        if a.nrows() != self.m || a.ncols() != self.m {
            return Err(Error::Precondition(format!(
                "coefficient of {gamma} is {}×{}, expected {m}×{m}",
                a.nrows(),
                a.ncols(),
                m = self.m
            )));
        }
        let entry = self.terms.entry(gamma).or_insert_with(|| CMat::zeros(a.nrows(), a.ncols()));
        *entry += a;
        Ok(())
    }

    pub fn constant(d: usize, a: CMat) -> Self {
        let m = a.nrows();
        Self::from_terms(d, m, [(MultiIndex::zero(d), a)]).expect("square constant")
    }

    pub fn monomial(gamma: MultiIndex, a: CMat) -> Self {
        let d = gamma.dim();
        let m = a.nrows();
        Self::from_terms(d, m, [(gamma, a)]).expect("square coefficient")
    }

    /// Scalar (`m = 1`) polynomial `Σ c_γ z^γ`.
    pub fn scalar(d: usize, coeffs: &[(MultiIndex, C64)]) -> Self {
        Self::from_terms(d, 1, coeffs.iter().map(|(g, v)| (g.clone(), CMat::from_element(1, 1, *v))))
            .expect("scalar terms")
    }

    /// Random symbol with `terms` monomials of degree `1..=max_degree` (and a
    /// random constant term), entries of size about `scale`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, d: usize, m: usize, max_degree: u32, terms: usize, scale: f64) -> Self {
        let pool: Vec<MultiIndex> = up_to_degree(d, max_degree).into_iter().filter(|g| !g.is_zero()).collect();
        let mut s = Self::constant(d, random_complex_matrix(rng, m, m, scale));
        for _ in 0..terms {
            let g = pool[rng.gen_range(0..pool.len())].clone();
            s.add_term(g, random_complex_matrix(rng, m, m, scale)).expect("consistent shapes");
        }
        s
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|g| g.degree()).max().unwrap_or(0)
    }

    /// Largest exponent of any single coordinate.
    pub fn coordinate_degree(&self) -> u32 {
        self.terms.keys().flat_map(|g| g.0.iter().copied()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &CMat)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, gamma: &MultiIndex) -> Option<&CMat> {
        self.terms.get(gamma)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(g, a)| g.is_zero() || a.iter().all(|x| *x == c(0.0, 0.0)))
    }

    pub fn constant_term(&self) -> CMat {
        self.terms
            .get(&MultiIndex::zero(self.d))
            .cloned()
            .unwrap_or_else(|| CMat::zeros(self.m, self.m))
    }

    pub fn add(&self, other: &OperatorSymbol) -> Result<OperatorSymbol> {
        let mut out = self.clone();
        for (g, a) in &other.terms {
            out.add_term(g.clone(), a.clone())?;
        }
        Ok(out)
    }

    pub fn scale(&self, factor: C64) -> OperatorSymbol {
        OperatorSymbol {
            d: self.d,
            m: self.m,
            terms: self.terms.iter().map(|(g, a)| (g.clone(), a * factor)).collect(),
        }
    }

    pub fn sub(&self, other: &OperatorSymbol) -> Result<OperatorSymbol> {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    /// `T(z)`.
    pub fn eval(&self, z: &[C64]) -> CMat {
        let mut out = CMat::zeros(self.m, self.m);
        for (g, a) in &self.terms {
            out += a * g.monomial(z);
        }
        out
    }

    /// `D_k T(z) = ∂T/∂z_k (z)`.
    pub fn derivative(&self, k: usize, z: &[C64]) -> CMat {
        let mut out = CMat::zeros(self.m, self.m);
        for (g, a) in &self.terms {
            if let Some((factor, lower)) = g.derivative(k) {
                out += a * (lower.monomial(z) * factor);
            }
        }
        out
    }

    pub fn derivatives(&self, z: &[C64]) -> SymbolDerivatives {
        let grad: Vec<CMat> = (0..self.d).map(|k| self.derivative(k, z)).collect();
        let mut radial = CMat::zeros(self.m, self.m);
        for (k, dk) in grad.iter().enumerate() {
            radial += dk * z[k];
        }
        let mut tangential = Vec::new();
        for i in 0..self.d {
            for j in i + 1..self.d {
                tangential.push(((i, j), &grad[j] * z[i].conj() - &grad[i] * z[j].conj()));
            }
        }
        SymbolDerivatives {
            value: self.eval(z),
            grad,
            radial,
            tangential,
        }
    }

    /// The symbol `z ↦ T(Uz)`.
    pub fn compose_unitary(&self, u: &CMat) -> OperatorSymbol {
        let d = self.d;
        // (Uz)_i as a linear polynomial in z
        let rows: Vec<Poly> = (0..d)
            .map(|i| {
                (0..d)
                    .filter(|&j| u[(i, j)] != c(0.0, 0.0))
                    .map(|j| (MultiIndex::unit(d, j), u[(i, j)]))
                    .collect()
            })
            .collect();
        let mut out = OperatorSymbol::zero(d, self.m);
        for (g, a) in &self.terms {
            let mut p: Poly = [(MultiIndex::zero(d), c(1.0, 0.0))].into_iter().collect();
            for (i, &e) in g.0.iter().enumerate() {
                for _ in 0..e {
                    p = poly_mul(&p, &rows[i]);
                }
            }
            for (e, coef) in p {
                if coef != c(0.0, 0.0) {
                    out.add_term(e, a * coef).expect("consistent shapes");
                }
            }
        }
        out
    }

    /// Fejér mean `T_N`: coefficients scaled by `Π_j max(0, 1 − γ_j/(N+1))`.
    pub fn fejer(&self, n: u32) -> OperatorSymbol {
        let mut out = OperatorSymbol::zero(self.d, self.m);
        for (g, a) in &self.terms {
            let mult = fejer_multiplier(g, n);
            if mult > 0.0 {
                out.terms.insert(g.clone(), a * c(mult, 0.0));
            }
        }
        out
    }

    /// `‖T(z) − T(w)‖`.
    pub fn difference_norm(&self, z: &[C64], w: &[C64]) -> f64 {
        spectral_norm(&(self.eval(z) - self.eval(w)))
    }
}

pub fn fejer_multiplier(gamma: &MultiIndex, n: u32) -> f64 {
    gamma
        .0
        .iter()
        .map(|&g| (1.0 - g as f64 / (n as f64 + 1.0)).max(0.0))
        .product()
}

/// `T(z)`, `D_kT(z)`, `RT(z) = Σ z_k D_kT(z)` and `T_ij = z̄_i D_jT − z̄_j D_iT`.
#[derive(Debug, Clone)]
pub struct SymbolDerivatives {
    pub value: CMat,
    pub grad: Vec<CMat>,
    pub radial: CMat,
    pub tangential: Vec<((usize, usize), CMat)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QRoute {
    /// `Σ_ij conj(B⁻¹)_ij D_jT (D_iT)*`
    Qt,
    /// radial/tangential split with `λ`, `μ` (needs `z ≠ 0`)
    B2,
    /// `Σ_j C_j C_j*`, `C_j = Σ_k c_kj D_kT`, `c = B^{−1/2}`
    Cj,
}

#[derive(Debug, Clone)]
pub struct QMatrix {
    pub z: Vec<C64>,
    pub q: CMat,
    pub route: QRoute,
}

impl QMatrix {
    /// `‖Q_T(z)‖`; slightly negative eigenvalues from rounding count as zero.
    pub fn norm(&self) -> f64 {
        psd_norm(&self.q)
    }

    pub fn sqrt_norm(&self) -> f64 {
        self.norm().sqrt()
    }
}

pub fn q_matrix(t: &OperatorSymbol, bd: &BergmanData, route: QRoute) -> Result<QMatrix> {
    let z = &bd.z;
    if z.len() != t.d() {
        return Err(Error::Precondition(format!(
            "point has dimension {} but the symbol has d = {}",
            z.len(),
            t.d()
        )));
    }
    let m = t.m();
    let der = t.derivatives(z);
    let mut q = CMat::zeros(m, m);
    match route {
        QRoute::Qt => {
            for i in 0..t.d() {
                for j in 0..t.d() {
                    let coef = bd.b_inv[(i, j)].conj();
                    if coef != c(0.0, 0.0) {
                        q += &der.grad[j] * der.grad[i].adjoint() * coef;
                    }
                }
            }
        }
        QRoute::B2 => {
            let r = norm_sq(z);
            if r == 0.0 {
                return Err(Error::Precondition(
                    "the radial/tangential form of Q_T is undefined at z = 0; use the qt route".into(),
                ));
            }
            q += &der.radial * der.radial.adjoint() * c(1.0 / (bd.lambda * r), 0.0);
            for (_, tij) in &der.tangential {
                q += tij * tij.adjoint() * c(1.0 / (bd.mu * r), 0.0);
            }
        }
        QRoute::Cj => {
            for j in 0..t.d() {
                let mut cj = CMat::zeros(m, m);
                for k in 0..t.d() {
                    cj += &der.grad[k] * bd.b_inv_sqrt[(k, j)];
                }
                q += &cj * cj.adjoint();
            }
        }
    }
    Ok(QMatrix {
        z: z.clone(),
        q: crate::linalg::hermitian_part(&q),
        route,
    })
}

/// `Q_T(z)` on the default route.
pub fn q_at(t: &OperatorSymbol, coeffs: &KernelCoeffs, z: &[C64]) -> Result<QMatrix> {
    q_matrix(t, &coeffs.bergman_data(z)?, QRoute::Qt)
}

#[derive(Debug, Clone, Serialize)]
pub struct BlochReport {
    /// `‖T(0)‖ + max ‖Q_T(z)‖^{1/2}` over the grid (and the origin).
    pub norm: f64,
    pub t0_norm: f64,
    pub seminorm: f64,
    pub argmax: Vec<[f64; 2]>,
    pub points: usize,
}

fn as_pairs(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|x| [x.re, x.im]).collect()
}

/// `max ‖Q_T(z)‖^{1/2}` over the given points, with the maximiser.
fn seminorm_over(t: &OperatorSymbol, coeffs: &KernelCoeffs, points: &[Vec<C64>]) -> Result<(f64, Vec<C64>)> {
    let vals: Vec<Result<f64>> = points
        .par_iter()
        .map(|z| Ok(q_at(t, coeffs, z)?.sqrt_norm()))
        .collect();
    let mut best = (f64::NEG_INFINITY, vec![c(0.0, 0.0); t.d()]);
    for (v, z) in vals.into_iter().zip(points) {
        let v = v?;
        if v > best.0 {
            best = (v, z.clone());
        }
    }
    Ok(best)
}

pub fn bloch_norm(t: &OperatorSymbol, coeffs: &KernelCoeffs, grid: &Grid) -> Result<BlochReport> {
    if grid.is_empty() {
        return Err(Error::Precondition("Bloch norm needs a nonempty grid".into()));
    }
    let mut points = grid.points();
    points.push(vec![c(0.0, 0.0); t.d()]);
    let (seminorm, argmax) = seminorm_over(t, coeffs, &points)?;
    let t0_norm = spectral_norm(&t.constant_term());
    Ok(BlochReport {
        norm: t0_norm + seminorm,
        t0_norm,
        seminorm,
        argmax: as_pairs(&argmax),
        points: points.len(),
    })
}

/// `E(z)/‖Q_T(z)‖^{1/2}` with `E(z) = sup_ξ ‖Σ ξ_k D_kT(z)‖/β(z,ξ)` sampled over
/// `samples` random unit directions, the canonical basis and the columns of
/// `B(z)^{−1/2}`. Returns `None` when `Q_T(z) = 0`.
pub fn e_norm_ratio<R: Rng + ?Sized>(
    t: &OperatorSymbol,
    coeffs: &KernelCoeffs,
    z: &[C64],
    samples: usize,
    rng: &mut R,
) -> Result<Option<f64>> {
    let bd = coeffs.bergman_data(z)?;
    let q = q_matrix(t, &bd, QRoute::Qt)?.sqrt_norm();
    if q == 0.0 {
        return Ok(None);
    }
    let d = t.d();
    let grad: Vec<CMat> = (0..d).map(|k| t.derivative(k, z)).collect();
    let mut dirs: Vec<CVec> = (0..samples).map(|_| random_unit_vector(rng, d)).collect();
    for k in 0..d {
        let mut e = CVec::zeros(d);
        e[k] = c(1.0, 0.0);
        dirs.push(e);
        dirs.push(bd.b_inv_sqrt.column(k).into_owned());
    }
    let mut e_max: f64 = 0.0;
    for xi in &dirs {
        let mut acc = CMat::zeros(t.m(), t.m());
        for (k, g) in grad.iter().enumerate() {
            acc += g * xi[k];
        }
        let xi_v: Vec<C64> = xi.iter().copied().collect();
        let beta = bd.metric(&xi_v);
        if beta > 0.0 {
            e_max = e_max.max(spectral_norm(&acc) / beta);
        }
    }
    Ok(Some(e_max / q))
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub max: f64,
}

/// Number of radii in a tail sweep by default.
pub const TAIL_STEPS: usize = 8;

/// `max ‖Q_T(z)‖^{1/2}` over `|z| ∈ {R, 1.25R, …, 1.25^{steps−1}R}` and the given directions.
pub fn little_bloch_tail(
    t: &OperatorSymbol,
    coeffs: &KernelCoeffs,
    r: f64,
    steps: usize,
    directions: &[Vec<C64>],
) -> Result<TailReport> {
    if !(r > 0.0) || steps == 0 {
        return Err(Error::Precondition(format!("tail sweep needs R > 0 and at least one radius, got R = {r}")));
    }
    let radii: Vec<f64> = (0..steps as i32).map(|i| r * 1.25f64.powi(i)).collect();
    let mut values = Vec::with_capacity(radii.len());
    for &rad in &radii {
        let pts: Vec<Vec<C64>> = directions.iter().map(|u| u.iter().map(|x| x * rad).collect()).collect();
        values.push(seminorm_over(t, coeffs, &pts)?.0);
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(TailReport { radii, values, max })
}

#[derive(Debug, Clone, Serialize)]
pub struct BergReport {
    pub norm: f64,
    pub t0_norm: f64,
    pub max_quotient: f64,
    /// The distance is an upper bound, so the quotient is a lower bound.
    pub lower_bound: bool,
}

/// Bergman distance bounds of the given pairs, computed in parallel.
pub fn pair_distances(coeffs: &KernelCoeffs, pairs: &[(Vec<C64>, Vec<C64>)]) -> Result<Vec<f64>> {
    pairs
        .par_iter()
        .map(|(z, w)| Ok(coeffs.bergman_distance(z, w)?.distance))
        .collect()
}

/// `‖T(0)‖ + max ‖T(z) − T(w)‖/d_Ψ(z,w)` over the given pairs.
pub fn berg_norm(t: &OperatorSymbol, coeffs: &KernelCoeffs, pairs: &[(Vec<C64>, Vec<C64>)]) -> Result<BergReport> {
    berg_norm_from(t, pairs, &pair_distances(coeffs, pairs)?)
}

/// [`berg_norm`] with precomputed distances, so several symbols can share them.
pub fn berg_norm_from(t: &OperatorSymbol, pairs: &[(Vec<C64>, Vec<C64>)], distances: &[f64]) -> Result<BergReport> {
    if distances.len() != pairs.len() {
        return Err(Error::Precondition(format!("{} distances for {} pairs", distances.len(), pairs.len())));
    }
    let quotients: Vec<Result<f64>> = pairs
        .iter()
        .zip(distances)
        .map(|((z, w), &dist)| {
            if dist == 0.0 {
                return Err(Error::Precondition("Berg quotient needs z ≠ w".into()));
            }
            Ok(t.difference_norm(z, w) / dist)
        })
        .collect();
    let mut max_quotient: f64 = 0.0;
    for q in quotients {
        max_quotient = max_quotient.max(q?);
    }
    let t0_norm = spectral_norm(&t.constant_term());
    Ok(BergReport {
        norm: t0_norm + max_quotient,
        t0_norm,
        max_quotient,
        lower_bound: true,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub difference: f64,
    pub distance: f64,
    pub seminorm: f64,
    /// `‖T(z) − T(w)‖ / (seminorm · d_Ψ(z,w))`
    pub ratio: f64,
    /// `√d · 1.2`
    pub bound: f64,
    pub pass: bool,
}

/// Seminorm used by [`lipschitz_check`]: the grid maximum, extended by 64
/// points along the straight segment from `z` to `w`.
pub fn path_seminorm(t: &OperatorSymbol, coeffs: &KernelCoeffs, z: &[C64], w: &[C64], grid: &Grid) -> Result<f64> {
    let mut pts = grid.points();
    for i in 0..=64 {
        let s = i as f64 / 64.0;
        pts.push(z.iter().zip(w).map(|(a, b)| a + (b - a) * s).collect());
    }
    Ok(seminorm_over(t, coeffs, &pts)?.0)
}

pub fn lipschitz_check(
    t: &OperatorSymbol,
    coeffs: &KernelCoeffs,
    z: &[C64],
    w: &[C64],
    seminorm: f64,
) -> Result<LipschitzReport> {
    lipschitz_from(t, z, w, coeffs.bergman_distance(z, w)?.distance, seminorm)
}

/// [`lipschitz_check`] with a precomputed distance.
pub fn lipschitz_from(t: &OperatorSymbol, z: &[C64], w: &[C64], dist: f64, seminorm: f64) -> Result<LipschitzReport> {
    if dist == 0.0 {
        return Err(Error::Precondition("Lipschitz ratio needs z ≠ w".into()));
    }
    let difference = t.difference_norm(z, w);
    let ratio = if difference == 0.0 { 0.0 } else { difference / (seminorm * dist) };
    let bound = (t.d() as f64).sqrt() * 1.2;
    Ok(LipschitzReport {
        difference,
        distance: dist,
        seminorm,
        ratio,
        bound,
        pass: ratio <= bound,
    })
}

/// `sup ‖Q_{T_N − T}(z)‖^{1/2}` over the grid for each `N`.
pub fn fejer_sweep(t: &OperatorSymbol, coeffs: &KernelCoeffs, grid: &Grid, ns: &[u32]) -> Result<Vec<f64>> {
    let mut pts = grid.points();
    pts.push(vec![c(0.0, 0.0); t.d()]);
    ns.iter()
        .map(|&n| {
            let diff = t.fejer(n).sub(t)?;
            Ok(seminorm_over(&diff, coeffs, &pts)?.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sphere_directions, GridSpec};
    use crate::linalg::{max_abs_diff, random_unitary};
    use crate::weights::{make_weight, WeightFamily, WeightModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn pt(v: &[(f64, f64)]) -> Vec<C64> {
        v.iter().map(|&(a, b)| c(a, b)).collect()
    }

    fn sample_matrix(seed: u64, m: usize) -> CMat {
        random_complex_matrix(&mut ChaCha8Rng::seed_from_u64(seed), m, m, 1.0)
    }

    #[test]
    fn derivative_examples() {
        let a = sample_matrix(1, 3);
        let t = OperatorSymbol::monomial(mi(&[1, 0]), a.clone());
        let der = t.derivatives(&pt(&[(1.0, 0.0), (2.0, 0.0)]));
        assert!(max_abs_diff(&der.radial, &a) < 1e-15);
        assert_eq!(der.tangential.len(), 1);
        assert!(max_abs_diff(&der.tangential[0].1, &(&a * c(-2.0, 0.0))) < 1e-15);

        let b = sample_matrix(2, 2);
        let t = OperatorSymbol::monomial(mi(&[2]), b.clone());
        let der = t.derivatives(&pt(&[(3.0, 0.0)]));
        assert!(max_abs_diff(&der.grad[0], &(&b * c(6.0, 0.0))) < 1e-14);
        assert!(max_abs_diff(&der.radial, &(&b * c(18.0, 0.0))) < 1e-13);

        let k = OperatorSymbol::constant(2, b);
        let der = k.derivatives(&pt(&[(0.3, 1.0), (-2.0, 0.5)]));
        assert!(der.grad.iter().all(|g| g.iter().all(|x| *x == c(0.0, 0.0))));
        assert!(der.radial.iter().all(|x| *x == c(0.0, 0.0)));
    }

    #[test]
    fn q_examples_for_gaussian() {
        let g = WeightModel::gaussian();
        let k1 = KernelCoeffs::with_default_kmax(&g, 1).unwrap();
        let a = sample_matrix(3, 3);
        let aa = &a * a.adjoint();
        let t = OperatorSymbol::monomial(mi(&[1]), a.clone());
        for z in [pt(&[(0.0, 0.0)]), pt(&[(1.5, -2.0)])] {
            let q = q_at(&t, &k1, &z).unwrap();
            assert!(max_abs_diff(&q.q, &aa) < 1e-10);
        }
        let k2 = KernelCoeffs::with_default_kmax(&g, 2).unwrap();
        let t2 = OperatorSymbol::monomial(mi(&[1, 0]), a.clone());
        let bd = k2.bergman_data(&pt(&[(1.0, 0.0), (1.0, 0.0)])).unwrap();
        for route in [QRoute::Qt, QRoute::B2, QRoute::Cj] {
            let q = q_matrix(&t2, &bd, route).unwrap();
            assert!(max_abs_diff(&q.q, &aa) < 1e-9, "{route:?}");
        }
        let q0 = q_matrix(&OperatorSymbol::constant(2, a), &bd, QRoute::Qt).unwrap();
        assert_eq!(q0.norm(), 0.0);
    }

    #[test]
    fn b2_route_rejects_origin() {
        let k = KernelCoeffs::with_default_kmax(&WeightModel::gaussian(), 2).unwrap();
        let bd = k.bergman_data(&pt(&[(0.0, 0.0), (0.0, 0.0)])).unwrap();
        let t = OperatorSymbol::monomial(mi(&[1, 1]), sample_matrix(4, 2));
        assert!(matches!(q_matrix(&t, &bd, QRoute::B2), Err(Error::Precondition(_))));
    }

    #[test]
    fn routes_agree_for_random_symbols() {
        let w = make_weight(WeightFamily::Power { s: 2.0 }).unwrap();
        let coeffs = KernelCoeffs::covering(&w, 2, 3.0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let t = OperatorSymbol::random(&mut rng, 2, 3, 4, 4, 1.0);
            for _ in 0..5 {
                let u = random_unit_vector(&mut rng, 2);
                let z: Vec<C64> = u.iter().map(|x| x * rng.gen_range(0.2..3.0)).collect();
                let bd = coeffs.bergman_data(&z).unwrap();
                let q = q_matrix(&t, &bd, QRoute::Qt).unwrap().q;
                let scale = 1.0 + psd_norm(&q);
                for route in [QRoute::B2, QRoute::Cj] {
                    let other = q_matrix(&t, &bd, route).unwrap().q;
                    assert!(max_abs_diff(&q, &other) < 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn rotation_covariance() {
        let w = make_weight(WeightFamily::Power { s: 2.0 }).unwrap();
        let coeffs = KernelCoeffs::covering(&w, 2, 3.0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = OperatorSymbol::random(&mut rng, 2, 2, 3, 5, 1.0);
        let z = pt(&[(0.8, -0.3), (1.1, 0.4)]);
        for _ in 0..5 {
            let u = random_unitary(&mut rng, 2);
            let tu = t.compose_unitary(&u);
            let uz: Vec<C64> = (&u * CVec::from_column_slice(&z)).iter().copied().collect();
            assert!(max_abs_diff(&tu.eval(&z), &t.eval(&uz)) < 1e-12);
            let lhs = q_at(&tu, &coeffs, &z).unwrap().q;
            let rhs = q_at(&t, &coeffs, &uz).unwrap().q;
            assert!(max_abs_diff(&lhs, &rhs) < 1e-10 * (1.0 + psd_norm(&rhs)));
        }
    }

    #[test]
    fn bloch_norm_examples() {
        let g = WeightModel::gaussian();
        let coeffs = KernelCoeffs::covering(&g, 1, 8.0, 0).unwrap();
        let grid = Grid::default_for(1);
        let a = sample_matrix(6, 3);
        let t = OperatorSymbol::monomial(mi(&[1]), a.clone());
        let rep = bloch_norm(&t, &coeffs, &grid).unwrap();
        assert!((rep.norm - spectral_norm(&a)).abs() < 1e-9);
        let k = OperatorSymbol::constant(1, a.clone());
        assert!((bloch_norm(&k, &coeffs, &grid).unwrap().norm - spectral_norm(&a)).abs() < 1e-12);
    }

    #[test]
    fn power2_little_bloch_tail() {
        let w = make_weight(WeightFamily::Power { s: 2.0 }).unwrap();
        let coeffs = KernelCoeffs::covering(&w, 1, 40.0, 0).unwrap();
        let t = OperatorSymbol::scalar(1, &[(mi(&[1]), c(1.0, 0.0))]);
        let dirs = sphere_directions(1, 8);
        for r in [5.0, 10.0] {
            let tail = little_bloch_tail(&t, &coeffs, r, TAIL_STEPS, &dirs).unwrap();
            assert!(tail.max <= 1.5 / (2.0 * r), "R = {r}: {}", tail.max);
        }
    }

    #[test]
    fn e_norm_ratio_within_dimension_band() {
        let w = make_weight(WeightFamily::Power { s: 2.0 }).unwrap();
        let coeffs = KernelCoeffs::covering(&w, 2, 3.0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = OperatorSymbol::random(&mut rng, 2, 3, 3, 4, 1.0);
        let lo = (1.0 / 2f64.sqrt()) * 0.9;
        let hi = 2f64.sqrt() * 1.1;
        for z in [pt(&[(0.5, 0.2), (1.0, -1.0)]), pt(&[(2.0, 0.0), (0.0, 0.3)])] {
            let r = e_norm_ratio(&t, &coeffs, &z, 200, &mut rng).unwrap().unwrap();
            assert!(r >= lo && r <= hi, "{r}");
        }
    }

    #[test]
    fn seminorm_triangle_inequality() {
        let w = make_weight(WeightFamily::Exp).unwrap();
        let coeffs = KernelCoeffs::covering(&w, 1, 2.0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let t = OperatorSymbol::random(&mut rng, 1, 3, 4, 3, 1.0);
            let s = OperatorSymbol::random(&mut rng, 1, 3, 4, 3, 1.0);
            let ts = t.add(&s).unwrap();
            let z = pt(&[(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))]);
            let lhs = q_at(&ts, &coeffs, &z).unwrap().sqrt_norm();
            let rhs = q_at(&t, &coeffs, &z).unwrap().sqrt_norm() + q_at(&s, &coeffs, &z).unwrap().sqrt_norm();
            assert!(lhs <= rhs + 1e-10);
        }
    }

    #[test]
    fn fejer_multipliers() {
        let t = OperatorSymbol::scalar(1, &[(mi(&[0]), c(2.0, 0.0)), (mi(&[2]), c(1.0, 0.0)), (mi(&[5]), c(0.0, 1.0))]);
        let t2 = t.fejer(2);
        assert!((t2.coefficient(&mi(&[2])).unwrap()[(0, 0)].re - 1.0 / 3.0).abs() < 1e-15);
        assert!(t2.coefficient(&mi(&[5])).is_none());
        let t0 = t.fejer(0);
        assert_eq!(t0.terms().count(), 1);
        assert_eq!(t0.constant_term()[(0, 0)], c(2.0, 0.0));
        let big = t.fejer(1_000_000);
        assert!((big.coefficient(&mi(&[5])).unwrap()[(0, 0)].im - 1.0).abs() < 1e-5);
    }

    #[test]
    fn fejer_matches_torus_convolution() {
        // T_N(z) = (1/2π) ∫ T(e^{iθ} z) F_N(θ) dθ, F_N(θ) = Σ_{|k|≤N} (1 − |k|/(N+1)) e^{ikθ}
        let t = OperatorSymbol::scalar(1, &[(mi(&[1]), c(1.0, 0.5)), (mi(&[2]), c(-0.3, 0.0)), (mi(&[4]), c(0.2, 0.7))]);
        let n = 3u32;
        let z = pt(&[(0.7, 0.4)]);
        let samples = 64;
        let mut acc = c(0.0, 0.0);
        for s in 0..samples {
            let th = 2.0 * std::f64::consts::PI * s as f64 / samples as f64;
            let kernel: f64 = (-(n as i64)..=n as i64)
                .map(|k| (1.0 - k.unsigned_abs() as f64 / (n as f64 + 1.0)) * (k as f64 * th).cos())
                .sum();
            let rz = vec![z[0] * C64::from_polar(1.0, th)];
            acc += t.eval(&rz)[(0, 0)] * kernel;
        }
        acc /= c(samples as f64, 0.0);
        assert!((acc - t.fejer(n).eval(&z)[(0, 0)]).norm() < 1e-13);
    }

    #[test]
    fn berg_and_lipschitz_examples() {
        let g = WeightModel::gaussian();
        let coeffs = KernelCoeffs::with_default_kmax(&g, 1).unwrap();
        let a = sample_matrix(21, 2);
        let t = OperatorSymbol::monomial(mi(&[1]), a.clone());
        let pairs = vec![(pt(&[(0.0, 0.0)]), pt(&[(1.0, 1.0)])), (pt(&[(2.0, -1.0)]), pt(&[(-0.5, 0.3)]))];
        let rep = berg_norm(&t, &coeffs, &pairs).unwrap();
        assert!((rep.max_quotient - spectral_norm(&a)).abs() < 1e-8);
        let k = OperatorSymbol::constant(1, a.clone());
        assert_eq!(berg_norm(&k, &coeffs, &pairs).unwrap().max_quotient, 0.0);

        let coeffs2 = KernelCoeffs::with_default_kmax(&g, 2).unwrap();
        let t2 = OperatorSymbol::monomial(mi(&[1, 0]), a.clone());
        let rep2 = berg_norm(&t2, &coeffs2, &[(pt(&[(1.0, 0.0), (0.0, 0.0)]), pt(&[(0.0, 0.0), (0.0, 0.0)]))]).unwrap();
        assert!((rep2.max_quotient - spectral_norm(&a)).abs() < 1e-8);
        let same = berg_norm(&t2, &coeffs2, &[(pt(&[(1.0, 0.0), (0.0, 0.0)]), pt(&[(1.0, 0.0), (0.0, 0.0)]))]);
        assert!(matches!(same, Err(Error::Precondition(_))));
    }

    #[test]
    fn lipschitz_ratio_for_power2() {
        let w = make_weight(WeightFamily::Power { s: 2.0 }).unwrap();
        let coeffs = KernelCoeffs::covering(&w, 1, 8.0, 0).unwrap();
        let grid = Grid::new(1, &GridSpec { radii: 8, r_min: 0.1, r_max: 3.0, directions: 8 });
        let t = OperatorSymbol::scalar(1, &[(mi(&[1]), c(1.0, 0.0)), (mi(&[2]), c(0.5, 0.0))]);
        let (z, w2) = (pt(&[(1.0, 0.0)]), pt(&[(-0.5, 1.5)]));
        let semi = path_seminorm(&t, &coeffs, &z, &w2, &grid).unwrap();
        let rep = lipschitz_check(&t, &coeffs, &z, &w2, semi).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
