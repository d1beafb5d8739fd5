//! Small dense complex linear algebra on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::multi_index::C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Hermitian part `(A + A*)/2`, used before eigen-decomposition to wash out
/// rounding asymmetry.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues of a hermitian matrix, sorted nonincreasing.
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| y.total_cmp(x));
    Ok(v)
}

/// Spectral norm `‖A‖ = sqrt(λ_max(A A*))`.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let g = if a.nrows() <= a.ncols() {
        a * a.adjoint()
    } else {
        a.adjoint() * a
    };
    hermitian_eigenvalues(&g)
        .map(|v| v.first().copied().unwrap_or(0.0).max(0.0).sqrt())
        .unwrap_or(f64::NAN)
}

/// Largest eigenvalue of a PSD matrix, i.e. its operator norm.
pub fn psd_norm(a: &CMat) -> f64 {
    hermitian_eigenvalues(a)
        .map(|v| v.first().copied().unwrap_or(0.0).max(0.0))
        .unwrap_or(f64::NAN)
}

/// `‖A^{1/2}‖_{S^p}^p = Σ λ_i^{p/2}` for PSD `A`; eigenvalues below zero are clipped.
pub fn psd_sqrt_schatten_pow(a: &CMat, p: f64) -> f64 {
    hermitian_eigenvalues(a)
        .map(|v| v.iter().map(|l| l.max(0.0).powf(0.5 * p)).sum())
        .unwrap_or(f64::NAN)
}

/// Frobenius norm squared `‖A‖²_{S²}`.
pub fn hs_norm_sq(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c(
            scale * rng.sample::<f64, _>(StandardNormal),
            scale * rng.sample::<f64, _>(StandardNormal),
        )
    })
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    loop {
        let v = CVec::from_fn(n, |_, _| {
            c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        let nrm = v.norm();
        if nrm > 1e-12 {
            return v / c(nrm, 0.0);
        }
    }
}

/// Haar-ish random unitary from the QR factorisation of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_complex_matrix(rng, n, n, 1.0);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / c(d.norm(), 0.0) } else { c(1.0, 0.0) };
        for i in 0..n {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// A unitary `U` with `U e_1 = z/|z|` (identity when `z = 0`).
pub fn unitary_to_direction(z: &[C64]) -> CMat {
    let n = z.len();
    let nrm = z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return CMat::identity(n, n);
    }
    // Gram–Schmidt on (z, e_1, …, e_n), dropping the dependent vector.
    let mut cols: Vec<CVec> = vec![CVec::from_iterator(n, z.iter().map(|x| x / c(nrm, 0.0)))];
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = CVec::zeros(n);
        v[k] = c(1.0, 0.0);
        for q in &cols {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let vn = v.norm();
        if vn > 1e-8 {
            cols.push(v / c(vn, 0.0));
        }
    }
    CMat::from_columns(&cols)
}

/// Orthonormal basis of `ℂ^m` returned as the columns of a unitary matrix.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMat {
    random_unitary(rng, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..4 {
            let u = random_unitary(&mut rng, n);
            let e = u.adjoint() * &u - CMat::identity(n, n);
            assert!(e.norm() < 1e-12);
        }
        let z = [c(0.3, -1.0), c(2.0, 0.5)];
        let u = unitary_to_direction(&z);
        assert!((u.adjoint() * &u - CMat::identity(2, 2)).norm() < 1e-12);
        let n = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
        assert!((u[(0, 0)] - z[0] / n).norm() < 1e-14);
        assert!((u[(1, 0)] - z[1] / n).norm() < 1e-14);
    }

    #[test]
    fn norms() {
        let a = CMat::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -4.0)]);
        assert!((spectral_norm(&a) - 4.0).abs() < 1e-12);
        assert!((hs_norm_sq(&a) - 25.0).abs() < 1e-12);
        let p = &a * a.adjoint();
        assert!((psd_sqrt_schatten_pow(&p, 2.0) - 25.0).abs() < 1e-10);
        assert!((psd_norm(&p) - 16.0).abs() < 1e-10);
    }
}
