use std::fmt;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

pub type C64 = Complex<f64>;

/// Exponent vector `ν ∈ ℕ^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, k: usize) -> Self {
        let mut v = vec![0; d];
        v[k] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other` when componentwise nonnegative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Componentwise `self − other` as signed integers.
    pub fn charge(&self, other: &MultiIndex) -> Vec<i64> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| *a as i64 - *b as i64)
            .collect()
    }

    /// `ln ν!`.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&e| ln_factorial(e as u64)).sum()
    }

    /// `z^ν`.
    pub fn monomial(&self, z: &[C64]) -> C64 {
        self.0
            .iter()
            .zip(z)
            .fold(C64::new(1.0, 0.0), |acc, (&e, zi)| acc * zi.powu(e))
    }

    /// `∂_k z^ν = ν_k z^{ν − e_k}`, returned as (coefficient, exponent).
    pub fn derivative(&self, k: usize) -> Option<(f64, MultiIndex)> {
        if self.0[k] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[k] -= 1;
        Some((self.0[k] as f64, MultiIndex(v)))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// All `ν ∈ ℕ^d` with `|ν| = k`, in lexicographically decreasing order.
pub fn of_degree(d: usize, k: u32) -> Vec<MultiIndex> {
    fn rec(d: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if d == 1 {
            prefix.push(k);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=k).rev() {
            prefix.push(first);
            rec(d - 1, k - first, prefix, out);
            prefix.pop();
        }
    }
    assert!(d >= 1);
    let mut out = Vec::new();
    rec(d, k, &mut Vec::with_capacity(d), &mut out);
    out
}

/// All `ν` with `|ν| ≤ n`, graded by degree.
pub fn up_to_degree(d: usize, n: u32) -> Vec<MultiIndex> {
    (0..=n).flat_map(|k| of_degree(d, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts() {
        assert_eq!(up_to_degree(1, 5).len(), 6);
        assert_eq!(up_to_degree(2, 8).len(), 45);
        assert_eq!(up_to_degree(3, 2).len(), 10);
        assert_eq!(of_degree(2, 2)[0], MultiIndex(vec![2, 0]));
    }

    #[test]
    fn arithmetic() {
        let a = MultiIndex(vec![2, 1]);
        let b = MultiIndex(vec![1, 1]);
        assert_eq!(a.checked_sub(&b), Some(MultiIndex(vec![1, 0])));
        assert_eq!(b.checked_sub(&a), None);
        assert_eq!(a.charge(&b), vec![1, 0]);
        assert_eq!(a.add(&b).degree(), 5);
        let z = [C64::new(1.0, 1.0), C64::new(2.0, 0.0)];
        assert!((a.monomial(&z) - C64::new(0.0, 4.0)).norm() < 1e-14);
        assert!((a.ln_factorial() - 2f64.ln()).abs() < 1e-14);
    }
}
