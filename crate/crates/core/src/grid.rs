//! Sample grids in `ℂ^d` used to approximate suprema over the whole space.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::linalg::c;
use crate::multi_index::C64;
use crate::weights::log_spaced;

/// Radii × sphere directions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub radii: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub directions: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            radii: 24,
            r_min: 0.1,
            r_max: 8.0,
            directions: 32,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub d: usize,
    pub radii: Vec<f64>,
    pub directions: Vec<Vec<C64>>,
}

impl Grid {
    pub fn new(d: usize, spec: &GridSpec) -> Self {
        let radii = if spec.radii == 1 {
            vec![spec.r_max]
        } else {
            log_spaced(spec.r_min, spec.r_max, spec.radii)
        };
        Grid {
            d,
            radii,
            directions: sphere_directions(d, spec.directions),
        }
    }

    pub fn default_for(d: usize) -> Self {
        Self::new(d, &GridSpec::default())
    }

    pub fn r_max(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Vec<C64>> {
        let mut out = Vec::with_capacity(self.len());
        for &r in &self.radii {
            for u in &self.directions {
                out.push(u.iter().map(|x| x * r).collect());
            }
        }
        out
    }
}

/// `n` quasi-random unit vectors of `ℂ^d`. For `d = 1` these are equally
/// spaced phases; otherwise a Kronecker sequence in `[0,1)^{2d}` pushed
/// through the normal quantile and normalised.
pub fn sphere_directions(d: usize, n: usize) -> Vec<Vec<C64>> {
    if d == 1 {
        return (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                vec![C64::from_polar(1.0, t)]
            })
            .collect();
    }
    let dim = 2 * d;
    // generalised golden ratio: root of x^{dim+1} = x + 1
    let mut g = 1.5f64;
    for _ in 0..60 {
        g = (1.0 + g).powf(1.0 / (dim as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=dim).map(|j| g.powi(-(j as i32)).fract()).collect();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (1..=n)
        .map(|k| {
            let x: Vec<f64> = alpha
                .iter()
                .map(|a| normal.inverse_cdf((0.5 + a * k as f64).fract()))
                .collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            (0..d).map(|i| c(x[2 * i] / norm, x[2 * i + 1] / norm)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = Grid::default_for(2);
        assert_eq!(g.len(), 24 * 32);
        assert!((g.radii[0] - 0.1).abs() < 1e-15 && (g.r_max() - 8.0).abs() < 1e-12);
        for u in &g.directions {
            let n: f64 = u.iter().map(|x| x.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn directions_spread_over_sphere() {
        // first moments of a well-spread sample are near zero
        let dirs = sphere_directions(2, 256);
        for i in 0..2 {
            let mean: C64 = dirs.iter().map(|u| u[i]).sum::<C64>() / c(256.0, 0.0);
            assert!(mean.norm() < 0.05);
        }
        let second: f64 = dirs.iter().map(|u| u[0].norm_sqr()).sum::<f64>() / 256.0;
        assert!((second - 0.5).abs() < 0.05);
    }
}
