//! Gauss–Legendre rules, an adaptive panel integrator and Chebyshev interpolation.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 20-point rule used by the adaptive integrator.
    pub fn g20() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(20))
    }

    pub fn g64() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(64))
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Adaptive bisection with 20-point panels. A panel is accepted when the
/// one-panel and two-half-panel estimates agree to `rel_tol` of the running
/// total (or to `abs_tol`). Gives up (with `converged = false`) at depth 40
/// or after two million evaluations.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> QuadResult {
    const INITIAL_PANELS: usize = 16;
    const MAX_EVALS: usize = 2_000_000;
    let rule = GaussLegendre::g20();
    let h = (b - a) / INITIAL_PANELS as f64;
    let mut stack: Vec<(f64, f64, f64, u32)> = (0..INITIAL_PANELS)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == INITIAL_PANELS { b } else { lo + h };
            (lo, hi, rule.integrate(lo, hi, &f), 0)
        })
        .collect();
    let scale: f64 = stack.iter().map(|p| p.2).sum::<f64>().abs();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = INITIAL_PANELS * rule.nodes.len();
    let mut converged = true;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &f);
        let right = rule.integrate(mid, hi, &f);
        evals += 2 * rule.nodes.len();
        let refined = left + right;
        let diff = (refined - est).abs();
        let tol = (rel_tol * scale.max(refined.abs())).max(abs_tol);
        let exhausted = depth >= 40 || evals > MAX_EVALS;
        if diff <= tol || exhausted {
            if diff > tol {
                converged = false;
            }
            total += refined;
            err += diff;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    QuadResult {
        value: total,
        abs_error: err,
        evaluations: evals,
        converged,
    }
}

/// Chebyshev interpolant of degree `n − 1` on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Samples `f` at the `n` Chebyshev points of the first kind.
    pub fn try_fit<E, F: Fn(f64) -> Result<f64, E> + Sync>(f: F, lo: f64, hi: f64, n: usize) -> Result<Self, E>
    where
        E: Send,
    {
        use rayon::prelude::*;
        let theta = |j: usize| PI * (j as f64 + 0.5) / n as f64;
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| f(0.5 * (lo + hi) + 0.5 * (hi - lo) * theta(j).cos()))
            .collect::<Result<_, E>>()?;
        let coeffs = (0..n)
            .map(|k| {
                let s: f64 = values.iter().enumerate().map(|(j, v)| v * (k as f64 * theta(j)).cos()).sum();
                s * if k == 0 { 1.0 } else { 2.0 } / n as f64
            })
            .collect();
        Ok(Self { lo, hi, coeffs })
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let u = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * u * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        u * b1 - b2 + self.coeffs[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let g = GaussLegendre::new(7);
        // degree 13 is exact for 7 points
        let v = g.integrate(0.0, 2.0, |x| x.powi(13));
        assert!((v - 2f64.powi(14) / 14.0).abs() < 1e-10);
        let wsum: f64 = g.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
        let g1 = GaussLegendre::new(1);
        assert_eq!(g1.nodes, vec![0.0]);
        assert!((g1.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let r = adaptive(|x| (-(x - 3.0).powi(2) * 400.0).exp(), 0.0, 10.0, 1e-13, 0.0);
        let exact = (PI / 400.0).sqrt();
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-12 * exact, "{}", r.value);
    }

    #[test]
    fn chebyshev_reproduces_smooth_functions() {
        let c = Chebyshev::try_fit(|x| Ok::<_, ()>((x * 0.3).exp() - x * x), -4.0, 6.0, 40).unwrap();
        for x in [-4.0, -1.3, 0.0, 2.7, 6.0] {
            assert!((c.eval(x) - ((x * 0.3).exp() - x * x)).abs() < 1e-12);
        }
    }
}
