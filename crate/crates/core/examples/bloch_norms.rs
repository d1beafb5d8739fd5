//! Operator-valued Bloch norm of a matrix symbol: the three Q_T routes, the
//! grid supremum, the Berezin-metric (Berg) quotient and the Lipschitz ratio.
//!
//! cargo run --example bloch_norms

use hankel_lab::grid::Grid;
use hankel_lab::kernel::KernelCoeffs;
use hankel_lab::linalg::{c, max_abs_diff, CMat};
use hankel_lab::symbols::{berg_norm, bloch_norm, lipschitz_check, path_seminorm, q_matrix, OperatorSymbol, QRoute};
use hankel_lab::weights::make_weight;
use hankel_lab::{MultiIndex, WeightFamily};

fn main() -> hankel_lab::Result<()> {
    let w = make_weight(WeightFamily::Power { s: 2.0 })?;
    // T(z) = [[1, z], [z², 0]] on ℂ²
    let e = |i, j| {
        let mut a = CMat::zeros(2, 2);
        a[(i, j)] = c(1.0, 0.0);
        a
    };
    let t = OperatorSymbol::from_terms(
        1,
        2,
        [(MultiIndex(vec![0]), e(0, 0)), (MultiIndex(vec![1]), e(0, 1)), (MultiIndex(vec![2]), e(1, 0))],
    )?;
    let grid = Grid::default_for(1);
    let k = KernelCoeffs::covering(&w, 1, 1.5 * grid.r_max(), 8)?;

    let z = [c(1.5, -0.5)];
    let bd = k.bergman_data(&z)?;
    let qt = q_matrix(&t, &bd, QRoute::Qt)?;
    let b2 = q_matrix(&t, &bd, QRoute::B2)?;
    let cj = q_matrix(&t, &bd, QRoute::Cj)?;
    println!("route discrepancy {:.2e}, {:.2e}", max_abs_diff(&qt.q, &b2.q), max_abs_diff(&qt.q, &cj.q));

    let b = bloch_norm(&t, &k, &grid)?;
    println!("Bloch norm {:.6} = ‖T(0)‖ {:.6} + seminorm {:.6} at {:?}", b.norm, b.t0_norm, b.seminorm, b.argmax);

    let pairs = vec![(vec![c(0.5, 0.0)], vec![c(1.0, 0.5)]), (vec![c(2.0, 0.0)], vec![c(-1.0, 2.0)])];
    let berg = berg_norm(&t, &k, &pairs)?;
    println!("Berg quotient {:.6} (lower bound)", berg.max_quotient);
    let (p, q) = &pairs[1];
    let lip = lipschitz_check(&t, &k, p, q, path_seminorm(&t, &k, p, q, &grid)?)?;
    println!("Lipschitz ratio {:.4} (bound {:.2})", lip.ratio, lip.bound);
    Ok(())
}
