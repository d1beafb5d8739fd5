//! Fejér means T_N in the Bloch seminorm over the default grid (|z| ≤ 8).
//! For T = z + z³ the z³ coefficient moves by 3/(N+1) while its Q_T grows
//! like |z|, so the grid supremum falls like 36/(N+1) and depends on the grid.
//!
//! cargo run --example fejer

use hankel_lab::grid::Grid;
use hankel_lab::kernel::KernelCoeffs;
use hankel_lab::linalg::CMat;
use hankel_lab::symbols::{fejer_sweep, OperatorSymbol};
use hankel_lab::weights::make_weight;
use hankel_lab::{MultiIndex, WeightFamily};

fn main() -> hankel_lab::Result<()> {
    let w = make_weight(WeightFamily::Power { s: 2.0 })?;
    let grid = Grid::default_for(1);
    let k = KernelCoeffs::covering(&w, 1, grid.r_max(), 8)?;
    let z = OperatorSymbol::monomial(MultiIndex(vec![1]), CMat::identity(1, 1));
    let mut z3 = z.clone();
    z3.add_term(MultiIndex(vec![3]), CMat::identity(1, 1))?;
    let ns = [1, 2, 4, 8, 16, 32, 64];
    for (name, t) in [("z", &z), ("z + z³", &z3)] {
        let v = fejer_sweep(t, &k, &grid, &ns)?;
        let shown: Vec<String> = ns.iter().zip(&v).map(|(n, x)| format!("N={n}: {x:.4}")).collect();
        println!("{name}: {}", shown.join("  "));
    }
    Ok(())
}
