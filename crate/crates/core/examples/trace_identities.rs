//! Quadrature checks of the trace formula, the Hilbert–Schmidt identity for
//! multipliers, and contractivity of constant multipliers.
//!
//! cargo run --example trace_identities

use hankel_lab::grid::Grid;
use hankel_lab::identities::{contractivity_check, hs_multiplier_identity_check, trace_identity_check};
use hankel_lab::kernel::KernelCoeffs;
use hankel_lab::linalg::{c, random_complex_matrix, CMat};
use hankel_lab::mixed::MixedPolynomial;
use hankel_lab::multi_index::up_to_degree;
use hankel_lab::symbols::OperatorSymbol;
use hankel_lab::weights::make_weight;
use hankel_lab::{MultiIndex, WeightFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hankel_lab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let w = make_weight(WeightFamily::Power { s: 2.0 })?;
    for (d, n) in [(1, 6), (2, 3)] {
        let k = KernelCoeffs::new(&w, d, 16)?;
        let dim = up_to_degree(d, n).len() * 2;
        let g = random_complex_matrix(&mut rng, dim, dim, 1.0);
        let s = &g * g.adjoint();
        let r = trace_identity_check(&s, &k, n, 2, 42)?;
        println!("d = {d}: tr S = {:.10}  integral = {:.10}  rel err {:.1e}", r.trace, r.integral, r.rel_err);
    }

    let k = KernelCoeffs::new(&w, 1, 16)?;
    let z = MixedPolynomial::from_holomorphic(&OperatorSymbol::monomial(MultiIndex::unit(1, 0), CMat::identity(1, 1)));
    let h = hs_multiplier_identity_check(&z, &k, 8)?;
    println!("multiplier z: ‖M_z‖²_S2 = {:.8}  integral {:.8}  next degree +{:.1}%", h.direct, h.integral, 100.0 * h.next_degree_excess);

    let r = MixedPolynomial::constant(1, CMat::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 1.0)));
    let cr = contractivity_check(&r, &k, 8, &Grid::default_for(1))?;
    println!("constant multiplier: ‖M_R‖ = {:.8}  sup ‖R‖ = {:.8}", cr.operator_norm, cr.sup_norm);
    Ok(())
}
