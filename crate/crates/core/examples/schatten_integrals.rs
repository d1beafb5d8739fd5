//! Schatten-class evidence: Hilbert–Schmidt sums that never stabilize, and
//! partial Besov integrals under the 5% growth rule.
//!
//! cargo run --example schatten_integrals

use hankel_lab::kernel::KernelCoeffs;
use hankel_lab::linalg::CMat;
use hankel_lab::schatten::{besov_integral, hs_sweep, DEFAULT_CUTOFFS, HS_DEGREES};
use hankel_lab::symbols::OperatorSymbol;
use hankel_lab::weights::make_weight;
use hankel_lab::{MultiIndex, WeightFamily};

fn main() -> hankel_lab::Result<()> {
    let w = make_weight(WeightFamily::Power { s: 2.0 })?;
    let t = OperatorSymbol::monomial(MultiIndex::unit(1, 0), CMat::identity(1, 1));

    let k = KernelCoeffs::new(&w, 1, 24)?;
    let hs = hs_sweep(&t, &k, &HS_DEGREES)?;
    println!("Σ s_n² at N = {:?}: {:?}  divergent {}", hs.degrees, hs.sums, hs.divergent);

    let k = KernelCoeffs::covering(&w, 1, 16.0, 8)?;
    for p in [3.0, 6.0] {
        let b = besov_integral(&t, &k, p, &DEFAULT_CUTOFFS, 8)?;
        println!("p = {p}: partials {:?}  growth {:?}  convergent {}", b.values, b.growth, b.convergent);
    }
    Ok(())
}
