//! Little-Bloch tails: sup ‖Q_T(z)‖^{1/2} over |z| ≥ R for T = z stays at 1
//! on the gaussian space and decays for the power-2 weight.
//!
//! cargo run --example compactness

use hankel_lab::grid::sphere_directions;
use hankel_lab::kernel::KernelCoeffs;
use hankel_lab::linalg::CMat;
use hankel_lab::symbols::{little_bloch_tail, OperatorSymbol, TAIL_STEPS};
use hankel_lab::weights::make_weight;
use hankel_lab::{MultiIndex, WeightFamily};

fn main() -> hankel_lab::Result<()> {
    let t = OperatorSymbol::monomial(MultiIndex::unit(1, 0), CMat::identity(1, 1));
    let dirs = sphere_directions(1, 8);
    for family in [WeightFamily::Gaussian, WeightFamily::Power { s: 2.0 }] {
        let w = make_weight(family)?;
        let k = KernelCoeffs::covering(&w, 1, 5.0 * 1.25f64.powi(TAIL_STEPS as i32), 8)?;
        for r in [1.0, 2.0, 5.0] {
            let tail = little_bloch_tail(&t, &k, r, TAIL_STEPS, &dirs)?;
            let v: Vec<String> = tail.values.iter().map(|x| format!("{x:.4}")).collect();
            println!("{} R = {r}: {}", w.name(), v.join(" "));
        }
    }
    Ok(())
}
