//! Built-in weights, their profiles and the radial moment table.
//!
//! cargo run --example weights_moments

use hankel_lab::kernel::KernelCoeffs;
use hankel_lab::weights::{make_weight, Profile, VALIDATION_RANGE};
use hankel_lab::WeightFamily;
use statrs::function::gamma::ln_gamma;

fn main() -> hankel_lab::Result<()> {
    for family in [WeightFamily::Gaussian, WeightFamily::Power { s: 2.0 }, WeightFamily::Exp] {
        let w = make_weight(family)?;
        println!("{}", w.name());
        for x in [0.5, 1.0, 4.0] {
            println!("  x = {x}: Ψ = {:.6}  Φ = {:.6}  Φ′ = {:.6}", w.psi(x), w.phi(x), w.dphi(x, 1));
        }
        let cs = w.class_s_diagnostic(Profile::Psi, w.eta(), VALIDATION_RANGE, 1e3)?;
        println!("  class-S sup ratio {:.3e} at x = {:.3e}", cs.max_ratio, cs.argmax);

        let k = KernelCoeffs::new(&w, 1, 10)?;
        for j in [0, 5, 10] {
            let oracle = match family {
                WeightFamily::Gaussian => format!("{:.12}", ln_gamma(j as f64 + 1.0)),
                WeightFamily::Power { s } => format!("{:.12}", ln_gamma((j as f64 + 1.0) / s) - s.ln()),
                WeightFamily::Exp => "-".into(),
            };
            println!("  ln M_{j} = {:.12}  closed form {oracle}  f_{j} = {:.6e}", k.moments().ln_moment(j), k.f(j));
        }
    }
    Ok(())
}
