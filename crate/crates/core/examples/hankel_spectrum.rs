//! Singular values of the truncated big Hankel operator H_{T*}: flat for
//! T = z on the gaussian space, decaying for the power-2 weight.
//!
//! cargo run --example hankel_spectrum

use hankel_lab::hankel::assemble_hankel;
use hankel_lab::kernel::KernelCoeffs;
use hankel_lab::linalg::CMat;
use hankel_lab::symbols::OperatorSymbol;
use hankel_lab::weights::make_weight;
use hankel_lab::{MultiIndex, WeightFamily};

fn main() -> hankel_lab::Result<()> {
    let t = OperatorSymbol::monomial(MultiIndex::unit(1, 0), CMat::identity(1, 1));
    for family in [WeightFamily::Gaussian, WeightFamily::Power { s: 2.0 }] {
        let w = make_weight(family)?;
        let k = KernelCoeffs::new(&w, 1, 40)?;
        for n in [6, 14] {
            let h = assemble_hankel(&t, &k, n)?;
            let s = h.singular_values()?;
            let shown: Vec<String> = s.iter().take(6).map(|x| format!("{x:.5}")).collect();
            println!(
                "{} N = {n}: s = [{} …]  ‖H‖_S3 = {:.4}  Σs² = {:.4}",
                w.name(),
                shown.join(", "),
                h.schatten_norm(3.0)?,
                h.hs_norm_sq()
            );
        }
    }
    Ok(())
}
