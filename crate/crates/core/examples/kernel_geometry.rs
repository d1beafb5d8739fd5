//! Diagonal kernel asymptotics, Bergman metric eigenvalues, distances and
//! polyball coherence.
//!
//! cargo run --example kernel_geometry

use hankel_lab::kernel::KernelCoeffs;
use hankel_lab::linalg::c;
use hankel_lab::weights::make_weight;
use hankel_lab::WeightFamily;

fn main() -> hankel_lab::Result<()> {
    for family in [WeightFamily::Gaussian, WeightFamily::Power { s: 2.0 }, WeightFamily::Exp] {
        let w = make_weight(family)?;
        let k = KernelCoeffs::covering(&w, 2, 6.0, 8)?;
        println!("{} (d = 2)", w.name());
        for r in [0.5, 1.0, 2.0, 4.0, 6.0] {
            let z = [c(r, 0.0), c(0.0, 0.0)];
            let (lambda, mu) = k.bergman_eigenvalues(r * r)?;
            println!(
                "  |z| = {r}: K/(e^Ψ Φ′ Ψ′) = {:.4}  λ = {lambda:.4e}  μ = {mu:.4e}",
                k.kernel_diag_check(&z)?
            );
        }
        let z = [c(1.0, 0.0), c(0.0, 0.0)];
        let w2 = [c(1.2, 0.1), c(0.1, 0.0)];
        let dist = k.bergman_distance(&z, &w2)?;
        println!(
            "  d(z, w) ≤ {:.5} (straight {:.5}), coherence {:.5}",
            dist.distance,
            dist.straight,
            k.kernel_coherence(&z, &w2)?
        );
    }
    Ok(())
}
