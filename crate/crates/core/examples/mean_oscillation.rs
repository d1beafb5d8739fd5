//! Berezin transforms, the squared mean oscillation by two routes and the
//! BMO norm.
//!
//! cargo run --example mean_oscillation

use hankel_lab::berezin::{berezin_transform, bloch_bmo_ratio, bmo_norm, mo_route_discrepancy};
use hankel_lab::grid::{Grid, GridSpec};
use hankel_lab::kernel::KernelCoeffs;
use hankel_lab::linalg::{c, CMat};
use hankel_lab::mixed::MixedPolynomial;
use hankel_lab::symbols::OperatorSymbol;
use hankel_lab::weights::make_weight;
use hankel_lab::{MultiIndex, WeightFamily};

fn main() -> hankel_lab::Result<()> {
    let w = make_weight(WeightFamily::Power { s: 2.0 })?;
    let k = KernelCoeffs::covering_series(&w, 1, 4.0, 30)?;

    // |z|² has Berezin transform strictly above |z|² away from the origin
    let mut g = MixedPolynomial::zero(1, 1);
    g.add_term(MultiIndex(vec![1]), MultiIndex(vec![1]), CMat::identity(1, 1))?;
    for r in [0.5, 1.0, 2.0] {
        println!("|z| = {r}: Berezin(|w|²) = {:.6}", berezin_transform(&g, &k, &[c(r, 0.0)])?[(0, 0)].re);
    }

    let mut t = OperatorSymbol::monomial(MultiIndex(vec![1]), CMat::identity(1, 1));
    t.add_term(MultiIndex(vec![2]), CMat::identity(1, 1) * c(0.0, 0.5))?;
    let (series, hankel, diff) = mo_route_discrepancy(&t, &k, &[c(1.2, 0.3)])?;
    println!("MO² series {:.10}  Hankel {:.10}  diff {diff:.2e}", series.norm(), hankel.norm());

    let grid = Grid::new(1, &GridSpec { r_max: 4.0, ..GridSpec::default() });
    let b = bmo_norm(&t, &k, &grid)?;
    println!("BMO norm {:.6}  Bloch/BMO ratio {:.4}", b.norm, bloch_bmo_ratio(&t, &k, &grid)?);
    Ok(())
}
