//! Running a verification suite from a JSON configuration and writing the
//! report, as the `hankel-lab` binary does.
//!
//! cargo run --example run_suite -- [out-dir]

use hankel_lab::config::ExperimentConfig;
use hankel_lab::runner::{run, RunOptions, Suite};

const CONFIG: &str = r#"{
  "weight": { "family": "power", "s": 2.0 },
  "m": 2,
  "symbols": [
    { "name": "z", "terms": [ { "index": [1], "coef": [1.0, 0.0] } ] },
    { "name": "nilpotent", "terms": [ { "index": [1], "coef": [[[0,0],[1,0]],[[0,0],[0,0]]] } ] }
  ],
  "random_symbols": { "count": 2, "max_degree": 2 },
  "grid": { "radii": 12, "r_max": 6.0, "directions": 8 }
}"#;

fn main() -> hankel_lab::Result<()> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    let report = run(Suite::Equivalence, &cfg, &RunOptions::default())?;
    for c in report.checks() {
        println!("{:<5} {:?} {}/{} = {:.4}", if c.pass { "ok" } else { "fail" }, c.kind, c.scenario, c.name, c.value);
    }
    if let Some(dir) = std::env::args().nth(1) {
        for p in report.write(dir.as_ref())? {
            println!("wrote {}", p.display());
        }
    }
    println!("pass: {}", report.pass);
    Ok(())
}
