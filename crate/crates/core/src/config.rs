//! Experiment configuration: a JSON document with complex numbers written
//! as `[re, im]`.
//!
//! ```json
//! {
//!   "weight": { "family": "power", "s": 2.0 },
//!   "d": 1, "m": 1, "degree": 14,
//!   "symbols": [
//!     { "name": "z", "terms": [ { "index": [1], "coef": [1.0, 0.0] } ] }
//!   ]
//! }
//! ```
//!
//! A scalar `coef` means that multiple of the identity; a matrix is a list of
//! rows of `[re, im]` pairs.

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hankel::default_degree;
use crate::linalg::{c, CMat};
use crate::multi_index::MultiIndex;
use crate::symbols::OperatorSymbol;
use crate::weights::{make_weight, make_weight_with_eta, WeightFamily, WeightModel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightSpec {
    #[serde(flatten)]
    pub family: WeightFamily,
    /// Class-𝒮 exponent; the family default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl WeightSpec {
    pub fn build(&self) -> Result<WeightModel> {
        match self.eta {
            Some(eta) => make_weight_with_eta(self.family, eta),
            None => make_weight(self.family),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefSpec {
    Scalar([f64; 2]),
    Matrix(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub index: Vec<u32>,
    pub coef: CoefSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub name: String,
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSymbols {
    pub count: usize,
    pub max_degree: u32,
    #[serde(default = "default_random_terms")]
    pub terms: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_random_terms() -> usize {
    3
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Singular values and norms of the gaussian linear-symbol anchor.
    pub isometry: f64,
    /// Entrywise agreement of the three `Q_T` routes.
    pub q_routes: f64,
    /// Entrywise agreement of the two `MO²` routes.
    pub mo_routes: f64,
    /// Largest allowed max/min spread of the norm-equivalence ratios.
    pub equivalence_band: f64,
    /// Largest allowed max/min spread of `K(z,z)/(e^Ψ Φ′ Ψ′^{d−1})`.
    pub kernel_band: f64,
    pub trace_d1: f64,
    pub trace_d2: f64,
    pub hs_identity: f64,
    /// Relative growth per step separating divergent from convergent sequences.
    pub growth: f64,
    /// `|s_max(N) − s_max(N−2)|` accepted as stabilized.
    pub stabilization: f64,
    /// A Bloch tail counts as decaying when its last value is below this fraction of its first.
    pub decay_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            isometry: 1e-9,
            q_routes: 1e-9,
            mo_routes: 1e-6,
            equivalence_band: 100.0,
            kernel_band: 10.0,
            trace_d1: 1e-4,
            trace_d2: 1e-3,
            hs_identity: 0.02,
            growth: 0.05,
            stabilization: 1e-4,
            decay_ratio: 0.5,
        }
    }
}

impl Tolerances {
    fn fields(&self) -> [(&'static str, f64); 11] {
        [
            ("isometry", self.isometry),
            ("q_routes", self.q_routes),
            ("mo_routes", self.mo_routes),
            ("equivalence_band", self.equivalence_band),
            ("kernel_band", self.kernel_band),
            ("trace_d1", self.trace_d1),
            ("trace_d2", self.trace_d2),
            ("hs_identity", self.hs_identity),
            ("growth", self.growth),
            ("stabilization", self.stabilization),
            ("decay_ratio", self.decay_ratio),
        ]
    }
}

/// Sweep parameters of the individual suites.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweeps {
    /// Radii `R` of the Bloch/BMO tail sweeps.
    pub tail_radii: Vec<f64>,
    pub tail_steps: usize,
    pub fejer_degrees: Vec<u32>,
    pub hs_degrees: Vec<u32>,
    pub cutoffs: Vec<f64>,
    /// Directions averaged over in the Schatten integrals.
    pub integral_directions: usize,
    /// Truncation degree of the trace and HS identities.
    pub identity_degree: u32,
    /// Polyball parameters for the near-constancy sweep.
    pub polyball_a: Vec<f64>,
    pub polyball_samples: usize,
    /// Number of points where route agreements are sampled.
    pub route_points: usize,
}

impl Default for Sweeps {
    fn default() -> Self {
        Sweeps {
            tail_radii: vec![1.0, 2.0, 5.0],
            tail_steps: crate::symbols::TAIL_STEPS,
            fejer_degrees: vec![1, 2, 4, 8, 16],
            hs_degrees: crate::schatten::HS_DEGREES.to_vec(),
            cutoffs: crate::schatten::DEFAULT_CUTOFFS.to_vec(),
            integral_directions: 8,
            identity_degree: 6,
            polyball_a: vec![0.1, 0.25, 0.5],
            polyball_samples: 500,
            route_points: 20,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for `report.json` and CSV tables; overridden by `--out`.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub weight: WeightSpec,
    #[serde(default = "one")]
    pub d: usize,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default)]
    pub symbols: Vec<SymbolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_symbols: Option<RandomSymbols>,
    /// Truncation degree `N`; 14 for `d = 1` and 8 otherwise when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default)]
    pub grid: GridSpec,
    /// Number of random point pairs for Berezin-metric checks.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_p")]
    pub schatten_p: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweeps: Sweeps,
    #[serde(default)]
    pub output: OutputSpec,
}

fn one() -> usize {
    1
}

fn default_pairs() -> usize {
    20
}

fn default_p() -> Vec<f64> {
    vec![3.0, 6.0]
}

fn config_error(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// A configuration with every default and the given weight.
    pub fn new(weight: WeightFamily, d: usize, m: usize) -> Self {
        ExperimentConfig {
            weight: WeightSpec { family: weight, eta: None },
            d,
            m,
            symbols: Vec::new(),
            random_symbols: None,
            degree: None,
            grid: GridSpec::default(),
            pairs: default_pairs(),
            schatten_p: default_p(),
            tolerances: Tolerances::default(),
            sweeps: Sweeps::default(),
            output: OutputSpec::default(),
        }
    }

    /// Parses and validates; errors name the offending field and its line/column.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            let path = e.path().to_string();
            let field = if path == "." { "document".to_string() } else { path };
            config_error(
                format!("{field} (line {}, column {})", inner.line(), inner.column()),
                inner.to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn degree(&self) -> u32 {
        self.degree.unwrap_or_else(|| default_degree(self.d))
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(config_error("d", format!("dimension must be 1, 2 or 3, got {}", self.d)));
        }
        if self.m == 0 {
            return Err(config_error("m", "fiber dimension must be at least 1"));
        }
        if self.degree == Some(0) {
            return Err(config_error("degree", "truncation degree must be at least 1"));
        }
        for (name, v) in self.tolerances.fields() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(config_error(format!("tolerances.{name}"), format!("must be positive, got {v}")));
            }
        }
        if self.grid.radii == 0 || self.grid.directions == 0 || !(self.grid.r_min > 0.0) || !(self.grid.r_max >= self.grid.r_min)
        {
            return Err(config_error("grid", "need radii ≥ 1, directions ≥ 1 and 0 < r_min ≤ r_max"));
        }
        if let Some(p) = self.schatten_p.iter().find(|p| !(**p >= 1.0)) {
            return Err(config_error("schatten_p", format!("exponents must be ≥ 1, got {p}")));
        }
        if let Some(rs) = &self.random_symbols {
            if !(rs.scale > 0.0) {
                return Err(config_error("random_symbols.scale", "must be positive"));
            }
        }
        for (i, s) in self.symbols.iter().enumerate() {
            self.symbol_from_spec(s).map_err(|e| match e {
                Error::Config { field, message } => config_error(format!("symbols[{i}].{field}"), message),
                other => other,
            })?;
        }
        Ok(())
    }

    fn symbol_from_spec(&self, spec: &SymbolSpec) -> Result<OperatorSymbol> {
        let mut t = OperatorSymbol::zero(self.d, self.m);
        for (j, term) in spec.terms.iter().enumerate() {
            if term.index.len() != self.d {
                return Err(config_error(
                    format!("terms[{j}].index"),
                    format!("multi-index has {} entries, expected d = {}", term.index.len(), self.d),
                ));
            }
            let a = match &term.coef {
                CoefSpec::Scalar([re, im]) => CMat::identity(self.m, self.m) * c(*re, *im),
                CoefSpec::Matrix(rows) => {
                    if rows.len() != self.m || rows.iter().any(|r| r.len() != self.m) {
                        return Err(config_error(format!("terms[{j}].coef"), format!("matrix must be {0}×{0}", self.m)));
                    }
                    CMat::from_fn(self.m, self.m, |r, col| c(rows[r][col][0], rows[r][col][1]))
                }
            };
            t.add_term(MultiIndex(term.index.clone()), a)?;
        }
        Ok(t)
    }

    /// Explicit symbols, then random ones; `z₁·I` when neither is given.
    pub fn build_symbols<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<(String, OperatorSymbol)>> {
        let mut out = Vec::new();
        for s in &self.symbols {
            out.push((s.name.clone(), self.symbol_from_spec(s)?));
        }
        if let Some(rs) = &self.random_symbols {
            for i in 0..rs.count {
                let t = OperatorSymbol::random(rng, self.d, self.m, rs.max_degree, rs.terms, rs.scale);
                out.push((format!("random-{i}"), t));
            }
        }
        if out.is_empty() {
            let t = OperatorSymbol::monomial(MultiIndex::unit(self.d, 0), CMat::identity(self.m, self.m));
            out.push(("z1".to_string(), t));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalar_and_matrix_coefficients() {
        let text = r#"{
            "weight": { "family": "power", "s": 2.0 },
            "d": 1, "m": 2,
            "symbols": [
                { "name": "a", "terms": [ { "index": [1], "coef": [2.0, 0.0] } ] },
                { "name": "b", "terms": [ { "index": [0], "coef": [[[0,1],[0,0]],[[0,0],[1,0]]] } ] }
            ]
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.degree(), 14);
        let mut rng = rand::thread_rng();
        let s = cfg.build_symbols(&mut rng).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].1.coefficient(&MultiIndex(vec![1])).unwrap()[(1, 1)], c(2.0, 0.0));
        assert_eq!(s[1].1.coefficient(&MultiIndex(vec![0])).unwrap()[(0, 0)], c(0.0, 1.0));
    }

    #[test]
    fn errors_name_the_field() {
        let text = "{\n  \"weight\": { \"family\": \"gaussian\" },\n  \"d\": 1,\n  \"tolerances\": { \"q_routes\": \"tight\" }\n}";
        match ExperimentConfig::from_json(text) {
            Err(Error::Config { field, .. }) => {
                assert!(field.contains("tolerances.q_routes") && field.contains("line 4"), "{field}")
            }
            other => panic!("{other:?}"),
        }
        let bad_index = r#"{ "weight": { "family": "gaussian" }, "d": 2,
            "symbols": [ { "name": "x", "terms": [ { "index": [1], "coef": [1, 0] } ] } ] }"#;
        match ExperimentConfig::from_json(bad_index) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "symbols[0].terms[0].index"),
            other => panic!("{other:?}"),
        }
        let bad_tol = r#"{ "weight": { "family": "gaussian" }, "tolerances": { "growth": -1 } }"#;
        assert!(matches!(ExperimentConfig::from_json(bad_tol), Err(Error::Config { .. })));
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig::new(WeightFamily::Exp, 2, 3);
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.d, 2);
        assert_eq!(back.degree(), 8);
        assert_eq!(back.weight.build().unwrap().name(), "exp");
    }
}
