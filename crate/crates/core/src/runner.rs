//! Experiment suites: each binds a weight, a symbol list and a truncation
//! into one report section of records, checks and CSV tables.
//!
//! Numerical failures inside a scenario become failed checks; only
//! configuration errors abort a run.

use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use statrs::function::gamma::ln_gamma;

use crate::berezin::{bloch_bmo_ratio, bmo_decay, bmo_norm, mo_route_discrepancy, norm_equivalence, admissible_a};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::grid::{sphere_directions, Grid, GridSpec};
use crate::hankel::assemble_hankel;
use crate::identities::{contractivity_check, hs_multiplier_identity_check, trace_identity_check};
use crate::kernel::{required_kmax, KernelCoeffs};
use crate::linalg::{c, max_abs_diff, random_complex_matrix, CMat};
use crate::mixed::MixedPolynomial;
use crate::multi_index::{up_to_degree, MultiIndex, C64};
use crate::report::{Check, CheckKind, Report, Section, Table};
use crate::schatten::{besov_integral, classify_growth_at, hs_sweep, mo_schatten_integral};
use crate::symbols::{
    berg_norm_from, bloch_norm, e_norm_ratio, fejer_sweep, lipschitz_from, little_bloch_tail, pair_distances, path_seminorm,
    q_matrix, OperatorSymbol, QRoute,
};
use crate::weights::{Profile, WeightFamily, WeightModel, VALIDATION_RANGE};

/// Largest moment table built for series-based suites (BMO, Berezin, SCH-BMO).
pub const SERIES_BUDGET: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Moments,
    KernelCheck,
    Bloch,
    Bmo,
    Hankel,
    Schatten,
    Compactness,
    Equivalence,
    Fejer,
    Identities,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Moments,
        Suite::KernelCheck,
        Suite::Bloch,
        Suite::Bmo,
        Suite::Hankel,
        Suite::Schatten,
        Suite::Compactness,
        Suite::Equivalence,
        Suite::Fejer,
        Suite::Identities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Moments => "moments",
            Suite::KernelCheck => "kernel-check",
            Suite::Bloch => "bloch",
            Suite::Bmo => "bmo",
            Suite::Hankel => "hankel",
            Suite::Schatten => "schatten",
            Suite::Compactness => "compactness",
            Suite::Equivalence => "equivalence",
            Suite::Fejer => "fejer",
            Suite::Identities => "identities",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub seed: u64,
    pub strict: bool,
    /// Worker threads; all available cores when `None`.
    pub jobs: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 42,
            strict: false,
            jobs: None,
        }
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    weight: WeightModel,
    symbols: Vec<(String, OperatorSymbol)>,
    seed: u64,
    grid: Grid,
}

impl Ctx<'_> {
    fn d(&self) -> usize {
        self.cfg.d
    }

    fn max_degree(&self) -> u32 {
        self.symbols.iter().map(|(_, t)| t.degree()).max().unwrap_or(0)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    /// Table for Bloch-type quantities on `|z| ≤ radius`, with room for Hankel assembly.
    fn geometry_table(&self, radius: f64) -> Result<KernelCoeffs> {
        let extra = (self.cfg.degree() + 2 * self.max_degree() + 4) as usize;
        KernelCoeffs::covering(&self.weight, self.d(), radius, extra)
    }

    /// Largest radius `≤ want` reachable by the Berezin series within the budget.
    fn series_radius(&self, want: f64) -> f64 {
        let extra = (self.cfg.degree() + 4 * self.max_degree() + 8) as usize;
        let fits = |rho: f64| required_kmax(&self.weight, self.d(), rho * rho) + extra <= SERIES_BUDGET;
        if fits(want) {
            return want;
        }
        let (mut lo, mut hi) = (0.0, want);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn series_table(&self, radius: f64) -> Result<KernelCoeffs> {
        let extra = (self.cfg.degree() + 4 * self.max_degree() + 8) as usize;
        KernelCoeffs::covering_series(&self.weight, self.d(), radius, extra)
    }

    /// The configured grid clipped to `|z| ≤ radius`.
    fn clipped_grid(&self, radius: f64) -> Grid {
        let spec = &self.cfg.grid;
        let r_max = spec.r_max.min(radius);
        Grid::new(
            self.d(),
            &GridSpec {
                r_min: spec.r_min.min(r_max),
                r_max,
                ..spec.clone()
            },
        )
    }

    /// `count` grid points drawn without replacement, reproducibly.
    fn sample_points(&self, grid: &Grid, count: usize, stream: u64) -> Vec<Vec<C64>> {
        let mut pts = grid.points();
        pts.shuffle(&mut self.rng(stream));
        pts.truncate(count);
        pts
    }

    /// Runs `f` on every symbol in parallel, keeping the configured order.
    fn per_symbol<F>(&self, section: &mut Section, f: F)
    where
        F: Fn(&str, &OperatorSymbol, usize) -> Result<Scenario> + Sync,
    {
        let results: Vec<(String, Result<Scenario>)> = self
            .symbols
            .par_iter()
            .enumerate()
            .map(|(i, (name, t))| (name.clone(), f(name, t, i)))
            .collect();
        for (name, r) in results {
            match r {
                Ok(s) => s.merge_into(section),
                Err(e) => section.checks.push(Check::error(CheckKind::Asserted, "evaluation", &name, &e)),
            }
        }
    }
}

/// Output of one scenario: a record, checks and rows for named tables.
#[derive(Default)]
struct Scenario {
    record: serde_json::Value,
    checks: Vec<Check>,
    rows: Vec<(&'static str, Vec<String>)>,
}

impl Scenario {
    fn merge_into(self, section: &mut Section) {
        section.records.push(self.record);
        section.checks.extend(self.checks);
        for (table, row) in self.rows {
            if let Some(t) = section.tables.iter_mut().find(|t| t.name == table) {
                t.rows.push(row);
            }
        }
    }
}

fn f2s(x: f64) -> String {
    format!("{x:e}")
}

/// Runs one suite. Errors only for invalid configurations.
pub fn run(suite: Suite, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    cfg.validate()?;
    let weight = cfg.weight.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let symbols = cfg.build_symbols(&mut rng)?;
    let ctx = Ctx {
        cfg,
        weight: weight.clone(),
        symbols,
        seed: opts.seed,
        grid: Grid::new(cfg.d, &cfg.grid),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let mut section = pool.install(|| match suite {
        Suite::Moments => moments_suite(&ctx),
        Suite::KernelCheck => kernel_suite(&ctx),
        Suite::Bloch => bloch_suite(&ctx),
        Suite::Bmo => bmo_suite(&ctx),
        Suite::Hankel => hankel_suite(&ctx),
        Suite::Schatten => schatten_suite(&ctx),
        Suite::Compactness => compactness_suite(&ctx),
        Suite::Equivalence => equivalence_suite(&ctx),
        Suite::Fejer => fejer_suite(&ctx),
        Suite::Identities => identities_suite(&ctx),
    });
    section.runtime_s = start.elapsed().as_secs_f64();
    let mut report = Report::new(suite.name(), opts.seed, opts.strict, weight.name(), cfg.clone());
    report.sections.push(section);
    report.finish();
    Ok(report)
}

/// Closed-form `ln M_k = ln ∫ s^{k+d−1} e^{−Ψ(s)} ds` where one exists.
fn ln_moment_oracle(weight: &WeightModel, d: usize, k: usize) -> Option<f64> {
    let a = (k + d) as f64;
    match weight.family() {
        WeightFamily::Gaussian => Some(ln_gamma(a)),
        WeightFamily::Power { s } => Some(ln_gamma(a / s) - s.ln()),
        WeightFamily::Exp => None,
    }
}

fn moments_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("moments");
    let w = &ctx.weight;
    let kmax = (2 * ctx.cfg.degree() + 2 * ctx.max_degree() + 2).max(20) as usize;
    let mut table = Table::new("moments", &["k", "ln_moment", "rel_err", "ln_oracle"]);
    match KernelCoeffs::new(w, ctx.d(), kmax) {
        Ok(k) => {
            let m = k.moments();
            let mut worst_oracle: f64 = 0.0;
            let mut has_oracle = false;
            for i in 0..=kmax {
                let oracle = ln_moment_oracle(w, ctx.d(), i);
                if let Some(o) = oracle {
                    has_oracle = true;
                    worst_oracle = worst_oracle.max((m.ln_m[i] - o).abs() / o.abs().max(1.0));
                }
                table.push([i.to_string(), f2s(m.ln_m[i]), f2s(m.rel_err[i]), oracle.map_or(String::new(), f2s)]);
            }
            let worst_err = m.rel_err.iter().copied().fold(0.0, f64::max);
            sec.checks
                .push(Check::at_most(CheckKind::Asserted, "quadrature_rel_err", &w.name(), worst_err, 1e-10));
            if has_oracle {
                sec.checks
                    .push(Check::at_most(CheckKind::Asserted, "closed_form_ln_moment", &w.name(), worst_oracle, 1e-10));
            }
            sec.records.push(json!({ "kmax": kmax, "max_rel_err": worst_err }));
        }
        Err(e) => sec.checks.push(Check::error(CheckKind::Asserted, "moment_table", &w.name(), &e)),
    }
    match w.growth_diagnostic(VALIDATION_RANGE) {
        Ok(g) => sec.records.push(json!({ "growth": g })),
        Err(e) => sec.checks.push(Check::error(CheckKind::Info, "growth", &w.name(), &e)),
    }
    for profile in [Profile::Psi, Profile::Phi] {
        match w.class_s_diagnostic(profile, w.eta(), VALIDATION_RANGE, 1e3) {
            Ok(r) => {
                sec.checks.push(Check::flag(CheckKind::Info, &format!("class_s_{profile:?}").to_lowercase(), &w.name(), r.pass));
                sec.records.push(json!({ "class_s": r }));
            }
            Err(e) => sec.checks.push(Check::error(CheckKind::Info, "class_s", &w.name(), &e)),
        }
    }
    sec.tables.push(table);
    sec
}

fn kernel_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("kernel-check");
    let name = ctx.weight.name();
    let (lo, hi) = (0.5, 6.0);
    let mut table = Table::new("diagonal", &["radius", "direction", "ratio"]);
    let mut body = || -> Result<()> {
        let k = ctx.geometry_table(hi)?;
        let spec = GridSpec {
            radii: ctx.cfg.grid.radii,
            r_min: lo,
            r_max: hi,
            directions: ctx.cfg.grid.directions.min(8),
        };
        let g = Grid::new(ctx.d(), &spec);
        let mut ratios = Vec::new();
        for (i, rad) in g.radii.iter().enumerate() {
            for (j, u) in g.directions.iter().enumerate() {
                let z: Vec<C64> = u.iter().map(|x| x * rad).collect();
                let r = k.kernel_diag_check(&z)?;
                ratios.push(r);
                if j == 0 || i == 0 {
                    table.push([f2s(*rad), j.to_string(), f2s(r)]);
                }
            }
        }
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        sec.checks
            .push(Check::at_most(CheckKind::Band, "diagonal_ratio_spread", &name, max / min, ctx.cfg.tolerances.kernel_band));
        sec.records.push(json!({ "diagonal_ratio": { "min": min, "max": max, "radii": [lo, hi] } }));

        let center_max = if ctx.weight.family() == WeightFamily::Exp { 1.5 } else { 2.0 };
        let mut rng = ctx.rng(1);
        let dirs = sphere_directions(ctx.d(), 10);
        let centers: Vec<Vec<C64>> = dirs
            .iter()
            .enumerate()
            .map(|(i, u)| u.iter().map(|x| x * (center_max * (i as f64 + 0.5) / 10.0)).collect())
            .collect();
        let adm = admissible_a(&k, &centers, &ctx.cfg.sweeps.polyball_a, ctx.cfg.sweeps.polyball_samples, &mut rng)?;
        sec.checks.push(Check::flag(CheckKind::Band, "admissible_a_found", &name, adm.admissible.is_some()));
        sec.records.push(json!({ "polyball_coherence": adm, "center_max": center_max }));
        Ok(())
    };
    if let Err(e) = body() {
        sec.checks.push(Check::error(CheckKind::Asserted, "evaluation", &name, &e));
    }
    sec.tables.push(table);
    sec
}

fn bloch_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("bloch");
    sec.tables.push(Table::new("bloch", &["scenario", "norm", "seminorm", "t0_norm"]));
    // Distance paths may leave the grid radius.
    let k = match ctx.geometry_table(1.5 * ctx.grid.r_max()) {
        Ok(k) => k,
        Err(e) => {
            sec.checks.push(Check::error(CheckKind::Asserted, "kernel_table", "all", &e));
            return sec;
        }
    };
    let tol = &ctx.cfg.tolerances;
    let d = ctx.d() as f64;
    // Distances depend only on the points, so all symbols share one pair set.
    let pairs: Vec<(Vec<C64>, Vec<C64>)> = ctx
        .sample_points(&ctx.grid, 2 * ctx.cfg.pairs, 200)
        .chunks(2)
        .filter(|p| p.len() == 2 && p[0] != p[1])
        .map(|p| (p[0].clone(), p[1].clone()))
        .collect();
    let distances = match pair_distances(&k, &pairs) {
        Ok(x) => x,
        Err(e) => {
            sec.checks.push(Check::error(CheckKind::Asserted, "bergman_distance", "all", &e));
            return sec;
        }
    };
    ctx.per_symbol(&mut sec, |name, t, i| {
        let mut out = Scenario::default();
        let b = bloch_norm(t, &k, &ctx.grid)?;
        let pts = ctx.sample_points(&ctx.grid, ctx.cfg.sweeps.route_points, 10 + i as u64);
        let mut worst_route: f64 = 0.0;
        let mut e_min = f64::INFINITY;
        let mut e_max: f64 = 0.0;
        let mut rng = ctx.rng(100 + i as u64);
        for z in &pts {
            let bd = k.bergman_data(z)?;
            let qt = q_matrix(t, &bd, QRoute::Qt)?.q;
            let b2 = q_matrix(t, &bd, QRoute::B2)?.q;
            let cj = q_matrix(t, &bd, QRoute::Cj)?.q;
            worst_route = worst_route.max(max_abs_diff(&qt, &b2)).max(max_abs_diff(&qt, &cj));
            if let Some(r) = e_norm_ratio(t, &k, z, 16, &mut rng)? {
                e_min = e_min.min(r);
                e_max = e_max.max(r);
            }
        }
        out.checks
            .push(Check::at_most(CheckKind::Asserted, "q_route_agreement", name, worst_route, tol.q_routes));
        if e_max > 0.0 {
            let bound = d.sqrt() * 1.2;
            out.checks.push(Check::at_most(CheckKind::Band, "e_norm_ratio_max", name, e_max, bound));
            out.checks.push(Check::at_least(CheckKind::Band, "e_norm_ratio_min", name, e_min, 1.0 / bound));
        }
        let mut lip_worst: f64 = 0.0;
        let mut lip_bound = 0.0;
        if !t.is_constant() && !pairs.is_empty() {
            for ((z, w), &dist) in pairs.iter().zip(&distances).take(5) {
                let l = lipschitz_from(t, z, w, dist, path_seminorm(t, &k, z, w, &ctx.grid)?)?;
                lip_worst = lip_worst.max(l.ratio);
                lip_bound = l.bound;
            }
            out.checks.push(Check::at_most(CheckKind::Band, "lipschitz_ratio", name, lip_worst, lip_bound));
        }
        let berg = if pairs.is_empty() { None } else { Some(berg_norm_from(t, &pairs, &distances)?) };
        out.rows.push(("bloch", vec![name.to_string(), f2s(b.norm), f2s(b.seminorm), f2s(b.t0_norm)]));
        out.record = json!({
            "scenario": name, "bloch": b, "q_route_max_diff": worst_route,
            "e_norm_ratio": [e_min, e_max], "lipschitz_max_ratio": lip_worst, "berg": berg,
        });
        Ok(out)
    });
    sec
}

fn bmo_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("bmo");
    sec.tables.push(Table::new("bmo", &["scenario", "norm", "seminorm", "t0_norm"]));
    let radius = ctx.series_radius(ctx.grid.r_max());
    let k = match ctx.series_table(radius) {
        Ok(k) => k,
        Err(e) => {
            sec.checks.push(Check::error(CheckKind::Asserted, "kernel_table", "all", &e));
            return sec;
        }
    };
    let grid = ctx.clipped_grid(radius);
    sec.records.push(json!({ "series_radius": radius, "table_kmax": k.kmax() }));
    let route_grid = ctx.clipped_grid(radius.min(3.0));
    let tol = ctx.cfg.tolerances.mo_routes;
    ctx.per_symbol(&mut sec, |name, t, i| {
        let mut out = Scenario::default();
        let b = bmo_norm(t, &k, &grid)?;
        let mut worst: f64 = 0.0;
        for z in ctx.sample_points(&route_grid, ctx.cfg.sweeps.route_points, 300 + i as u64) {
            let (_, _, diff) = mo_route_discrepancy(t, &k, &z)?;
            worst = worst.max(diff);
        }
        out.checks.push(Check::at_most(CheckKind::Asserted, "mo_route_agreement", name, worst, tol));
        let ratio = if t.is_constant() { None } else { Some(bloch_bmo_ratio(t, &k, &grid)?) };
        out.rows.push(("bmo", vec![name.to_string(), f2s(b.norm), f2s(b.seminorm), f2s(b.t0_norm)]));
        out.record = json!({ "scenario": name, "bmo": b, "mo_route_max_diff": worst, "bloch_bmo_ratio": ratio });
        Ok(out)
    });
    sec
}

fn singular_values_of(a: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// The only nonzero coefficient of a symbol `A + B z_k`, if it has that shape.
fn linear_part(t: &OperatorSymbol) -> Option<CMat> {
    if t.degree() != 1 || t.d() != 1 {
        return None;
    }
    t.coefficient(&MultiIndex::unit(1, 0)).cloned()
}

fn hankel_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("hankel");
    sec.tables.push(Table::new("spectra", &["scenario", "n", "s_n"]));
    let k = match ctx.geometry_table(ctx.grid.r_max()) {
        Ok(k) => k,
        Err(e) => {
            sec.checks.push(Check::error(CheckKind::Asserted, "kernel_table", "all", &e));
            return sec;
        }
    };
    let n = ctx.cfg.degree();
    let tol = &ctx.cfg.tolerances;
    let gaussian = ctx.weight.family() == WeightFamily::Gaussian;
    ctx.per_symbol(&mut sec, |name, t, _| {
        let mut out = Scenario::default();
        let h = assemble_hankel(t, &k, n)?;
        let sv = h.singular_values()?;
        let op = sv.first().copied().unwrap_or(0.0);
        let norms: Vec<(f64, f64)> = ctx
            .cfg
            .schatten_p
            .iter()
            .map(|&p| Ok((p, h.schatten_norm(p)?)))
            .collect::<Result<_>>()?;
        let mut prev = None;
        if n >= 2 {
            let op_prev = assemble_hankel(t, &k, n - 2)?.operator_norm()?;
            out.checks.push(Check::at_most(
                CheckKind::Asserted,
                "monotone_truncation",
                name,
                op_prev - op,
                1e-10 * op.max(1.0),
            ));
            out.checks
                .push(Check::at_most(CheckKind::Band, "stabilization", name, (op - op_prev).abs(), tol.stabilization));
            prev = Some(op_prev);
        }
        if t.is_constant() {
            out.checks.push(Check::at_most(CheckKind::Asserted, "constant_symbol_vanishes", name, op, 1e-12));
        }
        if gaussian {
            if let Some(b) = linear_part(t) {
                let mut expect: Vec<f64> = Vec::new();
                for _ in 0..=n {
                    expect.extend(singular_values_of(&b));
                }
                expect.sort_by(|x, y| y.total_cmp(x));
                let dev = expect.iter().zip(&sv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let dev = if expect.len() == sv.len() { dev } else { f64::INFINITY };
                out.checks.push(Check::at_most(CheckKind::Asserted, "linear_isometry", name, dev, tol.isometry));
            }
        }
        let bloch = bloch_norm(t, &k, &ctx.grid)?;
        if bloch.seminorm > 0.0 {
            let bound = 1.1 * (ctx.d() as f64).sqrt() * bloch.seminorm;
            out.checks.push(Check::at_most(CheckKind::Band, "bloch_upper_bound", name, op, bound));
        }
        for (i, s) in sv.iter().enumerate() {
            out.rows.push(("spectra", vec![name.to_string(), (i + 1).to_string(), f2s(*s)]));
        }
        out.record = json!({
            "scenario": name, "degree": n, "dimension": h.dimension(), "operator_norm": op,
            "operator_norm_previous": prev, "schatten": norms, "hs_norm_sq": h.hs_norm_sq(),
            "bloch_seminorm": bloch.seminorm,
        });
        Ok(out)
    });
    sec
}

fn schatten_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("schatten");
    sec.tables.push(Table::new("partials", &["scenario", "quantity", "p", "cutoff", "value"]));
    let sw = &ctx.cfg.sweeps;
    let top = sw.cutoffs.iter().copied().fold(0.0, f64::max);
    let max_hs = sw.hs_degrees.iter().copied().max().unwrap_or(0);
    let extra = (max_hs + 2 * ctx.max_degree() + 4) as usize;
    let k = match KernelCoeffs::covering(&ctx.weight, ctx.d(), top, extra) {
        Ok(k) => k,
        Err(e) => {
            sec.checks.push(Check::error(CheckKind::Asserted, "kernel_table", "all", &e));
            return sec;
        }
    };
    let radius = ctx.series_radius(top);
    let mo_cutoffs: Vec<f64> = sw.cutoffs.iter().copied().filter(|&c| c <= radius).collect();
    let ks = if mo_cutoffs.len() >= 2 { ctx.series_table(radius).ok() } else { None };
    sec.records.push(json!({ "series_radius": radius, "mo_cutoffs": mo_cutoffs }));
    let growth_tol = ctx.cfg.tolerances.growth;
    ctx.per_symbol(&mut sec, |name, t, _| {
        let mut out = Scenario::default();
        let hs = hs_sweep(t, &k, &sw.hs_degrees)?;
        let (hs_div, _) = classify_growth_at(&hs.growth, growth_tol);
        if t.is_constant() {
            let top = hs.sums.iter().copied().fold(0.0, f64::max);
            out.checks.push(Check::at_most(CheckKind::Asserted, "hs_constant_vanishes", name, top, 1e-20));
        } else {
            out.checks.push(Check::flag(CheckKind::Band, "hs_divergent", name, hs_div));
        }
        let mut besov = Vec::new();
        let mut mo = Vec::new();
        for &p in &ctx.cfg.schatten_p {
            let mut b = besov_integral(t, &k, p, &sw.cutoffs, sw.integral_directions)?;
            let (div, conv) = classify_growth_at(&b.growth, growth_tol);
            b.divergent = div;
            b.convergent = conv;
            if t.is_constant() {
                let top = b.values.iter().copied().fold(0.0, f64::max);
                out.checks.push(Check::at_most(CheckKind::Asserted, &format!("besov_p{p}_vanishes"), name, top, 1e-20));
            } else {
                out.checks.push(Check::flag(CheckKind::Info, &format!("besov_p{p}_convergent"), name, conv));
            }
            for (c, v) in b.cutoffs.iter().zip(&b.values) {
                out.rows.push(("partials", vec![name.to_string(), "besov".into(), p.to_string(), c.to_string(), f2s(*v)]));
            }
            if let Some(ks) = &ks {
                let m = mo_schatten_integral(t, ks, p, &mo_cutoffs, sw.integral_directions)?;
                let mut spread: f64 = 1.0;
                for (a, b) in m.values.iter().zip(&b.values) {
                    if *a > 0.0 && *b > 0.0 {
                        spread = spread.max(a / b).max(b / a);
                    }
                }
                if !t.is_constant() {
                    out.checks.push(Check::at_most(CheckKind::Band, &format!("sch_bmo_ratio_p{p}"), name, spread, 10.0));
                }
                for (c, v) in m.cutoffs.iter().zip(&m.values) {
                    out.rows.push(("partials", vec![name.to_string(), "mo".into(), p.to_string(), c.to_string(), f2s(*v)]));
                }
                mo.push(m);
            }
            besov.push(b);
        }
        for (n, v) in hs.degrees.iter().zip(&hs.sums) {
            out.rows.push(("partials", vec![name.to_string(), "hs".into(), "2".into(), n.to_string(), f2s(*v)]));
        }
        out.record = json!({ "scenario": name, "hs": hs, "besov": besov, "mean_oscillation": mo });
        Ok(out)
    });
    sec
}

/// Strictly decreasing with the last value below `ratio` times the first.
fn decays(values: &[f64], ratio: f64) -> bool {
    values.len() >= 2
        && values.windows(2).all(|w| w[1] < w[0])
        && values[values.len() - 1] <= ratio * values[0]
}

fn compactness_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("compactness");
    sec.tables.push(Table::new("tails", &["scenario", "start", "radius", "value"]));
    let sw = &ctx.cfg.sweeps;
    let steps = sw.tail_steps.max(1);
    let r_top = sw.tail_radii.iter().copied().fold(0.0, f64::max) * 1.25f64.powi(steps as i32 - 1);
    let k = match ctx.geometry_table(r_top) {
        Ok(k) => k,
        Err(e) => {
            sec.checks.push(Check::error(CheckKind::Asserted, "kernel_table", "all", &e));
            return sec;
        }
    };
    let r0 = sw.tail_radii.iter().copied().fold(f64::INFINITY, f64::min);
    let radius = ctx.series_radius(r_top);
    let bmo_steps = (0..steps).take_while(|&i| r0 * 1.25f64.powi(i as i32) <= radius).count();
    let ks = if bmo_steps >= 2 { ctx.series_table(radius).ok() } else { None };
    sec.records.push(json!({ "series_radius": radius, "bmo_steps": bmo_steps }));
    let ratio = ctx.cfg.tolerances.decay_ratio;
    let n = ctx.cfg.degree();
    ctx.per_symbol(&mut sec, |name, t, _| {
        let mut out = Scenario::default();
        let mut tails = Vec::new();
        let mut all_decay = !t.is_constant();
        for &r in &sw.tail_radii {
            let tail = little_bloch_tail(t, &k, r, steps, &ctx.grid.directions)?;
            let dec = decays(&tail.values, ratio);
            all_decay &= dec;
            out.checks.push(Check::flag(CheckKind::Info, &format!("tail_decays_r{r}"), name, dec));
            for (rad, v) in tail.radii.iter().zip(&tail.values) {
                out.rows.push(("tails", vec![name.to_string(), r.to_string(), f2s(*rad), f2s(*v)]));
            }
            tails.push(tail);
        }
        out.checks.push(Check::flag(CheckKind::Info, "compact", name, all_decay));
        let sv = assemble_hankel(t, &k, n)?.singular_values()?;
        let mid = sv.len().div_ceil(2).max(1);
        let spectral_ratio = match (sv.first(), sv.get(mid - 1)) {
            (Some(&s1), Some(&sm)) if s1 > 0.0 => Some(sm / s1),
            _ => None,
        };
        let bmo = match &ks {
            Some(ks) => Some(bmo_decay(t, ks, r0, bmo_steps, &ctx.grid.directions)?),
            None => None,
        };
        if let Some(b) = &bmo {
            out.checks.push(Check::flag(CheckKind::Info, "bmo_decays", name, !t.is_constant() && decays(&b.values, ratio)));
        }
        out.record = json!({
            "scenario": name, "tails": tails, "compact": all_decay,
            "middle_to_top_singular_value": spectral_ratio, "bmo_decay": bmo,
        });
        Ok(out)
    });
    sec
}

fn equivalence_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("equivalence");
    sec.tables.push(Table::new("norms", &["scenario", "bloch", "hankel_plus_t0", "bmo", "spread"]));
    let radius = ctx.series_radius(ctx.grid.r_max());
    let k = match ctx.series_table(radius) {
        Ok(k) => k,
        Err(e) => {
            sec.checks.push(Check::error(CheckKind::Asserted, "kernel_table", "all", &e));
            return sec;
        }
    };
    let grid = ctx.clipped_grid(radius);
    let n = ctx.cfg.degree();
    let gaussian = ctx.weight.family() == WeightFamily::Gaussian;
    ctx.per_symbol(&mut sec, |name, t, _| {
        let mut out = Scenario::default();
        let e = norm_equivalence(t, &k, &grid, n)?;
        if gaussian && linear_part(t).is_some() && t.constant_term().iter().all(|x| x.norm() == 0.0) {
            out.checks.push(Check::at_most(CheckKind::Band, "gaussian_linear_spread", name, e.spread, 1.01));
        }
        out.rows.push((
            "norms",
            vec![name.to_string(), f2s(e.bloch), f2s(e.hankel_plus_t0), f2s(e.bmo), f2s(e.spread)],
        ));
        out.record = json!({ "scenario": name, "equivalence": e });
        Ok(out)
    });
    let mut triples = Vec::new();
    for r in &sec.records {
        let e = &r["equivalence"];
        if let (Some(b), Some(h), Some(m)) = (e["bloch"].as_f64(), e["hankel_plus_t0"].as_f64(), e["bmo"].as_f64()) {
            if b > 0.0 && h > 0.0 && m > 0.0 {
                triples.push([b, h, m]);
            }
        }
    }
    let pairs = [("bloch_over_hankel", 0, 1), ("bloch_over_bmo", 0, 2), ("hankel_over_bmo", 1, 2)];
    for (label, i, j) in pairs {
        let ratios: Vec<f64> = triples.iter().map(|t| t[i] / t[j]).collect();
        if ratios.is_empty() {
            continue;
        }
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        sec.checks.push(
            Check::at_most(CheckKind::Band, &format!("{label}_spread"), "all", max / min, ctx.cfg.tolerances.equivalence_band)
                .with_detail(format!("ratio range [{min:e}, {max:e}]")),
        );
    }
    sec.records.push(json!({ "series_radius": radius }));
    sec
}

fn fejer_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("fejer");
    sec.tables.push(Table::new("fejer", &["scenario", "n", "seminorm"]));
    let k = match ctx.geometry_table(ctx.grid.r_max()) {
        Ok(k) => k,
        Err(e) => {
            sec.checks.push(Check::error(CheckKind::Asserted, "kernel_table", "all", &e));
            return sec;
        }
    };
    let ns = &ctx.cfg.sweeps.fejer_degrees;
    ctx.per_symbol(&mut sec, |name, t, _| {
        let mut out = Scenario::default();
        let vals = fejer_sweep(t, &k, &ctx.grid, ns)?;
        let worst_rise = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        if vals.len() >= 2 {
            let slack = 1e-12 * vals[0].max(1.0);
            out.checks.push(Check::at_most(CheckKind::Band, "monotone", name, worst_rise, slack));
        }
        for (n, v) in ns.iter().zip(&vals) {
            out.rows.push(("fejer", vec![name.to_string(), n.to_string(), f2s(*v)]));
        }
        out.record = json!({ "scenario": name, "degrees": ns, "seminorms": vals });
        Ok(out)
    });
    sec
}

/// Largest degree `≤ n` whose truncation has dimension `≤ cap`.
fn degree_for_dimension(d: usize, m: usize, n: u32, cap: usize) -> u32 {
    (0..=n).rev().find(|&k| up_to_degree(d, k).len() * m <= cap).unwrap_or(0)
}

fn identities_suite(ctx: &Ctx) -> Section {
    let mut sec = Section::new("identities");
    let d = ctx.d();
    let m = ctx.cfg.m;
    if d > 2 {
        sec.checks.push(
            Check::flag(CheckKind::Info, "skipped", "all", true).with_detail(format!("identities are evaluated for d ≤ 2, got d = {d}")),
        );
        return sec;
    }
    let n = ctx.cfg.sweeps.identity_degree;
    let tol = &ctx.cfg.tolerances;
    let k = match KernelCoeffs::new(&ctx.weight, d, (n + 2 * ctx.max_degree() + 4) as usize) {
        Ok(k) => k,
        Err(e) => {
            sec.checks.push(Check::error(CheckKind::Asserted, "kernel_table", "all", &e));
            return sec;
        }
    };
    let mut rng = ctx.rng(7);
    let nt = degree_for_dimension(d, m, n, 20);
    let dim = up_to_degree(d, nt).len() * m;
    let g = random_complex_matrix(&mut rng, dim, dim, 1.0);
    let s = &g * g.adjoint() / c(dim as f64, 0.0);
    let trace_tol = if d == 1 { tol.trace_d1 } else { tol.trace_d2 };
    match trace_identity_check(&s, &k, nt, m, ctx.seed) {
        Ok(r) => {
            sec.checks.push(Check::at_most(CheckKind::Asserted, "trace_identity", "random_psd", r.rel_err, trace_tol));
            sec.records.push(json!({ "trace_identity": r, "degree": nt, "dimension": dim }));
        }
        Err(e) => sec.checks.push(Check::error(CheckKind::Asserted, "trace_identity", "random_psd", &e)),
    }

    let mut multipliers: Vec<(String, MixedPolynomial)> = vec![
        ("identity".into(), MixedPolynomial::constant(d, CMat::identity(m, m))),
        (
            "z1".into(),
            MixedPolynomial::from_holomorphic(&OperatorSymbol::monomial(MultiIndex::unit(d, 0), CMat::identity(m, m))),
        ),
    ];
    multipliers.extend(ctx.symbols.iter().map(|(name, t)| (name.clone(), MixedPolynomial::from_holomorphic(t))));
    let results: Vec<(String, Result<crate::identities::HsIdentity>)> = multipliers
        .par_iter()
        .map(|(name, r)| (name.clone(), hs_multiplier_identity_check(r, &k, n)))
        .collect();
    for (name, r) in results {
        match r {
            Ok(h) => {
                let check = Check::at_most(CheckKind::Asserted, "hs_identity", &name, h.rel_err, tol.hs_identity);
                sec.checks.push(if h.converged { check } else { check.with_detail("quadrature not converged") });
                sec.records.push(json!({ "scenario": name, "hs_identity": h }));
            }
            Err(e) => sec.checks.push(Check::error(CheckKind::Asserted, "hs_identity", &name, &e)),
        }
    }

    let r = MixedPolynomial::constant(d, random_complex_matrix(&mut rng, m, m, 1.0));
    match contractivity_check(&r, &k, n, &ctx.grid) {
        Ok(cr) => {
            sec.checks.push(Check::flag(CheckKind::Asserted, "contractivity", "random_constant", cr.pass));
            sec.records.push(json!({ "contractivity": cr }));
        }
        Err(e) => sec.checks.push(Check::error(CheckKind::Asserted, "contractivity", "random_constant", &e)),
    }
    sec
}
