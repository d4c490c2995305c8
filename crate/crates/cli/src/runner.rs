use std::fmt::Display;
use std::path::{Path, PathBuf};

use loewner_core::drivers::{
    path_seed, read_driver_csv, sample_driver_detailed, DriverKind, DriverPath, DriverSample, DriverSpecFile,
    FiniteEnergyDriver, RNG_ALGORITHM,
};
use loewner_core::flow::eval_f_with_derivative_index;
use loewner_core::pathint::{check_representation, follmer_qv, PartitionSequence};
use loewner_core::report::EstimateReport;
use loewner_core::trace::{continuity_experiment, extract_trace, grid_energy, RegularityReport};
use loewner_core::verify::{
    check_cm_bound, check_key1, check_keyest, check_momentof_f, constants_for_kappa, grid_tail_prob, mc_moment,
    PathwiseOptions,
};
use loewner_core::LabError;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Experiment, ExperimentConfig, SeedSpec};
use crate::corpus;
use crate::error::{io_err, CliError, CliResult};
use crate::svg;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub seed_offset: u64,
    /// Treat unconverged trace points as a check failure.
    pub strict: bool,
    /// Directory against which `driver_file` is resolved.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub pass: bool,
    pub checks: Vec<Check>,
    pub json_path: PathBuf,
    pub csv_path: PathBuf,
    pub svg_path: Option<PathBuf>,
    /// The result section of the report.
    pub result: Value,
}

#[derive(Debug, Clone, Serialize)]
struct Meta {
    experiment: &'static str,
    tool_version: &'static str,
    config_sha256: String,
    seed_offset: u64,
    seed_base: Option<u64>,
    seed_count: Option<u64>,
    seeds_sha256: String,
    corpus_sha256: String,
    rng: &'static str,
    pass: bool,
    checks: Vec<Check>,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(cell(&$x)),*] };
}

fn cell(x: &dyn Display) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

struct Output {
    result: Value,
    table: Table,
    checks: Vec<Check>,
    plot: Option<String>,
}

struct Driver {
    name: String,
    kind: Option<DriverKind>,
    spec: Option<DriverSpecFile>,
    sample: DriverSample,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn config_hash(cfg: &ExperimentConfig, seed_offset: u64) -> String {
    let mut bytes = serde_json::to_vec(cfg).expect("config serializes");
    bytes.extend_from_slice(format!("\nseed_offset={seed_offset}").as_bytes());
    sha256_hex(&bytes)
}

fn seeds_hash(seeds: &[u64]) -> String {
    let text: String = seeds.iter().map(|s| format!("{s}\n")).collect();
    sha256_hex(text.as_bytes())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn config_err(m: impl Into<String>) -> CliError {
    CliError::Config(m.into())
}

fn resolve_drivers(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<Vec<Driver>> {
    let from_spec = |name: String, spec: DriverSpecFile| -> CliResult<Driver> {
        spec.kind.validate()?;
        let mut s = spec.clone();
        if let Some(n) = cfg.n {
            s.n = n;
        }
        s.seed = s.seed.wrapping_add(opts.seed_offset);
        let sample = s.sample()?;
        Ok(Driver { name, kind: Some(spec.kind.clone()), spec: Some(s), sample })
    };
    if let Some(spec) = &cfg.driver {
        return Ok(vec![from_spec("driver".into(), spec.clone())?]);
    }
    if let Some(file) = &cfg.driver_file {
        let path = match &opts.base_dir {
            Some(b) if file.is_relative() => b.join(file),
            _ => file.clone(),
        };
        let f = std::fs::File::open(&path).map_err(io_err(&path))?;
        let u = read_driver_csv(std::io::BufReader::new(f))?;
        let name = path.file_stem().map_or("file".into(), |s| s.to_string_lossy().into_owned());
        let sample = DriverSample { path: u, brownian: None, ou: None, perturbation: None, seed: 0 };
        return Ok(vec![Driver { name, kind: None, spec: None, sample }]);
    }
    let names = match &cfg.corpus {
        Some(n) => n.clone(),
        None if cfg.experiment == Experiment::VerifyCm => corpus::finite_energy_names(),
        None => return Ok(Vec::new()),
    };
    names
        .into_iter()
        .map(|n| {
            let e = corpus::lookup(&n).ok_or_else(|| config_err(format!("unknown corpus driver `{n}`")))?;
            from_spec(e.name, e.spec)
        })
        .collect()
}

fn single(drivers: Vec<Driver>, what: &str) -> CliResult<Driver> {
    let mut it = drivers.into_iter();
    match (it.next(), it.next()) {
        (Some(d), None) => Ok(d),
        (None, _) => Err(config_err(format!("{what} needs a driver"))),
        _ => Err(config_err(format!("{what} takes a single driver"))),
    }
}

fn spec_of(d: &Driver, what: &str) -> CliResult<(DriverKind, DriverSpecFile)> {
    match (&d.kind, &d.spec) {
        (Some(k), Some(s)) => Ok((k.clone(), s.clone())),
        _ => Err(config_err(format!("{what} needs a driver spec, not a file"))),
    }
}

fn seed_spec(cfg: &ExperimentConfig, default_base: u64, default_count: u64, opts: &RunOptions) -> SeedSpec {
    let s = cfg.seeds.unwrap_or(SeedSpec { base: default_base, count: default_count });
    SeedSpec { base: s.base.wrapping_add(opts.seed_offset), count: s.count }
}

fn seed_list(s: SeedSpec) -> Vec<u64> {
    (0..s.count).map(|i| path_seed(s.base, i)).collect()
}

/// Diffusivity feeding the constants: the config value, else the class value,
/// else 1 for deterministic drivers.
fn effective_kappa(cfg: &ExperimentConfig, kind: &DriverKind, horizon: f64) -> CliResult<f64> {
    let k = match cfg.kappa {
        Some(k) => k,
        None if kind.is_deterministic() => 1.0,
        None => kind.nominal_kappa(horizon).unwrap_or(1.0),
    };
    constants_for_kappa(k)?;
    Ok(k)
}

fn index_list(u: &DriverPath, ts: &[f64]) -> CliResult<Vec<usize>> {
    ts.iter().map(|&t| u.grid().index_of(t).map_err(CliError::from)).collect()
}

fn report_rows(table: &mut Table, driver: &str, seed: u64, r: &EstimateReport) {
    for e in &r.entries {
        table.push(row![driver, seed, e.t, e.x, e.y, e.log_lhs, e.log_rhs, e.margin, r.gated.is_some()]);
    }
    if r.entries.is_empty() && r.gated.is_some() {
        table.push(row![driver, seed, "", "", "", "", "", "", true]);
    }
}

const REPORT_HEADER: [&str; 9] = ["driver", "seed", "t", "x", "y", "log_lhs", "log_rhs", "margin", "gated"];

fn margin_histogram(title: &str, reports: &[&EstimateReport]) -> String {
    let v: Vec<f64> = reports.iter().flat_map(|r| r.entries.iter().map(|e| e.margin.ln())).collect();
    svg::histogram(title, &v, 30)
}

fn run_gen(cfg: &ExperimentConfig, drivers: Vec<Driver>) -> CliResult<(Output, Vec<u64>)> {
    let d = single(drivers, "gen")?;
    let u = &d.sample.path;
    let mut table = Table::new(&["t", "u"]);
    for (i, v) in u.values().iter().enumerate() {
        table.push(row![u.grid().time(i), v]);
    }
    let result = json!({
        "driver": d.name,
        "spec": d.spec,
        "steps": u.grid().steps(),
        "sup_norm": u.sup_norm(),
        "holder_half_norm": u.holder_half_norm(),
        "grid_energy": grid_energy(u),
    });
    let plot = cfg.plot.then(|| {
        let pts = u.values().iter().enumerate().map(|(i, v)| (u.grid().time(i), *v)).collect();
        svg::line_plot(&format!("driver {}", d.name), &[pts])
    });
    Ok((Output { result, table, checks: Vec::new(), plot }, vec![d.sample.seed]))
}

fn run_solve(cfg: &ExperimentConfig, drivers: Vec<Driver>) -> CliResult<(Output, Vec<u64>)> {
    let d = single(drivers, "solve")?;
    let u = &d.sample.path;
    let ks = index_list(u, &cfg.ts)?;
    let mut jobs = Vec::new();
    for (&k, &t) in ks.iter().zip(&cfg.ts) {
        for &y in &cfg.ys {
            for &x in &cfg.xs {
                jobs.push((k, t, x, y));
            }
        }
    }
    let vals: Vec<(Complex64, Complex64)> = jobs
        .par_iter()
        .map(|&(k, _, x, y)| eval_f_with_derivative_index(u, Complex64::new(x, y), k, &cfg.flow))
        .collect::<Result<_, LabError>>()?;
    let mut table = Table::new(&["t", "x", "y", "f_re", "f_im", "fprime_abs"]);
    let mut finite = true;
    for (&(_, t, x, y), (f, dfz)) in jobs.iter().zip(&vals) {
        finite &= f.re.is_finite() && f.im.is_finite() && dfz.norm().is_finite();
        table.push(row![t, x, y, f.re, f.im, dfz.norm()]);
    }
    let checks = vec![Check::new("finite", finite, "all map values finite")];
    Ok((Output { result: json!({ "driver": d.name, "points": jobs.len() }), table, checks, plot: None }, vec![d.sample.seed]))
}

fn run_trace(cfg: &ExperimentConfig, drivers: Vec<Driver>, opts: &RunOptions) -> CliResult<(Output, Vec<u64>)> {
    let d = single(drivers, "trace")?;
    let tr = extract_trace(&d.sample.path, &cfg.trace, &cfg.flow)?;
    let reg = RegularityReport::compute(&tr, cfg.pvar, cfg.separation);
    let mut table = Table::new(&["t", "re", "im", "converged", "level", "gap"]);
    for p in &tr.points {
        table.push(row![p.t, p.gamma.re, p.gamma.im, p.converged, p.level, p.gap]);
    }
    let unconverged = tr.unconverged();
    let mut checks = vec![Check::new("holder_half_finite", reg.holder_half.is_finite(), format!("{}", reg.holder_half))];
    if opts.strict {
        checks.push(Check::new("all_converged", unconverged == 0, format!("{unconverged} unconverged points")));
    }
    let result = json!({
        "driver": d.name,
        "points": tr.points.len(),
        "unconverged": unconverged,
        "converged_fraction": tr.converged_fraction(),
        "regularity": reg,
    });
    let plot = cfg.plot.then(|| {
        let (_, zs) = tr.converged_points();
        svg::line_plot(&format!("trace {}", d.name), &[zs.iter().map(|z| (z.re, z.im)).collect()])
    });
    Ok((Output { result, table, checks, plot }, vec![d.sample.seed]))
}

fn run_qv(cfg: &ExperimentConfig, drivers: Vec<Driver>) -> CliResult<(Output, Vec<u64>)> {
    let d = single(drivers, "qv")?;
    let u = &d.sample.path;
    let parts = PartitionSequence::standard(u.grid().steps(), cfg.max_levels)?;
    let qv = follmer_qv(u, &parts, u.grid().horizon())?;
    let mut table = Table::new(&["level", "mesh_steps", "mesh", "bracket"]);
    for (l, total) in qv.totals().iter().enumerate() {
        let m = parts.mesh(l);
        table.push(row![l, m, m as f64 * u.grid().dt(), total]);
    }
    let result = json!({ "driver": d.name, "bracket": qv.total(), "kappa_hat": qv.kappa_hat, "finest_mesh": qv.finest_mesh() });
    Ok((Output { result, table, checks: Vec::new(), plot: None }, vec![d.sample.seed]))
}

fn run_represent(cfg: &ExperimentConfig, drivers: Vec<Driver>) -> CliResult<(Output, Vec<u64>)> {
    let d = single(drivers, "represent")?;
    let u = &d.sample.path;
    let jobs: Vec<(f64, f64)> = cfg.ts.iter().flat_map(|&t| cfg.ys.iter().map(move |&y| (t, y))).collect();
    let reports: Vec<EstimateReport> = jobs
        .par_iter()
        .map(|&(t, y)| check_representation(u, Complex64::new(0.0, y), t, None, &cfg.flow, cfg.form, cfg.slack))
        .collect::<Result<_, LabError>>()?;
    let mut table = Table::new(&["t", "y", "log_lhs", "log_rhs", "gap"]);
    let mut pass = true;
    let mut max_gap: f64 = 0.0;
    for r in &reports {
        pass &= r.pass;
        max_gap = max_gap.max(r.max_gap);
        for e in &r.entries {
            table.push(row![e.t, e.y, e.log_lhs, e.log_rhs, e.gap]);
        }
    }
    let plot = cfg.plot.then(|| {
        let series: Vec<Vec<(f64, f64)>> = reports
            .iter()
            .map(|r| r.level_gaps.iter().enumerate().map(|(l, g)| (l as f64, g.max(1e-300).log10())).collect())
            .collect();
        svg::line_plot("log10 gap per partition level", &series)
    });
    let checks = vec![Check::new("identity", pass, format!("max gap {max_gap:e} vs tolerance {:e}", cfg.slack))];
    Ok((Output { result: json!({ "driver": d.name, "reports": reports }), table, checks, plot }, vec![d.sample.seed]))
}

fn run_cm(cfg: &ExperimentConfig, drivers: Vec<Driver>) -> CliResult<(Output, Vec<u64>)> {
    let mut table = Table::new(&REPORT_HEADER);
    let mut checks = Vec::new();
    let mut results = Vec::new();
    let mut all = Vec::new();
    for d in &drivers {
        if d.kind.as_ref().is_some_and(|k| !k.is_deterministic()) {
            return Err(config_err(format!("verify-cm needs finite-energy drivers; `{}` is random", d.name)));
        }
        let h = FiniteEnergyDriver::from_path(d.sample.path.clone())?;
        let (plain, finer) = check_cm_bound(&h, &cfg.ts, &cfg.ys, &cfg.rays, &cfg.flow, cfg.slack)?;
        for r in [&plain, &finer] {
            report_rows(&mut table, &d.name, d.sample.seed, r);
            checks.push(Check::new(format!("{}/{}", d.name, r.name), r.pass, format!("min margin {}", r.min_margin)));
        }
        results.push(json!({ "driver": d.name, "cm": plain, "finer": finer }));
        all.push(plain);
        all.push(finer);
    }
    if drivers.is_empty() {
        return Err(config_err("verify-cm needs at least one driver"));
    }
    let plot = cfg.plot.then(|| margin_histogram("log margin", &all.iter().collect::<Vec<_>>()));
    let seeds = drivers.iter().map(|d| d.sample.seed).collect();
    Ok((Output { result: json!({ "drivers": results }), table, checks, plot }, seeds))
}

fn run_pathwise(cfg: &ExperimentConfig, drivers: Vec<Driver>, opts: &RunOptions, key1: bool) -> CliResult<(Output, Vec<u64>)> {
    if drivers.is_empty() {
        return Err(config_err("pathwise checks need a driver"));
    }
    let name = if key1 { "key1" } else { "keyest" };
    let mut table = Table::new(&REPORT_HEADER);
    let mut checks = Vec::new();
    let mut results = Vec::new();
    let mut seeds_used = Vec::new();
    let mut all = Vec::new();
    for d in &drivers {
        let mut popts = match &d.kind {
            Some(k) => PathwiseOptions::for_kind(k),
            None => PathwiseOptions { mode: loewner_core::verify::IntegralMode::Stieltjes, ..Default::default() },
        };
        popts.max_levels = cfg.max_levels;
        popts.kappa = cfg.kappa;
        let samples: Vec<DriverSample> = match (&d.kind, &d.spec) {
            (Some(k), Some(spec)) if !k.is_deterministic() && cfg.seeds.is_some() => {
                let s = seed_spec(cfg, spec.seed, 1, opts);
                let grid = spec.grid()?;
                seed_list(s)
                    .par_iter()
                    .map(|&seed| sample_driver_detailed(k, grid, seed))
                    .collect::<Result<_, LabError>>()?
            }
            _ => vec![d.sample.clone()],
        };
        if key1 {
            let kind = d.kind.as_ref().ok_or_else(|| config_err("verify-key1 needs a driver spec, not a file"))?;
            if cfg.kappa.is_none() && !kind.is_deterministic() {
                constants_for_kappa(kind.nominal_kappa(d.sample.path.grid().horizon()).unwrap_or(1.0))?;
            }
        }
        let reports: Vec<EstimateReport> = samples
            .par_iter()
            .map(|s| match (key1, &d.kind) {
                (true, Some(k)) => check_key1(k, s, &cfg.ts, &cfg.ys, &popts, &cfg.flow, cfg.slack),
                _ => check_keyest(&s.path, &cfg.ts, &cfg.ys, &popts, &cfg.flow, cfg.slack),
            })
            .collect::<Result<_, LabError>>()?;
        let tested: Vec<&EstimateReport> = reports.iter().filter(|r| r.gated.is_none()).collect();
        let passed = tested.iter().filter(|r| r.pass).count();
        let gated = reports.len() - tested.len();
        let fraction = if tested.is_empty() { 0.0 } else { passed as f64 / tested.len() as f64 };
        let need = if samples.len() == 1 { 1.0 } else { cfg.required_fraction };
        checks.push(Check::new(
            format!("{}/{name}", d.name),
            !tested.is_empty() && fraction >= need,
            format!("{passed}/{} passed, {gated} gated, required fraction {need}", tested.len()),
        ));
        for (s, r) in samples.iter().zip(&reports) {
            report_rows(&mut table, &d.name, s.seed, r);
            seeds_used.push(s.seed);
        }
        let min_margin = tested.iter().map(|r| r.min_margin).fold(f64::INFINITY, f64::min);
        results.push(json!({
            "driver": d.name,
            "samples": reports.len(),
            "gated": gated,
            "passed": passed,
            "pass_fraction": fraction,
            "min_margin": min_margin,
            "reports": reports,
        }));
        all.extend(reports);
    }
    let plot = cfg.plot.then(|| margin_histogram(&format!("{name} log margin"), &all.iter().collect::<Vec<_>>()));
    Ok((Output { result: json!({ "drivers": results }), table, checks, plot }, seeds_used))
}

fn run_mc(cfg: &ExperimentConfig, drivers: Vec<Driver>, opts: &RunOptions) -> CliResult<(Output, Vec<u64>)> {
    let d = single(drivers, "mc-moment")?;
    let (kind, spec) = spec_of(&d, "mc-moment")?;
    let kappa = effective_kappa(cfg, &kind, spec.horizon)?;
    let c = constants_for_kappa(kappa)?;
    let s = seed_spec(cfg, spec.seed, 1000, opts);
    let r = mc_moment(&kind, spec.grid()?, &c, &cfg.ts, &cfg.ys, s.count, s.base, &cfg.flow)?;
    let mut table = Table::new(&["t", "y", "mean", "ci95", "proxy_mean", "proxy_ci95", "count"]);
    for e in &r.entries {
        table.push(row![e.t, e.y, e.mean, e.ci95, e.proxy_mean, e.proxy_ci95, e.count]);
    }
    let mut checks = vec![
        Check::new("finite", r.all_finite, format!("max ci/mean {}", r.max_rel_ci)),
        Check::new("proxy_supermartingale", r.proxy_ok, "proxy mean <= 1 + 3 ci95 everywhere"),
    ];
    if let Some(m) = cfg.y_ratio_max {
        checks.push(Check::new("y_ratio", r.max_y_ratio < m, format!("max/min across y = {} (limit {m})", r.max_y_ratio)));
    }
    let plot = cfg.plot.then(|| {
        let series = cfg
            .ts
            .iter()
            .map(|&t| r.entries.iter().filter(|e| e.t == t).map(|e| (e.y.log10(), e.mean.log10())).collect())
            .collect::<Vec<_>>();
        svg::line_plot("log10 E|f'|^b against log10 y", &series)
    });
    let seeds = seed_list(s);
    Ok((Output { result: to_value(&r), table, checks, plot }, seeds))
}

fn run_momentof_f(cfg: &ExperimentConfig, drivers: Vec<Driver>, opts: &RunOptions) -> CliResult<(Output, Vec<u64>)> {
    let f = match (&cfg.functional, drivers.first().and_then(|d| d.kind.clone())) {
        (Some(f), _) => *f,
        (None, Some(DriverKind::Functional(f))) => f,
        _ => return Err(config_err("momentof-f needs `functional` or a functional driver")),
    };
    let s = seed_spec(cfg, 0, 10_000, opts);
    let reports = cfg
        .horizons
        .iter()
        .map(|&h| check_momentof_f(&f, cfg.alpha, h, cfg.steps, s.count, s.base))
        .collect::<Result<Vec<_>, LabError>>()?;
    let mut table = Table::new(&["horizon", "alpha", "mean", "ci95", "log_mean", "top_decile_share", "oracle"]);
    let mut checks = Vec::new();
    for r in &reports {
        table.push(row![r.horizon, r.alpha, r.mean, r.ci95, r.log_mean, r.top_decile_share, opt(r.oracle)]);
        checks.push(Check::new(format!("finite/T={}", r.horizon), r.finite, format!("mean {}", r.mean)));
        if let Some(m) = cfg.top_share_max {
            checks.push(Check::new(
                format!("top_decile/T={}", r.horizon),
                r.top_decile_share < m,
                format!("share {} (limit {m})", r.top_decile_share),
            ));
        }
    }
    let seeds = (0..s.count).map(|i| path_seed(s.base, i)).collect();
    Ok((Output { result: json!({ "reports": reports }), table, checks, plot: None }, seeds))
}

fn run_tail(cfg: &ExperimentConfig, drivers: Vec<Driver>, opts: &RunOptions) -> CliResult<(Output, Vec<u64>)> {
    let d = single(drivers, "tail")?;
    let (kind, spec) = spec_of(&d, "tail")?;
    let s = seed_spec(cfg, spec.seed, 1000, opts);
    let t = grid_tail_prob(&kind, spec.horizon, &cfg.ts, cfg.theta, cfg.b_target, s.count, cfg.levels[0]..=cfg.levels[1], s.base, &cfg.flow)?;
    let mut table = Table::new(&["m", "y", "threshold", "exceedances", "trials", "prob"]);
    for r in &t.rows {
        table.push(row![r.m, r.y, r.threshold, r.exceedances, r.trials, r.prob]);
    }
    let detail = match t.slope {
        Some(sl) => format!("slope {sl} over levels {:?}, need >= {}", t.fitted_levels, t.b_target - 0.5),
        None => format!("no slope: {} levels with >= 10 exceedances", t.fitted_levels.len()),
    };
    let checks = vec![Check::new("tail_slope", t.pass, detail)];
    Ok((Output { result: to_value(&t), table, checks, plot: None }, seed_list(s)))
}

fn run_continuity(cfg: &ExperimentConfig, drivers: Vec<Driver>) -> CliResult<(Output, Vec<u64>)> {
    let d = single(drivers, "continuity")?;
    let u = &d.sample.path;
    let h = cfg.perturbation.build(*u.grid())?;
    let seq = cfg
        .scales
        .iter()
        .map(|&c| u.add(h.scaled(c)?.path()))
        .collect::<Result<Vec<_>, LabError>>()?;
    let tab = continuity_experiment(u, &seq, &cfg.continuity, &cfg.trace, &cfg.flow)?;
    let mut table = Table::new(&["index", "driver_dist", "energy", "sup_dist", "holder_dist", "pvar_dist"]);
    for r in &tab.rows {
        table.push(row![r.index, r.driver_dist, r.energy, r.sup_dist, r.holder_dist, r.pvar_dist]);
    }
    let checks = vec![Check::new(
        "decay",
        tab.decay_ok && tab.refused.is_none(),
        tab.refused.clone().unwrap_or_else(|| format!("required factor {} per halving", cfg.continuity.decay_factor)),
    )];
    Ok((Output { result: json!({ "driver": d.name, "table": tab }), table, checks, plot: None }, vec![d.sample.seed]))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Runs one experiment and writes `<experiment>-<hash>.{json,csv}` (and `.svg`
/// when plotting) into `opts.out`.
pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<RunOutcome> {
    cfg.validate()?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = opts.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| config_err(e.to_string()))?
    };
    let (out, seeds) = pool.install(|| -> CliResult<(Output, Vec<u64>)> {
        let drivers = resolve_drivers(cfg, opts)?;
        match cfg.experiment {
            Experiment::Gen => run_gen(cfg, drivers),
            Experiment::Solve => run_solve(cfg, drivers),
            Experiment::Trace => run_trace(cfg, drivers, opts),
            Experiment::Qv => run_qv(cfg, drivers),
            Experiment::Represent => run_represent(cfg, drivers),
            Experiment::VerifyCm => run_cm(cfg, drivers),
            Experiment::VerifyKeyest => run_pathwise(cfg, drivers, opts, false),
            Experiment::VerifyKey1 => run_pathwise(cfg, drivers, opts, true),
            Experiment::McMoment => run_mc(cfg, drivers, opts),
            Experiment::MomentofF => run_momentof_f(cfg, drivers, opts),
            Experiment::Tail => run_tail(cfg, drivers, opts),
            Experiment::Continuity => run_continuity(cfg, drivers),
        }
    })?;
    let pass = out.checks.iter().all(|c| c.pass);
    let hash = config_hash(cfg, opts.seed_offset);
    let seed_spec = cfg.seeds.map(|s| SeedSpec { base: s.base.wrapping_add(opts.seed_offset), count: s.count });
    let meta = Meta {
        experiment: cfg.experiment.name(),
        tool_version: env!("CARGO_PKG_VERSION"),
        config_sha256: hash.clone(),
        seed_offset: opts.seed_offset,
        seed_base: seed_spec.map(|s| s.base),
        seed_count: seed_spec.map(|s| s.count),
        seeds_sha256: seeds_hash(&seeds),
        corpus_sha256: corpus::manifest()?.corpus_sha256,
        rng: RNG_ALGORITHM,
        pass,
        checks: out.checks.clone(),
    };
    std::fs::create_dir_all(&opts.out).map_err(io_err(&opts.out))?;
    let stem = format!("{}-{}", cfg.experiment.name(), &hash[..12]);
    let json_path = opts.out.join(format!("{stem}.json"));
    let csv_path = opts.out.join(format!("{stem}.csv"));
    let doc = json!({ "meta": meta, "config": cfg, "result": out.result });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    write_file(&json_path, text.as_bytes())?;
    let mut csv = format!(
        "# experiment={} config_sha256={} seeds_sha256={} seed_offset={}\n",
        cfg.experiment.name(),
        hash,
        meta.seeds_sha256,
        opts.seed_offset
    );
    csv.push_str(&out.table.header.join(","));
    csv.push('\n');
    for r in &out.table.rows {
        csv.push_str(&r.join(","));
        csv.push('\n');
    }
    write_file(&csv_path, csv.as_bytes())?;
    let svg_path = match &out.plot {
        Some(s) => {
            let p = opts.out.join(format!("{stem}.svg"));
            write_file(&p, s.as_bytes())?;
            Some(p)
        }
        None => None,
    };
    Ok(RunOutcome { pass, checks: out.checks, json_path, csv_path, svg_path, result: out.result })
}

pub fn run_file(path: &Path, opts: &RunOptions) -> CliResult<RunOutcome> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let mut opts = opts.clone();
    if opts.base_dir.is_none() {
        opts.base_dir = path.parent().map(Path::to_path_buf);
    }
    run_config(&cfg, &opts)
}

/// Exit code for a finished run or an error: 0 pass, 1 check failure, 2 configuration or input error.
pub fn exit_code(r: &CliResult<RunOutcome>) -> i32 {
    match r {
        Ok(o) if o.pass => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}
