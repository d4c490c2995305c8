//! Acceptance suite. Runs every criterion at its stated tolerance and prints one
//! PASS/FAIL line each. Criteria recorded as unattainable in the decisions
//! ledger are printed but do not fail the run; their attainable parts still do.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use loewner_cli::corpus::{lookup, standard_corpus};
use loewner_cli::{run_config, Check, ExperimentConfig, RunOptions, RunOutcome};
use loewner_core::drivers::{path_seed, sample_driver, sample_driver_detailed, DriverKind, DriverPath, DriverSpecFile, TimeGrid};
use loewner_core::flow::{eval_f, eval_f_with_derivative_index, forward_point, FlowConfig};
use loewner_core::pathint::{
    check_representation, follmer_integral, follmer_qv, follmer_qv_values, PartitionSequence, RepresentationForm,
};
use loewner_core::stats::RunningStats;
use loewner_core::trace::{extract_trace, holder_half_norm, sqrt_reparam_lip, RegularityReport, TraceConfig};
use loewner_core::verify::{check_key1, check_keyest, constants_for_kappa, PathwiseOptions};
use num_complex::Complex64;

const DETERMINISTIC: [&str; 5] = ["zero", "linear_0_5", "linear_1", "linear_2", "piecewise"];

struct Line {
    id: u8,
    title: &'static str,
    pass: bool,
    /// Set when the failing part is documented as unattainable.
    known: Option<&'static str>,
    detail: String,
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    let path = configs_dir().join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run_in(cfg: &ExperimentConfig, out: &Path, threads: Option<usize>) -> RunOutcome {
    let opts = RunOptions { out: out.to_path_buf(), threads, base_dir: Some(configs_dir()), ..Default::default() };
    run_config(cfg, &opts).unwrap_or_else(|e| panic!("{}: {e}", cfg.experiment.name()))
}

fn check<'a>(o: &'a RunOutcome, name: &str) -> &'a Check {
    o.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check `{name}`"))
}

fn corpus_path(name: &str, n: usize) -> DriverPath {
    let e = lookup(name).unwrap();
    DriverSpecFile { n, ..e.spec }.sample().unwrap().path
}

fn crit1() -> Line {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let u = DriverPath::zero(TimeGrid::new(1.0, 256).unwrap());
    let cfg = FlowConfig::rk4(8);
    let s5 = 5f64.sqrt();
    let g = forward_point(&u, Complex64::new(0.0, 3.0), 1.0, &cfg).unwrap().value().unwrap();
    worst = worst.max((g - Complex64::new(0.0, s5)).norm());
    let f = eval_f(&u, Complex64::new(0.0, s5), 1.0, &cfg).unwrap();
    worst = worst.max((f - Complex64::new(0.0, 3.0)).norm());
    for &t in &[0.25, 0.5, 1.0] {
        let k = u.grid().index_of(t).unwrap();
        for &y in &[1.0, 0.1, 0.01] {
            let (_, d) = eval_f_with_derivative_index(&u, Complex64::new(0.0, y), k, &cfg).unwrap();
            worst = worst.max((d.norm() - y / (y * y + 4.0 * t).sqrt()).abs());
        }
    }
    let tr = extract_trace(&u, &TraceConfig { tol: 1e-5, ..TraceConfig::default() }, &FlowConfig::slit(1)).unwrap();
    let trace_err = tr
        .points
        .iter()
        .map(|p| (p.gamma - Complex64::new(0.0, 2.0 * p.t.sqrt())).norm())
        .fold(0.0, f64::max);
    let holder = holder_half_norm(&tr).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-6 && trace_err < 1e-3 && (holder - 2.0).abs() < 1e-3 && tr.unconverged() == 0 && secs < 1.0;
    Line {
        id: 1,
        title: "zero-driver closed forms",
        pass,
        known: None,
        detail: format!("map err {worst:.1e}, trace err {trace_err:.1e}, holder {holder:.6}, {secs:.2}s"),
    }
}

fn crit2(out: &Path) -> Line {
    let cfg = load("verify-cm");
    let start = Instant::now();
    let o = run_in(&cfg, out, None);
    let secs = start.elapsed().as_secs_f64();
    let names = loewner_cli::corpus::finite_energy_names();
    // one plain and one cone report per finite-energy driver
    let covered = o.checks.len() == 2 * names.len();
    let shape = cfg.ts.len() == 10 && cfg.ys.len() == 10 && cfg.rays.len() == 3 && cfg.n == Some(1 << 14);
    let failed: Vec<&str> = o.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    Line {
        id: 2,
        title: "finite-energy derivative bounds",
        pass: o.pass && covered && shape && secs < 30.0,
        known: None,
        detail: format!("{} drivers, {} checks, failed {failed:?}, {secs:.1}s", names.len(), o.checks.len()),
    }
}

fn crit3() -> Line {
    let mut pass = true;
    let mut worst_final: f64 = 0.0;
    let mut worst_ratio = f64::INFINITY;
    for name in DETERMINISTIC {
        for &(t, y) in &[(0.5, 1.0), (1.0, 0.1)] {
            let gaps: Vec<f64> = (10..=13)
                .map(|l| {
                    let u = corpus_path(name, 1 << l);
                    check_representation(
                        &u,
                        Complex64::new(0.0, y),
                        t,
                        None,
                        &FlowConfig::rk4(4),
                        RepresentationForm::RiemannStieltjes,
                        1e-4,
                    )
                    .unwrap()
                    .max_gap
                })
                .collect();
            let last = *gaps.last().unwrap();
            worst_final = worst_final.max(last);
            pass &= last < 1e-4;
            // the zero driver is exact up to rounding, no rate to measure
            if gaps[0] > 1e-11 {
                for w in gaps.windows(2) {
                    let r = w[0] / w[1];
                    worst_ratio = worst_ratio.min(r);
                    pass &= r >= 2.0;
                }
            }
        }
    }
    Line {
        id: 3,
        title: "representation identity",
        pass,
        known: None,
        detail: format!("max gap at n=2^13 {worst_final:.1e}, min refinement ratio {worst_ratio:.2}"),
    }
}

fn crit4() -> Line {
    // gradient form: sum U dU = U^2/2 - [U]/2 at every level
    let n = 1 << 12;
    let g = TimeGrid::new(1.0, n).unwrap();
    let parts = PartitionSequence::standard(n, 6).unwrap();
    let mut grad_err: f64 = 0.0;
    for seed in 0..5 {
        let u = sample_driver(&DriverKind::Brownian { kappa: 1.0 }, g, seed).unwrap();
        for &k in &[n / 4, n / 2, n] {
            let m = follmer_integral(u.values(), u.values(), &parts, k).unwrap();
            let qv = follmer_qv_values(u.values(), g.dt(), &parts, k).unwrap();
            let x = u.value(k);
            for (l, v) in m.levels.iter().enumerate() {
                grad_err = grad_err.max((v - (0.5 * x * x - 0.5 * qv.levels[l][k])).abs());
            }
        }
    }

    let n = 1 << 16;
    let g = TimeGrid::new(1.0, n).unwrap();
    let parts = PartitionSequence::standard(n, 6).unwrap();
    let start = Instant::now();
    let (mut full, mut half) = (RunningStats::new(), RunningStats::new());
    for s in 0..1000 {
        let u = sample_driver(&DriverKind::Brownian { kappa: 1.0 }, g, path_seed(2024, s)).unwrap();
        let q = follmer_qv(&u, &parts, 1.0).unwrap();
        full.push(q.total());
        half.push(q.at(n / 2));
    }
    let secs = start.elapsed().as_secs_f64();
    let qv_ok = (full.mean - 1.0).abs() <= 0.03 && (half.mean / 0.5 - 1.0).abs() <= 0.03 && secs < 120.0;

    let n = 1 << 12;
    let g = TimeGrid::new(1.0, n).unwrap();
    let parts = PartitionSequence::standard(n, 6).unwrap();
    let mut rev_err: f64 = 0.0;
    for seed in 0..5 {
        let u = sample_driver(&DriverKind::Brownian { kappa: 1.0 }, g, 100 + seed).unwrap();
        let beta: Vec<f64> = (0..=n).map(|j| u.value(n) - u.value(n - j)).collect();
        let qb = follmer_qv_values(&beta, g.dt(), &parts.reflected(), n).unwrap();
        let qu = follmer_qv(&u, &parts, 1.0).unwrap();
        for &m in parts.finest() {
            rev_err = rev_err.max((qb.at(m) - (qu.total() - qu.at(n - m))).abs() / qu.total());
        }
    }
    Line {
        id: 4,
        title: "Föllmer machinery",
        pass: grad_err < 1e-12 && qv_ok && rev_err < 1e-12,
        known: None,
        detail: format!(
            "gradient err {grad_err:.1e}, QV mean {:.4} (t=1) {:.4} (t=1/2) in {secs:.1}s, reversal rel err {rev_err:.1e}",
            full.mean, half.mean
        ),
    }
}

fn crit5() -> Line {
    let ts = [0.25, 0.5, 0.75, 1.0];
    let ys = [1.0, 0.1, 0.01];
    let mut det_ok = true;
    let mut det_min = f64::INFINITY;
    for name in DETERMINISTIC {
        let e = lookup(name).unwrap();
        let s = e.spec.sample().unwrap();
        let o = PathwiseOptions::for_kind(&e.spec.kind);
        let a = check_keyest(&s.path, &ts, &ys, &o, &FlowConfig::rk4(2), 1e-3).unwrap();
        let b = check_key1(&e.spec.kind, &s, &ts, &ys, &o, &FlowConfig::rk4(2), 1e-3).unwrap();
        det_ok &= a.pass && b.pass && a.gated.is_none() && b.gated.is_none();
        det_min = det_min.min(a.min_margin).min(b.min_margin);
    }
    let g = TimeGrid::dyadic(1.0, 16).unwrap();
    let mut counts = Vec::new();
    let mut stoch_ok = true;
    for kappa in [1.0 / 3.0, 1.0, 1.9] {
        let kind = DriverKind::Brownian { kappa };
        let o = PathwiseOptions::for_kind(&kind);
        let (mut ka, mut kb) = (0, 0);
        for i in 0..100 {
            let s = sample_driver_detailed(&kind, g, path_seed(41, i)).unwrap();
            let a = check_keyest(&s.path, &[1.0], &[0.1], &o, &FlowConfig::slit(1), 5e-2).unwrap();
            let b = check_key1(&kind, &s, &[1.0], &[0.1], &o, &FlowConfig::slit(1), 5e-2).unwrap();
            // a gated sample counts as a failure here
            ka += (a.pass && a.gated.is_none()) as usize;
            kb += (b.pass && b.gated.is_none()) as usize;
        }
        stoch_ok &= ka >= 95 && kb >= 95;
        counts.push(format!("κ={kappa:.3}: {ka}/{kb}"));
    }
    Line {
        id: 5,
        title: "pathwise derivative estimates",
        pass: det_ok && stoch_ok,
        known: None,
        detail: format!("deterministic min margin {det_min:.4}; keyest/key1 passes per 100 {}", counts.join(", ")),
    }
}

fn crit6() -> Line {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for i in 1..=100 {
        let kappa = 2.0 * i as f64 / 101.0;
        let c = constants_for_kappa(kappa).unwrap();
        let eps = (2.0 - kappa) / 4.0;
        let c_eps = (1.0 - eps) / kappa + 0.5;
        let b = 1.0 + c_eps;
        let p = 2.0 * c_eps / b;
        worst = worst.max((c.b - b).abs()).max((c.p - p).abs()).max((c.eps - eps).abs());
        pass &= c.b > 2.0 && c.p > 1.0 && c.p * c.b / 2.0 <= (1.0 - c.eps) / kappa + 0.5 + 1e-12 && c.chain_holds();
    }
    // b - 2 and p - 1 vanish linearly in 2 - kappa
    let mut rates = Vec::new();
    for d in [1e-2, 1e-4, 1e-6, 1e-8] {
        let c = constants_for_kappa(2.0 - d).unwrap();
        rates.push(((c.b - 2.0) / d, (c.p - 1.0) / d));
    }
    let bounded = rates.iter().all(|&(rb, rp)| rb > 0.0 && rb < 1.0 && rp > 0.0 && rp < 1.0);
    let rejects = constants_for_kappa(2.0).is_err() && constants_for_kappa(0.0).is_err();
    Line {
        id: 6,
        title: "estimate constants",
        pass: pass && worst < 1e-12 && bounded && rejects,
        known: None,
        detail: format!("max err vs closed form {worst:.1e}, (b-2)/(2-κ) at κ=2-1e-8: {:.4}", rates[3].0),
    }
}

fn crit7(out: &Path) -> Line {
    let cfg = load("mc-moment");
    let start = Instant::now();
    let o = run_in(&cfg, out, None);
    let secs = start.elapsed().as_secs_f64();
    let shape = cfg.seeds.map(|s| s.count) == Some(10_000) && cfg.ys == [1.0, 0.1, 0.01];
    let finite = check(&o, "finite");
    let proxy = check(&o, "proxy_supermartingale");
    let ratio = check(&o, "y_ratio");
    let attainable = shape && finite.pass && proxy.pass && secs < 600.0;
    Line {
        id: 7,
        title: "moment of |f'|^b",
        pass: attainable && ratio.pass,
        known: (attainable && !ratio.pass).then_some("y-stability ratio"),
        detail: format!("{}; proxy ok {}; {}; {secs:.0}s", finite.detail, proxy.pass, ratio.detail),
    }
}

fn crit8(out: &Path) -> Line {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let tc = TraceConfig { stride: 4, tol: 1e-3, ..TraceConfig::default() };
    for e in standard_corpus() {
        let s = e.spec.sample().unwrap();
        let tr = extract_trace(&s.path, &tc, &FlowConfig::slit(1)).unwrap();
        let h = RegularityReport::compute(&tr, 1.5, 1.0 / 64.0).holder_half;
        ok &= h.is_finite();
        worst = worst.max(h);
    }
    let u = DriverPath::zero(TimeGrid::new(1.0, 256).unwrap());
    let tr = extract_trace(&u, &TraceConfig { tol: 1e-5, ..TraceConfig::default() }, &FlowConfig::slit(1)).unwrap();
    let lip = sqrt_reparam_lip(&tr).unwrap();
    let cont = run_in(&load("continuity"), out, None);
    let decay = check(&cont, "decay");
    Line {
        id: 8,
        title: "trace regularity",
        pass: ok && (lip - 2.0).abs() <= 1e-2 && decay.pass,
        known: None,
        detail: format!("largest corpus Hölder-1/2 norm {worst:.3}, zero-driver Lip {lip:.5}, continuity decay {}", decay.pass),
    }
}

fn crit9(out: &Path) -> Line {
    let cfg = load("tail");
    let o = run_in(&cfg, out, None);
    let c = check(&o, "tail_slope");
    let shape = cfg.seeds.map(|s| s.count) == Some(10_000) && cfg.theta == 0.9;
    Line {
        id: 9,
        title: "tail exceedance slope",
        pass: shape && c.pass,
        known: (shape && !c.pass).then_some("no exceedances to fit"),
        detail: c.detail.clone(),
    }
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn crit10() -> Line {
    let mut cfgs: Vec<ExperimentConfig> =
        ["gen", "solve", "trace", "qv", "represent", "verify-cm", "continuity"].iter().map(|n| load(n)).collect();
    let shrink = |name: &str, count: u64, n: Option<usize>| {
        let mut c = load(name);
        if let Some(s) = c.seeds.as_mut() {
            s.count = count;
        }
        if let (Some(d), Some(n)) = (c.driver.as_mut(), n) {
            d.n = n;
        }
        c
    };
    cfgs.push(shrink("verify-keyest", 8, Some(4096)));
    cfgs.push(shrink("verify-key1", 8, Some(4096)));
    cfgs.push(shrink("mc-moment", 64, Some(1024)));
    cfgs.push(shrink("momentof-f", 200, None));
    let mut tail = shrink("tail", 50, None);
    tail.levels = [2, 4];
    cfgs.push(tail);

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for c in &cfgs {
        run_in(c, a.path(), Some(1));
        run_in(c, b.path(), Some(2));
    }
    let (fa, fb) = (read_dir(a.path()), read_dir(b.path()));
    let differing: Vec<&String> = fa.iter().filter(|(k, v)| fb.get(*k) != Some(v)).map(|(k, _)| k).collect();
    Line {
        id: 10,
        title: "determinism",
        pass: !fa.is_empty() && fa.len() == fb.len() && differing.is_empty(),
        known: None,
        detail: format!("{} configs, {} artifacts, 1 vs 2 threads, differing {differing:?}", cfgs.len(), fa.len()),
    }
}

fn report(l: &Line) {
    let status = match (l.pass, l.known) {
        (true, _) => "PASS".to_string(),
        (false, Some(what)) => format!("FAIL (known: {what}, see decisions ledger)"),
        (false, None) => "FAIL".to_string(),
    };
    println!("criterion {:>2} {:<32} {status}: {}", l.id, l.title, l.detail);
}

fn main() -> ExitCode {
    let out = tempfile::tempdir().unwrap();
    let runs: Vec<Box<dyn Fn() -> Line>> = vec![
        Box::new(crit1),
        Box::new(|| crit2(out.path())),
        Box::new(crit3),
        Box::new(crit4),
        Box::new(crit5),
        Box::new(crit6),
        Box::new(|| crit7(out.path())),
        Box::new(|| crit8(out.path())),
        Box::new(|| crit9(out.path())),
        Box::new(crit10),
    ];
    let mut hard_fail = false;
    for r in runs {
        let l = r();
        report(&l);
        hard_fail |= !l.pass && l.known.is_none();
    }
    if hard_fail {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
