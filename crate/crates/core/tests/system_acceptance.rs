//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. The learning criteria train on the desk scenario
//! from `configs/desk.toml` and take several minutes on one core.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use leomf_core::checks::{
    battery_check, energy_geometry_check, federated_check, gradient_check, harvester_check, sinr_check, CheckResult,
};
use leomf_core::env::Ablation;
use leomf_core::runner::{metrics_path, run, run_seed, Algorithm, ExperimentConfig, RunSummary};

struct Line {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn desk() -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    ExperimentConfig::load(&path).expect("desk config")
}

fn from_check(id: usize, c: CheckResult) -> Line {
    Line { id, name: c.name, passed: c.passed, detail: c.detail }
}

fn train(cfg: &ExperimentConfig, algorithm: Algorithm, ablation: Ablation, dir: &Path) -> Vec<RunSummary> {
    let mut c = cfg.clone();
    c.algorithm = algorithm;
    c.scenario.ablation = ablation;
    c.checkpoints = false;
    run(&c, dir).expect("training run")
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ")
}

fn count(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> bool) -> usize {
    a.iter().zip(b).filter(|(x, y)| f(**x, **y)).count()
}

fn final_ee(s: &[RunSummary]) -> Vec<f64> {
    s.iter().map(|r| r.final_window_ee).collect()
}

fn main() -> ExitCode {
    // Ignore libtest flags such as --nocapture or a name filter.
    let cfg = desk();
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = |name: &str| -> PathBuf { tmp.path().join(name) };
    let mut lines = Vec::new();

    let t = Instant::now();
    let mut g = gradient_check(&cfg);
    let secs = t.elapsed().as_secs_f64();
    g.passed &= secs < 30.0;
    g.detail = format!("{}; {secs:.1} s", g.detail);
    lines.push(from_check(1, g));
    lines.push(from_check(2, harvester_check()));
    lines.push(from_check(3, sinr_check()));
    lines.push(from_check(4, energy_geometry_check()));
    lines.push(from_check(5, battery_check(&cfg)));
    lines.push(from_check(6, federated_check()));
    for l in &lines {
        report(l);
    }

    let t = Instant::now();
    let femad = train(&cfg, Algorithm::Femad, Ablation::Full, &dir("femad"));
    let maddpg = train(&cfg, Algorithm::Maddpg, Ablation::Full, &dir("maddpg"));
    let random = train(&cfg, Algorithm::Random, Ablation::Full, &dir("random"));
    let secs = t.elapsed().as_secs_f64();
    let first: Vec<f64> = femad.iter().map(|s| s.first_window_reward).collect();
    let last: Vec<f64> = femad.iter().map(|s| s.final_window_reward).collect();
    let (fe, me, re) = (final_ee(&femad), final_ee(&maddpg), final_ee(&random));
    let n = femad.len();
    let a = count(&last, &first, |x, y| x > y) == n;
    let b = count(&fe, &me, |x, y| x >= y) * 3 >= 2 * n;
    let c = count(&fe, &re, |x, y| x > y) == n && count(&me, &re, |x, y| x > y) == n;
    let l7 = Line {
        id: 7,
        name: "learning",
        passed: a && b && c && secs <= 900.0,
        detail: format!(
            "(a) {a}: femad reward first window [{}] -> final [{}]; (b) {b}: final EE femad [{}] vs maddpg [{}]; (c) {c}: random [{}]; {secs:.0} s",
            list(&first), list(&last), list(&fe), list(&me), list(&re)
        ),
    };
    report(&l7);
    lines.push(l7);

    let fixed = train(&cfg, Algorithm::Femad, Ablation::FixedEh, &dir("fixed_eh"));
    let no_eh = train(&cfg, Algorithm::Femad, Ablation::NoEh, &dir("no_eh"));
    let no_amp = train(&cfg, Algorithm::Femad, Ablation::NoAmplify, &dir("no_amplify"));
    let (xe, ne, ae) = (final_ee(&fixed), final_ee(&no_eh), final_ee(&no_amp));
    let need = (2 * n).div_ceil(3);
    let full_fixed = count(&fe, &xe, |x, y| x >= y);
    let fixed_none = count(&xe, &ne, |x, y| x >= y);
    let full_amp = count(&fe, &ae, |x, y| x >= y);
    let l8 = Line {
        id: 8,
        name: "ablation",
        passed: full_fixed >= need && fixed_none >= need && full_amp >= need,
        detail: format!(
            "final EE full [{}], fixed_eh [{}], no_eh [{}], no_amplify [{}]; seeds with full>=fixed_eh {full_fixed}, fixed_eh>=no_eh {fixed_none}, full>=no_amplify {full_amp} (need {need})",
            list(&fe), list(&xe), list(&ne), list(&ae)
        ),
    };
    report(&l8);
    lines.push(l8);

    let seed = cfg.seeds[0];
    let again = dir("femad_again");
    fs::create_dir_all(&again).expect("dir");
    let mut c9 = cfg.clone();
    c9.checkpoints = false;
    run_seed(&c9, seed, &again).expect("rerun");
    let x = fs::read(metrics_path(&dir("femad"), seed)).expect("metrics");
    let y = fs::read(metrics_path(&again, seed)).expect("metrics");
    let l9 = Line {
        id: 9,
        name: "determinism",
        passed: x == y,
        detail: format!("seed {seed}: {} bytes vs {} bytes, identical: {}", x.len(), y.len(), x == y),
    };
    report(&l9);
    lines.push(l9);

    let failed = lines.iter().filter(|l| !l.passed).count();
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn report(l: &Line) {
    let tag = if l.passed { "PASS" } else { "FAIL" };
    println!("{tag} criterion {} {}: {}", l.id, l.name, l.detail);
}
