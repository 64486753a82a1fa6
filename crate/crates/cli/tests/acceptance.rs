//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! default test harness so every line is printed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fablab::gmm::{initial_responsibilities, IterationView};
use fablab::verify::{normalizer_audit, verify_priors, VerifyReport};
use fablab::{
    dominance_curve, fab_fit, fab_fit_observed, fic_log_score, generate_gmm_data, gfic_log_score, Budget, CountVector,
    Dataset, FabConfig, GenConfig, LabSettings, PriorSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed < Duration::from_secs(limit_secs)
}

fn scratch_dir() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn three_clusters(seed: u64) -> Dataset {
    generate_gmm_data(&GenConfig { seed, k_true: 3, n: 300, dims: 2, separation: 8.0, variance: 1.0 }).unwrap().0
}

fn verify_7_4() -> (VerifyReport, Duration) {
    let start = Instant::now();
    let report = verify_priors(7, 4, Budget::DEFAULT).unwrap();
    (report, start.elapsed())
}

fn c1(report: &VerifyReport, elapsed: Duration) -> Outcome {
    let eq1 = report.identity("eq1-class-sum").unwrap();
    let sizes = report.identity("class-size").unwrap();
    outcome(
        eq1.passed() && sizes.passed() && within(elapsed, 60),
        format!(
            "{} classes, max relative deviation {:.2e}, class sizes exact: {}, {:.2}s",
            eq1.instances,
            eq1.max_deviation,
            sizes.passed(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c2(report: &VerifyReport) -> Outcome {
    let dc2 = report.identity("dc2-equivalence").unwrap();
    outcome(dc2.passed(), format!("{} assignments, max deviation {:.2e}", dc2.instances, dc2.max_deviation))
}

fn c3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=8);
        let counts = CountVector((0..len).map(|_| rng.random_range(0..=200)).collect());
        for dc in [1.0, 2.0, 4.0, 10.0] {
            worst = worst.max((gfic_log_score(&counts, dc / 2.0) - fic_log_score(&counts, dc)).abs());
            checks += 1;
        }
    }
    outcome(worst <= 1e-15, format!("{checks} comparisons, max deviation {worst:e}"))
}

fn c4() -> Outcome {
    let rows = normalizer_audit(10, 5, Budget::DEFAULT).unwrap();
    let row = rows.iter().find(|r| r.n == 2 && r.k == 2).unwrap();
    let (c, p) = (row.compositions.to_string(), row.partitions.to_string());
    let disagreements = rows.iter().filter(|r| r.compositions != r.partitions).count();
    outcome(
        rows.len() == 50 && c == "2" && p == "3/2",
        format!("{} rows, {disagreements} disagree; n=2,k=2: compositions {c}, partitions {p}", rows.len()),
    )
}

fn reference_em_deviation(x: &Dataset, seed: u64) -> f64 {
    let cfg = FabConfig {
        k_init: 4,
        d: 0.0,
        prune_threshold: Some(0.0),
        max_iters: 5,
        rel_tol: f64::MIN_POSITIVE,
        seed,
        ..Default::default()
    };
    let mut seen = Vec::new();
    fab_fit_observed(x, &cfg, |v: &IterationView<'_>| seen.push(v.responsibilities.as_slice().to_vec())).unwrap();
    let floor = x.variance_floor(cfg.var_floor_rel);
    let q0 = initial_responsibilities(x, cfg.k_init, cfg.init, seed).unwrap();
    let mut q: Vec<Vec<f64>> = q0.rows().map(<[f64]>::to_vec).collect();
    let mut worst: f64 = if seen.len() == 5 { 0.0 } else { f64::INFINITY };
    for got in &seen {
        q = plain_em_iteration(x, &q, &floor);
        let flat = q.iter().flatten();
        worst = got.iter().zip(flat).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    worst
}

/// One M-step followed by one E-step of textbook diagonal-Gaussian EM.
fn plain_em_iteration(x: &Dataset, q: &[Vec<f64>], floor: &[f64]) -> Vec<Vec<f64>> {
    let k = q[0].len();
    let mut params = Vec::new();
    for c in 0..k {
        let nk: f64 = q.iter().map(|r| r[c]).sum();
        let mean: Vec<f64> =
            (0..x.dims()).map(|j| x.rows().zip(q).map(|(row, r)| r[c] * row[j]).sum::<f64>() / nk).collect();
        let var: Vec<f64> = (0..x.dims())
            .map(|j| {
                (x.rows().zip(q).map(|(row, r)| r[c] * (row[j] - mean[j]).powi(2)).sum::<f64>() / nk).max(floor[j])
            })
            .collect();
        params.push((nk / x.n() as f64, mean, var));
    }
    x.rows()
        .map(|row| {
            let logs: Vec<f64> = params
                .iter()
                .map(|(w, m, v)| {
                    w.ln()
                        + (0..row.len())
                            .map(|j| {
                                -0.5 * (2.0 * std::f64::consts::PI * v[j]).ln() - (row[j] - m[j]).powi(2) / (2.0 * v[j])
                            })
                            .sum::<f64>()
                })
                .collect();
            let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = logs.iter().map(|l| (l - max).exp()).sum();
            logs.iter().map(|l| (l - max).exp() / total).collect()
        })
        .collect()
}

fn c5() -> Outcome {
    let worst_em = (0..5).map(|s| reference_em_deviation(&three_clusters(s), s)).fold(0.0, f64::max);
    let mut violations = 0;
    for seed in 0..100 {
        let x = three_clusters(seed % 20);
        let d = [0.0, 1.0, 2.0, 3.0][seed as usize % 4];
        let (_, trace) = fab_fit(&x, &FabConfig { k_init: 8, d, seed, ..Default::default() }).unwrap();
        violations += trace.monotonicity_violations(1e-8).len();
    }
    outcome(
        worst_em <= 1e-12 && violations == 0,
        format!("plain-EM max deviation {worst_em:.2e} over 5 iterations x 5 seeds; {violations} monotonicity violations in 100 runs"),
    )
}

fn c6() -> Outcome {
    let start = Instant::now();
    let ks: Vec<usize> = (0..20)
        .map(|seed| {
            fab_fit(&three_clusters(seed), &FabConfig { k_init: 10, d: 2.0, seed, ..Default::default() }).unwrap().0.k()
        })
        .collect();
    let elapsed = start.elapsed();
    let hits = ks.iter().filter(|&&k| k == 3).count();
    outcome(hits >= 16 && within(elapsed, 120), format!("k=3 in {hits}/20 seeds {ks:?}, {:.2}s", elapsed.as_secs_f64()))
}

fn canonical_dominance_config() -> &'static str {
    r#"{
  "gen": {"seed": 0, "k_true": 2, "n": 8, "dims": 1, "separation": 4.0, "variance": 1.0},
  "priors": [{"kind": "crp"}, {"kind": "fic", "dc": 2}, {"kind": "uniform"}],
  "replications": [1, 2, 4, 8],
  "k_max": 8,
  "plugin_floor_rel": 0.05
}"#
}

fn c7() -> Outcome {
    let start = Instant::now();
    let gen = GenConfig { seed: 0, k_true: 2, n: 8, dims: 1, separation: 4.0, variance: 1.0 };
    let (x, _) = generate_gmm_data(&gen).unwrap();
    let settings = LabSettings { budget: Budget::DEFAULT, plugin_floor_rel: 0.05 };
    let support = fablab::posterior_over_partitions(&x, &PriorSpec::Uniform, 8, &settings).unwrap().entries.len();
    let rows = dominance_curve(&x, &[1, 8], &[PriorSpec::Crp, PriorSpec::Fic { dc: 2.0 }], 8, &settings).unwrap();
    let elapsed = start.elapsed();
    let tv = |kind: &str, r: usize| {
        rows.iter().find(|row| row.prior.kind_name() == kind && row.replication == r).unwrap().tv_distance
    };
    let (crp1, crp8, fic1, fic8) = (tv("crp", 1), tv("crp", 8), tv("fic", 1), tv("fic", 8));
    outcome(
        support == 4140 && crp8 < crp1 && fic8 >= 0.5 * fic1 && within(elapsed, 60),
        format!(
            "{support} partitions; CRP TV {crp1:.4} -> {crp8:.4}; FIC TV {fic1:.4} -> {fic8:.4} (ratio {:.3}); {:.2}s",
            fic8 / fic1,
            elapsed.as_secs_f64()
        ),
    )
}

fn fablab(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fablab"))
        .args(args)
        .current_dir(dir)
        .env_remove("FABLAB_BUDGET")
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

const SELECTION_CONFIG: &str = r#"{
  "gen": {"seed": 0, "k_true": 3, "n": 300, "dims": 2, "separation": 8.0, "variance": 1.0},
  "fab": {"k_init": 10},
  "d_grid": [1.0, 1.5, 2.0, 3.0],
  "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19]
}"#;

fn c8(dir: &Path) -> Outcome {
    fs::write(dir.join("selection.json"), SELECTION_CONFIG).unwrap();
    let out = fablab(&["lab", "selection", "--config", "selection.json", "--out", "selection.csv"], dir);
    if out.status.code() != Some(0) {
        return outcome(false, format!("lab selection failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let text = fs::read_to_string(dir.join("selection.csv")).unwrap();
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    let grid = [1.0, 1.5, 2.0, 3.0];
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let d: f64 = cells[0].parse().unwrap();
        if let (Some(i), Ok(k)) = (grid.iter().position(|&g| g == d), cells[2].parse::<f64>()) {
            sums[i] += k;
            counts[i] += 1;
        }
    }
    let means: Vec<f64> = sums.iter().zip(counts).map(|(s, c)| s / c as f64).collect();
    let inversions = means.windows(2).filter(|w| w[1] > w[0]).count();
    outcome(
        text.lines().count() == 81 && counts.iter().all(|&c| c == 20) && inversions <= 1,
        format!(
            "mean selected k at d=1,1.5,2,3: {means:.2?}; {inversions} inversions; {}",
            dir.join("selection.csv").display()
        ),
    )
}

fn c9(dir: &Path) -> Outcome {
    let clusters = three_clusters(5);
    let csv: String = clusters.rows().map(|r| format!("{},{}\n", r[0], r[1])).collect();
    fs::write(dir.join("data.csv"), csv).unwrap();
    fs::write(dir.join("dominance.json"), canonical_dominance_config()).unwrap();
    let small_selection = SELECTION_CONFIG.replace(
        "\"seeds\": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19]",
        "\"seeds\": [0, 1, 2, 3]",
    );
    fs::write(dir.join("selection-small.json"), small_selection).unwrap();

    let runs: [(&[&str], &str); 3] = [
        (&["fit", "data.csv", "--k-init", "10", "--d", "2", "--seed", "5", "--out", "OUT"], "model.json"),
        (&["lab", "dominance", "--config", "dominance.json", "--out", "OUT"], "dominance.csv"),
        (&["lab", "selection", "--config", "selection-small.json", "--out", "OUT"], "selection-small.csv"),
    ];
    let mut identical = 0;
    for (args, name) in runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let target = format!("{rep}-{name}");
            let args: Vec<&str> = args.iter().map(|a| if *a == "OUT" { target.as_str() } else { a }).collect();
            let out = fablab(&args, dir);
            if out.status.code() != Some(0) {
                return outcome(false, format!("{name}: {}", String::from_utf8_lossy(&out.stderr)));
            }
            outputs.push(fs::read(dir.join(&target)).unwrap());
        }
        identical += usize::from(outputs[0] == outputs[1]);
    }
    outcome(identical == 3, format!("{identical}/3 outputs byte-identical across repeated runs"))
}

fn main() {
    let dir = scratch_dir();
    let (report, elapsed) = verify_7_4();
    let results = [
        ("1", "class-sum closed form, n<=7 k<=4", c1(&report, elapsed)),
        ("2", "FIC(dc=2) minus CRP class = ln k!", c2(&report)),
        ("3", "GFIC endpoint equals FIC", c3()),
        ("4", "fixed-K normalizer audit", c4()),
        ("5", "EM reduction and monotone objective", c5()),
        ("6", "selects k=3 on separated data", c6()),
        ("7", "prior dominance under replication", c7()),
        ("8", "selected k non-increasing in d", c8(&dir)),
        ("9", "deterministic CLI outputs", c9(&dir)),
    ];
    let mut failed = 0;
    for (id, name, o) in &results {
        println!("criterion {id} {}: {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
