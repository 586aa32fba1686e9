//! Acceptance suite: one PASS/FAIL line per criterion, written straight to
//! stdout so it shows even when test output is captured.
//!
//! Criteria run one at a time so their wall-clock budgets are not shared.
//! Multi-seed criteria cross-validate the canonical dataset with 5 folds
//! under training seeds 1 to 5.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use clap::Parser;
use jamguard_cli::{run, Cli};
use jamguard_core::evalkit::CANONICAL_BAYES_ACCURACY;
use jamguard_core::neuralnet::cost_and_gradients;
use jamguard_core::svm::{kernel_eval, KernelSpec};
use jamguard_core::{
    canonical_dataset, cross_validate, fit_forest, forest::forest_predict, generate_dataset, kfold_split, metrics, seed,
    sweep, ConfusionMatrix, CvOutcome, Dataset, KernelKind, Learner, ModelSpec, NetArchitecture, NeuralNet, RocCurve, Sample,
    Scaler, ScenarioMix, Sweep, SvmParams, TreeParams, CANONICAL_SEED,
};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const MULTI_SEED_FOLDS: usize = 5;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn canonical() -> &'static Dataset {
    static DATA: OnceLock<Dataset> = OnceLock::new();
    DATA.get_or_init(|| canonical_dataset().unwrap())
}

/// 5-fold outcomes on the canonical dataset, shared between criteria.
fn outcome(spec: &ModelSpec, seed: u64) -> Arc<CvOutcome> {
    static CACHE: OnceLock<Mutex<HashMap<(String, u64), Arc<CvOutcome>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (spec.describe(), seed);
    if let Some(o) = cache.lock().unwrap().get(&key) {
        return o.clone();
    }
    let o = Arc::new(cross_validate(spec, canonical(), MULTI_SEED_FOLDS, seed).unwrap());
    cache.lock().unwrap().insert(key, o.clone());
    o
}

fn accuracy(spec: &ModelSpec, seed: u64) -> f64 {
    outcome(spec, seed).report.accuracy().unwrap()
}

fn curve(spec: &ModelSpec, seed: u64) -> RocCurve {
    jamguard_core::roc_curve(&outcome(spec, seed).scores, &canonical().labels()).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn verdict(id: u32, ok: bool, detail: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    let pass = ok && elapsed <= budget;
    let line = format!(
        "{} criterion {id:>2}: {detail} ({:.1}s, budget {}s)\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{}", line.trim_end());
}

fn proptest_ok(cases: u32, f: impl Fn(&mut TestRunner) -> Result<(), String>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, ..Config::default() });
    f(&mut runner)
}

#[test]
fn c01_metric_identities() {
    let _g = serial();
    let t = Instant::now();
    let samples = prop::collection::vec((0u8..=1, 0u8..=1), 0..300);
    let result = proptest_ok(256, |runner| {
        runner
            .run(&samples, |pairs| {
                let mut cm = ConfusionMatrix::default();
                for &(label, predicted) in &pairs {
                    cm.record(label, predicted);
                }
                let positives = pairs.iter().filter(|p| p.0 == 1).count() as u64;
                prop_assert_eq!(cm.tp + cm.fn_, positives);
                prop_assert_eq!(cm.fp + cm.tn, pairs.len() as u64 - positives);
                let r = metrics(&cm);
                match (r.pd(), r.pmd()) {
                    (Some(pd), Some(pmd)) => prop_assert_eq!(pd + pmd, 1.0),
                    (None, None) => prop_assert_eq!(positives, 0),
                    _ => prop_assert!(false, "pd and pmd must be defined together"),
                }
                Ok(())
            })
            .map_err(|e| e.to_string())
    });
    let d = generate_dataset(&ScenarioMix::canonical(), 300, 3).unwrap();
    let report = cross_validate(&ModelSpec::forest(5), &d, 5, 3).unwrap().report;
    let pooled_ok = report.confusion.positives() == d.positives() as u64
        && report.confusion.negatives() == (d.len() - d.positives()) as u64
        && std::iter::once(&report.metrics)
            .chain(report.folds.iter().map(|f| &f.metrics))
            .all(|m| m.pd.unwrap() + m.pmd.unwrap() == 1.0);
    let ok = result.is_ok() && pooled_ok;
    let detail = match result {
        Ok(()) => format!("pd + pmd = 1 and class counts hold over 256 random matrices and a cv report ({pooled_ok})"),
        Err(e) => e,
    };
    verdict(1, ok, &detail, t, Duration::from_secs(1));
}

#[test]
fn c02_gradient_oracle() {
    let _g = serial();
    let t = Instant::now();
    let configs: [(&[usize], f64); 6] = [(&[2, 2], 0.0), (&[2, 2], 1.0), (&[3], 0.01), (&[5, 3], 0.5), (&[1], 1.0), (&[4, 2], 0.0)];
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for (c, &(hidden, lambda)) in configs.iter().enumerate() {
        let d = generate_dataset(&ScenarioMix::canonical(), 30, 1000 + c as u64).unwrap();
        let scaler = Scaler::fit(&d).unwrap();
        let mut net = NeuralNet::initialized(NetArchitecture::with_hidden(hidden), scaler.clone(), c as u64);
        let mut rng = seed::rng(2000 + c as u64);
        for w in &mut net.weights {
            w.mapv_inplace(|_| rng.random_range(-1.5..1.5));
        }
        let rows = scaler.rows(&d);
        let x = Array2::from_shape_fn((rows.len(), 4), |(i, j)| rows[i][j]);
        let y: Array1<f64> = d.samples.iter().map(|s| s.label as f64).collect();
        let (_, grads) = cost_and_gradients(&net.weights, x.view(), y.view(), lambda);
        for l in 0..net.weights.len() {
            for ((r, col), &g) in grads[l].indexed_iter() {
                let mut plus = net.weights.clone();
                plus[l][[r, col]] += eps;
                let mut minus = net.weights.clone();
                minus[l][[r, col]] -= eps;
                let fd = (cost_and_gradients(&plus, x.view(), y.view(), lambda).0
                    - cost_and_gradients(&minus, x.view(), y.view(), lambda).0)
                    / (2.0 * eps);
                worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-8));
            }
        }
    }
    verdict(
        2,
        worst < 1e-6,
        &format!("worst relative error {worst:.2e} over {} configurations, lambda in {{0, 0.01, 0.5, 1}}", configs.len()),
        t,
        Duration::from_secs(10),
    );
}

#[test]
fn c03_forest_vote_equivalence() {
    let _g = serial();
    let t = Instant::now();
    let train = generate_dataset(&ScenarioMix::canonical(), 2000, 31).unwrap();
    let forest = fit_forest(&train, 100, &TreeParams::default(), 32).unwrap();
    let mut rng = seed::rng(33);
    let probes: Vec<Sample> = (0..1000)
        .map(|_| Sample::new([rng.random(), rng.random(), rng.random_range(-110.0..-30.0), rng.random()], 0))
        .collect();
    let mismatches = probes
        .iter()
        .filter(|x| {
            let z = forest.scaler.transform(&x.features());
            let ones = forest.trees.iter().filter(|tree| tree.predict(&z) == 1).count();
            forest_predict(&forest, x) != u8::from(2 * ones > forest.trees.len())
        })
        .count();
    verdict(3, mismatches == 0, &format!("{mismatches} mismatches against per-tree majority on 1000 samples"), t, Duration::from_secs(5));
}

#[test]
fn c04_kernel_checks() {
    let _g = serial();
    let t = Instant::now();
    let mut asymmetric = 0;
    let mut worst = f64::INFINITY;
    for set in 0..10u64 {
        let mut rng = seed::rng(seed::derive(4000, set));
        let pts: Vec<[f64; 4]> = (0..20).map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0))).collect();
        for kind in [KernelKind::Linear, KernelKind::Poly2, KernelKind::Poly3, KernelKind::Rbf] {
            let k = KernelSpec::new(kind);
            let gram = nalgebra::DMatrix::from_fn(20, 20, |i, j| kernel_eval(&k, &pts[i], &pts[j]).unwrap());
            asymmetric += (0..20).flat_map(|i| (0..20).map(move |j| (i, j))).filter(|&(i, j)| gram[(i, j)] != gram[(j, i)]).count();
            worst = worst.min(gram.symmetric_eigenvalues().min());
        }
    }
    verdict(
        4,
        asymmetric == 0 && worst >= -1e-9,
        &format!("{asymmetric} asymmetric entries, smallest Gram eigenvalue {worst:.3e}"),
        t,
        Duration::from_secs(5),
    );
}

#[test]
fn c05_fold_plans() {
    let _g = serial();
    let t = Instant::now();
    let strategy = (prop::collection::vec(0u8..=1, 40..600), prop::sample::select(vec![2usize, 5, 10, 20]), any::<u64>());
    let result = proptest_ok(128, |runner| {
        runner
            .run(&strategy, |(labels, k, s)| {
                let d = Dataset::new(labels.iter().map(|&l| Sample::new([0.5, 0.0, -60.0, 0.1], l)).collect());
                let plan = kfold_split(&d, k, s, true).unwrap();
                let mut seen = vec![0u32; labels.len()];
                for f in 0..k {
                    plan.test_indices(f).into_iter().for_each(|i| seen[i] += 1);
                }
                prop_assert!(seen.iter().all(|&c| c == 1), "folds must be disjoint and exhaustive");
                for class in [0u8, 1] {
                    let sizes: Vec<usize> =
                        (0..k).map(|f| plan.test_indices(f).iter().filter(|&&i| labels[i] == class).count()).collect();
                    prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, "{:?}", sizes);
                }
                Ok(())
            })
            .map_err(|e| e.to_string())
    });
    let detail = result.clone().err().unwrap_or_else(|| "128 random plans over k in {2, 5, 10, 20} partition and balance".into());
    verdict(5, result.is_ok(), &detail, t, Duration::from_secs(1));
}

#[test]
fn c06_forest_regime() {
    let _g = serial();
    let t = Instant::now();
    let r = cross_validate(&ModelSpec::forest(100), canonical(), 10, CANONICAL_SEED).unwrap().report;
    let (pd, pfa, acc) = (r.pd().unwrap(), r.pfa().unwrap(), r.accuracy().unwrap());
    let gap = (acc - CANONICAL_BAYES_ACCURACY).abs();
    verdict(
        6,
        pd >= 0.95 && pfa <= 0.10 && acc >= 0.93 && gap <= 0.03,
        &format!("pd {pd:.4} pfa {pfa:.4} accuracy {acc:.4}, {:.2} points from oracle {CANONICAL_BAYES_ACCURACY}", 100.0 * gap),
        t,
        Duration::from_secs(60),
    );
}

#[test]
fn c07_model_ordering() {
    let _g = serial();
    let t = Instant::now();
    let medians: Vec<f64> = [ModelSpec::forest(100), ModelSpec::nn(&[2, 2]), ModelSpec::Svm(SvmParams::new(KernelKind::Poly2))]
        .iter()
        .map(|spec| median(SEEDS.iter().map(|&s| accuracy(spec, s)).collect()))
        .collect();
    let (forest, nn, poly2) = (medians[0], medians[1], medians[2]);
    verdict(
        7,
        forest >= nn && nn >= poly2,
        &format!("median accuracy forest {forest:.4} >= nn {nn:.4} >= quadratic svm {poly2:.4}"),
        t,
        Duration::from_secs(300),
    );
}

#[test]
fn c08_forest_size_trend() {
    let _g = serial();
    let t = Instant::now();
    let grid = Sweep::ForestEstimators { params: TreeParams::default(), estimators: vec![1, 5, 60, 100] };
    let per_seed: Vec<Vec<f64>> = SEEDS
        .iter()
        .map(|&s| sweep(&grid, canonical(), MULTI_SEED_FOLDS, s).unwrap().iter().map(|r| r.accuracy().unwrap()).collect())
        .collect();
    let m: Vec<f64> = (0..4).map(|i| median(per_seed.iter().map(|row| row[i]).collect())).collect();
    let change = 100.0 * (m[3] - m[2]);
    verdict(
        8,
        m[2] >= m[1] && m[1] >= m[0] && change.abs() <= 1.5,
        &format!("median accuracy M=1 {:.4}, M=5 {:.4}, M=60 {:.4}, M=100 {:.4} ({change:+.2} points)", m[0], m[1], m[2], m[3]),
        t,
        Duration::from_secs(180),
    );
}

fn spread(rows: &[jamguard_core::SweepRow]) -> (f64, String) {
    let accs: Vec<f64> = rows.iter().map(|r| r.accuracy().unwrap()).collect();
    let hi = accs.iter().copied().fold(f64::MIN, f64::max);
    let lo = accs.iter().copied().fold(f64::MAX, f64::min);
    let listed: Vec<String> = rows.iter().zip(&accs).map(|(r, a)| format!("{}={a:.4}", r.point[r.point.len() - 1].1)).collect();
    (100.0 * (hi - lo), listed.join(" "))
}

#[test]
fn c09_svm_c_trend() {
    let _g = serial();
    let t = Instant::now();
    let grid = Sweep::SvmKernelC { epochs: jamguard_core::svm::DEFAULT_EPOCHS, kernels: vec![KernelKind::Rbf], cs: vec![0.1, 1.0, 3.0, 10.0] };
    let (points, listed) = spread(&sweep(&grid, canonical(), MULTI_SEED_FOLDS, CANONICAL_SEED).unwrap());
    verdict(9, points <= 5.0, &format!("rbf accuracy spread {points:.2} points over C: {listed}"), t, Duration::from_secs(180));
}

#[test]
fn c10_hidden_size_trend() {
    let _g = serial();
    let t = Instant::now();
    let grid = Sweep::NnHidden { hyperparams: Default::default(), hidden: vec![1, 2, 10, 100] };
    let (points, listed) = spread(&sweep(&grid, canonical(), MULTI_SEED_FOLDS, CANONICAL_SEED).unwrap());
    verdict(10, points <= 5.0, &format!("nn accuracy spread {points:.2} points over hidden: {listed}"), t, Duration::from_secs(300));
}

fn well_formed(c: &RocCurve) -> bool {
    let (first, last) = (&c.points[0], &c.points[c.points.len() - 1]);
    (first.pfa, first.pd) == (0.0, 0.0)
        && (last.pfa, last.pd) == (1.0, 1.0)
        && c.points.windows(2).all(|w| w[1].pfa >= w[0].pfa && w[1].pd >= w[0].pd)
}

#[test]
fn c11_roc_properties() {
    let _g = serial();
    let t = Instant::now();
    let mut specs = vec![ModelSpec::forest(100), ModelSpec::nn(&[2, 2])];
    specs.extend(KernelKind::ALL.iter().map(|&k| ModelSpec::Svm(SvmParams::new(k))));
    let mut malformed = Vec::new();
    let mut auc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for spec in &specs {
        for &s in &SEEDS {
            let c = curve(spec, s);
            if !well_formed(&c) {
                malformed.push(format!("{}@{s}", spec.describe()));
            }
            auc.entry(spec.describe()).or_default().push(c.auc);
        }
    }
    let med: BTreeMap<String, f64> = auc.into_iter().map(|(k, v)| (k, median(v))).collect();
    let forest = med[&specs[0].describe()];
    let best_svm = specs[2..].iter().map(|s| (s.describe(), med[&s.describe()])).max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    verdict(
        11,
        malformed.is_empty() && forest >= best_svm.1,
        &format!(
            "{} of {} curves malformed; median auc forest {forest:.5} >= best svm {} {:.5}",
            malformed.len(),
            specs.len() * SEEDS.len(),
            best_svm.0,
            best_svm.1
        ),
        t,
        Duration::from_secs(180),
    );
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn jamguard(args: &[&str]) {
    let cli = Cli::try_parse_from(std::iter::once("jamguard").chain(args.iter().copied())).unwrap();
    run(&cli).unwrap();
}

#[test]
fn c12_reproducible_pipeline() {
    let _g = serial();
    let t = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("canonical.csv");
    let out = tmp.path().join("compare");
    let (data_s, out_s) = (data.to_str().unwrap(), out.to_str().unwrap());

    jamguard(&["generate", "--out", data_s]);
    jamguard(&["compare", "--data", data_s, "--out", out_s]);
    let pipeline = t.elapsed();
    let first = snapshot(&out);
    std::fs::remove_dir_all(&out).unwrap();
    jamguard(&["compare", "--data", data_s, "--out", out_s]);
    let second = snapshot(&out);

    let differing: Vec<&String> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
    let ok = first.len() >= 3 && first.keys().eq(second.keys()) && differing.is_empty() && pipeline < Duration::from_secs(600);
    verdict(
        12,
        ok,
        &format!(
            "{} files compared, {} differ; default pipeline took {:.1}s",
            first.len(),
            differing.len(),
            pipeline.as_secs_f64()
        ),
        t,
        Duration::from_secs(1200),
    );
}
