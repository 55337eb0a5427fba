//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p tacsim --test acceptance`.

use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, StudentsT};

use tacsim::calibration::{calibrate, mean_abs_distance, PoseOffset, DEFAULT_STEPS};
use tacsim::dataio::{make_fold_plan, read_dataset, write_dataset, Dataset, DatasetMeta, FoldPlan, TICK_HZ};
use tacsim::features::{input_size, WindowSpec};
use tacsim::gbt::{fit_all, fit_channel, GbtParams, Objective, TreeNode};
use tacsim::neural::{
    load_model, loss_eq1, save_model, Activation, FeedForwardSpec, NetSpec, Network, NetworkBSpec, NeuralModel,
    TransformerSpec,
};
use tacsim::oracle::{generate_dataset, Drift, OracleConfig};
use tacsim::sensor::{ElectrodeLayout, SensorFrame};
use tacsim::stats::{
    bench_latency, corrected_ttest, fit_folds, fixed_temperature_sweep, mean_sizes, naive_baseline, normalized_mae,
    paired_differences, run_experiment, temperature_grid, write_results, FoldResult, ModelArtifact, ModelConfig,
    NeuralTraining, TrainedModel,
};
use tacsim::{presets, rng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let pass = o.pass && in_time;
    println!(
        "{} criterion {id} ({name}): {} [{:.1}s, limit {}s{}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", over time" }
    );
    pass
}

// ---------------------------------------------------------------- 1

fn gradient_error(net: &Network, seed: u64) -> f64 {
    let mut r = rng::rng(seed);
    let params: Vec<f64> = net
        .init_params(seed)
        .iter()
        .map(|v| v + r.random_range(-0.1..0.1))
        .collect();
    let x = Array2::from_shape_simple_fn((3, net.input_dim()), || r.random_range(-1.5..1.5));
    let yhat = net.predict(&params, &x.view()).unwrap();
    let y = yhat.mapv(|v| v + if r.random_bool(0.5) { 3.0 } else { -3.0 });
    let (_, cache) = net.forward(&params, &x.view(), None).unwrap();
    let (_, dy) = loss_eq1(&y, &yhat).unwrap();
    let analytic = net.backward(&params, &cache, &dy);
    let loss = |p: &[f64]| loss_eq1(&y, &net.predict(p, &x.view()).unwrap()).unwrap().0;
    let h = 1e-5;
    let base = loss(&params);
    let mut p = params.clone();
    let mut worst: f64 = 0.0;
    let mut kinks = 0;
    for i in 0..p.len() {
        p[i] = params[i] + h;
        let up = loss(&p);
        p[i] = params[i] - h;
        let dn = loss(&p);
        p[i] = params[i];
        // One-sided slopes that disagree mark a kink inside [−h, h].
        let (fwd, bwd) = ((up - base) / h, (base - dn) / h);
        if (fwd - bwd).abs() > 1e-2 * fwd.abs().max(bwd.abs()).max(1.0) {
            kinks += 1;
            continue;
        }
        let num = (up - dn) / (2.0 * h);
        worst = worst.max((analytic[i] - num).abs() / analytic[i].abs().max(num.abs()).max(1e-6));
    }
    if kinks * 100 > p.len() {
        return f64::INFINITY;
    }
    worst
}

fn criterion_gradients() -> Outcome {
    let acts = vec![
        Activation::Sigmoid,
        Activation::Relu,
        Activation::Hardtanh,
        Activation::Tanh,
        Activation::LeakyRelu(0.2),
        Activation::Elu,
    ];
    let nets = [
        (
            "network_b",
            Network::new(
                NetSpec::NetworkB(NetworkBSpec {
                    position_widths: vec![6, 5],
                    force_widths: vec![6, 5],
                    temperature_widths: vec![4, 3],
                    trunk_widths: vec![8, 6],
                    activation: Activation::Relu,
                    output_dim: 23,
                }),
                WindowSpec::new(1).unwrap().with_temperature(),
            ),
        ),
        (
            "feed_forward",
            Network::new(
                NetSpec::FeedForward(FeedForwardSpec {
                    widths: vec![8, 7, 7, 6, 6, 5],
                    activations: acts,
                    output_dim: 21,
                }),
                WindowSpec::new(1).unwrap(),
            ),
        ),
        (
            "transformer",
            Network::new(
                NetSpec::Transformer(TransformerSpec {
                    n_layers: 2,
                    n_heads: 2,
                    embed_dim: 8,
                    hidden_dim: 16,
                    dropout: 0.0,
                    output_dim: 21,
                }),
                WindowSpec::new(1).unwrap(),
            ),
        ),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, net) in nets {
        let net = net.unwrap();
        let worst = (0..5).map(|s| gradient_error(&net, 100 + s)).fold(0.0, f64::max);
        ok &= worst < 1e-4;
        parts.push(format!("{name} {worst:.1e}"));
    }
    outcome(ok, format!("max relative error {} (< 1e-4)", parts.join(", ")))
}

// ---------------------------------------------------------------- 2

struct Split {
    feature: usize,
    threshold: f64,
    left: f64,
    right: f64,
}

/// Best single split by direct sum-of-squares reduction over every feature
/// and every midpoint; leaves are side means relative to the global mean.
fn brute_force_stump(x: &Array2<f64>, y: &[f64]) -> Split {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sse = |idx: &[usize]| {
        let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
    };
    let all: Vec<usize> = (0..y.len()).collect();
    let parent = sse(&all);
    let mut best: Option<(f64, Split)> = None;
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(f).to_vec();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = w[0] + (w[1] - w[0]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| x[[i, f]] < thr);
            let gain = parent - sse(&l) - sse(&r);
            if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                let side_mean = |idx: &[usize]| idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
                best = Some((
                    gain,
                    Split {
                        feature: f,
                        threshold: thr,
                        left: side_mean(&l) - mean,
                        right: side_mean(&r) - mean,
                    },
                ));
            }
        }
    }
    best.unwrap().1
}

fn criterion_tree() -> Outcome {
    let params = GbtParams {
        eta: 1.0,
        n_estimators: 1,
        max_depth: 1,
        min_child_weight: 0.0,
        reg_lambda: 0.0,
        objective: Objective::SquaredError,
        ..GbtParams::default()
    };
    let mut r = rng::rng(2);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for _ in 0..20 {
        let x = Array2::from_shape_simple_fn((50, 4), || r.random_range(-5.0..5.0));
        let y: Vec<f64> = (0..50).map(|_| r.random_range(-3.0..3.0)).collect();
        let e = fit_channel(&x, &y, &params, 0).unwrap();
        let want = brute_force_stump(&x, &y);
        match &e.trees[0] {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let (TreeNode::Leaf { value: lv }, TreeNode::Leaf { value: rv }) = (&**left, &**right) else {
                    mismatches += 1;
                    continue;
                };
                if *feature != want.feature {
                    mismatches += 1;
                    continue;
                }
                worst = worst
                    .max((threshold - want.threshold).abs())
                    .max((lv - want.left).abs())
                    .max((rv - want.right).abs());
            }
            TreeNode::Leaf { .. } => mismatches += 1,
        }
    }
    outcome(
        mismatches == 0 && worst <= 1e-12,
        format!("20 stumps, {mismatches} feature/shape mismatches, max deviation {worst:.1e} (<= 1e-12)"),
    )
}

// ---------------------------------------------------------------- 3

fn criterion_ttest() -> Outcome {
    let a = 4.5f64.sqrt();
    let mut diffs = vec![-1.0; 10];
    diffs[0] -= a;
    diffs[1] += a;
    let rep = corrected_ttest(&diffs, 800.0, 100.0).unwrap();
    let reference = StudentsT::new(0.0, 1.0, 9.0).unwrap().cdf(rep.t);
    let derived = (rep.t + 2.108).abs() < 1e-3 && (rep.p - reference).abs() < 1e-3 && (rep.p - 0.032).abs() < 1e-3;
    let zero = corrected_ttest(&[0.0; 10], 800.0, 100.0).unwrap();
    let neg = corrected_ttest(&[-0.5; 10], 800.0, 100.0).unwrap();
    let trivial = zero.t == 0.0 && zero.p == 0.5 && neg.p == 0.0;
    outcome(
        derived && trivial,
        format!(
            "t = {:.4}, p = {:.5} vs reference {:.5}; zero diffs p = {}, constant −0.5 p = {}",
            rep.t, rep.p, reference, zero.p, neg.p
        ),
    )
}

// ---------------------------------------------------------------- 4, 5, 9

const SUITE_TICKS: u64 = 6000;
const SUITE_CYCLES: usize = 24;
const FOLDS: usize = 5;
const CHUNK: usize = 200;
const CHUNKS_PER_SPLIT: usize = 3;

fn drifting_dataset() -> Vec<SensorFrame> {
    generate_dataset(&OracleConfig::synthetic(41, SUITE_TICKS, SUITE_CYCLES)).unwrap()
}

fn steady_dataset() -> Vec<SensorFrame> {
    let mut c = OracleConfig::synthetic(42, SUITE_TICKS, SUITE_CYCLES);
    c.drift = Drift {
        // Drift must rise; one count settled within a few ticks is flat enough.
        t0_counts: 2200.0,
        t_inf_counts: 2201.0,
        tau_ticks: 1.0,
    };
    generate_dataset(&c).unwrap()
}

fn plan(frames: &[SensorFrame]) -> FoldPlan {
    make_fold_plan(frames.len(), FOLDS, CHUNK, CHUNKS_PER_SPLIT, 7).unwrap()
}

/// Column baseline scaled down for single-core acceptance runs.
fn small_network_b() -> ModelConfig {
    ModelConfig::Neural {
        spec: NetSpec::NetworkB(NetworkBSpec {
            position_widths: vec![64, 64],
            force_widths: vec![64, 64],
            temperature_widths: vec![64, 64],
            trunk_widths: vec![128, 64],
            activation: Activation::Relu,
            output_dim: 23,
        }),
        training: NeuralTraining {
            batch_size: 64,
            lr: 1e-3,
            max_epochs: presets::NETWORK_B_EPOCHS,
            patience: None,
        },
    }
}

fn mean_nmae(results: &[FoldResult]) -> f64 {
    results.iter().map(|r| r.nmae_all).sum::<f64>() / results.len() as f64
}

struct Suite {
    /// Mean normalized MAE per trained model, to compare with the naive one.
    trained: Vec<(String, f64)>,
    naive: Vec<(String, f64)>,
}

fn criterion_temperature(suite: &mut Suite) -> Outcome {
    let frames = drifting_dataset();
    let plan = plan(&frames);
    let window = WindowSpec::new(1).unwrap().with_temperature();
    let fitted = fit_folds(&frames, &plan, &small_network_b(), &window, 3).unwrap();
    let temps: Vec<f64> = frames.iter().map(|f| f.tdc).collect();
    let grid = temperature_grid(&temps, 61);
    let (mut true_sum, mut fixed_sum) = (0.0, 0.0);
    let mut best_temps = Vec::new();
    for f in &fitted {
        let curve = fixed_temperature_sweep(f, &grid).unwrap();
        // One fixed temperature per fold, chosen with hindsight on its test set.
        let (t, e) = curve.best();
        true_sum += curve.true_nmae;
        fixed_sum += e;
        best_temps.push(t);
    }
    let k = fitted.len() as f64;
    let (true_mean, fixed_mean) = (true_sum / k, fixed_sum / k);

    let gbt_results = run_experiment(
        &frames,
        &plan,
        &ModelConfig::Gbt {
            params: presets::gbt(1).unwrap(),
        },
        &WindowSpec::new(1).unwrap(),
        3,
    )
    .unwrap();
    let gbt_mean = mean_nmae(&gbt_results);
    let naive = run_experiment(&frames, &plan, &ModelConfig::Naive, &window, 3).unwrap();
    suite.trained.push(("network_b (drifting)".into(), true_mean));
    suite.trained.push(("gbt combo 1 (drifting)".into(), gbt_mean));
    suite.naive.push(("drifting".into(), mean_nmae(&naive)));

    let lo = temps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = temps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let interior = best_temps.iter().all(|&t| t > lo && t < hi);
    outcome(
        fixed_mean > true_mean && fixed_mean > gbt_mean,
        format!(
            "baseline best-fixed {fixed_mean:.4} > true-temperature {true_mean:.4} and > gbt combo 1 {gbt_mean:.4}; best fixed tdc {:?} interior {interior}",
            best_temps.iter().map(|t| t.round()).collect::<Vec<_>>()
        ),
    )
}

fn criterion_windowing(suite: &mut Suite) -> Outcome {
    let frames = steady_dataset();
    let plan = plan(&frames);
    let run_combo = |combo: u8| {
        run_experiment(
            &frames,
            &plan,
            &ModelConfig::Gbt {
                params: presets::gbt(combo).unwrap(),
            },
            &WindowSpec::new(combo).unwrap(),
            5,
        )
        .unwrap()
    };
    let c1 = run_combo(1);
    let c3 = run_combo(3);
    let diffs = paired_differences(&c1, &c3).unwrap();
    let (n_train, n_test) = mean_sizes(&c1);
    let rep = corrected_ttest(&diffs, n_train, n_test).unwrap();
    suite.trained.push(("gbt combo 1 (steady)".into(), mean_nmae(&c1)));
    suite.trained.push(("gbt combo 3 (steady)".into(), mean_nmae(&c3)));

    let naive = run_experiment(&frames, &plan, &ModelConfig::Naive, &WindowSpec::new(1).unwrap(), 5).unwrap();
    suite.naive.push(("steady".into(), mean_nmae(&naive)));

    outcome(
        rep.mean_diff < 0.0 && rep.p < 0.1,
        format!(
            "combo 1 − combo 3 mean {:.5} (combo 1 {:.4}, combo 3 {:.4}), t = {:.3}, p = {:.4} (< 0.1)",
            rep.mean_diff,
            mean_nmae(&c1),
            mean_nmae(&c3),
            rep.t,
            rep.p
        ),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_calibration() -> Outcome {
    let surface = ElectrodeLayout::default_layout().skin_surface;
    let mut finals = Vec::new();
    let mut initials = Vec::new();
    for seed in 0..5u64 {
        let mut r = rng::sub_rng(600, seed);
        let truth: Vec<_> = (0..60).map(|_| surface.sample_surface(&mut r, 1.75)).collect();
        // Random direction, scaled until the injected mean distance is about 5 mm.
        let dir: [f64; 3] = [
            StandardNormal.sample(&mut r),
            StandardNormal.sample(&mut r),
            StandardNormal.sample(&mut r),
        ];
        let rot = [
            r.random_range(-0.02..0.02),
            r.random_range(-0.02..0.02),
            r.random_range(-0.02..0.02),
        ];
        let len = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        let mut mag = 5.0;
        let mut recorded = Vec::new();
        let mut d0 = 0.0;
        for _ in 0..40 {
            let offset = PoseOffset {
                translation_mm: [dir[0] / len * mag, dir[1] / len * mag, dir[2] / len * mag],
                rotation: rot,
            };
            recorded = truth.iter().map(|p| offset.apply(*p)).collect::<Vec<_>>();
            d0 = mean_abs_distance(&recorded, &surface, &PoseOffset::default());
            if (4.5..=5.5).contains(&d0) {
                break;
            }
            mag *= 5.0 / d0.max(0.1);
        }
        let (_, rep) = calibrate(&recorded, &surface, PoseOffset::default(), DEFAULT_STEPS, seed).unwrap();
        initials.push(d0);
        finals.push(rep.final_mean_dist_mm);
    }
    let ok = initials.iter().all(|d| (4.0..=6.0).contains(d)) && finals.iter().all(|&d| d < 0.5);
    outcome(
        ok,
        format!(
            "initial {:?} mm -> final {:?} mm (< 0.5 on 5/5)",
            initials.iter().map(|d| (d * 100.0).round() / 100.0).collect::<Vec<_>>(),
            finals.iter().map(|d| (d * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_latency() -> Outcome {
    let window = WindowSpec::new(1).unwrap();
    let mut r = rng::rng(70);
    let n = 1500;
    let x = Array2::from_shape_simple_fn((n, input_size(&window)), || StandardNormal.sample(&mut r));
    let y = Array2::from_shape_simple_fn((n, 21), || StandardNormal.sample(&mut r));
    let y = &y + &x.column(0).insert_axis(ndarray::Axis(1));
    let gbt = fit_all(&x, &y, &presets::gbt(1).unwrap(), 1).unwrap();
    let net = Network::new(presets::transformer(1).unwrap().spec, window).unwrap();
    let tf = NeuralModel::untrained(net, 1);
    let dim = input_size(&window);
    let g = bench_latency(&gbt, dim, 100, 9).unwrap();
    let t = bench_latency(&tf, dim, 100, 9).unwrap();
    outcome(
        g.mean_ms < t.mean_ms,
        format!(
            "gbt {:.4} ms ({} nodes) < transformer {:.4} ms ({} params)",
            g.mean_ms,
            gbt.node_count(),
            t.mean_ms,
            tf.param_count()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let frames = generate_dataset(&OracleConfig::synthetic(8, 2400, 8)).unwrap();
    let ds = Dataset::new(
        frames.clone(),
        DatasetMeta {
            source: "acceptance".into(),
            tick_hz: TICK_HZ,
            layout_ref: None,
        },
    )
    .unwrap();
    let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_dataset(&ds, &p1).unwrap();
    let back = read_dataset(&p1).unwrap();
    write_dataset(&back, &p2).unwrap();
    let data_ok = back.frames == frames && std::fs::read(&p1).unwrap() == std::fs::read(&p2).unwrap();

    let plan = make_fold_plan(frames.len(), 2, 200, 2, 1).unwrap();
    let window = WindowSpec::new(2).unwrap();
    let gbt = ModelConfig::Gbt {
        params: GbtParams {
            n_estimators: 30,
            max_depth: 4,
            subsample: 0.8,
            colsample_bynode: 0.7,
            ..GbtParams::default()
        },
    };
    let ffn = ModelConfig::Neural {
        spec: NetSpec::FeedForward(FeedForwardSpec {
            widths: vec![32],
            activations: vec![Activation::Tanh],
            output_dim: 21,
        }),
        training: NeuralTraining {
            batch_size: 32,
            lr: 1e-3,
            max_epochs: 3,
            patience: Some(2),
        },
    };
    let mut runs_ok = true;
    let mut models_ok = true;
    let mut worst: f64 = 0.0;
    for (i, cfg) in [gbt, ffn].iter().enumerate() {
        let files: Vec<Vec<u8>> = (0..2)
            .map(|j| {
                let p = dir.path().join(format!("r{i}_{j}.csv"));
                write_results(&run_experiment(&frames, &plan, cfg, &window, 11).unwrap(), &p).unwrap();
                std::fs::read(p).unwrap()
            })
            .collect();
        runs_ok &= files[0] == files[1];

        let fitted = fit_folds(&frames, &plan, cfg, &window, 11).unwrap();
        let art = &fitted[0].artifact;
        let path = dir.path().join(format!("m{i}.{}", art.extension()));
        art.save(&path).unwrap();
        let loaded = ModelArtifact::load(&path).unwrap();
        let a = art.predict_raw(&fitted[0].test.x.view()).unwrap();
        let b = loaded.predict_raw(&fitted[0].test.x.view()).unwrap();
        let dev = (&a - &b).mapv(f64::abs).fold(0.0f64, |m, &v| m.max(v));
        worst = worst.max(dev);
        models_ok &= dev <= 1e-12 && loaded.window == art.window;
        if let TrainedModel::Neural(m) = &art.model {
            let p = dir.path().join("raw.tsnn");
            save_model(m, &p).unwrap();
            models_ok &= load_model(&p).unwrap().params == m.params;
        }
    }
    outcome(
        data_ok && runs_ok && models_ok,
        format!("dataset round-trip {data_ok}, repeated runs byte-identical {runs_ok}, model reload max deviation {worst:.1e}"),
    )
}

// ---------------------------------------------------------------- 9

fn criterion_metrics(suite: &mut Suite) -> Outcome {
    let frames = steady_dataset();
    let plan = plan(&frames);
    // The remaining families on the same folds, for the naive comparison.
    let window = WindowSpec::new(1).unwrap();
    let ffn = ModelConfig::Neural {
        spec: NetSpec::FeedForward(FeedForwardSpec {
            widths: vec![128, 64],
            activations: vec![Activation::Elu, Activation::Elu],
            output_dim: 21,
        }),
        training: NeuralTraining {
            batch_size: 64,
            lr: 1e-3,
            max_epochs: 40,
            patience: Some(5),
        },
    };
    let tf = ModelConfig::Neural {
        spec: NetSpec::Transformer(TransformerSpec {
            n_layers: 2,
            n_heads: 4,
            embed_dim: 32,
            hidden_dim: 64,
            dropout: 0.0,
            output_dim: 21,
        }),
        training: NeuralTraining {
            batch_size: 64,
            lr: 1e-3,
            max_epochs: 20,
            patience: Some(4),
        },
    };
    for (name, cfg) in [
        ("feed_forward combo 1 (steady)", ffn),
        ("transformer combo 1 (steady)", tf),
    ] {
        let r = run_experiment(&frames, &plan, &cfg, &window, 5).unwrap();
        suite.trained.push((name.into(), mean_nmae(&r)));
    }

    let mut r = rng::rng(900);
    let y = Array2::from_shape_simple_fn((100_000, 1), || StandardNormal.sample(&mut r));
    let nb = naive_baseline(&y).unwrap();
    let v = normalized_mae(&y, &nb.predict(y.nrows()), &[0]).unwrap();
    let closed = (2.0 / std::f64::consts::PI).sqrt();
    let naive_best = suite.naive.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    let beaten = !suite.trained.is_empty() && suite.trained.iter().all(|(_, m)| *m < naive_best);
    let trained: Vec<String> = suite.trained.iter().map(|(n, m)| format!("{n} {m:.3}")).collect();
    let naive: Vec<String> = suite.naive.iter().map(|(n, m)| format!("{n} {m:.3}")).collect();
    outcome(
        (v - closed).abs() < 0.01 && beaten,
        format!(
            "naive on N(0,1) {v:.4} vs {closed:.4}; naive {} vs trained {}",
            naive.join(", "),
            trained.join(", ")
        ),
    )
}

fn main() {
    let s = Duration::from_secs;
    let mut suite = Suite {
        trained: Vec::new(),
        naive: Vec::new(),
    };
    let results = [
        run(1, "gradient oracle", s(60), criterion_gradients),
        run(2, "tree oracle", s(10), criterion_tree),
        run(3, "t-test oracle", s(10), criterion_ttest),
        run(4, "temperature finding", s(600), || criterion_temperature(&mut suite)),
        run(5, "windowing finding", s(600), || criterion_windowing(&mut suite)),
        run(6, "calibration", s(30), criterion_calibration),
        run(7, "latency ordering", s(60), criterion_latency),
        run(8, "determinism and round-trips", s(600), criterion_determinism),
        run(9, "metric sanity", s(600), || criterion_metrics(&mut suite)),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
