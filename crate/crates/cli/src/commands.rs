use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tacsim::calibration::{calibrate as hill_climb, light_touch_probes, PoseOffset};
use tacsim::dataio::{read_dataset, write_dataset, Dataset, DatasetMeta, TICK_HZ};
use tacsim::oracle::{generate_dataset, OracleConfig};
use tacsim::sensor::ElectrodeLayout;
use tacsim::stats::{
    self, bench_latency, fit_folds, fixed_temperature_sweep, read_results, summarize, temperature_grid, write_results,
    FittedFold, ModelArtifact, ModelSummary, TrainedModel,
};

use crate::config::{EvalTemperature, ExperimentConfig};
use crate::{io_error, read_json, write_json, CliError};

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(tacsim::Error::from)?;
    let mut out = std::io::stdout().lock();
    // A closed pipe is not worth an error exit.
    let _ = writeln!(out, "{text}");
    Ok(())
}

pub fn gen_data(oracle: &Path, out: &Path) -> Result<(), CliError> {
    let cfg: OracleConfig = read_json(oracle)?;
    let frames = generate_dataset(&cfg)?;
    let n = frames.len();
    let ds = Dataset::new(
        frames,
        DatasetMeta {
            source: format!("oracle seed {}", cfg.seed),
            tick_hz: TICK_HZ,
            layout_ref: None,
        },
    )?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_dataset(&ds, out)?;
    println!("wrote {n} frames to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct CalibrationOutput {
    n_probes: usize,
    offset: PoseOffset,
    initial_mean_dist_mm: f64,
    final_mean_dist_mm: f64,
    steps: usize,
    accepted: usize,
}

pub fn calibrate(
    data: &Path,
    layout: &Path,
    force_max: f64,
    steps: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let ds = read_dataset(data)?;
    let layout = ElectrodeLayout::load(layout)?;
    let probes = light_touch_probes(&ds.frames, &layout.skin_surface, force_max);
    let (offset, rep) = hill_climb(&probes, &layout.skin_surface, PoseOffset::default(), steps, seed)?;
    if let Some(path) = out {
        write_json(path, &offset)?;
    }
    print_json(&CalibrationOutput {
        n_probes: probes.len(),
        offset,
        initial_mean_dist_mm: rep.initial_mean_dist_mm,
        final_mean_dist_mm: rep.final_mean_dist_mm,
        steps: rep.steps,
        accepted: rep.accepted,
    })
}

struct Loaded {
    cfg: ExperimentConfig,
    dataset: Dataset,
    fitted: Vec<FittedFold>,
}

fn fit(experiment: &Path) -> Result<Loaded, CliError> {
    let cfg = ExperimentConfig::load(experiment)?;
    let dataset = read_dataset(&cfg.dataset)?;
    let plan = cfg.fold_plan(dataset.len())?;
    let fitted = fit_folds(&dataset.frames, &plan, &cfg.model_config()?, &cfg.window()?, cfg.seed)?;
    create_dir(&cfg.output_dir)?;
    plan.save(&cfg.output_dir.join("fold_plan.json"))?;
    Ok(Loaded { cfg, dataset, fitted })
}

pub fn train(experiment: &Path) -> Result<(), CliError> {
    let Loaded { cfg, fitted, .. } = fit(experiment)?;
    let models = cfg.output_dir.join("models");
    create_dir(&models)?;
    let mut curves = String::from("fold,epoch,train_loss,val_loss\n");
    for f in &fitted {
        let path = models.join(format!("fold_{}.{}", f.fold, f.artifact.extension()));
        f.artifact.save(&path)?;
        if let TrainedModel::Neural(m) = &f.artifact.model {
            for (e, (t, v)) in m.curves.train_loss.iter().zip(&m.curves.val_loss).enumerate() {
                curves.push_str(&format!("{},{},{t},{v}\n", f.fold, e + 1));
            }
        }
        println!(
            "fold {}: trained {} on {} windows -> {}",
            f.fold,
            f.artifact.model.kind(),
            f.n_train,
            path.display()
        );
    }
    if fitted
        .iter()
        .any(|f| matches!(f.artifact.model, TrainedModel::Neural(_)))
    {
        let path = cfg.output_dir.join("curves.csv");
        fs::write(&path, curves).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluationSummary {
    #[serde(flatten)]
    summary: ModelSummary,
    /// Temperature input used for scoring, if fixed.
    eval_temperature: Option<f64>,
    fold_nmae: Vec<f64>,
}

fn dataset_mean_tdc(ds: &Dataset) -> f64 {
    ds.frames.iter().map(|f| f.tdc).sum::<f64>() / ds.len() as f64
}

pub fn evaluate(experiment: &Path) -> Result<(), CliError> {
    let Loaded { cfg, dataset, fitted } = fit(experiment)?;
    let fixed = match &cfg.eval_temperature {
        None => None,
        Some(EvalTemperature::Counts(t)) => Some(*t),
        Some(EvalTemperature::Named(_)) => Some(dataset_mean_tdc(&dataset)),
    };
    let results = fitted
        .iter()
        .map(|f| match fixed {
            Some(t) => f.evaluate_fixed_temperature(t),
            None => f.evaluate(),
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_results(&results, &cfg.output_dir.join("results.csv"))?;
    let summary = EvaluationSummary {
        summary: summarize(&results)?,
        eval_temperature: fixed,
        fold_nmae: results.iter().map(|r| r.nmae_all).collect(),
    };
    write_json(&cfg.output_dir.join("summary.json"), &summary)?;
    print_json(&summary)
}

pub fn compare(a: &Path, b: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let cmp = stats::compare(&read_results(a)?, &read_results(b)?)?;
    if let Some(path) = out {
        write_json(path, &cmp)?;
    }
    print_json(&cmp)
}

pub fn bench(model: &Path, n: usize, seed: u64) -> Result<(), CliError> {
    let art = ModelArtifact::load(model)?;
    let reg = art.model.regressor();
    let rep = bench_latency(reg, reg.input_dim(), n, seed)?;
    print_json(&rep)
}

#[derive(Serialize)]
struct SweepSummary {
    grid_points: usize,
    true_nmae: f64,
    best_fixed_tdc: f64,
    best_fixed_nmae: f64,
    dataset_mean_tdc: f64,
    dataset_mean_nmae: f64,
}

pub fn sweep_temp(experiment: &Path, points: usize) -> Result<(), CliError> {
    if points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let Loaded { cfg, dataset, fitted } = fit(experiment)?;
    let temps: Vec<f64> = dataset.frames.iter().map(|f| f.tdc).collect();
    let grid = temperature_grid(&temps, points);
    let curves = fitted
        .iter()
        .map(|f| fixed_temperature_sweep(f, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    let k = curves.len() as f64;
    let mean_curve: Vec<f64> = (0..grid.len())
        .map(|i| curves.iter().map(|c| c.nmae[i]).sum::<f64>() / k)
        .collect();

    let mut csv = String::from("tdc");
    for f in &fitted {
        csv.push_str(&format!(",fold_{}", f.fold));
    }
    csv.push_str(",mean\n");
    for (i, t) in grid.iter().enumerate() {
        csv.push_str(&t.to_string());
        for c in &curves {
            csv.push_str(&format!(",{}", c.nmae[i]));
        }
        csv.push_str(&format!(",{}\n", mean_curve[i]));
    }
    let path = cfg.output_dir.join("sweep.csv");
    fs::write(&path, csv).map_err(|e| io_error(&path, e))?;

    let (best_i, _) = mean_curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let mean_tdc = dataset_mean_tdc(&dataset);
    let at_mean = fitted
        .iter()
        .map(|f| Ok(f.evaluate_fixed_temperature(mean_tdc)?.nmae_all))
        .collect::<Result<Vec<f64>, tacsim::Error>>()?;
    let summary = SweepSummary {
        grid_points: grid.len(),
        true_nmae: curves.iter().map(|c| c.true_nmae).sum::<f64>() / k,
        best_fixed_tdc: grid[best_i],
        best_fixed_nmae: mean_curve[best_i],
        dataset_mean_tdc: mean_tdc,
        dataset_mean_nmae: at_mean.iter().sum::<f64>() / k,
    };
    write_json(&cfg.output_dir.join("sweep.json"), &summary)?;
    print_json(&summary)
}
