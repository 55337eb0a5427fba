//! Result files: one CSV row per fold, and a JSON summary.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{mean_sizes, paired_differences, FoldResult};
use super::ttest::{corrected_ttest, TTestReport};
use crate::error::{Error, Result};
use crate::sensor::ChannelSet;

const FIXED: [&str; 10] = [
    "fold",
    "kind",
    "combo",
    "temperature",
    "n_train",
    "n_test",
    "nmae_all",
    "nmae_electrodes",
    "mae_all",
    "mae_electrodes",
];

pub fn results_header() -> Vec<String> {
    let names = ChannelSet::names();
    FIXED
        .iter()
        .map(|s| s.to_string())
        .chain(names.iter().map(|n| format!("nmae_{n}")))
        .chain(names.iter().map(|n| format!("mae_{n}")))
        .collect()
}

pub fn write_results(results: &[FoldResult], path: &Path) -> Result<()> {
    let io = |e: csv::Error| Error::config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(results_header()).map_err(io)?;
    for r in results {
        let mut row = vec![
            r.fold.to_string(),
            r.kind.clone(),
            r.combo.to_string(),
            r.temperature.to_string(),
            r.n_train.to_string(),
            r.n_test.to_string(),
            r.nmae_all.to_string(),
            r.nmae_electrodes.to_string(),
            r.mae_all.to_string(),
            r.mae_electrodes.to_string(),
        ];
        row.extend(r.channel_nmae.iter().map(f64::to_string));
        row.extend(r.channel_mae.iter().map(f64::to_string));
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<FoldResult>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(file);
    let mut records = rd.records();
    let header = records
        .next()
        .ok_or_else(|| Error::parse(0, "missing header"))?
        .map_err(|e| Error::parse(0, e.to_string()))?;
    if header.iter().ne(results_header().iter().map(String::as_str)) {
        return Err(Error::parse(0, "header mismatch"));
    }
    let n = ChannelSet::LEN;
    let mut out = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            rec[j].parse::<f64>().map_err(|_| {
                Error::parse(
                    row,
                    format!(
                        "column {} is not a number: {:?}",
                        FIXED.get(j).unwrap_or(&"channel"),
                        &rec[j]
                    ),
                )
            })
        };
        let int = |j: usize| -> Result<usize> {
            rec[j]
                .parse::<usize>()
                .map_err(|_| Error::parse(row, format!("column {} is not an integer: {:?}", FIXED[j], &rec[j])))
        };
        out.push(FoldResult {
            fold: int(0)?,
            kind: rec[1].to_string(),
            combo: u8::try_from(int(2)?).map_err(|_| Error::parse(row, "combo out of range"))?,
            temperature: rec[3]
                .parse()
                .map_err(|_| Error::parse(row, format!("temperature must be true or false: {:?}", &rec[3])))?,
            n_train: int(4)?,
            n_test: int(5)?,
            nmae_all: num(6)?,
            nmae_electrodes: num(7)?,
            mae_all: num(8)?,
            mae_electrodes: num(9)?,
            channel_nmae: (10..10 + n).map(num).collect::<Result<_>>()?,
            channel_mae: (10 + n..10 + 2 * n).map(num).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

/// Mean scores of one model over its folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub kind: String,
    pub combo: u8,
    pub temperature: bool,
    pub folds: usize,
    pub nmae_all: f64,
    pub nmae_electrodes: f64,
    pub mae_all: f64,
    pub mae_electrodes: f64,
}

pub fn summarize(results: &[FoldResult]) -> Result<ModelSummary> {
    let first = results
        .first()
        .ok_or_else(|| Error::Insufficient("no fold results".into()))?;
    let n = results.len() as f64;
    let mean = |f: fn(&FoldResult) -> f64| results.iter().map(f).sum::<f64>() / n;
    Ok(ModelSummary {
        kind: first.kind.clone(),
        combo: first.combo,
        temperature: first.temperature,
        folds: results.len(),
        nmae_all: mean(|r| r.nmae_all),
        nmae_electrodes: mean(|r| r.nmae_electrodes),
        mae_all: mean(|r| r.mae_all),
        mae_electrodes: mean(|r| r.mae_electrodes),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: ModelSummary,
    pub b: ModelSummary,
    /// Test of `a − b` on per-fold normalized MAE.
    pub ttest: TTestReport,
}

/// Paired comparison of two runs over the same fold plan.
pub fn compare(a: &[FoldResult], b: &[FoldResult]) -> Result<Comparison> {
    let diffs = paired_differences(a, b)?;
    let (n_train, n_test) = mean_sizes(a);
    Ok(Comparison {
        a: summarize(a)?,
        b: summarize(b)?,
        ttest: corrected_ttest(&diffs, n_train, n_test)?,
    })
}
