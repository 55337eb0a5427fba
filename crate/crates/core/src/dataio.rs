//! CSV dataset files and chunked fold plans.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sensor::{validate_frame, SensorFrame, N_ELECTRODES};

pub const TICK_HZ: u32 = 100;

const SCALAR_COLUMNS: [&str; 13] = [
    "tick", "cycle_id", "x_mm", "y_mm", "z_mm", "fx_n", "fy_n", "fz_n", "tdc", "tac", "pdc", "pac0", "pac1",
];

/// The exact CSV header.
pub fn header() -> Vec<String> {
    SCALAR_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((1..=N_ELECTRODES).map(|i| format!("e{i}")))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source: String,
    pub tick_hz: u32,
    #[serde(default)]
    pub layout_ref: Option<String>,
}

impl Default for DatasetMeta {
    fn default() -> Self {
        DatasetMeta {
            source: "synthetic".into(),
            tick_hz: TICK_HZ,
            layout_ref: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub frames: Vec<SensorFrame>,
    pub meta: DatasetMeta,
}

impl Dataset {
    /// Checks that ticks run 0, 1, 2, … and every frame is valid.
    pub fn new(frames: Vec<SensorFrame>, meta: DatasetMeta) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Insufficient("dataset is empty".into()));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.tick != i as u64 {
                return Err(Error::parse(
                    i + 1,
                    format!("tick {} is not contiguous (expected {i})", f.tick),
                ));
            }
            validate_frame(f).map_err(|v| Error::parse(i + 1, v.to_string()))?;
        }
        Ok(Dataset { frames, meta })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

fn format_row(f: &SensorFrame) -> Vec<String> {
    let mut row = Vec::with_capacity(13 + N_ELECTRODES);
    row.push(f.tick.to_string());
    row.push(f.cycle_id.to_string());
    for v in f.position_mm.iter().chain(f.force_n.iter()) {
        row.push(v.to_string());
    }
    for v in [f.tdc, f.tac, f.pdc, f.pac0, f.pac1].iter().chain(f.electrodes.iter()) {
        row.push(v.to_string());
    }
    row
}

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    w.write_record(header()).map_err(csv_err)?;
    for f in &dataset.frames {
        w.write_record(format_row(f)).map_err(csv_err)?;
    }
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

fn parse_row(rec: &csv::StringRecord, row: usize) -> Result<SensorFrame> {
    let n = 13 + N_ELECTRODES;
    if rec.len() != n {
        return Err(Error::parse(row, format!("expected {n} columns, got {}", rec.len())));
    }
    let cell = |i: usize| -> Result<f64> {
        let s = rec[i].trim();
        s.parse::<f64>()
            .map_err(|_| Error::parse(row, format!("column {} is not numeric: {s:?}", header()[i])))
    };
    let tick = rec[0]
        .trim()
        .parse::<u64>()
        .map_err(|_| Error::parse(row, format!("tick is not an integer: {:?}", &rec[0])))?;
    let cycle_id = rec[1]
        .trim()
        .parse::<i64>()
        .map_err(|_| Error::parse(row, format!("cycle_id is not an integer: {:?}", &rec[1])))?;
    let electrodes = (13..n).map(cell).collect::<Result<Vec<_>>>()?;
    Ok(SensorFrame {
        tick,
        cycle_id,
        position_mm: [cell(2)?, cell(3)?, cell(4)?],
        force_n: [cell(5)?, cell(6)?, cell(7)?],
        tdc: cell(8)?,
        tac: cell(9)?,
        pdc: cell(10)?,
        pac0: cell(11)?,
        pac1: cell(12)?,
        electrodes,
    })
}

/// Read a dataset CSV. Row numbers in errors count data rows from 1.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let found: Vec<String> = r
        .headers()
        .map_err(|e| Error::parse(0, e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if found != header() {
        return Err(Error::parse(0, "header mismatch"));
    }
    let mut frames = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
        frames.push(parse_row(&rec, row)?);
    }
    let meta = DatasetMeta {
        source: path.display().to_string(),
        ..DatasetMeta::default()
    };
    Dataset::new(frames, meta)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
    pub train: Vec<usize>,
}

/// Chunk-level train/validation/test splits, one entry per fold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub chunk_size: usize,
    pub chunks_per_split: usize,
    pub n_chunks: usize,
    pub seed: u64,
    pub folds: Vec<FoldAssignment>,
}

/// Cut `dataset_len` ticks into `⌊len/chunk_size⌋` chunks; each fold draws
/// its own test and validation chunks and trains on the rest. Ticks past the
/// last whole chunk are unused.
pub fn make_fold_plan(
    dataset_len: usize,
    n_folds: usize,
    chunk_size: usize,
    chunks_per_split: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if n_folds == 0 || chunk_size == 0 || chunks_per_split == 0 {
        return Err(Error::config(
            "n_folds, chunk_size and chunks_per_split must all be >= 1",
        ));
    }
    let n_chunks = dataset_len / chunk_size;
    if 2 * chunks_per_split >= n_chunks {
        return Err(Error::Insufficient(format!(
            "{n_chunks} chunks of {chunk_size} ticks leave no training chunk after {chunks_per_split} test and {chunks_per_split} validation chunks"
        )));
    }
    let folds = (0..n_folds)
        .map(|fold| {
            let mut order: Vec<usize> = (0..n_chunks).collect();
            order.shuffle(&mut rng::sub_rng(seed, fold as u64));
            let mut test = order[..chunks_per_split].to_vec();
            let mut validation = order[chunks_per_split..2 * chunks_per_split].to_vec();
            let mut train = order[2 * chunks_per_split..].to_vec();
            test.sort_unstable();
            validation.sort_unstable();
            train.sort_unstable();
            FoldAssignment {
                test,
                validation,
                train,
            }
        })
        .collect();
    Ok(FoldPlan {
        n_folds,
        chunk_size,
        chunks_per_split,
        n_chunks,
        seed,
        folds,
    })
}

impl FoldPlan {
    pub fn chunk_range(&self, chunk: usize) -> Range<usize> {
        chunk * self.chunk_size..(chunk + 1) * self.chunk_size
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }
}
