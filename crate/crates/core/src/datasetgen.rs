//! Dataset generation: grammar-sampled, simulated, interference-filtered
//! sequences paired with the requirement vector they achieve.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalogue::Catalogue;
use crate::dsl::{vocabulary_hash, GearSequence, Grammar, MAX_COMPONENTS};
use crate::feasibility::check_interference;
use crate::geometry::{Axis, Sign, Vec3};
use crate::simulator::{simulate, MotionType, SimResult};

/// Target values for one design problem, flattened in this field order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Requirements {
    pub tau_in: MotionType,
    pub tau_out: MotionType,
    pub s: f64,
    pub p: Vec3,
    pub m: Axis,
}

#[derive(Debug, Error, PartialEq)]
pub enum RequirementsError {
    #[error("expected 8 requirement values, got {0}")]
    WrongLength(usize),
    #[error("requirement value {0:?} is not a number")]
    NotANumber(String),
    #[error("motion type must be 0 or 1, got {0}")]
    BadMotionType(f64),
    #[error("speed ratio must be positive and finite, got {0}")]
    BadSpeed(f64),
    #[error("position must be finite")]
    BadPosition,
    #[error("motion vector index must be 0, 1 or 2, got {0}")]
    BadAxisIndex(f64),
    #[error("motion vector sign must be 1 or -1, got {0}")]
    BadAxisSign(f64),
}

fn positive_zero(x: f64) -> f64 {
    x + 0.0
}

impl Requirements {
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.tau_in.code() as f64,
            self.tau_out.code() as f64,
            self.s,
            positive_zero(self.p[0]),
            positive_zero(self.p[1]),
            positive_zero(self.p[2]),
            self.m.index as f64,
            self.m.sign.value(),
        ]
    }

    pub fn from_slice(v: &[f64]) -> Result<Requirements, RequirementsError> {
        if v.len() != 8 {
            return Err(RequirementsError::WrongLength(v.len()));
        }
        let motion = |x: f64| match x {
            0.0 => Ok(MotionType::Rotation),
            1.0 => Ok(MotionType::Translation),
            _ => Err(RequirementsError::BadMotionType(x)),
        };
        if !(v[2] > 0.0 && v[2].is_finite()) {
            return Err(RequirementsError::BadSpeed(v[2]));
        }
        if !v[3..6].iter().all(|x| x.is_finite()) {
            return Err(RequirementsError::BadPosition);
        }
        let index = match v[6] {
            0.0 => 0,
            1.0 => 1,
            2.0 => 2,
            x => return Err(RequirementsError::BadAxisIndex(x)),
        };
        let sign = match v[7] {
            1.0 => Sign::Pos,
            -1.0 => Sign::Neg,
            x => return Err(RequirementsError::BadAxisSign(x)),
        };
        Ok(Requirements {
            tau_in: motion(v[0])?,
            tau_out: motion(v[1])?,
            s: v[2],
            p: [v[3], v[4], v[5]],
            m: Axis::new(index, sign),
        })
    }
}

impl fmt::Display for Requirements {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.to_array().iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl FromStr for Requirements {
    type Err = RequirementsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|w| !w.is_empty())
            .map(|w| w.parse::<f64>().map_err(|_| RequirementsError::NotANumber(w.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Requirements::from_slice(&values)
    }
}

/// Packs a simulation result into the 8-element input encoding.
pub fn encode_requirements(res: &SimResult) -> Requirements {
    Requirements {
        tau_in: res.tau_in,
        tau_out: res.tau_out,
        s: res.s,
        p: res.p.map(positive_zero),
        m: res.m,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    pub requirements: Requirements,
    pub sequence: GearSequence,
}

pub const RECORD_SEPARATOR: &str = "|";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot write output: {0}")]
    OutputUnwritable(std::io::Error),
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("only {accepted} unique feasible sequences found after {draws} draws")]
    Exhausted { accepted: usize, draws: u64 },
    #[error("split would leave the {0} set empty")]
    TooFewRecords(&'static str),
}

impl fmt::Display for DatasetRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {RECORD_SEPARATOR} {}", self.requirements, self.sequence)
    }
}

impl DatasetRecord {
    pub fn parse_line(line: &str, line_no: usize) -> Result<DatasetRecord, DatasetError> {
        let err = |reason: String| DatasetError::Format { line: line_no, reason };
        let (req, seq) = line
            .split_once(RECORD_SEPARATOR)
            .ok_or_else(|| err(format!("missing '{RECORD_SEPARATOR}' separator")))?;
        Ok(DatasetRecord {
            requirements: req.parse().map_err(|e: RequirementsError| err(e.to_string()))?,
            sequence: seq.parse().map_err(|e: crate::dsl::SequenceParseError| err(e.to_string()))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_target: usize,
    pub max_components: usize,
    pub seed: u64,
    pub catalogue_version: String,
    pub vocab_hash: String,
    pub draws: u64,
    pub accepted: usize,
    pub rejected_invalid: u64,
    pub rejected_infeasible: u64,
    pub rejected_duplicate: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct DatasetConfig {
    pub n_target: usize,
    pub max_components: usize,
    pub seed: u64,
}

const BATCH: u64 = 4096;

/// RNG for draw `index` of a run seeded with `seed`: one ChaCha stream per draw.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

enum Draw {
    Invalid,
    Infeasible,
    Ok(DatasetRecord),
}

/// Rejection sampling: draw, simulate, drop infeasible and duplicate
/// sequences. Draws run in parallel but are accepted in draw order, so the
/// output depends only on the seed.
pub fn generate_records(cfg: DatasetConfig, cat: &Catalogue) -> Result<(Vec<DatasetRecord>, Manifest), DatasetError> {
    if cfg.n_target == 0 {
        return Err(DatasetError::InvalidParameter("n_target must be at least 1".into()));
    }
    if !(1..=MAX_COMPONENTS).contains(&cfg.max_components) {
        return Err(DatasetError::InvalidParameter(format!(
            "max_components must be in 1..={MAX_COMPONENTS}"
        )));
    }
    let grammar = Grammar::with_max_components(cat, cfg.max_components);
    let max_draws = (cfg.n_target as u64).saturating_mul(1000).max(100_000);

    let mut manifest = Manifest {
        n_target: cfg.n_target,
        max_components: cfg.max_components,
        seed: cfg.seed,
        catalogue_version: cat.version().to_string(),
        vocab_hash: vocabulary_hash(),
        draws: 0,
        accepted: 0,
        rejected_invalid: 0,
        rejected_infeasible: 0,
        rejected_duplicate: 0,
    };
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(cfg.n_target);
    let mut next = 0u64;
    while records.len() < cfg.n_target {
        if next >= max_draws {
            return Err(DatasetError::Exhausted { accepted: records.len(), draws: next });
        }
        let batch: Vec<Draw> = (next..next + BATCH)
            .into_par_iter()
            .map(|i| {
                let seq = grammar.random_with(&mut draw_rng(cfg.seed, i));
                match simulate(&seq, cat) {
                    Err(_) => Draw::Invalid,
                    Ok(res) if !check_interference(&res.placements).is_feasible() => Draw::Infeasible,
                    Ok(res) => Draw::Ok(DatasetRecord { requirements: encode_requirements(&res), sequence: seq }),
                }
            })
            .collect();
        for draw in batch {
            if records.len() == cfg.n_target {
                break;
            }
            manifest.draws += 1;
            match draw {
                Draw::Invalid => manifest.rejected_invalid += 1,
                Draw::Infeasible => manifest.rejected_infeasible += 1,
                Draw::Ok(rec) => {
                    if seen.insert(rec.sequence.ids()) {
                        records.push(rec);
                    } else {
                        manifest.rejected_duplicate += 1;
                    }
                }
            }
        }
        next += BATCH;
    }
    manifest.accepted = records.len();
    Ok((records, manifest))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn write_records(path: &Path, records: &[DatasetRecord]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(DatasetError::OutputUnwritable)?;
    let mut w = BufWriter::new(file);
    for r in records {
        writeln!(w, "{r}").map_err(DatasetError::OutputUnwritable)?;
    }
    w.flush().map_err(DatasetError::OutputUnwritable)
}

/// Generates a dataset into `out` and writes the manifest next to it as
/// `<out>.manifest.json`.
pub fn generate_dataset(cfg: DatasetConfig, cat: &Catalogue, out: &Path) -> Result<Manifest, DatasetError> {
    let (records, manifest) = generate_records(cfg, cat)?;
    write_records(out, &records)?;
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(manifest_path(out), json + "\n").map_err(DatasetError::OutputUnwritable)?;
    Ok(manifest)
}

pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(DatasetRecord::parse_line(&line, i + 1)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Vec<DatasetRecord>,
    pub val: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

pub const DEFAULT_VAL_FRAC: f64 = 0.0005;
pub const DEFAULT_TEST_FRAC: f64 = 0.0005;

/// Size of a held-out split: `floor(n * frac)`.
pub fn split_size(n: usize, frac: f64) -> usize {
    (n as f64 * frac).floor() as usize
}

/// Seeded shuffle, then the first `floor(n * val_frac)` records go to
/// validation, the next `floor(n * test_frac)` to test, the rest to train.
pub fn split(records: Vec<DatasetRecord>, val_frac: f64, test_frac: f64, seed: u64) -> Result<Splits, DatasetError> {
    let ok = |f: f64| f > 0.0 && f < 1.0;
    if !ok(val_frac) || !ok(test_frac) || val_frac + test_frac >= 1.0 {
        return Err(DatasetError::InvalidParameter(
            "fractions must be in (0, 1) with sum below 1".into(),
        ));
    }
    let n = records.len();
    let n_val = split_size(n, val_frac);
    let n_test = split_size(n, test_frac);
    if n_val == 0 {
        return Err(DatasetError::TooFewRecords("validation"));
    }
    if n_test == 0 {
        return Err(DatasetError::TooFewRecords("test"));
    }
    if n_val + n_test >= n {
        return Err(DatasetError::TooFewRecords("training"));
    }
    let mut records = records;
    records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = records.split_off(n_val + n_test);
    let test = records.split_off(n_val);
    Ok(Splits { train, val: records, test })
}

/// Writes `train.txt`, `val.txt` and `test.txt` into `dir`.
pub fn write_splits(dir: &Path, splits: &Splits) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir).map_err(DatasetError::OutputUnwritable)?;
    write_records(&dir.join("train.txt"), &splits.train)?;
    write_records(&dir.join("val.txt"), &splits.val)?;
    write_records(&dir.join("test.txt"), &splits.test)
}
