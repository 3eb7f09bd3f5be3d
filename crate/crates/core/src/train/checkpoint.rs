use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpochRecord, Pipeline, Setup};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const METRICS_HEADER: &str = "epoch,loss,lr,train_acc,test_acc";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    /// Learning rate for the next epoch.
    pub lr: f64,
}

/// Complete training state after `epoch` epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub config: Setup,
    pub model: Pipeline,
    pub optimizer: OptimizerState,
    pub schedule: ScheduleState,
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// Writes `ck` as JSON through a temporary file renamed into place.
pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    let json = serde_json::to_vec_pretty(ck).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, io::Error::new(io::ErrorKind::InvalidInput, "not a file path")))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let write = || -> io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&json)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptCheckpoint("missing version".into()))?;
    if version != u64::from(CHECKPOINT_VERSION) {
        return Err(Error::UnsupportedVersion {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: CHECKPOINT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::CorruptCheckpoint(e.to_string()))
}

/// One CSV row per epoch; an empty `test_acc` field when there is no test split.
pub fn write_metrics_csv<W: Write>(history: &[EpochRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in history {
        let test = r.test_acc.map(|a| a.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.epoch, r.loss, r.lr, r.train_acc, test)?;
    }
    Ok(())
}
