//! Run configuration: a JSON file merged with `--dotted.key value` overrides
//! on top of the defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use kgcn::kernels::{KernelKind, KernelSpec};
use kgcn::model::{AblationMode, Pool, DEFAULT_FILTERS, DEFAULT_FILTER_SIZE, DEFAULT_HOPS};
use kgcn::skeleton::{Topology, DEFAULT_CHUNKS};
use kgcn::train::{ModelConfig, ModelKind, Normalize, Setup, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub kernel: KernelSpec,
    pub model: ModelSection,
    pub kpca: KpcaSection,
    pub graph: GraphSection,
    pub train: TrainSection,
    pub data: DataSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(rename = "K")]
    pub filters: usize,
    #[serde(rename = "N")]
    pub size: usize,
    /// Hops of the propagation `A^r`.
    pub r: usize,
    pub pool: Pool,
    pub normalize: Normalize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpcaSection {
    #[serde(rename = "H")]
    pub dims: usize,
    pub max_anchors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    /// Temporal chunks per trajectory.
    pub chunks: usize,
    pub topology: Topology,
    pub self_loops: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub lr0: f64,
    pub momentum: f64,
    pub batch: usize,
    pub epochs: usize,
    pub ablation: AblationMode,
    pub lr_bounds: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Generated skeleton sequences.
    Synth,
    /// A directory of SBU-style `skeleton_pos.txt` files plus a split file.
    Sbu,
    /// A `dataset.json` written by `kgcn synth`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub source: DataSource,
    pub classes: usize,
    pub per_class: usize,
    /// Sequences per class that go to the training split.
    pub train_per_class: usize,
    /// Seed of the synthetic generator, independent of the run seed.
    pub synth_seed: u64,
    /// SBU root directory or dataset file.
    pub path: Option<PathBuf>,
    pub file_name: String,
    /// Split file for SBU data.
    pub split: Option<PathBuf>,
}

impl RunConfig {
    pub fn defaults(seed: u64, kernel: KernelSpec) -> Self {
        let model = ModelConfig::default();
        let train = TrainConfig::new(seed);
        Self {
            seed,
            kernel,
            model: ModelSection {
                kind: ModelKind::Kgcn,
                filters: DEFAULT_FILTERS,
                size: DEFAULT_FILTER_SIZE,
                r: DEFAULT_HOPS,
                pool: Pool::Mean,
                normalize: Normalize::Minmax,
            },
            kpca: KpcaSection {
                dims: model.kpca_dims,
                max_anchors: model.max_anchors,
            },
            graph: GraphSection {
                chunks: DEFAULT_CHUNKS,
                topology: Topology::SkeletonTree,
                self_loops: true,
            },
            train: TrainSection {
                lr0: train.lr0,
                momentum: train.momentum,
                batch: train.batch,
                epochs: train.epochs,
                ablation: train.ablation,
                lr_bounds: None,
            },
            data: DataSection {
                source: DataSource::Synth,
                classes: 4,
                per_class: 75,
                train_per_class: 50,
                synth_seed: 7,
                path: None,
                file_name: "skeleton_pos.txt".into(),
                split: None,
            },
        }
    }

    /// Resolves the optional config file and the overrides into a validated
    /// configuration.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut user = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?
            }
            None => Value::Object(Map::new()),
        };
        if !user.is_object() {
            return Err(CliError::Usage("config file must hold a JSON object".into()));
        }
        for (key, raw) in overrides {
            set_path(&mut user, key, parse_scalar(raw))?;
        }
        let seed = user
            .get("seed")
            .ok_or_else(|| CliError::Usage("missing required key `seed` (pass --seed N)".into()))?
            .as_u64()
            .ok_or_else(|| CliError::Usage("`seed` must be a non-negative integer".into()))?;
        // Kernel defaults depend on the kind, so pick them before merging.
        let kind = match user.pointer("/kernel/kind") {
            None => KernelKind::Gaussian,
            Some(Value::String(s)) => KernelKind::from_str(s).map_err(|e| CliError::Usage(e.to_string()))?,
            Some(other) => return Err(CliError::Usage(format!("kernel.kind must be a string, got {other}"))),
        };
        if let Some(k) = user.get_mut("kernel").and_then(Value::as_object_mut) {
            k.insert("kind".into(), Value::String(kind.name().into()));
        }
        let mut merged = serde_json::to_value(Self::defaults(seed, KernelSpec::new(kind))).expect("defaults serialize");
        merge(&mut merged, user, "")?;
        let cfg: Self = serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.setup().validate().map_err(|e| CliError::Usage(format!("{}: {e}", e.code())))?;
        Ok(cfg)
    }

    pub fn setup(&self) -> Setup {
        let model = ModelConfig {
            kind: self.model.kind,
            kernel: self.kernel,
            filters: self.model.filters,
            size: self.model.size,
            hops: self.model.r,
            pool: self.model.pool,
            kpca_dims: self.kpca.dims,
            max_anchors: self.kpca.max_anchors,
            normalize: self.model.normalize,
        };
        let train = TrainConfig {
            lr0: self.train.lr0,
            momentum: self.train.momentum,
            batch: self.train.batch,
            epochs: self.train.epochs,
            seed: self.seed,
            ablation: self.train.ablation,
            lr_bounds: self.train.lr_bounds,
        };
        Setup::new(model, train)
    }
}

/// A JSON literal when the text parses as one, a string otherwise.
fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("malformed override key `{key}`")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("override `{key}`: `{part}` is not a section")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Usage(format!("override `{key}` descends into a value")))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Overlays `user` on `base`, rejecting keys that `base` does not have.
fn merge(base: &mut Value, user: Value, prefix: &str) -> Result<(), CliError> {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                let slot = b
                    .get_mut(&k)
                    .ok_or_else(|| CliError::Usage(format!("unknown config key `{path}`")))?;
                merge(slot, v, &path)?;
            }
            Ok(())
        }
        (Value::Object(_), other) => Err(CliError::Usage(format!("`{prefix}` is a section, got {other}"))),
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}
