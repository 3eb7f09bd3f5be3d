use std::collections::HashMap;
use std::path::Path;

use kgcn::graph::LabeledGraph;
use kgcn::skeleton::{build_graph, load_sbu_dir, parse_split, split_per_class, synth_sequences, SkeletonLayout};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, RunConfig};
use crate::CliError;

/// Train and test graphs, as stored in `dataset.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub train: Vec<LabeledGraph>,
    pub test: Vec<LabeledGraph>,
}

pub fn load(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let d = &cfg.data;
    let g = &cfg.graph;
    match d.source {
        DataSource::Synth => {
            if d.classes < 2 || d.per_class == 0 {
                return Err(CliError::Usage("data.classes must be >= 2 and data.per_class >= 1".into()));
            }
            let graphs = synth_sequences(d.classes, d.per_class, d.synth_seed)
                .iter()
                .map(|s| build_graph(s, g.chunks, g.topology, g.self_loops))
                .collect::<kgcn::Result<Vec<_>>>()?;
            let (train, test) = split_per_class(&graphs, d.train_per_class);
            Ok(Dataset { train, test })
        }
        DataSource::File => {
            let path = required(d.path.as_deref(), "data.path")?;
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            let ds: Dataset =
                serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            for g in ds.train.iter().chain(&ds.test) {
                g.validate()?;
            }
            Ok(ds)
        }
        DataSource::Sbu => {
            let root = required(d.path.as_deref(), "data.path")?;
            let split_path = required(d.split.as_deref(), "data.split")?;
            let text = std::fs::read_to_string(split_path).map_err(|e| CliError::io(split_path, e))?;
            let split = parse_split(&text)?;
            let seqs = load_sbu_dir(root, &d.file_name, SkeletonLayout::SBU)?;
            let mut by_id: HashMap<&str, LabeledGraph> = HashMap::new();
            for s in &seqs {
                by_id.insert(s.id.as_str(), build_graph(s, g.chunks, g.topology, g.self_loops)?);
            }
            let mut pick = |ids: &[String]| {
                ids.iter()
                    .map(|id| {
                        by_id
                            .remove(id.as_str())
                            .ok_or_else(|| CliError::Data(format!("split lists unknown sequence {id:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()
            };
            let train = pick(&split.train)?;
            let test = pick(&split.test)?;
            Ok(Dataset { train, test })
        }
    }
}

fn required<'a>(p: Option<&'a Path>, key: &str) -> Result<&'a Path, CliError> {
    p.ok_or_else(|| CliError::Usage(format!("{key} is required for this data source")))
}
