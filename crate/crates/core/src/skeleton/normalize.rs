use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LabeledGraph;
use crate::numcore::Matrix;

/// Per-dimension affine map onto `[0, 1]`, fitted on training node signals.
///
/// Values outside the training range are clipped, so every mapped signal is
/// a valid histogram-intersection input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxNormalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxNormalizer {
    pub fn fit(graphs: &[LabeledGraph]) -> Result<Self> {
        let first = graphs
            .first()
            .ok_or_else(|| Error::InvalidConfig("cannot fit normalization on no graphs".into()))?;
        let d = first.signal_dim();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for g in graphs {
            if g.signal_dim() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: g.signal_dim(),
                });
            }
            for row in g.signals().iter_rows() {
                for k in 0..d {
                    min[k] = min[k].min(row[k]);
                    max[k] = max[k].max(row[k]);
                }
            }
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn map_value(&self, k: usize, x: f64) -> f64 {
        let span = self.max[k] - self.min[k];
        if span <= 0.0 {
            // constant on the training split
            return 0.0;
        }
        ((x - self.min[k]) / span).clamp(0.0, 1.0)
    }

    pub fn apply(&self, g: &LabeledGraph) -> Result<LabeledGraph> {
        if g.signal_dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: g.signal_dim(),
            });
        }
        let s = g.signals();
        let mut out = Matrix::zeros(s.rows(), s.cols());
        for i in 0..s.rows() {
            for k in 0..s.cols() {
                out[(i, k)] = self.map_value(k, s[(i, k)]);
            }
        }
        g.with_signals(out)
    }

    pub fn apply_all(&self, graphs: &[LabeledGraph]) -> Result<Vec<LabeledGraph>> {
        graphs.iter().map(|g| self.apply(g)).collect()
    }
}
