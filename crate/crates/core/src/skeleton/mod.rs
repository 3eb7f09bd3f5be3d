//! Skeleton sequences to trajectory graphs.
//!
//! Each (person, joint) pair traces a 3-D trajectory through the frames of a
//! sequence. A trajectory is summarized by temporal chunking: the duration is
//! cut into `M` equal chunks and the per-chunk mean positions are
//! concatenated into a `3 M` descriptor. One graph node per trajectory.

mod normalize;
mod sbu;
mod synth;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use normalize::MinMaxNormalizer;
pub use sbu::{load_sbu_dir, parse_split, Split};
pub use synth::{nearest_centroid_accuracy, split_per_class, synth_dataset, synth_sequences};

use crate::error::{Error, Result};
use crate::graph::{adjacency_from_edges, LabeledGraph};
use crate::numcore::Matrix;

/// Default number of temporal chunks.
pub const DEFAULT_CHUNKS: usize = 8;

/// Persons and joints per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonLayout {
    pub persons: usize,
    pub joints: usize,
}

impl SkeletonLayout {
    /// Two persons with 15 Kinect joints each.
    pub const SBU: SkeletonLayout = SkeletonLayout {
        persons: 2,
        joints: 15,
    };

    pub fn values_per_frame(&self) -> usize {
        self.persons * self.joints * 3
    }

    pub fn nodes(&self) -> usize {
        self.persons * self.joints
    }
}

impl Default for SkeletonLayout {
    fn default() -> Self {
        Self::SBU
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    pub id: String,
    pub label: usize,
    pub layout: SkeletonLayout,
    /// One entry per frame: persons x joints x (x, y, z), person-major.
    pub frames: Vec<Vec<f64>>,
}

impl SkeletonSequence {
    pub fn new(id: String, label: usize, layout: SkeletonLayout, frames: Vec<Vec<f64>>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptySequence(id));
        }
        let want = layout.values_per_frame();
        for (t, f) in frames.iter().enumerate() {
            if f.len() != want {
                return Err(Error::BadRecord {
                    line: t + 1,
                    expected: want,
                    found: f.len(),
                });
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { what: "skeleton frame" });
            }
        }
        Ok(Self {
            id,
            label,
            layout,
            frames,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn coords(&self, frame: usize, person: usize, joint: usize) -> [f64; 3] {
        let o = (person * self.layout.joints + joint) * 3;
        let f = &self.frames[frame];
        [f[o], f[o + 1], f[o + 2]]
    }

    pub fn trajectory(&self, person: usize, joint: usize) -> Vec<[f64; 3]> {
        (0..self.num_frames())
            .map(|t| self.coords(t, person, joint))
            .collect()
    }
}

/// Parses one sequence: each non-empty line is a frame index followed by
/// `persons * joints * 3` comma-separated coordinates. Frames are ordered by
/// their index.
pub fn parse_sbu(text: &str, layout: SkeletonLayout, id: &str, label: usize) -> Result<SkeletonSequence> {
    let expected = 1 + layout.values_per_frame();
    let mut rows: Vec<(i64, Vec<f64>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != expected {
            return Err(Error::BadRecord {
                line: line_no,
                expected,
                found: fields.len(),
            });
        }
        let parse_err = |field: usize| Error::ParseError {
            line: line_no,
            field,
            text: fields[field].to_string(),
        };
        let index = fields[0]
            .parse::<i64>()
            .or_else(|_| {
                fields[0]
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.fract() == 0.0)
                    .map(|x| x as i64)
                    .ok_or(())
            })
            .map_err(|_| parse_err(0))?;
        let coords = fields[1..]
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(k + 1))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((index, coords));
    }
    rows.sort_by_key(|(idx, _)| *idx);
    SkeletonSequence::new(
        id.to_string(),
        label,
        layout,
        rows.into_iter().map(|(_, c)| c).collect(),
    )
}

/// Concatenated per-chunk mean positions of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkDescriptor(pub Vec<f64>);

impl ChunkDescriptor {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Frame `t` of `T` goes to chunk `floor(t M / T)`. Chunks left empty
/// (only possible when `T < M`) repeat the previous chunk's mean.
pub fn temporal_chunk(trajectory: &[[f64; 3]], m: usize) -> ChunkDescriptor {
    let t_len = trajectory.len();
    assert!(t_len >= 1 && m >= 1, "temporal_chunk needs T >= 1 and M >= 1");
    let mut sums = vec![[0.0f64; 3]; m];
    let mut counts = vec![0usize; m];
    for (t, p) in trajectory.iter().enumerate() {
        let c = t * m / t_len;
        for k in 0..3 {
            sums[c][k] += p[k];
        }
        counts[c] += 1;
    }
    let mut out = Vec::with_capacity(3 * m);
    let mut prev = [0.0; 3];
    for c in 0..m {
        // chunk 0 always holds frame 0
        if counts[c] > 0 {
            let n = counts[c] as f64;
            prev = [sums[c][0] / n, sums[c][1] / n, sums[c][2] / n];
        }
        out.extend_from_slice(&prev);
    }
    ChunkDescriptor(out)
}

/// Edges between trajectory nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Bone tree of the 15-joint Kinect skeleton within each person, plus one
    /// edge joining consecutive persons' torso joints.
    #[default]
    SkeletonTree,
    FullyConnected,
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skeleton_tree" | "tree" => Ok(Topology::SkeletonTree),
            "fully_connected" | "full" => Ok(Topology::FullyConnected),
            other => Err(Error::UnsupportedTopology(other.to_string())),
        }
    }
}

/// Joint order: head, neck, torso, left shoulder/elbow/hand, right
/// shoulder/elbow/hand, left hip/knee/foot, right hip/knee/foot.
pub const KINECT15_BONES: [(usize, usize); 14] = [
    (0, 1),
    (1, 2),
    (1, 3),
    (3, 4),
    (4, 5),
    (1, 6),
    (6, 7),
    (7, 8),
    (2, 9),
    (9, 10),
    (10, 11),
    (2, 12),
    (12, 13),
    (13, 14),
];
pub const KINECT15_TORSO: usize = 2;

/// Node-level edge list for `layout` under `topology`.
pub fn topology_edges(layout: SkeletonLayout, topology: Topology) -> Result<Vec<(usize, usize)>> {
    let n = layout.nodes();
    match topology {
        Topology::FullyConnected => Ok((0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect()),
        Topology::SkeletonTree => {
            if layout.joints != 15 {
                return Err(Error::UnsupportedTopology(format!(
                    "skeleton tree needs 15 joints, layout has {}",
                    layout.joints
                )));
            }
            let j = layout.joints;
            let mut edges = Vec::new();
            for p in 0..layout.persons {
                edges.extend(KINECT15_BONES.iter().map(|&(a, b)| (p * j + a, p * j + b)));
                if p > 0 {
                    edges.push(((p - 1) * j + KINECT15_TORSO, p * j + KINECT15_TORSO));
                }
            }
            Ok(edges)
        }
    }
}

/// One node per (person, joint) trajectory, signal = its chunk descriptor.
pub fn build_graph(seq: &SkeletonSequence, m: usize, topology: Topology, self_loops: bool) -> Result<LabeledGraph> {
    let layout = seq.layout;
    let n = layout.nodes();
    let mut rows = Vec::with_capacity(n);
    let mut names = Vec::with_capacity(n);
    for p in 0..layout.persons {
        for j in 0..layout.joints {
            rows.push(temporal_chunk(&seq.trajectory(p, j), m).0);
            names.push(format!("p{p}j{j}"));
        }
    }
    let signals = Matrix::from_rows(&rows)?;
    let adjacency = adjacency_from_edges(n, &topology_edges(layout, topology)?, self_loops)?;
    LabeledGraph::new(signals, adjacency, seq.label)?.with_node_names(names)
}
