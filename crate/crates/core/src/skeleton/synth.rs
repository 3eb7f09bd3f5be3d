//! Seeded two-person skeleton sequences with one smooth motion pattern per class.

use std::f64::consts::TAU;

use super::{build_graph, SkeletonLayout, SkeletonSequence, Topology, DEFAULT_CHUNKS};
use crate::error::Result;
use crate::graph::LabeledGraph;
use crate::numcore::Rng;
use crate::par::{self, Exec};

/// Rest pose of the 15-joint skeleton, metres, person facing +z.
const REST_POSE: [[f64; 3]; 15] = [
    [0.0, 1.70, 0.0],
    [0.0, 1.50, 0.0],
    [0.0, 1.20, 0.0],
    [-0.20, 1.45, 0.0],
    [-0.35, 1.20, 0.0],
    [-0.40, 0.95, 0.0],
    [0.20, 1.45, 0.0],
    [0.35, 1.20, 0.0],
    [0.40, 0.95, 0.0],
    [-0.10, 0.90, 0.0],
    [-0.10, 0.50, 0.0],
    [-0.10, 0.10, 0.0],
    [0.10, 0.90, 0.0],
    [0.10, 0.50, 0.0],
    [0.10, 0.10, 0.0],
];

const PERSON_GAP: f64 = 1.0;
const ACTIVE_JOINTS: usize = 16;
/// Largest whole-person displacement over a clip, metres, along x and z.
const DRIFT: f64 = 1.0;
const FRAME_NOISE: f64 = 0.02;

/// Motion pattern of one class: sinusoidal offsets on a few joints plus a
/// linear drift of each person in the ground plane.
struct ClassPattern {
    frequency: f64,
    /// (node, axis, amplitude, phase)
    waves: Vec<(usize, usize, f64, f64)>,
    /// Per person: (x, z) displacement over the whole clip.
    drift: [[f64; 2]; 2],
}

impl ClassPattern {
    fn sample(rng: &mut Rng, layout: SkeletonLayout) -> Self {
        let frequency = rng.uniform(0.5, 2.0);
        let waves = (0..ACTIVE_JOINTS)
            .map(|_| {
                (
                    rng.index(layout.nodes()),
                    rng.index(3),
                    rng.uniform(0.3, 0.6),
                    rng.uniform(0.0, TAU),
                )
            })
            .collect();
        let mut drift = [[0.0; 2]; 2];
        for d in drift.iter_mut().flatten() {
            *d = rng.uniform(-DRIFT, DRIFT);
        }
        Self {
            frequency,
            waves,
            drift,
        }
    }
}

/// `per_class` sequences for each of `classes` classes, class-major order.
pub fn synth_sequences(classes: usize, per_class: usize, seed: u64) -> Vec<SkeletonSequence> {
    assert!(classes >= 2, "synthetic datasets need at least two classes");
    let layout = SkeletonLayout::SBU;
    let patterns: Vec<ClassPattern> = (0..classes)
        .map(|c| ClassPattern::sample(&mut Rng::stream(seed, c as u64), layout))
        .collect();
    let mut out = Vec::with_capacity(classes * per_class);
    for (c, pattern) in patterns.iter().enumerate() {
        for s in 0..per_class {
            // stream ids above the class-pattern range
            let mut rng = Rng::stream(seed, ((c as u64 + 1) << 32) | s as u64);
            out.push(sample_sequence(&mut rng, pattern, layout, format!("synth/{c:02}/{s:04}"), c));
        }
    }
    out
}

fn sample_sequence(
    rng: &mut Rng,
    pattern: &ClassPattern,
    layout: SkeletonLayout,
    id: String,
    label: usize,
) -> SkeletonSequence {
    let frames_len = 30 + rng.index(61);
    let gain = rng.uniform(0.8, 1.2);
    let phase_jitter = rng.uniform(-0.3, 0.3);
    let offsets: Vec<[f64; 3]> = (0..layout.persons)
        .map(|_| [rng.normal(0.0, 0.05), rng.normal(0.0, 0.05), rng.normal(0.0, 0.05)])
        .collect();
    let mut frames = Vec::with_capacity(frames_len);
    for t in 0..frames_len {
        let tau = t as f64 / frames_len as f64;
        let mut frame = Vec::with_capacity(layout.values_per_frame());
        for (p, offset) in offsets.iter().enumerate() {
            let facing = if p % 2 == 0 { 1.0 } else { -1.0 };
            let base_x = (p as f64 - 0.5 * (layout.persons as f64 - 1.0)) * PERSON_GAP;
            for (j, rest) in REST_POSE.iter().enumerate() {
                let mut xyz = [
                    base_x + facing * rest[0] + offset[0] + pattern.drift[p % 2][0] * tau,
                    rest[1] + offset[1],
                    rest[2] + offset[2] + pattern.drift[p % 2][1] * tau,
                ];
                let node = p * layout.joints + j;
                for &(wn, axis, amp, phase) in &pattern.waves {
                    if wn == node {
                        xyz[axis] += gain * amp * (TAU * pattern.frequency * tau + phase + phase_jitter).sin();
                    }
                }
                for v in xyz {
                    frame.push(v + rng.normal(0.0, FRAME_NOISE));
                }
            }
        }
        frames.push(frame);
    }
    SkeletonSequence::new(id, label, layout, frames).expect("generated frames are well formed")
}

/// Trajectory graphs of [`synth_sequences`] with `M = 8` chunks, skeleton-tree
/// topology and self-loops.
pub fn synth_dataset(classes: usize, per_class: usize, seed: u64) -> Result<Vec<LabeledGraph>> {
    let seqs = synth_sequences(classes, per_class, seed);
    par::map_indexed(Exec::default(), seqs.len(), |i| {
        build_graph(&seqs[i], DEFAULT_CHUNKS, Topology::SkeletonTree, true)
    })
    .into_iter()
    .collect()
}

/// Splits class-ordered graphs into the first `train_per_class` graphs of
/// each class and the rest.
pub fn split_per_class(graphs: &[LabeledGraph], train_per_class: usize) -> (Vec<LabeledGraph>, Vec<LabeledGraph>) {
    let mut seen = std::collections::HashMap::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for g in graphs {
        let n = seen.entry(g.label()).or_insert(0usize);
        if *n < train_per_class {
            train.push(g.clone());
        } else {
            test.push(g.clone());
        }
        *n += 1;
    }
    (train, test)
}

/// Accuracy of a nearest-centroid classifier on flattened node signals.
pub fn nearest_centroid_accuracy(train: &[LabeledGraph], test: &[LabeledGraph]) -> f64 {
    let classes = train.iter().map(|g| g.label() + 1).max().unwrap_or(0);
    let dim = train.first().map_or(0, |g| g.signals().as_slice().len());
    let mut centroids = vec![vec![0.0; dim]; classes];
    let mut counts = vec![0usize; classes];
    for g in train {
        for (c, x) in centroids[g.label()].iter_mut().zip(g.signals().as_slice()) {
            *c += x;
        }
        counts[g.label()] += 1;
    }
    for (c, &n) in centroids.iter_mut().zip(&counts) {
        if n > 0 {
            c.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    let correct = test
        .iter()
        .filter(|g| {
            let x = g.signals().as_slice();
            let best = (0..classes)
                .filter(|&c| counts[c] > 0)
                .min_by(|&a, &b| {
                    crate::numcore::sq_dist(x, &centroids[a]).total_cmp(&crate::numcore::sq_dist(x, &centroids[b]))
                });
            best == Some(g.label())
        })
        .count();
    correct as f64 / test.len().max(1) as f64
}
