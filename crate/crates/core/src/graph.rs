//! Labeled graphs with row-stochastic adjacency.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

const ROW_SUM_TOL: f64 = 1e-10;

/// Node signals, row-stochastic adjacency and a class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledGraph {
    signals: Matrix,
    adjacency: Matrix,
    label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_names: Option<Vec<String>>,
}

impl LabeledGraph {
    pub fn new(signals: Matrix, adjacency: Matrix, label: usize) -> Result<Self> {
        check_stochastic(&adjacency)?;
        if signals.rows() != adjacency.rows() {
            return Err(Error::InvalidGraph(format!(
                "{} signal rows for {} nodes",
                signals.rows(),
                adjacency.rows()
            )));
        }
        if signals.rows() == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        Ok(Self {
            signals,
            adjacency,
            label,
            node_names: None,
        })
    }

    pub fn with_node_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_nodes() {
            return Err(Error::InvalidGraph(format!(
                "{} names for {} nodes",
                names.len(),
                self.num_nodes()
            )));
        }
        self.node_names = Some(names);
        Ok(self)
    }

    /// Re-checks the invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        check_stochastic(&self.adjacency)?;
        if self.signals.rows() != self.adjacency.rows() || self.signals.rows() == 0 {
            return Err(Error::InvalidGraph("signal rows do not match node count".into()));
        }
        self.signals.check_finite("signals")
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn signal_dim(&self) -> usize {
        self.signals.cols()
    }

    pub fn signals(&self) -> &Matrix {
        &self.signals
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    /// Same topology and label with different node signals.
    pub fn with_signals(&self, signals: Matrix) -> Result<Self> {
        if signals.rows() != self.num_nodes() {
            return Err(Error::InvalidGraph(format!(
                "{} signal rows for {} nodes",
                signals.rows(),
                self.num_nodes()
            )));
        }
        Ok(Self {
            signals,
            ..self.clone()
        })
    }
}

fn check_stochastic(a: &Matrix) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::InvalidGraph(format!(
            "adjacency is {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.as_slice().iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidGraph("negative adjacency entry".into()));
    }
    for (i, s) in a.row_sums().into_iter().enumerate() {
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidGraph(format!("adjacency row {i} sums to {s}")));
        }
    }
    Ok(())
}

/// Divides each row by its sum.
pub fn row_normalize(w: &Matrix) -> Result<Matrix> {
    if w.rows() != w.cols() {
        return Err(Error::InvalidGraph(format!("{}x{} weights", w.rows(), w.cols())));
    }
    if w.as_slice().iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidGraph("negative edge weight".into()));
    }
    let mut out = w.clone();
    for i in 0..w.rows() {
        let s: f64 = w.row(i).iter().sum();
        if s <= 0.0 {
            return Err(Error::IsolatedNode { row: i });
        }
        for x in out.row_mut(i) {
            *x /= s;
        }
    }
    Ok(out)
}

/// Unweighted adjacency from an undirected edge list, optionally with
/// self-loops, then row-normalized.
pub fn adjacency_from_edges(n: usize, edges: &[(usize, usize)], self_loops: bool) -> Result<Matrix> {
    let mut w = Matrix::zeros(n, n);
    for &(a, b) in edges {
        for node in [a, b] {
            if node >= n {
                return Err(Error::BadNode { node, nodes: n });
            }
        }
        w[(a, b)] = 1.0;
        w[(b, a)] = 1.0;
    }
    if self_loops {
        for i in 0..n {
            w[(i, i)] = 1.0;
        }
    }
    row_normalize(&w)
}

/// The `r`-th matrix power of `a`.
pub fn hop_adjacency(a: &Matrix, r: usize) -> Result<Matrix> {
    if r < 1 {
        return Err(Error::BadHop(r));
    }
    let mut out = a.clone();
    for _ in 1..r {
        out = out.matmul(a)?;
    }
    Ok(out)
}

/// Nodes `u'` with `(A^r)[u, u'] > 0`.
pub fn neighborhood(a: &Matrix, u: usize, r: usize) -> Result<BTreeSet<usize>> {
    if u >= a.rows() {
        return Err(Error::BadNode {
            node: u,
            nodes: a.rows(),
        });
    }
    let ar = hop_adjacency(a, r)?;
    Ok(ar
        .row(u)
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(j, _)| j)
        .collect())
}

/// Reindexes nodes so that new node `i` is old node `pi[i]`.
pub fn permute(g: &LabeledGraph, pi: &[usize]) -> Result<LabeledGraph> {
    let n = g.num_nodes();
    if !is_permutation(pi, n) {
        return Err(Error::BadPermutation(n));
    }
    let d = g.signal_dim();
    let mut signals = Matrix::zeros(n, d);
    let mut adjacency = Matrix::zeros(n, n);
    for (i, &pi_i) in pi.iter().enumerate() {
        signals.row_mut(i).copy_from_slice(g.signals.row(pi_i));
        for (j, &pi_j) in pi.iter().enumerate() {
            adjacency[(i, j)] = g.adjacency[(pi_i, pi_j)];
        }
    }
    let node_names = g
        .node_names
        .as_ref()
        .map(|names| pi.iter().map(|&p| names[p].clone()).collect());
    Ok(LabeledGraph {
        signals,
        adjacency,
        label: g.label,
        node_names,
    })
}

pub fn inverse_permutation(pi: &[usize]) -> Result<Vec<usize>> {
    if !is_permutation(pi, pi.len()) {
        return Err(Error::BadPermutation(pi.len()));
    }
    let mut inv = vec![0; pi.len()];
    for (i, &p) in pi.iter().enumerate() {
        inv[p] = i;
    }
    Ok(inv)
}

fn is_permutation(pi: &[usize], n: usize) -> bool {
    if pi.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    pi.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true))
}
