//! Graph classifiers: the kernel-based convolution with learnable support
//! vectors, and the spatial baseline over kernel PCA features.
//!
//! Both networks have one convolutional block followed by node pooling and
//! a bias-free linear classifier. Parameters are exposed as one flat vector
//! so the optimizer, ablation masks and checkpoints treat both kinds alike.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{hop_adjacency, LabeledGraph};
use crate::kernels::{accumulate_grad_v, kernel_eval, KernelSpec};
use crate::kpca::{project_graph, KpcaProjector};
use crate::numcore::{softmax, softmax_cross_entropy, Matrix, Rng};

pub mod check;

pub const DEFAULT_FILTERS: usize = 5;
pub const DEFAULT_FILTER_SIZE: usize = 4;
pub const DEFAULT_HOPS: usize = 1;

/// Node pooling ahead of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pool {
    #[default]
    Mean,
    Max,
}

impl fmt::Display for Pool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pool::Mean => "mean",
            Pool::Max => "max",
        })
    }
}

impl FromStr for Pool {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Pool::Mean),
            "max" => Ok(Pool::Max),
            _ => Err(Error::InvalidConfig(format!("unknown pooling {s:?} (mean|max)"))),
        }
    }
}

/// Which parameter groups train during an ablation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum AblationMode {
    /// Fixed support vectors, learned mixing weights.
    #[serde(rename = "FSV_LA")]
    FsvLa,
    /// Learned support vectors, fixed mixing weights.
    #[serde(rename = "LSV_FA")]
    LsvFa,
    #[default]
    #[serde(rename = "LSV_LA")]
    LsvLa,
}

impl AblationMode {
    pub const ALL: [AblationMode; 3] = [AblationMode::FsvLa, AblationMode::LsvFa, AblationMode::LsvLa];

    pub fn name(self) -> &'static str {
        match self {
            AblationMode::FsvLa => "FSV_LA",
            AblationMode::LsvFa => "LSV_FA",
            AblationMode::LsvLa => "LSV_LA",
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown ablation mode {s:?}")))
    }
}

/// `K` filters of `N` support vectors each, with their mixing weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    filters: usize,
    size: usize,
    dim: usize,
    /// `K x N x D`, filter-major.
    support: Vec<f64>,
    /// `K x N`.
    alphas: Vec<f64>,
}

impl FilterBank {
    pub fn new(filters: usize, size: usize, dim: usize, support: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        if filters == 0 || size == 0 || dim == 0 {
            return Err(Error::InvalidConfig("filter bank needs K, N, D >= 1".into()));
        }
        if support.len() != filters * size * dim || alphas.len() != filters * size {
            return Err(Error::ShapeMismatch(format!(
                "filter bank {filters}x{size}x{dim}: got {} support values and {} alphas",
                support.len(),
                alphas.len()
            )));
        }
        if support.iter().chain(&alphas).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "filter bank" });
        }
        Ok(Self {
            filters,
            size,
            dim,
            support,
            alphas,
        })
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_vector(&self, filter: usize, i: usize) -> &[f64] {
        let start = (filter * self.size + i) * self.dim;
        &self.support[start..start + self.dim]
    }

    pub fn alpha(&self, filter: usize, i: usize) -> f64 {
        self.alphas[filter * self.size + i]
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgcnModel {
    pub spec: KernelSpec,
    pub bank: FilterBank,
    /// `C x K`, no bias.
    pub classifier: Matrix,
    pub hops: usize,
    #[serde(default)]
    pub pool: Pool,
}

impl KgcnModel {
    pub fn new(spec: KernelSpec, bank: FilterBank, classifier: Matrix, hops: usize, pool: Pool) -> Result<Self> {
        spec.validate()?;
        check_classifier(&classifier, bank.filters())?;
        if hops == 0 {
            return Err(Error::BadHop(0));
        }
        Ok(Self {
            spec,
            bank,
            classifier,
            hops,
            pool,
        })
    }

    /// Random initialization: support vectors drawn from the rows of
    /// `node_signals`, `alpha ~ Normal(0, 1/N)` rescaled per filter so the
    /// filter responds positively with unit mean magnitude on
    /// `node_signals`, classifier uniform in `+-sqrt(6 / (K + C))`.
    #[allow(clippy::too_many_arguments)]
    pub fn init(
        spec: KernelSpec,
        filters: usize,
        size: usize,
        classes: usize,
        hops: usize,
        pool: Pool,
        node_signals: &Matrix,
        rng: &mut Rng,
    ) -> Result<Self> {
        if node_signals.rows() == 0 {
            return Err(Error::InvalidConfig("no node signals to draw support vectors from".into()));
        }
        let dim = node_signals.cols();
        let mut support = Vec::with_capacity(filters * size * dim);
        for _ in 0..filters * size {
            support.extend_from_slice(node_signals.row(rng.index(node_signals.rows())));
        }
        let std = (1.0 / size as f64).sqrt();
        let alphas = (0..filters * size).map(|_| rng.normal(0.0, std)).collect();
        let bank = FilterBank::new(filters, size, dim, support, alphas)?;
        let classifier = glorot(rng, classes, filters)?;
        let mut model = Self::new(spec, bank, classifier, hops, pool)?;
        model.calibrate_filters(node_signals)?;
        Ok(model)
    }

    /// Rescales every filter's mixing weights so that its inner sum has
    /// mean magnitude one over `nodes`, flipping the sign when the mean is
    /// negative.
    fn calibrate_filters(&mut self, nodes: &Matrix) -> Result<()> {
        let b = &mut self.bank;
        for t in 0..b.filters {
            let (mut signed, mut magnitude) = (0.0, 0.0);
            for x in nodes.iter_rows() {
                let mut inner = 0.0;
                for i in 0..b.size {
                    let start = (t * b.size + i) * b.dim;
                    inner += b.alphas[t * b.size + i] * kernel_eval(&self.spec, x, &b.support[start..start + b.dim])?;
                }
                signed += inner;
                magnitude += inner.abs();
            }
            let n = nodes.rows().max(1) as f64;
            let scale = if magnitude > 0.0 { n / magnitude } else { 1.0 };
            let scale = if signed < 0.0 { -scale } else { scale };
            b.alphas[t * b.size..(t + 1) * b.size].iter_mut().for_each(|a| *a *= scale);
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classifier.rows()
    }

    pub fn param_count(&self) -> usize {
        let b = &self.bank;
        (b.dim + 1) * b.size * b.filters + self.classifier.rows() * b.filters
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgcnModel {
    /// `K x H`.
    pub weights: Matrix,
    /// `C x K`, no bias.
    pub classifier: Matrix,
    pub hops: usize,
    #[serde(default)]
    pub pool: Pool,
    /// Fixed feature map producing the `H`-dimensional node features.
    pub projector: KpcaProjector,
}

impl SgcnModel {
    pub fn new(weights: Matrix, classifier: Matrix, hops: usize, pool: Pool, projector: KpcaProjector) -> Result<Self> {
        check_classifier(&classifier, weights.rows())?;
        if weights.cols() != projector.dims() {
            return Err(Error::DimMismatch {
                expected: projector.dims(),
                got: weights.cols(),
            });
        }
        if hops == 0 {
            return Err(Error::BadHop(0));
        }
        Ok(Self {
            weights,
            classifier,
            hops,
            pool,
            projector,
        })
    }

    /// Uniform `+-sqrt(6 / (fan_in + fan_out))` for both weight matrices.
    pub fn init(filters: usize, classes: usize, hops: usize, pool: Pool, projector: KpcaProjector, rng: &mut Rng) -> Result<Self> {
        let weights = glorot(rng, filters, projector.dims())?;
        let classifier = glorot(rng, classes, filters)?;
        Self::new(weights, classifier, hops, pool, projector)
    }

    pub fn classes(&self) -> usize {
        self.classifier.rows()
    }

    pub fn param_count(&self) -> usize {
        let (k, h) = self.weights.shape();
        h * k + self.classifier.rows() * k
    }
}

fn check_classifier(classifier: &Matrix, filters: usize) -> Result<()> {
    if classifier.cols() != filters {
        return Err(Error::ShapeMismatch(format!(
            "classifier has {} columns for {filters} filters",
            classifier.cols()
        )));
    }
    if classifier.rows() < 2 {
        return Err(Error::InvalidConfig("need at least two classes".into()));
    }
    Ok(())
}

fn glorot(rng: &mut Rng, rows: usize, cols: usize) -> Result<Matrix> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::new(rows, cols, rng.uniform_vec(rows * cols, -bound, bound))
}

/// Either network, tagged by kind when serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Kgcn(KgcnModel),
    Sgcn(SgcnModel),
}

/// A graph ready for the network: node inputs and the `r`-hop operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    /// Node signals (KGCN) or their KPCA coordinates (SGCN).
    pub x: Matrix,
    pub hop_adj: Matrix,
    pub label: usize,
}

/// Pooled features and logits of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// `n x K` convolution output before the ReLU.
    pub pre: Matrix,
    pub pooled: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Gradients of the cross-entropy loss for a KGCN, grouped like its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct KgcnGrads {
    pub support: Vec<f64>,
    pub alphas: Vec<f64>,
    pub classifier: Matrix,
}

impl Model {
    pub fn classes(&self) -> usize {
        match self {
            Model::Kgcn(m) => m.classes(),
            Model::Sgcn(m) => m.classes(),
        }
    }

    pub fn hops(&self) -> usize {
        match self {
            Model::Kgcn(m) => m.hops,
            Model::Sgcn(m) => m.hops,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::Kgcn(m) => m.param_count(),
            Model::Sgcn(m) => m.param_count(),
        }
    }

    /// Raw node-signal dimension the model accepts.
    pub fn input_dim(&self) -> usize {
        match self {
            Model::Kgcn(m) => m.bank.dim,
            Model::Sgcn(m) => m.projector.input_dim(),
        }
    }

    /// All learnable parameters. KGCN order: support, alphas, classifier;
    /// SGCN order: weights, classifier.
    pub fn params(&self) -> Vec<f64> {
        match self {
            Model::Kgcn(m) => [&m.bank.support[..], &m.bank.alphas, m.classifier.as_slice()].concat(),
            Model::Sgcn(m) => [m.weights.as_slice(), m.classifier.as_slice()].concat(),
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for a model with {}",
                params.len(),
                self.param_count()
            )));
        }
        if params.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "parameters" });
        }
        match self {
            Model::Kgcn(m) => {
                let (s, rest) = params.split_at(m.bank.support.len());
                let (a, c) = rest.split_at(m.bank.alphas.len());
                m.bank.support.copy_from_slice(s);
                m.bank.alphas.copy_from_slice(a);
                m.classifier.as_mut_slice().copy_from_slice(c);
            }
            Model::Sgcn(m) => {
                let (w, c) = params.split_at(m.weights.as_slice().len());
                m.weights.as_mut_slice().copy_from_slice(w);
                m.classifier.as_mut_slice().copy_from_slice(c);
            }
        }
        Ok(())
    }

    /// Pulls parameters back into the kernel's domain after an update:
    /// histogram-intersection support vectors are clipped to `[0, 1]`.
    pub fn project(&mut self) {
        if let Model::Kgcn(m) = self {
            if m.spec.requires_unit_range() {
                m.bank.support.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
            }
        }
    }

    pub fn prepare(&self, g: &LabeledGraph) -> Result<Prepared> {
        if g.signal_dim() != self.input_dim() {
            return Err(Error::DimMismatch {
                expected: self.input_dim(),
                got: g.signal_dim(),
            });
        }
        let x = match self {
            Model::Kgcn(_) => g.signals().clone(),
            Model::Sgcn(m) => project_graph(&m.projector, g)?,
        };
        Ok(Prepared {
            x,
            hop_adj: hop_adjacency(g.adjacency(), self.hops())?,
            label: g.label(),
        })
    }

    pub fn forward(&self, p: &Prepared) -> Result<Forward> {
        let pre = match self {
            Model::Kgcn(m) => kgcn_pre(m, &p.x, &p.hop_adj)?.1,
            Model::Sgcn(m) => sgcn_pre(m, &p.x, &p.hop_adj)?.1,
        };
        let classifier = match self {
            Model::Kgcn(m) => &m.classifier,
            Model::Sgcn(m) => &m.classifier,
        };
        let pool = match self {
            Model::Kgcn(m) => m.pool,
            Model::Sgcn(m) => m.pool,
        };
        let (pooled, _) = pool_relu(&pre, pool);
        let logits = classifier.matvec(&pooled)?;
        Ok(Forward { pre, pooled, logits })
    }

    pub fn logits(&self, p: &Prepared) -> Result<Vec<f64>> {
        Ok(self.forward(p)?.logits)
    }

    /// Cross-entropy loss on `p.label`, its gradient in [`Model::params`]
    /// order, and the logits.
    pub fn loss_grad(&self, p: &Prepared) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        match self {
            Model::Kgcn(m) => {
                let (kvals, pre) = kgcn_pre(m, &p.x, &p.hop_adj)?;
                let (loss, dpre, dcls, logits) = head_backward(&pre, &m.classifier, m.pool, p.label)?;
                let dinner = p.hop_adj.transpose().matmul(&dpre)?;
                let b = &m.bank;
                let mut dsupport = vec![0.0; b.support.len()];
                let mut dalphas = vec![0.0; b.alphas.len()];
                let inv_n = 1.0 / b.size as f64;
                for u in 0..p.x.rows() {
                    let xu = p.x.row(u);
                    for t in 0..b.filters {
                        let g = dinner[(u, t)] * inv_n;
                        if g == 0.0 {
                            continue;
                        }
                        for i in 0..b.size {
                            let idx = t * b.size + i;
                            dalphas[idx] += g * kvals[(u * b.filters + t) * b.size + i];
                            let start = idx * b.dim;
                            accumulate_grad_v(
                                &m.spec,
                                xu,
                                &b.support[start..start + b.dim],
                                g * b.alphas[idx],
                                &mut dsupport[start..start + b.dim],
                            );
                        }
                    }
                }
                Ok((loss, [dsupport, dalphas, dcls.into_vec()].concat(), logits))
            }
            Model::Sgcn(m) => {
                let (agg, pre) = sgcn_pre(m, &p.x, &p.hop_adj)?;
                let (loss, dpre, dcls, logits) = head_backward(&pre, &m.classifier, m.pool, p.label)?;
                let dw = dpre.transpose().matmul(&agg)?;
                Ok((loss, [dw.into_vec(), dcls.into_vec()].concat(), logits))
            }
        }
    }
}

/// Kernel values `k(x_u, v_i^t)` (flat `n x K x N`) and the pre-activation
/// `A^r * inner`, where `inner[u, t] = (1/N) sum_i alpha_i^t k(x_u, v_i^t)`.
fn kgcn_pre(m: &KgcnModel, x: &Matrix, hop_adj: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let b = &m.bank;
    if x.cols() != b.dim {
        return Err(Error::DimMismatch {
            expected: b.dim,
            got: x.cols(),
        });
    }
    let n = x.rows();
    let mut kvals = Vec::with_capacity(n * b.filters * b.size);
    let mut inner = Matrix::zeros(n, b.filters);
    for u in 0..n {
        for t in 0..b.filters {
            let mut s = 0.0;
            for i in 0..b.size {
                let k = kernel_eval(&m.spec, x.row(u), b.support_vector(t, i))?;
                kvals.push(k);
                s += b.alpha(t, i) * k;
            }
            inner[(u, t)] = s / b.size as f64;
        }
    }
    Ok((kvals, hop_adj.matmul(&inner)?))
}

/// `A^r * X` and the pre-activation `(A^r * X) * W^T`.
fn sgcn_pre(m: &SgcnModel, x: &Matrix, hop_adj: &Matrix) -> Result<(Matrix, Matrix)> {
    if x.cols() != m.weights.cols() {
        return Err(Error::DimMismatch {
            expected: m.weights.cols(),
            got: x.cols(),
        });
    }
    let agg = hop_adj.matmul(x)?;
    let pre = agg.matmul(&m.weights.transpose())?;
    Ok((agg, pre))
}

/// ReLU then pooling over nodes; also returns, per filter, the node that
/// max pooling picked (first on ties).
fn pool_relu(pre: &Matrix, pool: Pool) -> (Vec<f64>, Vec<usize>) {
    let (n, k) = pre.shape();
    let mut pooled = vec![0.0; k];
    let mut arg = vec![0; k];
    for t in 0..k {
        match pool {
            Pool::Mean => pooled[t] = (0..n).map(|u| pre[(u, t)].max(0.0)).sum::<f64>() / n as f64,
            Pool::Max => {
                let mut best = f64::NEG_INFINITY;
                for u in 0..n {
                    let v = pre[(u, t)].max(0.0);
                    if v > best {
                        best = v;
                        arg[t] = u;
                    }
                }
                pooled[t] = best;
            }
        }
    }
    (pooled, arg)
}

/// Loss, gradient in the pre-activation, classifier gradient and logits.
fn head_backward(pre: &Matrix, classifier: &Matrix, pool: Pool, label: usize) -> Result<(f64, Matrix, Matrix, Vec<f64>)> {
    let (pooled, arg) = pool_relu(pre, pool);
    let logits = classifier.matvec(&pooled)?;
    let (loss, mut dlogits) = softmax_cross_entropy(&logits, label)?;
    dlogits[label] -= 1.0;
    let (c, k) = classifier.shape();
    let mut dcls = Matrix::zeros(c, k);
    for j in 0..c {
        for t in 0..k {
            dcls[(j, t)] = dlogits[j] * pooled[t];
        }
    }
    let dpooled = classifier.transpose().matvec(&dlogits)?;
    let n = pre.rows();
    let mut dpre = Matrix::zeros(n, k);
    for t in 0..k {
        for u in 0..n {
            // ReLU subgradient 0 at 0
            if pre[(u, t)] <= 0.0 {
                continue;
            }
            dpre[(u, t)] = match pool {
                Pool::Mean => dpooled[t] / n as f64,
                Pool::Max if arg[t] == u => dpooled[t],
                Pool::Max => 0.0,
            };
        }
    }
    Ok((loss, dpre, dcls, logits))
}

/// Node features `ReLU(A^r * inner)` of the kernel convolution.
pub fn kgcn_conv(g: &LabeledGraph, m: &KgcnModel) -> Result<Matrix> {
    let ar = hop_adjacency(g.adjacency(), m.hops)?;
    Ok(kgcn_pre(m, g.signals(), &ar)?.1.map(|x| x.max(0.0)))
}

/// The pre-activation of [`kgcn_conv`] computed as
/// `(1/N) sum_{u'} exp(ln A^r[u,u'] + ln sum_i alpha_i k(x_u', v_i))` over the
/// nonzero entries of `A^r`.
pub fn kgcn_conv_logexp(g: &LabeledGraph, m: &KgcnModel) -> Result<Matrix> {
    let ar = hop_adjacency(g.adjacency(), m.hops)?;
    let x = g.signals();
    let b = &m.bank;
    if x.cols() != b.dim {
        return Err(Error::DimMismatch {
            expected: b.dim,
            got: x.cols(),
        });
    }
    let n = x.rows();
    let mut log_inner = Matrix::zeros(n, b.filters);
    for u in 0..n {
        for t in 0..b.filters {
            let mut s = 0.0;
            for i in 0..b.size {
                s += b.alpha(t, i) * kernel_eval(&m.spec, x.row(u), b.support_vector(t, i))?;
            }
            log_inner[(u, t)] = if s > 0.0 { s.ln() } else { f64::NAN };
            if (s.is_nan() || s <= 0.0) && (0..n).any(|v| ar[(v, u)] > 0.0) {
                return Err(Error::LogDomainViolation {
                    node: u,
                    filter: t,
                    value: s,
                });
            }
        }
    }
    let mut out = Matrix::zeros(n, b.filters);
    for u in 0..n {
        for t in 0..b.filters {
            let mut acc = 0.0;
            for v in 0..n {
                let a = ar[(u, v)];
                if a > 0.0 {
                    acc += (a.ln() + log_inner[(v, t)]).exp();
                }
            }
            out[(u, t)] = acc / b.size as f64;
        }
    }
    Ok(out)
}

/// Node features `ReLU((A^r * features) * W^T)` of the spatial baseline.
pub fn sgcn_conv(features: &Matrix, adjacency: &Matrix, m: &SgcnModel) -> Result<Matrix> {
    if features.rows() != adjacency.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows for {} nodes",
            features.rows(),
            adjacency.rows()
        )));
    }
    let ar = hop_adjacency(adjacency, m.hops)?;
    Ok(sgcn_pre(m, features, &ar)?.1.map(|x| x.max(0.0)))
}

/// Logits and class probabilities for one graph.
pub fn readout_forward(g: &LabeledGraph, m: &Model) -> Result<(Vec<f64>, Vec<f64>)> {
    let logits = m.logits(&m.prepare(g)?)?;
    let probs = softmax(&logits)?;
    Ok((logits, probs))
}

pub fn param_count(m: &Model) -> usize {
    m.param_count()
}

/// Loss gradients of a KGCN on one graph with the given label.
pub fn backward(g: &LabeledGraph, m: &KgcnModel, label: usize) -> Result<KgcnGrads> {
    let model = Model::Kgcn(m.clone());
    let mut p = model.prepare(g)?;
    p.label = label;
    let (_, grad, _) = model.loss_grad(&p)?;
    let (s, rest) = grad.split_at(m.bank.support.len());
    let (a, c) = rest.split_at(m.bank.alphas.len());
    Ok(KgcnGrads {
        support: s.to_vec(),
        alphas: a.to_vec(),
        classifier: Matrix::new(m.classifier.rows(), m.classifier.cols(), c.to_vec())?,
    })
}

/// Trainable flags aligned with [`Model::params`]. The classifier, and every
/// SGCN parameter, always trains.
pub fn ablation_mask(m: &Model, mode: AblationMode) -> Vec<bool> {
    match m {
        Model::Kgcn(k) => {
            let s = k.bank.support.len();
            let a = k.bank.alphas.len();
            let c = k.classifier.as_slice().len();
            let mut mask = Vec::with_capacity(s + a + c);
            mask.extend(std::iter::repeat_n(mode != AblationMode::FsvLa, s));
            mask.extend(std::iter::repeat_n(mode != AblationMode::LsvFa, a));
            mask.extend(std::iter::repeat_n(true, c));
            mask
        }
        Model::Sgcn(_) => vec![true; m.param_count()],
    }
}
