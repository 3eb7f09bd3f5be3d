//! The kernel catalog.
//!
//! Every kernel has a closed form ([`kernel_eval`]), analytic derivatives in
//! both arguments ([`kernel_grads`]) and a decomposition into four scalar
//! activations ([`sigma_quad`]) such that
//! `k(u, v) = s3(sum_d s2(s1(u_d) * s4(v_d)))`, evaluated by
//! [`kernel_eval_neural`]. The closed form is what the model uses; the
//! decomposition is kept as an independently tested realization.
//!
//! Histogram intersection only admits the decomposition approximately; the
//! gap shrinks like `D ln 2 / beta`.

mod activation;
pub mod check;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use activation::{Activation, SigmaQuad};

use crate::error::{Error, Result};
use crate::numcore::{dot, sq_dist, Matrix};
use crate::par::{self, Exec};
use activation::{half_pow, logistic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Sigmoid,
    Tanh,
    Gaussian,
    Laplacian,
    Power,
    InverseMultiquadric,
    Log,
    Cauchy,
    HistogramIntersection,
}

impl KernelKind {
    pub const ALL: [KernelKind; 11] = [
        KernelKind::Linear,
        KernelKind::Polynomial,
        KernelKind::Sigmoid,
        KernelKind::Tanh,
        KernelKind::Gaussian,
        KernelKind::Laplacian,
        KernelKind::Power,
        KernelKind::InverseMultiquadric,
        KernelKind::Log,
        KernelKind::Cauchy,
        KernelKind::HistogramIntersection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Sigmoid => "sigmoid",
            KernelKind::Tanh => "tanh",
            KernelKind::Gaussian => "gaussian",
            KernelKind::Laplacian => "laplacian",
            KernelKind::Power => "power",
            KernelKind::InverseMultiquadric => "inverse_multiquadric",
            KernelKind::Log => "log",
            KernelKind::Cauchy => "cauchy",
            KernelKind::HistogramIntersection => "histogram_intersection",
        }
    }

    /// Kernels that depend on `u` and `v` only through `||u - v||^2`.
    pub fn is_distance_based(self) -> bool {
        matches!(
            self,
            KernelKind::Gaussian
                | KernelKind::Laplacian
                | KernelKind::Power
                | KernelKind::InverseMultiquadric
                | KernelKind::Log
                | KernelKind::Cauchy
        )
    }

    /// Whether the four-activation form reproduces the closed form exactly.
    pub fn is_exactly_neural(self) -> bool {
        self != KernelKind::HistogramIntersection
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        let kind = match norm.as_str() {
            "imq" => KernelKind::InverseMultiquadric,
            "hi" => KernelKind::HistogramIntersection,
            "poly" => KernelKind::Polynomial,
            other => *KernelKind::ALL
                .iter()
                .find(|k| k.name() == other)
                .ok_or_else(|| Error::InvalidKernel(format!("unknown kernel kind {s:?}")))?,
        };
        Ok(kind)
    }
}

/// A kernel family with its hyperparameters. Only the fields relevant to
/// `kind` are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Sharpness for Gaussian, Laplacian, Sigmoid and histogram intersection.
    pub beta: f64,
    /// Degree for Polynomial, Power and Log.
    pub p: u32,
    /// Tanh slope.
    pub a: f64,
    /// Tanh offset, or the inverse multiquadric offset.
    pub b: f64,
    /// Cauchy scale.
    pub sigma2: f64,
}

impl KernelSpec {
    /// The kind with its default hyperparameters.
    pub fn new(kind: KernelKind) -> Self {
        let beta = if kind == KernelKind::HistogramIntersection {
            50.0
        } else {
            1.0
        };
        let b = if kind == KernelKind::InverseMultiquadric {
            1.0
        } else {
            0.0
        };
        Self {
            kind,
            beta,
            p: 2,
            a: 1.0,
            b,
            sigma2: 1.0,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_p(mut self, p: u32) -> Self {
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidKernel(msg));
        match self.kind {
            KernelKind::Gaussian
            | KernelKind::Laplacian
            | KernelKind::Sigmoid
            | KernelKind::HistogramIntersection
                if !(self.beta > 0.0 && self.beta.is_finite()) =>
            {
                bad(format!("{}: beta must be > 0, got {}", self.kind, self.beta))
            }
            KernelKind::Polynomial | KernelKind::Power | KernelKind::Log if self.p < 1 => {
                bad(format!("{}: p must be >= 1", self.kind))
            }
            KernelKind::Tanh if !(self.a.is_finite() && self.b.is_finite()) => {
                bad("tanh: a and b must be finite".into())
            }
            KernelKind::InverseMultiquadric if !(self.b != 0.0 && self.b.is_finite()) => {
                bad("inverse_multiquadric: b must be non-zero".into())
            }
            KernelKind::Cauchy if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) => {
                bad(format!("cauchy: sigma2 must be > 0, got {}", self.sigma2))
            }
            _ => Ok(()),
        }
    }

    pub fn requires_unit_range(&self) -> bool {
        self.kind == KernelKind::HistogramIntersection
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::new(KernelKind::Gaussian)
    }
}

fn check_args(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if spec.requires_unit_range() {
        if let Some(&value) = u.iter().chain(v).find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::RangeViolation { value });
        }
    }
    Ok(())
}

/// Closed-form value of a distance kernel at squared distance `r2`.
fn distance_profile(spec: &KernelSpec, r2: f64) -> f64 {
    match spec.kind {
        KernelKind::Gaussian => (-spec.beta * r2).exp(),
        KernelKind::Laplacian => (-spec.beta * r2.sqrt()).exp(),
        KernelKind::Power => -half_pow(r2, spec.p),
        KernelKind::InverseMultiquadric => 1.0 / (r2 + spec.b * spec.b).sqrt(),
        KernelKind::Log => -(half_pow(r2, spec.p) + 1.0).ln(),
        KernelKind::Cauchy => 1.0 / (1.0 + r2 / spec.sigma2),
        _ => unreachable!("not a distance kernel"),
    }
}

/// Derivative of [`distance_profile`] with respect to `r2`; zero at `r2 = 0`
/// wherever the profile is not differentiable there.
fn distance_profile_deriv(spec: &KernelSpec, r2: f64) -> f64 {
    match spec.kind {
        KernelKind::Gaussian => -spec.beta * (-spec.beta * r2).exp(),
        KernelKind::Laplacian => {
            if r2 == 0.0 {
                0.0
            } else {
                let r = r2.sqrt();
                -spec.beta * (-spec.beta * r).exp() / (2.0 * r)
            }
        }
        KernelKind::Power => {
            if r2 == 0.0 {
                0.0
            } else {
                -(spec.p as f64 / 2.0) * (r2.sqrt()).powi(spec.p as i32 - 2)
            }
        }
        KernelKind::InverseMultiquadric => -0.5 * (r2 + spec.b * spec.b).powf(-1.5),
        KernelKind::Log => {
            if r2 == 0.0 {
                0.0
            } else {
                let hp = half_pow(r2, spec.p);
                -(spec.p as f64 / 2.0) * (r2.sqrt()).powi(spec.p as i32 - 2) / (hp + 1.0)
            }
        }
        KernelKind::Cauchy => {
            let k = 1.0 / (1.0 + r2 / spec.sigma2);
            -k * k / spec.sigma2
        }
        _ => unreachable!("not a distance kernel"),
    }
}

#[inline]
fn kernel_value_unchecked(spec: &KernelSpec, u: &[f64], v: &[f64]) -> f64 {
    match spec.kind {
        KernelKind::Linear => dot(u, v),
        KernelKind::Polynomial => dot(u, v).powi(spec.p as i32),
        KernelKind::Sigmoid => logistic(spec.beta * dot(u, v)),
        KernelKind::Tanh => (spec.a * dot(u, v) + spec.b).tanh(),
        KernelKind::HistogramIntersection => u.iter().zip(v).map(|(a, b)| a.min(*b)).sum(),
        _ => distance_profile(spec, sq_dist(u, v)),
    }
}

/// Closed-form kernel value.
pub fn kernel_eval(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    check_args(spec, u, v)?;
    Ok(kernel_value_unchecked(spec, u, v))
}

/// The four activations realizing `spec` as neural units.
pub fn sigma_quad(spec: &KernelSpec) -> SigmaQuad {
    use Activation::*;
    let inner = |s3| SigmaQuad {
        s1: Identity,
        s2: Identity,
        s3,
        s4: Identity,
    };
    let distance = |s3| SigmaQuad {
        s1: Exp,
        s2: LogSquared,
        s3,
        s4: NegExp,
    };
    match spec.kind {
        KernelKind::Linear => inner(Identity),
        KernelKind::Polynomial => inner(Pow { p: spec.p }),
        KernelKind::Sigmoid => inner(Logistic { beta: spec.beta }),
        KernelKind::Tanh => inner(TanhAffine {
            a: spec.a,
            b: spec.b,
        }),
        KernelKind::Gaussian => distance(ExpNegScaled { beta: spec.beta }),
        KernelKind::Laplacian => distance(ExpNegSqrt { beta: spec.beta }),
        KernelKind::Power => distance(NegHalfPow { p: spec.p }),
        KernelKind::InverseMultiquadric => distance(InvSqrtOffset { b: spec.b }),
        KernelKind::Log => distance(NegLogHalfPow { p: spec.p }),
        KernelKind::Cauchy => distance(CauchyRatio {
            sigma2: spec.sigma2,
        }),
        KernelKind::HistogramIntersection => {
            let s1 = DoubleExp { beta: spec.beta };
            SigmaQuad {
                s1,
                s2: NegLogLog { beta: spec.beta },
                s3: Identity,
                s4: s1,
            }
        }
    }
}

/// Kernel value through its four-activation form.
///
/// When `s2` starts with a logarithm and `s1`, `s4` are exponential, the
/// product `s1(u_d) * s4(v_d)` is formed in the log domain
/// (`ln s1(u_d) + ln s4(v_d)`); the histogram intersection activations
/// overflow `f64` otherwise.
pub fn kernel_eval_neural(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    check_args(spec, u, v)?;
    let q = sigma_quad(spec);
    let mut acc = 0.0;
    for (d, (&ud, &vd)) in u.iter().zip(v).enumerate() {
        let via_ln = match (q.s1.ln_eval(ud), q.s4.ln_eval(vd)) {
            (Some(a), Some(b)) => q.s2.eval_from_ln(a + b),
            _ => None,
        };
        let term = via_ln.unwrap_or_else(|| q.s2.eval(q.s1.eval(ud) * q.s4.eval(vd)));
        if !term.is_finite() {
            return Err(Error::ActivationOverflow { dim: Some(d) });
        }
        acc += term;
    }
    let out = q.s3.eval(acc);
    if !out.is_finite() {
        return Err(Error::ActivationOverflow { dim: None });
    }
    Ok(out)
}

/// Analytic `(dk/du, dk/dv)`.
///
/// Non-smooth points get a fixed subgradient: distance kernels return zero
/// at `u = v` where the profile has a kink, and histogram intersection sends
/// the unit derivative of each `min(u_d, v_d)` to `u` when `u_d <= v_d`.
pub fn kernel_grads(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_args(spec, u, v)?;
    let mut du = vec![0.0; u.len()];
    let mut dv = vec![0.0; u.len()];
    kernel_grads_into(spec, u, v, &mut du, &mut dv);
    Ok((du, dv))
}

/// Accumulates `scale * dk/dv` into `out`, for callers that only need the
/// derivative in the second argument.
pub(crate) fn accumulate_grad_v(spec: &KernelSpec, u: &[f64], v: &[f64], scale: f64, out: &mut [f64]) {
    match spec.kind {
        KernelKind::Linear => axpy(scale, u, out),
        KernelKind::Polynomial => {
            let s = dot(u, v);
            let c = spec.p as f64 * s.powi(spec.p as i32 - 1);
            axpy(scale * c, u, out);
        }
        KernelKind::Sigmoid => {
            let k = logistic(spec.beta * dot(u, v));
            axpy(scale * spec.beta * k * (1.0 - k), u, out);
        }
        KernelKind::Tanh => {
            let t = (spec.a * dot(u, v) + spec.b).tanh();
            axpy(scale * spec.a * (1.0 - t * t), u, out);
        }
        KernelKind::HistogramIntersection => {
            for ((o, &a), &b) in out.iter_mut().zip(u).zip(v) {
                if a > b {
                    *o += scale;
                }
            }
        }
        _ => {
            let r2 = sq_dist(u, v);
            // dk/dv = -2 f'(r2) (u - v)
            let c = -2.0 * distance_profile_deriv(spec, r2) * scale;
            for ((o, &a), &b) in out.iter_mut().zip(u).zip(v) {
                *o += c * (a - b);
            }
        }
    }
}

fn kernel_grads_into(spec: &KernelSpec, u: &[f64], v: &[f64], du: &mut [f64], dv: &mut [f64]) {
    if spec.kind == KernelKind::HistogramIntersection {
        for d in 0..u.len() {
            if u[d] <= v[d] {
                du[d] = 1.0;
            } else {
                dv[d] = 1.0;
            }
        }
        return;
    }
    accumulate_grad_v(spec, u, v, 1.0, dv);
    if spec.kind.is_distance_based() {
        for (a, b) in du.iter_mut().zip(dv.iter()) {
            *a = -b;
        }
    } else {
        // inner-product kernels are symmetric in (u, v)
        accumulate_grad_v(spec, v, u, 1.0, du);
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `G[i, j] = k(X_i, Y_j)`.
pub fn gram(spec: &KernelSpec, x: &Matrix, y: &Matrix) -> Result<Matrix> {
    gram_with(Exec::default(), spec, x, y)
}

/// [`gram`] with an explicit execution strategy (rows are computed in parallel).
pub fn gram_with(exec: Exec, spec: &KernelSpec, x: &Matrix, y: &Matrix) -> Result<Matrix> {
    spec.validate()?;
    if x.cols() != y.cols() {
        return Err(Error::DimMismatch {
            expected: x.cols(),
            got: y.cols(),
        });
    }
    let rows = par::map_indexed(exec, x.rows(), |i| {
        (0..y.rows())
            .map(|j| {
                kernel_eval(spec, x.row(i), y.row(j)).map_err(|e| Error::Gram {
                    row: i,
                    col: j,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<f64>>>()
    });
    let mut data = Vec::with_capacity(x.rows() * y.rows());
    for r in rows {
        data.extend(r?);
    }
    Matrix::new(x.rows(), y.rows(), data).map_err(|_| Error::NonFinite { what: "gram matrix" })
}
