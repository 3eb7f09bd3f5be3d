//! Kernel principal component analysis on node signals.
//!
//! Used to precompute fixed node features for the spatial GCN baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LabeledGraph;
use crate::kernels::{gram, kernel_eval, KernelKind, KernelSpec};
use crate::numcore::{Matrix, Rng};

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues below this fraction of the largest are treated as absent.
pub const EIGEN_FLOOR: f64 = 1e-10;
pub const DEFAULT_MAX_ANCHORS: usize = 2000;

/// Double-centers a Gram matrix so that every row and column sums to zero.
pub fn center_gram(g: &Matrix) -> Matrix {
    assert_eq!(g.rows(), g.cols(), "center_gram needs a square matrix");
    let n = g.rows();
    let nf = n as f64;
    let row_means: Vec<f64> = g.iter_rows().map(|r| r.iter().sum::<f64>() / nf).collect();
    let col_means: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| g[(i, j)]).sum::<f64>() / nf)
        .collect();
    let total = row_means.iter().sum::<f64>() / nf;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = g[(i, j)] - row_means[i] - col_means[j] + total;
        }
    }
    out
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back in descending order (ties keep their diagonal
/// order); eigenvector `i` is column `i` of the returned matrix.
pub fn sym_eig(s: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if s.rows() != s.cols() {
        return Err(Error::ShapeMismatch(format!("sym_eig on {}x{}", s.rows(), s.cols())));
    }
    let scale = s.as_slice().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let n = s.rows();
    let mut a = s.clone();
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = Matrix::identity(n);
    let fro = a.frobenius();
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off < OFF_DIAG_TOL * fro.max(f64::MIN_POSITIVE) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep index order
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigvals = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vecs[(r, col)] = v[(r, src)];
        }
    }
    Ok((eigvals, vecs))
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation zeroing `a[p][q]`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// A fitted kernel PCA: anchors, centering statistics and scaled axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpcaProjector {
    pub spec: KernelSpec,
    pub anchors: Matrix,
    /// Column means of the training Gram (equal to its row means).
    pub gram_col_means: Vec<f64>,
    pub gram_mean: f64,
    /// `n_anchors x H`, column `i` is `v_i / sqrt(lambda_i)`.
    pub axes: Matrix,
    pub eigvals: Vec<f64>,
}

impl KpcaProjector {
    pub fn dims(&self) -> usize {
        self.eigvals.len()
    }

    pub fn input_dim(&self) -> usize {
        self.anchors.cols()
    }
}

/// Feature-space dimension cap for kernels whose map is finite and explicit.
fn explicit_cap(spec: &KernelSpec, d: usize) -> Option<usize> {
    match spec.kind {
        KernelKind::Linear => Some(d),
        KernelKind::Polynomial => Some(d.saturating_pow(spec.p)),
        _ => None,
    }
}

/// Top-`h` principal axes of the centered Gram of the rows of `x`.
pub fn kpca_fit(spec: &KernelSpec, x: &Matrix, h: usize) -> Result<KpcaProjector> {
    if h == 0 {
        return Err(Error::InvalidConfig("kpca needs at least one dimension".into()));
    }
    if let Some(cap) = explicit_cap(spec, x.cols()) {
        if h > cap {
            return Err(Error::Overdim {
                requested: h,
                available: cap,
            });
        }
    }
    let g = gram(spec, x, x)?;
    let n = g.rows();
    let col_means: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| g[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let total = col_means.iter().sum::<f64>() / n as f64;
    let (vals, vecs) = sym_eig(&center_gram(&g))?;
    let lead = vals.first().copied().unwrap_or(0.0);
    let positive = vals.iter().take_while(|&&l| lead > 0.0 && l > EIGEN_FLOOR * lead).count();
    if h > positive {
        return Err(Error::Overdim {
            requested: h,
            available: positive,
        });
    }
    let mut axes = Matrix::zeros(n, h);
    for i in 0..h {
        let inv = 1.0 / vals[i].sqrt();
        for r in 0..n {
            axes[(r, i)] = vecs[(r, i)] * inv;
        }
    }
    Ok(KpcaProjector {
        spec: *spec,
        anchors: x.clone(),
        gram_col_means: col_means,
        gram_mean: total,
        axes,
        eigvals: vals[..h].to_vec(),
    })
}

/// Uniformly subsamples rows of `x` down to `max_anchors` before fitting.
pub fn kpca_fit_subsampled(spec: &KernelSpec, x: &Matrix, h: usize, max_anchors: usize, rng: &mut Rng) -> Result<KpcaProjector> {
    if x.rows() <= max_anchors {
        return kpca_fit(spec, x, h);
    }
    let mut idx = rng.permutation(x.rows());
    idx.truncate(max_anchors);
    idx.sort_unstable();
    let rows: Vec<&[f64]> = idx.iter().map(|&i| x.row(i)).collect();
    kpca_fit(spec, &Matrix::from_rows(&rows)?, h)
}

/// Coordinates of `x` on the fitted axes.
pub fn kpca_project(proj: &KpcaProjector, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != proj.input_dim() {
        return Err(Error::DimMismatch {
            expected: proj.input_dim(),
            got: x.len(),
        });
    }
    let n = proj.anchors.rows();
    let k = proj
        .anchors
        .iter_rows()
        .map(|a| kernel_eval(&proj.spec, x, a))
        .collect::<Result<Vec<f64>>>()?;
    let k_mean = k.iter().sum::<f64>() / n as f64;
    let mut out = vec![0.0; proj.dims()];
    for (j, &kj) in k.iter().enumerate() {
        let centered = kj - k_mean - proj.gram_col_means[j] + proj.gram_mean;
        for (o, &a) in out.iter_mut().zip(proj.axes.row(j)) {
            *o += centered * a;
        }
    }
    Ok(out)
}

/// Projects every node signal of `g`: an `n x H` feature matrix.
pub fn project_graph(proj: &KpcaProjector, g: &LabeledGraph) -> Result<Matrix> {
    let rows = g
        .signals()
        .iter_rows()
        .map(|r| kpca_project(proj, r))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

/// Stacks the node signals of `graphs` into one matrix.
pub fn stack_signals(graphs: &[LabeledGraph]) -> Result<Matrix> {
    let rows: Vec<&[f64]> = graphs.iter().flat_map(|g| g.signals().iter_rows()).collect();
    Matrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_matrix(rng: &mut Rng, n: usize, d: usize) -> Matrix {
        Matrix::new(n, d, rng.uniform_vec(n * d, -1.0, 1.0)).unwrap()
    }

    fn random_symmetric(rng: &mut Rng, n: usize) -> Matrix {
        let m = random_matrix(rng, n, n);
        let mut s = m.clone();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = m[(i, j)] + m[(j, i)];
            }
        }
        s
    }

    fn centered_data(rng: &mut Rng, n: usize, d: usize) -> Matrix {
        let mut x = random_matrix(rng, n, d);
        for k in 0..d {
            let mean = x.column(k).iter().sum::<f64>() / n as f64;
            for i in 0..n {
                x[(i, k)] -= mean;
            }
        }
        x
    }

    #[test]
    fn centering_examples() {
        let ones = Matrix::filled(4, 4, 1.0);
        assert_eq!(center_gram(&ones), Matrix::zeros(4, 4));

        let mut rng = Rng::seeded(2);
        let s = random_symmetric(&mut rng, 6);
        let c = center_gram(&s);
        assert!(c.row_sums().iter().all(|x| x.abs() < 1e-10));
        assert!(c.transpose().row_sums().iter().all(|x| x.abs() < 1e-10));
        assert!(center_gram(&c).max_abs_diff(&c) < 1e-14);
    }

    #[test]
    fn eig_of_diagonal() {
        let mut d = Matrix::zeros(3, 3);
        d[(0, 0)] = 1.0;
        d[(1, 1)] = 5.0;
        d[(2, 2)] = 3.0;
        let (vals, vecs) = sym_eig(&d).unwrap();
        assert_eq!(vals, vec![5.0, 3.0, 1.0]);
        assert_eq!(vecs.column(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(vecs.column(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(vecs.column(2), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn eig_two_by_two() {
        let s = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let (vals, vecs) = sym_eig(&s).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = vecs.column(0);
        let v1 = vecs.column(1);
        assert!((v0[0].abs() - r).abs() < 1e-14 && (v0[0] - v0[1]).abs() < 1e-14);
        assert!((v1[0].abs() - r).abs() < 1e-14 && (v1[0] + v1[1]).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_symmetric() {
        let mut rng = Rng::seeded(8);
        let s = random_symmetric(&mut rng, 8);
        let (vals, v) = sym_eig(&s).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let mut lam = Matrix::zeros(8, 8);
        for i in 0..8 {
            lam[(i, i)] = vals[i];
        }
        let rec = v.matmul(&lam).unwrap().matmul(&v.transpose()).unwrap();
        assert!(rec.max_abs_diff(&s) < 1e-8);
        let vtv = v.transpose().matmul(&v).unwrap();
        assert!(vtv.max_abs_diff(&Matrix::identity(8)) < 1e-8);
        for (i, &val) in vals.iter().enumerate().take(8) {
            let sv = s.matvec(&v.column(i)).unwrap();
            for (a, b) in sv.iter().zip(v.column(i)) {
                assert!((a - val * b).abs() < 1e-8 * s.frobenius());
            }
        }
    }

    #[test]
    fn eig_rejects_asymmetric() {
        let s = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&s), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn overdim_for_low_rank_linear_data() {
        // rank-2 data in 4 dimensions
        let mut rng = Rng::seeded(3);
        let basis = random_matrix(&mut rng, 2, 4);
        let coef = random_matrix(&mut rng, 10, 2);
        let x = coef.matmul(&basis).unwrap();
        let lin = KernelSpec::new(KernelKind::Linear);
        assert!(kpca_fit(&lin, &x, 2).is_ok());
        assert!(matches!(kpca_fit(&lin, &x, 3), Err(Error::Overdim { requested: 3, .. })));
    }

    #[test]
    fn explicit_caps() {
        let mut rng = Rng::seeded(4);
        let x = random_matrix(&mut rng, 40, 3);
        let lin = KernelSpec::new(KernelKind::Linear);
        assert!(matches!(kpca_fit(&lin, &x, 4), Err(Error::Overdim { requested: 4, available: 3 })));
        let poly = KernelSpec::new(KernelKind::Polynomial);
        assert!(matches!(kpca_fit(&poly, &x, 10), Err(Error::Overdim { requested: 10, available: 9 })));
        assert!(kpca_fit(&poly, &x, 5).is_ok());
        assert!(kpca_fit(&lin, &x, 0).is_err());
    }

    #[test]
    fn single_axis_has_unit_gram_norm() {
        let mut rng = Rng::seeded(5);
        let x = random_matrix(&mut rng, 12, 3);
        for kind in [KernelKind::Gaussian, KernelKind::Cauchy, KernelKind::Linear] {
            let spec = KernelSpec::new(kind);
            let p = kpca_fit(&spec, &x, 1).unwrap();
            assert_eq!(p.axes.cols(), 1);
            let gc = center_gram(&gram(&spec, &x, &x).unwrap());
            let a = p.axes.column(0);
            let norm = crate::numcore::dot(&a, &gc.matvec(&a).unwrap());
            assert!((norm - 1.0).abs() < 1e-9, "{kind}: {norm}");
        }
    }

    #[test]
    fn linear_kpca_equals_pca_scores() {
        let mut rng = Rng::seeded(6);
        let x = centered_data(&mut rng, 15, 4);
        let p = kpca_fit(&KernelSpec::new(KernelKind::Linear), &x, 4).unwrap();

        // covariance PCA through an independent solver
        let xm = DMatrix::from_row_slice(15, 4, x.as_slice());
        let eig = (xm.transpose() * &xm).symmetric_eigen();
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for i in 0..15 {
            let proj = kpca_project(&p, x.row(i)).unwrap();
            for (h, &e) in idx.iter().enumerate() {
                let score: f64 = (0..4).map(|k| x[(i, k)] * eig.eigenvectors[(k, e)]).sum();
                // fix the sign on the first point
                let sign = {
                    let first: f64 = (0..4).map(|k| x[(0, k)] * eig.eigenvectors[(k, e)]).sum();
                    let mine = kpca_project(&p, x.row(0)).unwrap()[h];
                    if first * mine >= 0.0 { 1.0 } else { -1.0 }
                };
                assert!((proj[h] - sign * score).abs() < 1e-8, "point {i} axis {h}");
            }
        }
    }

    #[test]
    fn full_projection_reconstructs_centered_gram() {
        let mut rng = Rng::seeded(7);
        let x = random_matrix(&mut rng, 12, 3);
        for kind in [KernelKind::Gaussian, KernelKind::Laplacian, KernelKind::InverseMultiquadric] {
            let spec = KernelSpec::new(kind);
            let gc = center_gram(&gram(&spec, &x, &x).unwrap());
            let (vals, _) = sym_eig(&gc).unwrap();
            let full = vals.iter().filter(|&&l| l > EIGEN_FLOOR * vals[0]).count();
            let p = kpca_fit(&spec, &x, full).unwrap();
            let proj: Vec<Vec<f64>> = x.iter_rows().map(|r| kpca_project(&p, r).unwrap()).collect();
            for i in 0..12 {
                for j in 0..12 {
                    let ip = crate::numcore::dot(&proj[i], &proj[j]);
                    assert!((ip - gc[(i, j)]).abs() < 1e-8, "{kind} ({i},{j})");
                }
            }
            assert!(matches!(kpca_fit(&spec, &x, full + 1), Err(Error::Overdim { .. })));
        }
    }

    #[test]
    fn subsampling_caps_anchors() {
        let mut rng = Rng::seeded(9);
        let x = random_matrix(&mut rng, 50, 3);
        let p = kpca_fit_subsampled(&KernelSpec::default(), &x, 3, 20, &mut Rng::seeded(1)).unwrap();
        assert_eq!(p.anchors.rows(), 20);
        let q = kpca_fit_subsampled(&KernelSpec::default(), &x, 3, 20, &mut Rng::seeded(1)).unwrap();
        assert_eq!(p, q);
        assert!(kpca_project(&p, &[0.0, 0.0]).is_err());
    }
}
