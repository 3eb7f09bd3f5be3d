//! Random instances and the finite-difference gradient check.

use crate::error::Result;
use crate::graph::{adjacency_from_edges, LabeledGraph};
use crate::kernels::KernelSpec;
use crate::numcore::{finite_diff_grad, rel_error_vec, Matrix, Rng, FD_STEP};

use super::{FilterBank, KgcnModel, Model, Pool};

/// A connected graph: a random spanning tree plus a few extra edges,
/// self-loops, and signals uniform in `[0.05, 0.95]`.
pub fn random_graph(rng: &mut Rng, nodes: usize, dim: usize, label: usize) -> Result<LabeledGraph> {
    let mut edges: Vec<(usize, usize)> = (1..nodes).map(|v| (rng.index(v), v)).collect();
    for _ in 0..nodes / 2 {
        edges.push((rng.index(nodes), rng.index(nodes)));
    }
    let adjacency = adjacency_from_edges(nodes, &edges, true)?;
    let signals = Matrix::new(nodes, dim, rng.uniform_vec(nodes * dim, 0.05, 0.95))?;
    LabeledGraph::new(signals, adjacency, label)
}

/// A KGCN with support in `[0.05, 0.95]^D` and standard-normal mixing and
/// classifier weights.
pub fn random_kgcn(rng: &mut Rng, spec: KernelSpec, dim: usize, filters: usize, size: usize, classes: usize) -> Result<KgcnModel> {
    let support = rng.uniform_vec(filters * size * dim, 0.05, 0.95);
    let alphas = (0..filters * size).map(|_| rng.normal(0.0, 1.0)).collect();
    let bank = FilterBank::new(filters, size, dim, support, alphas)?;
    let classifier = Matrix::new(classes, filters, (0..classes * filters).map(|_| rng.normal(0.0, 1.0)).collect())?;
    KgcnModel::new(spec, bank, classifier, 1, Pool::Mean)
}

/// Relative error between the analytic loss gradient of `model` on `g` and
/// central differences.
pub fn gradient_error(model: &Model, g: &LabeledGraph) -> Result<f64> {
    let p = model.prepare(g)?;
    let (_, analytic, _) = model.loss_grad(&p)?;
    let mut probe = model.clone();
    let numeric = finite_diff_grad(
        |theta| {
            probe.set_params(theta).expect("probe parameters have the model's shape");
            probe.loss_grad(&p).map_or(f64::NAN, |r| r.0)
        },
        &model.params(),
        FD_STEP,
    )?;
    Ok(rel_error_vec(&analytic, &numeric))
}

/// Gradient check on a seeded 3-node graph with `K = 2`, `N = 2`, `D = 6`
/// and three classes.
pub fn gradcheck(spec: KernelSpec, seed: u64) -> Result<f64> {
    let mut rng = Rng::seeded(seed);
    let label = rng.index(3);
    let g = random_graph(&mut rng, 3, 6, label)?;
    let model = Model::Kgcn(random_kgcn(&mut rng, spec, 6, 2, 2, 3)?);
    gradient_error(&model, &g)
}
