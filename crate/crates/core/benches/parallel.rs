use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kgcn::kernels::{gram_with, KernelSpec};
use kgcn::numcore::{Matrix, Rng};
use kgcn::par::Exec;
use kgcn::skeleton::{split_per_class, synth_dataset};
use kgcn::train::{ModelConfig, Setup, TrainConfig, Trainer};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_gram(c: &mut Criterion) {
    let mut rng = Rng::seeded(1);
    let x = Matrix::new(400, 24, rng.uniform_vec(400 * 24, 0.0, 1.0)).unwrap();
    let spec = KernelSpec::default();
    let mut group = c.benchmark_group("gram_400x400");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| gram_with(exec, &spec, &x, &x).unwrap())
        });
    }
    group.finish();
}

fn bench_epoch(c: &mut Criterion) {
    let graphs = synth_dataset(4, 30, 7).unwrap();
    let (train, test) = split_per_class(&graphs, 20);
    let mut cfg = TrainConfig::new(1);
    cfg.epochs = 1;
    let setup = Setup::new(ModelConfig::default(), cfg);
    let mut group = c.benchmark_group("train_epoch");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter_batched(
                || Trainer::new(setup.clone(), &train, &test).unwrap().with_exec(exec),
                |mut t| t.step_epoch().unwrap(),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gram, bench_epoch);
criterion_main!(benches);
