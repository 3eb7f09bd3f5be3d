use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use kgcn::kernels::check::{hi_beta_errors, neural_error};
use kgcn::kernels::{KernelKind, KernelSpec};
use kgcn::model::check::gradcheck as gradient_check;
use kgcn::model::Model;
use kgcn::numcore::Rng;
use kgcn::skeleton::nearest_centroid_accuracy;
use kgcn::train::{
    ablate as ablate_modes, evaluate, infer_classes, load_checkpoint, save_checkpoint, write_metrics_csv,
    Evaluation, ModelConfig, ModelKind, Pipeline, Trainer,
};
use kgcn::ErrorClass;
use serde::Serialize;

use crate::config::RunConfig;
use crate::data::{self, Dataset};
use crate::CliError;

const NEURAL_PAIRS: usize = 1000;
const NEURAL_DIM: usize = 24;
const NEURAL_TOL: f64 = 1e-9;
/// Per-dimension bound on the histogram intersection gap at `beta = 50`.
const HI_TOL_PER_DIM: f64 = 0.02;
const GRAD_TOL: f64 = 1e-4;
const SWEEP_FILTERS: [usize; 3] = [1, 5, 10];
const SWEEP_SIZES: [usize; 3] = [1, 4, 8];

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

/// Prints `report` and saves it as `report.txt`.
fn report(out: &Path, report: &str) -> Result<(), CliError> {
    print!("{report}");
    write_file(&out.join("report.txt"), report.as_bytes())
}

pub fn write_config(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    write_json(&out.join("config.json"), cfg)
}

fn describe(cfg: &RunConfig) -> String {
    let m = &cfg.model;
    match m.kind {
        ModelKind::Kgcn => format!("kgcn kernel={} K={} N={} r={} pool={}", cfg.kernel.kind, m.filters, m.size, m.r, m.pool),
        ModelKind::Sgcn => format!("sgcn kernel={} K={} H={} r={} pool={}", cfg.kernel.kind, m.filters, cfg.kpca.dims, m.r, m.pool),
    }
}

fn format_evaluation(name: &str, e: &Evaluation) -> String {
    let mut s = format!("{name} macro accuracy {:.4} (micro {:.4})\n", e.accuracy, e.micro);
    s.push_str("confusion (rows true, columns predicted):\n");
    for row in &e.confusion {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
        s.push_str(&cells.join(""));
        s.push('\n');
    }
    s
}

pub fn train(cfg: &RunConfig, out: &Path, resume: Option<&Path>) -> Result<(), CliError> {
    let Dataset { train, test } = data::load(cfg)?;
    let setup = cfg.setup();
    let mut trainer = match resume {
        Some(path) => {
            let ck = load_checkpoint(path)?;
            let mut saved = ck.config.clone();
            saved.train.epochs = setup.train.epochs;
            if saved != setup {
                return Err(CliError::Usage(format!(
                    "{} was trained with a different configuration; only train.epochs may change on resume",
                    path.display()
                )));
            }
            Trainer::resume(ck, &train, &test)?
        }
        None => Trainer::new(setup.clone(), &train, &test)?,
    };
    let epochs = setup.train.epochs;
    let every = (epochs / 10).max(1);
    let mut outcome = Ok(());
    while trainer.epoch() < epochs {
        match trainer.step_epoch() {
            Ok(r) if r.epoch % every == 0 || r.epoch == epochs => {
                let test = r.test_acc.map(|a| format!(" test_acc {a:.4}")).unwrap_or_default();
                println!("epoch {:>5} loss {:.6} lr {:.6} train_acc {:.4}{test}", r.epoch, r.loss, r.lr, r.train_acc);
            }
            Ok(_) => {}
            Err(e) => {
                outcome = Err(e);
                break;
            }
        }
    }
    let mut csv = Vec::new();
    write_metrics_csv(trainer.history(), &mut csv).map_err(|e| CliError::io(out.join("metrics.csv"), e))?;
    write_file(&out.join("metrics.csv"), &csv)?;
    outcome?;
    save_checkpoint(&trainer.checkpoint(), &out.join("checkpoint.json"))?;
    let pipeline = trainer.pipeline();
    let mut s = format!("{}\nparameters {}\nepochs {}\n", describe(cfg), pipeline.network.param_count(), epochs);
    if let Some(last) = trainer.history().last() {
        let _ = writeln!(s, "final loss {:.6}", last.loss);
    }
    s.push_str(&format_evaluation("train", &evaluate(pipeline, &train)?));
    if !test.is_empty() {
        s.push_str(&format_evaluation("test", &evaluate(pipeline, &test)?));
    }
    report(out, &s)
}

pub fn eval(cfg: &RunConfig, out: &Path, checkpoint: &Path) -> Result<(), CliError> {
    let ck = load_checkpoint(checkpoint)?;
    let Dataset { train, test } = data::load(cfg)?;
    let (name, graphs) = if test.is_empty() { ("train", &train) } else { ("test", &test) };
    let e = evaluate(&ck.model, graphs)?;
    let s = format!("checkpoint {} at epoch {}\n{}", checkpoint.display(), ck.epoch, format_evaluation(name, &e));
    write_json(&out.join("evaluation.json"), &e)?;
    report(out, &s)
}

pub fn ablate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let Dataset { train, test } = data::load(cfg)?;
    let rows = ablate_modes(&train, &test, &cfg.setup())?;
    let mut csv = String::from("mode,accuracy,train_accuracy\n");
    let mut s = format!("{}\n{:<8} {:>9} {:>9}\n", describe(cfg), "mode", "accuracy", "train");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{}", r.mode, r.accuracy, r.train_accuracy);
        let _ = writeln!(s, "{:<8} {:>9.4} {:>9.4}", r.mode.to_string(), r.accuracy, r.train_accuracy);
    }
    write_file(&out.join("ablation.csv"), csv.as_bytes())?;
    report(out, &s)
}

pub fn kernelcheck(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut s = format!("{:<24} {:>12} {:>10}\n", "kernel", "max_abs_err", "tolerance");
    let mut failed = Vec::new();
    for kind in KernelKind::ALL.into_iter().filter(|k| k.is_exactly_neural()) {
        let err = neural_error(&KernelSpec::new(kind), cfg.seed, NEURAL_PAIRS, NEURAL_DIM)?;
        let _ = writeln!(s, "{:<24} {:>12.3e} {:>10.0e}", kind.name(), err, NEURAL_TOL);
        if err > NEURAL_TOL {
            failed.push(kind.name().to_string());
        }
    }
    let hi = hi_beta_errors(cfg.seed, NEURAL_PAIRS, NEURAL_DIM)?;
    let hi_tol = HI_TOL_PER_DIM * NEURAL_DIM as f64;
    for &(beta, err) in &hi {
        let name = format!("histogram_intersection b={beta}");
        let _ = writeln!(s, "{name:<24} {err:>12.3e} {:>10}", if beta == 50.0 { format!("{hi_tol}") } else { "-".into() });
        if beta == 50.0 && err > hi_tol {
            failed.push(name);
        }
    }
    if hi.windows(2).any(|w| w[1].1 > w[0].1) {
        failed.push("histogram_intersection monotonicity".into());
    }
    let _ = writeln!(s, "{}", if failed.is_empty() { "ok" } else { "FAILED" });
    report(out, &s)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("neural consistency failed for {}", failed.join(", "))))
    }
}

pub fn gradcheck(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut s = format!("{:<24} {:>12}\n", "kernel", "rel_err");
    let mut worst = 0.0f64;
    for kind in KernelKind::ALL {
        let err = gradient_check(KernelSpec::new(kind), cfg.seed)?;
        worst = worst.max(err);
        let _ = writeln!(s, "{:<24} {:>12.3e}", kind.name(), err);
    }
    let _ = writeln!(s, "worst relative error {worst:.3e} (tolerance {GRAD_TOL:.0e})");
    report(out, &s)?;
    if worst < GRAD_TOL {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("worst relative gradient error {worst:.3e} >= {GRAD_TOL:.0e}")))
    }
}

/// Fits the projector an SGCN run with this configuration would use.
pub fn kpca(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let Dataset { train, test } = data::load(cfg)?;
    let model = ModelConfig {
        kind: ModelKind::Sgcn,
        ..cfg.setup().model
    };
    let mut rng = Rng::stream(cfg.seed, 0);
    let pipeline = Pipeline::build(&model, &train, infer_classes(&train, &test), &mut rng)?;
    let Model::Sgcn(sgcn) = pipeline.network else {
        unreachable!("an sgcn configuration builds an sgcn network")
    };
    let proj = sgcn.projector;
    let mut s = format!(
        "kernel {} anchors {} input_dim {} dims {}\neigenvalues:\n",
        cfg.kernel.kind,
        proj.anchors.rows(),
        proj.input_dim(),
        proj.dims()
    );
    for (i, l) in proj.eigvals.iter().enumerate() {
        let _ = writeln!(s, "{:>4} {l:.6e}", i + 1);
    }
    #[derive(Serialize)]
    struct Saved<'a> {
        normalizer: &'a Option<kgcn::skeleton::MinMaxNormalizer>,
        projector: &'a kgcn::kpca::KpcaProjector,
    }
    write_json(
        &out.join("projector.json"),
        &Saved {
            normalizer: &pipeline.normalizer,
            projector: &proj,
        },
    )?;
    report(out, &s)
}

pub fn synth(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let ds = data::load(cfg)?;
    let first = ds.train.first().or(ds.test.first());
    let mut s = format!(
        "train {} graphs, test {} graphs, classes {}\n",
        ds.train.len(),
        ds.test.len(),
        infer_classes(&ds.train, &ds.test)
    );
    if let Some(g) = first {
        let _ = writeln!(s, "nodes {} signal_dim {}", g.num_nodes(), g.signal_dim());
    }
    if !ds.train.is_empty() && !ds.test.is_empty() {
        let _ = writeln!(s, "nearest-centroid test accuracy {:.4}", nearest_centroid_accuracy(&ds.train, &ds.test));
    }
    write_json(&out.join("dataset.json"), &ds)?;
    report(out, &s)
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    if cfg.model.kind != ModelKind::Kgcn {
        return Err(CliError::Usage("sweep varies K and N of a kgcn model; set model.kind to kgcn".into()));
    }
    let Dataset { train, test } = data::load(cfg)?;
    let mut csv = String::from("kernel,K,N,params,train_acc,test_acc,status\n");
    for kind in KernelKind::ALL {
        for filters in SWEEP_FILTERS {
            for size in SWEEP_SIZES {
                let mut c = cfg.clone();
                c.kernel = KernelSpec::new(kind);
                c.model.filters = filters;
                c.model.size = size;
                let setup = c.setup();
                let result = Trainer::new(setup, &train, &test).and_then(|mut t| {
                    t.run()?;
                    Ok(t)
                });
                let row = match result {
                    Ok(t) => {
                        let last = t.history().last();
                        format!(
                            "{},{},{},{},{},{},ok",
                            kind.name(),
                            filters,
                            size,
                            t.pipeline().network.param_count(),
                            last.map(|r| r.train_acc.to_string()).unwrap_or_default(),
                            last.and_then(|r| r.test_acc).map(|a| a.to_string()).unwrap_or_default()
                        )
                    }
                    Err(e) if e.class() == ErrorClass::Numerical => {
                        format!("{},{},{},,,,{}", kind.name(), filters, size, e.code())
                    }
                    Err(e) => return Err(e.into()),
                };
                println!("{row}");
                csv.push_str(&row);
                csv.push('\n');
            }
        }
    }
    write_file(&out.join("sweep.csv"), csv.as_bytes())?;
    write_file(&out.join("report.txt"), csv.as_bytes())
}
