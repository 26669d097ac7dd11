//! Training sessions: data, model assembly and solver runs.

use std::path::Path;

use sciopt_core::network::{init_params, MlpSpec, Model, ModelSpec};
use sciopt_core::objective::{BatchLoader, Dataset, MetricKind, MinimizationProblem, TrainingFunction};
use sciopt_core::problems::{
    build_dataset, compute_pod, read_pmld, select_pod_modes, write_pmld, PmldHeader, PodBasis, ProblemTag,
};
use sciopt_core::solvers::{run_solver_from, RunResult, SolverConfig};
use sciopt_core::tensor::RngState;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// Train and test splits of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
}

/// Loads `data.path`, or generates the dataset from the config.
pub fn load_data(cfg: &ExperimentConfig) -> Result<Splits> {
    match &cfg.data.path {
        Some(path) => {
            let file = read_pmld(path)?;
            if file.header.problem != cfg.problem.as_str() {
                return Err(HarnessError::Config(format!(
                    "{} holds problem `{}`, config says `{}`",
                    path.display(),
                    file.header.problem,
                    cfg.problem
                )));
            }
            Ok(Splits {
                train: file.train,
                test: file.test,
            })
        }
        None => {
            let d = build_dataset(&cfg.dataset_spec(), cfg.precision)?;
            Ok(Splits {
                train: d.train,
                test: d.test,
            })
        }
    }
}

/// PMLD header describing `splits` under `cfg`.
pub fn header_for(cfg: &ExperimentConfig, splits: &Splits) -> PmldHeader {
    PmldHeader {
        problem: cfg.problem.as_str().to_string(),
        n_train: splits.train.len(),
        n_test: splits.test.len(),
        d_in: splits.train.x.cols(),
        d_out: splits.train.y.cols(),
        precision: cfg.precision,
        seed: cfg.seed,
    }
}

pub fn save_data(path: &Path, cfg: &ExperimentConfig, splits: &Splits) -> Result<()> {
    write_pmld(path, &header_for(cfg, splits), &splits.train, &splits.test)?;
    Ok(())
}

/// POD basis of the training outputs as configured.
pub fn pod_for(cfg: &ExperimentConfig, train: &Dataset) -> Result<PodBasis> {
    let pod = match cfg.model.pod_modes {
        Some(n) => compute_pod(&train.y, n)?,
        None => select_pod_modes(&train.y, cfg.model.pod_energy, cfg.model.pod_max_modes)?,
    };
    if pod.n == 0 {
        return Err(HarnessError::Config("POD selected no modes; training outputs are constant".into()));
    }
    Ok(pod)
}

/// Equispaced nodes on [0, 1] including both ends.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Assembles the model for the problem; POD problems also return their basis.
pub fn build_model_spec(cfg: &ExperimentConfig, train: &Dataset) -> Result<(ModelSpec, Option<PodBasis>)> {
    let widths = |input: usize, output: usize, hidden: &[usize]| {
        let mut w = vec![input];
        w.extend_from_slice(hidden);
        w.push(output);
        w
    };
    let act = cfg.model.activation.clone();
    if cfg.problem == ProblemTag::Green1d {
        let n = train.x.cols();
        if train.y.cols() != n {
            return Err(HarnessError::Config("green-1d needs matching input and output grids".into()));
        }
        let spec = ModelSpec::GreenKernel {
            kernel_net: MlpSpec::new(&widths(2, 1, &cfg.model.hidden), act.clone()),
            homogeneous_net: cfg
                .model
                .homogeneous_hidden
                .as_ref()
                .map(|h| MlpSpec::new(&widths(1, 1, h), act.clone())),
            quadrature_nodes: unit_grid(n),
            quadrature_weight: 1.0 / (n - 1) as f64,
        };
        Ok((spec, None))
    } else {
        let pod = pod_for(cfg, train)?;
        let spec = ModelSpec::BranchPod {
            branch: MlpSpec::new(&widths(train.x.cols(), pod.n, &cfg.model.hidden), act),
            pod_basis: pod.basis.clone(),
            pod_mean: pod.mean.clone(),
        };
        Ok((spec, Some(pod)))
    }
}

fn loader(cfg: &ExperimentConfig, batch: Option<usize>, n: usize) -> BatchLoader {
    match batch {
        Some(b) if b < n => BatchLoader::new(n, b, cfg.train.shuffle, RngState::substream(cfg.seed, "batches")),
        _ => BatchLoader::full(n),
    }
}

/// A ready-to-run experiment: objective, evaluation model and initial point.
pub struct Session {
    pub cfg: ExperimentConfig,
    pub splits: Splits,
    pub pod: Option<PodBasis>,
    pub problem: TrainingFunction,
    /// Uncounted copy of the model for test metrics.
    pub eval_model: Model,
    /// Initial parameters, representable in the session precision.
    pub theta0: Vec<f64>,
}

impl Session {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let splits = load_data(cfg)?;
        Session::with_data(cfg, splits)
    }

    pub fn with_data(cfg: &ExperimentConfig, splits: Splits) -> Result<Self> {
        if cfg.train.loss.is_relative() {
            splits.train.validate_relative()?;
        }
        if cfg.train.metric.is_relative() {
            splits.test.validate_relative()?;
        }
        let (spec, pod) = build_model_spec(cfg, &splits.train)?;
        let params = init_params(&spec, &mut RngState::substream(cfg.seed, "init"))?;
        let model = Model::new(&spec)?;
        let first_batch = cfg.hybrid.as_ref().map_or(cfg.train.batch_size, |h| h.batch_size);
        let problem = TrainingFunction::new(
            model.clone(),
            cfg.train.loss,
            splits.train.clone(),
            loader(cfg, first_batch, splits.train.len()),
        )?;
        Ok(Session {
            cfg: cfg.clone(),
            splits,
            pod,
            problem,
            eval_model: model,
            theta0: params.theta.into_vec().into_iter().map(|t| cfg.precision.round(t)).collect(),
        })
    }

    pub fn metric(&self, theta: &[f64], data: &Dataset, kind: MetricKind) -> Result<f64> {
        let pred = self.eval_model.forward(theta, &data.x)?;
        Ok(kind.evaluate(&pred, &data.y)?)
    }

    /// Runs `solver` from `theta`, numbering epochs after `first_epoch`; the
    /// test metric is logged every epoch.
    pub fn run(&mut self, solver: &SolverConfig, theta: &[f64], first_epoch: usize) -> RunResult {
        let model = &self.eval_model;
        let test = &self.splits.test;
        let kind = self.cfg.train.metric;
        run_solver_from(solver, &mut self.problem, theta, first_epoch, |_, th| {
            if test.is_empty() {
                return Ok(None);
            }
            let pred = model.forward(th, &test.x)?;
            kind.evaluate(&pred, &test.y).map(Some)
        })
    }

    /// Cumulative oracle calls charged so far.
    pub fn problem_calls(&self) -> f64 {
        self.problem.counter().snapshot().calls
    }

    /// Switches to the training loader of the follow-on phase; the oracle
    /// counter carries over.
    pub fn use_train_loader(&mut self) -> Result<()> {
        let l = loader(&self.cfg, self.cfg.train.batch_size, self.splits.train.len());
        self.problem.set_loader(l)?;
        Ok(())
    }
}
