//! Flat `key = value` experiment configuration.
//!
//! Every key has a documented default (see [`KEYS`]). Values of `auto` resolve
//! to problem-specific choices when the configuration is built; the echoed
//! configuration written next to the results always holds concrete values, so
//! it parses back to the same [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sciopt_core::network::Activation;
use sciopt_core::objective::{LossKind, MetricKind};
use sciopt_core::problems::{DatasetSpec, ProblemTag};
use sciopt_core::solvers::{ForcingChoice, Schedule, SolverConfig, SolverKind, TrNorm};
use sciopt_core::tensor::Precision;

use crate::error::{HarnessError, Result};

/// A configuration key with its default and a one-line description.
pub struct KeySpec {
    pub key: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn k(key: &'static str, default: &'static str, doc: &'static str) -> KeySpec {
    KeySpec { key, default, doc }
}

/// All accepted keys.
pub const KEYS: &[KeySpec] = &[
    k("problem", "green-1d", "advection-i, advection-ii, reaction-diffusion or green-1d"),
    k("seed", "0", "seed for data generation, initialization and batching"),
    k("precision", "auto", "f32 or f64; auto is f32 for advection and green-1d, f64 otherwise"),
    k("out_dir", "out", "directory receiving CSVs, parameter files and the echoed config"),
    k("data.path", "none", "PMLD dataset to load instead of generating one"),
    k("data.n_train", "auto", "training samples (advection 200, reaction-diffusion 100, green-1d 50)"),
    k("data.n_test", "auto", "test samples (advection 200, reaction-diffusion 100, green-1d 200)"),
    k("data.nx", "auto", "spatial nodes (advection 40, reaction-diffusion 100, green-1d 101)"),
    k("data.nt", "auto", "time levels (advection 40, reaction-diffusion 100)"),
    k("model.hidden", "auto", "hidden widths, comma separated (POD problems 128, green-1d 20,20)"),
    k("model.activation", "auto", "relu, tanh, gelu, rational or identity (green-1d rational, else relu)"),
    k("model.pod_modes", "auto", "POD modes; auto picks the smallest count reaching model.pod_energy"),
    k("model.pod_energy", "0.999", "captured energy fraction for automatic POD mode selection"),
    k("model.pod_max_modes", "40", "cap on automatically selected POD modes"),
    k("model.homogeneous_hidden", "none", "hidden widths of the green-1d homogeneous net, or none"),
    k("train.loss", "auto", "mse or mean_squared_rel_l2 (green-1d relative, else mse)"),
    k("train.metric", "auto", "mse, mean_squared_rel_l2 or mean_rel_l2 (reaction-diffusion mse, else mean_squared_rel_l2)"),
    k("train.batch_size", "full", "mini-batch size or full"),
    k("train.shuffle", "true", "reshuffle mini-batches every epoch"),
    k("solver.kind", "trust_region_gn", "solver name, or reference for the problem's first-order reference"),
    k("solver.max_epochs", "auto", "epochs (first-order 2000, second-order 100)"),
    k("solver.learning_rate", "0.001", "initial learning rate of first-order solvers"),
    k("solver.schedule", "auto", "constant, exp_staircase or inverse_time_decay (advection inverse_time_decay, green-1d exp_staircase)"),
    k("solver.schedule_factor", "auto", "exp_staircase factor (green-1d 0.9, else 0.5)"),
    k("solver.schedule_every", "100", "exp_staircase period in epochs"),
    k("solver.final_rate", "0.0001", "inverse_time_decay asymptotic rate"),
    k("solver.decay_epochs", "100", "inverse_time_decay time scale in epochs"),
    k("solver.weight_decay", "auto", "weight decay (green-1d 0.0001, else 0)"),
    k("solver.momentum", "0.9", "sgd_momentum coefficient"),
    k("solver.beta1", "0.9", "first-moment decay of adam and adamw"),
    k("solver.beta2", "0.999", "second-moment decay of adam and adamw"),
    k("solver.epsilon", "1e-8", "denominator guard of adam and adamw"),
    k("solver.lbfgs_history", "30", "L-BFGS history pairs"),
    k("solver.precond_history", "5", "pairs of the L-BFGS CG preconditioner"),
    k("solver.precondition", "true", "precondition CG with the L-BFGS update"),
    k("solver.cg_max_iters", "100", "CG iteration cap"),
    k("solver.armijo_c1", "0.0001", "sufficient decrease constant"),
    k("solver.armijo_factor", "0.5", "backtracking factor"),
    k("solver.armijo_max_trials", "40", "backtracking trials before failure"),
    k("solver.forcing", "choice2", "forcing-term rule, choice1 or choice2"),
    k("solver.nu0", "0.9", "initial forcing term"),
    k("solver.nu_min", "1e-6", "lower forcing clamp"),
    k("solver.nu_max", "0.9", "upper forcing clamp"),
    k("solver.forcing_gamma", "1", "forcing gamma"),
    k("solver.forcing_alpha", "1.618033988749895", "forcing exponent"),
    k("solver.tr_delta0", "0.2", "initial trust radius"),
    k("solver.tr_delta_max", "10", "maximum trust radius"),
    k("solver.tr_accept", "0.001", "step acceptance threshold on rho"),
    k("solver.tr_shrink_below", "0.25", "shrink when rho is below this"),
    k("solver.tr_shrink_factor", "0.25", "shrink factor"),
    k("solver.tr_grow_above", "0.75", "grow when rho is above this"),
    k("solver.tr_grow_factor", "2", "growth factor"),
    k("solver.tr_radius_floor", "1e-12", "stop once the radius falls below this"),
    k("solver.tr_inner_rtol", "0.0001", "relative residual tolerance of Steihaug CG"),
    k("solver.tr_norm", "preconditioner", "trust-region norm, preconditioner or euclidean"),
    k("solver.max_oracle_calls", "none", "stop once cumulative oracle calls reach this, or none"),
    k("solver.grad_rtol", "1e-10", "full-batch convergence tolerance relative to max(1, |g0|)"),
    k("hybrid.reference", "none", "warm-start solver for the hybrid command: none, reference or a solver name"),
    k("hybrid.epochs", "10", "warm-start epochs K"),
    k("hybrid.batch_size", "auto", "warm-start mini-batch size, full, or auto for train.batch_size"),
];

fn spec_of(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|s| s.key == key)
}

/// Raw key/value pairs after merging defaults, file and overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig {
            values: KEYS.iter().map(|s| (s.key, s.default.to_string())).collect(),
        }
    }
}

impl RawConfig {
    /// Sets `key`, rejecting unknown keys with the closest valid one.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let spec = spec_of(key).ok_or_else(|| HarnessError::UnknownKey {
            key: key.to_string(),
            suggestion: nearest_key(key),
        })?;
        self.values.insert(spec.key, value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
        self.apply_text(&text)
    }

    /// Applies `--key value` or `--key=value` pairs. `--out-dir` is accepted for
    /// `out_dir`.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<()> {
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let flag = arg
                .strip_prefix("--")
                .ok_or_else(|| HarnessError::Config(format!("expected `--key value`, got `{arg}`")))?;
            let (key, value) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = args.get(i + 1).ok_or_else(|| HarnessError::Missing { key: flag.to_string() })?;
                    i += 1;
                    (flag.to_string(), v.clone())
                }
            };
            let key = if key == "out-dir" { "out_dir".to_string() } else { key };
            self.set(&key, &value)?;
            i += 1;
        }
        Ok(())
    }

    fn value(&self, key: &str) -> Result<&str> {
        let v = self.get(key);
        if v.is_empty() {
            return Err(HarnessError::Missing { key: key.to_string() });
        }
        Ok(v)
    }

    fn parse<T: FromStr>(&self, key: &str, expected: &str) -> Result<T> {
        let v = self.value(key)?;
        v.parse().map_err(|_| type_error(key, v, expected))
    }

    fn parse_auto<T: FromStr>(&self, key: &str, expected: &str) -> Result<Option<T>> {
        match self.value(key)? {
            "auto" => Ok(None),
            _ => self.parse(key, expected).map(Some),
        }
    }

    fn parse_bool(&self, key: &str) -> Result<bool> {
        match self.value(key)? {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(type_error(key, v, "a boolean")),
        }
    }

    fn parse_batch(&self, key: &str) -> Result<Option<usize>> {
        match self.value(key)? {
            "full" => Ok(None),
            v => match v.parse::<usize>() {
                Ok(b) if b > 0 => Ok(Some(b)),
                _ => Err(type_error(key, v, "a positive integer or `full`")),
            },
        }
    }

    fn parse_widths(&self, key: &str) -> Result<Vec<usize>> {
        let v = self.value(key)?;
        v.split(',')
            .map(|w| w.trim().parse::<usize>().ok().filter(|w| *w > 0))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| type_error(key, v, "comma-separated positive widths"))
    }
}

fn type_error(key: &str, value: &str, expected: &str) -> HarnessError {
    HarnessError::Type {
        key: key.to_string(),
        value: value.to_string(),
        expected: expected.to_string(),
    }
}

/// Closest valid key by Jaro-Winkler similarity, if reasonably close.
pub fn nearest_key(key: &str) -> Option<String> {
    KEYS.iter()
        .map(|s| (strsim::jaro_winkler(key, s.key), s.key))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .filter(|(score, _)| *score >= 0.7)
        .map(|(_, k)| k.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub n_train: usize,
    pub n_test: usize,
    pub nx: usize,
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub pod_modes: Option<usize>,
    pub pod_energy: f64,
    pub pod_max_modes: usize,
    pub homogeneous_hidden: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub metric: MetricKind,
    /// `None` is full batch.
    pub batch_size: Option<usize>,
    pub shuffle: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    pub reference: SolverKind,
    pub epochs: usize,
    pub batch_size: Option<usize>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemTag,
    pub seed: u64,
    pub precision: Precision,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub solver: SolverConfig,
    pub hybrid: Option<HybridConfig>,
}

/// First-order reference solver for a problem.
pub fn reference_kind(problem: ProblemTag) -> SolverKind {
    match problem {
        ProblemTag::Green1d => SolverKind::Adamw,
        _ => SolverKind::Adam,
    }
}

fn parse_kind(raw: &RawConfig, key: &str, problem: ProblemTag) -> Result<SolverKind> {
    match raw.value(key)? {
        "reference" => Ok(reference_kind(problem)),
        v => v.parse().map_err(|_| {
            let names: Vec<&str> = SolverKind::ALL.iter().map(|k| k.as_str()).collect();
            type_error(key, v, &format!("one of reference, {}", names.join(", ")))
        }),
    }
}

impl ExperimentConfig {
    /// Defaults for `problem`.
    pub fn for_problem(problem: ProblemTag) -> Self {
        let mut raw = RawConfig::default();
        raw.set("problem", problem.as_str()).expect("known key");
        ExperimentConfig::from_raw(&raw).expect("defaults are valid")
    }

    /// Parses an optional config file, then `--key value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut raw = RawConfig::default();
        if let Some(p) = path {
            raw.apply_file(p)?;
        }
        raw.apply_overrides(overrides)?;
        ExperimentConfig::from_raw(&raw)
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        raw.apply_text(text)?;
        ExperimentConfig::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let problem: ProblemTag = raw.value("problem")?.parse().map_err(HarnessError::Core)?;
        let desk = DatasetSpec::new(problem, 0);
        let pod = problem.uses_pod();
        let green = problem == ProblemTag::Green1d;
        let advection = matches!(problem, ProblemTag::AdvectionI | ProblemTag::AdvectionII);

        let precision = match raw.value("precision")? {
            "auto" if advection || green => Precision::F32,
            "auto" => Precision::F64,
            v => v.parse().map_err(|_| type_error("precision", v, "f32, f64 or auto"))?,
        };
        let data = DataConfig {
            path: match raw.value("data.path")? {
                "none" => None,
                p => Some(PathBuf::from(p)),
            },
            n_train: raw.parse_auto("data.n_train", "an integer")?.unwrap_or(desk.n_train),
            n_test: raw.parse_auto("data.n_test", "an integer")?.unwrap_or(desk.n_test),
            nx: raw.parse_auto("data.nx", "an integer")?.unwrap_or(desk.nx),
            nt: raw.parse_auto("data.nt", "an integer")?.unwrap_or(desk.nt),
        };
        let model = ModelConfig {
            hidden: match raw.value("model.hidden")? {
                "auto" if green => vec![20, 20],
                "auto" if problem == ProblemTag::ReactionDiffusion => vec![100, 100],
                "auto" => vec![128],
                _ => raw.parse_widths("model.hidden")?,
            },
            activation: match raw.value("model.activation")? {
                "auto" if green => Activation::rational(),
                "auto" => Activation::Relu,
                v => v.parse().map_err(|e: String| type_error("model.activation", v, &e))?,
            },
            pod_modes: raw.parse_auto("model.pod_modes", "an integer")?,
            pod_energy: raw.parse("model.pod_energy", "a number")?,
            pod_max_modes: raw.parse("model.pod_max_modes", "an integer")?,
            homogeneous_hidden: match raw.value("model.homogeneous_hidden")? {
                "none" => None,
                _ => Some(raw.parse_widths("model.homogeneous_hidden")?),
            },
        };
        if !pod && model.pod_modes.is_some() {
            return Err(HarnessError::Config(format!("model.pod_modes does not apply to {problem}")));
        }
        let train = TrainConfig {
            loss: match raw.value("train.loss")? {
                "auto" if green => LossKind::MeanSquaredRelL2,
                "auto" => LossKind::Mse,
                v => v.parse().map_err(|e: String| type_error("train.loss", v, &e))?,
            },
            metric: match raw.value("train.metric")? {
                "auto" if problem == ProblemTag::ReactionDiffusion => MetricKind::Mse,
                "auto" => MetricKind::MeanSquaredRelL2,
                v => v.parse().map_err(|e: String| type_error("train.metric", v, &e))?,
            },
            batch_size: raw.parse_batch("train.batch_size")?,
            shuffle: raw.parse_bool("train.shuffle")?,
        };

        let kind = parse_kind(raw, "solver.kind", problem)?;
        let mut solver = SolverConfig::new(kind);
        solver.max_epochs = raw
            .parse_auto("solver.max_epochs", "an integer")?
            .unwrap_or(if kind.is_first_order() { 2000 } else { 100 });
        solver.learning_rate = raw.parse("solver.learning_rate", "a number")?;
        let factor = raw
            .parse_auto("solver.schedule_factor", "a number")?
            .unwrap_or(if green { 0.9 } else { 0.5 });
        let schedule = match raw.value("solver.schedule")? {
            "auto" if advection => "inverse_time_decay",
            "auto" if green => "exp_staircase",
            "auto" => "constant",
            v => v,
        };
        solver.schedule = match schedule {
            "constant" => Ok(Schedule::Constant),
            "exp_staircase" => Ok(Schedule::ExpStaircase {
                factor,
                every_k_epochs: raw.parse("solver.schedule_every", "an integer")?,
            }),
            "inverse_time_decay" => Ok(Schedule::InverseTimeDecay {
                final_rate: raw.parse("solver.final_rate", "a number")?,
                decay_epochs: raw.parse("solver.decay_epochs", "a number")?,
            }),
            v => Err(type_error("solver.schedule", v, "constant, exp_staircase or inverse_time_decay")),
        }?;
        solver.weight_decay = raw
            .parse_auto("solver.weight_decay", "a number")?
            .unwrap_or(if green { 1e-4 } else { 0.0 });
        solver.momentum = raw.parse("solver.momentum", "a number")?;
        solver.beta1 = raw.parse("solver.beta1", "a number")?;
        solver.beta2 = raw.parse("solver.beta2", "a number")?;
        solver.epsilon = raw.parse("solver.epsilon", "a number")?;
        solver.lbfgs_history = raw.parse("solver.lbfgs_history", "an integer")?;
        solver.precond_history = raw.parse("solver.precond_history", "an integer")?;
        solver.precondition = raw.parse_bool("solver.precondition")?;
        solver.cg_max_iters = raw.parse("solver.cg_max_iters", "an integer")?;
        solver.armijo.c1 = raw.parse("solver.armijo_c1", "a number")?;
        solver.armijo.factor = raw.parse("solver.armijo_factor", "a number")?;
        solver.armijo.max_trials = raw.parse("solver.armijo_max_trials", "an integer")?;
        solver.forcing.choice = raw
            .value("solver.forcing")?
            .parse::<ForcingChoice>()
            .map_err(|_| type_error("solver.forcing", raw.get("solver.forcing"), "choice1 or choice2"))?;
        solver.forcing.nu0 = raw.parse("solver.nu0", "a number")?;
        solver.forcing.nu_min = raw.parse("solver.nu_min", "a number")?;
        solver.forcing.nu_max = raw.parse("solver.nu_max", "a number")?;
        solver.forcing.gamma = raw.parse("solver.forcing_gamma", "a number")?;
        solver.forcing.alpha = raw.parse("solver.forcing_alpha", "a number")?;
        solver.tr.delta0 = raw.parse("solver.tr_delta0", "a number")?;
        solver.tr.delta_max = raw.parse("solver.tr_delta_max", "a number")?;
        solver.tr.accept = raw.parse("solver.tr_accept", "a number")?;
        solver.tr.shrink_below = raw.parse("solver.tr_shrink_below", "a number")?;
        solver.tr.shrink_factor = raw.parse("solver.tr_shrink_factor", "a number")?;
        solver.tr.grow_above = raw.parse("solver.tr_grow_above", "a number")?;
        solver.tr.grow_factor = raw.parse("solver.tr_grow_factor", "a number")?;
        solver.tr.radius_floor = raw.parse("solver.tr_radius_floor", "a number")?;
        solver.tr.inner_rtol = raw.parse("solver.tr_inner_rtol", "a number")?;
        solver.tr.norm = raw
            .value("solver.tr_norm")?
            .parse::<TrNorm>()
            .map_err(|_| type_error("solver.tr_norm", raw.get("solver.tr_norm"), "preconditioner or euclidean"))?;
        solver.grad_rtol = raw.parse("solver.grad_rtol", "a number")?;
        solver.max_oracle_calls = match raw.value("solver.max_oracle_calls")? {
            "none" => None,
            _ => Some(raw.parse("solver.max_oracle_calls", "a number or none")?),
        };

        let hybrid = match raw.value("hybrid.reference")? {
            "none" => None,
            _ => Some(HybridConfig {
                reference: parse_kind(raw, "hybrid.reference", problem)?,
                epochs: raw.parse("hybrid.epochs", "an integer")?,
                batch_size: match raw.value("hybrid.batch_size")? {
                    "auto" => train.batch_size,
                    _ => raw.parse_batch("hybrid.batch_size")?,
                },
            }),
        };

        let cfg = ExperimentConfig {
            problem,
            seed: raw.parse("seed", "an unsigned integer")?,
            precision,
            out_dir: PathBuf::from(raw.value("out_dir")?),
            data,
            model,
            train,
            solver,
            hybrid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.data.n_train == 0 {
            return bad("data.n_train must be positive");
        }
        if self.data.nx < 3 {
            return bad("data.nx must be at least 3");
        }
        if !(0.0..=1.0).contains(&self.model.pod_energy) {
            return bad("model.pod_energy must lie in [0, 1]");
        }
        if self.solver.forcing.nu_min > self.solver.forcing.nu_max {
            return bad("solver.nu_min exceeds solver.nu_max");
        }
        if self.solver.tr.delta0 <= 0.0 || self.solver.tr.delta0 > self.solver.tr.delta_max {
            return bad("solver.tr_delta0 must lie in (0, solver.tr_delta_max]");
        }
        Ok(())
    }

    /// Dataset generation parameters for this experiment.
    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            n_train: self.data.n_train,
            n_test: self.data.n_test,
            nx: self.data.nx,
            nt: self.data.nt,
            ..DatasetSpec::new(self.problem, self.seed)
        }
    }

    /// The hybrid warm-start solver: this config's solver settings with the
    /// reference kind and K epochs.
    pub fn reference_solver(&self) -> Option<SolverConfig> {
        self.hybrid.as_ref().map(|h| SolverConfig {
            kind: h.reference,
            max_epochs: h.epochs,
            ..self.solver.clone()
        })
    }

    /// Concrete `key = value` text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let s = &self.solver;
        let widths = |w: &[usize]| w.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let batch = |b: Option<usize>| b.map_or("full".to_string(), |b| b.to_string());
        let (sched, factor, every, final_rate, decay) = match s.schedule {
            Schedule::Constant => ("constant", 0.5, 100, 1e-4, 100.0),
            Schedule::ExpStaircase { factor, every_k_epochs } => {
                ("exp_staircase", factor, every_k_epochs, 1e-4, 100.0)
            }
            Schedule::InverseTimeDecay { final_rate, decay_epochs } => {
                ("inverse_time_decay", 0.5, 100, final_rate, decay_epochs)
            }
        };
        let activation = match &self.model.activation {
            Activation::Rational { .. } => "rational".to_string(),
            a => a.to_string(),
        };
        let forcing = match s.forcing.choice {
            ForcingChoice::Choice1 => "choice1",
            ForcingChoice::Choice2 => "choice2",
        };
        let norm = match s.tr.norm {
            TrNorm::Preconditioner => "preconditioner",
            TrNorm::Euclidean => "euclidean",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("problem", self.problem.to_string()),
            ("seed", self.seed.to_string()),
            ("precision", self.precision.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("data.path", self.data.path.as_ref().map_or("none".into(), |p| p.display().to_string())),
            ("data.n_train", self.data.n_train.to_string()),
            ("data.n_test", self.data.n_test.to_string()),
            ("data.nx", self.data.nx.to_string()),
            ("data.nt", self.data.nt.to_string()),
            ("model.hidden", widths(&self.model.hidden)),
            ("model.activation", activation),
            ("model.pod_modes", self.model.pod_modes.map_or("auto".into(), |n| n.to_string())),
            ("model.pod_energy", self.model.pod_energy.to_string()),
            ("model.pod_max_modes", self.model.pod_max_modes.to_string()),
            (
                "model.homogeneous_hidden",
                self.model.homogeneous_hidden.as_deref().map_or("none".into(), widths),
            ),
            ("train.loss", self.train.loss.to_string()),
            ("train.metric", self.train.metric.to_string()),
            ("train.batch_size", batch(self.train.batch_size)),
            ("train.shuffle", self.train.shuffle.to_string()),
            ("solver.kind", s.kind.to_string()),
            ("solver.max_epochs", s.max_epochs.to_string()),
            ("solver.learning_rate", s.learning_rate.to_string()),
            ("solver.schedule", sched.to_string()),
            ("solver.schedule_factor", factor.to_string()),
            ("solver.schedule_every", every.to_string()),
            ("solver.final_rate", final_rate.to_string()),
            ("solver.decay_epochs", decay.to_string()),
            ("solver.weight_decay", s.weight_decay.to_string()),
            ("solver.momentum", s.momentum.to_string()),
            ("solver.beta1", s.beta1.to_string()),
            ("solver.beta2", s.beta2.to_string()),
            ("solver.epsilon", s.epsilon.to_string()),
            ("solver.lbfgs_history", s.lbfgs_history.to_string()),
            ("solver.precond_history", s.precond_history.to_string()),
            ("solver.precondition", s.precondition.to_string()),
            ("solver.cg_max_iters", s.cg_max_iters.to_string()),
            ("solver.armijo_c1", s.armijo.c1.to_string()),
            ("solver.armijo_factor", s.armijo.factor.to_string()),
            ("solver.armijo_max_trials", s.armijo.max_trials.to_string()),
            ("solver.forcing", forcing.to_string()),
            ("solver.nu0", s.forcing.nu0.to_string()),
            ("solver.nu_min", s.forcing.nu_min.to_string()),
            ("solver.nu_max", s.forcing.nu_max.to_string()),
            ("solver.forcing_gamma", s.forcing.gamma.to_string()),
            ("solver.forcing_alpha", s.forcing.alpha.to_string()),
            ("solver.tr_delta0", s.tr.delta0.to_string()),
            ("solver.tr_delta_max", s.tr.delta_max.to_string()),
            ("solver.tr_accept", s.tr.accept.to_string()),
            ("solver.tr_shrink_below", s.tr.shrink_below.to_string()),
            ("solver.tr_shrink_factor", s.tr.shrink_factor.to_string()),
            ("solver.tr_grow_above", s.tr.grow_above.to_string()),
            ("solver.tr_grow_factor", s.tr.grow_factor.to_string()),
            ("solver.tr_radius_floor", s.tr.radius_floor.to_string()),
            ("solver.tr_inner_rtol", s.tr.inner_rtol.to_string()),
            ("solver.tr_norm", norm.to_string()),
            ("solver.max_oracle_calls", s.max_oracle_calls.map_or("none".into(), |b| b.to_string())),
            ("solver.grad_rtol", s.grad_rtol.to_string()),
            ("hybrid.reference", self.hybrid.as_ref().map_or("none".into(), |h| h.reference.to_string())),
            ("hybrid.epochs", self.hybrid.as_ref().map_or(10, |h| h.epochs).to_string()),
            ("hybrid.batch_size", self.hybrid.as_ref().map_or("auto".into(), |h| batch(h.batch_size))),
        ];
        let mut out = String::new();
        for (key, value) in pairs {
            debug_assert!(spec_of(key).is_some(), "{key}");
            writeln!(out, "{key} = {value}").unwrap();
        }
        out
    }

    /// Writes the resolved configuration to `<out_dir>/config.resolved`.
    pub fn echo(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| HarnessError::io(format!("creating {}", self.out_dir.display()), e))?;
        let path = self.out_dir.join("config.resolved");
        std::fs::write(&path, self.to_text()).map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }
}

/// Documented key reference, one `key = default  # doc` line per key.
pub fn key_reference() -> String {
    let mut out = String::new();
    for s in KEYS {
        writeln!(out, "{} = {}  # {}", s.key, s.default, s.doc).unwrap();
    }
    out
}
