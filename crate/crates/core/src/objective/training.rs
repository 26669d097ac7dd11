use crate::error::{Error, Result};
use crate::network::{Linearization, Model};
use crate::objective::loss::BatchLoss;
use crate::objective::{BatchLoader, Dataset, LossKind, MetricKind, MinimizationProblem, OracleCounter};
use crate::tensor::{DenseMatrix, DenseVector};

#[derive(Debug, Clone)]
struct Batch {
    x: DenseMatrix,
    loss: BatchLoss,
}

/// Supervised training objective `f(theta) = (1/B) sum_i L(y(theta, x_i), t_i)`
/// over the loader's current batch.
#[derive(Debug, Clone)]
pub struct TrainingFunction {
    model: Model,
    loss: LossKind,
    train: Dataset,
    loader: BatchLoader,
    counter: OracleCounter,
    batch: Batch,
    /// Full training set, kept for uncounted loss evaluations.
    full: Batch,
    /// Forward pass of the last curvature product; valid for the current batch.
    lin: Option<Linearization>,
}

impl TrainingFunction {
    pub fn new(model: Model, loss: LossKind, train: Dataset, mut loader: BatchLoader) -> Result<Self> {
        if train.x.cols() != model.input_width() || train.y.cols() != model.output_width() {
            return Err(Error::Dimension(format!(
                "dataset is {}->{} but model is {}->{}",
                train.x.cols(),
                train.y.cols(),
                model.input_width(),
                model.output_width()
            )));
        }
        if loss.is_relative() {
            train.validate_relative()?;
        }
        let full = Batch {
            x: train.x.clone(),
            loss: BatchLoss::new(loss, train.y.clone())?,
        };
        let idx = loader.seek(0).to_vec();
        let batch = Self::make_batch(&train, loss, &idx, &full)?;
        Ok(TrainingFunction {
            counter: OracleCounter::new(train.len()),
            model,
            loss,
            train,
            loader,
            batch,
            full,
            lin: None,
        })
    }

    fn make_batch(train: &Dataset, loss: LossKind, idx: &[usize], full: &Batch) -> Result<Batch> {
        if idx.len() == train.len() && idx.iter().enumerate().all(|(i, &j)| i == j) {
            return Ok(full.clone());
        }
        let sub = train.subset(idx);
        Ok(Batch {
            loss: BatchLoss::new(loss, sub.y)?,
            x: sub.x,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    pub fn loader(&self) -> &BatchLoader {
        &self.loader
    }

    /// Swaps the batch schedule (e.g. when a hybrid run changes solver); the
    /// oracle counter carries over.
    pub fn set_loader(&mut self, mut loader: BatchLoader) -> Result<()> {
        let idx = loader.seek(0).to_vec();
        self.batch = Self::make_batch(&self.train, self.loss, &idx, &self.full)?;
        self.loader = loader;
        self.lin = None;
        Ok(())
    }

    fn relinearize(&mut self, theta: &[f64]) -> Result<()> {
        let rows = self.batch.x.rows();
        if !self.lin.as_ref().is_some_and(|l| l.matches(theta, rows)) {
            self.lin = Some(self.model.linearize(theta, &self.batch.x)?);
        }
        Ok(())
    }

    pub fn current_batch_rows(&self) -> usize {
        self.batch.loss.rows()
    }

    pub fn predict(&self, theta: &[f64], x: &DenseMatrix) -> Result<DenseMatrix> {
        self.model.forward(theta, x)
    }

    /// Metric over an entire dataset; never charged to the counter.
    pub fn metric(&self, theta: &[f64], dataset: &Dataset, kind: MetricKind) -> Result<f64> {
        let pred = self.model.forward(theta, &dataset.x)?;
        kind.evaluate(&pred, &dataset.y)
    }
}

impl MinimizationProblem for TrainingFunction {
    fn dim(&self) -> usize {
        self.model.n_params()
    }

    fn objective(&mut self, theta: &[f64]) -> Result<f64> {
        let pred = self.model.forward(theta, &self.batch.x)?;
        self.counter.record_objective(self.batch.loss.rows());
        Ok(self.batch.loss.value(&pred))
    }

    fn gradient(&mut self, theta: &[f64]) -> Result<DenseVector> {
        let loss = &self.batch.loss;
        let (_, grad) = self
            .model
            .value_and_vjp(theta, &self.batch.x, |y| crate::network::OutputCurvature::cotangent(loss, y))?;
        self.counter.record_gradient(self.batch.loss.rows());
        Ok(grad)
    }

    fn hvp_exact(&mut self, theta: &[f64], v: &[f64]) -> Result<DenseVector> {
        self.relinearize(theta)?;
        let lin = self.lin.as_ref().expect("just set");
        let hv = self.model.hvp_at(lin, &self.batch.x, v, &self.batch.loss)?;
        self.counter.record_hvp_exact(self.batch.loss.rows());
        Ok(hv)
    }

    fn hvp_gauss_newton(&mut self, theta: &[f64], v: &[f64]) -> Result<DenseVector> {
        self.relinearize(theta)?;
        let lin = self.lin.as_ref().expect("just set");
        let hv = self.model.hvp_gauss_newton_at(lin, &self.batch.x, v, &self.batch.loss)?;
        self.counter.record_hvp_gauss_newton(self.batch.loss.rows());
        Ok(hv)
    }

    fn update(&mut self, step: usize) {
        let full = self.loader.is_full_batch();
        let idx = self.loader.seek(step).to_vec();
        if full {
            return;
        }
        self.batch = Self::make_batch(&self.train, self.loss, &idx, &self.full)
            .expect("targets validated at construction");
        self.lin = None;
    }

    fn counter(&self) -> &OracleCounter {
        &self.counter
    }

    fn steps_per_epoch(&self) -> usize {
        self.loader.batches_per_epoch()
    }

    fn is_full_batch(&self) -> bool {
        self.loader.is_full_batch()
    }

    fn train_loss(&self, theta: &[f64]) -> Result<f64> {
        let pred = self.model.forward(theta, &self.full.x)?;
        Ok(self.full.loss.value(&pred))
    }
}
