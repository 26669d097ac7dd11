use crate::error::{Error, Result};
use crate::tensor::{DenseMatrix, RngState};

/// Paired input/output samples, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: DenseMatrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::Dimension(format!(
                "{} input rows vs {} output rows",
                x.rows(),
                y.rows()
            )));
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rejects zero-norm target rows, which relative losses cannot handle.
    pub fn validate_relative(&self) -> Result<()> {
        match super::loss::first_zero_row(&self.y) {
            Some(row) => Err(Error::ZeroNormTarget { row }),
            None => Ok(()),
        }
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: self.y.select_rows(rows),
        }
    }
}

/// Mini-batch iteration over a dataset.
///
/// An epoch is `ceil(N / b)` consecutive batches that partition the samples.
/// With shuffling, the order is redrawn at the start of every epoch from the
/// loader's own stream.
#[derive(Debug, Clone)]
pub struct BatchLoader {
    n: usize,
    batch_size: usize,
    shuffle: bool,
    rng: RngState,
    order: Vec<usize>,
    epoch: Option<usize>,
    position: usize,
}

impl BatchLoader {
    pub fn new(n: usize, batch_size: usize, shuffle: bool, rng: RngState) -> Self {
        let batch_size = batch_size.clamp(1, n.max(1));
        BatchLoader {
            n,
            batch_size,
            shuffle,
            rng,
            order: (0..n).collect(),
            epoch: None,
            position: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        Self::new(n, n, false, RngState::new(0))
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn is_full_batch(&self) -> bool {
        self.batch_size >= self.n
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.n.div_ceil(self.batch_size).max(1)
    }

    pub fn epoch(&self) -> usize {
        self.epoch.unwrap_or(0)
    }

    /// Positions the loader on the batch for solver step `step` and returns
    /// its sample indices.
    pub fn seek(&mut self, step: usize) -> &[usize] {
        let per_epoch = self.batches_per_epoch();
        let epoch = step / per_epoch;
        while self.epoch.is_none_or(|e| e < epoch) {
            self.epoch = Some(self.epoch.map_or(0, |e| e + 1));
            if self.shuffle && !self.is_full_batch() {
                self.rng.shuffle(&mut self.order);
            }
        }
        self.position = step % per_epoch;
        self.current()
    }

    pub fn current(&self) -> &[usize] {
        let start = self.position * self.batch_size;
        let end = (start + self.batch_size).min(self.n);
        &self.order[start..end]
    }
}
