use crate::objective::{COST_GRADIENT, COST_HVP_EXACT, COST_HVP_GAUSS_NEWTON, COST_OBJECTIVE};

/// Fractional oracle-call accumulator.
///
/// Every event costs `category_cost * batch_rows / dataset_rows`. The sum is
/// kept as an exact integer numerator over `dataset_rows`, so the reported
/// total never drifts from the per-event definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCounter {
    dataset_rows: u64,
    units: u64,
    pub n_obj: u64,
    pub n_grad: u64,
    pub n_hvp_exact: u64,
    pub n_hvp_gn: u64,
}

/// Point-in-time copy of the counter, used for per-epoch deltas.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleSnapshot {
    pub calls: f64,
    pub n_obj: u64,
    pub n_grad: u64,
    pub n_hvp_exact: u64,
    pub n_hvp_gn: u64,
}

impl OracleSnapshot {
    pub fn n_hvp(&self) -> u64 {
        self.n_hvp_exact + self.n_hvp_gn
    }
}

impl OracleCounter {
    pub fn new(dataset_rows: usize) -> Self {
        OracleCounter {
            dataset_rows: dataset_rows.max(1) as u64,
            units: 0,
            n_obj: 0,
            n_grad: 0,
            n_hvp_exact: 0,
            n_hvp_gn: 0,
        }
    }

    pub fn accumulated_calls(&self) -> f64 {
        self.units as f64 / self.dataset_rows as f64
    }

    fn charge(&mut self, cost: u64, batch_rows: usize) {
        self.units += cost * batch_rows as u64;
    }

    pub fn record_objective(&mut self, batch_rows: usize) {
        self.n_obj += 1;
        self.charge(COST_OBJECTIVE, batch_rows);
    }

    pub fn record_gradient(&mut self, batch_rows: usize) {
        self.n_grad += 1;
        self.charge(COST_GRADIENT, batch_rows);
    }

    pub fn record_hvp_exact(&mut self, batch_rows: usize) {
        self.n_hvp_exact += 1;
        self.charge(COST_HVP_EXACT, batch_rows);
    }

    pub fn record_hvp_gauss_newton(&mut self, batch_rows: usize) {
        self.n_hvp_gn += 1;
        self.charge(COST_HVP_GAUSS_NEWTON, batch_rows);
    }

    pub fn snapshot(&self) -> OracleSnapshot {
        OracleSnapshot {
            calls: self.accumulated_calls(),
            n_obj: self.n_obj,
            n_grad: self.n_grad,
            n_hvp_exact: self.n_hvp_exact,
            n_hvp_gn: self.n_hvp_gn,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_batch_costs() {
        let mut c = OracleCounter::new(50);
        c.record_objective(50);
        assert_eq!(c.accumulated_calls(), 1.0);
        c.record_gradient(50);
        assert_eq!(c.accumulated_calls(), 3.0);
        c.record_hvp_exact(50);
        assert_eq!(c.accumulated_calls(), 7.0);
        c.record_hvp_gauss_newton(50);
        assert_eq!(c.accumulated_calls(), 9.0);
        assert_eq!((c.n_obj, c.n_grad, c.n_hvp_exact, c.n_hvp_gn), (1, 1, 1, 1));
    }

    #[test]
    fn mini_batch_scaling() {
        let mut c = OracleCounter::new(200);
        c.record_hvp_gauss_newton(20);
        assert_eq!(c.accumulated_calls(), 0.2);
        // an epoch of 10 mini-batch gradients costs exactly 2 calls
        let mut c = OracleCounter::new(200);
        for _ in 0..10 {
            c.record_gradient(20);
        }
        assert_eq!(c.accumulated_calls(), 2.0);
    }

    #[test]
    fn ragged_epoch_sums_exactly() {
        let mut c = OracleCounter::new(7);
        for b in [3, 3, 1] {
            c.record_gradient(b);
        }
        assert_eq!(c.accumulated_calls(), 2.0);
    }
}
