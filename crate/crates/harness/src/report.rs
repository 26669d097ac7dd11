//! CSV convergence logs, comparison tables and the Green's kernel report.

use std::fmt::Write as _;
use std::path::Path;

use sciopt_core::objective::{Dataset, MetricKind};
use sciopt_core::problems::analytic_green_1d;
use sciopt_core::solvers::EpochRecord;
use sciopt_core::tensor::{DenseMatrix, Precision};

use crate::error::{HarnessError, Result};
use crate::session::{unit_grid, Session};

pub const CSV_HEADER: &str =
    "epoch,oracle_calls,train_loss,test_metric,n_obj,n_grad,n_hvp,step_accepted,solver_internal,wall_seconds";

/// Decimal text of a logged real: 9 significant digits in single precision,
/// shortest round-trip form in double.
pub fn fmt_real(x: f64, precision: Precision) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    match precision {
        Precision::F32 => format!("{x:.8e}"),
        Precision::F64 => format!("{x}"),
    }
}

pub fn csv_row(r: &EpochRecord, precision: Precision) -> String {
    let f = |x: f64| fmt_real(x, precision);
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.epoch,
        f(r.oracle_calls),
        f(r.train_loss),
        r.test_metric.map_or(String::new(), f),
        r.n_obj,
        r.n_grad,
        r.n_hvp,
        u8::from(r.step_accepted),
        f(r.solver_internal),
        f(r.wall_seconds),
    )
}

/// CSV text; with `prefix` each row starts with extra leading columns.
pub fn csv_text(records: &[EpochRecord], precision: Precision, prefix: Option<(&str, &str)>) -> String {
    let mut out = String::new();
    match prefix {
        Some((head, _)) => writeln!(out, "{head},{CSV_HEADER}").unwrap(),
        None => writeln!(out, "{CSV_HEADER}").unwrap(),
    }
    for r in records {
        match prefix {
            Some((_, value)) => writeln!(out, "{value},{}", csv_row(r, precision)).unwrap(),
            None => writeln!(out, "{}", csv_row(r, precision)).unwrap(),
        }
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

/// Drops the trailing `wall_seconds` column of every line.
pub fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Learned kernel against the exact Green's function of `-u'' = f` with zero
/// Dirichlet conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenReport {
    pub nodes: usize,
    pub kernel_max_abs_error: f64,
    pub kernel_rel_fro_error: f64,
    pub learned_metric: f64,
    pub analytic_metric: f64,
    pub quadrature_bound: f64,
}

impl GreenReport {
    pub fn within_bound(&self) -> bool {
        self.analytic_metric <= self.quadrature_bound
    }

    pub fn text(&self) -> String {
        format!(
            "nodes = {}\nkernel_max_abs_error = {:e}\nkernel_rel_fro_error = {:e}\nlearned_test_metric = {:e}\n\
             analytic_test_metric = {:e}\nquadrature_bound = {:e}\nanalytic_within_bound = {}\n",
            self.nodes,
            self.kernel_max_abs_error,
            self.kernel_rel_fro_error,
            self.learned_metric,
            self.analytic_metric,
            self.quadrature_bound,
            self.within_bound()
        )
    }
}

/// Exact kernel sampled on the unit grid of `n` nodes.
pub fn analytic_kernel(n: usize) -> DenseMatrix {
    let x = unit_grid(n);
    DenseMatrix::from_fn(n, n, |j, k| analytic_green_1d(x[j], x[k]))
}

/// Bound on the test metric of the exact kernel under the model's quadrature:
/// per node `2 h^2 / 12 (max|f''| / 4 + 2 max|f'|)` plus target rounding.
pub fn quadrature_bound(test: &Dataset, metric: MetricKind, precision: Precision) -> f64 {
    let n = test.x.cols();
    let h = 1.0 / (n - 1) as f64;
    let eps = match precision {
        Precision::F32 => f32::EPSILON as f64,
        Precision::F64 => f64::EPSILON,
    };
    let mut total = 0.0;
    for i in 0..test.len() {
        let f = test.x.row(i);
        let u = test.y.row(i);
        let d1 = f.windows(2).map(|w| ((w[1] - w[0]) / h).abs()).fold(0.0, f64::max);
        let d2 = f
            .windows(3)
            .map(|w| ((w[2] - 2.0 * w[1] + w[0]) / (h * h)).abs())
            .fold(0.0, f64::max);
        let pointwise = 2.0 * h * h / 12.0 * (d2 / 4.0 + 2.0 * d1);
        let u_max = u.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
        let err_norm = (n as f64).sqrt() * (pointwise + 4.0 * eps * u_max.max(1.0));
        let u_norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        total += match metric {
            MetricKind::Mse => err_norm * err_norm,
            MetricKind::MeanSquaredRelL2 => (err_norm / u_norm).powi(2),
            MetricKind::MeanRelL2 => err_norm / u_norm,
        };
    }
    total / test.len().max(1) as f64
}

/// Compares the learned kernel of a green-1d session with the exact one.
pub fn green_report(session: &Session, theta: &[f64]) -> Result<GreenReport> {
    let model = &session.eval_model;
    let test = &session.splits.test;
    let metric = session.cfg.train.metric;
    let learned = model.learned_kernel(theta)?;
    let n = learned.rows();
    let exact = analytic_kernel(n);
    let mut max_abs: f64 = 0.0;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in learned.data().iter().zip(exact.data()) {
        max_abs = max_abs.max((a - b).abs());
        num += (a - b) * (a - b);
        den += b * b;
    }
    let learned_metric = session.metric(theta, test, metric)?;
    let analytic_pred = model.apply_kernel(theta, &exact, &test.x)?;
    let analytic_metric = metric.evaluate(&analytic_pred, &test.y)?;
    Ok(GreenReport {
        nodes: n,
        kernel_max_abs_error: max_abs,
        kernel_rel_fro_error: (num / den).sqrt(),
        learned_metric,
        analytic_metric,
        quadrature_bound: quadrature_bound(test, metric, session.cfg.precision),
    })
}

/// Renders rows as a left-aligned table with a header.
pub fn aligned_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    writeln!(out, "{}", line(header.to_vec())).unwrap();
    for row in rows {
        writeln!(out, "{}", line(row.iter().map(String::as_str).collect())).unwrap();
    }
    out
}
