use crate::error::{Error, Result};
use crate::tensor::{dot, sym_eig, DenseMatrix};

/// Proper orthogonal decomposition of a set of output fields.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub mean: Vec<f64>,
    /// `grid x n`, orthonormal columns.
    pub basis: DenseMatrix,
    pub n: usize,
    /// Captured share of the centered snapshot energy.
    pub energy_fraction: f64,
    /// All eigenvalues of the centered Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
}

/// Relative eigenvalue threshold below which modes count as null.
const RANK_TOL: f64 = 1e-12;

type Spectrum = (Vec<f64>, DenseMatrix, DenseMatrix, Vec<f64>);

/// Mean, centered snapshots, Gram eigenvectors and clipped eigenvalues.
fn snapshot_spectrum(outputs: &DenseMatrix) -> Result<Spectrum> {
    if outputs.rows() == 0 {
        return Err(Error::Dimension("POD needs at least one snapshot".into()));
    }
    let mean = outputs.column_mean();
    let centered = DenseMatrix::from_fn(outputs.rows(), outputs.cols(), |i, j| outputs.get(i, j) - mean[j]);
    let gram = centered.matmul_bt(&centered)?;
    let eig = sym_eig(&gram)?;
    let values = eig.values.iter().map(|v| v.max(0.0)).collect();
    Ok((mean, centered, eig.vectors, values))
}

fn rank_of(values: &[f64]) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    values.iter().take_while(|v| **v > RANK_TOL * top && **v > 0.0).count()
}

/// Method of snapshots: the top `n_modes` eigenvectors of the centered Gram
/// matrix mapped to field space and normalized.
pub fn compute_pod(outputs: &DenseMatrix, n_modes: usize) -> Result<PodBasis> {
    pod_from_spectrum(snapshot_spectrum(outputs)?, n_modes)
}

fn pod_from_spectrum((mean, centered, vectors, values): Spectrum, n_modes: usize) -> Result<PodBasis> {
    let rank = rank_of(&values);
    if n_modes > rank {
        return Err(Error::PodRank {
            requested: n_modes,
            rank,
        });
    }
    let grid = centered.cols();
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(n_modes);
    for k in 0..n_modes {
        let v = vectors.column(k);
        let scale = values[k].sqrt();
        let mut phi: Vec<f64> = (0..grid)
            .map(|j| (0..centered.rows()).map(|i| centered.get(i, j) * v[i]).sum::<f64>() / scale)
            .collect();
        // Re-orthogonalize against earlier modes to hold orthonormality at roundoff level.
        for _ in 0..2 {
            for m in &modes {
                let p = dot(&phi, m);
                phi.iter_mut().zip(m).for_each(|(a, b)| *a -= p * b);
            }
            let nrm = dot(&phi, &phi).sqrt();
            phi.iter_mut().for_each(|a| *a /= nrm);
        }
        modes.push(phi);
    }
    let total: f64 = values.iter().sum();
    let captured: f64 = values[..n_modes].iter().sum();
    Ok(PodBasis {
        mean,
        basis: DenseMatrix::from_fn(grid, n_modes, |j, k| modes[k][j]),
        n: n_modes,
        energy_fraction: if total > 0.0 { captured / total } else { 1.0 },
        eigenvalues: values,
    })
}

/// Smallest mode count reaching `energy` (a fraction), capped at `cap` and at
/// the numerical rank.
pub fn select_pod_modes(outputs: &DenseMatrix, energy: f64, cap: usize) -> Result<PodBasis> {
    let spectrum = snapshot_spectrum(outputs)?;
    let values = &spectrum.3;
    let rank = rank_of(values);
    let total: f64 = values.iter().sum();
    let mut acc = 0.0;
    let mut n = rank;
    for (k, v) in values.iter().enumerate().take(rank) {
        acc += v;
        if acc >= energy * total {
            n = k + 1;
            break;
        }
    }
    pod_from_spectrum(spectrum, if rank == 0 { 0 } else { n.min(cap).max(1) })
}

impl PodBasis {
    /// Coefficients `basis^T (row - mean)` for every row.
    pub fn project(&self, outputs: &DenseMatrix) -> Result<DenseMatrix> {
        let centered = DenseMatrix::from_fn(outputs.rows(), outputs.cols(), |i, j| outputs.get(i, j) - self.mean[j]);
        centered.matmul(&self.basis)
    }

    /// `mean + basis * coeffs` for every coefficient row.
    pub fn expand(&self, coeffs: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = coeffs.matmul_bt(&self.basis)?;
        for i in 0..out.rows() {
            out.row_mut(i).iter_mut().zip(&self.mean).for_each(|(a, m)| *a += m);
        }
        Ok(out)
    }
}
