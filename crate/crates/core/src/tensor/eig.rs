use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: DenseMatrix,
}

const SYMMETRY_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for symmetric matrices.
pub fn sym_eig(a: &DenseMatrix) -> Result<SymEig> {
    let asym = a.asymmetry()?;
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let n = a.rows();
    // symmetrize so rounding-level asymmetry cannot bias the rotations
    let mut m = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
    let mut v = DenseMatrix::identity(n);
    let scale = m.frobenius();

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m.get(p, q) * m.get(p, q);
            }
        }
        if off.sqrt() <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_columns(&mut m, p, q, c, s);
                rotate_rows(&mut m, p, q, c, s);
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok(SymEig { values, vectors })
}

fn rotate_columns(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.rows() {
        let mkp = m.get(k, p);
        let mkq = m.get(k, q);
        m.set(k, p, c * mkp - s * mkq);
        m.set(k, q, s * mkp + c * mkq);
    }
}

fn rotate_rows(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.cols() {
        let mpk = m.get(p, k);
        let mqk = m.get(q, k);
        m.set(p, k, c * mpk - s * mqk);
        m.set(q, k, s * mpk + c * mqk);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::RngState;

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = RngState::new(seed);
        let g = rng.gaussian(n * n);
        DenseMatrix::from_fn(n, n, |i, j| g[i * n + j] + g[j * n + i])
    }

    #[test]
    fn identity_and_diagonal() {
        let e = sym_eig(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);

        let d = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let e = sym_eig(&d).unwrap();
        assert_eq!(e.values, vec![4.0, 1.0]);
        assert_eq!(e.vectors.column(0), vec![0.0, 1.0]);
        assert_eq!(e.vectors.column(1), vec![1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            sym_eig(&DenseMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for seed in 0..5 {
            let n = 10;
            let a = random_symmetric(n, seed);
            let e = sym_eig(&a).unwrap();
            let norm_a = a.frobenius();
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));

            let vt_v = e.vectors.matmul_at(&e.vectors).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((vt_v.get(i, j) - target).abs() <= 1e-10);
                }
            }

            let lambda = DenseMatrix::from_fn(n, n, |i, j| if i == j { e.values[i] } else { 0.0 });
            let recon = e.vectors.matmul(&lambda).unwrap().matmul_bt(&e.vectors).unwrap();
            for (x, y) in recon.data().iter().zip(a.data()) {
                assert!((x - y).abs() <= 1e-10 * norm_a.max(1.0));
            }

            for k in 0..n {
                let vk = e.vectors.column(k);
                let av = a.matvec(&vk).unwrap();
                let res: f64 = av
                    .iter()
                    .zip(&vk)
                    .map(|(x, v)| (x - e.values[k] * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-10 * norm_a, "pair {k}: residual {res}");
            }
        }
    }
}
