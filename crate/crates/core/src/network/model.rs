use crate::error::{Error, Result};
use crate::network::mlp::{Mlp, MlpSpec, TangentTape, Tape};
use crate::tensor::{DenseMatrix, DenseVector, ParamLayout, RngState};

/// Model families used by the surrogate problems.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// `y = mlp(x)`.
    Plain(MlpSpec),
    /// `y = pod_mean + pod_basis * branch(u)`; the basis (grid x n) and mean
    /// are frozen.
    BranchPod {
        branch: MlpSpec,
        pod_basis: DenseMatrix,
        pod_mean: Vec<f64>,
    },
    /// `u(x_j) = w * sum_k kernel(x_j, y_k) f(y_k) + homogeneous(x_j)`, with the
    /// quadrature nodes serving as both evaluation and integration points.
    GreenKernel {
        kernel_net: MlpSpec,
        homogeneous_net: Option<MlpSpec>,
        quadrature_nodes: Vec<f64>,
        quadrature_weight: f64,
    },
}

/// Output-space loss derivatives needed by the second-order passes: the
/// cotangent `dL/dy` and the action of `d^2L/dy^2`.
pub trait OutputCurvature {
    fn cotangent(&self, y: &DenseMatrix) -> DenseMatrix;
    fn hessian_apply(&self, dy: &DenseMatrix) -> DenseMatrix;
}

/// A flat parameter vector together with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub theta: DenseVector,
    pub layout: ParamLayout,
}

#[derive(Debug, Clone)]
enum Variant {
    Plain(Mlp),
    BranchPod {
        branch: Mlp,
        basis: DenseMatrix,
        /// `basis^T`, so that decoding streams along grid rows.
        basis_t: DenseMatrix,
        mean: Vec<f64>,
    },
    Green {
        kernel: Mlp,
        homogeneous: Option<Mlp>,
        weight: f64,
        /// (x_j, y_k) for all j, k: row `j * n + k`.
        pairs: DenseMatrix,
        /// x_j as an `n x 1` input.
        nodes: DenseMatrix,
    },
}

/// A compiled model: validated spec plus parameter layout.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    variant: Variant,
    layout: ParamLayout,
    /// Offset of the homogeneous net's parameters (green kernel only).
    split: usize,
}

impl Model {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let mut layout = ParamLayout::new();
        let mut split = 0;
        let variant = match spec {
            ModelSpec::Plain(mlp) => {
                let net = Mlp::new(mlp)?;
                layout.extend_prefixed("", net.layout());
                Variant::Plain(net)
            }
            ModelSpec::BranchPod {
                branch,
                pod_basis,
                pod_mean,
            } => {
                let net = Mlp::new(branch)?;
                if pod_basis.cols() != branch.output_width() {
                    return Err(Error::InvalidSpec(format!(
                        "branch output width {} but POD basis has {} columns",
                        branch.output_width(),
                        pod_basis.cols()
                    )));
                }
                if pod_mean.len() != pod_basis.rows() {
                    return Err(Error::InvalidSpec(format!(
                        "POD mean length {} but basis has {} rows",
                        pod_mean.len(),
                        pod_basis.rows()
                    )));
                }
                layout.extend_prefixed("branch.", net.layout());
                Variant::BranchPod {
                    branch: net,
                    basis: pod_basis.clone(),
                    basis_t: pod_basis.transpose(),
                    mean: pod_mean.clone(),
                }
            }
            ModelSpec::GreenKernel {
                kernel_net,
                homogeneous_net,
                quadrature_nodes,
                quadrature_weight,
            } => {
                if kernel_net.input_width() != 2 || kernel_net.output_width() != 1 {
                    return Err(Error::InvalidSpec(
                        "kernel net must map 2 inputs (x, y) to 1 output".into(),
                    ));
                }
                let kernel = Mlp::new(kernel_net)?;
                layout.extend_prefixed("kernel.", kernel.layout());
                split = layout.total_len();
                let homogeneous = match homogeneous_net {
                    Some(h) => {
                        if h.input_width() != 1 || h.output_width() != 1 {
                            return Err(Error::InvalidSpec(
                                "homogeneous net must map 1 input to 1 output".into(),
                            ));
                        }
                        let net = Mlp::new(h)?;
                        layout.extend_prefixed("homogeneous.", net.layout());
                        Some(net)
                    }
                    None => None,
                };
                let n = quadrature_nodes.len();
                if n == 0 {
                    return Err(Error::InvalidSpec("no quadrature nodes".into()));
                }
                let pairs = DenseMatrix::from_fn(n * n, 2, |r, c| {
                    if c == 0 {
                        quadrature_nodes[r / n]
                    } else {
                        quadrature_nodes[r % n]
                    }
                });
                let nodes = DenseMatrix::from_fn(n, 1, |r, _| quadrature_nodes[r]);
                Variant::Green {
                    kernel,
                    homogeneous,
                    weight: *quadrature_weight,
                    pairs,
                    nodes,
                }
            }
        };
        Ok(Model {
            spec: spec.clone(),
            variant,
            layout,
            split,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.total_len()
    }

    pub fn input_width(&self) -> usize {
        match &self.variant {
            Variant::Plain(n) => n.spec().input_width(),
            Variant::BranchPod { branch, .. } => branch.spec().input_width(),
            Variant::Green { nodes, .. } => nodes.rows(),
        }
    }

    pub fn output_width(&self) -> usize {
        match &self.variant {
            Variant::Plain(n) => n.spec().output_width(),
            Variant::BranchPod { basis, .. } => basis.rows(),
            Variant::Green { nodes, .. } => nodes.rows(),
        }
    }

    pub fn init_params(&self, rng: &mut RngState) -> Parameters {
        let mut theta = DenseVector::zeros(self.n_params());
        match &self.variant {
            Variant::Plain(net) | Variant::BranchPod { branch: net, .. } => net.init_into(rng, &mut theta),
            Variant::Green {
                kernel, homogeneous, ..
            } => {
                let (k, h) = theta.split_at_mut(self.split);
                kernel.init_into(rng, k);
                if let Some(hn) = homogeneous {
                    hn.init_into(rng, h);
                }
            }
        }
        Parameters {
            theta,
            layout: self.layout.clone(),
        }
    }

    fn check(&self, theta: &[f64], x: &DenseMatrix) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                actual: theta.len(),
            });
        }
        if x.cols() != self.input_width() {
            return Err(Error::Dimension(format!(
                "model expects {} input columns, got {}",
                self.input_width(),
                x.cols()
            )));
        }
        Ok(())
    }

    fn check_output(&self, x: &DenseMatrix, m: &DenseMatrix, what: &str) -> Result<()> {
        if m.rows() != x.rows() || m.cols() != self.output_width() {
            return Err(Error::Dimension(format!(
                "{what} has shape {:?}, expected ({}, {})",
                m.shape(),
                x.rows(),
                self.output_width()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, theta: &[f64], x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(theta, x)?;
        Ok(self.forward_state(theta, x)?.output)
    }

    /// `sum_i (d y_i / d theta)^T cot_i`.
    pub fn vjp(&self, theta: &[f64], x: &DenseMatrix, cot: &DenseMatrix) -> Result<DenseVector> {
        self.check(theta, x)?;
        self.check_output(x, cot, "cotangent")?;
        let state = self.forward_state(theta, x)?;
        Ok(self.backward(theta, x, &state, cot))
    }

    /// `J v`.
    pub fn jvp(&self, theta: &[f64], x: &DenseMatrix, v: &[f64]) -> Result<DenseMatrix> {
        self.check(theta, x)?;
        if v.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                actual: v.len(),
            });
        }
        let state = self.forward_state(theta, x)?;
        Ok(self.tangent(theta, x, &state, v).doutput)
    }

    /// Forward output together with the gradient for a cotangent computed
    /// from that output.
    pub fn value_and_vjp(
        &self,
        theta: &[f64],
        x: &DenseMatrix,
        cot_of: impl FnOnce(&DenseMatrix) -> DenseMatrix,
    ) -> Result<(DenseMatrix, DenseVector)> {
        self.check(theta, x)?;
        let state = self.forward_state(theta, x)?;
        let cot = cot_of(&state.output);
        self.check_output(x, &cot, "cotangent")?;
        let grad = self.backward(theta, x, &state, &cot);
        Ok((state.output, grad))
    }

    /// Exact Hessian-vector product of `theta -> L(model(theta, x))` by
    /// forward-over-reverse differentiation.
    pub fn hvp(
        &self,
        theta: &[f64],
        x: &DenseMatrix,
        v: &[f64],
        loss: &dyn OutputCurvature,
    ) -> Result<DenseVector> {
        self.check(theta, x)?;
        if v.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                actual: v.len(),
            });
        }
        let lin = self.linearize(theta, x)?;
        self.hvp_at(&lin, x, v, loss)
    }

    /// Forward pass at `theta` kept for repeated [`Model::hvp_at`] and
    /// [`Model::hvp_gauss_newton_at`] calls.
    pub fn linearize(&self, theta: &[f64], x: &DenseMatrix) -> Result<Linearization> {
        self.check(theta, x)?;
        Ok(Linearization {
            theta: theta.to_vec(),
            rows: x.rows(),
            state: self.forward_state(theta, x)?,
        })
    }

    fn check_lin(&self, lin: &Linearization, x: &DenseMatrix, v: &[f64]) -> Result<()> {
        if lin.rows != x.rows() {
            return Err(Error::Dimension(format!(
                "linearization has {} rows, batch has {}",
                lin.rows,
                x.rows()
            )));
        }
        if v.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Exact Hessian-vector product at a stored linearization; `x` must be the
    /// batch it was taken on.
    pub fn hvp_at(
        &self,
        lin: &Linearization,
        x: &DenseMatrix,
        v: &[f64],
        loss: &dyn OutputCurvature,
    ) -> Result<DenseVector> {
        self.check_lin(lin, x, v)?;
        let theta = lin.theta.as_slice();
        let state = &lin.state;
        let tan = self.tangent(theta, x, state, v);
        let cot = loss.cotangent(&state.output);
        let dcot = loss.hessian_apply(&tan.doutput);
        let mut out = DenseVector::zeros(self.n_params());
        match (&self.variant, &state.tapes, &tan.tapes) {
            (Variant::Plain(net), Tapes::One(tape), TanTapes::One(tt)) => {
                net.backward_tangent(theta, tape, tt, v, &cot, &dcot, &mut out);
            }
            (Variant::BranchPod { branch, basis, .. }, Tapes::One(tape), TanTapes::One(tt)) => {
                let c = cot.matmul(basis).expect("shape checked");
                let dc = dcot.matmul(basis).expect("shape checked");
                branch.backward_tangent(theta, tape, tt, v, &c, &dc, &mut out);
            }
            (
                Variant::Green {
                    kernel,
                    homogeneous,
                    weight,
                    ..
                },
                Tapes::Green { kernel: kt, homogeneous: ht },
                TanTapes::Green { kernel: ktt, homogeneous: htt },
            ) => {
                let (kc, hc) = green_cotangents(*weight, x, &cot);
                let (dkc, dhc) = green_cotangents(*weight, x, &dcot);
                let (ko, ho) = out.split_at_mut(self.split);
                let (kth, hth) = theta.split_at(self.split);
                let (kv, hv) = v.split_at(self.split);
                kernel.backward_tangent(kth, kt, ktt, kv, &kc, &dkc, ko);
                if let (Some(hn), Some(ht), Some(htt)) = (homogeneous, ht, htt) {
                    hn.backward_tangent(hth, ht, htt, hv, &hc, &dhc, ho);
                }
            }
            _ => unreachable!("tape kind always matches the variant"),
        }
        Ok(out)
    }

    /// Gauss-Newton product `J^T H_L J v`.
    pub fn hvp_gauss_newton(
        &self,
        theta: &[f64],
        x: &DenseMatrix,
        v: &[f64],
        loss: &dyn OutputCurvature,
    ) -> Result<DenseVector> {
        self.check(theta, x)?;
        if v.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                actual: v.len(),
            });
        }
        let lin = self.linearize(theta, x)?;
        self.hvp_gauss_newton_at(&lin, x, v, loss)
    }

    /// Gauss-Newton product at a stored linearization.
    pub fn hvp_gauss_newton_at(
        &self,
        lin: &Linearization,
        x: &DenseMatrix,
        v: &[f64],
        loss: &dyn OutputCurvature,
    ) -> Result<DenseVector> {
        self.check_lin(lin, x, v)?;
        let theta = lin.theta.as_slice();
        let tan = self.tangent(theta, x, &lin.state, v);
        let hjv = loss.hessian_apply(&tan.doutput);
        Ok(self.backward(theta, x, &lin.state, &hjv))
    }

    /// Kernel values `kernel(x_j, y_k)` on the quadrature grid (green kernel only).
    pub fn learned_kernel(&self, theta: &[f64]) -> Result<DenseMatrix> {
        match &self.variant {
            Variant::Green { kernel, pairs, nodes, .. } => {
                let n = nodes.rows();
                let g = kernel.forward(&theta[..self.split], pairs)?;
                DenseMatrix::new(n, n, g.into_data())
            }
            _ => Err(Error::InvalidSpec("model has no Green's kernel".into())),
        }
    }

    /// Applies a given kernel matrix in place of the kernel net, keeping the
    /// model's quadrature weight and homogeneous term (green kernel only).
    pub fn apply_kernel(&self, theta: &[f64], kernel_matrix: &DenseMatrix, f: &DenseMatrix) -> Result<DenseMatrix> {
        match &self.variant {
            Variant::Green {
                homogeneous,
                weight,
                nodes,
                ..
            } => {
                let n = nodes.rows();
                if kernel_matrix.shape() != (n, n) || f.cols() != n {
                    return Err(Error::Dimension("kernel/forcing grid mismatch".into()));
                }
                let h = match homogeneous {
                    Some(hn) => Some(hn.forward(&theta[self.split..], nodes)?.into_data()),
                    None => None,
                };
                Ok(green_combine(*weight, f, kernel_matrix, h.as_deref()))
            }
            _ => Err(Error::InvalidSpec("model has no Green's kernel".into())),
        }
    }

    fn forward_state(&self, theta: &[f64], x: &DenseMatrix) -> Result<ForwardState> {
        match &self.variant {
            Variant::Plain(net) => {
                let tape = net.forward_tape(theta, x)?;
                Ok(ForwardState {
                    output: tape.output().clone(),
                    tapes: Tapes::One(tape),
                })
            }
            Variant::BranchPod {
                branch, basis_t, mean, ..
            } => {
                let tape = branch.forward_tape(theta, x)?;
                let mut output = tape.output().matmul(basis_t)?;
                for i in 0..output.rows() {
                    for (o, m) in output.row_mut(i).iter_mut().zip(mean) {
                        *o += m;
                    }
                }
                Ok(ForwardState {
                    output,
                    tapes: Tapes::One(tape),
                })
            }
            Variant::Green {
                kernel,
                homogeneous,
                weight,
                pairs,
                nodes,
            } => {
                let n = nodes.rows();
                let kt = kernel.forward_tape(&theta[..self.split], pairs)?;
                let kmat = DenseMatrix::new(n, n, kt.output().data().to_vec())?;
                let ht = match homogeneous {
                    Some(hn) => Some(hn.forward_tape(&theta[self.split..], nodes)?),
                    None => None,
                };
                let output = green_combine(*weight, x, &kmat, ht.as_ref().map(|t| t.output().data()));
                Ok(ForwardState {
                    output,
                    tapes: Tapes::Green {
                        kernel: kt,
                        homogeneous: ht,
                    },
                })
            }
        }
    }

    fn backward(&self, theta: &[f64], x: &DenseMatrix, state: &ForwardState, cot: &DenseMatrix) -> DenseVector {
        let mut grad = DenseVector::zeros(self.n_params());
        match (&self.variant, &state.tapes) {
            (Variant::Plain(net), Tapes::One(tape)) => net.backward(theta, tape, cot, &mut grad),
            (Variant::BranchPod { branch, basis, .. }, Tapes::One(tape)) => {
                let c = cot.matmul(basis).expect("shape checked");
                branch.backward(theta, tape, &c, &mut grad);
            }
            (
                Variant::Green {
                    kernel, homogeneous, weight, ..
                },
                Tapes::Green { kernel: kt, homogeneous: ht },
            ) => {
                let (kc, hc) = green_cotangents(*weight, x, cot);
                let (kg, hg) = grad.split_at_mut(self.split);
                kernel.backward(&theta[..self.split], kt, &kc, kg);
                if let (Some(hn), Some(ht)) = (homogeneous, ht) {
                    hn.backward(&theta[self.split..], ht, &hc, hg);
                }
            }
            _ => unreachable!("tape kind always matches the variant"),
        }
        grad
    }

    fn tangent(&self, theta: &[f64], x: &DenseMatrix, state: &ForwardState, v: &[f64]) -> TangentState {
        match (&self.variant, &state.tapes) {
            (Variant::Plain(net), Tapes::One(tape)) => {
                let tt = net.tangent(theta, tape, v);
                TangentState {
                    doutput: tt.output().clone(),
                    tapes: TanTapes::One(tt),
                }
            }
            (Variant::BranchPod { branch, basis_t, .. }, Tapes::One(tape)) => {
                let tt = branch.tangent(theta, tape, v);
                let doutput = tt.output().matmul(basis_t).expect("shape checked");
                TangentState {
                    doutput,
                    tapes: TanTapes::One(tt),
                }
            }
            (
                Variant::Green {
                    kernel,
                    homogeneous,
                    weight,
                    nodes,
                    ..
                },
                Tapes::Green { kernel: kt, homogeneous: ht },
            ) => {
                let n = nodes.rows();
                let ktt = kernel.tangent(&theta[..self.split], kt, &v[..self.split]);
                let dk = DenseMatrix::new(n, n, ktt.output().data().to_vec()).expect("n x n kernel");
                let htt = match (homogeneous, ht) {
                    (Some(hn), Some(ht)) => Some(hn.tangent(&theta[self.split..], ht, &v[self.split..])),
                    _ => None,
                };
                let doutput = green_combine(*weight, x, &dk, htt.as_ref().map(|t| t.output().data()));
                TangentState {
                    doutput,
                    tapes: TanTapes::Green {
                        kernel: ktt,
                        homogeneous: htt,
                    },
                }
            }
            _ => unreachable!("tape kind always matches the variant"),
        }
    }
}

/// `w * F K^T + 1 h^T`.
fn green_combine(weight: f64, f: &DenseMatrix, kernel: &DenseMatrix, h: Option<&[f64]>) -> DenseMatrix {
    let mut out = f.matmul_bt(kernel).expect("grid sizes match");
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for (j, o) in row.iter_mut().enumerate() {
            *o *= weight;
            if let Some(h) = h {
                *o += h[j];
            }
        }
    }
    out
}

/// Cotangents of the kernel samples (`n*n x 1`) and homogeneous values (`n x 1`).
fn green_cotangents(weight: f64, f: &DenseMatrix, cot: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = f.cols();
    let kc = cot.matmul_at(f).expect("grid sizes match").map(|v| weight * v);
    let kc = DenseMatrix::new(n * n, 1, kc.into_data()).expect("n x n");
    let hc = DenseMatrix::new(n, 1, cot.column_sum())
        .expect("n x 1");
    (kc, hc)
}

#[derive(Debug, Clone)]
struct ForwardState {
    output: DenseMatrix,
    tapes: Tapes,
}

/// Stored forward pass at a fixed `(theta, x)`, reusable across curvature
/// products at that point.
#[derive(Debug, Clone)]
pub struct Linearization {
    theta: Vec<f64>,
    rows: usize,
    state: ForwardState,
}

impl Linearization {
    /// True when this pass was taken at exactly `theta` on `rows` samples.
    pub fn matches(&self, theta: &[f64], rows: usize) -> bool {
        self.rows == rows && self.theta == theta
    }
}

#[derive(Debug, Clone)]
enum Tapes {
    One(Tape),
    Green { kernel: Tape, homogeneous: Option<Tape> },
}

struct TangentState {
    doutput: DenseMatrix,
    tapes: TanTapes,
}

enum TanTapes {
    One(TangentTape),
    Green {
        kernel: TangentTape,
        homogeneous: Option<TangentTape>,
    },
}

/// Compiles `spec` and draws initial parameters.
pub fn init_params(spec: &ModelSpec, rng: &mut RngState) -> Result<Parameters> {
    Ok(Model::new(spec)?.init_params(rng))
}
