use super::*;
use crate::tensor::{dot, norm2, DenseMatrix, RngState};

/// Half squared norm: cotangent `y`, Hessian identity.
struct HalfSquare;

impl OutputCurvature for HalfSquare {
    fn cotangent(&self, y: &DenseMatrix) -> DenseMatrix {
        y.clone()
    }
    fn hessian_apply(&self, dy: &DenseMatrix) -> DenseMatrix {
        dy.clone()
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut RngState) -> DenseMatrix {
    DenseMatrix::new(rows, cols, rng.gaussian(rows * cols).into_vec()).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&diff) / norm2(b).max(1e-300)
}

fn mdot(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    dot(a.data(), b.data())
}

fn green_spec(n: usize, homogeneous: bool) -> ModelSpec {
    let nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    ModelSpec::GreenKernel {
        kernel_net: MlpSpec::new(&[2, 6, 5, 1], Activation::rational()),
        homogeneous_net: homogeneous.then(|| MlpSpec::new(&[1, 4, 1], Activation::Tanh)),
        quadrature_nodes: nodes,
        quadrature_weight: 1.0 / (n - 1) as f64,
    }
}

fn pod_spec(rng: &mut RngState) -> ModelSpec {
    let basis = random_matrix(7, 3, rng);
    ModelSpec::BranchPod {
        branch: MlpSpec::new(&[4, 5, 3], Activation::Gelu),
        pod_basis: basis,
        pod_mean: rng.gaussian(7).into_vec(),
    }
}

/// One model of each family, each with a batch of inputs.
fn instances(seed: u64) -> Vec<(Model, DenseMatrix)> {
    let mut rng = RngState::new(seed);
    let mut out = Vec::new();
    let tanh = ModelSpec::Plain(MlpSpec::new(&[3, 5, 4, 2], Activation::Tanh));
    out.push((Model::new(&tanh).unwrap(), random_matrix(6, 3, &mut rng)));
    let rational = ModelSpec::Plain(MlpSpec::new(&[2, 4, 2], Activation::rational()));
    out.push((Model::new(&rational).unwrap(), random_matrix(5, 2, &mut rng).map(|v| 0.5 * v)));
    let pod = pod_spec(&mut rng);
    out.push((Model::new(&pod).unwrap(), random_matrix(4, 4, &mut rng)));
    let green = green_spec(6, true);
    out.push((Model::new(&green).unwrap(), random_matrix(3, 6, &mut rng)));
    out
}

#[test]
fn parameter_counts() {
    let m = Model::new(&ModelSpec::Plain(MlpSpec::new(&[2, 3, 1], Activation::Tanh))).unwrap();
    assert_eq!(m.n_params(), 2 * 3 + 3 + 3 + 1);
    let r = Model::new(&ModelSpec::Plain(MlpSpec::new(&[2, 3, 1], Activation::rational()))).unwrap();
    assert_eq!(r.n_params(), 13 + 7);
    let fixed = Activation::Rational {
        coeffs: RATIONAL_RELU_INIT,
        trainable: false,
    };
    let f = Model::new(&ModelSpec::Plain(MlpSpec::new(&[2, 3, 1], fixed))).unwrap();
    assert_eq!(f.n_params(), 13);
}

#[test]
fn init_is_deterministic_and_glorot() {
    let spec = ModelSpec::Plain(MlpSpec::new(&[4, 8, 2], Activation::rational()));
    let a = init_params(&spec, &mut RngState::new(3)).unwrap();
    let b = init_params(&spec, &mut RngState::new(3)).unwrap();
    assert_eq!(a, b);
    let w = &a.theta[a.layout.get("layer0.weight").unwrap().range()];
    let limit = (6.0f64 / 12.0).sqrt();
    assert!(w.iter().all(|x| x.abs() <= limit));
    assert!(a.theta[a.layout.get("layer0.bias").unwrap().range()].iter().all(|&x| x == 0.0));
    assert_eq!(&a.theta[a.layout.get("layer0.rational").unwrap().range()], &RATIONAL_RELU_INIT);
}

#[test]
fn invalid_specs() {
    assert!(Model::new(&ModelSpec::Plain(MlpSpec::new(&[3], Activation::Tanh))).is_err());
    let bad = Activation::Rational {
        coeffs: [0.0, 1.0, 0.0, 0.0, 1.0, 3.0, 1.0],
        trainable: true,
    };
    assert!(Model::new(&ModelSpec::Plain(MlpSpec::new(&[1, 2, 1], bad))).is_err());
    let mut rng = RngState::new(0);
    let pod = ModelSpec::BranchPod {
        branch: MlpSpec::new(&[2, 3], Activation::Tanh),
        pod_basis: random_matrix(5, 4, &mut rng),
        pod_mean: vec![0.0; 5],
    };
    assert!(matches!(Model::new(&pod), Err(crate::Error::InvalidSpec(_))));
    let green = ModelSpec::GreenKernel {
        kernel_net: MlpSpec::new(&[3, 2, 1], Activation::Tanh),
        homogeneous_net: None,
        quadrature_nodes: vec![0.0, 1.0],
        quadrature_weight: 1.0,
    };
    assert!(Model::new(&green).is_err());
}

#[test]
fn identity_network_is_identity() {
    let spec = MlpSpec {
        layer_widths: vec![3, 3, 3],
        activations: vec![Activation::Identity],
        output_activation: Activation::Identity,
    };
    let m = Model::new(&ModelSpec::Plain(spec)).unwrap();
    let mut theta = vec![0.0; m.n_params()];
    for l in 0..2 {
        let r = m.layout().get(&format!("layer{l}.weight")).unwrap().range();
        for i in 0..3 {
            theta[r.start + i * 3 + i] = 1.0;
        }
    }
    let x = random_matrix(4, 3, &mut RngState::new(1));
    assert_eq!(m.forward(&theta, &x).unwrap(), x);
    assert!(m.forward(&theta, &random_matrix(4, 2, &mut RngState::new(1))).is_err());
}

#[test]
fn branch_pod_unit_coefficient_picks_first_mode() {
    let mut rng = RngState::new(5);
    let basis = random_matrix(6, 3, &mut rng);
    let mean = rng.gaussian(6).into_vec();
    let spec = ModelSpec::BranchPod {
        branch: MlpSpec::new(&[2, 3], Activation::Tanh),
        pod_basis: basis.clone(),
        pod_mean: mean.clone(),
    };
    let m = Model::new(&spec).unwrap();
    let mut theta = vec![0.0; m.n_params()];
    let b = m.layout().get("branch.layer0.bias").unwrap().range();
    theta[b.start] = 1.0;
    let y = m.forward(&theta, &DenseMatrix::zeros(1, 2)).unwrap();
    for g in 0..6 {
        assert!((y.get(0, g) - (mean[g] + basis.get(g, 0))).abs() < 1e-15);
    }
}

#[test]
fn exact_green_kernel_reproduces_poisson_solution() {
    let n = 101;
    let m = Model::new(&green_spec(n, false)).unwrap();
    let nodes: Vec<f64> = (0..n).map(|i| i as f64 / 100.0).collect();
    let g = DenseMatrix::from_fn(n, n, |j, k| {
        let (x, y) = (nodes[j], nodes[k]);
        x.min(y) * (1.0 - x.max(y))
    });
    let theta = vec![0.0; m.n_params()];
    let f = DenseMatrix::from_fn(1, n, |_, _| 1.0);
    let u = m.apply_kernel(&theta, &g, &f).unwrap();
    let h = 0.01;
    for (j, &x) in nodes.iter().enumerate() {
        assert!((u.get(0, j) - x * (1.0 - x) / 2.0).abs() <= h * h);
    }
}

#[test]
fn linear_model_derivatives() {
    let spec = ModelSpec::Plain(MlpSpec::new(&[3, 2], Activation::Tanh));
    let m = Model::new(&spec).unwrap();
    let mut rng = RngState::new(9);
    let theta = rng.gaussian(m.n_params());
    let x = random_matrix(4, 3, &mut rng);
    let c = random_matrix(4, 2, &mut rng);
    let g = m.vjp(&theta, &x, &c).unwrap();
    for o in 0..2 {
        for k in 0..3 {
            let expect: f64 = (0..4).map(|i| c.get(i, o) * x.get(i, k)).sum();
            assert!((g[o * 3 + k] - expect).abs() < 1e-14);
        }
        let expect_b: f64 = (0..4).map(|i| c.get(i, o)).sum();
        assert!((g[6 + o] - expect_b).abs() < 1e-14);
    }
    let mut v = vec![0.0; m.n_params()];
    v[..6].copy_from_slice(&rng.gaussian(6));
    let jv = m.jvp(&theta, &x, &v).unwrap();
    for i in 0..4 {
        for o in 0..2 {
            let expect: f64 = (0..3).map(|k| v[o * 3 + k] * x.get(i, k)).sum();
            assert!((jv.get(i, o) - expect).abs() < 1e-14);
        }
    }
    let zero = m.vjp(&theta, &x, &DenseMatrix::zeros(4, 2)).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
}

#[test]
fn transpose_consistency_all_variants() {
    for seed in 0..5 {
        for (m, x) in instances(seed) {
            let mut rng = RngState::new(100 + seed);
            let theta = m.init_params(&mut rng).theta;
            let v = rng.gaussian(m.n_params());
            let c = random_matrix(x.rows(), m.output_width(), &mut rng);
            let jv = m.jvp(&theta, &x, &v).unwrap();
            let jtc = m.vjp(&theta, &x, &c).unwrap();
            let lhs = mdot(&c, &jv);
            let rhs = dot(&jtc, &v);
            assert!(
                (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300),
                "{lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn vjp_and_jvp_match_finite_differences() {
    for seed in 0..4 {
        for (m, x) in instances(seed) {
            let mut rng = RngState::new(200 + seed);
            let theta = m.init_params(&mut rng).theta;
            let c = random_matrix(x.rows(), m.output_width(), &mut rng);
            let grad = m.vjp(&theta, &x, &c).unwrap();
            let fd: Vec<f64> = (0..theta.len())
                .map(|i| {
                    let h = 1e-6 * (1.0 + theta[i].abs());
                    let mut tp = theta.clone();
                    let mut tm = theta.clone();
                    tp[i] += h;
                    tm[i] -= h;
                    let fp = mdot(&c, &m.forward(&tp, &x).unwrap());
                    let fm = mdot(&c, &m.forward(&tm, &x).unwrap());
                    (fp - fm) / (2.0 * h)
                })
                .collect();
            assert!(rel_err(&grad, &fd) <= 1e-7, "vjp rel err {}", rel_err(&grad, &fd));

            let v = rng.gaussian(m.n_params());
            let jv = m.jvp(&theta, &x, &v).unwrap();
            let eps = 1e-6 / norm2(&v);
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            crate::tensor::axpy_in_place(eps, &v, &mut tp);
            crate::tensor::axpy_in_place(-eps, &v, &mut tm);
            let yp = m.forward(&tp, &x).unwrap();
            let ym = m.forward(&tm, &x).unwrap();
            let fd: Vec<f64> = yp.data().iter().zip(ym.data()).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
            assert!(rel_err(jv.data(), &fd) <= 1e-7, "jvp rel err {}", rel_err(jv.data(), &fd));
        }
    }
}

#[test]
fn forward_over_reverse_matches_gradient_differences() {
    for seed in 0..4 {
        for (m, x) in instances(seed) {
            let mut rng = RngState::new(300 + seed);
            let theta = m.init_params(&mut rng).theta;
            let v = rng.gaussian(m.n_params());
            let hv = m.hvp(&theta, &x, &v, &HalfSquare).unwrap();
            let eps = 1e-5 / norm2(&v);
            let grad_at = |t: &[f64]| m.value_and_vjp(t, &x, |y| y.clone()).unwrap().1;
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            crate::tensor::axpy_in_place(eps, &v, &mut tp);
            crate::tensor::axpy_in_place(-eps, &v, &mut tm);
            let (gp, gm) = (grad_at(&tp), grad_at(&tm));
            let fd: Vec<f64> = gp.iter().zip(gm.iter()).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
            assert!(rel_err(&hv, &fd) <= 1e-6, "hvp rel err {}", rel_err(&hv, &fd));

            let u = rng.gaussian(m.n_params());
            let hu = m.hvp(&theta, &x, &u, &HalfSquare).unwrap();
            let (a, b) = (dot(&u, &hv), dot(&hu, &v));
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "symmetry {a} vs {b}");
        }
    }
}
