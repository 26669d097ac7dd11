use std::ops::Range;

use crate::error::{Error, Result};
use crate::network::activation::{Activation, RationalParts, RATIONAL_COEFFS};
use crate::tensor::{dot, DenseMatrix, ParamLayout, RngState};

/// Architecture of a dense feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    /// Input width first, output width last.
    pub layer_widths: Vec<usize>,
    /// One activation per hidden layer.
    pub activations: Vec<Activation>,
    pub output_activation: Activation,
}

impl MlpSpec {
    /// All hidden layers share `activation`; identity output.
    pub fn new(layer_widths: &[usize], activation: Activation) -> Self {
        let hidden = layer_widths.len().saturating_sub(2);
        MlpSpec {
            layer_widths: layer_widths.to_vec(),
            activations: vec![activation; hidden],
            output_activation: Activation::Identity,
        }
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::InvalidSpec("an MLP needs at least 2 widths".into()));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::InvalidSpec("layer widths must be >= 1".into()));
        }
        if self.activations.len() != self.layer_widths.len() - 2 {
            return Err(Error::InvalidSpec(format!(
                "{} hidden layers but {} activations",
                self.layer_widths.len() - 2,
                self.activations.len()
            )));
        }
        for act in self.activations.iter().chain([&self.output_activation]) {
            if let Activation::Rational { coeffs, .. } = act {
                if !Activation::denominator_positive(coeffs) {
                    return Err(Error::InvalidSpec(
                        "rational activation denominator must be positive (q2 > 0, q1^2 < 4 q2 q0)".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Layer {
    n_in: usize,
    n_out: usize,
    weight: Range<usize>,
    bias: Range<usize>,
    rational: Option<Range<usize>>,
    act: Activation,
}

impl Layer {
    fn coeffs<'a>(&'a self, theta: &'a [f64]) -> &'a [f64] {
        match (&self.rational, &self.act) {
            (Some(r), _) => &theta[r.clone()],
            (None, Activation::Rational { coeffs, .. }) => coeffs,
            _ => &[],
        }
    }
}

/// Stored forward pass: `acts[0]` is the input, `acts[l + 1] = act(pre[l])`.
#[derive(Debug, Clone)]
pub(crate) struct Tape {
    pub acts: Vec<DenseMatrix>,
    pub pre: Vec<DenseMatrix>,
}

impl Tape {
    pub fn output(&self) -> &DenseMatrix {
        self.acts.last().unwrap()
    }
}

/// Directional derivatives of every tape entry along a parameter tangent.
/// The input is held fixed, so `dacts` starts at layer 1.
#[derive(Debug, Clone)]
pub(crate) struct TangentTape {
    pub dpre: Vec<DenseMatrix>,
    pub dacts: Vec<DenseMatrix>,
}

impl TangentTape {
    pub fn output(&self) -> &DenseMatrix {
        self.dacts.last().unwrap()
    }
}

/// A compiled MLP. Parameter slices passed to its methods are local to the
/// network (offset 0 = first weight).
#[derive(Debug, Clone)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Layer>,
    layout: ParamLayout,
}

impl Mlp {
    pub fn new(spec: &MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut layout = ParamLayout::new();
        let mut layers = Vec::new();
        let n_layers = spec.layer_widths.len() - 1;
        for l in 0..n_layers {
            let (n_in, n_out) = (spec.layer_widths[l], spec.layer_widths[l + 1]);
            let act = if l + 1 == n_layers {
                spec.output_activation.clone()
            } else {
                spec.activations[l].clone()
            };
            let weight = layout.push(format!("layer{l}.weight"), &[n_out, n_in]).range();
            let bias = layout.push(format!("layer{l}.bias"), &[n_out]).range();
            let rational = (act.trainable_len() > 0)
                .then(|| layout.push(format!("layer{l}.rational"), &[RATIONAL_COEFFS]).range());
            layers.push(Layer {
                n_in,
                n_out,
                weight,
                bias,
                rational,
                act,
            });
        }
        Ok(Mlp {
            spec: spec.clone(),
            layers,
            layout,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.total_len()
    }

    /// Glorot-uniform weights, zero biases, rational coefficients from the spec.
    pub fn init_into(&self, rng: &mut RngState, theta: &mut [f64]) {
        for layer in &self.layers {
            let limit = (6.0 / (layer.n_in + layer.n_out) as f64).sqrt();
            for w in &mut theta[layer.weight.clone()] {
                *w = rng.uniform(-limit, limit);
            }
            theta[layer.bias.clone()].fill(0.0);
            if let (Some(r), Activation::Rational { coeffs, .. }) = (&layer.rational, &layer.act) {
                theta[r.clone()].copy_from_slice(coeffs);
            }
        }
    }

    fn check_input(&self, x: &DenseMatrix) -> Result<()> {
        if x.cols() != self.spec.input_width() {
            return Err(Error::Dimension(format!(
                "network expects {} input columns, got {}",
                self.spec.input_width(),
                x.cols()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_tape(&self, theta: &[f64], x: &DenseMatrix) -> Result<Tape> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        acts.push(x.clone());
        for layer in &self.layers {
            let z = affine(acts.last().unwrap(), &theta[layer.weight.clone()], &theta[layer.bias.clone()], layer.n_out);
            let coeffs = layer.coeffs(theta);
            let a = z.map(|v| layer.act.eval(v, coeffs).f);
            pre.push(z);
            acts.push(a);
        }
        Ok(Tape { acts, pre })
    }

    pub fn forward(&self, theta: &[f64], x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut tape = self.forward_tape(theta, x)?;
        Ok(tape.acts.pop().unwrap())
    }

    /// Accumulates `J^T cot` into `grad`.
    pub(crate) fn backward(&self, theta: &[f64], tape: &Tape, cot: &DenseMatrix, grad: &mut [f64]) {
        let mut gbar = cot.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &tape.pre[l];
            let coeffs = layer.coeffs(theta);
            let mut delta = gbar.clone();
            match &layer.rational {
                Some(r) => {
                    let gc = &mut grad[r.clone()];
                    for (d, &zv) in delta.data_mut().iter_mut().zip(z.data()) {
                        let g = *d;
                        let parts = RationalParts::new(zv, coeffs);
                        *d = g * parts.fz;
                        if g != 0.0 {
                            for j in 0..RATIONAL_COEFFS {
                                gc[j] += g * parts.fc[j];
                            }
                        }
                    }
                }
                None => {
                    for (d, &zv) in delta.data_mut().iter_mut().zip(z.data()) {
                        *d *= layer.act.eval(zv, coeffs).d1;
                    }
                }
            }
            let (gw, gb) = split_two(grad, &layer.weight, &layer.bias);
            accumulate_weight_grad(&delta, &tape.acts[l], gw, gb);
            if l > 0 {
                gbar = input_cotangent(&delta, &theta[layer.weight.clone()], layer.n_in);
            }
        }
    }

    /// Forward-mode pass along parameter tangent `v` (network-local).
    pub(crate) fn tangent(&self, theta: &[f64], tape: &Tape, v: &[f64]) -> TangentTape {
        let mut dpre = Vec::with_capacity(self.layers.len());
        let mut dacts: Vec<DenseMatrix> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let a_prev = &tape.acts[l];
            let mut dz = affine(a_prev, &v[layer.weight.clone()], &v[layer.bias.clone()], layer.n_out);
            if l > 0 {
                add_affine_no_bias(&mut dz, &dacts[l - 1], &theta[layer.weight.clone()]);
            }
            let z = &tape.pre[l];
            let coeffs = layer.coeffs(theta);
            let mut da = dz.clone();
            match &layer.rational {
                Some(r) => {
                    let dc = &v[r.clone()];
                    for ((d, &zv), &dzv) in da.data_mut().iter_mut().zip(z.data()).zip(dz.data()) {
                        let parts = RationalParts::new(zv, coeffs);
                        *d = parts.fz * dzv + dot(&parts.fc, dc);
                    }
                }
                None => {
                    for (d, &zv) in da.data_mut().iter_mut().zip(z.data()) {
                        *d *= layer.act.eval(zv, coeffs).d1;
                    }
                }
            }
            dpre.push(dz);
            dacts.push(da);
        }
        TangentTape { dpre, dacts }
    }

    /// Tangent of the reverse pass: given the output cotangent `cot` and its
    /// directional derivative `dcot`, accumulates the directional derivative
    /// of `J^T cot` along `v` into `out`.
    pub(crate) fn backward_tangent(
        &self,
        theta: &[f64],
        tape: &Tape,
        tt: &TangentTape,
        v: &[f64],
        cot: &DenseMatrix,
        dcot: &DenseMatrix,
        out: &mut [f64],
    ) {
        let mut gbar = cot.clone();
        let mut dgbar = dcot.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &tape.pre[l];
            let dz = &tt.dpre[l];
            let coeffs = layer.coeffs(theta);
            let mut delta = gbar.clone();
            let mut ddelta = dgbar.clone();
            match &layer.rational {
                Some(r) => {
                    let dc = &v[r.clone()];
                    let mut gc_tan = [0.0; RATIONAL_COEFFS];
                    for k in 0..z.data().len() {
                        let (zv, dzv) = (z.data()[k], dz.data()[k]);
                        let (g, dg) = (gbar.data()[k], dgbar.data()[k]);
                        let parts = RationalParts::new(zv, coeffs);
                        delta.data_mut()[k] = g * parts.fz;
                        ddelta.data_mut()[k] = dg * parts.fz + g * (parts.fzz * dzv + dot(&parts.fzc, dc));
                        if g != 0.0 || dg != 0.0 {
                            let fcc = parts.fcc_apply(dc);
                            for j in 0..RATIONAL_COEFFS {
                                gc_tan[j] += dg * parts.fc[j] + g * (parts.fzc[j] * dzv + fcc[j]);
                            }
                        }
                    }
                    for (o, t) in out[r.clone()].iter_mut().zip(gc_tan) {
                        *o += t;
                    }
                }
                None => {
                    for k in 0..z.data().len() {
                        let e = layer.act.eval(z.data()[k], coeffs);
                        let g = gbar.data()[k];
                        delta.data_mut()[k] = g * e.d1;
                        ddelta.data_mut()[k] = dgbar.data()[k] * e.d1 + g * e.d2 * dz.data()[k];
                    }
                }
            }
            // d(gW) = ddelta^T a_prev + delta^T da_prev ; d(gb) = sum ddelta
            let (wr, br) = (layer.weight.clone(), layer.bias.clone());
            {
                let (ow, ob) = split_two(out, &wr, &br);
                accumulate_weight_grad(&ddelta, &tape.acts[l], ow, ob);
            }
            if l > 0 {
                let mut scratch_b = vec![0.0; layer.n_out];
                accumulate_weight_grad(&delta, &tt.dacts[l - 1], &mut out[wr.clone()], &mut scratch_b);
                let w = &theta[wr.clone()];
                let dw = &v[wr];
                let mut next_dg = input_cotangent(&ddelta, w, layer.n_in);
                add_input_cotangent(&mut next_dg, &delta, dw, layer.n_in);
                dgbar = next_dg;
                gbar = input_cotangent(&delta, w, layer.n_in);
            }
        }
    }
}

/// Disjoint mutable views of two non-overlapping ranges.
fn split_two<'a>(buf: &'a mut [f64], a: &Range<usize>, b: &Range<usize>) -> (&'a mut [f64], &'a mut [f64]) {
    debug_assert!(a.end <= b.start);
    let (lo, hi) = buf.split_at_mut(b.start);
    (&mut lo[a.clone()], &mut hi[..b.len()])
}

/// `x W^T + b` with `W` row-major `n_out x n_in`.
fn affine(x: &DenseMatrix, w: &[f64], b: &[f64], n_out: usize) -> DenseMatrix {
    let n_in = x.cols();
    let mut out = DenseMatrix::zeros(x.rows(), n_out);
    for i in 0..x.rows() {
        let xi = x.row(i);
        let oi = out.row_mut(i);
        for o in 0..n_out {
            oi[o] = dot(xi, &w[o * n_in..(o + 1) * n_in]) + b[o];
        }
    }
    out
}

/// `out += x W^T`.
fn add_affine_no_bias(out: &mut DenseMatrix, x: &DenseMatrix, w: &[f64]) {
    let n_in = x.cols();
    let n_out = out.cols();
    for i in 0..x.rows() {
        let xi = x.row(i);
        let oi = out.row_mut(i);
        for o in 0..n_out {
            oi[o] += dot(xi, &w[o * n_in..(o + 1) * n_in]);
        }
    }
}

/// `gw += delta^T a`, `gb += colsum(delta)`.
fn accumulate_weight_grad(delta: &DenseMatrix, a: &DenseMatrix, gw: &mut [f64], gb: &mut [f64]) {
    let n_in = a.cols();
    for i in 0..delta.rows() {
        let ai = a.row(i);
        for (o, &d) in delta.row(i).iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            gb[o] += d;
            for (g, &av) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(ai) {
                *g += d * av;
            }
        }
    }
}

/// `delta W` (cotangent w.r.t. the layer input).
fn input_cotangent(delta: &DenseMatrix, w: &[f64], n_in: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(delta.rows(), n_in);
    add_input_cotangent(&mut out, delta, w, n_in);
    out
}

fn add_input_cotangent(out: &mut DenseMatrix, delta: &DenseMatrix, w: &[f64], n_in: usize) {
    for i in 0..delta.rows() {
        let oi = out.row_mut(i);
        for (o, &d) in delta.row(i).iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for (x, &wv) in oi.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                *x += d * wv;
            }
        }
    }
}
