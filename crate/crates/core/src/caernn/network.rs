use rand::Rng;

use super::adam::AdamState;
use super::layout::{GruBlock, Layout, LinearBlock};
use super::{Architecture, Real, TensorSpec};
use crate::error::{Error, Result};
use crate::frontend::FeatureMatrix;
use crate::rng::{seeded_rng, streams};

/// Fixed-dimensional acoustic embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Summed squared error between output frames and target frames.
pub fn frame_loss(outputs: &FeatureMatrix, targets: &FeatureMatrix) -> Result<f64> {
    if outputs.frames() != targets.frames() || outputs.dim() != targets.dim() {
        return Err(Error::ShapeMismatch(format!(
            "outputs {}x{} vs targets {}x{}",
            outputs.frames(),
            outputs.dim(),
            targets.frames(),
            targets.dim()
        )));
    }
    Ok(outputs
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(y, x)| (x - y) * (x - y))
        .sum())
}

/// All network weights plus Adam state.
///
/// GRU update per layer, with `a = W_in x_t + b` split into reset, update
/// and candidate rows:
///
/// ```text
/// r = sigmoid(a_r + U_r h),  z = sigmoid(a_z + U_z h)
/// n = tanh(a_n + U_n (r * h))
/// h' = (1 - z) * n + z * h
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T = f32> {
    arch: Architecture,
    values: Vec<T>,
    pub optimizer: AdamState<T>,
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += *x * *y;
    }
    s
}

/// `out[i] += sum_j m[i, j] x[j]` over the first `out.len()` rows.
#[inline]
fn matvec_acc<T: Real>(m: &[T], cols: usize, x: &[T], out: &mut [T]) {
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `out[j] += sum_i m[i, j] g[i]`.
#[inline]
fn matvec_t_acc<T: Real>(m: &[T], cols: usize, g: &[T], out: &mut [T]) {
    for (row, &gi) in m.chunks_exact(cols).zip(g) {
        if gi != T::zero() {
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * gi;
            }
        }
    }
}

/// `m[i, j] += g[i] x[j]`.
#[inline]
fn outer_acc<T: Real>(m: &mut [T], cols: usize, g: &[T], x: &[T]) {
    for (row, &gi) in m.chunks_exact_mut(cols).zip(g) {
        if gi != T::zero() {
            for (w, &xj) in row.iter_mut().zip(x) {
                *w += gi * xj;
            }
        }
    }
}

fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Activations of one GRU layer over a sequence.
struct GruTrace<T> {
    steps: usize,
    /// (steps + 1) x H; row 0 is the zero initial state.
    h: Vec<T>,
    r: Vec<T>,
    z: Vec<T>,
    n: Vec<T>,
}

impl<T> GruTrace<T> {
    fn outputs(&self, hidden: usize) -> &[T] {
        &self.h[hidden..]
    }
}

fn split_gru<'a, T>(block: &GruBlock, p: &'a [T]) -> (&'a [T], &'a [T], &'a [T]) {
    let s = &p[block.range()];
    let (w_in, rest) = s.split_at(block.w_in_len());
    let (w_hid, bias) = rest.split_at(block.w_hid_len());
    (w_in, w_hid, bias)
}

fn split_gru_mut<'a, T>(block: &GruBlock, p: &'a mut [T]) -> (&'a mut [T], &'a mut [T], &'a mut [T]) {
    let s = &mut p[block.range()];
    let (w_in, rest) = s.split_at_mut(block.w_in_len());
    let (w_hid, bias) = rest.split_at_mut(block.w_hid_len());
    (w_in, w_hid, bias)
}

fn gru_forward<T: Real>(block: &GruBlock, p: &[T], inputs: &[T], steps: usize) -> GruTrace<T> {
    let (w_in, w_hid, bias) = split_gru(block, p);
    let (h_dim, i_dim) = (block.hidden, block.input);
    let mut tr = GruTrace {
        steps,
        h: vec![T::zero(); (steps + 1) * h_dim],
        r: vec![T::zero(); steps * h_dim],
        z: vec![T::zero(); steps * h_dim],
        n: vec![T::zero(); steps * h_dim],
    };
    let mut a = vec![T::zero(); 3 * h_dim];
    let mut u = vec![T::zero(); 2 * h_dim];
    let mut rh = vec![T::zero(); h_dim];
    let mut un = vec![T::zero(); h_dim];
    for t in 0..steps {
        a.copy_from_slice(bias);
        matvec_acc(w_in, i_dim, &inputs[t * i_dim..(t + 1) * i_dim], &mut a);
        let (h_prev, h_rest) = tr.h[t * h_dim..].split_at_mut(h_dim);
        u.iter_mut().for_each(|v| *v = T::zero());
        matvec_acc(&w_hid[..2 * h_dim * h_dim], h_dim, h_prev, &mut u);
        let r = &mut tr.r[t * h_dim..(t + 1) * h_dim];
        let z = &mut tr.z[t * h_dim..(t + 1) * h_dim];
        for k in 0..h_dim {
            r[k] = sigmoid(a[k] + u[k]);
            z[k] = sigmoid(a[h_dim + k] + u[h_dim + k]);
            rh[k] = r[k] * h_prev[k];
        }
        un.iter_mut().for_each(|v| *v = T::zero());
        matvec_acc(&w_hid[2 * h_dim * h_dim..], h_dim, &rh, &mut un);
        let n = &mut tr.n[t * h_dim..(t + 1) * h_dim];
        let h_next = &mut h_rest[..h_dim];
        for k in 0..h_dim {
            n[k] = (a[2 * h_dim + k] + un[k]).tanh();
            h_next[k] = (T::one() - z[k]) * n[k] + z[k] * h_prev[k];
        }
    }
    tr
}

/// Backpropagate `d_out` (steps x H, gradient w.r.t. each output state)
/// through the layer, accumulating parameter gradients into `grad` and
/// returning the gradient w.r.t. the inputs (steps x I).
fn gru_backward<T: Real>(block: &GruBlock, p: &[T], inputs: &[T], tr: &GruTrace<T>, d_out: &[T], grad: &mut [T]) -> Vec<T> {
    let (w_in, w_hid, _) = split_gru(block, p);
    let (g_in, g_hid, g_bias) = split_gru_mut(block, grad);
    let (h_dim, i_dim) = (block.hidden, block.input);
    let hh = h_dim * h_dim;
    let mut d_inputs = vec![T::zero(); tr.steps * i_dim];
    let mut dh_next = vec![T::zero(); h_dim];
    let mut da = vec![T::zero(); 3 * h_dim];
    let mut rh = vec![T::zero(); h_dim];
    let mut drh = vec![T::zero(); h_dim];
    let mut dh_prev = vec![T::zero(); h_dim];
    let one = T::one();
    for t in (0..tr.steps).rev() {
        let h_prev = &tr.h[t * h_dim..(t + 1) * h_dim];
        let r = &tr.r[t * h_dim..(t + 1) * h_dim];
        let z = &tr.z[t * h_dim..(t + 1) * h_dim];
        let n = &tr.n[t * h_dim..(t + 1) * h_dim];
        for k in 0..h_dim {
            let dh = d_out[t * h_dim + k] + dh_next[k];
            let dn = dh * (one - z[k]);
            let dz = dh * (h_prev[k] - n[k]);
            dh_prev[k] = dh * z[k];
            da[2 * h_dim + k] = dn * (one - n[k] * n[k]);
            da[h_dim + k] = dz * z[k] * (one - z[k]);
            rh[k] = r[k] * h_prev[k];
        }
        let dn_pre = &da[2 * h_dim..];
        outer_acc(&mut g_hid[2 * hh..], h_dim, dn_pre, &rh);
        drh.iter_mut().for_each(|v| *v = T::zero());
        matvec_t_acc(&w_hid[2 * hh..], h_dim, dn_pre, &mut drh);
        for k in 0..h_dim {
            let dr = drh[k] * h_prev[k];
            dh_prev[k] += drh[k] * r[k];
            da[k] = dr * r[k] * (one - r[k]);
        }
        outer_acc(&mut g_hid[..2 * hh], h_dim, &da[..2 * h_dim], h_prev);
        matvec_t_acc(&w_hid[..2 * hh], h_dim, &da[..2 * h_dim], &mut dh_prev);
        let x = &inputs[t * i_dim..(t + 1) * i_dim];
        outer_acc(g_in, i_dim, &da, x);
        for (g, d) in g_bias.iter_mut().zip(&da) {
            *g += *d;
        }
        matvec_t_acc(w_in, i_dim, &da, &mut d_inputs[t * i_dim..(t + 1) * i_dim]);
        dh_next.copy_from_slice(&dh_prev);
    }
    d_inputs
}

fn linear<T: Real>(block: &LinearBlock, p: &[T], x: &[T], out: &mut [T]) {
    let s = &p[block.range()];
    let (w, b) = s.split_at(block.output * block.input);
    out.copy_from_slice(b);
    matvec_acc(w, block.input, x, out);
}

fn linear_backward<T: Real>(block: &LinearBlock, p: &[T], x: &[T], d_out: &[T], grad: &mut [T], d_x: &mut [T]) {
    let (w, _) = p[block.range()].split_at(block.output * block.input);
    let (gw, gb) = grad[block.range()].split_at_mut(block.output * block.input);
    outer_acc(gw, block.input, d_out, x);
    for (g, d) in gb.iter_mut().zip(d_out) {
        *g += *d;
    }
    matvec_t_acc(w, block.input, d_out, d_x);
}

struct ForwardPass<T> {
    enc: Vec<GruTrace<T>>,
    embedding: Vec<T>,
    dec_input: Vec<T>,
    dec: Vec<GruTrace<T>>,
    outputs: Vec<T>,
}

impl<T: Real> ModelParams<T> {
    /// Weights uniform in +-1/sqrt(fan_in) (fan_in = columns), zero biases,
    /// drawn in layout order from the seed.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::new(&arch);
        let mut rng = seeded_rng(seed, streams::INIT);
        let mut values = vec![T::zero(); layout.total];
        for t in &layout.tensors {
            if t.name.ends_with("bias") {
                continue;
            }
            let bound = 1.0 / (t.cols as f64).sqrt();
            for v in &mut values[t.range()] {
                *v = T::from_f64(rng.random_range(-bound..bound)).unwrap();
            }
        }
        Ok(Self {
            arch,
            optimizer: AdamState::zeros(values.len()),
            values,
        })
    }

    /// Assemble from raw parts; lengths must agree with the architecture.
    pub fn from_parts(arch: Architecture, values: Vec<T>, optimizer: AdamState<T>) -> Result<Self> {
        arch.validate()?;
        let n = Layout::new(&arch).total;
        if values.len() != n || optimizer.m.len() != n || optimizer.v.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "architecture needs {n} parameters, got {} (moments {}/{})",
                values.len(),
                optimizer.m.len(),
                optimizer.v.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(Self { arch, values, optimizer })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn num_params(&self) -> usize {
        self.values.len()
    }

    pub fn tensor_specs(&self) -> Vec<TensorSpec> {
        Layout::new(&self.arch).tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&[T]> {
        let specs = self.tensor_specs();
        let spec = specs.iter().find(|t| t.name == name)?;
        Some(&self.values[spec.range()])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [T]> {
        let specs = self.tensor_specs();
        let spec = specs.iter().find(|t| t.name == name)?;
        Some(&mut self.values[spec.range()])
    }

    /// Parameters converted to another precision (optimizer state is reset).
    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let values: Vec<U> = self.values.iter().map(|v| U::from_f64(v.to_f64().unwrap()).unwrap()).collect();
        ModelParams {
            arch: self.arch,
            optimizer: AdamState::zeros(values.len()),
            values,
        }
    }

    fn check_input(&self, x: &FeatureMatrix) -> Result<Vec<T>> {
        if x.dim() != self.arch.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "input frames have {} components, model expects {}",
                x.dim(),
                self.arch.input_dim
            )));
        }
        to_real(x.as_slice())
    }

    fn forward(&self, layout: &Layout, x: &[T], x_frames: usize, t_out: usize) -> ForwardPass<T> {
        let h = self.arch.hidden;
        let mut enc = Vec::with_capacity(layout.encoder.len());
        for (l, block) in layout.encoder.iter().enumerate() {
            let input: &[T] = if l == 0 { x } else { enc.last().map(|t: &GruTrace<T>| t.outputs(h)).unwrap() };
            let tr = gru_forward(block, &self.values, input, x_frames);
            enc.push(tr);
        }
        let last = &enc.last().unwrap().h[x_frames * h..];
        let mut embedding = vec![T::zero(); self.arch.embedding_dim];
        linear(&layout.embed, &self.values, last, &mut embedding);
        let (dec, dec_input, outputs) = self.decode_raw(layout, &embedding, t_out);
        ForwardPass { enc, embedding, dec_input, dec, outputs }
    }

    #[allow(clippy::type_complexity)]
    fn decode_raw(&self, layout: &Layout, embedding: &[T], t_out: usize) -> (Vec<GruTrace<T>>, Vec<T>, Vec<T>) {
        let h = self.arch.hidden;
        let dec_input: Vec<T> = (0..t_out).flat_map(|_| embedding.iter().copied()).collect();
        let mut dec: Vec<GruTrace<T>> = Vec::with_capacity(layout.decoder.len());
        for (l, block) in layout.decoder.iter().enumerate() {
            let input: &[T] = if l == 0 { &dec_input } else { dec.last().unwrap().outputs(h) };
            let tr = gru_forward(block, &self.values, input, t_out);
            dec.push(tr);
        }
        let d = self.arch.input_dim;
        let mut outputs = vec![T::zero(); t_out * d];
        let top = dec.last().unwrap().outputs(h);
        for t in 0..t_out {
            linear(&layout.output, &self.values, &top[t * h..(t + 1) * h], &mut outputs[t * d..(t + 1) * d]);
        }
        (dec, dec_input, outputs)
    }

    /// Embed a sequence of any positive length.
    pub fn encode(&self, x: &FeatureMatrix) -> Result<Embedding> {
        let xs = self.check_input(x)?;
        let layout = Layout::new(&self.arch);
        let h = self.arch.hidden;
        let mut input = xs;
        for block in &layout.encoder {
            let tr = gru_forward(block, &self.values, &input, x.frames());
            input = tr.h[h..].to_vec();
        }
        let mut z = vec![T::zero(); self.arch.embedding_dim];
        linear(&layout.embed, &self.values, &input[(x.frames() - 1) * h..], &mut z);
        from_real(&z).map(Embedding)
    }

    /// Decoder output frames f_1..f_{t_out} conditioned on `z`.
    pub fn decode(&self, z: &Embedding, t_out: usize) -> Result<FeatureMatrix> {
        if t_out == 0 {
            return Err(Error::invalid("decoder output length must be at least 1"));
        }
        if z.dim() != self.arch.embedding_dim {
            return Err(Error::ShapeMismatch(format!(
                "embedding has {} components, model expects {}",
                z.dim(),
                self.arch.embedding_dim
            )));
        }
        let zs = to_real(z.values())?;
        let layout = Layout::new(&self.arch);
        let (_, _, outputs) = self.decode_raw(&layout, &zs, t_out);
        FeatureMatrix::new(from_real(&outputs)?, self.arch.input_dim)
    }

    /// Sum over target frames of the squared distance between target and
    /// decoder output, decoding `x` to the target's length.
    pub fn pair_loss(&self, x: &FeatureMatrix, target: &FeatureMatrix) -> Result<f64> {
        let xs = self.check_input(x)?;
        let ts = self.check_input(target)?;
        let layout = Layout::new(&self.arch);
        let fp = self.forward(&layout, &xs, x.frames(), target.frames());
        let loss: T = fp.outputs.iter().zip(&ts).map(|(y, t)| (*t - *y) * (*t - *y)).sum();
        Ok(loss.to_f64().unwrap())
    }

    /// Loss of one (input, target) pair given as flat row-major frames, with
    /// its gradient added into `grad`.
    pub fn loss_and_grad(&self, x: &[T], target: &[T], grad: &mut [T]) -> Result<T> {
        let d = self.arch.input_dim;
        if x.is_empty() || target.is_empty() || !x.len().is_multiple_of(d) || !target.len().is_multiple_of(d) {
            return Err(Error::ShapeMismatch("input/target are not whole frames".into()));
        }
        if grad.len() != self.values.len() {
            return Err(Error::ShapeMismatch("gradient buffer size".into()));
        }
        let layout = Layout::new(&self.arch);
        Ok(self.loss_and_grad_with(&layout, x, target, grad))
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout::new(&self.arch)
    }

    pub(crate) fn loss_and_grad_with(&self, layout: &Layout, x: &[T], target: &[T], grad: &mut [T]) -> T {
        let (d, h) = (self.arch.input_dim, self.arch.hidden);
        let (x_frames, t_out) = (x.len() / d, target.len() / d);
        let fp = self.forward(layout, x, x_frames, t_out);
        let two = T::one() + T::one();
        let mut loss = T::zero();
        let mut d_y = vec![T::zero(); t_out * d];
        for ((g, y), t) in d_y.iter_mut().zip(&fp.outputs).zip(target) {
            let e = *y - *t;
            loss += e * e;
            *g = two * e;
        }

        // decoder
        let top = fp.dec.last().unwrap().outputs(h);
        let mut d_h = vec![T::zero(); t_out * h];
        for t in 0..t_out {
            linear_backward(
                &layout.output,
                &self.values,
                &top[t * h..(t + 1) * h],
                &d_y[t * d..(t + 1) * d],
                grad,
                &mut d_h[t * h..(t + 1) * h],
            );
        }
        for l in (0..layout.decoder.len()).rev() {
            let input: &[T] = if l == 0 { &fp.dec_input } else { fp.dec[l - 1].outputs(h) };
            d_h = gru_backward(&layout.decoder[l], &self.values, input, &fp.dec[l], &d_h, grad);
        }
        let e = self.arch.embedding_dim;
        let mut d_z = vec![T::zero(); e];
        for t in 0..t_out {
            for (acc, g) in d_z.iter_mut().zip(&d_h[t * e..(t + 1) * e]) {
                *acc += *g;
            }
        }

        // embedding readout and encoder
        let enc_top = fp.enc.last().unwrap();
        let last = &enc_top.h[x_frames * h..];
        let mut d_h = vec![T::zero(); x_frames * h];
        linear_backward(&layout.embed, &self.values, last, &d_z, grad, &mut d_h[(x_frames - 1) * h..]);
        let _ = &fp.embedding;
        for l in (0..layout.encoder.len()).rev() {
            let input: &[T] = if l == 0 { x } else { fp.enc[l - 1].outputs(h) };
            d_h = gru_backward(&layout.encoder[l], &self.values, input, &fp.enc[l], &d_h, grad);
        }
        loss
    }
}

fn to_real<T: Real>(v: &[f64]) -> Result<Vec<T>> {
    v.iter()
        .map(|x| {
            T::from_f64(*x)
                .filter(|y| y.is_finite())
                .ok_or_else(|| Error::NonFinite("network input".into()))
        })
        .collect()
}

fn from_real<T: Real>(v: &[T]) -> Result<Vec<f64>> {
    let out: Vec<f64> = v.iter().map(|x| x.to_f64().unwrap()).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("network output".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Architecture {
        Architecture { input_dim: 2, hidden: 3, layers: 2, embedding_dim: 2 }
    }

    fn seq(rows: &[[f64; 2]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn frame_loss_single_unit_difference() {
        let mut y = vec![0.0; 26];
        y[0] = 1.0;
        let out = FeatureMatrix::new(y, 13).unwrap();
        let tgt = FeatureMatrix::new(vec![0.0; 26], 13).unwrap();
        assert_eq!(frame_loss(&out, &tgt).unwrap(), 1.0);
    }

    #[test]
    fn constant_output_params_reconstruct_exactly() {
        let mut p = ModelParams::<f64>::init(tiny(), 1).unwrap();
        p.tensor_mut("output.weight").unwrap().iter_mut().for_each(|w| *w = 0.0);
        p.tensor_mut("output.bias").unwrap().copy_from_slice(&[0.25, -1.5]);
        let x = seq(&[[1.0, 2.0], [3.0, -1.0], [0.0, 0.0]]);
        let target = seq(&[[0.25, -1.5], [0.25, -1.5]]);
        assert_eq!(p.pair_loss(&x, &target).unwrap(), 0.0);
    }

    #[test]
    fn encode_decode_shapes() {
        let p = ModelParams::<f32>::init(tiny(), 3).unwrap();
        let z = p.encode(&seq(&[[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])).unwrap();
        assert_eq!(z.dim(), 2);
        let y = p.decode(&z, 7).unwrap();
        assert_eq!((y.frames(), y.dim()), (7, 2));
        assert_eq!(p.decode(&z, 7).unwrap(), y);
        assert!(p.decode(&z, 0).is_err());
        assert!(p.decode(&Embedding(vec![0.0; 3]), 2).is_err());
        assert_eq!(p.decode(&z, 1).unwrap().frames(), 1);
    }

    #[test]
    fn wrong_input_dim_rejected() {
        let p = ModelParams::<f32>::init(tiny(), 3).unwrap();
        assert!(p.encode(&FeatureMatrix::new(vec![0.0; 3], 3).unwrap()).is_err());
    }

    #[test]
    fn encoder_uses_the_whole_sequence() {
        let p = ModelParams::<f64>::init(tiny(), 5).unwrap();
        let a = p.encode(&seq(&[[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])).unwrap();
        let b = p.encode(&seq(&[[-1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn loss_and_grad_matches_pair_loss() {
        let p = ModelParams::<f64>::init(tiny(), 9).unwrap();
        let x = seq(&[[0.3, -0.2], [0.9, 0.1]]);
        let t = seq(&[[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]);
        let mut g = vec![0.0; p.num_params()];
        let l = p.loss_and_grad(x.as_slice(), t.as_slice(), &mut g).unwrap();
        assert!((l - p.pair_loss(&x, &t).unwrap()).abs() < 1e-12);
        assert!(g.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut p = ModelParams::<f64>::init(tiny(), 21).unwrap();
        p.values_mut().iter_mut().enumerate().for_each(|(i, v)| *v += 0.01 * ((i % 7) as f64 - 3.0));
        let x = [0.5, -0.3, 0.1, 0.8, -0.6, 0.2];
        let t = [0.2, 0.1, -0.4, 0.3];
        let mut g = vec![0.0; p.num_params()];
        p.loss_and_grad(&x, &t, &mut g).unwrap();
        let mut scratch = vec![0.0; p.num_params()];
        for i in 0..p.num_params() {
            let orig = p.values()[i];
            p.values_mut()[i] = orig + 1e-5;
            let up = p.loss_and_grad(&x, &t, &mut scratch).unwrap();
            p.values_mut()[i] = orig - 1e-5;
            let down = p.loss_and_grad(&x, &t, &mut scratch).unwrap();
            p.values_mut()[i] = orig;
            let fd = (up - down) / 2e-5;
            // Central differences carry ~1e-11 of rounding noise, so tiny
            // gradients are compared against a 1e-7 floor.
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-7);
            assert!(rel < 1e-4, "param {i}: analytic {} vs numeric {fd}", g[i]);
        }
    }
}
