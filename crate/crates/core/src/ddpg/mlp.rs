//! Fully connected network, tanh hidden layers, linear output.
//!
//! Parameters live in one flat vector: for each layer the weights
//! (`out × in`, row-major) followed by the `out` biases.

use matrixmultiply::dgemm;

use crate::error::{check_dim, invalid, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by a batched forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    batch: usize,
    /// `acts[0]` is the input, `acts[i]` the output of layer `i`.
    acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Network output, `batch × out` row-major.
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("tape has input")
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

/// `c = a · bᵀ` style helper around dgemm with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: every caller passes slices sized for the given shape and
    // strides; `c` is contiguous row-major `m × n` and does not alias `a`/`b`.
    unsafe {
        dgemm(m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1);
    }
}

impl Mlp {
    /// Zero-initialized network.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(invalid("network needs at least an input and an output layer"));
        }
        if sizes.contains(&0) {
            return Err(invalid(format!("layer sizes must be >= 1, got {sizes:?}")));
        }
        Ok(Self { sizes: sizes.to_vec(), params: vec![0.0; param_count(sizes)] })
    }

    /// Uniform fan-in initialization; the output layer starts small.
    pub fn init(sizes: &[usize], rng: &mut SeededRng) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let last = net.layers() - 1;
        let mut off = 0;
        for i in 0..net.layers() {
            let (fan_in, fan_out) = (sizes[i], sizes[i + 1]);
            let bound = if i == last { 3e-3 } else { 1.0 / (fan_in as f64).sqrt() };
            for p in &mut net.params[off..off + (fan_in + 1) * fan_out] {
                *p = rng.uniform_range(-bound, bound);
            }
            off += (fan_in + 1) * fan_out;
        }
        Ok(net)
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        check_dim("network parameters", net.params.len(), params.len())?;
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn same_shape(&self, other: &Mlp) -> Result<()> {
        if self.sizes != other.sizes {
            return Err(invalid(format!("architecture mismatch: {:?} vs {:?}", self.sizes, other.sizes)));
        }
        Ok(())
    }

    /// Batched forward pass over `batch` row-major inputs.
    pub fn forward_batch(&self, input: &[f64], batch: usize) -> Result<Tape> {
        check_dim("network input", batch * self.input_dim(), input.len())?;
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(input.to_vec());
        let mut off = 0;
        for i in 0..self.layers() {
            let (n_in, n_out) = (self.sizes[i], self.sizes[i + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + (n_in + 1) * n_out];
            let mut out = Vec::with_capacity(batch * n_out);
            for _ in 0..batch {
                out.extend_from_slice(b);
            }
            let x = &acts[i];
            // out (B×out) += x (B×in) · Wᵀ (in×out)
            gemm(batch, n_in, n_out, x, n_in as isize, 1, w, 1, n_in as isize, 1.0, &mut out);
            if i + 1 < self.layers() {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
            off += (n_in + 1) * n_out;
        }
        Ok(Tape { batch, acts })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let tape = self.forward_batch(input, 1)?;
        Ok(tape.acts.into_iter().last().expect("output layer"))
    }

    /// Reverse pass: gradient of `Σ_b output_b · upstream_b` with respect to
    /// the parameters (summed over the batch) and to each input row.
    pub fn backward_batch(&self, tape: &Tape, upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let batch = tape.batch;
        check_dim("upstream gradient", batch * self.output_dim(), upstream.len())?;
        let mut grad = vec![0.0; self.params.len()];
        let mut delta = upstream.to_vec();
        let mut offsets = Vec::with_capacity(self.layers());
        let mut off = 0;
        for i in 0..self.layers() {
            offsets.push(off);
            off += (self.sizes[i] + 1) * self.sizes[i + 1];
        }
        for i in (0..self.layers()).rev() {
            let (n_in, n_out) = (self.sizes[i], self.sizes[i + 1]);
            let off = offsets[i];
            let x = &tape.acts[i];
            {
                let (gw, gb) = grad[off..off + (n_in + 1) * n_out].split_at_mut(n_in * n_out);
                // dW (out×in) = δᵀ (out×B) · x (B×in)
                gemm(n_out, batch, n_in, &delta, 1, n_out as isize, x, n_in as isize, 1, 0.0, gw);
                for row in delta.chunks_exact(n_out) {
                    for (g, d) in gb.iter_mut().zip(row) {
                        *g += d;
                    }
                }
            }
            let w = &self.params[off..off + n_in * n_out];
            let mut dx = vec![0.0; batch * n_in];
            // dx (B×in) = δ (B×out) · W (out×in)
            gemm(batch, n_out, n_in, &delta, n_out as isize, 1, w, n_in as isize, 1, 0.0, &mut dx);
            if i > 0 {
                for (d, a) in dx.iter_mut().zip(x) {
                    *d *= 1.0 - a * a;
                }
            }
            delta = dx;
        }
        Ok((grad, delta))
    }

    /// Single-sample convenience wrapper around [`Mlp::backward_batch`].
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let tape = self.forward_batch(input, 1)?;
        self.backward_batch(&tape, upstream)
    }

    /// `target ← τ·current + (1−τ)·target`.
    pub fn soft_update(&mut self, current: &Mlp, tau: f64) -> Result<()> {
        self.same_shape(current)?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(invalid(format!("tau must be in [0, 1], got {tau}")));
        }
        if tau == 1.0 {
            self.params.copy_from_slice(&current.params);
            return Ok(());
        }
        for (t, c) in self.params.iter_mut().zip(&current.params) {
            *t = tau * c + (1.0 - tau) * *t;
        }
        Ok(())
    }
}
