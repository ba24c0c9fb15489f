//! Fully connected ReLU networks with inverted dropout and hand-written
//! reverse-mode gradients. Parameters live in one flat vector so that the
//! optimizer and checkpoints treat every network alike.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// `c = beta * c + a(m x k) * b(k x n)`, all row-major.
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `c = beta * c + a(m x k)^T * b(m x n)`; c is k x n.
pub(crate) fn gemm_tn(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    if k == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            k, m, n, 1.0,
            a.as_ptr(), 1, k as isize,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `c = beta * c + a(m x n) * b(k x n)^T`; c is m x k.
pub(crate) fn gemm_nt(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    if m == 0 || k == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m, n, k, 1.0,
            a.as_ptr(), n as isize, 1,
            b.as_ptr(), 1, n as isize,
            beta,
            c.as_mut_ptr(), k as isize, 1,
        );
    }
}

/// Multilayer perceptron: ReLU + dropout after every hidden layer, linear
/// output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    /// Layer widths from input to output.
    pub sizes: Vec<usize>,
    /// Per layer: weights `[in][out]` row-major, then biases `[out]`.
    pub params: Vec<f64>,
    pub dropout: f64,
}

/// Activations saved by a training forward pass.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    /// Input of every layer.
    inputs: Vec<Vec<f64>>,
    /// d(hidden output)/d(pre-activation) per hidden layer: 0, or the
    /// dropout keep scale where the unit is active.
    gates: Vec<Vec<f64>>,
    rows: usize,
}

impl DenseNet {
    /// Network with every parameter zero.
    pub fn zeros(sizes: &[usize], dropout: f64) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output widths");
        let count = Self::param_count_for(sizes);
        DenseNet {
            sizes: sizes.to_vec(),
            params: vec![0.0; count],
            dropout,
        }
    }

    /// Uniform initialization in +-1/sqrt(fan_in) for weights and biases.
    pub fn init<R: Rng>(sizes: &[usize], dropout: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes, dropout);
        let mut offset = 0;
        for l in 0..net.layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out + fan_out] {
                *p = rng.gen_range(-bound..bound);
            }
            offset += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn param_count_for(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Offset of layer `l`'s weights in the flat parameter vector.
    pub(crate) fn layer_offset(&self, l: usize) -> usize {
        self.sizes[..=l].windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let off = self.layer_offset(l);
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        (&self.params[off..off + i * o], &self.params[off + i * o..off + i * o + o])
    }

    /// Inference pass over `rows` inputs (dropout off).
    pub fn predict(&self, input: &[f64], rows: usize) -> Vec<f64> {
        self.run(input, rows, None, None)
    }

    /// Training pass; `mask_rng` enables dropout. Fills `tape` for
    /// [`DenseNet::backward`].
    pub fn forward_train<R: Rng>(
        &self,
        input: &[f64],
        rows: usize,
        mask_rng: Option<&mut R>,
        tape: &mut Tape,
    ) -> Vec<f64> {
        let keep = 1.0 - self.dropout;
        let mut draw = mask_rng.filter(|_| self.dropout > 0.0);
        let mut gate = |z: f64| -> f64 {
            if z <= 0.0 {
                // still consume a draw so masks do not depend on activations
                if let Some(rng) = draw.as_mut() {
                    let _: f64 = rng.gen();
                }
                return 0.0;
            }
            match draw.as_mut() {
                Some(rng) => {
                    if rng.gen::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                }
                None => 1.0,
            }
        };
        tape.rows = rows;
        tape.inputs.clear();
        tape.gates.clear();
        self.run(input, rows, Some(&mut gate), Some(tape))
    }

    fn run(
        &self,
        input: &[f64],
        rows: usize,
        mut gate: Option<&mut dyn FnMut(f64) -> f64>,
        mut tape: Option<&mut Tape>,
    ) -> Vec<f64> {
        assert_eq!(input.len(), rows * self.input_dim(), "input shape mismatch");
        let mut a = input.to_vec();
        for l in 0..self.layers() {
            let (w, b) = self.layer(l);
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let mut z = Vec::with_capacity(rows * o);
            for _ in 0..rows {
                z.extend_from_slice(b);
            }
            gemm(rows, i, o, &a, w, 1.0, &mut z);
            let hidden = l + 1 < self.layers();
            if hidden {
                let mut g = vec![0.0; z.len()];
                for (zv, gv) in z.iter_mut().zip(g.iter_mut()) {
                    *gv = match gate.as_mut() {
                        Some(f) => f(*zv),
                        None => f64::from(u8::from(*zv > 0.0)),
                    };
                    *zv = if *zv > 0.0 { *zv * *gv } else { 0.0 };
                }
                if let Some(t) = tape.as_mut() {
                    t.gates.push(g);
                }
            }
            if let Some(t) = tape.as_mut() {
                t.inputs.push(std::mem::replace(&mut a, Vec::new()));
            }
            a = z;
        }
        a
    }

    /// Accumulates parameter gradients into `grad` (same layout as
    /// `params`) given the output gradient, and returns the input gradient
    /// when `want_input` is set.
    pub fn backward(&self, tape: &Tape, d_out: &[f64], grad: &mut [f64], want_input: bool) -> Option<Vec<f64>> {
        let rows = tape.rows;
        let mut dz = d_out.to_vec();
        let mut d_input = None;
        for l in (0..self.layers()).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.layer_offset(l);
            let a = &tape.inputs[l];
            gemm_tn(rows, i, o, a, &dz, 1.0, &mut grad[off..off + i * o]);
            let gb = &mut grad[off + i * o..off + i * o + o];
            for r in 0..rows {
                for (g, d) in gb.iter_mut().zip(&dz[r * o..(r + 1) * o]) {
                    *g += d;
                }
            }
            if l == 0 && !want_input {
                break;
            }
            let (w, _) = self.layer(l);
            let mut da = vec![0.0; rows * i];
            gemm_nt(rows, o, i, &dz, w, 0.0, &mut da);
            if l == 0 {
                d_input = Some(da);
                break;
            }
            for (d, g) in da.iter_mut().zip(&tape.gates[l - 1]) {
                *d *= g;
            }
            dz = da;
        }
        d_input
    }
}
