//! Batched jet propagation with a hand-written reverse pass.
//!
//! Every layer keeps one row-major matrix of shape `units × (10·n)`: the
//! column block `c·n .. (c+1)·n` holds jet component `c` (value, three first
//! derivatives, six second derivatives in [`PAIRS`] order) for the `n`
//! batch points. Affine layers act on all ten blocks with one GEMM (the bias
//! only enters the value block); activations apply the second-order chain
//! rule point-wise. The reverse pass treats every jet component as an
//! intermediate value, so gradients flow through the input derivatives.
//!
//! [`PAIRS`]: crate::autodiff::jet::PAIRS

use super::{layout, LayerSlot, ParameterSet};
use crate::autodiff::jet::PAIRS;
use crate::autodiff::Activation;

/// Jet components per field: value, 3 first and 6 second derivatives.
pub const COMPONENTS: usize = 10;

/// `c = a · b + beta · c` on row-major/strided slices.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
    beta: f64,
) {
    assert!(m == 0 || k == 0 || (m - 1) * rsa + (k - 1) * csa < a.len());
    assert!(k == 0 || n == 0 || (k - 1) * rsb + (n - 1) * csb < b.len());
    assert!(c.len() >= m * n);
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Forward record for one batch, reusable across batches of equal size.
#[derive(Debug, Default)]
pub struct BatchTape {
    n: usize,
    slots: Vec<LayerSlot>,
    activation: Activation,
    /// Input matrix of each layer (`fan_in × 10n`).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each hidden layer (`fan_out × 10n`).
    preacts: Vec<Vec<f64>>,
    output: Vec<f64>,
    adj_a: Vec<f64>,
    adj_b: Vec<f64>,
}

impl BatchTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Output jets in normalized space, laid out `[field][component][point]`.
    pub fn outputs(&self) -> &[f64] {
        &self.output
    }

    #[inline]
    pub fn output(&self, field: usize, component: usize, point: usize) -> f64 {
        self.output[(field * COMPONENTS + component) * self.n + point]
    }

    /// Runs the network on normalized inputs `xi`, seeding first
    /// derivatives with respect to each normalized coordinate.
    pub fn forward(&mut self, params: &ParameterSet, xi: &[[f64; 3]]) {
        let n = xi.len();
        let width = COMPONENTS * n;
        let spec = params.spec();
        self.n = n;
        self.activation = spec.activation;
        self.slots = layout(spec);
        let hidden = self.slots.len() - 1;
        self.inputs.resize_with(self.slots.len(), Vec::new);
        self.preacts.resize_with(hidden, Vec::new);

        let seed = &mut self.inputs[0];
        seed.clear();
        seed.resize(3 * width, 0.0);
        for (i, row) in seed.chunks_exact_mut(width).enumerate() {
            for (k, p) in xi.iter().enumerate() {
                row[k] = p[i];
            }
            row[(1 + i) * n..(2 + i) * n].fill(1.0);
        }

        let values = params.as_slice();
        for l in 0..self.slots.len() {
            let slot = self.slots[l];
            let w = &values[slot.w_offset..slot.b_offset];
            let b = &values[slot.b_offset..slot.b_offset + slot.fan_out];
            let target = if l < hidden {
                &mut self.preacts[l]
            } else {
                &mut self.output
            };
            target.resize(slot.fan_out * width, 0.0);
            gemm(
                slot.fan_out,
                slot.fan_in,
                width,
                w,
                (slot.fan_in, 1),
                &self.inputs[l],
                (width, 1),
                target,
                0.0,
            );
            for (r, row) in target.chunks_exact_mut(width).enumerate() {
                for v in &mut row[..n] {
                    *v += b[r];
                }
            }
            if l < hidden {
                let (z, next) = (&self.preacts[l], &mut self.inputs[l + 1]);
                next.resize(slot.fan_out * width, 0.0);
                activate_forward(self.activation, z, next, n);
            }
        }
    }

    /// Accumulates `∂L/∂θ` into `grad` (overwritten) given `∂L/∂output` in
    /// the layout of [`BatchTape::outputs`].
    pub fn backward(&mut self, params: &ParameterSet, output_adjoint: &[f64], grad: &mut [f64]) {
        let n = self.n;
        let width = COMPONENTS * n;
        assert_eq!(output_adjoint.len(), self.output.len());
        assert_eq!(grad.len(), params.len());
        let values = params.as_slice();

        let mut adj_z = std::mem::take(&mut self.adj_a);
        let mut adj_in = std::mem::take(&mut self.adj_b);
        adj_z.clear();
        adj_z.extend_from_slice(output_adjoint);

        for l in (0..self.slots.len()).rev() {
            let slot = self.slots[l];
            let input = &self.inputs[l];
            gemm(
                slot.fan_out,
                width,
                slot.fan_in,
                &adj_z,
                (width, 1),
                input,
                (1, width),
                &mut grad[slot.w_offset..slot.b_offset],
                0.0,
            );
            for (r, g) in grad[slot.b_offset..slot.b_offset + slot.fan_out]
                .iter_mut()
                .enumerate()
            {
                *g = adj_z[r * width..r * width + n].iter().sum();
            }
            if l == 0 {
                break;
            }
            let w = &values[slot.w_offset..slot.b_offset];
            adj_in.resize(slot.fan_in * width, 0.0);
            gemm(
                slot.fan_in,
                slot.fan_out,
                width,
                w,
                (1, slot.fan_in),
                &adj_z,
                (width, 1),
                &mut adj_in,
                0.0,
            );
            activate_backward(self.activation, &self.preacts[l - 1], &mut adj_in, n);
            std::mem::swap(&mut adj_z, &mut adj_in);
        }
        self.adj_a = adj_z;
        self.adj_b = adj_in;
    }
}

/// Second-order chain rule through the activation, row by row.
fn activate_forward(act: Activation, z: &[f64], out: &mut [f64], n: usize) {
    let width = COMPONENTS * n;
    for (zr, or) in z.chunks_exact(width).zip(out.chunks_exact_mut(width)) {
        for k in 0..n {
            let d = act.derivatives(zr[k]);
            let a1 = [zr[n + k], zr[2 * n + k], zr[3 * n + k]];
            or[k] = d[0];
            for i in 0..3 {
                or[(1 + i) * n + k] = d[1] * a1[i];
            }
            for (p, &(i, j)) in PAIRS.iter().enumerate() {
                let slot = (4 + p) * n + k;
                or[slot] = d[2] * a1[i] * a1[j] + d[1] * zr[slot];
            }
        }
    }
}

/// Reverse of [`activate_forward`]: turns output adjoints into
/// pre-activation adjoints in place.
fn activate_backward(act: Activation, z: &[f64], adj: &mut [f64], n: usize) {
    let width = COMPONENTS * n;
    for (zr, ar) in z.chunks_exact(width).zip(adj.chunks_exact_mut(width)) {
        for k in 0..n {
            let d = act.derivatives(zr[k]);
            let a1 = [zr[n + k], zr[2 * n + k], zr[3 * n + k]];
            let y0 = ar[k];
            let y1 = [ar[n + k], ar[2 * n + k], ar[3 * n + k]];
            let mut z0 = y0 * d[1];
            let mut z1 = [y1[0] * d[1], y1[1] * d[1], y1[2] * d[1]];
            for i in 0..3 {
                z0 += d[2] * y1[i] * a1[i];
            }
            for (p, &(i, j)) in PAIRS.iter().enumerate() {
                let slot = (4 + p) * n + k;
                let y2 = ar[slot];
                z0 += y2 * (d[3] * a1[i] * a1[j] + d[2] * zr[slot]);
                z1[i] += y2 * d[2] * a1[j];
                z1[j] += y2 * d[2] * a1[i];
                ar[slot] = y2 * d[1];
            }
            ar[k] = z0;
            for i in 0..3 {
                ar[(1 + i) * n + k] = z1[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::jet::Jet2;
    use crate::autodiff::{loss_parameter_gradient, Scalar};
    use crate::network::{init_params, mlp_jet, MlpSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn points(n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect()
    }

    #[test]
    fn batch_matches_pointwise_jets() {
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Relu] {
            let params = init_params(MlpSpec::new(3, 7, act).unwrap(), 2);
            let xs = points(13, 1);
            let mut tape = BatchTape::new();
            tape.forward(&params, &xs);
            for (k, x) in xs.iter().enumerate() {
                let seeds = std::array::from_fn(|i| Jet2::variable(x[i], i));
                let out = mlp_jet(params.spec(), params.as_slice(), seeds);
                for (f, jet) in out.iter().enumerate() {
                    for (s, want) in jet.components().into_iter().enumerate() {
                        let got = tape.output(f, s, k);
                        assert!(
                            (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
                            "{act} f{f} s{s}"
                        );
                    }
                }
            }
        }
    }

    /// Weighted sum of every output component: the reverse pass must agree
    /// with the tape-recorded gradient of the same functional.
    #[test]
    fn backward_matches_tape_gradient() {
        for act in [Activation::Tanh, Activation::Sigmoid] {
            let spec = MlpSpec::new(2, 4, act).unwrap();
            let params = init_params(spec, 6);
            let xs = points(5, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let weights: Vec<f64> = (0..3 * COMPONENTS * xs.len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();

            let mut tape = BatchTape::new();
            tape.forward(&params, &xs);
            let mut grad = vec![f64::NAN; params.len()];
            tape.backward(&params, &weights, &mut grad);

            let n = xs.len();
            let (_, reference) = loss_parameter_gradient(params.as_slice(), |theta| {
                let mut acc = <crate::autodiff::Var as Scalar>::constant(0.0);
                for (k, x) in xs.iter().enumerate() {
                    let seeds = std::array::from_fn(|i| {
                        Jet2::variable(<crate::autodiff::Var as Scalar>::constant(x[i]), i)
                    });
                    let out = mlp_jet(&spec, theta, seeds);
                    for f in 0..3 {
                        let comps = [
                            out[f].value,
                            out[f].d1[0],
                            out[f].d1[1],
                            out[f].d1[2],
                            out[f].d2[0],
                            out[f].d2[1],
                            out[f].d2[2],
                            out[f].d2[3],
                            out[f].d2[4],
                            out[f].d2[5],
                        ];
                        for (s, c) in comps.into_iter().enumerate() {
                            acc = acc + c * weights[(f * COMPONENTS + s) * n + k];
                        }
                    }
                }
                acc
            })
            .unwrap();
            for (i, (a, b)) in grad.iter().zip(reference.iter()).enumerate() {
                assert!(
                    (a - b).abs() <= 1e-11 * (1.0 + b.abs()),
                    "{act} θ[{i}]: {a} vs {b}"
                );
            }
        }
    }
}
