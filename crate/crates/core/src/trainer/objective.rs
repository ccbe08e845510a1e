//! Total loss of one mini-batch and its parameter gradient.
//!
//! The data misfit is measured between normalized predictions and
//! normalized targets. The residuals use jets in raw nondimensional
//! coordinates, obtained by scaling each normalized-space jet component by
//! the output scale and the input chain factor of its slot.

use crate::autodiff::{Jet2, Scalar};
use crate::error::{Error, Result};
use crate::network::{
    mlp_jet, BatchTape, FieldJet, MlpSpec, NormalizationMaps, ParameterSet, COMPONENTS,
};
use crate::residual::{
    residuals, ConstraintLoss, DataLoss, LossBreakdown, NondimParams, ResidualStencil,
};

/// Training rows in the form the objective consumes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Batch {
    /// Normalized inputs.
    pub xi: Vec<[f64; 3]>,
    /// Normalized targets.
    pub targets: Vec<[f64; 3]>,
    /// Source term at each raw point.
    pub q: Vec<f64>,
}

impl Batch {
    /// Builds a batch from raw points and values.
    pub fn from_raw(
        points: &[[f64; 3]],
        values: &[[f64; 3]],
        q: Vec<f64>,
        maps: &NormalizationMaps,
    ) -> Result<Self> {
        if points.len() != values.len() || points.len() != q.len() {
            return Err(Error::invalid("batch columns differ in length"));
        }
        Ok(Batch {
            xi: points.iter().map(|&p| maps.normalize_input(p)).collect(),
            targets: values.iter().map(|&v| maps.normalize_output(v)).collect(),
            q,
        })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Rows at `indices`, appended to `self` after clearing it.
    pub fn gather_from(&mut self, source: &Batch, indices: &[usize]) {
        self.xi.clear();
        self.targets.clear();
        self.q.clear();
        for &i in indices {
            self.xi.push(source.xi[i]);
            self.targets.push(source.targets[i]);
            self.q.push(source.q[i]);
        }
    }
}

/// Reusable buffers for [`Objective::evaluate`].
#[derive(Debug, Default)]
pub struct Workspace {
    tape: BatchTape,
    adjoint: Vec<f64>,
    residual: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Loss definition shared by every batch of a run.
#[derive(Clone, Debug)]
pub struct Objective {
    maps: NormalizationMaps,
    params: NondimParams,
    stencil: ResidualStencil,
}

impl Objective {
    pub fn new(maps: NormalizationMaps, params: NondimParams) -> Self {
        Objective {
            maps,
            stencil: ResidualStencil::new(&params),
            params,
        }
    }

    pub fn maps(&self) -> &NormalizationMaps {
        &self.maps
    }

    pub fn params(&self) -> &NondimParams {
        &self.params
    }

    /// Loss breakdown of `batch`; when `grad` is given it is overwritten with
    /// the gradient of the total loss.
    pub fn evaluate(
        &self,
        theta: &ParameterSet,
        batch: &Batch,
        ws: &mut Workspace,
        grad: Option<&mut [f64]>,
    ) -> Result<LossBreakdown> {
        let n = batch.len();
        if n == 0 {
            return Err(Error::invalid("loss over an empty batch"));
        }
        let inv_n = 1.0 / n as f64;
        ws.tape.forward(theta, &batch.xi);
        let out = ws.tape.outputs();
        let at = |field: usize, slot: usize| (field * COMPONENTS + slot) * n;
        let want_grad = grad.is_some();
        if want_grad {
            ws.adjoint.clear();
            ws.adjoint.resize(out.len(), 0.0);
        }

        let mut mse_data = [0.0; 3];
        for (field, acc) in mse_data.iter_mut().enumerate() {
            let base = at(field, 0);
            for k in 0..n {
                let e = out[base + k] - batch.targets[k][field];
                *acc += e * e;
                if want_grad {
                    ws.adjoint[base + k] = 2.0 * e * inv_n;
                }
            }
            *acc *= inv_n;
        }

        let mut mse_res = [0.0; 3];
        for (eq, terms) in self.stencil.rows().into_iter().enumerate() {
            let source = if eq == 2 {
                self.stencil.source_coef
            } else {
                0.0
            };
            ws.residual.clear();
            ws.residual.extend(batch.q.iter().map(|q| source * q));
            for term in terms {
                let factor = term.coef * self.factor(term.field, term.slot);
                let base = at(term.field, term.slot);
                for (r, o) in ws.residual.iter_mut().zip(&out[base..base + n]) {
                    *r += factor * o;
                }
            }
            mse_res[eq] = ws.residual.iter().map(|r| r * r).sum::<f64>() * inv_n;
            if want_grad {
                for term in terms {
                    let factor = term.coef * self.factor(term.field, term.slot);
                    let base = at(term.field, term.slot);
                    for (a, r) in ws.adjoint[base..base + n].iter_mut().zip(&ws.residual) {
                        *a += factor * 2.0 * r * inv_n;
                    }
                }
            }
        }

        let breakdown = breakdown(mse_data, mse_res);
        if let Some(grad) = grad {
            if breakdown.total.is_finite() {
                ws.tape.backward(theta, &ws.adjoint, grad);
            }
        }
        Ok(breakdown)
    }

    fn factor(&self, field: usize, slot: usize) -> f64 {
        self.maps.outputs[field].scale * self.maps.input_chain_factor(slot)
    }

    /// The same total loss written point by point on [`Jet2`], generic over
    /// the scalar so it can be recorded on a tape. Slow; used to cross-check
    /// [`Objective::evaluate`].
    pub fn reference_total<S: Scalar>(&self, spec: &MlpSpec, theta: &[S], batch: &Batch) -> S {
        let n = batch.len() as f64;
        let mut data = S::zero();
        let mut constraint = S::zero();
        for k in 0..batch.len() {
            let seeds = std::array::from_fn(|i| Jet2::variable(S::constant(batch.xi[k][i]), i));
            let out = mlp_jet(spec, theta, seeds);
            for (f, jet) in out.iter().enumerate() {
                let e = jet.value + (-batch.targets[k][f]);
                data = data + e * e;
            }
            let jet =
                FieldJet::from_fields(std::array::from_fn(|f| self.maps.physical_jet(f, out[f])));
            let r = residuals(&jet, &self.params, batch.q[k]);
            constraint = constraint + r.f * r.f + r.g * r.g + r.h * r.h;
        }
        (data + constraint) * (1.0 / n)
    }
}

fn breakdown(data: [f64; 3], res: [f64; 3]) -> LossBreakdown {
    LossBreakdown::new(
        DataLoss {
            mse_u: data[0],
            mse_v: data[1],
            mse_p: data[2],
            mse_t: data[0] + data[1] + data[2],
        },
        ConstraintLoss {
            mse_f: res[0],
            mse_g: res[1],
            mse_h: res[2],
            mse_c: res[0] + res[1] + res[2],
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::fdcheck::PARAM_STEP;
    use crate::autodiff::{fd_check_gradient, loss_parameter_gradient, Activation};
    use crate::network::{forward_jet, init_params, AffineMap};
    use crate::residual::{constraint_loss, training_loss, MassBalanceForm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn maps() -> NormalizationMaps {
        NormalizationMaps {
            inputs: [
                AffineMap::unit_interval(0.0, 1.0).unwrap(),
                AffineMap::unit_interval(0.0, 1.0).unwrap(),
                AffineMap::unit_interval(0.0, 2.0 * std::f64::consts::PI).unwrap(),
            ],
            outputs: [
                AffineMap::new(0.03, 0.0).unwrap(),
                AffineMap::new(0.05, 0.0).unwrap(),
                AffineMap::new(0.2, 0.0).unwrap(),
            ],
        }
    }

    fn batch(
        n: usize,
        seed: u64,
        maps: &NormalizationMaps,
    ) -> (Vec<[f64; 3]>, Vec<[f64; 3]>, Batch) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.random(),
                    rng.random(),
                    rng.random_range(0.0..std::f64::consts::TAU),
                ]
            })
            .collect();
        let vals: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                [
                    rng.random_range(-0.03..0.03),
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.2..0.2),
                ]
            })
            .collect();
        let q = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b = Batch::from_raw(&pts, &vals, q, maps).unwrap();
        (pts, vals, b)
    }

    #[test]
    fn breakdown_matches_pointwise_definitions() {
        let maps = maps();
        let params = NondimParams::default();
        let theta = init_params(MlpSpec::new(2, 6, Activation::Tanh).unwrap(), 4);
        let (pts, vals, b) = batch(17, 5, &maps);
        let obj = Objective::new(maps, params);
        let got = obj
            .evaluate(&theta, &b, &mut Workspace::new(), None)
            .unwrap();

        let mut pred = Vec::new();
        let mut res = Vec::new();
        for (k, p) in pts.iter().enumerate() {
            let jet = forward_jet(&theta, &maps, *p).unwrap();
            pred.push(maps.normalize_output(jet.values()));
            res.push(residuals(&jet, &params, b.q[k]));
        }
        let tgt: Vec<_> = vals.iter().map(|&v| maps.normalize_output(v)).collect();
        let want = LossBreakdown::new(
            training_loss(&pred, &tgt).unwrap(),
            constraint_loss(&res).unwrap(),
        );
        for (g, w) in got.as_row().iter().zip(want.as_row()) {
            assert!((g - w).abs() <= 1e-11 * w.abs().max(1e-12), "{g} vs {w}");
        }
    }

    #[test]
    fn gradient_matches_tape_and_finite_differences() {
        let maps = maps();
        for form in [MassBalanceForm::Consistent, MassBalanceForm::AsPrinted] {
            let params = NondimParams {
                mass_balance: form,
                ..NondimParams::default()
            };
            let spec = MlpSpec::new(2, 5, Activation::Tanh).unwrap();
            let theta = init_params(spec, 8);
            let (_, _, b) = batch(6, 9, &maps);
            let obj = Objective::new(maps, params);
            let mut grad = vec![0.0; theta.len()];
            let lb = obj
                .evaluate(&theta, &b, &mut Workspace::new(), Some(&mut grad))
                .unwrap();

            let (total, tape_grad) =
                loss_parameter_gradient(theta.as_slice(), |t| obj.reference_total(&spec, t, &b))
                    .unwrap();
            assert!((total - lb.total).abs() <= 1e-11 * total);
            for (a, r) in grad.iter().zip(tape_grad.iter()) {
                assert!((a - r).abs() <= 1e-10 * (1.0 + r.abs()), "{a} vs {r}");
            }

            let report = fd_check_gradient(
                |t| obj.reference_total(&spec, t, &b),
                &grad,
                theta.as_slice(),
                PARAM_STEP,
            );
            assert!(report.max_rel() < 1e-4, "{:?}", report.worst());
        }
    }

    #[test]
    fn empty_batch_is_rejected() {
        let obj = Objective::new(maps(), NondimParams::default());
        let theta = init_params(MlpSpec::default(), 0);
        assert!(obj
            .evaluate(&theta, &Batch::default(), &mut Workspace::new(), None)
            .is_err());
    }
}
