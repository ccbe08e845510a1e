use super::{layout, MlpSpec, NormalizationMaps, ParameterSet, OUTPUT_DIM};
use crate::autodiff::{Jet2, Scalar};
use crate::error::{Error, Result};

/// Jets of (u, v, p) with respect to raw nondimensional (x, z, t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldJet<S = f64> {
    pub u: Jet2<S>,
    pub v: Jet2<S>,
    pub p: Jet2<S>,
}

impl<S: Scalar> FieldJet<S> {
    pub fn zero() -> Self {
        FieldJet {
            u: Jet2::zero(),
            v: Jet2::zero(),
            p: Jet2::zero(),
        }
    }

    pub fn fields(&self) -> [&Jet2<S>; 3] {
        [&self.u, &self.v, &self.p]
    }

    pub fn from_fields([u, v, p]: [Jet2<S>; 3]) -> Self {
        FieldJet { u, v, p }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.p.is_finite()
    }

    pub fn values(&self) -> [f64; 3] {
        [
            self.u.value.value(),
            self.v.value.value(),
            self.p.value.value(),
        ]
    }
}

impl<S: Scalar> std::ops::Add for FieldJet<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        FieldJet {
            u: self.u + rhs.u,
            v: self.v + rhs.v,
            p: self.p + rhs.p,
        }
    }
}

/// Network output at one point, denormalized.
pub fn forward(
    params: &ParameterSet,
    maps: &NormalizationMaps,
    point: [f64; 3],
) -> Result<[f64; 3]> {
    let spec = params.spec();
    let slots = layout(spec);
    let last = slots.len() - 1;
    let values = params.as_slice();
    let mut h: Vec<f64> = maps.normalize_input(point).to_vec();
    for (l, slot) in slots.iter().enumerate() {
        let w = &values[slot.w_offset..slot.b_offset];
        let b = &values[slot.b_offset..slot.b_offset + slot.fan_out];
        let mut next = Vec::with_capacity(slot.fan_out);
        for r in 0..slot.fan_out {
            let mut a = b[r];
            for c in 0..slot.fan_in {
                a += w[r * slot.fan_in + c] * h[c];
            }
            next.push(if l == last {
                a
            } else {
                spec.activation.apply(a)
            });
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("network layer {l}"),
            });
        }
        h = next;
    }
    Ok(maps.denormalize_output([h[0], h[1], h[2]]))
}

/// Propagates input jets through the network; generic over the scalar so
/// parameters can be tape variables. Inputs and outputs are in normalized
/// space.
pub fn mlp_jet<S: Scalar>(spec: &MlpSpec, params: &[S], inputs: [Jet2<S>; 3]) -> [Jet2<S>; 3] {
    let slots = layout(spec);
    let last = slots.len() - 1;
    let mut h: Vec<Jet2<S>> = inputs.to_vec();
    for (l, slot) in slots.iter().enumerate() {
        let next: Vec<Jet2<S>> = (0..slot.fan_out)
            .map(|r| {
                let row = &params[slot.w_offset + r * slot.fan_in..][..slot.fan_in];
                let a = Jet2::affine(row, &h, params[slot.b_offset + r]);
                if l == last {
                    a
                } else {
                    spec.activation.apply_jet(a)
                }
            })
            .collect();
        h = next;
    }
    debug_assert_eq!(h.len(), OUTPUT_DIM);
    [h[0], h[1], h[2]]
}

/// Values and first/second derivatives of (u, v, p) with respect to raw
/// (x, z, t), with the normalization chain rule applied.
pub fn forward_jet(
    params: &ParameterSet,
    maps: &NormalizationMaps,
    point: [f64; 3],
) -> Result<FieldJet> {
    let xi = maps.normalize_input(point);
    let seeds = std::array::from_fn(|i| Jet2::variable(xi[i], i));
    let out = mlp_jet(params.spec(), params.as_slice(), seeds);
    let jet = FieldJet::from_fields(std::array::from_fn(|f| maps.physical_jet(f, out[f])));
    if !jet.is_finite() {
        return Err(Error::NonFinite {
            what: "network output jet".into(),
        });
    }
    Ok(jet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::fdcheck::{fd_check, INPUT_STEP};
    use crate::autodiff::Activation;
    use crate::network::{init_params, AffineMap};
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
                AffineMap::new(0.8, 0.1).unwrap(),
            ],
        }
    }

    #[test]
    fn zero_network_returns_offsets() {
        let params = ParameterSet::zeros(MlpSpec::default());
        let out = forward(&params, &maps(), [0.3, 0.4, 1.0]).unwrap();
        assert_eq!(out, [0.0, 0.0, 0.1]);
    }

    #[test]
    fn one_unit_network_by_hand() {
        let spec = MlpSpec::new(1, 1, Activation::Tanh).unwrap();
        // layer 0: w = [0.5, -1.25, 0.75], b = 0.1; layer 1: w = [2, -3, 0.5], b = [0.2, 0.0, -0.4]
        let flat = vec![0.5, -1.25, 0.75, 0.1, 2.0, -3.0, 0.5, 0.2, 0.0, -0.4];
        let params = ParameterSet::from_flat(spec, flat).unwrap();
        let ident = NormalizationMaps::default();
        let (x, z, t) = (0.3, 0.7, 0.2);
        let h = (0.1 + 0.5 * x - 1.25 * z + 0.75 * t).tanh();
        let want = [0.2 + 2.0 * h, -3.0 * h, -0.4 + 0.5 * h];
        let got = forward(&params, &ident, [x, z, t]).unwrap();
        for k in 0..3 {
            assert!((got[k] - want[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_matches_jet_value_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Relu] {
            let params = init_params(MlpSpec::new(3, 9, act).unwrap(), 3);
            for _ in 0..100 {
                let p = [rng.random(), rng.random(), rng.random::<f64>() * 6.0];
                let v = forward(&params, &maps(), p).unwrap();
                let j = forward_jet(&params, &maps(), p).unwrap();
                assert_eq!(v, j.values());
            }
        }
    }

    #[test]
    fn time_blind_network_has_zero_time_derivatives() {
        let spec = MlpSpec::new(2, 5, Activation::Tanh).unwrap();
        let mut params = init_params(spec, 5);
        let slot = params.layout()[0];
        for r in 0..slot.fan_out {
            params.as_mut_slice()[slot.w_offset + r * 3 + 2] = 0.0;
        }
        let j = forward_jet(&params, &maps(), [0.2, 0.6, 3.0]).unwrap();
        for f in j.fields() {
            assert_eq!(f.d1[2], 0.0);
            for k in [2, 4, 5] {
                assert_eq!(f.d2[k], 0.0);
            }
        }
    }

    #[test]
    fn doubling_output_scale_doubles_jet() {
        let params = init_params(MlpSpec::new(2, 6, Activation::Tanh).unwrap(), 9);
        let m1 = maps();
        let mut m2 = m1;
        m2.outputs[0].scale *= 2.0;
        let p = [0.4, 0.45, 2.2];
        let a = forward_jet(&params, &m1, p).unwrap().u.components();
        let b = forward_jet(&params, &m2, p).unwrap().u.components();
        for k in 0..10 {
            assert_eq!(b[k], 2.0 * a[k]);
        }
    }

    #[test]
    fn jets_match_finite_differences() {
        let params = init_params(MlpSpec::new(3, 8, Activation::Tanh).unwrap(), 21);
        let m = maps();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let p = [
                rng.random_range(0.1..0.9),
                rng.random_range(0.1..0.9),
                rng.random_range(0.5..5.5),
            ];
            let jet = forward_jet(&params, &m, p).unwrap();
            for (f, fj) in jet.fields().into_iter().enumerate() {
                let r = fd_check(|q| forward(&params, &m, q).unwrap()[f], fj, p, INPUT_STEP);
                assert!(r.max_rel() < 1e-4, "{:?}", r.worst());
            }
        }
    }
}
