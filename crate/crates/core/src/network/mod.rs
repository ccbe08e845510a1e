//! Fully-connected network mapping normalized (x, z, t) to normalized
//! (u, v, p), with jet-propagating evaluation.

mod batch;
mod eval;
mod io;
mod norm;

pub use batch::{BatchTape, COMPONENTS};
pub use eval::{forward, forward_jet, mlp_jet, FieldJet};
pub(crate) use io::write_row;
pub use io::{parse_network, write_network};
pub use norm::{AffineMap, NormalizationMaps};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Activation;
use crate::error::{Error, Result};

pub const INPUT_DIM: usize = 3;
pub const OUTPUT_DIM: usize = 3;

/// Architecture of the multilayer perceptron. The output layer is linear.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MlpSpec {
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub activation: Activation,
}

impl Default for MlpSpec {
    /// Five hidden layers of forty tanh units.
    fn default() -> Self {
        MlpSpec {
            hidden_layers: 5,
            hidden_units: 40,
            activation: Activation::Tanh,
        }
    }
}

impl MlpSpec {
    pub fn new(hidden_layers: usize, hidden_units: usize, activation: Activation) -> Result<Self> {
        let spec = MlpSpec {
            hidden_layers,
            hidden_units,
            activation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.hidden_units == 0 {
            return Err(Error::invalid(
                "network needs at least one hidden layer with at least one unit",
            ));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every affine layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let h = self.hidden_units;
        let mut dims = Vec::with_capacity(self.hidden_layers + 1);
        dims.push((INPUT_DIM, h));
        for _ in 1..self.hidden_layers {
            dims.push((h, h));
        }
        dims.push((h, OUTPUT_DIM));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(fi, fo)| (fi + 1) * fo)
            .sum()
    }
}

/// All weights and biases, stored flat.
///
/// Flattening order: for each layer from input to output, the weight matrix
/// (`fan_out × fan_in`, row-major) followed by the bias vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    spec: MlpSpec,
    values: Vec<f64>,
}

impl ParameterSet {
    pub fn zeros(spec: MlpSpec) -> Self {
        ParameterSet {
            spec,
            values: vec![0.0; spec.param_count()],
        }
    }

    pub fn from_flat(spec: MlpSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.param_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                spec.param_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("parameter {i}"),
            });
        }
        Ok(ParameterSet { spec, values })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    /// Offsets of the weight block and bias block of every layer.
    pub fn layout(&self) -> Vec<LayerSlot> {
        layout(&self.spec)
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let s = self.layout()[layer];
        &self.values[s.w_offset..s.w_offset + s.fan_in * s.fan_out]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let s = self.layout()[layer];
        &self.values[s.b_offset..s.b_offset + s.fan_out]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSlot {
    pub fan_in: usize,
    pub fan_out: usize,
    pub w_offset: usize,
    pub b_offset: usize,
}

pub fn layout(spec: &MlpSpec) -> Vec<LayerSlot> {
    let mut offset = 0;
    spec.layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let slot = LayerSlot {
                fan_in,
                fan_out,
                w_offset: offset,
                b_offset: offset + fan_in * fan_out,
            };
            offset += (fan_in + 1) * fan_out;
            slot
        })
        .collect()
}

/// Glorot-uniform half-width for a layer.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Glorot-uniform weights, zero biases; deterministic in `seed`.
pub fn init_params(spec: MlpSpec, seed: u64) -> ParameterSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParameterSet::zeros(spec);
    for slot in layout(&spec) {
        let bound = glorot_bound(slot.fan_in, slot.fan_out);
        for w in &mut params.values[slot.w_offset..slot.b_offset] {
            *w = rng.random_range(-bound..=bound);
        }
    }
    params
}
