use crate::autodiff::jet::{Jet2, PAIRS};
use crate::autodiff::Scalar;
use crate::error::{Error, Result};

/// `normalized = (raw - offset) / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    pub fn new(scale: f64, offset: f64) -> Result<Self> {
        if scale == 0.0 || !scale.is_finite() || !offset.is_finite() {
            return Err(Error::invalid(format!(
                "affine map needs a finite nonzero scale, got ({scale}, {offset})"
            )));
        }
        Ok(AffineMap { scale, offset })
    }

    pub const fn identity() -> Self {
        AffineMap {
            scale: 1.0,
            offset: 0.0,
        }
    }

    /// Maps `[lo, hi]` onto `[0, 1]`; the endpoints land exactly.
    pub fn unit_interval(lo: f64, hi: f64) -> Result<Self> {
        if hi <= lo {
            return Err(Error::invalid(format!("empty interval [{lo}, {hi}]")));
        }
        AffineMap::new(hi - lo, lo)
    }

    /// Maps `[-m, m]` onto `[-1, 1]` for `m = max |v|`. A zero range maps
    /// with unit scale.
    pub fn symmetric(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let m = values.into_iter().map(f64::abs).fold(0.0, f64::max);
        AffineMap::new(if m > 0.0 { m } else { 1.0 }, 0.0)
    }

    #[inline]
    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.offset) / self.scale
    }

    #[inline]
    pub fn denormalize(&self, normalized: f64) -> f64 {
        normalized * self.scale + self.offset
    }
}

/// Input maps to `[0, 1]` for (x, z, t) and output maps to `[-1, 1]` for
/// (u, v, p).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationMaps {
    pub inputs: [AffineMap; 3],
    pub outputs: [AffineMap; 3],
}

impl Default for NormalizationMaps {
    fn default() -> Self {
        NormalizationMaps {
            inputs: [AffineMap::identity(); 3],
            outputs: [AffineMap::identity(); 3],
        }
    }
}

impl NormalizationMaps {
    /// Input bounds from `(lo, hi)` per axis, symmetric output maps from the
    /// data columns.
    pub fn from_bounds_and_data(
        bounds: [(f64, f64); 3],
        u: &[f64],
        v: &[f64],
        p: &[f64],
    ) -> Result<Self> {
        Ok(NormalizationMaps {
            inputs: [
                AffineMap::unit_interval(bounds[0].0, bounds[0].1)?,
                AffineMap::unit_interval(bounds[1].0, bounds[1].1)?,
                AffineMap::unit_interval(bounds[2].0, bounds[2].1)?,
            ],
            outputs: [
                AffineMap::symmetric(u.iter().copied())?,
                AffineMap::symmetric(v.iter().copied())?,
                AffineMap::symmetric(p.iter().copied())?,
            ],
        })
    }

    pub fn normalize_input(&self, point: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| self.inputs[i].normalize(point[i]))
    }

    pub fn normalize_output(&self, fields: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| self.outputs[i].normalize(fields[i]))
    }

    pub fn denormalize_output(&self, normalized: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| self.outputs[i].denormalize(normalized[i]))
    }

    /// Multiplier taking jet component `slot` (0 value, 1..4 first, 4..10
    /// second derivatives) from normalized inputs to raw inputs.
    pub fn input_chain_factor(&self, slot: usize) -> f64 {
        match slot {
            0 => 1.0,
            1..=3 => 1.0 / self.inputs[slot - 1].scale,
            4..=9 => {
                let (i, j) = PAIRS[slot - 4];
                1.0 / (self.inputs[i].scale * self.inputs[j].scale)
            }
            _ => panic!("jet slot out of range"),
        }
    }

    /// Converts the jet of normalized output `field` with respect to
    /// normalized inputs into the jet of the raw field with respect to raw
    /// inputs.
    pub fn physical_jet<S: Scalar>(&self, field: usize, jet: Jet2<S>) -> Jet2<S> {
        let out = self.outputs[field];
        let mut j = Jet2 {
            value: jet.value * out.scale + out.offset,
            d1: jet.d1,
            d2: jet.d2,
        };
        for i in 0..3 {
            j.d1[i] = j.d1[i] * (out.scale * self.input_chain_factor(1 + i));
        }
        for k in 0..6 {
            j.d2[k] = j.d2[k] * (out.scale * self.input_chain_factor(4 + k));
        }
        j
    }
}
