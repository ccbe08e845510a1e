//! Second-order forward jets in the three inputs (x, z, t).

use std::ops::{Add, Mul, Neg, Sub};

use super::scalar::Scalar;

/// Axis index of x in derivative arrays.
pub const X: usize = 0;
/// Axis index of z in derivative arrays.
pub const Z: usize = 1;
/// Axis index of t in derivative arrays.
pub const T: usize = 2;

/// Storage order of the symmetric second-derivative block.
pub const PAIRS: [(usize, usize); 6] = [(X, X), (Z, Z), (T, T), (X, Z), (X, T), (Z, T)];

pub const XX: usize = 0;
pub const ZZ: usize = 1;
pub const TT: usize = 2;
pub const XZ: usize = 3;
pub const XT: usize = 4;
pub const ZT: usize = 5;

/// Slot of the unordered pair `(i, j)` in [`PAIRS`].
#[inline]
pub const fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => XX,
        (1, 1) => ZZ,
        (2, 2) => TT,
        (0, 1) => XZ,
        (0, 2) => XT,
        (1, 2) => ZT,
        _ => panic!("axis out of range"),
    }
}

/// Value with first and second partial derivatives in (x, z, t).
///
/// Mixed partials are stored once, so `d2_at(i, j) == d2_at(j, i)` holds by
/// construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<S = f64> {
    pub value: S,
    pub d1: [S; 3],
    pub d2: [S; 6],
}

impl<S: Scalar> Jet2<S> {
    pub fn constant(value: S) -> Self {
        Jet2 {
            value,
            d1: [S::zero(); 3],
            d2: [S::zero(); 6],
        }
    }

    /// Seed jet of the coordinate `axis` at `value`.
    pub fn variable(value: S, axis: usize) -> Self {
        let mut jet = Self::constant(value);
        jet.d1[axis] = S::constant(1.0);
        jet
    }

    pub fn zero() -> Self {
        Self::constant(S::zero())
    }

    #[inline]
    pub fn d2_at(&self, i: usize, j: usize) -> S {
        self.d2[pair_index(i, j)]
    }

    pub fn scale(self, k: f64) -> Self {
        Jet2 {
            value: self.value * k,
            d1: self.d1.map(|d| d * k),
            d2: self.d2.map(|d| d * k),
        }
    }

    /// `Σ weights[i] · jets[i] + bias`, accumulated left to right.
    pub fn affine(weights: &[S], jets: &[Jet2<S>], bias: S) -> Self {
        debug_assert_eq!(weights.len(), jets.len());
        let mut out = Self::constant(bias);
        for (&w, j) in weights.iter().zip(jets) {
            out.value = out.value + w * j.value;
            for k in 0..3 {
                out.d1[k] = out.d1[k] + w * j.d1[k];
            }
            for k in 0..6 {
                out.d2[k] = out.d2[k] + w * j.d2[k];
            }
        }
        out
    }

    /// Composes an outer scalar function `φ` with this jet, given
    /// `φ(v)`, `φ'(v)` and `φ''(v)` at the current value.
    pub fn chain(self, f0: S, f1: S, f2: S) -> Self {
        let mut d2 = [S::zero(); 6];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            d2[k] = f2 * self.d1[i] * self.d1[j] + f1 * self.d2[k];
        }
        Jet2 {
            value: f0,
            d1: self.d1.map(|d| f1 * d),
            d2,
        }
    }

    pub fn tanh(self) -> Self {
        let t = self.value.tanh();
        let f1 = S::constant(1.0) - t * t;
        let f2 = t * f1 * -2.0;
        self.chain(t, f1, f2)
    }

    pub fn sin(self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    /// True when every component is finite.
    pub fn is_finite(&self) -> bool {
        self.value.value().is_finite()
            && self.d1.iter().all(|d| d.value().is_finite())
            && self.d2.iter().all(|d| d.value().is_finite())
    }

    /// All ten components as plain numbers: value, d1, d2.
    pub fn components(&self) -> [f64; 10] {
        let mut out = [0.0; 10];
        out[0] = self.value.value();
        for k in 0..3 {
            out[1 + k] = self.d1[k].value();
        }
        for k in 0..6 {
            out[4 + k] = self.d2[k].value();
        }
        out
    }
}

impl Jet2<f64> {
    pub fn from_components(c: [f64; 10]) -> Self {
        Jet2 {
            value: c[0],
            d1: [c[1], c[2], c[3]],
            d2: [c[4], c[5], c[6], c[7], c[8], c[9]],
        }
    }
}

impl<S: Scalar> Add for Jet2<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Jet2 {
            value: self.value + rhs.value,
            d1: std::array::from_fn(|k| self.d1[k] + rhs.d1[k]),
            d2: std::array::from_fn(|k| self.d2[k] + rhs.d2[k]),
        }
    }
}

impl<S: Scalar> Sub for Jet2<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Jet2 {
            value: self.value - rhs.value,
            d1: std::array::from_fn(|k| self.d1[k] - rhs.d1[k]),
            d2: std::array::from_fn(|k| self.d2[k] - rhs.d2[k]),
        }
    }
}

impl<S: Scalar> Neg for Jet2<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet2 {
            value: -self.value,
            d1: self.d1.map(|d| -d),
            d2: self.d2.map(|d| -d),
        }
    }
}

/// Product rule to second order.
impl<S: Scalar> Mul for Jet2<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut d2 = [S::zero(); 6];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            d2[k] = self.d2[k] * rhs.value
                + self.d1[i] * rhs.d1[j]
                + self.d1[j] * rhs.d1[i]
                + self.value * rhs.d2[k];
        }
        Jet2 {
            value: self.value * rhs.value,
            d1: std::array::from_fn(|k| self.d1[k] * rhs.value + self.value * rhs.d1[k]),
            d2,
        }
    }
}

impl<S: Scalar> Mul<f64> for Jet2<S> {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        self.scale(k)
    }
}
