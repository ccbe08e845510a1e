//! Nondimensional poroelastic residuals and the mean-squared-error losses.
//!
//! Equilibrium (x and z) and mass balance, in nondimensional form:
//!
//! ```text
//! f = (η+1) u_xx + u_zz + η v_xz + (η+1) p_x
//! g = v_xx + (η+1) v_zz + η u_xz + (η+1) p_z
//! h = u_tx + v_tz ∓ (p_xx + p_zz) − β Q
//! ```
//!
//! The sign of the pressure Laplacian in `h` is selected by
//! [`MassBalanceForm`].

use std::fmt;
use std::str::FromStr;

use crate::autodiff::jet::{X, XT, XX, XZ, Z, ZT, ZZ};
use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::network::FieldJet;

/// Dimensional material and geometry constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    pub lame_lambda: f64,
    pub lame_mu: f64,
    /// Hydraulic conductivity (length/time).
    pub k: f64,
    /// Unit weight of the pore fluid (force/volume).
    pub gamma_f: f64,
    /// Characteristic length.
    pub length_l: f64,
}

/// Result of nondimensionalization: the two governing constants and the
/// factors that take dimensional quantities to nondimensional ones
/// (`nondim = factor · dimensional`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nondimensionalization {
    pub eta: f64,
    pub beta: f64,
    pub coord_factor: f64,
    pub time_factor: f64,
    pub displacement_factor: f64,
    pub pressure_factor: f64,
}

/// `η = 1 + λ/μ`, `β = γ_f l² / ((λ+2μ) k)`, lengths by `l`, time by
/// `(λ+2μ) k / (γ_f l²)`, pressure by `λ+2μ`.
///
/// λ may be zero; every other constant must be strictly positive.
pub fn nondimensionalize(phys: &PhysicalParams) -> Result<Nondimensionalization> {
    let PhysicalParams {
        lame_lambda: lambda,
        lame_mu: mu,
        k,
        gamma_f,
        length_l: l,
    } = *phys;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("Lamé λ must be ≥ 0, got {lambda}")));
    }
    for (name, v) in [("μ", mu), ("k", k), ("γ_f", gamma_f), ("l", l)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
        }
    }
    let m = lambda + 2.0 * mu;
    Ok(Nondimensionalization {
        eta: 1.0 + lambda / mu,
        beta: gamma_f * l * l / (m * k),
        coord_factor: 1.0 / l,
        time_factor: m * k / (gamma_f * l * l),
        displacement_factor: 1.0 / l,
        pressure_factor: 1.0 / m,
    })
}

/// Sign convention of the pressure diffusion term in the mass balance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MassBalanceForm {
    /// `h = u_tx + v_tz + p_xx + p_zz − βQ`; the Barry–Mercer series
    /// satisfies this form exactly.
    #[default]
    Consistent,
    /// `h = u_tx + v_tz − p_xx − p_zz − βQ`.
    AsPrinted,
}

impl MassBalanceForm {
    fn laplacian_sign(self) -> f64 {
        match self {
            MassBalanceForm::Consistent => 1.0,
            MassBalanceForm::AsPrinted => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MassBalanceForm::Consistent => "consistent",
            MassBalanceForm::AsPrinted => "printed",
        }
    }
}

impl FromStr for MassBalanceForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(MassBalanceForm::Consistent),
            "printed" => Ok(MassBalanceForm::AsPrinted),
            other => Err(Error::invalid(format!(
                "unknown mass balance form `{other}`"
            ))),
        }
    }
}

impl fmt::Display for MassBalanceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Constants of the nondimensional source problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NondimParams {
    pub eta: f64,
    pub beta: f64,
    pub omega: f64,
    pub x0: f64,
    pub z0: f64,
    pub a: f64,
    pub b: f64,
    pub mass_balance: MassBalanceForm,
}

impl Default for NondimParams {
    /// a = b = 1, β = 2, ω = 1, (x₀, z₀) = (0.25, 0.25), η = 1.5.
    fn default() -> Self {
        NondimParams {
            eta: 1.5,
            beta: 2.0,
            omega: 1.0,
            x0: 0.25,
            z0: 0.25,
            a: 1.0,
            b: 1.0,
            mass_balance: MassBalanceForm::Consistent,
        }
    }
}

impl NondimParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.eta) || !ok(self.beta) {
            return Err(Error::invalid("η and β must be positive"));
        }
        if !ok(self.a) || !ok(self.b) {
            return Err(Error::invalid("domain extents must be positive"));
        }
        if !self.omega.is_finite() {
            return Err(Error::invalid("ω must be finite"));
        }
        if !(self.x0 > 0.0 && self.x0 < self.a && self.z0 > 0.0 && self.z0 < self.b) {
            return Err(Error::invalid("source must lie strictly inside the domain"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualTriple<S = f64> {
    pub f: S,
    pub g: S,
    pub h: S,
}

/// Equilibrium and mass-balance residuals at one point. `q_value` is the
/// source term evaluated at the same point.
pub fn residuals<S: Scalar>(
    jet: &FieldJet<S>,
    params: &NondimParams,
    q_value: f64,
) -> ResidualTriple<S> {
    let e1 = params.eta + 1.0;
    let (u, v, p) = (&jet.u, &jet.v, &jet.p);
    let f = u.d2[XX] * e1 + u.d2[ZZ] + v.d2[XZ] * params.eta + p.d1[X] * e1;
    let g = v.d2[XX] + v.d2[ZZ] * e1 + u.d2[XZ] * params.eta + p.d1[Z] * e1;
    let lap = (p.d2[XX] + p.d2[ZZ]) * params.mass_balance.laplacian_sign();
    let h = u.d2[XT] + v.d2[ZT] + lap + (-params.beta * q_value);
    ResidualTriple { f, g, h }
}

/// One linear term of a residual: `coef · jet[field].component[slot]`,
/// with `slot` indexing value (0), first (1..4) and second (4..10)
/// derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilTerm {
    pub field: usize,
    pub slot: usize,
    pub coef: f64,
}

/// The residual operators as coefficient lists; `residual = Σ terms +
/// source_coef · Q` with the source only in `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualStencil {
    pub f: Vec<StencilTerm>,
    pub g: Vec<StencilTerm>,
    pub h: Vec<StencilTerm>,
    pub source_coef: f64,
}

impl ResidualStencil {
    pub fn new(params: &NondimParams) -> Self {
        const U: usize = 0;
        const V: usize = 1;
        const P: usize = 2;
        let t = |field, slot, coef| StencilTerm { field, slot, coef };
        let d1 = |axis: usize| 1 + axis;
        let d2 = |pair: usize| 4 + pair;
        let e = params.eta;
        let s = params.mass_balance.laplacian_sign();
        ResidualStencil {
            f: vec![
                t(U, d2(XX), e + 1.0),
                t(U, d2(ZZ), 1.0),
                t(V, d2(XZ), e),
                t(P, d1(X), e + 1.0),
            ],
            g: vec![
                t(V, d2(XX), 1.0),
                t(V, d2(ZZ), e + 1.0),
                t(U, d2(XZ), e),
                t(P, d1(Z), e + 1.0),
            ],
            h: vec![
                t(U, d2(XT), 1.0),
                t(V, d2(ZT), 1.0),
                t(P, d2(XX), s),
                t(P, d2(ZZ), s),
            ],
            source_coef: -params.beta,
        }
    }

    pub fn rows(&self) -> [&[StencilTerm]; 3] {
        [&self.f, &self.g, &self.h]
    }
}

/// Per-variable data misfit.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DataLoss {
    pub mse_u: f64,
    pub mse_v: f64,
    pub mse_p: f64,
    pub mse_t: f64,
}

/// Per-equation residual penalty.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConstraintLoss {
    pub mse_f: f64,
    pub mse_g: f64,
    pub mse_h: f64,
    pub mse_c: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub mse_u: f64,
    pub mse_v: f64,
    pub mse_p: f64,
    pub mse_t: f64,
    pub mse_f: f64,
    pub mse_g: f64,
    pub mse_h: f64,
    pub mse_c: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(data: DataLoss, constraint: ConstraintLoss) -> Self {
        LossBreakdown {
            mse_u: data.mse_u,
            mse_v: data.mse_v,
            mse_p: data.mse_p,
            mse_t: data.mse_t,
            mse_f: constraint.mse_f,
            mse_g: constraint.mse_g,
            mse_h: constraint.mse_h,
            mse_c: constraint.mse_c,
            total: total_loss(&data, &constraint),
        }
    }

    /// Column order of the history file (after `epoch`).
    pub fn as_row(&self) -> [f64; 9] {
        [
            self.mse_u, self.mse_v, self.mse_p, self.mse_f, self.mse_g, self.mse_h, self.mse_t,
            self.mse_c, self.total,
        ]
    }

    pub fn from_row(r: [f64; 9]) -> Self {
        LossBreakdown {
            mse_u: r[0],
            mse_v: r[1],
            mse_p: r[2],
            mse_f: r[3],
            mse_g: r[4],
            mse_h: r[5],
            mse_t: r[6],
            mse_c: r[7],
            total: r[8],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_row().iter().all(|v| v.is_finite())
    }

    /// Component-wise mean of several breakdowns, summed in order.
    pub fn mean(items: &[LossBreakdown]) -> LossBreakdown {
        let mut acc = [0.0; 9];
        for it in items {
            for (a, v) in acc.iter_mut().zip(it.as_row()) {
                *a += v;
            }
        }
        let n = items.len().max(1) as f64;
        LossBreakdown::from_row(acc.map(|a| a / n))
    }
}

fn mean_square(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.map(|e| e * e).sum::<f64>() / n as f64
}

pub fn training_loss(pred: &[[f64; 3]], target: &[[f64; 3]]) -> Result<DataLoss> {
    if pred.len() != target.len() {
        return Err(Error::invalid(format!(
            "prediction/target length mismatch: {} vs {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("training loss over zero points"));
    }
    let n = pred.len();
    let col = |c: usize| mean_square(pred.iter().zip(target).map(move |(p, t)| p[c] - t[c]), n);
    let (mse_u, mse_v, mse_p) = (col(0), col(1), col(2));
    Ok(DataLoss {
        mse_u,
        mse_v,
        mse_p,
        mse_t: mse_u + mse_v + mse_p,
    })
}

pub fn constraint_loss(res: &[ResidualTriple]) -> Result<ConstraintLoss> {
    if res.is_empty() {
        return Err(Error::invalid("constraint loss over zero points"));
    }
    let n = res.len();
    let mse_f = mean_square(res.iter().map(|r| r.f), n);
    let mse_g = mean_square(res.iter().map(|r| r.g), n);
    let mse_h = mean_square(res.iter().map(|r| r.h), n);
    Ok(ConstraintLoss {
        mse_f,
        mse_g,
        mse_h,
        mse_c: mse_f + mse_g + mse_h,
    })
}

/// Unweighted sum of the data and constraint losses.
pub fn total_loss(data: &DataLoss, constraint: &ConstraintLoss) -> f64 {
    data.mse_t + constraint.mse_c
}
