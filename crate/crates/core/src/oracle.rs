//! Exact series solution of the Barry–Mercer oscillating point-source
//! problem on a drained rectangle, plus the source term and grid datasets.
//!
//! Mode shapes are evaluated as `sin(π·n·x/a)` with exact argument
//! reduction, so every pressure mode vanishes bit-exactly on the drained
//! boundaries and the horizontal displacement vanishes on `z ∈ {0, b}`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::{CollocationSet, GridSize};
use crate::error::{Error, Result};
use crate::residual::NondimParams;

/// Rectangle `[0, a] × [0, b]` and time window `[0, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    pub a: f64,
    pub b: f64,
    pub t_max: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            a: 1.0,
            b: 1.0,
            t_max: 2.0 * PI,
        }
    }
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.t_max > 0.0) {
            return Err(Error::invalid("domain extents and t_max must be positive"));
        }
        Ok(())
    }
}

/// How the Dirac point source enters pointwise residuals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MollifierMode {
    /// Product of unit-mass Gaussians of standard deviation ε.
    #[default]
    Gaussian,
    /// `1/(Δx·Δz)` at the grid node nearest the source, 0 elsewhere.
    GridDelta,
    /// Source dropped.
    Omit,
}

impl MollifierMode {
    pub fn name(self) -> &'static str {
        match self {
            MollifierMode::Gaussian => "gaussian",
            MollifierMode::GridDelta => "grid_delta",
            MollifierMode::Omit => "omit",
        }
    }
}

impl fmt::Display for MollifierMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MollifierMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(MollifierMode::Gaussian),
            "grid_delta" => Ok(MollifierMode::GridDelta),
            "omit" => Ok(MollifierMode::Omit),
            other => Err(Error::invalid(format!("unknown source mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceSpec {
    pub x0: f64,
    pub z0: f64,
    pub omega: f64,
    pub mode: MollifierMode,
    pub epsilon: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            x0: 0.25,
            z0: 0.25,
            omega: 1.0,
            mode: MollifierMode::Gaussian,
            epsilon: 0.025,
        }
    }
}

impl SourceSpec {
    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        if !(self.x0 > 0.0 && self.x0 < domain.a && self.z0 > 0.0 && self.z0 < domain.b) {
            return Err(Error::invalid("source must lie strictly inside the domain"));
        }
        if self.mode == MollifierMode::Gaussian && (self.epsilon.is_nan() || self.epsilon <= 0.0) {
            return Err(Error::invalid("gaussian mollifier needs epsilon > 0"));
        }
        Ok(())
    }
}

/// Upper limits of the double series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeriesTruncation {
    pub n_max: usize,
    pub q_max: usize,
}

impl SeriesTruncation {
    /// Default for dataset generation.
    pub const DATASET: SeriesTruncation = SeriesTruncation {
        n_max: 200,
        q_max: 200,
    };
    /// Default for verification against residuals.
    pub const VERIFY: SeriesTruncation = SeriesTruncation {
        n_max: 400,
        q_max: 400,
    };

    pub fn square(m: usize) -> Self {
        SeriesTruncation { n_max: m, q_max: m }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 || self.q_max == 0 {
            return Err(Error::invalid("series truncation must be at least 1"));
        }
        Ok(())
    }
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        Self::DATASET
    }
}

/// `sin(π y)`, exactly zero at integer `y`.
pub fn sin_pi(y: f64) -> f64 {
    let r = y.rem_euclid(2.0);
    let (r, sign) = if r >= 1.0 { (r - 1.0, -1.0) } else { (r, 1.0) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (PI * r).sin()
}

/// `cos(π y)`, exactly zero at half-integer `y`.
pub fn cos_pi(y: f64) -> f64 {
    sin_pi(y + 0.5)
}

pub fn lambda_n(n: usize, a: f64) -> f64 {
    n as f64 * PI / a
}

pub fn lambda_q(q: usize, b: f64) -> f64 {
    q as f64 * PI / b
}

pub fn lambda_nq(n: usize, q: usize, a: f64, b: f64) -> f64 {
    let (ln, lq) = (lambda_n(n, a), lambda_q(q, b));
    ln * ln + lq * lq
}

/// Transformed pore pressure of mode `(n, q)` at time `t`.
pub fn p_hat(n: usize, q: usize, t: f64, params: &NondimParams) -> f64 {
    let sx = sin_pi(n as f64 * (params.x0 / params.a));
    let sz = sin_pi(q as f64 * (params.z0 / params.b));
    let lnq = lambda_nq(n, q, params.a, params.b);
    let w = params.omega;
    -params.beta * sx * sz / (lnq * lnq + w * w)
        * (lnq * (w * t).sin() - w * (w * t).cos() + w * (-lnq * t).exp())
}

pub fn u_hat(n: usize, q: usize, t: f64, params: &NondimParams) -> f64 {
    lambda_n(n, params.a) / lambda_nq(n, q, params.a, params.b) * p_hat(n, q, t, params)
}

pub fn v_hat(n: usize, q: usize, t: f64, params: &NondimParams) -> f64 {
    lambda_q(q, params.b) / lambda_nq(n, q, params.a, params.b) * p_hat(n, q, t, params)
}

/// Modal amplitudes `(û, v̂, p̂)` at one time, row-major `n × q`.
struct Modes {
    u: Vec<f64>,
    v: Vec<f64>,
    p: Vec<f64>,
}

fn modes(t: f64, params: &NondimParams, trunc: SeriesTruncation) -> Modes {
    let (nm, qm) = (trunc.n_max, trunc.q_max);
    let mut m = Modes {
        u: Vec::with_capacity(nm * qm),
        v: Vec::with_capacity(nm * qm),
        p: Vec::with_capacity(nm * qm),
    };
    for n in 1..=nm {
        for q in 1..=qm {
            let p = p_hat(n, q, t, params);
            let lnq = lambda_nq(n, q, params.a, params.b);
            m.p.push(p);
            m.u.push(lambda_n(n, params.a) / lnq * p);
            m.v.push(lambda_q(q, params.b) / lnq * p);
        }
    }
    m
}

/// Mode-shape tables along one axis: `sin(λ k s)` and `cos(λ k s)` for
/// `k = 1..=kmax`, row-major `k × points`.
fn shapes(coords: &[f64], extent: f64, kmax: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s = Vec::with_capacity(kmax * coords.len());
    let mut c = Vec::with_capacity(kmax * coords.len());
    for k in 1..=kmax {
        for &x in coords {
            let y = k as f64 * (x / extent);
            s.push(sin_pi(y));
            c.push(cos_pi(y));
        }
    }
    (s, c)
}

/// `(4/ab) Σ_n X[n][ix] Σ_q A[n][q] Z[q][iz]`, q inner and n outer,
/// written to `out[iz * nx + ix]`.
#[allow(clippy::too_many_arguments)]
fn synthesize(
    amps: &[f64],
    xs: &[f64],
    zs: &[f64],
    nx: usize,
    nz: usize,
    trunc: SeriesTruncation,
    scale: f64,
    out: &mut [f64],
) {
    let (nm, qm) = (trunc.n_max, trunc.q_max);
    let mut inner = vec![0.0; nm * nz];
    for n in 0..nm {
        let row = &amps[n * qm..(n + 1) * qm];
        for iz in 0..nz {
            let mut acc = 0.0;
            for q in 0..qm {
                acc += row[q] * zs[q * nz + iz];
            }
            inner[n * nz + iz] = acc;
        }
    }
    for iz in 0..nz {
        for ix in 0..nx {
            let mut acc = 0.0;
            for n in 0..nm {
                acc += xs[n * nx + ix] * inner[n * nz + iz];
            }
            out[iz * nx + ix] = scale * acc;
        }
    }
}

/// Fields on the tensor grid `xs × zs` at time `t`, each laid out
/// `[iz * xs.len() + ix]`.
pub fn solution_slice(
    xs: &[f64],
    zs: &[f64],
    t: f64,
    params: &NondimParams,
    trunc: SeriesTruncation,
) -> [Vec<f64>; 3] {
    let (nx, nz) = (xs.len(), zs.len());
    let (sx, cx) = shapes(xs, params.a, trunc.n_max);
    let (sz, cz) = shapes(zs, params.b, trunc.q_max);
    let m = modes(t, params, trunc);
    let scale = 4.0 / (params.a * params.b);
    let mut u = vec![0.0; nx * nz];
    let mut v = vec![0.0; nx * nz];
    let mut p = vec![0.0; nx * nz];
    synthesize(&m.u, &cx, &sz, nx, nz, trunc, scale, &mut u);
    synthesize(&m.v, &sx, &cz, nx, nz, trunc, scale, &mut v);
    synthesize(&m.p, &sx, &sz, nx, nz, trunc, scale, &mut p);
    [u, v, p]
}

/// `(u, v, p)` at one point from the truncated double series.
pub fn solution_at(
    x: f64,
    z: f64,
    t: f64,
    params: &NondimParams,
    trunc: SeriesTruncation,
) -> [f64; 3] {
    let [u, v, p] = solution_slice(&[x], &[z], t, params, trunc);
    [u[0], v[0], p[0]]
}

/// Point-source term at `(x, z, t)`. `spacing` is the `(Δx, Δz)` of the
/// caller's grid, required in grid-delta mode.
pub fn source_q(
    x: f64,
    z: f64,
    t: f64,
    source: &SourceSpec,
    spacing: Option<(f64, f64)>,
) -> Result<f64> {
    let pulse = (source.omega * t).sin();
    match source.mode {
        MollifierMode::Omit => Ok(0.0),
        MollifierMode::Gaussian => {
            let eps = source.epsilon;
            let g = |s: f64| (-0.5 * (s / eps).powi(2)).exp() / ((2.0 * PI).sqrt() * eps);
            Ok(g(x - source.x0) * g(z - source.z0) * pulse)
        }
        MollifierMode::GridDelta => {
            let (dx, dz) = spacing.ok_or_else(|| Error::Config {
                line: None,
                msg: "grid_delta source mode needs the grid spacing".into(),
            })?;
            let node_x = (source.x0 / dx).round() * dx;
            let node_z = (source.z0 / dz).round() * dz;
            let hit = (x - node_x).abs() <= 1e-9 * dx && (z - node_z).abs() <= 1e-9 * dz;
            Ok(if hit { pulse / (dx * dz) } else { 0.0 })
        }
    }
}

/// Uniform axis over `[lo, hi]` with both endpoints exact.
pub fn axis(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

/// Analytical solution on the uniform tensor grid, rows ordered with t
/// outermost, then z, then x.
pub fn generate_grid_dataset(
    domain: &DomainSpec,
    params: &NondimParams,
    grid: GridSize,
    trunc: SeriesTruncation,
) -> Result<CollocationSet> {
    domain.validate()?;
    params.validate()?;
    trunc.validate()?;
    if grid.nx < 2 || grid.nz < 2 || grid.nt < 2 {
        return Err(Error::invalid("every grid count must be at least 2"));
    }
    let xs = axis(0.0, domain.a, grid.nx);
    let zs = axis(0.0, domain.b, grid.nz);
    let ts = axis(0.0, domain.t_max, grid.nt);
    let slices: Vec<[Vec<f64>; 3]> = ts
        .par_iter()
        .map(|&t| solution_slice(&xs, &zs, t, params, trunc))
        .collect();
    let mut points = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    for (&t, [u, v, p]) in ts.iter().zip(&slices) {
        for (iz, &z) in zs.iter().enumerate() {
            for (ix, &x) in xs.iter().enumerate() {
                let k = iz * xs.len() + ix;
                points.push([x, z, t]);
                values.push([u[k], v[k], p[k]]);
            }
        }
    }
    CollocationSet::new(points, values, Some(grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> NondimParams {
        NondimParams::default()
    }

    #[test]
    fn eigenvalues() {
        assert_eq!(lambda_n(1, 1.0), PI);
        assert!((lambda_nq(1, 1, 1.0, 1.0) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((lambda_nq(3, 4, 1.0, 1.0) - 25.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn sin_pi_is_exact_at_integers() {
        for k in -7..=7 {
            assert_eq!(sin_pi(k as f64), 0.0);
            assert_eq!(cos_pi(k as f64 + 0.5), 0.0);
        }
        for &y in &[0.1, 0.37, 1.25, 1.9, -0.6, 123.456] {
            assert!((sin_pi(y) - (PI * y).sin()).abs() < 1e-12);
            assert!((cos_pi(y) - (PI * y).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn p_hat_vanishes_initially_and_on_nodal_modes() {
        for n in 1..6 {
            for q in 1..6 {
                assert_eq!(p_hat(n, q, 0.0, &params()), 0.0);
            }
        }
        // sin(4π · 0.25) = 0
        for &t in &[0.3, 1.0, 4.0] {
            assert_eq!(p_hat(4, 3, t, &params()), 0.0);
            assert_eq!(u_hat(4, 3, t, &params()), 0.0);
            assert_eq!(v_hat(4, 3, t, &params()), 0.0);
        }
    }

    /// Closed form evaluated at (n, q, t) = (1, 1, π/2), β = 2, ω = 1,
    /// x₀ = z₀ = 0.25 with 50-digit arithmetic:
    /// p̂ = −2 · ½ / (4π⁴ + 1) · (2π² + e^{−π³}).
    #[test]
    fn p_hat_reference_value() {
        let want = -0.050530904478995345;
        let got = p_hat(1, 1, PI / 2.0, &params());
        assert!((got - want).abs() <= 2e-17, "{got}");
    }

    #[test]
    fn modal_ratios() {
        let p = params();
        let t = 1.3;
        assert_eq!(u_hat(2, 2, t, &p), v_hat(2, 2, t, &p));
        let (n, q) = (3, 5);
        let ratio = u_hat(n, q, t, &p) / v_hat(n, q, t, &p);
        assert!((ratio - lambda_n(n, 1.0) / lambda_q(q, 1.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_at_initial_time_and_drained_edges() {
        let p = params();
        let tr = SeriesTruncation::square(40);
        assert_eq!(solution_at(0.3, 0.6, 0.0, &p, tr), [0.0; 3]);
        for &(x, z) in &[(0.0, 0.4), (1.0, 0.4), (0.7, 0.0), (0.7, 1.0)] {
            assert_eq!(solution_at(x, z, 2.0, &p, tr)[2], 0.0);
        }
        for &x in &[0.0, 0.3, 1.0] {
            assert_eq!(solution_at(x, 0.0, 2.0, &p, tr)[0], 0.0);
            assert_eq!(solution_at(x, 1.0, 2.0, &p, tr)[0], 0.0);
        }
    }

    #[test]
    fn point_and_grid_evaluation_agree_bitwise() {
        let p = params();
        let tr = SeriesTruncation::square(30);
        let xs = axis(0.0, 1.0, 5);
        let zs = axis(0.0, 1.0, 4);
        let [u, v, pp] = solution_slice(&xs, &zs, 2.5, &p, tr);
        for (iz, &z) in zs.iter().enumerate() {
            for (ix, &x) in xs.iter().enumerate() {
                let k = iz * xs.len() + ix;
                assert_eq!(solution_at(x, z, 2.5, &p, tr), [u[k], v[k], pp[k]]);
            }
        }
    }

    #[test]
    fn gaussian_source_has_unit_mass() {
        let s = SourceSpec::default();
        let t = 1.1;
        let n = 400;
        let h = 1.0 / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = (i as f64 + 0.5) * h;
                let z = (j as f64 + 0.5) * h;
                sum += source_q(x, z, t, &s, None).unwrap() * h * h;
            }
        }
        assert!((sum - t.sin()).abs() < 1e-3, "{sum}");
    }

    #[test]
    fn source_modes() {
        let mut s = SourceSpec::default();
        assert_eq!(source_q(0.25, 0.25, 0.0, &s, None).unwrap(), 0.0);
        s.mode = MollifierMode::Omit;
        assert_eq!(source_q(0.25, 0.25, 1.0, &s, None).unwrap(), 0.0);
        s.mode = MollifierMode::GridDelta;
        assert!(source_q(0.25, 0.25, 1.0, &s, None).is_err());
        let sp = Some((0.025, 0.025));
        let peak = source_q(0.25, 0.25, 1.0, &s, sp).unwrap();
        assert!((peak - 1f64.sin() / 0.025f64.powi(2)).abs() < 1e-9);
        assert_eq!(source_q(0.275, 0.25, 1.0, &s, sp).unwrap(), 0.0);
    }

    #[test]
    fn grid_dataset_layout() {
        let ds = generate_grid_dataset(
            &DomainSpec::default(),
            &params(),
            GridSize {
                nx: 2,
                nz: 2,
                nt: 2,
            },
            SeriesTruncation::square(10),
        )
        .unwrap();
        assert_eq!(ds.len(), 8);
        for k in 0..4 {
            assert_eq!(ds.points()[k][2], 0.0);
            assert_eq!(ds.values()[k], [0.0; 3]);
        }
        assert_eq!(ds.points()[1], [1.0, 0.0, 0.0]);
        assert_eq!(ds.points()[2], [0.0, 1.0, 0.0]);
        assert_eq!(ds.points()[4][2], 2.0 * PI);
    }

    #[test]
    fn half_pi_index_on_time_axis() {
        let ts = axis(0.0, 2.0 * PI, 41);
        assert_eq!(ts[10], PI / 2.0);
        assert_eq!(ts[30], 1.5 * PI);
    }
}
