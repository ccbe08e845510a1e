//! Whole-grid prediction, error metrics and the CSV exports behind the
//! deformation, probe and loss-curve figures.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::{CollocationSet, GridSize};
use crate::error::{Error, Result};
use crate::io::write_csv;
use crate::network::{forward, NormalizationMaps, ParameterSet};
use crate::oracle::{solution_slice, SeriesTruncation};
use crate::residual::NondimParams;
use crate::trainer::load_checkpoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    U,
    V,
    P,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::U, Field::V, Field::P];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["u", "v", "p"][self.index()]
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" => Ok(Field::U),
            "v" => Ok(Field::V),
            "p" => Ok(Field::P),
            other => Err(Error::invalid(format!("unknown field `{other}`"))),
        }
    }
}

/// Field values on a tensor grid, stored t-outer, z-middle, x-inner.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    xs: Vec<f64>,
    zs: Vec<f64>,
    ts: Vec<f64>,
    values: [Vec<f64>; 3],
}

fn strictly_increasing(axis: &[f64]) -> bool {
    !axis.is_empty() && axis.iter().all(|v| v.is_finite()) && axis.windows(2).all(|w| w[0] < w[1])
}

impl FieldGrid {
    pub fn new(xs: Vec<f64>, zs: Vec<f64>, ts: Vec<f64>, values: [Vec<f64>; 3]) -> Result<Self> {
        for (name, axis) in [("x", &xs), ("z", &zs), ("t", &ts)] {
            if !strictly_increasing(axis) {
                return Err(Error::invalid(format!(
                    "{name} axis must be nonempty and strictly increasing"
                )));
            }
        }
        let n = xs.len() * zs.len() * ts.len();
        if values.iter().any(|v| v.len() != n) {
            return Err(Error::invalid(format!("field arrays must hold {n} values")));
        }
        Ok(FieldGrid { xs, zs, ts, values })
    }

    /// Rebuilds the grid from a dataset in grid order.
    pub fn from_dataset(ds: &CollocationSet) -> Result<Self> {
        let g = ds
            .grid()
            .ok_or_else(|| Error::invalid("dataset rows do not form a tensor grid"))?;
        let pts = ds.points();
        let xs = (0..g.nx).map(|i| pts[i][0]).collect();
        let zs = (0..g.nz).map(|i| pts[i * g.nx][1]).collect();
        let ts = (0..g.nt).map(|i| pts[i * g.nx * g.nz][2]).collect();
        let col = |c: usize| ds.values().iter().map(|v| v[c]).collect();
        FieldGrid::new(xs, zs, ts, [col(0), col(1), col(2)])
    }

    /// Analytical solution on the given axes.
    pub fn analytical(
        xs: &[f64],
        zs: &[f64],
        ts: &[f64],
        params: &NondimParams,
        trunc: SeriesTruncation,
    ) -> Result<Self> {
        trunc.validate()?;
        let slices: Vec<[Vec<f64>; 3]> = ts
            .par_iter()
            .map(|&t| solution_slice(xs, zs, t, params, trunc))
            .collect();
        let mut values: [Vec<f64>; 3] = Default::default();
        for s in slices {
            for c in 0..3 {
                values[c].extend_from_slice(&s[c]);
            }
        }
        FieldGrid::new(xs.to_vec(), zs.to_vec(), ts.to_vec(), values)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn zs(&self) -> &[f64] {
        &self.zs
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn size(&self) -> GridSize {
        GridSize {
            nx: self.xs.len(),
            nz: self.zs.len(),
            nt: self.ts.len(),
        }
    }

    pub fn field(&self, f: Field) -> &[f64] {
        &self.values[f.index()]
    }

    pub fn index(&self, ix: usize, iz: usize, it: usize) -> usize {
        (it * self.zs.len() + iz) * self.xs.len() + ix
    }

    pub fn value(&self, f: Field, ix: usize, iz: usize, it: usize) -> f64 {
        self.values[f.index()][self.index(ix, iz, it)]
    }

    pub fn scaled(&self, k: f64) -> FieldGrid {
        FieldGrid {
            values: self
                .values
                .clone()
                .map(|v| v.into_iter().map(|x| x * k).collect()),
            ..self.clone()
        }
    }

    fn same_shape(&self, other: &FieldGrid) -> Result<()> {
        if self.size() != other.size() {
            return Err(Error::invalid(format!(
                "grid shapes differ: {:?} vs {:?}",
                self.size(),
                other.size()
            )));
        }
        Ok(())
    }
}

/// Anything that maps a raw point to `(u, v, p)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Predictor {
    Network {
        params: ParameterSet,
        maps: NormalizationMaps,
    },
    /// The analytical series itself; loaded from a file whose only line is
    /// `oracle <n_max> <q_max>`.
    Oracle {
        params: NondimParams,
        trunc: SeriesTruncation,
    },
}

impl Predictor {
    /// Reads a network checkpoint or an `oracle` fixture file.
    pub fn load(path: &Path, params: &NondimParams) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let first = text.lines().next().unwrap_or("");
        if let Some(rest) = first.strip_prefix("oracle") {
            let nums: Vec<usize> = rest
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, 1, "expected `oracle <n_max> <q_max>`"))?;
            if nums.len() != 2 {
                return Err(Error::parse(path, 1, "expected `oracle <n_max> <q_max>`"));
            }
            let trunc = SeriesTruncation {
                n_max: nums[0],
                q_max: nums[1],
            };
            trunc
                .validate()
                .map_err(|e| Error::parse(path, 1, e.to_string()))?;
            return Ok(Predictor::Oracle {
                params: *params,
                trunc,
            });
        }
        let ck = load_checkpoint(path)?;
        Ok(Predictor::Network {
            params: ck.params,
            maps: ck.maps,
        })
    }

    pub fn predict(&self, point: [f64; 3]) -> Result<[f64; 3]> {
        match self {
            Predictor::Network { params, maps } => forward(params, maps, point),
            Predictor::Oracle { params, trunc } => Ok(crate::oracle::solution_at(
                point[0], point[1], point[2], params, *trunc,
            )),
        }
    }

    pub fn predict_grid(&self, xs: &[f64], zs: &[f64], ts: &[f64]) -> Result<FieldGrid> {
        match self {
            Predictor::Network { params, maps } => predict_grid(params, maps, xs, zs, ts),
            Predictor::Oracle { params, trunc } => {
                FieldGrid::analytical(xs, zs, ts, params, *trunc)
            }
        }
    }
}

/// Network prediction at every node of the grid spanned by the axes.
pub fn predict_grid(
    params: &ParameterSet,
    maps: &NormalizationMaps,
    xs: &[f64],
    zs: &[f64],
    ts: &[f64],
) -> Result<FieldGrid> {
    let points: Vec<[f64; 3]> = ts
        .iter()
        .flat_map(|&t| {
            zs.iter()
                .flat_map(move |&z| xs.iter().map(move |&x| [x, z, t]))
        })
        .collect();
    let out = points
        .par_iter()
        .map(|&p| forward(params, maps, p))
        .collect::<Result<Vec<_>>>()?;
    let col = |c: usize| out.iter().map(|v| v[c]).collect();
    FieldGrid::new(
        xs.to_vec(),
        zs.to_vec(),
        ts.to_vec(),
        [col(0), col(1), col(2)],
    )
}

/// `‖pred − truth‖₂ / ‖truth‖₂` over every node.
pub fn relative_l2(pred: &FieldGrid, truth: &FieldGrid, field: Field) -> Result<f64> {
    pred.same_shape(truth)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (p, t) in pred.field(field).iter().zip(truth.field(field)) {
        num += (p - t) * (p - t);
        den += t * t;
    }
    if den == 0.0 {
        return Err(Error::DegenerateReference(field.name()));
    }
    Ok((num / den).sqrt())
}

/// Root-mean-square error over every node.
pub fn rms_error(pred: &FieldGrid, truth: &FieldGrid, field: Field) -> Result<f64> {
    Ok(mean_squared_error(pred, truth, field)?.sqrt())
}

pub fn mean_squared_error(pred: &FieldGrid, truth: &FieldGrid, field: Field) -> Result<f64> {
    pred.same_shape(truth)?;
    let n = pred.field(field).len() as f64;
    let sum: f64 = pred
        .field(field)
        .iter()
        .zip(truth.field(field))
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / n)
}

/// Index of the time node closest to `t`.
pub fn nearest_time_index(grid: &FieldGrid, t: f64) -> usize {
    nearest(grid.ts(), t).0
}

fn nearest(axis: &[f64], v: f64) -> (usize, f64) {
    axis.iter()
        .enumerate()
        .map(|(i, &a)| (i, (a - v).abs()))
        .fold(
            (0, f64::INFINITY),
            |best, c| if c.1 < best.1 { c } else { best },
        )
}

pub const MESH_HEADER: [&str; 4] = ["x", "z", "x_def", "z_def"];
pub const TIMESERIES_HEADER: [&str; 2] = ["t", "value"];

/// Writes `x, z, x + scale·u, z + scale·v` for every spatial node at time
/// index `t_index`, z outer, x inner.
pub fn export_deformed_mesh(
    grid: &FieldGrid,
    t_index: usize,
    scale: f64,
    path: &Path,
) -> Result<()> {
    if t_index >= grid.ts().len() {
        return Err(Error::invalid(format!(
            "time index {t_index} out of range (grid has {} steps)",
            grid.ts().len()
        )));
    }
    let mut rows = Vec::with_capacity(grid.xs().len() * grid.zs().len());
    for (iz, &z) in grid.zs().iter().enumerate() {
        for (ix, &x) in grid.xs().iter().enumerate() {
            let u = grid.value(Field::U, ix, iz, t_index);
            let v = grid.value(Field::V, ix, iz, t_index);
            rows.push([x, z, x + scale * u, z + scale * v]);
        }
    }
    write_csv(path, &MESH_HEADER, rows.iter().map(|r| r.as_slice()))
}

/// Writes `t, value` of `field` at the spatial node nearest `(x, z)` and
/// returns the distance from the requested point to that node.
pub fn export_timeseries(
    grid: &FieldGrid,
    point: (f64, f64),
    field: Field,
    path: &Path,
) -> Result<f64> {
    let (ix, dx) = nearest(grid.xs(), point.0);
    let (iz, dz) = nearest(grid.zs(), point.1);
    let rows: Vec<[f64; 2]> = grid
        .ts()
        .iter()
        .enumerate()
        .map(|(it, &t)| [t, grid.value(field, ix, iz, it)])
        .collect();
    write_csv(path, &TIMESERIES_HEADER, rows.iter().map(|r| r.as_slice()))?;
    Ok(dx.hypot(dz))
}
