use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_csv, write_csv};
use crate::network::NormalizationMaps;

pub const DATASET_HEADER: [&str; 6] = ["x", "z", "t", "u", "v", "p"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSize {
    pub nx: usize,
    pub nz: usize,
    pub nt: usize,
}

impl GridSize {
    pub fn cube(n: usize) -> Self {
        GridSize {
            nx: n,
            nz: n,
            nt: n,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rows of inputs `(x, z, t)` with target outputs `(u, v, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationSet {
    points: Vec<[f64; 3]>,
    values: Vec<[f64; 3]>,
    grid: Option<GridSize>,
}

impl CollocationSet {
    pub fn new(
        points: Vec<[f64; 3]>,
        values: Vec<[f64; 3]>,
        grid: Option<GridSize>,
    ) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::invalid("points and values differ in length"));
        }
        if let Some(g) = grid {
            if g.len() != points.len() {
                return Err(Error::invalid("grid size does not match row count"));
            }
        }
        Ok(CollocationSet {
            points,
            values,
            grid,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn grid(&self) -> Option<GridSize> {
        self.grid
    }

    /// `(min, max)` of each input coordinate.
    pub fn bounds(&self) -> [(f64, f64); 3] {
        let mut b = [(f64::INFINITY, f64::NEG_INFINITY); 3];
        for p in &self.points {
            for i in 0..3 {
                b[i].0 = b[i].0.min(p[i]);
                b[i].1 = b[i].1.max(p[i]);
            }
        }
        b
    }

    /// Uniform spacing `(Δx, Δz)` when the set is a tensor grid.
    pub fn spacing(&self) -> Option<(f64, f64)> {
        let g = self.grid?;
        let b = self.bounds();
        Some((
            (b[0].1 - b[0].0) / (g.nx - 1) as f64,
            (b[1].1 - b[1].0) / (g.nz - 1) as f64,
        ))
    }

    /// Input maps from the coordinate bounds, output maps from the
    /// largest magnitude of each field.
    pub fn normalization(&self) -> Result<NormalizationMaps> {
        if self.is_empty() {
            return Err(Error::invalid("cannot normalize an empty dataset"));
        }
        let col = |c: usize| self.values.iter().map(|v| v[c]).collect::<Vec<_>>();
        NormalizationMaps::from_bounds_and_data(self.bounds(), &col(0), &col(1), &col(2))
    }

    /// Rows at the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> CollocationSet {
        CollocationSet {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            values: indices.iter().map(|&i| self.values[i]).collect(),
            grid: None,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<[f64; 6]> = self
            .points
            .iter()
            .zip(&self.values)
            .map(|(p, v)| [p[0], p[1], p[2], v[0], v[1], v[2]])
            .collect();
        write_csv(path, &DATASET_HEADER, rows.iter().map(|r| r.as_slice()))
    }

    /// Reads a dataset file. The grid shape is recovered when the rows form
    /// a complete tensor grid in t-outer, z-middle, x-inner order.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows = read_csv(path, &DATASET_HEADER)?;
        if rows.is_empty() {
            return Err(Error::parse(path, 2, "dataset has no rows"));
        }
        let points: Vec<[f64; 3]> = rows.iter().map(|r| [r[0], r[1], r[2]]).collect();
        let values: Vec<[f64; 3]> = rows.iter().map(|r| [r[3], r[4], r[5]]).collect();
        let grid = infer_grid(&points);
        CollocationSet::new(points, values, grid)
    }
}

fn infer_grid(points: &[[f64; 3]]) -> Option<GridSize> {
    let nx = points
        .iter()
        .take_while(|p| p[1] == points[0][1] && p[2] == points[0][2])
        .count();
    let nxz = points.iter().take_while(|p| p[2] == points[0][2]).count();
    if nx < 2 || nxz % nx != 0 || !points.len().is_multiple_of(nxz) {
        return None;
    }
    let g = GridSize {
        nx,
        nz: nxz / nx,
        nt: points.len() / nxz,
    };
    if g.nz < 2 || g.nt < 2 {
        return None;
    }
    let ok = points.iter().enumerate().all(|(k, p)| {
        let (ix, iz, it) = (k % nx, (k / nx) % g.nz, k / nxz);
        p[0] == points[ix][0] && p[1] == points[iz * nx][1] && p[2] == points[it * nxz][2]
    });
    ok.then_some(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{generate_grid_dataset, DomainSpec, SeriesTruncation};
    use crate::residual::NondimParams;

    #[test]
    fn csv_round_trip_recovers_grid() {
        let ds = generate_grid_dataset(
            &DomainSpec::default(),
            &NondimParams::default(),
            GridSize {
                nx: 4,
                nz: 3,
                nt: 5,
            },
            SeriesTruncation::square(12),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        ds.write_csv(&path).unwrap();
        let back = CollocationSet::read_csv(&path).unwrap();
        assert_eq!(back, ds);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,z,t,u,v,p\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn normalization_hits_interval_ends() {
        let ds = generate_grid_dataset(
            &DomainSpec::default(),
            &NondimParams::default(),
            GridSize::cube(5),
            SeriesTruncation::square(12),
        )
        .unwrap();
        let maps = ds.normalization().unwrap();
        for i in 0..3 {
            let (lo, hi) = ds.bounds()[i];
            assert_eq!(maps.inputs[i].normalize(lo), 0.0);
            assert_eq!(maps.inputs[i].normalize(hi), 1.0);
            let extreme = ds.values().iter().map(|v| v[i].abs()).fold(0.0, f64::max);
            assert_eq!(maps.outputs[i].normalize(extreme).abs(), 1.0);
            assert!(ds
                .values()
                .iter()
                .all(|v| maps.outputs[i].normalize(v[i]).abs() <= 1.0));
        }
    }

    #[test]
    fn spacing_of_grid() {
        let ds = generate_grid_dataset(
            &DomainSpec::default(),
            &NondimParams::default(),
            GridSize::cube(41),
            SeriesTruncation::square(4),
        )
        .unwrap();
        let (dx, dz) = ds.spacing().unwrap();
        assert!((dx - 0.025).abs() < 1e-15 && (dz - 0.025).abs() < 1e-15);
    }
}
