//! Checkpoint text file and loss-history CSV.
//!
//! ```text
//! mlp <hidden_layers> <hidden_units> <activation>
//! <one line per layer: W row-major, then b>
//! norm
//! <x scale> <x offset> <z scale> <z offset> <t scale> <t offset>
//! <u scale> <u offset> <v scale> <v offset> <p scale> <p offset>
//! adam <step>
//! <m>
//! <v>
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{AdamState, TrainedModel, TrainingHistory};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64_row, read_csv};
use crate::network::{parse_network, write_network, AffineMap, NormalizationMaps, ParameterSet};
use crate::residual::LossBreakdown;

pub const HISTORY_HEADER: [&str; 10] = [
    "epoch", "mse_u", "mse_v", "mse_p", "mse_f", "mse_g", "mse_h", "mse_t", "mse_c", "total",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ParameterSet,
    pub maps: NormalizationMaps,
    pub adam: AdamState,
}

impl From<&TrainedModel> for Checkpoint {
    fn from(m: &TrainedModel) -> Self {
        Checkpoint {
            params: m.params.clone(),
            maps: m.maps,
            adam: m.adam.clone(),
        }
    }
}

fn map_row(maps: &[AffineMap; 3]) -> [f64; 6] {
    [
        maps[0].scale,
        maps[0].offset,
        maps[1].scale,
        maps[1].offset,
        maps[2].scale,
        maps[2].offset,
    ]
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if ckpt.adam.len() != ckpt.params.len() {
        return Err(Error::invalid(
            "optimizer state does not match the parameter count",
        ));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        write_network(out, &ckpt.params)?;
        writeln!(out, "norm")?;
        crate::network::write_row(out, &map_row(&ckpt.maps.inputs))?;
        crate::network::write_row(out, &map_row(&ckpt.maps.outputs))?;
        writeln!(out, "adam {}", ckpt.adam.step)?;
        crate::network::write_row(out, &ckpt.adam.m)?;
        crate::network::write_row(out, &ckpt.adam.v)?;
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let params = parse_network(&mut lines, path)?;
    let mut last = 0;
    let mut next = |what: &str| {
        let got = lines.next();
        if let Some((n, _)) = got {
            last = n;
        }
        got.ok_or_else(|| Error::parse(path, last + 1, format!("missing {what}")))
    };

    let (n, tag) = next("`norm` section")?;
    if tag.trim() != "norm" {
        return Err(Error::parse(path, n, "expected `norm`"));
    }
    let mut read_maps = |what: &str| -> Result<[AffineMap; 3]> {
        let (n, text) = next(what)?;
        let row = parse_f64_row(text, ' ').map_err(|m| Error::parse(path, n, m))?;
        if row.len() != 6 {
            return Err(Error::parse(
                path,
                n,
                format!("{what}: expected 6 values, found {}", row.len()),
            ));
        }
        let map = |i: usize| {
            AffineMap::new(row[2 * i], row[2 * i + 1])
                .map_err(|e| Error::parse(path, n, e.to_string()))
        };
        Ok([map(0)?, map(1)?, map(2)?])
    };
    let maps = NormalizationMaps {
        inputs: read_maps("input maps")?,
        outputs: read_maps("output maps")?,
    };

    let (n, tag) = next("`adam` section")?;
    let step = tag
        .strip_prefix("adam ")
        .and_then(|s| s.trim().parse::<u64>().ok())
        .ok_or_else(|| Error::parse(path, n, "expected `adam <step>`"))?;
    let mut moment = |what: &str| -> Result<Vec<f64>> {
        let (n, text) = next(what)?;
        let row = parse_f64_row(text, ' ').map_err(|m| Error::parse(path, n, m))?;
        if row.len() != params.len() {
            return Err(Error::parse(
                path,
                n,
                format!(
                    "{what}: expected {} values, found {}",
                    params.len(),
                    row.len()
                ),
            ));
        }
        if what == "second moment" && row.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::parse(path, n, "second moment entries must be ≥ 0"));
        }
        Ok(row)
    };
    let m = moment("first moment")?;
    let v = moment("second moment")?;
    if let Some((n, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(
            path,
            n,
            format!("unexpected trailing content `{extra}`"),
        ));
    }
    Ok(Checkpoint {
        params,
        maps,
        adam: AdamState { m, v, step },
    })
}

pub fn write_history(path: &Path, history: &TrainingHistory) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", HISTORY_HEADER.join(",")).map_err(io)?;
    for (i, r) in history.records.iter().enumerate() {
        write!(out, "{}", i + 1).map_err(io)?;
        for v in r.as_row() {
            write!(out, ",{}", fmt_f64(v)).map_err(io)?;
        }
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_history(path: &Path) -> Result<TrainingHistory> {
    let rows = read_csv(path, &HISTORY_HEADER)?;
    let mut records = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        if row[0] != (i + 1) as f64 {
            return Err(Error::parse(
                path,
                i + 2,
                format!("expected epoch {}", i + 1),
            ));
        }
        let mut r = [0.0; 9];
        r.copy_from_slice(&row[1..]);
        records.push(LossBreakdown::from_row(r));
    }
    Ok(TrainingHistory { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Activation;
    use crate::network::{forward, init_params, MlpSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let params = init_params(MlpSpec::new(2, 5, Activation::Tanh).unwrap(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = (0..params.len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let v = (0..params.len())
            .map(|_| rng.random_range(0.0..1e-3))
            .collect();
        Checkpoint {
            maps: NormalizationMaps {
                inputs: [
                    AffineMap::unit_interval(0.0, 1.0).unwrap(),
                    AffineMap::unit_interval(0.0, 1.0).unwrap(),
                    AffineMap::unit_interval(0.0, 2.0 * std::f64::consts::PI).unwrap(),
                ],
                outputs: [
                    AffineMap::new(0.031, 0.0).unwrap(),
                    AffineMap::new(0.047, 0.0).unwrap(),
                    AffineMap::new(0.113, 0.0).unwrap(),
                ],
            },
            adam: AdamState { m, v, step: 17 },
            params,
        }
    }

    #[test]
    fn save_load_save_is_a_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.ckpt"), dir.path().join("b.ckpt"));
        let ck = sample();
        save_checkpoint(&a, &ck).unwrap();
        let back = load_checkpoint(&a).unwrap();
        assert_eq!(back, ck);
        save_checkpoint(&b, &back).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn predictions_survive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        let ck = sample();
        save_checkpoint(&path, &ck).unwrap();
        let back = load_checkpoint(&path).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let p = [rng.random(), rng.random(), rng.random_range(0.0..6.0)];
            assert_eq!(
                forward(&ck.params, &ck.maps, p).unwrap(),
                forward(&back.params, &back.maps, p).unwrap()
            );
        }
    }

    #[test]
    fn truncated_file_names_missing_layer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ckpt");
        save_checkpoint(&path, &sample()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(2).collect();
        fs::write(&path, cut.join("\n")).unwrap();
        let err = load_checkpoint(&path).unwrap_err().to_string();
        assert!(err.contains("missing layer 1"), "{err}");
        assert!(err.contains(":3:"), "{err}");
    }

    #[test]
    fn missing_adam_section_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.ckpt");
        save_checkpoint(&path, &sample()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(7).collect();
        fs::write(&path, cut.join("\n")).unwrap();
        let err = load_checkpoint(&path).unwrap_err().to_string();
        assert!(err.contains("adam"), "{err}");
    }

    #[test]
    fn history_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let h = TrainingHistory {
            records: vec![
                LossBreakdown::from_row([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 6.0, 15.0, 21.0]),
                LossBreakdown::from_row([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.6, 1.5, 2.1]),
            ],
        };
        write_history(&path, &h).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("epoch,mse_u,mse_v,mse_p,mse_f,mse_g,mse_h,mse_t,mse_c,total\n"));
        assert_eq!(read_history(&path).unwrap(), h);
    }
}
