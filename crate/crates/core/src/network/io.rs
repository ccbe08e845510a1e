//! Text form of a network: a header `mlp <hidden_layers> <hidden_units>
//! <activation>` and one line per layer holding the row-major weights and
//! then the biases, 17 significant digits each.

use std::io::Write;
use std::path::Path;

use super::{layout, MlpSpec, ParameterSet};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_f64_row};

pub fn write_network(out: &mut impl Write, params: &ParameterSet) -> std::io::Result<()> {
    let spec = params.spec();
    writeln!(
        out,
        "mlp {} {} {}",
        spec.hidden_layers, spec.hidden_units, spec.activation
    )?;
    let values = params.as_slice();
    for slot in layout(spec) {
        let row = &values[slot.w_offset..slot.b_offset + slot.fan_out];
        write_row(out, row)?;
    }
    Ok(())
}

pub(crate) fn write_row(out: &mut impl Write, row: &[f64]) -> std::io::Result<()> {
    let mut first = true;
    for &v in row {
        if !first {
            out.write_all(b" ")?;
        }
        first = false;
        out.write_all(fmt_f64(v).as_bytes())?;
    }
    out.write_all(b"\n")
}

/// Reads the header and layer lines from `lines` (1-based line numbers).
pub fn parse_network<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    path: &Path,
) -> Result<ParameterSet> {
    let (lineno, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing `mlp` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "mlp" {
        return Err(Error::parse(
            path,
            lineno,
            "expected `mlp <hidden_layers> <hidden_units> <activation>`",
        ));
    }
    let count = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::parse(path, lineno, format!("bad {what} `{s}`")))
    };
    let activation = fields[3]
        .parse()
        .map_err(|e: Error| Error::parse(path, lineno, e.to_string()))?;
    let spec = MlpSpec::new(
        count(fields[1], "layer count")?,
        count(fields[2], "unit count")?,
        activation,
    )
    .map_err(|e| Error::parse(path, lineno, e.to_string()))?;

    let mut values = Vec::with_capacity(spec.param_count());
    let last_line = lineno;
    for (l, slot) in layout(&spec).into_iter().enumerate() {
        let expected = (slot.fan_in + 1) * slot.fan_out;
        let (ln, text) = lines.next().ok_or_else(|| {
            Error::parse(
                path,
                last_line + l + 1,
                format!("missing layer {l} ({expected} values expected)"),
            )
        })?;
        let row = parse_f64_row(text, ' ').map_err(|m| Error::parse(path, ln, m))?;
        if row.len() != expected {
            return Err(Error::parse(
                path,
                ln,
                format!("layer {l}: expected {expected} values, found {}", row.len()),
            ));
        }
        values.extend(row);
    }
    ParameterSet::from_flat(spec, values).map_err(|e| Error::parse(path, last_line, e.to_string()))
}
