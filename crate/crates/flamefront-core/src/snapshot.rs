//! Snapshot file formats.
//!
//! Cartesian fields: a header line
//! `FLAMEGRID v1 nx=<int> ny=<int> h=<float> t=<float>`
//! followed by row-major whitespace-separated values (text), or by
//! little-endian 64-bit floats (binary variant, same header line as the
//! preamble).  Radial fields: `FLAMERAD v1 n=<int> cells=<int> h=<float>
//! t=<float>` followed by node values.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so
//! write→read is exact and repeated writes are byte-identical.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{FlameError, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::radial::RadialField;

const GRID_MAGIC: &str = "FLAMEGRID v1";
const RADIAL_MAGIC: &str = "FLAMERAD v1";

fn grid_header(field: &ScalarField) -> String {
    let n = field.grid().cells_per_axis();
    format!(
        "{GRID_MAGIC} nx={n} ny={n} h={} t={}\n",
        field.grid().spacing(),
        field.time()
    )
}

/// Write the text variant.
pub fn write_grid_text(field: &ScalarField, mut out: impl Write) -> Result<()> {
    out.write_all(grid_header(field).as_bytes())?;
    let n = field.grid().cells_per_axis();
    let mut line = String::new();
    for iy in 0..n {
        line.clear();
        for ix in 0..n {
            if ix > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{}", field.value(ix, iy)));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Write the compact binary variant (header line, then LE f64 values).
pub fn write_grid_binary(field: &ScalarField, mut out: impl Write) -> Result<()> {
    out.write_all(grid_header(field).as_bytes())?;
    for &v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

struct GridHeader {
    nx: usize,
    ny: usize,
    h: f64,
    t: f64,
}

fn parse_grid_header(line: &str) -> Result<GridHeader> {
    let rest = line
        .strip_prefix(GRID_MAGIC)
        .ok_or_else(|| FlameError::Format(format!("missing '{GRID_MAGIC}' magic")))?;
    let mut nx = None;
    let mut ny = None;
    let mut h = None;
    let mut t = None;
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| FlameError::Format(format!("bad header token '{token}'")))?;
        match key {
            "nx" => nx = Some(parse_num::<usize>(key, value)?),
            "ny" => ny = Some(parse_num::<usize>(key, value)?),
            "h" => h = Some(parse_num::<f64>(key, value)?),
            "t" => t = Some(parse_num::<f64>(key, value)?),
            _ => return Err(FlameError::Format(format!("unknown header key '{key}'"))),
        }
    }
    match (nx, ny, h, t) {
        (Some(nx), Some(ny), Some(h), Some(t)) => Ok(GridHeader { nx, ny, h, t }),
        _ => Err(FlameError::Format("incomplete grid header".into())),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| FlameError::Format(format!("cannot parse {key}={value}")))
}

fn field_from_header(header: &GridHeader, values: Vec<f64>) -> Result<ScalarField> {
    if header.nx != header.ny {
        return Err(FlameError::Format(format!(
            "grid must be square, got {}x{}",
            header.nx, header.ny
        )));
    }
    let half_width = header.nx as f64 * header.h / 2.0;
    let grid = GridSpec::new(half_width, header.nx)?;
    ScalarField::from_values(grid, header.t, values)
}

/// Read the text variant.
pub fn read_grid_text(input: impl Read) -> Result<ScalarField> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header = parse_grid_header(line.trim_end())?;
    let expected = header.nx * header.ny;
    let mut values = Vec::with_capacity(expected);
    let mut body = String::new();
    reader.read_to_string(&mut body)?;
    for token in body.split_whitespace() {
        values.push(parse_num::<f64>("value", token)?);
    }
    if values.len() != expected {
        return Err(FlameError::Format(format!(
            "expected {expected} values, found {}",
            values.len()
        )));
    }
    field_from_header(&header, values)
}

/// Read the binary variant.
pub fn read_grid_binary(input: impl Read) -> Result<ScalarField> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header = parse_grid_header(line.trim_end())?;
    let expected = header.nx * header.ny;
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    if raw.len() != expected * 8 {
        return Err(FlameError::Format(format!(
            "expected {} payload bytes, found {}",
            expected * 8,
            raw.len()
        )));
    }
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    field_from_header(&header, values)
}

/// Write a radial snapshot (text).
pub fn write_radial_text(field: &RadialField, mut out: impl Write) -> Result<()> {
    out.write_all(
        format!(
            "{RADIAL_MAGIC} n={} cells={} h={} t={}\n",
            field.dimension(),
            field.cells(),
            field.spacing(),
            field.time()
        )
        .as_bytes(),
    )?;
    let mut line = String::new();
    for (i, &v) in field.values().iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        line.push_str(&format!("{v}"));
    }
    line.push('\n');
    out.write_all(line.as_bytes())?;
    Ok(())
}

/// Read a radial snapshot (text).
pub fn read_radial_text(input: impl Read) -> Result<RadialField> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let rest = line
        .trim_end()
        .strip_prefix(RADIAL_MAGIC)
        .ok_or_else(|| FlameError::Format(format!("missing '{RADIAL_MAGIC}' magic")))?;
    let mut n = None;
    let mut cells = None;
    let mut h = None;
    let mut t = None;
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| FlameError::Format(format!("bad header token '{token}'")))?;
        match key {
            "n" => n = Some(parse_num::<usize>(key, value)?),
            "cells" => cells = Some(parse_num::<usize>(key, value)?),
            "h" => h = Some(parse_num::<f64>(key, value)?),
            "t" => t = Some(parse_num::<f64>(key, value)?),
            _ => return Err(FlameError::Format(format!("unknown header key '{key}'"))),
        }
    }
    let (n, cells, h, t) = match (n, cells, h, t) {
        (Some(n), Some(c), Some(h), Some(t)) => (n, c, h, t),
        _ => return Err(FlameError::Format("incomplete radial header".into())),
    };
    let mut body = String::new();
    reader.read_to_string(&mut body)?;
    let values: Vec<f64> = body
        .split_whitespace()
        .map(|tok| parse_num::<f64>("value", tok))
        .collect::<Result<_>>()?;
    if values.len() != cells {
        return Err(FlameError::Format(format!(
            "expected {cells} values, found {}",
            values.len()
        )));
    }
    let r_max = (cells - 1) as f64 * h;
    RadialField::from_values(n, r_max, t, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> ScalarField {
        let grid = GridSpec::new(1.0, 24).unwrap();
        ScalarField::from_fn(grid, 0.375, |x, y| {
            (1.0 - x * x - y * y).max(0.0) * (1.0 + 0.1 * (x * 7.0).sin())
        })
    }

    #[test]
    fn text_round_trip_is_exact() {
        let field = sample_field();
        let mut buf = Vec::new();
        write_grid_text(&field, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("FLAMEGRID v1 nx=24 ny=24 h="));
        let back = read_grid_text(&buf[..]).unwrap();
        assert_eq!(back.values(), field.values());
        assert_eq!(back.time(), field.time());
        assert_eq!(back.grid(), field.grid());
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let field = sample_field();
        let mut buf = Vec::new();
        write_grid_binary(&field, &mut buf).unwrap();
        let back = read_grid_binary(&buf[..]).unwrap();
        assert_eq!(back.values(), field.values());
        assert_eq!(back.time(), field.time());
    }

    #[test]
    fn writes_are_byte_identical() {
        let field = sample_field();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_grid_text(&field, &mut a).unwrap();
        write_grid_text(&field, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn radial_round_trip() {
        let field = RadialField::from_fn(3, 2.0, 77, 0.125, |r| (1.0 - r).max(0.0)).unwrap();
        let mut buf = Vec::new();
        write_radial_text(&field, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("FLAMERAD v1 n=3 cells=77 h="));
        let back = read_radial_text(&buf[..]).unwrap();
        assert_eq!(back.values(), field.values());
        assert_eq!(back.dimension(), field.dimension());
        assert!((back.r_max() - field.r_max()).abs() < 1e-15);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        assert!(read_grid_text(&b"BOGUS header\n1 2 3\n"[..]).is_err());
        assert!(read_grid_text(&b"FLAMEGRID v1 nx=24 ny=24 h=0.1\n"[..]).is_err());
        // wrong value count
        let short = b"FLAMEGRID v1 nx=24 ny=24 h=0.0833 t=0\n1.0 2.0\n";
        assert!(read_grid_text(&short[..]).is_err());
        // binary payload truncated
        let field = sample_field();
        let mut buf = Vec::new();
        write_grid_binary(&field, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_grid_binary(&buf[..]).is_err());
    }
}
