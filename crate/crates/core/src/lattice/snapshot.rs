//! Plain-text field snapshots.
//!
//! ```text
//! N M W boundary
//! a_1 ... a_N v_1 ... v_M     (one row per site, lexicographic order)
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! snapshot re-reads to the identical field.

use std::io::{BufRead, Write};

use super::field::Field;
use super::window::{Boundary, LatticeWindow};
use crate::error::{Error, Result};

pub fn write_snapshot<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let window = field.window();
    writeln!(
        out,
        "{} {} {} {}",
        window.dim(),
        field.width(),
        window.radius(),
        window.boundary()
    )?;
    let mut line = String::new();
    for site in 0..window.n_sites() {
        line.clear();
        for (i, c) in window.coords(site).iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&c.to_string());
        }
        for v in field.site(site) {
            line.push(' ');
            line.push_str(&format!("{v:?}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<Field> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty snapshot".into()))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(Error::Parse(format!("bad snapshot header '{header}'")));
    }
    let parse_int = |s: &str| {
        s.parse::<i64>()
            .map_err(|e| Error::Parse(format!("bad header field '{s}': {e}")))
    };
    let dim = parse_int(parts[0])? as usize;
    let width = parse_int(parts[1])? as usize;
    let radius = parse_int(parts[2])?;
    let boundary: Boundary = parts[3].parse()?;
    let window = LatticeWindow::new(dim, radius, boundary, 0)?;
    if width == 0 {
        return Err(Error::Parse("snapshot width must be positive".into()));
    }
    let mut field = Field::zeros(&window, width);
    let mut seen = 0usize;
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != dim + width {
            return Err(Error::Parse(format!(
                "row {} has {} entries, expected {}",
                row + 1,
                tokens.len(),
                dim + width
            )));
        }
        let coords = tokens[..dim]
            .iter()
            .map(|t| parse_int(t))
            .collect::<Result<Vec<_>>>()?;
        let site = window.index(&coords)?;
        if site != seen {
            return Err(Error::Parse(format!(
                "row {} is out of lexicographic order",
                row + 1
            )));
        }
        for (c, t) in tokens[dim..].iter().enumerate() {
            let v: f64 = t
                .parse()
                .map_err(|e| Error::Parse(format!("bad value '{t}': {e}")))?;
            field.set(site, c, v);
        }
        seen += 1;
    }
    if seen != window.n_sites() {
        return Err(Error::Parse(format!(
            "snapshot has {seen} rows, expected {}",
            window.n_sites()
        )));
    }
    Ok(field)
}
