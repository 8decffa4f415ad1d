//! Plain-text storage for descriptors.
//!
//! ```text
//! # loft r=<r> rings=<rings> k=<k> [center=<x>,<y>]
//! ring,j,re,im
//! ```
//! with `ring` counted from 1 (innermost) and `j` from 1.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::LoftDescriptor;
use crate::error::{Error, Result};

pub fn format_descriptor(d: &LoftDescriptor) -> String {
    let mut out = format!("# loft r={} rings={} k={}", d.radius, d.rings(), d.k());
    if let Some((x, y)) = d.center {
        let _ = write!(out, " center={x},{y}");
    }
    out.push('\n');
    for (l, ring) in d.coeffs.iter().enumerate() {
        for (i, c) in ring.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.16e},{:.16e}", l + 1, i + 1, c.re, c.im);
        }
    }
    out
}

pub fn write_descriptor(d: &LoftDescriptor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_descriptor(d)).map_err(|e| Error::io(path, e))
}

pub fn read_descriptor(path: impl AsRef<Path>) -> Result<LoftDescriptor> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_descriptor(&text)
}

pub fn parse_descriptor(text: &str) -> Result<LoftDescriptor> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let body = header
        .trim()
        .strip_prefix('#')
        .and_then(|b| b.trim_start().strip_prefix("loft"))
        .ok_or_else(|| Error::parse(1, "header must start with '# loft'"))?;
    let (mut radius, mut rings, mut k, mut center) = (None, None, None, None);
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("expected key=value, got {token:?}")))?;
        match key {
            "r" => radius = Some(field::<usize>(value, 1, "r")?),
            "rings" => rings = Some(field::<usize>(value, 1, "rings")?),
            "k" => k = Some(field::<usize>(value, 1, "k")?),
            "center" => {
                let (x, y) = value
                    .split_once(',')
                    .ok_or_else(|| Error::parse(1, "center must be x,y"))?;
                center = Some((field(x, 1, "center")?, field(y, 1, "center")?));
            }
            other => return Err(Error::parse(1, format!("unknown header key {other:?}"))),
        }
    }
    let radius = radius.ok_or_else(|| Error::parse(1, "header lacks r"))?;
    let rings = rings.ok_or_else(|| Error::parse(1, "header lacks rings"))?;
    let k = k.ok_or_else(|| Error::parse(1, "header lacks k"))?;
    if radius == 0 || rings == 0 || k == 0 {
        return Err(Error::parse(1, "r, rings and k must be positive"));
    }
    let mut cells = vec![vec![None::<Complex64>; k]; rings];
    for (idx, line) in lines {
        let lineno = idx + 1;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(Error::parse(lineno, "expected ring,j,re,im"));
        }
        let l: usize = field(f[0], lineno, "ring")?;
        let j: usize = field(f[1], lineno, "j")?;
        let re: f64 = field(f[2], lineno, "re")?;
        let im: f64 = field(f[3], lineno, "im")?;
        if l == 0 || l > rings || j == 0 || j > k {
            return Err(Error::parse(lineno, format!("index ({l}, {j}) outside rings={rings} k={k}")));
        }
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::parse(lineno, "non-finite coefficient"));
        }
        let slot = &mut cells[l - 1][j - 1];
        if slot.is_some() {
            return Err(Error::parse(lineno, format!("duplicate entry ({l}, {j})")));
        }
        *slot = Some(Complex64::new(re, im));
    }
    let coeffs = cells
        .into_iter()
        .enumerate()
        .map(|(l, ring)| {
            ring.into_iter()
                .enumerate()
                .map(|(i, c)| {
                    c.ok_or_else(|| Error::parse(0, format!("missing entry ({}, {})", l + 1, i + 1)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LoftDescriptor { coeffs, center, radius, sigma_used: None })
}

fn field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {what} from {s:?}")))
}
