//! Plain-text storage for spectral observations.
//!
//! ```text
//! # dims=<d> p=<p> sigma=<σ1,…,σd>
//! dim,j,re,im
//! ```
//! with one row per (dimension, j); `dim` counts from 0 and `j` from 1.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::SpectralObservation;
use crate::error::{Error, Result};

/// Serializes `obs` with 17 significant digits per float.
pub fn format_observation(obs: &SpectralObservation) -> String {
    let sigma: Vec<String> = obs.sigma().iter().map(|s| format!("{s:.16e}")).collect();
    let mut out = format!("# dims={} p={} sigma={}\n", obs.dims(), obs.len(), sigma.join(","));
    for (m, dim) in obs.coeffs().iter().enumerate() {
        for (i, c) in dim.iter().enumerate() {
            let _ = writeln!(out, "{m},{},{:.16e},{:.16e}", i + 1, c.re, c.im);
        }
    }
    out
}

pub fn write_observation(obs: &SpectralObservation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_observation(obs)).map_err(|e| Error::io(path, e))
}

pub fn read_observation(path: impl AsRef<Path>) -> Result<SpectralObservation> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_observation(&text)
}

/// Parses the text format; rows may come in any order but every
/// (dimension, j) cell must appear exactly once.
pub fn parse_observation(text: &str) -> Result<SpectralObservation> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let (dims, p, sigma) = parse_header(header)?;
    let mut coeffs = vec![vec![None::<Complex64>; p]; dims];
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(lineno, "expected dim,j,re,im"));
        }
        let m: usize = parse_field(fields[0], lineno, "dim")?;
        let j: usize = parse_field(fields[1], lineno, "j")?;
        let re: f64 = parse_field(fields[2], lineno, "re")?;
        let im: f64 = parse_field(fields[3], lineno, "im")?;
        if m >= dims || j == 0 || j > p {
            return Err(Error::parse(lineno, format!("index ({m}, {j}) outside dims={dims} p={p}")));
        }
        let slot = &mut coeffs[m][j - 1];
        if slot.is_some() {
            return Err(Error::parse(lineno, format!("duplicate entry ({m}, {j})")));
        }
        *slot = Some(Complex64::new(re, im));
    }
    let coeffs = coeffs
        .into_iter()
        .enumerate()
        .map(|(m, dim)| {
            dim.into_iter()
                .enumerate()
                .map(|(i, c)| {
                    c.ok_or_else(|| Error::parse(0, format!("missing entry ({m}, {})", i + 1)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralObservation::new(coeffs, sigma)
}

fn parse_header(line: &str) -> Result<(usize, usize, Vec<f64>)> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(1, "header must start with '#'"))?;
    let (mut dims, mut p, mut sigma) = (None, None, None);
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("expected key=value, got {token:?}")))?;
        match key {
            "dims" => dims = Some(parse_field::<usize>(value, 1, "dims")?),
            "p" => p = Some(parse_field::<usize>(value, 1, "p")?),
            "sigma" => {
                sigma = Some(
                    value
                        .split(',')
                        .map(|s| parse_field::<f64>(s, 1, "sigma"))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            other => return Err(Error::parse(1, format!("unknown header key {other:?}"))),
        }
    }
    let dims = dims.ok_or_else(|| Error::parse(1, "header lacks dims"))?;
    let p = p.ok_or_else(|| Error::parse(1, "header lacks p"))?;
    let sigma = sigma.ok_or_else(|| Error::parse(1, "header lacks sigma"))?;
    if dims == 0 || p == 0 {
        return Err(Error::parse(1, "dims and p must be positive"));
    }
    if sigma.len() != dims {
        return Err(Error::parse(1, format!("{} sigma values for dims={dims}", sigma.len())));
    }
    Ok((dims, p, sigma))
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {what} from {s:?}")))
}
