//! Sample files.
//!
//! Text files hold one decimal per line with 17 significant digits, which
//! round-trips every 64-bit float; blank lines and lines starting with `#`
//! are skipped. Binary files are the magic bytes `HLS1`, a little-endian
//! `u64` count, then the values as little-endian `f64`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"HLS1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Text,
    Binary,
}

/// Positional decimal with 17 significant digits.
pub fn format_sample(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn check_point(x: f64, line: usize) -> Result<f64> {
    if x.is_finite() && (0.0..1.0).contains(&x) {
        Ok(x + 0.0)
    } else {
        Err(Error::Parse {
            line,
            message: format!("sample {x} lies outside [0, 1)"),
        })
    }
}

pub fn write_text<W: Write>(mut w: W, points: &[f64]) -> Result<()> {
    for &x in points {
        writeln!(w, "{}", format_sample(x))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let x: f64 = s.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("`{s}` is not a number"),
        })?;
        out.push(check_point(x, i + 1)?);
    }
    Ok(out)
}

pub fn write_binary<W: Write>(mut w: W, points: &[f64]) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(points.len() as u64).to_le_bytes())?;
    for &x in points {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Vec<f64>> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head).map_err(|_| Error::Parse {
        line: 0,
        message: "binary header is truncated".into(),
    })?;
    if &head[..4] != BINARY_MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: "missing HLS1 magic".into(),
        });
    }
    let n = u64::from_le_bytes(head[4..].try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(n.min(1 << 24));
    let mut buf = [0u8; 8];
    for i in 0..n {
        r.read_exact(&mut buf).map_err(|_| Error::Parse {
            line: 0,
            message: format!("binary body ends after {i} of {n} values"),
        })?;
        out.push(check_point(f64::from_le_bytes(buf), i + 1)?);
    }
    Ok(out)
}

/// Reads a sample file, detecting the format from the magic bytes.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let head = r.fill_buf()?;
    if head.starts_with(BINARY_MAGIC) {
        read_binary(r)
    } else {
        read_text(r)
    }
}

pub fn write_samples(path: &Path, points: &[f64], format: SampleFormat) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    match format {
        SampleFormat::Text => write_text(w, points),
        SampleFormat::Binary => write_binary(w, points),
    }
}
