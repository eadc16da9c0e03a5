//! Positive zeros of `J_k`.
//!
//! Zeros are bracketed by scanning for sign changes on a uniform grid that
//! starts at `x = k` (there are no zeros of `J_k` in `(0, k]`), then refined
//! by bisection and a final Newton step. Consecutive zeros are separated by
//! more than 2.4, so any grid step below 1 cannot skip a zero.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bessel::{bessel_j, bessel_j_derivative};
use crate::error::{Error, Result};

pub const DEFAULT_SCAN_STEP: f64 = 0.25;

/// `n`-th positive zero of `J_k` (`n >= 1`).
pub fn bessel_zero(k: u32, n: u32) -> f64 {
    assert!(n >= 1, "zero index starts at 1");
    zeros_of_order(k, n as usize, DEFAULT_SCAN_STEP)[n as usize - 1]
}

/// The first `count` positive zeros of `J_k`, bracketed on a grid of the
/// given step.
pub fn zeros_of_order(k: u32, count: usize, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && step < 1.0, "scan step must lie in (0, 1)");
    let order = k as i32;
    let mut zeros = Vec::with_capacity(count);
    let mut lo = k as f64;
    let mut f_lo = bessel_j(order, lo);
    while zeros.len() < count {
        let hi = lo + step;
        let f_hi = bessel_j(order, hi);
        if f_hi == 0.0 {
            zeros.push(hi);
            lo = hi + 0.5 * step;
            f_lo = bessel_j(order, lo);
            continue;
        }
        if f_lo.signum() != f_hi.signum() {
            zeros.push(refine(order, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    zeros
}

fn refine(order: i32, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let sign_lo = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = bessel_j(order, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let d = bessel_j_derivative(order, x);
    let polished = x - bessel_j(order, x) / d;
    if (polished - x).abs() <= hi - lo + 1e-15 * x {
        polished
    } else {
        x
    }
}

/// Table of `lambda_{kn}` for `0 <= k <= max_k`, `1 <= n <= max_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselZeroTable {
    pub max_k: u32,
    pub max_n: u32,
    values: Vec<f64>,
}

impl BesselZeroTable {
    pub fn new(max_k: u32, max_n: u32) -> Self {
        Self::with_step(max_k, max_n, DEFAULT_SCAN_STEP)
    }

    pub fn with_step(max_k: u32, max_n: u32, step: f64) -> Self {
        let mut values = Vec::with_capacity(((max_k + 1) * max_n) as usize);
        for k in 0..=max_k {
            values.extend(zeros_of_order(k, max_n as usize, step));
        }
        Self { max_k, max_n, values }
    }

    /// `lambda_{|k| n}`; negative orders share the zeros of `|k|`.
    pub fn get(&self, k: i32, n: u32) -> f64 {
        let k = k.unsigned_abs();
        assert!(k <= self.max_k && n >= 1 && n <= self.max_n, "zero ({k}, {n}) not tabulated");
        self.values[(k * self.max_n + n - 1) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..=self.max_k).flat_map(move |k| (1..=self.max_n).map(move |n| (k, n, self.get(k as i32, n))))
    }

    /// Writes `order index value` triplets, one per line, values in
    /// round-trip `{:e}` format.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "# bessel zeros: order index value; max_k={} max_n={}", self.max_k, self.max_n)?;
        for (k, n, v) in self.iter() {
            writeln!(w, "{k} {n} {v:e}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_text(path: &Path) -> Result<Self> {
        let r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut rows: Vec<(u32, u32, f64)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse_err = || Error::CacheCorrupt(format!("bad zero-table line: {line}"));
            let k: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            let n: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            let v: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            rows.push((k, n, v));
        }
        let max_k = rows.iter().map(|r| r.0).max().unwrap_or(0);
        let max_n = rows.iter().map(|r| r.1).max().unwrap_or(0);
        if rows.len() != ((max_k + 1) * max_n) as usize {
            return Err(Error::CacheCorrupt("zero table is not a full rectangle".into()));
        }
        let mut values = vec![f64::NAN; rows.len()];
        for (k, n, v) in rows {
            if n == 0 {
                return Err(Error::CacheCorrupt("zero index must start at 1".into()));
            }
            values[(k * max_n + n - 1) as usize] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::CacheCorrupt("zero table has duplicate entries".into()));
        }
        Ok(Self { max_k, max_n, values })
    }
}
