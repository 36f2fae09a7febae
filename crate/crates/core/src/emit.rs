//! CSV and JSON emission. Floats are written in shortest round-trip form,
//! so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluator::{IndicatorField, ScaledValueField};
use crate::sequences::SequenceWindow;
use crate::spectrum::{AutocorrelationProfile, SpectralEstimate};
use crate::zeros::{SectorCount, ZeroSet};

/// Builds CSV text row by row.
#[derive(Default)]
pub struct Csv {
    out: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut c = Csv::default();
        c.out.push_str(&header.join(","));
        c.out.push('\n');
        c
    }

    pub fn row(&mut self, cells: &[&dyn std::fmt::Display]) {
        for (i, x) in cells.iter().enumerate() {
            if i > 0 {
                self.out.push(',');
            }
            let _ = write!(self.out, "{x}");
        }
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn window_csv(w: &SequenceWindow) -> String {
    let mut c = Csv::new(&["index", "re", "im"]);
    for (i, v) in w.values.iter().enumerate() {
        c.row(&[&(w.start + i as u64), &v.re, &v.im]);
    }
    c.finish()
}

/// One row per sample size and lag.
pub fn lags_csv(p: &AutocorrelationProfile) -> String {
    let mut c = Csv::new(&["n", "k", "re", "im"]);
    for (n, row) in p.sample_sizes.iter().zip(&p.rho_hat) {
        for (k, v) in row.iter().enumerate() {
            c.row(&[n, &k, &v.re, &v.im]);
        }
    }
    c.finish()
}

pub fn arcs_csv(e: &SpectralEstimate) -> String {
    let mut c = Csv::new(&["j", "left", "right", "mass"]);
    for (j, m) in e.masses.iter().enumerate() {
        let (l, r) = e.arc_bounds(j);
        c.row(&[&j, &l, &r, m]);
    }
    c.finish()
}

pub fn value_field_csv(f: &ScaledValueField) -> String {
    let mut c = Csv::new(&["r", "theta", "re", "im"]);
    for (ri, r) in f.radii.iter().enumerate() {
        for (ai, t) in f.angles.iter().enumerate() {
            let v = f.at(ri, ai);
            c.row(&[r, t, &v.re, &v.im]);
        }
    }
    c.finish()
}

pub fn indicator_csv(f: &IndicatorField) -> String {
    let mut c = Csv::new(&["r", "theta", "h"]);
    for (ri, r) in f.radii.iter().enumerate() {
        for (ai, t) in f.angles.iter().enumerate() {
            c.row(&[r, t, &f.at(ri, ai)]);
        }
    }
    c.finish()
}

pub fn zeros_csv(zs: &ZeroSet) -> String {
    let mut c = Csv::new(&["modulus", "angle_turns", "multiplicity", "residual"]);
    for z in &zs.zeros {
        c.row(&[&z.modulus, &z.angle, &z.multiplicity, &z.residual]);
    }
    c.finish()
}

pub fn sectors_csv(s: &[SectorCount]) -> String {
    let mut c = Csv::new(&["r", "t1", "t2", "count", "expected"]);
    for x in s {
        c.row(&[&x.r, &x.t1, &x.t2, &x.count, &x.expected]);
    }
    c.finish()
}

#[derive(Serialize)]
pub struct ZeroManifest {
    pub annulus: (f64, f64),
    #[serde(rename = "M")]
    pub degree: u64,
    pub method: String,
    pub max_residual: f64,
    pub count: u64,
    pub unresolved: usize,
}

pub fn zero_manifest(zs: &ZeroSet) -> ZeroManifest {
    ZeroManifest {
        annulus: zs.annulus,
        degree: zs.truncation_degree,
        method: zs.method.clone(),
        max_residual: zs.max_residual,
        count: zs.count(),
        unresolved: zs.unresolved,
    }
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        let mut c = Csv::new(&["x"]);
        c.row(&[&0.1f64]);
        c.row(&[&(1.0f64 / 3.0)]);
        c.row(&[&f64::NEG_INFINITY]);
        let s = c.finish();
        let back: Vec<f64> = s.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        assert_eq!(back, vec![0.1, 1.0 / 3.0, f64::NEG_INFINITY]);
        assert_eq!(s, "x\n0.1\n0.3333333333333333\n-inf\n");
    }
}
