//! The universal output record: a time grid, density values, a method
//! tag, per-point warning flags and optional per-point timings.

use std::io::{BufRead, Write};

use crate::errors::Error;
use crate::Result;

/// Flag attached to suspicious points. Negative values can legitimately
/// appear in truncated series at large times and are reported, never
/// clamped.
pub const FLAG_NEGATIVE: &str = "negative";

#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub method: String,
    /// One entry per point; empty string means no warning.
    pub flags: Vec<String>,
    /// Wall-clock cost per point in microseconds (zero when untimed).
    pub per_point_micros: Vec<f64>,
}

impl DensityCurve {
    pub fn new(t: Vec<f64>, p: Vec<f64>, method: &str) -> Result<Self> {
        if t.len() != p.len() {
            return Err(Error::domain(format!(
                "time and value arrays differ in length: {} vs {}",
                t.len(),
                p.len()
            )));
        }
        if t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("time grid must be strictly increasing"));
        }
        let flags = p
            .iter()
            .map(|&v| if v < 0.0 { FLAG_NEGATIVE.to_string() } else { String::new() })
            .collect();
        let n = t.len();
        Ok(DensityCurve {
            t,
            p,
            method: method.to_string(),
            flags,
            per_point_micros: vec![0.0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn has_negative_values(&self) -> bool {
        self.flags.iter().any(|f| f == FLAG_NEGATIVE)
    }

    pub fn total_micros(&self) -> f64 {
        self.per_point_micros.iter().sum()
    }

    /// Writes `t,p,method,flags` rows at 17 significant digits, followed
    /// by `#`-prefixed footer comments.
    pub fn write_csv<W: Write>(&self, w: &mut W, footer: &[String]) -> Result<()> {
        writeln!(w, "t,p,method,flags")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{},{}",
                self.t[i], self.p[i], self.method, self.flags[i]
            )?;
        }
        for line in footer {
            writeln!(w, "# {line}")?;
        }
        Ok(())
    }

    /// Parses the CSV emitted by [`DensityCurve::write_csv`]; footer
    /// comments are ignored, so a round trip reproduces
    /// (t, p, method, flags) exactly.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<DensityCurve>> {
        let mut rows: Vec<(f64, f64, String, String)> = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if lineno == 1 {
                if line != "t,p,method,flags" {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("unexpected header {line:?}"),
                    });
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 4 fields, found {}", fields.len()),
                });
            }
            let t: f64 = fields[0].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad time {:?}", fields[0]),
            })?;
            let p: f64 = fields[1].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad value {:?}", fields[1]),
            })?;
            rows.push((t, p, fields[2].to_string(), fields[3].to_string()));
        }
        // Rows may interleave several methods; split preserving order.
        let mut curves: Vec<DensityCurve> = Vec::new();
        for (t, p, method, flag) in rows {
            match curves.iter_mut().find(|c| c.method == method) {
                Some(c) => {
                    c.t.push(t);
                    c.p.push(p);
                    c.flags.push(flag);
                    c.per_point_micros.push(0.0);
                }
                None => curves.push(DensityCurve {
                    t: vec![t],
                    p: vec![p],
                    method,
                    flags: vec![flag],
                    per_point_micros: vec![0.0],
                }),
            }
        }
        Ok(curves)
    }
}

/// Largest relative gap between two curves sharing a time grid.
pub fn max_rel_gap(a: &DensityCurve, b: &DensityCurve) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::domain("curves differ in length"));
    }
    let mut worst: f64 = 0.0;
    for i in 0..a.len() {
        if a.t[i] != b.t[i] {
            return Err(Error::domain("curves differ in time grids"));
        }
        let scale = b.p[i].abs().max(1e-300);
        worst = worst.max((a.p[i] - b.p[i]).abs() / scale);
    }
    Ok(worst)
}

/// Time grids for curve evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    Linear,
    Log,
}

pub fn time_grid(start: f64, stop: f64, points: usize, spacing: GridSpacing) -> Result<Vec<f64>> {
    if !(start > 0.0) {
        return Err(Error::domain(format!(
            "grid start must be positive, got {start}"
        )));
    }
    if !(stop > start) {
        return Err(Error::domain(format!(
            "grid stop {stop} must exceed start {start}"
        )));
    }
    if points < 2 {
        return Err(Error::domain(format!(
            "grid needs at least 2 points, got {points}"
        )));
    }
    let n = points as f64 - 1.0;
    Ok((0..points)
        .map(|i| match spacing {
            GridSpacing::Linear => start + (stop - start) * i as f64 / n,
            GridSpacing::Log => (start.ln() + (stop.ln() - start.ln()) * i as f64 / n).exp(),
        })
        .collect())
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let t = vec![0.1, 0.22224567890123456, 3.0];
        let p = vec![0.5, -1.4e-13, 2.0 / 3.0];
        let curve = DensityCurve::new(t, p, "perturbed").unwrap();
        let mut buf = Vec::new();
        curve
            .write_csv(&mut buf, &["max_rel_gap: 1e-9".to_string()])
            .unwrap();
        let back = DensityCurve::read_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].t, curve.t);
        assert_eq!(back[0].p, curve.p);
        assert_eq!(back[0].method, curve.method);
        assert_eq!(back[0].flags, curve.flags);
    }

    #[test]
    fn negative_values_are_flagged_not_clamped() {
        let curve = DensityCurve::new(vec![1.0, 2.0], vec![0.1, -0.2], "perturbed").unwrap();
        assert_eq!(curve.flags, vec!["", FLAG_NEGATIVE]);
        assert_eq!(curve.p[1], -0.2);
        assert!(curve.has_negative_values());
    }

    #[test]
    fn rejects_unsorted_grid() {
        assert!(DensityCurve::new(vec![1.0, 1.0], vec![0.0, 0.0], "x").is_err());
        assert!(DensityCurve::new(vec![2.0, 1.0], vec![0.0, 0.0], "x").is_err());
    }

    #[test]
    fn grids() {
        let g = time_grid(1.0, 3.0, 3, GridSpacing::Linear).unwrap();
        assert_eq!(g, vec![1.0, 2.0, 3.0]);
        let g = time_grid(0.01, 100.0, 5, GridSpacing::Log).unwrap();
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert!(time_grid(0.0, 1.0, 5, GridSpacing::Linear).is_err());
        assert!(time_grid(1.0, 1.0, 5, GridSpacing::Linear).is_err());
        assert!(time_grid(1.0, 2.0, 1, GridSpacing::Linear).is_err());
    }
}
