//! CSV writers for heatmaps, tolerance tables, speed curves and QSL tables.
//!
//! Times are written in units of `1/g` and speeds in units of `g`, so every
//! file is dimensionless. Floats use the shortest representation that
//! round-trips, which keeps output byte-identical across runs.

use std::io::Write;

use crate::bures::ProjectedSpeedSample;
use crate::error::{Error, Result};
use crate::jc_unitary::RetentionHeatmap;
use crate::window::QslCheck;

pub const HEATMAP_HEADER: [&str; 3] = ["g_tau", "delta_over_g", "retention"];
pub const TOLERANCE_HEADER: [&str; 2] = ["retention", "delta_t_bound"];
pub const SPEEDS_HEADER: [&str; 3] = ["t_times_g", "v_phys", "v_quo"];
pub const QSL_HEADER: [&str; 5] = ["tau", "theta_quo", "v_bar_quo", "bound", "satisfied"];

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// One row per grid point, detuning-major.
pub fn write_heatmap<W: Write>(out: W, heatmap: &RetentionHeatmap) -> Result<()> {
    let mut w = writer(out, &HEATMAP_HEADER)?;
    let g = heatmap.g;
    for (i, &d) in heatmap.delta.iter().enumerate() {
        for (j, &t) in heatmap.tau.iter().enumerate() {
            w.write_record([num(g * t), num(d / g), num(heatmap.retention[(i, j)])])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows `(R, |Δ|t bound)`.
pub fn write_tolerance_table<W: Write>(out: W, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = writer(out, &TOLERANCE_HEADER)?;
    for &(r, b) in rows {
        w.write_record([num(r), num(b)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_speeds<W: Write>(out: W, g: f64, samples: &[ProjectedSpeedSample]) -> Result<()> {
    let mut w = writer(out, &SPEEDS_HEADER)?;
    for s in samples {
        w.write_record([num(g * s.t), num(s.v_phys / g), num(s.v_quo / g)])?;
    }
    w.flush()?;
    Ok(())
}

/// An infinite bound is written as `inf`.
pub fn write_qsl_table<W: Write>(out: W, g: f64, rows: &[QslCheck]) -> Result<()> {
    let mut w = writer(out, &QSL_HEADER)?;
    for q in rows {
        w.write_record([
            num(g * q.tau),
            num(q.theta_quo),
            num(q.v_bar_quo / g),
            num(g * q.bound),
            q.satisfied.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jc_unitary::heatmap_retention;

    fn lines(bytes: Vec<u8>) -> Vec<String> {
        String::from_utf8(bytes).unwrap().lines().map(str::to_owned).collect()
    }

    #[test]
    fn heatmap_layout() {
        let h = heatmap_retention(2.0, &[0.5, 1.0], &[-1.0, 0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_heatmap(&mut buf, &h).unwrap();
        let l = lines(buf);
        assert_eq!(l[0], "g_tau,delta_over_g,retention");
        assert_eq!(l.len(), 1 + 6);
        assert_eq!(l[3], "1,0,1");
        assert_eq!(l[4], "2,0,1");
    }

    #[test]
    fn tolerance_and_qsl_layout() {
        let mut buf = Vec::new();
        write_tolerance_table(&mut buf, &[(0.9, 1.0)]).unwrap();
        assert_eq!(lines(buf), ["retention,delta_t_bound", "0.9,1"]);

        let mut buf = Vec::new();
        let rows = [QslCheck::evaluate(1.0, 0.5, 1.0), QslCheck::evaluate(1.0, 0.5, 0.0)];
        write_qsl_table(&mut buf, 1.0, &rows).unwrap();
        assert_eq!(
            lines(buf),
            [
                "tau,theta_quo,v_bar_quo,bound,satisfied",
                "1,0.5,1,0.5,true",
                "1,0.5,0,inf,true"
            ]
        );
    }

    #[test]
    fn speeds_are_scaled_by_g() {
        let mut buf = Vec::new();
        let s = ProjectedSpeedSample {
            t: 0.5,
            f_eff: 1.0,
            v_quo: 0.5,
            v_phys: 2.0,
        };
        write_speeds(&mut buf, 2.0, &[s]).unwrap();
        assert_eq!(lines(buf), ["t_times_g,v_phys,v_quo", "1,1,0.25"]);
    }
}
