use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use qsl_core::jc_dispersive::{effective_params, hierarchy_warnings, qsl_table, speed_curve};
use qsl_core::jc_unitary::{heatmap_retention, tolerance_bound};
use qsl_core::report::{
    write_heatmap, write_qsl_table, write_speeds, write_tolerance_table, HEATMAP_HEADER, QSL_HEADER, SPEEDS_HEADER,
    TOLERANCE_HEADER,
};
use qsl_core::CalibrationWindow;

use crate::config::{Scenario, ScenarioConfig};
use crate::error::CliError;
use crate::verify::{verify_all_with, VerifyOptions, VerifyReport};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub verify: Option<VerifyReport>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        match &self.verify {
            Some(r) if !r.overall => 4,
            _ => 0,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs one scenario, writing `<mode>.csv` (or `verify.jsonl`) and `<mode>.meta.jsonl` into `cfg.output`.
///
/// Hierarchy warnings are returned and recorded in the sidecar; printing them is left to the caller.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunSummary, CliError> {
    fs::create_dir_all(&cfg.output).map_err(|e| CliError::Io(format!("{}: {e}", cfg.output.display())))?;
    let mode = cfg.mode().name();
    let mut warnings = Vec::new();
    let mut verify = None;
    let (file_name, columns, rows): (String, Vec<&str>, usize) = match &cfg.scenario {
        Scenario::UnitaryHeatmap { g, grid } => {
            let taus: Vec<f64> = linspace(grid.g_tau_min, grid.g_tau_max, grid.n_tau)
                .iter()
                .map(|x| x / g)
                .collect();
            let deltas: Vec<f64> = linspace(grid.delta_over_g_min, grid.delta_over_g_max, grid.n_delta)
                .iter()
                .map(|x| x * g)
                .collect();
            let heatmap = heatmap_retention(*g, &taus, &deltas)?;
            let name = format!("{mode}.csv");
            write_heatmap(create(&cfg.output.join(&name))?, &heatmap)?;
            (name, HEATMAP_HEADER.to_vec(), grid.n_tau * grid.n_delta)
        }
        Scenario::UnitaryTolerance { retention, .. } => {
            let rows = retention
                .iter()
                .map(|&r| Ok((r, tolerance_bound(r)?)))
                .collect::<qsl_core::Result<Vec<_>>>()?;
            let name = format!("{mode}.csv");
            write_tolerance_table(create(&cfg.output.join(&name))?, &rows)?;
            (name, TOLERANCE_HEADER.to_vec(), rows.len())
        }
        Scenario::OpenSpeeds { model, times } => {
            let p = model.params();
            effective_params(&p)?;
            warnings = hierarchy_warnings(&p);
            let grid: Vec<f64> = linspace(times.t_min, times.t_max, times.n_t)
                .iter()
                .map(|t| t / p.g)
                .collect();
            let samples = speed_curve(&p, model.theta, &grid)?;
            let name = format!("{mode}.csv");
            write_speeds(create(&cfg.output.join(&name))?, p.g, &samples)?;
            (name, SPEEDS_HEADER.to_vec(), samples.len())
        }
        Scenario::OpenQslTable { model, taus, window } => {
            let p = model.params();
            effective_params(&p)?;
            warnings = hierarchy_warnings(&p);
            let w = CalibrationWindow::around(p.b_field, window.half_width, window.n_grid)?;
            let taus: Vec<f64> = taus.iter().map(|t| t / p.g).collect();
            let rows = qsl_table(&p, &w, model.theta, &taus)?;
            let name = format!("{mode}.csv");
            write_qsl_table(create(&cfg.output.join(&name))?, p.g, &rows)?;
            (name, QSL_HEADER.to_vec(), rows.len())
        }
        Scenario::Verify { tolerances } => {
            let report = verify_all_with(&VerifyOptions {
                seed: cfg.seed,
                tolerances: tolerances.clone(),
            });
            let name = format!("{mode}.jsonl");
            let mut out = create(&cfg.output.join(&name))?;
            out.write_all(report.to_jsonl()?.as_bytes())?;
            out.flush()?;
            let n = report.entries.len();
            verify = Some(report);
            (name, vec!["check", "max_error", "tolerance", "pass"], n)
        }
    };

    let meta_name = format!("{mode}.meta.jsonl");
    let mut meta = create(&cfg.output.join(&meta_name))?;
    let header = json!({ "kind": "scenario", "version": env!("CARGO_PKG_VERSION"), "config": cfg });
    writeln!(meta, "{}", serde_json::to_string(&header)?)?;
    for w in &warnings {
        writeln!(
            meta,
            "{}",
            serde_json::to_string(&json!({ "kind": "warning", "message": w }))?
        )?;
    }
    let output = json!({ "kind": "output", "file": file_name, "columns": columns, "rows": rows });
    writeln!(meta, "{}", serde_json::to_string(&output)?)?;
    meta.flush()?;

    Ok(RunSummary {
        files: vec![cfg.output.join(file_name), cfg.output.join(meta_name)],
        warnings,
        verify,
    })
}
