//! Verification runs over the points and theorems of a configuration.

use crate::chen::{check_theorem, PointAnalysis, TheoremId};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::oneill::oneill_residuals;
use crate::report::{PointValidation, ReportFile, RunMetadata, TheoremEntry};
use crate::space_forms::{model_fit_residual, validate_structure};
use crate::submersion::{submersion_residual, SubmersionSetup};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Restrict to one point (0-based).
    pub point: Option<usize>,
    /// Replace the configured theorem list.
    pub theorems: Option<Vec<TheoremId>>,
}

fn validate_point(setup: &SubmersionSetup, cfg: &RunConfig, idx: usize, p: &[f64]) -> (PointValidation, Option<PointAnalysis>) {
    let mut v = PointValidation {
        point_index: idx,
        submersion_residual: None,
        submersion_flagged: false,
        frame_residual: None,
        oneill_residual: None,
        projector_jump: None,
        structure: None,
        model_fit_residual: None,
        model_fit_pass: None,
        errors: Vec::new(),
    };
    match submersion_residual(setup, p) {
        Ok(r) => {
            v.submersion_residual = Some(r);
            v.submersion_flagged = !(r < setup.tol.sub_tol);
        }
        Err(e) => v.errors.push(format!("submersion: {e}")),
    }
    if setup.structure.is_some() {
        match validate_structure(setup, &[p.to_vec()]) {
            Ok(s) => v.structure = Some(s),
            Err(e) => v.errors.push(format!("structure: {e}")),
        }
    }
    if let Some(model) = &cfg.file.model {
        match model_fit_residual(&setup.g1, setup.structure.as_ref(), p, model) {
            Ok(r) => {
                v.model_fit_residual = Some(r);
                v.model_fit_pass = Some(r < setup.tol.fit_tol);
            }
            Err(e) => v.errors.push(format!("model fit: {e}")),
        }
    }
    let analysis = match PointAnalysis::new(setup, idx, p) {
        Ok(a) => {
            v.frame_residual = Some(a.frames.residuals(&a.geom.g, &a.geom.jacobian).max());
            v.oneill_residual = Some(oneill_residuals(&a.geom, &a.frames).max());
            v.projector_jump = Some(a.geom.projector_jump);
            Some(a)
        }
        Err(e) => {
            v.errors.push(format!("geometry: {e}"));
            None
        }
    };
    (v, analysis)
}

/// Run every requested theorem at every requested point. Per-point
/// failures are recorded in the report and do not stop the run.
pub fn run_verify(cfg: &RunConfig, opts: &RunOptions) -> Result<ReportFile> {
    let setup = &cfg.setup;
    let mut theorems = opts.theorems.clone().unwrap_or_else(|| cfg.file.theorems.clone());
    theorems.sort();
    theorems.dedup();
    let indices: Vec<usize> = match opts.point {
        Some(i) if i >= cfg.points().len() => {
            return Err(Error::InvalidArgument(format!(
                "point index {i} out of range (config has {} points)",
                cfg.points().len()
            )))
        }
        Some(i) => vec![i],
        None => (0..cfg.points().len()).collect(),
    };
    let mut validation = Vec::with_capacity(indices.len());
    let mut entries = Vec::with_capacity(indices.len() * theorems.len());
    for &idx in &indices {
        let p = &cfg.points()[idx];
        let (v, analysis) = validate_point(setup, cfg, idx, p);
        for &id in &theorems {
            let outcome = match &analysis {
                Some(an) => check_theorem(
                    setup,
                    an,
                    id,
                    &cfg.file.planes.vertical,
                    &cfg.file.planes.horizontal,
                    cfg.file.model.as_ref(),
                ),
                None => Err(Error::InvalidArgument(
                    v.errors.last().cloned().unwrap_or_else(|| "geometry unavailable".into()),
                )),
            };
            let (report, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            entries.push(TheoremEntry {
                point_index: idx,
                theorem: id,
                report,
                error,
            });
        }
        validation.push(v);
    }
    Ok(ReportFile {
        metadata: RunMetadata {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_name: cfg.name().to_string(),
            config_hash: cfg.hash.clone(),
            derivative_mode: setup.mode(),
            tolerances: setup.tol,
            model: cfg.file.model,
            theorems,
            points: indices.iter().map(|&i| cfg.points()[i].clone()).collect(),
        },
        validation,
        entries,
    })
}
