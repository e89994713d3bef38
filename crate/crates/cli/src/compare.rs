//! Side-by-side comparison of two completed runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::commands::Summary;
use crate::error::CliError;
use crate::manifest::{load_manifest, LoadedManifest};
use crate::output::{float, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub key: String,
    pub value_a: [f64; 2],
    pub value_b: [f64; 2],
    /// Modulus of the complex difference.
    pub difference: f64,
    pub bound_a: Option<f64>,
    pub bound_b: Option<f64>,
    pub within_a: Option<bool>,
    pub within_b: Option<bool>,
    /// `difference ≤ bound_a + bound_b`, absent bounds counting as zero.
    pub within_combined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub manifest_a: String,
    pub manifest_b: String,
    pub manifest_sha256_a: String,
    pub manifest_sha256_b: String,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn table(&self) -> Table {
        let opt = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        let mut t = Table::new(
            "compare",
            &["key", "difference", "bound_a", "bound_b", "within_a", "within_b", "within_combined"],
        );
        for r in &self.rows {
            t.push(vec![
                r.key.clone(),
                float(r.difference),
                crate::output::cell(r.bound_a),
                crate::output::cell(r.bound_b),
                opt(r.within_a),
                opt(r.within_b),
                r.within_combined.to_string(),
            ]);
        }
        t
    }
}

/// The `summary.json` written for `loaded`, checked against its hash.
///
/// # Errors
/// `MissingArtifact` when the summary is absent, unreadable or stale.
pub fn load_summary(loaded: &LoadedManifest, out: Option<&Path>) -> Result<Summary, CliError> {
    let path = loaded.output_dir(out).join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|_| CliError::MissingArtifact(path.clone()))?;
    let summary: Summary = serde_json::from_str(&text).map_err(|_| CliError::MissingArtifact(path.clone()))?;
    if summary.manifest_sha256 != loaded.sha256 {
        return Err(CliError::MissingArtifact(path));
    }
    Ok(summary)
}

/// Pairs the estimates of two runs of the same model and observable.
///
/// # Errors
/// `StructuralMismatch` when models, observables or estimate keys differ.
pub fn compare_summaries(a: &Summary, b: &Summary) -> Result<Vec<CompareRow>, CliError> {
    let (ma, mb) = (&a.manifest, &b.manifest);
    if ma.model.without_size() != mb.model.without_size() {
        return Err(CliError::StructuralMismatch("the model blocks differ".into()));
    }
    match (ma.command.observable(), mb.command.observable()) {
        (Some(x), Some(y)) if x != y => return Err(CliError::StructuralMismatch("the observables differ".into())),
        (Some(_), Some(_)) => {}
        _ if ma.command != mb.command => {
            return Err(CliError::StructuralMismatch(format!("commands {} and {} differ", a.command, b.command)))
        }
        _ => {}
    }
    let rows: Vec<CompareRow> = a
        .estimates
        .iter()
        .filter_map(|ea| {
            let eb = b.estimates.iter().find(|e| e.key == ea.key)?;
            let difference = (ea.value[0] - eb.value[0]).hypot(ea.value[1] - eb.value[1]);
            let combined = ea.bound.unwrap_or(0.0) + eb.bound.unwrap_or(0.0);
            Some(CompareRow {
                key: ea.key.clone(),
                value_a: ea.value,
                value_b: eb.value,
                difference,
                bound_a: ea.bound,
                bound_b: eb.bound,
                within_a: ea.bound.map(|x| difference <= x),
                within_b: eb.bound.map(|x| difference <= x),
                within_combined: difference <= combined,
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(CliError::StructuralMismatch("the runs share no estimates".into()));
    }
    Ok(rows)
}

/// Compares the runs of two manifests, each read from its own output directory.
pub fn compare(a: &Path, b: &Path) -> Result<CompareReport, CliError> {
    let (la, lb) = (load_manifest(a)?, load_manifest(b)?);
    let (sa, sb) = (load_summary(&la, None)?, load_summary(&lb, None)?);
    let rows = compare_summaries(&sa, &sb)?;
    let name = |p: &PathBuf| p.display().to_string();
    Ok(CompareReport {
        manifest_a: name(&la.path),
        manifest_b: name(&lb.path),
        manifest_sha256_a: la.sha256,
        manifest_sha256_b: lb.sha256,
        rows,
    })
}
