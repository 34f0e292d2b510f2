//! Grid manifest: axis header followed by one card path per node, row-major.
//!
//! ```text
//! labels = lg wfin
//! axis1 = 14.5n 15.5n 16.5n
//! axis2 = 4.1n 5.1n
//! card = nodes/n_00_00.card
//! card = nodes/n_00_01.card
//! ...
//! ```
//!
//! Card paths are relative to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{GridError, ModelGrid};
use crate::device::{read_card, write_card, CardFileError};
use crate::units::{format_length_nm, parse_length_nm};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("manifest is missing `{0}`")]
    Missing(&'static str),
    #[error("card {path}: {source}")]
    Card { path: String, source: CardFileError },
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ManifestError + '_ {
    move |source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_grid(manifest: &Path) -> Result<ModelGrid, ManifestError> {
    let text = fs::read_to_string(manifest).map_err(io_err(manifest))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut labels: Option<Vec<String>> = None;
    let mut axes: [Option<Vec<f64>>; 2] = [None, None];
    let mut cards = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let syntax = |message: &str| ManifestError::Syntax {
            line,
            message: message.to_string(),
        };
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| syntax("expected `key = value`"))?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        match key.as_str() {
            "labels" => {
                let l: Vec<String> = value.split_whitespace().map(str::to_string).collect();
                if l.len() != 2 {
                    return Err(syntax("labels needs exactly two names"));
                }
                labels = Some(l);
            }
            "axis1" | "axis2" => {
                let slot = if key == "axis1" { 0 } else { 1 };
                let vals = value
                    .split_whitespace()
                    .map(parse_length_nm)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| syntax(&e.to_string()))?;
                axes[slot] = Some(vals);
            }
            "card" => {
                let path: PathBuf = base.join(value);
                let card = read_card(&path).map_err(|source| ManifestError::Card {
                    path: path.display().to_string(),
                    source,
                })?;
                cards.push(card);
            }
            other => return Err(syntax(&format!("unknown key `{other}`"))),
        }
    }
    let labels = labels.unwrap_or_else(|| vec!["lg".into(), "wfin".into()]);
    let [a1, a2] = axes;
    let a1 = a1.ok_or(ManifestError::Missing("axis1"))?;
    let a2 = a2.ok_or(ManifestError::Missing("axis2"))?;
    Ok(ModelGrid::new([&labels[0], &labels[1]], a1, a2, cards)?)
}

/// Writes `<dir>/<name>` plus one card per node under `<dir>/nodes/`.
/// Returns the manifest path.
pub fn write_grid(grid: &ModelGrid, dir: &Path, name: &str) -> Result<PathBuf, ManifestError> {
    let nodes = dir.join("nodes");
    fs::create_dir_all(&nodes).map_err(io_err(&nodes))?;
    let [l1, l2] = grid.labels();
    let fmt_axis = |a: &[f64]| {
        a.iter()
            .map(|v| format_length_nm(*v))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut text = format!(
        "labels = {l1} {l2}\naxis1 = {}\naxis2 = {}\n",
        fmt_axis(grid.axis1()),
        fmt_axis(grid.axis2())
    );
    let n2 = grid.axis2().len();
    for (idx, card) in grid.cards().iter().enumerate() {
        let rel = format!(
            "nodes/{}_{:02}_{:02}.card",
            card.polarity,
            idx / n2,
            idx % n2
        );
        let path = dir.join(&rel);
        fs::write(&path, write_card(card)).map_err(io_err(&path))?;
        text.push_str(&format!("card = {rel}\n"));
    }
    let path = dir.join(name);
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}
