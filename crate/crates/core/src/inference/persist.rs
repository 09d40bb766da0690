//! On-disk fit layout.
//!
//! A fit directory holds `manifest.json` and one headerless little-endian
//! `f64` array per parameter group. Every array has one row per draw
//! (chain-major); column order is listed in the manifest:
//!
//! | file               | columns                                              |
//! |--------------------|------------------------------------------------------|
//! | `alpha.f64`        | for each block, one column per athlete               |
//! | `mu_alpha.f64`     | one column per block                                 |
//! | `sigma2_alpha.f64` | one column per block                                 |
//! | `coef.f64`         | for each block, its regressors (basis, then events)  |
//! | `sigma2.f64`       | one column per block                                 |

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BlockDraws, DiagnosticsSummary, FitResult, ModelSpec, SamplerConfig, Target};
use crate::dataset::DatasetManifest;
use crate::{Error, Result};

pub const FIT_FORMAT: &str = "decathlon-fit/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlockEntry {
    target: Target,
    columns: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayEntry {
    file: String,
    rows: usize,
    columns: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format: String,
    spec: ModelSpec,
    sampler: SamplerConfig,
    n_draws: usize,
    dataset_digest: String,
    dataset: DatasetManifest,
    blocks: Vec<BlockEntry>,
    arrays: Vec<ArrayEntry>,
    diagnostics: Option<DiagnosticsSummary>,
}

const GROUPS: [&str; 5] = ["alpha", "mu_alpha", "sigma2_alpha", "coef", "sigma2"];

fn group_columns(fit: &FitResult, group: &str) -> Vec<String> {
    let mut out = Vec::new();
    for b in &fit.blocks {
        let t = b.target.label();
        match group {
            "alpha" => out.extend(fit.dataset.athletes.iter().map(|a| format!("{t}.alpha[{a}]"))),
            "coef" => out.extend(b.column_names.iter().map(|c| format!("{t}.{c}"))),
            _ => out.push(format!("{t}.{group}")),
        }
    }
    out
}

/// Interleave the blocks' arrays into one row per draw.
fn group_rows(fit: &FitResult, group: &str) -> Vec<f64> {
    let n = fit.n_draws();
    let mut out = Vec::new();
    for s in 0..n {
        for b in &fit.blocks {
            match group {
                "alpha" => out.extend_from_slice(&b.alpha[s * b.n_athletes..(s + 1) * b.n_athletes]),
                "coef" => out.extend_from_slice(b.coef_at(s)),
                "mu_alpha" => out.push(b.mu_alpha[s]),
                "sigma2_alpha" => out.push(b.sigma2_alpha[s]),
                "sigma2" => out.push(b.sigma2[s]),
                _ => unreachable!("unknown group {group}"),
            }
        }
    }
    out
}

fn write_f64(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_f64(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Schema(format!(
            "{}: length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn save_fit(fit: &FitResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut arrays = Vec::new();
    for group in GROUPS {
        let file = format!("{group}.f64");
        write_f64(&dir.join(&file), &group_rows(fit, group))?;
        arrays.push(ArrayEntry {
            file,
            rows: fit.n_draws(),
            columns: group_columns(fit, group),
        });
    }
    let manifest = Manifest {
        format: FIT_FORMAT.to_string(),
        spec: fit.spec.clone(),
        sampler: fit.sampler,
        n_draws: fit.n_draws(),
        dataset_digest: fit.dataset.digest(),
        dataset: fit.dataset.clone(),
        blocks: fit
            .blocks
            .iter()
            .map(|b| BlockEntry {
                target: b.target,
                columns: b.column_names.clone(),
            })
            .collect(),
        arrays,
        diagnostics: fit.diagnostics.clone(),
    };
    let path = dir.join("manifest.json");
    let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(&mut file, &manifest)?;
    file.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    Ok(())
}

pub fn load_fit(dir: impl AsRef<Path>) -> Result<FitResult> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != FIT_FORMAT {
        return Err(Error::Schema(format!(
            "unsupported fit format `{}` (expected `{FIT_FORMAT}`)",
            manifest.format
        )));
    }
    let n = manifest.n_draws;
    let n_athletes = manifest.dataset.athletes.len();
    let mut blocks: Vec<BlockDraws> = manifest
        .blocks
        .iter()
        .map(|b| BlockDraws {
            target: b.target,
            column_names: b.columns.clone(),
            n_draws: n,
            n_athletes,
            alpha: Vec::with_capacity(n * n_athletes),
            mu_alpha: Vec::with_capacity(n),
            sigma2_alpha: Vec::with_capacity(n),
            coef: Vec::with_capacity(n * b.columns.len()),
            sigma2: Vec::with_capacity(n),
        })
        .collect();
    for group in GROUPS {
        let values = read_f64(&dir.join(format!("{group}.f64")))?;
        let width: usize = blocks
            .iter()
            .map(|b| match group {
                "alpha" => n_athletes,
                "coef" => b.column_names.len(),
                _ => 1,
            })
            .sum();
        if values.len() != width * n {
            return Err(Error::Schema(format!(
                "{group}.f64 holds {} values, expected {n} draws × {width} columns",
                values.len()
            )));
        }
        let mut cursor = values.iter().copied();
        for _ in 0..n {
            for b in blocks.iter_mut() {
                let take = |k: usize, cursor: &mut dyn Iterator<Item = f64>| cursor.take(k).collect::<Vec<_>>();
                match group {
                    "alpha" => b.alpha.extend(take(n_athletes, &mut cursor)),
                    "coef" => b.coef.extend(take(b.column_names.len(), &mut cursor)),
                    "mu_alpha" => b.mu_alpha.extend(cursor.next()),
                    "sigma2_alpha" => b.sigma2_alpha.extend(cursor.next()),
                    _ => b.sigma2.extend(cursor.next()),
                }
            }
        }
    }
    Ok(FitResult {
        spec: manifest.spec,
        dataset: manifest.dataset,
        sampler: manifest.sampler,
        blocks,
        diagnostics: manifest.diagnostics,
    })
}
