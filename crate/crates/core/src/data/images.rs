use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use nalgebra::DMatrix;
use serde::Serialize;

use super::{DataSource, Dataset};
use crate::error::{Error, Result};

/// Files that were found but not used.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub skipped: Vec<(PathBuf, String)>,
}

#[derive(Debug, Clone)]
pub struct ImageIngest {
    pub dataset: Dataset,
    /// Class names in label order, empty when the folder is flat.
    pub class_names: Vec<String>,
    pub report: IngestReport,
}

/// Loads every image under `path` as a grayscale `side×side` pixel vector
/// with intensities in `[0, 1]`, flattened row-major.
///
/// When `path` has subfolders, each subfolder is one class (numbered in
/// lexicographic order of folder names) and loose files at the top level
/// are skipped.
pub fn ingest_image_folder(path: &Path, side: u32) -> Result<ImageIngest> {
    if side < 4 {
        return Err(Error::Parameter(format!("image side must be >= 4, got {side}")));
    }
    let mut report = IngestReport::default();
    let (dirs, files) = list_dir(path)?;

    let mut groups: Vec<(Option<String>, Vec<PathBuf>)> = Vec::new();
    if dirs.is_empty() {
        groups.push((None, files));
    } else {
        for f in files {
            report.skipped.push((f, "loose file next to class folders".into()));
        }
        for d in dirs {
            let name = d.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let (sub_dirs, sub_files) = list_dir(&d)?;
            for s in sub_dirs {
                report.skipped.push((s, "nested folder".into()));
            }
            groups.push((Some(name), sub_files));
        }
    }

    let d = (side * side) as usize;
    let mut pixels: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut class_names = Vec::new();
    for (name, files) in groups {
        let mut decoded = 0;
        for f in files {
            match load_pixels(&f, side) {
                Ok(v) => {
                    pixels.push(v);
                    labels.push(class_names.len());
                    decoded += 1;
                }
                Err(e) => {
                    log::warn!("skipping {}: {e}", f.display());
                    report.skipped.push((f, e));
                }
            }
        }
        if let (Some(name), true) = (name, decoded > 0) {
            class_names.push(name);
        }
    }
    if pixels.is_empty() {
        return Err(Error::Data(format!("no decodable images under {}", path.display())));
    }
    let points = DMatrix::from_fn(pixels.len(), d, |i, j| pixels[i][j]);
    let id = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "images".into());
    let labels = (!class_names.is_empty()).then_some(labels);
    let dataset = Dataset::new(id, points, labels, DataSource::ImageFolder)?;
    Ok(ImageIngest {
        dataset,
        class_names,
        report,
    })
}

fn list_dir(path: &Path) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
    let mut dirs = Vec::new();
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let p = entry.path();
        if p.is_dir() {
            dirs.push(p);
        } else {
            files.push(p);
        }
    }
    dirs.sort();
    files.sort();
    Ok((dirs, files))
}

fn load_pixels(path: &Path, side: u32) -> std::result::Result<Vec<f64>, String> {
    let img = image::open(path).map_err(|e| e.to_string())?;
    let gray = img.to_luma8();
    let resized = image::imageops::resize(&gray, side, side, FilterType::Triangle);
    Ok(resized.pixels().map(|p| p.0[0] as f64 / 255.0).collect())
}
