//! Image corpus loading for batch commands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fovea_core::Frame;

/// A named corpus image.
#[derive(Debug, Clone)]
pub struct Image {
    pub name: String,
    pub frame: Frame,
}

/// Expands directories to the PNG files they contain (sorted by name),
/// keeps plain files as given, and loads them all. Unreadable images are
/// skipped with a warning; an empty result is an error.
pub fn load(paths: &[PathBuf]) -> Result<Vec<Image>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(path)
                .with_context(|| format!("reading {}", path.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| is_png(p))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    let mut images = Vec::new();
    for file in files {
        match Frame::load_png(&file) {
            Ok(frame) => images.push(Image {
                name: file.file_stem().map_or_else(|| file.display().to_string(), |s| s.to_string_lossy().into_owned()),
                frame,
            }),
            Err(e) => log::warn!("skipping {}: {e}", file.display()),
        }
    }
    if images.is_empty() {
        bail!("corpus is empty: no readable PNG images in {paths:?}");
    }
    Ok(images)
}

fn is_png(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}
