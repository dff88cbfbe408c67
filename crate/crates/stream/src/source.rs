//! Frame sources: a synthetic moving pattern or a looped set of images.

use std::path::Path;
use std::sync::Arc;

use fovea_core::synth::MovingPattern;
use fovea_core::{Error, Frame};

#[derive(Debug, Clone)]
pub enum Source {
    Pattern(MovingPattern),
    /// Played in order and looped.
    Images(Vec<Arc<Frame>>),
}

impl Source {
    pub fn pattern(width: u32, height: u32) -> Result<Self, Error> {
        Ok(Source::Pattern(MovingPattern::new(width, height)?))
    }

    /// A source that repeats one frame forever.
    pub fn still(frame: Frame) -> Self {
        Source::Images(vec![Arc::new(frame)])
    }

    /// Loads every PNG in `dir` in file-name order, optionally resizing each
    /// to `size`. Unreadable files are skipped with a warning.
    pub fn image_dir(dir: &Path, size: Option<(u32, u32)>) -> Result<Self, Error> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .collect();
        paths.sort();
        let mut frames = Vec::new();
        for path in paths {
            match Frame::load_png(&path) {
                Ok(f) => {
                    let f = match size {
                        Some((w, h)) if (w, h) != (f.width(), f.height()) => f.resize(w, h)?,
                        _ => f,
                    };
                    frames.push(Arc::new(f));
                }
                Err(e) => log::warn!("skipping {}: {e}", path.display()),
            }
        }
        if frames.is_empty() {
            return Err(Error::InvalidArgument(format!("no readable PNG images in {}", dir.display())));
        }
        Ok(Source::Images(frames))
    }

    pub fn frame(&self, index: u64) -> Arc<Frame> {
        match self {
            Source::Pattern(p) => Arc::new(p.frame(index)),
            Source::Images(frames) => Arc::clone(&frames[(index % frames.len() as u64) as usize]),
        }
    }
}
