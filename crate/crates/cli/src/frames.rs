//! Frame files: PNG, PPM/PNM, or raw RGB24 (`.rgb`, `.raw`) sized by the
//! configured geometry. Directories expand to their image files in name
//! order.

use std::path::{Path, PathBuf};

use vidlink_core::frame_prep::{Geometry, RgbFrame};

use crate::error::{io_error, CliError, Result};

const IMAGE_EXTS: &[&str] = &["png", "ppm", "pnm", "pgm", "pbm"];
const RAW_EXTS: &[&str] = &["rgb", "raw"];

fn ext(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn is_frame_file(path: &Path) -> bool {
    let e = ext(path);
    IMAGE_EXTS.contains(&e.as_str()) || RAW_EXTS.contains(&e.as_str())
}

/// Expands directories; a missing path is a usage error.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| io_error(input.display(), e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_frame_file(p))
                .collect();
            files.sort();
            out.extend(files);
        } else if input.is_file() {
            out.push(input.clone());
        } else {
            return Err(CliError::Usage(format!("input {} does not exist", input.display())));
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no input frames".into()));
    }
    Ok(out)
}

pub fn load_frame(path: &Path, geometry: Geometry) -> Result<RgbFrame> {
    let frame = if RAW_EXTS.contains(&ext(path).as_str()) {
        let bytes = std::fs::read(path).map_err(|e| io_error(path.display(), e))?;
        RgbFrame::new(geometry.width, geometry.height, bytes)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
    } else {
        let img = image::open(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?.to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        RgbFrame::new(w, h, img.into_raw()).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
    };
    if frame.geometry() != geometry {
        return Err(CliError::Validation(format!(
            "{} is {}x{}, expected {}x{}",
            path.display(),
            frame.width,
            frame.height,
            geometry.width,
            geometry.height
        )));
    }
    Ok(frame)
}

pub fn save_frame(frame: &RgbFrame, path: &Path, raw: bool) -> Result<()> {
    if raw {
        return std::fs::write(path, &frame.pixels).map_err(|e| io_error(path.display(), e));
    }
    image::save_buffer(path, &frame.pixels, frame.width as u32, frame.height as u32, image::ColorType::Rgb8)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn frame_name(index: usize, raw: bool) -> String {
    format!("frame_{index:05}.{}", if raw { "rgb" } else { "png" })
}
