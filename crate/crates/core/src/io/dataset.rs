use std::fs;
use std::path::{Path, PathBuf};

use crate::classes::ClassTable;
use crate::error::{Error, Result};
use crate::panoptic::{PanopticMap, Sequence};

use super::png::{read_panoptic_png, write_panoptic_png};
use super::{read_json, write_json};

/// File name of the class table at a dataset root.
pub const CLASS_TABLE_FILE: &str = "classes.json";

/// Width of the zero-padded frame index in frame file names.
pub const FRAME_DIGITS: usize = 6;

pub fn frame_file_name(index: usize) -> String {
    format!("{index:0width$}.png", width = FRAME_DIGITS)
}

fn parse_frame_name(name: &str) -> Option<usize> {
    let stem = name.strip_suffix(".png")?;
    if stem.len() != FRAME_DIGITS || !stem.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    stem.parse().ok()
}

pub fn read_class_table(path: &Path) -> Result<ClassTable> {
    read_json(path)
}

pub fn write_class_table(table: &ClassTable, path: &Path) -> Result<()> {
    write_json(table, path)
}

/// Frame files of a sequence directory, checked to be `000000.png`,
/// `000001.png`, ... without gaps. Other files are ignored.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut frames = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(i) = entry.file_name().to_str().and_then(parse_frame_name) {
            frames.push((i, entry.path()));
        }
    }
    frames.sort();
    if frames.is_empty() {
        return Err(Error::format(dir, "no frame files"));
    }
    for (expected, (i, _)) in frames.iter().enumerate() {
        if *i != expected {
            return Err(Error::format(
                dir,
                format!("missing frame {}", frame_file_name(expected)),
            ));
        }
    }
    Ok(frames.into_iter().map(|(_, p)| p).collect())
}

/// Reads every frame of a sequence directory in index order.
pub fn read_sequence_dir(dir: &Path, table: &ClassTable) -> Result<Sequence> {
    let paths = list_frames(dir)?;
    let mut frames: Vec<PanopticMap> = Vec::with_capacity(paths.len());
    for p in &paths {
        let map = read_panoptic_png(p, table)?;
        if let Some(first) = frames.first() {
            if first.dims() != map.dims() {
                return Err(Error::format(
                    p,
                    format!(
                        "frame is {}x{}, sequence is {}x{}",
                        map.width(),
                        map.height(),
                        first.width(),
                        first.height()
                    ),
                ));
            }
        }
        frames.push(map);
    }
    Sequence::new(frames, table.clone()).map_err(|e| Error::format(dir, e.to_string()))
}

/// Writes the frames of `seq` into `dir`, creating it if needed.
pub fn write_sequence_dir(seq: &Sequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in seq.frames().iter().enumerate() {
        write_panoptic_png(frame, &dir.join(frame_file_name(i)))?;
    }
    Ok(())
}

/// Sequence subdirectories of a dataset root, sorted by name.
pub fn list_sequences(root: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.file_type().map_err(|e| Error::io(root, e))?.is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}
