//! On-disk formats: panoptic PNG sequences, the detections interchange
//! file, and metric reports.
//!
//! A dataset root holds `classes.json` and one directory per sequence with
//! frames named `000000.png`, `000001.png`, ... Each frame stores the class
//! id in the red channel and the instance id as `G * 256 + B`.

mod dataset;
mod detections;
mod png;
mod report;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use self::png::{
    decode_rgb, encode_rgb, read_panoptic_png, write_panoptic_png, MAX_PNG_INSTANCE,
};
pub use dataset::{
    frame_file_name, list_frames, list_sequences, read_class_table, read_sequence_dir,
    write_class_table, write_sequence_dir, CLASS_TABLE_FILE, FRAME_DIGITS,
};
pub use detections::{
    read_detections, write_detections, DetectionFrame, DetectionRecord, DetectionsFile,
    DETECTIONS_VERSION,
};
pub use report::{write_report, AggregationWeights, ReportDocument, REPORT_SCHEMA};

/// Reads a JSON document, reporting the path of the first offending field.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut de = serde_json::Deserializer::from_reader(BufReader::new(file));
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_io() {
            Error::format(path, inner.to_string())
        } else {
            Error::Schema {
                path: path.to_path_buf(),
                field,
                message: inner.to_string(),
            }
        }
    })
}

/// Writes pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::format(path, e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
