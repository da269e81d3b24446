use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::classes::ClassTable;
use crate::error::{Error, Result};
use crate::panoptic::PanopticMap;

/// Largest instance id the encoding can carry (`G * 256 + B`).
pub const MAX_PNG_INSTANCE: u32 = 0xFFFF;

/// Packs a map into 8-bit RGB bytes: R = class, G*256+B = instance.
pub fn encode_rgb(map: &PanopticMap) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(map.pixel_count() * 3);
    for (&c, &i) in map.classes().iter().zip(map.instances()) {
        if c > 0xFF {
            return Err(Error::IdOverflow(format!("class {c} exceeds 255")));
        }
        if i > MAX_PNG_INSTANCE {
            return Err(Error::IdOverflow(format!("instance {i} exceeds 65535")));
        }
        out.extend_from_slice(&[c as u8, (i >> 8) as u8, (i & 0xFF) as u8]);
    }
    Ok(out)
}

/// Inverse of [`encode_rgb`]; validates the result against `table`.
pub fn decode_rgb(
    width: u32,
    height: u32,
    bytes: &[u8],
    table: &ClassTable,
) -> Result<PanopticMap> {
    let n = width as usize * height as usize;
    if bytes.len() != n * 3 {
        return Err(Error::LengthMismatch {
            expected: n * 3,
            found: bytes.len(),
        });
    }
    let classes = bytes.chunks_exact(3).map(|p| p[0] as u16).collect();
    let instances = bytes
        .chunks_exact(3)
        .map(|p| (p[1] as u32) << 8 | p[2] as u32)
        .collect();
    let map = PanopticMap::new(width, height, classes, instances)?;
    map.validate(table)?;
    Ok(map)
}

pub fn write_panoptic_png(map: &PanopticMap, path: &Path) -> Result<()> {
    let bytes = encode_rgb(map)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = ::png::Encoder::new(BufWriter::new(file), map.width(), map.height());
    enc.set_color(::png::ColorType::Rgb);
    enc.set_depth(::png::BitDepth::Eight);
    let fail = |e: ::png::EncodingError| Error::format(path, e.to_string());
    let mut writer = enc.write_header().map_err(fail)?;
    writer.write_image_data(&bytes).map_err(fail)?;
    writer.finish().map_err(fail)
}

pub fn read_panoptic_png(path: &Path, table: &ClassTable) -> Result<PanopticMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = ::png::Decoder::new(BufReader::new(file));
    dec.set_transformations(::png::Transformations::IDENTITY);
    let fail = |e: ::png::DecodingError| Error::format(path, e.to_string());
    let mut reader = dec.read_info().map_err(fail)?;
    let info = reader.info();
    if info.color_type != ::png::ColorType::Rgb || info.bit_depth != ::png::BitDepth::Eight {
        return Err(Error::format(
            path,
            format!(
                "expected 8-bit RGB, found {:?} at {:?} bits",
                info.color_type, info.bit_depth
            ),
        ));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "image too large"))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(fail)?;
    buf.truncate(frame.line_size * frame.height as usize);
    decode_rgb(frame.width, frame.height, &buf, table).map_err(|e| match e {
        e @ Error::Io { .. } => e,
        e => Error::format(path, e.to_string()),
    })
}
