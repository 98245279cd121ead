//! File formats: flow fields, masks, and sequence manifests.
//!
//! Flow fields use the common binary interchange layout every dense-flow
//! estimator can export: a 4-byte magic equal to the 32-bit float 202021.25,
//! 32-bit signed width and height, then `width*height` interleaved `(u, v)`
//! 32-bit float pairs, row-major, all little-endian. Masks are single-line
//! P5 rasters (`P5 <width> <height> 255\n` followed by one byte per pixel,
//! 0 background / 255 foreground). Both layouts are normative: writers are
//! byte-deterministic and round-trip losslessly.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::detector::ForegroundMask;
use crate::flow::FlowField;

/// Magic number of the flow container, stored as a little-endian f32.
pub const FLOW_MAGIC: f32 = 202021.25;

const FLOW_HEADER_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("bad flow magic: expected {FLOW_MAGIC}, found {found}")]
    BadMagic { found: f32 },
    #[error("file ends before the declared payload")]
    TruncatedFile,
    #[error("non-positive dimensions {width}x{height}")]
    NonPositiveDims { width: i32, height: i32 },
    #[error("payload contains NaN or infinite values")]
    NonFiniteValues,
    #[error("bad mask header (want \"P5 <width> <height> 255\")")]
    BadHeader,
    #[error("mask pixel value {value} (only 0 and 255 are allowed)")]
    BadPixelValue { value: u8 },
    #[error("manifest: {0}")]
    ParseError(String),
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("manifest frame indices must increase: {previous} then {current}")]
    NonMonotoneIndices { previous: u64, current: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn read_f32(bytes: &[u8], offset: usize) -> f32 {
    f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

fn read_i32(bytes: &[u8], offset: usize) -> i32 {
    i32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

/// Parses just the dimensions from a flow file header.
pub fn read_flow_dims(path: &Path) -> Result<(u32, u32), FileError> {
    let bytes = fs::read(path)?;
    parse_flow_header(&bytes).map(|(w, h)| (w as u32, h as u32))
}

fn parse_flow_header(bytes: &[u8]) -> Result<(i32, i32), FileError> {
    if bytes.len() < FLOW_HEADER_LEN {
        return Err(FileError::TruncatedFile);
    }
    let magic = read_f32(bytes, 0);
    if magic != FLOW_MAGIC {
        return Err(FileError::BadMagic { found: magic });
    }
    let width = read_i32(bytes, 4);
    let height = read_i32(bytes, 8);
    if width <= 0 || height <= 0 {
        return Err(FileError::NonPositiveDims { width, height });
    }
    Ok((width, height))
}

/// Reads a flow file. The payload is checked for finiteness so no NaN/Inf
/// ever enters the pipeline.
pub fn read_flow(path: &Path) -> Result<FlowField, FileError> {
    let bytes = fs::read(path)?;
    let (width, height) = parse_flow_header(&bytes)?;
    let pixels = width as usize * height as usize;
    let expected = FLOW_HEADER_LEN + pixels * 8;
    if bytes.len() < expected {
        return Err(FileError::TruncatedFile);
    }
    if bytes.len() > expected {
        return Err(FileError::ParseError(format!(
            "{} trailing bytes after the flow payload",
            bytes.len() - expected
        )));
    }
    let mut u = Vec::with_capacity(pixels);
    let mut v = Vec::with_capacity(pixels);
    for i in 0..pixels {
        let offset = FLOW_HEADER_LEN + i * 8;
        let uu = read_f32(&bytes, offset);
        let vv = read_f32(&bytes, offset + 4);
        if !uu.is_finite() || !vv.is_finite() {
            return Err(FileError::NonFiniteValues);
        }
        u.push(uu as f64);
        v.push(vv as f64);
    }
    Ok(FlowField::new(width as u32, height as u32, u, v))
}

/// Writes a flow file. Values are stored as f32; a field read back from disk
/// rewrites byte-identically.
pub fn write_flow(field: &FlowField, path: &Path) -> Result<(), FileError> {
    let pixels = field.pixel_count();
    let mut bytes = Vec::with_capacity(FLOW_HEADER_LEN + pixels * 8);
    bytes.extend_from_slice(&FLOW_MAGIC.to_le_bytes());
    bytes.extend_from_slice(&(field.width() as i32).to_le_bytes());
    bytes.extend_from_slice(&(field.height() as i32).to_le_bytes());
    for i in 0..pixels {
        bytes.extend_from_slice(&(field.u_plane()[i] as f32).to_le_bytes());
        bytes.extend_from_slice(&(field.v_plane()[i] as f32).to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

/// Parses just the dimensions from a mask file header.
pub fn read_mask_dims(path: &Path) -> Result<(u32, u32), FileError> {
    let bytes = fs::read(path)?;
    parse_mask_header(&bytes).map(|(w, h, _)| (w, h))
}

fn parse_mask_header(bytes: &[u8]) -> Result<(u32, u32, usize), FileError> {
    // Header: "P5", width, height, "255" as whitespace-separated tokens,
    // then exactly one whitespace byte before the payload.
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(FileError::BadHeader);
        }
        tokens.push(&bytes[start..pos]);
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(FileError::BadHeader);
    }
    pos += 1; // single whitespace separating header and payload
    if tokens[0] != b"P5" || tokens[3] != b"255" {
        return Err(FileError::BadHeader);
    }
    let parse_dim = |t: &[u8]| -> Result<u32, FileError> {
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .filter(|&d| d >= 1)
            .ok_or(FileError::BadHeader)
    };
    Ok((parse_dim(tokens[1])?, parse_dim(tokens[2])?, pos))
}

/// Reads a mask raster. Pixel values other than 0 and 255 are rejected.
pub fn read_mask(path: &Path) -> Result<ForegroundMask, FileError> {
    let bytes = fs::read(path)?;
    let (width, height, payload_start) = parse_mask_header(&bytes)?;
    let pixels = width as usize * height as usize;
    let payload = &bytes[payload_start..];
    if payload.len() < pixels {
        return Err(FileError::TruncatedFile);
    }
    if payload.len() > pixels {
        return Err(FileError::ParseError(format!(
            "{} trailing bytes after the mask payload",
            payload.len() - pixels
        )));
    }
    let mut bits = Vec::with_capacity(pixels);
    for &b in payload {
        match b {
            0 => bits.push(false),
            255 => bits.push(true),
            value => return Err(FileError::BadPixelValue { value }),
        }
    }
    Ok(ForegroundMask::new(width, height, bits))
}

/// Writes a mask raster with the exact header `P5 <width> <height> 255\n`.
pub fn write_mask(mask: &ForegroundMask, path: &Path) -> Result<(), FileError> {
    let mut bytes = format!("P5 {} {} 255\n", mask.width(), mask.height()).into_bytes();
    bytes.extend(mask.bits().iter().map(|&b| if b { 255u8 } else { 0u8 }));
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

/// One line of a sequence manifest, paths already resolved against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub frame_index: u64,
    pub flow_path: PathBuf,
    pub mask_path: Option<PathBuf>,
}

/// A validated, dimension-checked frame sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceManifest {
    pub entries: Vec<ManifestEntry>,
    pub width: u32,
    pub height: u32,
}

impl SequenceManifest {
    /// Whether every frame carries a ground-truth mask.
    pub fn has_ground_truth(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.mask_path.is_some())
    }
}

/// Loads a manifest: one `<index> <flow-path> [<mask-path>]` line per frame,
/// `#` comments and blank lines ignored, relative paths resolved against the
/// manifest's directory. All referenced files are opened eagerly so a bad
/// path or mismatched dimension fails at load, not mid-run.
pub fn load_manifest(path: &Path) -> Result<SequenceManifest, FileError> {
    let text = fs::read_to_string(path)
        .map_err(|e| FileError::ParseError(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut entries = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let index: u64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(|| {
            FileError::ParseError(format!("line {}: bad frame index", line_no + 1))
        })?;
        let flow = fields.next().ok_or_else(|| {
            FileError::ParseError(format!("line {}: missing flow path", line_no + 1))
        })?;
        let mask = fields.next();
        if fields.next().is_some() {
            return Err(FileError::ParseError(format!(
                "line {}: too many fields",
                line_no + 1
            )));
        }
        if let Some(previous) = entries.last().map(|e: &ManifestEntry| e.frame_index) {
            if index <= previous {
                return Err(FileError::NonMonotoneIndices {
                    previous,
                    current: index,
                });
            }
        }
        entries.push(ManifestEntry {
            frame_index: index,
            flow_path: base.join(flow),
            mask_path: mask.map(|m| base.join(m)),
        });
    }

    let mut dims: Option<(u32, u32)> = None;
    for entry in &entries {
        let flow_dims = read_flow_dims(&entry.flow_path).map_err(|e| match e {
            FileError::Io(io) => {
                FileError::ParseError(format!("{}: {io}", entry.flow_path.display()))
            }
            other => other,
        })?;
        match dims {
            None => dims = Some(flow_dims),
            Some(d) if d != flow_dims => {
                return Err(FileError::DimensionMismatch {
                    context: format!(
                        "{} is {}x{}, sequence is {}x{}",
                        entry.flow_path.display(),
                        flow_dims.0,
                        flow_dims.1,
                        d.0,
                        d.1
                    ),
                });
            }
            _ => {}
        }
        if let Some(mask_path) = &entry.mask_path {
            let mask_dims = read_mask_dims(mask_path).map_err(|e| match e {
                FileError::Io(io) => {
                    FileError::ParseError(format!("{}: {io}", mask_path.display()))
                }
                other => other,
            })?;
            if mask_dims != flow_dims {
                return Err(FileError::DimensionMismatch {
                    context: format!(
                        "mask {} is {}x{}, flow is {}x{}",
                        mask_path.display(),
                        mask_dims.0,
                        mask_dims.1,
                        flow_dims.0,
                        flow_dims.1
                    ),
                });
            }
        }
    }
    let (width, height) = dims.unwrap_or((0, 0));
    Ok(SequenceManifest {
        entries,
        width,
        height,
    })
}
