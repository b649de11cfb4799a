// SPDX-License-Identifier: MIT OR Apache-2.0

//! ACTV1 activation container and JSONL metadata sidecar.
//!
//! One file holds the final-prompt-token activations of one
//! (model, dataset, layer) triple. Layout, all little-endian:
//!
//! | bytes  | field                         |
//! |--------|-------------------------------|
//! | 0..4   | magic `ACTV`                  |
//! | 4..8   | `u32` version, always 1       |
//! | 8..12  | `u32` layer                   |
//! | 12..16 | `u32` hidden width `d`        |
//! | 16..24 | `u64` sample count `n`        |
//! | 24     | `u8` dtype code, 1 = f32le    |
//! | 25..32 | zero padding                  |
//! | 32..   | `n·d` f32 values, row-major   |
//!
//! Row `i` pairs with line `i` of the metadata sidecar. The header carries no
//! model or dataset identifiers; those come from the sidecar records and the
//! caller.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};

pub const MAGIC: [u8; 4] = *b"ACTV";
pub const VERSION: u32 = 1;
pub const DTYPE_F32LE: u8 = 1;
pub const HEADER_LEN: usize = 32;

/// Decoded ACTV1 header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub layer: u32,
    pub d: u32,
    pub n: u64,
}

impl Header {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut buf = [0u8; HEADER_LEN];
        buf[0..4].copy_from_slice(&MAGIC);
        buf[4..8].copy_from_slice(&VERSION.to_le_bytes());
        buf[8..12].copy_from_slice(&self.layer.to_le_bytes());
        buf[12..16].copy_from_slice(&self.d.to_le_bytes());
        buf[16..24].copy_from_slice(&self.n.to_le_bytes());
        buf[24] = DTYPE_F32LE;
        buf
    }

    pub fn decode(buf: &[u8; HEADER_LEN]) -> Result<Self> {
        let mut magic = [0u8; 4];
        magic.copy_from_slice(&buf[0..4]);
        if magic != MAGIC {
            return Err(ProbeError::BadMagic { found: magic });
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(ProbeError::UnsupportedVersion(version));
        }
        if buf[24] != DTYPE_F32LE {
            return Err(ProbeError::UnsupportedDtype(buf[24]));
        }
        if buf[25..32].iter().any(|&b| b != 0) {
            return Err(ProbeError::MalformedHeader(
                "nonzero padding in bytes 25..32".into(),
            ));
        }
        let layer = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        let d = u32::from_le_bytes(buf[12..16].try_into().unwrap());
        let n = u64::from_le_bytes(buf[16..24].try_into().unwrap());
        if d == 0 {
            return Err(ProbeError::MalformedHeader("hidden width d = 0".into()));
        }
        Ok(Header { layer, d, n })
    }

    /// Payload length in bytes, checked against overflow.
    pub fn payload_bytes(&self) -> Result<u64> {
        let overflow = || ProbeError::SizeOverflow {
            n: self.n,
            d: self.d as u64,
        };
        let values = self.n.checked_mul(self.d as u64).ok_or_else(overflow)?;
        let bytes = values.checked_mul(4).ok_or_else(overflow)?;
        bytes.checked_add(HEADER_LEN as u64).ok_or_else(overflow)?;
        usize::try_from(bytes).map_err(|_| overflow())?;
        Ok(bytes)
    }
}

/// Dense `n × d` activation matrix, rows stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    pub model_id: String,
    pub dataset_id: String,
    pub layer: u32,
    d: usize,
    n: usize,
    data: Vec<f32>,
}

impl ActivationMatrix {
    /// Build from a flat row-major buffer. Values are validated as finite.
    pub fn from_flat(layer: u32, d: usize, data: Vec<f32>) -> Result<Self> {
        if d == 0 {
            return Err(ProbeError::InvalidArgument(
                "hidden width d must be ≥ 1".into(),
            ));
        }
        if !data.len().is_multiple_of(d) {
            return Err(ProbeError::DimensionMismatch {
                expected: d,
                found: data.len() % d,
            });
        }
        check_finite(&data, d, 0)?;
        Ok(Self {
            model_id: String::new(),
            dataset_id: String::new(),
            layer,
            d,
            n: data.len() / d,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f32]>>(layer: u32, rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(d * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(ProbeError::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(layer, d, data)
    }

    pub fn with_ids(mut self, model_id: impl Into<String>, dataset_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self.dataset_id = dataset_id.into();
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    pub fn header(&self) -> Header {
        Header {
            layer: self.layer,
            d: self.d as u32,
            n: self.n as u64,
        }
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            model_id: self.model_id.clone(),
            dataset_id: self.dataset_id.clone(),
            layer: self.layer,
            d: self.d,
            n: indices.len(),
            data,
        }
    }

    /// Apply `f` to every value, revalidating finiteness.
    pub fn map_values(&self, mut f: impl FnMut(usize, f32) -> f32) -> Result<Self> {
        let d = self.d;
        let data: Vec<f32> = self
            .data
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % d, v))
            .collect();
        check_finite(&data, d, 0)?;
        Ok(Self {
            data,
            ..self.clone()
        })
    }
}

fn check_finite(data: &[f32], d: usize, row_offset: usize) -> Result<()> {
    if let Some(k) = data.iter().position(|v| !v.is_finite()) {
        return Err(ProbeError::NonFinite {
            row: row_offset + k / d,
            col: k % d,
            value: data[k],
        });
    }
    Ok(())
}

fn decode_f32le(bytes: &[u8], out: &mut Vec<f32>) {
    out.extend(
        bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
    );
}

pub fn write_matrix(matrix: &ActivationMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = matrix.header();
    header.payload_bytes()?;
    check_finite(&matrix.data, matrix.d, 0)?;

    let file = File::create(path).map_err(|e| ProbeError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| ProbeError::io(path, e);
    out.write_all(&header.encode()).map_err(io)?;
    let mut buf = Vec::with_capacity(4 * matrix.d.max(1024));
    for chunk in matrix.data.chunks(16 * 1024) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf).map_err(io)?;
    }
    out.flush().map_err(io)?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ActivationMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| ProbeError::io(path, e))?;
    let mut matrix = decode_matrix(&bytes)?;
    matrix.dataset_id = file_stem(path);
    Ok(matrix)
}

/// Decode a complete in-memory ACTV1 image.
pub fn decode_matrix(bytes: &[u8]) -> Result<ActivationMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(ProbeError::MalformedHeader(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    let header = Header::decode(bytes[..HEADER_LEN].try_into().unwrap())?;
    let expected = header.payload_bytes()?;
    let present = (bytes.len() - HEADER_LEN) as u64;
    if present < expected {
        return Err(ProbeError::Truncated { expected, present });
    }
    if present > expected {
        return Err(ProbeError::TrailingBytes { expected, present });
    }
    let d = header.d as usize;
    let mut data = Vec::with_capacity(expected as usize / 4);
    decode_f32le(&bytes[HEADER_LEN..], &mut data);
    check_finite(&data, d, 0)?;
    Ok(ActivationMatrix {
        model_id: String::new(),
        dataset_id: String::new(),
        layer: header.layer,
        d,
        n: header.n as usize,
        data,
    })
}

/// Import a headerless little-endian f32 dump of shape `n × d`.
pub fn import_raw_f32(path: impl AsRef<Path>, d: usize, layer: u32) -> Result<ActivationMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| ProbeError::io(path, e))?;
    if d == 0 || bytes.len() % (4 * d) != 0 {
        return Err(ProbeError::MalformedHeader(format!(
            "raw f32 file of {} bytes is not a whole number of {d}-wide rows",
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(bytes.len() / 4);
    decode_f32le(&bytes, &mut data);
    let mut m = ActivationMatrix::from_flat(layer, d, data)?;
    m.dataset_id = file_stem(path);
    Ok(m)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Streaming reader that yields validated row chunks without loading the
/// whole payload.
pub struct MatrixReader<R> {
    inner: R,
    header: Header,
    rows_read: u64,
    buf: Vec<u8>,
}

impl MatrixReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| ProbeError::io(path, e))?;
        let len = file.metadata().map_err(|e| ProbeError::io(path, e))?.len();
        let reader = Self::new(BufReader::new(file))?;
        let expected = reader.header.payload_bytes()?;
        let present = len.saturating_sub(HEADER_LEN as u64);
        if present < expected {
            return Err(ProbeError::Truncated { expected, present });
        }
        if present > expected {
            return Err(ProbeError::TrailingBytes { expected, present });
        }
        Ok(reader)
    }
}

impl<R: Read> MatrixReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut head = [0u8; HEADER_LEN];
        inner.read_exact(&mut head).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                ProbeError::MalformedHeader("stream ends inside the header".into())
            } else {
                ProbeError::io("<stream>", e)
            }
        })?;
        let header = Header::decode(&head)?;
        header.payload_bytes()?;
        Ok(Self {
            inner,
            header,
            rows_read: 0,
            buf: Vec::new(),
        })
    }

    pub fn header(&self) -> Header {
        self.header
    }

    /// Next chunk of at most `max_rows` rows, flattened row-major, or `None`
    /// once every row has been read.
    pub fn next_chunk(&mut self, max_rows: usize) -> Result<Option<Vec<f32>>> {
        let remaining = self.header.n - self.rows_read;
        if remaining == 0 {
            return Ok(None);
        }
        let take = remaining.min(max_rows.max(1) as u64) as usize;
        let d = self.header.d as usize;
        self.buf.resize(take * d * 4, 0);
        self.inner.read_exact(&mut self.buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                ProbeError::Truncated {
                    expected: self.header.n * d as u64 * 4,
                    present: self.rows_read * d as u64 * 4,
                }
            } else {
                ProbeError::io("<stream>", e)
            }
        })?;
        let mut out = Vec::with_capacity(take * d);
        decode_f32le(&self.buf, &mut out);
        check_finite(&out, d, self.rows_read as usize)?;
        self.rows_read += take as u64;
        Ok(Some(out))
    }

    /// Drain the remaining rows into a matrix.
    pub fn read_all(mut self, chunk_rows: usize) -> Result<ActivationMatrix> {
        let d = self.header.d as usize;
        let mut data = Vec::with_capacity(self.header.n as usize * d);
        while let Some(chunk) = self.next_chunk(chunk_rows)? {
            data.extend_from_slice(&chunk);
        }
        Ok(ActivationMatrix {
            model_id: String::new(),
            dataset_id: String::new(),
            layer: self.header.layer,
            d,
            n: self.header.n as usize,
            data,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Right,
    Wrong,
    Idk,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Right, Category::Wrong, Category::Idk];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Right => "right",
            Category::Wrong => "wrong",
            Category::Idk => "idk",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One question and the model's graded greedy answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleMeta {
    pub sample_id: String,
    pub dataset_id: String,
    pub question: String,
    pub gold: Vec<String>,
    pub answer: String,
    pub correct: u8,
    pub category: Category,
    #[serde(default)]
    pub verbalized_confidence: Option<f64>,
}

impl SampleMeta {
    pub fn validate(&self) -> Result<()> {
        match (self.category, self.correct) {
            (Category::Right, 1) | (Category::Wrong, 0) | (Category::Idk, 0) => {}
            (_, c) if c > 1 => {
                return Err(ProbeError::InvalidRecord {
                    sample_id: self.sample_id.clone(),
                    reason: format!("correct must be 0 or 1, found {c}"),
                })
            }
            (category, correct) => {
                return Err(ProbeError::CategoryContradiction {
                    sample_id: self.sample_id.clone(),
                    category: category.to_string(),
                    correct,
                })
            }
        }
        if let Some(c) = self.verbalized_confidence {
            if !(0.0..=100.0).contains(&c) {
                return Err(ProbeError::InvalidRecord {
                    sample_id: self.sample_id.clone(),
                    reason: format!("verbalized_confidence {c} outside [0, 100]"),
                });
            }
        }
        Ok(())
    }

    pub fn is_correct(&self) -> bool {
        self.correct == 1
    }
}

/// Parse a JSONL sidecar. Every record is validated; `sample_id`s must be
/// unique.
pub fn read_meta(path: impl AsRef<Path>) -> Result<Vec<SampleMeta>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| ProbeError::io(path, e))?;
    parse_meta(BufReader::new(file)).map_err(|e| match e {
        ProbeError::Io { source, .. } => ProbeError::io(path, source),
        other => other,
    })
}

pub fn parse_meta(reader: impl BufRead) -> Result<Vec<SampleMeta>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut pending_blank = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| ProbeError::io("<metadata>", e))?;
        if line.trim().is_empty() {
            pending_blank.get_or_insert(line_no);
            continue;
        }
        if let Some(blank) = pending_blank {
            return Err(ProbeError::MalformedRecord {
                line: blank,
                reason: "blank line inside the sidecar breaks row alignment".into(),
            });
        }
        let record: SampleMeta =
            serde_json::from_str(&line).map_err(|e| ProbeError::MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
        record.validate()?;
        if !seen.insert(record.sample_id.clone()) {
            return Err(ProbeError::DuplicateSampleId(record.sample_id));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_meta(records: &[SampleMeta], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| ProbeError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| ProbeError::io(path, e))?;
    }
    out.flush().map_err(|e| ProbeError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub n_true: usize,
    pub n_false: usize,
    /// Subset of `n_false` whose answer was an abstention.
    pub n_idk: usize,
}

/// Activations joined index-by-index with their metadata.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub matrix: ActivationMatrix,
    pub meta: Vec<SampleMeta>,
}

impl LabeledDataset {
    pub fn new(mut matrix: ActivationMatrix, meta: Vec<SampleMeta>) -> Result<Self> {
        if meta.len() != matrix.n() {
            return Err(ProbeError::CountMismatch {
                rows: matrix.n(),
                records: meta.len(),
            });
        }
        let mut seen = HashSet::with_capacity(meta.len());
        for m in &meta {
            m.validate()?;
            if !seen.insert(m.sample_id.as_str()) {
                return Err(ProbeError::DuplicateSampleId(m.sample_id.clone()));
            }
        }
        if let Some(first) = meta.first() {
            if !first.dataset_id.is_empty() {
                matrix.dataset_id = first.dataset_id.clone();
            }
        }
        Ok(Self { matrix, meta })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn d(&self) -> usize {
        self.matrix.d()
    }

    pub fn dataset_id(&self) -> &str {
        &self.matrix.dataset_id
    }

    pub fn labels(&self) -> Vec<u8> {
        self.meta.iter().map(|m| m.correct).collect()
    }

    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for m in &self.meta {
            if m.is_correct() {
                c.n_true += 1;
            } else {
                c.n_false += 1;
                if m.category == Category::Idk {
                    c.n_idk += 1;
                }
            }
        }
        c
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select(indices),
            meta: indices.iter().map(|&i| self.meta[i].clone()).collect(),
        }
    }
}

/// Pair `matrix` with the sidecar at `meta_path`, row `i` to line `i`.
pub fn join(matrix: ActivationMatrix, meta_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let meta = read_meta(meta_path)?;
    LabeledDataset::new(matrix, meta)
}
