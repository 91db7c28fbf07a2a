//! Frame ingestion and output.
//!
//! Supported inputs:
//! * a directory of binary PGM (`P5`) or PPM (`P6`) files, read in
//!   lexicographic file-name order;
//! * a single PGM/PPM file holding one or more concatenated images;
//! * the `DMDW` framed stream: a 16-byte little-endian header (magic `DMDW`,
//!   `u16` width, `u16` height, `u32` reserved, `u32` frame index) followed by
//!   `width * height` 8-bit pixels, repeated per frame.
//!
//! Colour input is reduced to BT.601 luma. All intensities are scaled to `[0, 1]`.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{decode, parameter, structural, DmdError, Result};
use crate::frames::FrameMatrix;

pub const DMDW_MAGIC: &[u8; 4] = b"DMDW";
pub const DMDW_HEADER_LEN: usize = 16;

/// Video geometry and timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub frame_count: usize,
}

impl VideoMeta {
    pub const DEFAULT_FPS: f64 = 30.0;

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn timestep(&self) -> f64 {
        1.0 / self.fps
    }
}

/// One decoded grayscale frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities in `[0, 1]`.
    pub pixels: Vec<f64>,
}

/// BT.601 luma on normalized channels.
pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

/// Minimal byte cursor for PNM headers.
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.buf.len() {
            let b = self.buf[self.pos];
            if is_space(b) {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.buf.len() && self.buf[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(decode(format!("malformed PNM header: expected {what}")));
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| decode(format!("malformed PNM header: bad {what}")))
    }
}

/// Decodes one `P5`/`P6` image starting at `offset`; returns the frame and
/// the offset just past its raster.
pub fn decode_pnm_at(buf: &[u8], offset: usize) -> Result<(Frame, usize)> {
    let mut cur = Cursor { buf, pos: offset };
    cur.skip_space_and_comments();
    if buf.len() < cur.pos + 2 || buf[cur.pos] != b'P' {
        return Err(decode("malformed PNM header: missing magic"));
    }
    let channels = match buf[cur.pos + 1] {
        b'5' => 1,
        b'6' => 3,
        other => {
            return Err(decode(format!(
                "unsupported PNM variant P{}",
                other as char
            )))
        }
    };
    cur.pos += 2;
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(decode("PNM image has zero size"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(decode(format!("PNM maxval {maxval} out of range")));
    }
    if cur.pos >= buf.len() || !is_space(buf[cur.pos]) {
        return Err(decode("malformed PNM header: no separator before raster"));
    }
    cur.pos += 1;
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let samples = width * height * channels;
    let end = cur.pos + samples * bytes_per_sample;
    if end > buf.len() {
        return Err(decode(format!(
            "truncated PNM raster: need {} bytes, have {}",
            samples * bytes_per_sample,
            buf.len() - cur.pos
        )));
    }
    let raster = &buf[cur.pos..end];
    // divide rather than scale so 8-bit samples match the DMDW decoder bit for bit
    let maxval = maxval as f64;
    let sample = |i: usize| -> f64 {
        let v = if bytes_per_sample == 2 {
            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as f64
        } else {
            raster[i] as f64
        };
        (v / maxval).min(1.0)
    };
    let pixels = if channels == 1 {
        (0..samples).map(sample).collect()
    } else {
        (0..width * height)
            .map(|p| luma(sample(3 * p), sample(3 * p + 1), sample(3 * p + 2)))
            .collect()
    };
    Ok((
        Frame {
            width,
            height,
            pixels,
        },
        end,
    ))
}

/// Decodes every image in a PNM byte buffer.
pub fn decode_pnm_all(buf: &[u8]) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    let mut pos = 0;
    loop {
        while pos < buf.len() && is_space(buf[pos]) {
            pos += 1;
        }
        if pos >= buf.len() {
            break;
        }
        let (frame, next) = decode_pnm_at(buf, pos)?;
        frames.push(frame);
        pos = next;
    }
    if frames.is_empty() {
        return Err(decode("no PNM image found"));
    }
    Ok(frames)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes a grayscale frame as 8-bit `P5`, clamping to `[0, 1]`.
pub fn encode_pgm(pixels: &[f64], width: usize, height: usize) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(structural(format!(
            "{} pixels do not form a {width}x{height} image",
            pixels.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels.iter().map(|&v| quantize(v)));
    Ok(out)
}

/// Encodes an RGB frame (interleaved channels in `[0, 1]`) as 8-bit `P6`.
pub fn encode_ppm(rgb: &[f64], width: usize, height: usize) -> Result<Vec<u8>> {
    if rgb.len() != 3 * width * height {
        return Err(structural("RGB buffer does not match image size"));
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend(rgb.iter().map(|&v| quantize(v)));
    Ok(out)
}

/// Lexicographically sorted `.pgm`/`.ppm` files in `dir`.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "ppm" | "pnm"))
                    .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(decode(format!("no PGM/PPM files in {}", dir.display())));
    }
    Ok(files)
}

/// Reads `DMDW` frames from any byte stream.
pub struct DmdwReader<R: Read> {
    inner: R,
    expected_index: Option<u32>,
    header: [u8; DMDW_HEADER_LEN],
    raster: Vec<u8>,
}

impl<R: Read> DmdwReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            expected_index: None,
            header: [0; DMDW_HEADER_LEN],
            raster: Vec::new(),
        }
    }

    /// Fills `buf`, riding out short reads. Returns the bytes read, which is
    /// less than `buf.len()` only at end of stream.
    fn fill(&mut self, which: Which) -> io::Result<usize> {
        let buf: &mut [u8] = match which {
            Which::Header => &mut self.header,
            Which::Raster => &mut self.raster,
        };
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(got)
    }

    /// Next frame, `None` at a clean end of stream.
    pub fn read_frame(&mut self) -> Result<Option<Frame>> {
        let got = self.fill(Which::Header)?;
        if got == 0 {
            return Ok(None);
        }
        if got < DMDW_HEADER_LEN {
            return Err(decode(format!("truncated DMDW header ({got} of 16 bytes)")));
        }
        let h = &self.header;
        if &h[0..4] != DMDW_MAGIC {
            return Err(decode("bad DMDW magic"));
        }
        let width = u16::from_le_bytes([h[4], h[5]]) as usize;
        let height = u16::from_le_bytes([h[6], h[7]]) as usize;
        let index = u32::from_le_bytes([h[12], h[13], h[14], h[15]]);
        if width == 0 || height == 0 {
            return Err(decode("DMDW frame has zero size"));
        }
        if let Some(expected) = self.expected_index {
            if index != expected {
                return Err(decode(format!(
                    "DMDW frame index {index} out of order, expected {expected}"
                )));
            }
        }
        self.expected_index = Some(index.wrapping_add(1));
        self.raster.resize(width * height, 0);
        let got = self.fill(Which::Raster)?;
        if got < width * height {
            return Err(decode(format!(
                "truncated DMDW frame {index}: {got} of {} bytes",
                width * height
            )));
        }
        let pixels = self.raster.iter().map(|&b| b as f64 / 255.0).collect();
        Ok(Some(Frame {
            width,
            height,
            pixels,
        }))
    }
}

enum Which {
    Header,
    Raster,
}

/// Writes frames in the `DMDW` framed format.
pub struct DmdwWriter<W: Write> {
    inner: W,
    next_index: u32,
}

impl<W: Write> DmdwWriter<W> {
    pub fn new(inner: W) -> Self {
        Self {
            inner,
            next_index: 0,
        }
    }

    pub fn write_frame(&mut self, pixels: &[f64], width: usize, height: usize) -> Result<()> {
        if pixels.len() != width * height {
            return Err(structural("pixel count does not match frame size"));
        }
        let (w, h) = (
            u16::try_from(width).map_err(|_| parameter("width exceeds u16"))?,
            u16::try_from(height).map_err(|_| parameter("height exceeds u16"))?,
        );
        let mut header = [0u8; DMDW_HEADER_LEN];
        header[0..4].copy_from_slice(DMDW_MAGIC);
        header[4..6].copy_from_slice(&w.to_le_bytes());
        header[6..8].copy_from_slice(&h.to_le_bytes());
        header[12..16].copy_from_slice(&self.next_index.to_le_bytes());
        self.inner.write_all(&header)?;
        let raster: Vec<u8> = pixels.iter().map(|&v| quantize(v)).collect();
        self.inner.write_all(&raster)?;
        self.next_index = self.next_index.wrapping_add(1);
        Ok(())
    }

    pub fn into_inner(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

enum SourceKind {
    Files { files: Vec<PathBuf>, next: usize },
    Buffered { frames: std::vec::IntoIter<Frame> },
    Stream(DmdwReader<Box<dyn Read>>),
}

/// Lazily decoded frames from any supported input, checked for consistent size.
pub struct FrameSource {
    kind: SourceKind,
    dims: Option<(usize, usize)>,
    delivered: usize,
}

impl FrameSource {
    /// Opens `path`: `-` is a `DMDW` stream on stdin, a directory is a PNM
    /// sequence, `*.dmdw` is a `DMDW` file, anything else a PNM file.
    pub fn open(path: &str) -> Result<Self> {
        if path == "-" {
            return Ok(Self::from_reader(Box::new(io::stdin())));
        }
        let p = Path::new(path);
        if p.is_dir() {
            return Ok(Self::new(SourceKind::Files {
                files: list_frame_files(p)?,
                next: 0,
            }));
        }
        let is_dmdw = p
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.eq_ignore_ascii_case("dmdw"))
            .unwrap_or(false);
        if is_dmdw {
            let file = File::open(p)?;
            return Ok(Self::from_reader(Box::new(BufReader::new(file))));
        }
        let frames = decode_pnm_all(&fs::read(p)?)?;
        Ok(Self::new(SourceKind::Buffered {
            frames: frames.into_iter(),
        }))
    }

    pub fn from_reader(reader: Box<dyn Read>) -> Self {
        Self::new(SourceKind::Stream(DmdwReader::new(reader)))
    }

    fn new(kind: SourceKind) -> Self {
        Self {
            kind,
            dims: None,
            delivered: 0,
        }
    }

    /// `(width, height)` once the first frame has been read.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    pub fn delivered(&self) -> usize {
        self.delivered
    }

    fn read_raw(&mut self) -> Result<Option<Frame>> {
        match &mut self.kind {
            SourceKind::Files { files, next } => {
                let Some(path) = files.get(*next) else {
                    return Ok(None);
                };
                *next += 1;
                let buf = fs::read(path)?;
                let (frame, _) = decode_pnm_at(&buf, 0)
                    .map_err(|e| decode(format!("{}: {e}", path.display())))?;
                Ok(Some(frame))
            }
            SourceKind::Buffered { frames } => Ok(frames.next()),
            SourceKind::Stream(reader) => reader.read_frame(),
        }
    }

    pub fn next_frame(&mut self) -> Result<Option<Frame>> {
        let Some(frame) = self.read_raw()? else {
            return Ok(None);
        };
        match self.dims {
            None => self.dims = Some((frame.width, frame.height)),
            Some((w, h)) if (w, h) != (frame.width, frame.height) => {
                return Err(decode(format!(
                    "frame {} is {}x{}, earlier frames are {w}x{h}",
                    self.delivered, frame.width, frame.height
                )))
            }
            _ => {}
        }
        self.delivered += 1;
        Ok(Some(frame))
    }
}

impl Iterator for FrameSource {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Loads a whole video into a snapshot matrix.
pub fn load_frames(path: &str, fps: f64) -> Result<(VideoMeta, FrameMatrix)> {
    let source = FrameSource::open(path)?;
    load_from_source(source, fps)
}

pub fn load_from_source(mut source: FrameSource, fps: f64) -> Result<(VideoMeta, FrameMatrix)> {
    if !(fps > 0.0) {
        return Err(parameter("fps must be positive"));
    }
    let mut columns = Vec::new();
    while let Some(frame) = source.next_frame()? {
        columns.push(frame.pixels);
    }
    let (width, height) = source.dims().ok_or_else(|| decode("input holds no frames"))?;
    let frames = FrameMatrix::from_columns(&columns)?;
    Ok((
        VideoMeta {
            width,
            height,
            fps,
            frame_count: frames.frame_count(),
        },
        frames,
    ))
}

/// Writes each column as `frame_NNNNN.pgm` under `dir`.
pub fn write_frames(frames: &FrameMatrix, dir: &Path, meta: &VideoMeta) -> Result<()> {
    if frames.pixels() != meta.pixels() {
        return Err(structural(format!(
            "{} pixels per frame but metadata says {}x{}",
            frames.pixels(),
            meta.width,
            meta.height
        )));
    }
    fs::create_dir_all(dir)?;
    for n in 0..frames.frame_count() {
        let bytes = encode_pgm(frames.frame(n), meta.width, meta.height)?;
        fs::write(dir.join(frame_file_name(n)), bytes)?;
    }
    Ok(())
}

/// Writes raw vectors (already in `[0, 1]` or to be clamped) as a PGM sequence.
pub fn write_frame_vectors(frames: &[Vec<f64>], dir: &Path, width: usize, height: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (n, f) in frames.iter().enumerate() {
        fs::write(dir.join(frame_file_name(n)), encode_pgm(f, width, height)?)?;
    }
    Ok(())
}

pub fn frame_file_name(n: usize) -> String {
    format!("frame_{n:05}.pgm")
}

/// Whether a label marks something entering or leaving the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Entry,
    Exit,
}

/// Ground-truth event at a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthLabel {
    pub frame: usize,
    pub kind: LabelKind,
}

/// Reads a `frame,kind` CSV with header.
pub fn read_labels(path: &Path) -> Result<Vec<GroundTruthLabel>> {
    let file = File::open(path)?;
    parse_labels(file)
}

pub fn parse_labels<R: Read>(reader: R) -> Result<Vec<GroundTruthLabel>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["frame", "kind"] {
        return Err(decode(format!(
            "label header must be `frame,kind`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

pub fn write_labels<W: Write>(writer: W, labels: &[GroundTruthLabel]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["frame", "kind"]).map_err(csv_err)?;
    for l in labels {
        wtr.serialize((l.frame, l.kind)).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_labels_file(path: &Path, labels: &[GroundTruthLabel]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    write_labels(BufWriter::new(File::create(path)?), labels)
}

fn csv_err(e: csv::Error) -> DmdError {
    decode(format!("label CSV: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn white_frame_scales_to_one() {
        let bytes = encode_pgm(&[1.0; 4], 2, 2).unwrap();
        let (f, _) = decode_pnm_at(&bytes, 0).unwrap();
        assert_eq!(f.pixels, vec![1.0; 4]);
    }

    #[test]
    fn header_with_comments_and_16bit() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# depth\n65535\n".to_vec();
        bytes.extend_from_slice(&[0xff, 0xff, 0x80, 0x00]);
        let (f, end) = decode_pnm_at(&bytes, 0).unwrap();
        assert_eq!(end, bytes.len());
        assert_eq!(f.pixels[0], 1.0);
        assert!((f.pixels[1] - 32768.0 / 65535.0).abs() < 1e-12);
    }

    #[test]
    fn rgb_uses_bt601() {
        let rgb = [1.0, 0.0, 0.0, 0.2, 0.4, 0.6];
        let bytes = encode_ppm(&rgb, 2, 1).unwrap();
        let (f, _) = decode_pnm_at(&bytes, 0).unwrap();
        let q = |v: f64| (v * 255.0).round() / 255.0;
        // per-pixel oracle on the quantized channels
        let expect = [
            0.299 * q(1.0),
            0.299 * q(0.2) + 0.587 * q(0.4) + 0.114 * q(0.6),
        ];
        for (a, b) in f.pixels.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(decode_pnm_at(b"P7\n1 1\n255\n\0", 0), Err(DmdError::Decode(_))));
        assert!(matches!(decode_pnm_at(b"P5\nx 1\n255\n\0", 0), Err(DmdError::Decode(_))));
        assert!(matches!(decode_pnm_at(b"P5\n4 4\n255\n\0\0", 0), Err(DmdError::Decode(_))));
        assert!(matches!(decode_pnm_at(b"P5\n1 1\n0\n\0", 0), Err(DmdError::Decode(_))));
    }

    #[test]
    fn concatenated_pnm_file() {
        let mut bytes = encode_pgm(&[0.0, 1.0], 2, 1).unwrap();
        bytes.extend(encode_pgm(&[1.0, 0.0], 2, 1).unwrap());
        bytes.extend(encode_pgm(&[0.5, 0.5], 2, 1).unwrap());
        assert_eq!(decode_pnm_all(&bytes).unwrap().len(), 3);
    }

    #[test]
    fn dmdw_round_trip_and_errors() {
        let mut w = DmdwWriter::new(Vec::new());
        for n in 0..3 {
            w.write_frame(&[n as f64 / 4.0; 6], 3, 2).unwrap();
        }
        let bytes = w.into_inner().unwrap();
        assert_eq!(bytes.len(), 3 * (16 + 6));
        let mut r = DmdwReader::new(&bytes[..]);
        let mut count = 0;
        while let Some(f) = r.read_frame().unwrap() {
            assert_eq!((f.width, f.height), (3, 2));
            count += 1;
        }
        assert_eq!(count, 3);

        let mut r = DmdwReader::new(&bytes[..30]);
        assert!(r.read_frame().unwrap().is_some());
        assert!(matches!(r.read_frame(), Err(DmdError::Decode(_))));

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(DmdwReader::new(&bad[..]).read_frame().is_err());

        let mut skipped = bytes[..22].to_vec();
        skipped.extend_from_slice(&bytes[44..]);
        let mut r = DmdwReader::new(&skipped[..]);
        r.read_frame().unwrap();
        assert!(r.read_frame().is_err());
    }

    #[test]
    fn dmdw_short_reads() {
        struct Trickle<'a>(&'a [u8]);
        impl Read for Trickle<'_> {
            fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
                if self.0.is_empty() || buf.is_empty() {
                    return Ok(0);
                }
                buf[0] = self.0[0];
                self.0 = &self.0[1..];
                Ok(1)
            }
        }
        let mut w = DmdwWriter::new(Vec::new());
        w.write_frame(&[0.25; 12], 4, 3).unwrap();
        w.write_frame(&[0.75; 12], 4, 3).unwrap();
        let bytes = w.into_inner().unwrap();
        let mut r = DmdwReader::new(Trickle(&bytes));
        assert!(r.read_frame().unwrap().is_some());
        assert!(r.read_frame().unwrap().is_some());
        assert!(r.read_frame().unwrap().is_none());
    }

    #[test]
    fn labels_csv() {
        let labels = vec![
            GroundTruthLabel { frame: 100, kind: LabelKind::Entry },
            GroundTruthLabel { frame: 250, kind: LabelKind::Exit },
        ];
        let mut buf = Vec::new();
        write_labels(&mut buf, &labels).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "frame,kind\n100,entry\n250,exit\n");
        assert_eq!(parse_labels(&buf[..]).unwrap(), labels);
        assert!(parse_labels(&b"f,k\n1,entry\n"[..]).is_err());
        assert!(parse_labels(&b"frame,kind\n1,sideways\n"[..]).is_err());
    }

    #[test]
    fn directory_round_trip_and_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let frames = FrameMatrix::from_columns(&[vec![0.0, 0.5, 1.0, 0.2], vec![1.2, -0.1, 0.3, 0.4]]).unwrap();
        let meta = VideoMeta { width: 2, height: 2, fps: 30.0, frame_count: 2 };
        write_frames(&frames, dir.path(), &meta).unwrap();
        let (m, loaded) = load_frames(dir.path().to_str().unwrap(), 30.0).unwrap();
        assert_eq!((m.width, m.height, m.frame_count), (2, 2, 2));
        assert_eq!(loaded.frame(1)[0], 1.0);
        assert_eq!(loaded.frame(1)[1], 0.0);
        fs::write(dir.path().join("frame_00009.pgm"), encode_pgm(&[0.0; 3], 3, 1).unwrap()).unwrap();
        assert!(matches!(load_frames(dir.path().to_str().unwrap(), 30.0), Err(DmdError::Decode(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn pgm_round_trip_within_half_step(
            w in 1usize..12, h in 1usize..12, seed in any::<u64>()
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..w * h).map(|_| rng.random::<f64>()).collect();
            let bytes = encode_pgm(&vals, w, h).unwrap();
            let (f, _) = decode_pnm_at(&bytes, 0).unwrap();
            for (a, b) in f.pixels.iter().zip(&vals) {
                prop_assert!((a - b).abs() <= 1.0 / 510.0 + 1e-15);
            }
        }
    }
}
