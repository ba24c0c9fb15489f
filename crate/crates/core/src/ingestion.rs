//! Landmark file format: reader, writer and incremental stream decoder.
//!
//! A file is UTF-8 text. Line 1 is a JSON header:
//!
//! ```text
//! {"format":"formsense-landmarks","version":1,"landmarks":["nose","left_hip",...],
//!  "frame_rate":30.0,"exercise":"squats","source":"rig"}
//! ```
//!
//! `exercise` may be `null`. Every following line is one frame:
//! `timestamp,x,y,z,visibility,x,y,z,visibility,...` with one quadruple per
//! header landmark in header order. The writer emits landmarks in canonical
//! ordinal order and every number with six decimals. Blank lines are ignored.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Exercise, Landmark, LandmarkFrame, LandmarkId, LandmarkSeries};

pub const FORMAT_TAG: &str = "formsense-landmarks";
pub const FORMAT_VERSION: u32 = 1;

/// Parsed header line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub landmarks: Vec<LandmarkId>,
    pub frame_rate: f64,
    #[serde(default)]
    pub exercise: Option<Exercise>,
    #[serde(default)]
    pub source: String,
}

impl Header {
    pub fn for_series(series: &LandmarkSeries) -> Self {
        Header {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            landmarks: series.landmark_ids(),
            frame_rate: series.frame_rate,
            exercise: series.exercise,
            source: series.source.clone(),
        }
    }

    /// Number of comma-separated fields in one record.
    pub fn field_count(&self) -> usize {
        1 + 4 * self.landmarks.len()
    }

    fn parse(text: &str, line: usize) -> Result<Self> {
        let header: Header = serde_json::from_str(text)
            .map_err(|e| Error::parse(line, format!("malformed header: {e}")))?;
        if header.format != FORMAT_TAG {
            return Err(Error::parse(line, format!("unknown format tag `{}`", header.format)));
        }
        if header.version != FORMAT_VERSION {
            return Err(Error::parse(line, format!("unsupported version {}", header.version)));
        }
        if !(header.frame_rate.is_finite() && header.frame_rate > 0.0) {
            return Err(Error::parse(line, "frame_rate must be positive"));
        }
        for (i, id) in header.landmarks.iter().enumerate() {
            if header.landmarks[..i].contains(id) {
                return Err(Error::parse(line, format!("duplicate landmark `{id}`")));
            }
        }
        Ok(header)
    }
}

/// Formats one frame as a record line (without newline).
pub fn format_record(frame: &LandmarkFrame, landmarks: &[LandmarkId]) -> String {
    let mut out = format!("{:.6}", frame.timestamp);
    for id in landmarks {
        let lm = frame.landmarks[id];
        for v in [lm.position[0], lm.position[1], lm.position[2], lm.visibility] {
            out.push_str(&format!(",{v:.6}"));
        }
    }
    out
}

/// Parses one record line against `header`. Errors carry `line`.
pub fn parse_record(text: &str, header: &Header, line: usize) -> Result<LandmarkFrame> {
    let fields: Vec<&str> = text.trim_end_matches('\r').split(',').collect();
    if fields.len() != header.field_count() {
        return Err(Error::parse(
            line,
            format!("expected {} fields, found {}", header.field_count(), fields.len()),
        ));
    }
    let mut values = Vec::with_capacity(fields.len());
    for (col, field) in fields.iter().enumerate() {
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("field {} is not a number: `{field}`", col + 1)))?;
        if !v.is_finite() {
            return Err(Error::parse(line, format!("field {} is not finite", col + 1)));
        }
        values.push(v);
    }
    let mut frame = LandmarkFrame::new(values[0]);
    for (i, &id) in header.landmarks.iter().enumerate() {
        let q = &values[1 + 4 * i..5 + 4 * i];
        if !(0.0..=1.0).contains(&q[3]) {
            return Err(Error::parse(line, format!("visibility of {id} outside [0,1]")));
        }
        frame.landmarks.insert(id, Landmark::new(q[0], q[1], q[2], q[3]));
    }
    Ok(frame)
}

/// Reads a landmark file.
pub fn read_series(path: impl AsRef<Path>) -> Result<LandmarkSeries> {
    let text = fs::read_to_string(path)?;
    parse_series(&text)
}

/// Reads a landmark file from any reader.
pub fn read_series_from(mut reader: impl Read) -> Result<LandmarkSeries> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_series(&text)
}

/// Parses the full text of a landmark file.
pub fn parse_series(text: &str) -> Result<LandmarkSeries> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((n, l)) => break Header::parse(l, n)?,
            None => return Err(Error::parse(1, "missing header")),
        }
    };
    let mut series = LandmarkSeries::new(header.frame_rate, header.source.clone());
    series.exercise = header.exercise;
    for (n, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let frame = parse_record(l, &header, n)?;
        if let Some(prev) = series.frames.last() {
            if !(frame.timestamp > prev.timestamp) {
                return Err(Error::parse(
                    n,
                    format!("timestamp {} does not follow {}", frame.timestamp, prev.timestamp),
                ));
            }
        }
        series.frames.push(frame);
    }
    Ok(series)
}

/// Writes `series` to `path`.
pub fn write_series(series: &LandmarkSeries, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_series_to(series, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes `series` in the landmark file format.
pub fn write_series_to(series: &LandmarkSeries, mut w: impl Write) -> Result<()> {
    let header = Header::for_series(series);
    let json = serde_json::to_string(&header).map_err(|e| Error::input(e.to_string()))?;
    writeln!(w, "{json}")?;
    for frame in &series.frames {
        writeln!(w, "{}", format_record(frame, &header.landmarks))?;
    }
    Ok(())
}

/// Serializes `series` to a string.
pub fn series_to_string(series: &LandmarkSeries) -> String {
    let mut buf = Vec::new();
    write_series_to(series, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("output is ASCII")
}

/// Push-based decoder: feed arbitrary byte chunks, receive complete frames.
#[derive(Debug, Default)]
pub struct StreamDecoder {
    pending: Vec<u8>,
    header: Option<Header>,
    line: usize,
    last_timestamp: Option<f64>,
    failed: bool,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Header once its line has arrived.
    pub fn header(&self) -> Option<&Header> {
        self.header.as_ref()
    }

    /// Consumes a chunk and returns every frame completed by it. On a
    /// malformed record the frames decoded before it are discarded; use
    /// [`StreamDecoder::push_partial`] to keep them.
    pub fn push(&mut self, chunk: &[u8]) -> Result<Vec<LandmarkFrame>> {
        match self.push_partial(chunk) {
            (_, Some(e)) => Err(e),
            (frames, None) => Ok(frames),
        }
    }

    /// Like [`StreamDecoder::push`], but returns the frames completed before
    /// a malformed record together with its error.
    pub fn push_partial(&mut self, chunk: &[u8]) -> (Vec<LandmarkFrame>, Option<Error>) {
        let mut frames = Vec::new();
        if self.failed {
            return (frames, None);
        }
        self.pending.extend_from_slice(chunk);
        while let Some(pos) = self.pending.iter().position(|&b| b == b'\n') {
            let line: Vec<u8> = self.pending.drain(..=pos).collect();
            match self.consume_line(&line[..line.len() - 1]) {
                Ok(Some(frame)) => frames.push(frame),
                Ok(None) => {}
                Err(e) => return (frames, Some(e)),
            }
        }
        (frames, None)
    }

    /// Flushes a final record that lacks a trailing newline.
    pub fn finish(&mut self) -> Result<Option<LandmarkFrame>> {
        if self.failed || self.pending.is_empty() {
            return Ok(None);
        }
        let line = std::mem::take(&mut self.pending);
        self.consume_line(&line)
    }

    fn consume_line(&mut self, bytes: &[u8]) -> Result<Option<LandmarkFrame>> {
        self.line += 1;
        let result = self.decode_line(bytes);
        if result.is_err() {
            self.failed = true;
        }
        result
    }

    fn decode_line(&mut self, bytes: &[u8]) -> Result<Option<LandmarkFrame>> {
        let record = self.line.saturating_sub(1);
        let stream_err = |message: String| Error::Stream { record, message };
        let text = std::str::from_utf8(bytes).map_err(|_| stream_err("invalid UTF-8".into()))?;
        if text.trim().is_empty() {
            return Ok(None);
        }
        let Some(header) = &self.header else {
            let header = Header::parse(text, self.line).map_err(|e| stream_err(parse_message(e)))?;
            self.header = Some(header);
            return Ok(None);
        };
        let frame = parse_record(text, header, self.line).map_err(|e| stream_err(parse_message(e)))?;
        if let Some(prev) = self.last_timestamp {
            if !(frame.timestamp > prev) {
                return Err(stream_err(format!(
                    "timestamp {} does not follow {prev}",
                    frame.timestamp
                )));
            }
        }
        self.last_timestamp = Some(frame.timestamp);
        Ok(Some(frame))
    }
}

fn parse_message(e: Error) -> String {
    match e {
        Error::Parse { message, .. } => message,
        other => other.to_string(),
    }
}

/// Pull-based frame iterator over a byte source. Yields frames as soon as
/// their record is complete. A malformed record is reported after every
/// frame before it; nothing follows the error.
pub struct FrameStream<R> {
    source: R,
    decoder: StreamDecoder,
    ready: std::collections::VecDeque<LandmarkFrame>,
    error: Option<Error>,
    chunk: Vec<u8>,
    done: bool,
}

impl<R: Read> FrameStream<R> {
    /// Stream reading up to `chunk_size` bytes per read call.
    pub fn with_chunk_size(source: R, chunk_size: usize) -> Self {
        FrameStream {
            source,
            decoder: StreamDecoder::new(),
            ready: Default::default(),
            error: None,
            chunk: vec![0; chunk_size.max(1)],
            done: false,
        }
    }

    /// Header, available once the first line has been read.
    pub fn header(&self) -> Option<&Header> {
        self.decoder.header()
    }

    /// Reads until the header line is decoded. Returns `None` for an empty
    /// source.
    pub fn read_header(&mut self) -> Result<Option<&Header>> {
        while self.decoder.header().is_none() && !self.done {
            self.fill()?;
        }
        if self.decoder.header().is_none() {
            if let Some(e) = self.error.take() {
                return Err(e);
            }
        }
        Ok(self.decoder.header())
    }

    fn fill(&mut self) -> Result<()> {
        let n = match self.source.read(&mut self.chunk) {
            Ok(n) => n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => return Ok(()),
            Err(e) => {
                self.done = true;
                return Err(e.into());
            }
        };
        let (frames, error) = if n == 0 {
            self.done = true;
            match self.decoder.finish() {
                Ok(f) => (f.into_iter().collect(), None),
                Err(e) => (Vec::new(), Some(e)),
            }
        } else {
            self.decoder.push_partial(&self.chunk[..n])
        };
        self.ready.extend(frames);
        if error.is_some() {
            self.done = true;
            self.error = error;
        }
        Ok(())
    }
}

impl<R: Read> Iterator for FrameStream<R> {
    type Item = Result<LandmarkFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(frame) = self.ready.pop_front() {
                return Some(Ok(frame));
            }
            if let Some(e) = self.error.take() {
                return Some(Err(e));
            }
            if self.done {
                return None;
            }
            if let Err(e) = self.fill() {
                return Some(Err(e));
            }
        }
    }
}

/// Opens an incremental frame iterator over `source`.
pub fn open_stream<R: Read>(source: R) -> FrameStream<R> {
    FrameStream::with_chunk_size(source, 8192)
}
