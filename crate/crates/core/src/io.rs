//! Trace files and event tables.
//!
//! Binary trace layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "NPTR"
//! 4       4     u32 version (1)
//! 8       8     f64 sample rate, Hz
//! 16      8     u64 sample count
//! 24      4·n   f32 samples, pA
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::channel::EntryEnd;
use crate::codec::Base;
use crate::detector::{DecodeStatus, DetectedEvent, Level, LevelClass};
use crate::error::{Error, Result};
use crate::sim::{EventKind, EventRecord, Segment, Trace};

pub const TRACE_MAGIC: &[u8; 4] = b"NPTR";
pub const TRACE_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Bin,
    Csv,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Bin => "bin",
            TraceFormat::Csv => "csv",
        }
    }

    pub fn from_path(path: &Path) -> TraceFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => TraceFormat::Csv,
            _ => TraceFormat::Bin,
        }
    }
}

impl std::str::FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" => Ok(TraceFormat::Bin),
            "csv" => Ok(TraceFormat::Csv),
            other => Err(Error::Parse(format!("unknown trace format {other:?}"))),
        }
    }
}

pub fn encode_trace(trace: &Trace) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * trace.len());
    out.extend_from_slice(TRACE_MAGIC);
    out.extend_from_slice(&TRACE_VERSION.to_le_bytes());
    out.extend_from_slice(&trace.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(trace.len() as u64).to_le_bytes());
    for x in &trace.samples {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_trace(bytes: &[u8]) -> Result<Trace> {
    let truncated = |what: &str| Error::Format {
        offset: bytes.len() as u64,
        reason: format!("file ends inside the {what}"),
    };
    if bytes.len() < 4 {
        return Err(truncated("magic"));
    }
    if &bytes[..4] != TRACE_MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: format!("bad magic {:?}", &bytes[..4]),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated("header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != TRACE_VERSION {
        return Err(Error::Format {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let sample_rate_hz = f64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::Format {
            offset: 8,
            reason: format!("invalid sample rate {sample_rate_hz}"),
        });
    }
    let count = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let payload = &bytes[HEADER_LEN..];
    let expected = count.checked_mul(4).ok_or_else(|| Error::Format {
        offset: 16,
        reason: format!("sample count {count} overflows"),
    })?;
    if (payload.len() as u64) < expected {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            reason: format!("payload holds {} of {count} samples", payload.len() / 4),
        });
    }
    if (payload.len() as u64) > expected {
        return Err(Error::Format {
            offset: HEADER_LEN as u64 + expected,
            reason: "trailing bytes after payload".into(),
        });
    }
    let samples = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(Trace::new(sample_rate_hz, samples))
}

/// CSV trace with a `# sample_rate_hz=` comment line ahead of the header.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(24 * trace.len() + 64);
    out.push_str(&format!("# sample_rate_hz={}\n", trace.sample_rate_hz));
    out.push_str("time_s,current_pA\n");
    for (i, x) in trace.samples.iter().enumerate() {
        let t = trace.start_time_s + i as f64 / trace.sample_rate_hz;
        out.push_str(&format!("{t},{x}\n"));
    }
    out
}

pub fn trace_from_csv(text: &str) -> Result<Trace> {
    let mut sample_rate = None;
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("sample_rate_hz=") {
                sample_rate = Some(parse_f64(v, lineno)?);
            }
            continue;
        }
        if line.starts_with("time_s") {
            continue;
        }
        let (t, x) = line.split_once(',').ok_or_else(|| {
            Error::Parse(format!("line {}: expected time_s,current_pA", lineno + 1))
        })?;
        times.push(parse_f64(t, lineno)?);
        samples.push(
            x.trim()
                .parse::<f32>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
        );
    }
    let sample_rate_hz = match sample_rate {
        Some(fs) => fs,
        None if times.len() >= 2 => 1.0 / (times[1] - times[0]),
        None => return Err(Error::Parse("CSV trace without a sample rate".into())),
    };
    let mut trace = Trace::new(sample_rate_hz, samples);
    trace.start_time_s = times.first().copied().unwrap_or(0.0);
    Ok(trace)
}

fn parse_f64(s: &str, lineno: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
}

pub fn write_trace(path: &Path, trace: &Trace, format: TraceFormat) -> Result<()> {
    let bytes = match format {
        TraceFormat::Bin => encode_trace(trace),
        TraceFormat::Csv => trace_to_csv(trace).into_bytes(),
    };
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    match TraceFormat::from_path(path) {
        TraceFormat::Bin => decode_trace(&fs::read(path)?),
        TraceFormat::Csv => trace_from_csv(&fs::read_to_string(path)?),
    }
}

pub const TRUTH_HEADER: &str =
    "molecule_id,start_s,duration_s,kind,entry_end,segment_base,segment_level_pA,segment_duration_s";

/// One row per segment.
pub fn truth_to_csv(events: &[EventRecord]) -> String {
    let mut out = String::from(TRUTH_HEADER);
    out.push('\n');
    for ev in events {
        for s in &ev.segments {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                ev.molecule_id,
                ev.start_s,
                ev.duration_s,
                ev.kind,
                ev.entry_end,
                s.base,
                s.level_pa,
                s.duration_s
            ));
        }
    }
    out
}

/// Groups consecutive rows sharing `(molecule_id, start_s)` into events.
pub fn truth_from_csv(text: &str) -> Result<Vec<EventRecord>> {
    let mut events: Vec<EventRecord> = Vec::new();
    for (lineno, line) in data_lines(text, TRUTH_HEADER)? {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::Parse(format!(
                "line {lineno}: expected 8 columns, got {}",
                f.len()
            )));
        }
        let molecule_id: u64 = parse(f[0], lineno)?;
        let start_s: f64 = parse(f[1], lineno)?;
        let seg = Segment {
            base: f[5].parse()?,
            level_pa: parse(f[6], lineno)?,
            duration_s: parse(f[7], lineno)?,
        };
        match events.last_mut() {
            Some(ev) if ev.molecule_id == molecule_id && ev.start_s == start_s => {
                ev.segments.push(seg)
            }
            _ => events.push(EventRecord {
                molecule_id,
                pore: 0,
                start_s,
                duration_s: parse(f[2], lineno)?,
                kind: f[3].parse::<EventKind>()?,
                entry_end: f[4].parse::<EntryEnd>()?,
                segments: vec![seg],
            }),
        }
    }
    Ok(events)
}

pub const DETECTED_HEADER: &str = "event_index,start_s,duration_s,classification,entry_end,segment_base,segment_level_pA,segment_duration_s,normalized_level,baseline_pA,start_sample,end_sample,bits,status";

/// One row per fitted level; decode columns repeat on every row of an event.
pub fn detected_to_csv(events: &[DetectedEvent]) -> String {
    let mut out = String::from(DETECTED_HEADER);
    out.push('\n');
    for (i, ev) in events.iter().enumerate() {
        let entry = ev.entry_end.map_or("unknown", EntryEnd::as_str);
        let (bits, status) = match &ev.decode {
            DecodeStatus::Decoded(b) => (b.to_string(), "decoded".to_string()),
            DecodeStatus::Rejected(r) => (String::new(), format!("rejected:{r}")),
            DecodeStatus::Pending => (String::new(), "pending".to_string()),
        };
        for (j, level) in ev.levels.iter().enumerate() {
            let base = ev.bases.get(j).map_or("N".to_string(), Base::to_string);
            out.push_str(&format!(
                "{i},{},{},{},{entry},{base},{},{},{},{},{},{},{bits},{status}\n",
                ev.start_s(),
                ev.duration_s(),
                ev.classification.as_str(),
                level.mean_pa,
                level.duration_s,
                ev.normalized[j],
                ev.baseline_pa,
                ev.start,
                ev.end,
            ));
        }
    }
    out
}

/// Rebuilds detected events with their levels; orientation, bases and decode
/// status are left for the decoder to fill in.
pub fn detected_from_csv(text: &str, sample_rate_hz: f64) -> Result<Vec<DetectedEvent>> {
    let mut events: Vec<(u64, DetectedEvent)> = Vec::new();
    for (lineno, line) in data_lines(text, DETECTED_HEADER)? {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(Error::Parse(format!(
                "line {lineno}: expected 14 columns, got {}",
                f.len()
            )));
        }
        let index: u64 = parse(f[0], lineno)?;
        let level = Level {
            mean_pa: parse(f[6], lineno)?,
            duration_s: parse(f[7], lineno)?,
        };
        let normalized: f64 = parse(f[8], lineno)?;
        match events.last_mut() {
            Some((i, ev)) if *i == index => {
                ev.levels.push(level);
                ev.normalized.push(normalized);
            }
            _ => {
                let fit = crate::detector::LevelFit {
                    means: Vec::new(),
                    change_point: None,
                    residual_sse: 0.0,
                    single_sse: 0.0,
                    best_split: None,
                    confident: true,
                };
                events.push((
                    index,
                    DetectedEvent {
                        start: parse(f[10], lineno)?,
                        end: parse(f[11], lineno)?,
                        sample_rate_hz,
                        baseline_pa: parse(f[9], lineno)?,
                        levels: vec![level],
                        normalized: vec![normalized],
                        classification: LevelClass::SingleLevel,
                        fit,
                        entry_end: None,
                        bases: Vec::new(),
                        decode: DecodeStatus::Pending,
                    },
                ))
            }
        }
    }
    Ok(events
        .into_iter()
        .map(|(_, mut ev)| {
            ev.fit.means = ev.levels.iter().map(|l| l.mean_pa).collect();
            if ev.levels.len() >= 2 {
                ev.classification = LevelClass::Bilevel;
            }
            ev
        })
        .collect())
}

fn data_lines<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, &'a str)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(Error::Parse(format!("expected header {header:?}"))),
    }
    Ok(lines.map(|(i, l)| (i + 1, l.trim())).collect())
}

fn parse<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("line {lineno}: {s:?}: {e}")))
}
