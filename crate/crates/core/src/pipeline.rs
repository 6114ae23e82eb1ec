//! Reproducible runs: one subcommand, one config, one seed, a directory of
//! outputs and a manifest holding their SHA-256 digests.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::analysis::{self, DetectionScore};
use crate::capacity;
use crate::codec::{self, BitBlock, MoleculeSpec};
use crate::config::Config;
use crate::detector::{self, DecodeStatus, DetectedEvent};
use crate::error::{Error, Result};
use crate::io::{self, TraceFormat};
use crate::rng::Streams;
use crate::sim::{self, EventRecord};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Start-time slack when pairing detections with ground truth, in samples.
pub const MATCH_TOLERANCE_SAMPLES: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Detect,
    Decode,
    Roundtrip,
    Stats,
    Capacity,
    Ivcurve,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::Detect,
        Command::Decode,
        Command::Roundtrip,
        Command::Stats,
        Command::Capacity,
        Command::Ivcurve,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Detect => "detect",
            Command::Decode => "decode",
            Command::Roundtrip => "roundtrip",
            Command::Stats => "stats",
            Command::Capacity => "capacity",
            Command::Ivcurve => "ivcurve",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub command: Command,
    pub config: Config,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: TraceFormat,
    /// Trace for `detect`, event CSV for `decode`.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub seed: u64,
    pub command: Command,
    pub config_snapshot: String,
    /// `(file name, sha256 hex)` in write order.
    pub outputs: Vec<(String, String)>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run.seed = {}", self.seed);
        let _ = writeln!(out, "run.command = {}", self.command);
        for (name, digest) in &self.outputs {
            let _ = writeln!(out, "output.{name} = sha256:{digest}");
        }
        out.push_str(&self.config_snapshot);
        out
    }

    pub fn parse(text: &str) -> Result<RunManifest> {
        let mut seed = None;
        let mut command = None;
        let mut outputs = Vec::new();
        let mut snapshot = String::new();
        for line in text.lines() {
            let Some((k, v)) = line.split_once(" = ") else {
                continue;
            };
            if k == "run.seed" {
                seed = Some(
                    v.parse()
                        .map_err(|_| Error::Parse(format!("bad seed {v:?}")))?,
                );
            } else if k == "run.command" {
                command = Some(v.parse()?);
            } else if let Some(name) = k.strip_prefix("output.") {
                let digest = v
                    .strip_prefix("sha256:")
                    .ok_or_else(|| Error::Parse(format!("bad digest {v:?}")))?;
                outputs.push((name.to_string(), digest.to_string()));
            } else {
                snapshot.push_str(line);
                snapshot.push('\n');
            }
        }
        Ok(RunManifest {
            seed: seed.ok_or_else(|| Error::Parse("manifest lacks run.seed".into()))?,
            command: command.ok_or_else(|| Error::Parse("manifest lacks run.command".into()))?,
            config_snapshot: snapshot,
            outputs,
        })
    }

    pub fn config(&self) -> Result<Config> {
        Config::parse(&self.config_snapshot)
    }

    pub fn digest(&self, name: &str) -> Option<&str> {
        self.outputs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d.as_str())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<(String, String)>,
}

impl Outputs<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.written.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    fn trace(&mut self, stem: &str, trace: &sim::Trace, format: TraceFormat) -> Result<()> {
        let bytes = match format {
            TraceFormat::Bin => io::encode_trace(trace),
            TraceFormat::Csv => io::trace_to_csv(trace).into_bytes(),
        };
        self.write(&format!("{stem}.{}", format.extension()), &bytes)
    }
}

/// Runs one subcommand, writing its outputs and `manifest.txt` into
/// `req.out_dir`.
pub fn run_pipeline(req: &RunRequest) -> Result<RunManifest> {
    let cfg = &req.config;
    cfg.validate()?;
    fs::create_dir_all(&req.out_dir)?;
    let mut out = Outputs {
        dir: &req.out_dir,
        written: Vec::new(),
    };
    let streams = Streams::new(req.seed);
    match req.command {
        Command::Simulate => {
            let library = [cfg.sim.molecule.build()?];
            let (trace, truth) = sim::simulate_ensemble(
                &cfg.channel,
                &cfg.sim.options,
                cfg.sim.n_pores,
                cfg.sim.duration_s,
                &library,
                &cfg.sim.clog_schedule,
                &streams.child("simulate"),
            )?;
            out.trace("trace", &trace, req.format)?;
            out.write("truth.csv", io::truth_to_csv(&truth).as_bytes())?;
        }
        Command::Detect => {
            let trace = io::read_trace(required_input(req)?)?;
            let events = detector::detect(&trace, &cfg.channel, &cfg.scheme, &cfg.detector)?;
            out.write("events.csv", io::detected_to_csv(&events).as_bytes())?;
        }
        Command::Decode => {
            let text = fs::read_to_string(required_input(req)?)?;
            let mut events = io::detected_from_csv(&text, cfg.channel.sample_rate_hz)?;
            for ev in &mut events {
                detector::classify_and_decode(ev, &cfg.channel, &cfg.scheme, &cfg.detector)?;
            }
            out.write("decoded.csv", decoded_csv(&events).as_bytes())?;
        }
        Command::Roundtrip => {
            let rt = roundtrip(cfg, &streams)?;
            out.write("truth.csv", io::truth_to_csv(&rt.truth).as_bytes())?;
            out.write("events.csv", io::detected_to_csv(&rt.detected).as_bytes())?;
            out.write("score.txt", rt.score_text().as_bytes())?;
        }
        Command::Stats => {
            let library = [cfg.stats.molecule.build()?];
            let sweep = analysis::voltage_sweep(
                &cfg.channel,
                &cfg.sim.options,
                &cfg.stats.voltages_mv,
                cfg.stats.duration_s,
                &library,
                &cfg.detector,
                &streams.child("stats"),
            )?;
            out.write("open_fraction.csv", sweep.open_fraction_csv().as_bytes())?;
            out.write("event_rates.csv", sweep.event_rates_csv().as_bytes())?;
            out.write("dwell_blockage.csv", sweep.scatter_csv().as_bytes())?;
        }
        Command::Capacity => {
            let report = capacity::capacity_report(&cfg.layout, &cfg.throughput)?;
            out.write("capacity.txt", report.to_text().as_bytes())?;
            out.write("capacity.csv", report.to_csv().as_bytes())?;
        }
        Command::Ivcurve => {
            out.write("ivcurve.csv", ivcurve_csv(cfg).as_bytes())?;
        }
    }
    let manifest = RunManifest {
        seed: req.seed,
        command: req.command,
        config_snapshot: cfg.to_text(),
        outputs: out.written,
    };
    fs::write(req.out_dir.join(MANIFEST_FILE), manifest.to_text())?;
    Ok(manifest)
}

fn required_input(req: &RunRequest) -> Result<&Path> {
    req.input
        .as_deref()
        .ok_or_else(|| Error::Config(format!("`{}` needs an input file", req.command)))
}

pub const DECODED_HEADER: &str = "event_index,start_s,duration_s,entry_end,bases,bits,status";

pub fn decoded_csv(events: &[DetectedEvent]) -> String {
    let mut out = String::from(DECODED_HEADER);
    out.push('\n');
    for (i, ev) in events.iter().enumerate() {
        let entry = ev.entry_end.map_or("unknown", |e| e.as_str());
        let bases: String = ev.bases.iter().map(|b| b.as_char()).collect();
        let (bits, status) = match &ev.decode {
            DecodeStatus::Decoded(b) => (b.to_string(), "decoded".to_string()),
            DecodeStatus::Rejected(r) => (String::new(), format!("rejected:{r}")),
            DecodeStatus::Pending => (String::new(), "pending".to_string()),
        };
        let _ = writeln!(
            out,
            "{i},{},{},{entry},{bases},{bits},{status}",
            ev.start_s(),
            ev.duration_s()
        );
    }
    out
}

/// I-V table on a 10 mV grid spanning the anchors, flagging extrapolation.
pub fn ivcurve_csv(cfg: &Config) -> String {
    let curve = &cfg.channel.iv_curve;
    let anchors = curve.anchors();
    let lo = (anchors[0].0 / 10.0).floor() as i64 - 3;
    let hi = (anchors[anchors.len() - 1].0 / 10.0).ceil() as i64 + 3;
    let mut out = String::from("voltage_mv,current_pA,extrapolated\n");
    for step in lo..=hi {
        let v = step as f64 * 10.0;
        let (i, extrapolated) = curve.eval(v);
        let _ = writeln!(out, "{v},{i},{extrapolated}");
    }
    out
}

#[derive(Debug, Clone)]
pub struct RoundtripResult {
    /// Encoded blocks; `truth[i].molecule_id` indexes this.
    pub library: Vec<BitBlock>,
    /// Times are continuous across chunks.
    pub truth: Vec<EventRecord>,
    pub detected: Vec<DetectedEvent>,
    /// Matches index `truth` and `detected`.
    pub score: DetectionScore,
    pub complete_events: usize,
    pub bits_total: usize,
    pub bits_correct: usize,
    pub molecules_exact: usize,
    pub rejected: usize,
}

impl RoundtripResult {
    pub fn bit_accuracy(&self) -> f64 {
        if self.bits_total == 0 {
            0.0
        } else {
            self.bits_correct as f64 / self.bits_total as f64
        }
    }

    pub fn score_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "truth_events = {}", self.truth.len());
        let _ = writeln!(out, "complete_events = {}", self.complete_events);
        let _ = writeln!(out, "detected_events = {}", self.detected.len());
        let _ = writeln!(out, "matched_events = {}", self.score.matches.len());
        let _ = writeln!(out, "precision = {:.6}", self.score.precision);
        let _ = writeln!(out, "recall = {:.6}", self.score.recall);
        let _ = writeln!(out, "level_rms_pA = {:.6}", self.score.level_rms_pa);
        let _ = writeln!(out, "bits_total = {}", self.bits_total);
        let _ = writeln!(out, "bits_correct = {}", self.bits_correct);
        let _ = writeln!(out, "bit_accuracy = {:.6}", self.bit_accuracy());
        let _ = writeln!(out, "molecules_exact = {}", self.molecules_exact);
        let _ = writeln!(out, "rejected = {}", self.rejected);
        out
    }
}

/// Encode, simulate, detect, decode and score, chunk by chunk, until at least
/// `roundtrip.events` ground-truth events exist.
///
/// Bit accuracy counts every bit of every complete truth event; a missed,
/// unmatched or rejected event scores zero for all its bits.
pub fn roundtrip(cfg: &Config, streams: &Streams) -> Result<RoundtripResult> {
    let rt = &cfg.roundtrip;
    let mut lib_rng = streams.stream("roundtrip/library");
    let library: Vec<BitBlock> = (0..rt.library_size)
        .map(|_| {
            BitBlock::new(
                (0..rt.bits_per_molecule)
                    .map(|_| lib_rng.random())
                    .collect(),
            )
        })
        .collect();
    let molecules: Vec<MoleculeSpec> = library
        .iter()
        .map(|b| codec::encode_bits(b, &cfg.scheme))
        .collect();
    if molecules.iter().any(MoleculeSpec::is_empty) {
        return Err(Error::Config(
            "roundtrip.bits_per_molecule must be at least 1".into(),
        ));
    }

    let fs_hz = cfg.channel.sample_rate_hz;
    let mut truth = Vec::new();
    let mut detected = Vec::new();
    let mut chunk = 0usize;
    let tol = MATCH_TOLERANCE_SAMPLES / fs_hz;
    while truth.len() < rt.events {
        let (trace, chunk_truth) = sim::simulate_trace(
            &cfg.channel,
            &cfg.sim.options,
            rt.chunk_s,
            &molecules,
            &streams.child(&format!("chunk{chunk}")),
        )?;
        let chunk_detected = detector::detect(&trace, &cfg.channel, &cfg.scheme, &cfg.detector)?;
        let offset_s = chunk as f64 * rt.chunk_s;
        let offset_samples = trace.len() * chunk;
        truth.extend(chunk_truth.into_iter().map(|mut e| {
            e.start_s += offset_s;
            e
        }));
        detected.extend(chunk_detected.into_iter().map(|mut d| {
            d.start += offset_samples;
            d.end += offset_samples;
            d
        }));
        chunk += 1;
        if chunk > 100_000 {
            return Err(Error::Domain("roundtrip produced too few events".into()));
        }
    }

    let score = analysis::score_detection(&truth, &detected, tol);
    let mut by_truth = vec![None; truth.len()];
    for &(t, d) in &score.matches {
        by_truth[t] = Some(d);
    }
    let (mut complete, mut bits_total, mut bits_correct, mut exact) = (0, 0, 0, 0);
    for (ti, t) in truth.iter().enumerate() {
        if !t.kind.is_complete() {
            continue;
        }
        complete += 1;
        let want = &library[t.molecule_id as usize];
        bits_total += want.len();
        let Some(got) = by_truth[ti].and_then(|d| detected[d].bits()) else {
            continue;
        };
        if got.len() == want.len() {
            let ok = got
                .bits()
                .iter()
                .zip(want.bits())
                .filter(|(a, b)| a == b)
                .count();
            bits_correct += ok;
            exact += usize::from(ok == want.len());
        }
    }
    let rejected = detected
        .iter()
        .filter(|d| matches!(d.decode, DecodeStatus::Rejected(_)))
        .count();
    Ok(RoundtripResult {
        library,
        truth,
        detected,
        score,
        complete_events: complete,
        bits_total,
        bits_correct,
        molecules_exact: exact,
        rejected,
    })
}
