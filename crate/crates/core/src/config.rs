//! Flat `section.key = value` configuration.
//!
//! Every tunable has a key; unknown keys are an error so a typo never falls
//! back to a default silently. [`Config::to_text`] writes every key, and its
//! output parses back to an equal configuration.

use std::fmt::Write as _;

use crate::capacity::{ChipLayout, ThroughputInputs};
use crate::channel::{BlockadeEntry, ChannelParams, EntryEnd, IvCurve};
use crate::codec::{Base, MoleculeSpec, Run, RunEncoding};
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::sim::{ClogInterval, EventKind, SimOptions};

/// Molecule fed to `simulate` and `stats`.
#[derive(Debug, Clone, PartialEq)]
pub enum MoleculeChoice {
    A50C100,
    /// `5'(AC)n 3'`.
    AcRepeat(u32),
    Sequence(String),
}

impl MoleculeChoice {
    pub fn build(&self) -> Result<MoleculeSpec> {
        match self {
            MoleculeChoice::A50C100 => Ok(MoleculeSpec::a50_c100()),
            MoleculeChoice::AcRepeat(n) => Ok(MoleculeSpec::ac_repeat(*n)),
            MoleculeChoice::Sequence(s) => MoleculeSpec::from_sequence(s),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("a50c100") {
            return Ok(MoleculeChoice::A50C100);
        }
        if let Some(n) = s.strip_prefix("ac").or_else(|| s.strip_prefix("AC")) {
            if let Ok(n) = n.parse() {
                return Ok(MoleculeChoice::AcRepeat(n));
            }
        }
        MoleculeSpec::from_sequence(s)?;
        Ok(MoleculeChoice::Sequence(s.to_string()))
    }
}

impl std::fmt::Display for MoleculeChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MoleculeChoice::A50C100 => f.write_str("a50c100"),
            MoleculeChoice::AcRepeat(n) => write!(f, "ac{n}"),
            MoleculeChoice::Sequence(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub duration_s: f64,
    pub n_pores: usize,
    pub molecule: MoleculeChoice,
    pub options: SimOptions,
    pub clog_schedule: Vec<ClogInterval>,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            duration_s: 1.0,
            n_pores: 1,
            molecule: MoleculeChoice::A50C100,
            options: SimOptions::default(),
            clog_schedule: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripSettings {
    pub events: usize,
    pub bits_per_molecule: usize,
    /// Random blocks in the molecule library.
    pub library_size: usize,
    /// Trace length simulated per chunk, s.
    pub chunk_s: f64,
}

impl Default for RoundtripSettings {
    fn default() -> Self {
        RoundtripSettings {
            events: 1000,
            bits_per_molecule: 2,
            library_size: 64,
            chunk_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsSettings {
    pub voltages_mv: Vec<f64>,
    pub duration_s: f64,
    pub molecule: MoleculeChoice,
}

impl Default for StatsSettings {
    fn default() -> Self {
        StatsSettings {
            voltages_mv: vec![90.0, 120.0, 150.0],
            duration_s: 20.0,
            molecule: MoleculeChoice::AcRepeat(60),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub channel: ChannelParams,
    pub detector: DetectorConfig,
    pub scheme: RunEncoding,
    pub sim: SimSettings,
    pub roundtrip: RoundtripSettings,
    pub stats: StatsSettings,
    pub layout: ChipLayout,
    pub throughput: ThroughputInputs,
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got {v:?}")))
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a count, got {v:?}")))
}

fn parse_run(key: &str, v: &str) -> Result<Run> {
    let (b, n) = v
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("{key}: expected BASE:COUNT, got {v:?}")))?;
    let n: u32 = n
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: bad run length {n:?}")))?;
    Ok(Run::new(b.parse()?, n))
}

fn parse_pairs(key: &str, v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("{key}: expected MV:PA pairs, got {p:?}")))?;
            Ok((num(key, a)?, num(key, b)?))
        })
        .collect()
}

fn parse_optional<T: std::str::FromStr<Err = Error>>(v: &str) -> Result<Option<T>> {
    match v.trim() {
        "" | "none" => Ok(None),
        s => s.parse().map(Some),
    }
}

fn parse_schedule(key: &str, v: &str) -> Result<Vec<ClogInterval>> {
    v.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let bad = || Error::Config(format!("{key}: expected PORE@START-END, got {p:?}"));
            let (pore, span) = p.split_once('@').ok_or_else(bad)?;
            let (a, b) = span.split_once('-').ok_or_else(bad)?;
            Ok(ClogInterval {
                pore: count(key, pore)?,
                start_s: num(key, a)?,
                end_s: num(key, b)?,
            })
        })
        .collect()
}

fn blockade_key(rest: &str) -> Option<(Base, EntryEnd, bool)> {
    let mut parts = rest.split('.');
    let base = Base::from_char(parts.next()?.chars().next()?)?;
    let entry = parts.next()?.parse().ok()?;
    let is_mean = match parts.next()? {
        "mean" => true,
        "sd" => false,
        _ => return None,
    };
    parts.next().is_none().then_some((base, entry, is_mean))
}

impl Config {
    /// Parses config text over the defaults.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut unknown = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `section.key = value`",
                    lineno + 1
                ))
            })?;
            match self.set(key.trim(), value.trim()) {
                Err(Error::UnknownKeys(mut keys)) => unknown.append(&mut keys),
                other => other?,
            }
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownKeys(unknown));
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.detector.validate()?;
        RunEncoding::new(self.scheme.zero(), self.scheme.one())?;
        if self.sim.n_pores == 0 {
            return Err(Error::Config("sim.n_pores must be at least 1".into()));
        }
        if !(self.sim.duration_s > 0.0) || !(self.stats.duration_s > 0.0) {
            return Err(Error::Config("durations must be positive".into()));
        }
        if self.roundtrip.library_size == 0 || !(self.roundtrip.chunk_s > 0.0) {
            return Err(Error::Config(
                "roundtrip library and chunk must be non-empty".into(),
            ));
        }
        self.sim.molecule.build()?;
        self.stats.molecule.build()?;
        self.layout.validate()
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let c = &mut self.channel;
        match key {
            "channel.voltage_mv" => c.voltage_mv = num(key, v)?,
            "channel.kcl_molarity" => c.kcl_molarity = num(key, v)?,
            "channel.iv_anchors" => c.iv_curve = IvCurve::new(parse_pairs(key, v)?)?,
            "channel.blockade_slope_per_mv" => c.blockade_slope_per_mv = num(key, v)?,
            "channel.blockade_ref_mv" => c.blockade_ref_mv = num(key, v)?,
            "channel.noise_sigma_open" => c.noise_sigma_open = num(key, v)?,
            "channel.noise_clog_multiplier" => c.noise_clog_multiplier = num(key, v)?,
            "channel.clog_residual_fraction" => c.clog_residual_fraction = num(key, v)?,
            "channel.rate_ref" => c.rate_ref = num(key, v)?,
            "channel.rate_ref_mv" => c.rate_ref_mv = num(key, v)?,
            "channel.rate_efold_mv" => c.rate_efold_mv = num(key, v)?,
            "channel.dwell_ref_s" => c.dwell_ref_s = num(key, v)?,
            "channel.dwell_ref_bases" => c.dwell_ref_bases = num(key, v)?,
            "channel.dwell_ref_mv" => c.dwell_ref_mv = num(key, v)?,
            "channel.dwell_lognormal_sigma" => c.dwell_lognormal_sigma = num(key, v)?,
            "channel.p_orientation_3prime_first" => c.p_orientation_3prime_first = num(key, v)?,
            "channel.p_bilevel" => c.p_bilevel = num(key, v)?,
            "channel.p_complete" => c.p_complete = num(key, v)?,
            "channel.v_bilevel_min_mv" => c.v_bilevel_min_mv = num(key, v)?,
            "channel.incomplete_fraction_max" => c.incomplete_fraction_max = num(key, v)?,
            "channel.capture_dead_time_s" => c.capture_dead_time_s = num(key, v)?,
            "channel.gating_kcl_threshold" => c.gating.kcl_threshold = num(key, v)?,
            "channel.gating_mean_open_s" => c.gating.mean_open_s = num(key, v)?,
            "channel.gating_mean_closed_s" => c.gating.mean_closed_s = num(key, v)?,
            "channel.cooperativity_gamma" => c.cooperativity_gamma = num(key, v)?,
            "channel.sample_rate_hz" => c.sample_rate_hz = num(key, v)?,
            "channel.amplifier_bandwidth_hz" => c.amplifier_bandwidth_hz = num(key, v)?,
            "detector.event_threshold_fraction" => {
                self.detector.event_threshold_fraction = num(key, v)?
            }
            "detector.min_event_samples" => self.detector.min_event_samples = count(key, v)?,
            "detector.bic_penalty_multiplier" => {
                self.detector.bic_penalty_multiplier = num(key, v)?
            }
            "detector.level_match_tolerance" => self.detector.level_match_tolerance = num(key, v)?,
            "codec.zero" => self.scheme = RunEncoding::new(parse_run(key, v)?, self.scheme.one())?,
            "codec.one" => self.scheme = RunEncoding::new(self.scheme.zero(), parse_run(key, v)?)?,
            "sim.duration_s" => self.sim.duration_s = num(key, v)?,
            "sim.n_pores" => self.sim.n_pores = count(key, v)?,
            "sim.molecule" => self.sim.molecule = MoleculeChoice::parse(v)?,
            "sim.force_kind" => self.sim.options.force_kind = parse_optional::<EventKind>(v)?,
            "sim.force_entry" => self.sim.options.force_entry = parse_optional::<EntryEnd>(v)?,
            "sim.clog_schedule" => self.sim.clog_schedule = parse_schedule(key, v)?,
            "roundtrip.events" => self.roundtrip.events = count(key, v)?,
            "roundtrip.bits_per_molecule" => self.roundtrip.bits_per_molecule = count(key, v)?,
            "roundtrip.library_size" => self.roundtrip.library_size = count(key, v)?,
            "roundtrip.chunk_s" => self.roundtrip.chunk_s = num(key, v)?,
            "stats.voltages_mv" => {
                self.stats.voltages_mv = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<_>>()?
            }
            "stats.duration_s" => self.stats.duration_s = num(key, v)?,
            "stats.molecule" => self.stats.molecule = MoleculeChoice::parse(v)?,
            "capacity.n_parking_spots" => self.layout.n_parking_spots = num(key, v)?,
            "capacity.spot_area_total" => self.layout.spot_area_total = num(key, v)?,
            "capacity.n_stations" => self.layout.n_stations = num(key, v)?,
            "capacity.station_area_total" => self.layout.station_area_total = num(key, v)?,
            "capacity.plumbing_area" => self.layout.plumbing_area = num(key, v)?,
            "capacity.chip_area" => self.layout.chip_area = num(key, v)?,
            "capacity.bytes_per_block" => self.layout.bytes_per_block = num(key, v)?,
            "capacity.layer_thickness_um" => self.layout.layer_thickness_um = num(key, v)?,
            "capacity.bits_per_molecule" => self.throughput.bits_per_molecule = num(key, v)?,
            "capacity.molecule_dwell_s" => self.throughput.molecule_dwell_s = num(key, v)?,
            "capacity.bases_per_s" => self.throughput.bases_per_s = num(key, v)?,
            "capacity.bits_per_base" => self.throughput.bits_per_base = num(key, v)?,
            "capacity.transport_distance_m" => self.throughput.transport_distance_m = num(key, v)?,
            "capacity.transport_voltage_v" => self.throughput.transport_voltage_v = num(key, v)?,
            "capacity.mobility" => self.throughput.mobility = num(key, v)?,
            "capacity.dvd_total_bytes" => self.throughput.dvd_total_bytes = num(key, v)?,
            "capacity.dvd_bytes_per_disc" => self.throughput.dvd_bytes_per_disc = num(key, v)?,
            "capacity.dvd_thickness_m" => self.throughput.dvd_thickness_m = num(key, v)?,
            other => {
                let Some((base, entry, is_mean)) = other
                    .strip_prefix("channel.blockade.")
                    .and_then(blockade_key)
                else {
                    return Err(Error::UnknownKeys(vec![other.to_string()]));
                };
                let mut e = c
                    .blockade
                    .get(base, entry)
                    .copied()
                    .unwrap_or(BlockadeEntry {
                        base,
                        entry,
                        mean: 0.5,
                        sd: 0.0,
                    });
                if is_mean {
                    e.mean = num(key, v)?;
                } else {
                    e.sd = num(key, v)?;
                }
                c.blockade.upsert(e);
            }
        }
        Ok(())
    }

    /// Every key with its current value, in a stable order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let c = &self.channel;
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        put("channel.voltage_mv", c.voltage_mv.to_string());
        put("channel.kcl_molarity", c.kcl_molarity.to_string());
        put(
            "channel.iv_anchors",
            c.iv_curve
                .anchors()
                .iter()
                .map(|(v, i)| format!("{v}:{i}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        for e in c.blockade.entries() {
            put(
                &format!("channel.blockade.{}.{}.mean", e.base, e.entry),
                e.mean.to_string(),
            );
            put(
                &format!("channel.blockade.{}.{}.sd", e.base, e.entry),
                e.sd.to_string(),
            );
        }
        put(
            "channel.blockade_slope_per_mv",
            c.blockade_slope_per_mv.to_string(),
        );
        put("channel.blockade_ref_mv", c.blockade_ref_mv.to_string());
        put("channel.noise_sigma_open", c.noise_sigma_open.to_string());
        put(
            "channel.noise_clog_multiplier",
            c.noise_clog_multiplier.to_string(),
        );
        put(
            "channel.clog_residual_fraction",
            c.clog_residual_fraction.to_string(),
        );
        put("channel.rate_ref", c.rate_ref.to_string());
        put("channel.rate_ref_mv", c.rate_ref_mv.to_string());
        put("channel.rate_efold_mv", c.rate_efold_mv.to_string());
        put("channel.dwell_ref_s", c.dwell_ref_s.to_string());
        put("channel.dwell_ref_bases", c.dwell_ref_bases.to_string());
        put("channel.dwell_ref_mv", c.dwell_ref_mv.to_string());
        put(
            "channel.dwell_lognormal_sigma",
            c.dwell_lognormal_sigma.to_string(),
        );
        put(
            "channel.p_orientation_3prime_first",
            c.p_orientation_3prime_first.to_string(),
        );
        put("channel.p_bilevel", c.p_bilevel.to_string());
        put("channel.p_complete", c.p_complete.to_string());
        put("channel.v_bilevel_min_mv", c.v_bilevel_min_mv.to_string());
        put(
            "channel.incomplete_fraction_max",
            c.incomplete_fraction_max.to_string(),
        );
        put(
            "channel.capture_dead_time_s",
            c.capture_dead_time_s.to_string(),
        );
        put(
            "channel.gating_kcl_threshold",
            c.gating.kcl_threshold.to_string(),
        );
        put(
            "channel.gating_mean_open_s",
            c.gating.mean_open_s.to_string(),
        );
        put(
            "channel.gating_mean_closed_s",
            c.gating.mean_closed_s.to_string(),
        );
        put(
            "channel.cooperativity_gamma",
            c.cooperativity_gamma.to_string(),
        );
        put("channel.sample_rate_hz", c.sample_rate_hz.to_string());
        put(
            "channel.amplifier_bandwidth_hz",
            c.amplifier_bandwidth_hz.to_string(),
        );

        let d = &self.detector;
        put(
            "detector.event_threshold_fraction",
            d.event_threshold_fraction.to_string(),
        );
        put(
            "detector.min_event_samples",
            d.min_event_samples.to_string(),
        );
        put(
            "detector.bic_penalty_multiplier",
            d.bic_penalty_multiplier.to_string(),
        );
        put(
            "detector.level_match_tolerance",
            d.level_match_tolerance.to_string(),
        );

        let run = |r: Run| format!("{}:{}", r.base, r.count);
        put("codec.zero", run(self.scheme.zero()));
        put("codec.one", run(self.scheme.one()));

        let s = &self.sim;
        put("sim.duration_s", s.duration_s.to_string());
        put("sim.n_pores", s.n_pores.to_string());
        put("sim.molecule", s.molecule.to_string());
        put(
            "sim.force_kind",
            s.options
                .force_kind
                .map_or("none".into(), |k| k.to_string()),
        );
        put(
            "sim.force_entry",
            s.options
                .force_entry
                .map_or("none".into(), |e| e.to_string()),
        );
        put(
            "sim.clog_schedule",
            s.clog_schedule
                .iter()
                .map(|c| format!("{}@{}-{}", c.pore, c.start_s, c.end_s))
                .collect::<Vec<_>>()
                .join(";"),
        );

        let r = &self.roundtrip;
        put("roundtrip.events", r.events.to_string());
        put(
            "roundtrip.bits_per_molecule",
            r.bits_per_molecule.to_string(),
        );
        put("roundtrip.library_size", r.library_size.to_string());
        put("roundtrip.chunk_s", r.chunk_s.to_string());

        put(
            "stats.voltages_mv",
            self.stats
                .voltages_mv
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        put("stats.duration_s", self.stats.duration_s.to_string());
        put("stats.molecule", self.stats.molecule.to_string());

        let l = &self.layout;
        put("capacity.n_parking_spots", l.n_parking_spots.to_string());
        put("capacity.spot_area_total", l.spot_area_total.to_string());
        put("capacity.n_stations", l.n_stations.to_string());
        put(
            "capacity.station_area_total",
            l.station_area_total.to_string(),
        );
        put("capacity.plumbing_area", l.plumbing_area.to_string());
        put("capacity.chip_area", l.chip_area.to_string());
        put("capacity.bytes_per_block", l.bytes_per_block.to_string());
        put(
            "capacity.layer_thickness_um",
            l.layer_thickness_um.to_string(),
        );
        let t = &self.throughput;
        put(
            "capacity.bits_per_molecule",
            t.bits_per_molecule.to_string(),
        );
        put("capacity.molecule_dwell_s", t.molecule_dwell_s.to_string());
        put("capacity.bases_per_s", t.bases_per_s.to_string());
        put("capacity.bits_per_base", t.bits_per_base.to_string());
        put(
            "capacity.transport_distance_m",
            t.transport_distance_m.to_string(),
        );
        put(
            "capacity.transport_voltage_v",
            t.transport_voltage_v.to_string(),
        );
        put("capacity.mobility", t.mobility.to_string());
        put("capacity.dvd_total_bytes", t.dvd_total_bytes.to_string());
        put(
            "capacity.dvd_bytes_per_disc",
            t.dvd_bytes_per_disc.to_string(),
        );
        put("capacity.dvd_thickness_m", t.dvd_thickness_m.to_string());
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
