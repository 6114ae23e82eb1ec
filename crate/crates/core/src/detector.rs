//! Event detection, level segmentation and decoding from a raw trace.
//!
//! Nothing here sees ground truth. The detector estimates the open-pore
//! baseline, thresholds the trace into blockade intervals, fits one or two
//! levels per interval by exhaustive change-point search with BIC model
//! selection, and maps normalized levels back onto the blockade table to infer
//! orientation, bases and finally bits.

use std::fmt;

use crate::channel::{ChannelParams, EntryEnd};
use crate::codec::{decode_runs, Base, BitBlock, MoleculeSpec, Run, RunEncoding};
use crate::error::{Error, Result};
use crate::sim::Trace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Samples below this fraction of the baseline belong to an event.
    pub event_threshold_fraction: f64,
    pub min_event_samples: usize,
    pub bic_penalty_multiplier: f64,
    /// Largest normalized distance between a level and its table mean.
    pub level_match_tolerance: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            event_threshold_fraction: 0.65,
            min_event_samples: 5,
            bic_penalty_multiplier: 1.0,
            level_match_tolerance: 0.08,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.event_threshold_fraction > 0.0 && self.event_threshold_fraction < 1.0) {
            return Err(Error::Config(format!(
                "event threshold fraction must lie in (0, 1), got {}",
                self.event_threshold_fraction
            )));
        }
        if self.min_event_samples < 2 {
            return Err(Error::Config("min_event_samples must be at least 2".into()));
        }
        if !(self.bic_penalty_multiplier >= 0.0) {
            return Err(Error::Config(
                "BIC penalty multiplier must be non-negative".into(),
            ));
        }
        if !(self.level_match_tolerance > 0.0) {
            return Err(Error::Config(
                "level match tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

const HISTOGRAM_BINS: usize = 256;

/// Open-pore current: the histogram mode of samples above half the maximum,
/// refined by a windowed mean around the mode.
pub fn estimate_baseline(trace: &Trace) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::Domain(
            "cannot estimate the baseline of an empty trace".into(),
        ));
    }
    let max = trace
        .samples
        .iter()
        .copied()
        .fold(f32::NEG_INFINITY, f32::max);
    if !(max > 0.0) {
        return Err(Error::Domain(
            "trace carries no positive open-pore current".into(),
        ));
    }
    let cutoff = 0.5 * max;
    let above: Vec<f64> = trace
        .samples
        .iter()
        .filter(|&&x| x >= cutoff)
        .map(|&x| f64::from(x))
        .collect();
    let lo = above.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f64::from(max);
    if hi == lo {
        return Ok(hi);
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let bin = |x: f64| (((x - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
    let mut counts = [0usize; HISTOGRAM_BINS];
    let mut sums = [0f64; HISTOGRAM_BINS];
    for &x in &above {
        let b = bin(x);
        counts[b] += 1;
        sums[b] += x;
    }
    let mode_bin = (0..HISTOGRAM_BINS).max_by_key(|&b| counts[b]).unwrap_or(0);
    let mut center = sums[mode_bin] / counts[mode_bin] as f64;

    let mut dev: Vec<f64> = above.iter().map(|x| (x - center).abs()).collect();
    let mid = dev.len() / 2;
    let mad = *dev.select_nth_unstable_by(mid, f64::total_cmp).1;
    let half_window = 2.0 * 1.4826 * mad;
    if half_window <= 0.0 {
        return Ok(center);
    }
    for _ in 0..50 {
        let (sum, n) = above
            .iter()
            .filter(|x| (*x - center).abs() <= half_window)
            .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        if n == 0 {
            break;
        }
        let next = sum / n as f64;
        let moved = (next - center).abs();
        center = next;
        if moved < 1e-6 {
            break;
        }
    }
    Ok(center)
}

/// Half-open sample range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Maximal below-threshold runs; runs separated by fewer than
/// `min_event_samples` samples are merged, and short runs are dropped.
pub fn detect_events(trace: &Trace, baseline: f64, cfg: &DetectorConfig) -> Vec<Interval> {
    if !(baseline > 0.0) {
        return Vec::new();
    }
    let threshold = cfg.event_threshold_fraction * baseline;
    let mut runs: Vec<Interval> = Vec::new();
    let mut open_run: Option<usize> = None;
    for (i, &x) in trace.samples.iter().enumerate() {
        let below = f64::from(x) < threshold;
        match (below, open_run) {
            (true, None) => open_run = Some(i),
            (false, Some(s)) => {
                runs.push(Interval { start: s, end: i });
                open_run = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open_run {
        runs.push(Interval {
            start: s,
            end: trace.samples.len(),
        });
    }

    let mut merged: Vec<Interval> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(last) if run.start - last.end < cfg.min_event_samples => last.end = run.end,
            _ => merged.push(run),
        }
    }
    merged.retain(|iv| iv.len() >= cfg.min_event_samples);
    merged
}

/// Best single change point of a two-level fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelFit {
    /// First sample of the second level.
    pub change_point: usize,
    pub means: (f64, f64),
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelFit {
    /// One mean for a single-level model, two when the two-level model wins.
    pub means: Vec<f64>,
    pub change_point: Option<usize>,
    pub residual_sse: f64,
    pub single_sse: f64,
    /// Best split regardless of whether model selection accepted it.
    pub best_split: Option<TwoLevelFit>,
    /// False when the window was too short to try a split.
    pub confident: bool,
}

impl LevelFit {
    pub fn n_levels(&self) -> usize {
        self.means.len()
    }
}

fn bic(n: usize, sse: f64, params: f64, penalty: f64) -> f64 {
    let n_f = n as f64;
    n_f * (sse / n_f).max(1e-12).ln() + penalty * params * n_f.ln()
}

/// Exhaustive search for the split minimising total within-segment SSE, with
/// each side holding at least `min_segment` samples.
pub fn best_split(samples: &[f32], min_segment: usize) -> Option<TwoLevelFit> {
    let n = samples.len();
    let min_segment = min_segment.max(1);
    if n < 2 * min_segment {
        return None;
    }
    let mut sum = Vec::with_capacity(n + 1);
    let mut sq = Vec::with_capacity(n + 1);
    sum.push(0.0);
    sq.push(0.0);
    for &x in samples {
        let x = f64::from(x);
        sum.push(sum.last().unwrap() + x);
        sq.push(sq.last().unwrap() + x * x);
    }
    // Shift-free SSE loses precision on long plateaus, so the winner is
    // recomputed exactly below.
    let sse = |a: usize, b: usize| {
        let m = (b - a) as f64;
        let s = sum[b] - sum[a];
        (sq[b] - sq[a] - s * s / m).max(0.0)
    };
    let k = (min_segment..=n - min_segment)
        .min_by(|&i, &j| (sse(0, i) + sse(i, n)).total_cmp(&(sse(0, j) + sse(j, n))))?;
    let (left, right) = samples.split_at(k);
    let (m1, s1) = mean_sse(left);
    let (m2, s2) = mean_sse(right);
    Some(TwoLevelFit {
        change_point: k,
        means: (m1, m2),
        sse: s1 + s2,
    })
}

fn mean_sse(xs: &[f32]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
    let sse = xs.iter().map(|&x| (f64::from(x) - mean).powi(2)).sum();
    (mean, sse)
}

/// One- or two-level fit of an event window.
///
/// The two-level model is kept when its BIC is lower and the two means differ
/// by more than three pooled within-segment standard deviations.
pub fn segment_event(samples: &[f32], cfg: &DetectorConfig) -> LevelFit {
    let n = samples.len();
    if n == 0 {
        return LevelFit {
            means: Vec::new(),
            change_point: None,
            residual_sse: 0.0,
            single_sse: 0.0,
            best_split: None,
            confident: false,
        };
    }
    let (mean, single_sse) = mean_sse(samples);
    let split = best_split(samples, cfg.min_event_samples);
    let mut fit = LevelFit {
        means: vec![mean],
        change_point: None,
        residual_sse: single_sse,
        single_sse,
        best_split: split,
        confident: split.is_some(),
    };
    if let Some(two) = split {
        let one_bic = bic(n, single_sse, 1.0, cfg.bic_penalty_multiplier);
        let two_bic = bic(n, two.sse, 3.0, cfg.bic_penalty_multiplier);
        let pooled_sd = (two.sse / (n as f64 - 2.0).max(1.0)).sqrt();
        let separation = (two.means.0 - two.means.1).abs();
        if two_bic < one_bic && separation > 3.0 * pooled_sd {
            fit.means = vec![two.means.0, two.means.1];
            fit.change_point = Some(two.change_point);
            fit.residual_sse = two.sse;
        }
    }
    fit
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub mean_pa: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelClass {
    Bilevel,
    SingleLevel,
}

impl LevelClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LevelClass::Bilevel => "bilevel",
            LevelClass::SingleLevel => "single_level",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeStatus {
    Pending,
    Decoded(BitBlock),
    Rejected(Rejection),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    /// No orientation places every level within tolerance of a table mean.
    NoTableMatch,
    /// Neighbouring levels resolved to the same base.
    RepeatedBase,
    /// A base the encoding scheme does not use.
    UnknownBase(Base),
    /// Duration sits too close to halfway between two run lengths, or is
    /// shorter than half a run.
    AmbiguousRunLength,
    Decode(String),
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::NoTableMatch => f.write_str("no_table_match"),
            Rejection::RepeatedBase => f.write_str("repeated_base"),
            Rejection::UnknownBase(b) => write!(f, "unknown_base_{b}"),
            Rejection::AmbiguousRunLength => f.write_str("ambiguous_run_length"),
            Rejection::Decode(_) => f.write_str("decode_error"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectedEvent {
    pub start: usize,
    pub end: usize,
    pub sample_rate_hz: f64,
    pub baseline_pa: f64,
    /// In temporal order.
    pub levels: Vec<Level>,
    /// `levels[i].mean_pa / baseline`, kept strictly inside `(0, 1)`.
    pub normalized: Vec<f64>,
    pub classification: LevelClass,
    pub fit: LevelFit,
    pub entry_end: Option<EntryEnd>,
    /// Inferred base per level, temporal order.
    pub bases: Vec<Base>,
    pub decode: DecodeStatus,
}

impl DetectedEvent {
    pub fn start_s(&self) -> f64 {
        self.start as f64 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        (self.end - self.start) as f64 / self.sample_rate_hz
    }

    pub fn bits(&self) -> Option<&BitBlock> {
        match &self.decode {
            DecodeStatus::Decoded(b) => Some(b),
            _ => None,
        }
    }
}

/// Fits levels inside one detected interval.
pub fn measure_event(
    trace: &Trace,
    interval: Interval,
    baseline: f64,
    cfg: &DetectorConfig,
) -> DetectedEvent {
    let window = &trace.samples[interval.start..interval.end];
    let fit = segment_event(window, cfg);
    let dt = trace.dt();
    let levels: Vec<Level> = match fit.change_point {
        Some(k) => vec![
            Level {
                mean_pa: fit.means[0],
                duration_s: k as f64 * dt,
            },
            Level {
                mean_pa: fit.means[1],
                duration_s: (window.len() - k) as f64 * dt,
            },
        ],
        None => vec![Level {
            mean_pa: fit.means[0],
            duration_s: window.len() as f64 * dt,
        }],
    };
    let normalized = levels
        .iter()
        .map(|l| (l.mean_pa / baseline).clamp(1e-6, 1.0 - 1e-6))
        .collect();
    DetectedEvent {
        start: interval.start,
        end: interval.end,
        sample_rate_hz: trace.sample_rate_hz,
        baseline_pa: baseline,
        classification: if levels.len() == 2 {
            LevelClass::Bilevel
        } else {
            LevelClass::SingleLevel
        },
        levels,
        normalized,
        fit,
        entry_end: None,
        bases: Vec::new(),
        decode: DecodeStatus::Pending,
    }
}

/// Orientation and base per level, or why none fits.
pub fn assign_levels(
    normalized: &[f64],
    params: &ChannelParams,
    tolerance: f64,
) -> std::result::Result<(EntryEnd, Vec<Base>), Rejection> {
    let mut best: Option<(f64, EntryEnd, Vec<Base>)> = None;
    for entry in EntryEnd::BOTH {
        let mut cost = 0.0;
        let mut bases = Vec::with_capacity(normalized.len());
        for &level in normalized {
            let nearest = params
                .blockade
                .entries()
                .iter()
                .filter(|e| e.entry == entry)
                .filter_map(|e| {
                    params
                        .blockade_mean(e.base, entry)
                        .ok()
                        .map(|m| (e.base, (level - m).abs()))
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match nearest {
                Some((base, d)) if d <= tolerance => {
                    cost += d * d;
                    bases.push(base);
                }
                _ => {
                    cost = f64::INFINITY;
                    break;
                }
            }
        }
        if cost.is_finite() && best.as_ref().is_none_or(|b| cost < b.0) {
            best = Some((cost, entry, bases));
        }
    }
    let (_, entry, bases) = best.ok_or(Rejection::NoTableMatch)?;
    if bases.windows(2).any(|w| w[0] == w[1]) {
        return Err(Rejection::RepeatedBase);
    }
    Ok((entry, bases))
}

/// Infers orientation, bases and run lengths, then decodes through the scheme.
pub fn classify_and_decode(
    ev: &mut DetectedEvent,
    params: &ChannelParams,
    scheme: &RunEncoding,
    cfg: &DetectorConfig,
) -> Result<()> {
    ev.decode = match assign_levels(&ev.normalized, params, cfg.level_match_tolerance) {
        Err(r) => DecodeStatus::Rejected(r),
        Ok((entry, bases)) => {
            ev.entry_end = Some(entry);
            ev.bases = bases.clone();
            let per_base = params.per_base_dwell(params.voltage_mv)?;
            decode_levels(&ev.levels, &bases, entry, per_base, scheme)
        }
    };
    Ok(())
}

fn decode_levels(
    levels: &[Level],
    bases: &[Base],
    entry: EntryEnd,
    per_base_s: f64,
    scheme: &RunEncoding,
) -> DecodeStatus {
    let mut runs = Vec::with_capacity(levels.len());
    for (level, &base) in levels.iter().zip(bases) {
        let Some((_, run_len)) = scheme.symbol_for(base) else {
            return DecodeStatus::Rejected(Rejection::UnknownBase(base));
        };
        let symbols = level.duration_s / per_base_s / f64::from(run_len);
        let k = symbols.round();
        if k < 1.0 || (symbols - k).abs() > 0.4 {
            return DecodeStatus::Rejected(Rejection::AmbiguousRunLength);
        }
        runs.push(Run::new(base, k as u32 * run_len));
    }
    if entry == EntryEnd::ThreePrime {
        runs.reverse();
    }
    match decode_runs(&MoleculeSpec::from_runs(runs), scheme) {
        Ok(bits) => DecodeStatus::Decoded(bits),
        Err(e) => DecodeStatus::Rejected(Rejection::Decode(e.to_string())),
    }
}

/// Baseline, intervals, level fits and decoding for a whole trace.
pub fn detect(
    trace: &Trace,
    params: &ChannelParams,
    scheme: &RunEncoding,
    cfg: &DetectorConfig,
) -> Result<Vec<DetectedEvent>> {
    cfg.validate()?;
    let baseline = estimate_baseline(trace)?;
    detect_events(trace, baseline, cfg)
        .into_iter()
        .map(|iv| {
            let mut ev = measure_event(trace, iv, baseline, cfg);
            classify_and_decode(&mut ev, params, scheme, cfg)?;
            Ok(ev)
        })
        .collect()
}
