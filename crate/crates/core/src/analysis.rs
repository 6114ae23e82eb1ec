//! Summary statistics over traces and event lists: open fraction, capture
//! rates by completeness, the blockage/dwell scatter, voltage sweeps and
//! detection scoring against ground truth.

use crate::channel::ChannelParams;
use crate::codec::MoleculeSpec;
use crate::detector::{self, DetectedEvent, DetectorConfig};
use crate::error::Result;
use crate::rng::Streams;
use crate::sim::{self, EventKind, EventRecord, SimOptions, Trace};

/// Fraction of samples at or above `threshold_fraction × baseline`.
pub fn open_fraction(trace: &Trace, baseline: f64, threshold_fraction: f64) -> f64 {
    if trace.is_empty() {
        return 1.0;
    }
    let threshold = threshold_fraction * baseline;
    let open = trace
        .samples
        .iter()
        .filter(|&&x| f64::from(x) >= threshold)
        .count();
    open as f64 / trace.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EventRates {
    pub complete_per_s: f64,
    pub incomplete_per_s: f64,
    pub total_per_s: f64,
}

pub fn rates_from_counts(complete: usize, incomplete: usize, duration_s: f64) -> EventRates {
    EventRates {
        complete_per_s: complete as f64 / duration_s,
        incomplete_per_s: incomplete as f64 / duration_s,
        total_per_s: (complete + incomplete) as f64 / duration_s,
    }
}

pub fn event_rates(events: &[EventRecord], duration_s: f64) -> EventRates {
    let complete = events.iter().filter(|e| e.kind.is_complete()).count();
    rates_from_counts(complete, events.len() - complete, duration_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub blockage_pct: f64,
    pub dwell_s: f64,
}

/// `100 × (1 − duration-weighted mean normalized level)`.
pub fn blockage_percent(levels: &[(f64, f64)]) -> f64 {
    let total: f64 = levels.iter().map(|l| l.1).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mean = levels.iter().map(|(lvl, d)| lvl * d).sum::<f64>() / total;
    (100.0 * (1.0 - mean)).clamp(0.0, 100.0)
}

pub fn dwell_blockage_scatter(events: &[DetectedEvent]) -> Vec<ScatterPoint> {
    events
        .iter()
        .map(|ev| {
            let levels: Vec<(f64, f64)> = ev
                .normalized
                .iter()
                .zip(&ev.levels)
                .map(|(n, l)| (*n, l.duration_s))
                .collect();
            ScatterPoint {
                blockage_pct: blockage_percent(&levels),
                dwell_s: ev.duration_s(),
            }
        })
        .collect()
}

pub fn scatter_centroid(points: &[ScatterPoint]) -> Option<ScatterPoint> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    Some(ScatterPoint {
        blockage_pct: points.iter().map(|p| p.blockage_pct).sum::<f64>() / n,
        dwell_s: points.iter().map(|p| p.dwell_s).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub level_rms_pa: f64,
    pub n_truth: usize,
    pub n_detected: usize,
    /// `(truth index, detected index)` pairs.
    pub matches: Vec<(usize, usize)>,
    /// Set when nothing was detected and precision was reported as 1.
    pub no_detections: bool,
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Greedy one-to-one matching in time order. A detection matches a truth event
/// when their starts differ by at most `match_tolerance_s` and they share at
/// least half of the longer interval.
pub fn score_detection(
    truth: &[EventRecord],
    detected: &[DetectedEvent],
    match_tolerance_s: f64,
) -> DetectionScore {
    let mut used = vec![false; detected.len()];
    let mut matches = Vec::new();
    let mut sq_err = 0.0;
    let mut n_levels = 0usize;
    let mut cursor = 0usize;
    for (ti, t) in truth.iter().enumerate() {
        let t_span = (t.start_s, t.end_s());
        while cursor < detected.len()
            && detected[cursor].start_s() + detected[cursor].duration_s()
                < t.start_s - match_tolerance_s
        {
            cursor += 1;
        }
        let mut best: Option<(usize, f64)> = None;
        for (di, d) in detected.iter().enumerate().skip(cursor) {
            if d.start_s() > t.end_s() + match_tolerance_s {
                break;
            }
            if used[di] || (d.start_s() - t.start_s).abs() > match_tolerance_s {
                continue;
            }
            let d_span = (d.start_s(), d.start_s() + d.duration_s());
            let ov = overlap(t_span, d_span);
            if ov >= 0.5 * t.duration_s.max(d.duration_s()) && best.is_none_or(|b| ov > b.1) {
                best = Some((di, ov));
            }
        }
        if let Some((di, _)) = best {
            used[di] = true;
            matches.push((ti, di));
            for (truth_level, detected_level) in level_pairs(t, &detected[di]) {
                sq_err += (truth_level - detected_level).powi(2);
                n_levels += 1;
            }
        }
    }
    let no_detections = detected.is_empty();
    DetectionScore {
        precision: if no_detections {
            1.0
        } else {
            matches.len() as f64 / detected.len() as f64
        },
        recall: if truth.is_empty() {
            1.0
        } else {
            matches.len() as f64 / truth.len() as f64
        },
        level_rms_pa: if n_levels == 0 {
            0.0
        } else {
            (sq_err / n_levels as f64).sqrt()
        },
        n_truth: truth.len(),
        n_detected: detected.len(),
        matches,
        no_detections,
    }
}

/// Distinct plateaus of a truth event as `(level, duration)`.
fn truth_plateaus(t: &EventRecord) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for s in &t.segments {
        match out.last_mut() {
            Some(last) if last.0 == s.level_pa => last.1 += s.duration_s,
            _ => out.push((s.level_pa, s.duration_s)),
        }
    }
    out
}

fn weighted_mean(levels: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (sum, dur) = levels.fold((0.0, 0.0), |(s, d), (l, t)| (s + l * t, d + t));
    if dur > 0.0 {
        sum / dur
    } else {
        0.0
    }
}

fn level_pairs(t: &EventRecord, d: &DetectedEvent) -> Vec<(f64, f64)> {
    let truth = truth_plateaus(t);
    if truth.len() == d.levels.len() {
        truth
            .iter()
            .zip(&d.levels)
            .map(|(a, b)| (a.0, b.mean_pa))
            .collect()
    } else {
        vec![(
            weighted_mean(truth.into_iter()),
            weighted_mean(d.levels.iter().map(|l| (l.mean_pa, l.duration_s))),
        )]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub voltage_mv: f64,
    pub open_fraction: f64,
    pub rates: EventRates,
    /// Mean detected event duration, s.
    pub mean_dwell_s: f64,
    pub mean_blockage_pct: f64,
    pub scatter: Vec<ScatterPoint>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VoltageSweepResult {
    pub points: Vec<SweepPoint>,
}

/// Simulates and analyses one trace per voltage. Rates come from ground
/// truth (the detector cannot tell complete from incomplete passages); open
/// fraction, dwell and blockage come from the detector.
pub fn voltage_sweep(
    base: &ChannelParams,
    opts: &SimOptions,
    voltages: &[f64],
    duration_s: f64,
    library: &[MoleculeSpec],
    cfg: &DetectorConfig,
    streams: &Streams,
) -> Result<VoltageSweepResult> {
    let mut points = Vec::with_capacity(voltages.len());
    for &v in voltages {
        let params = ChannelParams {
            voltage_mv: v,
            ..base.clone()
        };
        let child = streams.child(&format!("sweep{v}"));
        let (trace, truth) = sim::simulate_trace(&params, opts, duration_s, library, &child)?;
        let baseline = detector::estimate_baseline(&trace)?;
        let detected: Vec<DetectedEvent> = detector::detect_events(&trace, baseline, cfg)
            .into_iter()
            .map(|iv| detector::measure_event(&trace, iv, baseline, cfg))
            .collect();
        let scatter = dwell_blockage_scatter(&detected);
        let centroid = scatter_centroid(&scatter);
        points.push(SweepPoint {
            voltage_mv: v,
            open_fraction: open_fraction(&trace, baseline, cfg.event_threshold_fraction),
            rates: event_rates(&truth, duration_s),
            mean_dwell_s: centroid.map_or(0.0, |c| c.dwell_s),
            mean_blockage_pct: centroid.map_or(0.0, |c| c.blockage_pct),
            scatter,
        });
    }
    Ok(VoltageSweepResult { points })
}

impl VoltageSweepResult {
    pub fn open_fraction_csv(&self) -> String {
        let mut out = String::from("voltage_mv,open_fraction\n");
        for p in &self.points {
            out.push_str(&format!("{},{:.6}\n", p.voltage_mv, p.open_fraction));
        }
        out
    }

    pub fn event_rates_csv(&self) -> String {
        let mut out = String::from("voltage_mv,complete_per_s,incomplete_per_s,total_per_s\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                p.voltage_mv, p.rates.complete_per_s, p.rates.incomplete_per_s, p.rates.total_per_s
            ));
        }
        out
    }

    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("voltage_mv,blockage_pct,dwell_s\n");
        for p in &self.points {
            for s in &p.scatter {
                out.push_str(&format!(
                    "{},{:.4},{:.9}\n",
                    p.voltage_mv, s.blockage_pct, s.dwell_s
                ));
            }
        }
        out
    }
}

/// Counts events of one kind.
pub fn count_kind(events: &[EventRecord], kind: EventKind) -> usize {
    events.iter().filter(|e| e.kind == kind).count()
}
