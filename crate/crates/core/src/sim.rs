//! Synthetic current traces with ground-truth translocation events.
//!
//! Simulation happens in two steps. [`plan_ensemble`] lays out pore states and
//! the event schedule, which is all the rate statistics need; [`render`] turns a
//! plan into samples. Long rate studies can skip rendering entirely.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::channel::{ChannelParams, EntryEnd, GateState};
use crate::codec::{Base, MoleculeSpec};
use crate::error::{Error, Result};
use crate::rng::Streams;

/// Uniformly sampled current record in pA.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub sample_rate_hz: f64,
    pub start_time_s: f64,
    pub samples: Vec<f32>,
}

impl Trace {
    pub fn new(sample_rate_hz: f64, samples: Vec<f32>) -> Self {
        Trace {
            sample_rate_hz,
            start_time_s: 0.0,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    BilevelComplete,
    CompleteUnresolved,
    Incomplete,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::BilevelComplete => "bilevel_complete",
            EventKind::CompleteUnresolved => "complete_unresolved",
            EventKind::Incomplete => "incomplete",
        }
    }

    pub fn is_complete(self) -> bool {
        !matches!(self, EventKind::Incomplete)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bilevel_complete" => Ok(EventKind::BilevelComplete),
            "complete_unresolved" => Ok(EventKind::CompleteUnresolved),
            "incomplete" => Ok(EventKind::Incomplete),
            other => Err(Error::Parse(format!("not an event kind: {other:?}"))),
        }
    }
}

/// One homopolymer passage inside an event, in temporal order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub base: Base,
    pub level_pa: f64,
    pub duration_s: f64,
}

/// Ground truth for one translocation.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub molecule_id: u64,
    pub pore: usize,
    pub start_s: f64,
    pub duration_s: f64,
    pub kind: EventKind,
    pub entry_end: EntryEnd,
    pub segments: Vec<Segment>,
}

impl EventRecord {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }

    /// `[start, end)` sample indices on a grid of `sample_rate_hz`.
    pub fn sample_span(&self, sample_rate_hz: f64) -> (usize, usize) {
        let start = (self.start_s * sample_rate_hz).round() as usize;
        let len = (self.duration_s * sample_rate_hz).round() as usize;
        (start, start + len)
    }

    /// Sample offsets (from event start) where the rendered level changes.
    pub fn change_points(&self, sample_rate_hz: f64) -> Vec<usize> {
        rendered_pieces(&self.segments, sample_rate_hz)
            .windows(2)
            .filter(|w| w[0].2 != w[1].2)
            .map(|w| w[1].0)
            .collect()
    }
}

/// Overrides for the random event draw.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimOptions {
    pub force_kind: Option<EventKind>,
    pub force_entry: Option<EntryEnd>,
}

/// Draws orientation, kind, levels and dwell for one molecule passage. The
/// record starts at time zero and its duration is a whole number of samples.
pub fn draw_event<R: Rng + ?Sized>(
    mol: &MoleculeSpec,
    molecule_id: u64,
    params: &ChannelParams,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<EventRecord> {
    if mol.is_empty() {
        return Err(Error::Domain("cannot translocate an empty molecule".into()));
    }
    let v = params.voltage_mv;
    let open = params.open_current(v);
    let fs = params.sample_rate_hz;

    let entry_end = match opts.force_entry {
        Some(e) => e,
        None if rng.random::<f64>() < params.p_orientation_3prime_first => EntryEnd::ThreePrime,
        None => EntryEnd::FivePrime,
    };
    let kind_u: f64 = rng.random();
    let kind = match opts.force_kind {
        Some(k) => k,
        None if kind_u < params.p_bilevel => {
            if v >= params.v_bilevel_min_mv {
                EventKind::BilevelComplete
            } else {
                EventKind::CompleteUnresolved
            }
        }
        None if kind_u < params.p_complete.max(params.p_bilevel) => EventKind::CompleteUnresolved,
        None => EventKind::Incomplete,
    };

    // Runs in the order they pass through the constriction.
    let mut runs = mol.runs().to_vec();
    if entry_end == EntryEnd::ThreePrime {
        runs.reverse();
    }

    let (kind, pieces) = match kind {
        EventKind::Incomplete => {
            let entering = runs[0];
            let fraction = params.incomplete_fraction_max * (1.0 - rng.random::<f64>());
            let traversed = (fraction * f64::from(mol.total_bases())).max(1.0);
            let level = params.blockade_level(entering.base, entry_end, rng)?;
            let dwell = params.dwell_time(v, traversed, rng)?;
            (kind, vec![(entering.base, level, dwell)])
        }
        _ => {
            let dwell = params.dwell_time(v, f64::from(mol.total_bases()), rng)?;
            let total = f64::from(mol.total_bases());
            let mut pieces = Vec::with_capacity(runs.len());
            for run in &runs {
                let level = params.blockade_level(run.base, entry_end, rng)?;
                pieces.push((run.base, level, dwell * f64::from(run.count) / total));
            }
            let kind = if runs.len() < 2 && kind == EventKind::BilevelComplete {
                EventKind::CompleteUnresolved
            } else {
                kind
            };
            if kind == EventKind::CompleteUnresolved {
                let avg = pieces.iter().map(|p| p.1 * p.2).sum::<f64>() / dwell;
                for p in &mut pieces {
                    p.1 = avg;
                }
            }
            (kind, pieces)
        }
    };

    let raw_total: f64 = pieces.iter().map(|p| p.2).sum();
    let n_samples = (raw_total * fs).round().max(1.0);
    let duration_s = n_samples / fs;
    let scale = duration_s / raw_total;
    let segments = pieces
        .into_iter()
        .map(|(base, level, d)| Segment {
            base,
            level_pa: level * open,
            duration_s: d * scale,
        })
        .collect();

    Ok(EventRecord {
        molecule_id,
        pore: 0,
        start_s: 0.0,
        duration_s,
        kind,
        entry_end,
        segments,
    })
}

/// Piecewise-constant rendering of an event as `(start, end, level)` sample
/// pieces relative to the event start. Consecutive segments that each cover
/// fewer than two samples are pooled into one duration-weighted level.
fn rendered_pieces(segments: &[Segment], fs: f64) -> Vec<(usize, usize, f64)> {
    let mut bounds = Vec::with_capacity(segments.len() + 1);
    bounds.push(0usize);
    let mut cum = 0.0;
    for s in segments {
        cum += s.duration_s;
        bounds.push((cum * fs).round() as usize);
    }
    let mut out: Vec<(usize, usize, f64)> = Vec::new();
    let mut pool: Option<(usize, usize, f64, f64)> = None;
    let flush = |pool: &mut Option<(usize, usize, f64, f64)>,
                 out: &mut Vec<(usize, usize, f64)>| {
        if let Some((a, b, weighted, dur)) = pool.take() {
            if b > a {
                out.push((a, b, if dur > 0.0 { weighted / dur } else { 0.0 }));
            }
        }
    };
    for (i, s) in segments.iter().enumerate() {
        let (a, b) = (bounds[i], bounds[i + 1]);
        if b - a >= 2 {
            flush(&mut pool, &mut out);
            out.push((a, b, s.level_pa));
        } else {
            let p = pool.get_or_insert((a, a, 0.0, 0.0));
            p.1 = b;
            p.2 += s.level_pa * s.duration_s;
            p.3 += s.duration_s;
        }
    }
    flush(&mut pool, &mut out);
    out
}

/// Noiseless samples of an event.
pub fn render_event(record: &EventRecord, sample_rate_hz: f64) -> Vec<f32> {
    let mut out = Vec::new();
    for (a, b, level) in rendered_pieces(&record.segments, sample_rate_hz) {
        out.resize(a, 0.0);
        out.extend(std::iter::repeat_n(level as f32, b - a));
    }
    out
}

/// One event and its sample fragment with measurement noise.
pub fn simulate_event<R: Rng + ?Sized>(
    mol: &MoleculeSpec,
    params: &ChannelParams,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<(EventRecord, Vec<f32>)> {
    let record = draw_event(mol, 0, params, opts, rng)?;
    let mut samples = render_event(&record, params.sample_rate_hz);
    add_noise(&mut samples, params.noise_sigma_open, rng);
    Ok((record, samples))
}

fn add_noise<R: Rng + ?Sized>(samples: &mut [f32], sigma: f64, rng: &mut R) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for x in samples {
        *x = (f64::from(*x) + normal.sample(rng)) as f32;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoreStatus {
    Open,
    Translocating,
    Clogged,
    GatingClosed,
}

/// A pore held clogged over `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClogInterval {
    pub pore: usize,
    pub start_s: f64,
    pub end_s: f64,
}

/// Stretch of time with fixed per-pore availability.
#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub start_s: f64,
    pub end_s: f64,
    /// Each entry is `Open`, `Clogged` or `GatingClosed`.
    pub status: Vec<PoreStatus>,
}

impl Regime {
    pub fn n_open(&self) -> u32 {
        self.status
            .iter()
            .filter(|s| **s == PoreStatus::Open)
            .count() as u32
    }

    pub fn any_clogged(&self) -> bool {
        self.status.contains(&PoreStatus::Clogged)
    }
}

/// Snapshot of every pore at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PoreEnsembleState {
    pub status: Vec<PoreStatus>,
}

impl PoreEnsembleState {
    pub fn n_pores(&self) -> usize {
        self.status.len()
    }
}

/// Pore availability timeline plus the event schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePlan {
    pub n_pores: usize,
    pub duration_s: f64,
    pub regimes: Vec<Regime>,
    /// Sorted by start time; events on the same pore never overlap.
    pub events: Vec<EventRecord>,
}

impl EnsemblePlan {
    pub fn state_at(&self, t: f64) -> PoreEnsembleState {
        let idx = self
            .regimes
            .partition_point(|r| r.end_s <= t)
            .min(self.regimes.len().saturating_sub(1));
        let mut status = self.regimes[idx].status.clone();
        for ev in &self.events {
            if ev.start_s <= t && t < ev.end_s() {
                status[ev.pore] = PoreStatus::Translocating;
            }
        }
        PoreEnsembleState { status }
    }
}

/// Molecule library sampled uniformly per event; `molecule_id` is the index.
fn pick_molecule<'a, R: Rng + ?Sized>(
    library: &'a [MoleculeSpec],
    rng: &mut R,
) -> (u64, &'a MoleculeSpec) {
    let id = if library.len() == 1 {
        0
    } else {
        rng.random_range(0..library.len())
    };
    (id as u64, &library[id])
}

/// Lays out gating, clogging and Poisson arrivals for `n_pores` pores.
///
/// Per-pore capture rate depends on how many pores are currently available
/// (neither clogged nor gating-closed); arrivals at a pore that is still
/// translocating, or within the capture dead time after an event, are
/// discarded.
pub fn plan_ensemble(
    params: &ChannelParams,
    opts: &SimOptions,
    n_pores: usize,
    duration_s: f64,
    library: &[MoleculeSpec],
    clog_schedule: &[ClogInterval],
    streams: &Streams,
) -> Result<EnsemblePlan> {
    params.validate()?;
    if n_pores == 0 {
        return Err(Error::Domain("ensemble needs at least one pore".into()));
    }
    if !(duration_s > 0.0) {
        return Err(Error::Domain(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if library.is_empty() || library.iter().any(MoleculeSpec::is_empty) {
        return Err(Error::Domain(
            "molecule library must hold non-empty molecules".into(),
        ));
    }
    if let Some(c) = clog_schedule.iter().find(|c| c.pore >= n_pores) {
        return Err(Error::Config(format!(
            "clog schedule names pore {} of {n_pores}",
            c.pore
        )));
    }

    // Per-pore closed intervals from the gating process.
    let gating: Vec<Vec<(f64, f64)>> = (0..n_pores)
        .map(|p| {
            let mut rng = streams.stream(&format!("pore{p}/gating"));
            let mut t = 0.0;
            let mut closed = Vec::new();
            for (state, d) in params.gating_sequence(duration_s, &mut rng) {
                if state == GateState::Closed {
                    closed.push((t, t + d));
                }
                t += d;
            }
            closed
        })
        .collect();

    let mut cuts = vec![0.0, duration_s];
    for c in clog_schedule {
        cuts.push(c.start_s.clamp(0.0, duration_s));
        cuts.push(c.end_s.clamp(0.0, duration_s));
    }
    for closed in &gating {
        for &(a, b) in closed {
            cuts.push(a);
            cuts.push(b.min(duration_s));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let regimes: Vec<Regime> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let status = (0..n_pores)
                .map(|p| {
                    if clog_schedule
                        .iter()
                        .any(|c| c.pore == p && c.start_s <= mid && mid < c.end_s)
                    {
                        PoreStatus::Clogged
                    } else if gating[p].iter().any(|&(a, b)| a <= mid && mid < b) {
                        PoreStatus::GatingClosed
                    } else {
                        PoreStatus::Open
                    }
                })
                .collect();
            Regime {
                start_s: w[0],
                end_s: w[1],
                status,
            }
        })
        .collect();

    let fs = params.sample_rate_hz;
    let mut events = Vec::new();
    for pore in 0..n_pores {
        let mut arrivals = streams.stream(&format!("pore{pore}/arrivals"));
        let mut draws = streams.stream(&format!("pore{pore}/events"));
        let mut busy_until = 0.0;
        for regime in &regimes {
            if regime.status[pore] != PoreStatus::Open {
                continue;
            }
            let per_pore = params.capture_rate(params.voltage_mv, regime.n_open())
                / f64::from(regime.n_open());
            if !(per_pore > 0.0) {
                continue;
            }
            let gap =
                Exp::new(per_pore).map_err(|e| Error::Config(format!("capture rate: {e}")))?;
            let mut t = regime.start_s;
            loop {
                t += gap.sample(&mut arrivals);
                if t >= regime.end_s {
                    break;
                }
                if t < busy_until {
                    continue;
                }
                let start_idx = (t * fs).round();
                let start_s = start_idx / fs;
                if start_s >= duration_s {
                    break;
                }
                let (id, mol) = pick_molecule(library, &mut draws);
                let mut ev = draw_event(mol, id, params, opts, &mut draws)?;
                ev.pore = pore;
                ev.start_s = start_s;
                busy_until = ev.end_s() + params.capture_dead_time_s;
                // A passage still under way when the recording stops is not
                // part of the trace.
                if ev.end_s() <= duration_s {
                    events.push(ev);
                }
            }
        }
    }
    events.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.pore.cmp(&b.pore)));

    Ok(EnsemblePlan {
        n_pores,
        duration_s,
        regimes,
        events,
    })
}

fn pore_current(params: &ChannelParams, status: PoreStatus) -> f64 {
    let open = params.open_current(params.voltage_mv);
    match status {
        PoreStatus::Open | PoreStatus::Translocating => open,
        PoreStatus::Clogged => open * params.clog_residual_fraction,
        PoreStatus::GatingClosed => 0.0,
    }
}

/// Samples the plan: summed pore currents plus Gaussian noise whose σ is
/// inflated while any pore is clogged.
pub fn render(plan: &EnsemblePlan, params: &ChannelParams, streams: &Streams) -> Trace {
    let fs = params.sample_rate_hz;
    let n = (plan.duration_s * fs).round() as usize;
    let idx = |t: f64| ((t * fs).round() as usize).min(n);
    let mut samples = vec![0f32; n];

    let regime_bounds: Vec<(usize, usize)> = plan
        .regimes
        .iter()
        .map(|r| (idx(r.start_s), idx(r.end_s)))
        .collect();
    for (r, &(a, b)) in plan.regimes.iter().zip(&regime_bounds) {
        let total: f64 = r.status.iter().map(|s| pore_current(params, *s)).sum();
        samples[a..b].fill(total as f32);
    }

    // Events replace their pore's contribution for their duration.
    let base_of = |pore: usize, i: usize| {
        let r = regime_bounds.partition_point(|&(_, b)| b <= i);
        let r = r.min(plan.regimes.len() - 1);
        pore_current(params, plan.regimes[r].status[pore])
    };
    for ev in &plan.events {
        let (start, _) = ev.sample_span(fs);
        for (a, b, level) in rendered_pieces(&ev.segments, fs) {
            for i in (start + a)..(start + b).min(n) {
                let others = f64::from(samples[i]) - base_of(ev.pore, i);
                samples[i] = (others + level) as f32;
            }
        }
    }

    if params.noise_sigma_open > 0.0 {
        let mut rng = streams.stream("noise");
        for (r, &(a, b)) in plan.regimes.iter().zip(&regime_bounds) {
            let sigma = if r.any_clogged() {
                params.noise_sigma_open * params.noise_clog_multiplier
            } else {
                params.noise_sigma_open
            };
            add_noise(&mut samples[a..b], sigma, &mut rng);
        }
    }
    Trace::new(fs, samples)
}

/// Single-pore trace with embedded events.
pub fn simulate_trace(
    params: &ChannelParams,
    opts: &SimOptions,
    duration_s: f64,
    library: &[MoleculeSpec],
    streams: &Streams,
) -> Result<(Trace, Vec<EventRecord>)> {
    simulate_ensemble(params, opts, 1, duration_s, library, &[], streams)
}

pub fn simulate_ensemble(
    params: &ChannelParams,
    opts: &SimOptions,
    n_pores: usize,
    duration_s: f64,
    library: &[MoleculeSpec],
    clog_schedule: &[ClogInterval],
    streams: &Streams,
) -> Result<(Trace, Vec<EventRecord>)> {
    let plan = plan_ensemble(
        params,
        opts,
        n_pores,
        duration_s,
        library,
        clog_schedule,
        streams,
    )?;
    let trace = render(&plan, params, streams);
    Ok((trace, plan.events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet() -> ChannelParams {
        let mut p = ChannelParams::default();
        p.noise_sigma_open = 0.0;
        p.dwell_lognormal_sigma = 0.0;
        let mut t = p.blockade.clone();
        for e in t.entries().to_vec() {
            t.upsert(crate::channel::BlockadeEntry { sd: 0.0, ..e });
        }
        p.blockade = t;
        p
    }

    fn forced(kind: EventKind, entry: EntryEnd) -> SimOptions {
        SimOptions {
            force_kind: Some(kind),
            force_entry: Some(entry),
        }
    }

    #[test]
    fn three_prime_bilevel_plateaus() {
        let p = quiet();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (ev, frag) = simulate_event(
            &MoleculeSpec::a50_c100(),
            &p,
            &forced(EventKind::BilevelComplete, EntryEnd::ThreePrime),
            &mut rng,
        )
        .unwrap();
        assert_eq!(ev.kind, EventKind::BilevelComplete);
        assert_eq!(ev.segments.len(), 2);
        assert_eq!(ev.segments[0].base, Base::C);
        assert!((ev.segments[0].level_pa - 92.5).abs() < 1e-9);
        assert!((ev.segments[0].duration_s - 100e-6).abs() < 1e-12);
        assert!((ev.segments[1].level_pa - 42.5).abs() < 1e-9);
        assert!((ev.segments[1].duration_s - 50e-6).abs() < 1e-12);
        assert_eq!(frag.len(), 75);
        assert!(frag[..50].iter().all(|&x| x == 92.5));
        assert!(frag[50..].iter().all(|&x| x == 42.5));
        assert_eq!(ev.change_points(p.sample_rate_hz), vec![50]);
    }

    #[test]
    fn five_prime_bilevel_plateaus_reverse() {
        let p = quiet();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (ev, frag) = simulate_event(
            &MoleculeSpec::a50_c100(),
            &p,
            &forced(EventKind::BilevelComplete, EntryEnd::FivePrime),
            &mut rng,
        )
        .unwrap();
        assert_eq!(ev.segments[0].base, Base::A);
        assert!(frag[..25].iter().all(|&x| x == 30.0));
        assert!(frag[25..].iter().all(|&x| x == 50.0));
    }

    #[test]
    fn incomplete_event_has_single_entering_segment() {
        let p = quiet();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let ev = draw_event(
                &MoleculeSpec::a50_c100(),
                0,
                &p,
                &forced(EventKind::Incomplete, EntryEnd::ThreePrime),
                &mut rng,
            )
            .unwrap();
            assert_eq!(ev.segments.len(), 1);
            assert_eq!(ev.segments[0].base, Base::C);
            assert!(ev.duration_s <= 150e-6 + 1e-9);
        }
    }

    #[test]
    fn unresolved_event_is_one_plateau() {
        let p = quiet();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (ev, frag) = simulate_event(
            &MoleculeSpec::a50_c100(),
            &p,
            &forced(EventKind::CompleteUnresolved, EntryEnd::ThreePrime),
            &mut rng,
        )
        .unwrap();
        let expected = (92.5 * 100.0 + 42.5 * 50.0) / 150.0;
        assert!(frag.iter().all(|&x| (f64::from(x) - expected).abs() < 1e-4));
        assert!(ev.change_points(p.sample_rate_hz).is_empty());
    }

    #[test]
    fn sub_sample_runs_are_pooled() {
        let p = quiet();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (ev, frag) = simulate_event(
            &MoleculeSpec::ac_repeat(60),
            &p,
            &forced(EventKind::BilevelComplete, EntryEnd::FivePrime),
            &mut rng,
        )
        .unwrap();
        assert_eq!(ev.segments.len(), 120);
        let expected = 0.5 * (30.0 + 50.0);
        assert_eq!(frag.len(), 60);
        assert!(frag.iter().all(|&x| (f64::from(x) - expected).abs() < 1e-4));
    }

    #[test]
    fn segment_durations_sum_to_event_duration() {
        let p = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let ev = draw_event(
                &MoleculeSpec::a50_c100(),
                0,
                &p,
                &SimOptions::default(),
                &mut rng,
            )
            .unwrap();
            let sum: f64 = ev.segments.iter().map(|s| s.duration_s).sum();
            assert!((sum - ev.duration_s).abs() < 1e-12);
            match ev.kind {
                EventKind::BilevelComplete => {
                    assert!(ev.segments.len() >= 2);
                    assert_ne!(ev.segments[0].base, ev.segments[1].base);
                }
                EventKind::Incomplete => assert_eq!(ev.segments.len(), 1),
                EventKind::CompleteUnresolved => {}
            }
        }
    }

    #[test]
    fn no_bilevel_below_gate_voltage() {
        let p = ChannelParams {
            voltage_mv: 150.0,
            ..ChannelParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let ev = draw_event(
                &MoleculeSpec::a50_c100(),
                0,
                &p,
                &SimOptions::default(),
                &mut rng,
            )
            .unwrap();
            assert_ne!(ev.kind, EventKind::BilevelComplete);
        }
    }

    #[test]
    fn empty_molecule_is_domain_error() {
        let p = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(matches!(
            simulate_event(
                &MoleculeSpec::default(),
                &p,
                &SimOptions::default(),
                &mut rng
            ),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_rate_trace_is_pure_baseline() {
        let mut p = ChannelParams::default();
        p.rate_ref = 0.0;
        let (trace, events) = simulate_trace(
            &p,
            &SimOptions::default(),
            0.1,
            &[MoleculeSpec::a50_c100()],
            &Streams::new(1),
        )
        .unwrap();
        assert!(events.is_empty());
        assert_eq!(trace.len(), 50_000);
        let mean = trace.samples.iter().map(|&x| f64::from(x)).sum::<f64>() / trace.len() as f64;
        let bound = 3.0 * p.noise_sigma_open / (trace.len() as f64).sqrt();
        assert!((mean - 250.0).abs() < bound, "mean {mean}");
    }

    #[test]
    fn noiseless_trace_is_piecewise_constant_and_matches_truth() {
        let p = quiet();
        let (trace, events) = simulate_trace(
            &p,
            &SimOptions::default(),
            0.2,
            &[MoleculeSpec::a50_c100()],
            &Streams::new(11),
        )
        .unwrap();
        assert!(!events.is_empty());
        let levels: std::collections::BTreeSet<u32> =
            trace.samples.iter().map(|x| x.to_bits()).collect();
        assert!(levels.len() <= 1 + 3 * events.len());
        for ev in &events {
            let (a, b) = ev.sample_span(p.sample_rate_hz);
            let expected = render_event(ev, p.sample_rate_hz);
            assert_eq!(&trace.samples[a..b], expected.as_slice());
        }
    }

    #[test]
    fn ensemble_events_never_overlap_on_one_pore() {
        let p = ChannelParams::two_pore_defaults();
        let plan = plan_ensemble(
            &p,
            &SimOptions::default(),
            2,
            5.0,
            &[MoleculeSpec::a50_c100()],
            &[],
            &Streams::new(4),
        )
        .unwrap();
        for pore in 0..2 {
            let mine: Vec<_> = plan.events.iter().filter(|e| e.pore == pore).collect();
            assert!(mine.windows(2).all(|w| w[0].end_s() <= w[1].start_s));
        }
        assert!(plan.events.windows(2).all(|w| w[0].start_s <= w[1].start_s));
    }

    #[test]
    fn clogged_pore_lowers_current_and_raises_noise() {
        let mut p = ChannelParams::two_pore_defaults();
        p.rate_ref = 0.0;
        let clog = [ClogInterval {
            pore: 1,
            start_s: 0.05,
            end_s: 0.1,
        }];
        let (trace, _) = simulate_ensemble(
            &p,
            &SimOptions::default(),
            2,
            0.1,
            &[MoleculeSpec::a50_c100()],
            &clog,
            &Streams::new(2),
        )
        .unwrap();
        let stats = |xs: &[f32]| {
            let n = xs.len() as f64;
            let m = xs.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
            let v = xs.iter().map(|&x| (f64::from(x) - m).powi(2)).sum::<f64>() / n;
            (m, v.sqrt())
        };
        let (open_mean, open_sd) = stats(&trace.samples[..25_000]);
        let (clog_mean, clog_sd) = stats(&trace.samples[25_000..]);
        assert!((open_mean - 280.0).abs() < 0.2);
        assert!((clog_mean - 150.0).abs() < 0.2);
        assert!((clog_sd / open_sd - 1.5).abs() < 0.05);
    }

    #[test]
    fn state_snapshot_marks_translocation() {
        let p = ChannelParams::default();
        let plan = plan_ensemble(
            &p,
            &SimOptions::default(),
            1,
            0.5,
            &[MoleculeSpec::a50_c100()],
            &[],
            &Streams::new(8),
        )
        .unwrap();
        let ev = &plan.events[0];
        let state = plan.state_at(ev.start_s + 0.5 * ev.duration_s);
        assert_eq!(state.status, vec![PoreStatus::Translocating]);
        assert_eq!(plan.state_at(ev.end_s() + 1e-7).n_pores(), 1);
    }

    #[test]
    fn same_seed_same_trace() {
        let p = ChannelParams::default();
        let lib = [MoleculeSpec::a50_c100()];
        let a = simulate_trace(&p, &SimOptions::default(), 0.05, &lib, &Streams::new(99)).unwrap();
        let b = simulate_trace(&p, &SimOptions::default(), 0.05, &lib, &Streams::new(99)).unwrap();
        assert_eq!(a, b);
    }
}
