//! Calibrated stochastic laws of a single α-haemolysin pore.
//!
//! Everything here is a pure function of [`ChannelParams`] plus an explicit RNG.
//! Defaults reproduce the 1 M KCl, 100 kHz-bandwidth operating point with the
//! `5'A50C100 3'` probe molecule.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};

use crate::codec::Base;
use crate::error::{Error, Result};

/// Which chemical end of the strand threads the pore first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryEnd {
    FivePrime,
    ThreePrime,
}

impl EntryEnd {
    pub const BOTH: [EntryEnd; 2] = [EntryEnd::FivePrime, EntryEnd::ThreePrime];

    pub fn as_str(self) -> &'static str {
        match self {
            EntryEnd::FivePrime => "5prime",
            EntryEnd::ThreePrime => "3prime",
        }
    }
}

impl fmt::Display for EntryEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntryEnd {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "5prime" | "5'" | "5" => Ok(EntryEnd::FivePrime),
            "3prime" | "3'" | "3" => Ok(EntryEnd::ThreePrime),
            other => Err(Error::Parse(format!("not an entry end: {other:?}"))),
        }
    }
}

/// Piecewise-linear open-pore I–V characteristic through `(mV, pA)` anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct IvCurve {
    anchors: Vec<(f64, f64)>,
}

impl IvCurve {
    /// Anchors are sorted by voltage; `(0, 0)` is inserted when missing.
    pub fn new(mut anchors: Vec<(f64, f64)>) -> Result<Self> {
        anchors.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(zero) = anchors.iter().find(|a| a.0 == 0.0) {
            if zero.1 != 0.0 {
                return Err(Error::Config("I-V curve must pass through (0, 0)".into()));
            }
        } else {
            anchors.push((0.0, 0.0));
            anchors.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        if anchors.len() < 2 {
            return Err(Error::Config(
                "I-V curve needs at least one non-zero anchor".into(),
            ));
        }
        for w in anchors.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Config(format!(
                    "I-V anchors must have strictly increasing voltage (duplicate at {} mV)",
                    w[1].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Config(format!(
                    "I-V current decreases between {} and {} mV",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(v, i) in &anchors {
            if v != 0.0 && (i == 0.0 || (i > 0.0) != (v > 0.0)) {
                return Err(Error::Config(format!(
                    "I-V anchor at {v} mV has wrong sign"
                )));
            }
        }
        Ok(IvCurve { anchors })
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    /// Current at `v` mV and whether `v` lies outside the anchor range.
    /// Outside the range the slope of the outermost segment is continued.
    pub fn eval(&self, v: f64) -> (f64, bool) {
        let a = &self.anchors;
        let n = a.len();
        let lerp = |p: (f64, f64), q: (f64, f64)| p.1 + (q.1 - p.1) * (v - p.0) / (q.0 - p.0);
        if v < a[0].0 {
            return (lerp(a[0], a[1]), true);
        }
        if v > a[n - 1].0 {
            return (lerp(a[n - 2], a[n - 1]), true);
        }
        let hi = a.partition_point(|p| p.0 < v);
        if hi == 0 || a[hi].0 == v {
            return (a[hi].1, false);
        }
        (lerp(a[hi - 1], a[hi]), false)
    }
}

impl Default for IvCurve {
    fn default() -> Self {
        IvCurve {
            anchors: vec![
                (-210.0, -200.0),
                (0.0, 0.0),
                (90.0, 90.0),
                (120.0, 130.0),
                (150.0, 160.0),
                (210.0, 250.0),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockadeEntry {
    pub base: Base,
    pub entry: EntryEnd,
    /// Mean of `I_blocked / I_open`.
    pub mean: f64,
    pub sd: f64,
}

/// Normalized residual current per `(base, entry end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockadeTable {
    entries: Vec<BlockadeEntry>,
}

impl BlockadeTable {
    pub fn new(entries: Vec<BlockadeEntry>) -> Result<Self> {
        let table = BlockadeTable { entries };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if !(e.mean > 0.0 && e.mean < 1.0) {
                return Err(Error::Config(format!(
                    "blockade mean for {} {} must lie in (0, 1), got {}",
                    e.base, e.entry, e.mean
                )));
            }
            if !(e.sd >= 0.0) {
                return Err(Error::Config(format!(
                    "negative blockade sd for {} {}",
                    e.base, e.entry
                )));
            }
            if self.entries[..i]
                .iter()
                .any(|o| o.base == e.base && o.entry == e.entry)
            {
                return Err(Error::Config(format!(
                    "duplicate blockade entry {} {}",
                    e.base, e.entry
                )));
            }
        }
        for base in Base::ALL {
            if let (Some(five), Some(three)) = (
                self.get(base, EntryEnd::FivePrime),
                self.get(base, EntryEnd::ThreePrime),
            ) {
                if five.mean >= three.mean {
                    return Err(Error::Config(format!(
                        "5'-entry blockade of {base} must be deeper than 3'-entry ({} >= {})",
                        five.mean, three.mean
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, base: Base, entry: EntryEnd) -> Option<&BlockadeEntry> {
        self.entries
            .iter()
            .find(|e| e.base == base && e.entry == entry)
    }

    pub fn entries(&self) -> &[BlockadeEntry] {
        &self.entries
    }

    /// Inserts or replaces an entry without validating.
    pub fn upsert(&mut self, entry: BlockadeEntry) {
        match self
            .entries
            .iter_mut()
            .find(|e| e.base == entry.base && e.entry == entry.entry)
        {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }
}

impl Default for BlockadeTable {
    fn default() -> Self {
        let e = |base, entry, mean, sd| BlockadeEntry {
            base,
            entry,
            mean,
            sd,
        };
        BlockadeTable {
            entries: vec![
                e(Base::A, EntryEnd::FivePrime, 0.12, 0.04),
                e(Base::C, EntryEnd::FivePrime, 0.20, 0.03),
                e(Base::A, EntryEnd::ThreePrime, 0.17, 0.04),
                e(Base::C, EntryEnd::ThreePrime, 0.37, 0.09),
            ],
        }
    }
}

/// Random telegraph gating parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatingParams {
    /// KCl molarity at and above which the pore gates.
    pub kcl_threshold: f64,
    pub mean_open_s: f64,
    pub mean_closed_s: f64,
}

impl Default for GatingParams {
    fn default() -> Self {
        GatingParams {
            kcl_threshold: 2.0,
            mean_open_s: 0.020,
            mean_closed_s: 0.010,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateState {
    Open,
    Closed,
}

/// Full calibration of the pore channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub voltage_mv: f64,
    pub kcl_molarity: f64,
    pub iv_curve: IvCurve,
    pub blockade: BlockadeTable,
    /// Linear drift of every blockade mean per mV away from `blockade_ref_mv`.
    pub blockade_slope_per_mv: f64,
    pub blockade_ref_mv: f64,
    /// RMS noise of the open-pore current, pA.
    pub noise_sigma_open: f64,
    pub noise_clog_multiplier: f64,
    /// Residual current of a clogged pore as a fraction of its open current.
    pub clog_residual_fraction: f64,
    /// Single-pore capture rate at `rate_ref_mv`, events/s.
    pub rate_ref: f64,
    pub rate_ref_mv: f64,
    pub rate_efold_mv: f64,
    /// Whole-molecule dwell of `dwell_ref_bases` bases at `dwell_ref_mv`, s.
    pub dwell_ref_s: f64,
    pub dwell_ref_bases: f64,
    pub dwell_ref_mv: f64,
    pub dwell_lognormal_sigma: f64,
    pub p_orientation_3prime_first: f64,
    pub p_bilevel: f64,
    pub p_complete: f64,
    pub v_bilevel_min_mv: f64,
    /// Incomplete events traverse a uniform fraction in `(0, max]` of the molecule.
    pub incomplete_fraction_max: f64,
    /// After an event the pore ignores arrivals for this long, s.
    pub capture_dead_time_s: f64,
    pub gating: GatingParams,
    pub cooperativity_gamma: f64,
    pub sample_rate_hz: f64,
    pub amplifier_bandwidth_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            voltage_mv: 210.0,
            kcl_molarity: 1.0,
            iv_curve: IvCurve::default(),
            blockade: BlockadeTable::default(),
            blockade_slope_per_mv: 0.0,
            blockade_ref_mv: 210.0,
            noise_sigma_open: 5.0,
            noise_clog_multiplier: 1.5,
            clog_residual_fraction: 10.0 / 140.0,
            rate_ref: 12.0,
            rate_ref_mv: 120.0,
            rate_efold_mv: 30.0 / 3f64.ln(),
            dwell_ref_s: 150e-6,
            dwell_ref_bases: 150.0,
            dwell_ref_mv: 210.0,
            dwell_lognormal_sigma: 0.3,
            p_orientation_3prime_first: 0.75,
            p_bilevel: 0.29,
            p_complete: 0.37,
            v_bilevel_min_mv: 200.0,
            incomplete_fraction_max: 1.0,
            capture_dead_time_s: 20e-6,
            gating: GatingParams::default(),
            cooperativity_gamma: 3.79,
            sample_rate_hz: 500e3,
            amplifier_bandwidth_hz: 100e3,
        }
    }
}

impl ChannelParams {
    /// Two-pore operating point: each open pore carries 140 pA, so the
    /// ensemble reads about 280 pA with both open and 150 pA with one clogged.
    pub fn two_pore_defaults() -> Self {
        ChannelParams {
            voltage_mv: 130.0,
            ..ChannelParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        let non_negative = |name: &str, x: f64| {
            if x >= 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be non-negative, got {x}"
                )))
            }
        };
        prob(
            "p_orientation_3prime_first",
            self.p_orientation_3prime_first,
        )?;
        prob("p_bilevel", self.p_bilevel)?;
        prob("p_complete", self.p_complete)?;
        prob("clog_residual_fraction", self.clog_residual_fraction)?;
        positive("incomplete_fraction_max", self.incomplete_fraction_max)?;
        if self.incomplete_fraction_max > 1.0 {
            return Err(Error::Config(
                "incomplete_fraction_max must be at most 1".into(),
            ));
        }
        positive("kcl_molarity", self.kcl_molarity)?;
        positive("rate_efold_mv", self.rate_efold_mv)?;
        positive("dwell_ref_s", self.dwell_ref_s)?;
        positive("dwell_ref_bases", self.dwell_ref_bases)?;
        positive("dwell_ref_mv", self.dwell_ref_mv)?;
        positive("gating.mean_open_s", self.gating.mean_open_s)?;
        positive("gating.mean_closed_s", self.gating.mean_closed_s)?;
        positive("gating.kcl_threshold", self.gating.kcl_threshold)?;
        positive("cooperativity_gamma", self.cooperativity_gamma)?;
        positive("sample_rate_hz", self.sample_rate_hz)?;
        positive("amplifier_bandwidth_hz", self.amplifier_bandwidth_hz)?;
        positive("noise_clog_multiplier", self.noise_clog_multiplier)?;
        non_negative("rate_ref", self.rate_ref)?;
        non_negative("capture_dead_time_s", self.capture_dead_time_s)?;
        non_negative("noise_sigma_open", self.noise_sigma_open)?;
        non_negative("dwell_lognormal_sigma", self.dwell_lognormal_sigma)?;
        if self.sample_rate_hz < 2.0 * self.amplifier_bandwidth_hz {
            return Err(Error::Config(format!(
                "sample rate {} Hz does not resolve a {} Hz bandwidth",
                self.sample_rate_hz, self.amplifier_bandwidth_hz
            )));
        }
        if !self.voltage_mv.is_finite() {
            return Err(Error::Config("voltage must be finite".into()));
        }
        self.blockade.validate()
    }

    pub fn open_current(&self, v_mv: f64) -> f64 {
        self.iv_curve.eval(v_mv).0
    }

    /// Per-pore capture rate scaled by the cooperativity multiplier, times the
    /// number of open pores.
    pub fn capture_rate(&self, v_mv: f64, n_open_pores: u32) -> f64 {
        if n_open_pores == 0 {
            return 0.0;
        }
        let per_pore = self.rate_ref
            * ((v_mv - self.rate_ref_mv) / self.rate_efold_mv).exp()
            * self.cooperativity_gamma.powi(n_open_pores as i32 - 1);
        per_pore * f64::from(n_open_pores)
    }

    /// Expected translocation time of `n_bases` at `v_mv`.
    pub fn mean_dwell(&self, v_mv: f64, n_bases: f64) -> Result<f64> {
        if !(v_mv > 0.0) {
            return Err(Error::Domain(format!(
                "no forward translocation at {v_mv} mV"
            )));
        }
        Ok(self.dwell_ref_s * (self.dwell_ref_mv / v_mv) * (n_bases / self.dwell_ref_bases))
    }

    /// Time for one base to pass at `v_mv`.
    pub fn per_base_dwell(&self, v_mv: f64) -> Result<f64> {
        self.mean_dwell(v_mv, 1.0)
    }

    /// Log-normal dwell sample whose mean follows [`Self::mean_dwell`].
    pub fn dwell_time<R: Rng + ?Sized>(&self, v_mv: f64, n_bases: f64, rng: &mut R) -> Result<f64> {
        if !(n_bases > 0.0) {
            return Err(Error::Domain("dwell needs at least one base".into()));
        }
        let mean = self.mean_dwell(v_mv, n_bases)?;
        let s = self.dwell_lognormal_sigma;
        if s == 0.0 {
            return Ok(mean);
        }
        let ln = LogNormal::new(mean.ln() - 0.5 * s * s, s)
            .map_err(|e| Error::Config(format!("dwell spread: {e}")))?;
        Ok(ln.sample(rng))
    }

    /// Mean normalized residual current at the configured voltage.
    pub fn blockade_mean(&self, base: Base, entry: EntryEnd) -> Result<f64> {
        let e = self.blockade_entry(base, entry)?;
        Ok(e.mean + self.blockade_slope_per_mv * (self.voltage_mv - self.blockade_ref_mv))
    }

    fn blockade_entry(&self, base: Base, entry: EntryEnd) -> Result<&BlockadeEntry> {
        self.blockade
            .get(base, entry)
            .ok_or_else(|| Error::Config(format!("no blockade calibration for {base} {entry}")))
    }

    /// Gaussian residual-current sample clamped to `(0.01, 0.99)`.
    pub fn blockade_level<R: Rng + ?Sized>(
        &self,
        base: Base,
        entry: EntryEnd,
        rng: &mut R,
    ) -> Result<f64> {
        let mean = self.blockade_mean(base, entry)?;
        let sd = self.blockade_entry(base, entry)?.sd;
        let x = if sd == 0.0 {
            mean
        } else {
            Normal::new(mean, sd)
                .map_err(|e| Error::Config(format!("blockade sd: {e}")))?
                .sample(rng)
        };
        Ok(x.clamp(0.01, 0.99))
    }

    pub fn gates(&self) -> bool {
        self.kcl_molarity >= self.gating.kcl_threshold
    }

    /// Alternating open/closed intervals covering `duration`, starting open.
    pub fn gating_sequence<R: Rng + ?Sized>(
        &self,
        duration: f64,
        rng: &mut R,
    ) -> Vec<(GateState, f64)> {
        if !(duration > 0.0) {
            return Vec::new();
        }
        if !self.gates() {
            return vec![(GateState::Open, duration)];
        }
        let open = Exp::new(1.0 / self.gating.mean_open_s).expect("validated mean");
        let closed = Exp::new(1.0 / self.gating.mean_closed_s).expect("validated mean");
        let mut out = Vec::new();
        let mut t = 0.0;
        let mut state = GateState::Open;
        while t < duration {
            let d = match state {
                GateState::Open => open.sample(rng),
                GateState::Closed => closed.sample(rng),
            };
            let d = d.min(duration - t);
            out.push((state, d));
            t += d;
            state = match state {
                GateState::Open => GateState::Closed,
                GateState::Closed => GateState::Open,
            };
        }
        out
    }
}

/// Fraction of `duration` spent open in a gating sequence.
pub fn open_time_fraction(seq: &[(GateState, f64)]) -> f64 {
    let total: f64 = seq.iter().map(|s| s.1).sum();
    if total == 0.0 {
        return 1.0;
    }
    seq.iter()
        .filter(|s| s.0 == GateState::Open)
        .map(|s| s.1)
        .sum::<f64>()
        / total
}
