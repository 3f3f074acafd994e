//! Voltage-controlled bipolar memristor.
//!
//! The conductance is the stored synaptic weight. Below the set/reset
//! thresholds the device is a plain resistor; above them the conductance
//! drifts at a rate proportional to the overdrive, clamped to
//! `[g_min, g_max]`. In bistable mode the device only occupies the two
//! endpoints and switches stochastically with an exponential hazard.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SwitchingMode {
    #[default]
    Analog,
    Bistable,
}

impl SwitchingMode {
    fn name(self) -> &'static str {
        match self {
            SwitchingMode::Analog => "analog",
            SwitchingMode::Bistable => "bistable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemristorParams {
    #[serde(rename = "g_min_S")]
    pub g_min: f64,
    #[serde(rename = "g_max_S")]
    pub g_max: f64,
    #[serde(rename = "v_set_V")]
    pub v_set: f64,
    #[serde(rename = "v_reset_V")]
    pub v_reset: f64,
    /// S/(V·s)
    #[serde(rename = "k_set_SpVs")]
    pub k_set: f64,
    /// S/(V·s)
    #[serde(rename = "k_reset_SpVs")]
    pub k_reset: f64,
    pub mode: SwitchingMode,
    /// Switching hazard per second per volt of overdrive (bistable only).
    pub p_rate_set: f64,
    pub p_rate_reset: f64,
}

impl Default for MemristorParams {
    /// 1 kΩ..7 kΩ window, ±2 V thresholds, drift rate sized so that one
    /// -3 V / 1 µs pulse shifts a few-kΩ device by tens of ohms.
    fn default() -> Self {
        MemristorParams {
            g_min: 1.0 / 7000.0,
            g_max: 1.0 / 1000.0,
            v_set: 2.0,
            v_reset: -2.0,
            k_set: 3.0,
            k_reset: 3.0,
            mode: SwitchingMode::Analog,
            p_rate_set: 1.0e6,
            p_rate_reset: 1.0e6,
        }
    }
}

impl MemristorParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("g_min_S", self.g_min),
            ("g_max_S", self.g_max),
            ("v_set_V", self.v_set),
            ("v_reset_V", self.v_reset),
            ("k_set_SpVs", self.k_set),
            ("k_reset_SpVs", self.k_reset),
            ("p_rate_set", self.p_rate_set),
            ("p_rate_reset", self.p_rate_reset),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.g_min <= 0.0 {
            return Err(Error::param("g_min_S", "must be > 0"));
        }
        if self.g_max <= self.g_min {
            return Err(Error::param("g_max_S", "must be > g_min_S"));
        }
        if self.v_set <= 0.0 {
            return Err(Error::param("v_set_V", "must be > 0"));
        }
        if self.v_reset >= 0.0 {
            return Err(Error::param("v_reset_V", "must be < 0"));
        }
        for (name, value) in [
            ("k_set_SpVs", self.k_set),
            ("k_reset_SpVs", self.k_reset),
            ("p_rate_set", self.p_rate_set),
            ("p_rate_reset", self.p_rate_reset),
        ] {
            if value < 0.0 {
                return Err(Error::param(name, "must be >= 0"));
            }
        }
        Ok(())
    }

    /// True when `v` lies strictly between the reset and set thresholds.
    pub fn is_subthreshold(&self, v: f64) -> bool {
        v > self.v_reset && v < self.v_set
    }

    pub fn g_mid(&self) -> f64 {
        0.5 * (self.g_min + self.g_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemristorState {
    /// Conductance in siemens.
    pub g: f64,
}

impl MemristorState {
    /// A state at conductance `g`, which must lie inside the device window.
    pub fn new(g: f64, params: &MemristorParams) -> Result<Self> {
        if !(g.is_finite() && g >= params.g_min && g <= params.g_max) {
            return Err(Error::param(
                "g_S",
                format!("{g} outside [{}, {}]", params.g_min, params.g_max),
            ));
        }
        Ok(MemristorState { g })
    }

    /// Bistable high-resistance state.
    pub fn hrs(params: &MemristorParams) -> Self {
        MemristorState { g: params.g_min }
    }

    /// Bistable low-resistance state.
    pub fn lrs(params: &MemristorParams) -> Self {
        MemristorState { g: params.g_max }
    }

    pub fn resistance(&self) -> f64 {
        1.0 / self.g
    }

    /// Instantaneous Ohmic current. Zero at zero bias for every state.
    pub fn conduct(&self, v: f64) -> f64 {
        self.g * v
    }

    /// Threshold drift over `dt` at constant voltage `v` (analog mode).
    pub fn step(&self, params: &MemristorParams, v: f64, dt: f64) -> Result<Self> {
        if params.mode != SwitchingMode::Analog {
            return Err(Error::ModeMismatch {
                expected: SwitchingMode::Analog.name(),
            });
        }
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        Ok(self.drift(params, v, dt))
    }

    pub(crate) fn drift(&self, params: &MemristorParams, v: f64, dt: f64) -> Self {
        let rate = if v > params.v_set {
            params.k_set * (v - params.v_set)
        } else if v < params.v_reset {
            // v - v_reset < 0: conductance decreases
            params.k_reset * (v - params.v_reset)
        } else {
            return *self;
        };
        MemristorState {
            g: (self.g + rate * dt).clamp(params.g_min, params.g_max),
        }
    }

    /// One stochastic switching trial over `dt` (bistable mode).
    ///
    /// Always consumes exactly one uniform draw from `rng`, so the stream
    /// stays aligned regardless of the applied voltage.
    pub fn stochastic_step<R: Rng + ?Sized>(
        &self,
        params: &MemristorParams,
        v: f64,
        dt: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if params.mode != SwitchingMode::Bistable {
            return Err(Error::ModeMismatch {
                expected: SwitchingMode::Bistable.name(),
            });
        }
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        let at_hrs = self.g == params.g_min;
        let at_lrs = self.g == params.g_max;
        if !at_hrs && !at_lrs {
            return Err(Error::NotBistableEndpoint(self.g));
        }
        let u: f64 = rng.random();
        let p = switch_probability(params, self.g, v, dt);
        if u < p {
            Ok(if at_hrs {
                Self::lrs(params)
            } else {
                Self::hrs(params)
            })
        } else {
            Ok(*self)
        }
    }
}

/// Probability that a bistable device at conductance `g` switches within
/// `dt` under bias `v`: `1 - exp(-rate * overdrive * dt)`.
pub fn switch_probability(params: &MemristorParams, g: f64, v: f64, dt: f64) -> f64 {
    let hazard = if g == params.g_min && v > params.v_set {
        params.p_rate_set * (v - params.v_set) * dt
    } else if g == params.g_max && v < params.v_reset {
        params.p_rate_reset * (params.v_reset - v) * dt
    } else {
        0.0
    };
    if hazard.is_infinite() {
        1.0
    } else {
        -(-hazard).exp_m1()
    }
}

/// Applies `n` rectangular pulses of amplitude `amp` and width `width`,
/// reading the resistance at `v_read` after each one.
pub fn apply_pulse_train(
    state: MemristorState,
    params: &MemristorParams,
    amp: f64,
    width: f64,
    n: usize,
    v_read: f64,
) -> Result<(MemristorState, Vec<f64>)> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    if !params.is_subthreshold(v_read) {
        return Err(Error::DestructiveRead(v_read));
    }
    let mut state = state;
    let mut readings = Vec::with_capacity(n);
    for _ in 0..n {
        state = state.step(params, amp, width)?;
        // The read itself is a subthreshold bias and leaves g untouched.
        readings.push(v_read / state.conduct(v_read));
    }
    Ok((state, readings))
}

/// A uniformly sampled voltage drive.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl Drive {
    pub fn from_samples(dt: f64, samples: Vec<f64>) -> Self {
        Drive { dt, samples }
    }

    /// Bipolar triangle 0 → +A → 0 → −A → 0 per period.
    /// `samples_per_period` is rounded up to a multiple of 4 so that the
    /// zero crossings and peaks land exactly on samples.
    pub fn triangle(
        amplitude: f64,
        period: f64,
        samples_per_period: usize,
        periods: usize,
    ) -> Self {
        let n = samples_per_period.max(4).div_ceil(4) * 4;
        let quarter = n / 4;
        let mut samples = Vec::with_capacity(n * periods + 1);
        for _ in 0..periods {
            for k in 0..n {
                let v = if k <= quarter {
                    k as f64 / quarter as f64
                } else if k <= 3 * quarter {
                    (2 * quarter) as f64 / quarter as f64 - k as f64 / quarter as f64
                } else {
                    k as f64 / quarter as f64 - 4.0
                };
                samples.push(amplitude * v);
            }
        }
        samples.push(0.0);
        Drive {
            dt: period / n as f64,
            samples,
        }
    }

    pub fn sine(amplitude: f64, period: f64, samples_per_period: usize, periods: usize) -> Self {
        let n = samples_per_period.max(4);
        let total = n * periods;
        let samples = (0..=total)
            .map(|k| {
                if k % n == 0 {
                    0.0
                } else {
                    amplitude * (std::f64::consts::TAU * (k % n) as f64 / n as f64).sin()
                }
            })
            .collect();
        Drive {
            dt: period / n as f64,
            samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvPoint {
    pub t: f64,
    pub v: f64,
    pub i: f64,
    pub g: f64,
}

/// Steps the device through `drive`, holding each sample for one sample
/// interval and recording the current flowing at the end of it.
pub fn iv_sweep(
    state: MemristorState,
    params: &MemristorParams,
    drive: &Drive,
) -> Result<(MemristorState, Vec<IvPoint>)> {
    if drive.samples.is_empty() {
        return Err(Error::EmptyDrive);
    }
    if !(drive.dt > 0.0) {
        return Err(Error::NonPositiveStep(drive.dt));
    }
    let mut state = state;
    let mut trace = Vec::with_capacity(drive.samples.len());
    for (k, &v) in drive.samples.iter().enumerate() {
        state = state.step(params, v, drive.dt)?;
        trace.push(IvPoint {
            t: k as f64 * drive.dt,
            v,
            i: state.conduct(v),
            g: state.g,
        });
    }
    Ok((state, trace))
}

/// Total enclosed area of a (possibly pinched) I-V loop, in watts.
///
/// Each lobe is fanned from the origin and its signed area taken
/// separately; the two lobes of a pinched loop wind in opposite senses,
/// so the magnitudes are summed. With `i = g * v` the fan triangle
/// `(a.v * b.i - b.v * a.i) / 2` reduces to `a.v * b.v * (b.g - a.g) / 2`,
/// which is exactly zero wherever the conductance did not move.
pub fn hysteresis_area(trace: &[IvPoint]) -> f64 {
    let mut positive = 0.0;
    let mut negative = 0.0;
    for w in trace.windows(2) {
        let (a, b) = (w[0], w[1]);
        let cross = 0.5 * a.v * b.v * (b.g - a.g);
        if a.v + b.v >= 0.0 {
            positive += cross;
        } else {
            negative += cross;
        }
    }
    positive.abs() + negative.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn card() -> MemristorParams {
        MemristorParams {
            g_min: 1e-5,
            g_max: 1e-3,
            v_set: 1.0,
            v_reset: -1.0,
            k_set: 1e-3,
            k_reset: 1e-3,
            ..MemristorParams::default()
        }
    }

    #[test]
    fn conduct_examples() {
        let s = MemristorState { g: 1e-3 };
        assert_eq!(s.conduct(0.0), 0.0);
        assert_relative_eq!(s.conduct(0.9), 0.9e-3);
        let s = MemristorState { g: 2e-4 };
        assert_relative_eq!(s.conduct(-0.5), -0.1e-3);
    }

    #[test]
    fn drift_hand_value() {
        let p = card();
        let s = MemristorState { g: 1e-4 }.step(&p, 2.0, 1e-3).unwrap();
        // 1e-4 + 1e-3 * (2 - 1) * 1e-3
        assert_relative_eq!(s.g, 1.01e-4, max_relative = 1e-12);
    }

    #[test]
    fn subthreshold_and_saturation() {
        let p = card();
        let s = MemristorState { g: 3e-4 };
        for v in [-0.99, -0.5, 0.0, 0.5, 0.99] {
            assert_eq!(s.step(&p, v, 10.0).unwrap(), s);
        }
        let top = MemristorState::lrs(&p);
        assert_eq!(top.step(&p, 5.0, 1.0).unwrap().g, p.g_max);
        let bottom = MemristorState::hrs(&p);
        assert_eq!(bottom.step(&p, -5.0, 1.0).unwrap().g, p.g_min);
    }

    #[test]
    fn step_errors() {
        let p = card();
        let s = MemristorState { g: 3e-4 };
        assert_eq!(s.step(&p, 1.0, 0.0), Err(Error::NonPositiveStep(0.0)));
        assert!(matches!(
            s.step(&p, 1.0, -1.0),
            Err(Error::NonPositiveStep(_))
        ));
        let bistable = MemristorParams {
            mode: SwitchingMode::Bistable,
            ..p
        };
        assert!(matches!(
            s.step(&bistable, 1.0, 1.0),
            Err(Error::ModeMismatch { .. })
        ));
    }

    #[test]
    fn validate_rejects_bad_cards() {
        let ok = MemristorParams::default();
        ok.validate().unwrap();
        let bad = MemristorParams {
            g_max: ok.g_min,
            ..ok
        };
        assert_eq!(bad.validate().unwrap_err().key(), Some("g_max_S"));
        let bad = MemristorParams { v_reset: 0.5, ..ok };
        assert_eq!(bad.validate().unwrap_err().key(), Some("v_reset_V"));
        let bad = MemristorParams { k_set: -1.0, ..ok };
        assert_eq!(bad.validate().unwrap_err().key(), Some("k_set_SpVs"));
    }

    #[test]
    fn pulse_train_staircases() {
        let p = MemristorParams::default();
        let s = MemristorState::new(p.g_mid(), &p).unwrap();
        let (s, down) = apply_pulse_train(s, &p, -3.0, 1e-6, 4, 0.9).unwrap();
        assert!(down.windows(2).all(|w| w[1] > w[0]), "{down:?}");
        let (_, up) = apply_pulse_train(s, &p, 3.0, 1e-6, 4, 0.9).unwrap();
        assert!(up.windows(2).all(|w| w[1] < w[0]), "{up:?}");
        assert!(up[0] < down[3]);

        let (_, flat) = apply_pulse_train(s, &p, 1.0, 1e-6, 5, 0.9).unwrap();
        assert!(flat.iter().all(|&r| r == flat[0]));
    }

    #[test]
    fn destructive_read_rejected() {
        let p = MemristorParams::default();
        let s = MemristorState { g: p.g_mid() };
        assert_eq!(
            apply_pulse_train(s, &p, -3.0, 1e-6, 1, 2.5),
            Err(Error::DestructiveRead(2.5))
        );
        assert!(apply_pulse_train(s, &p, -3.0, 1e-6, 0, 0.9).is_err());
    }

    #[test]
    fn subthreshold_sine_has_no_loop() {
        let p = MemristorParams::default();
        let s = MemristorState { g: p.g_mid() };
        let drive = Drive::sine(1.0, 1e-3, 400, 2);
        let (end, trace) = iv_sweep(s, &p, &drive).unwrap();
        assert_eq!(end, s);
        assert!(trace.iter().all(|pt| pt.g == s.g));
        assert_eq!(hysteresis_area(&trace), 0.0);
    }

    #[test]
    fn triangle_crossing_thresholds_opens_loop() {
        let p = MemristorParams::default();
        let s = MemristorState { g: p.g_mid() };
        let drive = Drive::triangle(3.0, 4e-6, 400, 2);
        let (_, trace) = iv_sweep(s, &p, &drive).unwrap();
        assert!(hysteresis_area(&trace) > 0.0);
        let zeros: Vec<_> = trace.iter().filter(|pt| pt.v == 0.0).collect();
        assert!(zeros.len() >= 5);
        assert!(zeros.iter().all(|pt| pt.i == 0.0));
    }

    #[test]
    fn positive_sweeps_raise_conductance() {
        let p = MemristorParams::default();
        let mut s = MemristorState { g: p.g_min };
        let half: Vec<f64> = (0..=200)
            .map(|k| 3.0 * (std::f64::consts::PI * k as f64 / 200.0).sin().max(0.0))
            .collect();
        let drive = Drive::from_samples(1e-8, half);
        let mut reads = vec![];
        for _ in 0..5 {
            s = iv_sweep(s, &p, &drive).unwrap().0;
            reads.push(s.conduct(0.9));
        }
        assert!(reads.windows(2).all(|w| w[1] > w[0]), "{reads:?}");
    }

    #[test]
    fn empty_drive_rejected() {
        let p = MemristorParams::default();
        let s = MemristorState { g: p.g_mid() };
        assert_eq!(
            iv_sweep(s, &p, &Drive::from_samples(1e-6, vec![])),
            Err(Error::EmptyDrive)
        );
    }

    #[test]
    fn stochastic_limits_and_errors() {
        let p = MemristorParams {
            mode: SwitchingMode::Bistable,
            ..MemristorParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hrs = MemristorState::hrs(&p);
        for _ in 0..1000 {
            assert_eq!(hrs.stochastic_step(&p, 1.0, 1.0, &mut rng).unwrap(), hrs);
        }
        assert_eq!(switch_probability(&p, p.g_min, 1.0, 1.0), 0.0);
        let sure = MemristorParams {
            p_rate_set: f64::INFINITY,
            ..p
        };
        assert_eq!(switch_probability(&sure, p.g_min, 3.0, 1e-9), 1.0);
        assert_eq!(
            hrs.stochastic_step(&sure, 3.0, 1e-9, &mut rng).unwrap(),
            MemristorState::lrs(&p)
        );
        let mid = MemristorState { g: p.g_mid() };
        assert!(matches!(
            mid.stochastic_step(&p, 3.0, 1e-6, &mut rng),
            Err(Error::NotBistableEndpoint(_))
        ));
        let analog = MemristorParams::default();
        assert!(hrs.stochastic_step(&analog, 3.0, 1e-6, &mut rng).is_err());
    }

    #[test]
    fn stochastic_reset_mirrors_set() {
        let p = MemristorParams {
            mode: SwitchingMode::Bistable,
            ..MemristorParams::default()
        };
        let lrs = MemristorState::lrs(&p);
        assert_eq!(switch_probability(&p, p.g_max, 3.0, 1.0), 0.0);
        let hazard = p.p_rate_reset * 1.0 * 1e-6;
        assert_relative_eq!(
            switch_probability(&p, lrs.g, -3.0, 1e-6),
            1.0 - (-hazard).exp(),
            max_relative = 1e-12
        );
    }
}
