//! Spike-timing-dependent plasticity from overlapping terminal waveforms.
//!
//! A memristor sits between a pre-synaptic neuron's output terminal and a
//! post-synaptic neuron's input terminal. Each neuron forces its spike
//! template on its terminal; the device sees the difference. A lone
//! template stays below both switching thresholds, so only overlapping
//! pairs drive the conductance, and the timing of the overlap decides the
//! sign and size of the update.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{MemristorParams, MemristorState};
use crate::error::{Error, Result};
use crate::neuron::SpikeWaveform;

/// Voltage across the device at time `t` (pre-spike at 0, post-spike at
/// `delta_t`): `v_post(t - delta_t) - v_pre(t)`.
pub fn pair_voltage(pre: &SpikeWaveform, post: &SpikeWaveform, delta_t: f64, t: f64) -> f64 {
    post.voltage(t - delta_t) - pre.voltage(t)
}

/// Time span over which either template departs from rest.
pub fn pair_window(pre: &SpikeWaveform, post: &SpikeWaveform, delta_t: f64) -> (f64, f64) {
    (
        delta_t.min(0.0),
        pre.duration().max(delta_t + post.duration()),
    )
}

/// Drifts the device through one pre/post pair with a fixed-step midpoint
/// rule. Returns the final state and the net conductance change.
pub fn weight_update(
    state: MemristorState,
    params: &MemristorParams,
    pre: &SpikeWaveform,
    post: &SpikeWaveform,
    delta_t: f64,
    dt_int: f64,
) -> Result<(MemristorState, f64)> {
    if !(dt_int > 0.0) {
        return Err(Error::NonPositiveStep(dt_int));
    }
    let (start, end) = pair_window(pre, post, delta_t);
    let n = ((end - start) / dt_int).ceil() as usize;
    let mut s = state;
    for k in 0..n {
        let t0 = start + k as f64 * dt_int;
        let t1 = (start + (k + 1) as f64 * dt_int).min(end);
        let h = t1 - t0;
        if h <= 0.0 {
            continue;
        }
        let v = pair_voltage(pre, post, delta_t, t0 + 0.5 * h);
        s = s.step(params, v, h)?;
    }
    Ok((s, s.g - state.g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StdpProbe {
    pub pre_wave: SpikeWaveform,
    pub post_wave: SpikeWaveform,
    pub dt_int: f64,
    pub delta_t_grid: Vec<f64>,
}

impl Default for StdpProbe {
    /// Default templates, 10 ns steps, ΔT from -15 µs to 15 µs every 0.25 µs.
    fn default() -> Self {
        StdpProbe {
            pre_wave: SpikeWaveform::default(),
            post_wave: SpikeWaveform::default(),
            dt_int: 10e-9,
            delta_t_grid: uniform_grid(15e-6, 0.25e-6),
        }
    }
}

/// Symmetric grid `k * step` for |k * step| <= half_span; contains 0 exactly.
pub fn uniform_grid(half_span: f64, step: f64) -> Vec<f64> {
    let k = (half_span / step * (1.0 + 1e-12)).floor() as i64;
    (-k..=k).map(|i| i as f64 * step).collect()
}

impl StdpProbe {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_int > 0.0) {
            return Err(Error::param("dt_int_s", "must be > 0"));
        }
        let shortest = self
            .pre_wave
            .shortest_segment()
            .min(self.post_wave.shortest_segment());
        if self.dt_int > shortest / 10.0 * (1.0 + 1e-9) {
            return Err(Error::param(
                "dt_int_s",
                format!(
                    "must be <= {:e} (1/10 of the shortest waveform segment)",
                    shortest / 10.0
                ),
            ));
        }
        if self.delta_t_grid.is_empty() {
            return Err(Error::param("delta_t_grid", "must not be empty"));
        }
        Ok(())
    }

    /// ΔT beyond which the two templates cannot overlap.
    pub fn support(&self) -> f64 {
        self.pre_wave.duration() + self.post_wave.duration()
    }
}

/// ξ(ΔT): net conductance change from a fresh device at `g_init` for each
/// grid point. Points are independent and evaluated in parallel.
pub fn stdp_curve(
    probe: &StdpProbe,
    params: &MemristorParams,
    g_init: f64,
) -> Result<Vec<(f64, f64)>> {
    probe.validate()?;
    let start = MemristorState::new(g_init, params)?;
    probe
        .delta_t_grid
        .par_iter()
        .map(|&dt| {
            weight_update(
                start,
                params,
                &probe.pre_wave,
                &probe.post_wave,
                dt,
                probe.dt_int,
            )
            .map(|(_, xi)| (dt, xi))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_voltage_cases() {
        let w = SpikeWaveform::default();
        assert_eq!(pair_voltage(&w, &w, 0.0, -1.0), 0.0);
        for k in 0..200 {
            let t = k as f64 * 0.1e-6 - 2e-6;
            assert_eq!(pair_voltage(&w, &w, 0.0, t), 0.0);
        }
        let far = 1.0;
        let max = (0..2000)
            .map(|k| k as f64 * 1e-8)
            .map(|t| pair_voltage(&w, &w, far, t).abs())
            .fold(0.0, f64::max);
        assert!((max - w.peak_excursion()).abs() < 1e-12);
        let up = SpikeWaveform::new(vec![(0.0, 0.5), (1e-6, 0.5), (2e-6, 0.2)], 0.2).unwrap();
        assert!((pair_voltage(&w, &up, 0.0, 5.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn lone_spikes_never_write() {
        let params = MemristorParams::default();
        let w = SpikeWaveform::default();
        assert!(w.peak_excursion() < params.v_set.min(-params.v_reset));
        let s = MemristorState { g: params.g_mid() };
        for dt in [-30e-6, -12e-6, 12e-6, 1e-3] {
            let (_, dg) = weight_update(s, &params, &w, &w, dt, 10e-9).unwrap();
            assert_eq!(dg, 0.0);
        }
    }

    #[test]
    fn small_positive_delay_potentiates() {
        let params = MemristorParams::default();
        let w = SpikeWaveform::default();
        let s = MemristorState { g: params.g_mid() };
        let (_, dg) = weight_update(s, &params, &w, &w, 1e-6, 10e-9).unwrap();
        assert!(dg > 0.0);
        let (_, dg) = weight_update(s, &params, &w, &w, -1e-6, 10e-9).unwrap();
        assert!(dg < 0.0);
    }

    #[test]
    fn probe_validation() {
        let mut probe = StdpProbe::default();
        probe.validate().unwrap();
        probe.dt_int = 1e-7;
        assert_eq!(probe.validate().unwrap_err().key(), Some("dt_int_s"));
        let probe = StdpProbe {
            delta_t_grid: vec![],
            ..StdpProbe::default()
        };
        assert!(probe.validate().is_err());
    }

    #[test]
    fn grid_contains_zero() {
        let g = uniform_grid(15e-6, 0.25e-6);
        assert_eq!(g.len(), 121);
        assert_eq!(g[60], 0.0);
        assert_eq!(g[0], -g[120]);
    }
}
