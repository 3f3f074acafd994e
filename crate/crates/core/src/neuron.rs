//! Integrate-and-fire soma and the voltage template it forces on its
//! terminals while spiking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IfNeuronParams {
    #[serde(rename = "c_mem_F")]
    pub c_mem: f64,
    #[serde(rename = "i_leak_A")]
    pub i_leak: f64,
    #[serde(rename = "v_thresh_V")]
    pub v_thresh: f64,
    #[serde(rename = "v_reset_V")]
    pub v_reset: f64,
    #[serde(rename = "t_refr_s")]
    pub t_refr: f64,
    /// Spike-triggered adaptation step; 0 disables adaptation.
    #[serde(rename = "adapt_increment_A")]
    pub adapt_increment: f64,
    #[serde(rename = "tau_adapt_s")]
    pub tau_adapt: f64,
}

impl Default for IfNeuronParams {
    fn default() -> Self {
        IfNeuronParams {
            c_mem: 1e-12,
            i_leak: 0.5e-12,
            v_thresh: 0.3,
            v_reset: 0.0,
            t_refr: 2e-3,
            adapt_increment: 0.0,
            tau_adapt: 50e-3,
        }
    }
}

impl IfNeuronParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_mem > 0.0) {
            return Err(Error::param("c_mem_F", "must be > 0"));
        }
        if !(self.t_refr > 0.0) {
            return Err(Error::param("t_refr_s", "must be > 0"));
        }
        if !(self.v_thresh > self.v_reset) {
            return Err(Error::param("v_thresh_V", "must be > v_reset_V"));
        }
        if !(self.i_leak >= 0.0) {
            return Err(Error::param("i_leak_A", "must be >= 0"));
        }
        if !(self.adapt_increment >= 0.0) {
            return Err(Error::param("adapt_increment_A", "must be >= 0"));
        }
        if self.adapt_increment > 0.0 && !(self.tau_adapt > 0.0) {
            return Err(Error::param("tau_adapt_s", "must be > 0 when adapting"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IfNeuronState {
    pub v: f64,
    pub i_adapt: f64,
    /// Remaining refractory time, seconds.
    pub refractory: f64,
}

impl IfNeuronState {
    pub fn at_rest(params: &IfNeuronParams) -> Self {
        IfNeuronState {
            v: params.v_reset,
            i_adapt: 0.0,
            refractory: 0.0,
        }
    }

    /// Forward-Euler membrane update over `dt`. Returns the new state and
    /// whether the neuron fired during the step.
    ///
    /// The membrane is floored at `v_reset`.
    pub fn membrane_step(
        &self,
        params: &IfNeuronParams,
        i_in: f64,
        dt: f64,
    ) -> Result<(Self, bool)> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        let decay = if params.tau_adapt > 0.0 {
            (-dt / params.tau_adapt).exp()
        } else {
            0.0
        };
        let mut next = *self;
        next.i_adapt = self.i_adapt * decay;
        if self.refractory > 0.0 {
            next.refractory = (self.refractory - dt).max(0.0);
            return Ok((next, false));
        }
        let v = self.v + dt * (i_in - params.i_leak - self.i_adapt) / params.c_mem;
        if v >= params.v_thresh {
            next.v = params.v_reset;
            next.refractory = params.t_refr;
            next.i_adapt += params.adapt_increment;
            Ok((next, true))
        } else {
            next.v = v.max(params.v_reset);
            Ok((next, false))
        }
    }
}

/// Piecewise-linear voltage template, `v_rest` outside its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeWaveform {
    breakpoints: Vec<(f64, f64)>,
    v_rest: f64,
}

impl SpikeWaveform {
    /// Breakpoint offsets must start at 0 and increase strictly; the last
    /// breakpoint must sit at `v_rest`.
    pub fn new(breakpoints: Vec<(f64, f64)>, v_rest: f64) -> Result<Self> {
        let Some(&(first, _)) = breakpoints.first() else {
            return Err(Error::param("waveform", "needs at least one breakpoint"));
        };
        if first != 0.0 {
            return Err(Error::param("waveform", "first offset must be 0"));
        }
        if breakpoints
            .iter()
            .any(|&(t, v)| !t.is_finite() || !v.is_finite())
        {
            return Err(Error::param("waveform", "breakpoints must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::param("waveform", "offsets must increase strictly"));
        }
        if breakpoints.last().map(|b| b.1) != Some(v_rest) {
            return Err(Error::param("waveform", "must end at v_rest"));
        }
        Ok(SpikeWaveform {
            breakpoints,
            v_rest,
        })
    }

    /// Positive pulse of `v_pulse` for `t_pulse`, a linear `t_edge` swing
    /// down to `v_tail`, then a linear ramp back to `v_rest` over `t_tail`.
    /// Amplitudes are relative to `v_rest`.
    pub fn biphasic(
        v_pulse: f64,
        t_pulse: f64,
        t_edge: f64,
        v_tail: f64,
        t_tail: f64,
        v_rest: f64,
    ) -> Result<Self> {
        SpikeWaveform::new(
            vec![
                (0.0, v_rest + v_pulse),
                (t_pulse, v_rest + v_pulse),
                (t_pulse + t_edge, v_rest + v_tail),
                (t_pulse + t_edge + t_tail, v_rest),
            ],
            v_rest,
        )
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn v_rest(&self) -> f64 {
        self.v_rest
    }

    /// Last breakpoint offset.
    pub fn duration(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.0)
    }

    /// Shortest breakpoint-to-breakpoint segment (the full duration for a
    /// single-breakpoint template).
    pub fn shortest_segment(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest excursion from `v_rest`.
    pub fn peak_excursion(&self) -> f64 {
        self.breakpoints
            .iter()
            .map(|&(_, v)| (v - self.v_rest).abs())
            .fold(0.0, f64::max)
    }

    pub fn voltage(&self, t_since_spike: f64) -> f64 {
        let bp = &self.breakpoints;
        if !(t_since_spike >= 0.0) || t_since_spike > self.duration() {
            return self.v_rest;
        }
        // first breakpoint with offset > t
        let idx = bp.partition_point(|&(t, _)| t <= t_since_spike);
        if idx == bp.len() {
            return bp[idx - 1].1;
        }
        let (t0, v0) = bp[idx - 1];
        let (t1, v1) = bp[idx];
        if t_since_spike == t0 {
            return v0;
        }
        v0 + (v1 - v0) * (t_since_spike - t0) / (t1 - t0)
    }

    /// Same template with every excursion from rest negated.
    pub fn inverted(&self) -> Self {
        SpikeWaveform {
            breakpoints: self
                .breakpoints
                .iter()
                .map(|&(t, v)| (t, 2.0 * self.v_rest - v))
                .collect(),
            v_rest: self.v_rest,
        }
    }

    /// Parses `t_offset_s:v_V` pairs.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[S], v_rest: f64) -> Result<Self> {
        let mut breakpoints = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let pair = pair.as_ref();
            let parsed = pair.split_once(':').and_then(|(t, v)| {
                Some((t.trim().parse::<f64>().ok()?, v.trim().parse::<f64>().ok()?))
            });
            match parsed {
                Some(bp) => breakpoints.push(bp),
                None => {
                    return Err(Error::param(
                        "waveform",
                        format!("`{pair}` is not a t_offset_s:v_V pair"),
                    ))
                }
            }
        }
        SpikeWaveform::new(breakpoints, v_rest)
    }

    pub fn to_pairs(&self) -> Vec<String> {
        self.breakpoints
            .iter()
            .map(|&(t, v)| format!("{t:e}:{v:e}"))
            .collect()
    }
}

impl Default for SpikeWaveform {
    /// +1.8 V for 1 µs, 0.2 µs swing to -0.9 V, linear return to 0 V over 10 µs.
    fn default() -> Self {
        SpikeWaveform::biphasic(1.8, 1e-6, 0.2e-6, -0.9, 10e-6, 0.0)
            .expect("default waveform is well formed")
    }
}
