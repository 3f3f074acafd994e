//! Log-domain differential-pair-integrator synapse.
//!
//! In its linear regime the circuit is a first-order low-pass filter
//!
//! ```text
//! tau * dI_syn/dt + I_syn = I_w * I_th / I_tau,   tau = C * U_T / (kappa * I_tau)
//! ```
//!
//! driven while an input pulse is high. Between breakpoints the solution is
//! an exact exponential relaxation, so every operation here is closed form
//! and independent of any step size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DpiParams {
    #[serde(rename = "C_F")]
    pub c: f64,
    #[serde(rename = "U_T_V")]
    pub u_t: f64,
    pub kappa: f64,
    #[serde(rename = "I_tau_A")]
    pub i_tau: f64,
    #[serde(rename = "I_th_A")]
    pub i_th: f64,
    #[serde(rename = "I_w_A")]
    pub i_w: f64,
    #[serde(rename = "t_pulse_s")]
    pub t_pulse: f64,
}

impl Default for DpiParams {
    /// 1 pF, 25 mV, kappa 0.5 and 5 pA leak give a 10 ms time constant.
    fn default() -> Self {
        DpiParams {
            c: 1e-12,
            u_t: 0.025,
            kappa: 0.5,
            i_tau: 5e-12,
            i_th: 500e-12,
            i_w: 100e-12,
            t_pulse: 10e-6,
        }
    }
}

impl DpiParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("C_F", self.c),
            ("U_T_V", self.u_t),
            ("I_tau_A", self.i_tau),
            ("I_th_A", self.i_th),
            ("I_w_A", self.i_w),
            ("t_pulse_s", self.t_pulse),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::param("kappa", "must be in (0, 1]"));
        }
        Ok(())
    }

    /// `C * U_T / (kappa * I_tau)`, seconds.
    pub fn time_constant(&self) -> f64 {
        self.c * self.u_t / (self.kappa * self.i_tau)
    }

    /// Fixed point of the filter for a full-strength input, `I_w * I_th / I_tau`.
    pub fn steady_state(&self) -> f64 {
        self.i_w * self.i_th / self.i_tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DpiState {
    /// Output current, amperes.
    pub i_syn: f64,
    /// Local time, seconds.
    pub t: f64,
}

impl DpiState {
    /// Exact relaxation towards `target` over `dt`.
    pub fn relax(&self, params: &DpiParams, dt: f64, target: f64) -> Self {
        let k = (-dt / params.time_constant()).exp();
        DpiState {
            i_syn: target + (self.i_syn - target) * k,
            t: self.t + dt,
        }
    }

    pub fn decay(&self, params: &DpiParams, dt: f64) -> Result<Self> {
        if dt < 0.0 || dt.is_nan() {
            return Err(Error::NegativeStep(dt));
        }
        Ok(self.relax(params, dt, 0.0))
    }

    /// Integrates one input pulse of width `t_pulse` scaled by `g_scale`.
    pub fn on_spike(&self, params: &DpiParams, g_scale: f64) -> Result<Self> {
        check_scale(g_scale)?;
        Ok(self.relax(params, params.t_pulse, g_scale * params.steady_state()))
    }
}

fn check_scale(g_scale: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&g_scale) {
        return Err(Error::param("g_scale", format!("{g_scale} outside [0, 1]")));
    }
    Ok(())
}

/// Event-driven DPI integrator with overlapping input pulses.
///
/// The drive is the sum of all pulses currently high; it is piecewise
/// constant, and the state is advanced exactly across every pulse edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseIntegrator {
    params: DpiParams,
    state: DpiState,
    /// (end time, drive level) of pulses still high.
    active: Vec<(f64, f64)>,
}

impl SynapseIntegrator {
    pub fn new(params: DpiParams, state: DpiState) -> Self {
        SynapseIntegrator {
            params,
            state,
            active: Vec::new(),
        }
    }

    pub fn params(&self) -> &DpiParams {
        &self.params
    }

    pub fn state(&self) -> DpiState {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    fn drive(&self) -> f64 {
        self.active.iter().map(|&(_, level)| level).sum()
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.state.t {
            return Err(Error::Causality {
                component: "dpi".into(),
                event_t: t,
                local_t: self.state.t,
            });
        }
        loop {
            let next_end = self
                .active
                .iter()
                .map(|&(end, _)| end)
                .fold(f64::INFINITY, f64::min);
            if next_end > t {
                break;
            }
            let level = self.drive();
            self.state = self
                .state
                .relax(&self.params, next_end - self.state.t, level);
            self.state.t = next_end;
            self.active.retain(|&(end, _)| end > next_end);
        }
        let level = self.drive();
        self.state = self.state.relax(&self.params, t - self.state.t, level);
        self.state.t = t;
        Ok(())
    }

    /// Starts a pulse at `t` with weight `g_scale`.
    pub fn inject(&mut self, t: f64, g_scale: f64) -> Result<()> {
        check_scale(g_scale)?;
        self.advance_to(t)?;
        self.active.push((
            t + self.params.t_pulse,
            g_scale * self.params.steady_state(),
        ));
        Ok(())
    }
}

/// Sample instants `0, dt, 2dt, ...` up to and including `horizon`.
pub(crate) fn sample_times(horizon: f64, sample_dt: f64) -> Result<Vec<f64>> {
    if !(sample_dt > 0.0) {
        return Err(Error::NonPositiveStep(sample_dt));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::param("horizon_s", "must be finite and >= 0"));
    }
    let n = (horizon / sample_dt * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * sample_dt).collect())
}

/// Sampled response to weighted input spikes `(time, g_scale)`, starting
/// from rest at t = 0.
pub fn weighted_trace(
    params: &DpiParams,
    spikes: &[(f64, f64)],
    horizon: f64,
    sample_dt: f64,
) -> Result<Vec<(f64, f64)>> {
    if spikes.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::Unsorted {
            what: "spike times",
        });
    }
    if let Some(&(t, _)) = spikes.iter().find(|&&(t, _)| !(0.0..=horizon).contains(&t)) {
        return Err(Error::param(
            "spike_times_s",
            format!("{t} outside [0, {horizon}]"),
        ));
    }
    let times = sample_times(horizon, sample_dt)?;
    let mut syn = SynapseIntegrator::new(*params, DpiState::default());
    let mut next = spikes.iter().peekable();
    let mut trace = Vec::with_capacity(times.len());
    for t in times {
        while let Some(&&(ts, g)) = next.peek() {
            if ts > t {
                break;
            }
            syn.inject(ts, g)?;
            next.next();
        }
        syn.advance_to(t)?;
        trace.push((t, syn.state().i_syn));
    }
    Ok(trace)
}

/// Sampled EPSC for unit-weight spikes at `spike_times`.
pub fn epsc_trace(
    params: &DpiParams,
    spike_times: &[f64],
    horizon: f64,
    sample_dt: f64,
) -> Result<Vec<(f64, f64)>> {
    let spikes: Vec<(f64, f64)> = spike_times.iter().map(|&t| (t, 1.0)).collect();
    weighted_trace(params, &spikes, horizon, sample_dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn time_constant_examples() {
        let p = DpiParams::default();
        assert_eq!(p.time_constant(), 0.01);
        let fast = DpiParams {
            i_tau: 2.0 * p.i_tau,
            ..p
        };
        assert_relative_eq!(fast.time_constant(), 0.005, max_relative = 1e-15);
        let big = DpiParams { c: 2e-12, ..p };
        assert_relative_eq!(big.time_constant(), 0.02, max_relative = 1e-15);
    }

    #[test]
    fn decay_examples() {
        let p = DpiParams::default();
        let s = DpiState {
            i_syn: 100e-12,
            t: 0.0,
        };
        assert_eq!(s.decay(&p, 0.0).unwrap(), s);
        let d = s.decay(&p, p.time_constant()).unwrap();
        assert_relative_eq!(d.i_syn, 3.678_794_411_714_424e-11, max_relative = 1e-12);
        assert!(matches!(s.decay(&p, -1e-3), Err(Error::NegativeStep(_))));
    }

    #[test]
    fn on_spike_examples() {
        let p = DpiParams::default();
        let s = DpiState {
            i_syn: 40e-12,
            t: 0.0,
        };
        let zero = s.on_spike(&p, 0.0).unwrap();
        assert_eq!(zero, s.decay(&p, p.t_pulse).unwrap());
        let fixed = DpiState {
            i_syn: p.steady_state(),
            t: 0.0,
        };
        assert_relative_eq!(
            fixed.on_spike(&p, 1.0).unwrap().i_syn,
            p.steady_state(),
            max_relative = 1e-15
        );
        assert!(s.on_spike(&p, 1.5).is_err());
        assert!(s.on_spike(&p, -0.1).is_err());
    }

    #[test]
    fn short_pulse_matches_euler() {
        let p = DpiParams {
            t_pulse: DpiParams::default().time_constant() / 200.0,
            ..DpiParams::default()
        };
        let tau = p.time_constant();
        let exact = DpiState::default().on_spike(&p, 1.0).unwrap().i_syn;
        let approx = p.steady_state() * p.t_pulse / tau;
        assert!((exact - approx).abs() <= 0.01 * approx);
        // fine explicit Euler on the driven filter
        let h = tau / 1e6;
        let steps = (p.t_pulse / h).round() as usize;
        let mut i = 0.0;
        for _ in 0..steps {
            i += h * (p.steady_state() - i) / tau;
        }
        assert!((exact - i).abs() <= 1e-4 * exact);
    }

    #[test]
    fn integrator_matches_on_spike() {
        let p = DpiParams::default();
        let mut syn = SynapseIntegrator::new(p, DpiState::default());
        syn.inject(0.0, 0.7).unwrap();
        syn.advance_to(p.t_pulse).unwrap();
        let direct = DpiState::default().on_spike(&p, 0.7).unwrap();
        assert_eq!(syn.state().i_syn, direct.i_syn);
        assert!(syn.advance_to(0.0).is_err());
    }

    #[test]
    fn trace_edge_cases() {
        let p = DpiParams::default();
        let quiet = epsc_trace(&p, &[], 0.05, 1e-3).unwrap();
        assert_eq!(quiet.len(), 51);
        assert!(quiet.iter().all(|&(_, i)| i == 0.0));
        assert_eq!(
            epsc_trace(&p, &[0.02, 0.01], 0.05, 1e-3),
            Err(Error::Unsorted {
                what: "spike times"
            })
        );
        assert!(epsc_trace(&p, &[0.2], 0.05, 1e-3).is_err());
        assert!(epsc_trace(&p, &[0.01], 0.05, 0.0).is_err());
    }

    #[test]
    fn widely_spaced_spikes_repeat() {
        let p = DpiParams::default();
        let tau = p.time_constant();
        let dt = p.t_pulse;
        let trace = epsc_trace(&p, &[0.0, 10.0 * tau], 20.0 * tau, dt).unwrap();
        let half = trace.len() / 2;
        let peak = |s: &[(f64, f64)]| s.iter().map(|x| x.1).fold(0.0, f64::max);
        let (a, b) = (peak(&trace[..half]), peak(&trace[half..]));
        assert!((a - b).abs() < 0.01 * a);
    }
}
