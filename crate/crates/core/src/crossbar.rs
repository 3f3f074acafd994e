//! Memristive synapse arrays.
//!
//! [`HybridSynapseBank`] is the read path of a row of memristors sharing
//! one DPI integrator: each branch scales the pulse it injects by its
//! normalized conductance, and all branches share the temporal dynamics.
//! [`CrossbarConfig`] carries the lumped electrode-resistance model used
//! to estimate how far a cell's effective write voltage sags with its
//! position in the array.

use serde::{Deserialize, Serialize};

use crate::device::{MemristorParams, MemristorState};
use crate::dpi::{weighted_trace, DpiParams, DpiState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HybridSynapseBank {
    branches: Vec<MemristorState>,
    device: MemristorParams,
    dpi: DpiParams,
    state: DpiState,
    g_ref: f64,
}

impl HybridSynapseBank {
    /// A bank with every branch at `g_init`, normalized by `g_max`.
    pub fn uniform(n: usize, g_init: f64, device: MemristorParams, dpi: DpiParams) -> Result<Self> {
        let branch = MemristorState::new(g_init, &device)?;
        Self::new(vec![branch; n], device, dpi, device.g_max)
    }

    pub fn new(
        branches: Vec<MemristorState>,
        device: MemristorParams,
        dpi: DpiParams,
        g_ref: f64,
    ) -> Result<Self> {
        device.validate()?;
        dpi.validate()?;
        if branches.is_empty() {
            return Err(Error::param("n_branches", "must be >= 1"));
        }
        if !(g_ref > 0.0 && g_ref.is_finite()) {
            return Err(Error::param("g_ref_S", "must be finite and > 0"));
        }
        for b in &branches {
            MemristorState::new(b.g, &device)?;
        }
        Ok(HybridSynapseBank {
            branches,
            device,
            dpi,
            state: DpiState::default(),
            g_ref,
        })
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn branches(&self) -> &[MemristorState] {
        &self.branches
    }

    pub fn device(&self) -> &MemristorParams {
        &self.device
    }

    pub fn dpi(&self) -> &DpiParams {
        &self.dpi
    }

    pub fn state(&self) -> DpiState {
        self.state
    }

    pub fn g_ref(&self) -> f64 {
        self.g_ref
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.branches.len() {
            return Err(Error::IndexOutOfRange {
                what: "branch",
                index,
                len: self.branches.len(),
            });
        }
        Ok(())
    }

    /// Sets a branch conductance; must lie inside the device window.
    pub fn set_branch(&mut self, index: usize, g: f64) -> Result<()> {
        self.check_index(index)?;
        self.branches[index] = MemristorState::new(g, &self.device)?;
        Ok(())
    }

    pub fn replace_branch(&mut self, index: usize, state: MemristorState) -> Result<()> {
        self.set_branch(index, state.g)
    }

    /// Pulse weight for a conductance: `g / g_ref` clamped to `[0, 1]`.
    pub fn scale_for(&self, g: f64) -> f64 {
        (g / self.g_ref).clamp(0.0, 1.0)
    }

    pub fn g_scale(&self, index: usize) -> Result<f64> {
        self.check_index(index)?;
        Ok(self.scale_for(self.branches[index].g))
    }

    /// Pushes one pre-synaptic pulse through branch `index` into the
    /// shared integrator, advancing the bank by one pulse width.
    pub fn on_pre_spike(&mut self, index: usize) -> Result<()> {
        let g_scale = self.g_scale(index)?;
        self.state = self.state.on_spike(&self.dpi, g_scale)?;
        Ok(())
    }

    pub fn decay(&mut self, dt: f64) -> Result<()> {
        self.state = self.state.decay(&self.dpi, dt)?;
        Ok(())
    }

    /// Shared-DPI output for spikes `(time, branch)` starting from rest.
    pub fn epsc_trace(
        &self,
        spikes: &[(f64, usize)],
        horizon: f64,
        sample_dt: f64,
    ) -> Result<Vec<(f64, f64)>> {
        let weighted = spikes
            .iter()
            .map(|&(t, b)| self.g_scale(b).map(|g| (t, g)))
            .collect::<Result<Vec<_>>>()?;
        weighted_trace(&self.dpi, &weighted, horizon, sample_dt)
    }

    /// Peak EPSC of a single spike through a branch of conductance `g`.
    /// The peak sits at the end of the input pulse.
    pub fn peak_for_conductance(&self, g: f64) -> Result<f64> {
        Ok(self.state.on_spike(&self.dpi, self.scale_for(g))?.i_syn)
    }
}

/// Peak EPSC against branch resistance, one spike per resistance value.
///
/// The resistance is probed directly through the pulse weight, so values
/// outside the device window are allowed (r → ∞ drives the peak to 0).
pub fn epsc_vs_resistance(bank: &HybridSynapseBank, r_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    r_values
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(Error::param("r_values_Ohm", format!("{r} is not positive")));
            }
            Ok((r, bank.peak_for_conductance(1.0 / r)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    /// Electrode resistance per cell pitch.
    #[serde(rename = "r_wire_Ohm")]
    pub r_wire: f64,
    #[serde(rename = "r_device_nominal_Ohm")]
    pub r_device_nominal: f64,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        CrossbarConfig {
            rows: 256,
            cols: 256,
            r_wire: 5.0,
            r_device_nominal: 5000.0,
        }
    }
}

impl CrossbarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::param("rows", "must be >= 1"));
        }
        if self.cols == 0 {
            return Err(Error::param("cols", "must be >= 1"));
        }
        if !(self.r_wire >= 0.0 && self.r_wire.is_finite()) {
            return Err(Error::param("r_wire_Ohm", "must be finite and >= 0"));
        }
        if !(self.r_device_nominal > 0.0 && self.r_device_nominal.is_finite()) {
            return Err(Error::param(
                "r_device_nominal_Ohm",
                "must be finite and > 0",
            ));
        }
        Ok(())
    }

    /// Voltage reaching cell `(i, j)` when `v_applied` is driven from the
    /// row and column origins through `i + 1` and `j + 1` wire segments.
    pub fn effective_write_voltage(&self, i: usize, j: usize, v_applied: f64) -> Result<f64> {
        if i >= self.rows {
            return Err(Error::IndexOutOfRange {
                what: "row",
                index: i,
                len: self.rows,
            });
        }
        if j >= self.cols {
            return Err(Error::IndexOutOfRange {
                what: "col",
                index: j,
                len: self.cols,
            });
        }
        let wire = (i + 1) as f64 * self.r_wire + (j + 1) as f64 * self.r_wire;
        Ok(v_applied * self.r_device_nominal / (self.r_device_nominal + wire))
    }

    /// `rows x cols` map of effective write voltages, row-major.
    pub fn offset_map(&self, v_applied: f64) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| {
                        self.effective_write_voltage(i, j, v_applied)
                            .expect("indices in range")
                    })
                    .collect()
            })
            .collect()
    }

    /// Applies one write pulse to the device at `(i, j)` through the
    /// electrode divider.
    pub fn program_cell(
        &self,
        device: &MemristorParams,
        state: MemristorState,
        i: usize,
        j: usize,
        v_applied: f64,
        width: f64,
    ) -> Result<MemristorState> {
        let v = self.effective_write_voltage(i, j, v_applied)?;
        state.step(device, v, width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bank(n: usize) -> HybridSynapseBank {
        let device = MemristorParams::default();
        HybridSynapseBank::uniform(n, device.g_max, device, DpiParams::default()).unwrap()
    }

    #[test]
    fn reference_branch_matches_bare_dpi() {
        let mut b = bank(3);
        b.on_pre_spike(1).unwrap();
        let bare = DpiState::default()
            .on_spike(&DpiParams::default(), 1.0)
            .unwrap();
        assert_eq!(b.state(), bare);
        assert!(matches!(
            b.on_pre_spike(3),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn halving_conductance_halves_peak() {
        let device = MemristorParams::default();
        let g = 8e-4;
        let mut full = HybridSynapseBank::uniform(1, g, device, DpiParams::default()).unwrap();
        let mut half =
            HybridSynapseBank::uniform(1, g / 2.0, device, DpiParams::default()).unwrap();
        full.on_pre_spike(0).unwrap();
        half.on_pre_spike(0).unwrap();
        assert_relative_eq!(
            half.state().i_syn,
            full.state().i_syn / 2.0,
            max_relative = 1e-6
        );
    }

    #[test]
    fn sweep_cases() {
        let b = bank(1);
        let peaks = epsc_vs_resistance(&b, &[1e3, 3e3, 5e3, 7e3]).unwrap();
        assert!(peaks.windows(2).all(|w| w[1].1 < w[0].1));
        let single = epsc_vs_resistance(&b, &[2e3]).unwrap();
        let mut direct = b.clone();
        direct.set_branch(0, 1.0 / 2e3).unwrap();
        direct.on_pre_spike(0).unwrap();
        assert_eq!(single[0].1, direct.state().i_syn);
        let far = epsc_vs_resistance(&b, &[1e15]).unwrap();
        assert!(far[0].1 < 1e-9 * peaks[0].1);
        assert!(epsc_vs_resistance(&b, &[0.0]).is_err());
        assert!(epsc_vs_resistance(&b, &[-1.0]).is_err());
    }

    #[test]
    fn bank_construction_errors() {
        let device = MemristorParams::default();
        let dpi = DpiParams::default();
        assert!(HybridSynapseBank::new(vec![], device, dpi, 1e-3).is_err());
        let s = MemristorState { g: device.g_max };
        assert!(HybridSynapseBank::new(vec![s], device, dpi, 0.0).is_err());
        let out = MemristorState { g: 1.0 };
        assert!(HybridSynapseBank::new(vec![out], device, dpi, 1e-3).is_err());
        let mut b = bank(2);
        assert!(b.set_branch(0, 10.0).is_err());
    }

    #[test]
    fn divider_examples() {
        let cfg = CrossbarConfig::default();
        let corner = cfg.effective_write_voltage(255, 255, 1.0).unwrap();
        assert_relative_eq!(
            corner,
            5000.0 / (5000.0 + 2.0 * 256.0 * 5.0),
            max_relative = 1e-15
        );
        assert!((corner - 0.661).abs() < 5e-4);
        assert!(cfg.effective_write_voltage(0, 0, 1.0).unwrap() > corner);
        let ideal = CrossbarConfig { r_wire: 0.0, ..cfg };
        assert!(ideal.offset_map(-3.0).iter().flatten().all(|&v| v == -3.0));
        assert!(cfg.effective_write_voltage(256, 0, 1.0).is_err());
        assert!(cfg.effective_write_voltage(0, 256, 1.0).is_err());
    }

    #[test]
    fn far_cells_program_less() {
        let cfg = CrossbarConfig {
            rows: 64,
            cols: 64,
            r_wire: 5.0,
            r_device_nominal: 2000.0,
        };
        let device = MemristorParams::default();
        let s = MemristorState { g: device.g_mid() };
        let near = cfg.program_cell(&device, s, 0, 0, 3.0, 1e-6).unwrap().g - s.g;
        let far = cfg.program_cell(&device, s, 63, 63, 3.0, 1e-6).unwrap().g - s.g;
        assert!(near > 0.0);
        assert!(far <= near);
    }
}
