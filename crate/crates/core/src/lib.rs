//! Event-driven behavioral simulation of hybrid memristor-CMOS
//! neuromorphic hardware.
//!
//! * [`device`]: threshold-drift memristor with analog and stochastic
//!   bistable modes.
//! * [`dpi`]: closed-form DPI synapse dynamics.
//! * [`neuron`]: integrate-and-fire soma and spike voltage templates.
//! * [`stdp`]: plasticity from overlapping pre/post waveforms.
//! * [`crossbar`]: shared-DPI synapse banks and electrode IR drop.
//! * [`aer`]: address-event traffic budgets and mesh routing.
//! * [`engine`]: the event scheduler, mismatch populations and
//!   experiment files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aer;
pub mod config;
pub mod crossbar;
pub mod device;
pub mod dpi;
pub mod engine;
pub mod error;
pub mod neuron;
pub mod report;
pub mod stdp;

pub use aer::{
    board_traffic, comm_power, per_neuron_share, AddressEvent, BoardSpec, ChipCoord, CommPower,
    MeshStats,
};
pub use crossbar::{epsc_vs_resistance, CrossbarConfig, HybridSynapseBank};
pub use device::{MemristorParams, MemristorState, SwitchingMode};
pub use dpi::{epsc_trace, DpiParams, DpiState};
pub use engine::{run, Experiment, MismatchSpec, RunResults};
pub use error::{Error, Result};
pub use neuron::{IfNeuronParams, IfNeuronState, SpikeWaveform};
pub use stdp::{stdp_curve, weight_update, StdpProbe};
