//! Address-event transport between chips on a board.
//!
//! Closed-form traffic and power budgets for a 2D mesh of chips, plus a
//! discrete-event simulator ([`mesh`]) that routes individual address
//! events hop by hop over bandwidth-limited links.

pub mod mesh;

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::fmt_f64;

pub use mesh::{route_events, Delivery, MeshRun, MeshStats, RouteOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoardSpec {
    pub n_ch: usize,
    pub mesh_rows: usize,
    pub mesh_cols: usize,
    /// Per-link bandwidth, events/s.
    #[serde(rename = "e_pp_eps")]
    pub e_pp: f64,
    pub neurons_per_chip: f64,
    /// Link supply current drawn at `rate_ref`.
    #[serde(rename = "link_current_ref_A")]
    pub link_current_ref: f64,
    #[serde(rename = "rate_ref_eps")]
    pub rate_ref: f64,
    #[serde(rename = "v_supply_min_V")]
    pub v_supply_min: f64,
    #[serde(rename = "v_supply_max_V")]
    pub v_supply_max: f64,
    /// Bandwidth of each off-board port on the mesh boundary.
    #[serde(rename = "edge_port_eps")]
    pub edge_port: f64,
}

impl Default for BoardSpec {
    /// 100 chips in a 10x10 mesh, 100 Meps links, 1M neurons per chip,
    /// 40 mA per link at 10 Meps, 1-2 V supply.
    fn default() -> Self {
        BoardSpec {
            n_ch: 100,
            mesh_rows: 10,
            mesh_cols: 10,
            e_pp: 1e8,
            neurons_per_chip: 1e6,
            link_current_ref: 40e-3,
            rate_ref: 1e7,
            v_supply_min: 1.0,
            v_supply_max: 2.0,
            edge_port: 1e8,
        }
    }
}

impl BoardSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_ch == 0 {
            return Err(Error::param("n_ch", "must be >= 1"));
        }
        if self.mesh_rows * self.mesh_cols != self.n_ch {
            return Err(Error::param(
                "mesh_rows",
                "mesh_rows * mesh_cols must equal n_ch",
            ));
        }
        for (name, value) in [
            ("e_pp_eps", self.e_pp),
            ("rate_ref_eps", self.rate_ref),
            ("edge_port_eps", self.edge_port),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        if !(self.neurons_per_chip >= 0.0) {
            return Err(Error::param("neurons_per_chip", "must be >= 0"));
        }
        if !(self.link_current_ref >= 0.0) {
            return Err(Error::param("link_current_ref_A", "must be >= 0"));
        }
        if !(self.v_supply_min > 0.0 && self.v_supply_max >= self.v_supply_min) {
            return Err(Error::param(
                "v_supply_max_V",
                "supply range must be 0 < min <= max",
            ));
        }
        Ok(())
    }

    /// A square-ish mesh for `n_ch` chips with the remaining fields default.
    pub fn for_chips(n_ch: usize, e_pp: f64) -> Self {
        let mut rows = (n_ch as f64).sqrt().floor() as usize;
        while rows > 1 && !n_ch.is_multiple_of(rows) {
            rows -= 1;
        }
        let rows = rows.max(1);
        BoardSpec {
            n_ch,
            mesh_rows: rows,
            mesh_cols: n_ch / rows,
            e_pp,
            edge_port: e_pp,
            ..BoardSpec::default()
        }
    }

    pub fn neurons_per_board(&self) -> f64 {
        self.n_ch as f64 * self.neurons_per_chip
    }

    /// Directed chip-to-chip links inside the mesh.
    pub fn internal_links(&self) -> usize {
        2 * (self.mesh_rows * (self.mesh_cols - 1) + self.mesh_cols * (self.mesh_rows - 1))
    }

    /// Outward-facing ports on the mesh boundary (one per missing neighbor).
    pub fn edge_ports(&self) -> usize {
        4 * self.n_ch - self.internal_links()
    }

    /// Capacity actually present: internal links at `e_pp` plus boundary
    /// ports at `edge_port`.
    pub fn edge_aware_capacity(&self) -> MeshCapacity {
        MeshCapacity {
            internal_eps: self.internal_links() as f64 * self.e_pp,
            edge_port_eps: self.edge_ports() as f64 * self.edge_port,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshCapacity {
    pub internal_eps: f64,
    pub edge_port_eps: f64,
}

/// Board-level inter-chip traffic, `4 * n_ch * e_pp` events/s.
pub fn board_traffic(n_ch: f64, e_pp: f64) -> f64 {
    4.0 * n_ch * e_pp
}

/// Share of the board traffic available to each neuron.
pub fn per_neuron_share(traffic: f64, neurons_per_board: f64) -> f64 {
    traffic / neurons_per_board
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommPower {
    #[serde(rename = "chip_event_rate_eps")]
    pub chip_event_rate: f64,
    #[serde(rename = "chip_current_A")]
    pub chip_current: f64,
    #[serde(rename = "chip_power_min_W")]
    pub chip_power_min: f64,
    #[serde(rename = "chip_power_max_W")]
    pub chip_power_max: f64,
    #[serde(rename = "board_power_min_W")]
    pub board_power_min: f64,
    #[serde(rename = "board_power_max_W")]
    pub board_power_max: f64,
}

/// Communication overhead when every neuron fires at `avg_rate` Hz; link
/// current scales linearly with event rate from the reference point.
pub fn comm_power(spec: &BoardSpec, avg_rate: f64) -> Result<CommPower> {
    if !(avg_rate >= 0.0) {
        return Err(Error::param("avg_rate_hz", "must be >= 0"));
    }
    let rate = spec.neurons_per_chip * avg_rate;
    let current = spec.link_current_ref * rate / spec.rate_ref;
    let n = spec.n_ch as f64;
    Ok(CommPower {
        chip_event_rate: rate,
        chip_current: current,
        chip_power_min: current * spec.v_supply_min,
        chip_power_max: current * spec.v_supply_max,
        board_power_min: n * current * spec.v_supply_min,
        board_power_max: n * current * spec.v_supply_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChipCoord {
    pub row: usize,
    pub col: usize,
}

impl ChipCoord {
    pub fn new(row: usize, col: usize) -> Self {
        ChipCoord { row, col }
    }

    pub fn hops_to(&self, other: &ChipCoord) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AddressEvent {
    pub t: f64,
    pub source_chip: ChipCoord,
    pub source_neuron: u64,
    pub dest_chip: ChipCoord,
    pub dest_neuron: u64,
}

pub const EVENT_CSV_HEADER: &str = "t_s,src_r,src_c,src_n,dst_r,dst_c,dst_n";

impl AddressEvent {
    /// One line in [`EVENT_CSV_HEADER`] column order, without newline.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(self.t),
            self.source_chip.row,
            self.source_chip.col,
            self.source_neuron,
            self.dest_chip.row,
            self.dest_chip.col,
            self.dest_neuron
        )
    }
}

pub fn write_events_csv<W: Write>(out: &mut W, events: &[AddressEvent]) -> std::io::Result<()> {
    writeln!(out, "{EVENT_CSV_HEADER}")?;
    for e in events {
        writeln!(out, "{}", e.csv_row())?;
    }
    Ok(())
}

pub fn read_events_csv<R: BufRead>(input: R) -> Result<Vec<AddressEvent>> {
    let mut lines = input.lines();
    let bad = |line: usize, message: String| Error::Config {
        key: format!("events:{line}"),
        message,
    };
    match lines.next() {
        Some(Ok(h)) if h.trim() == EVENT_CSV_HEADER => {}
        _ => return Err(bad(1, format!("expected header `{EVENT_CSV_HEADER}`"))),
    }
    let mut events = Vec::new();
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        let line = line.map_err(|e| bad(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(bad(line_no, format!("expected 7 fields, got {}", f.len())));
        }
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| bad(line_no, format!("`{s}`: {e}")))
        };
        let t = f[0]
            .parse::<f64>()
            .map_err(|e| bad(line_no, format!("`{}`: {e}", f[0])))?;
        events.push(AddressEvent {
            t,
            source_chip: ChipCoord::new(int(f[1])? as usize, int(f[2])? as usize),
            source_neuron: int(f[3])?,
            dest_chip: ChipCoord::new(int(f[4])? as usize, int(f[5])? as usize),
            dest_neuron: int(f[6])?,
        });
    }
    Ok(events)
}

/// Mean Manhattan distance between two chips drawn uniformly (with
/// replacement) from the mesh.
pub fn mean_uniform_hops(spec: &BoardSpec) -> f64 {
    let axis = |k: usize| {
        let k = k as f64;
        (k * k - 1.0) / (3.0 * k)
    };
    axis(spec.mesh_rows) + axis(spec.mesh_cols)
}

/// Poisson stream of `n_events` events with uniformly random source and
/// destination chips and neurons.
///
/// The injection rate is chosen so that the expected hop traffic summed
/// over all links equals `load_fraction * board_traffic`.
pub fn uniform_traffic(
    spec: &BoardSpec,
    load_fraction: f64,
    n_events: usize,
    seed: u64,
) -> Result<Vec<AddressEvent>> {
    spec.validate()?;
    if !(load_fraction > 0.0 && load_fraction.is_finite()) {
        return Err(Error::param("load_fraction", "must be finite and > 0"));
    }
    let link_traffic = load_fraction * board_traffic(spec.n_ch as f64, spec.e_pp);
    let hops = mean_uniform_hops(spec);
    // single-chip mesh: no links, inject at the nominal rate
    let injection = if hops > 0.0 {
        link_traffic / hops
    } else {
        link_traffic
    };
    let gaps = Exp::new(injection).map_err(|e| Error::param("load_fraction", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let neurons = spec.neurons_per_chip.max(1.0) as u64;
    let mut t = 0.0;
    let mut events = Vec::with_capacity(n_events);
    for _ in 0..n_events {
        t += gaps.sample(&mut rng);
        let chip = |rng: &mut ChaCha8Rng| {
            ChipCoord::new(
                rng.random_range(0..spec.mesh_rows),
                rng.random_range(0..spec.mesh_cols),
            )
        };
        let source_chip = chip(&mut rng);
        let dest_chip = chip(&mut rng);
        events.push(AddressEvent {
            t,
            source_chip,
            source_neuron: rng.random_range(0..neurons),
            dest_chip,
            dest_neuron: rng.random_range(0..neurons),
        });
    }
    Ok(events)
}
