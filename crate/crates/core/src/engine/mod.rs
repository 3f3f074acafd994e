//! Deterministic event-driven scheduler.
//!
//! One global queue ordered by `(time, insertion sequence)` carries input
//! spikes, neuron ticks and recording instants. Synapse banks integrate
//! their shared DPI state exactly between events; neuron membranes are
//! stepped on a fixed tick; plastic branches are updated per pre/post pair
//! from the neurons' terminal waveforms. Inter-chip spikes pick up the
//! uncontended mesh latency when neurons are placed on a board.

pub mod mismatch;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::aer::{BoardSpec, ChipCoord};
use crate::config::{from_value, in_section, WaveformSection};
use crate::crossbar::CrossbarConfig;
use crate::device::{MemristorParams, MemristorState};
use crate::dpi::{DpiParams, DpiState, SynapseIntegrator};
use crate::error::{Error, Result};
use crate::neuron::{IfNeuronParams, IfNeuronState, SpikeWaveform};
use crate::report::{fmt_f64, write_csv};
use crate::stdp::weight_update;

pub use mismatch::{
    draw_population, mean_std, population_epsp, MismatchSpec, PopulationTrace, Spread,
};

/// `[experiment]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSettings {
    pub duration_s: f64,
    pub seed: Option<u64>,
    /// Membrane integration tick.
    pub dt_s: f64,
    pub record_dt_s: f64,
    /// Trace keys: `v:<neuron>`, `isyn:<bank>`, `g:<bank>:<branch>`.
    pub record: Vec<String>,
    /// Integration step for pair-based weight updates.
    pub stdp_dt_int_s: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            duration_s: 0.1,
            seed: None,
            dt_s: 1e-5,
            record_dt_s: 1e-4,
            record: Vec::new(),
            stdp_dt_int_s: 10e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronSpec {
    pub id: String,
    #[serde(default)]
    pub params: IfNeuronParams,
    /// Terminal waveform as `t_offset_s:v_V` pairs; defaults to `[waveform].post`.
    #[serde(default)]
    pub waveform: Option<Vec<String>>,
    #[serde(default)]
    pub chip: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankSpec {
    pub id: String,
    /// Neuron receiving this bank's current.
    pub target: String,
    #[serde(rename = "branches_S")]
    pub branches: Vec<f64>,
    #[serde(rename = "g_ref_S", default)]
    pub g_ref: Option<f64>,
    #[serde(default)]
    pub plastic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub bank: String,
    #[serde(default)]
    pub branch: usize,
    pub times_s: Vec<f64>,
    #[serde(default)]
    pub chip: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSpec {
    pub from: String,
    pub bank: String,
    #[serde(default)]
    pub branch: usize,
    #[serde(default)]
    pub delay_s: f64,
}

/// A complete, self-describing simulation run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    #[serde(rename = "experiment")]
    pub settings: RunSettings,
    pub device: MemristorParams,
    pub dpi: DpiParams,
    pub waveform: WaveformSection,
    #[serde(rename = "neuron")]
    pub neurons: Vec<NeuronSpec>,
    #[serde(rename = "bank")]
    pub banks: Vec<BankSpec>,
    #[serde(rename = "input")]
    pub inputs: Vec<InputSpec>,
    #[serde(rename = "connection")]
    pub connections: Vec<ConnectionSpec>,
    pub mismatch: Option<MismatchSpec>,
    pub board: Option<BoardSpec>,
    /// Accepted so one file can drive every command; banks are ideal.
    pub crossbar: Option<CrossbarConfig>,
}

impl Experiment {
    pub fn from_table(table: &Table) -> Result<Self> {
        let exp: Experiment = from_value("", Value::Table(table.clone()))?;
        exp.validate()?;
        Ok(exp)
    }

    pub fn seed(&self) -> u64 {
        self.settings.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        if !(s.duration_s > 0.0 && s.duration_s.is_finite()) {
            return Err(cfg("experiment.duration_s", "must be finite and > 0"));
        }
        for (key, v) in [
            ("experiment.dt_s", s.dt_s),
            ("experiment.record_dt_s", s.record_dt_s),
            ("experiment.stdp_dt_int_s", s.stdp_dt_int_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(cfg(key, "must be finite and > 0"));
            }
        }
        self.device
            .validate()
            .map_err(|e| in_section("device", e))?;
        self.dpi.validate().map_err(|e| in_section("dpi", e))?;
        self.waveform.pre()?;
        self.waveform.post()?;
        if let Some(m) = &self.mismatch {
            m.validate().map_err(|e| in_section("mismatch", e))?;
        }
        if let Some(b) = &self.board {
            b.validate().map_err(|e| in_section("board", e))?;
        }
        if let Some(c) = &self.crossbar {
            c.validate().map_err(|e| in_section("crossbar", e))?;
        }

        let mut neuron_ids = HashMap::new();
        for (k, n) in self.neurons.iter().enumerate() {
            let sec = format!("neuron[{k}]");
            if neuron_ids.insert(n.id.as_str(), k).is_some() {
                return Err(cfg(format!("{sec}.id"), format!("duplicate id `{}`", n.id)));
            }
            n.params
                .validate()
                .map_err(|e| in_section(&format!("{sec}.params"), e))?;
            if let Some(w) = &n.waveform {
                SpikeWaveform::from_pairs(w, self.waveform.v_rest)
                    .map_err(|e| cfg(format!("{sec}.waveform"), e.to_string()))?;
            }
            if let Some(c) = n.chip {
                self.check_chip(c, &format!("{sec}.chip"))?;
            }
        }
        let mut bank_ids = HashMap::new();
        for (k, b) in self.banks.iter().enumerate() {
            let sec = format!("bank[{k}]");
            if bank_ids.insert(b.id.as_str(), b.branches.len()).is_some() {
                return Err(cfg(format!("{sec}.id"), format!("duplicate id `{}`", b.id)));
            }
            if !neuron_ids.contains_key(b.target.as_str()) {
                return Err(Error::DanglingReference {
                    kind: "neuron",
                    id: b.target.clone(),
                });
            }
            if b.branches.is_empty() {
                return Err(cfg(
                    format!("{sec}.branches_S"),
                    "needs at least one branch",
                ));
            }
            for &g in &b.branches {
                MemristorState::new(g, &self.device)
                    .map_err(|e| cfg(format!("{sec}.branches_S"), e.to_string()))?;
            }
            if let Some(g_ref) = b.g_ref {
                if !(g_ref > 0.0 && g_ref.is_finite()) {
                    return Err(cfg(format!("{sec}.g_ref_S"), "must be finite and > 0"));
                }
            }
        }
        let branch_check = |bank: &str, branch: usize, key: String| -> Result<()> {
            let len = *bank_ids.get(bank).ok_or_else(|| Error::DanglingReference {
                kind: "bank",
                id: bank.to_string(),
            })?;
            if branch >= len {
                return Err(cfg(
                    key,
                    format!("branch {branch} out of range (len {len})"),
                ));
            }
            Ok(())
        };
        for (k, i) in self.inputs.iter().enumerate() {
            branch_check(&i.bank, i.branch, format!("input[{k}].branch"))?;
            if let Some(&t) = i.times_s.iter().find(|&&t| !(t >= 0.0 && t.is_finite())) {
                return Err(Error::Causality {
                    component: format!("input[{k}]"),
                    event_t: t,
                    local_t: 0.0,
                });
            }
            if let Some(c) = i.chip {
                self.check_chip(c, &format!("input[{k}].chip"))?;
            }
        }
        for (k, c) in self.connections.iter().enumerate() {
            if !neuron_ids.contains_key(c.from.as_str()) {
                return Err(Error::DanglingReference {
                    kind: "neuron",
                    id: c.from.clone(),
                });
            }
            branch_check(&c.bank, c.branch, format!("connection[{k}].branch"))?;
            if !(c.delay_s >= 0.0 && c.delay_s.is_finite()) {
                return Err(cfg(
                    format!("connection[{k}].delay_s"),
                    "must be finite and >= 0",
                ));
            }
        }
        for key in &s.record {
            self.check_record_key(key, &neuron_ids, &bank_ids)?;
        }
        Ok(())
    }

    fn check_chip(&self, c: [usize; 2], key: &str) -> Result<()> {
        let Some(board) = &self.board else {
            return Err(cfg(key, "chip placement needs a [board] section"));
        };
        if c[0] >= board.mesh_rows || c[1] >= board.mesh_cols {
            return Err(Error::OutOfMesh {
                row: c[0],
                col: c[1],
                rows: board.mesh_rows,
                cols: board.mesh_cols,
            });
        }
        Ok(())
    }

    fn check_record_key(
        &self,
        key: &str,
        neurons: &HashMap<&str, usize>,
        banks: &HashMap<&str, usize>,
    ) -> Result<()> {
        match Probe::parse(key) {
            Some(Probe::Membrane(id)) if neurons.contains_key(id) => Ok(()),
            Some(Probe::Membrane(id)) => Err(Error::DanglingReference {
                kind: "neuron",
                id: id.into(),
            }),
            Some(Probe::Current(id)) if banks.contains_key(id) => Ok(()),
            Some(Probe::Conductance(id, b)) if banks.get(id).is_some_and(|&n| b < n) => Ok(()),
            Some(Probe::Current(id)) | Some(Probe::Conductance(id, _)) => {
                Err(Error::DanglingReference {
                    kind: "bank",
                    id: id.into(),
                })
            }
            None => Err(cfg(
                "experiment.record",
                format!("`{key}` is not v:<neuron>, isyn:<bank> or g:<bank>:<branch>"),
            )),
        }
    }
}

fn cfg(key: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

enum Probe<'a> {
    Membrane(&'a str),
    Current(&'a str),
    Conductance(&'a str, usize),
}

impl<'a> Probe<'a> {
    fn parse(key: &'a str) -> Option<Self> {
        let (kind, rest) = key.split_once(':')?;
        match kind {
            "v" => Some(Probe::Membrane(rest)),
            "isyn" => Some(Probe::Current(rest)),
            "g" => {
                let (bank, branch) = rest.rsplit_once(':')?;
                Some(Probe::Conductance(bank, branch.parse().ok()?))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Input,
    Neuron(usize),
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Tick,
    Record,
    Pre {
        bank: usize,
        branch: usize,
        source: Source,
    },
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    t: f64,
    seq: u64,
    kind: Kind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct NeuronRt {
    params: IfNeuronParams,
    state: IfNeuronState,
    waveform: SpikeWaveform,
    chip: Option<ChipCoord>,
    last_spike: Option<f64>,
    /// Banks feeding this neuron.
    inputs: Vec<usize>,
}

struct BankRt {
    target: usize,
    branches: Vec<MemristorState>,
    g_ref: f64,
    syn: SynapseIntegrator,
    plastic: bool,
    last_pre: Vec<Option<(f64, Source)>>,
}

impl BankRt {
    fn scale(&self, branch: usize) -> f64 {
        (self.branches[branch].g / self.g_ref).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpikeRecord {
    pub t: f64,
    pub neuron: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub duration_s: f64,
    pub events_processed: u64,
    pub weight_updates: u64,
    pub spike_counts: BTreeMap<String, u64>,
    #[serde(rename = "final_weights_S")]
    pub final_weights: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResults {
    pub spikes: Vec<SpikeRecord>,
    pub traces: BTreeMap<String, Vec<(f64, f64)>>,
    pub summary: RunSummary,
}

struct Engine<'a> {
    exp: &'a Experiment,
    neurons: Vec<NeuronRt>,
    banks: Vec<BankRt>,
    neuron_index: HashMap<&'a str, usize>,
    bank_index: HashMap<&'a str, usize>,
    /// Outgoing connections per neuron: (bank, branch, delay).
    fanout: Vec<Vec<(usize, usize, f64)>>,
    input_wave: SpikeWaveform,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    spikes: Vec<SpikeRecord>,
    traces: BTreeMap<String, Vec<(f64, f64)>>,
    weight_updates: u64,
}

impl<'a> Engine<'a> {
    fn build(exp: &'a Experiment) -> Result<Self> {
        exp.validate()?;
        let default_wave = exp.waveform.post()?;
        let mut neuron_index = HashMap::new();
        let mut neurons = Vec::with_capacity(exp.neurons.len());
        for (k, n) in exp.neurons.iter().enumerate() {
            neuron_index.insert(n.id.as_str(), k);
            let waveform = match &n.waveform {
                Some(w) => SpikeWaveform::from_pairs(w, exp.waveform.v_rest)?,
                None => default_wave.clone(),
            };
            neurons.push(NeuronRt {
                params: n.params,
                state: IfNeuronState::at_rest(&n.params),
                waveform,
                chip: n.chip.map(|c| ChipCoord::new(c[0], c[1])),
                last_spike: None,
                inputs: Vec::new(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(exp.seed());
        let mut bank_index = HashMap::new();
        let mut banks = Vec::with_capacity(exp.banks.len());
        for (k, b) in exp.banks.iter().enumerate() {
            bank_index.insert(b.id.as_str(), k);
            let target = neuron_index[b.target.as_str()];
            neurons[target].inputs.push(k);
            let mut dpi = exp.dpi;
            if let Some(m) = &exp.mismatch {
                mismatch::perturb(&mut dpi, m, &mut rng)
                    .map_err(|e| in_section(&format!("bank[{k}].dpi"), e))?;
            }
            banks.push(BankRt {
                target,
                branches: b.branches.iter().map(|&g| MemristorState { g }).collect(),
                g_ref: b.g_ref.unwrap_or(exp.device.g_max),
                syn: SynapseIntegrator::new(dpi, DpiState::default()),
                plastic: b.plastic,
                last_pre: vec![None; b.branches.len()],
            });
        }
        let mut fanout = vec![Vec::new(); neurons.len()];
        for c in &exp.connections {
            fanout[neuron_index[c.from.as_str()]].push((
                bank_index[c.bank.as_str()],
                c.branch,
                c.delay_s,
            ));
        }
        Ok(Engine {
            exp,
            neurons,
            banks,
            neuron_index,
            bank_index,
            fanout,
            input_wave: exp.waveform.pre()?,
            queue: BinaryHeap::new(),
            seq: 0,
            spikes: Vec::new(),
            traces: exp
                .settings
                .record
                .iter()
                .map(|k| (k.clone(), Vec::new()))
                .collect(),
            weight_updates: 0,
        })
    }

    fn schedule(&mut self, t: f64, kind: Kind) {
        self.queue.push(Scheduled {
            t,
            seq: self.seq,
            kind,
        });
        self.seq += 1;
    }

    fn mesh_latency(&self, from: Option<ChipCoord>, bank: usize) -> f64 {
        let to = self.neurons[self.banks[bank].target].chip;
        match (&self.exp.board, from, to) {
            (Some(board), Some(a), Some(b)) => a.hops_to(&b) as f64 / board.e_pp,
            _ => 0.0,
        }
    }

    fn pre_waveform(&self, source: Source) -> &SpikeWaveform {
        match source {
            Source::Input => &self.input_wave,
            Source::Neuron(n) => &self.neurons[n].waveform,
        }
    }

    /// Applies the pair update for `(pre at t_pre, post at t_post)` to a branch.
    fn pair_update(
        &mut self,
        bank: usize,
        branch: usize,
        source: Source,
        t_pre: f64,
        t_post: f64,
    ) -> Result<()> {
        let post = &self.neurons[self.banks[bank].target].waveform;
        let pre = self.pre_waveform(source);
        let delta_t = t_post - t_pre;
        if delta_t.abs() > pre.duration() + post.duration() {
            return Ok(());
        }
        let (next, _) = weight_update(
            self.banks[bank].branches[branch],
            &self.exp.device,
            pre,
            post,
            delta_t,
            self.exp.settings.stdp_dt_int_s,
        )?;
        self.banks[bank].branches[branch] = next;
        self.weight_updates += 1;
        Ok(())
    }

    fn on_pre(&mut self, t: f64, bank: usize, branch: usize, source: Source) -> Result<()> {
        let scale = self.banks[bank].scale(branch);
        self.banks[bank].syn.inject(t, scale).map_err(|e| match e {
            Error::Causality {
                event_t, local_t, ..
            } => Error::Causality {
                component: self.exp.banks[bank].id.clone(),
                event_t,
                local_t,
            },
            other => other,
        })?;
        if self.banks[bank].plastic {
            if let Some(t_post) = self.neurons[self.banks[bank].target].last_spike {
                self.pair_update(bank, branch, source, t, t_post)?;
            }
        }
        self.banks[bank].last_pre[branch] = Some((t, source));
        Ok(())
    }

    fn on_tick(&mut self, t: f64) -> Result<()> {
        let dt = self.exp.settings.dt_s;
        for n in 0..self.neurons.len() {
            let mut i_in = 0.0;
            for &b in &self.neurons[n].inputs {
                self.banks[b].syn.advance_to(t)?;
                i_in += self.banks[b].syn.state().i_syn;
            }
            let neuron = &mut self.neurons[n];
            let (state, fired) = neuron.state.membrane_step(&neuron.params, i_in, dt)?;
            neuron.state = state;
            if !fired {
                continue;
            }
            neuron.last_spike = Some(t);
            self.spikes.push(SpikeRecord {
                t,
                neuron: self.exp.neurons[n].id.clone(),
            });
            for b in self.neurons[n].inputs.clone() {
                if !self.banks[b].plastic {
                    continue;
                }
                for branch in 0..self.banks[b].branches.len() {
                    if let Some((t_pre, source)) = self.banks[b].last_pre[branch] {
                        self.pair_update(b, branch, source, t_pre, t)?;
                    }
                }
            }
            let from = self.neurons[n].chip;
            for (bank, branch, delay) in self.fanout[n].clone() {
                let arrival = t + delay + self.mesh_latency(from, bank);
                self.schedule(
                    arrival,
                    Kind::Pre {
                        bank,
                        branch,
                        source: Source::Neuron(n),
                    },
                );
            }
        }
        Ok(())
    }

    fn on_record(&mut self, t: f64) -> Result<()> {
        let keys: Vec<String> = self.traces.keys().cloned().collect();
        for key in keys {
            let value = match Probe::parse(&key).expect("validated") {
                Probe::Membrane(id) => self.neurons[self.neuron_index[id]].state.v,
                Probe::Current(id) => {
                    let b = self.bank_index[id];
                    self.banks[b].syn.advance_to(t)?;
                    self.banks[b].syn.state().i_syn
                }
                Probe::Conductance(id, branch) => {
                    self.banks[self.bank_index[id]].branches[branch].g
                }
            };
            self.traces
                .get_mut(&key)
                .expect("key exists")
                .push((t, value));
        }
        Ok(())
    }

    fn run(mut self) -> Result<RunResults> {
        let exp = self.exp;
        let duration = exp.settings.duration_s;
        let mut stimulus: Vec<(f64, usize, usize, Option<ChipCoord>)> = exp
            .inputs
            .iter()
            .flat_map(|i| {
                let bank = self.bank_index[i.bank.as_str()];
                let chip = i.chip.map(|c| ChipCoord::new(c[0], c[1]));
                i.times_s.iter().map(move |&t| (t, bank, i.branch, chip))
            })
            .collect();
        // stable: equal times keep config order
        stimulus.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (t, bank, branch, chip) in stimulus {
            let arrival = t + self.mesh_latency(chip, bank);
            self.schedule(
                arrival,
                Kind::Pre {
                    bank,
                    branch,
                    source: Source::Input,
                },
            );
        }
        if !self.traces.is_empty() {
            self.schedule(0.0, Kind::Record);
        }
        if !self.neurons.is_empty() {
            self.schedule(exp.settings.dt_s, Kind::Tick);
        }
        let mut processed = 0u64;
        let mut ticks = 1u64;
        let mut records = 1u64;
        while let Some(ev) = self.queue.pop() {
            if ev.t > duration * (1.0 + 1e-12) {
                break;
            }
            processed += 1;
            match ev.kind {
                Kind::Tick => {
                    self.on_tick(ev.t)?;
                    ticks += 1;
                    self.schedule(ticks as f64 * exp.settings.dt_s, Kind::Tick);
                }
                Kind::Record => {
                    self.on_record(ev.t)?;
                    self.schedule(records as f64 * exp.settings.record_dt_s, Kind::Record);
                    records += 1;
                }
                Kind::Pre {
                    bank,
                    branch,
                    source,
                } => self.on_pre(ev.t, bank, branch, source)?,
            }
        }
        let spike_counts = exp
            .neurons
            .iter()
            .map(|n| {
                let c = self.spikes.iter().filter(|s| s.neuron == n.id).count() as u64;
                (n.id.clone(), c)
            })
            .collect();
        let final_weights = exp
            .banks
            .iter()
            .zip(&self.banks)
            .map(|(spec, rt)| (spec.id.clone(), rt.branches.iter().map(|b| b.g).collect()))
            .collect();
        Ok(RunResults {
            spikes: self.spikes,
            traces: self.traces,
            summary: RunSummary {
                seed: exp.seed(),
                duration_s: duration,
                events_processed: processed,
                weight_updates: self.weight_updates,
                spike_counts,
                final_weights,
            },
        })
    }
}

/// Runs `exp` to completion. Identical experiments give identical results.
pub fn run(exp: &Experiment) -> Result<RunResults> {
    Engine::build(exp)?.run()
}

impl RunResults {
    /// Writes `spikes.csv`, one `trace_<key>.csv` per recorded key and
    /// `summary.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join("spikes.csv");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(f, "t_s,neuron")?;
        for s in &self.spikes {
            writeln!(f, "{},{}", fmt_f64(s.t), s.neuron)?;
        }
        f.flush()?;
        written.push(path);
        for (key, trace) in &self.traces {
            let name: String = key
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            let path = dir.join(format!("trace_{name}.csv"));
            let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write_csv(&mut f, "t_s,value", trace.iter().map(|&(t, v)| [t, v]))?;
            f.flush()?;
            written.push(path);
        }
        let path = dir.join("summary.json");
        let json = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        std::fs::write(&path, json + "\n")?;
        written.push(path);
        Ok(written)
    }
}
