use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::json;
use toml::{Table, Value};

use memsim_core::aer::{
    mean_uniform_hops, read_events_csv, route_events, uniform_traffic, write_events_csv,
    RouteOptions, EVENT_CSV_HEADER,
};
use memsim_core::config::{apply_overrides, in_section, load_table, section, WaveformSection};
use memsim_core::device::{apply_pulse_train, hysteresis_area, iv_sweep, Drive};
use memsim_core::engine::{draw_population, population_epsp};
use memsim_core::report::{
    csv_string, fmt_f64, DEVICE_TRACE_HEADER, DPI_TRACE_HEADER, STDP_HEADER,
};
use memsim_core::stdp::uniform_grid;
use memsim_core::{
    board_traffic, comm_power, epsc_trace, epsc_vs_resistance, per_neuron_share, stdp_curve,
    BoardSpec, CrossbarConfig, DpiParams, Error, Experiment, HybridSynapseBank, MemristorParams,
    MemristorState, MismatchSpec, StdpProbe,
};

macro_rules! config_section {
    ($table:expr, $name:literal, $ty:ty) => {{
        let v: $ty = section(&$table, $name)?;
        v.validate().map_err(|e| in_section($name, e))?;
        Ok::<$ty, Failure>(v)
    }};
}

/// A failed invocation, reported as one JSON line on stderr.
#[derive(Debug)]
pub struct Failure {
    key: Option<String>,
    message: String,
}

impl Failure {
    fn keyed(key: impl Into<String>, message: impl Into<String>) -> Self {
        Failure {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    pub fn to_json_line(&self) -> String {
        json!({ "error": self.message, "key": self.key }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let key = match &e {
            Error::DanglingReference { kind, .. } => Some(kind.to_string()),
            other => other.key().map(str::to_string),
        };
        Failure {
            key,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            key: None,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

pub struct Context {
    table: Table,
    out: Option<PathBuf>,
    seed_flag: Option<u64>,
}

impl Context {
    pub fn load(
        config: Option<&Path>,
        overrides: &[String],
        out: Option<PathBuf>,
        seed_flag: Option<u64>,
    ) -> Result<Self, Failure> {
        let mut table = match config {
            Some(path) => load_table(path)?,
            None => Table::new(),
        };
        apply_overrides(&mut table, overrides)?;
        Ok(Context {
            table,
            out,
            seed_flag,
        })
    }

    /// Sets `section.key` so that a flag wins over file and `--set` values.
    fn flag(&mut self, section: &str, key: &str, value: Option<Value>) -> Outcome {
        let Some(value) = value else { return Ok(()) };
        let entry = self
            .table
            .entry(section.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        let table = entry
            .as_table_mut()
            .ok_or_else(|| Failure::keyed(section, "expected a section"))?;
        table.insert(key.to_string(), value);
        Ok(())
    }

    fn device(&self) -> Result<MemristorParams, Failure> {
        config_section!(self.table, "device", MemristorParams)
    }

    fn dpi(&self) -> Result<DpiParams, Failure> {
        config_section!(self.table, "dpi", DpiParams)
    }

    fn board(&self) -> Result<BoardSpec, Failure> {
        config_section!(self.table, "board", BoardSpec)
    }

    fn crossbar(&self) -> Result<CrossbarConfig, Failure> {
        config_section!(self.table, "crossbar", CrossbarConfig)
    }

    fn mismatch(&self) -> Result<MismatchSpec, Failure> {
        config_section!(self.table, "mismatch", MismatchSpec)
    }

    fn seed(&self) -> Result<u64, Failure> {
        if let Some(seed) = self.seed_flag {
            return Ok(seed);
        }
        if let Some(v) = self.table.get("experiment").and_then(|e| e.get("seed")) {
            return v
                .as_integer()
                .and_then(|s| u64::try_from(s).ok())
                .ok_or_else(|| {
                    Failure::keyed("experiment.seed", "must be a non-negative integer")
                });
        }
        match std::env::var("MEMSIM_SEED") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Failure::keyed("MEMSIM_SEED", format!("`{s}` is not a u64"))),
            Err(_) => Ok(0),
        }
    }

    /// Writes `contents` to `<out>/<name>`, or to stdout without `--out`.
    fn emit(&self, name: &str, contents: &str) -> Outcome {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(name), contents)?;
            }
            None => to_stdout(contents)?,
        }
        Ok(())
    }

    /// Secondary artifacts exist only as files.
    fn emit_extra(&self, name: &str, contents: &str) -> Outcome {
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

/// A closed pipe downstream (e.g. `| head`) ends output quietly.
fn to_stdout(contents: &str) -> Outcome {
    let mut out = io::stdout().lock();
    match out
        .write_all(contents.as_bytes())
        .and_then(|()| out.flush())
    {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn float(x: Option<f64>) -> Option<Value> {
    x.map(Value::Float)
}

fn int(x: Option<usize>) -> Option<Value> {
    x.map(|n| Value::Integer(n as i64))
}

fn json_text(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

fn initial_state(device: &MemristorParams, g_init: Option<f64>) -> Result<MemristorState, Failure> {
    let g = g_init.unwrap_or_else(|| device.g_mid());
    MemristorState::new(g, device).map_err(|e| Failure::keyed("g-init", e.to_string()))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Shape {
    Triangle,
    Sine,
}

#[derive(Debug, Args)]
pub struct IvSweep {
    /// Peak drive voltage, V.
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    amp: f64,
    /// Drive period, s.
    #[arg(long, default_value_t = 1e-3)]
    period: f64,
    #[arg(long, default_value_t = 400)]
    samples_per_period: usize,
    #[arg(long, default_value_t = 2)]
    periods: usize,
    #[arg(long, value_enum, default_value_t = Shape::Triangle)]
    shape: Shape,
    /// Initial conductance, S (default: mid-window).
    #[arg(long)]
    g_init: Option<f64>,
}

impl IvSweep {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        let device = ctx.device()?;
        if self.period.is_nan() || self.period <= 0.0 {
            return Err(Failure::keyed("period", "must be > 0"));
        }
        if self.samples_per_period == 0 || self.periods == 0 {
            return Err(Failure::keyed(
                "samples-per-period",
                "samples and periods must be >= 1",
            ));
        }
        let drive = match self.shape {
            Shape::Triangle => {
                Drive::triangle(self.amp, self.period, self.samples_per_period, self.periods)
            }
            Shape::Sine => {
                Drive::sine(self.amp, self.period, self.samples_per_period, self.periods)
            }
        };
        let (_, trace) = iv_sweep(initial_state(&device, self.g_init)?, &device, &drive)?;
        let csv = csv_string(
            DEVICE_TRACE_HEADER,
            trace.iter().map(|p| [p.t, p.v, p.i, p.g]),
        );
        ctx.emit("iv_sweep.csv", &csv)?;
        let area = json!({ "samples": trace.len(), "loop_area_W": hysteresis_area(&trace) });
        ctx.emit_extra("iv_sweep.json", &json_text(&area))
    }
}

#[derive(Debug, Args)]
pub struct PulseProgram {
    /// Pulse amplitude, V.
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    amp: f64,
    /// Pulse width, s.
    #[arg(long, default_value_t = 1e-6)]
    width: f64,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Read voltage, V; must stay between the switching thresholds.
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    v_read: f64,
    #[arg(long)]
    g_init: Option<f64>,
}

impl PulseProgram {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        let device = ctx.device()?;
        let start = initial_state(&device, self.g_init)?;
        let (_, readings) =
            apply_pulse_train(start, &device, self.amp, self.width, self.n, self.v_read)?;
        let mut csv = String::from("pulse,r_Ohm\n");
        for (k, r) in readings.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", k + 1, fmt_f64(*r)));
        }
        ctx.emit("pulse_program.csv", &csv)
    }
}

#[derive(Debug, Args)]
pub struct Epsc {
    /// Input spike times, s.
    #[arg(long, value_delimiter = ',', default_value = "1e-3")]
    spike_times: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    horizon: f64,
    /// Sample interval, s.
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
}

impl Epsc {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        let dpi = ctx.dpi()?;
        let trace = epsc_trace(&dpi, &self.spike_times, self.horizon, self.dt)?;
        ctx.emit(
            "epsc.csv",
            &csv_string(DPI_TRACE_HEADER, trace.iter().map(|&(t, i)| [t, i])),
        )
    }
}

#[derive(Debug, Args)]
pub struct StdpCurve {
    /// Integration step, s (at most 1/10 of the shortest waveform segment).
    #[arg(long)]
    dt_int: Option<f64>,
    #[arg(long)]
    g_init: Option<f64>,
    /// Grid covers -half_span..=half_span.
    #[arg(long, default_value_t = 15e-6)]
    half_span: f64,
    #[arg(long, default_value_t = 0.25e-6)]
    step: f64,
}

impl StdpCurve {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        let device = ctx.device()?;
        let waves: WaveformSection = section(&ctx.table, "waveform")?;
        if !(self.half_span >= 0.0 && self.step > 0.0) {
            return Err(Failure::keyed("step", "need half-span >= 0 and step > 0"));
        }
        let mut probe = StdpProbe {
            pre_wave: waves.pre()?,
            post_wave: waves.post()?,
            delta_t_grid: uniform_grid(self.half_span, self.step),
            ..StdpProbe::default()
        };
        if let Some(dt) = self.dt_int {
            probe.dt_int = dt;
        }
        let g_init = initial_state(&device, self.g_init)?.g;
        let curve = stdp_curve(&probe, &device, g_init)?;
        ctx.emit(
            "stdp_curve.csv",
            &csv_string(STDP_HEADER, curve.iter().map(|&(d, x)| [d, x])),
        )
    }
}

#[derive(Debug, Args)]
pub struct CrossbarRead {
    #[arg(long, default_value_t = 1000.0)]
    r_min: f64,
    #[arg(long, default_value_t = 7000.0)]
    r_max: f64,
    #[arg(long, default_value_t = 1000.0)]
    r_step: f64,
}

impl CrossbarRead {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        let device = ctx.device()?;
        let dpi = ctx.dpi()?;
        if !(self.r_step > 0.0 && self.r_max >= self.r_min) {
            return Err(Failure::keyed(
                "r-step",
                "need r-step > 0 and r-max >= r-min",
            ));
        }
        let n = ((self.r_max - self.r_min) / self.r_step * (1.0 + 1e-12)).floor() as usize;
        let r: Vec<f64> = (0..=n)
            .map(|k| self.r_min + k as f64 * self.r_step)
            .collect();
        let bank = HybridSynapseBank::uniform(1, device.g_max, device, dpi)?;
        let peaks = epsc_vs_resistance(&bank, &r)?;
        ctx.emit(
            "crossbar_read.csv",
            &csv_string("r_Ohm,peak_A", peaks.iter().map(|&(r, p)| [r, p])),
        )
    }
}

#[derive(Debug, Args)]
pub struct WriteOffset {
    /// Voltage applied at the array drivers, V.
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    v_applied: f64,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
}

impl WriteOffset {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        ctx.flag("crossbar", "rows", int(self.rows))?;
        ctx.flag("crossbar", "cols", int(self.cols))?;
        let xbar = ctx.crossbar()?;
        let map = xbar.offset_map(self.v_applied);
        let mut csv = String::from("row,col,v_eff_V\n");
        for (i, row) in map.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                csv.push_str(&format!("{i},{j},{}\n", fmt_f64(*v)));
            }
        }
        ctx.emit("write_offset.csv", &csv)
    }
}

#[derive(Debug, Args)]
pub struct MeshTraffic {
    #[arg(long)]
    n_ch: Option<usize>,
    /// Per-link bandwidth, events/s.
    #[arg(long)]
    e_pp: Option<f64>,
    /// Mean firing rate per neuron, Hz.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
}

impl MeshTraffic {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        ctx.flag("board", "e_pp_eps", float(self.e_pp))?;
        let mut board = ctx.board_unchecked()?;
        if let Some(n) = self.n_ch {
            let shaped = BoardSpec::for_chips(n, board.e_pp);
            board.n_ch = n;
            board.mesh_rows = shaped.mesh_rows;
            board.mesh_cols = shaped.mesh_cols;
        }
        board.validate().map_err(|e| in_section("board", e))?;
        let e_v = board_traffic(board.n_ch as f64, board.e_pp);
        let power = comm_power(&board, self.rate)?;
        let out = json!({
            "n_ch": board.n_ch,
            "e_pp_eps": board.e_pp,
            "e_v": e_v,
            "neurons_per_board": board.neurons_per_board(),
            "per_neuron_eps": per_neuron_share(e_v, board.neurons_per_board()),
            "avg_rate_hz": self.rate,
            "comm_power": power,
            "capacity": board.edge_aware_capacity(),
        });
        ctx.emit("mesh_traffic.json", &json_text(&out))
    }
}

#[derive(Debug, Args)]
pub struct MeshSim {
    /// Offered load as a fraction of the closed-form board traffic.
    #[arg(long, default_value_t = 0.1)]
    load: f64,
    /// Number of generated events.
    #[arg(long, default_value_t = 100_000)]
    events: usize,
    /// Route events from this CSV instead of generating them.
    #[arg(long, value_name = "CSV")]
    input: Option<PathBuf>,
    /// Stop at this time and report events still in flight.
    #[arg(long)]
    horizon: Option<f64>,
    /// Throughput-check window, s.
    #[arg(long, default_value_t = 1.0)]
    window: f64,
}

impl MeshSim {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        let board = ctx.board()?;
        let events = match &self.input {
            Some(path) => {
                let file = fs::File::open(path)
                    .map_err(|e| Failure::keyed("input", format!("{}: {e}", path.display())))?;
                read_events_csv(BufReader::new(file))?
            }
            None => uniform_traffic(&board, self.load, self.events, ctx.seed()?)?,
        };
        let opts = RouteOptions {
            horizon: self.horizon,
            window: self.window,
        };
        let run = route_events(&board, &events, &opts)?;
        let mut stats = serde_json::to_value(&run.stats).expect("stats serialize");
        stats["mean_uniform_hops"] = json!(mean_uniform_hops(&board));
        ctx.emit("mesh_sim.json", &json_text(&stats))?;
        if ctx.out.is_some() {
            let mut buf = Vec::new();
            write_events_csv(&mut buf, &events)?;
            ctx.emit_extra("events.csv", &String::from_utf8_lossy(&buf))?;
            let mut csv = format!("{EVENT_CSV_HEADER},t_delivered_s,hops\n");
            for d in &run.deliveries {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    d.event.csv_row(),
                    fmt_f64(d.t_delivered),
                    d.hops
                ));
            }
            ctx.emit_extra("deliveries.csv", &csv)?;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct MismatchEpsp {
    /// DPI config key to perturb, e.g. I_w_A.
    #[arg(long)]
    parameter: Option<String>,
    #[arg(long)]
    cv: Option<f64>,
    /// Population size.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1e-3")]
    spike_times: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
}

impl MismatchEpsp {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        ctx.flag("mismatch", "parameter", self.parameter.map(Value::String))?;
        ctx.flag("mismatch", "cv", float(self.cv))?;
        ctx.flag("mismatch", "n", int(self.n))?;
        let spec = ctx.mismatch()?;
        let dpi = ctx.dpi()?;
        let population = draw_population(&dpi, &spec, ctx.seed()?)?;
        let trace = population_epsp(&population, &self.spike_times, self.horizon, self.dt)?;
        ctx.emit(
            "mismatch_epsp.csv",
            &csv_string("t_s,mean_A,std_A", trace.rows()),
        )
    }
}

#[derive(Debug, Args)]
pub struct Run {}

impl Run {
    pub fn execute(self, ctx: &mut Context) -> Outcome {
        let seed = i64::try_from(ctx.seed()?)
            .map_err(|_| Failure::keyed("experiment.seed", "must fit a TOML integer"))?;
        ctx.flag("experiment", "seed", Some(Value::Integer(seed)))?;
        let exp = Experiment::from_table(&ctx.table)?;
        let results = memsim_core::run(&exp)?;
        match &ctx.out {
            Some(dir) => {
                results.write_to(dir)?;
                Ok(())
            }
            None => {
                let summary = serde_json::to_value(&results.summary).expect("summary serializes");
                to_stdout(&json_text(&summary))
            }
        }
    }
}

impl Context {
    /// `[board]` without validation, for commands that reshape it first.
    fn board_unchecked(&self) -> Result<BoardSpec, Failure> {
        Ok(section::<BoardSpec>(&self.table, "board")?)
    }
}
