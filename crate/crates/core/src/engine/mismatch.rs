//! Device-mismatch populations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::dpi::{epsc_trace, DpiParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spread {
    Normal,
    Lognormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MismatchSpec {
    /// DPI config key to perturb, e.g. `I_w_A`.
    pub parameter: String,
    /// Defaults to lognormal for currents (`*_A`) and normal otherwise.
    pub distribution: Option<Spread>,
    pub cv: f64,
    pub n: usize,
}

impl Default for MismatchSpec {
    fn default() -> Self {
        MismatchSpec {
            parameter: "I_w_A".into(),
            distribution: None,
            cv: 0.2,
            n: 124,
        }
    }
}

impl MismatchSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cv >= 0.0 && self.cv.is_finite()) {
            return Err(Error::param("cv", "must be finite and >= 0"));
        }
        if self.n == 0 {
            return Err(Error::param("n", "must be >= 1"));
        }
        field(&mut DpiParams::default(), &self.parameter)?;
        Ok(())
    }

    pub fn spread(&self) -> Spread {
        self.distribution
            .unwrap_or(if self.parameter.ends_with("_A") {
                Spread::Lognormal
            } else {
                Spread::Normal
            })
    }
}

fn field<'a>(p: &'a mut DpiParams, name: &str) -> Result<&'a mut f64> {
    Ok(match name {
        "C_F" => &mut p.c,
        "U_T_V" => &mut p.u_t,
        "kappa" => &mut p.kappa,
        "I_tau_A" => &mut p.i_tau,
        "I_th_A" => &mut p.i_th,
        "I_w_A" => &mut p.i_w,
        "t_pulse_s" => &mut p.t_pulse,
        other => return Err(Error::UnknownParameter(other.to_string())),
    })
}

/// One draw with mean `base` and coefficient of variation `cv`.
pub fn draw_value<R: rand::Rng + ?Sized>(base: f64, spread: Spread, cv: f64, rng: &mut R) -> f64 {
    if cv == 0.0 {
        return base;
    }
    match spread {
        Spread::Normal => Normal::new(base, cv * base.abs())
            .expect("finite mean and nonnegative sigma")
            .sample(rng),
        Spread::Lognormal => {
            let sigma2 = cv.mul_add(cv, 1.0).ln();
            let mu = base.ln() - 0.5 * sigma2;
            LogNormal::new(mu, sigma2.sqrt())
                .expect("finite parameters")
                .sample(rng)
        }
    }
}

/// Perturbs the named field of `params` in place with one draw.
pub fn perturb<R: rand::Rng + ?Sized>(
    params: &mut DpiParams,
    spec: &MismatchSpec,
    rng: &mut R,
) -> Result<()> {
    let spread = spec.spread();
    let slot = field(params, &spec.parameter)?;
    if spread == Spread::Lognormal && *slot <= 0.0 {
        return Err(Error::param(&spec.parameter, "lognormal base must be > 0"));
    }
    *slot = draw_value(*slot, spread, spec.cv, rng);
    params.validate().map_err(|e| match e {
        Error::InvalidParam { name, reason } => Error::param(
            name,
            format!("mismatch draw left parameter invalid: {reason}"),
        ),
        other => other,
    })
}

/// `spec.n` independent parameter sets, identical to `base` except for the
/// perturbed field.
pub fn draw_population(base: &DpiParams, spec: &MismatchSpec, seed: u64) -> Result<Vec<DpiParams>> {
    spec.validate()?;
    base.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.n)
        .map(|_| {
            let mut p = *base;
            perturb(&mut p, spec, &mut rng)?;
            Ok(p)
        })
        .collect()
}

/// Sample mean and unbiased standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let (mean, m2) = welford(values.iter().copied());
    let n = values.len();
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    (mean, var.sqrt())
}

fn welford(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, x) in values.enumerate() {
        let d = x - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (x - mean);
    }
    (mean, m2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationTrace {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    /// Pointwise population standard deviation.
    pub std: Vec<f64>,
}

impl PopulationTrace {
    pub fn rows(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.t.len()).map(|k| [self.t[k], self.mean[k], self.std[k]])
    }
}

/// Runs the EPSC of every member for the same input spikes and reduces the
/// traces pointwise.
pub fn population_epsp(
    population: &[DpiParams],
    spike_times: &[f64],
    horizon: f64,
    sample_dt: f64,
) -> Result<PopulationTrace> {
    if population.is_empty() {
        return Err(Error::param("population", "must not be empty"));
    }
    let traces = population
        .iter()
        .map(|p| epsc_trace(p, spike_times, horizon, sample_dt))
        .collect::<Result<Vec<_>>>()?;
    let len = traces[0].len();
    let n = traces.len() as f64;
    let mut out = PopulationTrace {
        t: traces[0].iter().map(|&(t, _)| t).collect(),
        mean: Vec::with_capacity(len),
        std: Vec::with_capacity(len),
    };
    for k in 0..len {
        let (mean, m2) = welford(traces.iter().map(|tr| tr[k].1));
        out.mean.push(mean);
        out.std.push((m2 / n).sqrt());
    }
    Ok(out)
}
