//! Stochastic ground-truth simulators and design utilities.
//!
//! Each simulator is a deterministic mean over an axis-aligned box plus
//! Gaussian noise — homoscedastic for the analytic benchmarks, table-driven
//! heteroscedastic for the motorcycle simulator. The registry exposes the
//! seven built-ins by name; additional table simulators load from a small
//! declarative TOML file in the same shape as the motorcycle tables.

mod design;
mod functions;
mod motorcycle;

pub use design::{grid_pool, maximin_lhs};
pub use motorcycle::{MOTORCYCLE_MEAN, MOTORCYCLE_STDDEV};

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Piecewise-linear interpolation through equidistant knots on [lo, hi].
#[derive(Debug, Clone)]
pub struct Interp1d {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl Interp1d {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("interpolation table needs ≥ 2 knots"));
        }
        if !(hi > lo) {
            return Err(Error::invalid("interpolation domain must have lo < hi"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("interpolation table"));
        }
        Ok(Interp1d { lo, hi, values })
    }

    pub fn num_knots(&self) -> usize {
        self.values.len()
    }

    /// x-coordinate of knot `i`.
    pub fn knot(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / (self.values.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let u = (x - self.lo) / (self.hi - self.lo) * (n - 1) as f64;
        // Snap to the knot when round-off lands us within 1e-9 of it, so
        // knot evaluations return the table value bit-exactly.
        let nearest = u.round();
        if (u - nearest).abs() <= 1e-9 && (0.0..=(n - 1) as f64).contains(&nearest) {
            return self.values[nearest as usize];
        }
        let k = (u.floor().max(0.0) as usize).min(n - 2);
        let frac = u - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }
}

#[derive(Debug, Clone)]
enum MeanFn {
    Gramacy1d,
    Higdon,
    Gramacy2d,
    Branin,
    Ishigami { a: f64, b: f64 },
    Hartmann6,
    Table(Interp1d),
}

#[derive(Debug, Clone)]
pub enum NoiseModel {
    /// Constant σ_ε over the whole domain.
    Homoscedastic(f64),
    /// σ_ε(x) interpolated from a knot table (1-D simulators only).
    Heteroscedastic(Interp1d),
}

/// A named stochastic ground-truth function with input box and noise model.
#[derive(Debug, Clone)]
pub struct SimulatorSpec {
    name: String,
    domain: Vec<(f64, f64)>,
    mean: MeanFn,
    noise: NoiseModel,
}

impl SimulatorSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    /// Axis-aligned input box in natural units.
    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    fn check_in_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "simulator input",
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (i, (&xi, &(lo, hi))) in x.iter().zip(self.domain.iter()).enumerate() {
            if !(lo..=hi).contains(&xi) {
                return Err(Error::invalid(format!(
                    "input coordinate {i} = {xi} outside domain [{lo}, {hi}] of '{}'",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Noise-free mean at `x` (natural units).
    pub fn mean_oracle(&self, x: &[f64]) -> Result<f64> {
        self.check_in_domain(x)?;
        Ok(match &self.mean {
            MeanFn::Gramacy1d => functions::gramacy_lee_2012(x[0]),
            MeanFn::Higdon => functions::gramacy_lee_2009(x[0]),
            MeanFn::Gramacy2d => functions::gramacy_lee_2008(x),
            MeanFn::Branin => functions::branin(x),
            MeanFn::Ishigami { a, b } => functions::ishigami(x, *a, *b),
            MeanFn::Hartmann6 => functions::hartmann6(x),
            MeanFn::Table(interp) => interp.eval(x[0]),
        })
    }

    /// σ_ε at `x`.
    pub fn noise_std_at(&self, x: &[f64]) -> f64 {
        match &self.noise {
            NoiseModel::Homoscedastic(std) => *std,
            NoiseModel::Heteroscedastic(interp) => interp.eval(x[0]),
        }
    }

    /// One noisy observation `mean(x) + N(0, σ(x)²)`.
    pub fn evaluate(&self, x: &[f64], rng: &mut impl Rng) -> Result<f64> {
        let mean = self.mean_oracle(x)?;
        let std = self.noise_std_at(x);
        let z: f64 = rng.sample(StandardNormal);
        Ok(mean + std * z)
    }

    /// Grid pool over this simulator's domain, natural units; see
    /// [`grid_pool`] for the cap semantics.
    pub fn grid_pool(&self, per_axis: usize, cap: usize, rng: &mut impl Rng) -> Result<Array2<f64>> {
        grid_pool(&self.domain, per_axis, cap, rng)
    }
}

/// Built-in registry names.
pub fn builtin_names() -> [&'static str; 7] {
    [
        "gramacy1d",
        "higdon",
        "gramacy2d",
        "branin",
        "ishigami",
        "hartmann",
        "motorcycle",
    ]
}

/// Look up a built-in simulator by name.
pub fn by_name(name: &str) -> Result<SimulatorSpec> {
    let spec = match name.to_ascii_lowercase().as_str() {
        "gramacy1d" => SimulatorSpec {
            name: "gramacy1d".into(),
            domain: vec![(0.5, 2.5)],
            mean: MeanFn::Gramacy1d,
            noise: NoiseModel::Homoscedastic(0.1),
        },
        "higdon" => SimulatorSpec {
            name: "higdon".into(),
            domain: vec![(0.0, 20.0)],
            mean: MeanFn::Higdon,
            noise: NoiseModel::Homoscedastic(0.1),
        },
        "gramacy2d" => SimulatorSpec {
            name: "gramacy2d".into(),
            domain: vec![(-2.0, 6.0), (-2.0, 6.0)],
            mean: MeanFn::Gramacy2d,
            noise: NoiseModel::Homoscedastic(0.05),
        },
        "branin" => SimulatorSpec {
            name: "branin".into(),
            domain: vec![(-5.0, 10.0), (0.0, 15.0)],
            mean: MeanFn::Branin,
            noise: NoiseModel::Homoscedastic(11.32),
        },
        "ishigami" => SimulatorSpec {
            name: "ishigami".into(),
            domain: vec![
                (-std::f64::consts::PI, std::f64::consts::PI),
                (-std::f64::consts::PI, std::f64::consts::PI),
                (-std::f64::consts::PI, std::f64::consts::PI),
            ],
            mean: MeanFn::Ishigami { a: 7.0, b: 0.1 },
            noise: NoiseModel::Homoscedastic(0.187),
        },
        "hartmann" => SimulatorSpec {
            name: "hartmann".into(),
            domain: vec![(0.0, 1.0); 6],
            mean: MeanFn::Hartmann6,
            noise: NoiseModel::Homoscedastic(0.0192),
        },
        "motorcycle" => SimulatorSpec {
            name: "motorcycle".into(),
            domain: vec![(0.0, 1.0)],
            mean: MeanFn::Table(Interp1d::new(0.0, 1.0, MOTORCYCLE_MEAN.to_vec())?),
            noise: NoiseModel::Heteroscedastic(Interp1d::new(
                0.0,
                1.0,
                MOTORCYCLE_STDDEV.to_vec(),
            )?),
        },
        other => return Err(Error::UnknownSimulator(other.to_string())),
    };
    Ok(spec)
}

#[derive(Deserialize)]
struct TableFile {
    name: String,
    domain: [f64; 2],
    mean: Vec<f64>,
    stddev: Option<Vec<f64>>,
    noise_std: Option<f64>,
}

/// Load a 1-D table simulator from a declarative TOML file: `name`,
/// `domain = [lo, hi]`, `mean = [..]` knots, and exactly one of
/// `noise_std = σ` or `stddev = [..]` knots.
pub fn from_table_file(path: &std::path::Path) -> Result<SimulatorSpec> {
    let text = std::fs::read_to_string(path)?;
    from_table_str(&text)
}

/// Parse the table-simulator format from a string; see [`from_table_file`].
pub fn from_table_str(text: &str) -> Result<SimulatorSpec> {
    let file: TableFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let [lo, hi] = file.domain;
    let mean = Interp1d::new(lo, hi, file.mean)?;
    let noise = match (file.stddev, file.noise_std) {
        (Some(knots), None) => {
            if knots.len() != mean.num_knots() {
                return Err(Error::invalid(
                    "stddev table must have the same knot count as the mean table",
                ));
            }
            if knots.iter().any(|&v| v < 0.0) {
                return Err(Error::invalid("stddev knots must be ≥ 0"));
            }
            NoiseModel::Heteroscedastic(Interp1d::new(lo, hi, knots)?)
        }
        (None, Some(std)) => {
            if !(std >= 0.0) {
                return Err(Error::invalid("noise_std must be ≥ 0"));
            }
            NoiseModel::Homoscedastic(std)
        }
        _ => {
            return Err(Error::invalid(
                "specify exactly one of noise_std or stddev",
            ))
        }
    };
    Ok(SimulatorSpec {
        name: file.name,
        domain: vec![(lo, hi)],
        mean: MeanFn::Table(mean),
        noise,
    })
}
