//! Run configuration read from JSON.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fpme::evolve::{SolverConfig, TimeGrid, TimeLayout};
use fpme::grid::{build_grid, Domain, Interval, MIN_CELLS};
use fpme::nonlinearity::Nonlinearity;
use fpme::operator::{normalization, KernelSpec};
use fpme::verify::Scenario;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dim: usize,
    pub bounds: Vec<[f64; 2]>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Fractional {
        s: f64,
    },
    /// `c (1 + a sin(k x) sin(k y)) / |x - y|^{N+2s}` on the first coordinate,
    /// clamped to the domain.
    Rough {
        s: f64,
        lambda: f64,
        big_lambda: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_frequency")]
        frequency: f64,
    },
    Local,
}

fn default_amplitude() -> f64 {
    0.5
}

fn default_frequency() -> f64 {
    5.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    Power { m: f64 },
    TwoPower { m1: f64, m2: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumConfig {
    /// `height` on the box `support^dim`, in coordinates relative to the domain.
    Indicator { support: [f64; 2], height: f64 },
    /// `scale · Φ1^exponent`, the exponent defaulting to `1/m`.
    EigenPower {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        exponent: Option<f64>,
    },
    /// CSV with header `node,value` and one row per node.
    File { path: PathBuf },
    Zero,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t0: f64,
    pub t1: f64,
    pub layout: TimeLayout,
    /// Extra times the grid must contain.
    #[serde(default)]
    pub stops: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub c_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub kernel: KernelConfig,
    pub nonlinearity: NonlinearityConfig,
    pub initial_datum: DatumConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    pub constants: Constants,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig {
                dim: 1,
                bounds: vec![[0.0, 1.0]],
                n: 256,
            },
            kernel: KernelConfig::Fractional { s: 0.3 },
            nonlinearity: NonlinearityConfig::Power { m: 2.0 },
            initial_datum: DatumConfig::Indicator {
                support: [0.4, 0.6],
                height: 1.0,
            },
            time: TimeConfig {
                t0: 0.0,
                t1: 1.0,
                layout: TimeLayout::GeometricFrom {
                    first_step: 1e-6,
                    ratio: 1.15,
                },
                stops: Vec::new(),
            },
            delta: 0.0,
            solver: SolverConfig::default(),
            constants: Constants { c_star: 1.0 },
            seed: 7,
            output_dir: PathBuf::from("fpme-out"),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    /// Reads and validates a config. Relative datum paths are resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(config_err)?;
        if let DatumConfig::File { path: datum } = &mut cfg.initial_datum {
            if datum.is_relative() {
                if let Some(dir) = path.parent() {
                    *datum = dir.join(&*datum);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let d = &self.domain;
        if d.dim != 1 && d.dim != 2 {
            return Err(config_err(format!("domain.dim must be 1 or 2, got {}", d.dim)));
        }
        if d.bounds.len() != d.dim {
            return Err(config_err(format!("domain.bounds has {} entries for dim {}", d.bounds.len(), d.dim)));
        }
        if d.bounds.iter().any(|b| !(b[0].is_finite() && b[1].is_finite() && b[1] > b[0])) {
            return Err(config_err("every domain axis needs finite a < b"));
        }
        if d.n < MIN_CELLS {
            return Err(config_err(format!("domain.n must be at least {MIN_CELLS}, got {}", d.n)));
        }
        match self.kernel {
            KernelConfig::Fractional { s } => check_order(s)?,
            KernelConfig::Rough {
                s,
                lambda,
                big_lambda,
                amplitude,
                frequency,
            } => {
                check_order(s)?;
                if !(lambda > 0.0 && big_lambda >= lambda) {
                    return Err(config_err("rough kernel needs 0 < lambda <= big_lambda"));
                }
                if !(amplitude.is_finite() && frequency.is_finite()) {
                    return Err(config_err("rough kernel modulation must be finite"));
                }
            }
            KernelConfig::Local => {}
        }
        self.nonlinearity().map_err(config_err)?;
        match &self.initial_datum {
            DatumConfig::Indicator { support, height } => {
                let [lo, hi] = *support;
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return Err(config_err(format!("indicator support [{lo}, {hi}] must lie in [0, 1]")));
                }
                if !(*height >= 0.0 && height.is_finite()) {
                    return Err(config_err("indicator height must be finite and >= 0"));
                }
            }
            DatumConfig::EigenPower { scale, exponent } => {
                if !(*scale >= 0.0) || exponent.is_some_and(|e| !(e > 0.0)) {
                    return Err(config_err("eigen_power needs scale >= 0 and exponent > 0"));
                }
            }
            DatumConfig::File { path } => {
                if !path.is_file() {
                    return Err(config_err(format!("datum file {} does not exist", path.display())));
                }
            }
            DatumConfig::Zero => {}
        }
        let t = &self.time;
        if !(t.t0.is_finite() && t.t1.is_finite() && t.t1 > t.t0) {
            return Err(config_err(format!("time.t1 must exceed time.t0, got [{}, {}]", t.t0, t.t1)));
        }
        self.time_grid()?;
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(config_err(format!("delta must be >= 0, got {}", self.delta)));
        }
        self.solver.validate().map_err(config_err)?;
        if !(self.constants.c_star > 0.0) {
            return Err(config_err("constants.c_star must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_domain(&self) -> CliResult<Arc<Domain<f64>>> {
        let bounds: Vec<Interval<f64>> = self.domain.bounds.iter().map(|b| Interval::new(b[0], b[1])).collect();
        Ok(Arc::new(build_grid(self.domain.dim, &bounds, self.domain.n).map_err(config_err)?))
    }

    pub fn kernel_spec(&self) -> KernelSpec<f64> {
        match self.kernel {
            KernelConfig::Fractional { s } => KernelSpec::fractional(s),
            KernelConfig::Local => KernelSpec::Local,
            KernelConfig::Rough {
                s,
                lambda,
                big_lambda,
                amplitude,
                frequency,
            } => {
                let dim = self.domain.dim;
                let c = normalization(dim, s);
                let [lo, hi] = self.domain.bounds[0];
                KernelSpec::rough(s, lambda, big_lambda, move |x: &[f64; 2], y: &[f64; 2]| {
                    let r2: f64 = (0..dim).map(|a| (x[a] - y[a]).powi(2)).sum();
                    let (a, b) = (x[0].clamp(lo, hi), y[0].clamp(lo, hi));
                    let modulation = 1.0 + amplitude * (frequency * a).sin() * (frequency * b).sin();
                    c * modulation * r2.powf(-(dim as f64 + 2.0 * s) / 2.0)
                })
            }
        }
    }

    pub fn nonlinearity(&self) -> fpme::Result<Nonlinearity> {
        match self.nonlinearity {
            NonlinearityConfig::Power { m } => Nonlinearity::power(m),
            NonlinearityConfig::TwoPower { m1, m2 } => Nonlinearity::two_power(m1, m2),
        }
    }

    pub fn time_grid(&self) -> CliResult<TimeGrid<f64>> {
        let t = &self.time;
        let grid = TimeGrid::new(t.t0, t.t1, t.layout).map_err(config_err)?;
        if t.stops.is_empty() {
            Ok(grid)
        } else {
            grid.with_stops(&t.stops).map_err(config_err)
        }
    }

    /// Scenario for the verification suites. Needs the fractional kernel, a
    /// pure power and an indicator datum.
    pub fn scenario(&self) -> CliResult<Scenario> {
        let KernelConfig::Fractional { s } = self.kernel else {
            return Err(config_err("verification needs kernel.kind = fractional"));
        };
        let NonlinearityConfig::Power { m } = self.nonlinearity else {
            return Err(config_err("verification needs nonlinearity.kind = power"));
        };
        let DatumConfig::Indicator { support, height } = self.initial_datum else {
            return Err(config_err("verification needs initial_datum.kind = indicator"));
        };
        let sc = Scenario {
            name: "cli".into(),
            dim: self.domain.dim,
            bounds: self.domain.bounds.clone(),
            n: self.domain.n,
            coarse_n: self.domain.n / 2,
            s,
            m,
            support,
            height,
            c_star: self.constants.c_star,
            seed: self.seed,
            solver: self.solver,
        };
        sc.validate().map_err(config_err)?;
        Ok(sc)
    }
}

fn check_order(s: f64) -> CliResult<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(config_err(format!("kernel.s must lie in (0, 1), got {s}")))
    }
}
