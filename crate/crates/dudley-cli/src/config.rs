//! Run configuration: a flat TOML file, overridable from the command line.

use std::path::Path;

use dudley::flow::{SimOptions, DEFAULT_EVAL_POINTS, DEFAULT_GUARD_FRACTION, DEFAULT_RENORM_CADENCE, DEFAULT_TAIL_FRACTION};
use dudley::levy::{Density, LevyMeasure, LevySpec, DEFAULT_TRUNCATION};
use dudley::poincare::MetricParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every key is optional in the file; missing keys take the defaults below.
///
/// `nu` is `"zero"`, `"atomic"` (masses taken from `atoms`, a list of
/// `[r, mass]` pairs) or a density such as `"exp_tail:2"`,
/// `"power_smalljump:1.5,1"` or `"power_tail:3"`, integrated with `nodes`
/// quadrature nodes. `truncation = 0` disables the small-jump cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub d: usize,
    pub sigma: f64,
    pub nu: String,
    pub atoms: Vec<[f64; 2]>,
    pub nodes: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub tail_fraction: f64,
    pub guard_fraction: f64,
    pub eval_points: usize,
    pub kappa: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub renorm_cadence: usize,
    pub truncation: f64,
    /// Relative tolerance of the Monte Carlo alpha verdicts.
    pub alpha_tolerance: f64,
    /// Row stride of `simulate` output; jump rows are always written.
    pub stride: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 3,
            sigma: 1.0,
            nu: "zero".into(),
            atoms: Vec::new(),
            nodes: 512,
            horizon: 200.0,
            dt: 1e-3,
            n_paths: 100,
            seed: 20261014,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            guard_fraction: DEFAULT_GUARD_FRACTION,
            eval_points: DEFAULT_EVAL_POINTS,
            kappa: 1.0,
            beta: 1.0,
            gamma: 1.0,
            delta: 1.0,
            renorm_cadence: DEFAULT_RENORM_CADENCE,
            truncation: DEFAULT_TRUNCATION,
            alpha_tolerance: 0.05,
            stride: 1,
            out: None,
            format: Format::Json,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(bad(msg()))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let c: Self = toml::from_str(text).map_err(|e| bad(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => bad(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are plain TOML values")
    }

    /// Range checks on every field, then a full model validation.
    pub fn validate(&self) -> Result<(), CliError> {
        let finite = |v: f64| v.is_finite();
        check((2..=16).contains(&self.d), || format!("d must lie in [2, 16], got {}", self.d))?;
        check(finite(self.sigma) && self.sigma >= 0.0, || format!("sigma must be >= 0, got {}", self.sigma))?;
        check(finite(self.horizon) && self.horizon > 0.0 && self.horizon <= 1e6, || {
            format!("T must lie in (0, 1e6], got {}", self.horizon)
        })?;
        check(self.dt > 0.0 && self.dt <= 0.1, || format!("dt must lie in (0, 0.1], got {}", self.dt))?;
        check((1..=1_000_000).contains(&self.n_paths), || format!("n_paths must lie in [1, 1e6], got {}", self.n_paths))?;
        check(self.seed <= i64::MAX as u64, || format!("seed must be below 2^63, got {}", self.seed))?;
        check(self.tail_fraction > 0.0 && self.tail_fraction < 1.0, || {
            format!("tail_fraction must lie in (0, 1), got {}", self.tail_fraction)
        })?;
        check(self.guard_fraction >= 0.0 && self.guard_fraction < self.tail_fraction, || {
            format!("guard_fraction must lie in [0, tail_fraction), got {}", self.guard_fraction)
        })?;
        check(self.eval_points >= 10, || format!("eval_points must be >= 10, got {}", self.eval_points))?;
        check((8..=1_000_000).contains(&self.nodes), || format!("nodes must lie in [8, 1e6], got {}", self.nodes))?;
        check(self.renorm_cadence >= 1, || "renorm_cadence must be >= 1".into())?;
        check(self.truncation >= 0.0 && self.truncation < 1.0, || {
            format!("truncation must lie in [0, 1), got {}", self.truncation)
        })?;
        check(finite(self.alpha_tolerance) && self.alpha_tolerance > 0.0, || {
            format!("alpha_tolerance must be > 0, got {}", self.alpha_tolerance)
        })?;
        check(self.stride >= 1, || "stride must be >= 1".into())?;
        if self.nu != "atomic" {
            check(self.atoms.is_empty(), || "atoms given but nu is not \"atomic\"".into())?;
        }
        self.metric()?;
        self.spec()?;
        Ok(())
    }

    pub fn measure(&self) -> Result<LevyMeasure, CliError> {
        match self.nu.as_str() {
            "zero" => Ok(LevyMeasure::Zero),
            "atomic" => {
                if self.atoms.is_empty() {
                    return Err(bad("nu = \"atomic\" needs a non-empty atoms list"));
                }
                Ok(LevyMeasure::Atomic(self.atoms.iter().map(|a| (a[0], a[1])).collect()))
            }
            s => Density::parse(s, self.nodes).map(LevyMeasure::Density).map_err(|e| bad(format!("nu: {e}"))),
        }
    }

    pub fn spec(&self) -> Result<LevySpec, CliError> {
        LevySpec::new(self.d, self.sigma, self.measure()?).map_err(|e| bad(e.to_string()))
    }

    pub fn metric(&self) -> Result<MetricParams, CliError> {
        MetricParams::new(self.kappa, self.beta, self.gamma, self.delta).map_err(|e| bad(e.to_string()))
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            renorm_cadence: self.renorm_cadence,
            truncation: if self.truncation > 0.0 { Some(self.truncation) } else { None },
        }
    }
}
