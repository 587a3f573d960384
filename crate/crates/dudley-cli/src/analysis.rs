//! Per-path experiment records and the ensemble runner.

use dudley::flow::{self, graded_bases, path_seed, PathAnalysis, PathSample, Window};
use dudley::levy::LevySpec;
use dudley::lorentz::LorentzAlg;
use dudley::poincare::{MetricParams, PoincareAlg};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Everything a run needs, resolved once from the config.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: RunConfig,
    pub spec: LevySpec,
    pub metric: MetricParams,
}

impl Experiment {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        config.validate()?;
        let spec = config.spec()?;
        let metric = config.metric()?;
        Ok(Self { config, spec, metric })
    }

    pub fn seed(&self, index: usize) -> u64 {
        path_seed(self.config.seed, index as u64)
    }

    pub fn simulate(&self, index: usize) -> Result<PathSample, CliError> {
        let c = &self.config;
        Ok(flow::simulate_path_with(&self.spec, c.horizon, c.dt, self.seed(index), &c.sim_options())?)
    }

    pub fn analysis<'a>(&self, path: &'a PathSample) -> Result<PathAnalysis<'a>, CliError> {
        let mut a = PathAnalysis::new(path, self.config.tail_fraction)?;
        a.guard_fraction = self.config.guard_fraction;
        a.eval_points = self.config.eval_points;
        Ok(a)
    }

    /// Runs `f` on every path index in parallel; results come back in index order.
    pub fn run<R: Send>(&self, f: impl Fn(usize) -> Result<R, CliError> + Sync + Send) -> Result<Vec<R>, CliError> {
        (0..self.config.n_paths).into_par_iter().map(f).collect()
    }

    /// Random test vectors for one path, from a stream separate from the simulator's.
    pub fn probes(&self, index: usize) -> Probes {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed(index));
        rng.set_stream(2);
        Probes::draw(self.config.d, &mut rng)
    }
}

/// Directions of Lie(G~) used by the Lyapunov and stable-manifold experiments.
/// `plus` and `zero` are anchored (to be read through Ad(g_inf)), `generic` is absolute.
#[derive(Debug, Clone)]
pub struct Probes {
    pub plus: PoincareAlg,
    pub zero: PoincareAlg,
    pub generic: PoincareAlg,
    /// Unit direction in the U^0 translations.
    pub u0: PoincareAlg,
}

fn combination(basis: &[PoincareAlg], rng: &mut ChaCha8Rng) -> PoincareAlg {
    let d = basis[0].dim();
    basis.iter().fold(PoincareAlg::zero(d), |acc, b| &acc + &b.scale(StandardNormal.sample(rng)))
}

impl Probes {
    pub fn draw(d: usize, rng: &mut ChaCha8Rng) -> Self {
        let (plus, zero) = graded_bases(d);
        let p = combination(&plus, rng);
        // the non-plus part of the zero basis, so the U~0 component is nonzero
        let z = &combination(&zero[plus.len()..], rng) + &combination(&plus, rng);
        let n = dudley::poincare::algebra_dim(d);
        let coords: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let generic = PoincareAlg::from_coords(d, &coords).expect("length matches");
        let h: Vec<PoincareAlg> = (2..=d).map(|i| PoincareAlg::h(d, i)).collect();
        let u0 = combination(&h, rng);
        let s = u0.trans.euclid_norm();
        Self { plus: p, zero: z, generic, u0: u0.scale(1.0 / s) }
    }
}

fn nan(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

/// OLS slope through (x, y) pairs with finite y.
pub fn ols_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.filter(|p| p.1.is_finite()).collect();
    if pts.len() < 3 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        f64::NAN
    }
}

/// A per-path record with named scalar statistics for ensemble aggregation.
pub trait Record: Serialize {
    fn csv_header(d: usize) -> Vec<String>;
    fn csv_row(&self) -> Vec<String>;
    fn scalars(&self) -> Vec<(&'static str, f64)>;
}

fn cell(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsRecord {
    pub index: usize,
    pub seed: u64,
    pub jumps: usize,
    /// alpha_T / T.
    pub alpha_rate: f64,
    pub alpha_hat: f64,
    pub b_inf_hat: Vec<f64>,
    pub theta_inf_hat: Vec<f64>,
    pub lambda_inf_hat: f64,
    pub flag: Option<String>,
    /// Slope of log |b_t - b_inf_hat|.
    pub nilpotent_slope: f64,
    /// Slopes of log |lambda - eta^-|, log |eta^0|, log eta^+.
    pub lambda_slope: f64,
    pub eta_zero_slope: f64,
    pub eta_plus_slope: f64,
    pub rotation_slope: f64,
    pub rotation_sup_ratio: f64,
    /// Residual rotation with alpha_hat scaled by 1.5.
    pub wrong_alpha_slope: f64,
}

impl AsymptoticsRecord {
    pub fn compute(index: usize, a: &PathAnalysis<'_>) -> Self {
        let path = a.path;
        let est = &a.estimates;
        let last = path.len() - 1;
        let [ls, zs, ps] = a.translation_slopes();
        let rot = flow::ResidualRotation::from_series(a, a.residual_rotation_with(est.alpha_hat));
        let wrong = flow::ResidualRotation::from_series(a, a.residual_rotation_with(1.5 * est.alpha_hat));
        Self {
            index,
            seed: path.seed,
            jumps: path.jumps.len(),
            alpha_rate: path.u(last) / path.times()[last],
            alpha_hat: est.alpha_hat,
            b_inf_hat: est.b_inf_hat.clone(),
            theta_inf_hat: est.theta_inf_hat.clone(),
            lambda_inf_hat: est.lambda_inf_hat,
            flag: est.diagnostics.flag.clone(),
            nilpotent_slope: nan(a.nilpotent_decay_slope()),
            lambda_slope: nan(ls),
            eta_zero_slope: nan(zs),
            eta_plus_slope: nan(ps),
            rotation_slope: rot.tail_slope,
            rotation_sup_ratio: rot.tail_sup_ratio,
            wrong_alpha_slope: wrong.tail_slope,
        }
    }
}

impl Record for AsymptoticsRecord {
    fn csv_header(d: usize) -> Vec<String> {
        let mut h: Vec<String> = ["index", "seed", "jumps", "alpha_rate", "alpha_hat"].map(String::from).to_vec();
        h.extend((1..d).map(|i| format!("b_inf{i}")));
        h.extend((1..=d).map(|i| format!("theta_inf{i}")));
        h.extend(
            [
                "lambda_inf",
                "nilpotent_slope",
                "lambda_slope",
                "eta_zero_slope",
                "eta_plus_slope",
                "rotation_slope",
                "rotation_sup_ratio",
                "wrong_alpha_slope",
                "flag",
            ]
            .map(String::from),
        );
        h
    }

    fn csv_row(&self) -> Vec<String> {
        let mut r = vec![self.index.to_string(), self.seed.to_string(), self.jumps.to_string()];
        r.push(cell(self.alpha_rate));
        r.push(cell(self.alpha_hat));
        r.extend(self.b_inf_hat.iter().map(|&x| cell(x)));
        r.extend(self.theta_inf_hat.iter().map(|&x| cell(x)));
        for x in [
            self.lambda_inf_hat,
            self.nilpotent_slope,
            self.lambda_slope,
            self.eta_zero_slope,
            self.eta_plus_slope,
            self.rotation_slope,
            self.rotation_sup_ratio,
            self.wrong_alpha_slope,
        ] {
            r.push(cell(x));
        }
        r.push(self.flag.clone().unwrap_or_default());
        r
    }

    fn scalars(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("alpha_rate", self.alpha_rate),
            ("alpha_hat", self.alpha_hat),
            ("lambda_inf_hat", self.lambda_inf_hat),
            ("nilpotent_slope", self.nilpotent_slope),
            ("lambda_slope", self.lambda_slope),
            ("eta_zero_slope", self.eta_zero_slope),
            ("eta_plus_slope", self.eta_plus_slope),
            ("rotation_slope", self.rotation_slope),
            ("rotation_sup_ratio", self.rotation_sup_ratio),
            ("wrong_alpha_slope", self.wrong_alpha_slope),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovRecord {
    pub index: usize,
    pub seed: u64,
    pub alpha_hat: f64,
    pub flag: Option<String>,
    /// X~ in Ad(g_inf)(U~+).
    pub slope_minus: f64,
    /// X~ in Ad(g_inf)(U~0 + U~+) outside Ad(g_inf)(U~+).
    pub slope_zero: f64,
    pub slope_generic: f64,
}

impl LyapunovRecord {
    pub fn compute(index: usize, a: &PathAnalysis<'_>, probes: &Probes, p: &MetricParams) -> Self {
        Self {
            index,
            seed: a.path.seed,
            alpha_hat: a.estimates.alpha_hat,
            flag: a.estimates.diagnostics.flag.clone(),
            slope_minus: a.lyapunov_exponent_anchored(&probes.plus, p).unwrap_or(f64::NAN),
            slope_zero: a.lyapunov_exponent_anchored(&probes.zero, p).unwrap_or(f64::NAN),
            slope_generic: a.lyapunov_exponent(&probes.generic, p).unwrap_or(f64::NAN),
        }
    }
}

impl Record for LyapunovRecord {
    fn csv_header(_: usize) -> Vec<String> {
        ["index", "seed", "alpha_hat", "slope_minus", "slope_zero", "slope_generic", "flag"].map(String::from).to_vec()
    }

    fn csv_row(&self) -> Vec<String> {
        vec![
            self.index.to_string(),
            self.seed.to_string(),
            cell(self.alpha_hat),
            cell(self.slope_minus),
            cell(self.slope_zero),
            cell(self.slope_generic),
            self.flag.clone().unwrap_or_default(),
        ]
    }

    fn scalars(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("alpha_hat", self.alpha_hat),
            ("slope_minus", self.slope_minus),
            ("slope_zero", self.slope_zero),
            ("slope_generic", self.slope_generic),
        ]
    }
}

/// Scale of the stable-manifold perturbations.
pub const STABLE_SCALE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StableRecord {
    pub index: usize,
    pub seed: u64,
    pub alpha_hat: f64,
    pub flag: Option<String>,
    /// Slope of log(upper) for Y~ in V_inf^-.
    pub decay_slope: f64,
    /// Tail minimum of the lower bound for Y~ in V_inf^- (should collapse).
    pub contracting_lower_min: f64,
    /// Tail minimum of the lower bound with an added A component.
    pub abelian_lower_min: f64,
    /// Tail minimum of the lower bound with an added U^0 component.
    pub u0_lower_min: f64,
    /// Slope of log(upper) when the U~+ direction is used without Ad(g_inf).
    pub control_slope: f64,
}

impl StableRecord {
    pub fn compute(index: usize, a: &PathAnalysis<'_>, probes: &Probes, p: &MetricParams) -> Self {
        let d = a.path.dim();
        let w = a.reference_window();
        let z = probes.plus.scale(STABLE_SCALE / dudley::poincare::alg_norm(&probes.plus, p));
        let tail = |g: &[flow::GapSample]| g.iter().filter(|s| s.t >= w.start && s.t <= w.end).copied().collect::<Vec<_>>();
        let slope = |g: &[flow::GapSample]| ols_slope(tail(g).into_iter().map(|s| (s.t, s.upper.ln())));
        let lower_min = |g: &[flow::GapSample]| tail(g).iter().map(|s| s.lower).fold(f64::INFINITY, f64::min);
        let run = |z: &PoincareAlg, anchored: bool| {
            if anchored {
                a.stable_manifold_gap_anchored(z, p)
            } else {
                a.stable_manifold_gap(z, p)
            }
            .unwrap_or_default()
        };
        let contracting = run(&z, true);
        let abelian = run(&(&z + &PoincareAlg::from_lie(LorentzAlg::v(d, 1)).scale(STABLE_SCALE)), true);
        let u0 = run(&(&z + &probes.u0.scale(STABLE_SCALE)), true);
        let control = run(&z, false);
        Self {
            index,
            seed: a.path.seed,
            alpha_hat: a.estimates.alpha_hat,
            flag: a.estimates.diagnostics.flag.clone(),
            decay_slope: slope(&contracting),
            contracting_lower_min: lower_min(&contracting),
            abelian_lower_min: lower_min(&abelian),
            u0_lower_min: lower_min(&u0),
            control_slope: slope(&control),
        }
    }
}

impl Record for StableRecord {
    fn csv_header(_: usize) -> Vec<String> {
        [
            "index",
            "seed",
            "alpha_hat",
            "decay_slope",
            "contracting_lower_min",
            "abelian_lower_min",
            "u0_lower_min",
            "control_slope",
            "flag",
        ]
        .map(String::from)
        .to_vec()
    }

    fn csv_row(&self) -> Vec<String> {
        vec![
            self.index.to_string(),
            self.seed.to_string(),
            cell(self.alpha_hat),
            cell(self.decay_slope),
            cell(self.contracting_lower_min),
            cell(self.abelian_lower_min),
            cell(self.u0_lower_min),
            cell(self.control_slope),
            self.flag.clone().unwrap_or_default(),
        ]
    }

    fn scalars(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("alpha_hat", self.alpha_hat),
            ("decay_slope", self.decay_slope),
            ("contracting_lower_min", self.contracting_lower_min),
            ("abelian_lower_min", self.abelian_lower_min),
            ("u0_lower_min", self.u0_lower_min),
            ("control_slope", self.control_slope),
        ]
    }
}

/// alpha_t / t at the row closest to each of `times` (for horizon sweeps on
/// one simulation: the simulator is prefix-consistent in T).
pub fn alpha_rates_at(path: &PathSample, times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            let i = path.index_at(t);
            path.u(i) / path.times()[i]
        })
        .collect()
}

/// The regression window used for records, for reporting.
pub fn reference_window(c: &RunConfig) -> Window {
    Window::tail(c.horizon, c.tail_fraction, c.guard_fraction)
}
