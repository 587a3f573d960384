//! Process parameters (d, sigma, nu), jump sampling and the top exponent alpha.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::quad::{integrate, integrate_half_line};
use crate::{Error, Result};

/// Default small-jump cutoff for infinite-activity measures.
pub const DEFAULT_TRUNCATION: f64 = 1e-3;
const QUAD_TOL: f64 = 1e-10;

pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Named density families with closed-form masses and samplers.
#[derive(Clone)]
pub enum DensityKind {
    /// lambda e^{-lambda r} on (0, inf).
    ExpTail { lambda: f64 },
    /// r^{-beta} on (0, r_hi].
    PowerSmallJump { beta: f64, r_hi: f64 },
    /// r^{-p} on [1, inf).
    PowerTail { p: f64 },
    /// Arbitrary rate on [r_lo, r_hi]; sampled through a tabulated inverse CDF.
    Custom { name: String, rate: RateFn, r_lo: f64, r_hi: f64 },
}

#[derive(Clone)]
pub struct Density {
    pub kind: DensityKind,
    /// Cells of the inverse CDF table (custom densities only).
    pub nodes: usize,
}

impl Density {
    pub fn new(kind: DensityKind, nodes: usize) -> Self {
        Self { kind, nodes: nodes.max(16) }
    }

    /// Parse "exp_tail:1.5", "power_smalljump:2.5,1", "power_tail:2".
    pub fn parse(s: &str, nodes: usize) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: core::result::Result<Vec<f64>, _> =
            args.split(',').filter(|a| !a.trim().is_empty()).map(|a| a.trim().parse::<f64>()).collect();
        let nums = nums.map_err(|e| Error::InvalidSpec(format!("density `{s}`: {e}")))?;
        let want = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("density `{name}` takes {n} parameter(s), got {}", nums.len())))
            }
        };
        let kind = match name.trim() {
            "exp_tail" => {
                want(1)?;
                DensityKind::ExpTail { lambda: nums[0] }
            }
            "power_smalljump" => {
                want(2)?;
                DensityKind::PowerSmallJump { beta: nums[0], r_hi: nums[1] }
            }
            "power_tail" => {
                want(1)?;
                DensityKind::PowerTail { p: nums[0] }
            }
            other => return Err(Error::InvalidSpec(format!("unknown density `{other}`"))),
        };
        let d = Self::new(kind, nodes);
        d.check_params()?;
        Ok(d)
    }

    fn check_params(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        match &self.kind {
            DensityKind::ExpTail { lambda } if !(*lambda > 0.0 && lambda.is_finite()) => {
                bad(format!("exp_tail needs lambda > 0, got {lambda}"))
            }
            DensityKind::PowerSmallJump { beta, r_hi } if !(beta.is_finite() && *r_hi > 0.0 && r_hi.is_finite()) => {
                bad(format!("power_smalljump needs finite beta and r_hi > 0, got {beta}, {r_hi}"))
            }
            DensityKind::PowerTail { p } if !p.is_finite() => bad(format!("power_tail needs finite p, got {p}")),
            DensityKind::Custom { r_lo, r_hi, .. } if !(*r_lo >= 0.0 && r_hi > r_lo) => {
                bad(format!("custom density needs 0 <= r_lo < r_hi, got [{r_lo}, {r_hi}]"))
            }
            _ => Ok(()),
        }
    }

    /// The canonical string form (custom densities use their name).
    pub fn label(&self) -> String {
        match &self.kind {
            DensityKind::ExpTail { lambda } => format!("exp_tail:{lambda}"),
            DensityKind::PowerSmallJump { beta, r_hi } => format!("power_smalljump:{beta},{r_hi}"),
            DensityKind::PowerTail { p } => format!("power_tail:{p}"),
            DensityKind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            DensityKind::ExpTail { .. } => (0.0, f64::INFINITY),
            DensityKind::PowerSmallJump { r_hi, .. } => (0.0, *r_hi),
            DensityKind::PowerTail { .. } => (1.0, f64::INFINITY),
            DensityKind::Custom { r_lo, r_hi, .. } => (*r_lo, *r_hi),
        }
    }

    pub fn rate(&self, r: f64) -> f64 {
        let (lo, hi) = self.support();
        if r < lo || r > hi {
            return 0.0;
        }
        match &self.kind {
            DensityKind::ExpTail { lambda } => lambda * (-lambda * r).exp(),
            DensityKind::PowerSmallJump { beta, .. } => r.powf(-beta),
            DensityKind::PowerTail { p } => r.powf(-p),
            DensityKind::Custom { rate, .. } => rate(r),
        }
    }

    /// Integral of h(r) rho(r) over [a, b] intersected with the support.
    fn integral(&self, h: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, bool) {
        let (lo, hi) = self.support();
        let (a, b) = (a.max(lo), b.min(hi));
        if a >= b {
            return (0.0, true);
        }
        let res = integrate_half_line(|r| h(r) * self.rate(r), a, b, QUAD_TOL, 1e-300);
        (res.value, res.converged && res.value.is_finite())
    }

    fn levy_condition(&self) -> bool {
        match &self.kind {
            DensityKind::ExpTail { .. } => true,
            DensityKind::PowerSmallJump { beta, .. } => *beta < 3.0,
            DensityKind::PowerTail { p } => *p > 1.0,
            DensityKind::Custom { .. } => {
                self.integral(|r| r * r, 0.0, 1.0).1 && self.integral(|_| 1.0, 1.0, f64::INFINITY).1
            }
        }
    }

    fn tail_integrable(&self) -> bool {
        match &self.kind {
            DensityKind::ExpTail { .. } | DensityKind::PowerSmallJump { .. } => true,
            DensityKind::PowerTail { p } => *p > 2.0,
            DensityKind::Custom { .. } => self.integral(|r| r, 1.0, f64::INFINITY).1,
        }
    }

    /// Mass of [eps, inf); +inf when it diverges.
    fn mass_above(&self, eps: f64) -> f64 {
        match &self.kind {
            DensityKind::ExpTail { lambda } => (-lambda * eps).exp(),
            DensityKind::PowerSmallJump { beta, r_hi } => {
                if eps >= *r_hi {
                    0.0
                } else if eps <= 0.0 {
                    if *beta < 1.0 {
                        r_hi.powf(1.0 - beta) / (1.0 - beta)
                    } else {
                        f64::INFINITY
                    }
                } else if (beta - 1.0).abs() < 1e-12 {
                    (r_hi / eps).ln()
                } else {
                    (r_hi.powf(1.0 - beta) - eps.powf(1.0 - beta)) / (1.0 - beta)
                }
            }
            DensityKind::PowerTail { p } => {
                if *p <= 1.0 {
                    f64::INFINITY
                } else {
                    eps.max(1.0).powf(1.0 - p) / (p - 1.0)
                }
            }
            DensityKind::Custom { .. } => {
                let (v, ok) = self.integral(|_| 1.0, eps, f64::INFINITY);
                if ok {
                    v
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Density({}, nodes={})", self.label(), self.nodes)
    }
}

impl PartialEq for Density {
    // Custom closures compare by identity.
    fn eq(&self, other: &Self) -> bool {
        if self.nodes != other.nodes {
            return false;
        }
        match (&self.kind, &other.kind) {
            (DensityKind::Custom { rate: a, .. }, DensityKind::Custom { rate: b, .. }) => Arc::ptr_eq(a, b),
            (DensityKind::Custom { .. }, _) | (_, DensityKind::Custom { .. }) => false,
            _ => self.label() == other.label(),
        }
    }
}

/// The Levy measure nu on the rapidities.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyMeasure {
    Zero,
    /// (r_j, c_j): mass c_j at rapidity r_j.
    Atomic(Vec<(f64, f64)>),
    Density(Density),
}

/// Parameters of a Dudley process: space dimension, diffusion coefficient and
/// Levy measure.
#[derive(Debug, Clone, PartialEq)]
pub struct LevySpec {
    pub d: usize,
    pub sigma: f64,
    pub nu: LevyMeasure,
    tail_integrable: bool,
}

impl LevySpec {
    pub fn new(d: usize, sigma: f64, nu: LevyMeasure) -> Result<Self> {
        let mut s = Self { d, sigma, nu, tail_integrable: true };
        let diag = validate(&s)?;
        s.tail_integrable = diag.tail_integrable;
        Ok(s)
    }

    pub fn tail_integrable(&self) -> bool {
        self.tail_integrable
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub levy_condition: bool,
    pub tail_integrable: bool,
    /// nu(0, inf); +inf for infinite activity.
    pub total_mass: f64,
    pub finite_activity: bool,
    pub alpha_defined: bool,
}

pub fn validate(spec: &LevySpec) -> Result<Diagnostics> {
    if spec.d < 2 {
        return Err(Error::DimensionTooSmall(spec.d));
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidSpec(format!("sigma must be finite and >= 0, got {}", spec.sigma)));
    }
    let (levy, tail, mass) = match &spec.nu {
        LevyMeasure::Zero => (true, true, 0.0),
        LevyMeasure::Atomic(atoms) => {
            if atoms.is_empty() {
                return Err(Error::InvalidSpec("atomic measure with no atoms".to_string()));
            }
            for &(r, c) in atoms {
                if !(r > 0.0 && r.is_finite() && c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidSpec(format!("atom ({r}, {c}) needs r > 0 and mass > 0")));
                }
            }
            (true, true, atoms.iter().map(|a| a.1).sum())
        }
        LevyMeasure::Density(den) => {
            den.check_params()?;
            (den.levy_condition(), den.tail_integrable(), den.mass_above(0.0))
        }
    };
    if !levy {
        return Err(Error::InvalidSpec("Levy condition: integral of min(1, r^2) nu(dr) diverges".to_string()));
    }
    if spec.sigma == 0.0 && matches!(spec.nu, LevyMeasure::Zero) {
        return Err(Error::InvalidSpec("sigma = 0 and nu = 0 is the trivial process".to_string()));
    }
    Ok(Diagnostics {
        levy_condition: levy,
        tail_integrable: tail,
        total_mass: mass,
        finite_activity: mass.is_finite(),
        alpha_defined: tail,
    })
}

/// (r cosh r - sinh r) / sinh r = r coth r - 1. The Laurent series is used
/// below 0.05, where the subtraction would lose digits.
pub fn alpha_integrand(r: f64) -> f64 {
    if r < 0.05 {
        let r2 = r * r;
        return r2 * (1.0 / 3.0 + r2 * (-1.0 / 45.0 + r2 * (2.0 / 945.0 - r2 / 4725.0)));
    }
    if r > 20.0 {
        // coth r = 1 + 2e^{-2r} / (1 - e^{-2r})
        let e = (-2.0 * r).exp();
        return r - 1.0 + 2.0 * r * e / (1.0 - e);
    }
    r / r.tanh() - 1.0
}

/// log(cosh r + cos(phi) sinh r) = r + log(cos^2(phi/2) + e^{-2r} sin^2(phi/2)).
fn log_boost_time(r: f64, phi: f64) -> f64 {
    let s = (0.5 * phi).sin();
    if r > 1.0 {
        let c = (0.5 * phi).cos();
        r + (c * c + (-2.0 * r).exp() * s * s).ln()
    } else {
        r + (-(s * s) * (-(-2.0 * r).exp_m1())).ln_1p()
    }
}

/// Mean of log(cosh r + theta^1 sinh r) with theta uniform on S^{d-1}: the
/// mean increment of the abelian coordinate produced by one jump of size r.
/// Equals [`alpha_integrand`] for d = 3 only; for d = 2 it is 2 log cosh(r/2).
pub fn jump_log_mean(d: usize, r: f64) -> f64 {
    if d == 3 {
        return alpha_integrand(r);
    }
    let w = |phi: f64| phi.sin().powi(d as i32 - 2);
    let pi = core::f64::consts::PI;
    let num = integrate(|phi| log_boost_time(r, phi) * w(phi), 0.0, pi, 1e-12, 1e-300).value;
    let den = integrate(w, 0.0, pi, 1e-13, 1e-300).value;
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBreakdown {
    pub diffusive: f64,
    pub jump: f64,
}

impl AlphaBreakdown {
    pub fn total(&self) -> f64 {
        self.diffusive + self.jump
    }
}

fn jump_integral(spec: &LevySpec, h: impl Fn(f64) -> f64) -> Result<f64> {
    if !spec.tail_integrable {
        return Err(Error::NotTailIntegrable);
    }
    Ok(match &spec.nu {
        LevyMeasure::Zero => 0.0,
        LevyMeasure::Atomic(atoms) => atoms.iter().map(|&(r, c)| c * h(r)).sum(),
        LevyMeasure::Density(den) => den.integral(h, 0.0, f64::INFINITY).0,
    })
}

/// alpha = (d-1) sigma^2 / 2 + integral of (r cosh r - sinh r)/sinh r nu(dr).
pub fn alpha_breakdown(spec: &LevySpec) -> Result<AlphaBreakdown> {
    Ok(AlphaBreakdown {
        diffusive: (spec.d as f64 - 1.0) * spec.sigma * spec.sigma / 2.0,
        jump: jump_integral(spec, alpha_integrand)?,
    })
}

pub fn closed_form_alpha(spec: &LevySpec) -> Result<f64> {
    alpha_breakdown(spec).map(|a| a.total())
}

/// Drift of the abelian coordinate in dimension d: the jump integrand is
/// averaged against the law of theta^1 on S^{d-1} (uniform on [-1, 1] only
/// when d = 3). Coincides with [`alpha_breakdown`] for d = 3.
pub fn sphere_averaged_alpha(spec: &LevySpec) -> Result<AlphaBreakdown> {
    let d = spec.d;
    Ok(AlphaBreakdown {
        diffusive: (d as f64 - 1.0) * spec.sigma * spec.sigma / 2.0,
        jump: jump_integral(spec, |r| jump_log_mean(d, r))?,
    })
}

/// One jump of the Poisson random measure.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub r: f64,
    pub theta: Vec<f64>,
}

/// Uniform direction on S^{d-1}.
pub fn uniform_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// d i.i.d. N(0, sigma^2 dt) values.
pub fn gaussian_increments<R: Rng + ?Sized>(d: usize, sigma: f64, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameters(format!("dt must be positive, got {dt}")));
    }
    let s = sigma * dt.sqrt();
    Ok((0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            s * z
        })
        .collect())
}

#[derive(Debug, Clone)]
struct Table {
    edges: Vec<f64>,
    cdf: Vec<f64>,
}

impl Table {
    fn build(den: &Density, a: f64, b: f64) -> Result<Self> {
        let n = den.nodes;
        let map = |t: f64| -> f64 {
            if b.is_finite() {
                if a > 0.0 && b / a > 100.0 {
                    a * (b / a).powf(t)
                } else {
                    a + (b - a) * t
                }
            } else {
                a + t / (1.0 - t)
            }
        };
        let mut edges = Vec::with_capacity(n + 1);
        for i in 0..=n {
            edges.push(if i == n { b } else { map(i as f64 / n as f64) });
        }
        let mut cdf = Vec::with_capacity(n + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in edges.windows(2) {
            acc += den.integral(|_| 1.0, w[0], w[1]).0;
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::InvalidSpec(format!("density {} has no finite mass above the cutoff", den.label())));
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Ok(Self { edges, cdf })
    }

    fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1) - 1;
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let (r0, mut r1) = (self.edges[i], self.edges[i + 1]);
        if !r1.is_finite() {
            r1 = 2.0 * r0.max(1.0);
        }
        if c1 > c0 {
            r0 + (r1 - r0) * (u - c0) / (c1 - c0)
        } else {
            r0
        }
    }
}

/// The finite jump law actually simulated: rate and rapidity sampler.
#[derive(Debug, Clone)]
pub struct JumpLaw {
    /// Jump intensity nu([eps, inf)).
    pub rate: f64,
    /// Cutoff below which jumps are dropped (0 for finite activity).
    pub cutoff: f64,
    /// The alpha mass of the dropped jumps: integral over (0, cutoff) of f(r) nu(dr).
    pub neglected_alpha: f64,
    kind: LawKind,
}

#[derive(Debug, Clone)]
enum LawKind {
    None,
    Atoms { r: Vec<f64>, cum: Vec<f64> },
    Exp { lambda: f64, shift: f64 },
    SmallPower { beta: f64, lo: f64, hi: f64 },
    Pareto { p: f64, lo: f64 },
    Table(Table),
}

impl JumpLaw {
    /// Finite-activity measures are used as they are; infinite-activity ones
    /// keep only jumps r >= truncation.
    pub fn new(spec: &LevySpec, truncation: Option<f64>) -> Result<Self> {
        let none = || JumpLaw { rate: 0.0, cutoff: 0.0, neglected_alpha: 0.0, kind: LawKind::None };
        match &spec.nu {
            LevyMeasure::Zero => Ok(none()),
            LevyMeasure::Atomic(atoms) => {
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                let mut acc = 0.0;
                let cum = atoms
                    .iter()
                    .map(|a| {
                        acc += a.1 / total;
                        acc
                    })
                    .collect();
                Ok(JumpLaw {
                    rate: total,
                    cutoff: 0.0,
                    neglected_alpha: 0.0,
                    kind: LawKind::Atoms { r: atoms.iter().map(|a| a.0).collect(), cum },
                })
            }
            LevyMeasure::Density(den) => {
                let full = den.mass_above(0.0);
                let eps = if full.is_finite() {
                    0.0
                } else {
                    match truncation {
                        Some(e) if e > 0.0 => e,
                        _ => return Err(Error::InfiniteActivity),
                    }
                };
                let rate = if eps > 0.0 { den.mass_above(eps) } else { full };
                let neglected_alpha = if eps > 0.0 { den.integral(alpha_integrand, 0.0, eps).0 } else { 0.0 };
                if rate == 0.0 {
                    return Ok(JumpLaw { neglected_alpha, cutoff: eps, ..none() });
                }
                let (lo, hi) = den.support();
                let kind = match &den.kind {
                    DensityKind::ExpTail { lambda } => LawKind::Exp { lambda: *lambda, shift: eps },
                    DensityKind::PowerSmallJump { beta, r_hi } => {
                        LawKind::SmallPower { beta: *beta, lo: eps, hi: *r_hi }
                    }
                    DensityKind::PowerTail { p } => LawKind::Pareto { p: *p, lo: eps.max(1.0) },
                    DensityKind::Custom { .. } => LawKind::Table(Table::build(den, lo.max(eps), hi)?),
                };
                Ok(JumpLaw { rate, cutoff: eps, neglected_alpha, kind })
            }
        }
    }

    pub fn sample_r<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // u in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        match &self.kind {
            LawKind::None => 0.0,
            LawKind::Atoms { r, cum } => {
                let i = cum.partition_point(|&c| c < u).min(r.len() - 1);
                r[i]
            }
            LawKind::Exp { lambda, shift } => {
                let e: f64 = Exp1.sample(rng);
                shift + e / lambda
            }
            LawKind::SmallPower { beta, lo, hi } => {
                if (beta - 1.0).abs() < 1e-12 {
                    lo * (hi / lo).powf(u)
                } else {
                    let k = 1.0 - beta;
                    let a = if *lo > 0.0 { lo.powf(k) } else { 0.0 };
                    (a + u * (hi.powf(k) - a)).powf(1.0 / k)
                }
            }
            LawKind::Pareto { p, lo } => lo * u.powf(-1.0 / (p - 1.0)),
            LawKind::Table(t) => t.sample(1.0 - u),
        }
    }
}

/// Jump events on [0, horizon]: Poisson times of rate nu([eps, inf)), i.i.d.
/// rapidities and independent uniform directions.
pub fn sample_jumps<R: Rng + ?Sized>(
    spec: &LevySpec,
    horizon: f64,
    truncation: Option<f64>,
    rng: &mut R,
) -> Result<Vec<JumpEvent>> {
    let law = JumpLaw::new(spec, truncation)?;
    Ok(sample_jumps_with(&law, spec.d, horizon, rng))
}

pub fn sample_jumps_with<R: Rng + ?Sized>(law: &JumpLaw, d: usize, horizon: f64, rng: &mut R) -> Vec<JumpEvent> {
    let mut out = Vec::new();
    if law.rate <= 0.0 {
        return out;
    }
    let mut t = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e / law.rate;
        if t > horizon {
            return out;
        }
        let r = law.sample_r(rng);
        let theta = uniform_sphere(d, rng);
        out.push(JumpEvent { time: t, r, theta });
    }
}
