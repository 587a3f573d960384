//! The left-invariant flow on the Poincare group: path simulation, asymptotic
//! estimators, Lyapunov exponents and stable-manifold experiments.
//!
//! The G-component is stored in Iwasawa coordinates g = n(b) exp(u V_1) k. A
//! right multiplication by a boost only needs the closed-form Iwasawa
//! coordinates of that boost, so the state never materializes matrices whose
//! entries grow like e^u. Each row also keeps the increments of u and b, which
//! lets the estimators form b_T - b_t as a tail sum of small quantities.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::levy::{self, JumpEvent, JumpLaw, LevySpec};
use crate::linalg::{self, Compensated};
use crate::lorentz::{self, IwasawaCoords, LorentzAlg, LorentzElem};
use crate::minkowski::{light_split, MinkVec};
use crate::poincare::{self, GradedAlg, GradedVec, MetricParams, PoincareAlg, PoincareElem};
use crate::{Error, Result};

pub const DEFAULT_RENORM_CADENCE: usize = 64;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;
/// Regressions against final-time estimates stop this fraction of T before
/// the end, where b_t - b_T and lambda - eta_t are pinned to zero by construction.
pub const DEFAULT_GUARD_FRACTION: f64 = 0.1;
/// Cap on evaluation points for the per-row regressions that cost a few
/// algebra products each.
pub const DEFAULT_EVAL_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Steps between re-orthonormalizations of the compact part.
    pub renorm_cadence: usize,
    /// Small-jump cutoff, used for infinite-activity measures only.
    pub truncation: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { renorm_cadence: DEFAULT_RENORM_CADENCE, truncation: Some(levy::DEFAULT_TRUNCATION) }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of path `index` in an ensemble with base seed `base`.
pub fn path_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// A simulated trajectory (g_t, xi_t), one row per grid time plus one per jump.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub spec: LevySpec,
    pub dt: f64,
    pub seed: u64,
    pub horizon: f64,
    pub jumps: Vec<JumpEvent>,
    /// Alpha mass of the jumps below the truncation cutoff.
    pub neglected_alpha: f64,
    d: usize,
    times: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    jump_du: Vec<f64>,
    b: Vec<f64>,
    db: Vec<f64>,
    jump_db: Vec<f64>,
    k: Vec<f64>,
    xi: Vec<f64>,
    is_jump: Vec<bool>,
    max_k_defect: f64,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn is_jump(&self, i: usize) -> bool {
        self.is_jump[i]
    }

    /// The abelian Iwasawa coordinate u_t at row i.
    pub fn u(&self, i: usize) -> f64 {
        self.u[i]
    }

    /// Iwasawa nilpotent coordinates b_t (length d - 1).
    pub fn b(&self, i: usize) -> &[f64] {
        let m = self.d - 1;
        &self.b[i * m..(i + 1) * m]
    }

    pub fn k(&self, i: usize) -> DMatrix<f64> {
        let d = self.d;
        DMatrix::from_row_slice(d, d, &self.k[i * d * d..(i + 1) * d * d])
    }

    pub fn iwasawa(&self, i: usize) -> IwasawaCoords {
        IwasawaCoords { b: DVector::from_column_slice(self.b(i)), u: self.u[i], k: self.k(i) }
    }

    pub fn g(&self, i: usize) -> LorentzElem {
        self.iwasawa(i).reassemble()
    }

    pub fn xi(&self, i: usize) -> MinkVec {
        let n = self.d + 1;
        MinkVec::from_vector_unchecked(DVector::from_column_slice(&self.xi[i * n..(i + 1) * n]))
    }

    pub fn elem(&self, i: usize) -> PoincareElem {
        PoincareElem { g: self.g(i), xi: self.xi(i) }
    }

    /// g_t e_0, from the Iwasawa coordinates.
    pub fn velocity(&self, i: usize) -> MinkVec {
        let mut v = vec![0.0; self.d + 1];
        velocity_into(self.u[i], self.b(i), &mut v);
        MinkVec::from_vector_unchecked(DVector::from_vec(v))
    }

    /// Largest |k k^T - I| entry seen before a re-orthonormalization.
    pub fn max_k_defect(&self) -> f64 {
        self.max_k_defect
    }

    /// Whether some coordinate of xi_t overflowed (possible when u_t exceeds ~700).
    pub fn translation_overflow(&self) -> bool {
        self.xi.iter().any(|v| !v.is_finite())
    }

    /// First row with t >= time.
    pub fn index_at(&self, time: f64) -> usize {
        self.times.partition_point(|&t| t < time).min(self.len() - 1)
    }
}

fn velocity_into(u: f64, b: &[f64], out: &mut [f64]) {
    let eu = u.exp();
    let h = 0.5 * b.iter().map(|x| x * x).sum::<f64>() * eu;
    out[0] = u.cosh() + h;
    out[1] = u.sinh() - h;
    for (j, &bj) in b.iter().enumerate() {
        out[j + 2] = eu * bj;
    }
}

struct State {
    d: usize,
    u: Compensated,
    b: Vec<Compensated>,
    k: DMatrix<f64>,
    xi: Vec<Compensated>,
    row_du: f64,
    row_db: Vec<f64>,
    row_jdu: f64,
    row_jdb: Vec<f64>,
    theta: Vec<f64>,
    omega: Vec<f64>,
    bvals: Vec<f64>,
    v_old: Vec<f64>,
    v_new: Vec<f64>,
    scratch: Vec<f64>,
}

impl State {
    fn new(d: usize) -> Self {
        Self {
            d,
            u: Compensated::new(0.0),
            b: vec![Compensated::new(0.0); d - 1],
            k: DMatrix::identity(d, d),
            xi: vec![Compensated::new(0.0); d + 1],
            row_du: 0.0,
            row_db: vec![0.0; d - 1],
            row_jdu: 0.0,
            row_jdb: vec![0.0; d - 1],
            theta: vec![0.0; d],
            omega: vec![0.0; d],
            bvals: vec![0.0; d - 1],
            v_old: vec![0.0; d + 1],
            v_new: vec![0.0; d + 1],
            scratch: vec![0.0; 2 * d],
        }
    }

    fn begin_row(&mut self) {
        self.row_du = 0.0;
        self.row_jdu = 0.0;
        self.row_db.iter_mut().for_each(|x| *x = 0.0);
        self.row_jdb.iter_mut().for_each(|x| *x = 0.0);
    }

    fn velocity(&mut self, into_new: bool) {
        for (j, c) in self.b.iter().enumerate() {
            self.bvals[j] = c.value();
        }
        let out = if into_new { &mut self.v_new } else { &mut self.v_old };
        velocity_into(self.u.value(), &self.bvals, out);
    }

    /// g <- g S(r, omega) in Iwasawa coordinates, recording the increments.
    fn apply_boost(&mut self, r: f64, jump: bool) {
        let d = self.d;
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += self.k[(i, j)] * self.omega[j];
            }
            self.theta[i] = s;
        }
        let n = self.theta.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.theta.iter_mut().for_each(|x| *x /= n);
        let bi = lorentz::boost_iwasawa(r, &self.theta);
        let emu = (-self.u.value()).exp();
        for j in 0..d - 1 {
            let inc = emu * bi.b_scale * self.theta[j + 1];
            self.b[j].add(inc);
            self.row_db[j] += inc;
            if jump {
                self.row_jdb[j] += inc;
            }
        }
        self.u.add(bi.u);
        self.row_du += bi.u;
        if jump {
            self.row_jdu += bi.u;
        }
        bi.rotate(&self.theta, &mut self.k, &mut self.scratch);
    }

    fn diffuse(&mut self, h: f64, sigma: f64, rng: &mut ChaCha8Rng) {
        if h <= 0.0 {
            return;
        }
        self.velocity(false);
        if sigma > 0.0 {
            let mut nz = 0.0;
            for j in 0..self.d {
                let z: f64 = StandardNormal.sample(rng);
                self.omega[j] = z;
                nz += z * z;
            }
            let nz = nz.sqrt();
            if nz > 0.0 {
                self.omega.iter_mut().for_each(|x| *x /= nz);
                self.apply_boost(sigma * h.sqrt() * nz, false);
            }
        }
        self.velocity(true);
        for j in 0..=self.d {
            self.xi[j].add(0.5 * h * (self.v_old[j] + self.v_new[j]));
        }
    }

    fn jump(&mut self, ev: &JumpEvent) {
        self.omega.copy_from_slice(&ev.theta);
        self.apply_boost(ev.r, true);
    }

    fn repair(&mut self) -> f64 {
        let kk = &self.k * self.k.transpose();
        let d = self.d;
        let mut defect: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((kk[(i, j)] - want).abs());
            }
        }
        linalg::orthonormalize_rows(&mut self.k);
        defect
    }
}

impl PathSample {
    fn with_capacity(spec: &LevySpec, dt: f64, seed: u64, horizon: f64, rows: usize) -> Self {
        let d = spec.d;
        Self {
            spec: spec.clone(),
            dt,
            seed,
            horizon,
            jumps: Vec::new(),
            neglected_alpha: 0.0,
            d,
            times: Vec::with_capacity(rows),
            u: Vec::with_capacity(rows),
            du: Vec::with_capacity(rows),
            jump_du: Vec::with_capacity(rows),
            b: Vec::with_capacity(rows * (d - 1)),
            db: Vec::with_capacity(rows * (d - 1)),
            jump_db: Vec::with_capacity(rows * (d - 1)),
            k: Vec::with_capacity(rows * d * d),
            xi: Vec::with_capacity(rows * (d + 1)),
            is_jump: Vec::with_capacity(rows),
            max_k_defect: 0.0,
        }
    }

    fn push(&mut self, t: f64, st: &State, jump: bool) {
        self.times.push(t);
        self.u.push(st.u.value());
        self.du.push(st.row_du);
        self.jump_du.push(st.row_jdu);
        self.b.extend(st.b.iter().map(|c| c.value()));
        self.db.extend_from_slice(&st.row_db);
        self.jump_db.extend_from_slice(&st.row_jdb);
        for i in 0..self.d {
            for j in 0..self.d {
                self.k.push(st.k[(i, j)]);
            }
        }
        self.xi.extend(st.xi.iter().map(|c| c.value()));
        self.is_jump.push(jump);
    }
}

pub fn simulate_path(spec: &LevySpec, horizon: f64, dt: f64, seed: u64) -> Result<PathSample> {
    simulate_path_with(spec, horizon, dt, seed, &SimOptions::default())
}

/// Exponential Euler for the G-component (exact boost exponentials of the
/// Brownian increments, steps split at jump times) and the trapezoid rule
/// for xi. Stream 0 of the seeded ChaCha8 generator drives the diffusion,
/// stream 1 the jumps.
pub fn simulate_path_with(
    spec: &LevySpec,
    horizon: f64,
    dt: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<PathSample> {
    levy::validate(spec)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameters(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(Error::InvalidParameters(format!("dt must lie in (0, 0.1], got {dt}")));
    }
    if opts.renorm_cadence == 0 {
        return Err(Error::InvalidParameters("renorm cadence must be at least 1".into()));
    }
    let d = spec.d;
    let law = JumpLaw::new(spec, opts.truncation)?;
    let mut diff_rng = ChaCha8Rng::seed_from_u64(seed);
    diff_rng.set_stream(0);
    let mut jump_rng = ChaCha8Rng::seed_from_u64(seed);
    jump_rng.set_stream(1);
    let jumps = levy::sample_jumps_with(&law, d, horizon, &mut jump_rng);

    let n_grid = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut out = PathSample::with_capacity(spec, dt, seed, horizon, n_grid + 1 + jumps.len());
    out.neglected_alpha = law.neglected_alpha;
    let mut st = State::new(d);
    out.push(0.0, &st, false);
    let mut t = 0.0;
    let mut next = 0;
    let mut steps = 0usize;
    let sigma = spec.sigma;
    for i in 1..=n_grid {
        let t_grid = if i == n_grid { horizon } else { i as f64 * dt };
        while next < jumps.len() && jumps[next].time <= t_grid {
            let ev = &jumps[next];
            st.begin_row();
            st.diffuse(ev.time - t, sigma, &mut diff_rng);
            st.jump(ev);
            t = ev.time;
            out.push(t, &st, true);
            next += 1;
            steps += 1;
            if steps.is_multiple_of(opts.renorm_cadence) {
                out.max_k_defect = out.max_k_defect.max(st.repair());
            }
        }
        if t_grid > t {
            st.begin_row();
            st.diffuse(t_grid - t, sigma, &mut diff_rng);
            t = t_grid;
            out.push(t, &st, false);
            steps += 1;
            if steps.is_multiple_of(opts.renorm_cadence) {
                out.max_k_defect = out.max_k_defect.max(st.repair());
            }
        }
    }
    out.jumps = jumps;
    Ok(out)
}

/// alpha_t: the u-coordinate of the Iwasawa decomposition at every row.
pub fn abelian_coordinate(path: &PathSample) -> Vec<f64> {
    path.u.clone()
}

/// theta = (1 - |b|^2, 2b) / (1 + |b|^2).
pub fn stereographic(b: &[f64]) -> Vec<f64> {
    let n2 = b.iter().map(|x| x * x).sum::<f64>();
    let mut th = Vec::with_capacity(b.len() + 1);
    th.push((1.0 - n2) / (1.0 + n2));
    th.extend(b.iter().map(|x| 2.0 * x / (1.0 + n2)));
    th
}

/// A regression window [start, end] on the time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    /// The last `fraction` of [0, horizon], stopping `guard * horizon` early.
    pub fn tail(horizon: f64, fraction: f64, guard: f64) -> Self {
        Self { start: (1.0 - fraction) * horizon, end: (1.0 - guard) * horizon }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateDiagnostics {
    pub window: Window,
    pub points: usize,
    /// RMS residual of the linear fit of alpha_t.
    pub residual_rms: f64,
    /// Set when the path is too short for the estimates to be meaningful.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticEstimates {
    pub alpha_hat: f64,
    pub b_inf_hat: Vec<f64>,
    pub n_inf_hat: LorentzElem,
    pub theta_inf_hat: Vec<f64>,
    pub lambda_inf_hat: f64,
    pub diagnostics: EstimateDiagnostics,
}

impl AsymptoticEstimates {
    /// (n_inf, lambda_inf (e0 - e1)).
    pub fn g_inf_hat(&self) -> PoincareElem {
        let d = self.b_inf_hat.len() + 1;
        PoincareElem { g: self.n_inf_hat.clone(), xi: &MinkVec::light_minus(d) * self.lambda_inf_hat }
    }
}

/// OLS slope of (times[i], f(i)) over the rows in the window, using at most
/// `max_points` evenly strided rows. Non-finite values are skipped.
pub fn window_slope(
    path: &PathSample,
    window: Window,
    max_points: usize,
    mut f: impl FnMut(usize) -> f64,
) -> Option<f64> {
    let (i0, i1) = (path.index_at(window.start), path.index_at(window.end));
    if i1 <= i0 {
        return None;
    }
    let stride = ((i1 - i0) / max_points.max(3)).max(1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut i = i0;
    while i <= i1 {
        let y = f(i);
        if y.is_finite() {
            xs.push(path.times[i]);
            ys.push(y);
        }
        i += stride;
    }
    linalg::ols(&xs, &ys).map(|r| r.0)
}

/// Precomputed tail quantities shared by the estimators of one path.
///
/// With delta_b(t) = b_T - b_t and eta_t = n_T^-1 xi_t, the integrand of
/// eta splits over the light cone as
///   d eta^-/dt = (e^-u + |delta_b|^2 e^u) / 2,
///   d eta^0/dt = -e^u delta_b,
///   d eta^+/dt = e^u / 2,
/// and the trapezoid sums below reproduce n_T^-1 applied to the simulator's
/// trapezoid sum for xi. lambda - eta^-(t) is kept as a tail sum, so it stays
/// accurate while it decays like e^{-u_t}.
#[derive(Debug, Clone)]
pub struct PathAnalysis<'a> {
    pub path: &'a PathSample,
    pub estimates: AsymptoticEstimates,
    pub tail_fraction: f64,
    pub guard_fraction: f64,
    pub eval_points: usize,
    delta_b: Vec<f64>,
    lambda_tail: Vec<f64>,
    eta0: Vec<f64>,
    eta_plus: Vec<f64>,
}

impl<'a> PathAnalysis<'a> {
    pub fn new(path: &'a PathSample, tail_fraction: f64) -> Result<Self> {
        if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
            return Err(Error::InvalidParameters(format!("tail fraction must lie in (0, 1), got {tail_fraction}")));
        }
        let n = path.len();
        let m = path.d - 1;
        // delta_b as reverse compensated sums of the stored increments
        let mut delta_b = vec![0.0; n * m];
        let mut acc = vec![Compensated::new(0.0); m];
        for i in (0..n.saturating_sub(1)).rev() {
            for j in 0..m {
                acc[j].add(path.db[(i + 1) * m + j]);
                delta_b[i * m + j] = acc[j].value();
            }
        }
        // per-interval trapezoid contributions, left state = row i-1,
        // right state = row i before its jump
        let mut minus_inc = vec![0.0; n];
        let mut zero_inc = vec![0.0; n * m];
        let mut plus_inc = vec![0.0; n];
        let rate = |u: f64, c: &[f64], zero: &mut [f64]| -> (f64, f64) {
            let eh = (0.5 * u).exp();
            let q: f64 = c.iter().map(|x| (x * eh) * (x * eh)).sum();
            let eu = u.exp();
            for (z, &cj) in zero.iter_mut().zip(c) {
                *z = -eu * cj;
            }
            (0.5 * ((-u).exp() + q), 0.5 * eu)
        };
        let mut zl = vec![0.0; m];
        let mut zr = vec![0.0; m];
        let mut cr = vec![0.0; m];
        for i in 1..n {
            let h = path.times[i] - path.times[i - 1];
            let (ml, pl) = rate(path.u[i - 1], &delta_b[(i - 1) * m..i * m], &mut zl);
            for j in 0..m {
                cr[j] = delta_b[i * m + j] + path.jump_db[i * m + j];
            }
            let (mr, pr) = rate(path.u[i] - path.jump_du[i], &cr, &mut zr);
            minus_inc[i] = 0.5 * h * (ml + mr);
            plus_inc[i] = 0.5 * h * (pl + pr);
            for j in 0..m {
                zero_inc[i * m + j] = 0.5 * h * (zl[j] + zr[j]);
            }
        }
        let mut lambda_tail = vec![0.0; n];
        let mut lt = Compensated::new(0.0);
        for i in (0..n.saturating_sub(1)).rev() {
            lt.add(minus_inc[i + 1]);
            lambda_tail[i] = lt.value();
        }
        let mut eta0 = vec![0.0; n * m];
        let mut eta_plus = vec![0.0; n];
        let mut z = vec![Compensated::new(0.0); m];
        let mut p = Compensated::new(0.0);
        for i in 1..n {
            p.add(plus_inc[i]);
            eta_plus[i] = p.value();
            for j in 0..m {
                z[j].add(zero_inc[i * m + j]);
                eta0[i * m + j] = z[j].value();
            }
        }
        let lambda = lambda_tail[0];

        let horizon = path.horizon;
        let window = Window::tail(horizon, tail_fraction, 0.0);
        let (i0, i1) = (path.index_at(window.start), n - 1);
        let xs: Vec<f64> = path.times[i0..=i1].to_vec();
        let ys: Vec<f64> = path.u[i0..=i1].to_vec();
        let fit = linalg::ols(&xs, &ys);
        let (alpha_hat, residual_rms) = fit.map(|f| (f.0, f.2)).unwrap_or((0.0, f64::NAN));
        let b_inf = path.b(n - 1).to_vec();
        let mut flag = None;
        if fit.is_none() {
            flag = Some(format!("tail window holds {} rows", xs.len()));
        } else if alpha_hat * horizon < 10.0 {
            flag = Some(format!("alpha_hat * T = {:.3} < 10: not yet converged", alpha_hat * horizon));
        } else if !(lambda > 0.0) {
            flag = Some(format!("lambda_hat = {lambda} is not positive"));
        }
        let estimates = AsymptoticEstimates {
            alpha_hat,
            n_inf_hat: LorentzElem::from_matrix_unchecked(lorentz::nilpotent(path.d, &b_inf)),
            theta_inf_hat: stereographic(&b_inf),
            b_inf_hat: b_inf,
            lambda_inf_hat: lambda,
            diagnostics: EstimateDiagnostics { window, points: xs.len(), residual_rms, flag },
        };
        Ok(Self {
            path,
            estimates,
            tail_fraction,
            guard_fraction: DEFAULT_GUARD_FRACTION,
            eval_points: DEFAULT_EVAL_POINTS,
            delta_b,
            lambda_tail,
            eta0,
            eta_plus,
        })
    }

    /// The window used by regressions against final-time estimates.
    pub fn reference_window(&self) -> Window {
        Window::tail(self.path.horizon, self.tail_fraction, self.guard_fraction)
    }

    /// b_T - b_t.
    pub fn delta_b(&self, i: usize) -> &[f64] {
        let m = self.path.d - 1;
        &self.delta_b[i * m..(i + 1) * m]
    }

    /// lambda_hat - eta^-(t): the distance of the (e0 - e1) coefficient of
    /// n_inf_hat^-1 xi_t from its limit.
    pub fn lambda_gap(&self, i: usize) -> f64 {
        self.lambda_tail[i]
    }

    /// The 0-eigenspace part of n_inf_hat^-1 xi_t (coordinates 2..=d).
    pub fn eta_zero(&self, i: usize) -> &[f64] {
        let m = self.path.d - 1;
        &self.eta0[i * m..(i + 1) * m]
    }

    /// The (e0 + e1) coefficient of n_inf_hat^-1 xi_t.
    pub fn eta_plus(&self, i: usize) -> f64 {
        self.eta_plus[i]
    }

    /// n_inf_hat^-1 xi_t reassembled from its graded parts.
    pub fn eta(&self, i: usize) -> MinkVec {
        let d = self.path.d;
        let mut v = vec![0.0; d + 1];
        let (mn, pl) = (self.estimates.lambda_inf_hat - self.lambda_tail[i], self.eta_plus[i]);
        v[0] = mn + pl;
        v[1] = pl - mn;
        v[2..].copy_from_slice(self.eta_zero(i));
        MinkVec::from_vector_unchecked(DVector::from_vec(v))
    }

    /// Slope of log |b_t - b_T| over the reference window.
    pub fn nilpotent_decay_slope(&self) -> Option<f64> {
        window_slope(self.path, self.reference_window(), usize::MAX, |i| {
            self.delta_b(i).iter().map(|x| x * x).sum::<f64>().sqrt().ln()
        })
    }

    /// Slopes of log(lambda - eta^-), log |eta^0| and log eta^+.
    pub fn translation_slopes(&self) -> [Option<f64>; 3] {
        let w = self.reference_window();
        [
            window_slope(self.path, w, usize::MAX, |i| self.lambda_gap(i).ln()),
            window_slope(self.path, w, usize::MAX, |i| {
                self.eta_zero(i).iter().map(|x| x * x).sum::<f64>().sqrt().ln()
            }),
            window_slope(self.path, w, usize::MAX, |i| self.eta_plus(i).ln()),
        ]
    }

    /// Ad(k_t) Ad(g_t^-1 g_inf) Z, evaluated grade by grade.
    ///
    /// g_t^-1 g_inf = (k^-1, 0)(a^-1, 0)(Id, n(c) w)(n(c), 0) with c = b_T - b_t
    /// and w = lambda (e0 - e1) - eta_t. The final rotation is left out: the
    /// norms used here are Ad(K)-invariant.
    pub fn pulled_back(&self, i: usize, z: &GradedAlg) -> PoincareAlg {
        let d = self.path.d;
        let c = self.delta_b(i);
        let y = GradedAlg::from_alg(&PoincareAlg::from_lie(LorentzAlg::n_combination(d, c)));
        let z1 = z.ad_exp_nilpotent(&y);
        let wm = self.lambda_tail[i];
        let wp = -self.eta_plus[i];
        let w0 = self.eta_zero(i);
        let cc: f64 = c.iter().map(|x| x * x).sum();
        let cw: f64 = c.iter().zip(w0).map(|(a, b)| -a * b).sum();
        let mut zero = vec![0.0; d + 1];
        for j in 0..d - 1 {
            zero[j + 2] = -w0[j] + 2.0 * wp * c[j];
        }
        let vm = wm + cw + cc * wp;
        let v = GradedVec::new(
            &MinkVec::light_minus(d) * vm,
            MinkVec::from_vector_unchecked(DVector::from_vec(zero)),
            &MinkVec::light_plus(d) * wp,
        );
        z1.translate(&v).scale_by_abelian(-self.path.u[i]).sum()
    }

    /// Ad(g_t^-1 g_inf) Z including the rotation.
    pub fn pulled_back_exact(&self, i: usize, z: &GradedAlg) -> PoincareAlg {
        let d = self.path.d;
        let mut kinv = DMatrix::<f64>::identity(d + 1, d + 1);
        kinv.view_mut((1, 1), (d, d)).copy_from(&self.path.k(i).transpose());
        let kinv = PoincareElem::linear(LorentzElem::from_matrix_unchecked(kinv));
        poincare::adjoint(&kinv, &self.pulled_back(i, z))
    }

    /// Tail slope of log |Ad(g_t^-1 g_inf) Z| for X = Ad(g_inf) Z.
    pub fn lyapunov_exponent_anchored(&self, z: &PoincareAlg, p: &MetricParams) -> Result<f64> {
        if z.is_zero() {
            return Err(Error::ZeroVector);
        }
        let gz = GradedAlg::from_alg(z);
        window_slope(self.path, self.reference_window(), self.eval_points, |i| {
            poincare::alg_norm(&self.pulled_back(i, &gz), p).ln()
        })
        .ok_or_else(|| Error::InvalidParameters("regression window too short".into()))
    }

    /// Tail slope of log |Ad(g_t^-1) X|, computed through Z = Ad(g_inf^-1) X.
    pub fn lyapunov_exponent(&self, x: &PoincareAlg, p: &MetricParams) -> Result<f64> {
        if x.is_zero() {
            return Err(Error::ZeroVector);
        }
        let z = poincare::adjoint(&self.estimates.g_inf_hat().inverse(), x);
        self.lyapunov_exponent_anchored(&z, p)
    }

    /// Surrogate distance between the trajectories from Id and exp(Y) with
    /// Y = Ad(g_inf) Z, at up to `eval_points` rows of the whole path.
    pub fn stable_manifold_gap_anchored(&self, z: &PoincareAlg, p: &MetricParams) -> Result<Vec<GapSample>> {
        if z.is_zero() {
            return Err(Error::ZeroVector);
        }
        let gz = GradedAlg::from_alg(z);
        let n = self.path.len();
        let stride = (n / self.eval_points.max(1)).max(1);
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            out.push(gap_sample(self.path.times[i], &self.pulled_back(i, &gz), p));
            i += stride;
        }
        Ok(out)
    }

    pub fn stable_manifold_gap(&self, y: &PoincareAlg, p: &MetricParams) -> Result<Vec<GapSample>> {
        if y.is_zero() {
            return Err(Error::ZeroVector);
        }
        let z = poincare::adjoint(&self.estimates.g_inf_hat().inverse(), y);
        self.stable_manifold_gap_anchored(&z, p)
    }

    /// r(h_t) with h_t = exp(-alpha t V_1) n_inf^-1 g_t = n(-e^{alpha t} c) exp((u - alpha t) V_1) k.
    pub fn residual_rotation_with(&self, alpha: f64) -> Vec<f64> {
        (0..self.path.len())
            .map(|i| {
                let t = self.path.times[i];
                let c2: f64 = self.delta_b(i).iter().map(|x| x * x).sum();
                rapidity_of_na(self.path.u[i] - alpha * t, c2.ln() + 2.0 * alpha * t)
            })
            .collect()
    }
}

/// Rapidity of n(c) exp(v V_1), where ln |c|^2 = lc: acosh(cosh v + |c|^2 e^v / 2).
fn rapidity_of_na(v: f64, lc: f64) -> f64 {
    // x = cosh v - 1 + |c|^2 e^v / 2, combined in log space
    let la = if v.abs() < 1.0 {
        (2.0 * (0.5 * v).sinh().powi(2)).ln()
    } else {
        v.abs() + (0.5 * (1.0 - (-v.abs()).exp()).powi(2)).ln()
    };
    let lb = lc + v - core::f64::consts::LN_2;
    let (hi, lo) = if la > lb { (la, lb) } else { (lb, la) };
    if hi == f64::NEG_INFINITY {
        return 0.0;
    }
    let lx = hi + (lo - hi).exp().ln_1p();
    if lx > 20.0 {
        core::f64::consts::LN_2 + lx + (-lx).exp()
    } else {
        let x = lx.exp();
        (x + (x * (x + 2.0)).sqrt()).ln_1p()
    }
}

/// Bounds on d(phi_t(g), phi_t(g')) at time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
}

fn gap_sample(t: f64, w: &PoincareAlg, p: &MetricParams) -> GapSample {
    // exp(sW), s in [0, 1], has length |W|
    let norm = poincare::alg_norm(w, p);
    let lie = PoincareAlg::from_lie(w.lie.clone());
    if !(norm.is_finite() && poincare::alg_norm(&lie, p) <= 300.0) {
        // exp(W) is not representable; 0 stays a valid lower bound
        return GapSample { t, lower: 0.0, upper: norm };
    }
    let b = poincare::bounds_from_identity(&poincare::exp(w), p);
    let upper = b.upper.min(norm);
    GapSample { t, lower: b.lower.min(upper), upper }
}

pub fn estimate_asymptotics(path: &PathSample, tail_fraction: f64) -> Result<AsymptoticEstimates> {
    Ok(PathAnalysis::new(path, tail_fraction)?.estimates)
}

/// r(h_t) at every row, with h_t = exp(-alpha_hat t V_1) n_inf_hat^-1 g_t.
pub fn residual_rotation(path: &PathSample, tail_fraction: f64) -> Result<ResidualRotation> {
    let a = PathAnalysis::new(path, tail_fraction)?;
    Ok(ResidualRotation::from_series(&a, a.residual_rotation_with(a.estimates.alpha_hat)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRotation {
    pub r: Vec<f64>,
    /// sup over the reference window of r(h_t) / t.
    pub tail_sup_ratio: f64,
    /// OLS slope of r(h_t) over the reference window.
    pub tail_slope: f64,
}

impl ResidualRotation {
    pub fn from_series(a: &PathAnalysis<'_>, r: Vec<f64>) -> Self {
        let w = a.reference_window();
        let (i0, i1) = (a.path.index_at(w.start), a.path.index_at(w.end));
        let tail_sup_ratio = (i0..=i1).map(|i| r[i] / a.path.times[i]).fold(0.0, f64::max);
        let tail_slope = window_slope(a.path, w, usize::MAX, |i| r[i]).unwrap_or(f64::NAN);
        Self { r, tail_sup_ratio, tail_slope }
    }
}

/// Tail slope of log |Ad(g_t^-1) X| from the stored group elements. Only
/// usable while the entries of g_t stay moderate (u_t well below 1/eps^{1/2}).
pub fn lyapunov_exponent_direct(path: &PathSample, x: &PoincareAlg, p: &MetricParams, window: Window) -> Result<f64> {
    if x.is_zero() {
        return Err(Error::ZeroVector);
    }
    window_slope(path, window, DEFAULT_EVAL_POINTS, |i| {
        poincare::alg_norm(&poincare::adjoint(&path.elem(i).inverse(), x), p).ln()
    })
    .ok_or_else(|| Error::InvalidParameters("regression window too short".into()))
}

pub fn lyapunov_exponent(path: &PathSample, x: &PoincareAlg, p: &MetricParams) -> Result<f64> {
    PathAnalysis::new(path, DEFAULT_TAIL_FRACTION)?.lyapunov_exponent(x, p)
}

/// lambda from the stored xi_T: the (e0 - e1) coefficient of n_inf_hat^-1 xi_T.
/// Loses all accuracy once e^{u_T} eps is not small.
pub fn lambda_direct(path: &PathSample, est: &AsymptoticEstimates) -> f64 {
    let xi = path.xi(path.len() - 1);
    light_split(&est.n_inf_hat.inverse().apply(&xi)).minus_coeff()
}

/// Bases of U~+ (grade +1) and U~0 + U~+ in Lie(G~).
pub fn graded_bases(d: usize) -> (Vec<PoincareAlg>, Vec<PoincareAlg>) {
    let mut plus: Vec<PoincareAlg> = (2..=d).map(|i| PoincareAlg::from_lie(LorentzAlg::nbar(d, i))).collect();
    plus.push(PoincareAlg::from_trans(MinkVec::light_plus(d)));
    let mut zero = plus.clone();
    zero.push(PoincareAlg::from_lie(LorentzAlg::v(d, 1)));
    for i in 2..=d {
        for j in i + 1..=d {
            zero.push(PoincareAlg::from_lie(LorentzAlg::v_ij(d, i, j)));
        }
    }
    for i in 2..=d {
        zero.push(PoincareAlg::h(d, i));
    }
    (plus, zero)
}

/// V_minus = Ad(g_inf)(U~+) and V_zero = Ad(g_inf)(U~0 + U~+).
pub fn stable_subspaces(est: &AsymptoticEstimates) -> (Vec<PoincareAlg>, Vec<PoincareAlg>) {
    let d = est.b_inf_hat.len() + 1;
    let g = est.g_inf_hat();
    let (p, z) = graded_bases(d);
    let map = |v: Vec<PoincareAlg>| v.iter().map(|x| poincare::adjoint(&g, x)).collect();
    (map(p), map(z))
}

/// |x - P x| / |x| with P the least-squares projection on span(basis).
pub fn subspace_residual(basis: &[PoincareAlg], x: &PoincareAlg) -> f64 {
    let cx = DVector::from_vec(x.to_coords());
    let nx = cx.norm();
    if nx == 0.0 {
        return 0.0;
    }
    let cols: Vec<DVector<f64>> = basis.iter().map(|b| DVector::from_vec(b.to_coords())).collect();
    let a = DMatrix::from_columns(&cols);
    let svd = a.svd(true, true);
    match svd.solve(&cx, 1e-13) {
        Ok(sol) => (&cx - DMatrix::from_columns(&cols) * sol).norm() / nx,
        Err(_) => 1.0,
    }
}

/// max over basis pairs of the relative distance of [v, w] to the span.
pub fn bracket_closure_residual(basis: &[PoincareAlg]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, v) in basis.iter().enumerate() {
        for w in &basis[i + 1..] {
            let br = poincare::bracket(v, w);
            let scale = size(v) * size(w);
            if scale > 0.0 {
                let r = subspace_residual(basis, &br) * size(&br) / scale;
                worst = worst.max(r);
            }
        }
    }
    worst
}

fn size(x: &PoincareAlg) -> f64 {
    x.to_coords().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A point of the projected stable leaf: velocity n e^X n^-1 e0 and position
/// u n(e0 + e1) + lambda (Id - n e^X n^-1)(e0 - e1), for X in N-bar.
pub fn stable_leaf_point(est: &AsymptoticEstimates, x: &LorentzAlg, u: f64) -> Result<(MinkVec, MinkVec)> {
    let d = x.dim();
    let px = PoincareAlg::from_lie(x.clone());
    let res = size(&(&px - &poincare::project(&px, poincare::Grade::Plus)));
    if res > 1e-10 {
        return Err(Error::NotInSubspace(res));
    }
    let n = &est.n_inf_hat;
    let g = &(n * &lorentz::exp_alg(x)) * &n.inverse();
    let vel = g.velocity();
    let lm = MinkVec::light_minus(d);
    let shift = &lm - &g.apply(&lm);
    let pos = &(&n.apply(&MinkVec::light_plus(d)) * u) + &(&shift * est.lambda_inf_hat);
    Ok((vel, pos))
}
