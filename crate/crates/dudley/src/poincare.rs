//! The Poincare group SO(1,d)+ x R^{1,d}: group law, bracket, adjoint action,
//! the grading by ad(V_1, 0), Ad(K)-invariant norms and distance bounds.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Mul;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg;
use crate::lorentz::{self, LorentzAlg, LorentzElem};
use crate::minkowski::{light_split, MinkVec};
use crate::{Error, Result};

/// Dimension of Lie(G~): d(d+1)/2 + d + 1.
pub fn algebra_dim(d: usize) -> usize {
    d * (d + 1) / 2 + d + 1
}

/// A frame (g, xi) of Minkowski space.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareElem {
    pub g: LorentzElem,
    pub xi: MinkVec,
}

impl PoincareElem {
    pub fn new(g: LorentzElem, xi: MinkVec) -> Result<Self> {
        if g.dim() != xi.dim() {
            return Err(Error::DimensionMismatch { expected: g.dim(), found: xi.dim() });
        }
        Ok(Self { g, xi })
    }

    pub fn identity(d: usize) -> Self {
        Self { g: LorentzElem::identity(d), xi: MinkVec::zeros(d) }
    }

    pub fn translation(xi: MinkVec) -> Self {
        Self { g: LorentzElem::identity(xi.dim()), xi }
    }

    pub fn linear(g: LorentzElem) -> Self {
        let d = g.dim();
        Self { g, xi: MinkVec::zeros(d) }
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// (g, xi)^-1 = (g^-1, -g^-1 xi).
    pub fn inverse(&self) -> Self {
        let gi = self.g.inverse();
        let xi = -&gi.apply(&self.xi);
        Self { g: gi, xi }
    }

    /// The projection to the velocity/position pair (g e0, xi).
    pub fn project(&self) -> (MinkVec, MinkVec) {
        (self.g.velocity(), self.xi.clone())
    }

    /// The (d+2)x(d+2) affine matrix [[g, xi], [0, 1]].
    pub fn affine_matrix(&self) -> DMatrix<f64> {
        let n = self.dim() + 1;
        let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(self.g.matrix());
        m.view_mut((0, n), (n, 1)).copy_from(self.xi.coords());
        m[(n, n)] = 1.0;
        m
    }

    fn from_affine(m: &DMatrix<f64>) -> Self {
        let n = m.nrows() - 1;
        Self {
            g: LorentzElem::from_matrix_unchecked(m.view((0, 0), (n, n)).clone_owned()),
            xi: MinkVec::from_vector_unchecked(m.view((0, n), (n, 1)).column(0).clone_owned()),
        }
    }
}

impl Mul for &PoincareElem {
    type Output = PoincareElem;
    fn mul(self, rhs: &PoincareElem) -> PoincareElem {
        PoincareElem { g: &self.g * &rhs.g, xi: &self.xi + &self.g.apply(&rhs.xi) }
    }
}

/// An element (X, x) of Lie(G~) = Lie(G) x R^{1,d}.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareAlg {
    pub lie: LorentzAlg,
    pub trans: MinkVec,
}

impl PoincareAlg {
    pub fn new(lie: LorentzAlg, trans: MinkVec) -> Result<Self> {
        if lie.dim() != trans.dim() {
            return Err(Error::DimensionMismatch { expected: lie.dim(), found: trans.dim() });
        }
        Ok(Self { lie, trans })
    }

    pub fn zero(d: usize) -> Self {
        Self { lie: LorentzAlg::zero(d), trans: MinkVec::zeros(d) }
    }

    pub fn from_lie(lie: LorentzAlg) -> Self {
        let d = lie.dim();
        Self { lie, trans: MinkVec::zeros(d) }
    }

    pub fn from_trans(trans: MinkVec) -> Self {
        Self { lie: LorentzAlg::zero(trans.dim()), trans }
    }

    /// H_i = (0, e_i), i in 0..=d.
    pub fn h(d: usize, i: usize) -> Self {
        Self::from_trans(MinkVec::basis(d, i))
    }

    pub fn dim(&self) -> usize {
        self.lie.dim()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { lie: self.lie.scale(s), trans: &self.trans * s }
    }

    pub fn is_zero(&self) -> bool {
        self.to_coords().iter().all(|&v| v == 0.0)
    }

    /// Flat coordinates: b, strict upper triangle of C, then x^0..x^d.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut v = self.lie.to_coords();
        v.extend_from_slice(self.trans.as_slice());
        v
    }

    pub fn from_coords(d: usize, v: &[f64]) -> Result<Self> {
        if v.len() != algebra_dim(d) {
            return Err(Error::DimensionMismatch { expected: algebra_dim(d), found: v.len() });
        }
        let k = d * (d + 1) / 2;
        Ok(Self {
            lie: LorentzAlg::from_coords(d, &v[..k])?,
            trans: MinkVec::new(v[k..].to_vec())?,
        })
    }

    /// The basis element number `i` of the flat coordinates.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = vec![0.0; algebra_dim(d)];
        v[i] = 1.0;
        Self::from_coords(d, &v).expect("basis index in range")
    }

    /// The affine matrix [[X, x], [0, 0]].
    pub fn affine_matrix(&self) -> DMatrix<f64> {
        let n = self.dim() + 1;
        let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.lie.to_matrix());
        m.view_mut((0, n), (n, 1)).copy_from(self.trans.coords());
        m
    }

    fn from_affine(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows() - 1;
        Ok(Self {
            lie: LorentzAlg::from_matrix(&m.view((0, 0), (n, n)).clone_owned())?,
            trans: MinkVec::from_vector_unchecked(m.view((0, n), (n, 1)).column(0).clone_owned()),
        })
    }
}

impl core::ops::Add for &PoincareAlg {
    type Output = PoincareAlg;
    fn add(self, rhs: &PoincareAlg) -> PoincareAlg {
        PoincareAlg { lie: &self.lie + &rhs.lie, trans: &self.trans + &rhs.trans }
    }
}

impl core::ops::Sub for &PoincareAlg {
    type Output = PoincareAlg;
    fn sub(self, rhs: &PoincareAlg) -> PoincareAlg {
        PoincareAlg { lie: &self.lie - &rhs.lie, trans: &self.trans - &rhs.trans }
    }
}

fn mat_vec(x: &LorentzAlg, v: &MinkVec) -> MinkVec {
    MinkVec::from_vector_unchecked(x.to_matrix() * v.coords())
}

/// [(X, x), (Y, y)] = ([X, Y], Xy - Yx).
pub fn bracket(a: &PoincareAlg, b: &PoincareAlg) -> PoincareAlg {
    PoincareAlg {
        lie: a.lie.bracket(&b.lie),
        trans: &mat_vec(&a.lie, &b.trans) - &mat_vec(&b.lie, &a.trans),
    }
}

/// Ad(g, xi)(X, x) = (g X g^-1, g x - Ad(g)(X) xi).
pub fn adjoint(g: &PoincareElem, x: &PoincareAlg) -> PoincareAlg {
    let gm = g.g.matrix();
    let gi = g.g.inverse();
    let conj = gm * x.lie.to_matrix() * gi.matrix();
    let lie = LorentzAlg::from_matrix(&conj).expect("square conjugate");
    let gx = g.g.apply(&x.trans);
    let shift = MinkVec::from_vector_unchecked(&conj * g.xi.coords());
    PoincareAlg { lie, trans: &gx - &shift }
}

/// Group exponential, through the affine (d+2)x(d+2) representation.
pub fn exp(x: &PoincareAlg) -> PoincareElem {
    let m = x.affine_matrix();
    let m2 = &m * &m;
    let m3 = &m2 * &m;
    let m4 = &m3 * &m;
    let nm = linalg::frob(&m);
    // The affine matrix of an element of a nilpotent algebra has M^4 = 0.
    let e = if linalg::frob(&m4) <= 1e-14 * (1.0 + nm).powi(4) {
        let id = DMatrix::<f64>::identity(m.nrows(), m.nrows());
        id + &m + m2 * 0.5 + m3 / 6.0
    } else {
        linalg::expm(&m)
    };
    PoincareElem::from_affine(&e)
}

/// Principal logarithm near the identity (affine Frobenius distance below 0.5).
pub fn log_local(g: &PoincareElem) -> Result<PoincareAlg> {
    let l = linalg::logm_near_identity(&g.affine_matrix(), lorentz::LOG_RADIUS)?;
    PoincareAlg::from_affine(&l)
}

/// Eigenvalue of ad(V_1, 0) on a graded piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grade {
    Minus,
    Zero,
    Plus,
}

impl Grade {
    pub const ALL: [Grade; 3] = [Grade::Minus, Grade::Zero, Grade::Plus];

    pub fn value(self) -> i32 {
        match self {
            Grade::Minus => -1,
            Grade::Zero => 0,
            Grade::Plus => 1,
        }
    }

    pub fn from_value(v: i32) -> Option<Self> {
        match v {
            -1 => Some(Grade::Minus),
            0 => Some(Grade::Zero),
            1 => Some(Grade::Plus),
            _ => None,
        }
    }

    fn index(self) -> usize {
        (self.value() + 1) as usize
    }
}

/// Components of an algebra element on the eigenspaces of ad(V_1, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct AlgEigenSplit {
    /// X in N-bar, x in U+.
    pub plus: PoincareAlg,
    /// X in A + M, x in U0.
    pub zero: PoincareAlg,
    /// X in N, x in U-.
    pub minus: PoincareAlg,
}

impl AlgEigenSplit {
    pub fn get(&self, g: Grade) -> &PoincareAlg {
        match g {
            Grade::Minus => &self.minus,
            Grade::Zero => &self.zero,
            Grade::Plus => &self.plus,
        }
    }

    pub fn sum(&self) -> PoincareAlg {
        &(&self.minus + &self.zero) + &self.plus
    }
}

/// Lie-algebra part of the grading. N-bar_i coefficient (b_i + C_1i)/2,
/// N_i coefficient (b_i - C_1i)/2, and V_1 plus the V_ij (i, j >= 2) in grade 0.
fn lie_split(x: &LorentzAlg) -> [LorentzAlg; 3] {
    let d = x.dim();
    let b = x.b();
    let c = x.c();
    let mut nb = Vec::with_capacity(d - 1);
    let mut nn = Vec::with_capacity(d - 1);
    for i in 1..d {
        nb.push(0.5 * (b[i] + c[(0, i)]));
        nn.push(0.5 * (b[i] - c[(0, i)]));
    }
    let mut zb = DVector::zeros(d);
    zb[0] = b[0];
    let mut zc = DMatrix::zeros(d, d);
    for i in 1..d {
        for j in 1..d {
            zc[(i, j)] = c[(i, j)];
        }
    }
    [
        LorentzAlg::n_combination(d, &nn),
        LorentzAlg::new(zb, zc).expect("square block"),
        LorentzAlg::nbar_combination(d, &nb),
    ]
}

pub fn alg_split(x: &PoincareAlg) -> AlgEigenSplit {
    let [lm, lz, lp] = lie_split(&x.lie);
    let t = light_split(&x.trans);
    AlgEigenSplit {
        plus: PoincareAlg { lie: lp, trans: t.plus },
        zero: PoincareAlg { lie: lz, trans: t.zero },
        minus: PoincareAlg { lie: lm, trans: t.minus },
    }
}

/// Projection on one graded piece.
pub fn project(x: &PoincareAlg, g: Grade) -> PoincareAlg {
    let s = alg_split(x);
    s.get(g).clone()
}

fn project_vec(v: &MinkVec, g: Grade) -> MinkVec {
    let s = light_split(v);
    match g {
        Grade::Minus => s.minus,
        Grade::Zero => s.zero,
        Grade::Plus => s.plus,
    }
}

/// An algebra element held as its three graded pieces.
///
/// Products are evaluated grade by grade and each partial result is projected
/// on the grade it must land in, so quantities whose pieces differ by many
/// orders of magnitude never share a rounding step.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedAlg {
    parts: [PoincareAlg; 3],
}

/// A Minkowski vector held as its three light-cone pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedVec {
    parts: [MinkVec; 3],
}

impl GradedVec {
    pub fn new(minus: MinkVec, zero: MinkVec, plus: MinkVec) -> Self {
        Self { parts: [minus, zero, plus] }
    }

    pub fn from_vec(v: &MinkVec) -> Self {
        let s = light_split(v);
        Self { parts: [s.minus, s.zero, s.plus] }
    }

    pub fn get(&self, g: Grade) -> &MinkVec {
        &self.parts[g.index()]
    }

    pub fn sum(&self) -> MinkVec {
        &(&self.parts[0] + &self.parts[1]) + &self.parts[2]
    }
}

impl GradedAlg {
    pub fn from_alg(x: &PoincareAlg) -> Self {
        let s = alg_split(x);
        Self { parts: [s.minus, s.zero, s.plus] }
    }

    pub fn zero(d: usize) -> Self {
        Self { parts: [PoincareAlg::zero(d), PoincareAlg::zero(d), PoincareAlg::zero(d)] }
    }

    pub fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    pub fn get(&self, g: Grade) -> &PoincareAlg {
        &self.parts[g.index()]
    }

    pub fn sum(&self) -> PoincareAlg {
        &(&self.parts[0] + &self.parts[1]) + &self.parts[2]
    }

    /// Ad(exp(s V_1), 0): grade c is multiplied by e^{c s}.
    pub fn scale_by_abelian(&self, s: f64) -> Self {
        let mut out = self.clone();
        for g in Grade::ALL {
            let f = (g.value() as f64 * s).exp();
            out.parts[g.index()] = self.parts[g.index()].scale(f);
        }
        out
    }

    /// Graded bracket [self, other].
    pub fn bracket(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim());
        for a in Grade::ALL {
            for b in Grade::ALL {
                if let Some(c) = Grade::from_value(a.value() + b.value()) {
                    let y = self.get(a);
                    let z = other.get(b);
                    if y.is_zero() || z.is_zero() {
                        continue;
                    }
                    let p = project(&bracket(y, z), c);
                    out.parts[c.index()] = &out.parts[c.index()] + &p;
                }
            }
        }
        out
    }

    /// Ad(exp(Y)) for Y concentrated in grade -1 or +1, where ad_Y is nilpotent
    /// of order at most 3 on the graded algebra.
    pub fn ad_exp_nilpotent(&self, y: &Self) -> Self {
        let one = y.bracket(self);
        let two = y.bracket(&one);
        let mut out = self.clone();
        for g in Grade::ALL {
            let i = g.index();
            out.parts[i] = &(&out.parts[i] + &one.parts[i]) + &two.parts[i].scale(0.5);
        }
        out
    }

    /// Ad((Id, v))(X, x) = (X, x - X v).
    pub fn translate(&self, v: &GradedVec) -> Self {
        let mut out = self.clone();
        for a in Grade::ALL {
            for b in Grade::ALL {
                if let Some(c) = Grade::from_value(a.value() + b.value()) {
                    let x = &self.get(a).lie;
                    let w = v.get(b);
                    if w.as_slice().iter().all(|&t| t == 0.0) {
                        continue;
                    }
                    let p = project_vec(&mat_vec(x, w), c);
                    let tgt = &mut out.parts[c.index()];
                    tgt.trans = &tgt.trans - &p;
                }
            }
        }
        out
    }
}

/// Weights of the Ad(K)-invariant inner product on Lie(G~).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    pub kappa: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self { kappa: 1.0, beta: 1.0, gamma: 1.0, delta: 1.0 }
    }
}

impl MetricParams {
    pub fn new(kappa: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("beta", beta), ("gamma", gamma), ("delta", delta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameters(alloc::format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { kappa, beta, gamma, delta })
    }

    /// Per-coordinate weights in the flat layout of [`PoincareAlg::to_coords`].
    /// b is stored once, so Tr(C^T C) = 2 sum_{i<j} C_ij^2 puts sqrt(2) on C.
    fn weights(&self, d: usize) -> Vec<f64> {
        let mut w = vec![self.kappa; d];
        w.extend(core::iter::repeat_n(self.beta * 2f64.sqrt(), d * (d - 1) / 2));
        w.push(self.delta);
        w.extend(core::iter::repeat_n(self.gamma, d));
        w
    }
}

/// sqrt(kappa^2 b^T b + beta^2 Tr(C^T C) + gamma^2 |x_space|^2 + delta^2 (x^0)^2).
pub fn alg_norm(x: &PoincareAlg, p: &MetricParams) -> f64 {
    let d = x.dim();
    x.to_coords()
        .iter()
        .zip(p.weights(d))
        .map(|(v, w)| (v * w) * (v * w))
        .sum::<f64>()
        .sqrt()
}

/// Norms on Lie(G~) for which operator norms of Ad are available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormChoice {
    Weighted(MetricParams),
    /// sqrt(Tr(X^T X) + x^T x).
    Frobenius,
    /// sqrt(Tr(X^T X)) + sqrt(x^T x).
    Split,
}

/// Matrix of X~ -> Ad(g~) X~ in flat coordinates.
pub fn ad_matrix(g: &PoincareElem) -> DMatrix<f64> {
    let d = g.dim();
    let n = algebra_dim(d);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let col = adjoint(g, &PoincareAlg::basis(d, j)).to_coords();
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

fn top_singular(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().fold(0.0, |a: f64, &b| a.max(b))
}

/// Operator norm of Ad(g~) for the chosen norm.
///
/// Hilbert norms use the largest singular value in an orthonormal basis. The
/// split norm is an l1-sum of two Euclidean norms; its unit ball has extreme
/// points on the pure-algebra and pure-translation spheres, and on each the sum
/// of two Euclidean norms is maximized by monotone ascent from several starts
/// (exact when the Lie(G) block acts isometrically, as for pure translations).
pub fn ad_operator_norm(g: &PoincareElem, norm: &NormChoice) -> f64 {
    let d = g.dim();
    let raw = ad_matrix(g);
    let w = match norm {
        NormChoice::Weighted(p) => p.weights(d),
        NormChoice::Frobenius | NormChoice::Split => {
            let mut w = vec![2f64.sqrt(); d * (d + 1) / 2];
            w.extend(core::iter::repeat_n(1.0, d + 1));
            w
        }
    };
    let n = raw.nrows();
    let scaled = DMatrix::from_fn(n, n, |i, j| w[i] * raw[(i, j)] / w[j]);
    match norm {
        NormChoice::Split => split_operator_norm(&scaled, d * (d + 1) / 2),
        _ => top_singular(&scaled),
    }
}

fn split_operator_norm(m: &DMatrix<f64>, k: usize) -> f64 {
    let n = m.nrows();
    let top = m.view((0, 0), (k, n)).clone_owned();
    let bot = m.view((k, 0), (n - k, n)).clone_owned();
    let mut best: f64 = 0.0;
    for (lo, len) in [(0, k), (k, n - k)] {
        let a1 = top.view((0, lo), (k, len)).clone_owned();
        let a2 = bot.view((0, lo), (n - k, len)).clone_owned();
        let f = |v: &DVector<f64>| (&a1 * v).norm() + (&a2 * v).norm();
        let mut starts: Vec<DVector<f64>> = Vec::new();
        for a in [&a1, &a2] {
            let svd = a.clone().svd(false, true);
            if let Some(vt) = svd.v_t {
                let (i, _) = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
                starts.push(vt.row(i).transpose());
            }
        }
        for j in 0..len {
            let mut e = DVector::zeros(len);
            e[j] = 1.0;
            starts.push(e);
        }
        for mut v in starts {
            let mut val = f(&v);
            for _ in 0..500 {
                let y1 = &a1 * &v;
                let y2 = &a2 * &v;
                let mut grad = DVector::zeros(len);
                if y1.norm() > 0.0 {
                    grad += a1.transpose() * &y1 / y1.norm();
                }
                if y2.norm() > 0.0 {
                    grad += a2.transpose() * &y2 / y2.norm();
                }
                let gn = grad.norm();
                if gn == 0.0 {
                    break;
                }
                v = grad / gn;
                let nv = f(&v);
                let done = nv - val <= 1e-15 * nv;
                val = nv;
                if done {
                    break;
                }
            }
            best = best.max(val);
        }
    }
    best
}

/// Computable bounds on the left-invariant Riemannian distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBounds {
    pub lower: f64,
    pub upper: f64,
}

/// kappa^2 / sqrt(kappa^2 + 2 beta^2) r(g): rigorous for every (g, xi).
pub fn rapidity_lower_bound(g: &LorentzElem, p: &MetricParams) -> f64 {
    p.kappa * p.kappa / (p.kappa * p.kappa + 2.0 * p.beta * p.beta).sqrt() * g.rapidity()
}

/// Along a unit-speed path from the identity, |d xi/ds| <= e^{r(g_s)} |x|_E,
/// with |x|_E <= 1 / min(gamma, delta) and r(g_s) <= c s (the rapidity bound,
/// c = sqrt(kappa^2 + 2 beta^2) / kappa^2). Integrating gives
/// |xi| <= (e^{cL} - 1) / (c min(gamma, delta)), hence this bound on L.
pub fn translation_lower_bound(xi: &MinkVec, p: &MetricParams) -> f64 {
    let c = (p.kappa * p.kappa + 2.0 * p.beta * p.beta).sqrt() / (p.kappa * p.kappa);
    (c * p.gamma.min(p.delta) * xi.euclid_norm()).ln_1p() / c
}

/// Length of the piecewise one-parameter path (Id, t xi), then the boost,
/// then the rotation of the polar form; every piece is an exponential curve
/// whose length is the norm of its generator.
fn polar_path_length(m: &PoincareElem, p: &MetricParams) -> f64 {
    let d = m.dim();
    let trans = alg_norm(&PoincareAlg::from_trans(m.xi.clone()), p);
    let Ok(pc) = lorentz::polar_decompose(&m.g) else {
        return f64::INFINITY;
    };
    let rot = match linalg::rotation_log(&pc.rot) {
        Some(c) => p.beta * c.norm(),
        // principal angles are at most pi in each of the floor(d/2) planes
        None => p.beta * core::f64::consts::PI * (2.0 * (d / 2) as f64).sqrt(),
    };
    trans + p.kappa * pc.r + rot
}

/// Bounds on d(Id, m).
pub fn bounds_from_identity(m: &PoincareElem, p: &MetricParams) -> DistanceBounds {
    let upper = match log_local(m) {
        Ok(x) => alg_norm(&x, p),
        Err(_) => polar_path_length(m, p),
    };
    // both bounds are rigorous; the min only absorbs rounding
    let lower = rapidity_lower_bound(&m.g, p).max(translation_lower_bound(&m.xi, p)).min(upper);
    DistanceBounds { lower, upper }
}

/// Bounds on d(g~, h~) = d(Id, g~^-1 h~).
pub fn distance_surrogate(g: &PoincareElem, h: &PoincareElem, p: &MetricParams) -> DistanceBounds {
    bounds_from_identity(&(&g.inverse() * h), p)
}

/// Discretized left-invariant length sum |log(s_i^-1 s_{i+1})|.
pub fn path_length(samples: &[PoincareElem], p: &MetricParams) -> Result<f64> {
    let mut total = 0.0;
    for w in samples.windows(2) {
        let step = &w[0].inverse() * &w[1];
        total += alg_norm(&log_local(&step)?, p);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::{boost, exp_alg};
    use proptest::prelude::*;

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    fn dist(a: &PoincareAlg, b: &PoincareAlg) -> f64 {
        (a - b).to_coords().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn size(a: &PoincareAlg) -> f64 {
        a.to_coords().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn elem(r: f64, th: &[f64], c: &[f64], xi: &[f64]) -> PoincareElem {
        let s = boost(r, &unit(th)).unwrap();
        let k = exp_alg(&LorentzAlg::from_coords(3, &[0.0, 0.0, 0.0, c[0], c[1], c[2]]).unwrap());
        PoincareElem::new(&s * &k, MinkVec::new(xi.to_vec()).unwrap()).unwrap()
    }

    fn alg(v: &[f64]) -> PoincareAlg {
        PoincareAlg::from_coords(3, v).unwrap()
    }

    #[test]
    fn group_law_examples() {
        let a = elem(0.7, &[1.0, -0.2, 0.3], &[0.4, 0.1, -0.9], &[0.5, -1.0, 2.0, 0.3]);
        let id = &a * &a.inverse();
        assert!(linalg::frob(&(id.affine_matrix() - PoincareElem::identity(3).affine_matrix())) < 1e-10);
        let x = MinkVec::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = MinkVec::new(vec![-1.0, 0.5, 0.0, 2.0]).unwrap();
        let s = &PoincareElem::translation(x.clone()) * &PoincareElem::translation(y.clone());
        assert_eq!(s, PoincareElem::translation(&x + &y));
    }

    #[test]
    fn bracket_examples() {
        let d = 3;
        let v1 = PoincareAlg::from_lie(LorentzAlg::v(d, 1));
        let n2 = PoincareAlg::from_lie(LorentzAlg::n(d, 2));
        let got = bracket(&v1, &n2);
        // matrix commutator oracle on the affine representation
        let (a, b) = (v1.affine_matrix(), n2.affine_matrix());
        let want = PoincareAlg::from_affine(&(&a * &b - &b * &a)).unwrap();
        assert!(dist(&got, &want) < 1e-15);
        assert!(dist(&got, &n2.scale(-1.0)) < 1e-15);
        let x = alg(&[0.3, -0.2, 0.5, 0.1, 0.7, -0.4, 1.0, 0.2, 0.3, -0.6]);
        assert!(size(&bracket(&x, &x)) == 0.0);
    }

    #[test]
    fn adjoint_examples() {
        let d = 3;
        let x = alg(&[0.3, -0.2, 0.5, 0.1, 0.7, -0.4, 1.0, 0.2, 0.3, -0.6]);
        assert!(dist(&adjoint(&PoincareElem::identity(d), &x), &x) < 1e-15);
        let t = 0.8;
        let a = PoincareElem::linear(LorentzElem::from_matrix_unchecked(lorentz::abelian(d, t)));
        let minus = alg_split(&x).minus;
        let got = adjoint(&a, &minus);
        assert!(dist(&got, &minus.scale((-t).exp())) < 1e-14);
        let plus = alg_split(&x).plus;
        assert!(dist(&adjoint(&a, &plus), &plus.scale(t.exp())) < 1e-14);
    }

    #[test]
    fn split_examples() {
        let d = 3;
        let v1 = PoincareAlg::from_lie(LorentzAlg::v(d, 1));
        let s = alg_split(&v1);
        assert!(size(&s.plus) == 0.0 && size(&s.minus) == 0.0);
        assert_eq!(s.zero, v1);
        let p = PoincareAlg::new(LorentzAlg::nbar(d, 2), MinkVec::light_plus(d)).unwrap();
        let s = alg_split(&p);
        assert!(size(&s.zero) == 0.0 && size(&s.minus) == 0.0);
        assert!(dist(&s.plus, &p) == 0.0);
    }

    #[test]
    fn norm_examples() {
        let d = 3;
        let v1 = PoincareAlg::from_lie(LorentzAlg::v(d, 1));
        let p = MetricParams::new(1.7, 1.0, 1.0, 1.0).unwrap();
        assert!((alg_norm(&v1, &p) - 1.7).abs() < 1e-15);
        let p = MetricParams::new(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((alg_norm(&PoincareAlg::h(d, 0), &p) - 2.0).abs() < 1e-15);
        let x = alg(&[0.3, -0.2, 0.5, 0.1, 0.7, -0.4, 1.0, 0.2, 0.3, -0.6]);
        let p = MetricParams::new(0.5, 2.0, 1.5, 0.7).unwrap();
        assert!((alg_norm(&x.scale(-3.0), &p) - 3.0 * alg_norm(&x, &p)).abs() < 1e-14);
        assert!(MetricParams::new(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn weighted_norm_is_trace_form() {
        let x = alg(&[0.3, -0.2, 0.5, 0.1, 0.7, -0.4, 1.0, 0.2, 0.3, -0.6]);
        let (k, b, g, dl) = (0.5, 2.0, 1.5, 0.7);
        let c = x.lie.c();
        let tr = (c.transpose() * c).trace();
        let xs = x.trans.space();
        let want = (k * k * x.lie.b().norm_squared()
            + b * b * tr
            + g * g * xs.iter().map(|v| v * v).sum::<f64>()
            + dl * dl * x.trans.time().powi(2))
        .sqrt();
        assert!((alg_norm(&x, &MetricParams::new(k, b, g, dl).unwrap()) - want).abs() < 1e-14);
    }

    #[test]
    fn operator_norm_examples() {
        let d = 3;
        let id = PoincareElem::identity(d);
        for n in [NormChoice::Frobenius, NormChoice::Split, NormChoice::Weighted(MetricParams::default())] {
            assert!((ad_operator_norm(&id, &n) - 1.0).abs() < 1e-12);
        }
        for r in [0.3, 1.0, 2.5] {
            let g = PoincareElem::linear(boost(r, &unit(&[0.2, 0.9, -0.4])).unwrap());
            let v = ad_operator_norm(&g, &NormChoice::Frobenius);
            assert!((v / r.exp() - 1.0).abs() < 1e-8, "r={r}: {v}");
        }
    }

    #[test]
    fn split_norm_of_translation() {
        // sup over unit X of |X xi| is at most |X|_op |xi| <= |xi| / sqrt(2),
        // since XQ is antisymmetric and its singular values come in pairs.
        let xi = MinkVec::new(vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let g = PoincareElem::translation(xi.clone());
        let v = ad_operator_norm(&g, &NormChoice::Split);
        assert!(v <= 1.0 + xi.euclid_norm() / 2f64.sqrt() + 1e-12);
        assert!((v - (1.0 + 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn surrogate_examples() {
        let d = 3;
        let p = MetricParams::default();
        let id = PoincareElem::identity(d);
        let b = distance_surrogate(&id, &id, &p);
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        let th = unit(&[0.3, 0.3, -0.9]);
        for r in [0.2, 3.0] {
            let s = PoincareElem::linear(boost(r, &th).unwrap());
            let b = distance_surrogate(&id, &s, &p);
            assert!((b.upper - r).abs() < 1e-9, "r={r} {b:?}");
            assert!(b.lower <= b.upper);
        }
    }

    #[test]
    fn translation_bound_below_conjugated_paths() {
        // (Id, xi) = (S, 0)(Id, S^-1 xi)(S^-1, 0): a path of length
        // 2 kappa r + |(0, S^-1 xi)| for every boost S = S(r, theta).
        let p = MetricParams::new(1.0, 0.5, 1.0, 2.0).unwrap();
        for scale in [0.01, 1.0, 100.0, 1e6] {
            let xi = &MinkVec::new(vec![0.3, 1.0, -0.5, 0.2]).unwrap() * scale;
            let lower = translation_lower_bound(&xi, &p);
            let mut best = f64::INFINITY;
            for th in [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
                for i in 0..400 {
                    let r = i as f64 * 0.05;
                    let s = boost(r, &th).unwrap();
                    let y = s.inverse().apply(&xi);
                    best = best.min(2.0 * r + alg_norm(&PoincareAlg::from_trans(y), &p));
                }
            }
            assert!(lower <= best, "scale {scale}: {lower} > {best}");
        }
    }

    #[test]
    fn path_length_examples() {
        let d = 3;
        let p = MetricParams::new(1.3, 0.8, 1.0, 1.0).unwrap();
        let c = vec![PoincareElem::identity(d); 5];
        assert_eq!(path_length(&c, &p).unwrap(), 0.0);
        let th = unit(&[0.5, -0.1, 0.2]);
        let r = 2.0;
        let samples: Vec<_> = (0..=1000)
            .map(|i| PoincareElem::linear(boost(r * i as f64 / 1000.0, &th).unwrap()))
            .collect();
        let l = path_length(&samples, &p).unwrap();
        assert!((l / (1.3 * r) - 1.0).abs() < 1e-6);
        let xi = MinkVec::new(vec![0.7, -0.3, 0.2, 1.1]).unwrap();
        let samples: Vec<_> = (0..=1000)
            .map(|i| PoincareElem::translation(&xi * (i as f64 / 1000.0)))
            .collect();
        let l = path_length(&samples, &p).unwrap();
        let want = alg_norm(&PoincareAlg::from_trans(xi), &p);
        assert!((l / want - 1.0).abs() < 1e-6);
        let far = vec![PoincareElem::identity(d), PoincareElem::linear(boost(3.0, &th).unwrap())];
        assert!(path_length(&far, &p).is_err());
    }

    #[test]
    fn graded_products_match_plain_ones() {
        let d = 3;
        let y = alg(&[0.3, -0.2, 0.5, 0.1, 0.7, -0.4, 1.0, 0.2, 0.3, -0.6]);
        let z = alg(&[-0.1, 0.4, 0.2, 0.9, -0.3, 0.5, 0.6, -0.8, 0.1, 0.4]);
        let gy = GradedAlg::from_alg(&y);
        let gz = GradedAlg::from_alg(&z);
        assert!(dist(&gy.bracket(&gz).sum(), &bracket(&y, &z)) < 1e-14);
        let v = MinkVec::new(vec![0.4, 1.2, -0.7, 0.3]).unwrap();
        let got = gz.translate(&GradedVec::from_vec(&v)).sum();
        let want = adjoint(&PoincareElem::translation(v), &z);
        assert!(dist(&got, &want) < 1e-14);
        let n = PoincareAlg::from_lie(LorentzAlg::n_combination(d, &[0.3, -0.5]));
        let got = gz.ad_exp_nilpotent(&GradedAlg::from_alg(&n)).sum();
        let want = adjoint(&PoincareElem::linear(exp_alg(&n.lie)), &z);
        assert!(dist(&got, &want) < 1e-14);
        let got = gz.scale_by_abelian(0.6).sum();
        let a = PoincareElem::linear(LorentzElem::from_matrix_unchecked(lorentz::abelian(d, 0.6)));
        assert!(dist(&got, &adjoint(&a, &z)) < 1e-14);
    }

    fn coords() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, 10)
    }

    fn elem_s() -> impl Strategy<Value = PoincareElem> {
        (0.0f64..2.0, proptest::collection::vec(-1.0f64..1.0, 3), proptest::collection::vec(-2.0f64..2.0, 3), proptest::collection::vec(-3.0f64..3.0, 4))
            .prop_filter("direction", |(_, t, ..)| t.iter().map(|x| x * x).sum::<f64>() > 1e-2)
            .prop_map(|(r, t, c, x)| elem(r, &t, &c, &x))
    }

    proptest! {
        #[test]
        fn associativity(a in elem_s(), b in elem_s(), c in elem_s()) {
            let l = &(&a * &b) * &c;
            let r = &a * &(&b * &c);
            let scale = linalg::frob(&l.affine_matrix()).max(1.0);
            prop_assert!(linalg::frob(&(l.affine_matrix() - r.affine_matrix())) <= 1e-10 * scale);
        }

        #[test]
        fn jacobi(a in coords(), b in coords(), c in coords()) {
            let (x, y, z) = (alg(&a), alg(&b), alg(&c));
            let j = &(&bracket(&x, &bracket(&y, &z)) + &bracket(&y, &bracket(&z, &x))) + &bracket(&z, &bracket(&x, &y));
            prop_assert!(size(&j) <= 1e-12);
        }

        #[test]
        fn adjoint_is_homomorphism(g in elem_s(), h in elem_s(), v in coords()) {
            let x = alg(&v);
            let lhs = adjoint(&(&g * &h), &x);
            let rhs = adjoint(&g, &adjoint(&h, &x));
            prop_assert!(dist(&lhs, &rhs) <= 1e-9 * size(&lhs).max(1.0));
        }

        #[test]
        fn adjoint_preserves_bracket(g in elem_s(), a in coords(), b in coords()) {
            let (x, y) = (alg(&a), alg(&b));
            let lhs = adjoint(&g, &bracket(&x, &y));
            let rhs = bracket(&adjoint(&g, &x), &adjoint(&g, &y));
            prop_assert!(dist(&lhs, &rhs) <= 1e-9 * size(&lhs).max(1.0));
        }

        #[test]
        fn split_eigen(v in coords()) {
            let x = alg(&v);
            let s = alg_split(&x);
            prop_assert!(dist(&s.sum(), &x) <= 1e-12);
            let h = PoincareAlg::from_lie(LorentzAlg::v(3, 1));
            for g in Grade::ALL {
                let c = s.get(g);
                let r = &bracket(&h, c) - &c.scale(g.value() as f64);
                prop_assert!(size(&r) <= 1e-12);
            }
        }

        #[test]
        fn norm_is_ad_k_invariant(c in proptest::collection::vec(-3.0f64..3.0, 3), v in coords(), w in proptest::collection::vec(0.2f64..3.0, 4)) {
            let k = PoincareElem::linear(exp_alg(&LorentzAlg::from_coords(3, &[0.0, 0.0, 0.0, c[0], c[1], c[2]]).unwrap()));
            let p = MetricParams::new(w[0], w[1], w[2], w[3]).unwrap();
            let x = alg(&v);
            prop_assert!((alg_norm(&adjoint(&k, &x), &p) - alg_norm(&x, &p)).abs() <= 1e-10);
        }

        #[test]
        fn adjoint_of_exp_is_exp_of_ad(v in coords(), t in -0.5f64..0.5, w in coords()) {
            let y = alg(&v);
            let z = alg(&w);
            let lhs = adjoint(&exp(&y.scale(t)), &z);
            let mut term = z.clone();
            let mut sum = z.clone();
            for k in 1..40 {
                term = bracket(&y, &term).scale(t / k as f64);
                sum = &sum + &term;
            }
            prop_assert!(dist(&lhs, &sum) <= 1e-10);
        }

        #[test]
        fn surrogate_left_invariant_and_ordered(g in elem_s(), h in elem_s()) {
            let p = MetricParams::default();
            let a = distance_surrogate(&g, &(&g * &h), &p);
            let b = distance_surrogate(&PoincareElem::identity(3), &h, &p);
            prop_assert!((a.lower - b.lower).abs() <= 1e-8 * (1.0 + b.lower));
            prop_assert!((a.upper - b.upper).abs() <= 1e-8 * (1.0 + b.upper));
            prop_assert!(b.lower <= b.upper);
        }

        #[test]
        fn surrogate_continuous(v in coords(), s in 1e-6f64..1e-2) {
            let g = exp(&alg(&v).scale(s));
            let b = distance_surrogate(&PoincareElem::identity(3), &g, &MetricParams::default());
            prop_assert!(b.upper <= 10.0 * s && b.lower <= b.upper);
        }

        #[test]
        fn exp_log_roundtrip(v in coords()) {
            let x = alg(&v).scale(0.1);
            let back = log_local(&exp(&x)).unwrap();
            prop_assert!(dist(&back, &x) <= 1e-9);
        }
    }
}
