//! The Lorentz group SO(1,d)+ and its Lie algebra: boosts, exponentials,
//! polar and Iwasawa (NAK) decompositions, and constraint repair.
//!
//! Space indices on the public API are 1-based (`1..=d`), matching V_i and
//! V_ij; matrix indices are 0-based with row/column 0 the time axis.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Mul;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg;
use crate::minkowski::MinkVec;
use crate::{Error, Result};

/// Tolerance used when validating user-supplied group elements.
pub const ELEM_TOL: f64 = 1e-9;
/// Tolerance on the norm of a direction vector.
pub const UNIT_TOL: f64 = 1e-12;
/// Below this rapidity the polar direction defaults to e_1.
pub const POLAR_R_MIN: f64 = 1e-8;
/// Frobenius radius around the identity accepted by [`log_local`].
pub const LOG_RADIUS: f64 = 0.5;

/// Q = diag(1, -1, ..., -1).
pub fn metric(d: usize) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::identity(d + 1, d + 1);
    for i in 1..=d {
        q[(i, i)] = -1.0;
    }
    q
}

/// An element of SO(1,d)+ stored as a (d+1)x(d+1) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzElem {
    mat: DMatrix<f64>,
}

impl LorentzElem {
    /// Validates gQg^T = Q (relative to cosh^2 r), time orientation and det = +1.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        let n = mat.nrows();
        if n < 3 || mat.ncols() != n {
            return Err(Error::InvalidElement(format!("shape {}x{}", mat.nrows(), mat.ncols())));
        }
        let g = Self { mat };
        if g.mat[(0, 0)] < 1.0 - ELEM_TOL {
            return Err(Error::InvalidElement(format!("q(g e0, e0) = {} < 1", g.mat[(0, 0)])));
        }
        let res = g.constraint_residual();
        if res > ELEM_TOL {
            return Err(Error::InvalidElement(format!("gQg^T - Q residual {res:e}")));
        }
        let det = g.mat.clone().determinant();
        if (det - 1.0).abs() > ELEM_TOL * g.scale().powi(n as i32 / 2) {
            return Err(Error::InvalidElement(format!("det = {det}")));
        }
        Ok(g)
    }

    /// Wraps a matrix without checks; callers guarantee the invariants.
    pub fn from_matrix_unchecked(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    pub fn identity(d: usize) -> Self {
        Self { mat: DMatrix::identity(d + 1, d + 1) }
    }

    /// Embeds a spatial rotation k as diag(1, k).
    pub fn rotation(k: &DMatrix<f64>) -> Result<Self> {
        let d = k.nrows();
        if d < 2 || k.ncols() != d {
            return Err(Error::InvalidElement(format!("rotation shape {}x{}", k.nrows(), k.ncols())));
        }
        let mut mat = DMatrix::<f64>::identity(d + 1, d + 1);
        mat.view_mut((1, 1), (d, d)).copy_from(k);
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    /// g^-1 = Q g^T Q, exact.
    pub fn inverse(&self) -> Self {
        let mut m = self.mat.transpose();
        let n = m.nrows();
        for i in 1..n {
            m[(0, i)] = -m[(0, i)];
            m[(i, 0)] = -m[(i, 0)];
        }
        Self { mat: m }
    }

    pub fn apply(&self, v: &MinkVec) -> MinkVec {
        MinkVec::from_vector_unchecked(&self.mat * v.coords())
    }

    /// The velocity g e_0, a point of the hyperboloid.
    pub fn velocity(&self) -> MinkVec {
        MinkVec::from_vector_unchecked(self.mat.column(0).clone_owned())
    }

    fn scale(&self) -> f64 {
        let g00 = self.mat[(0, 0)];
        (g00 * g00).max(1.0)
    }

    /// max-entry of gQg^T - Q divided by max(1, cosh^2 r(g)).
    ///
    /// Entries of a boost of rapidity r are O(e^r), so rounding alone puts
    /// O(eps e^{2r}) into gQg^T; the scaling makes the residual comparable
    /// across rapidities and reduces to the absolute one near K.
    pub fn constraint_residual(&self) -> f64 {
        let d = self.dim();
        let q = metric(d);
        let r = &self.mat * &q * self.mat.transpose() - q;
        r.iter().map(|x| x.abs()).fold(0.0, f64::max) / self.scale()
    }

    /// Rapidity r(g) with cosh r = q(g e0, e0).
    pub fn rapidity(&self) -> f64 {
        let sp = self.mat.view((1, 0), (self.dim(), 1)).norm();
        if sp < 1.0 {
            sp.asinh()
        } else {
            self.mat[(0, 0)].max(1.0).acosh()
        }
    }
}

impl Mul for &LorentzElem {
    type Output = LorentzElem;
    fn mul(self, rhs: &LorentzElem) -> LorentzElem {
        LorentzElem { mat: &self.mat * &rhs.mat }
    }
}

/// An element of Lie(G) in (b, C) coordinates: X = [[0, b^T], [b, C]].
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzAlg {
    b: DVector<f64>,
    c: DMatrix<f64>,
}

impl LorentzAlg {
    /// C is replaced by its antisymmetric part (C - C^T)/2.
    pub fn new(b: DVector<f64>, c: DMatrix<f64>) -> Result<Self> {
        let d = b.len();
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        if c.nrows() != d || c.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: c.nrows() });
        }
        let c = (&c - c.transpose()) * 0.5;
        Ok(Self { b, c })
    }

    pub fn zero(d: usize) -> Self {
        Self { b: DVector::zeros(d), c: DMatrix::zeros(d, d) }
    }

    /// Pure boost generator sum_i b^i V_i.
    pub fn from_boost(b: DVector<f64>) -> Self {
        let d = b.len();
        Self { b, c: DMatrix::zeros(d, d) }
    }

    /// V_i, i in 1..=d.
    pub fn v(d: usize, i: usize) -> Self {
        let mut x = Self::zero(d);
        x.b[i - 1] = 1.0;
        x
    }

    /// V_ij = e_i e_j^T - e_j e_i^T, i != j in 1..=d.
    pub fn v_ij(d: usize, i: usize, j: usize) -> Self {
        let mut x = Self::zero(d);
        x.c[(i - 1, j - 1)] = 1.0;
        x.c[(j - 1, i - 1)] = -1.0;
        x
    }

    /// N_i = V_i - V_1i, i in 2..=d; spans the nilpotent algebra of the Iwasawa splitting.
    pub fn n(d: usize, i: usize) -> Self {
        &Self::v(d, i) - &Self::v_ij(d, 1, i)
    }

    /// V_i + V_1i, i in 2..=d; spans the opposite nilpotent algebra.
    pub fn nbar(d: usize, i: usize) -> Self {
        &Self::v(d, i) + &Self::v_ij(d, 1, i)
    }

    /// sum_i coeffs[i-2] N_i.
    pub fn n_combination(d: usize, coeffs: &[f64]) -> Self {
        let mut x = Self::zero(d);
        for (j, &a) in coeffs.iter().enumerate() {
            x.b[j + 1] += a;
            x.c[(0, j + 1)] -= a;
            x.c[(j + 1, 0)] += a;
        }
        x
    }

    /// sum_i coeffs[i-2] (V_i + V_1i).
    pub fn nbar_combination(d: usize, coeffs: &[f64]) -> Self {
        let mut x = Self::zero(d);
        for (j, &a) in coeffs.iter().enumerate() {
            x.b[j + 1] += a;
            x.c[(0, j + 1)] += a;
            x.c[(j + 1, 0)] -= a;
        }
        x
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::<f64>::zeros(d + 1, d + 1);
        for i in 0..d {
            m[(0, i + 1)] = self.b[i];
            m[(i + 1, 0)] = self.b[i];
        }
        m.view_mut((1, 1), (d, d)).copy_from(&self.c);
        m
    }

    /// Projects a matrix on Lie(G): b from the averaged boost entries, C from
    /// the antisymmetric part of the space block.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n < 3 || m.ncols() != n {
            return Err(Error::DimensionTooSmall(n.saturating_sub(1)));
        }
        let d = n - 1;
        let b = DVector::from_fn(d, |i, _| 0.5 * (m[(0, i + 1)] + m[(i + 1, 0)]));
        let c = m.view((1, 1), (d, d)).clone_owned();
        Self::new(b, c)
    }

    /// max-entry of XQ + QX^T, the derivative of gQg^T = Q at the identity.
    pub fn algebra_residual(m: &DMatrix<f64>) -> f64 {
        let q = metric(m.nrows() - 1);
        let r = m * &q + &q * m.transpose();
        r.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { b: &self.b * s, c: &self.c * s }
    }

    /// Tr(X^T X) = 2 b^T b + Tr(C^T C).
    pub fn frobenius_sq(&self) -> f64 {
        2.0 * self.b.norm_squared() + self.c.norm_squared()
    }

    /// Matrix commutator [X, Y].
    pub fn bracket(&self, other: &Self) -> Self {
        let a = self.to_matrix();
        let b = other.to_matrix();
        // The commutator of two elements of Lie(G) lies in Lie(G).
        Self::from_matrix(&(&a * &b - &b * &a)).expect("square commutator")
    }

    /// Flat coordinates: b followed by the strict upper triangle of C.
    pub fn to_coords(&self) -> Vec<f64> {
        let d = self.dim();
        let mut v = Vec::with_capacity(d * (d + 1) / 2);
        v.extend(self.b.iter());
        for i in 0..d {
            for j in i + 1..d {
                v.push(self.c[(i, j)]);
            }
        }
        v
    }

    pub fn from_coords(d: usize, v: &[f64]) -> Result<Self> {
        if v.len() != d * (d + 1) / 2 {
            return Err(Error::DimensionMismatch { expected: d * (d + 1) / 2, found: v.len() });
        }
        let mut x = Self::zero(d);
        x.b.copy_from_slice(&v[..d]);
        let mut k = d;
        for i in 0..d {
            for j in i + 1..d {
                x.c[(i, j)] = v[k];
                x.c[(j, i)] = -v[k];
                k += 1;
            }
        }
        Ok(x)
    }
}

impl core::ops::Add for &LorentzAlg {
    type Output = LorentzAlg;
    fn add(self, rhs: &LorentzAlg) -> LorentzAlg {
        LorentzAlg { b: &self.b + &rhs.b, c: &self.c + &rhs.c }
    }
}

impl core::ops::Sub for &LorentzAlg {
    type Output = LorentzAlg;
    fn sub(self, rhs: &LorentzAlg) -> LorentzAlg {
        LorentzAlg { b: &self.b - &rhs.b, c: &self.c - &rhs.c }
    }
}

fn check_unit(theta: &[f64]) -> Result<()> {
    let n = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitDirection(n));
    }
    Ok(())
}

/// The boost S(r, theta) = exp(r sum_i theta^i V_i).
pub fn boost(r: f64, theta: &[f64]) -> Result<LorentzElem> {
    check_unit(theta)?;
    let d = theta.len();
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let (sh, ch) = (r.sinh(), r.cosh());
    let chm1 = 2.0 * (0.5 * r).sinh().powi(2);
    let mut m = DMatrix::<f64>::identity(d + 1, d + 1);
    m[(0, 0)] = ch;
    for i in 0..d {
        m[(0, i + 1)] = sh * theta[i];
        m[(i + 1, 0)] = sh * theta[i];
        for j in 0..d {
            m[(i + 1, j + 1)] += chm1 * theta[i] * theta[j];
        }
    }
    Ok(LorentzElem { mat: m })
}

/// Matrix exponential on Lie(G).
///
/// Pure boosts use the closed form of [`boost`]; nilpotent inputs (X^3 = 0,
/// which covers both nilpotent Iwasawa algebras) use I + X + X^2/2; anything
/// else goes through scaling and squaring.
pub fn exp_alg(x: &LorentzAlg) -> LorentzElem {
    let d = x.dim();
    if x.c.iter().all(|&v| v == 0.0) {
        let r = x.b.norm();
        if r == 0.0 {
            return LorentzElem::identity(d);
        }
        let theta: Vec<f64> = x.b.iter().map(|v| v / r).collect();
        if let Ok(g) = boost(r, &theta) {
            return g;
        }
    }
    let m = x.to_matrix();
    let m2 = &m * &m;
    let m3 = &m2 * &m;
    let nm = linalg::frob(&m);
    if linalg::frob(&m3) <= 1e-14 * (1.0 + nm).powi(3) {
        let id = DMatrix::<f64>::identity(d + 1, d + 1);
        return LorentzElem { mat: id + m + m2 * 0.5 };
    }
    LorentzElem { mat: linalg::expm(&m) }
}

/// n = exp(sum_i b^{i} N_{i+2}), closed form.
///
/// With w = sum b^i e_{i+2}, N = (e0 - e1) w^T + w (e0 + e1)^T and
/// N^2 = |b|^2 (e0 - e1)(e0 + e1)^T.
pub fn nilpotent(d: usize, b: &[f64]) -> DMatrix<f64> {
    assert_eq!(b.len(), d - 1);
    let mut m = DMatrix::<f64>::identity(d + 1, d + 1);
    let h = 0.5 * b.iter().map(|x| x * x).sum::<f64>();
    for (j, &bj) in b.iter().enumerate() {
        let i = j + 2;
        m[(0, i)] += bj;
        m[(1, i)] -= bj;
        m[(i, 0)] += bj;
        m[(i, 1)] += bj;
    }
    m[(0, 0)] += h;
    m[(0, 1)] += h;
    m[(1, 0)] -= h;
    m[(1, 1)] -= h;
    m
}

/// a = exp(u V_1).
pub fn abelian(d: usize, u: f64) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::identity(d + 1, d + 1);
    m[(0, 0)] = u.cosh();
    m[(1, 1)] = u.cosh();
    m[(0, 1)] = u.sinh();
    m[(1, 0)] = u.sinh();
    m
}

/// Polar coordinates g = S(r, theta) diag(1, R).
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCoords {
    pub r: f64,
    pub theta: DVector<f64>,
    pub rot: DMatrix<f64>,
}

impl PolarCoords {
    pub fn reassemble(&self) -> Result<LorentzElem> {
        let s = boost(self.r, self.theta.as_slice())?;
        let mut k = DMatrix::<f64>::identity(self.rot.nrows() + 1, self.rot.nrows() + 1);
        k.view_mut((1, 1), (self.rot.nrows(), self.rot.nrows())).copy_from(&self.rot);
        Ok(LorentzElem { mat: s.mat * k })
    }
}

pub fn polar_decompose(g: &LorentzElem) -> Result<PolarCoords> {
    let d = g.dim();
    let g00 = g.mat[(0, 0)];
    if g00 < 1.0 - ELEM_TOL {
        return Err(Error::InvalidElement(format!("q(g e0, e0) = {g00} < 1")));
    }
    let r = g.rapidity();
    let (theta, rest) = if r > POLAR_R_MIN {
        let sh = r.sinh();
        let mut th = DVector::from_fn(d, |i, _| g.mat[(i + 1, 0)] / sh);
        let n = th.norm();
        th /= n;
        let mut neg = th.clone();
        neg.neg_mut();
        let sinv = boost(r, neg.as_slice())?;
        (th, sinv.mat * &g.mat)
    } else {
        let mut th = DVector::zeros(d);
        th[0] = 1.0;
        (th, g.mat.clone())
    };
    let rot = rest.view((1, 1), (d, d)).clone_owned();
    Ok(PolarCoords { r, theta, rot })
}

/// Iwasawa coordinates g = n(b) exp(u V_1) diag(1, k).
#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaCoords {
    /// Coefficients of N_2, ..., N_d.
    pub b: DVector<f64>,
    pub u: f64,
    pub k: DMatrix<f64>,
}

impl IwasawaCoords {
    pub fn identity(d: usize) -> Self {
        Self { b: DVector::zeros(d - 1), u: 0.0, k: DMatrix::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn reassemble(&self) -> LorentzElem {
        let d = self.dim();
        let na = nilpotent(d, self.b.as_slice()) * abelian(d, self.u);
        let mut out = na.clone();
        // Right multiplication by diag(1, k) only touches the space columns.
        let block = na.view((0, 1), (d + 1, d)) * &self.k;
        out.view_mut((0, 1), (d + 1, d)).copy_from(&block);
        LorentzElem { mat: out }
    }
}

pub fn iwasawa_decompose(g: &LorentzElem) -> Result<IwasawaCoords> {
    let d = g.dim();
    let pair = g.mat[(0, 0)] + g.mat[(1, 0)];
    if !(pair > 0.0) {
        return Err(Error::InvalidElement(format!("q(g e0, e0 - e1) = {pair} <= 0")));
    }
    let u = pair.ln();
    let eu = (-u).exp();
    let b = DVector::from_fn(d - 1, |i, _| eu * g.mat[(i + 2, 0)]);
    let mut negb = b.clone();
    negb.neg_mut();
    let rest = abelian(d, -u) * nilpotent(d, negb.as_slice()) * &g.mat;
    let k = rest.view((1, 1), (d, d)).clone_owned();
    Ok(IwasawaCoords { b, u, k })
}

/// u = log(cosh r + theta1 sinh r), evaluated without cancellation or overflow.
pub fn u_from_polar(r: f64, theta1: f64) -> f64 {
    if r < 1.0 {
        let chm1 = 2.0 * (0.5 * r).sinh().powi(2);
        (chm1 + theta1 * r.sinh()).ln_1p()
    } else {
        let e2 = (-2.0 * r).exp();
        r + (0.5 * (1.0 + theta1) + 0.5 * (1.0 - theta1) * e2).ln()
    }
}

/// Iwasawa coordinates of a boost S(r, theta) in closed form.
///
/// The compact part is the rotation by -phi in the plane (e_1, p), where p is
/// the unit vector along the e_2..e_d part of theta.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BoostIwasawa {
    pub u: f64,
    /// Scale s with b = s * theta[1..].
    pub b_scale: f64,
    pub cos_m1: f64,
    pub sin: f64,
    /// |theta[1..]|.
    pub tau: f64,
}

pub(crate) fn boost_iwasawa(r: f64, theta: &[f64]) -> BoostIwasawa {
    let t1 = theta[0].clamp(-1.0, 1.0);
    let tau = theta[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    let e = (-r).exp();
    // Everything below is divided by e^r.
    let sh = -0.5 * (-2.0 * r).exp_m1();
    let chm1 = if r < 1.0 {
        2.0 * (0.5 * r).sinh().powi(2) * e
    } else {
        0.5 * (1.0 - e) * (1.0 - e)
    };
    let dd = chm1 + e + t1 * sh;
    let s_hat = sh + chm1 * t1;
    BoostIwasawa {
        u: u_from_polar(r, t1),
        b_scale: sh / dd,
        cos_m1: -chm1 * tau * tau / dd,
        sin: s_hat * tau / dd,
        tau,
    }
}

impl BoostIwasawa {
    /// Left-multiplies the rotation k (d x d) in place by the compact part.
    pub(crate) fn rotate(&self, theta: &[f64], k: &mut DMatrix<f64>, scratch: &mut [f64]) {
        if self.tau <= 0.0 || (self.cos_m1 == 0.0 && self.sin == 0.0) {
            return;
        }
        let d = theta.len();
        // p = theta[1..] / tau in coordinates 1..d.
        let (ra, rb) = scratch.split_at_mut(d);
        for c in 0..d {
            ra[c] = k[(0, c)];
            let mut s = 0.0;
            for i in 1..d {
                s += theta[i] * k[(i, c)];
            }
            rb[c] = s / self.tau;
        }
        for c in 0..d {
            let (a, pb) = (ra[c], rb[c]);
            // k' = I + cos_m1 (e1 e1^T + p p^T) - sin (p e1^T - e1 p^T)
            k[(0, c)] += self.cos_m1 * a + self.sin * pb;
            let coef = self.cos_m1 * pb - self.sin * a;
            for i in 1..d {
                k[(i, c)] += coef * theta[i] / self.tau;
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn to_coords(&self, theta: &[f64]) -> IwasawaCoords {
        let d = theta.len();
        let mut k = DMatrix::<f64>::identity(d, d);
        let mut scratch = alloc::vec![0.0; 2 * d];
        self.rotate(theta, &mut k, &mut scratch);
        IwasawaCoords {
            b: DVector::from_fn(d - 1, |i, _| self.b_scale * theta[i + 1]),
            u: self.u,
            k,
        }
    }
}

/// Principal logarithm near the identity (Frobenius distance below [`LOG_RADIUS`]).
pub fn log_local(g: &LorentzElem) -> Result<LorentzAlg> {
    let l = linalg::logm_near_identity(&g.mat, LOG_RADIUS)?;
    LorentzAlg::from_matrix(&l)
}

/// Restores gQg^T = Q by q-orthonormal Gram-Schmidt on the rows.
pub fn renormalize(raw: &DMatrix<f64>) -> Result<LorentzElem> {
    let n = raw.nrows();
    if n < 3 || raw.ncols() != n {
        return Err(Error::InvalidElement(format!("shape {}x{}", raw.nrows(), raw.ncols())));
    }
    let pre = LorentzElem { mat: raw.clone() }.constraint_residual();
    if !(pre <= 1e-3) {
        return Err(Error::InvalidElement(format!("residual {pre:e} too large to repair")));
    }
    let mut m = raw.clone();
    let form = |m: &DMatrix<f64>, i: usize, j: usize| {
        let mut s = m[(i, 0)] * m[(j, 0)];
        for c in 1..n {
            s -= m[(i, c)] * m[(j, c)];
        }
        s
    };
    for i in 0..n {
        for j in 0..i {
            let qjj = if j == 0 { 1.0 } else { -1.0 };
            let coef = form(&m, i, j) / qjj;
            for c in 0..n {
                let v = m[(j, c)];
                m[(i, c)] -= coef * v;
            }
        }
        let qii = form(&m, i, i);
        let want = if i == 0 { 1.0 } else { -1.0 };
        if qii * want < 1e-6 {
            return Err(Error::Degenerate(qii));
        }
        let s = 1.0 / (qii * want).sqrt();
        for c in 0..n {
            m[(i, c)] *= s;
        }
    }
    Ok(LorentzElem { mat: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    fn frob(m: &DMatrix<f64>) -> f64 {
        linalg::frob(m)
    }

    fn rot3(a: f64, b: f64, c: f64) -> DMatrix<f64> {
        let x = LorentzAlg::new(
            DVector::zeros(3),
            DMatrix::from_row_slice(3, 3, &[0.0, a, b, -a, 0.0, c, -b, -c, 0.0]),
        )
        .unwrap();
        exp_alg(&x).matrix().view((1, 1), (3, 3)).clone_owned()
    }

    #[test]
    fn boost_examples() {
        let th = [1.0, 0.0, 0.0];
        let g = boost(0.0, &th).unwrap();
        assert_eq!(g.matrix(), &DMatrix::<f64>::identity(4, 4));
        let g = boost(1.0, &th).unwrap();
        // cosh 1 and sinh 1
        assert!((g.matrix()[(0, 0)] - 1.5430806348152437).abs() < 1e-15);
        assert!((g.matrix()[(0, 1)] - 1.1752011936438014).abs() < 1e-15);
        assert!((g.matrix()[(1, 0)] - 1.1752011936438014).abs() < 1e-15);
        assert!((g.matrix()[(1, 1)] - 1.5430806348152437).abs() < 1e-15);
        assert_eq!(g.matrix()[(2, 2)], 1.0);
        assert_eq!(g.matrix()[(2, 0)], 0.0);
        assert!(g.constraint_residual() < 1e-15);
        assert!(matches!(boost(1.0, &[1.0, 1.0]), Err(Error::NonUnitDirection(_))));
    }

    #[test]
    fn zero_alg_exp_is_identity() {
        assert_eq!(exp_alg(&LorentzAlg::zero(3)), LorentzElem::identity(3));
    }

    #[test]
    fn exp_pure_boost_matches_boost() {
        let th = unit(&[0.3, -0.4, 1.2]);
        let b = DVector::from_vec(th.iter().map(|x| 0.8 * x).collect());
        let g = exp_alg(&LorentzAlg::from_boost(b.clone()));
        assert!(frob(&(g.matrix() - boost(0.8, &th).unwrap().matrix())) < 1e-15);
        // and the generic path agrees
        let gen = linalg::expm(&LorentzAlg::from_boost(b).to_matrix());
        assert!(frob(&(gen - g.matrix())) < 1e-13);
    }

    #[test]
    fn exp_nilpotent_matches_series() {
        let d = 4;
        let x = &LorentzAlg::n_combination(d, &[0.7, -1.1, 0.4]) + &LorentzAlg::zero(d);
        let g = exp_alg(&x);
        let m = x.to_matrix();
        let mut term = DMatrix::<f64>::identity(d + 1, d + 1);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &m / k as f64;
            sum += &term;
        }
        assert!(frob(&(sum - g.matrix())) < 1e-12);
        assert_eq!(g.matrix(), &nilpotent(d, &[0.7, -1.1, 0.4]));
    }

    #[test]
    fn generic_exp_is_lorentz() {
        let x = LorentzAlg::new(
            DVector::from_vec(vec![0.5, -0.2, 0.9]),
            DMatrix::from_row_slice(3, 3, &[0.0, 0.4, -1.3, 0.0, 0.0, 0.6, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        let g = exp_alg(&x);
        assert!(LorentzElem::new(g.into_matrix()).is_ok());
    }

    #[test]
    fn polar_examples() {
        let p = polar_decompose(&LorentzElem::identity(3)).unwrap();
        assert_eq!(p.r, 0.0);
        assert_eq!(p.theta.as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(p.rot, DMatrix::<f64>::identity(3, 3));

        let th = unit(&[1.0, 2.0, -0.5]);
        let p = polar_decompose(&boost(1.3, &th).unwrap()).unwrap();
        assert!((p.r - 1.3).abs() < 1e-14);
        for i in 0..3 {
            assert!((p.theta[i] - th[i]).abs() < 1e-14);
        }
        assert!(frob(&(p.rot - DMatrix::<f64>::identity(3, 3))) < 1e-14);
    }

    #[test]
    fn polar_rejects_past_pointing() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 0)] = -1.0;
        m[(1, 1)] = -1.0;
        let g = LorentzElem::from_matrix_unchecked(m);
        assert!(polar_decompose(&g).is_err());
        assert!(LorentzElem::new(g.into_matrix()).is_err());
    }

    #[test]
    fn iwasawa_examples() {
        let d = 3;
        let g = LorentzElem::from_matrix_unchecked(abelian(d, 0.7));
        let iw = iwasawa_decompose(&g).unwrap();
        assert!(iw.b.norm() < 1e-15);
        assert!((iw.u - 0.7).abs() < 1e-15);
        assert!(frob(&(iw.k - DMatrix::<f64>::identity(3, 3))) < 1e-15);

        let iw = iwasawa_decompose(&boost(2.5, &[1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!(iw.b.norm() < 1e-15);
        assert!((iw.u - 2.5).abs() < 1e-14);
        assert!(frob(&(iw.k - DMatrix::<f64>::identity(3, 3))) < 1e-13);
    }

    #[test]
    fn u_from_polar_examples() {
        assert!((u_from_polar(0.7, 1.0) - 0.7).abs() < 1e-15);
        assert!((u_from_polar(3.0, 1.0) - 3.0).abs() < 1e-15);
        assert!((u_from_polar(0.7, -1.0) + 0.7).abs() < 1e-15);
        assert!((u_from_polar(3.0, -1.0) + 3.0).abs() < 1e-14);
        // log cosh 1
        assert!((u_from_polar(1.0, 0.0) - 0.43378083048302). abs() < 1e-13);
        // no overflow for huge rapidities
        assert!((u_from_polar(5000.0, 0.0) - (5000.0 - 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn log_local_examples() {
        assert_eq!(log_local(&LorentzElem::identity(3)).unwrap(), LorentzAlg::zero(3));
        let th = unit(&[0.2, -1.0, 0.4]);
        let l = log_local(&boost(0.1, &th).unwrap()).unwrap();
        for i in 0..3 {
            assert!((l.b()[i] - 0.1 * th[i]).abs() < 1e-14);
        }
        assert!(l.c().norm() < 1e-14);
        assert!(log_local(&boost(2.0, &th).unwrap()).is_err());
    }

    #[test]
    fn renormalize_examples() {
        let th = unit(&[0.5, 0.5, -1.0]);
        let g = boost(0.9, &th).unwrap();
        let r = renormalize(g.matrix()).unwrap();
        assert!(frob(&(r.matrix() - g.matrix())) < 1e-12);

        let mut noisy = g.matrix().clone();
        let mut s = 0.37;
        for v in noisy.iter_mut() {
            s = (s * 7919.0 + 0.123) % 1.0;
            *v += 1e-6 * (s - 0.5);
        }
        let r = renormalize(&noisy).unwrap();
        assert!(r.constraint_residual() < 1e-12);
        let p = polar_decompose(&r).unwrap();
        assert!((p.r - 0.9).abs() < 1e-5);

        let mut bad = DMatrix::<f64>::identity(4, 4);
        bad[(1, 1)] = 0.0;
        assert!(renormalize(&bad).is_err());
    }

    #[test]
    fn light_vector_fixed_by_n_and_scaled_by_a() {
        let d = 3;
        let m = MinkVec::light_minus(d);
        let n = nilpotent(d, &[0.4, -2.0]);
        assert_eq!(&n * m.coords(), m.coords().clone());
        let a = abelian(d, 0.6);
        let s = &a * m.coords();
        let want = m.coords() * (-0.6f64).exp();
        assert!((s - want).norm() < 1e-15);
    }

    #[test]
    fn grading_brackets() {
        for d in 2..6 {
            let v1 = LorentzAlg::v(d, 1);
            for i in 2..=d {
                let n = LorentzAlg::n(d, i);
                let nb = LorentzAlg::nbar(d, i);
                let r1 = &v1.bracket(&n) + &n;
                let r2 = &v1.bracket(&nb) - &nb;
                assert!(r1.frobenius_sq().sqrt() < 1e-12);
                assert!(r2.frobenius_sq().sqrt() < 1e-12);
            }
        }
    }

    #[test]
    fn boost_iwasawa_matches_matrix_route() {
        for (r, raw) in [
            (0.7, [0.3, -0.8, 0.2, 0.5]),
            (0.01, [-0.9, 0.1, 0.3, 0.2]),
            (5.0, [-0.2, 0.4, 0.4, -0.8]),
            (0.2, [1.0, 0.0, 0.0, 0.0]),
        ] {
            let th = unit(&raw);
            let closed = boost_iwasawa(r, &th).to_coords(&th);
            let mat = iwasawa_decompose(&boost(r, &th).unwrap()).unwrap();
            assert!((closed.u - mat.u).abs() < 1e-12, "u at r={r}");
            assert!((&closed.b - &mat.b).norm() < 1e-12, "b at r={r}");
            assert!(frob(&(&closed.k - &mat.k)) < 1e-11, "k at r={r}");
        }
    }

    #[test]
    fn boost_iwasawa_huge_rapidity_is_finite() {
        let th = unit(&[-0.3, 0.5, 0.1]);
        let c = boost_iwasawa(1e5, &th).to_coords(&th);
        assert!(c.u.is_finite() && c.b.iter().all(|x| x.is_finite()));
        assert!(frob(&(&c.k * c.k.transpose() - DMatrix::<f64>::identity(3, 3))) < 1e-12);
    }

    fn elem_strategy() -> impl Strategy<Value = LorentzElem> {
        (0.0f64..4.0, proptest::collection::vec(-1.0f64..1.0, 3), -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0)
            .prop_filter("nonzero", |(_, v, ..)| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|(r, v, a, b, c)| {
                let s = boost(r, &unit(&v)).unwrap();
                let k = LorentzElem::rotation(&rot3(a, b, c)).unwrap();
                &s * &k
            })
    }

    proptest! {
        #[test]
        fn preserves_form(g in elem_strategy(), u in proptest::collection::vec(-2.0f64..2.0, 4), v in proptest::collection::vec(-2.0f64..2.0, 4)) {
            let u = MinkVec::new(u).unwrap();
            let v = MinkVec::new(v).unwrap();
            let lhs = g.apply(&u).dot(&g.apply(&v));
            let rhs = u.dot(&v);
            // rounding in g u is O(eps cosh^2 r)
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()) * g.matrix()[(0, 0)].powi(2).max(1.0).min(1e3));
        }

        #[test]
        fn polar_reassembles(g in elem_strategy()) {
            let p = polar_decompose(&g).unwrap();
            prop_assert!((p.theta.norm() - 1.0).abs() < 1e-12);
            prop_assert!(frob(&(&p.rot * p.rot.transpose() - DMatrix::<f64>::identity(3, 3))) < 1e-9);
            let back = p.reassemble().unwrap();
            prop_assert!(frob(&(back.matrix() - g.matrix())) <= 1e-9 * frob(g.matrix()).max(1.0));
        }

        #[test]
        fn iwasawa_reassembles_and_links(g in elem_strategy()) {
            let iw = iwasawa_decompose(&g).unwrap();
            prop_assert!(frob(&(&iw.k * iw.k.transpose() - DMatrix::<f64>::identity(3, 3))) < 1e-9);
            let back = iw.reassemble();
            prop_assert!(frob(&(back.matrix() - g.matrix())) <= 1e-9 * frob(g.matrix()).max(1.0));
            let p = polar_decompose(&g).unwrap();
            let h = 0.5 * iw.b.norm_squared();
            let rhs = (1.0 + h) * iw.u.cosh() + h * iw.u.sinh();
            prop_assert!((p.r.cosh() - rhs).abs() <= 1e-8 * p.r.cosh());
            prop_assert!((iw.u - u_from_polar(p.r, p.theta[0])).abs() <= 1e-8 * (1.0 + iw.u.abs()));
        }

        #[test]
        fn exp_log_roundtrip(v in proptest::collection::vec(-0.1f64..0.1, 6)) {
            let x = LorentzAlg::from_coords(3, &v).unwrap();
            let back = log_local(&exp_alg(&x)).unwrap();
            let diff = (&back - &x).frobenius_sq().sqrt();
            prop_assert!(diff < 1e-9);
        }

        #[test]
        fn algebra_condition(v in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let x = LorentzAlg::from_coords(3, &v).unwrap();
            prop_assert!(LorentzAlg::algebra_residual(&x.to_matrix()) < 1e-12);
            let c = x.c();
            prop_assert!((c + c.transpose()).iter().all(|&e| e == 0.0));
        }
    }
}
