//! Minkowski space R^{1,d}: vectors, the Lorentz form and the light-cone
//! splitting induced by the boost generator V_1.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use nalgebra::DVector;

use crate::{Error, Result};

/// Relative tolerance on q(xi)/|xi|^2 below which a vector counts as lightlike.
pub const LIGHTLIKE_TOL: f64 = 1e-12;

/// A vector of R^{1,d}; index 0 is the time component.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkVec {
    coords: DVector<f64>,
}

impl MinkVec {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::DimensionTooSmall(coords.len().saturating_sub(1)));
        }
        Ok(Self { coords })
    }

    pub(crate) fn from_vector_unchecked(coords: DVector<f64>) -> Self {
        debug_assert!(coords.len() >= 3);
        Self { coords }
    }

    pub fn zeros(d: usize) -> Self {
        Self { coords: DVector::zeros(d + 1) }
    }

    /// Basis vector e_i, i in 0..=d.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = Self::zeros(d);
        v.coords[i] = 1.0;
        v
    }

    /// The lightlike vector e_0 - e_1 spanning the -1 eigenspace of V_1.
    pub fn light_minus(d: usize) -> Self {
        let mut v = Self::zeros(d);
        v.coords[0] = 1.0;
        v.coords[1] = -1.0;
        v
    }

    /// The lightlike vector e_0 + e_1 spanning the +1 eigenspace of V_1.
    pub fn light_plus(d: usize) -> Self {
        let mut v = Self::zeros(d);
        v.coords[0] = 1.0;
        v.coords[1] = 1.0;
        v
    }

    /// Space dimension d.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.coords
    }

    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    pub fn space(&self) -> &[f64] {
        &self.coords.as_slice()[1..]
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    /// q(self, other) without the dimension check.
    pub fn dot(&self, other: &Self) -> f64 {
        form(self.as_slice(), other.as_slice())
    }

    /// q(self) = q(self, self).
    pub fn square(&self) -> f64 {
        self.dot(self)
    }

    pub fn euclid_norm_sq(&self) -> f64 {
        self.coords.norm_squared()
    }

    /// Euclidean norm; its square equals 2 q(xi, e_0)^2 - q(xi).
    pub fn euclid_norm(&self) -> f64 {
        self.coords.norm()
    }
}

impl Add for &MinkVec {
    type Output = MinkVec;
    fn add(self, rhs: &MinkVec) -> MinkVec {
        MinkVec { coords: &self.coords + &rhs.coords }
    }
}

impl Sub for &MinkVec {
    type Output = MinkVec;
    fn sub(self, rhs: &MinkVec) -> MinkVec {
        MinkVec { coords: &self.coords - &rhs.coords }
    }
}

impl Mul<f64> for &MinkVec {
    type Output = MinkVec;
    fn mul(self, rhs: f64) -> MinkVec {
        MinkVec { coords: &self.coords * rhs }
    }
}

impl Neg for &MinkVec {
    type Output = MinkVec;
    fn neg(self) -> MinkVec {
        MinkVec { coords: -&self.coords }
    }
}

pub(crate) fn form(u: &[f64], v: &[f64]) -> f64 {
    let mut s = u[0] * v[0];
    for i in 1..u.len() {
        s -= u[i] * v[i];
    }
    s
}

/// The Lorentz form u^0 v^0 - sum_i u^i v^i.
pub fn q(u: &MinkVec, v: &MinkVec) -> Result<f64> {
    if u.coords.len() != v.coords.len() {
        return Err(Error::DimensionMismatch { expected: u.coords.len(), found: v.coords.len() });
    }
    Ok(u.dot(v))
}

/// Spectral projections of a vector on the eigenspaces of V_1.
#[derive(Debug, Clone, PartialEq)]
pub struct LightEigenSplit {
    /// Component along e_0 - e_1 (eigenvalue -1).
    pub minus: MinkVec,
    /// Component in span(e_2, ..., e_d) (eigenvalue 0).
    pub zero: MinkVec,
    /// Component along e_0 + e_1 (eigenvalue +1).
    pub plus: MinkVec,
}

impl LightEigenSplit {
    /// Scalar c with minus = c (e_0 - e_1).
    pub fn minus_coeff(&self) -> f64 {
        self.minus.coords[0]
    }

    /// Scalar c with plus = c (e_0 + e_1).
    pub fn plus_coeff(&self) -> f64 {
        self.plus.coords[0]
    }

    pub fn sum(&self) -> MinkVec {
        &(&self.minus + &self.zero) + &self.plus
    }
}

pub fn light_split(xi: &MinkVec) -> LightEigenSplit {
    let d = xi.dim();
    let c = xi.as_slice();
    // q(xi, e0 + e1) = xi0 - xi1 and q(xi, e0 - e1) = xi0 + xi1.
    let cm = 0.5 * (c[0] - c[1]);
    let cp = 0.5 * (c[0] + c[1]);
    let mut zero = MinkVec::zeros(d);
    zero.coords.as_mut_slice()[2..].copy_from_slice(&c[2..]);
    LightEigenSplit {
        minus: &MinkVec::light_minus(d) * cm,
        zero,
        plus: &MinkVec::light_plus(d) * cp,
    }
}

/// Apply the matrix V_1 = e_0 e_1^T + e_1 e_0^T.
pub fn apply_v1(xi: &MinkVec) -> MinkVec {
    let mut out = MinkVec::zeros(xi.dim());
    out.coords[0] = xi.coords[1];
    out.coords[1] = xi.coords[0];
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalType {
    Timelike,
    Lightlike,
    Spacelike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Future,
    Past,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub causal: CausalType,
    pub orientation: Orientation,
}

pub fn classify(xi: &MinkVec) -> Classification {
    let n2 = xi.euclid_norm_sq();
    let qq = xi.square();
    let causal = if n2 == 0.0 || qq.abs() <= LIGHTLIKE_TOL * n2 {
        CausalType::Lightlike
    } else if qq > 0.0 {
        CausalType::Timelike
    } else {
        CausalType::Spacelike
    };
    let orientation = match causal {
        CausalType::Spacelike => Orientation::Neither,
        _ if xi.time() > 0.0 => Orientation::Future,
        _ if xi.time() < 0.0 => Orientation::Past,
        _ => Orientation::Neither,
    };
    Classification { causal, orientation }
}
