//! Small dense helpers the nalgebra no_std build does not ship.

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

pub(crate) fn frob(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Matrix exponential by scaling and squaring of a degree-18 Taylor polynomial.
pub(crate) fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let mut s = 0u32;
    if norm > 0.25 {
        s = (norm / 0.25).log2().ceil() as u32;
    }
    let a = m / 2f64.powi(s as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Principal logarithm of a matrix close to the identity, via the series of
/// 2 artanh((A - I)(A + I)^-1).
pub(crate) fn logm_near_identity(m: &DMatrix<f64>, radius: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let dist = frob(&(m - &id));
    if !(dist < radius) {
        return Err(Error::OutsideLogNeighborhood(dist));
    }
    let inv = (m + &id)
        .try_inverse()
        .ok_or(Error::Degenerate(0.0))?;
    let z = (m - &id) * inv;
    let z2 = &z * &z;
    let mut pow = z.clone();
    let mut sum = z;
    for k in 1..60 {
        pow = &pow * &z2;
        let term = &pow / (2 * k + 1) as f64;
        let small = frob(&term) < 1e-18 * (1.0 + frob(&sum));
        sum += term;
        if small {
            break;
        }
    }
    Ok(sum * 2.0)
}

/// Principal logarithm of a rotation via repeated Denman-Beavers square
/// roots. Returns None when a square root fails to converge (eigenvalue -1).
pub(crate) fn rotation_log(r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = r.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut a = r.clone();
    let mut halvings = 0;
    while frob(&(&a - &id)) >= 0.25 {
        if halvings > 40 {
            return None;
        }
        let mut y = a.clone();
        let mut z = id.clone();
        let mut ok = false;
        for _ in 0..100 {
            let yi = y.clone().try_inverse()?;
            let zi = z.clone().try_inverse()?;
            let ny = (&y + &zi) * 0.5;
            let nz = (&z + &yi) * 0.5;
            let step = frob(&(&ny - &y));
            y = ny;
            z = nz;
            if step < 1e-15 * (1.0 + frob(&y)) {
                ok = true;
                break;
            }
        }
        if !ok || !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        a = y;
        halvings += 1;
    }
    let l = logm_near_identity(&a, 0.5).ok()?;
    Some(l * 2f64.powi(halvings))
}

/// Euclidean Gram-Schmidt on the rows of a square matrix.
pub(crate) fn orthonormalize_rows(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let dot = m.row(i).dot(&m.row(j));
            for c in 0..n {
                let v = m[(j, c)];
                m[(i, c)] -= dot * v;
            }
        }
        let norm = m.row(i).norm();
        m.row_mut(i).scale_mut(1.0 / norm);
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub(crate) fn new(x: f64) -> Self {
        Self { sum: x, comp: 0.0 }
    }

    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Ordinary least squares slope and intercept.
pub(crate) fn ols(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - icept - slope * a;
            r * r
        })
        .sum();
    Some((slope, icept, (rss / n as f64).sqrt()))
}
