//! Closed-form eigenvalues of small symmetric matrices.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::so3::Mat3;

/// Accepted max-abs asymmetry `|m − mᵀ|`.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Ascending eigenvalues of a symmetric 3×3 matrix (trigonometric solution
/// of the characteristic cubic).
pub fn eig_sym(m: &Mat3) -> Result<[f64; 3]> {
    let asym = (m - m.transpose()).amax();
    if !(asym <= SYMMETRY_TOL) {
        return Err(Error::NotSymmetric(asym));
    }
    let m = (m + m.transpose()) * 0.5;
    let p1 = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
    if p1 == 0.0 {
        let mut d = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
        d.sort_by(f64::total_cmp);
        return Ok(d);
    }
    let q = m.trace() / 3.0;
    let p2 = (m[(0, 0)] - q).powi(2) + (m[(1, 1)] - q).powi(2) + (m[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (m - Mat3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * q - hi - lo;
    let mut ev = [lo, mid, hi];
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Ascending eigenvalues of a symmetric 2×2 matrix.
pub fn eig_sym2(m: &Matrix2<f64>) -> Result<[f64; 2]> {
    let asym = (m[(0, 1)] - m[(1, 0)]).abs();
    if !(asym <= SYMMETRY_TOL) {
        return Err(Error::NotSymmetric(asym));
    }
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let rad = half_diff.hypot(off);
    Ok([mean - rad, mean + rad])
}

/// Positive definiteness via leading principal minors.
pub fn is_positive_definite3(m: &Mat3) -> bool {
    let d1 = m[(0, 0)];
    let d2 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    d1 > 0.0 && d2 > 0.0 && m.determinant() > 0.0
}

/// Positive definiteness via leading principal minors.
pub fn is_positive_definite2(m: &Matrix2<f64>) -> bool {
    m[(0, 0)] > 0.0 && m.determinant() > 0.0
}
