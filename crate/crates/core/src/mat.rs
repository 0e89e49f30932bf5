//! Small dense real matrices and the numerical kernels the rest of the
//! crate leans on: operator norms via Jacobi sweeps on the Gram matrix,
//! explicit inverses with partial pivoting, and matrix exp/log for
//! exponential coordinates in matrix groups.
//!
//! Dimensions here are tiny (d <= 8), so everything favors robustness
//! over asymptotic speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix is singular or numerically singular (|det| = {0:.3e})")]
    Singular(f64),
    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimMismatch(usize, usize),
    #[error("no principal logarithm: {0}")]
    NoPrincipalLog(String),
    #[error("non-finite entry produced in {0}")]
    NonFinite(&'static str),
}

/// Dense row-major d x d real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub d: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(d: usize) -> Self {
        Mat { d, a: vec![0.0; d * d] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Mat::zeros(d);
        for i in 0..d {
            m.a[i * d + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let d = rows.len();
        let mut a = Vec::with_capacity(d * d);
        for r in rows {
            assert_eq!(r.len(), d, "from_rows requires a square layout");
            a.extend_from_slice(r);
        }
        Mat { d, a }
    }

    pub fn diag(v: &[f64]) -> Self {
        let d = v.len();
        let mut m = Mat::zeros(d);
        for i in 0..d {
            m.a[i * d + i] = v[i];
        }
        m
    }

    /// Rotation by `theta` in SL(2, R) (counterclockwise).
    pub fn rotation2(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat::from_rows(&[&[c, -s], &[s, c]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.d + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.d + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        let d = self.d;
        let mut t = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t.a[j * d + i] = self.a[i * d + j];
            }
        }
        t
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        assert_eq!(self.d, o.d);
        let d = self.d;
        let mut r = Mat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let s = self.a[i * d + k];
                if s == 0.0 {
                    continue;
                }
                for j in 0..d {
                    r.a[i * d + j] += s * o.a[k * d + j];
                }
            }
        }
        r
    }

    pub fn add(&self, o: &Mat) -> Mat {
        assert_eq!(self.d, o.d);
        Mat {
            d: self.d,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        assert_eq!(self.d, o.d);
        Mat {
            d: self.d,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { d: self.d, a: self.a.iter().map(|x| x * s).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let d = self.d;
        let mut a = self.a.clone();
        let mut det = 1.0;
        for col in 0..d {
            let mut piv = col;
            let mut best = a[col * d + col].abs();
            for r in col + 1..d {
                let v = a[r * d + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..d {
                    a.swap(col * d + j, piv * d + j);
                }
                det = -det;
            }
            let p = a[col * d + col];
            det *= p;
            for r in col + 1..d {
                let f = a[r * d + col] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..d {
                    a[r * d + j] -= f * a[col * d + j];
                }
            }
        }
        det
    }

    /// Explicit inverse by Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Result<Mat, MatError> {
        let d = self.d;
        let mut a = self.a.clone();
        let mut inv = Mat::identity(d);
        for col in 0..d {
            let mut piv = col;
            let mut best = a[col * d + col].abs();
            for r in col + 1..d {
                let v = a[r * d + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-300 {
                return Err(MatError::Singular(self.det()));
            }
            if piv != col {
                for j in 0..d {
                    a.swap(col * d + j, piv * d + j);
                    inv.a.swap(col * d + j, piv * d + j);
                }
            }
            let p = a[col * d + col];
            for j in 0..d {
                a[col * d + j] /= p;
                inv.a[col * d + j] /= p;
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let f = a[r * d + col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..d {
                    a[r * d + j] -= f * a[col * d + j];
                    inv.a[r * d + j] -= f * inv.a[col * d + j];
                }
            }
        }
        if !inv.is_finite() {
            return Err(MatError::NonFinite("inverse"));
        }
        Ok(inv)
    }

    /// Largest singular value (operator norm w.r.t. the Euclidean norm).
    pub fn spectral_norm(&self) -> f64 {
        match self.d {
            1 => self.a[0].abs(),
            2 => {
                // Closed form: the Gram eigenvalues solve
                // x^2 - f x + det^2 with f the squared Frobenius norm.
                let f: f64 = self.a.iter().map(|x| x * x).sum();
                let det = self.a[0] * self.a[3] - self.a[1] * self.a[2];
                let disc = (f * f - 4.0 * det * det).max(0.0);
                (0.5 * (f + disc.sqrt())).max(0.0).sqrt()
            }
            _ => {
                let gram = self.transpose().mul(self);
                let eigs = sym_eigenvalues(&gram);
                eigs.iter().fold(0.0f64, |m, &x| m.max(x)).max(0.0).sqrt()
            }
        }
    }

    /// Smallest singular value.
    pub fn min_singular(&self) -> f64 {
        let gram = self.transpose().mul(self);
        let eigs = sym_eigenvalues(&gram);
        eigs.iter().fold(f64::INFINITY, |m, &x| m.min(x)).max(0.0).sqrt()
    }

    /// Operator-norm distance between two matrices.
    pub fn dist(&self, o: &Mat) -> f64 {
        self.sub(o).spectral_norm()
    }

    /// Distance to the identity, `|| self - Id ||`.
    pub fn dist_id(&self) -> f64 {
        self.sub(&Mat::identity(self.d)).spectral_norm()
    }

    /// Matrix exponential by scaling and squaring with a Taylor core.
    pub fn exp(&self) -> Mat {
        let norm = self.spectral_norm();
        let s = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let x = self.scale(1.0 / f64::powi(2.0, s as i32));
        // Taylor series on the scaled matrix; ||x|| <= 0.5 so 24 terms is
        // far below machine epsilon.
        let mut term = Mat::identity(self.d);
        let mut sum = Mat::identity(self.d);
        for k in 1..=24 {
            term = term.mul(&x).scale(1.0 / k as f64);
            sum = sum.add(&term);
        }
        let mut r = sum;
        for _ in 0..s {
            r = r.mul(&r);
        }
        r
    }

    /// Principal square root by the Denman-Beavers iteration.
    pub fn sqrt_db(&self) -> Result<Mat, MatError> {
        let mut y = self.clone();
        let mut z = Mat::identity(self.d);
        for _ in 0..100 {
            let yi = y.inverse().map_err(|_| {
                MatError::NoPrincipalLog("square-root iteration hit a singular iterate".into())
            })?;
            let zi = z.inverse().map_err(|_| {
                MatError::NoPrincipalLog("square-root iteration hit a singular iterate".into())
            })?;
            let y2 = y.add(&zi).scale(0.5);
            let z2 = z.add(&yi).scale(0.5);
            let delta = y2.dist(&y);
            y = y2;
            z = z2;
            if !y.is_finite() || !z.is_finite() {
                return Err(MatError::NoPrincipalLog("square-root iteration diverged".into()));
            }
            if delta < 1e-15 {
                break;
            }
        }
        let resid = y.mul(&y).dist(self);
        let scale = 1.0 + self.spectral_norm();
        if resid > 1e-10 * scale {
            return Err(MatError::NoPrincipalLog(format!(
                "square-root residual {resid:.3e} too large"
            )));
        }
        Ok(y)
    }

    /// Principal matrix logarithm by inverse scaling and squaring with an
    /// atanh-series core. Fails when the spectrum blocks a principal log.
    pub fn log(&self) -> Result<Mat, MatError> {
        if self.det() <= 0.0 {
            return Err(MatError::NoPrincipalLog(format!(
                "determinant {:.3e} <= 0",
                self.det()
            )));
        }
        let mut y = self.clone();
        let mut s = 0u32;
        while y.dist_id() > 0.3 {
            if s >= 60 {
                return Err(MatError::NoPrincipalLog(
                    "inverse scaling did not reach the identity".into(),
                ));
            }
            y = y.sqrt_db()?;
            s += 1;
        }
        // log(Y) = 2 atanh(Z) with Z = (Y - I)(Y + I)^{-1}.
        let id = Mat::identity(self.d);
        let z = y.sub(&id).mul(&y.add(&id).inverse()?);
        let z2 = z.mul(&z);
        let mut term = z.clone();
        let mut sum = z.clone();
        for k in 1..=30 {
            term = term.mul(&z2);
            let contrib = term.scale(1.0 / (2 * k + 1) as f64);
            sum = sum.add(&contrib);
            if contrib.max_abs() < 1e-18 {
                break;
            }
        }
        let mut l = sum.scale(2.0);
        l = l.scale(f64::powi(2.0, s as i32));
        // Certify the result by re-exponentiation.
        let back = l.exp();
        let scale = 1.0 + self.spectral_norm();
        if back.dist(self) > 1e-9 * scale {
            return Err(MatError::NoPrincipalLog(format!(
                "re-exponentiation residual {:.3e} too large",
                back.dist(self)
            )));
        }
        Ok(l)
    }

    /// Moduli of the eigenvalues, supported for d <= 3 (closed forms).
    pub fn eigenvalue_moduli(&self) -> Option<Vec<f64>> {
        match self.d {
            1 => Some(vec![self.a[0].abs()]),
            2 => {
                let tr = self.trace();
                let det = self.det();
                let disc = tr * tr - 4.0 * det;
                if disc >= 0.0 {
                    let r = disc.sqrt();
                    Some(vec![((tr + r) / 2.0).abs(), ((tr - r) / 2.0).abs()])
                } else {
                    let m = det.sqrt();
                    Some(vec![m, m])
                }
            }
            3 => Some(eig_moduli_3(self)),
            _ => None,
        }
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// returned in no particular order.
pub fn sym_eigenvalues(s: &Mat) -> Vec<f64> {
    let d = s.d;
    let mut a = s.a.clone();
    let scale = s.max_abs().max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in p + 1..d {
                off = off.max(a[p * d + q].abs());
            }
        }
        if off < 1e-15 * scale {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq.abs() < 1e-18 * scale {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - sn * akq;
                    a[k * d + q] = sn * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - sn * aqk;
                    a[q * d + k] = sn * apk + c * aqk;
                }
            }
        }
    }
    (0..d).map(|i| a[i * d + i]).collect()
}

fn eig_moduli_3(m: &Mat) -> Vec<f64> {
    // Characteristic polynomial x^3 - c2 x^2 + c1 x - c0.
    let c2 = m.trace();
    let c0 = m.det();
    let mut c1 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            c1 += m.get(i, i) * m.get(j, j) - m.get(i, j) * m.get(j, i);
        }
    }
    // One real root by Newton from a safe bracket, then deflate.
    let p = |x: f64| ((x - c2) * x + c1) * x - c0;
    let bound = 1.0 + c2.abs().max(c1.abs()).max(c0.abs());
    let (mut lo, mut hi) = (-bound, bound);
    // p(-bound) < 0 < p(bound) for a monic cubic with this bound.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    // Deflate: x^2 + bx + c with b = r - c2, c = r*r - c2*r + c1.
    let b = r - c2;
    let c = (r - c2) * r + c1;
    let disc = b * b - 4.0 * c;
    let mut out = vec![r.abs()];
    if disc >= 0.0 {
        let sq = disc.sqrt();
        out.push(((-b + sq) / 2.0).abs());
        out.push(((-b - sq) / 2.0).abs());
    } else {
        let modulus = c.max(0.0).sqrt();
        out.push(modulus);
        out.push(modulus);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN_RATIO: f64 = 1.618033988749894848;

    #[test]
    fn spectral_norm_diagonal_and_identity() {
        assert!((Mat::diag(&[2.0, 0.5]).spectral_norm() - 2.0).abs() < 1e-12);
        assert!((Mat::identity(3).spectral_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_shear_is_golden_ratio() {
        // M = [[1,1],[0,1]]: eigenvalues of M^T M are (3 +- sqrt 5)/2, so
        // the top singular value is the golden ratio.
        let m = Mat::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!((m.spectral_norm() - GOLDEN_RATIO).abs() < 1e-10);
    }

    #[test]
    fn inverse_round_trip() {
        let m = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).dist_id() < 1e-12);
        assert!((m.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_product_inequality_and_orthogonal_equality() {
        let r = Mat::rotation2(0.7);
        let prod = r.spectral_norm() * r.inverse().unwrap().spectral_norm();
        assert!((prod - 1.0).abs() < 1e-10);
        let m = Mat::from_rows(&[&[1.5, 0.2], &[0.0, 1.0 / 1.5]]);
        let prod = m.spectral_norm() * m.inverse().unwrap().spectral_norm();
        assert!(prod >= 1.0);
        assert!(prod > 1.0 + 1e-6);
    }

    #[test]
    fn exp_log_round_trip() {
        let x = Mat::from_rows(&[&[0.1, 0.25], &[-0.05, -0.1]]);
        let g = x.exp();
        let back = g.log().unwrap();
        assert!(back.dist(&x) < 1e-12);
    }

    #[test]
    fn log_rejects_negative_spectrum() {
        let m = Mat::diag(&[-1.0, -1.0]);
        assert!(m.log().is_err());
    }

    #[test]
    fn sqrt_of_diagonal() {
        let m = Mat::diag(&[4.0, 0.25]);
        let s = m.sqrt_db().unwrap();
        assert!(s.dist(&Mat::diag(&[2.0, 0.5])) < 1e-12);
    }

    #[test]
    fn eigenvalue_moduli_2x2() {
        let rot = Mat::rotation2(1.1);
        for m in rot.eigenvalue_moduli().unwrap() {
            assert!((m - 1.0).abs() < 1e-12);
        }
        let d = Mat::diag(&[2.0, 0.5]);
        let mut mods = d.eigenvalue_moduli().unwrap();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mods[0] - 0.5).abs() < 1e-12 && (mods[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalue_moduli_3x3() {
        // Block diag(rotation(0.9), 2.0): moduli {1, 1, 2}.
        let (s, c) = (0.9f64.sin(), 0.9f64.cos());
        let m = Mat::from_rows(&[&[c, -s, 0.0], &[s, c, 0.0], &[0.0, 0.0, 2.0]]);
        let mut mods = m.eigenvalue_moduli().unwrap();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mods[0] - 1.0).abs() < 1e-9);
        assert!((mods[1] - 1.0).abs() < 1e-9);
        assert!((mods[2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_power_returns_to_identity() {
        let r = Mat::rotation2(2.0 * std::f64::consts::PI / 5.0);
        let mut p = Mat::identity(2);
        for _ in 0..5 {
            p = r.mul(&p);
        }
        assert!(p.dist_id() < 1e-12);
    }
}
