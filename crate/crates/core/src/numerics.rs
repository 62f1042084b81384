//! Numerical kernels shared by the circuit model and the optimizers.
//!
//! Everything here is pure. Complex matrices use `nalgebra` dynamic storage;
//! the eigen and singular value decompositions are thin wrappers that sort
//! the spectrum in descending order, which the precoder and SVD-based
//! designs rely on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

const LAMBERT_MAX_ITERS: usize = 50;

/// Principal branch of the Lambert W function.
///
/// Halley iteration from a log-based seed (series expansion near the branch
/// point). Accurate to about machine precision over the real domain.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / std::f64::consts::E;
    if !x.is_finite() || x < branch - 1e-15 {
        return Err(Error::Domain(format!("lambert_w0 undefined for x = {x}")));
    }
    if x <= branch {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = if x < -0.25 {
        // Branch-point series in p = sqrt(2(e x + 1)).
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..LAMBERT_MAX_ITERS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// Bisection on a sign-changing bracket.
///
/// Stops once `|f(x)| <= tol` or the bracket is narrower than `tol`; the
/// returned point always lies inside `[lo, hi]`.
pub fn bisect<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "bisect needs lo < hi and tol > 0 (lo = {lo}, hi = {hi}, tol = {tol})"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 || fa.is_nan() || fb.is_nan() {
        return Err(Error::Bracket { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm.abs() <= tol || (b - a) <= tol {
            return Ok(mid);
        }
        if fa * fm <= 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub vectors: CMat,
    pub values: DVector<f64>,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> CMat {
        let d = CMat::from_diagonal(&self.values.map(|v| C64::new(v, 0.0)));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(a: &CMat) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let sym = hermitian_part(a);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let n = a.nrows();
    let mut vectors = CMat::zeros(n, n);
    let mut values = DVector::zeros(n);
    for (k, &i) in order.iter().enumerate() {
        values[k] = eig.eigenvalues[i];
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(HermitianEig { vectors, values })
}

/// Thin singular value decomposition `A = U diag(s) V^H`, `s` descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: CMat,
    pub singular_values: DVector<f64>,
    pub v: CMat,
}

impl SvdResult {
    pub fn reconstruct(&self) -> CMat {
        let s = CMat::from_diagonal(&self.singular_values.map(|v| C64::new(v, 0.0)));
        &self.u * s * self.v.adjoint()
    }
}

pub fn svd(a: &CMat) -> SvdResult {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return SvdResult {
            u: CMat::zeros(a.nrows(), 0),
            singular_values: DVector::zeros(0),
            v: CMat::zeros(a.ncols(), 0),
        };
    }
    let dec = nalgebra::linalg::SVD::new(a.clone(), true, true);
    let u = dec.u.expect("left singular vectors requested");
    let v_t = dec.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let mut uu = CMat::zeros(a.nrows(), k);
    let mut vv = CMat::zeros(a.ncols(), k);
    let mut s = DVector::zeros(k);
    for (col, &i) in order.iter().enumerate() {
        s[col] = dec.singular_values[i];
        uu.set_column(col, &u.column(i));
        vv.set_column(col, &v_t.row(i).adjoint());
    }
    SvdResult {
        u: uu,
        singular_values: s,
        v: vv,
    }
}

/// Central-difference gradient of a real field over a complex vector.
///
/// Uses the `2 ∂f/∂x*` convention: entry `n` is `∂f/∂Re x_n + j ∂f/∂Im x_n`.
pub fn fd_gradient<F>(f: F, x: &CVec, h: f64) -> CVec
where
    F: Fn(&CVec) -> f64,
{
    let mut grad = CVec::zeros(x.len());
    let mut probe = x.clone();
    for n in 0..x.len() {
        let orig = probe[n];
        probe[n] = orig + C64::new(h, 0.0);
        let fp = f(&probe);
        probe[n] = orig - C64::new(h, 0.0);
        let fm = f(&probe);
        let re = (fp - fm) / (2.0 * h);
        probe[n] = orig + C64::new(0.0, h);
        let fp = f(&probe);
        probe[n] = orig - C64::new(0.0, h);
        let fm = f(&probe);
        let im = (fp - fm) / (2.0 * h);
        probe[n] = orig;
        grad[n] = C64::new(re, im);
    }
    grad
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Solves `F X = B` for Hermitian positive definite `F`.
///
/// Falls back to a ridge of `1e-12 · tr(F)/n` when Cholesky fails or the
/// matrix is numerically singular.
pub fn solve_hpd(f: &CMat, b: &CMat) -> CMat {
    let n = f.nrows();
    let sym = hermitian_part(f);
    if let Some(chol) = sym.clone().cholesky() {
        let diag = chol.l_dirty().diagonal();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for d in diag.iter() {
            lo = lo.min(d.re.abs());
            hi = hi.max(d.re.abs());
        }
        if lo > 0.0 && (hi / lo).powi(2) < 1e12 {
            return chol.solve(b);
        }
    }
    let trace: f64 = (0..n).map(|i| sym[(i, i)].re).sum::<f64>().abs();
    let ridge = 1e-12 * (trace / n.max(1) as f64).max(f64::MIN_POSITIVE);
    let mut reg = sym;
    for i in 0..n {
        reg[(i, i)] += C64::new(ridge, 0.0);
    }
    match reg.clone().cholesky() {
        Some(chol) => chol.solve(b),
        None => reg
            .lu()
            .solve(b)
            .unwrap_or_else(|| CMat::zeros(b.nrows(), b.ncols())),
    }
}

/// Largest eigenvalue of a symmetric PSD real matrix by power iteration.
pub fn power_iteration_sym(a: &DMatrix<f64>, iters: usize) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.01 * i as f64);
    x /= x.norm();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let y = a * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = x.dot(&y);
        x = y / norm;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Rayleigh quotients underestimate; pad slightly so 1/L stays a safe step.
    lambda.max(0.0) * 1.01
}

/// Frobenius norm of `a - b` relative to `b`.
pub fn rel_frobenius(a: &CMat, b: &CMat) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let y = x.rem_euclid(two_pi);
    if y >= two_pi {
        0.0
    } else {
        y
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn random_cmat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn lambert_known_values() {
        assert_abs_diff_eq!(lambert_w0(0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lambert_w0(E).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lambert_w0(-1.0 / E).unwrap(), -1.0, epsilon = 1e-12);
        assert!(lambert_w0(-0.5).is_err());
    }

    #[test]
    fn lambert_roundtrip_grid() {
        for k in 0..100 {
            let w = -1.0 + 6.0 * k as f64 / 99.0;
            let x = w * w.exp();
            let got = lambert_w0(x).unwrap();
            assert!((got - w).abs() < 1e-10, "w = {w}, got {got}");
        }
    }

    #[test]
    fn lambert_residual_is_tiny() {
        for &x in &[-0.3, -0.1, 1e-8, 0.5, 2.0, 10.0, 1e3, 1e8] {
            let w = lambert_w0(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-12 * (1.0 + x.abs()), "x = {x}");
        }
    }

    #[test]
    fn bisect_examples() {
        let r = bisect(|x| x - 2.0, 0.0, 10.0, 1e-10).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-9);
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-10).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-9);
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn eig_identity_and_diag() {
        let e = hermitian_eig(&CMat::identity(3, 3)).unwrap();
        for v in e.values.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        let d = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(3.0, 0.0)]));
        let e = hermitian_eig(&d).unwrap();
        assert_abs_diff_eq!(e.values[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[(0, 1)].norm(), 1.0, epsilon = 1e-12);
        assert!(hermitian_eig(&CMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn eig_and_svd_reconstruct_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1usize, 4, 17, 64] {
            let a = random_cmat(&mut rng, n, n);
            let h = hermitian_part(&a);
            let e = hermitian_eig(&h).unwrap();
            assert!(rel_frobenius(&e.reconstruct(), &h) < 1e-10);
            let gram = e.vectors.adjoint() * &e.vectors;
            assert!(rel_frobenius(&gram, &CMat::identity(n, n)) < 1e-10);
            for w in e.values.as_slice().windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
        for &(r, c) in &[(4usize, 6usize), (6, 4), (64, 64), (3, 1)] {
            let a = random_cmat(&mut rng, r, c);
            let s = svd(&a);
            assert!(rel_frobenius(&s.reconstruct(), &a) < 1e-10);
            for w in s.singular_values.as_slice().windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn svd_rank_one() {
        let u = CVec::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let v = CVec::from_vec(vec![
            C64::new(0.0, 1.0) / 3f64.sqrt(),
            C64::new(1.0, 0.0) / 3f64.sqrt(),
            C64::new(1.0, 0.0) / 3f64.sqrt(),
        ]);
        let a = &u * v.adjoint();
        let s = svd(&a);
        assert_abs_diff_eq!(s.singular_values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.singular_values[1], 0.0, epsilon = 1e-12);
        let s = svd(&CMat::identity(3, 3));
        assert!(s.singular_values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn fd_gradient_conventions() {
        let x0 = CVec::zeros(3);
        let g = fd_gradient(|x| x.norm_squared(), &x0, 1e-6);
        assert!(g.norm() < 1e-9);

        let a = CVec::from_vec(vec![C64::new(1.0, -2.0), C64::new(0.5, 0.25)]);
        let x = CVec::from_vec(vec![C64::new(0.3, 0.1), C64::new(-0.7, 0.4)]);
        let g = fd_gradient(|x| a.dotc(x).re, &x, 1e-6);
        assert!((g - &a).norm() < 1e-8);
    }

    #[test]
    fn solve_hpd_matches_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_cmat(&mut rng, 5, 5);
        let f = &a * a.adjoint() + CMat::identity(5, 5);
        let b = random_cmat(&mut rng, 5, 2);
        let x = solve_hpd(&f, &b);
        assert!(rel_frobenius(&(&f * &x), &b) < 1e-12);
    }

    #[test]
    fn angle_wrapping() {
        use std::f64::consts::PI;
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_phase(-0.5 * PI), 1.5 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(watts_to_dbm(dbm_to_watts(-12.75)), -12.75, epsilon = 1e-12);
    }
}
