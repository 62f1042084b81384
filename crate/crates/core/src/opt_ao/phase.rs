//! Phase subproblem: a quadratic in the reflection vector, itself a
//! quadratic in the unit-modulus phasors, minimized by conjugate-gradient
//! descent on the complex circle manifold.

use nalgebra::DVector;

use crate::channel::MimoChannels;
use crate::channel::ScenarioConfig;

use crate::numerics::{CMat, CVec, C64};
use crate::reflection::ReflectionTerms;

use super::precoder::Auxiliaries;

/// `g(φ) = γ^H T γ − 2Re(γ^H q)` with `γ = z2 ⊙ φ² + z1 ⊙ φ + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseObjective {
    /// `N × N` Hermitian.
    pub t: CMat,
    pub q: CVec,
    pub z2: Vec<C64>,
    pub z1: Vec<C64>,
    pub z: Vec<C64>,
}

/// Elementwise `A ⊙ conj(B)`.
fn hadamard_conj(a: &CMat, b: &CMat) -> CMat {
    a.zip_map(b, |x, y| x * y.conj())
}

/// Quadratic data `(T, q)` in `γ` of the negated rate surrogate for fixed
/// precoder and auxiliaries:
/// `T = σ²F_s·Diag(H_2^H A H_2) + (H_2^H A H_2) ⊙ conj(H_1 B H_1^H)` and
/// `q = diag(H_2^H (YΣV^H − A H_d B) H_1^H)` with `A = YΣY^H`, `B = VV^H`.
pub fn surrogate_quadratic(
    ch: &MimoChannels,
    v: &CMat,
    aux: &Auxiliaries,
    sc: &ScenarioConfig,
) -> (CMat, CVec) {
    let ys = aux.weighted_y();
    let a = &ys * aux.y.adjoint();
    let b = v * v.adjoint();
    let g2 = ch.h2.adjoint() * &a * &ch.h2;
    let g1 = &ch.h1 * &b * ch.h1.adjoint();
    let mut t = hadamard_conj(&g2, &g1);
    let noise = sc.ris_noise();
    for k in 0..t.nrows() {
        t[(k, k)] += g2[(k, k)] * noise;
    }
    let inner = &ys * v.adjoint() - &a * &ch.h_d * &b;
    let left = ch.h2.adjoint() * inner;
    let q = row_dot(&left, &ch.h1);
    (hermitize(t), q)
}

/// `diag(L·R^H)` without forming the product.
fn row_dot(l: &CMat, r: &CMat) -> CVec {
    DVector::from_fn(l.nrows(), |n, _| {
        l.row(n)
            .iter()
            .zip(r.row(n).iter())
            .map(|(x, y)| x * y.conj())
            .sum()
    })
}

fn hermitize(mut t: CMat) -> CMat {
    let n = t.nrows();
    for i in 0..n {
        t[(i, i)] = C64::from(t[(i, i)].re);
        for j in (i + 1)..n {
            let m = 0.5 * (t[(i, j)] + t[(j, i)].conj());
            t[(i, j)] = m;
            t[(j, i)] = m.conj();
        }
    }
    t
}

/// Quadratic data of `−‖H̃‖_F²`: `T = −(H_2^H H_2) ⊙ conj(H_1 H_1^H)`,
/// `q = diag(H_2^H H_d H_1^H)`.
pub fn frobenius_quadratic(ch: &MimoChannels) -> (CMat, CVec) {
    let g2 = ch.h2.adjoint() * &ch.h2;
    let g1 = &ch.h1 * ch.h1.adjoint();
    let t = -hadamard_conj(&g2, &g1);
    let q = row_dot(&(ch.h2.adjoint() * &ch.h_d), &ch.h1);
    (hermitize(t), q)
}

/// Builds the phase objective of the AO iteration for fixed
/// `(V, Y, σ, ᾱ)`.
pub fn build_phase_objective(
    ch: &MimoChannels,
    v: &CMat,
    aux: &Auxiliaries,
    terms: &ReflectionTerms,
    sc: &ScenarioConfig,
) -> PhaseObjective {
    let (t, q) = surrogate_quadratic(ch, v, aux, sc);
    PhaseObjective::new(t, q, terms.clone())
}

impl PhaseObjective {
    pub fn new(t: CMat, q: CVec, terms: ReflectionTerms) -> Self {
        Self {
            t,
            q,
            z2: terms.z2,
            z1: terms.z1,
            z: terms.z,
        }
    }

    /// Objective with a phase-independent amplitude per element:
    /// `γ = amplitude ⊙ φ`.
    pub fn linear(t: CMat, q: CVec, amplitude: &[f64]) -> Self {
        let n = amplitude.len();
        Self {
            t,
            q,
            z2: vec![C64::new(0.0, 0.0); n],
            z1: amplitude.iter().map(|&a| C64::from(a)).collect(),
            z: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn gamma(&self, phasors: &[C64]) -> CVec {
        DVector::from_fn(phasors.len(), |n, _| {
            let p = phasors[n];
            self.z2[n] * p * p + self.z1[n] * p + self.z[n]
        })
    }

    /// Quadratic form in `γ` directly.
    pub fn eval_gamma(&self, gamma: &CVec) -> f64 {
        let tg = &self.t * gamma;
        gamma.dotc(&tg).re - 2.0 * gamma.dotc(&self.q).re
    }

    pub fn eval(&self, phasors: &[C64]) -> f64 {
        self.eval_gamma(&self.gamma(phasors))
    }

    /// Euclidean gradient `2∂g/∂φ* = 2·conj(2 z2 ⊙ φ + z1) ⊙ (Tγ − q)`.
    pub fn gradient(&self, phasors: &[C64]) -> Vec<C64> {
        let gamma = self.gamma(phasors);
        let r = &self.t * &gamma - &self.q;
        phasors
            .iter()
            .enumerate()
            .map(|(n, &p)| 2.0 * (2.0 * self.z2[n] * p + self.z1[n]).conj() * r[n])
            .collect()
    }
}

/// A smooth real cost over unit-modulus vectors.
pub trait ManifoldCost {
    fn cost(&self, x: &[C64]) -> f64;
    /// Euclidean gradient in the `2∂f/∂x*` convention.
    fn egrad(&self, x: &[C64]) -> Vec<C64>;
}

impl ManifoldCost for PhaseObjective {
    fn cost(&self, x: &[C64]) -> f64 {
        self.eval(x)
    }

    fn egrad(&self, x: &[C64]) -> Vec<C64> {
        self.gradient(x)
    }
}

/// Projection onto the tangent space at `x`: `u − Re(u ⊙ x*) ⊙ x`.
pub fn tangent_project(x: &[C64], u: &[C64]) -> Vec<C64> {
    x.iter()
        .zip(u)
        .map(|(&xn, &un)| un - (un * xn.conj()).re * xn)
        .collect()
}

/// Elementwise normalization back onto the circle.
pub fn retract(x: &[C64]) -> Vec<C64> {
    x.iter()
        .map(|&z| {
            let m = z.norm();
            if m > 0.0 {
                z / m
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect()
}

fn inner(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

fn norm(a: &[C64]) -> f64 {
    inner(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmoOptions {
    pub max_iters: usize,
    /// Stop when the Riemannian gradient norm falls below this fraction of
    /// its initial value.
    pub grad_tol: f64,
    pub armijo: f64,
    pub backtrack: f64,
    /// First trial step, in units of the largest per-element move.
    pub initial_step: f64,
    pub max_backtracks: usize,
}

impl Default for RmoOptions {
    fn default() -> Self {
        Self {
            max_iters: 300,
            grad_tol: 1e-6,
            armijo: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmoResult {
    pub phasors: Vec<C64>,
    pub cost: f64,
    pub iterations: usize,
    /// Cost after each accepted step, starting with the initial cost.
    pub trace: Vec<f64>,
}

/// Riemannian conjugate-gradient descent (Polak–Ribière, Armijo
/// backtracking, normalization retraction) from `x0`.
pub fn rmo_phase_opt<C: ManifoldCost + ?Sized>(
    cost: &C,
    x0: &[C64],
    opts: &RmoOptions,
) -> RmoResult {
    if x0.iter().any(|z| (z.norm() - 1.0).abs() > 1e-9) {
        log::warn!("starting point is not unit-modulus; normalizing");
    }
    let n = x0.len();
    let mut x = retract(x0);
    let mut f = cost.cost(&x);
    let mut trace = vec![f];
    let mut g = tangent_project(&x, &cost.egrad(&x));
    let g0 = norm(&g);
    let mut d: Vec<C64> = g.iter().map(|v| -v).collect();
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let gn = norm(&g);
        if gn <= opts.grad_tol * g0 || gn == 0.0 {
            break;
        }
        let mut slope = inner(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let dmax = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut step = opts.initial_step / dmax;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<C64> = x.iter().zip(&d).map(|(a, b)| a + b * step).collect();
            let xt = retract(&trial);
            let ft = cost.cost(&xt);
            if ft <= f + opts.armijo * step * slope {
                accepted = Some((xt, ft));
                break;
            }
            step *= opts.backtrack;
        }
        let Some((xn, fn_)) = accepted else {
            break;
        };
        iterations += 1;
        let gn_new = tangent_project(&xn, &cost.egrad(&xn));
        let g_old = tangent_project(&xn, &g);
        let d_old = tangent_project(&xn, &d);
        let diff: Vec<C64> = gn_new.iter().zip(&g_old).map(|(a, b)| a - b).collect();
        let mut beta = inner(&gn_new, &diff) / (gn * gn);
        if beta < 0.0 || iterations % n.max(1) == 0 {
            beta = 0.0;
        }
        d = gn_new
            .iter()
            .zip(&d_old)
            .map(|(gv, dv)| -gv + dv * beta)
            .collect();
        let done = fn_ >= f;
        x = xn;
        f = fn_;
        g = gn_new;
        trace.push(f);
        if done {
            break;
        }
    }
    RmoResult {
        phasors: x,
        cost: f,
        iterations,
        trace,
    }
}

/// Unit-modulus phasors to phases in `[0, 2π)`.
pub fn phases_of(phasors: &[C64]) -> Vec<f64> {
    phasors
        .iter()
        .map(|z| crate::numerics::wrap_phase(z.arg()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd_gradient;
    use crate::reflection::{FitParams, ReflectionTerms};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_objective(rng: &mut ChaCha8Rng, n: usize) -> PhaseObjective {
        let mut cg = || C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let a = DMatrix::from_fn(n, n, |_, _| cg());
        let t = hermitize(&a * a.adjoint());
        let q = DVector::from_fn(n, |_, _| cg());
        let fit = FitParams {
            delta_min: 0.5,
            delta_max: 1.4,
            beta_min: 1.2,
            beta_max: 6.0,
            theta_rad: rng.random::<f64>() * 2.0 * PI,
        };
        let ab: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        PhaseObjective::new(t, q, ReflectionTerms::new(&vec![fit; n], &ab).unwrap())
    }

    fn random_phasors(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n)
            .map(|_| C64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI))
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..20 {
            let obj = random_objective(&mut rng, 8);
            let x = random_phasors(&mut rng, 8);
            let g = obj.gradient(&x);
            let fd = fd_gradient(|v| obj.eval(v.as_slice()), &CVec::from_vec(x.clone()), 1e-6);
            let err: f64 = g.iter().zip(fd.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let scale: f64 = g.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            assert!(err <= 1e-5 * scale, "{err} vs {scale}");
        }
    }

    #[test]
    fn zero_data_gives_zero_gradient_and_real_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut obj = random_objective(&mut rng, 5);
        obj.t.fill(C64::new(0.0, 0.0));
        obj.q.fill(C64::new(0.0, 0.0));
        let x = random_phasors(&mut rng, 5);
        assert!(obj.gradient(&x).iter().all(|z| z.norm() == 0.0));
        let obj = random_objective(&mut rng, 5);
        let gamma = obj.gamma(&x);
        let im = gamma.dotc(&(&obj.t * &gamma)).im;
        assert!(im.abs() <= 1e-9 * gamma.norm_squared() * obj.t.norm());
    }

    #[test]
    fn projection_is_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_phasors(&mut rng, 6);
        let u: Vec<C64> = (0..6).map(|_| C64::new(rng.random(), rng.random())).collect();
        for (p, xn) in tangent_project(&x, &u).iter().zip(&x) {
            assert!((p * xn.conj()).re.abs() < 1e-14);
        }
    }

    #[test]
    fn descent_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let obj = random_objective(&mut rng, 12);
            let x0 = random_phasors(&mut rng, 12);
            let res = rmo_phase_opt(&obj, &x0, &RmoOptions::default());
            assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
            assert!(res.cost <= obj.eval(&x0));
            assert!(res.phasors.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn single_element_reaches_grid_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let t = CMat::from_element(1, 1, C64::from(rng.random::<f64>()));
            let q = CVec::from_element(1, C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let obj = PhaseObjective::linear(t, q, &[1.0 + rng.random::<f64>()]);
            let res = rmo_phase_opt(&obj, &random_phasors(&mut rng, 1), &RmoOptions::default());
            let best = (0..100_000)
                .map(|k| k as f64 * 2.0 * PI / 100_000.0)
                .map(|a| (a, obj.eval(&[C64::from_polar(1.0, a)])))
                .fold((0.0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc })
                .0;
            let gap = crate::numerics::wrap_angle(res.phasors[0].arg() - best).abs();
            assert!(gap < 1e-4, "gap {gap}");
        }
    }
}
