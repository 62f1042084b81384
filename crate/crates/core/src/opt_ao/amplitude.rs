//! Amplitude subproblem: a convex QP over a box intersected with one
//! halfspace (the linearized surface power budget), and the loop that maps
//! its solution to circuits and tightens the budget until the true power
//! draw fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{power_iteration_sym, C64};
use crate::reflection::RISDesign;
use crate::surface::{PowerLine, Surface};

use super::phase::PhaseObjective;

/// `min αᵀQα − 2cᵀα  s.t.  l ≤ α ≤ u,  sᵀα ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxHalfspaceQp {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub slope: Vec<f64>,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub max_iters: usize,
    /// Target on the projected-gradient residual (amplitude units).
    pub kkt_tol: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            kkt_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpResult {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Objective at each iterate kept by the monotone scheme.
    pub trace: Vec<f64>,
}

/// Euclidean projection onto `{l ≤ x ≤ u, sᵀx ≤ b}` with `s ≥ 0`.
///
/// If the clipped point violates the halfspace the multiplier `μ` of
/// `sᵀ clip(x − μs) = b` is found by bisection.
pub fn project_box_halfspace(x: &[f64], l: &[f64], u: &[f64], s: &[f64], b: f64) -> Vec<f64> {
    let clip = |mu: f64| -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(n, &v)| (v - mu * s[n]).clamp(l[n], u[n]))
            .collect()
    };
    let dot = |v: &[f64]| -> f64 { v.iter().zip(s).map(|(a, b)| a * b).sum() };
    let base = clip(0.0);
    if dot(&base) <= b {
        return base;
    }
    // Every coordinate with s > 0 sits on its lower bound beyond this.
    let hi = x
        .iter()
        .enumerate()
        .filter(|(n, _)| s[*n] > 0.0)
        .map(|(n, &v)| (v - l[n]) / s[n])
        .fold(0.0, f64::max);
    let mut hi = hi;
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dot(&clip(mid)) > b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip(hi)
}

impl BoxHalfspaceQp {
    /// QP in the amplitudes at fixed phases: `γ = diag(e^{jφ})·α` turns
    /// `γ^H T γ − 2Re(γ^H q)` into `Q = Re(Φ^H T Φ)`, `c = Re(Φ^H q)`.
    pub fn from_objective(
        obj: &PhaseObjective,
        phasors: &[C64],
        lines: &[PowerLine],
        budget: f64,
    ) -> Self {
        let n = phasors.len();
        let q = DMatrix::from_fn(n, n, |i, j| {
            (phasors[i].conj() * obj.t[(i, j)] * phasors[j]).re
        });
        let q = 0.5 * (&q + q.transpose());
        let c = DVector::from_fn(n, |i, _| (phasors[i].conj() * obj.q[i]).re);
        let lower: Vec<f64> = lines.iter().map(|l| l.alpha_min).collect();
        let upper: Vec<f64> = lines.iter().map(|l| l.alpha_max).collect();
        let slope: Vec<f64> = lines.iter().map(|l| l.slope).collect();
        let fixed: f64 = lines.iter().map(|l| l.p_min - l.slope * l.alpha_min).sum();
        Self {
            q,
            c,
            lower,
            upper,
            slope,
            bound: budget - fixed,
        }
    }

    pub fn objective(&self, a: &[f64]) -> f64 {
        let v = DVector::from_column_slice(a);
        v.dot(&(&self.q * &v)) - 2.0 * self.c.dot(&v)
    }

    fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.q * a - &self.c)
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        project_box_halfspace(x, &self.lower, &self.upper, &self.slope, self.bound)
    }

    /// Least budget usage over the box, `sᵀl`.
    pub fn min_usage(&self) -> f64 {
        self.lower.iter().zip(&self.slope).map(|(a, b)| a * b).sum()
    }

    /// Projected-gradient residual `‖α − P(α − ∇/L)‖∞`.
    pub fn kkt_residual(&self, a: &[f64], lip: f64) -> f64 {
        let v = DVector::from_column_slice(a);
        let g = self.gradient(&v);
        let step: Vec<f64> = a.iter().zip(g.iter()).map(|(x, d)| x - d / lip).collect();
        self.project(&step)
            .iter()
            .zip(a)
            .map(|(p, x)| (p - x).abs())
            .fold(0.0, f64::max)
    }

    /// Monotone accelerated projected gradient with step `1/L`,
    /// `L = 2‖Q‖₂`.
    pub fn solve(&self, opts: &QpOptions) -> Result<QpResult> {
        let n = self.c.len();
        let tol = 1e-12 * self.bound.abs().max(1e-300);
        if self.min_usage() > self.bound + tol {
            return Err(Error::Infeasible(format!(
                "amplitude lower bounds need {:e} of a remaining budget {:e}",
                self.min_usage(),
                self.bound
            )));
        }
        let span = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let lip = (2.0 * power_iteration_sym(&self.q, 100))
            .max(1e-12 * self.c.amax() / span)
            .max(f64::MIN_POSITIVE);
        let start: Vec<f64> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect();
        let mut x = self.project(&start);
        let mut fx = self.objective(&x);
        let mut trace = vec![fx];
        let mut y = DVector::from_column_slice(&x);
        let mut t = 1.0f64;
        let mut iterations = 0;
        let mut res = self.kkt_residual(&x, lip);
        while iterations < opts.max_iters && res > opts.kkt_tol {
            let g = self.gradient(&y);
            let step: Vec<f64> = y.iter().zip(g.iter()).map(|(a, d)| a - d / lip).collect();
            let z = self.project(&step);
            let fz = self.objective(&z);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let x_prev = x.clone();
            if fz <= fx {
                x = z.clone();
                fx = fz;
            }
            let mut ny = DVector::from_column_slice(&x);
            for k in 0..n {
                ny[k] += (t / t_next) * (z[k] - x[k]) + ((t - 1.0) / t_next) * (x[k] - x_prev[k]);
            }
            y = ny;
            t = t_next;
            iterations += 1;
            trace.push(fx);
            res = self.kkt_residual(&x, lip);
        }
        Ok(QpResult {
            alpha: x,
            objective: fx,
            iterations,
            kkt_residual: res,
            trace,
        })
    }
}

/// Solves the amplitude QP of the phase objective at fixed phases with the
/// linearized budget `Σ y_n(α_n) ≤ budget`.
pub fn amplitude_qp(
    obj: &PhaseObjective,
    phasors: &[C64],
    lines: &[PowerLine],
    budget: f64,
    opts: &QpOptions,
) -> Result<QpResult> {
    let qp = BoxHalfspaceQp::from_objective(obj, phasors, lines, budget);
    let need: f64 = lines.iter().map(|l| l.p_min).sum();
    if need > budget * (1.0 + 1e-12) {
        return Err(Error::InfeasibleBudget {
            required: need,
            budget,
        });
    }
    qp.solve(opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairOutcome {
    pub design: RISDesign,
    pub alpha: Vec<f64>,
    /// Number of amplitude solves (including a final minimum-draw pass).
    pub passes: usize,
    /// Working budget of the last pass.
    pub budget: f64,
}

/// Maps amplitudes to circuits and, while the true draw exceeds `p_ris`,
/// lowers the working budget by the overshoot and re-solves.
///
/// `solve(budget)` returns amplitudes whose linearized draw fits `budget`.
/// After [`SECANT_SOLVES`] solves, or when the working budget falls below
/// the linearized minimum, the last amplitudes are shrunk toward the lower
/// bounds until the true draw fits.
pub const SECANT_SOLVES: usize = 3;

pub fn power_repair_loop<F>(
    surface: &Surface,
    phi: &[f64],
    lines: &[PowerLine],
    p_ris: f64,
    max_passes: usize,
    mut solve: F,
) -> Result<RepairOutcome>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let floor_need = surface.min_power()?;
    if floor_need > p_ris {
        return Err(Error::InfeasibleBudget {
            required: floor_need,
            budget: p_ris,
        });
    }
    let line_need: f64 = lines.iter().map(|l| l.p_min).sum();
    let lower: Vec<f64> = lines.iter().map(|l| l.alpha_min).collect();
    let mut budget = p_ris;
    let mut last: Option<(f64, f64)> = None;
    let mut prev_alpha: Option<Vec<f64>> = None;
    for pass in 1..=max_passes {
        if budget < line_need || pass == max_passes || pass > SECANT_SOLVES {
            let base = prev_alpha.as_deref().unwrap_or(&lower);
            let (design, alpha) = shrink_to_budget(surface, phi, &lower, base, p_ris)?;
            return Ok(RepairOutcome {
                design,
                alpha,
                passes: pass,
                budget,
            });
        }
        let alpha = solve(budget)?;
        let design = surface.finalize(phi, &alpha)?;
        let used = design.power(&surface.params)?;
        if used <= p_ris {
            return Ok(RepairOutcome {
                design,
                alpha,
                passes: pass,
                budget,
            });
        }
        let modeled: f64 = alpha.iter().zip(lines).map(|(a, l)| l.eval(*a)).sum();
        // Corrections follow the secant of (modeled, true) draws, starting
        // from the all-minimum point, and aim just inside the budget. A
        // correction that does not lower the true draw sends the loop to the
        // shrink pass.
        let next = match last {
            None if modeled > line_need && used > floor_need => {
                let slope = (used - floor_need) / (modeled - line_need);
                modeled - (used - p_ris * (1.0 - 1e-6)) / slope
            }
            Some((m0, u0)) => {
                let slope = (used - u0) / (modeled - m0);
                if !(slope > 0.0 && slope.is_finite()) || used >= u0 {
                    -f64::INFINITY
                } else {
                    modeled - (used - p_ris * (1.0 - 1e-6)) / slope
                }
            }
            None => modeled - (used - p_ris),
        };
        last = Some((modeled, used));
        budget = next.min(budget);
        prev_alpha = Some(alpha);
    }
    Err(Error::PowerRepair(max_passes))
}

/// Moves amplitudes from `alpha` toward `lower` by the smallest common
/// fraction that brings the true draw within `p_ris`. At the lower end the
/// active cells are held at their least-power resistance.
fn shrink_to_budget(
    surface: &Surface,
    phi: &[f64],
    lower: &[f64],
    alpha: &[f64],
    p_ris: f64,
) -> Result<(RISDesign, Vec<f64>)> {
    let at = |s: f64| -> Vec<f64> {
        lower
            .iter()
            .zip(alpha)
            .map(|(l, a)| l + s * (a - l))
            .collect()
    };
    let floor = surface.finalize_with(phi, lower, Some(surface.floor_resistance()))?;
    let mut best = (floor, lower.to_vec());
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let a = at(mid);
        let d = surface.finalize(phi, &a)?;
        if d.power(&surface.params)? <= p_ris {
            lo = mid;
            best = (d, a);
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_qp(rng: &mut ChaCha8Rng, n: usize) -> BoxHalfspaceQp {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let q = &a * a.transpose() + DMatrix::identity(n, n) * 0.05;
        let c = DVector::from_fn(n, |_, _| 2.0 * rng.random::<f64>());
        let lower: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + 1.0 + 3.0 * rng.random::<f64>()).collect();
        let slope: Vec<f64> = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();
        let lo: f64 = lower.iter().zip(&slope).map(|(a, b)| a * b).sum();
        let hi: f64 = upper.iter().zip(&slope).map(|(a, b)| a * b).sum();
        BoxHalfspaceQp {
            q,
            c,
            lower,
            upper,
            slope,
            bound: lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    #[test]
    fn projection_respects_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let qp = random_qp(&mut rng, 6);
            let x: Vec<f64> = (0..6).map(|_| 10.0 * rng.random::<f64>() - 2.0).collect();
            let p = qp.project(&x);
            let used: f64 = p.iter().zip(&qp.slope).map(|(a, b)| a * b).sum();
            assert!(used <= qp.bound * (1.0 + 1e-12));
            for k in 0..6 {
                assert!(p[k] >= qp.lower[k] && p[k] <= qp.upper[k]);
            }
        }
    }

    #[test]
    fn two_variables_match_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let qp = random_qp(&mut rng, 2);
            let res = qp.solve(&QpOptions::default()).unwrap();
            assert!(res.kkt_residual <= 1e-6);
            assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
            let steps = 1500;
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                for j in 0..=steps {
                    let a = [
                        qp.lower[0] + (qp.upper[0] - qp.lower[0]) * i as f64 / steps as f64,
                        qp.lower[1] + (qp.upper[1] - qp.lower[1]) * j as f64 / steps as f64,
                    ];
                    if a[0] * qp.slope[0] + a[1] * qp.slope[1] > qp.bound {
                        continue;
                    }
                    let f = qp.objective(&a);
                    best = best.min(f);
                }
            }
            assert!(res.objective <= best + 1e-9);
            assert!((res.objective - best).abs() <= 1e-3 * best.abs().max(1.0));
        }
    }

    #[test]
    fn trivial_cases() {
        let n = 3;
        let lower = vec![1.0; n];
        let upper = vec![4.0; n];
        let slope = vec![0.5; n];
        let qp = BoxHalfspaceQp {
            q: DMatrix::zeros(n, n),
            c: DVector::from_element(n, 1.0),
            lower: lower.clone(),
            upper: upper.clone(),
            slope: slope.clone(),
            bound: 100.0,
        };
        let res = qp.solve(&QpOptions::default()).unwrap();
        for a in &res.alpha {
            assert_relative_eq!(*a, 4.0, epsilon = 1e-9);
        }
        let tight = BoxHalfspaceQp {
            bound: 1.5,
            ..qp.clone()
        };
        let res = tight.solve(&QpOptions::default()).unwrap();
        for a in &res.alpha {
            assert_relative_eq!(*a, 1.0, epsilon = 1e-9);
        }
        let infeasible = BoxHalfspaceQp { bound: 1.0, ..qp };
        assert!(infeasible.solve(&QpOptions::default()).is_err());
    }
}
