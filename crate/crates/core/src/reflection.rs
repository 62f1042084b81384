//! Cosine approximation of the phase-dependent amplitude band and assembly
//! of the surface's reflection vector.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::circuit::{
    exact_amplitude_bounds, passive_amplitude, CellState, CircuitParams, M_BAND,
};
use crate::error::{Error, Result};
use crate::numerics::{wrap_phase, C64};

/// Default phase-grid resolution of the fit (0.1°).
pub const DEFAULT_GRID: usize = 3600;

/// Fitted cosine model of one element class.
///
/// `alpha_min(φ) = (δmax − δmin)/2·(cos(φ + θ) + 1) + δmin`, and likewise for
/// `alpha_max` with the β pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub delta_min: f64,
    pub delta_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub theta_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementClass {
    Active,
    Passive,
}

/// Exact amplitude band sampled on a uniform phase grid. Phases that no
/// positive capacitance can realize hold `NaN`.
#[derive(Debug, Clone)]
pub struct AmplitudeCurves {
    pub phi: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AmplitudeCurves {
    pub fn sample(p: &CircuitParams, class: ElementClass, grid_size: usize) -> Result<Self> {
        if grid_size < 360 {
            return Err(Error::Domain(format!(
                "grid size must be at least 360, got {grid_size}"
            )));
        }
        let step = 2.0 * PI / grid_size as f64;
        let mut curves = Self {
            phi: Vec::with_capacity(grid_size),
            lower: Vec::with_capacity(grid_size),
            upper: Vec::with_capacity(grid_size),
        };
        for k in 0..grid_size {
            let phi = k as f64 * step;
            let (lo, hi) = match class {
                ElementClass::Active => match exact_amplitude_bounds(p, phi, M_BAND) {
                    Ok(b) => (b.alpha_min, b.alpha_max),
                    Err(Error::Infeasible(_)) => (f64::NAN, f64::NAN),
                    Err(e) => return Err(e),
                },
                ElementClass::Passive => match passive_amplitude(p, phi) {
                    Ok(a) => (a, a),
                    Err(Error::Infeasible(_)) => (f64::NAN, f64::NAN),
                    Err(e) => return Err(e),
                },
            };
            curves.phi.push(phi);
            curves.lower.push(lo);
            curves.upper.push(hi);
        }
        if curves.upper.iter().all(|v| v.is_nan()) {
            return Err(Error::Infeasible("no phase on the grid is realizable".into()));
        }
        Ok(curves)
    }

    /// Number of grid phases with no realizable cell state.
    pub fn infeasible_count(&self) -> usize {
        self.upper.iter().filter(|v| v.is_nan()).count()
    }
}

fn extrema(v: &[f64]) -> (f64, f64, usize) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut arg = 0;
    for (k, &x) in v.iter().enumerate() {
        if x.is_nan() {
            continue;
        }
        lo = lo.min(x);
        if x > hi {
            hi = x;
            arg = k;
        }
    }
    (lo, hi, arg)
}

/// Circular distance between two grid indices.
fn grid_gap(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Fits the cosine model to sampled exact curves.
pub fn fit_curves(curves: &AmplitudeCurves) -> FitParams {
    let (delta_min, delta_max, arg_lo) = extrema(&curves.lower);
    let (beta_min, beta_max, arg_hi) = extrema(&curves.upper);
    let n = curves.phi.len();
    if grid_gap(arg_lo, arg_hi, n) > 1 {
        log::warn!(
            "lower and upper amplitude curves peak at different phases ({:.2}° vs {:.2}°)",
            curves.phi[arg_lo].to_degrees(),
            curves.phi[arg_hi].to_degrees()
        );
    }
    FitParams {
        delta_min,
        delta_max,
        beta_min,
        beta_max,
        theta_rad: -curves.phi[arg_hi],
    }
}

/// Sweeps the phase grid and fits the cosine model of `class`.
///
/// Phases without a realizable state are skipped.
pub fn fit_amplitude_model(
    p: &CircuitParams,
    class: ElementClass,
    grid_size: usize,
) -> Result<FitParams> {
    let curves = AmplitudeCurves::sample(p, class, grid_size)?;
    if curves.infeasible_count() > 0 {
        log::debug!(
            "{} of {} grid phases are unrealizable and were skipped",
            curves.infeasible_count(),
            grid_size
        );
    }
    Ok(fit_curves(&curves))
}

impl FitParams {
    /// Passive class: one curve, so both bounds coincide.
    pub fn is_passive(&self) -> bool {
        self.delta_min == self.beta_min && self.delta_max == self.beta_max
    }

    /// `β_max − β_min − (δ_max − δ_min)`: zero for passive elements.
    pub fn x(&self) -> f64 {
        self.beta_max - self.beta_min - (self.delta_max - self.delta_min)
    }

    /// `δ_max − δ_min`.
    pub fn y(&self) -> f64 {
        self.delta_max - self.delta_min
    }

    /// Amplitudes at phase `phi`.
    pub fn bounds(&self, phi: f64) -> (f64, f64) {
        approx_amplitude_bounds(self, phi)
    }
}

/// Cosine-model amplitude band `(alpha_min, alpha_max)` at `phi`.
pub fn approx_amplitude_bounds(f: &FitParams, phi: f64) -> (f64, f64) {
    let s = 0.5 * ((phi + f.theta_rad).cos() + 1.0);
    (
        (f.delta_max - f.delta_min) * s + f.delta_min,
        (f.beta_max - f.beta_min) * s + f.beta_min,
    )
}

/// Amplitude at normalized position `alpha_bar` inside the band.
pub fn amplitude_from_normalized(f: &FitParams, phi: f64, alpha_bar: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha_bar) {
        return Err(Error::Domain(format!(
            "normalized amplitude must lie in [0, 1], got {alpha_bar}"
        )));
    }
    let (lo, hi) = approx_amplitude_bounds(f, phi);
    Ok(lo + alpha_bar * (hi - lo))
}

/// Per-element coefficients of `γ = z2 ⊙ φ² + z1 ⊙ φ + z` where `φ` holds
/// the unit-modulus phasors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionTerms {
    pub z2: Vec<C64>,
    pub z1: Vec<C64>,
    pub z: Vec<C64>,
}

impl ReflectionTerms {
    pub fn new(fits: &[FitParams], alpha_bar: &[f64]) -> Result<Self> {
        if fits.len() != alpha_bar.len() {
            return Err(Error::Dimension(format!(
                "{} fits vs {} amplitudes",
                fits.len(),
                alpha_bar.len()
            )));
        }
        let n = fits.len();
        let mut t = Self {
            z2: Vec::with_capacity(n),
            z1: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
        };
        for (f, &a) in fits.iter().zip(alpha_bar) {
            let (x, y) = (f.x(), f.y());
            let w = y + x * a;
            t.z2.push(0.25 * w * C64::from_polar(1.0, f.theta_rad));
            t.z1.push(C64::from(
                0.5 * y + f.delta_min + (0.5 * x + f.beta_min - f.delta_min) * a,
            ));
            t.z.push(0.25 * w * C64::from_polar(1.0, -f.theta_rad));
        }
        Ok(t)
    }

    /// Evaluates the reflection vector at unit-modulus phasors `phasors`.
    pub fn gamma(&self, phasors: &[C64]) -> Vec<C64> {
        phasors
            .iter()
            .enumerate()
            .map(|(n, &p)| self.z2[n] * p * p + self.z1[n] * p + self.z[n])
            .collect()
    }
}

/// Phases (radians) to unit-modulus phasors.
pub fn phasors(phi: &[f64]) -> Vec<C64> {
    phi.iter().map(|&a| C64::from_polar(1.0, a)).collect()
}

/// Reflection vector of the surface for phases `phi` and normalized
/// amplitudes `alpha_bar`.
pub fn reflection_vector(phi: &[f64], alpha_bar: &[f64], fits: &[FitParams]) -> Result<Vec<C64>> {
    if phi.len() != fits.len() {
        return Err(Error::Dimension(format!(
            "{} phases vs {} fits",
            phi.len(),
            fits.len()
        )));
    }
    for &a in alpha_bar {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain(format!(
                "normalized amplitude must lie in [0, 1], got {a}"
            )));
        }
    }
    Ok(ReflectionTerms::new(fits, alpha_bar)?.gamma(&phasors(phi)))
}

/// Finalized surface configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RISDesign {
    /// Phases in `[0, 2π)`.
    pub phi: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    pub active_mask: Vec<bool>,
    /// Reflection coefficients realized by `cells`.
    pub gamma: Vec<C64>,
    pub cells: Vec<CellState>,
}

impl RISDesign {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Total diode power drawn by the design.
    pub fn power(&self, p: &CircuitParams) -> Result<f64> {
        self.cells
            .iter()
            .map(|c| crate::circuit::power_consumption(c.resistance, p))
            .sum()
    }

    pub fn active_count(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }
}

/// Normalizes phases to `[0, 2π)`.
pub fn wrap_phases(phi: &mut [f64]) {
    for v in phi {
        *v = wrap_phase(*v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sample_fit() -> FitParams {
        FitParams {
            delta_min: 0.4,
            delta_max: 1.4,
            beta_min: 2.0,
            beta_max: 30.0,
            theta_rad: -5.9,
        }
    }

    fn passive_fit() -> FitParams {
        FitParams {
            delta_min: 0.2,
            delta_max: 0.99,
            beta_min: 0.2,
            beta_max: 0.99,
            theta_rad: -1.0,
        }
    }

    #[test]
    fn bounds_at_fit_extremes() {
        let f = sample_fit();
        let (lo, hi) = approx_amplitude_bounds(&f, -f.theta_rad);
        assert_eq!((lo, hi), (f.delta_max, f.beta_max));
        let (lo, hi) = approx_amplitude_bounds(&f, -f.theta_rad + PI);
        assert_relative_eq!(lo, f.delta_min, epsilon = 1e-14);
        assert_relative_eq!(hi, f.beta_min, epsilon = 1e-14);
    }

    #[test]
    fn normalized_amplitude() {
        let f = sample_fit();
        let phi = 0.3;
        let (lo, hi) = f.bounds(phi);
        assert_eq!(amplitude_from_normalized(&f, phi, 0.0).unwrap(), lo);
        assert_relative_eq!(amplitude_from_normalized(&f, phi, 1.0).unwrap(), hi, epsilon = 1e-14);
        assert_relative_eq!(
            amplitude_from_normalized(&f, phi, 0.5).unwrap(),
            0.5 * (lo + hi),
            epsilon = 1e-14
        );
        assert!(amplitude_from_normalized(&f, phi, 1.2).is_err());
    }

    #[test]
    fn reflection_vector_cases() {
        let f = sample_fit();
        let g = reflection_vector(&[-f.theta_rad; 3], &[1.0; 3], &[f; 3]).unwrap();
        for v in g {
            assert_relative_eq!(v.norm(), f.beta_max, max_relative = 1e-12);
        }
        let pf = passive_fit();
        let a = reflection_vector(&[0.7], &[0.0], &[pf]).unwrap();
        let b = reflection_vector(&[0.7], &[0.9], &[pf]).unwrap();
        assert_eq!(a, b);
        assert!(reflection_vector(&[0.1, 0.2], &[0.5], &[f, f]).is_err());
    }

    #[test]
    fn passive_fit_is_single_curve() {
        let p = CircuitParams::paper_default();
        let f = fit_amplitude_model(&p, ElementClass::Passive, 720).unwrap();
        assert!(f.is_passive());
        assert_eq!(f.x(), 0.0);
    }

    proptest! {
        #[test]
        fn two_forms_agree(phi in proptest::collection::vec(0.0..2.0 * PI, 1..12),
                           seed in 0.0f64..1.0) {
            let f = sample_fit();
            let n = phi.len();
            let ab: Vec<f64> = (0..n).map(|k| ((k as f64 + 1.0) * seed * 7.3).fract()).collect();
            let fits = vec![f; n];
            let g = reflection_vector(&phi, &ab, &fits).unwrap();
            for k in 0..n {
                let a = amplitude_from_normalized(&f, phi[k], ab[k]).unwrap();
                let direct = C64::from_polar(a, phi[k]);
                prop_assert!((g[k] - direct).norm() <= 1e-12 * a.max(1.0));
            }
        }

        #[test]
        fn amplitude_monotone_in_alpha_bar(phi in 0.0..2.0 * PI, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let f = sample_fit();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(amplitude_from_normalized(&f, phi, lo).unwrap()
                <= amplitude_from_normalized(&f, phi, hi).unwrap());
        }

        #[test]
        fn passive_gamma_ignores_alpha_bar(phi in 0.0..2.0 * PI, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let f = passive_fit();
            let ga = reflection_vector(&[phi], &[a], &[f]).unwrap();
            let gb = reflection_vector(&[phi], &[b], &[f]).unwrap();
            prop_assert_eq!(ga[0].re.to_bits(), gb[0].re.to_bits());
            prop_assert_eq!(ga[0].im.to_bits(), gb[0].im.to_bits());
        }
    }
}
