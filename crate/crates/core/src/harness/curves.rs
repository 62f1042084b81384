//! Amplitude-band export: exact bounds against the fitted cosine model.

use serde::Serialize;
use std::io::Write;

use crate::circuit::CircuitParams;
use crate::error::Result;
use crate::reflection::{approx_amplitude_bounds, fit_curves, AmplitudeCurves, ElementClass, FitParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub phi_deg: f64,
    /// Exact bounds; NaN where the phase is not realizable.
    pub exact_min: f64,
    pub exact_max: f64,
    pub fit_min: f64,
    pub fit_max: f64,
}

/// Samples the active class on `grid` phases and fits it.
pub fn amplitude_curves(p: &CircuitParams, grid: usize) -> Result<(FitParams, Vec<CurvePoint>)> {
    let curves = AmplitudeCurves::sample(p, ElementClass::Active, grid)?;
    let fit = fit_curves(&curves);
    let points = curves
        .phi
        .iter()
        .enumerate()
        .map(|(k, &phi)| {
            let (lo, hi) = approx_amplitude_bounds(&fit, phi);
            CurvePoint {
                phi_deg: phi.to_degrees(),
                exact_min: curves.lower[k],
                exact_max: curves.upper[k],
                fit_min: lo,
                fit_max: hi,
            }
        })
        .collect();
    Ok((fit, points))
}

pub fn write_curves<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_peak_matches_exact_peak() {
        let (fit, pts) = amplitude_curves(&CircuitParams::fig2(), 720).unwrap();
        assert_eq!(pts.len(), 720);
        let peak = pts
            .iter()
            .filter(|p| p.exact_max.is_finite())
            .max_by(|a, b| a.exact_max.total_cmp(&b.exact_max))
            .unwrap();
        assert!((peak.fit_max - fit.beta_max).abs() < 1e-9 * fit.beta_max);
        let mut buf = Vec::new();
        write_curves(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "phi_deg,exact_min,exact_max,fit_min,fit_max");
        assert_eq!(text.lines().count(), 721);
    }
}
