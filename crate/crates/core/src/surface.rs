//! A physical surface: per-element class, fitted amplitude models, the
//! linearized power model, mapping of `(φ, α)` to cell states, and the
//! shared constraint validator.

use rand::seq::index::sample;
use rand::Rng;

use crate::circuit::{
    exact_amplitude_bounds, phase_capacitance, power_consumption, reflection_coeff,
    resistance_range, series_reactance_from_gamma, CellState, CircuitParams, M_BAND,
};
use crate::error::{Error, Result};
use crate::numerics::{wrap_phase, CMat, C64};
use crate::reflection::{fit_amplitude_model, ElementClass, FitParams, RISDesign, DEFAULT_GRID};

/// Straight-line power model `y(α) = P_min + (α − α_min)·slope` of one
/// element at a fixed phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLine {
    pub p_min: f64,
    pub p_max: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub slope: f64,
}

impl PowerLine {
    pub fn eval(&self, alpha: f64) -> f64 {
        self.p_min + (alpha - self.alpha_min) * self.slope
    }

    /// A passive element: no draw at any amplitude.
    pub fn passive(alpha_min: f64, alpha_max: f64) -> Self {
        Self {
            p_min: 0.0,
            p_max: 0.0,
            alpha_min,
            alpha_max,
            slope: 0.0,
        }
    }
}

/// Linear power model of an active element at phase `phi`.
///
/// Interpolates between the draw at the least negative diode resistance
/// (smallest amplitude) and at the most negative usable one. The amplitude
/// range is the fitted one, capped at the largest amplitude the diode band
/// actually reaches.
pub fn linear_power_fit(fit: &FitParams, phi: f64, p: &CircuitParams) -> Result<PowerLine> {
    let f = resistance_range(p, phi)?;
    let (r_lo, r_hi) = p.diode_band();
    if f < r_hi.abs() {
        return Err(Error::Infeasible(format!(
            "phase {phi}: resistance envelope {f} excludes the diode band"
        )));
    }
    let r_most = r_lo.max(-f);
    let p_min = power_consumption(r_hi, p)?;
    let p_max = power_consumption(r_most, p)?;
    let (alpha_min, fit_max) = fit.bounds(phi);
    // The fitted upper curve can overshoot what the band realizes; beyond
    // the exact maximum the cell only saturates at full draw.
    let alpha_max = match exact_amplitude_bounds(p, phi, M_BAND) {
        Ok(b) => fit_max.min(b.alpha_max).max(alpha_min),
        Err(_) => fit_max,
    };
    let span = alpha_max - alpha_min;
    let slope = if span > 0.0 {
        (p_max - p_min) / span
    } else {
        0.0
    };
    Ok(PowerLine {
        p_min,
        p_max,
        alpha_min,
        alpha_max,
        slope,
    })
}

/// Hardware description of an `N`-element surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub params: CircuitParams,
    pub active_fit: FitParams,
    pub passive_fit: FitParams,
    pub active_mask: Vec<bool>,
}

impl Surface {
    /// Fits both element classes on the default phase grid.
    pub fn new(params: CircuitParams, active_mask: Vec<bool>) -> Result<Self> {
        let active_fit = fit_amplitude_model(&params, ElementClass::Active, DEFAULT_GRID)?;
        let passive_fit = fit_amplitude_model(&params, ElementClass::Passive, DEFAULT_GRID)?;
        Ok(Self {
            params,
            active_fit,
            passive_fit,
            active_mask,
        })
    }

    pub fn with_fits(
        params: CircuitParams,
        active_fit: FitParams,
        passive_fit: FitParams,
        active_mask: Vec<bool>,
    ) -> Self {
        Self {
            params,
            active_fit,
            passive_fit,
            active_mask,
        }
    }

    /// Same hardware with a different element assignment.
    pub fn with_mask(&self, active_mask: Vec<bool>) -> Self {
        Self {
            active_mask,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.active_mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active_mask.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }

    pub fn fit(&self, n: usize) -> &FitParams {
        if self.active_mask[n] {
            &self.active_fit
        } else {
            &self.passive_fit
        }
    }

    pub fn fits(&self) -> Vec<FitParams> {
        (0..self.len()).map(|n| *self.fit(n)).collect()
    }

    /// Approximate amplitude box `(l, u)` at phases `phi`.
    pub fn amplitude_box(&self, phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        phi.iter()
            .enumerate()
            .map(|(n, &a)| self.fit(n).bounds(a))
            .unzip()
    }

    /// Linear power model of every element at phases `phi`.
    pub fn power_lines(&self, phi: &[f64]) -> Result<Vec<PowerLine>> {
        phi.iter()
            .enumerate()
            .map(|(n, &a)| {
                if self.active_mask[n] {
                    match linear_power_fit(&self.active_fit, a, &self.params) {
                        // Cells in the unrealizable window are pinned to the
                        // least-power resistance when finalized.
                        Err(Error::Infeasible(_)) => {
                            let (l, u) = self.active_fit.bounds(a);
                            let w = power_consumption(self.floor_resistance(), &self.params)?;
                            Ok(PowerLine {
                                p_min: w,
                                p_max: w,
                                alpha_min: l,
                                alpha_max: u,
                                slope: 0.0,
                            })
                        }
                        other => other,
                    }
                } else {
                    let (l, u) = self.passive_fit.bounds(a);
                    Ok(PowerLine::passive(l, u))
                }
            })
            .collect()
    }

    /// Minimum draw of the surface: every active element at the least
    /// negative diode resistance.
    pub fn min_power(&self) -> Result<f64> {
        let (_, r_hi) = self.params.diode_band();
        Ok(self.active_count() as f64 * power_consumption(r_hi, &self.params)?)
    }

    /// Largest resistance any active cell may take (least power).
    pub fn floor_resistance(&self) -> f64 {
        self.params.diode_band().1
    }

    /// Maps phases and amplitudes to cell states and the reflection vector
    /// they realize. See [`Surface::realize_cell`].
    pub fn finalize(&self, phi: &[f64], alpha: &[f64]) -> Result<RISDesign> {
        self.finalize_with(phi, alpha, None)
    }

    /// As [`Surface::finalize`] but active resistances are kept at or above
    /// `r_floor`, capping each cell's draw.
    pub fn finalize_with(
        &self,
        phi: &[f64],
        alpha: &[f64],
        r_floor: Option<f64>,
    ) -> Result<RISDesign> {
        if phi.len() != self.len() || alpha.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} phases and {} amplitudes for {} elements",
                phi.len(),
                alpha.len(),
                self.len()
            )));
        }
        let mut design = RISDesign {
            phi: Vec::with_capacity(self.len()),
            alpha_bar: Vec::with_capacity(self.len()),
            active_mask: self.active_mask.clone(),
            gamma: Vec::with_capacity(self.len()),
            cells: Vec::with_capacity(self.len()),
        };
        for n in 0..self.len() {
            let ph = wrap_phase(phi[n]);
            let cell = self.realize_cell(n, ph, alpha[n], r_floor)?;
            let g = reflection_coeff(&self.params, &cell)?;
            let (l, u) = self.fit(n).bounds(ph);
            let ab = if u > l {
                ((alpha[n] - l) / (u - l)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            design.phi.push(ph);
            design.alpha_bar.push(ab);
            design.gamma.push(g);
            design.cells.push(cell);
        }
        Ok(design)
    }

    /// Cell state realizing `alpha·e^{jφ}` as closely as the hardware allows.
    ///
    /// Active cells invert the reflection coefficient; when the resulting
    /// resistance leaves the usable band it is clamped and the capacitance
    /// is re-solved so the phase is kept. Passive cells keep their fixed
    /// resistance and only tune the capacitance.
    pub fn realize_cell(
        &self,
        n: usize,
        phi: f64,
        alpha: f64,
        r_floor: Option<f64>,
    ) -> Result<CellState> {
        let p = &self.params;
        let target = C64::from_polar(alpha, phi);
        let x = series_reactance_from_gamma(p, target).ok();
        let x_cap = |x: C64| {
            (x.im < 0.0).then(|| 1.0 / (x.im.abs() * p.omega))
        };
        if !self.active_mask[n] {
            let r = p.r_passive;
            let c = phase_capacitance(p, r, phi)
                .ok()
                .or_else(|| x.and_then(x_cap))
                .or_else(|| nearest_feasible_capacitance(p, r, phi))
                .ok_or_else(|| {
                    Error::Infeasible(format!("passive element {n} cannot realize phase {phi}"))
                })?;
            return Ok(CellState {
                resistance: r,
                capacitance: c,
            });
        }
        let (band_lo, band_hi) = p.diode_band();
        let f = resistance_range(p, phi).unwrap_or(f64::INFINITY);
        let hi = band_hi;
        let mut lo = band_lo.max(-f).min(hi);
        if let Some(r) = r_floor {
            lo = lo.max(r).min(hi);
        }
        if let Some(x) = x {
            if x.re >= lo && x.re <= hi {
                if let Some(c) = x_cap(x) {
                    return Ok(CellState {
                        resistance: x.re,
                        capacitance: c,
                    });
                }
            }
        }
        let r = x.map_or(hi, |x| x.re.clamp(lo, hi));
        let c = phase_capacitance(p, r, phi)
            .ok()
            .or_else(|| x.and_then(x_cap))
            .or_else(|| nearest_feasible_capacitance(p, r, phi))
            .ok_or_else(|| {
                Error::Infeasible(format!("active element {n} cannot realize phase {phi}"))
            })?;
        Ok(CellState {
            resistance: r,
            capacitance: c,
        })
    }

    /// Design record for explicit cell states.
    pub fn design_from_cells(&self, cells: Vec<CellState>) -> Result<RISDesign> {
        if cells.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} cells for {} elements",
                cells.len(),
                self.len()
            )));
        }
        let mut design = RISDesign {
            phi: Vec::with_capacity(cells.len()),
            alpha_bar: Vec::with_capacity(cells.len()),
            active_mask: self.active_mask.clone(),
            gamma: Vec::with_capacity(cells.len()),
            cells: Vec::with_capacity(cells.len()),
        };
        for (n, cell) in cells.into_iter().enumerate() {
            let g = reflection_coeff(&self.params, &cell)?;
            let ph = wrap_phase(g.arg());
            let (l, u) = self.fit(n).bounds(ph);
            let ab = if u > l {
                ((g.norm() - l) / (u - l)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            design.phi.push(ph);
            design.alpha_bar.push(ab);
            design.gamma.push(g);
            design.cells.push(cell);
        }
        Ok(design)
    }

    /// Random active/passive assignment with `n_act` active elements.
    pub fn random_mask<R: Rng + ?Sized>(n: usize, n_act: usize, rng: &mut R) -> Vec<bool> {
        let mut mask = vec![false; n];
        if n_act >= n {
            return vec![true; n];
        }
        for k in sample(rng, n, n_act) {
            mask[k] = true;
        }
        mask
    }
}

/// Capacitance for the closest realizable phase when `phi` itself sits in
/// the unrealizable window.
fn nearest_feasible_capacitance(p: &CircuitParams, r: f64, phi: f64) -> Option<f64> {
    let step = 0.1f64.to_radians();
    (1..=400).find_map(|k| {
        let d = k as f64 * step;
        phase_capacitance(p, r, wrap_phase(phi + d))
            .ok()
            .or_else(|| phase_capacitance(p, r, wrap_phase(phi - d)).ok())
    })
}

/// Outcome of checking a design against the optimization constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub tx_power: f64,
    pub ris_power: f64,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.ok() {
            Ok(self)
        } else {
            Err(Error::Infeasible(self.violations.join("; ")))
        }
    }
}

/// Checks transmit power, surface power, resistance bands, positive
/// capacitances, `γ` consistency with the cells, and that each active
/// amplitude lies within its exact phase-dependent band.
pub fn validate_design(
    surface: &Surface,
    design: &RISDesign,
    v: &CMat,
    p_t: f64,
    p_ris: f64,
) -> ValidationReport {
    let p = &surface.params;
    let mut violations = Vec::new();
    let tx_power = v.norm_squared();
    if tx_power > p_t * (1.0 + 1e-9) + 1e-15 {
        violations.push(format!("transmit power {tx_power:e} W exceeds {p_t:e} W"));
    }
    if design.cells.len() != surface.len()
        || design.gamma.len() != surface.len()
        || design.active_mask != surface.active_mask
    {
        violations.push("design does not match the surface layout".into());
        return ValidationReport {
            tx_power,
            ris_power: f64::NAN,
            violations,
        };
    }
    let (band_lo, band_hi) = p.diode_band();
    let tol = 1e-9 * p.r0;
    let mut ris_power = 0.0;
    for (n, cell) in design.cells.iter().enumerate() {
        match power_consumption(cell.resistance, p) {
            Ok(w) => ris_power += w,
            Err(e) => violations.push(format!("element {n}: {e}")),
        }
        if !(cell.capacitance > 0.0 && cell.capacitance.is_finite()) {
            violations.push(format!("element {n}: capacitance {}", cell.capacitance));
            continue;
        }
        if surface.active_mask[n] {
            if cell.resistance < band_lo - tol || cell.resistance > band_hi + tol {
                violations.push(format!(
                    "element {n}: resistance {} outside diode band",
                    cell.resistance
                ));
            }
        } else if cell.resistance != p.r_passive {
            violations.push(format!("element {n}: passive resistance {}", cell.resistance));
        }
        let g = match reflection_coeff(p, cell) {
            Ok(g) => g,
            Err(e) => {
                violations.push(format!("element {n}: {e}"));
                continue;
            }
        };
        if (g - design.gamma[n]).norm() > 1e-9 * g.norm().max(1.0) {
            violations.push(format!("element {n}: reflection coefficient does not match cell"));
        }
        if surface.active_mask[n] {
            let phase = wrap_phase(g.arg());
            if let Ok(b) = exact_amplitude_bounds(p, phase, M_BAND) {
                let a = g.norm();
                let slack = 1e-6 * b.alpha_max.max(1.0);
                if a < b.alpha_min - slack || a > b.alpha_max + slack {
                    violations.push(format!(
                        "element {n}: amplitude {a} outside [{}, {}]",
                        b.alpha_min, b.alpha_max
                    ));
                }
            }
        }
    }
    if ris_power > p_ris + 1e-9 {
        violations.push(format!("surface power {ris_power} W exceeds {p_ris} W"));
    }
    ValidationReport {
        tx_power,
        ris_power,
        violations,
    }
}
