//! Unit-cell physics: impedance, reflection coefficient, tunnel-diode
//! negative resistance, power draw, and the phase-feasible capacitance and
//! resistance ranges.
//!
//! All quantities are SI. A cell is a parallel resonator: the bottom-layer
//! inductance `L1` in parallel with the series branch `jωL2 + 1/(jωC) + R`.
//! Active cells bias a tunnel diode at its stable point so that `R < 0`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::numerics::{bisect, lambert_w0, wrap_angle, C64};

/// Realized-phase tolerance used when disambiguating capacitance roots.
pub const PHASE_TOL: f64 = 1e-6;

/// Diode shape parameter band `m ∈ [1, 3]`.
pub const M_BAND: (f64, f64) = (1.0, 3.0);

/// Fixed hardware constants shared by every cell of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Bottom-layer inductance (H).
    pub l1: f64,
    /// Top-layer inductance (H).
    pub l2: f64,
    /// Free-space impedance (Ω).
    pub z0: f64,
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Ohmic resistance of the diode's linear region (Ω).
    pub r0: f64,
    /// Voltage scale of the tunneling current model (V).
    pub v0: f64,
    /// Nominal tunable capacitance range (F).
    pub c_range: (f64, f64),
    /// Resistance of passive cells (Ω).
    pub r_passive: f64,
}

/// Tunable state of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    /// Resistance (Ω); negative for active operation.
    pub resistance: f64,
    /// Capacitance (F).
    pub capacitance: f64,
}

impl CircuitParams {
    /// Validates positivity, the capacitance range and the no-real-root
    /// condition on the resistance envelope.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        l1: f64,
        l2: f64,
        z0: f64,
        omega: f64,
        r0: f64,
        v0: f64,
        c_range: (f64, f64),
        r_passive: f64,
    ) -> Result<Self> {
        let p = Self {
            l1,
            l2,
            z0,
            omega,
            r0,
            v0,
            c_range,
            r_passive,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("l1", self.l1),
            ("l2", self.l2),
            ("z0", self.z0),
            ("omega", self.omega),
            ("r0", self.r0),
            ("v0", self.v0),
            ("r_passive", self.r_passive),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.c_range.0 > 0.0 && self.c_range.0 < self.c_range.1) {
            return Err(Error::Config(format!(
                "capacitance range must satisfy 0 < lo < hi, got {:?}",
                self.c_range
            )));
        }
        if !feasibility_condition(self) {
            return Err(Error::Config(
                "circuit constants admit phases with an empty resistance range".into(),
            ));
        }
        Ok(())
    }

    /// Unit-cell constants of the main simulation setup (2.4 GHz, R0 = 1.5 Ω).
    pub fn paper_default() -> Self {
        Self {
            l1: 4.5e-9,
            l2: 0.7e-9,
            z0: 377.0,
            omega: 2.0 * PI * 2.4e9,
            r0: 1.5,
            v0: 0.1,
            c_range: (0.85e-12, 6.25e-12),
            r_passive: 1.5,
        }
    }

    /// Constants of the amplitude-curve illustration (R0 = 0.5 Ω).
    pub fn fig2() -> Self {
        Self {
            r0: 0.5,
            ..Self::paper_default()
        }
    }

    /// Usable negative-resistance band `[R_sp(1), R_sp(3)]`.
    pub fn diode_band(&self) -> (f64, f64) {
        (
            stable_resistance_unchecked(M_BAND.0, self),
            stable_resistance_unchecked(M_BAND.1, self),
        )
    }
}

/// Cell impedance `Z(C, R)`.
pub fn impedance(p: &CircuitParams, s: &CellState) -> Result<C64> {
    if s.capacitance == 0.0 || !s.capacitance.is_finite() {
        return Err(Error::Domain(format!(
            "capacitance must be nonzero and finite, got {}",
            s.capacitance
        )));
    }
    let j = C64::i();
    let w = p.omega;
    let series = j * w * p.l2 + 1.0 / (j * w * s.capacitance) + s.resistance;
    let shunt = j * w * p.l1;
    let denom = shunt + series;
    if denom.norm() == 0.0 {
        return Err(Error::Pole("impedance denominator vanishes".into()));
    }
    Ok(shunt * series / denom)
}

/// Reflection coefficient against free space.
pub fn reflection_coeff(p: &CircuitParams, s: &CellState) -> Result<C64> {
    let z = impedance(p, s)?;
    let denom = z + p.z0;
    if denom.norm() <= 1e-12 * p.z0 {
        return Err(Error::Pole(format!(
            "Z = -Z0 at R = {}, C = {}",
            s.resistance, s.capacitance
        )));
    }
    Ok((z - p.z0) / denom)
}

/// Tunneling-region diode current `(V/R0)·exp(-(V/V0)^m)`.
pub fn tunneling_current(v: f64, p: &CircuitParams, m: f64) -> Result<f64> {
    check_m(m)?;
    if v < 0.0 {
        return Err(Error::Domain(format!("voltage must be nonnegative, got {v}")));
    }
    Ok(v / p.r0 * (-(v / p.v0).powf(m)).exp())
}

/// Bias voltage of the stable operating point, `(1/m + 1)^(1/m)·V0`.
pub fn stable_voltage(m: f64, p: &CircuitParams) -> Result<f64> {
    check_m(m)?;
    Ok((1.0 / m + 1.0).powf(1.0 / m) * p.v0)
}

/// Negative resistance at the stable operating point, `-(R0/m)·e^((m+1)/m)`.
pub fn stable_resistance(m: f64, p: &CircuitParams) -> Result<f64> {
    check_m(m)?;
    Ok(stable_resistance_unchecked(m, p))
}

fn stable_resistance_unchecked(m: f64, p: &CircuitParams) -> f64 {
    -(p.r0 / m) * ((m + 1.0) / m).exp()
}

fn check_m(m: f64) -> Result<()> {
    if !(M_BAND.0..=M_BAND.1).contains(&m) {
        return Err(Error::Domain(format!("m must lie in [1, 3], got {m}")));
    }
    Ok(())
}

fn band_tol(p: &CircuitParams) -> f64 {
    1e-9 * p.r0
}

/// Inverts [`stable_resistance`] through the principal Lambert branch.
pub fn m_from_resistance(r: f64, p: &CircuitParams) -> Result<f64> {
    let (lo, hi) = p.diode_band();
    let tol = band_tol(p);
    if !(r >= lo - tol && r <= hi + tol) {
        return Err(Error::Domain(format!(
            "resistance {r} outside diode band [{lo}, {hi}]"
        )));
    }
    let w = lambert_w0(-r / (p.r0 * E))?;
    Ok((1.0 / w).clamp(M_BAND.0, M_BAND.1))
}

/// DC power drawn to hold a cell at resistance `r`.
///
/// Zero for `r >= 0`. For negative `r` the stable-point power
/// `(V0²/R0)(W + 1)^(2W)` with `W = W0(-r/(R0 e)) = 1/m`; resistances
/// between the band's upper edge and zero extrapolate the same curve.
pub fn power_consumption(r: f64, p: &CircuitParams) -> Result<f64> {
    if r >= 0.0 {
        return Ok(0.0);
    }
    let (lo, _) = p.diode_band();
    if r < lo - band_tol(p) {
        return Err(Error::Domain(format!(
            "resistance {r} below the most negative stable resistance {lo}"
        )));
    }
    let w = lambert_w0(-r / (p.r0 * E))?;
    Ok(p.v0 * p.v0 / p.r0 * (w + 1.0).powf(2.0 * w))
}

/// Inverse of [`power_consumption`] on the diode band.
pub fn resistance_for_power(power: f64, p: &CircuitParams) -> Result<f64> {
    let (lo, hi) = p.diode_band();
    let p_lo = power_consumption(hi, p)?;
    let p_hi = power_consumption(lo, p)?;
    if power <= p_lo {
        return Ok(hi);
    }
    if power >= p_hi {
        return Ok(lo);
    }
    bisect(
        |r| power_consumption(r, p).unwrap_or(f64::NAN) - power,
        lo,
        hi,
        1e-13,
    )
}

/// Complex constants of the phase equation `Im[(a C² + b C + c)·e^{-jφ}] = 0`.
///
/// Writing `u = 1/C`, the reflection coefficient is
/// `(α₁ + β u)/(α₂ + β* u)` up to a positive factor, and its argument is the
/// argument of `(α₁ + β u)(α₂* + β u)`; after multiplying by `C²` the
/// coefficients are `α₁α₂* = P² − R²s²`, `2βP` and `β²`.
#[derive(Debug, Clone, Copy)]
struct PhaseConstants {
    p0: C64,
    s1: C64,
    beta: C64,
}

impl PhaseConstants {
    fn new(p: &CircuitParams) -> Self {
        let w = p.omega;
        let j = C64::i();
        Self {
            p0: C64::new(-w * w * p.l1 * p.l2, -p.z0 * w * (p.l1 + p.l2)),
            s1: j * w * p.l1 - p.z0,
            beta: C64::new(p.l1, p.z0 / w),
        }
    }

    /// Complex coefficient of `R²` inside `a`.
    fn k_r2(&self) -> C64 {
        -(self.s1 * self.s1)
    }

    fn k_0(&self) -> C64 {
        self.p0 * self.p0
    }

    fn k_b(&self) -> C64 {
        2.0 * self.beta * self.p0
    }

    fn k_c(&self) -> C64 {
        self.beta * self.beta
    }
}

/// `Im(X e^{-jφ}) = Im X cos φ − Re X sin φ`; the tangent form divided by `cos φ`.
fn cross(x: C64, phi: f64) -> f64 {
    x.im * phi.cos() - x.re * phi.sin()
}

/// Capacitance quadratic `a C² + b C + c = 0` for a target phase, in
/// cross-multiplied form so `φ = π/2` stays finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PhaseQuadratic {
    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }

    fn roots(&self) -> Option<[f64; 2]> {
        let disc = self.discriminant();
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        if self.a == 0.0 {
            if self.b == 0.0 {
                return None;
            }
            let r = -self.c / self.b;
            return Some([r, r]);
        }
        let q = -0.5 * (self.b + self.b.signum() * sq);
        if q == 0.0 {
            return Some([0.0, 0.0]);
        }
        Some([q / self.a, self.c / q])
    }
}

pub fn phase_quadratic(p: &CircuitParams, r: f64, phi: f64) -> PhaseQuadratic {
    let k = PhaseConstants::new(p);
    PhaseQuadratic {
        a: cross(k.k_0() + r * r * k.k_r2(), phi),
        b: cross(k.k_b(), phi),
        c: cross(k.k_c(), phi),
    }
}

/// Tangent-form constants `a0..a3`, `b0, b1`, `c0, c1` with
/// `a = a3 R² t + a2 t + a1 R² + a0`, `b = b1 t + b0`, `c = c1 t + c0`, `t = tan φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentConstants {
    pub a: [f64; 4],
    pub b: [f64; 2],
    pub c: [f64; 2],
}

pub fn tangent_constants(p: &CircuitParams) -> TangentConstants {
    let k = PhaseConstants::new(p);
    let split = |x: C64| (x.im, -x.re);
    let (a0, a2) = split(k.k_0());
    let (a1, a3) = split(k.k_r2());
    let (b0, b1) = split(k.k_b());
    let (c0, c1) = split(k.k_c());
    TangentConstants {
        a: [a0, a1, a2, a3],
        b: [b0, b1],
        c: [c0, c1],
    }
}

/// True when the resistance envelope `F(φ)` never vanishes.
pub fn feasibility_condition(p: &CircuitParams) -> bool {
    let (disc, scale) = feasibility_discriminant(p);
    disc <= 1e-9 * scale
}

/// Discriminant of the envelope numerator viewed as a quadratic in `tan φ`,
/// together with the magnitude of its two terms for round-off scaling.
pub fn feasibility_discriminant(p: &CircuitParams) -> (f64, f64) {
    let t = tangent_constants(p);
    let [a0, _, a2, _] = t.a;
    let [b0, b1] = t.b;
    let [c0, c1] = t.c;
    let lin = 2.0 * b1 * b0 - 4.0 * a2 * c0 - 4.0 * a0 * c1;
    let quad = b1 * b1 - 4.0 * a2 * c1;
    let cnst = b0 * b0 - 4.0 * a0 * c0;
    (lin * lin - 4.0 * quad * cnst, lin * lin + (4.0 * quad * cnst).abs())
}

/// Largest `|R|` for which the capacitance quadratic at `phi` has real roots.
pub fn resistance_range(p: &CircuitParams, phi: f64) -> Result<f64> {
    let k = PhaseConstants::new(p);
    let a3 = cross(k.k_r2(), phi);
    let a0 = cross(k.k_0(), phi);
    let b = cross(k.k_b(), phi);
    let c = cross(k.k_c(), phi);
    let num = b * b - 4.0 * a0 * c;
    let den = 4.0 * c * a3;
    let scale = (b * b).abs() + (4.0 * a0 * c).abs();
    if den.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        // Discriminant independent of R: either every R works or none does.
        return if num >= 0.0 {
            Ok(f64::INFINITY)
        } else {
            Err(Error::Infeasible(format!(
                "no resistance admits phase {phi}"
            )))
        };
    }
    Ok((num / den).abs().sqrt())
}

fn phase_matches(p: &CircuitParams, r: f64, c: f64, phi: f64) -> Option<f64> {
    let g = reflection_coeff(
        p,
        &CellState {
            resistance: r,
            capacitance: c,
        },
    )
    .ok()?;
    let err = wrap_angle(g.arg() - phi).abs();
    Some(err)
}

/// Capacitance realizing reflection phase `phi` at resistance `r`, without
/// checking the nominal capacitance range.
///
/// Both roots of the quadratic are pushed through the reflection
/// coefficient and the one whose realized phase equals `phi` is returned;
/// the other realizes `phi ± π`.
pub fn phase_capacitance(p: &CircuitParams, r: f64, phi: f64) -> Result<f64> {
    let quad = phase_quadratic(p, r, phi);
    let roots = quad.roots().ok_or_else(|| {
        Error::Infeasible(format!("no real capacitance for R = {r}, phase = {phi}"))
    })?;
    let mut best: Option<(f64, f64)> = None;
    let mut saw_nonpositive = false;
    for c in roots {
        if !(c > 0.0) || !c.is_finite() {
            saw_nonpositive = true;
            continue;
        }
        if let Some(err) = phase_matches(p, r, c, phi) {
            if best.map_or(true, |(_, e)| err < e) {
                best = Some((c, err));
            }
        }
    }
    match best {
        Some((c, err)) if err <= PHASE_TOL => Ok(c),
        _ if saw_nonpositive => Err(Error::Infeasible(format!(
            "phase {phi} needs a nonpositive capacitance at R = {r}"
        ))),
        _ => Err(Error::Model(format!(
            "neither capacitance root realizes phase {phi} at R = {r}"
        ))),
    }
}

/// Capacitance realizing `phi` at `r`, required to lie in the nominal range.
pub fn capacitance_for_phase(p: &CircuitParams, r: f64, phi: f64) -> Result<f64> {
    let c = phase_capacitance(p, r, phi)?;
    let (lo, hi) = p.c_range;
    if c < lo || c > hi {
        return Err(Error::CapacitanceRange { value: c, lo, hi });
    }
    Ok(c)
}

/// Exact amplitude band of an active cell at phase `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactBounds {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Most negative usable resistance; realizes `alpha_max`.
    pub r_min: f64,
    /// Least negative usable resistance; realizes `alpha_min`.
    pub r_max: f64,
    pub c_at_alpha_min: f64,
    pub c_at_alpha_max: f64,
}

/// Amplitude band at `phi` for diode shapes `m ∈ m_band`.
///
/// The usable resistances are the diode band intersected with `|R| ≤ F(φ)`.
/// The most negative one gives the largest amplification.
pub fn exact_amplitude_bounds(
    p: &CircuitParams,
    phi: f64,
    m_band: (f64, f64),
) -> Result<ExactBounds> {
    let f = resistance_range(p, phi)?;
    let most_negative = stable_resistance(m_band.0, p)?;
    let least_negative = stable_resistance(m_band.1, p)?;
    let r_min = most_negative.max(-f);
    let r_max = least_negative;
    if r_max < r_min || least_negative.abs() > f {
        return Err(Error::Infeasible(format!(
            "phase {phi}: resistance envelope {f} excludes the diode band"
        )));
    }
    let c_hi = phase_capacitance(p, r_min, phi)?;
    let c_lo = phase_capacitance(p, r_max, phi)?;
    let amp = |r, c| {
        reflection_coeff(
            p,
            &CellState {
                resistance: r,
                capacitance: c,
            },
        )
        .map(|g| g.norm())
    };
    let a_hi = amp(r_min, c_hi)?;
    let a_lo = amp(r_max, c_lo)?;
    Ok(ExactBounds {
        alpha_min: a_lo.min(a_hi),
        alpha_max: a_lo.max(a_hi),
        r_min,
        r_max,
        c_at_alpha_min: c_lo,
        c_at_alpha_max: c_hi,
    })
}

/// Amplitude of a passive cell (fixed `R_passive`) at phase `phi`.
pub fn passive_amplitude(p: &CircuitParams, phi: f64) -> Result<f64> {
    let c = phase_capacitance(p, p.r_passive, phi)?;
    reflection_coeff(
        p,
        &CellState {
            resistance: p.r_passive,
            capacitance: c,
        },
    )
    .map(|g| g.norm())
}

/// Tangent-form amplitude of a cell whose impedance is `z` at phase `phi`:
/// `sqrt((Zi + (Z0 − Zr) tan φ)/(Zi + (Z0 + Zr) tan φ))`.
pub fn amplitude_from_impedance(p: &CircuitParams, z: C64, phi: f64) -> f64 {
    let t = phi.tan();
    ((z.im + (p.z0 - z.re) * t) / (z.im + (p.z0 + z.re) * t)).sqrt()
}

/// Inverts the reflection coefficient: `γ → X = R + 1/(jωC) → (R, C)`.
pub fn circuit_from_gamma(p: &CircuitParams, gamma: C64) -> Result<CellState> {
    let x = series_reactance_from_gamma(p, gamma)?;
    if x.im == 0.0 {
        return Err(Error::Domain(
            "reactive part vanishes; capacitance undefined".into(),
        ));
    }
    Ok(CellState {
        resistance: x.re,
        capacitance: 1.0 / (x.im.abs() * p.omega),
    })
}

/// `X = R + 1/(jωC)` realizing `gamma`:
/// `X = ω((γ+1)Z0(L1+L2) + jωL1L2(γ−1)) / (ωL1(1−γ) + j(γ+1)Z0)`.
/// Capacitive solutions have `Im X < 0`.
pub fn series_reactance_from_gamma(p: &CircuitParams, gamma: C64) -> Result<C64> {
    let j = C64::i();
    let w = p.omega;
    let gp = gamma + 1.0;
    let gm = gamma - 1.0;
    let num = w * (gp * p.z0 * (p.l1 + p.l2) + j * p.l1 * p.l2 * gm * w);
    let den = -p.l1 * gm * w + j * gp * p.z0;
    if den.norm() <= 1e-12 * (p.l1 * w + p.z0) {
        return Err(Error::Pole(format!("gamma = {gamma} hits the inversion pole")));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cell(r: f64, c: f64) -> CellState {
        CellState {
            resistance: r,
            capacitance: c,
        }
    }

    #[test]
    fn impedance_limits() {
        let p = CircuitParams::fig2();
        let z = impedance(&p, &cell(1e12, 1e-12)).unwrap();
        let expect = C64::new(0.0, p.omega * p.l1);
        assert!((z - expect).norm() / expect.norm() < 1e-9);
        assert!(impedance(&p, &cell(1.0, 0.0)).is_err());
    }

    #[test]
    fn impedance_matches_direct_evaluation() {
        // Independent evaluation through admittances.
        let p = CircuitParams::fig2();
        let (r, c) = (1.0, 1e-12);
        let w = p.omega;
        let y1 = C64::new(0.0, -1.0 / (w * p.l1));
        let zs = C64::new(r, w * p.l2 - 1.0 / (w * c));
        let expect = 1.0 / (y1 + 1.0 / zs);
        let z = impedance(&p, &cell(r, c)).unwrap();
        assert!((z - expect).norm() / expect.norm() < 1e-12);
        let passive = reflection_coeff(&p, &cell(1.0, c)).unwrap().norm();
        let active = reflection_coeff(&p, &cell(-2.0, c)).unwrap().norm();
        assert!(active > passive);
    }

    #[test]
    fn reflection_limits() {
        let p = CircuitParams::paper_default();
        // Z → ∞: shunt inductor dominates... use a huge Z0 comparison instead.
        let q = CircuitParams { z0: 1e-9, ..p };
        let g = reflection_coeff(&q, &cell(1.0, 1e-12)).unwrap();
        assert!((g - C64::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn passive_peak_amplitude() {
        let p = CircuitParams::paper_default();
        let (lo, hi) = p.c_range;
        let best = (0..=20000)
            .map(|k| lo + (hi - lo) * k as f64 / 20000.0)
            .map(|c| reflection_coeff(&p, &cell(1.5, c)).unwrap().norm())
            .fold(0.0, f64::max);
        assert!((best - 0.99).abs() / 0.99 < 0.02, "{best}");
    }

    #[test]
    fn diode_endpoints() {
        let p = CircuitParams::paper_default();
        let r1 = stable_resistance(1.0, &p).unwrap();
        let r3 = stable_resistance(3.0, &p).unwrap();
        assert!((r1 + 11.0).abs() / 11.0 < 0.01 + 0.0076, "{r1}");
        assert!((r3 + 1.9).abs() / 1.9 < 0.01, "{r3}");
        let r2 = stable_resistance(2.0, &p).unwrap();
        assert!(r1 < r2 && r2 < r3);
        assert!(stable_resistance(0.5, &p).is_err());
    }

    #[test]
    fn tunneling_current_values() {
        let p = CircuitParams::paper_default();
        assert_eq!(tunneling_current(0.0, &p, 2.0).unwrap(), 0.0);
        assert_relative_eq!(
            tunneling_current(p.v0, &p, 1.0).unwrap(),
            p.v0 / (p.r0 * E),
            max_relative = 1e-14
        );
        assert!(tunneling_current(0.1, &p, 3.5).is_err());
    }

    #[test]
    fn differential_resistance_at_stable_voltage() {
        // dI/dV at V_r by central differences inverts to R_sp.
        let p = CircuitParams::paper_default();
        for &m in &[1.0, 1.7, 2.5, 3.0] {
            let v = stable_voltage(m, &p).unwrap();
            let h = 1e-7;
            let di = (tunneling_current(v + h, &p, m).unwrap()
                - tunneling_current(v - h, &p, m).unwrap())
                / (2.0 * h);
            assert_relative_eq!(1.0 / di, stable_resistance(m, &p).unwrap(), max_relative = 1e-6);
        }
    }

    #[test]
    fn power_is_stable_point_product_without_tunneling_decay() {
        // P(R) equals V_r·I_T(V_r)·e^((m+1)/m): the stated power model keeps
        // the polynomial factor of V_r·I_T(V_r) and drops its exponential.
        let p = CircuitParams::paper_default();
        for &m in &[1.0, 2.0, 3.0] {
            let v = stable_voltage(m, &p).unwrap();
            let vi = v * tunneling_current(v, &p, m).unwrap();
            let r = stable_resistance(m, &p).unwrap();
            assert_relative_eq!(
                power_consumption(r, &p).unwrap(),
                vi * ((m + 1.0) / m).exp(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn m_roundtrip() {
        let p = CircuitParams::paper_default();
        let r = -p.r0 * E * E;
        assert_relative_eq!(m_from_resistance(r, &p).unwrap(), 1.0, epsilon = 1e-12);
        for &m in &[3.0, 1.7] {
            let r = stable_resistance(m, &p).unwrap();
            assert!((m_from_resistance(r, &p).unwrap() - m).abs() < 1e-9);
        }
        assert!(m_from_resistance(-20.0, &p).is_err());
        assert!(m_from_resistance(-1.0, &p).is_err());
    }

    #[test]
    fn power_values() {
        let p = CircuitParams::paper_default();
        assert_eq!(power_consumption(1.5, &p).unwrap(), 0.0);
        let hi = power_consumption(-11.0, &p).unwrap();
        assert!((hi - 26.5e-3).abs() / 26.5e-3 < 0.02, "{hi}");
        let lo = power_consumption(-1.9, &p).unwrap();
        assert!((lo - 8e-3).abs() / 8e-3 < 0.03, "{lo}");
        assert!(power_consumption(-12.0, &p).is_err());
    }

    #[test]
    fn power_strictly_decreasing_on_band() {
        let p = CircuitParams::paper_default();
        let (lo, hi) = p.diode_band();
        let vals: Vec<f64> = (0..200)
            .map(|k| lo + (hi - lo) * k as f64 / 199.0)
            .map(|r| power_consumption(r, &p).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        let r = resistance_for_power(0.015, &p).unwrap();
        assert_relative_eq!(power_consumption(r, &p).unwrap(), 0.015, max_relative = 1e-9);
    }

    #[test]
    fn tangent_constants_match_closed_forms() {
        let p = CircuitParams::paper_default();
        let (l1, l2, z0, w) = (p.l1, p.l2, p.z0, p.omega);
        let t = tangent_constants(&p);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-10 * y.abs().max(x.abs());
        assert!(close(t.a[0], 2.0 * z0 * w.powi(3) * l1 * l2 * (l1 + l2)));
        assert!(close(t.a[1], 2.0 * z0 * w * l1));
        assert!(close(t.a[2], z0 * z0 * w * w * (l1 + l2).powi(2) - (w * w * l1 * l2).powi(2)));
        assert!(close(t.a[3], z0 * z0 - w * w * l1 * l1));
        assert!(close(t.b[0], -4.0 * z0 * w * l1 * l2 - 2.0 * z0 * w * l1 * l1));
        assert!(close(t.b[1], 2.0 * l1 * l1 * l2 * w * w - 2.0 * z0 * z0 * (l1 + l2)));
        assert!(close(t.c[0], 2.0 * z0 * l1 / w));
        assert!(close(t.c[1], z0 * z0 / (w * w) - l1 * l1));
    }

    #[test]
    fn capacitance_roundtrip_and_singular_phase() {
        let p = CircuitParams::paper_default();
        let half_pi = PI / 2.0;
        for &(r, phi) in &[
            (-5.0, PI / 3.0),
            (-5.0, half_pi + 1e-3),
            (-5.0, half_pi - 1e-3),
            (-5.0, half_pi),
            (-2.0, 1.5 * PI),
        ] {
            let c = phase_capacitance(&p, r, phi).unwrap();
            let g = reflection_coeff(&p, &cell(r, c)).unwrap();
            assert!(wrap_angle(g.arg() - phi).abs() < 1e-6, "phi = {phi}");
        }
    }

    #[test]
    fn capacitance_range_is_enforced() {
        let p = CircuitParams::paper_default();
        // Phase 120° needs roughly 0.6 pF, below the nominal range.
        let phi = 120f64.to_radians();
        assert!(phase_capacitance(&p, -5.0, phi).is_ok());
        assert!(matches!(
            capacitance_for_phase(&p, -5.0, phi),
            Err(Error::CapacitanceRange { .. })
        ));
    }

    #[test]
    fn resistance_range_boundary() {
        let p = CircuitParams::paper_default();
        for k in 0..36 {
            let phi = (k as f64 + 0.37) * 10f64.to_radians();
            let f = resistance_range(&p, phi).unwrap();
            assert!(f > 0.0);
            let q = phase_quadratic(&p, f, phi);
            let scale = q.b * q.b + (4.0 * q.a * q.c).abs();
            assert!(q.discriminant().abs() <= 1e-6 * scale);
            assert!(phase_quadratic(&p, 0.99 * f, phi).discriminant() >= 0.0);
            assert!(phase_quadratic(&p, 1.01 * f, phi).discriminant() < 0.0);
            assert!(phase_capacitance(&p, -1.01 * f, phi).is_err());
        }
    }

    #[test]
    fn fig2_envelope_covers_band() {
        let p = CircuitParams::fig2();
        let min_f = (0..3600)
            .map(|k| resistance_range(&p, k as f64 * 2.0 * PI / 3600.0).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(min_f >= 3.7, "{min_f}");
    }

    #[test]
    fn feasibility_of_parameter_sets() {
        assert!(feasibility_condition(&CircuitParams::paper_default()));
        assert!(feasibility_condition(&CircuitParams::fig2()));
        // The discriminant collapses to -64·L1⁸·Z0⁴·ω⁴, negative for every
        // positive parameter set, so scaled sets stay feasible.
        for &(sl1, sl2, sz) in &[(1.0, 1.0, 1.0), (1.0, 1000.0, 1.0), (10.0, 0.1, 0.5), (0.2, 5.0, 3.0)] {
            let p = CircuitParams {
                l1: 4.5e-9 * sl1,
                l2: 0.7e-9 * sl2,
                z0: 377.0 * sz,
                ..CircuitParams::paper_default()
            };
            let (disc, _) = feasibility_discriminant(&p);
            let closed = -64.0 * p.l1.powi(8) * p.z0.powi(4) * p.omega.powi(4);
            assert_relative_eq!(disc, closed, max_relative = 1e-6);
            assert!(feasibility_condition(&p));
        }
        let bad = CircuitParams {
            l2: -0.7e-9,
            ..CircuitParams::paper_default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn exact_bounds_consistency() {
        let p = CircuitParams::paper_default();
        let phi = 300f64.to_radians();
        let b = exact_amplitude_bounds(&p, phi, M_BAND).unwrap();
        assert!(b.alpha_min <= b.alpha_max);
        let g = reflection_coeff(&p, &cell(b.r_min, b.c_at_alpha_max)).unwrap();
        assert_relative_eq!(g.norm(), b.alpha_max, max_relative = 1e-12);
        // Tangent-form amplitude agrees with |γ| away from tan singularities.
        let z = impedance(&p, &cell(b.r_min, b.c_at_alpha_max)).unwrap();
        assert_relative_eq!(amplitude_from_impedance(&p, z, phi), b.alpha_max, max_relative = 1e-9);
    }

    #[test]
    fn gamma_inversion_cases() {
        let p = CircuitParams::paper_default();
        let s = circuit_from_gamma(&p, C64::new(0.0, 0.0)).unwrap();
        let z = impedance(&p, &s).unwrap();
        // γ = 0 maps to a matched load (the recovered C takes |Im X|).
        let x = series_reactance_from_gamma(&p, C64::new(0.0, 0.0)).unwrap();
        let j = C64::i();
        let zx = j * p.omega * p.l1 * (j * p.omega * p.l2 + x) / (j * p.omega * (p.l1 + p.l2) + x);
        assert!((zx - p.z0).norm() < 1e-9 * p.z0);
        if x.im < 0.0 {
            assert!((z - p.z0).norm() < 1e-9 * p.z0);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c = 0.5e-12 + 6e-12 * rng.random::<f64>();
            let g = reflection_coeff(&p, &cell(p.r_passive, c)).unwrap();
            let back = circuit_from_gamma(&p, g).unwrap();
            assert!(back.resistance >= 0.0);
            assert_relative_eq!(back.capacitance, c, max_relative = 1e-9);
        }
    }
}
