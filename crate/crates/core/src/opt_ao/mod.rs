//! Alternating optimization of the precoder, receiver auxiliaries, surface
//! phases and surface amplitudes.

pub mod amplitude;
pub mod phase;
pub mod precoder;

use rand::Rng;
use rand_distr::StandardNormal;

pub use crate::channel::lmmse_combiner;
pub use amplitude::{amplitude_qp, power_repair_loop, BoxHalfspaceQp, QpOptions, QpResult, RepairOutcome};
pub use phase::{
    build_phase_objective, frobenius_quadratic, phases_of, retract, rmo_phase_opt,
    surrogate_quadratic, tangent_project, ManifoldCost, PhaseObjective, RmoOptions, RmoResult,
};
pub use precoder::{precoder_update, surrogate_objective, update_auxiliaries, Auxiliaries, PrecoderUpdate};

use crate::channel::{rate_lmmse, MimoChannels, ScenarioConfig};
use crate::error::{Error, Result};
use crate::numerics::{bisect, CMat, C64};
use crate::reflection::{phasors, ReflectionTerms, RISDesign};
use crate::surface::Surface;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoOptions {
    /// Relative rate change below which the iterations stop.
    pub eps: f64,
    /// Maximum number of outer iterations.
    pub j_alt: usize,
    /// Cap on power-repair passes per iteration.
    pub max_repair: usize,
    pub rmo: RmoOptions,
    pub qp: QpOptions,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            j_alt: 20,
            max_repair: 8,
            rmo: RmoOptions::default(),
            qp: QpOptions::default(),
        }
    }
}

/// Starting point: precoder, phases and normalized amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct AoInit {
    pub v: CMat,
    pub phi: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    /// Realized surface for `(phi, alpha_bar)`, when already known.
    pub design: Option<RISDesign>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoOutput {
    pub v: CMat,
    pub w: CMat,
    pub design: RISDesign,
    pub rate: f64,
    /// Rate of the starting point (`-inf` if it violates the surface budget).
    pub init_rate: f64,
    /// Surface and transmit power of the starting point.
    pub init_power: (f64, f64),
    /// Rate of the realized design after each iteration.
    pub rate_history: Vec<f64>,
    /// Best rate seen up to and including each iteration.
    pub best_history: Vec<f64>,
    /// Surface and transmit power of the best iterate after each iteration.
    pub best_power_history: Vec<(f64, f64)>,
    pub iterations: usize,
    /// Power-repair passes used in each iteration.
    pub repair_passes: Vec<usize>,
}

/// Random starting point: uniform phases and normalized amplitudes, a
/// Gaussian precoder at full power. Amplitudes are shrunk by a common
/// factor if the surface budget is exceeded.
pub fn random_init<R: Rng + ?Sized>(
    surface: &Surface,
    sc: &ScenarioConfig,
    rng: &mut R,
) -> Result<AoInit> {
    let n = surface.len();
    let phi: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    let alpha_bar: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut v = CMat::from_fn(sc.m_t, sc.d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let p = v.norm_squared();
    if p > 0.0 {
        v *= C64::from((sc.p_t / p).sqrt());
    }
    let alpha_bar = fit_budget(surface, &phi, &alpha_bar, sc.p_ris)?;
    Ok(AoInit {
        v,
        phi,
        alpha_bar,
        design: None,
    })
}

/// Scales normalized amplitudes by the largest common factor that keeps
/// the realized design within `p_ris`.
pub fn fit_budget(surface: &Surface, phi: &[f64], alpha_bar: &[f64], p_ris: f64) -> Result<Vec<f64>> {
    let draw = |s: f64| -> Result<f64> {
        let ab: Vec<f64> = alpha_bar.iter().map(|a| a * s).collect();
        init_design(surface, phi, &ab)?.power(&surface.params)
    };
    if draw(1.0)? <= p_ris {
        return Ok(alpha_bar.to_vec());
    }
    if draw(0.0)? > p_ris {
        return Ok(vec![0.0; alpha_bar.len()]);
    }
    let s = bisect(
        |s| match draw(s) {
            Ok(w) => w - p_ris,
            Err(_) => f64::INFINITY,
        },
        0.0,
        1.0,
        1e-10,
    )?;
    let mut s = s;
    while s > 0.0 && draw(s)? > p_ris {
        s = (s - 1e-9).max(0.0);
    }
    Ok(alpha_bar.iter().map(|a| a * s).collect())
}

fn init_design(surface: &Surface, phi: &[f64], alpha_bar: &[f64]) -> Result<RISDesign> {
    let (l, u) = surface.amplitude_box(phi);
    let alpha: Vec<f64> = (0..phi.len())
        .map(|k| l[k] + alpha_bar[k].clamp(0.0, 1.0) * (u[k] - l[k]))
        .collect();
    surface.finalize(phi, &alpha)
}

/// Runs the alternating optimization from `init` and returns the best
/// realized iterate. Ties go to the earliest iterate.
pub fn run_ao(
    sc: &ScenarioConfig,
    ch: &MimoChannels,
    surface: &Surface,
    init: &AoInit,
    opts: &AoOptions,
) -> Result<AoOutput> {
    let n = surface.len();
    if ch.n() != n || init.phi.len() != n || init.alpha_bar.len() != n {
        return Err(Error::Dimension(format!(
            "surface of {n} elements, channel of {}, start of {}",
            ch.n(),
            init.phi.len()
        )));
    }
    let fits = surface.fits();
    let mut v = init.v.clone();
    let tx = v.norm_squared();
    if tx > sc.p_t {
        v *= C64::from((sc.p_t / tx).sqrt());
    }
    let mut design = match &init.design {
        Some(d) => d.clone(),
        None => init_design(surface, &init.phi, &init.alpha_bar)?,
    };
    let init_rate = if design.power(&surface.params)? <= sc.p_ris + 1e-9 {
        rate_lmmse(ch, &v, &design.gamma, sc)?
    } else {
        log::warn!("starting design exceeds the surface budget");
        f64::NEG_INFINITY
    };
    let init_power = (design.power(&surface.params)?, v.norm_squared());
    let mut best = (init_rate, v.clone(), design.clone());
    let mut prev = init_rate;
    let mut rate_history = Vec::new();
    let mut best_history = Vec::new();
    let mut best_power_history = Vec::new();
    let mut repair_passes = Vec::new();
    let mut iterations = 0;
    while iterations < opts.j_alt {
        let aux = update_auxiliaries(ch, &v, &design.gamma, sc)?;
        v = precoder_update(ch, &aux, &design.gamma, sc)?.v;
        let terms = ReflectionTerms::new(&fits, &design.alpha_bar)?;
        let obj = build_phase_objective(ch, &v, &aux, &terms, sc);
        let res = rmo_phase_opt(&obj, &phasors(&design.phi), &opts.rmo);
        let phi = phases_of(&res.phasors);
        let lines = surface.power_lines(&phi)?;
        let ph = phasors(&phi);
        let outcome = power_repair_loop(surface, &phi, &lines, sc.p_ris, opts.max_repair, |budget| {
            Ok(amplitude_qp(&obj, &ph, &lines, budget, &opts.qp)?.alpha)
        })?;
        design = outcome.design;
        repair_passes.push(outcome.passes);
        let rate = rate_lmmse(ch, &v, &design.gamma, sc)?;
        iterations += 1;
        rate_history.push(rate);
        if rate > best.0 {
            best = (rate, v.clone(), design.clone());
        }
        if let Some(&last) = best_history.last() {
            debug_assert!(best.0 >= last);
        }
        best_history.push(best.0);
        best_power_history.push((best.2.power(&surface.params)?, best.1.norm_squared()));
        let change = (rate - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
        prev = rate;
        if change <= opts.eps {
            break;
        }
    }
    let (rate, v, design) = best;
    let w = lmmse_combiner(ch, &v, &design.gamma, sc)?;
    Ok(AoOutput {
        v,
        w,
        design,
        rate,
        init_rate,
        init_power,
        rate_history,
        best_history,
        best_power_history,
        iterations,
        repair_passes,
    })
}
