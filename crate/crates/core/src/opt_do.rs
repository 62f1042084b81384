//! Single-pass decoupled design: phases maximize the cascaded channel
//! energy, amplitudes are pushed as high as the surface budget allows, and
//! the link is then diagonalized by SVD with waterfilled stream powers.

use crate::channel::{effective_channel, scale_columns, spectral_efficiency, MimoChannels, ScenarioConfig};
use crate::error::{Error, Result};
use crate::numerics::{bisect, svd, CMat, C64};
use crate::opt_ao::{frobenius_quadratic, phases_of, power_repair_loop, rmo_phase_opt, AoInit, PhaseObjective, RmoOptions};
use crate::reflection::{phasors, RISDesign, ReflectionTerms};
use crate::surface::{PowerLine, Surface};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoOptions {
    pub rmo: RmoOptions,
    /// Per-unit-power stream gains with thermal noise only, ignoring the
    /// amplified surface noise.
    pub thermal_only_gains: bool,
    pub max_repair: usize,
}

impl Default for DoOptions {
    fn default() -> Self {
        Self {
            rmo: RmoOptions::default(),
            thermal_only_gains: false,
            max_repair: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoDesign {
    /// `M_T × d_eff`, one column per stream with positive power.
    pub v: CMat,
    /// `M_R × d_eff`.
    pub w: CMat,
    pub design: RISDesign,
    /// Waterfilled powers of the first `d` eigenmodes.
    pub powers: Vec<f64>,
    pub rate: f64,
    pub repair_passes: usize,
    /// All `min(M_T, M_R)` right singular vectors, strongest first.
    pub modes: CMat,
}

impl DoDesign {
    /// Starting point for the alternating optimizer. Streams that
    /// waterfilling switched off get a small share of power along the next
    /// eigenmodes so the optimizer can revive them.
    pub fn ao_init(&self, sc: &ScenarioConfig) -> AoInit {
        let active = self.v.ncols();
        let mut v = CMat::zeros(sc.m_t, sc.d);
        for i in 0..active.min(sc.d) {
            v.set_column(i, &self.v.column(i));
        }
        if active < sc.d {
            let share = 0.01 * sc.p_t / sc.d as f64;
            for i in active..sc.d {
                if i < self.modes.ncols() {
                    v.set_column(i, &(self.modes.column(i) * C64::from(share.sqrt())));
                }
            }
            let used = v.norm_squared();
            if used > 0.0 {
                v *= C64::from((sc.p_t / used).sqrt());
            }
        }
        AoInit {
            v,
            phi: self.design.phi.clone(),
            alpha_bar: self.design.alpha_bar.clone(),
            design: Some(self.design.clone()),
        }
    }
}

/// Phases maximizing `‖H_d + H_2 Γ H_1‖_F²` with every element at its
/// largest modeled amplitude.
pub fn do_phase_opt(
    ch: &MimoChannels,
    surface: &Surface,
    phi0: &[f64],
    opts: &RmoOptions,
) -> Result<Vec<f64>> {
    let (t, q) = frobenius_quadratic(ch);
    let terms = ReflectionTerms::new(&surface.fits(), &vec![1.0; surface.len()])?;
    let obj = PhaseObjective::new(t, q, terms);
    let res = rmo_phase_opt(&obj, &phasors(phi0), opts);
    Ok(phases_of(&res.phasors))
}

/// Maximizes `Σα_n` over the box of each line subject to the linearized
/// draw `Σ y_n(α_n) ≤ budget`: start every element at its lower end and
/// raise them in order of increasing power per unit amplitude.
pub fn do_amplitude_max(lines: &[PowerLine], budget: f64) -> Result<Vec<f64>> {
    let need: f64 = lines.iter().map(|l| l.p_min).sum();
    if need > budget * (1.0 + 1e-12) {
        return Err(Error::InfeasibleBudget {
            required: need,
            budget,
        });
    }
    let mut alpha: Vec<f64> = lines.iter().map(|l| l.alpha_min).collect();
    let mut order: Vec<usize> = (0..lines.len()).collect();
    order.sort_by(|&i, &j| lines[i].slope.total_cmp(&lines[j].slope).then(i.cmp(&j)));
    let mut left = (budget - need).max(0.0);
    for n in order {
        let l = &lines[n];
        let span = (l.alpha_max - l.alpha_min).max(0.0);
        let cost = span * l.slope;
        if cost <= left {
            alpha[n] = l.alpha_max;
            left -= cost;
        } else {
            alpha[n] = l.alpha_min + left / l.slope;
            break;
        }
    }
    Ok(alpha)
}

/// Left/right singular vectors of the effective channel and per-unit-power
/// stream gains.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdStreams {
    /// `M_R × k`, `k = min(M_T, M_R)`.
    pub u_rx: CMat,
    /// `M_T × k`.
    pub u_tx: CMat,
    pub singular_values: Vec<f64>,
    /// SINR per unit transmit power of each mode.
    pub gains: Vec<f64>,
}

pub fn svd_precoder_combiner(
    ch: &MimoChannels,
    gamma: &[C64],
    sc: &ScenarioConfig,
    thermal_only: bool,
) -> Result<SvdStreams> {
    let heff = effective_channel(ch, gamma)?;
    let dec = svd(&heff);
    let ris = scale_columns(&ch.h2, gamma);
    let gains = (0..dec.singular_values.len())
        .map(|i| {
            let s = dec.singular_values[i];
            let mut noise = sc.thermal_noise();
            if !thermal_only {
                noise += sc.ris_noise() * (dec.u.column(i).adjoint() * &ris).norm_squared();
            }
            s * s / noise
        })
        .collect();
    Ok(SvdStreams {
        u_rx: dec.u,
        u_tx: dec.v,
        singular_values: dec.singular_values.iter().copied().collect(),
        gains,
    })
}

/// Powers `p_i = [μ − 1/g_i]⁺` with the water level `μ` set so that
/// `Σp_i = p_total`.
pub fn waterfill(gains: &[f64], p_total: f64) -> Result<Vec<f64>> {
    if gains.iter().any(|&g| !(g >= 0.0)) {
        return Err(Error::Domain("stream gains must be nonnegative".into()));
    }
    let alloc = |mu: f64| -> Vec<f64> {
        gains
            .iter()
            .map(|&g| if g > 0.0 { (mu - 1.0 / g).max(0.0) } else { 0.0 })
            .collect()
    };
    let Some(g_max) = gains.iter().copied().filter(|&g| g > 0.0).reduce(f64::max) else {
        return Ok(vec![0.0; gains.len()]);
    };
    let lo = 1.0 / g_max;
    let mut hi = lo + p_total;
    while alloc(hi).iter().sum::<f64>() < p_total {
        hi += hi;
    }
    let mu = bisect(|mu| alloc(mu).iter().sum::<f64>() - p_total, lo, hi, 1e-15 * hi)?;
    // Close the sum exactly on the active set.
    let active: Vec<usize> = (0..gains.len())
        .filter(|&i| gains[i] > 0.0 && mu - 1.0 / gains[i] > 0.0)
        .collect();
    let level = (p_total + active.iter().map(|&i| 1.0 / gains[i]).sum::<f64>()) / active.len() as f64;
    let mut p = vec![0.0; gains.len()];
    for &i in &active {
        p[i] = (level - 1.0 / gains[i]).max(0.0);
    }
    Ok(p)
}

/// Runs the decoupled design from starting phases `phi0`.
pub fn run_do(
    sc: &ScenarioConfig,
    ch: &MimoChannels,
    surface: &Surface,
    phi0: &[f64],
    opts: &DoOptions,
) -> Result<DoDesign> {
    let phi = do_phase_opt(ch, surface, phi0, &opts.rmo)?;
    finish_decoupled(sc, ch, surface, &phi, opts)
}

/// Amplitude, circuit and transceiver stages of the decoupled design at
/// fixed phases.
pub fn finish_decoupled(
    sc: &ScenarioConfig,
    ch: &MimoChannels,
    surface: &Surface,
    phi: &[f64],
    opts: &DoOptions,
) -> Result<DoDesign> {
    let lines = surface.power_lines(phi)?;
    let outcome = power_repair_loop(surface, phi, &lines, sc.p_ris, opts.max_repair, |budget| {
        do_amplitude_max(&lines, budget)
    })?;
    transceiver(sc, ch, outcome.design, outcome.passes, opts.thermal_only_gains)
}

/// SVD transceiver with waterfilling for a finalized surface.
pub fn transceiver(
    sc: &ScenarioConfig,
    ch: &MimoChannels,
    design: RISDesign,
    repair_passes: usize,
    thermal_only: bool,
) -> Result<DoDesign> {
    let streams = svd_precoder_combiner(ch, &design.gamma, sc, thermal_only)?;
    let d = sc.d.min(streams.gains.len());
    let powers = waterfill(&streams.gains[..d], sc.p_t)?;
    let active: Vec<usize> = (0..d).filter(|&i| powers[i] > 0.0).collect();
    let mut v = CMat::zeros(sc.m_t, active.len());
    let mut w = CMat::zeros(sc.m_r, active.len());
    for (k, &i) in active.iter().enumerate() {
        v.set_column(k, &(streams.u_tx.column(i) * C64::from(powers[i].sqrt())));
        w.set_column(k, &streams.u_rx.column(i));
    }
    let rate = if active.is_empty() {
        0.0
    } else {
        spectral_efficiency(ch, &v, &w, &design.gamma, sc)?
    };
    Ok(DoDesign {
        v,
        w,
        design,
        powers,
        rate,
        repair_passes,
        modes: streams.u_tx,
    })
}
