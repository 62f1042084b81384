//! Link scenario, Rayleigh channel sampling, the RIS cascade and rate
//! evaluation.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{db_to_linear, dbm_to_watts, linear_to_db, solve_hpd, CMat, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Link-level parameters of one experiment point. Powers in watts, noise
/// figures linear, distances in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub m_t: usize,
    pub m_r: usize,
    /// Number of data streams.
    pub d: usize,
    /// Number of RIS elements.
    pub n: usize,
    /// Number of active (tunnel-diode) elements.
    pub n_act: usize,
    pub p_t: f64,
    pub p_ris: f64,
    /// Thermal noise power.
    pub sigma2: f64,
    /// Receiver noise figure.
    pub f_r: f64,
    /// RIS amplifier noise figure.
    pub f_s: f64,
    pub d_ris_tx: f64,
    pub d_rx_ris: f64,
    pub wavelength: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::paper_default()
    }
}

impl ScenarioConfig {
    /// 8×8 MIMO, 64 active elements, 2.4 GHz, 40 m / 4 m hops (ρ = −30 dB).
    pub fn paper_default() -> Self {
        Self {
            m_t: 8,
            m_r: 8,
            d: 8,
            n: 64,
            n_act: 64,
            p_t: dbm_to_watts(-12.75),
            p_ris: 1.5,
            sigma2: dbm_to_watts(-113.93),
            f_r: db_to_linear(7.0),
            f_s: db_to_linear(5.0),
            d_ris_tx: 40.0,
            d_rx_ris: 4.0,
            wavelength: SPEED_OF_LIGHT / 2.4e9,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m_t == 0 || self.m_r == 0 || self.n == 0 || self.d == 0 {
            return bad("antenna, stream and element counts must be positive".into());
        }
        if self.d > self.m_t.min(self.m_r) {
            return bad(format!(
                "d = {} exceeds min(M_T, M_R) = {}",
                self.d,
                self.m_t.min(self.m_r)
            ));
        }
        if self.n_act > self.n {
            return bad(format!("n_act = {} exceeds N = {}", self.n_act, self.n));
        }
        for (name, v) in [
            ("p_t", self.p_t),
            ("p_ris", self.p_ris),
            ("sigma2", self.sigma2),
            ("f_r", self.f_r),
            ("d_ris_tx", self.d_ris_tx),
            ("d_rx_ris", self.d_rx_ris),
            ("wavelength", self.wavelength),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.f_s.is_finite() && self.f_s >= 0.0) {
            return bad(format!("f_s must be nonnegative, got {}", self.f_s));
        }
        Ok(())
    }

    /// Free-space gains `(λ/4πd)²` of the TX→RIS and RIS→RX hops.
    pub fn hop_gains(&self) -> (f64, f64) {
        let g = |dist: f64| (self.wavelength / (4.0 * PI * dist)).powi(2);
        (g(self.d_ris_tx), g(self.d_rx_ris))
    }

    /// Cascaded pathloss of the TX→RIS→RX link.
    pub fn pathloss(&self) -> f64 {
        pathloss(self)
    }

    /// `10 log10(P_T·PL/(σ²F_r))`.
    pub fn rho_db(&self) -> f64 {
        linear_to_db(self.p_t * self.pathloss() / (self.sigma2 * self.f_r))
    }

    /// Back-solves the transmit power that gives cascaded SNR `rho_db`.
    pub fn set_rho_db(&mut self, rho_db: f64) {
        self.p_t = db_to_linear(rho_db) * self.sigma2 * self.f_r / self.pathloss();
    }

    /// Moves the receiver to `d_rx` and the transmitter so that the cascaded
    /// pathloss is unchanged.
    pub fn set_rx_distance_keep_pathloss(&mut self, d_rx: f64) {
        let product = self.d_ris_tx * self.d_rx_ris;
        self.d_rx_ris = d_rx;
        self.d_ris_tx = product / d_rx;
    }

    pub fn thermal_noise(&self) -> f64 {
        self.sigma2 * self.f_r
    }

    pub fn ris_noise(&self) -> f64 {
        self.sigma2 * self.f_s
    }
}

/// `λ⁴/(4π)⁴ · (d_ris_tx·d_rx_ris)⁻²`, the product of the two hop gains.
pub fn pathloss(sc: &ScenarioConfig) -> f64 {
    let (a, b) = sc.hop_gains();
    a * b
}

/// Direct, TX→RIS and RIS→RX channel matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoChannels {
    /// `M_R × M_T`.
    pub h_d: CMat,
    /// `N × M_T`.
    pub h1: CMat,
    /// `M_R × N`.
    pub h2: CMat,
}

impl MimoChannels {
    pub fn n(&self) -> usize {
        self.h1.nrows()
    }

    pub fn m_t(&self) -> usize {
        self.h1.ncols()
    }

    pub fn m_r(&self) -> usize {
        self.h2.nrows()
    }

    fn check(&self) -> Result<()> {
        if self.h2.ncols() != self.h1.nrows()
            || self.h_d.nrows() != self.h2.nrows()
            || self.h_d.ncols() != self.h1.ncols()
        {
            return Err(Error::Dimension(format!(
                "H_d {:?}, H_1 {:?}, H_2 {:?}",
                self.h_d.shape(),
                self.h1.shape(),
                self.h2.shape()
            )));
        }
        Ok(())
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Draws i.i.d. circularly-symmetric Rayleigh hops with per-hop free-space
/// variance; the direct link is blocked.
pub fn sample_channels<R: Rng + ?Sized>(sc: &ScenarioConfig, rng: &mut R) -> MimoChannels {
    let (g1, g2) = sc.hop_gains();
    let h1 = DMatrix::from_fn(sc.n, sc.m_t, |_, _| complex_gaussian(rng, g1));
    let h2 = DMatrix::from_fn(sc.m_r, sc.n, |_, _| complex_gaussian(rng, g2));
    MimoChannels {
        h_d: CMat::zeros(sc.m_r, sc.m_t),
        h1,
        h2,
    }
}

/// `H_d + H_2·diag(γ)·H_1`.
pub fn effective_channel(ch: &MimoChannels, gamma: &[C64]) -> Result<CMat> {
    ch.check()?;
    if gamma.len() != ch.n() {
        return Err(Error::Dimension(format!(
            "{} reflection coefficients for {} elements",
            gamma.len(),
            ch.n()
        )));
    }
    Ok(&ch.h_d + scale_columns(&ch.h2, gamma) * &ch.h1)
}

/// `A·diag(g)`.
pub fn scale_columns(a: &CMat, g: &[C64]) -> CMat {
    let mut out = a.clone();
    for (k, mut col) in out.column_iter_mut().enumerate() {
        col *= g[k];
    }
    out
}

/// `σ²F_s·H_2ΓΓ^H H_2^H`, the RIS amplifier noise seen at the receiver.
pub fn ris_noise_covariance(ch: &MimoChannels, gamma: &[C64], sc: &ScenarioConfig) -> CMat {
    let hg = scale_columns(&ch.h2, gamma);
    &hg * hg.adjoint() * C64::from(sc.ris_noise())
}

/// Noise-plus-interference covariance `F = H̃VV^H H̃^H + σ²F_s H_2ΓΓ^H H_2^H + σ²F_r I`.
pub fn received_covariance(
    ch: &MimoChannels,
    heff: &CMat,
    v: &CMat,
    gamma: &[C64],
    sc: &ScenarioConfig,
) -> CMat {
    let hv = heff * v;
    let mut f = &hv * hv.adjoint() + ris_noise_covariance(ch, gamma, sc);
    for k in 0..f.nrows() {
        f[(k, k)] += sc.thermal_noise();
    }
    f
}

fn check_precoder(ch: &MimoChannels, v: &CMat) -> Result<()> {
    if v.nrows() != ch.m_t() {
        return Err(Error::Dimension(format!(
            "precoder has {} rows for {} TX antennas",
            v.nrows(),
            ch.m_t()
        )));
    }
    Ok(())
}

/// Per-stream SINRs `a_i^H F_i⁻¹ a_i` under LMMSE reception.
pub fn sinrs(ch: &MimoChannels, v: &CMat, gamma: &[C64], sc: &ScenarioConfig) -> Result<Vec<f64>> {
    check_precoder(ch, v)?;
    let heff = effective_channel(ch, gamma)?;
    Ok(sinrs_with(ch, &heff, v, gamma, sc))
}

pub(crate) fn sinrs_with(
    ch: &MimoChannels,
    heff: &CMat,
    v: &CMat,
    gamma: &[C64],
    sc: &ScenarioConfig,
) -> Vec<f64> {
    let f = received_covariance(ch, heff, v, gamma, sc);
    let hv = heff * v;
    (0..v.ncols())
        .map(|i| {
            let a = hv.column(i).into_owned();
            let fi = &f - &a * a.adjoint();
            let x = solve_hpd(&fi, &CMat::from_column_slice(a.len(), 1, a.as_slice()));
            (a.adjoint() * x)[(0, 0)].re.max(0.0)
        })
        .collect()
}

/// Achievable rate (bps/Hz) with the LMMSE combiner.
pub fn rate_lmmse(ch: &MimoChannels, v: &CMat, gamma: &[C64], sc: &ScenarioConfig) -> Result<f64> {
    Ok(sinrs(ch, v, gamma, sc)?
        .into_iter()
        .map(|s| (1.0 + s).log2())
        .sum())
}

/// LMMSE combiner `W = F⁻¹H̃V`.
pub fn lmmse_combiner(
    ch: &MimoChannels,
    v: &CMat,
    gamma: &[C64],
    sc: &ScenarioConfig,
) -> Result<CMat> {
    check_precoder(ch, v)?;
    let heff = effective_channel(ch, gamma)?;
    let f = received_covariance(ch, &heff, v, gamma, sc);
    Ok(solve_hpd(&f, &(&heff * v)))
}

/// Spectral efficiency for an arbitrary combiner `W`.
pub fn spectral_efficiency(
    ch: &MimoChannels,
    v: &CMat,
    w: &CMat,
    gamma: &[C64],
    sc: &ScenarioConfig,
) -> Result<f64> {
    check_precoder(ch, v)?;
    if w.nrows() != ch.m_r() || w.ncols() != v.ncols() {
        return Err(Error::Dimension(format!(
            "combiner {:?} vs precoder {:?}",
            w.shape(),
            v.shape()
        )));
    }
    let heff = effective_channel(ch, gamma)?;
    let hv = &heff * v;
    let ris = scale_columns(&ch.h2, gamma);
    let mut rate = 0.0;
    for i in 0..v.ncols() {
        let wi = w.column(i);
        let wn = wi.norm_squared();
        if wn == 0.0 {
            continue;
        }
        let proj = wi.adjoint() * &hv;
        let signal = proj[(0, i)].norm_sqr();
        let interference: f64 = (0..v.ncols())
            .filter(|&j| j != i)
            .map(|j| proj[(0, j)].norm_sqr())
            .sum();
        let ris_noise = sc.ris_noise() * (wi.adjoint() * &ris).norm_squared();
        let noise = sc.thermal_noise() * wn;
        rate += (1.0 + signal / (interference + ris_noise + noise)).log2();
    }
    Ok(rate)
}

/// `Tr(V^H V)`.
pub fn transmit_power(v: &CMat) -> f64 {
    v.norm_squared()
}
