//! Receiver-side auxiliaries and the closed-form precoder update.

use crate::channel::{effective_channel, received_covariance, sinrs_with, MimoChannels, ScenarioConfig};
use crate::error::{Error, Result};
use crate::numerics::{bisect, hermitian_eig, solve_hpd, CMat, C64};

/// Auxiliary variables of the quadratic-transform rate surrogate:
/// one receive vector and one SINR weight per stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Auxiliaries {
    /// `M_R × d`.
    pub y: CMat,
    /// Per-stream weights, `σ_i ≥ 0`.
    pub sigma: Vec<f64>,
}

impl Auxiliaries {
    /// `Y·diag(1 + σ)`.
    pub fn weighted_y(&self) -> CMat {
        let mut ys = self.y.clone();
        for (i, mut col) in ys.column_iter_mut().enumerate() {
            col *= C64::from(1.0 + self.sigma[i]);
        }
        ys
    }
}

/// Optimal auxiliaries for fixed `(V, γ)`: `y_i = F⁻¹H̃v_i`, `σ_i = SINR_i`.
pub fn update_auxiliaries(
    ch: &MimoChannels,
    v: &CMat,
    gamma: &[C64],
    sc: &ScenarioConfig,
) -> Result<Auxiliaries> {
    let heff = effective_channel(ch, gamma)?;
    let f = received_covariance(ch, &heff, v, gamma, sc);
    let y = solve_hpd(&f, &(&heff * v));
    let sigma = sinrs_with(ch, &heff, v, gamma, sc);
    Ok(Auxiliaries { y, sigma })
}

/// Rate surrogate
/// `Σ log2(1+σ_i) − σ_i + (1+σ_i)(2Re[v_i^H H̃^H y_i] − y_i^H F y_i)`.
/// Equals the LMMSE rate at the optimal auxiliaries.
pub fn surrogate_objective(
    ch: &MimoChannels,
    v: &CMat,
    aux: &Auxiliaries,
    gamma: &[C64],
    sc: &ScenarioConfig,
) -> Result<f64> {
    let heff = effective_channel(ch, gamma)?;
    let f = received_covariance(ch, &heff, v, gamma, sc);
    let hv = &heff * v;
    let mut total = 0.0;
    for (i, &s) in aux.sigma.iter().enumerate() {
        let yi = aux.y.column(i);
        let cross = (yi.adjoint() * hv.column(i))[(0, 0)].re;
        let quad = (yi.adjoint() * &f * yi)[(0, 0)].re;
        total += (1.0 + s).log2() - s + (1.0 + s) * (2.0 * cross - quad);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderUpdate {
    pub v: CMat,
    /// Multiplier of the transmit-power constraint.
    pub lambda: f64,
}

/// Maximizes the surrogate over `V` subject to `Tr(V^H V) ≤ P_T`:
/// `V = (K + λI)⁻¹Z` with `K = H̃^H YΣY^H H̃`, `Z = H̃^H YΣ`, and `λ ≥ 0`
/// found by bisection when the unconstrained solution exceeds the budget.
pub fn precoder_update(
    ch: &MimoChannels,
    aux: &Auxiliaries,
    gamma: &[C64],
    sc: &ScenarioConfig,
) -> Result<PrecoderUpdate> {
    let heff = effective_channel(ch, gamma)?;
    let ys = aux.weighted_y();
    let z = heff.adjoint() * &ys;
    let k = heff.adjoint() * &ys * aux.y.adjoint() * &heff;
    let eig = hermitian_eig(&k)?;
    let g = eig.vectors.adjoint() * &z;
    let lam_max = eig.values.iter().copied().next().unwrap_or(0.0).max(0.0);
    let thr = 1e-12 * lam_max;
    // Directions outside the range of K carry no weight in Z.
    let modes: Vec<(f64, f64)> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > thr)
        .map(|(i, &l)| (l, g.row(i).norm_squared()))
        .collect();
    let power = |lambda: f64| -> f64 { modes.iter().map(|(l, w)| w / (l + lambda).powi(2)).sum() };
    let p_t = sc.p_t;
    let lambda = if lam_max <= 0.0 {
        0.0
    } else if power(0.0) <= p_t {
        0.0
    } else {
        let mut hi = z.norm() / p_t.sqrt();
        let mut widen = 0;
        while power(hi) > p_t {
            hi *= 2.0;
            widen += 1;
            if widen > 60 {
                return Err(Error::Bracket { lo: 0.0, hi });
            }
        }
        let t = bisect(|t| power(t * hi) / p_t - 1.0, 0.0, 1.0, 1e-15)?;
        t * hi
    };
    let mut scaled = g.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        if eig.values[i] > thr {
            row /= C64::from(eig.values[i] + lambda);
        } else {
            row.fill(C64::new(0.0, 0.0));
        }
    }
    let mut v = &eig.vectors * scaled;
    let used = v.norm_squared();
    if used > p_t {
        v *= C64::from((p_t / used).sqrt());
    }
    Ok(PrecoderUpdate { v, lambda })
}
