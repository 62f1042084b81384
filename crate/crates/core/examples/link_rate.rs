//! Rate of a random surface configuration under the amplified-noise model,
//! with the LMMSE combiner and with a plain matched filter.

use active_ris::channel::{
    effective_channel, lmmse_combiner, rate_lmmse, sample_channels, spectral_efficiency,
    ScenarioConfig,
};
use active_ris::circuit::CircuitParams;
use active_ris::numerics::{CMat, C64};
use active_ris::reflection::amplitude_from_normalized;
use active_ris::surface::Surface;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> active_ris::Result<()> {
    let mut sc = ScenarioConfig::paper_default();
    sc.n = 16;
    sc.n_act = 16;
    sc.m_t = 4;
    sc.m_r = 4;
    sc.d = 4;
    println!("rho = {:.2} dB, transmit power {:.3e} W", sc.rho_db(), sc.p_t);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ch = sample_channels(&sc, &mut rng);
    let surface = Surface::new(CircuitParams::paper_default(), vec![true; sc.n])?;
    let phi: Vec<f64> = (0..sc.n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let v = CMat::identity(sc.m_t, sc.d) * C64::from((sc.p_t / sc.d as f64).sqrt());

    for alpha_bar in [0.0, 0.5, 1.0] {
        let alpha = (0..sc.n)
            .map(|k| amplitude_from_normalized(surface.fit(k), phi[k], alpha_bar))
            .collect::<active_ris::Result<Vec<f64>>>()?;
        let design = surface.finalize(&phi, &alpha)?;
        let gamma = &design.gamma;
        let w = lmmse_combiner(&ch, &v, gamma, &sc)?;
        let mf = effective_channel(&ch, gamma)? * &v;
        println!(
            "alpha_bar {alpha_bar:.1}: surface draw {:.3} W, rate {:.3}, LMMSE combiner {:.3}, matched filter {:.3} bps/Hz",
            design.power(&surface.params)?,
            rate_lmmse(&ch, &v, gamma, &sc)?,
            spectral_efficiency(&ch, &v, &w, gamma, &sc)?,
            spectral_efficiency(&ch, &v, &mf, gamma, &sc)?
        );
    }
    Ok(())
}
