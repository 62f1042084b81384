//! Alternating optimization started from the decoupled design and from a
//! random point.

use active_ris::channel::{sample_channels, ScenarioConfig};
use active_ris::circuit::CircuitParams;
use active_ris::opt_ao::{random_init, run_ao, AoOptions};
use active_ris::opt_do::{run_do, DoOptions};
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
    sc.p_ris = 0.375;

    let surface = Surface::new(CircuitParams::paper_default(), vec![true; sc.n])?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = sample_channels(&sc, &mut rng);
    let phi0: Vec<f64> = (0..sc.n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let opts = AoOptions { eps: 0.0, j_alt: 12, ..AoOptions::default() };

    let warm = run_do(&sc, &ch, &surface, &phi0, &DoOptions::default())?;
    let from_do = run_ao(&sc, &ch, &surface, &warm.ao_init(&sc), &opts)?;
    let from_random = run_ao(&sc, &ch, &surface, &random_init(&surface, &sc, &mut rng)?, &opts)?;

    println!("{:>4} {:>12} {:>12}", "iter", "from DO", "from random");
    for j in 0..opts.j_alt {
        let pick = |h: &[f64]| h.get(j).or(h.last()).copied().unwrap_or(f64::NAN);
        println!("{:>4} {:>12.4} {:>12.4}", j + 1, pick(&from_do.best_history), pick(&from_random.best_history));
    }
    println!(
        "repair passes per iteration: {:?}; surface draw {:.4} W of {} W",
        from_do.repair_passes,
        from_do.design.power(&surface.params)?,
        sc.p_ris
    );
    Ok(())
}
