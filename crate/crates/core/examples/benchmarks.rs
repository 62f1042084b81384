//! Baselines on one channel: PAIDO and the GA/PSO searches at a budget
//! matched to the alternating optimizer.

use active_ris::benchmarks::{run_ga, run_paido, run_pso, MetaheuristicBudget};
use active_ris::channel::{sample_channels, ScenarioConfig};
use active_ris::circuit::CircuitParams;
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
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ch = sample_channels(&sc, &mut rng);
    let phi0: Vec<f64> = (0..sc.n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let opts = DoOptions::default();

    println!("DO     {:.3} bps/Hz", run_do(&sc, &ch, &surface, &phi0, &opts)?.rate);
    println!("PAIDO  {:.3} bps/Hz", run_paido(&sc, &ch, &surface, &phi0, &opts)?.rate);

    let budget = MetaheuristicBudget::matched(&sc, 20, 4);
    println!("population {}, generations {}", budget.k, budget.p);
    let ga = run_ga(&sc, &ch, &surface, budget, &mut rng)?;
    println!("GA     {:.3} bps/Hz after {} evaluations", ga.rate, ga.evaluations);
    let pso = run_pso(&sc, &ch, &surface, budget, &mut rng)?;
    println!("PSO    {:.3} bps/Hz after {} evaluations", pso.rate, pso.evaluations);
    Ok(())
}
