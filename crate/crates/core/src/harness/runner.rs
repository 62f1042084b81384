//! Seeded Monte Carlo runner.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

use super::config::{ExperimentSpec, Layout, Scheme, Sweep};
use super::results::{ResultRow, ERROR_TAG};
use crate::benchmarks::{run_ga, run_paido, run_pso, MetaheuristicBudget};
use crate::channel::{sample_channels, MimoChannels, ScenarioConfig};
use crate::error::{Error, Result};
use crate::numerics::CMat;
use crate::opt_ao::{random_init, run_ao, AoOutput};
use crate::opt_do::{run_do, DoDesign};
use crate::reflection::RISDesign;
use crate::surface::{validate_design, Surface};

const STREAM_CHANNEL: u64 = 0;
const STREAM_LAYOUT: u64 = 100;
const STREAM_START: u64 = 101;

/// Random stream of one `(seed, sweep point, trial, purpose)` tuple,
/// independent of execution order.
pub fn trial_rng(seed: u64, point: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (k, v) in [seed, point, trial, stream].into_iter().enumerate() {
        key[8 * k..8 * (k + 1)].copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Sweep-point coordinate of the random streams: shared by all points
/// under common random numbers.
fn stream_point(spec: &ExperimentSpec, point: usize) -> u64 {
    if spec.common_random_numbers {
        u64::MAX
    } else {
        point as u64
    }
}

/// Channel realization of `trial` at sweep point `point`.
pub fn trial_channels(spec: &ExperimentSpec, sc: &ScenarioConfig, point: usize, trial: usize) -> MimoChannels {
    let p = stream_point(spec, point);
    sample_channels(sc, &mut trial_rng(spec.seed, p, trial as u64, STREAM_CHANNEL))
}

/// One solver result before it becomes a row.
struct Solved {
    v: CMat,
    design: RISDesign,
    rate: f64,
    iterations: usize,
    /// Best rate and powers after each outer iteration, for iteration sweeps.
    readout: Option<AoOutput>,
}

impl Solved {
    fn from_do(d: &DoDesign) -> Self {
        Self {
            v: d.v.clone(),
            design: d.design.clone(),
            rate: d.rate,
            iterations: 1,
            readout: None,
        }
    }

    fn from_ao(out: AoOutput) -> Self {
        Self {
            v: out.v.clone(),
            design: out.design.clone(),
            rate: out.rate,
            iterations: out.iterations,
            readout: Some(out),
        }
    }
}

/// Row sort key: sweep point, trial, layout, scheme.
type Keyed = ((usize, usize, usize, usize), ResultRow);

/// Runs every `(sweep point, trial)` task on a pool of `spec.threads`
/// workers and returns rows in a fixed order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let base = Surface::new(spec.circuit, Vec::new())?;
    let points = match spec.sweep {
        Sweep::Iterations(_) => 1,
        _ => spec.sweep.len(),
    };
    let tasks: Vec<(usize, usize)> = (0..points)
        .flat_map(|i| (0..spec.trials).map(move |t| (i, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut rows: Vec<Keyed> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, t)| run_task(spec, &base, i, t))
            .collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();
    rows.sort_by_key(|(k, _)| *k);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// Randomness shared by every scheme of one `(sweep point, trial)`.
struct TrialSetup {
    sc: ScenarioConfig,
    ch: MimoChannels,
    /// Element order; the first `n_act` are active.
    order: Vec<usize>,
    /// Starting phases of the decoupled designs.
    phi0: Vec<f64>,
}

impl TrialSetup {
    fn new(spec: &ExperimentSpec, point: usize, trial: usize) -> Self {
        let sc = spec.sweep.apply(&spec.scenario, point);
        let ch = trial_channels(spec, &sc, point, trial);
        let mut order: Vec<usize> = (0..sc.n).collect();
        let sp = stream_point(spec, point);
        order.shuffle(&mut trial_rng(spec.seed, sp, trial as u64, STREAM_LAYOUT));
        let mut start_rng = trial_rng(spec.seed, sp, trial as u64, STREAM_START);
        let phi0 = (0..sc.n)
            .map(|_| start_rng.random::<f64>() * std::f64::consts::TAU)
            .collect();
        Self { sc, ch, order, phi0 }
    }

    /// Scenario and surface under `layout`.
    fn layout(&self, spec: &ExperimentSpec, base: &Surface, layout: &Layout) -> Result<(ScenarioConfig, Surface)> {
        let n_act = layout.active_count(&self.sc, &spec.circuit)?;
        let mut mask = vec![false; self.sc.n];
        for &k in &self.order[..n_act] {
            mask[k] = true;
        }
        Ok((ScenarioConfig { n_act, ..self.sc.clone() }, base.with_mask(mask)))
    }
}

/// Design of one scheme at one `(sweep point, trial, layout)`, validated
/// against both power constraints.
pub struct TrialDesign {
    pub scenario: ScenarioConfig,
    pub surface: Surface,
    pub v: CMat,
    pub design: RISDesign,
    pub rate: f64,
    pub iterations: usize,
}

/// Reruns a single cell of the experiment grid.
pub fn solve_trial(
    spec: &ExperimentSpec,
    point: usize,
    trial: usize,
    layout: usize,
    scheme: Scheme,
) -> Result<TrialDesign> {
    spec.validate()?;
    if point >= spec.sweep.len() || layout >= spec.layouts.len() {
        return Err(Error::Config(format!(
            "point {point} or layout {layout} out of range"
        )));
    }
    let base = Surface::new(spec.circuit, Vec::new())?;
    let setup = TrialSetup::new(spec, point, trial);
    let (sc, surface) = setup.layout(spec, &base, &spec.layouts[layout])?;
    let s = solve(spec, &sc, &setup.ch, &surface, &setup.phi0, scheme, point, trial, &mut None)?;
    validate_design(&surface, &s.design, &s.v, sc.p_t, sc.p_ris).into_result()?;
    Ok(TrialDesign {
        scenario: sc,
        surface,
        v: s.v,
        design: s.design,
        rate: s.rate,
        iterations: s.iterations,
    })
}

fn run_task(spec: &ExperimentSpec, base: &Surface, point: usize, trial: usize) -> Result<Vec<Keyed>> {
    let setup = TrialSetup::new(spec, point, trial);
    let (ch, phi0) = (&setup.ch, &setup.phi0);
    let mut out = Vec::new();
    for (li, layout) in spec.layouts.iter().enumerate() {
        let (sc, surface) = setup.layout(spec, base, layout)?;
        let mut decoupled: Option<std::result::Result<DoDesign, String>> = None;
        for (si, &scheme) in spec.schemes.iter().enumerate() {
            let label = if spec.layouts.len() > 1 {
                format!("{}@{}", scheme.name(), layout.label())
            } else {
                scheme.name().to_owned()
            };
            let clock = Instant::now();
            let solved = solve(spec, &sc, ch, &surface, phi0, scheme, point, trial, &mut decoupled)
                .and_then(|s| {
                    validate_design(&surface, &s.design, &s.v, sc.p_t, sc.p_ris).into_result()?;
                    Ok(s)
                });
            let wall_ms = if spec.timing {
                clock.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            let row = |x: f64, rate: f64, ris: f64, tx: f64, iters: usize| ResultRow {
                trial,
                scheme: label.clone(),
                sweep_value: x,
                rate_bps_hz: rate,
                ris_power_w: ris,
                tx_power_w: tx,
                iterations_used: iters,
                wall_ms,
                seed: spec.seed,
            };
            let failed = |x: f64, e: &Error| {
                log::warn!("{label} at {x}, trial {trial}: {e}");
                ResultRow {
                    scheme: format!("{label}{ERROR_TAG}"),
                    ..row(x, f64::NAN, f64::NAN, f64::NAN, 0)
                }
            };
            match &spec.sweep {
                Sweep::Iterations(caps) => {
                    for (ci, &cap) in caps.iter().enumerate() {
                        let r = match &solved {
                            Ok(s) => readout(s, &surface, cap)
                                .map(|(rate, ris, tx, it)| row(cap as f64, rate, ris, tx, it))
                                .unwrap_or_else(|e| failed(cap as f64, &e)),
                            Err(e) => failed(cap as f64, e),
                        };
                        out.push(((ci, trial, li, si), r));
                    }
                }
                _ => {
                    let x = spec.sweep.value(point);
                    let r = match &solved {
                        Ok(s) => match s.design.power(&surface.params) {
                            Ok(ris) => row(x, s.rate, ris, s.v.norm_squared(), s.iterations),
                            Err(e) => failed(x, &e),
                        },
                        Err(e) => failed(x, e),
                    };
                    out.push(((point, trial, li, si), r));
                }
            }
        }
    }
    Ok(out)
}

/// Result of an alternating run capped at `cap` outer iterations.
fn readout(s: &Solved, surface: &Surface, cap: usize) -> Result<(f64, f64, f64, usize)> {
    let Some(out) = &s.readout else {
        return Ok((s.rate, s.design.power(&surface.params)?, s.v.norm_squared(), s.iterations));
    };
    let used = cap.min(out.iterations);
    if used == 0 {
        if !out.init_rate.is_finite() {
            return Err(Error::Infeasible("starting point exceeds the surface budget".into()));
        }
        return Ok((out.init_rate, out.init_power.0, out.init_power.1, 0));
    }
    let (ris, tx) = out.best_power_history[used - 1];
    Ok((out.best_history[used - 1], ris, tx, used))
}

#[allow(clippy::too_many_arguments)]
fn solve(
    spec: &ExperimentSpec,
    sc: &ScenarioConfig,
    ch: &MimoChannels,
    surface: &Surface,
    phi0: &[f64],
    scheme: Scheme,
    point: usize,
    trial: usize,
    decoupled: &mut Option<std::result::Result<DoDesign, String>>,
) -> Result<Solved> {
    let settings = &spec.solver;
    let mut ao = settings.ao;
    if let Sweep::Iterations(caps) = &spec.sweep {
        ao.j_alt = caps.iter().copied().max().unwrap_or(0);
    }
    let mut rng = trial_rng(spec.seed, stream_point(spec, point), trial as u64, scheme.tag());
    let mut get_do = || -> Result<DoDesign> {
        decoupled
            .get_or_insert_with(|| run_do(sc, ch, surface, phi0, &settings.do_opts).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Infeasible)
    };
    Ok(match scheme {
        Scheme::Do => Solved::from_do(&get_do()?),
        Scheme::Ao => {
            let init = get_do()?.ao_init(sc);
            Solved::from_ao(run_ao(sc, ch, surface, &init, &ao)?)
        }
        Scheme::AoRandomInit => {
            let init = random_init(surface, sc, &mut rng)?;
            Solved::from_ao(run_ao(sc, ch, surface, &init, &ao)?)
        }
        Scheme::Paido => Solved::from_do(&run_paido(sc, ch, surface, phi0, &settings.do_opts)?),
        Scheme::Ga | Scheme::Pso => {
            let budget = MetaheuristicBudget::matched_with(
                sc,
                settings.population,
                settings.ao.j_alt,
                settings.budget_phase_iters,
            );
            let s = if scheme == Scheme::Ga {
                run_ga(sc, ch, surface, budget, &mut rng)?
            } else {
                run_pso(sc, ch, surface, budget, &mut rng)?
            };
            Solved {
                v: s.v,
                design: s.design,
                rate: s.rate,
                iterations: budget.p,
                readout: None,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::results::write_csv;

    fn tiny() -> ExperimentSpec {
        let mut spec = ExperimentSpec {
            sweep: Sweep::RhoDb(vec![-30.0, -20.0]),
            schemes: vec![Scheme::Ao, Scheme::Do, Scheme::Paido, Scheme::Ga],
            trials: 3,
            seed: 5,
            ..Default::default()
        };
        spec.scenario.m_t = 2;
        spec.scenario.m_r = 2;
        spec.scenario.d = 2;
        spec.scenario.n = 6;
        spec.scenario.n_act = 6;
        spec.scenario.p_ris = 0.15;
        spec.solver.ao.j_alt = 3;
        spec.solver.population = 6;
        spec
    }

    #[test]
    fn every_triple_appears_once_in_order() {
        let spec = tiny();
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 4);
        for (k, r) in rows.iter().enumerate() {
            let (point, rest) = (k / 12, k % 12);
            assert_eq!(r.sweep_value, spec.sweep.value(point));
            assert_eq!(r.trial, rest / 4);
            assert_eq!(r.label(), spec.schemes[rest % 4].name());
            assert!(!r.is_error());
            assert!(r.rate_bps_hz >= 0.0);
            assert!(r.ris_power_w <= 0.15 + 1e-9);
            assert_eq!(r.wall_ms, 0.0);
        }
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let mut spec = tiny();
        spec.threads = 1;
        let mut a = Vec::new();
        write_csv(&run_experiment(&spec).unwrap(), &mut a).unwrap();
        spec.threads = 4;
        let mut b = Vec::new();
        write_csv(&run_experiment(&spec).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn schemes_share_the_channel() {
        let spec = tiny();
        let sc = spec.sweep.apply(&spec.scenario, 1);
        let a = trial_channels(&spec, &sc, 1, 2);
        let b = trial_channels(&spec, &sc, 1, 2);
        assert_eq!(a, b);
        assert_ne!(a, trial_channels(&spec, &sc, 1, 1));
        assert_ne!(a.h1, trial_channels(&spec, &sc, 0, 2).h1);
        let common = ExperimentSpec {
            common_random_numbers: true,
            ..spec.clone()
        };
        assert_eq!(trial_channels(&common, &sc, 0, 2), trial_channels(&common, &sc, 1, 2));
    }

    #[test]
    fn iteration_sweep_reads_out_one_run() {
        let mut spec = tiny();
        spec.sweep = Sweep::Iterations(vec![0, 1, 2, 3]);
        spec.schemes = vec![Scheme::Ao, Scheme::AoRandomInit];
        spec.solver.ao.eps = 0.0;
        spec.trials = 2;
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 4 * 2 * 2);
        for t in 0..2 {
            for s in ["AO", "AO-random-init"] {
                let curve: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.trial == t && r.scheme == s)
                    .map(|r| r.rate_bps_hz)
                    .collect();
                assert_eq!(curve.len(), 4);
                assert!(curve.windows(2).all(|w| w[1] >= w[0]), "{curve:?}");
            }
        }
    }

    #[test]
    fn infeasible_layout_is_tagged_not_fatal() {
        let mut spec = tiny();
        spec.scenario.p_ris = 0.01;
        spec.layouts = vec![Layout::Scenario];
        spec.schemes = vec![Scheme::Do, Scheme::Ga];
        spec.trials = 1;
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.is_error() && r.rate_bps_hz.is_nan()));
    }
}
