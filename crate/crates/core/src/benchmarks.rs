//! Comparison schemes: the decoupled design without phase-amplitude
//! coupling, and complexity-matched GA and PSO searches over circuit values
//! and the precoder.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{lmmse_combiner, rate_lmmse, MimoChannels, ScenarioConfig};
use crate::circuit::{
    phase_capacitance, power_consumption, reflection_coeff, resistance_for_power,
    resistance_range, CellState,
};
use crate::error::{Error, Result};
use crate::numerics::{wrap_phase, CMat, C64};
use crate::opt_ao::{frobenius_quadratic, phases_of, power_repair_loop, rmo_phase_opt, PhaseObjective};
use crate::opt_do::{do_amplitude_max, transceiver, DoDesign, DoOptions};
use crate::reflection::{phasors, RISDesign};
use crate::surface::{PowerLine, Surface};

/// Population size and generation count of a metaheuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetaheuristicBudget {
    pub k: usize,
    pub p: usize,
}

impl MetaheuristicBudget {
    pub const DEFAULT_K: usize = 40;

    /// Cost of one fitness evaluation, `N·M_T·M_R + d·M_R³`.
    pub fn evaluation_cost(sc: &ScenarioConfig) -> f64 {
        (sc.n * sc.m_t * sc.m_r + sc.d * sc.m_r.pow(3)) as f64
    }

    /// Alternating-optimization cost `J_alt·j_P·N^3.5`.
    pub fn ao_cost(n: usize, j_alt: usize, j_p: usize) -> f64 {
        (j_alt * j_p) as f64 * (n as f64).powf(3.5)
    }

    /// `K = 40` and the generation count that matches the AO cost.
    pub fn matched(sc: &ScenarioConfig, j_alt: usize, j_p: usize) -> Self {
        Self::matched_with(sc, Self::DEFAULT_K, j_alt, j_p)
    }

    /// Population `k` and the generation count that matches the AO cost.
    pub fn matched_with(sc: &ScenarioConfig, k: usize, j_alt: usize, j_p: usize) -> Self {
        let total = Self::ao_cost(sc.n, j_alt, j_p) / Self::evaluation_cost(sc);
        let p = ((total / k as f64).round() as usize).max(1);
        Self { k, p }
    }

    /// `K·P·(N·M_T·M_R + d·M_R³)`.
    pub fn cost(&self, sc: &ScenarioConfig) -> f64 {
        (self.k * self.p) as f64 * Self::evaluation_cost(sc)
    }
}

/// Decoupled design that ignores the phase dependence of the amplitude band:
/// phases maximize the channel energy with every element at a fixed
/// amplitude, amplitudes are allotted over phase-independent ranges, and
/// the result is then clamped to what the cells actually realize.
pub fn run_paido(
    sc: &ScenarioConfig,
    ch: &MimoChannels,
    surface: &Surface,
    phi0: &[f64],
    opts: &DoOptions,
) -> Result<DoDesign> {
    let n = surface.len();
    let ranges: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let f = surface.fit(k);
            (f.delta_min, f.beta_max)
        })
        .collect();
    let (t, q) = frobenius_quadratic(ch);
    let top: Vec<f64> = ranges.iter().map(|r| r.1).collect();
    let obj = PhaseObjective::linear(t, q, &top);
    let phi = phases_of(&rmo_phase_opt(&obj, &phasors(phi0), &opts.rmo).phasors);

    let true_lines = surface.power_lines(&phi)?;
    let (p_lo, p_hi) = {
        let (r_lo, r_hi) = surface.params.diode_band();
        (
            power_consumption(r_hi, &surface.params)?,
            power_consumption(r_lo, &surface.params)?,
        )
    };
    let flat: Vec<PowerLine> = (0..n)
        .map(|k| {
            let (l, u) = ranges[k];
            if surface.active_mask[k] {
                PowerLine {
                    p_min: p_lo,
                    p_max: p_hi,
                    alpha_min: l,
                    alpha_max: u,
                    slope: if u > l { (p_hi - p_lo) / (u - l) } else { 0.0 },
                }
            } else {
                PowerLine::passive(l, u)
            }
        })
        .collect();
    let outcome = power_repair_loop(surface, &phi, &true_lines, sc.p_ris, opts.max_repair, |budget| {
        let alpha = do_amplitude_max(&flat, budget)?;
        Ok(alpha
            .iter()
            .zip(&true_lines)
            .map(|(a, l)| a.clamp(l.alpha_min, l.alpha_max))
            .collect())
    })?;
    transceiver(sc, ch, outcome.design, outcome.passes, opts.thermal_only_gains)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchDesign {
    pub v: CMat,
    pub w: CMat,
    pub design: RISDesign,
    pub rate: f64,
    /// Best fitness after initialization and after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Box-normalized search space: per element a resistance and a
/// capacitance gene, then the real and imaginary parts of the precoder.
struct Encoding<'a> {
    surface: &'a Surface,
    sc: &'a ScenarioConfig,
    ch: &'a MimoChannels,
}

impl Encoding<'_> {
    fn dim(&self) -> usize {
        2 * self.surface.len() + 2 * self.sc.m_t * self.sc.d
    }

    fn decode(&self, x: &[f64]) -> (Vec<CellState>, CMat) {
        let n = self.surface.len();
        let p = &self.surface.params;
        let (r_lo, r_hi) = p.diode_band();
        let (c_lo, c_hi) = p.c_range;
        let cells = (0..n)
            .map(|k| CellState {
                resistance: if self.surface.active_mask[k] {
                    r_lo + x[k] * (r_hi - r_lo)
                } else {
                    p.r_passive
                },
                capacitance: c_lo + x[n + k] * (c_hi - c_lo),
            })
            .collect();
        let amp = self.sc.p_t.sqrt();
        let base = 2 * n;
        let v = CMat::from_fn(self.sc.m_t, self.sc.d, |i, j| {
            let g = base + 2 * (i * self.sc.d + j);
            C64::new((2.0 * x[g] - 1.0) * amp, (2.0 * x[g + 1] - 1.0) * amp)
        });
        (cells, v)
    }

    fn encode(&self, cells: &[CellState], v: &CMat, x: &mut [f64]) {
        let n = self.surface.len();
        let p = &self.surface.params;
        let (r_lo, r_hi) = p.diode_band();
        let (c_lo, c_hi) = p.c_range;
        for (k, c) in cells.iter().enumerate() {
            if self.surface.active_mask[k] {
                x[k] = ((c.resistance - r_lo) / (r_hi - r_lo)).clamp(0.0, 1.0);
            }
            x[n + k] = ((c.capacitance - c_lo) / (c_hi - c_lo)).clamp(0.0, 1.0);
        }
        let amp = self.sc.p_t.sqrt();
        let base = 2 * n;
        for i in 0..self.sc.m_t {
            for j in 0..self.sc.d {
                let g = base + 2 * (i * self.sc.d + j);
                x[g] = (0.5 * (v[(i, j)].re / amp + 1.0)).clamp(0.0, 1.0);
                x[g + 1] = (0.5 * (v[(i, j)].im / amp + 1.0)).clamp(0.0, 1.0);
            }
        }
    }

    /// Makes a candidate feasible: stable resistances for the realized
    /// phase, transmit power within budget, and surface draw within budget
    /// by easing the hungriest cells toward the least-power resistance.
    fn repair(&self, cells: &mut [CellState], v: &mut CMat) -> Result<()> {
        let p = &self.surface.params;
        let (_, r_hi) = p.diode_band();
        for (k, cell) in cells.iter_mut().enumerate() {
            if !self.surface.active_mask[k] {
                continue;
            }
            project_to_envelope(p, cell, r_hi)?;
        }
        let used = v.norm_squared();
        if used > self.sc.p_t {
            *v *= C64::from((self.sc.p_t / used).sqrt());
        }
        let mut draw: Vec<f64> = cells
            .iter()
            .map(|c| power_consumption(c.resistance, p))
            .collect::<Result<_>>()?;
        let mut excess = draw.iter().sum::<f64>() - self.sc.p_ris;
        if excess > 0.0 {
            let floor = power_consumption(r_hi, p)?;
            let mut order: Vec<usize> = (0..cells.len()).filter(|&k| self.surface.active_mask[k]).collect();
            order.sort_by(|&a, &b| draw[b].total_cmp(&draw[a]).then(a.cmp(&b)));
            for k in order {
                if excess <= 0.0 {
                    break;
                }
                let target = (draw[k] - excess).max(floor);
                // Keep the realized phase while the resistance eases.
                let phase = wrap_phase(reflection_coeff(p, &cells[k])?.arg());
                let mut r = resistance_for_power(target, p)?;
                while power_consumption(r, p)? > target && r < r_hi {
                    r = (r + 1e-12 * r.abs().max(1.0)).min(r_hi);
                }
                cells[k].resistance = r;
                if let Ok(c) = phase_capacitance(p, r, phase) {
                    cells[k].capacitance = c;
                }
                project_to_envelope(p, &mut cells[k], r_hi)?;
                let now = power_consumption(cells[k].resistance, p)?;
                excess -= draw[k] - now;
                draw[k] = now;
            }
        }
        if draw.iter().sum::<f64>() > self.sc.p_ris {
            return Err(Error::InfeasibleBudget {
                required: draw.iter().sum(),
                budget: self.sc.p_ris,
            });
        }
        Ok(())
    }

    /// Repairs `x` in place and returns its rate.
    fn evaluate(&self, x: &mut [f64]) -> Result<f64> {
        let (mut cells, mut v) = self.decode(x);
        self.repair(&mut cells, &mut v)?;
        self.encode(&cells, &v, x);
        let gamma: Vec<C64> = cells
            .iter()
            .map(|c| reflection_coeff(&self.surface.params, c))
            .collect::<Result<_>>()?;
        rate_lmmse(self.ch, &v, &gamma, self.sc)
    }

    fn finish(&self, x: &[f64], history: Vec<f64>, evaluations: usize) -> Result<SearchDesign> {
        let (mut cells, mut v) = self.decode(x);
        self.repair(&mut cells, &mut v)?;
        let design = self.surface.design_from_cells(cells)?;
        let rate = rate_lmmse(self.ch, &v, &design.gamma, self.sc)?;
        let w = lmmse_combiner(self.ch, &v, &design.gamma, self.sc)?;
        Ok(SearchDesign {
            v,
            w,
            design,
            rate,
            history,
            evaluations,
        })
    }
}

/// Pulls an active cell's resistance into `[−F(φ), r_hi]` for its realized
/// phase, re-solving the capacitance so the phase is kept.
fn project_to_envelope(p: &crate::circuit::CircuitParams, cell: &mut CellState, r_hi: f64) -> Result<()> {
    let phase = wrap_phase(reflection_coeff(p, cell)?.arg());
    let Ok(f) = resistance_range(p, phase) else {
        return Ok(());
    };
    let lo = (-f).min(r_hi);
    if cell.resistance < lo {
        cell.resistance = lo;
        if let Ok(c) = phase_capacitance(p, lo, phase) {
            cell.capacitance = c;
        }
    }
    Ok(())
}

fn random_population<R: Rng + ?Sized>(k: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..k).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
}

fn argmax(f: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in f.iter().enumerate() {
        if v > f[best] {
            best = i;
        }
    }
    best
}

/// Real-coded genetic algorithm: binary tournaments, per-gene blend
/// crossover, Gaussian mutation at rate `1/dim` with 5% spread, one elite.
pub fn run_ga<R: Rng + ?Sized>(
    sc: &ScenarioConfig,
    ch: &MimoChannels,
    surface: &Surface,
    budget: MetaheuristicBudget,
    rng: &mut R,
) -> Result<SearchDesign> {
    let enc = Encoding { surface, sc, ch };
    let dim = enc.dim();
    let k = budget.k.max(2);
    let mut pop = random_population(k, dim, rng);
    let mut fit: Vec<f64> = pop.iter_mut().map(|x| enc.evaluate(x)).collect::<Result<_>>()?;
    let mut evaluations = k;
    let mut history = vec![fit[argmax(&fit)]];
    let rate = 1.0 / dim as f64;
    for _ in 0..budget.p {
        let elite = argmax(&fit);
        let mut next = vec![pop[elite].clone()];
        let mut next_fit = vec![fit[elite]];
        while next.len() < k {
            let pick = |rng: &mut R| {
                let a = rng.random_range(0..k);
                let b = rng.random_range(0..k);
                if fit[a] >= fit[b] {
                    a
                } else {
                    b
                }
            };
            let (a, b) = (pick(rng), pick(rng));
            let mut child: Vec<f64> = (0..dim)
                .map(|g| {
                    let w: f64 = rng.random();
                    w * pop[a][g] + (1.0 - w) * pop[b][g]
                })
                .collect();
            for gene in child.iter_mut() {
                if rng.random::<f64>() < rate {
                    let z: f64 = rng.sample(StandardNormal);
                    *gene = (*gene + 0.05 * z).clamp(0.0, 1.0);
                }
            }
            next_fit.push(enc.evaluate(&mut child)?);
            next.push(child);
            evaluations += 1;
        }
        pop = next;
        fit = next_fit;
        history.push(fit[argmax(&fit)]);
    }
    let best = argmax(&fit);
    enc.finish(&pop[best], history, evaluations)
}

/// Global-best particle swarm with inertia 0.72 and acceleration 1.49.
pub fn run_pso<R: Rng + ?Sized>(
    sc: &ScenarioConfig,
    ch: &MimoChannels,
    surface: &Surface,
    budget: MetaheuristicBudget,
    rng: &mut R,
) -> Result<SearchDesign> {
    const INERTIA: f64 = 0.72;
    const ACCEL: f64 = 1.49;
    let enc = Encoding { surface, sc, ch };
    let dim = enc.dim();
    let k = budget.k.max(1);
    let mut pos = random_population(k, dim, rng);
    let mut vel: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| 0.2 * (rng.random::<f64>() - 0.5)).collect())
        .collect();
    let mut fit: Vec<f64> = pos.iter_mut().map(|x| enc.evaluate(x)).collect::<Result<_>>()?;
    let mut evaluations = k;
    let mut own_best = pos.clone();
    let mut own_fit = fit.clone();
    let mut g = argmax(&own_fit);
    let mut global = own_best[g].clone();
    let mut global_fit = own_fit[g];
    let mut history = vec![global_fit];
    for _ in 0..budget.p {
        for i in 0..k {
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = INERTIA * vel[i][d]
                    + ACCEL * r1 * (own_best[i][d] - pos[i][d])
                    + ACCEL * r2 * (global[d] - pos[i][d]);
                vel[i][d] = v.clamp(-1.0, 1.0);
                pos[i][d] = (pos[i][d] + vel[i][d]).clamp(0.0, 1.0);
            }
            fit[i] = enc.evaluate(&mut pos[i])?;
            evaluations += 1;
            if fit[i] > own_fit[i] {
                own_fit[i] = fit[i];
                own_best[i] = pos[i].clone();
            }
        }
        g = argmax(&own_fit);
        if own_fit[g] > global_fit {
            global_fit = own_fit[g];
            global = own_best[g].clone();
        }
        history.push(global_fit);
    }
    enc.finish(&global, history, evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channels;
    use crate::circuit::CircuitParams;
    use crate::opt_do::run_do;
    use crate::surface::validate_design;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk() -> ScenarioConfig {
        ScenarioConfig {
            m_t: 4,
            m_r: 4,
            d: 4,
            n: 16,
            n_act: 16,
            p_ris: 0.375,
            ..ScenarioConfig::paper_default()
        }
    }

    #[test]
    fn budget_matches_ao_cost() {
        for (n, m, d) in [(16, 4, 4), (64, 8, 8), (100, 8, 8), (144, 8, 8)] {
            let sc = ScenarioConfig {
                n,
                m_t: m,
                m_r: m,
                d,
                ..ScenarioConfig::paper_default()
            };
            let b = MetaheuristicBudget::matched(&sc, 20, 4);
            assert_eq!(b.k, 40);
            let target = MetaheuristicBudget::ao_cost(n, 20, 4);
            assert!((b.cost(&sc) / target - 1.0).abs() <= 0.1, "{n}: {b:?}");
        }
    }

    #[test]
    fn searches_are_elitist_and_feasible() {
        let sc = desk();
        let surface = Surface::new(CircuitParams::paper_default(), vec![true; sc.n]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = sample_channels(&sc, &mut rng);
        let budget = MetaheuristicBudget { k: 12, p: 15 };
        let ga = run_ga(&sc, &ch, &surface, budget, &mut rng).unwrap();
        let pso = run_pso(&sc, &ch, &surface, budget, &mut rng).unwrap();
        for out in [&ga, &pso] {
            assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
            assert!((out.rate - out.history.last().unwrap()).abs() <= 1e-9 * out.rate.max(1.0));
            let rep = validate_design(&surface, &out.design, &out.v, sc.p_t, sc.p_ris);
            assert!(rep.ok(), "{:?}", rep.violations);
        }
        assert_eq!(ga.evaluations, 12 + 15 * 11);
        assert_eq!(pso.evaluations, 12 * 16);
    }

    #[test]
    fn searches_are_deterministic() {
        let sc = desk();
        let surface = Surface::new(CircuitParams::paper_default(), vec![true; sc.n]).unwrap();
        let ch = sample_channels(&sc, &mut ChaCha8Rng::seed_from_u64(2));
        let budget = MetaheuristicBudget { k: 6, p: 4 };
        let a = run_pso(&sc, &ch, &surface, budget, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = run_pso(&sc, &ch, &surface, budget, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let a = run_ga(&sc, &ch, &surface, budget, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = run_ga(&sc, &ch, &surface, budget, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn paido_is_feasible_and_trails_do() {
        let sc = desk();
        let surface = Surface::new(CircuitParams::paper_default(), vec![true; sc.n]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut paido, mut dec) = (0.0, 0.0);
        for _ in 0..10 {
            let ch = sample_channels(&sc, &mut rng);
            let phi0: Vec<f64> = (0..sc.n).map(|_| rng.random::<f64>() * 6.283).collect();
            let a = run_paido(&sc, &ch, &surface, &phi0, &DoOptions::default()).unwrap();
            let b = run_do(&sc, &ch, &surface, &phi0, &DoOptions::default()).unwrap();
            let rep = validate_design(&surface, &a.design, &a.v, sc.p_t, sc.p_ris);
            assert!(rep.ok(), "{:?}", rep.violations);
            paido += a.rate;
            dec += b.rate;
        }
        assert!(paido <= dec, "{paido} vs {dec}");
    }

    #[test]
    fn clamping_shrinks_an_off_peak_element() {
        // One active element, phase fixed far from the amplitude peak: the
        // phase-independent range promises far more than the cell delivers.
        let mut sc = desk();
        sc.n = 1;
        sc.n_act = 1;
        sc.p_ris = 1.0;
        let surface = Surface::new(CircuitParams::paper_default(), vec![true]).unwrap();
        let f = *surface.fit(0);
        let phi = wrap_phase(-f.theta_rad + 2.0);
        let line = surface.power_lines(&[phi]).unwrap()[0];
        assert!(line.alpha_max < 0.5 * f.beta_max);
        let ch = sample_channels(&sc, &mut ChaCha8Rng::seed_from_u64(5));
        // Frozen phase: a zero-iteration search keeps the start.
        let opts = DoOptions {
            rmo: crate::opt_ao::RmoOptions {
                max_iters: 0,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = run_paido(&sc, &ch, &surface, &[phi], &opts).unwrap();
        let a = out.design.gamma[0].norm();
        assert!(a <= line.alpha_max + 1e-6);
        assert!(a < 0.5 * f.beta_max);
    }
}
