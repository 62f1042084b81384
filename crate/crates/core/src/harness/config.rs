//! Experiment specification and its TOML form.

use serde::Deserialize;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::units::{parse_db, parse_quantity, Dim};
use crate::channel::{ScenarioConfig, SPEED_OF_LIGHT};
use crate::circuit::{power_consumption, CircuitParams};
use crate::error::{Error, Result};
use crate::numerics::{linear_to_db, watts_to_dbm};
use crate::opt_ao::AoOptions;
use crate::opt_do::DoOptions;

/// Solver compared in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Alternating optimization started from the decoupled design.
    Ao,
    /// Alternating optimization from a random start.
    AoRandomInit,
    Do,
    Paido,
    Ga,
    Pso,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Ao,
        Scheme::AoRandomInit,
        Scheme::Do,
        Scheme::Paido,
        Scheme::Ga,
        Scheme::Pso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ao => "AO",
            Scheme::AoRandomInit => "AO-random-init",
            Scheme::Do => "DO",
            Scheme::Paido => "PAIDO",
            Scheme::Ga => "GA",
            Scheme::Pso => "PSO",
        }
    }

    /// Stable tag for deriving per-scheme random streams.
    pub(crate) fn tag(self) -> u64 {
        match self {
            Scheme::Ao => 1,
            Scheme::AoRandomInit => 2,
            Scheme::Do => 3,
            Scheme::Paido => 4,
            Scheme::Ga => 5,
            Scheme::Pso => 6,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

/// Swept quantity and its values (SI units, `ρ` in dB).
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Cascaded SNR in dB; the transmit power is back-solved.
    RhoDb(Vec<f64>),
    /// Receiver distance in meters; the transmitter moves so that the
    /// cascaded pathloss stays fixed.
    RxDistance(Vec<f64>),
    /// Surface power budget in watts.
    RisPower(Vec<f64>),
    /// Total element count.
    Elements(Vec<usize>),
    /// Outer-iteration cap of the alternating optimization; one run per
    /// trial is read out at every cap.
    Iterations(Vec<usize>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::RhoDb(v) | Sweep::RxDistance(v) | Sweep::RisPower(v) => v.len(),
            Sweep::Elements(v) | Sweep::Iterations(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            Sweep::RhoDb(v) | Sweep::RxDistance(v) | Sweep::RisPower(v) => v[i],
            Sweep::Elements(v) | Sweep::Iterations(v) => v[i] as f64,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Sweep::RhoDb(_) => "rho",
            Sweep::RxDistance(_) => "d_rx_ris",
            Sweep::RisPower(_) => "ris_power",
            Sweep::Elements(_) => "elements",
            Sweep::Iterations(_) => "iterations",
        }
    }

    /// Scenario at sweep point `i`.
    pub fn apply(&self, base: &ScenarioConfig, i: usize) -> ScenarioConfig {
        let mut sc = base.clone();
        match self {
            Sweep::RhoDb(v) => sc.set_rho_db(v[i]),
            Sweep::RxDistance(v) => sc.set_rx_distance_keep_pathloss(v[i]),
            Sweep::RisPower(v) => sc.p_ris = v[i],
            Sweep::Elements(v) => {
                sc.n = v[i];
                sc.n_act = sc.n_act.min(sc.n);
            }
            Sweep::Iterations(_) => {}
        }
        sc
    }
}

/// Rule choosing how many elements are active at a sweep point. Active
/// elements are a random subset drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    /// The scenario's own active count.
    Scenario,
    /// Every element that the budget can keep active at minimum draw;
    /// any further elements are passive.
    AllActive,
    /// `round(f·N)` active elements.
    Fraction(f64),
    /// `min(N, ⌊k·N_fp⌋)` active elements, where `N_fp` is the number of
    /// elements the budget can run at full power.
    FullPowerMultiple(f64),
}

impl Layout {
    pub fn active_count(&self, sc: &ScenarioConfig, p: &CircuitParams) -> Result<usize> {
        Ok(match *self {
            Layout::Scenario => sc.n_act.min(sc.n),
            Layout::AllActive => {
                let (_, r_hi) = p.diode_band();
                let floor = power_consumption(r_hi, p)?;
                ((sc.p_ris / floor).floor() as usize).min(sc.n)
            }
            Layout::Fraction(f) => ((f * sc.n as f64).round() as usize).min(sc.n),
            Layout::FullPowerMultiple(k) => {
                let fp = full_power_count(sc.p_ris, p)?;
                ((k * fp as f64).floor() as usize).min(sc.n)
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            Layout::Scenario => "scenario".into(),
            Layout::AllActive => "all-active".into(),
            Layout::Fraction(f) => format!("fraction:{f}"),
            Layout::FullPowerMultiple(k) => format!("fp:{k}"),
        }
    }
}

impl FromStr for Layout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| Error::Config(format!("bad layout {s:?}")))
        };
        match s {
            "scenario" => Ok(Layout::Scenario),
            "all-active" => Ok(Layout::AllActive),
            _ => match s.split_once(':') {
                Some(("fraction", t)) => {
                    let f = num(t)?;
                    if f > 1.0 {
                        return Err(Error::Config(format!("active fraction {f} exceeds 1")));
                    }
                    Ok(Layout::Fraction(f))
                }
                Some(("fp", t)) => Ok(Layout::FullPowerMultiple(num(t)?)),
                _ => Err(Error::Config(format!(
                    "unknown layout {s:?} (scenario, all-active, fraction:<f>, fp:<k>)"
                ))),
            },
        }
    }
}

/// Number of elements the budget can run at the largest per-element draw.
pub fn full_power_count(p_ris: f64, p: &CircuitParams) -> Result<usize> {
    let (r_lo, _) = p.diode_band();
    Ok((p_ris / power_consumption(r_lo, p)?).floor() as usize)
}

/// Solver settings shared by every trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub ao: AoOptions,
    pub do_opts: DoOptions,
    /// Population size of GA and PSO.
    pub population: usize,
    /// Phase-step iteration count used to size the GA/PSO budget.
    pub budget_phase_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            ao: AoOptions::default(),
            do_opts: DoOptions::default(),
            population: 40,
            budget_phase_iters: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub circuit: CircuitParams,
    pub sweep: Sweep,
    pub schemes: Vec<Scheme>,
    pub layouts: Vec<Layout>,
    pub trials: usize,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub seed: u64,
    pub solver: SolverSettings,
    /// Draw each trial's random numbers (channel, layout, starting phases,
    /// solver streams) independently of the sweep point, so that all sweep
    /// points see the same realizations.
    pub common_random_numbers: bool,
    /// Record wall-clock time per row (breaks byte-identical reruns).
    pub timing: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let scenario = ScenarioConfig::paper_default();
        Self {
            sweep: Sweep::RhoDb(vec![scenario.rho_db()]),
            scenario,
            circuit: CircuitParams::paper_default(),
            schemes: vec![Scheme::Ao, Scheme::Do, Scheme::Paido, Scheme::Ga, Scheme::Pso],
            layouts: vec![Layout::Scenario],
            trials: 25,
            threads: 0,
            seed: 0,
            solver: SolverSettings::default(),
            common_random_numbers: false,
            timing: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.sweep.is_empty() {
            return bad("sweep has no values".into());
        }
        if self.schemes.is_empty() {
            return bad("no schemes selected".into());
        }
        if self.layouts.is_empty() {
            return bad("no layouts selected".into());
        }
        if self.solver.population < 2 {
            return bad("population must be at least 2".into());
        }
        self.circuit.validate()?;
        for i in 0..self.sweep.len() {
            let sc = self.sweep.apply(&self.scenario, i);
            sc.validate().map_err(|e| {
                Error::Config(format!("{} = {}: {e}", self.sweep.kind(), self.sweep.value(i)))
            })?;
        }
        let finite_positive = |v: &f64| v.is_finite() && *v > 0.0;
        match &self.sweep {
            Sweep::RxDistance(v) | Sweep::RisPower(v) if !v.iter().all(finite_positive) => {
                bad(format!("{} values must be positive", self.sweep.kind()))
            }
            Sweep::RhoDb(v) if !v.iter().all(|x| x.is_finite()) => bad("rho values must be finite".into()),
            Sweep::Elements(v) if v.contains(&0) => bad("element counts must be positive".into()),
            _ => Ok(()),
        }
    }

    /// Reads and validates a TOML file. Missing keys take the defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let spec = raw.resolve()?;
        spec.validate()?;
        Ok(spec)
    }

    /// TOML form of the experiment, readable by [`ExperimentSpec::from_toml`].
    pub fn to_toml(&self) -> String {
        let sc = &self.scenario;
        let c = &self.circuit;
        let list = |v: Vec<String>| format!("[{}]", v.join(", "));
        let q = |s: String| format!("\"{s}\"");
        let values = match &self.sweep {
            Sweep::RhoDb(v) => list(v.iter().map(|x| q(format!("{x} dB"))).collect()),
            Sweep::RxDistance(v) => list(v.iter().map(|x| q(format!("{x} m"))).collect()),
            Sweep::RisPower(v) => list(v.iter().map(|x| q(format!("{x} W"))).collect()),
            Sweep::Elements(v) | Sweep::Iterations(v) => list(v.iter().map(|x| x.to_string()).collect()),
        };
        let s = &self.solver;
        format!(
            "seed = {seed}\ntrials = {trials}\nthreads = {threads}\nschemes = {schemes}\n\
             common_random_numbers = {cc}\ntiming = {timing}\n\n\
             [scenario]\ntx_antennas = {m_t}\nrx_antennas = {m_r}\nstreams = {d}\nelements = {n}\n\
             active_elements = {n_act}\ntx_power = \"{p_t} dBm\"\nris_power = \"{p_ris} W\"\n\
             noise_power = \"{noise} dBm\"\nrx_noise_figure = \"{f_r} dB\"\nris_noise_figure = \"{f_s} dB\"\n\
             d_ris_tx = \"{d1} m\"\nd_rx_ris = \"{d2} m\"\nfrequency = \"{freq} Hz\"\n\n\
             [circuit]\nl1 = \"{l1} H\"\nl2 = \"{l2} H\"\nz0 = \"{z0} ohm\"\nfrequency = \"{cf} Hz\"\n\
             r0 = \"{r0} ohm\"\nv0 = \"{v0} V\"\nc_min = \"{cmin} F\"\nc_max = \"{cmax} F\"\n\
             r_passive = \"{rp} ohm\"\n\n\
             [sweep]\nkind = \"{kind}\"\nvalues = {values}\n\n\
             [layout]\nrules = {layouts}\n\n\
             [solver]\nj_alt = {j_alt}\neps = {eps:e}\nmax_repair = {rep}\npopulation = {pop}\n\
             budget_phase_iters = {jp}\n",
            seed = self.seed,
            trials = self.trials,
            threads = self.threads,
            schemes = list(self.schemes.iter().map(|k| q(k.name().into())).collect()),
            cc = self.common_random_numbers,
            timing = self.timing,
            m_t = sc.m_t,
            m_r = sc.m_r,
            d = sc.d,
            n = sc.n,
            n_act = sc.n_act,
            p_t = watts_to_dbm(sc.p_t),
            p_ris = sc.p_ris,
            noise = watts_to_dbm(sc.sigma2),
            f_r = linear_to_db(sc.f_r),
            f_s = linear_to_db(sc.f_s),
            d1 = sc.d_ris_tx,
            d2 = sc.d_rx_ris,
            freq = SPEED_OF_LIGHT / sc.wavelength,
            l1 = c.l1,
            l2 = c.l2,
            z0 = c.z0,
            cf = c.omega / std::f64::consts::TAU,
            r0 = c.r0,
            v0 = c.v0,
            cmin = c.c_range.0,
            cmax = c.c_range.1,
            rp = c.r_passive,
            kind = self.sweep.kind(),
            layouts = list(self.layouts.iter().map(|l| q(l.label())).collect()),
            j_alt = s.ao.j_alt,
            eps = s.ao.eps,
            rep = s.ao.max_repair,
            pop = s.population,
            jp = s.budget_phase_iters,
        )
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    trials: Option<usize>,
    threads: Option<usize>,
    schemes: Option<Vec<String>>,
    common_random_numbers: Option<bool>,
    timing: Option<bool>,
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    circuit: RawCircuit,
    sweep: Option<RawSweep>,
    layout: Option<RawLayout>,
    #[serde(default)]
    solver: RawSolver,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    tx_antennas: Option<usize>,
    rx_antennas: Option<usize>,
    streams: Option<usize>,
    elements: Option<usize>,
    active_elements: Option<usize>,
    tx_power: Option<String>,
    rho: Option<String>,
    ris_power: Option<String>,
    noise_power: Option<String>,
    rx_noise_figure: Option<String>,
    ris_noise_figure: Option<String>,
    d_ris_tx: Option<String>,
    d_rx_ris: Option<String>,
    frequency: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    l1: Option<String>,
    l2: Option<String>,
    z0: Option<String>,
    frequency: Option<String>,
    r0: Option<String>,
    v0: Option<String>,
    c_min: Option<String>,
    c_max: Option<String>,
    r_passive: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    kind: String,
    values: Vec<toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    rules: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    j_alt: Option<usize>,
    eps: Option<f64>,
    max_repair: Option<usize>,
    population: Option<usize>,
    budget_phase_iters: Option<usize>,
}

fn quantity(v: &Option<String>, dim: Dim, default: f64) -> Result<f64> {
    v.as_deref().map_or(Ok(default), |s| parse_quantity(s, dim))
}

fn text(v: &toml::Value, key: &str) -> Result<String> {
    v.as_str()
        .map(str::to_owned)
        .ok_or_else(|| Error::Config(format!("{key} values need unit suffixes, got {v}")))
}

fn count(v: &toml::Value, key: &str) -> Result<usize> {
    v.as_integer()
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| Error::Config(format!("{key} values must be nonnegative integers, got {v}")))
}

impl RawConfig {
    fn resolve(self) -> Result<ExperimentSpec> {
        let def = ExperimentSpec::default();
        let mut sc = def.scenario.clone();
        let r = &self.scenario;
        sc.m_t = r.tx_antennas.unwrap_or(sc.m_t);
        sc.m_r = r.rx_antennas.unwrap_or(sc.m_r);
        sc.d = r.streams.unwrap_or(sc.d);
        sc.n = r.elements.unwrap_or(sc.n);
        sc.n_act = r.active_elements.unwrap_or(if r.elements.is_some() { sc.n } else { sc.n_act });
        sc.p_ris = quantity(&r.ris_power, Dim::Power, sc.p_ris)?;
        sc.sigma2 = quantity(&r.noise_power, Dim::Power, sc.sigma2)?;
        sc.f_r = quantity(&r.rx_noise_figure, Dim::Ratio, sc.f_r)?;
        sc.f_s = quantity(&r.ris_noise_figure, Dim::Ratio, sc.f_s)?;
        sc.d_ris_tx = quantity(&r.d_ris_tx, Dim::Distance, sc.d_ris_tx)?;
        sc.d_rx_ris = quantity(&r.d_rx_ris, Dim::Distance, sc.d_rx_ris)?;
        if let Some(f) = &r.frequency {
            sc.wavelength = SPEED_OF_LIGHT / parse_quantity(f, Dim::Frequency)?;
        }
        match (&r.tx_power, &r.rho) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either tx_power or rho, not both".into()))
            }
            (Some(p), None) => sc.p_t = parse_quantity(p, Dim::Power)?,
            (None, Some(rho)) => sc.set_rho_db(parse_db(rho)?),
            (None, None) => {}
        }

        let c = &self.circuit;
        let d = def.circuit;
        let omega = match &c.frequency {
            Some(f) => std::f64::consts::TAU * parse_quantity(f, Dim::Frequency)?,
            None => d.omega,
        };
        let circuit = CircuitParams {
            l1: quantity(&c.l1, Dim::Inductance, d.l1)?,
            l2: quantity(&c.l2, Dim::Inductance, d.l2)?,
            z0: quantity(&c.z0, Dim::Resistance, d.z0)?,
            omega,
            r0: quantity(&c.r0, Dim::Resistance, d.r0)?,
            v0: quantity(&c.v0, Dim::Voltage, d.v0)?,
            c_range: (
                quantity(&c.c_min, Dim::Capacitance, d.c_range.0)?,
                quantity(&c.c_max, Dim::Capacitance, d.c_range.1)?,
            ),
            r_passive: quantity(&c.r_passive, Dim::Resistance, d.r_passive)?,
        };

        let sweep = match self.sweep {
            None => Sweep::RhoDb(vec![sc.rho_db()]),
            Some(s) => {
                let key = s.kind.as_str();
                match key {
                    "rho" => Sweep::RhoDb(s.values.iter().map(|v| parse_db(&text(v, key)?)).collect::<Result<_>>()?),
                    "d_rx_ris" => Sweep::RxDistance(
                        s.values
                            .iter()
                            .map(|v| parse_quantity(&text(v, key)?, Dim::Distance))
                            .collect::<Result<_>>()?,
                    ),
                    "ris_power" => Sweep::RisPower(
                        s.values
                            .iter()
                            .map(|v| parse_quantity(&text(v, key)?, Dim::Power))
                            .collect::<Result<_>>()?,
                    ),
                    "elements" => Sweep::Elements(s.values.iter().map(|v| count(v, key)).collect::<Result<_>>()?),
                    "iterations" => Sweep::Iterations(s.values.iter().map(|v| count(v, key)).collect::<Result<_>>()?),
                    other => {
                        return Err(Error::Config(format!(
                            "unknown sweep kind {other:?} (rho, d_rx_ris, ris_power, elements, iterations)"
                        )))
                    }
                }
            }
        };

        let schemes = match self.schemes {
            None => def.schemes.clone(),
            Some(v) => {
                let mut out: Vec<Scheme> = Vec::new();
                for s in v {
                    let k: Scheme = s.parse()?;
                    if !out.contains(&k) {
                        out.push(k);
                    }
                }
                out
            }
        };
        let layouts = match self.layout {
            None => def.layouts.clone(),
            Some(l) => l.rules.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        };

        let mut solver = def.solver;
        let s = &self.solver;
        solver.ao.j_alt = s.j_alt.unwrap_or(solver.ao.j_alt);
        solver.ao.eps = s.eps.unwrap_or(solver.ao.eps);
        if !(solver.ao.eps.is_finite() && solver.ao.eps >= 0.0) {
            return Err(Error::Config(format!("eps must be nonnegative, got {}", solver.ao.eps)));
        }
        solver.ao.max_repair = s.max_repair.unwrap_or(solver.ao.max_repair);
        solver.do_opts.max_repair = solver.ao.max_repair;
        if solver.ao.max_repair == 0 {
            return Err(Error::Config("max_repair must be at least 1".into()));
        }
        solver.population = s.population.unwrap_or(solver.population);
        solver.budget_phase_iters = s.budget_phase_iters.unwrap_or(solver.budget_phase_iters);

        Ok(ExperimentSpec {
            scenario: sc,
            circuit,
            sweep,
            schemes,
            layouts,
            trials: self.trials.unwrap_or(def.trials),
            threads: self.threads.unwrap_or(def.threads),
            seed: self.seed.unwrap_or(def.seed),
            solver,
            common_random_numbers: self.common_random_numbers.unwrap_or(def.common_random_numbers),
            timing: self.timing.unwrap_or(def.timing),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_file_gives_defaults() {
        let spec = ExperimentSpec::from_toml("").unwrap();
        assert_eq!(spec.scenario, ScenarioConfig::paper_default());
        assert_eq!(spec.circuit, CircuitParams::paper_default());
        assert_eq!(spec.scenario.m_t, 8);
        assert_eq!(spec.scenario.n, 64);
        assert_relative_eq!(spec.scenario.p_ris, 1.5);
        assert_relative_eq!(watts_to_dbm(spec.scenario.p_t), -12.75, epsilon = 1e-12);
        assert_eq!(spec, ExperimentSpec::default());
    }

    #[test]
    fn rho_sweep_back_solves_transmit_power() {
        let spec = ExperimentSpec::from_toml("[sweep]\nkind = \"rho\"\nvalues = [\"-40 dB\", \"-20 dB\"]\n").unwrap();
        let lo = spec.sweep.apply(&spec.scenario, 0);
        let hi = spec.sweep.apply(&spec.scenario, 1);
        assert_relative_eq!(lo.rho_db(), -40.0, epsilon = 1e-9);
        assert_relative_eq!(hi.p_t / lo.p_t, 100.0, max_relative = 1e-12);
        // Inverse of ρ = P_T·PL/(σ²F_r).
        let expect = 1e-4 * lo.sigma2 * lo.f_r / lo.pathloss();
        assert_relative_eq!(lo.p_t, expect, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "[scenario]\nstreams = 9\n",
            "[scenario]\ntx_power = \"0.1\"\n",
            "[scenario]\nris_power = 1.5\n",
            "unknown = 3\n",
            "[scenario]\ncolor = \"red\"\n",
            "trials = 0\n",
            "schemes = [\"SA\"]\n",
            "[sweep]\nkind = \"rho\"\nvalues = []\n",
            "[sweep]\nkind = \"rho\"\nvalues = [-30]\n",
            "[sweep]\nkind = \"wind\"\nvalues = [\"1 m\"]\n",
            "[layout]\nrules = [\"fraction:1.5\"]\n",
            "[scenario]\nelements = 8\nactive_elements = 9\n",
        ] {
            let err = ExperimentSpec::from_toml(bad).unwrap_err();
            assert!(err.is_config(), "{bad}: {err}");
        }
    }

    #[test]
    fn toml_roundtrip() {
        let mut spec = ExperimentSpec {
            sweep: Sweep::RxDistance(vec![0.8, 2.4]),
            layouts: vec![Layout::AllActive, Layout::FullPowerMultiple(1.2), Layout::Fraction(0.7)],
            schemes: vec![Scheme::Ao, Scheme::AoRandomInit, Scheme::Ga],
            trials: 7,
            seed: 11,
            timing: true,
            ..Default::default()
        };
        spec.scenario.n = 16;
        spec.scenario.n_act = 12;
        spec.solver.ao.j_alt = 9;
        let back = ExperimentSpec::from_toml(&spec.to_toml()).unwrap();
        assert_eq!(back.sweep, spec.sweep);
        assert_eq!(back.layouts, spec.layouts);
        assert_eq!(back.schemes, spec.schemes);
        assert_eq!((back.trials, back.seed, back.timing), (7, 11, true));
        assert_eq!((back.scenario.n, back.scenario.n_act), (16, 12));
        assert_eq!(back.solver.ao.j_alt, 9);
        assert_relative_eq!(back.scenario.p_t, spec.scenario.p_t, max_relative = 1e-12);
        assert_relative_eq!(back.circuit.omega, spec.circuit.omega, max_relative = 1e-12);
        assert_relative_eq!(back.scenario.wavelength, spec.scenario.wavelength, max_relative = 1e-12);
    }

    #[test]
    fn layout_counts() {
        let p = CircuitParams::paper_default();
        let mut sc = ScenarioConfig::paper_default();
        sc.p_ris = 0.9;
        let fp = full_power_count(0.9, &p).unwrap();
        assert!((33..=35).contains(&fp), "{fp}");
        sc.n = 144;
        let all = Layout::AllActive.active_count(&sc, &p).unwrap();
        assert!(all < 144 && all >= 110, "{all}");
        assert_eq!(Layout::FullPowerMultiple(1.2).active_count(&sc, &p).unwrap(), (1.2 * fp as f64) as usize);
        sc.n = 36;
        assert_eq!(Layout::FullPowerMultiple(1.2).active_count(&sc, &p).unwrap(), 36);
        sc.n = 64;
        assert_eq!(Layout::Fraction(0.7).active_count(&sc, &p).unwrap(), 45);
        assert_eq!("fp:1.4".parse::<Layout>().unwrap(), Layout::FullPowerMultiple(1.4));
    }
}
