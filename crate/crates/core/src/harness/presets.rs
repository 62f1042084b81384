//! Ready-made experiments for each figure, at desk or full scale.

use std::str::FromStr;

use super::config::{ExperimentSpec, Layout, Scheme, Sweep};
use crate::channel::ScenarioConfig;
use crate::circuit::CircuitParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 4×4 MIMO, 16 elements, 25 trials: seconds to minutes.
    Desk,
    /// 8×8 MIMO, 64 elements, 200 trials.
    Paper,
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(Error::Config(format!("unknown scale {s:?} (desk, paper)"))),
        }
    }
}

pub const PRESET_NAMES: [&str; 6] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// Amplitude bounds against phase for one circuit; no link simulation.
    AmplitudeCurves { circuit: CircuitParams, grid: usize },
    Experiment(Box<ExperimentSpec>),
}

/// Full-scale surface budget per element, used to scale desk budgets.
const BUDGET_PER_ELEMENT: f64 = 1.5 / 64.0;

fn scaled(scale: Scale) -> ExperimentSpec {
    let mut spec = ExperimentSpec::default();
    match scale {
        Scale::Paper => spec.trials = 200,
        Scale::Desk => {
            spec.trials = 25;
            spec.scenario = ScenarioConfig {
                m_t: 4,
                m_r: 4,
                d: 4,
                n: 16,
                n_act: 16,
                p_ris: BUDGET_PER_ELEMENT * 16.0,
                ..spec.scenario
            };
        }
    }
    spec
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step).round() as usize;
    (0..=k).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect()
}

pub fn fig_preset(name: &str, scale: Scale) -> Result<Preset> {
    let all = vec![Scheme::Ao, Scheme::Do, Scheme::Paido, Scheme::Ga, Scheme::Pso];
    let mut spec = scaled(scale);
    match name {
        "fig2" => {
            return Ok(Preset::AmplitudeCurves {
                circuit: CircuitParams::fig2(),
                grid: 3600,
            })
        }
        "fig3" => {
            let max = if scale == Scale::Desk { 20 } else { 60 };
            spec.schemes = vec![Scheme::Ao, Scheme::AoRandomInit];
            spec.sweep = Sweep::Iterations((0..=max).collect());
            spec.solver.ao.eps = 0.0;
        }
        "fig4" => {
            // Transmit power from −32.75 to 22.75 dBm.
            spec.schemes = all;
            spec.sweep = Sweep::RhoDb(grid(-50.0, 5.0, 5.0));
        }
        "fig5" => {
            spec.schemes = all;
            spec.scenario.set_rho_db(-30.0);
            spec.sweep = Sweep::RxDistance(vec![0.8, 1.6, 2.4, 3.2, 4.0]);
            spec.common_random_numbers = true;
        }
        "fig6" => {
            spec.schemes = vec![Scheme::Ao];
            let per = spec.scenario.n as f64 / 64.0;
            spec.sweep = Sweep::RisPower(grid(0.8, 1.7, 0.1).into_iter().map(|p| p * per).collect());
            spec.layouts = [0.7, 0.8, 0.9, 1.0].into_iter().map(Layout::Fraction).collect();
        }
        "fig7" => {
            spec.schemes = vec![Scheme::Ao];
            spec.scenario.p_ris = 0.9;
            spec.sweep = Sweep::Elements(vec![16, 25, 36, 49, 64, 81, 100, 121, 144]);
            spec.layouts = vec![
                Layout::AllActive,
                Layout::FullPowerMultiple(1.2),
                Layout::FullPowerMultiple(1.4),
            ];
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?} (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    }
    spec.validate()?;
    Ok(Preset::Experiment(Box::new(spec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::full_power_count;
    use approx::assert_relative_eq;

    fn experiment(name: &str, scale: Scale) -> ExperimentSpec {
        match fig_preset(name, scale).unwrap() {
            Preset::Experiment(s) => *s,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_presets_resolve() {
        for name in PRESET_NAMES {
            for scale in [Scale::Desk, Scale::Paper] {
                fig_preset(name, scale).unwrap();
            }
        }
        assert!(fig_preset("fig9", Scale::Desk).unwrap_err().is_config());
        assert!("huge".parse::<Scale>().is_err());
    }

    #[test]
    fn fig7_counts() {
        let spec = experiment("fig7", Scale::Paper);
        let fp = full_power_count(spec.scenario.p_ris, &spec.circuit).unwrap();
        assert!((33..=35).contains(&fp), "{fp}");
        let sc = spec.sweep.apply(&spec.scenario, 8);
        assert_eq!(sc.n, 144);
        let n12 = spec.layouts[1].active_count(&sc, &spec.circuit).unwrap();
        let n14 = spec.layouts[2].active_count(&sc, &spec.circuit).unwrap();
        assert_eq!(n12, (1.2 * fp as f64) as usize);
        assert_eq!(n14, (1.4 * fp as f64) as usize);
        let small = spec.sweep.apply(&spec.scenario, 2);
        assert_eq!(spec.layouts[1].active_count(&small, &spec.circuit).unwrap(), 36);
    }

    #[test]
    fn fig6_fig3_fig4_shapes() {
        let f6 = experiment("fig6", Scale::Paper);
        assert_eq!(f6.layouts.len(), 4);
        assert_eq!(f6.sweep.len(), 10);
        assert_relative_eq!(f6.sweep.value(0), 0.8);
        assert_relative_eq!(f6.sweep.value(9), 1.7);
        let f3 = experiment("fig3", Scale::Desk);
        assert_eq!(f3.schemes, vec![Scheme::Ao, Scheme::AoRandomInit]);
        assert_eq!(f3.sweep, Sweep::Iterations((0..=20).collect()));
        let f4 = experiment("fig4", Scale::Paper);
        let lo = f4.sweep.apply(&f4.scenario, 0);
        // The default link sits at ρ = −30 dB to within 0.01 dB.
        assert_relative_eq!(crate::numerics::watts_to_dbm(lo.p_t), -32.75, epsilon = 0.01);
        assert_eq!(f4.trials, 200);
    }
}
