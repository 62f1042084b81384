//! Saved designs: JSON round trip and constraint re-checking.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::runner::TrialDesign;
use crate::circuit::{CellState, CircuitParams};
use crate::error::{Error, Result};
use crate::numerics::{CMat, C64};
use crate::surface::{validate_design, Surface, ValidationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedDesign {
    pub scheme: String,
    pub rate_bps_hz: f64,
    /// Transmit power budget (W).
    pub tx_budget_w: f64,
    /// Surface power budget (W).
    pub ris_budget_w: f64,
    pub circuit: CircuitParams,
    pub active_mask: Vec<bool>,
    pub cells: Vec<CellState>,
    /// Precoder rows as `[re, im]` pairs, one row per transmit antenna.
    pub precoder: Vec<Vec<[f64; 2]>>,
}

impl SavedDesign {
    pub fn from_trial(scheme: &str, t: &TrialDesign) -> Self {
        Self {
            scheme: scheme.to_owned(),
            rate_bps_hz: t.rate,
            tx_budget_w: t.scenario.p_t,
            ris_budget_w: t.scenario.p_ris,
            circuit: t.surface.params,
            active_mask: t.surface.active_mask.clone(),
            cells: t.design.cells.clone(),
            precoder: (0..t.v.nrows())
                .map(|i| (0..t.v.ncols()).map(|j| [t.v[(i, j)].re, t.v[(i, j)].im]).collect())
                .collect(),
        }
    }

    pub fn precoder_matrix(&self) -> Result<CMat> {
        let rows = self.precoder.len();
        let cols = self.precoder.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || self.precoder.iter().any(|r| r.len() != cols) {
            return Err(Error::Config("precoder must be a nonempty rectangular array".into()));
        }
        Ok(CMat::from_fn(rows, cols, |i, j| {
            let [re, im] = self.precoder[i][j];
            C64::new(re, im)
        }))
    }

    /// Re-derives the reflection vector from the cells and checks both
    /// power budgets, resistance bands and amplitude bounds.
    pub fn validate(&self) -> Result<ValidationReport> {
        if self.cells.len() != self.active_mask.len() {
            return Err(Error::Config(format!(
                "{} cells for a mask of {} elements",
                self.cells.len(),
                self.active_mask.len()
            )));
        }
        self.circuit.validate()?;
        let surface = Surface::new(self.circuit, self.active_mask.clone())?;
        let design = surface.design_from_cells(self.cells.clone())?;
        let v = self.precoder_matrix()?;
        Ok(validate_design(&surface, &design, &v, self.tx_budget_w, self.ris_budget_w))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
