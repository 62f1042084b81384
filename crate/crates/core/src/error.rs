use thiserror::Error;

/// Errors raised by the circuit model, the solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change on bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("capacitance {value:e} F outside [{lo:e}, {hi:e}] F")]
    CapacitanceRange { value: f64, lo: f64, hi: f64 },

    #[error("pole: {0}")]
    Pole(String),

    #[error("model inconsistency: {0}")]
    Model(String),

    #[error("RIS power budget infeasible: minimum draw {required:.6} W exceeds {budget:.6} W")]
    InfeasibleBudget { required: f64, budget: f64 },

    #[error("power repair did not converge within {0} passes")]
    PowerRepair(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by user-supplied configuration rather than a solver.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
