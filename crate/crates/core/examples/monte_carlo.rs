//! Seeded Monte Carlo sweep from an inline TOML config; rows go to the CSV
//! named by the first argument, or stdout.

use active_ris::harness::{export_csv, run_experiment, summarize, write_csv, ExperimentSpec};

const CONFIG: &str = r#"
seed = 2024
trials = 4
schemes = ["AO", "DO", "PAIDO"]

[scenario]
tx_antennas = 4
rx_antennas = 4
streams = 4
elements = 16
active_elements = 16
ris_power = "375 mW"

[sweep]
kind = "rho"
values = ["-40 dB", "-30 dB", "-20 dB"]
"#;

fn main() -> active_ris::Result<()> {
    let spec = ExperimentSpec::from_toml(CONFIG)?;
    let rows = run_experiment(&spec)?;
    match std::env::args().nth(1) {
        Some(path) => export_csv(&rows, std::path::Path::new(&path))?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    for s in summarize(&rows)? {
        eprintln!(
            "{:<6} rho {:>6.1} dB  {:.3} +/- {:.3} bps/Hz",
            s.scheme, s.sweep_value, s.mean_rate, s.stderr_rate
        );
    }
    Ok(())
}
