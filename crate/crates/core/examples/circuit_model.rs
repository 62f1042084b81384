//! Tunnel-diode cell: operating band, power draw and the reflection
//! coefficient with its inverse.

use active_ris::circuit::{
    circuit_from_gamma, power_consumption, reflection_coeff, stable_resistance, stable_voltage,
    CellState, CircuitParams,
};

fn main() -> active_ris::Result<()> {
    let p = CircuitParams::paper_default();
    let (lo, hi) = p.diode_band();
    println!("diode band [{lo:.3}, {hi:.3}] ohm");

    println!("{:>5} {:>9} {:>10} {:>10}", "m", "V (V)", "R (ohm)", "P (mW)");
    for m in [1.0, 1.5, 2.0, 2.5, 3.0] {
        let r = stable_resistance(m, &p)?;
        println!(
            "{m:>5.1} {:>9.4} {r:>10.4} {:>10.3}",
            stable_voltage(m, &p)?,
            power_consumption(r, &p)? * 1e3
        );
    }

    println!("\n{:>8} {:>8} {:>10} {:>10}  recovered (R, C)", "R", "C (pF)", "|gamma|", "arg (deg)");
    for (r, c_pf) in [(-11.0, 1.0), (-6.0, 2.5), (-1.9, 5.0), (p.r_passive, 3.0)] {
        let cell = CellState { resistance: r, capacitance: c_pf * 1e-12 };
        let gamma = reflection_coeff(&p, &cell)?;
        let back = circuit_from_gamma(&p, gamma)?;
        println!(
            "{r:>8.2} {c_pf:>8.2} {:>10.4} {:>10.2}  ({:.4}, {:.4} pF)",
            gamma.norm(),
            gamma.arg().to_degrees(),
            back.resistance,
            back.capacitance * 1e12
        );
    }
    Ok(())
}
