//! Fits the cosine amplitude model to the exact bounds and optionally
//! writes both curves to a CSV given as the first argument.

use active_ris::circuit::CircuitParams;
use active_ris::harness::{amplitude_curves, write_curves};
use active_ris::reflection::{fit_amplitude_model, ElementClass};

fn main() -> active_ris::Result<()> {
    let p = CircuitParams::paper_default();
    for class in [ElementClass::Active, ElementClass::Passive] {
        let f = fit_amplitude_model(&p, class, 3600)?;
        println!(
            "{class:?}: delta [{:.4}, {:.4}], beta [{:.4}, {:.4}], theta {:.2} deg",
            f.delta_min,
            f.delta_max,
            f.beta_min,
            f.beta_max,
            f.theta_rad.to_degrees()
        );
    }

    let (fit, points) = amplitude_curves(&CircuitParams::fig2(), 3600)?;
    let (mut worst_lo, mut worst_hi) = (0.0f64, 0.0f64);
    for pt in points.iter().filter(|pt| pt.exact_max.is_finite()) {
        worst_lo = worst_lo.max((pt.exact_min - pt.fit_min).abs());
        worst_hi = worst_hi.max((pt.exact_max - pt.fit_max).abs());
    }
    println!(
        "low-R0 circuit: peak {:.3}, worst fit error {worst_lo:.4} (lower) {worst_hi:.4} (upper)",
        fit.beta_max
    );

    if let Some(path) = std::env::args().nth(1) {
        write_curves(&points, std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
