//! Quantities with explicit unit suffixes, e.g. `"-12.75 dBm"`, `"4 m"`.

use crate::error::{Error, Result};
use crate::numerics::{db_to_linear, dbm_to_watts};

/// Physical dimension a config value must carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    /// Watts; accepts `W`, `mW`, `dBm`.
    Power,
    /// Power ratio; accepts `dB` only, returned as a linear ratio.
    Ratio,
    /// Meters; accepts `m`, `cm`, `km`.
    Distance,
    /// Hertz; accepts `Hz`, `kHz`, `MHz`, `GHz`.
    Frequency,
    /// Henry; accepts `H`, `nH`, `pH`.
    Inductance,
    /// Farad; accepts `F`, `nF`, `pF`, `fF`.
    Capacitance,
    /// Ohm; accepts `ohm`, `Ω`, `mohm`.
    Resistance,
    /// Volt; accepts `V`, `mV`.
    Voltage,
}

fn split_quantity(s: &str) -> Option<(f64, &str)> {
    // Longest numeric prefix, so that "1e-3 W" keeps its exponent.
    let s = s.trim();
    let mut best = None;
    for (i, _) in s.char_indices().chain(std::iter::once((s.len(), ' '))) {
        if let Ok(v) = s[..i].trim().parse::<f64>() {
            best = Some((v, s[i..].trim()));
        }
    }
    best
}

/// Parses `"<number> <unit>"` into SI (linear for ratios).
pub fn parse_quantity(s: &str, dim: Dim) -> Result<f64> {
    let bad = || Error::Config(format!("cannot read {s:?} as a {dim:?} with a unit suffix"));
    let (v, unit) = split_quantity(s).ok_or_else(bad)?;
    if unit.is_empty() {
        return Err(Error::Config(format!(
            "{s:?} has no unit suffix (expected a {dim:?})"
        )));
    }
    let out = match (dim, unit) {
        (Dim::Power, "W") => v,
        (Dim::Power, "mW") => v * 1e-3,
        (Dim::Power, "dBm") => dbm_to_watts(v),
        (Dim::Ratio, "dB") => db_to_linear(v),
        (Dim::Distance, "m") => v,
        (Dim::Distance, "cm") => v * 1e-2,
        (Dim::Distance, "km") => v * 1e3,
        (Dim::Frequency, "Hz") => v,
        (Dim::Frequency, "kHz") => v * 1e3,
        (Dim::Frequency, "MHz") => v * 1e6,
        (Dim::Frequency, "GHz") => v * 1e9,
        (Dim::Inductance, "H") => v,
        (Dim::Inductance, "nH") => v * 1e-9,
        (Dim::Inductance, "pH") => v * 1e-12,
        (Dim::Capacitance, "F") => v,
        (Dim::Capacitance, "nF") => v * 1e-9,
        (Dim::Capacitance, "pF") => v * 1e-12,
        (Dim::Capacitance, "fF") => v * 1e-15,
        (Dim::Resistance, "ohm" | "Ohm" | "Ω") => v,
        (Dim::Resistance, "mohm") => v * 1e-3,
        (Dim::Voltage, "V") => v,
        (Dim::Voltage, "mV") => v * 1e-3,
        _ => return Err(bad()),
    };
    if !out.is_finite() {
        return Err(bad());
    }
    Ok(out)
}

/// Parses a `dB` quantity and returns it in dB.
pub fn parse_db(s: &str) -> Result<f64> {
    match split_quantity(s) {
        Some((v, "dB")) if v.is_finite() => Ok(v),
        _ => Err(Error::Config(format!("{s:?} must be given in dB"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reads_suffixed_values() {
        assert_relative_eq!(parse_quantity("1.5 W", Dim::Power).unwrap(), 1.5);
        assert_relative_eq!(parse_quantity("30 dBm", Dim::Power).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(parse_quantity("7 dB", Dim::Ratio).unwrap(), 10f64.powf(0.7));
        assert_relative_eq!(parse_quantity("4.5 nH", Dim::Inductance).unwrap(), 4.5e-9);
        assert_relative_eq!(parse_quantity("0.85pF", Dim::Capacitance).unwrap(), 0.85e-12);
        assert_relative_eq!(parse_quantity("2.4 GHz", Dim::Frequency).unwrap(), 2.4e9);
        assert_relative_eq!(parse_quantity("1e-3 W", Dim::Power).unwrap(), 1e-3);
        assert_relative_eq!(parse_quantity("377 Ω", Dim::Resistance).unwrap(), 377.0);
        assert_relative_eq!(parse_db("-30 dB").unwrap(), -30.0);
    }

    #[test]
    fn rejects_missing_or_wrong_units() {
        assert!(parse_quantity("1.5", Dim::Power).is_err());
        assert!(parse_quantity("4 m", Dim::Power).is_err());
        assert!(parse_quantity("abc W", Dim::Power).is_err());
        assert!(parse_db("-30").is_err());
        assert!(parse_db("-30 dBm").is_err());
    }
}
