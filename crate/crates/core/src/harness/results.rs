//! Result rows, CSV export and per-point summaries.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "trial,scheme,sweep_value,rate_bps_hz,ris_power_w,tx_power_w,iterations_used,wall_ms,seed";

/// Suffix marking a row whose solver failed; its numeric fields are NaN.
pub const ERROR_TAG: &str = "!error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: usize,
    pub scheme: String,
    pub sweep_value: f64,
    pub rate_bps_hz: f64,
    pub ris_power_w: f64,
    pub tx_power_w: f64,
    pub iterations_used: usize,
    pub wall_ms: f64,
    pub seed: u64,
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        self.scheme.ends_with(ERROR_TAG)
    }

    /// Scheme label without the error tag.
    pub fn label(&self) -> &str {
        self.scheme.strip_suffix(ERROR_TAG).unwrap_or(&self.scheme)
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(f))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {}", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn parse_csv(path: &Path) -> Result<Vec<ResultRow>> {
    read_csv(std::fs::File::open(path)?)
}

/// Statistics of one `(scheme, sweep_value)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub sweep_value: f64,
    /// Successful trials.
    pub trials: usize,
    pub errors: usize,
    pub mean_rate: f64,
    /// Sample standard deviation of the rate.
    pub std_rate: f64,
    /// Standard error of the mean rate.
    pub stderr_rate: f64,
    pub mean_ris_power_w: f64,
    pub mean_iterations: f64,
}

/// Groups rows by `(scheme, sweep_value)` in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::Config("nothing to summarize".into()));
    }
    let mut order: Vec<(String, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.label().to_owned(), r.sweep_value.to_bits());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let ok: Vec<&&ResultRow> = g.iter().filter(|r| !r.is_error()).collect();
            let k = ok.len();
            let mean = |f: &dyn Fn(&ResultRow) -> f64| {
                if k == 0 {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / k as f64
                }
            };
            let mean_rate = mean(&|r| r.rate_bps_hz);
            let std_rate = if k > 1 {
                (ok.iter().map(|r| (r.rate_bps_hz - mean_rate).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                scheme: key.0.clone(),
                sweep_value: f64::from_bits(key.1),
                trials: k,
                errors: g.len() - k,
                mean_rate,
                std_rate,
                stderr_rate: if k > 0 { std_rate / (k as f64).sqrt() } else { f64::NAN },
                mean_ris_power_w: mean(&|r| r.ris_power_w),
                mean_iterations: mean(&|r| r.iterations_used as f64),
            }
        })
        .collect())
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in summary {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean rate of `scheme` at `sweep_value`, if present.
pub fn mean_rate(summary: &[SummaryRow], scheme: &str, sweep_value: f64) -> Option<f64> {
    summary
        .iter()
        .find(|s| s.scheme == scheme && s.sweep_value == sweep_value)
        .map(|s| s.mean_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(trial: usize, scheme: &str, x: f64, rate: f64) -> ResultRow {
        ResultRow {
            trial,
            scheme: scheme.into(),
            sweep_value: x,
            rate_bps_hz: rate,
            ris_power_w: 0.5,
            tx_power_w: 1e-4,
            iterations_used: 3,
            wall_ms: 0.0,
            seed: 9,
        }
    }

    #[test]
    fn header_is_fixed() {
        let mut buf = Vec::new();
        write_csv(&[row(0, "AO", -30.0, 1.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_HEADER);
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![
            row(0, "AO", -30.0, 12.345678901234567),
            row(1, "DO", -30.0, 0.1 + 0.2),
            ResultRow {
                rate_bps_hz: f64::NAN,
                ..row(2, "GA!error", -20.0, 0.0)
            },
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[..2], rows[..2]);
        assert!(back[2].is_error() && back[2].rate_bps_hz.is_nan());
        assert_eq!(back[2].label(), "GA");
    }

    #[test]
    fn summary_statistics() {
        let rows = vec![row(0, "AO", 1.0, 2.0), row(1, "AO", 1.0, 4.0), row(2, "AO", 1.0, 9.0)];
        let s = summarize(&rows).unwrap();
        assert_eq!(s.len(), 1);
        assert_relative_eq!(s[0].mean_rate, 5.0);
        // Deviations −3, −1, 4: sample variance 26/2.
        assert_relative_eq!(s[0].std_rate, 13f64.sqrt());
        assert_relative_eq!(s[0].stderr_rate, (13.0f64 / 3.0).sqrt());

        let flat = vec![row(0, "DO", 1.0, 3.0), row(1, "DO", 1.0, 3.0)];
        assert_eq!(summarize(&flat).unwrap()[0].std_rate, 0.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn summary_groups_and_counts_errors() {
        let rows = vec![
            row(0, "AO", 1.0, 2.0),
            row(0, "DO", 1.0, 1.0),
            row(1, "AO", 1.0, 4.0),
            ResultRow {
                rate_bps_hz: f64::NAN,
                ..row(1, "DO!error", 1.0, 0.0)
            },
            row(0, "AO", 2.0, 5.0),
        ];
        let s = summarize(&rows).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!((s[1].scheme.as_str(), s[1].trials, s[1].errors), ("DO", 1, 1));
        assert_eq!(mean_rate(&s, "AO", 1.0), Some(3.0));
        assert_eq!(mean_rate(&s, "AO", 2.0), Some(5.0));
    }
}
