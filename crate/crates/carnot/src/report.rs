//! Report emission: pretty JSON documents and CSV tables of per-scale
//! blow-up values. Output is a pure function of the report structs — no
//! timestamps, hostnames or locale-dependent formatting — so equal seeds
//! and configs produce byte-identical files.

use crate::measure::BlowupReport;
use crate::Result;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes a report to `out`, or to stdout when no path is given.
pub fn write_report<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = to_json_string(value)?;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Per-scale blow-up table for external plotting.
pub fn blowup_csv(report: &BlowupReport) -> String {
    let mut out = String::from("t,sup_estimate,std_error\n");
    for row in &report.per_t {
        out.push_str(&format!("{},{},{}\n", row.t, row.sup_estimate, row.std_error));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Point;
    use crate::measure::BlowupSample;

    #[test]
    fn json_is_deterministic_and_newline_terminated() {
        #[derive(Serialize)]
        struct Demo {
            a: f64,
            b: Vec<u32>,
        }
        let d = Demo { a: 0.1 + 0.2, b: vec![3, 1] };
        let s1 = to_json_string(&d).unwrap();
        let s2 = to_json_string(&d).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.ends_with('\n'));
        assert!(s1.contains("0.30000000000000004"));
    }

    #[test]
    fn csv_table_golden() {
        let report = BlowupReport {
            point: Point::zero(3),
            exponent: 3,
            per_t: vec![
                BlowupSample {
                    t: 0.125,
                    sup_estimate: 4.0,
                    std_error: 0.25,
                    best_center: Point::zero(3),
                },
                BlowupSample {
                    t: 0.0625,
                    sup_estimate: 3.5,
                    std_error: 0.125,
                    best_center: Point::zero(3),
                },
            ],
            extrapolated: 3.9,
            tangent_beta: 4.0,
            relative_gap: 0.025,
            centers_per_t: 64,
            n_mc: 2000,
            seed: 7,
        };
        assert_eq!(
            blowup_csv(&report),
            "t,sup_estimate,std_error\n0.125,4,0.25\n0.0625,3.5,0.125\n"
        );
    }
}
