//! CSV and JSON writers for suite results and sweep traces.

use std::io::Write;

use crate::convfunc::SweepPoint;
use crate::verify::{SuiteResult, TheoremReport};

pub const REPORT_COLUMNS: [&str; 9] = [
    "index",
    "theorem_id",
    "signal",
    "kernel",
    "status",
    "premise_met",
    "discrepancies",
    "measurements",
    "note",
];

/// Seventeen significant digits, enough to round-trip any f64.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn discrepancy_cell(r: &TheoremReport) -> String {
    r.discrepancies
        .iter()
        .map(|d| format!("{}:{}:{}", d.name, fmt_num(d.value), fmt_num(d.tolerance)))
        .collect::<Vec<_>>()
        .join("|")
}

fn measurement_cell(r: &TheoremReport) -> String {
    r.measurements
        .iter()
        .map(|m| format!("{}:{}", m.name, fmt_num(m.value)))
        .collect::<Vec<_>>()
        .join("|")
}

/// One row per report. Discrepancy cells read `name:value:tolerance`, joined by `|`.
pub fn write_csv<W: Write>(reports: &[TheoremReport], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for (i, r) in reports.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.theorem_id.clone(),
            r.signal.clone(),
            r.kernel.clone(),
            r.status.as_str().to_string(),
            r.premise_met.to_string(),
            discrepancy_cell(r),
            measurement_cell(r),
            r.note.clone(),
        ])?;
    }
    w.flush()
}

pub fn write_json<W: Write>(result: &SuiteResult, out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(out, result)?;
    Ok(())
}

/// `parameter,upper,lower` rows.
pub fn write_trace<W: Write>(points: &[SweepPoint], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "upper", "lower"])?;
    for p in points {
        w.write_record([fmt_num(p.param), fmt_num(p.upper), fmt_num(p.lower)])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::Summary;

    fn sample() -> TheoremReport {
        let mut r = TheoremReport::new("T4.2", "sin", "exp(1)");
        r.check("F_inf-upper_P", 0.1, 0.02);
        r.measure("F_inf", 0.125);
        r.finish()
    }

    #[test]
    fn csv_round_trips_numbers() {
        let mut buf = Vec::new();
        write_csv(&[sample()], &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), REPORT_COLUMNS);
        let row = rd.records().next().unwrap().unwrap();
        assert_eq!(&row[4], "fail");
        let parts: Vec<&str> = row[6].split(':').collect();
        assert_eq!(parts[0], "F_inf-upper_P");
        assert_eq!(parts[1].parse::<f64>().unwrap(), 0.1);
        assert_eq!(parts[2].parse::<f64>().unwrap(), 0.02);
    }

    #[test]
    fn json_has_summary() {
        let reports = vec![sample()];
        let result = SuiteResult {
            suite: "x".into(),
            summary: Summary::of(&reports),
            reports,
        };
        let mut buf = Vec::new();
        write_json(&result, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["summary"]["fail"], 1);
        assert_eq!(v["reports"][0]["status"], "fail");
    }

    #[test]
    fn trace_rows() {
        let pts = [SweepPoint { param: 1.0, upper: 0.5, lower: -0.5 }];
        let mut buf = Vec::new();
        write_trace(&pts, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("parameter,upper,lower\n1.0000000000000000e0,"));
    }
}
