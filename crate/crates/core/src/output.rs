//! Report rendering: CSV with leading `#` metadata lines, or JSON with the
//! same field names. Numbers are printed with 10 significant digits in both
//! formats so the two renderings carry identical text.

use crate::error::Error;
use crate::pipeline::RunOutput;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Format with 10 significant digits, trailing zeros trimmed; scientific
/// notation outside [1e-4, 1e10), in the style of printf's %.10g.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.9e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("{:e} always contains an exponent");
    let e: i32 = exp.parse().expect("exponent is an integer");
    let neg = mantissa.starts_with('-');
    let digits: Vec<u8> = mantissa.bytes().filter(u8::is_ascii_digit).collect();
    debug_assert_eq!(digits.len(), 10);
    let digits = String::from_utf8(digits).expect("ascii digits");

    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if !(-4..10).contains(&e) {
        let trimmed = digits.trim_end_matches('0');
        out.push_str(&trimmed[..1]);
        if trimmed.len() > 1 {
            out.push('.');
            out.push_str(&trimmed[1..]);
        }
        out.push('e');
        out.push_str(&e.to_string());
    } else if e >= 0 {
        let k = e as usize + 1;
        out.push_str(&digits[..k]);
        let frac = digits[k..].trim_end_matches('0');
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
    } else {
        out.push_str("0.");
        for _ in 0..(-e - 1) {
            out.push('0');
        }
        out.push_str(digits.trim_end_matches('0'));
    }
    out
}

fn meta_pairs(out: &RunOutput) -> Vec<(&'static str, String)> {
    let r = &out.report;
    vec![
        ("version", env!("CARGO_PKG_VERSION").to_string()),
        ("formula", out.formula.replace(['\n', '\r'], " ")),
        ("n", r.n.to_string()),
        ("p", r.p.to_string()),
        ("p1", r.p1.to_string()),
        ("p2", r.p2.to_string()),
        ("p3", r.p3.to_string()),
        ("h", out.h.to_string()),
        ("sum_w", r.sum_w.to_string()),
        ("c", format_sig10(r.c)),
        ("seed", out.seed.to_string()),
        ("flag_cutoff", format_sig10(r.flag_cutoff)),
    ]
}

pub const CSV_HEADER: &str = "obs,robust_hat,robust_rd,classical_hat,classical_md,mcd_weight,flagged";

/// Render the report as CSV with `#`-prefixed metadata lines.
pub fn render_csv(out: &RunOutput) -> String {
    let mut s = String::new();
    for (k, v) in meta_pairs(out) {
        s.push_str("# ");
        s.push_str(k);
        s.push_str(": ");
        s.push_str(&v);
        s.push('\n');
    }
    s.push_str(CSV_HEADER);
    s.push('\n');
    for row in &out.report.observations {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.obs,
            format_sig10(row.robust_hat),
            format_sig10(row.robust_rd),
            format_sig10(row.classical_hat),
            format_sig10(row.classical_md),
            row.mcd_weight,
            row.flagged,
        ));
    }
    s
}

/// Render the report as JSON with the same field names and number texts.
pub fn render_json(out: &RunOutput) -> String {
    let mut s = String::new();
    s.push_str("{\n  \"meta\": {\n");
    let pairs = meta_pairs(out);
    for (i, (k, v)) in pairs.iter().enumerate() {
        let rendered = match *k {
            "version" | "formula" => {
                serde_json::to_string(v).expect("strings always serialize")
            }
            _ => v.clone(),
        };
        s.push_str(&format!("    \"{k}\": {rendered}"));
        s.push_str(if i + 1 < pairs.len() { ",\n" } else { "\n" });
    }
    s.push_str("  },\n  \"observations\": [\n");
    let rows = &out.report.observations;
    for (i, row) in rows.iter().enumerate() {
        s.push_str(&format!(
            "    {{\"obs\": {}, \"robust_hat\": {}, \"robust_rd\": {}, \"classical_hat\": {}, \"classical_md\": {}, \"mcd_weight\": {}, \"flagged\": {}}}",
            row.obs,
            format_sig10(row.robust_hat),
            format_sig10(row.robust_rd),
            format_sig10(row.classical_hat),
            format_sig10(row.classical_md),
            row.mcd_weight,
            row.flagged,
        ));
        s.push_str(if i + 1 < rows.len() { ",\n" } else { "\n" });
    }
    s.push_str("  ]\n}\n");
    s
}

/// Write the rendered report to a file or stdout.
pub fn write_report(
    out: &RunOutput,
    format: OutputFormat,
    dest: Option<&Path>,
) -> Result<(), Error> {
    let text = match format {
        OutputFormat::Csv => render_csv(out),
        OutputFormat::Json => render_json(out),
    };
    match dest {
        Some(path) => std::fs::write(path, text).map_err(Error::Output),
        None => {
            let stdout = std::io::stdout();
            stdout.lock().write_all(text.as_bytes()).map_err(Error::Output)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig10_fixed_notation() {
        assert_eq!(format_sig10(0.0), "0");
        assert_eq!(format_sig10(-0.0), "0");
        assert_eq!(format_sig10(1.0), "1");
        assert_eq!(format_sig10(0.5), "0.5");
        assert_eq!(format_sig10(-2.25), "-2.25");
        assert_eq!(format_sig10(0.6479437872182595), "0.6479437872");
        assert_eq!(format_sig10(123.4567), "123.4567");
        assert_eq!(format_sig10(1.0 / 3.0), "0.3333333333");
        assert_eq!(format_sig10(0.0001), "0.0001");
        assert_eq!(format_sig10(1234567890.0), "1234567890");
    }

    #[test]
    fn sig10_scientific_notation() {
        assert_eq!(format_sig10(0.00001234), "1.234e-5");
        assert_eq!(format_sig10(1.5e15), "1.5e15");
        assert_eq!(format_sig10(-2e-9), "-2e-9");
        assert_eq!(format_sig10(12345678901.0), "1.23456789e10");
    }

    #[test]
    fn sig10_rounding_carries_over() {
        assert_eq!(format_sig10(9.9999999996), "10");
        assert_eq!(format_sig10(0.99999999996), "1");
    }

    #[test]
    fn renderings_share_numbers() {
        let out = crate::pipeline::run_csv(
            &crate::pipeline::RunConfig::new("~ x"),
            "x\n1\n2.5\n3\n4.25\n5\n9\n",
            &[],
        )
        .unwrap();
        let csv = render_csv(&out);
        let json = render_json(&out);
        // every numeric cell of the CSV body appears verbatim in the JSON
        for line in csv.lines().skip_while(|l| l.starts_with('#')).skip(1) {
            for cell in line.split(',') {
                assert!(json.contains(cell), "JSON missing `{cell}`");
            }
        }
        let parsed: serde_json::Value = serde_json::from_str(&json).expect("valid JSON");
        assert_eq!(parsed["meta"]["n"], 6);
        assert_eq!(parsed["observations"].as_array().unwrap().len(), 6);
    }
}
