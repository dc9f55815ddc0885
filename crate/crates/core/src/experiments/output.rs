//! Deterministic CSV and metadata writers. Floats are rendered with 6
//! significant digits (C's `%.6g` convention) so repeated runs produce
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::assoc::TraceRow;
use crate::error::Result;

use super::{BackhaulRow, PointRow};

/// `%.6g`-style rendering: 6 significant digits, fixed notation for
/// exponents in [-4, 5], scientific otherwise, trailing zeros trimmed.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 6);

    let body = if (-4..=5).contains(&exp) {
        if exp >= 0 {
            let split = exp as usize + 1;
            let int_part = &digits[..split];
            let frac = digits[split..].trim_end_matches('0');
            if frac.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac}")
            }
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            let frac = format!("{zeros}{digits}");
            let frac = frac.trim_end_matches('0');
            format!("0.{frac}")
        }
    } else {
        let int_part = &digits[..1];
        let frac = digits[1..].trim_end_matches('0');
        if frac.is_empty() {
            format!("{int_part}e{exp:+03}")
        } else {
            format!("{int_part}.{frac}e{exp:+03}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

pub fn write_summary_csv(path: &Path, rows: &[PointRow]) -> Result<()> {
    let mut out = String::from(
        "point,mean_rate_mbps,edge_rate_mbps,geomean_rate_mbps,gain_mean,gain_edge,gain_geomean,dual_gap_median\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.label,
            fmt_g6(r.summary.mean_rate_mbps),
            fmt_g6(r.summary.edge_rate_mbps),
            fmt_g6(r.summary.geomean_rate_mbps),
            fmt_g6(r.gain_mean),
            fmt_g6(r.gain_edge),
            fmt_g6(r.gain_geomean),
            fmt_g6(r.summary.dual_gap_median),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Pooled empirical CDF per point: one row per UE rate sample.
pub fn write_cdf_csv(path: &Path, cdf: &[(String, Vec<f64>)]) -> Result<()> {
    let mut out = String::from("point,rate_mbps,empirical_cdf\n");
    for (label, rates) in cdf {
        let n = rates.len() as f64;
        for (k, r) in rates.iter().enumerate() {
            out.push_str(&format!(
                "{label},{},{}\n",
                fmt_g6(*r),
                fmt_g6((k + 1) as f64 / n)
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_backhaul_csv(path: &Path, rows: &[BackhaulRow]) -> Result<()> {
    let mut out = String::from("method,additional_backhaul_mbps,geomean_rate_mbps\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.method,
            fmt_g6(r.additional_backhaul_mbps),
            fmt_g6(r.geomean_rate_mbps)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut out = String::from("iter,net_utility,dual_bound,max_violation,step\n");
    for t in trace {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t.iter,
            fmt_g6(t.net_utility),
            fmt_g6(t.dual_bound),
            fmt_g6(t.max_violation),
            fmt_g6(t.step)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reproducibility metadata: everything needed to regenerate the CSVs.
pub fn write_meta(
    path: &Path,
    version: &str,
    command: &str,
    seed: u64,
    wall_time_s: f64,
    config_echo: &str,
) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "obsim meta v1")?;
    writeln!(f, "version = {version}")?;
    writeln!(f, "command = {command}")?;
    writeln!(f, "base_seed = {seed}")?;
    writeln!(f, "wall_time_s = {wall_time_s:.3}")?;
    writeln!(f, "--- config echo ---")?;
    f.write_all(config_echo.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_g6_matches_printf_g() {
        assert_eq!(fmt_g6(0.0), "0");
        assert_eq!(fmt_g6(1.0), "1");
        assert_eq!(fmt_g6(0.05), "0.05");
        assert_eq!(fmt_g6(1805.0), "1805");
        assert_eq!(fmt_g6(21.394856), "21.3949");
        assert_eq!(fmt_g6(-3.5), "-3.5");
        assert_eq!(fmt_g6(123456.7), "123457");
        assert_eq!(fmt_g6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g6(0.00012345), "0.00012345");
        assert_eq!(fmt_g6(0.000012345), "1.2345e-05");
        assert_eq!(fmt_g6(f64::INFINITY), "inf");
    }

    #[test]
    fn cdf_rows_are_monotone() {
        let dir = std::env::temp_dir().join("obsim-output-tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cdf.csv");
        write_cdf_csv(&path, &[("p".into(), vec![0.5, 1.0, 2.0])]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "point,rate_mbps,empirical_cdf");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with(",1"));
    }
}
