//! Locale-independent number formatting and the stress CSV.

use std::io::Write;

use nvgame_core::stress::ExcessRow;

use crate::CliError;

/// Significant digits of every number written by the CLI.
pub const SIG_DIGITS: usize = 9;

/// `x` with [`SIG_DIGITS`] significant digits, `%g` style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros removed.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn sig_list(xs: &[f64]) -> String {
    xs.iter().map(|x| sig(*x)).collect::<Vec<_>>().join(" ")
}

pub const CSV_HEADER: [&str; 9] = [
    "instance_id",
    "lambda",
    "rob_max",
    "rob_min",
    "rob_mean",
    "det_max",
    "det_min",
    "det_mean",
    "degenerate_count",
];

/// One row per instance and `λ`; pooled rows (instance `usize::MAX`) get the
/// id `all`.
pub fn write_stress_csv<W: Write>(out: W, rows: &[ExcessRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let id = if r.instance == usize::MAX {
            "all".to_string()
        } else {
            r.instance.to_string()
        };
        w.write_record([
            id,
            sig(r.lambda),
            sig(r.rob_max),
            sig(r.rob_min),
            sig(r.rob_mean),
            sig(r.det_max),
            sig(r.det_min),
            sig(r.det_mean),
            r.degenerate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(1.0 / 3.0), "0.333333333");
        assert_eq!(sig(2.0 / 3.0), "0.666666667");
        assert_eq!(sig(3.0), "3");
        assert_eq!(sig(-0.5), "-0.5");
        assert_eq!(sig(123456789.4), "123456789");
        assert_eq!(sig(1234567890.0), "1.23456789e9");
        assert_eq!(sig(1.5e-7), "1.5e-7");
        assert_eq!(sig(0.000123), "0.000123");
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let row = ExcessRow {
            instance: 3,
            lambda: 0.1,
            rob_max: 0.25,
            rob_min: 0.0,
            rob_mean: 0.125,
            det_max: 1.0 / 3.0,
            det_min: 0.0,
            det_mean: 0.1,
            degenerate: 2,
            samples: 7,
        };
        let mut buf = Vec::new();
        write_stress_csv(&mut buf, &[row]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "instance_id,lambda,rob_max,rob_min,rob_mean,det_max,det_min,det_mean,degenerate_count\n\
             3,0.1,0.25,0,0.125,0.333333333,0,0.1,2\n"
        );
    }
}
