use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::config::Scheme;
use super::runner::{BerCurve, BerPoint};

pub const CSV_HEADER: &str = "sweep,scheme,value,ber,stderr,bits,seed,config_hash";

/// Plain decimal notation with 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.push_str(&"0".repeat((-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.push_str(&"0".repeat(int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

pub fn to_csv_string(curve: &BerCurve) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            curve.sweep,
            p.scheme,
            format_sig9(p.value),
            format_sig9(p.ber),
            format_sig9(p.stderr),
            p.bits,
            curve.seed,
            curve.config_hash
        );
    }
    out
}

pub fn write_csv(curve: &BerCurve, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(curve))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<BerCurve> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse(format!("CSV header must be '{CSV_HEADER}'")));
    }
    let mut curve = BerCurve {
        sweep: String::new(),
        seed: 0,
        config_hash: String::new(),
        points: Vec::new(),
    };
    for (no, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let [sweep, scheme, value, ber, stderr, bits, seed, hash] = cols[..] else {
            return Err(Error::Parse(format!("CSV row {}: expected 8 columns", no + 2)));
        };
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("CSV row {}: bad number '{s}'", no + 2)))
        };
        let int = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("CSV row {}: bad integer '{s}'", no + 2)))
        };
        let seed = int(seed)?;
        if curve.points.is_empty() {
            curve.sweep = sweep.to_string();
            curve.seed = seed;
            curve.config_hash = hash.to_string();
        } else if curve.sweep != sweep || curve.seed != seed || curve.config_hash != hash {
            return Err(Error::Parse(format!("CSV row {}: mixes curves", no + 2)));
        }
        curve.points.push(BerPoint {
            scheme: scheme.parse::<Scheme>().map_err(|e| Error::Parse(e.to_string()))?,
            value: num(value)?,
            ber: num(ber)?,
            stderr: num(stderr)?,
            bits: int(bits)?,
        });
    }
    Ok(curve)
}

pub fn read_csv(path: &Path) -> Result<BerCurve> {
    parse_csv(&std::fs::read_to_string(path)?)
}
