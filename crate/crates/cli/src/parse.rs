//! Value parsers for command-line flags and config-file entries.

use num_complex::Complex64;
use rfmems_match::netlist::{parse_value, MAX_BITS};
use rfmems_match::ConfigurationWord;

/// Frequency in Hz. Accepts plain numbers and engineering suffixes with an
/// optional `Hz` unit: `620e6`, `620M`, `620MHz`, `0.62GHz`.
pub fn parse_frequency(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let t = t
        .strip_suffix("Hz")
        .or_else(|| t.strip_suffix("hz"))
        .unwrap_or(t);
    match parse_value(t) {
        Some(f) if f > 0.0 => Ok(f),
        Some(_) => Err(format!("frequency must be positive, got `{s}`")),
        None => Err(format!("cannot read `{s}` as a frequency")),
    }
}

/// Non-negative quantity with an optional engineering suffix.
pub fn parse_quantity(s: &str) -> Result<f64, String> {
    match parse_value(s) {
        Some(v) if v >= 0.0 => Ok(v),
        _ => Err(format!("expected a non-negative number, got `{s}`")),
    }
}

/// Complex impedance in `a+bj` or `a-bj` form. A bare real `a` is also
/// accepted. Anything else, including `a+jb`, `bj` or embedded spaces, is
/// rejected.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let err = || format!("cannot read `{s}` as a complex number (expected a+bj or a-bj)");
    let real = |t: &str| -> Result<f64, String> {
        if t.is_empty() || t.starts_with('+') {
            return Err(err());
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(err()),
        }
    };

    let Some(body) = s.strip_suffix('j') else {
        return Ok(Complex64::new(real(s)?, 0.0));
    };
    // the separator is the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(err)?;
    let re = real(&body[..split])?;
    let im_text = &body[split + 1..];
    if im_text.starts_with(['+', '-']) {
        return Err(err());
    }
    let im = real(im_text)?;
    Ok(Complex64::new(
        re,
        if bytes[split] == b'-' { -im } else { im },
    ))
}

/// Configuration word as decimal, `0b…` or `0x…`.
pub fn parse_word(s: &str) -> Result<ConfigurationWord, String> {
    let value = if let Some(b) = s.strip_prefix("0b") {
        u16::from_str_radix(b, 2)
    } else if let Some(h) = s.strip_prefix("0x") {
        u16::from_str_radix(h, 16)
    } else {
        s.parse::<u16>()
    }
    .map_err(|_| format!("cannot read `{s}` as a configuration word"))?;
    ConfigurationWord::new(value).map_err(|e| e.to_string())
}

/// Bit subset such as `0-7`, `8,9,10`, `0-3,8` or `all`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSet(pub Vec<u8>);

pub fn parse_bits(s: &str) -> Result<BitSet, String> {
    if s == "all" {
        return Ok(BitSet((0..MAX_BITS).collect()));
    }
    let bit = |t: &str| -> Result<u8, String> {
        match t.trim().parse::<u8>() {
            Ok(b) if b < MAX_BITS => Ok(b),
            _ => Err(format!("bad bit `{t}` (expected 0..={})", MAX_BITS - 1)),
        }
    };
    let mut bits = Vec::new();
    for part in s.split(',') {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (bit(lo)?, bit(hi)?);
                if lo > hi {
                    return Err(format!("empty bit range `{part}`"));
                }
                bits.extend(lo..=hi);
            }
            None => bits.push(bit(part)?),
        }
    }
    bits.sort_unstable();
    bits.dedup();
    Ok(BitSet(bits))
}
