use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::TokenSet;
use crate::{Error, Result};

/// Element-wise rounding encoder parameters: `decimals` places, keeping the
/// `positions` entries of largest magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundingConfig {
    pub decimals: u32,
    pub positions: usize,
}

impl RoundingConfig {
    pub fn new(decimals: u32, positions: usize) -> Self {
        Self {
            decimals,
            positions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions == 0 {
            return Err(Error::InvalidParameter(
                "rounding encoder needs at least one retained entry".into(),
            ));
        }
        Ok(())
    }
}

// Every power of ten up to 1e22 is exactly representable in f64.
const POW10: [f64; 23] = [
    1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e11, 1e12, 1e13, 1e14, 1e15, 1e16,
    1e17, 1e18, 1e19, 1e20, 1e21, 1e22,
];

/// `pos{position}val{v}` where `v` is `value` rounded half away from zero to
/// exactly `decimals` places. Negative zero prints unsigned.
pub fn format_rounded_token(position: usize, value: f64, decimals: u32) -> String {
    format!("pos{position}val{}", round_decimal(value, decimals))
}

pub(crate) fn round_decimal(value: f64, decimals: u32) -> String {
    debug_assert!(value.is_finite());
    if let Some(&scale) = POW10.get(decimals as usize) {
        let scaled = value.abs() * scale;
        // The product carries at most one rounding error, so outside a narrow
        // band around .5 the nearest integer is unambiguous.
        if scaled < (1u64 << 52) as f64 {
            let fraction = scaled - scaled.floor();
            if (fraction - 0.5).abs() > 1e-9 * scaled.max(1.0) {
                let units = scaled.round() as u64;
                return render(&units.to_string(), value < 0.0, decimals as usize);
            }
        }
    }
    round_decimal_exact(value, decimals)
}

/// Rounds using the exact decimal expansion of `value`.
pub(crate) fn round_decimal_exact(value: f64, decimals: u32) -> String {
    let decimals = decimals as usize;
    // An f64 has at most 1074 fractional binary digits, hence at most 1074
    // fractional decimal digits; printing more is exact.
    let precision = (decimals + 1).max(1075);
    let expansion = format!("{:.*}", precision, value.abs());
    let (integer, fraction) = expansion.split_once('.').expect("fixed precision output");
    let mut digits: Vec<u8> = integer
        .bytes()
        .chain(fraction.bytes().take(decimals))
        .collect();
    if fraction.as_bytes()[decimals] >= b'5' {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    render(std::str::from_utf8(&digits).unwrap(), value < 0.0, decimals)
}

/// Places a decimal point `decimals` digits from the right of `units`.
fn render(units: &str, negative: bool, decimals: usize) -> String {
    let units = units.trim_start_matches('0');
    let padded = format!("{:0>width$}", units, width = decimals + 1);
    let (int, frac) = padded.split_at(padded.len() - decimals);
    let sign = if negative && !units.is_empty() { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Tokens for the `min(m, d)` entries of largest magnitude (ties go to the
/// lower index), listed in position order.
pub fn encode_rounding(values: &[f64], config: &RoundingConfig) -> Result<TokenSet> {
    config.validate()?;
    if values.is_empty() {
        return Err(Error::InvalidParameter("cannot encode an empty vector".into()));
    }
    if let Some(position) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            id: "<query>".into(),
            position,
        });
    }

    let keep = config.positions.min(values.len());
    let mut order: Vec<usize> = (0..values.len()).collect();
    let by_magnitude = |&a: &usize, &b: &usize| -> Ordering {
        values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b))
    };
    if keep < order.len() {
        order.select_nth_unstable_by(keep - 1, by_magnitude);
        order.truncate(keep);
    }
    order.sort_unstable();

    Ok(TokenSet::from_ordered(
        order
            .into_iter()
            .map(|i| format_rounded_token(i + 1, values[i], config.decimals))
            .collect(),
    ))
}
