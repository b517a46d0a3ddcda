//! Report number formatting: 12 significant digits, stable across platforms.

/// Formats a float with 12 significant digits.
///
/// Integers up to 2⁵³ print exactly (no exponent); everything else uses
/// scientific notation with trailing zeros trimmed from the mantissa. Used for
/// every float that lands in a CSV or JSON report so golden files stay stable.
#[must_use]
pub fn g12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        // Reports never contain non-finite numbers; keep a loud marker if one
        // ever slips through instead of emitting invalid JSON silently.
        return format!("\"{v}\"");
    }
    if v.fract() == 0.0 && v.abs() < 9.007_199_254_740_992e15 {
        return format!("{v:.0}");
    }
    let s = format!("{v:.11e}");
    // "1.23400000000e5" → "1.234e5"
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let trimmed = mantissa.trim_end_matches('0').trim_end_matches('.');
            format!("{trimmed}e{exp}")
        }
        None => s,
    }
}
