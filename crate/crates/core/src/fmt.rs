//! Text formatting of floating point values for CSV output.

/// Formats `v` so that parsing the text gives back the same `f64`.
///
/// Plain decimal notation is used for moderate magnitudes and scientific
/// notation otherwise, which keeps tiny values such as `1e-300` short.
pub fn float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Formats an optional value, leaving the field empty for `None`.
pub fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}
