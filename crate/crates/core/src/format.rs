//! Number formatting for text outputs.

/// Shortest decimal that parses back to exactly `v`: positional notation for
/// moderate magnitudes, scientific otherwise. Non-finite values print as
/// `NaN`, `inf` and `-inf`.
pub fn number(v: f64) -> String {
    let a = v.abs();
    if !v.is_finite() || a == 0.0 || (1e-4..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}
