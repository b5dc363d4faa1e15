//! Fixed-precision float formatting for tabular artifacts.

/// Formats with 12 significant digits in scientific notation, the printing
/// precision of every CSV the crate emits. Parsing the result back recovers
/// the value to about 1e-11 relative error, which is the round-trip contract.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}
