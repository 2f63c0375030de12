//! Shared number formatting for the TSV/DOT emitters.

/// Formats an edge weight with up to 6 fractional digits, trailing zeros
/// trimmed ("2", "0.5", "0.166667").
pub fn weight(w: f64) -> String {
    trim_fixed(w, 6)
}

/// Formats a real to exactly 4 decimal places.
pub fn real4(v: f64) -> String {
    format!("{v:.4}")
}

/// Formats a real to exactly 5 decimal places.
pub fn real5(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.5}")
}

/// Formats a fraction as a percentage rounded to the nearest tenth,
/// dropping a zero fractional digit: 0.20149 -> "20.1%", 0.9 -> "90%".
pub fn percent(fraction: f64) -> String {
    let tenths = (fraction * 1000.0).round();
    if tenths % 10.0 == 0.0 {
        format!("{}%", (tenths / 10.0) as i64)
    } else {
        format!("{:.1}%", tenths / 10.0)
    }
}

/// Rounds to 5 decimal places (for JSON score fields).
pub fn round5(v: f64) -> f64 {
    (v * 1e5).round() / 1e5
}

fn trim_fixed(v: f64, digits: usize) -> String {
    let mut s = format!("{v:.digits$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    // Normalize negative zero.
    if s == "-0" {
        s = "0".into();
    }
    s
}
