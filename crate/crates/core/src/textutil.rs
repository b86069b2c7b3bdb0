//! Shared text helpers: token/char counting, normalization, and exact
//! ratio-vs-threshold comparison.

/// Number of unicode scalar values in `s`.
pub fn char_count(s: &str) -> usize {
    s.chars().count()
}

/// Whitespace-separated tokens. This is the "token" used by all pipeline
/// statistics; no subword tokenizer is involved.
pub fn tokens(s: &str) -> impl Iterator<Item = &str> {
    s.split_whitespace()
}

pub fn token_count(s: &str) -> usize {
    tokens(s).count()
}

/// Normalization applied before hashing paragraphs and shingles:
/// lowercase, trim, collapse internal whitespace runs to one space and,
/// when `remove_digits` is set, drop decimal digits entirely (so
/// near-boilerplate like "3 comments" and "4 comments" collides).
pub fn normalize(s: &str, remove_digits: bool) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for ch in s.trim().chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if remove_digits && ch.is_ascii_digit() {
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        for lc in ch.to_lowercase() {
            out.push(lc);
        }
    }
    // Digit removal can leave a dangling separator ("3 comments" -> "comments").
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Exact comparison of the rational num/den against a threshold.
///
/// Thresholds are decimal policy constants (0.3 means three tenths, even
/// though the nearest f64 is 0.2999...), so the comparison is done against
/// the threshold's shortest round-trip decimal representation in integer
/// arithmetic. A document measuring exactly 3/10 compares `Equal` to a
/// configured 0.3. `den == 0` is treated as ratio 0.
pub fn ratio_cmp(num: u64, den: u64, t: f64) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    if den == 0 {
        return 0.0f64.partial_cmp(&t).unwrap_or(Ordering::Equal);
    }
    if t.is_nan() {
        return Ordering::Equal;
    }
    if t < 0.0 {
        return Ordering::Greater; // any ratio >= 0 beats a negative threshold
    }
    if t == 0.0 {
        return if num == 0 { Ordering::Equal } else { Ordering::Greater };
    }
    if !t.is_finite() {
        return Ordering::Less;
    }
    if let Some(ord) = decimal_cmp(num, den, t) {
        return ord;
    }
    (num as f64 / den as f64).partial_cmp(&t).unwrap_or(Ordering::Equal)
}

/// Compare num/den with t interpreted as the decimal `digits * 10^exp10`
/// from its shortest round-trip rendering. `None` when the integer
/// arithmetic would overflow (absurd thresholds); the caller falls back to
/// float comparison.
fn decimal_cmp(num: u64, den: u64, t: f64) -> Option<std::cmp::Ordering> {
    let (digits, exp10) = decimal_parts(t)?;
    let num = num as u128;
    let den = den as u128;
    // num/den <=> digits * 10^exp10
    if exp10 >= 0 {
        let scale = 10u128.checked_pow(exp10 as u32)?;
        let rhs = digits.checked_mul(den)?.checked_mul(scale)?;
        Some(num.cmp(&rhs))
    } else {
        let scale = 10u128.checked_pow((-exp10) as u32)?;
        let lhs = num.checked_mul(scale)?;
        let rhs = digits.checked_mul(den)?;
        Some(lhs.cmp(&rhs))
    }
}

/// Decompose a positive finite f64 into (digits, exp10) such that the value
/// of its shortest round-trip decimal rendering equals digits * 10^exp10.
fn decimal_parts(t: f64) -> Option<(u128, i32)> {
    let s = format!("{t}");
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (s.as_str(), 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits_str: String = int_part.chars().chain(frac_part.chars()).collect();
    let digits = digits_str.parse::<u128>().ok()?;
    let exp10 = exp.checked_sub(frac_part.len() as i32)?;
    Some((digits, exp10))
}

/// `num/den > t`, exactly.
pub fn ratio_gt(num: u64, den: u64, t: f64) -> bool {
    ratio_cmp(num, den, t) == std::cmp::Ordering::Greater
}

/// `num/den < t`, exactly.
pub fn ratio_lt(num: u64, den: u64, t: f64) -> bool {
    ratio_cmp(num, den, t) == std::cmp::Ordering::Less
}

/// Ratio as f64 for reporting only (verdicts use [`ratio_cmp`]).
pub fn ratio_f64(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
