//! Series acceleration on windows of partial sums.

/// Number of trailing partial sums the Euler transform looks at.
pub const EULER_WINDOW: usize = 64;

/// Averaging depth of the Euler transform.
pub const EULER_DEPTH: usize = 12;

/// Iterated averaging (Euler transform) of consecutive partial sums.
///
/// Each pass replaces the window by the means of neighbouring entries; for
/// an alternating series with smoothly varying magnitudes the oscillation
/// shrinks by roughly half per pass. Returns the last entry after `depth`
/// passes together with the spread of the final row, or `None` if the
/// window is shorter than `depth + 1`.
pub fn iterated_average(partial_sums: &[f64], depth: usize) -> Option<(f64, f64)> {
    if partial_sums.len() <= depth {
        return None;
    }
    let mut row = partial_sums.to_vec();
    for _ in 0..depth {
        for i in 0..row.len() - 1 {
            row[i] = 0.5 * (row[i] + row[i + 1]);
        }
        row.pop();
    }
    let last = *row.last()?;
    let tail = &row[row.len().saturating_sub(4)..];
    let spread = tail.iter().fold(0.0_f64, |m, v| m.max((v - last).abs()));
    Some((last, spread))
}

/// Aitken's Δ² step on three successive estimates.
///
/// Applied only when the differences shrink geometrically with a ratio in
/// `(0, max_ratio)`; otherwise the newest estimate is returned unchanged.
pub fn aitken(e0: f64, e1: f64, e2: f64, max_ratio: f64) -> f64 {
    let d1 = e1 - e0;
    let d2 = e2 - e1;
    if d1 == 0.0 || d2 == 0.0 {
        return e2;
    }
    let ratio = d2 / d1;
    if !(ratio > 0.0 && ratio < max_ratio) {
        return e2;
    }
    e2 + d2 * ratio / (1.0 - ratio)
}
