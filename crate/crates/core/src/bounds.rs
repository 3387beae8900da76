/// Folds `x` back into `[lo, hi]` by mirror reflection at both ends.
pub(crate) fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if width <= 0.0 {
        return lo;
    }
    let period = 2.0 * width;
    let mut y = (x - lo).rem_euclid(period);
    if y > width {
        y = period - y;
    }
    (lo + y).clamp(lo, hi)
}
