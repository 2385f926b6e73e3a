//! Small deterministic reductions shared by the estimators.

/// Pairwise (cascade) summation with a fixed split order.
///
/// The reduction tree depends only on the slice length, so results are
/// reproducible regardless of how the caller produced the values.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Trapezoid rule on a uniform grid: `step * (v0/2 + v1 + ... + v_{n-1}/2)`.
pub fn trapezoid_uniform(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let mut buf = values.to_vec();
            buf[0] *= 0.5;
            buf[n - 1] *= 0.5;
            step * pairwise_sum(&buf)
        }
    }
}

/// Trapezoid rule on an arbitrary increasing abscissa.
pub fn trapezoid(abscissa: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(abscissa.len(), values.len());
    let terms: Vec<f64> = abscissa
        .windows(2)
        .zip(values.windows(2))
        .map(|(a, v)| 0.5 * (v[0] + v[1]) * (a[1] - a[0]))
        .collect();
    pairwise_sum(&terms)
}

/// Locate `value` on a uniform grid starting at `origin` with spacing `step`.
///
/// Returns the index when `value` sits on a node to within a relative
/// tolerance of the step.
pub fn grid_index(origin: f64, step: f64, value: f64) -> Option<usize> {
    let pos = (value - origin) / step;
    let idx = pos.round();
    if idx < 0.0 || (pos - idx).abs() > 1e-6 {
        return None;
    }
    Some(idx as usize)
}

/// Check whether `coords` is uniformly spaced and return the spacing.
pub fn uniform_step(coords: &[f64]) -> Option<f64> {
    if coords.len() < 2 {
        return None;
    }
    let n = coords.len() - 1;
    let step = (coords[n] - coords[0]) / n as f64;
    if step <= 0.0 {
        return None;
    }
    let ok = coords
        .iter()
        .enumerate()
        .all(|(i, c)| (c - (coords[0] + i as f64 * step)).abs() <= 1e-9 * step.max(1.0) + 1e-6 * step);
    ok.then_some(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let x: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        assert!((trapezoid_uniform(&y, 0.1) - 2.5).abs() < 1e-14);
        assert!((trapezoid(&x, &y) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn grid_index_rejects_off_node() {
        assert_eq!(grid_index(0.0, 0.25, 1.0), Some(4));
        assert_eq!(grid_index(0.0, 0.25, 1.1), None);
        assert_eq!(grid_index(0.0, 0.25, -0.25), None);
    }
}
