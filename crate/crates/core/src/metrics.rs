//! Summary statistics for regret curves.

/// Least-squares slope of `log(cum[t - 1])` against `log t` for `t` in `[T/2, T]`.
///
/// Points with non-positive cumulative regret are skipped; `None` when fewer
/// than two points remain.
pub fn loglog_slope(cum: &[f64]) -> Option<f64> {
    let t_n = cum.len();
    let start = (t_n / 2).max(1);
    let pts: Vec<(f64, f64)> = (start..=t_n)
        .filter(|&t| cum[t - 1] > 0.0)
        .map(|t| ((t as f64).ln(), cum[t - 1].ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean; zero for fewer than two values.
pub fn stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (var / n as f64).sqrt()
}
