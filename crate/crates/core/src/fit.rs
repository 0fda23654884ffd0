//! Least-squares helpers for decay-rate extraction.

/// Result of an ordinary least-squares line fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Some(LinearFit { slope, intercept, r2, points: n })
}

/// Indices of local maxima of `v` (interior points not smaller than both
/// neighbours, first index of a plateau).
pub fn local_maxima(v: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..v.len().saturating_sub(1) {
        if v[i] > v[i - 1] && v[i] >= v[i + 1] {
            out.push(i);
        }
    }
    out
}

/// Fits `log|v| = a + slope t` on the upper envelope of an oscillating
/// magnitude signal restricted to `t0 <= t <= t1` and `|v| > floor`.
///
/// Local maxima carry the envelope of a damped oscillation; when fewer than
/// three are available every sample in the window is used instead.
pub fn envelope_log_fit(times: &[f64], abs: &[f64], t0: f64, t1: f64, floor: f64) -> Option<LinearFit> {
    let keep = |i: usize| times[i] >= t0 && times[i] <= t1 && abs[i] > floor && abs[i].is_finite();
    let peaks: Vec<usize> = local_maxima(abs).into_iter().filter(|&i| keep(i)).collect();
    let idx: Vec<usize> = if peaks.len() >= 3 { peaks } else { (0..times.len()).filter(|&i| keep(i)).collect() };
    let x: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| abs[i].ln()).collect();
    linear_fit(&x, &y)
}
