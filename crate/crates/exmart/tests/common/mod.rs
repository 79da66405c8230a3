//! Oracles shared by the integration suites: numerical quadrature, the
//! Kolmogorov–Smirnov statistic, and batch statistics. Everything here is
//! independent of the library's own computation paths.

/// Composite Simpson quadrature of `f` over `[a, b]` with `n` intervals
/// (`n` is rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut total = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        total += f(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    total * h / 3.0
}

/// Quadrature of `f` over `[0, 1]` for integrands with an integrable
/// singularity at 0: substitutes `p = e^t` and integrates
/// `f(e^t)·e^t` over `t ∈ [ln(tail), 0]`. The truncated tail of a power
/// bet `ε·p^(ε−1)` below `p = e^T` has mass `e^(εT)`, so `T` is chosen per
/// epsilon to push it under 1e-12.
pub fn quad_singular_at_zero(f: impl Fn(f64) -> f64, epsilon_scale: f64, n: usize) -> f64 {
    let t_min = (1e-12f64).ln() / epsilon_scale.max(1e-3);
    simpson(|t| f(t.exp()) * t.exp(), t_min, 0.0, n)
}

/// Two-sided Kolmogorov–Smirnov statistic of `values` against U[0,1].
pub fn ks_statistic(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let upper = (i + 1) as f64 / n - x;
        let lower = x - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    d
}

/// Asymptotic two-sided KS critical value at level `alpha` for sample size
/// `n`: `√(−ln(α/2)/2) / √n`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Two-pass batch mean and sum of squared deviations.
pub fn batch_mean_m2(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, m2)
}

/// Sample mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let (mean, m2) = batch_mean_m2(values);
    let std = (m2 / (values.len() as f64 - 1.0)).sqrt();
    (mean, std)
}

#[allow(dead_code)]
pub fn variance(values: &[f64]) -> f64 {
    let (_, m2) = batch_mean_m2(values);
    m2 / (values.len() as f64 - 1.0)
}
