//! Small statistics toolkit: Wilson score intervals and a one-sample
//! Kolmogorov–Smirnov test against a uniform law.

/// Two-sided 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// KS test of `samples` against the uniform law on `[lo, hi)`.
///
/// The p-value uses the asymptotic Kolmogorov law with the Stephens
/// small-sample correction.
pub fn ks_uniform(samples: &mut [f64], lo: f64, hi: f64) -> KsOutcome {
    let n = samples.len();
    if n == 0 {
        return KsOutcome { statistic: 0.0, p_value: 1.0 };
    }
    samples.sort_by(f64::total_cmp);
    let nf = n as f64;
    let width = hi - lo;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = ((x - lo) / width).clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let sq = nf.sqrt();
    let p_value = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
    KsOutcome { statistic: d, p_value }
}
