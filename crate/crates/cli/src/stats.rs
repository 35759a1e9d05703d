use serde::Serialize;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub fraction: f64,
    pub ci95: [f64; 2],
}

/// Wilson score interval; an empty sample gives `[0, 1]`.
pub fn wilson(successes: usize, trials: usize) -> Proportion {
    if trials == 0 {
        return Proportion { successes, trials, fraction: f64::NAN, ci95: [0.0, 1.0] };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Proportion { successes, trials, fraction: p, ci95: [(centre - half).max(0.0), (centre + half).min(1.0)] }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// Population mean and standard deviation.
pub fn moments(values: &[f64]) -> Moments {
    let count = values.len();
    if count == 0 {
        return Moments { count, mean: f64::NAN, sd: f64::NAN, min: f64::NAN, max: f64::NAN };
    }
    let n = count as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Moments {
        count,
        mean,
        sd: var.sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Normalized so the histogram integrates to one.
    pub density: f64,
}

/// Bins of width `width` starting at zero; values must be non-negative.
pub fn histogram(values: &[f64], width: f64) -> Vec<HistogramBin> {
    assert!(width > 0.0, "bin width must be positive");
    let top = values.iter().copied().fold(0.0, f64::max);
    let bins = ((top / width).floor() as usize) + 1;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = ((v.max(0.0) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = values.len().max(1) as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            count,
            density: count as f64 / (total * width),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_reference_implementation() {
        // reference values from statsmodels proportion_confint(method="wilson")
        let p = wilson(19, 100);
        assert!((p.fraction - 0.19).abs() < 1e-15);
        assert!((p.ci95[0] - 0.12515).abs() < 1e-4 && (p.ci95[1] - 0.27779).abs() < 1e-4, "{:?}", p.ci95);
        let all = wilson(10, 10);
        assert!((all.ci95[1] - 1.0).abs() < 1e-15 && (all.ci95[0] - 0.72247).abs() < 1e-4);
        let none = wilson(0, 10);
        assert_eq!(none.ci95[0], 0.0);
        assert_eq!(wilson(0, 0).ci95, [0.0, 1.0]);
    }

    #[test]
    fn moments_and_histogram() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.sd - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!((m.min, m.max), (1.0, 4.0));
        let h = histogram(&[0.0, 0.001, 0.0025, 0.0039, 0.0041], 0.002);
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 2, 1]);
        let integral: f64 = h.iter().map(|b| b.density * (b.hi - b.lo)).sum();
        assert!((integral - 1.0).abs() < 1e-12);
    }
}
