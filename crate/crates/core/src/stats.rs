//! Small descriptive statistics shared by the reporting and clustering code.

/// Arithmetic mean. Returns NaN on empty input.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with n-1 in the denominator; 0.0 for fewer than two
/// points.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Sample standard deviation (n-1); 0.0 for fewer than two points.
pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Empirical quantile with linear interpolation between order statistics
/// (the common "type 7" rule: index h = (n-1)p).
///
/// `p` is clamped to [0, 1]. Panics on empty input.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let p = p.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = h - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Sorts a copy of the data and evaluates [`quantile`].
pub fn quantile_unsorted(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in quantile"));
    quantile(&v, p)
}

/// A kernel density estimate evaluated on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    /// Grid points (ascending) paired with density values.
    pub points: Vec<(f64, f64)>,
    /// Silverman bandwidth used for the Gaussian kernel.
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoidal integral of the curve.
    pub fn integral(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }
}

/// Gaussian kernel density estimate on `grid_size` points spanning the data
/// range extended by three bandwidths on each side.
///
/// The bandwidth follows Silverman's rule, `0.9 * min(sd, IQR/1.34) *
/// n^(-1/5)`, falling back to the sd when the IQR is degenerate. Returns
/// `None` when the data has zero variance (no meaningful bandwidth exists);
/// callers represent that case as a point mass.
pub fn gaussian_kde(xs: &[f64], grid_size: usize) -> Option<DensityCurve> {
    if xs.len() < 2 || grid_size < 2 {
        return None;
    }
    let sd = sample_sd(xs);
    if sd == 0.0 {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in kde"));
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (xs.len() as f64).powf(-0.2);

    let lo = sorted[0] - 3.0 * h;
    let hi = sorted[sorted.len() - 1] + 3.0 * h;
    let step = (hi - lo) / (grid_size - 1) as f64;
    let norm = 1.0 / (xs.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());

    let points = (0..grid_size)
        .map(|g| {
            let x = lo + g as f64 * step;
            let dens: f64 = xs
                .iter()
                .map(|xi| {
                    let z = (x - xi) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm;
            (x, dens)
        })
        .collect();
    Some(DensityCurve { points, bandwidth: h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn mean_and_sd_hand_values() {
        let xs = [60.0, 70.0];
        assert_eq!(mean(&xs), 65.0);
        // sample sd of {60, 70} = sqrt(50) = 7.0711
        assert!((sample_sd(&xs) - 50.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&xs, 0.5), 2.5);
        // h = 3 * 0.25 = 0.75 -> 1 + 0.75*(2-1)
        assert!((quantile(&xs, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn quantile_single_point() {
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn kde_integrates_to_one_and_peaks_near_mode() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..2_000)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let curve = gaussian_kde(&xs, 256).unwrap();
        let integral = curve.integral();
        assert!((integral - 1.0).abs() < 0.02, "integral {integral}");
        let peak = curve
            .points
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert!(peak.0.abs() < 0.1, "peak at {}", peak.0);
        assert!(curve.points.iter().all(|&(_, d)| d >= 0.0));
    }

    #[test]
    fn kde_degenerate_is_none() {
        assert!(gaussian_kde(&[2.0, 2.0, 2.0], 64).is_none());
        assert!(gaussian_kde(&[1.0], 64).is_none());
    }
}
