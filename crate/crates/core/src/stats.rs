//! Small statistics toolkit: block jackknife, moments, regressions.

use crate::error::{Error, Result};

/// Default jackknife block length.
pub const BLOCK: usize = 100;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Sample correlation of two equal-length series.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Per-block means of several per-sample series, the input of [`jackknife`].
///
/// `columns[k][s]` is the value of quantity `k` on sample `s`. Samples are
/// grouped into consecutive blocks of `block` (a trailing partial block is
/// dropped so all blocks weigh the same).
#[derive(Clone, Debug)]
pub struct BlockMeans {
    means: Vec<Vec<f64>>,
}

impl BlockMeans {
    pub fn new(columns: &[&[f64]], block: usize) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidParameter("series of unequal length".into()));
        }
        let n_blocks = n / block.max(1);
        if n_blocks < 2 {
            return Err(Error::InsufficientSamples { need: 2 * block, got: n });
        }
        let means = (0..n_blocks)
            .map(|b| columns.iter().map(|c| mean(&c[b * block..(b + 1) * block])).collect())
            .collect();
        Ok(Self { means })
    }

    pub fn n_blocks(&self) -> usize {
        self.means.len()
    }

    /// Grand means over all retained samples.
    pub fn totals(&self) -> Vec<f64> {
        let k = self.means[0].len();
        (0..k).map(|j| self.means.iter().map(|m| m[j]).sum::<f64>() / self.n_blocks() as f64).collect()
    }

    /// Delete-one-block jackknife of a smooth function of the column means.
    /// Returns `(estimate at full data, standard error)`.
    pub fn jackknife(&self, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let nb = self.n_blocks() as f64;
        let total = self.totals();
        let full = f(&total);
        let loo: Vec<f64> = self
            .means
            .iter()
            .map(|m| {
                let reduced: Vec<f64> = total.iter().zip(m).map(|(t, x)| (t * nb - x) / (nb - 1.0)).collect();
                f(&reduced)
            })
            .collect();
        let lm = mean(&loo);
        let var = (nb - 1.0) / nb * loo.iter().map(|v| (v - lm) * (v - lm)).sum::<f64>();
        (full, var.sqrt())
    }
}

/// Mean and blocked jackknife standard error of one series.
pub fn mean_se(xs: &[f64], block: usize) -> Result<(f64, f64)> {
    Ok(BlockMeans::new(&[xs], block)?.jackknife(|m| m[0]))
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Coefficient of determination of a fitted line.
pub fn r_squared(xs: &[f64], ys: &[f64], slope: f64, intercept: f64) -> f64 {
    let my = mean(ys);
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Result of a weighted least-squares fit through the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OriginFit {
    pub slope: f64,
    pub slope_se: f64,
    /// Weighted coefficient of determination about the weighted mean.
    pub r2: f64,
}

/// Fit `y = slope·x` with weights `1/se²` (unit weights where `se` is zero).
pub fn origin_fit(xs: &[f64], ys: &[f64], se: &[f64]) -> OriginFit {
    let w: Vec<f64> = se.iter().map(|s| if *s > 0.0 { 1.0 / (s * s) } else { 1.0 }).collect();
    let sxx: f64 = xs.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).zip(&w).map(|((x, y), w)| w * x * y).sum();
    let slope = sxy / sxx;
    let wsum: f64 = w.iter().sum();
    let ybar = ys.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let ss_res: f64 = xs.iter().zip(ys).zip(&w).map(|((x, y), w)| w * (y - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().zip(&w).map(|(y, w)| w * (y - ybar).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    OriginFit { slope, slope_se: 1.0 / sxx.sqrt(), r2 }
}

/// Sample excess kurtosis with its large-sample standard error `sqrt(24/n)`.
pub fn excess_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m4 / (m2 * m2) - 3.0, (24.0 / n).sqrt())
}

/// Raw moments `E[X^k]`, `k = 1..=4`, each with a blocked jackknife SE.
pub fn raw_moments(xs: &[f64], block: usize) -> Result<[(f64, f64); 4]> {
    let powers: Vec<Vec<f64>> = (1..=4).map(|k| xs.iter().map(|x| x.powi(k)).collect()).collect();
    let cols: Vec<&[f64]> = powers.iter().map(|p| p.as_slice()).collect();
    let bm = BlockMeans::new(&cols, block)?;
    let mut out = [(0.0, 0.0); 4];
    for (k, o) in out.iter_mut().enumerate() {
        *o = bm.jackknife(|m| m[k]);
    }
    Ok(out)
}

/// Two-sample z-score of a difference of independent estimates.
pub fn z_score(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0) / (a.1 * a.1 + b.1 * b.1).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jackknife_of_mean_matches_block_standard_error() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1013) as f64 / 1013.0).collect();
        let (m, se) = mean_se(&xs, 100).unwrap();
        let blocks: Vec<f64> = xs.chunks(100).map(mean).collect();
        assert!((m - mean(&xs)).abs() < 1e-12);
        let direct = (variance(&blocks) / blocks.len() as f64).sqrt();
        assert!((se - direct).abs() < 1e-12);
    }

    #[test]
    fn jackknife_needs_two_blocks() {
        assert!(matches!(mean_se(&[1.0; 150], 100), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (s, c) = linear_fit(&xs, &ys);
        assert!((s - 3.0).abs() < 1e-12 && (c + 1.0).abs() < 1e-12);
        assert!((r_squared(&xs, &ys, s, c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn origin_fit_exact() {
        let xs = [0.1, 0.4, 0.7, 0.2, 0.9];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x).collect();
        let f = origin_fit(&xs, &ys, &[0.01; 5]);
        assert!((f.slope - 2.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kurtosis_of_symmetric_two_point_law() {
        let xs: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((excess_kurtosis(&xs).0 + 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn correlation_is_bounded(v in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..50)) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let r = correlation(&xs, &ys);
            prop_assume!(r.is_finite());
            prop_assert!(r.abs() <= 1.0 + 1e-9);
        }

        #[test]
        fn jackknife_se_is_scale_equivariant(v in proptest::collection::vec(-10f64..10.0, 200..400), c in 0.1f64..10.0) {
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            let (_, s1) = mean_se(&v, 100).unwrap();
            let (_, s2) = mean_se(&scaled, 100).unwrap();
            prop_assert!((s2 - c * s1).abs() <= 1e-9 * (1.0 + s2));
        }
    }
}
