use serde::Serialize;

use crate::error::{Error, Result};

/// Binning rule for [`Histogram::from_samples`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Binning {
    /// Width `2·IQR·n^(-1/3)` over the sample range.
    #[default]
    FreedmanDiaconis,
    /// Fixed width over the sample range.
    Width(f64),
    /// Fixed uniform edges; samples outside count as under/overflow.
    Edges { lo: f64, hi: f64, bins: usize },
}

/// Upper bound on automatically chosen bin counts.
const MAX_AUTO_BINS: usize = 20_000;

/// Uniform-width histogram of field values (µT).
///
/// Counts are stored as floats so weighted or rescaled histograms share the
/// same type as raw counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<f64>,
    total_n: f64,
    underflow: f64,
    overflow: f64,
}

impl Histogram {
    pub fn from_samples(data: &[f64], binning: Binning) -> Result<Self> {
        let mut finite: Vec<f64> = data.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            return Err(Error::Empty("no finite samples to histogram".into()));
        }
        let (lo, hi, bins) = match binning {
            Binning::Edges { lo, hi, bins } => {
                if !(hi > lo) || bins == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "invalid histogram edges [{lo}, {hi}) with {bins} bins"
                    )));
                }
                (lo, hi, bins)
            }
            Binning::Width(w) => {
                let (min, max) = min_max(&finite);
                span_for_width(min, max, w)?
            }
            Binning::FreedmanDiaconis => {
                finite.sort_unstable_by(f64::total_cmp);
                let (min, max) = (finite[0], finite[finite.len() - 1]);
                let iqr = quantile_sorted(&finite, 0.75) - quantile_sorted(&finite, 0.25);
                let mut w = 2.0 * iqr * (finite.len() as f64).powf(-1.0 / 3.0);
                if !(w > 0.0) {
                    w = if max > min { (max - min) / 10.0 } else { 1.0 };
                }
                let min_w = (max - min) / MAX_AUTO_BINS as f64;
                span_for_width(min, max, w.max(min_w))?
            }
        };
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0.0; bins];
        let (mut under, mut over) = (0.0, 0.0);
        for &v in &finite {
            if v < lo {
                under += 1.0;
            } else if v >= hi {
                over += 1.0;
            } else {
                let b = (((v - lo) / width) as usize).min(bins - 1);
                counts[b] += 1.0;
            }
        }
        let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        Ok(Self {
            edges,
            counts,
            total_n: finite.len() as f64,
            underflow: under,
            overflow: over,
        })
    }

    /// Histogram from explicit uniform edges and counts.
    pub fn from_counts(edges: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if edges.len() != counts.len() + 1 || counts.is_empty() {
            return Err(Error::Structure(format!(
                "{} edges for {} counts",
                edges.len(),
                counts.len()
            )));
        }
        if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidParameter("counts must be finite and non-negative".into()));
        }
        let total = counts.iter().sum();
        Ok(Self {
            edges,
            counts,
            total_n: total,
            underflow: 0.0,
            overflow: 0.0,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total_n(&self) -> f64 {
        self.total_n
    }

    pub fn underflow(&self) -> f64 {
        self.underflow
    }

    pub fn overflow(&self) -> f64 {
        self.overflow
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Total in-range count.
    pub fn in_range(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn nonempty_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0.0).count()
    }

    /// Same binning with every count multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            edges: self.edges.clone(),
            counts: self.counts.iter().map(|v| v * c).collect(),
            total_n: self.total_n * c,
            underflow: self.underflow * c,
            overflow: self.overflow * c,
        }
    }

    /// Binned moments `(mean, std, skewness)` of the in-range counts.
    pub fn moments(&self) -> Option<(f64, f64, f64)> {
        let n = self.in_range();
        if n <= 0.0 {
            return None;
        }
        let centers = self.centers();
        let mean = centers.iter().zip(&self.counts).map(|(x, c)| x * c).sum::<f64>() / n;
        let (mut m2, mut m3) = (0.0, 0.0);
        for (x, c) in centers.iter().zip(&self.counts) {
            let d = x - mean;
            m2 += c * d * d;
            m3 += c * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        let std = m2.sqrt();
        let skew = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
        Some((mean, std, skew))
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn span_for_width(min: f64, max: f64, w: f64) -> Result<(f64, f64, usize)> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidParameter(format!("bin width must be positive, got {w}")));
    }
    let bins = ((max - min) / w).floor() as usize + 1;
    if bins > 10 * MAX_AUTO_BINS {
        return Err(Error::InvalidParameter(format!("bin width {w} gives {bins} bins")));
    }
    Ok((min, min + bins as f64 * w, bins))
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_edges_with_overflow() {
        let h = Histogram::from_samples(
            &[-1.0, 0.0, 0.5, 0.99, 1.0, 2.5, f64::NAN],
            Binning::Edges { lo: 0.0, hi: 2.0, bins: 4 },
        )
        .unwrap();
        assert_eq!(h.counts(), &[1.0, 2.0, 1.0, 0.0]);
        assert_eq!((h.underflow(), h.overflow(), h.total_n()), (1.0, 1.0, 6.0));
        assert_eq!(h.centers(), vec![0.25, 0.75, 1.25, 1.75]);
    }

    #[test]
    fn freedman_diaconis_width() {
        let data: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let h = Histogram::from_samples(&data, Binning::FreedmanDiaconis).unwrap();
        let expected = 2.0 * (0.74925 - 0.24975) * 1000f64.powf(-1.0 / 3.0);
        assert!((h.bin_width() - expected).abs() < 1e-9);
        assert_eq!(h.in_range(), 1000.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(Histogram::from_samples(&[], Binning::default()).is_err());
        assert!(Histogram::from_counts(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn counts_account_for_every_sample(
            data in proptest::collection::vec(-10.0f64..10.0, 1..500),
            lo in -8.0f64..0.0, width in 0.1f64..8.0, bins in 1usize..50,
        ) {
            let h = Histogram::from_samples(&data, Binning::Edges { lo, hi: lo + width, bins }).unwrap();
            prop_assert_eq!(h.edges().len(), h.counts().len() + 1);
            prop_assert_eq!(h.in_range() + h.underflow() + h.overflow(), h.total_n());
            let auto = Histogram::from_samples(&data, Binning::FreedmanDiaconis).unwrap();
            prop_assert_eq!(auto.in_range(), data.len() as f64);
        }
    }
}
