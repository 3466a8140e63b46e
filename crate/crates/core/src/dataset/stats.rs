use serde::{Deserialize, Serialize};

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

/// Target summary written next to a dataset CSV. Summary fields are `None`
/// when the dataset is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
    pub histogram: Option<Histogram>,
    /// Local maxima of the smoothed histogram.
    pub modes: usize,
}

impl DatasetStats {
    pub fn from_targets(values: &[f64]) -> Self {
        if values.is_empty() {
            return DatasetStats {
                count: 0,
                mean: None,
                std: None,
                min: None,
                median: None,
                max: None,
                histogram: None,
                modes: 0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let median = if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        };
        let (lo, hi) = (sorted[0], sorted[m - 1]);
        let mut counts = vec![0usize; HISTOGRAM_BINS];
        let width = (hi - lo) / HISTOGRAM_BINS as f64;
        for &v in values {
            let b = if width > 0.0 {
                (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        let modes = histogram_modes(&counts);
        DatasetStats {
            count: values.len(),
            mean: Some(mean),
            std: Some(var.sqrt()),
            min: Some(lo),
            median: Some(median),
            max: Some(hi),
            histogram: Some(Histogram { lo, hi, counts }),
            modes,
        }
    }

    pub fn is_unimodal(&self) -> bool {
        self.modes == 1
    }
}

/// Modes of a histogram: local maxima of its 3-point moving average whose
/// topographic prominence exceeds twice the Poisson standard error of the
/// peak height (2 sqrt(h)). Bumps within counting noise are not modes; a
/// plateau counts once.
pub fn histogram_modes(counts: &[usize]) -> usize {
    let n = counts.len();
    if n == 0 {
        return 0;
    }
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            counts[lo..=hi].iter().sum::<usize>() as f64 / (hi - lo + 1) as f64
        })
        .collect();
    let mut modes = 0;
    let mut i = 0;
    while i < n {
        let h = smooth[i];
        let mut j = i;
        while j + 1 < n && smooth[j + 1] == h {
            j += 1;
        }
        let left_lower = i == 0 || smooth[i - 1] < h;
        let right_lower = j == n - 1 || smooth[j + 1] < h;
        if left_lower && right_lower && h > 0.0 {
            // lowest point on each side before terrain rises above the peak,
            // and whether it does rise
            let side = |range: &mut dyn Iterator<Item = usize>| -> (Option<f64>, bool) {
                let mut m: Option<f64> = None;
                for k in range {
                    if smooth[k] > h {
                        return (m, true);
                    }
                    m = Some(m.map_or(smooth[k], |v: f64| v.min(smooth[k])));
                }
                (m, false)
            };
            let (lmin, lhigher) = side(&mut (0..i).rev());
            let (rmin, rhigher) = side(&mut (j + 1..n));
            // the col is on the way to higher terrain; the highest peak
            // measures down to its lowest surroundings
            let col = match (lhigher, rhigher) {
                (true, true) => lmin.unwrap_or(h).max(rmin.unwrap_or(h)),
                (true, false) => lmin.unwrap_or(h),
                (false, true) => rmin.unwrap_or(h),
                (false, false) => lmin.into_iter().chain(rmin).reduce(f64::min).unwrap_or(0.0),
            };
            if h - col > 2.0 * h.sqrt() {
                modes += 1;
            }
        }
        i = j + 1;
    }
    modes
}
