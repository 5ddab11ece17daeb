//! Aggregation of per-drop results: throughput averages, degradation and
//! achievement ratios, percentile user throughput and confidence intervals.

use crate::engine::{DropResult, UserClass};
use crate::error::{Error, Result};

/// Two-sided 95% standard-normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Relative macro throughput loss `(T_m0 - T_m) / T_m0`.
pub fn drmt(t_m0: f64, t_m: f64) -> Result<f64> {
    if t_m0 <= 0.0 {
        return Err(Error::ZeroBaseline("macro"));
    }
    Ok((t_m0 - t_m) / t_m0)
}

/// Femto throughput relative to the fixed-cap reference, `T_f / T_f0`.
pub fn arft(t_f: f64, t_f0: f64) -> Result<f64> {
    if t_f0 <= 0.0 {
        return Err(Error::ZeroBaseline("femto"));
    }
    Ok(t_f / t_f0)
}

/// Empirical `p`-quantile with linear interpolation between order
/// statistics (position `p * (n - 1)`). `None` on empty input.
pub fn percentile_user_throughput(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, p))
}

fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// A point estimate with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub drops: usize,
}

impl Estimate {
    fn normal(value: f64, se: f64, drops: usize) -> Self {
        Estimate {
            value,
            ci_low: value - Z95 * se,
            ci_high: value + Z95 * se,
            drops,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample covariance (n - 1 denominator); zero for fewer than two samples.
fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let (mx, my) = (mean(x), mean(y));
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (n - 1) as f64
}

/// Mean over drops with a normal-approximation interval.
pub fn mean_ci(samples: &[f64]) -> Option<Estimate> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len();
    let se = (covariance(samples, samples) / n as f64).sqrt();
    Some(Estimate::normal(mean(samples), se, n))
}

/// Mean of the paired differences `a_i - b_i`.
pub fn paired_difference(a: &[f64], b: &[f64]) -> Option<Estimate> {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_ci(&d)
}

/// `mean(num) / mean(den)` over paired drops, delta-method interval.
pub fn ratio_of_means(num: &[f64], den: &[f64]) -> Result<Estimate> {
    assert_eq!(num.len(), den.len(), "paired samples differ in length");
    if num.is_empty() {
        return Err(Error::ZeroBaseline("empty sample"));
    }
    let (mx, my) = (mean(num), mean(den));
    if my <= 0.0 {
        return Err(Error::ZeroBaseline("ratio denominator"));
    }
    let r = mx / my;
    let n = num.len() as f64;
    let var = (covariance(num, num) - 2.0 * r * covariance(num, den)
        + r * r * covariance(den, den))
        / (my * my * n);
    Ok(Estimate::normal(r, var.max(0.0).sqrt(), num.len()))
}

/// DRMT over paired drops: `1 - mean(T_m) / mean(T_m0)`.
pub fn drmt_estimate(t_m0: &[f64], t_m: &[f64]) -> Result<Estimate> {
    let r = ratio_of_means(t_m, t_m0).map_err(|_| Error::ZeroBaseline("macro"))?;
    Ok(Estimate {
        value: 1.0 - r.value,
        ci_low: 1.0 - r.ci_high,
        ci_high: 1.0 - r.ci_low,
        drops: r.drops,
    })
}

/// ARFT over paired drops: `mean(T_f) / mean(T_f0)`.
pub fn arft_estimate(t_f: &[f64], t_f0: &[f64]) -> Result<Estimate> {
    ratio_of_means(t_f, t_f0).map_err(|_| Error::ZeroBaseline("femto"))
}

/// Pooled percentile with a drop-level bootstrap interval.
///
/// `groups[i]` holds the user throughputs of drop `i`. The resampling is
/// seeded so the interval is reproducible.
pub fn percentile_estimate(groups: &[Vec<f64>], p: f64, seed: u64) -> Option<Estimate> {
    use rand::Rng;
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let value = percentile_user_throughput(&pooled, p)?;
    const RESAMPLES: usize = 200;
    let mut rng = crate::rng::stream(seed, &[0x6273_7472]);
    let mut stats = Vec::with_capacity(RESAMPLES);
    let mut buf = Vec::with_capacity(pooled.len());
    for _ in 0..RESAMPLES {
        buf.clear();
        for _ in 0..groups.len() {
            buf.extend_from_slice(&groups[rng.random_range(0..groups.len())]);
        }
        if let Some(q) = percentile_user_throughput(&buf, p) {
            stats.push(q);
        }
    }
    stats.sort_by(f64::total_cmp);
    Some(Estimate {
        value,
        ci_low: quantile_sorted(&stats, 0.025),
        ci_high: quantile_sorted(&stats, 0.975),
        drops: groups.len(),
    })
}

/// Throughput statistics of one scheme at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputSummary {
    /// Centre macro cell throughput per drop.
    pub macro_per_drop: Vec<f64>,
    /// Average measured femtocell throughput per drop (drops without a
    /// measured femtocell are skipped).
    pub femto_per_drop: Vec<f64>,
    pub macro_users: Vec<Vec<f64>>,
    pub femto_users: Vec<Vec<f64>>,
    pub macro_baseline: Option<Vec<f64>>,
    pub femto_baseline: Option<Vec<f64>>,
}

impl ThroughputSummary {
    pub fn from_results(results: &[DropResult]) -> Self {
        ThroughputSummary {
            macro_per_drop: results
                .iter()
                .map(|r| r.macro_cell_throughput_bps)
                .collect(),
            femto_per_drop: results
                .iter()
                .filter_map(|r| r.femto_avg_throughput_bps())
                .collect(),
            macro_users: results
                .iter()
                .map(|r| r.measured_user_throughputs(UserClass::Macro).collect())
                .collect(),
            femto_users: results
                .iter()
                .map(|r| r.measured_user_throughputs(UserClass::Femto).collect())
                .collect(),
            macro_baseline: None,
            femto_baseline: None,
        }
    }

    pub fn drops(&self) -> usize {
        self.macro_per_drop.len()
    }

    pub fn macro_avg(&self) -> f64 {
        mean(&self.macro_per_drop)
    }

    pub fn femto_avg(&self) -> Option<f64> {
        (!self.femto_per_drop.is_empty()).then(|| mean(&self.femto_per_drop))
    }

    pub fn drmt(&self) -> Result<Estimate> {
        let base = self
            .macro_baseline
            .as_ref()
            .ok_or(Error::ZeroBaseline("macro"))?;
        drmt_estimate(base, &self.macro_per_drop)
    }

    pub fn arft(&self) -> Result<Estimate> {
        let base = self
            .femto_baseline
            .as_ref()
            .ok_or(Error::ZeroBaseline("femto"))?;
        arft_estimate(&self.femto_per_drop, base)
    }
}
