//! Scalar statistics. p-values use the usual asymptotic distributions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Variance with `n - ddof` in the denominator.
pub fn variance(v: &[f64], ddof: usize) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - ddof) as f64
}

/// Linear-interpolation percentile (`q` in [0, 100]) of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Mid-ranks (1-based) and the tie-correction term Σ(t³ − t).
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

/// P(score_ON > score_OFF) with ties counted one half. `labels[i]` is ON.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let n_on = labels.iter().filter(|&&l| l).count();
    let n_off = labels.len() - n_on;
    if n_on == 0 || n_off == 0 {
        return Err(Error::SingleClass);
    }
    let (ranks, _) = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let u = rank_sum - (n_on * (n_on + 1)) as f64 / 2.0;
    Ok(u / (n_on * n_off) as f64)
}

/// Intracluster correlation of scores grouped by condition:
/// σ_b² / (σ_b² + σ_w²), with σ_b² the size-weighted spread of the two
/// cluster means around the grand mean and σ_w² the pooled within-cluster
/// variance (both with denominator N). Constant data gives 0.
pub fn icc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let on: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(s, _)| *s).collect();
    let off: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(s, _)| *s).collect();
    if on.is_empty() || off.is_empty() {
        return Err(Error::SingleClass);
    }
    let n = scores.len() as f64;
    let grand = mean(scores);
    let mut between = 0.0;
    let mut within = 0.0;
    for cluster in [&on, &off] {
        let m = mean(cluster);
        between += cluster.len() as f64 * (m - grand) * (m - grand);
        within += cluster.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let (between, within) = (between / n, within / n);
    if between + within == 0.0 {
        return Ok(0.0);
    }
    Ok((between / (between + within)).clamp(0.0, 1.0))
}

fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

fn normal_sf(z: f64) -> f64 {
    1.0 - Normal::standard().cdf(z)
}

/// Pearson correlation and its two-sided p-value (t with n − 2 df).
pub fn pearson_r(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateVariance("pearson_r"));
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok((r, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub p: f64,
    pub r_squared: f64,
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    let (r, p) = pearson_r(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    Ok(OlsFit {
        slope,
        intercept: my - slope * mx,
        r,
        p,
        r_squared: r * r,
    })
}

/// U statistic of sample `a` and the two-sided p-value from the normal
/// approximation with tie and continuity corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let u2 = n1 * n2 - u1;
    let n = n1 + n2;
    let mu = n1 * n2 / 2.0;
    let sigma = (n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)))).sqrt();
    let p = if sigma == 0.0 || !sigma.is_finite() {
        1.0
    } else {
        let z = (u1.max(u2) - mu - 0.5) / sigma;
        (2.0 * normal_sf(z)).clamp(0.0, 1.0)
    };
    Ok((u1, p))
}

/// Welch's unequal-variance t statistic and two-sided p-value.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(if s.is_empty() {
                Error::EmptySample
            } else {
                Error::TooFewSamples { needed: 2, got: s.len() }
            });
        }
    }
    let (t, df) = welch_statistic(a, b);
    if t.is_nan() {
        return Ok((0.0, 1.0));
    }
    Ok((t, t_two_sided(t, df)))
}

/// Welch t and Welch–Satterthwaite df; NaN t when both variances and the
/// mean difference vanish.
pub(crate) fn welch_statistic(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a, 1) / na, variance(b, 1) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        let t = if diff == 0.0 { f64::NAN } else { diff.signum() * f64::INFINITY };
        return (t, na + nb - 2.0);
    }
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    (diff / se2.sqrt(), df)
}
