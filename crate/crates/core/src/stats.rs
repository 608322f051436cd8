//! Nonparametric comparison of experimental conditions.
//!
//! Kruskal-Wallis H with mid-rank tie handling and the cubic tie correction,
//! p-values from a hand-rolled regularized incomplete gamma (chi-square
//! upper tail), plus basic summary statistics.

use crate::error::{Error, Result};

/// Outcome of a Kruskal-Wallis H test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KwResult {
    pub h: f64,
    pub df: usize,
    pub p: f64,
    pub tie_correction: f64,
}

/// Kruskal-Wallis H test across `k ≥ 2` groups.
///
/// Pools all values, assigns mid-ranks (ties get the average of the ranks
/// they span), computes
/// `H = 12 / (N (N+1)) · Σ n_j (r̄_j − (N+1)/2)²`
/// and divides by the tie correction `1 − Σ(t³ − t) / (N³ − N)`.
/// The p-value is the chi-square upper tail at `df = k − 1`.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KwResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 groups, got {k}")));
    }
    let mut pooled: Vec<(f64, usize)> = Vec::new();
    for (j, g) in groups.iter().enumerate() {
        let g = g.as_ref();
        if g.is_empty() {
            return Err(Error::invalid(format!("group {j} is empty")));
        }
        for &v in g {
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite value {v} in group {j}")));
            }
            pooled.push((v, j));
        }
    }
    let n = pooled.len();
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 values total, got {n}")));
    }
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // Mid-ranks (1-based) and the tie-correction accumulator.
    let mut rank_sum = vec![0.0f64; k];
    let mut tie_cubic = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let t = (j - i) as f64;
        let mid_rank = (i + 1 + j) as f64 / 2.0; // average of ranks i+1 ..= j
        for &(_, group) in &pooled[i..j] {
            rank_sum[group] += mid_rank;
        }
        tie_cubic += t * t * t - t;
        i = j;
    }

    let nf = n as f64;
    let correction = 1.0 - tie_cubic / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Err(Error::DegenerateData(
            "all pooled values are identical".into(),
        ));
    }

    let grand_mean = (nf + 1.0) / 2.0;
    let mut h = 0.0;
    for (j, g) in groups.iter().enumerate() {
        let nj = g.as_ref().len() as f64;
        let dev = rank_sum[j] / nj - grand_mean;
        h += nj * dev * dev;
    }
    h *= 12.0 / (nf * (nf + 1.0));
    h /= correction;

    let df = k - 1;
    Ok(KwResult {
        h,
        df,
        p: chi2_sf(h, df),
        tie_correction: correction,
    })
}

/// Chi-square upper-tail probability `P(X ≥ x)` at `df` degrees of freedom,
/// evaluated through the regularized incomplete gamma function.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    reg_gamma_q(df as f64 / 2.0, x / 2.0)
}

/// Regularized upper incomplete gamma Q(a, x), a > 0, x ≥ 0.
/// Series expansion below a + 1, Lentz continued fraction above.
fn reg_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 500;
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut term = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 500;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

// Lanczos approximation, g = 5, n = 6.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for (j, &c) in COEFFS.iter().enumerate() {
        ser += c / (x + 1.0 + j as f64);
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Mean, sample std (n − 1), median, and interquartile range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub iqr: f64,
}

/// Summary statistics of a non-empty sample.
///
/// The IQR uses the lower/upper-half medians (the median itself is excluded
/// from both halves when the count is odd).
pub fn summarize(values: &[f64]) -> Result<Summary> {
    let n = values.len();
    if n == 0 {
        return Err(Error::invalid("summary of an empty sample"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite value {bad}")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = median_of(&sorted);
    let half = n / 2;
    let iqr = if n < 2 {
        0.0
    } else {
        let lower = &sorted[..half];
        let upper = &sorted[n - half..];
        median_of(upper) - median_of(lower)
    };
    Ok(Summary {
        mean,
        std,
        median,
        iqr,
    })
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_three_group_case() {
        let r = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]])
            .unwrap();
        assert!((r.h - 7.2).abs() < 1e-12);
        assert_eq!(r.df, 2);
        assert!((r.p - (-3.6f64).exp()).abs() < 1e-10);
        assert_eq!(r.tie_correction, 1.0);
    }

    #[test]
    fn six_groups_report_df_five() {
        let groups: Vec<Vec<f64>> = (0..6).map(|j| vec![j as f64, j as f64 + 0.5]).collect();
        let r = kruskal_wallis(&groups).unwrap();
        assert_eq!(r.df, 5);
    }

    #[test]
    fn identical_groups_give_zero_h() {
        let r = kruskal_wallis(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!(r.h.abs() < 1e-12);
        assert_eq!(r.p, 1.0);
        assert!((r.tie_correction - 0.8).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        assert!(matches!(
            kruskal_wallis(&[vec![3.0, 3.0], vec![3.0, 3.0]]),
            Err(Error::DegenerateData(_))
        ));
        assert!(kruskal_wallis(&[vec![1.0, 2.0]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0], vec![]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0], vec![2.0]]).is_err()); // N < 3
    }

    #[test]
    fn rank_based_so_monotone_invariant() {
        let a = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let b: Vec<Vec<f64>> = a
            .iter()
            .map(|g| g.iter().map(|v: &f64| v.exp() * 3.0 + 1.0).collect())
            .collect();
        let ra = kruskal_wallis(&a).unwrap();
        let rb = kruskal_wallis(&b).unwrap();
        assert_eq!(ra.h, rb.h);
        assert_eq!(ra.p, rb.p);
    }

    #[test]
    fn chi2_sf_anchors() {
        assert_eq!(chi2_sf(0.0, 1), 1.0);
        assert!((chi2_sf(7.2, 2) - (-3.6f64).exp()).abs() < 1e-10);
        // the p < .001 convention at five degrees of freedom
        assert!(chi2_sf(25.840, 5) < 0.001);
        assert!(chi2_sf(23.250, 5) < 0.001);
    }

    #[test]
    fn chi2_sf_df2_is_exponential_everywhere() {
        let mut x = 0.0;
        while x <= 50.0 {
            assert!(
                (chi2_sf(x, 2) - (-x / 2.0).exp()).abs() < 1e-10,
                "mismatch at x = {x}"
            );
            x += 0.125;
        }
    }

    #[test]
    fn chi2_sf_decreases_in_x() {
        for df in [1usize, 2, 3, 5, 10] {
            let mut prev = 1.0;
            for i in 1..200 {
                let x = i as f64 * 0.25;
                let p = chi2_sf(x, df);
                assert!(p <= prev + 1e-14, "df {df} not decreasing at {x}");
                assert!((0.0..=1.0).contains(&p));
                prev = p;
            }
        }
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.std, 0.0);

        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);

        let s = summarize(&[0.0, 10.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert!((s.std - 50.0f64.sqrt()).abs() < 1e-12);

        assert!(summarize(&[]).is_err());
    }
}
