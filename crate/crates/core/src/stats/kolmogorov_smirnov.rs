use super::special::kolmogorov_sf;
use super::{check_sample, StatsError, TestOutcome};

/// Two-sample Kolmogorov–Smirnov test.
///
/// `D` is the largest gap between the two empirical distribution functions
/// over the pooled sample points. The p-value is the asymptotic Kolmogorov
/// survival function at `D · sqrt(n·n' / (n + n'))`.
pub fn kolmogorov_smirnov_test(a: &[f64], b: &[f64]) -> Result<TestOutcome, StatsError> {
    check_sample(a, 1)?;
    check_sample(b, 1)?;
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n1, n2) = (xs.len(), ys.len());

    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n1 && j < n2 {
        let x = xs[i].min(ys[j]);
        while i < n1 && xs[i] <= x {
            i += 1;
        }
        while j < n2 && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    // once one sample is exhausted the gap only shrinks toward zero

    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let lambda = d * (n1f * n2f / (n1f + n2f)).sqrt();
    Ok(TestOutcome {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        degrees_of_freedom: None,
    })
}
