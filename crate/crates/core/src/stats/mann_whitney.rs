use super::special::normal_sf;
use super::{check_sample, StatsError, TestOutcome};

/// Pooled sizes up to this bound use the exact permutation distribution.
pub const MWU_EXACT_MAX_N: usize = 20;

/// Mann–Whitney U test.
///
/// The reported statistic is `min(U1, U2)`. Ties receive midranks. For
/// `n1 + n2 <= 20` the p-value comes from the exact permutation
/// distribution of the rank sum (ties included); above that, the normal
/// approximation with tie-corrected variance and continuity correction.
pub fn mann_whitney_u_test(a: &[f64], b: &[f64]) -> Result<TestOutcome, StatsError> {
    check_sample(a, 1)?;
    check_sample(b, 1)?;
    let ranked = RankedPair::new(a, b);
    let (u1, u2) = ranked.u_statistics();
    let p_value = if ranked.total() <= MWU_EXACT_MAX_N {
        ranked.exact_p()
    } else {
        ranked.normal_p()
    };
    Ok(TestOutcome {
        statistic: u1.min(u2),
        p_value,
        degrees_of_freedom: None,
    })
}

/// Exact permutation p-value regardless of sample size. Cost grows as
/// `O(N · n1 · N²)`, so keep `N` modest.
pub fn mwu_exact_p_value(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check_sample(a, 1)?;
    check_sample(b, 1)?;
    Ok(RankedPair::new(a, b).exact_p())
}

/// Normal-approximation p-value regardless of sample size.
pub fn mwu_normal_p_value(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check_sample(a, 1)?;
    check_sample(b, 1)?;
    Ok(RankedPair::new(a, b).normal_p())
}

/// `(U1, U2)` with midranks on ties.
pub fn mwu_u_statistics(a: &[f64], b: &[f64]) -> Result<(f64, f64), StatsError> {
    check_sample(a, 1)?;
    check_sample(b, 1)?;
    Ok(RankedPair::new(a, b).u_statistics())
}

struct RankedPair {
    n1: usize,
    n2: usize,
    /// Twice the midrank of every pooled value, so all ranks are integers.
    doubled_ranks: Vec<u64>,
    /// Twice the rank sum of the first sample.
    doubled_r1: u64,
    /// Sizes of the tie groups.
    tie_groups: Vec<usize>,
}

impl RankedPair {
    fn new(a: &[f64], b: &[f64]) -> Self {
        let mut pooled: Vec<(f64, bool)> = a
            .iter()
            .map(|&v| (v, true))
            .chain(b.iter().map(|&v| (v, false)))
            .collect();
        pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

        let n = pooled.len();
        let mut doubled_ranks = Vec::with_capacity(n);
        let mut doubled_r1 = 0u64;
        let mut tie_groups = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && pooled[j].0 == pooled[i].0 {
                j += 1;
            }
            // ranks i+1 ..= j, midrank = (i+1+j)/2
            let doubled = (i + 1 + j) as u64;
            for item in &pooled[i..j] {
                doubled_ranks.push(doubled);
                if item.1 {
                    doubled_r1 += doubled;
                }
            }
            tie_groups.push(j - i);
            i = j;
        }
        RankedPair {
            n1: a.len(),
            n2: b.len(),
            doubled_ranks,
            doubled_r1,
            tie_groups,
        }
    }

    fn total(&self) -> usize {
        self.n1 + self.n2
    }

    fn u_statistics(&self) -> (f64, f64) {
        let (n1, n2) = (self.n1 as f64, self.n2 as f64);
        let r1 = self.doubled_r1 as f64 / 2.0;
        let doubled_total: u64 = self.doubled_ranks.iter().sum();
        let r2 = (doubled_total - self.doubled_r1) as f64 / 2.0;
        (r1 - n1 * (n1 + 1.0) / 2.0, r2 - n2 * (n2 + 1.0) / 2.0)
    }

    /// Two-sided p-value from the exact distribution of the first sample's
    /// rank sum over all `C(N, n1)` equally likely group assignments.
    fn exact_p(&self) -> f64 {
        let n1 = self.n1;
        let max_sum: u64 = self.doubled_ranks.iter().sum();
        let width = max_sum as usize + 1;
        // ways[k][s]: subsets of size k with doubled rank sum s
        let mut ways = vec![vec![0f64; width]; n1 + 1];
        ways[0][0] = 1.0;
        for &r in &self.doubled_ranks {
            let r = r as usize;
            for k in (1..=n1).rev() {
                let (lower, upper) = ways.split_at_mut(k);
                let prev = &lower[k - 1];
                let cur = &mut upper[0];
                for s in (r..width).rev() {
                    if prev[s - r] != 0.0 {
                        cur[s] += prev[s - r];
                    }
                }
            }
        }
        let dist = &ways[n1];
        let observed = self.doubled_r1 as usize;
        let total: f64 = dist.iter().sum();
        let below: f64 = dist[..=observed].iter().sum();
        let above: f64 = dist[observed..].iter().sum();
        (2.0 * below.min(above) / total).min(1.0)
    }

    fn normal_p(&self) -> f64 {
        let (n1, n2) = (self.n1 as f64, self.n2 as f64);
        let n = n1 + n2;
        let (u1, _) = self.u_statistics();
        let mean = n1 * n2 / 2.0;
        let tie_term: f64 = self
            .tie_groups
            .iter()
            .map(|&t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum();
        let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
        if var <= 0.0 {
            return 1.0;
        }
        let dev = ((u1 - mean).abs() - 0.5).max(0.0);
        (2.0 * normal_sf(dev / var.sqrt())).min(1.0)
    }
}
