//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

pub mod props;

use mdpdt::harness::HarnessConfig;
use mdpdt::model::Experience;
use mdpdt::tree::{DecisionTree, Measurement, ParameterSpace, StateId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Double-exponential (tanh-sinh) quadrature of a bounded `f` over `[a, b]`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    for k in -(6 * 64)..=(6 * 64) {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        let x = mid + half * u.tanh();
        if x > a && x < b {
            sum += w * f(x);
        }
    }
    sum * h * half
}

/// Two-sided Student t tail `P(|T| >= t)` with `nu` degrees of freedom.
/// With `t = sqrt(nu)·tan θ` the density becomes proportional to
/// `cos^(nu-1) θ` on `[0, π/2]`.
pub fn t_two_sided_oracle(t: f64, nu: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let theta = (t.abs() / nu.sqrt()).atan();
    let g = |x: f64| x.cos().powf(nu - 1.0);
    let tail = tanh_sinh(g, theta, FRAC_PI_2);
    let total = tanh_sinh(g, 0.0, FRAC_PI_2);
    tail / total
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Pooled t statistic and df straight from the textbook formula.
pub fn pooled_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let sp2 = ((n1 - 1.0) * var(a) + (n2 - 1.0) * var(b)) / (n1 + n2 - 2.0);
    ((mean(a) - mean(b)) / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt(), n1 + n2 - 2.0)
}

/// Welch statistic and Welch–Satterthwaite df.
pub fn welch_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (q1, q2) = (var(a) / n1, var(b) / n2);
    let t = (mean(a) - mean(b)) / (q1 + q2).sqrt();
    let df = (q1 + q2).powi(2) / (q1 * q1 / (n1 - 1.0) + q2 * q2 / (n2 - 1.0));
    (t, df)
}

/// Midranks of the pooled sample, first `a` then `b`.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    pooled
        .iter()
        .map(|&v| {
            let below = pooled.iter().filter(|&&w| w < v).count() as f64;
            let equal = pooled.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Exact two-sided Mann–Whitney p-value by enumerating every way of
/// choosing which pooled observations form the first sample.
/// Returns `(U1, p)`.
pub fn mwu_enumeration(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n1 = a.len();
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    assert!(n <= 24);
    let ranks = midranks(&pooled);
    let offset = (n1 * (n1 + 1)) as f64 / 2.0;
    let u_of = |mask: u32| -> f64 { (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum::<f64>() - offset };
    let observed_mask: u32 = (1u32 << n1) - 1;
    let u1 = u_of(observed_mask);
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let u = u_of(mask);
        total += 1;
        if u <= u1 + 1e-9 {
            le += 1;
        }
        if u >= u1 - 1e-9 {
            ge += 1;
        }
    }
    let p = (2.0 * (le.min(ge) as f64) / total as f64).min(1.0);
    (u1, p)
}

/// Null distribution of U1 for tie-free samples of sizes `n1`, `n2`:
/// occurrence counts per U value and one rank-subset mask attaining each.
pub fn mwu_null_counts(n1: usize, n2: usize) -> (Vec<u64>, Vec<Option<u32>>) {
    let n = n1 + n2;
    let max_u = n1 * n2;
    let mut counts = vec![0u64; max_u + 1];
    let mut reps = vec![None; max_u + 1];
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let rank_sum: usize = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).sum();
        let u = rank_sum - n1 * (n1 + 1) / 2;
        counts[u] += 1;
        reps[u].get_or_insert(mask);
    }
    (counts, reps)
}

/// Brute-force KS statistic: recount both empirical CDFs at every pooled point.
pub fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
    let mut d: f64 = 0.0;
    for &x in a.iter().chain(b) {
        let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
        let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// A 1-D tree whose leaf `i` is the cell `[i - 0.5, i + 0.5)`.
pub fn line_tree(n: usize) -> DecisionTree {
    let space = ParameterSpace::continuous(&["x"]).unwrap();
    let points: Vec<f64> = (1..n).map(|i| i as f64 - 0.5).collect();
    DecisionTree::build_grid(space, &[("x".to_string(), points)]).unwrap()
}

/// Random experiences over `n` cells and `na` actions.
pub fn random_experiences(rng: &mut ChaCha8Rng, n: usize, na: usize, count: usize) -> Vec<Experience> {
    (0..count)
        .map(|_| {
            let s = rng.gen_range(0..n);
            let a = rng.gen_range(0..na);
            let sp = rng.gen_range(0..n);
            Experience {
                m: Measurement(vec![s as f64 + rng.gen_range(-0.4..0.4)]),
                action: a,
                m_next: Measurement(vec![sp as f64 + rng.gen_range(-0.4..0.4)]),
                reward: rng.gen_range(0.0..10.0),
            }
        })
        .collect()
}

/// Tallies recounted from scratch: `counts[s][a][s']`, `rewards[s][a][s']`.
pub struct Recount {
    pub counts: Vec<Vec<Vec<u64>>>,
    pub rewards: Vec<Vec<Vec<f64>>>,
}

pub fn recount(tree: &DecisionTree, na: usize, log: &[Experience]) -> Recount {
    let n = tree.num_states();
    let mut counts = vec![vec![vec![0u64; n]; na]; n];
    let mut rewards = vec![vec![vec![0.0; n]; na]; n];
    for e in log {
        let s = tree.classify(&e.m).unwrap().0;
        let sp = tree.classify(&e.m_next).unwrap().0;
        counts[s][e.action][sp] += 1;
        rewards[s][e.action][sp] += e.reward;
    }
    Recount { counts, rewards }
}

/// `sweeps` plain synchronous Bellman backups from V = 0.
pub fn brute_force_values(rc: &Recount, gamma: f64, sweeps: usize) -> Vec<f64> {
    let n = rc.counts.len();
    let mut v = vec![0.0; n];
    for _ in 0..sweeps {
        let mut next = vec![0.0; n];
        for s in 0..n {
            let mut best: Option<f64> = None;
            for (a, row) in rc.counts[s].iter().enumerate() {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    continue;
                }
                let mut q = 0.0;
                for sp in 0..n {
                    if row[sp] > 0 {
                        let p = row[sp] as f64 / total as f64;
                        q += p * (rc.rewards[s][a][sp] / row[sp] as f64 + gamma * v[sp]);
                    }
                }
                best = Some(best.map_or(q, |b: f64| b.max(q)));
            }
            next[s] = best.unwrap_or(0.0);
        }
        v = next;
    }
    v
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn s(i: usize) -> StateId {
    StateId(i)
}

/// One of the shipped experiment configurations.
pub fn shipped_config(name: &str) -> HarnessConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    HarnessConfig::load(&path).unwrap()
}
