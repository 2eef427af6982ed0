//! Two-sample statistical tests.
//!
//! Every test returns the test statistic together with the two-sided
//! probability that both samples were drawn from the same population. The
//! splitting criteria compare that probability against their Type-I error
//! budget.

mod kolmogorov_smirnov;
mod mann_whitney;
pub mod special;
mod t_tests;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kolmogorov_smirnov::kolmogorov_smirnov_test;
pub use mann_whitney::{mann_whitney_u_test, mwu_exact_p_value, mwu_normal_p_value, mwu_u_statistics, MWU_EXACT_MAX_N};
pub use t_tests::{student_t_test, welch_test};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("sample has {got} values, test needs at least {need}")]
    InsufficientSample { got: usize, need: usize },
    #[error("sample variance is zero, the test is undefined")]
    DegenerateVariance,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub degrees_of_freedom: Option<f64>,
}

/// The four tests available to the splitting criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoSampleTest {
    StudentT,
    Welch,
    MannWhitney,
    KolmogorovSmirnov,
}

impl TwoSampleTest {
    pub const ALL: [TwoSampleTest; 4] = [
        TwoSampleTest::StudentT,
        TwoSampleTest::Welch,
        TwoSampleTest::MannWhitney,
        TwoSampleTest::KolmogorovSmirnov,
    ];

    pub fn run(self, a: &[f64], b: &[f64]) -> Result<TestOutcome, StatsError> {
        match self {
            TwoSampleTest::StudentT => student_t_test(a, b),
            TwoSampleTest::Welch => welch_test(a, b),
            TwoSampleTest::MannWhitney => mann_whitney_u_test(a, b),
            TwoSampleTest::KolmogorovSmirnov => kolmogorov_smirnov_test(a, b),
        }
    }

    /// Smallest per-group sample size the test accepts.
    pub fn min_group_size(self) -> usize {
        match self {
            TwoSampleTest::StudentT | TwoSampleTest::Welch => 2,
            TwoSampleTest::MannWhitney | TwoSampleTest::KolmogorovSmirnov => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TwoSampleTest::StudentT => "student_t",
            TwoSampleTest::Welch => "welch",
            TwoSampleTest::MannWhitney => "mann_whitney",
            TwoSampleTest::KolmogorovSmirnov => "kolmogorov_smirnov",
        }
    }
}

impl std::fmt::Display for TwoSampleTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_sample(x: &[f64], need: usize) -> Result<(), StatsError> {
    if x.len() < need {
        return Err(StatsError::InsufficientSample { got: x.len(), need });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Mean and unbiased variance.
fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}
