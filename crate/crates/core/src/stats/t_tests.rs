use super::special::student_t_two_sided;
use super::{check_sample, mean_var, StatsError, TestOutcome};

/// Equal-variance t-test using the pooled variance estimator with
/// `n1 + n2 - 2` degrees of freedom.
pub fn student_t_test(a: &[f64], b: &[f64]) -> Result<TestOutcome, StatsError> {
    check_sample(a, 2)?;
    check_sample(b, 2)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (m1, v1) = mean_var(a);
    let (m2, v2) = mean_var(b);
    let df = n1 + n2 - 2.0;
    let pooled_var = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df;
    if pooled_var <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let t = (m1 - m2) / (pooled_var.sqrt() * (1.0 / n1 + 1.0 / n2).sqrt());
    Ok(TestOutcome {
        statistic: t,
        p_value: student_t_two_sided(t, df),
        degrees_of_freedom: Some(df),
    })
}

/// Unequal-variance t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_test(a: &[f64], b: &[f64]) -> Result<TestOutcome, StatsError> {
    check_sample(a, 2)?;
    check_sample(b, 2)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (m1, v1) = mean_var(a);
    let (m2, v2) = mean_var(b);
    let se1 = v1 / n1;
    let se2 = v2 / n2;
    let se = se1 + se2;
    if se <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let t = (m1 - m2) / se.sqrt();
    let df = se * se / (se1 * se1 / (n1 - 1.0) + se2 * se2 / (n2 - 1.0));
    Ok(TestOutcome {
        statistic: t,
        p_value: student_t_two_sided(t, df),
        degrees_of_freedom: Some(df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let out = student_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert_eq!(out.p_value, 1.0);
        let out = welch_test(&[5.0, 6.0, 7.0], &[5.0, 6.0, 7.0]).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert_eq!(out.p_value, 1.0);
    }

    #[test]
    fn pooled_example() {
        let out = student_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((out.statistic + 1.224_744_871_391_589).abs() < 1e-12);
        assert_eq!(out.degrees_of_freedom, Some(4.0));
        // frozen from the quadrature oracle in tests/stats_oracles.rs
        assert!((out.p_value - 0.287_864_134_726_690_8).abs() < 1e-9);
    }

    #[test]
    fn welch_coincides_with_pooled_for_equal_designs() {
        let s = student_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        let w = welch_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((s.statistic - w.statistic).abs() < 1e-14);
        assert!((w.degrees_of_freedom.unwrap() - 4.0).abs() < 1e-12);
        assert!((s.p_value - w.p_value).abs() < 1e-12);
    }

    #[test]
    fn unequal_sizes_give_interior_p() {
        let out = student_t_test(&[1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(out.statistic.is_finite());
        assert!(out.p_value > 0.0 && out.p_value < 1.0);
    }

    #[test]
    fn error_paths() {
        assert_eq!(
            student_t_test(&[1.0], &[1.0, 2.0]),
            Err(StatsError::InsufficientSample { got: 1, need: 2 })
        );
        assert_eq!(
            student_t_test(&[3.0, 3.0], &[4.0, 4.0]),
            Err(StatsError::DegenerateVariance)
        );
        assert_eq!(welch_test(&[3.0, 3.0], &[4.0, 4.0]), Err(StatsError::DegenerateVariance));
        // one nonzero variance is enough for Welch
        assert!(welch_test(&[3.0, 3.0], &[4.0, 5.0]).is_ok());
        assert_eq!(welch_test(&[f64::NAN, 1.0], &[1.0, 2.0]), Err(StatsError::NonFinite));
    }
}
