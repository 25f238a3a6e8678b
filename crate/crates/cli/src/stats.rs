use sepness_core::sim::chi_square_statistic;
use sepness_core::Result;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson goodness-of-fit test with its upper-tail p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

pub fn chi_square_test(observed: &[u64], expected: &[f64]) -> Result<ChiSquareTest> {
    let c = chi_square_statistic(observed, expected)?;
    let p_value = if c.statistic.is_infinite() {
        0.0
    } else if c.degrees_of_freedom == 0 {
        1.0
    } else {
        ChiSquared::new(c.degrees_of_freedom as f64).expect("positive dof").sf(c.statistic)
    };
    Ok(ChiSquareTest { statistic: c.statistic, degrees_of_freedom: c.degrees_of_freedom, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_has_p_one() {
        let t = chi_square_test(&[250, 500, 250], &[0.25, 0.5, 0.25]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_quantile() {
        let t = chi_square_test(&[1000 + 31, 1000 - 31], &[0.5, 0.5]).unwrap();
        assert!((t.statistic - 1.922).abs() < 1e-9);
        assert!(t.p_value > 0.1 && t.p_value < 0.2);
    }

    #[test]
    fn impossible_cell_fails() {
        let t = chi_square_test(&[10, 1], &[1.0, 0.0]).unwrap();
        assert_eq!(t.p_value, 0.0);
    }
}
