use alloc::vec::Vec;

use crate::error::{bail_param, Result};

/// Pearson statistic after pooling sparse cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
}

/// Goodness of fit of `observed` counts to probabilities `expected`.
///
/// Cells are taken in order of decreasing expected count; cells expecting
/// fewer than five hits are pooled into one, which is merged into the
/// previous cell if it still expects fewer than five.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() || observed.is_empty() {
        bail_param!("observed and expected cell counts differ");
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        bail_param!("no observations");
    }
    let mass: f64 = expected.iter().sum();
    let dof = observed.len() - 1;
    if observed.iter().zip(expected).any(|(&o, &p)| o > 0 && p <= 0.0) {
        return Ok(ChiSquare { statistic: f64::INFINITY, degrees_of_freedom: dof });
    }
    let mut cells: Vec<(f64, f64)> = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| (o as f64, p / mass * total as f64))
        .collect();
    cells.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut rest = (0.0, 0.0);
    for c in cells {
        if c.1 >= 5.0 {
            pooled.push(c);
        } else {
            rest.0 += c.0;
            rest.1 += c.1;
        }
    }
    if rest.1 > 0.0 || rest.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) if rest.1 < 5.0 => {
                last.0 += rest.0;
                last.1 += rest.1;
            }
            _ => pooled.push(rest),
        }
    }
    let mut statistic = 0.0;
    for (o, e) in pooled.iter().filter(|c| c.1 > 0.0) {
        statistic += (o - e) * (o - e) / e;
    }
    Ok(ChiSquare { statistic, degrees_of_freedom: pooled.len().saturating_sub(1) })
}
