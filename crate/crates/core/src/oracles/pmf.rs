use statrs::function::factorial::ln_binomial;

use crate::error::SensingError;

/// `P(c = x)` for a counter that stops at the first failure of a fair sign
/// test or at `l`: `2^{-x}` for `x < l` and `2^{-(l-1)}` at `x = l`.
pub fn truncated_geometric_pmf(l: usize, x: usize) -> Result<f64, SensingError> {
    if x == 0 || x > l {
        return Err(SensingError::OutOfSupport { x });
    }
    let e = if x < l { x } else { l - 1 };
    Ok(0.5f64.powi(e as i32))
}

fn check_hypergeometric(n: usize, s: usize, draw: usize) -> Result<(), SensingError> {
    if s > n || draw > n {
        return Err(SensingError::InvalidParams(format!(
            "hypergeometric needs s, draw <= n (n = {n}, s = {s}, draw = {draw})"
        )));
    }
    Ok(())
}

/// Probability that `draw` entries sampled without replacement from `n`
/// contain exactly `k` of `s` marked ones.
pub fn hypergeometric_pmf(n: usize, s: usize, draw: usize, k: usize) -> Result<f64, SensingError> {
    check_hypergeometric(n, s, draw)?;
    if k > s.min(draw) {
        return Err(SensingError::OutOfSupport { x: k });
    }
    if draw - k > n - s {
        return Ok(0.0);
    }
    let (n, s, draw, k) = (n as u64, s as u64, draw as u64, k as u64);
    Ok((ln_binomial(s, k) + ln_binomial(n - s, draw - k) - ln_binomial(n, draw)).exp())
}

pub fn hypergeometric_mean(n: usize, s: usize, draw: usize) -> Result<f64, SensingError> {
    check_hypergeometric(n, s, draw)?;
    Ok(draw as f64 * s as f64 / n as f64)
}

pub fn hypergeometric_variance(n: usize, s: usize, draw: usize) -> Result<f64, SensingError> {
    check_hypergeometric(n, s, draw)?;
    if n < 2 {
        return Ok(0.0);
    }
    let (n, s, d) = (n as f64, s as f64, draw as f64);
    Ok(d * s / n * (1.0 - s / n) * (n - d) / (n - 1.0))
}
