//! Closed-form amplitude bounds.
//!
//! Every calculator returns a [`BoundSpec`]: a critical amplitude `μ` with
//! the inputs it was evaluated at. Unsubscripted logarithms are natural;
//! `log₂` appears only where the formula counts halvings. Formulas whose
//! bracket goes negative are clamped to 0 and flagged instead of failing.
//!
//! | name | value |
//! |---|---|
//! | `detection_lower` | `√((2|Ξ|/(s m)) ln(1/(2ε)))` |
//! | `estimation_lower`, `cs_lower` | `√((2n/m)(ln s + ln((n−s)/(n+1)) + ln(1/(2ε))))` |
//! | `estimation_upper` | `√((4n/m)(2 ln(s+1) + 5 ln log₂ n))` |
//! | `mds_sufficient` | `√(32 n ln ln ln n / (s m))` |

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid sparsity s = {s} for n = {n}")]
    InvalidSparsity { s: usize, n: usize },
    #[error("invalid dimension n = {0}")]
    InvalidDimension(usize),
    #[error("budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub s: usize,
    pub m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub name: String,
    pub inputs: BoundInputs,
    pub value: f64,
    /// The bracket under the square root was negative and was set to 0.
    pub clamped: bool,
    /// The parameters fall outside the validity region of the statement.
    pub validity_flag: bool,
}

impl BoundSpec {
    pub const CSV_HEADER: &'static str = "name,n,s,m,epsilon,value,clamped,validity_flag";

    pub fn csv_row(&self) -> String {
        let eps = self.inputs.epsilon.map(|e| format!("{e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.name,
            self.inputs.n,
            self.inputs.s,
            self.inputs.m,
            eps,
            self.value,
            self.clamped,
            self.validity_flag
        )
    }
}

impl std::str::FromStr for BoundSpec {
    type Err = String;

    /// Parses one row written by [`BoundSpec::csv_row`]. The `xi` input of
    /// the detection bound is restored as `|Ξ| = n`.
    fn from_str(row: &str) -> Result<Self, Self::Err> {
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != 8 {
            return Err(format!("expected 8 fields, got {}", f.len()));
        }
        let e = |x: &dyn std::fmt::Display| x.to_string();
        let n: usize = f[1].parse().map_err(|x| e(&x))?;
        let epsilon = match f[4] {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|x| e(&x))?),
        };
        Ok(BoundSpec {
            name: f[0].to_string(),
            inputs: BoundInputs {
                n,
                s: f[2].parse().map_err(|x| e(&x))?,
                m: f[3].parse().map_err(|x| e(&x))?,
                epsilon,
                xi: (f[0] == "detection_lower").then_some(n),
            },
            value: f[5].parse().map_err(|x| e(&x))?,
            clamped: f[6].parse().map_err(|x| e(&x))?,
            validity_flag: f[7].parse().map_err(|x| e(&x))?,
        })
    }
}

fn check_epsilon(eps: f64) -> Result<(), BoundError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(BoundError::InvalidEpsilon(eps))
    }
}

fn check_budget(m: f64) -> Result<(), BoundError> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(BoundError::InvalidBudget(m))
    }
}

fn clamped_sqrt(x: f64) -> (f64, bool) {
    if x < 0.0 {
        (0.0, true)
    } else {
        (x.sqrt(), false)
    }
}

/// Minimal amplitude for any adaptive test with `R ≤ ε` against a symmetric
/// class whose union has `xi_size` elements. Clamped for `ε ≥ 1/2`.
pub fn detection_lower_bound(xi_size: usize, s: usize, m: f64, epsilon: f64) -> Result<BoundSpec, BoundError> {
    check_epsilon(epsilon)?;
    check_budget(m)?;
    if s == 0 || s > xi_size {
        return Err(BoundError::InvalidSparsity { s, n: xi_size });
    }
    let log_term = (1.0 / (2.0 * epsilon)).ln();
    let (value, clamped) = clamped_sqrt(2.0 * xi_size as f64 / (s as f64 * m) * log_term);
    Ok(BoundSpec {
        name: "detection_lower".into(),
        inputs: BoundInputs {
            n: xi_size,
            s,
            m,
            epsilon: Some(epsilon),
            xi: Some(xi_size),
        },
        value,
        clamped: clamped || log_term <= 0.0,
        validity_flag: false,
    })
}

fn estimation_lower_named(name: &str, n: usize, s: usize, m: f64, epsilon: f64) -> Result<BoundSpec, BoundError> {
    check_epsilon(epsilon)?;
    check_budget(m)?;
    if s == 0 || s >= n {
        return Err(BoundError::InvalidSparsity { s, n });
    }
    let (nf, sf) = (n as f64, s as f64);
    let bracket = sf.ln() + ((nf - sf) / (nf + 1.0)).ln() + (1.0 / (2.0 * epsilon)).ln();
    let (value, clamped) = clamped_sqrt(2.0 * nf / m * bracket);
    Ok(BoundSpec {
        name: name.into(),
        inputs: BoundInputs {
            n,
            s,
            m,
            epsilon: Some(epsilon),
            xi: None,
        },
        value,
        clamped,
        validity_flag: false,
    })
}

/// Minimal amplitude for any adaptive estimator with `max_S E_S d(Ŝ,S) ≤ ε`.
pub fn estimation_lower_bound(n: usize, s: usize, m: f64, epsilon: f64) -> Result<BoundSpec, BoundError> {
    estimation_lower_named("estimation_lower", n, s, m, epsilon)
}

/// The same bound in the compressed-sensing model with `E‖A‖_F² ≤ m`.
pub fn cs_lower_bound(n: usize, s: usize, m: f64, epsilon: f64) -> Result<BoundSpec, BoundError> {
    estimation_lower_named("cs_lower", n, s, m, epsilon)
}

/// Amplitude sufficient for simple distilled sensing. The flag marks
/// sparsities violating `s + 1 ≤ n / ((log₂ n)² − 3)`.
pub fn estimation_upper_bound(n: usize, s: usize, m: f64) -> Result<BoundSpec, BoundError> {
    check_budget(m)?;
    if n < 5 {
        return Err(BoundError::InvalidDimension(n));
    }
    if s == 0 {
        return Err(BoundError::InvalidSparsity { s, n });
    }
    let nf = n as f64;
    let log2n = nf.log2();
    let bracket = 2.0 * ((s + 1) as f64).ln() + 5.0 * log2n.ln();
    let valid = (s + 1) as f64 <= nf / (log2n * log2n - 3.0);
    Ok(BoundSpec {
        name: "estimation_upper".into(),
        inputs: BoundInputs {
            n,
            s,
            m,
            epsilon: None,
            xi: None,
        },
        value: (4.0 * nf / m * bracket).sqrt(),
        clamped: false,
        validity_flag: !valid,
    })
}

/// Amplitude sufficient for subsampled distilled-sensing detection. The flag
/// marks `s ≤ ln ln ln n`.
pub fn mds_sufficient_magnitude(n: usize, s: usize, m: f64) -> Result<BoundSpec, BoundError> {
    check_budget(m)?;
    if n < 16 {
        return Err(BoundError::InvalidDimension(n));
    }
    if s == 0 || s > n {
        return Err(BoundError::InvalidSparsity { s, n });
    }
    let nf = n as f64;
    let lll = nf.ln().ln().ln();
    Ok(BoundSpec {
        name: "mds_sufficient".into(),
        inputs: BoundInputs {
            n,
            s,
            m,
            epsilon: None,
            xi: None,
        },
        value: (32.0 * nf * lll / (s as f64 * m)).sqrt(),
        clamped: false,
        validity_flag: s as f64 <= lll,
    })
}

/// Bound names accepted by [`evaluate`].
pub const BOUND_NAMES: [&str; 5] = [
    "detection_lower",
    "estimation_lower",
    "estimation_upper",
    "mds_sufficient",
    "cs_lower",
];

/// Evaluates a bound by name. `epsilon` is ignored by bounds without one;
/// the detection bound uses `|Ξ| = n`.
pub fn evaluate(name: &str, n: usize, s: usize, m: f64, epsilon: f64) -> Option<Result<BoundSpec, BoundError>> {
    Some(match name {
        "detection_lower" => detection_lower_bound(n, s, m, epsilon),
        "estimation_lower" => estimation_lower_bound(n, s, m, epsilon),
        "estimation_upper" => estimation_upper_bound(n, s, m),
        "mds_sufficient" => mds_sufficient_magnitude(n, s, m),
        "cs_lower" => cs_lower_bound(n, s, m, epsilon),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn detection_examples() {
        let e = 1.0 / (2.0 * std::f64::consts::E);
        let b = detection_lower_bound(100, 10, 100.0, e).unwrap();
        assert!(close(b.value, 0.2f64.sqrt(), 1e-12));
        let b = detection_lower_bound(100, 10, 100.0, 0.5).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.clamped);
        let b = detection_lower_bound(10_000, 100, 1e4, 0.05).unwrap();
        assert!(close(b.value, 0.214_596_602_628_934_7, 1e-12));
        assert!(matches!(
            detection_lower_bound(10, 2, 1.0, 1.0),
            Err(BoundError::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn estimation_lower_examples() {
        let b = estimation_lower_bound(3, 1, 1.0, 0.25).unwrap();
        assert!(b.value.abs() < 1e-7);
        let n = 1 << 14;
        let b = estimation_lower_bound(n, 16, n as f64, 0.05).unwrap();
        assert!(close(b.value, 3.185_635_177_572_070_8, 1e-12));
        let e = 1.0 / (2.0 * std::f64::consts::E);
        let n = 1 << 20;
        let b = estimation_lower_bound(n, 1, 4.0, e).unwrap();
        assert!(close(b.value, (2.0 * n as f64 / 4.0).sqrt(), 1e-5));
        assert!(matches!(
            estimation_lower_bound(5, 5, 1.0, 0.1),
            Err(BoundError::InvalidSparsity { .. })
        ));
    }

    #[test]
    fn estimation_upper_examples() {
        let n = 1 << 16;
        let b = estimation_upper_bound(n, 1, n as f64).unwrap();
        assert!(close(b.value, 7.810_054_538_175_465_7, 1e-12));
        assert!(!b.validity_flag);
        let bracket = 2.0 * 4f64.ln() + 5.0 * 10f64.ln();
        let b = estimation_upper_bound(1024, 3, 4.0 * 1024.0 * bracket).unwrap();
        assert!(close(b.value, 1.0, 1e-12));
        assert!(estimation_upper_bound(1024, 200, 1024.0).unwrap().validity_flag);
        assert!(matches!(
            estimation_upper_bound(4, 1, 1.0),
            Err(BoundError::InvalidDimension(4))
        ));
    }

    #[test]
    fn mds_examples() {
        let n = 1 << 16;
        let b = mds_sufficient_magnitude(n, 256, n as f64).unwrap();
        assert!(close(b.value, 0.331_284_832_568_076_8, 1e-12));
        let lll = (n as f64).ln().ln().ln();
        let b = mds_sufficient_magnitude(n, n, 32.0 * lll).unwrap();
        assert!(close(b.value, 1.0, 1e-12));
        let b = mds_sufficient_magnitude(16, 1, 16.0).unwrap();
        assert!(!b.validity_flag);
        assert!(matches!(
            mds_sufficient_magnitude(15, 1, 1.0),
            Err(BoundError::InvalidDimension(15))
        ));
    }

    #[test]
    fn csv_row_shape() {
        let b = estimation_upper_bound(64, 2, 64.0).unwrap();
        assert_eq!(b.csv_row().split(',').count(), BoundSpec::CSV_HEADER.split(',').count());
        for name in BOUND_NAMES {
            let b = evaluate(name, 100, 3, 7.5, 0.2).unwrap().unwrap();
            assert_eq!(b.csv_row().parse::<BoundSpec>().unwrap(), b);
        }
        let b = detection_lower_bound(64, 2, 64.0, 0.1).unwrap();
        let back: BoundSpec = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn estimation_beats_detection_on_a_grid() {
        let eps = 0.1;
        for n in [256usize, 1024, 4096] {
            for s in [2usize, 4, 16] {
                let m = n as f64;
                let est = estimation_lower_bound(n, s, m, eps).unwrap().value;
                let det = detection_lower_bound(n, s, m, eps).unwrap().value;
                assert!(est >= det, "n={n} s={s}");
            }
        }
    }

    proptest! {
        #[test]
        fn cs_equals_estimation(n in 2usize..100_000, s_frac in 0.0f64..1.0, m in 0.1f64..1e6, eps in 0.001f64..0.999) {
            let s = 1 + ((n - 2) as f64 * s_frac) as usize;
            let a = estimation_lower_bound(n, s, m, eps).unwrap();
            let b = cs_lower_bound(n, s, m, eps).unwrap();
            prop_assert_eq!(a.value, b.value);
            prop_assert_eq!(a.clamped, b.clamped);
        }

        #[test]
        fn monotone_in_budget_and_epsilon(n in 16usize..100_000, s in 1usize..15, m in 1.0f64..1e5, dm in 0.0f64..1e5,
                                         eps in 0.001f64..0.9, de in 0.0f64..0.09) {
            for name in BOUND_NAMES {
                let a = evaluate(name, n, s, m, eps).unwrap().unwrap().value;
                let b = evaluate(name, n, s, m + dm, eps).unwrap().unwrap().value;
                let c = evaluate(name, n, s, m, eps + de).unwrap().unwrap().value;
                prop_assert!(b <= a * (1.0 + 1e-12), "{name} budget");
                prop_assert!(c <= a * (1.0 + 1e-12), "{name} epsilon");
            }
        }

        #[test]
        fn non_decreasing_in_dimension(n in 16usize..100_000, dn in 0usize..100_000, s in 1usize..15,
                                       m in 1.0f64..1e5, eps in 0.001f64..0.9) {
            for name in BOUND_NAMES {
                let a = evaluate(name, n, s, m, eps).unwrap().unwrap().value;
                let b = evaluate(name, n + dn, s, m, eps).unwrap().unwrap().value;
                prop_assert!(b >= a * (1.0 - 1e-12), "{name}");
            }
        }
    }
}
