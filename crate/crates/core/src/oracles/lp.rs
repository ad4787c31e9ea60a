use serde::{Deserialize, Serialize};

use crate::error::SensingError;
use crate::sensing::SupportClass;

pub const MAX_ORACLE_CLASS: usize = 10_000;
pub const MAX_ORACLE_DIMENSION: usize = 16;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetAllocation {
    pub b: Vec<f64>,
    pub total: f64,
}

fn explicit_members(class: &SupportClass) -> Result<&[Vec<usize>], SensingError> {
    let members = class
        .members()
        .ok_or_else(|| SensingError::InvalidClass("the oracle needs an explicit class".into()))?;
    if members.len() > MAX_ORACLE_CLASS || class.n() > MAX_ORACLE_DIMENSION {
        return Err(SensingError::ClassTooLarge(format!(
            "|C| = {}, n = {} (limits {MAX_ORACLE_CLASS}, {MAX_ORACLE_DIMENSION})",
            members.len(),
            class.n()
        )));
    }
    Ok(members)
}

/// `min_{S ∈ C} ∑_{i ∈ S} b_i`.
pub fn allocation_min_value(class: &SupportClass, b: &[f64]) -> Result<f64, SensingError> {
    let members = explicit_members(class)?;
    Ok(members
        .iter()
        .map(|s| s.iter().map(|&i| b[i]).sum::<f64>())
        .fold(f64::INFINITY, f64::min))
}

/// Solves `max ∑_j y_j` subject to `A y ≤ 1, y ≥ 0` for a 0/1 matrix given
/// by its columns, and returns the optimum with the dual solution.
///
/// Dense tableau simplex started at the slack basis, with Bland's rule.
fn packing_lp(rows: usize, columns: &[Vec<usize>]) -> (f64, Vec<f64>) {
    let nc = columns.len();
    let width = nc + rows + 1;
    let rhs = width - 1;
    let mut t = vec![vec![0.0f64; width]; rows + 1];
    for (j, col) in columns.iter().enumerate() {
        for &i in col {
            t[i][j] = 1.0;
        }
        t[rows][j] = -1.0;
    }
    for i in 0..rows {
        t[i][nc + i] = 1.0;
        t[i][rhs] = 1.0;
    }
    let mut basis: Vec<usize> = (nc..nc + rows).collect();

    while let Some(enter) = (0..width - 1).find(|&j| t[rows][j] < -EPS) {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..rows {
            let a = t[i][enter];
            if a > EPS {
                let ratio = t[i][rhs] / a;
                let better = match leave {
                    None => true,
                    Some((l, r)) => ratio < r - EPS || (ratio <= r + EPS && basis[i] < basis[l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // the feasible region is bounded, so a leaving row always exists
        let (r, _) = leave.expect("bounded packing LP");
        let pivot = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r {
                let f = row[enter];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        basis[r] = enter;
    }
    let duals = (0..rows).map(|i| t[rows][nc + i].max(0.0)).collect();
    (t[rows][rhs], duals)
}

/// `max_{b ≥ 0, ∑ b ≤ m} min_{S ∈ C} ∑_{i ∈ S} b_i` with an optimal `b`.
///
/// By homogeneity the value is `m / v`, where `v` is the minimal total mass
/// covering every member at least once; `v` is found through the packing
/// dual and the covering solution is read off its final tableau.
pub fn maxmin_allocation_value(class: &SupportClass, m: f64) -> Result<(f64, BudgetAllocation), SensingError> {
    let members = explicit_members(class)?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(SensingError::InvalidParams(format!("budget must be positive, got {m}")));
    }
    let n = class.n();
    let (v, u) = packing_lp(n, members);
    let mass: f64 = u.iter().sum();
    let b: Vec<f64> = u.iter().map(|&x| m * x / mass).collect();
    let total = b.iter().sum();
    Ok((m / v, BudgetAllocation { b, total }))
}

/// `max_{b ≥ 0, ∑ b ≤ m} (1/|C|) ∑_{S ∈ C} ∑_{i ∈ S} b_i`, which is `m`
/// times the largest membership frequency.
pub fn average_allocation_value(class: &SupportClass, m: f64) -> Result<f64, SensingError> {
    let members = explicit_members(class)?;
    let mut counts = vec![0usize; class.n()];
    for s in members {
        for &i in s {
            counts[i] += 1;
        }
    }
    let max = counts.into_iter().max().unwrap_or(0);
    Ok(m * max as f64 / members.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_pairs_of_four() {
        let c = SupportClass::enumerate_all_subsets(4, 2).unwrap();
        let (v, alloc) = maxmin_allocation_value(&c, 4.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        assert!(alloc.total <= 4.0 + 1e-9);
        assert!((allocation_min_value(&c, &alloc.b).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(allocation_min_value(&c, &[1.0; 4]).unwrap(), 2.0);
        assert!((average_allocation_value(&c, 4.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singleton() {
        let c = SupportClass::explicit(1, vec![vec![0]]).unwrap();
        let (v, alloc) = maxmin_allocation_value(&c, 5.0).unwrap();
        assert!((v - 5.0).abs() < 1e-9);
        assert!((alloc.b[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_pair() {
        // entry 0 lies in both members, so all mass goes there
        let c = SupportClass::explicit(3, vec![vec![0, 1], vec![0, 2]]).unwrap();
        let (v, alloc) = maxmin_allocation_value(&c, 3.0).unwrap();
        assert!((v - 3.0).abs() < 1e-9);
        assert!((allocation_min_value(&c, &alloc.b).unwrap() - 3.0).abs() < 1e-9);
        assert!((average_allocation_value(&c, 3.0).unwrap() - 3.0).abs() < 1e-12);
        // the symmetric formula m s / |Ξ| gives 2, which is not the optimum
        assert!(!c.is_symmetric());
    }

    #[test]
    fn lp_optimum_dominates_random_allocations() {
        use rand::Rng;
        let c = SupportClass::explicit(6, vec![vec![0, 1, 2], vec![2, 3, 4], vec![3, 4, 5], vec![0, 1, 5]])
            .unwrap();
        let (v, _) = maxmin_allocation_value(&c, 1.0).unwrap();
        let mut rng = crate::rng::SimRng::from_seed(3);
        for _ in 0..2000 {
            let raw: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let tot: f64 = raw.iter().sum();
            let b: Vec<f64> = raw.iter().map(|x| x / tot).collect();
            assert!(allocation_min_value(&c, &b).unwrap() <= v + 1e-12);
        }
    }

    #[test]
    fn size_limits() {
        let c = SupportClass::all_subsets(10, 2).unwrap();
        assert!(matches!(maxmin_allocation_value(&c, 1.0), Err(SensingError::InvalidClass(_))));
        let c = SupportClass::explicit(17, vec![vec![0]]).unwrap();
        assert!(matches!(maxmin_allocation_value(&c, 1.0), Err(SensingError::ClassTooLarge(_))));
    }
}
