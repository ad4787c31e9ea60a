use crate::sensing::combinations;

/// Miss probability of the symmetrized procedure at any `i ∈ S` with
/// `|S| = s`: the average of `miss(S', j) = P_{S'}(Ŝ_j ≠ 1)` over all
/// `s`-subsets `S'` and all `j ∈ S'`.
pub fn symmetrized_miss<F>(n: usize, s: usize, miss: F) -> f64
where
    F: Fn(&[usize], usize) -> f64,
{
    let supports = combinations(n, s);
    let total: f64 = supports
        .iter()
        .map(|sp| sp.iter().map(|&j| miss(sp, j)).sum::<f64>())
        .sum();
    total / (s as f64 * supports.len() as f64)
}

/// False-alarm probability of the symmetrized procedure at any `i ∉ S`: the
/// average of `alarm(S', j) = P_{S'}(Ŝ_j ≠ 0)` over all `s`-subsets `S'` and
/// all `j ∉ S'`.
pub fn symmetrized_false_alarm<F>(n: usize, s: usize, alarm: F) -> f64
where
    F: Fn(&[usize], usize) -> f64,
{
    let supports = combinations(n, s);
    let total: f64 = supports
        .iter()
        .map(|sp| (0..n).filter(|j| !sp.contains(j)).map(|j| alarm(sp, j)).sum::<f64>())
        .sum();
    total / ((n - s) as f64 * supports.len() as f64)
}
