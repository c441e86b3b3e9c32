//! Revolving-door Gray code over k-subsets of {0, …, n−1}.
//!
//! Successive combinations differ by exactly one element exchange, so an
//! enumeration loop can maintain energies incrementally with `swap_delta`
//! (O(N) per configuration instead of O(N²)).
//!
//! The order is the classic recursive one: G(n,k) = G(n−1,k) followed by
//! G(n−1,k−1) reversed with n−1 appended. It starts at {0,…,k−1} and ends
//! at {0,…,k−2, n−1}.

/// Binomial coefficient with saturation at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        let num = (n - i) as u128;
        acc = match acc.checked_mul(num) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// One event of the revolving-door walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinationStep<'a> {
    /// The walk starts at this combination ({0,…,k−1}).
    Init(&'a [usize]),
    /// Move to the next combination by one exchange.
    Swap { removed: usize, added: usize },
}

/// Visits every k-subset of {0,…,n−1}: one `Init` event, then one `Swap`
/// event per remaining combination.
pub fn visit_combinations<F>(n: usize, k: usize, mut f: F)
where
    F: FnMut(CombinationStep),
{
    assert!(k <= n, "k = {k} > n = {n}");
    let first: Vec<usize> = (0..k).collect();
    f(CombinationStep::Init(&first));
    let mut step = |removed, added| f(CombinationStep::Swap { removed, added });
    forward(n, k, &mut step);
}

/// Walk G(n,k) from {0,…,k−1} to {0,…,k−2, n−1}.
fn forward<S: FnMut(usize, usize)>(n: usize, k: usize, step: &mut S) {
    if k == 0 || k == n {
        return;
    }
    forward(n - 1, k, step);
    // Junction: last of G(n−1,k) = {0..k−2, n−2} → {0..k−3, n−2, n−1}.
    let out = if k >= 2 { k - 2 } else { n - 2 };
    step(out, n - 1);
    backward(n - 1, k - 1, step);
}

/// Walk G(n,k) in reverse, from {0,…,k−2, n−1} back to {0,…,k−1}.
fn backward<S: FnMut(usize, usize)>(n: usize, k: usize, step: &mut S) {
    if k == 0 || k == n {
        return;
    }
    forward(n - 1, k - 1, step);
    let inn = if k >= 2 { k - 2 } else { n - 2 };
    step(n - 1, inn);
    backward(n - 1, k, step);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn collect_all(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut cur: Vec<bool> = vec![false; n];
        let mut out = Vec::new();
        visit_combinations(n, k, |step| match step {
            CombinationStep::Init(init) => {
                for &i in init {
                    cur[i] = true;
                }
                out.push(support(&cur));
            }
            CombinationStep::Swap { removed, added } => {
                assert!(cur[removed] && !cur[added], "invalid swap {removed}→{added}");
                cur[removed] = false;
                cur[added] = true;
                out.push(support(&cur));
            }
        });
        out
    }

    fn support(bits: &[bool]) -> Vec<usize> {
        bits.iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    #[test]
    fn visits_every_combination_exactly_once() {
        for n in 1..=9 {
            for k in 0..=n {
                let all = collect_all(n, k);
                assert_eq!(all.len() as u128, binomial(n, k), "count at ({n},{k})");
                let distinct: HashSet<_> = all.iter().cloned().collect();
                assert_eq!(distinct.len(), all.len(), "duplicates at ({n},{k})");
                for c in &all {
                    assert_eq!(c.len(), k);
                }
            }
        }
    }

    #[test]
    fn starts_and_ends_where_the_recursion_says() {
        let all = collect_all(7, 3);
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[all.len() - 1], vec![0, 1, 6]);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(5, 9), 0);
    }
}
