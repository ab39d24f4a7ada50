//! Oracles that share no code with `gos-core`. They are slow and simple on
//! purpose: exact integer arithmetic, brute-force enumeration.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// `C(n, k)` by the multiplicative formula, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

/// Natural log of a positive big integer, accurate to f64 rounding.
pub fn ln_big(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Description length of a bipartite graph under a labeled partition,
/// counted straight from the definition.
///
/// `labels[v]` covers opinions `0..n_opinions` then respondents. Each term
/// is formed as one exact integer before taking the log:
///
/// * likelihood: the number of graphs with the same block edge counts,
///   `Π_{r<s} C(n_r n_s, e_rs) · Π_r C(n_r(n_r−1)/2, e_rr/2)`
/// * edge counts: multisets of size `E` over `B(B+1)/2` block pairs
/// * partition: `N!/Π n_r! · C(N−1, B−1) · N`
pub fn description_length_oracle(
    n_opinions: usize,
    n_respondents: usize,
    edges: &[(usize, usize)],
    labels: &[usize],
) -> f64 {
    let n = n_opinions + n_respondents;
    assert_eq!(labels.len(), n);
    if n == 0 {
        return 0.0;
    }
    let mut groups: Vec<usize> = labels.to_vec();
    groups.sort_unstable();
    groups.dedup();
    let b = groups.len();
    let slot = |label: usize| groups.binary_search(&label).unwrap();

    let mut sizes = vec![0u64; b];
    for &l in labels {
        sizes[slot(l)] += 1;
    }
    let mut e = vec![vec![0u64; b]; b];
    for &(o, r) in edges {
        let (x, y) = (slot(labels[o]), slot(labels[n_opinions + r]));
        e[x][y] += 1;
        e[y][x] += 1;
    }

    let mut likelihood = BigUint::one();
    for r in 0..b {
        // e[r][r] counts each internal edge twice
        likelihood *= binomial(sizes[r] * sizes[r].saturating_sub(1) / 2, e[r][r] / 2);
        for s in r + 1..b {
            likelihood *= binomial(sizes[r] * sizes[s], e[r][s]);
        }
    }

    let pairs = (b * (b + 1) / 2) as u64;
    let m = edges.len() as u64;
    let edge_counts = binomial(pairs + m - 1, m);

    let mut partition = factorial(n as u64) * binomial(n as u64 - 1, b as u64 - 1) * n as u64;
    let denominator = sizes.iter().fold(BigUint::one(), |acc, &s| acc * factorial(s));
    assert!((&partition % &denominator).is_zero());
    partition /= denominator;

    ln_big(&likelihood) + ln_big(&edge_counts) + ln_big(&partition)
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for g in 0..=max {
            prefix.push(g);
            rec(prefix, max.max(g + 1), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), 0, n, &mut out);
    out
}

/// Every type-pure labeling of `n_opinions + n_respondents` vertices with
/// labels in `0..label_space`: no label holds both an opinion and a
/// respondent.
pub fn type_pure_labelings(
    n_opinions: usize,
    n_respondents: usize,
    label_space: usize,
) -> Vec<Vec<usize>> {
    let n = n_opinions + n_respondents;
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    loop {
        let pure = (0..n_opinions)
            .all(|o| !labels[n_opinions..].contains(&labels[o]));
        if pure {
            out.push(labels.clone());
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            labels[i] += 1;
            if labels[i] < label_space {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// Relabels groups by first appearance.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Smallest `Σ_j ‖v_{π(j)} − v_{π(j+1)}‖₁` over all orderings, by trying
/// every permutation (Heap's algorithm).
pub fn exhaustive_min_path(vectors: &[Vec<f64>]) -> f64 {
    let n = vectors.len();
    let cost = |p: &[usize]| -> f64 {
        p.windows(2)
            .map(|w| {
                vectors[w[0]]
                    .iter()
                    .zip(&vectors[w[1]])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .sum()
    };
    let mut p: Vec<usize> = (0..n).collect();
    let mut best = cost(&p);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            best = best.min(cost(&p));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Mean and standard error of the mean of `series` using `batches`
/// contiguous batches.
pub fn batch_means(series: &[f64], batches: usize) -> (f64, f64) {
    let len = series.len() / batches;
    assert!(len > 0, "series shorter than the batch count");
    let means: Vec<f64> = series
        .chunks_exact(len)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}
