//! Partition comparison scores.

use std::collections::HashMap;

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information `2 I(a; b) / (H(a) + H(b))`. Two trivial
/// (single-cluster) labelings score 1.
pub fn nmi(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let mut ca: HashMap<usize, usize> = HashMap::new();
    let mut cb: HashMap<usize, usize> = HashMap::new();
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
        *joint.entry((x, y)).or_default() += 1;
    }
    let ha = entropy(ca.values().copied(), nf);
    let hb = entropy(cb.values().copied(), nf);
    if ha + hb == 0.0 {
        return 1.0;
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / nf;
            pxy * (pxy * nf * nf / (ca[&x] as f64 * cb[&y] as f64)).ln()
        })
        .sum();
    (2.0 * mi / (ha + hb)).clamp(0.0, 1.0)
}

/// Fraction of items whose reference class is the majority class of their
/// predicted cluster.
pub fn purity(predicted: &[usize], reference: &[usize]) -> f64 {
    assert_eq!(predicted.len(), reference.len());
    if predicted.is_empty() {
        return 1.0;
    }
    let mut joint: HashMap<usize, HashMap<usize, usize>> = HashMap::new();
    for (&p, &r) in predicted.iter().zip(reference) {
        *joint.entry(p).or_default().entry(r).or_default() += 1;
    }
    let hits: usize = joint
        .values()
        .map(|m| m.values().copied().max().unwrap_or(0))
        .sum();
    hits as f64 / predicted.len() as f64
}
