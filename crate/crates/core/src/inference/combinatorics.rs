use statrs::function::factorial::ln_factorial;

#[inline]
pub fn ln_fact(n: u64) -> f64 {
    ln_factorial(n)
}

/// ln C(n, k); `-inf` when `k > n`.
#[inline]
pub fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_fact(n) - ln_fact(k) - ln_fact(n - k)
}

/// ln of the multiset coefficient ((n, k)) = C(n + k − 1, k).
#[inline]
pub fn ln_multiset(n: u64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    ln_binom(n + k - 1, k)
}
