//! Small numeric helpers that work without `std`.

/// `x^t` by repeated squaring. `powi(0.0, 0) == 1.0`.
pub fn powi(mut x: f64, mut t: u64) -> f64 {
    let mut acc = 1.0;
    while t > 0 {
        if t & 1 == 1 {
            acc *= x;
        }
        x *= x;
        t >>= 1;
    }
    acc
}

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Binomial coefficient as an exact integer, `None` on overflow.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Binomial coefficient as a float (exact while it fits in 53 bits).
pub fn binomial(n: u64, k: u64) -> f64 {
    match binomial_u128(n, k) {
        Some(v) => v as f64,
        None => {
            let k = k.min(n - k);
            let mut acc = 1.0;
            for i in 0..k {
                acc *= (n - i) as f64 / (i + 1) as f64;
            }
            acc
        }
    }
}

/// `n!` when it fits in a `u128`.
pub fn factorial_u128(n: u64) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

/// Ordered set partitions of an `n`-set (Fubini numbers), `None` on overflow.
pub fn fubini_u128(n: usize) -> Option<u128> {
    // a(n) = sum_{k=1..n} C(n,k) a(n-k), a(0) = 1
    let mut a: alloc::vec::Vec<u128> = alloc::vec![1];
    for m in 1..=n {
        let mut total: u128 = 0;
        for k in 1..=m {
            let term = binomial_u128(m as u64, k as u64)?.checked_mul(a[m - k])?;
            total = total.checked_add(term)?;
        }
        a.push(total);
    }
    Some(a[n])
}
