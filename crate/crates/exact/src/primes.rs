//! Prime generation for the modular reconstruction pipeline.

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin below 2^64: the witness set
/// {2,3,5,7,11,13,17,19,23,29,31,37} has no strong pseudoprime in range.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Stream of distinct primes p with p >= 2^gamma and p > lower_bound.
pub struct PrimeStream {
    next: u64,
}

impl Iterator for PrimeStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            let c = self.next;
            self.next = self.next.checked_add(1)?;
            if is_prime_u64(c) {
                return Some(c);
            }
        }
    }
}

/// Primes suitable for the modular pipeline: at least `2^gamma`, strictly
/// above `lower_bound` (the degree bound d, so that p > d), pairwise distinct
/// by construction.
pub fn prime_stream(gamma: u32, lower_bound: u64) -> PrimeStream {
    assert!((2..=62).contains(&gamma), "gamma must be in 2..=62");
    let start = (1u64 << gamma).max(lower_bound.saturating_add(1));
    PrimeStream { next: start }
}
