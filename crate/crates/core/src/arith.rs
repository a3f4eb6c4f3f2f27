//! Elementary arithmetic over Z: sieves, factorization, squarefree parts and the
//! Kronecker symbol.

/// All primes ≤ n.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Smallest-prime-factor table for fast factorization of every m ≤ limit.
#[derive(Clone, Debug)]
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    pub fn new(limit: u64) -> Self {
        let n = limit.max(1) as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] != 0 {
                continue;
            }
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
        SpfSieve { spf }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Prime factorization (ascending) of 1 ≤ m ≤ limit.
    pub fn factor(&self, mut m: u64) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::new();
        while m > 1 {
            let p = u64::from(self.spf[m as usize]);
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
            m /= p;
        }
        out
    }
}

/// Prime factorization by trial division (ascending).
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_squarefree(n: u64) -> bool {
    n != 0 && factorize(n).iter().all(|&(_, e)| e == 1)
}

/// (s, k) with n = s·k², s squarefree carrying the sign of n.
pub fn squarefree_decomposition(n: i64) -> (i64, u64) {
    assert!(n != 0, "zero has no squarefree part");
    let mut s = 1i64;
    let mut k = 1u64;
    for (p, e) in factorize(n.unsigned_abs()) {
        if e % 2 == 1 {
            s *= p as i64;
        }
        k *= p.pow(e / 2);
    }
    (s * n.signum(), k)
}

/// Kronecker symbol (a | n).
pub fn kronecker(a: i64, n: i64) -> i8 {
    if n == 0 {
        return i8::from(a == 1 || a == -1);
    }
    let mut a = a as i128;
    let mut n = n as i128;
    let mut result = 1i8;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let v = n.trailing_zeros();
    if v > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if v % 2 == 1 && (a.rem_euclid(8) == 3 || a.rem_euclid(8) == 5) {
            result = -result;
        }
        n >>= v;
    }
    // n odd and positive: Jacobi symbol
    a = a.rem_euclid(n);
    while a != 0 {
        let t = a.trailing_zeros();
        a >>= t;
        if t % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Möbius function μ(1..=n).
pub fn mobius_up_to(n: usize) -> Vec<i8> {
    let mut mu = vec![1i8; n + 1];
    if n == 0 {
        return mu;
    }
    mu[0] = 0;
    let mut composite = vec![false; n + 1];
    for p in 2..=n {
        if composite[p] {
            continue;
        }
        let mut j = p;
        while j <= n {
            if j > p {
                composite[j] = true;
            }
            mu[j] = -mu[j];
            j += p;
        }
        let sq = p * p;
        let mut j = sq;
        while j <= n {
            mu[j] = 0;
            j += sq;
        }
    }
    mu
}

/// #{1 ≤ m ≤ x : m squarefree} = Σ_{d ≤ √x} μ(d)·⌊x/d²⌋.
pub fn count_squarefree(x: u64) -> u64 {
    let r = x.isqrt() as usize;
    let mu = mobius_up_to(r);
    let s: i64 = (1..=r).map(|d| i64::from(mu[d]) * (x / (d as u64 * d as u64)) as i64).sum();
    s as u64
}

/// Same count by a segmented sieve striking multiples of p² (independent check).
pub fn count_squarefree_segmented(x: u64, segment: usize) -> u64 {
    let primes = primes_up_to(x.isqrt());
    let mut count = 0u64;
    let mut lo = 1u64;
    let mut flags = vec![true; segment];
    while lo <= x {
        let hi = (lo + segment as u64 - 1).min(x);
        let len = (hi - lo + 1) as usize;
        flags[..len].iter_mut().for_each(|f| *f = true);
        for &p in &primes {
            let sq = p * p;
            if sq > hi {
                break;
            }
            let mut m = lo.div_ceil(sq) * sq;
            while m <= hi {
                flags[(m - lo) as usize] = false;
                m += sq;
            }
        }
        count += flags[..len].iter().filter(|&&f| f).count() as u64;
        lo = hi + 1;
    }
    count
}
