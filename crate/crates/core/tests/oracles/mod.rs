//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Nothing here calls into the library.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Exact value of sum_{k=1}^{n} (1/k^2 - 1/(k+1)^2) 2^{k^2}.
pub fn step_moment_exact(n: u32) -> BigRational {
    let mut total = BigRational::zero();
    for k in 1..=n {
        let k = BigInt::from(k);
        let k1 = &k + 1;
        let mass =
            BigRational::new(BigInt::one(), &k * &k) - BigRational::new(BigInt::one(), &k1 * &k1);
        let loc = BigInt::one() << (k.to_u64().unwrap() * k.to_u64().unwrap());
        total += mass * BigRational::from_integer(loc);
    }
    total
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// P(max_{k <= n} |S_k - k p| >= t) for S_k a Binomial(k, p) walk, by
/// dynamic programming over the walk's position among paths that have not
/// yet deviated.
pub fn bernoulli_max_deviation_dp(n: usize, p: f64, t: f64) -> f64 {
    let mut alive = vec![0.0; n + 1];
    alive[0] = 1.0;
    let mut hit = 0.0;
    for k in 1..=n {
        let mut next = vec![0.0; n + 1];
        for s in 0..k {
            let w = alive[s];
            if w == 0.0 {
                continue;
            }
            next[s] += w * (1.0 - p);
            next[s + 1] += w * p;
        }
        for (s, w) in next.iter_mut().enumerate() {
            if (s as f64 - k as f64 * p).abs() >= t {
                hit += *w;
                *w = 0.0;
            }
        }
        alive = next;
    }
    hit
}

/// The same probability by enumerating all 2^n paths (small n only).
pub fn bernoulli_max_deviation_enum(n: usize, p: f64, t: f64) -> f64 {
    assert!(n <= 20);
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let mut s = 0.0;
        let mut deviated = false;
        for k in 0..n {
            if mask >> k & 1 == 1 {
                s += 1.0;
            }
            if (s - (k + 1) as f64 * p).abs() >= t {
                deviated = true;
            }
        }
        if deviated {
            let ones = mask.count_ones() as i32;
            total += p.powi(ones) * (1.0 - p).powi(n as i32 - ones);
        }
    }
    total
}

/// Exact sum of finite doubles, as a rational.
pub fn exact_sum(values: &[f64]) -> BigRational {
    // every finite double is an integer multiple of 2^-1074
    let mut acc = BigInt::zero();
    for &x in values {
        assert!(x.is_finite());
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1 << 52) - 1);
        let (mant, shift) = if exp == 0 {
            (frac, 0)
        } else {
            (frac | 1 << 52, exp - 1)
        };
        let mut v = BigInt::from(mant) << shift as usize;
        if x.is_sign_negative() {
            v = -v;
        }
        acc += v;
    }
    BigRational::new(acc, BigInt::one() << 1074usize)
}

/// Correctly rounded sum of finite doubles.
pub fn exact_sum_f64(values: &[f64]) -> f64 {
    to_f64(&exact_sum(values))
}

/// Reference trimmed sum: sort everything, drop the `b` largest and add the
/// rest in ascending order.
pub fn sorted_trimmed_sum(prefix: &[f64], b: usize) -> f64 {
    let mut v = prefix.to_vec();
    v.sort_by(f64::total_cmp);
    v.truncate(prefix.len() - b);
    exact_sum_f64(&v)
}

/// Kolmogorov distance between the empirical law of `sample` and the law
/// with distribution function `cdf` and left limits `cdf_left`.
pub fn ks_distance<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
    sample: &[f64],
    cdf: F,
    cdf_left: G,
) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        d = d
            .max((cdf_left(v[i]) - i as f64 / m).abs())
            .max(((j + 1) as f64 / m - cdf(v[i])).abs());
        i = j + 1;
    }
    d
}

/// Dvoretzky-Kiefer-Wolfowitz radius at confidence 1 - alpha.
pub fn dkw_radius(m: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * m as f64)).sqrt()
}
