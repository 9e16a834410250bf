//! Moment machinery: Stirling conversions between factorial moments, raw
//! moments and cumulants, and the factorial-moment polynomials `h_m` of
//! `Y = C(X, 2)` for Poisson `X`.

use alloc::vec;
use alloc::vec::Vec;

/// Largest order accepted by [`h_m`] (its polynomial has degree `2m`).
pub const MAX_H_ORDER: usize = 10;

/// Stirling numbers of the second kind `S(n, k)` for `0 ≤ k ≤ n ≤ max`.
pub fn stirling2_table(max: usize) -> Vec<Vec<u128>> {
    let mut s = vec![vec![0u128; max + 1]; max + 1];
    s[0][0] = 1;
    for n in 1..=max {
        for k in 1..=n {
            s[n][k] = k as u128 * s[n - 1][k] + s[n - 1][k - 1];
        }
    }
    s
}

pub fn stirling2(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    stirling2_table(n)[n][k]
}

/// Signed Stirling numbers of the first kind `s(n, k)`.
fn stirling1_table(max: usize) -> Vec<Vec<i128>> {
    let mut s = vec![vec![0i128; max + 1]; max + 1];
    s[0][0] = 1;
    for n in 1..=max {
        for k in 1..=n {
            s[n][k] = s[n - 1][k - 1] - (n as i128 - 1) * s[n - 1][k];
        }
    }
    s
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    libm::round(acc)
}

/// `E(X)_k = λ^k` for `X ~ Po(λ)`.
pub fn poisson_factorial_moment(k: u32, lambda: f64) -> f64 {
    libm::pow(lambda, f64::from(k))
}

/// Raw moments `E X^1..E X^m` from factorial moments `E(X)_1..E(X)_m`,
/// using `E X^m = Σ_k S(m, k) E(X)_k`.
pub fn moments_from_factorial(factorial: &[f64]) -> Vec<f64> {
    let m = factorial.len();
    let s = stirling2_table(m);
    (1..=m)
        .map(|order| {
            (1..=order)
                .map(|k| s[order][k] as f64 * factorial[k - 1])
                .sum()
        })
        .collect()
}

/// Inverse of [`moments_from_factorial`].
pub fn factorial_from_moments(moments: &[f64]) -> Vec<f64> {
    let m = moments.len();
    let s = stirling1_table(m);
    (1..=m)
        .map(|order| {
            (1..=order)
                .map(|k| s[order][k] as f64 * moments[k - 1])
                .sum()
        })
        .collect()
}

/// Cumulants `κ_1..κ_m` from raw moments `μ_1..μ_m`.
pub fn cumulants_from_moments(moments: &[f64]) -> Vec<f64> {
    let m = moments.len();
    let mu = |i: usize| if i == 0 { 1.0 } else { moments[i - 1] };
    let mut kappa: Vec<f64> = Vec::with_capacity(m);
    for n in 1..=m {
        let mut acc = mu(n);
        for k in 1..n {
            acc -= binomial(n - 1, k - 1) * kappa[k - 1] * mu(n - k);
        }
        kappa.push(acc);
    }
    kappa
}

/// Raw moments `μ_1..μ_m` from cumulants `κ_1..κ_m`.
pub fn moments_from_cumulants(cumulants: &[f64]) -> Vec<f64> {
    let m = cumulants.len();
    let mut mu = vec![1.0f64; m + 1];
    for n in 1..=m {
        mu[n] = (1..=n)
            .map(|k| binomial(n - 1, k - 1) * cumulants[k - 1] * mu[n - k])
            .sum();
    }
    mu.split_off(1)
}

/// `(C(j, 2))_m` as an exact integer.
fn pair_falling(j: u64, m: usize) -> i128 {
    let y = (j * j.saturating_sub(1) / 2) as i128;
    (0..m as i128).map(|r| y - r).product()
}

/// Coefficients `c_0..c_{2m}` of `h_m(λ) = Σ_k c_k λ^k`.
///
/// Expanding `(C(X, 2))_m` in falling factorials of `X` and using
/// `E(X)_k = λ^k` gives `c_k = Δ^k f(0) / k!` with `f(j) = (C(j, 2))_m`.
/// The coefficients are nonnegative, so the polynomial evaluates without
/// cancellation.
pub fn h_coefficients(m: usize) -> Vec<f64> {
    assert!(
        (1..=MAX_H_ORDER).contains(&m),
        "h_m order must lie in 1..={MAX_H_ORDER}"
    );
    let degree = 2 * m;
    let f: Vec<i128> = (0..=degree as u64).map(|j| pair_falling(j, m)).collect();
    let mut coeffs = Vec::with_capacity(degree + 1);
    let mut factorial = 1.0f64;
    for k in 0..=degree {
        if k > 0 {
            factorial *= k as f64;
        }
        let mut diff: i128 = 0;
        let mut c: i128 = 1;
        for i in 0..=k {
            // c = C(k, i)
            let term = c * f[i];
            if (k - i) % 2 == 0 {
                diff += term;
            } else {
                diff -= term;
            }
            c = c * (k - i) as i128 / (i + 1) as i128;
        }
        coeffs.push(diff as f64 / factorial);
    }
    coeffs
}

/// `h_m(λ) = E(Y)_m` for `Y = C(X, 2)`, `X ~ Po(λ)`, evaluated from its
/// polynomial form.
pub fn h_m(m: usize, lambda: f64) -> f64 {
    let coeffs = h_coefficients(m);
    eval_poly(&coeffs, lambda)
}

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `h_m(λ)` by direct summation of `Σ_j (C(j,2))_m λ^j e^{-λ} / j!`,
/// truncated once terms drop below `1e-17` of the partial sum past the mode.
pub fn h_m_series(m: usize, lambda: f64) -> f64 {
    assert!(m >= 1, "order must be positive");
    assert!(
        (0.0..=500.0).contains(&lambda),
        "series evaluation needs 0 <= lambda <= 500"
    );
    if lambda == 0.0 {
        return 0.0;
    }
    let mut p = libm::exp(-lambda);
    let mut sum = 0.0;
    let min_j = (2.0 * lambda) as u64 + 2 * m as u64 + 4;
    let mut j = 0u64;
    loop {
        if j >= 2 {
            let term = pair_falling(j, m) as f64 * p;
            sum += term;
            if j > min_j && term <= 1e-17 * sum {
                break;
            }
        }
        j += 1;
        p *= lambda / j as f64;
        if j > 100_000 {
            break;
        }
    }
    sum
}

/// Raw moments `E Y^1..E Y^order` of `Y = C(X, 2)`, `X ~ Po(λ)`.
pub fn pair_collision_moments(lambda: f64, order: usize) -> Vec<f64> {
    let factorial: Vec<f64> = (1..=order).map(|m| h_m(m, lambda)).collect();
    moments_from_factorial(&factorial)
}

/// `λ - log(1 + λ)`, accurate for small `λ`.
pub fn excess_log1p(lambda: f64) -> f64 {
    if lambda < 1e-4 {
        // λ²/2 - λ³/3 + λ⁴/4 - λ⁵/5
        let l2 = lambda * lambda;
        l2 * (0.5 - lambda * (1.0 / 3.0 - lambda * (0.25 - lambda * 0.2)))
    } else {
        lambda - libm::log1p(lambda)
    }
}

/// `P(X ≥ 2)` for `X ~ Po(λ)`.
pub fn poisson_tail_two(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda < 1.0 {
        let mut term = lambda * lambda / 2.0;
        let mut sum = 0.0;
        let mut k = 2.0;
        while term > 1e-18 * sum || sum == 0.0 {
            sum += term;
            k += 1.0;
            term *= lambda / k;
        }
        sum * libm::exp(-lambda)
    } else {
        1.0 - libm::exp(-lambda) * (1.0 + lambda)
    }
}
