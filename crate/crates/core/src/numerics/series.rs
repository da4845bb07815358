//! Lattice sums over the free-string spectrum.
//!
//! Sums of the form `sum_n 1/(n^2 - a^2)` converge like `1/N`, far too slowly
//! for direct truncation at 1e-10 accuracy. They are split into an explicit
//! head and an Euler–Maclaurin tail evaluated from the large-`n` expansion
//! `1/(n^2 - a^2) = sum_k a^(2k) / n^(2k+2)`.

use std::f64::consts::PI;

/// `sum_{n >= start} n^(-p)` for `p > 1`, via Euler–Maclaurin from
/// `max(start, 64)`.
pub fn power_tail(p: f64, start: u64) -> f64 {
    let cut = start.max(64);
    let mut head = 0.0;
    for n in start..cut {
        head += (n as f64).powf(-p);
    }
    head + em_monomial_tail(p, cut as f64)
}

/// Euler–Maclaurin tail `sum_{n >= m} n^(-p)` for large `m`.
fn em_monomial_tail(p: f64, m: f64) -> f64 {
    // integral + f/2 - f'/12 + f'''/720 - f^(5)/30240
    let f = m.powf(-p);
    let integral = m.powf(1.0 - p) / (p - 1.0);
    let d1 = -p * f / m;
    let d3 = -p * (p + 1.0) * (p + 2.0) * f / m.powi(3);
    let d5 = -p * (p + 1.0) * (p + 2.0) * (p + 3.0) * (p + 4.0) * f / m.powi(5);
    integral + 0.5 * f - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0
}

/// Tail of `sum_k c_k a^(2k) n^-(2k+p)` summed over `n >= m`, with
/// `c_k = binom(k + r, r)` (r = 0 for `1/(n^2-a^2)`, r = 1 for its square).
fn expansion_tail(a2: f64, p: f64, r: u32, m: f64) -> f64 {
    let ratio = a2 / (m * m);
    let mut total = 0.0;
    let mut ak = 1.0;
    for k in 0..200u32 {
        let c = match r {
            0 => 1.0,
            1 => (k + 1) as f64,
            _ => ((k + 1) * (k + 2)) as f64 / 2.0,
        };
        let term = c * ak * em_monomial_tail(2.0 * k as f64 + p, m);
        total += term;
        if term.abs() <= 1e-18 * total.abs() {
            break;
        }
        ak *= a2;
        if ratio == 0.0 {
            break;
        }
    }
    total
}

fn head_cut(a2: f64, start: u64) -> u64 {
    let a = a2.abs().sqrt();
    start.max((20.0 * a).ceil() as u64 + 1).max(256)
}

/// `sum_{n >= start} 1/(n^2 - a2)`; `a2` must not be the square of an
/// integer `>= start`.
pub fn shifted_square_sum(a2: f64, start: u64) -> f64 {
    let cut = head_cut(a2, start);
    let mut head = 0.0;
    for n in start..cut {
        let nf = n as f64;
        head += 1.0 / (nf * nf - a2);
    }
    head + expansion_tail(a2, 2.0, 0, cut as f64)
}

/// `sum_{n >= start} 1/(n^2 - a2)^2`.
pub fn shifted_square_sum_sq(a2: f64, start: u64) -> f64 {
    let cut = head_cut(a2, start);
    let mut head = 0.0;
    for n in start..cut {
        let nf = n as f64;
        let d = nf * nf - a2;
        head += 1.0 / (d * d);
    }
    head + expansion_tail(a2, 4.0, 1, cut as f64)
}

/// Partial sum `sum_{n=1}^{terms} cos(n lambda) / (n^2 - a^2)`.
pub fn cosine_series_truncated(lambda: f64, a: f64, terms: usize) -> f64 {
    (1..=terms)
        .map(|n| {
            let nf = n as f64;
            (nf * lambda).cos() / (nf * nf - a * a)
        })
        .sum()
}

/// Closed form of `sum_{n>=1} cos(n lambda) / (n^2 - a^2)` for
/// `|lambda| <= 2 pi` and non-integer `a`.
pub fn cosine_series_closed(lambda: f64, a: f64) -> f64 {
    let l = lambda.abs();
    1.0 / (2.0 * a * a) - PI / (2.0 * a) * ((a * l).sin() + (a * lambda).cos() / (PI * a).tan())
}

/// `sum_{n>=1} (cos(n lambda) - 1) / (n^2 - a^2)` for `0 <= |lambda| <= 2 pi`.
///
/// Evaluated without the closed form above: the head `n < 20 a` is summed
/// term by term; in the tail the two leading orders of the `a^2/n^2`
/// expansion are closed by Bernoulli-polynomial series and the remainder is
/// summed directly.
pub fn cos_minus_one_series(lambda: f64, a: f64) -> f64 {
    let x = lambda.abs();
    let a2 = a * a;
    let cut = (20.0 * a).ceil().max(512.0) as u64;
    let mut head = 0.0;
    let (mut h2, mut h4) = (0.0, 0.0);
    for n in 1..cut {
        let nf = n as f64;
        let n2 = nf * nf;
        let c = (nf * x).cos();
        head += (c - 1.0) / (n2 - a2);
        h2 += c / n2;
        h4 += c / (n2 * n2);
    }
    // 1/(n^2-a^2) = 1/n^2 + a^2/n^4 + a^4/(n^4 (n^2-a^2))
    let t0 = (bernoulli_cos2(x) - h2) - power_tail(2.0, cut);
    let t1 = a2 * ((bernoulli_cos4(x) - h4) - power_tail(4.0, cut));
    let far = 8 * cut;
    let mut t2 = 0.0;
    for n in cut..far {
        let nf = n as f64;
        let n2 = nf * nf;
        t2 += ((nf * x).cos() - 1.0) / (n2 * n2 * (n2 - a2));
    }
    t2 -= expansion_tail(a2, 6.0, 0, far as f64);
    head + t0 + t1 + a2 * a2 * t2
}

fn bernoulli_cos2(x: f64) -> f64 {
    PI * PI / 6.0 - PI * x / 2.0 + x * x / 4.0
}

fn bernoulli_cos4(x: f64) -> f64 {
    PI.powi(4) / 90.0 - PI * PI * x * x / 12.0 + PI * x.powi(3) / 12.0 - x.powi(4) / 48.0
}
