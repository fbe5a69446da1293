//! Tails of power-law sums by Euler–Maclaurin summation.
//!
//! `Σ_{j≥A} j^s` with `s < −1` is the integral plus the boundary correction
//! series; for completely monotone summands the remainder is bounded by the
//! first omitted term. Products `j^e (j+h)^e` are expanded binomially in
//! `h/j` once `j ≥ 2h`, reducing them to pure powers.

const BERNOULLI: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// Value and error bound of a tail sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TailSum {
    pub value: f64,
    pub error: f64,
}

/// `Σ_{j≥start} j^s` for `s < −1`, `start ≥ 1`.
pub(crate) fn zeta_tail(s: f64, start: u64) -> TailSum {
    debug_assert!(s < -1.0 && start >= 1);
    let anchor = start.max(32).max((2.0 * s.abs()).ceil() as u64);
    let direct: f64 = (start..anchor).map(|j| (j as f64).powf(s)).sum();
    let a = anchor as f64;
    let mut value = a.powf(s + 1.0) / (-s - 1.0) + 0.5 * a.powf(s);
    // f^{(m)}(a) = s(s−1)…(s−m+1) a^{s−m}; corrections use odd m = 2k−1.
    let mut falling = s; // s(s−1)…(s−m+1) for m = 1
    let mut factorial = 2.0; // (2k)!
    let mut m = 1;
    let mut last = 0.0;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let term = b / factorial * falling * a.powf(s - m as f64);
        if k == BERNOULLI.len() - 1 {
            last = term.abs();
            break;
        }
        value -= term;
        falling *= (s - m as f64) * (s - m as f64 - 1.0);
        m += 2;
        factorial *= ((2 * k + 3) * (2 * k + 4)) as f64;
    }
    TailSum {
        value: direct + value,
        error: last + f64::EPSILON * (direct.abs() + value.abs()),
    }
}

/// `Σ_{j≥start} j^e (j+h)^e` for `−1 < e < −1/2`, `start ≥ 1`, `h ≥ 0`.
pub(crate) fn power_tail(e: f64, start: u64, h: f64) -> TailSum {
    product_tail(e, e, start, h)
}

/// `Σ_{j≥start} j^e (j+h)^f` for `e + f < −1`, `start ≥ 1`, `h ≥ 0`.
pub(crate) fn product_tail(e: f64, f: f64, start: u64, h: f64) -> TailSum {
    debug_assert!(e + f < -1.0);
    let anchor = start.max((2.0 * h).ceil() as u64).max(32);
    let direct: f64 = (start..anchor)
        .map(|j| {
            let x = j as f64;
            x.powf(e) * (x + h).powf(f)
        })
        .sum();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut binom = 1.0;
    let mut hn = 1.0;
    for n in 0..400 {
        let t = zeta_tail(e + f - n as f64, anchor);
        let term = binom * hn * t.value;
        value += term;
        error += (binom * hn).abs() * t.error;
        if h == 0.0 {
            break;
        }
        if n > 0 && term.abs() <= 1e-18 * value.abs() {
            // geometric remainder with ratio ≤ h/anchor ≤ 1/2
            error += term.abs();
            break;
        }
        binom *= (f - n as f64) / (n as f64 + 1.0);
        hn *= h;
    }
    TailSum {
        value: direct + value,
        error: error + f64::EPSILON * direct.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_tail_matches_known_values() {
        // ζ(2) = π²/6
        let t = zeta_tail(-2.0, 1);
        assert!((t.value - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
        assert!(t.error < 1e-14);
        // ζ(1.4) = 3.1055472779775803997829272157 (mpmath)
        let t = zeta_tail(-1.4, 1);
        assert!((t.value - 3.105_547_277_977_580_4).abs() < 1e-13, "{}", t.value);
    }

    /// Brute force to 2·10^6, then `∫_x^∞ y^e (y+h)^f dy` at the midpoint
    /// `x`, expanded binomially in `h/y`.
    fn brute(e: f64, f: f64, start: u64, h: f64) -> f64 {
        let cut = 2_000_000u64;
        let head: f64 = (start..cut)
            .map(|j| (j as f64).powf(e) * (j as f64 + h).powf(f))
            .sum();
        let x = cut as f64 - 0.5;
        let mut tail = 0.0;
        let mut binom = 1.0;
        for n in 0..30 {
            let p = e + f - n as f64 + 1.0;
            tail += binom * h.powi(n) * x.powf(p) / -p;
            binom *= (f - n as f64) / (n as f64 + 1.0);
        }
        head + tail
    }

    #[test]
    fn power_tail_matches_brute_force() {
        let e = 0.3 - 1.0;
        for &(start, h) in &[(1u64, 0.0), (1, 3.0), (50, 7.0), (1000, 900.0)] {
            let t = power_tail(e, start, h);
            let b = brute(e, e, start, h);
            assert!((b - t.value).abs() < 1e-9, "{start} {h}: {b} vs {}", t.value);
        }
    }

    #[test]
    fn mixed_exponents_match_brute_force() {
        for &(e, f, start, h) in &[(-0.8, -0.9, 1u64, 0.0), (-0.6, -0.9, 10, 5.0), (-0.9, -0.6, 64, 40.0)] {
            let t = product_tail(e, f, start, h);
            let b = brute(e, f, start, h);
            assert!((b - t.value).abs() < 1e-9, "{e} {f}: {b} vs {}", t.value);
        }
    }

    #[test]
    fn gamma3_golden() {
        // Σ_{j≥1} j^{-0.7}(j+3)^{-0.7} + 3^{-0.7} = 2.50038379500243963 (mpmath:
        // direct sum below 2·10^4 plus an Euler–Maclaurin tail)
        let v = power_tail(-0.7, 1, 3.0).value + 3f64.powf(-0.7);
        assert!((v - 2.500_383_795_002_439_6).abs() < 1e-13, "{v}");
    }
}
