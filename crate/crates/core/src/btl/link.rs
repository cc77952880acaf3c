//! The logistic link `phi(t) = log(1 + e^t)` and its derivatives, all
//! evaluated without overflow for any finite `t`.

/// `log(1 + e^t)`.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `e^t / (1 + e^t)`.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `phi''(t) = sigma(t) (1 - sigma(t))`.
pub fn phi2(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `phi'''(t) = phi''(t) (1 - 2 sigma(t))`.
pub fn phi3(t: f64) -> f64 {
    -phi2(t) * (0.5 * t).tanh()
}

/// Location `log(2 + sqrt 3)` of the maximum of `|phi'''|` on `t >= 0`.
pub fn phi3_peak_location() -> f64 {
    (2.0 + 3f64.sqrt()).ln()
}

/// `max_t |phi'''(t)|`, equal to `sqrt(3) / 18`.
pub fn phi3_peak() -> f64 {
    phi3(phi3_peak_location()).abs()
}

/// `sup |phi'''|` over `[lo, hi]`; `|phi'''|` is even and unimodal on `t >= 0`.
pub fn sup_abs_phi3(lo: f64, hi: f64) -> f64 {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let near = if lo <= 0.0 && hi >= 0.0 {
        0.0
    } else {
        lo.abs().min(hi.abs())
    };
    let far = lo.abs().max(hi.abs());
    let peak = phi3_peak_location();
    if near <= peak && peak <= far {
        phi3_peak()
    } else {
        phi3(near).abs().max(phi3(far).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(phi2(0.0), 0.25);
        assert_eq!(phi3(0.0), 0.0);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn extreme_arguments_stay_finite() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(phi2(800.0), 0.0);
        assert!(phi3(-800.0).is_finite());
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-5;
        for &t in &[-7.0, -1.3, -0.2, 0.0, 0.4, 2.5, 9.0] {
            assert!(((softplus(t + h) - softplus(t - h)) / (2.0 * h) - sigmoid(t)).abs() < 1e-9);
            assert!(((sigmoid(t + h) - sigmoid(t - h)) / (2.0 * h) - phi2(t)).abs() < 1e-9);
            assert!(((phi2(t + h) - phi2(t - h)) / (2.0 * h) - phi3(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn peak_value_and_interval_sup() {
        assert!((phi3_peak() - 3f64.sqrt() / 18.0).abs() < 1e-15);
        assert!((phi3_peak_location() - 1.3169578969248166).abs() < 1e-14);
        assert_eq!(sup_abs_phi3(-0.1, 0.1), phi3(0.1).abs());
        assert_eq!(sup_abs_phi3(-5.0, 0.5), phi3_peak());
        assert_eq!(sup_abs_phi3(3.0, 4.0), phi3(3.0).abs());
        let mut grid = 0.0f64;
        for k in 0..=20000 {
            grid = grid.max(phi3(-0.7 + 2.5 * k as f64 / 20000.0).abs());
        }
        assert!(sup_abs_phi3(-0.7, 1.8) >= grid);
        assert!(sup_abs_phi3(-0.7, 1.8) - grid < 1e-8);
    }
}
