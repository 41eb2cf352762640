/// Root of a non-decreasing function on `[lo, hi]` by Newton steps with a
/// bisection safeguard. `f` returns the value and derivative at a point.
/// Returns the violated end point when `f` does not change sign on the
/// interval.
pub(crate) fn solve_increasing(
    f: impl Fn(f64) -> (f64, f64),
    lo: f64,
    hi: f64,
    start: f64,
    tol: f64,
    max_steps: usize,
) -> f64 {
    let (f_lo, _) = f(lo);
    if f_lo >= 0.0 {
        return lo;
    }
    let (f_hi, _) = f(hi);
    if f_hi <= 0.0 {
        return hi;
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut x = start.clamp(lo, hi);
    for _ in 0..max_steps {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() < tol || hi - lo < tol {
            return next;
        }
        x = next;
    }
    x
}

/// Improved-iterative-scaling step: the `delta` in `[lo, hi]` solving
/// `sum_m a[m] e^(delta m) = target`, where `a[m]` is the model mass of a
/// feature over events with `m` active features. Solved in log space.
pub(crate) fn iis_delta(a: &[f64], target: f64, lo: f64, hi: f64) -> f64 {
    if target <= 0.0 {
        return lo;
    }
    let log_target = target.ln();
    let terms: Vec<(f64, f64)> = a
        .iter()
        .enumerate()
        .filter(|&(_, &x)| x > 0.0)
        .map(|(m, &x)| (m as f64, x.ln()))
        .collect();
    if terms.is_empty() {
        return hi;
    }
    let f = |d: f64| {
        let mx = terms.iter().map(|&(m, la)| la + d * m).fold(f64::NEG_INFINITY, f64::max);
        let (mut sum, mut wsum) = (0.0, 0.0);
        for &(m, la) in &terms {
            let e = (la + d * m - mx).exp();
            sum += e;
            wsum += m * e;
        }
        (mx + sum.ln() - log_target, wsum / sum)
    };
    solve_increasing(f, lo, hi, 0.0, 1e-12, 100)
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + e^-x)`.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_cubic() {
        let x = solve_increasing(|x| (x * x * x - 2.0, 3.0 * x * x), -5.0, 5.0, 0.0, 1e-12, 100);
        assert!((x - 2f64.cbrt()).abs() < 1e-10);
    }

    #[test]
    fn clamps_to_interval() {
        assert_eq!(solve_increasing(|x| (x - 10.0, 1.0), -1.0, 1.0, 0.0, 1e-9, 50), 1.0);
        assert_eq!(solve_increasing(|x| (x + 10.0, 1.0), -1.0, 1.0, 0.0, 1e-9, 50), -1.0);
    }

    #[test]
    fn iis_delta_single_count_is_log_ratio() {
        // all mass at m = 1: a e^d = t
        let d = iis_delta(&[0.0, 0.25], 0.75, -10.0, 10.0);
        assert!((d - 3f64.ln()).abs() < 1e-10);
        assert_eq!(iis_delta(&[0.0, 0.25], 0.0, -10.0, 10.0), -10.0);
        // mixed counts: 0.2 e^d + 0.1 e^{2d} = 0.6
        let d = iis_delta(&[0.0, 0.2, 0.1], 0.6, -10.0, 10.0);
        assert!((0.2 * d.exp() + 0.1 * (2.0 * d).exp() - 0.6).abs() < 1e-10);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
