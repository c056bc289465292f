//! One-dimensional maximization.

/// Location and value of a maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on [lo, hi].
///
/// Stops when the bracket is narrower than `x_tol * (1 + |x|)`. The returned
/// value is the best of all evaluated points, endpoints included.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> Maximum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa = f(a);
    let fb = f(b);
    let mut best = if fa >= fb {
        Maximum { x: a, value: fa }
    } else {
        Maximum { x: b, value: fb }
    };

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= x_tol * (1.0 + 0.5 * (a + b).abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.value {
            best = Maximum { x, value: v };
        }
    }
    best
}

/// Maximum of `f` over the sorted grid `xs` refined by golden-section search
/// in the bracket around the best grid point.
///
/// Returns the maximum and the index of the best grid point, so callers can
/// detect a maximum sitting on the upper edge of the scanned range.
pub fn scan_then_refine<F: FnMut(f64) -> f64>(
    mut f: F,
    xs: &[f64],
    x_tol: f64,
) -> (Maximum, usize) {
    assert!(!xs.is_empty());
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = xs[best_i.saturating_sub(1)];
    let hi = xs[(best_i + 1).min(xs.len() - 1)];
    let refined = golden_section_max(&mut f, lo, hi, x_tol);
    let m = if refined.value >= best_v {
        refined
    } else {
        Maximum {
            x: xs[best_i],
            value: best_v,
        }
    };
    (m, best_i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola() {
        let m = golden_section_max(|x| -(x - 1.3).powi(2) + 2.0, -5.0, 5.0, 1e-10);
        assert!((m.x - 1.3).abs() < 1e-7, "{m:?}");
        assert!((m.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn maximum_at_endpoint() {
        let m = golden_section_max(|x| -x, 0.0, 3.0, 1e-10);
        assert_eq!(m.x, 0.0);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn scan_finds_global_of_bimodal() {
        // Two bumps; the taller one is at x = 4.
        let f = |x: f64| (-(x - 1.0).powi(2) * 4.0).exp() + 2.0 * (-(x - 4.0).powi(2) * 4.0).exp();
        let xs: Vec<f64> = (0..=60).map(|i| i as f64 * 0.1).collect();
        let (m, i) = scan_then_refine(f, &xs, 1e-12);
        assert!((m.x - 4.0).abs() < 1e-6, "{m:?}");
        assert_eq!(i, 40);
    }
}
