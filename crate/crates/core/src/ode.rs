//! Fixed-step Runge–Kutta stepping for small real state vectors.

/// One classical fourth-order Runge–Kutta step of `y' = f(s, y)`.
#[inline]
pub fn rk4_step<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    s: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = f(s, y);
    let k2 = f(s + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(s + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(s + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_convergence_on_exponential() {
        let solve = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = [1.0];
            for i in 0..n {
                y = rk4_step(|_, y| [y[0]], i as f64 * h, &y, h);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let e1 = solve(10);
        let e2 = solve(20);
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn time_dependent_rhs_is_integrated_exactly_for_cubics() {
        // y' = 4 s^3 has y(1) = 1; Simpson-type weights are exact for cubics.
        let mut y = [0.0];
        let h = 0.25;
        for i in 0..4 {
            y = rk4_step(|s, _| [4.0 * s * s * s], i as f64 * h, &y, h);
        }
        assert!((y[0] - 1.0).abs() < 1e-14);
    }
}
