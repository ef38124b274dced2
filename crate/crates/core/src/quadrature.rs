//! Quadrature rules: periodic trapezoid in the phase, composite
//! Gauss-Legendre panels for radial integrals.

use std::f64::consts::PI;

/// Uniform grid of `k` phases on `[-pi, pi)`.
pub fn phase_grid(k: usize) -> Vec<f64> {
    (0..k).map(|j| -PI + 2.0 * PI * j as f64 / k as f64).collect()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on `[a, b]` with panels no wider than `h`.
pub fn composite_gl(a: f64, b: f64, h: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let panels = (((b - a) / h).ceil() as usize).max(1);
    let width = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + 0.5 * width * (x + 1.0));
            ws.push(0.5 * width * w);
        }
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 8, 16] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_gaussian() {
        let (x, w) = composite_gl(-10.0, 10.0, 1.0, 8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x / 2.0).exp()).sum();
        assert!((s - (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn phase_grid_four() {
        let g = phase_grid(4);
        assert_eq!(g, vec![-PI, -PI / 2.0, 0.0, PI / 2.0]);
    }
}
