//! Gauss-Legendre rules and the polar disk quadrature built on them.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [−1, 1],
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi's initial guess, then Newton on P_n
        let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Polar product rule on the disk of `radius` about `center`: Gauss-Legendre
/// in radius (with the r Jacobian) times a uniform azimuthal rule.
/// Returns `(point, area weight)`; the weights sum to πR².
pub fn disk_rule(center: [f64; 2], radius: f64, n_radial: usize, n_azimuthal: usize) -> Vec<([f64; 2], f64)> {
    let radial = gauss_legendre(n_radial);
    let dtheta = 2.0 * PI / n_azimuthal as f64;
    let mut out = Vec::with_capacity(n_radial * n_azimuthal);
    for &(x, w) in &radial {
        let r = 0.5 * radius * (1.0 + x);
        let wr = 0.5 * radius * w * r * dtheta;
        for l in 0..n_azimuthal {
            let theta = l as f64 * dtheta;
            out.push(([center[0] + r * theta.cos(), center[1] + r * theta.sin()], wr));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in 1..12 {
            let rule = gauss_legendre(n);
            for p in 0..2 * n {
                let q: f64 = rule.iter().map(|&(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n {n}, p {p}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_ascend_and_are_symmetric() {
        let rule = gauss_legendre(7);
        assert!(rule.windows(2).all(|w| w[0].0 < w[1].0));
        for i in 0..7 {
            assert!((rule[i].0 + rule[6 - i].0).abs() < 1e-15);
            assert!((rule[i].1 - rule[6 - i].1).abs() < 1e-14);
        }
    }

    #[test]
    fn disk_weights_sum_to_area() {
        for (nr, na) in [(1, 1), (6, 16), (12, 32), (24, 48)] {
            let rule = disk_rule([0.3, -0.1], 7.74e-3, nr, na);
            let area: f64 = rule.iter().map(|p| p.1).sum();
            let want = PI * 7.74e-3f64.powi(2);
            assert!((area - want).abs() <= 1e-12 * want, "{nr}x{na}");
        }
    }

    #[test]
    fn disk_second_moment() {
        let rule = disk_rule([0.0, 0.0], 2.0, 6, 16);
        let m: f64 = rule.iter().map(|(p, w)| w * (p[0] * p[0] + p[1] * p[1])).sum();
        assert!((m - PI * 16.0 / 2.0).abs() < 1e-12);
    }
}
