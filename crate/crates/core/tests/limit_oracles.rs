use std::f64::consts::PI;

use crackle::limits::{mu_estimate, xi_estimate, MuSpec, XiSpec, DEFAULT_INNER_BUDGET};

/// Three points in the plane form a hollow triangle at scale `t` iff every
/// side is shorter than `t`, the triangle is acute and its circumradius is at
/// least `t/2`.
fn hollow_triangle(a: [f64; 2], b: [f64; 2], c: [f64; 2], t: f64) -> bool {
    let d2 = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    let mut s = [d2(a, b), d2(b, c), d2(a, c)];
    if s.iter().any(|&x| x >= t * t) {
        return false;
    }
    s.sort_by(f64::total_cmp);
    if s[2] >= s[0] + s[1] {
        return false;
    }
    let area2 = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    let circumradius = (s[0] * s[1] * s[2]).sqrt() / (2.0 * area2);
    circumradius >= t / 2.0
}

fn polar_grid(n: usize, t: f64) -> Vec<([f64; 2], f64)> {
    let (hr, hp) = (t / n as f64, 2.0 * PI / n as f64);
    let mut v = Vec::with_capacity(n * n);
    for a in 0..n {
        let r = (a as f64 + 0.5) * hr;
        for b in 0..n {
            let phi = (b as f64 + 0.5) * hp;
            v.push(([r * phi.cos(), r * phi.sin()], r * hr * hp));
        }
    }
    v
}

fn midpoints(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> {
    let h = (hi - lo) / n as f64;
    (0..n).map(move |a| (lo + (a as f64 + 0.5) * h, h))
}

/// `xi(3,1)(t; 0)` for d = 2, k = 1. The integrand is invariant under a
/// joint rotation of theta, y1 and y2, so y1 is pinned to the positive
/// x-axis (factor 2 pi r1), theta runs over a grid of angles, y2 over a polar
/// grid in B(0, t), and rho is integrated in closed form:
/// `int_{rho0}^inf e^{-3 rho} drho = e^{-3 rho0} / 3` with
/// `rho0 = max(0, -<theta,y1>/c, -<theta,y2>/c)`.
fn xi_grid(t: f64, c: f64, n_r1: usize, n_theta: usize, n2: usize) -> f64 {
    let g2 = polar_grid(n2, t);
    let mut total = 0.0;
    for (r1, h1) in midpoints(n_r1, 0.0, t) {
        let y1 = [r1, 0.0];
        let hits: Vec<([f64; 2], f64)> = g2
            .iter()
            .copied()
            .filter(|&(y2, _)| hollow_triangle([0.0, 0.0], y1, y2, t))
            .collect();
        for (phi, hp) in midpoints(n_theta, 0.0, 2.0 * PI) {
            let th = [phi.cos(), phi.sin()];
            let p1 = th[0] * y1[0] + th[1] * y1[1];
            let mut acc = 0.0;
            for &(y2, w2) in &hits {
                let p2 = th[0] * y2[0] + th[1] * y2[1];
                let rho0 = f64::max(0.0, f64::max(-p1 / c, -p2 / c));
                acc += w2 * (-(p1 + p2) / c).exp() * (-3.0 * rho0).exp() / 3.0;
            }
            total += 2.0 * PI * r1 * h1 * hp * acc;
        }
    }
    total
}

/// `int h_t(0, y) dy` over `(R^2)^2` with y1 pinned to the x-axis.
fn hollow_triangle_measure(t: f64, n_r1: usize, n2: usize) -> f64 {
    let g2 = polar_grid(n2, t);
    midpoints(n_r1, 0.0, t)
        .map(|(r1, h1)| {
            let inner: f64 = g2
                .iter()
                .filter(|&&(y2, _)| hollow_triangle([0.0, 0.0], [r1, 0.0], y2, t))
                .map(|&(_, w)| w)
                .sum();
            2.0 * PI * r1 * h1 * inner
        })
        .sum()
}

#[test]
fn xi_matches_tensor_grid_quadrature() {
    // 40 x 24 x 100^2 ~ 1e7 nodes
    let oracle = xi_grid(1.0, 1.0, 40, 24, 100);
    let est = xi_estimate(&XiSpec {
        d: 2,
        k: 1,
        i: 3,
        j: 1,
        t: 1.0,
        lambda: 0.0,
        tau: 1.0,
        c: 1.0,
        budget: 1_000_000,
        inner_budget: DEFAULT_INNER_BUDGET,
        seed: 2024,
    })
    .unwrap();
    println!("xi estimate {} +- {}, grid {oracle}", est.mean, est.stderr);
    assert!((est.mean - oracle).abs() < 3.0 * est.stderr);
}

#[test]
fn mu_matches_grid_at_zero_lambda() {
    // mu(3,1)(t; 0) = 2 pi / (3 alpha - 2) * int h_t dy
    let t = 1.0;
    let area = hollow_triangle_measure(t, 160, 250);
    let oracle = 2.0 * PI / 10.0 * area;
    let est = mu_estimate(&MuSpec {
        d: 2,
        k: 1,
        i: 3,
        j: 1,
        t,
        lambda: 0.0,
        alpha: 4.0,
        budget: 1_000_000,
        inner_budget: DEFAULT_INNER_BUDGET,
        seed: 77,
    })
    .unwrap();
    println!("mu estimate {} +- {}, grid {oracle}", est.mean, est.stderr);
    assert!((est.mean - oracle).abs() < 3.0 * est.stderr);
}
