//! Kernel geometry against independent oracles: a sign scan for branch
//! points, direct substitution for the branches, hand-solved values for the
//! reference models.

use proptest::prelude::*;
use sticky_core::kernel::{branch_points, kernel_eval, singularity_candidates, y_branch, Branch};
use sticky_core::model::{Model, ModelParams};

const I2: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

fn model(mu: [f64; 2], rho: f64, s: [f64; 2], refl: [[f64; 2]; 2]) -> Option<Model> {
    let c = rho * (s[0] * s[1]).sqrt();
    ModelParams::new(mu, [[s[0], c], [c, s[1]]], refl, [1.0, 1.0]).validate().ok()
}

/// Discriminant in `y` of `½σ22 y² + (σ12 x + μ2) y + ½σ11 x² + μ1 x`.
fn disc(m: &Model, x: f64) -> f64 {
    let s = &m.sigma;
    let b = s[0][1] * x + m.mu[1];
    b * b - s[1][1] * (s[0][0] * x * x + 2.0 * m.mu[0] * x)
}

fn scan_edge(m: &Model, dir: f64) -> f64 {
    let (mut a, mut step) = (0.0, 1e-3);
    while disc(m, a + dir * step) > 0.0 {
        a += dir * step;
        step *= 1.05;
    }
    let mut b = a + dir * step;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if disc(m, mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[test]
fn reference_values() {
    let m0 = model([-1.0, -1.0], 0.0, [1.0, 1.0], I2).unwrap();
    let c = singularity_candidates(&m0).unwrap();
    assert!((c.x2 - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    assert!((c.x_star - 2.0).abs() < 1e-9 && (c.y_star - 2.0).abs() < 1e-9);
    assert!(c.x_tilde.is_infinite());

    let m1 = model([-1.0, -2.0], 0.0, [1.0, 1.0], I2).unwrap();
    let c = singularity_candidates(&m1).unwrap();
    assert!((c.x2 - (1.0 + 5f64.sqrt())).abs() < 1e-12);
    assert!((c.x_star - 2.0).abs() < 1e-9 && (c.y_star - 4.0).abs() < 1e-9);
    assert!(c.x_tilde.is_infinite());
    assert!((branch_points(&m1).unwrap().y2 - (2.0 + 5f64.sqrt())).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn branch_points_match_sign_scan(
        mu1 in -2.0..-0.1f64, mu2 in -2.0..-0.1f64, rho in -0.9..0.9f64,
        s1 in 0.2..3.0f64, s2 in 0.2..3.0f64,
    ) {
        let m = model([mu1, mu2], rho, [s1, s2], I2).unwrap();
        let bp = branch_points(&m).unwrap();
        prop_assert!((bp.x1 - scan_edge(&m, -1.0)).abs() < 1e-6);
        prop_assert!((bp.x2 - scan_edge(&m, 1.0)).abs() < 1e-6);
        prop_assert!(bp.x1 <= 0.0 && bp.x2 > 0.0);
    }

    #[test]
    fn branches_annihilate_the_kernel(
        mu1 in -2.0..1.0f64, mu2 in -2.0..-0.1f64, rho in -0.9..0.9f64,
        s1 in 0.2..3.0f64, s2 in 0.2..3.0f64,
    ) {
        let Some(m) = model([mu1, mu2], rho, [s1, s2], [[1.0, -0.3], [-0.2, 1.0]]) else {
            return Ok(());
        };
        let bp = branch_points(&m).unwrap();
        let s = &m.sigma;
        for i in 0..=200 {
            let x = bp.x1 + (bp.x2 - bp.x1) * i as f64 / 200.0;
            for which in [Branch::Lower, Branch::Upper] {
                let y = y_branch(&m, x, which).unwrap();
                let scale = 1.0 + (m.mu[0] * x).abs() + (m.mu[1] * y).abs()
                    + s[0][0] * x * x + (s[0][1] * x * y).abs() + s[1][1] * y * y;
                prop_assert!(kernel_eval(&m, x, y).abs() / scale < 1e-10);
            }
            let lo = y_branch(&m, x, Branch::Lower).unwrap();
            let hi = y_branch(&m, x, Branch::Upper).unwrap();
            prop_assert!(lo <= hi);
        }
    }
}
