//! Quadrature and finite-difference oracles for the weighted norms and the
//! tangential derivative, independent of the transform/trapezoid path used
//! by the library.

use rotbl_core::field::Field2D;
use rotbl_core::grid::Grid;
use rotbl_core::norms::{self, NormParams};
use rotbl_core::ops::{self, WeightParams};

/// Adaptive Simpson quadrature over fixed initial panels (the panels keep
/// the error estimator honest on sharply peaked integrands).
fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let panels = 24;
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        acc += simpson_one(
            f,
            a + k as f64 * h,
            a + (k + 1) as f64 * h,
            tol / panels as f64,
        );
    }
    acc
}

fn simpson_one<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn s<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = s(f, a, m);
        let right = s(f, m, b);
        let scale = 1.0 + whole.abs();
        if depth > 12 || (left + right - whole).abs() <= 15.0 * tol.max(1e-14) * scale {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, left, 0.5 * tol, depth + 1) + rec(f, m, b, right, 0.5 * tol, depth + 1)
        }
    }
    let whole = s(&f, a, b);
    rec(&f, a, b, whole, tol, 0)
}

/// Physicists' Hermite polynomial by recurrence.
fn hermite(m: usize, x: f64) -> f64 {
    let mut h0 = 1.0;
    if m == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for k in 1..m {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

#[test]
fn weighted_l2_matches_quadrature_oracle() {
    // f = e^{-2a y^2} (1+x^2)^{-1}, ell = 1: the weighted square integrand
    // separates into (1+x^2)^{-1} and e^{-2a y^2}
    let grid = Grid::new(1024, 257, 10.0, 8.0).unwrap();
    let a = 0.25;
    let w = WeightParams::new(1.0, a).unwrap();
    let f = Field2D::from_fn(&grid, "f", |x, y| (-2.0 * a * y * y).exp() / (1.0 + x * x));
    let got = ops::weighted_l2(&f, &w);
    let ix = simpson(|x: f64| 1.0 / (1.0 + x * x), -grid.l, grid.l, 1e-12);
    let iy = simpson(|y: f64| (-2.0 * a * y * y).exp(), 0.0, grid.y_max, 1e-12);
    let oracle = (ix * iy).sqrt();
    let rel = (got - oracle).abs() / oracle;
    assert!(rel <= 1e-4, "relative error {rel}");
}

#[test]
fn x_norm_matches_hermite_quadrature_oracle() {
    // u = e^{-2a y^2 - x^2}: d1^m u = (-1)^m H_m(x) e^{-x^2} e^{-2a y^2},
    // dy u = -4 a y e^{-2a y^2} e^{-x^2}-modulated. Per-(m, j) norms have
    // separable closed-form integrands.
    let grid = Grid::new(512, 257, 10.0, 8.0).unwrap();
    let a = 0.25;
    let p = NormParams::new(0.5, a, 1.0, 5).unwrap();
    let u = Field2D::from_fn(&grid, "u", |x, y| (-2.0 * a * y * y - x * x).exp());
    let report = norms::x_norm(&u, &p);

    let iy0 = simpson(|y: f64| (-2.0 * a * y * y).exp(), 0.0, grid.y_max, 1e-13);
    let iy1 = simpson(
        |y: f64| 16.0 * a * a * y * y * (-2.0 * a * y * y).exp(),
        0.0,
        grid.y_max,
        1e-13,
    );
    let mut oracle_total = 0.0;
    for m in 0..=p.m_max {
        let ix = simpson(
            |x: f64| {
                let h = hermite(m, x);
                (1.0 + x * x).powf(p.ell) * h * h * (-2.0 * x * x).exp()
            },
            -grid.l,
            grid.l,
            1e-13,
        );
        let n2_j0 = ix * iy0;
        let n2_j1 = ix * iy1;
        let wm = if m <= 2 { 1.0 } else { p.factorial_weight(m) };
        let contrib = wm * wm * (n2_j0 + n2_j1);
        oracle_total += contrib;
        let got = report.per_m[m].x_sq;
        let rel = (got - contrib).abs() / contrib;
        assert!(rel <= 1e-3, "m = {m}: relative error {rel}");
    }
    let rel = (report.x * report.x - oracle_total).abs() / oracle_total;
    assert!(rel <= 1e-3, "total relative error {rel}");
}

#[test]
fn dx1_second_derivative_matches_refined_fd_oracle() {
    // fourth-order centered stencil on a 4x refined grid as the oracle
    let grid = Grid::new(256, 17, 10.0, 8.0).unwrap();
    let gy = |y: f64| 1.0 + 0.5 * (0.3 * y).sin();
    let f = Field2D::from_fn(&grid, "f", |x, y| (-x * x).exp() * gy(y));
    let d2 = ops::d_x1(&f, 2).unwrap();

    let fine = Grid::new(1024, 17, 10.0, 8.0).unwrap();
    let ff = Field2D::from_fn(&fine, "f", |x, y| (-x * x).exp() * gy(y));
    let h = fine.dx1();
    let nf = fine.n_x1;
    let mut max_rel = 0.0f64;
    let scale = d2.max_abs();
    for i in 0..grid.n_x1 {
        let fi = 4 * i;
        for j in 0..grid.n_y {
            let v = |k: isize| ff.values[[((fi as isize + k).rem_euclid(nf as isize)) as usize, j]];
            let oracle =
                (-v(-2) + 16.0 * v(-1) - 30.0 * v(0) + 16.0 * v(1) - v(2)) / (12.0 * h * h);
            max_rel = max_rel.max((d2.values[[i, j]] - oracle).abs() / scale);
        }
    }
    assert!(max_rel <= 1e-6, "relative error {max_rel}");
}

#[test]
fn a_tau_zero_order_value_matches_quadrature() {
    let grid = Grid::new(256, 129, 10.0, 8.0).unwrap();
    let f = Field2D::from_fn(&grid, "f", |x, y| (-x * x - y * y).exp());
    // small tau: the supremum sits at alpha = 0 where the value is the
    // plain weighted norm of f
    let (val, arg) = norms::a_tau_estimate(&f, 1e-3, 1.0, 3).unwrap();
    assert_eq!(arg, (0, 0));
    let oracle_sq = simpson(|x: f64| (-2.0 * x * x).exp(), -grid.l, grid.l, 1e-13);
    // 2D quadrature of (1 + x^2 + y^2) e^{-2x^2 - 2y^2} does not separate;
    // integrate y inside
    let oracle = {
        let inner = |x: f64| {
            simpson(
                move |y: f64| (1.0 + x * x + y * y) * (-2.0 * x * x - 2.0 * y * y).exp(),
                0.0,
                grid.y_max,
                1e-12,
            )
        };
        // coarse outer Simpson over x with fixed panels
        let n = 400;
        let h = 2.0 * grid.l / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let a = -grid.l + k as f64 * h;
            acc += h / 6.0 * (inner(a) + 4.0 * inner(a + 0.5 * h) + inner(a + h));
        }
        acc.sqrt()
    };
    let _ = oracle_sq;
    let rel = (val - oracle).abs() / oracle;
    assert!(rel <= 1e-4, "relative error {rel}");
}
