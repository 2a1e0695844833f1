//! Small numeric helpers shared across the crate.

use num_complex::Complex64;

/// Principal branch power `z^p` with `arg z` taken in `(-pi, pi]`.
///
/// All stable-law formulas assume `arg z` in `(0, pi)` on the upper
/// half-plane; real-axis arguments are treated as limits from above, so a
/// negative real `z` gets `arg z = pi`.
pub fn powc(z: Complex64, p: f64) -> Complex64 {
    if z == Complex64::ZERO {
        return Complex64::ZERO;
    }
    let (r, mut th) = z.to_polar();
    // Map the branch cut onto the boundary value from the upper half-plane.
    if th == -std::f64::consts::PI {
        th = std::f64::consts::PI;
    }
    Complex64::from_polar(r.powf(p), p * th)
}

/// `z^p` with an explicitly tracked continuous argument, for evaluation on
/// analytic continuations that leave the principal sheet.
pub fn powc_tracked(modulus: f64, arg: f64, p: f64) -> Complex64 {
    Complex64::from_polar(modulus.powf(p), p * arg)
}

/// Principal logarithm with the same boundary convention as [`powc`].
pub fn lnc(z: Complex64) -> Complex64 {
    let (r, mut th) = z.to_polar();
    if th == -std::f64::consts::PI {
        th = std::f64::consts::PI;
    }
    Complex64::new(r.ln(), th)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// `n` log-spaced points between `a` and `b` (both positive).
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0);
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

/// The grid used by invariant checks and verification sweeps:
/// `x + iy` with `x` in `[-10, 10]` (21 linear points) and `y` log-spaced
/// over `[1e-2, 1e2]` (20 points), 420 points total.
pub fn standard_grid() -> Vec<Complex64> {
    let xs = linspace(-10.0, 10.0, 21);
    let ys = logspace(1e-2, 1e2, 20);
    let mut grid = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            grid.push(Complex64::new(x, y));
        }
    }
    grid
}

/// A smaller fixed sub-grid (20 points) used where the contract pins the
/// comparison to "20 grid points".
pub fn comparison_grid() -> Vec<Complex64> {
    let xs = [-5.0, -1.0, 0.0, 1.0, 5.0];
    let ys = [0.1, 1.0, 10.0, 100.0];
    let mut grid = Vec::with_capacity(20);
    for &y in &ys {
        for &x in &xs {
            grid.push(Complex64::new(x, y));
        }
    }
    grid
}

pub fn approx_eq(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

/// Relative distance `|a - b| / max(1, |b|)`.
pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powc_principal_branch() {
        let i = Complex64::new(0.0, 1.0);
        let r = powc(i, 0.5);
        assert!((r - Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        // Negative real axis resolves as the limit from above: arg = pi.
        let m = powc(Complex64::new(-4.0, 0.0), 0.5);
        assert!((m - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn standard_grid_shape() {
        let g = standard_grid();
        assert_eq!(g.len(), 420);
        assert!(g.iter().all(|z| z.im >= 1e-2 && z.im <= 1e2 && z.re.abs() <= 10.0));
    }
}
