//! Newton inversion of analytic maps with path continuation.
//!
//! Every transform inversion in the crate (`F^{-1}` for the Voiculescu
//! transform, `H^{-1}` for free stable laws, `psi^{-1}` for S-transforms)
//! goes through [`PathInverter`]: the target moves along a path starting in a
//! regime where the preimage is known, and Newton is re-run at each waypoint
//! warm-started from the previous preimage. Segments are halved adaptively
//! when Newton stalls.
//!
//! The inverter tracks a winding number for the preimage so that maps given
//! by power sums `z^p` can be evaluated on analytic continuations off the
//! principal sheet.

use num_complex::Complex64;
use std::f64::consts::PI;

/// An analytic map that can be evaluated off the principal sheet.
pub trait AnalyticMap: Sync {
    /// Value on the principal sheet (`arg` in `(-pi, pi]`).
    fn eval(&self, w: Complex64) -> Complex64;

    /// Value with a tracked argument `arg w = principal + 2*pi*winding`.
    /// Maps that cannot continue past the principal sheet ignore `winding`.
    fn eval_wound(&self, w: Complex64, winding: i32) -> Complex64 {
        let _ = winding;
        self.eval(w)
    }

    /// Whether `eval_wound` really continues across the cut.
    fn tracks_winding(&self) -> bool {
        false
    }
}

impl<F: Fn(Complex64) -> Complex64 + Sync> AnalyticMap for F {
    fn eval(&self, w: Complex64) -> Complex64 {
        self(w)
    }
}

/// Why a continuation stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuationError {
    /// `|f'|` fell below the floor: a critical point (branch point of the
    /// inverse) is nearby.
    DerivativeVanishing { at: Complex64, deriv_norm: f64 },
    /// Adaptive segment subdivision hit the depth limit.
    StepUnderflow { at: Complex64, residual: f64 },
    /// Newton ran out of iterations without meeting the tolerance.
    MaxIterations { at: Complex64, residual: f64 },
}

impl ContinuationError {
    pub fn last_iterate(&self) -> Complex64 {
        match self {
            ContinuationError::DerivativeVanishing { at, .. } => *at,
            ContinuationError::StepUnderflow { at, .. } => *at,
            ContinuationError::MaxIterations { at, .. } => *at,
        }
    }
}

/// Principal argument with the upper-boundary convention (`-pi` maps to `pi`).
fn principal_arg(w: Complex64) -> f64 {
    let a = w.arg();
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Newton continuation state: current target, preimage and winding.
pub struct PathInverter<'a> {
    map: &'a dyn AnalyticMap,
    pub target: Complex64,
    pub w: Complex64,
    pub winding: i32,
    pub tol: f64,
    pub deriv_floor: f64,
    pub max_iter: usize,
    max_depth: u32,
}

impl<'a> PathInverter<'a> {
    /// Start from a known pair `map(w0) == target0`.
    pub fn seeded(map: &'a dyn AnalyticMap, target0: Complex64, w0: Complex64) -> Self {
        PathInverter {
            map,
            target: target0,
            w: w0,
            winding: 0,
            tol: 1e-12,
            deriv_floor: 1e-8,
            max_iter: 100,
            max_depth: 60,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn eval(&self, w: Complex64, winding: i32) -> Complex64 {
        self.map.eval_wound(w, winding)
    }

    /// Numeric derivative by central difference; exact enough for Newton on
    /// analytic maps.
    fn derivative(&self, w: Complex64, winding: i32) -> Complex64 {
        let h = 1e-7 * (1.0 + w.norm());
        let hp = Complex64::new(h, 0.0);
        (self.eval(w + hp, winding) - self.eval(w - hp, winding)) / (2.0 * h)
    }

    /// Winding update for a step `w_old -> w_new`, assuming the true argument
    /// changed by less than `pi` (guaranteed by the step clamp below).
    fn wind_step(w_old: Complex64, w_new: Complex64, winding: i32) -> i32 {
        let d = principal_arg(w_new) - principal_arg(w_old);
        if d > PI {
            winding - 1
        } else if d < -PI {
            winding + 1
        } else {
            winding
        }
    }

    /// Newton at a fixed target from the current state. On success the state
    /// is updated; on failure it is left at the last sane iterate.
    fn newton_at(&mut self, target: Complex64) -> Result<(), ContinuationError> {
        let mut w = self.w;
        let mut winding = self.winding;
        let scale = 1.0 + target.norm();
        let mut residual = (self.eval(w, winding) - target).norm();
        for _ in 0..self.max_iter {
            if residual <= self.tol * scale {
                self.w = w;
                self.winding = winding;
                self.target = target;
                return Ok(());
            }
            let deriv = self.derivative(w, winding);
            if deriv.norm() < self.deriv_floor {
                return Err(ContinuationError::DerivativeVanishing {
                    at: w,
                    deriv_norm: deriv.norm(),
                });
            }
            let mut step = -(self.eval(w, winding) - target) / deriv;
            // Keep |step| < |w| so the argument moves by less than pi and the
            // winding bookkeeping stays valid.
            let cap = 0.8 * w.norm().max(1e-300);
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            // Step-halving safeguard: only accept a step that reduces the
            // residual.
            let mut accepted = false;
            for _ in 0..40 {
                let w_try = w + step;
                let wind_try = Self::wind_step(w, w_try, winding);
                let r_try = (self.eval(w_try, wind_try) - target).norm();
                if r_try < residual {
                    w = w_try;
                    winding = wind_try;
                    residual = r_try;
                    accepted = true;
                    break;
                }
                step *= 0.5;
                if step.norm() < 1e-300 {
                    break;
                }
            }
            if !accepted {
                return Err(ContinuationError::MaxIterations { at: w, residual });
            }
        }
        if residual <= self.tol * scale {
            self.w = w;
            self.winding = winding;
            self.target = target;
            Ok(())
        } else {
            Err(ContinuationError::MaxIterations { at: w, residual })
        }
    }

    /// Continue the preimage along the straight segment from the current
    /// target to `target`, subdividing adaptively.
    pub fn continue_to(&mut self, target: Complex64) -> Result<Complex64, ContinuationError> {
        self.continue_rec(target, 0)?;
        Ok(self.w)
    }

    fn continue_rec(&mut self, target: Complex64, depth: u32) -> Result<(), ContinuationError> {
        let from = self.target;
        let saved = (self.w, self.winding, self.target);
        match self.newton_at(target) {
            Ok(()) => Ok(()),
            Err(e) => {
                if depth >= self.max_depth {
                    return Err(match e {
                        ContinuationError::MaxIterations { at, residual } => {
                            ContinuationError::StepUnderflow { at, residual }
                        }
                        other => other,
                    });
                }
                // Roll back and try the midpoint first.
                self.w = saved.0;
                self.winding = saved.1;
                self.target = saved.2;
                let mid = 0.5 * (from + target);
                self.continue_rec(mid, depth + 1)?;
                self.continue_rec(target, depth + 1)
            }
        }
    }

    /// Continue through an explicit list of waypoints (used for monodromy
    /// loops where the path matters, not just the endpoint).
    pub fn continue_along(&mut self, waypoints: &[Complex64]) -> Result<Complex64, ContinuationError> {
        for &p in waypoints {
            self.continue_to(p)?;
        }
        Ok(self.w)
    }
}

/// Solve `map(w) = z` by descending the vertical ray from `Re z + iY` down to
/// `z`, warm-starting at the asymptotic regime where `map(w) ~ w`.
///
/// Returns the preimage and its winding.
pub fn descend_vertical(
    map: &dyn AnalyticMap,
    z: Complex64,
    y_top: f64,
    tol: f64,
) -> Result<(Complex64, i32), ContinuationError> {
    let start = Complex64::new(z.re, z.im + y_top);
    let mut inv = PathInverter::seeded(map, start, start).with_tol(tol);
    // The seed is only approximate; polish it at the top where Newton is
    // globally convergent.
    inv.continue_to(start)?;
    let mut tau = y_top;
    let stop = 1e-4 * z.im.max(1e-6);
    while tau > stop {
        tau *= 0.6;
        inv.continue_to(Complex64::new(z.re, z.im + tau))?;
    }
    inv.continue_to(z)?;
    Ok((inv.w, inv.winding))
}

/// Bisection for a strictly increasing real function, polished by secant
/// steps. Panics if the bracket does not straddle the target.
pub fn bisect_increasing(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    tol: f64,
) -> f64 {
    let flo = f(lo) - target;
    let fhi = f(hi) - target;
    assert!(
        flo <= 0.0 && fhi >= 0.0,
        "bisect_increasing: bracket [{lo}, {hi}] does not straddle the target"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid) - target;
        if fm.abs() <= tol || (hi - lo).abs() <= tol * mid.abs().max(1.0) {
            return mid;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sqrt;
    impl AnalyticMap for Sqrt {
        fn eval(&self, w: Complex64) -> Complex64 {
            w * w
        }
    }

    #[test]
    fn newton_inverts_square() {
        let map = Sqrt;
        let mut inv = PathInverter::seeded(&map, Complex64::new(4.0, 0.0), Complex64::new(2.0, 0.0));
        let w = inv.continue_to(Complex64::new(0.0, 9.0)).unwrap();
        assert!((w * w - Complex64::new(0.0, 9.0)).norm() < 1e-10);
        // Stayed on the branch continued from +2, not the other root.
        assert!(w.re > 0.0);
    }

    #[test]
    fn monodromy_of_square_root() {
        // Continue sqrt around the origin once: the value must flip sign.
        let map = Sqrt;
        let start = Complex64::new(4.0, 0.0);
        let mut inv = PathInverter::seeded(&map, start, Complex64::new(2.0, 0.0));
        let n = 64;
        let mut loop_pts = Vec::new();
        for k in 1..=n {
            let th = 2.0 * PI * k as f64 / n as f64;
            loop_pts.push(Complex64::from_polar(4.0, th));
        }
        let w = inv.continue_along(&loop_pts).unwrap();
        assert!((w - Complex64::new(-2.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn vertical_descent_on_translation() {
        // map(w) = w + i  =>  preimage of z is z - i.
        let map = |w: Complex64| w + Complex64::new(0.0, 1.0);
        let z = Complex64::new(3.0, 0.5);
        let (w, _) = descend_vertical(&map, z, 1e6, 1e-12).unwrap();
        assert!((w - (z - Complex64::new(0.0, 1.0))).norm() < 1e-10);
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect_increasing(|x| x * x * x, -2.0, 2.0, 0.729, 1e-14);
        assert!((r - 0.9).abs() < 1e-7);
    }
}
