//! Free infinite divisibility: closed-form classification of Boolean stable
//! laws, the numerical Voiculescu-transform verifier, branch-angle
//! diagnostics, the Belinschi-Nica semigroup and indicator probing.
//!
//! A measure is freely infinitely divisible iff `phi = F^{-1} - z` extends
//! analytically to the upper half-plane with values in the closed lower
//! half-plane. The numerical verifier checks both halves of that statement:
//! the sign of `Im phi` on a grid, and single-valuedness of the continuation
//! via monodromy loops around candidate branch points (critical values of
//! the continued `F`). A two-sided jump of the continuation around such a
//! point is exactly the discontinuity exhibited by the ray fold
//! `F(r e^{i theta}) = (r - r^{1-alpha}) e^{i theta}`.

use crate::convolve::{boolean_power, free_power};
use crate::newton::{descend_vertical, ContinuationError, PathInverter};
use crate::stable::{boolean_stable_handle, StableLaw};
use crate::transform::{MeasureHandle, TransformError};
use crate::util::standard_grid;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Matched case of the free-divisibility classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FidRule {
    AlphaLeHalf,
    MiddleBand,
    Cauchy,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceDetail {
    /// Verdict from the closed-form classifier.
    ClosedForm,
    /// Grid sweep of `Im phi` with the number of flagged points.
    GridSweep { flagged: usize, grid_size: usize },
    /// `|F(iy)|` grows as `y -> 0`: `F(0) = infinity`, so `F` cannot extend
    /// continuously to the closed half-plane.
    F0Divergence { growth: f64 },
    /// Monodromy of `F^{-1}` around an enclosed branch point: the two-sided
    /// limits of the continuation differ by `jump`.
    MonodromyJump { jump: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Evidence {
    pub min_neg_im_phi: f64,
    pub witness: Option<Complex64>,
    pub detail: EvidenceDetail,
}

/// Free infinite divisibility verdict.
///
/// `rule` matches the closed-form classification; purely numerical verdicts
/// on handles outside the Boolean stable family carry `FidRule::None`
/// together with their evidence.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FidVerdict {
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub decision: bool,
    pub rule: FidRule,
    pub evidence: Evidence,
}

impl FidVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha,
            "rho": self.rho,
            "decision": self.decision,
            "rule": self.rule,
            "min_neg_im_phi": self.evidence.min_neg_im_phi,
            "witness": self.evidence.witness.map(|w| vec![w.re, w.im]),
            "detail": serde_json::to_value(self.evidence.detail).unwrap(),
        })
    }
}

/// Closed-form classification of `b_alpha^rho`:
/// freely infinitely divisible iff `alpha <= 1/2`, or
/// `1/2 < alpha <= 2/3` with `2 - 1/alpha <= rho <= 1/alpha - 1`, or
/// `(alpha, rho) = (1, 1/2)`. Boundaries inclusive.
pub fn classify_fid(alpha: f64, rho: f64) -> Result<FidVerdict, TransformError> {
    if !(alpha > 0.0 && alpha <= 2.0) || !(0.0..=1.0).contains(&rho) {
        return Err(TransformError::Parameter(format!(
            "classify_fid needs alpha in (0,2], rho in [0,1]; got ({alpha}, {rho})"
        )));
    }
    let rule = if alpha <= 0.5 {
        FidRule::AlphaLeHalf
    } else if alpha <= 2.0 / 3.0 && (2.0 - 1.0 / alpha) <= rho && rho <= (1.0 / alpha - 1.0) {
        FidRule::MiddleBand
    } else if alpha == 1.0 && rho == 0.5 {
        FidRule::Cauchy
    } else {
        FidRule::None
    };
    Ok(FidVerdict {
        alpha: Some(alpha),
        rho: Some(rho),
        decision: rule != FidRule::None,
        rule,
        evidence: Evidence { min_neg_im_phi: f64::NAN, witness: None, detail: EvidenceDetail::ClosedForm },
    })
}

/// `phi(z) = F^{-1}(z) - z` by Newton continuation along the vertical ray
/// from `Re z + iY` down to `z`.
pub(crate) fn phi_continued(m: &MeasureHandle, z: Complex64) -> Result<Complex64, ContinuationError> {
    let (w, _) = descend_vertical(m, z, 1e6, 1e-12)?;
    Ok(w - z)
}

/// Voiculescu transform of a handle at `z` in the upper half-plane.
///
/// Residual contract: `|F(z + phi(z)) - z| <= 1e-10 (1 + |z|)`.
pub fn numeric_phi(m: &MeasureHandle, z: Complex64) -> Result<Complex64, TransformError> {
    if z.im <= 0.0 {
        return Err(TransformError::UpperHalfPlane(z));
    }
    if let Some(phi) = m.closed_phi_at(z) {
        return Ok(phi);
    }
    phi_continued(m, z).map_err(|e| {
        TransformError::Inversion(format!("phi continuation obstructed at {z}: {e:?}"))
    })
}

/// Probe for `F(0) = infinity`: evaluate `|F|` down the imaginary axis and
/// flag sustained growth.
fn f0_diverges(m: &MeasureHandle) -> Option<f64> {
    let r1 = m.f_raw(Complex64::new(0.0, 1e-6)).norm();
    let r2 = m.f_raw(Complex64::new(0.0, 1e-10)).norm();
    if r2 >= r1 + 0.5 && r2 >= 2.0 {
        Some(r2 - r1)
    } else {
        None
    }
}

/// Candidate branch points of the continued `F^{-1}` in the upper half-plane
/// for a single-power energy function `K(z) = c z^p (+ const)`:
/// critical points solve `w^alpha = c (1 - alpha)` (with `alpha = 1 - p`) on
/// successive sheets, and the critical values are
/// `z = -alpha/(1-alpha) w - shift`.
fn branch_point_candidates(m: &MeasureHandle) -> Vec<Complex64> {
    let Some(k) = m.power_k() else { return Vec::new() };
    let mut shift = Complex64::ZERO;
    let mut main: Option<(Complex64, f64)> = None;
    for t in &k.terms {
        if t.power == 0.0 {
            shift = t.coef;
        } else if main.is_none() {
            main = Some((t.coef, t.power));
        } else {
            return Vec::new(); // multi-term: no closed candidates
        }
    }
    if k.log_coef != 0.0 {
        return Vec::new();
    }
    let Some((c, p)) = main else { return Vec::new() };
    let alpha = 1.0 - p;
    if !(0.0 < alpha && alpha < 1.0) {
        return Vec::new();
    }
    let base = c * (1.0 - alpha);
    let modulus = base.norm().powf(1.0 / alpha);
    let arg0 = base.arg();
    let mut out = Vec::new();
    for k_idx in -6i32..=6 {
        let theta = (arg0 + 2.0 * PI * k_idx as f64) / alpha;
        let w = Complex64::from_polar(modulus, theta);
        let z = -alpha / (1.0 - alpha) * w - shift;
        if z.im > 2e-3 && z.norm() < 50.0 {
            out.push(z);
        }
    }
    out
}

/// Continue `F^{-1}` around a closed loop; returns the monodromy jump
/// `|w_end - w_start|` relative to the start, or an error if the loop could
/// not be completed.
fn loop_jump(m: &MeasureHandle, waypoints: &[Complex64]) -> Result<f64, ContinuationError> {
    let base = waypoints[0];
    let (w0, wind0) = descend_vertical(m, base, 1e6, 1e-12)?;
    let mut inv = PathInverter::seeded(m, base, w0);
    inv.winding = wind0;
    let w_end = inv.continue_along(&waypoints[1..])?;
    Ok((w_end - w0).norm() / (1.0 + w0.norm()))
}

fn circle_loop(center: Complex64, radius: f64, steps: usize) -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let th = 2.0 * PI * k as f64 / steps as f64;
        pts.push(center + Complex64::from_polar(radius, th));
    }
    pts
}

fn rectangle_loop(x_max: f64, y_min: f64, y_max: f64, per_edge: usize) -> Vec<Complex64> {
    let mut pts = Vec::new();
    let corners = [
        Complex64::new(0.0, y_max),
        Complex64::new(-x_max, y_max),
        Complex64::new(-x_max, y_min),
        Complex64::new(x_max, y_min),
        Complex64::new(x_max, y_max),
        Complex64::new(0.0, y_max),
    ];
    for pair in corners.windows(2) {
        for k in 0..per_edge {
            let t = k as f64 / per_edge as f64;
            pts.push(pair[0] + (pair[1] - pair[0]) * t);
        }
    }
    pts.push(corners[5]);
    pts
}

/// Monodromy probe: continue `F^{-1}` around loops in the upper half-plane
/// and report the largest jump found, with the loop base as witness.
fn monodromy_probe(m: &MeasureHandle) -> Option<(f64, Complex64)> {
    if !crate::newton::AnalyticMap::tracks_winding(m) {
        return None;
    }
    let mut worst: Option<(f64, Complex64)> = None;
    let mut candidates = branch_point_candidates(m);
    // Deduplicate near-coincident candidates.
    candidates.dedup_by(|a, b| (*a - *b).norm() < 1e-9);
    for z in &candidates {
        let gap = candidates
            .iter()
            .filter(|o| (**o - *z).norm() > 1e-9)
            .map(|o| (*o - *z).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.3 * gap).min(0.5 * z.im).min(1.0);
        if !(radius > 1e-4) {
            continue;
        }
        if let Ok(jump) = loop_jump(m, &circle_loop(*z, radius, 72)) {
            if jump > 1e-3 && worst.map_or(true, |(j, _)| jump > j) {
                worst = Some((jump, *z));
            }
        }
    }
    if worst.is_none() {
        // Generic sweep: one wide loop under/around the region where the
        // stable-law branch points live.
        if let Ok(jump) = loop_jump(m, &rectangle_loop(3.0, 1e-3, 5.0, 40)) {
            if jump > 1e-3 {
                worst = Some((jump, Complex64::new(0.0, 5.0)));
            }
        }
    }
    worst
}

/// Numerical free-divisibility verdict over a grid.
///
/// Decision is `true` iff the `F(0)` probe does not diverge, `Im phi <= tol`
/// at every unflagged grid point, no monodromy jump is found, and the
/// flagged fraction stays at or below 1%.
pub fn verify_fid_numeric(
    m: &MeasureHandle,
    grid: &[Complex64],
    tol: f64,
) -> Result<FidVerdict, TransformError> {
    if grid.iter().any(|z| z.im <= 0.0) {
        return Err(TransformError::Parameter("verification grid must lie in C+".into()));
    }
    if let Some(growth) = f0_diverges(m) {
        return Ok(FidVerdict {
            alpha: None,
            rho: None,
            decision: false,
            rule: FidRule::None,
            evidence: Evidence {
                min_neg_im_phi: f64::NAN,
                witness: Some(Complex64::new(0.0, 1e-10)),
                detail: EvidenceDetail::F0Divergence { growth },
            },
        });
    }
    let sweep: Vec<(Complex64, Option<Complex64>)> = grid
        .par_iter()
        .map(|&z| (z, phi_continued(m, z).ok()))
        .collect();
    let flagged = sweep.iter().filter(|(_, phi)| phi.is_none()).count();
    let mut min_neg = f64::INFINITY;
    let mut worst_witness = None;
    let mut max_im = f64::NEG_INFINITY;
    for (z, phi) in sweep.iter().filter_map(|(z, p)| p.map(|p| (*z, p))) {
        let neg = -phi.im;
        if neg < min_neg {
            min_neg = neg;
            worst_witness = Some(z);
        }
        max_im = max_im.max(phi.im);
    }
    let mut decision = true;
    let mut detail = EvidenceDetail::GridSweep { flagged, grid_size: grid.len() };
    let mut witness = worst_witness;
    if max_im > tol {
        decision = false;
    }
    if flagged * 100 > grid.len() {
        decision = false;
    }
    if decision {
        if let Some((jump, base)) = monodromy_probe(m) {
            decision = false;
            detail = EvidenceDetail::MonodromyJump { jump };
            witness = Some(base);
        }
    }
    Ok(FidVerdict {
        alpha: None,
        rho: None,
        decision,
        rule: FidRule::None,
        evidence: Evidence { min_neg_im_phi: min_neg, witness, detail },
    })
}

/// Branch angles of the stable-law continuation, `phi_angle = alpha rho pi`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: Option<f64>,
    pub theta4: Option<f64>,
    pub phi_angle: f64,
}

/// Angles `theta1 = -phi/(1-alpha)`, `theta2 = (pi-phi)/(1-alpha)` and, in
/// the non-divisible wedge, the fold angles `theta3 = (phi+pi)/alpha` (used
/// when `phi < (2 alpha - 1) pi`) and `theta4 = (phi-pi)/alpha` (used when
/// `phi > (1-alpha) pi`).
pub fn branch_angles(alpha: f64, rho: f64) -> Result<BranchAngles, TransformError> {
    if !(alpha > 0.0 && alpha < 1.0) || !(0.0..=1.0).contains(&rho) {
        return Err(TransformError::Parameter(format!(
            "branch_angles needs alpha in (0,1), rho in [0,1]; got ({alpha}, {rho})"
        )));
    }
    let phi = alpha * rho * PI;
    let theta3 = if alpha > 0.5 && phi < (2.0 * alpha - 1.0) * PI {
        Some((phi + PI) / alpha)
    } else {
        None
    };
    let theta4 = if alpha > 0.5 && phi > (1.0 - alpha) * PI {
        Some((phi - PI) / alpha)
    } else {
        None
    };
    Ok(BranchAngles {
        theta1: -phi / (1.0 - alpha),
        theta2: (PI - phi) / (1.0 - alpha),
        theta3,
        theta4,
        phi_angle: phi,
    })
}

/// `F` of `b_alpha^rho` evaluated on the ray `arg z = theta` with the
/// continuation branch fixed by the explicit angle.
fn eval_f_ray(alpha: f64, rho: f64, r: f64, theta: f64) -> Complex64 {
    let phi = alpha * rho * PI;
    Complex64::from_polar(r, theta)
        + Complex64::from_polar(r.powf(1.0 - alpha), phi + (1.0 - alpha) * theta)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RayWitness {
    pub theta: f64,
    pub r1: f64,
    pub r2: f64,
    pub value: Complex64,
    pub residual: f64,
}

/// Two radii `r1 < r2` with `F(r1 e^{i theta}) = F(r2 e^{i theta}) = z0/2`,
/// where `z0` is the extreme value of the ray fold `r - r^{1-alpha}`.
/// Exists exactly in the non-divisible wedge of `1/2 < alpha < 1`.
pub fn ray_noninjectivity_witness(alpha: f64, rho: f64) -> Result<RayWitness, TransformError> {
    if !(alpha > 0.5 && alpha < 1.0) || !(0.0..=1.0).contains(&rho) {
        return Err(TransformError::Parameter(format!(
            "witness needs alpha in (1/2,1); got ({alpha}, {rho})"
        )));
    }
    let phi = alpha * rho * PI;
    let theta = if phi < (2.0 * alpha - 1.0) * PI {
        (phi + PI) / alpha
    } else if phi > (1.0 - alpha) * PI {
        (phi - PI) / alpha
    } else {
        return Err(TransformError::Parameter(format!(
            "({alpha}, {rho}) lies in the freely divisible band; no fold ray exists"
        )));
    };
    // g(r) = r - r^{1-alpha} has its minimum -m at r* = (1-alpha)^{1/alpha}.
    let g = |r: f64| r - r.powf(1.0 - alpha);
    let r_star = (1.0 - alpha).powf(1.0 / alpha);
    let m = alpha * (1.0 - alpha).powf((1.0 - alpha) / alpha);
    debug_assert!((g(r_star) + m).abs() < 1e-12);
    let target = -0.5 * m;
    let r1 = {
        // g decreases from 0 to -m on (0, r*).
        let neg_g = |r: f64| -g(r);
        crate::newton::bisect_increasing(neg_g, 1e-300, r_star, -target, 1e-15)
    };
    let r2 = crate::newton::bisect_increasing(g, r_star, 1.0, target, 1e-15);
    let v1 = eval_f_ray(alpha, rho, r1, theta);
    let v2 = eval_f_ray(alpha, rho, r2, theta);
    let value = Complex64::from_polar(0.5 * m, theta + PI);
    let residual = (v1 - v2).norm().max((v1 - value).norm());
    Ok(RayWitness { theta, r1, r2, value, residual })
}

#[derive(Debug, Clone, Serialize)]
pub struct UiBoundaryReport {
    pub alpha: f64,
    pub rho: f64,
    pub pass: bool,
    pub im_bound_ok: bool,
    pub same_ray_separated: bool,
    pub cross_ray_only_near_zero: bool,
    pub modulus_monotone: [bool; 2],
    pub min_same_ray_gap: f64,
}

/// Samples the rays `l_{theta1}`, `l_{theta2}` and checks the image geometry
/// consistent with injectivity of `F` there. Diagnostic only; membership in
/// the univalent-inverse class is never claimed.
pub fn ui_boundary_diagnostic(alpha: f64, rho: f64) -> Result<UiBoundaryReport, TransformError> {
    if !(alpha > 0.0 && alpha <= 0.5) || !(0.0..=1.0).contains(&rho) {
        return Err(TransformError::Parameter(format!(
            "diagnostic covers alpha in (0, 1/2]; got ({alpha}, {rho})"
        )));
    }
    let angles = branch_angles(alpha, rho)?;
    let radii = crate::util::logspace(1e-4, 1e4, 61);
    let image = |theta: f64| -> Vec<Complex64> {
        radii.iter().map(|&r| eval_f_ray(alpha, rho, r, theta)).collect()
    };
    let ray1 = image(angles.theta1);
    let ray2 = image(angles.theta2);
    let im_bound_ok = ray1.iter().chain(&ray2).all(|f| f.im <= 1e-10);
    let mut min_gap = f64::INFINITY;
    let mut same_ray_separated = true;
    for ray in [&ray1, &ray2] {
        for i in 0..ray.len() {
            for j in (i + 1)..ray.len() {
                let d = (ray[i] - ray[j]).norm();
                min_gap = min_gap.min(d);
                if d <= 1e-8 {
                    same_ray_separated = false;
                }
            }
        }
    }
    let mut cross_ok = true;
    for a in &ray1 {
        for b in &ray2 {
            if (a - b).norm() <= 1e-8 && (a.norm() > 1e-6 || b.norm() > 1e-6) {
                cross_ok = false;
            }
        }
    }
    let monotone = |ray: &[Complex64]| -> bool {
        ray.windows(2).all(|w| w[1].norm() >= w[0].norm() - 1e-12)
    };
    let report = UiBoundaryReport {
        alpha,
        rho,
        pass: im_bound_ok && same_ray_separated && cross_ok,
        im_bound_ok,
        same_ray_separated,
        cross_ray_only_near_zero: cross_ok,
        modulus_monotone: [monotone(&ray1), monotone(&ray2)],
        min_same_ray_gap: min_gap,
    };
    Ok(report)
}

/// Belinschi-Nica map `B_t(mu) = (mu^{boxplus (1+t)})^{⊎ 1/(1+t)}`.
pub fn belinschi_nica(m: &MeasureHandle, t: f64) -> Result<MeasureHandle, TransformError> {
    if !(t >= 0.0) {
        return Err(TransformError::Parameter(format!("B_t needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(m.clone());
    }
    let fp = free_power(m, 1.0 + t)?;
    let bp = boolean_power(&fp.handle, 1.0 / (1.0 + t))?;
    let mut h = bp.handle;
    if t >= 1.0 {
        // Images of B_t for t >= 1 are freely infinitely divisible.
        h = h.certify_fid();
    }
    Ok(h.with_label(format!("B_{t}({})", m.label())))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndicatorProbe {
    pub alpha: f64,
    pub rho: f64,
    pub entries: Vec<(f64, bool)>,
    pub all_fid: bool,
    pub none_fid: bool,
}

/// Run the numerical divisibility verifier on Boolean powers `b^{⊎ tau}`:
/// for divisible Boolean stable laws every power passes (indicator
/// infinity), for non-divisible ones every power fails (indicator 0).
pub fn indicator_probe(alpha: f64, rho: f64, t_list: &[f64]) -> Result<IndicatorProbe, TransformError> {
    let law = StableLaw::boolean(alpha, rho)?;
    let base = boolean_stable_handle(&law)?;
    let grid = standard_grid();
    let mut entries = Vec::with_capacity(t_list.len());
    for &tau in t_list {
        if !(tau > 0.0) {
            return Err(TransformError::Parameter(format!("probe times must be positive, got {tau}")));
        }
        let powered = boolean_power(&base, tau)?;
        let verdict = verify_fid_numeric(&powered.handle, &grid, 1e-9)?;
        entries.push((tau, verdict.decision));
    }
    let all_fid = entries.iter().all(|(_, d)| *d);
    let none_fid = entries.iter().all(|(_, d)| !*d);
    Ok(IndicatorProbe { alpha, rho, entries, all_fid, none_fid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::PowerSumK;
    use crate::util::approx_eq;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    #[test]
    fn classifier_truth_table() {
        // Rule (1) with interior and boundary alpha.
        assert_eq!(classify_fid(0.5, 0.3).unwrap().rule, FidRule::AlphaLeHalf);
        assert!(classify_fid(0.5, 0.0).unwrap().decision);
        assert!(classify_fid(0.5, 1.0).unwrap().decision);
        // Rule (2) boundary: alpha = 2/3 forces rho = 1/2 exactly.
        let v = classify_fid(2.0 / 3.0, 0.5).unwrap();
        assert!(v.decision);
        assert_eq!(v.rule, FidRule::MiddleBand);
        assert!(!classify_fid(2.0 / 3.0, 0.51).unwrap().decision);
        // Rule (3).
        let v = classify_fid(1.0, 0.5).unwrap();
        assert_eq!(v.rule, FidRule::Cauchy);
        // Outside.
        assert!(!classify_fid(0.9, 1.0).unwrap().decision);
        assert!(!classify_fid(1.5, 0.2).unwrap().decision);
        assert!(!classify_fid(1.0, 0.8).unwrap().decision);
        assert!(classify_fid(2.2, 0.5).is_err());
    }

    #[test]
    fn phi_of_cauchy_is_constant() {
        let cauchy = boolean_stable_handle(&StableLaw::boolean(1.0, 0.5).unwrap()).unwrap();
        for z in [I, 2.0 * I + 1.0, Complex64::new(-3.0, 0.4)] {
            let phi = numeric_phi(&cauchy, z).unwrap();
            assert!(approx_eq(phi, -I, 1e-10), "phi({z}) = {phi}");
        }
    }

    #[test]
    fn phi_round_trip_residual() {
        let b = boolean_stable_handle(&StableLaw::boolean(0.5, 1.0).unwrap()).unwrap();
        let z = 2.0 * I;
        let phi = numeric_phi(&b, z).unwrap();
        let back = b.f_raw(z + phi);
        assert!((back - z).norm() <= 1e-10);
    }

    #[test]
    fn phi_of_free_stable_matches_closed_form() {
        let s = crate::stable::free_stable_handle(&StableLaw::free(0.6, 0.4).unwrap()).unwrap();
        for k in 0..10 {
            let z = Complex64::new(-2.0 + 0.45 * k as f64, 1.5 + 0.2 * k as f64);
            let phi = numeric_phi(&s, z).unwrap();
            let closed = -Complex64::from_polar(1.0, 0.6 * 0.4 * PI) * crate::util::powc(z, 0.4);
            assert!((phi - closed).norm() < 1e-8, "z = {z}");
        }
    }

    #[test]
    fn verifier_agrees_on_divisible_law() {
        let h = boolean_stable_handle(&StableLaw::boolean(0.4, 0.7).unwrap()).unwrap();
        let v = verify_fid_numeric(&h, &standard_grid(), 1e-9).unwrap();
        assert!(v.decision, "evidence: {:?}", v.evidence);
    }

    #[test]
    fn verifier_rejects_wedge_law_with_witness() {
        let h = boolean_stable_handle(&StableLaw::boolean(0.9, 1.0).unwrap()).unwrap();
        let v = verify_fid_numeric(&h, &standard_grid(), 1e-9).unwrap();
        assert!(!v.decision);
        match v.evidence.detail {
            EvidenceDetail::MonodromyJump { jump } => assert!(jump > 1e-3),
            EvidenceDetail::GridSweep { .. } => {
                assert!(v.evidence.min_neg_im_phi < -1e-6, "need a real witness")
            }
            other => panic!("unexpected evidence {other:?}"),
        }
    }

    #[test]
    fn verifier_fast_path_on_f0_divergence() {
        let h = boolean_stable_handle(&StableLaw::boolean(1.0, 0.8).unwrap()).unwrap();
        let v = verify_fid_numeric(&h, &standard_grid(), 1e-9).unwrap();
        assert!(!v.decision);
        assert!(matches!(v.evidence.detail, EvidenceDetail::F0Divergence { .. }));
        let h = boolean_stable_handle(&StableLaw::boolean(1.5, 0.2).unwrap()).unwrap();
        let v = verify_fid_numeric(&h, &standard_grid(), 1e-9).unwrap();
        assert!(matches!(v.evidence.detail, EvidenceDetail::F0Divergence { .. }));
    }

    #[test]
    fn branch_angles_cases() {
        // (0.8, 1): theta3 formula leaves (pi, 2pi), so the theta4 branch applies.
        let a = branch_angles(0.8, 1.0).unwrap();
        assert!(a.theta3.is_none());
        let t4 = a.theta4.unwrap();
        assert!((t4 - (-0.25 * PI)).abs() < 1e-12);
        // (0.9, 0.1): phi = 0.09 pi < (2 alpha - 1) pi.
        let a = branch_angles(0.9, 0.1).unwrap();
        let t3 = a.theta3.unwrap();
        assert!((t3 - (0.09 * PI + PI) / 0.9).abs() < 1e-12);
        assert!(t3 > PI && t3 < 2.0 * PI);
        // Middle band: no fold angle at all.
        let a = branch_angles(0.6, 0.5).unwrap();
        assert!(a.theta3.is_none() && a.theta4.is_none());
        assert!((a.theta1 - -(0.3 * PI) / 0.4).abs() < 1e-12);
    }

    #[test]
    fn ray_witness_points() {
        let w = ray_noninjectivity_witness(0.9, 0.1).unwrap();
        let r_star = (0.1f64).powf(1.0 / 0.9);
        assert!(w.r1 < r_star && r_star < w.r2, "r1={} r*={} r2={}", w.r1, r_star, w.r2);
        assert!(w.residual <= 1e-10, "residual {}", w.residual);
        // Fold extreme: g'(r*) = 0 and g(r*) = -m.
        let g = |r: f64| r - r.powf(0.1);
        let m = 0.9 * (0.1f64).powf(0.1 / 0.9);
        assert!((g(r_star) + m).abs() < 1e-14);
        let h = 1e-7;
        assert!(((g(r_star + h) - g(r_star - h)) / (2.0 * h)).abs() < 1e-5);
        // Inside the band there is no witness.
        assert!(ray_noninjectivity_witness(0.6, 0.5).is_err());
    }

    #[test]
    fn ui_diagnostic_passes_on_divisible_laws() {
        let r = ui_boundary_diagnostic(0.5, 1.0).unwrap();
        assert!(r.pass, "{r:?}");
        let r = ui_boundary_diagnostic(0.3, 0.5).unwrap();
        assert!(r.pass);
        assert!(r.modulus_monotone[0] && r.modulus_monotone[1]);
        assert!(ui_boundary_diagnostic(0.7, 0.5).is_err());
    }

    #[test]
    fn belinschi_nica_identity_at_zero() {
        let b = boolean_stable_handle(&StableLaw::boolean(0.5, 1.0).unwrap()).unwrap();
        let id = belinschi_nica(&b, 0.0).unwrap();
        let z = Complex64::new(0.7, 1.1);
        assert!(approx_eq(id.f_raw(z), b.f_raw(z), 1e-14));
    }

    #[test]
    fn monodromy_clean_on_middle_band() {
        let h = boolean_stable_handle(&StableLaw::boolean(0.6, 0.5).unwrap()).unwrap();
        assert!(monodromy_probe(&h).is_none());
    }

    #[test]
    fn branch_candidates_of_wedge_law() {
        let h = boolean_stable_handle(&StableLaw::boolean(0.9, 0.1).unwrap()).unwrap();
        let cands = branch_point_candidates(&h);
        assert!(!cands.is_empty());
        // All candidates sit on the circle |z| = alpha (1-alpha)^{(1-alpha)/alpha}.
        let m = 0.9 * (0.1f64).powf(0.1 / 0.9);
        for z in cands {
            assert!((z.norm() - m).abs() < 1e-12, "|z| = {} vs {}", z.norm(), m);
        }
    }

    #[test]
    fn verdict_json_shape() {
        let v = classify_fid(0.6, 0.5).unwrap();
        let json = v.to_json();
        assert_eq!(json["rule"], "middle_band");
        assert_eq!(json["decision"], true);
        assert!(json["witness"].is_null());
    }

    #[test]
    fn dilated_constant_k_handles_have_no_candidates() {
        let h = MeasureHandle::from_power_k(PowerSumK::constant(-I), crate::transform::Support::Real);
        assert!(branch_point_candidates(&h).is_empty());
    }
}
