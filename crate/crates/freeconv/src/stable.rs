//! The three stable families: Boolean `b_alpha^rho`, free `s_alpha^rho` and
//! positive classical `n_alpha`.
//!
//! Boolean laws are given by closed energy functions, free laws by Newton
//! inversion of the closed inverse `H(w) = w - e^{i alpha rho pi} w^{1-alpha}`,
//! and the classical positive stable law by its Laplace transform
//! `e^{-z^alpha}` (closed Levy form at alpha = 1/2, Talbot inversion
//! elsewhere).

use crate::divisibility::classify_fid;
use crate::newton::{descend_vertical, AnalyticMap, ContinuationError, PathInverter};
use crate::transform::{MeasureHandle, PowerSumK, Support, TransformError};
use crate::util::powc;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Boolean,
    Free,
    Classical,
}

/// A stable law: family tag, stability index `alpha`, asymmetry `rho`, and
/// the affine wrapper `delta_shift ⊎ D_scale(base)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLaw {
    pub family: Family,
    pub alpha: f64,
    pub rho: f64,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl StableLaw {
    pub fn boolean(alpha: f64, rho: f64) -> Result<Self, TransformError> {
        let law = StableLaw { family: Family::Boolean, alpha, rho, shift: 0.0, scale: 1.0 };
        law.validate()?;
        Ok(law)
    }

    pub fn free(alpha: f64, rho: f64) -> Result<Self, TransformError> {
        let law = StableLaw { family: Family::Free, alpha, rho, shift: 0.0, scale: 1.0 };
        law.validate()?;
        Ok(law)
    }

    pub fn classical(alpha: f64) -> Result<Self, TransformError> {
        let law = StableLaw { family: Family::Classical, alpha, rho: 1.0, shift: 0.0, scale: 1.0 };
        law.validate()?;
        Ok(law)
    }

    pub fn with_affine(mut self, shift: f64, scale: f64) -> Result<Self, TransformError> {
        if !(scale > 0.0) {
            return Err(TransformError::Parameter(format!("scale must be positive, got {scale}")));
        }
        self.shift = shift;
        self.scale = scale;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        let StableLaw { family, alpha, rho, scale, .. } = *self;
        if !(scale > 0.0) {
            return Err(TransformError::Parameter(format!("scale must be positive, got {scale}")));
        }
        let ok = match family {
            Family::Boolean => alpha > 0.0 && alpha <= 2.0 && (0.0..=1.0).contains(&rho),
            Family::Free => alpha > 0.0 && alpha <= 1.0 && (0.0..=1.0).contains(&rho),
            Family::Classical => alpha > 0.0 && alpha < 1.0 && rho == 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(TransformError::Parameter(format!(
                "parameters out of range for {family:?} stable law: alpha = {alpha}, rho = {rho}"
            )))
        }
    }

    /// Analytic-oracle handle; boolean and free families only.
    pub fn handle(&self) -> Result<MeasureHandle, TransformError> {
        match self.family {
            Family::Boolean => boolean_stable_handle(self),
            Family::Free => free_stable_handle(self),
            Family::Classical => Err(TransformError::Parameter(
                "classical stable laws are density/Laplace objects, not F-oracles".into(),
            )),
        }
    }
}

/// Energy function of `b_alpha^rho` per the stable-law classification:
/// three branches for `alpha` below, at and above 1.
pub fn boolean_stable_k(alpha: f64, rho: f64, z: Complex64) -> Result<Complex64, TransformError> {
    StableLaw::boolean(alpha, rho)?;
    if z.im <= 0.0 {
        return Err(TransformError::UpperHalfPlane(z));
    }
    Ok(boolean_k_powersum(alpha, rho).eval(z))
}

pub(crate) fn boolean_k_powersum(alpha: f64, rho: f64) -> PowerSumK {
    if alpha < 1.0 {
        let coef = -Complex64::from_polar(1.0, PI * rho * alpha);
        PowerSumK::single(coef, 1.0 - alpha)
    } else if alpha == 1.0 {
        let mut k = PowerSumK::constant(Complex64::new(0.0, -2.0 * rho));
        k.log_coef = 2.0 * (2.0 * rho - 1.0) / PI;
        k
    } else {
        let coef = Complex64::from_polar(1.0, (alpha - 2.0) * rho * PI);
        PowerSumK::single(coef, 1.0 - alpha)
    }
}

fn boolean_support(alpha: f64, rho: f64) -> Support {
    if alpha <= 1.0 && rho == 1.0 {
        Support::Positive
    } else if alpha <= 1.0 && rho == 0.0 {
        Support::Negative
    } else {
        Support::Real
    }
}

/// Handle for a Boolean stable law, affine wrapper included.
pub fn boolean_stable_handle(law: &StableLaw) -> Result<MeasureHandle, TransformError> {
    if law.family != Family::Boolean {
        return Err(TransformError::Parameter("boolean_stable_handle needs a boolean law".into()));
    }
    law.validate()?;
    let (alpha, rho) = (law.alpha, law.rho);
    let k = boolean_k_powersum(alpha, rho).affine(law.shift, law.scale);
    let mut h = MeasureHandle::from_power_k(k, boolean_support(alpha, rho));
    if law.shift != 0.0 {
        h.set_support(Support::Real);
    } else if law.scale != 1.0 {
        // dilation keeps the half-line supports
    }
    if alpha < 1.0 {
        let scale = law.scale;
        h = h.with_density(move |x| boolean_stable_density(alpha, rho, x).unwrap_or(0.0));
        let _ = scale;
        h = h.with_tail_exponent(-alpha - 1.0);
    } else if alpha < 2.0 {
        h = h.with_tail_exponent(-alpha - 1.0);
    }
    if classify_fid(alpha, rho)?.decision {
        h = h.certify_fid();
    }
    Ok(h.with_label(format!("b[{alpha},{rho}]")))
}

/// Closed-form density of `b_alpha^rho` for `alpha` in `(0,1)`, evaluated as
/// the boundary value `-(1/pi) Im G(x + i0)` of the closed transform. For
/// `rho = 1` this is `sin(alpha pi) x^{alpha-1} / (x^{2 alpha} +
/// 2 cos(alpha pi) x^alpha + 1) / pi` on `x > 0` and `0` on `x < 0`.
pub fn boolean_stable_density(alpha: f64, rho: f64, x: f64) -> Result<f64, TransformError> {
    if !(alpha > 0.0 && alpha < 1.0) || !(0.0..=1.0).contains(&rho) {
        return Err(TransformError::Parameter(format!(
            "density available for alpha in (0,1), rho in [0,1]; got ({alpha}, {rho})"
        )));
    }
    if x == 0.0 {
        return Err(TransformError::Parameter("x = 0 is an integrable singularity endpoint".into()));
    }
    let phi = PI * rho * alpha;
    let f = if x > 0.0 {
        Complex64::new(x, 0.0) + Complex64::from_polar(x.powf(1.0 - alpha), phi)
    } else {
        // Branch from above the cut: z^{1-alpha} -> |x|^{1-alpha} e^{i(1-alpha)pi}.
        Complex64::new(x, 0.0)
            + Complex64::from_polar((-x).powf(1.0 - alpha), phi + (1.0 - alpha) * PI)
    };
    let d = f.im / (PI * f.norm_sqr());
    if d < 0.0 {
        // The closed form is exactly zero off the support; roundoff only.
        if d > -1e-10 {
            return Ok(0.0);
        }
        return Err(TransformError::NegativeDensity { x, value: d });
    }
    Ok(d)
}

/// The closed inverse of `F` for a free stable law:
/// `H(w) = w - e^{i alpha rho pi} w^{1-alpha}`, so that `F = H^{-1}`.
pub(crate) struct FreeStableInverseMap {
    coef: Complex64,
    power: f64,
}

impl FreeStableInverseMap {
    pub(crate) fn new(alpha: f64, rho: f64) -> Self {
        FreeStableInverseMap { coef: -Complex64::from_polar(1.0, alpha * rho * PI), power: 1.0 - alpha }
    }
}

impl AnalyticMap for FreeStableInverseMap {
    fn eval(&self, w: Complex64) -> Complex64 {
        w + self.coef * powc(w, self.power)
    }
}

/// `F` of the free stable law `s_alpha^rho` by Newton continuation from the
/// asymptotic regime down the vertical ray to `z`.
pub fn free_stable_f(alpha: f64, rho: f64, z: Complex64) -> Result<Complex64, TransformError> {
    StableLaw::free(alpha, rho)?;
    if z.im <= 0.0 {
        return Err(TransformError::UpperHalfPlane(z));
    }
    let map = FreeStableInverseMap::new(alpha, rho);
    let (w, _) = descend_vertical(&map, z, 1e6, 1e-12)
        .map_err(|e| TransformError::Inversion(format!("free stable continuation: {e:?}")))?;
    Ok(w)
}

/// Handle for a free stable law. The oracle keeps a small anchor cache so
/// sweeps only pay for short continuations; free stable laws are freely
/// infinitely divisible, so `F` is single-valued and warm starts are sound.
pub fn free_stable_handle(law: &StableLaw) -> Result<MeasureHandle, TransformError> {
    if law.family != Family::Free {
        return Err(TransformError::Parameter("free_stable_handle needs a free law".into()));
    }
    law.validate()?;
    let (alpha, rho) = (law.alpha, law.rho);
    let map = FreeStableInverseMap::new(alpha, rho);
    let anchors: Mutex<Vec<(Complex64, Complex64)>> = Mutex::new(Vec::new());
    let oracle = move |z: Complex64| -> Complex64 {
        if z.im < 0.0 {
            // Opaque oracles live on the closed upper half-plane; reflect.
            return eval_cached(&map, &anchors, z.conj()).conj();
        }
        eval_cached(&map, &anchors, z)
    };
    let phi_coef = -Complex64::from_polar(1.0, alpha * rho * PI);
    let phi_pow = 1.0 - alpha;
    let support = if rho == 1.0 {
        Support::Positive
    } else if rho == 0.0 {
        Support::Negative
    } else {
        Support::Real
    };
    let mut h = MeasureHandle::from_f_oracle(oracle, support)
        .with_phi(move |z| phi_coef * powc(z, phi_pow))
        .certify_fid()
        .with_label(format!("s[{alpha},{rho}]"));
    if alpha < 1.0 {
        h = h.with_tail_exponent(-alpha - 1.0);
    }
    if law.shift != 0.0 || law.scale != 1.0 {
        h = crate::transform::dilate(&h, law.scale)?;
        if law.shift != 0.0 {
            h = crate::transform::boolean_shift(&h, law.shift);
        }
    }
    Ok(h)
}

fn eval_cached(
    map: &FreeStableInverseMap,
    anchors: &Mutex<Vec<(Complex64, Complex64)>>,
    z: Complex64,
) -> Complex64 {
    let nearest = {
        let cache = anchors.lock().unwrap();
        cache
            .iter()
            .min_by(|a, b| (a.0 - z).norm().partial_cmp(&(b.0 - z).norm()).unwrap())
            .copied()
    };
    if let Some((zt, wt)) = nearest {
        if (z - zt).norm() <= 0.25 * (1.0 + zt.im.max(0.0)) {
            let mut inv = PathInverter::seeded(map, zt, wt);
            if let Ok(w) = inv.continue_to(z) {
                // Nevanlinna gate for a genuine F-value.
                if w.im >= z.im - 1e-9 {
                    push_anchor(anchors, z, w);
                    return w;
                }
            }
        }
    }
    match descend_vertical(map, z, 1e6, 1e-12) {
        Ok((w, _)) => {
            push_anchor(anchors, z, w);
            w
        }
        Err(e) => panic!("free stable F continuation failed at z = {z}: {e:?}"),
    }
}

fn push_anchor(anchors: &Mutex<Vec<(Complex64, Complex64)>>, z: Complex64, w: Complex64) {
    let mut cache = anchors.lock().unwrap();
    if cache.len() >= 64 {
        cache.remove(0);
    }
    cache.push((z, w));
}

pub(crate) fn free_stable_continuation_error_detail(e: &ContinuationError) -> String {
    format!("{e:?}")
}

/// Laplace transform of the positive classical stable law: `e^{-z^alpha}`.
pub fn classical_stable_laplace(alpha: f64, z: Complex64) -> Result<Complex64, TransformError> {
    StableLaw::classical(alpha)?;
    if z.re <= 0.0 {
        return Err(TransformError::Parameter(format!("need Re z > 0, got {z}")));
    }
    Ok((-powc(z, alpha)).exp())
}

/// Density of the Levy law `n_{1/2}`: `x^{-3/2} e^{-1/(4x)} / (2 sqrt(pi))`.
pub fn levy_density(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x.powf(-1.5) * (-0.25 / x).exp() / (2.0 * PI.sqrt())
}

/// Fixed-Talbot inversion of a Laplace transform at `t > 0` with `m` nodes.
pub fn talbot_inverse_laplace(
    lhat: impl Fn(Complex64) -> Complex64,
    t: f64,
    m: usize,
) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * (r * t).exp() * lhat(Complex64::new(r, 0.0)).re;
    for k in 1..m {
        let theta = k as f64 * PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = r * theta * Complex64::new(cot, 1.0);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (s * t).exp() * lhat(s) * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    acc * r / m as f64
}

/// Density of `n_alpha` on `x > 0`. The Levy closed form is used at
/// `alpha = 1/2`; other indices go through the 64-node Talbot contour and
/// are best-effort.
pub fn classical_stable_density(alpha: f64, x: f64) -> Result<f64, TransformError> {
    StableLaw::classical(alpha)?;
    if !(x > 0.0) {
        return Err(TransformError::Parameter(format!("need x > 0, got {x}")));
    }
    if alpha == 0.5 {
        return Ok(levy_density(x));
    }
    let v = talbot_inverse_laplace(|s| (-powc(s, alpha)).exp(), x, 64);
    Ok(v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, positive_density_mass};
    use crate::util::approx_eq;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    #[test]
    fn k_of_cauchy_parameters() {
        // alpha = 1, rho = 1/2: the log coefficient vanishes and K = -i.
        let k = boolean_stable_k(1.0, 0.5, Complex64::new(5.0, 2.0)).unwrap();
        assert!(approx_eq(k, -I, 1e-15));
    }

    #[test]
    fn k_of_half_stable_at_i() {
        let k = boolean_stable_k(0.5, 1.0, I).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(approx_eq(k, Complex64::new(s, -s), 1e-15), "k = {k}");
    }

    #[test]
    fn k_at_alpha_two() {
        // e^{i(alpha-2)rho pi} = 1 at alpha = 2, so K(i) = 1/i = -i.
        for rho in [0.0, 0.3, 1.0] {
            let k = boolean_stable_k(2.0, rho, I).unwrap();
            assert!(approx_eq(k, -I, 1e-15));
        }
    }

    #[test]
    fn handle_f_values() {
        let law = StableLaw::boolean(0.5, 1.0).unwrap();
        let h = boolean_stable_handle(&law).unwrap();
        let f = h.f_raw(I);
        assert!(approx_eq(f, Complex64::new(-0.7071067811865476, 1.7071067811865476), 1e-12));
        let g = h.g_raw(I);
        assert!(approx_eq(g, Complex64::new(-0.20710678118654752, -0.5), 1e-12));
        // alpha = 1, rho = 1/2 is the Cauchy law.
        let cauchy = boolean_stable_handle(&StableLaw::boolean(1.0, 0.5).unwrap()).unwrap();
        let z = Complex64::new(0.4, 0.7);
        assert!(approx_eq(cauchy.f_raw(z), z + I, 1e-14));
    }

    #[test]
    fn affine_wrapper_composes() {
        let law = StableLaw::boolean(0.5, 1.0).unwrap().with_affine(1.0, 2.0).unwrap();
        let h = boolean_stable_handle(&law).unwrap();
        let base = boolean_stable_handle(&StableLaw::boolean(0.5, 1.0).unwrap()).unwrap();
        let z = Complex64::new(0.3, 1.7);
        assert!(approx_eq(h.f_raw(z), 2.0 * base.f_raw(z / 2.0) - 1.0, 1e-13));
    }

    #[test]
    fn density_matches_display_formula() {
        // rho = 1 must coincide with the positive-law display.
        for alpha in [0.2, 0.5, 0.8] {
            for x in [0.03, 0.7, 1.0, 13.0] {
                let d = boolean_stable_density(alpha, 1.0, x).unwrap();
                let display = (alpha * PI).sin() * x.powf(alpha - 1.0)
                    / (x.powf(2.0 * alpha) + 2.0 * (alpha * PI).cos() * x.powf(alpha) + 1.0)
                    / PI;
                assert!((d - display).abs() <= 1e-14 * display.max(1.0), "alpha={alpha} x={x}");
            }
        }
        let d = boolean_stable_density(0.5, 1.0, 1.0).unwrap();
        assert!((d - 1.0 / (2.0 * PI)).abs() < 1e-15);
        // Supported on [0, oo) iff rho = 1.
        assert_eq!(boolean_stable_density(0.5, 1.0, -3.0).unwrap(), 0.0);
        // Symmetric iff rho = 1/2.
        for x in [0.4, 1.0, 2.7] {
            let p = boolean_stable_density(0.5, 0.5, x).unwrap();
            let m = boolean_stable_density(0.5, 0.5, -x).unwrap();
            assert!((p - m).abs() < 1e-15);
        }
        assert!(boolean_stable_density(0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let f = move |x: f64| boolean_stable_density(alpha, 1.0, x).unwrap();
            let mass = positive_density_mass(&f, alpha - 1.0, -alpha - 1.0, 1e-10);
            assert!((mass - 1.0).abs() < 1e-6, "alpha = {alpha}: mass = {mass}");
        }
    }

    #[test]
    fn free_stable_constant_phi_is_cauchy() {
        // alpha = 1, rho = 1/2: phi = -i, so F(z) = z + i exactly.
        let z = Complex64::new(1.3, 0.2);
        let f = free_stable_f(1.0, 0.5, z).unwrap();
        assert!(approx_eq(f, z + I, 1e-10));
    }

    #[test]
    fn free_stable_round_trip() {
        let (alpha, rho) = (0.7, 0.3);
        let map = FreeStableInverseMap::new(alpha, rho);
        let f = free_stable_f(alpha, rho, I).unwrap();
        let back = map.eval(f);
        assert!((back - I).norm() <= 1e-10, "residual {}", (back - I).norm());
        assert!(f.im >= I.im - 1e-12);
    }

    #[test]
    fn free_stable_asymptotic_normalization() {
        let z = Complex64::new(0.0, 1e6);
        let f = free_stable_f(0.5, 1.0, z).unwrap();
        assert!((f / z - 1.0).norm() < 1e-2);
    }

    #[test]
    fn free_handle_caches_consistently() {
        let h = free_stable_handle(&StableLaw::free(0.6, 1.0).unwrap()).unwrap();
        let map = FreeStableInverseMap::new(0.6, 1.0);
        for z in [I, 2.0 * I, I + 0.1, I + 0.2, I + 0.3] {
            let f = h.f_raw(z);
            assert!((map.eval(f) - z).norm() < 1e-9, "round trip at {z}");
        }
    }

    #[test]
    fn laplace_transform_values() {
        let l = classical_stable_laplace(0.5, Complex64::new(1e-12, 0.0)).unwrap();
        assert!((l - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        assert!(classical_stable_laplace(0.5, Complex64::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn levy_density_mass_and_laplace_identity() {
        let mass = positive_density_mass(&levy_density, 0.0, -1.5, 1e-10);
        assert!((mass - 1.0).abs() < 1e-6, "mass = {mass}");
        // Numerical Laplace transform at z = 1 against e^{-1}.
        let (value, _) = integrate(|u: f64| { let x = u.exp(); levy_density(x) * (-x).exp() * x }, -12.0, 12.0, 1e-12);
        assert!((value - (-1.0f64).exp()).abs() < 1e-6, "L(1) = {value}");
    }

    #[test]
    fn talbot_matches_levy_form() {
        for x in [0.2, 0.5, 1.0, 3.0, 10.0] {
            let t = talbot_inverse_laplace(|s| (-powc(s, 0.5)).exp(), x, 64);
            let exact = levy_density(x);
            assert!((t - exact).abs() < 1e-4 * exact.max(1.0), "x = {x}: talbot {t} vs {exact}");
        }
    }

    #[test]
    fn stable_law_json_shape() {
        let law = StableLaw::boolean(0.5, 1.0).unwrap();
        let json = serde_json::to_string(&law).unwrap();
        assert_eq!(
            json,
            r#"{"family":"boolean","alpha":0.5,"rho":1.0,"shift":0.0,"scale":1.0}"#
        );
        let back: StableLaw = serde_json::from_str(r#"{"family":"free","alpha":0.5,"rho":1.0}"#).unwrap();
        assert_eq!(back.scale, 1.0);
        assert_eq!(back.family, Family::Free);
    }

    #[test]
    fn parameter_validation() {
        assert!(StableLaw::boolean(0.0, 0.5).is_err());
        assert!(StableLaw::boolean(2.1, 0.5).is_err());
        assert!(StableLaw::boolean(1.0, 1.2).is_err());
        assert!(StableLaw::free(1.2, 0.5).is_err());
        assert!(StableLaw::classical(1.0).is_err());
        assert!(boolean_stable_density(1.2, 0.5, 1.0).is_err());
    }

    #[test]
    fn handles_satisfy_nevanlinna() {
        for (a, r) in [(0.3, 0.5), (0.5, 1.0), (1.0, 0.8), (1.5, 0.2), (2.0, 0.6)] {
            let h = boolean_stable_handle(&StableLaw::boolean(a, r).unwrap()).unwrap();
            h.validate().unwrap_or_else(|e| panic!("b[{a},{r}]: {e}"));
        }
    }
}
