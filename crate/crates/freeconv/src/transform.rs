//! Measure handles and the analytic transform layer.
//!
//! A probability measure is represented by an oracle for its reciprocal
//! Cauchy transform `F` on the upper half-plane, together with an affine
//! wrapper `delta_a ⊎ D_b(base)`, a support hint and capability metadata.
//!
//! Two oracle kinds exist. Power-sum oracles store the energy function
//! `K(z) = z - F(z)` as a finite sum of complex-coefficient powers plus an
//! optional logarithm; these evaluate on any sheet of the continuation, which
//! the divisibility checks rely on. Opaque oracles wrap a closure that is
//! only guaranteed on the (closed) upper half-plane.

use crate::newton::{bisect_increasing, AnalyticMap, PathInverter};
use crate::quadrature::integrate_c;
use crate::util::{lnc, powc, powc_tracked, standard_grid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error("argument must lie in the upper half-plane, got {0}")]
    UpperHalfPlane(Complex64),
    #[error("operation requires a measure supported on [0, oo): {0}")]
    PositiveSupportRequired(String),
    #[error("psi/S domain too small: {0}")]
    SDomain(String),
    #[error("inversion failed: {0}")]
    Inversion(String),
    #[error("atomic measure has no absolutely continuous density")]
    AtomOnly,
    #[error("Stieltjes residual {worst:.3e} above tolerance at {failed}/{total} nodes")]
    StieltjesResidual { failed: usize, total: usize, worst: f64 },
    #[error("extrapolated density {value:.3e} at x = {x} is negative beyond roundoff")]
    NegativeDensity { x: f64, value: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("mass accounting failed: {0}")]
    Mass(String),
}

/// Support hint carried by a handle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// Point mass at `a`.
    Point(f64),
    /// Contained in `[0, oo)`.
    Positive,
    /// Contained in `(-oo, 0]`.
    Negative,
    /// Whole line, or unknown.
    Real,
}

impl Support {
    pub fn is_positive(&self) -> bool {
        matches!(self, Support::Positive) || matches!(self, Support::Point(a) if *a >= 0.0)
    }
}

/// One term `coef * z^power` of an energy function.
#[derive(Debug, Clone, Copy)]
pub struct KTerm {
    pub coef: Complex64,
    pub power: f64,
}

/// Energy function `K(z) = sum coef_j z^{p_j} + log_coef * Log z`.
///
/// All stable-law and mixture transforms in this crate have this shape, and
/// the Boolean convolution algebra is closed on it.
#[derive(Debug, Clone, Default)]
pub struct PowerSumK {
    pub terms: Vec<KTerm>,
    pub log_coef: f64,
}

impl PowerSumK {
    pub fn constant(c: Complex64) -> Self {
        PowerSumK { terms: vec![KTerm { coef: c, power: 0.0 }], log_coef: 0.0 }
    }

    pub fn single(coef: Complex64, power: f64) -> Self {
        PowerSumK { terms: vec![KTerm { coef, power }], log_coef: 0.0 }
    }

    fn push_merged(&mut self, t: KTerm) {
        if let Some(existing) = self.terms.iter_mut().find(|e| e.power == t.power) {
            existing.coef += t.coef;
        } else {
            self.terms.push(t);
        }
    }

    /// `K_1 + K_2` (Boolean convolution of the energy functions).
    pub fn add(&self, other: &PowerSumK) -> PowerSumK {
        let mut out = self.clone();
        for t in &other.terms {
            out.push_merged(*t);
        }
        out.log_coef += other.log_coef;
        out.normalize();
        out
    }

    /// `t * K` (Boolean power).
    pub fn scale(&self, t: f64) -> PowerSumK {
        let mut out = self.clone();
        for term in &mut out.terms {
            term.coef *= t;
        }
        out.log_coef *= t;
        out.normalize();
        out
    }

    /// Energy function of `delta_a ⊎ D_b(mu)`: `a + b K(z/b)`.
    pub fn affine(&self, a: f64, b: f64) -> PowerSumK {
        let mut out = PowerSumK::default();
        for t in &self.terms {
            out.push_merged(KTerm { coef: t.coef * b.powf(1.0 - t.power), power: t.power });
        }
        out.log_coef = self.log_coef * b;
        let mut constant = Complex64::new(a, 0.0);
        if self.log_coef != 0.0 {
            constant -= Complex64::new(self.log_coef * b * b.ln(), 0.0);
        }
        out.push_merged(KTerm { coef: constant, power: 0.0 });
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        self.terms.retain(|t| t.coef.norm() != 0.0);
        self.terms.sort_by(|a, b| a.power.partial_cmp(&b.power).unwrap());
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut k = Complex64::ZERO;
        for t in &self.terms {
            k += t.coef * powc(z, t.power);
        }
        if self.log_coef != 0.0 {
            k += self.log_coef * lnc(z);
        }
        k
    }

    /// Evaluation with `arg z = principal + 2 pi winding` for continuation
    /// off the principal sheet.
    pub fn eval_wound(&self, z: Complex64, winding: i32) -> Complex64 {
        if winding == 0 {
            return self.eval(z);
        }
        let (r, mut th) = z.to_polar();
        if th == -PI {
            th = PI;
        }
        let arg = th + 2.0 * PI * winding as f64;
        let mut k = Complex64::ZERO;
        for t in &self.terms {
            k += t.coef * powc_tracked(r, arg, t.power);
        }
        if self.log_coef != 0.0 {
            k += self.log_coef * Complex64::new(r.ln(), arg);
        }
        k
    }
}

enum OracleKind {
    PowerSum(PowerSumK),
    Opaque(Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleKind::PowerSum(k) => write!(f, "PowerSum({} terms)", k.terms.len()),
            OracleKind::Opaque(_) => write!(f, "Opaque"),
        }
    }
}

/// Capability flags of a handle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Capabilities {
    pub closed_k: bool,
    pub closed_phi: bool,
    pub closed_density: bool,
}

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type ComplexFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Analytic oracle for a probability measure.
#[derive(Clone)]
pub struct MeasureHandle {
    oracle: Arc<OracleKind>,
    /// `(a, b)`: the measure is `delta_a ⊎ D_b(base)`.
    shift: f64,
    scale: f64,
    support: Support,
    fid_certified: bool,
    tail_exponent: Option<f64>,
    density: Option<DensityFn>,
    phi_closed: Option<ComplexFn>,
    psi_override: Option<ComplexFn>,
    label: String,
}

impl fmt::Debug for MeasureHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MeasureHandle({}, affine=({}, {}))", self.label, self.shift, self.scale)
    }
}

impl MeasureHandle {
    pub fn from_power_k(k: PowerSumK, support: Support) -> Self {
        MeasureHandle {
            oracle: Arc::new(OracleKind::PowerSum(k)),
            shift: 0.0,
            scale: 1.0,
            support,
            fid_certified: false,
            tail_exponent: None,
            density: None,
            phi_closed: None,
            psi_override: None,
            label: String::new(),
        }
    }

    pub fn from_f_oracle(
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        support: Support,
    ) -> Self {
        MeasureHandle {
            oracle: Arc::new(OracleKind::Opaque(Box::new(f))),
            shift: 0.0,
            scale: 1.0,
            support,
            fid_certified: false,
            tail_exponent: None,
            density: None,
            phi_closed: None,
            psi_override: None,
            label: String::new(),
        }
    }

    /// Point mass at `a`.
    pub fn dirac(a: f64) -> Self {
        let mut h = MeasureHandle::from_power_k(
            PowerSumK::constant(Complex64::new(a, 0.0)),
            Support::Point(a),
        );
        h.fid_certified = true;
        h.label = format!("dirac({a})");
        h
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_density(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.density = Some(Arc::new(d));
        self
    }

    pub fn with_phi(mut self, phi: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        self.phi_closed = Some(Arc::new(phi));
        self
    }

    pub fn with_psi(mut self, psi: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        self.psi_override = Some(Arc::new(psi));
        self
    }

    pub fn with_tail_exponent(mut self, e: f64) -> Self {
        self.tail_exponent = Some(e);
        self
    }

    pub fn certify_fid(mut self) -> Self {
        self.fid_certified = true;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub(crate) fn set_support(&mut self, s: Support) {
        self.support = s;
    }

    pub fn affine(&self) -> (f64, f64) {
        (self.shift, self.scale)
    }

    pub fn tail_exponent(&self) -> Option<f64> {
        self.tail_exponent
    }

    pub fn is_fid_certified(&self) -> bool {
        self.fid_certified
    }

    pub fn is_atom(&self) -> Option<f64> {
        match self.support {
            Support::Point(a) => Some(a),
            _ => None,
        }
    }

    pub fn capabilities(&self) -> Capabilities {
        Capabilities {
            closed_k: matches!(*self.oracle, OracleKind::PowerSum(_)),
            closed_phi: self.phi_closed.is_some(),
            closed_density: self.density.is_some() && self.shift == 0.0,
        }
    }

    /// The energy function with the affine wrapper folded in, when the
    /// oracle is a power sum.
    pub fn power_k(&self) -> Option<PowerSumK> {
        match &*self.oracle {
            OracleKind::PowerSum(k) => Some(k.affine(self.shift, self.scale)),
            OracleKind::Opaque(_) => None,
        }
    }

    /// `F(z)` without domain checks; valid on the closed upper half-plane
    /// and, for power-sum oracles, on any continuation sheet reachable by
    /// the winding bookkeeping.
    pub fn f_raw(&self, z: Complex64) -> Complex64 {
        self.f_wound(z, 0)
    }

    pub fn f_wound(&self, z: Complex64, winding: i32) -> Complex64 {
        let base = z / self.scale;
        let fb = match &*self.oracle {
            OracleKind::PowerSum(k) => base - k.eval_wound(base, winding),
            OracleKind::Opaque(f) => f(base),
        };
        self.scale * fb - self.shift
    }

    /// `K(z) = z - F(z)`.
    pub fn k_raw(&self, z: Complex64) -> Complex64 {
        z - self.f_raw(z)
    }

    /// `G(z) = 1/F(z)`.
    pub fn g_raw(&self, z: Complex64) -> Complex64 {
        self.f_raw(z).finv()
    }

    /// `G` on the lower half-plane through the reflection
    /// `G(conj z) = conj(G(z))`, an identity of the defining integral.
    pub fn g_lower(&self, z: Complex64) -> Complex64 {
        if z.im <= 0.0 {
            self.g_raw(z.conj()).conj()
        } else {
            self.g_raw(z)
        }
    }

    pub fn closed_density_at(&self, x: f64) -> Option<f64> {
        let d = self.density.as_ref()?;
        if self.shift != 0.0 {
            return None;
        }
        Some(d(x / self.scale) / self.scale)
    }

    pub fn closed_phi_at(&self, z: Complex64) -> Option<Complex64> {
        let p = self.phi_closed.as_ref()?;
        if self.shift != 0.0 {
            return None;
        }
        Some(self.scale * p(z / self.scale))
    }

    pub(crate) fn psi_eval(&self, z: Complex64) -> Option<Complex64> {
        let p = self.psi_override.as_ref()?;
        Some(p(z))
    }

    /// Nevanlinna and normalization diagnostics over the standard grid.
    ///
    /// The decay of `|F(iy)/(iy) - 1|` is checked to be consistent with
    /// `F(z) = z(1 + o(1))`; heavy-tailed laws approach the limit only like
    /// `y^{-alpha}`, so no fixed threshold at a fixed height is imposed.
    pub fn validate(&self) -> Result<(), TransformError> {
        for z in standard_grid() {
            let f = self.f_raw(z);
            if f.im < z.im - 1e-10 {
                return Err(TransformError::Precondition(format!(
                    "Im F(z) < Im z at z = {z}: F = {f}"
                )));
            }
            if self.g_raw(z).im > 1e-10 {
                return Err(TransformError::Precondition(format!(
                    "Im G(z) > 0 at z = {z}"
                )));
            }
        }
        let ratio = |y: f64| {
            let iy = Complex64::new(0.0, y);
            (self.f_raw(iy) / iy - 1.0).norm()
        };
        let r6 = ratio(1e6);
        let r9 = ratio(1e9);
        if r9 > 0.75 * r6 + 1e-10 {
            return Err(TransformError::Precondition(format!(
                "F(iy)/iy does not approach 1: |.|-1 = {r6:.3e} at y=1e6, {r9:.3e} at y=1e9"
            )));
        }
        Ok(())
    }
}

impl AnalyticMap for MeasureHandle {
    fn eval(&self, w: Complex64) -> Complex64 {
        self.f_raw(w)
    }

    fn eval_wound(&self, w: Complex64, winding: i32) -> Complex64 {
        self.f_wound(w, winding)
    }

    fn tracks_winding(&self) -> bool {
        matches!(*self.oracle, OracleKind::PowerSum(_))
    }
}

fn require_upper(z: Complex64) -> Result<(), TransformError> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(TransformError::UpperHalfPlane(z))
    }
}

/// `G_mu(z)` for `z` in the upper half-plane.
pub fn cauchy_transform(m: &MeasureHandle, z: Complex64) -> Result<Complex64, TransformError> {
    require_upper(z)?;
    Ok(m.g_raw(z))
}

/// `F_mu(z) = 1/G_mu(z)`.
pub fn f_transform(m: &MeasureHandle, z: Complex64) -> Result<Complex64, TransformError> {
    require_upper(z)?;
    Ok(m.f_raw(z))
}

/// Energy function `K_mu(z) = z - F_mu(z)`.
pub fn k_transform(m: &MeasureHandle, z: Complex64) -> Result<Complex64, TransformError> {
    require_upper(z)?;
    Ok(m.k_raw(z))
}

/// Dilation `D_b`: `F(z) = b F_base(z/b)`.
pub fn dilate(m: &MeasureHandle, b: f64) -> Result<MeasureHandle, TransformError> {
    if !(b > 0.0) {
        return Err(TransformError::Parameter(format!("dilation scale must be positive, got {b}")));
    }
    let mut out = m.clone();
    out.shift = m.shift * b;
    out.scale = m.scale * b;
    out.support = match m.support {
        Support::Point(a) => Support::Point(a * b),
        other => other,
    };
    // psi of a dilation: psi_{D_b mu}(z) = psi_mu(b z).
    if let Some(psi) = m.psi_override.clone() {
        out.psi_override = Some(Arc::new(move |z| psi(b * z)));
    }
    out.label = format!("dilate({}, {b})", m.label);
    Ok(out)
}

/// Boolean translation `delta_a ⊎ mu`: `K -> K + a`, i.e. `F -> F - a`.
pub fn boolean_shift(m: &MeasureHandle, a: f64) -> MeasureHandle {
    let mut out = m.clone();
    out.shift = m.shift + a;
    out.support = match m.support {
        Support::Point(p) => Support::Point(p + a),
        // delta_a ⊎ mu is not a translation of mu; no support claim survives.
        _ => Support::Real,
    };
    out.psi_override = None;
    out.density = None;
    out.label = format!("bshift({}, {a})", m.label);
    out
}

/// Gridded density table with an optional power-law tail exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GriddedDensity {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub tail_exponent: Option<f64>,
}

impl GriddedDensity {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, tail_exponent: Option<f64>) -> Result<Self, TransformError> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(TransformError::Parameter("grid needs >= 2 matching nodes/values".into()));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TransformError::Parameter("grid nodes must be strictly increasing".into()));
        }
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(TransformError::Parameter("density values must be finite and >= 0".into()));
        }
        Ok(GriddedDensity { nodes, values, tail_exponent })
    }

    pub fn from_fn(f: impl Fn(f64) -> f64, nodes: Vec<f64>, tail_exponent: Option<f64>) -> Self {
        let values = nodes.iter().map(|&x| f(x).max(0.0)).collect();
        GriddedDensity { nodes, values, tail_exponent }
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interp(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x < self.nodes[0] || x > self.nodes[n - 1] {
            return 0.0;
        }
        let idx = match self.nodes.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.values[i],
            Err(i) => i,
        };
        let (x0, x1) = (self.nodes[idx - 1], self.nodes[idx]);
        let t = (x - x0) / (x1 - x0);
        self.values[idx - 1] * (1.0 - t) + self.values[idx] * t
    }

    pub fn trapezoid_mass(&self) -> f64 {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (v[0] + v[1]) * (x[1] - x[0]))
            .sum()
    }

    /// Trapezoid mass plus analytic power-law closures beyond the grid.
    ///
    /// The right closure uses `tail_exponent` when present, otherwise a
    /// log-log slope fitted from the last two nodes; the left end is closed
    /// the same way (slope fit) when the grid starts at a positive abscissa,
    /// and with the tail exponent when it extends to negative values.
    pub fn mass_estimate(&self) -> f64 {
        let n = self.nodes.len();
        let mut mass = self.trapezoid_mass();
        let (x_last, v_last) = (self.nodes[n - 1], self.values[n - 1]);
        if v_last > 0.0 && x_last > 0.0 {
            let e = self.tail_exponent.or_else(|| self.fit_slope(n - 2, n - 1));
            if let Some(e) = e {
                if e < -1.0 {
                    mass += v_last * x_last / (-e - 1.0);
                }
            }
        }
        let (x0, v0) = (self.nodes[0], self.values[0]);
        if v0 > 0.0 {
            if x0 > 0.0 {
                if let Some(p) = self.fit_slope(0, 1) {
                    if p > -1.0 {
                        mass += v0 * x0 / (p + 1.0);
                    }
                }
            } else if x0 < 0.0 {
                if let Some(e) = self.tail_exponent {
                    if e < -1.0 {
                        mass += v0 * (-x0) / (-e - 1.0);
                    }
                }
            }
        }
        mass
    }

    fn fit_slope(&self, i: usize, j: usize) -> Option<f64> {
        let (xi, xj) = (self.nodes[i], self.nodes[j]);
        let (vi, vj) = (self.values[i], self.values[j]);
        if xi <= 0.0 || xj <= 0.0 || vi <= 0.0 || vj <= 0.0 {
            return None;
        }
        Some((vj / vi).ln() / (xj / xi).ln())
    }

    /// Adaptive quadrature of `rho(x)/(z-x)` over the grid with power-law
    /// tail closures. Returns the value and the achieved error estimate.
    pub fn cauchy_transform(&self, z: Complex64) -> Result<(Complex64, f64), TransformError> {
        require_upper(z)?;
        let a = self.nodes[0];
        let b = *self.nodes.last().unwrap();
        let (mut val, mut err) = integrate_c(|x| Complex64::new(self.interp(x), 0.0) / (z - x), a, b, 1e-9);
        // Right tail: rho ~ C x^e, integrated via x = b/t.
        if let Some(e) = self.tail_exponent {
            let v_last = *self.values.last().unwrap();
            if v_last > 0.0 && b > 0.0 && e < -1.0 {
                let c = v_last * b.powf(-e);
                let (tail, terr) = integrate_c(
                    |t| {
                        if t <= 0.0 {
                            return Complex64::ZERO;
                        }
                        let x = b / t;
                        Complex64::new(c * x.powf(e), 0.0) / (z - x) * (x / t)
                    },
                    0.0,
                    1.0,
                    1e-10,
                );
                val += tail;
                err += terr;
            }
            let v0 = self.values[0];
            if v0 > 0.0 && a < 0.0 && e < -1.0 {
                let c = v0 * (-a).powf(-e);
                let (tail, terr) = integrate_c(
                    |t| {
                        if t <= 0.0 {
                            return Complex64::ZERO;
                        }
                        let x = a / t;
                        Complex64::new(c * (-x).powf(e), 0.0) / (z - x) * (-x / t)
                    },
                    0.0,
                    1.0,
                    1e-10,
                );
                val += tail;
                err += terr;
            }
        }
        Ok((val, err))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,density\n");
        for (x, v) in self.nodes.iter().zip(&self.values) {
            out.push_str(&format!("{x},{v}\n"));
        }
        out
    }
}

/// Decreasing evaluation heights for Stieltjes inversion, with the residual
/// tolerance that decides per-node failure.
#[derive(Debug, Clone)]
pub struct EpsSchedule {
    pub levels: Vec<f64>,
    pub residual_tol: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            levels: vec![1e-3, 5e-4, 2.5e-4, 1.25e-4, 6.25e-5, 3.125e-5],
            residual_tol: 1e-6,
        }
    }
}

impl EpsSchedule {
    pub fn new(levels: Vec<f64>, residual_tol: f64) -> Result<Self, TransformError> {
        if levels.len() < 3 {
            return Err(TransformError::Parameter("eps schedule needs >= 3 levels".into()));
        }
        if levels.windows(2).any(|w| w[0] <= w[1]) || levels.iter().any(|e| *e <= 0.0) {
            return Err(TransformError::Parameter("eps schedule must be positive decreasing".into()));
        }
        Ok(EpsSchedule { levels, residual_tol })
    }
}

/// Neville extrapolation of `(eps_k, v_k)` to `eps = 0`; returns the value
/// and the difference of the last two diagonal entries as residual.
fn richardson_to_zero(eps: &[f64], v: &[f64]) -> (f64, f64) {
    let n = eps.len();
    let mut t = v.to_vec();
    let mut prev_diag = t[0];
    let mut diag = t[n - 1];
    for m in 1..n {
        for i in (m..n).rev() {
            t[i] = (eps[i] * t[i - 1] - eps[i - m] * t[i]) / (eps[i] - eps[i - m]);
        }
        prev_diag = diag;
        diag = t[n - 1];
    }
    (diag, (diag - prev_diag).abs())
}

/// Recover a density table from the boundary values of `G`:
/// `rho(x) = -(1/pi) lim Im G(x + i eps)`, extrapolated across the schedule.
pub fn stieltjes_invert(
    m: &MeasureHandle,
    x_grid: &[f64],
    eps: &EpsSchedule,
) -> Result<GriddedDensity, TransformError> {
    if m.is_atom().is_some() {
        return Err(TransformError::AtomOnly);
    }
    if x_grid.len() < 2 || x_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TransformError::Parameter("x grid must be strictly increasing, len >= 2".into()));
    }
    if eps.levels.len() < 3 {
        return Err(TransformError::Parameter("eps schedule needs >= 3 levels".into()));
    }
    let mut values = Vec::with_capacity(x_grid.len());
    let mut failed = 0usize;
    let mut worst = 0.0f64;
    for &x in x_grid {
        let samples: Vec<f64> = eps
            .levels
            .iter()
            .map(|&e| -m.g_raw(Complex64::new(x, e)).im / PI)
            .collect();
        let (mut v, residual) = richardson_to_zero(&eps.levels, &samples);
        if residual > eps.residual_tol || !v.is_finite() {
            failed += 1;
            worst = worst.max(if residual.is_finite() { residual } else { f64::MAX });
        }
        if v < 0.0 {
            if v > -1e-10 {
                v = 0.0;
            } else {
                return Err(TransformError::NegativeDensity { x, value: v });
            }
        }
        values.push(v);
    }
    if failed * 100 > x_grid.len() {
        return Err(TransformError::StieltjesResidual { failed, total: x_grid.len(), worst });
    }
    Ok(GriddedDensity {
        nodes: x_grid.to_vec(),
        values,
        tail_exponent: m.tail_exponent,
    })
}

/// `psi_mu(z) = (1/z) G_mu(1/z) - 1` for positive measures and
/// `z` off `[0, oo)`.
pub fn psi_transform(m: &MeasureHandle, z: Complex64) -> Result<Complex64, TransformError> {
    if !m.support().is_positive() {
        return Err(TransformError::PositiveSupportRequired(format!(
            "psi_transform of '{}'",
            m.label
        )));
    }
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(TransformError::SDomain(format!("1/z inside the support for z = {z}")));
    }
    Ok(psi_raw(m, z))
}

/// `psi` without the domain checks; evaluation for `Im z > 0` goes through
/// the reflection since the defining integral is real-symmetric.
pub(crate) fn psi_raw(m: &MeasureHandle, z: Complex64) -> Complex64 {
    if let Some(v) = m.psi_eval(z) {
        return v;
    }
    if z.im > 0.0 {
        return psi_raw_lower(m, z.conj()).conj();
    }
    psi_raw_lower(m, z)
}

fn psi_raw_lower(m: &MeasureHandle, z: Complex64) -> Complex64 {
    // Im z <= 0, so 1/z is in the closed upper half-plane where the F
    // oracle lives.
    let w = z.finv();
    m.g_raw(w) / z - 1.0
}

/// Inverse of `psi` on the real interval: strictly increasing from
/// `(-infty, 0)` onto `(-1, 0)` for positive measures without an atom at 0.
pub(crate) fn psi_inverse_real(m: &MeasureHandle, w: f64) -> Result<f64, TransformError> {
    if !(-1.0 < w && w < 0.0) {
        return Err(TransformError::SDomain(format!("psi^-1 needs w in (-1, 0), got {w}")));
    }
    let psi = |zeta: f64| psi_raw(m, Complex64::new(zeta, 0.0)).re;
    let mut lo = -1.0;
    let mut expansions = 0;
    while psi(lo) > w {
        lo *= 8.0;
        expansions += 1;
        if expansions > 60 {
            return Err(TransformError::SDomain(format!(
                "psi does not reach {w}; the measure may have an atom at 0"
            )));
        }
    }
    let mut hi = -1e-12;
    while psi(hi) < w {
        hi /= 8.0;
        if hi > -1e-300 {
            return Err(TransformError::SDomain(format!("psi does not reach {w} near 0")));
        }
    }
    Ok(bisect_increasing(psi, lo, hi, w, 1e-15))
}

/// S-transform `S(w) = (1+w)/w * psi^{-1}(w)` for positive measures.
///
/// Real `w` must lie in `(-1, 0)`; a small imaginary part is allowed and is
/// reached by Newton continuation off the real anchor.
pub fn s_transform(m: &MeasureHandle, w: Complex64) -> Result<Complex64, TransformError> {
    if !m.support().is_positive() {
        return Err(TransformError::PositiveSupportRequired(format!(
            "s_transform of '{}'",
            m.label
        )));
    }
    let zeta = if w.im == 0.0 {
        Complex64::new(psi_inverse_real(m, w.re)?, 0.0)
    } else {
        if !(-1.0 < w.re && w.re < 0.0) {
            return Err(TransformError::SDomain(format!("Re w must lie in (-1, 0), got {w}")));
        }
        let anchor = psi_inverse_real(m, w.re)?;
        let map = |zeta: Complex64| psi_raw(m, zeta);
        let mut inv = PathInverter::seeded(&map, Complex64::new(w.re, 0.0), Complex64::new(anchor, 0.0));
        inv.continue_to(w).map_err(|e| TransformError::Inversion(format!("psi^-1 continuation: {e:?}")))?
    };
    Ok((1.0 + w) / w * zeta)
}
