//! Proximal operators `argmin_u lambda * h(u) + (u - x)^2 / 2`.
//!
//! Closed forms cover the `l0`, `l1`, `l1/2` and `l2/3` penalties. The
//! exponential surrogate has no closed form for `n > 1`; [`prox_exp_numeric`]
//! reduces to `u >= 0`, locates the local minimizers of
//! `L(u) = (u - |x|)^2 / 2 + lambda * h(u)` on `[0, |x|]` and keeps the best
//! one. [`prox_oracle`] is a brute-force grid minimizer used as the reference
//! in tests.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::penalty::{PenaltyKind, PenaltySpec};

/// One scalar proximal problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxRequest {
    pub spec: PenaltySpec,
    pub x: f64,
    pub lambda: f64,
}

impl ProxRequest {
    pub fn new(spec: PenaltySpec, x: f64, lambda: f64) -> Self {
        Self { spec, x, lambda }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !self.x.is_finite() {
            return invalid(format!("prox anchor must be finite, got {}", self.x));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return invalid(format!("prox weight must be positive, got {}", self.lambda));
        }
        Ok(())
    }

    /// Objective `lambda * h(u) + (u - x)^2 / 2`.
    pub fn objective(&self, u: f64) -> f64 {
        prox_objective(&self.spec, self.x, self.lambda, u)
    }
}

pub fn prox_objective(spec: &PenaltySpec, x: f64, lambda: f64, u: f64) -> f64 {
    let d = u - x;
    lambda * spec.value(u) + 0.5 * d * d
}

/// Tolerances for the numerical exponential-surrogate prox.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericProxSettings {
    pub u_tol: f64,
    pub obj_tol: f64,
    pub max_inner_iters: usize,
}

impl Default for NumericProxSettings {
    fn default() -> Self {
        Self {
            u_tol: 1e-10,
            obj_tol: 1e-14,
            max_inner_iters: 100,
        }
    }
}

impl NumericProxSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.u_tol > 0.0 && self.obj_tol > 0.0 && self.max_inner_iters >= 1) {
            return invalid(format!("invalid numeric prox settings {self:?}"));
        }
        Ok(())
    }
}

/// Proximal operator of `req.spec` with weight `req.lambda` at `req.x`.
pub fn prox_scalar(req: &ProxRequest, settings: &NumericProxSettings) -> Result<f64> {
    req.validate()?;
    settings.validate()?;
    prox_unchecked(&req.spec, req.x, req.lambda, settings)
}

fn prox_unchecked(
    spec: &PenaltySpec,
    x: f64,
    lambda: f64,
    settings: &NumericProxSettings,
) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    ScalarProx::new(spec, lambda, settings)?.apply(x)
}

/// A scalar prox with fixed penalty and weight, reusable across many anchors.
pub(crate) struct ScalarProx {
    kind: PenaltyKind,
    lambda: f64,
    exp: Option<ExpProx>,
}

impl ScalarProx {
    /// Caller validates `spec`, `lambda` and `settings`.
    pub(crate) fn new(
        spec: &PenaltySpec,
        lambda: f64,
        settings: &NumericProxSettings,
    ) -> Result<Self> {
        let exp = match spec.kind {
            PenaltyKind::ExpAdaptive => Some(ExpProx::new(
                lambda * spec.scale(),
                spec.delta,
                spec.n,
                settings,
            )?),
            _ => None,
        };
        Ok(Self {
            kind: spec.kind,
            lambda,
            exp,
        })
    }

    pub(crate) fn apply(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let a = x.abs();
        let lambda = self.lambda;
        let mag = match self.kind {
            PenaltyKind::L1 => (a - lambda).max(0.0),
            PenaltyKind::L0 => {
                if a * a > 2.0 * lambda {
                    a
                } else {
                    0.0
                }
            }
            PenaltyKind::LHalf => half_threshold(a, lambda),
            PenaltyKind::LTwoThirds => two_thirds_threshold(a, lambda),
            PenaltyKind::ExpAdaptive => self.exp.as_ref().expect("exp prox state").magnitude(a)?,
        };
        Ok(mag.copysign(x))
    }
}

/// `l1/2` thresholding for `a > 0`.
///
/// A nonzero minimizer `u = t^2` satisfies `t^3 - a t + lambda/2 = 0`; the
/// largest root of that cubic is compared against `u = 0`.
fn half_threshold(a: f64, lambda: f64) -> f64 {
    let p = -a;
    let q = 0.5 * lambda;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    // no positive stationary point
    if disc < 0.0 {
        return 0.0;
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = ((3.0 * q) / (p * m)).clamp(-1.0, 1.0);
    let t = m * (arg.acos() / 3.0).cos();
    let u = t * t;
    pick_nonzero(a, lambda, u, u.sqrt())
}

/// `l2/3` thresholding for `a > 0`.
///
/// With `u = t^3` the stationarity condition is `t^4 - a t + 2 lambda / 3 = 0`.
/// Ferrari's reduction gives the resolvent `y^3 - b y - a^2/8 = 0` with
/// `b = 2 lambda / 3`; the largest quartic root is then
/// `(sqrt(2y) + sqrt(2a / sqrt(2y) - 2y)) / 2`.
fn two_thirds_threshold(a: f64, lambda: f64) -> f64 {
    let b = 2.0 * lambda / 3.0;
    let y = largest_cubic_root(-b, -a * a / 8.0);
    if y.is_nan() || y <= 0.0 {
        return 0.0;
    }
    let s = (2.0 * y).sqrt();
    let inner = 2.0 * a / s - 2.0 * y;
    if inner < 0.0 {
        return 0.0;
    }
    let t = 0.5 * (s + inner.sqrt());
    let u = t * t * t;
    pick_nonzero(a, lambda, u, (u * u).cbrt())
}

/// Compare the nonzero stationary candidate with the origin. Ties go to 0.
fn pick_nonzero(a: f64, lambda: f64, u: f64, penalty: f64) -> f64 {
    if !(u > 0.0 && u <= a) {
        return 0.0;
    }
    let d = u - a;
    let f_u = 0.5 * d * d + lambda * penalty;
    let f_0 = 0.5 * a * a;
    if f_u < f_0 {
        u
    } else {
        0.0
    }
}

/// Largest real root of `y^3 + p y + q = 0`.
fn largest_cubic_root(p: f64, q: f64) -> f64 {
    let half_q = 0.5 * q;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (-half_q + s).cbrt() + (-half_q - s).cbrt()
    } else {
        let m = 2.0 * (-third_p).sqrt();
        let arg = ((3.0 * q) / (p * m)).clamp(-1.0, 1.0);
        m * (arg.acos() / 3.0).cos()
    }
}

/// Critical point of the derivative of the exponential surrogate,
/// `((n - 1) / (delta n))^(1/n)`. Zero for `n = 1`.
pub fn exp_inflection(delta: f64, n: f64) -> f64 {
    ((n - 1.0) / (delta * n)).powf(1.0 / n)
}

/// Prox of `lambda * (1 - exp(-delta |u|^n))` at `x`, computed numerically.
pub fn prox_exp_numeric(
    x: f64,
    lambda: f64,
    delta: f64,
    n: f64,
    settings: &NumericProxSettings,
) -> Result<f64> {
    let spec = PenaltySpec::exp(delta, n, false)?;
    ProxRequest::new(spec, x, lambda).validate()?;
    settings.validate()?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(exp_magnitude(x.abs(), lambda, delta, n, settings)?.copysign(x))
}

/// Reduced problem on `u >= 0` for the exponential surrogate.
fn exp_magnitude(
    a: f64,
    lambda: f64,
    delta: f64,
    n: f64,
    settings: &NumericProxSettings,
) -> Result<f64> {
    ExpProx::new(lambda, delta, n, settings)?.magnitude(a)
}

/// Numerical prox of `lambda * h_{delta,n}` for a fixed weight.
///
/// `L'(u) = psi(u) - a` with `psi(u) = u + phi(u)` and
/// `phi(u) = lambda delta n u^(n-1) exp(-delta u^n)`. Local minimizers of `L`
/// are upward crossings of `psi = a`. `phi'` is nonnegative on `[0, u2]`
/// (`u2` from [`exp_inflection`]) and unimodal on `(u2, inf)` with its minimum
/// at `delta u^n = s+`, so `psi` is increasing, then possibly decreasing, then
/// increasing. The turning points do not depend on `a` and are computed once.
/// The first start `u2 / 2` descends inside the rising branch and the second
/// start `a` descends inside the final rising branch; both are compared with
/// the boundary `u = 0`.
pub(crate) struct ExpProx {
    f: ExpStationarity,
    u2: f64,
    turn_max: Option<f64>,
    turn_min: Option<f64>,
    settings: NumericProxSettings,
}

impl ExpProx {
    pub(crate) fn new(
        lambda: f64,
        delta: f64,
        n: f64,
        settings: &NumericProxSettings,
    ) -> Result<Self> {
        let f = ExpStationarity { lambda, delta, n };
        let u2 = exp_inflection(delta, n);
        let (turn_max, turn_min) = f.psi_turning_points(u2, settings)?;
        Ok(Self {
            f,
            u2,
            turn_max,
            turn_min,
            settings: *settings,
        })
    }

    /// Prox magnitude for `|x| = a`.
    pub(crate) fn magnitude(&self, a: f64) -> Result<f64> {
        if a == 0.0 {
            return Ok(0.0);
        }
        let f = &self.f;
        let n = f.n;
        let mut candidates = [None, None];

        // rising branch [0, turn_max] holds the start u2/2 (n > 1 only)
        if n > 1.0 {
            let hi = self.turn_max.map_or(a, |t| t.min(a));
            if hi > 0.0 && f.grad(hi, a) >= 0.0 {
                candidates[0] = Some(f.descend(a, 0.0, hi, 0.5 * self.u2, &self.settings)?);
            }
        }
        // final rising branch [turn_min, a] holds the start a; for n > 1
        // without turning points it coincides with the rising branch
        let lo = match self.turn_min {
            Some(t) => Some(t),
            None if n == 1.0 => Some(0.0),
            None => None,
        };
        if let Some(lo) = lo.filter(|&lo| lo < a) {
            let g_lo = if lo == 0.0 {
                f.grad_at_zero(a)
            } else {
                f.grad(lo, a)
            };
            if g_lo < 0.0 {
                candidates[1] = Some(f.descend(a, lo, a, a, &self.settings)?);
            }
        }

        let mut best = 0.0;
        let mut best_val = f.objective(0.0, a);
        for u in candidates.into_iter().flatten() {
            let v = f.objective(u, a);
            if v < best_val - self.settings.obj_tol * best_val.abs().max(1.0) {
                best = u;
                best_val = v;
            }
        }
        if !best.is_finite() {
            return Err(Error::Numerical(format!(
                "exp prox produced {best} for a={a}, lambda={}, delta={}, n={n}",
                f.lambda, f.delta
            )));
        }
        Ok(best)
    }
}

struct ExpStationarity {
    lambda: f64,
    delta: f64,
    n: f64,
}

impl ExpStationarity {
    fn objective(&self, u: f64, a: f64) -> f64 {
        let d = u - a;
        let h = if u == 0.0 {
            0.0
        } else {
            -(-self.delta * u.powf(self.n)).exp_m1()
        };
        0.5 * d * d + self.lambda * h
    }

    /// `phi(u)` for `u > 0`.
    fn phi(&self, u: f64) -> f64 {
        let un = u.powf(self.n);
        self.lambda * self.delta * self.n * un / u * (-self.delta * un).exp()
    }

    /// `phi'(u)` for `u > 0`.
    fn dphi(&self, u: f64) -> f64 {
        let n = self.n;
        let s = self.delta * u.powf(n);
        self.lambda * self.delta * n * u.powf(n - 2.0) * (-s).exp() * (n - 1.0 - n * s)
    }

    fn grad(&self, u: f64, a: f64) -> f64 {
        u - a + self.phi(u)
    }

    fn grad_at_zero(&self, a: f64) -> f64 {
        if self.n == 1.0 {
            self.lambda * self.delta - a
        } else {
            -a
        }
    }

    fn curvature(&self, u: f64) -> f64 {
        1.0 + self.dphi(u)
    }

    /// Local max and local min of `psi` on `(u2, inf)` when `psi' = 1 + phi'`
    /// dips below zero there.
    fn psi_turning_points(
        &self,
        u2: f64,
        settings: &NumericProxSettings,
    ) -> Result<(Option<f64>, Option<f64>)> {
        let n = self.n;
        let s_plus = (3.0 * (n - 1.0) + ((n - 1.0) * (5.0 * n - 1.0)).sqrt()) / (2.0 * n);
        let u4 = (s_plus / self.delta).powf(1.0 / n);
        let at_u4 = if u4 == 0.0 {
            // n = 1: phi' is increasing with infimum -lambda delta^2 at 0
            1.0 - self.lambda * self.delta * self.delta
        } else {
            self.curvature(u4)
        };
        if at_u4 >= 0.0 {
            return Ok((None, None));
        }
        let turn_max = if n > 1.0 {
            Some(self.bisect_curvature(u2, u4, true, settings))
        } else {
            None
        };
        // psi' -> 1 as u -> inf; expand until positive.
        let mut hi = u4.max(1.0 / self.delta).max(1e-300) * 2.0;
        let mut guard = 0;
        while self.curvature(hi) <= 0.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 2000 {
                return Err(Error::Numerical(format!(
                    "failed to bracket psi turning point for lambda={}, delta={}, n={}",
                    self.lambda, self.delta, n
                )));
            }
        }
        let turn_min = Some(self.bisect_curvature(u4, hi, false, settings));
        Ok((turn_max, turn_min))
    }

    /// Root of `psi'` in `[lo, hi]`. `decreasing` selects the branch where
    /// `psi'` goes from positive to negative.
    fn bisect_curvature(
        &self,
        mut lo: f64,
        mut hi: f64,
        decreasing: bool,
        settings: &NumericProxSettings,
    ) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= settings.u_tol * hi.max(1e-300) {
                break;
            }
            let c = if mid == 0.0 {
                f64::INFINITY
            } else {
                self.curvature(mid)
            };
            if (c > 0.0) == decreasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Safeguarded Newton on `L'` inside `[lo, hi]` where `L'(lo) < 0 <= L'(hi)`
    /// and `psi` is monotone, starting from `start`.
    fn descend(
        &self,
        a: f64,
        mut lo: f64,
        mut hi: f64,
        start: f64,
        settings: &NumericProxSettings,
    ) -> Result<f64> {
        let mut u = start.clamp(lo, hi);
        if u <= lo || u >= hi {
            u = 0.5 * (lo + hi);
        }
        for _ in 0..settings.max_inner_iters.max(1) * 4 {
            let g = self.grad(u, a);
            if g == 0.0 {
                return Ok(u);
            }
            if g < 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let dg = self.curvature(u);
            let mut next = if dg > 0.0 && dg.is_finite() {
                u - g / dg
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - u).abs();
            u = next;
            if step <= settings.u_tol * u.abs().max(1.0) || hi - lo <= settings.u_tol * hi.max(1.0)
            {
                return Ok(u);
            }
        }
        if hi - lo <= 1e3 * settings.u_tol * hi.max(1.0) {
            return Ok(u);
        }
        Err(Error::Numerical(format!(
            "exp prox failed to converge in [{lo}, {hi}] for a={a}, lambda={}, delta={}, n={}",
            self.lambda, self.delta, self.n
        )))
    }
}

/// Brute-force global minimizer of the prox objective.
///
/// Grid search over `[-|x| - 1, |x| + 1]` with step `1e-4` (the origin is a
/// grid point), then golden-section refinement of the best cell down to a
/// width of `1e-9`. Ties go to the candidate closest to zero.
pub fn prox_oracle(req: &ProxRequest) -> Result<f64> {
    req.validate()?;
    const STEP: f64 = 1e-4;
    let r = req.x.abs() + 1.0;
    let k_max = (r / STEP).ceil() as i64;
    let f = |u: f64| req.objective(u);
    let tie = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let better = |u: f64, fu: f64, best: f64, fbest: f64| {
        if tie(fu, fbest) {
            u.abs() < best.abs()
        } else {
            fu < fbest
        }
    };

    let mut best_k = 0i64;
    let mut best_val = f(0.0);
    for k in -k_max..=k_max {
        let u = k as f64 * STEP;
        let v = f(u);
        if better(u, v, best_k as f64 * STEP, best_val) {
            best_k = k;
            best_val = v;
        }
    }
    let best_u = best_k as f64 * STEP;

    let (mut lo, mut hi) = (best_u - STEP, best_u + STEP);
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-9 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let refined = 0.5 * (lo + hi);
    let mut out = (best_u, best_val);
    for u in [refined, 0.0] {
        let v = f(u);
        if better(u, v, out.0, out.1) {
            out = (u, v);
        }
    }
    Ok(out.0)
}

/// Entrywise prox of a matrix.
pub fn prox_elementwise(
    spec: &PenaltySpec,
    x: &DMatrix<f64>,
    lambda: f64,
    settings: &NumericProxSettings,
) -> Result<DMatrix<f64>> {
    ProxRequest::new(*spec, 0.0, lambda).validate()?;
    settings.validate()?;
    let mut out = x.clone();
    let rows = x.nrows();
    let scalar = ScalarProx::new(spec, lambda, settings)?;
    for (idx, v) in out.iter_mut().enumerate() {
        if !v.is_finite() {
            return invalid(format!(
                "non-finite entry {v} at ({}, {})",
                idx % rows,
                idx / rows
            ));
        }
        *v = scalar.apply(*v).map_err(|e| {
            Error::Numerical(format!("entry ({}, {}): {e}", idx % rows, idx / rows))
        })?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> NumericProxSettings {
        NumericProxSettings::default()
    }

    fn prox(spec: PenaltySpec, x: f64, lambda: f64) -> f64 {
        prox_scalar(&ProxRequest::new(spec, x, lambda), &s()).unwrap()
    }

    fn exp(delta: f64, n: f64) -> PenaltySpec {
        PenaltySpec::exp(delta, n, false).unwrap()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(prox(PenaltySpec::l1(), 2.0, 0.5), 1.5);
        assert_eq!(prox(PenaltySpec::l1(), -0.3, 0.5), 0.0);
    }

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(prox(PenaltySpec::l0(), 1.0, 0.4), 1.0);
        assert_eq!(prox(PenaltySpec::l0(), 0.5, 0.4), 0.0);
        // exact tie resolves to zero
        assert_eq!(prox(PenaltySpec::l0(), 2.0, 2.0), 0.0);
    }

    #[test]
    fn exp_fixed_point_example() {
        // u = 3 - e^{-u}
        let mut u: f64 = 3.0;
        for _ in 0..100 {
            u = 3.0 - (-u).exp();
        }
        let p = prox(exp(1.0, 1.0), 3.0, 1.0);
        assert!((p - u).abs() < 1e-9, "{p} vs {u}");
        assert!((p - 2.9476).abs() < 1e-3);
    }

    #[test]
    fn zero_anchor_maps_to_zero() {
        for spec in [
            PenaltySpec::l0(),
            PenaltySpec::l1(),
            PenaltySpec::l_half(),
            PenaltySpec::l_two_thirds(),
            exp(3.0, 1.7),
        ] {
            assert_eq!(prox(spec, 0.0, 0.7), 0.0);
        }
    }

    #[test]
    fn invalid_requests() {
        assert!(prox_scalar(&ProxRequest::new(PenaltySpec::l1(), 1.0, 0.0), &s()).is_err());
        assert!(prox_scalar(&ProxRequest::new(PenaltySpec::l1(), f64::NAN, 1.0), &s()).is_err());
        let bad = NumericProxSettings { u_tol: 0.0, ..s() };
        assert!(prox_scalar(&ProxRequest::new(PenaltySpec::l1(), 1.0, 1.0), &bad).is_err());
    }

    #[test]
    fn inflection_points() {
        assert!((exp_inflection(1.0, 2.0) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((exp_inflection(1.0, 2.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let u = exp_inflection(30.0, 1.5);
        assert!((u - (0.5f64 / 45.0).powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((u - 0.049793).abs() < 1e-6);
        assert!((u - 0.04975).abs() < 1e-4);
        assert_eq!(exp_inflection(7.0, 1.0), 0.0);
    }

    #[test]
    fn exp_is_unbiased_for_large_input() {
        let p = prox_exp_numeric(100.0, 1.0, 1.0, 1.0, &s()).unwrap();
        assert!((p - 100.0).abs() <= 1e-6);
    }

    #[test]
    fn exp_matches_oracle_example() {
        let p = prox_exp_numeric(1.7, 0.2, 5.0, 1.3, &s()).unwrap();
        let o = prox_oracle(&ProxRequest::new(exp(5.0, 1.3), 1.7, 0.2)).unwrap();
        assert!((p - o).abs() < 1e-4, "{p} vs {o}");
    }

    #[test]
    fn oracle_examples() {
        let o = prox_oracle(&ProxRequest::new(PenaltySpec::l1(), 2.0, 0.5)).unwrap();
        assert!((o - 1.5).abs() < 1e-6);
        let x = (2.0f64 * 0.4).sqrt();
        let o = prox_oracle(&ProxRequest::new(PenaltySpec::l0(), x, 0.4)).unwrap();
        assert_eq!(o, 0.0);
    }

    #[test]
    fn cubic_roots() {
        // (y-1)(y-2)(y+3) = y^3 - 7y + 6
        assert!((largest_cubic_root(-7.0, 6.0) - 2.0).abs() < 1e-12);
        // y^3 + y - 2 has the single real root 1
        assert!((largest_cubic_root(1.0, -2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_thresholds_match_oracle() {
        for spec in [PenaltySpec::l_half(), PenaltySpec::l_two_thirds()] {
            for &lambda in &[0.05, 0.3, 1.0, 1.9] {
                for i in -40..=40 {
                    let x = i as f64 * 0.25;
                    let req = ProxRequest::new(spec, x, lambda);
                    let p = prox_scalar(&req, &s()).unwrap();
                    let o = prox_oracle(&req).unwrap();
                    assert!(
                        req.objective(p) <= req.objective(o) + 1e-9,
                        "{spec:?} x={x} lambda={lambda}: {p} vs oracle {o}"
                    );
                }
            }
        }
    }

    #[test]
    fn half_threshold_level() {
        // nonzero output starts at 1.5 lambda^{2/3}
        let lambda: f64 = 0.8;
        let t = 1.5 * lambda.powf(2.0 / 3.0);
        assert_eq!(prox(PenaltySpec::l_half(), t * 0.999, lambda), 0.0);
        assert!(prox(PenaltySpec::l_half(), t * 1.001, lambda) > 0.0);
    }

    #[test]
    fn elementwise_examples() {
        let z = DMatrix::<f64>::zeros(2, 3);
        assert_eq!(prox_elementwise(&exp(1.0, 1.5), &z, 0.3, &s()).unwrap(), z);
        let m = DMatrix::from_row_slice(1, 2, &[2.0, -2.0]);
        let p = prox_elementwise(&PenaltySpec::l1(), &m, 0.5, &s()).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(1, 2, &[1.5, -1.5]));
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 0.5]);
        let p = prox_elementwise(&PenaltySpec::l0(), &m, 0.4, &s()).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        let err = prox_elementwise(&PenaltySpec::l1(), &m, 0.4, &s()).unwrap_err();
        assert!(err.to_string().contains("(0, 1)"));
    }

    #[test]
    fn bracket_upper_end_is_safe() {
        // for u slightly above |x| the reduced objective increases
        for &(d, n, lambda) in &[(1.0, 1.0, 1.0), (30.0, 1.5, 0.1), (0.2, 2.0, 1.5)] {
            let spec = exp(d, n);
            for x in [0.01, 0.5, 2.0, 7.0] {
                let above = x * (1.0 + 1e-3);
                assert!(
                    prox_objective(&spec, x, lambda, above) > prox_objective(&spec, x, lambda, x)
                );
            }
        }
    }

    #[test]
    fn remark_soft_threshold_limit() {
        let spec = PenaltySpec::exp(1e-3, 1.0, true).unwrap();
        let mut worst: f64 = 0.0;
        for i in -50..=50 {
            let x = i as f64 * 0.1;
            let soft = x.signum() * (x.abs() - 1.0).max(0.0);
            worst = worst.max((prox(spec, x, 1.0) - soft).abs());
        }
        assert!(worst <= 5e-3, "{worst}");
    }

    #[test]
    fn large_delta_behaves_like_hard_threshold() {
        let spec = exp(50.0, 1.0);
        let mut jumped = None;
        for i in 1..=4000 {
            let x = i as f64 * 1e-3;
            let p = prox(spec, x, 1.0);
            match jumped {
                None if p != 0.0 => {
                    assert!(p >= x - 0.05, "x={x} p={p}");
                    jumped = Some(x);
                }
                None => {}
                Some(_) => assert!(p >= x - 0.05, "x={x} p={p}"),
            }
        }
        let t = jumped.expect("no jump found");
        assert!(t > 0.5 && t < 2.0, "threshold {t}");
    }
}
