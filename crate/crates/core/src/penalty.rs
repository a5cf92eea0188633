//! Scalar, elementwise and singular-value penalties.
//!
//! Every penalty is even in `x`, zero at the origin and nondecreasing in `|x|`.
//! The exponential surrogate `h(x) = 1 - exp(-delta * |x|^n)` saturates at 1,
//! so large coefficients are not over-penalized.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Which regularizer a [`PenaltySpec`] denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    /// Counting penalty, `1` for nonzero `x`.
    L0,
    /// `|x|`.
    L1,
    /// `|x|^(1/2)`.
    LHalf,
    /// `|x|^(2/3)`.
    LTwoThirds,
    /// `1 - exp(-delta |x|^n)`, optionally scaled by `1/delta`.
    ExpAdaptive,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 5] = [
        PenaltyKind::L0,
        PenaltyKind::L1,
        PenaltyKind::LHalf,
        PenaltyKind::LTwoThirds,
        PenaltyKind::ExpAdaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::L0 => "l0",
            PenaltyKind::L1 => "l1",
            PenaltyKind::LHalf => "lhalf",
            PenaltyKind::LTwoThirds => "ltwothirds",
            PenaltyKind::ExpAdaptive => "exp",
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l0" => Ok(PenaltyKind::L0),
            "l1" => Ok(PenaltyKind::L1),
            "lhalf" | "l1/2" | "l_half" => Ok(PenaltyKind::LHalf),
            "ltwothirds" | "l2/3" | "l_two_thirds" => Ok(PenaltyKind::LTwoThirds),
            "exp" | "expadaptive" | "exp_adaptive" => Ok(PenaltyKind::ExpAdaptive),
            other => invalid(format!("unknown penalty kind '{other}'")),
        }
    }
}

/// A regularizer together with its parameters.
///
/// `delta`, `n` and `scale_by_inv_delta` only matter for
/// [`PenaltyKind::ExpAdaptive`]; construct through [`PenaltySpec::exp`] to get
/// them validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub delta: f64,
    pub n: f64,
    pub scale_by_inv_delta: bool,
}

impl PenaltySpec {
    pub fn l0() -> Self {
        Self::simple(PenaltyKind::L0)
    }

    pub fn l1() -> Self {
        Self::simple(PenaltyKind::L1)
    }

    pub fn l_half() -> Self {
        Self::simple(PenaltyKind::LHalf)
    }

    pub fn l_two_thirds() -> Self {
        Self::simple(PenaltyKind::LTwoThirds)
    }

    /// Non-exponential kinds. Panics on `ExpAdaptive`, which needs parameters.
    pub fn simple(kind: PenaltyKind) -> Self {
        assert!(
            kind != PenaltyKind::ExpAdaptive,
            "ExpAdaptive needs delta and n"
        );
        Self {
            kind,
            delta: 1.0,
            n: 1.0,
            scale_by_inv_delta: false,
        }
    }

    /// `h_{delta,n}`, or `(1/delta) h_{delta,n}` when `scale_by_inv_delta`.
    pub fn exp(delta: f64, n: f64, scale_by_inv_delta: bool) -> Result<Self> {
        let spec = Self {
            kind: PenaltyKind::ExpAdaptive,
            delta,
            n,
            scale_by_inv_delta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == PenaltyKind::ExpAdaptive {
            if !(self.delta.is_finite() && self.delta > 0.0) {
                return invalid(format!(
                    "delta must be positive and finite, got {}",
                    self.delta
                ));
            }
            if !(self.n.is_finite() && self.n >= 1.0) {
                return invalid(format!("n must be finite and >= 1, got {}", self.n));
            }
        }
        Ok(())
    }

    /// Multiplier applied to the bare surrogate (`1/delta` or `1`).
    pub fn scale(&self) -> f64 {
        if self.kind == PenaltyKind::ExpAdaptive && self.scale_by_inv_delta {
            1.0 / self.delta
        } else {
            1.0
        }
    }

    /// Penalty value without input validation.
    pub(crate) fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        match self.kind {
            PenaltyKind::L0 => {
                if x != 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            PenaltyKind::L1 => a,
            PenaltyKind::LHalf => a.sqrt(),
            PenaltyKind::LTwoThirds => a.powf(2.0 / 3.0),
            PenaltyKind::ExpAdaptive => {
                if a == 0.0 {
                    0.0
                } else {
                    // 1 - e^{-t} without cancellation for small t
                    -(-self.delta * a.powf(self.n)).exp_m1() * self.scale()
                }
            }
        }
    }

    /// Short human-readable label, e.g. `l1` or `exp(d=0.2,n=1,inv)`.
    pub fn label(&self) -> String {
        match self.kind {
            PenaltyKind::ExpAdaptive => format!(
                "exp(d={},n={}{})",
                self.delta,
                self.n,
                if self.scale_by_inv_delta { ",inv" } else { "" }
            ),
            k => k.name().to_string(),
        }
    }
}

/// Penalty of a single scalar.
pub fn eval_scalar(spec: &PenaltySpec, x: f64) -> Result<f64> {
    spec.validate()?;
    if !x.is_finite() {
        return invalid(format!("penalty argument must be finite, got {x}"));
    }
    Ok(spec.value(x))
}

/// Sum of the scalar penalty over every entry of `c`.
pub fn eval_matrix(spec: &PenaltySpec, c: &DMatrix<f64>) -> Result<f64> {
    spec.validate()?;
    if let Some((i, v)) = c.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        let (r, col) = (i % c.nrows(), i / c.nrows());
        return invalid(format!("non-finite entry {v} at ({r}, {col})"));
    }
    Ok(c.iter().map(|&v| spec.value(v)).sum())
}

/// Sum of the scalar penalty over a vector of singular values.
pub fn eval_singular(spec: &PenaltySpec, sigma: &[f64]) -> Result<f64> {
    spec.validate()?;
    for (i, &s) in sigma.iter().enumerate() {
        if !s.is_finite() || s < 0.0 {
            return invalid(format!(
                "singular value {i} must be finite and >= 0, got {s}"
            ));
        }
    }
    Ok(sigma.iter().map(|&s| spec.value(s)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(delta: f64, n: f64) -> PenaltySpec {
        PenaltySpec::exp(delta, n, false).unwrap()
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(eval_scalar(&exp(1.0, 1.0), 0.0).unwrap(), 0.0);
        let v = eval_scalar(&exp(1.0, 1.0), 1.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((v - 0.63212).abs() < 1e-5);
        assert_eq!(eval_scalar(&PenaltySpec::l1(), -2.5).unwrap(), 2.5);
        assert_eq!(eval_scalar(&PenaltySpec::l0(), 0.01).unwrap(), 1.0);
        assert_eq!(eval_scalar(&PenaltySpec::l0(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(eval_scalar(&PenaltySpec::l1(), f64::NAN).is_err());
        assert!(eval_scalar(&PenaltySpec::l1(), f64::INFINITY).is_err());
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(eval_matrix(&PenaltySpec::l1(), &m).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(PenaltySpec::exp(0.0, 1.0, false).is_err());
        assert!(PenaltySpec::exp(1.0, 0.5, false).is_err());
        assert!(PenaltySpec::exp(-1.0, 1.5, true).is_err());
    }

    #[test]
    fn matrix_examples() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(eval_matrix(&exp(2.0, 1.5), &z).unwrap(), 0.0);
        let i = DMatrix::<f64>::identity(2, 2);
        assert_eq!(eval_matrix(&PenaltySpec::l1(), &i).unwrap(), 2.0);
        let m = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let v = eval_matrix(&exp(1.0, 1.0), &m).unwrap();
        assert!((v - 1.26424).abs() < 1e-5);
    }

    #[test]
    fn singular_examples() {
        assert_eq!(
            eval_singular(&PenaltySpec::l1(), &[0.0, 0.0, 0.0]).unwrap(),
            0.0
        );
        assert_eq!(eval_singular(&PenaltySpec::l1(), &[3.0, 1.0]).unwrap(), 4.0);
        let v = eval_singular(&exp(2.0, 1.0), &[1.0]).unwrap();
        assert!((v - 0.86466).abs() < 1e-5);
        assert!(eval_singular(&PenaltySpec::l1(), &[1.0, -0.1]).is_err());
    }

    #[test]
    fn fractional_powers() {
        assert!((eval_scalar(&PenaltySpec::l_half(), 4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((eval_scalar(&PenaltySpec::l_two_thirds(), -8.0).unwrap() - 4.0).abs() < 1e-12);
    }

    fn all_specs() -> Vec<PenaltySpec> {
        let mut v: Vec<_> = [
            PenaltyKind::L0,
            PenaltyKind::L1,
            PenaltyKind::LHalf,
            PenaltyKind::LTwoThirds,
        ]
        .into_iter()
        .map(PenaltySpec::simple)
        .collect();
        for &(d, n) in &[
            (0.02, 1.0),
            (1.0, 1.0),
            (5.0, 1.3),
            (30.0, 1.5),
            (50.0, 2.0),
        ] {
            v.push(exp(d, n));
            v.push(PenaltySpec::exp(d, n, true).unwrap());
        }
        v
    }

    #[test]
    fn even_and_monotone_on_grid() {
        for spec in all_specs() {
            let mut prev = 0.0;
            for i in 0..1000 {
                let x = i as f64 * 0.01;
                let v = eval_scalar(&spec, x).unwrap();
                assert_eq!(v, eval_scalar(&spec, -x).unwrap(), "{spec:?} at {x}");
                assert!(v >= prev, "{spec:?} decreasing at {x}");
                assert!(v >= 0.0);
                assert_eq!(v == 0.0, x == 0.0, "{spec:?} zero set at {x}");
                prev = v;
            }
        }
    }

    #[test]
    fn exp_saturates_below_one() {
        for &(d, n) in &[(0.02, 1.0), (1.0, 1.7), (30.0, 1.5), (50.0, 2.0)] {
            let spec = exp(d, n);
            let far = (20.0 / d).powf(1.0 / n);
            let v = eval_scalar(&spec, far).unwrap();
            assert!(v < 1.0 || v == 1.0 && 1.0 - v <= (-20.0f64).exp());
            assert!(1.0 - v <= (-20.0f64).exp() * (1.0 + 1e-12));
            for x in [0.1, 1.0, 3.0] {
                assert!(eval_scalar(&spec, x).unwrap() < 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn inverse_delta_scaling_tends_to_abs_for_small_delta() {
        let spec = PenaltySpec::exp(1e-6, 1.0, true).unwrap();
        let v = eval_scalar(&spec, 1.0).unwrap();
        assert!((v - 1.0).abs() <= 1e-6);
    }
}
