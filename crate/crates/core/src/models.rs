//! Closed forms for the free, piecewise-constant step and Kronig-Penney
//! Fibonacci models, all with unit cells.
//!
//! * step: `a` carries a constant barrier `lambda`, `b` is free;
//! * Kronig-Penney: `a` carries `lambda * delta` at its left end, `b` is free.
//!
//! The invariants collapse to products of the entire kernel
//! `s(z, 1) = sin(sqrt z) / sqrt z`:
//!
//! ```text
//! step: I(E) = lambda²/4 · s(E)² · s(E - lambda)²
//! KP:   I(E) = lambda²/4 · s(E)²
//! ```
//!
//! which covers `E > lambda`, `0 < E < lambda` (where `s(E - lambda)` turns
//! into `sinh`) and the branch points in one expression.

use crate::error::{Error, Result};
use crate::potential::{Model, PotentialPiece};
use crate::tracemap::TraceTriple;
use crate::transfer::{cos_kernel, sin_kernel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormModel {
    Free,
    Step { lambda: f64 },
    KronigPenney { lambda: f64 },
}

impl ClosedFormModel {
    /// Step model; `lambda = 0` is the free model.
    pub fn step(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidModel(format!("step height must be >= 0, got {lambda}")));
        }
        Ok(if lambda == 0.0 { Self::Free } else { Self::Step { lambda } })
    }

    pub fn kronig_penney(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidModel(format!("coupling must be finite, got {lambda}")));
        }
        Ok(Self::KronigPenney { lambda })
    }

    pub fn coupling(&self) -> f64 {
        match *self {
            Self::Free => 0.0,
            Self::Step { lambda } | Self::KronigPenney { lambda } => lambda,
        }
    }

    /// The same model as transfer-matrix pieces.
    pub fn to_model(&self) -> Model {
        let free = || PotentialPiece::free(1.0).expect("unit length");
        match *self {
            Self::Free => Model::fibonacci("free", free(), free()),
            Self::Step { lambda } => Model::fibonacci(
                "step",
                PotentialPiece::constant(lambda, 1.0).expect("finite height"),
                free(),
            )
            .with_param("lambda", lambda),
            Self::KronigPenney { lambda } => Model::fibonacci(
                "kronig-penney",
                PotentialPiece::point_interaction(lambda, 1.0).expect("finite coupling"),
                free(),
            )
            .with_param("lambda", lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormInvariant {
    pub value: f64,
    /// Evaluated at `E < 0`, through the hyperbolic continuation.
    pub extended_branch: bool,
}

pub fn closed_form_invariant(m: &ClosedFormModel, e: f64) -> ClosedFormInvariant {
    let value = match *m {
        ClosedFormModel::Free => 0.0,
        ClosedFormModel::Step { lambda } => {
            let s = sin_kernel(e, 1.0) * sin_kernel(e - lambda, 1.0);
            0.25 * lambda * lambda * s * s
        }
        ClosedFormModel::KronigPenney { lambda } => {
            let s = sin_kernel(e, 1.0);
            0.25 * lambda * lambda * s * s
        }
    };
    ClosedFormInvariant { value, extended_branch: e < 0.0 && *m != ClosedFormModel::Free }
}

/// Distance from `E = 0` and `E = lambda` inside which the initials switch
/// to the entire-kernel form.
pub const BRANCH_NEIGHBORHOOD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialsVariant {
    /// `x_0 = tr M(a, E) / 2` from the matrix display.
    MatrixDerived,
    /// Kronig-Penney `x_0 = cos 2√E + (λ / 2√E) sin √E` as printed in the
    /// system of initial conditions.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormInitials {
    pub triple: TraceTriple,
    /// Kronig-Penney only.
    pub printed: Option<TraceTriple>,
}

impl ClosedFormInitials {
    pub fn variants(&self) -> Vec<(InitialsVariant, TraceTriple)> {
        let mut v = vec![(InitialsVariant::MatrixDerived, self.triple)];
        if let Some(p) = self.printed {
            v.push((InitialsVariant::AsPrinted, p));
        }
        v
    }
}

fn near(e: f64, at: f64) -> bool {
    (e - at).abs() < BRANCH_NEIGHBORHOOD
}

/// `(x_1, x_0, x_{-1})` from the closed-form expressions of each regime.
pub fn closed_form_initials(m: &ClosedFormModel, e: f64) -> ClosedFormInitials {
    match *m {
        ClosedFormModel::Free => ClosedFormInitials { triple: free_initials(e), printed: None },
        ClosedFormModel::Step { lambda } => {
            ClosedFormInitials { triple: step_initials(lambda, e), printed: None }
        }
        ClosedFormModel::KronigPenney { lambda } => {
            let (c1, s1) = (cos_kernel(e, 1.0), sin_kernel(e, 1.0));
            let (c2, s2) = (cos_kernel(e, 2.0), sin_kernel(e, 2.0));
            let x_prev = c1;
            let x_next = c2 + 0.5 * lambda * s2;
            ClosedFormInitials {
                triple: TraceTriple::new(x_next, c1 + 0.5 * lambda * s1, x_prev),
                printed: Some(TraceTriple::new(x_next, c2 + 0.5 * lambda * s1, x_prev)),
            }
        }
    }
}

fn free_initials(e: f64) -> TraceTriple {
    if e > BRANCH_NEIGHBORHOOD {
        let k = e.sqrt();
        TraceTriple::new((2.0 * k).cos(), k.cos(), k.cos())
    } else if e < -BRANCH_NEIGHBORHOOD {
        let k = (-e).sqrt();
        TraceTriple::new((2.0 * k).cosh(), k.cosh(), k.cosh())
    } else {
        let c = cos_kernel(e, 1.0);
        TraceTriple::new(cos_kernel(e, 2.0), c, c)
    }
}

fn step_initials(lambda: f64, e: f64) -> TraceTriple {
    if e > lambda && !near(e, lambda) && !near(e, 0.0) {
        let (k, q) = (e.sqrt(), (e - lambda).sqrt());
        let x_next = k.cos() * q.cos()
            - 0.5 * ((e / (e - lambda)).sqrt() + ((e - lambda) / e).sqrt()) * k.sin() * q.sin();
        TraceTriple::new(x_next, q.cos(), k.cos())
    } else if e > 0.0 && e < lambda && !near(e, lambda) && !near(e, 0.0) {
        // sinh regime; the second square root is sqrt(E / (lambda - E))
        let (k, q) = (e.sqrt(), (lambda - e).sqrt());
        let x_next = k.cos() * q.cosh()
            + 0.5 * (((lambda - e) / e).sqrt() - (e / (lambda - e)).sqrt()) * k.sin() * q.sinh();
        TraceTriple::new(x_next, q.cosh(), k.cos())
    } else {
        // tr(M_b M_a) / 2 = c_a c_b - (2E - lambda) s_a s_b / 2
        let (ca, sa) = (cos_kernel(e - lambda, 1.0), sin_kernel(e - lambda, 1.0));
        let (cb, sb) = (cos_kernel(e, 1.0), sin_kernel(e, 1.0));
        TraceTriple::new(ca * cb - 0.5 * (2.0 * e - lambda) * sa * sb, ca, cb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracemap::{fricke_vogt, initial_conditions};
    use std::f64::consts::PI;

    #[test]
    fn free_invariant_is_zero() {
        assert_eq!(closed_form_invariant(&ClosedFormModel::Free, 7.0).value, 0.0);
    }

    #[test]
    fn kp_vanishes_at_pi_squared() {
        let kp = ClosedFormModel::kronig_penney(2.0).unwrap();
        assert!(closed_form_invariant(&kp, PI * PI).value < 1e-30);
    }

    #[test]
    fn step_value_at_two() {
        let step = ClosedFormModel::step(1.0).unwrap();
        let got = closed_form_invariant(&step, 2.0).value;
        let want = 0.125 * 2f64.sqrt().sin().powi(2) * 1f64.sin().powi(2);
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.086_356_772_5).abs() < 1e-10);
        let numeric = fricke_vogt(initial_conditions(&step.to_model(), 2.0).unwrap());
        assert!((numeric - got).abs() < 1e-10);
    }

    #[test]
    fn step_zero_is_free() {
        assert_eq!(ClosedFormModel::step(0.0).unwrap(), ClosedFormModel::Free);
        assert!(ClosedFormModel::step(-1.0).is_err());
    }

    #[test]
    fn step_initials_regimes() {
        let step = ClosedFormModel::step(1.0).unwrap();
        let p = closed_form_initials(&step, 5.0).triple;
        assert!((p.x_prev - 5f64.sqrt().cos()).abs() < 1e-15);
        assert!((p.x_cur - 2f64.cos()).abs() < 1e-15);
        let deep = ClosedFormModel::step(4.0).unwrap();
        let q = closed_form_initials(&deep, 1.0).triple;
        assert!((q.x_cur - 3f64.sqrt().cosh()).abs() < 1e-14);
    }

    #[test]
    fn initials_agree_across_branch_switch() {
        let step = ClosedFormModel::step(2.0).unwrap();
        for e in [2.0 - 1.0001e-3, 2.0 - 0.9999e-3, 2.0 + 0.9999e-3, 2.0 + 1.0001e-3, 0.9999e-3, 1.0001e-3] {
            let p = closed_form_initials(&step, e).triple;
            let numeric = initial_conditions(&step.to_model(), e).unwrap();
            assert!((p.x_next - numeric.x_next).abs() < 1e-11, "E = {e}");
            assert!((p.x_cur - numeric.x_cur).abs() < 1e-12, "E = {e}");
        }
    }

    #[test]
    fn kp_zero_coupling_is_free() {
        let kp = ClosedFormModel::kronig_penney(0.0).unwrap();
        for e in [0.5, 3.0, 12.0, -2.0] {
            let a = closed_form_initials(&kp, e).triple;
            let b = closed_form_initials(&ClosedFormModel::Free, e).triple;
            for (x, y) in a.as_array().iter().zip(b.as_array()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kp_variants_disagree_off_special_points() {
        let kp = ClosedFormModel::kronig_penney(1.0).unwrap();
        let init = closed_form_initials(&kp, 3.0);
        assert_eq!(init.variants().len(), 2);
        let printed = init.printed.unwrap();
        assert!((printed.x_cur - init.triple.x_cur).abs() > 1e-3);
    }

    #[test]
    fn extended_branch_flag() {
        let step = ClosedFormModel::step(1.0).unwrap();
        assert!(closed_form_invariant(&step, -1.0).extended_branch);
        assert!(!closed_form_invariant(&step, 1.5).extended_branch);
        // sin²√E / E continues to sinh²√-E / -E
        let e = -2.0f64;
        let want = 0.25 * ((-e).sqrt().sinh().powi(2) / -e) * ((1.0 - e).sqrt().sinh().powi(2) / (1.0 - e));
        assert!((closed_form_invariant(&step, e).value - want).abs() < 1e-14);
    }
}
