//! The second-order correction functional of the case-b limit law: its two
//! closed forms, and an independent linear-programming oracle for the
//! defining maximization
//! `m(ν) = max { Σ_i min(qx_i x^X_i + ν^X_i, qy_i x^Y_i + ν^Y_i) }` over
//! zero-sum vectors that are nonnegative off the active set.

pub mod lp;

use thiserror::Error;

use crate::analysis::{Analysis, CaseConstants};
use lp::{lp_solve, LpProblem, LpStatus, Relation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfuncError {
    #[error("operation requires a case-b report, got case {0}")]
    WrongCase(&'static str),
    #[error("perturbation must vanish off the active set (slot {slot})")]
    BadPerturbation { slot: usize },
    #[error("perturbation length {got} does not match {want} slots")]
    BadLength { got: usize, want: usize },
    #[error("adaptive box grew {doublings} times without containing the optimum")]
    BoxEscape { doublings: usize },
    #[error("oracle LP failed: {0}")]
    Lp(String),
}

/// A perturbation pair supported on the active slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    nu_x: Vec<f64>,
    nu_y: Vec<f64>,
}

impl Perturbation {
    pub fn new(nu_x: Vec<f64>, nu_y: Vec<f64>, an: &Analysis<f64>) -> Result<Self, MfuncError> {
        let l = an.len();
        if nu_x.len() != l || nu_y.len() != l {
            return Err(MfuncError::BadLength { got: nu_x.len().max(nu_y.len()), want: l });
        }
        for (slot, (&a, &b)) in nu_x.iter().zip(&nu_y).enumerate() {
            if !an.is_active(slot) && (a.abs() > 1e-12 || b.abs() > 1e-12) {
                return Err(MfuncError::BadPerturbation { slot });
            }
        }
        Ok(Perturbation { nu_x, nu_y })
    }

    pub fn nu_x(&self) -> &[f64] {
        &self.nu_x
    }

    pub fn nu_y(&self) -> &[f64] {
        &self.nu_y
    }
}

/// Closed form of the functional.
///
/// Case b1: `s_X S^Y + t_X S^X` when `S^X <= S^Y`, and symmetrically
/// otherwise, where `S^• = Σ_{i∈I} ν^•_i`. Case b2:
/// `Σ_{i∈I} (s ν^X_i / qx_i + t ν^Y_i / qy_i)`.
pub fn m_closed(an: &Analysis<f64>, nu: &Perturbation) -> Result<f64, MfuncError> {
    match &an.constants {
        CaseConstants::B1 { s_x, t_x, s_y, t_y } => {
            let sx: f64 = an.active.iter().map(|&i| nu.nu_x[i]).sum();
            let sy: f64 = an.active.iter().map(|&i| nu.nu_y[i]).sum();
            Ok(if sx <= sy { s_x * sy + t_x * sx } else { s_y * sx + t_y * sy })
        }
        CaseConstants::B2 { s, t } => {
            let mut total = 0.0;
            for &i in &an.active {
                total += s * nu.nu_x[i] / an.qx[i] + t * nu.nu_y[i] / an.qy[i];
            }
            Ok(total)
        }
        _ => Err(MfuncError::WrongCase(an.case.name())),
    }
}

const MAX_DOUBLINGS: usize = 20;

/// Independent oracle for the defining maximization, solved by LP inside an
/// adaptive box.
///
/// Variables: `x^X, x^Y` (zero-sum, free on `I`, nonnegative off it) and one
/// epigraph variable per slot. The box `|x| <= B` starts at
/// `4 l (‖ν‖_∞ + 1)` and doubles until the witness is strictly interior or
/// the optimum value stops moving (the optimal face can contain coupling
/// directions of zero objective change, whose vertices ride the box).
/// In case a the true maximum is infinite and the loop reports `BoxEscape`.
pub fn m_lp_oracle(an: &Analysis<f64>, nu: &Perturbation) -> Result<f64, MfuncError> {
    if !an.case.is_case_b() {
        return Err(MfuncError::WrongCase(an.case.name()));
    }
    let l = an.len();
    let norm = nu
        .nu_x
        .iter()
        .chain(&nu.nu_y)
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut bound = 4.0 * l as f64 * (norm + 1.0);
    let mut prev: Option<f64> = None;
    for _ in 0..MAX_DOUBLINGS {
        let (value, interior) = solve_box(an, nu, bound)?;
        if interior {
            return Ok(value);
        }
        if let Some(p) = prev {
            if (value - p).abs() <= 1e-12 * (1.0 + value.abs()) {
                return Ok(value);
            }
        }
        prev = Some(value);
        bound *= 2.0;
    }
    Err(MfuncError::BoxEscape { doublings: MAX_DOUBLINGS })
}

fn solve_box(an: &Analysis<f64>, nu: &Perturbation, bound: f64) -> Result<(f64, bool), MfuncError> {
    let l = an.len();
    // layout: x^X: 0..l, x^Y: l..2l, epigraph t: 2l..3l
    let nv = 3 * l;
    let mut objective = vec![0.0; nv];
    for i in 0..l {
        objective[2 * l + i] = 1.0;
    }
    let mut p = LpProblem::new(nv, objective);
    for i in 0..l {
        p.set_free(2 * l + i);
        if an.is_active(i) {
            p.set_free(i);
            p.set_free(l + i);
        }
    }
    for i in 0..l {
        // t_i - qx_i x^X_i <= nu^X_i and t_i - qy_i x^Y_i <= nu^Y_i
        let mut row = vec![0.0; nv];
        row[2 * l + i] = 1.0;
        row[i] = -an.qx[i];
        p.add_row(row, Relation::Le, nu.nu_x[i]);
        let mut row = vec![0.0; nv];
        row[2 * l + i] = 1.0;
        row[l + i] = -an.qy[i];
        p.add_row(row, Relation::Le, nu.nu_y[i]);
    }
    let mut row = vec![0.0; nv];
    row[..l].fill(1.0);
    p.add_row(row, Relation::Eq, 0.0);
    let mut row = vec![0.0; nv];
    row[l..2 * l].fill(1.0);
    p.add_row(row, Relation::Eq, 0.0);
    for j in 0..2 * l {
        let mut row = vec![0.0; nv];
        row[j] = 1.0;
        p.add_row(row, Relation::Le, bound);
        let mut row = vec![0.0; nv];
        row[j] = -1.0;
        p.add_row(row, Relation::Le, bound);
    }

    let sol = lp_solve(&p).map_err(|e| MfuncError::Lp(e.to_string()))?;
    if sol.status != LpStatus::Optimal {
        return Err(MfuncError::Lp(format!("oracle LP returned {:?}", sol.status)));
    }
    let w = sol.witness.unwrap();
    let margin = 1e-7 * bound;
    let interior = w[..2 * l].iter().all(|v| v.abs() < bound - margin);
    Ok((sol.objective.unwrap(), interior))
}
