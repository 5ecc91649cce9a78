//! Deterministic limit analysis: the limit mean `e_max`, the pair scores
//! `e(i, j)`, the active letter set `I`, case classification with the
//! case constants, anchor construction, block-order analysis, and
//! truncation of large alphabets.
//!
//! Everything here is generic over [`Scalar`], so instances given as exact
//! fractions are analyzed in exact rational arithmetic end to end.

mod grids;

pub use grids::{emax_grid_oracle, grid_j, grid_k, GridPoint, PolytopeGrid};
pub(crate) use grids::grid_near;

use num_rational::BigRational;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exact::BlockOrder;
use crate::mfunc::lp::{lp_solve, LpProblem, LpStatus, Relation};
use crate::model::{Instance, ModelError, Pmf};
use crate::scalar::{rational_string, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("pair ({i}, {j}) violates the admissibility preconditions")]
    InadmissiblePair { i: usize, j: usize },
    #[error("linear program failed: {0}")]
    LpFailure(String),
    #[error("case-b2 span residual {residual} exceeds tolerance")]
    InconsistentSpan { residual: f64 },
    #[error("operation requires {expected}, report is {got}")]
    WrongCase { expected: &'static str, got: &'static str },
    #[error("grid would hold {points} points, limit is {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("grid resolution too coarse to hit the feasible slice")]
    EmptyGrid,
    #[error("block order is not onto")]
    NotOnto,
    #[error("no truncation point: every tail sum reaches e_max")]
    NoValidCut,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// The first word limits the common length (X-limited).
    CaseA,
    /// Same with the roles of the two words swapped (Y-limited).
    CaseASymmetric,
    /// Both constraints tight and the reciprocal mass vectors agree on `I`.
    CaseB1,
    /// Both constraints tight, reciprocal mass vectors independent on `I`.
    CaseB2,
}

impl CaseTag {
    pub fn name(self) -> &'static str {
        match self {
            CaseTag::CaseA => "a",
            CaseTag::CaseASymmetric => "a_sym",
            CaseTag::CaseB1 => "b1",
            CaseTag::CaseB2 => "b2",
        }
    }

    pub fn is_case_a(self) -> bool {
        matches!(self, CaseTag::CaseA | CaseTag::CaseASymmetric)
    }

    pub fn is_case_b(self) -> bool {
        matches!(self, CaseTag::CaseB1 | CaseTag::CaseB2)
    }
}

/// Case-specific constants of the limit law.
#[derive(Debug, Clone, PartialEq)]
pub enum CaseConstants<T> {
    /// `witness` is a slot in `I` whose other-marginal mass strictly exceeds
    /// `e_max`; its existence is what makes the split polytope nonempty.
    A { witness: usize },
    ASym { witness: usize },
    B1 { s_x: T, t_x: T, s_y: T, t_y: T },
    B2 { s: T, t: T },
}

/// Full analysis of one pair of mass vectors (a pmf pair, or a block order's
/// slot masses). Slots are 0-based internally; JSON output is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis<T> {
    /// Slot masses for each marginal (pmf entries, or `p ∘ alpha`).
    pub qx: Vec<T>,
    pub qy: Vec<T>,
    /// Slot-to-letter map for block analyses (`None` means identity).
    pub alpha: Option<Vec<u8>>,
    /// Underlying alphabet size.
    pub m: usize,
    pub e1: T,
    /// `None` when no admissible pair exists.
    pub e2: Option<T>,
    pub e_max: T,
    /// Active slot set `I`, sorted.
    pub active: Vec<usize>,
    pub case: CaseTag,
    pub constants: CaseConstants<T>,
    /// A maximizer of `f` supported on `I` with positive `I`-coordinates.
    pub anchor_x: Vec<T>,
    pub anchor_y: Vec<T>,
}

impl<T: Scalar> Analysis<T> {
    /// Number of slots.
    pub fn len(&self) -> usize {
        self.qx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qx.is_empty()
    }

    /// Letter (0-based) carried by slot `k`.
    pub fn letter(&self, k: usize) -> usize {
        match &self.alpha {
            Some(a) => a[k] as usize - 1,
            None => k,
        }
    }

    pub fn is_active(&self, slot: usize) -> bool {
        self.active.binary_search(&slot).is_ok()
    }

    pub fn to_f64(&self) -> Analysis<f64> {
        let conv = |v: &[T]| v.iter().map(Scalar::to_f64).collect::<Vec<f64>>();
        Analysis {
            qx: conv(&self.qx),
            qy: conv(&self.qy),
            alpha: self.alpha.clone(),
            m: self.m,
            e1: self.e1.to_f64(),
            e2: self.e2.as_ref().map(Scalar::to_f64),
            e_max: self.e_max.to_f64(),
            active: self.active.clone(),
            case: self.case,
            constants: match &self.constants {
                CaseConstants::A { witness } => CaseConstants::A { witness: *witness },
                CaseConstants::ASym { witness } => CaseConstants::ASym { witness: *witness },
                CaseConstants::B1 { s_x, t_x, s_y, t_y } => CaseConstants::B1 {
                    s_x: s_x.to_f64(),
                    t_x: t_x.to_f64(),
                    s_y: s_y.to_f64(),
                    t_y: t_y.to_f64(),
                },
                CaseConstants::B2 { s, t } => {
                    CaseConstants::B2 { s: s.to_f64(), t: t.to_f64() }
                }
            },
            anchor_x: conv(&self.anchor_x),
            anchor_y: conv(&self.anchor_y),
        }
    }
}

/// The pair score
/// `e(i,j) = (qx_i qy_i (qx_j - qy_j) + qx_j qy_j (qy_i - qx_i)) / (qy_i qx_j - qx_i qy_j)`,
/// defined when `qx_i < qx_j`, `qy_i > qy_j`, `qx_i < qy_i`, `qy_j < qx_j`.
pub fn pair_score<T: Scalar>(qx: &[T], qy: &[T], i: usize, j: usize) -> Result<T, AnalysisError> {
    let admissible = qx[i] < qx[j] && qy[i] > qy[j] && qx[i] < qy[i] && qy[j] < qx[j];
    if !admissible {
        return Err(AnalysisError::InadmissiblePair { i: i + 1, j: j + 1 });
    }
    let num = qx[i].clone() * qy[i].clone() * (qx[j].clone() - qy[j].clone())
        + qx[j].clone() * qy[j].clone() * (qy[i].clone() - qx[i].clone());
    let den = qy[i].clone() * qx[j].clone() - qx[i].clone() * qy[j].clone();
    Ok(num / den)
}

/// `e1 = max_i min(qx_i, qy_i)`, `e2 =` max pair score over admissible pairs
/// (`None` when there are none), and `e_max = max(e1, e2)`.
pub fn compute_emax<T: Scalar>(qx: &[T], qy: &[T]) -> (T, Option<T>, T) {
    let l = qx.len();
    let mut e1 = if qx[0] < qy[0] { qx[0].clone() } else { qy[0].clone() };
    for i in 1..l {
        let mi = if qx[i] < qy[i] { qx[i].clone() } else { qy[i].clone() };
        if mi > e1 {
            e1 = mi;
        }
    }
    let mut e2: Option<T> = None;
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            if let Ok(score) = pair_score(qx, qy, i, j) {
                e2 = Some(match e2 {
                    Some(cur) if cur >= score => cur,
                    _ => score,
                });
            }
        }
    }
    let e_max = match &e2 {
        Some(v) if *v > e1 => v.clone(),
        _ => e1.clone(),
    };
    (e1, e2, e_max)
}

/// Slots achieving `e1` (up to the analysis tolerance).
fn e1_achievers<T: Scalar>(qx: &[T], qy: &[T], e1: &T) -> Vec<usize> {
    let tol = T::analysis_tol();
    (0..qx.len())
        .filter(|&i| {
            let mi = if qx[i] < qy[i] { qx[i].clone() } else { qy[i].clone() };
            (e1.clone() - mi).abs() <= tol
        })
        .collect()
}

/// Active set via one small LP per slot: `i ∈ I` iff the max of `u_i` over
/// `{u >= 0 : u/qx <= 1, u/qy <= 1, sum u = e_max}` is positive. Returns the
/// set together with the per-slot maximizing witnesses.
fn active_set_lps<T: Scalar>(
    qx: &[T],
    qy: &[T],
    e_max: &T,
) -> Result<(Vec<usize>, Vec<Vec<T>>), AnalysisError> {
    let l = qx.len();
    let row_x: Vec<T> = qx.iter().map(|q| T::one() / q.clone()).collect();
    let row_y: Vec<T> = qy.iter().map(|q| T::one() / q.clone()).collect();
    let ones = vec![T::one(); l];
    let mut active = Vec::new();
    let mut witnesses = Vec::new();
    // membership threshold: 0 exact, ~1e-8 for floats
    let thresh = T::feas_tol() * T::from_int(10);
    for i in 0..l {
        let mut obj = vec![T::zero(); l];
        obj[i] = T::one();
        let mut p = LpProblem::new(l, obj);
        p.add_row(row_x.clone(), Relation::Le, T::one());
        p.add_row(row_y.clone(), Relation::Le, T::one());
        p.add_row(ones.clone(), Relation::Eq, e_max.clone());
        let sol = lp_solve(&p).map_err(|e| AnalysisError::LpFailure(e.to_string()))?;
        if sol.status != LpStatus::Optimal {
            return Err(AnalysisError::LpFailure(format!(
                "active-set LP for slot {} returned {:?}",
                i + 1,
                sol.status
            )));
        }
        if sol.objective.unwrap() > thresh {
            active.push(i);
            witnesses.push(sol.witness.unwrap());
        }
    }
    Ok((active, witnesses))
}

/// Classify a pair of positive mass vectors and assemble the full report.
/// `alpha` tags block analyses; `m` is the underlying alphabet size.
pub fn classify_masses<T: Scalar>(
    qx: &[T],
    qy: &[T],
    alpha: Option<Vec<u8>>,
    m: usize,
) -> Result<Analysis<T>, AnalysisError> {
    let l = qx.len();
    let tol = T::analysis_tol();
    let (e1, e2, e_max) = compute_emax(qx, qy);
    let achievers = e1_achievers(qx, qy, &e1);

    // Criterion: e1 < e2 forces b2; otherwise an achiever with unequal
    // masses forces case a (X-limited preferred) or its symmetric version;
    // otherwise e1 > e2 gives b1 and e1 = e2 gives b2.
    let e2_gt_e1 = matches!(&e2, Some(v) if *v > e1);
    let unequal: Vec<usize> = achievers
        .iter()
        .copied()
        .filter(|&i| (qx[i].clone() - qy[i].clone()).abs() > tol)
        .collect();
    let case = if e2_gt_e1 {
        CaseTag::CaseB2
    } else if !unequal.is_empty() {
        if unequal.iter().any(|&i| qx[i] < qy[i]) {
            CaseTag::CaseA
        } else {
            CaseTag::CaseASymmetric
        }
    } else if matches!(&e2, Some(v) if (v.clone() - e1.clone()).abs() <= tol) {
        CaseTag::CaseB2
    } else {
        CaseTag::CaseB1
    };

    let (active, witnesses) = active_set_lps(qx, qy, &e_max)?;
    if active.is_empty() {
        return Err(AnalysisError::Internal("empty active set".into()));
    }
    cross_check_active(qx, qy, &e_max, case, &active)?;

    // u^I: average of the per-slot maximizers; positive on all of I.
    let size = T::from_int(active.len() as i64);
    let mut u_avg = vec![T::zero(); l];
    for w in &witnesses {
        for (k, v) in w.iter().enumerate() {
            u_avg[k] = u_avg[k].clone() + v.clone() / size.clone();
        }
    }

    let (anchor_x, anchor_y) = build_anchor(qx, qy, &active, &u_avg, case)?;
    let constants = case_constants(qx, qy, &e_max, &active, case)?;

    Ok(Analysis {
        qx: qx.to_vec(),
        qy: qy.to_vec(),
        alpha,
        m,
        e1,
        e2,
        e_max,
        active,
        case,
        constants,
        anchor_x,
        anchor_y,
    })
}

/// The closed forms for `I` available in cases a and b1, used to validate
/// the LP route.
fn cross_check_active<T: Scalar>(
    qx: &[T],
    qy: &[T],
    e_max: &T,
    case: CaseTag,
    active: &[usize],
) -> Result<(), AnalysisError> {
    let tol = T::analysis_tol();
    let expected: Option<Vec<usize>> = match case {
        CaseTag::CaseA => Some(
            (0..qx.len()).filter(|&i| (qx[i].clone() - e_max.clone()).abs() <= tol).collect(),
        ),
        CaseTag::CaseASymmetric => Some(
            (0..qy.len()).filter(|&i| (qy[i].clone() - e_max.clone()).abs() <= tol).collect(),
        ),
        CaseTag::CaseB1 => Some(
            (0..qx.len())
                .filter(|&i| {
                    (qx[i].clone() - e_max.clone()).abs() <= tol
                        && (qy[i].clone() - e_max.clone()).abs() <= tol
                })
                .collect(),
        ),
        CaseTag::CaseB2 => None,
    };
    if let Some(expected) = expected {
        if expected != active {
            return Err(AnalysisError::Internal(format!(
                "active set {active:?} disagrees with the case closed form {expected:?}"
            )));
        }
    }
    Ok(())
}

/// Translate `u^I` into the anchor point of the argmax set: divide by the
/// tight marginal masses and spread any leftover mass of a slack marginal
/// uniformly over `I`.
fn build_anchor<T: Scalar>(
    qx: &[T],
    qy: &[T],
    active: &[usize],
    u_avg: &[T],
    case: CaseTag,
) -> Result<(Vec<T>, Vec<T>), AnalysisError> {
    let l = qx.len();
    let mut ax = vec![T::zero(); l];
    let mut ay = vec![T::zero(); l];
    for &i in active {
        ax[i] = u_avg[i].clone() / qx[i].clone();
        ay[i] = u_avg[i].clone() / qy[i].clone();
    }
    let spread = |a: &mut Vec<T>| -> Result<(), AnalysisError> {
        let sum = a.iter().cloned().fold(T::zero(), |acc, v| acc + v);
        let slack = T::one() - sum;
        if slack < T::zero() - T::feas_tol() {
            return Err(AnalysisError::Internal("anchor mass exceeds one".into()));
        }
        let share = slack / T::from_int(active.len() as i64);
        for &i in active {
            a[i] = a[i].clone() + share.clone();
        }
        Ok(())
    };
    match case {
        CaseTag::CaseA => spread(&mut ay)?,
        CaseTag::CaseASymmetric => spread(&mut ax)?,
        // Case b: both constraints are tight for every maximizer, so both
        // sides already sum to one; only a rounding check remains.
        CaseTag::CaseB1 | CaseTag::CaseB2 => {
            for a in [&ax, &ay] {
                let sum = a.iter().cloned().fold(T::zero(), |acc, v| acc + v);
                if (sum - T::one()).abs() > T::feas_tol() * T::from_int(100) {
                    return Err(AnalysisError::Internal("case-b anchor does not sum to one".into()));
                }
            }
        }
    }
    Ok((ax, ay))
}

fn case_constants<T: Scalar>(
    qx: &[T],
    qy: &[T],
    e_max: &T,
    active: &[usize],
    case: CaseTag,
) -> Result<CaseConstants<T>, AnalysisError> {
    match case {
        CaseTag::CaseA => {
            let witness = active
                .iter()
                .copied()
                .find(|&i| qy[i] > qx[i])
                .ok_or_else(|| AnalysisError::Internal("case a without dominating slot".into()))?;
            Ok(CaseConstants::A { witness })
        }
        CaseTag::CaseASymmetric => {
            let witness = active
                .iter()
                .copied()
                .find(|&i| qx[i] > qy[i])
                .ok_or_else(|| AnalysisError::Internal("case a-sym without dominating slot".into()))?;
            Ok(CaseConstants::ASym { witness })
        }
        CaseTag::CaseB1 => {
            let ratio = |qa: &[T], qb: &[T], i: usize| {
                // qb_i (qa_i - e_max) / (e_max (qa_i - qb_i))
                (qb[i].clone() * (qa[i].clone() - e_max.clone()))
                    / (e_max.clone() * (qa[i].clone() - qb[i].clone()))
            };
            let best = |qa: &[T], qb: &[T]| -> T {
                let mut s = T::zero();
                for i in 0..qa.len() {
                    if active.binary_search(&i).is_ok() {
                        continue;
                    }
                    if qa[i] >= *e_max {
                        let r = ratio(qa, qb, i);
                        if r > s {
                            s = r;
                        }
                    }
                }
                s
            };
            let s_x = best(qx, qy);
            let s_y = best(qy, qx);
            for v in [&s_x, &s_y] {
                if *v < T::zero() || *v > T::one() {
                    return Err(AnalysisError::Internal("case-b1 constant outside [0, 1]".into()));
                }
            }
            Ok(CaseConstants::B1 {
                t_x: T::one() - s_x.clone(),
                t_y: T::one() - s_y.clone(),
                s_x,
                s_y,
            })
        }
        CaseTag::CaseB2 => {
            let (s, t) = solve_span(qx, qy, active)?;
            Ok(CaseConstants::B2 { s, t })
        }
    }
}

/// Solve `s / qx_i + t / qy_i = 1` on two independent slots of `I` and
/// verify the residual on all of `I` (the span property of case b2).
fn solve_span<T: Scalar>(qx: &[T], qy: &[T], active: &[usize]) -> Result<(T, T), AnalysisError> {
    let pair = find_independent_pair(qx, qy, active)
        .ok_or_else(|| AnalysisError::Internal("case b2 with dependent reciprocal masses".into()))?;
    let (i, j) = pair;
    let (a, b) = (T::one() / qx[i].clone(), T::one() / qy[i].clone());
    let (c, d) = (T::one() / qx[j].clone(), T::one() / qy[j].clone());
    let det = a.clone() * d.clone() - c.clone() * b.clone();
    let s = (d - b) / det.clone();
    let t = (a - c) / det;
    // residual tolerance: exact zero in rational mode, 1e-10 for floats
    let tol = T::feas_tol() / T::from_int(10);
    for &k in active {
        let residual = s.clone() / qx[k].clone() + t.clone() / qy[k].clone() - T::one();
        if residual.abs() > tol {
            return Err(AnalysisError::InconsistentSpan { residual: residual.to_f64() });
        }
    }
    Ok((s, t))
}

/// First pair of active slots whose reciprocal-mass 2x2 minor is
/// nonsingular. Deterministic, so grids built from it are nested across
/// resolutions.
pub(crate) fn find_independent_pair<T: Scalar>(
    qx: &[T],
    qy: &[T],
    active: &[usize],
) -> Option<(usize, usize)> {
    let thresh = T::feas_tol();
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            let det = (T::one() / qx[i].clone()) * (T::one() / qy[j].clone())
                - (T::one() / qx[j].clone()) * (T::one() / qy[i].clone());
            if det.abs() > thresh {
                return Some((i, j));
            }
        }
    }
    None
}

/// Dual-mode analysis report: exact when the instance is exact.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisReport {
    Exact(Analysis<BigRational>),
    Float(Analysis<f64>),
}

impl AnalysisReport {
    pub fn case(&self) -> CaseTag {
        match self {
            AnalysisReport::Exact(a) => a.case,
            AnalysisReport::Float(a) => a.case,
        }
    }

    pub fn to_f64(&self) -> Analysis<f64> {
        match self {
            AnalysisReport::Exact(a) => a.to_f64(),
            AnalysisReport::Float(a) => a.clone(),
        }
    }

    pub fn exact(&self) -> Option<&Analysis<BigRational>> {
        match self {
            AnalysisReport::Exact(a) => Some(a),
            AnalysisReport::Float(_) => None,
        }
    }

    pub fn e_max_f64(&self) -> f64 {
        match self {
            AnalysisReport::Exact(a) => a.e_max.to_f64(),
            AnalysisReport::Float(a) => a.e_max,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnalysisReport::Exact(a) => analysis_json(a, "exact", |v| json!(rational_string(v))),
            AnalysisReport::Float(a) => analysis_json(a, "float", |v| json!(v)),
        }
    }
}

fn analysis_json<T: Scalar>(a: &Analysis<T>, mode: &str, lit: impl Fn(&T) -> Value) -> Value {
    let vecs = |v: &[T]| Value::Array(v.iter().map(&lit).collect());
    let constants = match &a.constants {
        CaseConstants::A { witness } => json!({ "witness": witness + 1 }),
        CaseConstants::ASym { witness } => json!({ "witness": witness + 1 }),
        CaseConstants::B1 { s_x, t_x, s_y, t_y } => json!({
            "s_x": lit(s_x), "t_x": lit(t_x), "s_y": lit(s_y), "t_y": lit(t_y),
        }),
        CaseConstants::B2 { s, t } => json!({ "s": lit(s), "t": lit(t) }),
    };
    json!({
        "mode": mode,
        "case": a.case.name(),
        "e1": lit(&a.e1),
        "e2": a.e2.as_ref().map(&lit),
        "e_max": lit(&a.e_max),
        "active": a.active.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "constants": constants,
        "anchor": { "x": vecs(&a.anchor_x), "y": vecs(&a.anchor_y) },
        "alpha": a.alpha.clone(),
    })
}

/// Classify an instance, exactly when it was given as fractions.
pub fn classify_case(inst: &Instance) -> Result<AnalysisReport, AnalysisError> {
    match inst.masses_exact() {
        Some((qx, qy)) => Ok(AnalysisReport::Exact(classify_masses(&qx, &qy, None, inst.m())?)),
        None => {
            let (qx, qy) = inst.masses_f64();
            Ok(AnalysisReport::Float(classify_masses(&qx, &qy, None, inst.m())?))
        }
    }
}

/// Redo the whole analysis on the slot masses `p ∘ alpha` and check the two
/// exact consistency identities: the limit mean is unchanged and the active
/// slots are exactly the preimages of the active letters.
pub fn blocks_analysis(inst: &Instance, alpha: &BlockOrder) -> Result<AnalysisReport, AnalysisError> {
    if alpha.m() != inst.m() {
        return Err(AnalysisError::NotOnto);
    }
    let base = classify_case(inst)?;
    match (&base, inst.masses_exact()) {
        (AnalysisReport::Exact(base), Some((px, py))) => {
            let qx: Vec<BigRational> =
                alpha.slots().iter().map(|&s| px[s as usize - 1].clone()).collect();
            let qy: Vec<BigRational> =
                alpha.slots().iter().map(|&s| py[s as usize - 1].clone()).collect();
            let block =
                classify_masses(&qx, &qy, Some(alpha.slots().to_vec()), inst.m())?;
            check_block_consistency(base, &block, alpha, BigRational::analysis_tol())?;
            Ok(AnalysisReport::Exact(block))
        }
        _ => {
            let base_f = base.to_f64();
            let (px, py) = inst.masses_f64();
            let qx: Vec<f64> = alpha.slots().iter().map(|&s| px[s as usize - 1]).collect();
            let qy: Vec<f64> = alpha.slots().iter().map(|&s| py[s as usize - 1]).collect();
            let block = classify_masses(&qx, &qy, Some(alpha.slots().to_vec()), inst.m())?;
            check_block_consistency(&base_f, &block, alpha, 1e-9)?;
            Ok(AnalysisReport::Float(block))
        }
    }
}

fn check_block_consistency<T: Scalar>(
    base: &Analysis<T>,
    block: &Analysis<T>,
    alpha: &BlockOrder,
    tol: T,
) -> Result<(), AnalysisError> {
    if (base.e_max.clone() - block.e_max.clone()).abs() > tol {
        return Err(AnalysisError::Internal(format!(
            "block e_max {} differs from instance e_max {}",
            block.e_max, base.e_max
        )));
    }
    let preimage: Vec<usize> = (0..alpha.len())
        .filter(|&k| base.active.binary_search(&(alpha.letter(k) as usize - 1)).is_ok())
        .collect();
    if preimage != block.active {
        return Err(AnalysisError::Internal(format!(
            "block active set {:?} is not the preimage {:?}",
            block.active, preimage
        )));
    }
    Ok(())
}

/// Bucket a finitely-supported "large alphabet" pmf pair: compute `e_max` of
/// the full instance, find the smallest cut `m` whose tails (including `m`)
/// fall strictly below it on both marginals, and merge letters `>= m`.
pub fn truncate_alphabet(px: &Pmf, py: &Pmf) -> Result<(usize, Instance), AnalysisError> {
    if px.len() != py.len() {
        return Err(AnalysisError::Model(ModelError::LengthMismatch(px.len(), py.len())));
    }
    match (px.exact(), py.exact()) {
        (Some(ex), Some(ey)) => {
            let (_, _, e_max) = compute_emax(&ex.to_vec(), &ey.to_vec());
            let m = find_cut(ex, ey, &e_max)?;
            let bucket = |p: &[BigRational]| {
                let mut out: Vec<BigRational> = p[..m - 1].to_vec();
                out.push(p[m - 1..].iter().cloned().sum());
                out
            };
            let inst = Instance::new(
                Pmf::from_rationals(bucket(ex))?,
                Pmf::from_rationals(bucket(ey))?,
            )?;
            Ok((m, inst))
        }
        _ => {
            let (fx, fy) = (px.probs().to_vec(), py.probs().to_vec());
            let (_, _, e_max) = compute_emax(&fx, &fy);
            let m = find_cut(&fx, &fy, &e_max)?;
            let bucket = |p: &[f64]| {
                let mut out = p[..m - 1].to_vec();
                out.push(p[m - 1..].iter().sum());
                out
            };
            let inst =
                Instance::new(Pmf::from_f64s(&bucket(&fx))?, Pmf::from_f64s(&bucket(&fy))?)?;
            Ok((m, inst))
        }
    }
}

fn find_cut<T: Scalar>(px: &[T], py: &[T], e_max: &T) -> Result<usize, AnalysisError> {
    let big = px.len();
    for m in 2..=big {
        let tail = |p: &[T]| p[m - 1..].iter().cloned().fold(T::zero(), |a, v| a + v);
        if tail(px) < *e_max && tail(py) < *e_max {
            return Ok(m);
        }
    }
    Err(AnalysisError::NoValidCut)
}

/// Evaluate `f(lambda) = sum_i min(qx_i lx_i, qy_i ly_i)`.
pub fn f_value<T: Scalar>(qx: &[T], qy: &[T], lx: &[T], ly: &[T]) -> T {
    let mut total = T::zero();
    for i in 0..qx.len() {
        let vx = qx[i].clone() * lx[i].clone();
        let vy = qy[i].clone() * ly[i].clone();
        total = total + if vx < vy { vx } else { vy };
    }
    total
}
