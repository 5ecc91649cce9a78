//! Small dense linear-programming solver: two-phase simplex with Bland's
//! rule, generic over the scalar type so the analysis layer can run it in
//! exact rational arithmetic.
//!
//! Bland's rule makes the pivot sequence (and hence the witness) fully
//! deterministic and cycle-free. Problems here are tiny (tens of variables),
//! so the full-tableau form is plenty.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("iteration limit exceeded ({0} pivots)")]
    IterationLimit(usize),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `maximize c.x` subject to rows `a.x (<=|=|>=) b`; each variable is either
/// nonnegative or free.
#[derive(Debug, Clone)]
pub struct LpProblem<T> {
    pub num_vars: usize,
    pub objective: Vec<T>,
    pub rows: Vec<(Vec<T>, Relation, T)>,
    pub nonneg: Vec<bool>,
}

impl<T: Scalar> LpProblem<T> {
    pub fn new(num_vars: usize, objective: Vec<T>) -> Self {
        LpProblem { num_vars, objective, rows: Vec::new(), nonneg: vec![true; num_vars] }
    }

    pub fn set_free(&mut self, var: usize) {
        self.nonneg[var] = false;
    }

    pub fn add_row(&mut self, coeffs: Vec<T>, rel: Relation, rhs: T) {
        self.rows.push((coeffs, rel, rhs));
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Objective value at the witness (maximization), when optimal.
    pub objective: Option<T>,
    /// Values of the original variables, when optimal.
    pub witness: Option<Vec<T>>,
}

struct Tableau<T> {
    a: Vec<Vec<T>>,
    b: Vec<T>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col].clone();
        for v in self.a[row].iter_mut() {
            *v = v.clone() / p.clone();
        }
        self.b[row] = self.b[row].clone() / p;
        for r in 0..self.a.len() {
            if r == row {
                continue;
            }
            let factor = self.a[r][col].clone();
            if factor.is_zero() {
                continue;
            }
            for c in 0..self.ncols {
                let delta = factor.clone() * self.a[row][c].clone();
                self.a[r][c] = self.a[r][c].clone() - delta;
            }
            let delta = factor * self.b[row].clone();
            self.b[r] = self.b[r].clone() - delta;
        }
        self.basis[row] = col;
    }

    /// Reduced cost of column `col` for minimizing `cost`.
    fn reduced_cost(&self, cost: &[T], col: usize) -> T {
        let mut z = T::zero();
        for (r, &bc) in self.basis.iter().enumerate() {
            if !cost[bc].is_zero() && !self.a[r][col].is_zero() {
                z = z + cost[bc].clone() * self.a[r][col].clone();
            }
        }
        cost[col].clone() - z
    }

    /// Minimize `cost` with Bland's rule over columns `0..limit`.
    /// Returns false when unbounded.
    fn run(&mut self, cost: &[T], limit: usize, max_iters: usize) -> Result<bool, LpError> {
        let tol = T::feas_tol();
        for iter in 0..=max_iters {
            if iter == max_iters {
                return Err(LpError::IterationLimit(max_iters));
            }
            // Bland: first column with negative reduced cost.
            let mut entering = None;
            for c in 0..limit {
                if self.basis.contains(&c) {
                    continue;
                }
                if self.reduced_cost(cost, c) < T::zero() - tol.clone() {
                    entering = Some(c);
                    break;
                }
            }
            let Some(col) = entering else { return Ok(true) };
            // Ratio test; ties broken by smallest basic-variable index.
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.a.len() {
                if self.a[r][col] > tol.clone() {
                    let ratio = self.b[r].clone() / self.a[r][col].clone();
                    let better = match &leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio.clone()
                                || (ratio == lratio.clone() && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else { return Ok(false) };
            self.pivot(row, col);
        }
        unreachable!()
    }
}

/// Solve a small LP; statuses (not errors) report unbounded/infeasible.
pub fn lp_solve<T: Scalar>(p: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
    if p.objective.len() != p.num_vars || p.nonneg.len() != p.num_vars {
        return Err(LpError::Malformed("objective/sign lengths".into()));
    }
    for (coeffs, _, _) in &p.rows {
        if coeffs.len() != p.num_vars {
            return Err(LpError::Malformed("row length".into()));
        }
    }
    let tol = T::feas_tol();

    // Expand free variables into positive/negative parts.
    // col_of[j] = (plus column, optional minus column)
    let mut col_of = Vec::with_capacity(p.num_vars);
    let mut nstruct = 0usize;
    for j in 0..p.num_vars {
        if p.nonneg[j] {
            col_of.push((nstruct, None));
            nstruct += 1;
        } else {
            col_of.push((nstruct, Some(nstruct + 1)));
            nstruct += 2;
        }
    }
    let nrows = p.rows.len();
    let nslack = p.rows.iter().filter(|(_, rel, _)| *rel != Relation::Eq).count();
    let ncols = nstruct + nslack + nrows; // artificials appended last, one per row at most
    let mut a = vec![vec![T::zero(); ncols]; nrows];
    let mut b = vec![T::zero(); nrows];

    let mut slack_idx = nstruct;
    let mut slack_col = vec![None; nrows];
    for (r, (coeffs, rel, rhs)) in p.rows.iter().enumerate() {
        for j in 0..p.num_vars {
            let (cp, cm) = col_of[j];
            a[r][cp] = coeffs[j].clone();
            if let Some(cm) = cm {
                a[r][cm] = T::zero() - coeffs[j].clone();
            }
        }
        b[r] = rhs.clone();
        match rel {
            Relation::Le => {
                a[r][slack_idx] = T::one();
                slack_col[r] = Some(slack_idx);
                slack_idx += 1;
            }
            Relation::Ge => {
                a[r][slack_idx] = T::zero() - T::one();
                slack_col[r] = Some(slack_idx);
                slack_idx += 1;
            }
            Relation::Eq => {}
        }
        if b[r] < T::zero() {
            for v in a[r].iter_mut() {
                *v = T::zero() - v.clone();
            }
            b[r] = T::zero() - b[r].clone();
        }
    }

    // Basis: slack column when it survived the sign flip with +1, artificial
    // otherwise.
    let art_base = nstruct + nslack;
    let mut basis = vec![0usize; nrows];
    let mut arts = Vec::new();
    for r in 0..nrows {
        match slack_col[r] {
            Some(sc) if a[r][sc] == T::one() => basis[r] = sc,
            _ => {
                let col = art_base + r;
                a[r][col] = T::one();
                basis[r] = col;
                arts.push(col);
            }
        }
    }

    let mut tab = Tableau { a, b, basis, ncols };
    let max_iters = 2000 + 50 * (nrows + ncols);

    if !arts.is_empty() {
        let mut cost1 = vec![T::zero(); ncols];
        for &c in &arts {
            cost1[c] = T::one();
        }
        tab.run(&cost1, ncols, max_iters)?;
        let mut infeas = T::zero();
        for (r, &bc) in tab.basis.iter().enumerate() {
            if bc >= art_base {
                infeas = infeas + tab.b[r].clone();
            }
        }
        if infeas > tol.clone() + tol.clone() {
            return Ok(LpSolution { status: LpStatus::Infeasible, objective: None, witness: None });
        }
        // Drive residual artificials out of the basis when possible.
        for r in 0..nrows {
            if tab.basis[r] >= art_base {
                if let Some(c) = (0..art_base).find(|&c| tab.a[r][c].abs() > tol) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    // Phase 2: minimize the negated objective over non-artificial columns.
    let mut cost2 = vec![T::zero(); ncols];
    for j in 0..p.num_vars {
        let (cp, cm) = col_of[j];
        cost2[cp] = T::zero() - p.objective[j].clone();
        if let Some(cm) = cm {
            cost2[cm] = p.objective[j].clone();
        }
    }
    let bounded = tab.run(&cost2, art_base, max_iters)?;
    if !bounded {
        return Ok(LpSolution { status: LpStatus::Unbounded, objective: None, witness: None });
    }

    let mut expanded = vec![T::zero(); ncols];
    for (r, &bc) in tab.basis.iter().enumerate() {
        expanded[bc] = tab.b[r].clone();
    }
    let mut witness = Vec::with_capacity(p.num_vars);
    for j in 0..p.num_vars {
        let (cp, cm) = col_of[j];
        let mut v = expanded[cp].clone();
        if let Some(cm) = cm {
            v = v - expanded[cm].clone();
        }
        witness.push(v);
    }
    let mut obj = T::zero();
    for j in 0..p.num_vars {
        obj = obj + p.objective[j].clone() * witness[j].clone();
    }
    Ok(LpSolution { status: LpStatus::Optimal, objective: Some(obj), witness: Some(witness) })
}
