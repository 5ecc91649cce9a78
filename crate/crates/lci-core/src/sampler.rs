//! Monte Carlo sampling of the limiting laws: correlated Brownian paths with
//! the multinomial increment covariance, evaluation of the case-a and case-b
//! functionals on polytope grids, and the replicated samplers.

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{grid_j, grid_k, grid_near, Analysis, AnalysisError, CaseTag};
use crate::mfunc::{m_closed, MfuncError, Perturbation};
use crate::model::{Instance, RngConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("lambda is not in the split polytope J: {0}")]
    PointNotInJ(String),
    #[error("lambda is not in the argmax set K: {0}")]
    PointNotInK(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Mfunc(#[from] MfuncError),
}

const SALT_MARGINAL_X: u64 = 0x4d41_5247_5f58;
const SALT_MARGINAL_Y: u64 = 0x4d41_5247_5f59;

/// Discretized sample paths of the two centered count-process limits.
///
/// `value(marginal, letter, t)` linearly interpolates the cumulative path
/// `G_i(t) = sqrt(p_i (1 - p_i)) B_i(t)`; per-step increments have the
/// multinomial covariance `(diag(p) - p p^T) / steps`, so the coordinates
/// sum to zero at every time.
#[derive(Debug, Clone)]
pub struct BrownianGrid {
    steps: usize,
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginal {
    X,
    Y,
}

impl BrownianGrid {
    pub fn steps(&self) -> usize {
        self.steps
    }

    fn path(&self, marginal: Marginal) -> &[Vec<f64>] {
        match marginal {
            Marginal::X => &self.x,
            Marginal::Y => &self.y,
        }
    }

    /// Interpolated path value; `letter` is 0-based.
    pub fn value(&self, marginal: Marginal, letter: usize, t: f64) -> f64 {
        let path = &self.path(marginal)[letter];
        let n = self.steps;
        let pos = (t.clamp(0.0, 1.0)) * n as f64;
        let k = (pos.floor() as usize).min(n - 1);
        let frac = pos - k as f64;
        path[k] + frac * (path[k + 1] - path[k])
    }

    pub fn increment(&self, marginal: Marginal, letter: usize, t0: f64, t1: f64) -> f64 {
        self.value(marginal, letter, t1) - self.value(marginal, letter, t0)
    }
}

/// Generate one correlated path per marginal, each from its own derived
/// stream (so case-a sampling can skip the unused marginal entirely without
/// disturbing the other).
pub fn sample_brownian(inst: &Instance, steps: usize, rng: &RngConfig) -> BrownianGrid {
    let (px, py) = inst.masses_f64();
    let mut rx = rng.substream(SALT_MARGINAL_X).rng();
    let mut ry = rng.substream(SALT_MARGINAL_Y).rng();
    BrownianGrid {
        steps,
        x: sample_marginal_path(&px, steps, &mut rx),
        y: sample_marginal_path(&py, steps, &mut ry),
    }
}

/// Cumulative paths for one marginal. Each step draws i.i.d. standard
/// normals `g` and maps them through
/// `W_i = sqrt(p_i) (g_i - sqrt(p_i) Σ_j sqrt(p_j) g_j)`,
/// which has covariance `p_i (δ_ij - p_j)` without factorizing the singular
/// multinomial matrix; scaling by `sqrt(1/steps)` gives the increments.
fn sample_marginal_path(p: &[f64], steps: usize, rng: &mut ChaCha12Rng) -> Vec<Vec<f64>> {
    let m = p.len();
    let roots: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
    let dt_root = (1.0 / steps as f64).sqrt();
    let mut path = vec![vec![0.0f64; steps + 1]; m];
    let mut g = vec![0.0f64; m];
    for k in 0..steps {
        let mut mix = 0.0;
        for gi in g.iter_mut() {
            *gi = StandardNormal.sample(rng);
        }
        for i in 0..m {
            mix += roots[i] * g[i];
        }
        for i in 0..m {
            let w = roots[i] * (g[i] - roots[i] * mix);
            path[i][k + 1] = path[i][k] + w * dt_root;
        }
    }
    path
}

const LAMBDA_TOL: f64 = 1e-7;

fn check_lambda_shape(an: &Analysis<f64>, lam: &[f64]) -> Result<(), String> {
    if lam.len() != an.len() {
        return Err(format!("length {} != {}", lam.len(), an.len()));
    }
    let sum: f64 = lam.iter().sum();
    if (sum - 1.0).abs() > LAMBDA_TOL {
        return Err(format!("coordinates sum to {sum}"));
    }
    for (i, &v) in lam.iter().enumerate() {
        if v < -LAMBDA_TOL {
            return Err(format!("negative coordinate {v} at slot {}", i + 1));
        }
        if !an.is_active(i) && v.abs() > LAMBDA_TOL {
            return Err(format!("mass {v} on inactive slot {}", i + 1));
        }
    }
    Ok(())
}

/// Case-a functional: sum over active slots of the limiting marginal's path
/// increments between consecutive split points.
pub fn eval_za(grid: &BrownianGrid, an: &Analysis<f64>, lam: &[f64]) -> Result<f64, SamplerError> {
    let marginal = match an.case {
        CaseTag::CaseA => Marginal::X,
        CaseTag::CaseASymmetric => Marginal::Y,
        _ => {
            return Err(SamplerError::Analysis(AnalysisError::WrongCase {
                expected: "case a",
                got: an.case.name(),
            }))
        }
    };
    check_lambda_shape(an, lam).map_err(SamplerError::PointNotInJ)?;
    let other = match marginal {
        Marginal::X => &an.qy,
        Marginal::Y => &an.qx,
    };
    let lhs: f64 = an.active.iter().map(|&i| lam[i] / other[i]).sum();
    if lhs > 1.0 / an.e_max + LAMBDA_TOL {
        return Err(SamplerError::PointNotInJ(format!(
            "split constraint {lhs} > {}",
            1.0 / an.e_max
        )));
    }
    Ok(eval_za_unchecked(grid, an, marginal, lam))
}

fn eval_za_unchecked(
    grid: &BrownianGrid,
    an: &Analysis<f64>,
    marginal: Marginal,
    lam: &[f64],
) -> f64 {
    let mut total = 0.0;
    let mut t = 0.0;
    for i in 0..an.len() {
        let t1 = t + lam[i];
        if an.is_active(i) {
            total += grid.increment(marginal, an.letter(i), t, t1);
        }
        t = t1;
    }
    total
}

/// Case-b functional: read the perturbation off the two paths at the coupled
/// split points and apply the closed form of the correction functional.
pub fn eval_zb(
    grid: &BrownianGrid,
    an: &Analysis<f64>,
    lam_x: &[f64],
    lam_y: &[f64],
) -> Result<f64, SamplerError> {
    if !an.case.is_case_b() {
        return Err(SamplerError::Analysis(AnalysisError::WrongCase {
            expected: "case b",
            got: an.case.name(),
        }));
    }
    check_lambda_shape(an, lam_x).map_err(SamplerError::PointNotInK)?;
    check_lambda_shape(an, lam_y).map_err(SamplerError::PointNotInK)?;
    for &i in &an.active {
        if (an.qx[i] * lam_x[i] - an.qy[i] * lam_y[i]).abs() > LAMBDA_TOL {
            return Err(SamplerError::PointNotInK(format!(
                "coupling violated at slot {}",
                i + 1
            )));
        }
    }
    let nu = path_perturbation(grid, an, lam_x, lam_y);
    Ok(m_closed(an, &nu)?)
}

fn path_perturbation(
    grid: &BrownianGrid,
    an: &Analysis<f64>,
    lam_x: &[f64],
    lam_y: &[f64],
) -> Perturbation {
    let l = an.len();
    let mut nu_x = vec![0.0; l];
    let mut nu_y = vec![0.0; l];
    let (mut tx, mut ty) = (0.0, 0.0);
    for i in 0..l {
        let (ex, ey) = (tx + lam_x[i], ty + lam_y[i]);
        if an.is_active(i) {
            nu_x[i] = grid.increment(Marginal::X, an.letter(i), tx, ex);
            nu_y[i] = grid.increment(Marginal::Y, an.letter(i), ty, ey);
        }
        tx = ex;
        ty = ey;
    }
    Perturbation::new(nu_x, nu_y, an).expect("support by construction")
}

/// Monte Carlo parameters of the limit sampler.
#[derive(Debug, Clone, Copy)]
pub struct LimitParams {
    /// Brownian path steps `N`.
    pub path_steps: usize,
    /// Polytope grid resolution `r` of the global scan.
    pub grid_r: usize,
    /// Local refinement around each replicate's argmax: the grid step is
    /// halved repeatedly until it reaches the path's breakpoint scale. The
    /// discretized path is piecewise linear, so this removes the grid bias
    /// of the maximization and leaves only the path-resolution bias.
    pub refine: bool,
}

impl Default for LimitParams {
    fn default() -> Self {
        LimitParams { path_steps: 4096, grid_r: 64, refine: true }
    }
}

/// I.i.d. draws from a limiting law, with the metadata needed to reproduce
/// them bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSampleSet {
    pub samples: Vec<f64>,
    pub case: CaseTag,
    pub path_steps: usize,
    pub grid_r: usize,
    pub reps: usize,
    pub seed: u64,
    pub stream: u64,
}

/// Sample the limiting law of a plain (non-block) analysis.
pub fn sample_limit(
    an: &Analysis<f64>,
    params: &LimitParams,
    reps: usize,
    rng: &RngConfig,
) -> Result<LimitSampleSet, SamplerError> {
    sample_limit_engine(an, params, reps, rng)
}

/// Sample the limiting law of a block-order analysis. Slots sharing a letter
/// read disjoint stretches of the same Brownian coordinate.
pub fn sample_limit_blocks(
    an: &Analysis<f64>,
    params: &LimitParams,
    reps: usize,
    rng: &RngConfig,
) -> Result<LimitSampleSet, SamplerError> {
    sample_limit_engine(an, params, reps, rng)
}

/// Per-slot time spans of one grid point on one marginal: (letter, t0, t1).
type Spans = Vec<(usize, f64, f64)>;

struct PreparedPoint {
    x: Spans,
    y: Option<Spans>,
    lam_a: Vec<f64>,
}

fn spans_for(an: &Analysis<f64>, lam: &[f64]) -> Spans {
    let mut out = Vec::with_capacity(an.active.len());
    let mut t = 0.0;
    for i in 0..an.len() {
        let t1 = t + lam[i];
        if an.is_active(i) {
            out.push((an.letter(i), t, t1));
        }
        t = t1;
    }
    out
}

fn prepare_points(an: &Analysis<f64>, r: usize) -> Result<Vec<PreparedPoint>, SamplerError> {
    let grid = if an.case.is_case_a() { grid_j(an, r)? } else { grid_k(an, r)? };
    let mut out = Vec::new();
    for p in grid.points {
        out.push(PreparedPoint {
            x: spans_for(an, &p.lam_a),
            y: p.lam_b.as_ref().map(|ly| spans_for(an, ly)),
            lam_a: p.lam_a,
        });
    }
    Ok(out)
}

/// Letter-level pmfs recovered from the slot masses (identity when the
/// analysis is not a block analysis).
fn letter_pmfs(an: &Analysis<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut px = vec![0.0; an.m];
    let mut py = vec![0.0; an.m];
    for k in 0..an.len() {
        px[an.letter(k)] = an.qx[k];
        py[an.letter(k)] = an.qy[k];
    }
    (px, py)
}

fn sample_limit_engine(
    an: &Analysis<f64>,
    params: &LimitParams,
    reps: usize,
    rng: &RngConfig,
) -> Result<LimitSampleSet, SamplerError> {
    let points = prepare_points(an, params.grid_r)?;
    let (px, py) = letter_pmfs(an);
    let need_y = an.case.is_case_b();
    let use_x = an.case != CaseTag::CaseASymmetric;

    let samples: Vec<f64> = if points.len() == 1 {
        // Degenerate polytope: the functional is a fixed linear functional
        // of finitely many independent increments (consecutive spans never
        // overlap), so draw them exactly instead of discretizing a path.
        let point = &points[0];
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let rcfg = rng.substream(rep as u64);
                exact_single_point(an, point, &px, &py, use_x, need_y, &rcfg)
            })
            .collect()
    } else {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let rcfg = rng.substream(rep as u64);
                let grid = BrownianGrid {
                    steps: params.path_steps,
                    x: if use_x {
                        let mut rx = rcfg.substream(SALT_MARGINAL_X).rng();
                        sample_marginal_path(&px, params.path_steps, &mut rx)
                    } else {
                        Vec::new()
                    },
                    y: if need_y || !use_x {
                        let mut ry = rcfg.substream(SALT_MARGINAL_Y).rng();
                        sample_marginal_path(&py, params.path_steps, &mut ry)
                    } else {
                        Vec::new()
                    },
                };
                let (mut best, mut best_lam) = (f64::NEG_INFINITY, None);
                for p in &points {
                    let v = eval_prepared(&grid, an, p);
                    if v > best {
                        best = v;
                        best_lam = Some(&p.lam_a);
                    }
                }
                if params.refine {
                    if let Some(center) = best_lam {
                        let mut center = center.clone();
                        let mut rr = params.grid_r;
                        while rr < 2 * params.path_steps {
                            rr *= 2;
                            let radius = 2.5 / rr as f64;
                            for p in grid_near(an, rr, &center, radius) {
                                let prep = PreparedPoint {
                                    x: spans_for(an, &p.lam_a),
                                    y: p.lam_b.as_ref().map(|ly| spans_for(an, ly)),
                                    lam_a: p.lam_a,
                                };
                                let v = eval_prepared(&grid, an, &prep);
                                if v > best {
                                    best = v;
                                    center = prep.lam_a.clone();
                                }
                            }
                        }
                    }
                }
                best
            })
            .collect()
    };
    Ok(LimitSampleSet {
        samples,
        case: an.case,
        path_steps: params.path_steps,
        grid_r: params.grid_r,
        reps,
        seed: rng.seed,
        stream: rng.stream,
    })
}

fn eval_prepared(grid: &BrownianGrid, an: &Analysis<f64>, p: &PreparedPoint) -> f64 {
    match (&p.y, an.case) {
        (Some(y_spans), _) => {
            let l = an.len();
            let mut nu_x = vec![0.0; l];
            let mut nu_y = vec![0.0; l];
            for (pos, &slot) in an.active.iter().enumerate() {
                let (letter, t0, t1) = p.x[pos];
                nu_x[slot] = grid.increment(Marginal::X, letter, t0, t1);
                let (letter, t0, t1) = y_spans[pos];
                nu_y[slot] = grid.increment(Marginal::Y, letter, t0, t1);
            }
            let nu = Perturbation::new(nu_x, nu_y, an).expect("support by construction");
            m_closed(an, &nu).expect("case b report")
        }
        (None, CaseTag::CaseASymmetric) => {
            p.x.iter().map(|&(letter, t0, t1)| grid.increment(Marginal::Y, letter, t0, t1)).sum()
        }
        (None, _) => {
            p.x.iter().map(|&(letter, t0, t1)| grid.increment(Marginal::X, letter, t0, t1)).sum()
        }
    }
}

/// Exact sampling when the grid is a single point: each active span
/// contributes an independent `N(0, q (1 - q) Δt)` increment.
fn exact_single_point(
    an: &Analysis<f64>,
    point: &PreparedPoint,
    px: &[f64],
    py: &[f64],
    use_x: bool,
    need_y: bool,
    rng: &RngConfig,
) -> f64 {
    let draw = |spans: &Spans, p: &[f64], r: &mut ChaCha12Rng| -> Vec<f64> {
        spans
            .iter()
            .map(|&(letter, t0, t1)| {
                let sd = (p[letter] * (1.0 - p[letter]) * (t1 - t0)).sqrt();
                let g: f64 = StandardNormal.sample(r);
                sd * g
            })
            .collect()
    };
    if need_y {
        let mut rx = rng.substream(SALT_MARGINAL_X).rng();
        let mut ry = rng.substream(SALT_MARGINAL_Y).rng();
        let incs_x = draw(&point.x, px, &mut rx);
        let incs_y = draw(point.y.as_ref().unwrap(), py, &mut ry);
        let l = an.len();
        let mut nu_x = vec![0.0; l];
        let mut nu_y = vec![0.0; l];
        for (pos, &slot) in an.active.iter().enumerate() {
            nu_x[slot] = incs_x[pos];
            nu_y[slot] = incs_y[pos];
        }
        let nu = Perturbation::new(nu_x, nu_y, an).expect("support by construction");
        m_closed(an, &nu).expect("case b report")
    } else {
        let salt = if use_x { SALT_MARGINAL_X } else { SALT_MARGINAL_Y };
        let p = if use_x { px } else { py };
        let mut r = rng.substream(salt).rng();
        draw(&point.x, p, &mut r).iter().sum()
    }
}
