//! Rational grids over the feasible polytopes of the limit laws: the split
//! simplex slice `J` of case a, the coupled argmax set of case b, and the
//! brute-force grid maximization of `f` used as an independent check on the
//! closed-form limit mean.

use super::{find_independent_pair, Analysis, AnalysisError, CaseTag};
use crate::exact::compositions;
use crate::scalar::Scalar;

/// One feasible point. `lam_a` is the split vector of the limiting marginal
/// (`λ^X` in case a, `λ^Y` in its symmetric version, `λ^X` in case b);
/// `lam_b` carries the coupled `λ^Y` in case b and is `None` for `J` grids.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint<T> {
    pub lam_a: Vec<T>,
    pub lam_b: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeGrid<T> {
    /// Ambient vector length (number of slots).
    pub dimension: usize,
    pub resolution: usize,
    pub points: Vec<GridPoint<T>>,
}

pub(crate) const GRID_LIMIT: u128 = 10_000_000;

/// Grid over `J = {λ supported on I : Σ_{i∈I} λ_i / q^{other}_i <= 1/e_max}`
/// with step `1/r`. Requires case a (the symmetric version swaps the roles).
pub fn grid_j<T: Scalar>(an: &Analysis<T>, r: usize) -> Result<PolytopeGrid<T>, AnalysisError> {
    let other = match an.case {
        CaseTag::CaseA => &an.qy,
        CaseTag::CaseASymmetric => &an.qx,
        _ => return Err(AnalysisError::WrongCase { expected: "case a", got: an.case.name() }),
    };
    let bound = T::one() / an.e_max.clone();
    let k = an.active.len();
    check_grid_size(count_compositions(r, k), 1)?;
    let rr = T::from_int(r as i64);
    let mut points = Vec::new();
    for comp in compositions(r, k) {
        let mut lam = vec![T::zero(); an.len()];
        let mut lhs = T::zero();
        for (pos, &slot) in an.active.iter().enumerate() {
            lam[slot] = T::from_int(comp[pos] as i64) / rr.clone();
            lhs = lhs + lam[slot].clone() / other[slot].clone();
        }
        if lhs <= bound.clone() + T::feas_tol() {
            points.push(GridPoint { lam_a: lam, lam_b: None });
        }
    }
    if points.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    Ok(PolytopeGrid { dimension: an.len(), resolution: r, points })
}

/// Grid over the argmax set of `f` in case b.
///
/// Case b1 has equal masses `e_max` on `I`, so coupling forces
/// `λ^X = λ^Y` = one simplex over `I`. Case b2 is parametrized by
/// `u >= 0` on `I` with both reciprocal-mass constraints equal to one
/// (dimension `|I| - 2`): free coordinates walk the `1/r` grid and the two
/// pinned ones solve the remaining 2x2 system exactly.
pub fn grid_k<T: Scalar>(an: &Analysis<T>, r: usize) -> Result<PolytopeGrid<T>, AnalysisError> {
    match an.case {
        CaseTag::CaseB1 => {
            let k = an.active.len();
            check_grid_size(count_compositions(r, k), 1)?;
            let rr = T::from_int(r as i64);
            let mut points = Vec::new();
            for comp in compositions(r, k) {
                let mut lam = vec![T::zero(); an.len()];
                for (pos, &slot) in an.active.iter().enumerate() {
                    lam[slot] = T::from_int(comp[pos] as i64) / rr.clone();
                }
                points.push(GridPoint { lam_a: lam.clone(), lam_b: Some(lam) });
            }
            Ok(PolytopeGrid { dimension: an.len(), resolution: r, points })
        }
        CaseTag::CaseB2 => grid_k_b2(an, r),
        _ => Err(AnalysisError::WrongCase { expected: "case b", got: an.case.name() }),
    }
}

fn grid_k_b2<T: Scalar>(an: &Analysis<T>, r: usize) -> Result<PolytopeGrid<T>, AnalysisError> {
    let (qx, qy) = (&an.qx, &an.qy);
    let (pi, pj) = find_independent_pair(qx, qy, &an.active)
        .ok_or_else(|| AnalysisError::Internal("case b2 without independent pair".into()))?;
    let free: Vec<usize> =
        an.active.iter().copied().filter(|&s| s != pi && s != pj).collect();
    check_grid_size((r as u128 + 1).checked_pow(free.len() as u32).unwrap_or(u128::MAX), 1)?;

    let (a, b) = (T::one() / qx[pi].clone(), T::one() / qx[pj].clone());
    let (c, d) = (T::one() / qy[pi].clone(), T::one() / qy[pj].clone());
    let det = a.clone() * d.clone() - b.clone() * c.clone();
    let rr = T::from_int(r as i64);
    let lo = T::zero() - T::feas_tol();

    let mut points = Vec::new();
    let mut stack = vec![T::zero(); free.len()];
    enumerate_free(&mut stack, 0, r, &rr, &mut |uf: &[T]| {
        // remaining right-hand sides after the free coordinates
        let mut rx = T::one();
        let mut ry = T::one();
        for (pos, &slot) in free.iter().enumerate() {
            rx = rx - uf[pos].clone() / qx[slot].clone();
            ry = ry - uf[pos].clone() / qy[slot].clone();
        }
        let ui = (rx.clone() * d.clone() - ry.clone() * b.clone()) / det.clone();
        let uj = (ry * a.clone() - rx * c.clone()) / det.clone();
        if ui < lo || uj < lo {
            return;
        }
        let mut lam_x = vec![T::zero(); qx.len()];
        let mut lam_y = vec![T::zero(); qx.len()];
        for (pos, &slot) in free.iter().enumerate() {
            lam_x[slot] = uf[pos].clone() / qx[slot].clone();
            lam_y[slot] = uf[pos].clone() / qy[slot].clone();
        }
        lam_x[pi] = ui.clone() / qx[pi].clone();
        lam_y[pi] = ui / qy[pi].clone();
        lam_x[pj] = uj.clone() / qx[pj].clone();
        lam_y[pj] = uj / qy[pj].clone();
        points.push(GridPoint { lam_a: lam_x, lam_b: Some(lam_y) });
    });
    if points.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    Ok(PolytopeGrid { dimension: an.len(), resolution: r, points })
}

fn enumerate_free<T: Scalar>(
    stack: &mut Vec<T>,
    pos: usize,
    r: usize,
    rr: &T,
    visit: &mut impl FnMut(&[T]),
) {
    if pos == stack.len() {
        visit(stack);
        return;
    }
    for k in 0..=r {
        stack[pos] = T::from_int(k as i64) / rr.clone();
        enumerate_free(stack, pos + 1, r, rr, visit);
    }
}

/// Brute-force lower bound on the limit mean: maximize
/// `f(λ) = Σ min(qx_i λ^X_i, qy_i λ^Y_i)` over the `1/r` grid of the product
/// of two simplexes.
pub fn emax_grid_oracle<T: Scalar>(qx: &[T], qy: &[T], r: usize) -> Result<T, AnalysisError> {
    let r = r.max(1);
    let m = qx.len();
    let per_side = count_compositions(r, m);
    check_grid_size(per_side, per_side)?;
    let grid = compositions(r, m);
    let rr = T::from_int(r as i64);
    let mut best = T::zero();
    for cx in &grid {
        // per-letter X contribution, reused across all Y splits
        let vx: Vec<T> =
            (0..m).map(|i| qx[i].clone() * T::from_int(cx[i] as i64) / rr.clone()).collect();
        for cy in &grid {
            let mut total = T::zero();
            for i in 0..m {
                let vy = qy[i].clone() * T::from_int(cy[i] as i64) / rr.clone();
                total = total + if vx[i] < vy { vx[i].clone() } else { vy };
            }
            if total > best {
                best = total;
            }
        }
    }
    Ok(best)
}

/// Feasible points of the case grid at resolution `r` within an l-infinity
/// ball around `center` (a split vector of the limiting marginal). Used by
/// the sampler's local refinement, which halves the step repeatedly; direct
/// window enumeration keeps each pass small even at path-scale resolutions.
pub(crate) fn grid_near(
    an: &Analysis<f64>,
    r: usize,
    center: &[f64],
    radius: f64,
) -> Vec<GridPoint<f64>> {
    let active = &an.active;
    let k = active.len();
    if k == 0 {
        return Vec::new();
    }
    let window = |c: f64| -> (usize, usize) {
        let lo = ((c - radius) * r as f64).floor().max(0.0) as usize;
        let hi = (((c + radius) * r as f64).ceil() as usize).min(r);
        (lo, hi.max(lo))
    };
    let mut out = Vec::new();
    match an.case {
        CaseTag::CaseA | CaseTag::CaseASymmetric | CaseTag::CaseB1 => {
            let other = match an.case {
                CaseTag::CaseA => Some(&an.qy),
                CaseTag::CaseASymmetric => Some(&an.qx),
                _ => None,
            };
            let bound = 1.0 / an.e_max + 1e-9;
            // walk the first k-1 active coordinates; the last is pinned
            let windows: Vec<(usize, usize)> =
                active.iter().map(|&s| window(center[s])).collect();
            let mut counts = vec![0usize; k];
            let mut rec = |out: &mut Vec<GridPoint<f64>>| {
                fn go(
                    pos: usize,
                    used: usize,
                    r: usize,
                    windows: &[(usize, usize)],
                    counts: &mut [usize],
                    emit: &mut impl FnMut(&[usize]),
                ) {
                    if pos + 1 == counts.len() {
                        if used <= r {
                            let last = r - used;
                            if last >= windows[pos].0 && last <= windows[pos].1 {
                                counts[pos] = last;
                                emit(counts);
                            }
                        }
                        return;
                    }
                    for v in windows[pos].0..=windows[pos].1 {
                        if used + v > r {
                            break;
                        }
                        counts[pos] = v;
                        go(pos + 1, used + v, r, windows, counts, emit);
                    }
                }
                go(0, 0, r, &windows, &mut counts, &mut |counts| {
                    let mut lam = vec![0.0f64; an.len()];
                    for (pos, &slot) in active.iter().enumerate() {
                        lam[slot] = counts[pos] as f64 / r as f64;
                    }
                    if let Some(other) = other {
                        let lhs: f64 = active.iter().map(|&i| lam[i] / other[i]).sum();
                        if lhs > bound {
                            return;
                        }
                        out.push(GridPoint { lam_a: lam, lam_b: None });
                    } else {
                        out.push(GridPoint { lam_a: lam.clone(), lam_b: Some(lam) });
                    }
                });
            };
            rec(&mut out);
        }
        CaseTag::CaseB2 => {
            let (qx, qy) = (&an.qx, &an.qy);
            let Some((pi, pj)) = find_independent_pair(qx, qy, active) else {
                return Vec::new();
            };
            let free: Vec<usize> =
                active.iter().copied().filter(|&s| s != pi && s != pj).collect();
            if free.is_empty() {
                // the set is a single point; nothing to refine
                return Vec::new();
            }
            let (a, b) = (1.0 / qx[pi], 1.0 / qx[pj]);
            let (c, d) = (1.0 / qy[pi], 1.0 / qy[pj]);
            let det = a * d - b * c;
            // windows on the free u-coordinates around the center's u values
            let windows: Vec<(usize, usize)> =
                free.iter().map(|&s| window(qx[s] * center[s])).collect();
            let mut idx = vec![0usize; free.len()];
            loop {
                let uf: Vec<f64> = idx
                    .iter()
                    .zip(&windows)
                    .map(|(&i, &(lo, _))| (lo + i) as f64 / r as f64)
                    .collect();
                let mut rx = 1.0;
                let mut ry = 1.0;
                for (pos, &slot) in free.iter().enumerate() {
                    rx -= uf[pos] / qx[slot];
                    ry -= uf[pos] / qy[slot];
                }
                let ui = (rx * d - ry * b) / det;
                let uj = (ry * a - rx * c) / det;
                if ui >= -1e-12 && uj >= -1e-12 {
                    let mut lam_x = vec![0.0f64; an.len()];
                    let mut lam_y = vec![0.0f64; an.len()];
                    for (pos, &slot) in free.iter().enumerate() {
                        lam_x[slot] = uf[pos] / qx[slot];
                        lam_y[slot] = uf[pos] / qy[slot];
                    }
                    lam_x[pi] = ui / qx[pi];
                    lam_y[pi] = ui / qy[pi];
                    lam_x[pj] = uj / qx[pj];
                    lam_y[pj] = uj / qy[pj];
                    out.push(GridPoint { lam_a: lam_x, lam_b: Some(lam_y) });
                }
                // odometer over the windows
                let mut pos = 0;
                loop {
                    if pos == idx.len() {
                        return out;
                    }
                    idx[pos] += 1;
                    if windows[pos].0 + idx[pos] <= windows[pos].1 {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
            }
        }
    }
    out
}

fn count_compositions(r: usize, parts: usize) -> u128 {
    // C(r + parts - 1, parts - 1)
    if parts == 0 {
        return 1;
    }
    let (n, k) = ((r + parts - 1) as u128, (parts - 1) as u128);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out.saturating_mul(n - i) / (i + 1);
        if out > GRID_LIMIT {
            return u128::MAX;
        }
    }
    out
}

fn check_grid_size(a: u128, b: u128) -> Result<(), AnalysisError> {
    let points = a.saturating_mul(b);
    if points > GRID_LIMIT {
        return Err(AnalysisError::GridTooLarge { points, limit: GRID_LIMIT });
    }
    Ok(())
}
