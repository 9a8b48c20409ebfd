//! Tracking of the two small roots of `Q(z, t)` as `t -> 0`, with tangency,
//! orthogonality and disk-count checks.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::FlockSpec;
use crate::poly::{self, RootError};
use crate::report::{fmt_f64, Plot, Series};
use crate::spectral;

/// Below this, `a_2(0)` or `a_0'(0)` counts as vanishing.
pub const HYPOTHESIS_TOL: f64 = 1e-9;
/// Relative separation below which two candidate roots are indistinguishable.
pub const BRANCH_RESOLUTION: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-6;
pub const DEFAULT_T_MIN: f64 = 1e-6;
pub const DEFAULT_T_MAX: f64 = 1e-1;
pub const DEFAULT_POINTS: usize = 60;
/// Allowed growth of the decade sup when moving to a finer decade.
pub const MONOTONE_JITTER: f64 = 0.10;
pub const TANGENCY_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootCurveError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("branch ambiguity at t = {t}: {detail}")]
    BranchAmbiguity { t: f64, detail: String },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Roots(#[from] RootError),
}

/// One-parameter polynomial family `Q(z, t)`, ascending coefficients.
pub trait PolyFamily: Sync {
    fn coeffs(&self, t: f64) -> Vec<Complex64>;

    fn a0_derivative_at_zero(&self) -> Complex64 {
        (self.coeffs(FD_STEP)[0] - self.coeffs(-FD_STEP)[0]) / (2.0 * FD_STEP)
    }
}

/// `Q(nu, phi)` of a flock with `t = phi`.
pub struct SpecFamily<'a>(pub &'a FlockSpec);

impl PolyFamily for SpecFamily<'_> {
    fn coeffs(&self, t: f64) -> Vec<Complex64> {
        spectral::char_poly(self.0, t).coeffs
    }

    fn a0_derivative_at_zero(&self) -> Complex64 {
        spectral::a0_derivative_at_zero(self.0)
    }
}

pub struct FnFamily<F>(pub F);

impl<F: Fn(f64) -> Vec<Complex64> + Sync> PolyFamily for FnFamily<F> {
    fn coeffs(&self, t: f64) -> Vec<Complex64> {
        (self.0)(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCurve {
    pub branch: Branch,
    /// Ascending.
    pub t_grid: Vec<f64>,
    pub roots: Vec<Complex64>,
    /// `s sqrt(c t)` per grid point.
    pub predicted: Vec<Complex64>,
    /// Distance from each tracked root to the nearest other root of `Q(., t)`.
    pub gaps: Vec<f64>,
}

impl RootCurve {
    /// Consecutive roots differ by less than half the local inter-root gap.
    pub fn is_continuous(&self) -> bool {
        self.roots
            .windows(2)
            .zip(self.gaps.iter())
            .all(|(w, gap)| (w[1] - w[0]).norm() < 0.5 * gap)
    }

    pub fn max_real_part(&self) -> f64 {
        self.roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedBranches {
    pub plus: RootCurve,
    pub minus: RootCurve,
    /// `c = -a_0'(0) / a_2(0)`.
    pub c: Complex64,
    pub a2_at_zero: Complex64,
    pub a0_derivative: Complex64,
    /// Every root of `Q(., t)` per grid point.
    pub all_roots: Vec<Vec<Complex64>>,
}

/// `n` log-spaced points over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

pub fn default_grid() -> Vec<f64> {
    log_grid(DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_POINTS)
}

pub fn predicted_root(c: Complex64, t: f64, branch: Branch) -> Complex64 {
    (c * t).sqrt() * branch.sign()
}

/// `c = -a_0'(0) / a_2(0)` after checking the hypotheses at `t = 0`.
pub fn prediction_constant(family: &dyn PolyFamily) -> Result<(Complex64, Complex64, Complex64), RootCurveError> {
    let q0 = family.coeffs(0.0);
    if q0.len() < 3 {
        return Err(RootCurveError::HypothesisViolated(format!(
            "degree {} is below 2",
            q0.len().saturating_sub(1)
        )));
    }
    let scale = 1.0 + q0.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for (i, name) in [(0, "a_0(0)"), (1, "a_1(0)")] {
        if q0[i].norm() > HYPOTHESIS_TOL * scale {
            return Err(RootCurveError::HypothesisViolated(format!(
                "{name} = {} is not zero",
                q0[i]
            )));
        }
    }
    let a2 = q0[2];
    if a2.norm() <= HYPOTHESIS_TOL {
        return Err(RootCurveError::HypothesisViolated(format!("a_2(0) = {a2} vanishes")));
    }
    let da0 = family.a0_derivative_at_zero();
    if da0.norm() <= HYPOTHESIS_TOL {
        return Err(RootCurveError::HypothesisViolated(format!("a_0'(0) = {da0} vanishes")));
    }
    Ok((-da0 / a2, a2, da0))
}

fn gap_to_others(roots: &[Complex64], idx: usize) -> f64 {
    roots
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != idx)
        .map(|(_, z)| (z - roots[idx]).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Index of the root nearest `target`, failing when the runner-up is
/// indistinguishable.
fn nearest(roots: &[Complex64], target: Complex64, scale: f64, t: f64) -> Result<usize, RootCurveError> {
    let mut d: Vec<(f64, usize)> = roots
        .iter()
        .enumerate()
        .map(|(i, z)| ((z - target).norm(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    if d.len() > 1 && d[1].0 - d[0].0 <= BRANCH_RESOLUTION * scale {
        return Err(RootCurveError::BranchAmbiguity {
            t,
            detail: format!(
                "roots {} and {} are equally close to {target}",
                roots[d[0].1], roots[d[1].1]
            ),
        });
    }
    Ok(d[0].1)
}

/// Follow the two roots that vanish as `t -> 0`.
///
/// Branches are assigned at the largest `t` by distance to `+-sqrt(c t)`,
/// then continued downward from the previous root rescaled by
/// `sqrt(t_new / t_old)`.
pub fn track_branches(family: &dyn PolyFamily, t_grid: &[f64]) -> Result<TrackedBranches, RootCurveError> {
    if t_grid.is_empty() {
        return Err(RootCurveError::InvalidGrid("empty grid".into()));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(RootCurveError::InvalidGrid(
            "grid points must be positive and finite".into(),
        ));
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let (c, a2, da0) = prediction_constant(family)?;

    let all_roots = grid
        .par_iter()
        .map(|t| poly::roots(&family.coeffs(*t)))
        .collect::<Result<Vec<_>, _>>()?;

    let len = grid.len();
    let mut idx = [vec![0usize; len], vec![0usize; len]];
    let branches = [Branch::Plus, Branch::Minus];
    let top = len - 1;
    for (b, branch) in branches.iter().enumerate() {
        let p = predicted_root(c, grid[top], *branch);
        idx[b][top] = nearest(&all_roots[top], p, p.norm(), grid[top])?;
    }
    for i in (0..top).rev() {
        let shrink = (grid[i] / grid[i + 1]).sqrt();
        for b in 0..2 {
            let prev = all_roots[i + 1][idx[b][i + 1]];
            let guess = prev * shrink;
            idx[b][i] = nearest(&all_roots[i], guess, guess.norm(), grid[i])?;
        }
    }
    for i in 0..len {
        if idx[0][i] == idx[1][i] {
            return Err(RootCurveError::BranchAmbiguity {
                t: grid[i],
                detail: "both branches landed on the same root".into(),
            });
        }
    }

    let build = |b: usize| RootCurve {
        branch: branches[b],
        t_grid: grid.clone(),
        roots: (0..len).map(|i| all_roots[i][idx[b][i]]).collect(),
        predicted: grid.iter().map(|t| predicted_root(c, *t, branches[b])).collect(),
        gaps: (0..len).map(|i| gap_to_others(&all_roots[i], idx[b][i])).collect(),
    };
    let (plus, minus) = (build(0), build(1));
    for curve in [&plus, &minus] {
        if let Some(i) = (1..len)
            .find(|i| (curve.roots[*i] - curve.roots[i - 1]).norm() >= 0.5 * curve.gaps[i - 1].min(curve.gaps[*i]))
        {
            return Err(RootCurveError::BranchAmbiguity {
                t: grid[i],
                detail: format!("{} branch jumps by more than half the root gap", curve.branch.label()),
            });
        }
    }
    Ok(TrackedBranches {
        plus,
        minus,
        c,
        a2_at_zero: a2,
        a0_derivative: da0,
        all_roots,
    })
}

/// `|root(t) - s sqrt(c t)| / |sqrt(c t)|` per grid point.
pub fn pointwise_ratios(curve: &RootCurve, c: Complex64) -> Vec<f64> {
    curve
        .t_grid
        .iter()
        .zip(&curve.roots)
        .map(|(t, z)| {
            let p = predicted_root(c, *t, curve.branch);
            (z - p).norm() / p.norm()
        })
        .collect()
}

/// Sup of the pointwise ratio per decade of `t`, finest decade first.
/// Decade `k` holds `t` in `[10^k t_min, 10^(k+1) t_min)`.
pub fn decade_sups(curve: &RootCurve, c: Complex64) -> Vec<f64> {
    let ratios = pointwise_ratios(curve, c);
    let Some(t_min) = curve.t_grid.first().copied() else {
        return Vec::new();
    };
    let mut sups: Vec<f64> = Vec::new();
    for (t, r) in curve.t_grid.iter().zip(ratios) {
        let k = ((t / t_min).log10() + 1e-9).floor().max(0.0) as usize;
        if sups.len() <= k {
            sups.resize(k + 1, f64::NAN);
        }
        sups[k] = if sups[k].is_nan() { r } else { sups[k].max(r) };
    }
    sups.into_iter().filter(|v| !v.is_nan()).collect()
}

/// Sup of the ratio over the finest decade of the grid.
pub fn tangency_ratio(curve: &RootCurve, c: Complex64) -> f64 {
    decade_sups(curve, c).first().copied().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyCheck {
    pub branch: Branch,
    /// Finest decade first.
    pub decade_sups: Vec<f64>,
    pub final_ratio: f64,
    pub monotone: bool,
    pub passes: bool,
}

/// Decade sups shrink toward fine `t` (10% jitter), over at least two
/// decades, ending below 0.05.
pub fn validate_tangency(curve: &RootCurve, c: Complex64) -> TangencyCheck {
    let sups = decade_sups(curve, c);
    let monotone = sups.len() >= 3 && sups.windows(2).all(|w| w[0] <= (1.0 + MONOTONE_JITTER) * w[1] + 1e-12);
    let final_ratio = sups.first().copied().unwrap_or(f64::NAN);
    TangencyCheck {
        branch: curve.branch,
        passes: monotone && final_ratio < TANGENCY_THRESHOLD,
        decade_sups: sups,
        final_ratio,
        monotone,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Orthogonality {
    /// Angle between the two directions, degrees in `[0, 180]`.
    pub angle_deg: f64,
    /// Distance from the nearest multiple of 90 degrees.
    pub deviation_deg: f64,
}

fn angle_between(a: Complex64, b: Complex64) -> Orthogonality {
    let mut d = (b.arg() - a.arg()).to_degrees().abs();
    if d > 180.0 {
        d = 360.0 - d;
    }
    let dev = (d - 90.0 * (d / 90.0).round()).abs();
    Orthogonality {
        angle_deg: d,
        deviation_deg: dev,
    }
}

/// Angle between the secant directions `0 -> root(t_min)` of two branches.
pub fn orthogonality_angle(plus: &RootCurve, minus: &RootCurve) -> Orthogonality {
    angle_between(plus.roots[0], minus.roots[0])
}

/// Angle between the chord through the two small roots at `t` and the chord
/// at `-t`: the two arms of the cross.
pub fn cross_angle(family: &dyn PolyFamily, t: f64) -> Result<Orthogonality, RootCurveError> {
    let (c, _, _) = prediction_constant(family)?;
    let mut chords = [Complex64::default(); 2];
    for (k, s) in [t, -t].into_iter().enumerate() {
        let roots = poly::roots(&family.coeffs(s))?;
        let mut z = [Complex64::default(); 2];
        for (b, branch) in [Branch::Plus, Branch::Minus].iter().enumerate() {
            let p = (c * s).sqrt() * branch.sign();
            z[b] = roots[nearest(&roots, p, p.norm(), s)?];
        }
        chords[k] = z[0] - z[1];
    }
    Ok(angle_between(chords[0], chords[1]))
}

/// Roots inside `|z| < 2 sqrt(|c| t_max)`, per grid point.
pub fn rouche_counts(tracked: &TrackedBranches) -> Vec<usize> {
    let t_max = tracked.plus.t_grid.last().copied().unwrap_or(0.0);
    let radius = 2.0 * (tracked.c.norm() * t_max).sqrt();
    tracked
        .all_roots
        .iter()
        .map(|r| r.iter().filter(|z| z.norm() < radius).count())
        .collect()
}

/// Sup over the finest decade of `|z_full - z_quad| / |sqrt(c t)|`, where
/// `z_quad` solves `a_2(t) z^2 + a_1(t) z + a_0(t) = 0`.
pub fn truncation_discrepancy(family: &dyn PolyFamily, curve: &RootCurve, c: Complex64) -> Result<f64, RootCurveError> {
    let t_min = curve.t_grid[0];
    let mut worst: f64 = 0.0;
    for (t, z) in curve
        .t_grid
        .iter()
        .zip(&curve.roots)
        .take_while(|(t, _)| **t < 10.0 * t_min * (1.0 + 1e-9))
    {
        let q = family.coeffs(*t);
        let quad = poly::roots(&q[..3])?;
        let near = quad.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
        worst = worst.max(near / predicted_root(c, *t, curve.branch).norm());
    }
    Ok(worst)
}

/// `t,branch,re,im,predicted_re,predicted_im,ratio`.
pub fn rootcurves_csv(tracked: &TrackedBranches) -> String {
    let mut out = String::from("t,branch,re,im,predicted_re,predicted_im,ratio\n");
    for curve in [&tracked.plus, &tracked.minus] {
        let ratios = pointwise_ratios(curve, tracked.c);
        let rows = curve.t_grid.iter().zip(&curve.roots).zip(&curve.predicted).zip(ratios);
        for (((t, z), p), r) in rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_f64(*t),
                curve.branch.label(),
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(p.re),
                fmt_f64(p.im),
                fmt_f64(r)
            );
        }
    }
    out
}

pub fn rootcurves_plot(tracked: &TrackedBranches, title: &str) -> Plot {
    let pts = |v: &[Complex64]| v.iter().map(|z| (z.re, z.im)).collect::<Vec<_>>();
    Plot::new(title, "Re z", "Im z")
        .with_series(Series::markers("plus branch", pts(&tracked.plus.roots)))
        .with_series(Series::markers("minus branch", pts(&tracked.minus.roots)))
        .with_series(Series::dashed("+sqrt(ct)", pts(&tracked.plus.predicted)))
        .with_series(Series::dashed("-sqrt(ct)", pts(&tracked.minus.predicted)))
}
