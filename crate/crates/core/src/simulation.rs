//! Line simulations from the leader-kick initial condition and the transient
//! magnitude they produce.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::assembly::{assemble_line, BoundaryType, SystemMatrix, MIN_CELLS};
use crate::model::{FlockSpec, ModelError};
use crate::report::{fmt_f64, Plot, Series};

pub const DEFAULT_DT: f64 = 0.01;
pub const OVERFLOW_GUARD: f64 = 1e12;
/// Stored samples are spaced roughly this far apart in time.
pub const STORE_INTERVAL: f64 = 0.1;
/// At most this many follower traces go into a deviation plot.
pub const MAX_PLOTTED_AGENTS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid time grid: dt = {dt}, t_max = {t_max}")]
    InvalidGrid { dt: f64, t_max: f64 },
    #[error("initial state has length {got}, expected {expected}")]
    InitialState { got: usize, expected: usize },
    #[error("state norm exceeded {guard:e} at t = {time}")]
    BlowUp { time: f64, guard: f64 },
    #[error("N = {vehicles} is not a multiple of {types} types with at least {min} cells")]
    BadVehicleCount { vehicles: usize, types: usize, min: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    pub t_max: f64,
    pub dt: f64,
    /// Store every this many steps; `None` spaces samples about 0.1 apart.
    pub store_every: Option<usize>,
}

impl SimOptions {
    /// Defaults for `vehicles` agents: `dt = 0.01`, `t_max = 3 N`.
    pub fn for_vehicles(vehicles: usize) -> Self {
        Self {
            t_max: 3.0 * vehicles as f64,
            dt: DEFAULT_DT,
            store_every: None,
        }
    }

    pub fn stride(&self) -> usize {
        self.store_every
            .unwrap_or_else(|| (STORE_INTERVAL / self.dt).ceil().max(1.0) as usize)
    }
}

/// Extremal leader-relative deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub time: f64,
    /// 1-based road index; 1 is the leader.
    pub agent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub vehicles: usize,
    pub bc: Option<BoundaryType>,
    pub dt: f64,
    pub times: Vec<f64>,
    /// Per stored time: positions `z_1..z_N` then velocities, road order.
    pub states: Vec<Vec<f64>>,
    /// Extremum over every integration step.
    pub extremum: Option<Extremum>,
}

impl Trajectory {
    pub fn positions(&self, i: usize) -> &[f64] {
        &self.states[i][..self.vehicles]
    }

    pub fn velocities(&self, i: usize) -> &[f64] {
        &self.states[i][self.vehicles..]
    }

    /// `z_k - z_1` at stored sample `i`.
    pub fn deviations(&self, i: usize) -> Vec<f64> {
        let z = self.positions(i);
        z.iter().map(|x| x - z[0]).collect()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Road-order state with every vehicle at rest except the leader at velocity 1.
pub fn leader_kick(vehicles: usize) -> Vec<f64> {
    let mut x = vec![0.0; 2 * vehicles];
    x[vehicles] = 1.0;
    x
}

/// Integrate the line system for `n` cells per type from the leader kick.
pub fn simulate(spec: &FlockSpec, n: usize, bc: BoundaryType, opts: &SimOptions) -> Result<Trajectory, SimError> {
    let system = assemble_line(spec, n, bc)?;
    simulate_system(&system, &leader_kick(system.vehicles()), opts)
}

fn update_extremum(best: &mut Option<Extremum>, x: &[f64], order: &[usize], time: f64) {
    let lead = x[order[0]];
    for (p, idx) in order.iter().enumerate().skip(1) {
        let d = x[*idx] - lead;
        let beats = match best {
            Some(b) => d.abs() > b.value.abs(),
            None => d != 0.0,
        };
        if beats {
            *best = Some(Extremum {
                value: d,
                time,
                agent: p + 1,
            });
        }
    }
}

/// Classical fixed-step RK4 on `x' = M x` from a road-order initial state.
pub fn simulate_system(system: &SystemMatrix, initial: &[f64], opts: &SimOptions) -> Result<Trajectory, SimError> {
    let (dt, t_max) = (opts.dt, opts.t_max);
    if dt.is_nan() || dt <= 0.0 || !t_max.is_finite() || t_max < dt {
        return Err(SimError::InvalidGrid { dt, t_max });
    }
    let nv = system.vehicles();
    let dim = system.dim();
    if initial.len() != dim {
        return Err(SimError::InitialState {
            got: initial.len(),
            expected: dim,
        });
    }
    // block index of each road-order state slot
    let order: Vec<usize> = (0..nv)
        .map(|p| system.position_index(p))
        .chain((0..nv).map(|p| system.velocity_index(p)))
        .collect();
    let mut x = vec![0.0; dim];
    for (slot, idx) in order.iter().enumerate() {
        x[*idx] = initial[slot];
    }
    let to_road = |x: &[f64]| -> Vec<f64> { order.iter().map(|i| x[*i]).collect() };

    let a = system.to_sparse();
    let steps = (t_max / dt).round() as usize;
    let stride = opts.stride();
    let mut times = vec![0.0];
    let mut states = vec![to_road(&x)];
    let mut best = None;
    update_extremum(&mut best, &x, &order[..nv], 0.0);

    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    for step in 1..=steps {
        a.mul_into(&x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        a.mul_into(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        a.mul_into(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + dt * k3[i];
        }
        a.mul_into(&tmp, &mut k4);
        let mut norm = 0.0_f64;
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            norm = norm.max(x[i].abs());
        }
        let t = step as f64 * dt;
        if norm.is_nan() || norm > OVERFLOW_GUARD {
            return Err(SimError::BlowUp {
                time: t,
                guard: OVERFLOW_GUARD,
            });
        }
        update_extremum(&mut best, &x, &order[..nv], t);
        if step % stride == 0 || step == steps {
            times.push(t);
            states.push(to_road(&x));
        }
    }
    Ok(Trajectory {
        vehicles: nv,
        bc: system.topology.boundary(),
        dt,
        times,
        states,
        extremum: best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransientReport {
    /// Signed extremal deviation from the leader.
    pub magnitude: f64,
    pub time_at_extremum: f64,
    /// 1-based road index.
    pub agent_at_extremum: usize,
    /// Deviations over the last 5% of the window stay under 10% of the
    /// magnitude.
    pub converged: bool,
}

pub fn transient(traj: &Trajectory) -> TransientReport {
    let mut best = traj.extremum;
    for (i, t) in traj.times.iter().enumerate() {
        for (k, d) in traj.deviations(i).iter().enumerate().skip(1) {
            let beats = match best {
                Some(b) => d.abs() > b.value.abs(),
                None => *d != 0.0,
            };
            if beats {
                best = Some(Extremum {
                    value: *d,
                    time: *t,
                    agent: k + 1,
                });
            }
        }
    }
    let best = best.unwrap_or(Extremum {
        value: 0.0,
        time: 0.0,
        agent: 1,
    });
    let t_end = traj.t_end();
    let tail_start = 0.95 * t_end;
    let tail_max = traj
        .times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t >= tail_start)
        .flat_map(|(i, _)| traj.deviations(i))
        .fold(0.0_f64, |m, d| m.max(d.abs()));
    let converged = tail_max == 0.0 || tail_max < 0.1 * best.value.abs();
    TransientReport {
        magnitude: best.value,
        time_at_extremum: best.time,
        agent_at_extremum: best.agent,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub vehicles: usize,
    pub magnitude: Option<f64>,
    pub log_magnitude: Option<f64>,
    pub time_at_extremum: Option<f64>,
    /// Integration blew up; excluded from the fit.
    pub censored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    pub fit: Option<LinearFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit, String> {
    if points.len() < 2 {
        return Err(format!("need at least 2 points for a fit, got {}", points.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err("all abscissae coincide".into());
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        residual: (sse / n).sqrt(),
    })
}

/// Transient magnitude for each flock size, with a fit of `ln|magnitude|`
/// against `N`. `t_max = None` uses `3 N` per run.
pub fn scan_n(
    spec: &FlockSpec,
    bc: BoundaryType,
    n_values: &[usize],
    dt: f64,
    t_max: Option<f64>,
) -> Result<ScanResult, SimError> {
    let types = spec.types();
    for &vehicles in n_values {
        if vehicles % types != 0 || vehicles / types < MIN_CELLS {
            return Err(SimError::BadVehicleCount {
                vehicles,
                types,
                min: MIN_CELLS,
            });
        }
    }
    let points = n_values
        .par_iter()
        .map(|&vehicles| {
            let opts = SimOptions {
                t_max: t_max.unwrap_or(3.0 * vehicles as f64),
                dt,
                store_every: None,
            };
            match simulate(spec, vehicles / types, bc, &opts) {
                Ok(traj) => {
                    let r = transient(&traj);
                    Ok(ScanPoint {
                        vehicles,
                        magnitude: Some(r.magnitude),
                        log_magnitude: Some(r.magnitude.abs().ln()),
                        time_at_extremum: Some(r.time_at_extremum),
                        censored: false,
                    })
                }
                Err(SimError::BlowUp { .. }) => Ok(ScanPoint {
                    vehicles,
                    magnitude: None,
                    log_magnitude: None,
                    time_at_extremum: None,
                    censored: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| {
            p.log_magnitude
                .filter(|l| l.is_finite())
                .map(|l| (p.vehicles as f64, l))
        })
        .collect();
    let (fit, fit_error) = match linear_fit(&xy) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e)),
    };
    Ok(ScanResult { points, fit, fit_error })
}

/// `t,z_1..z_N,v_1..v_N`, one row per stored step.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.vehicles;
    let mut out = String::from("t");
    for k in 1..=n {
        let _ = write!(out, ",z_{k}");
    }
    for k in 1..=n {
        let _ = write!(out, ",v_{k}");
    }
    out.push('\n');
    for (t, state) in traj.times.iter().zip(&traj.states) {
        out.push_str(&fmt_f64(*t));
        for v in state {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn scan_csv(scan: &ScanResult) -> String {
    let mut out = String::from("N,magnitude,log_magnitude,time_at_extremum,censored\n");
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for p in &scan.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.vehicles,
            opt(p.magnitude),
            opt(p.log_magnitude),
            opt(p.time_at_extremum),
            p.censored
        );
    }
    out
}

/// Leader-relative deviations of up to 40 evenly spaced followers.
pub fn deviation_plot(traj: &Trajectory, title: &str) -> Plot {
    let followers = traj.vehicles.saturating_sub(1);
    let stride = followers.div_ceil(MAX_PLOTTED_AGENTS).max(1);
    let mut plot = Plot::new(title, "t", "z_k - z_1");
    plot.legend = false;
    for k in (1..traj.vehicles).step_by(stride) {
        let pts = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(t, s)| (*t, s[k] - s[0]))
            .collect();
        plot.series.push(Series::line(format!("vehicle {}", k + 1), pts));
    }
    plot
}

pub fn scan_plot(scan: &ScanResult, title: &str) -> Plot {
    let pts: Vec<(f64, f64)> = scan
        .points
        .iter()
        .filter_map(|p| p.log_magnitude.map(|l| (p.vehicles as f64, l)))
        .collect();
    let mut plot = Plot::new(title, "N", "ln |magnitude|").with_series(Series::markers("runs", pts.clone()));
    if let Some(fit) = scan.fit {
        let xs = pts.iter().map(|p| p.0);
        let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        plot.series.push(Series::line(
            format!("fit slope {:.4}, R^2 {:.4}", fit.slope, fit.r_squared),
            vec![
                (lo, fit.intercept + fit.slope * lo),
                (hi, fit.intercept + fit.slope * hi),
            ],
        ));
    }
    plot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn zero_kick_stays_at_rest() {
        let system = assemble_line(&fixtures::figure1(), 3, BoundaryType::TypeI).unwrap();
        let opts = SimOptions {
            t_max: 5.0,
            dt: 0.01,
            store_every: None,
        };
        let traj = simulate_system(&system, &vec![0.0; system.dim()], &opts).unwrap();
        assert!(traj.states.iter().all(|s| s.iter().all(|v| *v == 0.0)));
        let r = transient(&traj);
        assert_eq!(r.magnitude, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn leader_moves_at_unit_speed() {
        let opts = SimOptions {
            t_max: 10.0,
            dt: 0.01,
            store_every: Some(100),
        };
        let traj = simulate(&fixtures::figure3ab(), 4, BoundaryType::TypeII, &opts).unwrap();
        assert_eq!(traj.states[0], leader_kick(8));
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s[0] - t).abs() < 1e-12);
            assert_eq!(s[8], 1.0);
        }
        assert_eq!(traj.times.len(), 11);
    }

    #[test]
    fn small_flock_extremum_after_start() {
        let opts = SimOptions {
            t_max: 60.0,
            dt: 0.01,
            store_every: None,
        };
        let traj = simulate(&fixtures::figure1(), 3, BoundaryType::TypeI, &opts).unwrap();
        let r = transient(&traj);
        assert!(r.time_at_extremum > 0.0);
        assert!(r.magnitude < 0.0);
        // brute-force scan over the stored grid never beats the fine extremum
        let stored = (0..traj.times.len())
            .flat_map(|i| traj.deviations(i))
            .fold(0.0_f64, |m, d| m.max(d.abs()));
        assert!(stored <= r.magnitude.abs());
        assert!(stored > 0.99 * r.magnitude.abs());
    }

    #[test]
    fn invalid_grid_rejected() {
        let opts = SimOptions {
            t_max: 1.0,
            dt: 0.0,
            store_every: None,
        };
        assert!(matches!(
            simulate(&fixtures::figure1(), 3, BoundaryType::TypeI, &opts),
            Err(SimError::InvalidGrid { .. })
        ));
        let opts = SimOptions {
            t_max: 0.001,
            dt: 0.01,
            store_every: None,
        };
        assert!(simulate(&fixtures::figure1(), 3, BoundaryType::TypeI, &opts).is_err());
    }

    #[test]
    fn single_point_scan_reports_fit_error() {
        let scan = scan_n(&fixtures::figure1(), BoundaryType::TypeI, &[9], 0.01, Some(20.0)).unwrap();
        assert_eq!(scan.points.len(), 1);
        assert!(scan.points[0].magnitude.is_some());
        assert!(scan.fit.is_none() && scan.fit_error.is_some());
    }

    #[test]
    fn scan_rejects_indivisible_counts() {
        assert!(matches!(
            scan_n(&fixtures::figure1(), BoundaryType::TypeI, &[10], 0.01, None),
            Err(SimError::BadVehicleCount { .. })
        ));
    }

    #[test]
    fn fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 - 1.0)).collect();
        let f = linear_fit(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn csv_shape() {
        let opts = SimOptions {
            t_max: 1.0,
            dt: 0.01,
            store_every: None,
        };
        let traj = simulate(&fixtures::figure1(), 3, BoundaryType::TypeI, &opts).unwrap();
        let csv = trajectory_csv(&traj);
        let header = csv.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 1 + 18);
        assert!(header.starts_with("t,z_1,") && header.ends_with(",v_9"));
        assert_eq!(csv.lines().count(), 1 + traj.times.len());
    }

    #[test]
    fn plot_decimates_agents() {
        let opts = SimOptions {
            t_max: 1.0,
            dt: 0.01,
            store_every: None,
        };
        let traj = simulate(&fixtures::figure1(), 40, BoundaryType::TypeI, &opts).unwrap();
        let plot = deviation_plot(&traj, "x");
        assert!(plot.series.len() <= MAX_PLOTTED_AGENTS);
        assert!(!plot.series.is_empty());
    }
}
