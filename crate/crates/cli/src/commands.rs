use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use flockstab_core::conditions::conditions;
use flockstab_core::report::{Plot, Series};
use flockstab_core::rootcurves::{
    cross_angle, log_grid, orthogonality_angle, rootcurves_csv, rootcurves_plot, rouche_counts, track_branches,
    validate_tangency, Orthogonality, SpecFamily, TangencyCheck,
};
use flockstab_core::simulation::{deviation_plot, scan_csv, scan_n, scan_plot, trajectory_csv};
use flockstab_core::spectral::{assess_stability, spectrum_csv};
use flockstab_core::{
    simulate as run_sim, transient, BoundaryType, Complex64, FlockSpec, ModeSpectrum, Overall, SimOptions,
};
use serde::Serialize;

use crate::output::{to_json, OutDir};
use crate::{OutArgs, SpecArgs};

pub fn load_spec(args: &SpecArgs) -> Result<FlockSpec> {
    let text = fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    FlockSpec::from_json(&text).with_context(|| format!("loading {}", args.spec.display()))
}

pub fn check(spec: &SpecArgs, tol: f64, out: Option<&Path>, force: bool) -> Result<ExitCode> {
    let spec = load_spec(spec)?;
    let report = conditions(&spec, tol);
    let json = to_json(&report)?;
    if let Some(dir) = out {
        OutDir::claim(dir, force, &["conditions.json"])?.write("conditions.json", &json)?;
    }
    print!("{json}");
    Ok(match report.overall {
        Overall::NecessaryConditionsHold => ExitCode::SUCCESS,
        Overall::InstabilityCertified => ExitCode::from(2),
    })
}

pub fn eigenvalue_plot(spectra: &[ModeSpectrum], title: &str) -> Plot {
    let pts = spectra
        .iter()
        .flat_map(|m| m.eigenvalues.iter().map(|z| (z.re, z.im)))
        .collect();
    Plot::new(title, "Re nu", "Im nu").with_series(Series::markers("eigenvalues", pts))
}

pub fn spectrum(spec: &SpecArgs, out: &OutArgs, n: usize, tol: f64) -> Result<ExitCode> {
    let flock = load_spec(spec)?;
    let dir = OutDir::claim(&out.out, out.force, &["spectrum.csv", "verdict.json", "spectrum.svg"])?;
    let (spectra, verdict) = assess_stability(&flock, n, tol)?;
    dir.write("spectrum.csv", &spectrum_csv(&spectra))?;
    dir.write_json("verdict.json", &verdict)?;
    dir.write(
        "spectrum.svg",
        &eigenvalue_plot(&spectra, &format!("periodic spectrum, n = {n}")).to_svg(),
    )?;
    println!("{:?}: max real part {:e}", verdict.status, verdict.max_real_part);
    Ok(ExitCode::SUCCESS)
}

pub fn simulate(
    spec: &SpecArgs,
    out: &OutArgs,
    n: usize,
    bc: BoundaryType,
    dt: f64,
    tmax: Option<f64>,
) -> Result<ExitCode> {
    let flock = load_spec(spec)?;
    let dir = OutDir::claim(
        &out.out,
        out.force,
        &["trajectory.csv", "transient.json", "deviations.svg"],
    )?;
    let vehicles = n * flock.types();
    let opts = SimOptions {
        t_max: tmax.unwrap_or(3.0 * vehicles as f64),
        dt,
        store_every: None,
    };
    let traj = run_sim(&flock, n, bc, &opts)?;
    let report = transient(&traj);
    dir.write("trajectory.csv", &trajectory_csv(&traj))?;
    dir.write_json("transient.json", &report)?;
    let title = format!("N = {vehicles}, boundary type {bc}");
    dir.write("deviations.svg", &deviation_plot(&traj, &title).to_svg())?;
    println!(
        "magnitude {:.6} at t = {:.4} (vehicle {})",
        report.magnitude, report.time_at_extremum, report.agent_at_extremum
    );
    Ok(ExitCode::SUCCESS)
}

pub fn scan(
    spec: &SpecArgs,
    out: &OutArgs,
    n_list: &[usize],
    bc: BoundaryType,
    dt: f64,
    tmax: Option<f64>,
) -> Result<ExitCode> {
    let flock = load_spec(spec)?;
    let dir = OutDir::claim(&out.out, out.force, &["scan.csv", "scan.json", "scan.svg"])?;
    let result = scan_n(&flock, bc, n_list, dt, tmax)?;
    dir.write("scan.csv", &scan_csv(&result))?;
    dir.write_json("scan.json", &result)?;
    dir.write(
        "scan.svg",
        &scan_plot(&result, "transient magnitude against N").to_svg(),
    )?;
    match (&result.fit, &result.fit_error) {
        (Some(f), _) => println!("slope {:.6e}, R^2 {:.4}", f.slope, f.r_squared),
        (None, Some(e)) => println!("no fit: {e}"),
        _ => {}
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RootCurveSummary {
    c: Complex64,
    a2_at_zero: Complex64,
    a0_derivative: Complex64,
    tangency: Vec<TangencyCheck>,
    rouche_counts: Vec<usize>,
    rouche_holds: bool,
    orthogonality: Orthogonality,
    cross: Orthogonality,
    max_real_part: f64,
}

pub fn rootcurves(spec: &SpecArgs, out: &OutArgs, phi_min: f64, phi_max: f64, points: usize) -> Result<ExitCode> {
    if !(phi_min > 0.0 && phi_max > phi_min) || points < 2 {
        bail!("need 0 < phi-min < phi-max and at least 2 points");
    }
    let flock = load_spec(spec)?;
    let dir = OutDir::claim(
        &out.out,
        out.force,
        &["rootcurves.csv", "rootcurves.json", "rootcurves.svg"],
    )?;
    let family = SpecFamily(&flock);
    let tracked = track_branches(&family, &log_grid(phi_min, phi_max, points))?;
    let counts = rouche_counts(&tracked);
    let summary = RootCurveSummary {
        c: tracked.c,
        a2_at_zero: tracked.a2_at_zero,
        a0_derivative: tracked.a0_derivative,
        tangency: vec![
            validate_tangency(&tracked.plus, tracked.c),
            validate_tangency(&tracked.minus, tracked.c),
        ],
        rouche_holds: counts.iter().all(|c| *c == 2),
        rouche_counts: counts,
        orthogonality: orthogonality_angle(&tracked.plus, &tracked.minus),
        cross: cross_angle(&family, phi_min)?,
        max_real_part: tracked.plus.max_real_part().max(tracked.minus.max_real_part()),
    };
    dir.write("rootcurves.csv", &rootcurves_csv(&tracked))?;
    dir.write_json("rootcurves.json", &summary)?;
    dir.write(
        "rootcurves.svg",
        &rootcurves_plot(&tracked, "small roots near the origin").to_svg(),
    )?;
    println!(
        "c = {}, tangency ratios {:.3e} / {:.3e}",
        summary.c, summary.tangency[0].final_ratio, summary.tangency[1].final_ratio
    );
    Ok(ExitCode::SUCCESS)
}
