#![allow(dead_code)]

use flockstab_core::assembly::{assemble_line, assemble_periodic, BoundaryType};
use flockstab_core::simulation::{simulate_system, SimOptions};
use flockstab_core::{build_spec, spectrum_periodic, AgentParams, Arrangement, Complex64, FlockSpec, NeighborWeights};
use rand::Rng;

/// Forward/backward split of a unit mass, negated: each row sums to -1.
fn nearest_weights<R: Rng>(rng: &mut R) -> NeighborWeights {
    let u: f64 = rng.gen_range(0.05..0.95);
    NeighborWeights::nearest(-u, -(1.0 - u))
}

fn next_nearest_weights<R: Rng>(rng: &mut R) -> NeighborWeights {
    let raw: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.05..1.0));
    let s: f64 = raw.iter().sum();
    NeighborWeights::next_nearest(-raw[0] / s, -raw[1] / s, -raw[2] / s, -raw[3] / s)
}

pub fn random_spec<R: Rng>(rng: &mut R, arrangement: Arrangement) -> FlockSpec {
    let agents = (0..arrangement.types())
        .map(|_| {
            let (rho_x, rho_v) = match arrangement {
                Arrangement::TriatomicNN => (nearest_weights(rng), nearest_weights(rng)),
                Arrangement::DiatomicNNN => (next_nearest_weights(rng), next_nearest_weights(rng)),
            };
            AgentParams {
                g_x: -rng.gen_range(0.3..2.0),
                g_v: -rng.gen_range(0.3..2.0),
                rho_x,
                rho_v,
            }
        })
        .collect();
    build_spec(arrangement, agents).expect("generated spec satisfies the constraints")
}

/// Eigenvalues of the dense periodic matrix.
pub fn dense_spectrum(spec: &FlockSpec, n: usize) -> Vec<Complex64> {
    let m = assemble_periodic(spec, n).unwrap();
    m.entries.complex_eigenvalues().iter().copied().collect()
}

pub fn mode_spectrum(spec: &FlockSpec, n: usize) -> Vec<Complex64> {
    spectrum_periodic(spec, n)
        .unwrap()
        .into_iter()
        .flat_map(|m| m.eigenvalues)
        .collect()
}

/// Largest distance in a greedy global matching of two equal-size multisets:
/// all cross pairs are sorted by distance and taken shortest first.
pub fn pairing_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets differ in size");
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
            matched += 1;
            if matched == a.len() {
                break;
            }
        }
    }
    worst
}

pub fn check_row_sums(spec: &FlockSpec, n: usize) -> Result<(), String> {
    let systems = [
        ("circle", assemble_periodic(spec, n)),
        ("type I", assemble_line(spec, n, BoundaryType::TypeI)),
        ("type II", assemble_line(spec, n, BoundaryType::TypeII)),
    ];
    for (name, sys) in systems {
        let sys = sys.map_err(|e| e.to_string())?;
        let worst = sys.acceleration_row_sums().iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        if worst > 1e-12 {
            return Err(format!("{name}: row sum {worst:e}"));
        }
    }
    Ok(())
}

pub fn check_conjugate_closed(spec: &FlockSpec, n: usize) -> Result<(), String> {
    let s = mode_spectrum(spec, n);
    let conj: Vec<Complex64> = s.iter().map(|z| z.conj()).collect();
    let d = pairing_distance(&s, &conj);
    if d < 1e-8 {
        Ok(())
    } else {
        Err(format!("conjugate pairing distance {d:e}"))
    }
}

fn run(spec: &FlockSpec, n: usize, bc: BoundaryType, x0: &[f64], t_max: f64) -> Vec<Vec<f64>> {
    let sys = assemble_line(spec, n, bc).unwrap();
    let opts = SimOptions {
        t_max,
        dt: 0.01,
        store_every: Some(50),
    };
    simulate_system(&sys, x0, &opts).unwrap().states
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Trajectory of `a x + b y` equals `a traj(x) + b traj(y)`.
pub fn check_linearity<R: Rng>(rng: &mut R, spec: &FlockSpec, n: usize, bc: BoundaryType) -> Result<(), String> {
    let dim = 2 * n * spec.types();
    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
    let (tx, ty, txy) = (
        run(spec, n, bc, &x, 5.0),
        run(spec, n, bc, &y, 5.0),
        run(spec, n, bc, &xy, 5.0),
    );
    for ((sx, sy), sxy) in tx.iter().zip(&ty).zip(&txy) {
        let scale = 1.0 + max_abs(sxy);
        for i in 0..dim {
            let err = (sxy[i] - a * sx[i] - b * sy[i]).abs();
            if err > 1e-10 * scale {
                return Err(format!("superposition error {err:e}"));
            }
        }
    }
    Ok(())
}

/// Shifting every position by a constant shifts the trajectory by it.
pub fn check_translation<R: Rng>(rng: &mut R, spec: &FlockSpec, n: usize, bc: BoundaryType) -> Result<(), String> {
    let nv = n * spec.types();
    let x: Vec<f64> = (0..2 * nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let shift = rng.gen_range(-50.0..50.0);
    let mut xs = x.clone();
    for v in &mut xs[..nv] {
        *v += shift;
    }
    let (a, b) = (run(spec, n, bc, &x, 5.0), run(spec, n, bc, &xs, 5.0));
    for (sa, sb) in a.iter().zip(&b) {
        let scale = 1.0 + max_abs(sb);
        for i in 0..2 * nv {
            let want = if i < nv { sa[i] + shift } else { sa[i] };
            let err = (sb[i] - want).abs();
            if err > 1e-10 * scale {
                return Err(format!("translation error {err:e} at slot {i}"));
            }
        }
    }
    Ok(())
}

/// Relative change of the transient magnitude when `dt` is halved, or `None`
/// when either run leaves the representable range.
pub fn refinement_change(spec: &FlockSpec, n: usize, bc: BoundaryType, t_max: f64) -> Option<f64> {
    let mag = |dt: f64| {
        let opts = SimOptions {
            t_max,
            dt,
            store_every: None,
        };
        flockstab_core::simulate(spec, n, bc, &opts)
            .ok()
            .map(|t| flockstab_core::transient(&t).magnitude)
    };
    let (coarse, fine) = (mag(0.01)?, mag(0.005)?);
    Some((coarse - fine).abs() / fine.abs())
}
