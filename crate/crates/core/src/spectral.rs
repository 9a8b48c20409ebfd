//! Per-mode characteristic polynomials of the periodic system, their roots,
//! and linear-stability classification.
//!
//! On the circle the system block-diagonalizes over the Fourier modes
//! `phi_m = 2 pi m / n`. For each mode the eigenvalues `nu` are the roots of
//! `Q(nu, phi) = det(G(nu, phi))` where `G` is the `T x T` matrix with entries
//! quadratic in `nu`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{assemble_periodic, MIN_CELLS};
use crate::conditions::{d_func, d_func_derivative_at_zero};
use crate::model::{Arrangement, Channel, FlockSpec, ModelError};
use crate::poly::{self, Poly, RootError};
use crate::report::fmt_f64;

/// Default tolerance on real parts used by [`classify`].
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// Largest `n` for which the geometric multiplicity of the zero eigenvalue is
/// checked on the dense matrix.
pub const GEOMETRIC_CHECK_MAX_N: usize = 64;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Roots(#[from] RootError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn cis(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharPoly {
    pub phi: f64,
    /// `coeffs[i]` multiplies `nu^i`.
    pub coeffs: Vec<Complex64>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, nu: Complex64) -> Complex64 {
        poly::horner(&self.coeffs, nu)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `|nu|` below which a root counts as zero.
    pub fn zero_threshold(&self) -> f64 {
        let d = self.degree().max(1) as f64;
        1e-8 * (1.0 + self.max_coeff().powf(1.0 / d))
    }
}

/// Mode matrix `G(nu, phi)`: entry `(k, l)` collects the couplings of agent
/// type `k` to type `l`, each neighbor in a cell `s` steps away carrying the
/// phase `e^{i s phi}`; diagonal entries get the extra `-nu^2`.
fn mode_matrix(spec: &FlockSpec, phi: f64) -> Vec<Vec<Poly>> {
    let t = spec.types() as i32;
    let mut g = vec![vec![Poly(vec![Complex64::default(); 3]); t as usize]; t as usize];
    for k in 0..t {
        let agent = spec.agent(k as usize);
        let row = &mut g[k as usize];
        row[k as usize].0[0] += agent.g_x;
        row[k as usize].0[1] += agent.g_v;
        row[k as usize].0[2] -= 1.0;
        for (channel, power) in [(Channel::X, 0), (Channel::V, 1)] {
            let gain = agent.gain(channel);
            for (off, w) in agent.weights(channel).iter() {
                let target = k + off;
                let l = target.rem_euclid(t) as usize;
                let shift = target.div_euclid(t);
                row[l].0[power] += cis(shift as f64 * phi) * (gain * w);
            }
        }
    }
    g
}

/// Characteristic polynomial of mode `phi`, expanded exactly from the mode
/// matrix determinant.
pub fn char_poly(spec: &FlockSpec, phi: f64) -> CharPoly {
    let det = poly::det(&mode_matrix(spec, phi));
    let mut coeffs = det.0;
    coeffs.truncate(spec.arrangement().degree() + 1);
    CharPoly { phi, coeffs }
}

/// Circulant eigenvalues of the diatomic coupling blocks: `(lambda, mu)` for
/// agent `k` and channel.
pub fn diatomic_symbols(spec: &FlockSpec, k: usize, channel: Channel, phi: f64) -> (Complex64, Complex64) {
    let w = spec.agent(k).weights(channel);
    let lambda = if k == 0 {
        w.get(1) + cis(-phi) * w.get(-1)
    } else {
        w.get(-1) + cis(phi) * w.get(1)
    };
    let mu = 1.0 + cis(phi) * w.get(2) + cis(-phi) * w.get(-2);
    (lambda, mu)
}

fn diatomic_symbol_derivatives(spec: &FlockSpec, k: usize, channel: Channel) -> (Complex64, Complex64) {
    let w = spec.agent(k).weights(channel);
    let i = Complex64::i();
    let dlambda = if k == 0 { -i * w.get(-1) } else { i * w.get(1) };
    let dmu = i * (w.get(2) - w.get(-2));
    (dlambda, dmu)
}

/// Closed-form constant term `a_0(phi)` of the characteristic polynomial.
pub fn a0_constant_term(spec: &FlockSpec, phi: f64) -> Complex64 {
    let a = spec.agents();
    match spec.arrangement() {
        Arrangement::TriatomicNN => {
            let g = a[0].g_x * a[1].g_x * a[2].g_x;
            d_func(a[0].rho_x.get(1), a[1].rho_x.get(1), a[2].rho_x.get(1), phi) * g
        }
        Arrangement::DiatomicNNN => {
            let (l1, m1) = diatomic_symbols(spec, 0, Channel::X, phi);
            let (l2, m2) = diatomic_symbols(spec, 1, Channel::X, phi);
            (m1 * m2 - l1 * l2) * (a[0].g_x * a[1].g_x)
        }
    }
}

/// Closed-form `d a_0 / d phi` at `phi = 0`.
pub fn a0_derivative_at_zero(spec: &FlockSpec) -> Complex64 {
    let a = spec.agents();
    match spec.arrangement() {
        Arrangement::TriatomicNN => {
            let g = a[0].g_x * a[1].g_x * a[2].g_x;
            d_func_derivative_at_zero(a[0].rho_x.get(1), a[1].rho_x.get(1), a[2].rho_x.get(1)) * g
        }
        Arrangement::DiatomicNNN => {
            let (l1, m1) = diatomic_symbols(spec, 0, Channel::X, 0.0);
            let (l2, m2) = diatomic_symbols(spec, 1, Channel::X, 0.0);
            let (dl1, dm1) = diatomic_symbol_derivatives(spec, 0, Channel::X);
            let (dl2, dm2) = diatomic_symbol_derivatives(spec, 1, Channel::X);
            (dm1 * m2 + m1 * dm2 - dl1 * l2 - l1 * dl2) * (a[0].g_x * a[1].g_x)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub m: usize,
    pub phi: f64,
    /// Sorted by real part, descending.
    pub eigenvalues: Vec<Complex64>,
    /// `|Q(nu, phi)|` per eigenvalue.
    pub residuals: Vec<f64>,
    pub zero_threshold: f64,
    pub coeff_scale: f64,
}

pub fn mode_roots(cp: &CharPoly) -> Result<ModeSpectrum, SpectralError> {
    let mut nus = poly::roots(&cp.coeffs)?;
    nus.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let residuals = nus.iter().map(|nu| cp.eval(*nu).norm()).collect();
    Ok(ModeSpectrum {
        m: 0,
        phi: cp.phi,
        eigenvalues: nus,
        residuals,
        zero_threshold: cp.zero_threshold(),
        coeff_scale: cp.max_coeff(),
    })
}

/// Mode angle `2 pi m / n`.
pub fn mode_angle(m: usize, n: usize) -> f64 {
    2.0 * PI * m as f64 / n as f64
}

/// Roots of every mode `m = 0..n`, in mode order.
pub fn spectrum_periodic(spec: &FlockSpec, n: usize) -> Result<Vec<ModeSpectrum>, SpectralError> {
    if n < MIN_CELLS {
        return Err(ModelError::SizeError { n, min: MIN_CELLS }.into());
    }
    (0..n)
        .into_par_iter()
        .map(|m| {
            let mut ms = mode_roots(&char_poly(spec, mode_angle(m, n)))?;
            ms.m = m;
            Ok(ms)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityStatus {
    Stable,
    MarginallyUnstable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub m: usize,
    pub phi: f64,
    pub nu: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub status: StabilityStatus,
    /// Algebraic count of zero eigenvalues over all modes.
    pub zero_multiplicity: usize,
    /// Zero eigenvalues found in the `phi = 0` mode.
    pub zero_multiplicity_at_phi0: usize,
    /// Largest real part among the nonzero eigenvalues.
    pub max_real_part: f64,
    pub witness_mode: Option<Witness>,
    pub tol: f64,
    /// Nullity of the dense system matrix, when it was computed.
    pub geometric_multiplicity: Option<usize>,
    /// `a_2(0)`, the coefficient certifying the double zero when the dense
    /// check is skipped.
    pub a2_at_zero: Option<Complex64>,
}

/// Classify a full periodic spectrum.
///
/// Stable: exactly two zero eigenvalues, both at `phi = 0`, and every other
/// real part below `-tol`. Unstable: a nonzero eigenvalue with real part above
/// `tol`. Anything else is marginal.
pub fn classify(spectra: &[ModeSpectrum], tol: f64) -> StabilityVerdict {
    let mut zeros = 0;
    let mut zeros_phi0 = 0;
    let mut max_re = f64::NEG_INFINITY;
    let mut witness = None;
    for ms in spectra {
        for nu in &ms.eigenvalues {
            if nu.norm() < ms.zero_threshold {
                zeros += 1;
                if ms.phi == 0.0 {
                    zeros_phi0 += 1;
                }
                continue;
            }
            if nu.re > max_re {
                max_re = nu.re;
                witness = Some(Witness {
                    m: ms.m,
                    phi: ms.phi,
                    nu: *nu,
                });
            }
        }
    }
    let status = if max_re > tol {
        StabilityStatus::Unstable
    } else if zeros == 2 && zeros_phi0 == 2 && max_re < -tol {
        StabilityStatus::Stable
    } else {
        StabilityStatus::MarginallyUnstable
    };
    StabilityVerdict {
        status,
        zero_multiplicity: zeros,
        zero_multiplicity_at_phi0: zeros_phi0,
        max_real_part: max_re,
        witness_mode: witness,
        tol,
        geometric_multiplicity: None,
        a2_at_zero: None,
    }
}

/// Nullity of the dense periodic matrix from its singular values.
pub fn dense_nullity(spec: &FlockSpec, n: usize) -> Result<usize, ModelError> {
    let m = assemble_periodic(spec, n)?;
    let sv = m.entries.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let thresh = 1e-10 * smax.max(1.0);
    Ok(sv.iter().filter(|s| **s <= thresh).count())
}

/// Spectrum, classification and the double-zero certificate for `n` cells.
///
/// For `n <= 64` the geometric multiplicity of zero is measured on the dense
/// matrix; above that a nonvanishing `a_2(0)` stands in for it.
pub fn assess_stability(
    spec: &FlockSpec,
    n: usize,
    tol: f64,
) -> Result<(Vec<ModeSpectrum>, StabilityVerdict), SpectralError> {
    let spectra = spectrum_periodic(spec, n)?;
    let mut verdict = classify(&spectra, tol);
    let cp0 = char_poly(spec, 0.0);
    let a2 = cp0.coeffs[2];
    verdict.a2_at_zero = Some(a2);
    if n <= GEOMETRIC_CHECK_MAX_N {
        let nullity = dense_nullity(spec, n)?;
        verdict.geometric_multiplicity = Some(nullity);
        if verdict.status == StabilityStatus::Stable && nullity != 1 {
            verdict.status = StabilityStatus::MarginallyUnstable;
        }
    } else if verdict.status == StabilityStatus::Stable && a2.norm() <= tol * cp0.max_coeff().max(1.0) {
        verdict.status = StabilityStatus::MarginallyUnstable;
    }
    Ok((spectra, verdict))
}

/// One row per eigenvalue: `m,phi,re,im,residual`.
pub fn spectrum_csv(spectra: &[ModeSpectrum]) -> String {
    let mut out = String::from("m,phi,re,im,residual\n");
    for ms in spectra {
        for (nu, r) in ms.eigenvalues.iter().zip(&ms.residuals) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                ms.m,
                fmt_f64(ms.phi),
                fmt_f64(nu.re),
                fmt_f64(nu.im),
                fmt_f64(*r)
            );
        }
    }
    out
}
