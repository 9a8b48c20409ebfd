//! Dense polynomials with complex coefficients and companion-matrix roots.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Relative size below which trailing coefficients count as exact zeros.
pub const TRAILING_ZERO_REL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("leading coefficient {0} is zero or negligible")]
    DegenerateLeadingCoefficient(Complex64),
    #[error("eigenvalue iteration did not converge for degree {0}")]
    NoConvergence(usize),
}

/// Coefficients in ascending order: `coeffs[i]` multiplies `z^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<Complex64>);

impl Poly {
    pub fn zero() -> Self {
        Poly(vec![Complex64::new(0.0, 0.0)])
    }

    pub fn constant(c: Complex64) -> Self {
        Poly(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.0, z)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.0.len().max(other.0.len());
        let get = |p: &Poly, i: usize| p.0.get(i).copied().unwrap_or_default();
        Poly((0..len).map(|i| get(self, i) + get(other, i)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Poly {
        Poly(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![Complex64::default(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::default(), |acc, c| acc * z + c)
}

fn horner_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::default();
    let mut dp = Complex64::default();
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Determinant of a small square matrix of polynomials by cofactor expansion.
pub fn det(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    match n {
        0 => Poly::constant(Complex64::new(1.0, 0.0)),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = Poly::zero();
            for col in 0..n {
                let minor: Vec<Vec<Poly>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != col)
                            .map(|(_, p)| p.clone())
                            .collect()
                    })
                    .collect();
                let term = m[0][col].mul(&det(&minor));
                acc = if col % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Parlett-Reinsch balancing with power-of-two scalings.
fn balance(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    let radix = 2.0_f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[(j, i)]);
                    r += abs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                let ginv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= ginv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

fn quadratic_roots(c: &[Complex64]) -> [Complex64; 2] {
    let (a0, a1, a2) = (c[0], c[1], c[2]);
    let disc = (a1 * a1 - a0 * a2 * 4.0).sqrt();
    // pick the sign that avoids cancellation
    let q = if (a1.conj() * disc).re >= 0.0 {
        -(a1 + disc) * 0.5
    } else {
        -(a1 - disc) * 0.5
    };
    if q == Complex64::default() {
        return [q, q];
    }
    [q / a2, a0 / q]
}

/// All roots of the polynomial, with multiplicity.
///
/// Negligible trailing coefficients (relative `1e-14`) are removed first and
/// reported as exact zero roots; the rest are eigenvalues of the balanced
/// companion matrix, refined by a few guarded Newton steps.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>, RootError> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let lead = *coeffs.last().unwrap_or(&Complex64::default());
    if scale == 0.0 || lead.norm() <= f64::EPSILON * scale {
        return Err(RootError::DegenerateLeadingCoefficient(lead));
    }
    let zeros = coeffs
        .iter()
        .take_while(|c| c.norm() <= TRAILING_ZERO_REL * scale)
        .count();
    let reduced = &coeffs[zeros..];
    let deg = reduced.len() - 1;
    let mut out = vec![Complex64::default(); zeros];
    match deg {
        0 => {}
        1 => out.push(-reduced[0] / reduced[1]),
        2 => out.extend(quadratic_roots(reduced)),
        _ => {
            let mut comp = DMatrix::<Complex64>::zeros(deg, deg);
            for i in 1..deg {
                comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
            }
            for i in 0..deg {
                comp[(i, deg - 1)] = -reduced[i] / reduced[deg];
            }
            balance(&mut comp);
            let schur = nalgebra::Schur::try_new(comp, f64::EPSILON, 10_000).ok_or(RootError::NoConvergence(deg))?;
            let (_, t) = schur.unpack();
            out.extend((0..deg).map(|i| t[(i, i)]));
        }
    }
    for z in out.iter_mut().skip(zeros) {
        *z = polish(reduced, *z);
    }
    Ok(out)
}

fn polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let mut best = horner(coeffs, z).norm();
    for _ in 0..3 {
        let (p, dp) = horner_with_derivative(coeffs, z);
        if dp == Complex64::default() {
            break;
        }
        let cand = z - p / dp;
        let r = horner(coeffs, cand).norm();
        if r.is_nan() || r >= best {
            break;
        }
        best = r;
        z = cand;
    }
    z
}
