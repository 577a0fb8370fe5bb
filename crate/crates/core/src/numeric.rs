//! Small dense complex linear algebra and polynomial root finding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigenvalues of a square complex matrix via the complex Schur form.
pub fn eigenvalues(a: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    match n {
        0 => Vec::new(),
        1 => vec![a[(0, 0)]],
        _ => {
            let schur = a.clone().schur();
            let (_, t) = schur.unpack();
            (0..n).map(|i| t[(i, i)]).collect()
        }
    }
}

/// Roots of `Σ c_i x^i` (ascending coefficients) from the eigenvalues of
/// the companion matrix; leading zero coefficients are stripped first.
/// Each root gets a few Newton steps on the original polynomial.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = match coeffs.iter().rposition(|c| c.norm() > 0.0) {
        Some(d) => d,
        None => return Vec::new(),
    };
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let mut roots = eigenvalues(&companion);
    for root in roots.iter_mut() {
        *root = polish_root(&coeffs[..=deg], *root);
    }
    roots
}

pub fn horner(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn polish_root(coeffs: &[Complex64], x0: Complex64) -> Complex64 {
    let mut x = x0;
    let (mut px, _) = horner(coeffs, x);
    for _ in 0..4 {
        let (p, dp) = horner(coeffs, x);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let candidate = x - step;
        let (pc, _) = horner(coeffs, candidate);
        if !(pc.norm() < px.norm()) || !candidate.is_finite() {
            break;
        }
        x = candidate;
        px = pc;
        if step.norm() <= 1e-16 * x.norm().max(1.0) {
            break;
        }
    }
    x
}

/// Solves `A x = b` by LU; `None` when `A` is singular.
pub fn solve(a: &DMatrix<Complex64>, b: &[Complex64]) -> Option<Vec<Complex64>> {
    let rhs = DVector::from_column_slice(b);
    a.clone()
        .lu()
        .solve(&rhs)
        .map(|x| x.iter().copied().collect())
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Projective distance `sin ∠(a, b)` between the complex lines through `a` and `b`.
pub fn projective_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let inner: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    let coef = inner / (nb * nb);
    let perp: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - coef * y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (perp / na).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_cubic() {
        // (x − 1)(x + 2)(x − i)
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let coeffs = [2.0 * i, -2.0 - i, one - i, one];
        let coeffs: Vec<Complex64> = coeffs.to_vec();
        let mut roots = polynomial_roots(&coeffs);
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((roots[0] - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
        assert!((roots[1] - i).norm() < 1e-12);
        assert!((roots[2] - one).norm() < 1e-12);
    }

    #[test]
    fn projective_distance_ignores_scaling() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)];
        let b: Vec<Complex64> = a.iter().map(|x| x * Complex64::new(0.0, 3.0)).collect();
        assert!(projective_distance(&a, &b) < 1e-15);
        let e1 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let e2 = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!((projective_distance(&e1, &e2) - 1.0).abs() < 1e-15);
    }
}
