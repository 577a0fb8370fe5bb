//! Fatou coordinate `μ(z) = lim (U_ℓ − ℓ − c log U_ℓ)` along orbits in a
//! verified basin.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::orbit::walk;
use super::{DynamicsError, GermMap, ParabolicFrame};
use crate::resonance::ResonanceStructure;

/// Relative spread of the corrected `c` samples allowed.
pub const C_SPREAD_TOL: f64 = 1e-2;
/// Beyond this `|U|` doubles no longer resolve `U_{ℓ+1} − U_ℓ − 1`.
pub const PRECISION_LIMIT: f64 = 1e8;
const TRIM: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FatouOptions {
    pub burn_in: usize,
    pub horizon: usize,
    pub escape_radius: f64,
}

impl Default for FatouOptions {
    fn default() -> Self {
        FatouOptions {
            burn_in: 1_000,
            horizon: 10_000,
            escape_radius: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FatouEstimate {
    pub c_estimate: Complex64,
    pub c_per_seed: Vec<Complex64>,
    /// `μ(z)` keyed by seed index.
    pub mu_values: BTreeMap<usize, Complex64>,
    /// `max |μ(F(z)) − μ(z) − 1|` over the seeds.
    pub semiconjugacy_residual: f64,
    pub iterations_used: usize,
    pub burn_in: usize,
    /// Largest trimmed relative range of the corrected samples of one seed.
    pub spread: f64,
    /// `max |c_seed − c̄| / max(|c̄|, 1)`. Non-zero when the one-step
    /// expansion of `U` has an orbit-dependent `1/U` term, e.g. from `ŷU`
    /// tending to a constant along directions with a director equal to 1.
    pub c_dispersion: f64,
}

struct SeedRun {
    big_u: Vec<Complex64>,
    c: Complex64,
    spread: f64,
}

/// Estimates `c` per seed from `(U_{ℓ+1} − U_ℓ − 1)U_ℓ` on
/// `[burn_in, horizon)` (least squares in `1, 1/U, log U/U`, then a 10%
/// trimmed check of the corrected samples) and evaluates `μ` at
/// `ℓ = horizon` with that seed's `c` and a tail in `1/U, log U/U, 1/U²`
/// fitted to the `O(U⁻²)` remainder of each step.
pub fn estimate_fatou(
    germ: &dyn GermMap,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
    seeds: &[Vec<Complex64>],
    options: &FatouOptions,
) -> Result<FatouEstimate, DynamicsError> {
    if seeds.is_empty() {
        return Err(DynamicsError::NoSeeds);
    }
    if options.burn_in + 8 > options.horizon {
        return Err(DynamicsError::InfeasibleParams(format!(
            "horizon {} must exceed burn-in {} by at least 8",
            options.horizon, options.burn_in
        )));
    }
    let runs: Vec<SeedRun> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, z0)| run_seed(germ, structure, frame, options, index, z0))
        .collect::<Result<_, _>>()?;
    let count = runs.len() as f64;
    let c: Complex64 = runs.iter().map(|r| r.c).sum::<Complex64>() / count;
    let dispersion = runs.iter().map(|r| (r.c - c).norm()).fold(0.0, f64::max) / c.norm().max(1.0);
    let spread = runs.iter().map(|r| r.spread).fold(0.0, f64::max);
    if spread > C_SPREAD_TOL || !spread.is_finite() {
        return Err(DynamicsError::NonConvergentC { spread });
    }
    let n = options.horizon;
    let mut mu_values = BTreeMap::new();
    let mut residual: f64 = 0.0;
    for (index, run) in runs.iter().enumerate() {
        let c = run.c;
        let kappa = tail_coefficients(&run.big_u, c, options.burn_in, n);
        let mu_at = |u: Complex64, l: usize| {
            let tail: Complex64 = tail_basis(u).iter().zip(&kappa).map(|(f, k)| f * k).sum();
            u - l as f64 - c * u.ln() + tail
        };
        let mu = mu_at(run.big_u[n], n);
        let mu_next = mu_at(run.big_u[n + 1], n + 1);
        residual = residual.max((mu_next - mu).norm());
        mu_values.insert(index, mu);
    }
    Ok(FatouEstimate {
        c_estimate: c,
        c_per_seed: runs.iter().map(|r| r.c).collect(),
        mu_values,
        semiconjugacy_residual: residual,
        iterations_used: n,
        burn_in: options.burn_in,
        spread,
        c_dispersion: dispersion,
    })
}

fn run_seed(
    germ: &dyn GermMap,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
    options: &FatouOptions,
    index: usize,
    z0: &[Complex64],
) -> Result<SeedRun, DynamicsError> {
    let mut big_u = Vec::with_capacity(options.horizon + 2);
    let mut failure = None;
    let (steps, escaped, _) = walk(
        germ,
        z0,
        options.horizon + 1,
        options.escape_radius,
        |_, z| {
            let (x, _) = frame.coordinates(&structure.project(z));
            let u = frame.big_u(x);
            if !(u.norm() <= PRECISION_LIMIT) {
                failure = Some(DynamicsError::PrecisionLimit { modulus: u.norm() });
                return false;
            }
            if u.re <= 0.0 {
                failure = Some(DynamicsError::BranchCrossing { re: u.re });
                return false;
            }
            big_u.push(u);
            true
        },
    );
    if let Some(err) = failure {
        return Err(err);
    }
    if escaped || steps < options.horizon + 1 || big_u.len() < options.horizon + 2 {
        return Err(DynamicsError::Escaped { seed: index });
    }
    let range = options.burn_in..options.horizon;
    let samples: Vec<(Complex64, Complex64)> = range
        .map(|l| (big_u[l], (big_u[l + 1] - big_u[l] - 1.0) * big_u[l]))
        .collect();
    let a = DMatrix::from_fn(samples.len(), C_BASIS, |i, j| c_basis(samples[i].0)[j]);
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .unwrap_or_else(|_| DVector::from_element(C_BASIS, Complex64::default()));
    let c = coef[0];
    let corrected: Vec<Complex64> = samples
        .iter()
        .map(|(u, w)| {
            let f = c_basis(*u);
            w - (1..C_BASIS).map(|j| coef[j] * f[j]).sum::<Complex64>()
        })
        .collect();
    let spread = trimmed_range(&corrected) / c.norm().max(1.0);
    Ok(SeedRun { big_u, c, spread })
}

/// `max` of the re/im ranges after dropping the top and bottom 10%.
fn trimmed_range(values: &[Complex64]) -> f64 {
    let range = |mut xs: Vec<f64>| -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let cut = (xs.len() as f64 * TRIM) as usize;
        let kept = &xs[cut..xs.len() - cut];
        match (kept.first(), kept.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    };
    let re = range(values.iter().map(|v| v.re).collect());
    let im = range(values.iter().map(|v| v.im).collect());
    re.max(im)
}

const C_BASIS: usize = 7;

/// Expansion of `(ΔU − 1)·U` in `1/U` and `log U` up to `U⁻³`.
fn c_basis(u: Complex64) -> [Complex64; C_BASIS] {
    let l = u.ln();
    let (r, r2) = (1.0 / u, 1.0 / (u * u));
    [
        Complex64::new(1.0, 0.0),
        r,
        l * r,
        r2,
        l * r2,
        l * l * r2,
        r2 * r,
    ]
}

fn tail_basis(u: Complex64) -> [Complex64; 3] {
    let l = u.ln();
    [1.0 / u, l / u, 1.0 / (u * u)]
}

/// Least-squares `κ` with `Σ κ_j φ_j(U)` absorbing `ΔU − 1 − c Δlog U`
/// over the late half of the window, weighted by `U²`.
fn tail_coefficients(
    big_u: &[Complex64],
    c: Complex64,
    burn_in: usize,
    horizon: usize,
) -> [Complex64; 3] {
    let start = burn_in + (horizon - burn_in) / 2;
    let rows = horizon - start;
    let mut a = DMatrix::zeros(rows, 3);
    let mut b = DVector::zeros(rows);
    for (i, l) in (start..horizon).enumerate() {
        let (u, next) = (big_u[l], big_u[l + 1]);
        let w = u * u;
        let (p, q) = (tail_basis(u), tail_basis(next));
        for j in 0..3 {
            a[(i, j)] = (q[j] - p[j]) * w;
        }
        b[i] = -(next - u - 1.0 - c * (next.ln() - u.ln())) * w;
    }
    let ah = a.adjoint();
    match (&ah * &a).lu().solve(&(&ah * &b)) {
        Some(k) => [k[0], k[1], k[2]],
        None => [Complex64::default(); 3],
    }
}
