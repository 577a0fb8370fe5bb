//! Numerical dynamics near a certified parabolic direction: orbits, basin
//! sampling and statistics, Fatou coordinates, the inverse germ and the
//! Leau-Fatou flower of one-resonant normal forms.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::jets::{GermJet, JetError};
use crate::normalform::NormalFormError;
use crate::numeric;
use crate::shadow::ShadowError;

pub mod basin;
pub mod fatou;
pub mod flower;
pub mod inverse;
pub mod orbit;

pub use basin::{
    basin_sampler, verify_basin, verify_petals, BasinParams, BasinStatistics, PetalSurvey,
    VerifyOptions,
};
pub use fatou::{estimate_fatou, FatouEstimate, FatouOptions};
pub use flower::{flower_coverage, FlowerLabel, FlowerOptions, FlowerReport};
pub use inverse::{inverse_germ_check, InverseCheck};
pub use orbit::{iterate_orbit, write_orbit_csv, OrbitTrace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("infeasible basin parameters: {0}")]
    InfeasibleParams(String),
    #[error("petal {petal} out of range 1..={k0}")]
    PetalOutOfRange { petal: usize, k0: u32 },
    #[error("c-estimate did not settle: relative spread {spread:.3e}")]
    NonConvergentC { spread: f64 },
    #[error("|U| = {modulus:.3e} exceeds double precision range for Fatou estimation")]
    PrecisionLimit { modulus: f64 },
    #[error("Fatou sample left the right half-plane (Re U = {re:.3e})")]
    BranchCrossing { re: f64 },
    #[error("orbit of seed {seed} escaped")]
    Escaped { seed: usize },
    #[error("germ is not one-resonant with r = n (m = {m}, r = {r}, n = {n})")]
    NotOneResonant { m: usize, r: usize, n: usize },
    #[error("germ is not in normal form ({offenders} non-resonant terms)")]
    NotNormalForm { offenders: usize },
    #[error("no seeds supplied")]
    NoSeeds,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Shadow(#[from] ShadowError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

impl DynamicsError {
    pub fn code(&self) -> &'static str {
        match self {
            DynamicsError::InfeasibleParams(_) => "infeasible-params",
            DynamicsError::PetalOutOfRange { .. } => "petal-out-of-range",
            DynamicsError::NonConvergentC { .. } => "non-convergent-c",
            DynamicsError::PrecisionLimit { .. } => "precision-limit",
            DynamicsError::BranchCrossing { .. } => "branch-crossing",
            DynamicsError::Escaped { .. } => "escaped",
            DynamicsError::NotOneResonant { .. } => "not-one-resonant",
            DynamicsError::NotNormalForm { .. } => "not-normal-form",
            DynamicsError::NoSeeds => "no-seeds",
            DynamicsError::DimensionMismatch { .. } => "dimension-mismatch",
            DynamicsError::Jet(_) => "jet",
            DynamicsError::Shadow(e) => e.code(),
            DynamicsError::NormalForm(e) => e.code(),
        }
    }
}

/// A holomorphic self-map of `ℂⁿ` near the origin that can be iterated.
pub trait GermMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, z: &[Complex64], out: &mut [Complex64]);
}

/// A jet flattened into `(coefficient, [(variable, power)])` lists for
/// repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledGerm {
    n: usize,
    max_power: usize,
    linear: Vec<Complex64>,
    terms: Vec<Vec<(Complex64, Vec<(usize, usize)>)>>,
}

impl CompiledGerm {
    pub fn new(jet: &GermJet) -> Self {
        let n = jet.n();
        let mut max_power = 1;
        let terms = (0..n)
            .map(|j| {
                jet.terms(j)
                    .iter()
                    .map(|(q, c)| {
                        let factors: Vec<(usize, usize)> = q
                            .entries()
                            .iter()
                            .enumerate()
                            .filter(|(_, &e)| e > 0)
                            .map(|(i, &e)| (i, e as usize))
                            .collect();
                        for &(_, e) in &factors {
                            max_power = max_power.max(e);
                        }
                        (*c, factors)
                    })
                    .collect()
            })
            .collect();
        CompiledGerm {
            n,
            max_power,
            linear: jet.linear().to_vec(),
            terms,
        }
    }
}

impl GermMap for CompiledGerm {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, z: &[Complex64], out: &mut [Complex64]) {
        let stride = self.max_power + 1;
        let need = self.n * stride;
        let mut stack = [Complex64::new(1.0, 0.0); 64];
        let mut heap = Vec::new();
        let powers: &mut [Complex64] = if need <= stack.len() {
            &mut stack[..need]
        } else {
            heap.resize(need, Complex64::new(1.0, 0.0));
            &mut heap
        };
        for i in 0..self.n {
            for k in 1..stride {
                powers[i * stride + k] = powers[i * stride + k - 1] * z[i];
            }
        }
        for j in 0..self.n {
            let mut acc = self.linear[j] * z[j];
            for (c, factors) in &self.terms[j] {
                let mut t = *c;
                for &(i, e) in factors {
                    t *= powers[i * stride + e];
                }
                acc += t;
            }
            out[j] = acc;
        }
    }
}

/// Wraps a closure as a [`GermMap`].
pub struct FnGerm<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[Complex64], &mut [Complex64]) + Sync> FnGerm<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnGerm { n, f }
    }
}

impl<F: Fn(&[Complex64], &mut [Complex64]) + Sync> GermMap for FnGerm<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, z: &[Complex64], out: &mut [Complex64]) {
        (self.f)(z, out)
    }
}

/// Coordinates adapted to a normalized direction `v` on the leaf space:
/// `u = x v + Σ_{t≠i} y_t e_t` with `i` the largest entry of `v`,
/// `ŷ = y/x`, `U = x^{−k0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicFrame {
    v: Vec<Complex64>,
    pivot: usize,
    k0: u32,
}

impl ParabolicFrame {
    pub fn new(v: Vec<Complex64>, k0: u32) -> Self {
        let mut pivot = 0;
        for (i, x) in v.iter().enumerate() {
            if x.norm() > v[pivot].norm() {
                pivot = i;
            }
        }
        ParabolicFrame { v, pivot, k0 }
    }

    pub fn v(&self) -> &[Complex64] {
        &self.v
    }

    pub fn k0(&self) -> u32 {
        self.k0
    }

    pub fn m(&self) -> usize {
        self.v.len()
    }

    /// `(x, ŷ)` of a point `u` of the leaf space.
    pub fn coordinates(&self, u: &[Complex64]) -> (Complex64, Vec<Complex64>) {
        let x = u[self.pivot] / self.v[self.pivot];
        let yhat = (0..self.v.len())
            .filter(|&t| t != self.pivot)
            .map(|t| (u[t] - x * self.v[t]) / x)
            .collect();
        (x, yhat)
    }

    pub fn point(&self, x: Complex64, yhat: &[Complex64]) -> Vec<Complex64> {
        let mut u: Vec<Complex64> = self.v.iter().map(|vi| x * vi).collect();
        let mut k = 0;
        for (t, ut) in u.iter_mut().enumerate() {
            if t != self.pivot {
                *ut += x * yhat[k];
                k += 1;
            }
        }
        u
    }

    pub fn big_u(&self, x: Complex64) -> Complex64 {
        x.powi(-(self.k0 as i32))
    }

    /// Centre angle of petal `i` (1-based) in the `x`-plane.
    pub fn petal_angle(&self, petal: usize) -> f64 {
        2.0 * PI * (petal as f64 - 1.0) / self.k0 as f64
    }

    /// `|Arg(x e^{−iθ_i})|`.
    pub fn sector_offset(&self, x: Complex64, petal: usize) -> f64 {
        (x * Complex64::from_polar(1.0, -self.petal_angle(petal)))
            .arg()
            .abs()
    }

    /// The petal whose centre is angularly closest to `x`.
    pub fn petal_of(&self, x: Complex64) -> usize {
        (1..=self.k0 as usize)
            .min_by(|&a, &b| {
                self.sector_offset(x, a)
                    .partial_cmp(&self.sector_offset(x, b))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(1)
    }

    pub fn direction_residual(&self, u: &[Complex64]) -> f64 {
        numeric::projective_distance(u, &self.v)
    }
}

pub(crate) fn max_norm(z: &[Complex64]) -> f64 {
    z.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi_index::MultiIndex;

    #[test]
    fn compiled_germ_matches_jet() {
        let l = vec![Complex64::new(0.6, 0.8), Complex64::new(0.5, 0.0)];
        let jet = GermJet::new(l, 4)
            .unwrap()
            .with_term(0, MultiIndex::new(vec![2, 1]), Complex64::new(0.3, -0.2))
            .unwrap()
            .with_term(1, MultiIndex::new(vec![0, 4]), Complex64::new(-1.0, 0.5))
            .unwrap();
        let z = [Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.05)];
        let expected = jet.evaluate(&z).unwrap();
        let mut out = [Complex64::default(); 2];
        CompiledGerm::new(&jet).apply(&z, &mut out);
        for (a, b) in out.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn frame_round_trip() {
        let frame =
            ParabolicFrame::new(vec![Complex64::new(0.3, 0.1), Complex64::new(0.5, -0.2)], 2);
        let x = Complex64::new(0.01, 0.002);
        let yhat = [Complex64::new(0.1, -0.3)];
        let u = frame.point(x, &yhat);
        let (x2, y2) = frame.coordinates(&u);
        assert!((x - x2).norm() < 1e-15);
        assert!((yhat[0] - y2[0]).norm() < 1e-12);
        assert_eq!(frame.petal_of(Complex64::new(-1.0, 0.1)), 2);
    }
}
