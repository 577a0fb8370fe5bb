//! Forward/backward classification of a punctured ball for one-resonant
//! normal forms, via `Φ(u) = Π G_j^{α_j} = u + Λu^{k0+1} + …` on `u = z^α`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{CompiledGerm, DynamicsError, GermMap};
use crate::jets::GermJet;
use crate::multi_index::MultiIndex;
use crate::normalform::{
    default_table_bound, is_normal_form, resonant_coefficients, WeightedOrder,
};
use crate::resonance::{monomial_value, ResonanceStructure};
use crate::shadow::{build_shadow, ShadowError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowerOptions {
    pub radius: f64,
    pub samples: usize,
    /// Step budget per direction when dovetailing.
    pub budget: usize,
    /// Forward trap `Re W > trap`, backward trap `Re W < −trap`.
    pub trap: f64,
    pub rng_seed: u64,
    /// Extra points drawn on each hyperplane `{z_j = 0}`, `α_j ≠ 0`.
    pub hyperplane_samples: usize,
    /// Points re-labelled after moving along their fiber.
    pub fiber_checks: usize,
}

impl Default for FlowerOptions {
    fn default() -> Self {
        FlowerOptions {
            radius: 1e-2,
            samples: 10_000,
            budget: 2_000,
            trap: 50.0,
            rng_seed: 0,
            hyperplane_samples: 20,
            fiber_checks: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "label", rename_all = "kebab-case")]
pub enum FlowerLabel {
    /// Attracted under `G`, inside attracting petal `petal` (1-based).
    Forward {
        petal: usize,
    },
    /// Attracted under `G⁻¹`, inside repelling petal `petal`.
    Backward {
        petal: usize,
    },
    LinearizableLeaf,
    Unresolved,
}

impl FlowerLabel {
    pub fn is_resolved(&self) -> bool {
        matches!(
            self,
            FlowerLabel::Forward { .. } | FlowerLabel::Backward { .. }
        )
    }
}

/// The data needed to label points.
pub struct FlowerClassifier {
    k0: u32,
    lambda: Complex64,
    alpha: MultiIndex,
    trap: f64,
    forward: CompiledGerm,
    backward: CompiledGerm,
    attracting: Vec<Complex64>,
    repelling: Vec<Complex64>,
}

impl FlowerClassifier {
    pub fn new(
        g: &GermJet,
        structure: &ResonanceStructure,
        trap: f64,
    ) -> Result<Self, DynamicsError> {
        if structure.m() != 1 || structure.r() != structure.n() {
            return Err(DynamicsError::NotOneResonant {
                m: structure.m(),
                r: structure.r(),
                n: structure.n(),
            });
        }
        let check = is_normal_form(g, structure);
        if !check.is_normal_form {
            return Err(DynamicsError::NotNormalForm {
                offenders: check.offenders.len(),
            });
        }
        let table = resonant_coefficients(g, structure, default_table_bound(structure, g.order()))?;
        let WeightedOrder::Finite(k0) = table.k0() else {
            return Err(ShadowError::InfiniteWeightedOrder.into());
        };
        let shadow = build_shadow(&table, structure)?;
        let lambda = shadow.coefficient(0, &MultiIndex::new(vec![k0 + 1]));
        let inverse = g.invert(g.order())?;
        let roots = |target: Complex64| -> Vec<Complex64> {
            (0..k0)
                .map(|i| {
                    Complex64::from_polar(1.0, (target.arg() + 2.0 * PI * i as f64) / k0 as f64)
                })
                .collect()
        };
        let unit = lambda / lambda.norm();
        Ok(FlowerClassifier {
            k0,
            lambda,
            alpha: structure.generators()[0].clone(),
            trap,
            forward: CompiledGerm::new(g),
            backward: CompiledGerm::new(&inverse),
            attracting: roots(-1.0 / unit),
            repelling: roots(1.0 / unit),
        })
    }

    pub fn k0(&self) -> u32 {
        self.k0
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn attracting_directions(&self) -> &[Complex64] {
        &self.attracting
    }

    pub fn repelling_directions(&self) -> &[Complex64] {
        &self.repelling
    }

    /// `W = −1/(k0 Λ u^{k0})`, which moves by `+1` per forward step.
    fn w_of(&self, z: &[Complex64]) -> (Complex64, Complex64) {
        let u = monomial_value(z, &self.alpha);
        let w = -1.0 / (self.k0 as f64 * self.lambda * u.powu(self.k0));
        (u, w)
    }

    fn nearest(directions: &[Complex64], u: Complex64) -> usize {
        let unit = u / u.norm();
        let mut best = 0;
        for (i, d) in directions.iter().enumerate() {
            if (d - unit).norm() < (directions[best] - unit).norm() {
                best = i;
            }
        }
        best + 1
    }

    /// Labels `z` by the first trap its forward or backward orbit enters
    /// within `budget` steps each.
    pub fn classify(&self, z: &[Complex64], budget: usize) -> FlowerLabel {
        if self
            .alpha
            .entries()
            .iter()
            .zip(z)
            .any(|(&a, zj)| a > 0 && zj.norm() == 0.0)
        {
            return FlowerLabel::LinearizableLeaf;
        }
        let n = z.len();
        let mut fwd = z.to_vec();
        let mut bwd = z.to_vec();
        let mut scratch = vec![Complex64::default(); n];
        for step in 0..=budget {
            if step > 0 {
                self.forward.apply(&fwd, &mut scratch);
                std::mem::swap(&mut fwd, &mut scratch);
                self.backward.apply(&bwd, &mut scratch);
                std::mem::swap(&mut bwd, &mut scratch);
            }
            let (uf, wf) = self.w_of(&fwd);
            if wf.is_finite() && wf.re > self.trap {
                return FlowerLabel::Forward {
                    petal: Self::nearest(&self.attracting, uf),
                };
            }
            let (ub, wb) = self.w_of(&bwd);
            if wb.is_finite() && wb.re < -self.trap {
                return FlowerLabel::Backward {
                    petal: Self::nearest(&self.repelling, ub),
                };
            }
            if !(wf.is_finite() && wb.is_finite()) {
                break;
            }
        }
        FlowerLabel::Unresolved
    }

    /// Whether `Re W` keeps increasing for `steps` further steps under the
    /// map matching `label`.
    pub fn confirm(&self, z: &[Complex64], label: FlowerLabel, steps: usize) -> bool {
        let (map, sign) = match label {
            FlowerLabel::Forward { .. } => (&self.forward, 1.0),
            FlowerLabel::Backward { .. } => (&self.backward, -1.0),
            _ => return false,
        };
        let mut cur = z.to_vec();
        let mut next = vec![Complex64::default(); z.len()];
        // Move into the trap first.
        let mut entered = false;
        let mut prev = self.w_of(&cur).1.re * sign;
        for _ in 0..(steps * 20).max(1000) {
            if prev > self.trap {
                entered = true;
                break;
            }
            map.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            prev = self.w_of(&cur).1.re * sign;
        }
        if !entered {
            return false;
        }
        for _ in 0..steps {
            map.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            let w = self.w_of(&cur).1.re * sign;
            if !(w > prev) {
                return false;
            }
            prev = w;
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowerReport {
    pub k0: u32,
    pub lambda: Complex64,
    pub alpha: MultiIndex,
    pub radius: f64,
    pub samples: usize,
    pub forward: usize,
    pub backward: usize,
    pub unresolved: usize,
    /// `(forward + backward) / samples`.
    pub coverage: f64,
    pub unresolved_fraction: f64,
    pub attracting_directions: Vec<Complex64>,
    pub repelling_directions: Vec<Complex64>,
    /// Resolved counts per attracting petal.
    pub forward_petals: Vec<usize>,
    /// Resolved counts per repelling petal.
    pub backward_petals: Vec<usize>,
    pub attracting_petals_detected: usize,
    pub repelling_petals_detected: usize,
    /// Fraction of resolved points whose `Re W` keeps moving away after
    /// entering the trap.
    pub confirmed_fraction: f64,
    /// Agreement of labels with half the step budget (resolved points).
    pub stability_agreement: f64,
    /// Agreement of labels along fibers of `π` (resolved points checked).
    pub fiber_agreement: f64,
    pub hyperplane_points: usize,
    pub hyperplane_linearizable: usize,
}

/// Samples the punctured ball `|z| < radius` away from `{z_j = 0, α_j ≠ 0}`
/// (distance `> radius/20`) and labels every point.
pub fn flower_coverage(
    g: &GermJet,
    structure: &ResonanceStructure,
    options: &FlowerOptions,
) -> Result<FlowerReport, DynamicsError> {
    let classifier = FlowerClassifier::new(g, structure, options.trap)?;
    let n = structure.n();
    let alpha = classifier.alpha.clone();
    let points: Vec<Vec<Complex64>> = (0..options.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.rng_seed);
            rng.set_stream(i as u64);
            loop {
                let z = sample_ball(&mut rng, n, options.radius);
                let clear = alpha
                    .entries()
                    .iter()
                    .zip(&z)
                    .all(|(&a, zj)| a == 0 || zj.norm() > options.radius / 20.0);
                if clear {
                    return z;
                }
            }
        })
        .collect();
    let labels: Vec<FlowerLabel> = points
        .par_iter()
        .map(|z| classifier.classify(z, options.budget))
        .collect();
    let half: Vec<FlowerLabel> = points
        .par_iter()
        .zip(&labels)
        .map(|(z, l)| {
            if l.is_resolved() {
                classifier.classify(z, options.budget / 2)
            } else {
                *l
            }
        })
        .collect();
    let confirm_steps = (2.0 * options.trap).ceil() as usize;
    let confirmed: Vec<bool> = points
        .par_iter()
        .zip(&labels)
        .map(|(z, l)| l.is_resolved() && classifier.confirm(z, *l, confirm_steps))
        .collect();

    let k = classifier.k0 as usize;
    let mut forward_petals = vec![0; k];
    let mut backward_petals = vec![0; k];
    let (mut forward, mut backward, mut unresolved) = (0, 0, 0);
    for l in &labels {
        match l {
            FlowerLabel::Forward { petal } => {
                forward += 1;
                forward_petals[petal - 1] += 1;
            }
            FlowerLabel::Backward { petal } => {
                backward += 1;
                backward_petals[petal - 1] += 1;
            }
            _ => unresolved += 1,
        }
    }
    let resolved = forward + backward;
    let stable = labels
        .iter()
        .zip(&half)
        .filter(|(a, b)| a.is_resolved() && a == b)
        .count();
    let confirmed_count = confirmed.iter().filter(|&&c| c).count();

    let fiber_agreement = fiber_check(&classifier, &points, &labels, options);

    let mut hyper_points = 0;
    let mut hyper_linear = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(options.rng_seed ^ 0x6879_7065_72);
    for (j, &a) in alpha.entries().iter().enumerate() {
        if a == 0 {
            continue;
        }
        for _ in 0..options.hyperplane_samples {
            let mut z = sample_ball(&mut rng, n, options.radius);
            z[j] = Complex64::default();
            hyper_points += 1;
            if classifier.classify(&z, options.budget) == FlowerLabel::LinearizableLeaf {
                hyper_linear += 1;
            }
        }
    }

    let samples = options.samples.max(1) as f64;
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    Ok(FlowerReport {
        k0: classifier.k0,
        lambda: classifier.lambda,
        alpha,
        radius: options.radius,
        samples: options.samples,
        forward,
        backward,
        unresolved,
        coverage: resolved as f64 / samples,
        unresolved_fraction: unresolved as f64 / samples,
        attracting_directions: classifier.attracting.clone(),
        repelling_directions: classifier.repelling.clone(),
        attracting_petals_detected: forward_petals.iter().filter(|&&c| c > 0).count(),
        repelling_petals_detected: backward_petals.iter().filter(|&&c| c > 0).count(),
        forward_petals,
        backward_petals,
        confirmed_fraction: ratio(confirmed_count, resolved),
        stability_agreement: ratio(stable, resolved),
        fiber_agreement,
        hyperplane_points: hyper_points,
        hyperplane_linearizable: hyper_linear,
    })
}

/// Moves resolved points to `z·e^τ` with `α·τ = 0` (same `u`) and relabels.
fn fiber_check(
    classifier: &FlowerClassifier,
    points: &[Vec<Complex64>],
    labels: &[FlowerLabel],
    options: &FlowerOptions,
) -> f64 {
    let alpha: Vec<f64> = classifier
        .alpha
        .entries()
        .iter()
        .map(|&a| a as f64)
        .collect();
    let norm2: f64 = alpha.iter().map(|a| a * a).sum();
    let chosen: Vec<usize> = (0..points.len())
        .filter(|&i| labels[i].is_resolved())
        .take(options.fiber_checks)
        .collect();
    if chosen.is_empty() {
        return 1.0;
    }
    let agree = chosen
        .par_iter()
        .filter(|&&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.rng_seed ^ 0x6669_6265_72);
            rng.set_stream(i as u64);
            let mut tau: Vec<Complex64> = (0..alpha.len())
                .map(|_| Complex64::new(rng.random_range(-0.1..0.1), rng.random_range(-PI..PI)))
                .collect();
            let dot: Complex64 = tau.iter().zip(&alpha).map(|(t, a)| t * a).sum();
            for (t, a) in tau.iter_mut().zip(&alpha) {
                *t -= dot * *a / norm2;
            }
            let moved: Vec<Complex64> = points[i]
                .iter()
                .zip(&tau)
                .map(|(z, t)| z * t.exp())
                .collect();
            classifier.classify(&moved, options.budget) == labels[i]
        })
        .count();
    agree as f64 / chosen.len() as f64
}

/// Uniform point of the ball of `ℂⁿ` with the given radius.
fn sample_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<Complex64> {
    let g: Vec<f64> = (0..2 * n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rho = radius * rng.random_range(0.0f64..1.0).powf(1.0 / (2 * n) as f64);
    (0..n)
        .map(|j| Complex64::new(g[2 * j], g[2 * j + 1]) * (rho / norm))
        .collect()
}
