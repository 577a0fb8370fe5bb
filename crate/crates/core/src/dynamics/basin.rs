//! Sampling of the region `B̃` over a petal and statistics of the orbits
//! started there.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::orbit::walk;
use super::{max_norm, DynamicsError, GermMap, ParabolicFrame};
use crate::resonance::ResonanceStructure;
use crate::shadow::{certificate_margin, DirectionCertificate};

pub const DEFAULT_RADIUS: f64 = 50.0;
pub const DEFAULT_CONE: f64 = 0.5;
pub const DEFAULT_EPSILON: f64 = 0.2;
pub const DEFAULT_DELTA: f64 = 0.4;
/// `c′ = CERTIFICATE_SLACK · c`.
pub const CERTIFICATE_SLACK: f64 = 0.9;
pub const MAX_ESCALATIONS: u32 = 3;
/// Bound on `|U_{ℓ+1} − U_ℓ − 1|` checked along every orbit.
pub const PROGRESS_BOUND: f64 = 0.5;
const SAMPLER_ATTEMPTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinParams {
    /// `R`: the petal is `Re U > R`.
    pub radius: f64,
    /// `C`: `‖ŷ‖ < C`.
    pub cone: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub delta: f64,
    /// 1-based petal index in `1..=k0`.
    pub petal: usize,
    /// `c = ½ min_j(−Re s_j)` at the direction.
    pub c: f64,
    pub c_prime: f64,
    /// Order `l` of the non-normal remainder of the iterated germ, if any.
    pub remainder_order: Option<u32>,
}

impl BasinParams {
    /// Defaults for a certified direction.
    pub fn for_direction(
        cert: &DirectionCertificate,
        structure: &ResonanceStructure,
        k0: u32,
    ) -> Self {
        let c = 0.5 * certificate_margin(cert).max(0.0);
        let c_prime = CERTIFICATE_SLACK * c;
        let maxdeg = structure.max_generator_degree().max(1) as f64;
        let beta = (0.5 / maxdeg).min(c_prime * k0 as f64 / (1.0 + DEFAULT_DELTA)) / 2.0;
        BasinParams {
            radius: DEFAULT_RADIUS,
            cone: DEFAULT_CONE,
            epsilon: DEFAULT_EPSILON,
            beta,
            delta: DEFAULT_DELTA,
            petal: 1,
            c,
            c_prime,
            remainder_order: None,
        }
    }

    /// `β ∈ (0,1)`, `β(1+δ) < c′k0`, `βl > k0 + 1`, and a sector narrower
    /// than the petal spacing.
    pub fn check(&self, k0: u32) -> Result<(), DynamicsError> {
        let k = k0 as f64;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(DynamicsError::InfeasibleParams(format!(
                "β = {} outside (0, 1)",
                self.beta
            )));
        }
        if !(self.radius > 0.0
            && self.cone > 0.0
            && self.epsilon > 0.0
            && self.delta > 0.0
            && self.delta < 0.5)
        {
            return Err(DynamicsError::InfeasibleParams(
                "R, C, ε must be positive and δ in (0, ½)".to_string(),
            ));
        }
        if self.beta * (1.0 + self.delta) >= self.c_prime * k {
            return Err(DynamicsError::InfeasibleParams(format!(
                "β(1+δ) = {:.4} ≥ c′k0 = {:.4}",
                self.beta * (1.0 + self.delta),
                self.c_prime * k
            )));
        }
        if let Some(l) = self.remainder_order {
            if self.beta * l as f64 <= k + 1.0 {
                return Err(DynamicsError::InfeasibleParams(format!(
                    "βl = {:.4} ≤ k0 + 1 = {}",
                    self.beta * l as f64,
                    k0 + 1
                )));
            }
        }
        if k * self.epsilon >= PI / 2.0 {
            return Err(DynamicsError::InfeasibleParams(format!(
                "k0·ε = {:.4} must stay below π/2",
                k * self.epsilon
            )));
        }
        if self.petal == 0 || self.petal > k0 as usize {
            return Err(DynamicsError::PetalOutOfRange {
                petal: self.petal,
                k0,
            });
        }
        Ok(())
    }
}

/// Membership snapshot of a point against the basin predicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Membership {
    pub x: Complex64,
    pub big_u: Complex64,
    pub yhat_norm: f64,
    /// `U ∈ H_R(ε)` and `x` in the petal sector.
    pub in_petal: bool,
    /// `|z_j| < |x|^β` for every `j`.
    pub in_tube: bool,
}

impl Membership {
    pub fn in_region(&self, params: &BasinParams) -> bool {
        self.in_petal && self.in_tube && self.yhat_norm < params.cone
    }
}

pub(crate) fn membership(
    params: &BasinParams,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
    z: &[Complex64],
) -> Membership {
    let u = structure.project(z);
    let (x, yhat) = frame.coordinates(&u);
    let big_u = frame.big_u(x);
    let k = frame.k0() as f64;
    let in_petal = big_u.re > params.radius
        && big_u.arg().abs() < k * params.epsilon
        && frame.sector_offset(x, params.petal) < params.epsilon;
    let bound = x.norm().powf(params.beta);
    let in_tube = z.iter().all(|zj| zj.norm() < bound);
    Membership {
        x,
        big_u,
        yhat_norm: crate::numeric::norm(&yhat),
        in_petal,
        in_tube,
    }
}

/// Deterministic seeds `z` with `π(z)` over petal `params.petal`,
/// `‖ŷ‖ < C`, `U ∈ H_R(ε)` and `|z_j| < |x|^β`; every returned point passes
/// the predicates evaluated on `π(z)` itself.
pub fn basin_sampler(
    params: &BasinParams,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
    count: usize,
    rng_seed: u64,
) -> Result<Vec<Vec<Complex64>>, DynamicsError> {
    params.check(frame.k0())?;
    if frame.m() != structure.m() {
        return Err(DynamicsError::DimensionMismatch {
            expected: structure.m(),
            found: frame.m(),
        });
    }
    (0..count)
        .into_par_iter()
        .map(|index| sample_one(params, structure, frame, rng_seed, index))
        .collect()
}

fn sample_one(
    params: &BasinParams,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
    rng_seed: u64,
    index: usize,
) -> Result<Vec<Complex64>, DynamicsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(index as u64);
    let k = frame.k0() as f64;
    let n = structure.n();
    let m = structure.m();
    let involved: Vec<usize> = (0..n)
        .filter(|&j| structure.generators().iter().any(|g| g[j] > 0))
        .collect();
    let a = DMatrix::from_fn(m, involved.len(), |t, c| {
        structure.generators()[t][involved[c]] as f64
    });
    let gram_inv = (&a * a.transpose()).try_inverse().ok_or_else(|| {
        DynamicsError::InfeasibleParams("generator matrix is singular".to_string())
    })?;
    let project = |w: &DVector<f64>, b: &DVector<f64>| -> DVector<f64> {
        w - a.transpose() * (&gram_inv * (&a * w - b))
    };

    // ŷ is drawn from a ball that shrinks on retries, so cones wider than
    // the tube allows still yield points.
    let mut cone = 0.9 * params.cone;
    for _ in 0..SAMPLER_ATTEMPTS {
        let angle = rng.random_range(-0.9..0.9) * k * params.epsilon;
        let re = rng.random_range(1.05..2.0) * params.radius;
        let big_u = Complex64::new(re, re * angle.tan());
        let xi = (big_u.ln() * (-1.0 / k)).exp();
        let x = xi * Complex64::from_polar(1.0, frame.petal_angle(params.petal));
        let yhat = sample_ball(&mut rng, m.saturating_sub(1), cone);
        cone *= 0.995;
        let u = frame.point(x, &yhat);
        if u.iter().any(|ut| ut.norm() == 0.0) {
            continue;
        }

        let cap = params.beta * x.norm().ln() + 0.9f64.ln();
        let b = DVector::from_iterator(m, u.iter().map(|ut| ut.norm().ln()));
        let start = DVector::from_iterator(
            involved.len(),
            (0..involved.len()).map(|_| cap + rng.random_range(0.2f64..1.0).ln()),
        );
        let mut w = project(&start, &b);
        for _ in 0..2000 {
            if w.iter().all(|&wj| wj <= cap) {
                break;
            }
            let clamped = w.map(|wj| wj.min(cap));
            w = project(&clamped, &b);
        }
        if w.iter().any(|&wj| wj > cap - 0.9f64.ln() - 1e-9) {
            continue;
        }

        let phases_target = DVector::from_iterator(m, u.iter().map(|ut| ut.arg()));
        let phase_start = DVector::from_iterator(
            involved.len(),
            (0..involved.len()).map(|_| rng.random_range(-PI..PI)),
        );
        let phases = project(&phase_start, &phases_target);

        let mut z = vec![Complex64::default(); n];
        for (c, &j) in involved.iter().enumerate() {
            z[j] = Complex64::from_polar(w[c].exp(), phases[c]);
        }
        let inner_bound = x.norm().powf(params.beta);
        for (j, zj) in z.iter_mut().enumerate() {
            if !involved.contains(&j) {
                *zj = Complex64::from_polar(
                    inner_bound * rng.random_range(0.1..0.9),
                    rng.random_range(-PI..PI),
                );
            }
        }
        if membership(params, structure, frame, &z).in_region(params) {
            return Ok(z);
        }
    }
    Err(DynamicsError::InfeasibleParams(format!(
        "sampler found no point of the region for seed {index}"
    )))
}

fn sample_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<Complex64> {
    if dim == 0 {
        return Vec::new();
    }
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = crate::numeric::norm(&v);
        if norm < 1.0 {
            return v.into_iter().map(|c| c * radius).collect();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub count: usize,
    pub max_iter: usize,
    /// Progress and sector checks start at this step.
    pub burn_in: usize,
    pub rng_seed: u64,
    pub escape_radius: f64,
    /// How many times `R` may be doubled when the checks fail.
    pub max_escalations: u32,
    /// Orbits whose direction residual is still above this after
    /// `max_iter` steps are continued, up to `extension · max_iter` steps.
    pub residual_target: f64,
    pub extension: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            count: 200,
            max_iter: 100_000,
            burn_in: 1_000,
            rng_seed: 0,
            escape_radius: 10.0,
            max_escalations: MAX_ESCALATIONS,
            residual_target: 1e-3,
            extension: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub index: usize,
    pub z0: Vec<Complex64>,
    pub steps: usize,
    pub escaped: bool,
    /// Every iterate stayed in `H_R(ε)` with `|z_j| < |x|^β`.
    pub stayed_in_region: bool,
    pub converged: bool,
    /// `|U_{ℓ+1} − U_ℓ − 1| < ½` for every step after burn-in.
    pub u_progress: bool,
    /// `Re U_{ℓ+1} > Re U_ℓ + 1 − δ` for every step after burn-in.
    pub monotone_progress: bool,
    pub max_progress_deviation: f64,
    pub sector_swap: bool,
    pub initial_residual: f64,
    pub terminal_residual: f64,
    pub final_u: Complex64,
    pub final_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinStatistics {
    pub petal: usize,
    pub params: BasinParams,
    pub escalations: u32,
    pub count: usize,
    pub converged_fraction: f64,
    /// Fraction whose iterates all stayed in `H_R(ε)` with `|z_j| < |x|^β`.
    pub stayed_in_region_fraction: f64,
    pub u_progress_fraction: f64,
    pub monotone_progress_fraction: f64,
    pub mean_terminal_residual: f64,
    pub max_terminal_residual: f64,
    /// Fraction with terminal residual below a tenth of the initial one.
    pub residual_decay_fraction: f64,
    pub sector_swaps: usize,
    pub seeds: Vec<SeedOutcome>,
}

impl BasinStatistics {
    fn passes(&self) -> bool {
        self.converged_fraction == 1.0 && self.u_progress_fraction >= 0.99
    }
}

/// Runs `count` sampled orbits in one petal, doubling `R` (up to
/// `max_escalations` times) while convergence or U-progress fail.
pub fn verify_basin(
    germ: &dyn GermMap,
    params: &BasinParams,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
    options: &VerifyOptions,
) -> Result<BasinStatistics, DynamicsError> {
    let mut current = params.clone();
    let mut escalations = 0;
    loop {
        let stats = run_petal(germ, &current, structure, frame, options, escalations)?;
        if stats.passes() || escalations >= options.max_escalations {
            return Ok(stats);
        }
        escalations += 1;
        current.radius *= 2.0;
    }
}

fn run_petal(
    germ: &dyn GermMap,
    params: &BasinParams,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
    options: &VerifyOptions,
    escalations: u32,
) -> Result<BasinStatistics, DynamicsError> {
    let seeds = basin_sampler(params, structure, frame, options.count, options.rng_seed)?;
    let outcomes: Vec<SeedOutcome> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(index, z0)| follow_seed(germ, params, structure, frame, options, index, z0))
        .collect();
    let count = outcomes.len();
    let frac = |f: &dyn Fn(&SeedOutcome) -> bool| {
        if count == 0 {
            0.0
        } else {
            outcomes.iter().filter(|o| f(o)).count() as f64 / count as f64
        }
    };
    let residuals: Vec<f64> = outcomes.iter().map(|o| o.terminal_residual).collect();
    Ok(BasinStatistics {
        petal: params.petal,
        params: params.clone(),
        escalations,
        count,
        converged_fraction: frac(&|o| o.converged),
        stayed_in_region_fraction: frac(&|o| o.stayed_in_region),
        u_progress_fraction: frac(&|o| o.u_progress),
        monotone_progress_fraction: frac(&|o| o.monotone_progress),
        mean_terminal_residual: if count == 0 {
            0.0
        } else {
            residuals.iter().sum::<f64>() / count as f64
        },
        max_terminal_residual: residuals.iter().copied().fold(0.0, f64::max),
        residual_decay_fraction: frac(&|o| o.terminal_residual < o.initial_residual / 10.0),
        sector_swaps: outcomes.iter().filter(|o| o.sector_swap).count(),
        seeds: outcomes,
    })
}

fn follow_seed(
    germ: &dyn GermMap,
    params: &BasinParams,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
    options: &VerifyOptions,
    index: usize,
    z0: Vec<Complex64>,
) -> SeedOutcome {
    let mut stayed = true;
    let mut progress = true;
    let mut monotone = true;
    let mut max_dev: f64 = 0.0;
    let mut swap = false;
    let mut prev_u: Option<Complex64> = None;
    let mut initial_residual = 0.0;
    let mut last_z = z0.clone();
    let mut final_u = Complex64::default();
    let mut final_size = max_norm(&z0);
    let cap = options.max_iter.saturating_mul(options.extension.max(1));
    let (steps, escaped, hit_zero) = walk(germ, &z0, cap, options.escape_radius, |step, z| {
        let snap = membership(params, structure, frame, z);
        if !(snap.in_petal && snap.in_tube) {
            stayed = false;
        }
        if let Some(prev) = prev_u {
            if step > options.burn_in {
                let dev = (snap.big_u - prev - 1.0).norm();
                max_dev = max_dev.max(dev);
                if dev >= PROGRESS_BOUND {
                    progress = false;
                }
                if snap.big_u.re <= prev.re + 1.0 - params.delta {
                    monotone = false;
                }
            }
        }
        if step >= options.burn_in && frame.petal_of(snap.x) != params.petal {
            swap = true;
        }
        if step == 0 {
            initial_residual = frame.direction_residual(&structure.project(z));
        }
        last_z.copy_from_slice(z);
        prev_u = Some(snap.big_u);
        final_u = snap.big_u;
        final_size = max_norm(z);
        step < options.max_iter
            || (step % 100 == 0
                && frame.direction_residual(&structure.project(z)) >= options.residual_target)
            || (step % 100 != 0 && step < cap)
    });
    let terminal_residual = frame.direction_residual(&structure.project(&last_z));
    let n_steps = steps as f64;
    let converged = !escaped
        && (hit_zero || (final_u.re > params.radius + n_steps / 2.0 && final_size < max_norm(&z0)));
    SeedOutcome {
        index,
        z0,
        steps,
        escaped,
        stayed_in_region: stayed,
        converged,
        u_progress: progress,
        monotone_progress: monotone,
        max_progress_deviation: max_dev,
        sector_swap: swap,
        initial_residual,
        terminal_residual,
        final_u,
        final_size,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PetalSurvey {
    pub k0: u32,
    pub petals: Vec<BasinStatistics>,
    /// No seed lies in two petal sectors.
    pub disjoint: bool,
    pub sector_swaps: usize,
}

/// [`verify_basin`] for every petal `1..=k0`.
pub fn verify_petals(
    germ: &dyn GermMap,
    params: &BasinParams,
    structure: &ResonanceStructure,
    frame: &ParabolicFrame,
    options: &VerifyOptions,
) -> Result<PetalSurvey, DynamicsError> {
    let k0 = frame.k0();
    let mut petals = Vec::new();
    for petal in 1..=k0 as usize {
        let p = BasinParams {
            petal,
            ..params.clone()
        };
        petals.push(verify_basin(germ, &p, structure, frame, options)?);
    }
    let mut disjoint = true;
    for stats in &petals {
        for seed in &stats.seeds {
            let u = structure.project(&seed.z0);
            let (x, _) = frame.coordinates(&u);
            let hits = (1..=k0 as usize)
                .filter(|&p| frame.sector_offset(x, p) < stats.params.epsilon)
                .count();
            if hits != 1 || frame.petal_of(x) != stats.petal {
                disjoint = false;
            }
        }
    }
    let sector_swaps = petals.iter().map(|p| p.sector_swaps).sum();
    Ok(PetalSurvey {
        k0,
        petals,
        disjoint,
        sector_swaps,
    })
}
