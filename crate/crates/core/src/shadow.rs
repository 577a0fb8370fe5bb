//! Parabolic shadow `f(u) = u + H_{k0+1}(u)` on the leaf space of
//! `π(z) = (z^{P^1}, …, z^{P^m})`, its characteristic directions, directors
//! and the attraction certificates built on them.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::jets::GermJet;
use crate::multi_index::{monomials_of_degree, MultiIndex};
use crate::normalform::{ResonantCoefficientTable, WeightedOrder};
use crate::numeric::{self, projective_distance};
use crate::resonance::ResonanceStructure;

/// Roots closer than this (projectively) are one direction.
pub const CLUSTER_RADIUS: f64 = 1e-7;
/// `|H(v)| / max|coefficient|` below this marks `|v| = 1` as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-9;
/// Coefficients of `v₂H₁ − v₁H₂` below this (relative) count as zero.
const DICRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShadowError {
    #[error("weighted order is infinite; there is no parabolic shadow")]
    InfiniteWeightedOrder,
    #[error("characteristic directions have total multiplicity {found}, expected {expected}")]
    BezoutMismatch { found: usize, expected: usize },
    #[error("found {found} of {expected} characteristic directions")]
    Incomplete { found: usize, expected: usize },
    #[error("direction is degenerate: H(v) = 0")]
    DegenerateDirection,
    #[error("rescaling entry μ_{} is zero", .index + 1)]
    ZeroRescaling { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

impl ShadowError {
    pub fn code(&self) -> &'static str {
        match self {
            ShadowError::InfiniteWeightedOrder => "infinite-weighted-order",
            ShadowError::BezoutMismatch { .. } => "bezout-mismatch",
            ShadowError::Incomplete { .. } => "incomplete",
            ShadowError::DegenerateDirection => "degenerate-direction",
            ShadowError::ZeroRescaling { .. } => "zero-rescaling",
            ShadowError::DimensionMismatch { .. } => "dimension-mismatch",
        }
    }
}

/// `H_{k0+1}` stored per component as `exponent ↦ coefficient` over `ℂ^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicShadow {
    m: usize,
    k0: u32,
    h: Vec<BTreeMap<MultiIndex, Complex64>>,
    table: Option<ResonantCoefficientTable>,
    generators: Vec<MultiIndex>,
}

/// `H_t(u) = u_t Σ_{|K|=k0} (Σ_s p^t_s a_{K,s}/λ_s) u^K`.
pub fn build_shadow(
    table: &ResonantCoefficientTable,
    structure: &ResonanceStructure,
) -> Result<ParabolicShadow, ShadowError> {
    let k0 = match table.k0() {
        WeightedOrder::Finite(k) => k,
        WeightedOrder::Infinite => return Err(ShadowError::InfiniteWeightedOrder),
    };
    let m = structure.m();
    if table.m() != m {
        return Err(ShadowError::DimensionMismatch {
            expected: m,
            found: table.m(),
        });
    }
    let lambdas = table.lambdas();
    let mut h = vec![BTreeMap::new(); m];
    for (t, gen) in structure.generators().iter().enumerate() {
        for k in monomials_of_degree(m, k0) {
            let mut coeff = Complex64::new(0.0, 0.0);
            for (s, lambda) in lambdas.iter().enumerate() {
                let p = gen[s];
                if p > 0 {
                    coeff += p as f64 * table.get(&k, s) / lambda;
                }
            }
            if coeff.norm() > 0.0 {
                h[t].insert(k.add(&MultiIndex::unit(m, t)), coeff);
            }
        }
    }
    Ok(ParabolicShadow {
        m,
        k0,
        h,
        table: Some(table.clone()),
        generators: structure.generators().to_vec(),
    })
}

impl ParabolicShadow {
    /// A shadow from its coefficients `c_{K,t}` (with `H_t = u_t Σ c_{K,t} u^K`),
    /// without an underlying germ.
    pub fn from_coefficients(
        m: usize,
        k0: u32,
        coefficients: impl IntoIterator<Item = ((MultiIndex, usize), Complex64)>,
    ) -> Self {
        let mut h = vec![BTreeMap::new(); m];
        for ((k, t), c) in coefficients {
            if k.len() == m && k.degree() == k0 && t < m && c.norm() > 0.0 {
                *h[t]
                    .entry(k.add(&MultiIndex::unit(m, t)))
                    .or_insert_with(Complex64::default) += c;
            }
        }
        ParabolicShadow {
            m,
            k0,
            h,
            table: None,
            generators: Vec::new(),
        }
    }

    /// A shadow given directly as homogeneous components of degree `k0 + 1`.
    pub fn from_homogeneous(m: usize, k0: u32, h: Vec<BTreeMap<MultiIndex, Complex64>>) -> Self {
        let h = h
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .filter(|(q, v)| q.len() == m && q.degree() == k0 + 1 && v.norm() > 0.0)
                    .collect()
            })
            .collect();
        ParabolicShadow {
            m,
            k0,
            h,
            table: None,
            generators: Vec::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k0(&self) -> u32 {
        self.k0
    }

    pub fn components(&self) -> &[BTreeMap<MultiIndex, Complex64>] {
        &self.h
    }

    pub fn table(&self) -> Option<&ResonantCoefficientTable> {
        self.table.as_ref()
    }

    pub fn generators(&self) -> &[MultiIndex] {
        &self.generators
    }

    /// Coefficient of `u^Q` in `H_t`.
    pub fn coefficient(&self, t: usize, q: &MultiIndex) -> Complex64 {
        self.h[t].get(q).copied().unwrap_or_default()
    }

    /// Largest coefficient modulus (scale for relative tolerances).
    pub fn scale(&self) -> f64 {
        self.h
            .iter()
            .flat_map(|c| c.values())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|c| c.is_empty())
    }

    pub fn eval(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.h
            .iter()
            .map(|comp| comp.iter().map(|(q, c)| c * monomial(u, q)).sum())
            .collect()
    }

    /// `∂H_s/∂u_t` at `u`, row `s`, column `t`.
    pub fn jacobian(&self, u: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut jac = vec![vec![Complex64::default(); self.m]; self.m];
        for (s, comp) in self.h.iter().enumerate() {
            for (q, c) in comp {
                for t in 0..self.m {
                    if q[t] > 0 {
                        let lower = q
                            .checked_sub(&MultiIndex::unit(self.m, t))
                            .expect("positive entry");
                        jac[s][t] += c * q[t] as f64 * monomial(u, &lower);
                    }
                }
            }
        }
        jac
    }

    /// The map induced on the affine chart `{u_i = 1}` of `ℂℙ^{m−1}`:
    /// `w ↦ (H_s/H_i)_{s≠i}` evaluated at `w̃` with `w̃_i = 1`.
    pub fn chart_map(&self, i: usize, w: &[Complex64]) -> Vec<Complex64> {
        let full = insert_one(i, w);
        let hv = self.eval(&full);
        (0..self.m)
            .filter(|&s| s != i)
            .map(|s| hv[s] / hv[i])
            .collect()
    }
}

fn monomial(u: &[Complex64], q: &MultiIndex) -> Complex64 {
    crate::resonance::monomial_value(u, q)
}

fn insert_one(i: usize, w: &[Complex64]) -> Vec<Complex64> {
    let mut full = Vec::with_capacity(w.len() + 1);
    full.extend_from_slice(&w[..i]);
    full.push(Complex64::new(1.0, 0.0));
    full.extend_from_slice(&w[i..]);
    full
}

fn argmax_abs(v: &[Complex64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.norm() > v[best].norm() {
            best = i;
        }
    }
    best
}

/// `((k0+1)^m − 1)/k0`.
pub fn bezout_count(m: usize, k0: u32) -> usize {
    let k = k0 as usize;
    ((k + 1).pow(m as u32) - 1) / k
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicDirection {
    /// Normalized representative (`H(v) = −v/k0`); unit vector when degenerate.
    pub v: Vec<Complex64>,
    /// Representative with largest coordinate equal to 1.
    pub projective: Vec<Complex64>,
    /// `c` with `H(projective) = c · projective`.
    pub eigenfactor: Complex64,
    pub directors: Vec<Complex64>,
    pub fully_attractive: bool,
    pub degenerate: bool,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionSet {
    pub directions: Vec<CharacteristicDirection>,
    /// `v₂H₁ − v₁H₂ ≡ 0`: every line is characteristic.
    pub dicritical: bool,
    pub complete: bool,
    pub total_multiplicity: usize,
    pub expected_multiplicity: usize,
}

/// All characteristic directions; `m ≥ 3` fails with `Incomplete` when
/// Newton does not find the full count.
pub fn characteristic_directions(shadow: &ParabolicShadow) -> Result<DirectionSet, ShadowError> {
    let set = characteristic_directions_best_effort(shadow);
    if shadow.m >= 3 && !set.complete {
        return Err(ShadowError::Incomplete {
            found: set.total_multiplicity,
            expected: set.expected_multiplicity,
        });
    }
    if !set.dicritical && set.total_multiplicity != set.expected_multiplicity {
        return Err(ShadowError::BezoutMismatch {
            found: set.total_multiplicity,
            expected: set.expected_multiplicity,
        });
    }
    Ok(set)
}

/// Like [`characteristic_directions`] but returns whatever was found.
pub fn characteristic_directions_best_effort(shadow: &ParabolicShadow) -> DirectionSet {
    let expected = bezout_count(shadow.m, shadow.k0);
    let (raw, dicritical) = match shadow.m {
        0 => (Vec::new(), false),
        1 => (vec![(vec![Complex64::new(1.0, 0.0)], 1)], false),
        2 => projective_roots_m2(shadow),
        _ => (newton_directions(shadow), false),
    };
    let directions: Vec<CharacteristicDirection> = raw
        .into_iter()
        .map(|(p, mult)| describe_direction(shadow, p, mult))
        .collect();
    let total: usize = directions.iter().map(|d| d.multiplicity).sum();
    let complete = dicritical || total == expected;
    DirectionSet {
        directions,
        dicritical,
        complete,
        total_multiplicity: total,
        expected_multiplicity: expected,
    }
}

fn describe_direction(
    shadow: &ParabolicShadow,
    projective: Vec<Complex64>,
    multiplicity: usize,
) -> CharacteristicDirection {
    let i = argmax_abs(&projective);
    let projective: Vec<Complex64> = projective.iter().map(|x| x / projective[i]).collect();
    let hv = shadow.eval(&projective);
    let unit_norm = numeric::norm(&projective);
    let scale = shadow.scale().max(f64::MIN_POSITIVE);
    let degenerate =
        numeric::norm(&hv) / unit_norm.powi(shadow.k0 as i32 + 1) <= DEGENERATE_TOL * scale;
    if degenerate {
        return CharacteristicDirection {
            v: projective.iter().map(|x| x / unit_norm).collect(),
            projective,
            eigenfactor: Complex64::default(),
            directors: Vec::new(),
            fully_attractive: false,
            degenerate: true,
            multiplicity,
        };
    }
    let eigenfactor = hv[i];
    let v = refine_normalized(
        shadow,
        normalize_with_factor(&projective, eigenfactor, shadow.k0),
    );
    let projective: Vec<Complex64> = v.iter().map(|x| x / v[i]).collect();
    let directors = directors_unchecked(shadow, &v);
    let fully_attractive = directors.iter().all(|d| d.re > 0.0);
    CharacteristicDirection {
        eigenfactor: shadow.eval(&projective)[i],
        v,
        projective,
        directors,
        fully_attractive,
        degenerate: false,
        multiplicity,
    }
}

fn normalize_with_factor(v_raw: &[Complex64], tau: Complex64, k0: u32) -> Vec<Complex64> {
    let c = (-(k0 as f64) * tau).ln() * (-1.0 / k0 as f64);
    let c = c.exp();
    v_raw.iter().map(|x| x * c).collect()
}

/// Newton on `H(v) + v/k0 = 0` from an approximate normalized vector.
fn refine_normalized(shadow: &ParabolicShadow, v0: Vec<Complex64>) -> Vec<Complex64> {
    let k0 = shadow.k0 as f64;
    let residual = |v: &[Complex64]| -> Vec<Complex64> {
        shadow
            .eval(v)
            .iter()
            .zip(v)
            .map(|(h, x)| h + x / k0)
            .collect()
    };
    let mut v = v0;
    let mut res = numeric::norm(&residual(&v));
    for _ in 0..8 {
        if res < 1e-15 * numeric::norm(&v) {
            break;
        }
        let jac = shadow.jacobian(&v);
        let m = shadow.m;
        let a = DMatrix::from_fn(m, m, |s, t| {
            jac[s][t]
                + if s == t {
                    Complex64::new(1.0 / k0, 0.0)
                } else {
                    Complex64::default()
                }
        });
        let g = residual(&v);
        let Some(step) = numeric::solve(&a, &g) else {
            break;
        };
        let candidate: Vec<Complex64> = v.iter().zip(&step).map(|(x, d)| x - d).collect();
        let cres = numeric::norm(&residual(&candidate));
        if !(cres < res) {
            break;
        }
        v = candidate;
        res = cres;
    }
    v
}

/// Roots of `v₂H₁ − v₁H₂` on `ℂℙ¹` with multiplicities, in chart order.
fn projective_roots_m2(shadow: &ParabolicShadow) -> (Vec<(Vec<Complex64>, usize)>, bool) {
    let d = shadow.k0 as usize + 2;
    // q[i] is the coefficient of v1^{d−i} v2^i.
    let mut q = vec![Complex64::default(); d + 1];
    for (e, c) in &shadow.h[0] {
        q[e[1] as usize + 1] += c;
    }
    for (e, c) in &shadow.h[1] {
        q[e[1] as usize] -= c;
    }
    let qmax = q.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let scale = shadow.scale();
    if qmax <= DICRITICAL_TOL * scale || scale == 0.0 {
        // H = g·v: the degenerate lines are the zeros of g = H₁/v₁.
        let mut g = vec![Complex64::default(); d - 1];
        for (e, c) in &shadow.h[0] {
            if e[0] >= 1 {
                g[e[1] as usize] += c;
            }
        }
        if g.iter().all(|c| c.norm() == 0.0) {
            for (e, c) in &shadow.h[1] {
                if e[1] >= 1 {
                    g[e[1] as usize - 1] += c;
                }
            }
        }
        return (binary_form_roots(&g), true);
    }
    (binary_form_roots(&q), false)
}

/// Zeros on `ℂℙ¹` of the binary form `Σ q_i v1^{d−i} v2^i`, clustered,
/// ordered chart `{v1 = 1}` first by `(|w|, arg w)`, then chart `{v2 = 1}`.
fn binary_form_roots(q: &[Complex64]) -> Vec<(Vec<Complex64>, usize)> {
    let d = q.len() - 1;
    let qmax = q.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if qmax == 0.0 {
        return Vec::new();
    }
    let cleaned: Vec<Complex64> = q
        .iter()
        .map(|c| {
            if c.norm() <= 1e-14 * qmax {
                Complex64::default()
            } else {
                *c
            }
        })
        .collect();
    let deg1 = cleaned.iter().rposition(|c| c.norm() > 0.0).unwrap_or(0);
    let reversed: Vec<Complex64> = cleaned.iter().rev().copied().collect();
    let chart1 = numeric::polynomial_roots(&cleaned[..=deg1]);
    let mut points: Vec<(u8, Complex64)> = Vec::new();
    for w in chart1 {
        if w.norm() <= 1.0 {
            points.push((1, w));
        } else {
            points.push((2, polish(&reversed, 1.0 / w)));
        }
    }
    for _ in deg1..d {
        points.push((2, Complex64::default()));
    }
    let vectors: Vec<Vec<Complex64>> = points
        .iter()
        .map(|(chart, x)| {
            if *chart == 1 {
                vec![Complex64::new(1.0, 0.0), *x]
            } else {
                vec![*x, Complex64::new(1.0, 0.0)]
            }
        })
        .collect();
    let mut clusters: Vec<(Vec<Complex64>, Vec<usize>)> = Vec::new();
    for (idx, v) in vectors.iter().enumerate() {
        match clusters
            .iter_mut()
            .find(|(rep, _)| projective_distance(rep, v) < CLUSTER_RADIUS)
        {
            Some((_, members)) => members.push(idx),
            None => clusters.push((v.clone(), vec![idx])),
        }
    }
    let mut out: Vec<(Vec<Complex64>, usize)> = clusters
        .into_iter()
        .map(|(rep, members)| {
            let i = argmax_abs(&rep);
            let mut acc = vec![Complex64::default(); 2];
            for &k in &members {
                let v = &vectors[k];
                let scaled: Vec<Complex64> = v.iter().map(|x| x / v[i]).collect();
                acc[0] += scaled[0];
                acc[1] += scaled[1];
            }
            let count = members.len() as f64;
            (acc.iter().map(|x| x / count).collect(), members.len())
        })
        .collect();
    out.sort_by(|a, b| {
        chart_key(&a.0)
            .partial_cmp(&chart_key(&b.0))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

fn chart_key(v: &[Complex64]) -> (u8, f64, f64) {
    if v[0].norm() >= v[1].norm() || (v[1] / v[0]).norm() <= 1.0 {
        let w = v[1] / v[0];
        (1, round_key(w.norm()), round_key(w.arg()))
    } else {
        let t = v[0] / v[1];
        (2, round_key(t.norm()), round_key(t.arg()))
    }
}

fn round_key(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn polish(coeffs: &[Complex64], x0: Complex64) -> Complex64 {
    let mut x = x0;
    for _ in 0..4 {
        let (p, dp) = numeric::horner(coeffs, x);
        if dp.norm() == 0.0 {
            break;
        }
        let next = x - p / dp;
        if !next.is_finite() || numeric::horner(coeffs, next).0.norm() >= p.norm() {
            break;
        }
        x = next;
    }
    x
}

/// Multi-start Newton for `m ≥ 3`, deduplicated projectively.
fn newton_directions(shadow: &ParabolicShadow) -> Vec<(Vec<Complex64>, usize)> {
    let m = shadow.m;
    let k0 = shadow.k0 as f64;
    let scale = shadow.scale();
    if scale == 0.0 {
        return Vec::new();
    }
    let radius = (1.0 / (k0 * scale)).powf(1.0 / k0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1e5);
    let mut found: Vec<Vec<Complex64>> = Vec::new();
    let expected = bezout_count(m, shadow.k0);
    for _ in 0..(200 * expected).max(400) {
        let mut v: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let nv = numeric::norm(&v);
        for x in v.iter_mut() {
            *x *= radius / nv;
        }
        if let Some(sol) = damped_newton(shadow, v) {
            if !found
                .iter()
                .any(|f| projective_distance(f, &sol) < CLUSTER_RADIUS)
            {
                found.push(sol);
            }
        }
        if found.len() >= expected {
            break;
        }
    }
    let mut out: Vec<(Vec<Complex64>, usize)> = found.into_iter().map(|v| (v, 1)).collect();
    out.sort_by(|a, b| {
        let ka: Vec<f64> = a.0.iter().flat_map(|x| [x.re, x.im]).collect();
        let kb: Vec<f64> = b.0.iter().flat_map(|x| [x.re, x.im]).collect();
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

fn damped_newton(shadow: &ParabolicShadow, mut v: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let m = shadow.m;
    let k0 = shadow.k0 as f64;
    let residual = |v: &[Complex64]| -> Vec<Complex64> {
        shadow
            .eval(v)
            .iter()
            .zip(v)
            .map(|(h, x)| h + x / k0)
            .collect()
    };
    let mut res = numeric::norm(&residual(&v));
    for _ in 0..80 {
        let nv = numeric::norm(&v);
        if nv < 1e-8 {
            return None;
        }
        if res < 1e-13 * nv {
            return Some(v);
        }
        let jac = shadow.jacobian(&v);
        let a = DMatrix::from_fn(m, m, |s, t| {
            jac[s][t]
                + if s == t {
                    Complex64::new(1.0 / k0, 0.0)
                } else {
                    Complex64::default()
                }
        });
        let step = numeric::solve(&a, &residual(&v))?;
        let mut damping = 1.0;
        loop {
            let candidate: Vec<Complex64> =
                v.iter().zip(&step).map(|(x, d)| x - d * damping).collect();
            let cres = numeric::norm(&residual(&candidate));
            if cres < res || damping < 1e-4 {
                v = candidate;
                res = cres;
                break;
            }
            damping *= 0.5;
        }
    }
    None
}

/// `v_raw · (−k0 τ)^{−1/k0}` (principal branch) where `H(v_raw) = τ v_raw`.
pub fn normalize_direction(
    v_raw: &[Complex64],
    shadow: &ParabolicShadow,
) -> Result<Vec<Complex64>, ShadowError> {
    if v_raw.len() != shadow.m {
        return Err(ShadowError::DimensionMismatch {
            expected: shadow.m,
            found: v_raw.len(),
        });
    }
    let nv = numeric::norm(v_raw);
    if nv == 0.0 {
        return Err(ShadowError::DegenerateDirection);
    }
    let hv = shadow.eval(v_raw);
    let scale = shadow.scale().max(f64::MIN_POSITIVE);
    if numeric::norm(&hv) / nv.powi(shadow.k0 as i32 + 1) <= DEGENERATE_TOL * scale {
        return Err(ShadowError::DegenerateDirection);
    }
    let i = argmax_abs(v_raw);
    let tau = hv[i] / v_raw[i];
    Ok(normalize_with_factor(v_raw, tau, shadow.k0))
}

/// Eigenvalues of `A(v) = (1/k0)(dH̃_{[v]} − id)` in the chart of the
/// largest coordinate of `v`, with the chart derivative taken analytically.
pub fn directors(shadow: &ParabolicShadow, v: &[Complex64]) -> Result<Vec<Complex64>, ShadowError> {
    if v.len() != shadow.m {
        return Err(ShadowError::DimensionMismatch {
            expected: shadow.m,
            found: v.len(),
        });
    }
    normalize_direction(v, shadow)?;
    Ok(directors_unchecked(shadow, v))
}

/// The matrix `A(v)` (size `m − 1`).
pub fn director_matrix(shadow: &ParabolicShadow, v: &[Complex64]) -> DMatrix<Complex64> {
    let m = shadow.m;
    if m <= 1 {
        return DMatrix::zeros(0, 0);
    }
    let i = argmax_abs(v);
    let w: Vec<Complex64> = v.iter().map(|x| x / v[i]).collect();
    let hv = shadow.eval(&w);
    let jac = shadow.jacobian(&w);
    let others: Vec<usize> = (0..m).filter(|&s| s != i).collect();
    let hi = hv[i];
    let k0 = shadow.k0 as f64;
    DMatrix::from_fn(m - 1, m - 1, |a, b| {
        let s = others[a];
        let t = others[b];
        let d = (jac[s][t] * hi - hv[s] * jac[i][t]) / (hi * hi);
        (d - if a == b {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }) / k0
    })
}

fn directors_unchecked(shadow: &ParabolicShadow, v: &[Complex64]) -> Vec<Complex64> {
    numeric::eigenvalues(&director_matrix(shadow, v))
}

/// The shadow of `L⁻¹ ∘ F ∘ L` for `L = diag(μ_1, …, μ_r, 1, …)`:
/// `c_{K,t} ↦ c_{K,t} μ^{K·P}`.
pub fn shadow_rescale(
    shadow: &ParabolicShadow,
    structure: &ResonanceStructure,
    mu: &[Complex64],
) -> Result<ParabolicShadow, ShadowError> {
    if mu.len() != structure.r() {
        return Err(ShadowError::DimensionMismatch {
            expected: structure.r(),
            found: mu.len(),
        });
    }
    if let Some(index) = mu.iter().position(|x| x.norm() == 0.0) {
        return Err(ShadowError::ZeroRescaling { index });
    }
    let weights = generator_weights(structure.generators(), mu);
    let m = shadow.m;
    if weights.len() != m {
        return Err(ShadowError::DimensionMismatch {
            expected: m,
            found: weights.len(),
        });
    }
    let h = shadow
        .h
        .iter()
        .enumerate()
        .map(|(t, comp)| {
            comp.iter()
                .map(|(e, c)| {
                    let k = e
                        .checked_sub(&MultiIndex::unit(m, t))
                        .expect("component divisible by u_t");
                    (e.clone(), c * monomial(&weights, &k))
                })
                .collect()
        })
        .collect();
    Ok(ParabolicShadow {
        m,
        k0: shadow.k0,
        h,
        table: shadow.table.as_ref().map(|t| t.rescaled(structure, mu)),
        generators: structure.generators().to_vec(),
    })
}

/// `(μ^{P^1}, …, μ^{P^m})`.
fn generator_weights(generators: &[MultiIndex], mu: &[Complex64]) -> Vec<Complex64> {
    generators
        .iter()
        .map(|g| {
            let mut acc = Complex64::new(1.0, 0.0);
            for (j, &p) in g.entries().iter().enumerate() {
                if p > 0 {
                    acc *= mu
                        .get(j)
                        .copied()
                        .unwrap_or(Complex64::new(1.0, 0.0))
                        .powu(p);
                }
            }
            acc
        })
        .collect()
}

/// `ṽ_t = μ^{−P^t} v_t`.
pub fn transport_direction(
    structure: &ResonanceStructure,
    mu: &[Complex64],
    v: &[Complex64],
) -> Vec<Complex64> {
    let weights = generator_weights(structure.generators(), mu);
    v.iter().zip(&weights).map(|(x, w)| x / w).collect()
}

/// `s_j = Σ_{|K|=k0} (a_{K,j}/λ_j) v^K` for `j ≤ r`.
pub fn s_values(table: &ResonantCoefficientTable, k0: u32, v: &[Complex64]) -> Vec<Complex64> {
    let mut s = vec![Complex64::default(); table.r()];
    for (k, j, a) in table.at_degree(k0) {
        s[j] += a / table.lambdas()[j] * monomial(v, k);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionCertificate {
    pub index: usize,
    pub projective: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub degenerate: bool,
    pub multiplicity: usize,
    pub directors: Vec<Complex64>,
    pub director_real_parts: Vec<f64>,
    pub fully_attractive: bool,
    pub s_values: Vec<Complex64>,
    pub s_real_parts: Vec<f64>,
    pub parabolically_attracting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub m: usize,
    pub k0: u32,
    pub attracting_non_degenerate: bool,
    pub parabolically_attracting: bool,
    /// Lowest-index parabolically attracting direction.
    pub chosen_direction: Option<usize>,
    pub dicritical: bool,
    pub complete: bool,
    pub directions: Vec<DirectionCertificate>,
}

impl CertificationReport {
    pub fn chosen(&self) -> Option<&DirectionCertificate> {
        self.chosen_direction.map(|i| &self.directions[i])
    }

    /// Index of the direction projectively closest to `v`.
    pub fn find_direction(&self, v: &[Complex64]) -> Option<usize> {
        self.directions
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.degenerate)
            .min_by(|a, b| {
                projective_distance(&a.1.v, v)
                    .partial_cmp(&projective_distance(&b.1.v, v))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i)
    }
}

/// Evaluates the attraction conditions at every characteristic direction.
pub fn certify(shadow: &ParabolicShadow) -> CertificationReport {
    let set = characteristic_directions_best_effort(shadow);
    certify_directions(shadow, &set)
}

pub fn certify_directions(shadow: &ParabolicShadow, set: &DirectionSet) -> CertificationReport {
    let directions: Vec<DirectionCertificate> = set
        .directions
        .iter()
        .enumerate()
        .map(|(index, d)| {
            let s = match (&shadow.table, d.degenerate) {
                (Some(table), false) => s_values(table, shadow.k0, &d.v),
                _ => Vec::new(),
            };
            let parabolic = !d.degenerate
                && d.fully_attractive
                && !s.is_empty()
                && s.iter().all(|x| x.re < 0.0);
            DirectionCertificate {
                index,
                projective: d.projective.clone(),
                v: d.v.clone(),
                degenerate: d.degenerate,
                multiplicity: d.multiplicity,
                director_real_parts: d.directors.iter().map(|x| x.re).collect(),
                directors: d.directors.clone(),
                fully_attractive: !d.degenerate && d.fully_attractive,
                s_real_parts: s.iter().map(|x| x.re).collect(),
                s_values: s,
                parabolically_attracting: parabolic,
            }
        })
        .collect();
    let chosen_direction = directions.iter().position(|d| d.parabolically_attracting);
    CertificationReport {
        m: shadow.m,
        k0: shadow.k0,
        attracting_non_degenerate: directions.iter().any(|d| d.fully_attractive),
        parabolically_attracting: chosen_direction.is_some(),
        chosen_direction,
        dicritical: set.dicritical,
        complete: set.complete,
        directions,
    }
}

/// `c(v) = Re`-margin helper: `min_j(−Re s_j)` at a certified direction.
pub fn certificate_margin(cert: &DirectionCertificate) -> f64 {
    cert.s_real_parts
        .iter()
        .map(|x| -x)
        .fold(f64::INFINITY, f64::min)
}

/// All `k0` normalized representatives `ζv` with `ζ^{k0} = 1`.
pub fn rotations(v: &[Complex64], k0: u32) -> Vec<Vec<Complex64>> {
    (0..k0)
        .map(|i| {
            let zeta = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / k0 as f64);
            v.iter().map(|x| x * zeta).collect()
        })
        .collect()
}

/// Max coefficient of `π∘G − f∘π` over the degrees where the two agree
/// identically: `|P^t| + k0·min|P|` for component `t`.
pub fn semiconjugacy_residual(
    g: &GermJet,
    structure: &ResonanceStructure,
    shadow: &ParabolicShadow,
) -> f64 {
    let dmin = structure.min_generator_degree();
    let mut worst: f64 = 0.0;
    for (t, gen) in structure.generators().iter().enumerate() {
        let top = (gen.degree() + shadow.k0 * dmin) as usize;
        let top = top.min(g.order() + gen.degree() as usize - 1);
        let mut diff = g.power(gen, top);
        *diff.entry(gen.clone()).or_insert_with(Complex64::default) -= Complex64::new(1.0, 0.0);
        for (e, c) in &shadow.h[t] {
            let q = structure.combine(e.entries());
            if q.degree() as usize <= top {
                *diff.entry(q).or_insert_with(Complex64::default) -= c;
            }
        }
        for c in diff.values() {
            worst = worst.max(c.norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ex1a_shadow() -> ParabolicShadow {
        // H₁ = u₁(−u₁ − 2u₂), H₂ = u₂(−2u₁ − u₂)
        ParabolicShadow::from_coefficients(
            2,
            1,
            vec![
                ((MultiIndex::new(vec![1, 0]), 0), c(-1.0)),
                ((MultiIndex::new(vec![0, 1]), 0), c(-2.0)),
                ((MultiIndex::new(vec![1, 0]), 1), c(-2.0)),
                ((MultiIndex::new(vec![0, 1]), 1), c(-1.0)),
            ],
        )
    }

    #[test]
    fn ex1a_directions_in_chart_order() {
        let set = characteristic_directions(&ex1a_shadow()).unwrap();
        assert_eq!(set.directions.len(), 3);
        let d = &set.directions;
        assert!((d[0].v[0] - c(1.0)).norm() < 1e-12 && d[0].v[1].norm() < 1e-12);
        assert!(
            (d[1].v[0] - c(1.0 / 3.0)).norm() < 1e-12 && (d[1].v[1] - c(1.0 / 3.0)).norm() < 1e-12
        );
        assert!(d[2].v[0].norm() < 1e-12 && (d[2].v[1] - c(1.0)).norm() < 1e-12);
        assert!((d[0].directors[0] - c(1.0)).norm() < 1e-12);
        assert!((d[1].directors[0] - c(-1.0 / 3.0)).norm() < 1e-12);
        assert!((d[2].directors[0] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn dicritical_shadow_reports_degenerate_direction() {
        let mut h = vec![BTreeMap::new(), BTreeMap::new()];
        h[0].insert(MultiIndex::new(vec![1, 1]), c(1.0));
        h[1].insert(MultiIndex::new(vec![0, 2]), c(1.0));
        let shadow = ParabolicShadow::from_homogeneous(2, 1, h);
        let set = characteristic_directions(&shadow).unwrap();
        assert!(set.dicritical);
        assert_eq!(set.directions.len(), 1);
        assert!(set.directions[0].degenerate);
        assert!(set.directions[0].v[1].norm() < 1e-12);
    }

    #[test]
    fn one_dimensional_direction() {
        let shadow =
            ParabolicShadow::from_coefficients(1, 2, vec![((MultiIndex::new(vec![2]), 0), c(3.0))]);
        let set = characteristic_directions(&shadow).unwrap();
        let v = set.directions[0].v[0];
        assert!((3.0 * v * v * v + v / 2.0).norm() < 1e-14);
        assert!(set.directions[0].fully_attractive);
    }

    #[test]
    fn normalize_rejects_degenerate() {
        let mut h = vec![BTreeMap::new(), BTreeMap::new()];
        h[0].insert(MultiIndex::new(vec![1, 1]), c(1.0));
        h[1].insert(MultiIndex::new(vec![0, 2]), c(1.0));
        let shadow = ParabolicShadow::from_homogeneous(2, 1, h);
        assert_eq!(
            normalize_direction(&[c(1.0), c(0.0)], &shadow).unwrap_err(),
            ShadowError::DegenerateDirection
        );
    }

    #[test]
    fn three_dimensional_newton_finds_full_count() {
        // H_t = u_t (a_t · u) with generic a: 7 directions for k0 = 1, m = 3.
        let coeffs = vec![
            (
                (MultiIndex::new(vec![1, 0, 0]), 0),
                Complex64::new(-1.0, 0.2),
            ),
            (
                (MultiIndex::new(vec![0, 1, 0]), 0),
                Complex64::new(-0.3, 0.1),
            ),
            (
                (MultiIndex::new(vec![0, 0, 1]), 0),
                Complex64::new(0.4, -0.5),
            ),
            (
                (MultiIndex::new(vec![1, 0, 0]), 1),
                Complex64::new(0.7, 0.3),
            ),
            (
                (MultiIndex::new(vec![0, 1, 0]), 1),
                Complex64::new(-1.1, 0.0),
            ),
            (
                (MultiIndex::new(vec![0, 0, 1]), 1),
                Complex64::new(0.2, 0.9),
            ),
            (
                (MultiIndex::new(vec![1, 0, 0]), 2),
                Complex64::new(-0.6, -0.4),
            ),
            (
                (MultiIndex::new(vec![0, 1, 0]), 2),
                Complex64::new(0.5, 0.5),
            ),
            (
                (MultiIndex::new(vec![0, 0, 1]), 2),
                Complex64::new(-0.9, 0.3),
            ),
        ];
        let shadow = ParabolicShadow::from_coefficients(3, 1, coeffs);
        let set = characteristic_directions(&shadow).unwrap();
        assert_eq!(set.total_multiplicity, 7);
        for d in &set.directions {
            let h = shadow.eval(&d.v);
            let res: f64 = h
                .iter()
                .zip(&d.v)
                .map(|(a, b)| (a + b).norm())
                .fold(0.0, f64::max);
            assert!(res < 1e-10);
        }
    }
}
