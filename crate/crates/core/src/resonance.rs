//! Resonance lattice, resonance monoid and its generators.
//!
//! Unit-modulus eigenvalues are written `λ_j = exp(2πi(ρ_j + σ_j θ))` with
//! rational `ρ_j, σ_j` and one formal irrational `θ`. A relation `λ^P = 1`
//! then holds iff `Σ p_j σ_j = 0` and `Σ p_j ρ_j ∈ ℤ`, which is decided in
//! exact rational arithmetic. `θ` only enters through numeric evaluation.

use std::collections::HashSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice;
use crate::multi_index::{monomials_of_degree, MultiIndex};

/// Numeric tolerance for `|λ^P − 1|` on exact lattice elements.
pub const NUMERIC_RELATION_TOL: f64 = 1e-10;
/// Inner eigenvalues must satisfy `|λ_j| < 1 − INNER_MODULUS_MARGIN`.
pub const INNER_MODULUS_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResonanceError {
    #[error("invalid eigenvalue spec: {0}")]
    InvalidSpec(String),
    #[error("degenerate eigenvalues: λ_{} = λ_{}", .first + 1, .second + 1)]
    DegenerateEigenvalues { first: usize, second: usize },
    #[error("generators {generators:?} are rank deficient (rank {rank})")]
    RankDeficient {
        generators: Vec<MultiIndex>,
        rank: usize,
    },
    #[error("monoid element {element} is not an ℕ-combination of the generators")]
    NonFreeMonoid { element: MultiIndex },
    #[error("resonance λ_{} = λ^{exponent} is not of the form e_j + KP", .component + 1)]
    NonMonoidResonance {
        component: usize,
        exponent: MultiIndex,
    },
    #[error("θ = {theta} is numerically inconsistent with the relation at {exponent}: |λ^P − 1| = {residual:e}")]
    NumericInconsistency {
        theta: f64,
        exponent: MultiIndex,
        residual: f64,
    },
    #[error("component index {j} out of range 1..={r}")]
    IndexOutOfRange { j: usize, r: usize },
}

impl ResonanceError {
    /// Stable short identifier used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            ResonanceError::InvalidSpec(_) => "invalid-spec",
            ResonanceError::DegenerateEigenvalues { .. } => "degenerate-eigenvalues",
            ResonanceError::RankDeficient { .. } => "rank-deficient",
            ResonanceError::NonFreeMonoid { .. } => "non-free-monoid",
            ResonanceError::NonMonoidResonance { .. } => "non-monoid-resonance",
            ResonanceError::NumericInconsistency { .. } => "numeric-inconsistency",
            ResonanceError::IndexOutOfRange { .. } => "index-out-of-range",
        }
    }
}

/// `λ = exp(2πi(ρ + σθ))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitEigenvalue {
    #[serde(with = "rational_str")]
    pub rho: Rational64,
    #[serde(with = "rational_str")]
    pub sigma: Rational64,
}

impl UnitEigenvalue {
    pub fn new(rho: Rational64, sigma: Rational64) -> Self {
        UnitEigenvalue { rho, sigma }
    }

    pub fn from_sigma(sigma: Rational64) -> Self {
        UnitEigenvalue {
            rho: Rational64::zero(),
            sigma,
        }
    }

    pub fn value(&self, theta: f64) -> Complex64 {
        let phase = ratio_f64(self.rho) + ratio_f64(self.sigma) * theta;
        Complex64::from_polar(1.0, 2.0 * PI * phase)
    }

    /// Exact equality of the represented eigenvalues.
    pub fn same_value(&self, other: &UnitEigenvalue) -> bool {
        self.sigma == other.sigma && (self.rho - other.rho).is_integer()
    }
}

fn ratio_f64(q: Rational64) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Serde helper for rationals written as `"p/q"` (or `"p"`).
pub mod rational_str {
    use num_rational::Rational64;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        if *q.denom() == 1 {
            s.serialize_str(&q.numer().to_string())
        } else {
            s.serialize_str(&format!("{}/{}", q.numer(), q.denom()))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(D::Error::custom)
    }

    pub fn parse(text: &str) -> Result<Rational64, String> {
        let t = text.trim();
        let (num, den) = match t.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (t, "1"),
        };
        let num: i64 = num
            .parse()
            .map_err(|_| format!("bad rational numerator in {text:?}"))?;
        let den: i64 = den
            .parse()
            .map_err(|_| format!("bad rational denominator in {text:?}"))?;
        if den == 0 {
            return Err(format!("zero denominator in {text:?}"));
        }
        Ok(Rational64::new(num, den))
    }
}

/// Eigenvalues of the linear part: `r` exactly represented unit-modulus
/// values followed by `n − r` numeric values inside the unit disc.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueSpec {
    n: usize,
    r: usize,
    unit_part: Vec<UnitEigenvalue>,
    theta: f64,
    inner_part: Vec<Complex64>,
}

impl EigenvalueSpec {
    /// Checks lengths, moduli and θ; exact distinctness is checked separately
    /// (see [`EigenvalueSpec::degenerate_pair`]) so that it can be reported
    /// as its own failure.
    pub fn new(
        unit_part: Vec<UnitEigenvalue>,
        theta: f64,
        inner_part: Vec<Complex64>,
    ) -> Result<Self, ResonanceError> {
        let r = unit_part.len();
        let n = r + inner_part.len();
        if r == 0 {
            return Err(ResonanceError::InvalidSpec(
                "at least one unit-modulus eigenvalue is required".into(),
            ));
        }
        if !theta.is_finite() {
            return Err(ResonanceError::InvalidSpec("θ must be finite".into()));
        }
        for (i, l) in inner_part.iter().enumerate() {
            if !(l.norm() < 1.0 - INNER_MODULUS_MARGIN) {
                return Err(ResonanceError::InvalidSpec(format!(
                    "inner eigenvalue λ_{} has modulus {} (must be < 1)",
                    r + i + 1,
                    l.norm()
                )));
            }
            if l.norm() == 0.0 {
                return Err(ResonanceError::InvalidSpec(format!(
                    "inner eigenvalue λ_{} vanishes; the germ must be invertible",
                    r + i + 1
                )));
            }
        }
        Ok(EigenvalueSpec {
            n,
            r,
            unit_part,
            theta,
            inner_part,
        })
    }

    /// Convenience constructor with `ρ = 0` and only unit eigenvalues.
    pub fn from_sigmas(sigmas: &[Rational64], theta: f64) -> Result<Self, ResonanceError> {
        Self::new(
            sigmas
                .iter()
                .map(|&s| UnitEigenvalue::from_sigma(s))
                .collect(),
            theta,
            Vec::new(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn unit_part(&self) -> &[UnitEigenvalue] {
        &self.unit_part
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn inner_part(&self) -> &[Complex64] {
        &self.inner_part
    }

    /// Numeric `λ_1, …, λ_n`.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.unit_part
            .iter()
            .map(|u| u.value(self.theta))
            .chain(self.inner_part.iter().copied())
            .collect()
    }

    /// First pair `j < s` among the unit eigenvalues with `λ_j = λ_s`.
    pub fn degenerate_pair(&self) -> Option<(usize, usize)> {
        for j in 0..self.r {
            for s in j + 1..self.r {
                if self.unit_part[j].same_value(&self.unit_part[s]) {
                    return Some((j, s));
                }
            }
        }
        None
    }

    /// Exact test of `λ^P = 1` for `P` supported in the unit block.
    pub fn is_unit_relation(&self, p: &[i64]) -> bool {
        let (s, rho) = self.exponent_sums(p);
        s.is_zero() && rho.is_integer()
    }

    /// Exact test of `λ^L = λ_j` for `L` supported in the unit block.
    pub fn is_resonance(&self, j: usize, l: &[i64]) -> bool {
        let (s, rho) = self.exponent_sums(l);
        s == self.unit_part[j].sigma && (rho - self.unit_part[j].rho).is_integer()
    }

    fn exponent_sums(&self, p: &[i64]) -> (Rational64, Rational64) {
        let mut s = Rational64::zero();
        let mut rho = Rational64::zero();
        for (pj, u) in p.iter().zip(&self.unit_part) {
            s += u.sigma * *pj;
            rho += u.rho * *pj;
        }
        (s, rho)
    }

    /// Numeric `λ^P` for an integer vector of length `≤ n`.
    pub fn power(&self, p: &[i64]) -> Complex64 {
        let mut phase = 0.0;
        for (pj, u) in p.iter().zip(&self.unit_part) {
            phase += *pj as f64 * (ratio_f64(u.rho) + ratio_f64(u.sigma) * self.theta);
        }
        let mut value = Complex64::from_polar(1.0, 2.0 * PI * phase);
        for (pj, l) in p.iter().skip(self.r).zip(&self.inner_part) {
            value *= l.powi(*pj as i32);
        }
        value
    }

    /// The eigenvalues of the inverse germ on the unit block.
    pub fn inverse_unit_part(&self) -> Vec<UnitEigenvalue> {
        self.unit_part
            .iter()
            .map(|u| UnitEigenvalue::new(-u.rho, -u.sigma))
            .collect()
    }
}

/// A basis (zero-extended to length `n`) of
/// `{P ∈ ℤ^r : Σ p_j σ_j = 0, Σ p_j ρ_j ∈ ℤ}`.
pub fn resonance_lattice(spec: &EigenvalueSpec) -> Result<Vec<Vec<i64>>, ResonanceError> {
    if let Some((first, second)) = spec.degenerate_pair() {
        return Err(ResonanceError::DegenerateEigenvalues { first, second });
    }
    let r = spec.r;
    let denom = spec
        .unit_part
        .iter()
        .fold(1i64, |acc, u| acc.lcm(u.sigma.denom()).lcm(u.rho.denom()));
    let scaled = |q: Rational64| -> i128 { (q * denom).to_integer() as i128 };
    // Unknowns (p_1..p_r, t) with Σ p σ' = 0 and Σ p ρ' − D t = 0.
    let mut sigma_row: Vec<i128> = spec.unit_part.iter().map(|u| scaled(u.sigma)).collect();
    sigma_row.push(0);
    let mut rho_row: Vec<i128> = spec.unit_part.iter().map(|u| scaled(u.rho)).collect();
    rho_row.push(-(denom as i128));
    let kernel = lattice::integer_kernel(&[sigma_row, rho_row], r + 1);
    // Projection to the first r coordinates is injective (p = 0 forces t = 0).
    let projected: Vec<Vec<i128>> = kernel.iter().map(|v| v[..r].to_vec()).collect();
    let basis = lattice::hermite_normal_form(&projected);
    let out: Vec<Vec<i64>> = basis
        .iter()
        .map(|v| {
            let mut w: Vec<i64> = v.iter().map(|&x| x as i64).collect();
            w.resize(spec.n, 0);
            w
        })
        .collect();
    for p in &out {
        let residual = (spec.power(p) - 1.0).norm();
        if residual >= NUMERIC_RELATION_TOL {
            return Err(ResonanceError::NumericInconsistency {
                theta: spec.theta,
                exponent: MultiIndex::new(p.iter().map(|&x| x.unsigned_abs() as u32).collect()),
                residual,
            });
        }
    }
    Ok(out)
}

/// All `P ∈ ℕ^n` with `1 ≤ |P| ≤ degree_bound` and `λ^P = 1`, in graded order.
///
/// Only the unit block can carry such `P`: an inner factor would force
/// `|λ^P| < 1`.
pub fn resonance_monoid(
    spec: &EigenvalueSpec,
    degree_bound: usize,
) -> Result<Vec<MultiIndex>, ResonanceError> {
    let mut out = Vec::new();
    for d in 1..=degree_bound as u32 {
        for p in monomials_of_degree(spec.r, d) {
            if spec.is_unit_relation(&p.as_i64()) {
                out.push(p.resized(spec.n));
            }
        }
    }
    for p in &out {
        let residual = (spec.power(&p.as_i64()) - 1.0).norm();
        if residual >= NUMERIC_RELATION_TOL {
            return Err(ResonanceError::NumericInconsistency {
                theta: spec.theta,
                exponent: p.clone(),
                residual,
            });
        }
    }
    Ok(out)
}

/// The irreducible elements of a (truncated) monoid, in graded order.
///
/// An element is irreducible when it is not the sum of two monoid elements;
/// the result depends only on the monoid as a set.
pub fn find_generators(monoid: &[MultiIndex]) -> Vec<MultiIndex> {
    let set: HashSet<&MultiIndex> = monoid.iter().collect();
    let mut sorted: Vec<&MultiIndex> = set.iter().copied().collect();
    sorted.sort();
    let mut generators: Vec<MultiIndex> = sorted
        .iter()
        .filter(|p| {
            !sorted.iter().any(|q| {
                q.degree() < p.degree()
                    && q.divides(p)
                    && p.checked_sub(q).is_some_and(|rest| set.contains(&rest))
            })
        })
        .map(|p| (*p).clone())
        .collect();
    generators.sort();
    generators.dedup();
    generators
}

/// Generators of the resonances of the first `r` eigenvalues together with
/// the monoid they generate, certified up to `degree_bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceStructure {
    n: usize,
    r: usize,
    generators: Vec<MultiIndex>,
    monoid: Vec<MultiIndex>,
    degree_bound: usize,
}

impl ResonanceStructure {
    /// Builds the structure directly from known generators, enumerating the
    /// monoid as their ℕ-combinations of degree `≤ degree_bound`.
    pub fn from_generators(
        n: usize,
        r: usize,
        mut generators: Vec<MultiIndex>,
        degree_bound: usize,
    ) -> Result<Self, ResonanceError> {
        if r == 0 || r > n {
            return Err(ResonanceError::InvalidSpec(format!(
                "need 1 ≤ r ≤ n, got r = {r}, n = {n}"
            )));
        }
        for g in &generators {
            if g.len() != n || !g.supported_in(r) || g.is_zero() {
                return Err(ResonanceError::InvalidSpec(format!(
                    "generator {g} must be a non-zero element of ℕ^{r} × 0^{}",
                    n - r
                )));
            }
        }
        generators.sort();
        generators.dedup();
        let rank = generator_rank(&generators);
        if rank < generators.len() {
            return Err(ResonanceError::RankDeficient { generators, rank });
        }
        let monoid = enumerate_combinations(&generators, n, degree_bound);
        Ok(ResonanceStructure {
            n,
            r,
            generators,
            monoid,
            degree_bound,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[MultiIndex] {
        &self.generators
    }

    pub fn monoid(&self) -> &[MultiIndex] {
        &self.monoid
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn max_generator_degree(&self) -> u32 {
        self.generators
            .iter()
            .map(|g| g.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn min_generator_degree(&self) -> u32 {
        self.generators
            .iter()
            .map(|g| g.degree())
            .min()
            .unwrap_or(0)
    }

    /// The same generators with the monoid cut at a smaller degree.
    pub fn truncated(&self, degree_bound: usize) -> ResonanceStructure {
        ResonanceStructure {
            monoid: self
                .monoid
                .iter()
                .filter(|p| p.degree() as usize <= degree_bound)
                .cloned()
                .collect(),
            degree_bound,
            ..self.clone()
        }
    }

    /// The coefficients `K ∈ ℕ^m` with `P = K·(P^1, …, P^m)`, if any.
    ///
    /// Found by depth-first search over `k` with `Σ k_t |P^t| ≤ |P|`; the
    /// answer is unique because the generators are ℚ-independent.
    pub fn decompose(&self, p: &MultiIndex) -> Option<Vec<u32>> {
        if p.len() != self.n || !p.supported_in(self.r) {
            return None;
        }
        let mut k = vec![0u32; self.generators.len()];
        if decompose_rec(&self.generators, 0, p.clone(), &mut k) {
            Some(k)
        } else {
            None
        }
    }

    /// Membership of `P` (with `|P| ≥ 1`) in the resonance monoid.
    pub fn contains(&self, p: &MultiIndex) -> bool {
        !p.is_zero() && self.decompose(p).is_some()
    }

    /// `K·P = Σ k_t P^t`.
    pub fn combine(&self, k: &[u32]) -> MultiIndex {
        MultiIndex::combination(k, &self.generators, self.n)
    }

    /// Whether `(j, Q)` is a resonant monomial position, i.e. `Q − e_j` is
    /// in the monoid (0-based `j < r`).
    pub fn is_resonant_monomial(&self, j: usize, q: &MultiIndex) -> bool {
        j < self.r
            && q.checked_sub(&MultiIndex::unit(self.n, j))
                .is_some_and(|rest| self.contains(&rest))
    }

    /// `π(z) = (z^{P^1}, …, z^{P^m})`.
    pub fn project(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.generators
            .iter()
            .map(|g| monomial_value(z, g))
            .collect()
    }
}

pub(crate) fn monomial_value(z: &[Complex64], q: &MultiIndex) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for (zi, &qi) in z.iter().zip(q.entries()) {
        if qi > 0 {
            acc *= zi.powu(qi);
        }
    }
    acc
}

fn generator_rank(generators: &[MultiIndex]) -> usize {
    let rows: Vec<Vec<i128>> = generators
        .iter()
        .map(|g| g.entries().iter().map(|&x| x as i128).collect())
        .collect();
    lattice::rank(&rows)
}

fn decompose_rec(generators: &[MultiIndex], t: usize, rest: MultiIndex, k: &mut [u32]) -> bool {
    if rest.is_zero() {
        return true;
    }
    if t == generators.len() {
        return false;
    }
    let g = &generators[t];
    let max_k = rest.degree() / g.degree();
    for kt in (0..=max_k).rev() {
        if let Some(next) = rest.checked_sub(&g.scaled(kt)) {
            k[t] = kt;
            if decompose_rec(generators, t + 1, next, k) {
                return true;
            }
        }
    }
    k[t] = 0;
    false
}

fn enumerate_combinations(
    generators: &[MultiIndex],
    n: usize,
    degree_bound: usize,
) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut k = vec![0u32; generators.len()];
    fn rec(
        generators: &[MultiIndex],
        t: usize,
        budget: u32,
        k: &mut Vec<u32>,
        n: usize,
        out: &mut Vec<MultiIndex>,
    ) {
        if t == generators.len() {
            if k.iter().any(|&x| x > 0) {
                out.push(MultiIndex::combination(k, generators, n));
            }
            return;
        }
        let d = generators[t].degree();
        for kt in 0..=budget / d {
            k[t] = kt;
            rec(generators, t + 1, budget - kt * d, k, n, out);
        }
        k[t] = 0;
    }
    rec(generators, 0, degree_bound as u32, &mut k, n, &mut out);
    out.sort();
    out
}

/// Decides m-resonance with respect to the unit block up to `degree_bound`.
///
/// Besides the three named obstructions (coincident eigenvalues, dependent
/// generators, non-free monoid) this also rejects resonances `λ_j = λ^L`
/// with `l_j = 0`, which cannot be of the form `e_j + K·P`.
pub fn check_m_resonant(
    spec: &EigenvalueSpec,
    degree_bound: usize,
) -> Result<ResonanceStructure, ResonanceError> {
    if let Some((first, second)) = spec.degenerate_pair() {
        return Err(ResonanceError::DegenerateEigenvalues { first, second });
    }
    let monoid = resonance_monoid(spec, degree_bound)?;
    let generators = find_generators(&monoid);
    let rank = generator_rank(&generators);
    if rank < generators.len() {
        return Err(ResonanceError::RankDeficient { generators, rank });
    }
    let structure = ResonanceStructure {
        n: spec.n,
        r: spec.r,
        generators,
        monoid,
        degree_bound,
    };
    if let Some(element) = structure
        .monoid
        .iter()
        .find(|p| structure.decompose(p).is_none())
    {
        return Err(ResonanceError::NonFreeMonoid {
            element: element.clone(),
        });
    }
    for j in 0..spec.r {
        for d in 2..=(degree_bound as u32 + 1) {
            for l in monomials_of_degree(spec.r, d) {
                if l[j] == 0 && spec.is_resonance(j, &l.as_i64()) {
                    return Err(ResonanceError::NonMonoidResonance {
                        component: j,
                        exponent: l.resized(spec.n),
                    });
                }
            }
        }
    }
    Ok(structure)
}

/// Minimum certification bound: `max(10, 3 × max generator degree)`,
/// grown until the generators found at the bound are stable.
pub fn default_degree_bound(spec: &EigenvalueSpec) -> Result<usize, ResonanceError> {
    let mut bound = 10usize;
    for _ in 0..8 {
        let generators = find_generators(&resonance_monoid(spec, bound)?);
        let max_deg = generators
            .iter()
            .map(|g| g.degree() as usize)
            .max()
            .unwrap_or(0);
        let needed = (3 * max_deg).max(10);
        if needed <= bound {
            return Ok(bound);
        }
        bound = needed;
    }
    Ok(bound)
}

/// `Res_j = {e_j + P : P ∈ monoid}` for 0-based `j < r`, with the monoid
/// truncated at the structure's degree bound.
pub fn res_j(structure: &ResonanceStructure, j: usize) -> Result<Vec<MultiIndex>, ResonanceError> {
    if j >= structure.r {
        return Err(ResonanceError::IndexOutOfRange {
            j: j + 1,
            r: structure.r,
        });
    }
    let e = MultiIndex::unit(structure.n, j);
    let mut out: Vec<MultiIndex> = structure.monoid.iter().map(|p| p.add(&e)).collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn ex1() -> EigenvalueSpec {
        EigenvalueSpec::from_sigmas(&[q(15, 4), q(-5, 2), q(1, 1)], 0.618_033_988_749_894_9)
            .unwrap()
    }

    #[test]
    fn rational_strings_parse() {
        assert_eq!(rational_str::parse("15/4").unwrap(), q(15, 4));
        assert_eq!(rational_str::parse(" -5/2 ").unwrap(), q(-5, 2));
        assert_eq!(rational_str::parse("3").unwrap(), q(3, 1));
        assert!(rational_str::parse("1/0").is_err());
        assert!(rational_str::parse("x").is_err());
    }

    #[test]
    fn spec_rejects_bad_inner_modulus() {
        let err = EigenvalueSpec::new(
            vec![UnitEigenvalue::from_sigma(q(1, 1))],
            0.3,
            vec![Complex64::new(1.0, 0.0)],
        )
        .unwrap_err();
        assert_eq!(err.code(), "invalid-spec");
    }

    #[test]
    fn degenerate_detects_rho_shift_by_integer() {
        let spec = EigenvalueSpec::new(
            vec![
                UnitEigenvalue::new(q(1, 3), q(1, 1)),
                UnitEigenvalue::new(q(4, 3), q(1, 1)),
            ],
            0.4,
            vec![],
        )
        .unwrap();
        assert_eq!(spec.degenerate_pair(), Some((0, 1)));
        assert_eq!(
            resonance_lattice(&spec).unwrap_err().code(),
            "degenerate-eigenvalues"
        );
    }

    #[test]
    fn lattice_with_rho_only() {
        // λ1 = i, λ2 = -1: 4a + 2b ≡ 0 (mod 4).
        let spec = EigenvalueSpec::new(
            vec![
                UnitEigenvalue::new(q(1, 4), q(0, 1)),
                UnitEigenvalue::new(q(1, 2), q(0, 1)),
            ],
            0.4,
            vec![],
        )
        .unwrap();
        let basis = resonance_lattice(&spec).unwrap();
        assert_eq!(basis.len(), 2);
        let rows: Vec<Vec<i128>> = basis
            .iter()
            .map(|v| v.iter().map(|&x| x as i128).collect())
            .collect();
        assert!(lattice::same_lattice(&rows, &[vec![4, 0], vec![2, 1]]));
    }

    #[test]
    fn rank_deficient_monoid() {
        let spec = EigenvalueSpec::new(
            vec![
                UnitEigenvalue::new(q(1, 4), q(0, 1)),
                UnitEigenvalue::new(q(1, 2), q(0, 1)),
            ],
            0.4,
            vec![],
        )
        .unwrap();
        assert_eq!(
            check_m_resonant(&spec, 10).unwrap_err().code(),
            "rank-deficient"
        );
    }

    #[test]
    fn non_monoid_resonance_rejected() {
        // λ1 = λ2 λ3 with σ = (2, 1, 1) has no unit relations but a resonance
        // for component 1 with l_1 = 0.
        let spec = EigenvalueSpec::from_sigmas(&[q(2, 1), q(1, 1), q(1, 1)], 0.3);
        // σ2 = σ3 makes λ2 = λ3, so use σ = (3, 1, 2) instead: λ1 = λ2 λ3.
        assert!(spec.unwrap().degenerate_pair().is_some());
        let spec = EigenvalueSpec::from_sigmas(&[q(3, 1), q(1, 1), q(2, 1)], 0.3).unwrap();
        let err = check_m_resonant(&spec, 6).unwrap_err();
        assert_eq!(err.code(), "non-monoid-resonance");
    }

    #[test]
    fn decompose_and_contains() {
        let s = check_m_resonant(&ex1(), 21).unwrap();
        assert_eq!(
            s.decompose(&MultiIndex::new(vec![2, 5, 5])),
            Some(vec![1, 1])
        );
        assert!(!s.contains(&MultiIndex::new(vec![1, 0, 0])));
        assert!(!s.contains(&MultiIndex::zeros(3)));
        assert!(s.is_resonant_monomial(0, &MultiIndex::new(vec![3, 3, 0])));
        assert!(!s.is_resonant_monomial(1, &MultiIndex::new(vec![3, 3, 0])));
    }

    #[test]
    fn res_j_out_of_range() {
        let s = check_m_resonant(&ex1(), 21).unwrap();
        assert_eq!(res_j(&s, 3).unwrap_err().code(), "index-out-of-range");
    }

    #[test]
    fn default_bound_for_ex1() {
        assert_eq!(default_degree_bound(&ex1()).unwrap(), 21);
    }
}
