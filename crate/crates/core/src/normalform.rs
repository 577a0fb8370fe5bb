//! Poincaré-Dulac normalization to finite order and extraction of the
//! resonant coefficients `a_{K,j}`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::jets::{Coefficient, GermJet, JetError};
use crate::multi_index::MultiIndex;
use crate::resonance::ResonanceStructure;

/// Non-resonant divisors below this modulus abort normalization.
pub const DEFAULT_DIVISOR_FLOOR: f64 = 1e-8;
/// Resonant coefficients below this modulus count as zero.
pub const COEFFICIENT_ZERO_TOL: f64 = 1e-12;
/// Non-resonant terms above this modulus reject a supposed normal form.
pub const NORMAL_FORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormalFormError {
    #[error("small divisor |λ^Q − λ_{}| = {modulus:e} at Q = {exponent} (degree {degree})", .component + 1)]
    SmallDivisor {
        component: usize,
        exponent: MultiIndex,
        modulus: f64,
        degree: usize,
        /// Normalization completed through `degree − 1`.
        partial_order: usize,
    },
    #[error("not in normal form: {} non-resonant term(s), first at component {} exponent {}", .offenders.len(), .offenders[0].0 + 1, .offenders[0].1)]
    NotNormalForm { offenders: Vec<(usize, MultiIndex)> },
    #[error("jet of dimension {jet} does not match resonance structure of dimension {structure}")]
    DimensionMismatch { jet: usize, structure: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
}

impl NormalFormError {
    pub fn code(&self) -> &'static str {
        match self {
            NormalFormError::SmallDivisor { .. } => "small-divisor",
            NormalFormError::NotNormalForm { .. } => "not-normal-form",
            NormalFormError::DimensionMismatch { .. } => "dimension-mismatch",
            NormalFormError::Jet(_) => "jet-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationResult<T: Coefficient = Complex64> {
    pub normal_form: GermJet<T>,
    /// Tangent to the identity, with `change ∘ F = normal_form ∘ change`.
    pub change: GermJet<T>,
    pub divisor_log: Vec<DivisorRecord>,
    /// Inner-block terms kept because their divisor was below the floor.
    pub retained_inner: Vec<(usize, MultiIndex)>,
    pub order: usize,
}

/// `|λ^Q − λ_j|` for an eliminated term (0-based `component`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisorRecord {
    pub component: usize,
    pub exponent: MultiIndex,
    pub modulus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizeOptions {
    pub divisor_floor: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            divisor_floor: DEFAULT_DIVISOR_FLOOR,
        }
    }
}

fn monomial<T: Coefficient>(z: &[T], q: &MultiIndex) -> T {
    let mut acc = T::one();
    for (zi, &qi) in z.iter().zip(q.entries()) {
        for _ in 0..qi {
            acc *= zi.clone();
        }
    }
    acc
}

/// Whether the term `(j, Q)` is one the normal form keeps in the resonant
/// block `j < r`.
fn is_resonant_position(structure: &ResonanceStructure, j: usize, q: &MultiIndex) -> bool {
    structure.is_resonant_monomial(j, q)
}

/// Degree-by-degree Poincaré-Dulac normalization up to `order`.
///
/// At degree `d` the change `ψ_d = id + h_d` with
/// `h_{j,Q} = f_{j,Q}/(λ_j − λ^Q)` removes every eliminable degree-`d`
/// term, and the germ is replaced by `ψ_d ∘ F ∘ ψ_d⁻¹`.
pub fn poincare_dulac_normalize<T: Coefficient>(
    f: &GermJet<T>,
    structure: &ResonanceStructure,
    order: usize,
    options: NormalizeOptions,
) -> Result<NormalizationResult<T>, NormalFormError> {
    if f.n() != structure.n() {
        return Err(NormalFormError::DimensionMismatch {
            jet: f.n(),
            structure: structure.n(),
        });
    }
    if order > f.order() {
        return Err(JetError::OrderTooLarge {
            requested: order,
            available: f.order(),
        }
        .into());
    }
    let n = f.n();
    let r = structure.r();
    let lambda = f.linear().to_vec();
    let mut current = f.truncated(order);
    let mut change = GermJet::<T>::identity(n, order);
    let mut divisor_log = Vec::new();
    let mut retained_inner = Vec::new();

    for d in 2..=order {
        let mut h = GermJet::<T>::identity(n, order);
        let mut eliminated: Vec<(usize, MultiIndex)> = Vec::new();
        for j in 0..n {
            let degree_d: Vec<(MultiIndex, T)> = current
                .terms(j)
                .iter()
                .filter(|(q, _)| q.degree() as usize == d)
                .map(|(q, c)| (q.clone(), c.clone()))
                .collect();
            for (q, coeff) in degree_d {
                if j < r && is_resonant_position(structure, j, &q) {
                    continue;
                }
                let divisor = lambda[j].clone() - monomial(&lambda, &q);
                let modulus = divisor.magnitude();
                if modulus < options.divisor_floor {
                    if j < r {
                        return Err(NormalFormError::SmallDivisor {
                            component: j,
                            exponent: q,
                            modulus,
                            degree: d,
                            partial_order: d - 1,
                        });
                    }
                    retained_inner.push((j, q));
                    continue;
                }
                divisor_log.push(DivisorRecord {
                    component: j,
                    exponent: q.clone(),
                    modulus,
                });
                h.set_term(j, q.clone(), coeff / divisor)?;
                eliminated.push((j, q));
            }
        }
        if eliminated.is_empty() {
            continue;
        }
        let h_inv = h.invert(order)?;
        current = h.compose(&current.compose(&h_inv, order)?, order)?;
        change = h.compose(&change, order)?;
        for (j, q) in &eliminated {
            current.remove_term(*j, q);
        }
        // Earlier degrees are untouched up to roundoff; keep them exact.
        clear_eliminable(&mut current, structure, d, &retained_inner);
    }

    Ok(NormalizationResult {
        normal_form: current,
        change,
        divisor_log,
        retained_inner,
        order,
    })
}

fn clear_eliminable<T: Coefficient>(
    jet: &mut GermJet<T>,
    structure: &ResonanceStructure,
    max_degree: usize,
    retained_inner: &[(usize, MultiIndex)],
) {
    let r = structure.r();
    let doomed: Vec<(usize, MultiIndex)> = jet
        .iter_terms()
        .filter(|(j, q, _)| {
            q.degree() as usize <= max_degree
                && if *j < r {
                    !is_resonant_position(structure, *j, q)
                } else {
                    !retained_inner.iter().any(|(rj, rq)| rj == j && rq == *q)
                }
        })
        .map(|(j, q, _)| (j, q.clone()))
        .collect();
    for (j, q) in doomed {
        jet.remove_term(j, &q);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalFormCheck {
    pub is_normal_form: bool,
    /// `(0-based component, exponent)` of each non-resonant term.
    pub offenders: Vec<(usize, MultiIndex)>,
}

/// Exact check that components `1..=r` carry only resonant monomials.
pub fn is_normal_form<T: Coefficient>(
    f: &GermJet<T>,
    structure: &ResonanceStructure,
) -> NormalFormCheck {
    let offenders: Vec<(usize, MultiIndex)> = f
        .iter_terms()
        .filter(|(j, q, c)| {
            *j < structure.r() && !c.is_zero() && !is_resonant_position(structure, *j, q)
        })
        .map(|(j, q, _)| (j, q.clone()))
        .collect();
    NormalFormCheck {
        is_normal_form: offenders.is_empty(),
        offenders,
    }
}

/// The weighted order `k0`, or `None` for the infinite sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightedOrder {
    Finite(u32),
    Infinite,
}

impl WeightedOrder {
    pub fn finite(self) -> Option<u32> {
        match self {
            WeightedOrder::Finite(k) => Some(k),
            WeightedOrder::Infinite => None,
        }
    }
}

impl Serialize for WeightedOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            WeightedOrder::Finite(k) => s.serialize_u32(*k),
            WeightedOrder::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// Coefficients `a_{K,j}` of `z^{K·P} z_j` in component `j ≤ r` of a
/// normal form, for `1 ≤ |K| ≤ bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantCoefficientTable {
    m: usize,
    r: usize,
    bound: u32,
    /// `λ_1, …, λ_r` of the germ the table came from.
    lambdas: Vec<Complex64>,
    entries: BTreeMap<(MultiIndex, usize), Complex64>,
    k0: WeightedOrder,
}

impl ResonantCoefficientTable {
    /// Builds a table from explicit entries, dropping zeros; `lambdas`
    /// holds the first `r` eigenvalues.
    pub fn new(
        m: usize,
        lambdas: Vec<Complex64>,
        bound: u32,
        entries: impl IntoIterator<Item = ((MultiIndex, usize), Complex64)>,
    ) -> Self {
        let r = lambdas.len();
        let entries: BTreeMap<(MultiIndex, usize), Complex64> = entries
            .into_iter()
            .filter(|((k, j), a)| *j < r && k.len() == m && a.norm() > 0.0 && k.degree() <= bound)
            .collect();
        let k0 = entries
            .iter()
            .filter(|(_, a)| a.norm() > COEFFICIENT_ZERO_TOL)
            .map(|((k, _), _)| k.degree())
            .min()
            .map_or(WeightedOrder::Infinite, WeightedOrder::Finite);
        ResonantCoefficientTable {
            m,
            r,
            bound,
            lambdas,
            entries,
            k0,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambdas
    }

    pub fn k0(&self) -> WeightedOrder {
        self.k0
    }

    pub fn get(&self, k: &MultiIndex, j: usize) -> Complex64 {
        self.entries
            .get(&(k.clone(), j))
            .copied()
            .unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, usize, Complex64)> {
        self.entries.iter().map(|((k, j), a)| (k, *j, *a))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries with `|K| = degree`.
    pub fn at_degree(&self, degree: u32) -> impl Iterator<Item = (&MultiIndex, usize, Complex64)> {
        self.entries().filter(move |(k, _, _)| k.degree() == degree)
    }

    /// The table of `L⁻¹ ∘ F ∘ L` for `L = diag(μ_1, …, μ_r, 1, …)`:
    /// `a_{K,j} ↦ a_{K,j} μ^{K·P}`.
    pub fn rescaled(&self, structure: &ResonanceStructure, mu: &[Complex64]) -> Self {
        let mut full = mu.to_vec();
        full.resize(structure.n(), Complex64::new(1.0, 0.0));
        let entries: Vec<_> = self
            .entries
            .iter()
            .map(|((k, j), a)| {
                let kp = structure.combine(k.entries());
                (
                    (k.clone(), *j),
                    *a * crate::resonance::monomial_value(&full, &kp),
                )
            })
            .collect();
        ResonantCoefficientTable::new(self.m, self.lambdas.clone(), self.bound, entries)
    }
}

/// Largest `|K|` with `|K·P| + 1 ≤ order`.
pub fn default_table_bound(structure: &ResonanceStructure, order: usize) -> u32 {
    let dmin = structure.min_generator_degree().max(1) as usize;
    (order.saturating_sub(1) / dmin) as u32
}

/// Reads `a_{K,j} = coefficient(NF, j, K·P + e_j)` for `1 ≤ |K| ≤ bound`.
pub fn resonant_coefficients<T: Coefficient>(
    nf: &GermJet<T>,
    structure: &ResonanceStructure,
    bound: u32,
) -> Result<ResonantCoefficientTable, NormalFormError> {
    if nf.n() != structure.n() {
        return Err(NormalFormError::DimensionMismatch {
            jet: nf.n(),
            structure: structure.n(),
        });
    }
    let r = structure.r();
    let offenders: Vec<(usize, MultiIndex)> = nf
        .iter_terms()
        .filter(|(j, q, c)| {
            *j < r && c.magnitude() > NORMAL_FORM_TOL && !is_resonant_position(structure, *j, q)
        })
        .map(|(j, q, _)| (j, q.clone()))
        .collect();
    if !offenders.is_empty() {
        return Err(NormalFormError::NotNormalForm { offenders });
    }
    let m = structure.m();
    let lambdas: Vec<Complex64> = nf.linear()[..r].iter().map(|l| l.to_complex64()).collect();
    let mut entries = Vec::new();
    for d in 1..=bound {
        for k in crate::multi_index::monomials_of_degree(m, d) {
            let kp = structure.combine(k.entries());
            for j in 0..r {
                let q = kp.add(&MultiIndex::unit(structure.n(), j));
                if q.degree() as usize > nf.order() {
                    continue;
                }
                let a = nf.coefficient(j, &q).to_complex64();
                if a.norm() > 0.0 {
                    entries.push(((k.clone(), j), a));
                }
            }
        }
    }
    Ok(ResonantCoefficientTable::new(m, lambdas, bound, entries))
}

/// The weighted order of a table (stored at construction).
pub fn weighted_order(table: &ResonantCoefficientTable) -> WeightedOrder {
    table.k0()
}

/// Order `l` of the non-normal remainder in components `1..=r`: one less
/// than the lowest degree of a non-resonant term, `None` when there is none.
pub fn remainder_order<T: Coefficient>(
    f: &GermJet<T>,
    structure: &ResonanceStructure,
) -> Option<u32> {
    is_normal_form(f, structure)
        .offenders
        .iter()
        .map(|(_, q)| q.degree())
        .min()
        .map(|d| d - 1)
}
