//! Truncated polynomial jets of germs `F(z) = Λz + O(|z|²)` with diagonal
//! linear part.
//!
//! Coefficients are generic over [`Coefficient`] so the same code runs in
//! double precision and in exact rational complex arithmetic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{NumAssign, ToPrimitive};
use thiserror::Error;

use crate::multi_index::MultiIndex;

/// Default truncation order of jets.
pub const DEFAULT_JET_ORDER: usize = 12;

/// Complex numbers with exact rational real and imaginary parts.
pub type ExactComplex = Complex<BigRational>;

pub trait Coefficient:
    Clone + PartialEq + fmt::Debug + Send + Sync + NumAssign + Neg<Output = Self> + 'static
{
    /// Modulus as a double (approximate in exact mode).
    fn magnitude(&self) -> f64;

    fn to_complex64(&self) -> Complex64;
}

impl Coefficient for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn to_complex64(&self) -> Complex64 {
        *self
    }
}

impl Coefficient for ExactComplex {
    fn magnitude(&self) -> f64 {
        self.to_complex64().norm()
    }

    fn to_complex64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// `p/q + (a/b)i` as an exact complex number.
pub fn exact(re: (i64, i64), im: (i64, i64)) -> ExactComplex {
    Complex::new(
        BigRational::new(BigInt::from(re.0), BigInt::from(re.1)),
        BigRational::new(BigInt::from(im.0), BigInt::from(im.1)),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("jet order must be at least 1")]
    InvalidOrder,
    #[error("term of degree {degree} outside 2..={order}")]
    DegreeOutOfRange { degree: u32, order: usize },
    #[error("component {j} out of range 1..={n}")]
    ComponentOutOfRange { j: usize, n: usize },
    #[error("linear entry λ_{} vanishes", .j + 1)]
    SingularLinear { j: usize },
    #[error("requested order {requested} exceeds available order {available}")]
    OrderTooLarge { requested: usize, available: usize },
}

type Poly<T> = BTreeMap<MultiIndex, T>;

/// Truncated jet of a germ fixing the origin with diagonal linear part.
#[derive(Clone, PartialEq)]
pub struct GermJet<T = Complex64> {
    n: usize,
    order: usize,
    linear: Vec<T>,
    terms: Vec<BTreeMap<MultiIndex, T>>,
}

impl<T: Coefficient> fmt::Debug for GermJet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GermJet")
            .field("n", &self.n)
            .field("order", &self.order)
            .field("linear", &self.linear)
            .field("terms", &self.terms)
            .finish()
    }
}

impl<T: Coefficient> GermJet<T> {
    /// The linear germ `z ↦ Λz` as a jet of the given order.
    pub fn new(linear: Vec<T>, order: usize) -> Result<Self, JetError> {
        if order == 0 {
            return Err(JetError::InvalidOrder);
        }
        if let Some(j) = linear.iter().position(|l| l.is_zero()) {
            return Err(JetError::SingularLinear { j });
        }
        let n = linear.len();
        Ok(GermJet {
            n,
            order,
            linear,
            terms: vec![BTreeMap::new(); n],
        })
    }

    pub fn identity(n: usize, order: usize) -> Self {
        GermJet {
            n,
            order: order.max(1),
            linear: vec![T::one(); n],
            terms: vec![BTreeMap::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn linear(&self) -> &[T] {
        &self.linear
    }

    /// Non-linear terms of component `j` (0-based).
    pub fn terms(&self, j: usize) -> &BTreeMap<MultiIndex, T> {
        &self.terms[j]
    }

    /// All stored non-linear terms as `(j, Q, coefficient)`.
    pub fn iter_terms(&self) -> impl Iterator<Item = (usize, &MultiIndex, &T)> {
        self.terms
            .iter()
            .enumerate()
            .flat_map(|(j, t)| t.iter().map(move |(q, c)| (j, q, c)))
    }

    pub fn term_count(&self) -> usize {
        self.terms.iter().map(|t| t.len()).sum()
    }

    /// Highest degree among stored terms (1 for a linear jet).
    pub fn max_degree(&self) -> u32 {
        self.iter_terms()
            .map(|(_, q, _)| q.degree())
            .max()
            .unwrap_or(1)
    }

    fn check_term(&self, j: usize, q: &MultiIndex) -> Result<(), JetError> {
        if j >= self.n {
            return Err(JetError::ComponentOutOfRange {
                j: j + 1,
                n: self.n,
            });
        }
        if q.len() != self.n {
            return Err(JetError::DimensionMismatch {
                expected: self.n,
                found: q.len(),
            });
        }
        let degree = q.degree();
        if degree < 2 || degree as usize > self.order {
            return Err(JetError::DegreeOutOfRange {
                degree,
                order: self.order,
            });
        }
        Ok(())
    }

    /// Sets the coefficient of `z^Q` in component `j` (0-based); a zero
    /// value removes the term.
    pub fn set_term(&mut self, j: usize, q: MultiIndex, value: T) -> Result<(), JetError> {
        self.check_term(j, &q)?;
        if value.is_zero() {
            self.terms[j].remove(&q);
        } else {
            self.terms[j].insert(q, value);
        }
        Ok(())
    }

    /// Adds `value` to the coefficient of `z^Q` in component `j`.
    pub fn add_term(&mut self, j: usize, q: MultiIndex, value: T) -> Result<(), JetError> {
        self.check_term(j, &q)?;
        let entry = self.terms[j].entry(q.clone()).or_insert_with(T::zero);
        *entry += value;
        if entry.is_zero() {
            self.terms[j].remove(&q);
        }
        Ok(())
    }

    pub fn with_term(mut self, j: usize, q: MultiIndex, value: T) -> Result<Self, JetError> {
        self.set_term(j, q, value)?;
        Ok(self)
    }

    pub(crate) fn remove_term(&mut self, j: usize, q: &MultiIndex) {
        self.terms[j].remove(q);
    }

    /// Coefficient of `z^Q` in component `j`; the linear entry for `Q = e_j`.
    pub fn coefficient(&self, j: usize, q: &MultiIndex) -> T {
        match q.degree() {
            0 => T::zero(),
            1 => {
                if q.entries().get(j) == Some(&1) {
                    self.linear[j].clone()
                } else {
                    T::zero()
                }
            }
            _ => self.terms[j].get(q).cloned().unwrap_or_else(T::zero),
        }
    }

    /// Drops every term of degree above `order`.
    pub fn truncated(&self, order: usize) -> Self {
        let order = order.max(1);
        GermJet {
            n: self.n,
            order,
            linear: self.linear.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| {
                    t.iter()
                        .filter(|(q, _)| q.degree() as usize <= order)
                        .map(|(q, c)| (q.clone(), c.clone()))
                        .collect()
                })
                .collect(),
        }
    }

    /// Raises the nominal order without adding terms.
    pub fn with_order(mut self, order: usize) -> Self {
        if order < self.order {
            return self.truncated(order);
        }
        self.order = order;
        self
    }

    pub fn evaluate(&self, z: &[T]) -> Result<Vec<T>, JetError> {
        if z.len() != self.n {
            return Err(JetError::DimensionMismatch {
                expected: self.n,
                found: z.len(),
            });
        }
        Ok((0..self.n)
            .map(|j| {
                let mut acc = self.linear[j].clone() * z[j].clone();
                for (q, c) in &self.terms[j] {
                    acc += c.clone() * monomial(z, q);
                }
                acc
            })
            .collect())
    }

    /// Largest coefficient modulus of `self − other`, linear parts included.
    pub fn max_deviation(&self, other: &GermJet<T>) -> f64 {
        let mut dev: f64 = 0.0;
        for j in 0..self.n.max(other.n) {
            let a = self.linear.get(j).cloned().unwrap_or_else(T::zero);
            let b = other.linear.get(j).cloned().unwrap_or_else(T::zero);
            dev = dev.max((a - b).magnitude());
            let empty = BTreeMap::new();
            let ta = self.terms.get(j).unwrap_or(&empty);
            let tb = other.terms.get(j).unwrap_or(&empty);
            for (q, c) in ta {
                let d = c.clone() - tb.get(q).cloned().unwrap_or_else(T::zero);
                dev = dev.max(d.magnitude());
            }
            for (q, c) in tb {
                if !ta.contains_key(q) {
                    dev = dev.max(c.magnitude());
                }
            }
        }
        dev
    }

    /// `F ∘ G` truncated at `order`.
    pub fn compose(&self, g: &GermJet<T>, order: usize) -> Result<GermJet<T>, JetError> {
        if self.n != g.n {
            return Err(JetError::DimensionMismatch {
                expected: self.n,
                found: g.n,
            });
        }
        let available = self.order.min(g.order);
        if order > available {
            return Err(JetError::OrderTooLarge {
                requested: order,
                available,
            });
        }
        let mut out = compose_terms(&self.terms, g, order);
        for (j, poly) in out.iter_mut().enumerate() {
            add_scaled(poly, &g.component_poly(j, order), &self.linear[j]);
        }
        Ok(self.assemble(out, order))
    }

    /// The inverse germ `H` with `H ∘ F = F ∘ H = id` up to `order`.
    ///
    /// Fixed-point iteration `H ← Λ⁻¹(id − N∘H)` where `F = Λ + N`; each
    /// sweep fixes one more degree and only needs the powers `H^Q` for `Q`
    /// in the support of `N`.
    pub fn invert(&self, order: usize) -> Result<GermJet<T>, JetError> {
        if order > self.order {
            return Err(JetError::OrderTooLarge {
                requested: order,
                available: self.order,
            });
        }
        if let Some(j) = self.linear.iter().position(|l| l.is_zero()) {
            return Err(JetError::SingularLinear { j });
        }
        let inv_linear: Vec<T> = self.linear.iter().map(|l| T::one() / l.clone()).collect();
        let mut h = GermJet {
            n: self.n,
            order,
            linear: inv_linear.clone(),
            terms: vec![BTreeMap::new(); self.n],
        };
        for _ in 1..order {
            let nh = compose_terms(&self.terms, &h, order);
            let mut terms = vec![BTreeMap::new(); self.n];
            for (j, poly) in nh.into_iter().enumerate() {
                for (q, c) in poly {
                    if q.degree() >= 2 {
                        let v = -(c * inv_linear[j].clone());
                        if !v.is_zero() {
                            terms[j].insert(q, v);
                        }
                    }
                }
            }
            h.terms = terms;
        }
        Ok(h)
    }

    /// `L⁻¹ ∘ F ∘ L` for `L = diag(μ)`: the coefficient of `z^Q` in
    /// component `j` becomes `c·μ^Q/μ_j`.
    pub fn scale_conjugated(&self, mu: &[T]) -> Result<GermJet<T>, JetError> {
        if mu.len() != self.n {
            return Err(JetError::DimensionMismatch {
                expected: self.n,
                found: mu.len(),
            });
        }
        if let Some(j) = mu.iter().position(|m| m.is_zero()) {
            return Err(JetError::SingularLinear { j });
        }
        let mut out = self.clone();
        for (j, terms) in out.terms.iter_mut().enumerate() {
            for (q, c) in terms.iter_mut() {
                *c = c.clone() * monomial(mu, q) / mu[j].clone();
            }
        }
        Ok(out)
    }

    pub fn map<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> GermJet<U> {
        GermJet {
            n: self.n,
            order: self.order,
            linear: self.linear.iter().map(&f).collect(),
            terms: self
                .terms
                .iter()
                .map(|t| {
                    t.iter()
                        .map(|(q, c)| (q.clone(), f(c)))
                        .filter(|(_, c)| !c.is_zero())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_complex64(&self) -> GermJet<Complex64> {
        self.map(|c| c.to_complex64())
    }

    /// The polynomial `G^Q = Π_i G_i^{q_i}` truncated at `order`.
    pub fn power(&self, q: &MultiIndex, order: usize) -> BTreeMap<MultiIndex, T> {
        let components: Vec<Poly<T>> = (0..self.n).map(|i| self.component_poly(i, order)).collect();
        let mut memo: HashMap<MultiIndex, Poly<T>> = HashMap::new();
        let mut one = BTreeMap::new();
        one.insert(MultiIndex::zeros(self.n), T::one());
        memo.insert(MultiIndex::zeros(self.n), one);
        power_of(q, &components, &mut memo, order).clone()
    }

    /// Component `j` as a polynomial including its linear term.
    fn component_poly(&self, j: usize, order: usize) -> Poly<T> {
        let mut p: Poly<T> = self.terms[j]
            .iter()
            .filter(|(q, _)| q.degree() as usize <= order)
            .map(|(q, c)| (q.clone(), c.clone()))
            .collect();
        p.insert(MultiIndex::unit(self.n, j), self.linear[j].clone());
        p
    }

    fn assemble(&self, polys: Vec<Poly<T>>, order: usize) -> GermJet<T> {
        let mut linear = vec![T::zero(); self.n];
        let mut terms = vec![BTreeMap::new(); self.n];
        for (j, poly) in polys.into_iter().enumerate() {
            for (q, c) in poly {
                match q.degree() {
                    0 => {}
                    1 => {
                        if q[j] == 1 {
                            linear[j] = c;
                        }
                    }
                    _ => {
                        if !c.is_zero() {
                            terms[j].insert(q, c);
                        }
                    }
                }
            }
        }
        GermJet {
            n: self.n,
            order,
            linear,
            terms,
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

fn add_scaled<T: Coefficient>(target: &mut Poly<T>, p: &Poly<T>, scale: &T) {
    for (q, c) in p {
        let entry = target.entry(q.clone()).or_insert_with(T::zero);
        *entry += c.clone() * scale.clone();
    }
}

fn poly_mul<T: Coefficient>(a: &Poly<T>, b: &Poly<T>, order: usize) -> Poly<T> {
    let mut out: Poly<T> = BTreeMap::new();
    for (qa, ca) in a {
        let da = qa.degree() as usize;
        for (qb, cb) in b {
            if da + qb.degree() as usize > order {
                continue;
            }
            let entry = out.entry(qa.add(qb)).or_insert_with(T::zero);
            *entry += ca.clone() * cb.clone();
        }
    }
    out
}

/// `Σ_Q f_{j,Q} G^Q` for every component, truncated at `order`.
fn compose_terms<T: Coefficient>(
    f_terms: &[BTreeMap<MultiIndex, T>],
    g: &GermJet<T>,
    order: usize,
) -> Vec<Poly<T>> {
    let components: Vec<Poly<T>> = (0..g.n).map(|i| g.component_poly(i, order)).collect();
    let mut powers: HashMap<MultiIndex, Poly<T>> = HashMap::new();
    let mut one = BTreeMap::new();
    one.insert(MultiIndex::zeros(g.n), T::one());
    powers.insert(MultiIndex::zeros(g.n), one);
    let mut out = vec![BTreeMap::new(); f_terms.len()];
    for (j, terms) in f_terms.iter().enumerate() {
        for (q, c) in terms {
            if q.degree() as usize > order {
                continue;
            }
            let power = power_of(q, &components, &mut powers, order);
            add_scaled(&mut out[j], power, c);
        }
    }
    out
}

fn power_of<'a, T: Coefficient>(
    q: &MultiIndex,
    components: &[Poly<T>],
    memo: &'a mut HashMap<MultiIndex, Poly<T>>,
    order: usize,
) -> &'a Poly<T> {
    if !memo.contains_key(q) {
        let i = q
            .entries()
            .iter()
            .rposition(|&x| x > 0)
            .expect("zero exponent is pre-seeded");
        let lower = q
            .checked_sub(&MultiIndex::unit(q.len(), i))
            .expect("entry is positive");
        let base = power_of(&lower, components, memo, order).clone();
        let value = poly_mul(&base, &components[i], order);
        memo.insert(q.clone(), value);
    }
    &memo[q]
}
