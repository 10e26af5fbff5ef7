//! Prime-field messages and the message ↔ codeword map.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, CodePoint, LatticeSpec};
use crate::rational::Rational;

/// Default cap on the number of message tuples [`uniformity_census`] will enumerate.
pub const DEFAULT_ENUMERATION_BOUND: u128 = 1_000_000;

/// An element of `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    value: u64,
    order: u64,
}

impl FieldElement {
    pub fn new(value: u64, order: u64) -> Result<Self> {
        if order < 2 || value >= order {
            return Err(Error::InvalidParameter(format!("{value} is not an element of F_{order}")));
        }
        Ok(FieldElement { value, order })
    }

    /// Reduces an arbitrary integer into `F_order`.
    pub fn from_int(value: i64, order: u64) -> Self {
        FieldElement { value: (value as i128).rem_euclid(order as i128) as u64, order }
    }

    pub fn zero(order: u64) -> Self {
        FieldElement { value: 0, order }
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn order(self) -> u64 {
        self.order
    }

    /// `c ⊗ self` for an integer coefficient.
    pub fn scale(self, c: i64) -> Self {
        self * FieldElement::from_int(c, self.order)
    }

    pub fn inverse(self) -> Option<Self> {
        mod_inverse(self.value as i64, self.order).map(|v| FieldElement { value: v, order: self.order })
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;

    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.order, rhs.order, "mixed field orders");
        FieldElement {
            value: ((self.value as u128 + rhs.value as u128) % self.order as u128) as u64,
            order: self.order,
        }
    }
}

impl std::ops::Sub for FieldElement {
    type Output = FieldElement;

    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.order, rhs.order, "mixed field orders");
        FieldElement {
            value: ((self.value as u128 + (self.order - rhs.value) as u128) % self.order as u128) as u64,
            order: self.order,
        }
    }
}

impl std::ops::Mul for FieldElement {
    type Output = FieldElement;

    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.order, rhs.order, "mixed field orders");
        FieldElement {
            value: ((self.value as u128 * rhs.value as u128) % self.order as u128) as u64,
            order: self.order,
        }
    }
}

/// Returns `(g, x, y)` with `a·x + b·y = g = gcd(a, b)`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: i64, m: u64) -> Option<u64> {
    let m = m as i128;
    let (g, x, _) = ext_gcd((a as i128).rem_euclid(m), m);
    (g == 1).then(|| x.rem_euclid(m) as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime nearest to `x`; equidistant candidates resolve to the larger prime.
pub fn nearest_prime(x: f64) -> u64 {
    if x.is_nan() || x <= 2.0 {
        return 2;
    }
    let mut hi = x.ceil() as u64;
    while !is_prime(hi) {
        hi += 1;
    }
    let mut lo = x.floor() as u64;
    while lo >= 2 && !is_prime(lo) {
        lo -= 1;
    }
    if lo < 2 || (hi as f64 - x) <= (x - lo as f64) {
        hi
    } else {
        lo
    }
}

/// Which end node a message originates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stream {
    /// Sent by the left end node (Node 1).
    A,
    /// Sent by the right end node.
    B,
}

/// Identifies a message: its stream and the block it was first sent in (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageSlot {
    pub stream: Stream,
    pub block: usize,
}

impl MessageSlot {
    pub fn a(block: usize) -> Self {
        MessageSlot { stream: Stream::A, block }
    }

    pub fn b(block: usize) -> Self {
        MessageSlot { stream: Stream::B, block }
    }
}

impl fmt::Display for MessageSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.stream {
            Stream::A => 'a',
            Stream::B => 'b',
        };
        write!(f, "{s}{}", self.block)
    }
}

/// Integer coefficients on message slots: `u = ⊕ c_i w_i`.
///
/// Coefficients are kept as plain integers and only reduced inside field
/// operations.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CombinationKey {
    terms: Vec<(i64, MessageSlot)>,
}

impl CombinationKey {
    pub fn new(terms: Vec<(i64, MessageSlot)>) -> Self {
        CombinationKey { terms }
    }

    /// Key with coefficients `coefficients[i]` on anonymous slots `a1, a2, …`.
    pub fn from_coefficients(coefficients: &[i64]) -> Self {
        CombinationKey::new(coefficients.iter().enumerate().map(|(i, &c)| (c, MessageSlot::a(i + 1))).collect())
    }

    pub fn single(slot: MessageSlot) -> Self {
        CombinationKey { terms: vec![(1, slot)] }
    }

    pub fn terms(&self) -> &[(i64, MessageSlot)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, slot: MessageSlot) -> Option<i64> {
        self.terms.iter().find(|(_, s)| *s == slot).map(|(c, _)| *c)
    }

    /// Checks that no coefficient vanishes modulo `prime`.
    pub fn validate(&self, prime: u64) -> Result<()> {
        match self.terms.iter().find(|(c, _)| c.rem_euclid(prime as i64) == 0) {
            Some(&(c, _)) => Err(Error::DegenerateCoefficient { coefficient: c, prime }),
            None => Ok(()),
        }
    }

    /// `Σ factor_k · key_k`, merging equal slots and reducing every coefficient
    /// into `[1, p)`; terms that cancel modulo `p` are dropped. Slots are
    /// ordered newest block first, then stream.
    pub fn linear(parts: &[(i64, &CombinationKey)], prime: u64) -> Self {
        let p = prime as i128;
        let mut acc: BTreeMap<(std::cmp::Reverse<usize>, Stream), i128> = BTreeMap::new();
        for (factor, key) in parts {
            for &(c, slot) in &key.terms {
                let e = acc.entry((std::cmp::Reverse(slot.block), slot.stream)).or_insert(0);
                *e = (*e + (*factor as i128 % p) * (c as i128 % p)).rem_euclid(p);
            }
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|((std::cmp::Reverse(block), stream), c)| (c as i64, MessageSlot { stream, block }))
            .collect();
        CombinationKey { terms }
    }

    /// Evaluates the key against a message lookup.
    pub fn evaluate(
        &self,
        prime: u64,
        mut lookup: impl FnMut(MessageSlot) -> Option<FieldElement>,
    ) -> Option<FieldElement> {
        self.terms.iter().try_fold(FieldElement::zero(prime), |acc, &(c, slot)| {
            let w = lookup(slot)?;
            Some(acc + w.scale(c))
        })
    }
}

impl fmt::Display for CombinationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(c, s)| format!("{c}*{s}")).collect();
        write!(f, "{}", parts.join("+"))
    }
}

fn check_element(w: FieldElement, spec: &LatticeSpec) -> Result<()> {
    if w.order() != spec.prime() {
        return Err(Error::InvalidParameter(format!(
            "message over F_{} used with a codebook over F_{}",
            w.order(),
            spec.prime()
        )));
    }
    Ok(())
}

/// `θ·((a/p)·G·w mod Λ)`, a point of `θΛ_c ∩ V(θΛ)`.
pub fn phi(w: FieldElement, theta: &Rational, spec: &LatticeSpec) -> Result<CodePoint> {
    check_element(w, spec)?;
    CodePoint::new(spec.codeword_coords(w.value()).to_vec(), spec.fine_step(theta))
}

/// Inverse of [`phi`] by table lookup over the `p`-point codebook.
pub fn phi_inverse(t: &CodePoint, theta: &Rational, spec: &LatticeSpec) -> Result<FieldElement> {
    spec.check_dim(t.dimension())?;
    let on_grid = t.rescaled(&spec.fine_step(theta)).ok_or(Error::NotACodeword)?;
    let w = spec.message_of(on_grid.coords()).ok_or(Error::NotACodeword)?;
    FieldElement::new(w, spec.prime())
}

/// `⊕ c_i w_i` with `messages[i]` paired to the `i`-th key term.
pub fn combine_messages(key: &CombinationKey, messages: &[FieldElement]) -> Result<FieldElement> {
    if key.len() != messages.len() {
        return Err(Error::InvalidParameter(format!(
            "key has {} slots but {} messages were given",
            key.len(),
            messages.len()
        )));
    }
    let Some(first) = messages.first() else {
        return Err(Error::InvalidParameter("empty combination".into()));
    };
    let prime = first.order();
    key.validate(prime)?;
    Ok(key.terms().iter().zip(messages).fold(FieldElement::zero(prime), |acc, (&(c, _), &w)| acc + w.scale(c)))
}

/// Maps `v = (Σ c_i θ t_i) mod θΛ` to the field combination `u` with `φ(u) = θ⁻¹v`.
pub fn lattice_combination_to_message(v: &CodePoint, theta: &Rational, spec: &LatticeSpec) -> Result<FieldElement> {
    phi_inverse(v, theta, spec)
}

/// `(Σ c_i θ φ(w_i)) mod θΛ` computed on the lattice side.
pub fn lattice_combination(
    key: &CombinationKey,
    messages: &[FieldElement],
    theta: &Rational,
    spec: &LatticeSpec,
) -> Result<CodePoint> {
    if key.len() != messages.len() {
        return Err(Error::InvalidParameter("key and message lengths differ".into()));
    }
    let mut acc = CodePoint::new(vec![0; spec.dimension()], spec.fine_step(theta))?;
    for (&(c, _), &w) in key.terms().iter().zip(messages) {
        acc = acc.checked_add(&phi(w, theta, spec)?.times(c))?;
    }
    lattice::mod_point(&acc, theta, spec)
}

/// Recovers `w` from `u = α ⊗ w`.
pub fn solve_coefficient(u: FieldElement, alpha: i64) -> Result<FieldElement> {
    let p = u.order();
    let inv = mod_inverse(alpha, p).ok_or(Error::NonInvertibleCoefficient { coefficient: alpha, prime: p })?;
    Ok(u * FieldElement::new(inv, p)?)
}

/// Exact histogram of `(Σ c_i θ t_i) mod θΛ` over every message tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    /// Output points with their hit counts, ordered by coordinates.
    pub counts: Vec<(CodePoint, u64)>,
    pub tuples: u128,
}

impl Census {
    /// Every point hit equally often and exactly `p` points hit.
    pub fn is_uniform_over(&self, size: usize) -> bool {
        self.counts.len() == size && self.counts.windows(2).all(|w| w[0].1 == w[1].1)
    }
}

pub fn uniformity_census(key: &CombinationKey, theta: &Rational, spec: &LatticeSpec, bound: u128) -> Result<Census> {
    let p = spec.prime();
    key.validate(p)?;
    let slots = key.len();
    let required = (p as u128).checked_pow(slots as u32).unwrap_or(u128::MAX);
    if required > bound {
        return Err(Error::EnumerationBoundExceeded { required, bound });
    }
    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    let step = spec.fine_step(theta);
    let mut tuple = vec![FieldElement::zero(p); slots];
    for _ in 0..required {
        let v = lattice_combination(key, &tuple, theta, spec)?;
        let v = v.rescaled(&step).ok_or(Error::ScaleMismatch)?;
        *counts.entry(v.coords().to_vec()).or_default() += 1;
        // odometer increment
        for w in tuple.iter_mut() {
            *w = *w + FieldElement::new(1, p)?;
            if w.value() != 0 {
                break;
            }
        }
    }
    let counts =
        counts.into_iter().map(|(k, c)| CodePoint::new(k, step).map(|pt| (pt, c))).collect::<Result<Vec<_>>>()?;
    Ok(Census { counts, tuples: required })
}
