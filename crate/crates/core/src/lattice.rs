//! Scaled cubic lattices with exact arithmetic.
//!
//! The coarse lattice is `Λ = a·Zⁿ` and the fine lattice is obtained by
//! Construction A from a single generator column `G` over `F_p`:
//! `Λ_c = (a/p)·(G·w + p·Zⁿ)`. All points handled here are integer vectors
//! times a positive rational scale, so reduction modulo `θΛ` is exact.
//!
//! Voronoi cells are half-open, `(−θa/2, θa/2]` per coordinate: a coordinate
//! sitting exactly on a cell boundary is quantized toward −∞.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::is_prime;
use crate::rational::{self, Rational};

/// Largest prime accepted for a codebook; the message table is held in memory.
pub const MAX_PRIME: u64 = 1 << 22;

/// Coarse/fine nested lattice pair shared by every node.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LatticeSpecRepr", into = "LatticeSpecRepr")]
pub struct LatticeSpec {
    dimension: usize,
    prime: u64,
    coarse_scale: Rational,
    generator: Vec<u64>,
    /// Centered residues of `G·w mod p`, indexed by `w`.
    codebook: Vec<Vec<i64>>,
    lookup: HashMap<Vec<i64>, u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeSpecRepr {
    dimension: usize,
    prime: u64,
    #[serde(with = "rational::as_string")]
    coarse_scale: Rational,
    generator: Vec<u64>,
}

impl TryFrom<LatticeSpecRepr> for LatticeSpec {
    type Error = Error;

    fn try_from(r: LatticeSpecRepr) -> Result<Self> {
        if r.generator.len() != r.dimension {
            return Err(Error::InvalidSpec(format!(
                "generator has {} entries for dimension {}",
                r.generator.len(),
                r.dimension
            )));
        }
        LatticeSpec::new(r.prime, r.coarse_scale, r.generator)
    }
}

impl From<LatticeSpec> for LatticeSpecRepr {
    fn from(s: LatticeSpec) -> Self {
        LatticeSpecRepr { dimension: s.dimension, prime: s.prime, coarse_scale: s.coarse_scale, generator: s.generator }
    }
}

impl PartialEq for LatticeSpec {
    fn eq(&self, other: &Self) -> bool {
        self.prime == other.prime && self.coarse_scale == other.coarse_scale && self.generator == other.generator
    }
}

impl LatticeSpec {
    pub fn new(prime: u64, coarse_scale: Rational, generator: Vec<u64>) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::InvalidSpec(format!("{prime} is not prime")));
        }
        if prime > MAX_PRIME {
            return Err(Error::InvalidSpec(format!("prime {prime} exceeds table bound {MAX_PRIME}")));
        }
        if !coarse_scale.is_positive() {
            return Err(Error::InvalidSpec("coarse scale must be positive".into()));
        }
        if generator.is_empty() {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if let Some(g) = generator.iter().find(|&&g| g >= prime) {
            return Err(Error::InvalidSpec(format!("generator entry {g} not in F_{prime}")));
        }
        if generator.iter().all(|&g| g == 0) {
            return Err(Error::InvalidSpec("generator is the zero vector".into()));
        }
        let p = prime as i64;
        let codebook: Vec<Vec<i64>> = (0..prime)
            .map(|w| {
                generator.iter().map(|&g| center_mod(((g as u128 * w as u128) % prime as u128) as i64, p)).collect()
            })
            .collect();
        let lookup = codebook.iter().enumerate().map(|(w, k)| (k.clone(), w as u64)).collect::<HashMap<_, _>>();
        debug_assert_eq!(lookup.len(), prime as usize);
        Ok(LatticeSpec { dimension: generator.len(), prime, coarse_scale, generator, codebook, lookup })
    }

    /// One-dimensional spec with `G = (1)`.
    pub fn scalar(prime: u64, coarse_scale: Rational) -> Result<Self> {
        Self::new(prime, coarse_scale, vec![1])
    }

    /// Deterministic generator with every entry nonzero: `G_j = 1 + (j mod (p−1))`.
    pub fn default_generator(dimension: usize, prime: u64) -> Vec<u64> {
        if prime <= 2 {
            return vec![1; dimension];
        }
        (0..dimension as u64).map(|j| 1 + j % (prime - 1)).collect()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn coarse_scale(&self) -> &Rational {
        &self.coarse_scale
    }

    pub fn generator(&self) -> &[u64] {
        &self.generator
    }

    /// Spacing `θa/p` of the fine lattice scaled by `θ`.
    pub fn fine_step(&self, theta: &Rational) -> Rational {
        theta * self.coarse_scale / Rational::from_integer(self.prime as i128)
    }

    /// Side `θa` of the Voronoi cell of `θΛ`.
    pub fn cell_side(&self, theta: &Rational) -> Rational {
        theta * self.coarse_scale
    }

    /// Integer coordinates (at [`fine_step`](Self::fine_step)) of the codeword for `w`.
    pub fn codeword_coords(&self, w: u64) -> &[i64] {
        &self.codebook[w as usize]
    }

    /// Inverse of [`codeword_coords`](Self::codeword_coords).
    pub fn message_of(&self, coords: &[i64]) -> Option<u64> {
        self.lookup.get(coords).copied()
    }

    /// Amplitude factor `√12/a` that gives the coarse cell unit second moment.
    pub fn unit_power_gain(&self) -> f64 {
        12f64.sqrt() / rational::to_f64(&self.coarse_scale)
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got });
        }
        Ok(())
    }
}

/// Representative of `k mod m` in `(−m/2, m/2]`.
pub fn center_mod(k: i64, m: i64) -> i64 {
    let r = k.rem_euclid(m);
    if 2 * r > m {
        r - m
    } else {
        r
    }
}

fn check_theta(theta: &Rational) -> Result<()> {
    if !theta.is_positive() {
        return Err(Error::InvalidParameter("theta must be positive".into()));
    }
    Ok(())
}

/// Exact lattice point `x = scale · coords`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodePoint {
    coords: Vec<i64>,
    #[serde(with = "rational::as_string")]
    scale: Rational,
}

impl CodePoint {
    pub fn new(coords: Vec<i64>, scale: Rational) -> Result<Self> {
        if !scale.is_positive() {
            return Err(Error::InvalidParameter("code point scale must be positive".into()));
        }
        Ok(CodePoint { coords, scale })
    }

    pub fn zero(dimension: usize) -> Self {
        CodePoint { coords: vec![0; dimension], scale: Rational::from_integer(1) }
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Real coordinates of the point.
    pub fn to_real(&self) -> Vec<f64> {
        self.real_coords(1.0)
    }

    /// Real coordinates multiplied by `gain`.
    pub fn real_coords(&self, gain: f64) -> Vec<f64> {
        // Multiply before dividing to keep integer-valued points exact.
        let n = *self.scale.numer() as f64 * gain;
        let d = *self.scale.denom() as f64;
        self.coords.iter().map(|&k| k as f64 * n / d).collect()
    }

    /// Same point expressed at scale `target`; `None` unless every
    /// coordinate lands on the `target` grid.
    pub fn rescaled(&self, target: &Rational) -> Option<CodePoint> {
        if !target.is_positive() {
            return None;
        }
        let f = self.scale / target;
        let (num, den) = (*f.numer(), *f.denom());
        let coords = self
            .coords
            .iter()
            .map(|&k| {
                let v = (k as i128).checked_mul(num)?;
                if v % den != 0 {
                    return None;
                }
                i64::try_from(v / den).ok()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(CodePoint { coords, scale: *target })
    }

    /// The point `β·x` for a positive rational `β` (exact: only the scale changes).
    pub fn scaled(&self, beta: &Rational) -> Result<CodePoint> {
        check_theta(beta)?;
        Ok(CodePoint { coords: self.coords.clone(), scale: self.scale * beta })
    }

    /// The point `α·x` for an integer `α`.
    pub fn times(&self, alpha: i64) -> CodePoint {
        CodePoint { coords: self.coords.iter().map(|&k| k * alpha).collect(), scale: self.scale }
    }

    /// Exact sum, expressed at the largest scale both points live on.
    pub fn checked_add(&self, other: &CodePoint) -> Result<CodePoint> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: other.dimension() });
        }
        let common = rational::gcd(&self.scale, &other.scale);
        let a = self.rescaled(&common).ok_or(Error::ScaleMismatch)?;
        let b = other.rescaled(&common).ok_or(Error::ScaleMismatch)?;
        let coords = a
            .coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| x.checked_add(*y))
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::ScaleMismatch)?;
        Ok(CodePoint { coords, scale: common })
    }

    /// Canonical form: coordinates divided by their gcd, folded into the scale.
    fn normalized(&self) -> (Vec<i64>, Rational) {
        let g = self.coords.iter().fold(0i64, |acc, &k| num_integer::gcd(acc, k));
        if g == 0 {
            return (self.coords.clone(), Rational::from_integer(1));
        }
        (self.coords.iter().map(|&k| k / g).collect(), self.scale * Rational::from_integer(g as i128))
    }
}

impl PartialEq for CodePoint {
    fn eq(&self, other: &Self) -> bool {
        self.normalized() == other.normalized()
    }
}

impl Eq for CodePoint {}

impl Hash for CodePoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.normalized().hash(state);
    }
}

impl std::fmt::Display for CodePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> =
            self.coords.iter().map(|&k| rational::format(&(self.scale * Rational::from_integer(k as i128)))).collect();
        write!(f, "({})", parts.join(" "))
    }
}

/// Finite real vector, used once channel noise is involved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidVector);
        }
        Ok(RealVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for RealVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_real(x: &[f64], spec: &LatticeSpec) -> Result<()> {
    spec.check_dim(x.len())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidVector);
    }
    Ok(())
}

/// Nearest point of `θΛ` to `x`.
pub fn quantize(x: &[f64], theta: &Rational, spec: &LatticeSpec) -> Result<CodePoint> {
    check_theta(theta)?;
    check_real(x, spec)?;
    let side = spec.cell_side(theta);
    let m = rational::to_f64(&side);
    let coords = x.iter().map(|&v| (v / m - 0.5).ceil() as i64).collect();
    CodePoint::new(coords, side)
}

/// Exact nearest point of `θΛ` to a lattice point.
pub fn quantize_point(x: &CodePoint, theta: &Rational, spec: &LatticeSpec) -> Result<CodePoint> {
    let r = mod_point(x, theta, spec)?;
    let neg = r.times(-1);
    let q = x.checked_add(&neg)?;
    let side = spec.cell_side(theta);
    Ok(q.rescaled(&side).expect("x − (x mod θΛ) lies on θΛ"))
}

/// `x mod θΛ` for a real vector; every coordinate lands in `(−θa/2, θa/2]`.
pub fn mod_real(x: &[f64], theta: &Rational, spec: &LatticeSpec) -> Result<RealVector> {
    check_theta(theta)?;
    check_real(x, spec)?;
    let m = rational::to_f64(&spec.cell_side(theta));
    Ok(RealVector(x.iter().map(|&v| wrap(v, m)).collect()))
}

/// `x mod θΛ` for an exact point, computed in integers at the finest common scale.
pub fn mod_point(x: &CodePoint, theta: &Rational, spec: &LatticeSpec) -> Result<CodePoint> {
    check_theta(theta)?;
    spec.check_dim(x.dimension())?;
    let side = spec.cell_side(theta);
    let common = rational::gcd(x.scale(), &side);
    let lifted = x.rescaled(&common).ok_or(Error::ScaleMismatch)?;
    let period = rational::integer_ratio(&side, &common).ok_or(Error::ScaleMismatch)?;
    let period = i64::try_from(period).map_err(|_| Error::ScaleMismatch)?;
    let coords = lifted.coords.iter().map(|&k| center_mod(k, period)).collect();
    CodePoint::new(coords, common)
}

/// Values that `mod_lattice` accepts: exact points and real vectors.
pub trait ModLattice: Sized {
    fn mod_lattice(&self, theta: &Rational, spec: &LatticeSpec) -> Result<Self>;
}

impl ModLattice for CodePoint {
    fn mod_lattice(&self, theta: &Rational, spec: &LatticeSpec) -> Result<Self> {
        mod_point(self, theta, spec)
    }
}

impl ModLattice for RealVector {
    fn mod_lattice(&self, theta: &Rational, spec: &LatticeSpec) -> Result<Self> {
        mod_real(self, theta, spec)
    }
}

pub fn mod_lattice<T: ModLattice>(x: &T, theta: &Rational, spec: &LatticeSpec) -> Result<T> {
    x.mod_lattice(theta, spec)
}

/// Reduces a real value into `(−m/2, m/2]`.
pub(crate) fn wrap(v: f64, m: f64) -> f64 {
    v - m * (v / m - 0.5).ceil()
}

/// Checks both scaling identities on `Λ` for one point:
/// `(α(s mod Λ)) mod Λ = (αs) mod Λ` and `β(s mod Λ) = (βs) mod βΛ`.
pub fn scale_identity_check(s: &CodePoint, alpha: i64, beta: &Rational, spec: &LatticeSpec) -> bool {
    let one = Rational::from_integer(1);
    let integer_rule = (|| -> Result<bool> {
        let lhs = mod_point(&mod_point(s, &one, spec)?.times(alpha), &one, spec)?;
        let rhs = mod_point(&s.times(alpha), &one, spec)?;
        Ok(lhs == rhs)
    })();
    let real_rule = (|| -> Result<bool> {
        let lhs = mod_point(s, &one, spec)?.scaled(beta)?;
        let rhs = mod_point(&s.scaled(beta)?, beta, spec)?;
        Ok(lhs == rhs)
    })();
    matches!((integer_rule, real_rule), (Ok(true), Ok(true)))
}

/// Second moment per dimension of the uniform distribution over `V(θΛ)`: `(θa)²/12`.
pub fn second_moment(theta: &Rational, spec: &LatticeSpec) -> Result<Rational> {
    check_theta(theta)?;
    let side = spec.cell_side(theta);
    Ok(side * side / Rational::from_integer(12))
}

/// Checks that a point is a member of `θΛ_c ∩ V(θΛ)`.
pub fn in_codebook(t: &CodePoint, theta: &Rational, spec: &LatticeSpec) -> bool {
    if !theta.is_positive() || t.dimension() != spec.dimension() {
        return false;
    }
    t.rescaled(&spec.fine_step(theta)).is_some_and(|p| spec.message_of(p.coords()).is_some())
}
