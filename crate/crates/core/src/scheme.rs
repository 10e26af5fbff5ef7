//! Encoders, lattice decoders and the re-distribution transform.
//!
//! Decoders are exhaustive minimum-distance searches over the scaled
//! codebook. Distances are fold-aware: the residual between the reduced
//! observation and a candidate is taken modulo the coarse lattice, i.e. the
//! minimum over the 3ⁿ neighbouring translates. For a cubic lattice that
//! minimum separates per coordinate.
//!
//! No dithers and no MMSE scaling are applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, CombinationKey, FieldElement};
use crate::lattice::{self, center_mod, CodePoint, LatticeSpec};
use crate::rational::{self, Rational};

/// `θ·φ(w)`.
pub fn encode(w: FieldElement, theta: &Rational, spec: &LatticeSpec) -> Result<CodePoint> {
    field::phi(w, theta, spec)
}

/// Squared distance from `y` to `c` (both reduced into a cell of side `m`),
/// minimised over the translates `c + {−m, 0, m}` per coordinate.
fn folded_distance2(y: &[f64], c: impl Iterator<Item = f64>, m: f64) -> f64 {
    y.iter()
        .zip(c)
        .map(|(&yj, cj)| {
            let d = yj - cj;
            let d = d.abs().min((d - m).abs()).min((d + m).abs());
            d * d
        })
        .sum()
}

fn check_obs(y: &[f64], spec: &LatticeSpec) -> Result<()> {
    spec.check_dim(y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidVector);
    }
    Ok(())
}

/// Decodes `θt` from `y = θt + z`: reduce modulo `θΛ`, then pick the nearest of
/// the `p` codewords of `θΛ_c ∩ V(θΛ)`.
pub fn decode_point_to_point(y: &[f64], theta: &Rational, spec: &LatticeSpec) -> Result<CodePoint> {
    check_obs(y, spec)?;
    let reduced = lattice::mod_real(y, theta, spec)?;
    let step = spec.fine_step(theta);
    let h = rational::to_f64(&step);
    let m = rational::to_f64(&spec.cell_side(theta));
    let mut best = (f64::INFINITY, 0u64);
    for w in 0..spec.prime() {
        let coords = spec.codeword_coords(w);
        let d = folded_distance2(&reduced, coords.iter().map(|&k| k as f64 * h), m);
        if d < best.0 {
            best = (d, w);
        }
    }
    CodePoint::new(spec.codeword_coords(best.1).to_vec(), step)
}

/// A decoded lattice combination `(Σ c_i θ t_i) mod αθΛ`.
///
/// `step` is the fine scale `θ`, `modulus` the coarse scale `αθ`. The key is
/// filled in by the simulator for bookkeeping; decoders never read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedCombination {
    pub point: CodePoint,
    #[serde(with = "rational::as_string")]
    pub step: Rational,
    #[serde(with = "rational::as_string")]
    pub modulus: Rational,
    pub key: Option<CombinationKey>,
}

impl DecodedCombination {
    pub fn new(point: CodePoint, step: Rational, modulus: Rational) -> Result<Self> {
        if rational::integer_ratio(&modulus, &step).is_none_or(|a| a < 1) {
            return Err(Error::ScaleMismatch);
        }
        Ok(DecodedCombination { point, step, modulus, key: None })
    }

    pub fn with_key(mut self, key: CombinationKey) -> Self {
        self.key = Some(key);
        self
    }

    /// Ratio `α` between the modulus and the step.
    pub fn alpha(&self) -> i64 {
        rational::integer_ratio(&self.modulus, &self.step).expect("validated at construction") as i64
    }

    /// Field message carried by the combination relative to its step:
    /// `φ⁻¹(((α·point) mod αθΛ) / αθ)`.
    pub fn to_message(&self, spec: &LatticeSpec) -> Result<FieldElement> {
        let lifted = lattice::mod_point(&self.point.times(self.alpha()), &self.modulus, spec)?;
        field::phi_inverse(&lifted, &self.modulus, spec)
    }
}

/// Candidate set `θΛ_c ∩ V(αθΛ)` of decode-the-sum, enumerated once.
#[derive(Debug, Clone)]
pub struct SumDecoder {
    alpha: i64,
    step: Rational,
    modulus: Rational,
    /// Coordinates at scale `θa/p`.
    candidates: Vec<Vec<i64>>,
    h: f64,
    m: f64,
    spec: LatticeSpec,
}

impl SumDecoder {
    /// Upper bound on `αⁿ·p` candidates.
    pub const MAX_CANDIDATES: u128 = 1 << 22;

    pub fn new(alpha: i64, theta: &Rational, spec: &LatticeSpec) -> Result<Self> {
        if alpha < 1 {
            return Err(Error::InvalidParameter(format!("alpha must be a positive integer, got {alpha}")));
        }
        if *theta <= Rational::from_integer(0) {
            return Err(Error::InvalidParameter("theta must be positive".into()));
        }
        let n = spec.dimension();
        let p = spec.prime() as i64;
        let shifts = (alpha as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        let required = shifts.saturating_mul(p as u128);
        if required > Self::MAX_CANDIDATES {
            return Err(Error::EnumerationBoundExceeded { required, bound: Self::MAX_CANDIDATES });
        }
        let period = alpha * p;
        let mut candidates = Vec::with_capacity(required as usize);
        for w in 0..spec.prime() {
            let base = spec.codeword_coords(w);
            let mut shift = vec![0i64; n];
            for _ in 0..shifts {
                candidates.push(base.iter().zip(&shift).map(|(&b, &s)| center_mod(b + p * s, period)).collect());
                for s in shift.iter_mut() {
                    *s += 1;
                    if *s < alpha {
                        break;
                    }
                    *s = 0;
                }
            }
        }
        let step = spec.fine_step(theta);
        let modulus = theta * Rational::from_integer(alpha as i128);
        Ok(SumDecoder {
            alpha,
            h: rational::to_f64(&step),
            m: rational::to_f64(&spec.cell_side(&modulus)),
            step: *theta,
            modulus,
            candidates,
            spec: spec.clone(),
        })
    }

    pub fn alpha(&self) -> i64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// The candidate points, in enumeration order.
    pub fn candidates(&self) -> Vec<CodePoint> {
        let step = self.spec.fine_step(&self.step);
        self.candidates.iter().map(|k| CodePoint::new(k.clone(), step).expect("positive step")).collect()
    }

    pub fn decode(&self, y: &[f64]) -> Result<DecodedCombination> {
        check_obs(y, &self.spec)?;
        let reduced = lattice::mod_real(y, &self.modulus, &self.spec)?;
        let mut best = (f64::INFINITY, 0usize);
        for (i, k) in self.candidates.iter().enumerate() {
            let d = folded_distance2(&reduced, k.iter().map(|&c| c as f64 * self.h), self.m);
            if d < best.0 {
                best = (d, i);
            }
        }
        let point = CodePoint::new(self.candidates[best.1].clone(), self.spec.fine_step(&self.step))?;
        DecodedCombination::new(point, self.step, self.modulus)
    }
}

/// Decodes `(αθt_a + θt_b) mod αθΛ` from `y = αθt_a + θt_b + z`.
pub fn decode_sum(y: &[f64], alpha: i64, theta: &Rational, spec: &LatticeSpec) -> Result<DecodedCombination> {
    SumDecoder::new(alpha, theta, spec)?.decode(y)
}

/// Intermediate values of the three transform steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSteps {
    /// `N·c`.
    pub multiplied: CodePoint,
    /// `(N·c) mod αθΛ`.
    pub reduced: CodePoint,
    /// Rescaled onto `out_scale·Λ_c ∩ V(out_scale·Λ)`.
    pub output: CodePoint,
}

/// Re-distribution transform with every intermediate value.
pub fn redistribution_steps(
    c: &DecodedCombination,
    n: i64,
    out_scale: &Rational,
    spec: &LatticeSpec,
) -> Result<TransformSteps> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("transform multiplier must be positive, got {n}")));
    }
    if *out_scale <= Rational::from_integer(0) {
        return Err(Error::InvalidParameter("output scale must be positive".into()));
    }
    let multiplied = c.point.times(n);
    let reduced = lattice::mod_point(&multiplied, &c.modulus, spec)?;
    // the reduced point must sit on the modulus-scaled fine lattice
    let on_grid = reduced.rescaled(&spec.fine_step(&c.modulus)).ok_or(Error::ScaleMismatch)?;
    let output = on_grid.scaled(&(out_scale / c.modulus))?;
    let output = output.rescaled(&spec.fine_step(out_scale)).ok_or(Error::ScaleMismatch)?;
    Ok(TransformSteps { multiplied, reduced, output })
}

/// Multiply by `n`, reduce modulo the combination's coarse lattice, rescale
/// to `out_scale`. Exact throughout.
pub fn redistribution_transform(
    c: &DecodedCombination,
    n: i64,
    out_scale: &Rational,
    spec: &LatticeSpec,
) -> Result<CodePoint> {
    redistribution_steps(c, n, out_scale, spec).map(|s| s.output)
}
