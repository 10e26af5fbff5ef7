//! Closed-form rate analysis for the two-way line network.
//!
//! Powers are indexed from Node 1. All logarithms are base 2; comparisons
//! between rates carry an explicit [`SLACK`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Comparison slack for log-domain rate arithmetic.
pub const SLACK: f64 = 1e-9;

/// Relative tolerance when checking that a power ratio is a perfect square.
pub const PATTERN_TOLERANCE: f64 = 1e-9;

/// `½·log₂ 3`, the certified gap.
pub fn half_log3() -> f64 {
    0.5 * 3f64.log2()
}

/// `C(x) = ½ log₂(1 + x)`.
pub fn capacity(snr: f64) -> f64 {
    0.5 * (1.0 + snr).log2()
}

/// `[½ log₂ x]⁺`.
pub fn positive_half_log(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else {
        0.5 * x.log2()
    }
}

/// Which node of an aligned pair carries the larger power.
///
/// For the pair (1,3) the two-relay layout has Node 3 larger; for (2,4) it has
/// Node 2 larger. The permuted layout swaps the roles. Longer chains continue
/// the alternation pair by pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Theorem1,
    Lemma6,
}

impl Orientation {
    /// Orientation of the pair `(first, first + 2)` (0-based node index) given
    /// whether the later node is the larger one.
    pub fn for_pair(first: usize, later_larger: bool) -> Self {
        if first.is_multiple_of(2) == later_larger {
            Orientation::Theorem1
        } else {
            Orientation::Lemma6
        }
    }

    /// Inverse of [`for_pair`](Self::for_pair).
    pub fn later_larger(self, first: usize) -> bool {
        (self == Orientation::Theorem1) == first.is_multiple_of(2)
    }
}

/// A square ratio between the two powers of an aligned pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPattern {
    pub ratio: u64,
    pub orientation: Orientation,
}

/// Recognises `later/earlier = r²` or `1/r²` for an integer `r ≥ 1`.
pub fn square_pattern(first: usize, earlier: f64, later: f64) -> Option<PairPattern> {
    if !(earlier > 0.0 && later > 0.0) {
        return None;
    }
    let later_larger = later >= earlier;
    let q = if later_larger { later / earlier } else { earlier / later };
    let r = q.sqrt().round();
    if r < 1.0 || ((r * r - q) / q).abs() > PATTERN_TOLERANCE {
        return None;
    }
    let ratio = r as u64;
    // equal powers are reported with the default orientation
    let orientation = if ratio == 1 { Orientation::Theorem1 } else { Orientation::for_pair(first, later_larger) };
    Some(PairPattern { ratio, orientation })
}

/// The six link constraints, in display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Link {
    #[serde(rename = "P1/N2")]
    P1N2,
    #[serde(rename = "P2/N3")]
    P2N3,
    #[serde(rename = "P3/N4")]
    P3N4,
    #[serde(rename = "P4/N3")]
    P4N3,
    #[serde(rename = "P3/N2")]
    P3N2,
    #[serde(rename = "P2/N1")]
    P2N1,
}

impl Link {
    pub const ALL: [Link; 6] = [Link::P1N2, Link::P2N3, Link::P3N4, Link::P4N3, Link::P3N2, Link::P2N1];

    /// `(transmitter, receiver)`, 0-based.
    pub fn nodes(self) -> (usize, usize) {
        match self {
            Link::P1N2 => (0, 1),
            Link::P2N3 => (1, 2),
            Link::P3N4 => (2, 3),
            Link::P4N3 => (3, 2),
            Link::P3N2 => (2, 1),
            Link::P2N1 => (1, 0),
        }
    }
}

impl std::fmt::Display for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (t, r) = self.nodes();
        write!(f, "P{}/N{}", t + 1, r + 1)
    }
}

fn check_four(name: &str, v: &[f64]) -> Result<[f64; 4]> {
    let arr: [f64; 4] =
        v.try_into().map_err(|_| Error::InvalidParameter(format!("{name} needs 4 entries, got {}", v.len())))?;
    if arr.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidParameter(format!("{name} entries must be positive and finite")));
    }
    Ok(arr)
}

fn six_terms(powers: &[f64; 4], noise: &[f64; 4]) -> (f64, Link) {
    let mut best = (f64::INFINITY, Link::P1N2);
    for link in Link::ALL {
        let (t, r) = link.nodes();
        let v = positive_half_log(powers[t] / noise[r]);
        if v < best.0 {
            best = (v, link);
        }
    }
    best
}

/// Rate of the two-relay scheme for powers already in a square pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternRate {
    pub rate: f64,
    pub binding: Link,
    pub pair13: PairPattern,
    pub pair24: PairPattern,
}

pub fn theorem1_rate(powers: &[f64], noise: &[f64]) -> Result<PatternRate> {
    let p = check_four("powers", powers)?;
    let n = check_four("noise", noise)?;
    let pair13 = square_pattern(0, p[0], p[2])
        .ok_or_else(|| Error::InfeasiblePattern(format!("P1/P3 = {} is not a square ratio", p[0] / p[2])))?;
    let pair24 = square_pattern(1, p[1], p[3])
        .ok_or_else(|| Error::InfeasiblePattern(format!("P2/P4 = {} is not a square ratio", p[1] / p[3])))?;
    let (rate, binding) = six_terms(&p, &n);
    Ok(PatternRate { rate, binding, pair13, pair24 })
}

/// Cut-set bound: the weakest of the six point-to-point links.
pub fn outer_bound(powers: &[f64], noise: &[f64]) -> Result<f64> {
    let p: [f64; 4] = powers.try_into().map_err(|_| Error::InvalidParameter("powers needs 4 entries".into()))?;
    let n = check_four("noise", noise)?;
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidParameter("powers must be non-negative".into()));
    }
    Ok(Link::ALL
        .iter()
        .map(|l| {
            let (t, r) = l.nodes();
            capacity(p[t] / n[r])
        })
        .fold(f64::INFINITY, f64::min))
}

/// Result of truncating one pair of powers to a square ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub p1: f64,
    pub p3: f64,
    pub ratio: u64,
}

/// Clips `(p1, p3)` so that the larger over the smaller is `m²` or `(m+1)²`,
/// losing at most half of either power.
pub fn truncate_powers(p1: f64, p3: f64) -> Result<Truncation> {
    if !(p1.is_finite() && p3.is_finite() && p1 > 0.0 && p3 > 0.0) {
        return Err(Error::InvalidParameter("powers must be positive and finite".into()));
    }
    let swapped = p1 > p3;
    let (small, large) = if swapped { (p3, p1) } else { (p1, p3) };
    let r = large / small;
    let mut m = r.sqrt().floor().max(1.0) as u64;
    while ((m + 1) * (m + 1)) as f64 <= r {
        m += 1;
    }
    while m > 1 && (m * m) as f64 > r {
        m -= 1;
    }
    let keep_small = |m: u64| ((m * m) as f64 * small, small, m);
    let keep_large = |m: u64| (large, large / ((m + 1) * (m + 1)) as f64, m + 1);
    let valid = |(l, s, _): (f64, f64, u64)| 2.0 * l >= large && 2.0 * s >= small;
    let first = if r <= (m * (m + 1)) as f64 { keep_small(m) } else { keep_large(m) };
    let second = if r <= (m * (m + 1)) as f64 { keep_large(m) } else { keep_small(m) };
    // near the branch boundary floating-point rounding can break the half-power
    // guarantee on one side only
    let (l, s, ratio) = if valid(first) { first } else { second };
    Ok(if swapped { Truncation { p1: l, p3: s, ratio } } else { Truncation { p1: s, p3: l, ratio } })
}

/// Largest powers `≤ (earlier, later)` with `later/earlier = r²` (or `1/r²`).
fn clip_pair(earlier: f64, later: f64, r: u64, later_larger: bool) -> (f64, f64) {
    let r2 = (r * r) as f64;
    if later_larger {
        let base = earlier.min(later / r2);
        (base, base * r2)
    } else {
        let base = later.min(earlier / r2);
        (base * r2, base)
    }
}

/// Output of [`optimize_truncated`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateReport {
    #[serde(rename = "R_achievable")]
    pub r_achievable: f64,
    pub binding: Link,
    pub truncated_powers: [f64; 4],
    /// Ratio for the pair (1,3).
    pub n: u64,
    /// Ratio for the pair (2,4).
    pub m: u64,
    pub orientation13: Orientation,
    pub orientation24: Orientation,
    #[serde(rename = "R_outer")]
    pub r_outer: f64,
    pub gap: f64,
}

/// Search bound on the integer ratio of a pair: `⌈√(max/min)⌉ + 1`.
///
/// With the later node larger and `r > √(max/min)`, the clipped earlier power
/// is `later/r²`, decreasing in `r` while the later power stays put; with the
/// other orientation, `r > 1` only shrinks the smaller node. Every one of the
/// six terms is monotone in the powers, so ratios past the bound never win.
pub fn ratio_bound(a: f64, b: f64) -> u64 {
    ((a.max(b) / a.min(b)).sqrt().ceil() as u64) + 1
}

/// The half-power construction `P⋆` for both pairs.
pub fn appendix_candidate(powers: &[f64]) -> Result<([f64; 4], PairPattern, PairPattern)> {
    let p = check_four("powers", powers)?;
    let t13 = truncate_powers(p[0], p[2])?;
    let t24 = truncate_powers(p[1], p[3])?;
    let star = [t13.p1, t24.p1, t13.p3, t24.p3];
    let pair13 = PairPattern { ratio: t13.ratio, orientation: pattern_orientation(0, t13.p1, t13.p3, t13.ratio) };
    let pair24 = PairPattern { ratio: t24.ratio, orientation: pattern_orientation(1, t24.p1, t24.p3, t24.ratio) };
    Ok((star, pair13, pair24))
}

fn pattern_orientation(first: usize, earlier: f64, later: f64, ratio: u64) -> Orientation {
    if ratio == 1 {
        Orientation::Theorem1
    } else {
        Orientation::for_pair(first, later >= earlier)
    }
}

/// Maximises the two-relay rate over truncated powers in a square pattern.
///
/// Grid over `N ≤ N_max`, `M ≤ M_max` and both orientations per pair, plus
/// the `P⋆` candidate. Ties go to smaller `(N, M)`, then to
/// [`Orientation::Theorem1`].
pub fn optimize_truncated(powers: &[f64], noise: &[f64]) -> Result<RateReport> {
    let p = check_four("powers", powers)?;
    let nz = check_four("noise", noise)?;
    let orientations = [Orientation::Theorem1, Orientation::Lemma6];
    let pair_options = |first: usize, earlier: f64, later: f64| -> Vec<(u64, Orientation, f64, f64)> {
        let mut out = Vec::new();
        for r in 1..=ratio_bound(earlier, later) {
            for &o in &orientations {
                if r == 1 && o == Orientation::Lemma6 {
                    continue;
                }
                let (e, l) = clip_pair(earlier, later, r, o.later_larger(first));
                out.push((r, o, e, l));
            }
        }
        out
    };
    let opts13 = pair_options(0, p[0], p[2]);
    let opts24 = pair_options(1, p[1], p[3]);

    let mut best: Option<(f64, Link, [f64; 4], PairPattern, PairPattern)> = None;
    let mut consider = |rate: f64, binding: Link, tp: [f64; 4], a: PairPattern, b: PairPattern| {
        if best.as_ref().is_none_or(|cur| rate > cur.0 + SLACK) {
            best = Some((rate, binding, tp, a, b));
        }
    };
    for &(n, o13, p1, p3) in &opts13 {
        for &(m, o24, p2, p4) in &opts24 {
            let tp = [p1, p2, p3, p4];
            let (rate, binding) = six_terms(&tp, &nz);
            consider(
                rate,
                binding,
                tp,
                PairPattern { ratio: n, orientation: o13 },
                PairPattern { ratio: m, orientation: o24 },
            );
        }
    }
    let (star, a, b) = appendix_candidate(&p)?;
    let (rate, binding) = six_terms(&star, &nz);
    consider(rate, binding, star, a, b);

    let (r_achievable, binding, truncated_powers, pair13, pair24) = best.expect("grid is never empty");
    let r_outer = outer_bound(&p, &nz)?;
    Ok(RateReport {
        r_achievable,
        binding,
        truncated_powers,
        n: pair13.ratio,
        m: pair24.ratio,
        orientation13: pair13.orientation,
        orientation24: pair24.orientation,
        r_outer,
        gap: r_outer - r_achievable,
    })
}

/// Rate of a chain `1 ↔ 2 ↔ … ↔ L` with powers already in a square pattern
/// on every same-parity neighbour pair.
pub fn chain_rate(powers: &[f64], noise: &[f64]) -> Result<f64> {
    let l = powers.len();
    if l < 3 || noise.len() != l {
        return Err(Error::InvalidParameter(format!(
            "chain needs matching power/noise vectors of length ≥ 3, got {} and {}",
            l,
            noise.len()
        )));
    }
    if powers.iter().chain(noise).any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidParameter("powers and noise must be positive and finite".into()));
    }
    for j in 0..l.saturating_sub(2) {
        if square_pattern(j, powers[j], powers[j + 2]).is_none() {
            return Err(Error::InfeasiblePattern(format!(
                "P{}/P{} = {} is not a square ratio",
                j + 1,
                j + 3,
                powers[j] / powers[j + 2]
            )));
        }
    }
    let forward = (0..l - 1).map(|k| positive_half_log(powers[k] / noise[k + 1]));
    let backward = (1..l).map(|j| positive_half_log(powers[j] / noise[j - 1]));
    Ok(forward.chain(backward).fold(f64::INFINITY, f64::min))
}

/// Half-duplex operation splits every block in two.
pub fn half_duplex_rate(report: &RateReport) -> f64 {
    0.5 * report.r_achievable
}

/// Outcome of a randomized gap audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapAudit {
    pub samples: u64,
    pub seed: u64,
    pub max_gap: f64,
    pub bound: f64,
    pub holds: bool,
    pub argmax_powers: [f64; 4],
    pub argmax_noise: [f64; 4],
}

/// Draws `samples` configurations with every `P_i`, `N_i` log-uniform in
/// `[lo, hi]` and records the largest `R_outer − R_achievable`.
pub fn gap_audit(samples: u64, seed: u64, lo: f64, hi: f64) -> Result<GapAudit> {
    use rand::{Rng, SeedableRng};
    if samples == 0 || !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParameter("gap audit needs samples ≥ 1 and 0 < lo ≤ hi".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> [f64; 4] {
        std::array::from_fn(|_| if lhi > llo { rng.random_range(llo..lhi).exp() } else { lo })
    };
    let mut best: Option<(f64, [f64; 4], [f64; 4])> = None;
    for _ in 0..samples {
        let p = draw(&mut rng);
        let n = draw(&mut rng);
        let gap = optimize_truncated(&p, &n)?.gap;
        if best.is_none_or(|b| gap > b.0) {
            best = Some((gap, p, n));
        }
    }
    let (max_gap, argmax_powers, argmax_noise) = best.expect("samples ≥ 1");
    let bound = half_log3();
    Ok(GapAudit { samples, seed, max_gap, bound, holds: max_gap <= bound + SLACK, argmax_powers, argmax_noise })
}
