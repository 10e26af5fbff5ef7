//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use latticeway::field::{
    combine_messages, lattice_combination, lattice_combination_to_message, phi, phi_inverse, solve_coefficient,
    uniformity_census, CombinationKey, FieldElement, MessageSlot, Stream, DEFAULT_ENUMERATION_BOUND,
};
use latticeway::lattice::{in_codebook, mod_point, scale_identity_check, second_moment, CodePoint, LatticeSpec};
use latticeway::netsim::{plan_protocol, run_half_duplex, run_two_relay, Duplex, NetworkConfig, SimulationResult};
use latticeway::rates::{gap_audit, half_log3, optimize_truncated, truncate_powers, SLACK};
use latticeway::rational::{self, int, ratio, Rational};
use latticeway::scheme::{encode, redistribution_steps, DecodedCombination, SumDecoder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fe(w: u64, p: u64) -> FieldElement {
    FieldElement::new(w, p).unwrap()
}

fn golden_transform_trace() -> Outcome {
    let spec = LatticeSpec::scalar(5, int(5)).map_err(|e| e.to_string())?;
    let (theta, big) = (ratio(1, 2), int(1));
    let dec = SumDecoder::new(2, &theta, &spec).map_err(|e| e.to_string())?;
    let mut got: Vec<Rational> = dec.candidates().iter().map(|c| *c.scale() * int(c.coords()[0])).collect();
    got.sort();
    let want: Vec<Rational> = (-4..=5).map(|k| ratio(k, 2)).collect();
    ensure!(got == want, "candidates {got:?}");
    let mut hits: BTreeMap<Rational, u32> = BTreeMap::new();
    for wa in 0..5 {
        for wb in 0..5 {
            let ta = encode(fe(wa, 5), &big, &spec).unwrap();
            let tb = encode(fe(wb, 5), &theta, &spec).unwrap();
            let y: Vec<f64> = ta.to_real().iter().zip(tb.to_real()).map(|(a, b)| a + b).collect();
            let d = dec.decode(&y).map_err(|e| e.to_string())?;
            let s = redistribution_steps(&d, 2, &int(1), &spec).map_err(|e| e.to_string())?;
            *hits.entry(*s.output.scale() * int(s.output.coords()[0] as i64)).or_default() += 1;
        }
    }
    let want: BTreeMap<Rational, u32> = (-2..=2).map(|k| (int(k), 5)).collect();
    ensure!(hits == want, "outputs {hits:?}");
    Ok("10 candidates, outputs {-2..2} x5".into())
}

/// Centred residues of `Σ c_i G·w_i`, straight from the generator.
fn oracle_coords(spec: &LatticeSpec, coefs: &[i64], msgs: &[u64]) -> Vec<i64> {
    let p = spec.prime() as i64;
    spec.generator()
        .iter()
        .map(|&g| {
            let r = coefs.iter().zip(msgs).map(|(&c, &w)| c * g as i64 * w as i64).sum::<i64>().rem_euclid(p);
            if 2 * r > p {
                r - p
            } else {
                r
            }
        })
        .collect()
}

fn exhaustive_field_audit() -> Outcome {
    let mut cases = 0u64;
    for p in [5u64, 7] {
        for n in 1..=3 {
            let spec = LatticeSpec::new(p, int(p as i64), LatticeSpec::default_generator(n, p)).unwrap();
            let theta = int(1);
            let step = spec.fine_step(&theta);
            // bijection between F_p and the codebook
            let mut seen = std::collections::BTreeSet::new();
            for w in 0..p {
                let t = phi(fe(w, p), &theta, &spec).unwrap();
                ensure!(in_codebook(&t, &theta, &spec), "phi({w}) outside codebook");
                ensure!(phi_inverse(&t, &theta, &spec).unwrap() == fe(w, p), "phi round trip p={p} n={n} w={w}");
                seen.insert(t.rescaled(&step).unwrap().coords().to_vec());
            }
            ensure!(seen.len() as u64 == p, "phi not injective p={p} n={n}");
            for c1 in 1..p as i64 {
                // coefficient invertibility
                for w in 0..p {
                    ensure!(solve_coefficient(fe(w, p).scale(c1), c1).unwrap() == fe(w, p), "inverse c={c1} p={p}");
                }
                for c2 in 1..p as i64 {
                    let key = CombinationKey::from_coefficients(&[c1, c2]);
                    for w1 in 0..p {
                        for w2 in 0..p {
                            let msgs = [fe(w1, p), fe(w2, p)];
                            let v = lattice_combination(&key, &msgs, &theta, &spec).unwrap();
                            let want = oracle_coords(&spec, &[c1, c2], &[w1, w2]);
                            ensure!(v.rescaled(&step).unwrap().coords() == want.as_slice(), "lattice sum {c1},{c2}");
                            let u = lattice_combination_to_message(&v, &theta, &spec).unwrap();
                            ensure!(u == combine_messages(&key, &msgs).unwrap(), "field map {c1},{c2}");
                            ensure!(u.value() == (c1 as u64 * w1 + c2 as u64 * w2) % p, "field value {c1},{c2}");
                        }
                    }
                    let census = uniformity_census(&key, &theta, &spec, DEFAULT_ENUMERATION_BOUND).unwrap();
                    ensure!(census.counts.len() as u64 == p, "census support p={p}");
                    ensure!(census.counts.iter().all(|(_, c)| *c == p), "non-uniform p={p} n={n} c=({c1},{c2})");
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} coefficient pairs, zero exceptions"))
}

fn scale_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let primes = [2u64, 3, 5, 7, 11, 13];
    for case in 0..100_000 {
        let p = primes[rng.random_range(0..primes.len())];
        let n = rng.random_range(1..=6);
        let a = ratio(rng.random_range(1..=30), rng.random_range(1..=12));
        let g: Vec<u64> = (0..n).map(|_| rng.random_range(0..p)).collect();
        let Ok(spec) = LatticeSpec::new(p, a, g) else { continue };
        let coords: Vec<i64> = (0..n).map(|_| rng.random_range(-10_000..=10_000)).collect();
        let s = CodePoint::new(coords, ratio(rng.random_range(1..=20), rng.random_range(1..=20))).unwrap();
        let alpha = rng.random_range(-60..=60);
        let beta = ratio(rng.random_range(1..=40), rng.random_range(1..=40));
        ensure!(scale_identity_check(&s, alpha, &beta, &spec), "case {case}: s={s:?} alpha={alpha} beta={beta}");
    }
    Ok("100000 cases".into())
}

fn network(p: &[f64], duplex: Duplex) -> NetworkConfig {
    NetworkConfig::new(p.to_vec(), vec![0.0; p.len()], duplex).unwrap()
}

/// Node 2's combination in block `i`: `a_i + N b_{i−1} + NM a_{i−2} + N²M b_{i−3} + …` over F_p.
fn closed_form(i: usize, n: i64, m: i64, p: i64) -> CombinationKey {
    let mut terms = Vec::new();
    for k in 0..i {
        let block = i - k;
        let (coef, slot) = if k % 2 == 0 {
            ((n * m).pow(k as u32 / 2), MessageSlot::a(block))
        } else {
            (n.pow((k as u32).div_ceil(2)) * m.pow((k as u32 - 1) / 2), MessageSlot::b(block))
        };
        if coef.rem_euclid(p) != 0 {
            terms.push((coef.rem_euclid(p), slot));
        }
    }
    terms.sort_by_key(|&(_, s)| (std::cmp::Reverse(s.block), s.stream));
    CombinationKey::new(terms)
}

fn recovered(r: &SimulationResult) -> Vec<(usize, MessageSlot, u64)> {
    r.trace
        .iter()
        .flat_map(|s| {
            s.decodes
                .iter()
                .enumerate()
                .filter_map(move |(i, d)| d.as_ref()?.recovered.map(|(slot, w, _)| (i, slot, w.value())))
        })
        .collect()
}

fn noiseless_two_relay() -> Outcome {
    let cfg = network(&[1.0, 4.0, 4.0, 1.0], Duplex::Full);
    let plan = plan_protocol(&cfg, 1.0, 2, 10).map_err(|e| e.to_string())?;
    let (n, m, p) = (plan.n_ratio() as i64, plan.m_ratio() as i64, plan.prime() as i64);
    let r = run_two_relay(&plan, &cfg, 0).map_err(|e| e.to_string())?;
    ensure!((r.delivered_a, r.delivered_b) == (8, 8), "delivered ({}, {})", r.delivered_a, r.delivered_b);
    ensure!(r.message_errors() == 0, "{} message errors", r.message_errors());
    for state in &r.trace {
        let d = state.decodes[1].as_ref().ok_or("relay idle")?;
        let want = closed_form(state.block, n, m, p);
        ensure!(d.key == want, "block {}: {} != {}", state.block, d.key, want);
        let msgs = |slot: MessageSlot| {
            let s = &r.trace[slot.block - 1];
            Some(match slot.stream {
                Stream::A => s.message_a,
                Stream::B => s.message_b,
            })
        };
        let value =
            d.combination.as_ref().ok_or("no combination")?.to_message(&plan.spec).map_err(|e| e.to_string())?;
        ensure!(Some(value) == want.evaluate(p as u64, msgs), "block {} value", state.block);
    }
    Ok(format!("8/8 each way, N={n} M={m}, 10 relay keys match"))
}

fn mirrored_layout_equivalence() -> Outcome {
    let t = network(&[1.0, 4.0, 4.0, 1.0], Duplex::Full);
    let l = network(&[4.0, 1.0, 1.0, 4.0], Duplex::Full);
    let pt = plan_protocol(&t, 1.0, 2, 10).map_err(|e| e.to_string())?;
    let pl = plan_protocol(&l, 1.0, 2, 10).map_err(|e| e.to_string())?;
    for seed in 0..5 {
        let rt = run_two_relay(&pt, &t, seed).map_err(|e| e.to_string())?;
        let rl = run_two_relay(&pl, &l, seed).map_err(|e| e.to_string())?;
        ensure!((rl.delivered_a, rl.delivered_b) == (rt.delivered_a, rt.delivered_b), "delivery differs, seed {seed}");
        ensure!(recovered(&rt) == recovered(&rl), "recovered messages differ, seed {seed}");
    }
    Ok("identical deliveries over 5 seeds".into())
}

fn half_duplex() -> Outcome {
    let blocks = 40;
    let full = network(&[1.0, 4.0, 4.0, 1.0], Duplex::Full);
    let half = network(&[1.0, 4.0, 4.0, 1.0], Duplex::Half);
    let plan = plan_protocol(&full, 1.0, 2, blocks).map_err(|e| e.to_string())?;
    let rf = run_two_relay(&plan, &full, 5).map_err(|e| e.to_string())?;
    let rh = run_half_duplex(&plan, &half, 5).map_err(|e| e.to_string())?;
    let diff = (rh.throughput - 0.5 * rf.throughput).abs();
    ensure!(diff <= 1.0 / blocks as f64, "half {} full {}", rh.throughput, rf.throughput);
    Ok(format!("half {} vs full {} (|diff| = {diff})", rh.throughput, rf.throughput))
}

fn gap_certificate() -> Outcome {
    let audit = gap_audit(10_000, 2011, 1e-2, 1e2).map_err(|e| e.to_string())?;
    // the audit's own arithmetic, re-derived at its worst point
    let r = optimize_truncated(&audit.argmax_powers, &audit.argmax_noise).map_err(|e| e.to_string())?;
    ensure!((r.gap - audit.max_gap).abs() < 1e-12, "audit argmax does not reproduce");
    ensure!(audit.max_gap <= half_log3() + SLACK, "max gap {}", audit.max_gap);
    Ok(format!("max gap {:.6} <= {:.6}", audit.max_gap, half_log3()))
}

fn power_truncation_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draw = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(-2.0..2.0));
    for _ in 0..100_000 {
        let (p1, p3) = (draw(&mut rng), draw(&mut rng));
        let t = truncate_powers(p1, p3).map_err(|e| e.to_string())?;
        ensure!(2.0 * t.p1 >= p1 && 2.0 * t.p3 >= p3, "({p1}, {p3}) -> ({}, {})", t.p1, t.p3);
        ensure!(t.p1 <= p1 && t.p3 <= p3, "({p1}, {p3}) boosted");
    }
    let t = truncate_powers(1.0, 3.6).map_err(|e| e.to_string())?;
    ensure!(t.p1 == 0.9 && t.p3 == 3.6, "worked point gives ({}, {})", t.p1, t.p3);
    Ok("100000 pairs; (1, 3.6) -> (0.9, 3.6)".into())
}

/// `(αθ t_a + θ t_b) mod αθΛ` on exact points.
fn exact_sum(wa: u64, wb: u64, alpha: i64, theta: &Rational, spec: &LatticeSpec) -> DecodedCombination {
    let p = spec.prime();
    let big = *theta * int(alpha);
    let x = encode(fe(wa, p), &big, spec).unwrap().checked_add(&encode(fe(wb, p), theta, spec).unwrap()).unwrap();
    let point = mod_point(&x, &big, spec).unwrap().rescaled(&spec.fine_step(theta)).unwrap();
    DecodedCombination::new(point, *theta, big).unwrap()
}

fn noise_robustness() -> Outcome {
    let (p, n, alpha, trials) = (5u64, 8usize, 2i64, 10_000u64);
    let spec = LatticeSpec::new(p, int(p as i64), LatticeSpec::default_generator(n, p)).unwrap();
    let theta = int(1);
    let big = int(alpha);
    let dec = SumDecoder::new(alpha, &theta, &spec).map_err(|e| e.to_string())?;
    let sigma2 = rational::to_f64(&second_moment(&theta, &spec).unwrap());
    let rate = (p as f64).log2() / n as f64;
    let threshold = 2f64.powf(2.0 * rate);
    let mut rates = Vec::new();
    // decreasing noise: 0, 3, 6 dB above the threshold ratio
    for (k, margin) in [0.0, 3.0, 6.0f64].iter().enumerate() {
        let var = sigma2 / (threshold * 10f64.powf(margin / 10.0));
        let noise = Normal::new(0.0, var.sqrt()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(90 + k as u64);
        let mut errors = 0u64;
        for _ in 0..trials {
            let (wa, wb) = (rng.random_range(0..p), rng.random_range(0..p));
            let xa = encode(fe(wa, p), &big, &spec).unwrap().to_real();
            let xb = encode(fe(wb, p), &theta, &spec).unwrap().to_real();
            let y: Vec<f64> = xa.iter().zip(&xb).map(|(a, b)| a + b + noise.sample(&mut rng)).collect();
            if dec.decode(&y).unwrap() != exact_sum(wa, wb, alpha, &theta, &spec) {
                errors += 1;
            }
        }
        rates.push(errors as f64 / trials as f64);
    }
    let sd = |r: f64| (r * (1.0 - r) / trials as f64).sqrt();
    for w in rates.windows(2) {
        ensure!(w[1] <= w[0] + 2.0 * (sd(w[0]) + sd(w[1])), "not monotone: {rates:?}");
    }
    ensure!(rates[2] < 0.10, "error at 6 dB margin {} (rates at 0/3/6 dB {rates:?})", rates[2]);
    Ok(format!("block error at 0/3/6 dB: {rates:?}"))
}

fn run_cli(args: &[&str], dir: &std::path::Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_latticeway"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    let mut bytes = out.stdout;
    for f in ["out.json", "trace.csv"] {
        if let Ok(b) = std::fs::read(dir.join(f)) {
            bytes.extend(b);
            std::fs::remove_file(dir.join(f)).map_err(|e| e.to_string())?;
        }
    }
    Ok(bytes)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let chain_cfg = dir.path().join("chain.json");
    std::fs::write(&chain_cfg, r#"{"network":{"powers":[1,4,4,1,1],"noise":[0.05,0.05,0.05,0.05,0.05]}}"#)
        .map_err(|e| e.to_string())?;
    let chain_cfg = chain_cfg.to_str().unwrap().to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["rates"],
        vec!["rates", "--format", "csv"],
        vec!["gap-check", "--trials", "300", "--seed", "4"],
        vec!["gap-check", "--trials", "300", "--format", "csv"],
        vec!["simulate", "--noise", "0.05", "--blocks", "12", "--seed", "9", "--trace", "trace.csv"],
        vec!["simulate", "--noise", "0.2", "--trials", "40", "--seed", "9", "--out", "out.json"],
        vec!["simulate", "--noise", "0.2", "--trials", "40", "--format", "csv"],
        vec!["transform-demo"],
        vec!["transform-demo", "--format", "csv"],
        vec!["chain", "--config", &chain_cfg, "--blocks", "12", "--seed", "2"],
        vec!["chain", "--config", &chain_cfg, "--trials", "20", "--format", "csv"],
    ];
    for args in &runs {
        let a = run_cli(args, dir.path())?;
        let b = run_cli(args, dir.path())?;
        ensure!(!a.is_empty(), "{args:?} produced nothing");
        ensure!(a == b, "{args:?} differs between runs");
    }
    Ok(format!("{} invocations byte-identical", runs.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 golden transform trace", golden_transform_trace, Some(Duration::from_secs(1))),
        ("2 exhaustive field and lattice audit", exhaustive_field_audit, Some(Duration::from_secs(30))),
        ("3 scaling identity suite", scale_identities, None),
        ("4 noiseless two-relay run", noiseless_two_relay, Some(Duration::from_secs(5))),
        ("5 mirrored layout equivalence", mirrored_layout_equivalence, None),
        ("6 half duplex throughput", half_duplex, None),
        ("7 gap certificate", gap_certificate, Some(Duration::from_secs(60))),
        ("8 power truncation", power_truncation_bound, None),
        ("9 noise robustness", noise_robustness, None),
        ("10 cli determinism", determinism, None),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(_), Some(b)) if took > b => Err(format!("took {took:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  criterion {name} [{took:.2?}] {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name} [{took:.2?}] {why}");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
