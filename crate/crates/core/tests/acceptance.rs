//! Acceptance run: one `criterion N: PASS|FAIL` line per criterion.
//!
//! Properties that must hold unconditionally (bounds, subset relations,
//! exact oracles) panic on violation. Targets that depend on reaching a
//! numeric goal at desk scale are reported as FAIL without aborting, so the
//! remaining criteria and test targets still run.

use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dslab::approx::ApproxFunction;
use dslab::assembly;
use dslab::block::{self, BlockConfig, Mode, Thresholds, DEFAULT_INTERVAL_BUDGET};
use dslab::cert::{self, Check};
use dslab::inhom;
use dslab::primes::{self, PrimePairTable};
use dslab::rat::{self, Rational};
use dslab::torus::{self, CenteredArcFamily};

const BUDGET: u128 = DEFAULT_INTERVAL_BUDGET;

struct Outcome {
    ok: bool,
    detail: String,
}

fn f8() -> ApproxFunction {
    ApproxFunction::parse("scaled:inv_bits:1/8").unwrap()
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| i + 1).collect())
        .collect()
}

fn arc_measure_law() -> Outcome {
    let gammas = [rat::int(0), rat::rat(1, 3), rat::frac(&rat::rat(7, 5)), rat::frac(&rat::rat(22, 7))];
    let epss = [rat::rat(1, 100), rat::rat(1, 7), rat::rat(1, 3), rat::rat(3, 5)];
    let cases: Vec<(u64, usize, usize)> =
        (1..=200).flat_map(|q| (0..4).flat_map(move |g| (0..4).map(move |e| (q, g, e)))).collect();
    let bad = cases
        .par_iter()
        .filter(|&&(q, g, e)| {
            let m = torus::approx_set(q, &gammas[g], &epss[e]).measure();
            m != rat::min(Rational::one(), rat::int(2) * &epss[e])
        })
        .count();
    assert_eq!(bad, 0, "arc measure law violated");
    Outcome { ok: true, detail: format!("{} cases exact", cases.len()) }
}

fn overlap_bound() -> Outcome {
    let table = PrimePairTable::for_pairs(4);
    let fs = [ApproxFunction::InvBits, f8()];
    let mut cases = Vec::new();
    for index in subsets(4) {
        let ys = table.enumerate_y(&index, primes::DEFAULT_Y_CAP).unwrap();
        for x in 1..=500u64 {
            let xb = BigUint::from(x);
            if ys.is_admissible(&xb) {
                for f in &fs {
                    cases.push((ys.clone(), xb.clone(), f.clone()));
                }
            }
        }
    }
    let failures = cases
        .par_iter()
        .filter(|(ys, x, f)| !block::overlap_verify(x, ys, f, BUDGET).unwrap().ok)
        .count();
    assert_eq!(failures, 0, "overlap bound violated");
    Outcome { ok: true, detail: format!("{} (I, x, f) cases, 0 failures", cases.len()) }
}

fn conjugate_counting() -> Outcome {
    let table = PrimePairTable::for_pairs(6);
    let jobs: Vec<(Vec<usize>, BigUint)> = subsets(6)
        .into_iter()
        .flat_map(|index| {
            let ys = table.enumerate_y(&index, primes::DEFAULT_Y_CAP).unwrap();
            ys.ys().cloned().map(|y| (index.clone(), y)).collect::<Vec<_>>()
        })
        .collect();
    let failures = jobs
        .par_iter()
        .filter(|(index, y)| {
            let ys = table.enumerate_y(index, primes::DEFAULT_Y_CAP).unwrap();
            !primes::survivor_count(&ys, y, 10_000_000).unwrap().ok
        })
        .count();
    assert_eq!(failures, 0, "survivor count above y·g_I(y)");
    let ys = table.enumerate_y(&[1, 2], primes::DEFAULT_Y_CAP).unwrap();
    let mut eq = Vec::new();
    for (y, want) in [(10u32, 10u64), (15, 10), (21, 12)] {
        let s = primes::survivor_count(&ys, &BigUint::from(y), 1000).unwrap();
        assert_eq!(s.count, want, "survivor count at y = {y}");
        assert_eq!(rat::int(s.count), s.bound, "equality at y = {y}");
        eq.push(format!("{y}→{}", s.count));
    }
    Outcome { ok: true, detail: format!("{} (I, y) pairs; equality {}", jobs.len(), eq.join(", ")) }
}

fn binomial_law() -> Outcome {
    let table = PrimePairTable::for_levels(4);
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for j in 1..=4 {
        sets.push(table.build_pairs(j, primes::DEFAULT_GAP_COEFF).unwrap());
        sets.push(table.build_index_set(j, 1, primes::DEFAULT_GAP_COEFF).unwrap());
    }
    sets.retain(|s| s.len() <= 16);
    sets.sort();
    sets.dedup();
    let mut largest = 0;
    for index in &sets {
        let ys = table.enumerate_y(index, primes::DEFAULT_Y_CAP).unwrap();
        for p in primes::xj_profile(&table, &ys).unwrap() {
            assert!(p.is_binomial(ys.len() as u64), "profile of {index:?} is not binomial");
        }
        largest = largest.max(index.len());
    }
    Outcome { ok: true, detail: format!("{} index sets, up to {largest} pairs, exact counts", sets.len()) }
}

fn small_cfg(index: Vec<usize>, xp: u64, b: u64) -> BlockConfig {
    BlockConfig {
        thresholds: Thresholds::Small { x_prime_min: Some(BigUint::from(xp)), b: Some(BigUint::from(b)) },
        ..BlockConfig::small(index, Mode::Empirical)
    }
}

/// Grid of small-parameter overrides; returns the certificate with the
/// smallest exact union measure.
fn block_scan() -> (block::BlockCertificate, usize) {
    let f = f8();
    let eps = rat::rat(1, 4);
    let mut grid = Vec::new();
    for index in [vec![], vec![1], vec![2], vec![1, 2], vec![1, 3], vec![2, 3]] {
        for xp in [1u64, 2, 12, 60] {
            for b in [1u64, 2] {
                grid.push((index.clone(), xp, b));
            }
        }
    }
    let built: Vec<block::BlockCertificate> = grid
        .par_iter()
        .filter_map(|(index, xp, b)| {
            block::build_block(&f, &eps, &BigUint::zero(), &small_cfg(index.clone(), *xp, *b)).ok()
        })
        .collect();
    assert!(!built.is_empty(), "no configuration built");
    let count = built.len();
    for c in &built {
        let (lo, hi) = &c.window;
        assert!(lo <= &c.params.mass && &c.params.mass <= hi, "mass outside [1,2]");
        let u = c.union_measure.as_ref().expect("empirical mode");
        assert!(u <= &c.overlap_sum, "union measure above overlap sum");
    }
    let best = built
        .into_iter()
        .min_by(|a, b| a.union_measure.cmp(&b.union_measure))
        .unwrap();
    (best, count)
}

fn block_construction() -> Outcome {
    let (best, count) = block_scan();
    let u = best.union_measure.clone().unwrap();
    Outcome {
        ok: u < best.eps,
        detail: format!(
            "{count} configurations in window with union ≤ overlap sum; best union {:.4} (I = {:?}, |S| = {}) vs ε = 1/4",
            rat::approx_f64(&u),
            best.ys.index_set,
            best.s_len()
        ),
    }
}

fn random_rational(rng: &mut ChaCha8Rng, den: i64) -> Rational {
    rat::rat(rng.gen_range(0..den), den)
}

fn dilation_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let n = rng.gen_range(1..6);
        let arcs = (0..n)
            .map(|_| {
                let den = rng.gen_range(2..60);
                (random_rational(&mut rng, den), rat::rat(rng.gen_range(0..20), rng.gen_range(40..400)))
            })
            .collect();
        let fam = CenteredArcFamily::new(arcs);
        let b = rng.gen_range(1..=10u64);
        let lhs = fam.dilate(b).normalize().measure();
        let rhs = rat::int(b) * fam.normalize().measure();
        assert!(lhs <= rhs, "dilation lemma violated for b = {b}: {fam:?}");
    }
    Outcome { ok: true, detail: "1000 families, 0 failures".into() }
}

fn inclusion_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    while done < 1000 {
        let q = rng.gen_range(1..40u64);
        let b = rng.gen_range(1..8u64);
        let eps = rat::rat(rng.gen_range(1..50), rng.gen_range(100..1000));
        // γ within ε/… of some j/b so that ‖bγ‖ ≤ bε.
        let j = rng.gen_range(0..b as i64);
        let off = &eps * rat::rat(rng.gen_range(-100..=100), 100);
        let gamma = rat::frac(&(rat::rat(j, b as i64) + off));
        match inhom::inclusion_holds(q, b, &gamma, &eps) {
            Ok(ok) => {
                assert!(ok, "inclusion fails: q={q} b={b} γ={} ε={}", rat::fmt(&gamma), rat::fmt(&eps));
                done += 1;
            }
            Err(e) => panic!("generated an invalid instance: {e}"),
        }
    }
    Outcome { ok: true, detail: "1000 instances, 0 failures".into() }
}

fn inhom_certs() -> Vec<inhom::InhomBlockCertificate> {
    let cfg = small_cfg(vec![1, 2], 1, 1);
    [(2u32, 25u64), (3, 17)]
        .iter()
        .map(|&(b, per)| {
            let mut c = inhom::build_inhom_block(&f8(), &rat::rat(1, 4), &BigUint::zero(), &BigUint::from(b), &cfg)
                .unwrap();
            c.samples = inhom::verify_inhom_block(&c, &c.window.samples(per), BUDGET).unwrap();
            c
        })
        .collect()
}

fn inhom_block() -> Outcome {
    let certs = inhom_certs();
    let mut ok = true;
    let mut parts = Vec::new();
    for c in &certs {
        assert!(c.samples.len() >= 100);
        let max = c.samples.iter().map(|s| s.measure.clone()).max().unwrap();
        let pass = c.samples.iter().filter(|s| s.ok).count();
        ok &= pass == c.samples.len();
        parts.push(format!(
            "b = {}: {}/{} samples below ε, max λ {:.4}",
            c.window.b,
            pass,
            c.samples.len(),
            rat::approx_f64(&max)
        ));
    }
    Outcome { ok, detail: format!("{} (ε = 1/4)", parts.join("; ")) }
}

fn psi_cert() -> assembly::PsiFunction {
    let f = ApproxFunction::parse("power:1:1").unwrap();
    assembly::build_thm_c(&f, 3, &assembly::thm_c_default_config()).unwrap()
}

fn thm_c() -> Outcome {
    let psi = psi_cert();
    let (report, checks) = assembly::verify_psi(&psi, &psi.f, &[]).unwrap();
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.ok).collect();
    Outcome {
        ok: failed.is_empty(),
        detail: format!(
            "{} checks, {} failed; Q = {:?}; {} density checkpoints",
            checks.len(),
            failed.len(),
            psi.blocks.iter().map(|b| b.q.to_string()).collect::<Vec<_>>(),
            report.checkpoints.len()
        ),
    }
}

fn tower_cert() -> inhom::Tower {
    let cfg = BlockConfig::small(vec![1], Mode::Certificate);
    inhom::build_tower(&f8(), 3, &cfg, inhom::DEFAULT_G_BUDGET).unwrap()
}

fn tower() -> Outcome {
    let t = tower_cert();
    let checks = t.checks();
    let divides = t.levels.windows(2).all(|w| inhom::divides(&w[0].b, &w[1].b));
    let members = t.witnesses.iter().all(|w| w.memberships.iter().all(|&m| m));
    let zero = t.witnesses.iter().any(|w| w.gamma.is_zero());
    Outcome {
        ok: cert::all_ok(&checks) && divides && members && zero,
        detail: format!(
            "G = {:?}, nested counts {:?}, {} witnesses in all windows",
            t.levels.iter().map(|l| l.g).collect::<Vec<_>>(),
            t.levels.iter().filter_map(|l| l.nested).collect::<Vec<_>>(),
            t.witnesses.len()
        ),
    }
}

/// Every certificate file the criteria produce, serialized.
fn certificate_bytes() -> Vec<(String, String)> {
    let mut out = Vec::new();
    let (best, _) = block_scan();
    out.push(("block".into(), best.to_record().to_text()));
    for c in inhom_certs() {
        out.push((format!("inhom-b{}", c.window.b), c.to_record().to_text()));
    }
    out.push(("psi".into(), psi_cert().to_record().to_text()));
    out.push(("tower".into(), tower_cert().to_record().to_text()));
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for threads in [1usize, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let certs = pool.install(certificate_bytes);
        let mut files = Vec::new();
        for (name, text) in certs {
            let path = dir.path().join(format!("{name}-t{threads}.cert"));
            cert::write_atomic(&path, &text).unwrap();
            files.push((name, std::fs::read(&path).unwrap()));
        }
        runs.push(files);
    }
    let same = runs[0] == runs[1];
    Outcome {
        ok: same,
        detail: format!("{} certificate files compared across 1 and 4 threads", runs[0].len()),
    }
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 11] = [
        (1, arc_measure_law),
        (2, overlap_bound),
        (3, conjugate_counting),
        (4, binomial_law),
        (5, block_construction),
        (6, dilation_lemma),
        (7, inclusion_lemma),
        (8, inhom_block),
        (9, thm_c),
        (10, tower),
        (11, determinism),
    ];
    let mut passed = 0;
    for (n, run) in criteria {
        let start = Instant::now();
        let o = run();
        passed += o.ok as u32;
        println!(
            "criterion {n}: {} ({:.1}s) {}",
            if o.ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {passed}/11 criteria pass");
}
