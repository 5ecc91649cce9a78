//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities. Tolerances are pinned in the assertions.
//!
//! Run with `cargo test -p lci-core --test acceptance -- --nocapture`.

use num_rational::BigRational;

use lci_core::analysis::{
    blocks_analysis, classify_case, AnalysisReport, CaseConstants, CaseTag,
};
use lci_core::exact::{
    compositions, lc_blocks_length, lci_bruteforce, lci_length, BlockOrder, Composition,
};
use lci_core::harness::{ks_critical_value, ks_two_sample, simulate_zn};
use lci_core::mfunc::{m_closed, m_lp_oracle, Perturbation};
use lci_core::model::{sample_word, Instance, Pmf, RngConfig, Word};
use lci_core::sampler::{sample_limit, sample_limit_blocks, LimitParams};
use lci_core::scalar::parse_rational;
use lci_core::exact::composition_value;

fn rat(s: &str) -> BigRational {
    parse_rational(s).unwrap()
}

fn exact_instance(px: &[&str], py: &[&str]) -> Instance {
    let to = |v: &[&str]| Pmf::from_rationals(v.iter().map(|s| rat(s)).collect()).unwrap();
    Instance::new(to(px), to(py)).unwrap()
}

fn xorshift(state: &mut u64) -> u64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    *state
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn acceptance_01_exact_analysis_values() {
    // case a
    let rep = classify_case(&exact_instance(
        &["3/8", "3/8", "1/4"],
        &["1/2", "3/8", "1/8"],
    ))
    .unwrap();
    let a = rep.exact().unwrap();
    assert_eq!(a.case, CaseTag::CaseA);
    assert_eq!(a.e_max, rat("3/8"));
    assert_eq!(a.active, vec![0, 1]);

    // case b1
    let rep = classify_case(&exact_instance(
        &["1/3", "1/3", "2/9", "1/9"],
        &["1/3", "1/3", "1/9", "2/9"],
    ))
    .unwrap();
    let b1 = rep.exact().unwrap();
    assert_eq!(b1.case, CaseTag::CaseB1);
    assert_eq!(b1.e_max, rat("1/3"));

    // case b2 with the span pair
    let rep = classify_case(&exact_instance(
        &["2/3", "1/6", "1/6"],
        &["1/6", "2/3", "1/6"],
    ))
    .unwrap();
    let b2 = rep.exact().unwrap();
    assert_eq!(b2.case, CaseTag::CaseB2);
    assert_eq!(b2.e_max, rat("4/15"));
    match &b2.constants {
        CaseConstants::B2 { s, t } => {
            assert_eq!(*s, rat("2/15"));
            assert_eq!(*t, rat("2/15"));
        }
        other => panic!("wrong constants {other:?}"),
    }
    println!("ACCEPTANCE 1 PASS: exact analysis values (3/8 a, 1/3 b1, 4/15 b2 with s=t=2/15)");
}

#[test]
fn acceptance_02_m2_cornering() {
    // corrected pairing of the two-letter closed forms: a straddled half
    // yields case b2 with the product form; otherwise unequal first masses
    // yield case a (verified against the criterion and by direct LP in the
    // analysis layer's tests)
    let mut state = 0xc0ffee_u64;
    let mut by_case = [0usize; 3];
    let mut check = |inst: &Instance| {
        let (qx, qy) = inst.masses_exact().unwrap();
        let (px1, py1) = (qx[0].clone(), qy[0].clone());
        let half = rat("1/2");
        let one = rat("1");
        let rep = classify_case(inst).unwrap();
        let a = rep.exact().unwrap();
        if px1 == py1 {
            assert_eq!(a.case, CaseTag::CaseB1);
            let want = px1.clone().max(one - px1);
            assert_eq!(a.e_max, want);
            by_case[0] += 1;
        } else {
            let lo = px1.clone().min(py1.clone());
            let hi = px1.clone().max(py1.clone());
            if lo < half && half < hi {
                assert_eq!(a.case, CaseTag::CaseB2);
                let want = px1.clone() * py1.clone()
                    + (one.clone() - px1) * (one - py1);
                assert_eq!(a.e_max, want);
                by_case[2] += 1;
            } else {
                assert!(a.case == CaseTag::CaseA || a.case == CaseTag::CaseASymmetric);
                let m1 = px1.clone().min(py1.clone());
                let m2 = (one.clone() - px1).min(one - py1);
                assert_eq!(a.e_max, m1.max(m2));
                by_case[1] += 1;
            }
        }
    };
    for _ in 0..500 {
        let wx = 1 + xorshift(&mut state) % 999;
        let wy = 1 + xorshift(&mut state) % 999;
        let inst = exact_instance(
            &[&format!("{wx}/1000"), &format!("{}/1000", 1000 - wx)],
            &[&format!("{wy}/1000"), &format!("{}/1000", 1000 - wy)],
        );
        check(&inst);
    }
    // boundary and tie cases
    for (px, py) in [
        (["1/2", "1/2"], ["7/10", "3/10"]),
        (["7/10", "3/10"], ["1/2", "1/2"]),
        (["3/10", "7/10"], ["3/10", "7/10"]),
        (["1/2", "1/2"], ["1/2", "1/2"]),
    ] {
        check(&exact_instance(&px, &py));
    }
    assert!(by_case[1] > 0 && by_case[2] > 0, "rule branches unexercised: {by_case:?}");
    println!(
        "ACCEPTANCE 2 PASS: 504 two-letter instances match the closed forms exactly \
         (b1/a/b2 counts {by_case:?})"
    );
}

#[test]
fn acceptance_03_dp_oracles() {
    let mut state = 0xdead_beef_u64;
    let mut random_word = |m: usize, n: usize| -> Word {
        let weights: Vec<u64> = (0..m).map(|_| 1 + xorshift(&mut state) % 9).collect();
        let p = Pmf::from_weights(&weights).unwrap();
        sample_word(&p, n, &RngConfig::new(xorshift(&mut state), 0))
    };
    for it in 0..500 {
        let m = 2 + (it % 2);
        let n = 1 + (it % 8);
        let (x, y) = (random_word(m, n), random_word(m, n));
        assert_eq!(
            lci_length(&x, &y).unwrap(),
            lci_bruteforce(&x, &y).unwrap(),
            "x={x} y={y}"
        );
    }
    for it in 0..100 {
        let n = 4 + (it % 5);
        let (x, y) = (random_word(3, n), random_word(3, n));
        let dp = lci_length(&x, &y).unwrap();
        let mut best = 0;
        for lx in compositions(x.len(), 3) {
            for ly in compositions(y.len(), 3) {
                best = best.max(
                    composition_value(
                        &x,
                        &y,
                        &Composition::new(lx.clone()),
                        &Composition::new(ly),
                    )
                    .unwrap(),
                );
            }
        }
        assert_eq!(best, dp, "x={x} y={y}");
    }
    println!("ACCEPTANCE 3 PASS: DP == brute force on 500 pairs; split-point max == DP on 100 pairs");
}

#[test]
fn acceptance_04_m_functional_oracle() {
    let b1 = classify_case(&exact_instance(
        &["1/3", "1/3", "2/9", "1/9"],
        &["1/3", "1/3", "1/9", "2/9"],
    ))
    .unwrap()
    .to_f64();
    let b2 = classify_case(&exact_instance(
        &["2/3", "1/6", "1/6"],
        &["1/6", "2/3", "1/6"],
    ))
    .unwrap()
    .to_f64();
    let mut state = 0xabcdef_u64;
    let mut worst = 0.0f64;
    for an in [&b1, &b2] {
        for _ in 0..1000 {
            let l = an.len();
            let mut nu_x = vec![0.0; l];
            let mut nu_y = vec![0.0; l];
            for &i in &an.active {
                nu_x[i] = (xorshift(&mut state) % 2001) as f64 / 1000.0 - 1.0;
                nu_y[i] = (xorshift(&mut state) % 2001) as f64 / 1000.0 - 1.0;
            }
            let nu = Perturbation::new(nu_x, nu_y, an).unwrap();
            let closed = m_closed(an, &nu).unwrap();
            let oracle = m_lp_oracle(an, &nu).unwrap();
            let gap = (closed - oracle).abs();
            worst = worst.max(gap);
            assert!(gap <= 1e-8, "case {:?}: closed {closed} oracle {oracle}", an.case);
        }
    }
    println!("ACCEPTANCE 4 PASS: |m_closed - m_lp_oracle| <= 1e-8 on 2000 draws (worst {worst:.2e})");
}

#[test]
fn acceptance_05_single_letter_limit_mean() {
    let inst = Instance::from_json_str(r#"{"pX": [0.6, 0.4], "pY": [0.6, 0.4]}"#).unwrap();
    let rep = classify_case(&inst).unwrap();
    let an = rep.to_f64();
    let want = -(0.24f64).sqrt() / std::f64::consts::PI.sqrt();

    let reps = 100_000;
    let set = sample_limit(&an, &LimitParams::default(), reps, &RngConfig::new(1001, 0)).unwrap();
    let m1 = mean(&set.samples);
    let se1 = sd(&set.samples) / (reps as f64).sqrt();
    assert!((m1 - want).abs() <= 3.0 * se1, "limit mean {m1} want {want} se {se1}");

    let n = 20_000;
    let zreps = 2000;
    let z = simulate_zn(&inst, an.e_max, n, zreps, &RngConfig::new(1002, 0)).unwrap();
    let m2 = mean(&z.samples);
    let se2 = sd(&z.samples) / (zreps as f64).sqrt();
    assert!((m2 - want).abs() <= 3.0 * se2, "Z_n mean {m2} want {want} se {se2}");
    println!(
        "ACCEPTANCE 5 PASS: limit mean {m1:.5} and Z_20000 mean {m2:.5} within 3 SE of {want:.5}"
    );
}

#[test]
fn acceptance_06_block_gaussian_std() {
    let inst = exact_instance(&["1/3", "2/3"], &["1/4", "3/4"]);
    let alpha = BlockOrder::new(vec![1, 2], 2).unwrap();
    let an = blocks_analysis(&inst, &alpha).unwrap().to_f64();
    assert_eq!(an.case, CaseTag::CaseA);
    let reps = 100_000;
    let set =
        sample_limit_blocks(&an, &LimitParams::default(), reps, &RngConfig::new(2001, 0)).unwrap();
    let want = 2.0f64.sqrt() / 3.0;
    let got = sd(&set.samples);
    assert!((got - want).abs() / want <= 0.03, "std {got} want {want}");
    println!("ACCEPTANCE 6 PASS: block limit std {got:.5} within 3% of sqrt(2)/3 = {want:.5}");
}

#[test]
fn acceptance_07_distributional_convergence() {
    let inst = Instance::from_json_str(r#"{"pX": [0.5, 0.5], "pY": [0.5, 0.5]}"#).unwrap();
    let rep = classify_case(&inst).unwrap();
    let an = rep.to_f64();
    // local refinement removes the lambda-grid bias of the maximization,
    // which would otherwise dominate the comparison at these tolerances
    let params = LimitParams { path_steps: 4096, grid_r: 64, refine: true };
    let limit = sample_limit(&an, &params, 10_000, &RngConfig::new(3001, 0)).unwrap();

    let z_far = simulate_zn(&inst, an.e_max, 500, 2000, &RngConfig::new(3002, 0)).unwrap();
    let z_near = simulate_zn(&inst, an.e_max, 20_000, 2000, &RngConfig::new(3003, 0)).unwrap();
    let d_far = ks_two_sample(&z_far.samples, &limit.samples).unwrap().statistic;
    let d_near = ks_two_sample(&z_near.samples, &limit.samples).unwrap().statistic;
    assert!(d_near <= 0.08, "KS at n=20000 is {d_near}");
    assert!(d_near < d_far, "KS did not shrink: {d_near} vs {d_far}");
    println!("ACCEPTANCE 7 PASS: KS(n=20000) = {d_near:.4} <= 0.08 and < KS(n=500) = {d_far:.4}");
}

#[test]
fn acceptance_08_block_invariance() {
    let mut state = 0xb10cb10c_u64;
    for it in 0..50u64 {
        let m = 2 + (it % 3) as usize;
        let weights = |state: &mut u64| -> Vec<u64> {
            (0..m).map(|_| 1 + xorshift(state) % 50).collect()
        };
        let inst = Instance::new(
            Pmf::from_weights(&weights(&mut state)).unwrap(),
            Pmf::from_weights(&weights(&mut state)).unwrap(),
        )
        .unwrap();
        let extra = (xorshift(&mut state) % 4) as usize;
        let mut alpha: Vec<u8> = (1..=m as u8).collect();
        for _ in 0..extra {
            alpha.push(1 + (xorshift(&mut state) % m as u64) as u8);
        }
        for i in (1..alpha.len()).rev() {
            let j = (xorshift(&mut state) % (i as u64 + 1)) as usize;
            alpha.swap(i, j);
        }
        let order = BlockOrder::new(alpha, m).unwrap();
        // blocks_analysis itself asserts e_max^alpha == e_max and the
        // preimage identity; verify the value equality once more here
        let plain = classify_case(&inst).unwrap();
        let blocked = blocks_analysis(&inst, &order).unwrap();
        assert_eq!(plain.exact().unwrap().e_max, blocked.exact().unwrap().e_max);
    }

    let mut random_word = |m: usize, n: usize, s: &mut u64| -> Word {
        let weights: Vec<u64> = (0..m).map(|_| 1 + xorshift(s) % 9).collect();
        let p = Pmf::from_weights(&weights).unwrap();
        sample_word(&p, n, &RngConfig::new(xorshift(s), 0))
    };
    for it in 0..200u64 {
        let m = 2 + (it % 3) as usize;
        let n = 5 + (it % 26) as usize;
        let x = random_word(m, n, &mut state);
        let y = random_word(m, n, &mut state);
        assert_eq!(
            lc_blocks_length(&x, &y, &BlockOrder::identity(m)).unwrap(),
            lci_length(&x, &y).unwrap(),
            "x={x} y={y}"
        );
    }
    println!("ACCEPTANCE 8 PASS: e_max preserved on 50 block orders; identity blocks == LCI on 200 pairs");
}

#[test]
fn acceptance_09_permutation_invariance() {
    let inst = exact_instance(&["1/2", "1/2"], &["1/2", "1/2"]);
    let params = LimitParams { path_steps: 4096, grid_r: 64, refine: false };
    let reps = 10_000;
    let a12 = blocks_analysis(&inst, &BlockOrder::new(vec![1, 2], 2).unwrap())
        .unwrap()
        .to_f64();
    let a21 = blocks_analysis(&inst, &BlockOrder::new(vec![2, 1], 2).unwrap())
        .unwrap()
        .to_f64();
    let s12 = sample_limit_blocks(&a12, &params, reps, &RngConfig::new(4001, 0)).unwrap();
    let s21 = sample_limit_blocks(&a21, &params, reps, &RngConfig::new(4002, 0)).unwrap();
    let ks = ks_two_sample(&s12.samples, &s21.samples).unwrap();
    let crit = ks_critical_value(0.001, reps, reps);
    assert!(ks.statistic < crit, "D = {} crit = {crit}", ks.statistic);
    println!(
        "ACCEPTANCE 9 PASS: permutation invariance, KS D = {:.4} < {crit:.4}",
        ks.statistic
    );
}

#[test]
fn acceptance_10_truncation_consistency() {
    // twenty letters, dominant first letter, slow tail
    let mut weights: Vec<u64> = vec![4500, 2000, 1000, 1000, 500, 500, 200, 200, 100];
    weights.extend(std::iter::repeat(1).take(11));
    let pmf = Pmf::from_weights(&weights).unwrap();
    let full_inst = Instance::new(pmf.clone(), pmf.clone()).unwrap();
    let (cut, small_inst) = lci_core::truncate_alphabet(&pmf, &pmf).unwrap();
    assert_eq!(cut, 3);

    let full = classify_case(&full_inst).unwrap().to_f64();
    let small = classify_case(&small_inst).unwrap().to_f64();
    assert_eq!(full.e_max, small.e_max);

    let reps = 10_000;
    let params = LimitParams::default();
    let sf = sample_limit(&full, &params, reps, &RngConfig::new(5001, 0)).unwrap();
    let ss = sample_limit(&small, &params, reps, &RngConfig::new(5002, 0)).unwrap();
    let ks = ks_two_sample(&sf.samples, &ss.samples).unwrap();
    let crit = ks_critical_value(0.001, reps, reps);
    assert!(ks.statistic < crit, "D = {} crit = {crit}", ks.statistic);
    println!(
        "ACCEPTANCE 10 PASS: cut at m = {cut}, full vs bucketed KS D = {:.4} < {crit:.4}",
        ks.statistic
    );
}

/// The spec pins `AnalysisReport` to expose the case tag; silence the unused
/// import lint path in builds where only some tests run.
#[allow(dead_code)]
fn _type_checks(r: &AnalysisReport) -> CaseTag {
    r.case()
}
