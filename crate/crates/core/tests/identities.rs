//! End-to-end identity checks on small chains, driven through the public API.

use qism_core::algebra::{Coupling, Twist};
use qism_core::bethe::{self, SolverOptions};
use qism_core::formfactor::{self, compatible, VerificationRecord};
use qism_core::model::ModelSpec;
use qism_core::spectral::{build_inventory, default_sample_points, Inventory, TOL_MATCH};
use qism_core::C64;

const SEED: u64 = 7;

fn chain(rank: usize, sites: usize, split: usize) -> ModelSpec {
    ModelSpec::seeded(rank, sites, Coupling::default(), split, SEED).unwrap()
}

fn inventory(spec: &ModelSpec, twist: &Twist, sectors: &[Vec<usize>], lift: bool) -> Inventory {
    let ratios = spec.ratios();
    let solve = |c: &[usize]| bethe::solve_sector(c, &ratios, twist, &SolverOptions { seed: SEED, ..Default::default() });
    let samples = default_sample_points(spec, 6, SEED);
    build_inventory(spec, twist, sectors, &samples, 3, TOL_MATCH, lift, &solve).unwrap()
}

fn assert_all(records: &[VerificationRecord]) {
    for r in records {
        assert!(r.pass, "{} {} {}→{} i={:?} j={:?} {}: lhs {} rhs {} rel {:e}", r.suite, r.identity, r.ket, r.bra, r.i, r.j, r.point, r.lhs, r.rhs, r.rel_residual);
    }
}

fn gl3_sectors() -> Vec<Vec<usize>> {
    vec![vec![0, 0], vec![1, 0], vec![2, 0], vec![2, 1]]
}

#[test]
fn partial_zero_mode_form_factors_gl3() {
    let spec = chain(3, 4, 2);
    let inv = inventory(&spec, &Twist::untwisted(3), &gl3_sectors(), false);
    assert!(inv.states.len() >= 6, "only {} states", inv.states.len());
    let z = default_sample_points(&spec, 5, 99);
    let mut records = Vec::new();
    for bra in inv.regular() {
        for ket in inv.regular() {
            if bra.label == ket.label {
                continue;
            }
            for i in 0..3 {
                for j in 0..3 {
                    if compatible(bra, ket, i, j) {
                        let (rec, uff) = formfactor::verify_thm41(&spec, bra, ket, i, j, &z, 1e-8).unwrap();
                        records.push(formfactor::z_spread_record(&spec, bra, ket, i, j, &uff, 1e-8));
                        records.push(rec);
                    }
                }
            }
        }
    }
    assert!(records.len() > 20);
    let nonzero = records.iter().filter(|r| r.identity == "partial zero-mode form factor" && r.rel_residual < 1e-8).count();
    assert!(nonzero >= 40, "only {nonzero} records pass on the relative residual");
    assert_all(&records);
}

#[test]
fn diagonal_form_factors_and_sum_rule_gl3() {
    let spec = chain(3, 4, 2);
    let inv = inventory(&spec, &Twist::untwisted(3), &gl3_sectors(), false);
    let ratios = spec.ratios();
    for st in inv.regular() {
        let mut lhs_sum = C64::new(0.0, 0.0);
        for i in 0..3 {
            let d = bethe::kappa_derivatives(&st.roots, &ratios, i).unwrap();
            let fd = bethe::kappa_derivatives_fd(&st.roots, &ratios, i, 1e-6).unwrap();
            let rec = formfactor::verify_thm42(&spec, st, i, &d, 1e-6).unwrap();
            assert_all(&[rec.clone(), formfactor::verify_kappa_derivatives(&spec, st, i, &d, &fd, 1e-5).unwrap()]);
            lhs_sum += rec.lhs;
        }
        assert!((lhs_sum - 2.0).norm() < 1e-8 * 2.0, "{lhs_sum}");
    }
}

#[test]
fn vacuum_diagonal_form_factor_is_split() {
    let spec = chain(3, 4, 2);
    let inv = inventory(&spec, &Twist::untwisted(3), &[vec![0, 0]], false);
    let st = &inv.states[0];
    for i in 0..3 {
        let d = bethe::kappa_derivatives(&st.roots, &spec.ratios(), i).unwrap();
        let rec = formfactor::verify_thm42(&spec, st, i, &d, 1e-12).unwrap();
        let expect = if i == 0 { 2.0 } else { 0.0 };
        assert!((rec.lhs - expect).norm() < 1e-12 && rec.pass);
    }
}

fn lemma_records(spec: &ModelSpec, counts: &[usize], betas: &[Vec<C64>]) -> Vec<VerificationRecord> {
    let rank = spec.rank();
    let kets = inventory(spec, &Twist::untwisted(rank), &[counts.to_vec()], true);
    assert!(!kets.states.is_empty());
    let mut out = Vec::new();
    for beta in betas {
        let tw = Twist::from_exponents(beta);
        let bras = inventory(spec, &tw, &[counts.to_vec()], false);
        assert!(!bras.states.is_empty(), "no twisted states for beta {beta:?}");
        for bra in &bras.states {
            for ket in &kets.states {
                out.push(formfactor::verify_lemma51(spec, beta, bra, ket, 1e-8).unwrap());
            }
        }
    }
    out
}

#[test]
fn generating_functional_gl3() {
    let spec = chain(3, 4, 2);
    let c = |a: f64, b: f64| C64::new(a, b);
    let betas = vec![
        vec![c(0.21, -0.05), c(-0.12, 0.1), c(0.07, 0.18)],
        vec![c(-0.15, 0.2), c(0.25, 0.0), c(-0.1, -0.1)],
    ];
    let recs = lemma_records(&spec, &[1, 1], &betas);
    assert_all(&recs);
    let recs = lemma_records(&spec, &[2, 1], &betas[..1]);
    assert_all(&recs);
}

#[test]
fn generating_functional_degenerate_twists() {
    let spec = chain(3, 4, 2);
    let inv = inventory(&spec, &Twist::untwisted(3), &[vec![1, 1]], true);
    for beta in [vec![C64::new(0.0, 0.0); 3], vec![C64::new(0.17, -0.04); 3]] {
        for bra in &inv.states {
            for ket in &inv.states {
                let r = formfactor::verify_lemma51(&spec, &beta, bra, ket, 1e-12).unwrap();
                assert!(r.pass, "{r:?}");
            }
        }
    }
}

#[test]
fn local_operators_and_telescoping() {
    let spec = chain(3, 4, 2);
    let inv = inventory(&spec, &Twist::untwisted(3), &gl3_sectors(), false);
    let z = default_sample_points(&spec, 5, 99);
    let mut records = Vec::new();
    for bra in inv.regular() {
        for ket in inv.regular() {
            if bra.label == ket.label {
                continue;
            }
            for (i, j) in [(0, 1), (1, 1)] {
                if !compatible(bra, ket, i, j) {
                    continue;
                }
                let uff = formfactor::universal_ff(&spec, bra, ket, i, j, &z).unwrap();
                for site in 0..4 {
                    records.push(formfactor::verify_local_offdiag(&spec, bra, ket, i, j, site, &uff, 1e-8).unwrap());
                }
                records.push(formfactor::verify_telescoping(&spec, bra, ket, i, j, 1e-12).unwrap());
            }
        }
        let d = bethe::kappa_derivatives(&bra.roots, &spec.ratios(), 1).unwrap();
        for site in 0..4 {
            records.push(formfactor::verify_local_diag(&spec, bra, 1, site, &d, 1e-6).unwrap());
        }
    }
    assert_all(&records);
}

#[test]
fn commutators_and_zero_mode_actions() {
    let spec = chain(3, 4, 2);
    assert_all(&formfactor::verify_commutators(&spec, 1e-13).unwrap());
    let inv = inventory(&spec, &Twist::untwisted(3), &gl3_sectors(), false);
    for st in inv.regular() {
        assert_all(&formfactor::verify_zero_mode_actions(&spec, st, 1e-9, 1e-12).unwrap());
    }
}

#[test]
fn morphism_with_per_state_normalization() {
    let spec = chain(3, 4, 2);
    let inv = inventory(&spec, &Twist::untwisted(3), &gl3_sectors(), false);
    let states: Vec<_> = inv.regular().cloned().collect();
    let z = default_sample_points(&spec, 5, 99);
    let recs = formfactor::verify_morphism(&spec, &states, &z, 1e-8).unwrap();
    let checked: Vec<_> = recs.iter().filter(|r| !r.informational).cloned().collect();
    assert!(checked.len() > 5, "only {} gauge-fixed checks", checked.len());
    assert_all(&checked);
}

#[test]
fn gl2_and_gl4_partial_zero_modes() {
    for (rank, sites, split, sectors) in [
        (2, 4, 2, vec![vec![0], vec![1], vec![2]]),
        (4, 3, 1, vec![vec![0, 0, 0], vec![1, 0, 0], vec![1, 1, 0], vec![2, 0, 0]]),
    ] {
        let spec = chain(rank, sites, split);
        let inv = inventory(&spec, &Twist::untwisted(rank), &sectors, false);
        let z = default_sample_points(&spec, 5, 99);
        let mut records = Vec::new();
        for bra in inv.regular() {
            for ket in inv.regular() {
                if bra.label == ket.label {
                    continue;
                }
                for i in 0..rank {
                    for j in 0..rank {
                        if compatible(bra, ket, i, j) {
                            records.push(formfactor::verify_thm41(&spec, bra, ket, i, j, &z, 1e-6).unwrap().0);
                        }
                    }
                }
            }
            for i in 0..rank {
                let d = bethe::kappa_derivatives(&bra.roots, &spec.ratios(), i).unwrap();
                records.push(formfactor::verify_thm42(&spec, bra, i, &d, 1e-6).unwrap());
            }
        }
        assert!(records.len() > 4, "rank {rank}: {} records", records.len());
        assert_all(&records);
    }
}
