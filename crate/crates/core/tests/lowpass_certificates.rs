use std::f64::consts::SQRT_2;

use proptest::prelude::*;
use purefilter::filter::{
    make_bcm_journe, make_constant, make_haar, make_journe_family, make_random, make_shannon,
    FilterMatrix, JourneParams, PhaseConvention,
};
use purefilter::lowpass::{
    check_certificate, derive_journe, search_certificate, CertificateFailure, Certificate,
};
use purefilter::ruelle::{classify_purity, PurityStatus, Tolerances};
use purefilter::torus::{GridSpec, IntervalSet, Rat};

fn grid(n: usize, l: usize, k: u32) -> GridSpec {
    GridSpec::new(n, l, k).unwrap()
}

fn journe_grid() -> GridSpec {
    grid(2, 56, 2)
}

fn bundled() -> Vec<(&'static str, FilterMatrix)> {
    let mut out = vec![
        ("haar", make_haar(grid(2, 1, 4)).unwrap()),
        ("shannon", make_shannon(grid(2, 4, 2)).unwrap()),
        ("constant", make_constant(grid(2, 1, 4)).unwrap()),
    ];
    for phase in [PhaseConvention::Literal, PhaseConvention::Sign] {
        out.push(("bcm_journe", make_bcm_journe(grid(2, 28, 2), phase).unwrap()));
        out.push(("journe", make_journe_family(&JourneParams { phase, ..JourneParams::default() }).unwrap()));
    }
    out
}

fn assert_eps_law(cert: &Certificate) {
    assert_eq!(cert.eps.to_bits(), 0.125f64.min(cert.delta / 8.0).to_bits());
}

#[test]
fn haar_on_an_eighth() {
    let h = make_haar(grid(2, 1, 4)).unwrap();
    let f = IntervalSet::from_fracs(&[(-1, 8, 1, 8)]).unwrap();
    let cert = check_certificate(&h, 1, 0.3, &f).unwrap();
    // |h| is smallest at the cell starting at -1/8
    let oracle = (0..16)
        .filter(|t| *t < 2 || *t >= 14)
        .map(|t| h.value(0, 0, t).norm())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(cert.margins.min_singular_on_f, oracle);
    assert!((oracle - 2.0 * (std::f64::consts::PI / 8.0).cos() / SQRT_2).abs() < 1e-12);
    assert!(oracle > 1.3);
    assert_eq!(cert.margins.measure_f_cap_alpha_f, f.measure());
    assert_eps_law(&cert);
}

#[test]
fn constant_filter_admits_no_certificate() {
    let h = make_constant(grid(2, 1, 4)).unwrap();
    for k in 1..=8 {
        let f = IntervalSet::symmetric(&Rat::new(k, 16)).unwrap();
        for delta in [1e-9, 0.1, 0.5] {
            assert!(matches!(
                check_certificate(&h, 1, delta, &f),
                Err(CertificateFailure::NotExpansive { .. })
            ));
        }
    }
    assert!(search_certificate(&h).is_none());
}

#[test]
fn searched_certificates() {
    let haar = search_certificate(&make_haar(grid(2, 1, 4)).unwrap()).unwrap();
    assert!(haar.delta >= 0.3);
    let bcm = search_certificate(&make_bcm_journe(grid(2, 28, 2), PhaseConvention::Literal).unwrap()).unwrap();
    assert_eq!(bcm.block_size_a, 1);
    assert!(bcm.delta > 0.4);
    for (name, h) in bundled() {
        if let Some(cert) = search_certificate(&h) {
            assert_eps_law(&cert);
            let again = check_certificate(&h, cert.block_size_a, cert.delta, &cert.f).unwrap();
            assert_eq!(again, cert, "{name}");
            assert!(cert.margins.min_singular_on_f >= 1.0 + cert.delta, "{name}");
            assert!(cert.margins.max_offblock_norm_on_f < cert.eps, "{name}");
        }
    }
}

#[test]
fn journe_derivation_at_one_tenth() {
    let d = derive_journe(0.1, journe_grid()).unwrap();
    assert_eq!(d.r1, 0.003125);
    assert_eq!(d.r2, ((SQRT_2 - 1.1) / 1.1).sqrt());
    assert_eq!(d.r, d.r1.min(d.r2));
    assert!(d.n >= 7 && journe_grid().cell_count() % d.n == 0);
    assert!(d.all_checks_hold());
    // both inequalities recomputed here
    let eps = (1.0f64 / 8.0).min(0.1 / 8.0);
    assert!(2.0 * d.r < eps);
    assert!(1.0 / (SQRT_2 * (1.0 - 2.0 * d.r * d.r).sqrt()) <= 1.0 / 1.1);
    let h = d.filter().unwrap();
    let cert = check_certificate(&h, 1, 0.1, &d.f).unwrap();
    assert!(cert.margins.min_singular_on_f >= 1.1);
    assert!(cert.margins.max_offblock_norm_on_f < 0.0125);
    assert!(cert.margins.measure_f_cap_alpha_f > Rat::zero());
    assert_eq!(cert.eps, 0.0125);
}

#[test]
fn journe_derivation_rejects_large_delta() {
    assert!(derive_journe(SQRT_2 - 1.0, journe_grid()).is_err());
    assert!(derive_journe(0.5, journe_grid()).is_err());
    assert!(derive_journe(0.0, journe_grid()).is_err());
    assert!(derive_journe(f64::NAN, journe_grid()).is_err());
}

#[test]
fn certificates_never_meet_eigenvectors() {
    let tols = Tolerances::default();
    for (name, h) in bundled() {
        let cert = search_certificate(&h);
        let status = classify_purity(&h, &tols).unwrap().status;
        assert!(!(cert.is_some() && status == PurityStatus::NotPureCertified), "{name}");
    }
    let mut certified = 0;
    for seed in 0..50u64 {
        let c = 1 + (seed % 2) as usize;
        let bias = if seed % 5 == 0 { 0.0 } else { 4.0 };
        let h = make_random(grid(2, 2, 3), c, bias, seed).unwrap();
        let cert = search_certificate(&h);
        let verdict = classify_purity(&h, &tols).unwrap();
        if cert.is_some() {
            certified += 1;
            assert_ne!(verdict.status, PurityStatus::NotPureCertified, "seed {seed}");
            assert!(verdict.upgrade_with(cert.unwrap()).anomalies.is_empty());
        }
    }
    assert!(certified >= 10, "only {certified} random filters were certified");
}

#[test]
fn certificates_shrink_to_symmetric_subsets() {
    let d = derive_journe(0.1, journe_grid()).unwrap();
    let h = d.filter().unwrap();
    let m = h.cell_count() as i64;
    let outer = m / d.n as i64;
    for k in 1..=outer {
        let f = IntervalSet::symmetric(&Rat::new(k, m)).unwrap();
        assert!(check_certificate(&h, 1, 0.1, &f).is_ok(), "k = {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivation_succeeds_across_delta(delta in 0.001f64..0.41) {
        let d = derive_journe(delta, journe_grid()).unwrap();
        prop_assert!(d.all_checks_hold());
        prop_assert!(2.0 * d.r < (0.125f64).min(delta / 8.0));
        let h = d.filter().unwrap();
        let cert = check_certificate(&h, 1, delta, &d.f);
        prop_assert!(cert.is_ok());
        assert_eps_law(&cert.unwrap());
    }

    #[test]
    fn monotone_in_f(seed in 0u64..1000, k in 1i64..8, j in 1i64..8) {
        let h = make_random(grid(2, 2, 3), 1, 4.0, seed).unwrap();
        let m = h.cell_count() as i64;
        let (small, large) = (k.min(j), k.max(j));
        let big = IntervalSet::symmetric(&Rat::new(large, m)).unwrap();
        let sub = IntervalSet::symmetric(&Rat::new(small, m)).unwrap();
        if let Some(cert) = search_certificate(&h) {
            if check_certificate(&h, 1, cert.delta, &big).is_ok() {
                prop_assert!(check_certificate(&h, 1, cert.delta, &sub).is_ok());
            }
        }
        for delta in [0.05, 0.2] {
            if check_certificate(&h, 1, delta, &big).is_ok() {
                prop_assert!(check_certificate(&h, 1, delta, &sub).is_ok());
            }
        }
    }
}
