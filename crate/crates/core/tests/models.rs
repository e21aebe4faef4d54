mod common;

use std::collections::BTreeMap;

use common::{brute_conditional, brute_masses, ctx, signs};
use ghz_esr::model::{is_deterministic, mspec_multiplicities, Restriction};
use ghz_esr::verify::{conditional_probability_aggregated, verify_ac_aggregated};
use ghz_esr::{
    census, combination_distribution, conditional_probability, detection_probability,
    enumerate_contexts, model_m1, model_m2, model_m3, total_probability, verify_ac, verify_dm,
    Combination, DDistribution, Model, OutcomeAssignment, PartitionElement, Rational, Site,
};
use proptest::prelude::*;

fn dd(sites: &[&str]) -> DDistribution {
    DDistribution::with_undetected(sites.iter().map(|s| s.parse::<Site>().unwrap()))
}

fn ddist_from_mask(mask: u16) -> DDistribution {
    DDistribution::with_undetected(Site::ALL.into_iter().filter(|s| mask >> s.index() & 1 == 1))
}

/// Random element-uniform model; with `dm` every d-distribution is patched
/// to leave one site of each violated triad undetected.
fn uniform_model(dm: bool) -> impl Strategy<Value = Model> {
    let family = prop::collection::vec((0u16..512, prop::array::uniform4(0usize..3)), 1..4);
    prop::array::uniform8(family).prop_map(move |fams| {
        let table: BTreeMap<PartitionElement, Vec<DDistribution>> = PartitionElement::ALL
            .into_iter()
            .zip(fams)
            .map(|(e, fam)| {
                let mut v: Vec<DDistribution> = fam
                    .into_iter()
                    .map(|(mask, picks)| {
                        let mut m = mask;
                        if dm {
                            for (t, k) in e.violated_triads().into_iter().zip(picks) {
                                m |= 1 << t.sites()[k].index();
                            }
                        }
                        ddist_from_mask(m)
                    })
                    .collect();
                v.sort();
                v.dedup();
                (e, v)
            })
            .collect();
        Model::from_fn("random", |_, e| table[&e].clone()).unwrap()
    })
}

fn assignment() -> impl Strategy<Value = OutcomeAssignment> {
    (0usize..63, 0usize..8).prop_map(|(i, p)| {
        let all = OutcomeAssignment::all_for(enumerate_contexts()[i]);
        all[p % all.len()].clone()
    })
}

#[test]
fn builtin_models_pass_both_checks() {
    for m in [model_m3(), model_m1(), model_m2()] {
        assert!(verify_ac(&m).pass, "{} ac", m.name());
        assert!(verify_dm(&m).pass, "{} dm", m.name());
        let agg = verify_ac_aggregated(&m).unwrap();
        assert!(agg.pass, "{} aggregated", m.name());
    }
}

#[test]
fn builtin_conditionals_match_independent_enumeration() {
    for m in [model_m3(), model_m1(), model_m2()] {
        for c in enumerate_contexts() {
            for a in OutcomeAssignment::all_for(c) {
                let expected = brute_conditional(&m, &c, a.outcomes());
                assert_eq!(conditional_probability(&m, &a).ok(), expected, "{} {c}", m.name());
                assert_eq!(conditional_probability_aggregated(&m, &a).ok(), expected, "{} {c}", m.name());
            }
        }
    }
}

#[test]
fn m3_shape() {
    let m = model_m3();
    assert!(is_deterministic(&m));
    for (_, _, dds) in m.entries() {
        assert_eq!(dds[0].undetected_count(), 3);
        assert!(dds[0].undetected_sites().iter().all(|s| !s.is_z()));
    }
    for s in Site::ALL {
        let expected = if s.is_z() { Rational::one() } else { Rational::new(1, 2) };
        assert_eq!(detection_probability(&m, &s.to_string().parse().unwrap(), None), expected);
    }
    let c = census(&m);
    assert_eq!((c.ddistributions, c.mspecifications, c.combinations), (8, 96, 48));
    let masses = combination_distribution(&m);
    let count = |r: Rational| masses.values().filter(|&v| *v == r).count();
    assert_eq!(count(Rational::new(1, 32)), 16);
    assert_eq!(count(Rational::new(1, 64)), 32);
}

#[test]
fn m3_triple_detection_only_on_first_block() {
    let m = model_m3();
    let t = ctx("x1,y2,y3");
    for e in PartitionElement::ALL {
        let d = detection_probability(&m, &t, Some(Restriction::Element(e)));
        let expected = if e == PartitionElement::I0 { Rational::one() } else { Rational::zero() };
        assert_eq!(d, expected, "{e}");
    }
    for a in OutcomeAssignment::all_for(t) {
        let p = brute_conditional(&m, &t, a.outcomes()).unwrap();
        let product: i64 = a.outcomes().iter().map(|s| s.value() as i64).product();
        assert_eq!(p, if product == 1 { Rational::new(1, 4) } else { Rational::zero() });
    }
}

#[test]
fn m1_restricted_detection_values() {
    let m = model_m1();
    let x1 = ctx("x1");
    let det = |e| detection_probability(&m, &x1, Some(Restriction::Element(e)));
    assert_eq!(det(PartitionElement::I_II_III), Rational::new(2, 3));
    assert_eq!(det(PartitionElement::I_II_IV), Rational::one());
    assert_eq!(det(PartitionElement::IV0), Rational::zero());
    assert_eq!(detection_probability(&m, &x1, None), Rational::new(5, 12));
    assert_eq!(detection_probability(&m, &ctx("z2"), None), Rational::new(1, 2));
    let c = census(&m);
    assert_eq!((c.ddistributions, c.mspecifications, c.combinations), (7, 97, 48));
    let masses = combination_distribution(&m);
    assert_eq!(masses[&Combination::AllUndetected], Rational::new(1, 2));
    assert!(masses
        .iter()
        .filter(|(c, _)| **c != Combination::AllUndetected)
        .all(|(_, v)| *v == Rational::new(1, 96)));
}

#[test]
fn m2_shape() {
    let m = model_m2();
    for (_, _, dds) in m.entries() {
        assert!(dds.iter().all(|d| d.undetected_count() == 2));
    }
    let c = census(&m);
    assert_eq!((c.mspecifications, c.combinations), (192, 96));
    assert!(mspec_multiplicities(&m).values().all(|&n| n == 4));
}

#[test]
fn all_detected_model_violates_ac_only_on_triads() {
    let m = Model::from_fn("all-detected", |_, _| vec![DDistribution::all_detected()]).unwrap();
    let report = verify_ac(&m);
    assert!(!report.pass);
    assert!(report.failures.iter().all(|f| f.rule == "ac:triad"));
    let (detected, matching) = brute_masses(&m, &ctx("x1,x2,x3"), &signs(&[1, 1, 1]));
    assert_eq!(detected, Rational::one());
    assert!(!matching.is_zero());
    assert!(!verify_dm(&m).pass);
}

#[test]
fn undefined_conditional_is_an_error() {
    let m = model_m3();
    let a = OutcomeAssignment::new(ctx("x1,x2,x3"), signs(&[-1, -1, -1])).unwrap();
    assert_eq!(detection_probability(&m, a.context(), None), Rational::new(1, 8));
    let all_u = Model::from_fn("dark", |_, _| vec![DDistribution::all_undetected()]).unwrap();
    assert!(conditional_probability(&all_u, &a).is_err());
    assert_eq!(total_probability(&all_u, &a), Rational::zero());
}

#[test]
fn model_json_roundtrip_and_validation() {
    for m in [model_m3(), model_m1(), model_m2()] {
        let back = Model::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(back, m);
    }
    let mut json: serde_json::Value = serde_json::from_str(&model_m3().to_json_string()).unwrap();
    json["states"].as_array_mut().unwrap().pop();
    assert!(Model::from_json_str(&json.to_string()).is_err());
    let mut dup: serde_json::Value = serde_json::from_str(&model_m3().to_json_string()).unwrap();
    let first = dup["states"][0]["ddists"][0].clone();
    dup["states"][0]["ddists"].as_array_mut().unwrap().push(first);
    assert!(Model::from_json_str(&dup.to_string()).is_err());
    assert_eq!(dd(&["x1"]).to_string(), "UDDDDDDDD");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brute_and_aggregated_conditionals_agree(m in uniform_model(false), a in assignment()) {
        let brute = brute_conditional(&m, a.context(), a.outcomes());
        prop_assert_eq!(conditional_probability(&m, &a).ok(), brute.clone());
        prop_assert_eq!(conditional_probability_aggregated(&m, &a).ok(), brute);
    }

    #[test]
    fn conditionals_are_normalized(m in uniform_model(false), i in 0usize..63) {
        let c = enumerate_contexts()[i];
        let all = OutcomeAssignment::all_for(c);
        if detection_probability(&m, &c, None).is_zero() {
            prop_assert!(all.iter().all(|a| conditional_probability(&m, a).is_err()));
        } else {
            let sum: Rational = all.iter().map(|a| conditional_probability(&m, a).unwrap()).sum();
            prop_assert_eq!(sum, Rational::one());
        }
    }

    #[test]
    fn total_is_bounded_by_detection_and_conditional(m in uniform_model(false), a in assignment()) {
        let det = detection_probability(&m, a.context(), None);
        let total = total_probability(&m, &a);
        prop_assert!(total <= det);
        if let Ok(c) = conditional_probability(&m, &a) {
            prop_assert!(total <= c);
            prop_assert_eq!(total, det * c);
        }
    }

    #[test]
    fn detection_shrinks_as_contexts_grow(m in uniform_model(false), i in 0usize..63) {
        let c = enumerate_contexts()[i];
        let sites = c.sites();
        let det = detection_probability(&m, &c, None);
        for k in 0..sites.len() {
            let sub: Vec<Site> = sites.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, s)| *s).collect();
            if let Ok(smaller) = ghz_esr::MeasurementContext::from_sites(&sub) {
                if !smaller.is_empty() {
                    prop_assert!(det <= detection_probability(&m, &smaller, None));
                }
            }
        }
    }

    #[test]
    fn combination_masses_sum_to_one(m in uniform_model(false)) {
        let total: Rational = combination_distribution(&m).values().sum();
        prop_assert_eq!(total, Rational::one());
    }

    #[test]
    fn element_uniform_dm_models_pass_ac(m in uniform_model(true)) {
        prop_assert!(verify_dm(&m).pass);
        prop_assert!(verify_ac(&m).pass);
    }

    #[test]
    fn brute_and_aggregated_verification_agree(m in uniform_model(false)) {
        let brute = verify_ac(&m);
        let agg = verify_ac_aggregated(&m).unwrap();
        prop_assert_eq!(brute.pass, agg.pass);
        prop_assert_eq!(brute.failures.len(), agg.failures.len());
    }

    #[test]
    fn random_model_json_roundtrip(m in uniform_model(false)) {
        prop_assert_eq!(Model::from_json_str(&m.to_json_string()).unwrap(), m);
    }
}
