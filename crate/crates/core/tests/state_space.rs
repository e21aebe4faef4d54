use ghz_esr::state_space::{
    enumerate_all_microstates, ghz_index, satisfies, triad_product, NUM_GHZ_STATES,
};
use ghz_esr::{
    classify, enumerate_contexts, enumerate_ghz_microstates, MeasurementContext, MicroState,
    PartitionElement, Sign, Site, Triad,
};
use proptest::prelude::*;

fn ghz_state() -> impl Strategy<Value = MicroState> {
    (0..NUM_GHZ_STATES).prop_map(|i| enumerate_ghz_microstates()[i])
}

fn any_state() -> impl Strategy<Value = MicroState> {
    prop::array::uniform9(prop::bool::ANY).prop_map(|bits| {
        MicroState::new(bits.map(|b| if b { Sign::Minus } else { Sign::Plus }))
    })
}

#[test]
fn triad_counts_and_partition() {
    let states = enumerate_ghz_microstates();
    assert_eq!(states.len(), 128);
    for t in Triad::ALL {
        assert_eq!(states.iter().filter(|s| satisfies(s, t)).count(), 64, "triad {t}");
    }
    assert!(!states.iter().any(|s| Triad::ALL.iter().all(|&t| satisfies(s, t))));
    assert!(states.iter().all(|s| Triad::ALL.iter().any(|&t| satisfies(s, t))));
    for e in PartitionElement::ALL {
        assert_eq!(states.iter().filter(|s| classify(s).unwrap() == e).count(), 16, "{e}");
    }
}

#[test]
fn canonical_order_is_lexicographic_plus_first() {
    let all = enumerate_all_microstates();
    assert_eq!(all.len(), 512);
    assert!(all.windows(2).all(|w| w[0] < w[1]));
    let ghz = enumerate_ghz_microstates();
    assert!(ghz.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(ghz[0], MicroState::all_plus());
}

#[test]
fn context_census() {
    let contexts = enumerate_contexts();
    assert_eq!(contexts.len(), 63);
    let by_len = |n| contexts.iter().filter(|c| c.len() == n).count();
    assert_eq!((by_len(1), by_len(2), by_len(3)), (9, 27, 27));
    let triads: Vec<Triad> = contexts.iter().filter_map(|c| c.triad()).collect();
    assert_eq!(triads, {
        let mut t = Triad::ALL.to_vec();
        t.sort_by_key(|t| t.context());
        t
    });
}

#[test]
fn rejected_inputs() {
    assert!("x1,y1".parse::<MeasurementContext>().is_err());
    assert!("w1".parse::<Site>().is_err());
    assert!("x4".parse::<Site>().is_err());
    assert!(MicroState::from_values(&[1, 1, 1, 1, 1, -1, 1, 1, 1]).unwrap().ensure_ghz_compatible().is_err());
    assert!(MicroState::from_values(&[1, 1, 2, 1, 1, 1, 1, 1, 1]).is_err());
    assert!(MicroState::from_values(&[1, 1, 1]).is_err());
}

proptest! {
    #[test]
    fn every_ghz_state_satisfies_one_or_three_triads(s in ghz_state()) {
        let n = Triad::ALL.iter().filter(|&&t| satisfies(&s, t)).count();
        prop_assert!(n == 1 || n == 3);
        let e = classify(&s).unwrap();
        prop_assert_eq!(e.satisfied_triads().len(), n);
        for t in Triad::ALL {
            prop_assert_eq!(e.satisfies(t), satisfies(&s, t));
        }
    }

    #[test]
    fn product_of_triad_products_is_minus_one(s in ghz_state()) {
        // Each x/y site appears in exactly two triads, so the four products
        // multiply to 1, while the required signs multiply to -1.
        let prod = Triad::ALL.iter().fold(Sign::Plus, |acc, &t| acc * triad_product(&s, t));
        prop_assert_eq!(prod, Sign::Plus);
        let required = Triad::ALL.iter().fold(Sign::Plus, |acc, &t| acc * t.required_sign());
        prop_assert_eq!(required, Sign::Minus);
    }

    #[test]
    fn ghz_index_matches_enumeration(s in any_state()) {
        match ghz_index(&s) {
            Some(i) => prop_assert_eq!(enumerate_ghz_microstates()[i], s),
            None => prop_assert!(!s.is_ghz_compatible()),
        }
    }

    #[test]
    fn classification_requires_ghz_compatibility(s in any_state()) {
        prop_assert_eq!(classify(&s).is_ok(), s.is_ghz_compatible());
    }

    #[test]
    fn context_text_roundtrip(i in 0usize..63) {
        let c = enumerate_contexts()[i];
        let back: MeasurementContext = c.to_string().parse().unwrap();
        prop_assert_eq!(back, c);
        let json = serde_json::to_string(&c).unwrap();
        prop_assert_eq!(serde_json::from_str::<MeasurementContext>(&json).unwrap(), c);
        prop_assert_eq!(c.outcome_patterns().len(), 1 << c.len());
    }

    #[test]
    fn state_json_roundtrip(s in ghz_state()) {
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<MicroState>(&json).unwrap(), s);
    }
}
