//! Adequacy (AC) and detection-mapping (DM) checks.
//!
//! [`verify_ac`] enumerates every (state, d-distribution) pair.
//! [`verify_ac_aggregated`] instead works per partition element from the
//! sign constraints that define the element, without touching individual
//! states; the two must produce the same report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{context_histogram, DDistribution, Model, SCHEMA_VERSION};
use crate::qm::{qm_probability, rule_table, OutcomeAssignment, Rule};
use crate::rational::Rational;
use crate::state_space::{
    enumerate_contexts, satisfies, MeasurementContext, MicroState, PartitionElement, Sign, Triad,
    NUM_GHZ_STATES,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Ac,
    Dm,
    Counts,
}

/// One violated requirement. Fields that do not apply to the check are `None`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<MeasurementContext>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<i8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<MicroState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ddist: Option<DDistribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triad: Option<Triad>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actual: Option<Rational>,
}

impl Failure {
    pub(crate) fn rule(rule: impl Into<String>) -> Failure {
        Failure {
            rule: rule.into(),
            context: None,
            outcomes: None,
            state: None,
            ddist: None,
            triad: None,
            expected: None,
            actual: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub check: Check,
    pub model: String,
    pub pass: bool,
    /// Number of individual equalities examined.
    pub checked: usize,
    pub failures: Vec<Failure>,
    /// Contexts the model never detects; AC is vacuous there.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<MeasurementContext>,
}

impl VerificationReport {
    pub(crate) fn new(check: Check, model: &str, checked: usize, failures: Vec<Failure>) -> Self {
        VerificationReport {
            schema_version: SCHEMA_VERSION,
            check,
            model: model.to_string(),
            pass: failures.is_empty(),
            checked,
            failures,
            skipped: Vec::new(),
        }
    }
}

fn rule_name(rule: Rule) -> &'static str {
    match rule {
        Rule::Single => "ac:single",
        Rule::PairZz => "ac:pair-zz",
        Rule::Pair => "ac:pair",
        Rule::TripleZzz => "ac:triple-zzz",
        Rule::TripleOneZ => "ac:triple-one-z",
        Rule::Triad => "ac:triad",
        Rule::TripleNoZ => "ac:triple",
        Rule::StateVector => "ac:triple-two-z",
    }
}

/// Compares a context's conditional distribution against QM and records mismatches.
fn check_context(
    context: MeasurementContext,
    conditional: impl Fn(&[Sign]) -> Rational,
    failures: &mut Vec<Failure>,
) -> usize {
    let mut checked = 0;
    for assign in OutcomeAssignment::all_for(context) {
        checked += 1;
        let expected = qm_probability(&assign);
        let actual = conditional(assign.outcomes());
        if actual != expected {
            let (_, rule) = rule_table(&assign);
            failures.push(Failure {
                context: Some(context),
                outcomes: Some(assign.outcomes().iter().map(|o| o.value()).collect()),
                triad: context.triad(),
                expected: Some(expected),
                actual: Some(actual),
                ..Failure::rule(rule_name(rule))
            });
        }
    }
    checked
}

/// Conditional-on-detection probabilities against QM on all 63 contexts,
/// singles first, then pairs, then triples.
pub fn verify_ac(model: &Model) -> VerificationReport {
    let mut failures = Vec::new();
    let mut skipped = Vec::new();
    let mut checked = 0;
    for context in enumerate_contexts() {
        let hist = context_histogram(model, &context);
        if hist.detected.is_zero() {
            skipped.push(context);
            continue;
        }
        checked += check_context(
            context,
            |o| hist.conditional(o).expect("detected mass is positive"),
            &mut failures,
        );
    }
    let mut report = VerificationReport::new(Check::Ac, model.name(), checked, failures);
    report.skipped = skipped;
    report
}

/// Early-exit form of [`verify_ac`].
pub fn passes_ac(model: &Model) -> bool {
    enumerate_contexts().into_iter().all(|context| {
        let hist = context_histogram(model, &context);
        if hist.detected.is_zero() {
            return true;
        }
        OutcomeAssignment::all_for(context).iter().all(|a| {
            hist.conditional(a.outcomes()).expect("positive mass") == qm_probability(a)
        })
    })
}

/// Every d-distribution leaves some site of each violated triad undetected.
pub fn verify_dm(model: &Model) -> VerificationReport {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (state, _, dds) in model.entries() {
        for &dd in dds {
            for triad in Triad::ALL {
                if satisfies(state, triad) {
                    continue;
                }
                checked += 1;
                if dd.detects(&triad.context()) {
                    failures.push(Failure {
                        state: Some(*state),
                        ddist: Some(dd),
                        triad: Some(triad),
                        context: Some(triad.context()),
                        ..Failure::rule(format!("dm:{triad}"))
                    });
                }
            }
        }
    }
    VerificationReport::new(Check::Dm, model.name(), checked, failures)
}

/// Outcome distribution on a context among the 16 states of one element,
/// derived from the element's triad constraints.
///
/// The x/y signs of an element form an affine subspace cut out by the
/// triad parities and the shared z sign `k` is free. Projected onto the
/// sites of one context, that distribution is uniform unless the context's
/// x/y sites are exactly a triad, in which case only the four patterns
/// with the element's parity for that triad remain.
pub fn element_outcome_probability(
    element: PartitionElement,
    context: &MeasurementContext,
    outcomes: &[Sign],
) -> Rational {
    let sites = context.sites();
    let mut z_signs = Vec::new();
    let mut xy_sites = Vec::new();
    let mut xy_signs = Vec::new();
    for (site, &o) in sites.iter().zip(outcomes) {
        if site.is_z() {
            z_signs.push(o);
        } else {
            xy_sites.push(*site);
            xy_signs.push(o);
        }
    }
    let z_part = if z_signs.is_empty() {
        Rational::one()
    } else if z_signs.windows(2).all(|w| w[0] == w[1]) {
        Rational::new(1, 2)
    } else {
        return Rational::zero();
    };
    let xy_part = match Triad::from_sites(&xy_sites) {
        Some(triad) => {
            let parity = if element.satisfies(triad) {
                triad.required_sign()
            } else {
                triad.required_sign().flip()
            };
            let product = xy_signs.iter().fold(Sign::Plus, |acc, &s| acc * s);
            if product == parity {
                Rational::new(1, 4)
            } else {
                return Rational::zero();
            }
        }
        None => Rational::new(1, 1 << xy_sites.len()),
    };
    z_part * xy_part
}

/// Per-element aggregate: weight of each element's detecting d-distributions.
fn element_detection_weights(
    families: &BTreeMap<PartitionElement, Vec<DDistribution>>,
    context: &MeasurementContext,
) -> Vec<(PartitionElement, Rational)> {
    let element_share = Rational::new(16, NUM_GHZ_STATES as i64);
    families
        .iter()
        .map(|(&e, fam)| {
            let hits = fam.iter().filter(|d| d.detects(context)).count();
            (e, &element_share * &Rational::new(hits as i64, fam.len() as i64))
        })
        .collect()
}

fn element_families(model: &Model) -> Result<BTreeMap<PartitionElement, Vec<DDistribution>>> {
    PartitionElement::ALL
        .into_iter()
        .map(|e| {
            model
                .element_family(e)
                .map(|f| (e, f.into_iter().collect()))
                .ok_or_else(|| Error::NotElementUniform(model.name().to_string()))
        })
        .collect()
}

/// Conditional probability computed per partition element; requires every
/// state of an element to carry the same d-distribution family.
pub fn conditional_probability_aggregated(
    model: &Model,
    assign: &OutcomeAssignment,
) -> Result<Rational> {
    let families = element_families(model)?;
    aggregated_conditional(&families, assign.context(), assign.outcomes())
        .ok_or_else(|| Error::UndefinedConditional(assign.context().to_string()))
}

fn aggregated_conditional(
    families: &BTreeMap<PartitionElement, Vec<DDistribution>>,
    context: &MeasurementContext,
    outcomes: &[Sign],
) -> Option<Rational> {
    let weights = element_detection_weights(families, context);
    let detected: Rational = weights.iter().map(|(_, w)| w).sum();
    let matching: Rational = weights
        .iter()
        .map(|(e, w)| w * &element_outcome_probability(*e, context, outcomes))
        .sum();
    matching.checked_div(&detected)
}

/// [`verify_ac`] through the per-element route.
pub fn verify_ac_aggregated(model: &Model) -> Result<VerificationReport> {
    let families = element_families(model)?;
    let mut failures = Vec::new();
    let mut skipped = Vec::new();
    let mut checked = 0;
    for context in enumerate_contexts() {
        let detected: Rational = element_detection_weights(&families, &context)
            .iter()
            .map(|(_, w)| w)
            .sum();
        if detected.is_zero() {
            skipped.push(context);
            continue;
        }
        checked += check_context(
            context,
            |o| aggregated_conditional(&families, &context, o).expect("positive mass"),
            &mut failures,
        );
    }
    let mut report = VerificationReport::new(Check::Ac, model.name(), checked, failures);
    report.skipped = skipped;
    Ok(report)
}
