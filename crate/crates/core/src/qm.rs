//! Exact quantum predictions for compatible spin measurements on the GHZ state.
//!
//! The state vector `|+++> - |--->` is kept unnormalized with integer
//! amplitudes; projectors are applied as `(I ± σ)` and the factors of 1/2 and
//! the squared norm 2 are divided out at the end, so every probability comes
//! out as an exact dyadic rational.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::state_space::{Axis, MeasurementContext, Particle, Sign, Site, Triad};

type GaussInt = Complex<i64>;

/// Unnormalized GHZ vector over the z basis; particle 1 is the most
/// significant bit and bit value 0 means `+1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhzVector {
    amplitudes: [GaussInt; 8],
}

impl GhzVector {
    pub const SQUARED_NORM: i64 = 2;

    pub fn new() -> GhzVector {
        let mut amplitudes = [GaussInt::new(0, 0); 8];
        amplitudes[0b000] = GaussInt::new(1, 0);
        amplitudes[0b111] = GaussInt::new(-1, 0);
        GhzVector { amplitudes }
    }

    pub fn amplitudes(&self) -> &[GaussInt; 8] {
        &self.amplitudes
    }

    pub fn squared_norm(&self) -> i64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

impl Default for GhzVector {
    fn default() -> Self {
        GhzVector::new()
    }
}

fn bit_of(particle: Particle) -> usize {
    2 - particle.index()
}

/// Applies `(I + sign * σ_axis)` on one qubit.
fn apply_unscaled_projector(v: &[GaussInt; 8], site: Site, sign: Sign) -> [GaussInt; 8] {
    let bit = bit_of(site.particle);
    let s = i64::from(sign.value());
    let i = GaussInt::new(0, 1);
    let mut out = *v;
    for (idx, amp) in v.iter().enumerate() {
        let down = idx >> bit & 1 == 1;
        let flipped = idx ^ (1 << bit);
        match site.axis {
            // σx|b> = |1-b>
            Axis::X => out[flipped] += amp * s,
            // σy|0> = i|1>, σy|1> = -i|0>
            Axis::Y => {
                let phase = if down { -i } else { i };
                out[flipped] += amp * phase * s;
            }
            // σz|b> = (-1)^b |b>
            Axis::Z => out[idx] += amp * if down { -s } else { s },
        }
    }
    out
}

/// A compatible set of measurements together with one outcome per selected site.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutcomeAssignment {
    context: MeasurementContext,
    outcomes: Vec<Sign>,
}

impl OutcomeAssignment {
    /// `outcomes` follow the order of `context.sites()`.
    pub fn new(context: MeasurementContext, outcomes: Vec<Sign>) -> Result<OutcomeAssignment> {
        if outcomes.len() != context.len() {
            return Err(Error::OutcomeMismatch(format!(
                "context {context} has {} sites but {} outcomes were given",
                context.len(),
                outcomes.len()
            )));
        }
        Ok(OutcomeAssignment { context, outcomes })
    }

    pub fn from_pairs(pairs: &[(Site, Sign)]) -> Result<OutcomeAssignment> {
        let mut pairs = pairs.to_vec();
        pairs.sort_by_key(|(s, _)| s.particle);
        let sites: Vec<Site> = pairs.iter().map(|(s, _)| *s).collect();
        let context = MeasurementContext::from_sites(&sites)?;
        OutcomeAssignment::new(context, pairs.into_iter().map(|(_, o)| o).collect())
    }

    pub fn context(&self) -> &MeasurementContext {
        &self.context
    }

    pub fn outcomes(&self) -> &[Sign] {
        &self.outcomes
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Site, Sign)> + '_ {
        self.context.sites().into_iter().zip(self.outcomes.iter().copied())
    }

    /// Every outcome assignment on `context`.
    pub fn all_for(context: MeasurementContext) -> Vec<OutcomeAssignment> {
        context
            .outcome_patterns()
            .into_iter()
            .map(|outcomes| OutcomeAssignment { context, outcomes })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct OutcomeAssignmentJson {
    sites: Vec<(String, u8)>,
    outcomes: Vec<i64>,
}

impl Serialize for OutcomeAssignment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        OutcomeAssignmentJson {
            sites: self
                .context
                .sites()
                .iter()
                .map(|s| (s.axis.letter().to_string(), s.particle.get()))
                .collect(),
            outcomes: self.outcomes.iter().map(|o| i64::from(o.value())).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OutcomeAssignment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = OutcomeAssignmentJson::deserialize(deserializer)?;
        if raw.sites.len() != raw.outcomes.len() {
            return Err(D::Error::custom("sites and outcomes differ in length"));
        }
        let pairs = raw
            .sites
            .iter()
            .zip(&raw.outcomes)
            .map(|((axis, p), &o)| {
                let site: Site = format!("{axis}{p}").parse()?;
                Ok((site, Sign::from_value(o)?))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        OutcomeAssignment::from_pairs(&pairs).map_err(D::Error::custom)
    }
}

/// `<ψ|Π|ψ> / <ψ|ψ>` for the product of the spin eigenprojectors of the assignment.
pub fn qm_probability(assign: &OutcomeAssignment) -> Rational {
    let psi = GhzVector::new();
    let mut v = *psi.amplitudes();
    let mut halvings = 0u32;
    for (site, sign) in assign.pairs() {
        v = apply_unscaled_projector(&v, site, sign);
        halvings += 1;
    }
    let inner: GaussInt = psi
        .amplitudes()
        .iter()
        .zip(v.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert_eq!(inner.im, 0, "expectation of a projector must be real");
    Rational::new(inner.re, psi.squared_norm() << halvings)
}

/// Closed form `(1 ± product)/8` for the four triad measurements.
pub fn ghz_triad_probability(triad: Triad, outcomes: [Sign; 3]) -> Rational {
    let product = outcomes[0] * outcomes[1] * outcomes[2];
    if product == triad.required_sign() {
        Rational::new(1, 4)
    } else {
        Rational::zero()
    }
}

/// Which verbal rule produced a [`rule_table_probability`] value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Single,
    PairZz,
    Pair,
    TripleZzz,
    TripleOneZ,
    Triad,
    TripleNoZ,
    /// Two z sites plus one other: answered by the state vector.
    StateVector,
}

/// The probability dictated by the verbal rule list for GHZ correlations,
/// together with the rule that fired.
pub fn rule_table(assign: &OutcomeAssignment) -> (Rational, Rule) {
    let sites = assign.context().sites();
    let outs = assign.outcomes();
    let z_count = sites.iter().filter(|s| s.is_z()).count();
    let all_same = outs.windows(2).all(|w| w[0] == w[1]);
    match (sites.len(), z_count) {
        (1, _) => (Rational::new(1, 2), Rule::Single),
        (2, 2) => (if all_same { Rational::new(1, 2) } else { Rational::zero() }, Rule::PairZz),
        (2, _) => (Rational::new(1, 4), Rule::Pair),
        (3, 3) => (if all_same { Rational::new(1, 2) } else { Rational::zero() }, Rule::TripleZzz),
        (3, 2) => (qm_probability(assign), Rule::StateVector),
        (3, 1) => (Rational::new(1, 8), Rule::TripleOneZ),
        (3, 0) => match assign.context().triad() {
            Some(t) => (ghz_triad_probability(t, [outs[0], outs[1], outs[2]]), Rule::Triad),
            None => (Rational::new(1, 8), Rule::TripleNoZ),
        },
        _ => unreachable!("contexts hold one to three sites"),
    }
}

pub fn rule_table_probability(assign: &OutcomeAssignment) -> Rational {
    rule_table(assign).0
}
