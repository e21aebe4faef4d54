//! Finite local detection models: each GHZ-compatible microstate carries a
//! nonempty set of detection distributions, with a uniform prior over states
//! and a uniform choice among a state's distributions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qm::OutcomeAssignment;
use crate::rational::Rational;
use crate::state_space::{
    classify, enumerate_ghz_microstates, ghz_index, Axis, MeasurementContext, MicroState,
    PartitionElement, Sign, Site, Triad, NUM_GHZ_STATES, NUM_SITES,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Detection flag of one site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flag {
    D,
    U,
}

impl Flag {
    pub fn letter(self) -> &'static str {
        match self {
            Flag::D => "D",
            Flag::U => "U",
        }
    }
}

impl FromStr for Flag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Flag> {
        match s {
            "D" => Ok(Flag::D),
            "U" => Ok(Flag::U),
            other => Err(Error::InvalidFlag(other.to_string())),
        }
    }
}

/// Detection distribution: one D/U flag per site.
///
/// Both outcomes of an observable share the site's flag, so a detection
/// pattern can never distinguish `+1` from `-1` of the same observable.
/// Stored as a bitmask of undetected sites with site 0 in the highest bit,
/// which makes the numeric order equal to the lexicographic order of the
/// `D`/`U` string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DDistribution(u16);

impl DDistribution {
    const FULL: u16 = (1 << NUM_SITES) - 1;

    fn bit(site: Site) -> u16 {
        1 << (NUM_SITES - 1 - site.index())
    }

    pub fn all_detected() -> DDistribution {
        DDistribution(0)
    }

    pub fn all_undetected() -> DDistribution {
        DDistribution(Self::FULL)
    }

    pub fn with_undetected<I: IntoIterator<Item = Site>>(sites: I) -> DDistribution {
        DDistribution(sites.into_iter().fold(0, |m, s| m | Self::bit(s)))
    }

    pub fn from_flags(flags: &[Flag]) -> Result<DDistribution> {
        if flags.len() != NUM_SITES {
            return Err(Error::WrongLength { expected: NUM_SITES, got: flags.len() });
        }
        Ok(DDistribution::with_undetected(
            Site::ALL.into_iter().zip(flags).filter(|(_, f)| **f == Flag::U).map(|(s, _)| s),
        ))
    }

    pub fn flag(self, site: Site) -> Flag {
        if self.0 & Self::bit(site) != 0 {
            Flag::U
        } else {
            Flag::D
        }
    }

    pub fn flags(self) -> [Flag; NUM_SITES] {
        Site::ALL.map(|s| self.flag(s))
    }

    pub fn is_detected(self, site: Site) -> bool {
        self.flag(site) == Flag::D
    }

    /// True when every site of the context is detected.
    pub fn detects(self, context: &MeasurementContext) -> bool {
        context.sites().into_iter().all(|s| self.is_detected(s))
    }

    pub fn undetected_sites(self) -> Vec<Site> {
        Site::ALL.into_iter().filter(|&s| !self.is_detected(s)).collect()
    }

    pub fn undetected_count(self) -> usize {
        self.0.count_ones() as usize
    }
}

impl fmt::Display for DDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for flag in self.flags() {
            f.write_str(flag.letter())?;
        }
        Ok(())
    }
}

impl Serialize for DDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.flags().map(Flag::letter).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = Vec::<String>::deserialize(deserializer)?;
        let flags = raw
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Flag>>>()
            .map_err(D::Error::custom)?;
        DDistribution::from_flags(&flags).map_err(D::Error::custom)
    }
}

/// Registered outcomes per site, `0` where the site is undetected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MSpecification([i8; NUM_SITES]);

impl MSpecification {
    pub fn values(&self) -> &[i8; NUM_SITES] {
        &self.0
    }

    pub fn get(&self, site: Site) -> i8 {
        self.0[site.index()]
    }

    pub fn is_all_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    /// Registered outcomes on the context, or `None` if some site is unregistered.
    pub fn outcomes_on(&self, context: &MeasurementContext) -> Option<Vec<Sign>> {
        context
            .sites()
            .into_iter()
            .map(|s| match self.get(s) {
                1 => Some(Sign::Plus),
                -1 => Some(Sign::Minus),
                _ => None,
            })
            .collect()
    }
}

impl fmt::Display for MSpecification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(if i % 3 == 0 { ";" } else { "," })?;
            }
            match v {
                1 => f.write_str("+1")?,
                -1 => f.write_str("-1")?,
                _ => f.write_str("0")?,
            }
        }
        f.write_str(")")
    }
}

/// Outcomes that a state displays under a detection distribution.
pub fn m_specification(state: &MicroState, dd: DDistribution) -> MSpecification {
    let mut values = state.values();
    for site in Site::ALL {
        if !dd.is_detected(site) {
            values[site.index()] = 0;
        }
    }
    MSpecification(values)
}

/// One slot of a combination: an x or y outcome, or `D` for a defective slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Plus,
    Minus,
    Defective,
}

impl Slot {
    pub fn token(self) -> &'static str {
        match self {
            Slot::Plus => "+1",
            Slot::Minus => "-1",
            Slot::Defective => "D",
        }
    }
}

/// x/y sites in slot order: x1, y1, x2, y2, x3, y3.
pub fn combination_sites() -> [Site; 6] {
    let xy: Vec<Site> = Site::ALL.into_iter().filter(|s| !s.is_z()).collect();
    [xy[0], xy[1], xy[2], xy[3], xy[4], xy[5]]
}

fn slot_index(site: Site) -> Option<usize> {
    match site.axis {
        Axis::Z => None,
        a => Some(site.particle.index() * 2 + a.index()),
    }
}

/// Prism-model hidden variable: z outcomes dropped, unregistered slots marked `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Combination {
    Slots([Slot; 6]),
    /// Image of the all-zero m-specification.
    AllUndetected,
}

impl Combination {
    /// Number of triads whose three slots all carry outcomes.
    pub fn surviving_triads(&self) -> usize {
        match self {
            Combination::AllUndetected => 0,
            Combination::Slots(slots) => Triad::ALL
                .into_iter()
                .filter(|t| {
                    t.sites()
                        .iter()
                        .all(|&s| slots[slot_index(s).expect("triads use x/y sites")] != Slot::Defective)
                })
                .count(),
        }
    }

    pub fn tokens(&self) -> Option<[&'static str; 6]> {
        match self {
            Combination::Slots(slots) => Some(slots.map(Slot::token)),
            Combination::AllUndetected => None,
        }
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tokens() {
            Some(t) => write!(f, "({})", t.join(",")),
            None => f.write_str("(all undetected)"),
        }
    }
}

pub fn to_combination(mspec: &MSpecification) -> Combination {
    if mspec.is_all_zero() {
        return Combination::AllUndetected;
    }
    let mut slots = [Slot::Defective; 6];
    for site in combination_sites() {
        let i = slot_index(site).expect("x/y site");
        slots[i] = match mspec.get(site) {
            1 => Slot::Plus,
            -1 => Slot::Minus,
            _ => Slot::Defective,
        };
    }
    Combination::Slots(slots)
}

/// Subset of states to average over in [`detection_probability`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Restriction {
    State(MicroState),
    Element(PartitionElement),
}

impl Restriction {
    fn admits(&self, state: &MicroState, element: PartitionElement) -> bool {
        match self {
            Restriction::State(s) => s == state,
            Restriction::Element(e) => *e == element,
        }
    }
}

/// A finite model: a nonempty, duplicate-free list of d-distributions for
/// every one of the 128 GHZ-compatible states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    name: String,
    states: Vec<MicroState>,
    elements: Vec<PartitionElement>,
    ddists: Vec<Vec<DDistribution>>,
}

impl Model {
    /// Validates coverage, non-emptiness and distinctness. Families are
    /// stored sorted; their order carries no meaning.
    pub fn new(name: impl Into<String>, entries: Vec<(MicroState, Vec<DDistribution>)>) -> Result<Model> {
        let name = name.into();
        let states = enumerate_ghz_microstates();
        let mut slots: Vec<Option<Vec<DDistribution>>> = vec![None; NUM_GHZ_STATES];
        for (state, mut dds) in entries {
            let idx = ghz_index(&state).ok_or_else(|| {
                Error::InvalidModel(format!("state {state} is not GHZ-compatible"))
            })?;
            if slots[idx].is_some() {
                return Err(Error::InvalidModel(format!("state {state} listed twice")));
            }
            if dds.is_empty() {
                return Err(Error::InvalidModel(format!("state {state} has no d-distribution")));
            }
            let distinct: BTreeSet<_> = dds.iter().collect();
            if distinct.len() != dds.len() {
                return Err(Error::InvalidModel(format!(
                    "state {state} repeats a d-distribution"
                )));
            }
            dds.sort();
            slots[idx] = Some(dds);
        }
        let missing = slots.iter().filter(|s| s.is_none()).count();
        if missing > 0 {
            return Err(Error::InvalidModel(format!(
                "{missing} GHZ-compatible states have no entry"
            )));
        }
        let elements = states
            .iter()
            .map(classify)
            .collect::<Result<Vec<_>>>()?;
        Ok(Model { name, states, elements, ddists: slots.into_iter().flatten().collect() })
    }

    /// Builds a model by asking `f` for each state's d-distributions.
    pub fn from_fn<F>(name: impl Into<String>, mut f: F) -> Result<Model>
    where
        F: FnMut(&MicroState, PartitionElement) -> Vec<DDistribution>,
    {
        let entries = enumerate_ghz_microstates()
            .into_iter()
            .map(|s| {
                let e = classify(&s)?;
                Ok((s, f(&s, e)))
            })
            .collect::<Result<Vec<_>>>()?;
        Model::new(name, entries)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Model {
        self.name = name.into();
        self
    }

    /// `(state, element, d-distributions)` in canonical state order.
    pub fn entries(&self) -> impl Iterator<Item = (&MicroState, PartitionElement, &[DDistribution])> {
        self.states
            .iter()
            .zip(&self.elements)
            .zip(&self.ddists)
            .map(|((s, e), d)| (s, *e, d.as_slice()))
    }

    pub fn ddists_of(&self, state: &MicroState) -> Option<&[DDistribution]> {
        ghz_index(state).map(|i| self.ddists[i].as_slice())
    }

    /// Each state's d-distributions as a sorted set, if all states of
    /// `element` share the same set.
    pub fn element_family(&self, element: PartitionElement) -> Option<BTreeSet<DDistribution>> {
        let mut family: Option<BTreeSet<DDistribution>> = None;
        for (_, e, dds) in self.entries() {
            if e != element {
                continue;
            }
            let set: BTreeSet<_> = dds.iter().copied().collect();
            match &family {
                None => family = Some(set),
                Some(f) if *f == set => {}
                Some(_) => return None,
            }
        }
        family
    }

    /// Every `(state, d-distribution, weight)` triple; weights sum to 1.
    pub fn weighted_pairs(&self) -> impl Iterator<Item = (&MicroState, DDistribution, Rational)> + '_ {
        self.entries().flat_map(|(s, _, dds)| {
            let w = Rational::new(1, (NUM_GHZ_STATES * dds.len()) as i64);
            dds.iter().map(move |&d| (s, d, w.clone()))
        })
    }

    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            states: self
                .entries()
                .map(|(s, _, dds)| StateEntryJson { values: *s, ddists: dds.to_vec() })
                .collect(),
        }
    }

    pub fn from_json(json: ModelJson) -> Result<Model> {
        Model::new(json.name, json.states.into_iter().map(|e| (e.values, e.ddists)).collect())
    }

    pub fn from_json_str(s: &str) -> Result<Model> {
        Model::from_json(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("model serializes")
    }
}

/// On-disk model schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub name: String,
    pub states: Vec<StateEntryJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEntryJson {
    pub values: MicroState,
    pub ddists: Vec<DDistribution>,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Probability that every site of `context` is detected, averaged uniformly
/// over the (restricted) states and over each state's d-distributions.
pub fn detection_probability(
    model: &Model,
    context: &MeasurementContext,
    restrict: Option<Restriction>,
) -> Rational {
    let mut total = Rational::zero();
    let mut n_states = 0i64;
    for (state, element, dds) in model.entries() {
        if let Some(r) = &restrict {
            if !r.admits(state, element) {
                continue;
            }
        }
        n_states += 1;
        let hits = dds.iter().filter(|d| d.detects(context)).count();
        total += Rational::new(hits as i64, dds.len() as i64);
    }
    if n_states == 0 {
        return Rational::zero();
    }
    total * Rational::new(1, n_states)
}

/// Weighted mass of detected pairs on a context, split by outcome pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextHistogram {
    pub detected: Rational,
    pub by_outcome: BTreeMap<Vec<Sign>, Rational>,
}

impl ContextHistogram {
    pub fn conditional(&self, outcomes: &[Sign]) -> Option<Rational> {
        let m = self.by_outcome.get(outcomes).cloned().unwrap_or_else(Rational::zero);
        m.checked_div(&self.detected)
    }
}

/// Enumerates every (state, d-distribution) pair once for the context.
pub fn context_histogram(model: &Model, context: &MeasurementContext) -> ContextHistogram {
    let mut detected = Rational::zero();
    let mut by_outcome: BTreeMap<Vec<Sign>, Rational> = BTreeMap::new();
    for (state, dd, w) in model.weighted_pairs() {
        let mspec = m_specification(state, dd);
        if let Some(outs) = mspec.outcomes_on(context) {
            detected += &w;
            *by_outcome.entry(outs).or_insert_with(Rational::zero) += w;
        }
    }
    ContextHistogram { detected, by_outcome }
}

/// Probability of the outcomes given that every site of the context is detected.
pub fn conditional_probability(model: &Model, assign: &OutcomeAssignment) -> Result<Rational> {
    context_histogram(model, assign.context())
        .conditional(assign.outcomes())
        .ok_or_else(|| Error::UndefinedConditional(assign.context().to_string()))
}

/// Detection probability times conditional probability; 0 for undetectable contexts.
pub fn total_probability(model: &Model, assign: &OutcomeAssignment) -> Rational {
    let detection = detection_probability(model, assign.context(), None);
    if detection.is_zero() {
        return Rational::zero();
    }
    let conditional = conditional_probability(model, assign).expect("detection is positive");
    detection * conditional
}

pub fn is_deterministic(model: &Model) -> bool {
    model.entries().all(|(_, _, dds)| dds.len() == 1)
}

/// Pushforward of the model measure onto combinations, including the
/// all-undetected marker when it has mass.
pub fn combination_distribution(model: &Model) -> BTreeMap<Combination, Rational> {
    let mut out: BTreeMap<Combination, Rational> = BTreeMap::new();
    for (state, dd, w) in model.weighted_pairs() {
        let c = to_combination(&m_specification(state, dd));
        *out.entry(c).or_insert_with(Rational::zero) += w;
    }
    out
}

/// Distinct-object counts of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub ddistributions: usize,
    /// Includes the all-zero m-specification when it occurs.
    pub mspecifications: usize,
    /// Excludes the all-undetected marker.
    pub combinations: usize,
}

pub fn census(model: &Model) -> Census {
    let mut dds = BTreeSet::new();
    let mut mspecs = BTreeSet::new();
    let mut combos = BTreeSet::new();
    for (state, _, list) in model.entries() {
        for &dd in list {
            dds.insert(dd);
            let m = m_specification(state, dd);
            mspecs.insert(m);
            let c = to_combination(&m);
            if c != Combination::AllUndetected {
                combos.insert(c);
            }
        }
    }
    Census { ddistributions: dds.len(), mspecifications: mspecs.len(), combinations: combos.len() }
}

/// How many (state, d-distribution) pairs produce each m-specification.
pub fn mspec_multiplicities(model: &Model) -> BTreeMap<MSpecification, usize> {
    let mut out = BTreeMap::new();
    for (state, _, list) in model.entries() {
        for &dd in list {
            *out.entry(m_specification(state, dd)).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn us(names: &[&str]) -> DDistribution {
        DDistribution::with_undetected(names.iter().map(|n| n.parse::<Site>().unwrap()))
    }

    #[test]
    fn ddistribution_flags() {
        let d = us(&["y1", "x2", "x3"]);
        assert_eq!(d.to_string(), "DUDUDDUDD");
        assert_eq!(d.undetected_count(), 3);
        assert!(d.detects(&"x1,y2,y3".parse().unwrap()));
        assert!(!d.detects(&"x1,x2".parse().unwrap()));
        let j = serde_json::to_string(&d).unwrap();
        let back: DDistribution = serde_json::from_str(&j).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<DDistribution>(r#"["D","D"]"#).is_err());
        assert!(serde_json::from_str::<DDistribution>(
            r#"["D","D","D","D","D","D","D","D","X"]"#
        )
        .is_err());
        assert!(DDistribution::all_detected() < DDistribution::all_undetected());
    }

    #[test]
    fn mspec_examples() {
        let plus = MicroState::all_plus();
        assert_eq!(m_specification(&plus, DDistribution::all_detected()).values(), &[1; 9]);
        assert!(m_specification(&plus, DDistribution::all_undetected()).is_all_zero());
        // an I0 state: i1=+1, j2=+1, j3=+1
        let s = MicroState::from_values(&[1, -1, 1, 1, 1, 1, 1, 1, 1]).unwrap();
        assert_eq!(classify(&s).unwrap(), PartitionElement::I0);
        let m = m_specification(&s, us(&["y1", "x2", "x3"]));
        assert_eq!(m.values(), &[1, 0, 1, 0, 1, 1, 0, 1, 1]);
    }

    #[test]
    fn combination_examples() {
        let m = MSpecification([1, 0, 1, 0, 1, 1, 0, 1, 1]);
        assert_eq!(to_combination(&m).to_string(), "(+1,D,D,+1,D,+1)");
        let m = MSpecification([0, 1, -1, 0, 1, -1, 0, 1, -1]);
        assert_eq!(to_combination(&m).to_string(), "(D,+1,D,+1,D,+1)");
        assert_eq!(to_combination(&MSpecification([0; 9])), Combination::AllUndetected);
        // z registered but every x/y slot defective is still an ordinary combination
        let m = MSpecification([0, 0, 1, 0, 0, 1, 0, 0, 1]);
        assert_eq!(to_combination(&m).to_string(), "(D,D,D,D,D,D)");
    }

    #[test]
    fn surviving_triads() {
        let c = to_combination(&MSpecification([1, 0, 1, 0, 1, 1, 0, 1, 1]));
        assert_eq!(c.surviving_triads(), 1);
        let c = to_combination(&MSpecification([1, 1, 1, 1, 1, 1, 1, 1, 1]));
        assert_eq!(c.surviving_triads(), 4);
        assert_eq!(Combination::AllUndetected.surviving_triads(), 0);
    }

    #[test]
    fn model_validation() {
        let all_d = Model::from_fn("all-D", |_, _| vec![DDistribution::all_detected()]).unwrap();
        assert!(is_deterministic(&all_d));
        assert!(matches!(
            Model::from_fn("empty", |_, _| vec![]),
            Err(Error::InvalidModel(_))
        ));
        assert!(matches!(
            Model::from_fn("dup", |_, _| vec![DDistribution::all_detected(); 2]),
            Err(Error::InvalidModel(_))
        ));
        let partial = vec![(MicroState::all_plus(), vec![DDistribution::all_detected()])];
        assert!(Model::new("partial", partial).is_err());
        let bad = MicroState::from_values(&[1, 1, 1, 1, 1, -1, 1, 1, 1]).unwrap();
        assert!(Model::new("bad", vec![(bad, vec![DDistribution::all_detected()])]).is_err());
    }

    #[test]
    fn json_roundtrip_and_undefined_conditional() {
        let m = Model::from_fn("z-only", |_, _| {
            vec![DDistribution::with_undetected(Site::ALL.into_iter().filter(|s| !s.is_z()))]
        })
        .unwrap();
        let back = Model::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(back, m);
        let a = OutcomeAssignment::new("x1".parse().unwrap(), vec![Sign::Plus]).unwrap();
        assert!(matches!(conditional_probability(&m, &a), Err(Error::UndefinedConditional(_))));
        assert_eq!(total_probability(&m, &a), Rational::zero());
        let z = OutcomeAssignment::new("z1,z2".parse().unwrap(), vec![Sign::Plus, Sign::Plus]).unwrap();
        assert_eq!(conditional_probability(&m, &z).unwrap(), Rational::new(1, 2));
    }
}
