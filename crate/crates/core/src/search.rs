//! Exhaustive depth-first search for models under a declarative constraint
//! profile.
//!
//! The search assigns a family of d-distributions to each unit (a partition
//! element, or a single state when per-element uniformity is off). Units are
//! visited in canonical order and each unit's families are produced in
//! lexicographic order, so the stream of models is lexicographic in the
//! serialized families. Candidate d-distributions are filtered by DM before
//! descending; complete assignments are checked against QM on single sites,
//! then pairs, then triples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{census, Census, DDistribution, Model, SCHEMA_VERSION};
use crate::rational::Rational;
use crate::state_space::{
    classify, enumerate_ghz_microstates, MicroState, PartitionElement, Site,
};
use crate::verify::{passes_ac, Check, Failure, VerificationReport};

/// Inclusive bounds on the number of d-distributions per state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DdistRange {
    #[serde(default = "one")]
    pub min: usize,
    #[serde(default)]
    pub max: Option<usize>,
}

fn one() -> usize {
    1
}

impl DdistRange {
    pub fn exactly(n: usize) -> DdistRange {
        DdistRange { min: n, max: Some(n) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpec {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    /// Exact number of U flags in every searched d-distribution.
    #[serde(default)]
    pub failure_count: Option<usize>,
    #[serde(default)]
    pub z_always_detected: bool,
    #[serde(default)]
    pub ddists_per_state: Option<DdistRange>,
    #[serde(default = "yes")]
    pub per_element_uniformity: bool,
    #[serde(default)]
    pub limit: Option<usize>,
    /// Elements whose family is fixed in advance, as lists of U-site sets.
    /// Pinned families bypass `failure_count` and `ddists_per_state` but must
    /// still satisfy DM.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pinned: BTreeMap<PartitionElement, Vec<Vec<Site>>>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn yes() -> bool {
    true
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            schema_version: SCHEMA_VERSION,
            failure_count: None,
            z_always_detected: false,
            ddists_per_state: None,
            per_element_uniformity: true,
            limit: None,
            pinned: BTreeMap::new(),
        }
    }
}

impl SearchSpec {
    pub fn is_bounded(&self) -> bool {
        self.failure_count.is_some()
            || self.ddists_per_state.and_then(|r| r.max).is_some()
            || self.limit.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_bounded() {
            return Err(Error::UnboundedSearch);
        }
        if let Some(r) = self.ddists_per_state {
            if r.min == 0 {
                return Err(Error::InvalidSearchSpec("ddists_per_state.min must be at least 1".into()));
            }
            if r.max.is_some_and(|m| m < r.min) {
                return Err(Error::InvalidSearchSpec("ddists_per_state.max is below min".into()));
            }
        }
        if self.failure_count.is_some_and(|f| f > 9) {
            return Err(Error::InvalidSearchSpec("failure_count exceeds the 9 sites".into()));
        }
        for (e, fam) in &self.pinned {
            if fam.is_empty() {
                return Err(Error::InvalidSearchSpec(format!("pinned family for {e} is empty")));
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<SearchSpec> {
        Ok(serde_json::from_str(s)?)
    }

    fn pinned_family(&self, element: PartitionElement) -> Option<Vec<DDistribution>> {
        self.pinned.get(&element).map(|fam| {
            let mut v: Vec<DDistribution> =
                fam.iter().map(|u| DDistribution::with_undetected(u.iter().copied())).collect();
            v.sort();
            v.dedup();
            v
        })
    }

    /// d-distributions allowed for states of `element`, sorted, DM-feasible.
    pub fn candidates(&self, element: PartitionElement) -> Vec<DDistribution> {
        let allowed: Vec<Site> = Site::ALL
            .into_iter()
            .filter(|s| !(self.z_always_detected && s.is_z()))
            .collect();
        let mut out: Vec<DDistribution> = (0u32..1 << allowed.len())
            .filter(|mask| self.failure_count.is_none_or(|f| mask.count_ones() as usize == f))
            .map(|mask| {
                DDistribution::with_undetected(
                    allowed.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| *s),
                )
            })
            .filter(|d| dm_feasible(*d, element))
            .collect();
        out.sort();
        out
    }

    /// True if the search space contains `model` and it satisfies AC.
    pub fn admits(&self, model: &Model) -> bool {
        if self.validate().is_err() {
            return false;
        }
        for e in PartitionElement::ALL {
            if self.per_element_uniformity && model.element_family(e).is_none() {
                return false;
            }
        }
        let range = self.range();
        for (_, e, dds) in model.entries() {
            let mut fam = dds.to_vec();
            fam.sort();
            match self.pinned_family(e) {
                Some(p) => {
                    if fam != p || !p.iter().all(|d| dm_feasible(*d, e)) {
                        return false;
                    }
                }
                None => {
                    let cands = self.candidates(e);
                    if fam.len() < range.min
                        || range.max.is_some_and(|m| fam.len() > m)
                        || !fam.iter().all(|d| cands.binary_search(d).is_ok())
                    {
                        return false;
                    }
                }
            }
        }
        passes_ac(model)
    }

    fn range(&self) -> DdistRange {
        self.ddists_per_state.unwrap_or(DdistRange { min: 1, max: None })
    }
}

fn dm_feasible(dd: DDistribution, element: PartitionElement) -> bool {
    element
        .violated_triads()
        .into_iter()
        .all(|t| t.sites().iter().any(|&s| !dd.is_detected(s)))
}

/// Lexicographic enumeration of index subsets `i0 < i1 < ...` of `0..n`
/// with `min <= len <= max`; prefixes come before their extensions.
#[derive(Clone, Debug)]
struct SubsetCursor {
    n: usize,
    min: usize,
    max: usize,
    seq: Vec<usize>,
    started: bool,
}

impl SubsetCursor {
    fn new(n: usize, min: usize, max: usize) -> Self {
        SubsetCursor { n, min, max: max.min(n), seq: Vec::new(), started: false }
    }

    fn step(&mut self) -> bool {
        if !self.started {
            self.started = true;
            if self.n == 0 || self.max == 0 {
                return false;
            }
            self.seq.push(0);
            return true;
        }
        let last = *self.seq.last().expect("nonempty while running");
        if self.seq.len() < self.max && last + 1 < self.n {
            self.seq.push(last + 1);
            return true;
        }
        while let Some(x) = self.seq.pop() {
            if x + 1 < self.n {
                self.seq.push(x + 1);
                return true;
            }
        }
        false
    }

    fn next_subset(&mut self) -> Option<&[usize]> {
        loop {
            if !self.step() {
                return None;
            }
            if self.seq.len() >= self.min {
                return Some(&self.seq);
            }
        }
    }
}

struct Unit {
    states: Vec<usize>,
    options: UnitOptions,
}

enum UnitOptions {
    Pinned(Vec<DDistribution>),
    Free { candidates: Vec<DDistribution>, min: usize, max: usize },
}

enum Cursor {
    Pinned { used: bool },
    Free(SubsetCursor),
}

/// Lazy stream of models produced by [`search_models`].
pub struct ModelSearch {
    units: Vec<Unit>,
    states: Vec<MicroState>,
    limit: Option<usize>,
    cursors: Vec<Cursor>,
    assigned: Vec<Vec<DDistribution>>,
    started: bool,
    done: bool,
    emitted: usize,
}

impl ModelSearch {
    fn new(spec: &SearchSpec) -> Result<ModelSearch> {
        spec.validate()?;
        let states = enumerate_ghz_microstates();
        let elements: Vec<PartitionElement> =
            states.iter().map(classify).collect::<Result<_>>()?;
        let range = spec.range();
        let options_for = |e: PartitionElement| match spec.pinned_family(e) {
            Some(p) => UnitOptions::Pinned(p),
            None => {
                let candidates = spec.candidates(e);
                let max = range.max.unwrap_or(candidates.len());
                UnitOptions::Free { candidates, min: range.min, max }
            }
        };
        let units: Vec<Unit> = if spec.per_element_uniformity {
            PartitionElement::ALL
                .into_iter()
                .map(|e| Unit {
                    states: (0..states.len()).filter(|&i| elements[i] == e).collect(),
                    options: options_for(e),
                })
                .collect()
        } else {
            (0..states.len())
                .map(|i| Unit { states: vec![i], options: options_for(elements[i]) })
                .collect()
        };
        let infeasible = units.iter().any(|u| match &u.options {
            UnitOptions::Pinned(p) => !p.iter().all(|d| dm_feasible(*d, elements[u.states[0]])),
            UnitOptions::Free { candidates, min, max } => candidates.len() < *min || *max < *min,
        });
        Ok(ModelSearch {
            units,
            states,
            limit: spec.limit,
            cursors: Vec::new(),
            assigned: Vec::new(),
            started: false,
            done: infeasible,
            emitted: 0,
        })
    }

    fn cursor_for(&self, depth: usize) -> Cursor {
        match &self.units[depth].options {
            UnitOptions::Pinned(_) => Cursor::Pinned { used: false },
            UnitOptions::Free { candidates, min, max } => {
                Cursor::Free(SubsetCursor::new(candidates.len(), *min, *max))
            }
        }
    }

    fn advance(&mut self, depth: usize) -> Option<Vec<DDistribution>> {
        let unit = &self.units[depth];
        match (&mut self.cursors[depth], &unit.options) {
            (Cursor::Pinned { used }, UnitOptions::Pinned(p)) => {
                if *used {
                    None
                } else {
                    *used = true;
                    Some(p.clone())
                }
            }
            (Cursor::Free(c), UnitOptions::Free { candidates, .. }) => {
                c.next_subset().map(|idx| idx.iter().map(|&i| candidates[i]).collect())
            }
            _ => unreachable!("cursor kind follows unit kind"),
        }
    }

    fn build(&self) -> Model {
        let mut per_state: Vec<Vec<DDistribution>> = vec![Vec::new(); self.states.len()];
        for (unit, fam) in self.units.iter().zip(&self.assigned) {
            for &i in &unit.states {
                per_state[i] = fam.clone();
            }
        }
        let entries = self.states.iter().copied().zip(per_state).collect();
        Model::new(format!("search-{}", self.emitted + 1), entries)
            .expect("search assigns a nonempty distinct family to every state")
    }
}

impl Iterator for ModelSearch {
    type Item = Model;

    fn next(&mut self) -> Option<Model> {
        if self.done || self.limit.is_some_and(|l| self.emitted >= l) {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.units.is_empty() {
                self.done = true;
                return None;
            }
            self.cursors.push(self.cursor_for(0));
        }
        loop {
            let depth = self.cursors.len();
            if depth == 0 {
                self.done = true;
                return None;
            }
            let top = depth - 1;
            match self.advance(top) {
                None => {
                    self.cursors.pop();
                    self.assigned.truncate(top);
                }
                Some(fam) => {
                    self.assigned.truncate(top);
                    self.assigned.push(fam);
                    if depth < self.units.len() {
                        let c = self.cursor_for(depth);
                        self.cursors.push(c);
                        continue;
                    }
                    let model = self.build();
                    if passes_ac(&model) {
                        self.emitted += 1;
                        return Some(model);
                    }
                }
            }
        }
    }
}

/// Streams every model in the spec's space that satisfies DM and AC, in
/// canonical order, up to `spec.limit`. An empty stream means the spec is
/// unsatisfiable.
pub fn search_models(spec: &SearchSpec) -> Result<ModelSearch> {
    ModelSearch::new(spec)
}

/// Expected census values; `None` fields are not compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedCounts {
    #[serde(default)]
    pub ddistributions: Option<usize>,
    #[serde(default)]
    pub mspecifications: Option<usize>,
    #[serde(default)]
    pub combinations: Option<usize>,
}

impl From<Census> for ExpectedCounts {
    fn from(c: Census) -> Self {
        ExpectedCounts {
            ddistributions: Some(c.ddistributions),
            mspecifications: Some(c.mspecifications),
            combinations: Some(c.combinations),
        }
    }
}

pub fn verify_counts(model: &Model, expected: &ExpectedCounts) -> VerificationReport {
    let got = census(model);
    let mut failures = Vec::new();
    let mut checked = 0;
    for (name, want, have) in [
        ("ddistributions", expected.ddistributions, got.ddistributions),
        ("mspecifications", expected.mspecifications, got.mspecifications),
        ("combinations", expected.combinations, got.combinations),
    ] {
        let Some(want) = want else { continue };
        checked += 1;
        if want != have {
            failures.push(Failure {
                expected: Some(Rational::from_integer(want as i64)),
                actual: Some(Rational::from_integer(have as i64)),
                ..Failure::rule(format!("counts:{name}"))
            });
        }
    }
    VerificationReport::new(Check::Counts, model.name(), checked, failures)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(n: usize, min: usize, max: usize) -> Vec<Vec<usize>> {
        let mut c = SubsetCursor::new(n, min, max);
        let mut out = Vec::new();
        while let Some(s) = c.next_subset() {
            out.push(s.to_vec());
        }
        out
    }

    #[test]
    fn subset_cursor_is_lexicographic_and_complete() {
        let all = collect(4, 1, 4);
        assert_eq!(all.len(), 15);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all[0], vec![0]);
        assert_eq!(all[1], vec![0, 1]);
        let pairs = collect(4, 2, 2);
        assert_eq!(pairs, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert!(collect(0, 1, 1).is_empty());
        assert!(collect(3, 4, 4).is_empty());
    }

    #[test]
    fn candidate_counts() {
        let spec = SearchSpec { failure_count: Some(3), z_always_detected: true, ..Default::default() };
        assert_eq!(spec.candidates(PartitionElement::I0).len(), 17);
        assert_eq!(spec.candidates(PartitionElement::I_II_III).len(), 19);
        let one = SearchSpec { failure_count: Some(1), z_always_detected: true, ..Default::default() };
        assert!(one.candidates(PartitionElement::IV0).is_empty());
        assert_eq!(one.candidates(PartitionElement::I_III_IV).len(), 3);
    }

    #[test]
    fn unbounded_specs_are_rejected() {
        assert!(matches!(search_models(&SearchSpec::default()), Err(Error::UnboundedSearch)));
        let bad = SearchSpec {
            ddists_per_state: Some(DdistRange { min: 2, max: Some(1) }),
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidSearchSpec(_))));
    }

    #[test]
    fn spec_json_defaults() {
        let spec = SearchSpec::from_json_str(r#"{"failure_count": 1, "z_always_detected": true}"#).unwrap();
        assert!(spec.per_element_uniformity);
        assert_eq!(spec.limit, None);
        let pinned = SearchSpec::from_json_str(
            r#"{"failure_count": 1, "pinned": {"I0": [["x1","y1","z1","x2","y2","z2","x3","y3","z3"]]}}"#,
        )
        .unwrap();
        assert_eq!(
            pinned.pinned_family(PartitionElement::I0),
            Some(vec![DDistribution::all_undetected()])
        );
        assert!(SearchSpec::from_json_str(r#"{"pinned": {"I9": []}}"#).is_err());
    }
}
