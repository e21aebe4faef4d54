//! Sites, microscopic states, measurement contexts, and the partition of the
//! GHZ-compatible states induced by the four triad measurements.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of (axis, particle) sites.
pub const NUM_SITES: usize = 9;
/// Number of GHZ-compatible microstates.
pub const NUM_GHZ_STATES: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    fn from_letter(c: char) -> Option<Axis> {
        match c.to_ascii_lowercase() {
            'x' => Some(Axis::X),
            'y' => Some(Axis::Y),
            'z' => Some(Axis::Z),
            _ => None,
        }
    }
}

/// Particle label 1, 2 or 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Particle(u8);

impl Particle {
    pub const ALL: [Particle; 3] = [Particle(1), Particle(2), Particle(3)];

    pub fn new(n: u8) -> Option<Particle> {
        (1..=3).contains(&n).then_some(Particle(n))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }
}

/// One spin observable: an axis on a particle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    // field order gives the particle-major derived ordering
    pub particle: Particle,
    pub axis: Axis,
}

impl Site {
    /// All nine sites in canonical order: x1, y1, z1, x2, y2, z2, x3, y3, z3.
    pub const ALL: [Site; NUM_SITES] = {
        let mut out = [Site { particle: Particle(1), axis: Axis::X }; NUM_SITES];
        let mut i = 0;
        while i < NUM_SITES {
            let axis = match i % 3 {
                0 => Axis::X,
                1 => Axis::Y,
                _ => Axis::Z,
            };
            out[i] = Site { particle: Particle((i / 3) as u8 + 1), axis };
            i += 1;
        }
        out
    };

    pub fn new(axis: Axis, particle: Particle) -> Site {
        Site { particle, axis }
    }

    /// Position in canonical order.
    pub fn index(self) -> usize {
        self.particle.index() * 3 + self.axis.index()
    }

    pub fn from_index(i: usize) -> Site {
        Site::ALL[i]
    }

    pub fn is_z(self) -> bool {
        self.axis == Axis::Z
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.axis.letter(), self.particle.0)
    }
}

impl FromStr for Site {
    type Err = Error;

    fn from_str(s: &str) -> Result<Site> {
        let t = s.trim();
        let mut chars = t.chars();
        let (Some(a), Some(p), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::InvalidSite(s.to_string()));
        };
        let axis = Axis::from_letter(a).ok_or_else(|| Error::InvalidSite(s.to_string()))?;
        let particle = p
            .to_digit(10)
            .and_then(|d| Particle::new(d as u8))
            .ok_or_else(|| Error::InvalidSite(s.to_string()))?;
        Ok(Site::new(axis, particle))
    }
}

impl Serialize for Site {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The value of a dichotomic spin observable. Ordered with `Plus < Minus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::InvalidSign(other)),
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Accepts `+1`, `1`, `+`, `-1`, `-`.
impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Sign> {
        match s.trim() {
            "+1" | "1" | "+" => Ok(Sign::Plus),
            "-1" | "-" => Ok(Sign::Minus),
            other => Err(Error::InvalidOutcome(other.to_string())),
        }
    }
}

/// Hidden variable: one predetermined sign per site, `(i1,j1,k1; i2,j2,k2; i3,j3,k3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MicroState([Sign; NUM_SITES]);

impl MicroState {
    pub fn new(signs: [Sign; NUM_SITES]) -> MicroState {
        MicroState(signs)
    }

    pub fn from_values(values: &[i64]) -> Result<MicroState> {
        if values.len() != NUM_SITES {
            return Err(Error::WrongLength { expected: NUM_SITES, got: values.len() });
        }
        let mut signs = [Sign::Plus; NUM_SITES];
        for (slot, &v) in signs.iter_mut().zip(values) {
            *slot = Sign::from_value(v)?;
        }
        Ok(MicroState(signs))
    }

    pub fn all_plus() -> MicroState {
        MicroState([Sign::Plus; NUM_SITES])
    }

    pub fn get(&self, site: Site) -> Sign {
        self.0[site.index()]
    }

    pub fn signs(&self) -> &[Sign; NUM_SITES] {
        &self.0
    }

    pub fn values(&self) -> [i8; NUM_SITES] {
        self.0.map(Sign::value)
    }

    /// True when `k1 = k2 = k3`.
    pub fn is_ghz_compatible(&self) -> bool {
        let k = |p: u8| self.get(Site::new(Axis::Z, Particle(p)));
        k(1) == k(2) && k(2) == k(3)
    }

    pub fn ensure_ghz_compatible(&self) -> Result<()> {
        if self.is_ghz_compatible() {
            Ok(())
        } else {
            Err(Error::NotGhzCompatible(self.to_string()))
        }
    }
}

impl fmt::Display for MicroState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(if i % 3 == 0 { ";" } else { "," })?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for MicroState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.values().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MicroState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i64>::deserialize(deserializer)?;
        MicroState::from_values(&v).map_err(serde::de::Error::custom)
    }
}

/// Every sign assignment to the nine sites (512 states), in canonical order.
pub fn enumerate_all_microstates() -> Vec<MicroState> {
    (0u32..1 << NUM_SITES)
        .map(|bits| {
            let mut signs = [Sign::Plus; NUM_SITES];
            for (i, s) in signs.iter_mut().enumerate() {
                // site 0 is the most significant position
                if bits >> (NUM_SITES - 1 - i) & 1 == 1 {
                    *s = Sign::Minus;
                }
            }
            MicroState(signs)
        })
        .collect()
}

/// The 128 states with `k1 = k2 = k3`, in canonical order.
pub fn enumerate_ghz_microstates() -> Vec<MicroState> {
    enumerate_all_microstates()
        .into_iter()
        .filter(MicroState::is_ghz_compatible)
        .collect()
}

/// Position of a GHZ-compatible state in [`enumerate_ghz_microstates`].
pub fn ghz_index(state: &MicroState) -> Option<usize> {
    if !state.is_ghz_compatible() {
        return None;
    }
    // drop k2 and k3, then read the remaining 7 signs as a binary number
    let keep = [0, 1, 2, 3, 4, 6, 7];
    Some(
        keep.iter()
            .fold(0usize, |acc, &i| acc << 1 | usize::from(state.0[i] == Sign::Minus)),
    )
}

/// One of the four jointly measured triples of compatible observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Triad {
    I,
    II,
    III,
    IV,
}

impl Triad {
    pub const ALL: [Triad; 4] = [Triad::I, Triad::II, Triad::III, Triad::IV];

    /// Sites in particle order.
    pub fn sites(self) -> [Site; 3] {
        use Axis::{X, Y};
        let axes = match self {
            Triad::I => [X, Y, Y],
            Triad::II => [Y, X, Y],
            Triad::III => [Y, Y, X],
            Triad::IV => [X, X, X],
        };
        [
            Site::new(axes[0], Particle(1)),
            Site::new(axes[1], Particle(2)),
            Site::new(axes[2], Particle(3)),
        ]
    }

    /// Sign the product of the three outcomes must take.
    pub fn required_sign(self) -> Sign {
        match self {
            Triad::IV => Sign::Minus,
            _ => Sign::Plus,
        }
    }

    pub fn context(self) -> MeasurementContext {
        let [a, b, c] = self.sites().map(|s| Some(s.axis));
        MeasurementContext { selection: [a, b, c] }
    }

    pub fn label(self) -> &'static str {
        match self {
            Triad::I => "I",
            Triad::II => "II",
            Triad::III => "III",
            Triad::IV => "IV",
        }
    }

    /// The triad whose sites are exactly `sites`, if any.
    pub fn from_sites(sites: &[Site]) -> Option<Triad> {
        if sites.len() != 3 {
            return None;
        }
        let mut sorted = sites.to_vec();
        sorted.sort();
        Triad::ALL.into_iter().find(|t| t.sites().as_slice() == sorted.as_slice())
    }
}

impl fmt::Display for Triad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Triad {
    type Err = Error;
    fn from_str(s: &str) -> Result<Triad> {
        Triad::ALL
            .into_iter()
            .find(|t| t.label() == s.trim())
            .ok_or_else(|| Error::InvalidModel(format!("unknown triad {s:?}")))
    }
}

impl Serialize for Triad {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Triad {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Product of the state's values on the triad's sites.
pub fn triad_product(state: &MicroState, triad: Triad) -> Sign {
    let [a, b, c] = triad.sites();
    state.get(a) * state.get(b) * state.get(c)
}

pub fn satisfies(state: &MicroState, triad: Triad) -> bool {
    triad_product(state, triad) == triad.required_sign()
}

/// Element of the 8-block partition of the GHZ-compatible states.
///
/// `*0` blocks satisfy only their own triad; the intersections satisfy the
/// three listed triads and violate the remaining one.
#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PartitionElement {
    I0,
    II0,
    III0,
    IV0,
    I_II_III,
    I_II_IV,
    I_III_IV,
    II_III_IV,
}

impl PartitionElement {
    pub const ALL: [PartitionElement; 8] = [
        PartitionElement::I0,
        PartitionElement::II0,
        PartitionElement::III0,
        PartitionElement::IV0,
        PartitionElement::I_II_III,
        PartitionElement::I_II_IV,
        PartitionElement::I_III_IV,
        PartitionElement::II_III_IV,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PartitionElement::I0 => "I0",
            PartitionElement::II0 => "II0",
            PartitionElement::III0 => "III0",
            PartitionElement::IV0 => "IV0",
            PartitionElement::I_II_III => "I&II&III",
            PartitionElement::I_II_IV => "I&II&IV",
            PartitionElement::I_III_IV => "I&III&IV",
            PartitionElement::II_III_IV => "II&III&IV",
        }
    }

    pub fn satisfied_triads(self) -> Vec<Triad> {
        use Triad::*;
        match self {
            PartitionElement::I0 => vec![I],
            PartitionElement::II0 => vec![II],
            PartitionElement::III0 => vec![III],
            PartitionElement::IV0 => vec![IV],
            PartitionElement::I_II_III => vec![I, II, III],
            PartitionElement::I_II_IV => vec![I, II, IV],
            PartitionElement::I_III_IV => vec![I, III, IV],
            PartitionElement::II_III_IV => vec![II, III, IV],
        }
    }

    pub fn violated_triads(self) -> Vec<Triad> {
        let sat = self.satisfied_triads();
        Triad::ALL.into_iter().filter(|t| !sat.contains(t)).collect()
    }

    pub fn satisfies(self, triad: Triad) -> bool {
        self.satisfied_triads().contains(&triad)
    }

    /// True for the four blocks that satisfy a single triad.
    pub fn is_starred(self) -> bool {
        self.satisfied_triads().len() == 1
    }

    fn from_satisfied(sat: &[Triad]) -> Option<PartitionElement> {
        PartitionElement::ALL
            .into_iter()
            .find(|e| e.satisfied_triads().as_slice() == sat)
    }
}

impl fmt::Display for PartitionElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PartitionElement {
    type Err = Error;
    fn from_str(s: &str) -> Result<PartitionElement> {
        PartitionElement::ALL
            .into_iter()
            .find(|e| e.label() == s.trim())
            .ok_or_else(|| Error::InvalidModel(format!("unknown partition element {s:?}")))
    }
}

impl Serialize for PartitionElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for PartitionElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The partition element containing `state`.
pub fn classify(state: &MicroState) -> Result<PartitionElement> {
    state.ensure_ghz_compatible()?;
    let sat: Vec<Triad> = Triad::ALL.into_iter().filter(|&t| satisfies(state, t)).collect();
    PartitionElement::from_satisfied(&sat).ok_or_else(|| {
        // unreachable for GHZ-compatible states; kept as a checked error
        Error::InvalidModel(format!("state {state} satisfies {} triads", sat.len()))
    })
}

/// A set of compatible observables: at most one axis per particle, nonempty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MeasurementContext {
    selection: [Option<Axis>; 3],
}

impl MeasurementContext {
    pub fn new(selection: [Option<Axis>; 3]) -> Result<MeasurementContext> {
        if selection.iter().all(Option::is_none) {
            return Err(Error::IncompatibleContext("empty context".into()));
        }
        Ok(MeasurementContext { selection })
    }

    /// Builds a context from a list of sites; rejects two axes on one particle.
    pub fn from_sites(sites: &[Site]) -> Result<MeasurementContext> {
        let mut selection: [Option<Axis>; 3] = [None; 3];
        for site in sites {
            let slot = &mut selection[site.particle.index()];
            if let Some(prev) = slot {
                return Err(Error::IncompatibleContext(format!(
                    "particle {} measured along both {} and {}",
                    site.particle.get(),
                    prev.letter(),
                    site.axis.letter()
                )));
            }
            *slot = Some(site.axis);
        }
        MeasurementContext::new(selection)
    }

    pub fn axis(&self, particle: Particle) -> Option<Axis> {
        self.selection[particle.index()]
    }

    /// Selected sites in particle order.
    pub fn sites(&self) -> Vec<Site> {
        Particle::ALL
            .into_iter()
            .filter_map(|p| self.selection[p.index()].map(|a| Site::new(a, p)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.selection.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, site: Site) -> bool {
        self.selection[site.particle.index()] == Some(site.axis)
    }

    /// The triad measured by this context, if it is one of the four.
    pub fn triad(&self) -> Option<Triad> {
        Triad::from_sites(&self.sites())
    }

    /// All `2^len` outcome patterns, `+1` before `-1`, first site most significant.
    pub fn outcome_patterns(&self) -> Vec<Vec<Sign>> {
        let n = self.len();
        (0u32..1 << n)
            .map(|bits| {
                (0..n)
                    .map(|i| if bits >> (n - 1 - i) & 1 == 1 { Sign::Minus } else { Sign::Plus })
                    .collect()
            })
            .collect()
    }

    fn sort_key(&self) -> (usize, Vec<usize>) {
        (self.len(), self.sites().iter().map(|s| s.index()).collect())
    }
}

impl PartialOrd for MeasurementContext {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MeasurementContext {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for MeasurementContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sites().iter().map(Site::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses the comma-separated grammar `x1,y2,y3`.
impl FromStr for MeasurementContext {
    type Err = Error;
    fn from_str(s: &str) -> Result<MeasurementContext> {
        let sites = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Site>>>()?;
        MeasurementContext::from_sites(&sites)
    }
}

impl Serialize for MeasurementContext {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeasurementContext {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All 63 compatible contexts: 9 singles, 27 pairs, 27 triples, canonically ordered.
pub fn enumerate_contexts() -> Vec<MeasurementContext> {
    let choices = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
    let mut out = Vec::with_capacity(63);
    for a in choices {
        for b in choices {
            for c in choices {
                if let Ok(ctx) = MeasurementContext::new([a, b, c]) {
                    out.push(ctx);
                }
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(v: [i64; 9]) -> MicroState {
        MicroState::from_values(&v).unwrap()
    }

    #[test]
    fn canonical_site_order() {
        let names: Vec<String> = Site::ALL.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["x1", "y1", "z1", "x2", "y2", "z2", "x3", "y3", "z3"]);
        for (i, s) in Site::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
    }

    #[test]
    fn ghz_enumeration() {
        let states = enumerate_ghz_microstates();
        assert_eq!(states.len(), 128);
        assert!(states.contains(&MicroState::all_plus()));
        assert!(!states.contains(&st([1, 1, 1, 1, 1, -1, 1, 1, 1])));
        assert!(states.windows(2).all(|w| w[0] < w[1]));
        for (i, s) in states.iter().enumerate() {
            assert_eq!(ghz_index(s), Some(i));
        }
        assert_eq!(ghz_index(&st([1, 1, 1, 1, 1, -1, 1, 1, 1])), None);
    }

    #[test]
    fn triad_products() {
        let plus = MicroState::all_plus();
        assert_eq!(triad_product(&plus, Triad::I), Sign::Plus);
        assert_eq!(triad_product(&st([-1, 1, 1, 1, 1, 1, 1, 1, 1]), Triad::I), Sign::Minus);
        assert_eq!(triad_product(&plus, Triad::IV), Sign::Plus);
        assert!(!satisfies(&plus, Triad::IV));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&MicroState::all_plus()).unwrap(), PartitionElement::I_II_III);
        assert_eq!(
            classify(&st([1, 1, 1, 1, -1, 1, 1, -1, 1])).unwrap(),
            PartitionElement::I0
        );
        assert!(matches!(
            classify(&st([1, 1, 1, 1, 1, -1, 1, 1, 1])),
            Err(Error::NotGhzCompatible(_))
        ));
    }

    #[test]
    fn contexts() {
        let ctxs = enumerate_contexts();
        assert_eq!(ctxs.len(), 63);
        assert_eq!(ctxs.iter().filter(|c| c.len() == 1).count(), 9);
        assert_eq!(ctxs.iter().filter(|c| c.len() == 2).count(), 27);
        assert_eq!(ctxs.iter().filter(|c| c.len() == 3).count(), 27);
        let m1: MeasurementContext = "x1,y2,y3".parse().unwrap();
        assert!(ctxs.contains(&m1));
        assert_eq!(m1.triad(), Some(Triad::I));
        for t in Triad::ALL {
            assert_eq!(t.context().triad(), Some(t));
        }
        assert!(matches!(
            "x1,y1".parse::<MeasurementContext>(),
            Err(Error::IncompatibleContext(_))
        ));
        assert!("".parse::<MeasurementContext>().is_err());
        assert!("w1".parse::<MeasurementContext>().is_err());
        assert!("x4".parse::<MeasurementContext>().is_err());
    }

    #[test]
    fn serialization_formats() {
        let s = MicroState::all_plus();
        assert_eq!(serde_json::to_string(&s).unwrap(), "[1,1,1,1,1,1,1,1,1]");
        assert_eq!(serde_json::to_string(&Triad::III).unwrap(), "\"III\"");
        assert_eq!(
            serde_json::to_string(&PartitionElement::I_II_III).unwrap(),
            "\"I&II&III\""
        );
        let bad: std::result::Result<MicroState, _> = serde_json::from_str("[1,1,1,1,1,1,1,1,0]");
        assert!(bad.is_err());
    }
}
