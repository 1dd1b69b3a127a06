//! Families of subsets: membership, classification, `Star`, `Push`, closure
//! and limit sets.
//!
//! Families over ℕ are evaluated exactly on [`EPSet`] arguments. Families over
//! a finite ground are evaluated on [`Subset`] masks and classified by
//! exhaustive enumeration. Opaque predicate families are only ever sampled.

mod ground;
mod topology;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ground::{FiniteGround, Ground, Mapping, SetArg, Subset, MAX_GROUND};
pub use topology::FiniteTopology;

use crate::intseq::{cogap, EPSet, ExtNat, IntSeqError};
use crate::sampling;
use ground::GroundJson;

/// Largest finite ground classified by full enumeration of its power set.
pub const MAX_EXHAUSTIVE: usize = 12;

/// Default number of random cases for sampled classification.
pub const DEFAULT_BUDGET: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("set representation does not match the family's ground")]
    GroundMismatch,
    #[error("unknown ground element {0:?}")]
    UnknownElement(String),
    #[error("ground element {0:?} listed twice")]
    DuplicateElement(String),
    #[error("ground of {size} elements exceeds the supported maximum of {max}")]
    GroundTooLarge { size: usize, max: usize },
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("not exactly computable: {0}")]
    Unsupported(String),
    #[error(transparent)]
    IntSeq(#[from] IntSeqError),
}

/// Direction in which membership (or multiplicity) moves along inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Unknown,
}

type MembershipTest = dyn Fn(&SetArg) -> bool + Send + Sync;

/// A family given by an opaque membership test.
#[derive(Clone)]
pub struct PredicateFamily {
    test: Arc<MembershipTest>,
    direction: Monotonicity,
    direction_exact: bool,
}

impl PredicateFamily {
    pub fn direction(&self) -> Monotonicity {
        self.direction
    }

    /// Whether the declared direction was established exactly by its builder.
    pub fn direction_exact(&self) -> bool {
        self.direction_exact
    }
}

impl fmt::Debug for PredicateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredicateFamily")
            .field("direction", &self.direction)
            .field("direction_exact", &self.direction_exact)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum FamilyKind {
    Empty,
    All,
    /// Subsets of ℕ with finite complement.
    Cofinite,
    /// Infinite subsets of ℕ.
    Infinite,
    /// Subsets of ℕ with `cogap >= c`.
    CoGapLevel(ExtNat),
    Indicator(BTreeSet<Subset>),
    Predicate(PredicateFamily),
    Pushed(Box<(Mapping, FamilySpec)>),
}

/// A family of subsets of a ground.
#[derive(Debug, Clone)]
pub struct FamilySpec {
    ground: Ground,
    kind: FamilyKind,
}

impl FamilySpec {
    pub fn empty(ground: Ground) -> Self {
        FamilySpec {
            ground,
            kind: FamilyKind::Empty,
        }
    }

    pub fn all(ground: Ground) -> Self {
        FamilySpec {
            ground,
            kind: FamilyKind::All,
        }
    }

    /// The cofinite subsets of ℕ.
    pub fn cofinite() -> Self {
        FamilySpec {
            ground: Ground::Naturals,
            kind: FamilyKind::Cofinite,
        }
    }

    /// The infinite subsets of ℕ.
    pub fn infinite() -> Self {
        FamilySpec {
            ground: Ground::Naturals,
            kind: FamilyKind::Infinite,
        }
    }

    /// Subsets of ℕ whose cogap is at least `c`; `c` must be positive.
    pub fn cogap_level(c: ExtNat) -> Result<Self, FamilyError> {
        if c == ExtNat::ZERO {
            return Err(FamilyError::InvalidFamily(
                "cogap level must be at least 1".into(),
            ));
        }
        Ok(FamilySpec {
            ground: Ground::Naturals,
            kind: FamilyKind::CoGapLevel(c),
        })
    }

    pub fn indicator<I>(ground: FiniteGround, sets: I) -> Result<Self, FamilyError>
    where
        I: IntoIterator<Item = Subset>,
    {
        let full = ground.full();
        let sets: BTreeSet<Subset> = sets.into_iter().collect();
        if sets.iter().any(|s| !s.is_subset_of(full)) {
            return Err(FamilyError::InvalidFamily(
                "indicator set outside the ground".into(),
            ));
        }
        Ok(FamilySpec {
            ground: Ground::Finite(ground),
            kind: FamilyKind::Indicator(sets),
        })
    }

    pub fn predicate<F>(ground: Ground, direction: Monotonicity, test: F) -> Self
    where
        F: Fn(&SetArg) -> bool + Send + Sync + 'static,
    {
        FamilySpec::predicate_with(ground, direction, false, test)
    }

    /// A predicate family whose direction is known exactly by construction.
    pub(crate) fn predicate_with<F>(
        ground: Ground,
        direction: Monotonicity,
        direction_exact: bool,
        test: F,
    ) -> Self
    where
        F: Fn(&SetArg) -> bool + Send + Sync + 'static,
    {
        FamilySpec {
            ground,
            kind: FamilyKind::Predicate(PredicateFamily {
                test: Arc::new(test),
                direction,
                direction_exact,
            }),
        }
    }

    pub fn ground(&self) -> &Ground {
        &self.ground
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Whether membership is decided symbolically (no opaque predicate involved).
    pub fn is_symbolic(&self) -> bool {
        match &self.kind {
            FamilyKind::Predicate(_) => false,
            FamilyKind::Pushed(inner) => inner.1.is_symbolic(),
            _ => true,
        }
    }

    /// Evaluates `s ∈ F`.
    pub fn contains(&self, s: &SetArg) -> Result<bool, FamilyError> {
        match (&self.ground, s) {
            (Ground::Naturals, SetArg::Nat(_)) => {}
            (Ground::Finite(g), SetArg::Finite(mask)) => {
                if !mask.is_subset_of(g.full()) {
                    return Err(FamilyError::GroundMismatch);
                }
            }
            _ => return Err(FamilyError::GroundMismatch),
        }
        Ok(match (&self.kind, s) {
            (FamilyKind::Empty, _) => false,
            (FamilyKind::All, _) => true,
            (FamilyKind::Cofinite, SetArg::Nat(set)) => set.complement().is_finite(),
            (FamilyKind::Infinite, SetArg::Nat(set)) => !set.is_finite(),
            (FamilyKind::CoGapLevel(c), SetArg::Nat(set)) => cogap(set) >= *c,
            (FamilyKind::Indicator(sets), SetArg::Finite(mask)) => sets.contains(mask),
            (FamilyKind::Predicate(p), arg) => (p.test)(arg),
            (FamilyKind::Pushed(pushed), SetArg::Finite(mask)) => {
                let (map, inner) = pushed.as_ref();
                inner.contains(&map.preimage(*mask))?
            }
            _ => return Err(FamilyError::GroundMismatch),
        })
    }

    /// All members of a family over a finite ground.
    pub fn materialize(&self) -> Result<BTreeSet<Subset>, FamilyError> {
        let g = self.finite_ground()?;
        if let FamilyKind::Indicator(sets) = &self.kind {
            return Ok(sets.clone());
        }
        check_enumerable(g)?;
        let mut out = BTreeSet::new();
        for s in g.all_subsets() {
            if self.contains(&SetArg::Finite(s))? {
                out.insert(s);
            }
        }
        Ok(out)
    }

    fn finite_ground(&self) -> Result<&FiniteGround, FamilyError> {
        self.ground.finite().ok_or_else(|| {
            FamilyError::Unsupported("operation needs a finite ground".into())
        })
    }

    /// Membership as an explicit indicator family over the same finite ground.
    pub fn to_indicator(&self) -> Result<FamilySpec, FamilyError> {
        let g = self.finite_ground()?.clone();
        let sets = self.materialize()?;
        FamilySpec::indicator(g, sets)
    }

    pub fn classify(&self, budget: usize, seed: u64) -> ClassReport {
        classify(self, budget, seed)
    }
}

fn check_enumerable(g: &FiniteGround) -> Result<(), FamilyError> {
    if g.len() > MAX_EXHAUSTIVE {
        Err(FamilyError::GroundTooLarge {
            size: g.len(),
            max: MAX_EXHAUSTIVE,
        })
    } else {
        Ok(())
    }
}

/// Whether a property holds, with a counterexample when it does not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Verdict {
    pub fn yes() -> Self {
        Verdict {
            holds: true,
            witness: None,
        }
    }

    pub fn no(witness: impl Into<String>) -> Self {
        Verdict {
            holds: false,
            witness: Some(witness.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Exact,
    Sampled,
}

/// Order-theoretic properties of a family.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub status: Status,
    pub eventual: Verdict,
    pub co_eventual: Verdict,
    pub filter: Verdict,
    /// Only meaningful for families over ℕ.
    pub finitely_insensitive: Option<Verdict>,
    /// Number of sets or pairs inspected; zero for symbolic answers.
    pub cases: usize,
    /// Direction declared by a predicate family's builder.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared: Option<Declared>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Declared {
    pub direction: Monotonicity,
    pub exact: bool,
}

impl ClassReport {
    /// Both eventual and co-eventual.
    pub fn is_trivial(&self) -> bool {
        self.eventual.holds && self.co_eventual.holds
    }
}

/// Filter witness for the cogap level `c`: two sets made of length-`c` runs,
/// shifted by one so their intersection only has runs of length `c - 1`.
fn cogap_level_filter_witness(c: u64) -> String {
    let c = c as usize;
    let s: Vec<bool> = (0..2 * c).map(|k| k < c).collect();
    let mut t = s.clone();
    t.rotate_right(1);
    let (s, t) = (EPSet::new(vec![], s), EPSet::new(vec![], t));
    let both = s.intersection(&t);
    format!(
        "S={s} and S'={t} have cogap {c} but S∩S'={both} has cogap {}",
        cogap(&both)
    )
}

fn symbolic_report(kind: &FamilyKind) -> Option<ClassReport> {
    let natural = EPSet::naturals();
    let not_co = || {
        Verdict::no(format!(
            "ℕ={natural} is a member but its subset ∅ is not"
        ))
    };
    let (co_eventual, filter) = match kind {
        FamilyKind::Empty | FamilyKind::All => (Verdict::yes(), Verdict::yes()),
        FamilyKind::Cofinite => (not_co(), Verdict::yes()),
        FamilyKind::Infinite => (
            not_co(),
            Verdict::no("odds=prefix=;period=10 and evens=prefix=;period=01 are infinite but their intersection ∅ is not"),
        ),
        FamilyKind::CoGapLevel(ExtNat::Finite(c)) => (not_co(), Verdict::no(cogap_level_filter_witness(*c))),
        FamilyKind::CoGapLevel(ExtNat::Infinite) => (
            not_co(),
            Verdict::no("S=⋃ₖ[4ᵏ,4ᵏ+k] and S'=⋃ₖ[2·4ᵏ,2·4ᵏ+k] both have unbounded runs but are disjoint (not eventually periodic)"),
        ),
        _ => return None,
    };
    Some(ClassReport {
        status: Status::Exact,
        eventual: Verdict::yes(),
        co_eventual,
        filter,
        finitely_insensitive: Some(Verdict::yes()),
        cases: 0,
        declared: None,
    })
}

/// Exhaustive classification of an explicit family over a ground of `n` points.
fn exhaustive_report(g: &FiniteGround, members: &BTreeSet<Subset>) -> ClassReport {
    let n = g.len();
    let mut cases = 0;
    let mut eventual = Verdict::yes();
    let mut co_eventual = Verdict::yes();
    'outer: for &s in members {
        for x in 0..n {
            cases += 1;
            if eventual.holds && !s.contains(x) && !members.contains(&s.with(x)) {
                eventual = Verdict::no(format!(
                    "{} ∈ F but its superset {} ∉ F",
                    g.show(s),
                    g.show(s.with(x))
                ));
            }
            if co_eventual.holds && s.contains(x) && !members.contains(&s.without(x)) {
                co_eventual = Verdict::no(format!(
                    "{} ∈ F but its subset {} ∉ F",
                    g.show(s),
                    g.show(s.without(x))
                ));
            }
            if !eventual.holds && !co_eventual.holds {
                break 'outer;
            }
        }
    }
    let filter = if !eventual.holds {
        Verdict::no("not eventual")
    } else {
        let mut verdict = Verdict::yes();
        'pairs: for &s in members {
            for &t in members.range(s..) {
                cases += 1;
                if !members.contains(&s.intersection(t)) {
                    verdict = Verdict::no(format!(
                        "{} and {} are members but {} is not",
                        g.show(s),
                        g.show(t),
                        g.show(s.intersection(t))
                    ));
                    break 'pairs;
                }
            }
        }
        verdict
    };
    ClassReport {
        status: Status::Exact,
        eventual,
        co_eventual,
        filter,
        finitely_insensitive: None,
        cases,
        declared: None,
    }
}

fn sampled_report(family: &FamilySpec, p: &PredicateFamily, budget: usize, seed: u64) -> ClassReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let member = |s: &SetArg| family.contains(s).unwrap_or(false);
    let show = |s: &SetArg| family.ground.show(s);
    let mut eventual = Verdict::yes();
    let mut co_eventual = Verdict::yes();
    let mut filter = Verdict::yes();
    let mut insensitive = family.ground.is_naturals().then(Verdict::yes);
    for _ in 0..budget {
        let (small, big, other) = match &family.ground {
            Ground::Naturals => {
                let s = sampling::epset(&mut rng);
                let big = sampling::superset(&mut rng, &s);
                (SetArg::Nat(s), SetArg::Nat(big), SetArg::Nat(sampling::epset(&mut rng)))
            }
            Ground::Finite(g) => {
                let s = sampling::subset(&mut rng, g.len());
                let big = s.union(sampling::subset(&mut rng, g.len()));
                (
                    SetArg::Finite(s),
                    SetArg::Finite(big),
                    SetArg::Finite(sampling::subset(&mut rng, g.len())),
                )
            }
        };
        let (in_small, in_big) = (member(&small), member(&big));
        if eventual.holds && in_small && !in_big {
            eventual = Verdict::no(format!("{} ∈ F, superset {} ∉ F", show(&small), show(&big)));
        }
        if co_eventual.holds && in_big && !in_small {
            co_eventual = Verdict::no(format!("{} ∈ F, subset {} ∉ F", show(&big), show(&small)));
        }
        if filter.holds && in_big && member(&other) {
            let meet = match (&big, &other) {
                (SetArg::Nat(a), SetArg::Nat(b)) => SetArg::Nat(a.intersection(b)),
                (SetArg::Finite(a), SetArg::Finite(b)) => SetArg::Finite(a.intersection(*b)),
                _ => unreachable!("samples share a ground"),
            };
            if !member(&meet) {
                filter = Verdict::no(format!(
                    "{} and {} ∈ F, intersection {} ∉ F",
                    show(&big),
                    show(&other),
                    show(&meet)
                ));
            }
        }
        if let (Some(v), SetArg::Nat(s)) = (insensitive.as_mut(), &small) {
            if v.holds {
                let (add, remove) = sampling::finite_change(&mut rng);
                let changed = SetArg::Nat(s.finitely_change(&add, &remove).expect("disjoint"));
                if member(&changed) != in_small {
                    *v = Verdict::no(format!(
                        "{} and its finite change {} disagree",
                        show(&small),
                        show(&changed)
                    ));
                }
            }
        }
    }
    if !eventual.holds && filter.holds {
        filter = Verdict::no("not eventual");
    }
    ClassReport {
        status: Status::Sampled,
        eventual,
        co_eventual,
        filter,
        finitely_insensitive: insensitive,
        cases: budget,
        declared: Some(Declared {
            direction: p.direction,
            exact: p.direction_exact,
        }),
    }
}

/// Classifies a family: exactly for symbolic kinds and explicit finite families,
/// by seeded sampling for predicates.
pub fn classify(family: &FamilySpec, budget: usize, seed: u64) -> ClassReport {
    if let FamilyKind::Predicate(p) = &family.kind {
        return sampled_report(family, p, budget, seed);
    }
    match &family.ground {
        Ground::Naturals => symbolic_report(&family.kind)
            .expect("families over ℕ are symbolic or predicates"),
        Ground::Finite(g) => match family.materialize() {
            Ok(members) => exhaustive_report(g, &members),
            Err(e) => {
                let why = e.to_string();
                ClassReport {
                    status: Status::Exact,
                    eventual: Verdict::no(why.clone()),
                    co_eventual: Verdict::no(why.clone()),
                    filter: Verdict::no(why),
                    finitely_insensitive: None,
                    cases: 0,
                    declared: None,
                }
            }
        },
    }
}

/// Checks that `F` is co-eventual exactly when `2^X ∖ F` is eventual.
pub fn complement_duality_check(family: &FamilySpec) -> Result<bool, FamilyError> {
    let g = family.finite_ground()?;
    let members = family.materialize()?;
    let complement: BTreeSet<Subset> = g.all_subsets().filter(|s| !members.contains(s)).collect();
    let co_eventual = exhaustive_report(g, &members).co_eventual.holds;
    let complement_eventual = exhaustive_report(g, &complement).eventual.holds;
    Ok(co_eventual == complement_eventual)
}

/// The points whose singletons belong to the family.
pub fn star(family: &FamilySpec) -> Result<SetArg, FamilyError> {
    match &family.ground {
        Ground::Finite(g) => {
            let mut out = Subset::EMPTY;
            for x in 0..g.len() {
                if family.contains(&SetArg::Finite(Subset::singleton(x)))? {
                    out = out.with(x);
                }
            }
            Ok(SetArg::Finite(out))
        }
        Ground::Naturals => match &family.kind {
            FamilyKind::All => Ok(SetArg::Nat(EPSet::naturals())),
            // singletons are finite: no cofinite, infinite or positive-cogap singletons
            FamilyKind::Empty
            | FamilyKind::Cofinite
            | FamilyKind::Infinite
            | FamilyKind::CoGapLevel(_) => Ok(SetArg::Nat(EPSet::empty())),
            _ => Err(FamilyError::Unsupported(
                "Star of a predicate family over ℕ".into(),
            )),
        },
    }
}

/// `Push(f, F) = {S ⊆ Y : f⁻¹(S) ∈ F}`, evaluated lazily.
pub fn push(map: Mapping, family: FamilySpec) -> Result<FamilySpec, FamilyError> {
    if map.domain() != family.ground {
        return Err(FamilyError::GroundMismatch);
    }
    Ok(FamilySpec {
        ground: Ground::Finite(map.codomain().clone()),
        kind: FamilyKind::Pushed(Box::new((map, family))),
    })
}

fn same_ground(family: &FamilySpec, topology: &FiniteTopology) -> Result<(), FamilyError> {
    match family.ground.finite() {
        Some(g) if g == topology.ground() => Ok(()),
        _ => Err(FamilyError::GroundMismatch),
    }
}

/// Points all of whose open neighborhoods belong to the family.
pub fn limit_set(family: &FamilySpec, topology: &FiniteTopology) -> Result<Subset, FamilyError> {
    same_ground(family, topology)?;
    let mut out = Subset::EMPTY;
    for x in 0..topology.ground().len() {
        let mut all_in = true;
        for u in topology.neighborhoods(x) {
            if !family.contains(&SetArg::Finite(u))? {
                all_in = false;
                break;
            }
        }
        if all_in {
            out = out.with(x);
        }
    }
    Ok(out)
}

/// `cl F`: the sets all of whose open supersets belong to the family.
pub fn closure_family(family: &FamilySpec, topology: &FiniteTopology) -> Result<FamilySpec, FamilyError> {
    same_ground(family, topology)?;
    let g = topology.ground();
    check_enumerable(g)?;
    let open_members: BTreeSet<Subset> = topology
        .opens()
        .filter(|&u| family.contains(&SetArg::Finite(u)).unwrap_or(false))
        .collect();
    let sets = g
        .all_subsets()
        .filter(|&s| topology.open_supersets(s).all(|u| open_members.contains(&u)));
    FamilySpec::indicator(g.clone(), sets)
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    ground: GroundJson,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<ExtNat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sets: Option<Vec<Vec<String>>>,
}

impl TryFrom<FamilyJson> for FamilySpec {
    type Error = FamilyError;

    fn try_from(raw: FamilyJson) -> Result<Self, Self::Error> {
        let ground = Ground::try_from(raw.ground)?;
        let need_naturals = |f: FamilySpec| {
            if ground.is_naturals() {
                Ok(f)
            } else {
                Err(FamilyError::InvalidFamily(format!(
                    "kind {:?} needs ground \"N\"",
                    raw.kind
                )))
            }
        };
        match raw.kind.as_str() {
            "empty" => Ok(FamilySpec::empty(ground.clone())),
            "all" => Ok(FamilySpec::all(ground.clone())),
            "cofinite" => need_naturals(FamilySpec::cofinite()),
            "infinite" => need_naturals(FamilySpec::infinite()),
            "cogap_level" => {
                let c = raw
                    .c
                    .ok_or_else(|| FamilyError::InvalidFamily("cogap_level needs \"c\"".into()))?;
                need_naturals(FamilySpec::cogap_level(c)?)
            }
            "indicator" => {
                let g = ground.finite().cloned().ok_or_else(|| {
                    FamilyError::InvalidFamily("indicator families need a finite ground".into())
                })?;
                let sets = raw
                    .sets
                    .unwrap_or_default()
                    .iter()
                    .map(|s| g.subset(s))
                    .collect::<Result<Vec<_>, _>>()?;
                FamilySpec::indicator(g, sets)
            }
            other => Err(FamilyError::InvalidFamily(format!("unknown kind {other:?}"))),
        }
    }
}

impl FamilySpec {
    fn to_json_repr(&self) -> Result<FamilyJson, FamilyError> {
        let ground = GroundJson::from(&self.ground);
        let simple = |kind: &str| FamilyJson {
            ground: ground.clone(),
            kind: kind.into(),
            c: None,
            sets: None,
        };
        Ok(match &self.kind {
            FamilyKind::Empty => simple("empty"),
            FamilyKind::All => simple("all"),
            FamilyKind::Cofinite => simple("cofinite"),
            FamilyKind::Infinite => simple("infinite"),
            FamilyKind::CoGapLevel(c) => FamilyJson {
                c: Some(*c),
                ..simple("cogap_level")
            },
            FamilyKind::Indicator(_) | FamilyKind::Pushed(_) => {
                let g = self.finite_ground()?;
                let sets = self.materialize()?.into_iter().map(|s| g.names(s)).collect();
                FamilyJson {
                    sets: Some(sets),
                    ..simple("indicator")
                }
            }
            FamilyKind::Predicate(_) => {
                return Err(FamilyError::Unsupported(
                    "predicate families have no JSON form".into(),
                ))
            }
        })
    }
}

impl Serialize for FamilySpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json_repr()
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FamilySpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = FamilyJson::deserialize(deserializer)?;
        FamilySpec::try_from(raw).map_err(serde::de::Error::custom)
    }
}

/// Every family on a ground of `n <= 3` points, as indicator families.
pub fn all_families(g: &FiniteGround) -> Result<Vec<FamilySpec>, FamilyError> {
    if g.len() > 3 {
        return Err(FamilyError::GroundTooLarge { size: g.len(), max: 3 });
    }
    let subsets: Vec<Subset> = g.all_subsets().collect();
    (0u64..1 << subsets.len())
        .map(|choice| {
            let sets = subsets
                .iter()
                .enumerate()
                .filter(|(k, _)| choice >> k & 1 == 1)
                .map(|(_, &s)| s);
            FamilySpec::indicator(g.clone(), sets)
        })
        .collect()
}

/// A random indicator family over `g`.
pub fn random_family<R: Rng>(g: &FiniteGround, rng: &mut R) -> FamilySpec {
    let density: f64 = rng.gen_range(0.05..0.95);
    let sets: Vec<Subset> = g.all_subsets().filter(|_| rng.gen_bool(density)).collect();
    FamilySpec::indicator(g.clone(), sets).expect("subsets of the ground")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(bits: &str) -> SetArg {
        SetArg::Nat(EPSet::from_bits("", bits).unwrap())
    }

    fn ab() -> FiniteGround {
        FiniteGround::new(["a", "b"]).unwrap()
    }

    #[test]
    fn contains_examples() {
        assert!(!FamilySpec::cofinite().contains(&ev("01")).unwrap());
        assert!(FamilySpec::infinite().contains(&ev("01")).unwrap());
        let level3 = FamilySpec::cogap_level(ExtNat::Finite(3)).unwrap();
        let cofinite = SetArg::Nat(EPSet::cofinite([2, 9]).unwrap());
        assert!(level3.contains(&cofinite).unwrap());
        assert!(!level3.contains(&ev("1100")).unwrap());
        assert!(level3.contains(&ev("1101")).unwrap());
        assert!(level3.contains(&ev("11100")).unwrap());
        assert_eq!(
            FamilySpec::infinite().contains(&SetArg::Finite(Subset(1))),
            Err(FamilyError::GroundMismatch)
        );
        assert!(FamilySpec::cogap_level(ExtNat::ZERO).is_err());
    }

    #[test]
    fn classify_symbolic() {
        let g = FamilySpec::infinite().classify(0, 0);
        assert!(g.eventual.holds);
        assert!(!g.filter.holds);
        assert!(g.filter.witness.as_ref().unwrap().contains("∅"));
        let h = FamilySpec::cofinite().classify(0, 0);
        assert!(h.eventual.holds && h.filter.holds && !h.co_eventual.holds);
        let all = FamilySpec::all(Ground::Naturals).classify(0, 0);
        assert!(all.is_trivial());
        let empty = FamilySpec::empty(Ground::Finite(ab())).classify(0, 0);
        assert!(empty.is_trivial());
        for c in 1..=6 {
            let r = FamilySpec::cogap_level(ExtNat::Finite(c)).unwrap().classify(0, 0);
            assert!(r.eventual.holds && !r.co_eventual.holds && !r.filter.holds);
            assert_eq!(r.finitely_insensitive, Some(Verdict::yes()));
        }
    }

    #[test]
    fn cogap_level_filter_witness_is_real() {
        for c in 1..=6u64 {
            let len = 2 * c as usize;
            let s: Vec<bool> = (0..len).map(|k| k < c as usize).collect();
            let mut t = s.clone();
            t.rotate_right(1);
            let (s, t) = (EPSet::new(vec![], s), EPSet::new(vec![], t));
            assert_eq!(cogap(&s), ExtNat::Finite(c));
            assert_eq!(cogap(&t), ExtNat::Finite(c));
            assert!(cogap(&s.intersection(&t)) < ExtNat::Finite(c));
        }
    }

    #[test]
    fn classify_indicator() {
        let g = ab();
        let f = FamilySpec::indicator(
            g.clone(),
            [g.subset(["a"]).unwrap(), g.subset(["a", "b"]).unwrap()],
        )
        .unwrap();
        let r = f.classify(0, 0);
        assert_eq!(r.status, Status::Exact);
        assert!(r.eventual.holds);
        assert!(!r.co_eventual.holds);
        assert!(r.filter.holds);
        let bad = FamilySpec::indicator(g.clone(), [g.subset(["a"]).unwrap()]).unwrap();
        let r = bad.classify(0, 0);
        assert_eq!(r.eventual.witness.as_deref(), Some("{a} ∈ F but its superset {a,b} ∉ F"));
    }

    #[test]
    fn predicates_are_sampled() {
        let at_least_one = FamilySpec::predicate(
            Ground::Finite(FiniteGround::letters(4)),
            Monotonicity::Increasing,
            |s| matches!(s, SetArg::Finite(m) if !m.is_empty()),
        );
        let r = at_least_one.classify(300, 1);
        assert_eq!(r.status, Status::Sampled);
        assert!(r.eventual.holds);
        assert!(!r.co_eventual.holds);
        assert!(!r.filter.holds);

        let contains_one = FamilySpec::predicate(Ground::Naturals, Monotonicity::Increasing, |s| {
            matches!(s, SetArg::Nat(e) if e.member(1))
        });
        let r = contains_one.classify(500, 2);
        assert!(r.eventual.holds && r.filter.holds);
        assert!(!r.finitely_insensitive.unwrap().holds);
    }

    #[test]
    fn duality_examples() {
        let one = FiniteGround::letters(1);
        let f = FamilySpec::indicator(one, [Subset::EMPTY]).unwrap();
        assert!(complement_duality_check(&f).unwrap());
        let g = ab();
        let small = FamilySpec::indicator(g.clone(), g.all_subsets().filter(|s| s.len() <= 1)).unwrap();
        assert!(complement_duality_check(&small).unwrap());
        let single = FamilySpec::indicator(g.clone(), [g.subset(["a"]).unwrap()]).unwrap();
        assert!(complement_duality_check(&single).unwrap());
        assert!(complement_duality_check(&FamilySpec::infinite()).is_err());
    }

    #[test]
    fn star_examples() {
        let abc = FiniteGround::letters(3);
        assert_eq!(
            star(&FamilySpec::all(Ground::Finite(abc.clone()))).unwrap(),
            SetArg::Finite(abc.full())
        );
        assert_eq!(star(&FamilySpec::cofinite()).unwrap(), SetArg::Nat(EPSet::empty()));
        let g = ab();
        let f = FamilySpec::indicator(g.clone(), [g.subset(["a"]).unwrap(), g.full()]).unwrap();
        assert_eq!(star(&f).unwrap(), SetArg::Finite(g.subset(["a"]).unwrap()));
        let pred = FamilySpec::predicate(Ground::Naturals, Monotonicity::Unknown, |_| true);
        assert!(star(&pred).is_err());
    }

    #[test]
    fn push_examples() {
        let abc = FiniteGround::letters(3);
        let f = random_family(&abc, &mut ChaCha8Rng::seed_from_u64(3));
        let pushed = push(Mapping::identity(abc.clone()), f.clone()).unwrap();
        assert_eq!(pushed.materialize().unwrap(), f.materialize().unwrap());

        let x = FiniteGround::new(["1", "2"]).unwrap();
        let y = FiniteGround::new(["a"]).unwrap();
        let constant = Mapping::finite(x.clone(), y.clone(), vec![0, 0]).unwrap();
        let fam = FamilySpec::indicator(x.clone(), [x.full()]).unwrap();
        let pushed = push(constant, fam).unwrap();
        assert!(pushed.contains(&SetArg::Finite(y.full())).unwrap());
        assert!(!pushed.contains(&SetArg::Finite(Subset::EMPTY)).unwrap());

        let ab = ab();
        let seq = Mapping::sequence(ab.clone(), vec![], vec![0]).unwrap();
        let pushed = push(seq, FamilySpec::cofinite()).unwrap();
        for s in ab.all_subsets() {
            assert_eq!(pushed.contains(&SetArg::Finite(s)).unwrap(), s.contains(0));
        }
        assert!(push(Mapping::identity(ab), FamilySpec::cofinite()).is_err());
    }

    #[test]
    fn limit_set_examples() {
        let g = ab();
        let discrete = FiniteTopology::discrete(g.clone());
        let all = FamilySpec::all(Ground::Finite(g.clone()));
        assert_eq!(limit_set(&all, &discrete).unwrap(), g.full());
        let empty = FamilySpec::empty(Ground::Finite(g.clone()));
        assert_eq!(limit_set(&empty, &discrete).unwrap(), Subset::EMPTY);
        let has_a = FamilySpec::indicator(g.clone(), g.all_subsets().filter(|s| s.contains(0))).unwrap();
        assert_eq!(limit_set(&has_a, &discrete).unwrap(), g.subset(["a"]).unwrap());
    }

    #[test]
    fn closure_examples() {
        let g = ab();
        let discrete = FiniteTopology::discrete(g.clone());
        let all = FamilySpec::all(Ground::Finite(g.clone()));
        assert_eq!(
            closure_family(&all, &discrete).unwrap().materialize().unwrap().len(),
            4
        );
        // indiscrete topology with F = {X}: every nonempty set's only open superset is X
        let indiscrete = FiniteTopology::indiscrete(g.clone());
        let just_x = FamilySpec::indicator(g.clone(), [g.full()]).unwrap();
        let cl = closure_family(&just_x, &indiscrete).unwrap().materialize().unwrap();
        let expected: BTreeSet<Subset> = g.all_subsets().filter(|s| !s.is_empty()).collect();
        assert_eq!(cl, expected);
        let has_a = FamilySpec::indicator(g.clone(), g.all_subsets().filter(|s| s.contains(0))).unwrap();
        assert_eq!(
            closure_family(&has_a, &discrete).unwrap().materialize().unwrap(),
            has_a.materialize().unwrap()
        );
    }

    #[test]
    fn json_forms() {
        let f: FamilySpec = serde_json::from_str(r#"{"ground":"N","kind":"cogap_level","c":3}"#).unwrap();
        assert!(matches!(f.kind(), FamilyKind::CoGapLevel(ExtNat::Finite(3))));
        let f: FamilySpec =
            serde_json::from_str(r#"{"ground":["a","b"],"kind":"indicator","sets":[["a"],["a","b"]]}"#).unwrap();
        assert_eq!(f.materialize().unwrap().len(), 2);
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"ground":["a","b"],"kind":"indicator","sets":[["a"],["a","b"]]}"#);
        assert!(serde_json::from_str::<FamilySpec>(r#"{"ground":["a"],"kind":"cofinite"}"#).is_err());
        assert!(serde_json::from_str::<FamilySpec>(r#"{"ground":"N","kind":"cogap_level","c":0}"#).is_err());
        let level_inf: FamilySpec =
            serde_json::from_str(r#"{"ground":"N","kind":"cogap_level","c":"inf"}"#).unwrap();
        assert!(level_inf.contains(&SetArg::Nat(EPSet::naturals())).unwrap());
    }
}
