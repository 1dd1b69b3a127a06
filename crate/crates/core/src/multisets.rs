//! Multisets and multifamilies with multiplicities in `{0, 1, ..., ∞}`.
//!
//! A [`Multifamily`] assigns an [`ExtNat`] to every subset of its ground. The
//! `Gap` and `CoGap` multifamilies on ℕ are evaluated exactly on eventually
//! periodic sets; multifamilies on finite grounds are checked by enumeration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::families::{
    classify, FamilyError, FamilySpec, FiniteGround, FiniteTopology, Ground, Mapping,
    Monotonicity, SetArg, Status, Subset, Verdict, MAX_EXHAUSTIVE,
};
use crate::intseq::{cogap, gap, EPSet, ExtNat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MultisetError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("level 0 would give the family of all subsets; levels start at 1")]
    ZeroLevel,
    #[error("closure and limits are defined for increasing multifamilies only ({0})")]
    NotIncreasing(String),
    #[error("multiplicity vector has {got} entries for a ground of {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// A multiset on a finite ground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multiset {
    ground: FiniteGround,
    mult: Vec<ExtNat>,
}

impl Multiset {
    pub fn new(ground: FiniteGround, mult: Vec<ExtNat>) -> Result<Self, MultisetError> {
        if mult.len() != ground.len() {
            return Err(MultisetError::LengthMismatch {
                expected: ground.len(),
                got: mult.len(),
            });
        }
        Ok(Multiset { ground, mult })
    }

    pub fn ground(&self) -> &FiniteGround {
        &self.ground
    }

    pub fn multiplicity(&self, x: usize) -> ExtNat {
        self.mult[x]
    }

    pub fn multiplicity_of(&self, name: &str) -> Result<ExtNat, MultisetError> {
        Ok(self.mult[self.ground.index_of(name)?])
    }

    pub fn multiplicities(&self) -> &[ExtNat] {
        &self.mult
    }

    /// Elements of multiplicity at least one.
    pub fn support(&self) -> Subset {
        Subset::from_indices((0..self.mult.len()).filter(|&x| self.mult[x] >= ExtNat::ONE))
    }

    /// The multiset given by the indicator function of `s`.
    pub fn indicator(ground: FiniteGround, s: Subset) -> Self {
        let mult = (0..ground.len())
            .map(|x| if s.contains(x) { ExtNat::ONE } else { ExtNat::ZERO })
            .collect();
        Multiset { ground, mult }
    }
}

impl Serialize for Multiset {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<(&String, ExtNat)> = self.ground.elements().iter().zip(self.mult.iter().copied()).collect();
        entries.serialize(serializer)
    }
}

/// A multiplicity function on the subsets of a ground.
#[derive(Debug, Clone)]
pub enum Multifamily {
    /// `lim sup` of gaps between consecutive members, on ℕ.
    Gap,
    /// Gap of the complement, on ℕ.
    CoGap,
    /// 0/1 indicator of a family.
    Indicator(FamilySpec),
    /// `S ↦ φ(Sᶜ)`.
    Complement(Box<Multifamily>),
    /// A finite table over a finite ground; unlisted sets have multiplicity 0.
    Explicit {
        ground: FiniteGround,
        table: BTreeMap<Subset, ExtNat>,
    },
    /// `S ↦ φ(f⁻¹(S))`.
    Pushed { map: Mapping, inner: Box<Multifamily> },
}

impl Multifamily {
    pub fn explicit<I>(ground: FiniteGround, entries: I) -> Result<Self, MultisetError>
    where
        I: IntoIterator<Item = (Subset, ExtNat)>,
    {
        let full = ground.full();
        let table: BTreeMap<Subset, ExtNat> = entries.into_iter().collect();
        if table.keys().any(|s| !s.is_subset_of(full)) {
            return Err(FamilyError::InvalidFamily("table set outside the ground".into()).into());
        }
        Ok(Multifamily::Explicit { ground, table })
    }

    pub fn ground(&self) -> Ground {
        match self {
            Multifamily::Gap | Multifamily::CoGap => Ground::Naturals,
            Multifamily::Indicator(f) => f.ground().clone(),
            Multifamily::Complement(inner) => inner.ground(),
            Multifamily::Explicit { ground, .. } => Ground::Finite(ground.clone()),
            Multifamily::Pushed { map, .. } => Ground::Finite(map.codomain().clone()),
        }
    }

    /// Multiplicity of `s`.
    pub fn value(&self, s: &SetArg) -> Result<ExtNat, MultisetError> {
        Ok(match (self, s) {
            (Multifamily::Gap, SetArg::Nat(set)) => gap(set),
            (Multifamily::CoGap, SetArg::Nat(set)) => cogap(set),
            (Multifamily::Indicator(f), _) => {
                if f.contains(s)? {
                    ExtNat::ONE
                } else {
                    ExtNat::ZERO
                }
            }
            (Multifamily::Complement(inner), _) => {
                let flipped = inner.ground().complement(s)?;
                inner.value(&flipped)?
            }
            (Multifamily::Explicit { ground, table }, SetArg::Finite(mask)) => {
                if !mask.is_subset_of(ground.full()) {
                    return Err(FamilyError::GroundMismatch.into());
                }
                table.get(mask).copied().unwrap_or(ExtNat::ZERO)
            }
            (Multifamily::Pushed { map, inner }, SetArg::Finite(mask)) => {
                if !mask.is_subset_of(map.codomain().full()) {
                    return Err(FamilyError::GroundMismatch.into());
                }
                inner.value(&map.preimage(*mask))?
            }
            _ => return Err(FamilyError::GroundMismatch.into()),
        })
    }

    pub fn classify(&self, budget: usize, seed: u64) -> MfReport {
        mf_classify(self, budget, seed)
    }
}

pub fn mf_value(m: &Multifamily, s: &SetArg) -> Result<ExtNat, MultisetError> {
    m.value(s)
}

/// The complement multifamily `S ↦ φ(Sᶜ)`.
pub fn mf_complement(m: Multifamily) -> Multifamily {
    Multifamily::Complement(Box::new(m))
}

/// Monotonicity and finite-insensitivity of a multifamily.
#[derive(Debug, Clone, Serialize)]
pub struct MfReport {
    pub status: Status,
    pub increasing: Verdict,
    pub decreasing: Verdict,
    /// Only meaningful on ℕ.
    pub finitely_insensitive: Option<Verdict>,
    pub cases: usize,
}

impl MfReport {
    pub fn monotonicity(&self) -> Monotonicity {
        match (self.increasing.holds, self.decreasing.holds) {
            (true, _) => Monotonicity::Increasing,
            (false, true) => Monotonicity::Decreasing,
            (false, false) => Monotonicity::Unknown,
        }
    }
}

fn exhaustive_mf_report(m: &Multifamily, g: &FiniteGround) -> Result<MfReport, MultisetError> {
    if g.len() > MAX_EXHAUSTIVE {
        return Err(FamilyError::GroundTooLarge {
            size: g.len(),
            max: MAX_EXHAUSTIVE,
        }
        .into());
    }
    let values = g
        .all_subsets()
        .map(|s| m.value(&SetArg::Finite(s)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut increasing = Verdict::yes();
    let mut decreasing = Verdict::yes();
    let mut cases = 0;
    for s in g.all_subsets() {
        for x in (0..g.len()).filter(|&x| !s.contains(x)) {
            cases += 1;
            let bigger = s.with(x);
            let (small_v, big_v) = (values[s.0 as usize], values[bigger.0 as usize]);
            if increasing.holds && small_v > big_v {
                increasing = Verdict::no(format!(
                    "φ({})={small_v} > φ({})={big_v}",
                    g.show(s),
                    g.show(bigger)
                ));
            }
            if decreasing.holds && small_v < big_v {
                decreasing = Verdict::no(format!(
                    "φ({})={small_v} < φ({})={big_v}",
                    g.show(s),
                    g.show(bigger)
                ));
            }
        }
    }
    Ok(MfReport {
        status: Status::Exact,
        increasing,
        decreasing,
        finitely_insensitive: None,
        cases,
    })
}

fn failed_report(why: String) -> MfReport {
    MfReport {
        status: Status::Exact,
        increasing: Verdict::no(why.clone()),
        decreasing: Verdict::no(why),
        finitely_insensitive: None,
        cases: 0,
    }
}

/// Classifies monotonicity: by rule for the ℕ multifamilies, by delegation to
/// the family for indicators, and by enumeration on finite grounds.
pub fn mf_classify(m: &Multifamily, budget: usize, seed: u64) -> MfReport {
    match m {
        Multifamily::Gap => MfReport {
            status: Status::Exact,
            increasing: Verdict::no("φ(∅)=inf > φ(ℕ)=0"),
            decreasing: Verdict::yes(),
            finitely_insensitive: Some(Verdict::yes()),
            cases: 0,
        },
        Multifamily::CoGap => MfReport {
            status: Status::Exact,
            increasing: Verdict::yes(),
            decreasing: Verdict::no("φ(∅)=0 < φ(ℕ)=inf"),
            finitely_insensitive: Some(Verdict::yes()),
            cases: 0,
        },
        Multifamily::Indicator(f) => {
            let r = classify(f, budget, seed);
            MfReport {
                status: r.status,
                increasing: r.eventual,
                decreasing: r.co_eventual,
                finitely_insensitive: r.finitely_insensitive,
                cases: r.cases,
            }
        }
        Multifamily::Complement(inner) if inner.ground().is_naturals() => {
            // complementation reverses inclusion and preserves finite changes
            let r = mf_classify(inner, budget, seed);
            let via = |v: Verdict| Verdict {
                holds: v.holds,
                witness: v.witness.map(|w| format!("on complements: {w}")),
            };
            MfReport {
                status: r.status,
                increasing: via(r.decreasing),
                decreasing: via(r.increasing),
                finitely_insensitive: r.finitely_insensitive,
                cases: r.cases,
            }
        }
        _ => match m.ground() {
            Ground::Finite(g) => {
                exhaustive_mf_report(m, &g).unwrap_or_else(|e| failed_report(e.to_string()))
            }
            Ground::Naturals => failed_report("no rule for this multifamily on ℕ".into()),
        },
    }
}

/// `{S : φ(S) >= c}` for `c >= 1`.
///
/// Level families of increasing multifamilies are eventual, and those of
/// decreasing ones co-eventual; the resulting family records that direction.
pub fn level_family(m: &Multifamily, c: ExtNat) -> Result<FamilySpec, MultisetError> {
    if c == ExtNat::ZERO {
        return Err(MultisetError::ZeroLevel);
    }
    match m {
        Multifamily::CoGap => Ok(FamilySpec::cogap_level(c)?),
        Multifamily::Indicator(f) if c == ExtNat::ONE => Ok(f.clone()),
        Multifamily::Indicator(f) => Ok(FamilySpec::empty(f.ground().clone())),
        _ => {
            let report = mf_classify(m, crate::families::DEFAULT_BUDGET, 0);
            let exact = report.status == Status::Exact;
            let direction = report.monotonicity();
            let inner = m.clone();
            Ok(FamilySpec::predicate_with(m.ground(), direction, exact, move |s| {
                inner.value(s).map(|v| v >= c).unwrap_or(false)
            }))
        }
    }
}

fn finite_ground_of(m: &Multifamily) -> Result<FiniteGround, MultisetError> {
    m.ground().finite().cloned().ok_or_else(|| {
        FamilyError::Unsupported("operation needs a finite ground".into()).into()
    })
}

/// The multiset `x ↦ φ({x})`.
pub fn mstar(m: &Multifamily) -> Result<Multiset, MultisetError> {
    let g = finite_ground_of(m)?;
    let mult = (0..g.len())
        .map(|x| m.value(&SetArg::Finite(Subset::singleton(x))))
        .collect::<Result<Vec<_>, _>>()?;
    Multiset::new(g, mult)
}

/// Push along a map: `S ↦ φ(f⁻¹(S))`.
pub fn mpush(map: Mapping, m: Multifamily) -> Result<Multifamily, MultisetError> {
    if map.domain() != m.ground() {
        return Err(FamilyError::GroundMismatch.into());
    }
    Ok(Multifamily::Pushed {
        map,
        inner: Box::new(m),
    })
}

fn require_increasing(m: &Multifamily, topology: &FiniteTopology) -> Result<(), MultisetError> {
    if m.ground().finite() != Some(topology.ground()) {
        return Err(FamilyError::GroundMismatch.into());
    }
    let report = mf_classify(m, crate::families::DEFAULT_BUDGET, 0);
    match report.increasing {
        Verdict { holds: true, .. } => Ok(()),
        Verdict { witness, .. } => Err(MultisetError::NotIncreasing(
            witness.unwrap_or_else(|| "not increasing".into()),
        )),
    }
}

/// `cl M`: `S ↦ min{φ(U) : U open, S ⊆ U}`, as an explicit table.
pub fn closure(m: &Multifamily, topology: &FiniteTopology) -> Result<Multifamily, MultisetError> {
    require_increasing(m, topology)?;
    let g = topology.ground().clone();
    let open_values = topology
        .opens()
        .map(|u| Ok((u, m.value(&SetArg::Finite(u))?)))
        .collect::<Result<Vec<_>, MultisetError>>()?;
    let table = g.all_subsets().filter_map(|s| {
        let v = open_values
            .iter()
            .filter(|(u, _)| s.is_subset_of(*u))
            .map(|&(_, v)| v)
            .min()
            .expect("the ground itself is open");
        (v != ExtNat::ZERO).then_some((s, v))
    });
    let table = table.collect();
    Ok(Multifamily::Explicit { ground: g, table })
}

/// The multiset limit `x ↦ min{φ(U) : U open, x ∈ U}`.
pub fn multiset_limit(m: &Multifamily, topology: &FiniteTopology) -> Result<Multiset, MultisetError> {
    require_increasing(m, topology)?;
    let g = topology.ground().clone();
    let mult = (0..g.len())
        .map(|x| {
            topology
                .neighborhoods(x)
                .map(|u| m.value(&SetArg::Finite(u)))
                .try_fold(ExtNat::Infinite, |acc, v| Ok::<_, MultisetError>(acc.min(v?)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Multiset::new(g, mult)
}

#[derive(Serialize, Deserialize)]
struct MultifamilyJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inner: Option<Box<MultifamilyJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<(Vec<String>, ExtNat)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<FamilySpec>,
}

impl TryFrom<MultifamilyJson> for Multifamily {
    type Error = MultisetError;

    fn try_from(raw: MultifamilyJson) -> Result<Self, Self::Error> {
        let invalid = |msg: &str| MultisetError::Family(FamilyError::InvalidFamily(msg.into()));
        match raw.kind.as_str() {
            "gap" => Ok(Multifamily::Gap),
            "cogap" => Ok(Multifamily::CoGap),
            "complement" => {
                let inner = raw.inner.ok_or_else(|| invalid("complement needs \"inner\""))?;
                Ok(mf_complement(Multifamily::try_from(*inner)?))
            }
            "indicator" => {
                let family = raw.family.ok_or_else(|| invalid("indicator needs \"family\""))?;
                Ok(Multifamily::Indicator(family))
            }
            "explicit" => {
                let table = raw.table.ok_or_else(|| invalid("explicit needs \"table\""))?;
                let names = match raw.ground {
                    Some(names) => names,
                    None => {
                        let mut seen: Vec<String> = Vec::new();
                        for name in table.iter().flat_map(|(s, _)| s) {
                            if !seen.contains(name) {
                                seen.push(name.clone());
                            }
                        }
                        seen.sort();
                        seen
                    }
                };
                let ground = FiniteGround::new(names)?;
                let entries = table
                    .iter()
                    .map(|(s, v)| Ok((ground.subset(s)?, *v)))
                    .collect::<Result<Vec<_>, FamilyError>>()?;
                Multifamily::explicit(ground, entries)
            }
            other => Err(invalid(&format!("unknown multifamily kind {other:?}"))),
        }
    }
}

impl Multifamily {
    fn to_json_repr(&self) -> Result<MultifamilyJson, MultisetError> {
        let plain = |kind: &str| MultifamilyJson {
            kind: kind.into(),
            inner: None,
            ground: None,
            table: None,
            family: None,
        };
        Ok(match self {
            Multifamily::Gap => plain("gap"),
            Multifamily::CoGap => plain("cogap"),
            Multifamily::Complement(inner) => MultifamilyJson {
                inner: Some(Box::new(inner.to_json_repr()?)),
                ..plain("complement")
            },
            Multifamily::Indicator(f) => MultifamilyJson {
                family: Some(f.clone()),
                ..plain("indicator")
            },
            Multifamily::Explicit { ground, table } => MultifamilyJson {
                ground: Some(ground.elements().to_vec()),
                table: Some(table.iter().map(|(s, v)| (ground.names(*s), *v)).collect()),
                ..plain("explicit")
            },
            Multifamily::Pushed { .. } => {
                return Err(FamilyError::Unsupported("pushed multifamilies have no JSON form".into()).into())
            }
        })
    }
}

impl Serialize for Multifamily {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json_repr()
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Multifamily {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = MultifamilyJson::deserialize(deserializer)?;
        Multifamily::try_from(raw).map_err(serde::de::Error::custom)
    }
}

/// Evaluates `CoGap` on the visit set of an eventually periodic sequence.
pub fn cogap_of_visits(map: &Mapping, target: Subset) -> ExtNat {
    match map.preimage(target) {
        SetArg::Nat(s) => cogap(&s),
        SetArg::Finite(_) => ExtNat::ZERO,
    }
}

/// The set of `n` with `x_n ∈ target`, for a sequence mapping.
pub fn visits(map: &Mapping, target: Subset) -> Option<EPSet> {
    match map.preimage(target) {
        SetArg::Nat(s) => Some(s),
        SetArg::Finite(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nat(prefix: &str, period: &str) -> SetArg {
        SetArg::Nat(EPSet::from_bits(prefix, period).unwrap())
    }

    fn ab() -> FiniteGround {
        FiniteGround::new(["a", "b"]).unwrap()
    }

    #[test]
    fn value_examples() {
        let finite = nat("10110", "");
        assert_eq!(Multifamily::CoGap.value(&finite).unwrap(), ExtNat::ZERO);
        assert_eq!(Multifamily::Gap.value(&finite).unwrap(), ExtNat::Infinite);
        let g = Multifamily::Indicator(FamilySpec::infinite());
        assert_eq!(g.value(&nat("", "10")).unwrap(), ExtNat::ONE);
        assert!(Multifamily::Gap.value(&SetArg::Finite(Subset(1))).is_err());
    }

    #[test]
    fn complement_examples() {
        let gap_c = mf_complement(Multifamily::Gap);
        assert_eq!(gap_c.value(&nat("", "10")).unwrap(), ExtNat::Finite(1));
        assert_eq!(
            gap_c.value(&SetArg::Nat(EPSet::cofinite([3, 4]).unwrap())).unwrap(),
            ExtNat::Infinite
        );
        let twice = mf_complement(mf_complement(Multifamily::Gap));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let s = SetArg::Nat(crate::sampling::epset(&mut rng));
            assert_eq!(twice.value(&s).unwrap(), Multifamily::Gap.value(&s).unwrap());
            assert_eq!(gap_c.value(&s).unwrap(), Multifamily::CoGap.value(&s).unwrap());
        }
    }

    #[test]
    fn level_family_examples() {
        let level1 = level_family(&Multifamily::CoGap, ExtNat::ONE).unwrap();
        let level_inf = level_family(&Multifamily::CoGap, ExtNat::Infinite).unwrap();
        let g = FamilySpec::infinite();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = SetArg::Nat(crate::sampling::epset(&mut rng));
            assert_eq!(level1.contains(&s).unwrap(), g.contains(&s).unwrap());
        }
        for excluded in [vec![], vec![1], vec![2, 3, 17]] {
            let cof = SetArg::Nat(EPSet::cofinite(excluded).unwrap());
            assert!(level_inf.contains(&cof).unwrap());
        }
        let f = FamilySpec::indicator(ab(), [Subset(0b01), Subset(0b11)]).unwrap();
        let same = level_family(&Multifamily::Indicator(f.clone()), ExtNat::ONE).unwrap();
        for s in ab().all_subsets() {
            let s = SetArg::Finite(s);
            assert_eq!(same.contains(&s).unwrap(), f.contains(&s).unwrap());
        }
        assert_eq!(
            level_family(&Multifamily::CoGap, ExtNat::ZERO).unwrap_err(),
            MultisetError::ZeroLevel
        );
    }

    #[test]
    fn level_family_of_explicit_table_is_flagged() {
        let g = ab();
        let m = Multifamily::explicit(
            g.clone(),
            [(Subset(0b01), ExtNat::Finite(2)), (Subset(0b11), ExtNat::Finite(3))],
        )
        .unwrap();
        let fam = level_family(&m, ExtNat::Finite(2)).unwrap();
        let report = fam.classify(200, 0);
        let declared = report.declared.unwrap();
        assert_eq!(declared.direction, Monotonicity::Increasing);
        assert!(declared.exact);
        assert!(report.eventual.holds);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(Multifamily::CoGap.classify(0, 0).monotonicity(), Monotonicity::Increasing);
        assert_eq!(Multifamily::Gap.classify(0, 0).monotonicity(), Monotonicity::Decreasing);
        let g = ab();
        let table = Multifamily::explicit(
            g.clone(),
            [(Subset(0b01), ExtNat::Finite(2)), (Subset(0b11), ExtNat::Finite(1))],
        )
        .unwrap();
        let r = table.classify(0, 0);
        assert!(!r.increasing.holds);
        assert_eq!(r.increasing.witness.as_deref(), Some("φ({a})=2 > φ({a,b})=1"));
        let gap_c = mf_complement(Multifamily::Gap).classify(0, 0);
        assert_eq!(gap_c.monotonicity(), Monotonicity::Increasing);
    }

    #[test]
    fn mstar_examples() {
        let abc = FiniteGround::letters(3);
        let all = Multifamily::Indicator(FamilySpec::all(Ground::Finite(abc.clone())));
        assert!(mstar(&all).unwrap().multiplicities().iter().all(|&v| v == ExtNat::ONE));
        let table = Multifamily::explicit(ab(), [(Subset(0b01), ExtNat::Finite(3))]).unwrap();
        let star = mstar(&table).unwrap();
        assert_eq!(star.multiplicity_of("a").unwrap(), ExtNat::Finite(3));
        assert_eq!(star.multiplicity_of("b").unwrap(), ExtNat::ZERO);
    }

    #[test]
    fn mpush_examples() {
        let g = ab();
        let table = Multifamily::explicit(g.clone(), [(Subset(0b01), ExtNat::Finite(3))]).unwrap();
        let pushed = mpush(Mapping::identity(g.clone()), table.clone()).unwrap();
        for s in g.all_subsets() {
            let s = SetArg::Finite(s);
            assert_eq!(pushed.value(&s).unwrap(), table.value(&s).unwrap());
        }
        let constant = Mapping::sequence(g.clone(), vec![], vec![0]).unwrap();
        let pushed = mpush(constant, Multifamily::CoGap).unwrap();
        assert_eq!(pushed.value(&SetArg::Finite(Subset(0b01))).unwrap(), ExtNat::Infinite);
        let alternating = Mapping::sequence(g.clone(), vec![], vec![0, 1]).unwrap();
        let pushed = mpush(alternating, Multifamily::CoGap).unwrap();
        assert_eq!(pushed.value(&SetArg::Finite(Subset(0b01))).unwrap(), ExtNat::Finite(1));
        assert_eq!(pushed.classify(0, 0).monotonicity(), Monotonicity::Increasing);
        assert!(mpush(Mapping::identity(g), Multifamily::CoGap).is_err());
    }

    #[test]
    fn multiset_limit_examples() {
        let abc = FiniteGround::letters(3);
        let all = Multifamily::Indicator(FamilySpec::all(Ground::Finite(abc.clone())));
        let t = FiniteTopology::indiscrete(abc.clone());
        assert!(multiset_limit(&all, &t).unwrap().multiplicities().iter().all(|&v| v == ExtNat::ONE));

        let increasing = Multifamily::explicit(
            abc.clone(),
            abc.all_subsets().map(|s| (s, ExtNat::Finite(s.len() as u64 * 2))),
        )
        .unwrap();
        let discrete = FiniteTopology::discrete(abc.clone());
        assert_eq!(
            multiset_limit(&increasing, &discrete).unwrap(),
            mstar(&increasing).unwrap()
        );
        let lim = multiset_limit(&increasing, &FiniteTopology::indiscrete(abc.clone())).unwrap();
        assert!(lim.multiplicities().iter().all(|&v| v == ExtNat::Finite(6)));

        let decreasing = mf_complement(increasing);
        assert!(matches!(
            multiset_limit(&decreasing, &discrete),
            Err(MultisetError::NotIncreasing(_))
        ));
    }

    #[test]
    fn limit_matches_star_of_closure() {
        let abc = FiniteGround::letters(3);
        let m = Multifamily::explicit(
            abc.clone(),
            abc.all_subsets().map(|s| (s, ExtNat::Finite(s.0 % 3 + s.len() as u64 * 3))),
        )
        .unwrap();
        for t in FiniteTopology::all_on(&abc).unwrap() {
            let lim = multiset_limit(&m, &t).unwrap();
            let via_closure = mstar(&closure(&m, &t).unwrap()).unwrap();
            assert_eq!(lim, via_closure);
        }
    }

    #[test]
    fn json_forms() {
        let m: Multifamily = serde_json::from_str(r#"{"kind":"complement","inner":{"kind":"gap"}}"#).unwrap();
        assert_eq!(m.value(&nat("", "10")).unwrap(), ExtNat::Finite(1));
        let t: Multifamily =
            serde_json::from_str(r#"{"kind":"explicit","table":[[["a"],2],[["a","b"],"inf"]]}"#).unwrap();
        assert_eq!(t.value(&SetArg::Finite(Subset(0b11))).unwrap(), ExtNat::Infinite);
        assert_eq!(
            serde_json::to_string(&t).unwrap(),
            r#"{"kind":"explicit","ground":["a","b"],"table":[[["a"],2],[["a","b"],"inf"]]}"#
        );
        let c: Multifamily = serde_json::from_str(r#"{"kind":"cogap"}"#).unwrap();
        assert!(matches!(c, Multifamily::CoGap));
        assert!(serde_json::from_str::<Multifamily>(r#"{"kind":"complement"}"#).is_err());
    }

    #[test]
    fn indicator_bridge_exhaustive() {
        for n in 0..=3 {
            let g = FiniteGround::letters(n);
            for f in crate::families::all_families(&g).unwrap() {
                let fr = f.classify(0, 0);
                let mr = Multifamily::Indicator(f).classify(0, 0);
                assert_eq!(fr.eventual.holds, mr.increasing.holds);
                assert_eq!(fr.co_eventual.holds, mr.decreasing.holds);
            }
        }
    }

    #[test]
    fn explicit_tables_agree_with_pairwise_scan() {
        let g = FiniteGround::letters(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = Multifamily::explicit(
                g.clone(),
                g.all_subsets().map(|s| (s, ExtNat::Finite(rand::Rng::gen_range(&mut rng, 0..3)))),
            )
            .unwrap();
            let v = |s: Subset| m.value(&SetArg::Finite(s)).unwrap();
            let pairs: Vec<(Subset, Subset)> = g
                .all_subsets()
                .flat_map(|a| g.all_subsets().map(move |b| (a, b)))
                .filter(|(a, b)| a.is_subset_of(*b))
                .collect();
            let r = m.classify(0, 0);
            assert_eq!(r.increasing.holds, pairs.iter().all(|&(a, b)| v(a) <= v(b)));
            assert_eq!(r.decreasing.holds, pairs.iter().all(|&(a, b)| v(a) >= v(b)));
        }
    }

    proptest::proptest! {
        #[test]
        fn finite_gap_is_attained_in_every_period(seed in proptest::prelude::any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = crate::sampling::epset(&mut rng);
            if let ExtNat::Finite(g) = gap(&s) {
                // runs of non-members between consecutive members, over two periods of the tail
                let start = s.prefix_len() as u64 + 1;
                let q = s.period_len() as u64;
                let members: Vec<u64> = (start..start + 2 * q).filter(|&n| s.member(n)).collect();
                let longest = members.windows(2).map(|w| w[1] - w[0] - 1).max().unwrap_or(0);
                proptest::prop_assert_eq!(longest, g);
            }
        }

        #[test]
        fn level_families_of_cogap_are_eventual(c in proptest::prop_oneof![
            proptest::prelude::Just(ExtNat::Finite(1)),
            proptest::prelude::Just(ExtNat::Finite(2)),
            proptest::prelude::Just(ExtNat::Finite(3)),
            proptest::prelude::Just(ExtNat::Infinite),
        ], seed in proptest::prelude::any::<u64>()) {
            let fam = level_family(&Multifamily::CoGap, c).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = crate::sampling::epset(&mut rng);
            let bigger = crate::sampling::superset(&mut rng, &s);
            let (add, remove) = crate::sampling::finite_change(&mut rng);
            let changed = crate::intseq::finitely_change(&s, &add, &remove).unwrap();
            let inside = fam.contains(&SetArg::Nat(s.clone())).unwrap();
            if inside {
                proptest::prop_assert!(fam.contains(&SetArg::Nat(bigger)).unwrap());
            }
            proptest::prop_assert_eq!(fam.contains(&SetArg::Nat(changed)).unwrap(), inside);
        }
    }
}
