//! Ground sets, subset masks and maps between grounds.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::FamilyError;
use crate::intseq::EPSet;

/// Largest finite ground a [`Subset`] mask can address.
pub const MAX_GROUND: usize = 63;

/// A subset of a finite ground, as a bit mask over element indices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(pub u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(n: usize) -> Subset {
        if n >= 64 {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Subset {
        Subset(1 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Subset {
        Subset(indices.into_iter().fold(0, |acc, i| acc | (1 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Subset {
        Subset(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Subset {
        Subset(self.0 & !(1 << i))
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    /// Complement within a ground of `n` elements.
    pub fn complement(self, n: usize) -> Subset {
        Subset(!self.0 & Subset::full(n).0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }

    /// Every subset of an `n`-element ground, in mask order.
    pub fn all(n: usize) -> impl Iterator<Item = Subset> {
        assert!(n < 64, "ground too large to enumerate");
        (0..1u64 << n).map(Subset)
    }
}

/// A finite ground set of named elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGround {
    elements: Vec<String>,
    index: HashMap<String, usize>,
}

impl FiniteGround {
    pub fn new<I, S>(elements: I) -> Result<Self, FamilyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if elements.len() > MAX_GROUND {
            return Err(FamilyError::GroundTooLarge {
                size: elements.len(),
                max: MAX_GROUND,
            });
        }
        let mut index = HashMap::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(FamilyError::DuplicateElement(e.clone()));
            }
        }
        Ok(FiniteGround { elements, index })
    }

    /// The ground `{a, b, c, ...}` with `n` letters.
    pub fn letters(n: usize) -> Self {
        let names = (0..n).map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("x{i}")
            }
        });
        FiniteGround::new(names).expect("letter names are distinct")
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn index_of(&self, name: &str) -> Result<usize, FamilyError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| FamilyError::UnknownElement(name.to_string()))
    }

    pub fn subset<I, S>(&self, names: I) -> Result<Subset, FamilyError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        names
            .into_iter()
            .try_fold(Subset::EMPTY, |acc, n| Ok(acc.with(self.index_of(n.as_ref())?)))
    }

    pub fn names(&self, s: Subset) -> Vec<String> {
        s.indices()
            .take_while(|&i| i < self.len())
            .map(|i| self.elements[i].clone())
            .collect()
    }

    pub fn full(&self) -> Subset {
        Subset::full(self.len())
    }

    pub fn all_subsets(&self) -> impl Iterator<Item = Subset> {
        Subset::all(self.len())
    }

    pub fn show(&self, s: Subset) -> String {
        format!("{{{}}}", self.names(s).join(","))
    }
}

/// The ground of a family: the positive integers or a finite named set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ground {
    Naturals,
    Finite(FiniteGround),
}

impl Ground {
    pub fn finite(&self) -> Option<&FiniteGround> {
        match self {
            Ground::Finite(g) => Some(g),
            Ground::Naturals => None,
        }
    }

    pub fn is_naturals(&self) -> bool {
        matches!(self, Ground::Naturals)
    }

    /// Complement of `s` in this ground.
    pub fn complement(&self, s: &SetArg) -> Result<SetArg, FamilyError> {
        match (self, s) {
            (Ground::Naturals, SetArg::Nat(set)) => Ok(SetArg::Nat(set.complement())),
            (Ground::Finite(g), SetArg::Finite(mask)) => Ok(SetArg::Finite(mask.complement(g.len()))),
            _ => Err(FamilyError::GroundMismatch),
        }
    }

    pub fn show(&self, s: &SetArg) -> String {
        match (self, s) {
            (Ground::Finite(g), SetArg::Finite(mask)) => g.show(*mask),
            (_, other) => other.to_string(),
        }
    }
}

/// A concrete set argument: an eventually periodic subset of ℕ or a finite mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SetArg {
    Nat(EPSet),
    Finite(Subset),
}

impl From<EPSet> for SetArg {
    fn from(s: EPSet) -> Self {
        SetArg::Nat(s)
    }
}

impl From<Subset> for SetArg {
    fn from(s: Subset) -> Self {
        SetArg::Finite(s)
    }
}

impl fmt::Display for SetArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetArg::Nat(s) => write!(f, "{s}"),
            SetArg::Finite(m) => write!(f, "mask:{:#b}", m.0),
        }
    }
}

/// A total map into a finite codomain, either from a finite domain or from ℕ
/// as an eventually periodic sequence `x_1, x_2, ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mapping {
    Finite {
        domain: FiniteGround,
        codomain: FiniteGround,
        images: Vec<usize>,
    },
    Sequence {
        codomain: FiniteGround,
        prefix: Vec<usize>,
        period: Vec<usize>,
    },
}

impl Mapping {
    pub fn finite(
        domain: FiniteGround,
        codomain: FiniteGround,
        images: Vec<usize>,
    ) -> Result<Self, FamilyError> {
        if images.len() != domain.len() {
            return Err(FamilyError::InvalidMapping(format!(
                "{} images for a domain of {} elements",
                images.len(),
                domain.len()
            )));
        }
        check_images(&images, &codomain)?;
        Ok(Mapping::Finite {
            domain,
            codomain,
            images,
        })
    }

    /// A sequence given by a finite prefix and a nonempty repeating period of codomain indices.
    pub fn sequence(
        codomain: FiniteGround,
        prefix: Vec<usize>,
        period: Vec<usize>,
    ) -> Result<Self, FamilyError> {
        if period.is_empty() {
            return Err(FamilyError::InvalidMapping(
                "a sequence needs a nonempty period".into(),
            ));
        }
        check_images(&prefix, &codomain)?;
        check_images(&period, &codomain)?;
        Ok(Mapping::Sequence {
            codomain,
            prefix,
            period,
        })
    }

    pub fn identity(ground: FiniteGround) -> Self {
        let images = (0..ground.len()).collect();
        Mapping::Finite {
            domain: ground.clone(),
            codomain: ground,
            images,
        }
    }

    pub fn codomain(&self) -> &FiniteGround {
        match self {
            Mapping::Finite { codomain, .. } | Mapping::Sequence { codomain, .. } => codomain,
        }
    }

    pub fn domain(&self) -> Ground {
        match self {
            Mapping::Finite { domain, .. } => Ground::Finite(domain.clone()),
            Mapping::Sequence { .. } => Ground::Naturals,
        }
    }

    /// `f⁻¹(s)` for a subset of the codomain.
    pub fn preimage(&self, s: Subset) -> SetArg {
        match self {
            Mapping::Finite { images, .. } => SetArg::Finite(Subset::from_indices(
                images
                    .iter()
                    .enumerate()
                    .filter(|(_, &y)| s.contains(y))
                    .map(|(x, _)| x),
            )),
            Mapping::Sequence { prefix, period, .. } => SetArg::Nat(EPSet::new(
                prefix.iter().map(|&y| s.contains(y)).collect(),
                period.iter().map(|&y| s.contains(y)).collect(),
            )),
        }
    }
}

fn check_images(images: &[usize], codomain: &FiniteGround) -> Result<(), FamilyError> {
    match images.iter().find(|&&y| y >= codomain.len()) {
        Some(y) => Err(FamilyError::InvalidMapping(format!(
            "image index {y} outside a codomain of {} elements",
            codomain.len()
        ))),
        None => Ok(()),
    }
}

/// JSON form of a ground: `"N"` or a list of element names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum GroundJson {
    Naturals(String),
    Finite(Vec<String>),
}

impl TryFrom<GroundJson> for Ground {
    type Error = FamilyError;

    fn try_from(g: GroundJson) -> Result<Self, Self::Error> {
        match g {
            GroundJson::Naturals(s) if s == "N" || s == "ℕ" => Ok(Ground::Naturals),
            GroundJson::Naturals(s) => Err(FamilyError::InvalidFamily(format!(
                "unknown ground {s:?}; use \"N\" or a list of elements"
            ))),
            GroundJson::Finite(names) => Ok(Ground::Finite(FiniteGround::new(names)?)),
        }
    }
}

impl From<&Ground> for GroundJson {
    fn from(g: &Ground) -> Self {
        match g {
            Ground::Naturals => GroundJson::Naturals("N".into()),
            Ground::Finite(f) => GroundJson::Finite(f.elements().to_vec()),
        }
    }
}
