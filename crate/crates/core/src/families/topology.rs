//! Topologies on finite grounds.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ground::{FiniteGround, Subset};
use super::FamilyError;

/// A finite topological space: a ground and a family of open subsets closed
/// under pairwise union and intersection, containing `∅` and the ground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTopology {
    ground: FiniteGround,
    opens: BTreeSet<Subset>,
}

impl FiniteTopology {
    pub fn new<I>(ground: FiniteGround, opens: I) -> Result<Self, FamilyError>
    where
        I: IntoIterator<Item = Subset>,
    {
        let full = ground.full();
        let opens: BTreeSet<Subset> = opens.into_iter().collect();
        if let Some(bad) = opens.iter().find(|u| !u.is_subset_of(full)) {
            return Err(FamilyError::InvalidTopology(format!(
                "open set {:#b} is not inside the ground",
                bad.0
            )));
        }
        if !opens.contains(&Subset::EMPTY) || !opens.contains(&full) {
            return Err(FamilyError::InvalidTopology(
                "opens must contain the empty set and the ground".into(),
            ));
        }
        for &u in &opens {
            for &v in &opens {
                if !opens.contains(&u.union(v)) || !opens.contains(&u.intersection(v)) {
                    return Err(FamilyError::InvalidTopology(format!(
                        "{} and {} are open but their union or intersection is not",
                        ground.show(u),
                        ground.show(v)
                    )));
                }
            }
        }
        Ok(FiniteTopology { ground, opens })
    }

    pub fn discrete(ground: FiniteGround) -> Self {
        let opens = ground.all_subsets().collect();
        FiniteTopology { ground, opens }
    }

    pub fn indiscrete(ground: FiniteGround) -> Self {
        let opens = [Subset::EMPTY, ground.full()].into_iter().collect();
        FiniteTopology { ground, opens }
    }

    /// The coarsest topology in which every member of `subbase` is open.
    pub fn from_subbase(ground: FiniteGround, subbase: &[Subset]) -> Self {
        let full = ground.full();
        let mut base: BTreeSet<Subset> = subbase.iter().map(|s| s.intersection(full)).collect();
        base.insert(full);
        close_under(&mut base, Subset::intersection);
        let mut opens = base;
        opens.insert(Subset::EMPTY);
        close_under(&mut opens, Subset::union);
        FiniteTopology { ground, opens }
    }

    /// Every topology on the ground, by filtering all candidate families.
    /// Feasible for grounds of at most four points.
    pub fn all_on(ground: &FiniteGround) -> Result<Vec<FiniteTopology>, FamilyError> {
        let n = ground.len();
        if n > 4 {
            return Err(FamilyError::GroundTooLarge { size: n, max: 4 });
        }
        let full = ground.full();
        let middle: Vec<Subset> = ground
            .all_subsets()
            .filter(|&s| s != Subset::EMPTY && s != full)
            .collect();
        let mut found = Vec::new();
        for choice in 0u64..1 << middle.len() {
            let mut opens: BTreeSet<Subset> = middle
                .iter()
                .enumerate()
                .filter(|(k, _)| choice >> k & 1 == 1)
                .map(|(_, &s)| s)
                .collect();
            opens.insert(Subset::EMPTY);
            opens.insert(full);
            let closed = opens.iter().all(|&u| {
                opens
                    .iter()
                    .all(|&v| opens.contains(&u.union(v)) && opens.contains(&u.intersection(v)))
            });
            if closed {
                found.push(FiniteTopology {
                    ground: ground.clone(),
                    opens,
                });
            }
        }
        Ok(found)
    }

    /// A topology generated by a random subbase of one to four subsets.
    pub fn random<R: Rng>(ground: FiniteGround, rng: &mut R) -> Self {
        let count = rng.gen_range(1..=4);
        let full = ground.full().0;
        let subbase: Vec<Subset> = (0..count)
            .map(|_| Subset(rng.gen::<u64>() & full))
            .collect();
        FiniteTopology::from_subbase(ground, &subbase)
    }

    pub fn ground(&self) -> &FiniteGround {
        &self.ground
    }

    pub fn opens(&self) -> impl Iterator<Item = Subset> + '_ {
        self.opens.iter().copied()
    }

    pub fn open_count(&self) -> usize {
        self.opens.len()
    }

    pub fn is_open(&self, s: Subset) -> bool {
        self.opens.contains(&s)
    }

    pub fn is_closed(&self, s: Subset) -> bool {
        self.is_open(s.complement(self.ground.len()))
    }

    /// Open sets containing the point `x`.
    pub fn neighborhoods(&self, x: usize) -> impl Iterator<Item = Subset> + '_ {
        self.opens().filter(move |u| u.contains(x))
    }

    /// Open sets containing all of `s`.
    pub fn open_supersets(&self, s: Subset) -> impl Iterator<Item = Subset> + '_ {
        self.opens().filter(move |&u| s.is_subset_of(u))
    }

    /// Whether distinct points have disjoint open neighborhoods.
    pub fn is_hausdorff(&self) -> bool {
        let n = self.ground.len();
        (0..n).all(|x| {
            (x + 1..n).all(|y| {
                self.neighborhoods(x).any(|u| {
                    self.neighborhoods(y)
                        .any(|v| u.intersection(v).is_empty())
                })
            })
        })
    }
}

fn close_under(sets: &mut BTreeSet<Subset>, op: fn(Subset, Subset) -> Subset) {
    loop {
        let current: Vec<Subset> = sets.iter().copied().collect();
        let before = sets.len();
        for &u in &current {
            for &v in &current {
                sets.insert(op(u, v));
            }
        }
        if sets.len() == before {
            break;
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TopologyJson {
    ground: Vec<String>,
    opens: Vec<Vec<String>>,
}

impl Serialize for FiniteTopology {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TopologyJson {
            ground: self.ground.elements().to_vec(),
            opens: self.opens().map(|u| self.ground.names(u)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteTopology {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = TopologyJson::deserialize(deserializer)?;
        let ground = FiniteGround::new(raw.ground).map_err(D::Error::custom)?;
        let opens = raw
            .opens
            .iter()
            .map(|u| ground.subset(u))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        FiniteTopology::new(ground, opens).map_err(D::Error::custom)
    }
}
