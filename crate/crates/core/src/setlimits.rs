//! Limits of sequences of subsets of a finite ground.
//!
//! A sequence `A_1, A_2, ...` is stored per element: the trace of `x` is the
//! eventually periodic set `{n : x ∈ A_n}`. Every limit is then a pointwise
//! membership test on traces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::families::{FamilyError, FamilySpec, FiniteGround, Ground, SetArg, Subset};
use crate::intseq::{EPSet, IntSeqError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SetLimitError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    IntSeq(#[from] IntSeqError),
    #[error("the family must be over ℕ")]
    NotOverNaturals,
    #[error("limits need a family with an exact membership rule, not a predicate")]
    NotSymbolic,
    #[error("{0}")]
    Shape(String),
}

/// A sequence of subsets of a finite ground, in trace form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetSequence {
    ground: FiniteGround,
    traces: Vec<EPSet>,
}

impl SetSequence {
    pub fn new(ground: FiniteGround, traces: Vec<EPSet>) -> Result<Self, SetLimitError> {
        if traces.len() != ground.len() {
            return Err(SetLimitError::Shape(format!(
                "{} traces for a ground of {} elements",
                traces.len(),
                ground.len()
            )));
        }
        Ok(SetSequence { ground, traces })
    }

    /// Builds traces from `A_1, ..., A_p` followed by the repeating block
    /// `A_{p+1}, ..., A_{p+q}`.
    pub fn from_sets(
        ground: FiniteGround,
        prefix: &[Subset],
        period: &[Subset],
    ) -> Result<Self, SetLimitError> {
        if period.is_empty() {
            return Err(SetLimitError::Shape("the repeating block must be nonempty".into()));
        }
        let full = ground.full();
        if prefix.iter().chain(period).any(|a| !a.is_subset_of(full)) {
            return Err(FamilyError::GroundMismatch.into());
        }
        let traces = (0..ground.len())
            .map(|x| {
                EPSet::new(
                    prefix.iter().map(|a| a.contains(x)).collect(),
                    period.iter().map(|a| a.contains(x)).collect(),
                )
            })
            .collect();
        Ok(SetSequence { ground, traces })
    }

    pub fn ground(&self) -> &FiniteGround {
        &self.ground
    }

    pub fn traces(&self) -> &[EPSet] {
        &self.traces
    }

    pub fn trace(&self, x: usize) -> &EPSet {
        &self.traces[x]
    }

    /// The set `A_n`, for `n >= 1`.
    pub fn term(&self, n: u64) -> Subset {
        Subset::from_indices((0..self.traces.len()).filter(|&x| self.traces[x].member(n)))
    }
}

#[derive(Serialize, Deserialize)]
struct SetSequenceJson {
    ground: Vec<String>,
    traces: BTreeMap<String, EPSet>,
}

impl Serialize for SetSequence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SetSequenceJson {
            ground: self.ground.elements().to_vec(),
            traces: self
                .ground
                .elements()
                .iter()
                .cloned()
                .zip(self.traces.iter().cloned())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SetSequence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut raw = SetSequenceJson::deserialize(deserializer)?;
        let ground = FiniteGround::new(raw.ground).map_err(D::Error::custom)?;
        let traces = ground
            .elements()
            .iter()
            .map(|x| {
                raw.traces
                    .remove(x)
                    .ok_or_else(|| D::Error::custom(format!("no trace for element {x:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(extra) = raw.traces.keys().next() {
            return Err(D::Error::custom(format!("trace for unknown element {extra:?}")));
        }
        Ok(SetSequence { ground, traces })
    }
}

/// `E-lim A_n = {x : {n : x ∈ A_n} ∈ E}`.
pub fn e_limit(family: &FamilySpec, seq: &SetSequence) -> Result<Subset, SetLimitError> {
    if *family.ground() != Ground::Naturals {
        return Err(SetLimitError::NotOverNaturals);
    }
    if !family.is_symbolic() {
        return Err(SetLimitError::NotSymbolic);
    }
    let mut out = Subset::EMPTY;
    for (x, trace) in seq.traces.iter().enumerate() {
        if family.contains(&SetArg::Nat(trace.clone()))? {
            out = out.with(x);
        }
    }
    Ok(out)
}

/// Upper and lower limits, and the limit when they agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalLimits {
    pub limsup: Subset,
    pub liminf: Subset,
    pub lim: Option<Subset>,
}

pub fn classical_limits(seq: &SetSequence) -> ClassicalLimits {
    let limsup = e_limit(&FamilySpec::infinite(), seq).expect("symbolic family over ℕ");
    let liminf = e_limit(&FamilySpec::cofinite(), seq).expect("symbolic family over ℕ");
    ClassicalLimits {
        limsup,
        liminf,
        lim: (limsup == liminf).then_some(limsup),
    }
}

/// Outcome of checking that a nontrivial finitely-insensitive eventual family
/// recovers the classical limit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LimitTheoremVerdict {
    Holds,
    Fails {
        expected: Vec<String>,
        got: Vec<String>,
        witness: String,
    },
    PreconditionUnmet {
        reason: String,
    },
}

pub fn verify_limit_theorem(seq: &SetSequence, family: &FamilySpec) -> LimitTheoremVerdict {
    let unmet = |reason: String| LimitTheoremVerdict::PreconditionUnmet { reason };
    let lim = match classical_limits(seq).lim {
        Some(lim) => lim,
        None => return unmet("the sequence has no classical limit".into()),
    };
    if *family.ground() != Ground::Naturals || !family.is_symbolic() {
        return unmet("the family must be symbolic over ℕ".into());
    }
    let report = family.classify(0, 0);
    if report.is_trivial() {
        return unmet("the family is trivial".into());
    }
    if !report.eventual.holds {
        return unmet("the family is not eventual".into());
    }
    if !report.finitely_insensitive.is_some_and(|v| v.holds) {
        return unmet("the family is not finitely insensitive".into());
    }
    let got = match e_limit(family, seq) {
        Ok(got) => got,
        Err(e) => return unmet(e.to_string()),
    };
    if got == lim {
        return LimitTheoremVerdict::Holds;
    }
    let x = Subset(got.0 ^ lim.0).indices().next().expect("sets differ");
    let name = &seq.ground.elements()[x];
    LimitTheoremVerdict::Fails {
        expected: seq.ground.names(lim),
        got: seq.ground.names(got),
        witness: format!("element {name} with trace {}", seq.traces[x]),
    }
}
