//! Control sequences choosing which operator acts at each step, and
//! relaxation schedules.

use serde::{Deserialize, Serialize};

use super::operator::check_lambda;
use super::CfpError;

/// Operator indices are 1-based, as in `i(n) ∈ {1, ..., m}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlSpec {
    /// `i(n) = n mod m + 1`.
    Cyclic,
    /// A finite pattern repeated forever.
    AlmostCyclic { pattern: Vec<usize> },
    /// A finite list used once.
    Explicit { list: Vec<usize> },
}

impl ControlSpec {
    /// `i(n)` for `n >= 0`, or `None` once an explicit list runs out.
    pub fn index(&self, n: usize, m: usize) -> Option<usize> {
        match self {
            ControlSpec::Cyclic => Some(n % m + 1),
            ControlSpec::AlmostCyclic { pattern } => Some(pattern[n % pattern.len()]),
            ControlSpec::Explicit { list } => list.get(n).copied(),
        }
    }
}

/// `need[s]`: length of the shortest window starting at `s` that contains
/// each of `1..=m`, or `None` if the sequence ends first.
fn window_needs(items: &[usize], m: usize) -> Vec<Option<usize>> {
    let mut counts = vec![0usize; m + 1];
    let mut missing = m;
    let mut need = Vec::with_capacity(items.len());
    let mut end = 0;
    for s in 0..items.len() {
        while missing > 0 && end < items.len() {
            if counts[items[end]] == 0 {
                missing -= 1;
            }
            counts[items[end]] += 1;
            end += 1;
        }
        need.push((missing == 0).then_some(end - s));
        counts[items[s]] -= 1;
        if counts[items[s]] == 0 {
            missing += 1;
        }
    }
    need
}

/// Smallest `c` such that every window of `c` consecutive positions in
/// `0..len` satisfies the window property, given `need[s]` for each start.
pub(crate) fn min_window(need: &[Option<usize>]) -> Option<usize> {
    let len = need.len();
    // prefix[k] = max need over starts 0..=k, None if some start never completes
    let mut prefix: Vec<Option<usize>> = Vec::with_capacity(len);
    let mut running = Some(0);
    for &v in need {
        running = match (running, v) {
            (Some(r), Some(v)) => Some(r.max(v)),
            _ => None,
        };
        prefix.push(running);
    }
    (1..=len).find(|&c| prefix[len - c].is_some_and(|worst| worst <= c))
}

/// Almost-cyclicality constant: the least `c` with
/// `{1, ..., m} ⊆ {i(n+1), ..., i(n+c)}` for every `n`.
pub fn control_validate(ctrl: &ControlSpec, m: usize, horizon: usize) -> Result<usize, CfpError> {
    if m == 0 {
        return Err(CfpError::NoOperators);
    }
    let c = match ctrl {
        ControlSpec::Cyclic => m,
        ControlSpec::AlmostCyclic { pattern } => {
            check_indices(pattern, m)?;
            // two copies cover every window of length <= period starting inside one period
            let doubled: Vec<usize> = pattern.iter().chain(pattern).copied().collect();
            let need = window_needs(&doubled, m);
            need[..pattern.len()]
                .iter()
                .copied()
                .try_fold(0, |acc, v| v.map(|v| acc.max(v)))
                .ok_or_else(|| missing_index(pattern, m))?
        }
        ControlSpec::Explicit { list } => {
            check_indices(list, m)?;
            min_window(&window_needs(list, m)).ok_or_else(|| missing_index(list, m))?
        }
    };
    if horizon < 2 * c {
        return Err(CfpError::InvalidControl(format!(
            "horizon {horizon} is shorter than twice the window length {c}"
        )));
    }
    Ok(c)
}

fn check_indices(items: &[usize], m: usize) -> Result<(), CfpError> {
    if items.is_empty() {
        return Err(CfpError::InvalidControl("control list is empty".into()));
    }
    match items.iter().find(|&&i| i == 0 || i > m) {
        Some(i) => Err(CfpError::InvalidControl(format!(
            "operator index {i} outside 1..={m}"
        ))),
        None => Ok(()),
    }
}

fn missing_index(items: &[usize], m: usize) -> CfpError {
    match (1..=m).find(|i| !items.contains(i)) {
        Some(i) => CfpError::InvalidControl(format!("operator {i} never appears")),
        None => CfpError::InvalidControl("list too short to contain a full window".into()),
    }
}

/// Relaxation parameters `λ_n ∈ [0, 2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelaxationSchedule {
    Constant { value: f64 },
    /// Values repeated cyclically.
    Periodic { values: Vec<f64> },
}

impl Default for RelaxationSchedule {
    fn default() -> Self {
        RelaxationSchedule::Constant { value: 1.0 }
    }
}

impl RelaxationSchedule {
    pub fn validate(&self) -> Result<(), CfpError> {
        match self {
            RelaxationSchedule::Constant { value } => check_lambda(*value),
            RelaxationSchedule::Periodic { values } if values.is_empty() => {
                Err(CfpError::InvalidControl("relaxation schedule is empty".into()))
            }
            RelaxationSchedule::Periodic { values } => values.iter().try_for_each(|&v| check_lambda(v)),
        }
    }

    pub fn lambda(&self, n: usize) -> f64 {
        match self {
            RelaxationSchedule::Constant { value } => *value,
            RelaxationSchedule::Periodic { values } => values[n % values.len()],
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            RelaxationSchedule::Constant { value } => std::slice::from_ref(value),
            RelaxationSchedule::Periodic { values } => values,
        }
    }

    /// Whether `inf λ_n = 0` or `sup λ_n = 2`, outside the range where
    /// convergence is guaranteed.
    pub fn touches_boundary(&self) -> bool {
        self.values().iter().any(|&v| v == 0.0 || v == 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // every window of length c in the periodic extension, checked directly
    fn brute_c(pattern: &[usize], m: usize) -> Option<usize> {
        (1..=2 * pattern.len()).find(|&c| {
            (0..pattern.len()).all(|s| (1..=m).all(|i| (s..s + c).any(|n| pattern[n % pattern.len()] == i)))
        })
    }

    #[test]
    fn validate_examples() {
        assert_eq!(control_validate(&ControlSpec::Cyclic, 3, 100).unwrap(), 3);
        let p112 = ControlSpec::AlmostCyclic { pattern: vec![1, 1, 2] };
        assert_eq!(control_validate(&p112, 2, 100).unwrap(), 3);
        let p1221 = ControlSpec::AlmostCyclic { pattern: vec![1, 2, 2, 1] };
        assert_eq!(control_validate(&p1221, 2, 100).unwrap(), 3);
        let missing = ControlSpec::AlmostCyclic { pattern: vec![1, 1] };
        assert!(control_validate(&missing, 2, 100).is_err());
        assert!(control_validate(&p112, 2, 5).is_err());
        assert!(control_validate(&ControlSpec::AlmostCyclic { pattern: vec![3] }, 2, 100).is_err());
    }

    #[test]
    fn explicit_lists() {
        let list = ControlSpec::Explicit { list: vec![1, 2, 1, 1, 1, 2, 2] };
        assert_eq!(control_validate(&list, 2, 100).unwrap(), 4);
        let short = ControlSpec::Explicit { list: vec![1, 1, 1] };
        assert!(control_validate(&short, 2, 100).is_err());
        assert_eq!(list.index(7, 2), None);
    }

    #[test]
    fn schedule_examples() {
        assert!(RelaxationSchedule::Constant { value: 2.5 }.validate().is_err());
        let s = RelaxationSchedule::Periodic { values: vec![0.5, 2.0] };
        assert!(s.validate().is_ok());
        assert_eq!(s.lambda(3), 2.0);
        assert!(s.touches_boundary());
        assert!(!RelaxationSchedule::default().touches_boundary());
    }

    proptest::proptest! {
        #[test]
        fn pattern_constant_matches_window_scan(
            pattern in proptest::collection::vec(1usize..=4, 1..12),
        ) {
            let m = *pattern.iter().max().unwrap();
            let ctrl = ControlSpec::AlmostCyclic { pattern: pattern.clone() };
            let got = control_validate(&ctrl, m, 1000).ok();
            proptest::prop_assert_eq!(got, brute_c(&pattern, m));
        }
    }
}
