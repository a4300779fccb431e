//! Circular and linear orders over finite label sets, the suborder test and
//! the cycle-structure tests for order-preserving / order-reversing
//! permutations.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("invalid label map: {0}")]
    InvalidMap(String),
    #[error("duplicate label {0}")]
    DuplicateLabel(Label),
    #[error("not a permutation: {0}")]
    InvalidPermutation(String),
}

/// Opaque leaf / element identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub String);

impl Label {
    pub fn new(s: impl Into<String>) -> Self {
        Label(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label(s.to_string())
    }
}

impl From<String> for Label {
    fn from(s: String) -> Self {
        Label(s)
    }
}

/// Builds labels from a whitespace-free string, one label per character.
pub fn labels(chars: &str) -> Vec<Label> {
    chars.chars().map(|c| Label(c.to_string())).collect()
}

/// A circular order, stored as the rotation that starts with its smallest label.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Label>", into = "Vec<Label>")]
pub struct CircularOrder {
    seq: Vec<Label>,
}

impl CircularOrder {
    pub fn new(seq: Vec<Label>) -> Result<Self, OrderError> {
        check_distinct(&seq)?;
        Ok(Self::canonical(seq))
    }

    /// Shorthand for single-character labels, e.g. `CircularOrder::of("abcd")`.
    pub fn of(chars: &str) -> Self {
        Self::new(labels(chars)).expect("distinct labels")
    }

    pub fn empty() -> Self {
        CircularOrder { seq: Vec::new() }
    }

    fn canonical(mut seq: Vec<Label>) -> Self {
        if let Some((i, _)) = seq.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)) {
            seq.rotate_left(i);
        }
        CircularOrder { seq }
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn label_set(&self) -> BTreeSet<Label> {
        self.seq.iter().cloned().collect()
    }

    pub fn reverse(&self) -> Self {
        let mut seq = self.seq.clone();
        seq.reverse();
        Self::canonical(seq)
    }

    /// Image of the order under a relabeling (must be injective on the order).
    pub fn map_labels(&self, f: impl Fn(&Label) -> Label) -> Self {
        Self::canonical(self.seq.iter().map(f).collect())
    }

    /// Restriction to the labels in `keep`.
    pub fn restrict(&self, keep: &BTreeSet<Label>) -> Self {
        Self::canonical(self.seq.iter().filter(|l| keep.contains(*l)).cloned().collect())
    }

    /// True iff the labels of `set` form one contiguous arc of the order.
    pub fn is_consecutive(&self, set: &BTreeSet<Label>) -> bool {
        let n = self.seq.len();
        let k = self.seq.iter().filter(|l| set.contains(*l)).count();
        if k <= 1 || k + 1 >= n {
            return true;
        }
        let mut changes = 0;
        for i in 0..n {
            let a = set.contains(&self.seq[i]);
            let b = set.contains(&self.seq[(i + 1) % n]);
            if a != b {
                changes += 1;
            }
        }
        changes == 2
    }
}

impl TryFrom<Vec<Label>> for CircularOrder {
    type Error = OrderError;
    fn try_from(v: Vec<Label>) -> Result<Self, OrderError> {
        CircularOrder::new(v)
    }
}

impl From<CircularOrder> for Vec<Label> {
    fn from(o: CircularOrder) -> Vec<Label> {
        o.seq
    }
}

impl fmt::Debug for CircularOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.seq.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", l)?;
        }
        write!(f, ")")
    }
}

/// A linear order of distinct labels.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct LinearOrder {
    pub seq: Vec<Label>,
}

impl LinearOrder {
    pub fn new(seq: Vec<Label>) -> Result<Self, OrderError> {
        check_distinct(&seq)?;
        Ok(LinearOrder { seq })
    }

    pub fn is_consecutive(&self, set: &BTreeSet<Label>) -> bool {
        let pos: Vec<usize> =
            (0..self.seq.len()).filter(|&i| set.contains(&self.seq[i])).collect();
        match (pos.first(), pos.last()) {
            (Some(a), Some(b)) => b - a + 1 == pos.len(),
            _ => true,
        }
    }
}

fn check_distinct(seq: &[Label]) -> Result<(), OrderError> {
    let mut seen = BTreeSet::new();
    for l in seq {
        if !seen.insert(l) {
            return Err(OrderError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// True iff `map(child)` (reversed when `reversed` is set) is the order that
/// `parent` induces on the image labels.
pub fn is_suborder(
    parent: &CircularOrder,
    child: &CircularOrder,
    map: &BTreeMap<Label, Label>,
    reversed: bool,
) -> Result<bool, OrderError> {
    let pos: HashMap<&Label, usize> =
        parent.seq.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let mut image = BTreeSet::new();
    let mut positions = Vec::with_capacity(child.len());
    for l in &child.seq {
        let m = map
            .get(l)
            .ok_or_else(|| OrderError::InvalidMap(format!("child label {l} is not mapped")))?;
        if !image.insert(m) {
            return Err(OrderError::InvalidMap(format!("label {m} hit twice")));
        }
        match pos.get(m) {
            Some(&p) => positions.push(p),
            None => return Ok(false),
        }
    }
    if reversed {
        positions.reverse();
    }
    let k = positions.len();
    let descents = (0..k).filter(|&i| positions[i] > positions[(i + 1) % k]).count();
    Ok(k <= 2 || descents == 1)
}

/// A bijection on a finite label set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Permutation {
    map: BTreeMap<Label, Label>,
}

impl Permutation {
    pub fn new(map: BTreeMap<Label, Label>) -> Result<Self, OrderError> {
        let dom: BTreeSet<&Label> = map.keys().collect();
        let img: BTreeSet<&Label> = map.values().collect();
        if img.len() != map.len() || dom != img {
            return Err(OrderError::InvalidPermutation(
                "map is not a bijection of its domain".into(),
            ));
        }
        Ok(Permutation { map })
    }

    /// Builds a permutation from cycles written as strings of single-character labels.
    pub fn from_cycles(cycles: &[&str]) -> Result<Self, OrderError> {
        let mut map = BTreeMap::new();
        for c in cycles {
            let ls = labels(c);
            for i in 0..ls.len() {
                if map.insert(ls[i].clone(), ls[(i + 1) % ls.len()].clone()).is_some() {
                    return Err(OrderError::DuplicateLabel(ls[i].clone()));
                }
            }
        }
        Permutation::new(map)
    }

    pub fn identity(domain: impl IntoIterator<Item = Label>) -> Self {
        Permutation { map: domain.into_iter().map(|l| (l.clone(), l)).collect() }
    }

    pub fn get(&self, l: &Label) -> Option<&Label> {
        self.map.get(l)
    }

    pub fn as_map(&self) -> &BTreeMap<Label, Label> {
        &self.map
    }

    pub fn domain(&self) -> impl Iterator<Item = &Label> {
        self.map.keys()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, o: &CircularOrder) -> CircularOrder {
        o.map_labels(|l| self.map.get(l).cloned().unwrap_or_else(|| l.clone()))
    }

    pub fn inverse(&self) -> Permutation {
        Permutation { map: self.map.iter().map(|(a, b)| (b.clone(), a.clone())).collect() }
    }
}

/// Cycles of `p`, each starting at its smallest label, ordered by that label.
pub fn cycle_decomposition(p: &Permutation) -> Vec<Vec<Label>> {
    let mut seen = BTreeSet::new();
    let mut cycles = Vec::new();
    for start in p.map.keys() {
        if seen.contains(start) {
            continue;
        }
        let mut cycle = vec![start.clone()];
        seen.insert(start.clone());
        let mut cur = &p.map[start];
        while cur != start {
            seen.insert(cur.clone());
            cycle.push(cur.clone());
            cur = &p.map[cur];
        }
        cycles.push(cycle);
    }
    cycles
}

/// An order `O` with `p(O) = O`, if one exists (all cycles of equal length).
pub fn order_preserving_witness(p: &Permutation) -> Option<CircularOrder> {
    let cycles = cycle_decomposition(p);
    let Some(first) = cycles.first() else {
        return Some(CircularOrder::empty());
    };
    let k = first.len();
    if cycles.iter().any(|c| c.len() != k) {
        return None;
    }
    let mut seq = Vec::with_capacity(p.len());
    for step in 0..k {
        for c in &cycles {
            seq.push(c[step].clone());
        }
    }
    Some(CircularOrder::canonical(seq))
}

/// An order `O` whose reversal equals `p(O)`, if one exists (every cycle has
/// length two except at most two fixpoints).
pub fn order_reversing_witness(p: &Permutation) -> Option<CircularOrder> {
    let cycles = cycle_decomposition(p);
    let mut pairs = Vec::new();
    let mut fixed = Vec::new();
    for c in cycles {
        match c.len() {
            1 => fixed.push(c[0].clone()),
            2 => pairs.push((c[0].clone(), c[1].clone())),
            _ => return None,
        }
    }
    if fixed.len() > 2 {
        return None;
    }
    let mut seq: Vec<Label> = pairs.iter().map(|(a, _)| a.clone()).collect();
    if let Some(f) = fixed.first() {
        seq.push(f.clone());
    }
    seq.extend(pairs.iter().rev().map(|(_, b)| b.clone()));
    if let Some(f) = fixed.get(1) {
        seq.push(f.clone());
    }
    Some(CircularOrder::canonical(seq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id_map(s: &str) -> BTreeMap<Label, Label> {
        labels(s).into_iter().map(|l| (l.clone(), l)).collect()
    }

    #[test]
    fn rotations_are_equal() {
        assert_eq!(CircularOrder::of("baedc"), CircularOrder::of("dcbae"));
        assert_ne!(CircularOrder::of("abcd"), CircularOrder::of("abdc"));
        let o = CircularOrder::of("cabd");
        assert_eq!(o.reverse().reverse(), o);
    }

    #[test]
    fn suborders() {
        let p = CircularOrder::of("abcdef");
        assert!(is_suborder(&p, &CircularOrder::of("ace"), &id_map("ace"), false).unwrap());
        assert!(!is_suborder(&p, &CircularOrder::of("aec"), &id_map("aec"), false).unwrap());
        assert!(is_suborder(&p, &CircularOrder::of("aec"), &id_map("aec"), true).unwrap());
        let q = CircularOrder::of("dcbae");
        assert!(is_suborder(&q, &CircularOrder::of("ba"), &id_map("ab"), false).unwrap());
        assert!(is_suborder(&p, &p, &id_map("abcdef"), false).unwrap());
    }

    #[test]
    fn suborder_rejects_bad_maps() {
        let p = CircularOrder::of("abc");
        let mut m = id_map("ab");
        assert!(is_suborder(&p, &CircularOrder::of("abc"), &m, false).is_err());
        m.insert(Label::from("c"), Label::from("a"));
        assert!(is_suborder(&p, &CircularOrder::of("abc"), &m, false).is_err());
    }

    #[test]
    fn cycles_of_rotation_by_two() {
        let p = Permutation::from_cycles(&["aec", "bfd"]).unwrap();
        let cycles = cycle_decomposition(&p);
        assert_eq!(cycles, vec![labels("aec"), labels("bfd")]);
        let id = Permutation::identity(labels("ab"));
        assert_eq!(cycle_decomposition(&id).len(), 2);
        let q = Permutation::from_cycles(&["ab", "c"]).unwrap();
        assert_eq!(cycle_decomposition(&q), vec![labels("ab"), labels("c")]);
    }

    #[test]
    fn preserving_witnesses() {
        let p = Permutation::from_cycles(&["aec", "bfd"]).unwrap();
        let o = order_preserving_witness(&p).unwrap();
        assert_eq!(p.apply(&o), o);
        assert_eq!(o, CircularOrder::of("abefcd"));
        let q = Permutation::from_cycles(&["ab", "cde"]).unwrap();
        assert!(order_preserving_witness(&q).is_none());
    }

    #[test]
    fn reversing_witnesses() {
        let p = Permutation::from_cycles(&["af", "be", "cd"]).unwrap();
        let o = order_reversing_witness(&p).unwrap();
        assert_eq!(o, CircularOrder::of("abcdef"));
        assert_eq!(p.apply(&o), o.reverse());
        assert!(order_reversing_witness(&Permutation::from_cycles(&["abc"]).unwrap()).is_none());
        let q = Permutation::from_cycles(&["ab", "c", "d"]).unwrap();
        let w = order_reversing_witness(&q).unwrap();
        assert_eq!(w, CircularOrder::of("acbd"));
        assert_eq!(q.apply(&w), w.reverse());
    }

    #[test]
    fn consecutive_arcs() {
        let o = CircularOrder::of("abcdef");
        let s = |x: &str| labels(x).into_iter().collect::<BTreeSet<_>>();
        assert!(o.is_consecutive(&s("fab")));
        assert!(!o.is_consecutive(&s("ac")));
        assert!(o.is_consecutive(&s("bcdef")));
    }
}
