//! Taint label sets and the ℒ⁻/ℒ⁺ transformation applied when a message
//! passes a service. The runtime and the verifier both go through
//! [`LabelTransform::apply`].

use std::fmt;
use std::hash::{Hash, Hasher};

use indexmap::IndexSet;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::logic::{unify, Substitution, Term};

/// Canonical (sorted) set of ground label terms with O(1) membership.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    items: IndexSet<Term, FxBuildHasher>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, label: &Term) -> bool {
        self.items.contains(label)
    }

    /// Inserts a ground label. Returns false if it was already present.
    ///
    /// # Panics
    /// If `label` is not ground.
    pub fn insert(&mut self, label: Term) -> bool {
        assert!(label.is_ground(), "label {label} is not ground");
        self.items.insert_sorted(label).1
    }

    pub fn remove(&mut self, label: &Term) -> bool {
        self.items.shift_remove(label)
    }

    /// Removes every label that unifies with `pattern`.
    pub fn remove_matching(&mut self, pattern: &Term) {
        if pattern.is_ground() {
            self.remove(pattern);
        } else {
            self.items
                .retain(|l| unify(pattern, l, &Substitution::new()).is_none());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.items.iter()
    }

    pub fn union(&self, other: &LabelSet) -> LabelSet {
        let mut out = self.clone();
        out.extend(other.iter().cloned());
        out
    }

    pub fn is_subset(&self, other: &LabelSet) -> bool {
        self.items.is_subset(&other.items)
    }

    /// Every label unifying with `pattern` under `bindings`, as extended
    /// substitutions in set order. Ground patterns use the hash index.
    pub fn find_unifying(&self, pattern: &Term, bindings: &Substitution) -> Vec<Substitution> {
        let resolved = crate::logic::resolve(pattern, bindings);
        if resolved.is_ground() {
            return if self.contains(&resolved) {
                vec![bindings.clone()]
            } else {
                Vec::new()
            };
        }
        self.items
            .iter()
            .filter_map(|l| unify(&resolved, l, bindings))
            .collect()
    }

    /// Solves the conjunction "every pattern is a member" with shared
    /// variables, returning the first satisfying substitution.
    pub fn satisfies_all(&self, patterns: &[Term]) -> Option<Substitution> {
        fn go(set: &LabelSet, patterns: &[Term], s: &Substitution) -> Option<Substitution> {
            let Some((first, rest)) = patterns.split_first() else {
                return Some(s.clone());
            };
            set.find_unifying(first, s)
                .into_iter()
                .find_map(|s2| go(set, rest, &s2))
        }
        go(self, patterns, &Substitution::new())
    }

    pub fn to_vec(&self) -> Vec<Term> {
        self.items.iter().cloned().collect()
    }
}

impl Hash for LabelSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.items.len().hash(state);
        for t in &self.items {
            t.hash(state);
        }
    }
}

impl Extend<Term> for LabelSet {
    fn extend<I: IntoIterator<Item = Term>>(&mut self, iter: I) {
        for t in iter {
            self.insert(t);
        }
    }
}

impl FromIterator<Term> for LabelSet {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> Self {
        let mut s = LabelSet::new();
        s.extend(iter);
        s
    }
}

impl<'a> IntoIterator for &'a LabelSet {
    type Item = &'a Term;
    type IntoIter = indexmap::set::Iter<'a, Term>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// `[a, merge(10)]`
impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, t) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(self.items.iter())
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let terms = Vec::<Term>::deserialize(de)?;
        if let Some(t) = terms.iter().find(|t| !t.is_ground()) {
            return Err(serde::de::Error::custom(format!("label {t} is not ground")));
        }
        Ok(terms.into_iter().collect())
    }
}

/// ℒ⁻ and ℒ⁺ of one service (or the union over several services).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelTransform {
    pub removes: Vec<Term>,
    pub creates: Vec<Term>,
}

impl LabelTransform {
    pub fn is_identity(&self) -> bool {
        self.removes.is_empty() && self.creates.is_empty()
    }

    /// `labels \ ℒ⁻ ∪ ℒ⁺`. Removal is by unification so `classification(_)`
    /// strips every classification label.
    pub fn apply(&self, labels: &LabelSet) -> LabelSet {
        let mut out = labels.clone();
        for r in &self.removes {
            out.remove_matching(r);
        }
        out.extend(self.creates.iter().cloned());
        out
    }

    /// Labels a fresh message gets at a `from`: just ℒ⁺.
    pub fn initial(&self) -> LabelSet {
        self.creates.iter().cloned().collect()
    }

    pub fn merge(&mut self, other: &LabelTransform) {
        for r in &other.removes {
            if !self.removes.contains(r) {
                self.removes.push(r.clone());
            }
        }
        for c in &other.creates {
            if !self.creates.contains(c) {
                self.creates.push(c.clone());
            }
        }
    }
}
