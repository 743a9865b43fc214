//! Resource kinds and per-player card counts.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// The five resource kinds, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResourceKind {
    Clay,
    Ore,
    Sheep,
    Wheat,
    Wood,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 5] = [
        ResourceKind::Clay,
        ResourceKind::Ore,
        ResourceKind::Sheep,
        ResourceKind::Wheat,
        ResourceKind::Wood,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Single-letter code used by trade mnemonics (D is wood).
    pub fn letter(self) -> char {
        match self {
            ResourceKind::Clay => 'C',
            ResourceKind::Ore => 'O',
            ResourceKind::Sheep => 'S',
            ResourceKind::Wheat => 'W',
            ResourceKind::Wood => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'C' => Some(ResourceKind::Clay),
            'O' => Some(ResourceKind::Ore),
            'S' => Some(ResourceKind::Sheep),
            'W' => Some(ResourceKind::Wheat),
            'D' => Some(ResourceKind::Wood),
            _ => None,
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Card counts per resource kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ResourceSet([u32; 5]);

impl ResourceSet {
    pub const EMPTY: ResourceSet = ResourceSet([0; 5]);

    pub const fn new(clay: u32, ore: u32, sheep: u32, wheat: u32, wood: u32) -> Self {
        ResourceSet([clay, ore, sheep, wheat, wood])
    }

    pub fn from_counts(counts: [u32; 5]) -> Self {
        ResourceSet(counts)
    }

    pub fn single(kind: ResourceKind, n: u32) -> Self {
        let mut s = Self::EMPTY;
        s[kind] = n;
        s
    }

    pub fn counts(&self) -> [u32; 5] {
        self.0
    }

    pub fn get(&self, kind: ResourceKind) -> u32 {
        self.0[kind.index()]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn contains(&self, other: &ResourceSet) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a >= b)
    }

    pub fn add(&mut self, other: &ResourceSet) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
    }

    /// Removes `other`; returns false and leaves `self` untouched if not covered.
    pub fn try_remove(&mut self, other: &ResourceSet) -> bool {
        if !self.contains(other) {
            return false;
        }
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a -= b;
        }
        true
    }

    /// Per-kind `max(0, self - other)`.
    pub fn saturating_sub(&self, other: &ResourceSet) -> ResourceSet {
        let mut out = ResourceSet::EMPTY;
        for i in 0..5 {
            out.0[i] = self.0[i].saturating_sub(other.0[i]);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (ResourceKind, u32)> + '_ {
        ResourceKind::ALL.iter().map(move |&k| (k, self.0[k.index()]))
    }

    /// Most-held kind; ties go to the lower canonical index.
    pub fn most_held(&self) -> Option<ResourceKind> {
        let mut best: Option<(ResourceKind, u32)> = None;
        for (k, n) in self.iter() {
            if n > 0 && best.is_none_or(|(_, b)| n > b) {
                best = Some((k, n));
            }
        }
        best.map(|(k, _)| k)
    }

    /// Comma-separated counts in canonical order, e.g. `1,0,2,0,0`.
    pub fn to_field(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        parts.join(",")
    }

    pub fn parse_field(s: &str) -> Option<ResourceSet> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 5 {
            return None;
        }
        let mut counts = [0u32; 5];
        for (c, p) in counts.iter_mut().zip(parts) {
            *c = p.parse().ok()?;
        }
        Some(ResourceSet(counts))
    }
}

impl Index<ResourceKind> for ResourceSet {
    type Output = u32;
    fn index(&self, kind: ResourceKind) -> &u32 {
        &self.0[kind.index()]
    }
}

impl IndexMut<ResourceKind> for ResourceSet {
    fn index_mut(&mut self, kind: ResourceKind) -> &mut u32 {
        &mut self.0[kind.index()]
    }
}

impl fmt::Display for ResourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_field())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order() {
        let mut sorted = ResourceKind::ALL;
        sorted.sort();
        assert_eq!(sorted, ResourceKind::ALL);
        assert_eq!(ResourceKind::Clay.index(), 0);
        assert_eq!(ResourceKind::Wood.index(), 4);
    }

    #[test]
    fn letters_round_trip() {
        for k in ResourceKind::ALL {
            assert_eq!(ResourceKind::from_letter(k.letter()), Some(k));
        }
        assert_eq!(ResourceKind::from_letter('X'), None);
    }

    #[test]
    fn remove_is_all_or_nothing() {
        let mut s = ResourceSet::new(1, 0, 2, 0, 0);
        assert!(!s.try_remove(&ResourceSet::new(1, 1, 0, 0, 0)));
        assert_eq!(s, ResourceSet::new(1, 0, 2, 0, 0));
        assert!(s.try_remove(&ResourceSet::new(1, 0, 1, 0, 0)));
        assert_eq!(s, ResourceSet::new(0, 0, 1, 0, 0));
    }

    #[test]
    fn most_held_ties_break_canonically() {
        assert_eq!(ResourceSet::new(0, 2, 2, 1, 0).most_held(), Some(ResourceKind::Ore));
        assert_eq!(ResourceSet::EMPTY.most_held(), None);
    }

    #[test]
    fn field_codec() {
        let s = ResourceSet::new(3, 0, 1, 12, 4);
        assert_eq!(s.to_field(), "3,0,1,12,4");
        assert_eq!(ResourceSet::parse_field("3,0,1,12,4"), Some(s));
        assert_eq!(ResourceSet::parse_field("3,0,1"), None);
    }
}
