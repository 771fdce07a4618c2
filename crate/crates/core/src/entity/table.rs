use serde::{Deserialize, Serialize};

use super::EntityType;

/// What happens when a value that is already in the table is mentioned again.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepeatPolicy {
    /// Re-emit the existing index.
    #[default]
    Reuse,
    /// Give every mention a new index (ablation only; breaks value uniqueness).
    MintFresh,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub index: usize,
    pub normalized: String,
    pub surface: String,
}

/// Per-dialog registry of `(type, index) ↔ value`, in first-occurrence order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<TableEntry>", into = "Vec<TableEntry>")]
pub struct IndexedEntityTable {
    entries: Vec<TableEntry>,
    next: [usize; 5],
    policy: RepeatPolicy,
}

impl From<Vec<TableEntry>> for IndexedEntityTable {
    fn from(entries: Vec<TableEntry>) -> Self {
        Self::from_entries(entries)
    }
}

impl From<IndexedEntityTable> for Vec<TableEntry> {
    fn from(t: IndexedEntityTable) -> Self {
        t.entries
    }
}

impl IndexedEntityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_policy(policy: RepeatPolicy) -> Self {
        Self { policy, ..Self::default() }
    }

    /// Table holding `entries`, with counters past the largest index per type.
    pub fn from_entries(entries: Vec<TableEntry>) -> Self {
        let mut next = [0; 5];
        for e in &entries {
            let slot = &mut next[e.entity_type.ordinal()];
            *slot = (*slot).max(e.index + 1);
        }
        Self { entries, next, policy: RepeatPolicy::Reuse }
    }

    pub fn policy(&self) -> RepeatPolicy {
        self.policy
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, ty: EntityType) -> usize {
        self.next[ty.ordinal()]
    }

    /// Index of an existing `(type, normalized)` value.
    pub fn lookup(&self, ty: EntityType, normalized: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.entity_type == ty && e.normalized == normalized)
            .map(|e| e.index)
    }

    /// Latest index registered for a value (differs from [`lookup`](Self::lookup)
    /// only under [`RepeatPolicy::MintFresh`]).
    pub fn lookup_latest(&self, ty: EntityType, normalized: &str) -> Option<usize> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.entity_type == ty && e.normalized == normalized)
            .map(|e| e.index)
    }

    pub fn resolve(&self, ty: EntityType, index: usize) -> Option<&TableEntry> {
        self.entries.iter().find(|e| e.entity_type == ty && e.index == index)
    }

    /// Index for a mention, registering it when new (or always, when minting fresh).
    pub fn index_of(&mut self, ty: EntityType, normalized: &str, surface: &str) -> usize {
        if self.policy == RepeatPolicy::Reuse {
            if let Some(i) = self.lookup(ty, normalized) {
                return i;
            }
        }
        let slot = &mut self.next[ty.ordinal()];
        let index = *slot;
        *slot += 1;
        self.entries.push(TableEntry {
            entity_type: ty,
            index,
            normalized: normalized.to_string(),
            surface: surface.to_string(),
        });
        index
    }

    /// Values of one type in index order.
    pub fn values(&self, ty: EntityType) -> impl Iterator<Item = &TableEntry> {
        self.entries.iter().filter(move |e| e.entity_type == ty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_per_type_indexes_and_reuse() {
        let mut t = IndexedEntityTable::new();
        assert_eq!(t.index_of(EntityType::Location, "cmu", "cmu"), 0);
        assert_eq!(t.index_of(EntityType::Hour, "10", "ten"), 0);
        assert_eq!(t.index_of(EntityType::Location, "airport", "airport"), 1);
        assert_eq!(t.index_of(EntityType::Location, "cmu", "CMU"), 0);
        assert_eq!(t.len(), 3);
        assert_eq!(t.count(EntityType::Location), 2);
        assert_eq!(t.resolve(EntityType::Location, 0).unwrap().surface, "cmu");
        assert!(t.resolve(EntityType::Location, 2).is_none());
    }

    #[test]
    fn mint_fresh_policy_allocates_on_repeat() {
        let mut t = IndexedEntityTable::with_policy(RepeatPolicy::MintFresh);
        assert_eq!(t.index_of(EntityType::Location, "cmu", "cmu"), 0);
        assert_eq!(t.index_of(EntityType::Location, "cmu", "cmu"), 1);
        assert_eq!(t.lookup(EntityType::Location, "cmu"), Some(0));
        assert_eq!(t.lookup_latest(EntityType::Location, "cmu"), Some(1));
    }

    #[test]
    fn from_entries_restores_counters() {
        let mut t = IndexedEntityTable::new();
        t.index_of(EntityType::Location, "a", "a");
        t.index_of(EntityType::Location, "b", "b");
        let json = serde_json::to_string(&t).unwrap();
        let back: IndexedEntityTable = serde_json::from_str(&json).unwrap();
        let mut back = IndexedEntityTable::from_entries(back.entries().to_vec());
        assert_eq!(back.index_of(EntityType::Location, "c", "c"), 2);
    }
}
