use std::collections::HashMap;
use std::fmt;

use super::ModelError;

/// What the index inside a block counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexKind {
    Scalar,
    /// Modeled timestep, `t`.
    Timestep,
    /// Input period of the full year, `n`.
    InputPeriod,
    /// Representative period slot, `m`.
    RepPeriod,
}

impl IndexKind {
    fn prefix(self) -> &'static str {
        match self {
            IndexKind::Scalar => "",
            IndexKind::Timestep => "t",
            IndexKind::InputPeriod => "n",
            IndexKind::RepPeriod => "m",
        }
    }

    fn from_prefix(c: char) -> Option<Self> {
        match c {
            't' => Some(IndexKind::Timestep),
            'n' => Some(IndexKind::InputPeriod),
            'm' => Some(IndexKind::RepPeriod),
            _ => None,
        }
    }
}

/// A dense run of LP indices sharing a family and an entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub family: String,
    pub entity: String,
    pub kind: IndexKind,
    pub start: usize,
    pub len: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    pub fn at(&self, k: usize) -> usize {
        debug_assert!(k < self.len, "{}:{} index {k} >= {}", self.family, self.entity, self.len);
        self.start + k
    }

    pub fn name(&self, k: usize) -> String {
        match self.kind {
            IndexKind::Scalar => format!("{}:{}", self.family, self.entity),
            kind => format!("{}:{}:{}{}", self.family, self.entity, kind.prefix(), k),
        }
    }
}

/// A parsed LP name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameParts {
    pub family: String,
    pub entity: String,
    pub kind: IndexKind,
    pub index: usize,
}

impl NameParts {
    pub fn parse(name: &str) -> Option<NameParts> {
        let mut parts = name.splitn(3, ':');
        let family = parts.next()?.to_string();
        let entity = parts.next()?.to_string();
        let (kind, index) = match parts.next() {
            None => (IndexKind::Scalar, 0),
            Some(tail) => {
                let mut chars = tail.chars();
                let kind = IndexKind::from_prefix(chars.next()?)?;
                (kind, chars.as_str().parse().ok()?)
            }
        };
        Some(NameParts {
            family,
            entity,
            kind,
            index,
        })
    }
}

/// Name → index-range registry for the columns or rows of one LP.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    blocks: Vec<Block>,
    lookup: HashMap<(String, String), usize>,
    next: usize,
}

const MAX_ENTRIES: usize = u32::MAX as usize;

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total number of registered indices.
    pub fn len(&self) -> usize {
        self.next
    }

    pub fn is_empty(&self) -> bool {
        self.next == 0
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Registers the next `len` indices. Blocks are always appended, so
    /// indices are dense and non-overlapping by construction.
    pub fn push(
        &mut self,
        family: &str,
        entity: &str,
        kind: IndexKind,
        len: usize,
    ) -> Result<Block, ModelError> {
        let key = (family.to_string(), entity.to_string());
        if self.lookup.contains_key(&key) {
            return Err(ModelError::DuplicateEntry(format!("{family}:{entity}")));
        }
        let end = self.next.checked_add(len).filter(|&e| e <= MAX_ENTRIES);
        let Some(end) = end else {
            return Err(ModelError::RegistryOverflow {
                family: family.to_string(),
                requested: len,
            });
        };
        let block = Block {
            family: key.0.clone(),
            entity: key.1.clone(),
            kind,
            start: self.next,
            len,
        };
        self.lookup.insert(key, self.blocks.len());
        self.blocks.push(block.clone());
        self.next = end;
        Ok(block)
    }

    pub fn get(&self, family: &str, entity: &str) -> Option<&Block> {
        self.lookup
            .get(&(family.to_string(), entity.to_string()))
            .map(|&b| &self.blocks[b])
    }

    pub fn index(&self, family: &str, entity: &str, k: usize) -> Option<usize> {
        self.get(family, entity).filter(|b| k < b.len).map(|b| b.start + k)
    }

    /// Block owning LP index `i` and the offset within it.
    pub fn locate(&self, i: usize) -> Option<(&Block, usize)> {
        if i >= self.next {
            return None;
        }
        let pos = self.blocks.partition_point(|b| b.start + b.len <= i);
        let block = self.blocks.get(pos)?;
        Some((block, i - block.start))
    }

    pub fn name_of(&self, i: usize) -> Option<String> {
        self.locate(i).map(|(b, k)| b.name(k))
    }

    /// LP index of a name produced by [`Block::name`].
    pub fn resolve(&self, name: &str) -> Option<usize> {
        let parts = NameParts::parse(name)?;
        let block = self.get(&parts.family, &parts.entity)?;
        (block.kind == parts.kind).then_some(())?;
        self.index(&parts.family, &parts.entity, parts.index)
    }

    /// All blocks of one family, in registration order.
    pub fn family<'a>(&'a self, family: &'a str) -> impl Iterator<Item = &'a Block> + 'a {
        self.blocks.iter().filter(move |b| b.family == family)
    }
}

impl fmt::Display for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            writeln!(f, "{}:{} [{}..{})", b.family, b.entity, b.start, b.start + b.len)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let mut r = Registry::new();
        r.push("cap", "gas", IndexKind::Scalar, 1).unwrap();
        r.push("gen", "gas", IndexKind::Timestep, 24).unwrap();
        r.push("q", "ldes", IndexKind::InputPeriod, 365).unwrap();
        r.push("dq", "ldes", IndexKind::RepPeriod, 0).unwrap();
        r.push("dq", "ldes2", IndexKind::RepPeriod, 5).unwrap();
        for i in 0..r.len() {
            let name = r.name_of(i).unwrap();
            assert_eq!(r.resolve(&name), Some(i), "{name}");
        }
        assert_eq!(r.name_of(0).unwrap(), "cap:gas");
        assert_eq!(r.name_of(3).unwrap(), "gen:gas:t2");
        assert_eq!(r.resolve("q:ldes:t3"), None);
        assert_eq!(r.name_of(r.len()), None);
    }

    #[test]
    fn duplicates_are_rejected() {
        let mut r = Registry::new();
        r.push("cap", "gas", IndexKind::Scalar, 1).unwrap();
        assert!(matches!(
            r.push("cap", "gas", IndexKind::Scalar, 1),
            Err(ModelError::DuplicateEntry(_))
        ));
    }

    #[test]
    fn overflow_is_reported() {
        let mut r = Registry::new();
        r.push("a", "x", IndexKind::Timestep, MAX_ENTRIES - 1).unwrap();
        assert!(matches!(
            r.push("b", "x", IndexKind::Timestep, 2),
            Err(ModelError::RegistryOverflow { .. })
        ));
    }
}
