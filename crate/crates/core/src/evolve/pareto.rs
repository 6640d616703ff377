use serde::{Deserialize, Serialize};

use crate::dsl::{parse, pretty_print, DslError, NeuronProgram};

#[derive(Debug, Clone, PartialEq)]
pub struct FrontEntry {
    pub complexity: f64,
    pub loss: f64,
    pub id: usize,
    pub program: NeuronProgram,
}

impl FrontEntry {
    /// At most as complex and at most as lossy, and strictly better in one.
    pub fn dominates(&self, other: &FrontEntry) -> bool {
        dominates((self.complexity, self.loss), (other.complexity, other.loss))
    }
}

pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Non-dominated programs sorted by complexity; along the list complexity
/// strictly increases and loss strictly decreases.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoFront {
    entries: Vec<FrontEntry>,
}

impl ParetoFront {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[FrontEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The member with the lowest loss.
    pub fn best(&self) -> Option<&FrontEntry> {
        self.entries.last()
    }

    /// Inserts `c` unless a member dominates or equals it, dropping the
    /// members it dominates. Non-finite points are rejected.
    pub fn update(&mut self, c: FrontEntry) -> bool {
        if !c.loss.is_finite() || !c.complexity.is_finite() {
            return false;
        }
        let blocked = self
            .entries
            .iter()
            .any(|e| e.dominates(&c) || (e.complexity == c.complexity && e.loss == c.loss));
        if blocked {
            return false;
        }
        self.entries.retain(|e| !c.dominates(e));
        let at = self.entries.partition_point(|e| e.complexity < c.complexity);
        self.entries.insert(at, c);
        true
    }

    pub fn is_valid(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[0].complexity < w[1].complexity && w[0].loss > w[1].loss)
            && self.entries.iter().all(|e| e.loss.is_finite())
    }

    pub fn to_snapshot(&self, generation: usize) -> FrontSnapshot {
        FrontSnapshot {
            format: FRONT_FORMAT.to_owned(),
            version: FRONT_VERSION,
            generation,
            entries: self
                .entries
                .iter()
                .map(|e| SnapshotEntry {
                    id: e.id,
                    complexity: e.complexity,
                    loss: e.loss,
                    program: pretty_print(&e.program),
                })
                .collect(),
        }
    }

    pub fn from_snapshot(s: &FrontSnapshot) -> Result<Self, DslError> {
        let mut f = ParetoFront::new();
        for e in &s.entries {
            f.update(FrontEntry { complexity: e.complexity, loss: e.loss, id: e.id, program: parse(&e.program)? });
        }
        Ok(f)
    }
}

pub const FRONT_FORMAT: &str = "arn-front";
pub const FRONT_VERSION: u32 = 1;

/// Serialised front, written as JSON after every generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSnapshot {
    pub format: String,
    pub version: u32,
    pub generation: usize,
    pub entries: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub id: usize,
    pub complexity: f64,
    pub loss: f64,
    pub program: String,
}
