//! Element indexing and dense per-element storage.
//!
//! Elements are addressed by 1-based `(p, q)`: `p` runs along the RIS
//! length (columns, `1..=P`), `q` along the width (rows, `1..=Q`).
//! Storage is row-major over rows `q`, so the linear offset of `(p, q)` is
//! `(q - 1) * P + (p - 1)`.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementIndex {
    pub p: usize,
    pub q: usize,
}

impl ElementIndex {
    pub const fn new(p: usize, q: usize) -> Self {
        Self { p, q }
    }
}

impl fmt::Display for ElementIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<V> {
    p_count: usize,
    q_count: usize,
    data: Vec<V>,
}

impl<V> Grid<V> {
    /// Builds a grid by evaluating `f` at every index in storage order.
    pub fn from_fn(p_count: usize, q_count: usize, mut f: impl FnMut(ElementIndex) -> V) -> Self {
        let mut data = Vec::with_capacity(p_count * q_count);
        for q in 1..=q_count {
            for p in 1..=p_count {
                data.push(f(ElementIndex::new(p, q)));
            }
        }
        Self {
            p_count,
            q_count,
            data,
        }
    }

    /// Wraps storage-ordered values. Panics if the length is not `P * Q`.
    pub fn from_vec(p_count: usize, q_count: usize, data: Vec<V>) -> Self {
        assert_eq!(
            data.len(),
            p_count * q_count,
            "grid storage length must equal P * Q"
        );
        Self {
            p_count,
            q_count,
            data,
        }
    }

    pub fn p_count(&self) -> usize {
        self.p_count
    }

    pub fn q_count(&self) -> usize {
        self.q_count
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.p_count, self.q_count)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn contains(&self, index: ElementIndex) -> bool {
        (1..=self.p_count).contains(&index.p) && (1..=self.q_count).contains(&index.q)
    }

    pub fn offset(&self, index: ElementIndex) -> usize {
        debug_assert!(self.contains(index), "index {index} out of grid");
        (index.q - 1) * self.p_count + (index.p - 1)
    }

    pub fn index_at(&self, offset: usize) -> ElementIndex {
        ElementIndex::new(offset % self.p_count + 1, offset / self.p_count + 1)
    }

    pub fn get(&self, index: ElementIndex) -> Option<&V> {
        if self.contains(index) {
            self.data.get(self.offset(index))
        } else {
            None
        }
    }

    pub fn as_slice(&self) -> &[V] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<V> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, V> {
        self.data.iter()
    }

    /// Values paired with their element index, in storage order.
    pub fn indexed(&self) -> impl Iterator<Item = (ElementIndex, &V)> + '_ {
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.index_at(i), v))
    }

    pub fn map<W>(&self, f: impl FnMut(&V) -> W) -> Grid<W> {
        Grid {
            p_count: self.p_count,
            q_count: self.q_count,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<V> std::ops::Index<ElementIndex> for Grid<V> {
    type Output = V;

    fn index(&self, index: ElementIndex) -> &V {
        assert!(self.contains(index), "index {index} out of grid");
        &self.data[self.offset(index)]
    }
}
