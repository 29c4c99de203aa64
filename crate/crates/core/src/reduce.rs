//! Order-fixed summation.
//!
//! Sums are formed by a balanced binary tree over the storage order, so the
//! result depends only on the input sequence, never on scheduling.

use std::ops::Add;

const LEAF: usize = 16;

pub fn pairwise_sum<V>(values: &[V], zero: V) -> V
where
    V: Copy + Add<Output = V>,
{
    if values.len() <= LEAF {
        return values.iter().fold(zero, |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid], zero) + pairwise_sum(&values[mid..], zero)
}
