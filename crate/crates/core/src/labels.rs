//! Label files: one `node_id label_id` pair per line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{is_skipped, parse_pair, ParsedGraph};

/// Raw `(node_id, label_id)` pairs, in file order. A node may repeat.
pub fn parse_label_pairs(text: &str, comment_prefix: &str) -> Result<Vec<(i64, i64)>> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if is_skipped(line, comment_prefix) {
            continue;
        }
        pairs.push(parse_pair(line, idx + 1)?);
    }
    Ok(pairs)
}

/// Assigns one label id to every node of `parsed`.
///
/// A node listed with several labels takes the candidate label that occurs
/// most often among its neighbors' labels; ties go to the smallest label id.
/// Pairs for nodes outside `parsed` are ignored, so a label file for the full
/// dataset can be joined onto its largest component.
pub fn resolve_labels(parsed: &ParsedGraph, pairs: &[(i64, i64)]) -> Result<Vec<i64>> {
    let index = parsed.index_of();
    let n = parsed.graph.n();
    let mut candidates: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); n];
    for &(node, label) in pairs {
        if let Some(&i) = index.get(&node) {
            candidates[i].insert(label);
        }
    }
    if let Some(i) = candidates.iter().position(|c| c.is_empty()) {
        return Err(Error::InvalidArgument(format!(
            "label file has no label for node {}",
            parsed.node_ids[i]
        )));
    }

    let resolved = (0..n)
        .map(|i| {
            let own = &candidates[i];
            if own.len() == 1 {
                return *own.iter().next().unwrap();
            }
            let mut counts: BTreeMap<i64, usize> = own.iter().map(|&l| (l, 0)).collect();
            for &j in parsed.graph.neighbors(i) {
                for label in &candidates[j] {
                    if let Some(c) = counts.get_mut(label) {
                        *c += 1;
                    }
                }
            }
            // BTreeMap iterates ascending, so the first maximum is the smallest id.
            counts
                .iter()
                .fold((i64::MAX, 0usize, false), |(best, bc, seen), (&l, &c)| {
                    if !seen || c > bc {
                        (l, c, true)
                    } else {
                        (best, bc, seen)
                    }
                })
                .0
        })
        .collect();
    Ok(resolved)
}

/// Maps arbitrary label ids onto `0..K` by ascending label id.
pub fn compact_labels(labels: &[i64]) -> Vec<usize> {
    let distinct: BTreeSet<i64> = labels.iter().copied().collect();
    let rank: HashMap<i64, usize> = distinct
        .into_iter()
        .enumerate()
        .map(|(k, l)| (l, k))
        .collect();
    labels.iter().map(|l| rank[l]).collect()
}

/// Serializes `labels[i]` for node `node_ids[i]`.
pub fn format_labels(node_ids: &[i64], labels: &[usize]) -> String {
    let mut out = String::with_capacity(labels.len() * 8);
    for (id, label) in node_ids.iter().zip(labels) {
        let _ = writeln!(out, "{id} {label}");
    }
    out
}
