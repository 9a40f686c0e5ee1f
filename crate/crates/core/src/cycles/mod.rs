//! Closed walks ("cycles") on vertex labels, their canonical forms, the
//! marked-edge rule and its Dyck-path image, the dominant classes `C(l)`,
//! and exact brute-force expectations for small Wigner/Wishart matrices.

mod dominant;
mod oracle;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub use dominant::{
    bipartite_split, classify_bipartite, dominant_by_filter, enumerate_dominant,
    first_vertex_multiplicity, first_vertex_multiplicity_histogram, loops_are_dominant,
    MAX_DOMINANT_L,
};
pub use oracle::{
    c_pnn_count, entry_variance_leading, exact_wigner_entry_stats,
    exact_wigner_entry_stats_by_shape, exact_wigner_trace_mean, exact_wishart_trace_mean,
    BipartiteCount, EntryStats, ORACLE_CAP,
};

/// A closed walk `(i_0, ..., i_{q-1}, i_0)`.
///
/// In canonical form vertices are labelled `0, 1, 2, ...` by first
/// appearance, so two walks are isomorphic iff their canonical forms agree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CycleWord {
    vertices: Vec<u32>,
    canonical: bool,
}

impl CycleWord {
    /// Wraps a closed vertex sequence without relabelling.
    pub fn new(vertices: Vec<u32>) -> Result<Self> {
        match (vertices.first(), vertices.last()) {
            (Some(a), Some(b)) if vertices.len() >= 2 && a == b => {
                let canonical = is_first_appearance_labelled(&vertices);
                Ok(Self {
                    vertices,
                    canonical,
                })
            }
            _ => Err(Error::invalid(format!(
                "not a closed walk: {vertices:?} (first vertex must equal last, length >= 2)"
            ))),
        }
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Number of edges `q`.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Directed edges `(i_{k-1}, i_k)`, `k = 1..=q`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn distinct_vertices(&self) -> usize {
        let mut v: Vec<u32> = self.vertices[..self.len()].to_vec();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    /// Undirected edge multiplicities.
    pub fn edge_multiplicities(&self) -> HashMap<(u32, u32), usize> {
        let mut m = HashMap::new();
        for (a, b) in self.edges() {
            *m.entry(undirected(a, b)).or_insert(0) += 1;
        }
        m
    }
}

impl fmt::Display for CycleWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vertices.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

fn undirected(a: u32, b: u32) -> (u32, u32) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn is_first_appearance_labelled(v: &[u32]) -> bool {
    let mut next = 0u32;
    for &x in v {
        if x == next {
            next += 1;
        } else if x > next {
            return false;
        }
    }
    true
}

/// Relabels a closed walk by order of first appearance.
pub fn canonicalize(raw: &[u32]) -> Result<CycleWord> {
    let word = CycleWord::new(raw.to_vec())?;
    let mut map: HashMap<u32, u32> = HashMap::new();
    let vertices = word
        .vertices
        .iter()
        .map(|&x| {
            let next = map.len() as u32;
            *map.entry(x).or_insert(next)
        })
        .collect();
    Ok(CycleWord {
        vertices,
        canonical: true,
    })
}

/// Every undirected edge is traversed an even number of times.
pub fn is_even_cycle(c: &CycleWord) -> bool {
    c.edge_multiplicities().values().all(|m| m % 2 == 0)
}

/// A cycle together with its edge marks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedWalk {
    pub cycle: CycleWord,
    pub marks: Vec<bool>,
}

impl MarkedWalk {
    pub fn marked_count(&self) -> usize {
        self.marks.iter().filter(|&&m| m).count()
    }
}

/// Edge `k` is marked iff an even number of earlier edges share its
/// undirected edge.
pub fn mark_edges(c: &CycleWord) -> MarkedWalk {
    let mut seen: HashMap<(u32, u32), usize> = HashMap::new();
    let marks = c
        .edges()
        .map(|(a, b)| {
            let n = seen.entry(undirected(a, b)).or_insert(0);
            let marked = (*n).is_multiple_of(2);
            *n += 1;
            marked
        })
        .collect();
    MarkedWalk {
        cycle: c.clone(),
        marks,
    }
}

/// A `±1` path with nonnegative prefix sums and zero total.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyckPath {
    steps: Vec<i8>,
}

impl DyckPath {
    pub fn new(steps: Vec<i8>) -> Result<Self> {
        let mut h = 0i64;
        for &s in &steps {
            if s != 1 && s != -1 {
                return Err(Error::invalid(format!("Dyck step must be +-1, got {s}")));
            }
            h += s as i64;
            if h < 0 {
                return Err(Error::invalid("Dyck path dips below zero"));
            }
        }
        if h != 0 {
            return Err(Error::invalid("Dyck path does not return to zero"));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    /// `+` for up-steps, `-` for down-steps.
    pub fn word(&self) -> String {
        self.steps
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect()
    }

    /// All Dyck paths with `2p` steps, in lexicographic order (`-` < `+`).
    pub fn all(p: usize) -> Vec<DyckPath> {
        fn rec(up: usize, down: usize, p: usize, buf: &mut Vec<i8>, out: &mut Vec<DyckPath>) {
            if up == p && down == p {
                out.push(DyckPath { steps: buf.clone() });
                return;
            }
            if down < up {
                buf.push(-1);
                rec(up, down + 1, p, buf, out);
                buf.pop();
            }
            if up < p {
                buf.push(1);
                rec(up + 1, down, p, buf, out);
                buf.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, 0, p, &mut Vec::with_capacity(2 * p), &mut out);
        out
    }
}

/// Marked edges step up, unmarked edges step down.
pub fn to_dyck(w: &MarkedWalk) -> Result<DyckPath> {
    if !is_even_cycle(&w.cycle) {
        return Err(Error::invalid(format!(
            "odd cycle {} has no Dyck image",
            w.cycle
        )));
    }
    DyckPath::new(w.marks.iter().map(|&m| if m { 1 } else { -1 }).collect())
}

/// `counts[k]` = number of vertices of `{0..ambient_n}` marked exactly `k` times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NProfile {
    pub counts: Vec<u64>,
}

impl NProfile {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn weighted_total(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| k as u64 * c)
            .sum()
    }
}

/// Mark-count profile of an even cycle whose labels live in `0..ambient_n`.
pub fn n_profile(c: &CycleWord, ambient_n: u64) -> Result<NProfile> {
    if !is_even_cycle(c) {
        return Err(Error::invalid(format!(
            "n_profile needs an even cycle, got {c}"
        )));
    }
    let labels = c.vertices().iter().copied().max().unwrap_or(0) as u64 + 1;
    if ambient_n < labels {
        return Err(Error::invalid(format!(
            "ambient size {ambient_n} smaller than label range {labels}"
        )));
    }
    let w = mark_edges(c);
    let mut per_vertex: HashMap<u32, usize> = HashMap::new();
    for ((_, b), &m) in c.edges().zip(&w.marks) {
        if m {
            *per_vertex.entry(b).or_insert(0) += 1;
        }
    }
    let q = c.len();
    let mut counts = vec![0u64; q + 1];
    for &k in per_vertex.values() {
        counts[k] += 1;
    }
    counts[0] = ambient_n - per_vertex.len() as u64;
    Ok(NProfile { counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[u32]) -> CycleWord {
        canonicalize(v).unwrap()
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(w(&[7, 3, 7, 9, 7]).vertices(), &[0, 1, 0, 2, 0]);
        assert_eq!(w(&[0, 1, 0, 2, 0]).vertices(), &[0, 1, 0, 2, 0]);
        assert_eq!(w(&[5, 5]).vertices(), &[0, 0]);
        assert!(canonicalize(&[1, 2, 3]).is_err());
        assert!(canonicalize(&[]).is_err());
        let c = w(&[4, 8, 4]);
        assert_eq!(canonicalize(c.vertices()).unwrap(), c);
        assert!(!CycleWord::new(vec![3, 1, 3]).unwrap().is_canonical());
    }

    #[test]
    fn evenness() {
        assert!(is_even_cycle(&w(&[0, 1, 0, 1, 0])));
        assert!(!is_even_cycle(&w(&[0, 1, 2, 0])));
        assert!(is_even_cycle(&w(&[0, 1, 2, 1, 0])));
    }

    #[test]
    fn marks() {
        assert_eq!(
            mark_edges(&w(&[0, 1, 0, 1, 0])).marks,
            [true, false, true, false]
        );
        assert_eq!(
            mark_edges(&w(&[0, 1, 2, 1, 0])).marks,
            [true, true, false, false]
        );
        assert_eq!(mark_edges(&w(&[0, 0])).marks, [true]);
    }

    #[test]
    fn dyck_images() {
        let d = to_dyck(&mark_edges(&w(&[0, 1, 0, 1, 0]))).unwrap();
        assert_eq!(d.steps(), &[1, -1, 1, -1]);
        let d = to_dyck(&mark_edges(&w(&[0, 1, 2, 1, 0]))).unwrap();
        assert_eq!(d.steps(), &[1, 1, -1, -1]);
        assert!(to_dyck(&mark_edges(&w(&[0, 1, 2, 0]))).is_err());
        assert!(DyckPath::new(vec![-1, 1]).is_err());
        assert!(DyckPath::new(vec![1, 1]).is_err());
        let cat = crate::exactnum::catalan_table(7);
        for p in 0..=7 {
            let all = DyckPath::all(p);
            let mut dedup = all.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), all.len());
            assert_eq!(num_bigint::BigInt::from(all.len()), cat[p]);
        }
    }

    #[test]
    fn profiles() {
        let a = n_profile(&w(&[0, 1, 0, 1, 0]), 5).unwrap();
        assert_eq!(a.counts, [4, 0, 1, 0, 0]);
        let b = n_profile(&w(&[0, 1, 0, 2, 0]), 5).unwrap();
        assert_eq!(b.counts, [3, 2, 0, 0, 0]);
        for p in [&a, &b] {
            assert_eq!(p.weighted_total(), 2);
            assert_eq!(p.total(), 5);
        }
        assert!(n_profile(&w(&[0, 1, 2, 0]), 5).is_err());
        assert!(n_profile(&w(&[0, 1, 0, 2, 0]), 2).is_err());
    }
}
