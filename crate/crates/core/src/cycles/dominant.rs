use std::collections::{BTreeSet, HashSet};

use super::{canonicalize, is_even_cycle, mark_edges, CycleWord};
use crate::error::{Error, Result};

/// Largest `l` accepted by [`enumerate_dominant`]; `C_10 = 16796` elements.
pub const MAX_DOMINANT_L: u64 = 10;

/// Largest `l` accepted by the exhaustive filter in [`dominant_by_filter`].
const MAX_FILTER_L: u64 = 6;

/// Canonical representatives of `C(l)`, built from `C(1) = {(0,1,0)}` by the
/// three-branch recursion:
///
/// 1. a fresh loop `(v0, u, v0)` prepended at the first vertex,
/// 2. a fresh loop `(v1, u, v1)` inserted at the second vertex,
/// 3. `(u0, u1, u2, S1, u2, u1, S2)` gluing `(u2, S1, u2)` from `C(a)` into
///    `(u0, u1, S2)` from `C(l-a)` on disjoint vertex sets.
///
/// Duplicates across branches are removed through canonical forms.
pub fn enumerate_dominant(l: u64) -> Result<Vec<CycleWord>> {
    if l == 0 {
        return Err(Error::invalid("C(l) needs l >= 1"));
    }
    if l > MAX_DOMINANT_L {
        return Err(Error::ResourceGuard {
            what: "enumerate_dominant l",
            required: l as f64,
            cap: MAX_DOMINANT_L as f64,
        });
    }
    Ok(dominant_levels(l as usize)
        .pop()
        .unwrap()
        .into_iter()
        .collect())
}

/// `levels[m - 1]` = `C(m)` for `m = 1..=l`.
fn dominant_levels(l: usize) -> Vec<BTreeSet<CycleWord>> {
    let mut levels: Vec<BTreeSet<CycleWord>> = Vec::with_capacity(l);
    levels.push(BTreeSet::from([canonicalize(&[0, 1, 0]).unwrap()]));
    for m in 1..l {
        let mut next = BTreeSet::new();
        for c in &levels[m - 1] {
            let v = c.vertices();
            let fresh = c.distinct_vertices() as u32;
            // (i) loop at v0
            let mut a = vec![v[0], fresh, v[0]];
            a.extend_from_slice(&v[1..]);
            next.insert(canonicalize(&a).unwrap());
            // (ii) loop at v1
            let mut b = vec![v[0], v[1], fresh, v[1]];
            b.extend_from_slice(&v[2..]);
            next.insert(canonicalize(&b).unwrap());
        }
        // (iii) glue C(a) into C(m - a)
        for a in 1..m {
            for inner in &levels[a - 1] {
                for outer in &levels[m - a - 1] {
                    let o = outer.vertices();
                    let off = outer.distinct_vertices() as u32;
                    let iv: Vec<u32> = inner.vertices().iter().map(|x| x + off).collect();
                    let mut word = Vec::with_capacity(2 * m + 3);
                    word.push(o[0]);
                    word.push(o[1]);
                    word.extend_from_slice(&iv);
                    word.push(o[1]);
                    word.extend_from_slice(&o[2..]);
                    next.insert(canonicalize(&word).unwrap());
                }
            }
        }
        levels.push(next);
    }
    levels
}

/// All canonical even cycles of length `2l` with exactly `l` vertices marked
/// once and an unmarked first vertex, found by exhaustive search over
/// first-appearance labellings. Independent of the recursion above.
pub fn dominant_by_filter(l: u64) -> Result<Vec<CycleWord>> {
    if l == 0 {
        return Err(Error::invalid("C(l) needs l >= 1"));
    }
    if l > MAX_FILTER_L {
        return Err(Error::ResourceGuard {
            what: "dominant_by_filter l",
            required: l as f64,
            cap: MAX_FILTER_L as f64,
        });
    }
    let len = 2 * l as usize;
    let mut out = Vec::new();
    let mut buf = vec![0u32; len + 1];
    fn rec(
        pos: usize,
        max: u32,
        len: usize,
        l: usize,
        buf: &mut Vec<u32>,
        out: &mut Vec<CycleWord>,
    ) {
        if pos == len {
            let c = CycleWord::new(buf.clone()).unwrap();
            if is_dominant(&c, l) {
                out.push(c);
            }
            return;
        }
        // at most l + 1 distinct vertices can occur
        let top = (max + 1).min(l as u32);
        for v in 0..=top {
            buf[pos] = v;
            rec(pos + 1, max.max(v), len, l, buf, out);
        }
    }
    rec(1, 0, len, l as usize, &mut buf, &mut out);
    out.sort();
    Ok(out)
}

fn is_dominant(c: &CycleWord, l: usize) -> bool {
    if !is_even_cycle(c) {
        return false;
    }
    let w = mark_edges(c);
    let mut marks_per_vertex = vec![0usize; l + 2];
    for ((_, b), &m) in c.edges().zip(&w.marks) {
        if m {
            marks_per_vertex[b as usize] += 1;
        }
    }
    let once = marks_per_vertex.iter().filter(|&&k| k == 1).count();
    once == l && marks_per_vertex[0] == 0
}

/// Histogram over `C(l)` of `i`, where `i + 1` is the number of distinct
/// vertices at even positions (and `l - i` at odd positions).
pub fn classify_bipartite(l: u64) -> Result<Vec<u64>> {
    let mut hist = vec![0u64; l as usize];
    for c in enumerate_dominant(l)? {
        let (even, odd) = bipartite_split(&c);
        if even + odd != l as usize + 1 || even == 0 {
            return Err(Error::invalid(format!("{c} is not bipartite-split")));
        }
        hist[even - 1] += 1;
    }
    Ok(hist)
}

/// Distinct vertices at even and at odd positions of the open word.
pub fn bipartite_split(c: &CycleWord) -> (usize, usize) {
    let v = &c.vertices()[..c.len()];
    let even: HashSet<u32> = v.iter().step_by(2).copied().collect();
    let odd: HashSet<u32> = v.iter().skip(1).step_by(2).copied().collect();
    (even.len(), odd.len())
}

/// Number of visits of the first vertex, not counting the closing return.
pub fn first_vertex_multiplicity(c: &CycleWord) -> usize {
    let v = c.vertices();
    v[..c.len()].iter().filter(|&&x| x == v[0]).count()
}

/// `hist[m]` = number of elements of `C(l)` whose first vertex is visited
/// `m` times (`hist[0]` is always 0).
pub fn first_vertex_multiplicity_histogram(l: u64) -> Result<Vec<u64>> {
    let mut hist = vec![0u64; l as usize + 1];
    for c in enumerate_dominant(l)? {
        hist[first_vertex_multiplicity(&c)] += 1;
    }
    Ok(hist)
}

/// Checks that every loop `(i_a, ..., i_b)` with `i_a = i_b` inside an element
/// of `C(l)` is itself dominant, i.e. lies in `C((b - a) / 2)`.
pub fn loops_are_dominant(l: u64) -> Result<bool> {
    if l == 0 || l > MAX_DOMINANT_L {
        return Err(Error::invalid(format!(
            "loops_are_dominant needs 1 <= l <= {MAX_DOMINANT_L}"
        )));
    }
    let levels = dominant_levels(l as usize);
    for c in &levels[l as usize - 1] {
        let v = c.vertices();
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                if v[a] != v[b] {
                    continue;
                }
                let seg = canonicalize(&v[a..=b])?;
                let half = b - a;
                if half % 2 != 0 || !levels[half / 2 - 1].contains(&seg) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
