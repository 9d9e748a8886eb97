//! Adaptive quantitative group testing for two defectives.
//!
//! Each test reports how many defectives the tested set contains. Two
//! variants are covered:
//!
//! * single set: two defectives among `n` elements, candidates are the
//!   unordered pairs of `[n]`;
//! * two sets: one defective in each of two sets of sizes `n1` and `n2`,
//!   candidates are the cells of `[n1] × [n2]`.
//!
//! [`exact_t`] and [`exact_t_nn`] compute the minimax number of tests by
//! iterative deepening over candidate sets, memoized on a canonical form of
//! the candidate graph. Candidate sets are bitmasks, so at most 128
//! candidates are supported.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::adder_code::{Strategy, TestPair};
use crate::entropy::constants;
use crate::{Error, Result};

pub type Mask = u128;

/// Largest ground set for the single-set variant (`C(16, 2) = 120` pairs).
pub const MAX_SINGLE_N: usize = 16;
pub const MAX_CANDIDATES: usize = 128;
/// Labelings tried per canonical form before falling back to a fixed one.
const PERM_CAP: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SingleSet,
    TwoSets,
}

/// A test: `t1` over the first set, `t2` over the second (unused for the
/// single-set variant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Test {
    pub t1: u32,
    pub t2: u32,
}

fn bit(m: u32, i: usize) -> u8 {
    ((m >> i) & 1) as u8
}

/// Number of defectives the test sees when the candidate is `pair`.
pub fn outcome(variant: Variant, test: Test, pair: (usize, usize)) -> u8 {
    match variant {
        Variant::SingleSet => bit(test.t1, pair.0) + bit(test.t1, pair.1),
        Variant::TwoSets => bit(test.t1, pair.0) + bit(test.t2, pair.1),
    }
}

fn ones(m: u32) -> Vec<usize> {
    (0..32).filter(|&i| m >> i & 1 == 1).collect()
}

fn ceil_log3(count: u128) -> u32 {
    let mut k = 0;
    let mut p: u128 = 1;
    while p < count {
        p *= 3;
        k += 1;
    }
    k
}

/// The surviving candidates of a search node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateState {
    pub variant: Variant,
    pub n1: usize,
    /// Zero for the single-set variant.
    pub n2: usize,
    pub mask: Mask,
}

impl CandidateState {
    pub fn full_single(n: usize) -> Result<Self> {
        let space = Space::single(n)?;
        Ok(CandidateState {
            variant: Variant::SingleSet,
            n1: n,
            n2: 0,
            mask: space.all,
        })
    }

    pub fn full_two(n1: usize, n2: usize) -> Result<Self> {
        let space = Space::two(n1, n2)?;
        Ok(CandidateState {
            variant: Variant::TwoSets,
            n1,
            n2,
            mask: space.all,
        })
    }

    /// A state holding exactly the given candidates.
    pub fn from_pairs(variant: Variant, n1: usize, n2: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let space = Space::new(variant, n1, n2)?;
        let mut mask = 0;
        for &p in pairs {
            mask |= 1 << space.index_of(p)?;
        }
        if mask == 0 {
            return Err(Error::domain("candidate set must be nonempty"));
        }
        Ok(CandidateState {
            variant,
            n1,
            n2,
            mask,
        })
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn candidates(&self) -> Vec<(usize, usize)> {
        let space = self.space();
        (0..space.pairs.len())
            .filter(|&k| self.mask >> k & 1 == 1)
            .map(|k| space.pairs[k])
            .collect()
    }

    fn space(&self) -> Space {
        Space::new(self.variant, self.n1, self.n2).expect("state was built from a valid space")
    }
}

/// Fixed geometry of a variant: candidate indexing and incidence masks.
#[derive(Debug, Clone)]
struct Space {
    variant: Variant,
    n1: usize,
    n2: usize,
    pairs: Vec<(usize, usize)>,
    /// Candidates involving element `i` of set 1 (every element, for the
    /// single-set variant).
    inc1: Vec<Mask>,
    inc2: Vec<Mask>,
    all: Mask,
}

impl Space {
    fn new(variant: Variant, n1: usize, n2: usize) -> Result<Self> {
        match variant {
            Variant::SingleSet => Self::single(n1),
            Variant::TwoSets => Self::two(n1, n2),
        }
    }

    fn single(n: usize) -> Result<Self> {
        if !(2..=MAX_SINGLE_N).contains(&n) {
            return Err(Error::Resource(format!(
                "single-set ground set must have 2..={MAX_SINGLE_N} elements, got {n}"
            )));
        }
        let mut pairs = Vec::new();
        let mut inc1 = vec![0 as Mask; n];
        for i in 0..n {
            for j in i + 1..n {
                let k = pairs.len();
                inc1[i] |= 1 << k;
                inc1[j] |= 1 << k;
                pairs.push((i, j));
            }
        }
        let all = full_mask(pairs.len());
        Ok(Space {
            variant: Variant::SingleSet,
            n1: n,
            n2: 0,
            pairs,
            inc1,
            inc2: Vec::new(),
            all,
        })
    }

    fn two(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n1 * n2 > MAX_CANDIDATES || n1 > 32 || n2 > 32 {
            return Err(Error::Resource(format!(
                "two-set sizes ({n1}, {n2}) must be positive with at most {MAX_CANDIDATES} cells"
            )));
        }
        let mut pairs = Vec::new();
        let mut inc1 = vec![0 as Mask; n1];
        let mut inc2 = vec![0 as Mask; n2];
        for i in 0..n1 {
            for j in 0..n2 {
                let k = pairs.len();
                inc1[i] |= 1 << k;
                inc2[j] |= 1 << k;
                pairs.push((i, j));
            }
        }
        let all = full_mask(pairs.len());
        Ok(Space {
            variant: Variant::TwoSets,
            n1,
            n2,
            pairs,
            inc1,
            inc2,
            all,
        })
    }

    fn index_of(&self, p: (usize, usize)) -> Result<usize> {
        let (i, j) = match self.variant {
            Variant::SingleSet if p.0 != p.1 => (p.0.min(p.1), p.0.max(p.1)),
            Variant::SingleSet => return Err(Error::domain("pair endpoints must differ")),
            Variant::TwoSets => p,
        };
        self.pairs
            .iter()
            .position(|&q| q == (i, j))
            .ok_or_else(|| Error::domain(format!("candidate {p:?} out of range")))
    }

    fn touched(inc: &[Mask], t: u32) -> Mask {
        let mut m = 0;
        for (i, &row) in inc.iter().enumerate() {
            if t >> i & 1 == 1 {
                m |= row;
            }
        }
        m
    }

    /// Split `s` by outcome of `test`.
    fn partition(&self, s: Mask, test: Test) -> [Mask; 3] {
        match self.variant {
            Variant::SingleSet => {
                let comp = !test.t1 & low_bits(self.n1);
                let two = s & !Self::touched(&self.inc1, comp);
                let zero = s & !Self::touched(&self.inc1, test.t1);
                [zero, s & !two & !zero, two]
            }
            Variant::TwoSets => {
                let r = Self::touched(&self.inc1, test.t1);
                let c = Self::touched(&self.inc2, test.t2);
                [s & !r & !c, s & (r ^ c), s & r & c]
            }
        }
    }

    fn support1(&self, s: Mask) -> u32 {
        let mut m = 0;
        for (i, &row) in self.inc1.iter().enumerate() {
            if row & s != 0 {
                m |= 1 << i;
            }
        }
        m
    }

    fn support2(&self, s: Mask) -> u32 {
        let mut m = 0;
        for (j, &col) in self.inc2.iter().enumerate() {
            if col & s != 0 {
                m |= 1 << j;
            }
        }
        m
    }

    /// Tests over the support of `s`, one per complementary pair.
    fn support_tests(&self, s: Mask) -> Vec<Test> {
        let rows = ones(self.support1(s));
        let cols = ones(self.support2(s));
        let mut elems: Vec<(bool, usize)> = rows.iter().map(|&i| (false, i)).collect();
        elems.extend(cols.iter().map(|&j| (true, j)));
        if elems.is_empty() {
            return Vec::new();
        }
        // The last element never joins the test: swapping a test for its
        // complement within the support only relabels outcomes 0 and 2.
        let free = elems.len() - 1;
        let mut out = Vec::with_capacity(1 << free);
        for sub in 1u64..(1u64 << free) {
            let mut t = Test::default();
            for (b, &(second, e)) in elems[..free].iter().enumerate() {
                if sub >> b & 1 == 1 {
                    if second {
                        t.t2 |= 1 << e;
                    } else {
                        t.t1 |= 1 << e;
                    }
                }
            }
            out.push(t);
        }
        out
    }

    /// Every test over the full ground sets, in increasing order.
    fn all_tests(&self) -> impl Iterator<Item = Test> {
        let n1 = self.n1;
        let n2 = if self.variant == Variant::TwoSets { self.n2 } else { 0 };
        (0u64..1u64 << n1).flat_map(move |t1| {
            (0u64..1u64 << n2).map(move |t2| Test {
                t1: t1 as u32,
                t2: t2 as u32,
            })
        })
    }

    fn test_pair(&self, t: Test) -> TestPair {
        TestPair {
            set1: ones(t.t1),
            set2: ones(t.t2),
        }
    }

    fn strategy_n2(&self) -> usize {
        match self.variant {
            Variant::SingleSet => 0,
            Variant::TwoSets => self.n2,
        }
    }
}

fn full_mask(len: usize) -> Mask {
    if len == 128 {
        Mask::MAX
    } else {
        (1 << len) - 1
    }
}

fn low_bits(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1 << n) - 1
    }
}

/// Canonical key of a candidate set up to relabeling elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    rows: u8,
    cols: u8,
    bits: u128,
}

/// Stable color refinement. `adj[v]` lists the neighbours of `v`.
fn refine_colors(init: Vec<u64>, adj: &[Vec<usize>]) -> Vec<u64> {
    let mut colors = rank(&init);
    loop {
        let sigs: Vec<(u64, Vec<u64>)> = (0..colors.len())
            .map(|v| {
                let mut nb: Vec<u64> = adj[v].iter().map(|&u| colors[u]).collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let next = rank(&sigs);
        let classes = |c: &[u64]| c.iter().collect::<HashSet<_>>().len();
        if classes(&next) == classes(&colors) {
            return next;
        }
        colors = next;
    }
}

fn rank<T: Ord + Clone>(v: &[T]) -> Vec<u64> {
    let mut sorted: Vec<T> = v.to_vec();
    sorted.sort();
    sorted.dedup();
    v.iter()
        .map(|x| sorted.binary_search(x).unwrap() as u64)
        .collect()
}

/// Orderings of `verts` that keep color classes in color order, with
/// vertices of equal `twin` class treated as interchangeable. Returns `None`
/// when there are more than `PERM_CAP` of them.
fn cell_orderings(verts: &[usize], colors: &[u64], twin: &[u64]) -> Option<Vec<Vec<usize>>> {
    let mut order: Vec<usize> = (0..verts.len()).collect();
    order.sort_by_key(|&v| (colors[v], twin[v], v));
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for &v in &order {
        match cells.last_mut() {
            Some(c) if colors[c[0]] == colors[v] => c.push(v),
            _ => cells.push(vec![v]),
        }
    }
    let mut total: usize = 1;
    for c in &cells {
        total = total.checked_mul(multiset_perm_count(c, twin))?;
        if total > PERM_CAP {
            return None;
        }
    }
    let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
    for c in &cells {
        let perms = multiset_perms(c, twin);
        let mut next = Vec::with_capacity(acc.len() * perms.len());
        for prefix in &acc {
            for p in &perms {
                let mut o = prefix.clone();
                o.extend_from_slice(p);
                next.push(o);
            }
        }
        acc = next;
    }
    Some(acc)
}

fn multiset_perm_count(cell: &[usize], twin: &[u64]) -> usize {
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for &v in cell {
        *counts.entry(twin[v]).or_default() += 1;
    }
    let fact = |k: usize| (1..=k).product::<usize>();
    counts
        .values()
        .fold(fact(cell.len()), |acc, &k| acc / fact(k))
}

/// Distinct arrangements of the twin classes of `cell`; members of one twin
/// class are placed in a fixed order.
fn multiset_perms(cell: &[usize], twin: &[u64]) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for &v in cell {
        groups.entry(twin[v]).or_default().push(v);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(cell.len());
    fn rec(groups: &mut [Vec<usize>], cur: &mut Vec<usize>, left: usize, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for g in 0..groups.len() {
            if let Some(v) = groups[g].pop() {
                cur.push(v);
                rec(groups, cur, left - 1, out);
                cur.pop();
                groups[g].push(v);
            }
        }
    }
    rec(&mut groups, &mut cur, cell.len(), &mut out);
    out
}

impl Space {
    fn canonical(&self, s: Mask) -> Key {
        match self.variant {
            Variant::SingleSet => self.canonical_graph(s),
            Variant::TwoSets => self.canonical_bipartite(s),
        }
    }

    fn canonical_graph(&self, s: Mask) -> Key {
        let verts = ones(self.support1(s));
        let k = verts.len();
        let pos: HashMap<usize, usize> = verts.iter().enumerate().map(|(p, &v)| (v, p)).collect();
        let edges: Vec<(usize, usize)> = (0..self.pairs.len())
            .filter(|&e| s >> e & 1 == 1)
            .map(|e| (pos[&self.pairs[e].0], pos[&self.pairs[e].1]))
            .collect();
        let mut adj = vec![Vec::new(); k];
        let mut nbr = vec![0u32; k];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
            nbr[u] |= 1 << v;
            nbr[v] |= 1 << u;
        }
        let colors = refine_colors(adj.iter().map(|a| a.len() as u64).collect(), &adj);
        let twin = twin_classes(&nbr);
        let encode = |order: &[usize]| -> u128 {
            let mut label = vec![0usize; k];
            for (p, &v) in order.iter().enumerate() {
                label[v] = p;
            }
            let mut bits = 0u128;
            for &(u, v) in &edges {
                let (a, b) = (label[u].min(label[v]), label[u].max(label[v]));
                bits |= 1 << (b * (b - 1) / 2 + a);
            }
            bits
        };
        let bits = match cell_orderings(&(0..k).collect::<Vec<_>>(), &colors, &twin) {
            Some(orders) => orders.iter().map(|o| encode(o)).min().unwrap_or(0),
            None => {
                let mut o: Vec<usize> = (0..k).collect();
                o.sort_by_key(|&v| (colors[v], v));
                encode(&o)
            }
        };
        Key {
            rows: k as u8,
            cols: 0,
            bits,
        }
    }

    fn canonical_bipartite(&self, s: Mask) -> Key {
        let rows = ones(self.support1(s));
        let cols = ones(self.support2(s));
        // Row-major incidence restricted to the support.
        let mut mat: Vec<u32> = Vec::with_capacity(rows.len());
        for &i in &rows {
            let mut r = 0u32;
            for (cj, &j) in cols.iter().enumerate() {
                if s >> (i * self.n2 + j) & 1 == 1 {
                    r |= 1 << cj;
                }
            }
            mat.push(r);
        }
        let key = bipartite_key(&mat, cols.len());
        if rows.len() == cols.len() {
            let mut tr = vec![0u32; cols.len()];
            for (ri, &r) in mat.iter().enumerate() {
                for (cj, t) in tr.iter_mut().enumerate() {
                    if r >> cj & 1 == 1 {
                        *t |= 1 << ri;
                    }
                }
            }
            let kt = bipartite_key(&tr, rows.len());
            if kt.bits < key.bits {
                return kt;
            }
        }
        key
    }
}

/// Twin classes: `u` and `v` are twins when swapping them is an
/// automorphism, i.e. their neighbourhoods agree apart from each other.
fn twin_classes(nbr: &[u32]) -> Vec<u64> {
    let k = nbr.len();
    let mut class = vec![u64::MAX; k];
    let mut next = 0;
    for v in 0..k {
        if class[v] != u64::MAX {
            continue;
        }
        class[v] = next;
        for u in v + 1..k {
            if class[u] == u64::MAX && nbr[u] & !(1 << v) == nbr[v] & !(1 << u) {
                class[u] = next;
            }
        }
        next += 1;
    }
    class
}

/// Minimum over row orders (within refined cells) of the column-sorted
/// matrix encoding.
fn bipartite_key(mat: &[u32], ncols: usize) -> Key {
    let nrows = mat.len();
    // Bipartite graph: rows 0..nrows, columns nrows..nrows+ncols.
    let mut adj = vec![Vec::new(); nrows + ncols];
    for (i, &r) in mat.iter().enumerate() {
        for j in 0..ncols {
            if r >> j & 1 == 1 {
                adj[i].push(nrows + j);
                adj[nrows + j].push(i);
            }
        }
    }
    let init = (0..nrows + ncols)
        .map(|v| ((v >= nrows) as u64) << 32 | adj[v].len() as u64)
        .collect();
    let colors = refine_colors(init, &adj);
    let row_colors = colors[..nrows].to_vec();
    let twin = rank(mat);
    let encode = |order: &[usize]| -> u128 {
        let mut colv: Vec<u32> = (0..ncols)
            .map(|j| {
                let mut c = 0u32;
                for (p, &i) in order.iter().enumerate() {
                    if mat[i] >> j & 1 == 1 {
                        c |= 1 << (nrows - 1 - p);
                    }
                }
                c
            })
            .collect();
        colv.sort_unstable();
        colv.iter().fold(0u128, |acc, &c| acc << nrows | c as u128)
    };
    let bits = match cell_orderings(&(0..nrows).collect::<Vec<_>>(), &row_colors, &twin) {
        Some(orders) => orders.iter().map(|o| encode(o)).min().unwrap_or(0),
        None => {
            let mut o: Vec<usize> = (0..nrows).collect();
            o.sort_by_key(|&v| (row_colors[v], mat[v], v));
            encode(&o)
        }
    };
    Key {
        rows: nrows as u8,
        cols: ncols as u8,
        bits,
    }
}

/// Caps protecting the exact search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchLimits {
    pub max_n_single: usize,
    pub max_n_two: usize,
    pub max_depth: u32,
    pub max_nodes: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_n_single: 9,
            max_n_two: 6,
            max_depth: 12,
            max_nodes: 100_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub variant: Variant,
    pub n1: usize,
    pub n2: usize,
    pub depth: u32,
    pub tree: Strategy,
    pub lower_bound_used: u32,
    pub nodes_expanded: u64,
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    /// The optimum is at least `lo`.
    lo: u32,
    /// `hi` tests are known to suffice.
    hi: u32,
}

struct Search<'a> {
    space: &'a Space,
    memo: HashMap<Key, Bounds>,
    nodes: u64,
    max_nodes: u64,
}

impl<'a> Search<'a> {
    fn new(space: &'a Space, max_nodes: u64) -> Self {
        Search {
            space,
            memo: HashMap::new(),
            nodes: 0,
            max_nodes,
        }
    }

    /// Candidate splits at `s` that could finish within `k` tests, best
    /// first, with duplicate partitions removed.
    fn moves(&self, s: Mask, k: u32) -> Vec<(Test, [Mask; 3])> {
        let cap = 3u128.pow(k - 1);
        let total = s.count_ones();
        let mut seen = HashSet::new();
        let mut out: Vec<(u32, Test, [Mask; 3])> = Vec::new();
        for t in self.space.support_tests(s) {
            let parts = self.space.partition(s, t);
            let big = parts.iter().map(|p| p.count_ones()).max().unwrap();
            if big == total || big as u128 > cap {
                continue;
            }
            let norm = (parts[0].min(parts[2]), parts[0].max(parts[2]), parts[1]);
            if seen.insert(norm) {
                out.push((big, t, parts));
            }
        }
        out.sort_by_key(|&(big, t, _)| (big, t));
        out.into_iter().map(|(_, t, p)| (t, p)).collect()
    }

    /// Can `s` be resolved with `k` more tests?
    fn feasible(&mut self, s: Mask, k: u32) -> Result<bool> {
        let count = s.count_ones();
        if count <= 1 {
            return Ok(true);
        }
        let lb = ceil_log3(count as u128);
        if k < lb {
            return Ok(false);
        }
        let key = self.space.canonical(s);
        let b = *self.memo.get(&key).unwrap_or(&Bounds {
            lo: lb,
            hi: u32::MAX,
        });
        if k >= b.hi {
            return Ok(true);
        }
        if k < b.lo {
            return Ok(false);
        }
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::Resource(format!(
                "search exceeded {} nodes",
                self.max_nodes
            )));
        }
        let mut ok = false;
        for (_, mut parts) in self.moves(s, k) {
            // Largest class first: it is the likeliest to fail.
            parts.sort_by_key(|p| std::cmp::Reverse(p.count_ones()));
            let mut all = true;
            for p in parts {
                if !self.feasible(p, k - 1)? {
                    all = false;
                    break;
                }
            }
            if all {
                ok = true;
                break;
            }
        }
        let e = self.memo.entry(key).or_insert(b);
        if ok {
            e.hi = e.hi.min(k);
        } else {
            e.lo = e.lo.max(k + 1);
        }
        Ok(ok)
    }

    /// Witness tree for `s` with `k` tests; `s` must be feasible at `k`.
    fn build(&mut self, s: Mask, k: u32, hist: &mut String, rounds: &mut [BTreeMap<String, TestPair>]) -> Result<()> {
        let level = hist.len();
        if level == rounds.len() {
            return Ok(());
        }
        if s.count_ones() <= 1 {
            rounds[level].insert(hist.clone(), TestPair::default());
            hist.push('0');
            self.build(s, k.saturating_sub(1), hist, rounds)?;
            hist.pop();
            return Ok(());
        }
        for (t, parts) in self.moves(s, k) {
            let mut all = true;
            for &p in &parts {
                if !self.feasible(p, k - 1)? {
                    all = false;
                    break;
                }
            }
            if !all {
                continue;
            }
            rounds[level].insert(hist.clone(), self.space.test_pair(t));
            for (y, &p) in parts.iter().enumerate() {
                if p != 0 {
                    hist.push((b'0' + y as u8) as char);
                    self.build(p, k - 1, hist, rounds)?;
                    hist.pop();
                }
            }
            return Ok(());
        }
        Err(Error::Solver(format!(
            "no witness test at depth {} for a feasible node",
            level
        )))
    }
}

fn check_limits(space: &Space, limits: &SearchLimits) -> Result<()> {
    let too_big = match space.variant {
        Variant::SingleSet => space.n1 > limits.max_n_single,
        Variant::TwoSets => space.n1.max(space.n2) > limits.max_n_two,
    };
    if too_big {
        return Err(Error::Resource(format!(
            "exact search is capped at n <= {} (single set) and n <= {} (two sets)",
            limits.max_n_single, limits.max_n_two
        )));
    }
    Ok(())
}

/// Exact minimax depth of an arbitrary candidate state.
pub fn exact_depth(state: &CandidateState, limits: &SearchLimits) -> Result<SearchResult> {
    let space = state.space();
    check_limits(&space, limits)?;
    if state.mask == 0 || state.mask & !space.all != 0 {
        return Err(Error::domain("candidate mask is empty or out of range"));
    }
    let lb = ceil_log3(state.mask.count_ones() as u128);
    let mut search = Search::new(&space, limits.max_nodes);
    let mut depth = lb;
    while !search.feasible(state.mask, depth)? {
        depth += 1;
        if depth > limits.max_depth {
            return Err(Error::Resource(format!(
                "depth exceeds the cap of {}",
                limits.max_depth
            )));
        }
    }
    let mut rounds = vec![BTreeMap::new(); depth as usize];
    search.build(state.mask, depth, &mut String::new(), &mut rounds)?;
    Ok(SearchResult {
        variant: state.variant,
        n1: state.n1,
        n2: state.n2,
        depth,
        tree: Strategy {
            n1: space.n1,
            n2: space.strategy_n2(),
            depth: depth as usize,
            rounds,
        },
        lower_bound_used: lb,
        nodes_expanded: search.nodes,
    })
}

/// `t(n)`: tests needed to find two defectives among `n` elements.
pub fn exact_t(n: usize) -> Result<SearchResult> {
    exact_t_with(n, &SearchLimits::default())
}

pub fn exact_t_with(n: usize, limits: &SearchLimits) -> Result<SearchResult> {
    if n < 2 {
        return Err(Error::domain("t(n) needs n >= 2"));
    }
    if n > limits.max_n_single {
        return Err(Error::Resource(format!(
            "exact t(n) is capped at n <= {}",
            limits.max_n_single
        )));
    }
    exact_depth(&CandidateState::full_single(n)?, limits)
}

/// `t(n, n)`: tests needed to find one defective in each of two `n`-sets.
pub fn exact_t_nn(n: usize) -> Result<SearchResult> {
    exact_t_nn_with(n, &SearchLimits::default())
}

pub fn exact_t_nn_with(n: usize, limits: &SearchLimits) -> Result<SearchResult> {
    if n < 1 {
        return Err(Error::domain("t(n, n) needs n >= 1"));
    }
    if n > limits.max_n_two {
        return Err(Error::Resource(format!(
            "exact t(n, n) is capped at n <= {}",
            limits.max_n_two
        )));
    }
    exact_depth(&CandidateState::full_two(n, n)?, limits)
}

/// Greedy strategy: at every node the test with the smallest largest outcome
/// class, ties going to the smallest test.
pub fn greedy_strategy(state: &CandidateState) -> Result<Strategy> {
    let space = state.space();
    if state.mask == 0 || state.mask & !space.all != 0 {
        return Err(Error::domain("candidate mask is empty or out of range"));
    }
    let tests: Vec<Test> = space.all_tests().collect();
    let mut nodes: Vec<(String, Test)> = Vec::new();
    let mut depth = 0usize;
    let mut stack = vec![(state.mask, String::new())];
    while let Some((s, hist)) = stack.pop() {
        if s.count_ones() <= 1 {
            depth = depth.max(hist.len());
            continue;
        }
        let mut best: Option<(u32, Test, [Mask; 3])> = None;
        for &t in &tests {
            let parts = space.partition(s, t);
            let big = parts.iter().map(|p| p.count_ones()).max().unwrap();
            if best.as_ref().is_none_or(|b| big < b.0) {
                best = Some((big, t, parts));
            }
        }
        let (big, t, parts) = best.expect("at least one test exists");
        if big == s.count_ones() {
            return Err(Error::Solver("no test splits the candidate set".into()));
        }
        nodes.push((hist.clone(), t));
        for (y, &p) in parts.iter().enumerate() {
            if p != 0 {
                stack.push((p, format!("{hist}{y}")));
            }
        }
    }
    let mut rounds = vec![BTreeMap::new(); depth];
    for (hist, t) in nodes {
        rounds[hist.len()].insert(hist, space.test_pair(t));
    }
    let mut strategy = Strategy {
        n1: space.n1,
        n2: space.strategy_n2(),
        depth,
        rounds,
    };
    pad_strategy(&mut strategy, state)?;
    Ok(strategy)
}

/// Add empty tests after resolved histories so every reachable history of
/// length below the depth has an entry.
fn pad_strategy(s: &mut Strategy, state: &CandidateState) -> Result<()> {
    let space = state.space();
    for k in 0..s.depth {
        let mut hist_of: HashMap<(usize, usize), String> = HashMap::new();
        for c in state.candidates() {
            let mut h = String::new();
            for round in s.rounds.iter().take(k) {
                let t = round.get(&h).cloned().unwrap_or_default();
                let test = Test {
                    t1: t.set1.iter().fold(0, |m, &v| m | 1 << v),
                    t2: t.set2.iter().fold(0, |m, &v| m | 1 << v),
                };
                h.push((b'0' + outcome(space.variant, test, c)) as char);
            }
            hist_of.insert(c, h);
        }
        for h in hist_of.into_values() {
            s.rounds[k].entry(h).or_default();
        }
    }
    Ok(())
}

/// Does `strategy` give every candidate of `state` a distinct result
/// sequence?
pub fn replay(strategy: &Strategy, state: &CandidateState) -> Result<bool> {
    strategy.validate()?;
    let mut seen = HashSet::new();
    for c in state.candidates() {
        if !seen.insert(strategy.results(c.0, c.1)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoBounds {
    /// `ceil(log3 |candidates|)`.
    pub info_lower: u32,
    /// `log2(n) / capacity`: a reference line, not a bound at finite `n`.
    pub asymptotic_reference: f64,
}

pub fn bounds(n: usize, variant: Variant) -> Result<InfoBounds> {
    let count: u128 = match variant {
        Variant::SingleSet if n >= 2 => (n * (n - 1) / 2) as u128,
        Variant::TwoSets if n >= 1 => (n * n) as u128,
        _ => return Err(Error::domain(format!("n = {n} too small for {variant:?}"))),
    };
    Ok(InfoBounds {
        info_lower: ceil_log3(count),
        asymptotic_reference: (n as f64).log2() / constants().capacity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TableOptions {
    pub n_max: usize,
    /// Exact `t(n)` is computed for `n <= exact_max`.
    pub exact_max: usize,
    /// Exact `t(n, n)` is computed for `n <= exact_nn_max`.
    pub exact_nn_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub n: usize,
    pub info_lower: u32,
    pub exact_t: Option<u32>,
    pub exact_t_nn: Option<u32>,
    /// Greedy single-set depth.
    pub greedy: u32,
    /// Exact `t(n)` (greedy depth when exact is not computed) over `log2 n`.
    pub ratio_to_log2n: f64,
    /// `1 / capacity`, the limit of `t(n) / log2 n`.
    pub asymptotic_constant: f64,
}

pub fn table(opts: &TableOptions) -> Result<Vec<TableRow>> {
    let limits = SearchLimits::default();
    if opts.n_max > MAX_SINGLE_N {
        return Err(Error::Resource(format!(
            "table is capped at n <= {MAX_SINGLE_N}"
        )));
    }
    let mut rows = Vec::new();
    for n in 2..=opts.n_max {
        let info_lower = bounds(n, Variant::SingleSet)?.info_lower;
        let exact_t = if n <= opts.exact_max.min(limits.max_n_single) {
            Some(exact_t(n)?.depth)
        } else {
            None
        };
        let exact_t_nn = if n <= opts.exact_nn_max.min(limits.max_n_two) {
            Some(exact_t_nn(n)?.depth)
        } else {
            None
        };
        let greedy = greedy_strategy(&CandidateState::full_single(n)?)?.depth as u32;
        rows.push(TableRow {
            n,
            info_lower,
            exact_t,
            exact_t_nn,
            greedy,
            ratio_to_log2n: exact_t.unwrap_or(greedy) as f64 / (n as f64).log2(),
            asymptotic_constant: 1.0 / constants().capacity,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn outcome_examples() {
        let t = Test { t1: 0b11, t2: 0 };
        assert_eq!(outcome(Variant::SingleSet, t, (0, 1)), 2);
        assert_eq!(outcome(Variant::SingleSet, Test::default(), (0, 1)), 0);
        let t = Test { t1: 0b10, t2: 0b10 };
        assert_eq!(outcome(Variant::TwoSets, t, (1, 2)), 1);
    }

    #[test]
    fn partition_matches_outcome() {
        for space in [Space::single(6).unwrap(), Space::two(3, 4).unwrap()] {
            for t in space.all_tests().step_by(7) {
                let parts = space.partition(space.all, t);
                for (k, &p) in space.pairs.iter().enumerate() {
                    let y = outcome(space.variant, t, p) as usize;
                    assert_eq!(parts[y] >> k & 1, 1);
                }
            }
        }
    }

    #[test]
    fn small_exact_values() {
        assert_eq!(exact_t(2).unwrap().depth, 0);
        assert_eq!(exact_t(3).unwrap().depth, 2);
        assert_eq!(exact_t_nn(1).unwrap().depth, 0);
        assert_eq!(exact_t_nn(2).unwrap().depth, 2);
        assert!(exact_t(1).is_err());
        assert!(matches!(exact_t(10), Err(Error::Resource(_))));
        assert!(matches!(exact_t_nn(7), Err(Error::Resource(_))));
    }

    #[test]
    fn witnesses_identify() {
        for n in 2..=6 {
            let r = exact_t(n).unwrap();
            let st = CandidateState::full_single(n).unwrap();
            assert!(replay(&r.tree, &st).unwrap(), "n={n}");
            assert_eq!(r.tree.depth as u32, r.depth);
        }
        for n in 1..=3 {
            let r = exact_t_nn(n).unwrap();
            let st = CandidateState::full_two(n, n).unwrap();
            assert!(replay(&r.tree, &st).unwrap(), "n={n}");
        }
    }

    #[test]
    fn greedy_examples() {
        let g = greedy_strategy(&CandidateState::full_single(3).unwrap()).unwrap();
        assert_eq!(g.depth, 2);
        let g = greedy_strategy(&CandidateState::full_two(2, 2).unwrap()).unwrap();
        assert_eq!(g.depth, 2);
        for n in 2..=8 {
            let st = CandidateState::full_single(n).unwrap();
            let g = greedy_strategy(&st).unwrap();
            assert!(replay(&g, &st).unwrap());
        }
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(bounds(3, Variant::SingleSet).unwrap().info_lower, 1);
        assert_eq!(bounds(10, Variant::SingleSet).unwrap().info_lower, 4);
        assert_eq!(bounds(3, Variant::TwoSets).unwrap().info_lower, 2);
        let r = bounds(1000, Variant::SingleSet).unwrap().asymptotic_reference;
        assert!((r - 12.62).abs() < 0.01);
    }

    #[test]
    fn relabeling_preserves_canonical_key_and_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let limits = SearchLimits::default();
        for _ in 0..20 {
            let n = rng.gen_range(3..=6);
            let space = Space::single(n).unwrap();
            let mask: Mask = rng.gen::<u128>() & space.all | 1;
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let pairs = CandidateState {
                variant: Variant::SingleSet,
                n1: n,
                n2: 0,
                mask,
            }
            .candidates();
            let moved: Vec<_> = pairs.iter().map(|&(i, j)| (perm[i], perm[j])).collect();
            let a = CandidateState::from_pairs(Variant::SingleSet, n, 0, &pairs).unwrap();
            let b = CandidateState::from_pairs(Variant::SingleSet, n, 0, &moved).unwrap();
            assert_eq!(space.canonical(a.mask), space.canonical(b.mask));
            assert_eq!(
                exact_depth(&a, &limits).unwrap().depth,
                exact_depth(&b, &limits).unwrap().depth
            );
        }
        for _ in 0..20 {
            let (n1, n2) = (rng.gen_range(2..=4), rng.gen_range(2..=4));
            let space = Space::two(n1, n2).unwrap();
            let mask: Mask = rng.gen::<u128>() & space.all | 1;
            let mut p1: Vec<usize> = (0..n1).collect();
            let mut p2: Vec<usize> = (0..n2).collect();
            p1.shuffle(&mut rng);
            p2.shuffle(&mut rng);
            let a = CandidateState {
                variant: Variant::TwoSets,
                n1,
                n2,
                mask,
            };
            let moved: Vec<_> = a.candidates().iter().map(|&(i, j)| (p1[i], p2[j])).collect();
            let b = CandidateState::from_pairs(Variant::TwoSets, n1, n2, &moved).unwrap();
            assert_eq!(space.canonical(a.mask), space.canonical(b.mask));
            assert_eq!(
                exact_depth(&a, &limits).unwrap().depth,
                exact_depth(&b, &limits).unwrap().depth
            );
        }
    }

    #[test]
    fn support_tests_skip_complements() {
        let space = Space::single(4).unwrap();
        let tests = space.support_tests(space.all);
        assert_eq!(tests.len(), 7);
        assert!(tests.iter().all(|t| t.t1 & 0b1000 == 0));
    }
}
