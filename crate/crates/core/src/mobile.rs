//! p-trees, labelled p-mobiles, their uniform samplers and contour encodings.
//!
//! A p-tree is a plane tree whose vertices at odd depth ("black") have exactly
//! `p - 1` children. Vertices at even depth are "white". A mobile attaches a
//! positive integer label to every white vertex such that, going clockwise
//! around any black vertex, labels drop by at most one per step, and the root
//! carries label 1.
//!
//! Vertices are stored in depth-first prefix order; white vertices are also
//! addressed by their *white rank*, their position among white vertices in
//! that order. Labels are indexed by white rank.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NO_PARENT: u32 = u32::MAX;

/// Largest supported `p`; keeps the per-black-vertex increment count in a `u64`.
pub const MAX_P: usize = 32;

/// Above this many black vertices the default sampler is [`SamplerMode::Pointed`].
pub const POINTED_THRESHOLD: usize = 5000;

/// Enumeration refuses to go past this many standard labelled trees.
pub const ENUMERATION_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PTree {
    p: usize,
    n: usize,
    parent: Vec<u32>,
    depth: Vec<u32>,
    child_offsets: Vec<u32>,
    children: Vec<u32>,
    white_rank: Vec<u32>,
    whites: Vec<u32>,
}

impl PTree {
    /// Builds a p-tree from its parent array in depth-first prefix order
    /// (root first, `NO_PARENT` for the root), checking every p-tree invariant.
    pub fn from_parents(p: usize, parents: Vec<u32>) -> Result<Self> {
        check_p(p)?;
        if parents.is_empty() || parents[0] != NO_PARENT {
            return Err(Error::InvalidTree("vertex 0 must be the root".into()));
        }
        // prefix order: the parent of vertex i is on the ancestor stack of i - 1
        let mut stack: Vec<u32> = vec![0];
        for (i, &par) in parents.iter().enumerate().skip(1) {
            if par == NO_PARENT || par as usize >= i {
                return Err(Error::InvalidTree(format!("vertex {i} has parent {par}")));
            }
            while let Some(&top) = stack.last() {
                if top == par {
                    break;
                }
                stack.pop();
            }
            if stack.is_empty() {
                return Err(Error::InvalidTree(format!("vertex {i} breaks prefix order")));
            }
            stack.push(i as u32);
        }
        let tree = Self::from_parents_unchecked(p, parents);
        for v in 0..tree.len() {
            if !tree.is_white(v) && tree.children(v).len() != p - 1 {
                return Err(Error::InvalidTree(format!(
                    "black vertex {v} has {} children, expected {}",
                    tree.children(v).len(),
                    p - 1
                )));
            }
        }
        Ok(tree)
    }

    fn from_parents_unchecked(p: usize, parent: Vec<u32>) -> Self {
        let len = parent.len();
        let mut depth = vec![0u32; len];
        let mut counts = vec![0u32; len + 1];
        for v in 1..len {
            let par = parent[v] as usize;
            depth[v] = depth[par] + 1;
            counts[par + 1] += 1;
        }
        for v in 0..len {
            counts[v + 1] += counts[v];
        }
        let child_offsets = counts;
        let mut fill = child_offsets.clone();
        let mut children = vec![0u32; len.saturating_sub(1)];
        for v in 1..len {
            let par = parent[v] as usize;
            children[fill[par] as usize] = v as u32;
            fill[par] += 1;
        }
        let mut white_rank = vec![NO_PARENT; len];
        let mut whites = Vec::with_capacity(len);
        for v in 0..len {
            if depth[v].is_multiple_of(2) {
                white_rank[v] = whites.len() as u32;
                whites.push(v as u32);
            }
        }
        let n = len - whites.len();
        PTree {
            p,
            n,
            parent,
            depth,
            child_offsets,
            children,
            white_rank,
            whites,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of black vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of vertices.
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        match self.parent[v] {
            NO_PARENT => None,
            par => Some(par as usize),
        }
    }

    pub fn parents(&self) -> &[u32] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[u32] {
        &self.children[self.child_offsets[v] as usize..self.child_offsets[v + 1] as usize]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v] as usize
    }

    pub fn is_white(&self, v: usize) -> bool {
        self.depth[v].is_multiple_of(2)
    }

    pub fn white_count(&self) -> usize {
        self.whites.len()
    }

    /// Tree ids of the white vertices, in prefix order.
    pub fn whites(&self) -> &[u32] {
        &self.whites
    }

    pub fn white_rank(&self, v: usize) -> Option<usize> {
        match self.white_rank[v] {
            NO_PARENT => None,
            r => Some(r as usize),
        }
    }
}

fn check_p(p: usize) -> Result<()> {
    if !(2..=MAX_P).contains(&p) {
        return Err(Error::Parameter(format!("p must lie in 2..={MAX_P}, got {p}")));
    }
    Ok(())
}

fn check_params(n: usize, p: usize) -> Result<()> {
    check_p(p)?;
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if n > (u32::MAX as usize) / (p + 1) {
        return Err(Error::Parameter(format!("n = {n} is too large")));
    }
    Ok(())
}

/// Builds the p-tree whose white vertices, in prefix order, have the given
/// numbers of black children. `black_counts` must be a Łukasiewicz word: its
/// partial sums of `(p-1)c - 1` stay non-negative until the last step, where
/// they reach -1.
fn tree_from_lukasiewicz(p: usize, black_counts: &[u32]) -> PTree {
    enum Frame {
        White { id: u32, remaining: u32 },
        Black { id: u32, remaining: u32 },
    }
    let total: usize = black_counts.iter().map(|&c| c as usize).sum();
    let mut parent = Vec::with_capacity(p * total + 1);
    parent.push(NO_PARENT);
    let mut next_white = 1;
    let mut stack = vec![Frame::White {
        id: 0,
        remaining: black_counts[0],
    }];
    while let Some(top) = stack.last_mut() {
        match top {
            Frame::White { id, remaining } => {
                if *remaining == 0 {
                    stack.pop();
                } else {
                    *remaining -= 1;
                    let par = *id;
                    let b = parent.len() as u32;
                    parent.push(par);
                    stack.push(Frame::Black {
                        id: b,
                        remaining: (p - 1) as u32,
                    });
                }
            }
            Frame::Black { id, remaining } => {
                if *remaining == 0 {
                    stack.pop();
                } else {
                    *remaining -= 1;
                    let par = *id;
                    let w = parent.len() as u32;
                    parent.push(par);
                    stack.push(Frame::White {
                        id: w,
                        remaining: black_counts[next_white],
                    });
                    next_white += 1;
                }
            }
        }
    }
    debug_assert_eq!(next_white, black_counts.len());
    PTree::from_parents_unchecked(p, parent)
}

/// Uniform p-tree with `n` black vertices.
///
/// The white vertices form a Galton–Watson tree with offspring law
/// `(p-1) * Geometric(1/p)`; conditioned on `(p-1)n + 1` vertices, the
/// numbers of black children form a uniform weak composition of `n`. A cycle
/// lemma rotation turns the composition into a Łukasiewicz word, and each
/// white vertex's `(p-1)j` white grandchildren are grouped into `j` blocks of
/// `p - 1` under its black children.
pub fn sample_ptree<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<PTree> {
    check_params(n, p)?;
    let whites = (p - 1) * n + 1;
    let counts = uniform_weak_composition(n, whites, rng);

    // first time the walk with steps (p-1)c - 1 reaches its minimum
    let step = |c: u32| (p - 1) as i64 * c as i64 - 1;
    let (mut sum, mut best, mut argmin) = (0i64, i64::MAX, 0usize);
    for (i, &c) in counts.iter().enumerate() {
        sum += step(c);
        if sum < best {
            best = sum;
            argmin = i;
        }
    }
    debug_assert_eq!(sum, -1);
    let start = (argmin + 1) % whites;
    let mut rotated = Vec::with_capacity(whites);
    rotated.extend_from_slice(&counts[start..]);
    rotated.extend_from_slice(&counts[..start]);
    Ok(tree_from_lukasiewicz(p, &rotated))
}

/// Uniform weak composition of `total` into `parts` non-negative parts, by
/// sequential selection of the `parts - 1` bar positions among
/// `total + parts - 1` slots.
fn uniform_weak_composition<R: Rng + ?Sized>(total: usize, parts: usize, rng: &mut R) -> Vec<u32> {
    let mut out = vec![0u32; parts];
    let mut slots = total + parts - 1;
    let mut bars = parts - 1;
    let mut part = 0;
    while slots > 0 {
        if bars > 0 && rng.gen_range(0..slots) < bars {
            bars -= 1;
            part += 1;
        } else {
            out[part] += 1;
        }
        slots -= 1;
    }
    out
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of admissible increment sequences around one black vertex,
/// `C(2p-1, p-1)`.
pub fn increment_count(p: usize) -> u64 {
    binomial(2 * p as u64 - 1, p as u64 - 1) as u64
}

/// Decodes `index < C(2p-1, p-1)` into the `p` cyclic label increments around
/// a black vertex: each is `>= -1` and they sum to zero. The index selects the
/// bar positions of a stars-and-bars picture of a weak composition of `p`
/// into `p` parts (lexicographic combination order); each part minus one is
/// an increment.
pub fn increments_from_index(p: usize, index: u64, out: &mut [i32]) {
    debug_assert_eq!(out.len(), p);
    let slots = 2 * p - 1;
    let mut need = p - 1;
    let mut idx = index as u128;
    let mut part = 0usize;
    let mut run = 0i32;
    for pos in 0..slots {
        if need > 0 {
            let with_bar = binomial((slots - pos - 1) as u64, (need - 1) as u64);
            if idx < with_bar {
                out[part] = run - 1;
                part += 1;
                run = 0;
                need -= 1;
                continue;
            }
            idx -= with_bar;
        }
        run += 1;
    }
    out[part] = run - 1;
    debug_assert_eq!(part, p - 1);
}

/// A p-tree with integer labels on its white vertices satisfying the cyclic
/// rule around black vertices, root label 0. Labels may be negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardLabelledPTree {
    pub tree: PTree,
    pub labels: Vec<i32>,
}

/// Walks the black vertices in prefix order and writes children labels from
/// the parent's label and `next_increments`. Stops early, returning `false`,
/// as soon as a label drops below `floor`.
fn assign_labels<F>(tree: &PTree, labels: &mut [i32], floor: Option<i32>, mut next_increments: F) -> bool
where
    F: FnMut(&mut [i32]),
{
    let p = tree.p();
    let mut incr = vec![0i32; p];
    labels[0] = 0;
    for v in 0..tree.len() {
        if tree.is_white(v) {
            continue;
        }
        let par = tree.parent[v] as usize;
        let mut running = labels[tree.white_rank[par] as usize];
        next_increments(&mut incr);
        for (k, &child) in tree.children(v).iter().enumerate() {
            running += incr[k];
            if floor.is_some_and(|f| running < f) {
                return false;
            }
            labels[tree.white_rank[child as usize] as usize] = running;
        }
    }
    true
}

fn sample_labels<R: Rng + ?Sized>(tree: &PTree, rng: &mut R, floor: Option<i32>) -> Option<Vec<i32>> {
    let p = tree.p();
    let total = increment_count(p);
    let mut labels = vec![0i32; tree.white_count()];
    let ok = assign_labels(tree, &mut labels, floor, |out| {
        increments_from_index(p, rng.gen_range(0..total), out)
    });
    ok.then_some(labels)
}

/// Uniform standard labelling of `tree`: independently at every black vertex,
/// one of the `C(2p-1, p-1)` admissible increment sequences.
pub fn sample_standard_labels<R: Rng + ?Sized>(tree: &PTree, rng: &mut R) -> StandardLabelledPTree {
    let labels = sample_labels(tree, rng, None).expect("no floor");
    StandardLabelledPTree {
        tree: tree.clone(),
        labels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMode {
    /// Uniform over rooted mobiles, by rejection.
    ExactRooted,
    /// Standard labels shifted to have minimum 1, re-rooted at the first
    /// corner of label 1. This is the mobile of a uniform *pointed* map: the
    /// distinguished vertex is uniform instead of degree-biased like a root
    /// vertex, and the root edge is one of its incident edges.
    Pointed,
}

impl SamplerMode {
    pub fn default_for(n: usize) -> Self {
        if n > POINTED_THRESHOLD {
            SamplerMode::Pointed
        } else {
            SamplerMode::ExactRooted
        }
    }
}

impl std::str::FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-rooted" | "exact" => Ok(SamplerMode::ExactRooted),
            "pointed" => Ok(SamplerMode::Pointed),
            other => Err(Error::Parameter(format!("unknown sampler mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerMode::ExactRooted => "exact-rooted",
            SamplerMode::Pointed => "pointed",
        })
    }
}

/// Default rejection budget for exact-rooted sampling.
pub fn default_rejection_cap(n: usize, p: usize) -> usize {
    10 * ((p - 1) * n + 2)
}

/// A p-mobile: p-tree plus positive labels on white vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MobileFile", into = "MobileFile")]
pub struct Mobile {
    tree: PTree,
    labels: Vec<i32>,
}

impl Mobile {
    pub fn new(tree: PTree, labels: Vec<i32>) -> Result<Self> {
        let m = Mobile { tree, labels };
        m.validate()?;
        Ok(m)
    }

    pub fn tree(&self) -> &PTree {
        &self.tree
    }

    /// Labels indexed by white rank.
    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn p(&self) -> usize {
        self.tree.p
    }

    pub fn n(&self) -> usize {
        self.tree.n
    }

    /// Checks the two mobile conditions: root label 1 with all labels
    /// positive, and the cyclic decrement rule around each black vertex.
    pub fn validate(&self) -> Result<()> {
        let t = &self.tree;
        if self.labels.len() != t.white_count() {
            return Err(Error::InvalidMobile(format!(
                "{} labels for {} white vertices",
                self.labels.len(),
                t.white_count()
            )));
        }
        if self.labels[0] != 1 {
            return Err(Error::InvalidMobile(format!("root label is {}", self.labels[0])));
        }
        if let Some(r) = self.labels.iter().position(|&l| l < 1) {
            return Err(Error::InvalidMobile(format!("white vertex {r} has label {}", self.labels[r])));
        }
        check_cyclic_rule(t, &self.labels).map_err(Error::InvalidMobile)
    }
}

fn check_cyclic_rule(t: &PTree, labels: &[i32]) -> std::result::Result<(), String> {
    for v in 0..t.len() {
        if t.is_white(v) {
            continue;
        }
        let label_of = |w: usize| labels[t.white_rank[w] as usize];
        let par = t.parent[v] as usize;
        let mut prev = label_of(par);
        for &c in t.children(v).iter().chain(std::iter::once(&(par as u32))) {
            let cur = label_of(c as usize);
            if cur < prev - 1 {
                return Err(format!("labels drop from {prev} to {cur} around black vertex {v}"));
            }
            prev = cur;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MobileFile {
    p: usize,
    n: usize,
    parents: Vec<i64>,
    labels: Vec<i32>,
}

impl TryFrom<MobileFile> for Mobile {
    type Error = Error;

    fn try_from(f: MobileFile) -> Result<Self> {
        let parents = f
            .parents
            .iter()
            .map(|&x| match x {
                -1 => Ok(NO_PARENT),
                x if x >= 0 && x < u32::MAX as i64 => Ok(x as u32),
                x => Err(Error::InvalidTree(format!("bad parent index {x}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let tree = PTree::from_parents(f.p, parents)?;
        if tree.n() != f.n {
            return Err(Error::InvalidTree(format!("declared n = {} but tree has {}", f.n, tree.n())));
        }
        Mobile::new(tree, f.labels)
    }
}

impl From<Mobile> for MobileFile {
    fn from(m: Mobile) -> Self {
        MobileFile {
            p: m.p(),
            n: m.n(),
            parents: m
                .tree
                .parent
                .iter()
                .map(|&x| if x == NO_PARENT { -1 } else { x as i64 })
                .collect(),
            labels: m.labels,
        }
    }
}

/// Samples a mobile with `n` black vertices using the default rejection cap.
pub fn sample_mobile<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R, mode: SamplerMode) -> Result<Mobile> {
    check_params(n, p)?;
    sample_mobile_with_cap(n, p, rng, mode, default_rejection_cap(n, p))
}

pub fn sample_mobile_with_cap<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    rng: &mut R,
    mode: SamplerMode,
    cap: usize,
) -> Result<Mobile> {
    check_params(n, p)?;
    match mode {
        SamplerMode::ExactRooted => {
            let mut attempt = LazyAttempt::new(n, p);
            for _ in 0..cap {
                if attempt.run(rng) {
                    return Ok(attempt.into_mobile());
                }
            }
            Err(Error::RetryExhausted { attempts: cap })
        }
        SamplerMode::Pointed => {
            let tree = sample_ptree(n, p, rng)?;
            let mut labels = sample_labels(&tree, rng, None).expect("no floor");
            let shift = 1 - labels.iter().copied().min().unwrap_or(0);
            labels.iter_mut().for_each(|l| *l += shift);
            Ok(reroot_at_first_minimum(&tree, &labels))
        }
    }
}

/// One rejection attempt of the exact sampler, generated vertex by vertex so
/// that it can stop at the first label below 1 without building the rest of
/// the tree.
///
/// The black-child count of each white vertex is drawn from its law given
/// the counts already drawn: with `k` subtrees still to complete, `m` white
/// and `b` black vertices left (`m = k + (p-1)b`), a forest has
/// `k/m * C(b+m-1, b)` completions. Conditioned on finishing, the attempt is
/// a uniform p-tree with uniform increments, exactly as a full draw.
struct LazyAttempt {
    n: usize,
    p: usize,
    parent: Vec<u32>,
    labels: Vec<i32>,
    incr: Vec<i32>,
    pending: Vec<u32>,
}

impl LazyAttempt {
    fn new(n: usize, p: usize) -> Self {
        LazyAttempt {
            n,
            p,
            parent: Vec::with_capacity(p * n + 1),
            labels: Vec::with_capacity(p * n + 1),
            incr: vec![0; p],
            pending: Vec::new(),
        }
    }

    /// Draws the black-child count of one of `k` pending white vertices, with
/// `m` whites and `b` blacks left in total.
    fn child_count<R: Rng + ?Sized>(&self, k: usize, m: usize, b: usize, rng: &mut R) -> usize {
        if m == 1 {
            return 0;
        }
        let (pm, kf, mf, bf) = ((self.p - 1) as f64, k as f64, m as f64, b as f64);
        let (mut c, mut prob) = if k > 1 {
            (0, (kf - 1.0) * mf / (kf * (bf + mf - 1.0)))
        } else {
            (1, pm * mf * bf / ((bf + mf - 1.0) * (bf + mf - 2.0)))
        };
        let u: f64 = rng.gen();
        let mut acc = prob;
        while acc < u && c < b {
            let now = (k - 1 + (self.p - 1) * c) as f64;
            let next = now + pm;
            prob *= next / now * (b - c) as f64 / (b - c + m - 2) as f64;
            acc += prob;
            c += 1;
        }
        c
    }

    /// Returns whether every label stayed at least 1.
    fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let p = self.p;
        let total = increment_count(p);
        self.parent.clear();
        self.labels.clear();
        self.pending.clear();
        self.parent.push(NO_PARENT);
        self.labels.push(1);
        self.pending.push(0);
        let mut b = self.n;
        // whites are expanded in any order; children get consecutive ids so
        // sibling order is creation order
        while let Some(white) = self.pending.pop() {
            let k = self.pending.len() + 1;
            let c = self.child_count(k, k + (p - 1) * b, b, rng);
            b -= c;
            let base = self.labels[white as usize];
            for _ in 0..c {
                let black = self.parent.len() as u32;
                self.parent.push(white);
                self.labels.push(0);
                increments_from_index(p, rng.gen_range(0..total), &mut self.incr);
                let mut running = base;
                for i in 0..p - 1 {
                    running += self.incr[i];
                    if running < 1 {
                        return false;
                    }
                    self.pending.push(self.parent.len() as u32);
                    self.parent.push(black);
                    self.labels.push(running);
                }
            }
        }
        true
    }

    /// Renumbers the accepted attempt in prefix order.
    fn into_mobile(self) -> Mobile {
        let len = self.parent.len();
        let mut offsets = vec![0usize; len + 1];
        for &par in &self.parent[1..] {
            offsets[par as usize + 1] += 1;
        }
        for v in 0..len {
            offsets[v + 1] += offsets[v];
        }
        let mut fill = offsets.clone();
        let mut children = vec![0u32; len - 1];
        for (v, &par) in self.parent.iter().enumerate().skip(1) {
            children[fill[par as usize]] = v as u32;
            fill[par as usize] += 1;
        }
        let mut new_id = vec![0u32; len];
        let mut parent = Vec::with_capacity(len);
        let mut labels = Vec::with_capacity(len);
        let mut stack = vec![0u32];
        while let Some(v) = stack.pop() {
            let v = v as usize;
            new_id[v] = parent.len() as u32;
            parent.push(if v == 0 { NO_PARENT } else { new_id[self.parent[v] as usize] });
            // black vertices carry the placeholder label 0
            if self.labels[v] > 0 {
                labels.push(self.labels[v]);
            }
            stack.extend(children[offsets[v]..offsets[v + 1]].iter().rev());
        }
        let tree = PTree::from_parents(self.p, parent).expect("prefix-order p-tree");
        Mobile { tree, labels }
    }
}

/// Re-roots a labelled p-tree whose minimum label is 1 at the first contour
/// corner carrying label 1. The plane tree and the cyclic order of corners are
/// unchanged, so the result is a valid mobile whose contour labels are a
/// cyclic rotation of the original ones.
fn reroot_at_first_minimum(tree: &PTree, labels: &[i32]) -> Mobile {
    let unrooted = Mobile {
        tree: tree.clone(),
        labels: labels.to_vec(),
    };
    let enc = contour(&unrooted);
    let s = enc.labels.iter().position(|&l| l == 1).expect("minimum label is 1");
    let rank = enc.corner_vertex[s];
    let corner = enc.corner_vertex[..s].iter().filter(|&&r| r == rank).count();
    let (tree, perm) = tree.reroot(tree.whites[rank as usize] as usize, corner);
    let mut new_labels = vec![0; labels.len()];
    for (old, &new) in perm.iter().enumerate() {
        if tree.is_white(new as usize) {
            let old_rank = unrooted.tree.white_rank[old] as usize;
            new_labels[tree.white_rank[new as usize] as usize] = labels[old_rank];
        }
    }
    Mobile {
        tree,
        labels: new_labels,
    }
}

impl PTree {
    /// Position of `v` among its parent's children.
    fn child_position(&self, v: usize) -> usize {
        let par = self.parent[v] as usize;
        self.children(par).partition_point(|&c| (c as usize) < v)
    }

    /// Cyclic list of neighbours of `v`: parent first (if any), then children.
    fn neighbour(&self, v: usize, k: usize) -> usize {
        match self.parent(v) {
            Some(par) if k == 0 => par,
            Some(_) => self.children(v)[k - 1] as usize,
            None => self.children(v)[k] as usize,
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.children(v).len() + usize::from(v != 0)
    }

    /// Re-roots the plane tree at the `corner`-th corner of white vertex `w`
    /// (corners counted in contour order). Returns the new tree and the map
    /// from old vertex ids to new ones.
    pub fn reroot(&self, w: usize, corner: usize) -> (PTree, Vec<u32>) {
        assert!(self.is_white(w));
        let len = self.len();
        let mut perm = vec![NO_PARENT; len];
        let mut parent = Vec::with_capacity(len);
        // first neighbour of w in the new child order
        let deg = self.degree(w);
        let first = if w == 0 { corner % deg.max(1) } else { (corner + 1) % deg };
        // stack frames: (old vertex, next neighbour offset, neighbours left)
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        perm[w] = 0;
        parent.push(NO_PARENT);
        stack.push((w, first, deg));
        while let Some(top) = stack.last_mut() {
            let (v, next, left) = *top;
            if left == 0 {
                stack.pop();
                continue;
            }
            let deg_v = self.degree(v);
            top.1 = (next + 1) % deg_v;
            top.2 -= 1;
            let u = self.neighbour(v, next);
            perm[u] = parent.len() as u32;
            parent.push(perm[v]);
            // u's children start right after v in u's cyclic order
            let back = if self.parent(u) == Some(v) {
                0
            } else {
                self.child_position(v) + usize::from(u != 0)
            };
            let deg_u = self.degree(u);
            stack.push((u, (back + 1) % deg_u, deg_u - 1));
        }
        (PTree::from_parents_unchecked(self.p, parent), perm)
    }
}

/// Every mobile with `n` black vertices, in a deterministic order.
pub fn enumerate_mobiles(n: usize, p: usize) -> Result<Vec<Mobile>> {
    check_params(n, p)?;
    let whites = (p - 1) * n + 1;
    let trees = binomial((n + whites - 1) as u64, n as u64) / whites as u128;
    let per_tree = (increment_count(p) as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let estimate = trees.saturating_mul(per_tree);
    if estimate > ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            estimate,
            cap: ENUMERATION_CAP,
        });
    }

    let mut out = Vec::new();
    let mut word = Vec::with_capacity(whites);
    for_each_lukasiewicz(p, n, whites, &mut word, 0, &mut |w| {
        let tree = tree_from_lukasiewicz(p, w);
        let total = increment_count(p);
        let mut odometer = vec![0u64; n];
        let mut labels = vec![0i32; tree.white_count()];
        loop {
            let mut k = 0;
            assign_labels(&tree, &mut labels, None, |inc| {
                increments_from_index(p, odometer[k], inc);
                k += 1;
            });
            if labels.iter().all(|&l| l >= 0) {
                out.push(Mobile {
                    tree: tree.clone(),
                    labels: labels.iter().map(|l| l + 1).collect(),
                });
            }
            // advance the odometer, last black vertex fastest
            let mut pos = n;
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                odometer[pos] += 1;
                if odometer[pos] < total {
                    break;
                }
                odometer[pos] = 0;
            }
        }
    });
    Ok(out)
}

fn for_each_lukasiewicz<F: FnMut(&[u32])>(
    p: usize,
    remaining: usize,
    whites: usize,
    word: &mut Vec<u32>,
    height: i64,
    f: &mut F,
) {
    let k = word.len();
    if k == whites {
        if height == -1 && remaining == 0 {
            f(word);
        }
        return;
    }
    if height < 0 {
        return;
    }
    for c in 0..=remaining {
        let h = height + (p - 1) as i64 * c as i64 - 1;
        // a proper prefix must stay non-negative
        if k + 1 < whites && h < 0 {
            continue;
        }
        word.push(c as u32);
        for_each_lukasiewicz(p, remaining - c, whites, word, h, f);
        word.pop();
    }
}

/// Half-depths `C`, labels `Λ` and the white vertex at each corner of the
/// contour sequence `v_0, …, v_{pn}` of the white vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContourEncoding {
    pub p: usize,
    pub n: usize,
    #[serde(rename = "C")]
    pub heights: Vec<u32>,
    #[serde(rename = "L")]
    pub labels: Vec<i32>,
    /// White rank of the vertex at each corner.
    pub corner_vertex: Vec<u32>,
}

impl ContourEncoding {
    /// Index of the last corner, `pn`.
    pub fn last(&self) -> usize {
        self.heights.len() - 1
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn white_count(&self) -> usize {
        (self.p - 1) * self.n + 1
    }

    /// Checks the structural invariants (endpoints, step sizes, label rule).
    pub fn validate(&self) -> Result<()> {
        let len = self.p * self.n + 1;
        if self.heights.len() != len || self.labels.len() != len || self.corner_vertex.len() != len {
            return Err(Error::InvalidEncoding(format!("sequences must have length pn + 1 = {len}")));
        }
        if self.heights[0] != 0 || self.heights[len - 1] != 0 {
            return Err(Error::InvalidEncoding("C must start and end at 0".into()));
        }
        for i in 0..len - 1 {
            let dc = self.heights[i + 1] as i64 - self.heights[i] as i64;
            if dc.abs() > 1 {
                return Err(Error::InvalidEncoding(format!("C jumps by {dc} at {i}")));
            }
            if self.labels[i + 1] < self.labels[i] - 1 {
                return Err(Error::InvalidEncoding(format!("Λ drops by more than 1 at {i}")));
            }
        }
        if self.labels.iter().any(|&l| l < 1) {
            return Err(Error::InvalidEncoding("labels must be positive".into()));
        }
        Ok(())
    }
}

/// Contour encoding of a mobile.
pub fn contour(m: &Mobile) -> ContourEncoding {
    let t = &m.tree;
    let len = m.p() * m.n() + 1;
    let mut heights = Vec::with_capacity(len);
    let mut labels = Vec::with_capacity(len);
    let mut corner_vertex = Vec::with_capacity(len);
    let mut emit = |v: usize| {
        let r = t.white_rank[v];
        heights.push(t.depth[v] / 2);
        labels.push(m.labels[r as usize]);
        corner_vertex.push(r);
    };
    // (white vertex, next black child, next white child within that black)
    let mut stack: Vec<(usize, usize, usize)> = vec![(0, 0, 0)];
    emit(0);
    while let Some(&mut (v, ref mut bi, ref mut wi)) = stack.last_mut() {
        let blacks = t.children(v);
        if *bi == blacks.len() {
            stack.pop();
            continue;
        }
        let b = blacks[*bi] as usize;
        let whites = t.children(b);
        if *wi < whites.len() {
            let w = whites[*wi] as usize;
            *wi += 1;
            stack.push((w, 0, 0));
            emit(w);
        } else {
            *bi += 1;
            *wi = 0;
            emit(v);
        }
    }
    debug_assert_eq!(heights.len(), len);
    ContourEncoding {
        p: m.p(),
        n: m.n(),
        heights,
        labels,
        corner_vertex,
    }
}

/// Rebuilds the mobile coded by `(C, Λ)`; the `corner_vertex` field is
/// checked against the reconstruction.
pub fn decode(enc: &ContourEncoding) -> Result<Mobile> {
    check_params(enc.n, enc.p)?;
    enc.validate()?;
    let p = enc.p;
    let mut parent: Vec<u32> = vec![NO_PARENT];
    let mut white_of_tree: Vec<u32> = vec![0]; // tree id -> white rank (black: NO_PARENT)
    let mut labels = vec![enc.labels[0]];
    let mut current = 0usize; // tree id of the current white vertex
    let mut child_count: Vec<u32> = vec![0];
    let mut corner_white = vec![0u32];

    for i in 0..enc.last() {
        let dc = enc.heights[i + 1] as i64 - enc.heights[i] as i64;
        match dc {
            1 => {
                let b = parent.len();
                parent.push(current as u32);
                white_of_tree.push(NO_PARENT);
                child_count.push(0);
                child_count[current] += 1;
                let w = parent.len();
                parent.push(b as u32);
                white_of_tree.push(labels.len() as u32);
                labels.push(enc.labels[i + 1]);
                child_count.push(0);
                child_count[b] += 1;
                current = w;
            }
            0 => {
                let b = parent[current] as usize;
                if current == 0 || child_count[b] as usize >= p - 1 {
                    return Err(Error::InvalidEncoding(format!("black vertex overflows at corner {i}")));
                }
                let w = parent.len();
                parent.push(b as u32);
                white_of_tree.push(labels.len() as u32);
                labels.push(enc.labels[i + 1]);
                child_count.push(0);
                child_count[b] += 1;
                current = w;
            }
            _ => {
                if current == 0 {
                    return Err(Error::InvalidEncoding(format!("contour leaves the root at {i}")));
                }
                let b = parent[current] as usize;
                if child_count[b] as usize != p - 1 {
                    return Err(Error::InvalidEncoding(format!(
                        "black vertex closes with {} children at corner {i}",
                        child_count[b]
                    )));
                }
                current = parent[b] as usize;
                let r = white_of_tree[current] as usize;
                if labels[r] != enc.labels[i + 1] {
                    return Err(Error::InvalidEncoding(format!("label mismatch on revisit at corner {}", i + 1)));
                }
            }
        }
        corner_white.push(white_of_tree[current]);
    }
    if corner_white != enc.corner_vertex {
        return Err(Error::InvalidEncoding("corner_vertex does not match the contour".into()));
    }
    let tree = PTree::from_parents(p, parent)?;
    if tree.n() != enc.n {
        return Err(Error::InvalidEncoding(format!("contour codes {} black vertices, not {}", tree.n(), enc.n)));
    }
    Mobile::new(tree, labels)
}

/// Labels along the ancestral line of the vertex at corner `i`: entry `j` is
/// the label of its ancestor at white generation `j`, the last entry is `Λ_i`.
pub fn discrete_snake(enc: &ContourEncoding, i: usize) -> Result<Vec<i32>> {
    if i > enc.last() {
        return Err(Error::IndexOutOfRange {
            index: i,
            max: enc.last(),
        });
    }
    let h = enc.heights[i] as usize;
    let mut out = vec![0i32; h + 1];
    out[h] = enc.labels[i];
    let mut target = h;
    // going backwards, the first corner at height j < C_i is the ancestor at
    // generation j, since C moves by at most one per step
    for k in (0..i).rev() {
        if target == 0 {
            break;
        }
        if enc.heights[k] as usize == target - 1 {
            target -= 1;
            out[target] = enc.labels[k];
        }
    }
    debug_assert_eq!(target, 0);
    Ok(out)
}
