//! Graph distances and geodesic statistics on BDG maps.
//!
//! Thresholds (`delta_abs`, `alpha_abs`, ...) are absolute integer distances;
//! converting dimensionless thresholds with the `n^{1/4}` scaling is left to
//! the caller.
//!
//! Two facts about BDG maps are used throughout. The distance from ∂ to a
//! white vertex is its label, and the map is bipartite, so two distinct
//! vertices at the same distance from ∂ are at even distance, hence at least
//! 2, from each other.

use std::collections::VecDeque;
use std::sync::OnceLock;

use serde::Serialize;

use crate::bdgmap::{sentinel_root, successors, PlanarMap, ROOT_VERTEX};
use crate::mobile::ContourEncoding;
use crate::rmq::RangeMin;
use crate::{Error, Result};

pub const UNREACHED: u32 = u32::MAX;

/// Largest slice for which [`geodesic_spread`] computes the exact diameter.
pub const EXACT_SLICE_LIMIT: usize = 64;

/// Limit on the number of paths produced by [`all_geodesics`].
pub const GEODESIC_ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    pub source: usize,
    pub dist: Vec<u32>,
}

impl DistanceField {
    pub fn get(&self, v: usize) -> u32 {
        self.dist[v]
    }

    /// Largest finite distance.
    pub fn eccentricity(&self) -> u32 {
        self.dist.iter().copied().filter(|&d| d != UNREACHED).max().unwrap_or(0)
    }
}

/// Single-source shortest path distances.
pub fn bfs(map: &PlanarMap, source: usize) -> DistanceField {
    let mut dist = vec![UNREACHED; map.vertex_count()];
    let mut queue = VecDeque::with_capacity(map.vertex_count());
    dist[source] = 0;
    queue.push_back(source as u32);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize] + 1;
        for &w in map.neighbours(v as usize) {
            if dist[w as usize] == UNREACHED {
                dist[w as usize] = d;
                queue.push_back(w);
            }
        }
    }
    DistanceField { source, dist }
}

/// Reusable scratch space for many small breadth-first searches on one map.
/// Only the visited vertices are reset between searches.
#[derive(Debug, Clone)]
pub struct BfsScratch {
    dist: Vec<u32>,
    queue: Vec<u32>,
}

impl BfsScratch {
    pub fn new(vertex_count: usize) -> Self {
        BfsScratch {
            dist: vec![UNREACHED; vertex_count],
            queue: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.queue {
            self.dist[v as usize] = UNREACHED;
        }
        self.queue.clear();
    }

    /// Runs a search from `source` up to depth `radius`, stopping early once
    /// `done` returns true for a newly reached vertex. Distances of reached
    /// vertices stay readable until the next search.
    fn search<F: FnMut(u32, u32) -> bool>(&mut self, map: &PlanarMap, source: usize, radius: u32, mut done: F) {
        self.reset();
        self.dist[source] = 0;
        self.queue.push(source as u32);
        if done(source as u32, 0) {
            return;
        }
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            let d = self.dist[v as usize];
            if d >= radius {
                continue;
            }
            for &w in map.neighbours(v as usize) {
                if self.dist[w as usize] == UNREACHED {
                    self.dist[w as usize] = d + 1;
                    self.queue.push(w);
                    if done(w, d + 1) {
                        return;
                    }
                }
            }
        }
    }

    /// Distance from `s` to `t` if it is at most `limit`.
    pub fn distance_within(&mut self, map: &PlanarMap, s: usize, t: usize, limit: u32) -> Option<u32> {
        let mut found = None;
        self.search(map, s, limit, |v, d| {
            if v as usize == t {
                found = Some(d);
                true
            } else {
                false
            }
        });
        found
    }

    pub fn distance(&mut self, map: &PlanarMap, s: usize, t: usize) -> u32 {
        self.distance_within(map, s, t, UNREACHED - 1).unwrap_or(UNREACHED)
    }

    /// Distances from `s` to each of `targets` (all assumed within `limit`;
    /// unreached ones are reported as `UNREACHED`).
    pub fn distances_to(&mut self, map: &PlanarMap, s: usize, targets: &[u32], limit: u32, out: &mut Vec<u32>) {
        let mut remaining = targets.len();
        // mark targets through the search callback only
        self.search(map, s, limit, |v, _| {
            if targets.contains(&v) {
                remaining -= 1;
            }
            remaining == 0
        });
        out.clear();
        out.extend(targets.iter().map(|&t| self.dist[t as usize]));
    }

    /// Sizes of the balls of the given radii (ascending) around `center`.
    pub fn ball_sizes(&mut self, map: &PlanarMap, center: usize, radii: &[u32]) -> Vec<usize> {
        let max_r = radii.last().copied().unwrap_or(0);
        self.search(map, center, max_r, |_, _| false);
        let mut counts = vec![0usize; max_r as usize + 1];
        for &v in &self.queue {
            counts[self.dist[v as usize] as usize] += 1;
        }
        let mut acc = 0;
        let cumulative: Vec<usize> = counts
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect();
        radii.iter().map(|&r| cumulative[r as usize]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeodesicPath(pub Vec<u32>);

impl GeodesicPath {
    pub fn vertices(&self) -> &[u32] {
        &self.0
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Vertex at index `i`, clamped to the last vertex.
    pub fn at(&self, i: usize) -> u32 {
        self.0[i.min(self.0.len() - 1)]
    }

    pub fn reversed(&self) -> GeodesicPath {
        GeodesicPath(self.0.iter().rev().copied().collect())
    }

    /// Checks that consecutive vertices are adjacent and that the length
    /// equals the graph distance between the endpoints.
    pub fn check(&self, map: &PlanarMap) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::EmptyPath);
        }
        for w in self.0.windows(2) {
            if !map.neighbours(w[0] as usize).contains(&w[1]) {
                return Err(Error::NotAnEdge(w[0], w[1]));
            }
        }
        let d = BfsScratch::new(map.vertex_count()).distance(map, self.0[0] as usize, *self.0.last().unwrap() as usize);
        if d as usize != self.len() {
            return Err(Error::InvalidMap(format!("path of length {} joins vertices at distance {d}", self.len())));
        }
        Ok(())
    }
}

/// `max_i d(γ(i ∧ k), γ'(i ∧ k'))` for paths of lengths `k` and `k'`.
pub fn path_distance(map: &PlanarMap, a: &GeodesicPath, b: &GeodesicPath) -> Result<u32> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPath);
    }
    let mut scratch = BfsScratch::new(map.vertex_count());
    let steps = a.len().max(b.len());
    let mut best = 0;
    for i in 0..=steps {
        let (x, y) = (a.at(i), b.at(i));
        if x != y {
            best = best.max(scratch.distance(map, x as usize, y as usize));
        }
    }
    Ok(best)
}

/// Corner-level data shared by the geodesic statistics of one map.
pub struct Geodesy<'a> {
    enc: &'a ContourEncoding,
    map: &'a PlanarMap,
    succ: Vec<u32>,
    corner_offsets: Vec<u32>,
    corners: Vec<u32>,
    label_min: OnceLock<RangeMin<i32>>,
}

impl<'a> Geodesy<'a> {
    /// `map` must be the map built from `enc`.
    pub fn new(enc: &'a ContourEncoding, map: &'a PlanarMap) -> Self {
        let whites = enc.white_count();
        let mut offsets = vec![0u32; whites + 1];
        for &r in &enc.corner_vertex {
            offsets[r as usize + 1] += 1;
        }
        for r in 0..whites {
            offsets[r + 1] += offsets[r];
        }
        let mut fill = offsets.clone();
        let mut corners = vec![0u32; enc.len()];
        for (i, &r) in enc.corner_vertex.iter().enumerate() {
            corners[fill[r as usize] as usize] = i as u32;
            fill[r as usize] += 1;
        }
        Geodesy {
            enc,
            map,
            succ: successors(enc),
            corner_offsets: offsets,
            corners,
            label_min: OnceLock::new(),
        }
    }

    pub fn encoding(&self) -> &ContourEncoding {
        self.enc
    }

    pub fn map(&self) -> &PlanarMap {
        self.map
    }

    /// Corner indices of map vertex `v` (empty for ∂), ascending.
    pub fn corners_of(&self, v: usize) -> &[u32] {
        if v == ROOT_VERTEX as usize {
            return &[];
        }
        let r = v - 1;
        &self.corners[self.corner_offsets[r] as usize..self.corner_offsets[r + 1] as usize]
    }

    fn label_min(&self) -> &RangeMin<i32> {
        self.label_min.get_or_init(|| RangeMin::new(&self.enc.labels))
    }

    /// Path from the vertex at corner `j` to ∂ following successors.
    pub fn corner_geodesic(&self, j: usize) -> Result<GeodesicPath> {
        if j > self.enc.last() {
            return Err(Error::IndexOutOfRange {
                index: j,
                max: self.enc.last(),
            });
        }
        let sentinel = sentinel_root(self.enc) as u32;
        let mut path = Vec::with_capacity(self.enc.labels[j] as usize + 1);
        // the last corner carries label 1, so its successor is ∂
        let mut c = j as u32;
        path.push(self.enc.corner_vertex[j] + 1);
        loop {
            let s = self.succ.get(c as usize).copied().unwrap_or(sentinel);
            if s == sentinel {
                path.push(ROOT_VERTEX);
                break;
            }
            path.push(self.enc.corner_vertex[s as usize] + 1);
            c = s;
        }
        Ok(GeodesicPath(path))
    }

    /// Distinct corner geodesics of `a`.
    pub fn vertex_corner_geodesics(&self, a: usize) -> Vec<GeodesicPath> {
        let mut paths: Vec<GeodesicPath> = self
            .corners_of(a)
            .iter()
            .map(|&j| self.corner_geodesic(j as usize).expect("corner in range"))
            .collect();
        paths.sort_unstable();
        paths.dedup();
        paths
    }

    /// Whether two geodesics from the same vertex to ∂, of common length `L`,
    /// are at least `threshold` apart. At step `i` both paths sit at distance
    /// `L - i` from ∂, so they are within `2 min(i, L - i)` of each other.
    fn far_apart(&self, scratch: &mut BfsScratch, g: &GeodesicPath, h: &GeodesicPath, threshold: u32) -> bool {
        if threshold == 0 {
            return true;
        }
        let len = g.len();
        debug_assert_eq!(len, h.len());
        for i in 1..len {
            let (x, y) = (g.at(i), h.at(i));
            if x == y || 2 * i.min(len - i) < threshold as usize {
                continue;
            }
            if threshold <= 2 {
                return true;
            }
            if scratch.distance_within(self.map, x as usize, y as usize, threshold - 1).is_none() {
                return true;
            }
        }
        false
    }

    /// Exact path distance between two geodesics from a common vertex to ∂.
    fn common_source_distance(&self, scratch: &mut BfsScratch, g: &GeodesicPath, h: &GeodesicPath) -> u32 {
        let len = g.len();
        let mut best = 0;
        for i in 1..len {
            let (x, y) = (g.at(i), h.at(i));
            let cap = 2 * i.min(len - i) as u32;
            if x == y || cap <= best {
                continue;
            }
            if best < 2 {
                best = 2;
                if cap == 2 {
                    continue;
                }
            }
            let d = scratch.distance_within(self.map, x as usize, y as usize, cap).expect("bounded by the level");
            best = best.max(d);
        }
        best
    }

    /// Largest set of corner geodesics of `a` that are pairwise at least
    /// `delta_abs` apart.
    pub fn corner_multiplicity(&self, scratch: &mut BfsScratch, a: usize, delta_abs: u32) -> Result<usize> {
        if a == ROOT_VERTEX as usize || a >= self.map.vertex_count() {
            return Err(Error::Parameter(format!("corner multiplicity needs a white vertex, got {a}")));
        }
        let paths = self.vertex_corner_geodesics(a);
        let m = paths.len();
        if m <= 1 {
            return Ok(m);
        }
        let mut far = vec![vec![false; m]; m];
        for x in 0..m {
            for y in x + 1..m {
                let f = self.far_apart(scratch, &paths[x], &paths[y], delta_abs);
                far[x][y] = f;
                far[y][x] = f;
            }
        }
        Ok(max_clique(&far))
    }

    /// All corner triplets `j1 < j2 < j3` of a common vertex such that the
    /// label minima over `[j1, j2]` and `[j2, j3]` are both at most
    /// `Λ_{j1} - alpha_abs`.
    pub fn find_triplets(&self, alpha_abs: u32) -> Result<Vec<(u32, u32, u32)>> {
        let mut out = Vec::new();
        self.for_each_triplet(alpha_abs, |t| {
            out.push(t);
            false
        })?;
        Ok(out)
    }

    /// Calls `f` on each qualifying triplet until it returns true.
    fn for_each_triplet<F: FnMut((u32, u32, u32)) -> bool>(&self, alpha_abs: u32, mut f: F) -> Result<()> {
        if alpha_abs < 1 {
            return Err(Error::Parameter("alpha_abs must be at least 1".into()));
        }
        let rmq = self.label_min();
        for v in 1..self.map.vertex_count() {
            let cs = self.corners_of(v);
            if cs.len() < 3 {
                continue;
            }
            let cut = self.enc.labels[cs[0] as usize] - alpha_abs as i32;
            for (x, &j1) in cs.iter().enumerate() {
                for (y, &j2) in cs.iter().enumerate().skip(x + 1) {
                    if rmq.min(j1 as usize, j2 as usize) > cut {
                        continue;
                    }
                    for &j3 in &cs[y + 1..] {
                        if rmq.min(j2 as usize, j3 as usize) <= cut && f((j1, j2, j3)) {
                            return Ok(());
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Over all triplets of [`Self::find_triplets`], the largest minimum
    /// pairwise path distance between their three corner geodesics, with a
    /// triplet achieving it. `None` when there is no triplet.
    pub fn three_geodesics_stat(&self, alpha_abs: u32) -> Result<Option<(u32, (u32, u32, u32))>> {
        let mut scratch = BfsScratch::new(self.map.vertex_count());
        let mut best: Option<(u32, (u32, u32, u32))> = None;
        let mut cache: std::collections::HashMap<(u32, u32), u32> = Default::default();
        let mut dist = |scratch: &mut BfsScratch, a: u32, b: u32| -> u32 {
            *cache.entry((a, b)).or_insert_with(|| {
                let g = self.corner_geodesic(a as usize).expect("in range");
                let h = self.corner_geodesic(b as usize).expect("in range");
                self.common_source_distance(scratch, &g, &h)
            })
        };
        let triplets = self.find_triplets(alpha_abs)?;
        for t in triplets {
            let (a, b, c) = t;
            let floor = best.map_or(0, |b| b.0);
            let ab = dist(&mut scratch, a, b);
            if best.is_some() && ab <= floor {
                continue;
            }
            let sep = ab.min(dist(&mut scratch, a, c)).min(dist(&mut scratch, b, c));
            if best.is_none_or(|b| sep > b.0) {
                best = Some((sep, t));
            }
        }
        Ok(best)
    }

    /// First triplet (in vertex, then corner order) whose three corner
    /// geodesics are pairwise at least `threshold` apart.
    pub fn three_geodesics_reaching(&self, alpha_abs: u32, threshold: u32) -> Result<Option<(u32, u32, u32)>> {
        let mut scratch = BfsScratch::new(self.map.vertex_count());
        let mut found = None;
        self.for_each_triplet(alpha_abs, |t| {
            let g: Vec<GeodesicPath> = [t.0, t.1, t.2]
                .iter()
                .map(|&j| self.corner_geodesic(j as usize).expect("in range"))
                .collect();
            let ok = self.far_apart(&mut scratch, &g[0], &g[1], threshold)
                && self.far_apart(&mut scratch, &g[0], &g[2], threshold)
                && self.far_apart(&mut scratch, &g[1], &g[2], threshold);
            if ok {
                found = Some(t);
            }
            ok
        })?;
        Ok(found)
    }

    /// Largest prefix divergence `max_{1 <= i <= beta_abs} d(γ(i), γ'(i))`
    /// over pairs of corner geodesics of length at least `chi_abs`, indexed
    /// from ∂. `None` when no corner has label `>= chi_abs`.
    pub fn confluence(&self, scratch: &mut BfsScratch, chi_abs: u32, beta_abs: u32) -> Result<Option<u32>> {
        check_confluence_params(chi_abs, beta_abs)?;
        let qualifying: Vec<usize> = (0..self.enc.len())
            .filter(|&j| self.enc.labels[j] >= chi_abs as i32)
            .collect();
        if qualifying.is_empty() {
            return Ok(None);
        }
        Ok(Some(self.prefix_divergence(scratch, &qualifying, beta_abs)))
    }

    /// Prefix divergence restricted to the corner geodesics of `a`; `None`
    /// when `d(∂, a) < chi_abs`.
    pub fn vertex_confluence(&self, scratch: &mut BfsScratch, a: usize, chi_abs: u32, beta_abs: u32) -> Result<Option<u32>> {
        check_confluence_params(chi_abs, beta_abs)?;
        let cs: Vec<usize> = self.corners_of(a).iter().map(|&j| j as usize).collect();
        if cs.is_empty() || self.enc.labels[cs[0]] < chi_abs as i32 {
            return Ok(None);
        }
        Ok(Some(self.prefix_divergence(scratch, &cs, beta_abs)))
    }

    /// For each level `i <= beta`, the corner geodesic from `j` passes at
    /// the first corner `>= j` with label `i`; the divergence is the largest
    /// diameter of these level sets.
    fn prefix_divergence(&self, scratch: &mut BfsScratch, corners: &[usize], beta: u32) -> u32 {
        let mut best = 0;
        for level in 1..=beta as i32 {
            // next corner at or after each position with this label
            let mut next = vec![u32::MAX; self.enc.len() + 1];
            for j in (0..self.enc.len()).rev() {
                next[j] = if self.enc.labels[j] == level { j as u32 } else { next[j + 1] };
            }
            let mut set: Vec<u32> = corners
                .iter()
                .filter(|&&j| self.enc.labels[j] >= level)
                .map(|&j| self.enc.corner_vertex[next[j] as usize] + 1)
                .collect();
            set.sort_unstable();
            set.dedup();
            best = best.max(set_diameter(self.map, scratch, &set, 2 * level as u32));
        }
        best
    }
}

fn check_confluence_params(chi_abs: u32, beta_abs: u32) -> Result<()> {
    if beta_abs < 1 || chi_abs <= beta_abs {
        return Err(Error::Parameter(format!(
            "confluence needs chi_abs > beta_abs >= 1, got chi_abs = {chi_abs}, beta_abs = {beta_abs}"
        )));
    }
    Ok(())
}

/// Size of a maximum clique of a small symmetric relation.
fn max_clique(adj: &[Vec<bool>]) -> usize {
    fn grow(adj: &[Vec<bool>], size: usize, cand: &[usize], best: &mut usize) {
        if size + cand.len() <= *best {
            return;
        }
        if cand.is_empty() {
            *best = size;
            return;
        }
        for (k, &v) in cand.iter().enumerate() {
            if size + cand.len() - k <= *best {
                return;
            }
            let next: Vec<usize> = cand[k + 1..].iter().copied().filter(|&w| adj[v][w]).collect();
            grow(adj, size + 1, &next, best);
        }
    }
    let all: Vec<usize> = (0..adj.len()).collect();
    let mut best = 0;
    grow(adj, 0, &all, &mut best);
    best
}

/// Diameter of a vertex set whose pairwise distances are at most `bound`.
/// Exact up to [`EXACT_SLICE_LIMIT`] vertices; above that, a double sweep
/// followed by exact eccentricities of the 8 most extreme vertices, which
/// gives a lower bound within a factor 2.
fn set_diameter(map: &PlanarMap, scratch: &mut BfsScratch, set: &[u32], bound: u32) -> u32 {
    if set.len() < 2 {
        return 0;
    }
    let mut dists = Vec::new();
    let ecc = |scratch: &mut BfsScratch, x: u32, dists: &mut Vec<u32>| -> u32 {
        scratch.distances_to(map, x as usize, set, bound, dists);
        dists.iter().copied().max().unwrap_or(0)
    };
    if set.len() <= EXACT_SLICE_LIMIT {
        let mut best = 0;
        for (k, &x) in set.iter().enumerate() {
            if k + 1 == set.len() || best >= bound {
                break;
            }
            scratch.distances_to(map, x as usize, &set[k + 1..], bound, &mut dists);
            best = best.max(dists.iter().copied().max().unwrap_or(0));
        }
        return best;
    }
    ecc(scratch, set[0], &mut dists);
    let x1 = set[argmax(&dists)];
    let mut best = ecc(scratch, x1, &mut dists);
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(dists[k]));
    let extremes: Vec<u32> = order.iter().take(8).map(|&k| set[k]).collect();
    for x in extremes {
        best = best.max(ecc(scratch, x, &mut dists));
    }
    best
}

fn argmax(xs: &[u32]) -> usize {
    xs.iter().enumerate().max_by_key(|&(k, &x)| (x, std::cmp::Reverse(k))).map_or(0, |(k, _)| k)
}

/// Largest, over levels `ℓ`, diameter of the slice of vertices lying on some
/// geodesic between the source of `from_root` and the source of `from_a` at
/// distance `ℓ` from the former.
pub fn geodesic_spread(map: &PlanarMap, a: usize, from_root: &DistanceField, from_a: &DistanceField) -> u32 {
    spread_search(map, a, from_root, from_a, None, &mut BfsScratch::new(map.vertex_count()))
}

/// Whether [`geodesic_spread`] is at least `threshold`, stopping at the first
/// witness.
pub fn spread_at_least(
    map: &PlanarMap,
    scratch: &mut BfsScratch,
    a: usize,
    from_root: &DistanceField,
    from_a: &DistanceField,
    threshold: u32,
) -> bool {
    threshold == 0 || spread_search(map, a, from_root, from_a, Some(threshold), scratch) >= threshold
}

fn spread_search(
    map: &PlanarMap,
    a: usize,
    from_root: &DistanceField,
    from_a: &DistanceField,
    stop_at: Option<u32>,
    scratch: &mut BfsScratch,
) -> u32 {
    let total = from_root.dist[a];
    if total == 0 || total == UNREACHED {
        return 0;
    }
    let mut slices: Vec<Vec<u32>> = vec![Vec::new(); total as usize + 1];
    for v in 0..map.vertex_count() {
        let (x, y) = (from_root.dist[v], from_a.dist[v]);
        if x != UNREACHED && y != UNREACHED && x + y == total {
            slices[x as usize].push(v as u32);
        }
    }
    // middle levels first: they allow the largest diameters
    let mut levels: Vec<u32> = (1..total).collect();
    levels.sort_by_key(|&l| std::cmp::Reverse(l.min(total - l)));
    let mut best = 0;
    for l in levels {
        let bound = 2 * l.min(total - l);
        if bound <= best {
            break;
        }
        let slice = &slices[l as usize];
        if slice.len() < 2 {
            continue;
        }
        // same-level vertices are at even distance
        best = best.max(2);
        if stop_at.is_some_and(|t| best >= t) {
            return best;
        }
        if bound > best {
            best = best.max(set_diameter(map, scratch, slice, bound));
        }
        if stop_at.is_some_and(|t| best >= t) {
            return best;
        }
    }
    best
}

/// Every geodesic from `from` to `to`, by walking the shortest-path DAG.
/// Exponential in general; intended as an oracle on small maps.
pub fn all_geodesics(map: &PlanarMap, from: usize, to: usize) -> Result<Vec<GeodesicPath>> {
    let to_field = bfs(map, to);
    let total = to_field.dist[from];
    if total == UNREACHED {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut stack: Vec<Vec<u32>> = vec![vec![from as u32]];
    while let Some(path) = stack.pop() {
        let v = *path.last().unwrap() as usize;
        if v == to {
            out.push(GeodesicPath(path));
            if out.len() > GEODESIC_ENUMERATION_CAP {
                return Err(Error::CapExceeded {
                    estimate: out.len() as u128,
                    cap: GEODESIC_ENUMERATION_CAP as u128,
                });
            }
            continue;
        }
        let mut nexts: Vec<u32> = map
            .neighbours(v)
            .iter()
            .copied()
            .filter(|&w| to_field.dist[w as usize] + 1 == to_field.dist[v])
            .collect();
        nexts.sort_unstable();
        nexts.dedup();
        for &w in nexts.iter().rev() {
            let mut p = path.clone();
            p.push(w);
            stack.push(p);
        }
    }
    Ok(out)
}

/// One row of a [`GeodesicReport`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeodesicRecord {
    pub vertex: u32,
    pub dist: u32,
    pub spread: u32,
    pub mult_delta: usize,
    pub confluence: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GeodesicReport {
    pub records: Vec<GeodesicRecord>,
}

impl GeodesicReport {
    pub const CSV_HEADER: &'static str = "vertex,dist,spread,mult_delta,confluence";

    /// Statistics for each query vertex (∂ gets spread 0 and multiplicity 0).
    pub fn compute(
        enc: &ContourEncoding,
        map: &PlanarMap,
        vertices: &[u32],
        delta_abs: u32,
        chi_abs: u32,
        beta_abs: u32,
    ) -> Result<Self> {
        check_confluence_params(chi_abs, beta_abs)?;
        let geo = Geodesy::new(enc, map);
        let from_root = bfs(map, ROOT_VERTEX as usize);
        let mut scratch = BfsScratch::new(map.vertex_count());
        let mut records = Vec::with_capacity(vertices.len());
        for &a in vertices {
            let a = a as usize;
            if a >= map.vertex_count() {
                return Err(Error::IndexOutOfRange {
                    index: a,
                    max: map.vertex_count() - 1,
                });
            }
            let from_a = bfs(map, a);
            let (mult_delta, confluence) = if a == ROOT_VERTEX as usize {
                (0, None)
            } else {
                (
                    geo.corner_multiplicity(&mut scratch, a, delta_abs)?,
                    geo.vertex_confluence(&mut scratch, a, chi_abs, beta_abs)?,
                )
            };
            records.push(GeodesicRecord {
                vertex: a as u32,
                dist: from_root.dist[a],
                spread: spread_search(map, a, &from_root, &from_a, None, &mut scratch),
                mult_delta,
                confluence,
            });
        }
        Ok(GeodesicReport { records })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let conf = r.confluence.map(|c| c.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{},{}\n", r.vertex, r.dist, r.spread, r.mult_delta, conf));
        }
        s
    }
}
