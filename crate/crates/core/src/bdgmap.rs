//! Mobile to 2p-angulation construction via the successor rule on corners.
//!
//! Vertex 0 is the extra vertex ∂; the white vertex of white rank `r` becomes
//! vertex `r + 1`. Edge `i` is generated by corner `i` and is stored as
//! `[corner vertex, target]`. Multi-edges are kept.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::geodesy;
use crate::mobile::{contour, ContourEncoding, Mobile};
use crate::{Error, Result};

/// Id of the extra vertex ∂.
pub const ROOT_VERTEX: u32 = 0;

const BINARY_MAGIC: &[u8; 5] = b"BDGM1";

/// Returned by [`successor`] for corners with label 1, whose edge goes to ∂.
pub fn sentinel_root(enc: &ContourEncoding) -> usize {
    enc.last() + 1
}

/// Successor of corner `i`: the first later corner whose label is one less,
/// or [`sentinel_root`] when `Λ_i = 1`.
pub fn successor(enc: &ContourEncoding, i: usize) -> Result<usize> {
    if i >= enc.last() {
        return Err(Error::IndexOutOfRange {
            index: i,
            max: enc.last().saturating_sub(1),
        });
    }
    let target = enc.labels[i] - 1;
    if target == 0 {
        return Ok(sentinel_root(enc));
    }
    (i + 1..=enc.last())
        .find(|&j| enc.labels[j] == target)
        .ok_or_else(|| Error::InvalidEncoding(format!("corner {i} has no successor")))
}

/// Successors of all corners `0..pn`, in one right-to-left pass.
pub fn successors(enc: &ContourEncoding) -> Vec<u32> {
    let last = enc.last();
    let sentinel = sentinel_root(enc) as u32;
    let max_label = enc.labels.iter().copied().max().unwrap_or(1).max(1) as usize;
    let mut last_seen = vec![u32::MAX; max_label + 1];
    last_seen[enc.labels[last] as usize] = last as u32;
    let mut out = vec![0u32; last];
    for i in (0..last).rev() {
        let l = enc.labels[i] as usize;
        out[i] = if l == 1 { sentinel } else { last_seen[l - 1] };
        debug_assert_ne!(out[i], u32::MAX, "valid encodings always have a successor");
        last_seen[l] = i as u32;
    }
    out
}

/// An edge together with a direction bit. Unreversed, it points from
/// `edges[edge][0]` to `edges[edge][1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrientedEdge {
    pub edge: u32,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MapFile", into = "MapFile")]
pub struct PlanarMap {
    p: usize,
    n: usize,
    vertex_count: usize,
    edges: Vec<[u32; 2]>,
    root: OrientedEdge,
    adj_offsets: Vec<u32>,
    adj: Vec<u32>,
}

impl PlanarMap {
    /// Assembles a map from raw parts; vertex ids must be below `vertex_count`.
    pub fn from_edges(p: usize, n: usize, vertex_count: usize, edges: Vec<[u32; 2]>, root: OrientedEdge) -> Result<Self> {
        if let Some(e) = edges.iter().find(|e| e.iter().any(|&v| v as usize >= vertex_count)) {
            return Err(Error::InvalidMap(format!("edge {e:?} uses a vertex outside 0..{vertex_count}")));
        }
        if root.edge as usize >= edges.len() {
            return Err(Error::InvalidMap(format!("root edge {} does not exist", root.edge)));
        }
        let mut deg = vec![0u32; vertex_count + 1];
        for &[u, v] in &edges {
            deg[u as usize + 1] += 1;
            deg[v as usize + 1] += 1;
        }
        for i in 0..vertex_count {
            deg[i + 1] += deg[i];
        }
        let adj_offsets = deg;
        let mut fill = adj_offsets.clone();
        let mut adj = vec![0u32; 2 * edges.len()];
        for &[u, v] in &edges {
            adj[fill[u as usize] as usize] = v;
            fill[u as usize] += 1;
            adj[fill[v as usize] as usize] = u;
            fill[v as usize] += 1;
        }
        Ok(PlanarMap {
            p,
            n,
            vertex_count,
            edges,
            root,
            adj_offsets,
            adj,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge list indexed by generating corner.
    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    /// Neighbours of `v`, with multiplicity.
    pub fn neighbours(&self, v: usize) -> &[u32] {
        &self.adj[self.adj_offsets[v] as usize..self.adj_offsets[v + 1] as usize]
    }

    pub fn root(&self) -> OrientedEdge {
        self.root
    }

    /// Tail and head of an oriented edge.
    pub fn endpoints(&self, e: OrientedEdge) -> [u32; 2] {
        let [u, v] = self.edges[e.edge as usize];
        if e.reversed {
            [v, u]
        } else {
            [u, v]
        }
    }

    pub fn root_vertex(&self) -> u32 {
        self.endpoints(self.root)[0]
    }

    /// The first edge joining `u` to `v`, oriented from `u`.
    pub fn find_edge(&self, u: u32, v: u32) -> Option<OrientedEdge> {
        self.edges.iter().enumerate().find_map(|(i, &[a, b])| {
            if a == u && b == v {
                Some(OrientedEdge { edge: i as u32, reversed: false })
            } else if a == v && b == u {
                Some(OrientedEdge { edge: i as u32, reversed: true })
            } else {
                None
            }
        })
    }

    /// All `2|E|` oriented edges.
    pub fn oriented_edges(&self) -> impl Iterator<Item = OrientedEdge> + '_ {
        (0..self.edges.len() as u32)
            .flat_map(|edge| [false, true].map(|reversed| OrientedEdge { edge, reversed }))
    }

    /// The same map rooted at `e`.
    pub fn reroot(&self, e: OrientedEdge) -> Result<PlanarMap> {
        if e.edge as usize >= self.edges.len() {
            return Err(Error::InvalidMap(format!("edge {} does not exist", e.edge)));
        }
        let mut out = self.clone();
        out.root = e;
        Ok(out)
    }

    /// Re-roots at the edge from `u` to `v`.
    pub fn reroot_at(&self, u: u32, v: u32) -> Result<PlanarMap> {
        let e = self.find_edge(u, v).ok_or(Error::NotAnEdge(u, v))?;
        self.reroot(e)
    }

    /// Compact little-endian encoding: magic, then `p, n, vertex count, edge
    /// count, root tail, root head` and the edge endpoints, all as `u32`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        let [ru, rv] = self.endpoints(self.root);
        let header = [
            self.p as u32,
            self.n as u32,
            self.vertex_count as u32,
            self.edges.len() as u32,
            ru,
            rv,
        ];
        let mut buf = Vec::with_capacity(4 * (header.len() + 2 * self.edges.len()));
        for x in header.iter().chain(self.edges.iter().flatten()) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<PlanarMap> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("missing BDGM1 header".into()));
        }
        let mut word = || -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let p = word()? as usize;
        let n = word()? as usize;
        let vertex_count = word()? as usize;
        let edge_count = word()? as usize;
        let root = [word()?, word()?];
        let mut edges = Vec::with_capacity(edge_count.min(1 << 24));
        for _ in 0..edge_count {
            edges.push([word()?, word()?]);
        }
        Self::with_root_pair(p, n, vertex_count, edges, root)
    }

    fn with_root_pair(p: usize, n: usize, vertex_count: usize, edges: Vec<[u32; 2]>, root: [u32; 2]) -> Result<Self> {
        let placeholder = OrientedEdge { edge: 0, reversed: false };
        let mut map = Self::from_edges(p, n, vertex_count, edges, placeholder)?;
        map.root = map.find_edge(root[0], root[1]).ok_or(Error::NotAnEdge(root[0], root[1]))?;
        Ok(map)
    }
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    p: usize,
    n: usize,
    edges: Vec<[u32; 2]>,
    root: [u32; 2],
}

impl TryFrom<MapFile> for PlanarMap {
    type Error = Error;

    fn try_from(f: MapFile) -> Result<Self> {
        if f.p < 2 {
            return Err(Error::Parameter(format!("p must be at least 2, got {}", f.p)));
        }
        let vertex_count = (f.p - 1) * f.n + 2;
        PlanarMap::with_root_pair(f.p, f.n, vertex_count, f.edges, f.root)
    }
}

impl From<PlanarMap> for MapFile {
    fn from(m: PlanarMap) -> Self {
        let root = m.endpoints(m.root);
        MapFile {
            p: m.p,
            n: m.n,
            edges: m.edges,
            root,
        }
    }
}

/// Builds the rooted 2p-angulation coded by a mobile.
pub fn build_map(m: &Mobile) -> PlanarMap {
    build_map_from_encoding(&contour(m))
}

/// Builds the map directly from a contour encoding. The root edge is edge 0
/// oriented from ∂ to the mobile root.
pub fn build_map_from_encoding(enc: &ContourEncoding) -> PlanarMap {
    let succ = successors(enc);
    let sentinel = sentinel_root(enc) as u32;
    let edges: Vec<[u32; 2]> = succ
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let target = if j == sentinel {
                ROOT_VERTEX
            } else {
                enc.corner_vertex[j as usize] + 1
            };
            [enc.corner_vertex[i] + 1, target]
        })
        .collect();
    let root = OrientedEdge { edge: 0, reversed: true };
    PlanarMap::from_edges(enc.p, enc.n, enc.white_count() + 1, edges, root).expect("ids are in range")
}

/// Outcome of [`validate`]: one line per failed check, each naming a witness.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.failures.is_empty() {
            return writeln!(f, "ok");
        }
        for line in &self.failures {
            writeln!(f, "FAIL {line}")?;
        }
        Ok(())
    }
}

/// Checks that `map` is the 2p-angulation of `m`: vertex and edge counts,
/// root edge, no loops, connectivity, bipartiteness, and graph distance from
/// ∂ equal to the label of every white vertex.
pub fn validate(map: &PlanarMap, m: &Mobile) -> ValidationReport {
    let mut failures = Vec::new();
    let (p, n) = (m.p(), m.n());
    if map.vertex_count() != (p - 1) * n + 2 {
        failures.push(format!("vertex count {} != (p-1)n+2 = {}", map.vertex_count(), (p - 1) * n + 2));
    }
    if map.edge_count() != p * n {
        failures.push(format!("edge count {} != pn = {}", map.edge_count(), p * n));
    }
    if map.edges().first().map(|e| sorted(*e)) != Some([ROOT_VERTEX, 1]) {
        failures.push(format!("edge 0 is {:?}, expected to join ∂ and the mobile root", map.edges().first()));
    }
    if let Some((i, e)) = map.edges().iter().enumerate().find(|(_, e)| e[0] == e[1]) {
        failures.push(format!("edge {i} is a loop at vertex {}", e[0]));
    }
    let field = geodesy::bfs(map, ROOT_VERTEX as usize);
    if let Some(v) = field.dist.iter().position(|&d| d == geodesy::UNREACHED) {
        failures.push(format!("vertex {v} is not connected to ∂"));
    } else {
        if let Some((i, e)) = map
            .edges()
            .iter()
            .enumerate()
            .find(|(_, e)| field.dist[e[0] as usize] == field.dist[e[1] as usize])
        {
            failures.push(format!("edge {i} = {e:?} joins two vertices at equal distance, so the map is not bipartite"));
        }
        for (r, &label) in m.labels().iter().enumerate() {
            let d = field.dist.get(r + 1).copied();
            if d != Some(label as u32) {
                failures.push(format!("vertex {} has distance {d:?} from ∂ but label {label}", r + 1));
                break;
            }
        }
    }
    ValidationReport { failures }
}

fn sorted([a, b]: [u32; 2]) -> [u32; 2] {
    [a.min(b), a.max(b)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobile::{enumerate_mobiles, sample_mobile, PTree, SamplerMode, NO_PARENT};
    use crate::rng::substream;
    use std::collections::HashMap;

    fn chain(child_label: i32) -> Mobile {
        Mobile::new(PTree::from_parents(2, vec![NO_PARENT, 0, 1]).unwrap(), vec![1, child_label]).unwrap()
    }

    #[test]
    fn successor_rule() {
        let enc = contour(&chain(2));
        assert_eq!(successor(&enc, 1).unwrap(), 2);
        assert_eq!(successor(&enc, 0).unwrap(), sentinel_root(&enc));
        assert_eq!(sentinel_root(&enc), 3);
        assert!(successor(&enc, 2).is_err());
    }

    #[test]
    fn batch_successors_match_direct_search() {
        let mut rng = substream(21, 0);
        for &(n, p) in &[(50, 2), (40, 3), (30, 4)] {
            let m = sample_mobile(n, p, &mut rng, SamplerMode::ExactRooted).unwrap();
            let enc = contour(&m);
            let all = successors(&enc);
            for i in 0..enc.last() {
                let s = successor(&enc, i).unwrap();
                assert_eq!(all[i] as usize, s);
                if enc.labels[i + 1] == enc.labels[i] - 1 {
                    assert_eq!(s, i + 1);
                }
            }
        }
    }

    #[test]
    fn n1_maps() {
        let path = build_map(&chain(2));
        assert_eq!(path.vertex_count(), 3);
        assert_eq!(path.edges(), &[[1, 0], [2, 1]]);
        assert_eq!(path.endpoints(path.root()), [0, 1]);
        let star = build_map(&chain(1));
        assert_eq!(star.edges(), &[[1, 0], [2, 0]]);
        assert!(validate(&path, &chain(2)).is_ok());
        assert!(validate(&star, &chain(1)).is_ok());
    }

    #[test]
    fn sampled_maps_validate() {
        let mut rng = substream(22, 0);
        for &(n, p) in &[(1, 2), (10, 2), (100, 2), (10, 3), (100, 3), (50, 4), (20, 6)] {
            for mode in [SamplerMode::ExactRooted, SamplerMode::Pointed] {
                let m = sample_mobile(n, p, &mut rng, mode).unwrap();
                let map = build_map(&m);
                let report = validate(&map, &m);
                assert!(report.is_ok(), "{report}");
            }
        }
    }

    #[test]
    fn validate_reports_witnesses() {
        let m = chain(2);
        let mut map = build_map(&m);
        map = PlanarMap::from_edges(2, 1, 3, vec![[1, 0], [2, 0]], map.root()).unwrap();
        let report = validate(&map, &m);
        assert!(!report.is_ok());
        assert!(report.failures[0].contains("vertex 2"), "{report}");
    }

    #[test]
    fn reroot_keeps_graph() {
        let mut rng = substream(23, 0);
        let m = sample_mobile(30, 2, &mut rng, SamplerMode::ExactRooted).unwrap();
        let map = build_map(&m);
        assert_eq!(map.reroot(map.root()).unwrap(), map);
        let e = OrientedEdge { edge: 7, reversed: false };
        let other = map.reroot(e).unwrap();
        assert_eq!(other.edges(), map.edges());
        assert_eq!(other.endpoints(other.root()), map.edges()[7]);
        for v in [0, 5, 17] {
            assert_eq!(geodesy::bfs(&other, v).dist, geodesy::bfs(&map, v).dist);
        }
        assert!(map.reroot(OrientedEdge { edge: 60, reversed: false }).is_err());
        assert!(matches!(map.reroot_at(0, 0), Err(Error::NotAnEdge(0, 0))));
    }

    #[test]
    fn json_and_binary_roundtrip() {
        let mut rng = substream(24, 0);
        let m = sample_mobile(40, 3, &mut rng, SamplerMode::ExactRooted).unwrap();
        let map = build_map(&m).reroot(OrientedEdge { edge: 9, reversed: true }).unwrap();
        let json = serde_json::to_string(&map).unwrap();
        let back: PlanarMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back.edges(), map.edges());
        assert_eq!(back.endpoints(back.root()), map.endpoints(map.root()));
        let mut bytes = Vec::new();
        map.write_binary(&mut bytes).unwrap();
        assert_eq!(&bytes[..5], b"BDGM1");
        assert_eq!(bytes.len(), 5 + 4 * (6 + 2 * map.edge_count()));
        let back = PlanarMap::read_binary(&bytes[..]).unwrap();
        assert_eq!(back.edges(), map.edges());
        assert!(PlanarMap::read_binary(&b"BDGM2"[..]).is_err());
        let small = serde_json::to_string(&build_map(&chain(2))).unwrap();
        assert_eq!(small, r#"{"p":2,"n":1,"edges":[[1,0],[2,1]],"root":[0,1]}"#);
    }

    #[test]
    fn build_is_deterministic() {
        let mut rng = substream(25, 0);
        let m = sample_mobile(200, 2, &mut rng, SamplerMode::ExactRooted).unwrap();
        assert_eq!(build_map(&m), build_map(&m.clone()));
    }

    /// Canonical form of a small rooted multigraph: root tail becomes 0, root
    /// head becomes 1, the other vertices are relabelled in the way that
    /// minimises the sorted edge list.
    pub(crate) fn canonical_rooted(map: &PlanarMap) -> Vec<[u32; 2]> {
        let [t, h] = map.endpoints(map.root());
        let rest: Vec<u32> = (0..map.vertex_count() as u32).filter(|&v| v != t && v != h).collect();
        let mut best: Option<Vec<[u32; 2]>> = None;
        let mut perm = rest.clone();
        permute(&mut perm, 0, &mut |order| {
            let mut relabel = vec![0u32; map.vertex_count()];
            relabel[t as usize] = 0;
            relabel[h as usize] = 1;
            for (k, &v) in order.iter().enumerate() {
                relabel[v as usize] = k as u32 + 2;
            }
            let mut es: Vec<[u32; 2]> = map
                .edges()
                .iter()
                .map(|&[a, b]| sorted([relabel[a as usize], relabel[b as usize]]))
                .collect();
            es.sort_unstable();
            if best.as_ref().is_none_or(|b| es < *b) {
                best = Some(es);
            }
        });
        best.unwrap()
    }

    fn permute(v: &mut Vec<u32>, k: usize, f: &mut dyn FnMut(&[u32])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn reroot_pushforward_is_uniform_for_two_faces() {
        // As multigraphs the 9 rooted quadrangulations with 2 faces collapse
        // into fewer classes; rerooting each at all 8 oriented edges must hit
        // each class exactly 8 times as often as the uniform law does.
        let maps: Vec<PlanarMap> = enumerate_mobiles(2, 2).unwrap().iter().map(build_map).collect();
        assert_eq!(maps.len(), 9);
        let mut base: HashMap<Vec<[u32; 2]>, usize> = HashMap::new();
        let mut pushed: HashMap<Vec<[u32; 2]>, usize> = HashMap::new();
        for map in &maps {
            *base.entry(canonical_rooted(map)).or_default() += 1;
            for e in map.oriented_edges() {
                *pushed.entry(canonical_rooted(&map.reroot(e).unwrap())).or_default() += 1;
            }
        }
        assert_eq!(base.len(), pushed.len());
        for (class, &count) in &base {
            assert_eq!(pushed[class], 8 * count, "class {class:?}");
        }
    }
}
