//! Graphs, the seeded G(n, p) generator, and the four problem objectives.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest vertex count a [`ProblemInstance`] accepts. States are packed
/// into a `u64` mask and `2^n` must stay representable.
pub const MAX_INSTANCE_VERTICES: usize = 63;

/// Undirected simple graph with 0-indexed vertices.
///
/// Edges are stored as `(u, v)` with `u < v`, sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    seed: Option<u64>,
    edge_prob: Option<f64>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("graph needs at least one vertex"));
        }
        let mut out = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::input(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::input(format!("self-loop at vertex {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            out.push((u as u32, v as u32));
        }
        out.sort_unstable();
        if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::input(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        Ok(Graph { n, edges: out, seed: None, edge_prob: None })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Graph::new(n, std::iter::empty())
    }

    pub fn complete(n: usize) -> Result<Self> {
        Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    /// Erdős–Rényi G(n, p) graph.
    ///
    /// The stream is ChaCha8 seeded with `ChaCha8Rng::seed_from_u64(seed)`.
    /// Candidate edges are visited in lexicographic `(u, v)`, `u < v` order and
    /// each consumes exactly one `next_u64` draw `w`; the edge is kept iff
    /// `(w >> 11) * 2^-53 < edge_prob`. The result is identical on every
    /// platform.
    pub fn erdos_renyi(n: usize, edge_prob: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("graph needs at least one vertex"));
        }
        if !(0.0..=1.0).contains(&edge_prob) {
            return Err(Error::input(format!("edge probability {edge_prob} outside [0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if unit_draw(rng.next_u64()) < edge_prob {
                    edges.push((u as u32, v as u32));
                }
            }
        }
        Ok(Graph { n, edges, seed: Some(seed), edge_prob: Some(edge_prob) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn edge_prob(&self) -> Option<f64> {
        self.edge_prob
    }

    /// Neighbour sets as bitmasks. Requires `n <= 64`.
    pub fn adjacency_masks(&self) -> Result<Vec<u64>> {
        if self.n > 64 {
            return Err(Error::input(format!("adjacency masks need n <= 64, got {}", self.n)));
        }
        let mut adj = vec![0u64; self.n];
        for &(u, v) in &self.edges {
            adj[u as usize] |= 1 << v;
            adj[v as usize] |= 1 << u;
        }
        Ok(adj)
    }

    /// Edge-list text: `"n m"` then one `"u v"` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.m());
        for &(u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::input("empty edge list"))?;
        let (n, m) = parse_pair(header)?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            edges.push(parse_pair(line)?);
        }
        if edges.len() != m {
            return Err(Error::input(format!("header declares {m} edges, found {}", edges.len())));
        }
        Graph::new(n, edges)
    }

    pub fn read_edge_list(path: &std::path::Path) -> Result<Self> {
        Graph::parse_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn write_edge_list(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

fn unit_draw(w: u64) -> f64 {
    (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::input(format!("expected two integers in {line:?}")))?
            .parse()
            .map_err(|e| Error::input(format!("bad integer in {line:?}: {e}")))
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(Error::input(format!("trailing tokens in {line:?}")));
    }
    Ok(pair)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    MaxCut,
    KVertexCover,
    KDensestSubgraph,
    MaxBisection,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::KDensestSubgraph,
        ProblemKind::KVertexCover,
        ProblemKind::MaxCut,
        ProblemKind::MaxBisection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::MaxCut => "maxcut",
            ProblemKind::KVertexCover => "kvc",
            ProblemKind::KDensestSubgraph => "kds",
            ProblemKind::MaxBisection => "bisection",
        }
    }

    pub fn is_constrained(self) -> bool {
        self != ProblemKind::MaxCut
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "maxcut" | "cut" => Ok(ProblemKind::MaxCut),
            "kvc" | "kvertexcover" | "vertexcover" => Ok(ProblemKind::KVertexCover),
            "kds" | "kdensestsubgraph" | "densestsubgraph" => Ok(ProblemKind::KDensestSubgraph),
            "bisection" | "maxbisection" => Ok(ProblemKind::MaxBisection),
            _ => Err(Error::input(format!("unknown problem kind {s:?}"))),
        }
    }
}

/// An n-bit assignment. Character `i` of the textual form is vertex `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    mask: u64,
}

impl BitString {
    pub fn from_mask(len: usize, mask: u64) -> Result<Self> {
        if len > 64 || (len < 64 && mask >> len != 0) {
            return Err(Error::input(format!("mask {mask:#x} does not fit in {len} bits")));
        }
        Ok(BitString { len, mask })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn weight(&self) -> u32 {
        self.mask.count_ones()
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > 64 {
            return Err(Error::input("bit strings longer than 64 are not supported"));
        }
        let mut mask = 0u64;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => mask |= 1 << i,
                _ => return Err(Error::input(format!("invalid bit {ch:?} in {s:?}"))),
            }
        }
        Ok(BitString { len: s.len(), mask })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.mask >> i & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A graph together with a problem kind and its cardinality constraint.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    graph: Graph,
    kind: ProblemKind,
    k: Option<usize>,
    adj: Vec<u64>,
}

impl ProblemInstance {
    /// `k` is ignored for MaxCut and forced to `n / 2` for MaxBisection.
    pub fn new(graph: Graph, kind: ProblemKind, k: Option<usize>) -> Result<Self> {
        let n = graph.n();
        if n > MAX_INSTANCE_VERTICES {
            return Err(Error::input(format!(
                "instances support at most {MAX_INSTANCE_VERTICES} vertices, got {n}"
            )));
        }
        let k = match kind {
            ProblemKind::MaxCut => None,
            ProblemKind::MaxBisection => {
                if n % 2 != 0 {
                    return Err(Error::input(format!("bisection needs even n, got {n}")));
                }
                if let Some(k) = k.filter(|&k| k != n / 2) {
                    return Err(Error::input(format!("bisection forces k = {}, got {k}", n / 2)));
                }
                Some(n / 2)
            }
            _ => Some(k.ok_or_else(|| Error::input(format!("{kind} requires k")))?),
        };
        if let Some(k) = k {
            if k == 0 || k >= n {
                return Err(Error::input(format!("k must satisfy 0 < k < n, got k = {k}, n = {n}")));
            }
        }
        let adj = graph.adjacency_masks()?;
        Ok(ProblemInstance { graph, kind, k, adj })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn k(&self) -> Option<usize> {
        self.k
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn m(&self) -> usize {
        self.graph.m()
    }

    pub(crate) fn adjacency(&self) -> &[u64] {
        &self.adj
    }

    /// Size of the feasible set: `2^n` or `C(n, k)`.
    pub fn feasible_count(&self) -> u128 {
        match self.k {
            None => 1u128 << self.n(),
            Some(k) => binomial(self.n() as u64, k as u64),
        }
    }

    pub fn objective(&self, x: &BitString) -> Result<u32> {
        self.check_len(x)?;
        Ok(self.objective_mask(x.mask))
    }

    pub fn is_feasible(&self, x: &BitString) -> Result<bool> {
        self.check_len(x)?;
        Ok(self.is_feasible_mask(x.mask))
    }

    /// Objective by direct iteration over the edge list.
    pub fn objective_mask(&self, x: u64) -> u32 {
        let sel = |v: u32| x >> v & 1 == 1;
        let hit = |&(u, v): &(u32, u32)| match self.kind {
            ProblemKind::KDensestSubgraph => sel(u) && sel(v),
            ProblemKind::KVertexCover => sel(u) || sel(v),
            ProblemKind::MaxCut | ProblemKind::MaxBisection => sel(u) != sel(v),
        };
        self.graph.edges.iter().filter(|e| hit(e)).count() as u32
    }

    pub fn is_feasible_mask(&self, x: u64) -> bool {
        match self.k {
            None => true,
            Some(k) => x.count_ones() as usize == k,
        }
    }

    fn check_len(&self, x: &BitString) -> Result<()> {
        if x.len != self.n() {
            return Err(Error::input(format!(
                "bit string has length {}, instance has n = {}",
                x.len,
                self.n()
            )));
        }
        Ok(())
    }
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

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> Graph {
        Graph::complete(3).unwrap()
    }

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn er_extremes() {
        let g = Graph::erdos_renyi(3, 1.0, 17).unwrap();
        assert_eq!(g.m(), 3);
        assert_eq!(g.edges(), k3().edges());
        assert_eq!(Graph::erdos_renyi(5, 0.0, 17).unwrap().m(), 0);
        assert_eq!(Graph::erdos_renyi(1, 0.5, 3).unwrap().m(), 0);
        assert!(Graph::erdos_renyi(4, 1.5, 0).is_err());
    }

    #[test]
    fn er_edge_count_statistics() {
        let samples: Vec<f64> = (0..1000u64)
            .map(|s| Graph::erdos_renyi(20, 0.25, s).unwrap().m() as f64)
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        // standard error of the mean over 1000 draws of Binomial(190, 0.25)
        let se = (190.0f64 * 0.25 * 0.75 / 1000.0).sqrt();
        assert!((mean - 47.5).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn er_is_deterministic() {
        let a = Graph::erdos_renyi(30, 0.4, 99).unwrap();
        let b = Graph::erdos_renyi(30, 0.4, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.edges(), Graph::erdos_renyi(30, 0.4, 100).unwrap().edges());
    }

    #[test]
    fn k3_objectives() {
        let cut = ProblemInstance::new(k3(), ProblemKind::MaxCut, None).unwrap();
        assert_eq!(cut.objective(&bits("110")).unwrap(), 2);
        let ds = ProblemInstance::new(k3(), ProblemKind::KDensestSubgraph, Some(2)).unwrap();
        assert_eq!(ds.objective(&bits("110")).unwrap(), 1);
        let vc = ProblemInstance::new(k3(), ProblemKind::KVertexCover, Some(2)).unwrap();
        assert_eq!(vc.objective(&bits("110")).unwrap(), 3);
    }

    #[test]
    fn empty_graph_objective_is_zero() {
        for kind in ProblemKind::ALL {
            let inst = ProblemInstance::new(Graph::empty(6).unwrap(), kind, Some(3)).unwrap();
            for x in 0..64u64 {
                assert_eq!(inst.objective_mask(x), 0);
            }
        }
    }

    #[test]
    fn feasibility() {
        let cut = ProblemInstance::new(k3(), ProblemKind::MaxCut, None).unwrap();
        assert!(cut.is_feasible(&bits("101")).unwrap());
        let ds = ProblemInstance::new(k3(), ProblemKind::KDensestSubgraph, Some(2)).unwrap();
        assert!(ds.is_feasible(&bits("110")).unwrap());
        assert!(!ds.is_feasible(&bits("111")).unwrap());
        let bis = ProblemInstance::new(Graph::empty(4).unwrap(), ProblemKind::MaxBisection, None)
            .unwrap();
        assert!(bis.is_feasible(&bits("0101")).unwrap());
    }

    #[test]
    fn length_mismatch_is_an_input_error() {
        let cut = ProblemInstance::new(k3(), ProblemKind::MaxCut, None).unwrap();
        assert!(matches!(cut.objective(&bits("11")), Err(Error::Input(_))));
        assert!(matches!(cut.is_feasible(&bits("1100")), Err(Error::Input(_))));
    }

    #[test]
    fn constraint_validation() {
        let g = || Graph::empty(5).unwrap();
        assert!(ProblemInstance::new(g(), ProblemKind::KDensestSubgraph, None).is_err());
        assert!(ProblemInstance::new(g(), ProblemKind::KDensestSubgraph, Some(0)).is_err());
        assert!(ProblemInstance::new(g(), ProblemKind::KVertexCover, Some(5)).is_err());
        assert!(ProblemInstance::new(g(), ProblemKind::MaxBisection, None).is_err());
        let bis = ProblemInstance::new(Graph::empty(6).unwrap(), ProblemKind::MaxBisection, None)
            .unwrap();
        assert_eq!(bis.k(), Some(3));
    }

    #[test]
    fn graph_validation() {
        assert!(Graph::new(3, [(0, 0)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
        assert!(Graph::new(0, []).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::erdos_renyi(12, 0.5, 4).unwrap();
        let text = g.to_edge_list();
        let back = Graph::parse_edge_list(&text).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.to_edge_list(), text);
        assert!(Graph::parse_edge_list("3 2\n0 1\n").is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(28, 18), 13_123_110);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(5, 7), 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn instance(kind: ProblemKind) -> impl Strategy<Value = ProblemInstance> {
            (2usize..10, 0.0f64..=1.0, any::<u64>()).prop_map(move |(half, p, seed)| {
                let n = 2 * half;
                let g = Graph::erdos_renyi(n, p, seed).unwrap();
                ProblemInstance::new(g, kind, Some(half)).unwrap()
            })
        }

        proptest! {
            #[test]
            fn maxcut_complement_symmetric(inst in instance(ProblemKind::MaxCut), x in any::<u64>()) {
                let full = (1u64 << inst.n()) - 1;
                let x = x & full;
                prop_assert_eq!(inst.objective_mask(x), inst.objective_mask(!x & full));
            }

            #[test]
            fn ds_below_vc_below_m(inst in instance(ProblemKind::KDensestSubgraph), x in any::<u64>()) {
                let vc = ProblemInstance::new(inst.graph().clone(), ProblemKind::KVertexCover, inst.k()).unwrap();
                let x = x & ((1u64 << inst.n()) - 1);
                let ds = inst.objective_mask(x);
                let cover = vc.objective_mask(x);
                prop_assert!(ds <= cover);
                prop_assert!(cover as usize <= inst.m());
            }
        }
    }
}
