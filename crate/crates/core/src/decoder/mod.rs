//! Minimum-weight perfect matching decoding on the graph of a detector
//! error model, and an exhaustive oracle for small defect sets.
//!
//! Weights are quantised to integers (relative to the heaviest edge) so the
//! matching is exact and both decoders agree to the last bit.

mod blossom;

pub use blossom::{max_weight_matching, min_cost_matching};

use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

/// Integer resolution of the heaviest edge (up to a factor of two).
const WEIGHT_RESOLUTION: f64 = (1u64 << 24) as f64;
const INF: i64 = i64::MAX / 4;

/// Graphs up to this many detectors keep a full distance table.
const TABLE_LIMIT: usize = 2048;

/// Largest defect count accepted by [`brute_force_decode`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Detectors plus one virtual boundary node (index `num_detectors`), with
/// integer weights and an observable mask per edge.
#[derive(Clone, Debug)]
pub struct MatchingGraph {
    num_detectors: usize,
    /// CSR adjacency over `num_detectors + 1` nodes.
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<i64>,
    masks: Vec<u64>,
    /// Real weight of one integer unit.
    unit: f64,
    /// Distance from each detector to the boundary, and the observable
    /// mask along that path.
    boundary_dist: Vec<i64>,
    boundary_mask: Vec<u64>,
    /// Detector-to-detector distances and masks (boundary excluded), row
    /// major, for small graphs.
    table: Option<(Vec<i64>, Vec<u64>)>,
}

/// One edge for [`MatchingGraph::from_edges`]; `b == None` is the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedEdge {
    pub a: usize,
    pub b: Option<usize>,
    pub weight: f64,
    pub observables: u64,
}

/// Result of a decode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decoding {
    pub prediction: u64,
    pub weight: f64,
}

impl MatchingGraph {
    pub fn from_dem(dem: &DetectorErrorModel) -> Result<Self> {
        let mut edges = Vec::with_capacity(dem.edges.len());
        for e in &dem.edges {
            if !(e.probability > 0.0 && e.probability < 0.5) {
                return Err(Error::InvalidProbability(e.probability));
            }
            edges.push(WeightedEdge {
                a: e.a as usize,
                b: e.b.map(|b| b as usize),
                weight: e.weight(),
                observables: e.observables,
            });
        }
        Self::from_edges(dem.num_detectors, &edges)
    }

    /// Builds the graph. Parallel edges keep the lightest one (ties go to
    /// the smaller observable mask).
    pub fn from_edges(num_detectors: usize, edges: &[WeightedEdge]) -> Result<Self> {
        let n = num_detectors;
        let mut best: BTreeMap<(usize, usize), (f64, u64)> = BTreeMap::new();
        let mut wmax: f64 = 0.0;
        for e in edges {
            let b = e.b.unwrap_or(n);
            if e.a >= n || b > n || e.a == b {
                return Err(Error::InvalidSpec(format!("bad edge {} - {:?}", e.a, e.b)));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::InvalidSpec(format!("edge weight {} must be finite and positive", e.weight)));
            }
            wmax = wmax.max(e.weight);
            let key = (e.a.min(b), e.a.max(b));
            let cand = (e.weight, e.observables);
            best.entry(key)
                .and_modify(|cur| {
                    if cand.0 < cur.0 || (cand.0 == cur.0 && cand.1 < cur.1) {
                        *cur = cand;
                    }
                })
                .or_insert(cand);
        }
        // a power of two keeps simple weights exact
        let scale = if wmax > 0.0 { (WEIGHT_RESOLUTION / wmax).log2().floor().exp2() } else { 1.0 };
        let mut adj: Vec<Vec<(u32, i64, u64)>> = vec![Vec::new(); n + 1];
        for (&(a, b), &(w, m)) in &best {
            let wi = ((w * scale).round() as i64).max(1);
            adj[a].push((b as u32, wi, m));
            adj[b].push((a as u32, wi, m));
        }
        let mut offsets = Vec::with_capacity(n + 2);
        let (mut targets, mut weights, mut masks) = (Vec::new(), Vec::new(), Vec::new());
        offsets.push(0);
        for list in &mut adj {
            list.sort_unstable_by_key(|x| x.0);
            for &(t, w, m) in list.iter() {
                targets.push(t);
                weights.push(w);
                masks.push(m);
            }
            offsets.push(targets.len());
        }
        let mut g = MatchingGraph {
            num_detectors: n,
            offsets,
            targets,
            weights,
            masks,
            unit: 1.0 / scale,
            boundary_dist: Vec::new(),
            boundary_mask: Vec::new(),
            table: None,
        };
        let mut sp = ShortestPaths::new(n + 1);
        sp.run(&g, n, None, |_, _| true);
        g.boundary_dist = (0..n).map(|v| sp.dist_of(v)).collect();
        g.boundary_mask = (0..n).map(|v| sp.mask_of(v)).collect();
        if n <= TABLE_LIMIT {
            let mut dist = vec![INF; n * n];
            let mut mask = vec![0u64; n * n];
            for src in 0..n {
                sp.run(&g, src, Some(n), |_, _| true);
                for v in 0..n {
                    dist[src * n + v] = sp.dist_of(v);
                    mask[src * n + v] = sp.mask_of(v);
                }
            }
            g.table = Some((dist, mask));
        }
        Ok(g)
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn boundary(&self) -> usize {
        self.num_detectors
    }

    /// Real-valued weight of an integer path length.
    pub fn real_weight(&self, w: i64) -> f64 {
        w as f64 * self.unit
    }

    fn neighbours(&self, v: usize) -> impl Iterator<Item = (usize, i64, u64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        r.map(move |k| (self.targets[k] as usize, self.weights[k], self.masks[k]))
    }

    /// Edges as `(a, b, integer weight, mask)`, `b` possibly the boundary.
    pub fn edges(&self) -> Vec<(usize, usize, i64, u64)> {
        let mut out = Vec::new();
        for a in 0..=self.num_detectors {
            for (b, w, m) in self.neighbours(a) {
                if a < b {
                    out.push((a, b, w, m));
                }
            }
        }
        out
    }
}

/// Dijkstra scratch space reused across runs. Ties between equally short
/// paths go to the smaller predecessor index, so paths are deterministic.
struct ShortestPaths {
    dist: Vec<i64>,
    pred: Vec<usize>,
    mask: Vec<u64>,
    stamp: Vec<u32>,
    done: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<Reverse<(i64, usize)>>,
}

impl ShortestPaths {
    fn new(n: usize) -> Self {
        ShortestPaths {
            dist: vec![INF; n],
            pred: vec![usize::MAX; n],
            mask: vec![0; n],
            stamp: vec![0; n],
            done: vec![0; n],
            epoch: 0,
            heap: BinaryHeap::new(),
        }
    }

    fn dist_of(&self, v: usize) -> i64 {
        if self.stamp[v] == self.epoch {
            self.dist[v]
        } else {
            INF
        }
    }

    fn mask_of(&self, v: usize) -> u64 {
        if self.stamp[v] == self.epoch {
            self.mask[v]
        } else {
            0
        }
    }

    /// Runs from `src`, never expanding through `blocked`, and expanding a
    /// settled node only when `expand(node, dist)` allows it. Calls
    /// `settled` via the returned order.
    fn run<F: FnMut(usize, i64) -> bool>(
        &mut self,
        g: &MatchingGraph,
        src: usize,
        blocked: Option<usize>,
        mut expand: F,
    ) -> Vec<usize> {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.done.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let e = self.epoch;
        let mut order = Vec::new();
        self.heap.clear();
        self.stamp[src] = e;
        self.dist[src] = 0;
        self.pred[src] = usize::MAX;
        self.mask[src] = 0;
        self.heap.push(Reverse((0, src)));
        while let Some(Reverse((d, u))) = self.heap.pop() {
            if self.done[u] == e || d > self.dist[u] {
                continue;
            }
            self.done[u] = e;
            order.push(u);
            if Some(u) == blocked && u != src {
                continue;
            }
            if !expand(u, d) {
                continue;
            }
            for (v, w, m) in g.neighbours(u) {
                if self.done[v] == e {
                    continue;
                }
                let nd = d + w;
                let fresh = self.stamp[v] != e;
                if fresh || nd < self.dist[v] || (nd == self.dist[v] && u < self.pred[v]) {
                    if fresh || nd < self.dist[v] {
                        self.heap.push(Reverse((nd, v)));
                    }
                    self.stamp[v] = e;
                    self.dist[v] = nd;
                    self.pred[v] = u;
                    self.mask[v] = self.mask[u] ^ m;
                }
            }
        }
        order
    }
}

/// Candidate pairing between two defects (indices into the defect list).
#[derive(Clone, Copy, Debug)]
struct PairEdge {
    i: usize,
    j: usize,
    dist: i64,
    mask: u64,
}

/// Reusable decoder with per-thread scratch space.
pub struct Decoder<'g> {
    g: &'g MatchingGraph,
    sp: ShortestPaths,
    slot: Vec<usize>,
}

impl<'g> Decoder<'g> {
    pub fn new(g: &'g MatchingGraph) -> Self {
        Decoder { g, sp: ShortestPaths::new(g.num_detectors + 1), slot: vec![usize::MAX; g.num_detectors] }
    }

    /// Decodes a syndrome given as a bit per detector.
    pub fn decode(&mut self, syndrome: &[bool]) -> Result<Decoding> {
        if syndrome.len() != self.g.num_detectors {
            return Err(Error::InvalidSpec(format!(
                "syndrome has {} bits, graph has {} detectors",
                syndrome.len(),
                self.g.num_detectors
            )));
        }
        let defects: Vec<u32> = (0..syndrome.len()).filter(|&d| syndrome[d]).map(|d| d as u32).collect();
        self.decode_defects(&defects, false)
    }

    /// Decodes a sorted list of fired detectors. With `prediction_only`,
    /// clusters whose paths carry no observable are skipped and the
    /// returned weight covers only the clusters actually solved.
    pub fn decode_defects(&mut self, defects: &[u32], prediction_only: bool) -> Result<Decoding> {
        let g = self.g;
        let k = defects.len();
        if k == 0 {
            return Ok(Decoding { prediction: 0, weight: 0.0 });
        }
        let bdist: Vec<i64> = defects.iter().map(|&d| g.boundary_dist[d as usize]).collect();
        let mut pairs: Vec<PairEdge> = Vec::new();
        if let Some((dist, mask)) = &g.table {
            let n = g.num_detectors;
            for (i, &a) in defects.iter().enumerate() {
                let row = a as usize * n;
                for (j, &b) in defects.iter().enumerate().skip(i + 1) {
                    let dv = dist[row + b as usize];
                    if dv < bdist[i].saturating_add(bdist[j]) {
                        pairs.push(PairEdge { i, j, dist: dv, mask: mask[row + b as usize] });
                    }
                }
            }
        } else {
            self.pairs_by_search(defects, &bdist, &mut pairs);
        }

        // clusters of defects linked by candidate pairs
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &pairs {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..k {
            let r = find(&mut parent, i);
            members.entry(r).or_default().push(i);
        }
        let mut cluster_pairs: BTreeMap<usize, Vec<PairEdge>> = BTreeMap::new();
        for e in pairs {
            let r = find(&mut parent, e.i);
            cluster_pairs.entry(r).or_default().push(e);
        }

        let mut prediction = 0u64;
        let mut total = 0i64;
        for (root, nodes) in members {
            let cp = cluster_pairs.remove(&root).unwrap_or_default();
            if prediction_only {
                let carries = cp.iter().any(|e| e.mask != 0)
                    || nodes.iter().any(|&i| bdist[i] < INF && g.boundary_mask[defects[i] as usize] != 0);
                if !carries {
                    continue;
                }
            }
            let (m, w) = solve_cluster(g, defects, &bdist, &nodes, &cp)?;
            prediction ^= m;
            total += w;
        }
        Ok(Decoding { prediction, weight: g.real_weight(total) })
    }

    /// Candidate pairs from one pruned Dijkstra per defect, for graphs too
    /// large for a distance table.
    fn pairs_by_search(&mut self, defects: &[u32], bdist: &[i64], pairs: &mut Vec<PairEdge>) {
        let g = self.g;
        for (idx, &d) in defects.iter().enumerate() {
            self.slot[d as usize] = idx;
        }
        for (i, &d) in defects.iter().enumerate() {
            let bi = bdist[i];
            let bd = &g.boundary_dist;
            // a pairing through node v can only beat sending both ends to
            // the boundary while dist(v) < b_i + b_v
            let order = self.sp.run(g, d as usize, Some(g.boundary()), |v, dv| {
                v == d as usize || v == g.boundary() || dv < bi.saturating_add(bd[v])
            });
            for v in order {
                if v >= g.num_detectors {
                    continue;
                }
                let j = self.slot[v];
                if j == usize::MAX || j <= i || defects.get(j) != Some(&(v as u32)) {
                    continue;
                }
                let dv = self.sp.dist_of(v);
                if dv < bi.saturating_add(bdist[j]) {
                    pairs.push(PairEdge { i, j, dist: dv, mask: self.sp.mask_of(v) });
                }
            }
        }
        for &d in defects {
            self.slot[d as usize] = usize::MAX;
        }
    }
}

/// Exact matching of one cluster: each defect gets a boundary copy, copies
/// of linked defects may pair at zero cost.
fn solve_cluster(
    g: &MatchingGraph,
    defects: &[u32],
    bdist: &[i64],
    nodes: &[usize],
    pairs: &[PairEdge],
) -> Result<(u64, i64)> {
    let to_boundary = |i: usize| -> Result<(u64, i64)> {
        if bdist[i] >= INF {
            return Err(Error::Disconnected(defects[i] as usize));
        }
        Ok((g.boundary_mask[defects[i] as usize], bdist[i]))
    };
    match nodes {
        [i] => return to_boundary(*i),
        [i, j] if pairs.len() == 1 => {
            let e = pairs[0];
            let alone = bdist[*i].saturating_add(bdist[*j]);
            if e.dist <= alone {
                return Ok((e.mask, e.dist));
            }
            let (m1, w1) = to_boundary(*i)?;
            let (m2, w2) = to_boundary(*j)?;
            return Ok((m1 ^ m2, w1 + w2));
        }
        _ => {}
    }
    let m = nodes.len();
    let local: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(a, &i)| (i, a)).collect();
    // (u, v, cost, mask); copies live at m + a
    let mut cand: Vec<(usize, usize, i64, u64)> = Vec::with_capacity(2 * pairs.len() + m);
    for e in pairs {
        let (a, b) = (local[&e.i], local[&e.j]);
        cand.push((a, b, e.dist, e.mask));
        cand.push((m + a, m + b, 0, 0));
    }
    for (a, &i) in nodes.iter().enumerate() {
        if bdist[i] < INF {
            cand.push((a, m + a, bdist[i], g.boundary_mask[defects[i] as usize]));
        }
    }
    let edges: Vec<(usize, usize, i64)> = cand.iter().map(|c| (c.0, c.1, c.2)).collect();
    let mate = min_cost_matching(2 * m, &edges);
    if let Some(a) = (0..m).find(|&a| mate[a] == usize::MAX) {
        return Err(Error::Disconnected(defects[nodes[a]] as usize));
    }
    let mut pred = 0u64;
    let mut w = 0i64;
    for &(u, v, c, mask) in &cand {
        if u < m && mate[u] == v {
            pred ^= mask;
            w += c;
        }
    }
    Ok((pred, w))
}

/// Exact minimum-weight matching of `syndrome` on `g`.
pub fn mwpm_decode(g: &MatchingGraph, syndrome: &[bool]) -> Result<Decoding> {
    Decoder::new(g).decode(syndrome)
}

/// All-pairs shortest paths (Floyd–Warshall, boundary excluded as an
/// intermediate) for the exhaustive oracle.
pub struct BruteForce {
    n: usize,
    dist: Vec<i64>,
    mask: Vec<u64>,
    unit: f64,
}

impl BruteForce {
    pub fn new(g: &MatchingGraph) -> Self {
        let n = g.num_detectors + 1;
        let mut dist = vec![INF; n * n];
        let mut mask = vec![0u64; n * n];
        for v in 0..n {
            dist[v * n + v] = 0;
        }
        for (a, b, w, m) in g.edges() {
            for (x, y) in [(a, b), (b, a)] {
                if w < dist[x * n + y] {
                    dist[x * n + y] = w;
                    mask[x * n + y] = m;
                }
            }
        }
        let bnd = n - 1;
        for k in 0..bnd {
            for i in 0..n {
                let dik = dist[i * n + k];
                if dik >= INF {
                    continue;
                }
                for j in 0..n {
                    let nd = dik + dist[k * n + j];
                    if nd < dist[i * n + j] {
                        dist[i * n + j] = nd;
                        mask[i * n + j] = mask[i * n + k] ^ mask[k * n + j];
                    }
                }
            }
        }
        BruteForce { n, dist, mask, unit: g.unit }
    }

    /// Minimum over every pairing of the defects, each defect either paired
    /// with another or sent to the boundary.
    pub fn decode(&self, syndrome: &[bool]) -> Result<Decoding> {
        let defects: Vec<usize> = (0..syndrome.len()).filter(|&d| syndrome[d]).collect();
        let k = defects.len();
        if k > BRUTE_FORCE_LIMIT {
            return Err(Error::TooManyDefects(k, BRUTE_FORCE_LIMIT));
        }
        if syndrome.len() + 1 != self.n {
            return Err(Error::InvalidSpec("syndrome length does not match the graph".into()));
        }
        let bnd = self.n - 1;
        let d = |a: usize, b: usize| self.dist[a * self.n + b];
        let mk = |a: usize, b: usize| self.mask[a * self.n + b];
        let full = (1usize << k) - 1;
        let mut best = vec![(INF, 0u64); 1 << k];
        best[0] = (0, 0);
        for s in 1..=full {
            let i = s.trailing_zeros() as usize;
            let rest = s & !(1 << i);
            let mut cur = (INF, 0u64);
            let bi = d(defects[i], bnd);
            if bi < INF && best[rest].0 < INF {
                cur = (bi + best[rest].0, mk(defects[i], bnd) ^ best[rest].1);
            }
            let mut r = rest;
            while r != 0 {
                let j = r.trailing_zeros() as usize;
                r &= r - 1;
                let dij = d(defects[i], defects[j]);
                let sub = rest & !(1 << j);
                if dij < INF && best[sub].0 < INF && dij + best[sub].0 < cur.0 {
                    cur = (dij + best[sub].0, mk(defects[i], defects[j]) ^ best[sub].1);
                }
            }
            best[s] = cur;
        }
        let (w, m) = best[full];
        if w >= INF {
            return Err(Error::Disconnected(defects.first().copied().unwrap_or(0)));
        }
        Ok(Decoding { prediction: m, weight: w as f64 * self.unit })
    }
}

/// Exhaustive oracle; at most [`BRUTE_FORCE_LIMIT`] defects.
pub fn brute_force_decode(g: &MatchingGraph, syndrome: &[bool]) -> Result<Decoding> {
    let k = syndrome.iter().filter(|&&b| b).count();
    if k > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyDefects(k, BRUTE_FORCE_LIMIT));
    }
    BruteForce::new(g).decode(syndrome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> MatchingGraph {
        // 0 -1- 1 -2- 2 -3- 3, every node 10 from the boundary
        let mut e = vec![
            WeightedEdge { a: 0, b: Some(1), weight: 1.0, observables: 0 },
            WeightedEdge { a: 1, b: Some(2), weight: 2.0, observables: 0 },
            WeightedEdge { a: 2, b: Some(3), weight: 3.0, observables: 1 },
        ];
        for a in 0..4 {
            e.push(WeightedEdge { a, b: None, weight: 10.0, observables: 0 });
        }
        MatchingGraph::from_edges(4, &e).unwrap()
    }

    #[test]
    fn empty_syndrome() {
        let g = path_graph();
        let d = mwpm_decode(&g, &[false; 4]).unwrap();
        assert_eq!(d, Decoding { prediction: 0, weight: 0.0 });
        assert_eq!(brute_force_decode(&g, &[false; 4]).unwrap().weight, 0.0);
    }

    #[test]
    fn four_node_path() {
        let g = path_graph();
        let s = [true; 4];
        let a = mwpm_decode(&g, &s).unwrap();
        let b = brute_force_decode(&g, &s).unwrap();
        assert!((a.weight - 4.0).abs() < 1e-9);
        assert_eq!(a.weight, b.weight);
        assert_eq!(a.prediction, 1);
    }

    #[test]
    fn two_defects_take_cheaper_option() {
        let g = path_graph();
        let s = [true, false, false, true];
        // direct path 6 beats 20 through the boundary
        assert!((mwpm_decode(&g, &s).unwrap().weight - 6.0).abs() < 1e-9);
        let e = [
            WeightedEdge { a: 0, b: Some(1), weight: 9.0, observables: 0 },
            WeightedEdge { a: 0, b: None, weight: 1.0, observables: 1 },
            WeightedEdge { a: 1, b: None, weight: 1.0, observables: 0 },
        ];
        let g = MatchingGraph::from_edges(2, &e).unwrap();
        let d = mwpm_decode(&g, &[true, true]).unwrap();
        assert_eq!(d.prediction, 1);
        assert!((d.weight - 2.0).abs() < 1e-9);
    }

    #[test]
    fn disconnected_defect() {
        let e = [WeightedEdge { a: 0, b: None, weight: 1.0, observables: 0 }];
        let g = MatchingGraph::from_edges(2, &e).unwrap();
        assert!(matches!(mwpm_decode(&g, &[false, true]), Err(Error::Disconnected(1))));
        assert!(matches!(brute_force_decode(&g, &[false, true]), Err(Error::Disconnected(_))));
    }

    #[test]
    fn too_many_defects() {
        let e: Vec<WeightedEdge> =
            (0..12).map(|a| WeightedEdge { a, b: None, weight: 1.0, observables: 0 }).collect();
        let g = MatchingGraph::from_edges(12, &e).unwrap();
        assert!(matches!(brute_force_decode(&g, &[true; 12]), Err(Error::TooManyDefects(12, 10))));
        assert!((mwpm_decode(&g, &[true; 12]).unwrap().weight - 12.0).abs() < 1e-9);
    }
}
