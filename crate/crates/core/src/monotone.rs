//! c H-cyclic monotonicity of finite pair sets, horizontal reachability and
//! Rockafellar-type potentials.

use std::collections::VecDeque;

use serde::Serialize;

use crate::cost::{BuiltinCost, CostFunction};
use crate::error::{usage, Error, Result};
use crate::field::ScalarField;
use crate::group::{GroupModel, GroupPoint, HorizontalVector, DEFAULT_HORIZONTAL_TOL};
use crate::hconvex::gradient_of;

/// Default threshold below which cycle weights count as zero.
pub const DEFAULT_CYCLE_TOL: f64 = 1e-9;

/// Points closer than this in every coordinate are the same node.
const NODE_MERGE_TOL: f64 = 1e-12;

/// Cycle enumeration stops after this many cycles; Bellman-Ford still
/// decides the verdict.
const ENUMERATION_CAP: usize = 1_000_000;

/// Line half-length used by [`reconstruct_linear`].
pub const RECONSTRUCTION_EXTENT: f64 = 1.0;

/// A finite relation `R ⊂ G x V_1`; repeated points give a multivalued map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonePairSet {
    pairs: Vec<(GroupPoint, HorizontalVector)>,
    tol_h: f64,
}

impl MonotonePairSet {
    pub fn new(pairs: Vec<(GroupPoint, HorizontalVector)>, tol_h: f64) -> Result<Self> {
        if pairs.is_empty() {
            return Err(usage("pair set is empty"));
        }
        if !(tol_h > 0.0) {
            return Err(usage(format!("horizontality tolerance must be positive, got {tol_h}")));
        }
        let model = pairs[0].0.model();
        if let Some((g, _)) = pairs.iter().find(|(g, _)| g.model() != model) {
            return Err(Error::ModelMismatch {
                expected: model,
                found: g.model(),
            });
        }
        if pairs.iter().any(|(_, p)| !p.is_finite()) {
            return Err(usage("pair vectors must be finite"));
        }
        Ok(MonotonePairSet { pairs, tol_h })
    }

    pub fn with_default_tol(pairs: Vec<(GroupPoint, HorizontalVector)>) -> Result<Self> {
        Self::new(pairs, DEFAULT_HORIZONTAL_TOL)
    }

    pub fn pairs(&self) -> &[(GroupPoint, HorizontalVector)] {
        &self.pairs
    }

    pub fn tol_h(&self) -> f64 {
        self.tol_h
    }

    pub fn model(&self) -> GroupModel {
        self.pairs[0].0.model()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn same_point(a: &GroupPoint, b: &GroupPoint) -> bool {
    a.coords()
        .iter()
        .zip(b.coords())
        .all(|(x, y)| (x - y).abs() <= NODE_MERGE_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// `max_{p in T(from)} c(to, p) - c(from, p)`.
    pub weight: f64,
    /// Index into `targets[from]` of the maximizing `p`.
    pub choice: usize,
}

/// Horizontal adjacency graph of a pair set, with the max-weight parallel
/// edge kept for each ordered pair of nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HGraph {
    pub nodes: Vec<GroupPoint>,
    pub targets: Vec<Vec<HorizontalVector>>,
    pub edges: Vec<Edge>,
    /// Outgoing edge indices per node, ordered by target.
    pub out: Vec<Vec<usize>>,
}

impl HGraph {
    pub fn build(set: &MonotonePairSet, c: &dyn CostFunction) -> Self {
        let mut nodes: Vec<GroupPoint> = Vec::new();
        let mut targets: Vec<Vec<HorizontalVector>> = Vec::new();
        for (g, p) in set.pairs() {
            match nodes.iter().position(|n| same_point(n, g)) {
                Some(i) => {
                    if !targets[i].contains(p) {
                        targets[i].push(*p);
                    }
                }
                None => {
                    nodes.push(*g);
                    targets.push(vec![*p]);
                }
            }
        }
        let n = nodes.len();
        let mut edges = Vec::new();
        let mut out = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i == j || !nodes[i].in_horizontal_plane(&nodes[j], set.tol_h()) {
                    continue;
                }
                let (choice, weight) = targets[i]
                    .iter()
                    .enumerate()
                    .map(|(k, p)| (k, c.increment(&nodes[i], &nodes[j], *p)))
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |best, cand| if cand.1 > best.1 { cand } else { best },
                    );
                out[i].push(edges.len());
                edges.push(Edge {
                    from: i,
                    to: j,
                    weight,
                    choice,
                });
            }
        }
        HGraph {
            nodes,
            targets,
            edges,
            out,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, g: &GroupPoint) -> Option<usize> {
        self.nodes.iter().position(|n| same_point(n, g))
    }

    fn edge_between(&self, i: usize, j: usize) -> Option<&Edge> {
        self.out[i].iter().map(|&e| &self.edges[e]).find(|e| e.to == j)
    }

    /// Breadth-first closure of `start` under horizontal adjacency, in
    /// increasing node order.
    pub fn reachable_from(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            for &e in &self.out[i] {
                let j = self.edges[e].to;
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }
}

/// Nodes of the pair set reachable from `g0` by horizontal moves.
pub fn reachable_set(set: &MonotonePairSet, g0: &GroupPoint) -> Result<Vec<GroupPoint>> {
    let graph = HGraph::build(set, &BuiltinCost::Linear);
    let start = graph
        .index_of(g0)
        .ok_or_else(|| usage(format!("{g0} is not a point of the pair set")))?;
    Ok(graph
        .reachable_from(start)
        .into_iter()
        .map(|i| graph.nodes[i])
        .collect())
}

/// A closed H-sequence whose cost sum is positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleWitness {
    pub indices: Vec<usize>,
    pub points: Vec<GroupPoint>,
    /// The `p_i` chosen at each point.
    pub vectors: Vec<HorizontalVector>,
    /// `sum c(g_{i+1}, p_i) - c(g_i, p_i)`.
    pub weight: f64,
}

impl CycleWitness {
    fn from_indices(graph: &HGraph, indices: Vec<usize>) -> Self {
        let k = indices.len();
        let mut weight = 0.0;
        let mut vectors = Vec::with_capacity(k);
        for a in 0..k {
            let e = graph
                .edge_between(indices[a], indices[(a + 1) % k])
                .expect("cycle edges exist");
            weight += e.weight;
            vectors.push(graph.targets[e.from][e.choice]);
        }
        CycleWitness {
            points: indices.iter().map(|&i| graph.nodes[i]).collect(),
            indices,
            vectors,
            weight,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub passed: bool,
    pub witness: Option<CycleWitness>,
    /// Largest enumerated cycle weight (`0` from self-loops when nothing
    /// else exists).
    pub max_cycle_weight: f64,
    pub cycles_enumerated: usize,
    pub enumeration_truncated: bool,
    /// Whether Bellman-Ford found a positive cycle of any length.
    pub positive_cycle_detected: bool,
}

/// Enumerates simple cycles of at most `max_len` edges, each once, starting
/// from its smallest node. Calls `visit` with the node list and weight.
fn enumerate_cycles(graph: &HGraph, max_len: usize, mut visit: impl FnMut(&[usize], f64)) -> (usize, bool) {
    let n = graph.len();
    let mut count = 0usize;
    let mut truncated = false;
    let mut path = Vec::with_capacity(max_len);
    let mut on_path = vec![false; n];

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        graph: &HGraph,
        start: usize,
        max_len: usize,
        weight: f64,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        count: &mut usize,
        truncated: &mut bool,
        visit: &mut dyn FnMut(&[usize], f64),
    ) {
        let last = *path.last().expect("path starts at the root");
        for &e in &graph.out[last] {
            if *count >= ENUMERATION_CAP {
                *truncated = true;
                return;
            }
            let edge = graph.edges[e];
            let next = edge.to;
            if next == start && path.len() >= 2 {
                *count += 1;
                visit(path, weight + edge.weight);
            } else if next > start && !on_path[next] && path.len() < max_len {
                on_path[next] = true;
                path.push(next);
                dfs(
                    graph,
                    start,
                    max_len,
                    weight + edge.weight,
                    path,
                    on_path,
                    count,
                    truncated,
                    visit,
                );
                path.pop();
                on_path[next] = false;
            }
        }
    }

    for start in 0..n {
        if max_len < 2 {
            break;
        }
        path.clear();
        path.push(start);
        on_path[start] = true;
        dfs(
            graph,
            start,
            max_len,
            0.0,
            &mut path,
            &mut on_path,
            &mut count,
            &mut truncated,
            &mut visit,
        );
        on_path[start] = false;
        if truncated {
            break;
        }
    }
    (count, truncated)
}

/// Longest-path relaxation from `sources` (value 0) over `n - 1` rounds,
/// followed by one probe round. Returns the values and, when the probe still
/// improves some node by more than `tol`, a positive cycle.
fn longest_paths(graph: &HGraph, sources: &[usize], pinned: Option<usize>, tol: f64) -> (Vec<f64>, Option<Vec<usize>>) {
    let n = graph.len();
    let mut dist = vec![f64::NEG_INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    for &s in sources {
        dist[s] = 0.0;
    }
    for _ in 0..n.saturating_sub(1) {
        let mut changed = false;
        for e in &graph.edges {
            if dist[e.from] == f64::NEG_INFINITY || Some(e.to) == pinned {
                continue;
            }
            let cand = dist[e.from] + e.weight;
            if cand > dist[e.to] {
                dist[e.to] = cand;
                pred[e.to] = Some(e.from);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unbounded = graph
        .edges
        .iter()
        .any(|e| dist[e.from] > f64::NEG_INFINITY && dist[e.from] + e.weight > dist[e.to] + tol);
    if !unbounded {
        return (dist, None);
    }
    // Keep relaxing until the predecessor graph closes a cycle; every such
    // cycle has positive weight.
    let mut work = dist.clone();
    for round in 0..10 * n + 10 {
        let threshold = if round <= 2 * n { tol } else { 0.0 };
        for e in &graph.edges {
            if work[e.from] == f64::NEG_INFINITY {
                continue;
            }
            let cand = work[e.from] + e.weight;
            if cand > work[e.to] + threshold {
                work[e.to] = cand;
                pred[e.to] = Some(e.from);
            }
        }
        if let Some(cycle) = predecessor_cycle(&pred) {
            return (dist, Some(cycle));
        }
    }
    (dist, Some(Vec::new()))
}

/// A cycle of the functional graph `v -> pred[v]`, listed in edge order
/// and rotated to start at its smallest node.
fn predecessor_cycle(pred: &[Option<usize>]) -> Option<Vec<usize>> {
    let n = pred.len();
    let mut color = vec![0usize; n];
    for s in 0..n {
        if color[s] != 0 {
            continue;
        }
        let mut v = s;
        while color[v] == 0 {
            color[v] = s + 1;
            match pred[v] {
                Some(p) => v = p,
                None => break,
            }
        }
        if color[v] == s + 1 && pred[v].is_some() {
            let mut cycle = vec![v];
            let mut w = pred[v].expect("cycle node has predecessor");
            while w != v {
                cycle.push(w);
                w = pred[w].expect("cycle node has predecessor");
            }
            cycle.reverse();
            let k = cycle
                .iter()
                .enumerate()
                .min_by_key(|(_, &x)| x)
                .map(|(k, _)| k)
                .unwrap_or(0);
            cycle.rotate_left(k);
            return Some(cycle);
        }
    }
    None
}

/// Checks `sum c(g_{i+1}, p_i) <= sum c(g_i, p_i) + tol` over closed
/// H-sequences. Cycles up to `max_len` are enumerated for the witness
/// (shortest violating length first, then largest weight); a Bellman-Ford
/// probe over all lengths decides the verdict together with enumeration.
pub fn check_c_h_cyclic_monotone(
    set: &MonotonePairSet,
    c: &dyn CostFunction,
    max_len: usize,
    tol: f64,
) -> Result<MonotoneReport> {
    if max_len < 1 {
        return Err(usage("max cycle length must be at least 1"));
    }
    let graph = HGraph::build(set, c);
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    let mut max_cycle_weight: f64 = 0.0;
    let (cycles_enumerated, enumeration_truncated) = enumerate_cycles(&graph, max_len, |cycle, w| {
        max_cycle_weight = max_cycle_weight.max(w);
        if w > tol {
            let better = match &best {
                None => true,
                Some((len, bw, _)) => cycle.len() < *len || (cycle.len() == *len && w > *bw),
            };
            if better {
                best = Some((cycle.len(), w, cycle.to_vec()));
            }
        }
    });
    let all: Vec<usize> = (0..graph.len()).collect();
    let (_, bf_cycle) = longest_paths(&graph, &all, None, tol);
    let positive_cycle_detected = bf_cycle.is_some();
    let witness = match (best, bf_cycle) {
        (Some((_, _, cycle)), _) => Some(CycleWitness::from_indices(&graph, cycle)),
        (None, Some(cycle)) => Some(CycleWitness::from_indices(&graph, cycle)),
        (None, None) => None,
    };
    Ok(MonotoneReport {
        passed: witness.is_none(),
        witness,
        max_cycle_weight,
        cycles_enumerated,
        enumeration_truncated,
        positive_cycle_detected,
    })
}

/// Values of the potential on the nodes reachable from the base point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialTable {
    pub base: GroupPoint,
    pub nodes: Vec<GroupPoint>,
    pub values: Vec<f64>,
    /// Per node: `f(g') >= f(g) + c(g', p) - c(g, p)` for every `p in T(g)`
    /// and every node `g'` in `H_g`.
    pub certified: Vec<bool>,
    /// Largest violation of the certification inequality.
    pub certification_violation: f64,
}

impl PotentialTable {
    pub fn value_at(&self, g: &GroupPoint) -> Option<f64> {
        self.nodes.iter().position(|n| same_point(n, g)).map(|i| self.values[i])
    }

    pub fn fully_certified(&self) -> bool {
        self.certified.iter().all(|c| *c)
    }
}

/// Supremum of cost increments along H-sequences from `g0`, evaluated on the
/// reachable nodes as a longest-path problem. Fails with
/// [`Error::Unbounded`] when a positive cycle is reachable.
pub fn rockafellar_potential(set: &MonotonePairSet, c: &dyn CostFunction, g0: &GroupPoint) -> Result<PotentialTable> {
    let graph = HGraph::build(set, c);
    potential_on_graph(&graph, c, g0, DEFAULT_CYCLE_TOL)
}

pub(crate) fn potential_on_graph(
    graph: &HGraph,
    c: &dyn CostFunction,
    g0: &GroupPoint,
    tol: f64,
) -> Result<PotentialTable> {
    let start = graph
        .index_of(g0)
        .ok_or_else(|| usage(format!("{g0} is not a point of the pair set")))?;
    let (dist, cycle) = longest_paths(graph, &[start], Some(start), tol);
    if let Some(cycle) = cycle {
        let w = CycleWitness::from_indices(graph, cycle);
        return Err(Error::Unbounded {
            cycle: w.indices,
            weight: w.weight,
        });
    }
    let reachable = graph.reachable_from(start);
    let mut certified = Vec::with_capacity(reachable.len());
    let mut certification_violation: f64 = f64::NEG_INFINITY;
    for &i in &reachable {
        let mut ok = true;
        for &e in &graph.out[i] {
            let j = graph.edges[e].to;
            for p in &graph.targets[i] {
                let slack = dist[i] + c.increment(&graph.nodes[i], &graph.nodes[j], *p) - dist[j];
                certification_violation = certification_violation.max(slack);
                if slack > tol * dist[i].abs().max(dist[j].abs()).max(1.0) {
                    ok = false;
                }
            }
        }
        certified.push(ok);
    }
    Ok(PotentialTable {
        base: graph.nodes[start],
        nodes: reachable.iter().map(|&i| graph.nodes[i]).collect(),
        values: reachable.iter().map(|&i| dist[i]).collect(),
        certified,
        certification_violation: certification_violation.max(0.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub table: PotentialTable,
    /// `(u(g) - u(g0)) - f(g)` per table node.
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    pub min_gap: f64,
}

/// Rebuilds `u - u(g0)` from the pairs `(g, X u(g))` under the linear cost
/// on a star of horizontal lines through `g0`: four directions, with
/// `(node_budget - 1) / 8` evenly spaced nodes on each half-line.
pub fn reconstruct_linear(u: &dyn ScalarField, g0: &GroupPoint, node_budget: usize) -> Result<ReconstructionReport> {
    let per_ray = node_budget.saturating_sub(1) / 8;
    if per_ray == 0 {
        return Err(usage(format!("node budget must be at least 9, got {node_budget}")));
    }
    let step = RECONSTRUCTION_EXTENT / per_ray as f64;
    let mut points = vec![*g0];
    for k in 0..4 {
        let theta = std::f64::consts::FRAC_PI_4 * k as f64;
        let dir = HorizontalVector::new(theta.cos(), theta.sin());
        for sign in [1.0, -1.0] {
            for j in 1..=per_ray {
                points.push(g0.translate_horizontal(dir * (sign * j as f64 * step)));
            }
        }
    }
    let pairs = points
        .iter()
        .map(|g| Ok((*g, gradient_of(u, g, None)?)))
        .collect::<Result<Vec<_>>>()?;
    let set = MonotonePairSet::with_default_tol(pairs)?;
    let table = rockafellar_potential(&set, &BuiltinCost::Linear, g0)?;
    let u0 = u.eval(g0);
    let gaps: Vec<f64> = table
        .nodes
        .iter()
        .zip(&table.values)
        .map(|(g, f)| (u.eval(g) - u0) - f)
        .collect();
    let max_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ReconstructionReport {
        table,
        gaps,
        max_gap,
        min_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BuiltinField;

    fn heis(c: &[f64]) -> GroupPoint {
        GroupModel::Heisenberg.point(c).unwrap()
    }

    fn gradient_pairs(u: &BuiltinField, points: &[GroupPoint]) -> MonotonePairSet {
        MonotonePairSet::with_default_tol(points.iter().map(|g| (*g, u.grad(g).unwrap())).collect()).unwrap()
    }

    #[test]
    fn reachability_examples() {
        let e = GroupModel::Heisenberg.identity();
        let z = heis(&[0.0, 0.0, 1.0]);
        let set =
            MonotonePairSet::with_default_tol(vec![(e, HorizontalVector::ZERO), (z, HorizontalVector::ZERO)]).unwrap();
        assert_eq!(reachable_set(&set, &e).unwrap(), vec![e]);
        let a = heis(&[1.0, 0.0, 0.0]);
        let b = heis(&[1.0, 1.0, 0.5]);
        let set = MonotonePairSet::with_default_tol([e, a, b].iter().map(|g| (*g, HorizontalVector::ZERO)).collect())
            .unwrap();
        assert_eq!(reachable_set(&set, &e).unwrap().len(), 3);
        assert!(reachable_set(&set, &z).is_err());
    }

    #[test]
    fn duplicates_merge_into_multivalued_targets() {
        let e = GroupModel::Heisenberg.identity();
        let set = MonotonePairSet::with_default_tol(vec![
            (e, HorizontalVector::new(1.0, 0.0)),
            (e, HorizontalVector::new(0.0, 1.0)),
            (e, HorizontalVector::new(1.0, 0.0)),
        ])
        .unwrap();
        let graph = HGraph::build(&set, &BuiltinCost::Linear);
        assert_eq!(graph.len(), 1);
        assert_eq!(graph.targets[0].len(), 2);
    }

    #[test]
    fn convex_gradients_pass_concave_fail() {
        let e = GroupModel::Heisenberg.identity();
        let points: Vec<GroupPoint> = [(0.0, 0.0), (1.0, 0.0), (-0.5, 0.0), (0.0, 1.0), (0.0, -2.0), (2.0, 0.0)]
            .iter()
            .map(|(a, b)| e.translate_horizontal(HorizontalVector::new(*a, *b)))
            .collect();
        let convex = gradient_pairs(&BuiltinField::ScaledSqV1(1.0), &points);
        let r = check_c_h_cyclic_monotone(&convex, &BuiltinCost::Linear, 5, DEFAULT_CYCLE_TOL).unwrap();
        assert!(r.passed && !r.positive_cycle_detected && r.cycles_enumerated > 0);

        let concave = gradient_pairs(&BuiltinField::ScaledSqV1(-1.0), &points[..2]);
        let r = check_c_h_cyclic_monotone(&concave, &BuiltinCost::Linear, 5, DEFAULT_CYCLE_TOL).unwrap();
        assert!(!r.passed);
        let w = r.witness.unwrap();
        assert_eq!(w.len(), 2);
        assert!((w.weight - 2.0).abs() < 1e-12);
        assert!(matches!(
            rockafellar_potential(&concave, &BuiltinCost::Linear, &e),
            Err(Error::Unbounded { .. })
        ));
    }

    #[test]
    fn single_pair() {
        let g = heis(&[0.3, 0.1, 2.0]);
        let set = MonotonePairSet::with_default_tol(vec![(g, HorizontalVector::new(5.0, 1.0))]).unwrap();
        let r = check_c_h_cyclic_monotone(&set, &BuiltinCost::NegQuadratic, 3, DEFAULT_CYCLE_TOL).unwrap();
        assert!(r.passed);
        let t = rockafellar_potential(&set, &BuiltinCost::NegQuadratic, &g).unwrap();
        assert_eq!(t.values, vec![0.0]);
        assert!(t.fully_certified());
    }

    #[test]
    fn one_edge_potential() {
        let e = GroupModel::Heisenberg.identity();
        let v0 = HorizontalVector::new(0.5, -1.0);
        let g1 = e.translate_horizontal(HorizontalVector::new(1.0, 2.0));
        let set = MonotonePairSet::with_default_tol(vec![(e, v0), (g1, v0)]).unwrap();
        let t = rockafellar_potential(&set, &BuiltinCost::Linear, &e).unwrap();
        assert_eq!(t.value_at(&e), Some(0.0));
        assert!((t.value_at(&g1).unwrap() - g1.horizontal().dot(&v0)).abs() < 1e-15);
        assert!(t.fully_certified());
    }

    #[test]
    fn vertical_axis_gives_trivial_domain() {
        let pairs: Vec<_> = (0..4)
            .map(|k| (heis(&[0.0, 0.0, k as f64]), HorizontalVector::new(1.0, 1.0)))
            .collect();
        let set = MonotonePairSet::with_default_tol(pairs).unwrap();
        let t = rockafellar_potential(&set, &BuiltinCost::Linear, &GroupModel::Heisenberg.identity()).unwrap();
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn long_positive_cycle_beyond_enumeration() {
        // Rotating triangle: each p points to the next vertex.
        let e = GroupModel::Heisenberg.identity();
        let pts: Vec<GroupPoint> = [(1.0, 0.0), (0.0, 0.0), (-1.0, 0.0)]
            .iter()
            .map(|(a, b)| e.translate_horizontal(HorizontalVector::new(*a, *b)))
            .collect();
        let pairs = vec![
            (pts[0], HorizontalVector::new(-1.0, 0.0)),
            (pts[1], HorizontalVector::new(-1.0, 0.0)),
            (pts[2], HorizontalVector::new(1.0, 0.0)),
        ];
        let set = MonotonePairSet::with_default_tol(pairs).unwrap();
        let r = check_c_h_cyclic_monotone(&set, &BuiltinCost::Linear, 1, DEFAULT_CYCLE_TOL).unwrap();
        assert!(!r.passed && r.positive_cycle_detected && r.cycles_enumerated == 0);
        assert!(r.witness.unwrap().weight > 0.0);
    }

    #[test]
    fn reconstruction_of_linear_field_is_exact() {
        let g0 = heis(&[0.2, -0.1, 0.7]);
        let u = BuiltinField::Linear {
            v: HorizontalVector::new(1.0, -3.0),
            offset: 2.0,
        };
        let r = reconstruct_linear(&u, &g0, 25).unwrap();
        assert_eq!(r.table.nodes.len(), 25);
        assert!(r.max_gap.abs() < 1e-12 && r.min_gap.abs() < 1e-12);
    }

    #[test]
    fn reconstruction_gap_shrinks() {
        let g0 = GroupModel::Heisenberg.identity();
        let u = BuiltinField::ScaledSqV1(1.0);
        let coarse = reconstruct_linear(&u, &g0, 25).unwrap();
        let fine = reconstruct_linear(&u, &g0, 100).unwrap();
        assert!(coarse.min_gap >= -1e-12 && fine.min_gap >= -1e-12);
        assert!(coarse.max_gap >= 2.0 * fine.max_gap);
        assert_eq!(coarse.table.value_at(&g0), Some(0.0));
    }
}
