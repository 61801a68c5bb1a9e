//! Discrete horizontal optimal transport on the Heisenberg group.
//!
//! The profit of moving `g` to `g'` is `c(g, xi_1(g'))` when `g'` lies on
//! the horizontal plane of `g`; other cells are excluded from the program.

mod generator;
mod hungarian;
mod simplex;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::cost::{invert_gradient, CostFunction};
use crate::error::{usage, Error, Result};
use crate::group::{GroupModel, GroupPoint, HorizontalVector, DEFAULT_HORIZONTAL_TOL};
use crate::monotone::{check_c_h_cyclic_monotone, potential_on_graph, HGraph, MonotonePairSet, MonotoneReport};

pub use generator::{generate_instance, generate_pushforward, GeneratedInstance, InstanceMode};
pub use hungarian::{solve_min as hungarian_min, Assignment};
pub use simplex::{solve_transportation, SimplexOutcome, TransportationSolution};

/// Weights whose total is within this of 1 are renormalized.
pub const WEIGHT_NORMALIZATION_TOL: f64 = 1e-6;

/// Coupling entries above this belong to the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Tolerance for marginals and complementary slackness.
pub const PLAN_TOL: f64 = 1e-9;

/// Largest size accepted by [`brute_force_oracle`].
pub const ORACLE_MAX_ATOMS: usize = 8;

const ATOM_MERGE_TOL: f64 = 1e-12;
const MAP_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    atoms: Vec<(GroupPoint, f64)>,
}

impl DiscreteMeasure {
    /// Merges coincident atoms and renormalizes weights that sum to 1 up to
    /// [`WEIGHT_NORMALIZATION_TOL`].
    pub fn new(atoms: Vec<(GroupPoint, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(usage("measure has no atoms"));
        }
        let model = atoms[0].0.model();
        let mut merged: Vec<(GroupPoint, f64)> = Vec::with_capacity(atoms.len());
        for (g, w) in atoms {
            if g.model() != model {
                return Err(Error::ModelMismatch {
                    expected: model,
                    found: g.model(),
                });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(usage(format!("atom weights must be positive, got {w}")));
            }
            let same = |h: &GroupPoint| {
                h.coords()
                    .iter()
                    .zip(g.coords())
                    .all(|(a, b)| (a - b).abs() <= ATOM_MERGE_TOL)
            };
            match merged.iter_mut().find(|(h, _)| same(h)) {
                Some(atom) => atom.1 += w,
                None => merged.push((g, w)),
            }
        }
        let total: f64 = merged.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > WEIGHT_NORMALIZATION_TOL {
            return Err(usage(format!("weights sum to {total}, expected 1")));
        }
        for atom in &mut merged {
            atom.1 /= total;
        }
        Ok(DiscreteMeasure { atoms: merged })
    }

    pub fn uniform(points: Vec<GroupPoint>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        Self::new(points.into_iter().map(|g| (g, w)).collect())
    }

    pub fn atoms(&self) -> &[(GroupPoint, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn point(&self, i: usize) -> GroupPoint {
        self.atoms[i].0
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.atoms[i].1
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|(_, w)| *w).collect()
    }

    pub fn is_uniform(&self) -> bool {
        let w0 = self.atoms[0].1;
        self.atoms.iter().all(|(_, w)| (w - w0).abs() <= 1e-12)
    }
}

#[derive(Clone)]
pub struct TransportInstance {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub cost: Arc<dyn CostFunction>,
    pub tol_h: f64,
}

impl fmt::Debug for TransportInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransportInstance")
            .field("mu", &self.mu)
            .field("nu", &self.nu)
            .field("cost", &self.cost.name())
            .field("tol_h", &self.tol_h)
            .finish()
    }
}

impl TransportInstance {
    pub fn new(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: Arc<dyn CostFunction>) -> Result<Self> {
        for m in [&mu, &nu] {
            let model = m.point(0).model();
            if model != GroupModel::Heisenberg {
                return Err(usage(format!(
                    "transport is implemented on the Heisenberg group only, got {model}"
                )));
            }
        }
        Ok(TransportInstance {
            mu,
            nu,
            cost,
            tol_h: DEFAULT_HORIZONTAL_TOL,
        })
    }

    /// `c(g_i, xi_1(g'_j))` when `g'_j` is in `H_{g_i}`, `None` otherwise.
    pub fn profit(&self, i: usize, j: usize) -> Option<f64> {
        let (g, h) = (self.mu.point(i), self.nu.point(j));
        g.in_horizontal_plane(&h, self.tol_h)
            .then(|| self.cost.eval(&g, h.horizontal()))
    }

    pub fn profit_matrix(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.mu.len())
            .map(|i| (0..self.nu.len()).map(|j| self.profit(i, j)).collect())
            .collect()
    }

    pub fn is_uniform_square(&self) -> bool {
        self.mu.len() == self.nu.len() && self.mu.is_uniform() && self.nu.is_uniform()
    }

    /// Atoms with no admissible partner.
    pub fn isolated_atoms(&self) -> (Vec<usize>, Vec<usize>) {
        let profits = self.profit_matrix();
        let isolated_mu = (0..self.mu.len())
            .filter(|&i| profits[i].iter().all(Option::is_none))
            .collect();
        let isolated_nu = (0..self.nu.len())
            .filter(|&j| profits.iter().all(|row| row[j].is_none()))
            .collect();
        (isolated_mu, isolated_nu)
    }

    fn infeasible(&self) -> Error {
        let (isolated_mu, isolated_nu) = self.isolated_atoms();
        Error::Infeasible {
            isolated_mu,
            isolated_nu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverMethod {
    /// Hungarian method for uniform square instances, network simplex
    /// otherwise.
    Auto,
    Hungarian,
    NetworkSimplex,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    pub coupling: Vec<Vec<f64>>,
    pub value: f64,
    /// Dual potentials with `phi_i + psi_j >= C_ij` on admissible cells.
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub method: SolverMethod,
}

impl TransportPlan {
    /// Support cells `(i, j, mass)` in row-major order.
    pub fn support(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.coupling.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if m > SUPPORT_THRESHOLD {
                    out.push((i, j, m));
                }
            }
        }
        out
    }

    fn from_coupling(
        inst: &TransportInstance,
        coupling: Vec<Vec<f64>>,
        phi: Vec<f64>,
        psi: Vec<f64>,
        method: SolverMethod,
    ) -> Self {
        let value = plan_value(inst, &coupling);
        TransportPlan {
            coupling,
            value,
            phi,
            psi,
            method,
        }
    }
}

/// `sum gamma_ij C_ij`, `-inf` if mass sits on an excluded cell.
pub fn plan_value(inst: &TransportInstance, coupling: &[Vec<f64>]) -> f64 {
    let mut value = 0.0;
    for (i, row) in coupling.iter().enumerate() {
        for (j, &m) in row.iter().enumerate() {
            if m > SUPPORT_THRESHOLD {
                match inst.profit(i, j) {
                    Some(c) => value += m * c,
                    None => return f64::NEG_INFINITY,
                }
            }
        }
    }
    value
}

/// Marginal and dual checks of a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanCertificate {
    pub marginal_error: f64,
    /// Largest `C_ij - phi_i - psi_j` over admissible cells.
    pub dual_violation: f64,
    /// Largest `|phi_i + psi_j - C_ij|` over support cells.
    pub slackness_gap: f64,
    pub dual_value: f64,
    pub duality_gap: f64,
    pub optimal: bool,
}

pub fn certify_plan(plan: &TransportPlan, inst: &TransportInstance) -> PlanCertificate {
    let (m, n) = (inst.mu.len(), inst.nu.len());
    let mut marginal_error: f64 = 0.0;
    for i in 0..m {
        let s: f64 = plan.coupling[i].iter().sum();
        marginal_error = marginal_error.max((s - inst.mu.weight(i)).abs());
    }
    for j in 0..n {
        let s: f64 = plan.coupling.iter().map(|row| row[j]).sum();
        marginal_error = marginal_error.max((s - inst.nu.weight(j)).abs());
    }
    let mut dual_violation = f64::NEG_INFINITY;
    let mut slackness_gap: f64 = 0.0;
    for i in 0..m {
        for j in 0..n {
            if let Some(c) = inst.profit(i, j) {
                let slack = c - plan.phi[i] - plan.psi[j];
                dual_violation = dual_violation.max(slack);
                if plan.coupling[i][j] > SUPPORT_THRESHOLD {
                    slackness_gap = slackness_gap.max(slack.abs());
                }
            }
        }
    }
    let dual_value: f64 = (0..m).map(|i| inst.mu.weight(i) * plan.phi[i]).sum::<f64>()
        + (0..n).map(|j| inst.nu.weight(j) * plan.psi[j]).sum::<f64>();
    let duality_gap = (dual_value - plan.value).abs();
    PlanCertificate {
        marginal_error,
        dual_violation,
        slackness_gap,
        dual_value,
        duality_gap,
        optimal: marginal_error <= PLAN_TOL
            && dual_violation <= PLAN_TOL
            && slackness_gap <= PLAN_TOL
            && duality_gap <= PLAN_TOL,
    }
}

/// Exact maximizer of the Kantorovich problem restricted to admissible
/// cells.
pub fn solve_kantorovich(inst: &TransportInstance) -> Result<TransportPlan> {
    solve_with(inst, SolverMethod::Auto)
}

pub fn solve_with(inst: &TransportInstance, method: SolverMethod) -> Result<TransportPlan> {
    let (isolated_mu, isolated_nu) = inst.isolated_atoms();
    if !isolated_mu.is_empty() || !isolated_nu.is_empty() {
        return Err(Error::Infeasible {
            isolated_mu,
            isolated_nu,
        });
    }
    match method {
        SolverMethod::Auto if inst.is_uniform_square() => solve_hungarian(inst),
        SolverMethod::Auto | SolverMethod::NetworkSimplex => solve_simplex(inst),
        SolverMethod::Hungarian => {
            if !inst.is_uniform_square() {
                return Err(usage(
                    "the Hungarian method needs uniform weights and equal atom counts",
                ));
            }
            solve_hungarian(inst)
        }
        SolverMethod::BruteForce => {
            let plan = brute_force_oracle(inst)?;
            if plan.value == f64::NEG_INFINITY {
                return Err(inst.infeasible());
            }
            Ok(plan)
        }
    }
}

fn solve_hungarian(inst: &TransportInstance) -> Result<TransportPlan> {
    let n = inst.mu.len();
    let cost: Vec<Vec<Option<f64>>> = inst
        .profit_matrix()
        .into_iter()
        .map(|row| row.into_iter().map(|c| c.map(|c| -c)).collect())
        .collect();
    let a = hungarian::solve_min(&cost).ok_or_else(|| inst.infeasible())?;
    let w = inst.mu.weight(0);
    let mut coupling = vec![vec![0.0; n]; n];
    for (i, &j) in a.row_to_col.iter().enumerate() {
        coupling[i][j] = w;
    }
    // Weight-1/n duals: sum_i w phi_i + sum_j w psi_j = w sum C.
    let phi = a.u.iter().map(|u| -u).collect();
    let psi = a.v.iter().map(|v| -v).collect();
    Ok(TransportPlan::from_coupling(
        inst,
        coupling,
        phi,
        psi,
        SolverMethod::Hungarian,
    ))
}

fn solve_simplex(inst: &TransportInstance) -> Result<TransportPlan> {
    let (m, n) = (inst.mu.len(), inst.nu.len());
    let mut cells = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if let Some(c) = inst.profit(i, j) {
                cells.push((i, j, c));
            }
        }
    }
    match simplex::solve_transportation(&inst.mu.weights(), &inst.nu.weights(), &cells) {
        SimplexOutcome::Infeasible { .. } => Err(inst.infeasible()),
        SimplexOutcome::Optimal(sol) => {
            let mut coupling = vec![vec![0.0; n]; m];
            for (&(i, j, _), &x) in cells.iter().zip(&sol.flows) {
                coupling[i][j] = x;
            }
            Ok(TransportPlan::from_coupling(
                inst,
                coupling,
                sol.phi,
                sol.psi,
                SolverMethod::NetworkSimplex,
            ))
        }
    }
}

/// Exhaustive maximum over permutation plans of a uniform square instance.
/// An instance without admissible permutation yields value `-inf`.
pub fn brute_force_oracle(inst: &TransportInstance) -> Result<TransportPlan> {
    let n = inst.mu.len();
    if !inst.is_uniform_square() {
        return Err(usage(
            "the permutation oracle needs uniform weights and equal atom counts",
        ));
    }
    if n > ORACLE_MAX_ATOMS {
        return Err(usage(format!(
            "the permutation oracle accepts at most {ORACLE_MAX_ATOMS} atoms, got {n}"
        )));
    }
    let profits = inst.profit_matrix();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    permutations(&mut perm, 0, &mut |p| {
        let mut total = 0.0;
        for (i, &j) in p.iter().enumerate() {
            match profits[i][j] {
                Some(c) => total += c,
                None => return,
            }
        }
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, p.to_vec()));
        }
    });
    let w = inst.mu.weight(0);
    let mut coupling = vec![vec![0.0; n]; n];
    match best {
        Some((_, p)) => {
            for (i, &j) in p.iter().enumerate() {
                coupling[i][j] = w;
            }
            Ok(TransportPlan::from_coupling(
                inst,
                coupling,
                vec![f64::NAN; n],
                vec![f64::NAN; n],
                SolverMethod::BruteForce,
            ))
        }
        None => Ok(TransportPlan {
            coupling,
            value: f64::NEG_INFINITY,
            phi: vec![f64::NAN; n],
            psi: vec![f64::NAN; n],
            method: SolverMethod::BruteForce,
        }),
    }
}

/// Visits all permutations of `p[k..]` in lexicographic order of
/// generation.
fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// The pair set `{(g_i, xi_1(g'_j)) : gamma_ij > 0}`.
pub fn support_pairs(plan: &TransportPlan, inst: &TransportInstance) -> Result<MonotonePairSet> {
    let pairs = plan
        .support()
        .into_iter()
        .map(|(i, j, _)| (inst.mu.point(i), inst.nu.point(j).horizontal()))
        .collect();
    MonotonePairSet::new(pairs, inst.tol_h)
}

/// c H-cyclic monotonicity of the plan support. Meaningful on instances
/// where the optimal plan also solves the problem with all cells admitted,
/// which the generators arrange.
pub fn support_monotonicity_check(
    plan: &TransportPlan,
    inst: &TransportInstance,
    max_len: usize,
    tol: f64,
) -> Result<MonotoneReport> {
    if !plan.value.is_finite() {
        return Err(usage("plan value must be finite"));
    }
    let set = support_pairs(plan, inst)?;
    check_c_h_cyclic_monotone(&set, inst.cost.as_ref(), max_len, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapEntry {
    pub mu_index: usize,
    pub point: GroupPoint,
    /// Chosen element of the certified subdifferential intersection.
    pub v: HorizontalVector,
    /// `v - xi_1(g)`.
    pub displacement: HorizontalVector,
    /// `g exp(v - xi_1(g))`.
    pub image: GroupPoint,
    /// The nu atom at the image, if any.
    pub nu_index: Option<usize>,
    /// Number of candidates certified by every potential.
    pub certified_candidates: usize,
    pub singleton: bool,
    pub plan_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapReport {
    pub entries: Vec<MapEntry>,
    /// Number of potentials in the family (one per support point).
    pub potentials: usize,
    pub non_singleton_atoms: usize,
}

impl MapReport {
    pub fn map(&self) -> Vec<Option<usize>> {
        self.entries.iter().map(|e| e.nu_index).collect()
    }
}

/// Builds one Rockafellar potential per support point, intersects the
/// certified subgradients each potential admits at every mu atom, and maps
/// `g -> g exp(v - xi_1(g))` with the certified `v` carrying the most plan
/// mass.
pub fn extract_potential_and_map(plan: &TransportPlan, inst: &TransportInstance) -> Result<MapReport> {
    let c = inst.cost.as_ref();
    invert_gradient(c, &inst.mu.point(0), HorizontalVector::ZERO)?;
    let set = support_pairs(plan, inst)?;
    let graph = HGraph::build(&set, c);
    let tol = PLAN_TOL;
    let tables = graph
        .nodes
        .iter()
        .map(|g| potential_on_graph(&graph, c, g, tol))
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::with_capacity(inst.mu.len());
    for i in 0..inst.mu.len() {
        let g = inst.mu.point(i);
        let node = graph
            .index_of(&g)
            .ok_or_else(|| Error::Inconsistent(format!("mu atom {i} carries no plan mass")))?;
        let neighbours: Vec<usize> = graph.out[node].iter().map(|&e| graph.edges[e].to).collect();
        let pool: Vec<(usize, HorizontalVector)> = (0..inst.nu.len())
            .filter(|&j| inst.profit(i, j).is_some())
            .map(|j| (j, inst.nu.point(j).horizontal()))
            .collect();
        let certified: Vec<(usize, HorizontalVector)> = pool
            .into_iter()
            .filter(|(_, v)| {
                tables.iter().all(|t| {
                    let Some(fi) = t.value_at(&g) else { return true };
                    neighbours.iter().all(|&k| {
                        let gk = graph.nodes[k];
                        let fk = t.value_at(&gk).expect("neighbours share the reachable set");
                        let scale = fi.abs().max(fk.abs()).max(1.0);
                        fk >= fi + c.increment(&g, &gk, *v) - tol * scale
                    })
                })
            })
            .collect();
        let (j, v) = certified
            .iter()
            .copied()
            .fold(None, |best: Option<(usize, HorizontalVector)>, cand| match best {
                Some(b) if plan.coupling[i][b.0] >= plan.coupling[i][cand.0] => Some(b),
                _ => Some(cand),
            })
            .ok_or_else(|| {
                Error::Inconsistent(format!("no candidate is certified by every potential at mu atom {i}"))
            })?;
        let displacement = v - g.horizontal();
        let image = g.translate_horizontal(displacement);
        let nu_index = (0..inst.nu.len()).find(|&k| {
            inst.nu
                .point(k)
                .coords()
                .iter()
                .zip(image.coords())
                .all(|(a, b)| (a - b).abs() <= MAP_MATCH_TOL * a.abs().max(1.0))
        });
        entries.push(MapEntry {
            mu_index: i,
            point: g,
            v,
            displacement,
            image,
            nu_index,
            certified_candidates: certified.len(),
            singleton: certified.len() == 1,
            plan_mass: plan.coupling[i][j],
        });
    }
    let non_singleton_atoms = entries.iter().filter(|e| !e.singleton).count();
    Ok(MapReport {
        entries,
        potentials: tables.len(),
        non_singleton_atoms,
    })
}
