//! Primal network simplex for the transportation problem
//! `max sum x_ij C_ij` subject to row sums `a_i` and column sums `b_j`,
//! over an explicit set of allowed cells.
//!
//! The network has one node per row, one per column and a root. Phase I
//! starts from the artificial tree (`row -> root`, `root -> column`) and
//! drives the artificial flow out; Phase II fixes artificial capacities at
//! zero and optimizes the profit. Entering and leaving arcs follow Bland's
//! smallest-index rule.

const REDUCED_COST_EPS: f64 = 1e-12;
const FLOW_EPS: f64 = 1e-14;

#[derive(Debug, Clone)]
struct Arc {
    from: usize,
    to: usize,
    cost: f64,
    capacity: f64,
    flow: f64,
    artificial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportationSolution {
    /// Flow per allowed cell, in the order the cells were given.
    pub flows: Vec<f64>,
    /// `phi[i] + psi[j] >= C_ij` on allowed cells, equality where the cell
    /// is basic.
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimplexOutcome {
    Optimal(TransportationSolution),
    /// Phase I could not remove this much artificial flow.
    Infeasible {
        residual: f64,
    },
}

struct Network {
    n_nodes: usize,
    root: usize,
    arcs: Vec<Arc>,
    basic: Vec<bool>,
}

impl Network {
    /// Potentials with `pi[root] = 0` and `pi[to] = pi[from] + cost` on
    /// basic arcs.
    fn potentials(&self) -> Vec<f64> {
        let tree = self.tree_adjacency();
        let mut pi = vec![f64::NAN; self.n_nodes];
        pi[self.root] = 0.0;
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            for &a in &tree[v] {
                let arc = &self.arcs[a];
                let (w, value) = if arc.from == v {
                    (arc.to, pi[v] + arc.cost)
                } else {
                    (arc.from, pi[v] - arc.cost)
                };
                if pi[w].is_nan() {
                    pi[w] = value;
                    stack.push(w);
                }
            }
        }
        pi
    }

    fn tree_adjacency(&self) -> Vec<Vec<usize>> {
        let mut tree = vec![Vec::new(); self.n_nodes];
        for (a, arc) in self.arcs.iter().enumerate() {
            if self.basic[a] {
                tree[arc.from].push(a);
                tree[arc.to].push(a);
            }
        }
        tree
    }

    /// Tree path from `src` to `dst` as `(arc, forward)` pairs, where
    /// `forward` means the arc points along the walk.
    fn tree_path(&self, src: usize, dst: usize) -> Vec<(usize, bool)> {
        let tree = self.tree_adjacency();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.n_nodes];
        let mut seen = vec![false; self.n_nodes];
        seen[src] = true;
        let mut stack = vec![src];
        while let Some(v) = stack.pop() {
            if v == dst {
                break;
            }
            for &a in &tree[v] {
                let arc = &self.arcs[a];
                let w = if arc.from == v { arc.to } else { arc.from };
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, a));
                    stack.push(w);
                }
            }
        }
        let mut path = Vec::new();
        let mut v = dst;
        while v != src {
            let (u, a) = parent[v].expect("basis is a spanning tree");
            path.push((a, self.arcs[a].from == u));
            v = u;
        }
        path.reverse();
        path
    }

    /// Runs simplex pivots on the current costs until no eligible arc
    /// remains. Returns the number of pivots.
    fn optimize(&mut self, allow_artificial_entry: bool) -> usize {
        let mut pivots = 0;
        loop {
            let pi = self.potentials();
            let entering = (0..self.arcs.len()).find(|&a| {
                let arc = &self.arcs[a];
                !self.basic[a]
                    && (allow_artificial_entry || !arc.artificial)
                    && arc.capacity - arc.flow > FLOW_EPS
                    && arc.cost + pi[arc.from] - pi[arc.to] < -REDUCED_COST_EPS
            });
            let Some(e) = entering else { return pivots };
            let (from, to) = (self.arcs[e].from, self.arcs[e].to);
            // Cycle: e (forward), then the tree path from `to` back to `from`.
            let mut cycle = vec![(e, true)];
            cycle.extend(self.tree_path(to, from));
            let residual = |(a, fwd): (usize, bool)| {
                let arc = &self.arcs[a];
                if fwd {
                    arc.capacity - arc.flow
                } else {
                    arc.flow
                }
            };
            let theta = cycle
                .iter()
                .map(|&x| residual(x))
                .fold(f64::INFINITY, f64::min)
                .max(0.0);
            assert!(theta.is_finite(), "transportation problems are bounded");
            let leaving = cycle
                .iter()
                .filter(|&&x| residual(x) <= theta + FLOW_EPS)
                .map(|&(a, _)| a)
                .min()
                .expect("some arc blocks the cycle");
            for &(a, fwd) in &cycle {
                let arc = &mut self.arcs[a];
                if fwd {
                    arc.flow += theta;
                } else {
                    arc.flow -= theta;
                    if arc.flow < FLOW_EPS {
                        arc.flow = 0.0;
                    }
                }
            }
            if leaving != e {
                self.basic[leaving] = false;
                self.basic[e] = true;
            }
            pivots += 1;
        }
    }
}

/// Solves `max sum x_c profit_c` over `cells = (row, col, profit)` with
/// row sums `supply` and column sums `demand` (equal totals).
pub fn solve_transportation(supply: &[f64], demand: &[f64], cells: &[(usize, usize, f64)]) -> SimplexOutcome {
    let (m, n) = (supply.len(), demand.len());
    let root = m + n;
    let mut arcs: Vec<Arc> = cells
        .iter()
        .map(|&(i, j, _)| Arc {
            from: i,
            to: m + j,
            cost: 0.0,
            capacity: f64::INFINITY,
            flow: 0.0,
            artificial: false,
        })
        .collect();
    for (i, &a) in supply.iter().enumerate() {
        arcs.push(Arc {
            from: i,
            to: root,
            cost: 1.0,
            capacity: f64::INFINITY,
            flow: a,
            artificial: true,
        });
    }
    for (j, &b) in demand.iter().enumerate() {
        arcs.push(Arc {
            from: root,
            to: m + j,
            cost: 1.0,
            capacity: f64::INFINITY,
            flow: b,
            artificial: true,
        });
    }
    let n_real = cells.len();
    let basic = (0..arcs.len()).map(|a| a >= n_real).collect();
    let mut net = Network {
        n_nodes: m + n + 1,
        root,
        arcs,
        basic,
    };

    let mut pivots = net.optimize(true);
    let residual: f64 = net.arcs[n_real..].iter().map(|a| a.flow).sum();
    let scale = supply.iter().sum::<f64>().max(1.0);
    if residual > 1e-9 * scale {
        return SimplexOutcome::Infeasible { residual };
    }

    for (a, arc) in net.arcs.iter_mut().enumerate() {
        if a < n_real {
            arc.cost = -cells[a].2;
        } else {
            arc.cost = 0.0;
            arc.capacity = 0.0;
            arc.flow = 0.0;
        }
    }
    pivots += net.optimize(false);

    let pi = net.potentials();
    SimplexOutcome::Optimal(TransportationSolution {
        flows: net.arcs[..n_real].iter().map(|a| a.flow).collect(),
        phi: pi[..m].to_vec(),
        psi: pi[m..m + n].iter().map(|p| -p).collect(),
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(o: SimplexOutcome) -> TransportationSolution {
        match o {
            SimplexOutcome::Optimal(s) => s,
            SimplexOutcome::Infeasible { residual } => panic!("infeasible, residual {residual}"),
        }
    }

    #[test]
    fn two_by_two() {
        let cells = vec![(0, 0, 1.0), (0, 1, 3.0), (1, 0, 2.0), (1, 1, 1.0)];
        let s = optimal(solve_transportation(&[0.5, 0.5], &[0.5, 0.5], &cells));
        assert_eq!(s.flows, vec![0.0, 0.5, 0.5, 0.0]);
        let value: f64 = s.flows.iter().zip(&cells).map(|(x, c)| x * c.2).sum();
        let dual: f64 = 0.5 * (s.phi.iter().sum::<f64>() + s.psi.iter().sum::<f64>());
        assert!((value - dual).abs() < 1e-12);
        for &(i, j, c) in &cells {
            assert!(s.phi[i] + s.psi[j] >= c - 1e-12);
        }
    }

    #[test]
    fn unequal_sizes_and_weights() {
        // Two rows, three columns.
        let cells = vec![(0, 0, 5.0), (0, 1, 1.0), (1, 1, 4.0), (1, 2, 2.0), (0, 2, 0.0)];
        let s = optimal(solve_transportation(&[0.6, 0.4], &[0.3, 0.5, 0.2], &cells));
        let value: f64 = s.flows.iter().zip(&cells).map(|(x, c)| x * c.2).sum();
        // rows: 0 sends 0.3 to col0 and 0.3 to col1 or col2; row1 sends 0.4.
        // best: x00=0.3, x11=0.4, x01=0.1, x02=0.2 -> 1.5+1.6+0.1+0 = 3.2
        // alt:  x00=0.3, x01=0.3, x11=0.2, x12=0.2 -> 1.5+0.3+0.8+0.4 = 3.0
        assert!((value - 3.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_when_column_unreachable() {
        let cells = vec![(0, 0, 1.0), (1, 0, 1.0)];
        assert!(matches!(
            solve_transportation(&[0.5, 0.5], &[0.5, 0.5], &cells),
            SimplexOutcome::Infeasible { .. }
        ));
    }
}
