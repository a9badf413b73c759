//! Independent reference solvers for tests.
//!
//! The DC-OPF oracle formulates the problem on its own, with line flows
//! substituted out (`f = -b * dtheta`), generator lower bounds shifted away and
//! free angles split into positive and negative parts. It is solved by a dense
//! two-phase tableau simplex with Bland's rule, sharing no code with the
//! engine's LP path.

#![allow(dead_code)]

use std::collections::VecDeque;

use gridres::grid::Network;

const EPS: f64 = 1e-9;

/// `min c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0`.
#[derive(Debug, Default, Clone)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DenseOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    // m rows of width `cols + 1`, last entry is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over the current basis; `allowed` masks entering columns.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> bool {
        loop {
            // Reduced costs: c_j - c_B B^-1 A_j.
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for (i, row) in self.rows.iter().enumerate() {
                    rc -= cost[self.basis[i]] * row[j];
                }
                if rc < -EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > EPS {
                    let ratio = row[self.cols] / row[c];
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - EPS || (ratio <= lr + EPS && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
    }
}

pub fn solve_dense(lp: &DenseLp) -> DenseOutcome {
    let n = lp.c.len();
    let m_ub = lp.a_ub.len();
    let m = m_ub + lp.a_eq.len();
    // Columns: structural n, slacks m_ub, artificials m.
    let cols = n + m_ub + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![0.0; cols + 1];
        let (a, b) = if i < m_ub {
            (&lp.a_ub[i], lp.b_ub[i])
        } else {
            (&lp.a_eq[i - m_ub], lp.b_eq[i - m_ub])
        };
        row[..n].copy_from_slice(a);
        if i < m_ub {
            row[n + i] = 1.0;
        }
        row[cols] = b;
        if b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[n + m_ub + i] = 1.0;
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (0..m).map(|i| n + m_ub + i).collect(),
        cols,
    };

    let mut phase1 = vec![0.0; cols];
    for v in &mut phase1[n + m_ub..] {
        *v = 1.0;
    }
    t.optimize(&phase1, &vec![true; cols]);
    let infeas: f64 = t
        .basis
        .iter()
        .zip(&t.rows)
        .filter(|(b, _)| **b >= n + m_ub)
        .map(|(_, r)| r[cols])
        .sum();
    if infeas > 1e-7 {
        return DenseOutcome::Infeasible;
    }
    // Drive zero-level artificials out; drop rows that are redundant.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n + m_ub {
            if let Some(j) = (0..n + m_ub).find(|&j| t.rows[i][j].abs() > EPS) {
                t.pivot(i, j);
                i += 1;
            } else {
                t.rows.remove(i);
                t.basis.remove(i);
            }
        } else {
            i += 1;
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.c);
    let allowed: Vec<bool> = (0..cols).map(|j| j < n + m_ub).collect();
    if !t.optimize(&cost, &allowed) {
        return DenseOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[i][cols];
        }
    }
    let objective = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    DenseOutcome::Optimal { x, objective }
}

/// Connected components by breadth-first search; returns a label per bus.
pub fn bfs_components(network: &Network, removed: &[bool]) -> Vec<usize> {
    let n = network.buses().len();
    let mut adj = vec![Vec::new(); n];
    for (l, &gone) in removed.iter().enumerate().take(network.lines().len()) {
        if !gone {
            let (a, b) = network.endpoints(l);
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([s]);
        label[s] = next;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// Minimum total shed for one hour, MW, or `None` if infeasible.
pub fn oracle_min_shed(
    network: &Network,
    demand: &[f64],
    outaged: &[bool],
    enforce_gen_min: bool,
) -> Option<f64> {
    let nb = network.buses().len();
    let ng = network.generators().len();
    let labels = bfs_components(network, outaged);
    // Angle column per bus: None for the first bus of each component.
    let mut seen = vec![false; nb];
    let mut theta_col = vec![None; nb];
    let mut next = ng + nb;
    for bus in 0..nb {
        if seen[labels[bus]] {
            theta_col[bus] = Some(next);
            next += 2;
        } else {
            seen[labels[bus]] = true;
        }
    }
    let n = next;
    let mut lp = DenseLp {
        c: vec![0.0; n],
        ..DenseLp::default()
    };
    // Shift p = lo + p'.
    let lo: Vec<f64> = network
        .generators()
        .iter()
        .map(|g| if enforce_gen_min { g.p_min } else { 0.0 })
        .collect();
    for (i, g) in network.generators().iter().enumerate() {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        lp.a_ub.push(row);
        lp.b_ub.push(g.p_max - lo[i]);
    }
    for bus in 0..nb {
        lp.c[ng + bus] = 1.0;
        let mut row = vec![0.0; n];
        row[ng + bus] = 1.0;
        lp.a_ub.push(row);
        lp.b_ub.push(demand[bus]);
    }
    // Adds coef * theta_bus into a row.
    let add_theta = |row: &mut Vec<f64>, bus: usize, coef: f64| {
        if let Some(col) = theta_col[bus] {
            row[col] += coef;
            row[col + 1] -= coef;
        }
    };

    let mut balance = vec![vec![0.0; n]; nb];
    let mut balance_rhs: Vec<f64> = demand.iter().map(|d| -d).collect();
    for (l, line) in network.lines().iter().enumerate() {
        if outaged[l] {
            continue;
        }
        let (fr, to) = network.endpoints(l);
        let b = line.susceptance;
        // dtheta = theta_fr - theta_to; flow = -b * dtheta.
        let mut dtheta = vec![0.0; n];
        add_theta(&mut dtheta, fr, 1.0);
        add_theta(&mut dtheta, to, -1.0);
        let flow: Vec<f64> = dtheta.iter().map(|v| -b * v).collect();
        lp.a_ub.push(flow.clone());
        lp.b_ub.push(line.flow_limit);
        lp.a_ub.push(flow.iter().map(|v| -v).collect());
        lp.b_ub.push(line.flow_limit);
        lp.a_ub.push(dtheta.clone());
        lp.b_ub.push(line.angle_max);
        lp.a_ub.push(dtheta.iter().map(|v| -v).collect());
        lp.b_ub.push(-line.angle_min);
        for (j, v) in flow.iter().enumerate() {
            balance[fr][j] += v;
            balance[to][j] -= v;
        }
    }
    for (i, _) in network.generators().iter().enumerate() {
        let bus = network.generator_bus(i);
        balance[bus][i] -= 1.0;
        balance_rhs[bus] += lo[i];
    }
    for bus in 0..nb {
        balance[bus][ng + bus] -= 1.0;
    }
    lp.a_eq = balance;
    lp.b_eq = balance_rhs;
    match solve_dense(&lp) {
        DenseOutcome::Optimal { objective, .. } => Some(objective),
        DenseOutcome::Infeasible => None,
        DenseOutcome::Unbounded => panic!("shed LP cannot be unbounded"),
    }
}

/// Beta-prime CDF by quadrature. Substituting `u = x^alpha` turns the
/// integrable singularity at 0 into a smooth integrand:
/// `F(x) = 1/(alpha B(alpha, beta)) * int_0^{x^alpha} (1 + u^{1/alpha})^{-(alpha+beta)} du`.
/// `B` itself comes from the same integral taken to infinity, split at `x = 1`
/// with `x -> 1/x` on the tail.
pub fn beta_prime_cdf(x: f64, alpha: f64, beta: f64) -> f64 {
    let head = |upper_u: f64| {
        simpson(
            |u: f64| (1.0 + u.powf(1.0 / alpha)).powf(-(alpha + beta)),
            0.0,
            upper_u,
            200_000,
        ) / alpha
    };
    // int_1^inf x^{a-1} (1+x)^{-a-b} dx = int_0^1 y^{b-1} (1+y)^{-a-b} dy
    let tail = simpson(
        |y: f64| y.powf(beta - 1.0) * (1.0 + y).powf(-(alpha + beta)),
        0.0,
        1.0,
        200_000,
    );
    let total = head(1.0) + tail;
    head(x.powf(alpha)) / total
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}
