//! Dinic's algorithm on integer capacities.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: BigInt,
}

/// Residual graph over `nodes` vertices. Arcs are stored in pairs: arc `2k`
/// is the forward arc of edge `k` and `2k+1` its reverse.
#[derive(Debug, Clone)]
pub struct IntNetwork {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    original: Vec<BigInt>,
}

impl IntNetwork {
    pub fn new(nodes: usize) -> Self {
        IntNetwork {
            adj: vec![Vec::new(); nodes],
            arcs: Vec::new(),
            original: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: BigInt) -> usize {
        let id = self.original.len();
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap: cap.clone() });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc {
            to: from,
            cap: BigInt::zero(),
        });
        self.original.push(cap);
        id
    }

    pub fn flow(&self, edge: usize) -> BigInt {
        &self.original[edge] - &self.arcs[2 * edge].cap
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                let arc = &self.arcs[a];
                if arc.cap.is_positive() && level[arc.to] == usize::MAX {
                    level[arc.to] = level[v] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        (level[t] != usize::MAX).then_some(level)
    }

    fn augment(
        &mut self,
        v: usize,
        t: usize,
        limit: &BigInt,
        level: &[usize],
        next: &mut [usize],
    ) -> BigInt {
        if v == t {
            return limit.clone();
        }
        while next[v] < self.adj[v].len() {
            let a = self.adj[v][next[v]];
            let to = self.arcs[a].to;
            if self.arcs[a].cap.is_positive() && level[to] == level[v] + 1 {
                let push = if &self.arcs[a].cap < limit {
                    self.arcs[a].cap.clone()
                } else {
                    limit.clone()
                };
                let got = self.augment(to, t, &push, level, next);
                if got.is_positive() {
                    self.arcs[a].cap -= &got;
                    self.arcs[a ^ 1].cap += &got;
                    return got;
                }
            }
            next[v] += 1;
        }
        BigInt::zero()
    }

    /// Pushes a maximum flow from `s` to `t` and returns its value.
    pub fn max_flow(&mut self, s: usize, t: usize, bound: &BigInt) -> BigInt {
        let mut total = BigInt::zero();
        while let Some(level) = self.levels(s, t) {
            let mut next = vec![0usize; self.adj.len()];
            loop {
                let got = self.augment(s, t, bound, &level, &mut next);
                if got.is_zero() {
                    break;
                }
                total += got;
            }
        }
        total
    }

    /// Vertices reachable from `s` through arcs with positive residual capacity.
    pub fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &a in &self.adj[v] {
                let arc = &self.arcs[a];
                if arc.cap.is_positive() && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }

    /// Vertices that can still reach `t` in the residual graph.
    pub fn reaching(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            for &a in &self.adj[v] {
                // arc a goes v -> w; its partner w -> v has residual arcs[a ^ 1].cap
                let w = self.arcs[a].to;
                if self.arcs[a ^ 1].cap.is_positive() && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}
