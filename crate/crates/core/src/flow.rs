//! Edmonds–Karp max-flow over exact rationals.
//!
//! Augmenting paths are chosen by BFS in edge insertion order, so results are
//! deterministic and invariant under scaling all capacities.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use crate::model::Rational;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    residual: Rational,
    capacity: Rational,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    arcs: Vec<Arc>,
    adjacency: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            adjacency: vec![Vec::new(); nodes],
        }
    }

    /// Adds `from → to` with the given capacity and returns its arc id.
    pub fn add_edge(&mut self, from: usize, to: usize, capacity: Rational) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc {
            to,
            residual: capacity.clone(),
            capacity,
        });
        self.arcs.push(Arc {
            to: from,
            residual: Rational::zero(),
            capacity: Rational::zero(),
        });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    pub fn flow(&self, arc: usize) -> Rational {
        &self.arcs[arc].capacity - &self.arcs[arc].residual
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> Rational {
        let mut total = Rational::zero();
        loop {
            let mut via: Vec<Option<usize>> = vec![None; self.adjacency.len()];
            let mut seen = vec![false; self.adjacency.len()];
            seen[source] = true;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for &a in &self.adjacency[u] {
                    let v = self.arcs[a].to;
                    if !seen[v] && self.arcs[a].residual.is_positive() {
                        seen[v] = true;
                        via[v] = Some(a);
                        queue.push_back(v);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }
            let mut bottleneck: Option<Rational> = None;
            let mut v = sink;
            while let Some(a) = via[v] {
                let r = &self.arcs[a].residual;
                if bottleneck.as_ref().is_none_or(|b| r < b) {
                    bottleneck = Some(r.clone());
                }
                v = self.arcs[a ^ 1].to;
            }
            let push = bottleneck.expect("augmenting path has at least one arc");
            let mut v = sink;
            while let Some(a) = via[v] {
                self.arcs[a].residual -= &push;
                self.arcs[a ^ 1].residual += &push;
                v = self.arcs[a ^ 1].to;
            }
            total += push;
        }
    }

    /// Nodes reachable from `source` through arcs with positive residual.
    pub fn reachable_from(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adjacency.len()];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &a in &self.adjacency[u] {
                let v = self.arcs[a].to;
                if !seen[v] && self.arcs[a].residual.is_positive() {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Nodes that can reach `sink` through arcs with positive residual.
    pub fn reaching(&self, sink: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adjacency.len()];
        seen[sink] = true;
        let mut stack = vec![sink];
        while let Some(v) = stack.pop() {
            // arcs into v are the reverses of v's outgoing list entries
            for &rev in &self.adjacency[v] {
                let a = rev ^ 1;
                let u = self.arcs[rev].to;
                if !seen[u] && self.arcs[a].residual.is_positive() {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}
