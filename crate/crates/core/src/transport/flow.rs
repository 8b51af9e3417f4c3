//! Min-cost flow by successive shortest augmenting paths with Dijkstra and
//! node potentials.
//!
//! Capacities are `f64` so that integer-scaled problems stay exact (every
//! integer below 2^53 is representable) while real-valued marginals still
//! work. Costs must be nonnegative.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Clone, Copy, Debug)]
struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

#[derive(Clone, Debug)]
pub struct MinCostFlow {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    original_cap: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowResult {
    pub flow: f64,
    pub cost: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes], edges: Vec::new(), original_cap: Vec::new() }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Adds `u → v` and its residual twin; returns the forward edge id.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, cost: f64) -> usize {
        assert!(cost >= 0.0, "negative arc cost {cost}");
        assert!(cap >= 0.0, "negative capacity {cap}");
        let id = self.edges.len();
        self.edges.push(Edge { to: v, cap, cost });
        self.edges.push(Edge { to: u, cap: 0.0, cost: -cost });
        self.original_cap.push(cap);
        self.original_cap.push(0.0);
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }

    /// Flow currently on forward edge `id`.
    pub fn flow_on(&self, id: usize) -> f64 {
        self.edges[id ^ 1].cap
    }

    /// Sends up to `limit` units from `s` to `t` at minimum cost. Residual
    /// amounts at or below `eps` count as zero.
    pub fn run(&mut self, s: usize, t: usize, limit: f64, eps: f64) -> FlowResult {
        let n = self.num_nodes();
        let mut potential = vec![0.0; n];
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut sent = 0.0;
        let mut cost = 0.0;
        let mut heap = BinaryHeap::new();

        while limit - sent > eps {
            dist.fill(f64::INFINITY);
            parent.fill(usize::MAX);
            done.fill(false);
            dist[s] = 0.0;
            heap.push(HeapEntry { dist: 0.0, node: s });
            while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
                if done[u] {
                    continue;
                }
                done[u] = true;
                for &e in &self.adj[u] {
                    let edge = self.edges[e];
                    if edge.cap <= eps {
                        continue;
                    }
                    // Reduced costs are nonnegative up to rounding.
                    let reduced = (edge.cost + potential[u] - potential[edge.to]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[edge.to] {
                        dist[edge.to] = nd;
                        parent[edge.to] = e;
                        heap.push(HeapEntry { dist: nd, node: edge.to });
                    }
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            let cap_t = dist[t];
            for v in 0..n {
                potential[v] += dist[v].min(cap_t);
            }

            let mut push = limit - sent;
            let mut v = t;
            while v != s {
                let e = parent[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = parent[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                cost += push * self.edges[e].cost;
                v = self.edges[e ^ 1].to;
            }
            sent += push;
        }
        FlowResult { flow: sent, cost }
    }

    /// Resets all flows to zero.
    pub fn reset(&mut self) {
        for (e, c) in self.edges.iter_mut().zip(&self.original_cap) {
            e.cap = *c;
        }
    }
}
