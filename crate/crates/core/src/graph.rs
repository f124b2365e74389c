//! Tensor-network graphs for loop architectures, tree decompositions, and
//! treewidth-based contraction-cost estimates.
//!
//! A network graph has one vertex per tensor (input state, coupler, or
//! measurement) and one edge per contracted index. A single loop unrolls
//! into a cycle-free chain; stacked or concatenated loops produce grid-like
//! graphs whose cycles are what make exact contraction expensive. The
//! treewidth of the graph quantifies that: contraction time scales like
//! `T^c · (M+1)^tw` for `T` couplers and `M` photons, so families whose
//! treewidth stays bounded are classically easy and families whose
//! treewidth outgrows `log T` are not.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::arch::{ArchKind, ArchitectureSpec};

/// Exponent of the coupler-count factor in [`cost_estimate`]. The true
/// constant is architecture-dependent; this is a documented heuristic.
pub const COST_COUPLER_EXPONENT: f64 = 3.0;

/// Vertex cap for [`exact_treewidth`].
pub const EXACT_TREEWIDTH_MAX_VERTICES: usize = 20;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex {0} does not exist")]
    NoSuchVertex(usize),

    #[error("self-loops are not allowed (vertex {0})")]
    SelfLoop(usize),

    #[error("graph is empty")]
    Empty,

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph has {0} vertices, above the exact-treewidth cap of {1}")]
    TooLarge(usize, usize),

    #[error("invalid tree decomposition: {0}")]
    InvalidDecomposition(ValidationReport),

    #[error("a family needs at least {needed} instances, got {got}")]
    FamilyTooSmall { needed: usize, got: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// What a graph vertex stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    InputState,
    Coupler,
    Measurement,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::InputState => "input",
            VertexKind::Coupler => "coupler",
            VertexKind::Measurement => "measurement",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "input" => Some(VertexKind::InputState),
            "coupler" => Some(VertexKind::Coupler),
            "measurement" => Some(VertexKind::Measurement),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub kind: VertexKind,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub bond_dim: usize,
}

/// An uncontracted physical output hanging off one vertex.
#[derive(Debug, Clone)]
pub struct OpenEdge {
    pub vertex: usize,
    pub label: String,
}

/// Labeled tensor-network graph with open physical outputs.
#[derive(Debug, Clone, Default)]
pub struct TnGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    open_edges: Vec<OpenEdge>,
}

impl TnGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, kind: VertexKind, label: impl Into<String>) -> usize {
        self.vertices.push(Vertex {
            kind,
            label: label.into(),
        });
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize, bond_dim: usize) -> Result<(), GraphError> {
        let n = self.vertices.len();
        if a >= n {
            return Err(GraphError::NoSuchVertex(a));
        }
        if b >= n {
            return Err(GraphError::NoSuchVertex(b));
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        self.edges.push(Edge { a, b, bond_dim });
        Ok(())
    }

    pub fn add_open_edge(
        &mut self,
        vertex: usize,
        label: impl Into<String>,
    ) -> Result<(), GraphError> {
        if vertex >= self.vertices.len() {
            return Err(GraphError::NoSuchVertex(vertex));
        }
        self.open_edges.push(OpenEdge {
            vertex,
            label: label.into(),
        });
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn open_edges(&self) -> &[OpenEdge] {
        &self.open_edges
    }

    /// Neighbor sets of the underlying simple graph.
    pub fn adjacency(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.vertices.len()];
        for e in &self.edges {
            adj[e.a].insert(e.b);
            adj[e.b].insert(e.a);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.vertices.len()
    }

    fn num_components(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertices.len()];
        let mut comps = 0;
        for start in 0..self.vertices.len() {
            if seen[start] {
                continue;
            }
            comps += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        comps
    }

    /// Number of independent simple cycles (`|E| - |V| + components`,
    /// counting parallel edges once). Zero exactly for forests.
    pub fn cycle_space_dimension(&self) -> usize {
        let distinct: BTreeSet<(usize, usize)> = self
            .edges
            .iter()
            .map(|e| (e.a.min(e.b), e.a.max(e.b)))
            .collect();
        (distinct.len() + self.num_components()).saturating_sub(self.vertices.len())
    }

    /// A copy with every open output terminated by a measurement vertex,
    /// which is the graph whose contraction computes outcome probabilities.
    pub fn close_with_measurements(&self) -> TnGraph {
        let mut g = self.clone();
        let open = std::mem::take(&mut g.open_edges);
        for oe in open {
            let m = g.add_vertex(VertexKind::Measurement, format!("measure_{}", oe.label));
            g.add_edge(oe.vertex, m, 1).expect("fresh vertex");
        }
        g
    }

    /// Serializes to the line-based exchange format: one `v id kind label`
    /// line per vertex, one `e a b bond` line per edge, one `o vertex
    /// label` line per open output.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.vertices.iter().enumerate() {
            out.push_str(&format!("v {} {} {}\n", i, v.kind.as_str(), v.label));
        }
        for e in &self.edges {
            out.push_str(&format!("e {} {} {}\n", e.a, e.b, e.bond_dim));
        }
        for oe in &self.open_edges {
            out.push_str(&format!("o {} {}\n", oe.vertex, oe.label));
        }
        out
    }

    /// Parses the format emitted by [`TnGraph::to_edge_list`]. Blank lines
    /// and `#` comments are ignored.
    pub fn parse_edge_list(text: &str) -> Result<TnGraph, GraphError> {
        let mut g = TnGraph::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: String| GraphError::Parse {
                line: lineno + 1,
                message,
            };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let id: usize = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err("bad vertex id".into()))?;
                    let kind = parts
                        .next()
                        .and_then(VertexKind::parse)
                        .ok_or_else(|| err("bad vertex kind".into()))?;
                    let label = parts.collect::<Vec<_>>().join(" ");
                    if id != g.vertices.len() {
                        return Err(err(format!(
                            "vertex ids must be consecutive, expected {}",
                            g.vertices.len()
                        )));
                    }
                    g.add_vertex(kind, label);
                }
                Some("e") => {
                    let mut num = || -> Result<usize, GraphError> {
                        parts
                            .next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| GraphError::Parse {
                                line: lineno + 1,
                                message: "bad edge field".into(),
                            })
                    };
                    let a = num()?;
                    let b = num()?;
                    let dim = num()?;
                    g.add_edge(a, b, dim).map_err(|e| GraphError::Parse {
                        line: lineno + 1,
                        message: e.to_string(),
                    })?;
                }
                Some("o") => {
                    let vertex: usize = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err("bad open-edge vertex".into()))?;
                    let label = parts.collect::<Vec<_>>().join(" ");
                    g.add_open_edge(vertex, label).map_err(|e| GraphError::Parse {
                        line: lineno + 1,
                        message: e.to_string(),
                    })?;
                }
                Some(tag) => return Err(err(format!("unknown record tag {tag:?}"))),
                None => unreachable!("line is nonempty"),
            }
        }
        Ok(g)
    }
}

/// Builds the output-state network of an architecture. Open edges mark the
/// physical outputs (emitted bins plus surviving loop modes).
#[allow(clippy::needless_range_loop)] // rows and columns index a 2d vertex grid
pub fn build_graph(spec: &ArchitectureSpec) -> Result<TnGraph, GraphError> {
    if spec.validate().is_err() {
        return Err(GraphError::Empty);
    }
    let d = spec.fock_dim;
    let n = spec.num_time_bins;
    let mut g = TnGraph::new();
    match spec.kind {
        ArchKind::SingleLoop => {
            let loop_in = g.add_vertex(VertexKind::InputState, "loop_in");
            let mut prev = loop_in;
            for i in 1..=n {
                let bin_in = g.add_vertex(VertexKind::InputState, format!("bin_in_{i}"));
                let u = g.add_vertex(VertexKind::Coupler, format!("U_{i}"));
                g.add_edge(prev, u, d)?;
                g.add_edge(bin_in, u, d)?;
                g.add_open_edge(u, format!("bin_out_{i}"))?;
                prev = u;
            }
            g.add_open_edge(prev, "loop_out")?;
        }
        ArchKind::LoopTower => {
            let loops = spec.num_loops;
            // couplers[k][i] couples the bin (k = 0) or loops k-1,k upward.
            let mut coupler = vec![vec![0usize; n]; loops];
            for i in 0..n {
                for k in 0..loops {
                    coupler[k][i] =
                        g.add_vertex(VertexKind::Coupler, format!("U_{}_{}", k + 1, i + 1));
                }
            }
            for i in 0..n {
                let bin_in = g.add_vertex(VertexKind::InputState, format!("bin_in_{}", i + 1));
                g.add_edge(bin_in, coupler[0][i], d)?;
                g.add_open_edge(coupler[0][i], format!("bin_out_{}", i + 1))?;
                // Within a step, loop k passes from coupler k to coupler k+1.
                for k in 0..loops - 1 {
                    g.add_edge(coupler[k][i], coupler[k + 1][i], d)?;
                }
            }
            for k in 0..loops {
                let inp = g.add_vertex(VertexKind::InputState, format!("loop{}_in", k + 1));
                g.add_edge(inp, coupler[k][0], d)?;
                // Between steps, loop k re-enters its first coupler: k (the
                // deepest coupler touching loop k within a step) to coupler
                // k at the next step for the top loop, k+1 → k otherwise.
                let last_touch = if k + 1 < loops { k + 1 } else { k };
                for i in 0..n - 1 {
                    g.add_edge(coupler[last_touch][i], coupler[k][i + 1], d)?;
                }
                g.add_open_edge(coupler[last_touch][n - 1], format!("loop{}_out", k + 1))?;
            }
        }
        ArchKind::LoopChain => {
            let loops = spec.num_loops;
            let mut coupler = vec![vec![0usize; n]; loops];
            for i in 0..n {
                for k in 0..loops {
                    coupler[k][i] =
                        g.add_vertex(VertexKind::Coupler, format!("U_{}_{}", k + 1, i + 1));
                }
            }
            for i in 0..n {
                let bin_in = g.add_vertex(VertexKind::InputState, format!("bin_in_{}", i + 1));
                // The bin threads every loop's coupler top to bottom.
                g.add_edge(bin_in, coupler[0][i], d)?;
                for k in 0..loops - 1 {
                    g.add_edge(coupler[k][i], coupler[k + 1][i], d)?;
                }
                g.add_open_edge(coupler[loops - 1][i], format!("bin_out_{}", i + 1))?;
            }
            for k in 0..loops {
                let inp = g.add_vertex(VertexKind::InputState, format!("loop{}_in", k + 1));
                g.add_edge(inp, coupler[k][0], d)?;
                for i in 0..n - 1 {
                    g.add_edge(coupler[k][i], coupler[k][i + 1], d)?;
                }
                g.add_open_edge(coupler[k][n - 1], format!("loop{}_out", k + 1))?;
            }
        }
        ArchKind::TritterCylinder => {
            let rows = spec.num_loops; // one tritter (and local loop) per row
            let mut tritter = vec![vec![0usize; n]; rows];
            for i in 0..n {
                for k in 0..rows {
                    tritter[k][i] =
                        g.add_vertex(VertexKind::Coupler, format!("T_{}_{}", k + 1, i + 1));
                }
            }
            for i in 0..n {
                for k in 0..rows {
                    let bin_in =
                        g.add_vertex(VertexKind::InputState, format!("bin_in_{}_{}", k + 1, i + 1));
                    g.add_edge(bin_in, tritter[k][i], d)?;
                    g.add_open_edge(tritter[k][i], format!("bin_out_{}_{}", k + 1, i + 1))?;
                }
                // Shared loop runs down each column...
                for k in 0..rows - 1 {
                    g.add_edge(tritter[k][i], tritter[k + 1][i], d)?;
                }
                // ...and wraps to the top of the next column.
                if i + 1 < n {
                    g.add_edge(tritter[rows - 1][i], tritter[0][i + 1], d)?;
                }
            }
            let shared_in = g.add_vertex(VertexKind::InputState, "shared_loop_in");
            g.add_edge(shared_in, tritter[0][0], d)?;
            g.add_open_edge(tritter[rows - 1][n - 1], "shared_loop_out")?;
            for k in 0..rows {
                let inp = g.add_vertex(VertexKind::InputState, format!("loop{}_in", k + 1));
                g.add_edge(inp, tritter[k][0], d)?;
                for i in 0..n - 1 {
                    g.add_edge(tritter[k][i], tritter[k][i + 1], d)?;
                }
                g.add_open_edge(tritter[k][n - 1], format!("loop{}_out", k + 1))?;
            }
        }
    }
    Ok(g)
}

/// A bag-tree over the vertices of some [`TnGraph`]. Bag `i` is attached
/// to the tree node `i`; `tree_edges` connect tree nodes.
#[derive(Debug, Clone)]
pub struct TreeDecomposition {
    pub bags: Vec<BTreeSet<usize>>,
    pub tree_edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn new(bags: Vec<BTreeSet<usize>>, tree_edges: Vec<(usize, usize)>) -> Self {
        Self { bags, tree_edges }
    }

    /// Width of the decomposition: the largest bag size minus one.
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(0).saturating_sub(1)
    }
}

/// One violated decomposition rule, with a witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleViolation {
    /// The bag graph is not a single connected acyclic tree.
    NotATree,
    /// A tree edge references a missing bag.
    BadTreeEdge(usize, usize),
    /// A bag mentions a vertex the graph does not have.
    UnknownVertex { bag: usize, vertex: usize },
    /// Rule 1: this graph vertex appears in no bag.
    VertexUncovered(usize),
    /// Rule 2: no bag contains both endpoints of this edge.
    EdgeUncovered(usize, usize),
    /// Rule 3: the bags containing this vertex do not form a connected
    /// subtree.
    OccurrenceDisconnected(usize),
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleViolation::NotATree => write!(f, "bag graph is not a tree"),
            RuleViolation::BadTreeEdge(a, b) => write!(f, "tree edge ({a}, {b}) is out of range"),
            RuleViolation::UnknownVertex { bag, vertex } => {
                write!(f, "bag {bag} mentions unknown vertex {vertex}")
            }
            RuleViolation::VertexUncovered(v) => write!(f, "vertex {v} appears in no bag"),
            RuleViolation::EdgeUncovered(a, b) => {
                write!(f, "edge ({a}, {b}) has no bag containing both endpoints")
            }
            RuleViolation::OccurrenceDisconnected(v) => {
                write!(f, "bags containing vertex {v} do not form a connected subtree")
            }
        }
    }
}

/// Result of checking a decomposition against the three bag rules.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<RuleViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            write!(f, "{}", msgs.join("; "))
        }
    }
}

/// Checks the tree shape plus the three bag rules: every vertex covered,
/// every edge co-bagged somewhere, and every vertex's bags forming a
/// connected subtree.
pub fn validate(td: &TreeDecomposition, g: &TnGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let nb = td.bags.len();

    for &(a, b) in &td.tree_edges {
        if a >= nb || b >= nb {
            report.violations.push(RuleViolation::BadTreeEdge(a, b));
        }
    }
    if !report.violations.is_empty() {
        return report;
    }

    // Tree shape: connected and acyclic over the bag nodes.
    let mut adj = vec![Vec::new(); nb];
    for &(a, b) in &td.tree_edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let tree_ok = if nb == 0 {
        false
    } else {
        let mut seen = vec![false; nb];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == nb && td.tree_edges.len() == nb - 1
    };
    if !tree_ok {
        report.violations.push(RuleViolation::NotATree);
    }

    let nv = g.num_vertices();
    for (bag_id, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if v >= nv {
                report.violations.push(RuleViolation::UnknownVertex {
                    bag: bag_id,
                    vertex: v,
                });
            }
        }
    }

    // Rule 1.
    for v in 0..nv {
        if !td.bags.iter().any(|b| b.contains(&v)) {
            report.violations.push(RuleViolation::VertexUncovered(v));
        }
    }

    // Rule 2.
    for e in g.edges() {
        if !td
            .bags
            .iter()
            .any(|b| b.contains(&e.a) && b.contains(&e.b))
        {
            report.violations.push(RuleViolation::EdgeUncovered(e.a, e.b));
        }
    }

    // Rule 3: occurrence sets are connected in the tree.
    if tree_ok {
        for v in 0..nv {
            let holders: Vec<usize> = (0..nb).filter(|&i| td.bags[i].contains(&v)).collect();
            if holders.len() <= 1 {
                continue;
            }
            let inside: Vec<bool> = (0..nb).map(|i| td.bags[i].contains(&v)).collect();
            let mut seen = vec![false; nb];
            let mut stack = vec![holders[0]];
            seen[holders[0]] = true;
            let mut reached = 1;
            while let Some(x) = stack.pop() {
                for &y in &adj[x] {
                    if inside[y] && !seen[y] {
                        seen[y] = true;
                        reached += 1;
                        stack.push(y);
                    }
                }
            }
            if reached != holders.len() {
                report
                    .violations
                    .push(RuleViolation::OccurrenceDisconnected(v));
            }
        }
    }

    report
}

/// Width of `td` after validating it against `g`; reports the violated
/// rule otherwise.
pub fn validated_width(td: &TreeDecomposition, g: &TnGraph) -> Result<usize, GraphError> {
    let report = validate(td, g);
    if !report.is_valid() {
        return Err(GraphError::InvalidDecomposition(report));
    }
    Ok(td.width())
}

/// Vertex-selection rule of the elimination-ordering heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EliminationHeuristic {
    /// Eliminate the vertex adding the fewest fill-in edges.
    MinFill,
    /// Eliminate the vertex of smallest remaining degree.
    MinDegree,
}

impl EliminationHeuristic {
    pub fn as_str(self) -> &'static str {
        match self {
            EliminationHeuristic::MinFill => "min_fill",
            EliminationHeuristic::MinDegree => "min_degree",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "min_fill" => Some(EliminationHeuristic::MinFill),
            "min_degree" => Some(EliminationHeuristic::MinDegree),
            _ => None,
        }
    }
}

/// Upper-bounds the treewidth via a greedy elimination ordering and also
/// returns the tree decomposition realizing the bound. Ties between
/// candidate vertices break toward the smallest vertex id, so results are
/// deterministic. Disconnected graphs are rejected.
pub fn treewidth_upper_bound(
    g: &TnGraph,
    heuristic: EliminationHeuristic,
) -> Result<(usize, TreeDecomposition), GraphError> {
    if g.num_vertices() == 0 {
        return Err(GraphError::Empty);
    }
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let n = g.num_vertices();
    let mut adj = g.adjacency();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut bags: Vec<BTreeSet<usize>> = Vec::with_capacity(n);

    while let Some(&first) = alive.iter().next() {
        let mut best = first;
        let mut best_score = usize::MAX;
        for &v in &alive {
            let score = match heuristic {
                EliminationHeuristic::MinDegree => adj[v].len(),
                EliminationHeuristic::MinFill => {
                    let nbrs: Vec<usize> = adj[v].iter().copied().collect();
                    let mut fill = 0;
                    for (i, &x) in nbrs.iter().enumerate() {
                        for &y in &nbrs[i + 1..] {
                            if !adj[x].contains(&y) {
                                fill += 1;
                            }
                        }
                    }
                    fill
                }
            };
            if score < best_score {
                best_score = score;
                best = v;
            }
        }

        let v = best;
        let mut bag: BTreeSet<usize> = adj[v].clone();
        bag.insert(v);
        bags.push(bag);
        order.push(v);

        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[i + 1..] {
                adj[x].insert(y);
                adj[y].insert(x);
            }
        }
        for &x in &nbrs {
            adj[x].remove(&v);
        }
        adj[v].clear();
        alive.remove(&v);
    }

    // Attach each bag to the bag of the first-eliminated vertex among its
    // later members; the last bag hangs off its predecessor.
    let mut elim_index = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        elim_index[v] = i;
    }
    let mut tree_edges = Vec::with_capacity(bags.len().saturating_sub(1));
    for (i, bag) in bags.iter().enumerate() {
        if i + 1 == bags.len() {
            break;
        }
        let parent = bag
            .iter()
            .filter(|&&w| elim_index[w] > i)
            .min_by_key(|&&w| elim_index[w])
            .map(|&w| elim_index[w])
            .unwrap_or(i + 1);
        tree_edges.push((i, parent));
    }

    let td = TreeDecomposition::new(bags, tree_edges);
    Ok((td.width(), td))
}

/// Exact treewidth by dynamic programming over vertex subsets. Exponential
/// in the vertex count and capped at [`EXACT_TREEWIDTH_MAX_VERTICES`];
/// meant as a test oracle for small graphs.
pub fn exact_treewidth(g: &TnGraph) -> Result<usize, GraphError> {
    let n = g.num_vertices();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if n > EXACT_TREEWIDTH_MAX_VERTICES {
        return Err(GraphError::TooLarge(n, EXACT_TREEWIDTH_MAX_VERTICES));
    }
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let adj_sets = g.adjacency();
    let adj: Vec<u32> = adj_sets
        .iter()
        .map(|s| s.iter().fold(0u32, |m, &v| m | (1 << v)))
        .collect();

    // q(T, v): neighbors outside T∪{v} reachable from v through T.
    let q = |t: u32, v: usize| -> u32 {
        let tv = t | (1 << v);
        let mut comp = 1u32 << v;
        loop {
            let mut grown = comp;
            let mut bits = comp;
            while bits != 0 {
                let u = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                grown |= adj[u] & tv;
            }
            if grown == comp {
                break;
            }
            comp = grown;
        }
        let mut boundary = 0u32;
        let mut bits = comp;
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            boundary |= adj[u];
        }
        (boundary & !tv).count_ones()
    };

    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let mut best = vec![u8::MAX; (full as usize) + 1];
    best[0] = 0;
    for s in 1..=full {
        let mut s_best = u8::MAX;
        let mut bits = s;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = s & !(1 << v);
            let deg = q(rest, v) as u8;
            let candidate = best[rest as usize].max(deg);
            if candidate < s_best {
                s_best = candidate;
            }
        }
        best[s as usize] = s_best;
    }
    Ok(best[full as usize] as usize)
}

/// Per-instance contraction-cost estimate from the scaling law
/// `T^c · (M+1)^tw`, reported as a natural log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub log_cost: f64,
}

pub fn cost_estimate(num_couplers: usize, total_photons: usize, treewidth: usize) -> CostEstimate {
    CostEstimate {
        log_cost: COST_COUPLER_EXPONENT * (num_couplers as f64).ln()
            + treewidth as f64 * ((total_photons + 1) as f64).ln(),
    }
}

/// How a family of instances scales, judged from its treewidth trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityClass {
    /// Treewidth stays constant across the family.
    Tractable,
    /// Treewidth grows no faster than `log T`.
    QuasiPolynomial,
    /// Treewidth outgrows `log T`.
    Hard,
}

impl ComplexityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ComplexityClass::Tractable => "tractable",
            ComplexityClass::QuasiPolynomial => "quasi-polynomial",
            ComplexityClass::Hard => "hard",
        }
    }
}

/// One instance of a scaling family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilyPoint {
    pub num_couplers: usize,
    pub treewidth: usize,
}

/// Classifies a family by the growth of treewidth against `log T`. At
/// least two instances of different size are required: a single instance
/// cannot witness an asymptotic class.
pub fn classify_family(points: &[FamilyPoint]) -> Result<ComplexityClass, GraphError> {
    if points.len() < 2 {
        return Err(GraphError::FamilyTooSmall {
            needed: 2,
            got: points.len(),
        });
    }
    let mut sorted: Vec<FamilyPoint> = points.to_vec();
    sorted.sort_by_key(|p| p.num_couplers);
    let first = sorted.first().unwrap();
    let last = sorted.last().unwrap();
    if last.treewidth <= first.treewidth {
        return Ok(ComplexityClass::Tractable);
    }
    // Compare the treewidth growth against logarithmic growth in T.
    let r_first = first.treewidth as f64 / ((first.num_couplers + 1) as f64).ln();
    let r_last = last.treewidth as f64 / ((last.num_couplers + 1) as f64).ln();
    if r_last <= r_first * 1.1 {
        Ok(ComplexityClass::QuasiPolynomial)
    } else {
        Ok(ComplexityClass::Hard)
    }
}
