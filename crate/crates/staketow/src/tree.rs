//! Boundary-payment graphs and root-reward trees.
//!
//! A boundary-payment graph is a finite connected graph whose vertex set
//! splits into open-play vertices and boundary vertices carrying a payment.
//! A root-reward tree is the special case of a tree whose boundary is its
//! leaf set and whose payment is the indicator of one leaf, the root. The
//! tree carries its structural decomposition (basic partition, journey
//! data, essence map) computed once at construction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::num::Real;

/// Errors rejecting a graph input document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    MalformedInput(String),
    DisconnectedGraph,
    EmptyBoundary,
    EmptyOpenSet,
    MissingPayment(String),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::MalformedInput(msg) => write!(f, "malformed input: {msg}"),
            GraphError::DisconnectedGraph => write!(f, "graph is not connected"),
            GraphError::EmptyBoundary => write!(f, "boundary set is empty"),
            GraphError::EmptyOpenSet => write!(f, "open-play set is empty"),
            GraphError::MissingPayment(id) => write!(f, "missing payment for boundary vertex {id}"),
        }
    }
}

impl std::error::Error for GraphError {}

/// Errors rejecting a graph that is not a root-reward tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    NotATree,
    NotIndicatorPayment,
    RootNotLeaf,
    BoundaryLeafMismatch,
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::NotATree => write!(f, "graph is not a tree"),
            TreeError::NotIndicatorPayment => {
                write!(f, "payment is not an indicator of a single boundary vertex")
            }
            TreeError::RootNotLeaf => write!(f, "reward vertex is not a leaf"),
            TreeError::BoundaryLeafMismatch => {
                write!(f, "boundary set does not equal the leaf set")
            }
        }
    }
}

impl std::error::Error for TreeError {}

/// Error for operations restricted to open-play vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexNotOpen {
    pub id: String,
}

impl fmt::Display for VertexNotOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vertex {} is not in open play", self.id)
    }
}

impl std::error::Error for VertexNotOpen {}

#[derive(Deserialize)]
struct GraphDoc {
    vertices: Vec<String>,
    edges: Vec<(String, String)>,
    boundary: Vec<String>,
    #[serde(default)]
    payments: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    root: Option<String>,
}

/// A finite connected simple graph with boundary vertices and payments.
///
/// Vertex ids are opaque strings; internally vertices are indexed in
/// lexicographic id order, which fixes every tie-break in the crate.
#[derive(Debug, Clone)]
pub struct BoundaryPaymentGraph<F> {
    ids: Vec<String>,
    adj: Vec<Vec<usize>>,
    boundary: Vec<bool>,
    payment: Vec<Option<F>>,
}

impl<F: Real> BoundaryPaymentGraph<F> {
    /// Builds a graph from explicit parts. Ids are sorted internally.
    pub fn new(
        vertices: Vec<String>,
        edges: &[(String, String)],
        boundary: &[String],
        payments: &[(String, F)],
    ) -> Result<Self, GraphError> {
        let mut ids = vertices;
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(GraphError::MalformedInput("duplicate vertex id".into()));
        }
        if ids.is_empty() {
            return Err(GraphError::MalformedInput("empty vertex set".into()));
        }
        let index = |id: &str| -> Result<usize, GraphError> {
            ids.binary_search_by(|probe| probe.as_str().cmp(id))
                .map_err(|_| GraphError::MalformedInput(format!("unknown vertex id {id}")))
        };
        let n = ids.len();
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (a, b) in edges {
            let (ia, ib) = (index(a)?, index(b)?);
            if ia == ib {
                return Err(GraphError::MalformedInput(format!("loop at vertex {a}")));
            }
            let key = (ia.min(ib), ia.max(ib));
            if !seen.insert(key) {
                return Err(GraphError::MalformedInput(format!(
                    "duplicate edge {a}-{b}"
                )));
            }
            adj[ia].push(ib);
            adj[ib].push(ia);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut is_boundary = vec![false; n];
        for id in boundary {
            is_boundary[index(id)?] = true;
        }
        if !is_boundary.iter().any(|&b| b) {
            return Err(GraphError::EmptyBoundary);
        }
        if is_boundary.iter().all(|&b| b) {
            return Err(GraphError::EmptyOpenSet);
        }
        let mut payment = vec![None; n];
        for (id, p) in payments {
            let i = index(id)?;
            if !is_boundary[i] {
                return Err(GraphError::MalformedInput(format!(
                    "payment on non-boundary vertex {id}"
                )));
            }
            if !p.is_finite() || *p < F::zero() {
                return Err(GraphError::MalformedInput(format!(
                    "payment at {id} is not a nonnegative real"
                )));
            }
            payment[i] = Some(*p);
        }
        for i in 0..n {
            if is_boundary[i] && payment[i].is_none() {
                return Err(GraphError::MissingPayment(ids[i].clone()));
            }
        }
        let g = BoundaryPaymentGraph {
            ids,
            adj,
            boundary: is_boundary,
            payment,
        };
        if !g.is_connected() {
            return Err(GraphError::DisconnectedGraph);
        }
        Ok(g)
    }

    /// Parses the JSON graph document format.
    ///
    /// `{"vertices":[id..], "edges":[[id,id]..], "boundary":[id..],
    ///   "payments":{id:number..}, "root":id}` — when `root` is present and
    /// `payments` is omitted, the payment defaults to the indicator of the
    /// root.
    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc =
            serde_json::from_str(text).map_err(|e| GraphError::MalformedInput(e.to_string()))?;
        let payments: Vec<(String, F)> = match (&doc.payments, &doc.root) {
            (Some(map), _) => map
                .iter()
                .map(|(id, &p)| (id.clone(), F::cast(p)))
                .collect(),
            (None, Some(root)) => {
                if !doc.boundary.contains(root) {
                    return Err(GraphError::MalformedInput(format!(
                        "root {root} is not a boundary vertex"
                    )));
                }
                doc.boundary
                    .iter()
                    .map(|id| {
                        let p = if id == root { F::one() } else { F::zero() };
                        (id.clone(), p)
                    })
                    .collect()
            }
            (None, None) => {
                return Err(GraphError::MissingPayment(
                    doc.boundary.first().cloned().unwrap_or_default(),
                ))
            }
        };
        Self::new(doc.vertices, &doc.edges, &doc.boundary, &payments)
    }

    fn is_connected(&self) -> bool {
        let n = self.ids.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &self.adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == n
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    pub fn is_tree(&self) -> bool {
        self.edge_count() + 1 == self.vertex_count()
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn index(&self, id: &str) -> Option<usize> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn payment(&self, v: usize) -> Option<F> {
        self.payment[v]
    }

    pub fn open_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(move |&v| !self.boundary[v])
    }

    pub fn boundary_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(move |&v| self.boundary[v])
    }

    /// Each undirected edge once, as an ordered index pair.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ids.len()).flat_map(move |v| {
            self.adj[v]
                .iter()
                .filter(move |&&u| u > v)
                .map(move |&u| (v, u))
        })
    }
}

/// Parses the JSON graph document format. See
/// [`BoundaryPaymentGraph::from_json_str`].
pub fn parse_graph<F: Real>(text: &str) -> Result<BoundaryPaymentGraph<F>, GraphError> {
    BoundaryPaymentGraph::from_json_str(text)
}

/// Journey data of a vertex: the ordered `(span, depth)` pairs describing
/// its position across the basic subtrees between root and vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JourneyData {
    pub pairs: Vec<(u32, u32)>,
}

impl JourneyData {
    /// `d_+` of the owning vertex: the sum of the depths.
    pub fn d_plus(&self) -> u32 {
        self.pairs.iter().map(|&(_, d)| d).sum()
    }

    /// `d_-` of the owning vertex: remaining depth in the last subtree.
    pub fn d_minus(&self) -> u32 {
        let &(s, d) = self.pairs.last().expect("journey data is nonempty");
        s - d
    }
}

/// One basic subtree of the partition: its root, span, and edge set
/// (each edge keyed by its child endpoint).
#[derive(Debug, Clone)]
pub struct BasicSubtree {
    pub root: usize,
    pub span: u32,
    pub edge_children: Vec<usize>,
}

/// The partition of a root-reward tree into basic subtrees.
#[derive(Debug, Clone)]
pub struct BasicPartition {
    pub subtrees: Vec<BasicSubtree>,
}

/// The essence tree of a root-reward tree together with the collapsing map.
#[derive(Debug, Clone)]
pub struct EssenceMap {
    pub essence: RootRewardTree,
    /// `phi[v]` is the essence-tree index of source vertex `v`.
    pub phi: Vec<usize>,
}

/// A rooted tree whose leaves form the boundary, with payment one at the
/// root leaf and zero at every other leaf (never stored per-leaf).
#[derive(Debug, Clone)]
pub struct RootRewardTree {
    ids: Vec<String>,
    adj: Vec<Vec<usize>>,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<u32>,
    /// Distance from each vertex to its nearest descendant non-reward leaf.
    down_dist: Vec<u32>,
    min_children: Vec<Vec<usize>>,
    partition: BasicPartition,
    /// Basic-subtree index of each non-root vertex's parent edge.
    edge_subtree: Vec<Option<usize>>,
    journeys: Vec<JourneyData>,
}

impl RootRewardTree {
    /// Builds a root-reward tree from vertex ids, edges and the root id.
    /// The boundary is implicitly the leaf set.
    pub fn new(
        vertices: Vec<String>,
        edges: &[(String, String)],
        root: &str,
    ) -> Result<Self, TreeError> {
        let n = vertices.len();
        let mut ids = vertices;
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(TreeError::NotATree);
        }
        let index = |id: &str| ids.binary_search_by(|p| p.as_str().cmp(id)).ok();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in edges {
            let (Some(ia), Some(ib)) = (index(a), index(b)) else {
                return Err(TreeError::NotATree);
            };
            adj[ia].push(ib);
            adj[ib].push(ia);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let Some(root) = index(root) else {
            return Err(TreeError::NotATree);
        };
        Self::from_adjacency(ids, adj, root)
    }

    /// Interprets a boundary-payment graph as a root-reward tree.
    pub fn from_graph<F: Real>(g: &BoundaryPaymentGraph<F>) -> Result<Self, TreeError> {
        if !g.is_tree() {
            return Err(TreeError::NotATree);
        }
        let mut reward = None;
        for v in g.boundary_vertices() {
            let p = g.payment(v).expect("boundary carries payment");
            if p == F::one() {
                if reward.is_some() {
                    return Err(TreeError::NotIndicatorPayment);
                }
                reward = Some(v);
            } else if p != F::zero() {
                return Err(TreeError::NotIndicatorPayment);
            }
        }
        let Some(root) = reward else {
            return Err(TreeError::NotIndicatorPayment);
        };
        if g.neighbors(root).len() != 1 {
            return Err(TreeError::RootNotLeaf);
        }
        for v in 0..g.vertex_count() {
            let is_leaf = g.neighbors(v).len() == 1;
            if is_leaf != g.is_boundary(v) {
                return Err(TreeError::BoundaryLeafMismatch);
            }
        }
        Self::from_adjacency(g.ids.clone(), g.adj.clone(), root)
    }

    fn from_adjacency(
        ids: Vec<String>,
        adj: Vec<Vec<usize>>,
        root: usize,
    ) -> Result<Self, TreeError> {
        let n = ids.len();
        let edge_total: usize = adj.iter().map(|l| l.len()).sum::<usize>() / 2;
        if n < 3 || edge_total + 1 != n {
            return Err(TreeError::NotATree);
        }
        if adj[root].len() != 1 {
            return Err(TreeError::RootNotLeaf);
        }
        // Orient away from the root; detect disconnection (cycles are
        // impossible once |E| = |V| - 1 and the BFS covers every vertex).
        let mut parent = vec![None; n];
        let mut depth = vec![0u32; n];
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    parent[u] = Some(v);
                    depth[u] = depth[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        if order.len() != n {
            return Err(TreeError::NotATree);
        }
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = parent[v] {
                children[p].push(v);
            }
        }
        for list in &mut children {
            list.sort_unstable();
        }
        // Distance to the nearest descendant non-reward leaf, bottom-up.
        let mut down_dist = vec![u32::MAX; n];
        for &v in order.iter().rev() {
            if children[v].is_empty() {
                down_dist[v] = 0;
            } else {
                let best = children[v].iter().map(|&c| down_dist[c]).min().unwrap();
                down_dist[v] = best + 1;
            }
        }
        let min_children: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                if children[v].is_empty() {
                    Vec::new()
                } else {
                    let best = children[v].iter().map(|&c| down_dist[c]).min().unwrap();
                    children[v]
                        .iter()
                        .copied()
                        .filter(|&c| down_dist[c] == best)
                        .collect()
                }
            })
            .collect();
        let mut tree = RootRewardTree {
            ids,
            adj,
            root,
            parent,
            children,
            depth,
            down_dist,
            min_children,
            partition: BasicPartition {
                subtrees: Vec::new(),
            },
            edge_subtree: vec![None; n],
            journeys: Vec::new(),
        };
        tree.build_partition();
        tree.build_journeys();
        Ok(tree)
    }

    /// Shortest-span-first carving into basic subtrees.
    fn build_partition(&mut self) {
        let n = self.ids.len();
        let mut stack = vec![self.root];
        let mut comp_down = vec![0u32; n];
        while let Some(cr) = stack.pop() {
            let unassigned: Vec<usize> = self.children_unassigned(cr);
            if unassigned.is_empty() {
                continue;
            }
            // Depth-first list of the component below cr (unassigned edges).
            let mut comp_order = vec![cr];
            let mut i = 0;
            while i < comp_order.len() {
                let v = comp_order[i];
                i += 1;
                let kids = if v == cr {
                    self.children_unassigned(cr)
                } else {
                    self.children[v].clone()
                };
                comp_order.extend(kids);
            }
            for &v in comp_order.iter().rev() {
                let kids = if v == cr {
                    self.children_unassigned(cr)
                } else {
                    self.children[v].clone()
                };
                comp_down[v] = match kids.iter().map(|&c| comp_down[c]).min() {
                    Some(best) => best + 1,
                    None => 0,
                };
            }
            let span = comp_down[cr];
            let subtree_index = self.partition.subtrees.len();
            // Edges on minimum-depth root-to-leaf paths form the subtree.
            let mut edge_children = Vec::new();
            let mut frontier = vec![(cr, 0u32)];
            let mut new_roots = BTreeSet::new();
            while let Some((v, d)) = frontier.pop() {
                let kids = if v == cr {
                    self.children_unassigned(cr)
                } else {
                    self.children[v].clone()
                };
                for c in kids {
                    if d + 1 + comp_down[c] == span {
                        self.edge_subtree[c] = Some(subtree_index);
                        edge_children.push(c);
                        frontier.push((c, d + 1));
                    } else {
                        new_roots.insert(v);
                    }
                }
            }
            edge_children.sort_unstable();
            self.partition.subtrees.push(BasicSubtree {
                root: cr,
                span,
                edge_children,
            });
            // Remaining forest components, lexicographically first popped
            // next (stack is pushed in reverse).
            for &r in new_roots.iter().rev() {
                stack.push(r);
            }
        }
    }

    fn children_unassigned(&self, v: usize) -> Vec<usize> {
        self.children[v]
            .iter()
            .copied()
            .filter(|&c| self.edge_subtree[c].is_none())
            .collect()
    }

    fn build_journeys(&mut self) {
        let n = self.ids.len();
        let mut journeys = Vec::with_capacity(n);
        for v in 0..n {
            if v == self.root {
                let s0 = self.partition.subtrees[0].span;
                journeys.push(JourneyData {
                    pairs: vec![(s0, 0)],
                });
                continue;
            }
            // Path edges from root down to v, grouped by subtree.
            let mut edges_up = Vec::new();
            let mut cur = v;
            while let Some(p) = self.parent[cur] {
                edges_up.push(cur);
                cur = p;
            }
            let mut pairs: Vec<(u32, u32)> = Vec::new();
            let mut last_subtree = usize::MAX;
            for &child in edges_up.iter().rev() {
                let st = self.edge_subtree[child].expect("every edge is assigned");
                if st == last_subtree {
                    pairs.last_mut().unwrap().1 += 1;
                } else {
                    pairs.push((self.partition.subtrees[st].span, 1));
                    last_subtree = st;
                }
            }
            journeys.push(JourneyData { pairs });
        }
        self.journeys = journeys;
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn index(&self, id: &str) -> Option<usize> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.adj[v].len() == 1
    }

    /// Leaves are the boundary; everything else is open play.
    pub fn is_open(&self, v: usize) -> bool {
        !self.is_leaf(v)
    }

    pub fn open_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(move |&v| self.is_open(v))
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(move |&v| self.is_leaf(v))
    }

    /// Payment at a boundary vertex: one at the root, zero elsewhere.
    pub fn payment<F: Real>(&self, v: usize) -> F {
        if v == self.root {
            F::one()
        } else {
            F::zero()
        }
    }

    /// Distance from `v` to its nearest descendant non-reward leaf.
    pub fn down_dist(&self, v: usize) -> u32 {
        self.down_dist[v]
    }

    /// Distance from `v` to the root.
    pub fn depth(&self, v: usize) -> u32 {
        self.depth[v]
    }

    /// The children of `v` minimizing distance to the non-reward boundary.
    pub fn min_children(&self, v: usize) -> Result<&[usize], VertexNotOpen> {
        if !self.is_open(v) {
            return Err(VertexNotOpen {
                id: self.ids[v].clone(),
            });
        }
        Ok(&self.min_children[v])
    }

    /// Lexicographically least element of `min_children`, for default play.
    pub fn min_child(&self, v: usize) -> Result<usize, VertexNotOpen> {
        Ok(self.min_children(v)?[0])
    }

    pub fn journey_data(&self, v: usize) -> &JourneyData {
        &self.journeys[v]
    }

    pub fn basic_partition(&self) -> &BasicPartition {
        &self.partition
    }

    /// `(d_+, d_-)`: distance to the root, and remaining distance to the
    /// far end of a minimum-length root-through-v-to-leaf path.
    pub fn d_plus_minus(&self, v: usize) -> (u32, u32) {
        (self.depth[v], self.down_dist[v])
    }

    /// Collapses every basic subtree onto a path, preserving journey data.
    pub fn essence(&self) -> EssenceMap {
        let n = self.ids.len();
        let mut phi = vec![usize::MAX; n];
        let mut ess_parent: Vec<usize> = Vec::new(); // parent in creation index
        let mut created = 0usize;
        for (st_idx, st) in self.partition.subtrees.iter().enumerate() {
            let base = if created == 0 {
                phi[self.root] = 0;
                ess_parent.push(usize::MAX);
                created = 1;
                0
            } else {
                phi[st.root]
            };
            // One fresh chain vertex per depth below the base.
            let mut chain = vec![base];
            for _ in 0..st.span {
                ess_parent.push(*chain.last().unwrap());
                chain.push(created);
                created += 1;
            }
            // Map subtree vertices by depth within the subtree.
            let mut frontier: Vec<(usize, u32)> = st
                .edge_children
                .iter()
                .filter(|&&c| self.parent[c] == Some(st.root))
                .map(|&c| (c, 1))
                .collect();
            while let Some((v, d)) = frontier.pop() {
                phi[v] = chain[d as usize];
                for &c in &self.children[v] {
                    if self.edge_subtree[c] == Some(st_idx) {
                        frontier.push((c, d + 1));
                    }
                }
            }
        }
        // Synthetic ids in creation order keep lexicographic = creation.
        let width = created.to_string().len().max(3);
        let ess_ids: Vec<String> = (0..created).map(|i| format!("n{i:0width$}")).collect();
        let edges: Vec<(String, String)> = (1..created)
            .map(|i| (ess_ids[ess_parent[i]].clone(), ess_ids[i].clone()))
            .collect();
        let essence = RootRewardTree::new(ess_ids.clone(), &edges, &ess_ids[0])
            .expect("essence construction yields a root-reward tree");
        // Translate creation indices to the essence tree's sorted indices.
        let translate: Vec<usize> = (0..created)
            .map(|i| essence.index(&ess_ids[i]).expect("created id exists"))
            .collect();
        let phi = phi.into_iter().map(|e| translate[e]).collect();
        EssenceMap { essence, phi }
    }

    /// The tree as a boundary-payment graph with indicator payment.
    pub fn to_graph<F: Real>(&self) -> BoundaryPaymentGraph<F> {
        let boundary: Vec<bool> = (0..self.ids.len()).map(|v| self.is_leaf(v)).collect();
        let payment: Vec<Option<F>> = (0..self.ids.len())
            .map(|v| boundary[v].then(|| self.payment::<F>(v)))
            .collect();
        BoundaryPaymentGraph {
            ids: self.ids.clone(),
            adj: self.adj.clone(),
            boundary,
            payment,
        }
    }
}

/// Seeded random root-reward tree: uniform attachment with degree cap 4,
/// re-rooted at a uniformly chosen leaf.
pub fn random_root_reward_tree(
    seed: u64,
    min_vertices: usize,
    max_vertices: usize,
) -> RootRewardTree {
    assert!(min_vertices >= 4 && max_vertices >= min_vertices);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(min_vertices..=max_vertices);
    let mut degree = vec![0usize; n];
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n - 1);
    for v in 1..n {
        let candidates: Vec<usize> = (0..v).filter(|&u| degree[u] < 4).collect();
        let target = candidates[rng.gen_range(0..candidates.len())];
        edges.push((target, v));
        degree[target] += 1;
        degree[v] += 1;
    }
    let leaves: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let root = leaves[rng.gen_range(0..leaves.len())];
    let width = n.to_string().len().max(2);
    let ids: Vec<String> = (0..n).map(|i| format!("v{i:0width$}")).collect();
    let named: Vec<(String, String)> = edges
        .iter()
        .map(|&(a, b)| (ids[a].clone(), ids[b].clone()))
        .collect();
    RootRewardTree::new(ids.clone(), &named, &ids[root]).expect("generator builds valid trees")
}
