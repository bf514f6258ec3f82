//! Task graphs: a DAG of application components where nodes carry CPU-cycle
//! costs and edges carry the data volume passed between components.
//!
//! A [`RawTaskGraph`] is whatever was read from disk or built by hand. It only
//! becomes a [`TaskGraph`] through [`validate`], which enforces the structural
//! rules the partitioner relies on: acyclic, a single designated output with
//! no successors, and no "useless" components that feed nothing.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense component index, `0..|V|`.
pub type ComponentId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: ComponentId,
    /// CPU cycles needed to execute the component.
    pub cycles: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: ComponentId,
    pub dst: ComponentId,
    /// Bits handed from `src` to `dst`.
    pub bits: f64,
}

/// Unvalidated task graph, the on-disk form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTaskGraph {
    pub components: Vec<Component>,
    pub edges: Vec<Edge>,
    pub output: ComponentId,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("task graph has no components")]
    Empty,
    #[error("component ids must be exactly 0..{expected}, found {found}")]
    NonDenseIds { expected: usize, found: ComponentId },
    #[error("edge ({src}, {dst}) references an unknown component")]
    UnknownEndpoint { src: ComponentId, dst: ComponentId },
    #[error("output component {0} does not exist")]
    UnknownOutput(ComponentId),
    #[error("duplicate edge ({src}, {dst})")]
    DuplicateEdge { src: ComponentId, dst: ComponentId },
    #[error("negative weight on {0}")]
    NegativeWeight(String),
    #[error("non-finite weight on {0}")]
    NonFiniteWeight(String),
    #[error("task graph contains a directed cycle")]
    Cyclic,
    #[error("output component {0} has an outgoing edge")]
    OutputHasSuccessor(ComponentId),
    #[error("component {0} is not the output and has no outgoing edge")]
    DanglingComponent(ComponentId),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskGraphError {
    #[error("unknown component id {0}")]
    UnknownId(ComponentId),
}

/// A validated task graph. Immutable; adjacency is precomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTaskGraph", into = "RawTaskGraph")]
pub struct TaskGraph {
    cycles: Vec<f64>,
    labels: Vec<Option<String>>,
    edges: Vec<Edge>,
    output: ComponentId,
    // (successor, bits), sorted by successor id
    succ: Vec<Vec<(ComponentId, f64)>>,
    // (predecessor, bits), sorted by predecessor id
    pred: Vec<Vec<(ComponentId, f64)>>,
}

/// Topological order of a validated graph. The output component is last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopoOrder(pub Vec<ComponentId>);

impl TopoOrder {
    pub fn as_slice(&self) -> &[ComponentId] {
        &self.0
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &ComponentId> {
        self.0.iter()
    }
}

fn check_weight(value: f64, what: impl FnOnce() -> String) -> Result<(), ValidationError> {
    if !value.is_finite() {
        return Err(ValidationError::NonFiniteWeight(what()));
    }
    if value < 0.0 {
        return Err(ValidationError::NegativeWeight(what()));
    }
    Ok(())
}

/// Validates a raw graph against all structural invariants.
///
/// Checks run in a fixed order (ids, endpoints, duplicates, weights, cycles,
/// output, dangling) so that a graph violating several rules always reports
/// the same error.
pub fn validate(raw: RawTaskGraph) -> Result<TaskGraph, ValidationError> {
    let n = raw.components.len();
    if n == 0 {
        return Err(ValidationError::Empty);
    }

    let mut cycles = vec![f64::NAN; n];
    let mut labels = vec![None; n];
    let mut seen = vec![false; n];
    for c in raw.components {
        if c.id >= n || seen[c.id] {
            return Err(ValidationError::NonDenseIds { expected: n, found: c.id });
        }
        seen[c.id] = true;
        check_weight(c.cycles, || format!("component {}", c.id))?;
        cycles[c.id] = c.cycles;
        labels[c.id] = c.label;
    }
    if raw.output >= n {
        return Err(ValidationError::UnknownOutput(raw.output));
    }

    let mut succ: Vec<Vec<(ComponentId, f64)>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<(ComponentId, f64)>> = vec![Vec::new(); n];
    let mut pairs = BTreeSet::new();
    for e in &raw.edges {
        if e.src >= n || e.dst >= n {
            return Err(ValidationError::UnknownEndpoint { src: e.src, dst: e.dst });
        }
        if !pairs.insert((e.src, e.dst)) {
            return Err(ValidationError::DuplicateEdge { src: e.src, dst: e.dst });
        }
        check_weight(e.bits, || format!("edge ({}, {})", e.src, e.dst))?;
        succ[e.src].push((e.dst, e.bits));
        pred[e.dst].push((e.src, e.bits));
    }
    for list in succ.iter_mut().chain(pred.iter_mut()) {
        list.sort_by_key(|&(id, _)| id);
    }

    if kahn(&succ, &pred).len() != n {
        return Err(ValidationError::Cyclic);
    }
    if !succ[raw.output].is_empty() {
        return Err(ValidationError::OutputHasSuccessor(raw.output));
    }
    if let Some(id) = (0..n).find(|&i| i != raw.output && succ[i].is_empty()) {
        return Err(ValidationError::DanglingComponent(id));
    }

    let mut edges = raw.edges;
    edges.sort_by_key(|e| (e.src, e.dst));
    Ok(TaskGraph { cycles, labels, edges, output: raw.output, succ, pred })
}

// Kahn's algorithm with a min-heap frontier: among zero in-degree nodes the
// smallest id is removed first. Returns fewer than |V| ids iff there is a cycle.
fn kahn(succ: &[Vec<(ComponentId, f64)>], pred: &[Vec<(ComponentId, f64)>]) -> Vec<ComponentId> {
    let n = succ.len();
    let mut indegree: Vec<usize> = pred.iter().map(Vec::len).collect();
    let mut frontier: BinaryHeap<Reverse<ComponentId>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = frontier.pop() {
        order.push(i);
        for &(j, _) in &succ[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                frontier.push(Reverse(j));
            }
        }
    }
    order
}

/// Topological order by Kahn's algorithm, smallest id first on ties.
pub fn topo_sort(graph: &TaskGraph) -> TopoOrder {
    let order = kahn(&graph.succ, &graph.pred);
    debug_assert_eq!(order.len(), graph.len());
    debug_assert_eq!(order.last(), Some(&graph.output));
    TopoOrder(order)
}

/// Out-neighbours of `id`, sorted ascending.
pub fn successors(graph: &TaskGraph, id: ComponentId) -> Result<Vec<ComponentId>, TaskGraphError> {
    graph
        .succ
        .get(id)
        .map(|s| s.iter().map(|&(j, _)| j).collect())
        .ok_or(TaskGraphError::UnknownId(id))
}

impl TaskGraph {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn output(&self) -> ComponentId {
        self.output
    }

    pub fn cycles(&self, id: ComponentId) -> f64 {
        self.cycles[id]
    }

    pub fn label(&self, id: ComponentId) -> Option<&str> {
        self.labels[id].as_deref()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(successor, bits)` pairs of `id`. Panics on an unknown id.
    pub fn out_edges(&self, id: ComponentId) -> &[(ComponentId, f64)] {
        &self.succ[id]
    }

    /// `(predecessor, bits)` pairs of `id`. Panics on an unknown id.
    pub fn in_edges(&self, id: ComponentId) -> &[(ComponentId, f64)] {
        &self.pred[id]
    }

    /// Components without incoming edges.
    pub fn sources(&self) -> impl Iterator<Item = ComponentId> + '_ {
        (0..self.len()).filter(|&i| self.pred[i].is_empty())
    }

    /// True when every component has at most one successor and one predecessor.
    pub fn is_chain(&self) -> bool {
        self.succ.iter().all(|s| s.len() <= 1) && self.pred.iter().all(|p| p.len() <= 1)
    }

    /// Same shape with every cycle count and data volume multiplied.
    pub fn scaled(&self, cycle_factor: f64, bit_factor: f64) -> TaskGraph {
        let mut raw = RawTaskGraph::from(self.clone());
        for c in &mut raw.components {
            c.cycles *= cycle_factor;
        }
        for e in &mut raw.edges {
            e.bits *= bit_factor;
        }
        validate(raw).expect("scaling by non-negative factors preserves validity")
    }
}

impl TryFrom<RawTaskGraph> for TaskGraph {
    type Error = ValidationError;

    fn try_from(raw: RawTaskGraph) -> Result<Self, Self::Error> {
        validate(raw)
    }
}

impl From<TaskGraph> for RawTaskGraph {
    fn from(g: TaskGraph) -> Self {
        let components = g
            .cycles
            .iter()
            .zip(g.labels)
            .enumerate()
            .map(|(id, (&cycles, label))| Component { id, cycles, label })
            .collect();
        RawTaskGraph { components, edges: g.edges, output: g.output }
    }
}

/// Convenience builder for unlabeled graphs: `cycles[i]` is component `i`.
pub fn build(
    cycles: &[f64],
    edges: &[(ComponentId, ComponentId, f64)],
    output: ComponentId,
) -> Result<TaskGraph, ValidationError> {
    validate(RawTaskGraph {
        components: cycles
            .iter()
            .enumerate()
            .map(|(id, &cycles)| Component { id, cycles, label: None })
            .collect(),
        edges: edges.iter().map(|&(src, dst, bits)| Edge { src, dst, bits }).collect(),
        output,
    })
}

/// Chain `0 -> 1 -> ... -> n-1`, output last.
pub fn chain(cycles: &[f64], bits: &[f64]) -> Result<TaskGraph, ValidationError> {
    assert_eq!(bits.len() + 1, cycles.len(), "a chain of n components has n - 1 edges");
    let edges: Vec<_> = bits.iter().enumerate().map(|(i, &b)| (i, i + 1, b)).collect();
    build(cycles, &edges, cycles.len() - 1)
}
