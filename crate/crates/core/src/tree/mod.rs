//! Decision-tree state index.
//!
//! Leaves of the tree are the MDP states. A state keeps its id for its whole
//! life: when a leaf is split, the first child inherits the id and the other
//! children get fresh ids appended at the end of the state vector.

mod checkpoint;

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub use checkpoint::{NodeDoc, TreeDoc};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("measurement is missing parameter `{0}`")]
    MissingParameter(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("state {0} is not a leaf of this tree")]
    NotALeaf(StateId),
    #[error("split point {point} is outside ({lo}, {hi}) for parameter `{param}`")]
    PointOutOfRegion {
        param: String,
        point: f64,
        lo: f64,
        hi: f64,
    },
    #[error("split points must be strictly increasing and finite")]
    NonIncreasingPoints,
    #[error("duplicate parameter name `{0}`")]
    DuplicateParameter(String),
    #[error("malformed tree document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for StateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Continuous,
    DiscreteInteger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub kind: ParamKind,
}

/// Ordered set of named parameters every measurement supplies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Parameter>", into = "Vec<Parameter>")]
pub struct ParameterSpace {
    params: Vec<Parameter>,
    #[serde(skip)]
    by_name: HashMap<String, usize>,
}

impl ParameterSpace {
    pub fn new(params: Vec<Parameter>) -> Result<Self, TreeError> {
        let mut by_name = HashMap::with_capacity(params.len());
        for (i, p) in params.iter().enumerate() {
            if by_name.insert(p.name.clone(), i).is_some() {
                return Err(TreeError::DuplicateParameter(p.name.clone()));
            }
        }
        Ok(ParameterSpace { params, by_name })
    }

    pub fn continuous<S: AsRef<str>>(names: &[S]) -> Result<Self, TreeError> {
        Self::new(
            names
                .iter()
                .map(|n| Parameter {
                    name: n.as_ref().to_string(),
                    kind: ParamKind::Continuous,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn name(&self, index: usize) -> &str {
        &self.params[index].name
    }

    pub fn kind(&self, index: usize) -> ParamKind {
        self.params[index].kind
    }

    pub fn index_of(&self, name: &str) -> Result<usize, TreeError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| TreeError::UnknownParameter(name.to_string()))
    }

    /// Builds a measurement from name/value pairs, in space order.
    pub fn measurement<'a, I>(&self, pairs: I) -> Result<Measurement, TreeError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut values = vec![None; self.len()];
        for (name, v) in pairs {
            let i = self.index_of(name)?;
            values[i] = Some(v);
        }
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| TreeError::MissingParameter(self.name(i).to_string())))
            .collect::<Result<Vec<_>, _>>()
            .map(Measurement)
    }
}

impl TryFrom<Vec<Parameter>> for ParameterSpace {
    type Error = TreeError;
    fn try_from(params: Vec<Parameter>) -> Result<Self, Self::Error> {
        ParameterSpace::new(params)
    }
}

impl From<ParameterSpace> for Vec<Parameter> {
    fn from(space: ParameterSpace) -> Self {
        space.params
    }
}

/// Parameter readings, one per parameter of the space, in space order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Measurement(pub Vec<f64>);

impl Measurement {
    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct NodeId(usize);

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Leaf(StateId),
    Decision {
        param: usize,
        points: Vec<f64>,
        children: Vec<NodeId>,
    },
}

/// Half-open interval `[lo, hi)` of one parameter within a leaf region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ALL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v < self.hi
    }

    pub fn strictly_inside(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    space: ParameterSpace,
    nodes: Vec<Node>,
    parent: Vec<Option<(NodeId, usize)>>,
    /// state id -> leaf node
    leaves: Vec<NodeId>,
}

impl DecisionTree {
    /// A tree with a single leaf (state 0) covering the whole space.
    pub fn new(space: ParameterSpace) -> Self {
        DecisionTree {
            space,
            nodes: vec![Node::Leaf(StateId(0))],
            parent: vec![None],
            leaves: vec![NodeId(0)],
        }
    }

    /// Cartesian grid: the first listed parameter splits the root, the next
    /// one splits each of its children, and so on.
    pub fn build_grid(space: ParameterSpace, spec: &[(String, Vec<f64>)]) -> Result<Self, TreeError> {
        let mut tree = DecisionTree::new(space);
        for (name, points) in spec {
            let param = tree.space.index_of(name)?;
            check_increasing(points)?;
            if points.is_empty() {
                continue;
            }
            let current: Vec<StateId> = (0..tree.num_states()).map(StateId).collect();
            for s in current {
                tree.split_leaf_multi(s, param, points)?;
            }
        }
        Ok(tree)
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    /// Number of states, which is also the number of leaves.
    pub fn num_states(&self) -> usize {
        self.leaves.len()
    }

    pub fn classify(&self, m: &Measurement) -> Result<StateId, TreeError> {
        if m.len() != self.space.len() {
            let missing = self.space.name(m.len().min(self.space.len().saturating_sub(1)));
            return Err(TreeError::MissingParameter(missing.to_string()));
        }
        Ok(self.classify_unchecked(m))
    }

    /// Descent without the length check; the caller guarantees `m` matches
    /// the space.
    pub fn classify_unchecked(&self, m: &Measurement) -> StateId {
        let mut node = NodeId(0);
        loop {
            match &self.nodes[node.0] {
                Node::Leaf(s) => return *s,
                Node::Decision {
                    param,
                    points,
                    children,
                } => {
                    let v = m.0[*param];
                    // first index whose split point is > v; a value equal to
                    // a split point goes right
                    let idx = points.partition_point(|c| *c <= v);
                    node = children[idx];
                }
            }
        }
    }

    /// Region of a leaf as one interval per parameter.
    pub fn leaf_box(&self, s: StateId) -> Result<Vec<Interval>, TreeError> {
        let leaf = *self.leaves.get(s.0).ok_or(TreeError::NotALeaf(s))?;
        let mut bounds = vec![Interval::ALL; self.space.len()];
        let mut cur = leaf;
        while let Some((parent, slot)) = self.parent[cur.0] {
            if let Node::Decision { param, points, .. } = &self.nodes[parent.0] {
                let b = &mut bounds[*param];
                if slot > 0 {
                    b.lo = b.lo.max(points[slot - 1]);
                }
                if slot < points.len() {
                    b.hi = b.hi.min(points[slot]);
                }
            }
            cur = parent;
        }
        Ok(bounds)
    }

    /// Interval of a single parameter within a leaf's region.
    pub fn leaf_interval(&self, s: StateId, param: usize) -> Result<Interval, TreeError> {
        Ok(self.leaf_box(s)?[param])
    }

    pub fn split_leaf(&mut self, s: StateId, param: usize, point: f64) -> Result<(StateId, StateId), TreeError> {
        let ids = self.split_leaf_multi(s, param, &[point])?;
        Ok((ids[0], ids[1]))
    }

    /// Validates a split without performing it.
    pub fn check_split(&self, s: StateId, param: usize, points: &[f64]) -> Result<(), TreeError> {
        if param >= self.space.len() {
            return Err(TreeError::UnknownParameter(format!("#{param}")));
        }
        check_increasing(points)?;
        if points.is_empty() {
            return Err(TreeError::NonIncreasingPoints);
        }
        let interval = self.leaf_interval(s, param)?;
        for &p in points {
            if !interval.strictly_inside(p) {
                return Err(TreeError::PointOutOfRegion {
                    param: self.space.name(param).to_string(),
                    point: p,
                    lo: interval.lo,
                    hi: interval.hi,
                });
            }
        }
        Ok(())
    }

    /// Replaces leaf `s` by a decision node on `points`. The first child
    /// keeps id `s`; the others are appended in order.
    pub fn split_leaf_multi(&mut self, s: StateId, param: usize, points: &[f64]) -> Result<Vec<StateId>, TreeError> {
        self.check_split(s, param, points)?;
        let node = self.leaves[s.0];
        let mut children = Vec::with_capacity(points.len() + 1);
        let mut ids = Vec::with_capacity(points.len() + 1);
        for slot in 0..=points.len() {
            let id = if slot == 0 {
                s
            } else {
                self.leaves.push(NodeId(usize::MAX));
                StateId(self.leaves.len() - 1)
            };
            let child = NodeId(self.nodes.len());
            self.nodes.push(Node::Leaf(id));
            self.parent.push(Some((node, slot)));
            self.leaves[id.0] = child;
            children.push(child);
            ids.push(id);
        }
        self.nodes[node.0] = Node::Decision {
            param,
            points: points.to_vec(),
            children,
        };
        Ok(ids)
    }

    /// Number of decision nodes splitting on each parameter.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.space.len()];
        for n in &self.nodes {
            if let Node::Decision { param, points, .. } = n {
                counts[*param] += points.len();
            }
        }
        counts
    }
}

fn check_increasing(points: &[f64]) -> Result<(), TreeError> {
    if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TreeError::NonIncreasingPoints);
    }
    Ok(())
}

/// Moves a real split point off integer values for discrete parameters, so
/// both sides of the split stay reachable.
pub fn snap_split_point(kind: ParamKind, point: f64) -> f64 {
    match kind {
        ParamKind::Continuous => point,
        ParamKind::DiscreteInteger => point.floor() + 0.5,
    }
}
