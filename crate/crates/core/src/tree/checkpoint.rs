//! Nested JSON form of a tree, used for checkpoints.

use super::{DecisionTree, Node, NodeId, Parameter, ParameterSpace, StateId, TreeError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub params: Vec<Parameter>,
    pub root: NodeDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeDoc {
    Leaf {
        state: usize,
    },
    Decision {
        param: String,
        points: Vec<f64>,
        children: Vec<NodeDoc>,
    },
}

impl DecisionTree {
    pub fn to_doc(&self) -> TreeDoc {
        TreeDoc {
            params: self.space.params().to_vec(),
            root: self.node_doc(NodeId(0)),
        }
    }

    fn node_doc(&self, id: NodeId) -> NodeDoc {
        match &self.nodes[id.0] {
            Node::Leaf(s) => NodeDoc::Leaf { state: s.0 },
            Node::Decision {
                param,
                points,
                children,
            } => NodeDoc::Decision {
                param: self.space.name(*param).to_string(),
                points: points.clone(),
                children: children.iter().map(|c| self.node_doc(*c)).collect(),
            },
        }
    }

    pub fn from_doc(doc: &TreeDoc) -> Result<Self, TreeError> {
        let space = ParameterSpace::new(doc.params.clone())?;
        let mut tree = DecisionTree {
            space,
            nodes: Vec::new(),
            parent: Vec::new(),
            leaves: Vec::new(),
        };
        let mut leaf_slots: Vec<Option<NodeId>> = Vec::new();
        tree.push_doc(&doc.root, None, &mut leaf_slots)?;
        tree.leaves = leaf_slots
            .into_iter()
            .enumerate()
            .map(|(i, n)| n.ok_or_else(|| TreeError::Malformed(format!("state {i} has no leaf"))))
            .collect::<Result<_, _>>()?;
        Ok(tree)
    }

    fn push_doc(
        &mut self,
        doc: &NodeDoc,
        parent: Option<(NodeId, usize)>,
        leaf_slots: &mut Vec<Option<NodeId>>,
    ) -> Result<NodeId, TreeError> {
        let id = NodeId(self.nodes.len());
        self.parent.push(parent);
        match doc {
            NodeDoc::Leaf { state } => {
                self.nodes.push(Node::Leaf(StateId(*state)));
                if leaf_slots.len() <= *state {
                    leaf_slots.resize(*state + 1, None);
                }
                if leaf_slots[*state].replace(id).is_some() {
                    return Err(TreeError::Malformed(format!("state {state} appears twice")));
                }
            }
            NodeDoc::Decision {
                param,
                points,
                children,
            } => {
                let p = self.space.index_of(param)?;
                super::check_increasing(points)?;
                if children.len() != points.len() + 1 || points.is_empty() {
                    return Err(TreeError::Malformed(format!(
                        "decision on `{param}` has {} points and {} children",
                        points.len(),
                        children.len()
                    )));
                }
                self.nodes.push(Node::Decision {
                    param: p,
                    points: points.clone(),
                    children: Vec::new(),
                });
                let mut kids = Vec::with_capacity(children.len());
                for (slot, c) in children.iter().enumerate() {
                    kids.push(self.push_doc(c, Some((id, slot)), leaf_slots)?);
                }
                if let Node::Decision { children, .. } = &mut self.nodes[id.0] {
                    *children = kids;
                }
            }
        }
        Ok(id)
    }
}
