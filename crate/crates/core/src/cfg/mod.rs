//! Per-function control-flow graphs.

mod analysis;
mod build;
mod dot;

use serde::{Deserialize, Serialize};

use crate::frontend::{Expr, ExprKind, Span, Stmt};
use crate::solver::BinOp;

pub use analysis::INFINITE;
pub use build::build_cfg;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    True,
    False,
    Case(i32),
    Default,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::True => write!(f, "T"),
            Outcome::False => write!(f, "F"),
            Outcome::Case(k) => write!(f, "case {k}"),
            Outcome::Default => write!(f, "default"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeLabel {
    pub decision: usize,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfgEdge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub label: Option<EdgeLabel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Entry,
    Exit,
    Sequential,
    Branch,
}

#[derive(Clone, Debug)]
pub struct CfgNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub statements: Vec<Stmt>,
    pub decision: Option<usize>,
    pub span: Span,
    /// Outgoing edges in source order (then before else, cases in order).
    pub succs: Vec<EdgeId>,
    pub preds: Vec<EdgeId>,
}

/// Boolean structure of a decision over its atomic conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoolTree {
    Cond(usize),
    Not(Box<BoolTree>),
    And(Box<BoolTree>, Box<BoolTree>),
    Or(Box<BoolTree>, Box<BoolTree>),
}

impl BoolTree {
    /// Evaluates with `Some(v)` for known conditions; `None` propagates as unknown.
    pub fn eval(&self, vals: &[Option<bool>]) -> Option<bool> {
        match self {
            BoolTree::Cond(i) => vals[*i],
            BoolTree::Not(a) => a.eval(vals).map(|v| !v),
            BoolTree::And(a, b) => match a.eval(vals)? {
                false => Some(false),
                true => b.eval(vals),
            },
            BoolTree::Or(a, b) => match a.eval(vals)? {
                true => Some(true),
                false => b.eval(vals),
            },
        }
    }

    /// First condition whose value short-circuit evaluation needs next.
    pub fn next_needed(&self, vals: &[Option<bool>]) -> Option<usize> {
        match self {
            BoolTree::Cond(i) => vals[*i].is_none().then_some(*i),
            BoolTree::Not(a) => a.next_needed(vals),
            BoolTree::And(a, b) => match a.eval(vals) {
                None => a.next_needed(vals),
                Some(false) => None,
                Some(true) => b.next_needed(vals),
            },
            BoolTree::Or(a, b) => match a.eval(vals) {
                None => a.next_needed(vals),
                Some(true) => None,
                Some(false) => b.next_needed(vals),
            },
        }
    }

    /// Every short-circuit evaluation over `k` conditions with its outcome;
    /// unevaluated conditions are `None`.
    pub fn evaluations(&self, k: usize) -> Vec<(Vec<Option<bool>>, bool)> {
        let mut out = Vec::new();
        let mut work = vec![vec![None; k]];
        while let Some(v) = work.pop() {
            if let Some(o) = self.eval(&v) {
                out.push((v, o));
                continue;
            }
            let i = self.next_needed(&v).expect("undecided tree has a pending condition");
            for b in [false, true] {
                let mut w = v.clone();
                w[i] = Some(b);
                work.push(w);
            }
        }
        out.sort();
        out
    }
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub id: usize,
    pub node: NodeId,
    pub expr: Expr,
    pub tree: BoolTree,
    pub conditions: Vec<Expr>,
    /// Switch scrutinees take part in branch coverage only.
    pub is_switch: bool,
    pub span: Span,
}

/// Splits `expr` into atomic conditions under `&&`, `||` and `!`.
pub fn decompose_decision(expr: &Expr) -> (BoolTree, Vec<Expr>) {
    fn go(e: &Expr, out: &mut Vec<Expr>) -> BoolTree {
        match &e.kind {
            ExprKind::Binary(BinOp::LAnd, a, b) => {
                let l = go(a, out);
                BoolTree::And(Box::new(l), Box::new(go(b, out)))
            }
            ExprKind::Binary(BinOp::LOr, a, b) => {
                let l = go(a, out);
                BoolTree::Or(Box::new(l), Box::new(go(b, out)))
            }
            ExprKind::Unary(crate::frontend::UnaryOp::Not, a) => BoolTree::Not(Box::new(go(a, out))),
            _ => {
                out.push(e.clone());
                BoolTree::Cond(out.len() - 1)
            }
        }
    }
    let mut conds = Vec::new();
    let tree = go(expr, &mut conds);
    (tree, conds)
}

#[derive(Clone, Debug)]
pub struct Cfg {
    pub function: String,
    pub nodes: Vec<CfgNode>,
    pub edges: Vec<CfgEdge>,
    pub entry: NodeId,
    pub exit: NodeId,
    pub decisions: Vec<Decision>,
    dist_exit: Vec<u32>,
    doms: Vec<Vec<NodeId>>,
    back: Vec<bool>,
}

/// Statement position: node plus index within the node. Branch nodes use index 0.
pub type StmtLoc = (NodeId, usize);

impl Cfg {
    pub fn node(&self, id: NodeId) -> &CfgNode {
        &self.nodes[id]
    }

    pub fn edge(&self, id: EdgeId) -> &CfgEdge {
        &self.edges[id]
    }

    pub fn successors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[n].succs.iter().map(|&e| self.edges[e].to)
    }

    pub fn predecessors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[n].preds.iter().map(|&e| self.edges[e].from)
    }

    pub fn branch_nodes(&self) -> impl Iterator<Item = &CfgNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Branch)
    }

    pub fn labeled_edges(&self) -> impl Iterator<Item = &CfgEdge> {
        self.edges.iter().filter(|e| e.label.is_some())
    }

    /// Coverable statement locations, in node order.
    pub fn statements(&self) -> Vec<StmtLoc> {
        let mut out = Vec::new();
        for n in &self.nodes {
            match n.kind {
                NodeKind::Sequential => out.extend((0..n.statements.len()).map(|i| (n.id, i))),
                NodeKind::Branch => out.push((n.id, 0)),
                _ => {}
            }
        }
        out
    }

    /// Minimum edge count from `n` to the exit, or [`INFINITE`].
    pub fn dist_to_exit(&self, n: NodeId) -> u32 {
        self.dist_exit[n]
    }

    pub fn distance_table(&self) -> &[u32] {
        &self.dist_exit
    }

    /// Minimum edge count from every node to `target`.
    pub fn distances_to(&self, target: NodeId) -> Vec<u32> {
        analysis::reverse_bfs(self, target)
    }

    /// Dominators of `n`, ascending, including `n`.
    pub fn dominators(&self, n: NodeId) -> &[NodeId] {
        &self.doms[n]
    }

    pub fn dominates(&self, d: NodeId, n: NodeId) -> bool {
        self.doms[n].binary_search(&d).is_ok()
    }

    pub fn is_back_edge(&self, e: EdgeId) -> bool {
        self.back[e]
    }

    pub fn back_edges(&self) -> impl Iterator<Item = &CfgEdge> {
        self.edges.iter().filter(|e| self.back[e.id])
    }

    /// Nodes of the natural loop closed by back edge `e`.
    pub fn natural_loop(&self, e: EdgeId) -> Vec<NodeId> {
        analysis::natural_loop(self, e)
    }

    pub fn decision_at(&self, n: NodeId) -> Option<&Decision> {
        self.nodes[n].decision.map(|d| &self.decisions[d])
    }

    pub fn edge_for(&self, n: NodeId, outcome: Outcome) -> Option<EdgeId> {
        self.nodes[n]
            .succs
            .iter()
            .copied()
            .find(|&e| self.edges[e].label.map(|l| l.outcome) == Some(outcome))
    }

    pub fn to_dot(&self, records: &[crate::frontend::RecordDecl]) -> String {
        dot::to_dot(self, records)
    }
}

#[cfg(test)]
mod tests;
