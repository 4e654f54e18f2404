use std::collections::BTreeMap;

use crate::cfg::{EdgeId, NodeId, StmtLoc};
use crate::memmodel::{ObjId, SymMemory, Value};
use crate::solver::{Model, PathCondition};

use super::DecisionEval;

/// One activation record. Inlined callees push frames.
#[derive(Clone, Debug)]
pub struct Frame {
    pub func: usize,
    pub node: NodeId,
    /// Next statement within `node`.
    pub stmt: usize,
    pub locals: Vec<Option<ObjId>>,
    pub ret: Option<Value>,
    /// Value handed back by a finished callee, consumed when the call
    /// statement is re-executed.
    pub call_result: Option<Option<Value>>,
}

#[derive(Clone, Debug)]
pub struct SymState {
    pub id: usize,
    pub frames: Vec<Frame>,
    pub pc: PathCondition,
    pub mem: SymMemory,
    pub globals: Vec<ObjId>,
    /// Edges taken in the outermost frame.
    pub trace: Vec<EdgeId>,
    /// Statements executed in the outermost frame; branch nodes appear as `(n, 0)`.
    pub stmts: Vec<StmtLoc>,
    pub decisions: Vec<DecisionEval>,
    pub loop_counts: BTreeMap<(usize, EdgeId), u32>,
    pub stub_counts: BTreeMap<String, u32>,
    pub steps: u64,
    /// A model found by a feasibility probe, known to satisfy the first
    /// `hint_ok` conjuncts of `pc`.
    pub hint: Option<Model>,
    pub hint_ok: usize,
    pub returned: Option<Option<Value>>,
}

impl SymState {
    pub fn top(&self) -> &Frame {
        self.frames.last().expect("live state has a frame")
    }

    pub(crate) fn top_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("live state has a frame")
    }

    /// Node of the outermost frame, i.e. the call site while inside a callee.
    pub fn outer_node(&self) -> NodeId {
        self.frames[0].node
    }

    pub fn in_callee(&self) -> bool {
        self.frames.len() > 1
    }
}
