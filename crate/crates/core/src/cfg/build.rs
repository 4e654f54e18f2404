use crate::frontend::{CaseLabel, Expr, FunctionDef, Span, Stmt, StmtKind, Type};

use super::*;

const ENTRY: usize = 0;
const EXIT: usize = 1;

struct BNode {
    kind: NodeKind,
    stmts: Vec<Stmt>,
    cond: Option<(Expr, bool)>,
    succ: Vec<(usize, Option<Outcome>)>,
    span: Span,
}

#[derive(Clone, Copy, Default)]
struct Targets {
    brk: Option<usize>,
    cont: Option<usize>,
}

struct Builder {
    nodes: Vec<BNode>,
}

/// Lowers a checked function body.
pub fn build_cfg(f: &FunctionDef) -> Cfg {
    let mut b = Builder { nodes: Vec::new() };
    b.push(NodeKind::Entry, f.span);
    b.push(NodeKind::Exit, f.span);
    let first = b.list(&f.body, EXIT, Targets::default());
    b.nodes[ENTRY].succ.push((first, None));
    b.finish(&f.name)
}

fn flatten<'a>(stmts: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Block(b) => flatten(b, out),
            _ => out.push(s),
        }
    }
}

impl Builder {
    fn push(&mut self, kind: NodeKind, span: Span) -> usize {
        self.nodes.push(BNode {
            kind,
            stmts: Vec::new(),
            cond: None,
            succ: Vec::new(),
            span,
        });
        self.nodes.len() - 1
    }

    fn branch(&mut self, cond: Expr, is_switch: bool) -> usize {
        let id = self.push(NodeKind::Branch, cond.span);
        self.nodes[id].cond = Some((cond, is_switch));
        id
    }

    fn flush(&mut self, pending: &mut Vec<Stmt>, next: usize) -> usize {
        if pending.is_empty() {
            return next;
        }
        pending.reverse();
        let span = pending[0].span;
        let id = self.push(NodeKind::Sequential, span);
        self.nodes[id].stmts = std::mem::take(pending);
        self.nodes[id].succ.push((next, None));
        id
    }

    /// Lowers `stmts` backwards from `next`; returns the entry target.
    fn list(&mut self, stmts: &[Stmt], next: usize, t: Targets) -> usize {
        let mut flat = Vec::new();
        flatten(stmts, &mut flat);
        let mut next = next;
        let mut pending: Vec<Stmt> = Vec::new();
        for s in flat.into_iter().rev() {
            match &s.kind {
                StmtKind::Empty | StmtKind::Block(_) => {}
                StmtKind::Return(_) => {
                    pending.clear();
                    pending.push(s.clone());
                    next = EXIT;
                }
                StmtKind::Break => {
                    pending.clear();
                    next = t.brk.expect("checked break");
                }
                StmtKind::Continue => {
                    pending.clear();
                    next = t.cont.expect("checked continue");
                }
                StmtKind::Decl(_) | StmtKind::Assign { .. } | StmtKind::Expr(_) => pending.push(s.clone()),
                _ => {
                    next = self.flush(&mut pending, next);
                    next = self.compound(s, next, t, &mut pending);
                }
            }
        }
        self.flush(&mut pending, next)
    }

    fn one(&mut self, s: &Stmt, next: usize, t: Targets) -> usize {
        self.list(std::slice::from_ref(s), next, t)
    }

    fn compound(&mut self, s: &Stmt, next: usize, t: Targets, pending: &mut Vec<Stmt>) -> usize {
        match &s.kind {
            StmtKind::If { cond, then, els } => {
                let then_t = self.one(then, next, t);
                let else_t = match els {
                    Some(e) => self.one(e, next, t),
                    None => next,
                };
                let b = self.branch(cond.clone(), false);
                self.nodes[b].succ = vec![(then_t, Some(Outcome::True)), (else_t, Some(Outcome::False))];
                b
            }
            StmtKind::While { cond, body } => {
                let b = self.branch(cond.clone(), false);
                let body_t = self.one(
                    body,
                    b,
                    Targets {
                        brk: Some(next),
                        cont: Some(b),
                    },
                );
                self.nodes[b].succ = vec![(body_t, Some(Outcome::True)), (next, Some(Outcome::False))];
                b
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                let cond = cond.clone().unwrap_or_else(|| {
                    let mut one = Expr::int(1, s.span);
                    one.ty = Some(Type::int());
                    one
                });
                let b = self.branch(cond, false);
                let step_t = match step {
                    Some(st) => {
                        let mut p = vec![(**st).clone()];
                        self.flush(&mut p, b)
                    }
                    None => b,
                };
                let body_t = self.one(
                    body,
                    step_t,
                    Targets {
                        brk: Some(next),
                        cont: Some(step_t),
                    },
                );
                self.nodes[b].succ = vec![(body_t, Some(Outcome::True)), (next, Some(Outcome::False))];
                if let Some(i) = init {
                    pending.push((**i).clone());
                }
                b
            }
            StmtKind::Switch { scrutinee, arms } => {
                let has_case = arms.iter().flat_map(|a| &a.labels).any(|l| matches!(l, CaseLabel::Case(_)));
                let inner = Targets {
                    brk: Some(next),
                    cont: t.cont,
                };
                let mut targets = vec![next; arms.len()];
                let mut arm_next = next;
                for (i, a) in arms.iter().enumerate().rev() {
                    arm_next = self.list(&a.body, arm_next, inner);
                    targets[i] = arm_next;
                }
                if !has_case {
                    // only a default arm: evaluate the scrutinee and fall in
                    let target = arms
                        .iter()
                        .position(|a| a.labels.contains(&CaseLabel::Default))
                        .map(|i| targets[i])
                        .unwrap_or(next);
                    pending.push(Stmt::new(StmtKind::Expr(scrutinee.clone()), s.span));
                    return target;
                }
                let b = self.branch(scrutinee.clone(), true);
                let mut succ = Vec::new();
                for (a, &tgt) in arms.iter().zip(&targets) {
                    for l in &a.labels {
                        let o = match l {
                            CaseLabel::Case(k) => Outcome::Case(*k),
                            CaseLabel::Default => Outcome::Default,
                        };
                        succ.push((tgt, Some(o)));
                    }
                }
                if !succ.iter().any(|(_, o)| *o == Some(Outcome::Default)) {
                    succ.push((next, Some(Outcome::Default)));
                }
                self.nodes[b].succ = succ;
                b
            }
            _ => unreachable!("not a compound statement"),
        }
    }

    /// Renumbers nodes in depth-first preorder, exit last, dropping unreachable ones.
    fn finish(self, name: &str) -> Cfg {
        let n = self.nodes.len();
        let mut order = Vec::new();
        let mut seen = vec![false; n];
        let mut stack = vec![ENTRY];
        while let Some(v) = stack.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if v != EXIT {
                order.push(v);
            }
            for &(s, _) in self.nodes[v].succ.iter().rev() {
                if !seen[s] {
                    stack.push(s);
                }
            }
        }
        order.push(EXIT);
        let mut new_id = vec![usize::MAX; n];
        for (i, &v) in order.iter().enumerate() {
            new_id[v] = i;
        }

        let mut nodes: Vec<CfgNode> = Vec::with_capacity(order.len());
        let mut edges: Vec<CfgEdge> = Vec::new();
        let mut decisions: Vec<Decision> = Vec::new();
        let mut old = self.nodes.into_iter().map(Some).collect::<Vec<_>>();
        for (id, &v) in order.iter().enumerate() {
            let b = old[v].take().expect("node visited once");
            let decision = b.cond.map(|(expr, is_switch)| {
                let (tree, conditions) = if is_switch {
                    (BoolTree::Cond(0), vec![expr.clone()])
                } else {
                    decompose_decision(&expr)
                };
                decisions.push(Decision {
                    id: decisions.len(),
                    node: id,
                    span: expr.span,
                    expr,
                    tree,
                    conditions,
                    is_switch,
                });
                decisions.len() - 1
            });
            let mut succs = Vec::new();
            for (to, o) in b.succ {
                let e = edges.len();
                edges.push(CfgEdge {
                    id: e,
                    from: id,
                    to: new_id[to],
                    label: o.map(|outcome| EdgeLabel {
                        decision: decision.expect("labeled edge leaves a branch"),
                        outcome,
                    }),
                });
                succs.push(e);
            }
            nodes.push(CfgNode {
                id,
                kind: b.kind,
                statements: b.stmts,
                decision,
                span: b.span,
                succs,
                preds: Vec::new(),
            });
        }
        for e in &edges {
            nodes[e.to].preds.push(e.id);
        }
        let exit = nodes.len() - 1;
        let mut cfg = Cfg {
            function: name.to_string(),
            nodes,
            edges,
            entry: 0,
            exit,
            decisions,
            dist_exit: Vec::new(),
            doms: Vec::new(),
            back: Vec::new(),
        };
        cfg.dist_exit = analysis::reverse_bfs(&cfg, exit);
        cfg.doms = analysis::dominator_sets(&cfg);
        cfg.back = cfg.edges.iter().map(|e| cfg.dominates(e.to, e.from)).collect();
        log::debug!(
            "cfg {name}: {} nodes, {} edges, {} decisions",
            cfg.nodes.len(),
            cfg.edges.len(),
            cfg.decisions.len()
        );
        cfg
    }
}
