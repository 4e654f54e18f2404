use std::fmt::Write;

use super::{Cfg, NodeKind};
use crate::frontend::{pretty_expr, pretty_stmt, RecordDecl};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ")
}

pub(super) fn to_dot(g: &Cfg, records: &[RecordDecl]) -> String {
    let mut out = format!("digraph \"{}\" {{\n", escape(&g.function));
    for n in &g.nodes {
        let (shape, label) = match n.kind {
            NodeKind::Entry => ("oval", "entry".to_string()),
            NodeKind::Exit => ("oval", "exit".to_string()),
            NodeKind::Sequential => ("box", pretty_stmt(&n.statements[0], records).trim().to_string()),
            NodeKind::Branch => ("diamond", pretty_expr(&g.decisions[n.decision.unwrap()].expr, records)),
        };
        let _ = writeln!(out, "  n{} [shape={shape}, label=\"{}\"];", n.id, escape(&label));
    }
    for e in &g.edges {
        match e.label {
            Some(l) => {
                let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, l.outcome);
            }
            None => {
                let _ = writeln!(out, "  n{} -> n{};", e.from, e.to);
            }
        }
    }
    out.push_str("}\n");
    out
}
