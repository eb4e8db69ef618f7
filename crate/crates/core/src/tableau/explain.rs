use std::fmt::Write;

use super::{Status, Suspension, Tableau};
use crate::formula::Formula;

#[derive(Default)]
struct Node<'a> {
    children: Vec<(&'a Formula, Node<'a>)>,
    leaves: Vec<usize>,
}

impl<'a> Node<'a> {
    fn insert(&mut self, path: &'a [Formula], leaf: usize) {
        match path.split_first() {
            None => self.leaves.push(leaf),
            Some((f, rest)) => {
                let i = match self.children.iter().position(|(g, _)| *g == f) {
                    Some(i) => i,
                    None => {
                        self.children.push((f, Node::default()));
                        self.children.len() - 1
                    }
                };
                self.children[i].1.insert(rest, leaf);
            }
        }
    }
}

/// The tableau as an indented tree, one formula per line. Branches share the
/// prefix they have in common; each leaf is labelled B1, B2, ... in branch
/// order with its status.
pub fn explain(t: &Tableau) -> String {
    let mut root = Node::default();
    for (i, b) in t.branches.iter().enumerate() {
        root.insert(&b.trace, i);
    }
    let mut out = String::new();
    if !t.base.is_empty() {
        let facts: Vec<String> = t.base.atoms().map(|a| a.to_string()).collect();
        let _ = writeln!(out, "r = {{{}}}", facts.join(", "));
    }
    render(t, &root, 0, &mut out);
    out
}

fn render(t: &Tableau, node: &Node, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    for &leaf in &node.leaves {
        let b = &t.branches[leaf];
        let note = match &b.status {
            Status::Open => "open".to_string(),
            Status::Closed(r) => format!("× [{r}]"),
            Status::Suspended(Suspension::Dominated) => "suspended: dominated by a sibling".to_string(),
            Status::Suspended(Suspension::Ungrounded(a)) => format!("suspended: change {a} not grounded"),
        };
        let _ = writeln!(out, "{pad}B{} {note}", leaf + 1);
    }
    // a chain of single children stays at one indentation level
    let step = usize::from(node.children.len() > 1);
    for (f, child) in &node.children {
        let _ = writeln!(out, "{pad}{f}");
        render(t, child, depth + step, out);
    }
}
