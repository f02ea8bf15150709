use dseval_core::syntax::{parse_module, walk, Node, SyntaxError};
use rustpython_parser::ast::{Expr, Stmt};
use serde::{Deserialize, Serialize};

/// Syntax-tree node counts of a reference solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DifficultyScore {
    pub calls: usize,
    /// Expression nodes other than calls and inline conditionals.
    pub expressions: usize,
    pub conditions: usize,
    pub loops: usize,
    pub total: usize,
}

impl std::ops::Add for DifficultyScore {
    type Output = DifficultyScore;

    fn add(self, o: DifficultyScore) -> DifficultyScore {
        DifficultyScore {
            calls: self.calls + o.calls,
            expressions: self.expressions + o.expressions,
            conditions: self.conditions + o.conditions,
            loops: self.loops + o.loops,
            total: self.total + o.total,
        }
    }
}

pub fn score_difficulty(code: &str) -> Result<DifficultyScore, SyntaxError> {
    let body = parse_module(code)?;
    let mut s = DifficultyScore::default();
    walk(&body, &mut |node| match node {
        Node::Expr(Expr::Call(_)) => s.calls += 1,
        Node::Expr(Expr::IfExp(_)) => s.conditions += 1,
        Node::Expr(_) => s.expressions += 1,
        Node::Stmt(Stmt::If(_)) | Node::Stmt(Stmt::Match(_)) => s.conditions += 1,
        Node::Stmt(Stmt::For(_)) | Node::Stmt(Stmt::AsyncFor(_)) | Node::Stmt(Stmt::While(_)) => s.loops += 1,
        Node::Comprehension(c) => {
            s.loops += 1;
            s.conditions += c.ifs.len();
        }
        _ => {}
    });
    s.total = s.calls + s.expressions + s.conditions + s.loops;
    Ok(s)
}
