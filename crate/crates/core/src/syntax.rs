//! Thin helpers over the Python syntax tree.
//!
//! Problemset reference code and agent submissions are Python. Everything
//! that needs to reason about that code statically (forbidden-name scans,
//! prose detection, difficulty counts, dependency reads) goes through here.

use std::collections::BTreeSet;

use rustpython_parser::ast::{self, Constant, Expr, ExprContext, Ranged, Stmt};
use rustpython_parser::Parse;

pub use rustpython_parser::ast::{Expr as PyExpr, Stmt as PyStmt};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at line {line}: {message}")]
pub struct SyntaxError {
    pub message: String,
    /// 1-based line of the offending token.
    pub line: usize,
}

/// Parses a Python module body.
pub fn parse_module(source: &str) -> Result<Vec<Stmt>, SyntaxError> {
    ast::Suite::parse(source, "<cell>").map_err(|err| {
        let offset = usize::from(err.offset).min(source.len());
        let line = source[..offset].matches('\n').count() + 1;
        SyntaxError {
            message: err.error.to_string(),
            line,
        }
    })
}

pub fn is_valid_python(source: &str) -> bool {
    parse_module(source).is_ok()
}

/// Byte offset where a statement ends.
pub fn stmt_end(stmt: &Stmt) -> usize {
    usize::from(stmt.range().end())
}

pub fn stmt_start(stmt: &Stmt) -> usize {
    usize::from(stmt.range().start())
}

/// Returns the literal text when `stmt` is a bare string expression.
pub fn bare_string(stmt: &Stmt) -> Option<&str> {
    match stmt {
        Stmt::Expr(e) => match e.value.as_ref() {
            Expr::Constant(c) => match &c.value {
                Constant::Str(s) => Some(s.as_str()),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

/// Any node reachable from a module body.
#[derive(Debug, Clone, Copy)]
pub enum Node<'a> {
    Stmt(&'a Stmt),
    Expr(&'a Expr),
    Comprehension(&'a ast::Comprehension),
    Arg(&'a ast::Arg),
    Keyword(&'a ast::Keyword),
    Alias(&'a ast::Alias),
    ExceptHandler(&'a ast::ExceptHandlerExceptHandler),
    Pattern(&'a ast::Pattern),
}

/// Pre-order traversal of every node under `stmts`.
pub fn walk<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(Node<'a>)) {
    for stmt in stmts {
        walk_stmt(stmt, f);
    }
}

pub fn walk_expr<'a>(expr: &'a Expr, f: &mut dyn FnMut(Node<'a>)) {
    f(Node::Expr(expr));
    match expr {
        Expr::BoolOp(e) => e.values.iter().for_each(|v| walk_expr(v, f)),
        Expr::NamedExpr(e) => {
            walk_expr(&e.value, f);
            walk_expr(&e.target, f);
        }
        Expr::BinOp(e) => {
            walk_expr(&e.left, f);
            walk_expr(&e.right, f);
        }
        Expr::UnaryOp(e) => walk_expr(&e.operand, f),
        Expr::Lambda(e) => {
            walk_arguments(&e.args, f);
            walk_expr(&e.body, f);
        }
        Expr::IfExp(e) => {
            walk_expr(&e.test, f);
            walk_expr(&e.body, f);
            walk_expr(&e.orelse, f);
        }
        Expr::Dict(e) => {
            for (k, v) in e.keys.iter().zip(&e.values) {
                if let Some(k) = k {
                    walk_expr(k, f);
                }
                walk_expr(v, f);
            }
        }
        Expr::Set(e) => e.elts.iter().for_each(|v| walk_expr(v, f)),
        Expr::ListComp(e) => {
            walk_generators(&e.generators, f);
            walk_expr(&e.elt, f);
        }
        Expr::SetComp(e) => {
            walk_generators(&e.generators, f);
            walk_expr(&e.elt, f);
        }
        Expr::DictComp(e) => {
            walk_generators(&e.generators, f);
            walk_expr(&e.key, f);
            walk_expr(&e.value, f);
        }
        Expr::GeneratorExp(e) => {
            walk_generators(&e.generators, f);
            walk_expr(&e.elt, f);
        }
        Expr::Await(e) => walk_expr(&e.value, f),
        Expr::Yield(e) => {
            if let Some(v) = &e.value {
                walk_expr(v, f);
            }
        }
        Expr::YieldFrom(e) => walk_expr(&e.value, f),
        Expr::Compare(e) => {
            walk_expr(&e.left, f);
            e.comparators.iter().for_each(|v| walk_expr(v, f));
        }
        Expr::Call(e) => {
            walk_expr(&e.func, f);
            e.args.iter().for_each(|v| walk_expr(v, f));
            for kw in &e.keywords {
                f(Node::Keyword(kw));
                walk_expr(&kw.value, f);
            }
        }
        Expr::FormattedValue(e) => {
            walk_expr(&e.value, f);
            if let Some(spec) = &e.format_spec {
                walk_expr(spec, f);
            }
        }
        Expr::JoinedStr(e) => e.values.iter().for_each(|v| walk_expr(v, f)),
        Expr::Constant(_) => {}
        Expr::Attribute(e) => walk_expr(&e.value, f),
        Expr::Subscript(e) => {
            walk_expr(&e.value, f);
            walk_expr(&e.slice, f);
        }
        Expr::Starred(e) => walk_expr(&e.value, f),
        Expr::Name(_) => {}
        Expr::List(e) => e.elts.iter().for_each(|v| walk_expr(v, f)),
        Expr::Tuple(e) => e.elts.iter().for_each(|v| walk_expr(v, f)),
        Expr::Slice(e) => {
            for part in [&e.lower, &e.upper, &e.step].into_iter().flatten() {
                walk_expr(part, f);
            }
        }
    }
}

fn walk_generators<'a>(generators: &'a [ast::Comprehension], f: &mut dyn FnMut(Node<'a>)) {
    for gen in generators {
        f(Node::Comprehension(gen));
        walk_expr(&gen.iter, f);
        walk_expr(&gen.target, f);
        gen.ifs.iter().for_each(|v| walk_expr(v, f));
    }
}

fn walk_arguments<'a>(args: &'a ast::Arguments, f: &mut dyn FnMut(Node<'a>)) {
    let with_defaults = args
        .posonlyargs
        .iter()
        .chain(&args.args)
        .chain(&args.kwonlyargs);
    for a in with_defaults {
        if let Some(default) = &a.default {
            walk_expr(default, f);
        }
        walk_arg(&a.def, f);
    }
    for a in [&args.vararg, &args.kwarg].into_iter().flatten() {
        walk_arg(a, f);
    }
}

fn walk_arg<'a>(arg: &'a ast::Arg, f: &mut dyn FnMut(Node<'a>)) {
    f(Node::Arg(arg));
    if let Some(ann) = &arg.annotation {
        walk_expr(ann, f);
    }
}

fn walk_pattern<'a>(pattern: &'a ast::Pattern, f: &mut dyn FnMut(Node<'a>)) {
    f(Node::Pattern(pattern));
    match pattern {
        ast::Pattern::MatchValue(p) => walk_expr(&p.value, f),
        ast::Pattern::MatchSingleton(_) | ast::Pattern::MatchStar(_) => {}
        ast::Pattern::MatchSequence(p) => p.patterns.iter().for_each(|p| walk_pattern(p, f)),
        ast::Pattern::MatchMapping(p) => {
            p.keys.iter().for_each(|k| walk_expr(k, f));
            p.patterns.iter().for_each(|p| walk_pattern(p, f));
        }
        ast::Pattern::MatchClass(p) => {
            walk_expr(&p.cls, f);
            p.patterns.iter().for_each(|p| walk_pattern(p, f));
            p.kwd_patterns.iter().for_each(|p| walk_pattern(p, f));
        }
        ast::Pattern::MatchAs(p) => {
            if let Some(inner) = &p.pattern {
                walk_pattern(inner, f);
            }
        }
        ast::Pattern::MatchOr(p) => p.patterns.iter().for_each(|p| walk_pattern(p, f)),
    }
}

fn walk_handlers<'a>(handlers: &'a [ast::ExceptHandler], f: &mut dyn FnMut(Node<'a>)) {
    for ast::ExceptHandler::ExceptHandler(h) in handlers {
        f(Node::ExceptHandler(h));
        if let Some(t) = &h.type_ {
            walk_expr(t, f);
        }
        walk(&h.body, f);
    }
}

pub fn walk_stmt<'a>(stmt: &'a Stmt, f: &mut dyn FnMut(Node<'a>)) {
    f(Node::Stmt(stmt));
    match stmt {
        Stmt::FunctionDef(s) => {
            s.decorator_list.iter().for_each(|d| walk_expr(d, f));
            walk_arguments(&s.args, f);
            if let Some(r) = &s.returns {
                walk_expr(r, f);
            }
            walk(&s.body, f);
        }
        Stmt::AsyncFunctionDef(s) => {
            s.decorator_list.iter().for_each(|d| walk_expr(d, f));
            walk_arguments(&s.args, f);
            if let Some(r) = &s.returns {
                walk_expr(r, f);
            }
            walk(&s.body, f);
        }
        Stmt::ClassDef(s) => {
            s.decorator_list.iter().for_each(|d| walk_expr(d, f));
            s.bases.iter().for_each(|b| walk_expr(b, f));
            for kw in &s.keywords {
                f(Node::Keyword(kw));
                walk_expr(&kw.value, f);
            }
            walk(&s.body, f);
        }
        Stmt::Return(s) => {
            if let Some(v) = &s.value {
                walk_expr(v, f);
            }
        }
        Stmt::Delete(s) => s.targets.iter().for_each(|t| walk_expr(t, f)),
        Stmt::Assign(s) => {
            walk_expr(&s.value, f);
            s.targets.iter().for_each(|t| walk_expr(t, f));
        }
        Stmt::TypeAlias(s) => {
            walk_expr(&s.value, f);
            walk_expr(&s.name, f);
        }
        Stmt::AugAssign(s) => {
            walk_expr(&s.value, f);
            walk_expr(&s.target, f);
        }
        Stmt::AnnAssign(s) => {
            if let Some(v) = &s.value {
                walk_expr(v, f);
            }
            walk_expr(&s.annotation, f);
            walk_expr(&s.target, f);
        }
        Stmt::For(s) => {
            walk_expr(&s.iter, f);
            walk_expr(&s.target, f);
            walk(&s.body, f);
            walk(&s.orelse, f);
        }
        Stmt::AsyncFor(s) => {
            walk_expr(&s.iter, f);
            walk_expr(&s.target, f);
            walk(&s.body, f);
            walk(&s.orelse, f);
        }
        Stmt::While(s) => {
            walk_expr(&s.test, f);
            walk(&s.body, f);
            walk(&s.orelse, f);
        }
        Stmt::If(s) => {
            walk_expr(&s.test, f);
            walk(&s.body, f);
            walk(&s.orelse, f);
        }
        Stmt::With(s) => {
            for item in &s.items {
                walk_expr(&item.context_expr, f);
                if let Some(v) = &item.optional_vars {
                    walk_expr(v, f);
                }
            }
            walk(&s.body, f);
        }
        Stmt::AsyncWith(s) => {
            for item in &s.items {
                walk_expr(&item.context_expr, f);
                if let Some(v) = &item.optional_vars {
                    walk_expr(v, f);
                }
            }
            walk(&s.body, f);
        }
        Stmt::Match(s) => {
            walk_expr(&s.subject, f);
            for case in &s.cases {
                walk_pattern(&case.pattern, f);
                if let Some(g) = &case.guard {
                    walk_expr(g, f);
                }
                walk(&case.body, f);
            }
        }
        Stmt::Raise(s) => {
            for e in [&s.exc, &s.cause].into_iter().flatten() {
                walk_expr(e, f);
            }
        }
        Stmt::Try(s) => {
            walk(&s.body, f);
            walk_handlers(&s.handlers, f);
            walk(&s.orelse, f);
            walk(&s.finalbody, f);
        }
        Stmt::TryStar(s) => {
            walk(&s.body, f);
            walk_handlers(&s.handlers, f);
            walk(&s.orelse, f);
            walk(&s.finalbody, f);
        }
        Stmt::Assert(s) => {
            walk_expr(&s.test, f);
            if let Some(m) = &s.msg {
                walk_expr(m, f);
            }
        }
        Stmt::Import(s) => s.names.iter().for_each(|a| f(Node::Alias(a))),
        Stmt::ImportFrom(s) => s.names.iter().for_each(|a| f(Node::Alias(a))),
        Stmt::Expr(s) => walk_expr(&s.value, f),
        Stmt::Global(_) | Stmt::Nonlocal(_) | Stmt::Pass(_) | Stmt::Break(_) | Stmt::Continue(_) => {}
    }
}

/// Every identifier spelled anywhere in `source`: names, attributes, import
/// aliases, definitions, parameters and keyword arguments.
pub fn referenced_identifiers(source: &str) -> Result<BTreeSet<String>, SyntaxError> {
    let body = parse_module(source)?;
    let mut out = BTreeSet::new();
    walk(&body, &mut |node| match node {
        Node::Expr(Expr::Name(n)) => {
            out.insert(n.id.to_string());
        }
        Node::Expr(Expr::Attribute(a)) => {
            out.insert(a.attr.to_string());
        }
        Node::Stmt(Stmt::FunctionDef(s)) => {
            out.insert(s.name.to_string());
        }
        Node::Stmt(Stmt::AsyncFunctionDef(s)) => {
            out.insert(s.name.to_string());
        }
        Node::Stmt(Stmt::ClassDef(s)) => {
            out.insert(s.name.to_string());
        }
        Node::Stmt(Stmt::ImportFrom(s)) => {
            if let Some(module) = &s.module {
                out.extend(module.split('.').map(str::to_string));
            }
        }
        Node::Stmt(Stmt::Global(s)) => out.extend(s.names.iter().map(|n| n.to_string())),
        Node::Stmt(Stmt::Nonlocal(s)) => out.extend(s.names.iter().map(|n| n.to_string())),
        Node::Alias(a) => {
            out.extend(a.name.split('.').map(str::to_string));
            if let Some(asname) = &a.asname {
                out.insert(asname.to_string());
            }
        }
        Node::Arg(a) => {
            out.insert(a.arg.to_string());
        }
        Node::Keyword(k) => {
            if let Some(arg) = &k.arg {
                out.insert(arg.to_string());
            }
        }
        Node::ExceptHandler(h) => {
            if let Some(name) = &h.name {
                out.insert(name.to_string());
            }
        }
        _ => {}
    });
    Ok(out)
}

/// Module-level names whose first use reads a value that must already exist
/// in the session (loaded before this code binds them).
///
/// Function and lambda bodies contribute the globals they read, since the
/// session must provide those when the function runs.
pub fn free_reads(source: &str) -> Result<BTreeSet<String>, SyntaxError> {
    let body = parse_module(source)?;
    let mut scan = ReadScan::default();
    scan.block(&body);
    Ok(scan.reads)
}

#[derive(Default)]
struct ReadScan {
    bound: BTreeSet<String>,
    reads: BTreeSet<String>,
}

impl ReadScan {
    fn load(&mut self, name: &str) {
        if !self.bound.contains(name) {
            self.reads.insert(name.to_string());
        }
    }

    fn block(&mut self, stmts: &[Stmt]) {
        for stmt in stmts {
            self.stmt(stmt);
        }
    }

    fn bind_target(&mut self, target: &Expr) {
        match target {
            Expr::Name(n) => {
                self.bound.insert(n.id.to_string());
            }
            Expr::Tuple(t) => t.elts.iter().for_each(|e| self.bind_target(e)),
            Expr::List(t) => t.elts.iter().for_each(|e| self.bind_target(e)),
            Expr::Starred(s) => self.bind_target(&s.value),
            // `df['x'] = ...` and `obj.attr = ...` read the container.
            other => self.expr(other),
        }
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::FunctionDef(s) => {
                s.decorator_list.iter().for_each(|d| self.expr(d));
                self.function_body(&s.args, FunctionBody::Block(&s.body));
                self.bound.insert(s.name.to_string());
            }
            Stmt::AsyncFunctionDef(s) => {
                s.decorator_list.iter().for_each(|d| self.expr(d));
                self.function_body(&s.args, FunctionBody::Block(&s.body));
                self.bound.insert(s.name.to_string());
            }
            Stmt::ClassDef(s) => {
                s.decorator_list.iter().for_each(|d| self.expr(d));
                s.bases.iter().for_each(|b| self.expr(b));
                self.nested_scope(|scan| scan.block(&s.body));
                self.bound.insert(s.name.to_string());
            }
            Stmt::Assign(s) => {
                self.expr(&s.value);
                s.targets.iter().for_each(|t| self.bind_target(t));
            }
            Stmt::AugAssign(s) => {
                self.expr(&s.value);
                match s.target.as_ref() {
                    Expr::Name(n) => self.load(n.id.as_str()),
                    other => self.expr(other),
                }
                self.bind_target(&s.target);
            }
            Stmt::AnnAssign(s) => {
                if let Some(v) = &s.value {
                    self.expr(v);
                }
                self.bind_target(&s.target);
            }
            Stmt::For(s) => {
                self.expr(&s.iter);
                self.bind_target(&s.target);
                self.block(&s.body);
                self.block(&s.orelse);
            }
            Stmt::AsyncFor(s) => {
                self.expr(&s.iter);
                self.bind_target(&s.target);
                self.block(&s.body);
                self.block(&s.orelse);
            }
            Stmt::With(s) => {
                for item in &s.items {
                    self.expr(&item.context_expr);
                    if let Some(v) = &item.optional_vars {
                        self.bind_target(v);
                    }
                }
                self.block(&s.body);
            }
            Stmt::AsyncWith(s) => {
                for item in &s.items {
                    self.expr(&item.context_expr);
                    if let Some(v) = &item.optional_vars {
                        self.bind_target(v);
                    }
                }
                self.block(&s.body);
            }
            Stmt::Import(s) => {
                for alias in &s.names {
                    let bound = match &alias.asname {
                        Some(a) => a.to_string(),
                        None => alias.name.split('.').next().unwrap_or_default().to_string(),
                    };
                    self.bound.insert(bound);
                }
            }
            Stmt::ImportFrom(s) => {
                for alias in &s.names {
                    let bound = alias.asname.as_ref().unwrap_or(&alias.name);
                    self.bound.insert(bound.to_string());
                }
            }
            Stmt::Try(s) => {
                self.block(&s.body);
                for ast::ExceptHandler::ExceptHandler(h) in &s.handlers {
                    if let Some(t) = &h.type_ {
                        self.expr(t);
                    }
                    if let Some(name) = &h.name {
                        self.bound.insert(name.to_string());
                    }
                    self.block(&h.body);
                }
                self.block(&s.orelse);
                self.block(&s.finalbody);
            }
            Stmt::TryStar(s) => {
                self.block(&s.body);
                for ast::ExceptHandler::ExceptHandler(h) in &s.handlers {
                    if let Some(t) = &h.type_ {
                        self.expr(t);
                    }
                    self.block(&h.body);
                }
                self.block(&s.orelse);
                self.block(&s.finalbody);
            }
            Stmt::Delete(s) => {
                for t in &s.targets {
                    match t {
                        Expr::Name(n) => {
                            self.load(n.id.as_str());
                            self.bound.remove(n.id.as_str());
                        }
                        other => self.expr(other),
                    }
                }
            }
            other => {
                // Remaining statements only read: visit their expressions and
                // nested blocks in source order.
                let mut exprs: Vec<&Expr> = Vec::new();
                let mut blocks: Vec<&[Stmt]> = Vec::new();
                match other {
                    Stmt::Return(s) => exprs.extend(s.value.as_deref()),
                    Stmt::While(s) => {
                        exprs.push(&s.test);
                        blocks.push(&s.body);
                        blocks.push(&s.orelse);
                    }
                    Stmt::If(s) => {
                        exprs.push(&s.test);
                        blocks.push(&s.body);
                        blocks.push(&s.orelse);
                    }
                    Stmt::Raise(s) => {
                        exprs.extend(s.exc.as_deref());
                        exprs.extend(s.cause.as_deref());
                    }
                    Stmt::Assert(s) => {
                        exprs.push(&s.test);
                        exprs.extend(s.msg.as_deref());
                    }
                    Stmt::Expr(s) => exprs.push(&s.value),
                    Stmt::Match(s) => {
                        exprs.push(&s.subject);
                        for case in &s.cases {
                            exprs.extend(case.guard.as_deref());
                            blocks.push(&case.body);
                        }
                    }
                    Stmt::TypeAlias(s) => exprs.push(&s.value),
                    _ => {}
                }
                exprs.into_iter().for_each(|e| self.expr(e));
                blocks.into_iter().for_each(|b| self.block(b));
            }
        }
    }

    fn nested_scope(&mut self, f: impl FnOnce(&mut ReadScan)) {
        let mut inner = ReadScan {
            bound: self.bound.clone(),
            reads: BTreeSet::new(),
        };
        f(&mut inner);
        self.reads.extend(inner.reads);
    }

    fn function_body(&mut self, args: &ast::Arguments, body: FunctionBody<'_>) {
        let all_args = args
            .posonlyargs
            .iter()
            .chain(&args.args)
            .chain(&args.kwonlyargs);
        let mut params = Vec::new();
        for a in all_args {
            if let Some(d) = &a.default {
                self.expr(d);
            }
            params.push(a.def.arg.to_string());
        }
        params.extend(args.vararg.iter().map(|a| a.arg.to_string()));
        params.extend(args.kwarg.iter().map(|a| a.arg.to_string()));

        // Names assigned anywhere in the body are local to it.
        let mut locals: BTreeSet<String> = params.into_iter().collect();
        if let FunctionBody::Block(stmts) = body {
            collect_assigned(stmts, &mut locals);
        }
        self.nested_scope(|scan| {
            scan.bound.extend(locals);
            match body {
                FunctionBody::Block(stmts) => scan.block(stmts),
                FunctionBody::Expr(e) => scan.expr(e),
            }
        });
    }

    fn comprehension(&mut self, generators: &[ast::Comprehension], elts: &[&Expr]) {
        self.nested_scope(|scan| {
            for gen in generators {
                scan.expr(&gen.iter);
                scan.bind_target(&gen.target);
                gen.ifs.iter().for_each(|e| scan.expr(e));
            }
            elts.iter().for_each(|e| scan.expr(e));
        });
    }

    fn expr(&mut self, expr: &Expr) {
        match expr {
            Expr::Name(n) => match n.ctx {
                ExprContext::Load | ExprContext::Del => self.load(n.id.as_str()),
                ExprContext::Store => {
                    self.bound.insert(n.id.to_string());
                }
            },
            Expr::NamedExpr(e) => {
                self.expr(&e.value);
                self.bind_target(&e.target);
            }
            Expr::Lambda(e) => self.function_body(&e.args, FunctionBody::Expr(&e.body)),
            Expr::ListComp(e) => self.comprehension(&e.generators, &[&e.elt]),
            Expr::SetComp(e) => self.comprehension(&e.generators, &[&e.elt]),
            Expr::GeneratorExp(e) => self.comprehension(&e.generators, &[&e.elt]),
            Expr::DictComp(e) => self.comprehension(&e.generators, &[&e.key, &e.value]),
            other => {
                let mut children = Vec::new();
                direct_children(other, &mut children);
                children.into_iter().for_each(|c| self.expr(c));
            }
        }
    }
}

#[derive(Clone, Copy)]
enum FunctionBody<'a> {
    Block(&'a [Stmt]),
    Expr(&'a Expr),
}

fn collect_assigned(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    let mut globals = BTreeSet::new();
    for stmt in stmts {
        walk_stmt(stmt, &mut |node| match node {
            Node::Stmt(Stmt::Global(g)) => globals.extend(g.names.iter().map(|n| n.to_string())),
            Node::Expr(Expr::Name(n)) if n.ctx == ExprContext::Store => {
                out.insert(n.id.to_string());
            }
            Node::Stmt(Stmt::FunctionDef(f)) => {
                out.insert(f.name.to_string());
            }
            Node::Stmt(Stmt::ClassDef(c)) => {
                out.insert(c.name.to_string());
            }
            Node::Alias(a) => {
                let name = a.asname.as_ref().unwrap_or(&a.name);
                out.insert(name.split('.').next().unwrap_or_default().to_string());
            }
            _ => {}
        });
    }
    for g in globals {
        out.remove(&g);
    }
}

/// Immediate sub-expressions of an expression, in evaluation order.
pub fn direct_children<'a>(expr: &'a Expr, out: &mut Vec<&'a Expr>) {
    match expr {
        Expr::BoolOp(e) => out.extend(&e.values),
        Expr::NamedExpr(e) => {
            out.push(&e.value);
            out.push(&e.target);
        }
        Expr::BinOp(e) => {
            out.push(&e.left);
            out.push(&e.right);
        }
        Expr::UnaryOp(e) => out.push(&e.operand),
        Expr::Lambda(e) => out.push(&e.body),
        Expr::IfExp(e) => {
            out.push(&e.test);
            out.push(&e.body);
            out.push(&e.orelse);
        }
        Expr::Dict(e) => {
            for (k, v) in e.keys.iter().zip(&e.values) {
                out.extend(k.as_ref());
                out.push(v);
            }
        }
        Expr::Set(e) => out.extend(&e.elts),
        Expr::ListComp(e) => {
            out.push(&e.elt);
            for g in &e.generators {
                out.push(&g.iter);
                out.push(&g.target);
                out.extend(&g.ifs);
            }
        }
        Expr::SetComp(e) => {
            out.push(&e.elt);
            for g in &e.generators {
                out.push(&g.iter);
                out.push(&g.target);
                out.extend(&g.ifs);
            }
        }
        Expr::GeneratorExp(e) => {
            out.push(&e.elt);
            for g in &e.generators {
                out.push(&g.iter);
                out.push(&g.target);
                out.extend(&g.ifs);
            }
        }
        Expr::DictComp(e) => {
            out.push(&e.key);
            out.push(&e.value);
            for g in &e.generators {
                out.push(&g.iter);
                out.push(&g.target);
                out.extend(&g.ifs);
            }
        }
        Expr::Await(e) => out.push(&e.value),
        Expr::Yield(e) => out.extend(e.value.as_deref()),
        Expr::YieldFrom(e) => out.push(&e.value),
        Expr::Compare(e) => {
            out.push(&e.left);
            out.extend(&e.comparators);
        }
        Expr::Call(e) => {
            out.push(&e.func);
            out.extend(&e.args);
            out.extend(e.keywords.iter().map(|k| &k.value));
        }
        Expr::FormattedValue(e) => {
            out.push(&e.value);
            out.extend(e.format_spec.as_deref());
        }
        Expr::JoinedStr(e) => out.extend(&e.values),
        Expr::Attribute(e) => out.push(&e.value),
        Expr::Subscript(e) => {
            out.push(&e.value);
            out.push(&e.slice);
        }
        Expr::Starred(e) => out.push(&e.value),
        Expr::List(e) => out.extend(&e.elts),
        Expr::Tuple(e) => out.extend(&e.elts),
        Expr::Slice(e) => {
            for part in [&e.lower, &e.upper, &e.step].into_iter().flatten() {
                out.push(part);
            }
        }
        Expr::Constant(_) | Expr::Name(_) => {}
    }
}

/// Heuristic for "the submission is prose rather than code": empty input, or
/// input that does not parse and where no single line parses as anything
/// beyond a bare name or literal.
pub fn looks_like_prose(source: &str) -> bool {
    if source.trim().is_empty() {
        return true;
    }
    if is_valid_python(source) {
        return false;
    }
    !source.lines().any(|line| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return false;
        }
        match parse_module(line) {
            Ok(stmts) => stmts.iter().any(|s| !is_trivial_statement(s)),
            Err(_) => has_code_shape(line),
        }
    })
}

const CODE_KEYWORDS: [&str; 10] = ["import ", "from ", "def ", "class ", "for ", "while ", "if ", "return ", "with ", "print("];

/// Loose check for a line that was meant as code even though it fails to parse.
fn has_code_shape(line: &str) -> bool {
    if CODE_KEYWORDS.iter().any(|k| line.starts_with(k)) {
        return true;
    }
    if line.contains(" = ") || line.contains("==") || line.ends_with(':') {
        return true;
    }
    let chars: Vec<char> = line.chars().collect();
    chars.windows(2).any(|w| (w[0].is_alphanumeric() || w[0] == '_') && (w[1] == '(' || w[1] == '['))
        || (line.contains('=') && !line.contains(' '))
}

fn is_trivial_statement(stmt: &Stmt) -> bool {
    match stmt {
        Stmt::Expr(e) => matches!(e.value.as_ref(), Expr::Name(_) | Expr::Constant(_)),
        Stmt::Pass(_) => true,
        _ => false,
    }
}
