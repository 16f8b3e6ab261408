//! Symbolic dynamics `f(x, u)` as a hash-consed expression DAG.
//!
//! Nodes are appended after their children, so index order is a topological
//! order and evaluation is a single forward sweep. Jacobians and Hessians are
//! built symbolically at construction and evaluated with the same sweep, in
//! either point or interval arithmetic.

mod parse;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use nalgebra::DMatrix;

use crate::interval::{Interval, IntervalFault, IntervalMatrix, IntervalVector};
use crate::math;

pub use parse::ParseError;

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    State(u32),
    Input(u32),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Powi(NodeId, i32),
    Powf(NodeId, f64),
    Sqrt(NodeId),
}

type NodeKey = (u8, u64, u64);

fn key(node: &Node) -> NodeKey {
    match *node {
        Node::Const(c) => (0, c.to_bits(), 0),
        Node::State(i) => (1, i as u64, 0),
        Node::Input(i) => (2, i as u64, 0),
        Node::Add(a, b) => (3, a as u64, b as u64),
        Node::Sub(a, b) => (4, a as u64, b as u64),
        Node::Mul(a, b) => (5, a as u64, b as u64),
        Node::Div(a, b) => (6, a as u64, b as u64),
        Node::Neg(a) => (7, a as u64, 0),
        Node::Powi(a, n) => (8, a as u64, n as i64 as u64),
        Node::Powf(a, p) => (9, a as u64, p.to_bits()),
        Node::Sqrt(a) => (10, a as u64, 0),
    }
}

/// Growable node store with structural sharing and light algebraic
/// simplification (constant folding, neutral and absorbing elements).
#[derive(Clone, Debug, Default)]
pub struct ExprBuilder {
    nodes: Vec<Node>,
    index: BTreeMap<NodeKey, NodeId>,
}

impl ExprBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, node: Node) -> NodeId {
        let k = key(&node);
        if let Some(&id) = self.index.get(&k) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.index.insert(k, id);
        id
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id as usize]
    }

    fn as_const(&self, id: NodeId) -> Option<f64> {
        match self.nodes[id as usize] {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        // Normalize -0.0 so that hash-consing treats it as zero.
        self.intern(Node::Const(if c == 0.0 { 0.0 } else { c }))
    }

    pub fn state(&mut self, i: usize) -> NodeId {
        self.intern(Node::State(i as u32))
    }

    pub fn input(&mut self, i: usize) -> NodeId {
        self.intern(Node::Input(i as u32))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x + y),
            (Some(x), None) if x == 0.0 => b,
            (None, Some(y)) if y == 0.0 => a,
            _ => self.intern(Node::Add(a, b)),
        }
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x - y),
            (Some(x), None) if x == 0.0 => self.neg(b),
            (None, Some(y)) if y == 0.0 => a,
            _ => self.intern(Node::Sub(a, b)),
        }
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => self.constant(0.0),
            (Some(x), None) if x == 1.0 => b,
            (None, Some(y)) if y == 1.0 => a,
            (Some(x), None) if x == -1.0 => self.neg(b),
            (None, Some(y)) if y == -1.0 => self.neg(a),
            _ => self.intern(Node::Mul(a, b)),
        }
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) if y != 0.0 => self.constant(x / y),
            (Some(x), _) if x == 0.0 => self.constant(0.0),
            (None, Some(y)) if y == 1.0 => a,
            (None, Some(y)) if y != 0.0 => {
                let inv = self.constant(1.0 / y);
                self.mul(inv, a)
            }
            _ => self.intern(Node::Div(a, b)),
        }
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        match self.nodes[a as usize] {
            Node::Const(x) => self.constant(-x),
            Node::Neg(inner) => inner,
            _ => self.intern(Node::Neg(a)),
        }
    }

    pub fn powi(&mut self, a: NodeId, n: i32) -> NodeId {
        match (self.as_const(a), n) {
            (_, 0) => self.constant(1.0),
            (_, 1) => a,
            (Some(x), n) => self.constant(math::powi(x, n)),
            _ => self.intern(Node::Powi(a, n)),
        }
    }

    pub fn powf(&mut self, a: NodeId, p: f64) -> NodeId {
        if p == math::floor(p) && p.abs() < i32::MAX as f64 {
            return self.powi(a, p as i32);
        }
        match self.as_const(a) {
            Some(x) if x >= 0.0 => self.constant(math::powf(x, p)),
            _ => self.intern(Node::Powf(a, p)),
        }
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        match self.as_const(a) {
            Some(x) if x >= 0.0 => self.constant(math::sqrt(x)),
            _ => self.intern(Node::Sqrt(a)),
        }
    }

    /// Symbolic partial derivative with respect to state `var`.
    pub fn diff(&mut self, id: NodeId, var: usize, memo: &mut BTreeMap<NodeId, NodeId>) -> NodeId {
        if let Some(&d) = memo.get(&id) {
            return d;
        }
        let d = match self.nodes[id as usize] {
            Node::Const(_) | Node::Input(_) => self.constant(0.0),
            Node::State(i) => self.constant(if i as usize == var { 1.0 } else { 0.0 }),
            Node::Add(a, b) => {
                let (da, db) = (self.diff(a, var, memo), self.diff(b, var, memo));
                self.add(da, db)
            }
            Node::Sub(a, b) => {
                let (da, db) = (self.diff(a, var, memo), self.diff(b, var, memo));
                self.sub(da, db)
            }
            Node::Mul(a, b) => {
                let (da, db) = (self.diff(a, var, memo), self.diff(b, var, memo));
                let l = self.mul(da, b);
                let r = self.mul(a, db);
                self.add(l, r)
            }
            Node::Div(a, b) => {
                // (a/b)' = a'/b - a b' / b^2
                let (da, db) = (self.diff(a, var, memo), self.diff(b, var, memo));
                let t1 = self.div(da, b);
                let ab = self.mul(a, db);
                let b2 = self.powi(b, 2);
                let t2 = self.div(ab, b2);
                self.sub(t1, t2)
            }
            Node::Neg(a) => {
                let da = self.diff(a, var, memo);
                self.neg(da)
            }
            Node::Powi(a, n) => {
                let da = self.diff(a, var, memo);
                let k = self.constant(n as f64);
                let p = self.powi(a, n - 1);
                let kp = self.mul(k, p);
                self.mul(kp, da)
            }
            Node::Powf(a, p) => {
                let da = self.diff(a, var, memo);
                let k = self.constant(p);
                let q = self.powf(a, p - 1.0);
                let kq = self.mul(k, q);
                self.mul(kq, da)
            }
            Node::Sqrt(a) => {
                // sqrt(a)' = a' / (2 sqrt(a))
                let da = self.diff(a, var, memo);
                let two = self.constant(2.0);
                let den = self.mul(two, id);
                self.div(da, den)
            }
        };
        memo.insert(id, d);
        d
    }

    /// Infix rendering of a subexpression; constants use round-trip formatting
    /// so the result parses back to the same values.
    pub fn render(&self, id: NodeId) -> String {
        let mut s = String::new();
        self.render_into(id, &mut s);
        s
    }

    fn render_into(&self, id: NodeId, s: &mut String) {
        match self.nodes[id as usize] {
            Node::Const(c) => {
                if c < 0.0 {
                    let _ = write!(s, "({c:?})");
                } else {
                    let _ = write!(s, "{c:?}");
                }
            }
            Node::State(i) => {
                let _ = write!(s, "x{}", i + 1);
            }
            Node::Input(i) => {
                let _ = write!(s, "u{}", i + 1);
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let op = match self.nodes[id as usize] {
                    Node::Add(..) => " + ",
                    Node::Sub(..) => " - ",
                    Node::Mul(..) => "*",
                    _ => "/",
                };
                s.push('(');
                self.render_into(a, s);
                s.push_str(op);
                self.render_into(b, s);
                s.push(')');
            }
            Node::Neg(a) => {
                s.push_str("(-");
                self.render_into(a, s);
                s.push(')');
            }
            Node::Powi(a, n) => {
                s.push('(');
                self.render_into(a, s);
                let _ = write!(s, ")^({n})");
            }
            Node::Powf(a, p) => {
                s.push('(');
                self.render_into(a, s);
                let _ = write!(s, ")^({p:?})");
            }
            Node::Sqrt(a) => {
                s.push_str("sqrt(");
                self.render_into(a, s);
                s.push(')');
            }
        }
    }

    fn reachable(&self, roots: impl IntoIterator<Item = NodeId>) -> Vec<NodeId> {
        let mut mark = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = roots.into_iter().collect();
        while let Some(id) = stack.pop() {
            if mark[id as usize] {
                continue;
            }
            mark[id as usize] = true;
            match self.nodes[id as usize] {
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                Node::Neg(a) | Node::Powi(a, _) | Node::Powf(a, _) | Node::Sqrt(a) => stack.push(a),
                _ => {}
            }
        }
        (0..self.nodes.len() as NodeId).filter(|&i| mark[i as usize]).collect()
    }
}

/// Evaluation failure at a specific node.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{fault} at `{node}`")]
pub struct EvalError {
    pub node: String,
    pub fault: IntervalFault,
}

/// Errors when assembling a [`SymbolicDynamics`].
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("expression references x{index} but the system has {dim} states")]
    StateOutOfRange { index: usize, dim: usize },
    #[error("expression references u{index} but the system has {dim} inputs")]
    InputOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

trait Value: Copy {
    fn konst(c: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Result<Self, IntervalFault>;
    fn neg(self) -> Self;
    fn powi(self, n: i32) -> Result<Self, IntervalFault>;
    fn powf(self, p: f64) -> Result<Self, IntervalFault>;
    fn sqrt(self) -> Result<Self, IntervalFault>;
}

impl Value for f64 {
    fn konst(c: f64) -> Self {
        c
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Result<Self, IntervalFault> {
        if o == 0.0 {
            Err(IntervalFault::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }
    fn neg(self) -> Self {
        -self
    }
    fn powi(self, n: i32) -> Result<Self, IntervalFault> {
        if n < 0 && self == 0.0 {
            return Err(IntervalFault::DivisionByZero);
        }
        Ok(math::powi(self, n))
    }
    fn powf(self, p: f64) -> Result<Self, IntervalFault> {
        if self < 0.0 || (p < 0.0 && self == 0.0) {
            return Err(IntervalFault::PowerOfNegative);
        }
        Ok(math::powf(self, p))
    }
    fn sqrt(self) -> Result<Self, IntervalFault> {
        if self < 0.0 {
            Err(IntervalFault::SqrtOfNegative)
        } else {
            Ok(math::sqrt(self))
        }
    }
}

impl Value for Interval {
    fn konst(c: f64) -> Self {
        Interval::point(c)
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Result<Self, IntervalFault> {
        Interval::div(&self, &o)
    }
    fn neg(self) -> Self {
        -self
    }
    fn powi(self, n: i32) -> Result<Self, IntervalFault> {
        Interval::powi(&self, n)
    }
    fn powf(self, p: f64) -> Result<Self, IntervalFault> {
        Interval::powf(&self, p)
    }
    fn sqrt(self) -> Result<Self, IntervalFault> {
        Interval::sqrt(&self)
    }
}

/// Nonzero second-derivative entry `(j, k, node)` with `j <= k`.
pub type HessianEntry = (usize, usize, NodeId);

/// An immutable vector field `f: R^n × R^m -> R^p` with precomputed symbolic
/// Jacobian (with respect to the states) and Hessians.
#[derive(Clone, Debug)]
pub struct SymbolicDynamics {
    nodes: ExprBuilder,
    n_states: usize,
    n_inputs: usize,
    outputs: Vec<NodeId>,
    jacobian: Vec<Vec<NodeId>>,
    hessian: Vec<Vec<HessianEntry>>,
    value_prog: Vec<NodeId>,
    jac_prog: Vec<NodeId>,
    hess_prog: Vec<NodeId>,
}

impl SymbolicDynamics {
    /// Parses one infix expression per output component over symbols
    /// `x1..xn` and `u1..um`.
    pub fn parse<S: AsRef<str>>(n_states: usize, n_inputs: usize, components: &[S]) -> Result<Self, ExprError> {
        let mut b = ExprBuilder::new();
        let mut outputs = Vec::with_capacity(components.len());
        for src in components {
            let id = parse::parse_into(&mut b, src.as_ref())?;
            outputs.push(id);
        }
        Self::from_builder(b, n_states, n_inputs, outputs)
    }

    /// Wraps programmatically built expressions.
    pub fn from_builder(nodes: ExprBuilder, n_states: usize, n_inputs: usize, outputs: Vec<NodeId>) -> Result<Self, ExprError> {
        let mut nodes = nodes;
        for id in nodes.reachable(outputs.iter().copied()) {
            match nodes.node(id) {
                Node::State(i) if i as usize >= n_states => {
                    return Err(ExprError::StateOutOfRange { index: i as usize + 1, dim: n_states })
                }
                Node::Input(i) if i as usize >= n_inputs => {
                    return Err(ExprError::InputOutOfRange { index: i as usize + 1, dim: n_inputs })
                }
                _ => {}
            }
        }
        let mut jacobian = Vec::with_capacity(outputs.len());
        let mut hessian = Vec::with_capacity(outputs.len());
        for &out in &outputs {
            let mut row = Vec::with_capacity(n_states);
            for j in 0..n_states {
                let mut memo = BTreeMap::new();
                row.push(nodes.diff(out, j, &mut memo));
            }
            let mut hrow = Vec::new();
            for j in 0..n_states {
                if nodes.as_const(row[j]) == Some(0.0) {
                    continue;
                }
                for k in j..n_states {
                    let mut memo = BTreeMap::new();
                    let h = nodes.diff(row[j], k, &mut memo);
                    if nodes.as_const(h) != Some(0.0) {
                        hrow.push((j, k, h));
                    }
                }
            }
            jacobian.push(row);
            hessian.push(hrow);
        }
        let value_prog = nodes.reachable(outputs.iter().copied());
        let jac_prog = nodes.reachable(jacobian.iter().flatten().copied());
        let hess_prog = nodes.reachable(hessian.iter().flatten().map(|e| e.2));
        Ok(SymbolicDynamics {
            nodes,
            n_states,
            n_inputs,
            outputs,
            jacobian,
            hessian,
            value_prog,
            jac_prog,
            hess_prog,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Infix text of output component `i`; parses back to the same function.
    pub fn component_text(&self, i: usize) -> String {
        self.nodes.render(self.outputs[i])
    }

    pub fn jacobian_text(&self, i: usize, j: usize) -> String {
        self.nodes.render(self.jacobian[i][j])
    }

    /// True if every Hessian entry is identically zero (affine in `x`).
    pub fn is_affine(&self) -> bool {
        self.hessian.iter().all(|h| h.is_empty())
    }

    /// Nonzero Hessian pattern of component `i`.
    pub fn hessian_pattern(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.hessian[i].iter().map(|e| (e.0, e.1))
    }

    fn sweep<V: Value>(&self, prog: &[NodeId], x: &[V], u: &[V]) -> Result<Vec<Option<V>>, EvalError> {
        let mut vals: Vec<Option<V>> = vec![None; self.nodes.nodes.len()];
        for &id in prog {
            let get = |k: NodeId, vals: &Vec<Option<V>>| vals[k as usize].expect("children precede parents");
            let fault = |f: IntervalFault| EvalError {
                node: self.nodes.render(id),
                fault: f,
            };
            let v = match self.nodes.nodes[id as usize] {
                Node::Const(c) => V::konst(c),
                Node::State(i) => x[i as usize],
                Node::Input(i) => u[i as usize],
                Node::Add(a, b) => get(a, &vals).add(get(b, &vals)),
                Node::Sub(a, b) => get(a, &vals).sub(get(b, &vals)),
                Node::Mul(a, b) => get(a, &vals).mul(get(b, &vals)),
                Node::Div(a, b) => get(a, &vals).div(get(b, &vals)).map_err(fault)?,
                Node::Neg(a) => get(a, &vals).neg(),
                Node::Powi(a, n) => get(a, &vals).powi(n).map_err(fault)?,
                Node::Powf(a, p) => get(a, &vals).powf(p).map_err(fault)?,
                Node::Sqrt(a) => get(a, &vals).sqrt().map_err(fault)?,
            };
            vals[id as usize] = Some(v);
        }
        Ok(vals)
    }

    fn check_dims(&self, nx: usize, nu: usize) {
        assert_eq!(nx, self.n_states, "state dimension");
        assert!(nu >= self.n_inputs, "input dimension");
    }

    /// Point evaluation `f(x, u)`.
    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.check_dims(x.len(), u.len());
        let vals = self.sweep(&self.value_prog, x, u)?;
        Ok(self.outputs.iter().map(|&o| vals[o as usize].unwrap()).collect())
    }

    /// Natural interval inclusion `F(X, U) ⊇ f(X, U)`.
    pub fn eval_interval(&self, x: &IntervalVector, u: &IntervalVector) -> Result<IntervalVector, EvalError> {
        self.check_dims(x.dim(), u.dim());
        let vals = self.sweep(&self.value_prog, x.comps(), u.comps())?;
        Ok(IntervalVector::new(self.outputs.iter().map(|&o| vals[o as usize].unwrap()).collect()))
    }

    /// Point Jacobian `∂f/∂x (x, u)`.
    pub fn jacobian(&self, x: &[f64], u: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        self.check_dims(x.len(), u.len());
        let vals = self.sweep(&self.jac_prog, x, u)?;
        Ok(DMatrix::from_fn(self.outputs.len(), self.n_states, |i, j| {
            vals[self.jacobian[i][j] as usize].unwrap()
        }))
    }

    /// Interval enclosure of `∂f/∂x` over `X × U`.
    pub fn jacobian_interval(&self, x: &IntervalVector, u: &IntervalVector) -> Result<IntervalMatrix, EvalError> {
        self.check_dims(x.dim(), u.dim());
        let vals = self.sweep(&self.jac_prog, x.comps(), u.comps())?;
        Ok(IntervalMatrix::from_fn(self.outputs.len(), self.n_states, |i, j| {
            vals[self.jacobian[i][j] as usize].unwrap()
        }))
    }

    /// Interval enclosures of the nonzero Hessian entries `(j, k, [∂²f_i/∂x_j∂x_k])`
    /// with `j <= k`, one list per output component.
    pub fn hessian_interval(&self, x: &IntervalVector, u: &IntervalVector) -> Result<Vec<Vec<(usize, usize, Interval)>>, EvalError> {
        self.check_dims(x.dim(), u.dim());
        let vals = self.sweep(&self.hess_prog, x.comps(), u.comps())?;
        Ok(self
            .hessian
            .iter()
            .map(|row| row.iter().map(|&(j, k, id)| (j, k, vals[id as usize].unwrap())).collect())
            .collect())
    }
}
