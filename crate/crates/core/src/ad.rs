//! Scalar reverse-mode differentiation for small per-point expressions.
//!
//! Loss terms are written once, generic over [`Real`], and evaluated either
//! on plain `f64` or on [`Var`]s recorded on a [`Tape`]. The tape gives the
//! exact adjoint of the term with respect to every leaf, which is how the
//! PDE residuals hand their sensitivities to the network backward pass.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the residual and spread-rate expressions.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant of the same kind as `self`.
    fn constant(&self, c: f64) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, p: f64) -> Self;

    fn square(self) -> Self {
        self * self
    }

    /// `max(self, lo)` with the derivative of whichever branch is active.
    fn max_const(self, lo: f64) -> Self {
        if self.value() < lo {
            self.constant(lo)
        } else {
            self
        }
    }

    /// `min(self, hi)` with the derivative of whichever branch is active.
    fn min_const(self, hi: f64) -> Self {
        if self.value() > hi {
            self.constant(hi)
        } else {
            self
        }
    }
}

impl Real for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant(&self, c: f64) -> Self {
        c
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

const NO_PARENT: usize = usize::MAX;

#[derive(Clone, Copy)]
struct Node {
    parents: [usize; 2],
    partials: [f64; 2],
}

/// Wengert list of recorded operations.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push([NO_PARENT; 2], [0.0; 2]);
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, parents: [usize; 2], partials: [f64; 2]) -> usize {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { parents, partials });
        nodes.len() - 1
    }

    /// Adjoints of `output` with respect to every node, indexed by node id.
    pub fn gradient(&self, output: &Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        if output.idx == NO_PARENT {
            return adj;
        }
        adj[output.idx] = 1.0;
        for k in (0..=output.idx).rev() {
            let a = adj[k];
            if a == 0.0 {
                continue;
            }
            let node = nodes[k];
            for s in 0..2 {
                if node.parents[s] != NO_PARENT {
                    adj[node.parents[s]] += a * node.partials[s];
                }
            }
        }
        adj
    }
}

/// A value recorded on a [`Tape`]; constants carry no node.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: usize,
    val: f64,
}

impl<'t> Var<'t> {
    /// Node id, usable as an index into [`Tape::gradient`]. `None` for constants.
    pub fn id(&self) -> Option<usize> {
        (self.idx != NO_PARENT).then_some(self.idx)
    }

    fn unary(self, val: f64, d: f64) -> Self {
        if self.idx == NO_PARENT {
            return self.constant(val);
        }
        let idx = self.tape.push([self.idx, NO_PARENT], [d, 0.0]);
        Var {
            tape: self.tape,
            idx,
            val,
        }
    }

    fn binary(self, other: Self, val: f64, da: f64, db: f64) -> Self {
        match (self.idx == NO_PARENT, other.idx == NO_PARENT) {
            (true, true) => self.constant(val),
            (false, true) => self.unary(val, da),
            (true, false) => other.unary(val, db),
            (false, false) => {
                let idx = self.tape.push([self.idx, other.idx], [da, db]);
                Var {
                    tape: self.tape,
                    idx,
                    val,
                }
            }
        }
    }
}

impl Add for Var<'_> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl Sub for Var<'_> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl Mul for Var<'_> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl Div for Var<'_> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.val / rhs.val;
        self.binary(rhs, q, 1.0 / rhs.val, -q / rhs.val)
    }
}

impl Neg for Var<'_> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.val, -1.0)
    }
}

impl Add<f64> for Var<'_> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self.unary(self.val + rhs, 1.0)
    }
}

impl Sub<f64> for Var<'_> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self.unary(self.val - rhs, 1.0)
    }
}

impl Mul<f64> for Var<'_> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.unary(self.val * rhs, rhs)
    }
}

impl Div<f64> for Var<'_> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self.unary(self.val / rhs, 1.0 / rhs)
    }
}

impl Real for Var<'_> {
    fn value(&self) -> f64 {
        self.val
    }
    fn constant(&self, c: f64) -> Self {
        Var {
            tape: self.tape,
            idx: NO_PARENT,
            val: c,
        }
    }
    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.unary(s, 0.5 / s)
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        self.unary(e, e)
    }
    fn ln(self) -> Self {
        self.unary(self.val.ln(), 1.0 / self.val)
    }
    fn powf(self, p: f64) -> Self {
        let v = self.val.powf(p);
        let d = if p == 0.0 {
            0.0
        } else {
            p * self.val.powf(p - 1.0)
        };
        self.unary(v, d)
    }
}
