//! Scalar reverse-mode differentiation on a recorded tape.
//!
//! Every operation on a tracked [`Var`] appends a node holding up to two
//! parent indices and the local partial derivatives. A single backward sweep
//! over the node list in reverse order yields the adjoint of every node.

use std::cell::RefCell;
use std::ops::{Add, Deref, Mul, Neg, Sub};

use super::scalar::Scalar;
use crate::error::{Error, Result};

const NO_PARENT: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    parents: [usize; 2],
    partials: [f64; 2],
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// A value that is either recorded on a tape or an untracked constant.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    idx: usize,
    val: f64,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.tape {
            Some(_) => write!(f, "Var(#{}: {})", self.idx, self.val),
            None => write!(f, "Const({})", self.val),
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers a new independent variable.
    pub fn var(&self, val: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [NO_PARENT; 2],
            partials: [0.0; 2],
        });
        Var {
            tape: Some(self),
            idx,
            val,
        }
    }

    fn push(&self, node: Node) -> usize {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(node);
        nodes.len() - 1
    }

    /// Adjoints of every node with respect to `output`.
    pub fn adjoints(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        if output.tape.is_none() {
            return adj;
        }
        adj[output.idx] = 1.0;
        for i in (0..=output.idx).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = nodes[i];
            for k in 0..2 {
                if node.parents[k] != NO_PARENT {
                    adj[node.parents[k]] += a * node.partials[k];
                }
            }
        }
        adj
    }

    /// Gradient of `output` with respect to the listed variables.
    pub fn gradient(&self, output: Var<'_>, wrt: &[Var<'_>]) -> Vec<f64> {
        let adj = self.adjoints(output);
        wrt.iter()
            .map(|v| if v.tape.is_some() { adj[v.idx] } else { 0.0 })
            .collect()
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.val
    }

    pub fn is_tracked(&self) -> bool {
        self.tape.is_some()
    }

    fn unary(self, val: f64, partial: f64) -> Self {
        match self.tape {
            None => Var {
                tape: None,
                idx: 0,
                val,
            },
            Some(tape) => Var {
                tape: Some(tape),
                idx: tape.push(Node {
                    parents: [self.idx, NO_PARENT],
                    partials: [partial, 0.0],
                }),
                val,
            },
        }
    }

    fn binary(self, rhs: Self, val: f64, dl: f64, dr: f64) -> Self {
        match (self.tape, rhs.tape) {
            (None, None) => Var {
                tape: None,
                idx: 0,
                val,
            },
            (Some(_), None) => self.unary(val, dl),
            (None, Some(_)) => rhs.unary(val, dr),
            (Some(tape), Some(other)) => {
                debug_assert!(std::ptr::eq(tape, other), "mixing variables from two tapes");
                Var {
                    tape: Some(tape),
                    idx: tape.push(Node {
                        parents: [self.idx, rhs.idx],
                        partials: [dl, dr],
                    }),
                    val,
                }
            }
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self {
        self.unary(-self.val, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Self {
        self.unary(self.val + rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Self {
        self.unary(self.val * rhs, rhs)
    }
}

impl<'t> Scalar for Var<'t> {
    fn constant(v: f64) -> Self {
        Var {
            tape: None,
            idx: 0,
            val: v,
        }
    }
    fn value(self) -> f64 {
        self.val
    }
    fn tanh(self) -> Self {
        let t = self.val.tanh();
        self.unary(t, 1.0 - t * t)
    }
    fn exp(self) -> Self {
        let e = self.val.exp();
        self.unary(e, e)
    }
    fn sin(self) -> Self {
        self.unary(self.val.sin(), self.val.cos())
    }
    fn cos(self) -> Self {
        self.unary(self.val.cos(), -self.val.sin())
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.val;
        self.unary(r, -r * r)
    }
}

/// Gradient of a scalar loss with respect to every parameter, aligned with
/// the parameter flattening order.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector(pub Vec<f64>);

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GradientVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Records `loss` over tape variables seeded with `params` and returns the
/// loss value together with its gradient.
///
/// Parameters the loss does not touch receive gradient 0. A non-finite loss
/// is reported as [`Error::NonFinite`].
pub fn loss_parameter_gradient<F>(params: &[f64], loss: F) -> Result<(f64, GradientVector)>
where
    F: for<'t> FnOnce(&[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = params.iter().map(|&p| tape.var(p)).collect();
    let out = loss(&vars);
    if !out.value().is_finite() {
        return Err(Error::NonFinite {
            what: "loss".into(),
        });
    }
    let grad = tape.gradient(out, &vars);
    Ok((out.value(), GradientVector(grad)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        let (l, g) = loss_parameter_gradient(&[3.0], |p| p[0] * p[0]).unwrap();
        assert_eq!(l, 9.0);
        assert_eq!(g.0, vec![6.0]);
    }

    #[test]
    fn untouched_parameter_gets_zero() {
        let (_, g) = loss_parameter_gradient(&[1.0, 2.0], |p| p[0].sin()).unwrap();
        assert_eq!(g.0, vec![1f64.cos(), 0.0]);
    }

    #[test]
    fn constants_do_not_record() {
        let tape = Tape::new();
        let c = Var::constant(2.0) * Var::constant(3.0);
        assert_eq!(c.value(), 6.0);
        assert!(!c.is_tracked());
        assert!(tape.is_empty());
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let r = loss_parameter_gradient(&[0.0], |p| p[0].recip());
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn shared_subexpression_accumulates() {
        // d/dx [x * exp(x) + tanh(x)] = exp(x)(1 + x) + 1 - tanh(x)^2
        let x0 = 0.37;
        let (_, g) = loss_parameter_gradient(&[x0], |p| p[0] * p[0].exp() + p[0].tanh()).unwrap();
        let want = x0.exp() * (1.0 + x0) + 1.0 - x0.tanh().powi(2);
        assert!((g[0] - want).abs() < 1e-15);
    }
}
