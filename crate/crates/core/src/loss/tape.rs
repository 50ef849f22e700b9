use crate::morphology::{
    avg_pool_adjoint, extremum_pool_adjoint, pool_extremum_tracked, relu, zip_with, Backend, Eager,
    PoolKernel, PoolKind,
};
use crate::numeric::canonical_sum;
use crate::volume::{Shape, Volume};

/// Handle to a volume-valued node.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct FieldId(usize);

/// Handle to a scalar-valued node.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ScalarId(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Const,
    MinMaxPool {
        src: usize,
        arg: Vec<u32>,
        half: usize,
    },
    AvgPool {
        src: usize,
        half: usize,
    },
    Relu(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Sum(usize),
    SAdd(usize, usize),
    SSub(usize, usize),
    SMul(usize, usize),
    SDiv(usize, usize),
}

#[derive(Debug)]
enum Value {
    Field(Vec<f64>),
    Scalar(f64),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Value,
    grad: bool,
}

/// Reverse-mode recording of the morphology / overlap primitives.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order; [`Tape::backward`] walks it once in reverse. Nodes that
/// do not depend on a leaf are evaluated but never differentiated.
#[derive(Debug)]
pub struct Tape {
    shape: Shape,
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new(shape: Shape) -> Self {
        Tape {
            shape,
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Value, grad: bool) -> usize {
        self.nodes.push(Node { op, value, grad });
        self.nodes.len() - 1
    }

    fn field(&self, i: usize) -> &[f64] {
        match &self.nodes[i].value {
            Value::Field(v) => v,
            Value::Scalar(_) => unreachable!("node {i} is a scalar"),
        }
    }

    fn scalar(&self, i: usize) -> f64 {
        match self.nodes[i].value {
            Value::Scalar(s) => s,
            Value::Field(_) => unreachable!("node {i} is a field"),
        }
    }

    fn grad(&self, i: usize) -> bool {
        self.nodes[i].grad
    }

    /// A differentiable input.
    pub fn leaf(&mut self, v: &Volume) -> FieldId {
        assert_eq!(v.shape(), self.shape, "leaf shape differs from tape shape");
        FieldId(self.push(Op::Leaf, Value::Field(v.data().to_vec()), true))
    }

    /// A constant input (no gradient).
    pub fn input(&mut self, v: &Volume) -> FieldId {
        assert_eq!(v.shape(), self.shape, "input shape differs from tape shape");
        FieldId(self.push(Op::Const, Value::Field(v.data().to_vec()), false))
    }

    pub fn volume(&self, f: FieldId) -> Volume {
        Volume::from_parts(self.shape, self.field(f.0).to_vec())
    }

    /// Smallest nonzero `|x|` over the arguments of differentiated relu
    /// nodes: how far the current point is from a relu kink.
    pub fn kink_margin(&self) -> f64 {
        let mut margin = f64::INFINITY;
        for n in &self.nodes {
            if let (Op::Relu(src), true) = (&n.op, n.grad) {
                for &x in self.field(*src) {
                    if x != 0.0 {
                        margin = margin.min(x.abs());
                    }
                }
            }
        }
        margin
    }

    /// Gradients of `output` with respect to every leaf, in leaf creation
    /// order.
    pub fn backward(&self, output: ScalarId) -> Vec<Volume> {
        let n = self.nodes.len();
        let len = self.shape.len();
        let mut fadj: Vec<Option<Vec<f64>>> = (0..n).map(|_| None).collect();
        let mut sadj = vec![0.0; n];
        sadj[output.0] = 1.0;

        fn acc(slot: &mut Option<Vec<f64>>, len: usize) -> &mut Vec<f64> {
            slot.get_or_insert_with(|| vec![0.0; len])
        }

        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.grad {
                continue;
            }
            match &node.op {
                Op::Leaf | Op::Const => {}
                Op::Sum(src) => {
                    let a = sadj[i];
                    if a != 0.0 {
                        acc(&mut fadj[*src], len).iter_mut().for_each(|g| *g += a);
                    }
                }
                Op::SAdd(a, b) => {
                    let g = sadj[i];
                    sadj[*a] += g;
                    sadj[*b] += g;
                }
                Op::SSub(a, b) => {
                    let g = sadj[i];
                    sadj[*a] += g;
                    sadj[*b] -= g;
                }
                Op::SMul(a, b) => {
                    let g = sadj[i];
                    let (va, vb) = (self.scalar(*a), self.scalar(*b));
                    sadj[*a] += g * vb;
                    sadj[*b] += g * va;
                }
                Op::SDiv(a, b) => {
                    let g = sadj[i];
                    let (va, vb) = (self.scalar(*a), self.scalar(*b));
                    sadj[*a] += g / vb;
                    sadj[*b] -= g * va / (vb * vb);
                }
                field_op => {
                    let Some(adj) = fadj[i].take() else { continue };
                    match field_op {
                        Op::MinMaxPool { src, arg, half } => {
                            if self.grad(*src) {
                                extremum_pool_adjoint(
                                    self.shape,
                                    &adj,
                                    arg,
                                    *half,
                                    acc(&mut fadj[*src], len),
                                );
                            }
                        }
                        Op::AvgPool { src, half } => {
                            if self.grad(*src) {
                                avg_pool_adjoint(
                                    self.shape,
                                    &adj,
                                    *half,
                                    acc(&mut fadj[*src], len),
                                );
                            }
                        }
                        Op::Relu(src) => {
                            let x = self.field(*src);
                            let dst = acc(&mut fadj[*src], len);
                            for ((d, &g), &v) in dst.iter_mut().zip(&adj).zip(x) {
                                if v > 0.0 {
                                    *d += g;
                                }
                            }
                        }
                        Op::Add(a, b) | Op::Sub(a, b) => {
                            let sign = if matches!(field_op, Op::Sub(..)) {
                                -1.0
                            } else {
                                1.0
                            };
                            if self.grad(*a) {
                                acc(&mut fadj[*a], len)
                                    .iter_mut()
                                    .zip(&adj)
                                    .for_each(|(d, &g)| *d += g);
                            }
                            if self.grad(*b) {
                                acc(&mut fadj[*b], len)
                                    .iter_mut()
                                    .zip(&adj)
                                    .for_each(|(d, &g)| *d += sign * g);
                            }
                        }
                        Op::Mul(a, b) => {
                            for (this, other) in [(*a, *b), (*b, *a)] {
                                if self.grad(this) {
                                    let o = self.field(other).to_vec();
                                    acc(&mut fadj[this], len)
                                        .iter_mut()
                                        .zip(adj.iter().zip(&o))
                                        .for_each(|(d, (&g, &v))| *d += g * v);
                                }
                            }
                        }
                        _ => unreachable!(),
                    }
                }
            }
        }

        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.op, Op::Leaf))
            .map(|(i, _)| {
                Volume::from_parts(self.shape, fadj[i].take().unwrap_or_else(|| vec![0.0; len]))
            })
            .collect()
    }
}

impl Backend for Tape {
    type Field = FieldId;
    type Scalar = ScalarId;

    fn pool(&mut self, x: &FieldId, kernel: PoolKernel) -> FieldId {
        let grad = self.grad(x.0);
        let src = self.field(x.0);
        let (op, value) = match kernel.kind() {
            PoolKind::Avg => {
                let v = Eager
                    .pool(&Volume::from_parts(self.shape, src.to_vec()), kernel)
                    .into_data();
                (
                    Op::AvgPool {
                        src: x.0,
                        half: kernel.half(),
                    },
                    v,
                )
            }
            PoolKind::Min | PoolKind::Max => {
                let (v, arg) = pool_extremum_tracked(self.shape, src, kernel);
                (
                    Op::MinMaxPool {
                        src: x.0,
                        arg: if grad { arg } else { Vec::new() },
                        half: kernel.half(),
                    },
                    v,
                )
            }
        };
        FieldId(self.push(op, Value::Field(value), grad))
    }

    fn relu(&mut self, x: &FieldId) -> FieldId {
        let v = self.field(x.0).iter().map(|&v| relu(v)).collect();
        let grad = self.grad(x.0);
        FieldId(self.push(Op::Relu(x.0), Value::Field(v), grad))
    }

    fn add(&mut self, a: &FieldId, b: &FieldId) -> FieldId {
        let v = zip_with(self.field(a.0), self.field(b.0), |x, y| x + y);
        let grad = self.grad(a.0) || self.grad(b.0);
        FieldId(self.push(Op::Add(a.0, b.0), Value::Field(v), grad))
    }

    fn sub(&mut self, a: &FieldId, b: &FieldId) -> FieldId {
        let v = zip_with(self.field(a.0), self.field(b.0), |x, y| x - y);
        let grad = self.grad(a.0) || self.grad(b.0);
        FieldId(self.push(Op::Sub(a.0, b.0), Value::Field(v), grad))
    }

    fn mul(&mut self, a: &FieldId, b: &FieldId) -> FieldId {
        let v = zip_with(self.field(a.0), self.field(b.0), |x, y| x * y);
        let grad = self.grad(a.0) || self.grad(b.0);
        FieldId(self.push(Op::Mul(a.0, b.0), Value::Field(v), grad))
    }

    fn sum(&mut self, x: &FieldId) -> ScalarId {
        let s = canonical_sum(self.field(x.0));
        let grad = self.grad(x.0);
        ScalarId(self.push(Op::Sum(x.0), Value::Scalar(s), grad))
    }

    fn constant(&mut self, c: f64) -> ScalarId {
        ScalarId(self.push(Op::Const, Value::Scalar(c), false))
    }

    fn s_add(&mut self, a: ScalarId, b: ScalarId) -> ScalarId {
        self.scalar_op(a, b, |x, y| x + y, Op::SAdd(a.0, b.0))
    }

    fn s_sub(&mut self, a: ScalarId, b: ScalarId) -> ScalarId {
        self.scalar_op(a, b, |x, y| x - y, Op::SSub(a.0, b.0))
    }

    fn s_mul(&mut self, a: ScalarId, b: ScalarId) -> ScalarId {
        self.scalar_op(a, b, |x, y| x * y, Op::SMul(a.0, b.0))
    }

    fn s_div(&mut self, a: ScalarId, b: ScalarId) -> ScalarId {
        self.scalar_op(a, b, |x, y| x / y, Op::SDiv(a.0, b.0))
    }

    fn value(&self, s: ScalarId) -> f64 {
        self.scalar(s.0)
    }
}

impl Tape {
    fn scalar_op(&mut self, a: ScalarId, b: ScalarId, f: fn(f64, f64) -> f64, op: Op) -> ScalarId {
        let v = f(self.scalar(a.0), self.scalar(b.0));
        let grad = self.grad(a.0) || self.grad(b.0);
        ScalarId(self.push(op, Value::Scalar(v), grad))
    }
}
