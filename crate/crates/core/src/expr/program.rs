use std::collections::HashMap;

use super::{BinOp, CompileError, Expr, Func};

/// Points evaluated per instruction dispatch in [`CompiledProgram::evaluate_batch`].
pub const BATCH_LANES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Instr {
    Const(f64),
    Var(u32),
    Param(u32),
    Neg,
    Bin(BinOp),
    Call1(Func),
    Call2(Func),
}

impl Instr {
    /// (values popped, values pushed)
    fn stack_effect(self) -> (usize, usize) {
        match self {
            Instr::Const(_) | Instr::Var(_) | Instr::Param(_) => (0, 1),
            Instr::Neg | Instr::Call1(_) => (1, 1),
            Instr::Bin(_) | Instr::Call2(_) => (2, 1),
        }
    }
}

/// Postfix program compiled from an [`Expr`].
///
/// Immutable once built; evaluation only touches caller-provided scratch, so
/// one program can be shared by any number of threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledProgram {
    code: Vec<Instr>,
    param_names: Vec<String>,
    dim: usize,
    max_stack: usize,
}

/// Compiles `expr` for points of length `dim`. Parameter slot `i` is
/// `param_names[i]`; names may be listed that the expression never uses.
pub fn compile<S: AsRef<str>>(
    expr: &Expr,
    dim: usize,
    param_names: &[S],
) -> Result<CompiledProgram, CompileError> {
    if dim == 0 {
        return Err(CompileError::ZeroDimension);
    }
    let slots: HashMap<&str, u32> = param_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_ref(), i as u32))
        .collect();
    let mut code = Vec::new();
    emit(expr, dim, &slots, &mut code)?;

    let mut depth = 0usize;
    let mut max_stack = 0usize;
    for instr in &code {
        let (pop, push) = instr.stack_effect();
        assert!(depth >= pop, "stack underflow in generated code");
        depth = depth - pop + push;
        max_stack = max_stack.max(depth);
    }
    assert_eq!(depth, 1, "generated code must leave exactly one value");

    Ok(CompiledProgram {
        code,
        param_names: param_names.iter().map(|s| s.as_ref().to_string()).collect(),
        dim,
        max_stack,
    })
}

fn emit(
    expr: &Expr,
    dim: usize,
    slots: &HashMap<&str, u32>,
    code: &mut Vec<Instr>,
) -> Result<(), CompileError> {
    match expr {
        Expr::Num(v) => code.push(Instr::Const(*v)),
        Expr::Var(i) => {
            if *i >= dim {
                return Err(CompileError::DimensionError { var: i + 1, dim });
            }
            code.push(Instr::Var(*i as u32));
        }
        Expr::Param(name) => {
            let slot = slots
                .get(name.as_str())
                .ok_or_else(|| CompileError::UnboundParameter(name.clone()))?;
            code.push(Instr::Param(*slot));
        }
        Expr::Neg(inner) => {
            emit(inner, dim, slots, code)?;
            code.push(Instr::Neg);
        }
        Expr::Binary { op, lhs, rhs } => {
            emit(lhs, dim, slots, code)?;
            emit(rhs, dim, slots, code)?;
            code.push(Instr::Bin(*op));
        }
        Expr::Call { func, args } => {
            for a in args {
                emit(a, dim, slots, code)?;
            }
            code.push(if func.arity() == 1 {
                Instr::Call1(*func)
            } else {
                Instr::Call2(*func)
            });
        }
    }
    Ok(())
}

/// Per-worker scratch for [`CompiledProgram::evaluate_batch`].
#[derive(Debug, Default, Clone)]
pub struct BatchScratch {
    stack: Vec<[f64; BATCH_LANES]>,
}

impl CompiledProgram {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn code(&self) -> &[Instr] {
        &self.code
    }

    pub fn max_stack(&self) -> usize {
        self.max_stack
    }

    /// Evaluates at one point, allocating its own stack.
    pub fn evaluate(&self, point: &[f64], params: &[f64]) -> f64 {
        let mut stack = Vec::with_capacity(self.max_stack);
        self.evaluate_with(point, params, &mut stack)
    }

    /// Evaluates at one point using `stack` as scratch.
    pub fn evaluate_with(&self, point: &[f64], params: &[f64], stack: &mut Vec<f64>) -> f64 {
        debug_assert_eq!(point.len(), self.dim);
        debug_assert_eq!(params.len(), self.param_names.len());
        stack.clear();
        for instr in &self.code {
            match *instr {
                Instr::Const(v) => stack.push(v),
                Instr::Var(i) => stack.push(point[i as usize]),
                Instr::Param(i) => stack.push(params[i as usize]),
                Instr::Neg => {
                    let top = stack.last_mut().unwrap();
                    *top = -*top;
                }
                Instr::Bin(op) => {
                    let b = stack.pop().unwrap();
                    let a = stack.last_mut().unwrap();
                    *a = op.apply(*a, b);
                }
                Instr::Call1(f) => {
                    let top = stack.last_mut().unwrap();
                    *top = f.apply1(*top);
                }
                Instr::Call2(f) => {
                    let b = stack.pop().unwrap();
                    let a = stack.last_mut().unwrap();
                    *a = f.apply2(*a, b);
                }
            }
        }
        stack[0]
    }

    /// Evaluates at `out.len()` points stored point-major in `points`
    /// (`points[i * dim + j]` is coordinate `j` of point `i`).
    ///
    /// Each output is bit-identical to [`evaluate`](Self::evaluate) at the
    /// same point: the lanes run the same operations in the same order.
    pub fn evaluate_batch(
        &self,
        points: &[f64],
        params: &[f64],
        out: &mut [f64],
        scratch: &mut BatchScratch,
    ) {
        assert_eq!(points.len(), out.len() * self.dim);
        debug_assert_eq!(params.len(), self.param_names.len());
        if scratch.stack.len() < self.max_stack {
            scratch.stack.resize(self.max_stack, [0.0; BATCH_LANES]);
        }
        let stack = &mut scratch.stack;
        let d = self.dim;
        for (block, out_block) in out.chunks_mut(BATCH_LANES).enumerate() {
            let lanes = out_block.len();
            let base = block * BATCH_LANES * d;
            let mut sp = 0usize;
            for instr in &self.code {
                match *instr {
                    Instr::Const(v) => {
                        stack[sp][..lanes].fill(v);
                        sp += 1;
                    }
                    Instr::Var(j) => {
                        let j = j as usize;
                        let dst = &mut stack[sp];
                        for (l, slot) in dst[..lanes].iter_mut().enumerate() {
                            *slot = points[base + l * d + j];
                        }
                        sp += 1;
                    }
                    Instr::Param(i) => {
                        stack[sp][..lanes].fill(params[i as usize]);
                        sp += 1;
                    }
                    Instr::Neg => {
                        for v in &mut stack[sp - 1][..lanes] {
                            *v = -*v;
                        }
                    }
                    Instr::Bin(op) => {
                        sp -= 1;
                        let (lo, hi) = stack.split_at_mut(sp);
                        let a = &mut lo[sp - 1][..lanes];
                        let b = &hi[0][..lanes];
                        match op {
                            BinOp::Add => a.iter_mut().zip(b).for_each(|(x, y)| *x += *y),
                            BinOp::Sub => a.iter_mut().zip(b).for_each(|(x, y)| *x -= *y),
                            BinOp::Mul => a.iter_mut().zip(b).for_each(|(x, y)| *x *= *y),
                            BinOp::Div => a.iter_mut().zip(b).for_each(|(x, y)| *x /= *y),
                            BinOp::Pow => a.iter_mut().zip(b).for_each(|(x, y)| *x = x.powf(*y)),
                        }
                    }
                    Instr::Call1(f) => {
                        for v in &mut stack[sp - 1][..lanes] {
                            *v = f.apply1(*v);
                        }
                    }
                    Instr::Call2(f) => {
                        sp -= 1;
                        let (lo, hi) = stack.split_at_mut(sp);
                        let a = &mut lo[sp - 1][..lanes];
                        let b = &hi[0][..lanes];
                        a.iter_mut().zip(b).for_each(|(x, y)| *x = f.apply2(*x, *y));
                    }
                }
            }
            out_block.copy_from_slice(&stack[0][..lanes]);
        }
    }
}
