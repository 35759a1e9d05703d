//! Lowering to Clarabel's standard form `min q'x  s.t.  Ax + s = b, s ∈ K`.
//!
//! `x` stacks the Hermitian coordinates of every variable. Equalities become
//! zero-cone rows; PSD variables and PSD constraints become nonnegative,
//! second-order or PSD-triangle rows depending on their side.

use std::collections::BTreeMap;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::coords::{self, ConeShape};
use super::{check_solution, ConicError, ConicProgram, Result, Sense, Solution, SolverConfig, Status, VarKind};
use crate::operator::{CMatrix, HermitianOperator};

const EMPTY_ROW_TOL: f64 = 0.0;

/// Rows of one PSD block, for reading its multiplier back.
struct Block {
    owner: Owner,
    side: usize,
    first_row: usize,
}

enum Owner {
    Variable(super::VarId),
    Constraint(String),
}

struct Lowered {
    blocks: Vec<Block>,
    q: Vec<f64>,
    a: Triplets,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    offsets: Vec<usize>,
    n: usize,
}

#[derive(Default)]
struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    fn push(&mut self, r: usize, c: usize, v: f64) {
        self.rows.push(r);
        self.cols.push(c);
        self.vals.push(v);
    }
}

/// Objective coefficient of each coordinate for `Re tr(W X)`.
fn objective_coords(w: &CMatrix) -> Vec<f64> {
    coords::layout(w.nrows())
        .into_iter()
        .map(|k| match k {
            coords::Coord::Diag(i) => w[(i, i)].re,
            coords::Coord::Re(i, j) => w[(i, j)].re + w[(j, i)].re,
            coords::Coord::Im(i, j) => w[(i, j)].im - w[(j, i)].im,
        })
        .collect()
}

fn lower(program: &ConicProgram) -> Lowered {
    let mut offsets = Vec::with_capacity(program.variables.len());
    let mut n = 0;
    for v in &program.variables {
        offsets.push(n);
        n += v.side * v.side;
    }

    let mut q = vec![0.0; n];
    let flip = if program.sense == Sense::Maximize { -1.0 } else { 1.0 };
    for (var, w) in &program.objective.weights {
        let base = offsets[var.0];
        for (k, v) in objective_coords(w).into_iter().enumerate() {
            q[base + k] += flip * v;
        }
    }

    let mut a = Triplets::default();
    let mut b = Vec::new();
    let mut cones = Vec::new();

    // zero cone: every equality output coordinate that is not identically 0 = 0
    let mut zero_rows = 0;
    for cons in &program.equalities {
        let side = cons.expr.side;
        let constant = coords::to_coords(&cons.expr.constant);
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); side * side];
        for (var, map) in &cons.expr.terms {
            let base = offsets[var.0];
            for &(r, col, v) in map.entries() {
                per_row[r].push((base + col, v));
            }
        }
        for (r, entries) in per_row.into_iter().enumerate() {
            if entries.is_empty() && constant[r].abs() <= EMPTY_ROW_TOL {
                continue;
            }
            let row = b.len();
            for (col, v) in entries {
                a.push(row, col, v);
            }
            b.push(-constant[r]);
            zero_rows += 1;
        }
    }
    if zero_rows > 0 {
        cones.push(SupportedConeT::ZeroConeT(zero_rows));
    }

    // cone rows, s = E(Lx + c): A = -E L, b = E c
    let mut blocks = Vec::new();
    let push_cone = |a: &mut Triplets,
                     b: &mut Vec<f64>,
                     cones: &mut Vec<SupportedConeT<f64>>,
                     side: usize,
                     terms: Vec<(usize, Vec<(usize, usize, f64)>)>,
                     constant: Vec<f64>| {
        let shape = ConeShape::for_side(side);
        // input coordinate -> list of (global column, coefficient)
        let mut by_coord: Vec<Vec<(usize, f64)>> = vec![Vec::new(); side * side];
        for (base, entries) in &terms {
            for &(r, col, v) in entries {
                by_coord[r].push((base + col, v));
            }
        }
        for row_spec in shape.rows(side) {
            let row = b.len();
            let mut rhs = 0.0;
            for (k, coef) in row_spec {
                rhs += coef * constant[k];
                for &(col, v) in &by_coord[k] {
                    a.push(row, col, -coef * v);
                }
            }
            b.push(rhs);
        }
        match shape {
            ConeShape::Nonnegative => match cones.last_mut() {
                Some(SupportedConeT::NonnegativeConeT(k)) => *k += 1,
                _ => cones.push(SupportedConeT::NonnegativeConeT(1)),
            },
            ConeShape::SecondOrder => cones.push(SupportedConeT::SecondOrderConeT(4)),
            ConeShape::RealEmbedding(dim) => cones.push(SupportedConeT::PSDTriangleConeT(dim)),
        }
    };

    for v in &program.variables {
        if v.kind == VarKind::Psd {
            blocks.push(Block { owner: Owner::Variable(v.id), side: v.side, first_row: b.len() });
            let identity: Vec<(usize, usize, f64)> = (0..v.side * v.side).map(|k| (k, k, 1.0)).collect();
            push_cone(
                &mut a,
                &mut b,
                &mut cones,
                v.side,
                vec![(offsets[v.id.0], identity)],
                vec![0.0; v.side * v.side],
            );
        }
    }
    for cons in &program.psd {
        let side = cons.expr.side;
        blocks.push(Block { owner: Owner::Constraint(cons.name.clone()), side, first_row: b.len() });
        let terms = cons.expr.terms.iter().map(|(var, map)| (offsets[var.0], map.entries().to_vec())).collect();
        push_cone(&mut a, &mut b, &mut cones, side, terms, coords::to_coords(&cons.expr.constant));
    }

    Lowered { blocks, q, a, b, cones, offsets, n }
}

/// `Z` with `Re tr[Z X] = z' E coords(X)`, the inverse of [`objective_coords`].
fn block_dual(block: &Block, z: &[f64]) -> CMatrix {
    let side = block.side;
    let mut v = vec![0.0; side * side];
    for (k, row_spec) in ConeShape::for_side(side).rows(side).into_iter().enumerate() {
        for (coord, coef) in row_spec {
            v[coord] += coef * z[block.first_row + k];
        }
    }
    let mut out = CMatrix::zeros(side, side);
    for (k, coord) in coords::layout(side).into_iter().enumerate() {
        match coord {
            coords::Coord::Diag(i) => out[(i, i)].re = v[k],
            coords::Coord::Re(i, j) => {
                out[(i, j)].re = 0.5 * v[k];
                out[(j, i)].re = 0.5 * v[k];
            }
            coords::Coord::Im(i, j) => {
                out[(i, j)].im = 0.5 * v[k];
                out[(j, i)].im = -0.5 * v[k];
            }
        }
    }
    out
}

/// Solves `program` with Clarabel and classifies the result using an
/// independent residual check.
pub fn solve(program: &ConicProgram, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let lowered = lower(program);
    let m = lowered.b.len();
    let n = lowered.n;
    if n == 0 {
        return Err(ConicError::BadProgram("program has no variables".into()));
    }
    let a = CscMatrix::new_from_triplets(m, n, lowered.a.rows, lowered.a.cols, lowered.a.vals);
    let p = CscMatrix::zeros((n, n));
    let tol = (config.eps_feas * 1e-1).max(1e-10);
    let reduced = (tol * 1e2).min(1e-5);
    let mut attempt = 0;
    let (status, x, z, iterations) = loop {
        let mut builder = DefaultSettingsBuilder::default();
        builder
            .verbose(false)
            .max_iter(config.max_iterations)
            .tol_feas(tol)
            .tol_gap_abs(tol)
            .tol_gap_rel(tol)
            .reduced_tol_feas(reduced)
            .reduced_tol_gap_abs(reduced)
            .reduced_tol_gap_rel(reduced);
        // retries for KKT trouble: stronger regularization and refinement,
        // then shorter steps
        if attempt >= 1 {
            builder
                .static_regularization_constant(1e-7)
                .iterative_refinement_max_iter(50)
                .iterative_refinement_reltol(1e-14)
                .iterative_refinement_abstol(1e-14);
        }
        if attempt >= 2 {
            builder.max_step_fraction(0.9).static_regularization_constant(1e-6);
        }
        let settings = builder.build().map_err(|e| ConicError::Backend(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, &lowered.q, &a, &lowered.b, &lowered.cones, settings)
            .map_err(|e| ConicError::Backend(e.to_string()))?;
        solver.solve();
        let sol = solver.solution;
        let retry = matches!(sol.status, SolverStatus::NumericalError | SolverStatus::InsufficientProgress);
        if std::env::var_os("LHS_DEBUG_SOLVER").is_some() {
            eprintln!("clarabel attempt {attempt}: {:?} after {}", sol.status, sol.iterations);
        }
        if retry && attempt < 2 {
            attempt += 1;
            continue;
        }
        break (sol.status, sol.x, sol.z, sol.iterations);
    };

    let candidate = match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => status,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Ok(Solution::failed(Status::Infeasible, iterations))
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return Ok(Solution::failed(Status::Unbounded, iterations))
        }
        _ => return Ok(Solution::failed(Status::NumericalFailure, iterations)),
    };

    let mut values = BTreeMap::new();
    for v in &program.variables {
        let base = lowered.offsets[v.id.0];
        let m = coords::from_coords(v.side, &x[base..base + v.side * v.side]);
        values.insert(v.id, HermitianOperator::from_parts(vec![v.side], m));
    }
    let mut constraint_duals = BTreeMap::new();
    let mut variable_duals = BTreeMap::new();
    for block in &lowered.blocks {
        let dual = HermitianOperator::from_parts(vec![block.side], block_dual(block, &z));
        match &block.owner {
            Owner::Variable(id) => {
                variable_duals.insert(*id, dual);
            }
            Owner::Constraint(name) => {
                constraint_duals.insert(name.clone(), dual);
            }
        }
    }
    let mut out = Solution {
        status: Status::NumericalFailure,
        constraint_duals,
        variable_duals,
        values,
        objective: f64::NAN,
        primal_residual: f64::INFINITY,
        min_eigenvalue: f64::NEG_INFINITY,
        iterations,
    };
    let report = check_solution(program, &out, config);
    out.objective = report.objective;
    out.primal_residual = report.equality_residual;
    out.min_eigenvalue = report.min_eigenvalue;
    let tight = report.equality_residual <= config.eps_feas && report.min_eigenvalue >= -config.eps_psd;
    let loose = report.equality_residual <= config.inaccurate_band && report.min_eigenvalue >= -config.inaccurate_band;
    out.status = match (candidate, tight, loose) {
        (SolverStatus::Solved, true, _) => Status::Optimal,
        (_, _, true) => Status::Inaccurate,
        _ => Status::NumericalFailure,
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_coords_match_trace() {
        let mut rng = crate::rng::RngStream::new(9, 0);
        for side in 1..5 {
            let w = CMatrix::from_fn(side, side, |_, _| rng.complex_normal());
            let g = CMatrix::from_fn(side, side, |_, _| rng.complex_normal());
            let x = (&g + g.adjoint()).map(|z| z * 0.5);
            let direct = (&w * &x).trace().re;
            let via: f64 = objective_coords(&w).iter().zip(coords::to_coords(&x)).map(|(a, b)| a * b).sum();
            assert!((direct - via).abs() < 1e-12);
        }
    }
}
