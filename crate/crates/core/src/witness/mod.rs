//! Entanglement quantifiers under the PPT relaxation and their optimal
//! witnesses.
//!
//! `K` is the cone of PPT operators (`X ⪰ 0`, `X^Γ ⪰ 0`, Γ on the first
//! party) and `K* = {P + Q^Γ : P, Q ⪰ 0}` its dual. Every quantifier has a
//! primal over `K` and a dual `μ* = −min tr[Wρ]` over witnesses `W ∈ K*`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{
    scalar, scalar_times, solve, AffineExpr, ConicError, LinearMap, Objective, ProgramSpec, SolverConfig, Status, VarId,
};
use crate::operator::{
    c, partial_trace, partial_transpose, tensor, BipartiteCut, CMatrix, DensityMatrix, HermitianOperator, OperatorError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("ppt-not-exact: PPT is not equivalent to separability for dims {0:?}; pass allow_bound for a lower bound")]
    PptNotExact(Vec<usize>),
    #[error("bad-dims: {0}")]
    BadDims(String),
    #[error("unknown quantifier {0:?}")]
    UnknownKind(String),
    #[error("solver {0}")]
    Solver(Status),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

pub type Result<T> = std::result::Result<T, WitnessError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantifierKind {
    OneSidedRandomRobustness,
    OneSidedFixedRobustness,
    OneSidedGeneralizedRobustness,
    RandomRobustness,
    GeneralizedRobustness,
    BestSeparableApproximation,
    Negativity,
}

impl QuantifierKind {
    pub const ALL: [QuantifierKind; 7] = [
        QuantifierKind::OneSidedRandomRobustness,
        QuantifierKind::OneSidedFixedRobustness,
        QuantifierKind::OneSidedGeneralizedRobustness,
        QuantifierKind::RandomRobustness,
        QuantifierKind::GeneralizedRobustness,
        QuantifierKind::BestSeparableApproximation,
        QuantifierKind::Negativity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuantifierKind::OneSidedRandomRobustness => "one-sided-random-robustness",
            QuantifierKind::OneSidedFixedRobustness => "one-sided-fixed-robustness",
            QuantifierKind::OneSidedGeneralizedRobustness => "one-sided-generalized-robustness",
            QuantifierKind::RandomRobustness => "random-robustness",
            QuantifierKind::GeneralizedRobustness => "generalized-robustness",
            QuantifierKind::BestSeparableApproximation => "best-separable-approximation",
            QuantifierKind::Negativity => "negativity",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            QuantifierKind::OneSidedRandomRobustness => "1srr",
            QuantifierKind::OneSidedFixedRobustness => "1sfr",
            QuantifierKind::OneSidedGeneralizedRobustness => "1sgr",
            QuantifierKind::RandomRobustness => "rr",
            QuantifierKind::GeneralizedRobustness => "gr",
            QuantifierKind::BestSeparableApproximation => "bsa",
            QuantifierKind::Negativity => "neg",
        }
    }

    /// Robustness kinds report `μ/(1+μ)`; BSA and negativity report `μ`.
    pub fn is_robustness(self) -> bool {
        !matches!(self, QuantifierKind::BestSeparableApproximation | QuantifierKind::Negativity)
    }

    pub fn e_from_mu(self, mu: f64) -> f64 {
        if !self.is_robustness() {
            mu
        } else if mu.is_infinite() {
            1.0
        } else {
            mu / (1.0 + mu)
        }
    }
}

impl fmt::Display for QuantifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuantifierKind {
    type Err = WitnessError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        QuantifierKind::ALL.into_iter().find(|k| k.name() == s || k.short() == s).ok_or(WitnessError::UnknownKind(s))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessConfig {
    pub solver: SolverConfig,
    /// Alice's reference state for the one-sided fixed robustness.
    pub gamma: DensityMatrix,
    /// Accept dims where PPT only gives a lower bound.
    pub allow_bound: bool,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            gamma: DensityMatrix::pure(&[2], &[c(1.0, 0.0), c(0.0, 0.0)]).expect("|0>"),
            allow_bound: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub kind: QuantifierKind,
    pub mu: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<HermitianOperator>,
    pub relaxation: String,
    pub dual_feasible: bool,
    pub status: Status,
}

fn alice_cut() -> BipartiteCut {
    BipartiteCut::single(0)
}

fn check_dims(rho: &DensityMatrix, config: &WitnessConfig) -> Result<()> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(WitnessError::BadDims(format!("bipartite state expected, got {dims:?}")));
    }
    if dims[0] * dims[1] > 6 && !config.allow_bound {
        return Err(WitnessError::PptNotExact(dims.to_vec()));
    }
    Ok(())
}

fn op_on(dims: &[usize], m: &CMatrix) -> HermitianOperator {
    HermitianOperator::new(dims.to_vec(), m.clone()).expect("basis images are Hermitian")
}

fn pt_map(dims: &[usize]) -> Result<LinearMap> {
    let side: usize = dims.iter().product();
    let dims = dims.to_vec();
    Ok(LinearMap::from_fn(side, side, move |x| {
        partial_transpose(&op_on(&dims, x), &alice_cut()).expect("valid cut").into_entries()
    })?)
}

/// `tr_B[X (I ⊗ S)]`, Hermitian whenever `X` and `S` are.
fn weighted_alice_marginal(x: &CMatrix, s: &CMatrix, d_a: usize) -> CMatrix {
    let d_b = x.nrows() / d_a;
    CMatrix::from_fn(d_a, d_a, |i, j| {
        let block = x.view((i * d_b, j * d_b), (d_b, d_b));
        (block * s).trace()
    })
}

/// The operator `σ` that the fixed-direction robustness kinds mix in.
fn noise_operator(
    rho: &DensityMatrix,
    kind: QuantifierKind,
    config: &WitnessConfig,
) -> Result<Option<HermitianOperator>> {
    let dims = rho.dims();
    let rho_b = partial_trace(rho.op(), &BipartiteCut::single(1))?;
    Ok(match kind {
        QuantifierKind::OneSidedRandomRobustness => {
            Some(tensor(&HermitianOperator::maximally_mixed(&dims[..1]), &rho_b))
        }
        QuantifierKind::OneSidedFixedRobustness => {
            if config.gamma.dims() != &dims[..1] {
                return Err(WitnessError::BadDims("gamma must live on Alice's space".into()));
            }
            Some(tensor(config.gamma.op(), &rho_b))
        }
        QuantifierKind::RandomRobustness => Some(HermitianOperator::maximally_mixed(dims)),
        _ => None,
    })
}

fn one() -> HermitianOperator {
    HermitianOperator::from_parts(vec![1], scalar(1.0))
}

/// Adds `expr ∈ K`.
fn add_ppt(spec: &mut ProgramSpec, name: &str, expr: AffineExpr, pt: &LinearMap, pt_const: &CMatrix) {
    let mut transposed = AffineExpr::zero(expr.side());
    transposed.add_constant(pt_const);
    for (v, map) in expr.terms() {
        let composed = compose(pt, map);
        transposed.add_term(*v, composed);
    }
    spec.add_psd(format!("{name}_psd"), expr);
    spec.add_psd(format!("{name}_pt"), transposed);
}

/// `outer ∘ inner`.
fn compose(outer: &LinearMap, inner: &LinearMap) -> LinearMap {
    let n = inner.in_side();
    let inner = inner.clone();
    let outer = outer.clone();
    LinearMap::from_fn(n, outer.out_side(), move |x| outer.apply(&inner.apply(x))).expect("composition")
}

/// Primal program of `kind`; PSD constraint names are fixed so that the
/// witness can be read from their multipliers.
fn primal_program(
    rho: &DensityMatrix,
    kind: QuantifierKind,
    config: &WitnessConfig,
) -> Result<(crate::conic::ConicProgram, Option<VarId>)> {
    check_dims(rho, config)?;
    let dims = rho.dims().to_vec();
    let side: usize = dims.iter().product();
    let pt = pt_map(&dims)?;
    let rho_pt = partial_transpose(rho.op(), &alice_cut())?;
    let mut spec = ProgramSpec::new();
    let mut omega_var = None;

    match kind {
        QuantifierKind::OneSidedRandomRobustness
        | QuantifierKind::OneSidedFixedRobustness
        | QuantifierKind::RandomRobustness => {
            let sigma = noise_operator(rho, kind, config)?.expect("noise kinds");
            let mu = spec.psd_variable(1, "mu");
            let sigma_pt = partial_transpose(&sigma, &alice_cut())?;
            spec.add_psd("mix_psd", AffineExpr::constant(rho.op()).with_term(mu, scalar_times(&sigma)));
            spec.add_psd("mix_pt", AffineExpr::constant(&rho_pt).with_term(mu, scalar_times(&sigma_pt)));
            spec.minimize(Objective::new().with_trace(mu, 1, 1.0));
        }
        QuantifierKind::OneSidedGeneralizedRobustness => {
            let d_a = dims[0];
            let rho_b = partial_trace(rho.op(), &BipartiteCut::single(1))?;
            let omega = spec.psd_variable(d_a, "omega_A");
            let rb = rho_b.entries().clone();
            let embed = LinearMap::from_fn(d_a, side, move |x| x.kronecker(&rb))?;
            let expr = AffineExpr::constant(rho.op()).with_term(omega, embed);
            add_ppt(&mut spec, "mix", expr, &pt, rho_pt.entries());
            spec.minimize(Objective::new().with_trace(omega, d_a, 1.0));
        }
        QuantifierKind::GeneralizedRobustness => {
            let omega = spec.psd_variable(side, "omega");
            let expr = AffineExpr::constant(rho.op()).with_term(omega, LinearMap::identity(side));
            add_ppt(&mut spec, "mix", expr, &pt, rho_pt.entries());
            spec.minimize(Objective::new().with_trace(omega, side, 1.0));
        }
        QuantifierKind::BestSeparableApproximation => {
            let omega = spec.psd_variable(side, "omega");
            spec.add_psd("omega_pt", AffineExpr::zero(side).with_term(omega, pt.clone()));
            spec.add_psd(
                "below_rho",
                AffineExpr::constant(rho.op()).with_term(omega, LinearMap::identity(side).scaled(-1.0)),
            );
            spec.maximize(Objective::new().with_trace(omega, side, 1.0));
            omega_var = Some(omega);
        }
        QuantifierKind::Negativity => {
            let omega = spec.psd_variable(side, "omega");
            spec.add_psd("pt_plus_omega", AffineExpr::constant(&rho_pt).with_term(omega, LinearMap::identity(side)));
            spec.minimize(Objective::new().with_trace(omega, side, 1.0));
        }
    }
    Ok((spec.assemble()?, omega_var))
}

/// Mixing weights beyond this count as unbounded robustness.
pub const MU_CAP: f64 = 1e6;

/// Whether `ρ + μσ` is PPT for some `μ ≤ MU_CAP`. The smallest eigenvalue
/// of `ρ + μσ` and of its partial transpose is concave in `μ`, so a scan
/// over a geometric grid locates the feasible interval if there is one.
fn noise_feasible_below_cap(rho: &DensityMatrix, sigma: &HermitianOperator) -> Result<bool> {
    let rho_pt = partial_transpose(rho.op(), &alice_cut())?;
    let sigma_pt = partial_transpose(sigma, &alice_cut())?;
    let worst =
        |mu: f64| (rho.op() + &sigma.scale(mu)).min_eigenvalue().min((&rho_pt + &sigma_pt.scale(mu)).min_eigenvalue());
    let mut mu = 1e-3;
    while mu <= MU_CAP {
        if worst(mu) >= 0.0 {
            return Ok(true);
        }
        mu *= 1.5;
    }
    Ok(worst(MU_CAP) >= 0.0)
}

/// Solver trouble on the mixing kinds is usually weak infeasibility (no
/// finite `μ`, no certificate either); decides it directly.
fn unbounded_mixing(rho: &DensityMatrix, kind: QuantifierKind, config: &WitnessConfig) -> Result<bool> {
    match noise_operator(rho, kind, config)? {
        Some(sigma) => Ok(!noise_feasible_below_cap(rho, &sigma)?),
        None => Ok(false),
    }
}

fn infinite(kind: QuantifierKind, status: Status) -> WitnessResult {
    WitnessResult {
        kind,
        mu: f64::INFINITY,
        e: kind.e_from_mu(f64::INFINITY),
        w: None,
        relaxation: "ppt".into(),
        dual_feasible: false,
        status,
    }
}

/// Solves the primal of `kind` for `rho`.
pub fn quantify(rho: &DensityMatrix, kind: QuantifierKind, config: &WitnessConfig) -> Result<WitnessResult> {
    let (program, _) = primal_program(rho, kind, config)?;
    let sol = solve(&program, &config.solver)?;
    let mu = match sol.status {
        Status::Optimal | Status::Inaccurate => {
            let v = sol.objective;
            if kind == QuantifierKind::BestSeparableApproximation {
                (1.0 - v).max(0.0)
            } else {
                v.max(0.0)
            }
        }
        Status::Infeasible => return Ok(infinite(kind, sol.status)),
        other if unbounded_mixing(rho, kind, config)? => return Ok(infinite(kind, other)),
        other => return Err(WitnessError::Solver(other)),
    };
    Ok(WitnessResult {
        kind,
        mu,
        e: kind.e_from_mu(mu),
        w: None,
        relaxation: "ppt".into(),
        dual_feasible: true,
        status: sol.status,
    })
}

/// The factor `t ≥ 1` by which `W` (and `Y` for negativity) overshoots the
/// normalization of `kind`; `W/t` is then dual feasible since `K*` is a cone.
fn normalization_excess(
    rho: &DensityMatrix,
    kind: QuantifierKind,
    config: &WitnessConfig,
    y: &HermitianOperator,
    w: &HermitianOperator,
) -> Result<f64> {
    let dims = rho.dims();
    let level = match kind {
        QuantifierKind::OneSidedRandomRobustness
        | QuantifierKind::OneSidedFixedRobustness
        | QuantifierKind::RandomRobustness => {
            let sigma = noise_operator(rho, kind, config)?.expect("noise kinds");
            w.inner(&sigma)
        }
        QuantifierKind::OneSidedGeneralizedRobustness => {
            let rho_b = partial_trace(rho.op(), &BipartiteCut::single(1))?;
            let m = weighted_alice_marginal(w.entries(), rho_b.entries(), dims[0]);
            HermitianOperator::new(dims[..1].to_vec(), m)?.eigenvalues().last().copied().unwrap_or(0.0)
        }
        QuantifierKind::GeneralizedRobustness => w.eigenvalues().last().copied().unwrap_or(0.0),
        QuantifierKind::BestSeparableApproximation => -w.min_eigenvalue(),
        QuantifierKind::Negativity => y.eigenvalues().last().copied().unwrap_or(0.0),
    };
    Ok(level.max(1.0))
}

/// The optimal witness of `kind` for `rho`: `W ∈ K*` minimizing `tr[Wρ]`
/// under the kind's normalization, read from the multipliers of the primal
/// PSD constraints. `mu` is `−tr[Wρ]`, computed from `W` alone.
pub fn optimal_witness(rho: &DensityMatrix, kind: QuantifierKind, config: &WitnessConfig) -> Result<WitnessResult> {
    let (program, omega) = primal_program(rho, kind, config)?;
    let sol = solve(&program, &config.solver)?;
    match sol.status {
        Status::Optimal | Status::Inaccurate => {}
        Status::Infeasible => return Ok(infinite(kind, sol.status)),
        other if unbounded_mixing(rho, kind, config)? => return Ok(infinite(kind, other)),
        other => return Err(WitnessError::Solver(other)),
    }
    let dims = rho.dims().to_vec();
    let dual = |name: &str| -> Result<HermitianOperator> {
        let z = sol.constraint_dual(name).ok_or(WitnessError::Solver(Status::NumericalFailure))?;
        Ok(z.with_dims(dims.clone())?.psd_part())
    };
    let (p, q) = match kind {
        QuantifierKind::BestSeparableApproximation => {
            let omega = omega.expect("bsa records omega");
            let p = sol.variable_dual(omega).ok_or(WitnessError::Solver(Status::NumericalFailure))?;
            (Some(p.with_dims(dims.clone())?.psd_part()), dual("omega_pt")?)
        }
        QuantifierKind::Negativity => (None, dual("pt_plus_omega")?),
        _ => (Some(dual("mix_psd")?), dual("mix_pt")?),
    };
    let q_pt = partial_transpose(&q, &alice_cut())?;
    let w = match &p {
        Some(p) => p + &q_pt,
        None => q_pt,
    };
    let excess = normalization_excess(rho, kind, config, &q, &w)?;
    let (w, q) = (w.scale(1.0 / excess), q.scale(1.0 / excess));
    // re-check the returned witness; P and Q are PSD by construction
    let dual_feasible = normalization_excess(rho, kind, config, &q, &w)? - 1.0 <= DUAL_TOL;
    let mu = (-witness_value(&w, rho)?).max(0.0);
    Ok(WitnessResult {
        kind,
        mu,
        e: kind.e_from_mu(mu),
        w: Some(w),
        relaxation: "ppt".into(),
        dual_feasible,
        status: sol.status,
    })
}

/// Allowed violation of a witness's dual constraints.
pub const DUAL_TOL: f64 = 1e-7;

/// `tr[Wρ]`.
pub fn witness_value(w: &HermitianOperator, rho: &DensityMatrix) -> Result<f64> {
    if w.dims() != rho.dims() {
        return Err(WitnessError::BadDims(format!("witness dims {:?} vs state dims {:?}", w.dims(), rho.dims())));
    }
    Ok(w.inner(rho.op()))
}

/// Fully decomposable witness `W = P_M + Q_M^{T_M}` for every single-party
/// cut `M`, normalized by `tr W = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmeWitness {
    #[serde(rename = "W")]
    pub w: HermitianOperator,
    pub decompositions: Vec<GmeDecomposition>,
    pub value: f64,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmeDecomposition {
    pub partition: String,
    #[serde(rename = "P")]
    pub p: HermitianOperator,
    #[serde(rename = "Q")]
    pub q: HermitianOperator,
}

impl GmeWitness {
    /// A negative value certifies genuine tripartite entanglement.
    pub fn detects(&self) -> bool {
        self.value < 0.0
    }

    /// Largest `|W − P_M − Q_M^{T_M}|` over partitions.
    pub fn reconstruction_residual(&self) -> f64 {
        self.decompositions
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let qt = partial_transpose(&d.q, &BipartiteCut::single(k)).expect("three parties");
                self.w.max_abs_diff(&(&d.p + &qt))
            })
            .fold(0.0, f64::max)
    }
}

pub const GME_PARTITIONS: [&str; 3] = ["A|BC", "B|AC", "C|AB"];

pub fn gme_witness(rho: &DensityMatrix, config: &SolverConfig) -> Result<GmeWitness> {
    let dims = rho.dims().to_vec();
    if dims != [2, 2, 2] {
        return Err(WitnessError::BadDims(format!("three qubits expected, got {dims:?}")));
    }
    let side = 8;
    let mut spec = ProgramSpec::new();
    let w = spec.free_variable(side, "W");
    spec.add_equality("trace_W", AffineExpr::constant(&one().scale(-1.0)).with_term(w, LinearMap::trace(side)));
    let mut pairs = Vec::new();
    for (k, name) in GME_PARTITIONS.iter().enumerate() {
        let p = spec.psd_variable(side, format!("P_{name}"));
        let q = spec.psd_variable(side, format!("Q_{name}"));
        let d = dims.clone();
        let tm = LinearMap::from_fn(side, side, move |x| {
            partial_transpose(&op_on(&d, x), &BipartiteCut::single(k)).expect("valid cut").into_entries()
        })?;
        spec.add_equality(
            format!("decompose_{name}"),
            AffineExpr::zero(side)
                .with_term(w, LinearMap::identity(side))
                .with_term(p, LinearMap::identity(side).scaled(-1.0))
                .with_term(q, tm.scaled(-1.0)),
        );
        pairs.push((name.to_string(), p, q));
    }
    spec.minimize(Objective::new().with(w, rho.op()));
    let program = spec.assemble()?;
    let sol = solve(&program, config)?;
    match sol.status {
        Status::Optimal | Status::Inaccurate => {}
        other => return Err(WitnessError::Solver(other)),
    }
    let get = |v: VarId| sol.values[&v].with_dims(dims.clone());
    let w_op = get(w)?;
    let decompositions = pairs
        .into_iter()
        .map(|(partition, p, q)| Ok(GmeDecomposition { partition, p: get(p)?, q: get(q)? }))
        .collect::<Result<Vec<_>>>()?;
    let value = witness_value(&w_op, rho)?;
    Ok(GmeWitness { w: w_op, decompositions, value, status: sol.status })
}

#[cfg(test)]
mod tests;
