//! Finite-dimensional Hermitian operators with a tensor-factor structure.
//!
//! Every operator carries the ordered list of its subsystem dimensions, so
//! partial traces and partial transposes can be taken with respect to any
//! subset of parties. States are the [`DensityMatrix`] refinement.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Largest elementwise deviation from Hermiticity that is silently symmetrized.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance on the trace and the spectrum of a density matrix.
pub const STATE_TOL: f64 = 1e-9;
/// Default threshold on the minimum partially transposed eigenvalue.
pub const DEFAULT_PPT_TOL: f64 = 1e-9;
/// Largest local dimension accepted on any party.
pub const MAX_LOCAL_DIM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("bad-cut: {0}")]
    BadCut(String),
    #[error("bad-dims: {0}")]
    BadDims(String),
    #[error("bad-dim: generalized Gell-Mann basis needs d >= 2, got {0}")]
    BadDim(usize),
    #[error("not-hermitian: asymmetry {0:.3e} exceeds tolerance")]
    NotHermitian(f64),
    #[error("not-a-state: {0}")]
    NotState(String),
}

pub type Result<T> = std::result::Result<T, OperatorError>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Hermitian matrix acting on `⊗_k C^{dims[k]}`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorJson", into = "OperatorJson")]
pub struct HermitianOperator {
    dims: Vec<usize>,
    entries: CMatrix,
    label: Option<String>,
}

impl HermitianOperator {
    /// Validates the dimension structure and Hermiticity; small asymmetries
    /// are removed by replacing `M` with `(M + M†)/2`.
    pub fn new(dims: Vec<usize>, entries: CMatrix) -> Result<Self> {
        check_dims(&dims)?;
        let side: usize = dims.iter().product();
        if entries.nrows() != side || entries.ncols() != side {
            return Err(OperatorError::BadDims(format!(
                "matrix is {}x{} but dims {:?} require side {}",
                entries.nrows(),
                entries.ncols(),
                dims,
                side
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OperatorError::BadDims("non-finite entry".into()));
        }
        let asym = max_asymmetry(&entries);
        if asym > HERMITICITY_TOL {
            return Err(OperatorError::NotHermitian(asym));
        }
        Ok(Self { dims, entries: symmetrize(&entries), label: None })
    }

    /// Internal constructor for results that are Hermitian by construction.
    pub(crate) fn from_parts(dims: Vec<usize>, entries: CMatrix) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), entries.nrows());
        Self { dims, entries: symmetrize(&entries), label: None }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let side = dims.iter().product();
        Self::from_parts(dims.to_vec(), CMatrix::zeros(side, side))
    }

    pub fn identity(dims: &[usize]) -> Self {
        let side = dims.iter().product();
        Self::from_parts(dims.to_vec(), CMatrix::identity(side, side))
    }

    /// Maximally mixed operator `I/D`.
    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let side: usize = dims.iter().product();
        Self::identity(dims).scale(1.0 / side as f64)
    }

    /// Rank-one operator `|ψ⟩⟨ψ|` (the ket is used as given, not normalized).
    pub fn ket_projector(dims: &[usize], ket: &[C64]) -> Result<Self> {
        let side: usize = dims.iter().product();
        if ket.len() != side {
            return Err(OperatorError::BadDims(format!("ket of length {} for dims {:?}", ket.len(), dims)));
        }
        let v = nalgebra::DVector::from_column_slice(ket);
        Self::new(dims.to_vec(), &v * v.adjoint())
    }

    pub fn from_real_diagonal(dims: &[usize], diag: &[f64]) -> Result<Self> {
        let side: usize = dims.iter().product();
        if diag.len() != side {
            return Err(OperatorError::BadDims(format!("diagonal of length {} for dims {:?}", diag.len(), dims)));
        }
        let m = CMatrix::from_fn(side, side, |i, j| if i == j { c(diag[i], 0.0) } else { c(0.0, 0.0) });
        Self::new(dims.to_vec(), m)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Same entries viewed with a different factorization of the same side.
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        if dims.iter().product::<usize>() != self.side() {
            return Err(OperatorError::BadDims(format!("dims {:?} incompatible with side {}", dims, self.side())));
        }
        Ok(Self { dims, entries: self.entries.clone(), label: self.label.clone() })
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { dims: self.dims.clone(), entries: self.entries.map(|z| z * factor), label: None }
    }

    /// Real part of `tr(self · other)`; exact for Hermitian pairs.
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        assert_eq!(self.side(), other.side(), "inner product of mismatched operators");
        let n = self.side();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.entries[(i, j)] * other.entries[(j, i)]).re;
            }
        }
        acc
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalue"));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise distance to `other`.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        assert_eq!(self.side(), other.side(), "comparison of mismatched operators");
        self.entries.iter().zip(other.entries.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Trace norm `‖M‖₁`.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.abs()).sum()
    }

    /// Operator projected onto the PSD cone by clipping negative eigenvalues.
    pub fn psd_part(&self) -> Self {
        let eig = SymmetricEigen::new(self.entries.clone());
        let clipped = eig.eigenvalues.map(|l| c(l.max(0.0), 0.0));
        let v = &eig.eigenvectors;
        let m = v * CMatrix::from_diagonal(&clipped) * v.adjoint();
        Self::from_parts(self.dims.clone(), m)
    }
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianOperator")
            .field("dims", &self.dims)
            .field("label", &self.label)
            .field("entries", &format_args!("{}", self.entries))
            .finish()
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(OperatorError::BadDims("empty dims".into()));
    }
    if let Some(d) = dims.iter().find(|&&d| d == 0 || d > MAX_LOCAL_DIM) {
        return Err(OperatorError::BadDims(format!("local dimension {d} outside 1..={MAX_LOCAL_DIM}")));
    }
    Ok(())
}

fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        assert_eq!(self.dims, rhs.dims, "adding operators with different dims");
        HermitianOperator::from_parts(self.dims.clone(), &self.entries + &rhs.entries)
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        assert_eq!(self.dims, rhs.dims, "subtracting operators with different dims");
        HermitianOperator::from_parts(self.dims.clone(), &self.entries - &rhs.entries)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scale(-1.0)
    }
}

impl Mul<&HermitianOperator> for f64 {
    type Output = HermitianOperator;
    fn mul(self, rhs: &HermitianOperator) -> HermitianOperator {
        rhs.scale(self)
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    dims: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl TryFrom<OperatorJson> for HermitianOperator {
    type Error = OperatorError;

    fn try_from(j: OperatorJson) -> Result<Self> {
        let n = j.re.len();
        if j.im.len() != n || j.re.iter().chain(j.im.iter()).any(|row| row.len() != n) {
            return Err(OperatorError::BadDims("re/im must be square and equal-sized".into()));
        }
        let m = CMatrix::from_fn(n, n, |r, col| c(j.re[r][col], j.im[r][col]));
        let mut op = HermitianOperator::new(j.dims, m)?;
        op.label = j.label;
        Ok(op)
    }
}

impl From<HermitianOperator> for OperatorJson {
    fn from(op: HermitianOperator) -> Self {
        let n = op.side();
        let row = |f: fn(&C64) -> f64, r: usize| (0..n).map(|col| f(&op.entries[(r, col)])).collect();
        OperatorJson {
            re: (0..n).map(|r| row(|z| z.re, r)).collect(),
            im: (0..n).map(|r| row(|z| z.im, r)).collect(),
            dims: op.dims,
            label: op.label,
        }
    }
}

/// Positive semidefinite, unit-trace Hermitian operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HermitianOperator", into = "HermitianOperator")]
pub struct DensityMatrix(HermitianOperator);

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(OperatorError::NotState(format!("trace {tr} != 1")));
        }
        let min = op.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(OperatorError::NotState(format!("minimum eigenvalue {min:.3e}")));
        }
        Ok(Self(op))
    }

    /// Normalizes a PSD operator by its trace.
    pub fn from_unnormalized(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if tr <= 0.0 {
            return Err(OperatorError::NotState(format!("trace {tr} is not positive")));
        }
        Self::new(op.scale(1.0 / tr))
    }

    /// Nearest state obtained by clipping eigenvalues below zero and
    /// renormalizing; for solver output that sits on the PSD boundary.
    pub fn from_nearly_psd(op: &HermitianOperator) -> Result<Self> {
        Self::from_unnormalized(op.psd_part())
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        Self(HermitianOperator::maximally_mixed(dims))
    }

    pub fn pure(dims: &[usize], ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(OperatorError::NotState("zero ket".into()));
        }
        let normalized: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Self::new(HermitianOperator::ket_projector(dims, &normalized)?)
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn into_op(self) -> HermitianOperator {
        self.0
    }

    pub fn dims(&self) -> &[usize] {
        self.0.dims()
    }

    pub fn with_label(self, label: impl Into<String>) -> Self {
        Self(self.0.with_label(label))
    }
}

impl TryFrom<HermitianOperator> for DensityMatrix {
    type Error = OperatorError;
    fn try_from(op: HermitianOperator) -> Result<Self> {
        Self::new(op)
    }
}

impl From<DensityMatrix> for HermitianOperator {
    fn from(rho: DensityMatrix) -> Self {
        rho.0
    }
}

impl AsRef<HermitianOperator> for DensityMatrix {
    fn as_ref(&self) -> &HermitianOperator {
        &self.0
    }
}

/// Subset of subsystem positions forming one side of a bipartition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteCut {
    parties: Vec<usize>,
}

impl BipartiteCut {
    pub fn new(parties: impl IntoIterator<Item = usize>) -> Self {
        let mut parties: Vec<usize> = parties.into_iter().collect();
        parties.sort_unstable();
        parties.dedup();
        Self { parties }
    }

    pub fn single(party: usize) -> Self {
        Self { parties: vec![party] }
    }

    pub fn parties(&self) -> &[usize] {
        &self.parties
    }

    pub fn contains(&self, party: usize) -> bool {
        self.parties.binary_search(&party).is_ok()
    }

    /// Checks that the cut is a non-empty proper subset of `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.parties.is_empty() {
            return Err(OperatorError::BadCut("empty cut".into()));
        }
        if self.parties.len() >= n {
            return Err(OperatorError::BadCut(format!(
                "cut {:?} is not a proper subset of {n} subsystems",
                self.parties
            )));
        }
        if let Some(&p) = self.parties.iter().find(|&&p| p >= n) {
            return Err(OperatorError::BadCut(format!("party {p} out of range for {n} subsystems")));
        }
        Ok(())
    }

    pub fn complement(&self, n: usize) -> Self {
        Self::new((0..n).filter(|p| !self.contains(*p)))
    }
}

fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
}

/// Kronecker product with concatenated dims.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    HermitianOperator::from_parts(dims, a.entries.kronecker(&b.entries))
}

/// Tensor product of several operators, left to right.
pub fn tensor_all<'a>(ops: impl IntoIterator<Item = &'a HermitianOperator>) -> HermitianOperator {
    let mut it = ops.into_iter();
    let first = it.next().expect("tensor_all of an empty list").clone();
    it.fold(first, |acc, op| tensor(&acc, op))
}

/// Traces out every subsystem not listed in `keep`.
pub fn partial_trace(op: &HermitianOperator, keep: &BipartiteCut) -> Result<HermitianOperator> {
    let n = op.dims.len();
    keep.validate(n)?;
    let kept_dims: Vec<usize> = keep.parties.iter().map(|&p| op.dims[p]).collect();
    let kept_side: usize = kept_dims.iter().product();
    let side = op.side();
    let mut out = CMatrix::zeros(kept_side, kept_side);
    let mut row_d = vec![0; n];
    let mut col_d = vec![0; n];
    let mut kept_row = vec![0; keep.parties.len()];
    let mut kept_col = vec![0; keep.parties.len()];
    for r in 0..side {
        digits(r, &op.dims, &mut row_d);
        for col in 0..side {
            digits(col, &op.dims, &mut col_d);
            let traced_match = (0..n).all(|k| keep.contains(k) || row_d[k] == col_d[k]);
            if !traced_match {
                continue;
            }
            for (slot, &p) in keep.parties.iter().enumerate() {
                kept_row[slot] = row_d[p];
                kept_col[slot] = col_d[p];
            }
            let (i, j) = (compose(&kept_row, &kept_dims), compose(&kept_col, &kept_dims));
            out[(i, j)] += op.entries[(r, col)];
        }
    }
    Ok(HermitianOperator::from_parts(kept_dims, out))
}

/// Transposes the subsystems in `cut`, leaving the others untouched.
pub fn partial_transpose(op: &HermitianOperator, cut: &BipartiteCut) -> Result<HermitianOperator> {
    let n = op.dims.len();
    cut.validate(n)?;
    let side = op.side();
    let mut out = CMatrix::zeros(side, side);
    let mut row_d = vec![0; n];
    let mut col_d = vec![0; n];
    for r in 0..side {
        digits(r, &op.dims, &mut row_d);
        for col in 0..side {
            digits(col, &op.dims, &mut col_d);
            for &p in &cut.parties {
                std::mem::swap(&mut row_d[p], &mut col_d[p]);
            }
            out[(compose(&row_d, &op.dims), compose(&col_d, &op.dims))] = op.entries[(r, col)];
            for &p in &cut.parties {
                std::mem::swap(&mut row_d[p], &mut col_d[p]);
            }
        }
    }
    // Plain copy: the result is Hermitian whenever the input is.
    Ok(HermitianOperator { dims: op.dims.clone(), entries: out, label: None })
}

/// Absolute sum of the negative eigenvalues of `ρ^Γ`.
pub fn negativity(rho: &DensityMatrix, cut: &BipartiteCut) -> Result<f64> {
    let pt = partial_transpose(rho.op(), cut)?;
    Ok(pt.eigenvalues().iter().filter(|&&l| l < 0.0).map(|l| -l).sum())
}

/// `½‖a − b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(OperatorError::BadDims(format!("trace distance between dims {:?} and {:?}", a.dims(), b.dims())));
    }
    Ok(0.5 * (a.op() - b.op()).trace_norm())
}

/// Peres–Horodecki test: minimum eigenvalue of `ρ^Γ` is at least `-tol`.
pub fn is_ppt(rho: &DensityMatrix, cut: &BipartiteCut, tol: f64) -> Result<bool> {
    Ok(partial_transpose(rho.op(), cut)?.min_eigenvalue() >= -tol)
}

pub fn pauli_x() -> HermitianOperator {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    HermitianOperator::from_parts(vec![2], CMatrix::from_row_slice(2, 2, &[o, l, l, o]))
}

pub fn pauli_y() -> HermitianOperator {
    let o = c(0.0, 0.0);
    HermitianOperator::from_parts(vec![2], CMatrix::from_row_slice(2, 2, &[o, c(0.0, -1.0), c(0.0, 1.0), o]))
}

pub fn pauli_z() -> HermitianOperator {
    HermitianOperator::from_parts(vec![2], CMatrix::from_diagonal(&nalgebra::dvector![c(1.0, 0.0), c(-1.0, 0.0)]))
}

/// Generalized Gell-Mann matrices: symmetric, antisymmetric, then diagonal
/// families, normalized to `tr(λᵢλⱼ) = 2δᵢⱼ`.
pub fn gell_mann_basis(d: usize) -> Result<Vec<HermitianOperator>> {
    if d < 2 {
        return Err(OperatorError::BadDim(d));
    }
    let mut basis = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = c(1.0, 0.0);
            m[(k, j)] = c(1.0, 0.0);
            basis.push(HermitianOperator::from_parts(vec![d], m));
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = c(0.0, -1.0);
            m[(k, j)] = c(0.0, 1.0);
            basis.push(HermitianOperator::from_parts(vec![d], m));
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = c(norm, 0.0);
        }
        m[(l, l)] = c(-(l as f64) * norm, 0.0);
        basis.push(HermitianOperator::from_parts(vec![d], m));
    }
    Ok(basis)
}

/// A measurement as its list of effects (POVM elements).
#[derive(Clone, Debug)]
pub struct Measurement {
    pub effects: Vec<HermitianOperator>,
}

impl Measurement {
    pub fn new(effects: Vec<HermitianOperator>) -> Self {
        Self { effects }
    }
}

/// Table of `P(a,b|x,y)`.
#[derive(Clone, Debug)]
pub struct Behavior {
    // [x][y] -> matrix indexed (a, b)
    table: Vec<Vec<DMatrix<f64>>>,
}

impl Behavior {
    pub fn prob(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.table[x][y][(a, b)]
    }

    pub fn settings(&self) -> (usize, usize) {
        (self.table.len(), self.table.first().map_or(0, Vec::len))
    }

    pub fn table(&self, x: usize, y: usize) -> &DMatrix<f64> {
        &self.table[x][y]
    }

    /// Alice's marginal `Σ_b P(a,b|x,y)`.
    pub fn alice_marginal(&self, a: usize, x: usize, y: usize) -> f64 {
        self.table[x][y].row(a).sum()
    }
}

/// `P(a,b|x,y) = tr[(M_{a|x} ⊗ M_{b|y}) ρ]`, with Alice on the first subsystem
/// and Bob on all remaining ones.
pub fn joint_probabilities(rho: &DensityMatrix, alice: &[Measurement], bob: &[Measurement]) -> Result<Behavior> {
    let dims = rho.dims();
    if dims.len() < 2 {
        return Err(OperatorError::BadDims("joint probabilities need at least two parties".into()));
    }
    let d_a = dims[0];
    let d_b: usize = dims[1..].iter().product();
    let check = |m: &Measurement, d: usize, who: &str| -> Result<()> {
        match m.effects.iter().find(|e| e.side() != d) {
            Some(e) => Err(OperatorError::BadDims(format!(
                "{who} effect of side {} on a subsystem of dimension {d}",
                e.side()
            ))),
            None => Ok(()),
        }
    };
    for m in alice {
        check(m, d_a, "Alice")?;
    }
    for m in bob {
        check(m, d_b, "Bob")?;
    }
    let table = alice
        .iter()
        .map(|ma| {
            bob.iter()
                .map(|mb| {
                    DMatrix::from_fn(ma.effects.len(), mb.effects.len(), |a, b| {
                        let joint = ma.effects[a].entries().kronecker(mb.effects[b].entries());
                        (joint * rho.op().entries()).trace().re
                    })
                })
                .collect()
        })
        .collect();
    Ok(Behavior { table })
}
