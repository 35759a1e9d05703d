//! Named state families and random two-qubit states.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::{c, CMatrix, DensityMatrix, HermitianOperator, OperatorError, C64};
use crate::rng::RngStream;

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("bad-probabilities: {0}")]
    BadProbabilities(String),
    #[error("bad-parameter: {0}")]
    BadParameter(String),
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

pub type Result<T> = std::result::Result<T, StateError>;

/// Bell basis in the order (Φ⁺, Φ⁻, Ψ⁺, Ψ⁻).
pub fn bell_basis() -> [[C64; 4]; 4] {
    let h = c(FRAC_1_SQRT_2, 0.0);
    let z = c(0.0, 0.0);
    [[h, z, z, h], [h, z, z, -h], [z, h, h, z], [z, h, -h, z]]
}

pub fn bell_diagonal(p: [f64; 4]) -> Result<DensityMatrix> {
    if p.iter().any(|x| !x.is_finite() || *x < -SIMPLEX_TOL) {
        return Err(StateError::BadProbabilities(format!("negative weight in {p:?}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(StateError::BadProbabilities(format!("weights sum to {sum}")));
    }
    let mut m = CMatrix::zeros(4, 4);
    for (pi, ket) in p.iter().zip(bell_basis()) {
        let v = DVector::from_column_slice(&ket);
        m += (&v * v.adjoint()).map(|z| z * pi.max(0.0));
    }
    let op = HermitianOperator::new(vec![2, 2], m)?;
    Ok(DensityMatrix::new(op)?)
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(StateError::BadParameter(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// `w|Φ⁺⟩⟨Φ⁺| + (1−w) I/4`, i.e. Bell-diagonal with `p1 = (1+3w)/4` and the
/// other three weights equal. Entangled exactly for `w > 1/3`.
pub fn werner(w: f64) -> Result<DensityMatrix> {
    check_unit("w", w)?;
    let q = (1.0 - w) / 4.0;
    bell_diagonal([w + q, q, q, q])
}

/// Visibility `w` of the Werner state with Bell weight `p1`.
pub fn werner_visibility(p1: f64) -> f64 {
    (4.0 * p1 - 1.0) / 3.0
}

/// `|Φ⁺⟩` sent through independent amplitude damping with survival `eta`:
/// `E0 = |0⟩⟨0| + √η|1⟩⟨1|`, `E1 = √(1−η)|0⟩⟨1|` on each qubit.
pub fn amplitude_damped(eta: f64) -> Result<DensityMatrix> {
    check_unit("eta", eta)?;
    let e0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(eta.sqrt(), 0.0)]);
    let e1 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c((1.0 - eta).sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let kraus = [e0, e1];
    let phi = DVector::from_column_slice(&bell_basis()[0]);
    let rho0 = &phi * phi.adjoint();
    let mut m = CMatrix::zeros(4, 4);
    for a in &kraus {
        for b in &kraus {
            let k = a.kronecker(b);
            m += &k * &rho0 * k.adjoint();
        }
    }
    Ok(DensityMatrix::new(HermitianOperator::new(vec![2, 2], m)?)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripartiteKind {
    Ghz,
    W,
}

impl TripartiteKind {
    pub fn ket(self) -> [C64; 8] {
        let mut v = [c(0.0, 0.0); 8];
        match self {
            TripartiteKind::Ghz => {
                v[0] = c(FRAC_1_SQRT_2, 0.0);
                v[7] = c(FRAC_1_SQRT_2, 0.0);
            }
            TripartiteKind::W => {
                let a = c(1.0 / 3f64.sqrt(), 0.0);
                v[1] = a;
                v[2] = a;
                v[4] = a;
            }
        }
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            TripartiteKind::Ghz => "ghz",
            TripartiteKind::W => "w",
        }
    }
}

impl std::str::FromStr for TripartiteKind {
    type Err = StateError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ghz" => Ok(TripartiteKind::Ghz),
            "w" => Ok(TripartiteKind::W),
            _ => Err(StateError::UnknownFamily(s.to_string())),
        }
    }
}

/// `p|ψ⟩⟨ψ| + (1−p) I/8` for the GHZ or W state.
pub fn noisy_tripartite(kind: TripartiteKind, p: f64) -> Result<DensityMatrix> {
    check_unit("p", p)?;
    let dims = [2, 2, 2];
    let pure = HermitianOperator::ket_projector(&dims, &kind.ket())?;
    let mixed = HermitianOperator::maximally_mixed(&dims);
    Ok(DensityMatrix::new(&pure.scale(p) + &mixed.scale(1.0 - p))?)
}

fn ginibre(d: usize, rng: &mut RngStream) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| rng.complex_normal())
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix with
/// the phases of `diag(R)` absorbed into `Q`.
pub fn haar_unitary(d: usize, rng: &mut RngStream) -> CMatrix {
    assert!(d >= 1, "haar_unitary needs d >= 1");
    let qr = ginibre(d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Hilbert–Schmidt random state on `dims`: `GG†/tr(GG†)`.
pub fn sample_hs_dims(dims: &[usize], rng: &mut RngStream) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let g = ginibre(d, rng);
    normalize(dims, &g * g.adjoint())
}

/// Bures random state on `dims`: `(I+U)GG†(I+U)†` normalized.
pub fn sample_bures_dims(dims: &[usize], rng: &mut RngStream) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let u = haar_unitary(d, rng);
    let g = ginibre(d, rng);
    let a = (CMatrix::identity(d, d) + u) * g;
    normalize(dims, &a * a.adjoint())
}

/// Haar-random pure state on `dims`: a normalized complex Gaussian vector.
pub fn sample_pure_dims(dims: &[usize], rng: &mut RngStream) -> DensityMatrix {
    let d: usize = dims.iter().product();
    let v: Vec<C64> = (0..d).map(|_| rng.complex_normal()).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let ket: Vec<C64> = v.iter().map(|z| z / norm).collect();
    DensityMatrix::pure(dims, &ket).expect("unit vector")
}

pub fn sample_hs(rng: &mut RngStream) -> DensityMatrix {
    sample_hs_dims(&[2, 2], rng)
}

pub fn sample_bures(rng: &mut RngStream) -> DensityMatrix {
    sample_bures_dims(&[2, 2], rng)
}

fn normalize(dims: &[usize], m: CMatrix) -> DensityMatrix {
    let op = HermitianOperator::new(dims.to_vec(), m).expect("product A A† is Hermitian");
    DensityMatrix::from_unnormalized(op).expect("Gram matrix of a Ginibre draw is a state")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMeasure {
    Hs,
    Bures,
}

impl SamplingMeasure {
    pub fn sample(self, rng: &mut RngStream) -> DensityMatrix {
        match self {
            SamplingMeasure::Hs => sample_hs(rng),
            SamplingMeasure::Bures => sample_bures(rng),
        }
    }
}

impl std::str::FromStr for SamplingMeasure {
    type Err = StateError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" | "hilbert-schmidt" => Ok(SamplingMeasure::Hs),
            "bures" => Ok(SamplingMeasure::Bures),
            _ => Err(StateError::UnknownFamily(s.to_string())),
        }
    }
}

/// A member of a named family together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub family: String,
    pub parameters: BTreeMap<String, f64>,
    pub state: DensityMatrix,
}

pub const FAMILIES: [&str; 5] = ["bell-diagonal", "werner", "amplitude-damped", "ghz", "w"];

/// Builds a family member from named parameters; missing parameters are errors.
pub fn make_state(family: &str, parameters: &BTreeMap<String, f64>) -> Result<FamilyPoint> {
    let get = |k: &str| {
        parameters
            .get(k)
            .copied()
            .ok_or_else(|| StateError::BadParameter(format!("family {family} needs parameter {k}")))
    };
    let state = match family {
        "bell-diagonal" => bell_diagonal([get("p1")?, get("p2")?, get("p3")?, get("p4")?])?,
        "werner" => werner(get("w")?)?,
        "amplitude-damped" => amplitude_damped(get("eta")?)?,
        "ghz" => noisy_tripartite(TripartiteKind::Ghz, get("p")?)?,
        "w" => noisy_tripartite(TripartiteKind::W, get("p")?)?,
        other => return Err(StateError::UnknownFamily(other.to_string())),
    };
    let label = parameters.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",");
    Ok(FamilyPoint {
        family: family.to_string(),
        parameters: parameters.clone(),
        state: state.with_label(format!("{family}({label})")),
    })
}
