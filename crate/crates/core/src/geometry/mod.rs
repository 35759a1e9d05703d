//! Qubit projective measurements as Bloch directions.
//!
//! A [`MeasurementSet`] stores one direction per two-outcome measurement
//! (outcomes `a = 0, 1` correspond to `±û`) and caches the radius of the
//! largest origin-centred sphere inside the convex hull of `{±û_x}`.

mod hull;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::{c, pauli_x, pauli_y, pauli_z, CMatrix, HermitianOperator};
use crate::rng::RngStream;

pub use hull::{ConvexHull, Facet};

/// Hull merge tolerance.
pub const HULL_TOL: f64 = 1e-10;
/// Largest supported number of measurements (2^14 deterministic strategies).
pub const MAX_MEASUREMENTS: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unknown-solid: {0:?} (expected one of {known})", known = Solid::NAMES.join(", "))]
    UnknownSolid(String),
    #[error("too-few: {0} random directions cannot span the sphere (need at least 3)")]
    TooFew(usize),
    #[error("degenerate-polytope: directions do not span three dimensions")]
    DegeneratePolytope,
    #[error("bad-noise: visibility {0} outside [0, 1]")]
    BadNoise(f64),
    #[error("too-many-strategies: {0} measurements exceed the limit of {MAX_MEASUREMENTS}; choose a solid with fewer vertices")]
    TooManyStrategies(usize),
    #[error("zero-vector: a Bloch direction needs a non-zero vector")]
    ZeroVector,
    #[error("inconsistent-insphere: stored {stored} but directions give {computed}")]
    InconsistentInsphere { stored: f64, computed: f64 },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Unit vector in R³.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochDirection([f64; 3]);

impl BlochDirection {
    /// Normalizes `v`.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = hull::norm(&v);
        if !(n > 1e-300) || !n.is_finite() {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Self([v[0] / n, v[1] / n, v[2] / n]))
    }

    pub fn x() -> Self {
        Self([1.0, 0.0, 0.0])
    }

    pub fn y() -> Self {
        Self([0.0, 1.0, 0.0])
    }

    pub fn z() -> Self {
        Self([0.0, 0.0, 1.0])
    }

    pub fn vector(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &BlochDirection) -> f64 {
        hull::dot(&self.0, &other.0)
    }

    pub fn flipped(&self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2]])
    }

    /// Uniform draw on the sphere from normalized standard normals.
    pub fn sample(rng: &mut RngStream) -> Self {
        loop {
            let v = [rng.standard_normal(), rng.standard_normal(), rng.standard_normal()];
            if let Ok(d) = Self::new(v) {
                return d;
            }
        }
    }

    /// `û·σ⃗`.
    pub fn pauli_component(&self) -> HermitianOperator {
        let [x, y, z] = self.0;
        &(&pauli_x().scale(x) + &pauli_y().scale(y)) + &pauli_z().scale(z)
    }
}

impl TryFrom<[f64; 3]> for BlochDirection {
    type Error = GeometryError;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BlochDirection> for [f64; 3] {
    fn from(d: BlochDirection) -> Self {
        d.0
    }
}

/// Whether `u` is the canonical (lexicographically larger) member of `{u, −u}`.
fn is_canonical(u: &[f64; 3]) -> bool {
    for &x in u {
        if x.abs() > 1e-12 {
            return x > 0.0;
        }
    }
    true
}

/// Finite set of qubit projective measurements with its cached insphere radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasurementSetJson", into = "MeasurementSetJson")]
pub struct MeasurementSet {
    name: String,
    directions: Vec<BlochDirection>,
    insphere: f64,
}

impl MeasurementSet {
    /// Canonicalizes each direction to the lexicographically larger of `±û`,
    /// drops duplicate measurements and computes the insphere radius.
    pub fn new(name: impl Into<String>, directions: impl IntoIterator<Item = BlochDirection>) -> Result<Self> {
        let mut canonical: Vec<BlochDirection> = Vec::new();
        for d in directions {
            let d = if is_canonical(&d.0) { d } else { d.flipped() };
            let duplicate = canonical.iter().any(|e| {
                let diff = [e.0[0] - d.0[0], e.0[1] - d.0[1], e.0[2] - d.0[2]];
                hull::norm(&diff) < 1e-9
            });
            if !duplicate {
                canonical.push(d);
            }
        }
        let insphere = insphere_radius(&canonical)?;
        Ok(Self { name: name.into(), directions: canonical, insphere })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn directions(&self) -> &[BlochDirection] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Number of polytope vertices, `2m`.
    pub fn vertex_count(&self) -> usize {
        2 * self.directions.len()
    }

    pub fn insphere(&self) -> f64 {
        self.insphere
    }

    /// Same set with the directions in a different order.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        Self::new(self.name.clone(), order.iter().map(|&i| self.directions[i]))
    }
}

#[derive(Serialize, Deserialize)]
struct MeasurementSetJson {
    name: String,
    directions: Vec<[f64; 3]>,
    insphere: f64,
}

impl TryFrom<MeasurementSetJson> for MeasurementSet {
    type Error = GeometryError;
    fn try_from(j: MeasurementSetJson) -> Result<Self> {
        let dirs = j.directions.into_iter().map(BlochDirection::new).collect::<Result<Vec<_>>>()?;
        let set = MeasurementSet::new(j.name, dirs)?;
        if (set.insphere - j.insphere).abs() > 1e-6 {
            return Err(GeometryError::InconsistentInsphere { stored: j.insphere, computed: set.insphere });
        }
        Ok(set)
    }
}

impl From<MeasurementSet> for MeasurementSetJson {
    fn from(s: MeasurementSet) -> Self {
        MeasurementSetJson {
            name: s.name,
            directions: s.directions.into_iter().map(|d| d.0).collect(),
            insphere: s.insphere,
        }
    }
}

/// Distance from the origin to the nearest facet of `conv{±û_x}`.
pub fn insphere_radius(directions: &[BlochDirection]) -> Result<f64> {
    let points: Vec<[f64; 3]> = directions.iter().flat_map(|d| [d.0, d.flipped().0]).collect();
    let hull = ConvexHull::new(&points, HULL_TOL).map_err(|_| GeometryError::DegeneratePolytope)?;
    let r = hull.depth(&[0.0; 3]);
    if r <= HULL_TOL {
        return Err(GeometryError::DegeneratePolytope);
    }
    Ok(r.min(1.0))
}

/// Facet-plane distances of `conv{±û_x}`, one per triangular facet.
pub fn facet_distances(directions: &[BlochDirection]) -> Result<Vec<f64>> {
    let points: Vec<[f64; 3]> = directions.iter().flat_map(|d| [d.0, d.flipped().0]).collect();
    let hull = ConvexHull::new(&points, HULL_TOL).map_err(|_| GeometryError::DegeneratePolytope)?;
    Ok(hull.facets().iter().map(|f| f.offset).collect())
}

/// Polyhedra whose vertices define the built-in measurement sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Solid {
    Icosahedron,
    Dodecahedron,
    TruncatedCube,
    TruncatedOctahedron,
    TruncatedTetrahedronAntipodal,
    Rhombicuboctahedron,
    Octahedron,
    Cube,
}

impl Solid {
    pub const ALL: [Solid; 8] = [
        Solid::Icosahedron,
        Solid::Dodecahedron,
        Solid::TruncatedCube,
        Solid::TruncatedOctahedron,
        Solid::TruncatedTetrahedronAntipodal,
        Solid::Rhombicuboctahedron,
        Solid::Octahedron,
        Solid::Cube,
    ];

    /// The six solids of the reference table, in table order.
    pub const TABLE: [Solid; 6] = [
        Solid::Icosahedron,
        Solid::Dodecahedron,
        Solid::TruncatedCube,
        Solid::TruncatedOctahedron,
        Solid::TruncatedTetrahedronAntipodal,
        Solid::Rhombicuboctahedron,
    ];

    const NAMES: [&'static str; 8] = [
        "icosahedron",
        "dodecahedron",
        "truncated-cube",
        "truncated-octahedron",
        "truncated-tetrahedron-antipodal",
        "rhombicuboctahedron",
        "octahedron",
        "cube",
    ];

    pub fn name(&self) -> &'static str {
        Self::NAMES[Self::ALL.iter().position(|s| s == self).expect("listed")]
    }

    /// Vertex coordinates (unnormalized), antipodal points included where the
    /// solid lacks central symmetry.
    pub fn vertices(&self) -> Vec<[f64; 3]> {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let signs = [-1.0, 1.0];
        let mut v = Vec::new();
        match self {
            Solid::Icosahedron => {
                for &s1 in &signs {
                    for &s2 in &signs {
                        v.extend(cyclic([0.0, s1, s2 * phi]));
                    }
                }
            }
            Solid::Dodecahedron => {
                v.extend(sign_combinations([1.0, 1.0, 1.0]));
                for &s1 in &signs {
                    for &s2 in &signs {
                        v.extend(cyclic([0.0, s1 / phi, s2 * phi]));
                    }
                }
            }
            Solid::TruncatedCube => {
                let xi = 2f64.sqrt() - 1.0;
                v.extend(all_permutations_signed([xi, 1.0, 1.0]));
            }
            Solid::TruncatedOctahedron => v.extend(all_permutations_signed([0.0, 1.0, 2.0])),
            Solid::TruncatedTetrahedronAntipodal => {
                let tetra: Vec<[f64; 3]> = all_permutations_signed([3.0, 1.0, 1.0])
                    .into_iter()
                    .filter(|p| p.iter().filter(|&&x| x < 0.0).count() % 2 == 0)
                    .collect();
                let antipodes: Vec<[f64; 3]> = tetra.iter().map(|p| [-p[0], -p[1], -p[2]]).collect();
                v.extend(tetra);
                v.extend(antipodes);
            }
            Solid::Rhombicuboctahedron => v.extend(all_permutations_signed([1.0, 1.0, 1.0 + 2f64.sqrt()])),
            Solid::Octahedron => v.extend(all_permutations_signed([1.0, 0.0, 0.0])),
            Solid::Cube => v.extend(sign_combinations([1.0, 1.0, 1.0])),
        }
        v
    }
}

impl fmt::Display for Solid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solid {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::NAMES
            .iter()
            .position(|&n| n == key)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| GeometryError::UnknownSolid(s.to_string()))
    }
}

fn cyclic(p: [f64; 3]) -> [[f64; 3]; 3] {
    [p, [p[2], p[0], p[1]], [p[1], p[2], p[0]]]
}

fn sign_combinations(p: [f64; 3]) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for mask in 0..8u8 {
        let q = [
            if mask & 1 != 0 { -p[0] } else { p[0] },
            if mask & 2 != 0 { -p[1] } else { p[1] },
            if mask & 4 != 0 { -p[2] } else { p[2] },
        ];
        if !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

fn all_permutations_signed(p: [f64; 3]) -> Vec<[f64; 3]> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out: Vec<[f64; 3]> = Vec::new();
    for perm in PERMS {
        for q in sign_combinations([p[perm[0]], p[perm[1]], p[perm[2]]]) {
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    out
}

/// Measurement set along the vertices of a built-in solid.
pub fn solid_directions(solid: Solid) -> MeasurementSet {
    let dirs = solid.vertices().into_iter().map(|v| BlochDirection::new(v).expect("solid vertices are non-zero"));
    MeasurementSet::new(solid.name(), dirs).expect("solid vertices span three dimensions")
}

/// `solid_directions` by name.
pub fn solid_directions_by_name(name: &str) -> Result<MeasurementSet> {
    Ok(solid_directions(name.parse()?))
}

/// `m` directions drawn uniformly on the sphere from stream `(seed, 0)`.
pub fn random_directions(m: usize, seed: u64) -> Result<MeasurementSet> {
    random_directions_from(m, &mut RngStream::new(seed, 0))
}

pub fn random_directions_from(m: usize, rng: &mut RngStream) -> Result<MeasurementSet> {
    if m < 3 {
        return Err(GeometryError::TooFew(m));
    }
    let dirs: Vec<BlochDirection> = (0..m).map(|_| BlochDirection::sample(rng)).collect();
    MeasurementSet::new(format!("random-{m}"), dirs)
}

/// `Π_{a|û} = (I + (−1)^a û·σ⃗)/2`.
pub fn projector(u: &BlochDirection, a: u8) -> HermitianOperator {
    let sign = if a == 0 { 0.5 } else { -0.5 };
    let half_id = HermitianOperator::identity(&[2]).scale(0.5);
    &half_id + &u.pauli_component().scale(sign)
}

/// `rΠ_{a|û} + (1 − r)I/2`.
pub fn depolarized_projector(u: &BlochDirection, a: u8, r: f64) -> Result<HermitianOperator> {
    if !(0.0..=1.0).contains(&r) {
        return Err(GeometryError::BadNoise(r));
    }
    let half_id = HermitianOperator::identity(&[2]).scale(0.5);
    Ok(&projector(u, a).scale(r) + &half_id.scale(1.0 - r))
}

/// Bloch vector of a qubit effect `E = (e₀ I + e⃗·σ⃗)`, normalized as `e⃗/e₀`.
pub fn bloch_vector(effect: &HermitianOperator) -> [f64; 3] {
    let e0 = effect.trace() / 2.0;
    let comp = |p: HermitianOperator| p.inner(effect) / 2.0 / e0;
    [comp(pauli_x()), comp(pauli_y()), comp(pauli_z())]
}

/// Deterministic assignment `λ = λ₁⋯λ_m` of one outcome per measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    bits: u32,
    len: u8,
}

impl DeterministicStrategy {
    pub fn from_index(index: usize, len: usize) -> Self {
        debug_assert!(len <= MAX_MEASUREMENTS && index < (1 << len));
        Self { bits: index as u32, len: len as u8 }
    }

    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `λ_x`.
    pub fn outcome(&self, x: usize) -> u8 {
        ((self.bits >> x) & 1) as u8
    }

    /// `D_λ(a|x) = δ_{a,λ_x}`.
    pub fn response(&self, a: u8, x: usize) -> f64 {
        if self.outcome(x) == a {
            1.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in 0..self.len() {
            write!(f, "{}", self.outcome(x))?;
        }
        Ok(())
    }
}

impl FromStr for DeterministicStrategy {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self> {
        if s.len() > MAX_MEASUREMENTS {
            return Err(GeometryError::TooManyStrategies(s.len()));
        }
        let mut bits = 0u32;
        for (x, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << x,
                _ => return Err(GeometryError::UnknownSolid(format!("bad strategy string {s:?}"))),
            }
        }
        Ok(Self { bits, len: s.len() as u8 })
    }
}

/// All `2^m` deterministic strategies for `m` two-outcome measurements.
pub fn strategies(m: usize) -> Result<impl ExactSizeIterator<Item = DeterministicStrategy>> {
    if m > MAX_MEASUREMENTS {
        return Err(GeometryError::TooManyStrategies(m));
    }
    Ok((0..(1usize << m)).map(move |i| DeterministicStrategy::from_index(i, m)))
}

/// 2×2 matrix helper used by tests and callers building effects by hand.
pub fn qubit_matrix(a: [[f64; 2]; 2]) -> HermitianOperator {
    HermitianOperator::new(
        vec![2],
        CMatrix::from_row_slice(2, 2, &[c(a[0][0], 0.0), c(a[0][1], 0.0), c(a[1][0], 0.0), c(a[1][1], 0.0)]),
    )
    .expect("symmetric real matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn analytic_icosahedron_ratio() -> f64 {
        let s5 = 5f64.sqrt();
        3f64.sqrt() * (3.0 + s5) / (3.0 * (10.0 + 2.0 * s5).sqrt())
    }

    #[test]
    fn solid_measurement_counts() {
        let expect = [
            (Solid::Icosahedron, 6),
            (Solid::Dodecahedron, 10),
            (Solid::TruncatedCube, 12),
            (Solid::TruncatedOctahedron, 12),
            (Solid::TruncatedTetrahedronAntipodal, 12),
            (Solid::Rhombicuboctahedron, 12),
            (Solid::Octahedron, 3),
            (Solid::Cube, 4),
        ];
        for (solid, m) in expect {
            let set = solid_directions(solid);
            assert_eq!(set.len(), m, "{solid}");
            assert_eq!(set.vertex_count(), 2 * m);
        }
    }

    #[test]
    fn insphere_examples() {
        let ico = solid_directions(Solid::Icosahedron).insphere();
        assert!((ico - analytic_icosahedron_ratio()).abs() < 1e-12);
        assert!((ico - 0.7947).abs() < 5e-4);
        let oct = solid_directions(Solid::Octahedron).insphere();
        assert!((oct - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let cube = solid_directions(Solid::Cube).insphere();
        assert!((cube - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let tc = solid_directions(Solid::TruncatedCube).insphere();
        assert!((tc - 0.67).abs() < 0.01);
        let rh = solid_directions(Solid::Rhombicuboctahedron).insphere();
        assert!((rh - 0.86).abs() < 0.005);
    }

    #[test]
    fn solid_names_round_trip() {
        for s in Solid::ALL {
            assert_eq!(s.name().parse::<Solid>().unwrap(), s);
        }
        assert!(matches!("tesseract".parse::<Solid>(), Err(GeometryError::UnknownSolid(_))));
    }

    #[test]
    fn canonicalization_merges_antipodes() {
        let set = MeasurementSet::new(
            "t",
            [BlochDirection::z(), BlochDirection::z().flipped(), BlochDirection::x(), BlochDirection::y()],
        )
        .unwrap();
        assert_eq!(set.len(), 3);
        assert!(set.directions().iter().all(|d| is_canonical(&d.vector())));
    }

    #[test]
    fn random_directions_are_reproducible() {
        let a = random_directions(6, 1).unwrap();
        let b = random_directions(6, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.insphere() > 0.0 && a.insphere() < 1.0);
        assert_eq!(random_directions(2, 1).unwrap_err(), GeometryError::TooFew(2));
    }

    #[test]
    fn sampled_directions_have_vanishing_mean() {
        let mut rng = RngStream::new(99, 0);
        let mut mean = [0.0; 3];
        let n = 100_000;
        for _ in 0..n {
            let v = BlochDirection::sample(&mut rng).vector();
            for k in 0..3 {
                mean[k] += v[k] / n as f64;
            }
        }
        assert!(hull::norm(&mean) < 0.02);
    }

    #[test]
    fn coplanar_directions_are_degenerate() {
        let dirs = [BlochDirection::x(), BlochDirection::y(), BlochDirection::new([1.0, 1.0, 0.0]).unwrap()];
        assert_eq!(MeasurementSet::new("flat", dirs).unwrap_err(), GeometryError::DegeneratePolytope);
    }

    #[test]
    fn projector_examples() {
        let p0 = projector(&BlochDirection::z(), 0);
        assert!(p0.max_abs_diff(&qubit_matrix([[1.0, 0.0], [0.0, 0.0]])) < 1e-15);
        let px = projector(&BlochDirection::x(), 0);
        assert!(px.max_abs_diff(&qubit_matrix([[0.5, 0.5], [0.5, 0.5]])) < 1e-15);
        let d = depolarized_projector(&BlochDirection::z(), 0, 0.5).unwrap();
        assert!(d.max_abs_diff(&qubit_matrix([[0.75, 0.0], [0.0, 0.25]])) < 1e-15);
        assert!(depolarized_projector(&BlochDirection::z(), 0, 1.0).unwrap().max_abs_diff(&p0) < 1e-15);
        let mixed = depolarized_projector(&BlochDirection::z(), 1, 0.0).unwrap();
        assert!(mixed.max_abs_diff(&HermitianOperator::maximally_mixed(&[2])) < 1e-15);
        assert_eq!(depolarized_projector(&BlochDirection::z(), 0, 1.5).unwrap_err(), GeometryError::BadNoise(1.5));
    }

    #[test]
    fn strategy_enumeration() {
        let s1: Vec<String> = strategies(1).unwrap().map(|s| s.to_string()).collect();
        assert_eq!(s1, ["0", "1"]);
        assert_eq!(strategies(6).unwrap().len(), 64);
        assert!(matches!(strategies(15), Err(GeometryError::TooManyStrategies(15))));
        let assignment = [1u8, 0, 1, 1, 0];
        let matches: f64 =
            strategies(5).unwrap().map(|s| (0..5).map(|x| s.response(assignment[x], x)).product::<f64>()).sum();
        assert_eq!(matches, 1.0);
        let s: DeterministicStrategy = "0110".parse().unwrap();
        assert_eq!(s.to_string(), "0110");
        assert_eq!(s.outcome(1), 1);
    }

    #[test]
    fn set_json_round_trip() {
        let set = solid_directions(Solid::Icosahedron);
        let s = serde_json::to_string(&set).unwrap();
        let back: MeasurementSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back.len(), set.len());
        assert!((back.insphere() - set.insphere()).abs() < 1e-12);
    }

    fn random_rotation(rng: &mut RngStream) -> [[f64; 3]; 3] {
        // Gram-Schmidt on Gaussian columns
        let mut cols: Vec<[f64; 3]> = Vec::new();
        while cols.len() < 3 {
            let mut v = [rng.standard_normal(), rng.standard_normal(), rng.standard_normal()];
            for c in &cols {
                let p = hull::dot(&v, c);
                for k in 0..3 {
                    v[k] -= p * c[k];
                }
            }
            let n = hull::norm(&v);
            if n > 1e-6 {
                cols.push([v[0] / n, v[1] / n, v[2] / n]);
            }
        }
        [cols[0], cols[1], cols[2]]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn insphere_rotation_invariant(seed in 0u64..10_000) {
            let mut rng = RngStream::new(seed, 5);
            let set = solid_directions(Solid::ALL[(seed % 8) as usize]);
            let rot = random_rotation(&mut rng);
            let rotated = set.directions().iter().map(|d| {
                let v = d.vector();
                BlochDirection::new([
                    hull::dot(&rot[0], &v), hull::dot(&rot[1], &v), hull::dot(&rot[2], &v),
                ]).unwrap()
            });
            let r2 = MeasurementSet::new("rot", rotated).unwrap().insphere();
            prop_assert!((r2 - set.insphere()).abs() < 1e-9);
        }

        #[test]
        fn adding_directions_never_shrinks_insphere(seed in 0u64..10_000) {
            let mut rng = RngStream::new(seed, 6);
            let base = random_directions_from(5, &mut rng).unwrap();
            let extra = BlochDirection::sample(&mut rng);
            let bigger = MeasurementSet::new("bigger", base.directions().iter().copied().chain([extra])).unwrap();
            prop_assert!(bigger.insphere() >= base.insphere() - 1e-10);
            for d in facet_distances(bigger.directions()).unwrap() {
                prop_assert!(d >= bigger.insphere() - 1e-10);
            }
        }

        #[test]
        fn projector_completeness_and_depolarization(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, r in 0.0f64..=1.0) {
            prop_assume!(x * x + y * y + z * z > 1e-3);
            let u = BlochDirection::new([x, y, z]).unwrap();
            let p0 = projector(&u, 0);
            let p1 = projector(&u, 1);
            prop_assert!((&p0 + &p1).max_abs_diff(&HermitianOperator::identity(&[2])) < 1e-14);
            let sq = HermitianOperator::new(vec![2], p0.entries() * p0.entries()).unwrap();
            prop_assert!(sq.max_abs_diff(&p0) < 1e-14);
            for a in 0..2u8 {
                let dep = depolarized_projector(&u, a, r).unwrap();
                let lin = &projector(&u, a).scale(r) + &HermitianOperator::identity(&[2]).scale(0.5 * (1.0 - r));
                prop_assert!(dep.max_abs_diff(&lin) < 1e-15);
                prop_assert!(dep.min_eigenvalue() >= -1e-15);
                let b = bloch_vector(&dep);
                prop_assert!((hull::norm(&b) - r).abs() < 1e-12);
            }
        }
    }
}
