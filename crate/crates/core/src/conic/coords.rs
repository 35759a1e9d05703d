//! Real coordinates of complex Hermitian matrices.
//!
//! An `n×n` Hermitian matrix has `n²` real coordinates, ordered row by row
//! over the upper triangle: the diagonal entry `X_ii`, then `Re X_ij` and
//! `Im X_ij` for each `j > i`.

use crate::operator::{c, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Coord {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

pub(crate) fn layout(n: usize) -> Vec<Coord> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(Coord::Diag(i));
        for j in (i + 1)..n {
            out.push(Coord::Re(i, j));
            out.push(Coord::Im(i, j));
        }
    }
    out
}

/// Index of the coordinate holding `Re X_ij` (or the diagonal) for `i <= j`.
pub(crate) fn re_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    // rows 0..i contribute 1 + 2(n - r - 1) each
    let before: usize = (0..i).map(|r| 2 * (n - r) - 1).sum();
    if i == j {
        before
    } else {
        before + 1 + 2 * (j - i - 1)
    }
}

/// Index of the coordinate holding `Im X_ij` for `i < j`.
pub(crate) fn im_index(n: usize, i: usize, j: usize) -> usize {
    re_index(n, i, j) + 1
}

pub(crate) fn basis(n: usize, coord: Coord) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    match coord {
        Coord::Diag(i) => m[(i, i)] = c(1.0, 0.0),
        Coord::Re(i, j) => {
            m[(i, j)] = c(1.0, 0.0);
            m[(j, i)] = c(1.0, 0.0);
        }
        Coord::Im(i, j) => {
            m[(i, j)] = c(0.0, 1.0);
            m[(j, i)] = c(0.0, -1.0);
        }
    }
    m
}

pub(crate) fn to_coords(m: &CMatrix) -> Vec<f64> {
    layout(m.nrows())
        .into_iter()
        .map(|k| match k {
            Coord::Diag(i) => m[(i, i)].re,
            Coord::Re(i, j) => 0.5 * (m[(i, j)].re + m[(j, i)].re),
            Coord::Im(i, j) => 0.5 * (m[(i, j)].im - m[(j, i)].im),
        })
        .collect()
}

pub(crate) fn from_coords(n: usize, x: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for (k, coord) in layout(n).into_iter().enumerate() {
        match coord {
            Coord::Diag(i) => m[(i, i)] = c(x[k], 0.0),
            Coord::Re(i, j) => {
                m[(i, j)].re = x[k];
                m[(j, i)].re = x[k];
            }
            Coord::Im(i, j) => {
                m[(i, j)].im = x[k];
                m[(j, i)].im = -x[k];
            }
        }
    }
    m
}

/// Rows of a cone slack as linear combinations of Hermitian coordinates.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum ConeShape {
    /// Side-1 blocks: `x ≥ 0`.
    Nonnegative,
    /// Side-2 blocks: `(X00 + X11, X00 − X11, 2 Re X01, 2 Im X01)` in the
    /// second-order cone, which is equivalent to `X ⪰ 0`.
    SecondOrder,
    /// Side ≥ 3: real embedding `[[Re X, −Im X], [Im X, Re X]]` in scaled
    /// upper-triangular column-major form.
    RealEmbedding(usize),
}

impl ConeShape {
    pub(crate) fn for_side(n: usize) -> Self {
        match n {
            1 => ConeShape::Nonnegative,
            2 => ConeShape::SecondOrder,
            _ => ConeShape::RealEmbedding(2 * n),
        }
    }

    /// Each cone row as `(coordinate index, coefficient)` pairs.
    pub(crate) fn rows(&self, n: usize) -> Vec<Vec<(usize, f64)>> {
        match self {
            ConeShape::Nonnegative => vec![vec![(0, 1.0)]],
            ConeShape::SecondOrder => {
                let (d0, re, im, d1) = (re_index(2, 0, 0), re_index(2, 0, 1), im_index(2, 0, 1), re_index(2, 1, 1));
                vec![vec![(d0, 1.0), (d1, 1.0)], vec![(d0, 1.0), (d1, -1.0)], vec![(re, 2.0)], vec![(im, 2.0)]]
            }
            ConeShape::RealEmbedding(side) => {
                let sqrt2 = std::f64::consts::SQRT_2;
                let mut rows = Vec::with_capacity(side * (side + 1) / 2);
                for col in 0..*side {
                    for row in 0..=col {
                        let scale = if row == col { 1.0 } else { sqrt2 };
                        let entry = embedding_entry(n, row, col);
                        rows.push(entry.map(|(k, v)| vec![(k, v * scale)]).unwrap_or_default());
                    }
                }
                rows
            }
        }
    }
}

/// Entry `(row, col)`, `row <= col`, of the real embedding as a signed coordinate.
fn embedding_entry(n: usize, row: usize, col: usize) -> Option<(usize, f64)> {
    let re = |i: usize, j: usize| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        Some((re_index(n, a, b), 1.0))
    };
    // Im X_ij with i != j; zero on the diagonal
    let im = |i: usize, j: usize| -> Option<(usize, f64)> {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => None,
            Less => Some((im_index(n, i, j), 1.0)),
            Greater => Some((im_index(n, j, i), -1.0)),
        }
    };
    match (row < n, col < n) {
        (true, true) => re(row, col),
        (true, false) => im(row, col - n).map(|(k, v)| (k, -v)),
        (false, false) => re(row - n, col - n),
        (false, true) => unreachable!("lower triangle"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn random_hermitian(n: usize, rng: &mut RngStream) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| rng.complex_normal());
        (&g + g.adjoint()).map(|z| z * 0.5)
    }

    #[test]
    fn coords_round_trip() {
        let mut rng = RngStream::new(1, 0);
        for n in 1..6 {
            let m = random_hermitian(n, &mut rng);
            let back = from_coords(n, &to_coords(&m));
            assert!((back - &m).iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn index_helpers_match_layout() {
        for n in 1..6 {
            for (k, coord) in layout(n).into_iter().enumerate() {
                match coord {
                    Coord::Diag(i) => assert_eq!(re_index(n, i, i), k),
                    Coord::Re(i, j) => assert_eq!(re_index(n, i, j), k),
                    Coord::Im(i, j) => assert_eq!(im_index(n, i, j), k),
                }
            }
        }
    }

    #[test]
    fn real_embedding_round_trip() {
        // lowering to the real embedding and lifting back is the identity
        let mut rng = RngStream::new(2, 0);
        for n in 3..5 {
            let m = random_hermitian(n, &mut rng);
            let x = to_coords(&m);
            let shape = ConeShape::for_side(n);
            let side = 2 * n;
            let svec: Vec<f64> = shape.rows(n).iter().map(|r| r.iter().map(|&(k, v)| v * x[k]).sum()).collect();
            let mut y = nalgebra::DMatrix::<f64>::zeros(side, side);
            let mut idx = 0;
            for col in 0..side {
                for row in 0..=col {
                    let v = if row == col { svec[idx] } else { svec[idx] / std::f64::consts::SQRT_2 };
                    y[(row, col)] = v;
                    y[(col, row)] = v;
                    idx += 1;
                }
            }
            let lifted = CMatrix::from_fn(n, n, |i, j| c(y[(i, j)], y[(i + n, j)]));
            assert!((lifted - &m).iter().all(|z| z.norm() < 1e-12));
            // eigenvalues appear twice in the embedding
            let mut ev: Vec<f64> = y.symmetric_eigen().eigenvalues.iter().copied().collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut herm: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            herm.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (k, l) in herm.iter().enumerate() {
                assert!((ev[2 * k] - l).abs() < 1e-10 && (ev[2 * k + 1] - l).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_order_rows_decide_psd() {
        let mut rng = RngStream::new(3, 0);
        for _ in 0..200 {
            let m = random_hermitian(2, &mut rng);
            let x = to_coords(&m);
            let rows: Vec<f64> =
                ConeShape::SecondOrder.rows(2).iter().map(|r| r.iter().map(|&(k, v)| v * x[k]).sum()).collect();
            let in_cone = rows[0] >= (rows[1] * rows[1] + rows[2] * rows[2] + rows[3] * rows[3]).sqrt();
            let min_eig = m.symmetric_eigenvalues().min();
            assert_eq!(in_cone, min_eig >= 0.0);
        }
    }
}
