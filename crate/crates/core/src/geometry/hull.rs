//! Incremental 3D convex hull (beneath–beyond) for small point sets.

use std::collections::HashSet;

pub type Point = [f64; 3];

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

/// Triangular facet with unit outward normal; the plane is `normal·x = offset`.
#[derive(Clone, Debug)]
pub struct Facet {
    pub vertices: [usize; 3],
    pub normal: Point,
    pub offset: f64,
}

impl Facet {
    fn signed_distance(&self, p: &Point) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

#[derive(Clone, Debug)]
pub struct ConvexHull {
    facets: Vec<Facet>,
}

/// Raised when the points do not span three dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Degenerate;

impl ConvexHull {
    /// Builds the hull; points closer than `tol` to a facet plane are treated
    /// as lying on it, which merges coplanar vertices into the existing facets.
    pub fn new(points: &[Point], tol: f64) -> Result<Self, Degenerate> {
        let simplex = initial_simplex(points, tol).ok_or(Degenerate)?;
        let centroid = {
            let mut c = [0.0; 3];
            for &i in &simplex {
                for k in 0..3 {
                    c[k] += points[i][k] / 4.0;
                }
            }
            c
        };
        let [a, b, c, d] = simplex;
        let mut facets: Vec<Facet> = [[a, b, c], [a, b, d], [a, c, d], [b, c, d]]
            .iter()
            .map(|&v| oriented_facet(points, v, &centroid))
            .collect();

        for (i, p) in points.iter().enumerate() {
            if simplex.contains(&i) {
                continue;
            }
            let visible: Vec<usize> = (0..facets.len()).filter(|&f| facets[f].signed_distance(p) > tol).collect();
            if visible.is_empty() {
                continue;
            }
            let mut edges = HashSet::new();
            for &f in &visible {
                let v = facets[f].vertices;
                for k in 0..3 {
                    edges.insert((v[k], v[(k + 1) % 3]));
                }
            }
            let horizon: Vec<(usize, usize)> =
                edges.iter().filter(|&&(u, w)| !edges.contains(&(w, u))).copied().collect();
            let mut keep: Vec<Facet> = facets
                .iter()
                .enumerate()
                .filter(|(f, _)| !visible.contains(f))
                .map(|(_, facet)| facet.clone())
                .collect();
            for (u, w) in horizon {
                keep.push(oriented_facet(points, [u, w, i], &centroid));
            }
            facets = keep;
        }
        Ok(Self { facets })
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Smallest signed distance from `p` to a facet plane; positive when `p`
    /// is strictly inside.
    pub fn depth(&self, p: &Point) -> f64 {
        self.facets.iter().map(|f| -f.signed_distance(p)).fold(f64::INFINITY, f64::min)
    }
}

fn oriented_facet(points: &[Point], v: [usize; 3], interior: &Point) -> Facet {
    let [a, b, c] = v;
    let n = cross(&sub(&points[b], &points[a]), &sub(&points[c], &points[a]));
    let len = norm(&n);
    let mut normal = [n[0] / len, n[1] / len, n[2] / len];
    let mut vertices = v;
    if dot(&normal, &sub(&points[a], interior)) < 0.0 {
        normal = [-normal[0], -normal[1], -normal[2]];
        vertices = [a, c, b];
    }
    Facet { vertices, normal, offset: dot(&normal, &points[a]) }
}

fn initial_simplex(points: &[Point], tol: f64) -> Option<[usize; 4]> {
    if points.len() < 4 {
        return None;
    }
    let argmax = |score: &dyn Fn(&Point) -> f64| {
        points.iter().enumerate().map(|(i, p)| (i, score(p))).fold((0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
    };
    let p0 = 0;
    let (p1, d1) = argmax(&|p| norm(&sub(p, &points[p0])));
    if d1 <= tol {
        return None;
    }
    let axis = sub(&points[p1], &points[p0]);
    let (p2, d2) = argmax(&|p| norm(&cross(&axis, &sub(p, &points[p0]))) / norm(&axis));
    if d2 <= tol {
        return None;
    }
    let n = cross(&axis, &sub(&points[p2], &points[p0]));
    let nn = norm(&n);
    let (p3, d3) = argmax(&|p| (dot(&n, &sub(p, &points[p0])) / nn).abs());
    if d3 <= tol {
        return None;
    }
    Some([p0, p1, p2, p3])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Supporting planes through every triple of points: a facet plane has all
    /// points on one side. Independent of the incremental construction.
    fn brute_force_min_distance(points: &[Point], tol: f64) -> f64 {
        let mut best = f64::INFINITY;
        let n = points.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let nrm = cross(&sub(&points[j], &points[i]), &sub(&points[k], &points[i]));
                    let len = norm(&nrm);
                    if len < 1e-9 {
                        continue;
                    }
                    let u = [nrm[0] / len, nrm[1] / len, nrm[2] / len];
                    let off = dot(&u, &points[i]);
                    let side: Vec<f64> = points.iter().map(|p| dot(&u, p) - off).collect();
                    if side.iter().all(|&s| s <= tol) || side.iter().all(|&s| s >= -tol) {
                        best = best.min(off.abs());
                    }
                }
            }
        }
        best
    }

    fn cube() -> Vec<Point> {
        let mut pts = Vec::new();
        for &x in &[-1.0, 1.0] {
            for &y in &[-1.0, 1.0] {
                for &z in &[-1.0, 1.0] {
                    pts.push([x, y, z]);
                }
            }
        }
        pts
    }

    #[test]
    fn cube_hull_matches_brute_force() {
        let pts = cube();
        let hull = ConvexHull::new(&pts, 1e-10).unwrap();
        let r = hull.facets().iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
        assert!((r - 1.0).abs() < 1e-12);
        assert!((r - brute_force_min_distance(&pts, 1e-10)).abs() < 1e-12);
        // 6 square faces, two triangles each
        assert_eq!(hull.facets().len(), 12);
    }

    #[test]
    fn coplanar_points_are_degenerate() {
        let pts = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]];
        assert_eq!(ConvexHull::new(&pts, 1e-10).unwrap_err(), Degenerate);
    }

    #[test]
    fn every_point_is_inside_or_on_the_hull() {
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..20 {
            let pts: Vec<Point> = (0..30).map(|_| [next(), next(), next()]).collect();
            let hull = ConvexHull::new(&pts, 1e-12).unwrap();
            for p in &pts {
                assert!(hull.depth(p) >= -1e-9);
            }
            let origin_depth = hull.depth(&[0.0; 3]);
            let brute = brute_force_min_distance(&pts, 1e-12);
            if origin_depth > 0.0 {
                assert!((origin_depth - brute).abs() < 1e-9, "{origin_depth} vs {brute}");
            }
        }
    }
}
