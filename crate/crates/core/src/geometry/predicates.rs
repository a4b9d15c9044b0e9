//! Exact orientation and in-sphere predicates in any dimension.
//!
//! Signs are computed with a floating-point filter first; when the filter cannot
//! certify the sign, the determinant is recomputed exactly over big integers
//! (every finite `f64` is a dyadic rational, so scaling by a common power of two
//! makes all inputs integers). Dimensions 2 and 3 go through Shewchuk's adaptive
//! predicates instead of the generic filter.

use num_bigint::BigInt;
use num_traits::Zero;

use super::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Negative,
    Degenerate,
    Positive,
}

impl Orientation {
    fn from_sign(s: i8) -> Self {
        match s {
            s if s > 0 => Orientation::Positive,
            s if s < 0 => Orientation::Negative,
            _ => Orientation::Degenerate,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Orientation::Negative => -1,
            Orientation::Degenerate => 0,
            Orientation::Positive => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpherePosition {
    Inside,
    On,
    Outside,
}

/// Sign of `det[p_1 - p_0, ..., p_d - p_0]` for `d + 1` points of R^d.
pub fn orientation(pts: &[&[f64]]) -> Orientation {
    let d = pts.len() - 1;
    debug_assert!(pts.iter().all(|p| p.len() == d));
    let s = match d {
        1 => sign_of(pts[1][0] - pts[0][0]),
        2 => sign_of(robust::orient2d(c2(pts[0]), c2(pts[1]), c2(pts[2]))),
        // orient3d evaluates det[a - d, b - d, c - d], which is the negation of ours.
        3 => -sign_of(robust::orient3d(c3(pts[0]), c3(pts[1]), c3(pts[2]), c3(pts[3]))),
        _ => generic_orientation_sign(pts),
    };
    Orientation::from_sign(s)
}

/// Sign of the lifted determinant `det[p_i - q, |p_i - q|^2]` over the `d + 1`
/// simplex vertices. The query is inside the circumsphere iff this sign equals
/// `(-1)^d` times the orientation of the simplex.
pub fn lifted_sign(simplex: &[&[f64]], q: &[f64]) -> i8 {
    let d = q.len();
    match d {
        2 => sign_of(robust::incircle(c2(simplex[0]), c2(simplex[1]), c2(simplex[2]), c2(q))),
        3 => sign_of(robust::insphere(
            c3(simplex[0]),
            c3(simplex[1]),
            c3(simplex[2]),
            c3(simplex[3]),
            c3(q),
        )),
        _ => generic_lifted_sign(simplex, q),
    }
}

/// Position of `q` relative to the circumsphere of a full-dimensional simplex.
/// `None` when the simplex is affinely dependent.
pub fn in_sphere_points(simplex: &[&[f64]], q: &[f64]) -> Option<SpherePosition> {
    let d = q.len();
    let o = orientation(simplex).sign();
    if o == 0 {
        return None;
    }
    let lifted = lifted_sign(simplex, q);
    Some(classify(lifted, o, d))
}

fn classify(lifted: i8, orient: i8, d: usize) -> SpherePosition {
    if lifted == 0 {
        return SpherePosition::On;
    }
    let parity = if d.is_multiple_of(2) { 1 } else { -1 };
    if lifted == parity * orient {
        SpherePosition::Inside
    } else {
        SpherePosition::Outside
    }
}

/// Exact in-sphere test on indexed points.
pub fn in_sphere(simplex: &[usize], query: usize, cloud: &PointCloud) -> Result<SpherePosition> {
    let d = cloud.dim();
    if simplex.len() != d + 1 {
        return Err(Error::Contract(format!(
            "in-sphere needs {} simplex vertices in dimension {d}, got {}",
            d + 1,
            simplex.len()
        )));
    }
    for &v in simplex.iter().chain(std::iter::once(&query)) {
        if v >= cloud.len() {
            return Err(Error::Input(format!("vertex index {v} out of range")));
        }
    }
    let pts: Vec<&[f64]> = simplex.iter().map(|&v| cloud.point(v)).collect();
    in_sphere_points(&pts, cloud.point(query))
        .ok_or_else(|| Error::degeneracy("affinely dependent simplex", simplex.to_vec()))
}

/// In-sphere test with ties broken by a symbolic perturbation of the lifting
/// heights: point `i` is lifted by an infinitesimal that dominates every point with
/// a larger index. The result is the exact answer for the perturbed (regular)
/// configuration, hence globally consistent. Returns `None` only when the points
/// are cohyperplanar in a way the lift perturbation cannot resolve.
pub fn in_sphere_perturbed(
    simplex: &[usize],
    query: usize,
    cloud: &PointCloud,
) -> Option<SpherePosition> {
    let d = cloud.dim();
    let pts: Vec<&[f64]> = simplex.iter().map(|&v| cloud.point(v)).collect();
    let o = orientation(&pts).sign();
    if o == 0 {
        return None;
    }
    let lifted = lifted_sign(&pts, cloud.point(query));
    if lifted != 0 {
        return Some(classify(lifted, o, d));
    }
    // Rows of the (d+2)x(d+2) lifted matrix: simplex vertices then the query. The
    // derivative of the lifted determinant with respect to row i's height is
    // (-1)^i times the orientation of the remaining rows.
    let mut rows: Vec<(usize, usize)> = simplex
        .iter()
        .copied()
        .chain(std::iter::once(query))
        .enumerate()
        .map(|(row, idx)| (idx, row))
        .collect();
    rows.sort_unstable();
    let all: Vec<&[f64]> = simplex
        .iter()
        .chain(std::iter::once(&query))
        .map(|&v| cloud.point(v))
        .collect();
    for &(_, row) in &rows {
        let rest: Vec<&[f64]> = (0..all.len()).filter(|&r| r != row).map(|r| all[r]).collect();
        let c = orientation(&rest).sign();
        if c != 0 {
            let cof = if row % 2 == 0 { c } else { -c };
            // the perturbed full determinant has the sign of the dominant cofactor,
            // and relates to the reduced lifted determinant with sign +1
            return Some(classify(cof, o, d));
        }
    }
    None
}

#[inline]
fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn c2(p: &[f64]) -> robust::Coord<f64> {
    robust::Coord { x: p[0], y: p[1] }
}

fn c3(p: &[f64]) -> robust::Coord3D<f64> {
    robust::Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

const UNIT_ROUNDOFF: f64 = 1.1102230246251565e-16;

/// Orientation sign through the generic filter + exact fallback, any dimension.
pub fn generic_orientation_sign(pts: &[&[f64]]) -> i8 {
    let d = pts.len() - 1;
    let base = pts[0];
    let rows: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let (det, perm) = laplace(&rows);
    let bound = 2.0 * (d * (d + 2) + d * d) as f64 * UNIT_ROUNDOFF * perm;
    if det.abs() > bound {
        return sign_of(det);
    }
    let ints = to_integers(pts);
    let rows: Vec<Vec<BigInt>> = ints[1..]
        .iter()
        .map(|p| p.iter().zip(&ints[0]).map(|(a, b)| a - b).collect())
        .collect();
    bigint_sign(&bareiss_det(rows))
}

/// Lifted in-sphere determinant sign through the generic filter + exact fallback.
pub fn generic_lifted_sign(simplex: &[&[f64]], q: &[f64]) -> i8 {
    let n = simplex.len();
    let d = q.len();
    let rows: Vec<Vec<f64>> = simplex
        .iter()
        .map(|p| {
            let mut r: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
            let s = r.iter().map(|x| x * x).sum();
            r.push(s);
            r
        })
        .collect();
    let (det, perm) = laplace(&rows);
    let bound = 2.0 * (n * (d + 3) + n * n) as f64 * UNIT_ROUNDOFF * perm;
    if det.abs() > bound {
        return sign_of(det);
    }
    let mut all: Vec<&[f64]> = simplex.to_vec();
    all.push(q);
    let ints = to_integers(&all);
    let qi = &ints[n];
    let rows: Vec<Vec<BigInt>> = ints[..n]
        .iter()
        .map(|p| {
            let mut r: Vec<BigInt> = p.iter().zip(qi).map(|(a, b)| a - b).collect();
            let s = r.iter().map(|x| x * x).sum();
            r.push(s);
            r
        })
        .collect();
    bigint_sign(&bareiss_det(rows))
}

/// Determinant by cofactor expansion together with the same expansion over
/// absolute values (the permanent of |A|), which bounds the rounding error.
fn laplace(rows: &[Vec<f64>]) -> (f64, f64) {
    let n = rows.len();
    let cols: Vec<usize> = (0..n).collect();
    laplace_rec(rows, 0, &cols)
}

fn laplace_rec(rows: &[Vec<f64>], row: usize, cols: &[usize]) -> (f64, f64) {
    if cols.len() == 1 {
        let v = rows[row][cols[0]];
        return (v, v.abs());
    }
    if cols.len() == 2 {
        let (a, b) = (rows[row][cols[0]], rows[row][cols[1]]);
        let (c, e) = (rows[row + 1][cols[0]], rows[row + 1][cols[1]]);
        return (a * e - b * c, (a * e).abs() + (b * c).abs());
    }
    let mut det = 0.0;
    let mut perm = 0.0;
    let mut sub = Vec::with_capacity(cols.len() - 1);
    for (k, &c) in cols.iter().enumerate() {
        let a = rows[row][c];
        if a == 0.0 {
            continue;
        }
        sub.clear();
        sub.extend(cols.iter().copied().filter(|&x| x != c));
        let (m, p) = laplace_rec(rows, row + 1, &sub);
        if k % 2 == 0 {
            det += a * m;
        } else {
            det -= a * m;
        }
        perm += a.abs() * p;
    }
    (det, perm)
}

/// Decomposes a finite double into `(mantissa, exponent)` with `x = m * 2^e`.
fn decompose(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1i64 << 52), exp - 1075)
    };
    (sign * m, e)
}

/// Scales every coordinate by a common power of two so they become integers.
fn to_integers(pts: &[&[f64]]) -> Vec<Vec<BigInt>> {
    let parts: Vec<Vec<(i64, i32)>> =
        pts.iter().map(|p| p.iter().map(|&x| decompose(x)).collect()).collect();
    let min_e = parts
        .iter()
        .flatten()
        .filter(|(m, _)| *m != 0)
        .map(|&(_, e)| e)
        .min()
        .unwrap_or(0);
    parts
        .iter()
        .map(|p| {
            p.iter()
                .map(|&(m, e)| BigInt::from(m) << ((e - min_e) as usize))
                .collect()
        })
        .collect()
}

/// Fraction-free Gaussian elimination (Bareiss); exact over the integers.
fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = 1;
    let mut prev = BigInt::from(1);
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

fn bigint_sign(x: &BigInt) -> i8 {
    match x.sign() {
        num_bigint::Sign::Plus => 1,
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
    }
}

/// Exact sign of an integer-valued determinant; exposed for tests that want a
/// reference independent of the floating-point filter.
pub fn exact_orientation_sign(pts: &[&[f64]]) -> i8 {
    let ints = to_integers(pts);
    let rows: Vec<Vec<BigInt>> = ints[1..]
        .iter()
        .map(|p| p.iter().zip(&ints[0]).map(|(a, b)| a - b).collect())
        .collect();
    bigint_sign(&bareiss_det(rows))
}

pub fn exact_lifted_sign(simplex: &[&[f64]], q: &[f64]) -> i8 {
    let n = simplex.len();
    let mut all: Vec<&[f64]> = simplex.to_vec();
    all.push(q);
    let ints = to_integers(&all);
    let qi = &ints[n];
    let rows: Vec<Vec<BigInt>> = ints[..n]
        .iter()
        .map(|p| {
            let mut r: Vec<BigInt> = p.iter().zip(qi).map(|(a, b)| a - b).collect();
            let s = r.iter().map(|x| x * x).sum();
            r.push(s);
            r
        })
        .collect();
    bigint_sign(&bareiss_det(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tri() -> PointCloud {
        PointCloud::from_points(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.5, 0.5],
            vec![10.0, 10.0],
            vec![1.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn in_sphere_examples() {
        let c = tri();
        assert_eq!(in_sphere(&[0, 1, 2], 3, &c).unwrap(), SpherePosition::Inside);
        assert_eq!(in_sphere(&[0, 1, 2], 4, &c).unwrap(), SpherePosition::Outside);
        assert_eq!(in_sphere(&[0, 1, 2], 5, &c).unwrap(), SpherePosition::On);
        // vertex order does not matter
        assert_eq!(in_sphere(&[2, 0, 1], 3, &c).unwrap(), SpherePosition::Inside);
        assert_eq!(in_sphere(&[1, 0, 2], 4, &c).unwrap(), SpherePosition::Outside);
    }

    #[test]
    fn in_sphere_errors() {
        let c = tri();
        assert!(matches!(in_sphere(&[0, 1], 3, &c), Err(Error::Contract(_))));
        assert!(matches!(in_sphere(&[0, 1, 2], 9, &c), Err(Error::Input(_))));
        let col = PointCloud::from_points(&[
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(in_sphere(&[0, 1, 2], 3, &col), Err(Error::Degeneracy { .. })));
    }

    fn random_points(rng: &mut ChaCha8Rng, k: usize, d: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|_| (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect()
    }

    #[test]
    fn fast_paths_match_exact_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=6 {
            for _ in 0..300 {
                let pts = random_points(&mut rng, d + 2, d);
                let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
                let simplex = &refs[..=d];
                assert_eq!(orientation(simplex).sign(), exact_orientation_sign(simplex), "d={d}");
                assert_eq!(generic_orientation_sign(simplex), exact_orientation_sign(simplex));
                let q = refs[d + 1];
                assert_eq!(lifted_sign(simplex, q), exact_lifted_sign(simplex, q), "d={d}");
                assert_eq!(generic_lifted_sign(simplex, q), exact_lifted_sign(simplex, q));
            }
        }
    }

    #[test]
    fn near_degenerate_signs_are_exact() {
        // Points on a line up to one ulp: the filter must defer to exact arithmetic.
        let a = [0.1, 0.1];
        let b = [0.3, 0.3];
        let c = [0.7, 0.7f64.next_up()];
        let pts: [&[f64]; 3] = [&a, &b, &c];
        assert_eq!(orientation(&pts).sign(), exact_orientation_sign(&pts));
        assert_ne!(exact_orientation_sign(&pts), 0);
        let c3 = [0.7, 0.7, 0.0];
        let d3 = [0.2, 0.9, 0.0];
        let a3 = [0.1, 0.1, 0.0];
        let b3 = [0.3, 0.3, 1e-300];
        let p3: [&[f64]; 4] = [&a3, &b3, &c3, &d3];
        assert_eq!(orientation(&p3).sign(), exact_orientation_sign(&p3));
        assert_eq!(generic_orientation_sign(&p3), exact_orientation_sign(&p3));
    }

    #[test]
    fn classification_agrees_with_distance_to_circumcenter() {
        // Circle through three points with a known centre.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let angles: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
            let pts: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
            let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            if orientation(&refs).sign() == 0 {
                continue;
            }
            let r: f64 = 0.5 + rng.random::<f64>();
            if (r - 1.0).abs() < 1e-6 {
                continue;
            }
            let t = rng.random::<f64>() * std::f64::consts::TAU;
            let q = [r * t.cos(), r * t.sin()];
            let expected = if r < 1.0 { SpherePosition::Inside } else { SpherePosition::Outside };
            assert_eq!(in_sphere_points(&refs, &q), Some(expected));
        }
    }

    #[test]
    fn perturbation_never_reports_on() {
        let c = PointCloud::from_points(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let a = in_sphere_perturbed(&[0, 1, 2], 3, &c).unwrap();
        assert_ne!(a, SpherePosition::On);
        // Consistent: of the two triangulations of the square exactly one is Delaunay.
        let b = in_sphere_perturbed(&[1, 2, 3], 0, &c).unwrap();
        let e = in_sphere_perturbed(&[0, 1, 3], 2, &c).unwrap();
        let f = in_sphere_perturbed(&[0, 2, 3], 1, &c).unwrap();
        let diag02 = a == SpherePosition::Outside && f == SpherePosition::Outside;
        let diag13 = b == SpherePosition::Outside && e == SpherePosition::Outside;
        assert!(diag02 ^ diag13);
    }

    proptest! {
        // Reflecting the query through the circumcenter keeps its distance to the centre,
        // so the classification is unchanged.
        // Integer circle points keep everything exact.
        #[test]
        fn reflection_through_center_preserves_position(
            cx in -50i32..50, cy in -50i32..50,
            qx in -40i32..40, qy in -40i32..40,
            pick in 0usize..12,
        ) {
            // radius 5 circle: twelve lattice points
            let lattice = [(5,0),(4,3),(3,4),(0,5),(-3,4),(-4,3),(-5,0),(-4,-3),(-3,-4),(0,-5),(3,-4),(4,-3)];
            let i = pick;
            let j = (pick + 4) % 12;
            let k = (pick + 7) % 12;
            let pts: Vec<Vec<f64>> = [i, j, k]
                .iter()
                .map(|&t| vec![(cx + lattice[t].0) as f64, (cy + lattice[t].1) as f64])
                .collect();
            let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            let q = [(cx + qx) as f64, (cy + qy) as f64];
            let q_ref = [(cx - qx) as f64, (cy - qy) as f64];
            let a = in_sphere_points(&refs, &q).unwrap();
            let b = in_sphere_points(&refs, &q_ref).unwrap();
            let r2 = qx * qx + qy * qy;
            let expected = match r2.cmp(&25) {
                std::cmp::Ordering::Less => SpherePosition::Inside,
                std::cmp::Ordering::Equal => SpherePosition::On,
                std::cmp::Ordering::Greater => SpherePosition::Outside,
            };
            prop_assert_eq!(a, expected);
            prop_assert_eq!(b, expected);
        }

        #[test]
        fn orientation_flips_under_transposition(
            coords in proptest::collection::vec(-1.0f64..1.0, 12),
        ) {
            for d in 2..=3 {
                let pts: Vec<&[f64]> = coords.chunks(d).take(d + 1).collect();
                let mut swapped = pts.clone();
                swapped.swap(0, 1);
                prop_assert_eq!(orientation(&pts).sign(), -orientation(&swapped).sign());
            }
        }
    }
}
