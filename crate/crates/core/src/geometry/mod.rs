//! Point clouds, metric quantities and the Delaunay complex.

mod delaunay;
pub mod predicates;
mod validate;

pub use delaunay::{delaunay_complex, delaunay_complex_brute_force, DelaunayComplex, DelaunayOptions};
pub use validate::{validate_general_position, GeneralPositionReport, Violation};

use crate::error::{Error, Result};

/// Above this many points the general-position checks are sampled instead of exhaustive.
pub const EXHAUSTIVE_VALIDATION_LIMIT: usize = 40;

/// A finite set of distinct points in R^d. Point `i` keeps index `i` for its lifetime.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from a flat row-major coordinate buffer.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("ambient dimension must be at least 1".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Input(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Input(format!("point {} has a non-finite coordinate", pos / dim)));
        }
        let cloud = PointCloud { dim, coords };
        cloud.check_distinct()?;
        Ok(cloud)
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.is_empty() {
            return Err(Error::Input("empty point cloud".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Input(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    /// Parses the whitespace-separated text format: one point per line, `#` starts a
    /// comment line, the dimension is fixed by the first data line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut coords = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut count = 0;
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("cannot parse {tok:?} as a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("non-finite coordinate {tok:?}"),
                    });
                }
                coords.push(v);
                count += 1;
            }
            match dim {
                None => dim = Some(count),
                Some(d) if d != count => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("expected {d} coordinates, found {count}"),
                    })
                }
                _ => {}
            }
        }
        let dim = dim.ok_or_else(|| Error::Input("no points in input".into()))?;
        Self::new(dim, coords)
    }

    /// Serializes in the text format accepted by [`PointCloud::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let line: Vec<String> = self.point(i).iter().map(|c| format!("{c:?}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    fn check_distinct(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                return Err(Error::Input(format!(
                    "duplicate points {} and {}",
                    w[0].min(w[1]),
                    w[0].max(w[1])
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Euclidean distance between two points. Every distance in the crate goes
    /// through this function so identical inputs give bit-identical values.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.point(i), self.point(j));
        let mut s = 0.0;
        for k in 0..self.dim {
            let t = a[k] - b[k];
            s += t * t;
        }
        s.sqrt()
    }

    fn check_indices(&self, vertices: &[usize]) -> Result<()> {
        if vertices.is_empty() {
            return Err(Error::Input("empty vertex list".into()));
        }
        if let Some(&v) = vertices.iter().find(|&&v| v >= self.len()) {
            return Err(Error::Input(format!(
                "vertex index {v} out of range for a cloud of {} points",
                self.len()
            )));
        }
        Ok(())
    }

    /// Diameter of the whole cloud.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    pub fn map_points(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Result<Self> {
        let mut coords = Vec::with_capacity(self.coords.len());
        for i in 0..self.len() {
            let p = f(i, self.point(i));
            debug_assert_eq!(p.len(), self.dim);
            coords.extend(p);
        }
        Self::new(self.dim, coords)
    }
}

/// Maximum pairwise distance among the given points (0 for a single vertex).
pub fn diameter(vertices: &[usize], cloud: &PointCloud) -> Result<f64> {
    cloud.check_indices(vertices)?;
    Ok(diameter_unchecked(vertices, cloud))
}

pub(crate) fn diameter_unchecked<I: Copy + Into<usize>>(vertices: &[I], cloud: &PointCloud) -> f64 {
    let mut best = 0.0f64;
    for (a, &i) in vertices.iter().enumerate() {
        for &j in &vertices[a + 1..] {
            best = best.max(cloud.dist(i.into(), j.into()));
        }
    }
    best
}

/// The Jung constant `sqrt(2d / (d + 1))`: the largest possible ratio between
/// the enclosing-ball diameter and the diameter of a d-dimensional simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JungConstant {
    pub d: usize,
    pub value: f64,
}

impl JungConstant {
    pub fn new(d: usize) -> Self {
        JungConstant {
            d,
            value: jung_constant(d),
        }
    }
}

pub fn jung_constant(d: usize) -> f64 {
    (2.0 * d as f64 / (d as f64 + 1.0)).sqrt()
}

/// Radius of the minimum enclosing ball of at most `dim + 1` points.
///
/// Exhaustive search over support sets: for each affinely independent subset the
/// circumcenter within its affine hull is a candidate; the smallest candidate ball
/// that contains every point wins.
pub fn meb_radius(vertices: &[usize], cloud: &PointCloud) -> Result<f64> {
    cloud.check_indices(vertices)?;
    if vertices.len() > cloud.dim() + 1 {
        return Err(Error::Contract(format!(
            "minimum enclosing ball expects at most {} points, got {}",
            cloud.dim() + 1,
            vertices.len()
        )));
    }
    let pts: Vec<&[f64]> = vertices.iter().map(|&v| cloud.point(v)).collect();
    Ok(meb_of_points(&pts))
}

pub(crate) fn meb_of_points(pts: &[&[f64]]) -> f64 {
    let m = pts.len();
    if m == 1 {
        return 0.0;
    }
    let scale = pts
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |a, &c| a.max(c.abs()))
        .max(1.0);
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << m) {
        let subset: Vec<&[f64]> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| pts[i]).collect();
        let Some(center) = affine_circumcenter(&subset) else {
            continue;
        };
        let r = dist_to(&center, subset[0]);
        if r >= best {
            continue;
        }
        let tol = 1e-12 * (r + scale);
        if pts.iter().all(|p| dist_to(&center, p) <= r + tol) {
            best = r;
        }
    }
    best
}

fn dist_to(c: &[f64], p: &[f64]) -> f64 {
    c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Center of the sphere through the given points lying in their affine hull, or
/// `None` when the points are affinely dependent.
fn affine_circumcenter(pts: &[&[f64]]) -> Option<Vec<f64>> {
    let m = pts.len() - 1;
    let origin = pts[0];
    if m == 0 {
        return Some(origin.to_vec());
    }
    let diffs: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(origin).map(|(a, b)| a - b).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // Gram system: 2 G lambda = |v_i|^2.
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = 2.0 * dot(&diffs[i], &diffs[j]);
        }
        a[i][m] = dot(&diffs[i], &diffs[i]);
    }
    let lambda = solve_dense(a)?;
    let mut c = origin.to_vec();
    for (l, v) in lambda.iter().zip(&diffs) {
        for (ck, vk) in c.iter_mut().zip(v) {
            *ck += l * vk;
        }
    }
    Some(c)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    let norm = a.iter().flat_map(|r| r[..m].iter()).fold(0.0f64, |x, &y| x.max(y.abs()));
    if norm == 0.0 {
        return None;
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * norm {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..=m {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut s = a[row][m];
        for k in row + 1..m {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}
