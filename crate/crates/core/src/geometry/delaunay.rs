//! Delaunay complex construction.
//!
//! Dimensions 2 and 3 use randomized-order incremental insertion (Bowyer-Watson)
//! with a visibility walk for point location and an implicit vertex at infinity
//! closing the convex hull. Dimensions 4 to 6 enumerate every (d+1)-subset and keep
//! those with an empty circumsphere. Dimension 1 is the sorted chain.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::predicates::{in_sphere_perturbed, in_sphere_points, orientation, SpherePosition};
use super::PointCloud;
use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 6;
const MAXV: usize = MAX_DIM + 1;
const INF: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Incremental insertion in every dimension.
    #[default]
    Auto,
    Incremental,
    BruteForce,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DelaunayOptions {
    /// Break exact cospherical ties by symbolic perturbation instead of failing.
    pub perturb: bool,
    pub strategy: Strategy,
}

/// All simplices of DEL(X), per dimension, with facet -> cofacet adjacency.
///
/// Simplices of dimension `k` are stored as lexicographically sorted vertex tuples
/// (flat, stride `k + 1`); the index of a simplex is its position in that order.
#[derive(Debug, Clone)]
pub struct DelaunayComplex {
    dim: usize,
    n_points: usize,
    levels: Vec<Vec<u32>>,
    cofacet_offsets: Vec<Vec<u32>>,
    cofacets: Vec<Vec<u32>>,
}

impl DelaunayComplex {
    /// Builds the closure of the given top-dimensional simplices.
    pub fn from_top_simplices(dim: usize, n_points: usize, mut tops: Vec<Vec<u32>>) -> Self {
        for t in tops.iter_mut() {
            t.sort_unstable();
        }
        let mut levels: Vec<Vec<u32>> = vec![Vec::new(); dim + 1];
        let mut top_flat: Vec<Vec<u32>> = tops;
        top_flat.sort_unstable();
        top_flat.dedup();
        levels[dim] = top_flat.concat();
        for k in (0..dim).rev() {
            let stride = k + 2;
            let above = &levels[k + 1];
            let mut faces: Vec<Vec<u32>> = Vec::with_capacity(above.len());
            for s in above.chunks_exact(stride) {
                for skip in 0..stride {
                    faces.push(
                        s.iter()
                            .enumerate()
                            .filter(|&(i, _)| i != skip)
                            .map(|(_, &v)| v)
                            .collect(),
                    );
                }
            }
            faces.sort_unstable();
            faces.dedup();
            levels[k] = faces.concat();
        }
        if dim == 0 {
            levels[0] = (0..n_points as u32).collect();
        }
        let mut complex = DelaunayComplex {
            dim,
            n_points,
            levels,
            cofacet_offsets: Vec::new(),
            cofacets: Vec::new(),
        };
        complex.build_cofacets();
        complex
    }

    fn build_cofacets(&mut self) {
        let mut offsets = Vec::with_capacity(self.dim);
        let mut lists = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let n = self.count(k);
            let mut counts = vec![0u32; n + 1];
            let mut pairs = Vec::with_capacity(self.count(k + 1) * (k + 2));
            for j in 0..self.count(k + 1) {
                for f in self.facets(k + 1, j) {
                    counts[f + 1] += 1;
                    pairs.push((f as u32, j as u32));
                }
            }
            for i in 0..n {
                counts[i + 1] += counts[i];
            }
            let mut fill = counts.clone();
            let mut list = vec![0u32; pairs.len()];
            for (f, j) in pairs {
                list[fill[f as usize] as usize] = j;
                fill[f as usize] += 1;
            }
            offsets.push(counts);
            lists.push(list);
        }
        self.cofacet_offsets = offsets;
        self.cofacets = lists;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn count(&self, k: usize) -> usize {
        self.levels[k].len() / (k + 1)
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..=self.dim).map(|k| self.count(k)).collect()
    }

    pub fn total(&self) -> usize {
        self.counts().iter().sum()
    }

    pub fn simplex(&self, k: usize, i: usize) -> &[u32] {
        &self.levels[k][i * (k + 1)..(i + 1) * (k + 1)]
    }

    pub fn simplices(&self, k: usize) -> impl Iterator<Item = &[u32]> {
        self.levels[k].chunks_exact(k + 1)
    }

    /// Index of a simplex given its sorted vertex tuple.
    pub fn find(&self, verts: &[u32]) -> Option<usize> {
        let k = verts.len().checked_sub(1)?;
        if k > self.dim {
            return None;
        }
        let n = self.count(k);
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.simplex(k, mid).cmp(verts) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Facet indices of simplex `(k, i)`; facet `j` omits vertex `j`.
    pub fn facets(&self, k: usize, i: usize) -> Vec<usize> {
        let s = self.simplex(k, i);
        let mut buf = Vec::with_capacity(k);
        (0..=k)
            .map(|skip| {
                buf.clear();
                buf.extend(s.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &v)| v));
                self.find(&buf).expect("closed complex")
            })
            .collect()
    }

    pub fn cofacets(&self, k: usize, i: usize) -> &[u32] {
        if k >= self.dim {
            return &[];
        }
        let o = &self.cofacet_offsets[k];
        &self.cofacets[k][o[i] as usize..o[i + 1] as usize]
    }

    /// Alternating sum of simplex counts.
    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim)
            .map(|k| if k % 2 == 0 { self.count(k) as i64 } else { -(self.count(k) as i64) })
            .sum()
    }
}

/// Delaunay complex of a point cloud with default options.
pub fn delaunay_complex(cloud: &PointCloud) -> Result<DelaunayComplex> {
    build(cloud, DelaunayOptions::default())
}

/// Exhaustive empty-circumsphere enumeration, usable in every supported dimension.
pub fn delaunay_complex_brute_force(cloud: &PointCloud, perturb: bool) -> Result<DelaunayComplex> {
    build(
        cloud,
        DelaunayOptions {
            perturb,
            strategy: Strategy::BruteForce,
        },
    )
}

impl DelaunayComplex {
    pub fn build(cloud: &PointCloud, options: DelaunayOptions) -> Result<Self> {
        build(cloud, options)
    }
}

fn build(cloud: &PointCloud, options: DelaunayOptions) -> Result<DelaunayComplex> {
    let d = cloud.dim();
    let n = cloud.len();
    if d > MAX_DIM {
        return Err(Error::Unsupported(format!(
            "Delaunay construction supports dimension up to {MAX_DIM}, got {d}"
        )));
    }
    if n < d + 1 {
        return Err(Error::Input(format!(
            "need at least {} points for a {d}-dimensional Delaunay complex, got {n}",
            d + 1
        )));
    }
    if n > u32::MAX as usize - 1 {
        return Err(Error::Resource("too many points".into()));
    }
    if d == 1 {
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| cloud.point(a as usize)[0].total_cmp(&cloud.point(b as usize)[0]));
        let tops = order.windows(2).map(|w| w.to_vec()).collect();
        return Ok(DelaunayComplex::from_top_simplices(1, n, tops));
    }
    let tops = match options.strategy {
        Strategy::BruteForce => brute_force(cloud, options.perturb)?,
        Strategy::Auto | Strategy::Incremental => Incremental::new(cloud, options.perturb).run()?,
    };
    Ok(DelaunayComplex::from_top_simplices(d, n, tops))
}

fn conflict_position(
    simplex: &[usize],
    query: usize,
    cloud: &PointCloud,
    perturb: bool,
) -> Result<SpherePosition> {
    let pts: Vec<&[f64]> = simplex.iter().map(|&v| cloud.point(v)).collect();
    let pos = in_sphere_points(&pts, cloud.point(query))
        .ok_or_else(|| Error::degeneracy("affinely dependent simplex", simplex.to_vec()))?;
    if pos != SpherePosition::On {
        return Ok(pos);
    }
    let mut offending = simplex.to_vec();
    offending.push(query);
    if !perturb {
        return Err(Error::degeneracy(
            format!("{} cospherical points", simplex.len() + 1),
            offending,
        ));
    }
    in_sphere_perturbed(simplex, query, cloud)
        .ok_or_else(|| Error::degeneracy("cohyperplanar points under perturbation", offending))
}

fn brute_force(cloud: &PointCloud, perturb: bool) -> Result<Vec<Vec<u32>>> {
    let d = cloud.dim();
    let n = cloud.len();
    let mut tops = Vec::new();
    let mut comb: Vec<usize> = (0..=d).collect();
    let mut any_full = false;
    loop {
        let pts: Vec<&[f64]> = comb.iter().map(|&v| cloud.point(v)).collect();
        if orientation(&pts).sign() != 0 {
            any_full = true;
            let mut empty = true;
            for q in 0..n {
                if comb.contains(&q) {
                    continue;
                }
                if conflict_position(&comb, q, cloud, perturb)? == SpherePosition::Inside {
                    empty = false;
                    break;
                }
            }
            if empty {
                tops.push(comb.iter().map(|&v| v as u32).collect());
            }
        }
        // next combination
        let mut i = d + 1;
        loop {
            if i == 0 {
                if !any_full {
                    return Err(Error::Input(
                        "points lie in a lower-dimensional affine subspace".into(),
                    ));
                }
                return Ok(tops);
            }
            i -= 1;
            if comb[i] < n - (d + 1 - i) {
                comb[i] += 1;
                for j in i + 1..=d {
                    comb[j] = comb[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Clone, Copy)]
struct Cell {
    v: [u32; MAXV],
    nbr: [u32; MAXV],
    alive: bool,
}

impl Cell {
    fn is_infinite(&self, d: usize) -> bool {
        self.v[..=d].contains(&INF)
    }
}

struct Incremental<'a> {
    cloud: &'a PointCloud,
    d: usize,
    perturb: bool,
    cells: Vec<Cell>,
    free: Vec<u32>,
    last: u32,
    // scratch
    mark: Vec<u32>,
    stamp: u32,
}

impl<'a> Incremental<'a> {
    fn new(cloud: &'a PointCloud, perturb: bool) -> Self {
        Incremental {
            cloud,
            d: cloud.dim(),
            perturb,
            cells: Vec::new(),
            free: Vec::new(),
            last: 0,
            mark: Vec::new(),
            stamp: 0,
        }
    }

    fn run(mut self) -> Result<Vec<Vec<u32>>> {
        let d = self.d;
        let order = insertion_order(self.cloud);
        let seed = initial_simplex(self.cloud, &order)?;
        self.init(&seed);
        for &p in &order {
            if seed.contains(&p) {
                continue;
            }
            self.insert(p)?;
        }
        Ok(self
            .cells
            .iter()
            .filter(|c| c.alive && !c.is_infinite(d))
            .map(|c| c.v[..=d].to_vec())
            .collect())
    }

    fn init(&mut self, seed: &[u32]) {
        let d = self.d;
        let mut c0 = Cell {
            v: [NONE; MAXV],
            nbr: [NONE; MAXV],
            alive: true,
        };
        c0.v[..=d].copy_from_slice(seed);
        for i in 0..=d {
            c0.nbr[i] = (i + 1) as u32;
        }
        self.cells.push(c0);
        for i in 0..=d {
            let mut c = c0;
            c.v[i] = INF;
            for j in 0..=d {
                c.nbr[j] = if j == i { 0 } else { (j + 1) as u32 };
            }
            self.cells.push(c);
        }
        self.last = 0;
    }

    fn orient_cell(&self, v: &[u32]) -> i8 {
        let pts: Vec<&[f64]> = v.iter().map(|&x| self.cloud.point(x as usize)).collect();
        orientation(&pts).sign()
    }

    /// Visibility walk from the last finite cell. Returns a cell in conflict with `p`.
    fn locate(&mut self, p: u32) -> Result<u32> {
        let d = self.d;
        let mut cur = self.last;
        if !self.cells[cur as usize].alive || self.cells[cur as usize].is_infinite(d) {
            cur = self
                .cells
                .iter()
                .position(|c| c.alive && !c.is_infinite(d))
                .expect("triangulation has a finite cell") as u32;
        }
        let mut rng_state = p.wrapping_mul(2654435761) | 1;
        let limit = 16 * self.cells.len() + 64;
        for _ in 0..limit {
            let cell = self.cells[cur as usize];
            let o = self.orient_cell(&cell.v[..=d]);
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 17;
            rng_state ^= rng_state << 5;
            let start = rng_state as usize % (d + 1);
            let mut moved = false;
            for t in 0..=d {
                let i = (start + t) % (d + 1);
                let mut probe = cell.v;
                probe[i] = p;
                if self.orient_cell(&probe[..=d]) == -o {
                    let next = cell.nbr[i];
                    if self.cells[next as usize].is_infinite(d) {
                        return Ok(next);
                    }
                    cur = next;
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Ok(cur);
            }
        }
        // Walk failed to converge (only possible on degenerate input); scan instead.
        for (i, c) in self.cells.iter().enumerate() {
            if c.alive && self.in_conflict(c, p)? {
                return Ok(i as u32);
            }
        }
        Err(Error::Internal(format!("could not locate point {p}")))
    }

    fn in_conflict(&self, cell: &Cell, p: u32) -> Result<bool> {
        let d = self.d;
        if let Some(inf_pos) = cell.v[..=d].iter().position(|&x| x == INF) {
            // Beyond the hull facet: opposite side from the finite neighbour's apex.
            let nb = &self.cells[cell.nbr[inf_pos] as usize];
            let apex = nb.v[..=d]
                .iter()
                .copied()
                .find(|x| !cell.v[..=d].contains(x))
                .expect("neighbour apex");
            let mut probe = cell.v;
            probe[inf_pos] = p;
            let sp = self.orient_cell(&probe[..=d]);
            probe[inf_pos] = apex;
            let sa = self.orient_cell(&probe[..=d]);
            if sp == 0 {
                let mut pts: Vec<usize> =
                    cell.v[..=d].iter().filter(|&&x| x != INF).map(|&x| x as usize).collect();
                pts.push(p as usize);
                return Err(Error::degeneracy(format!("{} cohyperplanar hull points", d + 1), pts));
            }
            return Ok(sp == -sa);
        }
        let simplex: Vec<usize> = cell.v[..=d].iter().map(|&x| x as usize).collect();
        Ok(conflict_position(&simplex, p as usize, self.cloud, self.perturb)? == SpherePosition::Inside)
    }

    fn alloc(&mut self, c: Cell) -> u32 {
        if let Some(i) = self.free.pop() {
            self.cells[i as usize] = c;
            i
        } else {
            self.cells.push(c);
            (self.cells.len() - 1) as u32
        }
    }

    fn insert(&mut self, p: u32) -> Result<()> {
        let d = self.d;
        let start = self.locate(p)?;
        if !self.in_conflict(&self.cells[start as usize], p)? {
            return Err(Error::Internal(format!("located cell not in conflict with point {p}")));
        }
        self.stamp += 1;
        if self.mark.len() < self.cells.len() {
            self.mark.resize(self.cells.len(), 0);
        }
        let stamp = self.stamp;
        // Cavity search; mark = stamp for conflict, stamp | high bit for tested-not-conflict.
        let tested_no = stamp | 0x8000_0000;
        let mut cavity = vec![start];
        self.mark[start as usize] = stamp;
        let mut head = 0;
        while head < cavity.len() {
            let c = cavity[head];
            head += 1;
            for i in 0..=d {
                let nb = self.cells[c as usize].nbr[i];
                let m = self.mark[nb as usize];
                if m == stamp || m == tested_no {
                    continue;
                }
                if self.in_conflict(&self.cells[nb as usize], p)? {
                    self.mark[nb as usize] = stamp;
                    cavity.push(nb);
                } else {
                    self.mark[nb as usize] = tested_no;
                }
            }
        }
        // New cells on each boundary facet of the cavity.
        let mut ridge_map: HashMap<[u32; MAXV], (u32, usize)> = HashMap::new();
        let mut created = Vec::new();
        for &c in &cavity {
            let cell = self.cells[c as usize];
            for i in 0..=d {
                let nb = cell.nbr[i];
                if self.mark[nb as usize] == stamp {
                    continue;
                }
                let mut nc = Cell {
                    v: cell.v,
                    nbr: [NONE; MAXV],
                    alive: true,
                };
                nc.v[i] = p;
                nc.nbr[i] = nb;
                let id = self.alloc(nc);
                if self.mark.len() < self.cells.len() {
                    self.mark.resize(self.cells.len(), 0);
                }
                self.mark[id as usize] = 0;
                let nbc = &mut self.cells[nb as usize];
                let slot = (0..=d).find(|&j| nbc.nbr[j] == c).expect("back pointer");
                nbc.nbr[slot] = id;
                created.push(id);
                // ridges: facets of the new cell through p
                for j in 0..=d {
                    if j == i {
                        continue;
                    }
                    let mut key = [NONE; MAXV];
                    let mut t = 0;
                    for (k, &v) in nc.v[..=d].iter().enumerate() {
                        if k != j && k != i {
                            key[t] = v;
                            t += 1;
                        }
                    }
                    key[..t].sort_unstable();
                    if let Some((other, oj)) = ridge_map.remove(&key) {
                        self.cells[id as usize].nbr[j] = other;
                        self.cells[other as usize].nbr[oj] = id;
                    } else {
                        ridge_map.insert(key, (id, j));
                    }
                }
            }
        }
        if !ridge_map.is_empty() {
            return Err(Error::Internal(format!(
                "cavity of point {p} is not a topological ball"
            )));
        }
        for &c in &cavity {
            self.cells[c as usize].alive = false;
            self.free.push(c);
        }
        if let Some(&f) = created.iter().find(|&&c| !self.cells[c as usize].is_infinite(d)) {
            self.last = f;
        }
        Ok(())
    }
}

/// Spatially coherent insertion order: shuffled rounds of geometrically growing
/// size, each sorted along a Morton curve.
fn insertion_order(cloud: &PointCloud) -> Vec<u32> {
    let n = cloud.len();
    let d = cloud.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_de1a);
    let mut idx: Vec<u32> = (0..n as u32).collect();
    idx.shuffle(&mut rng);
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..n {
        for (k, &c) in cloud.point(i).iter().enumerate() {
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    let bits = (60 / d).min(20) as u32;
    let scale = ((1u64 << bits) - 1) as f64;
    let morton = |i: u32| -> u128 {
        let p = cloud.point(i as usize);
        let q: Vec<u64> = (0..d)
            .map(|k| {
                let w = hi[k] - lo[k];
                if w > 0.0 {
                    (((p[k] - lo[k]) / w) * scale) as u64
                } else {
                    0
                }
            })
            .collect();
        let mut code = 0u128;
        for b in (0..bits).rev() {
            for qk in &q {
                code = (code << 1) | ((qk >> b) & 1) as u128;
            }
        }
        code
    };
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    let mut size = 64.min(n);
    while start < n {
        let end = (start + size).min(n);
        let mut round: Vec<u32> = idx[start..end].to_vec();
        round.sort_by_key(|&i| morton(i));
        out.extend(round);
        start = end;
        size *= 4;
    }
    out
}

/// Finds d+1 affinely independent points, preferring early ones in `order`.
fn initial_simplex(cloud: &PointCloud, order: &[u32]) -> Result<Vec<u32>> {
    let d = cloud.dim();
    let mut chosen: Vec<u32> = vec![order[0]];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let origin = cloud.point(order[0] as usize).to_vec();
    let scale = cloud.coords().iter().fold(0.0f64, |a, &c| a.max(c.abs())).max(1e-300);
    for &p in &order[1..] {
        if chosen.len() == d + 1 {
            break;
        }
        let mut v: Vec<f64> = cloud.point(p as usize).iter().zip(&origin).map(|(a, b)| a - b).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 * scale {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
            chosen.push(p);
        }
    }
    if chosen.len() == d + 1 {
        let pts: Vec<&[f64]> = chosen.iter().map(|&v| cloud.point(v as usize)).collect();
        if orientation(&pts).sign() != 0 {
            return Ok(chosen);
        }
    }
    // Nearly dependent input: fall back to an exact search.
    let n = order.len();
    for a in 0..n {
        let mut set = vec![order[a]];
        for &p in order.iter().skip(a + 1) {
            set.push(p);
            if !affinely_independent_exact(cloud, &set) {
                set.pop();
            }
            if set.len() == d + 1 {
                return Ok(set);
            }
        }
    }
    Err(Error::Input(
        "points lie in a lower-dimensional affine subspace".into(),
    ))
}

/// Exact affine independence of up to d+1 points: some choice of coordinate axes
/// gives a nonzero orientation of the projection.
fn affinely_independent_exact(cloud: &PointCloud, set: &[u32]) -> bool {
    let d = cloud.dim();
    let k = set.len() - 1;
    if k == 0 {
        return true;
    }
    let mut axes: Vec<usize> = (0..k).collect();
    loop {
        let proj: Vec<Vec<f64>> = set
            .iter()
            .map(|&v| axes.iter().map(|&a| cloud.point(v as usize)[a]).collect())
            .collect();
        let refs: Vec<&[f64]> = proj.iter().map(|p| p.as_slice()).collect();
        if super::predicates::exact_orientation_sign(&refs) != 0 {
            return true;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if axes[i] < d - (k - i) {
                axes[i] += 1;
                for j in i + 1..k {
                    axes[j] = axes[j - 1] + 1;
                }
                break;
            }
        }
    }
}
