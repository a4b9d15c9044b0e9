//! Bottleneck distance, log-scaled diagrams and the interleaving bounds between
//! Delaunay–Rips and Rips diagrams.

use std::collections::VecDeque;

use crate::complex_order::build_rips;
use crate::error::{Error, Result};
use crate::geometry::{jung_constant, PointCloud};
use crate::oracle;
use crate::persistence::{compute_diagrams, PersistenceDiagram};

/// Off-diagonal points of one homology dimension, plus essential births.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagramPointSet {
    finite: Vec<(f64, f64)>,
    essential: Vec<f64>,
}

impl DiagramPointSet {
    /// Points on the diagonal are dropped; points below it are rejected.
    pub fn new(finite: Vec<(f64, f64)>, essential: Vec<f64>) -> Result<Self> {
        if let Some(&(b, d)) = finite.iter().find(|&&(b, d)| !(d >= b) || !b.is_finite() || !d.is_finite()) {
            return Err(Error::Input(format!("diagram point ({b}, {d}) is not a finite point above the diagonal")));
        }
        if essential.iter().any(|b| !b.is_finite()) {
            return Err(Error::Input("essential birth must be finite".into()));
        }
        let mut finite: Vec<(f64, f64)> = finite.into_iter().filter(|&(b, d)| d > b).collect();
        finite.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut essential = essential;
        essential.sort_by(f64::total_cmp);
        Ok(DiagramPointSet { finite, essential })
    }

    pub fn from_diagram(diagram: &PersistenceDiagram, k: usize) -> Self {
        let finite = diagram.finite(k).into_iter().filter(|&(b, d)| d > b).collect();
        DiagramPointSet::new(finite, diagram.essential(k)).expect("diagram pairs satisfy birth <= death")
    }

    pub fn finite(&self) -> &[(f64, f64)] {
        &self.finite
    }

    pub fn essential(&self) -> &[f64] {
        &self.essential
    }

    pub fn len(&self) -> usize {
        self.finite.len() + self.essential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn half_persistence(a: (f64, f64)) -> f64 {
    (a.1 - a.0) / 2.0
}

/// Hopcroft–Karp on a bipartite graph with equal sides.
struct Matcher {
    adj: Vec<Vec<u32>>,
    n_right: usize,
}

impl Matcher {
    fn has_perfect_matching(&self) -> bool {
        const FREE: u32 = u32::MAX;
        let n = self.adj.len();
        let mut match_l = vec![FREE; n];
        let mut match_r = vec![FREE; self.n_right];
        let mut dist = vec![u32::MAX; n];
        let mut matched = 0;
        loop {
            // layered BFS from free left vertices
            let mut queue = VecDeque::new();
            for u in 0..n {
                if match_l[u] == FREE {
                    dist[u] = 0;
                    queue.push_back(u);
                } else {
                    dist[u] = u32::MAX;
                }
            }
            let mut found = false;
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    let w = match_r[v as usize];
                    if w == FREE {
                        found = true;
                    } else if dist[w as usize] == u32::MAX {
                        dist[w as usize] = dist[u] + 1;
                        queue.push_back(w as usize);
                    }
                }
            }
            if !found {
                break;
            }
            let mut it = vec![0usize; n];
            for u in 0..n {
                if match_l[u] == FREE && self.augment(u, &mut match_l, &mut match_r, &mut dist, &mut it) {
                    matched += 1;
                }
            }
        }
        matched == n
    }

    fn augment(&self, u: usize, ml: &mut [u32], mr: &mut [u32], dist: &mut [u32], it: &mut [usize]) -> bool {
        // iterative DFS along the layered graph
        let mut stack = vec![u];
        let mut path: Vec<(usize, u32)> = Vec::new();
        while let Some(&x) = stack.last() {
            if it[x] == self.adj[x].len() {
                dist[x] = u32::MAX;
                stack.pop();
                path.pop();
                continue;
            }
            let v = self.adj[x][it[x]];
            it[x] += 1;
            let w = mr[v as usize];
            if w == u32::MAX {
                path.push((x, v));
                for &(l, r) in &path {
                    ml[l] = r;
                    mr[r as usize] = l as u32;
                }
                return true;
            }
            if dist[w as usize] == dist[x].wrapping_add(1) {
                path.push((x, v));
                stack.push(w as usize);
            }
        }
        false
    }
}

fn finite_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (m, n) = (a.len(), b.len());
    if m + n == 0 {
        return 0.0;
    }
    // left: a_0..a_m, diag(b_0)..diag(b_n); right: b_0..b_n, diag(a_0)..diag(a_m)
    let mut edges: Vec<(f64, u32, u32)> = Vec::with_capacity(m * n * 2 + m + n);
    for (i, &p) in a.iter().enumerate() {
        for (j, &q) in b.iter().enumerate() {
            edges.push((linf(p, q), i as u32, j as u32));
        }
        edges.push((half_persistence(p), i as u32, (n + i) as u32));
    }
    for (j, &q) in b.iter().enumerate() {
        edges.push((half_persistence(q), (m + j) as u32, j as u32));
        for i in 0..m {
            edges.push((0.0, (m + j) as u32, (n + i) as u32));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut candidates: Vec<f64> = edges.iter().map(|e| e.0).collect();
    candidates.dedup();
    let feasible = |t: f64| -> bool {
        let mut adj = vec![Vec::new(); m + n];
        for &(_, l, r) in edges.iter().take_while(|e| e.0 <= t) {
            adj[l as usize].push(r);
        }
        Matcher { adj, n_right: m + n }.has_perfect_matching()
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Exact bottleneck distance. Essential classes are matched among themselves
/// in sorted order; differing essential counts give +inf.
pub fn bottleneck(a: &DiagramPointSet, b: &DiagramPointSet) -> f64 {
    if a.essential.len() != b.essential.len() {
        return f64::INFINITY;
    }
    let ess = a
        .essential
        .iter()
        .zip(&b.essential)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    finite_bottleneck(&a.finite, &b.finite).max(ess)
}

/// Coordinate-wise natural logarithm.
pub fn log_diagram(d: &DiagramPointSet) -> Result<DiagramPointSet> {
    let bad = d
        .finite
        .iter()
        .map(|p| p.0)
        .chain(d.essential.iter().copied())
        .find(|&b| !(b > 0.0));
    if let Some(b) = bad {
        return Err(Error::Domain(format!("cannot take the log of birth {b}")));
    }
    DiagramPointSet::new(
        d.finite.iter().map(|&(b, x)| (b.ln(), x.ln())).collect(),
        d.essential.iter().map(|b| b.ln()).collect(),
    )
}

/// Measured distance against its bound; `slack = bound - measured`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
}

impl BoundCheck {
    fn new(measured: f64, bound: f64) -> Self {
        BoundCheck {
            measured,
            bound,
            slack: bound - measured,
        }
    }

    pub fn holds(&self, tolerance: f64) -> bool {
        self.slack >= -tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub k: usize,
    /// Jung constant of dimension k + 1.
    pub theta: f64,
    /// Log-scale gap between Delaunay–Rips and Rips; `None` for k = 0.
    pub log_scale: Option<BoundCheck>,
    pub raw: BoundCheck,
    /// Present when a perturbed cloud was given.
    pub stability: Option<BoundCheck>,
}

/// PH_k of the full Rips filtration of `cloud`, zero-persistence pairs dropped.
pub fn rips_diagram(cloud: &PointCloud, k: usize) -> Result<PersistenceDiagram> {
    let fc = build_rips(cloud, k + 1)?;
    Ok(oracle::reduce(&fc)?.without_zero_persistence())
}

/// Compares Delaunay–Rips against Rips in dimension k, and optionally against the
/// Delaunay–Rips diagram of `other`, a copy of `cloud` moved by at most `epsilon`
/// per point (Euclidean).
pub fn check_bounds(cloud: &PointCloud, other: Option<(&PointCloud, f64)>, k: usize) -> Result<BoundsReport> {
    if k >= cloud.dim() {
        return Err(Error::Input(format!("homology dimension {k} must be below the ambient dimension {}", cloud.dim())));
    }
    let theta = jung_constant(k + 1);
    let dr = DiagramPointSet::from_diagram(&compute_diagrams(cloud)?, k);
    let rips = DiagramPointSet::from_diagram(&rips_diagram(cloud, k)?, k);
    let log_scale = if k == 0 {
        None
    } else {
        let gap = bottleneck(&log_diagram(&dr)?, &log_diagram(&rips)?);
        Some(BoundCheck::new(gap, theta.ln()))
    };
    let raw = BoundCheck::new(bottleneck(&dr, &rips), (theta - 1.0) * cloud.diameter());
    let stability = match other {
        None => None,
        Some((y, eps)) => {
            if y.len() != cloud.len() || y.dim() != cloud.dim() {
                return Err(Error::Input("perturbed cloud must have the same shape".into()));
            }
            if !(eps >= 0.0) {
                return Err(Error::Domain(format!("epsilon must be >= 0, got {eps}")));
            }
            let dy = DiagramPointSet::from_diagram(&compute_diagrams(y)?, k);
            let bound = (theta - 1.0) * cloud.diameter().max(y.diameter()) + 2.0 * eps;
            Some(BoundCheck::new(bottleneck(&dr, &dy), bound))
        }
    };
    Ok(BoundsReport {
        k,
        theta,
        log_scale,
        raw,
        stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(points: &[(f64, f64)]) -> DiagramPointSet {
        DiagramPointSet::new(points.to_vec(), vec![]).unwrap()
    }

    /// Minimum over all partial matchings, by brute force.
    fn brute_force(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
        fn go(a: &[(f64, f64)], b: &[(f64, f64)], used: &mut Vec<bool>, i: usize) -> f64 {
            if i == a.len() {
                return b
                    .iter()
                    .zip(used.iter())
                    .filter(|(_, &u)| !u)
                    .map(|(&q, _)| half_persistence(q))
                    .fold(0.0, f64::max);
            }
            let mut best = half_persistence(a[i]).max(go(a, b, used, i + 1));
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(linf(a[i], b[j]).max(go(a, b, used, i + 1)));
                    used[j] = false;
                }
            }
            best
        }
        go(a, b, &mut vec![false; b.len()], 0)
    }

    #[test]
    fn examples() {
        let a = set(&[(1.0, 2.0), (0.5, 3.0)]);
        assert_eq!(bottleneck(&a, &a), 0.0);
        assert_eq!(bottleneck(&set(&[(0.0, 4.0)]), &set(&[])), 2.0);
        assert_eq!(bottleneck(&set(&[(1.0, 2.0)]), &set(&[(1.5, 3.0)])), 0.75);
        assert_eq!(bottleneck(&set(&[]), &set(&[])), 0.0);
    }

    #[test]
    fn essential_classes() {
        let a = DiagramPointSet::new(vec![], vec![0.0]).unwrap();
        let b = DiagramPointSet::new(vec![(0.0, 1.0)], vec![0.25]).unwrap();
        assert_eq!(bottleneck(&a, &b), 0.5);
        assert_eq!(bottleneck(&a, &DiagramPointSet::default()), f64::INFINITY);
    }

    #[test]
    fn rejects_points_below_diagonal() {
        assert!(matches!(DiagramPointSet::new(vec![(2.0, 1.0)], vec![]), Err(Error::Input(_))));
        assert_eq!(DiagramPointSet::new(vec![(1.0, 1.0)], vec![]).unwrap().len(), 0);
    }

    #[test]
    fn log_examples() {
        let l = log_diagram(&set(&[(1.0, 2.0)])).unwrap();
        assert_eq!(l.finite(), &[(0.0, 2f64.ln())]);
        let e = std::f64::consts::E;
        let l = log_diagram(&set(&[(e, e * e)])).unwrap();
        assert!((l.finite()[0].0 - 1.0).abs() < 1e-15 && (l.finite()[0].1 - 2.0).abs() < 1e-15);
        assert!(log_diagram(&set(&[])).unwrap().is_empty());
        assert!(matches!(log_diagram(&set(&[(0.0, 1.0)])), Err(Error::Domain(_))));
    }

    fn points() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0..10.0f64, 0.01..5.0f64).prop_map(|(b, p)| (b, b + p)), 0..6)
    }

    proptest! {
        #[test]
        fn matches_brute_force(a in points(), b in points()) {
            let ours = bottleneck(&set(&a), &set(&b));
            let reference = brute_force(set(&a).finite(), set(&b).finite());
            prop_assert!((ours - reference).abs() < 1e-12, "{} vs {}", ours, reference);
        }

        #[test]
        fn pseudometric(a in points(), b in points(), c in points()) {
            let (a, b, c) = (set(&a), set(&b), set(&c));
            prop_assert_eq!(bottleneck(&a, &b), bottleneck(&b, &a));
            prop_assert!(bottleneck(&a, &c) <= bottleneck(&a, &b) + bottleneck(&b, &c) + 1e-9);
        }

        #[test]
        fn adding_a_point_costs_at_most_half_its_persistence(a in points(), x in 0.0..10.0f64, s in 0.01..3.0f64) {
            let base = set(&a);
            let mut more = a.clone();
            more.push((x, x + 2.0 * s));
            let dist = bottleneck(&base, &set(&more));
            prop_assert!(dist <= s + 1e-12);
            if a.is_empty() {
                prop_assert!((dist - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bounds_hold_on_random_planar_cloud() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..25).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let c = PointCloud::from_points(&pts).unwrap();
        let moved = c.map_points(|_, p| p.iter().map(|x| x + 1e-3).collect()).unwrap();
        for k in 0..2 {
            let r = check_bounds(&c, Some((&moved, 2e-3)), k).unwrap();
            assert!(r.raw.holds(1e-9));
            assert!(r.stability.unwrap().holds(1e-9));
            if k == 0 {
                assert_eq!(r.raw.measured, 0.0);
            } else {
                assert!(r.log_scale.unwrap().holds(1e-9));
            }
        }
    }
}
