//! Instance generators and the experiment drivers: log-bottleneck histograms,
//! stability sweeps and per-dimension size tables.
//!
//! All randomness comes from ChaCha8 seeded per trial, so runs reproduce across
//! platforms. Trial `i` of a run seeded with `s` uses seed `s + i`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::complex_order::build_delaunay_rips;
use crate::error::{Error, Result};
use crate::geometry::{jung_constant, PointCloud};
use crate::metrics::{bottleneck, log_diagram, rips_diagram, DiagramPointSet};
use crate::persistence::{compute_diagrams, run_pipeline, PipelineOptions};

pub const DEFAULT_SIGMA: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Quantiles reported in every summary.
pub const QUANTILES: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    /// Uniform in [0,1]^dim.
    UniformCube,
    /// Unit circle in the xy-plane of R³ with Gaussian noise.
    NoisyCircle,
    /// Unit 2-sphere in R³ with Gaussian noise.
    NoisySphere,
    /// Perturbed regular hexagon whose Delaunay triangulation has a diametrical edge.
    HexagonWorst,
    /// Perturbed regular dodecahedron with a diametrical Delaunay edge.
    DodecahedronWorst,
    /// Antipodal pair, regular simplex and dense sample on a slightly larger
    /// sphere S^dim, in R^(dim+1).
    AntipodalSphereWorst,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 6] = [
        InstanceKind::UniformCube,
        InstanceKind::NoisyCircle,
        InstanceKind::NoisySphere,
        InstanceKind::HexagonWorst,
        InstanceKind::DodecahedronWorst,
        InstanceKind::AntipodalSphereWorst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::UniformCube => "uniform-cube",
            InstanceKind::NoisyCircle => "noisy-circle",
            InstanceKind::NoisySphere => "noisy-sphere",
            InstanceKind::HexagonWorst => "hexagon-worst",
            InstanceKind::DodecahedronWorst => "dodecahedron-worst",
            InstanceKind::AntipodalSphereWorst => "antipodal-sphere-worst",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InstanceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown instance kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    /// Number of points; ignored by the hexagon and dodecahedron kinds, and the
    /// size of the dense sphere sample for the antipodal kind.
    pub n: usize,
    /// Ambient dimension for uniform-cube, sphere dimension for the antipodal kind.
    pub dim: usize,
    pub sigma: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(kind: InstanceKind, n: usize, seed: u64) -> Self {
        InstanceSpec {
            kind,
            n,
            dim: if kind == InstanceKind::AntipodalSphereWorst { 1 } else { 3 },
            sigma: DEFAULT_SIGMA,
            epsilon: DEFAULT_EPSILON,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        InstanceSpec { seed, ..*self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) || !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma and epsilon must be finite and >= 0, got {} and {}",
                self.sigma, self.epsilon
            )));
        }
        if self.epsilon >= 0.5 {
            return Err(Error::Domain(format!("epsilon {} is too large for a perturbation", self.epsilon)));
        }
        match self.kind {
            InstanceKind::UniformCube if !(1..=6).contains(&self.dim) => Err(Error::Unsupported(format!(
                "uniform-cube in dimension {}",
                self.dim
            ))),
            InstanceKind::AntipodalSphereWorst if !(1..=5).contains(&self.dim) => Err(Error::Unsupported(format!(
                "antipodal-sphere-worst on S^{}",
                self.dim
            ))),
            _ => Ok(()),
        }
    }
}

fn unit_gaussian_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn scaled(v: &[f64], r: f64) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x * r / norm).collect()
}

/// Moves a point on the sphere of radius `r` to a nearby point of radius in
/// `[r (1 - eps/10), r]`, with a tangential jitter of order eps/10.
fn jitter_on_sphere(rng: &mut ChaCha8Rng, p: &[f64], r: f64, eps: f64) -> Vec<f64> {
    let moved: Vec<f64> = p.iter().map(|x| x + rng.random_range(-1.0..=1.0) * eps / 10.0).collect();
    scaled(&moved, r * (1.0 - rng.random::<f64>() * eps / 10.0))
}

/// Vertices of a regular simplex with `dim + 1` vertices on the unit sphere of R^dim.
fn regular_simplex(dim: usize) -> Vec<Vec<f64>> {
    // centered standard basis of R^(dim+1), expressed in an orthonormal basis of
    // the hyperplane orthogonal to (1, ..., 1)
    let m = dim + 1;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        v[i + 1] = -1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|x| x / norm).collect());
    }
    (0..m)
        .map(|i| {
            let centered: Vec<f64> = (0..m).map(|j| f64::from(u8::from(i == j)) - 1.0 / m as f64).collect();
            let coords: Vec<f64> = basis.iter().map(|b| b.iter().zip(&centered).map(|(x, y)| x * y).sum()).collect();
            scaled(&coords, 1.0)
        })
        .collect()
}

fn dodecahedron() -> Vec<Vec<f64>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::with_capacity(20);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                v.push(vec![sx, sy, sz]);
            }
        }
    }
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            v.push(vec![0.0, s1 / phi, s2 * phi]);
            v.push(vec![s1 / phi, s2 * phi, 0.0]);
            v.push(vec![s1 * phi, 0.0, s2 / phi]);
        }
    }
    v.into_iter().map(|p| scaled(&p, 1.0)).collect()
}

/// Deterministic point cloud for the spec.
pub fn generate(spec: &InstanceSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let eps = spec.epsilon;
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let points: Vec<Vec<f64>> = match spec.kind {
        InstanceKind::UniformCube => (0..spec.n)
            .map(|_| (0..spec.dim).map(|_| rng.random::<f64>()).collect())
            .collect(),
        InstanceKind::NoisyCircle => (0..spec.n)
            .map(|_| {
                let t = rng.random_range(0.0..2.0 * PI);
                [t.cos(), t.sin(), 0.0].iter().map(|x| x + noise.sample(&mut rng)).collect()
            })
            .collect(),
        InstanceKind::NoisySphere => (0..spec.n)
            .map(|_| {
                unit_gaussian_direction(&mut rng, 3)
                    .into_iter()
                    .map(|x| x + noise.sample(&mut rng))
                    .collect()
            })
            .collect(),
        InstanceKind::HexagonWorst => (0..6)
            .map(|i| {
                let t = PI / 3.0 * i as f64;
                let p = [t.cos(), t.sin()];
                if i == 0 {
                    scaled(&p, 1.0 - eps)
                } else {
                    jitter_on_sphere(&mut rng, &p, 1.0, eps)
                }
            })
            .collect(),
        InstanceKind::DodecahedronWorst => dodecahedron()
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                if i == 0 {
                    scaled(&p, 1.0 - eps)
                } else {
                    jitter_on_sphere(&mut rng, &p, 1.0, eps)
                }
            })
            .collect(),
        InstanceKind::AntipodalSphereWorst => {
            let dim = spec.dim + 1;
            let r = 1.0 + eps;
            let mut pts = Vec::with_capacity(spec.n + dim + 3);
            for s in [1.0, -1.0] {
                let mut x = vec![0.0; dim];
                x[0] = s;
                pts.push(x);
            }
            for v in regular_simplex(dim) {
                pts.push(jitter_on_sphere(&mut rng, &v, r, eps));
            }
            for _ in 0..spec.n {
                let v = unit_gaussian_direction(&mut rng, dim);
                pts.push(jitter_on_sphere(&mut rng, &v, r, eps));
            }
            pts
        }
    };
    PointCloud::from_points(&points)
}

/// Moves every coordinate by an independent uniform amount in [-eps/√d, eps/√d],
/// so no point moves farther than eps.
pub fn perturb(cloud: &PointCloud, epsilon: f64, seed: u64) -> Result<PointCloud> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = epsilon / (cloud.dim() as f64).sqrt();
    cloud.map_points(|_, p| {
        p.iter()
            .map(|x| if h > 0.0 { x + rng.random_range(-h..=h) } else { *x })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// `(q, value)` for each entry of [`QUANTILES`].
    pub quantiles: Vec<(f64, f64)>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return Summary {
            count: 0,
            min: f64::NAN,
            max: f64::NAN,
            mean: f64::NAN,
            median: f64::NAN,
            quantiles: Vec::new(),
        };
    }
    Summary {
        count: s.len(),
        min: s[0],
        max: s[s.len() - 1],
        mean: s.iter().sum::<f64>() / s.len() as f64,
        median: quantile(&s, 0.5),
        quantiles: QUANTILES.iter().map(|&q| (q, quantile(&s, q))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSample {
    pub trial: usize,
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRun {
    pub spec: InstanceSpec,
    pub k: usize,
    pub samples: Vec<TrialSample>,
    pub summary: Summary,
    /// log of the Jung constant of dimension k + 1.
    pub bound: f64,
    pub bound_holds: bool,
}

/// d_B(log dgm_DR^k, log dgm_R^k) over `trials` instances.
pub fn bound_histogram(spec: &InstanceSpec, trials: usize, k: usize) -> Result<HistogramRun> {
    if k == 0 {
        return Err(Error::Domain("log diagrams are undefined for PH0".into()));
    }
    spec.validate()?;
    let samples = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = spec.seed.wrapping_add(trial as u64);
            let cloud = generate(&spec.with_seed(seed))?;
            let dr = DiagramPointSet::from_diagram(&compute_diagrams(&cloud)?, k);
            let rips = DiagramPointSet::from_diagram(&rips_diagram(&cloud, k)?, k);
            let value = bottleneck(&log_diagram(&dr)?, &log_diagram(&rips)?);
            Ok(TrialSample { trial, seed, value })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let summary = summarize(&values);
    let bound = jung_constant(k + 1).ln();
    Ok(HistogramRun {
        spec: *spec,
        k,
        bound_holds: values.iter().all(|&v| v <= bound + 1e-9),
        samples,
        summary,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityLevel {
    pub epsilon: f64,
    pub rips: Vec<f64>,
    pub dr: Vec<f64>,
    /// Per-trial value of (ϑ_{k+1} - 1) max(δ(X), δ(Y)) + 2ε.
    pub dr_bound: Vec<f64>,
    pub rips_summary: Summary,
    pub dr_summary: Summary,
    pub rips_bound: f64,
    pub rips_holds: bool,
    pub dr_holds: bool,
    /// Trials where the Delaunay–Rips distance exceeds 2ε.
    pub dr_above_rips_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRun {
    pub spec: InstanceSpec,
    pub k: usize,
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub levels: Vec<StabilityLevel>,
}

/// Bottleneck distances between the diagrams of X and of a bounded perturbation
/// of X, for both filtrations and every ε in the grid.
pub fn stability_sweep(spec: &InstanceSpec, trials: usize, epsilons: &[f64], k: usize) -> Result<StabilityRun> {
    spec.validate()?;
    if let Some(&e) = epsilons.iter().find(|&&e| !(e >= 0.0 && e.is_finite())) {
        return Err(Error::Domain(format!("epsilon must be finite and >= 0, got {e}")));
    }
    let theta = jung_constant(k + 1);
    // per trial, per epsilon: (rips, dr, dr_bound)
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = spec.seed.wrapping_add(trial as u64);
            let x = generate(&spec.with_seed(seed))?;
            let rips_x = DiagramPointSet::from_diagram(&rips_diagram(&x, k)?, k);
            let dr_x = DiagramPointSet::from_diagram(&compute_diagrams(&x)?, k);
            epsilons
                .iter()
                .enumerate()
                .map(|(ei, &eps)| {
                    let y = perturb(&x, eps, seed ^ ((ei as u64 + 1) << 40))?;
                    let rips_y = DiagramPointSet::from_diagram(&rips_diagram(&y, k)?, k);
                    let dr_y = DiagramPointSet::from_diagram(&compute_diagrams(&y)?, k);
                    let bound = (theta - 1.0) * x.diameter().max(y.diameter()) + 2.0 * eps;
                    Ok((bottleneck(&rips_x, &rips_y), bottleneck(&dr_x, &dr_y), bound))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let levels = epsilons
        .iter()
        .enumerate()
        .map(|(ei, &eps)| {
            let rips: Vec<f64> = per_trial.iter().map(|t| t[ei].0).collect();
            let dr: Vec<f64> = per_trial.iter().map(|t| t[ei].1).collect();
            let dr_bound: Vec<f64> = per_trial.iter().map(|t| t[ei].2).collect();
            StabilityLevel {
                epsilon: eps,
                rips_summary: summarize(&rips),
                dr_summary: summarize(&dr),
                rips_bound: 2.0 * eps,
                rips_holds: rips.iter().all(|&v| v <= 2.0 * eps + 1e-9),
                dr_holds: dr.iter().zip(&dr_bound).all(|(&v, &b)| v <= b + 1e-9),
                dr_above_rips_bound: dr.iter().filter(|&&v| v > 2.0 * eps).count(),
                rips,
                dr,
                dr_bound,
            }
        })
        .collect();
    Ok(StabilityRun {
        spec: *spec,
        k,
        trials,
        seeds: (0..trials).map(|t| spec.seed.wrapping_add(t as u64)).collect(),
        levels,
    })
}

/// One row per simplex dimension k = 1..d.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub k: usize,
    /// Positive pairs of PH_{k-1}.
    pub positive_pairs: usize,
    /// Number of k-cells; the MST edges for k = 1.
    pub cells: usize,
    pub msa: Option<usize>,
    pub urquhart: Option<usize>,
    pub simplices: usize,
    pub cells_over_msa: Option<f64>,
    pub cells_over_simplices: f64,
    /// Whether US_k against full stars equals US_k against MSA_{k+1} stars.
    pub urquhart_full_star_equal: Option<bool>,
    pub non_manifold: Option<usize>,
    pub non_manifold_not_urquhart: Option<usize>,
}

pub fn stats_table(cloud: &PointCloud) -> Result<Vec<StatsRow>> {
    let fc = build_delaunay_rips(cloud)?;
    let out = run_pipeline(&fc, &PipelineOptions::default())?;
    let diagram = out.diagram.without_zero_persistence();
    let d = fc.dim();
    let rows = (1..=d)
        .map(|k| {
            let stage = out.stages.iter().find(|s| s.k + 1 == k);
            let cells = if k == 1 { out.mst_edges } else { stage.map_or(0, |s| s.cells) };
            let msa = (k < d).then(|| out.msa[k].as_ref().map_or(0, |s| s.len()));
            let below = out.stages.iter().find(|s| s.k == k);
            StatsRow {
                k,
                positive_pairs: diagram.pairs(k - 1).iter().filter(|p| !p.is_essential()).count(),
                cells,
                msa,
                urquhart: (k < d).then(|| out.urquhart[k].as_ref().map_or(0, |s| s.len())),
                simplices: fc.count(k),
                cells_over_msa: msa.filter(|&m| m > 0).map(|m| cells as f64 / m as f64),
                cells_over_simplices: cells as f64 / fc.count(k) as f64,
                urquhart_full_star_equal: below.map(|s| s.urquhart_full_star_equal),
                non_manifold: below.filter(|s| s.k + 1 < d).map(|s| s.non_manifold),
                non_manifold_not_urquhart: below.filter(|s| s.k + 1 < d).map(|s| s.non_manifold_not_urquhart),
            }
        })
        .collect();
    Ok(rows)
}

/// One CSV row per trial: `trial,seed,sigma,value`.
pub fn histogram_csv(run: &HistogramRun) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Resource(format!("csv: {e}"));
    w.write_record(["trial", "seed", "sigma", "value"]).map_err(io)?;
    for s in &run.samples {
        w.serialize((s.trial, s.seed, run.spec.sigma, s.value)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Resource(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One CSV row per (trial, ε, filtration): `trial,seed,epsilon,filtration,value`.
pub fn stability_csv(run: &StabilityRun) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Resource(format!("csv: {e}"));
    w.write_record(["trial", "seed", "epsilon", "filtration", "value"]).map_err(io)?;
    for level in &run.levels {
        for (t, &seed) in run.seeds.iter().enumerate() {
            w.serialize((t, seed, level.epsilon, "rips", level.rips[t])).map_err(io)?;
            w.serialize((t, seed, level.epsilon, "delaunay-rips", level.dr[t])).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Resource(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_general_position;

    #[test]
    fn regular_simplex_is_regular() {
        for dim in 1..=5 {
            let v = regular_simplex(dim);
            let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let expected = 2.0 / jung_constant(dim);
            for i in 0..v.len() {
                assert!((dist(&v[i], &vec![0.0; dim]) - 1.0).abs() < 1e-12);
                for j in 0..i {
                    assert!((dist(&v[i], &v[j]) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        for kind in InstanceKind::ALL {
            let spec = InstanceSpec::new(kind, 50, 9);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        }
    }

    #[test]
    fn hexagon_construction() {
        let eps = 1e-3;
        let c = generate(&InstanceSpec::new(InstanceKind::HexagonWorst, 0, 1)).unwrap();
        assert_eq!(c.len(), 6);
        let diam = c.diameter();
        assert!((2.0 - 3.0 * eps..=2.0).contains(&diam), "{diam}");
        assert!(validate_general_position(&c).is_clean());
        let d = compute_diagrams(&c).unwrap();
        assert_eq!(d.pairs(1).len(), 1);
        let p = d.pairs(1)[0];
        assert!((p.birth - 1.0).abs() <= 5.0 * eps && (p.death - 2.0).abs() <= 5.0 * eps);
    }

    #[test]
    fn dodecahedron_construction() {
        let eps = 1e-3;
        let c = generate(&InstanceSpec::new(InstanceKind::DodecahedronWorst, 0, 1)).unwrap();
        assert_eq!(c.len(), 20);
        assert!(validate_general_position(&c).is_clean());
        let d = compute_diagrams(&c).unwrap();
        let target = (2.0 / 3f64.sqrt(), 2.0);
        assert!(d
            .pairs(2)
            .iter()
            .any(|p| (p.birth - target.0).abs() <= 5.0 * eps && (p.death - target.1).abs() <= 5.0 * eps));
    }

    #[test]
    fn antipodal_construction_reaches_the_log_bound() {
        for dim in 1..=2 {
            let mut spec = InstanceSpec::new(InstanceKind::AntipodalSphereWorst, 60, 4);
            spec.dim = dim;
            let c = generate(&spec).unwrap();
            let dr = DiagramPointSet::from_diagram(&compute_diagrams(&c).unwrap(), dim);
            let rips = DiagramPointSet::from_diagram(&rips_diagram(&c, dim).unwrap(), dim);
            let gap = bottleneck(&log_diagram(&dr).unwrap(), &log_diagram(&rips).unwrap());
            let bound = jung_constant(dim + 1).ln();
            assert!(gap <= bound + 1e-9 && gap > bound - 0.02, "S^{dim}: {gap} vs {bound}");
        }
    }

    #[test]
    fn perturbation_is_bounded() {
        let c = generate(&InstanceSpec::new(InstanceKind::UniformCube, 40, 2)).unwrap();
        let y = perturb(&c, 0.01, 5).unwrap();
        for i in 0..c.len() {
            let d: f64 = c.point(i).iter().zip(y.point(i)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(d <= 0.01);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = InstanceSpec::new(InstanceKind::UniformCube, 10, 0);
        s.sigma = -1.0;
        assert!(matches!(generate(&s), Err(Error::Domain(_))));
        s.sigma = 0.1;
        s.dim = 9;
        assert!(matches!(generate(&s), Err(Error::Unsupported(_))));
        assert!("nope".parse::<InstanceKind>().is_err());
        assert_eq!("noisy-sphere".parse::<InstanceKind>().unwrap(), InstanceKind::NoisySphere);
    }

    #[test]
    fn small_histogram_and_sweep() {
        let spec = InstanceSpec::new(InstanceKind::UniformCube, 20, 1);
        let h = bound_histogram(&spec, 5, 1).unwrap();
        assert_eq!(h.samples.len(), 5);
        assert!(h.bound_holds);
        assert!(h.samples.iter().all(|s| s.value >= 0.0));
        assert!(histogram_csv(&h).unwrap().lines().count() == 6);
        let s = stability_sweep(&spec, 3, &[0.0, 0.01], 1).unwrap();
        assert_eq!(s.levels[0].rips, vec![0.0; 3]);
        assert!(s.levels.iter().all(|l| l.rips_holds && l.dr_holds));
        assert_eq!(stability_csv(&s).unwrap().lines().count(), 1 + 2 * 2 * 3);
    }

    #[test]
    fn stats_rows() {
        let c = generate(&InstanceSpec::new(InstanceKind::UniformCube, 50, 3)).unwrap();
        let rows = stats_table(&c).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].msa, Some(49));
        assert_eq!(rows[0].positive_pairs, 49);
        for r in &rows[..2] {
            assert!(r.urquhart.unwrap() >= r.msa.unwrap());
        }
    }
}
