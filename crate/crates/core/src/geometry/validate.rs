use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::delaunay::{DelaunayComplex, DelaunayOptions, Strategy};
use super::predicates::{in_sphere_points, orientation, SpherePosition};
use super::{PointCloud, EXHAUSTIVE_VALIDATION_LIMIT};

const EXHAUSTIVE_SUBSET_BUDGET: u128 = 5_000_000;
const SAMPLED_SUBSETS: usize = 200_000;
const ALL_PAIRS_LIMIT: usize = 3_000;
const MAX_REPORTED: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// d+1 points on a common hyperplane.
    Cohyperplanar { points: Vec<usize> },
    /// d+2 points on a common sphere.
    Cospherical { points: Vec<usize> },
    /// Several point pairs at the same distance.
    RepeatedDistance { distance: f64, pairs: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneralPositionReport {
    pub violations: Vec<Violation>,
    /// False when subset checks were sampled rather than exhaustive.
    pub exhaustive: bool,
    /// Violations beyond the reporting cap were dropped.
    pub truncated: bool,
}

impl GeneralPositionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_affine_degeneracy(&self) -> bool {
        self.violations
            .iter()
            .any(|v| !matches!(v, Violation::RepeatedDistance { .. }))
    }

    pub fn has_repeated_distance(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::RepeatedDistance { .. }))
    }

    fn push(&mut self, v: Violation) {
        if self.violations.len() < MAX_REPORTED {
            if !self.violations.contains(&v) {
                self.violations.push(v);
            }
        } else {
            self.truncated = true;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - (k - i) {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn check_hyperplane(cloud: &PointCloud, set: &[usize], report: &mut GeneralPositionReport) {
    let pts: Vec<&[f64]> = set.iter().map(|&i| cloud.point(i)).collect();
    if orientation(&pts).sign() == 0 {
        report.push(Violation::Cohyperplanar {
            points: sorted(set),
        });
    }
}

fn check_sphere(cloud: &PointCloud, set: &[usize], report: &mut GeneralPositionReport) {
    for drop in 0..set.len() {
        let base: Vec<&[f64]> = set
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != drop)
            .map(|(_, &v)| cloud.point(v))
            .collect();
        if let Some(pos) = in_sphere_points(&base, cloud.point(set[drop])) {
            if pos == SpherePosition::On {
                report.push(Violation::Cospherical {
                    points: sorted(set),
                });
            }
            return;
        }
    }
}

fn sorted(set: &[usize]) -> Vec<usize> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v
}

/// Reports cohyperplanar (d+1)-sets, cospherical (d+2)-sets and repeated
/// pairwise distances.
pub fn validate_general_position(cloud: &PointCloud) -> GeneralPositionReport {
    let n = cloud.len();
    let d = cloud.dim();
    let mut report = GeneralPositionReport {
        exhaustive: true,
        ..Default::default()
    };

    let exhaustive = n <= EXHAUSTIVE_VALIDATION_LIMIT
        && binomial(n, d + 2) <= EXHAUSTIVE_SUBSET_BUDGET
        && binomial(n, d + 1) <= EXHAUSTIVE_SUBSET_BUDGET;
    if exhaustive {
        for k in [d + 1, d + 2] {
            if n < k {
                continue;
            }
            let mut comb: Vec<usize> = (0..k).collect();
            loop {
                if k == d + 1 {
                    check_hyperplane(cloud, &comb, &mut report);
                } else {
                    check_sphere(cloud, &comb, &mut report);
                }
                if !next_combination(&mut comb, n) {
                    break;
                }
            }
        }
    } else {
        report.exhaustive = false;
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e0_c0de);
        for _ in 0..SAMPLED_SUBSETS {
            let set = rand::seq::index::sample(&mut rng, n, (d + 2).min(n)).into_vec();
            check_hyperplane(cloud, &set[..(d + 1).min(set.len())], &mut report);
            if set.len() == d + 2 {
                check_sphere(cloud, &set, &mut report);
            }
        }
        // Non-unique Delaunay complexes show up as cospherical neighbouring cells.
        if (2..=3).contains(&d) {
            let opts = DelaunayOptions {
                perturb: true,
                strategy: Strategy::Incremental,
            };
            if let Ok(del) = DelaunayComplex::build(cloud, opts) {
                for f in 0..del.count(d - 1) {
                    let cof = del.cofacets(d - 1, f);
                    if cof.len() == 2 {
                        let mut set: Vec<usize> =
                            del.simplex(d, cof[0] as usize).iter().map(|&v| v as usize).collect();
                        let apex = del
                            .simplex(d, cof[1] as usize)
                            .iter()
                            .map(|&v| v as usize)
                            .find(|v| !set.contains(v))
                            .expect("distinct neighbours");
                        set.push(apex);
                        check_sphere(cloud, &set, &mut report);
                    }
                }
            }
        }
    }

    // Repeated distances: all pairs for moderate n, Delaunay edges otherwise.
    let pairs: Vec<(usize, usize)> = if n <= ALL_PAIRS_LIMIT {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        report.exhaustive = false;
        let opts = DelaunayOptions {
            perturb: true,
            strategy: Strategy::Auto,
        };
        match DelaunayComplex::build(cloud, opts) {
            Ok(del) => del
                .simplices(1)
                .map(|e| (e[0] as usize, e[1] as usize))
                .collect(),
            Err(_) => Vec::new(),
        }
    };
    let mut by_len: BTreeMap<u64, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, j) in pairs {
        by_len.entry(cloud.dist(i, j).to_bits()).or_default().push((i, j));
    }
    for (bits, group) in by_len {
        if group.len() > 1 {
            report.push(Violation::RepeatedDistance {
                distance: f64::from_bits(bits),
                pairs: group,
            });
        }
    }
    report
}
