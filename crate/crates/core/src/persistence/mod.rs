//! Persistence of the Delaunay–Rips filtration via Urquhart cells.
//!
//! The top stage computes PH_{d-1} as PH0 of the dual graph of d-simplices.
//! Each lower stage k groups the (k+1)-simplices of MSA_{k+1} into cells, reduces
//! one boundary column per cell and hands the unpaired k-simplices (MSA_k) down.
//! PH0 comes from Kruskal on the Urquhart graph.

mod diagram;
mod reduction;

pub use diagram::*;

use crate::complex_order::{build_delaunay_rips_with, FilteredComplex, Simplex};
use crate::error::{Error, Result};
use crate::geometry::{DelaunayOptions, PointCloud};
use crate::spanning::{
    build_cells, kruskal_mst, non_manifold_simplices, urquhart_simplices, xor_boundary, CellOptions,
    SimplexSet, StarContext, UnionFind,
};

#[derive(Debug, Clone, Copy)]
pub struct PersistenceOptions {
    /// Worker threads; 1 runs everything sequentially.
    pub threads: usize,
    pub keep_zero_persistence: bool,
    pub delaunay: DelaunayOptions,
}

impl Default for PersistenceOptions {
    fn default() -> Self {
        PersistenceOptions {
            threads: 1,
            keep_zero_persistence: false,
            delaunay: DelaunayOptions::default(),
        }
    }
}

/// Options for [`run_pipeline`] on an already built complex.
#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    pub threads: usize,
    /// Keep reduced cell columns and emit generators of at least this persistence.
    pub generators: Option<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            threads: 1,
            generators: None,
        }
    }
}

/// A cycle representing a class that dies at `death`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
    /// Ranks of the chain's k-simplices, increasing.
    pub ranks: Vec<usize>,
    pub simplices: Vec<Simplex>,
}

impl Generator {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Counters for one stage of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    /// Dimension of the separators; the stage emits PH_k.
    pub k: usize,
    /// Finite (k+1)-cells.
    pub cells: usize,
    pub urquhart: usize,
    /// Whether US_k against full stars equals US_k against MSA_{k+1} stars.
    pub urquhart_full_star_equal: bool,
    pub non_manifold: usize,
    pub non_manifold_not_urquhart: usize,
    pub msa: usize,
    /// Zero-persistence pairs from merging across non-separators.
    pub apparent_pairs: usize,
    /// Zero-persistence pairs produced by the cell reduction itself.
    pub zero_pairs_from_cells: usize,
    pub positive_pairs: usize,
}

/// Result of a single stage.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub k: usize,
    pub pairs: Vec<PersistencePair>,
    pub msa: SimplexSet,
    pub urquhart: SimplexSet,
    pub non_manifold: SimplexSet,
    pub generators: Vec<Generator>,
    pub report: StageReport,
}

/// Everything the pipeline computed, with zero-persistence pairs retained.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub diagram: PersistenceDiagram,
    /// Indexed by k; `None` where the set is not defined.
    pub msa: Vec<Option<SimplexSet>>,
    pub urquhart: Vec<Option<SimplexSet>>,
    pub non_manifold: Vec<Option<SimplexSet>>,
    pub stages: Vec<StageReport>,
    pub generators: Vec<Generator>,
    pub mst_edges: usize,
}

fn zero_pair(fc: &FilteredComplex, k: usize, sigma: usize, context: Option<&SimplexSet>) -> Result<PersistencePair> {
    let tau = fc.cofacets(k, sigma)[0] as usize;
    if fc.max_facet(k + 1, tau) != sigma || context.is_some_and(|c| !c.contains(tau)) {
        return Err(Error::Internal(format!(
            "{k}-simplex {sigma} is not Urquhart but does not form an apparent pair"
        )));
    }
    Ok(PersistencePair {
        dim: k,
        birth: fc.value(k, sigma),
        death: fc.value(k + 1, tau),
        birth_simplex: sigma,
        death_simplex: Some(tau),
    })
}

fn make_generator(fc: &FilteredComplex, k: usize, birth: f64, death: f64, ranks: Vec<usize>) -> Generator {
    let simplices = ranks.iter().map(|&r| fc.simplex(k, r)).collect();
    Generator {
        dim: k,
        birth,
        death,
        ranks,
        simplices,
    }
}

fn check_pseudomanifold(fc: &FilteredComplex) -> Result<()> {
    let d = fc.dim();
    if let Some(f) = (0..fc.count(d - 1)).find(|&f| fc.cofacets(d - 1, f).len() > 2) {
        return Err(Error::Contract(format!(
            "{}-simplex {f} has more than two cofacets; not a triangulation",
            d - 1
        )));
    }
    Ok(())
}

/// PH_{d-1} as PH0 of the dual graph of d-simplices plus one outer node.
pub fn codim1_persistence(fc: &FilteredComplex, options: &PipelineOptions) -> Result<StageOutput> {
    let d = fc.dim();
    if d < 2 {
        return Err(Error::Contract("codimension-1 stage needs d >= 2".into()));
    }
    check_pseudomanifold(fc)?;
    let k = d - 1;
    let nk = fc.count(k);
    let us = urquhart_simplices(fc, k, StarContext::Full)?;
    let context = SimplexSet::full(d, fc.count(d));
    let cells = build_cells(
        fc,
        k,
        &context,
        &us,
        CellOptions {
            outer: true,
            chains: false,
            threads: options.threads,
        },
    )?;
    let outer = cells.len() - 1;
    let mut cell_of = vec![0u32; fc.count(d)];
    for (ci, c) in cells.iter().enumerate() {
        for &m in &c.members {
            cell_of[m as usize] = ci as u32;
        }
    }
    let mut key: Vec<usize> = cells.iter().map(|c| c.max_simplex.unwrap_or(usize::MAX)).collect();
    let mut members: Vec<Vec<u32>> = if options.generators.is_some() {
        cells.iter().map(|c| c.members.clone()).collect()
    } else {
        Vec::new()
    };
    let mut uf = UnionFind::new(cells.len());
    let mut msa = SimplexSet::empty(k, nk);
    let mut pairs = Vec::new();
    let mut generators = Vec::new();
    let mut positive = 0;
    let mut zero_from_cells = 0;
    let ranks: Vec<usize> = us.ranks().collect();
    for &sigma in ranks.iter().rev() {
        let cof = fc.cofacets(k, sigma);
        let a = cell_of[cof[0] as usize] as usize;
        let b = if cof.len() == 2 { cell_of[cof[1] as usize] as usize } else { outer };
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            msa.insert(sigma);
            continue;
        }
        let (young, old) = if key[ra] < key[rb] { (ra, rb) } else { (rb, ra) };
        let birth = fc.value(k, sigma);
        let death = fc.value(d, key[young]);
        if death > birth {
            positive += 1;
        } else {
            zero_from_cells += 1;
        }
        pairs.push(PersistencePair {
            dim: k,
            birth,
            death,
            birth_simplex: sigma,
            death_simplex: Some(key[young]),
        });
        if let Some(min) = options.generators {
            let p = death - birth;
            if p > 0.0 && p >= min {
                let chain = xor_boundary(fc, d, &members[young]);
                generators.push(make_generator(
                    fc,
                    k,
                    birth,
                    death,
                    chain.into_iter().map(|r| r as usize).collect(),
                ));
            }
        }
        let root = uf.union(young, old).expect("distinct roots");
        key[root] = key[old];
        if options.generators.is_some() {
            let (mut big, small) = (std::mem::take(&mut members[old]), std::mem::take(&mut members[young]));
            if big.len() < small.len() {
                big.extend_from_slice(&small);
            } else {
                big.extend(small);
            }
            members[root] = big;
        }
    }
    if uf.class_count() != 1 {
        return Err(Error::Internal(format!(
            "dual graph left {} components",
            uf.class_count()
        )));
    }
    let mut apparent = 0;
    for sigma in 0..nk {
        if !us.contains(sigma) {
            pairs.push(zero_pair(fc, k, sigma, None)?);
            apparent += 1;
        }
    }
    let report = StageReport {
        k,
        cells: cells.len() - 1,
        urquhart: us.len(),
        urquhart_full_star_equal: true,
        non_manifold: 0,
        non_manifold_not_urquhart: 0,
        msa: msa.len(),
        apparent_pairs: apparent,
        zero_pairs_from_cells: zero_from_cells,
        positive_pairs: positive,
    };
    Ok(StageOutput {
        k,
        pairs,
        msa,
        urquhart: us,
        non_manifold: SimplexSet::empty(k, nk),
        generators,
        report,
    })
}

/// Cell reduction for PH_k given MSA_{k+1}. Rows in `drop_rows` must be
/// negative simplices; they never become pivots and may be skipped.
fn cell_stage(
    fc: &FilteredComplex,
    k: usize,
    context: &SimplexSet,
    us: SimplexSet,
    drop_rows: Option<&SimplexSet>,
    options: &PipelineOptions,
) -> Result<StageOutput> {
    let nk = fc.count(k);
    let us_full = urquhart_simplices(fc, k, StarContext::Full)?;
    let nm = non_manifold_simplices(fc, k, context)?;
    let separators = us.union(&nm);
    let cells = build_cells(
        fc,
        k,
        context,
        &separators,
        CellOptions {
            outer: false,
            chains: true,
            threads: options.threads,
        },
    )?;
    let mut pairs = Vec::new();
    let mut paired = SimplexSet::empty(k, nk);
    for sigma in 0..nk {
        if separators.contains(sigma) {
            continue;
        }
        let star = fc.cofacets(k, sigma).iter().filter(|&&t| context.contains(t as usize)).count();
        if star == 2 {
            pairs.push(zero_pair(fc, k, sigma, Some(context))?);
            paired.insert(sigma);
        }
    }
    let apparent = pairs.len();
    let columns: Vec<Vec<u32>> = cells
        .iter()
        .map(|c| match drop_rows {
            Some(drop) => c.boundary.iter().copied().filter(|&r| !drop.contains(r as usize)).collect(),
            None => c.boundary.clone(),
        })
        .collect();
    let reduced = if options.threads > 1 && options.generators.is_none() {
        reduction::reduce_parallel(columns, nk, options.threads)?
    } else {
        reduction::reduce_sequential(columns, nk)
    };
    let mut generators = Vec::new();
    let mut positive = 0;
    let mut zero_from_cells = 0;
    for (ci, cell) in cells.iter().enumerate() {
        let tau = cell.max_simplex.expect("finite cell");
        let low = reduced.pivots[ci].ok_or_else(|| {
            Error::Internal(format!(
                "boundary column of the {}-cell ending at {tau} reduced to zero",
                k + 1
            ))
        })? as usize;
        if paired.contains(low) {
            return Err(Error::Internal(format!("{k}-simplex {low} paired twice")));
        }
        paired.insert(low);
        let birth = fc.value(k, low);
        if cell.value > birth {
            positive += 1;
        } else {
            zero_from_cells += 1;
        }
        pairs.push(PersistencePair {
            dim: k,
            birth,
            death: cell.value,
            birth_simplex: low,
            death_simplex: Some(tau),
        });
        if let Some(min) = options.generators {
            let p = cell.value - birth;
            if p > 0.0 && p >= min {
                let ranks = reduced.columns[ci].iter().map(|&r| r as usize).collect();
                generators.push(make_generator(fc, k, birth, cell.value, ranks));
            }
        }
    }
    let msa = SimplexSet::full(k, nk).difference(&paired);
    if !msa.is_subset(&us) {
        let stray = msa.difference(&us);
        let nm_stray = stray.ranks().filter(|&r| nm.contains(r)).count();
        return Err(Error::Internal(format!(
            "{} unpaired {k}-simplices lie outside US_{k} ({nm_stray} of them non-manifold)",
            stray.len()
        )));
    }
    let report = StageReport {
        k,
        cells: cells.len(),
        urquhart: us.len(),
        urquhart_full_star_equal: us == us_full,
        non_manifold: nm.len(),
        non_manifold_not_urquhart: nm.difference(&us).len(),
        msa: msa.len(),
        apparent_pairs: apparent,
        zero_pairs_from_cells: zero_from_cells,
        positive_pairs: positive,
    };
    Ok(StageOutput {
        k,
        pairs,
        msa,
        urquhart: us,
        non_manifold: nm,
        generators,
        report,
    })
}

/// PH_k from MSA_{k+1} for 2 <= k <= d-2.
pub fn intermediate_persistence(
    fc: &FilteredComplex,
    k: usize,
    msa_above: &SimplexSet,
    options: &PipelineOptions,
) -> Result<StageOutput> {
    if k < 2 || k + 2 > fc.dim() {
        return Err(Error::Contract(format!(
            "intermediate stage needs 2 <= k <= {}, got {k}",
            fc.dim().saturating_sub(2)
        )));
    }
    let us = urquhart_simplices(fc, k, StarContext::Within(msa_above))?;
    cell_stage(fc, k, msa_above, us, None, options)
}

/// PH0 and PH1 from MSA_2.
pub fn ph01(fc: &FilteredComplex, msa2: &SimplexSet, options: &PipelineOptions) -> Result<(Vec<PersistencePair>, StageOutput)> {
    if fc.dim() < 3 {
        return Err(Error::Contract("ph01 needs d >= 3".into()));
    }
    let ug = urquhart_simplices(fc, 1, StarContext::Within(msa2))?;
    let (mst, events) = kruskal_mst(fc, &ug)?;
    // the reduced columns are only cycles when every row is kept
    let drop = options.generators.is_none().then_some(&mst);
    let stage = cell_stage(fc, 1, msa2, ug, drop, options)?;
    if stage.msa != mst {
        return Err(Error::Internal("unpaired edges differ from the minimum spanning tree".into()));
    }
    Ok((ph0_pairs(&events), stage))
}

fn ph0_pairs(events: &[crate::spanning::MergeEvent]) -> Vec<PersistencePair> {
    let mut out: Vec<PersistencePair> = events
        .iter()
        .map(|e| PersistencePair {
            dim: 0,
            birth: 0.0,
            death: e.death,
            birth_simplex: e.vertex,
            death_simplex: Some(e.edge),
        })
        .collect();
    out.push(PersistencePair {
        dim: 0,
        birth: 0.0,
        death: f64::INFINITY,
        birth_simplex: 0,
        death_simplex: None,
    });
    out
}

/// Runs every stage on a Delaunay–Rips complex.
pub fn run_pipeline(fc: &FilteredComplex, options: &PipelineOptions) -> Result<PipelineOutput> {
    let d = fc.dim();
    if d == 0 {
        return Err(Error::Input("need at least two points".into()));
    }
    let mut msa: Vec<Option<SimplexSet>> = vec![None; d + 1];
    let mut urquhart: Vec<Option<SimplexSet>> = vec![None; d + 1];
    let mut non_manifold: Vec<Option<SimplexSet>> = vec![None; d + 1];
    let mut stages = Vec::new();
    let mut generators = Vec::new();
    let mut diagram = PersistenceDiagram::new(d - 1, true);
    msa[d] = Some(SimplexSet::full(d, fc.count(d)));

    let mut absorb = |out: StageOutput,
                      msa: &mut Vec<Option<SimplexSet>>,
                      diagram: &mut PersistenceDiagram| {
        let k = out.k;
        diagram.extend(out.pairs);
        generators.extend(out.generators);
        stages.push(out.report);
        urquhart[k] = Some(out.urquhart);
        non_manifold[k] = Some(out.non_manifold);
        msa[k] = Some(out.msa);
    };

    let mst_edges;
    if d == 1 {
        let (mst, events) = kruskal_mst(fc, &SimplexSet::full(1, fc.count(1)))?;
        mst_edges = mst.len();
        diagram.extend(ph0_pairs(&events));
        msa[1] = Some(mst);
    } else {
        let top = codim1_persistence(fc, options)?;
        if d == 2 {
            let (mst, events) = kruskal_mst(fc, &top.urquhart)?;
            if mst != top.msa {
                return Err(Error::Internal("dual construction and Kruskal disagree on MSA_1".into()));
            }
            mst_edges = mst.len();
            diagram.extend(ph0_pairs(&events));
            absorb(top, &mut msa, &mut diagram);
        } else {
            absorb(top, &mut msa, &mut diagram);
            for k in (2..d - 1).rev() {
                let above = msa[k + 1].clone().expect("stage above ran");
                let out = intermediate_persistence(fc, k, &above, options)?;
                absorb(out, &mut msa, &mut diagram);
            }
            let msa2 = msa[2].clone().expect("stage above ran");
            let (ph0, out) = ph01(fc, &msa2, options)?;
            mst_edges = out.msa.len();
            diagram.extend(ph0);
            absorb(out, &mut msa, &mut diagram);
        }
    }

    let finite = diagram.all_pairs().filter(|p| !p.is_essential()).count();
    let essential = diagram.all_pairs().filter(|p| p.is_essential()).count();
    if essential != 1 || 2 * finite + essential != fc.len() {
        return Err(Error::Internal(format!(
            "{finite} finite and {essential} essential pairs do not account for {} simplices",
            fc.len()
        )));
    }
    diagram.normalize();
    Ok(PipelineOutput {
        diagram,
        msa,
        urquhart,
        non_manifold,
        stages,
        generators,
        mst_edges,
    })
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads <= 1 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?
        .install(f)
}

/// Persistence diagram of the Delaunay–Rips filtration, zero-persistence pairs dropped.
pub fn compute_diagrams(cloud: &PointCloud) -> Result<PersistenceDiagram> {
    compute_diagrams_with(cloud, &PersistenceOptions::default())
}

pub fn compute_diagrams_with(cloud: &PointCloud, options: &PersistenceOptions) -> Result<PersistenceDiagram> {
    with_threads(options.threads, || {
        let fc = build_delaunay_rips_with(cloud, options.delaunay)?;
        let out = run_pipeline(
            &fc,
            &PipelineOptions {
                threads: options.threads,
                generators: None,
            },
        )?;
        Ok(if options.keep_zero_persistence {
            out.diagram
        } else {
            out.diagram.without_zero_persistence()
        })
    })
}

/// Representative cycles of PH1 and PH2 classes with persistence at least
/// `min_persistence` (and positive). Only clouds in R³ are supported.
pub fn extract_generators(cloud: &PointCloud, min_persistence: f64) -> Result<Vec<Generator>> {
    extract_generators_with(cloud, min_persistence, DelaunayOptions::default())
}

pub fn extract_generators_with(
    cloud: &PointCloud,
    min_persistence: f64,
    delaunay: DelaunayOptions,
) -> Result<Vec<Generator>> {
    if cloud.dim() != 3 {
        return Err(Error::Unsupported(format!(
            "generators are only available in dimension 3, got {}",
            cloud.dim()
        )));
    }
    if !(min_persistence >= 0.0) {
        return Err(Error::Domain(format!("min_persistence must be >= 0, got {min_persistence}")));
    }
    let fc = build_delaunay_rips_with(cloud, delaunay)?;
    let out = run_pipeline(
        &fc,
        &PipelineOptions {
            threads: 1,
            generators: Some(min_persistence),
        },
    )?;
    let mut gens = out.generators;
    gens.sort_by(|a, b| a.dim.cmp(&b.dim).then(b.persistence().total_cmp(&a.persistence())));
    Ok(gens)
}
