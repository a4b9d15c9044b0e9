//! Urquhart and non-manifold simplices, cell aggregation by union-find, minimum
//! spanning trees and spanning-acycle checks.

use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use rayon::prelude::*;

use crate::complex_order::FilteredComplex;
use crate::error::{Error, Result};
use crate::oracle;

/// Sequential union-find with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
    classes: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            classes: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    /// Returns the new root if the classes were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        self.classes -= 1;
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[lo] = hi as u32;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        Some(hi)
    }
}

/// Union-find safe under concurrent `find`/`union`. Roots always link toward the
/// smaller index, so the final partition does not depend on scheduling.
#[derive(Debug)]
pub struct ConcurrentUnionFind {
    parent: Vec<AtomicU32>,
}

impl ConcurrentUnionFind {
    pub fn new(n: usize) -> Self {
        ConcurrentUnionFind {
            parent: (0..n as u32).map(AtomicU32::new).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&self, x: usize) -> usize {
        let mut cur = x as u32;
        loop {
            let p = self.parent[cur as usize].load(AtomicOrdering::Acquire);
            if p == cur {
                return cur as usize;
            }
            let gp = self.parent[p as usize].load(AtomicOrdering::Acquire);
            // path halving; losing this race is harmless
            let _ = self.parent[cur as usize].compare_exchange(
                p,
                gp,
                AtomicOrdering::AcqRel,
                AtomicOrdering::Relaxed,
            );
            cur = gp;
        }
    }

    pub fn union(&self, a: usize, b: usize) -> bool {
        loop {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                return false;
            }
            let (small, large) = if ra < rb { (ra, rb) } else { (rb, ra) };
            if self.parent[large]
                .compare_exchange(
                    large as u32,
                    small as u32,
                    AtomicOrdering::AcqRel,
                    AtomicOrdering::Relaxed,
                )
                .is_ok()
            {
                return true;
            }
        }
    }

    pub fn same(&self, a: usize, b: usize) -> bool {
        loop {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                return true;
            }
            if self.parent[ra].load(AtomicOrdering::Acquire) as usize == ra {
                return false;
            }
        }
    }
}

/// A set of simplices of one dimension, stored as a membership mask over ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexSet {
    dim: usize,
    mask: Vec<bool>,
}

impl SimplexSet {
    pub fn empty(dim: usize, universe: usize) -> Self {
        SimplexSet {
            dim,
            mask: vec![false; universe],
        }
    }

    pub fn full(dim: usize, universe: usize) -> Self {
        SimplexSet {
            dim,
            mask: vec![true; universe],
        }
    }

    pub fn from_ranks(dim: usize, universe: usize, ranks: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(dim, universe);
        for r in ranks {
            s.mask[r] = true;
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn contains(&self, rank: usize) -> bool {
        self.mask[rank]
    }

    pub fn insert(&mut self, rank: usize) {
        self.mask[rank] = true;
    }

    pub fn remove(&mut self, rank: usize) {
        self.mask[rank] = false;
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// Member ranks in increasing order.
    pub fn ranks(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|&(_, &b)| b).map(|(i, _)| i)
    }

    pub fn is_subset(&self, other: &SimplexSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &SimplexSet) -> SimplexSet {
        SimplexSet {
            dim: self.dim,
            mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a || b).collect(),
        }
    }

    pub fn difference(&self, other: &SimplexSet) -> SimplexSet {
        SimplexSet {
            dim: self.dim,
            mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && !b).collect(),
        }
    }
}

/// Where the cofacets of a k-simplex are looked up.
#[derive(Debug, Clone, Copy)]
pub enum StarContext<'a> {
    /// All cofacets in the complex.
    Full,
    /// Only cofacets belonging to the given (k+1)-dimensional set.
    Within(&'a SimplexSet),
}

fn star<'a>(fc: &'a FilteredComplex, k: usize, i: usize, ctx: StarContext<'a>) -> impl Iterator<Item = usize> + 'a {
    fc.cofacets(k, i)
        .iter()
        .map(|&t| t as usize)
        .filter(move |&t| match ctx {
            StarContext::Full => true,
            StarContext::Within(s) => s.contains(t),
        })
}

/// k-simplices that are not the largest facet of any cofacet in the context.
pub fn urquhart_simplices(fc: &FilteredComplex, k: usize, ctx: StarContext<'_>) -> Result<SimplexSet> {
    if k == 0 || k >= fc.dim() {
        return Err(Error::Contract(format!(
            "Urquhart simplices need 1 <= k < {}, got k = {k}",
            fc.dim()
        )));
    }
    if let StarContext::Within(s) = ctx {
        if s.dim() != k + 1 || s.universe() != fc.count(k + 1) {
            return Err(Error::Contract("context set has the wrong dimension".into()));
        }
    }
    let n = fc.count(k);
    let mask = (0..n)
        .map(|i| star(fc, k, i, ctx).all(|t| fc.max_facet(k + 1, t) != i))
        .collect();
    Ok(SimplexSet { dim: k, mask })
}

/// k-simplices with more than two cofacets in the given (k+1)-set.
pub fn non_manifold_simplices(fc: &FilteredComplex, k: usize, msa: &SimplexSet) -> Result<SimplexSet> {
    if msa.dim() != k + 1 || msa.universe() != fc.count(k + 1) {
        return Err(Error::Contract("context set has the wrong dimension".into()));
    }
    let mask = (0..fc.count(k))
        .map(|i| star(fc, k, i, StarContext::Within(msa)).count() > 2)
        .collect();
    Ok(SimplexSet { dim: k, mask })
}

/// A union-find class of (k+1)-simplices delimited by separator k-simplices.
#[derive(Debug, Clone, PartialEq)]
pub struct UrquhartCell {
    /// Rank of the largest member; `None` for the synthetic outer cell.
    pub max_simplex: Option<usize>,
    /// Value of the largest member, +inf for the outer cell.
    pub value: f64,
    pub members: Vec<u32>,
    /// Z/2 sum of member boundaries (k-simplex ranks, increasing). Empty when
    /// chains were not requested, and always empty for the outer cell.
    pub boundary: Vec<u32>,
}

impl UrquhartCell {
    pub fn is_outer(&self) -> bool {
        self.max_simplex.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CellOptions {
    /// Add a synthetic outer cell across which hull facets merge.
    pub outer: bool,
    pub chains: bool,
    pub threads: usize,
}

/// Cells of the (k+1)-simplices in `context`, merging across every k-simplex
/// that is not a separator. Finite cells are sorted by their largest member; the
/// outer cell, if any, comes last.
pub fn build_cells(
    fc: &FilteredComplex,
    k: usize,
    context: &SimplexSet,
    separators: &SimplexSet,
    options: CellOptions,
) -> Result<Vec<UrquhartCell>> {
    let m = fc.count(k + 1);
    if context.dim() != k + 1 || context.universe() != m || separators.dim() != k {
        return Err(Error::Contract("cell context or separators have the wrong dimension".into()));
    }
    let outer = m;
    let n_nodes = m + usize::from(options.outer);
    let merge_edge = |i: usize| -> Result<Option<(usize, usize)>> {
        if separators.contains(i) {
            return Ok(None);
        }
        let mut it = star(fc, k, i, StarContext::Within(context));
        match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => Ok(Some((a, b))),
            (Some(a), None, None) if options.outer && fc.cofacets(k, i).len() == 1 => {
                Ok(Some((a, outer)))
            }
            (Some(_), Some(_), Some(_)) => Err(Error::Internal(format!(
                "non-separator {k}-simplex {i} has more than two cofacets in the cell context"
            ))),
            _ => Ok(None),
        }
    };
    let roots: Vec<usize> = if options.threads > 1 {
        let uf = ConcurrentUnionFind::new(n_nodes);
        (0..fc.count(k)).into_par_iter().try_for_each(|i| {
            if let Some((a, b)) = merge_edge(i)? {
                uf.union(a, b);
            }
            Ok::<(), Error>(())
        })?;
        (0..n_nodes).map(|x| uf.find(x)).collect()
    } else {
        let mut uf = UnionFind::new(n_nodes);
        for i in 0..fc.count(k) {
            if let Some((a, b)) = merge_edge(i)? {
                uf.union(a, b);
            }
        }
        (0..n_nodes).map(|x| uf.find(x)).collect()
    };
    let outer_root = options.outer.then(|| roots[outer]);
    // group members by root
    let mut slot = vec![u32::MAX; n_nodes];
    let mut groups: Vec<Vec<u32>> = Vec::new();
    for t in context.ranks() {
        let r = roots[t];
        if slot[r] == u32::MAX {
            slot[r] = groups.len() as u32;
            groups.push(Vec::new());
        }
        groups[slot[r] as usize].push(t as u32);
    }
    let outer_slot = outer_root.map(|r| slot[r]).filter(|&s| s != u32::MAX);
    let build = |(gi, members): (usize, Vec<u32>)| -> UrquhartCell {
        let is_outer = outer_slot == Some(gi as u32);
        let max = *members.iter().max().expect("nonempty cell") as usize;
        let boundary = if options.chains && !is_outer {
            xor_boundary(fc, k + 1, &members)
        } else {
            Vec::new()
        };
        UrquhartCell {
            max_simplex: (!is_outer).then_some(max),
            value: if is_outer { f64::INFINITY } else { fc.value(k + 1, max) },
            members,
            boundary,
        }
    };
    let mut cells: Vec<UrquhartCell> = if options.threads > 1 {
        groups.into_par_iter().enumerate().map(build).collect()
    } else {
        groups.into_iter().enumerate().map(build).collect()
    };
    if options.outer && outer_slot.is_none() {
        cells.push(UrquhartCell {
            max_simplex: None,
            value: f64::INFINITY,
            members: Vec::new(),
            boundary: Vec::new(),
        });
    }
    cells.sort_by_key(|c| c.max_simplex.unwrap_or(usize::MAX));
    Ok(cells)
}

/// Z/2 sum of the boundaries of the given k-simplices, as increasing (k-1)-ranks.
pub fn xor_boundary(fc: &FilteredComplex, k: usize, simplices: &[u32]) -> Vec<u32> {
    let mut all: Vec<u32> = simplices
        .iter()
        .flat_map(|&t| fc.facets(k, t as usize).iter().copied())
        .collect();
    all.sort_unstable();
    let mut out = Vec::with_capacity(all.len() / 2);
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j] == all[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(all[i]);
        }
        i = j;
    }
    out
}

/// A finite PH0 pair produced by Kruskal's algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeEvent {
    /// Smallest vertex of the component that dies.
    pub vertex: usize,
    /// Rank of the edge that merges it.
    pub edge: usize,
    pub death: f64,
}

/// Kruskal on the given edges in rank order. When two components meet, the one
/// whose smallest vertex index is larger dies.
pub fn kruskal_mst(fc: &FilteredComplex, edges: &SimplexSet) -> Result<(SimplexSet, Vec<MergeEvent>)> {
    if edges.dim() != 1 || edges.universe() != fc.count(1) {
        return Err(Error::Contract("Kruskal needs a set of edges".into()));
    }
    let n = fc.n_points();
    let mut uf = UnionFind::new(n);
    let mut min_vertex: Vec<u32> = (0..n as u32).collect();
    let mut mst = SimplexSet::empty(1, fc.count(1));
    let mut events = Vec::with_capacity(n.saturating_sub(1));
    for e in edges.ranks() {
        let v = fc.vertices(1, e);
        let (ra, rb) = (uf.find(v[0] as usize), uf.find(v[1] as usize));
        if ra == rb {
            continue;
        }
        let (ma, mb) = (min_vertex[ra], min_vertex[rb]);
        let root = uf.union(ra, rb).expect("distinct roots");
        min_vertex[root] = ma.min(mb);
        mst.insert(e);
        events.push(MergeEvent {
            vertex: ma.max(mb) as usize,
            edge: e,
            death: fc.value(1, e),
        });
    }
    if uf.class_count() != 1 {
        return Err(Error::Internal(format!(
            "edge set leaves {} connected components",
            uf.class_count()
        )));
    }
    Ok((mst, events))
}

/// Whether `set` (k-simplices) is a k-spanning acycle of the complex: adding it to
/// the (k-1)-skeleton creates no k-cycle and kills every (k-1)-cycle of the complex.
pub fn verify_spanning_acycle(fc: &FilteredComplex, k: usize, set: &SimplexSet) -> Result<bool> {
    if k == 0 || k > fc.dim() || set.dim() != k || set.universe() != fc.count(k) {
        return Err(Error::Contract("spanning acycle check needs a k-set with 1 <= k <= dim".into()));
    }
    let chosen: Vec<usize> = set.ranks().collect();
    let rank_chosen = oracle::boundary_rank(fc, k, Some(&chosen))?;
    if rank_chosen != chosen.len() {
        return Ok(false);
    }
    let rank_all = oracle::boundary_rank(fc, k, None)?;
    Ok(rank_chosen == rank_all)
}
