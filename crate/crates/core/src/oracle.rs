//! Textbook Z/2 boundary-matrix reduction and Betti numbers. Slow and simple on
//! purpose: this is the reference every faster path is checked against.

use std::collections::HashMap;

use crate::complex_order::{FilteredComplex, Simplex};
use crate::error::{Error, Result};
use crate::persistence::{PersistenceDiagram, PersistencePair};

/// Refuse rank computations over more simplices than this.
pub const BETTI_BUDGET: usize = 2_000_000;

/// Adds `b` into `a` over Z/2; both sorted increasing.
pub(crate) fn xor_into(a: &mut Vec<u32>, b: &[u32]) {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    *a = out;
}

/// Left-to-right reduction. Returns the pivot row of every column after reduction.
fn reduce_columns(columns: &mut [Vec<u32>], n_rows: usize) -> Vec<Option<u32>> {
    let mut owner: Vec<u32> = vec![u32::MAX; n_rows];
    let mut lows = vec![None; columns.len()];
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            let o = owner[low as usize];
            if o == u32::MAX {
                owner[low as usize] = j as u32;
                lows[j] = Some(low);
                break;
            }
            let (left, right) = columns.split_at_mut(j);
            xor_into(&mut right[0], &left[o as usize]);
        }
    }
    lows
}

/// Rank over Z/2 of a set of sparse columns.
pub fn z2_rank(mut columns: Vec<Vec<u32>>, n_rows: usize) -> usize {
    for c in columns.iter_mut() {
        c.sort_unstable();
    }
    reduce_columns(&mut columns, n_rows).iter().filter(|l| l.is_some()).count()
}

/// Rank of the boundary map from k-simplices to (k-1)-simplices, optionally
/// restricted to the given k-simplex ranks.
pub fn boundary_rank(fc: &FilteredComplex, k: usize, columns: Option<&[usize]>) -> Result<usize> {
    if k == 0 || k > fc.dim() {
        return Ok(0);
    }
    let ids: Vec<usize> = match columns {
        Some(c) => c.to_vec(),
        None => (0..fc.count(k)).collect(),
    };
    if ids.len() + fc.count(k - 1) > BETTI_BUDGET {
        return Err(Error::Resource(format!("rank computation over {} columns", ids.len())));
    }
    let cols = ids.iter().map(|&i| fc.facets(k, i).to_vec()).collect();
    Ok(z2_rank(cols, fc.count(k - 1)))
}

/// Persistence pairs of the filtration, zero-persistence pairs included.
pub fn reduce(fc: &FilteredComplex) -> Result<PersistenceDiagram> {
    let order: Vec<(usize, usize)> = fc.filtration_order().collect();
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(order.len());
    for (g, &(k, i)) in order.iter().enumerate() {
        let mut col: Vec<u32> = fc
            .facets(k, i)
            .iter()
            .map(|&f| fc.global_rank(k - 1, f as usize) as u32)
            .collect();
        col.sort_unstable();
        if col.last().is_some_and(|&l| l as usize >= g) {
            return Err(Error::Contract(format!("face of simplex {g} does not precede it")));
        }
        columns.push(col);
    }
    let lows = reduce_columns(&mut columns, order.len());
    let entries: Vec<(usize, f64, usize)> = order.iter().map(|&(k, i)| (k, fc.value(k, i), i)).collect();
    Ok(pairs_from_lows(&entries, &lows, fc.dim()))
}

fn pairs_from_lows(entries: &[(usize, f64, usize)], lows: &[Option<u32>], top: usize) -> PersistenceDiagram {
    let mut diagram = PersistenceDiagram::new(top.saturating_sub(1), true);
    let mut paired = vec![false; entries.len()];
    for (j, low) in lows.iter().enumerate() {
        if let Some(l) = *low {
            let l = l as usize;
            paired[l] = true;
            paired[j] = true;
            let (k, birth, bi) = entries[l];
            diagram.push(PersistencePair {
                dim: k,
                birth,
                death: entries[j].1,
                birth_simplex: bi,
                death_simplex: Some(entries[j].2),
            });
        }
    }
    for (g, &(k, birth, bi)) in entries.iter().enumerate() {
        if !paired[g] {
            diagram.push(PersistencePair {
                dim: k,
                birth,
                death: f64::INFINITY,
                birth_simplex: bi,
                death_simplex: None,
            });
        }
    }
    diagram.normalize();
    diagram
}

/// Reduces a complex given in the dump format `dim rank value v0 ... vk`.
pub fn reduce_dump(text: &str) -> Result<PersistenceDiagram> {
    let mut rows: Vec<(usize, usize, f64, Vec<u32>, usize)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |m: String| Error::Parse { line: ln + 1, message: m };
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() < 4 {
            return Err(perr("expected `dim rank value v0 ... vk`".into()));
        }
        let dim: usize = tok[0].parse().map_err(|_| perr(format!("bad dimension {:?}", tok[0])))?;
        let rank: usize = tok[1].parse().map_err(|_| perr(format!("bad rank {:?}", tok[1])))?;
        let value: f64 = tok[2].parse().map_err(|_| perr(format!("bad value {:?}", tok[2])))?;
        let verts: Vec<u32> = tok[3..]
            .iter()
            .map(|t| t.parse().map_err(|_| perr(format!("bad vertex {t:?}"))))
            .collect::<Result<_>>()?;
        if verts.len() != dim + 1 || verts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(perr("vertex list must be strictly increasing with dim + 1 entries".into()));
        }
        rows.push((rank, dim, value, verts, ln + 1));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(g, r)| r.0 != g) {
        return Err(Error::Contract("ranks must be 0..N without gaps".into()));
    }
    let mut index: HashMap<Vec<u32>, usize> = HashMap::with_capacity(rows.len());
    let mut per_dim_count: Vec<usize> = Vec::new();
    let mut entries = Vec::with_capacity(rows.len());
    let mut columns = Vec::with_capacity(rows.len());
    let mut top = 0;
    for (g, (_, dim, value, verts, ln)) in rows.iter().enumerate() {
        let mut col = Vec::with_capacity(verts.len());
        if *dim > 0 {
            for skip in 0..verts.len() {
                let f: Vec<u32> = verts.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                match index.get(&f) {
                    Some(&fr) => col.push(fr as u32),
                    None => {
                        return Err(Error::Contract(format!(
                            "line {ln}: facet {f:?} missing or not before its coface"
                        )))
                    }
                }
            }
        }
        col.sort_unstable();
        columns.push(col);
        if per_dim_count.len() <= *dim {
            per_dim_count.resize(dim + 1, 0);
        }
        entries.push((*dim, *value, per_dim_count[*dim]));
        per_dim_count[*dim] += 1;
        top = top.max(*dim);
        index.insert(verts.clone(), g);
    }
    let lows = reduce_columns(&mut columns, rows.len());
    Ok(pairs_from_lows(&entries, &lows, top))
}

/// Betti numbers over Z/2 of a simplicial complex given by all its simplices.
pub fn betti_numbers(simplices: &[Simplex]) -> Result<Vec<usize>> {
    if simplices.len() > BETTI_BUDGET {
        return Err(Error::Resource(format!("{} simplices exceed the Betti budget", simplices.len())));
    }
    let top = simplices.iter().map(Simplex::dim).max().unwrap_or(0);
    let mut by_dim: Vec<Vec<&Simplex>> = vec![Vec::new(); top + 1];
    for s in simplices {
        by_dim[s.dim()].push(s);
    }
    let mut index: Vec<HashMap<&[usize], u32>> = Vec::with_capacity(top + 1);
    for level in by_dim.iter_mut() {
        level.sort();
        level.dedup();
        index.push(level.iter().enumerate().map(|(i, s)| (s.vertices(), i as u32)).collect());
    }
    let mut ranks = vec![0usize; top + 2];
    for k in 1..=top {
        let mut cols = Vec::with_capacity(by_dim[k].len());
        for s in &by_dim[k] {
            let mut col = Vec::with_capacity(k + 1);
            for f in s.facets() {
                let id = index[k - 1].get(f.vertices()).ok_or_else(|| {
                    Error::Contract(format!("face {:?} of {:?} is missing", f.vertices(), s.vertices()))
                })?;
                col.push(*id);
            }
            cols.push(col);
        }
        ranks[k] = z2_rank(cols, by_dim[k - 1].len());
    }
    Ok((0..=top).map(|k| by_dim[k].len() - ranks[k] - ranks[k + 1]).collect())
}
