//! Column reduction over Z/2 for cell boundary columns.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else if a[i] > b[j] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Reduced columns and the pivot (largest row) of each.
pub(crate) struct Reduced {
    pub pivots: Vec<Option<u32>>,
    pub columns: Vec<Vec<u32>>,
}

/// Standard left-to-right reduction with a pivot-to-column table.
pub(crate) fn reduce_sequential(mut columns: Vec<Vec<u32>>, n_rows: usize) -> Reduced {
    let mut owner = vec![NONE; n_rows];
    let mut pivots = vec![None; columns.len()];
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            let o = owner[low as usize];
            if o == NONE {
                owner[low as usize] = j as u32;
                pivots[j] = Some(low);
                break;
            }
            columns[j] = symmetric_difference(&columns[j], &columns[o as usize]);
        }
    }
    Reduced { pivots, columns }
}

/// Lock-free style parallel reduction. Pivots are claimed with compare-and-swap;
/// a column that loses its pivot to an earlier column is reduced again. The
/// resulting pivots equal those of the sequential reduction.
pub(crate) fn reduce_parallel(columns: Vec<Vec<u32>>, n_rows: usize, threads: usize) -> Result<Reduced> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let cols: Vec<Mutex<Vec<u32>>> = columns.into_iter().map(Mutex::new).collect();
    let owner: Vec<AtomicU32> = (0..n_rows).map(|_| AtomicU32::new(NONE)).collect();

    fn work<'s>(j: usize, cols: &'s [Mutex<Vec<u32>>], owner: &'s [AtomicU32], scope: &rayon::Scope<'s>) {
        let mut col = cols[j].lock().expect("column lock").clone();
        loop {
            let Some(&low) = col.last() else {
                *cols[j].lock().expect("column lock") = col;
                return;
            };
            let o = owner[low as usize].load(Ordering::Acquire);
            if o == NONE || o as usize > j {
                *cols[j].lock().expect("column lock") = col.clone();
                if owner[low as usize]
                    .compare_exchange(o, j as u32, Ordering::AcqRel, Ordering::Acquire)
                    .is_ok()
                {
                    if o != NONE {
                        let o = o as usize;
                        scope.spawn(move |s| work(o, cols, owner, s));
                    }
                    return;
                }
            } else {
                let snapshot = cols[o as usize].lock().expect("column lock").clone();
                // the owner may be mid-way through a restart; only use a snapshot
                // that still ends at our pivot row
                if snapshot.last() == Some(&low) {
                    col = symmetric_difference(&col, &snapshot);
                }
            }
        }
    }

    pool.scope(|s| {
        for j in 0..cols.len() {
            let (cols, owner) = (&cols, &owner);
            s.spawn(move |s| work(j, cols, owner, s));
        }
    });
    let mut pivots = vec![None; cols.len()];
    for (row, o) in owner.iter().enumerate() {
        let o = o.load(Ordering::Acquire);
        if o != NONE {
            pivots[o as usize] = Some(row as u32);
        }
    }
    let columns = cols.into_iter().map(|m| m.into_inner().expect("column lock")).collect();
    Ok(Reduced { pivots, columns })
}
