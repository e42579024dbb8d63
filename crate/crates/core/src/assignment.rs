//! Linear assignment by the Hungarian method (shortest augmenting paths with
//! dual potentials), O(k³).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Returns the permutation `perm` maximizing `Σᵢ profit[i][perm[i]]`.
///
/// `profit` is a row-major `k × k` matrix.
pub fn hungarian<F: Scalar>(profit: &[F], k: usize) -> Result<Vec<usize>> {
    if profit.len() != k * k {
        return Err(Error::DimensionMismatch {
            expected: k * k,
            got: profit.len(),
        });
    }
    if profit.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite assignment profit".into()));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    // 1-based potentials; row 0 / column 0 are the virtual source.
    let cost = |i: usize, j: usize| -profit[(i - 1) * k + (j - 1)];
    let inf = F::infinity();
    let mut u = vec![F::zero(); k + 1];
    let mut v = vec![F::zero(); k + 1];
    let mut matched_row = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];

    for i in 1..=k {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0usize; k];
    for j in 1..=k {
        perm[matched_row[j] - 1] = j - 1;
    }
    Ok(perm)
}
