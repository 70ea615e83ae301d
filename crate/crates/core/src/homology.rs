//! Betti numbers over GF(2).
//!
//! `beta_k = #k-simplices - rank d_k - rank d_{k+1}` with ranks obtained by
//! column reduction of bit-packed boundary matrices.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cech::{ComponentDecomposition, SimplicialComplex};
use crate::error::{Error, Result};

/// Boundary map from m-chains to (m-1)-chains. Columns are m-simplices in
/// lexicographic order, each listing the row indices of its faces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryMatrix {
    rows: usize,
    cols: Vec<Vec<usize>>,
}

impl BoundaryMatrix {
    /// `d_m` of `complex`; `m >= 1`.
    pub fn of(complex: &SimplicialComplex, m: usize) -> Self {
        assert!(m >= 1, "boundary map d_0 is zero");
        let faces = complex.simplices(m - 1);
        let index: HashMap<&[usize], usize> =
            faces.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let mut face = Vec::with_capacity(m);
        let cols = complex
            .simplices(m)
            .iter()
            .map(|s| {
                let mut col: Vec<usize> = (0..s.len())
                    .map(|skip| {
                        face.clear();
                        face.extend(s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v));
                        *index.get(face.as_slice()).expect("complex is downward closed")
                    })
                    .collect();
                col.sort_unstable();
                col
            })
            .collect();
        BoundaryMatrix {
            rows: faces.len(),
            cols,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.cols
    }

    /// Rank over GF(2) by column reduction against pivots on the lowest row.
    pub fn rank(&self) -> usize {
        let words = self.rows.div_ceil(64);
        let mut pivots: HashMap<usize, Vec<u64>> = HashMap::new();
        let mut rank = 0;
        for col in &self.cols {
            let mut bits = vec![0u64; words];
            for &r in col {
                bits[r / 64] ^= 1 << (r % 64);
            }
            while let Some(low) = lowest(&bits) {
                match pivots.get(&low) {
                    Some(p) => bits.iter_mut().zip(p).for_each(|(a, b)| *a ^= b),
                    None => {
                        pivots.insert(low, bits);
                        rank += 1;
                        break;
                    }
                }
            }
        }
        rank
    }

    /// Whether `self ∘ upper` vanishes, where `upper` maps into the columns
    /// of `self`.
    pub fn composes_to_zero(&self, upper: &BoundaryMatrix) -> bool {
        upper.cols.iter().all(|col| {
            let mut acc: HashMap<usize, bool> = HashMap::new();
            for &c in col {
                for &r in &self.cols[c] {
                    let e = acc.entry(r).or_insert(false);
                    *e = !*e;
                }
            }
            acc.values().all(|&odd| !odd)
        })
    }
}

fn lowest(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .rev()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
}

/// `beta_k` of the complex. Dimensions above the cap are treated as absent.
pub fn betti(complex: &SimplicialComplex, k: usize) -> Result<usize> {
    if k > complex.dim_cap() {
        return Err(Error::invalid(format!(
            "beta_{k} requested from a complex capped at dimension {}",
            complex.dim_cap()
        )));
    }
    let n_k = complex.count(k);
    if n_k == 0 {
        return Ok(0);
    }
    let lower = (k >= 1).then(|| BoundaryMatrix::of(complex, k));
    let upper = (k < complex.dim_cap()).then(|| BoundaryMatrix::of(complex, k + 1));
    if let (Some(lo), Some(up)) = (&lower, &upper) {
        debug_assert!(lo.composes_to_zero(up), "boundary of a boundary must vanish");
    }
    let r_k = lower.as_ref().map_or(0, BoundaryMatrix::rank);
    let r_k1 = upper.as_ref().map_or(0, BoundaryMatrix::rank);
    Ok(n_k - r_k - r_k1)
}

/// `(size, beta_k)` for each component, in decomposition order.
pub fn betti_per_component(decomp: &ComponentDecomposition, k: usize) -> Result<Vec<(usize, usize)>> {
    decomp
        .parts()
        .par_iter()
        .map(|part| {
            // a component with at most k+1 points carries no k-cycle
            if part.len() < k + 2 && k > 0 {
                return Ok((part.len(), 0));
            }
            let complex = crate::cech::build_cech(part, decomp.scale(), k + 1)?;
            Ok((part.len(), betti(&complex, k)?))
        })
        .collect()
}
