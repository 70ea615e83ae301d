use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::norm;

/// Points of R^d stored row-major, each carrying the id it had in the
/// originating sample. Subsets keep the ids of their parent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    ids: Vec<usize>,
    /// Master seed of the draw, if the cloud was sampled.
    pub seed: Option<u64>,
}

impl PointCloud {
    pub fn empty(dim: usize) -> Self {
        PointCloud {
            dim,
            coords: Vec::new(),
            ids: Vec::new(),
            seed: None,
        }
    }

    /// Cloud from explicit points; ids are `0..n`.
    pub fn from_points<P: AsRef<[f64]>>(dim: usize, pts: &[P]) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("dimension must be >= 2, got {dim}")));
        }
        let mut coords = Vec::with_capacity(dim * pts.len());
        for p in pts {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::invalid(format!(
                    "point of dimension {} in a {dim}-dimensional cloud",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid("point coordinates must be finite"));
            }
            coords.extend_from_slice(p);
        }
        Ok(PointCloud {
            dim,
            coords,
            ids: (0..pts.len()).collect(),
            seed: None,
        })
    }

    pub(crate) fn from_raw(dim: usize, coords: Vec<f64>, seed: Option<u64>) -> Self {
        let n = coords.len() / dim;
        PointCloud {
            dim,
            coords,
            ids: (0..n).collect(),
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn id(&self, i: usize) -> usize {
        self.ids[i]
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn norm(&self, i: usize) -> f64 {
        norm(self.point(i))
    }

    /// The points at the given local indices, keeping their ids.
    pub fn select(&self, local: &[usize]) -> PointCloud {
        let mut coords = Vec::with_capacity(local.len() * self.dim);
        let mut ids = Vec::with_capacity(local.len());
        for &i in local {
            coords.extend_from_slice(self.point(i));
            ids.push(self.ids[i]);
        }
        PointCloud {
            dim: self.dim,
            coords,
            ids,
            seed: self.seed,
        }
    }

    /// Points satisfying `keep`, in their original order.
    pub fn filter(&self, mut keep: impl FnMut(&[f64]) -> bool) -> PointCloud {
        let local: Vec<usize> = (0..self.len()).filter(|&i| keep(self.point(i))).collect();
        self.select(&local)
    }

    /// Every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> PointCloud {
        let mut out = self.clone();
        out.coords.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// Every point shifted by `v`.
    pub fn translated(&self, v: &[f64]) -> PointCloud {
        let mut out = self.clone();
        for p in out.coords.chunks_exact_mut(self.dim) {
            p.iter_mut().zip(v).for_each(|(c, x)| *c += x);
        }
        out
    }
}
