//! Per-edge curvature `K_e = 2 pi - sum of extended angles around e`, its
//! Jacobian, and the energy whose gradient is `-(K - target)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    self, angle_jacobian, angle_jacobian_raw, classify, extended_angles, raw_angles, GeometryError, Region,
    TetEdgeLengths, COVOLUME_TOL, DEGENERACY_TOL,
};
use crate::triangulation::Triangulation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error("metric has {found} entries, triangulation has {expected} edges")]
    Dimension { expected: usize, found: usize },
    #[error("tetrahedron {tet}: {source}")]
    Geometry {
        tet: usize,
        #[source]
        source: GeometryError,
    },
}

/// Length per edge class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricVector(pub Vec<f64>);

/// Curvature per edge class, in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurvatureVector(pub Vec<f64>);

impl MetricVector {
    pub fn constant(num_edges: usize, value: f64) -> Self {
        Self(vec![value; num_edges])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl CurvatureVector {
    pub fn zeros(num_edges: usize) -> Self {
        Self(vec![0.0; num_edges])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Sup norm of `self - target`.
    pub fn distance(&self, target: &CurvatureVector) -> f64 {
        self.0.iter().zip(&target.0).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub fn check_dimension(tri: &Triangulation, len: usize) -> Result<(), CurvatureError> {
    if len == tri.num_edges() {
        Ok(())
    } else {
        Err(CurvatureError::Dimension { expected: tri.num_edges(), found: len })
    }
}

/// Slot-ordered lengths of one tetrahedron.
pub fn pull_tet_lengths(tri: &Triangulation, metric: &MetricVector, tet: usize) -> TetEdgeLengths {
    TetEdgeLengths(tri.tet_classes(tet).map(|e| metric.0[e]))
}

fn assemble(
    tri: &Triangulation,
    mut angles: impl FnMut(usize) -> Result<[f64; 6], CurvatureError>,
) -> Result<CurvatureVector, CurvatureError> {
    let mut k = vec![2.0 * PI; tri.num_edges()];
    for tet in 0..tri.num_tets() {
        let a = angles(tet)?;
        for (slot, &e) in tri.tet_classes(tet).iter().enumerate() {
            k[e] -= a[slot];
        }
    }
    Ok(CurvatureVector(k))
}

/// Extended curvature, defined for every real metric.
pub fn extended_curvature(tri: &Triangulation, metric: &MetricVector) -> CurvatureVector {
    assert_eq!(metric.len(), tri.num_edges(), "metric dimension");
    assemble(tri, |t| Ok(extended_angles(&pull_tet_lengths(tri, metric, t)).0)).expect("extended angles are total")
}

/// Curvature from the unextended dihedral angles; fails on any degenerate
/// tetrahedron.
pub fn raw_curvature(tri: &Triangulation, metric: &MetricVector) -> Result<CurvatureVector, CurvatureError> {
    check_dimension(tri, metric.len())?;
    assemble(tri, |tet| {
        raw_angles(&pull_tet_lengths(tri, metric, tet))
            .map(|a| a.0)
            .map_err(|source| CurvatureError::Geometry { tet, source })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Nondegeneracy {
    pub ok: bool,
    pub regions: Vec<Region>,
}

/// Whether every length is positive and every tetrahedron nondegenerate.
pub fn is_nondegenerate(tri: &Triangulation, metric: &MetricVector) -> Nondegeneracy {
    let regions: Vec<Region> =
        (0..tri.num_tets()).map(|t| classify(&pull_tet_lengths(tri, metric, t), DEGENERACY_TOL)).collect();
    let ok = metric.0.iter().all(|&x| x > 0.0) && regions.iter().all(|r| r.is_nondegenerate());
    Nondegeneracy { ok, regions }
}

/// Sparse `|E| x |E|` matrix of `dK_e / dl_f`, one map per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureJacobian {
    rows: Vec<BTreeMap<usize, f64>>,
}

impl CurvatureJacobian {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.rows[r].get(&c).copied().unwrap_or(0.0)
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows[r].iter().map(|(&c, &v)| (c, v))
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(BTreeMap::len).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| self.get(r, c))
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, row) in self.rows.iter().enumerate() {
            for (&c, &v) in row {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn symmetrized(&self) -> Self {
        let mut rows = vec![BTreeMap::new(); self.dim()];
        for (r, row) in self.rows.iter().enumerate() {
            for (&c, &v) in row {
                *rows[r].entry(c).or_insert(0.0) += 0.5 * v;
                *rows[c].entry(r).or_insert(0.0) += 0.5 * v;
            }
        }
        Self { rows }
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.to_dense();
        let sym = (&d + d.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|(&c, &v)| v * x[c]).sum()).collect()
    }
}

fn assemble_jacobian(
    tri: &Triangulation,
    metric: &MetricVector,
    per_tet: fn(&TetEdgeLengths) -> Result<geometry::TetJacobian, GeometryError>,
) -> Result<CurvatureJacobian, CurvatureError> {
    check_dimension(tri, metric.len())?;
    let mut rows = vec![BTreeMap::new(); tri.num_edges()];
    for tet in 0..tri.num_tets() {
        let classes = tri.tet_classes(tet);
        let j =
            per_tet(&pull_tet_lengths(tri, metric, tet)).map_err(|source| CurvatureError::Geometry { tet, source })?;
        let m = j.matrix();
        for (r, &e) in classes.iter().enumerate() {
            for (c, &f) in classes.iter().enumerate() {
                *rows[e].entry(f).or_insert(0.0) -= m[(r, c)];
            }
        }
    }
    Ok(CurvatureJacobian { rows })
}

/// Curvature Jacobian from unsymmetrized per-tetrahedron finite differences.
pub fn curvature_jacobian_raw(tri: &Triangulation, metric: &MetricVector) -> Result<CurvatureJacobian, CurvatureError> {
    assemble_jacobian(tri, metric, angle_jacobian_raw)
}

/// Symmetrized curvature Jacobian; negative definite on the nondegenerate set.
pub fn curvature_jacobian(tri: &Triangulation, metric: &MetricVector) -> Result<CurvatureJacobian, CurvatureError> {
    Ok(assemble_jacobian(tri, metric, angle_jacobian)?.symmetrized())
}

/// `sum_tet F(l_tet) - 2 pi sum_e l_e + sum_e target_e l_e`, whose gradient
/// is `-(K - target)`.
pub fn energy(tri: &Triangulation, metric: &MetricVector, target: &CurvatureVector) -> Result<f64, CurvatureError> {
    energy_with_tol(tri, metric, target, COVOLUME_TOL)
}

/// [`energy`] with an explicit per-tetrahedron quadrature tolerance.
pub fn energy_with_tol(
    tri: &Triangulation,
    metric: &MetricVector,
    target: &CurvatureVector,
    tol: f64,
) -> Result<f64, CurvatureError> {
    check_dimension(tri, metric.len())?;
    check_dimension(tri, target.len())?;
    let mut total = 0.0;
    for tet in 0..tri.num_tets() {
        total += geometry::extended_covolume_with_tol(&pull_tet_lengths(tri, metric, tet), tol)
            .map_err(|source| CurvatureError::Geometry { tet, source })?;
    }
    for (l, kbar) in metric.0.iter().zip(&target.0) {
        total += (kbar - 2.0 * PI) * l;
    }
    Ok(total)
}

/// Uniform bound on `|K_e - target_e|` style derivatives: `max(pi d - 2 pi, 2 pi)`.
pub fn curvature_bound(tri: &Triangulation) -> f64 {
    tri.degrees().iter().map(|&d| PI * d as f64 - 2.0 * PI).fold(2.0 * PI, f64::max)
}
