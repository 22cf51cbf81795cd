//! Single hyper-ideal tetrahedron geometry.
//!
//! A hyper-ideal tetrahedron is determined by the six lengths of the edges
//! where its hexagonal faces meet. Vertices are numbered `0..4`; the edge
//! joining vertex triangles `i` and `j` is stored in a fixed slot, always in
//! the order `(01, 02, 03, 12, 13, 23)` (one-based: `12, 13, 14, 23, 24, 34`).
//!
//! Dihedral angles come from the hyperbolic cosine laws applied twice: first
//! the right-angled hexagon law gives the vertex-edge lengths of each vertex
//! triangle, then the triangle law gives the triangle's angle at the corner
//! sitting on edge `ij`, which equals the dihedral angle there. The value
//! computed before taking `arccos` (called `phi` here) is defined for every
//! positive length vector and leaves `[-1, 1]` exactly on the degenerate set,
//! which makes the continuous angle extension a clamp.

mod covolume;
mod jacobian;
mod lobachevsky;
mod quadrature;

pub use covolume::{
    covolume_along_path, covolume_at_origin, extended_covolume, extended_covolume_with_tol, line_integral, volume,
    COVOLUME_TOL,
};
pub use jacobian::{angle_jacobian, angle_jacobian_raw, jacobian_step, TetJacobian};
pub use lobachevsky::{clausen2, lobachevsky};
pub use quadrature::{integrate_adaptive, QuadratureResult};

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex pairs in slot order.
pub const SLOTS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Slot of the edge opposite each slot (`01 <-> 23`, `02 <-> 13`, `03 <-> 12`).
pub const OPPOSITE: [usize; 6] = [5, 4, 3, 2, 1, 0];

/// Replacement for zero coordinates before evaluating the cosine laws.
pub const GUARD_EPS: f64 = 1e-9;

/// Band around `phi = +-1` treated as a wall rather than a strict side.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("edge length must be positive and finite, got {0}")]
    NonPositiveLength(f64),
    #[error("tetrahedron is degenerate: phi[{slot}] = {phi}")]
    Degenerate { slot: usize, phi: f64 },
    #[error("tetrahedron is within the finite-difference margin of a wall: phi[{slot}] = {phi}")]
    NearWall { slot: usize, phi: f64 },
    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },
}

/// Slot index of the unordered vertex pair `{i, j}`.
pub fn slot_index(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => panic!("invalid vertex pair ({i}, {j})"),
    }
}

/// The six edge lengths of one tetrahedron, possibly generalized (any real).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TetEdgeLengths(pub [f64; 6]);

impl TetEdgeLengths {
    pub fn new(l: [f64; 6]) -> Self {
        Self(l)
    }

    pub fn constant(s: f64) -> Self {
        Self([s; 6])
    }

    /// Length of the edge between vertex triangles `i` and `j`, either order.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[slot_index(i, j)]
    }

    /// `l+`: every coordinate replaced by `max(0, l)`.
    pub fn clamped(&self) -> Self {
        Self(self.0.map(|x| x.max(0.0)))
    }

    /// `l+` with every coordinate below [`GUARD_EPS`] raised to it.
    pub fn guarded(&self) -> Self {
        Self(self.0.map(|x| if x > GUARD_EPS { x } else { GUARD_EPS }))
    }

    pub fn all_positive(&self) -> bool {
        self.0.iter().all(|&x| x > 0.0 && x.is_finite())
    }

    /// Relabel the vertices by `perm` (vertex `v` becomes `perm[v]`).
    pub fn relabel(&self, perm: [usize; 4]) -> Self {
        let mut out = [0.0; 6];
        for (slot, &(i, j)) in SLOTS.iter().enumerate() {
            out[slot_index(perm[i], perm[j])] = self.0[slot];
        }
        Self(out)
    }

    pub fn dot(&self, other: &[f64; 6]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

impl Index<usize> for TetEdgeLengths {
    type Output = f64;
    fn index(&self, slot: usize) -> &f64 {
        &self.0[slot]
    }
}

impl IndexMut<usize> for TetEdgeLengths {
    fn index_mut(&mut self, slot: usize) -> &mut f64 {
        &mut self.0[slot]
    }
}

/// Which part of `R^6_{>0}` a length vector lies in.
///
/// `Omega1..3` are the three degenerate components, labelled by the pairs
/// `01/23`, `02/13` and `03/12` whose angles become `pi` there. `Wall*` tags
/// are their frontiers, detected within [`DEGENERACY_TOL`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    NonDegenerate,
    Omega1,
    Omega2,
    Omega3,
    Wall1,
    Wall2,
    Wall3,
}

impl Region {
    fn omega(k: usize) -> Self {
        [Region::Omega1, Region::Omega2, Region::Omega3][k]
    }

    fn wall(k: usize) -> Self {
        [Region::Wall1, Region::Wall2, Region::Wall3][k]
    }

    /// Degenerate component index `0..3` for `Omega*` tags.
    pub fn omega_index(self) -> Option<usize> {
        match self {
            Region::Omega1 => Some(0),
            Region::Omega2 => Some(1),
            Region::Omega3 => Some(2),
            _ => None,
        }
    }

    pub fn is_nondegenerate(self) -> bool {
        self == Region::NonDegenerate
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Region::NonDegenerate => "L",
            Region::Omega1 => "O1",
            Region::Omega2 => "O2",
            Region::Omega3 => "O3",
            Region::Wall1 => "X1",
            Region::Wall2 => "X2",
            Region::Wall3 => "X3",
        }
    }
}

/// Dihedral angles in slot order, each in `[0, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TetAngles(pub [f64; 6]);

impl Index<usize> for TetAngles {
    type Output = f64;
    fn index(&self, slot: usize) -> &f64 {
        &self.0[slot]
    }
}

/// `(cosh x - 1) e^shift` for the vertex edge opposite `c` in the hexagon
/// with consecutive edges `a`, `b`. Written so nothing overflows or
/// cancels; a positive `shift` keeps very long edges from underflowing.
fn cosh_minus_one_scaled(a: f64, b: f64, c: f64, shift: f64) -> f64 {
    let d = (a - b).abs();
    let denom = (-2.0 * a).exp_m1() * (-2.0 * b).exp_m1();
    let near = (shift - 2.0 * a.min(b)).exp() * (1.0 + (-2.0 * d).exp());
    let far = (shift + c - a - b).exp() * (1.0 + (-2.0 * c).exp());
    2.0 * (near + far) / denom
}

/// Exponent of the leading term of `cosh x - 1` for long edges.
fn decay_exponent(a: f64, b: f64, c: f64) -> f64 {
    (-2.0 * a.min(b)).max(c - a - b)
}

fn check_positive(x: f64) -> Result<f64, GeometryError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(GeometryError::NonPositiveLength(x))
    }
}

/// Length of a vertex edge of a vertex triangle, from the right-angled
/// hexagon cosine law: `cosh x = (cosh a cosh b + cosh c) / (sinh a sinh b)`.
pub fn vertex_edge_length(a: f64, b: f64, c: f64) -> Result<f64, GeometryError> {
    let u = cosh_minus_one_scaled(check_positive(a)?, check_positive(b)?, check_positive(c)?, 0.0);
    Ok((u + (u * (u + 2.0)).sqrt()).ln_1p())
}

/// `phi` for the pair `{i, j}` evaluated in the vertex triangle at `i`.
///
/// Requires all six lengths positive; not checked here.
pub(crate) fn phi_at_vertex(l: &TetEdgeLengths, i: usize, j: usize) -> f64 {
    let mut others = (0..4).filter(|&v| v != i && v != j);
    let k = others.next().unwrap();
    let h = others.next().unwrap();
    let args = [
        (l.get(i, j), l.get(i, k), l.get(j, k)),
        (l.get(i, j), l.get(i, h), l.get(j, h)),
        (l.get(i, k), l.get(i, h), l.get(k, h)),
    ];
    // every u carries the factor 1 / sigma; phi is a ratio, so it cancels
    let shift = -args.iter().map(|&(a, b, c)| decay_exponent(a, b, c)).fold(f64::NEG_INFINITY, f64::max);
    let shift = shift.max(0.0);
    let sigma = (-shift).exp();
    let [u_jk, u_jh, u_kh] = args.map(|(a, b, c)| cosh_minus_one_scaled(a, b, c, shift));
    let num = u_jk + u_jh - u_kh + sigma * u_jk * u_jh;
    let den = (u_jk * (sigma * u_jk + 2.0)).sqrt() * (u_jh * (sigma * u_jh + 2.0)).sqrt();
    num / den
}

pub(crate) fn phi_all(l: &TetEdgeLengths) -> [f64; 6] {
    SLOTS.map(|(i, j)| phi_at_vertex(l, i, j))
}

/// `phi` for one slot; equals `cos` of the dihedral angle on the
/// nondegenerate set and is defined on all of `R^6_{>0}`.
pub fn phi(l: &TetEdgeLengths, slot: usize) -> Result<f64, GeometryError> {
    for &x in &l.0 {
        check_positive(x)?;
    }
    let (i, j) = SLOTS[slot];
    Ok(phi_at_vertex(l, i, j))
}

/// Same quantity computed from the other end of the edge. Agrees with
/// [`phi`] up to rounding.
pub fn phi_from_far_vertex(l: &TetEdgeLengths, slot: usize) -> Result<f64, GeometryError> {
    for &x in &l.0 {
        check_positive(x)?;
    }
    let (i, j) = SLOTS[slot];
    Ok(phi_at_vertex(l, j, i))
}

/// All six `phi` values at `guard(l+)`.
pub fn phi_guarded(l: &TetEdgeLengths) -> [f64; 6] {
    phi_all(&l.clamped().guarded())
}

/// Classify `guard(l+)` with the given wall tolerance.
pub fn classify(l: &TetEdgeLengths, tol: f64) -> Region {
    classify_phi(&phi_guarded(l), tol)
}

pub(crate) fn classify_phi(phi: &[f64; 6], tol: f64) -> Region {
    if phi.iter().all(|p| p.abs() < 1.0 - tol) {
        return Region::NonDegenerate;
    }
    // Slots k and 5 - k form the k-th opposite pair; both reach -1 together.
    let (k, m) = (0..3).map(|k| (k, phi[k].min(phi[OPPOSITE[k]]))).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    if m < -1.0 - tol {
        Region::omega(k)
    } else {
        Region::wall(k)
    }
}

/// Continuous extension of the dihedral angles to all of `R^6`:
/// `arccos(clamp(phi(guard(l+)), -1, 1))`.
///
/// As `l_ij -> 0+` the angle at `ij` tends to 0 (`1 - phi_ij` is of order
/// `l_ij^2`). At a guarded coordinate `phi` rounds to 1 and `arccos` would
/// turn that rounding into noise of order `1e-8`, so the limit is used.
pub fn extended_angles(l: &TetEdgeLengths) -> TetAngles {
    let phi = phi_guarded(l);
    TetAngles(std::array::from_fn(|k| if l[k] > GUARD_EPS { phi[k].clamp(-1.0, 1.0).acos() } else { 0.0 }))
}

/// Dihedral angles of a genuine hyper-ideal tetrahedron, without extension.
pub fn raw_angles(l: &TetEdgeLengths) -> Result<TetAngles, GeometryError> {
    for &x in &l.0 {
        check_positive(x)?;
    }
    let phi = phi_all(l);
    for (slot, &p) in phi.iter().enumerate() {
        if p.abs() >= 1.0 {
            return Err(GeometryError::Degenerate { slot, phi: p });
        }
    }
    Ok(TetAngles(phi.map(f64::acos)))
}

/// Cosine of every dihedral angle when all six lengths equal `s`.
pub fn symmetric_phi(s: f64) -> f64 {
    let c = s.cosh();
    c / (2.0 * c - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn slot_order_is_fixed() {
        for (slot, &(i, j)) in SLOTS.iter().enumerate() {
            assert_eq!(slot_index(i, j), slot);
            assert_eq!(slot_index(j, i), slot);
            let (k, h) = SLOTS[OPPOSITE[slot]];
            assert!(![i, j].contains(&k) && ![i, j].contains(&h));
        }
    }

    #[test]
    fn vertex_edge_symmetric_case() {
        for s in [0.1, 0.5, 1.0, 2.5, 7.0] {
            let x = vertex_edge_length(s, s, s).unwrap();
            let expected = s.cosh() / (s.cosh() - 1.0);
            assert!((x.cosh() - expected).abs() <= 1e-12 * expected, "s = {s}");
        }
        // cosh s = 2 is the fixed point of cosh s / (cosh s - 1)
        let s = 2f64.acosh();
        assert!((vertex_edge_length(s, s, s).unwrap() - s).abs() < 1e-14);
    }

    #[test]
    fn vertex_edge_shrinks_for_long_edges() {
        let mut prev = f64::INFINITY;
        for s in [1.0, 5.0, 20.0, 100.0, 300.0, 600.0] {
            let x = vertex_edge_length(s, s, s).unwrap();
            assert!(x > 0.0 && x.is_finite() && x < prev, "s = {s}, x = {x}");
            prev = x;
        }
    }

    #[test]
    fn vertex_edge_rejects_nonpositive() {
        assert!(vertex_edge_length(0.0, 1.0, 1.0).is_err());
        assert!(vertex_edge_length(1.0, -2.0, 1.0).is_err());
        assert!(vertex_edge_length(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn symmetric_phi_limits() {
        for s in [0.05, 0.7, 3.0, 9.0] {
            let l = TetEdgeLengths::constant(s);
            for slot in 0..6 {
                assert!((phi(&l, slot).unwrap() - symmetric_phi(s)).abs() < 1e-13);
            }
        }
        assert!((phi(&TetEdgeLengths::constant(1e-4), 0).unwrap() - 1.0).abs() < 1e-7);
        assert!((phi(&TetEdgeLengths::constant(40.0), 0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_lengths_are_nondegenerate() {
        for s in [1e-3, 0.2, 1.0, 4.0, 30.0] {
            assert_eq!(classify(&TetEdgeLengths::constant(s), DEGENERACY_TOL), Region::NonDegenerate);
        }
    }

    #[test]
    fn extended_angles_ignore_negative_part() {
        let s = 0.8;
        let a = extended_angles(&TetEdgeLengths([-1.0, s, s, s, s, s]));
        let b = extended_angles(&TetEdgeLengths([0.0, s, s, s, s, s]));
        assert_eq!(a, b);
        let c = extended_angles(&TetEdgeLengths::constant(s));
        for slot in 0..6 {
            assert!((c[slot] - symmetric_phi(s).acos()).abs() < 1e-13);
        }
    }

    #[test]
    fn extended_angles_pin_to_pi_in_degenerate_component() {
        // long 01 and 23 against short others lands in Omega1
        let l = TetEdgeLengths([3.0, 0.1, 0.1, 0.1, 0.1, 3.0]);
        let region = classify(&l, DEGENERACY_TOL);
        let a = extended_angles(&l);
        assert!(region.omega_index().is_some(), "{region:?}");
        let k = region.omega_index().unwrap();
        assert_eq!(a[k], PI);
        assert_eq!(a[OPPOSITE[k]], PI);
        assert!(raw_angles(&l).is_err());
    }

    #[test]
    fn raw_and_extended_agree_bitwise_inside() {
        let l = TetEdgeLengths([0.9, 1.1, 1.3, 0.7, 1.0, 1.2]);
        assert_eq!(raw_angles(&l).unwrap(), extended_angles(&l));
    }

    #[test]
    fn relabel_identity_and_inverse() {
        let l = TetEdgeLengths([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(l.relabel([0, 1, 2, 3]), l);
        let p = [2, 0, 3, 1];
        let mut inv = [0; 4];
        for (v, &w) in p.iter().enumerate() {
            inv[w] = v;
        }
        assert_eq!(l.relabel(p).relabel(inv), l);
    }
}
