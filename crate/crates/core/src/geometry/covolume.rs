//! Extended co-volume `F(l) = F(0) + int_0^l sum_ij a_ij dl_ij` and volume.
//!
//! The one-form is closed and the angles are continuous, so the integral is
//! evaluated along straight segments. The integrand is only piecewise
//! smooth: it has kinks where the segment crosses a wall of a degenerate
//! component or a coordinate hyperplane, and the segment is split there
//! before adaptive quadrature.

use std::f64::consts::PI;

use super::quadrature::integrate_adaptive;
use super::{classify, extended_angles, phi_guarded, GeometryError, Region, TetEdgeLengths, DEGENERACY_TOL, OPPOSITE};

/// Default absolute tolerance of the co-volume line integral.
pub const COVOLUME_TOL: f64 = 1e-9;

const SCAN_POINTS: usize = 32;
const BISECTION_STEPS: usize = 60;

/// `F(0, ..., 0) = 16 Lobachevsky(pi / 4)`, twice the volume of the regular
/// ideal octahedron.
pub fn covolume_at_origin() -> f64 {
    16.0 * super::lobachevsky(PI / 4.0)
}

fn lerp(from: &TetEdgeLengths, to: &TetEdgeLengths, t: f64) -> TetEdgeLengths {
    let mut out = [0.0; 6];
    for (i, o) in out.iter_mut().enumerate() {
        *o = from[i] + t * (to[i] - from[i]);
    }
    TetEdgeLengths(out)
}

/// Signed distance-like quantities that change sign exactly at the kinks.
fn kink_indicators(p: &TetEdgeLengths) -> [f64; 9] {
    let phi = phi_guarded(p);
    let mut out = [0.0; 9];
    for k in 0..3 {
        out[k] = phi[k].min(phi[OPPOSITE[k]]) + 1.0;
    }
    out[3..].copy_from_slice(&p.0);
    out
}

fn breakpoints(from: &TetEdgeLengths, to: &TetEdgeLengths) -> Vec<f64> {
    let mut cuts = vec![0.0, 1.0];
    let grid: Vec<f64> = (0..=SCAN_POINTS).map(|i| i as f64 / SCAN_POINTS as f64).collect();
    let values: Vec<[f64; 9]> = grid.iter().map(|&t| kink_indicators(&lerp(from, to, t))).collect();
    for w in 0..SCAN_POINTS {
        for q in 0..9 {
            let (va, vb) = (values[w][q], values[w + 1][q]);
            if (va > 0.0) == (vb > 0.0) {
                continue;
            }
            let (mut lo, mut hi) = (grid[w], grid[w + 1]);
            let lo_sign = va > 0.0;
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if (kink_indicators(&lerp(from, to, mid))[q] > 0.0) == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    cuts
}

/// `int sum_ij a_ij dl_ij` along the straight segment `from -> to`.
pub fn line_integral(from: &TetEdgeLengths, to: &TetEdgeLengths, tol: f64) -> Result<f64, GeometryError> {
    let mut dir = [0.0; 6];
    for (i, d) in dir.iter_mut().enumerate() {
        *d = to[i] - from[i];
    }
    if dir.iter().all(|&d| d == 0.0) {
        return Ok(0.0);
    }
    let cuts = breakpoints(from, to);
    let pieces = (cuts.len() - 1) as f64;
    let mut total = 0.0;
    let mut achieved = 0.0;
    for w in cuts.windows(2) {
        let integrand =
            |t: f64| extended_angles(&lerp(from, to, t)).0.iter().zip(&dir).map(|(a, d)| a * d).sum::<f64>();
        match integrate_adaptive(integrand, w[0], w[1], tol / pieces) {
            Ok(r) => {
                total += r.value;
                achieved += r.error;
            }
            Err((_, err)) => {
                return Err(GeometryError::Quadrature { requested: tol, achieved: achieved + err });
            }
        }
    }
    Ok(total)
}

/// Extended co-volume at `l` with the default tolerance [`COVOLUME_TOL`].
pub fn extended_covolume(l: &TetEdgeLengths) -> Result<f64, GeometryError> {
    extended_covolume_with_tol(l, COVOLUME_TOL)
}

pub fn extended_covolume_with_tol(l: &TetEdgeLengths, tol: f64) -> Result<f64, GeometryError> {
    Ok(covolume_at_origin() + line_integral(&TetEdgeLengths([0.0; 6]), l, tol)?)
}

/// Co-volume integrated along the polyline `0 -> path[0] -> path[1] -> ...`,
/// ending at the last point.
pub fn covolume_along_path(path: &[TetEdgeLengths], tol: f64) -> Result<f64, GeometryError> {
    let mut total = covolume_at_origin();
    let mut prev = TetEdgeLengths([0.0; 6]);
    let segs = path.len().max(1) as f64;
    for p in path {
        total += line_integral(&prev, p, tol / segs)?;
        prev = *p;
    }
    Ok(total)
}

/// Hyperbolic volume `(F - sum a_ij l_ij) / 2` of a nondegenerate tetrahedron.
pub fn volume(l: &TetEdgeLengths) -> Result<f64, GeometryError> {
    for &x in &l.0 {
        if !(x > 0.0) {
            return Err(GeometryError::NonPositiveLength(x));
        }
    }
    if classify(l, DEGENERACY_TOL) != Region::NonDegenerate {
        let phi = phi_guarded(l);
        let (slot, p) =
            phi.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(s, &p)| (s, p)).unwrap();
        return Err(GeometryError::Degenerate { slot, phi: p });
    }
    let f = extended_covolume(l)?;
    let a = extended_angles(l);
    Ok(0.5 * (f - l.dot(&a.0)))
}
