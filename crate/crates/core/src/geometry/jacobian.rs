use nalgebra::{Matrix6, SymmetricEigen};

use super::{extended_angles, phi_all, GeometryError, TetEdgeLengths};

/// Relative step of the central differences.
pub const JACOBIAN_REL_STEP: f64 = 1e-6;

/// Step used for slot length `x`.
pub fn jacobian_step(x: f64) -> f64 {
    JACOBIAN_REL_STEP * x.abs().max(1.0)
}

/// `d a_ij / d l_kh` for one tetrahedron, slot-ordered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TetJacobian {
    pub m: [[f64; 6]; 6],
}

impl TetJacobian {
    pub fn matrix(&self) -> Matrix6<f64> {
        Matrix6::from_fn(|r, c| self.m[r][c])
    }

    /// Largest `|m[r][c] - m[c][r]|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..6 {
            for c in 0..r {
                worst = worst.max((self.m[r][c] - self.m[c][r]).abs());
            }
        }
        worst
    }

    pub fn symmetrized(&self) -> Self {
        let mut m = self.m;
        for r in 0..6 {
            for c in 0..6 {
                m[r][c] = 0.5 * (self.m[r][c] + self.m[c][r]);
            }
        }
        Self { m }
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> [f64; 6] {
        let sym = self.symmetrized().matrix();
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3], ev[4], ev[5]]
    }
}

/// Fails unless every central-difference probe around `l` stays at least
/// `10 h` away from the walls in `phi`.
fn check_margin(l: &TetEdgeLengths) -> Result<(), GeometryError> {
    for &x in &l.0 {
        if !(x > 10.0 * jacobian_step(x)) || !x.is_finite() {
            return Err(GeometryError::NonPositiveLength(x));
        }
    }
    let margin = 10.0 * l.0.iter().map(|&x| jacobian_step(x)).fold(0.0, f64::max);
    for (slot, &p) in phi_all(l).iter().enumerate() {
        if p.abs() >= 1.0 {
            return Err(GeometryError::Degenerate { slot, phi: p });
        }
        if 1.0 - p.abs() < margin {
            return Err(GeometryError::NearWall { slot, phi: p });
        }
    }
    Ok(())
}

/// Unsymmetrized central-difference Jacobian `m[r][c] = d a_r / d l_c`.
pub fn angle_jacobian_raw(l: &TetEdgeLengths) -> Result<TetJacobian, GeometryError> {
    check_margin(l)?;
    let mut m = [[0.0; 6]; 6];
    for c in 0..6 {
        let h = jacobian_step(l[c]);
        let mut plus = *l;
        let mut minus = *l;
        plus[c] += h;
        minus[c] -= h;
        let ap = extended_angles(&plus);
        let am = extended_angles(&minus);
        // divide by the step actually represented in floating point
        let width = plus[c] - minus[c];
        for (r, row) in m.iter_mut().enumerate() {
            row[c] = (ap[r] - am[r]) / width;
        }
    }
    Ok(TetJacobian { m })
}

/// Symmetrized angle Jacobian, positive definite on the nondegenerate set.
pub fn angle_jacobian(l: &TetEdgeLengths) -> Result<TetJacobian, GeometryError> {
    Ok(angle_jacobian_raw(l)?.symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::symmetric_phi;

    #[test]
    fn symmetric_point_is_positive_definite() {
        let j = angle_jacobian_raw(&TetEdgeLengths::constant(1.0)).unwrap();
        assert!(j.asymmetry() < 1e-6);
        assert!(j.eigenvalues()[0] > 0.0);
    }

    #[test]
    fn row_sum_matches_symmetric_derivative() {
        // moving all six lengths together traces the symmetric family
        let s: f64 = 0.9;
        let j = angle_jacobian(&TetEdgeLengths::constant(s)).unwrap();
        let row: f64 = j.m[0].iter().sum();
        let c = s.cosh();
        let dphi = -s.sinh() / (2.0 * c - 1.0).powi(2);
        let expected = -dphi / (1.0 - symmetric_phi(s).powi(2)).sqrt();
        assert!((row - expected).abs() < 1e-8, "{row} vs {expected}");
    }

    #[test]
    fn degenerate_input_is_rejected() {
        let l = TetEdgeLengths([3.0, 0.1, 0.1, 0.1, 0.1, 3.0]);
        match angle_jacobian(&l) {
            Err(GeometryError::Degenerate { .. }) | Err(GeometryError::NearWall { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(angle_jacobian(&TetEdgeLengths([0.0, 1.0, 1.0, 1.0, 1.0, 1.0])).is_err());
    }
}
