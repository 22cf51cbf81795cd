use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Curvature of the one-edge instance of degree `n` with every length `s`.
pub fn regular_curvature(n: u32, s: f64) -> f64 {
    let c = s.cosh();
    2.0 * PI - n as f64 * (c / (2.0 * c - 1.0)).acos()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum RegularSolution {
    Root {
        s: f64,
        cosh_s: f64,
        residual: f64,
    },
    /// The curvature stays above `limit >= 0` for every length.
    NoSolution {
        limit: f64,
    },
}

/// Zero of [`regular_curvature`] by bisection to interval width `tol`.
pub fn regular_solve(n: u32, tol: f64) -> RegularSolution {
    if n <= 6 {
        return RegularSolution::NoSolution { limit: (6.0 - n as f64) * PI / 3.0 };
    }
    let tol = tol.max(f64::EPSILON);
    // the curvature decreases from 2 pi towards (6 - n) pi / 3 < 0
    let mut lo = 0.0;
    let mut hi = 1.0;
    while regular_curvature(n, hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if regular_curvature(n, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    RegularSolution::Root { s, cosh_s: s.cosh(), residual: regular_curvature(n, s) }
}
