use serde::{Deserialize, Serialize};

use super::FlowTrace;

/// Only samples with residual below this enter the rate fit.
pub const RATE_WINDOW_THRESHOLD: f64 = 1e-2;

const MIN_SAMPLES: usize = 10;

/// Least-squares fit `ln |K - target| ~ lambda t + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub lambda: f64,
    pub r_squared: f64,
    /// Points in the fitted window.
    pub samples: usize,
}

/// Exponential rate over the last quarter of the small-residual samples, or
/// `None` when fewer than ten samples qualify.
pub fn convergence_rate(trace: &FlowTrace) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.knorm > 0.0 && s.knorm < RATE_WINDOW_THRESHOLD)
        .map(|s| (s.t, s.knorm.ln()))
        .collect();
    if pts.len() < MIN_SAMPLES {
        return None;
    }
    let window = (pts.len().div_ceil(4)).max(3);
    let pts = &pts[pts.len() - window..];
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    if stt == 0.0 {
        return None;
    }
    let lambda = sty / stt;
    let r_squared = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Some(RateFit { lambda, r_squared, samples: pts.len() })
}
