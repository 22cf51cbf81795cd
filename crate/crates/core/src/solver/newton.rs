use std::time::Instant;

use nalgebra::{Cholesky, DVector};

use crate::curvature::{curvature_jacobian, extended_curvature, is_nondegenerate, CurvatureVector, MetricVector};
use crate::triangulation::Triangulation;

use super::flow::check_inputs;
use super::{FlowConfig, SolveReport, SolverError, Status};

pub(crate) struct NewtonOutcome {
    pub converged: bool,
    pub metric: Vec<f64>,
    /// Sup norm of `K - target` at `metric`.
    pub residual: f64,
    pub iterations: usize,
    pub failure: Option<String>,
}

fn residual(tri: &Triangulation, l: &[f64], target: &CurvatureVector) -> Vec<f64> {
    let k = extended_curvature(tri, &MetricVector(l.to_vec()));
    k.0.iter().zip(&target.0).map(|(a, b)| a - b).collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn newton_iterate(
    tri: &Triangulation,
    l0: &MetricVector,
    target: &CurvatureVector,
    config: &FlowConfig,
) -> Result<NewtonOutcome, SolverError> {
    let start = is_nondegenerate(tri, l0);
    if let Some((edge, &value)) = l0.0.iter().enumerate().find(|(_, x)| **x <= 0.0) {
        return Err(SolverError::NonPositiveStart { edge, value });
    }
    if let Some((tet, &region)) = start.regions.iter().enumerate().find(|(_, r)| !r.is_nondegenerate()) {
        return Err(SolverError::DegenerateStart { tet, region });
    }

    let mut l = l0.0.clone();
    let mut r = residual(tri, &l, target);
    let mut iterations = 0;
    let outcome = |l: Vec<f64>, r: &[f64], iterations, failure: Option<String>| NewtonOutcome {
        converged: failure.is_none(),
        metric: l,
        residual: sup(r),
        iterations,
        failure,
    };

    loop {
        if sup(&r) < config.newton_tol {
            return Ok(outcome(l, &r, iterations, None));
        }
        if iterations >= config.newton_max_iterations {
            return Ok(outcome(l, &r, iterations, Some(format!("{iterations} iterations without convergence"))));
        }
        let jac = match curvature_jacobian(tri, &MetricVector(l.clone())) {
            Ok(j) => j,
            Err(e) => return Ok(outcome(l, &r, iterations, Some(format!("jacobian: {e}")))),
        };
        // K(l + d) = target to first order: (-J) d = K - target, with -J positive definite
        let Some(chol) = Cholesky::new(-jac.to_dense()) else {
            return Ok(outcome(l, &r, iterations, Some("jacobian factorization failed".into())));
        };
        let delta = chol.solve(&DVector::from_column_slice(&r));

        let current = norm2(&r);
        let mut alpha = 1.0;
        let mut rejections = 0;
        let accepted = loop {
            let trial: Vec<f64> = l.iter().zip(delta.iter()).map(|(a, d)| a + alpha * d).collect();
            if is_nondegenerate(tri, &MetricVector(trial.clone())).ok {
                let rt = residual(tri, &trial, target);
                if norm2(&rt) <= current || sup(&rt) < config.newton_tol {
                    break Some((trial, rt));
                }
            }
            rejections += 1;
            if rejections >= config.newton_max_rejections {
                break None;
            }
            alpha *= 0.5;
        };
        let Some((trial, rt)) = accepted else {
            return Ok(outcome(l, &r, iterations, Some(format!("{rejections} consecutive rejected steps"))));
        };
        l = trial;
        r = rt;
        iterations += 1;
    }
}

/// Damped Newton on `K(l) = target` from a nondegenerate metric.
///
/// Status is `newton_converged` or, on failure, `max_time` so that callers
/// fall back to the flow.
pub fn newton_solve(
    tri: &Triangulation,
    l0: &MetricVector,
    target: &CurvatureVector,
    config: &FlowConfig,
) -> Result<SolveReport, SolverError> {
    check_inputs(tri, l0, target, config)?;
    let started = Instant::now();
    let out = newton_iterate(tri, l0, target, config)?;
    Ok(SolveReport {
        status: if out.converged { Status::NewtonConverged } else { Status::MaxTime },
        final_time: 0.0,
        final_metric: out.metric,
        final_curvature_norm: out.residual,
        rate: None,
        steps: 0,
        newton_iterations: out.iterations,
        handoff_time: None,
        diverged_at: None,
        advisories: out.failure.into_iter().collect(),
        wall_time: started.elapsed().as_secs_f64(),
    })
}
