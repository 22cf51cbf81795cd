use std::f64::consts::PI;
use std::time::Instant;

use crate::curvature::{
    check_dimension, energy_with_tol, extended_curvature, is_nondegenerate, raw_curvature, CurvatureVector,
    MetricVector,
};
use crate::geometry::Region;
use crate::triangulation::Triangulation;

use super::newton::newton_iterate;
use super::{
    convergence_rate, Event, EventKind, FlowConfig, FlowTrace, Method, NewtonMode, Sample, SolveReport, SolverError,
    Status,
};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Extended,
    Raw,
}

enum Stop {
    Converged,
    MaxTime,
    Handoff,
    Diverged(String),
}

/// State of one integration run, owned by that run.
struct Run<'a> {
    tri: &'a Triangulation,
    target: &'a CurvatureVector,
    config: &'a FlowConfig,
    field: Field,
    l: Vec<f64>,
    t: f64,
    steps: usize,
    h: f64,
    regions: Vec<Region>,
    trace: FlowTrace,
    advisories: Vec<String>,
    diverged_at: Option<f64>,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn axpy(l: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    l.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

pub(crate) fn check_inputs(
    tri: &Triangulation,
    l0: &MetricVector,
    target: &CurvatureVector,
    config: &FlowConfig,
) -> Result<(), SolverError> {
    config.validate()?;
    check_dimension(tri, l0.len())?;
    check_dimension(tri, target.len())?;
    if let Some((edge, &value)) = target.0.iter().enumerate().find(|(_, v)| !(**v < 2.0 * PI)) {
        return Err(SolverError::Target { edge, value });
    }
    Ok(())
}

impl<'a> Run<'a> {
    fn new(
        tri: &'a Triangulation,
        l0: &MetricVector,
        target: &'a CurvatureVector,
        config: &'a FlowConfig,
        field: Field,
    ) -> Self {
        let regions = is_nondegenerate(tri, l0).regions;
        let mut trace = FlowTrace::default();
        for (tet, r) in regions.iter().enumerate() {
            if let Some(k) = r.omega_index() {
                trace.events.push(Event { t: 0.0, kind: EventKind::EnteredOmega { tet, component: k + 1 } });
            }
        }
        for (edge, &x) in l0.0.iter().enumerate() {
            if x <= 0.0 {
                trace.events.push(Event { t: 0.0, kind: EventKind::ClampedCoordinate { edge } });
            }
        }
        Self {
            tri,
            target,
            config,
            field,
            l: l0.0.clone(),
            t: 0.0,
            steps: 0,
            h: config.step,
            regions,
            trace,
            advisories: Vec::new(),
            diverged_at: None,
        }
    }

    fn velocity(&self, l: &[f64]) -> Result<Vec<f64>, String> {
        let m = MetricVector(l.to_vec());
        let k = match self.field {
            Field::Extended => extended_curvature(self.tri, &m),
            Field::Raw => raw_curvature(self.tri, &m).map_err(|e| format!("unextended curvature undefined: {e}"))?,
        };
        Ok(k.0.iter().zip(&self.target.0).map(|(a, b)| a - b).collect())
    }

    fn energy(&mut self) -> Result<f64, String> {
        let m = MetricVector(self.l.clone());
        match energy_with_tol(self.tri, &m, self.target, self.config.energy_tol) {
            Ok(e) => Ok(e),
            Err(_) => {
                let loose = self.config.energy_tol * 1e3;
                let e = energy_with_tol(self.tri, &m, self.target, loose).map_err(|e| format!("energy: {e}"))?;
                self.advisories.push(format!("energy at t = {} evaluated with quadrature tolerance {loose}", self.t));
                Ok(e)
            }
        }
    }

    fn record(&mut self, knorm: f64) -> Result<(), String> {
        if self.trace.samples.last().is_some_and(|s| s.t == self.t) {
            return Ok(());
        }
        let energy = self.energy()?;
        self.trace.samples.push(Sample {
            t: self.t,
            metric: self.l.clone(),
            knorm,
            energy,
            regions: self.regions.clone(),
        });
        Ok(())
    }

    fn rk4(&self, l: &[f64], k1: &[f64], h: f64) -> Result<Vec<f64>, String> {
        let k2 = self.velocity(&axpy(l, 0.5 * h, k1))?;
        let k3 = self.velocity(&axpy(l, 0.5 * h, &k2))?;
        let k4 = self.velocity(&axpy(l, h, &k3))?;
        Ok((0..l.len()).map(|i| l[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
    }

    /// Advances one step from the current state; returns the step taken.
    fn advance(&mut self, k1: &[f64]) -> Result<(Vec<f64>, f64), String> {
        let remaining = self.config.t_max - self.t;
        match self.config.method {
            Method::Euler => {
                let h = self.config.step.min(remaining);
                Ok((axpy(&self.l, h, k1), h))
            }
            Method::Rk4 => {
                let h = self.config.step.min(remaining);
                Ok((self.rk4(&self.l, k1, h)?, h))
            }
            Method::Adaptive => {
                let h_min = self.config.step * 1e-6;
                let h_max = self.config.step;
                loop {
                    let h = self.h.min(remaining);
                    let full = self.rk4(&self.l, k1, h)?;
                    let mid = self.rk4(&self.l, k1, 0.5 * h)?;
                    let half = self.rk4(&mid, &self.velocity(&mid)?, 0.5 * h)?;
                    let err = full.iter().zip(&half).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / 15.0;
                    let factor = if err == 0.0 { 2.0 } else { 0.9 * (self.config.adaptive_tol / err).powf(0.2) };
                    if err <= self.config.adaptive_tol || self.h <= h_min {
                        if h == self.h {
                            self.h = (self.h * factor.clamp(1.0, 2.0)).min(h_max);
                        }
                        return Ok((half, h));
                    }
                    self.h = (self.h * factor.clamp(0.1, 0.9)).max(h_min);
                }
            }
        }
    }

    fn push_events(&mut self, new_l: &[f64], new_regions: &[Region]) {
        let t = self.t;
        for (tet, (old, new)) in self.regions.iter().zip(new_regions).enumerate() {
            if old == new {
                continue;
            }
            if let Some(k) = old.omega_index() {
                self.trace.events.push(Event { t, kind: EventKind::LeftOmega { tet, component: k + 1 } });
            }
            if let Some(k) = new.omega_index() {
                self.trace.events.push(Event { t, kind: EventKind::EnteredOmega { tet, component: k + 1 } });
            }
        }
        for (edge, (&old, &new)) in self.l.iter().zip(new_l).enumerate() {
            if old > 0.0 && new <= 0.0 {
                self.trace.events.push(Event { t, kind: EventKind::ClampedCoordinate { edge } });
            }
        }
    }

    fn run(&mut self, handoff: bool) -> Stop {
        match self.run_inner(handoff) {
            Ok(stop) => stop,
            Err(msg) => {
                self.diverged_at = Some(self.t);
                Stop::Diverged(msg)
            }
        }
    }

    fn run_inner(&mut self, handoff: bool) -> Result<Stop, String> {
        let mut streak = 0usize;
        let mut since_record = 0usize;
        loop {
            let k = self.velocity(&self.l)?;
            let knorm = sup(&k);
            if !knorm.is_finite() {
                return Err(format!("non-finite curvature at t = {}", self.t));
            }
            if since_record == 0 {
                self.record(knorm)?;
            }
            since_record = (since_record + 1) % self.config.record_every;
            let nondegenerate = is_nondegenerate(self.tri, &MetricVector(self.l.clone())).ok;
            streak = if nondegenerate && knorm < self.config.handoff_threshold { streak + 1 } else { 0 };
            let stop = if knorm < self.config.tol_curvature && nondegenerate {
                Some(Stop::Converged)
            } else if handoff && streak >= self.config.handoff_steps {
                Some(Stop::Handoff)
            } else if self.t >= self.config.t_max {
                Some(Stop::MaxTime)
            } else {
                None
            };
            if let Some(stop) = stop {
                self.record(knorm)?;
                return Ok(stop);
            }

            let (new_l, h) = self.advance(&k)?;
            if new_l.iter().any(|x| !x.is_finite()) {
                return Err(format!("non-finite metric after step from t = {}", self.t));
            }
            self.steps += 1;
            // fixed steps land on the grid exactly so traces are reproducible
            let new_t = match self.config.method {
                Method::Adaptive => self.t + h,
                _ => (self.steps as f64 * self.config.step).min(self.config.t_max),
            };
            let new_t = if self.config.t_max - new_t <= 1e-12 * self.config.t_max { self.config.t_max } else { new_t };
            let new_regions = is_nondegenerate(self.tri, &MetricVector(new_l.clone())).regions;
            self.t = new_t;
            self.push_events(&new_l, &new_regions);
            self.l = new_l;
            self.regions = new_regions;
        }
    }

    fn report(&self, stop: &Stop, started: Instant) -> SolveReport {
        let status = match stop {
            Stop::Converged => Status::Converged,
            Stop::MaxTime | Stop::Handoff => Status::MaxTime,
            Stop::Diverged(_) => Status::DivergedError,
        };
        let mut advisories = self.advisories.clone();
        if let Stop::Diverged(msg) = stop {
            advisories.push(msg.clone());
        }
        let final_curvature_norm = self.velocity(&self.l).map(|k| sup(&k)).unwrap_or(f64::NAN);
        SolveReport {
            status,
            final_time: self.t,
            final_metric: self.l.clone(),
            final_curvature_norm,
            rate: convergence_rate(&self.trace),
            steps: self.steps,
            newton_iterations: 0,
            handoff_time: None,
            diverged_at: self.diverged_at,
            advisories,
            wall_time: started.elapsed().as_secs_f64(),
        }
    }
}

fn degree_advisory(tri: &Triangulation) -> Option<String> {
    tri.degrees()
        .iter()
        .all(|&d| d <= 6)
        .then(|| "every edge has degree <= 6: no hyper-ideal polyhedral metric with zero curvature exists".to_string())
}

fn flow_with(
    tri: &Triangulation,
    l0: &MetricVector,
    target: &CurvatureVector,
    config: &FlowConfig,
    field: Field,
) -> Result<(FlowTrace, SolveReport), SolverError> {
    check_inputs(tri, l0, target, config)?;
    let started = Instant::now();
    let mut run = Run::new(tri, l0, target, config, field);
    let stop = run.run(false);
    let mut report = run.report(&stop, started);
    if report.status == Status::MaxTime && target.0.iter().all(|&x| x == 0.0) {
        report.advisories.extend(degree_advisory(tri));
    }
    Ok((run.trace, report))
}

/// Integrates `dl/dt = K(l) - target` with the extended angles from any real
/// starting metric.
pub fn flow(
    tri: &Triangulation,
    l0: &MetricVector,
    target: &CurvatureVector,
    config: &FlowConfig,
) -> Result<(FlowTrace, SolveReport), SolverError> {
    flow_with(tri, l0, target, config, Field::Extended)
}

/// Same integrator with the unextended angles; reports `diverged_error` as
/// soon as a stage leaves the nondegenerate set.
pub fn flow_unextended(
    tri: &Triangulation,
    l0: &MetricVector,
    target: &CurvatureVector,
    config: &FlowConfig,
) -> Result<(FlowTrace, SolveReport), SolverError> {
    flow_with(tri, l0, target, config, Field::Raw)
}

/// Flow until the residual is small on a nondegenerate metric, then Newton.
/// If Newton fails the flow resumes from the handoff state.
pub fn hybrid_solve(
    tri: &Triangulation,
    l0: &MetricVector,
    target: &CurvatureVector,
    config: &FlowConfig,
) -> Result<(FlowTrace, SolveReport), SolverError> {
    check_inputs(tri, l0, target, config)?;
    let started = Instant::now();
    let mut run = Run::new(tri, l0, target, config, Field::Extended);
    let stop = run.run(true);
    if !matches!(stop, Stop::Handoff) {
        let mut report = run.report(&stop, started);
        if report.status == Status::MaxTime && target.0.iter().all(|&x| x == 0.0) {
            report.advisories.extend(degree_advisory(tri));
        }
        return Ok((run.trace, report));
    }

    let handoff_time = run.t;
    let newton = newton_iterate(tri, &MetricVector(run.l.clone()), target, config)?;
    if newton.converged {
        let mut report = run.report(&Stop::Converged, started);
        report.status = Status::NewtonConverged;
        report.final_metric = newton.metric;
        report.final_curvature_norm = newton.residual;
        report.newton_iterations = newton.iterations;
        report.handoff_time = Some(handoff_time);
        report.wall_time = started.elapsed().as_secs_f64();
        return Ok((run.trace, report));
    }

    run.advisories.push(format!(
        "newton failed after handoff at t = {handoff_time}: {}; flow resumed",
        newton.failure.as_deref().unwrap_or("no convergence")
    ));
    let stop = run.run(false);
    let mut report = run.report(&stop, started);
    report.newton_iterations = newton.iterations;
    report.handoff_time = Some(handoff_time);
    Ok((run.trace, report))
}

/// Dispatches on `config.newton`.
pub fn run(
    tri: &Triangulation,
    l0: &MetricVector,
    target: &CurvatureVector,
    config: &FlowConfig,
) -> Result<(FlowTrace, SolveReport), SolverError> {
    match config.newton {
        NewtonMode::Off => flow(tri, l0, target, config),
        NewtonMode::Hybrid => hybrid_solve(tri, l0, target, config),
    }
}
