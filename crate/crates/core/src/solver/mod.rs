//! Curvature flow `dl/dt = K(l) - target`, Newton refinement, and the
//! one-parameter regular instances.

mod flow;
mod newton;
mod rate;
mod regular;
mod trace;

pub use flow::{flow, flow_unextended, hybrid_solve, run};
pub use newton::newton_solve;
pub use rate::{convergence_rate, RateFit, RATE_WINDOW_THRESHOLD};
pub use regular::{regular_curvature, regular_solve, RegularSolution};
pub use trace::{events_path, write_events_csv, write_trace_csv, write_trace_files};

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curvature::CurvatureError;
use crate::geometry::Region;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error("target curvature {value} at edge {edge} is not below 2 pi")]
    Target { edge: usize, value: f64 },
    #[error("initial metric is degenerate at tetrahedron {tet} ({region:?})")]
    DegenerateStart { tet: usize, region: Region },
    #[error("initial metric has non-positive length {value} at edge {edge}")]
    NonPositiveStart { edge: usize, value: f64 },
    #[error("trace output: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace output: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Rk4,
    /// RK4 with step doubling on local error.
    Adaptive,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            "adaptive" => Ok(Method::Adaptive),
            _ => Err(format!("unknown method `{s}` (euler, rk4, adaptive)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NewtonMode {
    Off,
    Hybrid,
}

impl FromStr for NewtonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "off" => Ok(NewtonMode::Off),
            "hybrid" => Ok(NewtonMode::Hybrid),
            _ => Err(format!("unknown newton mode `{s}` (off, hybrid)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub method: Method,
    pub step: f64,
    pub t_max: f64,
    /// Stop once `|K - target|_inf` drops below this.
    pub tol_curvature: f64,
    pub record_every: usize,
    pub newton: NewtonMode,
    pub seed: u64,
    /// Hand off to Newton once the residual stays below this ...
    pub handoff_threshold: f64,
    /// ... on a nondegenerate metric for this many consecutive steps.
    pub handoff_steps: usize,
    /// Local error target of the adaptive integrator.
    pub adaptive_tol: f64,
    /// Quadrature tolerance per tetrahedron for recorded energies.
    pub energy_tol: f64,
    pub newton_tol: f64,
    pub newton_max_rejections: usize,
    pub newton_max_iterations: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            step: 0.05,
            t_max: 100.0,
            tol_curvature: 1e-10,
            record_every: 1,
            newton: NewtonMode::Off,
            seed: 0,
            handoff_threshold: 0.1,
            handoff_steps: 10,
            adaptive_tol: 1e-8,
            energy_tol: 1e-10,
            newton_tol: 1e-12,
            newton_max_rejections: 50,
            newton_max_iterations: 100,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("step", self.step),
            ("t_max", self.t_max),
            ("tol_curvature", self.tol_curvature),
            ("adaptive_tol", self.adaptive_tol),
            ("energy_tol", self.energy_tol),
            ("newton_tol", self.newton_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.record_every == 0 {
            return Err(SolverError::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub metric: Vec<f64>,
    /// `|K - target|_inf`.
    pub knorm: f64,
    pub energy: f64,
    pub regions: Vec<Region>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    EnteredOmega { tet: usize, component: usize },
    LeftOmega { tet: usize, component: usize },
    ClampedCoordinate { edge: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxTime,
    NewtonConverged,
    DivergedError,
}

impl Status {
    /// Process exit code for this outcome.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Converged | Status::NewtonConverged => 0,
            Status::MaxTime => 3,
            Status::DivergedError => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: Status,
    pub final_time: f64,
    pub final_metric: Vec<f64>,
    pub final_curvature_norm: f64,
    pub rate: Option<RateFit>,
    /// Integrator steps taken by the flow.
    pub steps: usize,
    pub newton_iterations: usize,
    pub handoff_time: Option<f64>,
    pub diverged_at: Option<f64>,
    pub advisories: Vec<String>,
    /// Seconds; left out of serialized reports so they are reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}
