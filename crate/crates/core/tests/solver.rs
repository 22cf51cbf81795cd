use std::f64::consts::PI;

use hyperflow::curvature::{
    curvature_bound, curvature_jacobian, extended_curvature, is_nondegenerate, CurvatureVector, MetricVector,
};
use hyperflow::geometry::Region;
use hyperflow::solver::{
    convergence_rate, flow, flow_unextended, hybrid_solve, newton_solve, regular_solve, write_trace_files, EventKind,
    FlowConfig, FlowTrace, Method, NewtonMode, RegularSolution, SolverError, Status,
};
use hyperflow::triangulation::{parse, Triangulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn load(name: &str) -> Triangulation {
    parse(&std::fs::read_to_string(format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap(), None).unwrap()
}

fn scalar_curvature(n: f64, s: f64) -> f64 {
    let c = s.cosh();
    2.0 * PI - n * (c / (2.0 * c - 1.0)).acos()
}

/// Root of the scalar curvature by plain bisection on [lo, hi].
fn bisect(n: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if scalar_curvature(n, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn s_star() -> f64 {
    bisect(12.0, 0.01, 5.0)
}

fn nondegenerate_metric(tri: &Triangulation, rng: &mut ChaCha8Rng) -> MetricVector {
    loop {
        let m = MetricVector((0..tri.num_edges()).map(|_| rng.gen_range(0.4..1.8)).collect());
        if is_nondegenerate(tri, &m).ok && curvature_jacobian(tri, &m).is_ok() {
            return m;
        }
    }
}

fn assert_energy_monotone(trace: &FlowTrace) {
    for w in trace.samples.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!(w[1].energy <= w[0].energy + 1e-8, "energy rose at t={}: {} -> {}", w[1].t, w[0].energy, w[1].energy);
    }
}

#[test]
fn degree_twelve_converges_from_constant_start() {
    let tri = load("degree12.inc");
    let (trace, report) =
        flow(&tri, &MetricVector(vec![3.0]), &CurvatureVector::zeros(1), &FlowConfig::default()).unwrap();
    assert_eq!(report.status, Status::Converged);
    assert!(report.final_curvature_norm < 1e-8);
    assert!((report.final_metric[0] - s_star()).abs() < 1e-8);
    let c = (PI / 6.0).cos();
    assert!((report.final_metric[0].cosh() - c / (2.0 * c - 1.0)).abs() < 1e-8);
    assert_energy_monotone(&trace);
}

#[test]
fn generalized_start_reaches_same_limit() {
    let tri = load("degree12.inc");
    let (trace, report) =
        flow(&tri, &MetricVector(vec![-0.5]), &CurvatureVector::zeros(1), &FlowConfig::default()).unwrap();
    assert_eq!(report.status, Status::Converged);
    assert!((report.final_metric[0] - s_star()).abs() < 1e-8);
    assert!(trace.events.iter().any(|e| e.kind == EventKind::ClampedCoordinate { edge: 0 }));
    assert!(is_nondegenerate(&tri, &MetricVector(report.final_metric.clone())).ok);
    assert_energy_monotone(&trace);
}

#[test]
fn adaptive_and_euler_reach_same_limit() {
    let tri = load("degree12.inc");
    for method in [Method::Adaptive, Method::Euler] {
        let config = FlowConfig { method, ..FlowConfig::default() };
        let (trace, report) = flow(&tri, &MetricVector(vec![2.0]), &CurvatureVector::zeros(1), &config).unwrap();
        assert_eq!(report.status, Status::Converged, "{method:?}");
        assert!((report.final_metric[0] - s_star()).abs() < 1e-8);
        assert_energy_monotone(&trace);
    }
}

#[test]
fn nonexistence_runs_to_max_time() {
    let tri = load("single_tet.inc");
    let bound = curvature_bound(&tri);
    let (trace, report) =
        flow(&tri, &MetricVector::constant(6, 1.0), &CurvatureVector::zeros(6), &FlowConfig::default()).unwrap();
    assert_eq!(report.status, Status::MaxTime);
    assert_eq!(report.final_time, 100.0);
    assert!(report.rate.is_none());
    assert!(report.advisories.iter().any(|a| a.contains("degree <= 6")));
    assert!(trace.samples.iter().all(|s| s.metric.iter().all(|x| x.is_finite()) && s.energy.is_finite()));
    assert_energy_monotone(&trace);
    for w in trace.samples.windows(2) {
        let dt = w[1].t - w[0].t;
        for e in 0..6 {
            assert!((w[1].metric[e] - w[0].metric[e]).abs() / dt <= bound + 1e-9);
        }
    }
}

#[test]
fn derivative_is_bounded_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for name in ["single_tet.inc", "three_tet.inc", "degree12.inc", "torus.tri"] {
        let tri = load(name);
        let bound = curvature_bound(&tri);
        for _ in 0..200 {
            let m = MetricVector((0..tri.num_edges()).map(|_| rng.gen_range(-5.0..8.0)).collect());
            let k = extended_curvature(&tri, &m);
            assert!(k.sup_norm() <= bound, "{name}");
        }
    }
}

#[test]
fn newton_converges_quadratically_near_solution() {
    let tri = load("degree12.inc");
    let s = s_star();
    let report =
        newton_solve(&tri, &MetricVector(vec![s + 1e-3]), &CurvatureVector::zeros(1), &FlowConfig::default()).unwrap();
    assert_eq!(report.status, Status::NewtonConverged);
    assert!(report.newton_iterations <= 6, "{}", report.newton_iterations);
    assert!((report.final_metric[0] - s).abs() < 1e-12);
    assert!(report.final_curvature_norm < 1e-12);
}

#[test]
fn newton_at_fixed_point_takes_no_iterations() {
    let tri = load("three_tet.inc");
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..5 {
        let lbar = nondegenerate_metric(&tri, &mut rng);
        let target = extended_curvature(&tri, &lbar);
        let report = newton_solve(&tri, &lbar, &target, &FlowConfig::default()).unwrap();
        assert_eq!(report.status, Status::NewtonConverged);
        assert_eq!(report.newton_iterations, 0);
        assert_eq!(report.final_metric, lbar.0);
    }
}

#[test]
fn newton_damping_keeps_states_nondegenerate() {
    let tri = load("three_tet.inc");
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..5 {
        let lbar = nondegenerate_metric(&tri, &mut rng);
        let target = extended_curvature(&tri, &lbar);
        let start = nondegenerate_metric(&tri, &mut rng);
        let report = newton_solve(&tri, &start, &target, &FlowConfig::default()).unwrap();
        assert!(is_nondegenerate(&tri, &MetricVector(report.final_metric.clone())).ok);
        if report.status == Status::NewtonConverged {
            for e in 0..6 {
                assert!((report.final_metric[e] - lbar.0[e]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn newton_rejects_degenerate_start() {
    let tri = load("degree12.inc");
    let err = newton_solve(&tri, &MetricVector(vec![-1.0]), &CurvatureVector::zeros(1), &FlowConfig::default());
    assert!(matches!(err, Err(SolverError::NonPositiveStart { edge: 0, .. })));
}

#[test]
fn hybrid_matches_flow_with_fewer_steps() {
    let tri = load("degree12.inc");
    let zero = CurvatureVector::zeros(1);
    let (_, plain) = flow(&tri, &MetricVector(vec![5.0]), &zero, &FlowConfig::default()).unwrap();
    let config = FlowConfig { newton: NewtonMode::Hybrid, ..FlowConfig::default() };
    let (_, hybrid) = hybrid_solve(&tri, &MetricVector(vec![5.0]), &zero, &config).unwrap();
    assert_eq!(plain.status, Status::Converged);
    assert_eq!(hybrid.status, Status::NewtonConverged);
    assert!(hybrid.handoff_time.is_some());
    assert!((hybrid.final_metric[0] - plain.final_metric[0]).abs() < 1e-9);
    assert!(hybrid.steps + hybrid.newton_iterations < plain.steps);
}

#[test]
fn hybrid_never_hands_off_without_solution() {
    let tri = load("single_tet.inc");
    let config = FlowConfig { newton: NewtonMode::Hybrid, t_max: 20.0, ..FlowConfig::default() };
    let (_, report) = hybrid_solve(&tri, &MetricVector::constant(6, 1.0), &CurvatureVector::zeros(6), &config).unwrap();
    assert_eq!(report.status, Status::MaxTime);
    assert!(report.handoff_time.is_none());
    assert_eq!(report.newton_iterations, 0);
}

#[test]
fn prescribed_curvature_round_trip() {
    let tri = load("three_tet.inc");
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let config = FlowConfig { newton: NewtonMode::Hybrid, ..FlowConfig::default() };
    for _ in 0..3 {
        let lbar = nondegenerate_metric(&tri, &mut rng);
        let target = extended_curvature(&tri, &lbar);
        let (_, report) = hybrid_solve(&tri, &MetricVector::constant(6, 1.0), &target, &config).unwrap();
        assert!(matches!(report.status, Status::NewtonConverged | Status::Converged), "{:?}", report.status);
        for e in 0..6 {
            assert!((report.final_metric[e] - lbar.0[e]).abs() < 1e-10, "{:?} vs {:?}", report.final_metric, lbar.0);
        }
    }
}

#[test]
fn regular_instances() {
    let c = (PI / 6.0).cos();
    match regular_solve(12, 1e-13) {
        RegularSolution::Root { s, cosh_s, .. } => {
            assert!((s - s_star()).abs() < 1e-12);
            assert!((cosh_s - c / (2.0 * c - 1.0)).abs() < 1e-12);
            assert!((s - 0.5962).abs() < 1e-4);
        }
        other => panic!("{other:?}"),
    }
    match regular_solve(7, 1e-13) {
        RegularSolution::Root { s, .. } => {
            assert!((s - bisect(7.0, 0.01, 20.0)).abs() < 1e-12);
            assert!((s - 1.5775).abs() < 1e-4);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(regular_solve(6, 1e-12), RegularSolution::NoSolution { limit: 0.0 });
}

#[test]
fn rate_matches_top_eigenvalue() {
    let tri = load("degree12.inc");
    let (trace, report) =
        flow(&tri, &MetricVector(vec![3.0]), &CurvatureVector::zeros(1), &FlowConfig::default()).unwrap();
    let fit = report.rate.clone().expect("rate");
    assert_eq!(convergence_rate(&trace), Some(fit.clone()));
    assert!(fit.lambda < 0.0);
    assert!(fit.r_squared > 0.99);
    let top = *curvature_jacobian(&tri, &MetricVector(vec![s_star()])).unwrap().eigenvalues().last().unwrap();
    assert!((fit.lambda - top).abs() < 0.2 * top.abs(), "{} vs {top}", fit.lambda);
}

#[test]
fn rate_unavailable_on_short_or_unconverged_runs() {
    assert!(convergence_rate(&FlowTrace::default()).is_none());
    let tri = load("single_tet.inc");
    let config = FlowConfig { t_max: 10.0, ..FlowConfig::default() };
    let (trace, _) = flow(&tri, &MetricVector::constant(6, 1.0), &CurvatureVector::zeros(6), &config).unwrap();
    assert!(convergence_rate(&trace).is_none());
}

#[test]
fn runs_contract_towards_each_other() {
    let tri = load("three_tet.inc");
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let lbar = nondegenerate_metric(&tri, &mut rng);
    let target = extended_curvature(&tri, &lbar);
    let config = FlowConfig { t_max: 15.0, ..FlowConfig::default() };
    for _ in 0..3 {
        let a = MetricVector((0..6).map(|_| rng.gen_range(-1.0..3.0)).collect());
        let b = MetricVector((0..6).map(|_| rng.gen_range(-1.0..3.0)).collect());
        let (ta, _) = flow(&tri, &a, &target, &config).unwrap();
        let (tb, _) = flow(&tri, &b, &target, &config).unwrap();
        let n = ta.samples.len().min(tb.samples.len());
        let mut prev = f64::INFINITY;
        for i in 0..n {
            assert_eq!(ta.samples[i].t, tb.samples[i].t);
            let d: f64 = (0..6).map(|e| (ta.samples[i].metric[e] - tb.samples[i].metric[e]).powi(2)).sum();
            assert!(d <= prev + 1e-9, "distance rose at t={}", ta.samples[i].t);
            prev = d;
        }
    }
}

#[test]
fn extended_and_unextended_flows_agree_on_nondegenerate_runs() {
    let tri = load("three_tet.inc");
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let lbar = nondegenerate_metric(&tri, &mut rng);
    let target = extended_curvature(&tri, &lbar);
    let start = MetricVector(lbar.0.iter().map(|x| x + rng.gen_range(-0.05..0.05)).collect());
    let config = FlowConfig { t_max: 5.0, ..FlowConfig::default() };
    let (a, ra) = flow(&tri, &start, &target, &config).unwrap();
    let (b, rb) = flow_unextended(&tri, &start, &target, &config).unwrap();
    assert_ne!(rb.status, Status::DivergedError);
    assert!(a.samples.iter().all(|s| s.regions.iter().all(|r| *r == Region::NonDegenerate)));
    assert_eq!(a.samples.len(), b.samples.len());
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert_eq!(x.metric, y.metric);
    }
    assert_eq!(ra.final_metric, rb.final_metric);
}

#[test]
fn unextended_flow_stops_when_leaving_the_set() {
    let tri = load("degree12.inc");
    let (_, report) =
        flow_unextended(&tri, &MetricVector(vec![-0.5]), &CurvatureVector::zeros(1), &FlowConfig::default()).unwrap();
    assert_eq!(report.status, Status::DivergedError);
    assert_eq!(report.diverged_at, Some(0.0));
}

#[test]
fn events_replay_matches_recorded_regions() {
    let tri = load("single_tet.inc");
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut seen_left = false;
    for _ in 0..20 {
        let start = loop {
            let m = MetricVector((0..6).map(|_| rng.gen_range(-4.0f64..1.6).exp()).collect());
            if is_nondegenerate(&tri, &m).regions[0].omega_index().is_some() {
                break m;
            }
        };
        let target = CurvatureVector(vec![0.5; 6]);
        let config = FlowConfig { t_max: 10.0, ..FlowConfig::default() };
        let (trace, _) = flow(&tri, &start, &target, &config).unwrap();
        let mut inside: Option<usize> = None;
        let mut events = trace.events.iter().peekable();
        for s in &trace.samples {
            while let Some(ev) = events.next_if(|e| e.t <= s.t) {
                match ev.kind {
                    EventKind::EnteredOmega { component, .. } => inside = Some(component),
                    EventKind::LeftOmega { component, .. } => {
                        assert_eq!(inside, Some(component));
                        inside = None;
                        seen_left = true;
                    }
                    EventKind::ClampedCoordinate { .. } => {}
                }
            }
            assert_eq!(inside, s.regions[0].omega_index().map(|k| k + 1), "t={}", s.t);
        }
    }
    assert!(seen_left);
}

#[test]
fn trace_files_round_trip() {
    let tri = load("degree12.inc");
    let config = FlowConfig { record_every: 5, ..FlowConfig::default() };
    let (trace, _) = flow(&tri, &MetricVector(vec![-0.5]), &CurvatureVector::zeros(1), &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let sidecar = write_trace_files(&trace, &path).unwrap();
    assert_eq!(sidecar, dir.path().join("run.events.csv"));

    let mut rd = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), vec!["t", "l_e0", "Knorm", "energy"]);
    let rows: Vec<Vec<f64>> = rd.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), trace.samples.len());
    for (row, s) in rows.iter().zip(&trace.samples) {
        assert_eq!(row, &vec![s.t, s.metric[0], s.knorm, s.energy]);
    }
    let events = std::fs::read_to_string(&sidecar).unwrap();
    assert!(events.starts_with("t,event,tet,component,edge\n"));
    assert!(events.contains("0,clamped_coordinate,,,0"));
}

#[test]
fn invalid_inputs_are_rejected() {
    let tri = load("degree12.inc");
    let zero = CurvatureVector::zeros(1);
    let bad = FlowConfig { step: 0.0, ..FlowConfig::default() };
    assert!(matches!(flow(&tri, &MetricVector(vec![1.0]), &zero, &bad), Err(SolverError::Config(_))));
    assert!(matches!(
        flow(&tri, &MetricVector(vec![1.0, 2.0]), &zero, &FlowConfig::default()),
        Err(SolverError::Curvature(_))
    ));
    let high = CurvatureVector(vec![2.0 * PI]);
    assert!(matches!(
        flow(&tri, &MetricVector(vec![1.0]), &high, &FlowConfig::default()),
        Err(SolverError::Target { .. })
    ));
}

#[test]
fn report_serializes_without_wall_time() {
    let tri = load("degree12.inc");
    let (_, report) = flow(&tri, &MetricVector(vec![1.0]), &CurvatureVector::zeros(1), &FlowConfig::default()).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["status"], "converged");
    assert!(json.get("wall_time").is_none());
    assert!(json["rate"]["lambda"].as_f64().unwrap() < 0.0);
}
