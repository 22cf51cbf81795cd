use std::io::Write;
use std::path::{Path, PathBuf};

use super::{EventKind, FlowTrace, SolverError};

/// CSV with columns `t, l_e0 .. l_eN, Knorm, energy`.
pub fn write_trace_csv<W: Write>(trace: &FlowTrace, out: W) -> Result<(), SolverError> {
    let mut w = csv::Writer::from_writer(out);
    let edges = trace.samples.first().map_or(0, |s| s.metric.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..edges).map(|e| format!("l_e{e}")));
    header.extend(["Knorm".to_string(), "energy".to_string()]);
    w.write_record(&header)?;
    for s in &trace.samples {
        let mut row = vec![s.t.to_string()];
        row.extend(s.metric.iter().map(f64::to_string));
        row.extend([s.knorm.to_string(), s.energy.to_string()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `t, event, tet, component, edge`; unused cells are empty.
pub fn write_events_csv<W: Write>(trace: &FlowTrace, out: W) -> Result<(), SolverError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "event", "tet", "component", "edge"])?;
    for ev in &trace.events {
        let t = ev.t.to_string();
        let row = match &ev.kind {
            EventKind::EnteredOmega { tet, component } => {
                [t, "entered_omega".into(), tet.to_string(), component.to_string(), String::new()]
            }
            EventKind::LeftOmega { tet, component } => {
                [t, "left_omega".into(), tet.to_string(), component.to_string(), String::new()]
            }
            EventKind::ClampedCoordinate { edge } => {
                [t, "clamped_coordinate".into(), String::new(), String::new(), edge.to_string()]
            }
        };
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `run.csv` -> `run.events.csv`, next to the trace.
pub fn events_path(trace_path: &Path) -> PathBuf {
    let stem = trace_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trace".into());
    trace_path.with_file_name(format!("{stem}.events.csv"))
}

/// Writes the trace and its events sidecar; returns the sidecar path.
pub fn write_trace_files(trace: &FlowTrace, path: &Path) -> Result<PathBuf, SolverError> {
    write_trace_csv(trace, std::fs::File::create(path)?)?;
    let sidecar = events_path(path);
    write_events_csv(trace, std::fs::File::create(&sidecar)?)?;
    Ok(sidecar)
}
