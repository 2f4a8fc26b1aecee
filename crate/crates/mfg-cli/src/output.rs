//! CSV output: solution fields, merged policies, convergence logs, and the
//! run summary. Reals carry 17 significant digits, so parsing a file back
//! reproduces the in-memory values exactly and reruns of a deterministic
//! pipeline are byte-identical.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use mfg_core::{ConvergenceLog, ScalarField64};

/// Formats a real with 17 significant digits; round-trip exact for `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_coords(w: &mut impl Write, grid: mfg_core::PeriodicGrid, node: usize) -> io::Result<()> {
    let x = grid.coords::<f64>(node);
    write!(w, "{node},{}", fmt_real(x[0]))?;
    if grid.dim() == 2 {
        write!(w, ",{}", fmt_real(x[1]))?;
    }
    Ok(())
}

/// Writes one scalar field as `index,x1[,x2],value` rows.
pub fn write_scalar_field(path: &Path, field: &ScalarField64) -> io::Result<()> {
    let grid = field.grid();
    let mut w = create(path)?;
    match grid.dim() {
        1 => writeln!(w, "index,x1,value")?,
        _ => writeln!(w, "index,x1,x2,value")?,
    }
    for node in 0..grid.total_nodes() {
        write_coords(&mut w, grid, node)?;
        writeln!(w, ",{}", fmt_real(field.get(node)))?;
    }
    w.flush()
}

/// Writes a merged policy (one scalar field per axis) as
/// `index,x1[,x2],q1[,q2]` rows.
pub fn write_merged_policy(path: &Path, components: &[ScalarField64]) -> io::Result<()> {
    let grid = components[0].grid();
    assert_eq!(components.len(), grid.dim(), "one component per axis");
    let mut w = create(path)?;
    match grid.dim() {
        1 => writeln!(w, "index,x1,q1")?,
        _ => writeln!(w, "index,x1,x2,q1,q2")?,
    }
    for node in 0..grid.total_nodes() {
        write_coords(&mut w, grid, node)?;
        for component in components {
            write!(w, ",{}", fmt_real(component.get(node)))?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Writes the convergence log as `iteration,metric,wall_time_seconds` rows.
pub fn write_convergence(path: &Path, log: &ConvergenceLog) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "iteration,metric,wall_time_seconds")?;
    for record in log.records() {
        writeln!(
            w,
            "{},{},{}",
            record.iteration,
            fmt_real(record.metric),
            fmt_real(record.wall_time_seconds)
        )?;
    }
    w.flush()
}

/// The one-row content of `summary.csv`.
#[derive(Clone, Debug)]
pub struct Summary {
    pub method: &'static str,
    /// Nodes per dimension `I`.
    pub nodes: usize,
    pub iterations: usize,
    pub avg_cpu_per_iter: f64,
    pub total_cpu: f64,
    pub final_metric: f64,
    /// Ergodic constant; `None` on finite-horizon runs, printed as `nan`.
    pub lambda: Option<f64>,
}

/// Writes the run summary.
pub fn write_summary(path: &Path, summary: &Summary) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(
        w,
        "method,nodes,iterations,avg_cpu_per_iter,total_cpu,final_metric,lambda"
    )?;
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        summary.method,
        summary.nodes,
        summary.iterations,
        fmt_real(summary.avg_cpu_per_iter),
        fmt_real(summary.total_cpu),
        fmt_real(summary.final_metric),
        fmt_real(summary.lambda.unwrap_or(f64::NAN)),
    )?;
    w.flush()
}
