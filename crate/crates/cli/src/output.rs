//! Trajectory CSV output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use optctl_core::{AdjointTrajectory, ControlGrid, StateTrajectory, TimeGrid};

/// One CSV table: `t, x1..xn, lambda1..lambdan, u1..um`.
pub struct Table<'a> {
    pub grid: &'a TimeGrid,
    pub states: &'a StateTrajectory,
    /// Leading state columns to emit; extra (augmented) columns are dropped.
    pub n_states: usize,
    /// `None` leaves the adjoint cells empty.
    pub adjoints: Option<&'a AdjointTrajectory>,
    pub control: &'a ControlGrid,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_table(w: &mut impl Write, t: &Table) -> io::Result<()> {
    let n = t.n_states;
    let m = t.control.n_controls();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("x{k}")));
    header.extend((1..=n).map(|k| format!("lambda{k}")));
    header.extend((1..=m).map(|k| format!("u{k}")));
    writeln!(w, "{}", header.join(","))?;

    let mut cells = Vec::with_capacity(1 + 2 * n + m);
    for (i, ti) in t.grid.nodes().enumerate() {
        cells.clear();
        cells.push(num(ti));
        cells.extend(t.states.row(i)[..n].iter().map(|v| num(*v)));
        match t.adjoints {
            Some(a) => cells.extend(a.row(i).iter().map(|v| num(*v))),
            None => cells.extend(std::iter::repeat_n(String::new(), n)),
        }
        cells.extend(t.control.row(i).iter().map(|v| num(*v)));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_csv(path: &Path, t: &Table) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_table(&mut w, t)?;
    w.flush()
}

/// `dir/stem_direct.ext` next to `out`.
pub fn direct_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_direct.{}", ext.to_string_lossy()),
        None => format!("{stem}_direct"),
    };
    out.with_file_name(name)
}
