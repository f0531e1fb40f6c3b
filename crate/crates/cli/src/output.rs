//! CSV writers. Numbers are written with `{:e}`, the shortest scientific form
//! that parses back to the same `f64`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crossdiff::bounds::BoundsReport;
use crossdiff::diagnostics::{DiagnosticsRecord, SweepRecord};
use crossdiff::energy::SteadyState;
use crossdiff::{Grid1D, State};

use crate::error::CliError;

pub const DENSITIES_HEADER: &str = "t,species,x,u";
pub const NORMS_HEADER: &str = "t,species,mass,min,l2,h1semi,tv,entropy_pos,energy";
pub const SWEEP_HEADER: &str = "delta,u_2T,grad_u_2T,tv_T";
pub const BOUNDS_HEADER: &str = "T,c_l,omega_len,c_p,c_f,c_omega,delta_max";
pub const PARTICLES_HEADER: &str = "t,species,x,density";
pub const POSITIONS_HEADER: &str = "t,species,index,x";
pub const COMPARISON_HEADER: &str = "T,N,eps,l1_distance";
pub const STEADY_HEADER: &str = "species,x,u,c";

pub struct CsvFile {
    path: PathBuf,
    out: csv::Writer<BufWriter<File>>,
}

impl CsvFile {
    pub fn create(path: &Path, header: &str) -> Result<Self, CliError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        let mut me = Self {
            path: path.to_path_buf(),
            out,
        };
        me.row(header.split(','))?;
        Ok(me)
    }

    pub fn row<I, T>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.out.write_record(fields).map_err(|e| self.fail(e))
    }

    pub fn numbers(&mut self, values: &[f64]) -> Result<(), CliError> {
        self.row(values.iter().map(|v| format!("{v:e}")))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }

    fn fail(&self, e: csv::Error) -> CliError {
        CliError::io(&self.path, e.into())
    }
}

pub fn write_densities(path: &Path, grid: &Grid1D, snapshots: &[State]) -> Result<(), CliError> {
    let mut f = CsvFile::create(path, DENSITIES_HEADER)?;
    for s in snapshots {
        for (i, row) in s.u.iter().enumerate() {
            for (x, u) in grid.centers().iter().zip(row) {
                f.row([
                    format!("{:e}", s.t),
                    i.to_string(),
                    format!("{x:e}"),
                    format!("{u:e}"),
                ])?;
            }
        }
    }
    f.finish()
}

pub fn write_norms(path: &Path, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let mut f = CsvFile::create(path, NORMS_HEADER)?;
    for r in records {
        for (i, s) in r.species.iter().enumerate() {
            let mut fields = vec![format!("{:e}", r.t), i.to_string()];
            fields.extend(
                [
                    s.mass,
                    s.min_density,
                    s.l2,
                    s.h1semi,
                    s.tv,
                    s.entropy_pos,
                    r.energy,
                ]
                .iter()
                .map(|v| format!("{v:e}")),
            );
            f.row(fields)?;
        }
    }
    f.finish()
}

pub fn write_sweep(path: &Path, records: &[SweepRecord]) -> Result<(), CliError> {
    let mut f = CsvFile::create(path, SWEEP_HEADER)?;
    for r in records {
        f.numbers(&[r.delta, r.u_2t, r.grad_u_2t, r.tv_t])?;
    }
    f.finish()
}

pub fn write_bounds(path: &Path, reports: &[BoundsReport]) -> Result<(), CliError> {
    let mut f = CsvFile::create(path, BOUNDS_HEADER)?;
    for r in reports {
        f.numbers(&[
            r.t_final,
            r.c_l,
            r.omega_len,
            r.c_p,
            r.c_f,
            r.c_omega,
            r.delta_max,
        ])?;
    }
    f.finish()
}

pub fn write_steady(path: &Path, grid: &Grid1D, steady: &SteadyState) -> Result<(), CliError> {
    let mut f = CsvFile::create(path, STEADY_HEADER)?;
    for (i, (row, c)) in steady.u_inf.iter().zip(&steady.lagrange_c).enumerate() {
        for (x, u) in grid.centers().iter().zip(row) {
            f.row([
                i.to_string(),
                format!("{x:e}"),
                format!("{u:e}"),
                format!("{c:e}"),
            ])?;
        }
    }
    f.finish()
}

/// `(t, species, histogram)` rows.
pub fn write_histograms(
    path: &Path,
    grid: &Grid1D,
    rows: &[(f64, usize, Vec<f64>)],
) -> Result<(), CliError> {
    let mut f = CsvFile::create(path, PARTICLES_HEADER)?;
    for (t, i, h) in rows {
        for (x, d) in grid.centers().iter().zip(h) {
            f.row([
                format!("{t:e}"),
                i.to_string(),
                format!("{x:e}"),
                format!("{d:e}"),
            ])?;
        }
    }
    f.finish()
}

/// `(t, positions per species)` snapshots.
pub fn write_positions(path: &Path, snapshots: &[(f64, Vec<Vec<f64>>)]) -> Result<(), CliError> {
    let mut f = CsvFile::create(path, POSITIONS_HEADER)?;
    for (t, species) in snapshots {
        for (i, xs) in species.iter().enumerate() {
            for (k, x) in xs.iter().enumerate() {
                f.row([
                    format!("{t:e}"),
                    i.to_string(),
                    k.to_string(),
                    format!("{x:e}"),
                ])?;
            }
        }
    }
    f.finish()
}

/// One row per species, in species order.
pub fn write_comparison(
    path: &Path,
    t_end: f64,
    counts: &[usize],
    eps: f64,
    l1: &[f64],
) -> Result<(), CliError> {
    let mut f = CsvFile::create(path, COMPARISON_HEADER)?;
    for (n, d) in counts.iter().zip(l1) {
        f.row([
            format!("{t_end:e}"),
            n.to_string(),
            format!("{eps:e}"),
            format!("{d:e}"),
        ])?;
    }
    f.finish()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
