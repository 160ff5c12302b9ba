//! CSV files: routes, trajectories, per-solve statistics and the heuristic
//! table.
//!
//! Every file starts with a `# <schema> v<version>` line followed by a
//! header row. Readers skip lines starting with `#`. Floats are written in
//! the shortest form that parses back to the same value.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::Context;
use ecodrive_core::mpc::StepRecord;
use ecodrive_core::{DrivingMode, HeuristicLut, RoutePoint, RouteProfile, Trajectory};

use crate::error::Error;

pub const ROUTE_SCHEMA: &str = "# route v1";
pub const ROUTE_HEADER: [&str; 4] = ["s_m", "grade_rad", "vmin_mps", "vmax_mps"];
pub const TRAJECTORY_SCHEMA: &str = "# trajectory v1";
pub const TRAJECTORY_HEADER: [&str; 6] = ["s_m", "v_mps", "mode", "gear", "fuel_g", "time_s"];
pub const STEPS_SCHEMA: &str = "# mpc_steps v1";
pub const LUT_SCHEMA: &str = "# lut v1";

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

fn check_header<R: Read>(rd: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), Error> {
    let h = rd.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if h.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!(
            "header must be `{}`, found `{}`",
            expected.join(","),
            h.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, Error> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::Parse(format!("line {line}: missing column `{name}`")))?;
    raw.parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse `{raw}` as {name}")))
}

fn records<R: Read>(rd: &mut csv::Reader<R>) -> impl Iterator<Item = Result<csv::StringRecord, Error>> + '_ {
    rd.records().map(|r| r.map_err(|e| Error::Parse(e.to_string())))
}

pub fn read_route<R: Read>(r: R) -> Result<RouteProfile, Error> {
    let mut rd = reader(r);
    check_header(&mut rd, &ROUTE_HEADER)?;
    let mut pts = Vec::new();
    for rec in records(&mut rd) {
        let rec = rec?;
        pts.push(RoutePoint {
            s: field(&rec, 0, "s_m")?,
            alpha: field(&rec, 1, "grade_rad")?,
            v_min: field(&rec, 2, "vmin_mps")?,
            v_max: field(&rec, 3, "vmax_mps")?,
        });
    }
    Ok(RouteProfile::new(pts)?)
}

pub fn load_route(path: &Path) -> Result<RouteProfile, Error> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let route = read_route(f).map_err(|e| e.in_file(path))?;
    Ok(route.with_name(name).with_source(path.display().to_string()))
}

pub fn write_route<W: Write>(mut w: W, route: &RouteProfile) -> std::io::Result<()> {
    writeln!(w, "{ROUTE_SCHEMA}")?;
    writeln!(w, "{}", ROUTE_HEADER.join(","))?;
    for p in route.points() {
        writeln!(w, "{},{},{},{}", p.s, p.alpha, p.v_min, p.v_max)?;
    }
    Ok(())
}

pub fn write_trajectory<W: Write>(mut w: W, t: &Trajectory) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_SCHEMA}")?;
    writeln!(w, "{}", TRAJECTORY_HEADER.join(","))?;
    for i in 0..t.len() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            t.s[i], t.v[i], t.mode[i], t.gear[i], t.fuel_cumulative[i], t.time_cumulative[i]
        )?;
    }
    Ok(())
}

/// Reads a trajectory back. The velocity after the last row is not stored,
/// so `v_end` is left at zero.
pub fn read_trajectory<R: Read>(r: R) -> Result<Trajectory, Error> {
    let mut rd = reader(r);
    check_header(&mut rd, &TRAJECTORY_HEADER)?;
    let mut t = Trajectory::default();
    for rec in records(&mut rd) {
        let rec = rec?;
        let mode: String = field(&rec, 2, "mode")?;
        let mode = DrivingMode::parse(&mode).ok_or_else(|| Error::Parse(format!("unknown mode `{mode}`")))?;
        t.s.push(field(&rec, 0, "s_m")?);
        t.v.push(field(&rec, 1, "v_mps")?);
        t.mode.push(mode);
        t.gear.push(field(&rec, 3, "gear")?);
        t.fuel_cumulative.push(field(&rec, 4, "fuel_g")?);
        t.time_cumulative.push(field(&rec, 5, "time_s")?);
    }
    Ok(t)
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory, Error> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_trajectory(f).map_err(|e| e.in_file(path))
}

pub fn write_steps<W: Write>(mut w: W, steps: &[StepRecord]) -> std::io::Result<()> {
    writeln!(w, "{STEPS_SCHEMA}")?;
    writeln!(
        w,
        "step,s_m,v_mps,horizon,warm_ub,cost,source,termination,mode,gear,expanded,children,\
         elim_feasibility,elim_bound,elim_binning,probes,ub_updates,max_frontier"
    )?;
    for r in steps {
        let st = &r.stats;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.s,
            r.v,
            r.horizon,
            r.warm_ub,
            r.cost,
            r.source.as_str(),
            r.termination.as_str(),
            r.applied.mode,
            r.applied.gear,
            st.expanded,
            st.children,
            st.eliminated_feasibility,
            st.eliminated_bound,
            st.eliminated_binning,
            st.probes,
            st.ub_updates,
            st.max_frontier
        )?;
    }
    Ok(())
}

pub fn write_lut<W: Write>(mut w: W, lut: &HeuristicLut) -> std::io::Result<()> {
    writeln!(w, "{LUT_SCHEMA}")?;
    writeln!(w, "stage,v_mps,h")?;
    for (j, v, h) in lut.rows() {
        writeln!(w, "{j},{v},{h}")?;
    }
    Ok(())
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
