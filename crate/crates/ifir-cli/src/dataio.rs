//! File IO: the `t,u,y` data CSV and controller files on disk.

use std::fmt::Write as _;
use std::path::Path;

use ifir::{controller_file, Error, IFIRController, Result, SampledSignal};

/// Parses a data CSV with header `t,u,y`; the uniform `t` grid defines the
/// sampling period (relative tolerance 1e-9).
pub fn read_data_csv(path: &Path) -> Result<(SampledSignal, SampledSignal)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == "t,u,y" => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header 't,u,y', got {:?} in {}",
                other.unwrap_or(""),
                path.display()
            )));
        }
    }
    let mut t = Vec::new();
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| -> Result<f64> {
            fields
                .next()
                .ok_or_else(|| Error::Parse(format!("row {}: missing {name}", i + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: bad {name}: {e}", i + 2)))
        };
        t.push(next("t")?);
        u.push(next("u")?);
        y.push(next("y")?);
        if fields.next().is_some() {
            return Err(Error::Parse(format!(
                "row {}: expected exactly 3 fields",
                i + 2
            )));
        }
    }
    if t.len() < 2 {
        return Err(Error::Parse("data file needs at least 2 samples".into()));
    }
    let ts = t[1] - t[0];
    if ts.is_nan() || ts <= 0.0 {
        return Err(Error::Parse(format!(
            "time grid must increase, first step is {ts}"
        )));
    }
    for k in 1..t.len() {
        let step = t[k] - t[k - 1];
        if (step - ts).abs() > 1e-9 * ts.abs().max(step.abs()) {
            return Err(Error::Parse(format!(
                "non-uniform time grid at row {}: step {step} vs {ts}",
                k + 2
            )));
        }
    }
    Ok((SampledSignal::new(u, ts)?, SampledSignal::new(y, ts)?))
}

/// Writes a trajectory CSV with header `t,r,u,y` and LF line endings.
pub fn write_trajectory_csv(path: &Path, ts: f64, r: &[f64], u: &[f64], y: &[f64]) -> Result<()> {
    let mut out = String::from("t,r,u,y\n");
    for k in 0..r.len() {
        let _ = writeln!(out, "{},{},{},{}", k as f64 * ts, r[k], u[k], y[k]);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes a data CSV with header `t,u,y`.
pub fn write_data_csv(path: &Path, u: &SampledSignal, y: &SampledSignal) -> Result<()> {
    let mut out = String::from("t,u,y\n");
    let ts = u.ts();
    for k in 0..u.len() {
        let _ = writeln!(out, "{},{},{}", k as f64 * ts, u.values()[k], y.values()[k]);
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_controller(path: &Path, c: &IFIRController) -> Result<()> {
    std::fs::write(path, controller_file::to_string(c))?;
    Ok(())
}

pub fn read_controller(path: &Path) -> Result<IFIRController> {
    let text = std::fs::read_to_string(path)?;
    controller_file::parse(&text)
}
