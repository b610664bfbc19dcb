//! The `ifir-v1` controller file codec.
//!
//! Format: line 1 `ifir-v1`, then `ts=`, `gamma=`, `m=`, then one `g<k>=`
//! line per coefficient. Floats carry 17 significant digits, so a
//! write/read/write cycle is byte-identical.

use std::fmt::Write as _;

use crate::{Error, IFIRController, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_string(c: &IFIRController) -> String {
    let mut out = String::from("ifir-v1\n");
    let _ = writeln!(out, "ts={}", fmt_f64(c.ts()));
    let _ = writeln!(out, "gamma={}", fmt_f64(c.gamma()));
    let _ = writeln!(out, "m={}", c.order());
    for (k, &g) in c.g().iter().enumerate() {
        let _ = writeln!(out, "g{k}={}", fmt_f64(g));
    }
    out
}

pub fn parse(text: &str) -> Result<IFIRController> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    match lines.next() {
        Some("ifir-v1") => {}
        other => {
            return Err(Error::Parse(format!(
                "expected format line 'ifir-v1', got {:?}",
                other.unwrap_or("")
            )));
        }
    }
    let mut field = |name: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing line '{name}='")))?;
        line.strip_prefix(name)
            .and_then(|rest| rest.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| Error::Parse(format!("expected '{name}=...', got '{line}'")))
    };
    let ts: f64 = field("ts")?
        .parse()
        .map_err(|e| Error::Parse(format!("bad ts: {e}")))?;
    let gamma: f64 = field("gamma")?
        .parse()
        .map_err(|e| Error::Parse(format!("bad gamma: {e}")))?;
    let m: usize = field("m")?
        .parse()
        .map_err(|e| Error::Parse(format!("bad m: {e}")))?;
    let mut g = Vec::with_capacity(m);
    for k in 0..m {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing coefficient g{k}")))?;
        let value = line
            .strip_prefix(&format!("g{k}="))
            .ok_or_else(|| Error::Parse(format!("expected 'g{k}=...', got '{line}'")))?;
        g.push(
            value
                .parse()
                .map_err(|e| Error::Parse(format!("bad g{k}: {e}")))?,
        );
    }
    if lines.any(|l| !l.is_empty()) {
        return Err(Error::Parse("trailing content after coefficients".into()));
    }
    IFIRController::new(gamma, g, ts)
}
