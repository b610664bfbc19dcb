//! Flat `key=value` design configuration. Unknown keys are errors.

use std::path::Path;

use ifir::design::{DesignSpec, EpsilonMode, MethodSpec, Rho0Mode};
use ifir::lti::{c2d_zoh, realize_continuous, DiscreteTransferFunction};
use ifir::solver::SolveOptions;
use ifir::vrft::GammaMode;
use ifir::{Error, Result};

#[derive(Debug, Clone)]
pub struct DesignConfig {
    pub spec: DesignSpec,
    pub ts: f64,
    /// Continuous reference model (descending powers of s), ZOH-discretized;
    /// absent means the data columns already form the regressor pair.
    pub reference: Option<(Vec<f64>, Vec<f64>)>,
    pub solve: SolveOptions,
}

impl DesignConfig {
    pub fn load(path: &Path) -> Result<DesignConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<DesignConfig> {
        let mut method_name = None;
        let mut m = None;
        let mut n = None;
        let mut samples = None;
        let mut rho0 = Rho0Mode::Auto;
        let mut rho = 1.0;
        let mut epsilon = EpsilonMode::Auto;
        let mut gamma = GammaMode::Free;
        let mut ts = None;
        let mut mr_num = None;
        let mut mr_den = None;
        let mut discretization = None;
        let mut solve = SolveOptions {
            abs_tol: 1e-6,
            rel_tol: 1e-6,
            ..SolveOptions::default()
        };

        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Parse(format!("line {}: bad {what}: '{value}'", i + 1));
            match key {
                "method" => method_name = Some(value.to_string()),
                "m" => m = Some(value.parse::<usize>().map_err(|_| bad("m"))?),
                "n" => {
                    n = match value {
                        "auto" => None,
                        v => Some(v.parse::<usize>().map_err(|_| bad("n"))?),
                    }
                }
                "M" => {
                    samples = match value {
                        "auto" => None,
                        v => Some(v.parse::<usize>().map_err(|_| bad("M"))?),
                    }
                }
                "rho0" => {
                    rho0 = match value {
                        "auto" => Rho0Mode::Auto,
                        v => Rho0Mode::Value(v.parse().map_err(|_| bad("rho0"))?),
                    }
                }
                "rho" => rho = value.parse().map_err(|_| bad("rho"))?,
                "epsilon" => {
                    epsilon = match value {
                        "auto" => EpsilonMode::Auto,
                        v => EpsilonMode::Override(v.parse().map_err(|_| bad("epsilon"))?),
                    }
                }
                "gamma" => {
                    gamma = match value {
                        "free" => GammaMode::Free,
                        v => {
                            let v = v
                                .strip_prefix("fixed:")
                                .ok_or_else(|| bad("gamma (use 'free' or 'fixed:<value>')"))?;
                            GammaMode::Fixed(v.parse().map_err(|_| bad("gamma value"))?)
                        }
                    }
                }
                "ts" => ts = Some(value.parse::<f64>().map_err(|_| bad("ts"))?),
                "mr_num" => mr_num = Some(parse_coeffs(value).map_err(|_| bad("mr_num"))?),
                "mr_den" => mr_den = Some(parse_coeffs(value).map_err(|_| bad("mr_den"))?),
                "discretization" => discretization = Some(value.to_string()),
                "tol" => {
                    let tol: f64 = value.parse().map_err(|_| bad("tol"))?;
                    solve.abs_tol = tol;
                    solve.rel_tol = tol;
                }
                "max_iters" => solve.max_iters = value.parse().map_err(|_| bad("max_iters"))?,
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key '{other}'",
                        i + 1
                    )));
                }
            }
        }

        let m = m.ok_or_else(|| Error::Parse("missing required key 'm'".into()))?;
        let ts = ts.ok_or_else(|| Error::Parse("missing required key 'ts'".into()))?;
        let method = match method_name.as_deref() {
            Some("kyp") => MethodSpec::Kyp,
            Some("toeplitz") => MethodSpec::Toeplitz { n, epsilon },
            Some("posreal") => MethodSpec::Posreal { samples, epsilon },
            Some(other) => {
                return Err(Error::Parse(format!(
                    "unknown method '{other}' (expected kyp, toeplitz or posreal)"
                )));
            }
            None => return Err(Error::Parse("missing required key 'method'".into())),
        };
        let reference = match (mr_num, mr_den) {
            (Some(num), Some(den)) => {
                match discretization.as_deref() {
                    Some("zoh") | None => {}
                    Some(other) => {
                        return Err(Error::Parse(format!(
                            "unsupported discretization '{other}' (only zoh)"
                        )));
                    }
                }
                Some((num, den))
            }
            (None, None) => None,
            _ => {
                return Err(Error::Parse(
                    "mr_num and mr_den must be given together (or both omitted)".into(),
                ));
            }
        };
        Ok(DesignConfig {
            spec: DesignSpec {
                method,
                m,
                gamma,
                rho0,
                rho,
            },
            ts,
            reference,
            solve,
        })
    }

    /// ZOH-discretized reference model, when one is configured.
    pub fn reference_tf(&self) -> Result<Option<DiscreteTransferFunction>> {
        match &self.reference {
            None => Ok(None),
            Some((num, den)) => {
                let ss = realize_continuous(num, den)?;
                Ok(Some(c2d_zoh(&ss, self.ts)?.to_tf()?))
            }
        }
    }
}

fn parse_coeffs(value: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    value.split(',').map(|v| v.trim().parse::<f64>()).collect()
}
