//! Flat `key = value` configuration with command-line overrides and a
//! canonical manifest of the effective values.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use dce_core::coupling::CouplingSource;
use dce_core::geometry::{weak_field_expand, CavityConfig, MetricOrder, MetricParams, ModeIndex, Overrides};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Recognised keys with their defaults ("" means unset) and a short description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("a0", "1", "coordinate cavity length at rest"),
    ("chi", "0", "potential term M/R"),
    ("gamma_a0", "0", "gradient term times a0"),
    ("gamma_a_p", "", "gradient term times the proper length (alternative to gamma_a0)"),
    ("mass", "", "source mass M (with radius; replaces chi and gamma)"),
    ("radius", "", "distance R of the cavity from the source"),
    ("strong_field", "false", "allow M/R >= 0.1"),
    ("large_cavity", "false", "allow a0/R >= 1e-3"),
    ("epsilon", "0.001", "mirror amplitude relative to a0"),
    ("drive", "parametric", "parametric (twice the frequency of `mode`) or explicit"),
    ("varpi", "", "drive frequency when drive = explicit"),
    ("mode", "1,1,1", "driven mode nx,ny,nz"),
    ("tau_p", "0.1", "dimensionless proper time eps*pi*t_p/(2 a0)"),
    ("t", "", "coordinate time (alternative to tau_p)"),
    ("metric_order", "1", "1 (sine modes) or 2 (Airy modes)"),
    ("pert_order", "1", "highest order in eps of the perturbative solution"),
    ("nx_max", "1", "transverse cutoff"),
    ("ny_max", "1", "transverse cutoff"),
    ("nz_max", "16", "axial cutoff"),
    ("coupling", "auto", "closed, quadrature, or auto (closed at first order)"),
    ("rwa", "false", "rotating-wave approximation in the first-order drive"),
    ("oracle", "false", "also integrate the exact truncated system"),
    ("pipeline", "false", "sweep: also run the perturbative pipeline per point"),
    ("rtol", "1e-10", "oracle relative tolerance"),
    ("atol", "1e-12", "oracle absolute tolerance"),
    ("quad_tol", "1e-10", "mode quadrature tolerance"),
    ("axis", "gamma_a_p", "sweep axis: gamma_a_p, chi, tau_p, varpi or nz"),
    ("start", "0", "sweep start"),
    ("stop", "0.1", "sweep stop (inclusive)"),
    ("step", "0.01", "sweep step"),
    ("tau_scaling", "fixed", "fixed, or inverse-norm (tau_p / |n| per point)"),
    ("suite", "core", "validate suite: core, formulas or all"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    value: String,
    origin: String,
}

/// Key/value pairs before typing, each remembering where it came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

impl RawConfig {
    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let mut raw = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = format!("{source}:{}", n + 1);
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("{origin}: expected `key = value`, got `{line}`")));
            };
            let key = k.trim();
            if raw.entries.contains_key(key) {
                return Err(CliError::Config(format!("{origin}: key `{key}` given twice")));
            }
            raw.insert(key, v.trim(), origin)?;
        }
        Ok(raw)
    }

    fn insert(&mut self, key: &str, value: &str, origin: String) -> CliResult<()> {
        if !known(key) {
            return Err(CliError::Config(format!("{origin}: unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), Entry { value: value.to_string(), origin });
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str, origin: &str) -> CliResult<()> {
        let Some((k, v)) = assignment.split_once('=') else {
            return Err(CliError::Config(format!("{origin}: expected key=value, got `{assignment}`")));
        };
        self.insert(k.trim(), v.trim(), origin.to_string())
    }

    pub fn remove(&mut self, key: &str) {
        self.entries.remove(key);
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn value(&self, key: &str) -> (String, String) {
        match self.get(key) {
            Some(e) => (e.value.clone(), e.origin.clone()),
            None => {
                let d = KEYS.iter().find(|(k, _, _)| *k == key).map_or("", |(_, d, _)| *d);
                (d.to_string(), "default".to_string())
            }
        }
    }

    fn f64(&self, key: &str) -> CliResult<f64> {
        let (v, origin) = self.value(key);
        let x: f64 = v
            .parse()
            .map_err(|_| CliError::Config(format!("{origin}, field `{key}`: expected a number, got `{v}`")))?;
        if !x.is_finite() {
            return Err(CliError::Config(format!("{origin}, field `{key}`: must be finite")));
        }
        Ok(x)
    }

    fn opt_f64(&self, key: &str) -> CliResult<Option<f64>> {
        if self.get(key).is_some() {
            self.f64(key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn u32(&self, key: &str) -> CliResult<u32> {
        let (v, origin) = self.value(key);
        match v.parse::<u32>() {
            Ok(x) if x >= 1 => Ok(x),
            _ => Err(CliError::Config(format!("{origin}, field `{key}`: expected a positive integer, got `{v}`"))),
        }
    }

    fn bool(&self, key: &str) -> CliResult<bool> {
        let (v, origin) = self.value(key);
        match v.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(CliError::Config(format!("{origin}, field `{key}`: expected true or false, got `{v}`"))),
        }
    }

    fn choice<'a>(&self, key: &str, options: &[&'a str]) -> CliResult<&'a str> {
        let (v, origin) = self.value(key);
        options.iter().find(|o| **o == v).copied().ok_or_else(|| {
            CliError::Config(format!("{origin}, field `{key}`: expected one of {}, got `{v}`", options.join(", ")))
        })
    }

    fn guard<T>(&self, key: &str, r: dce_core::Result<T>) -> CliResult<T> {
        let (_, origin) = self.value(key);
        r.map_err(|e| CliError::Config(format!("{origin}, field `{key}`: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Parametric,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Duration {
    TauP(f64),
    Coordinate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    GammaAp,
    Chi,
    TauP,
    Varpi,
    Nz,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::GammaAp => "gamma_a_p",
            Axis::Chi => "chi",
            Axis::TauP => "tau_p",
            Axis::Varpi => "varpi",
            Axis::Nz => "nz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Core,
    Formulas,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingChoice {
    Auto,
    Fixed(CouplingSource),
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a0: f64,
    pub chi: f64,
    pub gamma_a0: f64,
    pub gamma_a_p: f64,
    /// The gradient was given as γa_p (the manifest echoes it that way).
    pub proper_gradient: bool,
    pub overrides: Overrides,
    pub epsilon: f64,
    pub drive: Drive,
    pub mode: ModeIndex,
    pub duration: Duration,
    pub metric_order: MetricOrder,
    pub pert_order: usize,
    pub nx_max: u32,
    pub ny_max: u32,
    pub nz_max: u32,
    pub coupling: CouplingChoice,
    pub rwa: bool,
    pub oracle: bool,
    pub pipeline: bool,
    pub rtol: f64,
    pub atol: f64,
    pub quad_tol: f64,
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub inverse_norm: bool,
    pub suite: Suite,
}

fn parse_mode(s: &str) -> Option<ModeIndex> {
    let parts: Vec<u32> = s.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    match parts.as_slice() {
        [x, y, z] => ModeIndex::new(*x, *y, *z).ok(),
        _ => None,
    }
}

/// γa₀ from γa_p through a₀ ≃ a_p(1 + χ + γa_p/2).
pub fn gamma_a0_from_proper(gamma_a_p: f64, chi: f64) -> f64 {
    gamma_a_p * (1.0 + chi + gamma_a_p / 2.0)
}

/// Inverse of [`gamma_a0_from_proper`]: the positive root of x(1 + χ + x/2) = γa₀.
pub fn gamma_a_p_from_coordinate(gamma_a0: f64, chi: f64) -> f64 {
    let b = 1.0 + chi;
    2.0 * gamma_a0 / (b + (b * b + 2.0 * gamma_a0).sqrt())
}

impl RunConfig {
    pub fn resolve(raw: &RawConfig) -> CliResult<Self> {
        let a0 = raw.f64("a0")?;
        raw.guard("a0", CavityConfig::new(a0))?;
        let overrides = Overrides { strong_field: raw.bool("strong_field")?, large_cavity: raw.bool("large_cavity")? };
        let field_keys = ["chi", "gamma_a0", "gamma_a_p"];
        let (chi, gamma_a0, proper) = match (raw.opt_f64("mass")?, raw.opt_f64("radius")?) {
            (Some(m), Some(r)) => {
                if let Some(k) = field_keys.iter().find(|k| raw.get(k).is_some()) {
                    return Err(CliError::Config(format!("{}: `{k}` conflicts with mass/radius", raw.value(k).1)));
                }
                let p = raw.guard("mass", weak_field_expand(m, r, overrides))?;
                raw.guard("radius", CavityConfig::placed(a0, r, overrides))?;
                (p.chi(), p.gamma() * a0, None)
            }
            (None, None) => {
                let chi = raw.f64("chi")?;
                match raw.opt_f64("gamma_a_p")? {
                    Some(gp) => {
                        if raw.get("gamma_a0").is_some() {
                            return Err(CliError::Config(format!(
                                "{}: `gamma_a_p` conflicts with `gamma_a0`",
                                raw.value("gamma_a_p").1
                            )));
                        }
                        (chi, gamma_a0_from_proper(gp, chi), Some(gp))
                    }
                    None => (chi, raw.f64("gamma_a0")?, None),
                }
            }
            _ => return Err(CliError::Config("`mass` and `radius` must be given together".into())),
        };
        raw.guard("chi", MetricParams::with_overrides(chi, gamma_a0 / a0, overrides))?;
        let epsilon = raw.f64("epsilon")?;
        if !(epsilon >= 0.0 && epsilon < 1.0) {
            return Err(CliError::Config(format!("{}, field `epsilon`: must lie in [0, 1)", raw.value("epsilon").1)));
        }
        let drive = match raw.choice("drive", &["parametric", "explicit"])? {
            "parametric" => {
                if raw.get("varpi").is_some() {
                    return Err(CliError::Config(format!(
                        "{}: `varpi` needs drive = explicit",
                        raw.value("varpi").1
                    )));
                }
                Drive::Parametric
            }
            _ => match raw.opt_f64("varpi")? {
                Some(v) if v > 0.0 => Drive::Explicit(v),
                _ => return Err(CliError::Config("drive = explicit needs a positive `varpi`".into())),
            },
        };
        let (mode_s, origin) = raw.value("mode");
        let mode = parse_mode(&mode_s)
            .ok_or_else(|| CliError::Config(format!("{origin}, field `mode`: expected nx,ny,nz, got `{mode_s}`")))?;
        let duration = match raw.opt_f64("t")? {
            Some(t) => {
                if raw.get("tau_p").is_some() {
                    return Err(CliError::Config(format!("{}: `t` conflicts with `tau_p`", raw.value("t").1)));
                }
                Duration::Coordinate(t)
            }
            None => Duration::TauP(raw.f64("tau_p")?),
        };
        let time_ok = match duration {
            Duration::TauP(x) | Duration::Coordinate(x) => x >= 0.0,
        };
        if !time_ok {
            return Err(CliError::Config("duration must be non-negative".into()));
        }
        let metric_order = match raw.choice("metric_order", &["1", "2"])? {
            "1" => MetricOrder::First,
            _ => MetricOrder::Second,
        };
        let pert_order = if raw.choice("pert_order", &["1", "2"])? == "1" { 1 } else { 2 };
        let coupling = match raw.choice("coupling", &["auto", "closed", "quadrature"])? {
            "auto" => CouplingChoice::Auto,
            "closed" => CouplingChoice::Fixed(CouplingSource::ClosedForm),
            _ => CouplingChoice::Fixed(CouplingSource::Quadrature),
        };
        let axis = match raw.choice("axis", &["gamma_a_p", "chi", "tau_p", "varpi", "nz"])? {
            "gamma_a_p" => Axis::GammaAp,
            "chi" => Axis::Chi,
            "tau_p" => Axis::TauP,
            "varpi" => Axis::Varpi,
            _ => Axis::Nz,
        };
        let step = raw.f64("step")?;
        if !(step > 0.0) {
            return Err(CliError::Config(format!("{}, field `step`: must be positive", raw.value("step").1)));
        }
        let positive = |key: &str| -> CliResult<f64> {
            let v = raw.f64(key)?;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(CliError::Config(format!("{}, field `{key}`: must be positive", raw.value(key).1)))
            }
        };
        Ok(Self {
            a0,
            chi,
            gamma_a0,
            gamma_a_p: proper.unwrap_or_else(|| gamma_a_p_from_coordinate(gamma_a0, chi)),
            proper_gradient: proper.is_some(),
            overrides,
            epsilon,
            drive,
            mode,
            duration,
            metric_order,
            pert_order,
            nx_max: raw.u32("nx_max")?,
            ny_max: raw.u32("ny_max")?,
            nz_max: raw.u32("nz_max")?,
            coupling,
            rwa: raw.bool("rwa")?,
            oracle: raw.bool("oracle")?,
            pipeline: raw.bool("pipeline")?,
            rtol: positive("rtol")?,
            atol: positive("atol")?,
            quad_tol: positive("quad_tol")?,
            axis,
            start: raw.f64("start")?,
            stop: raw.f64("stop")?,
            step,
            inverse_norm: raw.choice("tau_scaling", &["fixed", "inverse-norm"])? == "inverse-norm",
            suite: match raw.choice("suite", &["core", "formulas", "all"])? {
                "core" => Suite::Core,
                "formulas" => Suite::Formulas,
                _ => Suite::All,
            },
        })
    }

    pub fn set_gamma_a_p(&mut self, v: f64) {
        self.gamma_a_p = v;
        self.gamma_a0 = gamma_a0_from_proper(v, self.chi);
        self.proper_gradient = true;
    }

    /// Changes χ keeping whichever form of the gradient was given.
    pub fn set_chi(&mut self, chi: f64) {
        self.chi = chi;
        if self.proper_gradient {
            self.gamma_a0 = gamma_a0_from_proper(self.gamma_a_p, chi);
        } else {
            self.gamma_a_p = gamma_a_p_from_coordinate(self.gamma_a0, chi);
        }
    }

    pub fn metric(&self) -> dce_core::Result<MetricParams> {
        MetricParams::with_overrides(self.chi, self.gamma_a0 / self.a0, self.overrides)
    }

    pub fn coupling_source(&self, order: MetricOrder) -> CouplingSource {
        match self.coupling {
            CouplingChoice::Fixed(c) => c,
            CouplingChoice::Auto if order == MetricOrder::First => CouplingSource::ClosedForm,
            CouplingChoice::Auto => CouplingSource::Quadrature,
        }
    }

    /// Every effective value as `key = value` lines, loadable with `--config`.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("a0", self.a0.to_string());
        put("chi", self.chi.to_string());
        if self.proper_gradient {
            put("gamma_a_p", self.gamma_a_p.to_string());
        } else {
            put("gamma_a0", self.gamma_a0.to_string());
        }
        put("strong_field", self.overrides.strong_field.to_string());
        put("large_cavity", self.overrides.large_cavity.to_string());
        put("epsilon", self.epsilon.to_string());
        match self.drive {
            Drive::Parametric => put("drive", "parametric".into()),
            Drive::Explicit(v) => {
                put("drive", "explicit".into());
                put("varpi", v.to_string());
            }
        }
        put("mode", format!("{},{},{}", self.mode.nx(), self.mode.ny(), self.mode.nz()));
        match self.duration {
            Duration::TauP(x) => put("tau_p", x.to_string()),
            Duration::Coordinate(x) => put("t", x.to_string()),
        }
        put("metric_order", self.metric_order.number().to_string());
        put("pert_order", self.pert_order.to_string());
        put("nx_max", self.nx_max.to_string());
        put("ny_max", self.ny_max.to_string());
        put("nz_max", self.nz_max.to_string());
        put(
            "coupling",
            match self.coupling {
                CouplingChoice::Auto => "auto",
                CouplingChoice::Fixed(CouplingSource::ClosedForm) => "closed",
                CouplingChoice::Fixed(CouplingSource::Quadrature) => "quadrature",
            }
            .into(),
        );
        put("rwa", self.rwa.to_string());
        put("oracle", self.oracle.to_string());
        put("pipeline", self.pipeline.to_string());
        put("rtol", self.rtol.to_string());
        put("atol", self.atol.to_string());
        put("quad_tol", self.quad_tol.to_string());
        put("axis", self.axis.name().into());
        put("start", self.start.to_string());
        put("stop", self.stop.to_string());
        put("step", self.step.to_string());
        put("tau_scaling", if self.inverse_norm { "inverse-norm" } else { "fixed" }.into());
        put(
            "suite",
            match self.suite {
                Suite::Core => "core",
                Suite::Formulas => "formulas",
                Suite::All => "all",
            }
            .into(),
        );
        s
    }

    /// SHA-256 of the manifest, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.manifest().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Sweep grid start, start + step, … up to `stop` (inclusive within 1e-9 step).
    pub fn sweep_values(&self) -> Vec<f64> {
        if self.stop < self.start {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::resolve(&RawConfig::default()).expect("defaults are valid")
    }
}

/// Help text listing every key with its default.
pub fn keys_help() -> String {
    let mut s = String::from("Configuration keys (key = value; defaults in brackets):\n");
    for (k, d, h) in KEYS {
        let _ = writeln!(s, "  {k:<13} {h}{}", if d.is_empty() { String::new() } else { format!(" [{d}]") });
    }
    s
}
