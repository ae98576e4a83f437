//! Plain-text `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use ks_core::solver::{Scheme, SolverConfig};
use ks_core::spectral::Parameters;
use ks_core::KsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validate,
    Kernel,
    Transform,
    Simulate,
    Diagnose,
    Sweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Validate => "validate",
            Kind::Kernel => "kernel",
            Kind::Transform => "transform",
            Kind::Simulate => "simulate",
            Kind::Diagnose => "diagnose",
            Kind::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Option<Kind> {
        [
            Kind::Validate,
            Kind::Kernel,
            Kind::Transform,
            Kind::Simulate,
            Kind::Diagnose,
            Kind::Sweep,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initial {
    /// `amplitude φ_1`.
    Mode1,
    /// `amplitude (φ_1 + φ_2)/√2`.
    TwoMode,
    /// Seeded random coefficients on the first eight modes, scaled to L² norm `amplitude`.
    Random,
}

impl Initial {
    fn name(self) -> &'static str {
        match self {
            Initial::Mode1 => "mode1",
            Initial::TwoMode => "two_mode",
            Initial::Random => "random",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub params: Parameters,
    pub solver: SolverConfig,
    pub sample_every: usize,
    /// Sine basis size of the transform; defaults to `n_sim - 1`.
    pub transform_m: Option<usize>,
    pub initial: Initial,
    pub amplitude: f64,
    pub open_loop: bool,
    pub gram_modes: usize,
    pub gram_horizon: f64,
    pub sweep_lambda: Vec<f64>,
    pub sweep_a: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

/// Keys accepted in a configuration file, in output order.
pub const KEYS: &[&str] = &[
    "kind",
    "lambda",
    "a",
    "nu",
    "n_kernel",
    "n_sim",
    "eps_critical",
    "t_final",
    "dt",
    "scheme",
    "nonlinear",
    "picard_sweeps",
    "picard_tol",
    "divergence_factor",
    "startup_steps",
    "sample_every",
    "transform_m",
    "initial",
    "amplitude",
    "open_loop",
    "gram_modes",
    "gram_horizon",
    "sweep_lambda",
    "sweep_a",
    "seed",
    "out",
];

/// Raw entries; `nu` is resolved against λ and `a` only once all keys are known.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, KsError> {
        let mut raw = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| KsError::Schema(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if raw.entries.contains_key(key) {
                return Err(KsError::Schema(format!("line {}: duplicate key `{key}`", n + 1)));
            }
            raw.set(key, value.trim())
                .map_err(|e| KsError::Schema(format!("line {}: {e}", n + 1)))?;
        }
        Ok(raw)
    }

    /// Inserts or replaces one entry; rejects unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !KEYS.contains(&key) {
            return Err(format!("unknown key `{key}`"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set_pair(&mut self, pair: &str) -> Result<(), KsError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| KsError::Schema(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim()).map_err(KsError::Schema)
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, KsError> {
        let get = |k: &str| self.entries.get(k).map(String::as_str);
        let num = |k: &str, default: f64| -> Result<f64, KsError> {
            get(k).map_or(Ok(default), |v| parse_number(v).map_err(|e| bad(k, &e)))
        };
        let count = |k: &str, default: usize| -> Result<usize, KsError> {
            get(k).map_or(Ok(default), |v| v.parse().map_err(|_| bad(k, v)))
        };
        let flag = |k: &str, default: bool| -> Result<bool, KsError> {
            get(k).map_or(Ok(default), |v| match v {
                "true" | "on" | "1" => Ok(true),
                "false" | "off" | "0" => Ok(false),
                _ => Err(bad(k, v)),
            })
        };

        let kind = match get("kind") {
            None => None,
            Some(v) => Some(Kind::parse(v).ok_or_else(|| bad("kind", v))?),
        };
        let lambda = num("lambda", 1.0)?;
        let a = num("a", 10.0)?;
        let n_kernel = count("n_kernel", 64)?;
        let mut params = Parameters::with_default_nu(lambda, a, n_kernel);
        params.nu = num("nu", params.nu)?;
        params.n_sim = count("n_sim", params.n_sim)?;
        params.eps_critical = num("eps_critical", params.eps_critical)?;
        params.t_final = num("t_final", params.t_final)?;
        params.dt = num("dt", params.dt)?;

        let defaults = SolverConfig::default();
        let scheme = match get("scheme") {
            None | Some("cn") => Scheme::CrankNicolson,
            Some("bdf2") => Scheme::Bdf2,
            Some(v) => return Err(bad("scheme", v)),
        };
        let solver = SolverConfig {
            scheme,
            intervals: params.n_sim,
            dt: params.dt,
            nonlinear: flag("nonlinear", true)?,
            picard_sweeps: count("picard_sweeps", defaults.picard_sweeps)?,
            picard_tol: num("picard_tol", defaults.picard_tol)?,
            divergence_factor: num("divergence_factor", defaults.divergence_factor)?,
            startup_steps: count("startup_steps", defaults.startup_steps)?,
        };
        let initial = match get("initial") {
            None | Some("mode1") => Initial::Mode1,
            Some("two_mode") => Initial::TwoMode,
            Some("random") => Initial::Random,
            Some(v) => return Err(bad("initial", v)),
        };
        let transform_m = match get("transform_m") {
            None => None,
            Some(v) => Some(v.parse().map_err(|_| bad("transform_m", v))?),
        };
        let list = |k: &str, default: f64| -> Result<Vec<f64>, KsError> {
            match get(k) {
                None => Ok(vec![default]),
                Some(v) => v
                    .split(',')
                    .map(|s| parse_number(s.trim()).map_err(|e| bad(k, &e)))
                    .collect(),
            }
        };
        Ok(ExperimentConfig {
            kind,
            solver,
            sample_every: count("sample_every", 10)?.max(1),
            transform_m,
            initial,
            amplitude: num("amplitude", 1e-3)?,
            open_loop: flag("open_loop", false)?,
            gram_modes: count("gram_modes", 2)?,
            gram_horizon: num("gram_horizon", 1.0)?,
            sweep_lambda: list("sweep_lambda", lambda)?,
            sweep_a: list("sweep_a", a)?,
            seed: get("seed").map_or(Ok(0), |v| v.parse().map_err(|_| bad("seed", v)))?,
            out: PathBuf::from(get("out").unwrap_or("ks-out")),
            params,
        })
    }
}

fn bad(key: &str, value: &str) -> KsError {
    KsError::Schema(format!("invalid value `{value}` for key `{key}`"))
}

/// A number, `pi`, or a `*`-product of them with optional `^n` powers, e.g. `5*pi^2`.
pub fn parse_number(text: &str) -> Result<f64, String> {
    let mut value = 1.0;
    for factor in text.split('*') {
        let factor = factor.trim();
        let (base, exp) = match factor.split_once('^') {
            Some((b, e)) => (b.trim(), e.trim().parse::<i32>().map_err(|_| text.to_string())?),
            None => (factor, 1),
        };
        let b = if base == "pi" {
            PI
        } else {
            base.parse::<f64>().map_err(|_| text.to_string())?
        };
        value *= b.powi(exp);
    }
    Ok(value)
}

impl ExperimentConfig {
    /// Canonical `key = value` text that reproduces this configuration.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let s = &self.solver;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some(k) = self.kind {
            put("kind", k.name().into());
        }
        put("lambda", format!("{:?}", p.lambda));
        put("a", format!("{:?}", p.a));
        put("nu", format!("{:?}", p.nu));
        put("n_kernel", p.n_kernel.to_string());
        put("n_sim", p.n_sim.to_string());
        put("eps_critical", format!("{:?}", p.eps_critical));
        put("t_final", format!("{:?}", p.t_final));
        put("dt", format!("{:?}", p.dt));
        put(
            "scheme",
            match s.scheme {
                Scheme::CrankNicolson => "cn",
                Scheme::Bdf2 => "bdf2",
            }
            .into(),
        );
        put("nonlinear", s.nonlinear.to_string());
        put("picard_sweeps", s.picard_sweeps.to_string());
        put("picard_tol", format!("{:?}", s.picard_tol));
        put("divergence_factor", format!("{:?}", s.divergence_factor));
        put("startup_steps", s.startup_steps.to_string());
        put("sample_every", self.sample_every.to_string());
        if let Some(m) = self.transform_m {
            put("transform_m", m.to_string());
        }
        put("initial", self.initial.name().into());
        put("amplitude", format!("{:?}", self.amplitude));
        put("open_loop", self.open_loop.to_string());
        put("gram_modes", self.gram_modes.to_string());
        put("gram_horizon", format!("{:?}", self.gram_horizon));
        put("sweep_lambda", join(&self.sweep_lambda));
        put("sweep_a", join(&self.sweep_a));
        put("seed", self.seed.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let raw = RawConfig::parse("# header\n\nlambda = 45 # trailing\na=400\n").unwrap();
        let cfg = raw.resolve().unwrap();
        assert_eq!(cfg.params.lambda, 45.0);
        assert_eq!(cfg.params.a, 400.0);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RawConfig::parse("lambda = 1\nlamda = 2\n").unwrap_err();
        assert!(err.to_string().contains("`lamda`"), "{err}");
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert!(RawConfig::parse("a = 1\na = 2").is_err());
        assert!(RawConfig::parse("just words").is_err());
        let raw = RawConfig::parse("dt = fast").unwrap();
        assert!(raw.resolve().unwrap_err().to_string().contains("`dt`"));
    }

    #[test]
    fn pi_products() {
        assert_eq!(parse_number("5*pi^2").unwrap(), 5.0 * PI.powi(2));
        assert_eq!(parse_number("pi").unwrap(), PI);
        assert_eq!(parse_number("-1.5e3").unwrap(), -1500.0);
        assert!(parse_number("pie").is_err());
    }

    #[test]
    fn nu_defaults_to_half_range() {
        let cfg = RawConfig::parse("lambda = 1\na = 10").unwrap().resolve().unwrap();
        let (m, _) = ks_core::spectral::max_mu(1.0);
        assert_eq!(cfg.params.nu, 0.5 * (10.0 - m));
        let cfg = RawConfig::parse("nu = 50").unwrap().resolve().unwrap();
        assert_eq!(cfg.params.nu, 50.0);
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "kind = simulate\nlambda = 5*pi^2\nsweep_a = 100, 200\ntransform_m = 63\ninitial = random\n";
        let cfg = RawConfig::parse(text).unwrap().resolve().unwrap();
        let again = RawConfig::parse(&cfg.to_text()).unwrap().resolve().unwrap();
        assert_eq!(cfg.to_text(), again.to_text());
        assert_eq!(again.params.lambda, parse_number("5*pi^2").unwrap());
        assert_eq!(again.sweep_a, vec![100.0, 200.0]);
    }
}
