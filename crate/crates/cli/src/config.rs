use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Named experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    BellTest,
    WeakValues,
    HiddenMc,
    RepframeCheck,
    Collapse,
    Pointer,
    ToyModel,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::BellTest,
        Scenario::WeakValues,
        Scenario::HiddenMc,
        Scenario::RepframeCheck,
        Scenario::Collapse,
        Scenario::Pointer,
        Scenario::ToyModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::BellTest => "bell-test",
            Scenario::WeakValues => "weak-values",
            Scenario::HiddenMc => "hidden-mc",
            Scenario::RepframeCheck => "repframe-check",
            Scenario::Collapse => "collapse",
            Scenario::Pointer => "pointer",
            Scenario::ToyModel => "toy-model",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::BellTest => {
                "Bell inequality for three in-plane polarizer angles, quantum and hidden-circle sides"
            }
            Scenario::WeakValues => {
                "Path probabilities and pseudo-classical values of Pauli observables for the CSCO {σ1(A), σφ(B)}"
            }
            Scenario::HiddenMc => {
                "Hidden-circle cell probabilities, coarse averages, correlation and measure invariance by Monte Carlo"
            }
            Scenario::RepframeCheck => {
                "Pseudo-probability matrix between two CSCO angles and the value transformation between them"
            }
            Scenario::Collapse => {
                "Device reading, Bayes update and the photon-B state left behind"
            }
            Scenario::Pointer => "Strong Born sampling and the weak pointer shift",
            Scenario::ToyModel => "Minimum-norm conditional weights on a random n×n grid",
        }
    }

    /// Parameters the scenario accepts, in report order.
    pub fn parameters(self) -> &'static [Param] {
        use Param::*;
        match self {
            Scenario::BellTest => &[Angles],
            Scenario::WeakValues => &[Phi, Chi, DeltaThreshold],
            Scenario::HiddenMc => &[DeltaOmega, Chi, Samples, Seed],
            Scenario::RepframeCheck => &[Phi, PhiJ],
            Scenario::Collapse => &[Phi],
            Scenario::Pointer => &[Phi, Samples, Seed, Eta, DeltaQ],
            Scenario::ToyModel => &[Seed, Grid],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown scenario `{s}`; run `pseudo-paths list-scenarios` to see the available scenarios"
                ))
            })
    }
}

/// A tunable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Phi,
    PhiJ,
    DeltaOmega,
    Chi,
    Samples,
    Seed,
    Eta,
    DeltaQ,
    Angles,
    DeltaThreshold,
    Grid,
}

impl Param {
    pub fn key(self) -> &'static str {
        match self {
            Param::Phi => "phi",
            Param::PhiJ => "phi_j",
            Param::DeltaOmega => "delta_omega",
            Param::Chi => "chi",
            Param::Samples => "samples",
            Param::Seed => "seed",
            Param::Eta => "eta",
            Param::DeltaQ => "delta_q",
            Param::Angles => "angles",
            Param::DeltaThreshold => "delta_threshold",
            Param::Grid => "grid",
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            Param::Samples | Param::Seed | Param::Grid => "integer",
            Param::Angles => "array of 3 angles",
            Param::Phi | Param::PhiJ | Param::DeltaOmega | Param::Chi => "angle",
            _ => "number",
        }
    }

    pub fn help(self) -> &'static str {
        match self {
            Param::Phi => "CSCO angle φ of photon B's polarizer; must avoid 0 and π",
            Param::PhiJ => "second CSCO angle",
            Param::DeltaOmega => "frame shift ΔΩ₀ in (0, π)",
            Param::Chi => "polarization direction χ",
            Param::Samples => "Monte Carlo draws or Born trials",
            Param::Seed => "RNG seed",
            Param::Eta => "pointer coupling η, at most Δq/100",
            Param::DeltaQ => "pointer width Δq",
            Param::Angles => "polarizer angles a, b, c",
            Param::DeltaThreshold => "covariance threshold Δ for classicality",
            Param::Grid => "toy grid size n",
        }
    }

    pub fn default_text(self, scenario: Scenario) -> String {
        let p = Parameters::defaults(scenario);
        match self {
            Param::Phi => fmt_opt(p.phi),
            Param::PhiJ => fmt_opt(p.phi_j),
            Param::DeltaOmega => fmt_opt(p.delta_omega),
            Param::Chi => fmt_opt(p.chi),
            Param::Samples => fmt_opt(p.samples),
            Param::Seed => fmt_opt(p.seed),
            Param::Eta => fmt_opt(p.eta),
            Param::DeltaQ => fmt_opt(p.delta_q),
            Param::Angles => p.angles.map(|a| format!("{a:?}")).unwrap_or_default(),
            Param::DeltaThreshold => fmt_opt(p.delta_threshold),
            Param::Grid => fmt_opt(p.grid),
        }
    }
}

fn fmt_opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Usage(format!(
                "unknown format `{s}`; use csv or json"
            ))),
        }
    }
}

/// Parameter values. Unset fields are `None`; angles are radians once resolved.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

impl Parameters {
    pub fn defaults(scenario: Scenario) -> Parameters {
        let mut p = Parameters::default();
        match scenario {
            Scenario::BellTest => p.angles = Some([-FRAC_PI_4, 0.0, FRAC_PI_2]),
            Scenario::WeakValues => {
                p.phi = Some(FRAC_PI_2);
                p.chi = Some(0.0);
                p.delta_threshold = Some(1e-6);
            }
            Scenario::HiddenMc => {
                p.delta_omega = Some(FRAC_PI_2);
                p.chi = Some(0.0);
                p.samples = Some(1_000_000);
                p.seed = Some(1);
            }
            Scenario::RepframeCheck => {
                p.phi = Some(FRAC_PI_3);
                p.phi_j = Some(2.0 * FRAC_PI_3);
            }
            Scenario::Collapse => p.phi = Some(FRAC_PI_3),
            Scenario::Pointer => {
                p.phi = Some(FRAC_PI_3);
                p.eta = Some(1e-3);
                p.delta_q = Some(1.0);
                p.samples = Some(100_000);
                p.seed = Some(1);
            }
            Scenario::ToyModel => {
                p.grid = Some(3);
                p.seed = Some(1);
            }
        }
        p
    }

    /// Fields set in `self`, as parameter names.
    pub fn set_keys(&self) -> Vec<Param> {
        let mut out = Vec::new();
        let mut push = |set: bool, p| {
            if set {
                out.push(p)
            }
        };
        push(self.phi.is_some(), Param::Phi);
        push(self.phi_j.is_some(), Param::PhiJ);
        push(self.delta_omega.is_some(), Param::DeltaOmega);
        push(self.chi.is_some(), Param::Chi);
        push(self.samples.is_some(), Param::Samples);
        push(self.seed.is_some(), Param::Seed);
        push(self.eta.is_some(), Param::Eta);
        push(self.delta_q.is_some(), Param::DeltaQ);
        push(self.angles.is_some(), Param::Angles);
        push(self.delta_threshold.is_some(), Param::DeltaThreshold);
        push(self.grid.is_some(), Param::Grid);
        out
    }

    /// Fields of `over` replace those of `self`.
    pub fn overlay(self, over: &Parameters) -> Parameters {
        Parameters {
            phi: over.phi.or(self.phi),
            phi_j: over.phi_j.or(self.phi_j),
            delta_omega: over.delta_omega.or(self.delta_omega),
            chi: over.chi.or(self.chi),
            samples: over.samples.or(self.samples),
            seed: over.seed.or(self.seed),
            eta: over.eta.or(self.eta),
            delta_q: over.delta_q.or(self.delta_q),
            angles: over.angles.or(self.angles),
            delta_threshold: over.delta_threshold.or(self.delta_threshold),
            grid: over.grid.or(self.grid),
        }
    }

    fn into_radians(mut self) -> Parameters {
        let r = |x: Option<f64>| x.map(f64::to_radians);
        self.phi = r(self.phi);
        self.phi_j = r(self.phi_j);
        self.delta_omega = r(self.delta_omega);
        self.chi = r(self.chi);
        self.angles = self.angles.map(|a| a.map(f64::to_radians));
        self
    }
}

/// Contents of a `--config` file: a flat JSON object.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub scenario: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub parameters: Parameters,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        ConfigFile::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<ConfigFile, serde_json::Error> {
        let mut map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
        Ok(ConfigFile {
            scenario: take(&mut map, "scenario")?,
            out: take(&mut map, "out")?,
            format: take(&mut map, "format")?,
            parameters: serde_json::from_value(serde_json::Value::Object(map))?,
        })
    }
}

fn take<T: serde::de::DeserializeOwned>(
    map: &mut serde_json::Map<String, serde_json::Value>,
    key: &str,
) -> Result<Option<T>, serde_json::Error> {
    map.remove(key).map(serde_json::from_value).transpose()
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub degrees: bool,
    pub parameters: Parameters,
}

/// Fully resolved run request.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub parameters: Parameters,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    /// Merges defaults, the config file and flags (flags win), converts
    /// degrees and checks the scenario's preconditions.
    pub fn resolve(over: Overrides) -> Result<ExperimentConfig, CliError> {
        let file = match &over.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let name = over
            .scenario
            .clone()
            .or(file.scenario.clone())
            .ok_or_else(|| CliError::Usage("no scenario given; pass --scenario <name>".into()))?;
        let scenario: Scenario = name.parse()?;
        let mut given = file.parameters.clone().overlay(&over.parameters);
        let allowed = scenario.parameters();
        if let Some(p) = given.set_keys().into_iter().find(|p| !allowed.contains(p)) {
            return Err(CliError::Usage(format!(
                "parameter `{}` does not apply to scenario {scenario}",
                p.key()
            )));
        }
        if over.degrees {
            given = given.into_radians();
        }
        let parameters = Parameters::defaults(scenario).overlay(&given);
        validate(scenario, &parameters)?;
        Ok(ExperimentConfig {
            scenario,
            parameters,
            out: over.out.or(file.out),
            format: over.format.or(file.format).unwrap_or_default(),
        })
    }
}

fn invalid(msg: String) -> CliError {
    CliError::Config(msg)
}

fn finite(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(format!("{name} = {x} is not finite")))
    }
}

fn csco_angle(name: &str, x: f64) -> Result<(), CliError> {
    finite(name, x)?;
    let r = x.rem_euclid(PI);
    if r.min(PI - r) < 1e-12 {
        return Err(invalid(format!(
            "{name} = {x} is a multiple of π; the CSCO is degenerate"
        )));
    }
    Ok(())
}

fn validate(scenario: Scenario, p: &Parameters) -> Result<(), CliError> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| invalid(format!("{name} is required")));
    match scenario {
        Scenario::BellTest => {
            for a in p.angles.unwrap_or_default() {
                finite("angle", a)?;
            }
        }
        Scenario::WeakValues => {
            csco_angle("phi", need(p.phi, "phi")?)?;
            finite("chi", need(p.chi, "chi")?)?;
            let d = need(p.delta_threshold, "delta_threshold")?;
            if !(d > 0.0 && d.is_finite()) {
                return Err(invalid(format!("delta_threshold = {d} must be positive")));
            }
        }
        Scenario::HiddenMc => {
            let d = need(p.delta_omega, "delta_omega")?;
            if !(d > 0.0 && d < PI) {
                return Err(invalid(format!("delta_omega = {d} must lie in (0, π)")));
            }
            finite("chi", need(p.chi, "chi")?)?;
            if p.samples.unwrap_or(0) < 2 {
                return Err(invalid("samples must be at least 2".into()));
            }
        }
        Scenario::RepframeCheck => {
            csco_angle("phi", need(p.phi, "phi")?)?;
            csco_angle("phi_j", need(p.phi_j, "phi_j")?)?;
        }
        Scenario::Collapse => csco_angle("phi", need(p.phi, "phi")?)?,
        Scenario::Pointer => {
            csco_angle("phi", need(p.phi, "phi")?)?;
            let (eta, dq) = (need(p.eta, "eta")?, need(p.delta_q, "delta_q")?);
            if !(dq > 0.0 && dq.is_finite()) {
                return Err(invalid(format!("delta_q = {dq} must be positive")));
            }
            if !(0.0..=dq / 100.0).contains(&eta) {
                return Err(invalid(format!(
                    "eta = {eta} must lie in [0, delta_q/100] = [0, {}]",
                    dq / 100.0
                )));
            }
            if p.samples.unwrap_or(0) == 0 {
                return Err(invalid("samples must be positive".into()));
            }
        }
        Scenario::ToyModel => {
            let n = p.grid.unwrap_or(0);
            if !(1..=10).contains(&n) {
                return Err(invalid(format!("grid = {n} must lie in 1..=10")));
            }
        }
    }
    Ok(())
}
