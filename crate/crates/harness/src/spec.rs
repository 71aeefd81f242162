//! Experiment specification: a TOML document naming a scenario, the fixed
//! model parameters, and optional value lists for swept parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use qrn_core::optimizer::{BoundsOverrides, GaConfig, Pins, SearchMethod};
use qrn_core::{ChainDecision, Fidelity, LinkConfig, NoiseParams, QosRequirement};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

/// Largest number of grid points a single spec may expand to.
pub const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Evaluate,
    Optimize,
    SweepQos,
    SweepDVsRminR0,
    SweepNoLinkDistill,
    SweepNoE2eDistill,
    SweepNoise,
    GaConvergence,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Evaluate => "evaluate",
            Scenario::Optimize => "optimize",
            Scenario::SweepQos => "sweep_qos",
            Scenario::SweepDVsRminR0 => "sweep_d_vs_rmin_r0",
            Scenario::SweepNoLinkDistill => "sweep_no_link_distill",
            Scenario::SweepNoE2eDistill => "sweep_no_e2e_distill",
            Scenario::SweepNoise => "sweep_noise",
            Scenario::GaConvergence => "ga_convergence",
        }
    }

    /// Symbols that must appear in the grid; for `sweep_noise` at least one
    /// of the two is enough.
    fn required_symbols(self) -> &'static [Symbol] {
        match self {
            Scenario::SweepQos => &[Symbol::FMin, Symbol::RMin],
            Scenario::SweepDVsRminR0 => &[Symbol::RMin, Symbol::R0],
            Scenario::SweepNoLinkDistill | Scenario::SweepNoE2eDistill => &[Symbol::FMin],
            Scenario::SweepNoise => &[Symbol::P2, Symbol::Eta],
            _ => &[],
        }
    }

    /// Pins implied by the scenario itself.
    pub fn implied_pins(self) -> Pins {
        match self {
            Scenario::SweepNoLinkDistill => Pins {
                n_link_distill: Some(0),
                ..Pins::default()
            },
            Scenario::SweepNoE2eDistill => Pins {
                n_e2e_distill: Some(0),
                ..Pins::default()
            },
            _ => Pins::default(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parameter that a grid may sweep. The declaration order is the order in
/// which grid coordinates nest (first symbol outermost).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    F0,
    R0,
    L0,
    P2,
    Eta,
    RMin,
    FMin,
    Seed,
}

impl Symbol {
    pub const ALL: [Symbol; 8] = [
        Symbol::F0,
        Symbol::R0,
        Symbol::L0,
        Symbol::P2,
        Symbol::Eta,
        Symbol::RMin,
        Symbol::FMin,
        Symbol::Seed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Symbol::F0 => "f0",
            Symbol::R0 => "r0",
            Symbol::L0 => "l0",
            Symbol::P2 => "p2",
            Symbol::Eta => "eta",
            Symbol::RMin => "r_min",
            Symbol::FMin => "f_min",
            Symbol::Seed => "seed",
        }
    }

    pub fn parse(name: &str) -> Option<Symbol> {
        Symbol::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSpec {
    pub f0: f64,
    pub r0: f64,
    pub l0: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        Self {
            f0: 0.99,
            r0: 1e5,
            l0: 0.542,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub p2: f64,
    pub eta: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { p2: 0.99, eta: 0.99 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosSpec {
    pub r_min: f64,
    pub f_min: f64,
}

impl Default for QosSpec {
    fn default() -> Self {
        Self { r_min: 1.0, f_min: 0.5 }
    }
}

/// The decision scored by the `evaluate` scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionSpec {
    pub n_links: usize,
    pub d: f64,
    pub n_link_distill: usize,
    pub n_e2e_distill: usize,
}

impl Default for DecisionSpec {
    fn default() -> Self {
        Self {
            n_links: 1,
            d: 0.0,
            n_link_distill: 0,
            n_e2e_distill: 0,
        }
    }
}

impl DecisionSpec {
    pub fn to_decision(self) -> HarnessResult<ChainDecision> {
        Ok(ChainDecision::new(
            self.n_links,
            self.d,
            self.n_link_distill,
            self.n_e2e_distill,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    /// Search method for the optimizing scenarios.
    #[serde(default = "default_method")]
    pub method: SearchMethod,
    /// Seed for stochastic methods; overrides `ga.seed` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Default output file, used when the CLI gives no `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub link: LinkSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub qos: QosSpec,
    #[serde(default)]
    pub bounds: BoundsOverrides,
    #[serde(default)]
    pub pins: Pins,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub decision: DecisionSpec,
    /// Swept values per symbol.
    #[serde(default)]
    pub grid: BTreeMap<Symbol, Vec<f64>>,
}

fn default_method() -> SearchMethod {
    SearchMethod::Exhaustive
}

/// Fully resolved parameters of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointParams {
    pub f0: f64,
    pub r0: f64,
    pub l0: f64,
    pub p2: f64,
    pub eta: f64,
    pub r_min: f64,
    pub f_min: f64,
    pub seed: u64,
}

impl PointParams {
    pub fn get(&self, symbol: Symbol) -> f64 {
        match symbol {
            Symbol::F0 => self.f0,
            Symbol::R0 => self.r0,
            Symbol::L0 => self.l0,
            Symbol::P2 => self.p2,
            Symbol::Eta => self.eta,
            Symbol::RMin => self.r_min,
            Symbol::FMin => self.f_min,
            Symbol::Seed => self.seed as f64,
        }
    }

    fn set(&mut self, symbol: Symbol, value: f64) -> HarnessResult<()> {
        match symbol {
            Symbol::F0 => self.f0 = value,
            Symbol::R0 => self.r0 = value,
            Symbol::L0 => self.l0 = value,
            Symbol::P2 => self.p2 = value,
            Symbol::Eta => self.eta = value,
            Symbol::RMin => self.r_min = value,
            Symbol::FMin => self.f_min = value,
            Symbol::Seed => self.seed = seed_value(value)?,
        }
        Ok(())
    }

    pub fn link(&self) -> HarnessResult<LinkConfig> {
        Ok(LinkConfig::new(Fidelity::new(self.f0)?, self.r0, self.l0, 0.0)?)
    }

    pub fn noise(&self) -> HarnessResult<NoiseParams> {
        Ok(NoiseParams::new(self.p2, self.eta)?)
    }

    pub fn qos(&self) -> HarnessResult<QosRequirement> {
        Ok(QosRequirement::new(self.r_min, self.f_min)?)
    }
}

fn seed_value(value: f64) -> HarnessResult<u64> {
    // Integers up to 2^53 survive the f64 grid representation exactly.
    if value >= 0.0 && value.fract() == 0.0 && value <= 9_007_199_254_740_992.0 {
        Ok(value as u64)
    } else {
        Err(HarnessError::InvalidSpec(format!(
            "seed grid value {value} is not a non-negative integer"
        )))
    }
}

impl ExperimentSpec {
    /// A spec with every parameter at the default setup.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            method: default_method(),
            seed: None,
            output: None,
            link: LinkSpec::default(),
            noise: NoiseSpec::default(),
            qos: QosSpec::default(),
            bounds: BoundsOverrides::default(),
            pins: Pins::default(),
            ga: GaConfig::default(),
            decision: DecisionSpec::default(),
            grid: BTreeMap::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> HarnessResult<Self> {
        toml::from_str(text).map_err(|e| HarnessError::InvalidSpec(e.to_string()))
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Fixes `symbol` at `value`, dropping any grid over it.
    pub fn set_param(&mut self, symbol: Symbol, value: f64) -> HarnessResult<()> {
        self.grid.remove(&symbol);
        match symbol {
            Symbol::F0 => self.link.f0 = value,
            Symbol::R0 => self.link.r0 = value,
            Symbol::L0 => self.link.l0 = value,
            Symbol::P2 => self.noise.p2 = value,
            Symbol::Eta => self.noise.eta = value,
            Symbol::RMin => self.qos.r_min = value,
            Symbol::FMin => self.qos.f_min = value,
            Symbol::Seed => self.seed = Some(seed_value(value)?),
        }
        Ok(())
    }

    /// Seed used when the grid does not sweep it.
    pub fn base_seed(&self) -> u64 {
        self.seed.unwrap_or(self.ga.seed)
    }

    /// Search method after scenario constraints.
    pub fn effective_method(&self) -> SearchMethod {
        match self.scenario {
            Scenario::GaConvergence => SearchMethod::Genetic,
            _ => self.method,
        }
    }

    /// Pins from the spec merged with those the scenario implies.
    pub fn effective_pins(&self) -> HarnessResult<Pins> {
        let implied = self.scenario.implied_pins();
        let mut pins = self.pins;
        for (mine, theirs, name) in [
            (&mut pins.n_link_distill, implied.n_link_distill, "n_link_distill"),
            (&mut pins.n_e2e_distill, implied.n_e2e_distill, "n_e2e_distill"),
        ] {
            match (*mine, theirs) {
                (Some(a), Some(b)) if a != b => {
                    return Err(HarnessError::InvalidSpec(format!(
                        "scenario {} pins {name} = {b}, spec pins it to {a}",
                        self.scenario
                    )))
                }
                (None, Some(b)) => *mine = Some(b),
                _ => {}
            }
        }
        Ok(pins)
    }

    fn base_point(&self) -> PointParams {
        PointParams {
            f0: self.link.f0,
            r0: self.link.r0,
            l0: self.link.l0,
            p2: self.noise.p2,
            eta: self.noise.eta,
            r_min: self.qos.r_min,
            f_min: self.qos.f_min,
            seed: self.base_seed(),
        }
    }

    /// Checks the spec and expands its grid into points in coordinate
    /// order: the first symbol varies slowest, values keep their listed
    /// order.
    pub fn points(&self) -> HarnessResult<Vec<PointParams>> {
        self.validate_shape()?;
        let mut points = vec![self.base_point()];
        for (&symbol, values) in &self.grid {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for &v in values {
                    let mut q = *p;
                    q.set(symbol, v)?;
                    next.push(q);
                }
            }
            points = next;
        }
        for p in &points {
            p.link()?;
            p.noise()?;
            p.qos()?;
        }
        Ok(points)
    }

    /// Full validation without running anything.
    pub fn validate(&self) -> HarnessResult<()> {
        self.points().map(|_| ())
    }

    fn validate_shape(&self) -> HarnessResult<()> {
        let bad = |msg: String| Err(HarnessError::InvalidSpec(msg));
        for (symbol, values) in &self.grid {
            if values.is_empty() {
                return bad(format!("grid for {} is empty", symbol.name()));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return bad(format!("grid for {} contains non-finite value {v}", symbol.name()));
            }
        }
        let required = self.scenario.required_symbols();
        let present = |s: &Symbol| self.grid.contains_key(s);
        let ok = match self.scenario {
            Scenario::SweepNoise => required.iter().any(present),
            _ => required.iter().all(present),
        };
        if !ok {
            let names: Vec<_> = required.iter().map(|s| s.name()).collect();
            return bad(format!(
                "scenario {} needs a grid over {}",
                self.scenario,
                names.join(" and ")
            ));
        }
        let total = self
            .grid
            .values()
            .try_fold(1usize, |acc, v| acc.checked_mul(v.len()))
            .filter(|&n| n <= MAX_GRID_POINTS);
        if total.is_none() {
            return bad(format!("grid expands to more than {MAX_GRID_POINTS} points"));
        }
        if self.scenario == Scenario::Evaluate {
            self.decision.to_decision()?;
        }
        self.effective_pins()?;
        self.ga.validate()?;
        Ok(())
    }
}
