//! Run configuration: a line-oriented `key = value` format with one level of
//! `[section]` headers.
//!
//! Values are resolved in layers: built-in defaults, the config file, the
//! `BALLISTIC_<SECTION>_<KEY>` environment variables, then command-line
//! flags. Unknown sections and keys are errors at every layer.

use crate::error::CliError;
use ballistic::EnvSpec;
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

pub const ENV_PREFIX: &str = "BALLISTIC_";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Env,
    Sde,
    Criterion,
    Oned,
    Green,
    Example,
}

impl Command {
    pub const ALL: [Command; 6] = [Command::Env, Command::Sde, Command::Criterion, Command::Oned, Command::Green, Command::Example];

    pub fn name(self) -> &'static str {
        match self {
            Command::Env => "env",
            Command::Sde => "sde",
            Command::Criterion => "criterion",
            Command::Oned => "oned",
            Command::Green => "green",
            Command::Example => "example",
        }
    }

    pub fn stages(self) -> &'static [&'static str] {
        match self {
            Command::Env => &["axioms"],
            Command::Sde => &["exit-time", "exit-stats"],
            Command::Criterion => &["evaluate", "mirror", "decay", "kappa", "hierarchy"],
            Command::Oned => &["rho", "identity", "dichotomy", "chain", "recursion"],
            Command::Green => &["kernel", "apply", "bounds", "gamma"],
            Command::Example => &["green", "phat", "rhohat", "perturb", "displacement", "backtrack", "delta", "assemble"],
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::invalid(format!("unknown command `{s}` (expected one of env, sde, criterion, oned, green, example)")))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Slab,
    Interval,
    Box,
    Tube,
}

impl DomainKind {
    fn name(self) -> &'static str {
        match self {
            DomainKind::Slab => "slab",
            DomainKind::Interval => "interval",
            DomainKind::Box => "box",
            DomainKind::Tube => "tube",
        }
    }
}

impl FromStr for DomainKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "slab" => Ok(DomainKind::Slab),
            "interval" => Ok(DomainKind::Interval),
            "box" => Ok(DomainKind::Box),
            "tube" => Ok(DomainKind::Tube),
            _ => Err(CliError::invalid(format!("geometry.domain: unknown domain `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub domain: DomainKind,
    pub l: f64,
    pub l_tilde: f64,
    pub x1: f64,
    /// Probe positions along `e₁` as fractions of `L`.
    pub probes: Vec<f64>,
    pub a: f64,
    pub a_grid: Vec<f64>,
    pub b_back: f64,
    pub l_list: Vec<f64>,
    pub l0: f64,
    pub n_window: i64,
    pub l_probe: f64,
    pub k_max: usize,
    pub u0: f64,
    /// `N` of the example; `None` is the desk-scale default.
    pub n_scale: Option<f64>,
    pub transverse_cap: Option<f64>,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            domain: DomainKind::Slab,
            l: 10.0,
            l_tilde: 13.0,
            x1: 0.0,
            probes: vec![-0.6, -0.3, 0.0, 0.3, 0.6],
            a: 0.5,
            a_grid: vec![0.25, 0.5, 1.0],
            b_back: 1.0,
            l_list: vec![5.0, 10.0, 15.0],
            l0: 3.0,
            n_window: 60,
            l_probe: 2.0,
            k_max: 1,
            u0: 1.0,
            n_scale: None,
            transverse_cap: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BudgetCfg {
    pub n_env: usize,
    pub n_path: usize,
    pub dt: Option<f64>,
    pub max_time: Option<f64>,
    pub quad_step: f64,
    pub horizon: f64,
    /// Step budget above which hierarchy levels are not simulated.
    pub max_steps: f64,
}

impl Default for BudgetCfg {
    fn default() -> Self {
        BudgetCfg { n_env: 20, n_path: 100, dt: None, max_time: None, quad_step: 1e-3, horizon: 1000.0, max_steps: 1e9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constants {
    /// `None` means ½ where κ only caps an estimate; criterion decisions
    /// need it set.
    pub kappa: Option<f64>,
    pub c3: f64,
    pub c7: f64,
    /// `None` selects `4^{η−2}/3`.
    pub c12: Option<f64>,
    pub c17: f64,
    /// `None` selects `R`.
    pub c20: Option<f64>,
    pub harnack_c: f64,
    pub spacing: Option<f64>,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { kappa: None, c3: 1.0, c7: 1.0, c12: None, c17: 1.0, c20: None, harnack_c: 1.0, spacing: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub stage: String,
    pub seed: u64,
    /// `0` is all available cores. Never changes an emitted number.
    pub workers: usize,
    pub env: EnvSpec,
    pub geometry: Geometry,
    pub budget: BudgetCfg,
    pub constants: Constants,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Env,
            stage: "axioms".into(),
            seed: 1,
            workers: 0,
            env: EnvSpec::new(2, 0.2, 0.1),
            geometry: Geometry::default(),
            budget: BudgetCfg::default(),
            constants: Constants::default(),
        }
    }
}

pub const SECTIONS: [&str; 5] = ["run", "env", "geometry", "budget", "constants"];

const RUN_KEYS: [&str; 4] = ["command", "stage", "seed", "workers"];
const GEOMETRY_KEYS: [&str; 16] = [
    "domain",
    "l",
    "l_tilde",
    "x1",
    "probes",
    "a",
    "a_grid",
    "b_back",
    "l_list",
    "l0",
    "n_window",
    "l_probe",
    "k_max",
    "u0",
    "n_scale",
    "transverse_cap",
];
const BUDGET_KEYS: [&str; 7] = ["n_env", "n_path", "dt", "max_time", "quad_step", "horizon", "max_steps"];
const CONSTANT_KEYS: [&str; 8] = ["kappa", "c3", "c7", "c12", "c17", "c20", "harnack_c", "spacing"];

pub fn section_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "run" => Some(&RUN_KEYS),
        "env" => Some(&EnvSpec::KEYS),
        "geometry" => Some(&GEOMETRY_KEYS),
        "budget" => Some(&BUDGET_KEYS),
        "constants" => Some(&CONSTANT_KEYS),
        _ => None,
    }
}

fn parse<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T, CliError> {
    v.parse::<T>().map_err(|_| CliError::invalid(format!("{section}.{key}: cannot parse `{v}`")))
}

fn parse_auto(section: &str, key: &str, v: &str) -> Result<Option<f64>, CliError> {
    if v == "auto" {
        Ok(None)
    } else {
        parse(section, key, v).map(Some)
    }
}

fn parse_list(section: &str, key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|s| parse(section, key, s.trim())).collect()
}

fn auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |x| x.to_string())
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Resolved `(section, key) → value` pairs; later layers overwrite earlier
/// ones.
#[derive(Clone, Debug, Default)]
pub struct Layers {
    values: BTreeMap<(String, String), String>,
}

impl Layers {
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), CliError> {
        let keys = section_keys(section).ok_or_else(|| CliError::invalid(format!("unknown section `[{section}]`")))?;
        if !keys.contains(&key) {
            return Err(CliError::invalid(format!("unknown key `{key}` in section `[{section}]`")));
        }
        self.values.insert((section.to_string(), key.to_string()), value.trim().to_string());
        Ok(())
    }

    /// Adds every pair of a config text.
    pub fn read_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| CliError::invalid(format!("line {}: unterminated section header", i + 1)))?.trim();
                if section_keys(name).is_none() {
                    return Err(CliError::invalid(format!("line {}: unknown section `[{name}]`", i + 1)));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::invalid(format!("line {}: expected `key = value`", i + 1)))?;
            let sec = section.as_deref().ok_or_else(|| CliError::invalid(format!("line {}: key outside any section", i + 1)))?;
            self.set(sec, k.trim(), v.trim()).map_err(|e| CliError::invalid(format!("line {}: {}", i + 1, e.message())))?;
        }
        Ok(())
    }

    /// Adds `BALLISTIC_<SECTION>_<KEY>` variables from `vars`.
    pub fn read_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<(), CliError> {
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
            let rest = rest.to_ascii_lowercase();
            let found = SECTIONS.iter().find_map(|s| {
                let key = rest.strip_prefix(s)?.strip_prefix('_')?;
                section_keys(s)?.contains(&key).then(|| (*s, key.to_string()))
            });
            let (section, key) = found.ok_or_else(|| CliError::invalid(format!("environment variable {name} names no config key")))?;
            self.set(section, &key, &value)?;
        }
        Ok(())
    }

    /// `section.key=value`, as given to `--set`.
    pub fn read_assignment(&mut self, s: &str) -> Result<(), CliError> {
        let (path, value) = s.split_once('=').ok_or_else(|| CliError::invalid(format!("--set `{s}`: expected section.key=value")))?;
        let (section, key) = path.trim().split_once('.').ok_or_else(|| CliError::invalid(format!("--set `{s}`: expected section.key=value")))?;
        self.set(section, key, value)
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values.get(&(section.to_string(), key.to_string())).map(|s| s.as_str())
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::default();
        for ((section, key), v) in &self.values {
            let (s, k, v) = (section.as_str(), key.as_str(), v.as_str());
            match s {
                "run" => match k {
                    "command" => c.command = v.parse()?,
                    "stage" => c.stage = v.to_string(),
                    "seed" => c.seed = parse(s, k, v)?,
                    "workers" => c.workers = parse(s, k, v)?,
                    _ => unreachable!(),
                },
                "geometry" => {
                    let g = &mut c.geometry;
                    match k {
                        "domain" => g.domain = v.parse()?,
                        "l" => g.l = parse(s, k, v)?,
                        "l_tilde" => g.l_tilde = parse(s, k, v)?,
                        "x1" => g.x1 = parse(s, k, v)?,
                        "probes" => g.probes = parse_list(s, k, v)?,
                        "a" => g.a = parse(s, k, v)?,
                        "a_grid" => g.a_grid = parse_list(s, k, v)?,
                        "b_back" => g.b_back = parse(s, k, v)?,
                        "l_list" => g.l_list = parse_list(s, k, v)?,
                        "l0" => g.l0 = parse(s, k, v)?,
                        "n_window" => g.n_window = parse(s, k, v)?,
                        "l_probe" => g.l_probe = parse(s, k, v)?,
                        "k_max" => g.k_max = parse(s, k, v)?,
                        "u0" => g.u0 = parse(s, k, v)?,
                        "n_scale" => g.n_scale = parse_auto(s, k, v)?,
                        "transverse_cap" => g.transverse_cap = parse_auto(s, k, v)?,
                        _ => unreachable!(),
                    }
                }
                "budget" => {
                    let b = &mut c.budget;
                    match k {
                        "n_env" => b.n_env = parse(s, k, v)?,
                        "n_path" => b.n_path = parse(s, k, v)?,
                        "dt" => b.dt = parse_auto(s, k, v)?,
                        "max_time" => b.max_time = parse_auto(s, k, v)?,
                        "quad_step" => b.quad_step = parse(s, k, v)?,
                        "horizon" => b.horizon = parse(s, k, v)?,
                        "max_steps" => b.max_steps = parse(s, k, v)?,
                        _ => unreachable!(),
                    }
                }
                "constants" => {
                    let q = &mut c.constants;
                    match k {
                        "kappa" => q.kappa = parse_auto(s, k, v)?,
                        "c3" => q.c3 = parse(s, k, v)?,
                        "c7" => q.c7 = parse(s, k, v)?,
                        "c12" => q.c12 = parse_auto(s, k, v)?,
                        "c17" => q.c17 = parse(s, k, v)?,
                        "c20" => q.c20 = parse_auto(s, k, v)?,
                        "harnack_c" => q.harnack_c = parse(s, k, v)?,
                        "spacing" => q.spacing = parse_auto(s, k, v)?,
                        _ => unreachable!(),
                    }
                }
                _ => {}
            }
        }
        // Dimension-dependent defaults (range, bump radius) follow `dim`.
        if let Some(v) = self.get("env", "dim") {
            let d: usize = parse("env", "dim", v)?;
            if d != c.env.dim {
                c.env = EnvSpec::new(d, c.env.drift_bound, c.env.mean_drift);
            }
        }
        for key in EnvSpec::KEYS.iter().filter(|k| **k != "dim") {
            if let Some(v) = self.get("env", key) {
                c.env.set(key, v)?;
            }
        }
        if self.get("run", "stage").is_none() {
            c.stage = c.command.stages()[0].to_string();
        }
        Ok(c)
    }
}

impl RunConfig {
    /// Full text form with every default filled in.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "stage = {}", self.stage);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "\n[env]");
        s.push_str(&self.env.to_text());
        let g = &self.geometry;
        let _ = writeln!(s, "\n[geometry]");
        let _ = writeln!(s, "domain = {}", g.domain.name());
        let _ = writeln!(s, "l = {}", g.l);
        let _ = writeln!(s, "l_tilde = {}", g.l_tilde);
        let _ = writeln!(s, "x1 = {}", g.x1);
        let _ = writeln!(s, "probes = {}", list(&g.probes));
        let _ = writeln!(s, "a = {}", g.a);
        let _ = writeln!(s, "a_grid = {}", list(&g.a_grid));
        let _ = writeln!(s, "b_back = {}", g.b_back);
        let _ = writeln!(s, "l_list = {}", list(&g.l_list));
        let _ = writeln!(s, "l0 = {}", g.l0);
        let _ = writeln!(s, "n_window = {}", g.n_window);
        let _ = writeln!(s, "l_probe = {}", g.l_probe);
        let _ = writeln!(s, "k_max = {}", g.k_max);
        let _ = writeln!(s, "u0 = {}", g.u0);
        let _ = writeln!(s, "n_scale = {}", auto(g.n_scale));
        let _ = writeln!(s, "transverse_cap = {}", auto(g.transverse_cap));
        let b = &self.budget;
        let _ = writeln!(s, "\n[budget]");
        let _ = writeln!(s, "n_env = {}", b.n_env);
        let _ = writeln!(s, "n_path = {}", b.n_path);
        let _ = writeln!(s, "dt = {}", auto(b.dt));
        let _ = writeln!(s, "max_time = {}", auto(b.max_time));
        let _ = writeln!(s, "quad_step = {}", b.quad_step);
        let _ = writeln!(s, "horizon = {}", b.horizon);
        let _ = writeln!(s, "max_steps = {}", b.max_steps);
        let q = &self.constants;
        let _ = writeln!(s, "\n[constants]");
        let _ = writeln!(s, "kappa = {}", auto(q.kappa));
        let _ = writeln!(s, "c3 = {}", q.c3);
        let _ = writeln!(s, "c7 = {}", q.c7);
        let _ = writeln!(s, "c12 = {}", auto(q.c12));
        let _ = writeln!(s, "c17 = {}", q.c17);
        let _ = writeln!(s, "c20 = {}", auto(q.c20));
        let _ = writeln!(s, "harnack_c = {}", q.harnack_c);
        let _ = writeln!(s, "spacing = {}", auto(q.spacing));
        s
    }

    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let mut layers = Layers::default();
        layers.read_text(text)?;
        layers.resolve()
    }

    /// Text that identifies the emitted numbers: the rendering without the
    /// worker count.
    pub fn identity_text(&self) -> String {
        self.render().lines().filter(|l| !l.starts_with("workers =")).collect::<Vec<_>>().join("\n")
    }

    /// Checks every field against the preconditions of the selected stage
    /// before anything is simulated.
    pub fn validate(&self) -> Result<(), CliError> {
        self.env.validate()?;
        let stages = self.command.stages();
        if !stages.contains(&self.stage.as_str()) {
            return Err(CliError::invalid(format!(
                "run.stage: `{}` is not a stage of `{}` (expected one of {})",
                self.stage,
                self.command,
                stages.join(", ")
            )));
        }
        let b = &self.budget;
        let g = &self.geometry;
        let q = &self.constants;
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(CliError::invalid(msg.to_string())) };
        check(b.n_env >= 2, "budget.n_env must be at least 2")?;
        check(b.n_path >= 2, "budget.n_path must be at least 2")?;
        check(b.dt.is_none_or(|v| v > 0.0 && v.is_finite()), "budget.dt must be positive")?;
        check(b.max_time.is_none_or(|v| v > 0.0), "budget.max_time must be positive")?;
        check(b.quad_step > 0.0 && b.quad_step <= 0.1, "budget.quad_step must lie in (0, 0.1]")?;
        check(b.horizon > 0.0, "budget.horizon must be positive")?;
        check(g.l > 0.0 && g.l.is_finite(), "geometry.l must be positive")?;
        check(g.probes.iter().all(|p| p.abs() < 1.0), "geometry.probes are fractions of L and must lie in (−1, 1)")?;
        check(g.a > 0.0 && g.a <= 1.0, "geometry.a must lie in (0, 1]")?;
        check(!g.a_grid.is_empty() && g.a_grid.iter().all(|a| *a > 0.0 && *a <= 1.0), "geometry.a_grid must lie in (0, 1]")?;
        check(q.kappa.is_none_or(|k| k > 0.0 && k <= 0.5), "constants.kappa must lie in (0, 1/2]")?;
        check(q.c3 > 0.0 && q.c7 > 0.0 && q.c17 > 0.0, "constants c3, c7, c17 must be positive")?;
        check(q.c12.is_none_or(|v| v > 0.0), "constants.c12 must be positive")?;
        check(q.c20.is_none_or(|v| v > 0.0), "constants.c20 must be positive")?;
        check(q.harnack_c >= 1.0, "constants.harnack_c must be at least 1")?;
        check(q.spacing.is_none_or(|v| v > 0.0), "constants.spacing must be positive")?;
        let d = self.env.dim;
        match (self.command, self.stage.as_str()) {
            (Command::Oned, _) => check(d == 1, "oned needs env.dim = 1")?,
            (Command::Green, _) => check(d >= 4, "green needs env.dim ≥ 4")?,
            (Command::Example, "delta") => {}
            (Command::Example, _) => check(d >= 4, "example needs env.dim ≥ 4")?,
            (Command::Criterion, "evaluate" | "hierarchy") if q.kappa.is_none() => {
                check(false, "constants.kappa must be set for a criterion decision (estimate it with `criterion kappa`, which is anti-conservative)")?
            }
            (Command::Criterion, "evaluate" | "mirror") => {
                check(g.l_tilde >= self.env.range + 2.0, "geometry.l_tilde must be at least R + 2")?;
                check(g.l > self.env.range + 2.0, "geometry.l must exceed R + 2")?;
            }
            (Command::Sde, _) if g.domain == DomainKind::Box => {
                check(g.l > self.env.range + 2.0, "geometry.l must exceed R + 2 for a box domain")?;
                check(g.x1 > -(g.l - self.env.range - 2.0) && g.x1 < g.l + 2.0, "geometry.x1 must lie inside the box")?;
            }
            (Command::Sde, _) => check(g.x1.abs() < g.l, "geometry.x1 must lie strictly inside (−l, l)")?,
            (Command::Criterion, "decay") => check(
                g.l_list.len() >= 3 && g.l_list.windows(2).all(|w| w[0] < w[1]) && g.l_list[0] > 0.0,
                "geometry.l_list needs at least three increasing positive values",
            )?,
            _ => {}
        }
        if self.command == Command::Example {
            crate::commands::example_params(self)?;
        }
        Ok(())
    }
}
