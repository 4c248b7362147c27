//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! seed = 7
//! nr = 2
//!
//! [ciod_mbm]
//! scheme = ciod_mbm_1
//! nt = 4
//! nrf = 1
//! mod_order = 4
//! rotation_deg = auto
//! ```
//!
//! Keys before the first `[section]` are defaults inherited by every section.
//! A file without sections describes a single experiment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::AngleSearch;
use crate::constellation::{ModulationKind, RotatedConstellation};
use crate::encoder::{Scheme, SchemeConfig};
use crate::montecarlo::{self, SimPlan};

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "scheme",
    "nt",
    "nrf",
    "nr",
    "mod_order",
    "mod_kind",
    "rotation_deg",
    "ebn0_start_db",
    "ebn0_stop_db",
    "ebn0_step_db",
    "max_frames",
    "min_bit_errors",
    "seed",
    "workers",
    "output_path",
    "target_ber",
    "angle_step_deg",
    "angle_tol_deg",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{}key `{key}`: {message}", section_prefix(.section))]
    Key {
        section: Option<String>,
        key: String,
        message: String,
    },
    #[error("{0}")]
    Other(String),
}

fn section_prefix(section: &Option<String>) -> String {
    match section {
        Some(s) => format!("[{s}] "),
        None => String::new(),
    }
}

impl ConfigError {
    /// Offending key, if the error is about one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Key { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// Which transmitter/receiver pair to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    CiodMbm(Scheme),
    Mbm,
    Ciod,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::CiodMbm(s) => s.name(),
            SystemKind::Mbm => "mbm",
            SystemKind::Ciod => "ciod",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mbm" => Ok(SystemKind::Mbm),
            "ciod" => Ok(SystemKind::Ciod),
            other => other
                .parse::<Scheme>()
                .map(SystemKind::CiodMbm)
                .map_err(|_| format!("unknown scheme `{s}`")),
        }
    }
}

/// Constellation rotation setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rotation {
    /// Resolved by the angle optimizer.
    Auto,
    Degrees(f64),
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rotation::Auto => f.write_str("auto"),
            Rotation::Degrees(d) => write!(f, "{d}"),
        }
    }
}

/// System under test.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub kind: SystemKind,
    /// Transmit antennas (1 for MBM, 2 for CIOD).
    pub nt: usize,
    /// RF mirrors (0 for CIOD).
    pub nrf: usize,
    pub nr: usize,
    pub mod_order: usize,
    pub mod_kind: ModulationKind,
    pub rotation: Rotation,
}

impl SystemSpec {
    /// Constellation at the given rotation.
    pub fn constellation(&self, rotation_deg: f64) -> crate::Result<RotatedConstellation<f64>> {
        RotatedConstellation::new(self.mod_kind, self.mod_order, rotation_deg)
    }

    /// Scheme configuration; for CIOD the equivalent `Nt = 2, Nrf = 0` scheme I.
    pub fn scheme_config(&self, rotation_deg: f64) -> crate::Result<Option<SchemeConfig<f64>>> {
        let c = self.constellation(rotation_deg)?;
        match self.kind {
            SystemKind::CiodMbm(s) => SchemeConfig::new(s, self.nt, self.nrf, self.nr, c).map(Some),
            SystemKind::Ciod => SchemeConfig::new(Scheme::CiodMbmI, 2, 0, self.nr, c).map(Some),
            SystemKind::Mbm => Ok(None),
        }
    }

    /// Bits per channel use.
    pub fn spectral_efficiency(&self) -> f64 {
        match self.scheme_config(0.0) {
            Ok(Some(cfg)) => cfg.spectral_efficiency(),
            _ => self.nrf as f64 + self.mod_order.trailing_zeros() as f64,
        }
    }
}

/// One fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub system: SystemSpec,
    pub ebn0_start_db: f64,
    pub ebn0_stop_db: f64,
    pub ebn0_step_db: f64,
    pub max_frames: u64,
    pub min_bit_errors: u64,
    pub seed: u64,
    pub workers: usize,
    pub output_path: Option<PathBuf>,
    pub target_ber: f64,
    pub angle_step_deg: f64,
    pub angle_tol_deg: f64,
}

impl Section {
    pub fn grid(&self) -> crate::Result<Vec<f64>> {
        montecarlo::ebn0_grid(self.ebn0_start_db, self.ebn0_stop_db, self.ebn0_step_db)
    }

    pub fn plan(&self) -> crate::Result<SimPlan> {
        self.plan_for(self.grid()?)
    }

    /// Plan with this section's stopping rule and seed over a custom grid.
    pub fn plan_for(&self, grid: Vec<f64>) -> crate::Result<SimPlan> {
        SimPlan::new(grid, self.seed)?
            .with_max_frames(self.max_frames)?
            .with_min_bit_errors(self.min_bit_errors)?
            .with_workers(self.workers)
    }

    pub fn angle_search(&self) -> AngleSearch {
        AngleSearch {
            step_deg: self.angle_step_deg,
            tolerance_deg: self.angle_tol_deg,
            ..AngleSearch::default()
        }
    }

    /// Config text that parses back to this section.
    pub fn to_config_text(&self) -> String {
        let s = &self.system;
        let mut out = format!("[{}]\n", self.name);
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("scheme", s.kind.name().into());
        kv("nt", s.nt.to_string());
        kv("nrf", s.nrf.to_string());
        kv("nr", s.nr.to_string());
        kv("mod_order", s.mod_order.to_string());
        kv("mod_kind", s.mod_kind.to_string());
        kv("rotation_deg", s.rotation.to_string());
        kv("ebn0_start_db", self.ebn0_start_db.to_string());
        kv("ebn0_stop_db", self.ebn0_stop_db.to_string());
        kv("ebn0_step_db", self.ebn0_step_db.to_string());
        kv("max_frames", self.max_frames.to_string());
        kv("min_bit_errors", self.min_bit_errors.to_string());
        kv("seed", self.seed.to_string());
        kv("workers", self.workers.to_string());
        if let Some(p) = &self.output_path {
            kv("output_path", p.display().to_string());
        }
        kv("target_ber", self.target_ber.to_string());
        kv("angle_step_deg", self.angle_step_deg.to_string());
        kv("angle_tol_deg", self.angle_tol_deg.to_string());
        out
    }
}

/// A parsed config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sections: Vec<Section>,
}

type RawSection = BTreeMap<String, (usize, String)>;

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut globals = RawSection::new();
        let mut sections: Vec<(String, RawSection)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| ConfigError::Syntax {
                        line: line_no,
                        message: format!("malformed section header `{line}`"),
                    })?;
                if sections.iter().any(|(n, _)| n == name) {
                    return Err(ConfigError::Syntax {
                        line: line_no,
                        message: format!("duplicate section `{name}`"),
                    });
                }
                sections.push((name.to_string(), RawSection::new()));
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.split('#').next().unwrap_or("").trim().to_string();
            let section = sections.last().map(|(n, _)| n.clone());
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::Key {
                    section,
                    key,
                    message: format!("unknown key (line {line_no})"),
                });
            }
            let target = match sections.last_mut() {
                Some((_, s)) => s,
                None => &mut globals,
            };
            if target.insert(key.clone(), (line_no, value)).is_some() {
                return Err(ConfigError::Key {
                    section,
                    key,
                    message: format!("set twice (line {line_no})"),
                });
            }
        }
        if sections.is_empty() {
            sections.push(("default".into(), RawSection::new()));
        }
        let sections = sections
            .into_iter()
            .map(|(name, own)| {
                let mut merged = globals.clone();
                merged.extend(own);
                resolve(name, &merged)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { sections })
    }

    /// Text form that parses back to the same config.
    pub fn to_config_text(&self) -> String {
        self.sections
            .iter()
            .map(Section::to_config_text)
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

struct Reader<'a> {
    section: &'a str,
    raw: &'a RawSection,
}

impl Reader<'_> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Key {
            section: Some(self.section.to_string()),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn get<V: FromStr>(&self, key: &str) -> Result<Option<V>, ConfigError> {
        match self.raw.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| self.err(key, format!("invalid value `{v}` (line {line})"))),
        }
    }

    fn require<V: FromStr>(&self, key: &str) -> Result<V, ConfigError> {
        self.get(key)?.ok_or_else(|| self.err(key, "missing required key"))
    }

    fn or<V: FromStr>(&self, key: &str, default: V) -> Result<V, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn resolve(name: String, raw: &RawSection) -> Result<Section, ConfigError> {
    let r = Reader {
        section: &name,
        raw,
    };
    let kind: SystemKind = r.require("scheme")?;
    let (nt, nrf) = match kind {
        SystemKind::CiodMbm(_) => (r.require("nt")?, r.require("nrf")?),
        SystemKind::Mbm => (r.or("nt", 1)?, r.require("nrf")?),
        SystemKind::Ciod => (r.or("nt", 2)?, r.or("nrf", 0)?),
    };
    if kind == SystemKind::Mbm && nt != 1 {
        return Err(r.err("nt", "the MBM baseline uses a single transmit antenna"));
    }
    if kind == SystemKind::Ciod && (nt != 2 || nrf != 0) {
        let key = if nt != 2 { "nt" } else { "nrf" };
        return Err(r.err(key, "the CIOD baseline uses Nt = 2 and Nrf = 0"));
    }
    let rotation = match raw.get("rotation_deg") {
        None => Rotation::Auto,
        Some((_, v)) if v.eq_ignore_ascii_case("auto") => Rotation::Auto,
        Some(_) => {
            let d: f64 = r.require("rotation_deg")?;
            if !d.is_finite() {
                return Err(r.err("rotation_deg", "must be finite or `auto`"));
            }
            Rotation::Degrees(d)
        }
    };
    let system = SystemSpec {
        kind,
        nt,
        nrf,
        nr: r.require("nr")?,
        mod_order: r.require("mod_order")?,
        mod_kind: r.or("mod_kind", ModulationKind::Psk)?,
        rotation,
    };
    let section = Section {
        system,
        ebn0_start_db: r.or("ebn0_start_db", 0.0)?,
        ebn0_stop_db: r.or("ebn0_stop_db", 20.0)?,
        ebn0_step_db: r.or("ebn0_step_db", 2.0)?,
        max_frames: r.or("max_frames", montecarlo::DEFAULT_MAX_FRAMES)?,
        min_bit_errors: r.or("min_bit_errors", montecarlo::DEFAULT_MIN_BIT_ERRORS)?,
        seed: r.or("seed", 1)?,
        workers: r.or("workers", 1)?,
        output_path: r.get::<String>("output_path")?.map(PathBuf::from),
        target_ber: r.or("target_ber", 1e-4)?,
        angle_step_deg: r.or("angle_step_deg", AngleSearch::default().step_deg)?,
        angle_tol_deg: r.or("angle_tol_deg", AngleSearch::default().tolerance_deg)?,
        name: name.clone(),
    };
    validate(&r, &section)?;
    Ok(section)
}

fn validate(r: &Reader<'_>, s: &Section) -> Result<(), ConfigError> {
    let sys = &s.system;
    if sys.nr == 0 {
        return Err(r.err("nr", "must be at least 1"));
    }
    sys.constellation(0.0).map_err(|e| r.err("mod_order", e.to_string()))?;
    if sys.kind != SystemKind::Mbm && (sys.nt == 0 || !sys.nt.is_power_of_two()) {
        return Err(r.err("nt", "must be a power of two"));
    }
    match sys.kind {
        SystemKind::CiodMbm(Scheme::CiodMbmI) if sys.nt < 2 => {
            return Err(r.err("nt", "scheme I needs at least 2 transmit antennas"))
        }
        SystemKind::CiodMbm(Scheme::CiodMbmII) if sys.nrf < 1 => {
            return Err(r.err("nrf", "scheme II needs at least 1 RF mirror"))
        }
        _ => {}
    }
    sys.scheme_config(0.0).map_err(|e| r.err("nrf", e.to_string()))?;
    if sys.kind == SystemKind::Mbm && sys.nrf + sys.mod_order.trailing_zeros() as usize > 20 {
        return Err(r.err("nrf", "too many RF mirrors"));
    }
    if !(s.ebn0_step_db > 0.0) {
        return Err(r.err("ebn0_step_db", "must be positive"));
    }
    if !(s.ebn0_stop_db >= s.ebn0_start_db) {
        return Err(r.err("ebn0_stop_db", "must not be below ebn0_start_db"));
    }
    s.grid().map_err(|e| r.err("ebn0_start_db", e.to_string()))?;
    if s.max_frames == 0 {
        return Err(r.err("max_frames", "must be at least 1"));
    }
    if s.min_bit_errors == 0 {
        return Err(r.err("min_bit_errors", "must be at least 1"));
    }
    if s.workers == 0 {
        return Err(r.err("workers", "must be at least 1"));
    }
    if !(s.target_ber > 0.0 && s.target_ber < 0.5) {
        return Err(r.err("target_ber", "must lie in (0, 0.5)"));
    }
    if !(s.angle_step_deg > 0.0 && s.angle_step_deg < 90.0) {
        return Err(r.err("angle_step_deg", "must lie in (0, 90)"));
    }
    if !(s.angle_tol_deg > 0.0) {
        return Err(r.err("angle_tol_deg", "must be positive"));
    }
    s.plan().map_err(|e| r.err("ebn0_start_db", e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = "\
# base configuration
nr = 2
seed = 42
ebn0_stop_db = 18

[base]
scheme = ciod_mbm_1
nt = 4
nrf = 1
mod_order = 4
rotation_deg = auto

[qam]
scheme = ciod_mbm_2
nt = 2
nrf = 2
mod_order = 16
mod_kind = qam
rotation_deg = 8.6   # fixed
seed = 3
";

    #[test]
    fn parses_sections_with_inherited_defaults() {
        let cfg = ExperimentConfig::parse(FIG2).unwrap();
        assert_eq!(cfg.sections.len(), 2);
        let base = cfg.section("base").unwrap();
        assert_eq!(base.system.kind, SystemKind::CiodMbm(Scheme::CiodMbmI));
        assert_eq!((base.system.nt, base.system.nrf, base.system.nr), (4, 1, 2));
        assert_eq!(base.system.rotation, Rotation::Auto);
        assert_eq!(base.seed, 42);
        assert_eq!(base.grid().unwrap().len(), 10);
        assert_eq!(base.system.spectral_efficiency(), 3.0);
        let qam = cfg.section("qam").unwrap();
        assert_eq!(qam.system.rotation, Rotation::Degrees(8.6));
        assert_eq!(qam.system.mod_kind, ModulationKind::Qam);
        assert_eq!(qam.seed, 3);
        assert_eq!(qam.system.spectral_efficiency(), 5.5);
    }

    #[test]
    fn text_round_trip() {
        let cfg = ExperimentConfig::parse(FIG2).unwrap();
        let back = ExperimentConfig::parse(&cfg.to_config_text()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn single_experiment_without_sections() {
        let cfg = ExperimentConfig::parse("scheme = mbm\nnrf = 2\nnr = 2\nmod_order = 4\n").unwrap();
        assert_eq!(cfg.sections.len(), 1);
        assert_eq!(cfg.sections[0].system.spectral_efficiency(), 4.0);
        let ciod = ExperimentConfig::parse("scheme = ciod\nnr = 2\nmod_order = 16\nmod_kind = qam\n").unwrap();
        assert_eq!(ciod.sections[0].system.spectral_efficiency(), 4.0);
    }

    fn key_of(text: &str) -> String {
        ExperimentConfig::parse(text).unwrap_err().key().unwrap().to_string()
    }

    #[test]
    fn errors_name_the_key() {
        let base = "scheme = ciod_mbm_1\nnrf = 1\nnr = 2\nmod_order = 4\n";
        assert_eq!(key_of(base), "nt");
        let msg = ExperimentConfig::parse(base).unwrap_err().to_string();
        assert!(msg.contains("`nt`"), "{msg}");
        assert_eq!(key_of(&format!("{base}nt = 3\n")), "nt");
        assert_eq!(key_of(&format!("{base}nt = four\n")), "nt");
        assert_eq!(key_of(&format!("{base}nt = 4\nbogus = 1\n")), "bogus");
        assert_eq!(key_of(&format!("{base}nt = 4\nnt = 8\n")), "nt");
        assert_eq!(key_of(&format!("{base}nt = 4\nmod_order = 6\n")), "mod_order");
        assert_eq!(key_of(&format!("{base}nt = 4\nmod_kind = qam\nmod_order = 8\n")), "mod_order");
        assert_eq!(key_of(&format!("{base}nt = 4\nebn0_step_db = 0\n")), "ebn0_step_db");
        assert_eq!(key_of(&format!("{base}nt = 4\nmin_bit_errors = 0\n")), "min_bit_errors");
        assert_eq!(key_of(&format!("{base}nt = 4\nworkers = 0\n")), "workers");
        assert_eq!(key_of(&format!("{base}nt = 4\nrotation_deg = x\n")), "rotation_deg");
        assert_eq!(key_of("nrf = 1\nnr = 2\nmod_order = 4\nnt = 4\n"), "scheme");
        assert_eq!(key_of("scheme = ciod_mbm_2\nnt = 4\nnrf = 0\nnr = 2\nmod_order = 4\n"), "nrf");
        assert_eq!(key_of("scheme = mbm\nnt = 2\nnrf = 1\nnr = 2\nmod_order = 4\n"), "nt");
        assert!(matches!(
            ExperimentConfig::parse("[a\nnt = 1"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("just text"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::from_file("/nonexistent/cfg"),
            Err(ConfigError::Io { .. })
        ));
    }
}
