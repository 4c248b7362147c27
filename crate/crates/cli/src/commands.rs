use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use ciod_mbm::config::{ConfigError, ExperimentConfig, Section};
use ciod_mbm::experiment::{self, ResolvedSystem};
use ciod_mbm::montecarlo::{self, BerCurve};
use ciod_mbm::results::{self, CsvError, ResultRow};

use crate::RunArgs;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ciod_mbm::Error> for CliError {
    fn from(e: ciod_mbm::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    for s in &mut cfg.sections {
        if let Some(seed) = args.seed {
            s.seed = seed;
        }
        if let Some(w) = args.workers {
            s.workers = w as usize;
        }
    }
    Ok(cfg)
}

fn output_path(args: &RunArgs, cfg: &ExperimentConfig, suffix: &str) -> PathBuf {
    if let Some(p) = &args.output {
        return p.clone();
    }
    if let Some(p) = cfg.sections.iter().find_map(|s| s.output_path.clone()) {
        return p;
    }
    let stem = args
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    args.config.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn write_results(path: &Path, rows: &[ResultRow], meta: &str) -> Result<(), CliError> {
    results::write_file(path, rows)?;
    let meta_path = results::meta_path(path);
    std::fs::write(&meta_path, meta).map_err(|e| io_err(&meta_path, e))?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn resolve_all(cfg: &ExperimentConfig) -> Result<Vec<(Section, ResolvedSystem)>, CliError> {
    cfg.sections
        .iter()
        .map(|s| {
            let sys = experiment::resolve(s)?;
            if let Some(opt) = &sys.optimum {
                println!(
                    "[{}] rotation auto -> {} deg (delta_min {:.6e})",
                    s.name, opt.rotation_deg, opt.delta_min
                );
            }
            Ok((experiment::pinned(s, &sys), sys))
        })
        .collect()
}

fn print_curve(name: &str, curve: &BerCurve) {
    for p in &curve.points {
        println!(
            "[{name}] {:>7.2} dB  ber {:.4e} +- {:.1e}  errors {:>6}  frames {:>9}{}",
            p.ebn0_db,
            p.ber,
            p.ci95,
            p.bit_errors,
            p.frames,
            if p.under_sampled { "  (under-sampled)" } else { "" }
        );
    }
}

fn simulate_all(resolved: &[(Section, ResolvedSystem)]) -> Result<Vec<ResultRow>, CliError> {
    let mut rows = Vec::new();
    for (s, sys) in resolved {
        let curve = experiment::simulate(s, sys)?;
        print_curve(&s.name, &curve);
        rows.extend(experiment::sim_rows(sys, s.seed, &curve));
    }
    Ok(rows)
}

fn theory_all(resolved: &[(Section, ResolvedSystem)]) -> Result<Vec<ResultRow>, CliError> {
    let mut rows = Vec::new();
    for (s, sys) in resolved {
        let th = experiment::theory_rows(s, sys)?;
        for r in &th {
            println!("[{}] {:>7.2} dB  abep {:.4e}", s.name, r.ebn0_db, r.ber);
        }
        rows.extend(th);
    }
    Ok(rows)
}

fn sections_of(resolved: &[(Section, ResolvedSystem)]) -> Vec<Section> {
    resolved.iter().map(|(s, _)| s.clone()).collect()
}

pub fn simulate(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let out = output_path(args, &cfg, "sim");
    let resolved = resolve_all(&cfg)?;
    let rows = simulate_all(&resolved)?;
    write_results(&out, &rows, &experiment::meta_text("simulate", &sections_of(&resolved)))
}

pub fn abep(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let out = output_path(args, &cfg, "theory");
    let resolved = resolve_all(&cfg)?;
    let rows = theory_all(&resolved)?;
    write_results(&out, &rows, &experiment::meta_text("abep", &sections_of(&resolved)))
}

pub fn optimize_angle(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let out = output_path(args, &cfg, "angle");
    let file = std::fs::File::create(&out).map_err(|e| io_err(&out, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut trace = |line: String| writeln!(w, "{line}").map_err(|e| io_err(&out, e));
    trace("section,rotation_deg,delta_min".into())?;
    for s in &cfg.sections {
        let Some(opt) = experiment::optimize_section(s)? else {
            println!("[{}] {}: error rate does not depend on the rotation", s.name, s.system.kind);
            continue;
        };
        println!(
            "[{}] theta* = {} deg, delta_min = {:.6e}",
            s.name, opt.rotation_deg, opt.delta_min
        );
        if s.system.kind != ciod_mbm::config::SystemKind::Ciod {
            let bare = experiment::optimize_bare_ciod(s)?;
            if (bare.rotation_deg - opt.rotation_deg).abs() > s.angle_tol_deg * 10.0 {
                println!(
                    "[{}] bare CIOD optimum differs: theta* = {} deg, delta_min = {:.6e}",
                    s.name, bare.rotation_deg, bare.delta_min
                );
            } else {
                println!("[{}] bare CIOD optimum agrees", s.name);
            }
        }
        for (a, d) in &opt.trace {
            trace(format!("{},{a},{d}", s.name))?;
        }
    }
    w.flush().map_err(|e| io_err(&out, e))?;
    println!("wrote trace to {}", out.display());
    Ok(())
}

pub fn compare(args: &RunArgs, theory: bool) -> Result<(), CliError> {
    let cfg = load(args)?;
    if cfg.sections.len() < 2 {
        return Err(CliError::Config("compare needs at least two sections".into()));
    }
    let first = &cfg.sections[0];
    let eta = first.system.spectral_efficiency();
    for s in &cfg.sections[1..] {
        let other = s.system.spectral_efficiency();
        if other != eta {
            return Err(CliError::Config(format!(
                "spectral efficiencies differ: [{}] eta = {eta}, [{}] eta = {other}",
                first.name, s.name
            )));
        }
    }
    let out = output_path(args, &cfg, "compare");
    let resolved = resolve_all(&cfg)?;
    let rows = if theory {
        theory_all(&resolved)?
    } else {
        simulate_all(&resolved)?
    };
    let target = first.target_ber;
    let curve_of = |sys: &ResolvedSystem| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| r.scheme == sys.spec.kind.name() && r.nt == sys.spec.nt && r.nrf == sys.spec.nrf
                && r.m == sys.spec.mod_order && r.rotation_deg == sys.rotation_deg && r.nr == sys.spec.nr)
            .map(|r| (r.ebn0_db, r.ber))
            .collect()
    };
    let base = curve_of(&resolved[0].1);
    println!("gap report at BER {target:e}, eta = {eta} bit/s/Hz");
    match montecarlo::ebn0_at_ber(&base, target) {
        Some(db) => println!("  [{}] reaches target at {db:.2} dB", first.name),
        None => println!("  [{}] does not cross the target on this grid", first.name),
    }
    for (s, sys) in &resolved[1..] {
        match montecarlo::gap_db(&base, &curve_of(sys), target) {
            Some(g) => println!("  [{}] vs [{}]: {g:+.2} dB", first.name, s.name),
            None => println!("  [{}] vs [{}]: no crossing on this grid", first.name, s.name),
        }
    }
    write_results(&out, &rows, &experiment::meta_text("compare", &sections_of(&resolved)))
}

pub fn merge(output: &Path, inputs: &[PathBuf]) -> Result<(), CliError> {
    let rows = results::merge_files(inputs)?;
    let mut sections: Vec<Section> = Vec::new();
    for p in inputs {
        let Ok(m) = ExperimentConfig::from_file(results::meta_path(p)) else {
            continue;
        };
        for mut s in m.sections {
            if sections.contains(&s) {
                continue;
            }
            let base = s.name.clone();
            let mut n = 2;
            while sections.iter().any(|o| o.name == s.name) {
                s.name = format!("{base}_{n}");
                n += 1;
            }
            sections.push(s);
        }
    }
    results::write_file(output, &rows)?;
    if !sections.is_empty() {
        let mp = results::meta_path(output);
        std::fs::write(&mp, experiment::meta_text("merge", &sections)).map_err(|e| io_err(&mp, e))?;
    }
    println!("wrote {} rows to {}", rows.len(), output.display());
    Ok(())
}
