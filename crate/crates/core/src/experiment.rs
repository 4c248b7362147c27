//! Runs config sections and turns the results into CSV rows.

use crate::analysis::{optimize_rotation, AngleOptimum};
use crate::baselines::{CiodBaseline, MbmBaseline};
use crate::config::{ExperimentConfig, Rotation, Section, SystemKind, SystemSpec};
use crate::link::{abep_curve, CiodMbmLink, Link};
use crate::montecarlo::{self, BerCurve};
use crate::results::{ResultRow, Source};
use crate::{Error, Result};

/// A system with its rotation fixed and its link built.
pub struct ResolvedSystem {
    pub spec: SystemSpec,
    pub rotation_deg: f64,
    /// Optimizer output when the rotation was `auto`.
    pub optimum: Option<AngleOptimum>,
    pub link: Box<dyn Link<f64>>,
}

impl std::fmt::Debug for ResolvedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResolvedSystem")
            .field("spec", &self.spec)
            .field("rotation_deg", &self.rotation_deg)
            .finish_non_exhaustive()
    }
}

/// Optimal rotation for a section's system; `None` for MBM, whose error
/// rate does not depend on the rotation.
pub fn optimize_section(section: &Section) -> Result<Option<AngleOptimum>> {
    match section.system.scheme_config(0.0)? {
        Some(cfg) => optimize_rotation(&cfg, &section.angle_search()).map(Some),
        None => Ok(None),
    }
}

/// Optimal rotation of plain two-antenna CIOD with the same alphabet.
pub fn optimize_bare_ciod(section: &Section) -> Result<AngleOptimum> {
    let spec = SystemSpec {
        kind: SystemKind::Ciod,
        nt: 2,
        nrf: 0,
        ..section.system.clone()
    };
    let cfg = spec.scheme_config(0.0)?.expect("CIOD has a scheme config");
    optimize_rotation(&cfg, &section.angle_search())
}

/// Fixes the rotation (running the optimizer for `auto`) and builds the link.
pub fn resolve(section: &Section) -> Result<ResolvedSystem> {
    let (rotation_deg, optimum) = match section.system.rotation {
        Rotation::Degrees(d) => (d, None),
        Rotation::Auto => match optimize_section(section)? {
            Some(opt) => (opt.rotation_deg, Some(opt)),
            None => (0.0, None),
        },
    };
    let spec = SystemSpec {
        rotation: Rotation::Degrees(rotation_deg),
        ..section.system.clone()
    };
    let c = spec.constellation(rotation_deg)?;
    let link: Box<dyn Link<f64>> = match spec.kind {
        SystemKind::CiodMbm(_) => Box::new(CiodMbmLink::new(
            spec.scheme_config(rotation_deg)?.expect("scheme config"),
        )?),
        SystemKind::Mbm => Box::new(MbmBaseline::new(spec.nrf, spec.nr, c)?),
        SystemKind::Ciod => Box::new(CiodBaseline::new(spec.nr, c)?),
    };
    Ok(ResolvedSystem {
        spec,
        rotation_deg,
        optimum,
        link,
    })
}

/// Section with its rotation replaced by the resolved angle.
pub fn pinned(section: &Section, system: &ResolvedSystem) -> Section {
    Section {
        system: system.spec.clone(),
        ..section.clone()
    }
}

fn row(system: &ResolvedSystem, seed: u64, source: Source, ebn0_db: f64, ber: f64) -> ResultRow {
    let s = &system.spec;
    ResultRow {
        scheme: s.kind.name().to_string(),
        nt: s.nt,
        nrf: s.nrf,
        nr: s.nr,
        m: s.mod_order,
        rotation_deg: system.rotation_deg,
        source,
        ebn0_db,
        ber,
        bit_errors: 0,
        bits: 0,
        frames: 0,
        seed,
    }
}

/// Rows of a simulated curve.
pub fn sim_rows(system: &ResolvedSystem, seed: u64, curve: &BerCurve) -> Vec<ResultRow> {
    curve
        .points
        .iter()
        .map(|p| ResultRow {
            bit_errors: p.bit_errors,
            bits: p.bits,
            frames: p.frames,
            ..row(system, seed, Source::Sim, p.ebn0_db, p.ber)
        })
        .collect()
}

/// Monte Carlo over the section's grid.
pub fn simulate(section: &Section, system: &ResolvedSystem) -> Result<BerCurve> {
    montecarlo::run(system.link.as_ref(), &section.plan()?)
}

/// Union-bound rows over the section's grid.
pub fn theory_rows(section: &Section, system: &ResolvedSystem) -> Result<Vec<ResultRow>> {
    Ok(abep_curve(system.link.as_ref(), &section.grid()?)?
        .into_iter()
        .map(|(db, ber)| row(system, section.seed, Source::Theory, db, ber))
        .collect())
}

/// Finds the section a row came from.
pub fn section_for_row<'a>(config: &'a ExperimentConfig, row: &ResultRow) -> Option<&'a Section> {
    config.sections.iter().find(|s| {
        let sys = &s.system;
        sys.kind.name() == row.scheme
            && sys.nt == row.nt
            && sys.nrf == row.nrf
            && sys.nr == row.nr
            && sys.mod_order == row.m
            && match sys.rotation {
                Rotation::Degrees(d) => d.to_bits() == row.rotation_deg.to_bits(),
                Rotation::Auto => false,
            }
    })
}

/// Re-simulates a single row from the resolved config it was produced with.
pub fn rerun_row(config: &ExperimentConfig, row: &ResultRow, workers: usize) -> Result<ResultRow> {
    let section = section_for_row(config, row)
        .ok_or_else(|| Error::InvalidPlan(format!("no section matches row {row:?}")))?;
    let section = Section {
        seed: row.seed,
        workers,
        ..section.clone()
    };
    let system = resolve(&section)?;
    let plan = section.plan_for(vec![row.ebn0_db])?;
    let point = montecarlo::simulate_point(system.link.as_ref(), &plan, row.ebn0_db)?;
    Ok(sim_rows(&system, row.seed, &BerCurve { points: vec![point] }).remove(0))
}

/// Metadata text stored next to a result file: the resolved config, which
/// parses back with [`ExperimentConfig::parse`], preceded by comments on
/// the conventions used.
pub fn meta_text(command: &str, sections: &[Section]) -> String {
    let mut out = format!(
        "# ciod-mbm {command} {}\n\
         # Eb/N0: Eb = mean codeword energy / bits per codeword; unit energy per slot\n\
         # PSK/QAM labels: natural binary index; QAM points in column-major grid order\n\
         # CIOD-MBM index bits: antenna group and RF-mirror state, then two symbols\n\
         # mbm baseline: one transmit antenna, 2^nrf channel states, one slot\n\
         # ciod baseline: two transmit antennas, rotated symbols interleaved over two slots\n\
         # random streams: ChaCha8 keyed by seed, per Eb/N0 value and frame index\n",
        env!("CARGO_PKG_VERSION")
    );
    for s in sections {
        out.push('\n');
        out.push_str(&s.to_config_text());
    }
    out
}
