//! Frame-level BER simulation with reproducible per-frame random streams.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{transmit, MbmChannel};
use crate::link::Link;
use crate::rng::{StreamFactory, SubStream};
use crate::{Error, Result, Scalar};

/// Default bit-error target per point.
pub const DEFAULT_MIN_BIT_ERRORS: u64 = 200;
/// Default frame cap per point.
pub const DEFAULT_MAX_FRAMES: u64 = 1_000_000;
/// Frames per work unit.
pub const DEFAULT_BATCH_FRAMES: u64 = 2_000;

const POINT_KEY_OFFSET: i64 = 1 << 23;

/// What to simulate at each point and when to stop.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPlan {
    ebn0_db: Vec<f64>,
    max_frames: u64,
    min_bit_errors: u64,
    seed: u64,
    workers: usize,
    batch_frames: u64,
    noiseless: bool,
}

impl SimPlan {
    pub fn new(ebn0_db: Vec<f64>, seed: u64) -> Result<Self> {
        if ebn0_db.is_empty() {
            return Err(Error::InvalidPlan("empty Eb/N0 grid".into()));
        }
        if ebn0_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPlan("Eb/N0 grid has a non-finite value".into()));
        }
        if ebn0_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPlan("Eb/N0 grid is not strictly increasing".into()));
        }
        for &db in &ebn0_db {
            point_key(db)?;
        }
        Ok(Self {
            ebn0_db,
            max_frames: DEFAULT_MAX_FRAMES,
            min_bit_errors: DEFAULT_MIN_BIT_ERRORS,
            seed,
            workers: 1,
            batch_frames: DEFAULT_BATCH_FRAMES,
            noiseless: false,
        })
    }

    /// Uniform grid `start, start + step, ...` up to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, step: f64, seed: u64) -> Result<Self> {
        Self::new(ebn0_grid(start, stop, step)?, seed)
    }

    pub fn with_max_frames(mut self, max_frames: u64) -> Result<Self> {
        if max_frames == 0 {
            return Err(Error::InvalidPlan("max frames must be at least 1".into()));
        }
        self.max_frames = max_frames;
        Ok(self)
    }

    pub fn with_min_bit_errors(mut self, min_bit_errors: u64) -> Result<Self> {
        if min_bit_errors == 0 {
            return Err(Error::InvalidPlan("min bit errors must be at least 1".into()));
        }
        self.min_bit_errors = min_bit_errors;
        Ok(self)
    }

    pub fn with_workers(mut self, workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidPlan("worker count must be at least 1".into()));
        }
        self.workers = workers;
        Ok(self)
    }

    pub fn with_batch_frames(mut self, batch_frames: u64) -> Result<Self> {
        if batch_frames == 0 {
            return Err(Error::InvalidPlan("batch size must be at least 1".into()));
        }
        self.batch_frames = batch_frames;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Skips the noise draw entirely (debugging aid).
    pub fn noiseless(mut self, on: bool) -> Self {
        self.noiseless = on;
        self
    }

    pub fn ebn0_db(&self) -> &[f64] {
        &self.ebn0_db
    }

    pub fn max_frames(&self) -> u64 {
        self.max_frames
    }

    pub fn min_bit_errors(&self) -> u64 {
        self.min_bit_errors
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn batch_frames(&self) -> u64 {
        self.batch_frames
    }

    pub fn is_noiseless(&self) -> bool {
        self.noiseless
    }
}

/// Grid points from `start` to `stop` inclusive, rounded to 1e-9 dB.
pub fn ebn0_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::InvalidPlan(format!(
            "bad Eb/N0 range {start}..{stop} step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 10_000 {
        return Err(Error::InvalidPlan("Eb/N0 grid has too many points".into()));
    }
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// Stream key of an Eb/N0 point.
///
/// Keyed by the value (to 1e-3 dB) rather than the grid position so a single
/// point re-run on its own sees the same random draws.
pub fn point_key(ebn0_db: f64) -> Result<u64> {
    let key = (ebn0_db * 1000.0).round();
    if !key.is_finite() || key.abs() >= POINT_KEY_OFFSET as f64 {
        return Err(Error::InvalidPlan(format!("Eb/N0 {ebn0_db} dB out of range")));
    }
    Ok((key as i64 + POINT_KEY_OFFSET) as u64)
}

/// Statistics of one simulated point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub n0: f64,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Normal-approximation 95% half-width.
    pub ci95: f64,
    pub elapsed: Duration,
    /// Stopped on the frame cap before reaching the error target.
    pub under_sampled: bool,
}

impl BerPoint {
    /// Equality ignoring wall time.
    pub fn same_counts(&self, other: &Self) -> bool {
        self.ebn0_db == other.ebn0_db
            && self.frames == other.frames
            && self.bits == other.bits
            && self.bit_errors == other.bit_errors
            && self.ber.to_bits() == other.ber.to_bits()
    }
}

/// Simulated BER curve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    /// `(Eb/N0, BER)` pairs.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.ebn0_db, p.ber)).collect()
    }

    pub fn same_counts(&self, other: &Self) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.same_counts(b))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    frames: u64,
    bit_errors: u64,
}

fn run_batch<T: Scalar, L: Link<T> + ?Sized>(
    link: &L,
    streams: &StreamFactory,
    point: u64,
    n0: f64,
    frames: std::ops::Range<u64>,
) -> Tally {
    let bits = link.bits_per_codeword();
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let mut tally = Tally::default();
    for frame in frames {
        let sent = streams.stream(SubStream::Data, point, frame).random::<u64>() & mask;
        let x = link.codeword(sent);
        let h = MbmChannel::draw(
            link.nr(),
            link.realizations(),
            &mut streams.stream(SubStream::Channel, point, frame),
        );
        let y = transmit(&h, &x, n0, &mut streams.stream(SubStream::Noise, point, frame))
            .expect("codeword matches channel");
        let got = link.detect(&y, &h);
        tally.frames += 1;
        tally.bit_errors += u64::from((sent ^ got).count_ones());
    }
    tally
}

/// Simulates one Eb/N0 point.
pub fn simulate_point<T: Scalar, L: Link<T> + ?Sized>(
    link: &L,
    plan: &SimPlan,
    ebn0_db: f64,
) -> Result<BerPoint> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidPlan(e.to_string()))?;
    let streams = StreamFactory::new(plan.seed);
    pool.install(|| point_in_pool(link, plan, &streams, ebn0_db))
}

fn point_in_pool<T: Scalar, L: Link<T> + ?Sized>(
    link: &L,
    plan: &SimPlan,
    streams: &StreamFactory,
    ebn0_db: f64,
) -> Result<BerPoint> {
    let start = Instant::now();
    let point = point_key(ebn0_db)?;
    let n0 = link.n0(ebn0_db);
    let noise = if plan.noiseless { 0.0 } else { n0 };
    let batch = plan.batch_frames;
    let round = plan.workers as u64 * 2;
    let mut total = Tally::default();
    let mut next = 0u64;
    'outer: while next < plan.max_frames {
        let starts: Vec<u64> = (0..round)
            .map(|i| next + i * batch)
            .take_while(|&s| s < plan.max_frames)
            .collect();
        let tallies: Vec<Tally> = starts
            .par_iter()
            .map(|&s| run_batch(link, streams, point, noise, s..(s + batch).min(plan.max_frames)))
            .collect();
        for t in tallies {
            total.frames += t.frames;
            total.bit_errors += t.bit_errors;
            next += t.frames;
            if total.bit_errors >= plan.min_bit_errors {
                break 'outer;
            }
        }
    }
    let bits = total.frames * link.bits_per_codeword() as u64;
    let ber = total.bit_errors as f64 / bits as f64;
    Ok(BerPoint {
        ebn0_db,
        n0,
        frames: total.frames,
        bits,
        bit_errors: total.bit_errors,
        ber,
        ci95: 1.96 * (ber * (1.0 - ber) / bits as f64).sqrt(),
        elapsed: start.elapsed(),
        under_sampled: total.bit_errors < plan.min_bit_errors,
    })
}

/// Simulates every point of the plan.
pub fn run<T: Scalar, L: Link<T> + ?Sized>(link: &L, plan: &SimPlan) -> Result<BerCurve> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidPlan(e.to_string()))?;
    let streams = StreamFactory::new(plan.seed);
    let points = pool.install(|| {
        plan.ebn0_db
            .iter()
            .map(|&db| point_in_pool(link, plan, &streams, db))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(BerCurve { points })
}

/// Negative least-squares slope of `log10 BER` against `Eb/N0 [dB] / 10`
/// over points inside `window` with `0 < BER < 1e-2`.
pub fn diversity_slope(curve: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(db, ber)| *db >= window.0 && *db <= window.1 && *ber > 0.0 && *ber < 1e-2)
        .map(|&(db, ber)| (db / 10.0, ber.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            found: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

/// Eb/N0 where the curve first crosses `target`, by linear interpolation of
/// `log10 BER` between neighbouring points.
pub fn ebn0_at_ber(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.log10();
    curve.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.1 >= target && b.1 <= target && a.1 > 0.0 && b.1 > 0.0 {
            let (la, lb) = (a.1.log10(), b.1.log10());
            if la == lb {
                return Some(a.0);
            }
            Some(a.0 + (la - lt) / (la - lb) * (b.0 - a.0))
        } else {
            None
        }
    })
}

/// Horizontal gap `reference - candidate` in dB at `target` BER; positive
/// when the candidate needs less Eb/N0.
pub fn gap_db(candidate: &[(f64, f64)], reference: &[(f64, f64)], target: f64) -> Option<f64> {
    Some(ebn0_at_ber(reference, target)? - ebn0_at_ber(candidate, target)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::MbmBaseline;
    use crate::constellation::RotatedConstellation;
    use crate::encoder::{Scheme, SchemeConfig};
    use crate::link::{abep_curve, CiodMbmLink};

    fn base_link(theta: f64) -> CiodMbmLink<f64> {
        let c = RotatedConstellation::psk(4, theta).unwrap();
        CiodMbmLink::new(SchemeConfig::new(Scheme::CiodMbmI, 4, 1, 2, c).unwrap()).unwrap()
    }

    #[test]
    fn plan_validation() {
        assert!(SimPlan::new(vec![], 1).is_err());
        assert!(SimPlan::new(vec![0.0, 0.0], 1).is_err());
        assert!(SimPlan::new(vec![2.0, 1.0], 1).is_err());
        assert!(SimPlan::new(vec![f64::NAN], 1).is_err());
        assert!(SimPlan::new(vec![1e7], 1).is_err());
        let p = SimPlan::new(vec![0.0], 1).unwrap();
        assert!(p.clone().with_max_frames(0).is_err());
        assert!(p.clone().with_min_bit_errors(0).is_err());
        assert!(p.clone().with_workers(0).is_err());
        assert_eq!(ebn0_grid(0.0, 20.0, 2.0).unwrap().len(), 11);
        assert_eq!(ebn0_grid(0.0, 1.0, 0.1).unwrap()[3], 0.3);
        assert!(ebn0_grid(1.0, 0.0, 1.0).is_err());
        assert!(point_key(-3.0).unwrap() < point_key(-2.999).unwrap());
    }

    #[test]
    fn noiseless_gives_zero_ber() {
        let plan = SimPlan::new(vec![0.0, 10.0], 5)
            .unwrap()
            .with_max_frames(3000)
            .unwrap()
            .noiseless(true);
        let curve = run(&base_link(13.2885), &plan).unwrap();
        for p in &curve.points {
            assert_eq!(p.bit_errors, 0);
            assert_eq!(p.frames, 3000);
            assert_eq!(p.bits, 3000 * 6);
            assert!(p.under_sampled);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let link = MbmBaseline::new(2, 2, RotatedConstellation::<f64>::psk(4, 0.0).unwrap()).unwrap();
        let plan = SimPlan::new(vec![0.0, 6.0, 12.0], 9)
            .unwrap()
            .with_max_frames(20_000)
            .unwrap()
            .with_batch_frames(500)
            .unwrap();
        let one = run(&link, &plan).unwrap();
        let many = run(&link, &plan.clone().with_workers(8).unwrap()).unwrap();
        assert!(one.same_counts(&many));
        let single = simulate_point(&link, &plan, 6.0).unwrap();
        assert!(single.same_counts(&one.points[1]));
        for p in &one.points {
            assert_eq!(p.ber, p.bit_errors as f64 / p.bits as f64);
            assert_eq!(p.bits, p.frames * 4);
        }
        assert!(one.points[0].bit_errors >= 200 && !one.points[0].under_sampled);
    }

    #[test]
    fn simulation_sits_under_the_bound() {
        let link = base_link(13.2885);
        let grid = [4.0, 8.0];
        let plan = SimPlan::new(grid.to_vec(), 21).unwrap();
        let sim = run(&link, &plan).unwrap();
        let theory = abep_curve(&link, &grid).unwrap();
        for (s, t) in sim.points.iter().zip(&theory) {
            assert!(s.ber - 2.0 * s.ci95 <= t.1, "{} vs {}", s.ber, t.1);
            assert!(s.ber > t.1 / 4.0, "{} vs {}", s.ber, t.1);
        }
    }

    #[test]
    fn slope_and_crossing_helpers() {
        let flat: Vec<_> = (0..5).map(|i| (i as f64 * 2.0, 1e-3)).collect();
        assert!(diversity_slope(&flat, (0.0, 10.0)).unwrap().abs() < 1e-12);
        let steep: Vec<_> = (0..6)
            .map(|i| {
                let db = 10.0 + 2.0 * i as f64;
                (db, 10f64.powf(-4.0 * db / 10.0))
            })
            .collect();
        assert!((diversity_slope(&steep, (10.0, 20.0)).unwrap() - 4.0).abs() < 1e-9);
        assert!(matches!(
            diversity_slope(&steep, (10.0, 12.0)),
            Err(Error::InsufficientPoints { found: 2, .. })
        ));
        let c = [(0.0, 1e-2), (10.0, 1e-4)];
        assert!((ebn0_at_ber(&c, 1e-3).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(ebn0_at_ber(&c, 1e-5), None);
        assert_eq!(gap_db(&c, &c, 1e-3), Some(0.0));
        let shifted = [(3.0, 1e-2), (13.0, 1e-4)];
        assert!((gap_db(&c, &shifted, 1e-3).unwrap() - 3.0).abs() < 1e-12);
    }
}
