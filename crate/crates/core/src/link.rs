//! Common interface over everything the Monte Carlo engine can simulate.

use crate::analysis::UnionBound;
use crate::baselines::{CiodBaseline, MbmBaseline};
use crate::channel::{n0_from_ebn0, MbmChannel, Received};
use crate::detector::{BruteForceDetector, FastScheme1Detector};
use crate::encoder::{Scheme, SchemeConfig, SparseCodeword};
use crate::{Result, Scalar};

/// A transmission scheme: codeword mapping plus its receiver.
pub trait Link<T: Scalar>: Send + Sync {
    /// Short scheme name as written to result files.
    fn name(&self) -> &'static str;
    fn bits_per_codeword(&self) -> usize;
    fn slots(&self) -> usize;
    /// Columns of the channel matrix.
    fn realizations(&self) -> usize;
    fn nr(&self) -> usize;
    /// Codeword carrying the bit block of natural value `index`.
    fn codeword(&self, index: u64) -> SparseCodeword<T>;
    /// Detected bit-block value.
    fn detect(&self, y: &Received<T>, h: &MbmChannel<T>) -> u64;
    /// Every codeword in bit-block order.
    fn codebook(&self) -> Result<Vec<SparseCodeword<T>>>;

    /// Mean codeword energy; every scheme here sends unit energy per slot.
    fn mean_codeword_energy(&self) -> f64 {
        self.slots() as f64
    }

    /// Bits per channel use.
    fn spectral_efficiency(&self) -> f64 {
        self.bits_per_codeword() as f64 / self.slots() as f64
    }

    /// Noise level for a given Eb/N0.
    fn n0(&self, ebn0_db: f64) -> f64 {
        n0_from_ebn0(self.mean_codeword_energy(), self.bits_per_codeword(), ebn0_db)
    }
}

#[derive(Debug, Clone)]
enum Receiver<T> {
    Fast(FastScheme1Detector<T>),
    Brute(BruteForceDetector<T>),
}

/// CIOD-MBM link. Scheme I uses the equivalent-model detector, scheme II
/// brute-force ML.
#[derive(Debug, Clone)]
pub struct CiodMbmLink<T> {
    cfg: SchemeConfig<T>,
    receiver: Receiver<T>,
}

impl<T: Scalar> CiodMbmLink<T> {
    pub fn new(cfg: SchemeConfig<T>) -> Result<Self> {
        let receiver = match cfg.scheme() {
            Scheme::CiodMbmI => Receiver::Fast(FastScheme1Detector::new(&cfg)?),
            Scheme::CiodMbmII => Receiver::Brute(BruteForceDetector::new(&cfg)?),
        };
        Ok(Self { cfg, receiver })
    }

    /// Forces exhaustive ML regardless of scheme.
    pub fn brute_force(cfg: SchemeConfig<T>) -> Result<Self> {
        Ok(Self {
            receiver: Receiver::Brute(BruteForceDetector::new(&cfg)?),
            cfg,
        })
    }

    pub fn config(&self) -> &SchemeConfig<T> {
        &self.cfg
    }
}

impl<T: Scalar> Link<T> for CiodMbmLink<T> {
    fn name(&self) -> &'static str {
        self.cfg.scheme().name()
    }

    fn bits_per_codeword(&self) -> usize {
        self.cfg.bits_per_codeword()
    }

    fn slots(&self) -> usize {
        2
    }

    fn realizations(&self) -> usize {
        self.cfg.realizations()
    }

    fn nr(&self) -> usize {
        self.cfg.nr()
    }

    fn codeword(&self, index: u64) -> SparseCodeword<T> {
        let sel = self
            .cfg
            .selection_for_index(index)
            .expect("index below codebook size");
        self.cfg.codeword(&sel)
    }

    fn detect(&self, y: &Received<T>, h: &MbmChannel<T>) -> u64 {
        match &self.receiver {
            Receiver::Fast(d) => d.search(y, h).0,
            Receiver::Brute(d) => d.search(y, h).0,
        }
    }

    fn codebook(&self) -> Result<Vec<SparseCodeword<T>>> {
        self.cfg.codewords()
    }
}

impl<T: Scalar> Link<T> for MbmBaseline<T> {
    fn name(&self) -> &'static str {
        "mbm"
    }

    fn bits_per_codeword(&self) -> usize {
        MbmBaseline::bits_per_codeword(self)
    }

    fn slots(&self) -> usize {
        1
    }

    fn realizations(&self) -> usize {
        self.states()
    }

    fn nr(&self) -> usize {
        MbmBaseline::nr(self)
    }

    fn codeword(&self, index: u64) -> SparseCodeword<T> {
        self.encode_index(index).expect("index below codebook size")
    }

    fn detect(&self, y: &Received<T>, h: &MbmChannel<T>) -> u64 {
        MbmBaseline::detect(self, y, h)
            .expect("engine supplies matching dimensions")
            .index
    }

    fn codebook(&self) -> Result<Vec<SparseCodeword<T>>> {
        self.codewords()
    }
}

impl<T: Scalar> Link<T> for CiodBaseline<T> {
    fn name(&self) -> &'static str {
        "ciod"
    }

    fn bits_per_codeword(&self) -> usize {
        CiodBaseline::bits_per_codeword(self)
    }

    fn slots(&self) -> usize {
        2
    }

    fn realizations(&self) -> usize {
        2
    }

    fn nr(&self) -> usize {
        CiodBaseline::nr(self)
    }

    fn codeword(&self, index: u64) -> SparseCodeword<T> {
        self.encode_index(index).expect("index below codebook size")
    }

    fn detect(&self, y: &Received<T>, h: &MbmChannel<T>) -> u64 {
        CiodBaseline::detect(self, y, h)
            .expect("engine supplies matching dimensions")
            .index
    }

    fn codebook(&self) -> Result<Vec<SparseCodeword<T>>> {
        self.codewords()
    }
}

/// Union-bound ABEP of a link at each Eb/N0 (clamped to 0.5).
pub fn abep_curve<T: Scalar, L: Link<T> + ?Sized>(link: &L, ebn0_db: &[f64]) -> Result<Vec<(f64, f64)>> {
    let bound = UnionBound::new(&link.codebook()?)?;
    Ok(ebn0_db
        .iter()
        .map(|&db| (db, bound.abep(link.n0(db), link.nr())))
        .collect())
}
