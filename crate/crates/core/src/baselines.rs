//! Single-RF-chain reference schemes: conventional MBM and conventional CIOD.

use crate::channel::{MbmChannel, Received};
use crate::constellation::RotatedConstellation;
use crate::detector::{check_dims, FastScheme1Detector};
use crate::encoder::{Scheme, SchemeConfig, SparseCodeword};
use crate::{Error, Result, Scalar};

/// Decision of a baseline detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineDetection<T> {
    pub index: u64,
    pub metric: T,
    pub evaluations: u64,
}

/// One transmit antenna with `Nrf` RF mirrors; one slot per codeword.
///
/// Bit layout: `Nrf` state bits, then `log2 M` symbol bits.
#[derive(Debug, Clone, PartialEq)]
pub struct MbmBaseline<T> {
    nrf: usize,
    nr: usize,
    constellation: RotatedConstellation<T>,
}

impl<T: Scalar> MbmBaseline<T> {
    pub fn new(nrf: usize, nr: usize, constellation: RotatedConstellation<T>) -> Result<Self> {
        if nr == 0 {
            return Err(Error::InvalidConfig("Nr must be at least 1".into()));
        }
        if nrf + constellation.bits_per_symbol() > 20 {
            return Err(Error::InvalidConfig(format!("Nrf = {nrf} is too large")));
        }
        Ok(Self {
            nrf,
            nr,
            constellation,
        })
    }

    pub fn nrf(&self) -> usize {
        self.nrf
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn constellation(&self) -> &RotatedConstellation<T> {
        &self.constellation
    }

    pub fn states(&self) -> usize {
        1 << self.nrf
    }

    pub fn bits_per_codeword(&self) -> usize {
        self.nrf + self.constellation.bits_per_symbol()
    }

    /// Bits per channel use, `Nrf + log2 M`.
    pub fn spectral_efficiency(&self) -> f64 {
        self.bits_per_codeword() as f64
    }

    pub fn encode_index(&self, index: u64) -> Result<SparseCodeword<T>> {
        let size = 1u64 << self.bits_per_codeword();
        if index >= size {
            return Err(Error::IndexOutOfRange {
                what: "bit block",
                index: index as usize,
                max: size as usize - 1,
            });
        }
        let m = self.constellation.order() as u64;
        let mut x = SparseCodeword::new(self.states(), 1);
        x.push(
            (index / m) as usize,
            0,
            self.constellation.point((index % m) as usize),
        )?;
        Ok(x)
    }

    pub fn encode(&self, bits: &[u8]) -> Result<SparseCodeword<T>> {
        if bits.len() != self.bits_per_codeword() {
            return Err(Error::BitLength {
                expected: self.bits_per_codeword(),
                got: bits.len(),
            });
        }
        self.encode_index(crate::constellation::bits_to_index(bits)?)
    }

    /// ML over all `2^Nrf M` (state, symbol) hypotheses.
    pub fn detect(&self, y: &Received<T>, h: &MbmChannel<T>) -> Result<BaselineDetection<T>> {
        check_dims(y, h, self.nr, self.states(), 1)?;
        let y = y.slot(0);
        let points = self.constellation.points();
        let mut best = (0u64, T::infinity());
        for state in 0..self.states() {
            let col = h.column(state);
            for (s, p) in points.iter().enumerate() {
                let d = y
                    .iter()
                    .zip(col)
                    .fold(T::zero(), |acc, (yr, hr)| acc + (*yr - *hr * *p).norm_sqr());
                if d < best.1 {
                    best = ((state * points.len() + s) as u64, d);
                }
            }
        }
        Ok(BaselineDetection {
            index: best.0,
            metric: best.1,
            evaluations: (self.states() * points.len()) as u64,
        })
    }

    pub fn codewords(&self) -> Result<Vec<SparseCodeword<T>>> {
        (0..1u64 << self.bits_per_codeword())
            .map(|i| self.encode_index(i))
            .collect()
    }
}

/// Two-antenna CIOD, `diag(Re x0 + j Im x1, Re x1 + j Im x0)`.
///
/// This is the scheme I mapping with `Nt = 2` and no mirrors, so it reuses
/// the scheme I encoder and the equivalent-model detector with the two
/// realizations fixed to the two antennas.
#[derive(Debug, Clone)]
pub struct CiodBaseline<T> {
    cfg: SchemeConfig<T>,
    detector: FastScheme1Detector<T>,
}

impl<T: Scalar> CiodBaseline<T> {
    pub fn new(nr: usize, constellation: RotatedConstellation<T>) -> Result<Self> {
        let cfg = SchemeConfig::new(Scheme::CiodMbmI, 2, 0, nr, constellation)?;
        Ok(Self {
            detector: FastScheme1Detector::new(&cfg)?,
            cfg,
        })
    }

    /// Equivalent scheme I configuration (`Nt = 2`, `Nrf = 0`).
    pub fn config(&self) -> &SchemeConfig<T> {
        &self.cfg
    }

    pub fn nr(&self) -> usize {
        self.cfg.nr()
    }

    pub fn constellation(&self) -> &RotatedConstellation<T> {
        self.cfg.constellation()
    }

    pub fn bits_per_codeword(&self) -> usize {
        self.cfg.bits_per_codeword()
    }

    /// `log2 M` bits per channel use.
    pub fn spectral_efficiency(&self) -> f64 {
        self.cfg.spectral_efficiency()
    }

    pub fn encode(&self, bits: &[u8]) -> Result<SparseCodeword<T>> {
        Ok(self.cfg.encode(bits)?.1)
    }

    pub fn encode_index(&self, index: u64) -> Result<SparseCodeword<T>> {
        Ok(self.cfg.encode_index(index)?.1)
    }

    /// Symbol-by-symbol ML.
    pub fn detect(&self, y: &Received<T>, h: &MbmChannel<T>) -> Result<BaselineDetection<T>> {
        let d = self.detector.detect(y, h)?;
        Ok(BaselineDetection {
            index: d.index,
            metric: d.metric,
            evaluations: d.evaluations,
        })
    }

    pub fn codewords(&self) -> Result<Vec<SparseCodeword<T>>> {
        self.cfg.codewords()
    }
}
