//! Maximum-likelihood detection.
//!
//! [`BruteForceDetector`] searches the full codebook and serves both
//! schemes. [`FastScheme1Detector`] uses the real-valued equivalent model
//! of scheme I, where the `x0` and `x1` columns are orthogonal, so each
//! symbol is detected on its own for every antenna/state hypothesis.
//! Both return the lowest bit-block value among equal metrics, which makes
//! them interchangeable decision functions.

use num_complex::Complex;

use crate::channel::{MbmChannel, Received};
use crate::encoder::{CodewordSelection, Scheme, SchemeConfig, SparseCodeword};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Detection<T> {
    /// Natural value of the detected bit block.
    pub index: u64,
    pub selection: CodewordSelection<T>,
    /// `||Y - H X||_F^2` at the decision.
    pub metric: T,
    /// Number of metric evaluations performed.
    pub evaluations: u64,
}

impl<T: Scalar> Detection<T> {
    pub fn bits(&self, cfg: &SchemeConfig<T>) -> Vec<u8> {
        cfg.bits_of(self.index)
    }
}

/// `||Y - H X||_F^2` for a sparse codeword.
pub fn residual_energy<T: Scalar>(y: &Received<T>, h: &MbmChannel<T>, x: &SparseCodeword<T>) -> T {
    let nr = y.nr();
    let mut total = T::zero();
    let mut acc = vec![Complex::new(T::zero(), T::zero()); nr];
    for t in 0..y.slots() {
        acc.copy_from_slice(y.slot(t));
        for e in x.slot_entries(t) {
            for (a, hv) in acc.iter_mut().zip(h.column(e.realization)) {
                *a = *a - *hv * e.value;
            }
        }
        total = acc.iter().fold(total, |s, v| s + v.norm_sqr());
    }
    total
}

pub(crate) fn check_dims<T: Scalar>(
    y: &Received<T>,
    h: &MbmChannel<T>,
    nr: usize,
    realizations: usize,
    slots: usize,
) -> Result<()> {
    if y.nr() != nr || h.nr() != nr || h.realizations() != realizations || y.slots() != slots {
        return Err(Error::DimensionMismatch(format!(
            "expected Y {nr}x{slots} and H {nr}x{realizations}, got Y {}x{} and H {}x{}",
            y.nr(),
            y.slots(),
            h.nr(),
            h.realizations()
        )));
    }
    Ok(())
}

/// Exhaustive ML search over every codeword.
#[derive(Debug, Clone)]
pub struct BruteForceDetector<T> {
    cfg: SchemeConfig<T>,
    codebook: Vec<SparseCodeword<T>>,
}

impl<T: Scalar> BruteForceDetector<T> {
    pub fn new(cfg: &SchemeConfig<T>) -> Result<Self> {
        Ok(Self {
            codebook: cfg.codewords()?,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &SchemeConfig<T> {
        &self.cfg
    }

    pub fn detect(&self, y: &Received<T>, h: &MbmChannel<T>) -> Result<Detection<T>> {
        check_dims(y, h, self.cfg.nr(), self.cfg.realizations(), 2)?;
        let (index, metric) = self.search(y, h);
        Ok(Detection {
            index,
            selection: self.cfg.selection_for_index(index)?,
            metric,
            evaluations: self.codebook.len() as u64,
        })
    }

    /// Index and metric of the best codeword without building a selection.
    pub fn search(&self, y: &Received<T>, h: &MbmChannel<T>) -> (u64, T) {
        let mut best = 0;
        let mut best_metric = T::infinity();
        for (i, x) in self.codebook.iter().enumerate() {
            let d = residual_energy(y, h, x);
            if d < best_metric {
                best = i;
                best_metric = d;
            }
        }
        (best as u64, best_metric)
    }
}

/// Received block stacked as `[Re y_1 | Im y_1 | Re y_2 | Im y_2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedObservation<T> {
    pub yeq: Vec<T>,
}

impl<T: Scalar> RealizedObservation<T> {
    pub fn new(y: &Received<T>) -> Self {
        let mut yeq = Vec::with_capacity(2 * y.nr() * y.slots());
        for t in 0..y.slots() {
            yeq.extend(y.slot(t).iter().map(|v| v.re));
            yeq.extend(y.slot(t).iter().map(|v| v.im));
        }
        Self { yeq }
    }

    pub fn energy(&self) -> T {
        self.yeq.iter().fold(T::zero(), |acc, v| acc + *v * *v)
    }
}

/// Real-valued `4Nr x 4` model of a scheme I codeword whose slot-1 symbol
/// uses realization `m1` and slot-2 symbol uses `m2`.
///
/// Columns are ordered `[x0_re, x0_im, x1_re, x1_im]`; the first two form
/// `H1`, the last two `H2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel<T> {
    pub m1: usize,
    pub m2: usize,
    nr: usize,
    columns: [Vec<T>; 4],
}

impl<T: Scalar> EquivalentChannel<T> {
    /// `m1` and `m2` are 0-based columns of `h`.
    pub fn build(h: &MbmChannel<T>, m1: usize, m2: usize) -> Result<Self> {
        for m in [m1, m2] {
            if m >= h.realizations() {
                return Err(Error::IndexOutOfRange {
                    what: "realization",
                    index: m + 1,
                    max: h.realizations(),
                });
            }
        }
        let nr = h.nr();
        let zero = T::zero();
        let (h1, h2) = (h.column(m1), h.column(m2));
        let mut columns: [Vec<T>; 4] = std::array::from_fn(|_| vec![zero; 4 * nr]);
        for r in 0..nr {
            // slot 1 carries Re x0 + j Im x1 through h1
            columns[0][r] = h1[r].re;
            columns[0][nr + r] = h1[r].im;
            columns[3][r] = -h1[r].im;
            columns[3][nr + r] = h1[r].re;
            // slot 2 carries Re x1 + j Im x0 through h2
            columns[2][2 * nr + r] = h2[r].re;
            columns[2][3 * nr + r] = h2[r].im;
            columns[1][2 * nr + r] = -h2[r].im;
            columns[1][3 * nr + r] = h2[r].re;
        }
        Ok(Self { m1, m2, nr, columns })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.columns[j]
    }

    /// `Heq x_eq` for `x_eq = [x0_re, x0_im, x1_re, x1_im]`.
    pub fn apply(&self, x_eq: [T; 4]) -> Vec<T> {
        let mut out = vec![T::zero(); 4 * self.nr];
        for (col, &coef) in self.columns.iter().zip(&x_eq) {
            for (o, c) in out.iter_mut().zip(col) {
                *o = *o + *c * coef;
            }
        }
        out
    }

    /// `H1^T H2`, identically zero by construction.
    pub fn cross_gram(&self) -> [[T; 2]; 2] {
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y);
        [
            [dot(&self.columns[0], &self.columns[2]), dot(&self.columns[0], &self.columns[3])],
            [dot(&self.columns[1], &self.columns[2]), dot(&self.columns[1], &self.columns[3])],
        ]
    }

    /// `Heq^T yeq`.
    pub fn correlate(&self, obs: &RealizedObservation<T>) -> [T; 4] {
        self.columns.each_ref().map(|c| {
            c.iter()
                .zip(&obs.yeq)
                .fold(T::zero(), |s, (a, b)| s + *a * *b)
        })
    }

    /// Squared column norms, the diagonal of `Heq^T Heq`.
    pub fn column_energies(&self) -> [T; 4] {
        self.columns
            .each_ref()
            .map(|c| c.iter().fold(T::zero(), |s, v| s + *v * *v))
    }
}

/// Equivalent-model statistics of one hypothesis, computed straight from
/// the two channel columns. Matches `EquivalentChannel::correlate` and
/// `column_energies` without materialising `Heq`.
#[derive(Debug, Clone, Copy)]
struct Projection<T> {
    corr: [T; 4],
    energy: [T; 4],
}

impl<T: Scalar> Projection<T> {
    fn new(h1: &[Complex<T>], h2: &[Complex<T>], y1: &[Complex<T>], y2: &[Complex<T>]) -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        let z1 = h1.iter().zip(y1).fold(zero, |s, (h, y)| s + h.conj() * *y);
        let z2 = h2.iter().zip(y2).fold(zero, |s, (h, y)| s + h.conj() * *y);
        let e1 = h1.iter().fold(T::zero(), |s, h| s + h.norm_sqr());
        let e2 = h2.iter().fold(T::zero(), |s, h| s + h.norm_sqr());
        Self {
            corr: [z1.re, z2.im, z2.re, z1.im],
            energy: [e1, e2, e2, e1],
        }
    }

    /// `||yeq - H1 [re im]^T||^2 - ||yeq||^2` for `x0`, or the `H2` analogue for `x1`.
    fn partial(&self, first: bool, s: Complex<T>) -> T {
        let two = T::one() + T::one();
        let o = if first { 0 } else { 2 };
        s.re * (s.re * self.energy[o] - two * self.corr[o])
            + s.im * (s.im * self.energy[o + 1] - two * self.corr[o + 1])
    }
}

/// Symbol-by-symbol ML for scheme I.
#[derive(Debug, Clone)]
pub struct FastScheme1Detector<T> {
    cfg: SchemeConfig<T>,
}

impl<T: Scalar> FastScheme1Detector<T> {
    pub fn new(cfg: &SchemeConfig<T>) -> Result<Self> {
        if cfg.scheme() != Scheme::CiodMbmI {
            return Err(Error::SchemeMismatch {
                expected: "scheme I",
                got: "scheme II",
            });
        }
        Ok(Self { cfg: cfg.clone() })
    }

    pub fn detect(&self, y: &Received<T>, h: &MbmChannel<T>) -> Result<Detection<T>> {
        check_dims(y, h, self.cfg.nr(), self.cfg.realizations(), 2)?;
        let (index, metric, evaluations) = self.search(y, h);
        Ok(Detection {
            index,
            selection: self.cfg.selection_for_index(index)?,
            metric,
            evaluations,
        })
    }

    /// Index, metric and evaluation count of the decision.
    pub fn search(&self, y: &Received<T>, h: &MbmChannel<T>) -> (u64, T, u64) {
        let points = self.cfg.constellation().points();
        let m = points.len() as u64;
        let y_energy = y.energy();
        let (y1, y2) = (y.slot(0), y.slot(1));
        let mut best = (0u64, T::infinity());
        let mut evaluations = 0u64;
        for idx in 0..self.cfg.index_combinations() {
            let (k1, k2, states) = self.cfg.index_selection(idx);
            let m1 = self.cfg.realization(k1, states.slot1());
            let m2 = self.cfg.realization(k2, states.slot2());
            let proj = Projection::new(h.column(m1), h.column(m2), y1, y2);
            let (x0, d0) = argmin(points, |s| proj.partial(true, s));
            let (x1, d1) = argmin(points, |s| proj.partial(false, s));
            evaluations += 2 * m;
            // d0 + d1 of the equivalent model minus the doubly counted ||yeq||^2
            let d = y_energy + d0 + d1;
            if d < best.1 {
                best = ((idx as u64 * m + x0 as u64) * m + x1 as u64, d);
            }
        }
        (best.0, best.1.max(T::zero()), evaluations)
    }
}

fn argmin<T: Scalar>(points: &[Complex<T>], f: impl Fn(Complex<T>) -> T) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (i, p) in points.iter().enumerate() {
        let d = f(*p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub fn brute_force_ml<T: Scalar>(
    cfg: &SchemeConfig<T>,
    y: &Received<T>,
    h: &MbmChannel<T>,
) -> Result<Detection<T>> {
    BruteForceDetector::new(cfg)?.detect(y, h)
}

pub fn fast_ml_scheme1<T: Scalar>(
    cfg: &SchemeConfig<T>,
    y: &Received<T>,
    h: &MbmChannel<T>,
) -> Result<Detection<T>> {
    FastScheme1Detector::new(cfg)?.detect(y, h)
}

pub fn build_equivalent<T: Scalar>(
    h: &MbmChannel<T>,
    m1: usize,
    m2: usize,
) -> Result<EquivalentChannel<T>> {
    EquivalentChannel::build(h, m1, m2)
}
