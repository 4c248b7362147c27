//! Coding gain distance, rotation-angle search and union-bound error analysis.
//!
//! Codewords span at most two slots, so every difference matrix `D = X - X'`
//! has rank at most two and the nonzero eigenvalues of `D D^H` are those of
//! the 2x2 Gram matrix `D^H D`. Everything here works from that Gram matrix.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::channel::MbmChannel;
use crate::encoder::{SchemeConfig, SparseCodeword};
use crate::{Error, Result, Scalar};

/// Eigenvalues at or below this are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;
/// Default quadrature order for the PEP integral.
pub const QUADRATURE_ORDER: usize = 64;

/// Nonzero spectrum of `(X - X')(X - X')^H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDistance {
    /// Eigenvalues, largest first.
    pub lambda: [f64; 2],
    /// `lambda[0] * lambda[1]`, zero when rank deficient.
    pub determinant: f64,
    pub rank: usize,
}

impl PairDistance {
    fn from_gram(a: f64, b: f64, c_sqr: f64) -> Self {
        let half_tr = 0.5 * (a + b);
        let det = a * b - c_sqr;
        let disc = (half_tr * half_tr - det).max(0.0).sqrt();
        let l1 = half_tr + disc;
        // second root from the product keeps precision when l2 << l1
        let l2 = if l1 > 0.0 { (det / l1).max(0.0) } else { 0.0 };
        let rank = [l1, l2].iter().filter(|&&l| l > RANK_TOLERANCE).count();
        Self {
            lambda: [l1, l2],
            determinant: if rank == 2 { l1 * l2 } else { 0.0 },
            rank,
        }
    }
}

/// Codeword as dense `f64` slot columns, for repeated pair evaluation.
#[derive(Debug, Clone, PartialEq)]
struct DenseCodeword {
    slots: Vec<Vec<Complex<f64>>>,
}

impl DenseCodeword {
    fn new<T: Scalar>(x: &SparseCodeword<T>) -> Self {
        let mut slots = vec![vec![Complex::new(0.0, 0.0); x.realizations()]; x.slots()];
        for e in x.entries() {
            slots[e.slot][e.realization] = Complex::new(e.value.re.as_f64(), e.value.im.as_f64());
        }
        Self { slots }
    }

    fn distance(&self, other: &Self) -> PairDistance {
        let zero = Complex::new(0.0, 0.0);
        match self.slots.len() {
            1 => {
                let a: f64 = self.slots[0]
                    .iter()
                    .zip(&other.slots[0])
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum();
                PairDistance::from_gram(a, 0.0, 0.0)
            }
            _ => {
                let (mut a, mut b, mut c) = (0.0, 0.0, zero);
                let cols = self.slots[0]
                    .iter()
                    .zip(&other.slots[0])
                    .zip(self.slots[1].iter().zip(&other.slots[1]));
                for ((x0, y0), (x1, y1)) in cols {
                    let d0 = x0 - y0;
                    let d1 = x1 - y1;
                    a += d0.norm_sqr();
                    b += d1.norm_sqr();
                    c += d0.conj() * d1;
                }
                PairDistance::from_gram(a, b, c.norm_sqr())
            }
        }
    }
}

fn dense_codebook<T: Scalar>(codebook: &[SparseCodeword<T>]) -> Result<Vec<DenseCodeword>> {
    if codebook.len() < 2 {
        return Err(Error::EmptyCodebook);
    }
    let (rows, slots) = (codebook[0].realizations(), codebook[0].slots());
    if slots == 0 || slots > 2 {
        return Err(Error::DimensionMismatch(format!(
            "codewords must span one or two slots, got {slots}"
        )));
    }
    if codebook
        .iter()
        .any(|x| x.realizations() != rows || x.slots() != slots)
    {
        return Err(Error::DimensionMismatch(
            "codewords of different shapes".into(),
        ));
    }
    Ok(codebook.iter().map(DenseCodeword::new).collect())
}

/// Spectrum of the difference between two codewords.
pub fn pair_distance<T: Scalar>(x: &SparseCodeword<T>, x_hat: &SparseCodeword<T>) -> Result<PairDistance> {
    if x.realizations() != x_hat.realizations() || x.slots() != x_hat.slots() {
        return Err(Error::DimensionMismatch("codewords of different shapes".into()));
    }
    if x.slots() == 0 || x.slots() > 2 {
        return Err(Error::DimensionMismatch(format!(
            "codewords must span one or two slots, got {}",
            x.slots()
        )));
    }
    Ok(DenseCodeword::new(x).distance(&DenseCodeword::new(x_hat)))
}

/// Minimum determinant of `(X - X')(X - X')^H` over all distinct pairs;
/// zero when any pair is rank deficient.
pub fn coding_gain_distance<T: Scalar>(codebook: &[SparseCodeword<T>]) -> Result<f64> {
    let dense = dense_codebook(codebook)?;
    let rows: Vec<Result<f64>> = (0..dense.len())
        .into_par_iter()
        .map(|i| {
            let mut row_min = f64::INFINITY;
            for j in i + 1..dense.len() {
                let d = dense[i].distance(&dense[j]);
                if d.lambda[0] == 0.0 {
                    return Err(Error::DuplicateCodeword(i, j));
                }
                row_min = row_min.min(d.determinant);
            }
            Ok(row_min)
        })
        .collect();
    rows.into_iter()
        .try_fold(f64::INFINITY, |acc, r| r.map(|v| acc.min(v)))
}

/// Grid-then-golden-section search over the rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSearch {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
    pub tolerance_deg: f64,
}

impl Default for AngleSearch {
    fn default() -> Self {
        Self {
            start_deg: 0.0,
            stop_deg: 90.0,
            step_deg: 0.1,
            tolerance_deg: 1e-4,
        }
    }
}

impl AngleSearch {
    /// Interior grid points of `(start, stop)`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step_deg > 0.0 && self.tolerance_deg > 0.0 && self.stop_deg > self.start_deg) {
            return Err(Error::InvalidSearch(format!("{self:?}")));
        }
        let n = ((self.stop_deg - self.start_deg) / self.step_deg).round() as usize;
        Ok((1..n)
            .map(|i| self.start_deg + i as f64 * self.step_deg)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleOptimum {
    pub rotation_deg: f64,
    pub delta_min: f64,
    /// `(angle, delta_min)` for every grid point.
    pub trace: Vec<(f64, f64)>,
}

/// Maximises `objective` over the search range. Ties on the grid keep the smallest angle.
pub fn optimize_angle<F>(search: &AngleSearch, objective: F) -> Result<AngleOptimum>
where
    F: Fn(f64) -> Result<f64>,
{
    let grid = search.grid()?;
    let mut trace = Vec::with_capacity(grid.len());
    let mut best = (f64::NAN, 0.0);
    for &theta in &grid {
        let d = objective(theta)?;
        trace.push((theta, d));
        if d > best.1 * (1.0 + 1e-9) {
            best = (theta, d);
        }
    }
    if !(best.1 > 0.0) {
        return Err(Error::NoFullDiversityAngle);
    }
    // golden-section refinement inside the neighbouring grid cells
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.0 - search.step_deg, best.0 + search.step_deg);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (objective(c)?, objective(d)?);
    while hi - lo > search.tolerance_deg {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let f_mid = objective(mid)?;
    let (rotation_deg, delta_min) = if f_mid >= best.1 { (mid, f_mid) } else { best };
    Ok(AngleOptimum {
        rotation_deg,
        delta_min,
        trace,
    })
}

/// Rotation angle maximising the coding gain distance of the full codebook.
pub fn optimize_rotation<T: Scalar>(cfg: &SchemeConfig<T>, search: &AngleSearch) -> Result<AngleOptimum> {
    optimize_angle(search, |theta| {
        coding_gain_distance(&cfg.with_rotation(theta).codewords()?)
    })
}

struct Quadrature {
    /// `(sin^2 theta, weight / pi)` over `[0, pi/2]`.
    nodes: Vec<(f64, f64)>,
}

impl Quadrature {
    fn new(order: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order > 0"));
        let half = std::f64::consts::FRAC_PI_4;
        let nodes = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| {
                let theta = half * (x + 1.0);
                (theta.sin().powi(2), w * half / std::f64::consts::PI)
            })
            .collect();
        Self { nodes }
    }

    fn cached(order: usize) -> Option<&'static Quadrature> {
        static Q64: OnceLock<Quadrature> = OnceLock::new();
        static Q128: OnceLock<Quadrature> = OnceLock::new();
        match order {
            64 => Some(Q64.get_or_init(|| Quadrature::new(64))),
            128 => Some(Q128.get_or_init(|| Quadrature::new(128))),
            _ => None,
        }
    }

    fn pep(&self, lambda: [f64; 2], n0: f64, nr: usize) -> f64 {
        let c = [lambda[0] / (4.0 * n0), lambda[1] / (4.0 * n0)];
        let nr = nr as i32;
        self.nodes
            .iter()
            .map(|&(s, w)| {
                let f = (s / (s + c[0])) * (s / (s + c[1]));
                w * f.powi(nr)
            })
            .sum()
    }
}

/// Unconditional PEP for a pair spectrum, Gauss-Legendre of the given order.
pub fn pep_from_spectrum(lambda: [f64; 2], n0: f64, nr: usize, order: usize) -> f64 {
    match Quadrature::cached(order) {
        Some(q) => q.pep(lambda, n0, nr),
        None => Quadrature::new(order).pep(lambda, n0, nr),
    }
}

/// `P(X -> X')` averaged over i.i.d. Rayleigh fading with `nr` receive antennas.
pub fn pep<T: Scalar>(x: &SparseCodeword<T>, x_hat: &SparseCodeword<T>, n0: f64, nr: usize) -> Result<f64> {
    let d = pair_distance(x, x_hat)?;
    if d.lambda[0] == 0.0 {
        return Err(Error::IdenticalPair);
    }
    Ok(pep_from_spectrum(d.lambda, n0, nr, QUADRATURE_ORDER))
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `P(X -> X' | H) = Q(sqrt(||H (X - X')||^2 / (2 N0)))`.
pub fn conditional_pep<T: Scalar>(
    x: &SparseCodeword<T>,
    x_hat: &SparseCodeword<T>,
    h: &MbmChannel<T>,
    n0: f64,
) -> Result<f64> {
    let hx = h.apply(x)?;
    let hx_hat = h.apply(x_hat)?;
    let delta: f64 = hx
        .as_slice()
        .iter()
        .zip(hx_hat.as_slice())
        .map(|(a, b)| (*a - *b).norm_sqr().as_f64())
        .sum();
    Ok(q_function((delta / (2.0 * n0)).sqrt()))
}

#[derive(Debug, Clone, Copy)]
struct PairTerm {
    lambda: [f64; 2],
    bit_errors: u32,
}

/// Union bound on the average bit error probability of a codebook whose
/// `i`-th codeword carries the bit block of natural value `i`.
#[derive(Debug, Clone)]
pub struct UnionBound {
    bits: usize,
    size: usize,
    /// Unordered pairs `i < j`, grouped by `i`.
    rows: Vec<Vec<PairTerm>>,
}

impl UnionBound {
    /// Codebooks above this many codewords take noticeable time per SNR point.
    pub const COST_WARNING_SIZE: usize = 1 << 14;

    pub fn new<T: Scalar>(codebook: &[SparseCodeword<T>]) -> Result<Self> {
        let dense = dense_codebook(codebook)?;
        let size = dense.len();
        if !size.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "codebook size {size} is not a power of two"
            )));
        }
        let rows = (0..size)
            .into_par_iter()
            .map(|i| {
                (i + 1..size)
                    .map(|j| {
                        let d = dense[i].distance(&dense[j]);
                        if d.lambda[0] == 0.0 {
                            return Err(Error::DuplicateCodeword(i, j));
                        }
                        Ok(PairTerm {
                            lambda: d.lambda,
                            bit_errors: (i ^ j).count_ones(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            bits: size.trailing_zeros() as usize,
            size,
            rows,
        })
    }

    pub fn is_expensive(&self) -> bool {
        self.size > Self::COST_WARNING_SIZE
    }

    pub fn bits_per_codeword(&self) -> usize {
        self.bits
    }

    /// Union sum `1/(B 2^B) sum_X sum_{X' != X} P(X -> X') e(X, X')`, unclamped.
    ///
    /// PEP and bit-error count are symmetric in the pair, so each unordered
    /// pair is evaluated once and counted twice.
    pub fn union_sum(&self, n0: f64, nr: usize) -> f64 {
        let q = Quadrature::cached(QUADRATURE_ORDER).expect("default order is cached");
        let row_sums: Vec<f64> = self
            .rows
            .par_iter()
            .map(|row| {
                row.iter()
                    .map(|t| q.pep(t.lambda, n0, nr) * f64::from(t.bit_errors))
                    .sum()
            })
            .collect();
        2.0 * row_sums.iter().sum::<f64>() / (self.bits as f64 * self.size as f64)
    }

    /// Same bound with every ordered pair evaluated independently.
    pub fn union_sum_ordered<T: Scalar>(codebook: &[SparseCodeword<T>], n0: f64, nr: usize) -> Result<f64> {
        let dense = dense_codebook(codebook)?;
        let size = dense.len();
        let bits = size.trailing_zeros() as usize;
        let mut total = 0.0;
        for (i, x) in dense.iter().enumerate() {
            for (j, x_hat) in dense.iter().enumerate() {
                if i != j {
                    let d = x.distance(x_hat);
                    total += pep_from_spectrum(d.lambda, n0, nr, QUADRATURE_ORDER)
                        * f64::from((i ^ j).count_ones());
                }
            }
        }
        Ok(total / (bits as f64 * size as f64))
    }

    /// Bound clamped to 0.5 for reporting.
    pub fn abep(&self, n0: f64, nr: usize) -> f64 {
        self.union_sum(n0, nr).min(0.5)
    }
}

/// Reported ABEP of a codebook at noise level `n0`.
pub fn abep<T: Scalar>(codebook: &[SparseCodeword<T>], n0: f64, nr: usize) -> Result<f64> {
    Ok(UnionBound::new(codebook)?.abep(n0, nr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, scheme_n0};
    use crate::constellation::RotatedConstellation;
    use crate::encoder::Scheme;
    use crate::rng::{StreamFactory, SubStream};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn scheme1(theta: f64) -> SchemeConfig<f64> {
        let c = RotatedConstellation::psk(4, theta).unwrap();
        SchemeConfig::new(Scheme::CiodMbmI, 4, 1, 2, c).unwrap()
    }

    /// Trace and second elementary symmetric function of the R x R matrix
    /// D D^H, i.e. `l1 + l2` and `l1 l2` of its nonzero spectrum.
    fn outer_invariants(x: &SparseCodeword<f64>, y: &SparseCodeword<f64>) -> (f64, f64) {
        let (a, b) = (x.to_dense(), y.to_dense());
        let r = x.realizations();
        let d: Vec<Complex<f64>> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
        let mut m = vec![vec![Complex::new(0.0, 0.0); r]; r];
        for i in 0..r {
            for j in 0..r {
                for t in 0..x.slots() {
                    m[i][j] += d[t * r + i] * d[t * r + j].conj();
                }
            }
        }
        let trace = (0..r).map(|i| m[i][i].re).sum();
        let mut e2 = 0.0;
        for i in 0..r {
            for j in i + 1..r {
                e2 += m[i][i].re * m[j][j].re - m[i][j].norm_sqr();
            }
        }
        (trace, e2)
    }

    #[test]
    fn gram_spectrum_matches_outer_product() {
        let cfg = scheme1(13.2885);
        let book = cfg.codewords().unwrap();
        let mut rng = StreamFactory::new(1).stream(SubStream::Aux, 0, 0);
        for _ in 0..50 {
            let i = rng.random_range(0..book.len());
            let j = (i + rng.random_range(1..book.len())) % book.len();
            let d = pair_distance(&book[i], &book[j]).unwrap();
            let (trace, e2) = outer_invariants(&book[i], &book[j]);
            assert!((d.lambda[0] + d.lambda[1] - trace).abs() < 1e-12);
            assert!((d.lambda[0] * d.lambda[1] - e2).abs() < 1e-12);
        }
    }

    #[test]
    fn unrotated_scheme1_loses_diversity() {
        assert_eq!(coding_gain_distance(&scheme1(0.0).codewords().unwrap()).unwrap(), 0.0);
        let rotated = coding_gain_distance(&scheme1(13.2885).codewords().unwrap()).unwrap();
        assert!(rotated > 0.5, "{rotated}");
    }

    #[test]
    fn degenerate_codebooks_rejected() {
        let book = scheme1(10.0).codewords().unwrap();
        assert_eq!(coding_gain_distance(&book[..1]), Err(Error::EmptyCodebook));
        let dup = vec![book[3].clone(), book[3].clone()];
        assert_eq!(coding_gain_distance(&dup), Err(Error::DuplicateCodeword(0, 1)));
        assert_eq!(pep(&book[3], &book[3], 1.0, 1), Err(Error::IdenticalPair));
    }

    #[test]
    fn common_phase_invariance() {
        let book = scheme1(20.0).codewords().unwrap();
        let phase = Complex::from_polar(1.0, 0.7);
        let rotated: Vec<_> = book
            .iter()
            .map(|x| {
                let mut y = SparseCodeword::new(x.realizations(), x.slots());
                for e in x.entries() {
                    y.push(e.realization, e.slot, e.value * phase).unwrap();
                }
                y
            })
            .collect();
        assert_relative_eq!(
            coding_gain_distance(&book).unwrap(),
            coding_gain_distance(&rotated).unwrap(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn pep_limits_and_closed_form() {
        assert_relative_eq!(pep_from_spectrum([0.0, 0.0], 1.0, 2, 64), 0.5, max_relative = 1e-14);
        assert_relative_eq!(pep_from_spectrum([1.0, 0.5], f64::INFINITY, 2, 64), 0.5, max_relative = 1e-14);
        for (lambda, n0) in [(0.3, 0.1), (2.0, 0.05), (1.0, 1.0), (4.0, 0.001)] {
            let c: f64 = lambda / (4.0 * n0);
            let closed = 0.5 * (1.0 - (c / (1.0 + c)).sqrt());
            assert_relative_eq!(pep_from_spectrum([lambda, 0.0], n0, 1, 64), closed, max_relative = 1e-10);
        }
    }

    #[test]
    fn quadrature_order_self_check() {
        let mut rng = StreamFactory::new(5).stream(SubStream::Aux, 0, 0);
        for _ in 0..200 {
            let l = [rng.random_range(0.0..8.0), rng.random_range(0.0..2.0)];
            let n0 = 10f64.powf(rng.random_range(-4.0..1.0));
            let nr = rng.random_range(1..5);
            let a = pep_from_spectrum(l, n0, nr, 64);
            let b = pep_from_spectrum(l, n0, nr, 128);
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn pep_monotone() {
        let mut last = 0.5;
        for k in 0..30 {
            let n0 = 10f64.powf(1.0 - 0.2 * k as f64);
            let p = pep_from_spectrum([1.0, 0.3], n0, 2, 64);
            assert!(p < last);
            last = p;
        }
        let mut last = 0.5;
        for k in 1..30 {
            let p = pep_from_spectrum([0.1 * k as f64, 0.05], 0.1, 2, 64);
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn union_bound_symmetric_equals_ordered() {
        let tiny = SchemeConfig::<f64>::new(
            Scheme::CiodMbmI,
            2,
            1,
            2,
            RotatedConstellation::psk(2, 30.0).unwrap(),
        )
        .unwrap();
        for cfg in [tiny, scheme1(13.2885)] {
            let book = cfg.codewords().unwrap();
            let ub = UnionBound::new(&book).unwrap();
            for db in [0.0, 8.0, 16.0] {
                let n0 = scheme_n0(&cfg, db);
                let a = ub.union_sum(n0, 2);
                let b = UnionBound::union_sum_ordered(&book, n0, 2).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn abep_clamps_at_low_snr() {
        let book = scheme1(13.2885).codewords().unwrap();
        assert_eq!(abep(&book, 1e6, 2).unwrap(), 0.5);
        assert!(UnionBound::new(&book).unwrap().union_sum(1e6, 2) > 0.5);
    }

    #[test]
    fn cpep_average_tracks_pep() {
        let cfg = scheme1(13.2885);
        let book = cfg.codewords().unwrap();
        let f = StreamFactory::new(77);
        let n0 = 1.0;
        let exact = pep(&book[5], &book[42], n0, 2).unwrap();
        let trials = 20_000;
        let (mut acc, mut acc2) = (0.0, 0.0);
        for i in 0..trials {
            let h = draw_channel(&cfg, &mut f.stream(SubStream::Channel, 0, i));
            let p = conditional_pep(&book[5], &book[42], &h, n0).unwrap();
            acc += p;
            acc2 += p * p;
        }
        let mean = acc / trials as f64;
        let sigma = ((acc2 / trials as f64 - mean * mean) / trials as f64).sqrt();
        assert!((mean - exact).abs() < 4.0 * sigma, "{mean} vs {exact} (sigma {sigma})");
    }

    #[test]
    fn angle_search_on_toy_objective() {
        let search = AngleSearch::default();
        let opt = optimize_angle(&search, |t| Ok(1.0 - (t - 37.123_45f64).abs())).unwrap();
        assert!((opt.rotation_deg - 37.12345).abs() < 1e-4);
        assert_eq!(opt.trace.len(), 899);
        assert_eq!(
            optimize_angle(&search, |_| Ok(0.0)),
            Err(Error::NoFullDiversityAngle)
        );
    }
}
