//! Rayleigh block-fading MBM channel and AWGN.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::encoder::{SchemeConfig, SparseCodeword};
use crate::{Error, Result, Scalar};

/// `Nr x (Nt 2^Nrf)` channel matrix; column `m` is the fade vector of realization `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MbmChannel<T> {
    nr: usize,
    realizations: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> MbmChannel<T> {
    /// Builds a channel from column-major data.
    pub fn from_columns(nr: usize, realizations: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != nr * realizations {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {nr}x{realizations} channel",
                data.len()
            )));
        }
        Ok(Self {
            nr,
            realizations,
            data,
        })
    }

    /// Draws i.i.d. CN(0, 1) entries.
    pub fn draw<R: Rng + ?Sized>(nr: usize, realizations: usize, rng: &mut R) -> Self {
        let data = (0..nr * realizations)
            .map(|_| complex_gaussian(rng, std::f64::consts::FRAC_1_SQRT_2))
            .collect();
        Self {
            nr,
            realizations,
            data,
        }
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn realizations(&self) -> usize {
        self.realizations
    }

    pub fn column(&self, m: usize) -> &[Complex<T>] {
        &self.data[m * self.nr..(m + 1) * self.nr]
    }

    pub fn get(&self, r: usize, m: usize) -> Complex<T> {
        self.data[m * self.nr + r]
    }

    /// Noiseless product `H X`.
    pub fn apply(&self, x: &SparseCodeword<T>) -> Result<Received<T>> {
        if x.realizations() != self.realizations {
            return Err(Error::DimensionMismatch(format!(
                "codeword has {} rows, channel has {} columns",
                x.realizations(),
                self.realizations
            )));
        }
        let mut y = Received::zeros(self.nr, x.slots());
        for e in x.entries() {
            let col = self.column(e.realization);
            let out = y.slot_mut(e.slot);
            for (o, h) in out.iter_mut().zip(col) {
                *o = *o + *h * e.value;
            }
        }
        Ok(y)
    }
}

/// Received block, `Nr x slots`, stored slot by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Received<T> {
    nr: usize,
    slots: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> Received<T> {
    pub fn zeros(nr: usize, slots: usize) -> Self {
        Self {
            nr,
            slots,
            data: vec![Complex::new(T::zero(), T::zero()); nr * slots],
        }
    }

    pub fn from_slots(nr: usize, slots: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != nr * slots {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {nr}x{slots} block",
                data.len()
            )));
        }
        Ok(Self { nr, slots, data })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn slot(&self, t: usize) -> &[Complex<T>] {
        &self.data[t * self.nr..(t + 1) * self.nr]
    }

    pub fn slot_mut(&mut self, t: usize) -> &mut [Complex<T>] {
        &mut self.data[t * self.nr..(t + 1) * self.nr]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr())
    }
}

/// Noise power spectral density (linear).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    n0: f64,
}

impl NoiseModel {
    pub fn new(n0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::InvalidConfig(format!("N0 = {n0} must be positive")));
        }
        Ok(Self { n0 })
    }

    /// N0 for a target Eb/N0, where `Eb = codeword_energy / bits_per_codeword`.
    pub fn from_ebn0(codeword_energy: f64, bits_per_codeword: usize, ebn0_db: f64) -> Result<Self> {
        Self::new(n0_from_ebn0(codeword_energy, bits_per_codeword, ebn0_db))
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }
}

/// `N0 = Eb 10^(-Eb/N0 / 10)` with `Eb = codeword_energy / bits_per_codeword`.
pub fn n0_from_ebn0(codeword_energy: f64, bits_per_codeword: usize, ebn0_db: f64) -> f64 {
    codeword_energy / bits_per_codeword as f64 * 10f64.powf(-ebn0_db / 10.0)
}

pub fn ebn0_from_n0(codeword_energy: f64, bits_per_codeword: usize, n0: f64) -> f64 {
    10.0 * (codeword_energy / bits_per_codeword as f64 / n0).log10()
}

/// Noise level of a CIOD-MBM configuration; the codebook's mean energy is 2.
pub fn scheme_n0<T: Scalar>(cfg: &SchemeConfig<T>, ebn0_db: f64) -> f64 {
    n0_from_ebn0(2.0, cfg.bits_per_codeword(), ebn0_db)
}

/// Draws the `Nr x Nt 2^Nrf` channel of a configuration.
pub fn draw_channel<T: Scalar, R: Rng + ?Sized>(cfg: &SchemeConfig<T>, rng: &mut R) -> MbmChannel<T> {
    MbmChannel::draw(cfg.nr(), cfg.realizations(), rng)
}

/// `Y = H X + N` with N i.i.d. CN(0, n0). `n0 = 0` skips the noise draw.
pub fn transmit<T: Scalar, R: Rng + ?Sized>(
    h: &MbmChannel<T>,
    x: &SparseCodeword<T>,
    n0: f64,
    rng: &mut R,
) -> Result<Received<T>> {
    let mut y = h.apply(x)?;
    if n0 > 0.0 {
        let sigma = (n0 / 2.0).sqrt();
        for v in y.data.iter_mut() {
            *v = *v + complex_gaussian(rng, sigma);
        }
    }
    Ok(y)
}

fn complex_gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::of(re * sigma), T::of(im * sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::RotatedConstellation;
    use crate::encoder::Scheme;
    use crate::rng::{StreamFactory, SubStream};
    use approx::assert_abs_diff_eq;

    fn cfg() -> SchemeConfig<f64> {
        SchemeConfig::new(
            Scheme::CiodMbmI,
            4,
            1,
            2,
            RotatedConstellation::psk(4, 13.2885).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn channel_shape_and_determinism() {
        let f = StreamFactory::new(11);
        let h1: MbmChannel<f64> = draw_channel(&cfg(), &mut f.stream(SubStream::Channel, 0, 5));
        let h2: MbmChannel<f64> = draw_channel(&cfg(), &mut f.stream(SubStream::Channel, 0, 5));
        assert_eq!((h1.nr(), h1.realizations()), (2, 8));
        assert_eq!(h1, h2);
    }

    #[test]
    fn channel_entry_variance() {
        let mut rng = StreamFactory::new(3).stream(SubStream::Channel, 0, 0);
        let mut acc = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            let h = MbmChannel::<f64>::draw(1, 1, &mut rng);
            acc += h.get(0, 0).norm_sqr();
        }
        assert_abs_diff_eq!(acc / draws as f64, 1.0, epsilon = 0.02);
    }

    #[test]
    fn noiseless_sparse_product() {
        let cfg = cfg();
        let mut rng = StreamFactory::new(1).stream(SubStream::Channel, 0, 0);
        let h = draw_channel(&cfg, &mut rng);
        let (sel, x) = cfg.encode(&[1, 0, 1, 1, 1, 0]).unwrap();
        let y = transmit(&h, &x, 0.0, &mut rng).unwrap();
        for r in 0..2 {
            assert_eq!(y.slot(0)[r], h.get(r, 2) * sel.s0_tilde());
            assert_eq!(y.slot(1)[r], h.get(r, 6) * sel.s1_tilde());
        }
        let empty = SparseCodeword::new(8, 2);
        let y0 = transmit(&h, &empty, 0.0, &mut rng).unwrap();
        assert_eq!(y0.energy(), 0.0);
        let wrong = SparseCodeword::<f64>::new(4, 2);
        assert!(matches!(
            transmit(&h, &wrong, 0.0, &mut rng),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn noise_variance() {
        let cfg = cfg();
        let f = StreamFactory::new(5);
        let (_, x) = cfg.encode_index(17).unwrap();
        let trials = 100_000;
        let mut acc = 0.0;
        for i in 0..trials {
            let h = draw_channel(&cfg, &mut f.stream(SubStream::Channel, 0, i));
            let y = transmit(&h, &x, 0.5, &mut f.stream(SubStream::Noise, 0, i)).unwrap();
            let hx = h.apply(&x).unwrap();
            let d: f64 = y
                .as_slice()
                .iter()
                .zip(hx.as_slice())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            acc += d / 4.0;
        }
        let mean = acc / trials as f64;
        assert!((mean - 0.5).abs() < 0.01, "noise variance {mean}");
    }

    #[test]
    fn linear_in_codeword() {
        let cfg = cfg();
        let f = StreamFactory::new(9);
        let h = draw_channel(&cfg, &mut f.stream(SubStream::Channel, 0, 0));
        let (_, a) = cfg.encode_index(5).unwrap();
        let (_, b) = cfg.encode_index(40).unwrap();
        let mut sum = a.clone();
        for e in b.entries() {
            sum.push(e.realization, e.slot, e.value).unwrap();
        }
        let noise = || f.stream(SubStream::Noise, 0, 0);
        let ya = transmit(&h, &a, 0.3, &mut noise()).unwrap();
        let yb = h.apply(&b).unwrap();
        let ys = transmit(&h, &sum, 0.3, &mut noise()).unwrap();
        for ((s, a), b) in ys.as_slice().iter().zip(ya.as_slice()).zip(yb.as_slice()) {
            assert_abs_diff_eq!((s - (a + b)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ebn0_conversion() {
        // eta = 4 -> 8 bits per codeword of energy 2
        assert_abs_diff_eq!(n0_from_ebn0(2.0, 8, 0.0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(n0_from_ebn0(2.0, 6, 10.0), 1.0 / 30.0, epsilon = 1e-15);
        let n0 = n0_from_ebn0(2.0, 7, 13.7);
        assert_abs_diff_eq!(ebn0_from_n0(2.0, 7, n0), 13.7, epsilon = 1e-12);
        assert_abs_diff_eq!(scheme_n0(&cfg(), 10.0), 1.0 / 30.0, epsilon = 1e-15);
        assert!(NoiseModel::new(0.0).is_err());
        assert_eq!(NoiseModel::from_ebn0(2.0, 8, 0.0).unwrap().n0(), 0.25);
    }
}
