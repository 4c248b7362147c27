//! Rotated M-ary PSK and square QAM alphabets.
//!
//! Symbol index `i` is the natural binary value of its bit group, MSB
//! first. PSK index `i` sits at phase `2πi/M` before rotation; QAM indices
//! walk the square grid column by column (in-phase level outer, quadrature
//! level inner, top to bottom).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::{Error, Result, Scalar};

/// Largest supported alphabet size.
pub const MAX_ORDER: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModulationKind {
    Psk,
    Qam,
}

impl ModulationKind {
    pub fn name(self) -> &'static str {
        match self {
            ModulationKind::Psk => "psk",
            ModulationKind::Qam => "qam",
        }
    }
}

impl fmt::Display for ModulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "psk" => Ok(ModulationKind::Psk),
            "qam" => Ok(ModulationKind::Qam),
            other => Err(format!("unknown modulation kind `{other}` (expected psk or qam)")),
        }
    }
}

/// Unit average energy alphabet rotated by a fixed angle.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedConstellation<T> {
    kind: ModulationKind,
    rotation_deg: f64,
    bits: usize,
    points: Vec<Complex<T>>,
}

impl<T: Scalar> RotatedConstellation<T> {
    /// Builds the `order`-ary alphabet of `kind` rotated by `rotation_deg` degrees.
    pub fn new(kind: ModulationKind, order: usize, rotation_deg: f64) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) || !order.is_power_of_two() {
            return Err(Error::InvalidOrder(order));
        }
        let bits = order.trailing_zeros() as usize;
        let base: Vec<(f64, f64)> = match kind {
            ModulationKind::Psk => (0..order)
                .map(|i| {
                    let phase = 2.0 * std::f64::consts::PI * i as f64 / order as f64;
                    (phase.cos(), phase.sin())
                })
                .collect(),
            ModulationKind::Qam => {
                if !bits.is_multiple_of(2) {
                    return Err(Error::NonSquareQam(order));
                }
                let side = 1usize << (bits / 2);
                let top = (side - 1) as f64;
                let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
                (0..order)
                    .map(|i| {
                        let re = -top + 2.0 * (i / side) as f64;
                        let im = top - 2.0 * (i % side) as f64;
                        (re * scale, im * scale)
                    })
                    .collect()
            }
        };
        let (s, c) = rotation_deg.to_radians().sin_cos();
        let points = base
            .into_iter()
            .map(|(re, im)| Complex::new(T::of(re * c - im * s), T::of(re * s + im * c)))
            .collect();
        Ok(Self {
            kind,
            rotation_deg,
            bits,
            points,
        })
    }

    pub fn psk(order: usize, rotation_deg: f64) -> Result<Self> {
        Self::new(ModulationKind::Psk, order, rotation_deg)
    }

    pub fn qam(order: usize, rotation_deg: f64) -> Result<Self> {
        Self::new(ModulationKind::Qam, order, rotation_deg)
    }

    /// Same alphabet rotated to a different angle.
    pub fn with_rotation(&self, rotation_deg: f64) -> Self {
        Self::new(self.kind, self.points.len(), rotation_deg)
            .expect("order was validated at construction")
    }

    pub fn kind(&self) -> ModulationKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn rotation_deg(&self) -> f64 {
        self.rotation_deg
    }

    /// Bits carried by one symbol, log2(M).
    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex<T> {
        self.points[index]
    }

    /// Maps an MSB-first bit group to its symbol.
    pub fn symbol_from_bits(&self, bits: &[u8]) -> Result<Complex<T>> {
        if bits.len() != self.bits {
            return Err(Error::BitLength {
                expected: self.bits,
                got: bits.len(),
            });
        }
        Ok(self.points[bits_to_index(bits)? as usize])
    }

    /// Closest point to `value`; ties go to the lowest index.
    pub fn nearest_symbol(&self, value: Complex<T>) -> (usize, Complex<T>) {
        let mut best = 0;
        let mut best_dist = (value - self.points[0]).norm_sqr();
        for (i, p) in self.points.iter().enumerate().skip(1) {
            let d = (value - *p).norm_sqr();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        (best, self.points[best])
    }

    /// Mean of |point|^2 over the alphabet.
    pub fn average_energy(&self) -> T {
        let sum = self
            .points
            .iter()
            .fold(T::zero(), |acc, p| acc + p.norm_sqr());
        sum / T::of(self.points.len() as f64)
    }
}

/// Natural binary value of an MSB-first bit slice.
pub(crate) fn bits_to_index(bits: &[u8]) -> Result<u64> {
    bits.iter().try_fold(0u64, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | u64::from(b)),
        other => Err(Error::InvalidBit(other)),
    })
}

/// MSB-first expansion of `value` into `width` bits.
pub(crate) fn index_to_bits(value: u64, width: usize, out: &mut Vec<u8>) {
    out.extend((0..width).rev().map(|shift| ((value >> shift) & 1) as u8));
}
