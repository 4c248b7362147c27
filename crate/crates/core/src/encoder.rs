//! Bit-to-codeword mapping for CIOD-MBM scheme I and scheme II.
//!
//! A codeword spans two time slots. Its transmission matrix has one row
//! per channel realization, flattened antenna-major: antenna `k` in state
//! `l` (both 1-based) is row `(k - 1) * 2^Nrf + (l - 1)`.
//!
//! Bit block layouts (MSB first):
//!
//! * scheme I: `log2(Nt/2)` antenna-group bits, `Nrf` state bits,
//!   `log2 M` bits for `x0`, `log2 M` bits for `x1`;
//! * scheme II: `Nrf - 1` state bits, `log2 Nt` bits for `k1`,
//!   `log2 Nt` bits for `k2`, then the two symbol groups.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::constellation::{bits_to_index, index_to_bits, RotatedConstellation};
use crate::{Error, Result, Scalar};

/// Enumeration guard on the number of bits per codeword.
pub const MAX_ENUMERATION_BITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// One antenna pair `{k1, Nt/2 + k1}` sharing a single channel state.
    CiodMbmI,
    /// Separate antennas for real and imaginary parts, paired channel states.
    CiodMbmII,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::CiodMbmI => "ciod_mbm_1",
            Scheme::CiodMbmII => "ciod_mbm_2",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ciod_mbm_1" | "ciod_mbm_i" => Ok(Scheme::CiodMbmI),
            "ciod_mbm_2" | "ciod_mbm_ii" => Ok(Scheme::CiodMbmII),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

/// Validated system parameters for one CIOD-MBM link.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig<T> {
    scheme: Scheme,
    nt: usize,
    nrf: usize,
    nr: usize,
    constellation: RotatedConstellation<T>,
}

/// Channel states selected by a codeword (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSelection {
    /// Scheme I: both slots use state `l`.
    Shared(usize),
    /// Scheme II: slot 1 uses `l1`, slot 2 uses `l2 = 2^(Nrf-1) + l1`.
    Split { l1: usize, l2: usize },
}

impl StateSelection {
    pub fn slot1(self) -> usize {
        match self {
            StateSelection::Shared(l) => l,
            StateSelection::Split { l1, .. } => l1,
        }
    }

    pub fn slot2(self) -> usize {
        match self {
            StateSelection::Shared(l) => l,
            StateSelection::Split { l2, .. } => l2,
        }
    }
}

/// Index state carried by one codeword. Antenna and state indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodewordSelection<T> {
    pub k1: usize,
    pub k2: usize,
    pub states: StateSelection,
    pub x0_index: usize,
    pub x1_index: usize,
    pub x0: Complex<T>,
    pub x1: Complex<T>,
}

impl<T: Scalar> CodewordSelection<T> {
    /// Slot-1 interleaved symbol `Re x0 + j Im x1`.
    pub fn s0_tilde(&self) -> Complex<T> {
        Complex::new(self.x0.re, self.x1.im)
    }

    /// Slot-2 interleaved symbol `Re x1 + j Im x0`.
    pub fn s1_tilde(&self) -> Complex<T> {
        Complex::new(self.x1.re, self.x0.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodewordEntry<T> {
    /// 0-based row of the transmission matrix (column of H).
    pub realization: usize,
    /// 0-based time slot.
    pub slot: usize,
    pub value: Complex<T>,
}

/// Transmission matrix stored as its nonzero entries, sorted by (slot, realization).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodeword<T> {
    realizations: usize,
    slots: usize,
    entries: Vec<CodewordEntry<T>>,
}

impl<T: Scalar> SparseCodeword<T> {
    pub fn new(realizations: usize, slots: usize) -> Self {
        Self {
            realizations,
            slots,
            entries: Vec::with_capacity(2 * slots),
        }
    }

    /// Adds `value` at (`realization`, `slot`), merging with an existing entry.
    pub fn push(&mut self, realization: usize, slot: usize, value: Complex<T>) -> Result<()> {
        if realization >= self.realizations || slot >= self.slots {
            return Err(Error::DimensionMismatch(format!(
                "entry ({realization}, {slot}) outside {}x{} codeword",
                self.realizations, self.slots
            )));
        }
        let key = (slot, realization);
        match self
            .entries
            .binary_search_by(|e| (e.slot, e.realization).cmp(&key))
        {
            Ok(pos) => self.entries[pos].value = self.entries[pos].value + value,
            Err(pos) => self.entries.insert(
                pos,
                CodewordEntry {
                    realization,
                    slot,
                    value,
                },
            ),
        }
        Ok(())
    }

    pub fn realizations(&self) -> usize {
        self.realizations
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn entries(&self) -> &[CodewordEntry<T>] {
        &self.entries
    }

    pub fn slot_entries(&self, slot: usize) -> impl Iterator<Item = &CodewordEntry<T>> {
        self.entries.iter().filter(move |e| e.slot == slot)
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, e| acc + e.value.norm_sqr())
    }

    /// Dense column-major copy: slot `t` occupies `[t * R, (t + 1) * R)`.
    pub fn to_dense(&self) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.realizations * self.slots];
        for e in &self.entries {
            out[e.slot * self.realizations + e.realization] = e.value;
        }
        out
    }
}

impl<T: Scalar> SchemeConfig<T> {
    pub fn new(
        scheme: Scheme,
        nt: usize,
        nrf: usize,
        nr: usize,
        constellation: RotatedConstellation<T>,
    ) -> Result<Self> {
        if nt == 0 || !nt.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "Nt = {nt} must be a power of two"
            )));
        }
        if nr == 0 {
            return Err(Error::InvalidConfig("Nr must be at least 1".into()));
        }
        match scheme {
            Scheme::CiodMbmI if nt < 2 => {
                return Err(Error::InvalidConfig(
                    "scheme I splits the antennas into two groups and needs Nt >= 2".into(),
                ))
            }
            Scheme::CiodMbmII if nrf < 1 => {
                return Err(Error::InvalidConfig(
                    "scheme II pairs channel states and needs Nrf >= 1".into(),
                ))
            }
            _ => {}
        }
        if nrf > 20 {
            return Err(Error::InvalidConfig(format!("Nrf = {nrf} is too large")));
        }
        let cfg = Self {
            scheme,
            nt,
            nrf,
            nr,
            constellation,
        };
        if cfg.bits_per_codeword() > 62 {
            return Err(Error::InvalidConfig(format!(
                "{} bits per codeword do not fit the index type",
                cfg.bits_per_codeword()
            )));
        }
        Ok(cfg)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn nt(&self) -> usize {
        self.nt
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

    /// Same configuration with the constellation rotated to `rotation_deg`.
    pub fn with_rotation(&self, rotation_deg: f64) -> Self {
        Self {
            constellation: self.constellation.with_rotation(rotation_deg),
            ..self.clone()
        }
    }

    pub fn with_receive_antennas(&self, nr: usize) -> Result<Self> {
        Self::new(self.scheme, self.nt, self.nrf, nr, self.constellation.clone())
    }

    /// Channel states per antenna, 2^Nrf.
    pub fn states(&self) -> usize {
        1 << self.nrf
    }

    /// Columns of H, Nt * 2^Nrf.
    pub fn realizations(&self) -> usize {
        self.nt * self.states()
    }

    pub fn order(&self) -> usize {
        self.constellation.order()
    }

    /// Index bits per codeword (antenna and state selection).
    pub fn index_bits(&self) -> usize {
        let log_nt = self.nt.trailing_zeros() as usize;
        match self.scheme {
            Scheme::CiodMbmI => log_nt - 1 + self.nrf,
            Scheme::CiodMbmII => self.nrf - 1 + 2 * log_nt,
        }
    }

    /// Symbol bits per codeword, 2 log2 M.
    pub fn symbol_bits(&self) -> usize {
        2 * self.constellation.bits_per_symbol()
    }

    /// Bits per two-slot codeword, 2η.
    pub fn bits_per_codeword(&self) -> usize {
        self.index_bits() + self.symbol_bits()
    }

    /// Number of distinct codewords, 2^(2η).
    pub fn codebook_size(&self) -> u64 {
        1 << self.bits_per_codeword()
    }

    /// η in bit/s/Hz.
    pub fn spectral_efficiency(&self) -> f64 {
        self.bits_per_codeword() as f64 / 2.0
    }

    /// 0-based matrix row of antenna `k` in state `l` (both 1-based).
    pub fn realization(&self, k: usize, l: usize) -> usize {
        (k - 1) * self.states() + (l - 1)
    }

    /// Index hypotheses (antenna/state combinations), 2^ηc.
    pub fn index_combinations(&self) -> usize {
        1 << self.index_bits()
    }

    /// Decodes the index part (`0..2^ηc`) into antennas and states.
    pub fn index_selection(&self, index: usize) -> (usize, usize, StateSelection) {
        match self.scheme {
            Scheme::CiodMbmI => {
                let l = index % self.states() + 1;
                let k1 = index / self.states() + 1;
                (k1, k1 + self.nt / 2, StateSelection::Shared(l))
            }
            Scheme::CiodMbmII => {
                let k2 = index % self.nt + 1;
                let k1 = (index / self.nt) % self.nt + 1;
                let l1 = index / (self.nt * self.nt) + 1;
                let l2 = l1 + self.states() / 2;
                (k1, k2, StateSelection::Split { l1, l2 })
            }
        }
    }

    /// Selection for the codeword whose bit block has natural value `index`.
    pub fn selection_for_index(&self, index: u64) -> Result<CodewordSelection<T>> {
        if index >= self.codebook_size() {
            return Err(Error::IndexOutOfRange {
                what: "bit block",
                index: index as usize,
                max: self.codebook_size() as usize - 1,
            });
        }
        let m = self.order() as u64;
        let x1_index = (index % m) as usize;
        let x0_index = ((index / m) % m) as usize;
        let (k1, k2, states) = self.index_selection((index / (m * m)) as usize);
        Ok(CodewordSelection {
            k1,
            k2,
            states,
            x0_index,
            x1_index,
            x0: self.constellation.point(x0_index),
            x1: self.constellation.point(x1_index),
        })
    }

    /// Natural bit-block value of a selection; validates every index.
    pub fn selection_index(&self, sel: &CodewordSelection<T>) -> Result<u64> {
        let m = self.order();
        for (what, idx) in [("x0", sel.x0_index), ("x1", sel.x1_index)] {
            if idx >= m {
                return Err(Error::IndexOutOfRange {
                    what,
                    index: idx + 1,
                    max: m,
                });
            }
        }
        let check = |what, v: usize, max: usize| {
            if v == 0 || v > max {
                Err(Error::IndexOutOfRange {
                    what,
                    index: v,
                    max,
                })
            } else {
                Ok(())
            }
        };
        let index_part = match (self.scheme, sel.states) {
            (Scheme::CiodMbmI, StateSelection::Shared(l)) => {
                let half = self.nt / 2;
                check("k1", sel.k1, half)?;
                check("l", l, self.states())?;
                if sel.k2 != sel.k1 + half {
                    return Err(Error::IndexOutOfRange {
                        what: "k2",
                        index: sel.k2,
                        max: self.nt,
                    });
                }
                (sel.k1 - 1) * self.states() + (l - 1)
            }
            (Scheme::CiodMbmII, StateSelection::Split { l1, l2 }) => {
                let half = self.states() / 2;
                check("k1", sel.k1, self.nt)?;
                check("k2", sel.k2, self.nt)?;
                check("l1", l1, half)?;
                if l2 != l1 + half {
                    return Err(Error::IndexOutOfRange {
                        what: "l2",
                        index: l2,
                        max: self.states(),
                    });
                }
                ((l1 - 1) * self.nt + (sel.k1 - 1)) * self.nt + (sel.k2 - 1)
            }
            (Scheme::CiodMbmI, _) => {
                return Err(Error::SchemeMismatch {
                    expected: "a shared channel state",
                    got: "split states",
                })
            }
            (Scheme::CiodMbmII, _) => {
                return Err(Error::SchemeMismatch {
                    expected: "split channel states",
                    got: "a shared state",
                })
            }
        };
        Ok(((index_part * m + sel.x0_index) * m + sel.x1_index) as u64)
    }

    /// Places the selected symbols into the transmission matrix.
    pub fn codeword(&self, sel: &CodewordSelection<T>) -> SparseCodeword<T> {
        let zero = T::zero();
        let mut x = SparseCodeword::new(self.realizations(), 2);
        let (l1, l2) = (sel.states.slot1(), sel.states.slot2());
        let placements: [(usize, usize, Complex<T>); 4] = match self.scheme {
            Scheme::CiodMbmI => [
                (self.realization(sel.k1, l1), 0, sel.s0_tilde()),
                (self.realization(sel.k2, l2), 1, sel.s1_tilde()),
                (0, 0, Complex::new(zero, zero)),
                (0, 1, Complex::new(zero, zero)),
            ],
            Scheme::CiodMbmII => [
                (self.realization(sel.k1, l1), 0, Complex::new(sel.x0.re, zero)),
                (self.realization(sel.k2, l1), 0, Complex::new(zero, sel.x1.im)),
                (self.realization(sel.k1, l2), 1, Complex::new(sel.x1.re, zero)),
                (self.realization(sel.k2, l2), 1, Complex::new(zero, sel.x0.im)),
            ],
        };
        let count = if self.scheme == Scheme::CiodMbmI { 2 } else { 4 };
        for &(m, t, v) in &placements[..count] {
            x.push(m, t, v).expect("placement lies inside the codeword");
        }
        x
    }

    /// Maps a `2η`-bit block to its selection and transmission matrix.
    pub fn encode(&self, bits: &[u8]) -> Result<(CodewordSelection<T>, SparseCodeword<T>)> {
        let expected = self.bits_per_codeword();
        if bits.len() != expected {
            return Err(Error::BitLength {
                expected,
                got: bits.len(),
            });
        }
        self.encode_index(bits_to_index(bits)?)
    }

    pub fn encode_index(&self, index: u64) -> Result<(CodewordSelection<T>, SparseCodeword<T>)> {
        let sel = self.selection_for_index(index)?;
        let x = self.codeword(&sel);
        Ok((sel, x))
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode_bits(&self, sel: &CodewordSelection<T>) -> Result<Vec<u8>> {
        let index = self.selection_index(sel)?;
        Ok(self.bits_of(index))
    }

    /// MSB-first bit block of a codeword index.
    pub fn bits_of(&self, index: u64) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.bits_per_codeword());
        index_to_bits(index, self.bits_per_codeword(), &mut out);
        out
    }

    /// Every (bit block, codeword) pair in natural bit-block order.
    pub fn enumerate_codebook(&self) -> Result<Vec<(Vec<u8>, SparseCodeword<T>)>> {
        Ok(self
            .codewords()?
            .into_iter()
            .enumerate()
            .map(|(i, x)| (self.bits_of(i as u64), x))
            .collect())
    }

    /// Codewords indexed by bit-block value.
    pub fn codewords(&self) -> Result<Vec<SparseCodeword<T>>> {
        let bits = self.bits_per_codeword();
        if bits > MAX_ENUMERATION_BITS {
            return Err(Error::CodebookTooLarge {
                bits,
                limit: MAX_ENUMERATION_BITS,
            });
        }
        (0..self.codebook_size())
            .map(|i| self.encode_index(i).map(|(_, x)| x))
            .collect()
    }
}
