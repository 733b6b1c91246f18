//! Gray-labelled square QAM alphabets with unit average energy.
//!
//! 4-QAM labels (first bit selects the quadrature sign, second the in-phase sign):
//!
//! | bits | point          |
//! |------|----------------|
//! | 00   | (+1 + j) / √2  |
//! | 01   | (-1 + j) / √2  |
//! | 11   | (-1 - j) / √2  |
//! | 10   | (+1 - j) / √2  |
//!
//! 16-QAM applies the same rule per axis with the 2-bit Gray PAM
//! `00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3`, quadrature bits first.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationKind {
    Qam4,
    Qam16,
}

impl ConstellationKind {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            ConstellationKind::Qam4 => 2,
            ConstellationKind::Qam16 => 4,
        }
    }
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "4qam" | "qam4" | "4-qam" | "qpsk" => Ok(ConstellationKind::Qam4),
            "16qam" | "qam16" | "16-qam" => Ok(ConstellationKind::Qam16),
            other => Err(Error::Config(format!("unknown constellation '{other}'"))),
        }
    }
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstellationKind::Qam4 => write!(f, "4qam"),
            ConstellationKind::Qam16 => write!(f, "16qam"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<Complex64>,
    labels: Vec<u8>,
}

/// Gray PAM level for a bit group, most significant bit first.
fn gray_pam(bits: u8, width: usize) -> f64 {
    // Gray decode, then map index 0 to the most positive level.
    let mut idx = bits;
    let mut shift = 1;
    while shift < width {
        idx ^= idx >> shift;
        shift <<= 1;
    }
    let levels = 1usize << width;
    (levels as f64 - 1.0) - 2.0 * idx as f64
}

impl Constellation {
    pub fn new(kind: ConstellationKind) -> Self {
        let bps = kind.bits_per_symbol();
        let half = bps / 2;
        let levels = 1usize << half;
        // Average energy of a square QAM with odd-integer levels is 2 (L^2 - 1) / 3.
        let scale = (2.0 * ((levels * levels) as f64 - 1.0) / 3.0).sqrt();
        let mut points = Vec::with_capacity(1 << bps);
        let mut labels = Vec::with_capacity(1 << bps);
        for label in 0..(1u8 << bps) {
            let quad = label >> half;
            let inph = label & ((1 << half) - 1);
            let p = Complex64::new(gray_pam(inph, half), gray_pam(quad, half)) / scale;
            points.push(p);
            labels.push(label);
        }
        Constellation {
            kind,
            points,
            labels,
        }
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bit label of point `i`, most significant bit first within `bits_per_symbol`.
    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.kind.bits_per_symbol()
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Maps bits (one `u8` per bit, 0 or 1) to symbols.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let bps = self.bits_per_symbol();
        if bits.len() % bps != 0 {
            return Err(Error::BitLength {
                bits: bits.len(),
                per_symbol: bps,
            });
        }
        Ok(bits
            .chunks(bps)
            .map(|chunk| {
                let label = chunk.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1));
                self.points[label as usize]
            })
            .collect())
    }

    /// Index of the nearest constellation point.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn hard_decision(&self, z: Complex64) -> Complex64 {
        self.points[self.nearest(z)]
    }

    /// Hard nearest-point demapping.
    pub fn demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let bps = self.bits_per_symbol();
        let mut out = Vec::with_capacity(symbols.len() * bps);
        for &z in symbols {
            let label = self.labels[self.nearest(z)];
            for b in (0..bps).rev() {
                out.push((label >> b) & 1);
            }
        }
        out
    }
}

pub fn qam_map(bits: &[u8], kind: ConstellationKind) -> Result<Vec<Complex64>> {
    Constellation::new(kind).map(bits)
}

pub fn qam_demap(symbols: &[Complex64], kind: ConstellationKind) -> Vec<u8> {
    Constellation::new(kind).demap(symbols)
}
