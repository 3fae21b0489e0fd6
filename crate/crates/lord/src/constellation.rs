//! Gray-labeled square QAM alphabets built as two independent PAM axes.
//!
//! A square constellation of `order` points (4, 16, or 64) is the product of
//! two identical `m`-level PAM alphabets, one on the in-phase axis and one on
//! the quadrature axis. Levels are `(2 * i - (m - 1)) * scale` for
//! `i = 0 .. m`, with `scale` chosen so the average symbol energy is exactly
//! one. Each axis carries a binary-reflected Gray label, written MSB first;
//! a symbol's bit pattern is the in-phase label followed by the quadrature
//! label.

use num_complex::Complex64;

use crate::{cost, Error, Result};

/// A unit-energy square QAM alphabet with per-axis Gray labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    levels: Vec<f64>,
    scale: f64,
    bits_per_dim: usize,
    gray_of_index: Vec<u8>,
    index_of_gray: Vec<usize>,
}

impl Constellation {
    /// Total number of complex points (4, 16, or 64).
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of PAM levels per axis.
    pub fn order_per_dim(&self) -> usize {
        self.levels.len()
    }

    /// Bits carried by one axis.
    pub fn bits_per_dim(&self) -> usize {
        self.bits_per_dim
    }

    /// Bits carried by one complex symbol.
    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_dim
    }

    /// PAM levels in strictly increasing order.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// The level at a given index.
    pub fn level(&self, index: usize) -> f64 {
        self.levels[index]
    }

    /// Spacing parameter: half the distance between adjacent levels.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Gray label of a level index.
    pub fn gray_label(&self, index: usize) -> u8 {
        self.gray_of_index[index]
    }

    /// Level index carrying a Gray label.
    pub fn index_of_label(&self, label: u8) -> usize {
        self.index_of_gray[label as usize]
    }

    /// Gray label of a level index, spelled out MSB first.
    pub fn index_bits(&self, index: usize) -> Vec<bool> {
        let label = self.gray_of_index[index];
        (0..self.bits_per_dim)
            .map(|k| (label >> (self.bits_per_dim - 1 - k)) & 1 == 1)
            .collect()
    }

    /// Bit pattern of a full symbol given its two level indices: in-phase
    /// label in the high bits, quadrature label in the low bits.
    pub fn symbol_label(&self, i_index: usize, q_index: usize) -> u8 {
        (self.gray_of_index[i_index] << self.bits_per_dim) | self.gray_of_index[q_index]
    }
}

/// Builds the unit-energy Gray-labeled alphabet for a supported QAM order.
pub fn build_qam(order: usize) -> Result<Constellation> {
    let (m, bits_per_dim) = match order {
        4 => (2usize, 1usize),
        16 => (4, 2),
        64 => (8, 3),
        other => return Err(Error::UnsupportedOrder(other)),
    };
    let scale = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
    let levels = (0..m)
        .map(|i| (2.0 * i as f64 - (m as f64 - 1.0)) * scale)
        .collect();
    let gray_of_index: Vec<u8> = (0..m).map(|i| (i ^ (i >> 1)) as u8).collect();
    let mut index_of_gray = vec![0usize; m];
    for (i, &g) in gray_of_index.iter().enumerate() {
        index_of_gray[g as usize] = i;
    }
    Ok(Constellation {
        order,
        levels,
        scale,
        bits_per_dim,
        gray_of_index,
        index_of_gray,
    })
}

/// Rounds one real coordinate to the index of the nearest PAM level.
///
/// Ties round toward the lower index and out-of-range values clip to the
/// edge levels, so the result is always a valid index. This is the only
/// per-candidate arithmetic the layered search needs on the top layer.
pub fn slice(v: f64, c: &Constellation) -> Result<usize> {
    if !v.is_finite() {
        return Err(Error::NonFinite {
            context: "slice input",
        });
    }
    cost::record_slice();
    let m = c.order_per_dim();
    let u = (v / c.scale + (m as f64 - 1.0)) / 2.0;
    let index = (u - 0.5).ceil().clamp(0.0, m as f64 - 1.0);
    Ok(index as usize)
}

/// Maps a symbol's bit pattern (in-phase label then quadrature label, MSB
/// first) to its complex constellation point.
pub fn map_bits(bits: &[bool], c: &Constellation) -> Result<Complex64> {
    if bits.len() != c.bits_per_symbol() {
        return Err(Error::BitLength {
            expected: c.bits_per_symbol(),
            got: bits.len(),
        });
    }
    let i_index = c.index_of_label(pack_label(&bits[..c.bits_per_dim]));
    let q_index = c.index_of_label(pack_label(&bits[c.bits_per_dim..]));
    Ok(Complex64::new(c.level(i_index), c.level(q_index)))
}

/// Recovers the bit pattern of an exact constellation point.
pub fn demap_symbol(s: Complex64, c: &Constellation) -> Result<Vec<bool>> {
    let i_index = exact_level_index(s.re, c)?;
    let q_index = exact_level_index(s.im, c)?;
    let mut bits = c.index_bits(i_index);
    bits.extend(c.index_bits(q_index));
    Ok(bits)
}

fn pack_label(bits: &[bool]) -> u8 {
    bits.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8)
}

fn exact_level_index(v: f64, c: &Constellation) -> Result<usize> {
    if !v.is_finite() {
        return Err(Error::NonFinite {
            context: "symbol component",
        });
    }
    let tol = 1e-9 * c.scale();
    c.levels()
        .iter()
        .position(|&l| (v - l).abs() <= tol)
        .ok_or(Error::OffGrid { value: v })
}
