//! Max-log bit LLRs from the layered search.
//!
//! For every bit of the bottom-layer antenna, the sliced `M^2` scan of one
//! triangular model contains the best candidate of both bit classes, so one
//! scan per antenna ordering (2 * M^2 candidates in total) yields exact
//! max-log LLRs for all `2 * Mc` bits of the channel use. Differences of the
//! layered metric equal squared-distance differences, so after dividing by
//! `n0` the values agree with a brute-force max-log demapper to floating
//! point accuracy.
//!
//! LLRs follow the convention `ln P(bit = 1 | y) - ln P(bit = 0 | y)`:
//! positive favors `1`. [`bruteforce_maxlog_llr`] and [`exact_app_llr`] are
//! reference demappers for the test surface; the latter replaces the max-log
//! approximation with exact log-domain accumulation via [`jacln`].

use crate::constellation::{slice, Constellation};
use crate::lattice::RealLattice;
use crate::preprocess::{
    triangularize, AntennaOrdering, ChannelSummary, ObservationProjection, TriangularModel,
};
use crate::{cost, Error, Result};

/// Bit LLRs for one channel use: the first antenna's `Mc` bits, then the
/// second antenna's, each MSB first with in-phase bits before quadrature
/// bits.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector {
    pub values: Vec<f64>,
}

impl LlrVector {
    /// LLRs of the first antenna's bits.
    pub fn x1_bits(&self) -> &[f64] {
        &self.values[..self.values.len() / 2]
    }

    /// LLRs of the second antenna's bits.
    pub fn x2_bits(&self) -> &[f64] {
        &self.values[self.values.len() / 2..]
    }
}

/// Jacobian logarithm `ln(exp(a) + exp(b))`, safe for infinitely unlikely
/// arguments.
pub fn jacln(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

/// Per-bit minima of the noise-weighted squared residual over one ordering's
/// sliced scan, split by the bottom-layer symbol's bit values.
fn bottom_bit_minima(tm: &TriangularModel, c: &Constellation) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = c.order_per_dim();
    let mc = c.bits_per_symbol();
    let mut min0 = vec![f64::INFINITY; mc];
    let mut min1 = vec![f64::INFINITY; mc];
    let (sa, sb) = tm.cross;
    for b1_idx in 0..m {
        let b1 = c.level(b1_idx);
        for b2_idx in 0..m {
            let b2 = c.level(b2_idx);
            let c1 = sa * b1 + sb * b2;
            let c2 = -sb * b1 + sa * b2;
            let t1 = slice((tm.y_tilde[0] - c1) / tm.diag_top, c)?;
            let t2 = slice((tm.y_tilde[1] - c2) / tm.diag_top, c)?;
            let e1 = tm.y_tilde[0] - tm.diag_top * c.level(t1) - c1;
            let e2 = tm.y_tilde[1] - tm.diag_top * c.level(t2) - c2;
            let e3 = tm.y_tilde[2] - tm.diag_bottom * b1;
            let e4 = tm.y_tilde[3] - tm.diag_bottom * b2;
            let weighted = (e1 * e1 + e2 * e2) / tm.noise_scale_top
                + (e3 * e3 + e4 * e4) / tm.noise_scale_bottom;
            cost::record_candidate();
            let label = c.symbol_label(b1_idx, b2_idx);
            for (k, (slot0, slot1)) in min0.iter_mut().zip(&mut min1).enumerate() {
                let slot = if (label >> (mc - 1 - k)) & 1 == 1 {
                    slot1
                } else {
                    slot0
                };
                if weighted < *slot {
                    *slot = weighted;
                }
            }
        }
    }
    Ok((min0, min1))
}

/// Exact max-log LLRs for all `2 * Mc` bits from two sliced scans, one per
/// antenna ordering (`2 * M^2` candidates in total).
pub fn lord_llr(
    cs: &ChannelSummary,
    op: &ObservationProjection,
    c: &Constellation,
    n0: f64,
) -> Result<LlrVector> {
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::NonPositiveNoise(n0));
    }
    let antenna1_scan = triangularize(cs, op, AntennaOrdering::Antenna2First)?;
    let (a1_min0, a1_min1) = bottom_bit_minima(&antenna1_scan, c)?;
    let antenna2_scan = triangularize(cs, op, AntennaOrdering::Antenna1First)?;
    let (a2_min0, a2_min1) = bottom_bit_minima(&antenna2_scan, c)?;

    let mut values = Vec::with_capacity(2 * c.bits_per_symbol());
    values.extend(
        a1_min0
            .iter()
            .zip(&a1_min1)
            .map(|(m0, m1)| (m0 - m1) / n0),
    );
    values.extend(
        a2_min0
            .iter()
            .zip(&a2_min1)
            .map(|(m0, m1)| (m0 - m1) / n0),
    );
    Ok(LlrVector { values })
}

/// Brute-force max-log LLRs over all `M^4` level vectors.
pub fn bruteforce_maxlog_llr(
    lat: &RealLattice,
    y_r: &[f64],
    c: &Constellation,
    n0: f64,
) -> Result<LlrVector> {
    let (min0, min1) = class_minima(lat, y_r, c, n0)?;
    Ok(LlrVector {
        values: min0
            .iter()
            .zip(&min1)
            .map(|(m0, m1)| (m0 - m1) / n0)
            .collect(),
    })
}

/// Exact a-posteriori LLRs over all `M^4` level vectors, accumulated in the
/// log domain with [`jacln`].
pub fn exact_app_llr(
    lat: &RealLattice,
    y_r: &[f64],
    c: &Constellation,
    n0: f64,
) -> Result<LlrVector> {
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::NonPositiveNoise(n0));
    }
    if y_r.len() != lat.dim() {
        return Err(Error::DimensionMismatch {
            expected: lat.dim(),
            got: y_r.len(),
        });
    }
    let m = c.order_per_dim();
    let mc = c.bits_per_symbol();
    let nbits = 2 * mc;
    let mut acc0 = vec![f64::NEG_INFINITY; nbits];
    let mut acc1 = vec![f64::NEG_INFINITY; nbits];
    for i1 in 0..m {
        for i2 in 0..m {
            for i3 in 0..m {
                for i4 in 0..m {
                    let x = [c.level(i1), c.level(i2), c.level(i3), c.level(i4)];
                    let log_like = -lat.residual_norm_sqr(y_r, &x) / n0;
                    let label = ((c.symbol_label(i1, i2) as u16) << mc)
                        | c.symbol_label(i3, i4) as u16;
                    for k in 0..nbits {
                        if (label >> (nbits - 1 - k)) & 1 == 1 {
                            acc1[k] = jacln(acc1[k], log_like);
                        } else {
                            acc0[k] = jacln(acc0[k], log_like);
                        }
                    }
                }
            }
        }
    }
    Ok(LlrVector {
        values: acc1.iter().zip(&acc0).map(|(a1, a0)| a1 - a0).collect(),
    })
}

/// Unweighted per-class residual minima over the full candidate set.
fn class_minima(
    lat: &RealLattice,
    y_r: &[f64],
    c: &Constellation,
    n0: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::NonPositiveNoise(n0));
    }
    if y_r.len() != lat.dim() {
        return Err(Error::DimensionMismatch {
            expected: lat.dim(),
            got: y_r.len(),
        });
    }
    let m = c.order_per_dim();
    let mc = c.bits_per_symbol();
    let nbits = 2 * mc;
    let mut min0 = vec![f64::INFINITY; nbits];
    let mut min1 = vec![f64::INFINITY; nbits];
    for i1 in 0..m {
        for i2 in 0..m {
            for i3 in 0..m {
                for i4 in 0..m {
                    let x = [c.level(i1), c.level(i2), c.level(i3), c.level(i4)];
                    let dist = lat.residual_norm_sqr(y_r, &x);
                    let label = ((c.symbol_label(i1, i2) as u16) << mc)
                        | c.symbol_label(i3, i4) as u16;
                    for k in 0..nbits {
                        let slot = if (label >> (nbits - 1 - k)) & 1 == 1 {
                            &mut min1[k]
                        } else {
                            &mut min0[k]
                        };
                        if dist < *slot {
                            *slot = dist;
                        }
                    }
                }
            }
        }
    }
    Ok((min0, min1))
}
