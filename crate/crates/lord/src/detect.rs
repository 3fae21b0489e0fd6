//! Hard detection over the triangular model.
//!
//! [`lord_hard`] slices the top layer conditioned on each bottom-layer
//! candidate pair, so an exhaustive `M^4` search collapses to `M^2`
//! candidates with two slicing calls each while staying exactly
//! maximum-likelihood: differences of the search metric [`metric_t`] equal
//! differences of squared Euclidean distance in the real lattice.
//! [`ml_exhaustive`] is the brute-force reference and [`zf_detect`] the
//! linear baseline.

use num_complex::Complex64;

use crate::constellation::{slice, Constellation};
use crate::lattice::{ComplexChannel, RealLattice};
use crate::preprocess::{AntennaOrdering, TriangularModel};
use crate::{cost, Error, Result};

/// Relative floor for the normal-equation determinant in [`zf_detect`].
const RANK_THRESHOLD: f64 = 1e-12;

/// A hard symbol decision on the four real lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardDecision {
    /// Level indices in natural order `(x1_i, x1_q, x2_i, x2_q)`.
    pub x_r_hat: [usize; 4],
    /// Search metric at the decision: the layered metric for [`lord_hard`],
    /// the negative squared residual for [`ml_exhaustive`] and
    /// [`zf_detect`]. The two coincide for two receive rows.
    pub metric: f64,
    /// Number of candidate vectors the search scored (zero for the linear
    /// detector).
    pub candidates_evaluated: usize,
}

impl HardDecision {
    /// Demaps the decision to its bit pattern: first antenna's label bits,
    /// then the second antenna's.
    pub fn bits(&self, c: &Constellation) -> Vec<bool> {
        let mut out = c.index_bits(self.x_r_hat[0]);
        out.extend(c.index_bits(self.x_r_hat[1]));
        out.extend(c.index_bits(self.x_r_hat[2]));
        out.extend(c.index_bits(self.x_r_hat[3]));
        out
    }
}

/// Splits a natural-order coordinate vector into (top pair, bottom pair) for
/// the model's ordering.
fn layer_split<T: Copy>(ordering: AntennaOrdering, x: &[T; 4]) -> ([T; 2], [T; 2]) {
    match ordering {
        AntennaOrdering::Antenna1First => ([x[0], x[1]], [x[2], x[3]]),
        AntennaOrdering::Antenna2First => ([x[2], x[3]], [x[0], x[1]]),
    }
}

/// Joins (top pair, bottom pair) back into natural order.
fn layer_join<T: Copy>(ordering: AntennaOrdering, top: [T; 2], bottom: [T; 2]) -> [T; 4] {
    match ordering {
        AntennaOrdering::Antenna1First => [top[0], top[1], bottom[0], bottom[1]],
        AntennaOrdering::Antenna2First => [bottom[0], bottom[1], top[0], top[1]],
    }
}

/// Evaluates the layered search metric at a natural-order level vector.
///
/// The metric is the negative noise-weighted squared residual of the
/// triangular model, so it is never positive, and metric differences equal
/// plain squared-distance differences in the real lattice.
pub fn metric_t(tm: &TriangularModel, x_r: &[f64; 4]) -> f64 {
    let (top, bottom) = layer_split(tm.ordering, x_r);
    let (sa, sb) = tm.cross;
    let e1 = tm.y_tilde[0] - tm.diag_top * top[0] - sa * bottom[0] - sb * bottom[1];
    let e2 = tm.y_tilde[1] - tm.diag_top * top[1] + sb * bottom[0] - sa * bottom[1];
    let e3 = tm.y_tilde[2] - tm.diag_bottom * bottom[0];
    let e4 = tm.y_tilde[3] - tm.diag_bottom * bottom[1];
    -(e1 * e1 + e2 * e2) / tm.noise_scale_top - (e3 * e3 + e4 * e4) / tm.noise_scale_bottom
}

/// Exact maximum-likelihood hard detection with an `M^2` candidate scan.
///
/// Every bottom-layer pair is enumerated in lexicographic order; the top
/// layer is sliced conditionally (two slicing calls per pair), which is
/// optimal because the top rows are interference-free once the bottom pair
/// is fixed. Ties keep the first maximizer in scan order.
pub fn lord_hard(tm: &TriangularModel, c: &Constellation) -> Result<HardDecision> {
    if !(tm.diag_top > 0.0) || !(tm.diag_bottom > 0.0) {
        return Err(Error::DegenerateChannel {
            r3: tm.diag_bottom,
            scale: tm.diag_top,
        });
    }
    let m = c.order_per_dim();
    let (sa, sb) = tm.cross;
    let mut best_metric = f64::NEG_INFINITY;
    let mut best: [usize; 4] = [0; 4];
    let mut candidates = 0usize;

    for b1_idx in 0..m {
        let b1 = c.level(b1_idx);
        for b2_idx in 0..m {
            let b2 = c.level(b2_idx);
            let c1 = sa * b1 + sb * b2;
            let c2 = -sb * b1 + sa * b2;
            let t1_idx = slice((tm.y_tilde[0] - c1) / tm.diag_top, c)?;
            let t2_idx = slice((tm.y_tilde[1] - c2) / tm.diag_top, c)?;
            let e1 = tm.y_tilde[0] - tm.diag_top * c.level(t1_idx) - c1;
            let e2 = tm.y_tilde[1] - tm.diag_top * c.level(t2_idx) - c2;
            let e3 = tm.y_tilde[2] - tm.diag_bottom * b1;
            let e4 = tm.y_tilde[3] - tm.diag_bottom * b2;
            let t = -(e1 * e1 + e2 * e2) / tm.noise_scale_top
                - (e3 * e3 + e4 * e4) / tm.noise_scale_bottom;
            cost::record_candidate();
            candidates += 1;
            if t > best_metric {
                best_metric = t;
                best = layer_join(tm.ordering, [t1_idx, t2_idx], [b1_idx, b2_idx]);
            }
        }
    }

    Ok(HardDecision {
        x_r_hat: best,
        metric: best_metric,
        candidates_evaluated: candidates,
    })
}

/// Brute-force maximum-likelihood detection over all `M^4` level vectors.
///
/// Scans candidates in lexicographic index order and keeps the first
/// minimizer of the squared residual.
pub fn ml_exhaustive(lat: &RealLattice, y_r: &[f64], c: &Constellation) -> HardDecision {
    assert_eq!(y_r.len(), lat.dim(), "observation dimension mismatch");
    let m = c.order_per_dim();
    let mut best_dist = f64::INFINITY;
    let mut best = [0usize; 4];
    let mut candidates = 0usize;
    for i1 in 0..m {
        for i2 in 0..m {
            for i3 in 0..m {
                for i4 in 0..m {
                    let x = [c.level(i1), c.level(i2), c.level(i3), c.level(i4)];
                    let dist = lat.residual_norm_sqr(y_r, &x);
                    cost::record_candidate();
                    candidates += 1;
                    if dist < best_dist {
                        best_dist = dist;
                        best = [i1, i2, i3, i4];
                    }
                }
            }
        }
    }
    HardDecision {
        x_r_hat: best,
        metric: -best_dist,
        candidates_evaluated: candidates,
    }
}

/// Zero-forcing baseline: unconstrained least squares on the complex
/// channel, then per-coordinate slicing.
pub fn zf_detect(
    h: &ComplexChannel,
    y: &[Complex64],
    c: &Constellation,
    es: f64,
) -> Result<HardDecision> {
    if !(es > 0.0) || !es.is_finite() {
        return Err(Error::NonPositiveEnergy(es));
    }
    if y.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            got: y.len(),
        });
    }
    let mut g11 = 0.0f64;
    let mut g22 = 0.0f64;
    let mut g12 = Complex64::new(0.0, 0.0);
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for row in 0..h.rows() {
        let a = h.entry(row, 0);
        let b = h.entry(row, 1);
        g11 += a.norm_sqr();
        g22 += b.norm_sqr();
        g12 += a.conj() * b;
        b1 += a.conj() * y[row];
        b2 += b.conj() * y[row];
    }
    let det = g11 * g22 - g12.norm_sqr();
    if det <= RANK_THRESHOLD * g11 * g22 || det <= 0.0 {
        return Err(Error::RankDeficient(det));
    }
    let scale = (es / 2.0).sqrt();
    let x1 = (g22 * b1 - g12 * b2) / (det * scale);
    let x2 = (g11 * b2 - g12.conj() * b1) / (det * scale);

    let x_r_hat = [
        slice(x1.re, c)?,
        slice(x1.im, c)?,
        slice(x2.re, c)?,
        slice(x2.im, c)?,
    ];
    let decided = [
        Complex64::new(c.level(x_r_hat[0]), c.level(x_r_hat[1])),
        Complex64::new(c.level(x_r_hat[2]), c.level(x_r_hat[3])),
    ];
    let residual: f64 = h
        .apply(decided)
        .iter()
        .zip(y)
        .map(|(s, v)| (v - scale * s).norm_sqr())
        .sum();
    Ok(HardDecision {
        x_r_hat,
        metric: -residual,
        candidates_evaluated: 0,
    })
}
