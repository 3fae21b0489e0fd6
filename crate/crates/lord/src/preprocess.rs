//! Closed-form orthogonal triangularization of the two-antenna real lattice.
//!
//! Because each antenna's column pair is already orthogonal with equal
//! norms, a full QR factorization collapses to eight inner products: four
//! channel scalars and four observation projections. The factorization
//! `H_r = Q * R * lambda_q` has `Q' * Q` exactly diagonal, so correlating
//! the observation against `Q` yields a triangular system
//!
//! ```text
//! y_tilde = R_tilde * x + noise,
//! R_tilde = | d  0   sa   sb |        cov(noise) = (n0 / 2) *
//!           | 0  d  -sb   sa |            diag(d, d, d * r3, d * r3)
//!           | 0  0   r3    0 |
//!           | 0  0    0   r3 |
//! ```
//!
//! in which the bottom two rows depend on one antenna alone. Building the
//! model with either antenna on the bottom layer is the same arithmetic on a
//! permuted summary, which is what [`triangularize`] does for
//! [`AntennaOrdering::Antenna2First`].

use crate::lattice::RealLattice;
use crate::{cost, Error, Result};

/// Relative floor for the cross-term determinant `r3`: channels with
/// `r3 <= DEGENERACY_THRESHOLD * sigma1_sq * sigma2_sq` are rejected.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Which antenna occupies the bottom (unconditioned) layer of the model.
///
/// [`AntennaOrdering::Antenna1First`] puts antenna 1 on top, so the bottom
/// layer carries antenna 2, and vice versa.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntennaOrdering {
    Antenna1First,
    Antenna2First,
}

/// The four channel scalars that fully describe the lattice geometry, plus
/// the derived determinant `r3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSummary {
    /// Squared norm shared by the first antenna's column pair.
    pub sigma1_sq: f64,
    /// Squared norm shared by the second antenna's column pair.
    pub sigma2_sq: f64,
    /// Cross inner product `h1 . h3` (equals `h2 . h4`).
    pub s1: f64,
    /// Cross inner product `h1 . h4` (equals `-(h2 . h3)`).
    pub s2: f64,
    /// `sigma1_sq * sigma2_sq - s1^2 - s2^2`, the Gram determinant of either
    /// antenna's columns projected off the other's.
    pub r3: f64,
}

impl ChannelSummary {
    /// True when `r3` sits at or below the relative degeneracy floor.
    pub fn is_degenerate(&self) -> bool {
        self.r3 <= DEGENERACY_THRESHOLD * self.sigma1_sq * self.sigma2_sq
    }
}

/// The observation correlated against the four lattice columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationProjection {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
}

/// A triangular observation model for one antenna ordering.
///
/// The effective noise on `y_tilde - R_tilde * x` has covariance
/// `(n0 / 2) * diag(noise_scale_top, noise_scale_top, noise_scale_bottom,
/// noise_scale_bottom)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularModel {
    pub ordering: AntennaOrdering,
    pub y_tilde: [f64; 4],
    /// Top-layer diagonal of `R_tilde`: the bottom antenna's column energy
    /// never divides the top rows.
    pub diag_top: f64,
    /// Off-diagonal pair `(sa, sb)` coupling the bottom layer into the top.
    pub cross: (f64, f64),
    /// Bottom-layer diagonal of `R_tilde`, equal to `r3`.
    pub diag_bottom: f64,
    pub noise_scale_top: f64,
    pub noise_scale_bottom: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    cost::record_inner_product();
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Computes the four channel scalars and `r3` with exactly four inner
/// products, rejecting degenerate channels.
pub fn summarize_channel(lat: &RealLattice) -> Result<ChannelSummary> {
    let sigma1_sq = dot(lat.column(0), lat.column(0));
    let sigma2_sq = dot(lat.column(2), lat.column(2));
    let s1 = dot(lat.column(0), lat.column(2));
    let s2 = dot(lat.column(0), lat.column(3));
    let r3 = sigma1_sq * sigma2_sq - s1 * s1 - s2 * s2;
    let summary = ChannelSummary {
        sigma1_sq,
        sigma2_sq,
        s1,
        s2,
        r3,
    };
    if summary.is_degenerate() {
        return Err(Error::DegenerateChannel {
            r3,
            scale: sigma1_sq * sigma2_sq,
        });
    }
    Ok(summary)
}

/// Correlates the real observation against the four lattice columns with
/// exactly four inner products.
pub fn project_observation(lat: &RealLattice, y_r: &[f64]) -> Result<ObservationProjection> {
    if y_r.len() != lat.dim() {
        return Err(Error::DimensionMismatch {
            expected: lat.dim(),
            got: y_r.len(),
        });
    }
    Ok(ObservationProjection {
        v1: dot(lat.column(0), y_r),
        v2: dot(lat.column(1), y_r),
        v3: dot(lat.column(2), y_r),
        v4: dot(lat.column(3), y_r),
    })
}

/// Assembles the triangular model for one antenna ordering from the channel
/// summary and observation projections alone. No further inner products are
/// required.
pub fn triangularize(
    cs: &ChannelSummary,
    op: &ObservationProjection,
    ordering: AntennaOrdering,
) -> Result<TriangularModel> {
    if cs.is_degenerate() {
        return Err(Error::DegenerateChannel {
            r3: cs.r3,
            scale: cs.sigma1_sq * cs.sigma2_sq,
        });
    }
    let (d, sa, sb, vt1, vt2, vb1, vb2) = match ordering {
        AntennaOrdering::Antenna1First => (cs.sigma1_sq, cs.s1, cs.s2, op.v1, op.v2, op.v3, op.v4),
        AntennaOrdering::Antenna2First => (cs.sigma2_sq, cs.s1, -cs.s2, op.v3, op.v4, op.v1, op.v2),
    };
    let y_tilde = [
        vt1,
        vt2,
        d * vb1 - sa * vt1 + sb * vt2,
        d * vb2 - sb * vt1 - sa * vt2,
    ];
    Ok(TriangularModel {
        ordering,
        y_tilde,
        diag_top: d,
        cross: (sa, sb),
        diag_bottom: cs.r3,
        noise_scale_top: d,
        noise_scale_bottom: d * cs.r3,
    })
}
