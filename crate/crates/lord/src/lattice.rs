//! Real lattice form of the two-antenna complex channel.
//!
//! A complex observation `y = sqrt(es / 2) * H * x + n` with `lr` receive
//! rows becomes a real system of dimension `2 * lr` by interleaving real and
//! imaginary parts receive row by receive row. Each transmit antenna `k`
//! contributes two adjacent real columns built from complex column `k`:
//!
//! * column `2k`:     `(Re H[0][k], Im H[0][k], Re H[1][k], Im H[1][k], ...)`
//! * column `2k + 1`: `(-Im H[0][k], Re H[0][k], -Im H[1][k], Re H[1][k], ...)`
//!
//! Stacking them this way makes the two columns of the same antenna exactly
//! orthogonal with equal norms, which is what the closed-form
//! triangularization in [`crate::preprocess`] exploits. The transmit scale
//! `sqrt(es / 2)` is folded into the columns, so the real model is simply
//! `y_r = H_r * x_r + n_r` with `x_r = (x1_i, x1_q, x2_i, x2_q)` holding raw
//! PAM levels.

use num_complex::Complex64;

use crate::{Error, Result};

/// A complex channel matrix with `rows` receive rows and two transmit
/// columns, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexChannel {
    rows: usize,
    entries: Vec<Complex64>,
}

impl ComplexChannel {
    /// Validates dimensions and finiteness of a row-major entry list.
    pub fn new(rows: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows < 2 {
            return Err(Error::TooFewRows(rows));
        }
        if entries.len() != 2 * rows {
            return Err(Error::DimensionMismatch {
                expected: 2 * rows,
                got: entries.len(),
            });
        }
        if entries.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::NonFinite {
                context: "channel entry",
            });
        }
        Ok(Self { rows, entries })
    }

    /// Number of receive rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Entry at a receive row and transmit column.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[2 * row + col]
    }

    /// The unscaled product `H * x`.
    pub fn apply(&self, x: [Complex64; 2]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|r| self.entry(r, 0) * x[0] + self.entry(r, 1) * x[1])
            .collect()
    }
}

/// The four real columns of the lattice, transmit scale included.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLattice {
    cols: [Vec<f64>; 4],
    energy_scale: f64,
}

impl RealLattice {
    /// Real dimension `2 * lr`.
    pub fn dim(&self) -> usize {
        self.cols[0].len()
    }

    /// One of the four lattice columns.
    pub fn column(&self, k: usize) -> &[f64] {
        &self.cols[k]
    }

    /// The factor `sqrt(es / 2)` folded into the columns.
    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    /// The noiseless real observation `H_r * x_r`.
    pub fn synthesize(&self, x_r: &[f64; 4]) -> Vec<f64> {
        (0..self.dim())
            .map(|row| (0..4).map(|k| self.cols[k][row] * x_r[k]).sum())
            .collect()
    }

    /// Squared Euclidean distance between `y_r` and `H_r * x_r`.
    pub fn residual_norm_sqr(&self, y_r: &[f64], x_r: &[f64; 4]) -> f64 {
        debug_assert_eq!(y_r.len(), self.dim());
        (0..self.dim())
            .map(|row| {
                let model: f64 = (0..4).map(|k| self.cols[k][row] * x_r[k]).sum();
                let e = y_r[row] - model;
                e * e
            })
            .sum()
    }
}

/// Expands a complex channel into its four real lattice columns, folding in
/// the transmit scale `sqrt(es / 2)`.
pub fn realize_channel(h: &ComplexChannel, es: f64) -> Result<RealLattice> {
    if !(es > 0.0) || !es.is_finite() {
        return Err(Error::NonPositiveEnergy(es));
    }
    let g = (es / 2.0).sqrt();
    let dim = 2 * h.rows();
    let mut cols = [
        Vec::with_capacity(dim),
        Vec::with_capacity(dim),
        Vec::with_capacity(dim),
        Vec::with_capacity(dim),
    ];
    for antenna in 0..2 {
        for row in 0..h.rows() {
            let e = h.entry(row, antenna);
            cols[2 * antenna].push(g * e.re);
            cols[2 * antenna].push(g * e.im);
            cols[2 * antenna + 1].push(-g * e.im);
            cols[2 * antenna + 1].push(g * e.re);
        }
    }
    Ok(RealLattice {
        cols,
        energy_scale: g,
    })
}

/// Interleaves a complex observation into its real form
/// `(Re y_1, Im y_1, Re y_2, Im y_2, ...)`.
pub fn realize_observation(y: &[Complex64]) -> Result<Vec<f64>> {
    if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite {
            context: "observation entry",
        });
    }
    Ok(y.iter().flat_map(|v| [v.re, v.im]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_channel(rows: usize, rng: &mut ChaCha8Rng) -> ComplexChannel {
        let entries = (0..2 * rows)
            .map(|_| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
            .collect();
        ComplexChannel::new(rows, entries).unwrap()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn identity_channel_yields_scaled_identity_columns() {
        let h = ComplexChannel::new(
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        )
        .unwrap();
        let lat = realize_channel(&h, 2.0).unwrap();
        assert_eq!(lat.dim(), 4);
        for k in 0..4 {
            for row in 0..4 {
                let expected = if row == k { 1.0 } else { 0.0 };
                assert!((lat.column(k)[row] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_complex_entry_spreads_into_rotation_pair() {
        let h = ComplexChannel::new(
            2,
            vec![
                Complex64::new(1.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let es = 3.0f64;
        let g = (es / 2.0).sqrt();
        let lat = realize_channel(&h, es).unwrap();
        assert_eq!(lat.column(0), &[g, g, 0.0, 0.0]);
        assert_eq!(lat.column(1), &[-g, g, 0.0, 0.0]);
        assert!((lat.energy_scale() - g).abs() < 1e-15);
    }

    #[test]
    fn observation_interleaves_re_im_per_row() {
        let y = vec![Complex64::new(1.0, 2.0), Complex64::new(3.0, -4.0)];
        assert_eq!(realize_observation(&y).unwrap(), vec![1.0, 2.0, 3.0, -4.0]);
        let zeros = vec![Complex64::new(0.0, 0.0); 3];
        assert_eq!(realize_observation(&zeros).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn same_antenna_columns_are_orthogonal_with_equal_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1A77);
        for trial in 0..10_000 {
            let rows = 2 + trial % 3;
            let lat = realize_channel(&random_channel(rows, &mut rng), 1.0).unwrap();
            let (h1, h2, h3, h4) = (
                lat.column(0),
                lat.column(1),
                lat.column(2),
                lat.column(3),
            );
            assert!(dot(h1, h2).abs() < 1e-12);
            assert!(dot(h3, h4).abs() < 1e-12);
            assert!((dot(h1, h1) - dot(h2, h2)).abs() < 1e-12);
            assert!((dot(h3, h3) - dot(h4, h4)).abs() < 1e-12);
            assert!((dot(h1, h3) - dot(h2, h4)).abs() < 1e-12);
            assert!((dot(h1, h4) + dot(h2, h3)).abs() < 1e-12);
        }
    }

    #[test]
    fn real_synthesis_matches_complex_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
        for trial in 0..100 {
            let rows = 2 + trial % 2;
            let h = random_channel(rows, &mut rng);
            let es = rng.gen_range(0.5..4.0);
            let lat = realize_channel(&h, es).unwrap();
            let x = [
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            let n: Vec<Complex64> = (0..rows)
                .map(|_| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })
                .collect();
            let g = (es / 2.0).sqrt();
            let y: Vec<Complex64> = h
                .apply(x)
                .iter()
                .zip(&n)
                .map(|(s, w)| g * s + w)
                .collect();
            let y_r = realize_observation(&y).unwrap();

            let x_r = [x[0].re, x[0].im, x[1].re, x[1].im];
            let n_r = realize_observation(&n).unwrap();
            let rebuilt: Vec<f64> = lat
                .synthesize(&x_r)
                .iter()
                .zip(&n_r)
                .map(|(s, w)| s + w)
                .collect();
            for (a, b) in y_r.iter().zip(&rebuilt) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residual_matches_complex_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xD157);
        for trial in 0..200 {
            let rows = 2 + trial % 3;
            let h = random_channel(rows, &mut rng);
            let es = 1.7;
            let lat = realize_channel(&h, es).unwrap();
            let x = [
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            let y: Vec<Complex64> = (0..rows)
                .map(|_| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })
                .collect();
            let g = (es / 2.0).sqrt();
            let complex_dist: f64 = h
                .apply(x)
                .iter()
                .zip(&y)
                .map(|(s, v)| (v - g * s).norm_sqr())
                .sum();
            let y_r = realize_observation(&y).unwrap();
            let x_r = [x[0].re, x[0].im, x[1].re, x[1].im];
            let real_dist = lat.residual_norm_sqr(&y_r, &x_r);
            assert!(
                (complex_dist - real_dist).abs() <= 1e-10 * complex_dist.max(1.0),
                "complex {complex_dist} vs real {real_dist}"
            );
        }
    }

    #[test]
    fn channel_validation_rejects_bad_input() {
        assert_eq!(
            ComplexChannel::new(1, vec![Complex64::new(1.0, 0.0); 2]),
            Err(Error::TooFewRows(1))
        );
        assert_eq!(
            ComplexChannel::new(2, vec![Complex64::new(1.0, 0.0); 3]),
            Err(Error::DimensionMismatch {
                expected: 4,
                got: 3
            })
        );
        assert!(matches!(
            ComplexChannel::new(2, vec![Complex64::new(f64::NAN, 0.0); 4]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn energy_must_be_positive_and_finite() {
        let h = ComplexChannel::new(2, vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        for es in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                realize_channel(&h, es),
                Err(Error::NonPositiveEnergy(_))
            ));
        }
    }

    #[test]
    fn observation_rejects_non_finite_entries() {
        let y = vec![Complex64::new(0.0, f64::INFINITY)];
        assert!(matches!(
            realize_observation(&y),
            Err(Error::NonFinite { .. })
        ));
    }
}
