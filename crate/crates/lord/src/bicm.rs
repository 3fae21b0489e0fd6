//! Bit-interleaved coded modulation chain: convolutional code, block
//! interleaver, symbol framing, and soft-input Viterbi decoding.
//!
//! The transmit direction is `conv_encode -> interleave -> frame_to_symbols`;
//! the receive direction feeds deinterleaved bit LLRs to [`viterbi_decode`].
//! A hard-decision receiver uses the same decoder with `+/-1` pseudo-LLRs,
//! so soft and hard demapping differ only in the values on the wire.

use num_complex::Complex64;

use crate::constellation::{map_bits, Constellation};
use crate::{Error, Result};

/// A rate-1/2 feedforward convolutional code. Generator masks are given
/// with the most significant bit tapping the current input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeConfig {
    pub constraint_length: usize,
    pub generators: [u32; 2],
}

impl CodeConfig {
    /// The standard constraint-length-7 code with octal generators 133/171.
    pub fn rate_half_k7() -> Self {
        Self {
            constraint_length: 7,
            generators: [0o133, 0o171],
        }
    }

    /// Number of trellis states.
    pub fn num_states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    /// Zero bits appended to drive the encoder back to state zero.
    pub fn tail_bits(&self) -> usize {
        self.constraint_length - 1
    }
}

/// Frame geometry: information payload, coded length, and the block
/// interleaver that spreads coded bits over channel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    pub info_bits: usize,
    pub coded_bits: usize,
    pub interleaver_rows: usize,
    pub interleaver_cols: usize,
}

impl FrameConfig {
    /// Validates that the interleaver block holds exactly one coded frame.
    pub fn new(info_bits: usize, rows: usize, cols: usize, code: &CodeConfig) -> Result<Self> {
        let coded_bits = 2 * (info_bits + code.tail_bits());
        if rows * cols != coded_bits {
            return Err(Error::InvalidConfig(format!(
                "interleaver {rows}x{cols} does not hold {coded_bits} coded bits"
            )));
        }
        if info_bits == 0 {
            return Err(Error::InvalidConfig("empty frame payload".into()));
        }
        Ok(Self {
            info_bits,
            coded_bits,
            interleaver_rows: rows,
            interleaver_cols: cols,
        })
    }

    /// The 66-bit payload frame: 144 coded bits through a 12x12 block.
    pub fn standard() -> Self {
        Self::new(66, 12, 12, &CodeConfig::rate_half_k7()).expect("standard frame geometry")
    }
}

/// Encodes a payload with a zero tail, emitting both generator outputs per
/// input bit.
pub fn conv_encode(info: &[bool], cfg: &CodeConfig) -> Vec<bool> {
    let k = cfg.constraint_length;
    let [g0, g1] = cfg.generators;
    let mut out = Vec::with_capacity(2 * (info.len() + cfg.tail_bits()));
    let mut state = 0u32;
    for bit in info.iter().copied().chain(std::iter::repeat(false).take(cfg.tail_bits())) {
        let reg = ((bit as u32) << (k - 1)) | state;
        out.push((reg & g0).count_ones() & 1 == 1);
        out.push((reg & g1).count_ones() & 1 == 1);
        state = reg >> 1;
    }
    out
}

/// Writes a frame row by row and reads it column by column:
/// `out[c * rows + r] = in[r * cols + c]`.
pub fn interleave<T: Copy>(xs: &[T], fc: &FrameConfig) -> Result<Vec<T>> {
    let (rows, cols) = (fc.interleaver_rows, fc.interleaver_cols);
    if xs.len() != rows * cols {
        return Err(Error::InterleaverSize {
            expected: rows * cols,
            got: xs.len(),
        });
    }
    let mut out = Vec::with_capacity(xs.len());
    for c in 0..cols {
        for r in 0..rows {
            out.push(xs[r * cols + c]);
        }
    }
    Ok(out)
}

/// Inverse of [`interleave`].
pub fn deinterleave<T: Copy>(xs: &[T], fc: &FrameConfig) -> Result<Vec<T>> {
    let (rows, cols) = (fc.interleaver_rows, fc.interleaver_cols);
    if xs.len() != rows * cols {
        return Err(Error::InterleaverSize {
            expected: rows * cols,
            got: xs.len(),
        });
    }
    let mut out = Vec::with_capacity(xs.len());
    for r in 0..rows {
        for c in 0..cols {
            out.push(xs[c * rows + r]);
        }
    }
    Ok(out)
}

/// Groups a coded frame into channel uses of two symbols each. The frame
/// must split evenly into `2 * Mc`-bit chunks: first antenna's label, then
/// the second antenna's.
pub fn frame_to_symbols(coded: &[bool], c: &Constellation) -> Result<Vec<[Complex64; 2]>> {
    let mc = c.bits_per_symbol();
    if coded.is_empty() || coded.len() % (2 * mc) != 0 {
        return Err(Error::FrameSplit {
            bits: coded.len(),
            per_use: 2 * mc,
        });
    }
    coded
        .chunks(2 * mc)
        .map(|chunk| Ok([map_bits(&chunk[..mc], c)?, map_bits(&chunk[mc..], c)?]))
        .collect()
}

/// Maximum-correlation Viterbi decoding of a zero-terminated frame.
///
/// Takes one LLR per coded bit (two per trellis step), maximizes the
/// correlation between LLRs and `+/-1` coded sequences, and returns the
/// payload without the tail. Hard-decision input works as `+/-1` values;
/// any positive scaling of the LLRs leaves the decisions unchanged.
pub fn viterbi_decode(llrs: &[f64], cfg: &CodeConfig) -> Vec<bool> {
    assert_eq!(llrs.len() % 2, 0, "two LLRs per trellis step");
    let steps = llrs.len() / 2;
    assert!(steps > cfg.tail_bits(), "frame shorter than the tail");
    let k = cfg.constraint_length;
    let [g0, g1] = cfg.generators;
    let num_states = cfg.num_states();
    let state_mask = (num_states - 1) as u32;

    let mut branch_sign = vec![(1.0f64, 1.0f64); 2 * num_states];
    let mut next_state = vec![0usize; 2 * num_states];
    for state in 0..num_states {
        for input in 0..2u32 {
            let reg = (input << (k - 1)) | state as u32;
            let s0 = if (reg & g0).count_ones() & 1 == 1 { 1.0 } else { -1.0 };
            let s1 = if (reg & g1).count_ones() & 1 == 1 { 1.0 } else { -1.0 };
            branch_sign[2 * state + input as usize] = (s0, s1);
            next_state[2 * state + input as usize] = ((reg >> 1) & state_mask) as usize;
        }
    }

    let mut metrics = vec![f64::NEG_INFINITY; num_states];
    metrics[0] = 0.0;
    let mut scratch = vec![f64::NEG_INFINITY; num_states];
    let mut survivors: Vec<u64> = Vec::with_capacity(steps);

    for step in 0..steps {
        let (l0, l1) = (llrs[2 * step], llrs[2 * step + 1]);
        scratch.fill(f64::NEG_INFINITY);
        let mut chosen_low_bit = 0u64;
        for state in 0..num_states {
            let base = metrics[state];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for input in 0..2 {
                let (s0, s1) = branch_sign[2 * state + input];
                let candidate = base + s0 * l0 + s1 * l1;
                let next = next_state[2 * state + input];
                if candidate > scratch[next] {
                    scratch[next] = candidate;
                    if state & 1 == 1 {
                        chosen_low_bit |= 1 << next;
                    } else {
                        chosen_low_bit &= !(1 << next);
                    }
                }
            }
        }
        std::mem::swap(&mut metrics, &mut scratch);
        survivors.push(chosen_low_bit);
    }

    let mut decoded = vec![false; steps];
    let mut state = 0usize;
    for step in (0..steps).rev() {
        decoded[step] = state >> (k - 2) == 1;
        let low_bit = (survivors[step] >> state) & 1;
        state = ((state & (num_states / 2 - 1)) << 1) | low_bit as usize;
    }
    decoded.truncate(steps - cfg.tail_bits());
    decoded
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_qam, demap_symbol};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Reference encoder built directly on a boolean delay line with
    /// explicit tap positions for the 133/171 generators: position 0 is the
    /// current input, position `i` the input from `i` steps earlier.
    fn reference_encode_k7(info: &[bool]) -> Vec<bool> {
        const TAPS_A: [usize; 5] = [0, 2, 3, 5, 6];
        const TAPS_B: [usize; 5] = [0, 1, 2, 3, 6];
        let mut window = [false; 7];
        let mut out = Vec::new();
        for bit in info.iter().copied().chain([false; 6]) {
            window.copy_within(0..6, 1);
            window[0] = bit;
            out.push(TAPS_A.iter().fold(false, |acc, &t| acc ^ window[t]));
            out.push(TAPS_B.iter().fold(false, |acc, &t| acc ^ window[t]));
        }
        out
    }

    fn random_bits(len: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
        (0..len).map(|_| rng.gen_bool(0.5)).collect()
    }

    #[test]
    fn standard_code_constants() {
        let code = CodeConfig::rate_half_k7();
        assert_eq!(code.constraint_length, 7);
        assert_eq!(code.generators, [0o133, 0o171]);
        assert_eq!(code.num_states(), 64);
        assert_eq!(code.tail_bits(), 6);
    }

    #[test]
    fn standard_frame_geometry() {
        let fc = FrameConfig::standard();
        assert_eq!(fc.info_bits, 66);
        assert_eq!(fc.coded_bits, 144);
        assert_eq!(fc.interleaver_rows * fc.interleaver_cols, 144);
    }

    #[test]
    fn frame_config_rejects_mismatched_block() {
        let code = CodeConfig::rate_half_k7();
        assert!(matches!(
            FrameConfig::new(66, 12, 11, &code),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            FrameConfig::new(0, 2, 6, &code),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn all_zero_payload_encodes_to_zeros() {
        let code = CodeConfig::rate_half_k7();
        let out = conv_encode(&vec![false; 66], &code);
        assert_eq!(out.len(), 144);
        assert!(out.iter().all(|&b| !b));
    }

    #[test]
    fn impulse_response_has_free_distance_weight() {
        let code = CodeConfig::rate_half_k7();
        let out = conv_encode(&[true], &code);
        let expected = [
            true, true, false, true, true, true, true, true, false, false, true, false, true,
            true,
        ];
        assert_eq!(out, expected);
        assert_eq!(out.iter().filter(|&&b| b).count(), 10);
    }

    #[test]
    fn encoder_matches_delay_line_reference() {
        let code = CodeConfig::rate_half_k7();
        let mut rng = ChaCha8Rng::seed_from_u64(0xE2C);
        for _ in 0..200 {
            let len = rng.gen_range(1..100);
            let info = random_bits(len, &mut rng);
            assert_eq!(conv_encode(&info, &code), reference_encode_k7(&info));
        }
    }

    #[test]
    fn encoder_is_linear_over_xor() {
        let code = CodeConfig::rate_half_k7();
        let mut rng = ChaCha8Rng::seed_from_u64(0x10E);
        for _ in 0..100 {
            let a = random_bits(66, &mut rng);
            let b = random_bits(66, &mut rng);
            let xored: Vec<bool> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ea = conv_encode(&a, &code);
            let eb = conv_encode(&b, &code);
            let exored = conv_encode(&xored, &code);
            for i in 0..ea.len() {
                assert_eq!(exored[i], ea[i] ^ eb[i]);
            }
        }
    }

    #[test]
    fn interleaver_moves_rows_to_columns() {
        let fc = FrameConfig::standard();
        let input: Vec<usize> = (0..144).collect();
        let out = interleave(&input, &fc).unwrap();
        assert_eq!(out[0], 0);
        assert_eq!(out[12], 1);
        assert_eq!(out[1], 12);
        for r in 0..12 {
            for c in 0..12 {
                assert_eq!(out[c * 12 + r], input[r * 12 + c]);
            }
        }
    }

    #[test]
    fn interleaver_round_trips_bits_and_reals() {
        let fc = FrameConfig::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(0x171);
        let bits = random_bits(144, &mut rng);
        assert_eq!(
            deinterleave(&interleave(&bits, &fc).unwrap(), &fc).unwrap(),
            bits
        );
        let reals: Vec<f64> = (0..144).map(|_| rng.gen_range(-5.0..5.0)).collect();
        assert_eq!(
            deinterleave(&interleave(&reals, &fc).unwrap(), &fc).unwrap(),
            reals
        );
    }

    #[test]
    fn interleaver_rejects_wrong_lengths() {
        let fc = FrameConfig::standard();
        assert!(matches!(
            interleave(&vec![true; 100], &fc),
            Err(Error::InterleaverSize { .. })
        ));
        assert!(matches!(
            deinterleave(&vec![0.0f64; 143], &fc),
            Err(Error::InterleaverSize { .. })
        ));
    }

    #[test]
    fn frames_split_into_symbol_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xF2A);
        for (order, uses) in [(4usize, 36usize), (16, 18), (64, 12)] {
            let c = build_qam(order).unwrap();
            let coded = random_bits(144, &mut rng);
            let symbols = frame_to_symbols(&coded, &c).unwrap();
            assert_eq!(symbols.len(), uses);
            let mc = c.bits_per_symbol();
            let mut recovered = Vec::new();
            for pair in &symbols {
                recovered.extend(demap_symbol(pair[0], &c).unwrap());
                recovered.extend(demap_symbol(pair[1], &c).unwrap());
            }
            assert_eq!(recovered, coded);
            let _ = mc;
        }
    }

    #[test]
    fn frame_split_requires_whole_channel_uses() {
        let c = build_qam(64).unwrap();
        assert!(matches!(
            frame_to_symbols(&vec![true; 100], &c),
            Err(Error::FrameSplit { bits: 100, per_use: 12 })
        ));
        assert!(matches!(
            frame_to_symbols(&[], &c),
            Err(Error::FrameSplit { .. })
        ));
    }

    #[test]
    fn viterbi_round_trips_clean_frames() {
        let code = CodeConfig::rate_half_k7();
        let mut rng = ChaCha8Rng::seed_from_u64(0xA11);
        for _ in 0..1000 {
            let info = random_bits(66, &mut rng);
            let coded = conv_encode(&info, &code);
            let llrs: Vec<f64> = coded.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
            assert_eq!(viterbi_decode(&llrs, &code), info);
        }
    }

    #[test]
    fn viterbi_corrects_any_single_flip() {
        let code = CodeConfig::rate_half_k7();
        let mut rng = ChaCha8Rng::seed_from_u64(0xF119);
        for _ in 0..3 {
            let info = random_bits(66, &mut rng);
            let coded = conv_encode(&info, &code);
            for flip in 0..coded.len() {
                let llrs: Vec<f64> = coded
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| {
                        let sign = if b { 1.0 } else { -1.0 };
                        if i == flip {
                            -sign
                        } else {
                            sign
                        }
                    })
                    .collect();
                assert_eq!(viterbi_decode(&llrs, &code), info, "flip at {flip}");
            }
        }
    }

    #[test]
    fn viterbi_is_invariant_to_positive_llr_scaling() {
        let code = CodeConfig::rate_half_k7();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5CA);
        for _ in 0..50 {
            let info = random_bits(66, &mut rng);
            let coded = conv_encode(&info, &code);
            let noisy: Vec<f64> = coded
                .iter()
                .map(|&b| {
                    let mean = if b { 1.0 } else { -1.0 };
                    mean + rng.gen_range(-1.2..1.2)
                })
                .collect();
            let scaled: Vec<f64> = noisy.iter().map(|l| 7.25 * l).collect();
            assert_eq!(
                viterbi_decode(&noisy, &code),
                viterbi_decode(&scaled, &code)
            );
        }
    }

    #[test]
    fn viterbi_beats_symbol_wise_hard_decisions_on_noisy_llrs() {
        let code = CodeConfig::rate_half_k7();
        let mut rng = ChaCha8Rng::seed_from_u64(0xBE7);
        let mut decoded_errors = 0usize;
        let mut raw_errors = 0usize;
        for _ in 0..200 {
            let info = random_bits(66, &mut rng);
            let coded = conv_encode(&info, &code);
            let llrs: Vec<f64> = coded
                .iter()
                .map(|&b| {
                    let mean = if b { 1.0 } else { -1.0 };
                    mean + 0.6 * rng.sample::<f64, _>(rand_distr::StandardNormal)
                })
                .collect();
            let decoded = viterbi_decode(&llrs, &code);
            decoded_errors += decoded.iter().zip(&info).filter(|(a, b)| a != b).count();
            raw_errors += llrs
                .iter()
                .zip(&coded)
                .filter(|(l, &b)| (**l > 0.0) != b)
                .count();
        }
        assert!(raw_errors > 0);
        assert!(decoded_errors * 10 < raw_errors);
    }
}
