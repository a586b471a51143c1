//! Polar encoding with the natural-order generator `G = F^{⊗n}`,
//! `F = [[1, 0], [1, 1]]`. No bit-reversal permutation is applied, so the
//! belief-propagation graph in [`crate::bp`] uses the same butterfly.

use crate::construction::CodeSpec;
use crate::error::{config_err, Result};
use crate::Bit;

/// Largest block length accepted by [`encode_matrix_oracle`].
pub const ORACLE_MAX_LEN: usize = 1 << 12;

fn check_len(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return config_err(format!("block length {len} is not a power of two"));
    }
    Ok(len.trailing_zeros())
}

/// `x = u · F^{⊗n}` over GF(2), computed in place with `n` butterfly stages.
pub fn encode_in_place(bits: &mut [Bit]) -> Result<()> {
    check_len(bits.len())?;
    let n = bits.len();
    let mut half = 1;
    while half < n {
        for block in bits.chunks_exact_mut(2 * half) {
            let (upper, lower) = block.split_at_mut(half);
            for (a, b) in upper.iter_mut().zip(lower.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
    Ok(())
}

pub fn encode(u: &[Bit]) -> Result<Vec<Bit>> {
    let mut x = u.to_vec();
    encode_in_place(&mut x)?;
    Ok(x)
}

/// Materializes `F^{⊗n}` and multiplies explicitly. Quadratic; for tests.
pub fn encode_matrix_oracle(u: &[Bit]) -> Result<Vec<Bit>> {
    let levels = check_len(u.len())?;
    if u.len() > ORACLE_MAX_LEN {
        return config_err(format!(
            "oracle limited to length {ORACLE_MAX_LEN}, got {}",
            u.len()
        ));
    }
    let mut g: Vec<Vec<Bit>> = vec![vec![1]];
    for _ in 0..levels {
        let m = g.len();
        let mut next = vec![vec![0; 2 * m]; 2 * m];
        for r in 0..m {
            for c in 0..m {
                let v = g[r][c];
                // [[G, 0], [G, G]]
                next[r][c] = v;
                next[r + m][c] = v;
                next[r + m][c + m] = v;
            }
        }
        g = next;
    }
    let n = u.len();
    Ok((0..n)
        .map(|c| (0..n).fold(0, |acc, r| acc ^ (u[r] & g[r][c])))
        .collect())
}

/// Builds the encoder input: information bits on `info_set`, semipolarized
/// bits on `semi_set` (both in ascending index order), zeros elsewhere.
pub fn assemble_input(spec: &CodeSpec, info_bits: &[Bit], semi_bits: &[Bit]) -> Result<Vec<Bit>> {
    if info_bits.len() != spec.info_set.len() {
        return config_err(format!(
            "{} information bits for {} information positions",
            info_bits.len(),
            spec.info_set.len()
        ));
    }
    if semi_bits.len() != spec.semi_set.len() {
        return config_err(format!(
            "{} semipolarized bits for {} semipolarized positions",
            semi_bits.len(),
            spec.semi_set.len()
        ));
    }
    let mut u = vec![0; spec.n_total];
    for (&i, &b) in spec.info_set.iter().zip(info_bits) {
        u[i] = b;
    }
    for (&i, &b) in spec.semi_set.iter().zip(semi_bits) {
        u[i] = b;
    }
    Ok(u)
}
