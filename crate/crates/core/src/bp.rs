//! Belief propagation on the polar factor graph.
//!
//! The graph has `n + 1` columns of `N` nodes. Column 0 is the encoder input
//! (`u`), column `n` the codeword (`x`). Stage `s` joins column `s` to column
//! `s + 1` with processing elements on index pairs `(i, i + 2^s)`, the same
//! butterfly order as [`crate::codec::encode_in_place`].
//!
//! `R` messages flow left to right and carry a-priori knowledge of `u`; `L`
//! messages flow right to left and carry channel knowledge. `R[0]` and `L[n]`
//! are boundary inputs and are never overwritten by a sweep.

use crate::codec;
use crate::construction::{ChannelRole, CodeSpec};
use crate::error::{config_err, Result};
use crate::Bit;

/// Saturation magnitude for every stored LLR.
pub const CLIP: f64 = 40.0;

/// Prior injected on frozen positions (known zero).
pub const FROZEN_LLR: f64 = CLIP;

/// Default iteration budget.
pub const DEFAULT_MAX_ITERS: usize = 60;

#[inline]
pub fn clip(x: f64) -> f64 {
    x.clamp(-CLIP, CLIP)
}

/// Box-plus `ln((1 + e^(a+b)) / (e^a + e^b))`, evaluated as the min-sum term
/// plus the correction `ln(1 + e^-|a+b|) - ln(1 + e^-|a-b|)`.
#[inline]
pub fn box_plus(a: f64, b: f64) -> f64 {
    let mag = a.abs().min(b.abs());
    let signed = if (a < 0.0) != (b < 0.0) { -mag } else { mag };
    // ln((1 + p) / (1 + q)) = ln_1p((p - q) / (1 + q))
    let p = (-(a + b).abs()).exp();
    let q = (-(a - b).abs()).exp();
    signed + ((p - q) / (1.0 + q)).ln_1p()
}

/// Outputs of one processing element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeOutput {
    pub l_out1: f64,
    pub l_out2: f64,
    pub r_out1: f64,
    pub r_out2: f64,
}

/// One processing element. `l_in*` arrive from the right column, `r_in*`
/// from the left column; index 1 is the upper node of the pair.
pub fn pe_update(l_in1: f64, l_in2: f64, r_in1: f64, r_in2: f64) -> PeOutput {
    let cross = box_plus(r_in1, l_in1);
    PeOutput {
        l_out1: clip(box_plus(l_in1, l_in2 + r_in2)),
        r_out1: clip(box_plus(r_in1, l_in2 + r_in2)),
        l_out2: clip(cross + l_in2),
        r_out2: clip(cross + r_in2),
    }
}

/// Boundary inputs held fixed while a frame is decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    /// A-priori LLRs on the encoder input (column 0).
    pub left_priors: Vec<f64>,
    /// Channel LLRs on the codeword (column n).
    pub right_priors: Vec<f64>,
}

impl BoundaryCondition {
    /// Frozen positions saturated, everything else (information,
    /// semipolarized, channel) at zero.
    pub fn for_code(spec: &CodeSpec) -> Self {
        let left_priors = spec
            .roles()
            .into_iter()
            .map(|role| match role {
                ChannelRole::Frozen => FROZEN_LLR,
                ChannelRole::Info | ChannelRole::Semi => 0.0,
            })
            .collect();
        Self {
            left_priors,
            right_priors: vec![0.0; spec.n_total],
        }
    }

    pub fn set_channel(&mut self, llrs: &[f64]) {
        debug_assert_eq!(llrs.len(), self.right_priors.len());
        for (dst, &v) in self.right_priors.iter_mut().zip(llrs) {
            *dst = clip(v);
        }
    }
}

/// L and R messages of one factor graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BpState {
    levels: u32,
    l: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

impl BpState {
    pub fn new(levels: u32) -> Self {
        let n = 1usize << levels;
        let cols = levels as usize + 1;
        Self {
            levels,
            l: vec![vec![0.0; n]; cols],
            r: vec![vec![0.0; n]; cols],
        }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn len(&self) -> usize {
        1 << self.levels
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn reset(&mut self) {
        for col in self.l.iter_mut().chain(self.r.iter_mut()) {
            col.fill(0.0);
        }
    }

    /// L messages of column `col` (0 = encoder input, `levels` = codeword).
    pub fn l(&self, col: usize) -> &[f64] {
        &self.l[col]
    }

    pub fn r(&self, col: usize) -> &[f64] {
        &self.r[col]
    }

    /// Mutable access to the left boundary (`R[0]`).
    pub fn left_boundary_mut(&mut self) -> &mut [f64] {
        &mut self.r[0]
    }

    /// Mutable access to the right boundary (`L[n]`).
    pub fn right_boundary_mut(&mut self) -> &mut [f64] {
        let n = self.levels as usize;
        &mut self.l[n]
    }

    pub fn load(&mut self, bc: &BoundaryCondition) {
        let n = self.levels as usize;
        self.r[0].copy_from_slice(&bc.left_priors);
        self.l[n].copy_from_slice(&bc.right_priors);
    }

    /// Left-to-right sweep updating `R[1..=n]`.
    pub fn propagate_r(&mut self) {
        for s in 0..self.levels as usize {
            let half = 1usize << s;
            let (r_lo, r_hi) = self.r.split_at_mut(s + 1);
            let r_in = &r_lo[s];
            let r_out = &mut r_hi[0];
            let l_in = &self.l[s + 1];
            for base in (0..r_in.len()).step_by(2 * half) {
                for i1 in base..base + half {
                    let i2 = i1 + half;
                    let (r1, r2) = (r_in[i1], r_in[i2]);
                    r_out[i1] = clip(box_plus(r1, l_in[i2] + r2));
                    r_out[i2] = clip(box_plus(r1, l_in[i1]) + r2);
                }
            }
        }
    }

    /// Right-to-left sweep updating `L[0..n]`.
    pub fn propagate_l(&mut self) {
        for s in (0..self.levels as usize).rev() {
            let half = 1usize << s;
            let (l_lo, l_hi) = self.l.split_at_mut(s + 1);
            let l_out = &mut l_lo[s];
            let l_in = &l_hi[0];
            let r_in = &self.r[s];
            for base in (0..l_in.len()).step_by(2 * half) {
                for i1 in base..base + half {
                    let i2 = i1 + half;
                    let (l1, l2) = (l_in[i1], l_in[i2]);
                    l_out[i1] = clip(box_plus(l1, l2 + r_in[i2]));
                    l_out[i2] = clip(box_plus(r_in[i1], l1) + l2);
                }
            }
        }
    }

    /// One full iteration with the given boundary: R sweep, then L sweep.
    pub fn iterate(&mut self, bc: &BoundaryCondition) {
        self.load(bc);
        self.propagate_r();
        self.propagate_l();
    }

    /// Hard decisions `(u_hat, x_hat)` on both boundaries; an LLR sum of
    /// exactly zero decides 0.
    pub fn harden(&self) -> (Vec<Bit>, Vec<Bit>) {
        let n = self.levels as usize;
        (
            hard_decisions(&self.l[0], &self.r[0]),
            hard_decisions(&self.l[n], &self.r[n]),
        )
    }

    /// A-posteriori LLR of encoder input `i`.
    pub fn input_llr(&self, i: usize) -> f64 {
        self.l[0][i] + self.r[0][i]
    }
}

pub fn hard_decision(llr: f64) -> Bit {
    (llr < 0.0) as Bit
}

pub fn hard_decisions(a: &[f64], b: &[f64]) -> Vec<Bit> {
    a.iter().zip(b).map(|(x, y)| hard_decision(x + y)).collect()
}

/// G-matrix stopping check: `encode(u_hat) == x_hat`.
pub fn converged(u_hat: &[Bit], x_hat: &[Bit]) -> bool {
    u_hat.len() == x_hat.len()
        && codec::encode(u_hat).map(|x| x == x_hat).unwrap_or(false)
}

/// Processing elements in the factor graphs of the given code lengths,
/// `sum(log2(N_i) * N_i / 2)`.
pub fn pe_count(lengths: &[usize]) -> Result<u64> {
    lengths.iter().try_fold(0u64, |acc, &n| {
        if n == 0 || !n.is_power_of_two() {
            return config_err(format!("code length {n} is not a power of two"));
        }
        Ok(acc + u64::from(n.trailing_zeros()) * (n as u64 / 2))
    })
}

/// Decoder output for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub info: Vec<Bit>,
    pub iterations: usize,
}

/// Reusable BP decoder for a single (non-augmented) code.
#[derive(Debug, Clone)]
pub struct PolarBpDecoder {
    spec: CodeSpec,
    state: BpState,
    bc: BoundaryCondition,
}

impl PolarBpDecoder {
    pub fn new(spec: &CodeSpec) -> Self {
        Self {
            state: BpState::new(spec.levels()),
            bc: BoundaryCondition::for_code(spec),
            spec: spec.clone(),
        }
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    pub fn state(&self) -> &BpState {
        &self.state
    }

    /// Decodes one frame, returning the bits on `info_set` followed by the
    /// bits on `semi_set` (the latter decoded without outside help).
    pub fn decode(&mut self, channel_llrs: &[f64], max_iters: usize, early_stop: bool) -> Result<Decoded> {
        if channel_llrs.len() != self.spec.n_total {
            return config_err(format!(
                "{} channel LLRs for block length {}",
                channel_llrs.len(),
                self.spec.n_total
            ));
        }
        self.state.reset();
        self.bc.set_channel(channel_llrs);
        let mut iterations = 0;
        while iterations < max_iters {
            self.state.iterate(&self.bc);
            iterations += 1;
            if early_stop {
                let (u_hat, x_hat) = self.state.harden();
                if converged(&u_hat, &x_hat) {
                    break;
                }
            }
        }
        let info = self
            .spec
            .info_set
            .iter()
            .chain(&self.spec.semi_set)
            .map(|&i| hard_decision(self.state.input_llr(i)))
            .collect();
        Ok(Decoded { info, iterations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn box_plus_direct(a: f64, b: f64) -> f64 {
        ((1.0 + (a + b).exp()) / (a.exp() + b.exp())).ln()
    }

    #[test]
    fn box_plus_examples() {
        assert!((box_plus(2.0, 3.0) - 1.693_453_661).abs() < 1e-6);
        assert!((box_plus(2.0, 3.0) - box_plus_direct(2.0, 3.0)).abs() < 1e-12);
        for b in [-7.0, -1.0, 0.0, 0.5, 30.0] {
            assert_eq!(box_plus(0.0, b), 0.0);
        }
        for a in [-3.0, -0.2, 0.7, 5.0] {
            assert!((box_plus(a, CLIP) - a).abs() < 1e-12);
            assert!((box_plus(a, -CLIP) + a).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn box_plus_properties(a in -CLIP..CLIP, b in -CLIP..CLIP) {
            let f = box_plus(a, b);
            prop_assert!(f.is_finite());
            prop_assert!((f - box_plus(b, a)).abs() < 1e-12);
            prop_assert!(f.abs() <= a.abs().min(b.abs()) + 1e-12);
            if f != 0.0 {
                prop_assert_eq!(f.signum(), a.signum() * b.signum());
            }
        }

        #[test]
        fn box_plus_matches_direct_formula(a in -15.0..15.0f64, b in -15.0..15.0f64) {
            prop_assert!((box_plus(a, b) - box_plus_direct(a, b)).abs() < 1e-9);
        }
    }

    #[test]
    fn pe_update_examples() {
        let zero = pe_update(0.0, 0.0, 0.0, 0.0);
        assert_eq!(zero, PeOutput { l_out1: 0.0, l_out2: 0.0, r_out1: 0.0, r_out2: 0.0 });

        let out = pe_update(2.0, 3.0, 0.0, 0.0);
        assert!((out.l_out1 - 1.693_453_661).abs() < 1e-6);
        assert_eq!(out.r_out1, 0.0);
        assert_eq!(out.l_out2, 3.0);
        assert_eq!(out.r_out2, 0.0);
    }

    #[test]
    fn pe_update_frozen_upper_reduces_to_sum() {
        // Known-zero upper input: the lower bit sees both channel observations.
        for (l1, l2) in [(1.5, -0.5), (-2.0, 3.0), (0.3, 0.4)] {
            let out = pe_update(l1, l2, FROZEN_LLR, 0.0);
            assert!((out.l_out2 - (l1 + l2)).abs() < 1e-12);
        }
        // With no prior on either input the upper bit sees the XOR: f(L1, L2).
        let out = pe_update(1.5, -0.5, 0.0, 0.0);
        assert!((out.l_out1 - box_plus_direct(1.5, -0.5)).abs() < 1e-12);
    }

    #[test]
    fn all_zero_is_a_fixed_point() {
        let mut state = BpState::new(4);
        let bc = BoundaryCondition {
            left_priors: vec![0.0; 16],
            right_priors: vec![0.0; 16],
        };
        for _ in 0..3 {
            state.iterate(&bc);
        }
        assert_eq!(state, BpState::new(4));
    }

    #[test]
    fn harden_sign_rule() {
        assert_eq!(hard_decisions(&[3.0, -0.05, 0.0], &[0.2, -0.05, 0.0]), vec![0, 1, 0]);
    }

    #[test]
    fn converged_check() {
        assert!(converged(&[0; 8], &[0; 8]));
        let u = [1, 0, 1, 1, 0, 0, 1, 0];
        assert!(converged(&u, &codec::encode(&u).unwrap()));
        let mut last = [0; 8];
        last[7] = 1;
        assert!(!converged(&last, &[0; 8]));
        assert!(!converged(&[0; 4], &[0; 8]));
    }

    #[test]
    fn pe_counts() {
        assert_eq!(pe_count(&[4096]).unwrap(), 24576);
        assert_eq!(pe_count(&[256, 4096]).unwrap(), 25600);
        assert_eq!(pe_count(&[256, 2048, 1024]).unwrap(), 17408);
        assert_eq!(pe_count(&[128, 128, 128, 128, 1024, 1024, 1024, 1024]).unwrap(), 22272);
        assert_eq!(pe_count(&[1]).unwrap(), 0);
        assert!(pe_count(&[3072]).is_err());
    }

    fn saturated(x: &[Bit]) -> Vec<f64> {
        x.iter().map(|&b| if b == 0 { CLIP } else { -CLIP }).collect()
    }

    #[test]
    fn noiseless_frame_decodes_in_one_iteration() {
        let spec = CodeSpec::plain(6, 32, 0.0).unwrap();
        let info: Vec<Bit> = (0..32).map(|i| (i * 7 % 3 == 0) as Bit).collect();
        let u = codec::assemble_input(&spec, &info, &[]).unwrap();
        let x = codec::encode(&u).unwrap();
        let mut bc = BoundaryCondition::for_code(&spec);
        bc.set_channel(&saturated(&x));
        let mut state = BpState::new(6);
        state.iterate(&bc);
        let (u_hat, x_hat) = state.harden();
        assert_eq!(u_hat, u);
        assert_eq!(x_hat, x);
    }

    #[test]
    fn iterate_is_deterministic() {
        let spec = CodeSpec::plain(5, 16, 0.0).unwrap();
        let mut bc = BoundaryCondition::for_code(&spec);
        let llrs: Vec<f64> = (0..32).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.7).collect();
        bc.set_channel(&llrs);
        let run = || {
            let mut s = BpState::new(5);
            for _ in 0..7 {
                s.iterate(&bc);
            }
            s
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        for c in 0..=5 {
            assert!(a.l(c).iter().chain(a.r(c)).all(|v| v.is_finite() && v.abs() <= CLIP));
        }
    }

    #[test]
    fn frozen_positions_harden_to_zero_under_noise() {
        use rand::{Rng, SeedableRng};
        use rand_distr::{Distribution, Normal};
        let spec = CodeSpec::plain(8, 128, 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.8).unwrap();
        let mut dec = PolarBpDecoder::new(&spec);
        for _ in 0..20 {
            let info: Vec<Bit> = (0..128).map(|_| rng.random_range(0..2)).collect();
            let x = codec::encode(&codec::assemble_input(&spec, &info, &[]).unwrap()).unwrap();
            let llrs: Vec<f64> = x
                .iter()
                .map(|&b| {
                    let y = if b == 0 { 1.0 } else { -1.0 } + noise.sample(&mut rng);
                    2.0 * y / 0.64
                })
                .collect();
            dec.decode(&llrs, 20, false).unwrap();
            let (u_hat, _) = dec.state().harden();
            assert!(spec.frozen_set.iter().all(|&i| u_hat[i] == 0));
        }
    }

    #[test]
    fn decoder_rejects_wrong_length() {
        let spec = CodeSpec::plain(3, 4, 0.0).unwrap();
        assert!(PolarBpDecoder::new(&spec).decode(&[0.0; 4], 5, false).is_err());
    }
}
