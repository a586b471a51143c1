//! Augmented polar codes: short auxiliary polar codes whose codewords are
//! interleaved onto the semipolarized inputs of one or more inner codes.
//!
//! One auxiliary code on one inner code is serial augmentation. An auxiliary
//! code split across several inner codes couples them, which is how block
//! lengths that are not a power of two are obtained (e.g. 2048 + 1024).
//! Auxiliary codes may also chain inner codes into a ring.
//!
//! Information bits of an [`AugmentedSpec`] are laid out auxiliary codes
//! first (in `aux_codes` order), then inner codes (in `inner_codes` order).
//! The transmitted word is the concatenation of the inner codewords.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bp::{self, converged, hard_decision, BoundaryCondition, BpState, Decoded};
use crate::codec;
use crate::construction::{partition_channels, ChannelReliabilities, CodeSpec};
use crate::error::{config_err, Error, Result};
use crate::Bit;

/// Base seed of the interleavers in the predefined setups; auxiliary code
/// `a` uses `DEFAULT_INTERLEAVER_SEED + a`.
pub const DEFAULT_INTERLEAVER_SEED: u64 = 0x5eed_0001;

/// Design SNR (Es/N0, dB) of the predefined setups.
pub const DEFAULT_DESIGN_SNR_DB: f64 = 0.0;

/// Seeded pseudo-random interleaver.
///
/// [`Permutation::interleave`] moves element `i` to position `forward[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    seed: u64,
    forward: Vec<usize>,
}

impl Permutation {
    /// Uniformly random permutation of `0..size`, fixed by `seed`.
    pub fn new(size: usize, seed: u64) -> Self {
        let mut forward: Vec<usize> = (0..size).collect();
        forward.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { seed, forward }
    }

    pub fn from_forward(forward: Vec<usize>, seed: u64) -> Result<Self> {
        let p = Self { seed, forward };
        p.validate()?;
        Ok(p)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.forward.len()];
        for (i, &p) in self.forward.iter().enumerate() {
            inv[p] = i;
        }
        inv
    }

    pub fn interleave<T: Copy + Default>(&self, input: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); input.len()];
        for (&p, &v) in self.forward.iter().zip(input) {
            out[p] = v;
        }
        out
    }

    pub fn deinterleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.forward.iter().map(|&p| input[p]).collect()
    }

    fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.forward.len()];
        for &p in &self.forward {
            if p >= seen.len() || std::mem::replace(&mut seen[p], true) {
                return config_err("interleaver is not a bijection");
            }
        }
        Ok(())
    }
}

/// `count` consecutive symbols of auxiliary code `aux_id`'s interleaved
/// codeword, starting at `offset`, are loaded onto inner code `inner_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingEdge {
    pub aux_id: usize,
    pub inner_id: usize,
    pub count: usize,
    pub offset: usize,
}

/// A complete coupling graph of inner and auxiliary polar codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSpec {
    pub total_n: usize,
    pub total_k: usize,
    pub design_snr_db: f64,
    pub edges: Vec<CouplingEdge>,
    pub interleavers: Vec<Permutation>,
    pub aux_codes: Vec<CodeSpec>,
    pub inner_codes: Vec<CodeSpec>,
}

/// Where each auxiliary codeword symbol lands: `(inner_id, input index)`,
/// indexed by aux code then by position in the (non-interleaved) aux codeword.
type Wiring = Vec<Vec<(usize, usize)>>;

impl AugmentedSpec {
    pub fn new(
        inner_codes: Vec<CodeSpec>,
        aux_codes: Vec<CodeSpec>,
        edges: Vec<CouplingEdge>,
        interleavers: Vec<Permutation>,
        design_snr_db: f64,
    ) -> Result<Self> {
        let total_n = inner_codes.iter().map(|c| c.n_total).sum();
        let total_k = inner_codes.iter().chain(&aux_codes).map(|c| c.k_info).sum();
        let spec = Self {
            total_n,
            total_k,
            design_snr_db,
            edges,
            interleavers,
            aux_codes,
            inner_codes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn rate(&self) -> f64 {
        self.total_k as f64 / self.total_n as f64
    }

    /// Rate of every auxiliary code, `K / N`.
    pub fn aux_rates(&self) -> Vec<f64> {
        self.aux_codes
            .iter()
            .map(|c| c.k_info as f64 / c.n_total as f64)
            .collect()
    }

    /// Rate of every inner code, `(K + incoming aux symbols) / N`.
    pub fn inner_rates(&self) -> Vec<f64> {
        self.inner_codes.iter().map(CodeSpec::rate).collect()
    }

    /// Lengths of every constituent code, auxiliary codes first.
    pub fn code_lengths(&self) -> Vec<usize> {
        self.aux_codes
            .iter()
            .chain(&self.inner_codes)
            .map(|c| c.n_total)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner_codes.is_empty() {
            return config_err("at least one inner code is required");
        }
        for (i, c) in self.inner_codes.iter().enumerate() {
            c.validate()?;
            if c.semi_set.is_empty() {
                return config_err(format!("inner code {i} has no semipolarized positions"));
            }
        }
        for (a, c) in self.aux_codes.iter().enumerate() {
            c.validate()?;
            if !c.semi_set.is_empty() {
                return config_err(format!("auxiliary code {a} has semipolarized positions"));
            }
        }
        if self.interleavers.len() != self.aux_codes.len() {
            return config_err(format!(
                "{} interleavers for {} auxiliary codes",
                self.interleavers.len(),
                self.aux_codes.len()
            ));
        }
        for (a, (p, c)) in self.interleavers.iter().zip(&self.aux_codes).enumerate() {
            p.validate()?;
            if p.len() != c.n_total {
                return config_err(format!(
                    "interleaver {a} has size {}, auxiliary code has length {}",
                    p.len(),
                    c.n_total
                ));
            }
        }
        let expected_n: usize = self.inner_codes.iter().map(|c| c.n_total).sum();
        let expected_k: usize = self.inner_codes.iter().chain(&self.aux_codes).map(|c| c.k_info).sum();
        if self.total_n != expected_n || self.total_k != expected_k {
            return config_err(format!(
                "totals (K={}, N={}) disagree with the codes (K={expected_k}, N={expected_n})",
                self.total_k, self.total_n
            ));
        }
        self.wiring().map(|_| ())
    }

    /// Resolves the edge list into per-symbol destinations, checking edge
    /// conservation on both sides.
    fn wiring(&self) -> Result<Wiring> {
        let mut incoming = vec![0usize; self.inner_codes.len()];
        let mut spans: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.aux_codes.len()];
        for e in &self.edges {
            if e.aux_id >= self.aux_codes.len() || e.inner_id >= self.inner_codes.len() {
                return config_err(format!("edge {e:?} references an unknown code"));
            }
            if e.count == 0 {
                return config_err(format!("edge {e:?} carries no symbols"));
            }
            incoming[e.inner_id] += e.count;
            spans[e.aux_id].push((e.offset, e.offset + e.count));
        }
        for (b, (&got, code)) in incoming.iter().zip(&self.inner_codes).enumerate() {
            if got != code.semi_set.len() {
                return config_err(format!(
                    "inner code {b} receives {got} symbols but has {} semipolarized positions",
                    code.semi_set.len()
                ));
            }
        }
        for (a, span) in spans.iter_mut().enumerate() {
            span.sort_unstable();
            let mut next = 0;
            for &(start, end) in span.iter() {
                if start != next {
                    return config_err(format!("edges of auxiliary code {a} do not tile its codeword"));
                }
                next = end;
            }
            if next != self.aux_codes[a].n_total {
                return config_err(format!(
                    "edges of auxiliary code {a} cover {next} of {} symbols",
                    self.aux_codes[a].n_total
                ));
            }
        }

        // Destination of each interleaved symbol, filling every inner code's
        // semipolarized set in ascending order, edges in list order.
        let mut by_interleaved: Wiring = self
            .aux_codes
            .iter()
            .map(|c| vec![(0, 0); c.n_total])
            .collect();
        let mut cursor = vec![0usize; self.inner_codes.len()];
        for e in &self.edges {
            let semi = &self.inner_codes[e.inner_id].semi_set;
            for slot in &mut by_interleaved[e.aux_id][e.offset..e.offset + e.count] {
                *slot = (e.inner_id, semi[cursor[e.inner_id]]);
                cursor[e.inner_id] += 1;
            }
        }
        Ok(by_interleaved
            .into_iter()
            .zip(&self.interleavers)
            .map(|(dest, perm)| perm.forward().iter().map(|&p| dest[p]).collect())
            .collect())
    }

    /// Encodes `total_k` information bits into `total_n` code bits.
    pub fn encode(&self, info_bits: &[Bit]) -> Result<Vec<Bit>> {
        if info_bits.len() != self.total_k {
            return config_err(format!(
                "{} information bits for an augmented code with K = {}",
                info_bits.len(),
                self.total_k
            ));
        }
        let wiring = self.wiring()?;
        let mut rest = info_bits;
        let mut inner_inputs: Vec<Vec<Bit>> = self.inner_codes.iter().map(|c| vec![0; c.n_total]).collect();
        for (aux, dest) in self.aux_codes.iter().zip(&wiring) {
            let (slice, tail) = rest.split_at(aux.k_info);
            rest = tail;
            let codeword = codec::encode(&codec::assemble_input(aux, slice, &[])?)?;
            for (&bit, &(b, idx)) in codeword.iter().zip(dest) {
                inner_inputs[b][idx] = bit;
            }
        }
        let mut out = Vec::with_capacity(self.total_n);
        for (inner, u) in self.inner_codes.iter().zip(inner_inputs.iter_mut()) {
            let (slice, tail) = rest.split_at(inner.k_info);
            rest = tail;
            for (&i, &bit) in inner.info_set.iter().zip(slice) {
                u[i] = bit;
            }
            codec::encode_in_place(u)?;
            out.extend_from_slice(u);
        }
        Ok(out)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Size of one constituent code in a [`CouplingDef`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeDef {
    pub levels: u32,
    pub k_info: usize,
}

/// Edge of a [`CouplingDef`]; offsets are assigned in list order per
/// auxiliary code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDef {
    pub aux: usize,
    pub inner: usize,
    pub count: usize,
}

/// Compact description of a coupling graph. Building it runs the
/// construction for every code; each inner code gets as many semipolarized
/// positions as it has incoming auxiliary symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingDef {
    #[serde(default)]
    pub design_snr_db: f64,
    #[serde(default = "default_seed")]
    pub interleaver_seed: u64,
    pub aux: Vec<CodeDef>,
    pub inner: Vec<CodeDef>,
    pub edges: Vec<EdgeDef>,
}

fn default_seed() -> u64 {
    DEFAULT_INTERLEAVER_SEED
}

impl CouplingDef {
    pub fn build(&self) -> Result<AugmentedSpec> {
        let mut offsets = vec![0usize; self.aux.len()];
        let mut incoming = vec![0usize; self.inner.len()];
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.aux >= self.aux.len() || e.inner >= self.inner.len() {
                return config_err(format!("edge {e:?} references an unknown code"));
            }
            edges.push(CouplingEdge {
                aux_id: e.aux,
                inner_id: e.inner,
                count: e.count,
                offset: offsets[e.aux],
            });
            offsets[e.aux] += e.count;
            incoming[e.inner] += e.count;
        }
        let mut aux_codes = Vec::with_capacity(self.aux.len());
        for d in &self.aux {
            aux_codes.push(CodeSpec::plain(d.levels, d.k_info, self.design_snr_db)?);
        }
        let mut inner_codes = Vec::with_capacity(self.inner.len());
        for (d, &semi) in self.inner.iter().zip(&incoming) {
            let rel = ChannelReliabilities::build(d.levels, self.design_snr_db)?;
            let n = rel.len();
            if d.k_info + semi > n {
                return config_err(format!(
                    "inner code of length {n} cannot hold {} information and {semi} auxiliary bits",
                    d.k_info
                ));
            }
            inner_codes.push(partition_channels(&rel, d.k_info, semi, n - d.k_info - semi)?);
        }
        let interleavers = aux_codes
            .iter()
            .enumerate()
            .map(|(a, c)| Permutation::new(c.n_total, self.interleaver_seed.wrapping_add(a as u64)))
            .collect();
        AugmentedSpec::new(inner_codes, aux_codes, edges, interleavers, self.design_snr_db)
    }
}

/// The three predefined configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setup {
    /// One 256-bit auxiliary code on one 4096-bit inner code.
    Serial,
    /// One 256-bit auxiliary code split over inner codes of 2048 and 1024 bits.
    Parallel,
    /// Four 1024-bit inner codes in a ring through four 128-bit auxiliary codes.
    Ring,
}

impl Setup {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Self::Serial),
            2 => Ok(Self::Parallel),
            3 => Ok(Self::Ring),
            _ => config_err(format!("unknown setup {id}; expected 1, 2 or 3")),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Self::Serial => 1,
            Self::Parallel => 2,
            Self::Ring => 3,
        }
    }

    pub fn definition(self, design_snr_db: f64) -> CouplingDef {
        let code = |levels, k_info| CodeDef { levels, k_info };
        let edge = |aux, inner, count| EdgeDef { aux, inner, count };
        let (aux, inner, edges) = match self {
            Self::Serial => (vec![code(8, 128)], vec![code(12, 1920)], vec![edge(0, 0, 256)]),
            Self::Parallel => (
                vec![code(8, 128)],
                vec![code(11, 960), code(10, 448)],
                vec![edge(0, 0, 128), edge(0, 1, 128)],
            ),
            Self::Ring => (
                vec![code(7, 64); 4],
                vec![code(10, 448); 4],
                (0..4)
                    .flat_map(|a| [edge(a, a, 64), edge(a, (a + 1) % 4, 64)])
                    .collect(),
            ),
        };
        CouplingDef {
            design_snr_db,
            interleaver_seed: DEFAULT_INTERLEAVER_SEED,
            aux,
            inner,
            edges,
        }
    }
}

/// Builds setup 1, 2 or 3.
pub fn build_setup(id: u8, design_snr_db: f64) -> Result<AugmentedSpec> {
    Setup::from_id(id)?.definition(design_snr_db).build()
}

/// Whether auxiliary and inner decoders exchange messages while decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exchange {
    #[default]
    Coupled,
    /// Inner codes decoded independently with zero priors on their
    /// semipolarized inputs; auxiliary codes decoded once at the end.
    Uncoupled,
}

/// Reusable joint decoder for an [`AugmentedSpec`].
#[derive(Debug, Clone)]
pub struct AugmentedDecoder {
    spec: AugmentedSpec,
    wiring: Wiring,
    inner_offsets: Vec<usize>,
    inner: Vec<(BpState, BoundaryCondition)>,
    aux: Vec<(BpState, BoundaryCondition)>,
}

impl AugmentedDecoder {
    pub fn new(spec: &AugmentedSpec) -> Result<Self> {
        let wiring = spec.wiring()?;
        let make = |c: &CodeSpec| (BpState::new(c.levels()), BoundaryCondition::for_code(c));
        let inner_offsets = spec
            .inner_codes
            .iter()
            .scan(0, |acc, c| {
                let start = *acc;
                *acc += c.n_total;
                Some(start)
            })
            .collect();
        Ok(Self {
            wiring,
            inner_offsets,
            inner: spec.inner_codes.iter().map(make).collect(),
            aux: spec.aux_codes.iter().map(make).collect(),
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &AugmentedSpec {
        &self.spec
    }

    /// Boundary currently presented to inner decoder `b`.
    pub fn inner_boundary(&self, b: usize) -> &BoundaryCondition {
        &self.inner[b].1
    }

    pub fn inner_state(&self, b: usize) -> &BpState {
        &self.inner[b].0
    }

    pub fn aux_state(&self, a: usize) -> &BpState {
        &self.aux[a].0
    }

    fn reset(&mut self, channel_llrs: &[f64]) {
        for ((state, bc), code) in self.inner.iter_mut().zip(&self.spec.inner_codes) {
            state.reset();
            *bc = BoundaryCondition::for_code(code);
        }
        for (state, bc) in &mut self.aux {
            state.reset();
            bc.right_priors.fill(0.0);
        }
        for ((_, bc), &start) in self.inner.iter_mut().zip(&self.inner_offsets) {
            let n = bc.right_priors.len();
            bc.set_channel(&channel_llrs[start..start + n]);
        }
    }

    /// Inner leftmost-stage L messages on the semipolarized inputs, routed
    /// (deinterleaved) onto the auxiliary decoders' right boundaries.
    fn inner_to_aux(&mut self) {
        for ((_, bc), dest) in self.aux.iter_mut().zip(&self.wiring) {
            for (slot, &(b, idx)) in bc.right_priors.iter_mut().zip(dest) {
                *slot = self.inner[b].0.l(0)[idx];
            }
        }
    }

    /// Auxiliary rightmost-stage R messages, interleaved onto the inner
    /// decoders' left boundaries.
    fn aux_to_inner(&mut self) {
        for ((state, _), dest) in self.aux.iter().zip(&self.wiring) {
            let r = state.r(state.levels() as usize);
            for (&v, &(b, idx)) in r.iter().zip(dest) {
                self.inner[b].1.left_priors[idx] = v;
            }
        }
    }

    fn aux_iteration(state: &mut BpState, bc: &BoundaryCondition) {
        state.load(bc);
        state.propagate_l();
        state.propagate_r();
    }

    fn inner_converged(&self) -> bool {
        self.inner.iter().all(|(s, _)| {
            let (u, x) = s.harden();
            converged(&u, &x)
        })
    }

    /// All constituent codewords valid and every auxiliary codeword agrees
    /// with the inner decisions it was loaded onto.
    fn jointly_converged(&self) -> bool {
        if !self.inner_converged() {
            return false;
        }
        let inner_u: Vec<Vec<Bit>> = self.inner.iter().map(|(s, _)| s.harden().0).collect();
        self.aux.iter().zip(&self.wiring).all(|((s, _), dest)| {
            let (u, x) = s.harden();
            converged(&u, &x)
                && x.iter()
                    .zip(dest)
                    .all(|(&bit, &(b, idx))| inner_u[b][idx] == bit)
        })
    }

    /// Decodes one frame of `total_n` channel LLRs into `total_k` bits.
    pub fn decode(
        &mut self,
        channel_llrs: &[f64],
        max_iters: usize,
        early_stop: bool,
        exchange: Exchange,
    ) -> Result<Decoded> {
        if channel_llrs.len() != self.spec.total_n {
            return config_err(format!(
                "{} channel LLRs for an augmented code with N = {}",
                channel_llrs.len(),
                self.spec.total_n
            ));
        }
        self.reset(channel_llrs);
        let mut iterations = 0;
        while iterations < max_iters {
            for (state, bc) in &mut self.inner {
                state.iterate(bc);
            }
            iterations += 1;
            match exchange {
                Exchange::Coupled => {
                    self.inner_to_aux();
                    for (state, bc) in &mut self.aux {
                        Self::aux_iteration(state, bc);
                    }
                    self.aux_to_inner();
                    if early_stop && self.jointly_converged() {
                        break;
                    }
                }
                Exchange::Uncoupled => {
                    if early_stop && self.inner_converged() {
                        break;
                    }
                }
            }
        }
        if exchange == Exchange::Uncoupled {
            self.inner_to_aux();
            for (state, bc) in &mut self.aux {
                for _ in 0..max_iters {
                    Self::aux_iteration(state, bc);
                    if early_stop {
                        let (u, x) = state.harden();
                        if converged(&u, &x) {
                            break;
                        }
                    }
                }
            }
        }
        Ok(Decoded {
            info: self.decisions(),
            iterations,
        })
    }

    fn decisions(&self) -> Vec<Bit> {
        let codes = self.spec.aux_codes.iter().zip(&self.aux);
        let inner = self.spec.inner_codes.iter().zip(&self.inner);
        codes
            .chain(inner)
            .flat_map(|(code, (state, _))| {
                code.info_set.iter().map(move |&i| hard_decision(state.input_llr(i)))
            })
            .collect()
    }
}

/// Either kind of code the simulator can run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum System {
    Plain(CodeSpec),
    Augmented(AugmentedSpec),
}

impl System {
    pub fn total_n(&self) -> usize {
        match self {
            Self::Plain(c) => c.n_total,
            Self::Augmented(a) => a.total_n,
        }
    }

    pub fn total_k(&self) -> usize {
        match self {
            Self::Plain(c) => c.k_info,
            Self::Augmented(a) => a.total_k,
        }
    }

    pub fn rate(&self) -> f64 {
        self.total_k() as f64 / self.total_n() as f64
    }

    pub fn code_lengths(&self) -> Vec<usize> {
        match self {
            Self::Plain(c) => vec![c.n_total],
            Self::Augmented(a) => a.code_lengths(),
        }
    }

    pub fn pe_count(&self) -> Result<u64> {
        bp::pe_count(&self.code_lengths())
    }

    pub fn encode(&self, info_bits: &[Bit]) -> Result<Vec<Bit>> {
        match self {
            Self::Plain(c) => codec::encode(&codec::assemble_input(c, info_bits, &[])?),
            Self::Augmented(a) => a.encode(info_bits),
        }
    }

    pub fn decoder(&self) -> Result<SystemDecoder> {
        Ok(match self {
            Self::Plain(c) => SystemDecoder::Plain(bp::PolarBpDecoder::new(c)),
            Self::Augmented(a) => SystemDecoder::Augmented(AugmentedDecoder::new(a)?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Plain(c) => {
                c.validate()?;
                if !c.semi_set.is_empty() {
                    return config_err("a plain code cannot have semipolarized positions");
                }
                Ok(())
            }
            Self::Augmented(a) => a.validate(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let system: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        system.validate()?;
        Ok(system)
    }
}

pub enum SystemDecoder {
    Plain(bp::PolarBpDecoder),
    Augmented(AugmentedDecoder),
}

impl SystemDecoder {
    /// `exchange` only affects augmented codes.
    pub fn decode(
        &mut self,
        channel_llrs: &[f64],
        max_iters: usize,
        early_stop: bool,
        exchange: Exchange,
    ) -> Result<Decoded> {
        match self {
            Self::Plain(d) => d.decode(channel_llrs, max_iters, early_stop),
            Self::Augmented(d) => d.decode(channel_llrs, max_iters, early_stop, exchange),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::CLIP;
    use rand::Rng;

    fn saturated(x: &[Bit]) -> Vec<f64> {
        x.iter().map(|&b| if b == 0 { CLIP } else { -CLIP }).collect()
    }

    fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<Bit> {
        (0..n).map(|_| rng.random_range(0..2)).collect()
    }

    #[test]
    fn interleaver_basics() {
        assert_eq!(Permutation::new(1, 99).forward(), &[0]);
        let p = Permutation::new(64, 3);
        assert_eq!(p, Permutation::new(64, 3));
        assert_ne!(p, Permutation::new(64, 4));
        let inv = p.inverse();
        for i in 0..64 {
            assert_eq!(inv[p.forward()[i]], i);
        }
        let data: Vec<usize> = (100..164).collect();
        assert_eq!(p.deinterleave(&p.interleave(&data)), data);
        assert!(Permutation::from_forward(vec![0, 0, 1], 0).is_err());
        assert!(Permutation::from_forward(vec![2, 0, 1], 0).is_ok());
    }

    #[test]
    fn setup_parameters() {
        let s1 = build_setup(1, 0.0).unwrap();
        assert_eq!((s1.total_k, s1.total_n), (2048, 4096));
        assert_eq!(s1.rate(), 0.5);
        assert_eq!(s1.edges.len(), 1);
        assert_eq!(s1.edges[0].count, 256);
        assert_eq!(s1.aux_rates(), vec![0.5]);
        assert_eq!(s1.inner_rates(), vec![(1920.0 + 256.0) / 4096.0]);

        let s2 = build_setup(2, 0.0).unwrap();
        assert_eq!((s2.total_k, s2.total_n), (1536, 3072));
        assert_eq!(s2.rate(), 0.5);
        assert_eq!(s2.inner_rates(), vec![(960.0 + 128.0) / 2048.0, (448.0 + 128.0) / 1024.0]);
        assert!(s2.edges.iter().all(|e| e.count == 128));

        let s3 = build_setup(3, 0.0).unwrap();
        assert_eq!((s3.total_k, s3.total_n), (2048, 4096));
        assert_eq!(s3.edges.len(), 8);
        assert!(s3.edges.iter().all(|e| e.count == 64));
        assert_eq!(bp::pe_count(&s3.code_lengths()).unwrap(), 22272);

        assert!(build_setup(4, 0.0).is_err());
    }

    #[test]
    fn ring_is_a_single_cycle() {
        let s3 = build_setup(3, 0.0).unwrap();
        // Nodes 0..4 aux, 4..8 inner. Every node has degree 2, and a walk
        // from node 0 visits all 8 before returning.
        let mut adj = vec![Vec::new(); 8];
        for e in &s3.edges {
            adj[e.aux_id].push(4 + e.inner_id);
            adj[4 + e.inner_id].push(e.aux_id);
        }
        assert!(adj.iter().all(|a| a.len() == 2));
        let (mut prev, mut cur, mut steps) = (usize::MAX, 0, 0);
        loop {
            let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
            prev = cur;
            cur = next;
            steps += 1;
            if cur == 0 {
                break;
            }
        }
        assert_eq!(steps, 8);
    }

    #[test]
    fn zero_info_encodes_to_zero() {
        for id in 1..=3 {
            let s = build_setup(id, 0.0).unwrap();
            let x = s.encode(&vec![0; s.total_k]).unwrap();
            assert_eq!(x, vec![0; s.total_n]);
        }
        let s1 = build_setup(1, 0.0).unwrap();
        assert!(s1.encode(&[0; 10]).is_err());
    }

    #[test]
    fn encoder_is_linear() {
        let s = build_setup(2, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_bits(&mut rng, s.total_k);
            let b = random_bits(&mut rng, s.total_k);
            let ab: Vec<Bit> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let xa = s.encode(&a).unwrap();
            let xb = s.encode(&b).unwrap();
            let sum: Vec<Bit> = xa.iter().zip(&xb).map(|(x, y)| x ^ y).collect();
            assert_eq!(s.encode(&ab).unwrap(), sum);
        }
    }

    #[test]
    fn encoder_loads_interleaved_aux_codeword() {
        // Independent reconstruction of setup 1's inner input.
        let s = build_setup(1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let info = random_bits(&mut rng, s.total_k);
        let aux = &s.aux_codes[0];
        let aux_cw = codec::encode(&codec::assemble_input(aux, &info[..128], &[]).unwrap()).unwrap();
        let interleaved = s.interleavers[0].interleave(&aux_cw);
        let inner = &s.inner_codes[0];
        let u = codec::assemble_input(inner, &info[128..], &interleaved).unwrap();
        assert_eq!(s.encode(&info).unwrap(), codec::encode(&u).unwrap());
    }

    #[test]
    fn noiseless_round_trip_all_setups() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for id in 1..=3 {
            let s = build_setup(id, 0.0).unwrap();
            let mut dec = AugmentedDecoder::new(&s).unwrap();
            for _ in 0..5 {
                let info = random_bits(&mut rng, s.total_k);
                let llrs = saturated(&s.encode(&info).unwrap());
                let out = dec.decode(&llrs, 3, false, Exchange::Coupled).unwrap();
                assert_eq!(out.info, info, "setup {id}");
                let out = dec.decode(&llrs, 3, false, Exchange::Uncoupled).unwrap();
                assert_eq!(out.info, info, "setup {id} uncoupled");
            }
        }
    }

    #[test]
    fn early_stop_on_clean_frame() {
        let s = build_setup(2, 0.0).unwrap();
        let mut dec = AugmentedDecoder::new(&s).unwrap();
        let info = random_bits(&mut ChaCha8Rng::seed_from_u64(2), s.total_k);
        let llrs = saturated(&s.encode(&info).unwrap());
        let out = dec.decode(&llrs, 60, true, Exchange::Coupled).unwrap();
        assert_eq!(out.info, info);
        assert!(out.iterations <= 3, "{} iterations", out.iterations);
    }

    #[test]
    fn exchange_never_touches_channel_inputs() {
        let s = build_setup(2, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let llrs: Vec<f64> = (0..s.total_n).map(|_| rng.random_range(-6.0..6.0)).collect();
        let mut dec = AugmentedDecoder::new(&s).unwrap();
        for exchange in [Exchange::Coupled, Exchange::Uncoupled] {
            dec.decode(&llrs, 10, false, exchange).unwrap();
            assert_eq!(dec.inner_boundary(0).right_priors, llrs[..2048]);
            assert_eq!(dec.inner_boundary(1).right_priors, llrs[2048..]);
        }
        // Uncoupled decoding leaves the semipolarized priors at zero.
        for (b, code) in s.inner_codes.iter().enumerate() {
            assert!(code.semi_set.iter().all(|&i| dec.inner_boundary(b).left_priors[i] == 0.0));
        }
    }

    #[test]
    fn decode_is_deterministic() {
        let s = build_setup(3, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let llrs: Vec<f64> = (0..s.total_n).map(|_| rng.random_range(-3.0..5.0)).collect();
        let a = AugmentedDecoder::new(&s).unwrap().decode(&llrs, 8, false, Exchange::Coupled).unwrap();
        let mut dec = AugmentedDecoder::new(&s).unwrap();
        dec.decode(&llrs[..].iter().map(|v| -v).collect::<Vec<_>>(), 4, false, Exchange::Coupled)
            .unwrap();
        let b = dec.decode(&llrs, 8, false, Exchange::Coupled).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_graphs_are_rejected() {
        let mut def = Setup::Parallel.definition(0.0);
        def.edges[1].count = 64;
        assert!(def.build().is_err());

        let mut spec = build_setup(2, 0.0).unwrap();
        spec.edges[1].offset = 100;
        assert!(spec.validate().is_err());

        let mut spec = build_setup(2, 0.0).unwrap();
        spec.interleavers.pop();
        assert!(spec.validate().is_err());

        let mut spec = build_setup(1, 0.0).unwrap();
        spec.total_k += 1;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_toml_round_trip() {
        let spec = build_setup(3, 0.0).unwrap();
        let text = System::Augmented(spec.clone()).to_toml().unwrap();
        assert_eq!(System::from_toml(&text).unwrap(), System::Augmented(spec));
        let plain = System::Plain(CodeSpec::plain(4, 8, 0.0).unwrap());
        assert_eq!(System::from_toml(&plain.to_toml().unwrap()).unwrap(), plain);
    }
}
