//! Bhattacharyya-parameter construction and channel partitioning.
//!
//! Channel `i` of a length-`2^n` code is obtained by applying the minus
//! (`2z - z^2`) or plus (`z^2`) transform once per level, reading the bits
//! of `i` from most to least significant. With the natural-order kernel used
//! in [`crate::codec`] this indexing lines up with the input positions of the
//! encoder.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Largest supported number of polarization levels.
pub const MAX_LEVELS: u32 = 24;

/// One polarization step on a Bhattacharyya value.
///
/// Returns `(z_minus, z_plus) = (2z - z^2, z^2)`.
pub fn polarize_step(z: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!(
            "Bhattacharyya parameter {z} outside [0, 1]"
        )));
    }
    let plus = z * z;
    let minus = z * (2.0 - z);
    Ok((minus.min(1.0), plus))
}

/// Bhattacharyya value of a BPSK/AWGN channel at the given Es/N0 (dB).
pub fn awgn_bhattacharyya(design_snr_db: f64) -> f64 {
    (-(10f64.powf(design_snr_db / 10.0))).exp()
}

/// Bhattacharyya parameters of all synthesized channels of one code length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReliabilities {
    levels: u32,
    design_snr_db: f64,
    z: Vec<f64>,
}

impl ChannelReliabilities {
    /// Runs the recursion from the AWGN Bhattacharyya value at `design_snr_db`.
    pub fn build(levels: u32, design_snr_db: f64) -> Result<Self> {
        if !design_snr_db.is_finite() {
            return config_err(format!("design SNR {design_snr_db} is not finite"));
        }
        let mut rel = Self::from_initial(levels, awgn_bhattacharyya(design_snr_db))?;
        rel.design_snr_db = design_snr_db;
        Ok(rel)
    }

    /// Runs the recursion from an arbitrary starting value `z0`.
    ///
    /// The design SNR is recorded as the Es/N0 whose AWGN Bhattacharyya value
    /// equals `z0` (infinite for `z0 == 0`).
    pub fn from_initial(levels: u32, z0: f64) -> Result<Self> {
        if levels > MAX_LEVELS {
            return config_err(format!("{levels} levels exceeds the maximum of {MAX_LEVELS}"));
        }
        polarize_step(z0)?;
        let mut z = Vec::with_capacity(1 << levels);
        z.push(z0);
        for _ in 0..levels {
            let mut next = Vec::with_capacity(z.len() * 2);
            for &v in &z {
                let (minus, plus) = polarize_step(v)?;
                next.push(minus);
                next.push(plus);
            }
            z = next;
        }
        let design_snr_db = 10.0 * (-z0.ln()).log10();
        Ok(Self {
            levels,
            design_snr_db,
            z,
        })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn design_snr_db(&self) -> f64 {
        self.design_snr_db
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Channel indices ordered from most to least reliable. Equal values are
    /// ordered by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.z.len()).collect();
        order.sort_by(|&a, &b| self.z[a].total_cmp(&self.z[b]).then(a.cmp(&b)));
        order
    }

    fn validate(&self) -> Result<()> {
        if self.levels > MAX_LEVELS || self.z.len() != 1usize << self.levels {
            return config_err(format!(
                "{} Bhattacharyya values for {} levels",
                self.z.len(),
                self.levels
            ));
        }
        if let Some(bad) = self.z.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!(
                "Bhattacharyya parameter {bad} outside [0, 1]"
            )));
        }
        Ok(())
    }
}

/// One polar code: its bit-channel partition and the reliabilities it was
/// derived from.
///
/// `delta1`/`delta2` are the realized partition thresholds: the largest
/// Bhattacharyya value among information channels and among semipolarized
/// channels respectively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub n_total: usize,
    pub k_info: usize,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub info_set: Vec<usize>,
    pub semi_set: Vec<usize>,
    pub frozen_set: Vec<usize>,
    pub reliabilities: ChannelReliabilities,
}

/// Splits the channels by reliability rank: the best `k_info` carry
/// information, the next `n_semi` are semipolarized, the rest are frozen.
pub fn partition_channels(
    rel: &ChannelReliabilities,
    k_info: usize,
    n_semi: usize,
    k_frozen: usize,
) -> Result<CodeSpec> {
    let n = rel.len();
    if k_info + n_semi + k_frozen != n {
        return config_err(format!(
            "set sizes {k_info} + {n_semi} + {k_frozen} do not sum to block length {n}"
        ));
    }
    let order = rel.ranking();
    let mut info_set = order[..k_info].to_vec();
    let mut semi_set = order[k_info..k_info + n_semi].to_vec();
    let mut frozen_set = order[k_info + n_semi..].to_vec();
    info_set.sort_unstable();
    semi_set.sort_unstable();
    frozen_set.sort_unstable();
    let max_z = |set: &[usize]| set.iter().map(|&i| rel.z[i]).reduce(f64::max);
    Ok(CodeSpec {
        n_total: n,
        k_info,
        delta1: max_z(&info_set),
        delta2: max_z(&semi_set),
        info_set,
        semi_set,
        frozen_set,
        reliabilities: rel.clone(),
    })
}

impl CodeSpec {
    /// A plain (non-augmented) code of length `2^levels` with `k` information bits.
    pub fn plain(levels: u32, k: usize, design_snr_db: f64) -> Result<Self> {
        let rel = ChannelReliabilities::build(levels, design_snr_db)?;
        let n = rel.len();
        if k > n {
            return config_err(format!("k = {k} exceeds block length {n}"));
        }
        partition_channels(&rel, k, 0, n - k)
    }

    pub fn levels(&self) -> u32 {
        self.reliabilities.levels()
    }

    /// Rate of this code counting semipolarized positions as unfrozen.
    pub fn rate(&self) -> f64 {
        (self.k_info + self.semi_set.len()) as f64 / self.n_total as f64
    }

    /// Per-position role, indexed by channel.
    pub fn roles(&self) -> Vec<ChannelRole> {
        let mut roles = vec![ChannelRole::Frozen; self.n_total];
        for &i in &self.info_set {
            roles[i] = ChannelRole::Info;
        }
        for &i in &self.semi_set {
            roles[i] = ChannelRole::Semi;
        }
        roles
    }

    /// Checks the tiling and rank-ordering invariants.
    pub fn validate(&self) -> Result<()> {
        self.reliabilities.validate()?;
        let n = self.reliabilities.len();
        if self.n_total != n {
            return config_err(format!(
                "n_total {} does not match {} reliabilities",
                self.n_total, n
            ));
        }
        if self.info_set.len() != self.k_info {
            return config_err(format!(
                "info_set has {} entries, k_info is {}",
                self.info_set.len(),
                self.k_info
            ));
        }
        let mut seen = vec![false; n];
        for set in [&self.info_set, &self.semi_set, &self.frozen_set] {
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return config_err("index sets must be strictly ascending");
            }
            for &i in set.iter() {
                if i >= n || seen[i] {
                    return config_err(format!("index {i} out of range or repeated"));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return config_err("index sets do not cover every channel");
        }
        let rank_of = {
            let mut r = vec![0usize; n];
            for (rank, idx) in self.reliabilities.ranking().into_iter().enumerate() {
                r[idx] = rank;
            }
            r
        };
        let worst = |set: &[usize]| set.iter().map(|&i| rank_of[i]).max();
        let best = |set: &[usize]| set.iter().map(|&i| rank_of[i]).min();
        let ordered = |a: Option<usize>, b: Option<usize>| match (a, b) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        };
        if !ordered(worst(&self.info_set), best(&self.semi_set))
            || !ordered(worst(&self.info_set), best(&self.frozen_set))
            || !ordered(worst(&self.semi_set), best(&self.frozen_set))
        {
            return config_err("index sets are not ordered by reliability rank");
        }
        Ok(())
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelRole {
    Info,
    Semi,
    Frozen,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarize_examples() {
        assert_eq!(polarize_step(0.5).unwrap(), (0.75, 0.25));
        assert_eq!(polarize_step(0.0).unwrap(), (0.0, 0.0));
        assert_eq!(polarize_step(1.0).unwrap(), (1.0, 1.0));
        let (m, p) = polarize_step((-1f64).exp()).unwrap();
        assert!((m - 0.600_423_599_1).abs() < 1e-9);
        assert!((p - 0.135_335_283_2).abs() < 1e-9);
    }

    #[test]
    fn polarize_rejects_out_of_range() {
        assert!(matches!(polarize_step(-0.1), Err(Error::Domain(_))));
        assert!(matches!(polarize_step(1.5), Err(Error::Domain(_))));
        assert!(polarize_step(f64::NAN).is_err());
    }

    #[test]
    fn zero_levels_is_the_channel_itself() {
        for snr in [-3.0, 0.0, 2.5] {
            let rel = ChannelReliabilities::build(0, snr).unwrap();
            assert_eq!(rel.z(), &[(-(10f64.powf(snr / 10.0))).exp()]);
        }
    }

    #[test]
    fn two_levels_from_half() {
        let rel = ChannelReliabilities::from_initial(2, 0.5).unwrap();
        assert_eq!(rel.z(), &[0.9375, 0.5625, 0.4375, 0.0625]);
        assert_eq!(rel.ranking(), vec![3, 2, 1, 0]);
    }

    #[test]
    fn design_snr_zero_db_starts_at_inverse_e() {
        let rel = ChannelReliabilities::build(0, 0.0).unwrap();
        assert!((rel.z()[0] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn partition_small() {
        let rel = ChannelReliabilities::from_initial(2, 0.5).unwrap();
        let spec = partition_channels(&rel, 2, 0, 2).unwrap();
        assert_eq!(spec.info_set, vec![2, 3]);
        assert_eq!(spec.frozen_set, vec![0, 1]);
        assert!(spec.semi_set.is_empty());
        assert_eq!(spec.delta1, Some(0.4375));
        assert_eq!(spec.delta2, None);
        spec.validate().unwrap();
    }

    #[test]
    fn partition_rate_one() {
        let rel = ChannelReliabilities::build(3, 0.0).unwrap();
        let spec = partition_channels(&rel, 8, 0, 0).unwrap();
        assert_eq!(spec.info_set, (0..8).collect::<Vec<_>>());
        assert!(spec.frozen_set.is_empty());
    }

    #[test]
    fn partition_setup1_inner_sizes() {
        let rel = ChannelReliabilities::build(12, 0.0).unwrap();
        let spec = partition_channels(&rel, 1920, 256, 1920).unwrap();
        assert_eq!(spec.info_set.len(), 1920);
        assert_eq!(spec.semi_set.len(), 256);
        assert_eq!(spec.frozen_set.len(), 1920);
        spec.validate().unwrap();
        let (d1, d2) = (spec.delta1.unwrap(), spec.delta2.unwrap());
        assert!(0.0 < d1 && d1 <= d2 && d2 < 1.0);
    }

    #[test]
    fn partition_rejects_bad_counts() {
        let rel = ChannelReliabilities::build(3, 0.0).unwrap();
        assert!(matches!(
            partition_channels(&rel, 4, 1, 4),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ties_break_by_index() {
        // z0 = 0 and z0 = 1 are fixed points: every channel ties.
        let rel = ChannelReliabilities::from_initial(3, 1.0).unwrap();
        assert_eq!(rel.ranking(), (0..8).collect::<Vec<_>>());
        let spec = partition_channels(&rel, 3, 2, 3).unwrap();
        assert_eq!(spec.info_set, vec![0, 1, 2]);
        assert_eq!(spec.semi_set, vec![3, 4]);
    }

    /// Exact SC erasure probability of input `i` on a BEC(eps) for the
    /// natural-order transform, by enumerating erasure patterns. Input `i` is
    /// recoverable iff the unit vector of `i` lies in the GF(2) span of the
    /// received generator columns after removing earlier (known) inputs.
    fn bec_erasure_oracle(levels: u32, eps: f64) -> Vec<f64> {
        let n = 1usize << levels;
        // G = F^{⊗n}: row r has a one in column c iff (c & r) == c.
        // Column j as a bitmask over inputs.
        let col = |j: usize| -> u64 {
            (0..n).filter(|&r| r & j == j).fold(0u64, |m, r| m | 1 << r)
        };
        let mut out = vec![0.0; n];
        for (i, slot) in out.iter_mut().enumerate() {
            let unknown_mask: u64 = !((1u64 << i) - 1);
            for pattern in 0u64..(1 << n) {
                let received: Vec<u64> = (0..n)
                    .filter(|&j| pattern >> j & 1 == 0)
                    .map(|j| col(j) & unknown_mask)
                    .collect();
                // Gaussian elimination over GF(2)
                let mut basis: Vec<u64> = Vec::new();
                for mut v in received {
                    for &b in &basis {
                        v = v.min(v ^ b);
                    }
                    if v != 0 {
                        basis.push(v);
                        basis.sort_unstable_by(|a, b| b.cmp(a));
                    }
                }
                let mut t = 1u64 << i;
                for &b in &basis {
                    t = t.min(t ^ b);
                }
                if t != 0 {
                    let erased = pattern.count_ones() as i32;
                    *slot += eps.powi(erased) * (1.0 - eps).powi(n as i32 - erased);
                }
            }
        }
        out
    }

    #[test]
    fn recursion_matches_bec_enumeration() {
        for levels in [1, 2, 3] {
            for eps in [0.2, 0.5] {
                let exact = bec_erasure_oracle(levels, eps);
                let rel = ChannelReliabilities::from_initial(levels, eps).unwrap();
                for (a, b) in exact.iter().zip(rel.z()) {
                    assert!((a - b).abs() < 1e-12, "levels {levels}: {exact:?} vs {:?}", rel.z());
                }
            }
        }
    }

    #[test]
    fn toml_round_trip_validates() {
        let rel = ChannelReliabilities::build(4, 0.0).unwrap();
        let spec = partition_channels(&rel, 6, 4, 6).unwrap();
        let text = spec.to_toml().unwrap();
        assert_eq!(CodeSpec::from_toml(&text).unwrap(), spec);
        let broken = text.replacen("k_info = 6", "k_info = 5", 1);
        assert!(CodeSpec::from_toml(&broken).is_err());
    }
}
