//! Trusted-dealer key generation.
//!
//! Every user `i` owns a uniform mask `N_i` (length `U-T-1`) and pad `S_i`
//! (length `T+1`). User `k` receives
//! `Z_k = (N_k, {[Q_i]_k}_{i in [K]})` where `[Q_i]_k = (N_i ‖ S_i) · α_k`.

use rand::RngCore;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldVector, PrimeField};
use crate::linalg::FieldMatrix;
use crate::mds::PrivateMdsMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("user {user} does not exist (K = {users})")]
    UnknownUser { user: usize, users: usize },
}

/// How the dealer fills the random blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DealMode {
    #[default]
    Uniform,
    /// Pads forced to zero. Fault injection only; the scheme leaks under it.
    ZeroPads,
    /// Masks and pads all zero. Debugging only.
    AllZero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    masks: Vec<FieldVector>,
    pads: Vec<FieldVector>,
    /// `(i, k)` entry is `[Q_i]_k`.
    projections: FieldMatrix,
}

pub fn deal_keys<R: RngCore + ?Sized>(
    k: usize,
    u: usize,
    t: usize,
    alpha: &PrivateMdsMatrix,
    rng: &mut R,
) -> Result<KeyMaterial, KeyError> {
    deal_keys_with(k, u, t, alpha, rng, DealMode::Uniform)
}

pub fn deal_keys_with<R: RngCore + ?Sized>(
    k: usize,
    u: usize,
    t: usize,
    alpha: &PrivateMdsMatrix,
    rng: &mut R,
    mode: DealMode,
) -> Result<KeyMaterial, KeyError> {
    if alpha.users() != k || alpha.threshold() != u || alpha.collusion_bound() != t {
        return Err(KeyError::DimensionMismatch(format!(
            "matrix is certified for (K={}, U={}, T={}), keys requested for (K={k}, U={u}, T={t})",
            alpha.users(),
            alpha.threshold(),
            alpha.collusion_bound()
        )));
    }
    let f = alpha.field();
    let mask_len = alpha.mask_len();
    let pad_len = alpha.t_privacy();
    let mut masks = Vec::with_capacity(k);
    let mut pads = Vec::with_capacity(k);
    for _ in 0..k {
        let (n, s) = match mode {
            DealMode::AllZero => (
                FieldVector::zeros(f, mask_len),
                FieldVector::zeros(f, pad_len),
            ),
            DealMode::Uniform | DealMode::ZeroPads => {
                let n = f.sample_uniform(rng, mask_len);
                let s = f.sample_uniform(rng, pad_len);
                if mode == DealMode::ZeroPads {
                    (n, FieldVector::zeros(f, pad_len))
                } else {
                    (n, s)
                }
            }
        };
        masks.push(n);
        pads.push(s);
    }
    KeyMaterial::from_parts(alpha, masks, pads)
}

impl KeyMaterial {
    /// Rebuilds the projection grid from raw masks and pads.
    pub fn from_parts(
        alpha: &PrivateMdsMatrix,
        masks: Vec<FieldVector>,
        pads: Vec<FieldVector>,
    ) -> Result<Self, KeyError> {
        let k = alpha.users();
        let f = alpha.field();
        if masks.len() != k || pads.len() != k {
            return Err(KeyError::DimensionMismatch(format!(
                "expected {k} masks and pads, got {} and {}",
                masks.len(),
                pads.len()
            )));
        }
        for (n, s) in masks.iter().zip(&pads) {
            if n.field() != f || s.field() != f {
                return Err(FieldError::ModulusMismatch {
                    left: f.modulus(),
                    right: if n.field() != f { n.field() } else { s.field() }.modulus(),
                }
                .into());
            }
            if n.len() != alpha.mask_len() || s.len() != alpha.t_privacy() {
                return Err(KeyError::DimensionMismatch(format!(
                    "mask/pad lengths {}/{} do not match {}/{}",
                    n.len(),
                    s.len(),
                    alpha.mask_len(),
                    alpha.t_privacy()
                )));
            }
        }
        let columns: Vec<FieldVector> = (0..k).map(|c| alpha.alpha().column(c)).collect();
        let mut grid = Vec::with_capacity(k * k);
        for (n, s) in masks.iter().zip(&pads) {
            let key = n.concat(s)?;
            for col in &columns {
                grid.push(key.dot(col)?.value());
            }
        }
        let projections =
            FieldMatrix::from_row_major(f, k, k, &grid).expect("grid has K*K entries");
        Ok(Self {
            masks,
            pads,
            projections,
        })
    }

    pub fn field(&self) -> PrimeField {
        self.projections.field()
    }

    pub fn users(&self) -> usize {
        self.masks.len()
    }

    pub fn mask(&self, i: usize) -> &FieldVector {
        &self.masks[i]
    }

    pub fn pad(&self, i: usize) -> &FieldVector {
        &self.pads[i]
    }

    pub fn masks(&self) -> &[FieldVector] {
        &self.masks
    }

    pub fn pads(&self) -> &[FieldVector] {
        &self.pads
    }

    /// `[Q_i]_k`.
    pub fn projection(&self, i: usize, k: usize) -> FieldElement {
        self.projections.get(i, k)
    }

    pub fn projections(&self) -> &FieldMatrix {
        &self.projections
    }

    /// True iff the stored projections equal a fresh recomputation.
    pub fn is_consistent_with(&self, alpha: &PrivateMdsMatrix) -> bool {
        Self::from_parts(alpha, self.masks.clone(), self.pads.clone())
            .is_ok_and(|fresh| fresh.projections == self.projections)
    }

    pub fn bundle_for(&self, k: usize) -> Result<KeyBundle, KeyError> {
        let users = self.users();
        if k >= users {
            return Err(KeyError::UnknownUser { user: k, users });
        }
        Ok(KeyBundle {
            owner: k,
            mask: self.masks[k].clone(),
            proj_row: self.projections.column(k),
        })
    }
}

/// The key variable `Z_k` held by a single user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyBundle {
    owner: usize,
    mask: FieldVector,
    /// Entry `i` is `[Q_i]_owner`.
    proj_row: FieldVector,
}

impl KeyBundle {
    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn mask(&self) -> &FieldVector {
        &self.mask
    }

    pub fn projections(&self) -> &FieldVector {
        &self.proj_row
    }

    pub fn projection(&self, i: usize) -> Option<FieldElement> {
        self.proj_row.get(i)
    }

    pub fn field(&self) -> PrimeField {
        self.mask.field()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rng_from_seed;

    fn example_one_alpha() -> PrivateMdsMatrix {
        let f = PrimeField::new(65_537).unwrap();
        PrivateMdsMatrix::power_rows(f, &[1, 2, 3], 4, 0).unwrap()
    }

    #[test]
    fn projections_follow_the_explicit_formula() {
        let alpha = example_one_alpha();
        let f = alpha.field();
        let keys = deal_keys(4, 3, 0, &alpha, &mut rng_from_seed(17)).unwrap();
        for i in 0..4 {
            let n = keys.mask(i).values();
            let s = keys.pad(i).values();
            for k in 0..4u32 {
                // N_i(1) + 2^{k} N_i(2) + 3^{k} S_i with 0-based k
                let expect = (n[0] + 2u64.pow(k) * n[1] + 3u64.pow(k) * s[0]) % f.modulus();
                assert_eq!(keys.projection(i, k as usize).value(), expect);
            }
        }
    }

    #[test]
    fn user_one_bundle_sums_with_unit_weights() {
        let alpha = example_one_alpha();
        let keys = deal_keys(4, 3, 0, &alpha, &mut rng_from_seed(2)).unwrap();
        let z1 = keys.bundle_for(0).unwrap();
        assert_eq!(z1.mask(), keys.mask(0));
        for i in 0..4 {
            let n = keys.mask(i).values();
            let expect = (n[0] + n[1] + keys.pad(i).values()[0]) % 65_537;
            assert_eq!(z1.projection(i).unwrap().value(), expect);
        }
        let z2 = keys.bundle_for(1).unwrap();
        for i in 0..4 {
            let n = keys.mask(i).values();
            let expect = (n[0] + 2 * n[1] + 3 * keys.pad(i).values()[0]) % 65_537;
            assert_eq!(z2.projection(i).unwrap().value(), expect);
        }
    }

    #[test]
    fn all_zero_mode_gives_zero_projections() {
        let alpha = example_one_alpha();
        let keys =
            deal_keys_with(4, 3, 0, &alpha, &mut rng_from_seed(0), DealMode::AllZero).unwrap();
        assert!(keys.projections().row_major().iter().all(|&v| v == 0));
    }

    #[test]
    fn zero_pads_keeps_the_same_masks() {
        let alpha = example_one_alpha();
        let full = deal_keys(4, 3, 0, &alpha, &mut rng_from_seed(4)).unwrap();
        let broken =
            deal_keys_with(4, 3, 0, &alpha, &mut rng_from_seed(4), DealMode::ZeroPads).unwrap();
        assert_eq!(full.masks(), broken.masks());
        assert!(broken
            .pads()
            .iter()
            .all(|s| s.values().iter().all(|&v| v == 0)));
    }

    #[test]
    fn recomputation_is_deterministic() {
        let alpha = example_one_alpha();
        let keys = deal_keys(4, 3, 0, &alpha, &mut rng_from_seed(9)).unwrap();
        assert!(keys.is_consistent_with(&alpha));
        let again =
            KeyMaterial::from_parts(&alpha, keys.masks().to_vec(), keys.pads().to_vec()).unwrap();
        assert_eq!(again, keys);
    }

    #[test]
    fn bundles_reassemble_the_grid() {
        let alpha = example_one_alpha();
        let keys = deal_keys(4, 3, 0, &alpha, &mut rng_from_seed(21)).unwrap();
        for k in 0..4 {
            let b = keys.bundle_for(k).unwrap();
            assert_eq!(b.owner(), k);
            for i in 0..4 {
                assert_eq!(b.projection(i).unwrap(), keys.projection(i, k));
            }
        }
        assert_eq!(
            keys.bundle_for(4),
            Err(KeyError::UnknownUser { user: 4, users: 4 })
        );
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let alpha = example_one_alpha();
        assert!(matches!(
            deal_keys(4, 3, 1, &alpha, &mut rng_from_seed(0)),
            Err(KeyError::DimensionMismatch(_))
        ));
        assert!(matches!(
            deal_keys(5, 3, 0, &alpha, &mut rng_from_seed(0)),
            Err(KeyError::DimensionMismatch(_))
        ));
    }
}
