//! Per-user logic of the two-round aggregation protocol.
//!
//! Round 1: user `k` broadcasts `X_k = W_k + N_k`.
//! Round 2: every round-1 survivor `k ∈ U₁` broadcasts the single symbol
//! `Y_k = Σ_{i∈U₁} [Q_i]_k`.
//! Decoding: any `U` of the `Y_k` pin down `Σ_{i∈U₁} (N_i ‖ S_i)` through a
//! `U x U` minor of α; subtracting the mask sum from `Σ_{k∈U₁} X_k` leaves
//! `Σ_{k∈U₁} W_k`.
//!
//! User ids are 0-based throughout.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldVector, PrimeField};
use crate::keys::{KeyBundle, KeyError};
use crate::linalg::{FieldMatrix, LinalgError};
use crate::mds::PrivateMdsMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(
        "infeasible parameters: U = {u} <= T + 1 = {}; secure aggregation requires U > T + 1",
        t + 1
    )]
    Infeasible { u: usize, t: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("invalid survivor set: {0}")]
    InvalidSurvivorSet(String),
    #[error("input length {got} does not match block length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("user {0} is not a survivor")]
    NotASurvivor(usize),
    #[error("survivor set of size {have} is below the threshold U = {need}")]
    TooFewSurvivors { have: usize, need: usize },
    #[error("only {have} round-2 equations available, need U = {need}")]
    InsufficientSurvivors { have: usize, need: usize },
    #[error("no round-1 message from surviving user {0}")]
    MissingRound1(usize),
    #[error("round-2 message from user {0} was computed for a different survivor set")]
    SurvivorSetMismatch(usize),
    #[error("message from user {0} was not expected in this round")]
    UnexpectedSender(usize),
    #[error("conflicting messages from user {0}")]
    ConflictingMessages(usize),
    #[error("bundle belongs to user {bundle}, decoder is user {user}")]
    BundleMismatch { bundle: usize, user: usize },
    #[error("certification violation: {0}")]
    CertificationViolation(String),
}

/// Rejects `(U, T)` iff `U <= T + 1`.
pub fn check_feasibility(u: usize, t: usize) -> Result<(), ProtocolError> {
    if u <= t + 1 {
        return Err(ProtocolError::Infeasible { u, t });
    }
    Ok(())
}

/// Validated `(K, U, T, q, blocks)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct ProtocolParams {
    k: usize,
    u: usize,
    t: usize,
    field: PrimeField,
    blocks: usize,
}

impl ProtocolParams {
    pub fn new(k: usize, u: usize, t: usize, q: u64, blocks: usize) -> Result<Self, ProtocolError> {
        if k < 3 {
            return Err(ProtocolError::InvalidParams(format!(
                "need K >= 3, got K = {k}"
            )));
        }
        if u < 1 || u > k - 1 {
            return Err(ProtocolError::InvalidParams(format!(
                "need 1 <= U <= K - 1 = {}, got U = {u}",
                k - 1
            )));
        }
        check_feasibility(u, t)?;
        // U <= K-1 together with U > T+1 already forces T <= K-3.
        debug_assert!(t + 3 <= k);
        let field = PrimeField::new(q)?;
        if !field.is_odd() {
            return Err(ProtocolError::InvalidParams(
                "q must be an odd prime".into(),
            ));
        }
        if blocks == 0 {
            return Err(ProtocolError::InvalidParams(
                "blocks must be at least 1".into(),
            ));
        }
        Ok(Self {
            k,
            u,
            t,
            field,
            blocks,
        })
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn threshold(&self) -> usize {
        self.u
    }

    pub fn collusion(&self) -> usize {
        self.t
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Symbols per block, `L = U - T - 1`.
    pub fn block_len(&self) -> usize {
        self.u - self.t - 1
    }

    /// Optimal `(R₁, R₂) = (1, 1/(U-T-1))`.
    pub fn optimal_rates(&self) -> (Rate, Rate) {
        (Rate::new(1, 1), Rate::new(1, self.block_len()))
    }

    /// True iff `alpha` was certified for exactly these `(K, U, T, q)`.
    pub fn matches(&self, alpha: &PrivateMdsMatrix) -> bool {
        alpha.users() == self.k
            && alpha.threshold() == self.u
            && alpha.collusion_bound() == self.t
            && alpha.field() == self.field
    }

    pub fn check_matrix(&self, alpha: &PrivateMdsMatrix) -> Result<(), ProtocolError> {
        if !self.matches(alpha) {
            return Err(ProtocolError::InvalidParams(format!(
                "matrix certified for (K={}, U={}, T={}, q={}) does not match (K={}, U={}, T={}, q={})",
                alpha.users(),
                alpha.threshold(),
                alpha.collusion_bound(),
                alpha.field().modulus(),
                self.k,
                self.u,
                self.t,
                self.field.modulus()
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "U")]
    u: usize,
    #[serde(rename = "T")]
    t: usize,
    q: u64,
    #[serde(rename = "L")]
    l: usize,
    blocks: usize,
}

impl From<ProtocolParams> for ParamsRepr {
    fn from(p: ProtocolParams) -> Self {
        Self {
            k: p.k,
            u: p.u,
            t: p.t,
            q: p.field.modulus(),
            l: p.block_len(),
            blocks: p.blocks,
        }
    }
}

impl TryFrom<ParamsRepr> for ProtocolParams {
    type Error = ProtocolError;

    fn try_from(r: ParamsRepr) -> Result<Self, Self::Error> {
        let p = ProtocolParams::new(r.k, r.u, r.t, r.q, r.blocks)?;
        if p.block_len() != r.l {
            return Err(ProtocolError::InvalidParams(format!(
                "L = {} but U - T - 1 = {}",
                r.l,
                p.block_len()
            )));
        }
        Ok(p)
    }
}

/// A communication rate as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub num: usize,
    pub den: usize,
}

impl Rate {
    pub fn new(num: usize, den: usize) -> Self {
        assert!(den > 0, "rate denominator must be positive");
        Self { num, den }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Cross-multiplied comparison, no floating point.
    pub fn same_value(self, other: Rate) -> bool {
        self.num * other.den == other.num * self.den
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Sorted, duplicate-free set of user ids drawn from `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurvivorSet(Vec<usize>);

impl SurvivorSet {
    pub fn new(k: usize, ids: impl IntoIterator<Item = usize>) -> Result<Self, ProtocolError> {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ProtocolError::InvalidSurvivorSet(format!(
                "duplicate user {}",
                w[0]
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= k) {
            return Err(ProtocolError::InvalidSurvivorSet(format!(
                "user {bad} out of range for K = {k}"
            )));
        }
        Ok(Self(ids))
    }

    pub fn all(k: usize) -> Self {
        Self((0..k).collect())
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset_of(&self, other: &SurvivorSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }
}

impl fmt::Display for SurvivorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round1Message {
    pub sender: usize,
    pub x: FieldVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round2Message {
    pub sender: usize,
    pub survivors: SurvivorSet,
    pub y: FieldElement,
}

/// `X_k = W_k + N_k`.
pub fn round1_encode(
    input: &FieldVector,
    bundle: &KeyBundle,
) -> Result<Round1Message, ProtocolError> {
    if input.len() != bundle.mask().len() {
        return Err(ProtocolError::LengthMismatch {
            expected: bundle.mask().len(),
            got: input.len(),
        });
    }
    Ok(Round1Message {
        sender: bundle.owner(),
        x: input.try_add(bundle.mask())?,
    })
}

/// `Y_k = Σ_{i∈U₁} [Q_i]_k`.
pub fn round2_encode(
    params: &ProtocolParams,
    bundle: &KeyBundle,
    u1: &SurvivorSet,
) -> Result<Round2Message, ProtocolError> {
    if !u1.contains(bundle.owner()) {
        return Err(ProtocolError::NotASurvivor(bundle.owner()));
    }
    if u1.len() < params.threshold() {
        return Err(ProtocolError::TooFewSurvivors {
            have: u1.len(),
            need: params.threshold(),
        });
    }
    let f = bundle.field();
    let proj = bundle.projections().values();
    if let Some(bad) = u1.iter().find(|&i| i >= proj.len()) {
        return Err(ProtocolError::InvalidSurvivorSet(format!(
            "user {bad} has no projection in this bundle"
        )));
    }
    let y = u1.iter().fold(0, |acc, i| f.add_raw(acc, proj[i]));
    Ok(Round2Message {
        sender: bundle.owner(),
        survivors: u1.clone(),
        y: f.elem(y),
    })
}

/// Solves the `U x U` system given by `equations` (sender, `Y_sender`) for the
/// aggregated key vector `Σ_{i∈U₁} (N_i ‖ S_i)`. Exactly `U` equations with
/// distinct senders are expected.
pub fn recover_key_sums(
    alpha: &PrivateMdsMatrix,
    equations: &[(usize, FieldElement)],
) -> Result<FieldVector, ProtocolError> {
    let u = alpha.threshold();
    if equations.len() != u {
        return Err(ProtocolError::InsufficientSurvivors {
            have: equations.len(),
            need: u,
        });
    }
    let senders: Vec<usize> = equations.iter().map(|&(s, _)| s).collect();
    // Row r of the system is column `senders[r]` of α.
    let system = FieldMatrix::from_fn(alpha.field(), u, u, |r, j| alpha.alpha().raw(j, senders[r]));
    let rhs = FieldVector::from_elements(
        alpha.field(),
        &equations.iter().map(|&(_, y)| y).collect::<Vec<_>>(),
    )?;
    system.solve(&rhs).map_err(|e| match e {
        LinalgError::Singular => ProtocolError::CertificationViolation(format!(
            "decode minor on columns {senders:?} is singular"
        )),
        other => other.into(),
    })
}

/// Recovers the key sums from every `U`-subset of `equations` and checks they
/// agree. Returns the common value.
pub fn recover_key_sums_all_subsets(
    alpha: &PrivateMdsMatrix,
    equations: &[(usize, FieldElement)],
) -> Result<FieldVector, ProtocolError> {
    let u = alpha.threshold();
    let mut common: Option<FieldVector> = None;
    for subset in equations.iter().copied().combinations(u) {
        let sums = recover_key_sums(alpha, &subset)?;
        match &common {
            None => common = Some(sums),
            Some(c) if *c != sums => {
                return Err(ProtocolError::ConflictingMessages(subset[0].0));
            }
            Some(_) => {}
        }
    }
    common.ok_or(ProtocolError::InsufficientSurvivors {
        have: equations.len(),
        need: u,
    })
}

/// Everything user `user` has when it decodes.
#[derive(Debug, Clone, Copy)]
pub struct DecoderView<'a> {
    pub user: usize,
    pub input: &'a FieldVector,
    pub bundle: &'a KeyBundle,
    /// Round-1 messages from `U₁ \ {user}`.
    pub round1: &'a [Round1Message],
    /// Round-2 messages from `U₂ \ {user}`.
    pub round2: &'a [Round2Message],
    pub u1: &'a SurvivorSet,
    pub u2: &'a SurvivorSet,
}

/// The round-2 equations available to `view.user`, own value included,
/// sorted by sender.
pub fn collect_equations(
    params: &ProtocolParams,
    view: &DecoderView<'_>,
) -> Result<Vec<(usize, FieldElement)>, ProtocolError> {
    let mut eqs: BTreeMap<usize, FieldElement> = BTreeMap::new();
    let own = round2_encode(params, view.bundle, view.u1)?;
    eqs.insert(view.user, own.y);
    for m in view.round2 {
        if m.sender == view.user {
            continue;
        }
        if !view.u2.contains(m.sender) {
            return Err(ProtocolError::UnexpectedSender(m.sender));
        }
        if m.survivors != *view.u1 {
            return Err(ProtocolError::SurvivorSetMismatch(m.sender));
        }
        if let Some(prev) = eqs.insert(m.sender, m.y) {
            if prev != m.y {
                return Err(ProtocolError::ConflictingMessages(m.sender));
            }
        }
    }
    Ok(eqs.into_iter().collect())
}

fn validate_view(params: &ProtocolParams, view: &DecoderView<'_>) -> Result<(), ProtocolError> {
    if view.bundle.owner() != view.user {
        return Err(ProtocolError::BundleMismatch {
            bundle: view.bundle.owner(),
            user: view.user,
        });
    }
    if view.input.len() != params.block_len() {
        return Err(ProtocolError::LengthMismatch {
            expected: params.block_len(),
            got: view.input.len(),
        });
    }
    if !view.u2.is_subset_of(view.u1) {
        return Err(ProtocolError::InvalidSurvivorSet(format!(
            "U2 = {} is not a subset of U1 = {}",
            view.u2, view.u1
        )));
    }
    if !view.u2.contains(view.user) {
        return Err(ProtocolError::NotASurvivor(view.user));
    }
    if view.u2.len() < params.threshold() {
        return Err(ProtocolError::TooFewSurvivors {
            have: view.u2.len(),
            need: params.threshold(),
        });
    }
    Ok(())
}

/// `Σ_{k∈U₁} X_k`, substituting `W_user + N_user` for the user's own message.
fn sum_round1(
    params: &ProtocolParams,
    view: &DecoderView<'_>,
) -> Result<FieldVector, ProtocolError> {
    let mut received: BTreeMap<usize, &FieldVector> = BTreeMap::new();
    for m in view.round1 {
        if m.sender == view.user {
            continue;
        }
        if !view.u1.contains(m.sender) {
            return Err(ProtocolError::UnexpectedSender(m.sender));
        }
        if m.x.len() != params.block_len() {
            return Err(ProtocolError::LengthMismatch {
                expected: params.block_len(),
                got: m.x.len(),
            });
        }
        if let Some(prev) = received.insert(m.sender, &m.x) {
            if *prev != m.x {
                return Err(ProtocolError::ConflictingMessages(m.sender));
            }
        }
    }
    let mut total = view.input.try_add(view.bundle.mask())?;
    for k in view.u1.iter().filter(|&k| k != view.user) {
        let x = received.get(&k).ok_or(ProtocolError::MissingRound1(k))?;
        total.add_assign(x)?;
    }
    Ok(total)
}

/// Decodes `Σ_{k∈U₁} W_k` at `view.user`, using the `U` lowest-id equations.
pub fn decode(
    params: &ProtocolParams,
    alpha: &PrivateMdsMatrix,
    view: &DecoderView<'_>,
) -> Result<FieldVector, ProtocolError> {
    params.check_matrix(alpha)?;
    validate_view(params, view)?;
    let eqs = collect_equations(params, view)?;
    if eqs.len() < params.threshold() {
        return Err(ProtocolError::InsufficientSurvivors {
            have: eqs.len(),
            need: params.threshold(),
        });
    }
    let key_sums = recover_key_sums(alpha, &eqs[..params.threshold()])?;
    finish_decode(params, view, &key_sums)
}

/// Like [`decode`], but additionally requires every `U`-subset of the
/// available equations to yield the same key sums.
pub fn decode_verified(
    params: &ProtocolParams,
    alpha: &PrivateMdsMatrix,
    view: &DecoderView<'_>,
) -> Result<FieldVector, ProtocolError> {
    params.check_matrix(alpha)?;
    validate_view(params, view)?;
    let eqs = collect_equations(params, view)?;
    if eqs.len() < params.threshold() {
        return Err(ProtocolError::InsufficientSurvivors {
            have: eqs.len(),
            need: params.threshold(),
        });
    }
    let key_sums = recover_key_sums_all_subsets(alpha, &eqs)?;
    finish_decode(params, view, &key_sums)
}

fn finish_decode(
    params: &ProtocolParams,
    view: &DecoderView<'_>,
    key_sums: &FieldVector,
) -> Result<FieldVector, ProtocolError> {
    let mask_sum = key_sums.slice(0..params.block_len());
    Ok(sum_round1(params, view)?.try_sub(&mask_sum)?)
}
