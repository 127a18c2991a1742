//! Exact entropy oracle for linear observables of a uniform seed.
//!
//! One protocol instance is driven by a global seed of i.i.d. uniform symbols:
//! all inputs `W`, then all masks `N`, then all pads `S`. Every observable in
//! the protocol is `coeffs · seed` for a fixed coefficient matrix. For such
//! observables the Shannon entropy in q-ary units is the rank of the stacked
//! coefficient matrix, so every entropy, conditional entropy and mutual
//! information below is an integer rank identity with no tolerance.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, FieldVector, PrimeField};
use crate::keys::KeyMaterial;
use crate::linalg::{FieldMatrix, LinalgError};
use crate::mds::PrivateMdsMatrix;
use crate::protocol::SurvivorSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntropyError {
    #[error("observable {label:?} does not live on this seed layout ({detail})")]
    LayoutMismatch { label: String, detail: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Coordinates of the global seed: `W` block, then `N` block, then `S` block,
/// each ordered by user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLayout {
    pub users: usize,
    pub input_len: usize,
    pub mask_len: usize,
    pub pad_len: usize,
}

impl SeedLayout {
    pub fn for_matrix(alpha: &PrivateMdsMatrix) -> Self {
        Self {
            users: alpha.users(),
            input_len: alpha.mask_len(),
            mask_len: alpha.mask_len(),
            pad_len: alpha.t_privacy(),
        }
    }

    pub fn dim(&self) -> usize {
        self.users * (self.input_len + self.mask_len + self.pad_len)
    }

    pub fn w(&self, k: usize, j: usize) -> usize {
        debug_assert!(k < self.users && j < self.input_len);
        k * self.input_len + j
    }

    pub fn n(&self, k: usize, j: usize) -> usize {
        debug_assert!(k < self.users && j < self.mask_len);
        self.users * self.input_len + k * self.mask_len + j
    }

    pub fn s(&self, k: usize, j: usize) -> usize {
        debug_assert!(k < self.users && j < self.pad_len);
        self.users * (self.input_len + self.mask_len) + k * self.pad_len + j
    }

    /// The seed vector realised by concrete inputs and keys.
    pub fn assemble(
        &self,
        inputs: &[FieldVector],
        keys: &KeyMaterial,
    ) -> Result<FieldVector, EntropyError> {
        if inputs.len() != self.users || keys.users() != self.users {
            return Err(EntropyError::Precondition(format!(
                "expected {} users, got {} inputs and {} key sets",
                self.users,
                inputs.len(),
                keys.users()
            )));
        }
        let f = keys.field();
        let mut values = vec![0u64; self.dim()];
        for k in 0..self.users {
            let (w, n, s) = (&inputs[k], keys.mask(k), keys.pad(k));
            if w.len() != self.input_len || n.len() != self.mask_len || s.len() != self.pad_len {
                return Err(EntropyError::Precondition(format!(
                    "user {k} block lengths do not match the layout"
                )));
            }
            for (j, &v) in w.values().iter().enumerate() {
                values[self.w(k, j)] = v;
            }
            for (j, &v) in n.values().iter().enumerate() {
                values[self.n(k, j)] = v;
            }
            for (j, &v) in s.values().iter().enumerate() {
                values[self.s(k, j)] = v;
            }
        }
        Ok(FieldVector::from_values(f, values))
    }
}

/// A named linear function of the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearObservable {
    pub label: String,
    pub coeffs: FieldMatrix,
}

impl LinearObservable {
    pub fn new(label: impl Into<String>, coeffs: FieldMatrix) -> Self {
        Self {
            label: label.into(),
            coeffs,
        }
    }

    /// Stacks several observables into one.
    pub fn joint(
        label: impl Into<String>,
        parts: &[&LinearObservable],
    ) -> Result<Self, EntropyError> {
        let label = label.into();
        let Some(first) = parts.first() else {
            return Err(EntropyError::Precondition(format!(
                "joint observable {label:?} needs at least one part"
            )));
        };
        let coeffs = stack(first.coeffs.field(), first.coeffs.cols(), parts)?;
        Ok(Self { label, coeffs })
    }

    pub fn dimension(&self) -> usize {
        self.coeffs.rows()
    }

    /// `coeffs · seed`.
    pub fn evaluate(&self, seed: &FieldVector) -> Result<FieldVector, EntropyError> {
        Ok(self.coeffs.mul_vec(seed)?)
    }
}

fn stack(
    field: PrimeField,
    cols: usize,
    parts: &[&LinearObservable],
) -> Result<FieldMatrix, EntropyError> {
    for p in parts {
        if p.coeffs.field() != field || p.coeffs.cols() != cols {
            return Err(EntropyError::LayoutMismatch {
                label: p.label.clone(),
                detail: format!(
                    "{} columns over F_{}, expected {cols} over F_{}",
                    p.coeffs.cols(),
                    p.coeffs.field().modulus(),
                    field.modulus()
                ),
            });
        }
    }
    Ok(FieldMatrix::vstack(
        field,
        cols,
        parts.iter().map(|p| &p.coeffs),
    )?)
}

fn joint_rank(groups: &[&[&LinearObservable]]) -> Result<usize, EntropyError> {
    let all: Vec<&LinearObservable> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let Some(first) = all.first() else {
        return Ok(0);
    };
    Ok(stack(first.coeffs.field(), first.coeffs.cols(), &all)?.rank())
}

/// `H(obs)` in q-ary units.
pub fn entropy(obs: &[&LinearObservable]) -> Result<usize, EntropyError> {
    joint_rank(&[obs])
}

/// `H(a | given) = H(a, given) − H(given)`.
pub fn cond_entropy(
    a: &[&LinearObservable],
    given: &[&LinearObservable],
) -> Result<usize, EntropyError> {
    Ok(joint_rank(&[a, given])? - joint_rank(&[given])?)
}

/// The four joint entropies behind a conditional mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiTerms {
    pub h_c: usize,
    pub h_ac: usize,
    pub h_bc: usize,
    pub h_abc: usize,
}

impl MiTerms {
    /// `H(A|C) + H(B|C) − H(A,B|C)`.
    pub fn value(&self) -> i64 {
        self.h_ac as i64 + self.h_bc as i64 - self.h_abc as i64 - self.h_c as i64
    }

    pub fn to_map(&self) -> BTreeMap<String, usize> {
        BTreeMap::from([
            ("H(C)".to_string(), self.h_c),
            ("H(A,C)".to_string(), self.h_ac),
            ("H(B,C)".to_string(), self.h_bc),
            ("H(A,B,C)".to_string(), self.h_abc),
        ])
    }
}

pub fn mutual_info_terms(
    a: &[&LinearObservable],
    b: &[&LinearObservable],
    given: &[&LinearObservable],
) -> Result<MiTerms, EntropyError> {
    Ok(MiTerms {
        h_c: joint_rank(&[given])?,
        h_ac: joint_rank(&[a, given])?,
        h_bc: joint_rank(&[b, given])?,
        h_abc: joint_rank(&[a, b, given])?,
    })
}

/// `I(a; b | given)`.
pub fn mutual_info(
    a: &[&LinearObservable],
    b: &[&LinearObservable],
    given: &[&LinearObservable],
) -> Result<i64, EntropyError> {
    Ok(mutual_info_terms(a, b, given)?.value())
}

/// Whether the model uses real pads or the zeroed-pad fault injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadMode {
    #[default]
    Uniform,
    Zeroed,
}

/// `(K, U, T, q)` as written into reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeShape {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "U")]
    pub u: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub q: u64,
}

/// Coefficient matrices of every observable of the achievable scheme.
#[derive(Debug, Clone)]
pub struct SchemeModel {
    alpha: FieldMatrix,
    t: usize,
    layout: SeedLayout,
    pads: PadMode,
}

impl SchemeModel {
    pub fn new(alpha: &PrivateMdsMatrix, pads: PadMode) -> Self {
        Self {
            alpha: alpha.alpha().clone(),
            t: alpha.collusion_bound(),
            layout: SeedLayout::for_matrix(alpha),
            pads,
        }
    }

    pub fn layout(&self) -> SeedLayout {
        self.layout
    }

    pub fn field(&self) -> PrimeField {
        self.alpha.field()
    }

    pub fn shape(&self) -> SchemeShape {
        SchemeShape {
            k: self.layout.users,
            u: self.alpha.rows(),
            t: self.t,
            q: self.field().modulus(),
        }
    }

    pub fn pads(&self) -> PadMode {
        self.pads
    }

    fn users(&self) -> usize {
        self.layout.users
    }

    fn threshold(&self) -> usize {
        self.alpha.rows()
    }

    fn zero_rows(&self, rows: usize) -> Vec<u64> {
        vec![0; rows * self.layout.dim()]
    }

    fn build(&self, label: String, rows: usize, data: Vec<u64>) -> LinearObservable {
        let coeffs = FieldMatrix::from_row_major(self.field(), rows, self.layout.dim(), &data)
            .expect("row buffer sized to the layout");
        LinearObservable::new(label, coeffs)
    }

    /// Adds `[Q_i]_k` coefficients into `row`.
    fn add_projection(&self, row: &mut [u64], i: usize, k: usize) {
        let f = self.field();
        let l = &self.layout;
        for j in 0..l.mask_len {
            let c = l.n(i, j);
            row[c] = f.add_raw(row[c], self.alpha.raw(j, k));
        }
        if self.pads == PadMode::Uniform {
            for j in 0..l.pad_len {
                let c = l.s(i, j);
                row[c] = f.add_raw(row[c], self.alpha.raw(l.mask_len + j, k));
            }
        }
    }

    fn unit_block(&self, label: String, coords: impl Iterator<Item = usize>) -> LinearObservable {
        let coords: Vec<usize> = coords.collect();
        let d = self.layout.dim();
        let mut data = self.zero_rows(coords.len());
        for (r, c) in coords.iter().enumerate() {
            data[r * d + c] = 1;
        }
        self.build(label, coords.len(), data)
    }

    pub fn w(&self, k: usize) -> LinearObservable {
        let l = self.layout;
        self.unit_block(format!("W{k}"), (0..l.input_len).map(|j| l.w(k, j)))
    }

    pub fn n(&self, k: usize) -> LinearObservable {
        let l = self.layout;
        self.unit_block(format!("N{k}"), (0..l.mask_len).map(|j| l.n(k, j)))
    }

    pub fn s(&self, k: usize) -> LinearObservable {
        let l = self.layout;
        self.unit_block(format!("S{k}"), (0..l.pad_len).map(|j| l.s(k, j)))
    }

    /// All `N` and `S` symbols.
    pub fn all_keys(&self) -> LinearObservable {
        let l = self.layout;
        let start = l.n(0, 0);
        self.unit_block("keys".into(), start..l.dim())
    }

    /// All `N` symbols.
    pub fn all_masks(&self) -> LinearObservable {
        let l = self.layout;
        self.unit_block("masks".into(), l.n(0, 0)..l.n(0, 0) + l.users * l.mask_len)
    }

    /// Masks of the listed users.
    pub fn masks_of(&self, users: &[usize]) -> LinearObservable {
        let l = self.layout;
        let label = format!("N{{{}}}", users.iter().join(","));
        self.unit_block(
            label,
            users
                .iter()
                .flat_map(move |&k| (0..l.mask_len).map(move |j| l.n(k, j))),
        )
    }

    pub fn all_inputs(&self) -> LinearObservable {
        let l = self.layout;
        self.unit_block("W[K]".into(), 0..l.users * l.input_len)
    }

    /// `X_k = W_k + N_k`.
    pub fn x(&self, k: usize) -> LinearObservable {
        let l = self.layout;
        let d = l.dim();
        let mut data = self.zero_rows(l.input_len);
        for j in 0..l.input_len {
            data[j * d + l.w(k, j)] = 1;
            data[j * d + l.n(k, j)] = 1;
        }
        self.build(format!("X{k}"), l.input_len, data)
    }

    /// `[Q_i]_k`.
    pub fn projection(&self, i: usize, k: usize) -> LinearObservable {
        let mut data = self.zero_rows(1);
        self.add_projection(&mut data, i, k);
        self.build(format!("Q{i}@{k}"), 1, data)
    }

    /// `Z_k = (N_k, {[Q_i]_k}_i)`.
    pub fn z(&self, k: usize) -> LinearObservable {
        let l = self.layout;
        let d = l.dim();
        let rows = l.mask_len + self.users();
        let mut data = self.zero_rows(rows);
        for j in 0..l.mask_len {
            data[j * d + l.n(k, j)] = 1;
        }
        for i in 0..self.users() {
            let r = l.mask_len + i;
            self.add_projection(&mut data[r * d..(r + 1) * d], i, k);
        }
        self.build(format!("Z{k}"), rows, data)
    }

    /// `Y_k = Σ_{i∈U₁} [Q_i]_k`.
    pub fn y(&self, k: usize, u1: &SurvivorSet) -> LinearObservable {
        let mut data = self.zero_rows(1);
        for i in u1.iter() {
            self.add_projection(&mut data, i, k);
        }
        self.build(format!("Y{k}^{u1}"), 1, data)
    }

    fn sum_block(
        &self,
        label: String,
        users: &[usize],
        len: usize,
        coord: impl Fn(usize, usize) -> usize,
    ) -> LinearObservable {
        let d = self.layout.dim();
        let mut data = self.zero_rows(len);
        for &k in users {
            for j in 0..len {
                data[j * d + coord(k, j)] = 1;
            }
        }
        self.build(label, len, data)
    }

    /// `Σ_{k∈users} W_k`.
    pub fn sum_w(&self, users: &[usize]) -> LinearObservable {
        let l = self.layout;
        self.sum_block(
            format!("ΣW{{{}}}", users.iter().join(",")),
            users,
            l.input_len,
            |k, j| l.w(k, j),
        )
    }

    /// `Σ_{k∈users} N_k`.
    pub fn sum_n(&self, users: &[usize]) -> LinearObservable {
        let l = self.layout;
        self.sum_block(
            format!("ΣN{{{}}}", users.iter().join(",")),
            users,
            l.mask_len,
            |k, j| l.n(k, j),
        )
    }

    /// `Σ_{k∈users} S_k`.
    pub fn sum_s(&self, users: &[usize]) -> LinearObservable {
        let l = self.layout;
        self.sum_block(
            format!("ΣS{{{}}}", users.iter().join(",")),
            users,
            l.pad_len,
            |k, j| l.s(k, j),
        )
    }

    /// What the adversary `u` observes on the channel: every `X_k` with
    /// `k ≠ u` (dropped users included) and every `Y_k^{U₁}` with `k ∈ U₁ \ {u}`.
    pub fn adversary_messages(&self, u: usize, u1: &SurvivorSet) -> Vec<LinearObservable> {
        (0..self.users())
            .filter(|&k| k != u)
            .map(|k| self.x(k))
            .chain(u1.iter().filter(|&k| k != u).map(|k| self.y(k, u1)))
            .collect()
    }

    /// `Σ_{U₁} W` together with `{W_k, Z_k}` for `k ∈ T ∪ {u}`.
    pub fn adversary_side_info(
        &self,
        u: usize,
        collusion: &[usize],
        u1: &SurvivorSet,
    ) -> Vec<LinearObservable> {
        let mut out = vec![self.sum_w(u1.ids())];
        for k in std::iter::once(u).chain(collusion.iter().copied()) {
            out.push(self.w(k));
            out.push(self.z(k));
        }
        out
    }

    /// What decoder `u` holds: `X_k` for `k ∈ U₁ \ {u}`, `Y_k` for
    /// `k ∈ U₂ \ {u}`, and its own `W_u`, `Z_u`.
    pub fn decoder_view(
        &self,
        u: usize,
        u1: &SurvivorSet,
        u2: &SurvivorSet,
    ) -> Vec<LinearObservable> {
        u1.iter()
            .filter(|&k| k != u)
            .map(|k| self.x(k))
            .chain(u2.iter().filter(|&k| k != u).map(|k| self.y(k, u1)))
            .chain([self.w(u), self.z(u)])
            .collect()
    }

    fn check_user(&self, u: usize) -> Result<(), EntropyError> {
        if u >= self.users() {
            return Err(EntropyError::Precondition(format!(
                "user {u} out of range for K = {}",
                self.users()
            )));
        }
        Ok(())
    }

    /// Exact value of the security mutual information for one
    /// `(u, T, U₁)` triple.
    pub fn security_check(
        &self,
        u: usize,
        collusion: &[usize],
        u1: &SurvivorSet,
    ) -> Result<CheckOutcome, EntropyError> {
        self.check_user(u)?;
        if collusion.len() > self.t {
            return Err(EntropyError::Precondition(format!(
                "collusion set of size {} exceeds T = {}",
                collusion.len(),
                self.t
            )));
        }
        if collusion.contains(&u) {
            return Err(EntropyError::Precondition(format!(
                "adversary {u} cannot also be in its collusion set"
            )));
        }
        if collusion.iter().any(|&c| c >= self.users()) || !collusion.iter().all_unique() {
            return Err(EntropyError::Precondition(
                "collusion set must hold distinct valid users".into(),
            ));
        }
        if u1.len() < self.threshold() {
            return Err(EntropyError::Precondition(format!(
                "|U1| = {} is below U = {}",
                u1.len(),
                self.threshold()
            )));
        }
        let inputs = self.all_inputs();
        let messages = self.adversary_messages(u, u1);
        let side = self.adversary_side_info(u, collusion, u1);
        let terms = mutual_info_terms(&[&inputs], &refs(&messages), &refs(&side))?;
        Ok(self.outcome(
            "security",
            u,
            collusion,
            u1,
            None,
            terms.value(),
            terms.to_map(),
        ))
    }

    /// `H(Σ_{U₁} W | decoder view of u)`, which must be zero.
    pub fn correctness_check(
        &self,
        u: usize,
        u1: &SurvivorSet,
        u2: &SurvivorSet,
    ) -> Result<CheckOutcome, EntropyError> {
        self.check_user(u)?;
        if !u2.is_subset_of(u1) || !u2.contains(u) {
            return Err(EntropyError::Precondition(format!(
                "need u ∈ U2 ⊆ U1, got u = {u}, U1 = {u1}, U2 = {u2}"
            )));
        }
        let target = self.sum_w(u1.ids());
        let view = self.decoder_view(u, u1, u2);
        let view_refs = refs(&view);
        let h_view = entropy(&view_refs)?;
        let h_joint = joint_rank(&[&[&target], &view_refs])?;
        let residual = (h_joint - h_view) as i64;
        let terms = BTreeMap::from([
            ("H(view)".to_string(), h_view),
            ("H(target,view)".to_string(), h_joint),
        ]);
        Ok(self.outcome("correctness", u, &[], u1, Some(u2), residual, terms))
    }

    /// `I({[Q_i]_k}_{i∈[K], k∈B}; {N_i}_{i∈[K]})`.
    pub fn projection_privacy_mi(&self, b: &[usize]) -> Result<i64, EntropyError> {
        for &k in b {
            self.check_user(k)?;
        }
        let projections: Vec<LinearObservable> = b
            .iter()
            .flat_map(|&k| (0..self.users()).map(move |i| (i, k)))
            .map(|(i, k)| self.projection(i, k))
            .collect();
        let masks = self.all_masks();
        mutual_info(&refs(&projections), &[&masks], &[])
    }

    /// `I({N_i}_{i∉B}; {Z_k}_{k∈B})`.
    pub fn outside_mask_mi(&self, b: &[usize]) -> Result<i64, EntropyError> {
        for &k in b {
            self.check_user(k)?;
        }
        let outside: Vec<usize> = (0..self.users()).filter(|k| !b.contains(k)).collect();
        let masks = self.masks_of(&outside);
        let bundles: Vec<LinearObservable> = b.iter().map(|&k| self.z(k)).collect();
        mutual_info(&[&masks], &refs(&bundles), &[])
    }

    #[allow(clippy::too_many_arguments)]
    fn outcome(
        &self,
        check: &str,
        u: usize,
        collusion: &[usize],
        u1: &SurvivorSet,
        u2: Option<&SurvivorSet>,
        value: i64,
        rank_terms: BTreeMap<String, usize>,
    ) -> CheckOutcome {
        if value == 0 {
            return CheckOutcome::Pass;
        }
        CheckOutcome::Violation(Box::new(ViolationReport {
            check: check.to_string(),
            params: self.shape(),
            u,
            collusion: collusion.to_vec(),
            u1: u1.ids().to_vec(),
            u2: u2.map(|s| s.ids().to_vec()),
            mi_value: value,
            rank_terms,
        }))
    }
}

pub fn refs(v: &[LinearObservable]) -> Vec<&LinearObservable> {
    v.iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Pass,
    Violation(Box<ViolationReport>),
}

impl CheckOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, CheckOutcome::Pass)
    }

    pub fn value(&self) -> i64 {
        match self {
            CheckOutcome::Pass => 0,
            CheckOutcome::Violation(r) => r.mi_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub check: String,
    pub params: SchemeShape,
    pub u: usize,
    pub collusion: Vec<usize>,
    pub u1: Vec<usize>,
    pub u2: Option<Vec<usize>>,
    pub mi_value: i64,
    pub rank_terms: BTreeMap<String, usize>,
}

/// One security scenario: adversary, its colluders, and the round-1 survivors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityCase {
    pub u: usize,
    pub collusion: Vec<usize>,
    pub u1: SurvivorSet,
}

/// Every `U₁ ⊆ [K]` with `|U₁| ≥ U`.
pub fn survivor_sets(k: usize, u: usize) -> Vec<SurvivorSet> {
    (u..=k)
        .flat_map(|size| (0..k).combinations(size))
        .map(|ids| SurvivorSet::new(k, ids).expect("combinations are valid"))
        .collect()
}

/// Every `(u, T, U₁)` with `u ∉ T`, `|T| ≤ t`, `|U₁| ≥ U`.
pub fn all_security_cases(k: usize, u: usize, t: usize) -> Vec<SecurityCase> {
    let sets = survivor_sets(k, u);
    let mut out = Vec::new();
    for adv in 0..k {
        let others: Vec<usize> = (0..k).filter(|&i| i != adv).collect();
        for size in 0..=t.min(others.len()) {
            for collusion in others.iter().copied().combinations(size) {
                for u1 in &sets {
                    out.push(SecurityCase {
                        u: adv,
                        collusion: collusion.clone(),
                        u1: u1.clone(),
                    });
                }
            }
        }
    }
    out
}

/// `count` security cases drawn uniformly at random (with replacement).
pub fn sample_security_cases<R: RngCore>(
    k: usize,
    u: usize,
    t: usize,
    count: usize,
    rng: &mut R,
) -> Vec<SecurityCase> {
    (0..count)
        .map(|_| {
            let adv = rng.gen_range(0..k);
            let mut others: Vec<usize> = (0..k).filter(|&i| i != adv).collect();
            others.shuffle(rng);
            let size = rng.gen_range(0..=t.min(others.len()));
            let mut collusion = others[..size].to_vec();
            collusion.sort_unstable();
            let u1_size = rng.gen_range(u..=k);
            let mut ids: Vec<usize> = (0..k).collect();
            ids.shuffle(rng);
            let u1 = SurvivorSet::new(k, ids[..u1_size].iter().copied()).expect("valid ids");
            SecurityCase {
                u: adv,
                collusion,
                u1,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rng_from_seed;
    use crate::keys::deal_keys;
    use crate::mds::find_private_mds;

    fn model(k: usize, u: usize, t: usize, pads: PadMode) -> (PrivateMdsMatrix, SchemeModel) {
        let f = PrimeField::new(65_537).unwrap();
        let alpha = find_private_mds(k, u, t, f, &mut rng_from_seed(1)).unwrap();
        let m = SchemeModel::new(&alpha, pads);
        (alpha, m)
    }

    #[test]
    fn layout_dimension() {
        let (_, m) = model(4, 3, 0, PadMode::Uniform);
        let l = m.layout();
        assert_eq!(l.dim(), 4 * 2 + 4 * 3);
        assert_eq!(l.w(0, 0), 0);
        assert_eq!(l.n(0, 0), 8);
        assert_eq!(l.s(3, 0), 19);
    }

    #[test]
    fn basic_entropies() {
        let (_, m) = model(4, 3, 0, PadMode::Uniform);
        assert_eq!(entropy(&[&m.w(0)]).unwrap(), 2);
        assert_eq!(entropy(&[]).unwrap(), 0);
        let a = m.x(1);
        assert_eq!(cond_entropy(&[&a], &[&a]).unwrap(), 0);
        assert_eq!(cond_entropy(&[&m.x(0)], &[&m.w(0), &m.z(0)]).unwrap(), 0);
        let b = m.y(2, &SurvivorSet::all(4));
        assert_eq!(mutual_info(&[&a], &[&b], &[&a, &b]).unwrap(), 0);
    }

    #[test]
    fn key_entropy_accounting() {
        for (k, u, t) in [(4, 3, 0), (4, 3, 1), (6, 4, 2)] {
            let (_, m) = model(k, u, t, PadMode::Uniform);
            assert_eq!(entropy(&[&m.n(0)]).unwrap(), u - t - 1);
            assert_eq!(entropy(&[&m.s(0)]).unwrap(), t + 1);
            assert_eq!(entropy(&[&m.all_keys()]).unwrap(), k * u);
            let zs: Vec<_> = (0..k).map(|i| m.z(i)).collect();
            assert_eq!(entropy(&refs(&zs)).unwrap(), k * u);
        }
    }

    #[test]
    fn observables_agree_with_concrete_values() {
        let (alpha, m) = model(5, 3, 1, PadMode::Uniform);
        let f = alpha.field();
        let mut rng = rng_from_seed(99);
        let keys = deal_keys(5, 3, 1, &alpha, &mut rng).unwrap();
        let inputs: Vec<_> = (0..5).map(|_| f.sample_uniform(&mut rng, 1)).collect();
        let seed = m.layout().assemble(&inputs, &keys).unwrap();
        for (k, w) in inputs.iter().enumerate() {
            let x = m.x(k).evaluate(&seed).unwrap();
            assert_eq!(x, w.try_add(keys.mask(k)).unwrap());
            for i in 0..5 {
                let q = m.projection(i, k).evaluate(&seed).unwrap();
                assert_eq!(q.values(), &[keys.projection(i, k).value()]);
            }
        }
    }

    #[test]
    fn layout_mismatch_is_reported() {
        let (_, a) = model(4, 3, 0, PadMode::Uniform);
        let (_, b) = model(5, 3, 0, PadMode::Uniform);
        assert!(matches!(
            entropy(&[&a.w(0), &b.w(0)]),
            Err(EntropyError::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn security_check_preconditions() {
        let (_, m) = model(4, 3, 1, PadMode::Uniform);
        let u1 = SurvivorSet::all(4);
        assert!(m.security_check(0, &[0], &u1).is_err());
        assert!(m.security_check(0, &[1, 2], &u1).is_err());
        assert!(m
            .security_check(0, &[], &SurvivorSet::new(4, [0, 1]).unwrap())
            .is_err());
        assert!(m.security_check(7, &[], &u1).is_err());
        assert!(m.security_check(0, &[2], &u1).unwrap().is_pass());
    }

    #[test]
    fn underdetermined_decoder_is_flagged() {
        let (_, m) = model(5, 3, 1, PadMode::Uniform);
        let u1 = SurvivorSet::all(5);
        let u2 = SurvivorSet::new(5, [0, 1]).unwrap();
        let out = m.correctness_check(0, &u1, &u2).unwrap();
        assert!(!out.is_pass());
        assert!(out.value() > 0);
        let ok = SurvivorSet::new(5, [0, 1, 4]).unwrap();
        assert!(m.correctness_check(0, &u1, &ok).unwrap().is_pass());
    }

    #[test]
    fn zero_pads_leak_under_collusion() {
        let (_, m) = model(4, 3, 1, PadMode::Zeroed);
        let u1 = SurvivorSet::all(4);
        let out = m.security_check(0, &[2], &u1).unwrap();
        assert!(out.value() > 0, "{out:?}");
    }

    #[test]
    fn case_enumeration_counts() {
        // K=4, U=3, T=1: 4 adversaries × (1 + 3) collusion sets × 5 survivor sets
        assert_eq!(survivor_sets(4, 3).len(), 5);
        assert_eq!(all_security_cases(4, 3, 1).len(), 4 * 4 * 5);
        assert_eq!(all_security_cases(4, 3, 0).len(), 4 * 5);
        let sampled = sample_security_cases(8, 5, 2, 50, &mut rng_from_seed(3));
        assert_eq!(sampled.len(), 50);
        for c in sampled {
            assert!(c.collusion.len() <= 2 && !c.collusion.contains(&c.u) && c.u1.len() >= 5);
        }
    }
}
