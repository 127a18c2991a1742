//! Deterministic broadcast simulator.
//!
//! A run deals keys, lets every user broadcast in round 1, drops the users
//! outside `U₁`, runs round 2 among `U₁`, delivers round-2 messages only from
//! `U₂`, and decodes at every member of `U₂`. Survivor sets come from the
//! schedule; the simulator does not model how users detect dropouts.

use std::time::Instant;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::{
    all_security_cases, sample_security_cases, CheckOutcome, EntropyError, PadMode, SchemeModel,
    SecurityCase, ViolationReport,
};
use crate::field::{derive_seed, rng_from_seed, FieldError, FieldVector};
use crate::keys::{deal_keys_with, DealMode, KeyError, KeyMaterial};
use crate::mds::{MatrixFile, MdsError, PrivateMdsMatrix};
use crate::protocol::{
    decode, decode_verified, round1_encode, round2_encode, DecoderView, ProtocolError,
    ProtocolParams, Rate, Round1Message, Round2Message, SurvivorSet,
};

pub const TRANSCRIPT_SCHEMA: &str = "dsa-transcript/v1";
pub const REPORT_SCHEMA: &str = "dsa-sweep-report/v1";

/// Above this many users the security sweep samples instead of enumerating.
pub const EXHAUSTIVE_SECURITY_MAX_USERS: usize = 6;
pub const SAMPLED_SECURITY_CASES: usize = 1000;

/// Failure details kept in a report; counts are always complete.
const MAX_RECORDED_FAILURES: usize = 20;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Mds(#[from] MdsError),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("matrix fingerprint mismatch: transcript references {expected}, found {found}")]
    MatrixMismatch { expected: String, found: String },
    #[error("malformed transcript: {0}")]
    Transcript(String),
}

/// Round-1 and round-2 survivor sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DropoutSchedule {
    pub u1: SurvivorSet,
    pub u2: SurvivorSet,
}

impl DropoutSchedule {
    pub fn new(
        params: &ProtocolParams,
        u1: SurvivorSet,
        u2: SurvivorSet,
    ) -> Result<Self, SimError> {
        let s = Self { u1, u2 };
        s.validate(params)?;
        Ok(s)
    }

    pub fn no_dropouts(params: &ProtocolParams) -> Self {
        let all = SurvivorSet::all(params.users());
        Self {
            u1: all.clone(),
            u2: all,
        }
    }

    pub fn validate(&self, params: &ProtocolParams) -> Result<(), SimError> {
        let k = params.users();
        if let Some(bad) = self.u1.iter().find(|&i| i >= k) {
            return Err(SimError::InvalidSchedule(format!(
                "user {bad} out of range for K = {k}"
            )));
        }
        if !self.u2.is_subset_of(&self.u1) {
            return Err(SimError::InvalidSchedule(format!(
                "U2 = {} is not a subset of U1 = {}",
                self.u2, self.u1
            )));
        }
        if self.u2.len() < params.threshold() {
            return Err(SimError::InvalidSchedule(format!(
                "|U2| = {} is below U = {}",
                self.u2.len(),
                params.threshold()
            )));
        }
        Ok(())
    }
}

/// Every valid `(U₁, U₂)` pair.
pub fn enumerate_schedules(params: &ProtocolParams) -> Vec<DropoutSchedule> {
    let k = params.users();
    let u = params.threshold();
    let mut out = Vec::new();
    for size1 in u..=k {
        for u1 in (0..k).combinations(size1) {
            for size2 in u..=size1 {
                for u2 in u1.iter().copied().combinations(size2) {
                    out.push(DropoutSchedule {
                        u1: SurvivorSet::new(k, u1.iter().copied()).expect("valid ids"),
                        u2: SurvivorSet::new(k, u2).expect("valid ids"),
                    });
                }
            }
        }
    }
    out
}

/// `count` schedules drawn at random (sizes uniform, members uniform).
pub fn sample_schedules(params: &ProtocolParams, count: usize, seed: u64) -> Vec<DropoutSchedule> {
    let k = params.users();
    let u = params.threshold();
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let mut ids: Vec<usize> = (0..k).collect();
            ids.shuffle(&mut rng);
            let size1 = rng.gen_range(u..=k);
            let u1: Vec<usize> = ids[..size1].to_vec();
            let size2 = rng.gen_range(u..=size1);
            let mut pick = u1.clone();
            pick.shuffle(&mut rng);
            DropoutSchedule {
                u1: SurvivorSet::new(k, u1).expect("valid ids"),
                u2: SurvivorSet::new(k, pick[..size2].iter().copied()).expect("valid ids"),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyModeTag {
    #[default]
    Uniform,
    ZeroPads,
    AllZero,
}

impl From<DealMode> for KeyModeTag {
    fn from(m: DealMode) -> Self {
        match m {
            DealMode::Uniform => Self::Uniform,
            DealMode::ZeroPads => Self::ZeroPads,
            DealMode::AllZero => Self::AllZero,
        }
    }
}

impl From<KeyModeTag> for DealMode {
    fn from(m: KeyModeTag) -> Self {
        match m {
            KeyModeTag::Uniform => Self::Uniform,
            KeyModeTag::ZeroPads => Self::ZeroPads,
            KeyModeTag::AllZero => Self::AllZero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XRecord {
    pub sender: usize,
    /// `L · blocks` symbols, block-major.
    pub x: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YRecord {
    pub sender: usize,
    pub survivors: SurvivorSet,
    /// One symbol per block.
    pub y: Vec<u64>,
    /// False for senders in `U₁ \ U₂`: sent but never received.
    pub delivered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedRecord {
    pub user: usize,
    pub sum: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockKeys {
    pub masks: Vec<Vec<u64>>,
    pub pads: Vec<Vec<u64>>,
}

/// Inputs and keys. Anyone holding this can read every user's input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptSecrets {
    pub secret_revealing: bool,
    /// Per user, `L · blocks` symbols.
    pub inputs: Vec<Vec<u64>>,
    pub keys: Vec<BlockKeys>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredRates {
    pub r1: Rate,
    pub r2: Rate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub schema: String,
    pub params: ProtocolParams,
    pub seed: u64,
    pub key_mode: KeyModeTag,
    pub u1: SurvivorSet,
    pub u2: SurvivorSet,
    pub x_messages: Vec<XRecord>,
    pub y_messages: Vec<YRecord>,
    pub decoded: Vec<DecodedRecord>,
    pub plaintext_sum: Vec<u64>,
    pub rates: MeasuredRates,
    pub matrix_ref: String,
    pub matrix: MatrixFile,
    pub secrets: Option<TranscriptSecrets>,
}

impl Transcript {
    /// True iff every decoder produced the plaintext sum.
    pub fn all_decoders_correct(&self) -> bool {
        self.decoded.iter().all(|d| d.sum == self.plaintext_sum)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn reduced(num: usize, den: usize) -> Rate {
    let g = gcd(num, den).max(1);
    Rate::new(num / g, den / g)
}

struct BlockRun {
    keys: KeyMaterial,
    inputs: Vec<FieldVector>,
    r1: Vec<Round1Message>,
    r2: Vec<Round2Message>,
}

/// Runs one protocol instance (all blocks) under `schedule`.
pub fn run_instance(
    params: &ProtocolParams,
    alpha: &PrivateMdsMatrix,
    schedule: &DropoutSchedule,
    seed: u64,
    mode: DealMode,
) -> Result<Transcript, SimError> {
    params.check_matrix(alpha)?;
    schedule.validate(params)?;
    let f = params.field();
    let (k, u, t, l) = (
        params.users(),
        params.threshold(),
        params.collusion(),
        params.block_len(),
    );
    let mut input_rng = rng_from_seed(derive_seed(seed, 0));
    let mut key_rng = rng_from_seed(derive_seed(seed, 1));
    let (u1, u2) = (&schedule.u1, &schedule.u2);

    let mut blocks = Vec::with_capacity(params.blocks());
    for _ in 0..params.blocks() {
        let keys = deal_keys_with(k, u, t, alpha, &mut key_rng, mode)?;
        let inputs: Vec<FieldVector> = (0..k)
            .map(|_| f.sample_uniform(&mut input_rng, l))
            .collect();
        let bundles = (0..k)
            .map(|i| keys.bundle_for(i))
            .collect::<Result<Vec<_>, _>>()?;
        // every user transmits in round 1; only U1 is heard
        let r1 = u1
            .iter()
            .map(|i| round1_encode(&inputs[i], &bundles[i]))
            .collect::<Result<Vec<_>, _>>()?;
        let r2 = u1
            .iter()
            .map(|i| round2_encode(params, &bundles[i], u1))
            .collect::<Result<Vec<_>, _>>()?;
        blocks.push(BlockRun {
            keys,
            inputs,
            r1,
            r2,
        });
    }

    let mut decoded = Vec::with_capacity(u2.len());
    for user in u2.iter() {
        let mut sum = Vec::with_capacity(l * params.blocks());
        for b in &blocks {
            let bundle = b.keys.bundle_for(user)?;
            let heard_r1: Vec<Round1Message> =
                b.r1.iter().filter(|m| m.sender != user).cloned().collect();
            let heard_r2: Vec<Round2Message> =
                b.r2.iter()
                    .filter(|m| m.sender != user && u2.contains(m.sender))
                    .cloned()
                    .collect();
            let view = DecoderView {
                user,
                input: &b.inputs[user],
                bundle: &bundle,
                round1: &heard_r1,
                round2: &heard_r2,
                u1,
                u2,
            };
            sum.extend_from_slice(decode(params, alpha, &view)?.values());
        }
        decoded.push(DecodedRecord { user, sum });
    }

    let mut plaintext_sum = Vec::with_capacity(l * params.blocks());
    for b in &blocks {
        let mut acc = FieldVector::zeros(f, l);
        for i in u1.iter() {
            acc.add_assign(&b.inputs[i])?;
        }
        plaintext_sum.extend_from_slice(acc.values());
    }

    let x_messages = u1
        .iter()
        .enumerate()
        .map(|(pos, sender)| XRecord {
            sender,
            x: blocks
                .iter()
                .flat_map(|b| b.r1[pos].x.values().to_vec())
                .collect(),
        })
        .collect::<Vec<_>>();
    let y_messages = u1
        .iter()
        .enumerate()
        .map(|(pos, sender)| YRecord {
            sender,
            survivors: u1.clone(),
            y: blocks.iter().map(|b| b.r2[pos].y.value()).collect(),
            delivered: u2.contains(sender),
        })
        .collect::<Vec<_>>();

    let symbols_in = l * params.blocks();
    let rates = MeasuredRates {
        r1: reduced(x_messages.first().map_or(0, |m| m.x.len()), symbols_in),
        r2: reduced(y_messages.first().map_or(0, |m| m.y.len()), symbols_in),
    };

    let secrets = TranscriptSecrets {
        secret_revealing: true,
        inputs: (0..k)
            .map(|i| {
                blocks
                    .iter()
                    .flat_map(|b| b.inputs[i].values().to_vec())
                    .collect()
            })
            .collect(),
        keys: blocks
            .iter()
            .map(|b| BlockKeys {
                masks: b.keys.masks().iter().map(|v| v.values().to_vec()).collect(),
                pads: b.keys.pads().iter().map(|v| v.values().to_vec()).collect(),
            })
            .collect(),
    };

    Ok(Transcript {
        schema: TRANSCRIPT_SCHEMA.to_string(),
        params: *params,
        seed,
        key_mode: mode.into(),
        u1: u1.clone(),
        u2: u2.clone(),
        x_messages,
        y_messages,
        decoded,
        plaintext_sum,
        rates,
        matrix_ref: alpha.fingerprint(),
        matrix: alpha.to_file(),
        secrets: Some(secrets),
    })
}

/// Outcome of re-verifying a stored transcript.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub decoders_checked: usize,
    pub decode_mismatches: Vec<String>,
    pub message_inconsistencies: Vec<String>,
    pub plaintext_mismatch: bool,
    pub rate_mismatch: bool,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.decode_mismatches.is_empty()
            && self.message_inconsistencies.is_empty()
            && !self.plaintext_mismatch
            && !self.rate_mismatch
    }
}

fn block_slice(values: &[u64], block: usize, len: usize) -> Result<&[u64], SimError> {
    values
        .get(block * len..(block + 1) * len)
        .ok_or_else(|| SimError::Transcript(format!("missing data for block {block}")))
}

/// Re-derives every decode from the stored messages and secrets.
///
/// Refuses transcripts whose embedded matrix does not hash to `matrix_ref`,
/// or (when `pinned` is given) does not equal the pinned matrix.
pub fn replay(
    transcript: &Transcript,
    pinned: Option<&PrivateMdsMatrix>,
) -> Result<ReplayReport, SimError> {
    if transcript.schema != TRANSCRIPT_SCHEMA {
        return Err(SimError::Transcript(format!(
            "unsupported schema {:?}",
            transcript.schema
        )));
    }
    let alpha = PrivateMdsMatrix::from_file(&transcript.matrix)?;
    let found = alpha.fingerprint();
    if found != transcript.matrix_ref {
        return Err(SimError::MatrixMismatch {
            expected: transcript.matrix_ref.clone(),
            found,
        });
    }
    if let Some(p) = pinned {
        if p.fingerprint() != transcript.matrix_ref {
            return Err(SimError::MatrixMismatch {
                expected: transcript.matrix_ref.clone(),
                found: p.fingerprint(),
            });
        }
    }
    let params = transcript.params;
    params.check_matrix(&alpha)?;
    let schedule = DropoutSchedule {
        u1: transcript.u1.clone(),
        u2: transcript.u2.clone(),
    };
    schedule.validate(&params)?;
    let secrets = transcript.secrets.as_ref().ok_or_else(|| {
        SimError::Transcript("no key material recorded; decoding cannot be re-verified".into())
    })?;
    let f = params.field();
    let (k, l) = (params.users(), params.block_len());
    if secrets.inputs.len() != k || secrets.keys.len() != params.blocks() {
        return Err(SimError::Transcript(
            "secret section has the wrong shape".into(),
        ));
    }

    let mut report = ReplayReport::default();
    let (expect_r1, expect_r2) = params.optimal_rates();
    report.rate_mismatch =
        !transcript.rates.r1.same_value(expect_r1) || !transcript.rates.r2.same_value(expect_r2);
    let symbols_in = l * params.blocks();
    for m in &transcript.x_messages {
        if !Rate::new(m.x.len(), symbols_in).same_value(expect_r1) {
            report.rate_mismatch = true;
        }
    }
    for m in &transcript.y_messages {
        if !Rate::new(m.y.len(), symbols_in).same_value(expect_r2) {
            report.rate_mismatch = true;
        }
    }

    let mut plaintext = Vec::with_capacity(symbols_in);
    let mut decoded: Vec<Vec<u64>> = vec![Vec::new(); transcript.decoded.len()];
    for block in 0..params.blocks() {
        let bk = &secrets.keys[block];
        let to_vecs = |rows: &[Vec<u64>]| -> Vec<FieldVector> {
            rows.iter()
                .map(|r| FieldVector::from_values(f, r.iter().copied()))
                .collect()
        };
        let keys = KeyMaterial::from_parts(&alpha, to_vecs(&bk.masks), to_vecs(&bk.pads))?;
        let inputs = secrets
            .inputs
            .iter()
            .map(|w| {
                Ok(FieldVector::from_values(
                    f,
                    block_slice(w, block, l)?.iter().copied(),
                ))
            })
            .collect::<Result<Vec<_>, SimError>>()?;

        let mut acc = FieldVector::zeros(f, l);
        for i in schedule.u1.iter() {
            acc.add_assign(&inputs[i])?;
        }
        plaintext.extend_from_slice(acc.values());

        let mut r1 = Vec::new();
        for m in &transcript.x_messages {
            if m.sender >= k {
                return Err(SimError::Transcript(format!(
                    "sender {} out of range",
                    m.sender
                )));
            }
            let x = FieldVector::from_values(f, block_slice(&m.x, block, l)?.iter().copied());
            let expected = inputs[m.sender].try_add(keys.mask(m.sender))?;
            if x != expected {
                report.message_inconsistencies.push(format!(
                    "block {block}: X from user {} does not match W + N",
                    m.sender
                ));
            }
            r1.push(Round1Message {
                sender: m.sender,
                x,
            });
        }
        let mut r2 = Vec::new();
        for m in &transcript.y_messages {
            if m.sender >= k {
                return Err(SimError::Transcript(format!(
                    "sender {} out of range",
                    m.sender
                )));
            }
            let y = f.elem(*block_slice(&m.y, block, 1)?.first().expect("one symbol"));
            let bundle = keys.bundle_for(m.sender)?;
            let expected = round2_encode(&params, &bundle, &m.survivors)?.y;
            if y != expected {
                report.message_inconsistencies.push(format!(
                    "block {block}: Y from user {} does not match its keys",
                    m.sender
                ));
            }
            if m.delivered {
                r2.push(Round2Message {
                    sender: m.sender,
                    survivors: m.survivors.clone(),
                    y,
                });
            }
        }

        for (slot, rec) in transcript.decoded.iter().enumerate() {
            if !schedule.u2.contains(rec.user) {
                report
                    .decode_mismatches
                    .push(format!("user {} decoded but is not in U2", rec.user));
                continue;
            }
            let bundle = keys.bundle_for(rec.user)?;
            let heard_r1: Vec<_> = r1
                .iter()
                .filter(|m| m.sender != rec.user)
                .cloned()
                .collect();
            let heard_r2: Vec<_> = r2
                .iter()
                .filter(|m| m.sender != rec.user)
                .cloned()
                .collect();
            let view = DecoderView {
                user: rec.user,
                input: &inputs[rec.user],
                bundle: &bundle,
                round1: &heard_r1,
                round2: &heard_r2,
                u1: &schedule.u1,
                u2: &schedule.u2,
            };
            match decode_verified(&params, &alpha, &view) {
                Ok(sum) => decoded[slot].extend_from_slice(sum.values()),
                Err(e) => report.decode_mismatches.push(format!(
                    "block {block}: user {} failed to decode: {e}",
                    rec.user
                )),
            }
        }
    }

    report.decoders_checked = transcript.decoded.len();
    report.plaintext_mismatch = plaintext != transcript.plaintext_sum;
    let decoders: Vec<usize> = transcript.decoded.iter().map(|d| d.user).collect();
    if decoders != schedule.u2.ids() {
        report.decode_mismatches.push(format!(
            "decoders {decoders:?} differ from U2 = {}",
            schedule.u2
        ));
    }
    for (rec, fresh) in transcript.decoded.iter().zip(&decoded) {
        if fresh.len() == symbols_in && *fresh != rec.sum {
            report.decode_mismatches.push(format!(
                "user {}: recorded sum differs from re-decoded sum",
                rec.user
            ));
        }
        if *fresh != plaintext {
            report.decode_mismatches.push(format!(
                "user {}: re-decoded sum differs from the plaintext sum",
                rec.user
            ));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Correctness,
    Security,
    Both,
}

impl SweepMode {
    fn correctness(self) -> bool {
        matches!(self, Self::Correctness | Self::Both)
    }

    fn security(self) -> bool {
        matches!(self, Self::Security | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: String,
    pub params: ProtocolParams,
    pub mode: SweepMode,
    pub broken_pads: bool,
    pub matrix_ref: String,
    pub master_seed: u64,
    pub schedules_tested: usize,
    pub seeds: Vec<u64>,
    pub instances_run: usize,
    pub decodes_checked: usize,
    pub correctness_failures: usize,
    pub rank_correctness_checks: usize,
    pub rank_correctness_failures: usize,
    pub security_cases: usize,
    pub security_exhaustive: bool,
    pub security_violations: usize,
    pub max_mi: i64,
    pub r1: f64,
    pub r2: f64,
    pub r1_exact: Option<Rate>,
    pub r2_exact: Option<Rate>,
    pub rate_failures: usize,
    pub failures: Vec<String>,
    pub violations: Vec<ViolationReport>,
    pub wall_time_ms: u128,
}

impl SweepReport {
    /// True iff nothing failed and no leakage was found.
    pub fn passed(&self) -> bool {
        self.correctness_failures == 0
            && self.rank_correctness_failures == 0
            && self.security_violations == 0
            && self.rate_failures == 0
            && self.max_mi == 0
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub mode: SweepMode,
    /// Fault injection: pads forced to zero in both the runs and the model.
    pub broken_pads: bool,
    /// Seeds the security-case sampler and is echoed into the report.
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub schedules: Vec<DropoutSchedule>,
}

#[derive(Default)]
struct InstanceTally {
    decodes: usize,
    failures: Vec<String>,
    rate_failure: bool,
    rates: Option<MeasuredRates>,
}

fn run_and_tally(
    params: &ProtocolParams,
    alpha: &PrivateMdsMatrix,
    schedule: &DropoutSchedule,
    seed: u64,
    mode: DealMode,
) -> InstanceTally {
    let mut tally = InstanceTally::default();
    match run_instance(params, alpha, schedule, seed, mode) {
        Ok(tr) => {
            tally.decodes = tr.decoded.len();
            for d in &tr.decoded {
                if d.sum != tr.plaintext_sum {
                    tally.failures.push(format!(
                        "seed {seed}, U1 = {}, U2 = {}: user {} decoded a wrong sum",
                        schedule.u1, schedule.u2, d.user
                    ));
                }
            }
            let (r1, r2) = params.optimal_rates();
            tally.rate_failure = !tr.rates.r1.same_value(r1) || !tr.rates.r2.same_value(r2);
            tally.rates = Some(tr.rates);
        }
        Err(e) => {
            tally.decodes = schedule.u2.len();
            tally.failures.push(format!(
                "seed {seed}, U1 = {}, U2 = {}: {e}",
                schedule.u1, schedule.u2
            ));
        }
    }
    tally
}

/// Runs every `(seed, schedule)` pair and/or every security case.
pub fn sweep(
    params: &ProtocolParams,
    alpha: &PrivateMdsMatrix,
    config: &SweepConfig,
) -> Result<SweepReport, SimError> {
    let start = Instant::now();
    params.check_matrix(alpha)?;
    for s in &config.schedules {
        s.validate(params)?;
    }
    let deal_mode = if config.broken_pads {
        DealMode::ZeroPads
    } else {
        DealMode::Uniform
    };
    let pad_mode = if config.broken_pads {
        PadMode::Zeroed
    } else {
        PadMode::Uniform
    };
    let model = SchemeModel::new(alpha, pad_mode);

    let mut report = SweepReport {
        schema: REPORT_SCHEMA.to_string(),
        params: *params,
        mode: config.mode,
        broken_pads: config.broken_pads,
        matrix_ref: alpha.fingerprint(),
        master_seed: config.master_seed,
        schedules_tested: config.schedules.len(),
        seeds: config.seeds.clone(),
        instances_run: 0,
        decodes_checked: 0,
        correctness_failures: 0,
        rank_correctness_checks: 0,
        rank_correctness_failures: 0,
        security_cases: 0,
        security_exhaustive: false,
        security_violations: 0,
        max_mi: 0,
        r1: 0.0,
        r2: 0.0,
        r1_exact: None,
        r2_exact: None,
        rate_failures: 0,
        failures: Vec::new(),
        violations: Vec::new(),
        wall_time_ms: 0,
    };

    if config.mode.correctness() {
        let jobs: Vec<(u64, &DropoutSchedule)> = config
            .seeds
            .iter()
            .flat_map(|&seed| config.schedules.iter().map(move |s| (seed, s)))
            .collect();
        let tallies: Vec<InstanceTally> = jobs
            .par_iter()
            .map(|&(seed, s)| run_and_tally(params, alpha, s, seed, deal_mode))
            .collect();
        report.instances_run = tallies.len();
        for t in tallies {
            report.decodes_checked += t.decodes;
            report.correctness_failures += t.failures.len();
            report.rate_failures += usize::from(t.rate_failure);
            for f in t.failures {
                if report.failures.len() < MAX_RECORDED_FAILURES {
                    report.failures.push(f);
                }
            }
            if let Some(r) = t.rates {
                match (report.r1_exact, report.r2_exact) {
                    (None, None) => {
                        report.r1_exact = Some(r.r1);
                        report.r2_exact = Some(r.r2);
                    }
                    (Some(a), Some(b)) if !(a.same_value(r.r1) && b.same_value(r.r2)) => {
                        report.rate_failures += 1;
                    }
                    _ => {}
                }
            }
        }

        // Structural check: rank of the decoder view, once per (U1, U2, u).
        let rank_jobs: Vec<(usize, &DropoutSchedule)> = config
            .schedules
            .iter()
            .unique()
            .flat_map(|s| s.u2.iter().map(move |u| (u, s)))
            .collect();
        let outcomes = rank_jobs
            .par_iter()
            .map(|&(u, s)| model.correctness_check(u, &s.u1, &s.u2))
            .collect::<Result<Vec<_>, _>>()?;
        report.rank_correctness_checks = outcomes.len();
        for o in outcomes {
            if let CheckOutcome::Violation(v) = o {
                report.rank_correctness_failures += 1;
                if report.violations.len() < MAX_RECORDED_FAILURES {
                    report.violations.push(*v);
                }
            }
        }
    }

    if config.mode.security() {
        let k = params.users();
        let exhaustive = k <= EXHAUSTIVE_SECURITY_MAX_USERS;
        let cases: Vec<SecurityCase> = if exhaustive {
            all_security_cases(k, params.threshold(), params.collusion())
        } else {
            sample_security_cases(
                k,
                params.threshold(),
                params.collusion(),
                SAMPLED_SECURITY_CASES,
                &mut rng_from_seed(derive_seed(config.master_seed, 2)),
            )
        };
        let outcomes = cases
            .par_iter()
            .map(|c| model.security_check(c.u, &c.collusion, &c.u1))
            .collect::<Result<Vec<_>, _>>()?;
        report.security_cases = outcomes.len();
        report.security_exhaustive = exhaustive;
        for o in outcomes {
            report.max_mi = report.max_mi.max(o.value());
            if let CheckOutcome::Violation(v) = o {
                report.security_violations += 1;
                if report.violations.len() < MAX_RECORDED_FAILURES {
                    report.violations.push(*v);
                }
            }
        }
    }

    report.r1 = report.r1_exact.map_or(0.0, Rate::as_f64);
    report.r2 = report.r2_exact.map_or(0.0, Rate::as_f64);
    report.wall_time_ms = start.elapsed().as_millis();
    Ok(report)
}

/// `count` instance seeds derived from one master seed.
pub fn instance_seeds(master: u64, count: usize) -> Vec<u64> {
    (0..count as u64)
        .map(|i| derive_seed(master, 1000 + i))
        .collect()
}
