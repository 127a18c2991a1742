//! Key-projection codes: MDS matrices whose bottom rows are themselves MDS.
//!
//! A `U x K` matrix is MDS when every `U x U` column minor is nonsingular.
//! It is `(T+1)`-private when, in addition, its last `T+1` rows form an MDS
//! matrix. Rows are ordered so the first `U-T-1` rows multiply the mask block
//! `N_i` and the last `T+1` rows multiply the pad block `S_i`.
//!
//! Certification always enumerates every minor; nothing is sampled.

use itertools::Itertools;
use rand::seq::index;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{FieldError, FieldVector, PrimeField};
use crate::linalg::{FieldMatrix, LinalgError};

/// Upper bound on the number of minors a single certification may enumerate.
pub const MAX_MINORS: u128 = 1_000_000;

/// Random point sets tried by [`find_private_mds`] before giving up.
pub const SEARCH_ATTEMPTS: usize = 1000;

pub const MATRIX_SCHEMA: &str = "dsa-matrix/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MdsError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid evaluation points: {0}")]
    InvalidPoints(String),
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("C({cols}, {rows}) = {count} minors exceeds the certification budget of {MAX_MINORS}")]
    TooManyMinors {
        rows: usize,
        cols: usize,
        count: u128,
    },
    #[error(
        "field too small: no (T+1)-private MDS matrix found for K={k}, U={u}, T={t} over F_{q} ({reason})"
    )]
    FieldTooSmall {
        k: usize,
        u: usize,
        t: usize,
        q: u64,
        reason: String,
    },
    #[error("matrix failed certification: {0}")]
    NotCertified(String),
    #[error("malformed matrix file: {0}")]
    Format(String),
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Vandermonde matrix with entry `(j, k) = betas[k]^j` for `j` in `0..u`.
///
/// Column `k` is `(1, β_k, β_k², …)`. Points must be distinct and nonzero.
pub fn build_vandermonde(u: usize, betas: &FieldVector) -> Result<FieldMatrix, MdsError> {
    let k = betas.len();
    if u > k {
        return Err(MdsError::Usage(format!(
            "Vandermonde with {u} rows needs at least {u} points, got {k}"
        )));
    }
    check_points(betas.values())?;
    let f = betas.field();
    Ok(FieldMatrix::from_fn(f, u, k, |j, c| {
        f.pow_raw(betas.values()[c], j as u64)
    }))
}

/// Matrix with entry `(j, c) = bases[j]^c`, i.e. column `c` is
/// `(bases[0]^c, bases[1]^c, …)`. With bases `(1, 2, 3)` column `c` is
/// `(1, 2^c, 3^c)`.
pub fn build_power_rows(field: PrimeField, bases: &[u64], k: usize) -> FieldMatrix {
    FieldMatrix::from_fn(field, bases.len(), k, |j, c| {
        field.pow_raw(bases[j], c as u64)
    })
}

fn check_points(points: &[u64]) -> Result<(), MdsError> {
    if points.contains(&0) {
        return Err(MdsError::InvalidPoints("zero is not allowed".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(MdsError::InvalidPoints(format!("duplicate point {}", w[0])));
    }
    Ok(())
}

fn check_minor_budget(rows: usize, cols: usize) -> Result<(), MdsError> {
    let count = binomial(cols, rows);
    if count > MAX_MINORS {
        return Err(MdsError::TooManyMinors { rows, cols, count });
    }
    Ok(())
}

/// True iff every `rows x rows` column minor of `m` is nonsingular.
pub fn is_mds(m: &FieldMatrix) -> Result<bool, MdsError> {
    if m.rows() > m.cols() {
        return Err(MdsError::Usage(format!(
            "MDS check needs rows <= cols, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    check_minor_budget(m.rows(), m.cols())?;
    let all_rows: Vec<usize> = (0..m.rows()).collect();
    for cols in (0..m.cols()).combinations(m.rows()) {
        if !m.submatrix(&all_rows, &cols)?.is_nonsingular()? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff the last `t_plus_1` rows of `m` form an MDS matrix.
pub fn is_t_private(m: &FieldMatrix, t_plus_1: usize) -> Result<bool, MdsError> {
    if t_plus_1 == 0 || t_plus_1 > m.rows() {
        return Err(MdsError::Usage(format!(
            "privacy level {t_plus_1} must be in 1..={}",
            m.rows()
        )));
    }
    let rows: Vec<usize> = (m.rows() - t_plus_1..m.rows()).collect();
    let cols: Vec<usize> = (0..m.cols()).collect();
    is_mds(&m.submatrix(&rows, &cols)?)
}

/// A `U x K` matrix certified MDS and `(T+1)`-private.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivateMdsMatrix {
    alpha: FieldMatrix,
    /// Column points when `alpha` is a column Vandermonde matrix; empty otherwise.
    eval_points: Vec<u64>,
    t_privacy: usize,
}

impl PrivateMdsMatrix {
    /// Runs the full certification and wraps `alpha` on success.
    pub fn certify(
        alpha: FieldMatrix,
        eval_points: Vec<u64>,
        t_privacy: usize,
    ) -> Result<Self, MdsError> {
        if alpha.rows() >= alpha.cols() {
            return Err(MdsError::Usage(format!(
                "key-projection matrix must have U < K, got {}x{}",
                alpha.rows(),
                alpha.cols()
            )));
        }
        if !eval_points.is_empty() && eval_points.len() != alpha.cols() {
            return Err(MdsError::InvalidPoints(format!(
                "{} points for {} columns",
                eval_points.len(),
                alpha.cols()
            )));
        }
        if !is_mds(&alpha)? {
            return Err(MdsError::NotCertified(
                "some U x U column minor is singular".into(),
            ));
        }
        if !is_t_private(&alpha, t_privacy)? {
            return Err(MdsError::NotCertified(format!(
                "bottom {t_privacy} rows are not MDS"
            )));
        }
        Ok(Self {
            alpha,
            eval_points,
            t_privacy,
        })
    }

    /// Certified column Vandermonde matrix on the given points.
    pub fn vandermonde(u: usize, t: usize, betas: &FieldVector) -> Result<Self, MdsError> {
        let alpha = build_vandermonde(u, betas)?;
        Self::certify(alpha, betas.values().to_vec(), t + 1)
    }

    /// Certified matrix whose column `c` is `(bases[j]^c)_j`.
    pub fn power_rows(
        field: PrimeField,
        bases: &[u64],
        k: usize,
        t: usize,
    ) -> Result<Self, MdsError> {
        Self::certify(build_power_rows(field, bases, k), Vec::new(), t + 1)
    }

    pub fn alpha(&self) -> &FieldMatrix {
        &self.alpha
    }

    pub fn field(&self) -> PrimeField {
        self.alpha.field()
    }

    pub fn eval_points(&self) -> &[u64] {
        &self.eval_points
    }

    /// `T + 1`.
    pub fn t_privacy(&self) -> usize {
        self.t_privacy
    }

    /// Number of users `K`.
    pub fn users(&self) -> usize {
        self.alpha.cols()
    }

    /// Survivor threshold `U`.
    pub fn threshold(&self) -> usize {
        self.alpha.rows()
    }

    pub fn collusion_bound(&self) -> usize {
        self.t_privacy - 1
    }

    /// Length of the mask block, `U - T - 1`.
    pub fn mask_len(&self) -> usize {
        self.threshold() - self.t_privacy
    }

    /// Re-checks every minor from scratch.
    pub fn recertify(&self) -> Result<(), MdsError> {
        Self::certify(self.alpha.clone(), self.eval_points.clone(), self.t_privacy).map(|_| ())
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile {
            schema: MATRIX_SCHEMA.to_string(),
            q: self.field().modulus(),
            u: self.threshold(),
            k: self.users(),
            t: self.collusion_bound(),
            eval_points: self.eval_points.clone(),
            entries: self.alpha.row_major().to_vec(),
        }
    }

    /// Imports and re-certifies a matrix file.
    pub fn from_file(file: &MatrixFile) -> Result<Self, MdsError> {
        if file.schema != MATRIX_SCHEMA {
            return Err(MdsError::Format(format!(
                "unsupported schema {:?}",
                file.schema
            )));
        }
        let field = PrimeField::new(file.q)?;
        if let Some(&bad) = file.entries.iter().find(|&&e| e >= file.q) {
            return Err(MdsError::Format(format!(
                "entry {bad} is not reduced mod {}",
                file.q
            )));
        }
        let alpha = FieldMatrix::from_row_major(field, file.u, file.k, &file.entries)?;
        Self::certify(alpha, file.eval_points.clone(), file.t + 1)
    }

    /// SHA-256 over the modulus, shape, privacy level and entries.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(MATRIX_SCHEMA.as_bytes());
        for word in [
            self.field().modulus(),
            self.threshold() as u64,
            self.users() as u64,
            self.t_privacy as u64,
        ] {
            h.update(word.to_le_bytes());
        }
        for &e in self.alpha.row_major() {
            h.update(e.to_le_bytes());
        }
        format!("{:x}", h.finalize())
    }
}

/// On-disk form of a certified matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub schema: String,
    pub q: u64,
    #[serde(rename = "U")]
    pub u: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub eval_points: Vec<u64>,
    /// Row-major, `U * K` entries.
    pub entries: Vec<u64>,
}

/// Searches random distinct nonzero point sets for a certified
/// `(T+1)`-private MDS Vandermonde matrix.
pub fn find_private_mds<R: RngCore + ?Sized>(
    k: usize,
    u: usize,
    t: usize,
    field: PrimeField,
    rng: &mut R,
) -> Result<PrivateMdsMatrix, MdsError> {
    if u <= t + 1 {
        return Err(MdsError::Usage(format!("need U > T + 1, got U={u}, T={t}")));
    }
    if k <= u {
        return Err(MdsError::Usage(format!("need K > U, got K={k}, U={u}")));
    }
    check_minor_budget(u, k)?;
    let q = field.modulus();
    let nonzero = (q - 1) as usize;
    if nonzero < k {
        return Err(MdsError::FieldTooSmall {
            k,
            u,
            t,
            q,
            reason: format!("need {k} distinct nonzero points, F_{q} has only {nonzero}"),
        });
    }
    for _ in 0..SEARCH_ATTEMPTS {
        let mut points: Vec<u64> = index::sample(&mut RngAdapter(rng), nonzero, k)
            .into_iter()
            .map(|i| i as u64 + 1)
            .collect();
        points.sort_unstable();
        let betas = FieldVector::from_values(field, points);
        match PrivateMdsMatrix::vandermonde(u, t, &betas) {
            Ok(m) => return Ok(m),
            Err(MdsError::NotCertified(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(MdsError::FieldTooSmall {
        k,
        u,
        t,
        q,
        reason: format!("{SEARCH_ATTEMPTS} random point sets failed certification"),
    })
}

// `index::sample` wants a sized `Rng`.
struct RngAdapter<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rng_from_seed;

    fn field(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn single_row_vandermonde_is_all_ones() {
        let betas = FieldVector::from_values(field(11), [2, 5, 7]);
        let m = build_vandermonde(1, &betas).unwrap();
        assert_eq!(m.row_major(), &[1, 1, 1]);
    }

    #[test]
    fn vandermonde_columns_are_point_powers() {
        let f = field(11);
        let betas = FieldVector::from_values(f, [1, 2, 3, 4]);
        let m = build_vandermonde(3, &betas).unwrap();
        for c in 0..4u64 {
            let k = c + 1;
            assert_eq!(m.column(c as usize).values(), &[1, k, (k * k) % 11]);
        }
    }

    #[test]
    fn vandermonde_rejects_bad_points() {
        let f = field(11);
        let dup = FieldVector::from_values(f, [1, 2, 2, 4]);
        assert!(matches!(
            build_vandermonde(3, &dup),
            Err(MdsError::InvalidPoints(_))
        ));
        let zero = FieldVector::from_values(f, [0, 2, 3, 4]);
        assert!(matches!(
            build_vandermonde(3, &zero),
            Err(MdsError::InvalidPoints(_))
        ));
        // 12 reduces to 1, colliding with the first point
        let wrapped = FieldVector::from_values(f, [1, 12, 3]);
        assert!(matches!(
            build_vandermonde(2, &wrapped),
            Err(MdsError::InvalidPoints(_))
        ));
        assert!(matches!(
            build_vandermonde(4, &FieldVector::from_values(f, [1, 2, 3])),
            Err(MdsError::Usage(_))
        ));
    }

    #[test]
    fn power_rows_match_explicit_columns() {
        let f = field(65_537);
        let m = build_power_rows(f, &[1, 2, 3], 4);
        for c in 0..4u32 {
            assert_eq!(
                m.column(c as usize).values(),
                &[1, 2u64.pow(c), 3u64.pow(c)]
            );
        }
    }

    #[test]
    fn repeated_identity_is_not_mds() {
        let f = field(11);
        let m = FieldMatrix::from_rows(f, &[vec![1, 0, 1, 0], vec![0, 1, 0, 1]]).unwrap();
        assert!(!is_mds(&m).unwrap());
    }

    #[test]
    fn is_mds_requires_wide_matrix() {
        let m = FieldMatrix::identity(field(11), 3).transpose();
        assert!(is_mds(&m).unwrap());
        let tall = FieldMatrix::zeros(field(11), 3, 2);
        assert!(matches!(is_mds(&tall), Err(MdsError::Usage(_))));
    }

    #[test]
    fn t_private_edge_cases() {
        let f = field(11);
        let betas = FieldVector::from_values(f, [1, 2, 3, 4]);
        let m = build_vandermonde(3, &betas).unwrap();
        assert_eq!(is_t_private(&m, 3).unwrap(), is_mds(&m).unwrap());
        assert!(matches!(is_t_private(&m, 0), Err(MdsError::Usage(_))));
        assert!(matches!(is_t_private(&m, 4), Err(MdsError::Usage(_))));

        // last two rows identical all-ones rows: every 2x2 bottom minor is singular
        let bad =
            FieldMatrix::from_rows(f, &[vec![1, 2, 3, 4], vec![1, 1, 1, 1], vec![1, 1, 1, 1]])
                .unwrap();
        assert!(!is_t_private(&bad, 2).unwrap());
    }

    #[test]
    fn bottom_rows_of_power_matrix_are_private() {
        // 2x2 bottom minors (2^a 3^b - 2^b 3^a) for a < b in 0..4, checked directly
        let q = 65_537u64;
        let f = field(q);
        let m = build_power_rows(f, &[1, 2, 3], 4);
        for a in 0..4u32 {
            for b in a + 1..4u32 {
                let lhs = (2u64.pow(a) * 3u64.pow(b)) % q;
                let rhs = (2u64.pow(b) * 3u64.pow(a)) % q;
                assert_ne!(lhs, rhs);
            }
        }
        assert!(is_t_private(&m, 2).unwrap());
    }

    #[test]
    fn search_finds_certified_matrix() {
        let mut rng = rng_from_seed(1);
        let m = find_private_mds(4, 3, 0, field(11), &mut rng).unwrap();
        assert_eq!((m.threshold(), m.users(), m.t_privacy()), (3, 4, 1));
        m.recertify().unwrap();
        assert_eq!(m.eval_points().len(), 4);
    }

    #[test]
    fn search_is_deterministic() {
        let a = find_private_mds(5, 3, 1, field(101), &mut rng_from_seed(3)).unwrap();
        let b = find_private_mds(5, 3, 1, field(101), &mut rng_from_seed(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn search_fails_in_tiny_field() {
        let err = find_private_mds(4, 3, 1, field(2), &mut rng_from_seed(0)).unwrap_err();
        match err {
            MdsError::FieldTooSmall { k, u, t, q, .. } => assert_eq!((k, u, t, q), (4, 3, 1, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let msg = find_private_mds(4, 3, 1, field(2), &mut rng_from_seed(0))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("distinct nonzero points"), "{msg}");
    }

    #[test]
    fn search_rejects_infeasible_shapes() {
        let f = field(101);
        assert!(matches!(
            find_private_mds(4, 2, 1, f, &mut rng_from_seed(0)),
            Err(MdsError::Usage(_))
        ));
        assert!(matches!(
            find_private_mds(3, 3, 0, f, &mut rng_from_seed(0)),
            Err(MdsError::Usage(_))
        ));
    }

    #[test]
    fn minor_budget_is_enforced() {
        assert_eq!(binomial(4, 3), 4);
        assert_eq!(binomial(6, 4), 15);
        assert_eq!(binomial(3, 5), 0);
        assert!(matches!(
            find_private_mds(40, 20, 1, field(65_537), &mut rng_from_seed(0)),
            Err(MdsError::TooManyMinors { .. })
        ));
    }

    #[test]
    fn file_round_trip_and_rejection() {
        let m = find_private_mds(4, 3, 1, field(65_537), &mut rng_from_seed(8)).unwrap();
        let json = serde_json::to_string(&m.to_file()).unwrap();
        assert!(json.contains("\"U\":3") && json.contains("\"K\":4") && json.contains("\"T\":1"));
        let back: MatrixFile = serde_json::from_str(&json).unwrap();
        assert_eq!(PrivateMdsMatrix::from_file(&back).unwrap(), m);

        // duplicate column 0 into column 1
        let mut broken = m.to_file();
        for r in 0..3 {
            broken.entries[r * 4 + 1] = broken.entries[r * 4];
        }
        assert!(PrivateMdsMatrix::from_file(&broken).is_err());

        let mut wrong_schema = m.to_file();
        wrong_schema.schema = "other".into();
        assert!(matches!(
            PrivateMdsMatrix::from_file(&wrong_schema),
            Err(MdsError::Format(_))
        ));
    }

    #[test]
    fn certify_rejects_square_or_tall() {
        let f = field(11);
        assert!(matches!(
            PrivateMdsMatrix::certify(FieldMatrix::identity(f, 3), vec![], 1),
            Err(MdsError::Usage(_))
        ));
    }
}
