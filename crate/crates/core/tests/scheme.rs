use dsa_core::entropy::{
    cond_entropy, entropy, mutual_info, refs, LinearObservable, PadMode, SchemeModel,
};
use dsa_core::field::{rng_from_seed, FieldVector, PrimeField};
use dsa_core::keys::{deal_keys, DealMode};
use dsa_core::mds::{find_private_mds, PrivateMdsMatrix};
use dsa_core::protocol::{recover_key_sums, ProtocolParams, SurvivorSet};
use dsa_core::sim::{enumerate_schedules, run_instance, DropoutSchedule};
use itertools::Itertools;
use proptest::prelude::*;

const Q: u64 = 65_537;

fn matrix(k: usize, u: usize, t: usize, seed: u64) -> PrivateMdsMatrix {
    find_private_mds(
        k,
        u,
        t,
        PrimeField::new(Q).unwrap(),
        &mut rng_from_seed(seed),
    )
    .unwrap()
}

/// `{W_k, Z_k}` for `k` in `0..v0`.
fn prefix_side_info(m: &SchemeModel, v0: usize) -> Vec<LinearObservable> {
    (0..v0).flat_map(|k| [m.w(k), m.z(k)]).collect()
}

fn prefix(v: usize) -> Vec<usize> {
    (0..v).collect()
}

fn prefix_sum_mi(m: &SchemeModel, v0: usize, v1: usize, v2: usize) -> i64 {
    let a = m.sum_w(&prefix(v1));
    let b = m.sum_w(&prefix(v2));
    let side = prefix_side_info(m, v0);
    let mut rhs = vec![&b];
    rhs.extend(refs(&side));
    mutual_info(&[&a], &rhs, &[]).unwrap()
}

#[test]
fn prefix_sums_are_independent_for_every_triple() {
    for (k, u, t) in [(4, 3, 0), (4, 3, 1), (5, 3, 1), (6, 4, 2)] {
        let m = SchemeModel::new(&matrix(k, u, t, 3), PadMode::Uniform);
        for v0 in 0..k {
            for (v1, v2) in (v0 + 1..=k).cartesian_product(v0 + 1..=k) {
                if v1 != v2 {
                    assert_eq!(prefix_sum_mi(&m, v0, v1, v2), 0, "K={k} V=({v0},{v1},{v2})");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prefix_sums_are_independent_on_sampled_triples(
        (k, v0, v1, v2) in (5usize..8).prop_flat_map(|k| (Just(k), 0..k - 1))
            .prop_flat_map(|(k, v0)| (Just(k), Just(v0), v0 + 1..=k, v0 + 1..=k))
            .prop_filter("V1 != V2", |(_, _, a, b)| a != b),
        seed in 0u64..1000,
    ) {
        let m = SchemeModel::new(&matrix(k, 4, 1, seed), PadMode::Uniform);
        prop_assert_eq!(prefix_sum_mi(&m, v0, v1, v2), 0);
    }
}

#[test]
fn local_messages_are_determined_by_local_state() {
    let m = SchemeModel::new(&matrix(5, 3, 1, 1), PadMode::Uniform);
    let u1 = SurvivorSet::new(5, [0, 1, 2, 4]).unwrap();
    for k in 0..5 {
        let (w, z) = (m.w(k), m.z(k));
        assert_eq!(cond_entropy(&[&m.x(k)], &[&w, &z]).unwrap(), 0);
        assert_eq!(cond_entropy(&[&m.y(k, &u1)], &[&z]).unwrap(), 0);
        assert_eq!(entropy(&[&m.x(k)]).unwrap(), 1);
        // X_k alone reveals nothing about W_k
        assert_eq!(mutual_info(&[&m.x(k)], &[&w], &[]).unwrap(), 0);
    }
}

#[test]
fn any_u_equations_recover_the_same_key_sums() {
    let alpha = matrix(6, 4, 2, 5);
    let f = alpha.field();
    let keys = deal_keys(6, 4, 2, &alpha, &mut rng_from_seed(8)).unwrap();
    let u1 = [0usize, 2, 3, 4, 5];
    let ys: Vec<_> = (0..6)
        .map(|k| {
            let y = u1
                .iter()
                .fold(f.zero(), |acc, &i| acc + keys.projection(i, k));
            (k, y)
        })
        .collect();
    let mut expect = FieldVector::zeros(f, 4);
    for &i in &u1 {
        expect
            .add_assign(&keys.mask(i).concat(keys.pad(i)).unwrap())
            .unwrap();
    }
    for subset in ys.iter().copied().combinations(4) {
        assert_eq!(recover_key_sums(&alpha, &subset).unwrap(), expect);
    }
}

#[test]
fn every_schedule_decodes_for_every_survivor() {
    let params = ProtocolParams::new(5, 3, 1, Q, 2).unwrap();
    let alpha = matrix(5, 3, 1, 9);
    for (i, s) in enumerate_schedules(&params).iter().enumerate() {
        let tr = run_instance(&params, &alpha, s, i as u64, DealMode::Uniform).unwrap();
        assert_eq!(tr.decoded.len(), s.u2.len());
        assert!(tr.all_decoders_correct(), "schedule {s:?}");
    }
}

#[test]
fn transcripts_round_trip_through_json() {
    let params = ProtocolParams::new(4, 3, 1, Q, 1).unwrap();
    let alpha = matrix(4, 3, 1, 2);
    let s = DropoutSchedule::no_dropouts(&params);
    let tr = run_instance(&params, &alpha, &s, 77, DealMode::Uniform).unwrap();
    let text = serde_json::to_string(&tr).unwrap();
    let back: dsa_core::sim::Transcript = serde_json::from_str(&text).unwrap();
    assert_eq!(back, tr);
    assert!(dsa_core::sim::replay(&back, Some(&alpha)).unwrap().passed());
}

#[test]
fn collusion_beyond_t_is_not_protected() {
    // T + 1 colluders plus the adversary exceed the design bound; the check
    // refuses the case instead of reporting a bogus pass
    let m = SchemeModel::new(&matrix(5, 3, 1, 4), PadMode::Uniform);
    let u1 = SurvivorSet::all(5);
    assert!(m.security_check(0, &[1, 2], &u1).is_err());
}
