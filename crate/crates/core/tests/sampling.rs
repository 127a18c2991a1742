use dsa_core::field::{derive_seed, rng_from_seed, PrimeField};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn histogram(q: u64, draws: usize, seed: u64) -> Vec<u64> {
    let f = PrimeField::new(q).unwrap();
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0u64; q as usize];
    for v in f.sample_uniform(&mut rng, draws).values() {
        counts[*v as usize] += 1;
    }
    counts
}

#[test]
fn chi_squared_uniformity_in_f11() {
    let (q, n) = (11u64, 100_000usize);
    let counts = histogram(q, n, 2024);
    let expected = n as f64 / q as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new((q - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(
        stat < critical,
        "chi2 = {stat:.3}, critical = {critical:.3}"
    );
}

#[test]
fn residue_frequencies_within_five_sigma() {
    for q in [2u64, 3, 5, 11, 257] {
        let n = 1_000_000usize;
        let counts = histogram(q, n, derive_seed(7, q));
        let p = 1.0 / q as f64;
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for (r, &c) in counts.iter().enumerate() {
            let z = (c as f64 - mean).abs() / sigma;
            assert!(z < 5.0, "q = {q}, residue {r}: {c} draws, z = {z:.2}");
        }
    }
}

#[test]
fn large_modulus_has_no_visible_bias() {
    // q just under 2^32: plain `% q` would favour small residues
    let q = 4_294_967_291u64;
    let f = PrimeField::new(q).unwrap();
    let draws = f.sample_uniform(&mut rng_from_seed(3), 200_000);
    let low = draws.values().iter().filter(|&&v| v < q / 2).count() as f64;
    let z = (low - 100_000.0).abs() / (200_000.0f64 * 0.25).sqrt();
    assert!(z < 5.0, "z = {z:.2}");
    assert!(draws.values().iter().all(|&v| v < q));
}

#[test]
fn sampling_is_replayable() {
    let f = PrimeField::new(65_537).unwrap();
    let a = f.sample_uniform(&mut rng_from_seed(11), 1000);
    let b = f.sample_uniform(&mut rng_from_seed(11), 1000);
    assert_eq!(a, b);
    assert!(f.sample_uniform(&mut rng_from_seed(11), 0).is_empty());
    assert_ne!(a, f.sample_uniform(&mut rng_from_seed(12), 1000));
}
