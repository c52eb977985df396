use gfq_conv::decoder::{brute_force_oracle, max_log_map_decode, BranchMetrics, DecoderOptions, Termination};
use gfq_conv::{Code, FieldSpec, Trellis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gf4_trellis(rng: &mut ChaCha8Rng) -> Trellis {
    loop {
        let (a1, a2, a3) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(0..4));
        if let Ok(c) = Code::from_values(FieldSpec::gf4(), a1, a2, a3) {
            return c.trellis();
        }
    }
}

/// Integer-valued metrics keep every sum exact in `f64`.
fn integer_metrics(rng: &mut ChaCha8Rng, q: usize, n: usize) -> BranchMetrics {
    let sys = (0..q * n).map(|_| -(rng.random_range(0..40) as f64)).collect();
    let par = (0..q * n).map(|_| -(rng.random_range(0..40) as f64)).collect();
    BranchMetrics::from_tables(q, sys, par).unwrap()
}

fn real_metrics(rng: &mut ChaCha8Rng, q: usize, n: usize) -> BranchMetrics {
    let sys = (0..q * n).map(|_| -rng.random::<f64>() * 8.0).collect();
    let par = (0..q * n).map(|_| -rng.random::<f64>() * 8.0).collect();
    BranchMetrics::from_tables(q, sys, par).unwrap()
}

#[test]
fn thousand_gf4_length4_instances_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ties = 0;
    for i in 0..1000 {
        let t = random_gf4_trellis(&mut rng);
        let m = integer_metrics(&mut rng, 4, 4);
        let termination = if i % 2 == 0 { Termination::Open } else { Termination::Zero };
        let out = max_log_map_decode(&t, &m, DecoderOptions { termination, normalize: false });
        let oracle = brute_force_oracle(&t, &m, termination).unwrap();
        assert_eq!(out.posteriors.normalized(), oracle.normalized(), "instance {i}");
        assert_eq!(out.decisions, oracle.hard_decisions(), "instance {i}");
        ties += (0..4)
            .filter(|&k| {
                let row = oracle.stage(k);
                let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                row.iter().filter(|&&v| v == best).count() > 1
            })
            .count();
    }
    // integer metrics make ties common, so the tie-break rule is exercised too
    assert!(ties > 0);
}

#[test]
fn real_metrics_up_to_six_stages() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 1..=6 {
        for _ in 0..50 {
            let t = random_gf4_trellis(&mut rng);
            let m = real_metrics(&mut rng, 4, n);
            for termination in [Termination::Open, Termination::Zero] {
                for normalize in [false, true] {
                    let out = max_log_map_decode(&t, &m, DecoderOptions { termination, normalize });
                    let oracle = brute_force_oracle(&t, &m, termination).unwrap();
                    let a = out.posteriors.normalized();
                    let b = oracle.normalized();
                    for (x, y) in a.values.iter().zip(&b.values) {
                        assert!(x == y || (x - y).abs() < 1e-9, "{x} vs {y}");
                    }
                    assert_eq!(out.decisions, oracle.hard_decisions());
                }
            }
        }
    }
}

#[test]
fn gf16_short_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = Code::from_values(FieldSpec::gf16(), 13, 7, 11).unwrap().trellis();
    for _ in 0..20 {
        let m = integer_metrics(&mut rng, 16, 3);
        for termination in [Termination::Open, Termination::Zero] {
            let out = max_log_map_decode(&t, &m, DecoderOptions { termination, normalize: false });
            let oracle = brute_force_oracle(&t, &m, termination).unwrap();
            assert_eq!(out.posteriors.normalized(), oracle.normalized());
        }
    }
}
