use rand::Rng;

/// Per-step transition probabilities `(fail, repair)` of the two-state
/// availability chain.
///
/// Repair probability is `step_hours / mean_repair_hours` (capped at 1), so
/// outage durations are geometric with the requested mean. The failure
/// probability is then fixed by the stationary condition
/// `efor = fail / (fail + repair)`.
pub fn transition_probabilities(efor: f64, mean_repair_hours: f64, step_hours: f64) -> (f64, f64) {
    let repair = (step_hours / mean_repair_hours).min(1.0);
    if efor <= 0.0 {
        return (0.0, repair);
    }
    if efor >= 1.0 {
        return (1.0, 0.0);
    }
    let fail = (efor * repair / (1.0 - efor)).min(1.0);
    (fail, repair)
}

/// Samples an availability series (1 = available) from the two-state chain.
/// The initial state is drawn from the stationary distribution.
pub fn sample_outage_path<R: Rng + ?Sized>(
    efor: f64,
    mean_repair_hours: f64,
    steps: usize,
    step_hours: f64,
    rng: &mut R,
) -> Vec<u8> {
    if efor <= 0.0 {
        return vec![1; steps];
    }
    if efor >= 1.0 {
        return vec![0; steps];
    }
    let (fail, repair) = transition_probabilities(efor, mean_repair_hours, step_hours);
    let mut up = rng.gen::<f64>() >= efor;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        out.push(up as u8);
        let u: f64 = rng.gen();
        up = if up { u >= fail } else { u < repair };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn never_failing_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_outage_path(0.0, 10.0, 100, 1.0, &mut rng).iter().all(|&a| a == 1));
    }

    #[test]
    fn always_failed_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_outage_path(1.0, 10.0, 100, 1.0, &mut rng).iter().all(|&a| a == 0));
    }

    #[test]
    fn half_rate_one_hour_repair_is_a_fair_coin_per_step() {
        // repair = fail = 1: the chain flips every step, so each step is
        // down with probability exactly 1/2 from the stationary start.
        assert_eq!(transition_probabilities(0.5, 1.0, 1.0), (1.0, 1.0));
        let mut down = vec![0usize; 10];
        for seed in 0..4000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path = sample_outage_path(0.5, 1.0, 10, 1.0, &mut rng);
            for (t, a) in path.iter().enumerate() {
                down[t] += (*a == 0) as usize;
            }
        }
        for d in down {
            let frac = d as f64 / 4000.0;
            // 4 sigma for a fair binomial with n = 4000
            assert!((frac - 0.5).abs() < 4.0 * (0.25f64 / 4000.0).sqrt(), "{frac}");
        }
    }

    #[test]
    fn mean_outage_duration_matches_geometric_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut durations = Vec::new();
        let mut current = 0usize;
        while durations.len() < 100_000 {
            for a in sample_outage_path(0.1, 24.0, 50_000, 1.0, &mut rng) {
                if a == 0 {
                    current += 1;
                } else if current > 0 {
                    durations.push(current);
                    current = 0;
                }
            }
        }
        let mean = durations.iter().sum::<usize>() as f64 / durations.len() as f64;
        // Geometric duration with p = 1/24 has mean 24.
        assert!((mean - 24.0).abs() < 1.0, "{mean}");
    }
}
