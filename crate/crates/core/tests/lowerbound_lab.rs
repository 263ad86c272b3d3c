//! The hard ensemble and the distinguishing lab, checked against exact
//! rational arithmetic.

use histloom::lowerbound::{
    distinguishing_experiment, exact_weights, resolve_tn, witness_distance, Distinguisher,
    HardInstance, LabConfig,
};
use histloom::seed::stream_rng;
use histloom::{Measure, Target};
use num_rational::Ratio;

#[test]
fn weights_are_a_distribution_in_exact_arithmetic() {
    for n in [8usize, 96, 1 << 12] {
        for t in [0.125, 0.25] {
            let tn = resolve_tn(n, t).unwrap();
            let w = exact_weights(n, tn);
            let sizes = [tn, n - tn, tn, n - tn];
            let total: Ratio<i128> = (0..4)
                .map(|c| w[c] * Ratio::from_integer(sizes[c] as i128))
                .sum();
            assert_eq!(total, Ratio::from_integer(1));
        }
    }
}

#[test]
fn sets_are_disjoint_halves_of_the_right_size() {
    let mut rng = stream_rng(1, &[]);
    let h = HardInstance::sample(1000, 0.1, &mut rng).unwrap();
    let (s1, s2) = (h.s1(), h.s2());
    assert_eq!(s1.len(), 100);
    assert_eq!(s2.len(), 100);
    assert!(s1.windows(2).all(|w| w[0] < w[1]) && s1.iter().all(|&i| i < 1000));
    assert!(s2.windows(2).all(|w| w[0] < w[1]) && s2.iter().all(|&i| (1000..2000).contains(&i)));
}

#[test]
fn exact_distances_to_uniform_and_witness() {
    let mut rng = stream_rng(2, &[]);
    let n = 64usize;
    let t = 0.25;
    let h = HardInstance::sample(n, t, &mut rng).unwrap();
    let tn = h.tn() as i128;
    let w = exact_weights(n, h.tn());
    let u = Ratio::new(1, 2 * n as i128);
    let rest = n as i128 - tn;
    let abs = |r: Ratio<i128>| if r < Ratio::from_integer(0) { -r } else { r };
    let l1_uniform =
        abs(w[0] - u) * tn + abs(w[1] - u) * rest + abs(w[2] - u) * tn + abs(w[3] - u) * rest;
    let l1_witness = abs(w[0] - w[1]) * tn + abs(w[2] - w[3]) * tn;

    let p = h.to_discrete().unwrap();
    let uniform = histloom::DiscreteDistribution::uniform(2 * n).unwrap();
    let approx = |r: Ratio<i128>| *r.numer() as f64 / *r.denom() as f64;
    assert!((p.l1_distance(&uniform).unwrap() - approx(l1_uniform)).abs() < 1e-12);
    assert!((p.l1_distance(&h.witness().unwrap()).unwrap() - approx(l1_witness)).abs() < 1e-12);
    assert!((approx(l1_witness) - witness_distance(t)).abs() < 1e-12);
}

#[test]
fn collision_probability_and_range_masses() {
    let mut rng = stream_rng(3, &[]);
    let h = HardInstance::sample(200, 0.25, &mut rng).unwrap();
    let p = h.to_discrete().unwrap();
    let direct: f64 = p.weights().iter().map(|w| w * w).sum();
    assert!((h.collision_probability() - direct).abs() < 1e-15);
    for (a, b) in [(0, 400), (0, 200), (37, 251), (199, 201), (5, 5)] {
        let direct: f64 = p.weights()[a..b].iter().sum();
        assert!((h.range_mass(a, b) - direct).abs() < 1e-12);
    }
    assert!((h.total_mass() - 1.0).abs() < 1e-12);
}

/// Class frequencies of the O(1) sampler against the exact class masses;
/// the 0.1% critical value for 3 degrees of freedom is 16.27.
#[test]
fn sampler_hits_each_class_in_proportion() {
    let mut rng = stream_rng(4, &[]);
    let h = HardInstance::sample(500, 0.2, &mut rng).unwrap();
    let (s1, s2) = (h.s1(), h.s2());
    let draws = 200_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        let i = h.sample_index(&mut rng);
        let class = match i {
            i if i < 500 => usize::from(s1.binary_search(&i).is_err()),
            i => 2 + usize::from(s2.binary_search(&i).is_err()),
        };
        counts[class] += 1;
    }
    let w = exact_weights(500, h.tn());
    let sizes = [100.0, 400.0, 100.0, 400.0];
    let chi: f64 = (0..4)
        .map(|c| {
            let expected = draws as f64 * sizes[c] * (*w[c].numer() as f64 / *w[c].denom() as f64);
            (counts[c] as f64 - expected).powi(2) / expected
        })
        .sum();
    assert!(chi < 16.27, "chi-square {chi}");
    // the embedded target puts every draw at a cell midpoint
    let x = h.sample_point(&mut rng);
    let cell = (x * 1000.0) as usize;
    assert!((x - (cell as f64 + 0.5) / 1000.0).abs() < 1e-12);
}

#[test]
fn few_draws_rarely_repeat_and_cannot_tell_the_regimes_apart() {
    let n = 1 << 16;
    let cfg = LabConfig {
        n,
        t: 0.25,
        m: 25,
        trials: 200,
        distinguisher: Distinguisher::Collision,
        seed: 5,
    };
    let report = distinguishing_experiment(&cfg).unwrap();
    assert!(report.repeat_rate("uniform") < 0.05);
    assert!(report.repeat_rate("hard") < 0.05);
    assert!(report.advantage.abs() < 0.1, "{}", report.advantage);
}

#[test]
fn many_draws_separate_the_regimes() {
    let n = 1 << 12;
    let cfg = LabConfig {
        n,
        t: 0.25,
        m: 50 * 64,
        trials: 100,
        distinguisher: Distinguisher::Collision,
        seed: 6,
    };
    let report = distinguishing_experiment(&cfg).unwrap();
    assert!(report.advantage > 0.5, "{}", report.advantage);
    assert_eq!(report.records_of("uniform").count(), 100);
    assert_eq!(report.records_of("hard").count(), 100);
}
