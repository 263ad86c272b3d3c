//! The merging learner and its partitioner, checked from outside against
//! quantities recomputed from the exact draws.

use histloom::bench::bench_target;
use histloom::partition::{approx_equal_partition_with, partition_sample_size, DEFAULT_C0};
use histloom::seed::stream_rng;
use histloom::source::Binning;
use histloom::{
    flatten, l1_distance, learner_trace, EmpiricalSample, Interval, LearnerConfig, Measure,
    PiecewiseDensity, Target, TargetSource, VecSource,
};

fn target() -> PiecewiseDensity {
    PiecewiseDensity::step(&[0.2, 0.55, 0.7], &[0.5, 1.5, 0.25, 1.25])
        .unwrap()
        .normalized()
        .unwrap()
}

#[test]
fn partition_masses_sit_between_half_and_three_kappa() {
    let p = bench_target(5);
    for (seed, kappa) in [(1u64, 0.05), (2, 0.02), (3, 0.01)] {
        let mut src = TargetSource::new(&p, seed);
        let draw = approx_equal_partition_with(&mut src, kappa, DEFAULT_C0).unwrap();
        assert_eq!(draw.draws, partition_sample_size(kappa, DEFAULT_C0));
        assert_eq!(draw.repeated_cuts, 0);
        for iv in draw.partition.intervals() {
            let mass = p.mass_on(&iv);
            assert!(
                mass >= kappa / 2.0 && mass <= 3.0 * kappa,
                "kappa {kappa}: mass {mass}"
            );
        }
    }
}

#[test]
fn partition_isolates_a_heavy_value() {
    // 30% of the draws sit on one value; that block must not swallow cuts
    let mut rng = stream_rng(4, &[]);
    let u = PiecewiseDensity::uniform();
    let pts: Vec<f64> = (0..10_000)
        .map(|i| {
            if i % 10 < 3 {
                0.5
            } else {
                u.sample_point(&mut rng)
            }
        })
        .collect();
    let mut src = VecSource::new(pts).unwrap();
    let draw = approx_equal_partition_with(&mut src, 0.05, 160.0).unwrap();
    let cuts = draw.partition.cuts();
    assert!(cuts.windows(2).all(|w| w[0] < w[1]));
    assert!(draw.repeated_cuts > 0);
    assert!(cuts.contains(&0.5));
}

/// Replays the learner on a fixed stream and rebuilds its output from the
/// final partition and the second batch of draws.
#[test]
fn hypothesis_is_the_empirical_flattening_on_the_final_partition() {
    let p = target();
    let cfg = LearnerConfig::new(4, 0.2)
        .unwrap()
        .with_sample_budget(20_000);
    let m0 = cfg.partition_budget();
    let mut rng = stream_rng(5, &[]);
    let mut stream = Vec::new();
    for _ in 0..m0 + cfg.budget() {
        stream.push(p.sample_point(&mut rng));
    }
    let mut src = VecSource::new(stream.clone()).unwrap();
    let trace = learner_trace(&cfg, &mut src).unwrap();
    assert_eq!(src.remaining(), 0);

    let last = trace.states.last().unwrap();
    assert!(last.is_cover());
    let second = EmpiricalSample::new(stream[m0..].to_vec()).unwrap();
    let rebuilt = flatten(&second, &last.intervals).unwrap();
    assert!(l1_distance(&rebuilt, &trace.outcome.hypothesis) < 1e-12);

    // the exact decomposition of the error over the final partition
    let h = &trace.outcome.hypothesis;
    let bias = l1_distance(&p, &flatten(&p, &last.intervals).unwrap());
    let noise: f64 = last
        .intervals
        .iter()
        .map(|iv| (second.mass_on(iv) - p.mass_on(iv)).abs())
        .sum();
    assert!(l1_distance(&p, h) <= bias + noise + 1e-12);
    // intervals free of target breakpoints contribute no bias
    for iv in &last.intervals {
        if p.breakpoints()
            .iter()
            .all(|&b| b <= iv.lo() || b >= iv.hi())
        {
            let f = flatten(&p, &[*iv]).unwrap();
            let mid = (iv.lo() + iv.hi()) / 2.0;
            assert!((f.density_at(mid) - p.density_at(mid)).abs() < 1e-12);
        }
    }
}

#[test]
fn frozen_intervals_stay_frozen_across_the_run() {
    let p = target();
    let cfg = LearnerConfig::new(4, 0.1).unwrap();
    let mut src = TargetSource::new(&p, 6).with_binning(Binning::Multinomial);
    let trace = learner_trace(&cfg, &mut src).unwrap();
    for w in trace.states.windows(2) {
        for iv in w[0].frozen_intervals() {
            assert!(w[1].frozen_intervals().any(|x| x == iv));
        }
        assert!(w[1].intervals.len() <= w[0].intervals.len());
    }
    // the unfrozen count halves on every pass
    let out = &trace.outcome;
    assert!((out.pieces() as f64) <= cfg.piece_bound());
    let mut bound = out.unfrozen[0];
    for &u in &out.unfrozen[1..] {
        bound = bound.div_ceil(2);
        assert!(u <= bound);
    }
}

#[test]
fn empirical_deviation_over_the_final_partition_shrinks_with_m() {
    let p = target();
    let mut dev = Vec::new();
    for m in [2_000usize, 200_000] {
        let cfg = LearnerConfig::new(4, 0.2).unwrap().with_sample_budget(m);
        let mut total = 0.0;
        for seed in 0..5 {
            let mut src = TargetSource::new(&p, 100 + seed).with_binning(Binning::Multinomial);
            let out = learner_trace(&cfg, &mut src).unwrap().outcome;
            total += l1_distance(&p, &out.hypothesis);
        }
        dev.push(total / 5.0);
    }
    assert!(dev[1] < dev[0], "{dev:?}");
}

#[test]
fn flattening_on_a_refinement_is_exact_off_the_breakpoints() {
    let p = target();
    let ivs: Vec<Interval> = [0.0, 0.1, 0.2, 0.4, 0.55, 0.6, 0.7, 1.0]
        .windows(2)
        .map(|w| Interval::new(w[0], w[1]).unwrap())
        .collect();
    assert!(l1_distance(&p, &flatten(&p, &ivs).unwrap()) < 1e-12);
    let coarse = [
        Interval::new(0.0, 0.3).unwrap(),
        Interval::new(0.3, 1.0).unwrap(),
    ];
    assert!(l1_distance(&p, &flatten(&p, &coarse).unwrap()) > 0.1);
}
