// scratch benchmark, not part of the workspace
use gsd_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(1);

    // pipeline-shaped instance: one cardinal + two ordinal (6/8 levels), n = m = 100
    let schema = ScaleSchema::new(
        1,
        vec![
            (0..6).map(|i| format!("h{}", i)).collect(),
            (0..8).map(|i| format!("e{}", i)).collect(),
        ],
    )
    .unwrap();
    let mk = |rng: &mut ChaCha12Rng, shift: f64| -> Point {
        let inc: f64 = (0..4).map(|_| rng.random_range(0.0..500.0)).sum::<f64>() + shift;
        Point::new(
            vec![(inc * 100.0).round() / 100.0],
            vec![rng.random_range(0..6), rng.random_range(0..8)],
            &schema,
        )
        .unwrap()
    };
    let xs: Vec<Point> = (0..100).map(|_| mk(&mut rng, 150.0)).collect();
    let ys: Vec<Point> = (0..100).map(|_| mk(&mut rng, 0.0)).collect();
    let pooled = build_pooled(&xs, &ys, &schema, None).unwrap();
    println!("s = {}", pooled.s());

    let t = Instant::now();
    let cs = build_constraints(&pooled);
    println!(
        "build_constraints: {:?}, rows = {}, stats = {:?}",
        t.elapsed(),
        cs.rows().len(),
        cs.stats()
    );

    let t = Instant::now();
    let mut engine = LpEngine::new(&cs);
    let xi = engine.xi_star().unwrap();
    println!("xi_star = {} in {:?}", xi, t.elapsed());

    let weights = EmpiricalPair::from_pooled(&pooled);
    let t = Instant::now();
    for eps in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let d = engine.statistic(&weights, eps).unwrap();
        println!("d^{} = {}", eps, d);
    }
    println!("observed stats: {:?}", t.elapsed());

    // resample-shaped solves
    let tot: Vec<u64> = pooled
        .count_x()
        .iter()
        .zip(pooled.count_y())
        .map(|(a, b)| a + b)
        .collect();
    let t = Instant::now();
    let mut warm = 0.0;
    for _ in 0..16 {
        let mut cx = vec![0u64; pooled.s()];
        let mut left = 100u64;
        for (i, &tc) in tot.iter().enumerate() {
            let take = rng.random_range(0..=tc.min(left));
            cx[i] = take;
            left -= take;
        }
        let obj: Vec<f64> = cx
            .iter()
            .zip(&tot)
            .map(|(&x, &t)| x as f64 / 100.0 - (t - x) as f64 / 100.0)
            .collect();
        for eps in [0.0, 0.25, 0.5, 0.75, 1.0] {
            warm += engine.statistic_for_objective(&obj, eps).unwrap();
        }
    }
    println!("16 warm resamples x 5 eps: {:?} (sum {})", t.elapsed(), warm);

    let frozen = engine.freeze();
    let t = Instant::now();
    let reps = 100;
    let mut acc = 0.0;
    for _ in 0..reps {
        let mut cx = vec![0u64; pooled.s()];
        let mut left = 100u64;
        for (i, &tc) in tot.iter().enumerate() {
            let take = rng.random_range(0..=tc.min(left));
            cx[i] = take;
            left -= take;
        }
        let obj: Vec<f64> = cx
            .iter()
            .zip(&tot)
            .map(|(&x, &t)| x as f64 / 100.0 - (t - x) as f64 / 100.0)
            .collect();
        for eps in [0.0, 0.25, 0.5, 0.75, 1.0] {
            acc += frozen.statistic_for_objective(&obj, eps).unwrap();
        }
    }
    let el = t.elapsed();
    println!(
        "{} frozen resamples x 5 eps: {:?} -> {:?} per lp (sum {})",
        reps,
        el,
        el / (reps * 5) as u32,
        acc
    );

    // small-instance throughput (level-control shape)
    let schema2 = ScaleSchema::new(1, vec![(0..3).map(|i| format!("l{}", i)).collect()]).unwrap();
    let mk2 = |rng: &mut ChaCha12Rng| -> Point {
        Point::new(
            vec![rng.random_range(0..4) as f64],
            vec![rng.random_range(0..3)],
            &schema2,
        )
        .unwrap()
    };
    let t = Instant::now();
    let mut total_lps = 0u64;
    for _ in 0..5 {
        let xs: Vec<Point> = (0..30).map(|_| mk2(&mut rng)).collect();
        let ys: Vec<Point> = (0..30).map(|_| mk2(&mut rng)).collect();
        let pooled = build_pooled(&xs, &ys, &schema2, None).unwrap();
        let cs = build_constraints(&pooled);
        let config = TestConfig::new(
            vec![0.0],
            vec![0.0],
            ResampleMode::MonteCarlo { resamples: 2000 },
            0.1,
            rng.random_range(0..1u64 << 40),
        )
        .unwrap();
        run_test(&pooled, &cs, &config).unwrap();
        total_lps += 2001;
    }
    let el = t.elapsed();
    println!(
        "5 level-control sims (N=2000): {:?} -> {:?} per sim",
        el,
        el / 5
    );
    let _ = total_lps;
}
