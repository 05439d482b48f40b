//! Shared helpers for the integration suites: random mixed-scale
//! instances and independent oracles (naive constraint enumeration,
//! upper-set dominance checks). Everything here deliberately avoids the
//! production generation paths it is used to check.

use gsd_core::*;
use rand::Rng;

/// Random schema with up to three dimensions and the given number of
/// cardinal ones.
pub fn random_schema(rng: &mut impl Rng, z: usize) -> ScaleSchema {
    let max_ord = 3 - z.min(2);
    let n_ord = if z == 0 { rng.random_range(1..=max_ord.max(1)) } else { rng.random_range(0..=max_ord) };
    let levels: Vec<Vec<String>> = (0..n_ord)
        .map(|d| {
            let k = rng.random_range(2..=4);
            (0..k).map(|i| format!("d{}l{}", d, i)).collect()
        })
        .collect();
    ScaleSchema::new(z, levels).unwrap()
}

/// Random point on a small grid so that duplicates and equal cardinal
/// differences actually occur.
pub fn random_point(rng: &mut impl Rng, schema: &ScaleSchema) -> Point {
    let cardinal = (0..schema.cardinal_dims())
        .map(|_| rng.random_range(0..5) as f64 * 0.5)
        .collect();
    let ordinal = (0..schema.ordinal_dims())
        .map(|d| rng.random_range(0..schema.ordinal_levels(d).len() as u32))
        .collect();
    Point::new(cardinal, ordinal, schema).unwrap()
}

/// Random two-group sample pooled over at most `max_s` distinct points
/// (bounds included); retries until the pooled space is nondegenerate.
pub fn random_pooled(
    rng: &mut impl Rng,
    schema: &ScaleSchema,
    n: usize,
    m: usize,
    max_s: usize,
) -> PooledSample {
    loop {
        let xs: Vec<Point> = (0..n).map(|_| random_point(rng, schema)).collect();
        let ys: Vec<Point> = (0..m).map(|_| random_point(rng, schema)).collect();
        match build_pooled(&xs, &ys, schema, None) {
            Ok(p) if p.s() <= max_s => return p,
            _ => continue,
        }
    }
}

/// A sample where each X observation componentwise dominates a matched Y
/// observation, so the first group dominates in sample by construction.
pub fn shifted_pooled(rng: &mut impl Rng, schema: &ScaleSchema, n: usize) -> PooledSample {
    loop {
        let ys: Vec<Point> = (0..n).map(|_| random_point(rng, schema)).collect();
        let xs: Vec<Point> = ys
            .iter()
            .map(|y| {
                let cardinal = y
                    .cardinal()
                    .iter()
                    .map(|&c| c + rng.random_range(0..3) as f64 * 0.5)
                    .collect();
                let ordinal = y
                    .ordinal()
                    .iter()
                    .enumerate()
                    .map(|(d, &o)| {
                        let top = schema.ordinal_levels(d).len() as u32 - 1;
                        (o + rng.random_range(0..2)).min(top)
                    })
                    .collect();
                Point::new(cardinal, ordinal, schema).unwrap()
            })
            .collect();
        if let Ok(p) = build_pooled(&xs, &ys, schema, None) {
            return p;
        }
    }
}

/// Literal quadruple-loop constraint enumeration over the comparison
/// operators: every dominance row, and every exchange-intensity row over
/// ordered pairs of dominating pairs, without pruning, deduplication or
/// transitive reduction.
pub fn naive_constraints(pooled: &PooledSample) -> ConstraintSet {
    let s = pooled.s();
    let schema = pooled.schema();
    let pts = pooled.points();
    let mut rows = Vec::new();
    let mut r1_pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..s {
        for j in 0..s {
            match r1_compare(&pts[i], &pts[j], schema).unwrap() {
                R1Order::StrictlyAbove => {
                    r1_pairs.push((i, j));
                    rows.push(
                        ConstraintRow::new(
                            &[(i as u32, 1), (j as u32, -1)],
                            true,
                            Provenance::R1Strict,
                        )
                        .unwrap(),
                    );
                }
                R1Order::Indifferent => r1_pairs.push((i, j)),
                _ => {}
            }
        }
    }
    for &(k, l) in &r1_pairs {
        for &(r, t) in &r1_pairs {
            if (k, l) == (r, t) {
                continue;
            }
            let raw = [(k as u32, 1), (l as u32, -1), (r as u32, -1), (t as u32, 1)];
            match r2_compare((&pts[k], &pts[l]), (&pts[r], &pts[t]), schema).unwrap() {
                R2Order::StrictlyAbove => {
                    if let Some(row) = ConstraintRow::new(&raw, true, Provenance::R2Strict) {
                        rows.push(row);
                    }
                }
                R2Order::Indifferent => {
                    // equal intensity is forced only when the exchange
                    // stays on a single ordinal profile
                    if pts[k].ordinal() == pts[l].ordinal() {
                        if let Some(row) =
                            ConstraintRow::new(&raw, false, Provenance::R2Indifference)
                        {
                            rows.push(row);
                        }
                    }
                }
                _ => {}
            }
        }
    }
    ConstraintSet::from_rows(s, rows)
}

/// Upper-set dominance oracle: the X weights put at least as much mass
/// as the Y weights on every upward-closed subset of the pooled order.
pub fn fsd_oracle(pooled: &PooledSample) -> bool {
    let s = pooled.s();
    assert!(s <= 20, "oracle enumerates all subsets");
    let pts = pooled.points();
    let schema = pooled.schema();
    let wx = pooled.weights_x();
    let wy = pooled.weights_y();
    let mut geq = vec![vec![false; s]; s];
    for i in 0..s {
        for j in 0..s {
            geq[i][j] = matches!(
                r1_compare(&pts[i], &pts[j], schema).unwrap(),
                R1Order::StrictlyAbove | R1Order::Indifferent
            );
        }
    }
    for mask in 0u32..(1 << s) {
        let inside = |i: usize| mask >> i & 1 == 1;
        let mut upset = true;
        'scan: for i in 0..s {
            if inside(i) {
                for j in 0..s {
                    if geq[j][i] && !inside(j) {
                        upset = false;
                        break 'scan;
                    }
                }
            }
        }
        if upset {
            let mx: f64 = (0..s).filter(|&i| inside(i)).map(|i| wx[i]).sum();
            let my: f64 = (0..s).filter(|&i| inside(i)).map(|i| wy[i]).sum();
            if mx < my - 1e-12 {
                return false;
            }
        }
    }
    true
}

/// Componentwise empirical-mean ordering over the cardinal dimensions.
pub fn cardinal_means_ordered(pooled: &PooledSample) -> bool {
    let z = pooled.schema().cardinal_dims();
    let wx = pooled.weights_x();
    let wy = pooled.weights_y();
    (0..z).all(|j| {
        let ex: f64 = pooled
            .points()
            .iter()
            .zip(&wx)
            .map(|(p, w)| p.cardinal()[j] * w)
            .sum();
        let ey: f64 = pooled
            .points()
            .iter()
            .zip(&wy)
            .map(|(p, w)| p.cardinal()[j] * w)
            .sum();
        ex >= ey - 1e-9
    })
}

/// Univariate first-order dominance of every ordinal marginal: the X
/// survival function majorizes the Y one level by level.
pub fn ordinal_marginals_dominate(pooled: &PooledSample) -> bool {
    let o = pooled.schema().ordinal_dims();
    let wx = pooled.weights_x();
    let wy = pooled.weights_y();
    (0..o).all(|d| {
        let levels = pooled.schema().ordinal_levels(d).len() as u32;
        (0..levels).all(|c| {
            let sx: f64 = pooled
                .points()
                .iter()
                .zip(&wx)
                .filter(|(p, _)| p.ordinal()[d] >= c)
                .map(|(_, w)| w)
                .sum();
            let sy: f64 = pooled
                .points()
                .iter()
                .zip(&wy)
                .filter(|(p, _)| p.ordinal()[d] >= c)
                .map(|(_, w)| w)
                .sum();
            sx >= sy - 1e-9
        })
    })
}

/// The four-point sample with equal marginals per dimension whose joint
/// vectors are nevertheless separated: X takes the diagonal values, Y is
/// uniform over the grid.
pub fn marginals_equal_sample() -> (PooledSample, ScaleSchema) {
    let schema = ScaleSchema::new(1, vec![vec!["1".into(), "2".into()]]).unwrap();
    let p = |c: f64, o: u32| Point::new(vec![c], vec![o], &schema).unwrap();
    // X: (1,1), (1,1), (2,2), (2,2); Y: all four grid points
    let xs = vec![p(1.0, 0), p(1.0, 0), p(2.0, 1), p(2.0, 1)];
    let ys = vec![p(1.0, 0), p(1.0, 1), p(2.0, 0), p(2.0, 1)];
    let pooled = build_pooled(&xs, &ys, &schema, None).unwrap();
    (pooled, schema)
}
