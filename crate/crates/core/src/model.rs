//! Mixed-scale data points and the preference relations induced on them.
//!
//! A sample space has `r` dimensions: the first `z` are cardinal (finite
//! reals, differences are meaningful), the remaining `r - z` are ordinal
//! (only the declared level order is meaningful). Two relations compare
//! points and exchanges between points:
//!
//! * [`r1_compare`] — componentwise dominance between points.
//! * [`r2_compare`] — exchange-intensity comparison between dominating
//!   pairs: one exchange is at least as intense as another when the
//!   cardinal differences dominate componentwise and the second exchange
//!   is nested inside the first in every ordinal dimension.
//!
//! [`build_pooled`] merges two observed groups into the deduplicated
//! pooled sample on which all downstream constraint generation, linear
//! programming and resampling operate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("degenerate bounds: all pooled points are identical, no strict top/bottom pair exists")]
    DegenerateBounds,
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("empty sample: group {0} contains no observations")]
    EmptySample(&'static str),
}

/// Declares the dimensionality and scale of each dimension.
///
/// Cardinal dimensions come first; each ordinal dimension carries its
/// admissible level labels, lowest first. Ordinal values are stored as
/// rank indices into that list so that all order logic runs on integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSchema {
    cardinal: usize,
    ordinal_levels: Vec<Vec<String>>,
}

impl ScaleSchema {
    pub fn new(cardinal: usize, ordinal_levels: Vec<Vec<String>>) -> Result<Self, ModelError> {
        if cardinal + ordinal_levels.len() == 0 {
            return Err(ModelError::SchemaMismatch(
                "schema must declare at least one dimension".into(),
            ));
        }
        for (j, levels) in ordinal_levels.iter().enumerate() {
            if levels.len() < 2 {
                return Err(ModelError::SchemaMismatch(format!(
                    "ordinal dimension {} declares {} level(s), need at least 2",
                    j,
                    levels.len()
                )));
            }
            for (a, label) in levels.iter().enumerate() {
                if levels[..a].contains(label) {
                    return Err(ModelError::SchemaMismatch(format!(
                        "ordinal dimension {} repeats level {:?}",
                        j, label
                    )));
                }
            }
        }
        Ok(Self { cardinal, ordinal_levels })
    }

    /// Purely cardinal schema with `z` dimensions.
    pub fn cardinal_only(z: usize) -> Result<Self, ModelError> {
        Self::new(z, Vec::new())
    }

    /// Total dimension count `r`.
    pub fn dims(&self) -> usize {
        self.cardinal + self.ordinal_levels.len()
    }

    /// Number of cardinal dimensions `z`.
    pub fn cardinal_dims(&self) -> usize {
        self.cardinal
    }

    pub fn ordinal_dims(&self) -> usize {
        self.ordinal_levels.len()
    }

    pub fn ordinal_levels(&self, dim: usize) -> &[String] {
        &self.ordinal_levels[dim]
    }

    /// Rank of `label` in ordinal dimension `dim`, if declared.
    pub fn rank_of(&self, dim: usize, label: &str) -> Option<u32> {
        self.ordinal_levels[dim].iter().position(|l| l == label).map(|p| p as u32)
    }
}

/// One observation: `z` finite cardinal values plus one rank per ordinal
/// dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    cardinal: Vec<f64>,
    ordinal: Vec<u32>,
}

impl Point {
    pub fn new(cardinal: Vec<f64>, ordinal: Vec<u32>, schema: &ScaleSchema) -> Result<Self, ModelError> {
        let p = Self { cardinal, ordinal };
        p.check_schema(schema)?;
        Ok(p)
    }

    fn check_schema(&self, schema: &ScaleSchema) -> Result<(), ModelError> {
        if self.cardinal.len() != schema.cardinal_dims() || self.ordinal.len() != schema.ordinal_dims() {
            return Err(ModelError::SchemaMismatch(format!(
                "point has {} cardinal / {} ordinal entries, schema declares {} / {}",
                self.cardinal.len(),
                self.ordinal.len(),
                schema.cardinal_dims(),
                schema.ordinal_dims()
            )));
        }
        for (j, c) in self.cardinal.iter().enumerate() {
            if !c.is_finite() {
                return Err(ModelError::SchemaMismatch(format!(
                    "cardinal entry {} is not finite: {}",
                    j, c
                )));
            }
        }
        for (j, &o) in self.ordinal.iter().enumerate() {
            if o as usize >= schema.ordinal_levels(j).len() {
                return Err(ModelError::SchemaMismatch(format!(
                    "ordinal entry {} has rank {} but dimension declares only {} levels",
                    j,
                    o,
                    schema.ordinal_levels(j).len()
                )));
            }
        }
        Ok(())
    }

    pub fn cardinal(&self) -> &[f64] {
        &self.cardinal
    }

    pub fn ordinal(&self) -> &[u32] {
        &self.ordinal
    }

    /// Key with canonical total order; negative zero collapses onto zero so
    /// that deduplication follows `==` on the raw values.
    fn sort_key(&self) -> (Vec<u64>, &[u32]) {
        let card = self
            .cardinal
            .iter()
            .map(|&c| {
                let c = if c == 0.0 { 0.0 } else { c };
                let bits = c.to_bits();
                // order-preserving map from f64 to u64
                if bits >> 63 == 0 { bits ^ (1 << 63) } else { !bits }
            })
            .collect();
        (card, &self.ordinal)
    }
}

/// Outcome of comparing two points under componentwise dominance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R1Order {
    StrictlyAbove,
    Indifferent,
    StrictlyBelow,
    Incomparable,
}

/// Outcome of comparing two dominating pairs by exchange intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R2Order {
    StrictlyAbove,
    Indifferent,
    StrictlyBelow,
    Incomparable,
    /// One of the two pairs is not a dominating pair, so the
    /// exchange-intensity relation does not apply.
    NotApplicable,
}

fn dominates(a: &Point, b: &Point) -> bool {
    a.cardinal.iter().zip(&b.cardinal).all(|(x, y)| x >= y)
        && a.ordinal.iter().zip(&b.ordinal).all(|(x, y)| x >= y)
}

/// Componentwise dominance comparison. Indifference collapses to
/// coordinate equality because dominance in both directions forces it.
pub fn r1_compare(a: &Point, b: &Point, schema: &ScaleSchema) -> Result<R1Order, ModelError> {
    a.check_schema(schema)?;
    b.check_schema(schema)?;
    Ok(match (dominates(a, b), dominates(b, a)) {
        (true, true) => R1Order::Indifferent,
        (true, false) => R1Order::StrictlyAbove,
        (false, true) => R1Order::StrictlyBelow,
        (false, false) => R1Order::Incomparable,
    })
}

/// Exchange-intensity membership for pairs already known to dominate:
/// cardinal differences of the first pair dominate those of the second,
/// and the second pair is nested inside the first in every ordinal
/// dimension.
fn r2_holds(x: &Point, y: &Point, x2: &Point, y2: &Point, z: usize) -> bool {
    (0..z).all(|j| x.cardinal[j] - y.cardinal[j] >= x2.cardinal[j] - y2.cardinal[j])
        && x.ordinal
            .iter()
            .zip(&x2.ordinal)
            .all(|(a, b)| a >= b)
        && y2.ordinal.iter().zip(&y.ordinal).all(|(a, b)| a >= b)
}

/// Compares two exchanges `(a ↦ b)` and `(c ↦ d)` by intensity.
///
/// Returns [`R2Order::NotApplicable`] unless `a` dominates `b` and `c`
/// dominates `d`. Indifference holds exactly when the cardinal
/// differences agree and the ordinal coordinates match positionwise.
pub fn r2_compare(
    pair1: (&Point, &Point),
    pair2: (&Point, &Point),
    schema: &ScaleSchema,
) -> Result<R2Order, ModelError> {
    let (a, b) = pair1;
    let (c, d) = pair2;
    for p in [a, b, c, d] {
        p.check_schema(schema)?;
    }
    if !dominates(a, b) || !dominates(c, d) {
        return Ok(R2Order::NotApplicable);
    }
    let z = schema.cardinal_dims();
    let fwd = r2_holds(a, b, c, d, z);
    let rev = r2_holds(c, d, a, b, z);
    Ok(match (fwd, rev) {
        (true, true) => R2Order::Indifferent,
        (true, false) => R2Order::StrictlyAbove,
        (false, true) => R2Order::StrictlyBelow,
        (false, false) => R2Order::Incomparable,
    })
}

/// The deduplicated pooled sample of both groups.
///
/// Index 0 holds the bottom bound and index 1 the top bound; the
/// remaining points follow in a canonical sort order so that equal input
/// multisets always produce identical pooled samples. Bounds are present
/// even when unobserved (their counts are then zero).
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSample {
    schema: ScaleSchema,
    points: Vec<Point>,
    count_x: Vec<u64>,
    count_y: Vec<u64>,
    n: u64,
    m: u64,
    bounds_synthesized: bool,
}

impl PooledSample {
    /// Number of distinct pooled points, bounds included.
    pub fn s(&self) -> usize {
        self.points.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn schema(&self) -> &ScaleSchema {
        &self.schema
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> &Point {
        &self.points[idx]
    }

    pub fn lower_bound(&self) -> &Point {
        &self.points[0]
    }

    pub fn upper_bound(&self) -> &Point {
        &self.points[1]
    }

    pub fn count_x(&self) -> &[u64] {
        &self.count_x
    }

    pub fn count_y(&self) -> &[u64] {
        &self.count_y
    }

    /// Whether the bounds were synthesized as componentwise extremes
    /// rather than supplied by the caller.
    pub fn bounds_synthesized(&self) -> bool {
        self.bounds_synthesized
    }

    /// Same pooled points with the group roles exchanged.
    pub fn swap_groups(&self) -> PooledSample {
        PooledSample {
            schema: self.schema.clone(),
            points: self.points.clone(),
            count_x: self.count_y.clone(),
            count_y: self.count_x.clone(),
            n: self.m,
            m: self.n,
            bounds_synthesized: self.bounds_synthesized,
        }
    }

    /// Empirical weight of each pooled point in group X.
    pub fn weights_x(&self) -> Vec<f64> {
        self.count_x.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// Empirical weight of each pooled point in group Y.
    pub fn weights_y(&self) -> Vec<f64> {
        self.count_y.iter().map(|&c| c as f64 / self.m as f64).collect()
    }
}

fn componentwise_extremes(points: &[&Point]) -> (Point, Point) {
    let mut lo = points[0].clone();
    let mut hi = points[0].clone();
    for p in &points[1..] {
        for (l, c) in lo.cardinal.iter_mut().zip(&p.cardinal) {
            if c < l {
                *l = *c;
            }
        }
        for (h, c) in hi.cardinal.iter_mut().zip(&p.cardinal) {
            if c > h {
                *h = *c;
            }
        }
        for (l, o) in lo.ordinal.iter_mut().zip(&p.ordinal) {
            if o < l {
                *l = *o;
            }
        }
        for (h, o) in hi.ordinal.iter_mut().zip(&p.ordinal) {
            if o > h {
                *h = *o;
            }
        }
    }
    (lo, hi)
}

/// Pools two observed groups into a deduplicated sample with bottom and
/// top bounds at indices 0 and 1.
///
/// When `bounds` is omitted the componentwise minimum and maximum over
/// all observations are synthesized, appended with zero counts if
/// unobserved. Supplied bounds must dominate every observation, with the
/// top bound strictly dominating the bottom one. Deduplication compares
/// cardinal values exactly; no epsilon merging takes place.
pub fn build_pooled(
    xs: &[Point],
    ys: &[Point],
    schema: &ScaleSchema,
    bounds: Option<(Point, Point)>,
) -> Result<PooledSample, ModelError> {
    if xs.is_empty() {
        return Err(ModelError::EmptySample("X"));
    }
    if ys.is_empty() {
        return Err(ModelError::EmptySample("Y"));
    }
    for p in xs.iter().chain(ys) {
        p.check_schema(schema)?;
    }

    let all: Vec<&Point> = xs.iter().chain(ys).collect();
    let (lower, upper, synthesized) = match bounds {
        Some((lo, hi)) => {
            lo.check_schema(schema)?;
            hi.check_schema(schema)?;
            if lo == hi {
                return Err(ModelError::DegenerateBounds);
            }
            if !dominates(&hi, &lo) {
                return Err(ModelError::InvalidBounds(
                    "upper bound does not dominate lower bound".into(),
                ));
            }
            for (i, p) in all.iter().enumerate() {
                if !dominates(p, &lo) || !dominates(&hi, p) {
                    return Err(ModelError::InvalidBounds(format!(
                        "observation {} is not between the supplied bounds",
                        i
                    )));
                }
            }
            (lo, hi, false)
        }
        None => {
            let (lo, hi) = componentwise_extremes(&all);
            if lo == hi {
                return Err(ModelError::DegenerateBounds);
            }
            (lo, hi, true)
        }
    };

    // Canonical order for the interior points: sort by coordinates, then
    // merge counts of duplicates.
    let mut tagged: Vec<(&Point, u64, u64)> = Vec::with_capacity(all.len());
    for p in xs {
        tagged.push((p, 1, 0));
    }
    for p in ys {
        tagged.push((p, 0, 1));
    }
    tagged.sort_by(|l, r| l.0.sort_key().cmp(&r.0.sort_key()));

    let mut points = vec![lower.clone(), upper.clone()];
    let mut count_x = vec![0u64, 0];
    let mut count_y = vec![0u64, 0];
    for (p, cx, cy) in tagged {
        if *p == lower {
            count_x[0] += cx;
            count_y[0] += cy;
        } else if *p == upper {
            count_x[1] += cx;
            count_y[1] += cy;
        } else if points.last().map(|q| q == p) == Some(true) {
            *count_x.last_mut().unwrap() += cx;
            *count_y.last_mut().unwrap() += cy;
        } else {
            points.push(p.clone());
            count_x.push(cx);
            count_y.push(cy);
        }
    }

    Ok(PooledSample {
        schema: schema.clone(),
        points,
        count_x,
        count_y,
        n: xs.len() as u64,
        m: ys.len() as u64,
        bounds_synthesized: synthesized,
    })
}
