//! Finite discretizations of the standard example spaces.
//!
//! Metric conventions: geodesic metrics are normalized so antipodal points
//! are at distance 1; subsets of the real line use the Euclidean metric.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::FiniteStructure;
use crate::scalar::{format_rational, int, rat, Rational};

/// Two points `a`, `b` at distance 1.
pub fn two_point() -> FiniteStructure {
    FiniteStructure::new(vec!["a".into(), "b".into()], vec![vec![int(0), int(1)], vec![int(1), int(0)]])
        .expect("well formed")
}

pub fn one_point() -> FiniteStructure {
    FiniteStructure::new(vec!["a".into()], vec![vec![int(0)]]).expect("well formed")
}

/// Points of `[0,1]` with the Euclidean metric, named by their coordinate.
pub fn line(coords: &[Rational]) -> FiniteStructure {
    let points = coords.iter().map(format_rational).collect();
    let metric = coords.iter().map(|a| coords.iter().map(|b| (a - b).abs()).collect()).collect();
    FiniteStructure::new(points, metric).expect("distinct coordinates")
}

/// `n >= 2` equally spaced points `0, 1/(n-1), ..., 1`.
pub fn interval(n: usize) -> FiniteStructure {
    assert!(n >= 2, "interval needs two endpoints");
    let coords: Vec<Rational> = (0..n).map(|k| rat(k as i64, n as i64 - 1)).collect();
    line(&coords)
}

/// Endpoints of the `2^level` closed intervals of the level-`level` Cantor construction.
pub fn cantor(level: u32) -> FiniteStructure {
    let mut intervals = vec![(int(0), int(1))];
    for _ in 0..level {
        intervals = intervals
            .into_iter()
            .flat_map(|(a, b)| {
                let third = (&b - &a) / int(3);
                [(a.clone(), &a + &third), (&b - &third, b)]
            })
            .collect();
    }
    let mut coords: Vec<Rational> = intervals.into_iter().flat_map(|(a, b)| [a, b]).collect();
    coords.dedup();
    line(&coords)
}

/// `n` equally spaced points on a circle, geodesic metric scaled to diameter 1.
pub fn circle(n: usize) -> FiniteStructure {
    assert!(n >= 1);
    let metric = |i: usize, j: usize| {
        let k = i.abs_diff(j);
        let steps = k.min(n - k);
        rat(2 * steps as i64, n as i64)
    };
    FiniteStructure::from_fn(n, metric).expect("well formed")
}

/// Denominator used when rounding irrational distances.
const GRID: i64 = 1 << 24;

/// Latitude/longitude grid on the 2-sphere: both poles plus `bands - 1`
/// interior latitude circles of `meridians` points each. Distances are the
/// geodesic angle divided by pi, rounded to a multiple of `2^-24` and then
/// replaced by `(d + eps)/(1 + eps)` off the diagonal with `eps = 2^-20`,
/// which absorbs the rounding error in every triangle inequality.
pub fn sphere(bands: usize, meridians: usize) -> FiniteStructure {
    assert!(bands >= 2 && meridians >= 1);
    let mut coords: Vec<[f64; 3]> = vec![[0.0, 0.0, 1.0]];
    for b in 1..bands {
        let theta = PI * b as f64 / bands as f64;
        for m in 0..meridians {
            let phi = 2.0 * PI * m as f64 / meridians as f64;
            coords.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    coords.push([0.0, 0.0, -1.0]);
    let eps = rat(1, 1 << 20);
    let denom = Rational::one() + &eps;
    let n = coords.len();
    let mut metric = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = (0..3).map(|k| coords[i][k] * coords[j][k]).sum();
            let angle = dot.clamp(-1.0, 1.0).acos() / PI;
            let rounded = Rational::new(BigInt::from((angle * GRID as f64).round() as i64), BigInt::from(GRID));
            let d = (rounded + &eps) / &denom;
            metric[i][j] = d.clone();
            metric[j][i] = d;
        }
    }
    let points = (0..n).map(|i| i.to_string()).collect();
    FiniteStructure::new(points, metric).expect("well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::validate;
    use crate::syntax::Signature;

    #[test]
    fn generators_are_valid_metrics() {
        let sig = Signature::new();
        for m in [two_point(), one_point(), interval(5), cantor(2), circle(12), sphere(4, 6)] {
            let report = validate(&m, &sig).unwrap();
            assert!(report.is_valid(), "{:?}", report.violations.first());
        }
    }

    #[test]
    fn shapes() {
        assert_eq!(interval(3).points(), &["0", "1/2", "1"]);
        assert_eq!(cantor(1).points(), &["0", "1/3", "2/3", "1"]);
        assert_eq!(cantor(2).len(), 8);
        let c = circle(64);
        assert_eq!(*c.dist(0, 32), int(1));
        assert_eq!(*c.dist(0, 63), rat(1, 32));
        let s = sphere(8, 12);
        assert_eq!(s.len(), 86);
        assert_eq!(*s.dist(0, 85), int(1));
    }
}
