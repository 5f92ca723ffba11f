use super::FiniteStructure;
use crate::scalar::{rat, Scalar};
use crate::syntax::{Formula, Term};

/// The sentences `sup_x inf_y (1/n) sum d(x_i,y)` and `inf_x sup_y (1/n) sum d(x_i,y)`.
pub fn rendezvous_sentences(n: usize) -> (Formula, Formula) {
    assert!(n >= 1);
    let xs: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let avg = Formula::scale(
        rat(1, n as i64),
        Formula::sum_all(xs.iter().map(|x| Formula::dist(Term::var(x), Term::var("y")))),
    );
    let mut lower = Formula::inf("y", avg.clone());
    let mut upper = Formula::sup("y", avg);
    for x in xs.iter().rev() {
        lower = Formula::sup(x, lower);
        upper = Formula::inf(x, upper);
    }
    (lower, upper)
}

/// Values of the two rendez-vous sentences, `(lower, upper)`.
///
/// The average is symmetric in the `x_i`, so only nondecreasing tuples are visited.
pub fn rendezvous_value<S: Scalar>(m: &FiniteStructure<S>, n: usize) -> (S, S) {
    assert!(n >= 1);
    let pts = m.len();
    let dist: Vec<S> = (0..pts * pts).map(|k| m.dist_pow(k / pts, k % pts, 1).expect("plain metric")).collect();
    let mut sums = vec![S::zero(); pts];
    let mut lower: Option<S> = None;
    let mut upper: Option<S> = None;
    walk(&dist, pts, n, 0, &mut sums, &mut lower, &mut upper);
    let scale = S::one() / S::from_usize(n);
    (scale.clone() * lower.expect("nonempty"), scale * upper.expect("nonempty"))
}

fn walk<S: Scalar>(
    dist: &[S],
    pts: usize,
    left: usize,
    start: usize,
    sums: &mut Vec<S>,
    lower: &mut Option<S>,
    upper: &mut Option<S>,
) {
    if left == 0 {
        let mut lo = sums[0].clone();
        let mut hi = sums[0].clone();
        for s in &sums[1..] {
            if *s < lo {
                lo = s.clone();
            }
            if *s > hi {
                hi = s.clone();
            }
        }
        if lower.as_ref().map_or(true, |l| lo > *l) {
            *lower = Some(lo);
        }
        if upper.as_ref().map_or(true, |u| hi < *u) {
            *upper = Some(hi);
        }
        return;
    }
    for x in start..pts {
        let row = &dist[x * pts..(x + 1) * pts];
        for (s, d) in sums.iter_mut().zip(row) {
            *s = s.clone() + d.clone();
        }
        walk(dist, pts, left - 1, x, sums, lower, upper);
        for (s, d) in sums.iter_mut().zip(row) {
            *s = s.clone() - d.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use crate::scalar::{int, rat, Rational};
    use crate::structures::{eval_sentence, generators};

    #[test]
    fn small_spaces() {
        assert_eq!(rendezvous_value(&generators::two_point(), 2), (rat(1, 2), rat(1, 2)));
        for n in 1..4 {
            assert_eq!(rendezvous_value(&generators::one_point(), n), (int(0), int(0)));
        }
    }

    #[test]
    fn agrees_with_sentence_evaluation() {
        for m in [generators::interval(4), generators::cantor(1), generators::circle(6)] {
            for n in 1..=3 {
                let (lo, hi) = rendezvous_sentences(n);
                let got: (Rational, Rational) = rendezvous_value(&m, n);
                assert_eq!(got, (eval_sentence(&m, &lo, 1).unwrap(), eval_sentence(&m, &hi, 1).unwrap()));
            }
        }
    }

    #[test]
    fn circle_64() {
        let (lo, hi) = rendezvous_value(&generators::circle(64), 2);
        assert!((&hi - &lo).abs() <= rat(1, 64));
        assert_eq!((lo, hi), (rat(1, 2), rat(1, 2)));
    }
}
