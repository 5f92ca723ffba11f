//! Signatures, terms, formulas, conditions and their parser.

mod formula;
mod parser;
mod signature;

pub use formula::{affine_combination, CombinationError, Condition, Formula, SubstitutionError, Term, Theory};
pub use parser::{parse_condition, parse_conditions, parse_formula, parse_term};
pub use signature::{Signature, SignatureError, Symbol, SymbolKind, RESERVED};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("syntax error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{symbol}` expects {expected} argument(s), found {found}")]
    Arity { symbol: String, expected: usize, found: usize },
    #[error("`{symbol}` is a {kind} symbol, expected a {expected}")]
    KindMismatch { symbol: String, kind: SymbolKind, expected: &'static str },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn sig() -> Signature {
        Signature::new()
            .with_function("F", 1, int(2))
            .unwrap()
            .with_relation("R", 2, rat(1, 2))
            .unwrap()
            .with_constant("c")
            .unwrap()
    }

    #[test]
    fn dist_atom_constants() {
        let f = parse_formula("d(x,y)", &sig()).unwrap();
        assert_eq!(f, Formula::dist(Term::var("x"), Term::var("y")));
        assert_eq!(f.lipschitz(&sig()).unwrap(), int(2));
        assert_eq!(f.bound(), int(1));
    }

    #[test]
    fn scaled_sum_constants() {
        let f = parse_formula("3*d(F(x),y) + 2*1", &sig()).unwrap();
        assert_eq!(f.lipschitz(&sig()).unwrap(), int(9));
        assert_eq!(f.bound(), int(5));
    }

    #[test]
    fn quantifier_keeps_constants() {
        let f = parse_formula("sup y. d(x,y)", &sig()).unwrap();
        assert_eq!(f.lipschitz(&sig()).unwrap(), int(2));
        assert_eq!(f.bound(), int(1));
        assert_eq!(f.free_vars().into_iter().collect::<Vec<_>>(), vec!["x".to_string()]);
    }

    #[test]
    fn quantifier_scope_extends_right() {
        let f = parse_formula("sup x1. sup x2. inf y. 1/2*d(x1,y)+1/2*d(x2,y)", &sig()).unwrap();
        assert!(f.is_sentence());
        assert_eq!(f.quantifier_depth(), 3);
        let g = parse_formula("(sup x. d(x,y)) + 1", &sig()).unwrap();
        assert!(matches!(g, Formula::Sum(..)));
    }

    #[test]
    fn relation_constants() {
        let f = parse_formula("R(F(x), c)", &sig()).unwrap();
        // 1/2 * (2 + 0)
        assert_eq!(f.lipschitz(&sig()).unwrap(), int(1));
    }

    #[test]
    fn literals() {
        let s = sig();
        assert_eq!(parse_formula("1", &s).unwrap(), Formula::One);
        assert_eq!(parse_formula("0", &s).unwrap(), Formula::real(int(0)));
        assert_eq!(parse_formula("-1/2", &s).unwrap(), Formula::real(rat(-1, 2)));
        assert_eq!(
            parse_formula("d(x,y) - 1", &s).unwrap(),
            Formula::sub(Formula::dist(Term::var("x"), Term::var("y")), Formula::One)
        );
    }

    #[test]
    fn errors() {
        let s = sig();
        assert!(matches!(parse_formula("d(x,", &s), Err(SyntaxError::Parse { .. })));
        assert_eq!(parse_formula("G(x,y)", &s), Err(SyntaxError::UnknownSymbol("G".into())));
        assert!(matches!(parse_formula("d(F(x,y),x)", &s), Err(SyntaxError::Arity { expected: 1, found: 2, .. })));
        assert!(matches!(parse_formula("R(x)", &s), Err(SyntaxError::Arity { .. })));
        assert!(matches!(parse_formula("F(x)", &s), Err(SyntaxError::KindMismatch { .. })));
        assert!(matches!(parse_formula("0.5*1", &s), Err(SyntaxError::Parse { .. })));
        assert!(matches!(parse_formula("d(x,y) d(x,y)", &s), Err(SyntaxError::Parse { .. })));
    }

    #[test]
    fn parse_error_reports_offset() {
        match parse_formula("d(x,y) + + 1", &sig()) {
            Err(SyntaxError::Parse { pos, .. }) => assert_eq!(pos, 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn print_parse_roundtrip_examples() {
        let s = sig();
        for text in [
            "d(x,y)",
            "3*d(F(x),y) + 2*1",
            "sup y. d(x,y)",
            "2*(sup x. d(x,y) + 1) + -1*R(x,c)",
            "min(d(x,y), 1/2) + max(0, R(x,x))",
            "inf x. sup y. d(x,y) + -1/3",
            "1*1 + 0 + 1",
        ] {
            let f = parse_formula(text, &s).unwrap();
            let printed = f.to_string();
            let back = parse_formula(&printed, &s).unwrap();
            assert_eq!(back, f, "{text} printed as {printed}");
        }
    }

    #[test]
    fn conditions() {
        let s = sig();
        let c = parse_condition("d(x,x) <= 0", &s).unwrap();
        assert_eq!(c.rhs, Formula::real(int(0)));
        let eq = parse_conditions("sup x. d(x,c) = 1", &s).unwrap();
        assert_eq!(eq.len(), 2);
        assert_eq!(eq[0].lhs, eq[1].rhs);
        let ge = parse_condition("1 >= d(x,y)", &s).unwrap();
        assert_eq!(ge.rhs, Formula::One);
        assert!(parse_condition("1 = 1", &s).is_err());
    }

    #[test]
    fn substitution() {
        let s = sig();
        let f = parse_formula("d(x,y)", &s).unwrap();
        assert_eq!(f.substitute("x", &Term::constant("c")).unwrap(), parse_formula("d(c,y)", &s).unwrap());

        let g = parse_formula("sup y. d(x,y)", &s).unwrap();
        assert!(matches!(g.substitute("x", &Term::var("y")), Err(SubstitutionError::Capture { .. })));

        let h = parse_formula("sup z. d(x,z)", &s).unwrap();
        let t = parse_term("F(y)", &s).unwrap();
        assert_eq!(h.substitute("x", &t).unwrap(), parse_formula("sup z. d(F(y),z)", &s).unwrap());

        // Bound occurrences are untouched.
        let k = parse_formula("sup x. d(x,y)", &s).unwrap();
        assert_eq!(k.substitute("x", &Term::constant("c")).unwrap(), k);
    }

    #[test]
    fn alpha_equivalence() {
        let s = sig();
        let a = parse_formula("sup x. inf y. d(x,y) + d(y,z)", &s).unwrap();
        let b = parse_formula("sup u. inf v. d(u,v) + d(v,z)", &s).unwrap();
        let c = parse_formula("sup u. inf z. d(u,z) + d(z,z)", &s).unwrap();
        assert!(a.alpha_eq(&b));
        assert!(!a.alpha_eq(&c));
        assert!(a.rename_binder("x", "w").alpha_eq(&a));
        // Renaming y to z captures the free z.
        assert!(!a.rename_binder("y", "z").alpha_eq(&a));
    }

    #[test]
    fn affine_flags() {
        let s = sig();
        assert!(parse_formula("sup x. d(x,c)", &s).unwrap().is_affine());
        assert!(!parse_formula("sup x. min(d(x,c), 1/2)", &s).unwrap().is_affine());
    }

    #[test]
    fn combinations() {
        let s = sig();
        let sigma = parse_formula("sup x. d(x,c)", &s).unwrap();
        let zero = Formula::real(int(0));
        let c1 = Condition::new(zero.clone(), sigma.clone());
        let c2 = Condition::new(sigma.clone(), zero.clone());
        let both = affine_combination(&[(c1.clone(), int(1)), (c2, int(1))]).unwrap();
        assert_eq!(both.lhs, Formula::sum(zero.clone(), sigma.clone()));
        assert_eq!(both.rhs, Formula::sum(sigma.clone(), zero.clone()));

        let phi = parse_formula("d(c,c)", &s).unwrap();
        let single = affine_combination(&[(Condition::new(phi.clone(), sigma.clone()), int(2))]).unwrap();
        assert_eq!(single.lhs, Formula::scale(int(2), phi));
        assert_eq!(single.rhs, Formula::scale(int(2), sigma.clone()));

        let eta = parse_formula("inf x. d(x,c)", &s).unwrap();
        let half = affine_combination(&[
            (Condition::new(zero.clone(), sigma.clone()), rat(1, 2)),
            (Condition::new(zero.clone(), eta.clone()), rat(1, 2)),
        ])
        .unwrap();
        assert_eq!(half.rhs, Formula::sum(Formula::scale(rat(1, 2), sigma), Formula::scale(rat(1, 2), eta)));

        assert_eq!(affine_combination(&[]), Err(CombinationError::Empty));
        assert!(matches!(
            affine_combination(&[(c1, int(-1))]),
            Err(CombinationError::NegativeWeight(_))
        ));
    }
}
