//! Expression language for scheme residuals, ansatz functions and test
//! probes, with exact first derivatives via forward-mode dual numbers.

mod ast;
mod eval;
mod lexer;
mod parser;

pub use ast::{BinOp, Expression, Func, GridRef, GridVar, Node, NodeKind, Span};
pub use eval::{eval, eval_with_gradient, eval_with_point_gradient, Environment, Slot};
pub use parser::{parse_expression, parse_grid_ref};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("syntax error at {span}: found {found}, expected {}", expected.join(" or "))]
    Syntax {
        span: Span,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown function `{name}` at {span}")]
    UnknownFunction { span: Span, name: String },
    #[error("function `{name}` at {span} takes {expected} argument(s), got {got}")]
    FunctionArity {
        span: Span,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("malformed grid reference at {span}: {detail}")]
    MalformedGridRef { span: Span, detail: String },
    #[error("division by zero at {span}")]
    DivisionByZero { span: Span },
    #[error("ln of non-positive value {value} at {span}")]
    LnDomain { span: Span, value: f64 },
    #[error("sqrt of negative value {value} at {span}")]
    SqrtDomain { span: Span, value: f64 },
    #[error("power domain error at {span}: base {base}, exponent {exp}")]
    PowDomain { span: Span, base: f64, exp: f64 },
    #[error("unbound grid reference {gref} at {span}")]
    UnboundRef { span: Span, gref: GridRef },
    #[error("unbound point variable `{var}` at {span}")]
    UnboundPoint { span: Span, var: char },
    #[error("unbound parameter `{name}` at {span}")]
    UnboundParam { span: Span, name: String },
    #[error("non-finite value at {span}")]
    NonFinite { span: Span },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_of(pairs: &[(&str, f64)], params: &[(&str, f64)]) -> Environment {
        let mut env = Environment::new();
        for (s, v) in pairs {
            env.bind_grid(parse_grid_ref(s).unwrap(), *v);
        }
        for (k, v) in params {
            env.bind_param(k, *v);
        }
        env
    }

    #[test]
    fn parses_heat_residual() {
        let e = parse_expression("(u[0,1]-u[0,0])/h2 - (u[1,0]-2*u[0,0]+u[-1,0])/h1^2").unwrap();
        assert_eq!(e.grid_refs().len(), 4);
        assert_eq!(e.param_names(), &["h1".to_string(), "h2".to_string()]);
    }

    #[test]
    fn parses_subtraction_chain() {
        let e = parse_expression("x[1,0]-x[0,0]-h1").unwrap();
        // left-associative: (x[1,0]-x[0,0])-h1
        match &e.root().kind {
            NodeKind::Bin(BinOp::Sub, l, r) => {
                assert!(matches!(r.kind, NodeKind::Param(_)));
                assert!(matches!(l.kind, NodeKind::Bin(BinOp::Sub, _, _)));
            }
            other => panic!("unexpected root {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_expression("u[1,").unwrap_err();
        match err {
            DslError::Syntax { span, .. } => {
                assert_eq!(span.line, 1);
                assert_eq!(span.col, 5);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_function_rejected() {
        assert!(matches!(
            parse_expression("sinh(x)").unwrap_err(),
            DslError::UnknownFunction { .. }
        ));
    }

    #[test]
    fn malformed_grid_ref_rejected() {
        assert!(matches!(
            parse_expression("h1[0,0]").unwrap_err(),
            DslError::MalformedGridRef { .. }
        ));
        assert!(matches!(
            parse_expression("u[1.5,0]").unwrap_err(),
            DslError::MalformedGridRef { .. }
        ));
    }

    #[test]
    fn power_is_right_associative() {
        let a = parse_expression("2^3^2").unwrap();
        let env = Environment::new();
        assert_eq!(eval(&a, &env).unwrap(), 512.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let a = parse_expression("-2^2").unwrap();
        assert_eq!(eval(&a, &Environment::new()).unwrap(), -4.0);
    }

    #[test]
    fn gradient_of_linear_combination() {
        let e = parse_expression("x[1,0]-2*x[0,0]+x[-1,0]").unwrap();
        let env = env_of(&[("x[1,0]", 2.0), ("x[0,0]", 1.0), ("x[-1,0]", 0.0)], &[]);
        let (v, g) = eval_with_gradient(&e, &env).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g[&parse_grid_ref("x[1,0]").unwrap()], 1.0);
        assert_eq!(g[&parse_grid_ref("x[0,0]").unwrap()], -2.0);
        assert_eq!(g[&parse_grid_ref("x[-1,0]").unwrap()], 1.0);
    }

    #[test]
    fn heat_residual_on_parabolic_profile() {
        // (2-0)/1 - (1-0+1)/1 = 0
        let e = parse_expression("(u[0,1]-u[0,0])/h2 - (u[1,0]-2*u[0,0]+u[-1,0])/h1^2").unwrap();
        let env = env_of(
            &[
                ("u[0,0]", 0.0),
                ("u[1,0]", 1.0),
                ("u[-1,0]", 1.0),
                ("u[0,1]", 2.0),
            ],
            &[("h1", 1.0), ("h2", 1.0)],
        );
        assert_eq!(eval(&e, &env).unwrap(), 0.0);
    }

    #[test]
    fn exp_value_and_derivative_at_zero() {
        let e = parse_expression("exp(u[0,0])").unwrap();
        let env = env_of(&[("u[0,0]", 0.0)], &[]);
        let (v, g) = eval_with_gradient(&e, &env).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(g[&parse_grid_ref("u[0,0]").unwrap()], 1.0);
    }

    #[test]
    fn division_by_zero_reported() {
        let e = parse_expression("1/(x[1,0]-x[0,0])").unwrap();
        let env = env_of(&[("x[1,0]", 1.0), ("x[0,0]", 1.0)], &[]);
        assert!(matches!(
            eval(&e, &env).unwrap_err(),
            DslError::DivisionByZero { .. }
        ));
    }

    #[test]
    fn ln_domain_reported() {
        let e = parse_expression("ln(u[0,0])").unwrap();
        let env = env_of(&[("u[0,0]", -1.0)], &[]);
        assert!(matches!(eval(&e, &env).unwrap_err(), DslError::LnDomain { .. }));
    }

    #[test]
    fn zero_to_negative_power_reported() {
        let e = parse_expression("u[0,0]^-1").unwrap();
        let env = env_of(&[("u[0,0]", 0.0)], &[]);
        assert!(matches!(eval(&e, &env).unwrap_err(), DslError::PowDomain { .. }));
    }

    #[test]
    fn power_with_negative_base_and_integer_exponent() {
        let e = parse_expression("u[0,0]^3").unwrap();
        let env = env_of(&[("u[0,0]", -2.0)], &[]);
        let (v, g) = eval_with_gradient(&e, &env).unwrap();
        assert_eq!(v, -8.0);
        assert_eq!(g[&parse_grid_ref("u[0,0]").unwrap()], 12.0);
    }

    #[test]
    fn registered_function_form_evaluates() {
        // (1+c)^(t/h) with a variable exponent
        let e = parse_expression("(1+c)^(t/h)").unwrap();
        let mut env = Environment::new();
        env.bind_param("c", 1.0);
        env.bind_param("h", 1.0);
        env.bind_point(0.0, 1.0, 0.0);
        assert_eq!(eval(&e, &env).unwrap(), 2.0);
        let (_, g) = eval_with_point_gradient(&e, &env).unwrap();
        assert!((g[1] - 2.0 * 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn serialize_parse_round_trip_is_structural_identity() {
        for text in [
            "(u[0,1]-u[0,0])/h2 - (u[1,0]-2*u[0,0]+u[-1,0])/h1^2",
            "x[1,0]-x[0,0]-h1",
            "-x^2",
            "(-x)^2",
            "a-(b-c)",
            "a/(b*c)",
            "2^3^2",
            "(2^3)^2",
            "pow(u[0,0], 2)+sqrt(abs(x))",
            "exp(c*((2+c^2)*x+c*t)/(4*(1+c^2)^2))",
            "u[0,0]^-2",
        ] {
            let e = parse_expression(text).unwrap();
            let round = parse_expression(&e.to_string()).unwrap();
            assert_eq!(e, round, "round trip failed for `{text}` -> `{e}`");
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let e = parse_expression("sin(x[0,0])*exp(t[0,0]/3)-u[0,0]^2/7").unwrap();
        let env = env_of(
            &[("x[0,0]", 1.37), ("t[0,0]", -0.41), ("u[0,0]", 2.9)],
            &[],
        );
        let a = eval(&e, &env).unwrap();
        let b = eval(&e, &env).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn y_is_alias_for_second_coordinate() {
        let a = parse_expression("y[0,1]-y[0,0]").unwrap();
        let b = parse_expression("t[0,1]-t[0,0]").unwrap();
        assert_eq!(a, b);
    }

    // Gradient vs central finite differences on randomized expressions.
    use proptest::prelude::*;

    #[derive(Debug, Clone)]
    enum RandExpr {
        Ref(usize),
        Const(f64),
        Add(Box<RandExpr>, Box<RandExpr>),
        Mul(Box<RandExpr>, Box<RandExpr>),
        Div(Box<RandExpr>, Box<RandExpr>),
        Sin(Box<RandExpr>),
        Exp(Box<RandExpr>),
    }

    fn rand_expr() -> impl Strategy<Value = RandExpr> {
        let leaf = prop_oneof![
            (0usize..4).prop_map(RandExpr::Ref),
            (-2.0f64..2.0).prop_map(RandExpr::Const),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| RandExpr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| RandExpr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| RandExpr::Div(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| RandExpr::Sin(Box::new(a))),
                inner.prop_map(|a| RandExpr::Exp(Box::new(a))),
            ]
        })
    }

    fn render(e: &RandExpr, names: &[&str]) -> String {
        match e {
            RandExpr::Ref(i) => names[*i].to_string(),
            RandExpr::Const(v) => format!("({v})"),
            RandExpr::Add(a, b) => format!("({}+{})", render(a, names), render(b, names)),
            RandExpr::Mul(a, b) => format!("({}*{})", render(a, names), render(b, names)),
            // keep denominators away from zero
            RandExpr::Div(a, b) => format!("({}/(2+{}*{}))", render(a, names), render(b, names), render(b, names)),
            RandExpr::Sin(a) => format!("sin({})", render(a, names)),
            RandExpr::Exp(a) => format!("exp(sin({}))", render(a, names)),
        }
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(
            e in rand_expr(),
            vals in proptest::array::uniform4(-1.5f64..1.5),
        ) {
            let names = ["u[0,0]", "u[1,0]", "x[0,0]", "t[0,1]"];
            let text = render(&e, &names);
            let expr = parse_expression(&text).unwrap();
            let mut env = Environment::new();
            for (n, v) in names.iter().zip(vals.iter()) {
                env.bind_grid(parse_grid_ref(n).unwrap(), *v);
            }
            let res = eval_with_gradient(&expr, &env);
            prop_assume!(res.is_ok());
            let (v0, grad) = res.unwrap();
            prop_assume!(v0.abs() < 1e6);
            for gref in expr.grid_refs() {
                let base = env.grid(gref).unwrap();
                let h = 1e-6 * base.abs().max(1.0);
                let mut ep = env.clone();
                ep.bind_grid(*gref, base + h);
                let mut em = env.clone();
                em.bind_grid(*gref, base - h);
                let (fp, fm) = match (eval(&expr, &ep), eval(&expr, &em)) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => continue,
                };
                let fd = (fp - fm) / (2.0 * h);
                let ad = grad[gref];
                prop_assume!(fd.abs() < 1e6);
                let scale = ad.abs().max(fd.abs()).max(1.0);
                prop_assert!(
                    (ad - fd).abs() <= 1e-5 * scale,
                    "grad mismatch for {gref} in `{text}`: ad={ad} fd={fd}"
                );
            }
        }

        #[test]
        fn random_round_trip(e in rand_expr()) {
            let names = ["u[0,0]", "u[1,0]", "x[0,0]", "t[0,1]"];
            let text = render(&e, &names);
            let expr = parse_expression(&text).unwrap();
            let round = parse_expression(&expr.to_string()).unwrap();
            prop_assert_eq!(expr, round);
        }
    }
}
