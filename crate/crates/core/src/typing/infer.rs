use std::collections::BTreeMap;

use super::{rename_term_binder, subtype, Constraint, InferenceResult, Origin, TypeError};
use crate::ast::{
    check_kind, fresh_name, kind_check_type, mk_case, mk_max, mk_plus, IdxEnv, Kind, Loc, Refinement,
    RefinementSet, SensExpr, Term, TermKind, Type,
};
use crate::semantics::{box_elim, ectx, env_add, env_join, env_scale, Annotation, JoinOp, VarEnv};

/// Declared primitive types, all closed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Prelude {
    types: BTreeMap<String, Type>,
}

impl Prelude {
    pub fn new() -> Self {
        Prelude::default()
    }

    /// Fails if a type is not closed and well-kinded.
    pub fn from_decls(decls: &[(String, Type)]) -> Result<Self, TypeError> {
        let mut p = Prelude::new();
        for (name, ty) in decls {
            kind_check_type(&IdxEnv::new(), ty).map_err(|source| TypeError::Kind {
                loc: Loc::default(),
                source,
            })?;
            p.types.insert(name.clone(), ty.clone());
        }
        Ok(p)
    }

    pub fn get(&self, name: &str) -> Option<&Type> {
        self.types.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.types.keys().map(|s| s.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InferOptions {
    /// Source annotations may use `max`, `sup` and `scase`. When false, an
    /// extended constraint left-hand side is reported as an error.
    pub allow_extended: bool,
}

/// Infers the environment, type and side constraints of `e` under the
/// Box-annotated `skeleton`.
pub fn infer(
    prelude: &Prelude,
    opts: InferOptions,
    phi: &IdxEnv,
    refs: &RefinementSet,
    skeleton: &VarEnv,
    e: &Term,
) -> Result<InferenceResult, TypeError> {
    assert!(skeleton.all_box(), "skeleton annotations must be Box");
    let mut cx = Infer {
        prelude,
        opts,
        constraints: Vec::new(),
    };
    let (env, ty) = cx.go(phi, refs, skeleton, e)?;
    Ok(InferenceResult {
        env,
        ty,
        constraints: cx.constraints,
    })
}

/// [`infer`] in the empty context.
pub fn infer_closed(prelude: &Prelude, opts: InferOptions, e: &Term) -> Result<InferenceResult, TypeError> {
    infer(prelude, opts, &IdxEnv::new(), &RefinementSet::new(), &VarEnv::new(), e)
}

/// Infers `e` in the empty context and appends the constraints of
/// `inferred ⊑ goal`.
pub fn check(prelude: &Prelude, opts: InferOptions, e: &Term, goal: &Type) -> Result<InferenceResult, TypeError> {
    kind_check_type(&IdxEnv::new(), goal).map_err(|source| TypeError::Kind { loc: e.loc, source })?;
    let mut res = infer_closed(prelude, opts, e)?;
    let origin = Origin {
        loc: e.loc,
        rule: "Goal",
    };
    let goal_cs = subtype(&IdxEnv::new(), &RefinementSet::new(), &res.ty, goal, &origin)?;
    for c in &goal_cs {
        standard_lhs(opts, c)?;
    }
    res.constraints.extend(goal_cs);
    Ok(res)
}

fn standard_lhs(opts: InferOptions, c: &Constraint) -> Result<(), TypeError> {
    if opts.allow_extended || c.lhs.is_standard() {
        Ok(())
    } else {
        Err(TypeError::NonStandardLhs {
            loc: c.origin.loc,
            lhs: crate::syntax::pretty_sens(&c.lhs),
        })
    }
}

struct Infer<'a> {
    prelude: &'a Prelude,
    opts: InferOptions,
    constraints: Vec<Constraint>,
}

fn kind_err(loc: Loc) -> impl Fn(crate::ast::KindError) -> TypeError {
    move |source| TypeError::Kind { loc, source }
}

fn env_err(loc: Loc) -> impl Fn(crate::semantics::EnvError) -> TypeError {
    move |source| TypeError::Env { loc, source }
}

/// Picks a name for a new index binder that is not already in scope.
fn fresh_index_binder(binder: &str, phi: &IdxEnv, refs: &RefinementSet, body: &Term) -> String {
    let rf = refs.free_vars();
    let clash = |c: &str| phi.contains(c) || rf.contains(c);
    if !clash(binder) {
        return binder.to_string();
    }
    let used = body.free_idx_vars();
    fresh_name(binder, |c| clash(c) || used.contains(c))
}

impl Infer<'_> {
    fn emit(&mut self, cs: Vec<Constraint>) -> Result<(), TypeError> {
        for c in &cs {
            standard_lhs(self.opts, c)?;
        }
        self.constraints.extend(cs);
        Ok(())
    }

    fn sub(&mut self, phi: &IdxEnv, refs: &RefinementSet, sigma: &Type, tau: &Type, loc: Loc, rule: &'static str) -> Result<(), TypeError> {
        let cs = subtype(phi, refs, sigma, tau, &Origin { loc, rule })?;
        self.emit(cs)
    }

    /// Infers `body` with `name : ty` added to the skeleton and returns the
    /// result with that binding popped, plus its annotation.
    fn under_binder(
        &mut self,
        phi: &IdxEnv,
        refs: &RefinementSet,
        skel: &VarEnv,
        name: &str,
        ty: &Type,
        body: &Term,
    ) -> Result<(VarEnv, Annotation, Type), TypeError> {
        let (name, body) = rename_term_binder(body, name, &|c| skel.contains(c));
        let inner = skel.extended(&name, Annotation::Box, ty.clone());
        let (mut env, out_ty) = self.go(phi, refs, &inner, &body)?;
        let (ann, _) = env.remove(&name).expect("binder stays in the environment");
        Ok((env, ann, out_ty))
    }

    fn go(&mut self, phi: &IdxEnv, refs: &RefinementSet, skel: &VarEnv, e: &Term) -> Result<(VarEnv, Type), TypeError> {
        let loc = e.loc;
        match &e.kind {
            TermKind::Var(x) => {
                let ty = match skel.get(x) {
                    Some((_, t)) => t.clone(),
                    None => {
                        return Err(TypeError::UnboundVariable {
                            loc,
                            name: x.clone(),
                        })
                    }
                };
                let mut env = ectx(skel);
                env.set_annotation(x, Annotation::Sens(SensExpr::one()));
                Ok((env, ty))
            }
            TermKind::RealLit(_) => Ok((ectx(skel), Type::Real)),
            TermKind::NatLit(n) => Ok((ectx(skel), Type::NatSingleton(SensExpr::Const((*n).into())))),
            TermKind::Prim(p) => match self.prelude.get(p) {
                Some(t) => Ok((ectx(skel), t.clone())),
                None => Err(TypeError::UnknownPrimitive { loc, name: p.clone() }),
            },
            TermKind::Succ(inner) => {
                let (env, ty) = self.go(phi, refs, skel, inner)?;
                match ty {
                    Type::NatSingleton(s) => Ok((env, Type::NatSingleton(mk_plus(s, SensExpr::one())))),
                    other => Err(expected(inner.loc, "a natural number", &other)),
                }
            }
            TermKind::Lam { name, ann, ty, body } => {
                check_kind(phi, ann, Kind::Sens).map_err(kind_err(loc))?;
                kind_check_type(phi, ty).map_err(kind_err(loc))?;
                let (env, used, cod) = self.under_binder(phi, refs, skel, name, ty, body)?;
                self.emit(vec![Constraint::new(
                    phi.clone(),
                    refs.clone(),
                    ann.clone(),
                    box_elim(&used),
                    Origin { loc, rule: "Lam" },
                )])?;
                Ok((env, Type::lollipop(ann.clone(), ty.clone(), cod)))
            }
            TermKind::App(f, a) => {
                let (gamma, fty) = self.go(phi, refs, skel, f)?;
                let (ann, dom, cod) = match fty {
                    Type::Lollipop { ann, dom, cod } => (ann, *dom, *cod),
                    other => return Err(expected(f.loc, "a function", &other)),
                };
                let (delta, aty) = self.go(phi, refs, skel, a)?;
                self.sub(phi, refs, &aty, &dom, a.loc, "App")?;
                let env = env_add(&gamma, &env_scale(&ann, &delta)).map_err(env_err(loc))?;
                Ok((env, cod))
            }
            TermKind::IdxLam { binder, kind, body } => {
                let fresh = fresh_index_binder(binder, phi, refs, body);
                let body = if &fresh == binder {
                    (**body).clone()
                } else {
                    body.subst_idx(binder, &SensExpr::var(&fresh))
                };
                let (gamma, ty) = self.go(&phi.extended(&fresh, *kind), refs, skel, &body)?;
                let env = env_join(
                    &JoinOp::Sup {
                        binder: fresh.clone(),
                        kind: *kind,
                    },
                    &[&gamma],
                )
                .map_err(env_err(loc))?;
                Ok((env, Type::forall(&fresh, *kind, ty)))
            }
            TermKind::IdxApp(f, s) => {
                let (env, fty) = self.go(phi, refs, skel, f)?;
                match fty {
                    Type::Forall { binder, kind, body } => {
                        check_kind(phi, s, kind).map_err(kind_err(loc))?;
                        Ok((env, body.subst(&binder, s)))
                    }
                    other => Err(expected(f.loc, "a quantified type", &other)),
                }
            }
            TermKind::WithPair(a, b) => {
                let (g1, t1) = self.go(phi, refs, skel, a)?;
                let (g2, t2) = self.go(phi, refs, skel, b)?;
                let env = env_join(&JoinOp::Max, &[&g1, &g2]).map_err(env_err(loc))?;
                Ok((env, Type::with(t1, t2)))
            }
            TermKind::Proj(i, inner) => {
                let (env, ty) = self.go(phi, refs, skel, inner)?;
                match ty {
                    Type::With(l, r) => Ok((env, if *i == 1 { *l } else { *r })),
                    other => Err(expected(inner.loc, "a `&` pair", &other)),
                }
            }
            TermKind::TensorPair(a, b) => {
                let (g1, t1) = self.go(phi, refs, skel, a)?;
                let (g2, t2) = self.go(phi, refs, skel, b)?;
                let env = env_add(&g1, &g2).map_err(env_err(loc))?;
                Ok((env, Type::tensor(t1, t2)))
            }
            TermKind::LetPair { left, right, bound, body } => {
                if left == right {
                    return Err(TypeError::DuplicateBinder { loc, name: left.clone() });
                }
                let (delta, bty) = self.go(phi, refs, skel, bound)?;
                let (s1, s2) = match bty {
                    Type::Tensor(a, b) => (*a, *b),
                    other => return Err(expected(bound.loc, "a `*` pair", &other)),
                };
                let (left, body) = rename_term_binder(body, left, &|c| skel.contains(c) || c == right);
                let (right, body) = rename_term_binder(&body, right, &|c| skel.contains(c) || c == left);
                let inner = skel
                    .extended(&left, Annotation::Box, s1)
                    .extended(&right, Annotation::Box, s2);
                let (mut gamma, ty) = self.go(phi, refs, &inner, &body)?;
                let (r1, _) = gamma.remove(&left).expect("binder stays in the environment");
                let (r2, _) = gamma.remove(&right).expect("binder stays in the environment");
                let scale = mk_max(box_elim(&r1), box_elim(&r2));
                let env = env_add(&gamma, &env_scale(&scale, &delta)).map_err(env_err(loc))?;
                Ok((env, ty))
            }
            TermKind::Fix { name, ann, body } => {
                kind_check_type(phi, ann).map_err(kind_err(loc))?;
                let (gamma, _, ty) = self.under_binder(phi, refs, skel, name, ann, body)?;
                self.sub(phi, refs, &ty, ann, loc, "Fix")?;
                Ok((env_scale(&SensExpr::inf(), &gamma), ann.clone()))
            }
            TermKind::NatCase {
                scrutinee,
                ret,
                zero,
                pred_var,
                pred_idx,
                succ,
            } => {
                kind_check_type(phi, ret).map_err(kind_err(loc))?;
                let (delta, sty) = self.go(phi, refs, skel, scrutinee)?;
                let s = match sty {
                    Type::NatSingleton(s) => s,
                    other => return Err(expected(scrutinee.loc, "a natural number", &other)),
                };
                let refs0 = refs.with(Refinement::IsZero(s.clone()));
                let (g0, t0) = self.go(phi, &refs0, skel, zero)?;
                self.sub(phi, &refs0, &t0, ret, zero.loc, "NatCase0")?;

                let i = fresh_index_binder(pred_idx, phi, refs, succ);
                let succ = if &i == pred_idx {
                    (**succ).clone()
                } else {
                    succ.subst_idx(pred_idx, &SensExpr::var(&i))
                };
                let phi_s = phi.extended(&i, Kind::Size);
                let refs_s = refs.with(Refinement::IsSucc(s.clone(), i.clone()));
                let nty = Type::NatSingleton(SensExpr::var(&i));
                let (gs, r_n, ts) = self.under_binder(&phi_s, &refs_s, skel, pred_var, &nty, &succ)?;
                self.sub(&phi_s, &refs_s, &ts, ret, succ.loc, "NatCaseS")?;

                let joined = env_join(
                    &JoinOp::Case {
                        scrutinee: s.clone(),
                        binder: i.clone(),
                    },
                    &[&g0, &gs],
                )
                .map_err(env_err(loc))?;
                let scale = mk_case(s, SensExpr::zero(), &i, box_elim(&r_n));
                let env = env_add(&joined, &env_scale(&scale, &delta)).map_err(env_err(loc))?;
                Ok((env, ret.clone()))
            }
        }
    }
}

fn expected(loc: Loc, what: &str, found: &Type) -> TypeError {
    TypeError::Expected {
        loc,
        expected: what.to_string(),
        found: crate::syntax::pretty_type(found),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{eval_sens, ProbeConfig, Valuation};
    use crate::syntax::{parse_program, parse_sens, parse_term, parse_type};

    fn skel(names: &[(&str, &str)]) -> VarEnv {
        let pairs: Vec<(&str, Type)> = names.iter().map(|(n, t)| (*n, parse_type(t).unwrap())).collect();
        VarEnv::skeleton(&pairs)
    }

    fn run(skeleton: &VarEnv, src: &str) -> InferenceResult {
        let e = parse_term(src, &[]).unwrap();
        infer(
            &Prelude::new(),
            InferOptions::default(),
            &IdxEnv::new(),
            &RefinementSet::new(),
            skeleton,
            &e,
        )
        .unwrap()
    }

    fn ann(env: &VarEnv, x: &str) -> Annotation {
        env.annotation(x).unwrap().clone()
    }

    #[test]
    fn variable() {
        let r = run(&skel(&[("x", "real")]), "x");
        assert_eq!(ann(&r.env, "x"), Annotation::Sens(SensExpr::one()));
        assert_eq!(r.ty, Type::Real);
        assert!(r.constraints.is_empty());
    }

    #[test]
    fn tensor_pair_adds() {
        let r = run(&skel(&[("x", "real")]), "(x, x)");
        assert_eq!(ann(&r.env, "x"), Annotation::Sens(SensExpr::num(2)));
        assert_eq!(r.ty, Type::tensor(Type::Real, Type::Real));
    }

    #[test]
    fn with_pair_takes_max() {
        let r = run(&skel(&[("x", "real"), ("y", "real")]), "<x, y>");
        assert_eq!(ann(&r.env, "x"), Annotation::Sens(SensExpr::one()));
        assert_eq!(ann(&r.env, "y"), Annotation::Sens(SensExpr::one()));
        assert_eq!(r.ty, Type::with(Type::Real, Type::Real));
    }

    #[test]
    fn fix_scales_by_infinity() {
        let r = run(
            &skel(&[("y", "real"), ("z", "real")]),
            "fix (f : ![1] real -o real) { fun (x :[1] real) { f y } }",
        );
        assert_eq!(ann(&r.env, "y"), Annotation::Sens(SensExpr::inf()));
        assert_eq!(ann(&r.env, "z"), Annotation::Box);
    }

    #[test]
    fn unbound_variable_is_located() {
        let e = parse_term("fun (x :[1] real) { y }", &[]).unwrap();
        let err = infer_closed(&Prelude::new(), InferOptions::default(), &e).unwrap_err();
        assert!(matches!(err, TypeError::UnboundVariable { .. }));
        assert_eq!(err.loc(), Loc::new(1, 21));
    }

    #[test]
    fn lambda_emits_annotation_constraint() {
        let r = run(&VarEnv::new(), "fun (x :[3] real) { (x, x) }");
        assert_eq!(r.constraints.len(), 1);
        assert_eq!(r.constraints[0].to_string(), ". |= 3 >= 2");
        assert_eq!(r.ty, parse_type("![3] real -o real * real").unwrap());
    }

    #[test]
    fn shadowing_binders_are_renamed() {
        let r = run(&skel(&[("x", "real")]), "(x, fun (x :[1] real) { x })");
        assert_eq!(ann(&r.env, "x"), Annotation::Sens(SensExpr::one()));
        assert_eq!(r.env.len(), 1);
        assert_eq!(r.constraints[0].to_string(), ". |= 1 >= 1");
    }

    const PAIR: &str = "primitive use : forall i : size . ![0] nat[i] -o ![i] real -o real;
primitive add : ![1] real -o ![1] real -o real;
check idxlam (i : size) { fun (e :[0] nat[i]) { fun (x :[Q] real) { <x, add (use[i] e x) (use[i] e x)> } } }
  : forall i : size . ![0] nat[i] -o ![G] real -o real & real";

    fn pair_constraints(q: &str, g: &str) -> Vec<Constraint> {
        let src = PAIR.replace('Q', q).replace('G', g);
        let p = parse_program(&src).unwrap();
        let prelude = Prelude::from_decls(&p.prelude).unwrap();
        check(&prelude, InferOptions::default(), &p.body, p.goal.as_ref().unwrap())
            .unwrap()
            .constraints
    }

    fn holds_at(c: &Constraint, i: i64) -> bool {
        let mut rho = Valuation::standard();
        for (n, _) in c.idx_env.iter() {
            rho.set(n, crate::ext_real::ExtReal::from_int(i));
        }
        let p = ProbeConfig::default();
        eval_sens(&c.lhs, &rho, &p) >= eval_sens(&c.rhs, &rho, &p)
    }

    #[test]
    fn pair_of_uses_constraints() {
        let cs = pair_constraints("2 * i + 1", "2 * i + 1");
        let lam_x: Vec<_> = cs.iter().filter(|c| c.lhs == parse_sens("2 * i + 1").unwrap()).collect();
        assert!(!lam_x.is_empty());
        assert!(cs.iter().all(|c| (0..10).all(|i| holds_at(c, i))));
        let bad = pair_constraints("2 * i", "2 * i");
        assert!(bad.iter().any(|c| !holds_at(c, 0)));
        let square = pair_constraints("i * i + 1", "i * i + 1");
        assert!(square.iter().all(|c| (0..10).all(|i| holds_at(c, i))));
    }

    #[test]
    fn goal_direction() {
        let cs = pair_constraints("i * i + 1", "2 * i + 1");
        assert!(cs.iter().any(|c| !holds_at(c, 3)));
        assert!(cs.iter().all(|c| holds_at(c, 2)));
    }

    fn case_program(x_ann: &str) -> InferenceResult {
        let src = "primitive scale : forall i : size . ![0] nat[i] -o ![i] real -o real;
idxlam (k : size) { fun (n :[inf] nat[k]) { fun (x :[A] real) {
  case n return real of 0 => x | m[j] + 1 => scale[j + 1] (succ m) x } } }"
            .replace('A', x_ann);
        let p = parse_program(&src).unwrap();
        let prelude = Prelude::from_decls(&p.prelude).unwrap();
        infer_closed(&prelude, InferOptions::default(), &p.body).unwrap()
    }

    #[test]
    fn natural_case_builds_case_environment() {
        let r = case_program("k + 1");
        let x = r
            .constraints
            .iter()
            .find(|c| c.origin.rule == "Lam" && matches!(c.rhs, SensExpr::Case { .. }))
            .expect("x is used at a case sensitivity");
        assert_eq!(x.rhs, parse_sens("scase k { 0 => 1 | j + 1 => j + 1 }").unwrap());
        assert!((0..10).all(|k| holds_at(x, k)));
        let tight = case_program("k");
        assert!(tight.constraints.iter().any(|c| !holds_at(c, 0)));
    }

    #[test]
    fn extended_lhs_rejected_by_default() {
        let e = parse_term("fun (x :[max(1, 2)] real) { x }", &[]).unwrap();
        let strict = infer_closed(&Prelude::new(), InferOptions::default(), &e);
        assert!(matches!(strict, Err(TypeError::NonStandardLhs { .. })));
        let lax = infer_closed(&Prelude::new(), InferOptions { allow_extended: true }, &e);
        assert!(lax.is_ok());
    }
}
