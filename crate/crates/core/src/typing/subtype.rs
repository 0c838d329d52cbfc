use super::{Constraint, Origin, TypeError};
use crate::ast::{fresh_name, IdxEnv, RefinementSet, SensExpr, Type, TypeArg};
use crate::semantics::{box_elim, Annotation, EnvError, VarEnv};

/// Collects the leaf constraints of `σ ⊑ τ` under `φ; Φ`.
pub fn subtype(
    phi: &IdxEnv,
    refs: &RefinementSet,
    sigma: &Type,
    tau: &Type,
    origin: &Origin,
) -> Result<Vec<Constraint>, TypeError> {
    let mut out = Vec::new();
    let mut cx = Sub {
        refs,
        origin,
        root: (sigma, tau),
        out: &mut out,
    };
    cx.go(phi, sigma, tau, &mut Vec::new())?;
    Ok(out)
}

struct Sub<'a> {
    refs: &'a RefinementSet,
    origin: &'a Origin,
    root: (&'a Type, &'a Type),
    out: &'a mut Vec<Constraint>,
}

impl Sub<'_> {
    fn geq(&mut self, phi: &IdxEnv, lhs: &SensExpr, rhs: &SensExpr) {
        if lhs.alpha_eq(rhs) {
            return;
        }
        self.out.push(Constraint::new(
            phi.clone(),
            self.refs.clone(),
            lhs.clone(),
            rhs.clone(),
            self.origin.clone(),
        ));
    }

    fn fail(&self, path: &[&str]) -> TypeError {
        TypeError::mismatch(self.origin.loc, self.root.0, self.root.1, &path.join("."))
    }

    fn go(&mut self, phi: &IdxEnv, sigma: &Type, tau: &Type, path: &mut Vec<&'static str>) -> Result<(), TypeError> {
        match (sigma, tau) {
            (Type::Real, Type::Real) => Ok(()),
            (Type::RealSingleton(a), Type::RealSingleton(b)) | (Type::NatSingleton(a), Type::NatSingleton(b)) => {
                self.geq(phi, a, b);
                self.geq(phi, b, a);
                Ok(())
            }
            (
                Type::Lollipop { ann: r, dom: s1, cod: t1 },
                Type::Lollipop {
                    ann: r2,
                    dom: s2,
                    cod: t2,
                },
            ) => {
                self.geq(phi, r2, r);
                path.push("domain");
                self.go(phi, s2, s1, path)?;
                path.pop();
                path.push("codomain");
                self.go(phi, t1, t2, path)?;
                path.pop();
                Ok(())
            }
            (Type::Tensor(a1, b1), Type::Tensor(a2, b2)) | (Type::With(a1, b1), Type::With(a2, b2)) => {
                path.push("left");
                self.go(phi, a1, a2, path)?;
                path.pop();
                path.push("right");
                self.go(phi, b1, b2, path)?;
                path.pop();
                Ok(())
            }
            (
                Type::Forall { binder: i, kind: k1, body: b1 },
                Type::Forall { binder: j, kind: k2, body: b2 },
            ) => {
                if k1 != k2 {
                    return Err(self.fail(path));
                }
                let fresh = fresh_name(i, |c| {
                    phi.contains(c) || (c != i && b1.occurs_free(c)) || (c != j && b2.occurs_free(c))
                });
                let v = SensExpr::var(&fresh);
                let b1 = b1.subst(i, &v);
                let b2 = b2.subst(j, &v);
                path.push("body");
                self.go(&phi.extended(&fresh, *k1), &b1, &b2, path)?;
                path.pop();
                Ok(())
            }
            (Type::Opaque { name: n1, args: a1 }, Type::Opaque { name: n2, args: a2 }) => {
                if n1 != n2 || a1.len() != a2.len() {
                    return Err(self.fail(path));
                }
                for (x, y) in a1.iter().zip(a2) {
                    match (x, y) {
                        (TypeArg::Index(s), TypeArg::Index(t)) => {
                            self.geq(phi, s, t);
                            self.geq(phi, t, s);
                        }
                        (TypeArg::Type(s), TypeArg::Type(t)) => {
                            path.push("argument");
                            self.go(phi, s, t, path)?;
                            self.go(phi, t, s, path)?;
                            path.pop();
                        }
                        _ => return Err(self.fail(path)),
                    }
                }
                Ok(())
            }
            _ => Err(self.fail(path)),
        }
    }
}

/// Collects the constraints of `Γ ⊑ Γ'`; bindings annotated `Box` in `Γ'`
/// impose nothing.
pub fn env_subtype(
    phi: &IdxEnv,
    refs: &RefinementSet,
    gamma: &VarEnv,
    gamma2: &VarEnv,
    origin: &Origin,
) -> Result<Vec<Constraint>, TypeError> {
    if !gamma.same_domain(gamma2) {
        return Err(TypeError::Env {
            loc: origin.loc,
            source: EnvError::DomainMismatch {
                left: gamma.names().join(", "),
                right: gamma2.names().join(", "),
            },
        });
    }
    let mut out = Vec::new();
    for (name, a2, t2) in gamma2.iter() {
        let (a1, t1) = gamma.get(name).expect("same domain");
        if !t1.alpha_eq(t2) {
            return Err(TypeError::Env {
                loc: origin.loc,
                source: EnvError::SharedBindingTypeMismatch {
                    name: name.to_string(),
                    left: crate::syntax::pretty_type(t1),
                    right: crate::syntax::pretty_type(t2),
                },
            });
        }
        if let Annotation::Sens(r2) = a2 {
            out.push(Constraint::new(
                phi.clone(),
                refs.clone(),
                box_elim(a1),
                r2.clone(),
                origin.clone(),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Kind, Loc, Refinement};
    use crate::syntax::{parse_sens, parse_type};

    fn origin() -> Origin {
        Origin {
            loc: Loc::new(1, 1),
            rule: "Goal",
        }
    }

    fn sub(phi: &IdxEnv, refs: &RefinementSet, a: &str, b: &str) -> Result<Vec<Constraint>, TypeError> {
        subtype(phi, refs, &parse_type(a).unwrap(), &parse_type(b).unwrap(), &origin())
    }

    #[test]
    fn reflexivity_emits_nothing() {
        let cs = sub(&IdxEnv::new(), &RefinementSet::new(), "real * (real & real)", "real * (real & real)").unwrap();
        assert!(cs.is_empty());
    }

    #[test]
    fn quantified_function_types() {
        let cs = sub(
            &IdxEnv::new(),
            &RefinementSet::new(),
            "forall i : size . ![0] nat[i] -o ![2 * i] real -o real & real",
            "forall i : size . ![0] nat[i] -o ![i * i + 1] real -o real & real",
        )
        .unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].lhs, parse_sens("i * i + 1").unwrap());
        assert_eq!(cs[0].rhs, parse_sens("2 * i").unwrap());
        assert_eq!(cs[0].idx_env.kind_of("i"), Some(Kind::Size));
    }

    #[test]
    fn singletons_emit_equality() {
        let phi = IdxEnv::from_pairs(&[("i", Kind::Size), ("j", Kind::Size)]);
        let refs = RefinementSet::new().with(Refinement::IsSucc(SensExpr::var("j"), "i".into()));
        let cs = sub(&phi, &refs, "nat[i + 1]", "nat[j]").unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].lhs, parse_sens("i + 1").unwrap());
        assert_eq!(cs[1].lhs, SensExpr::var("j"));
        assert!(cs.iter().all(|c| c.refinements == refs));
    }

    #[test]
    fn head_mismatch() {
        assert!(matches!(
            sub(&IdxEnv::new(), &RefinementSet::new(), "real", "real * real"),
            Err(TypeError::StructuralMismatch { .. })
        ));
    }

    #[test]
    fn binder_capture_is_avoided() {
        let phi = IdxEnv::from_pairs(&[("i", Kind::Sens)]);
        let cs = sub(&phi, &RefinementSet::new(), "forall i : sens . real[i]", "forall j : sens . real[j]").unwrap();
        assert!(cs.is_empty());
        let cs = sub(&phi, &RefinementSet::new(), "forall j : sens . real[j]", "forall j : sens . real[i]").unwrap();
        assert_eq!(cs.len(), 2);
        assert_ne!(cs[0].lhs, SensExpr::var("i"));
    }

    #[test]
    fn environments() {
        let mut g = VarEnv::new();
        g.push("x", Annotation::Sens(SensExpr::num(3)), Type::Real);
        let mut bx = VarEnv::new();
        bx.push("x", Annotation::Box, Type::Real);
        let o = origin();
        assert!(env_subtype(&IdxEnv::new(), &RefinementSet::new(), &g, &bx, &o).unwrap().is_empty());
        let mut two = VarEnv::new();
        two.push("x", Annotation::Sens(SensExpr::num(2)), Type::Real);
        let cs = env_subtype(&IdxEnv::new(), &RefinementSet::new(), &g, &two, &o).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].to_string(), ". |= 3 >= 2");
        let mut y = VarEnv::new();
        y.push("y", Annotation::Sens(SensExpr::one()), Type::Real);
        assert!(env_subtype(&IdxEnv::new(), &RefinementSet::new(), &g, &y, &o).is_err());
    }
}
