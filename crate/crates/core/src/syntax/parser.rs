use std::collections::BTreeSet;

use num_traits::{Signed, ToPrimitive};

use super::lexer::{lex, Tok, Token};
use super::{ParseOptions, SourceProgram, SyntaxError};
use crate::ast::{kind_check_type, IdxEnv, Kind, Loc, SensExpr, Term, TermKind, Type, TypeArg};
use crate::ext_real::ExtReal;

const KEYWORDS: &[&str] = &[
    "primitive", "check", "real", "nat", "forall", "size", "sens", "fun", "fix", "idxlam", "pi1",
    "pi2", "let", "in", "case", "return", "of", "succ", "inf", "max", "sup", "scase",
];

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    opts: ParseOptions,
    scope: Vec<String>,
    prims: BTreeSet<String>,
}

impl Parser {
    pub(crate) fn new(text: &str, opts: ParseOptions) -> Result<Parser, SyntaxError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            opts,
            scope: Vec::new(),
            prims: BTreeSet::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError::parse(
            self.loc(),
            expected.iter().map(|s| s.to_string()).collect(),
            self.peek().describe(),
        )
    }

    fn expect(&mut self, t: Tok) -> Result<Token, SyntaxError> {
        if *self.peek() == t {
            Ok(self.bump())
        } else {
            Err(self.err(&[&format!("`{}`", t.symbol())]))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Token, SyntaxError> {
        if self.is_kw(kw) {
            Ok(self.bump())
        } else {
            Err(self.err(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(&["identifier"])),
        }
    }

    fn expect_int(&mut self, n: u64) -> Result<(), SyntaxError> {
        match self.peek() {
            Tok::Number { value, int_syntax: true } if value.to_u64() == Some(n) && !value.is_negative() => {
                self.bump();
                Ok(())
            }
            _ => Err(self.err(&[&format!("`{n}`")])),
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub(crate) fn expect_eof(&self) -> Result<(), SyntaxError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.err(&["end of input"]))
        }
    }

    pub(crate) fn program(&mut self) -> Result<SourceProgram, SyntaxError> {
        let prelude = self.decls()?;
        let (body, goal) = if self.is_kw("check") {
            self.bump();
            let body = self.term()?;
            self.expect(Tok::Colon)?;
            let goal_loc = self.loc();
            let goal = self.ty()?;
            kind_check_type(&IdxEnv::new(), &goal)
                .map_err(|e| SyntaxError::semantic(goal_loc, e.to_string()))?;
            (body, Some(goal))
        } else {
            (self.term()?, None)
        };
        self.expect_eof()?;
        Ok(SourceProgram {
            prelude,
            body,
            goal,
        })
    }

    pub(crate) fn decls(&mut self) -> Result<Vec<(String, Type)>, SyntaxError> {
        let mut prelude: Vec<(String, Type)> = Vec::new();
        while self.is_kw("primitive") {
            self.bump();
            let loc = self.loc();
            let name = self.ident()?;
            if prelude.iter().any(|(n, _)| *n == name) || self.prims.contains(&name) {
                return Err(SyntaxError::semantic(loc, format!("primitive `{name}` declared twice")));
            }
            self.expect(Tok::Colon)?;
            let ty_loc = self.loc();
            let ty = self.ty()?;
            kind_check_type(&IdxEnv::new(), &ty)
                .map_err(|e| SyntaxError::semantic(ty_loc, e.to_string()))?;
            self.expect(Tok::Semi)?;
            self.prims.insert(name.clone());
            prelude.push((name, ty));
        }
        Ok(prelude)
    }

    pub(crate) fn add_prims<'a>(&mut self, names: impl IntoIterator<Item = &'a String>) {
        self.prims.extend(names.into_iter().cloned());
    }

    // ---- kinds and sensitivities ----

    fn kind(&mut self) -> Result<Kind, SyntaxError> {
        if self.is_kw("size") {
            self.bump();
            Ok(Kind::Size)
        } else if self.is_kw("sens") {
            self.bump();
            Ok(Kind::Sens)
        } else {
            Err(self.err(&["`size`", "`sens`"]))
        }
    }

    pub(crate) fn sens(&mut self) -> Result<SensExpr, SyntaxError> {
        let mut lhs = self.sens_prod()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.sens_prod()?;
            lhs = SensExpr::plus(lhs, rhs);
        }
        Ok(lhs)
    }

    fn sens_prod(&mut self) -> Result<SensExpr, SyntaxError> {
        let mut lhs = self.sens_atom()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.sens_atom()?;
            lhs = SensExpr::times(lhs, rhs);
        }
        Ok(lhs)
    }

    fn extended(&self, what: &str) -> Result<(), SyntaxError> {
        if self.opts.allow_extended {
            Ok(())
        } else {
            Err(SyntaxError::semantic(
                self.loc(),
                format!("extended sensitivity `{what}` in an annotation requires --allow-extended-annotations"),
            ))
        }
    }

    fn sens_atom(&mut self) -> Result<SensExpr, SyntaxError> {
        match self.peek().clone() {
            Tok::Number { value, .. } => {
                if value.is_negative() {
                    return Err(SyntaxError::semantic(self.loc(), "sensitivities must be nonnegative".into()));
                }
                self.bump();
                Ok(SensExpr::Const(ExtReal::Finite(value)))
            }
            Tok::LParen => {
                self.bump();
                let s = self.sens()?;
                self.expect(Tok::RParen)?;
                Ok(s)
            }
            Tok::Ident(k) if k == "inf" => {
                self.bump();
                Ok(SensExpr::inf())
            }
            Tok::Ident(k) if k == "max" => {
                self.extended("max")?;
                self.bump();
                self.expect(Tok::LParen)?;
                let a = self.sens()?;
                self.expect(Tok::Comma)?;
                let b = self.sens()?;
                self.expect(Tok::RParen)?;
                Ok(SensExpr::max(a, b))
            }
            Tok::Ident(k) if k == "sup" => {
                self.extended("sup")?;
                self.bump();
                self.expect(Tok::LParen)?;
                let x = self.ident()?;
                self.expect(Tok::Colon)?;
                let kind = self.kind()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                let body = self.sens()?;
                Ok(SensExpr::sup(&x, kind, body))
            }
            Tok::Ident(k) if k == "scase" => {
                self.extended("scase")?;
                self.bump();
                let s = self.sens()?;
                self.expect(Tok::LBrace)?;
                self.expect_int(0)?;
                self.expect(Tok::FatArrow)?;
                let z = self.sens()?;
                self.expect(Tok::Bar)?;
                let j = self.ident()?;
                self.expect(Tok::Plus)?;
                self.expect_int(1)?;
                self.expect(Tok::FatArrow)?;
                let succ = self.sens()?;
                self.expect(Tok::RBrace)?;
                Ok(SensExpr::case(s, z, &j, succ))
            }
            Tok::Ident(_) => Ok(SensExpr::Var(self.ident()?)),
            _ => Err(self.err(&["number", "`inf`", "identifier", "`max`", "`sup`", "`scase`", "`(`"])),
        }
    }

    // ---- types ----

    pub(crate) fn ty(&mut self) -> Result<Type, SyntaxError> {
        if self.is_kw("forall") {
            self.bump();
            let x = self.ident()?;
            self.expect(Tok::Colon)?;
            let k = self.kind()?;
            self.expect(Tok::Dot)?;
            let body = self.ty()?;
            return Ok(Type::forall(&x, k, body));
        }
        if *self.peek() == Tok::Bang {
            self.bump();
            self.expect(Tok::LBracket)?;
            let ann = self.sens()?;
            self.expect(Tok::RBracket)?;
            let dom = self.ty_prod()?;
            self.expect(Tok::Lolli)?;
            let cod = self.ty()?;
            return Ok(Type::lollipop(ann, dom, cod));
        }
        self.ty_prod()
    }

    fn ty_prod(&mut self) -> Result<Type, SyntaxError> {
        let mut lhs = self.ty_atom()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Type::tensor(lhs, self.ty_atom()?);
                }
                Tok::Amp => {
                    self.bump();
                    lhs = Type::with(lhs, self.ty_atom()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn ty_atom(&mut self) -> Result<Type, SyntaxError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(k) if k == "real" => {
                self.bump();
                if *self.peek() == Tok::LBracket {
                    self.bump();
                    let s = self.sens()?;
                    self.expect(Tok::RBracket)?;
                    Ok(Type::RealSingleton(s))
                } else {
                    Ok(Type::Real)
                }
            }
            Tok::Ident(k) if k == "nat" => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let s = self.sens()?;
                self.expect(Tok::RBracket)?;
                Ok(Type::NatSingleton(s))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                let mut args = Vec::new();
                if *self.peek() == Tok::Lt {
                    self.bump();
                    loop {
                        if *self.peek() == Tok::LBracket {
                            self.bump();
                            args.push(TypeArg::Index(self.sens()?));
                            self.expect(Tok::RBracket)?;
                        } else {
                            args.push(TypeArg::Type(self.ty()?));
                        }
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::Gt)?;
                }
                Ok(Type::Opaque { name, args })
            }
            _ => Err(self.err(&["`real`", "`nat`", "`forall`", "`!`", "identifier", "`(`"])),
        }
    }

    // ---- terms ----

    fn with_scope<T>(&mut self, names: &[&str], f: impl FnOnce(&mut Self) -> T) -> T {
        for n in names {
            self.scope.push(n.to_string());
        }
        let r = f(self);
        for _ in names {
            self.scope.pop();
        }
        r
    }

    pub(crate) fn term(&mut self) -> Result<Term, SyntaxError> {
        let loc = self.loc();
        if self.is_kw("let") {
            self.bump();
            self.expect(Tok::LParen)?;
            let x = self.ident()?;
            self.expect(Tok::Comma)?;
            let y = self.ident()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Eq)?;
            let bound = self.term()?;
            self.expect_kw("in")?;
            let body = self.with_scope(&[x.as_str(), y.as_str()], |p| p.term())?;
            return Ok(Term::new(
                TermKind::LetPair {
                    left: x,
                    right: y,
                    bound: Box::new(bound),
                    body: Box::new(body),
                },
                loc,
            ));
        }
        if self.is_kw("case") {
            self.bump();
            let scrutinee = self.term()?;
            self.expect_kw("return")?;
            let ret = self.ty()?;
            self.expect_kw("of")?;
            self.expect_int(0)?;
            self.expect(Tok::FatArrow)?;
            let zero = self.term()?;
            self.expect(Tok::Bar)?;
            let n = self.ident()?;
            self.expect(Tok::LBracket)?;
            let i = self.ident()?;
            self.expect(Tok::RBracket)?;
            self.expect(Tok::Plus)?;
            self.expect_int(1)?;
            self.expect(Tok::FatArrow)?;
            let succ = self.with_scope(&[n.as_str()], |p| p.term())?;
            return Ok(Term::new(
                TermKind::NatCase {
                    scrutinee: Box::new(scrutinee),
                    ret,
                    zero: Box::new(zero),
                    pred_var: n,
                    pred_idx: i,
                    succ: Box::new(succ),
                },
                loc,
            ));
        }
        let mut f = self.prefix_term()?;
        while self.starts_arg() {
            let a = self.prefix_term()?;
            let loc = f.loc;
            f = Term::new(TermKind::App(Box::new(f), Box::new(a)), loc);
        }
        Ok(f)
    }

    fn starts_arg(&self) -> bool {
        match self.peek() {
            Tok::Number { .. } | Tok::LParen | Tok::Lt => true,
            Tok::Ident(s) => {
                !KEYWORDS.contains(&s.as_str())
                    || matches!(s.as_str(), "fun" | "fix" | "idxlam" | "succ" | "pi1" | "pi2")
            }
            _ => false,
        }
    }

    fn prefix_term(&mut self) -> Result<Term, SyntaxError> {
        let loc = self.loc();
        for (kw, which) in [("succ", 0u8), ("pi1", 1), ("pi2", 2)] {
            if self.is_kw(kw) {
                self.bump();
                let e = Box::new(self.prefix_term()?);
                let kind = if which == 0 {
                    TermKind::Succ(e)
                } else {
                    TermKind::Proj(which, e)
                };
                return Ok(Term::new(kind, loc));
            }
        }
        let mut e = self.atom_term()?;
        while *self.peek() == Tok::LBracket {
            self.bump();
            let s = self.sens()?;
            self.expect(Tok::RBracket)?;
            e = Term::new(TermKind::IdxApp(Box::new(e), s), loc);
        }
        Ok(e)
    }

    fn atom_term(&mut self) -> Result<Term, SyntaxError> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Number { value, int_syntax } => {
                self.bump();
                if int_syntax && !value.is_negative() {
                    let n = value
                        .to_integer()
                        .to_u64()
                        .ok_or_else(|| SyntaxError::semantic(loc, "natural literal too large".into()))?;
                    Ok(Term::new(TermKind::NatLit(n), loc))
                } else {
                    Ok(Term::new(TermKind::RealLit(value), loc))
                }
            }
            Tok::LParen => {
                self.bump();
                let a = self.term()?;
                if *self.peek() == Tok::Comma {
                    self.bump();
                    let b = self.term()?;
                    self.expect(Tok::RParen)?;
                    Ok(Term::new(TermKind::TensorPair(Box::new(a), Box::new(b)), loc))
                } else {
                    self.expect(Tok::RParen)?;
                    Ok(a)
                }
            }
            Tok::Lt => {
                self.bump();
                let a = self.term()?;
                self.expect(Tok::Comma)?;
                let b = self.term()?;
                self.expect(Tok::Gt)?;
                Ok(Term::new(TermKind::WithPair(Box::new(a), Box::new(b)), loc))
            }
            Tok::Ident(k) if k == "fun" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let x = self.ident()?;
                self.expect(Tok::Colon)?;
                self.expect(Tok::LBracket)?;
                let ann = self.sens()?;
                self.expect(Tok::RBracket)?;
                let ty = self.ty()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::LBrace)?;
                let body = self.with_scope(&[x.as_str()], |p| p.term())?;
                self.expect(Tok::RBrace)?;
                Ok(Term::new(
                    TermKind::Lam {
                        name: x,
                        ann,
                        ty,
                        body: Box::new(body),
                    },
                    loc,
                ))
            }
            Tok::Ident(k) if k == "fix" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let x = self.ident()?;
                self.expect(Tok::Colon)?;
                let ann = self.ty()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::LBrace)?;
                let body = self.with_scope(&[x.as_str()], |p| p.term())?;
                self.expect(Tok::RBrace)?;
                Ok(Term::new(
                    TermKind::Fix {
                        name: x,
                        ann,
                        body: Box::new(body),
                    },
                    loc,
                ))
            }
            Tok::Ident(k) if k == "idxlam" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let i = self.ident()?;
                self.expect(Tok::Colon)?;
                let kind = self.kind()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::LBrace)?;
                let body = self.term()?;
                self.expect(Tok::RBrace)?;
                Ok(Term::new(
                    TermKind::IdxLam {
                        binder: i,
                        kind,
                        body: Box::new(body),
                    },
                    loc,
                ))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                let kind = if !self.scope.contains(&name) && self.prims.contains(&name) {
                    TermKind::Prim(name)
                } else {
                    TermKind::Var(name)
                };
                Ok(Term::new(kind, loc))
            }
            _ => Err(self.err(&[
                "identifier",
                "number",
                "`fun`",
                "`fix`",
                "`idxlam`",
                "`let`",
                "`case`",
                "`(`",
                "`<`",
            ])),
        }
    }
}
