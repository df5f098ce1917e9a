//! Recursive-descent parser for theory files and query strings.
//!
//! The surface syntax is token-oriented: newlines are whitespace, so
//! declarations may span lines and action bodies need no separators between
//! items. Identifier meaning is contextual — an identifier resolves first to
//! a parameter in scope, then to a fluent, then to a symbolic constant drawn
//! from any finite domain in scope.
//!
//! Numerals inside finite domains declare *symbols* ("0", "1"), and the
//! parser re-types numeral literals as those symbols wherever context forces
//! it: comparisons against a finite-domain fluent or parameter, update rules
//! for finite fluents, and ground action arguments. The re-typed constant
//! shares the interned string of the declaration, so symbol equality is
//! pointer identity in the common case.

use std::sync::Arc;

use expr_core::{BinOp, CmpOp, Expr, Formula, UnOp, Value};

use crate::ast::{
    ActionDecl, ActionKind, Domain, FluentDecl, GroundAction, Overrides, ParamDecl, Query,
    QueryKind, Span, TheorySpec,
};
use crate::error::ParseError;
use crate::lexer::{lex, Tok, Token};

/// Words with fixed grammatical meaning; declarations may not take them as
/// names.
const RESERVED: &[&str] = &[
    "theory", "fluent", "action", "init", "sensing", "likelihood", "poss", "cases", "gauss",
    "min", "max", "abs", "if", "and", "or", "not", "true", "false", "real", "after", "bel",
    "knows", "marginal", "bins", "range",
];

/// Parses a complete theory file.
pub fn parse_theory(src: &str) -> Result<TheorySpec, ParseError> {
    Parser::new(src)?.theory()
}

/// Parses a query string against an already-parsed theory (needed to resolve
/// fluent and action names and to type ground arguments).
pub fn parse_query(src: &str, spec: &TheorySpec) -> Result<Query, ParseError> {
    let mut p = Parser::new(src)?;
    let q = p.query(spec, src)?;
    if p.pos < p.toks.len() {
        return Err(p.err("unexpected input after the query"));
    }
    Ok(q)
}

/// Name-resolution scope for expressions and formulas.
struct Scope<'a> {
    fluents: &'a [FluentDecl],
    params: &'a [ParamDecl],
    /// `f@k` references are meaningful only in queries, where a whole
    /// trajectory is in view; theory axioms see a single transition.
    allow_history: bool,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: Span,
}

/// Canonical text of an integral numeral, for matching against finite-domain
/// symbols spelled as numbers.
fn integer_text(x: f64) -> Option<String> {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Some(format!("{}", x as i64))
    } else {
        None
    }
}

enum RawArg {
    Num(f64),
    Name(String),
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        let toks = lex(src)?;
        let line = src.bytes().filter(|b| *b == b'\n').count() as u32 + 1;
        let col = (src.len() - src.rfind('\n').map_or(0, |i| i + 1)) as u32 + 1;
        let eof = Span { offset: src.len(), len: 0, line, col };
        Ok(Parser { toks, pos: 0, eof })
    }

    // ---- token plumbing -------------------------------------------------

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map_or(self.eof, |t| t.span)
    }

    fn found(&self) -> String {
        self.toks
            .get(self.pos)
            .map_or_else(|| "end of input".to_string(), |t| t.tok.describe())
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::SyntaxError { span: self.span(), message: message.into() }
    }

    fn expected(&self, what: &str) -> ParseError {
        self.err(format!("expected {what}, found {}", self.found()))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<Span, ParseError> {
        let sp = self.span();
        if self.eat(&t) {
            Ok(sp)
        } else {
            Err(self.expected(what))
        }
    }

    fn expect_kw(&mut self, kw: &str, what: &str) -> Result<Span, ParseError> {
        let sp = self.span();
        if self.eat_kw(kw) {
            Ok(sp)
        } else {
            Err(self.expected(what))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let sp = self.span();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, sp))
            }
            _ => Err(self.expected(what)),
        }
    }

    /// An identifier introducing a declaration; reserved words are refused.
    fn expect_decl_name(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let (name, sp) = self.expect_ident(what)?;
        if RESERVED.contains(&name.as_str()) {
            return Err(ParseError::SyntaxError {
                span: sp,
                message: format!("`{name}` is a reserved word and cannot name a {what}"),
            });
        }
        Ok((name, sp))
    }

    fn expect_number(&mut self, what: &str) -> Result<(f64, Span), ParseError> {
        let sp = self.span();
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok((n, sp))
            }
            _ => Err(self.expected(what)),
        }
    }

    /// A number with an optional leading minus sign.
    fn signed_number(&mut self, what: &str) -> Result<(f64, Span), ParseError> {
        let sp = self.span();
        if self.eat(&Tok::Minus) {
            let (n, _) = self.expect_number(what)?;
            Ok((-n, sp))
        } else {
            self.expect_number(what).map(|(n, _)| (n, sp))
        }
    }

    // ---- theory files ---------------------------------------------------

    fn theory(&mut self) -> Result<TheorySpec, ParseError> {
        self.expect_kw("theory", "`theory <name>` at the start of the file")?;
        let (name, _) = self.expect_decl_name("theory name")?;

        let mut fluents: Vec<FluentDecl> = Vec::new();
        let mut actions: Vec<ActionDecl> = Vec::new();
        let mut init_p: Option<(Expr, Span)> = None;

        while self.peek().is_some() {
            if self.eat_kw("fluent") {
                let decl = self.fluent_decl(&fluents, &actions)?;
                fluents.push(decl);
            } else if self.eat_kw("action") {
                let decl = self.action_decl(&fluents, &actions)?;
                actions.push(decl);
            } else if self.at_kw("init") {
                let sp = self.span();
                self.pos += 1;
                if init_p.is_some() {
                    return Err(ParseError::DuplicateName { span: sp, name: "init".into() });
                }
                self.expect_kw("p", "`p` (the initial weight is written `init p = ...`)")?;
                self.expect(Tok::Eq, "`=` after `init p`")?;
                let cx = Scope { fluents: &fluents, params: &[], allow_history: false };
                init_p = Some((self.expr(&cx)?, sp));
            } else {
                return Err(self.expected("`fluent`, `action`, or `init`"));
            }
        }

        let (init_p, init_span) =
            init_p.ok_or_else(|| self.err("theory is missing its `init p = ...` declaration"))?;
        Ok(TheorySpec { name: name.into(), fluents, actions, init_p, init_span })
    }

    fn fluent_decl(
        &mut self,
        fluents: &[FluentDecl],
        actions: &[ActionDecl],
    ) -> Result<FluentDecl, ParseError> {
        let (name, span) = self.expect_decl_name("fluent name")?;
        if fluents.iter().any(|f| *f.name == name)
            || actions.iter().any(|a| *a.name == name)
        {
            return Err(ParseError::DuplicateName { span, name });
        }
        self.expect(Tok::Colon, "`:` after the fluent name")?;
        let domain = self.domain()?;
        Ok(FluentDecl { name: name.into(), domain, span })
    }

    fn domain(&mut self) -> Result<Domain, ParseError> {
        if self.eat_kw("real") {
            return Ok(Domain::Real);
        }
        if self.eat(&Tok::LBrace) {
            let mut vals: Vec<Arc<str>> = Vec::new();
            loop {
                let sp = self.span();
                let text = match self.peek() {
                    Some(Tok::Ident(s)) if !RESERVED.contains(&s.as_str()) => {
                        let s = s.clone();
                        self.pos += 1;
                        s
                    }
                    Some(Tok::Number(n)) => {
                        let text = integer_text(*n).ok_or_else(|| {
                            self.err("finite-domain numerals must be integers")
                        })?;
                        self.pos += 1;
                        text
                    }
                    _ => return Err(self.expected("a domain symbol (identifier or integer)")),
                };
                if vals.iter().any(|v| **v == text) {
                    return Err(ParseError::DuplicateName { span: sp, name: text });
                }
                vals.push(text.into());
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace, "`}` to close the domain")?;
            return Ok(Domain::Finite(vals));
        }
        Err(self.expected("a domain: `real` or `{ sym, ... }`"))
    }

    fn action_decl(
        &mut self,
        fluents: &[FluentDecl],
        actions: &[ActionDecl],
    ) -> Result<ActionDecl, ParseError> {
        let (name, span) = self.expect_decl_name("action name")?;
        if actions.iter().any(|a| *a.name == name)
            || fluents.iter().any(|f| *f.name == name)
        {
            return Err(ParseError::DuplicateName { span, name });
        }

        self.expect(Tok::LParen, "`(` to open the parameter list")?;
        let mut nominal: Vec<ParamDecl> = Vec::new();
        let mut actual: Vec<ParamDecl> = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                nominal.push(self.param_decl(fluents)?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            if self.eat(&Tok::Tilde) {
                loop {
                    actual.push(self.param_decl(fluents)?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`)` to close the parameter list")?;
        }
        for (i, p) in nominal.iter().chain(actual.iter()).enumerate() {
            if nominal
                .iter()
                .chain(actual.iter())
                .take(i)
                .any(|q| q.name == p.name)
            {
                return Err(ParseError::DuplicateName { span, name: p.name.to_string() });
            }
        }

        let sensing = self.eat_kw("sensing");
        if sensing && !actual.is_empty() {
            return Err(ParseError::SyntaxError {
                span,
                message: "sensing actions take no `~` actual parameters: the reading itself \
                          is the outcome"
                    .into(),
            });
        }
        let kind = if sensing {
            ActionKind::Sensing
        } else if actual.is_empty() {
            ActionKind::Deterministic
        } else {
            ActionKind::Noisy
        };

        self.expect(Tok::LBrace, "`{` to open the action body")?;
        let all_params: Vec<ParamDecl> =
            nominal.iter().cloned().chain(actual.iter().cloned()).collect();
        let mut precondition = Formula::True;
        let mut likelihood = Expr::num(1.0);
        let mut ssa: Vec<(usize, Expr)> = Vec::new();
        let mut saw_poss = false;
        let mut saw_lik = false;

        while !self.eat(&Tok::RBrace) {
            if self.peek().is_none() {
                return Err(self.expected("`}` to close the action body"));
            }
            let item_span = self.span();
            if self.eat_kw("likelihood") {
                if saw_lik {
                    return Err(ParseError::DuplicateName {
                        span: item_span,
                        name: "likelihood".into(),
                    });
                }
                self.expect(Tok::Eq, "`=` after `likelihood`")?;
                let cx = Scope { fluents, params: &all_params, allow_history: false };
                likelihood = self.expr(&cx)?;
                saw_lik = true;
            } else if self.eat_kw("poss") {
                if saw_poss {
                    return Err(ParseError::DuplicateName {
                        span: item_span,
                        name: "poss".into(),
                    });
                }
                self.expect(Tok::Eq, "`=` after `poss`")?;
                let cx = Scope { fluents, params: &all_params, allow_history: false };
                precondition = self.formula(&cx)?;
                saw_poss = true;
            } else {
                let (fname, fspan) =
                    self.expect_ident("a body item: `likelihood = ...`, `poss = ...`, or `f' = ...`")?;
                let slot = fluents
                    .iter()
                    .position(|f| *f.name == fname)
                    .ok_or(ParseError::UnknownIdentifier { span: fspan, name: fname.clone() })?;
                self.expect(Tok::Prime, "`'` (fluent updates are written `f' = ...`)")?;
                self.expect(Tok::Eq, "`=` in the fluent update")?;
                let cx = Scope { fluents, params: &all_params, allow_history: false };
                let mut e = self.expr(&cx)?;
                if ssa.iter().any(|(s, _)| *s == slot) {
                    return Err(ParseError::DuplicateName {
                        span: fspan,
                        name: format!("{fname}'"),
                    });
                }
                coerce_to_domain(&mut e, &fluents[slot].domain);
                ssa.push((slot, e));
            }
        }

        Ok(ActionDecl { name: name.into(), nominal, actual, kind, precondition, likelihood, ssa, span })
    }

    fn param_decl(&mut self, fluents: &[FluentDecl]) -> Result<ParamDecl, ParseError> {
        let (name, span) = self.expect_decl_name("parameter name")?;
        if fluents.iter().any(|f| *f.name == name) {
            return Err(ParseError::DuplicateName { span, name });
        }
        self.expect(Tok::Colon, "`:` after the parameter name")?;
        let domain = self.domain()?;
        Ok(ParamDecl { name: name.into(), domain })
    }

    // ---- queries --------------------------------------------------------

    fn query(&mut self, spec: &TheorySpec, src: &str) -> Result<Query, ParseError> {
        let cx = Scope { fluents: &spec.fluents, params: &[], allow_history: true };
        let kind = if self.eat_kw("bel") {
            QueryKind::Bel(self.formula(&cx)?)
        } else if self.eat_kw("knows") {
            QueryKind::Knows(self.formula(&cx)?)
        } else if self.eat_kw("marginal") {
            let (fname, fsp) = self.expect_ident("a fluent name")?;
            let fluent = spec
                .fluent_slot(&fname)
                .ok_or(ParseError::UnknownIdentifier { span: fsp, name: fname })?;
            // bins/range are parsed after the action list below.
            QueryKind::Marginal { fluent, bins: 0, range: (0.0, 0.0) }
        } else {
            return Err(self.expected("`bel`, `knows`, or `marginal`"));
        };

        self.expect_kw("after", "`after [...]` with the intended actions")?;
        self.expect(Tok::LBracket, "`[` to open the action list")?;
        let mut alpha = Vec::new();
        if !self.eat(&Tok::RBracket) {
            loop {
                alpha.push(self.ground_action(spec)?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket, "`]` to close the action list")?;
        }

        let kind = if let QueryKind::Marginal { fluent, .. } = kind {
            let mut bins: Option<usize> = None;
            let mut range: Option<(f64, f64)> = None;
            loop {
                if self.eat_kw("bins") {
                    self.expect(Tok::Eq, "`=` after `bins`")?;
                    let (n, nsp) = self.expect_number("the number of bins")?;
                    let n_int = integer_text(n)
                        .and(if n >= 1.0 { Some(n as usize) } else { None })
                        .ok_or(ParseError::SyntaxError {
                            span: nsp,
                            message: "`bins` must be a positive integer".into(),
                        })?;
                    bins = Some(n_int);
                } else if self.eat_kw("range") {
                    self.expect(Tok::Eq, "`=` after `range`")?;
                    let (lo, losp) = self.signed_number("the range low bound")?;
                    self.expect(Tok::Comma, "`,` between the range bounds")?;
                    let (hi, _) = self.signed_number("the range high bound")?;
                    // NaN bounds fail this check too.
                    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
                        return Err(ParseError::SyntaxError {
                            span: losp,
                            message: format!("empty range: {lo} is not below {hi}"),
                        });
                    }
                    range = Some((lo, hi));
                } else {
                    break;
                }
            }
            match (bins, range) {
                (Some(bins), Some(range)) => QueryKind::Marginal { fluent, bins, range },
                _ => {
                    return Err(
                        self.err("marginal queries need both `bins=<n>` and `range=<lo>,<hi>`")
                    )
                }
            }
        } else {
            kind
        };

        Ok(Query { kind, alpha, overrides: Overrides::default(), source: src.trim().to_string() })
    }

    fn ground_action(&mut self, spec: &TheorySpec) -> Result<GroundAction, ParseError> {
        let (name, span) = self.expect_ident("an action name")?;
        let action = spec
            .action_index(&name)
            .ok_or(ParseError::UnknownIdentifier { span, name: name.clone() })?;
        let decl = &spec.actions[action];

        self.expect(Tok::LParen, "`(` to open the argument list")?;
        let mut raw: Vec<(RawArg, Span)> = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                raw.push(self.raw_arg()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen, "`)` to close the argument list")?;
        }

        let n = decl.nominal.len();
        let m = decl.actual.len();
        let with_actuals = if raw.len() == n {
            false
        } else if m > 0 && raw.len() == n + m {
            true
        } else {
            let expected =
                if m > 0 { format!("{n} or {}", n + m) } else { n.to_string() };
            return Err(ParseError::ArityMismatch { span, action: name, expected, got: raw.len() });
        };

        let mut args = raw.into_iter();
        let mut nominal_args = Vec::with_capacity(n);
        for p in &decl.nominal {
            let (arg, asp) = args.next().expect("arity checked above");
            nominal_args.push(type_arg(arg, asp, p, &name)?);
        }
        let actual_args = if with_actuals {
            let mut vals = Vec::with_capacity(m);
            for p in &decl.actual {
                let (arg, asp) = args.next().expect("arity checked above");
                vals.push(type_arg(arg, asp, p, &name)?);
            }
            Some(vals)
        } else {
            None
        };

        Ok(GroundAction { action, nominal_args, actual_args })
    }

    fn raw_arg(&mut self) -> Result<(RawArg, Span), ParseError> {
        let sp = self.span();
        if self.eat(&Tok::Minus) {
            let (n, _) = self.expect_number("a number after `-`")?;
            return Ok((RawArg::Num(-n), sp));
        }
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok((RawArg::Num(n), sp))
            }
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((RawArg::Name(s), sp))
            }
            _ => Err(self.expected("an argument (number or symbol)")),
        }
    }

    // ---- expressions ----------------------------------------------------

    fn expr(&mut self, cx: &Scope<'_>) -> Result<Expr, ParseError> {
        let mut lhs = self.term(cx)?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term(cx)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self, cx: &Scope<'_>) -> Result<Expr, ParseError> {
        let mut lhs = self.unary(cx)?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary(cx)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self, cx: &Scope<'_>) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            let e = self.unary(cx)?;
            // Fold `-literal` so printed constants round-trip exactly.
            return Ok(match e {
                Expr::Const(Value::Real(x)) => Expr::num(-x),
                e => Expr::Unary(UnOp::Neg, Box::new(e)),
            });
        }
        self.primary(cx)
    }

    fn primary(&mut self, cx: &Scope<'_>) -> Result<Expr, ParseError> {
        let sp = self.span();
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(Expr::num(n))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr(cx)?;
                self.expect(Tok::RParen, "`)` to close the expression")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                match name.as_str() {
                    "gauss" => {
                        self.expect(Tok::LParen, "`(` after `gauss`")?;
                        let arg = self.expr(cx)?;
                        self.expect(Tok::Semi, "`;` between the gauss argument and its mean")?;
                        let mean = self.expr(cx)?;
                        self.expect(Tok::Comma, "`,` between the gauss mean and variance")?;
                        let variance = self.expr(cx)?;
                        self.expect(Tok::RParen, "`)` to close `gauss`")?;
                        Ok(Expr::Gauss {
                            arg: Box::new(arg),
                            mean: Box::new(mean),
                            variance: Box::new(variance),
                        })
                    }
                    "cases" => self.cases(cx),
                    "min" | "max" => {
                        self.expect(Tok::LParen, "`(` after the function name")?;
                        let a = self.expr(cx)?;
                        self.expect(Tok::Comma, "`,` between the two arguments")?;
                        let b = self.expr(cx)?;
                        self.expect(Tok::RParen, "`)` to close the call")?;
                        let op = if name == "min" { BinOp::Min } else { BinOp::Max };
                        Ok(Expr::Binary(op, Box::new(a), Box::new(b)))
                    }
                    "abs" => {
                        self.expect(Tok::LParen, "`(` after `abs`")?;
                        let a = self.expr(cx)?;
                        self.expect(Tok::RParen, "`)` to close the call")?;
                        Ok(Expr::Unary(UnOp::Abs, Box::new(a)))
                    }
                    _ => self.resolve_ident(&name, sp, cx),
                }
            }
            _ => Err(self.expected("an expression")),
        }
    }

    fn cases(&mut self, cx: &Scope<'_>) -> Result<Expr, ParseError> {
        self.expect(Tok::LBrace, "`{` after `cases`")?;
        let mut branches: Vec<(Formula, Expr)> = Vec::new();
        let mut default: Option<Expr> = None;
        loop {
            let e = self.expr(cx)?;
            if self.eat_kw("if") {
                let g = self.formula(cx)?;
                branches.push((g, e));
            } else {
                default = Some(e);
            }
            if self.eat(&Tok::Semi) {
                if default.is_some() {
                    return Err(self.err("the default branch of `cases` must come last"));
                }
                continue;
            }
            break;
        }
        self.expect(Tok::RBrace, "`}` to close `cases`")?;
        let default = default.ok_or_else(|| {
            self.err("`cases` needs a final default branch (an expression without `if`)")
        })?;
        Ok(Expr::Cases { branches, default: Box::new(default) })
    }

    fn resolve_ident(
        &mut self,
        name: &str,
        span: Span,
        cx: &Scope<'_>,
    ) -> Result<Expr, ParseError> {
        if let Some(p) = cx.params.iter().find(|p| *p.name == *name) {
            return Ok(Expr::Param { name: p.name.clone() });
        }
        if let Some(slot) = cx.fluents.iter().position(|f| *f.name == *name) {
            let history = if self.peek() == Some(&Tok::At) {
                if !cx.allow_history {
                    return Err(self.err(
                        "history references (`f@k`) are only allowed in queries, not in \
                         theory axioms",
                    ));
                }
                self.pos += 1;
                let (k, ksp) = self.expect_number("a history index")?;
                let k = integer_text(k)
                    .and(if k >= 0.0 { Some(k as usize) } else { None })
                    .ok_or(ParseError::SyntaxError {
                        span: ksp,
                        message: "history indices must be non-negative integers".into(),
                    })?;
                Some(k)
            } else {
                None
            };
            return Ok(Expr::Fluent { name: cx.fluents[slot].name.clone(), slot, history });
        }
        // A symbolic constant of some finite domain in scope; parameters
        // shadow fluents, matching identifier resolution above.
        for p in cx.params {
            if let Some(sym) = p.domain.find_sym(name) {
                return Ok(Expr::Const(Value::Sym(sym)));
            }
        }
        for f in cx.fluents {
            if let Some(sym) = f.domain.find_sym(name) {
                return Ok(Expr::Const(Value::Sym(sym)));
            }
        }
        Err(ParseError::UnknownIdentifier { span, name: name.to_string() })
    }

    // ---- formulas -------------------------------------------------------

    fn formula(&mut self, cx: &Scope<'_>) -> Result<Formula, ParseError> {
        self.implies(cx)
    }

    fn implies(&mut self, cx: &Scope<'_>) -> Result<Formula, ParseError> {
        let lhs = self.disj(cx)?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.implies(cx)?; // right-associative
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disj(&mut self, cx: &Scope<'_>) -> Result<Formula, ParseError> {
        let mut lhs = self.conj(cx)?;
        while self.eat_kw("or") {
            let rhs = self.conj(cx)?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self, cx: &Scope<'_>) -> Result<Formula, ParseError> {
        let mut lhs = self.negation(cx)?;
        while self.eat_kw("and") {
            let rhs = self.negation(cx)?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn negation(&mut self, cx: &Scope<'_>) -> Result<Formula, ParseError> {
        if self.eat_kw("not") {
            return Ok(Formula::not(self.negation(cx)?));
        }
        self.atom(cx)
    }

    fn atom(&mut self, cx: &Scope<'_>) -> Result<Formula, ParseError> {
        if self.eat_kw("true") {
            return Ok(Formula::True);
        }
        if self.eat_kw("false") {
            return Ok(Formula::False);
        }
        // `(` is ambiguous: it may open a parenthesized formula or a
        // parenthesized arithmetic expression. Try the formula reading and
        // fall back to a comparison on failure.
        if self.peek() == Some(&Tok::LParen) {
            let save = self.pos;
            self.pos += 1;
            if let Ok(f) = self.formula(cx) {
                if self.eat(&Tok::RParen) {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        let mut lhs = self.expr(cx)?;
        let op = match self.peek() {
            Some(Tok::Eq) => CmpOp::Eq,
            Some(Tok::Ne) => CmpOp::Ne,
            Some(Tok::Lt) => CmpOp::Lt,
            Some(Tok::Le) => CmpOp::Le,
            Some(Tok::Gt) => CmpOp::Gt,
            Some(Tok::Ge) => CmpOp::Ge,
            _ => {
                return Err(
                    self.expected("a comparison operator (`=`, `!=`, `<`, `<=`, `>`, `>=`)")
                )
            }
        };
        self.pos += 1;
        let mut rhs = self.expr(cx)?;
        if let Some(dom) = finite_domain_of(cx, &lhs) {
            coerce_to_domain(&mut rhs, &dom);
        } else if let Some(dom) = finite_domain_of(cx, &rhs) {
            coerce_to_domain(&mut lhs, &dom);
        }
        Ok(Formula::Compare(op, Box::new(lhs), Box::new(rhs)))
    }
}

/// The finite domain an expression is statically known to range over, if any.
fn finite_domain_of(cx: &Scope<'_>, e: &Expr) -> Option<Domain> {
    match e {
        Expr::Fluent { slot, .. } => match &cx.fluents[*slot].domain {
            d @ Domain::Finite(_) => Some(d.clone()),
            Domain::Real => None,
        },
        Expr::Param { name } => cx
            .params
            .iter()
            .find(|p| p.name == *name)
            .and_then(|p| match &p.domain {
                d @ Domain::Finite(_) => Some(d.clone()),
                Domain::Real => None,
            }),
        _ => None,
    }
}

/// Re-types integral numeral constants as symbols of `dom` wherever the
/// domain spells them; recurses through `cases` so piecewise definitions of
/// finite fluents work naturally. Non-matching leaves are left alone for the
/// validator to flag.
fn coerce_to_domain(e: &mut Expr, dom: &Domain) {
    match e {
        Expr::Const(Value::Real(x)) => {
            if let Some(sym) = integer_text(*x).and_then(|t| dom.find_sym(&t)) {
                *e = Expr::Const(Value::Sym(sym));
            }
        }
        Expr::Cases { branches, default } => {
            for (_, v) in branches.iter_mut() {
                coerce_to_domain(v, dom);
            }
            coerce_to_domain(default, dom);
        }
        _ => {}
    }
}

/// Types one raw query argument against a parameter declaration.
fn type_arg(
    raw: RawArg,
    span: Span,
    param: &ParamDecl,
    action: &str,
) -> Result<Value, ParseError> {
    match (&param.domain, raw) {
        (Domain::Real, RawArg::Num(x)) => Ok(Value::Real(x)),
        (Domain::Real, RawArg::Name(s)) => Err(ParseError::DomainMismatch {
            span,
            message: format!(
                "parameter `{}` of `{action}` is real, got symbol `{s}`",
                param.name
            ),
        }),
        (Domain::Finite(vals), RawArg::Name(s)) => {
            param.domain.find_sym(&s).map(Value::Sym).ok_or_else(|| {
                ParseError::DomainMismatch {
                    span,
                    message: format!(
                        "`{s}` is not in the domain of parameter `{}` of `{action}` \
                         (one of: {})",
                        param.name,
                        vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
                    ),
                }
            })
        }
        (Domain::Finite(vals), RawArg::Num(x)) => integer_text(x)
            .and_then(|t| param.domain.find_sym(&t))
            .map(Value::Sym)
            .ok_or_else(|| ParseError::DomainMismatch {
                span,
                message: format!(
                    "`{x}` is not in the domain of parameter `{}` of `{action}` (one of: {})",
                    param.name,
                    vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
                ),
            }),
    }
}
