//! Recursive-descent parser.
//!
//! Types are resolved while parsing: typedefs are expanded, record and enum
//! declarations are registered in order, and array lengths are evaluated as
//! constant expressions.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;
use crate::solver::{BinOp, Ty};

type PResult<T> = Result<T, FrontendError>;

pub fn parse_translation_unit(source: &str) -> PResult<Program> {
    let toks = tokenize(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        typedefs: HashMap::new(),
        record_names: HashMap::new(),
        enum_consts: HashMap::new(),
        program: Program::default(),
    };
    p.translation_unit()?;
    Ok(p.program)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    typedefs: HashMap<String, Type>,
    record_names: HashMap<(bool, String), usize>,
    enum_consts: HashMap<String, i32>,
    program: Program,
}

const TYPE_WORDS: &[&str] = &[
    "int", "char", "void", "unsigned", "signed", "struct", "union", "enum", "const", "volatile",
    "short", "long", "float", "double", "_Bool",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.advance().span)
        } else {
            Err(self.error(format!("expected `{p}`")))
        }
    }

    fn error(&self, msg: impl Into<String>) -> FrontendError {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v, ..) => format!("`{v}`"),
            Tok::Char(_) => "character literal".into(),
            Tok::Str => "string literal".into(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        };
        FrontendError::parse(self.span(), format!("{}, found {found}", msg.into()))
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let sp = self.advance().span;
                Ok((s, sp))
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn starts_type(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => TYPE_WORDS.contains(&s.as_str()) || self.typedefs.contains_key(s),
            _ => false,
        }
    }

    // ------------------------------------------------------------------
    // top level

    fn translation_unit(&mut self) -> PResult<()> {
        while *self.peek() != Tok::Eof {
            let start = self.pos;
            match self.external_decl() {
                Ok(()) => {}
                Err(e) if e.is_unsupported() => {
                    let name = self.decl_name_from(start);
                    self.pos = start;
                    self.skip_external_decl();
                    let e = match e {
                        FrontendError::Unsupported { span, construct, .. } => FrontendError::Unsupported {
                            span,
                            construct,
                            function: name,
                        },
                        e => e,
                    };
                    log::debug!("{e}");
                    self.program.skipped.push(e);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Best-effort name of the declaration starting at token `start`.
    fn decl_name_from(&self, start: usize) -> Option<String> {
        let mut last = None;
        for t in &self.toks[start..] {
            match &t.tok {
                Tok::Ident(s) if !is_keyword(s) && !self.typedefs.contains_key(s) => last = Some(s.clone()),
                Tok::Punct("(") | Tok::Punct(";") | Tok::Punct("=") | Tok::Punct("{") => {
                    if last.is_some() {
                        break;
                    }
                }
                _ => {}
            }
        }
        last
    }

    /// Skips to the end of the declaration or function body at the current position.
    fn skip_external_decl(&mut self) {
        let mut depth = 0i32;
        loop {
            match self.peek().clone() {
                Tok::Eof => return,
                Tok::Punct("(") | Tok::Punct("[") => depth += 1,
                Tok::Punct(")") | Tok::Punct("]") => depth -= 1,
                Tok::Punct(";") if depth <= 0 => {
                    self.advance();
                    return;
                }
                Tok::Punct("{") if depth <= 0 => {
                    self.skip_braces();
                    self.eat_punct(";");
                    return;
                }
                _ => {}
            }
            self.advance();
        }
    }

    fn skip_braces(&mut self) {
        let mut depth = 0;
        loop {
            match self.advance().tok {
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => {
                    depth -= 1;
                    if depth == 0 {
                        return;
                    }
                }
                Tok::Eof => return,
                _ => {}
            }
        }
    }

    fn external_decl(&mut self) -> PResult<()> {
        if self.eat_word("typedef") {
            let base = self.base_type()?;
            loop {
                let (name, ty, _) = self.declarator(base.clone(), true)?;
                let name = name.ok_or_else(|| self.error("expected typedef name"))?;
                self.typedefs.insert(name, ty);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect(";")?;
            return Ok(());
        }
        let _ = self.eat_word("static") || self.eat_word("extern");
        let base_span = self.span();
        let base = self.base_type()?;
        if self.eat_punct(";") {
            return Ok(());
        }
        let (name, ty, span) = self.declarator(base.clone(), true)?;
        let name = name.ok_or_else(|| FrontendError::parse(base_span, "expected declarator name"))?;
        if self.is_punct("(") {
            return self.function_rest(name, ty, span);
        }
        let mut decl = (name, ty, span);
        loop {
            let (name, ty, span) = decl;
            let d = self.var_decl_rest(name, ty, span)?;
            self.program.globals.push(d);
            if !self.eat_punct(",") {
                break;
            }
            let (n, t, s) = self.declarator(base.clone(), true)?;
            let n = n.ok_or_else(|| self.error("expected declarator name"))?;
            decl = (n, t, s);
        }
        self.expect(";")?;
        Ok(())
    }

    fn function_rest(&mut self, name: String, ret: Type, span: Span) -> PResult<()> {
        self.expect("(")?;
        let mut params = Vec::new();
        if self.is_word("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.advance();
        }
        if !self.is_punct(")") {
            loop {
                if self.is_punct("...") {
                    return Err(FrontendError::unsupported(self.span(), "variadic parameters"));
                }
                let base = self.base_type()?;
                let (pname, ty, pspan) = self.declarator(base, true)?;
                let ty = match ty {
                    Type::Void => return Err(FrontendError::type_error(pspan, "parameter of type void")),
                    t => t,
                };
                params.push(Param {
                    name: pname.unwrap_or_default(),
                    ty,
                    span: pspan,
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        if self.eat_punct(";") {
            self.program.externs.push(ExternDecl {
                name,
                ret,
                params: params.into_iter().map(|p| p.ty.decayed()).collect(),
                span,
            });
            return Ok(());
        }
        if !self.is_punct("{") {
            return Err(self.error("expected `{` or `;` after function declarator"));
        }
        if params.iter().any(|p| p.name.is_empty()) {
            return Err(FrontendError::parse(span, "unnamed parameter in function definition"));
        }
        let body_start = self.pos;
        match self.block_items() {
            Ok(body) => {
                self.program
                    .functions
                    .push(FunctionDef::new(name, params, ret, body, span));
                Ok(())
            }
            Err(FrontendError::Unsupported { span: s, construct, .. }) => {
                self.pos = body_start;
                self.skip_braces();
                let e = FrontendError::Unsupported {
                    span: s,
                    construct,
                    function: Some(name),
                };
                log::debug!("{e}");
                self.program.skipped.push(e);
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn var_decl_rest(&mut self, name: String, mut ty: Type, span: Span) -> PResult<VarDecl> {
        let init = if self.eat_punct("=") {
            Some(self.initializer()?)
        } else {
            None
        };
        // `int a[] = {..}`: length from the initializer
        if let (Type::Array(e, 0), Some(Init::List(items))) = (&ty, &init) {
            if items.is_empty() {
                return Err(FrontendError::NegativeArrayLength { span, len: 0 });
            }
            ty = Type::Array(e.clone(), items.len() as u32);
        }
        if let Type::Array(_, 0) = ty {
            return Err(FrontendError::NegativeArrayLength { span, len: 0 });
        }
        if ty == Type::Void {
            return Err(FrontendError::type_error(span, format!("variable `{name}` declared void")));
        }
        Ok(VarDecl {
            name,
            ty,
            init,
            span,
            slot: None,
        })
    }

    fn initializer(&mut self) -> PResult<Init> {
        if self.eat_punct("{") {
            let mut items = Vec::new();
            while !self.is_punct("}") {
                items.push(self.initializer()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect("}")?;
            Ok(Init::List(items))
        } else {
            Ok(Init::Expr(self.expr()?))
        }
    }

    // ------------------------------------------------------------------
    // types

    fn base_type(&mut self) -> PResult<Type> {
        while self.eat_word("const") || self.eat_word("volatile") {}
        let span = self.span();
        let Tok::Ident(w) = self.peek().clone() else {
            return Err(self.error("expected type"));
        };
        let ty = match w.as_str() {
            "int" => {
                self.advance();
                Type::int()
            }
            "char" => {
                self.advance();
                Type::Int(Ty::I8)
            }
            "void" => {
                self.advance();
                Type::Void
            }
            "signed" => {
                self.advance();
                if self.eat_word("char") {
                    Type::Int(Ty::I8)
                } else {
                    self.eat_word("int");
                    Type::int()
                }
            }
            "unsigned" => {
                self.advance();
                if self.is_word("char") || self.is_word("short") || self.is_word("long") {
                    return Err(FrontendError::unsupported(span, format!("unsigned {}", self.ident_text())));
                }
                self.eat_word("int");
                Type::Int(Ty::U32)
            }
            "struct" | "union" => self.record_type(w == "union")?,
            "enum" => self.enum_type()?,
            "short" | "long" | "float" | "double" | "_Bool" => {
                return Err(FrontendError::unsupported(span, format!("type `{w}`")));
            }
            _ => match self.typedefs.get(&w) {
                Some(t) => {
                    let t = t.clone();
                    self.advance();
                    t
                }
                None => return Err(self.error("expected type")),
            },
        };
        while self.eat_word("const") || self.eat_word("volatile") {}
        Ok(ty)
    }

    fn ident_text(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => String::new(),
        }
    }

    fn record_type(&mut self, is_union: bool) -> PResult<Type> {
        let span = self.advance().span;
        let name = match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Some(s)
            }
            _ => None,
        };
        let id = match &name {
            Some(n) => match self.record_names.get(&(is_union, n.clone())) {
                Some(&id) => id,
                None => {
                    let id = self.program.records.len();
                    self.program.records.push(RecordDecl {
                        name: n.clone(),
                        is_union,
                        members: Vec::new(),
                        size: 0,
                        complete: false,
                        span,
                    });
                    self.record_names.insert((is_union, n.clone()), id);
                    id
                }
            },
            None => {
                if !self.is_punct("{") {
                    return Err(self.error("expected record name or `{`"));
                }
                let id = self.program.records.len();
                self.program.records.push(RecordDecl {
                    name: format!("__anon{id}"),
                    is_union,
                    members: Vec::new(),
                    size: 0,
                    complete: false,
                    span,
                });
                id
            }
        };
        if self.eat_punct("{") {
            if self.program.records[id].complete {
                return Err(FrontendError::type_error(span, "record redefined"));
            }
            let mut members: Vec<Member> = Vec::new();
            let mut offset = 0u32;
            let mut size = 0u32;
            while !self.eat_punct("}") {
                let base = self.base_type()?;
                loop {
                    let (mname, mty, mspan) = self.declarator(base.clone(), true)?;
                    let mname = mname.ok_or_else(|| self.error("expected member name"))?;
                    if let Type::Record(r) = &mty {
                        if !self.program.records[*r].complete {
                            return Err(FrontendError::type_error(mspan, "member of incomplete record type"));
                        }
                    }
                    if mty == Type::Void || matches!(mty, Type::Array(_, 0)) {
                        return Err(FrontendError::type_error(mspan, "member has no size"));
                    }
                    if members.iter().any(|m| m.name == mname) {
                        return Err(FrontendError::type_error(mspan, format!("duplicate member `{mname}`")));
                    }
                    let msize = mty.size(&self.program.records);
                    let moff = if is_union { 0 } else { offset };
                    members.push(Member {
                        name: mname,
                        ty: mty,
                        offset: moff,
                    });
                    offset += msize;
                    size = if is_union { size.max(msize) } else { offset };
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect(";")?;
            }
            if members.is_empty() {
                return Err(FrontendError::type_error(span, "empty record"));
            }
            let r = &mut self.program.records[id];
            r.members = members;
            r.size = size;
            r.complete = true;
            r.span = span;
        }
        Ok(Type::Record(id))
    }

    fn enum_type(&mut self) -> PResult<Type> {
        let span = self.advance().span;
        let name = match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Some(s)
            }
            _ => None,
        };
        if self.eat_punct("{") {
            let mut items = Vec::new();
            let mut next: i64 = 0;
            while !self.is_punct("}") {
                let (n, nspan) = self.ident()?;
                if self.eat_punct("=") {
                    let e = self.conditional()?;
                    next = self.const_eval(&e)?;
                }
                let v = i32::try_from(next)
                    .map_err(|_| FrontendError::type_error(nspan, "enumerator out of range"))?;
                if self.enum_consts.insert(n.clone(), v).is_some() {
                    return Err(FrontendError::type_error(nspan, format!("enumerator `{n}` redefined")));
                }
                items.push((n, v));
                next += 1;
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect("}")?;
            self.program.enums.push(EnumDecl { name, items, span });
        }
        Ok(Type::int())
    }

    /// Parses pointer stars, the name, and array suffixes.
    fn declarator(&mut self, base: Type, allow_name: bool) -> PResult<(Option<String>, Type, Span)> {
        let mut ty = base;
        let mut span = self.span();
        while self.eat_punct("*") {
            while self.eat_word("const") || self.eat_word("volatile") {}
            ty = match ty {
                Type::Void => Type::VoidPtr,
                t => Type::Pointer(Box::new(t)),
            };
        }
        if self.is_punct("(") && matches!(self.peek_at(1), Tok::Punct("*")) {
            return Err(FrontendError::unsupported(self.span(), "function pointer"));
        }
        let mut name = None;
        if allow_name {
            if let Tok::Ident(s) = self.peek().clone() {
                if !is_keyword(&s) {
                    span = self.advance().span;
                    name = Some(s);
                }
            }
        }
        if self.is_punct("(") && name.is_none() && !allow_name {
            return Err(FrontendError::unsupported(self.span(), "function type"));
        }
        let mut dims = Vec::new();
        while self.is_punct("[") {
            let bspan = self.advance().span;
            if self.eat_punct("]") {
                dims.push(0u32);
                continue;
            }
            let e = self.expr()?;
            let n = self.const_eval(&e)?;
            self.expect("]")?;
            if n <= 0 {
                return Err(FrontendError::NegativeArrayLength { span: bspan, len: n });
            }
            let n = u32::try_from(n).map_err(|_| FrontendError::type_error(bspan, "array too large"))?;
            dims.push(n);
        }
        if let Type::Record(r) = &ty {
            if !self.program.records[*r].complete && !dims.is_empty() {
                return Err(FrontendError::type_error(span, "array of incomplete record type"));
            }
        }
        for (i, n) in dims.iter().enumerate().rev() {
            if *n == 0 && i != 0 {
                return Err(FrontendError::NegativeArrayLength { span, len: 0 });
            }
            if ty == Type::Void {
                return Err(FrontendError::type_error(span, "array of void"));
            }
            ty = Type::Array(Box::new(ty), *n);
        }
        Ok((name, ty, span))
    }

    /// `(type)` in casts and `sizeof`.
    fn type_name(&mut self) -> PResult<Type> {
        let base = self.base_type()?;
        let (_, ty, _) = self.declarator(base, false)?;
        Ok(ty)
    }

    fn const_eval(&self, e: &Expr) -> PResult<i64> {
        let v = match &e.kind {
            ExprKind::Int(b, t) => t.as_i64(*b),
            ExprKind::Var(n, _) => match self.enum_consts.get(n) {
                Some(v) => *v as i64,
                None => return Err(FrontendError::type_error(e.span, format!("`{n}` is not a constant"))),
            },
            ExprKind::SizeofType(t) => t.size(&self.program.records) as i64,
            ExprKind::Unary(op, a) => {
                let a = self.const_eval(a)?;
                match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Not => (a == 0) as i64,
                    UnaryOp::BitNot => !a,
                    _ => return Err(FrontendError::type_error(e.span, "not a constant expression")),
                }
            }
            ExprKind::Binary(op, a, b) => {
                let (a, b) = (self.const_eval(a)?, self.const_eval(b)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div | BinOp::Rem if b == 0 => {
                        return Err(FrontendError::type_error(e.span, "division by zero in constant"))
                    }
                    BinOp::Div => a / b,
                    BinOp::Rem => a % b,
                    BinOp::Shl => a << (b & 31),
                    BinOp::Shr => a >> (b & 31),
                    BinOp::BitAnd => a & b,
                    BinOp::BitOr => a | b,
                    BinOp::BitXor => a ^ b,
                    BinOp::Lt => (a < b) as i64,
                    BinOp::Le => (a <= b) as i64,
                    BinOp::Gt => (a > b) as i64,
                    BinOp::Ge => (a >= b) as i64,
                    BinOp::Eq => (a == b) as i64,
                    BinOp::Ne => (a != b) as i64,
                    BinOp::LAnd => (a != 0 && b != 0) as i64,
                    BinOp::LOr => (a != 0 || b != 0) as i64,
                }
            }
            ExprKind::Cast(Type::Int(t), a) => t.as_i64(t.normalize(self.const_eval(a)? as u32)),
            _ => return Err(FrontendError::type_error(e.span, "not a constant expression")),
        };
        if v < i32::MIN as i64 || v > u32::MAX as i64 {
            return Err(FrontendError::type_error(e.span, "constant out of range"));
        }
        Ok(v)
    }

    // ------------------------------------------------------------------
    // statements

    fn block_items(&mut self) -> PResult<Vec<Stmt>> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            if *self.peek() == Tok::Eof {
                return Err(self.error("expected `}`"));
            }
            self.block_item(&mut out)?;
        }
        Ok(out)
    }

    fn block_item(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        if self.is_word("static") || self.is_word("extern") {
            return Err(FrontendError::unsupported(self.span(), "storage class in block scope"));
        }
        if self.is_word("typedef") {
            return Err(FrontendError::unsupported(self.span(), "typedef in block scope"));
        }
        if self.starts_type() {
            let base = self.base_type()?;
            if self.eat_punct(";") {
                return Ok(());
            }
            loop {
                let (name, ty, span) = self.declarator(base.clone(), true)?;
                let name = name.ok_or_else(|| self.error("expected variable name"))?;
                let d = self.var_decl_rest(name, ty, span)?;
                out.push(Stmt::new(StmtKind::Decl(d), span));
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect(";")?;
            return Ok(());
        }
        out.push(self.statement()?);
        Ok(())
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            Tok::Punct("{") => return Ok(Stmt::new(StmtKind::Block(self.block_items()?), span)),
            Tok::Punct(";") => {
                self.advance();
                return Ok(Stmt::new(StmtKind::Empty, span));
            }
            _ => String::new(),
        };
        match kw.as_str() {
            "if" => {
                self.advance();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let then = Box::new(self.sub_statement()?);
                let els = if self.eat_word("else") {
                    Some(Box::new(self.sub_statement()?))
                } else {
                    None
                };
                Ok(Stmt::new(StmtKind::If { cond, then, els }, span))
            }
            "while" => {
                self.advance();
                self.expect("(")?;
                let cond = self.expr()?;
                self.expect(")")?;
                let body = Box::new(self.sub_statement()?);
                Ok(Stmt::new(StmtKind::While { cond, body }, span))
            }
            "for" => {
                self.advance();
                self.expect("(")?;
                let init = if self.eat_punct(";") {
                    None
                } else if self.starts_type() {
                    let mut v = Vec::new();
                    self.block_item(&mut v)?;
                    if v.len() != 1 {
                        return Err(FrontendError::unsupported(span, "multiple declarations in for-init"));
                    }
                    v.pop().map(Box::new)
                } else {
                    let s = self.simple_statement()?;
                    self.expect(";")?;
                    Some(Box::new(s))
                };
                let cond = if self.is_punct(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(";")?;
                let step = if self.is_punct(")") {
                    None
                } else {
                    Some(Box::new(self.simple_statement()?))
                };
                self.expect(")")?;
                let body = Box::new(self.sub_statement()?);
                Ok(Stmt::new(
                    StmtKind::For {
                        init,
                        cond,
                        step,
                        body,
                    },
                    span,
                ))
            }
            "switch" => {
                self.advance();
                self.expect("(")?;
                let scrutinee = self.expr()?;
                self.expect(")")?;
                self.expect("{")?;
                let mut arms: Vec<SwitchArm> = Vec::new();
                let mut seen = Vec::new();
                while !self.eat_punct("}") {
                    let lspan = self.span();
                    let label = if self.eat_word("case") {
                        let e = self.conditional()?;
                        let v = self.const_eval(&e)?;
                        self.expect(":")?;
                        Some(CaseLabel::Case(v as u32 as i32))
                    } else if self.eat_word("default") {
                        self.expect(":")?;
                        Some(CaseLabel::Default)
                    } else {
                        None
                    };
                    match label {
                        Some(l) => {
                            if seen.contains(&l) {
                                return Err(FrontendError::type_error(lspan, "duplicate case label"));
                            }
                            seen.push(l);
                            match arms.last_mut() {
                                Some(a) if a.body.is_empty() => a.labels.push(l),
                                _ => arms.push(SwitchArm {
                                    labels: vec![l],
                                    body: Vec::new(),
                                }),
                            }
                        }
                        None => {
                            let Some(arm) = arms.last_mut() else {
                                return Err(self.error("expected `case` or `default`"));
                            };
                            let mut body = std::mem::take(&mut arm.body);
                            self.block_item(&mut body)?;
                            arms.last_mut().unwrap().body = body;
                        }
                    }
                }
                Ok(Stmt::new(StmtKind::Switch { scrutinee, arms }, span))
            }
            "break" => {
                self.advance();
                self.expect(";")?;
                Ok(Stmt::new(StmtKind::Break, span))
            }
            "continue" => {
                self.advance();
                self.expect(";")?;
                Ok(Stmt::new(StmtKind::Continue, span))
            }
            "return" => {
                self.advance();
                let e = if self.is_punct(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(";")?;
                Ok(Stmt::new(StmtKind::Return(e), span))
            }
            "do" => Err(FrontendError::unsupported(span, "do-while loop")),
            "goto" => Err(FrontendError::unsupported(span, "goto")),
            "case" | "default" => Err(self.error("case label outside switch")),
            "else" => Err(self.error("`else` without `if`")),
            _ => {
                if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Punct(":")) {
                    return Err(FrontendError::unsupported(span, "label"));
                }
                let s = self.simple_statement()?;
                self.expect(";")?;
                Ok(s)
            }
        }
    }

    /// Body of if/while/for; declarations are not allowed here.
    fn sub_statement(&mut self) -> PResult<Stmt> {
        if self.starts_type() {
            return Err(self.error("declaration not allowed here"));
        }
        self.statement()
    }

    /// Assignment, increment, or expression statement, without the `;`.
    fn simple_statement(&mut self) -> PResult<Stmt> {
        let span = self.span();
        for (p, op) in [("++", BinOp::Add), ("--", BinOp::Sub)] {
            if self.eat_punct(p) {
                let lhs = self.unary()?;
                return Ok(Stmt::new(
                    StmtKind::Assign {
                        lhs,
                        op: Some(op),
                        rhs: Expr::int(1, span),
                    },
                    span,
                ));
            }
        }
        let e = self.expr_stmt_level()?;
        for (p, op) in [("++", BinOp::Add), ("--", BinOp::Sub)] {
            if self.is_punct(p) {
                let ospan = self.advance().span;
                return Ok(Stmt::new(
                    StmtKind::Assign {
                        lhs: e,
                        op: Some(op),
                        rhs: Expr::int(1, ospan),
                    },
                    span,
                ));
            }
        }
        let compound = [
            ("=", None),
            ("+=", Some(BinOp::Add)),
            ("-=", Some(BinOp::Sub)),
            ("*=", Some(BinOp::Mul)),
            ("/=", Some(BinOp::Div)),
            ("%=", Some(BinOp::Rem)),
            ("&=", Some(BinOp::BitAnd)),
            ("|=", Some(BinOp::BitOr)),
            ("^=", Some(BinOp::BitXor)),
            ("<<=", Some(BinOp::Shl)),
            (">>=", Some(BinOp::Shr)),
        ];
        for (p, op) in compound {
            if self.eat_punct(p) {
                let rhs = self.expr()?;
                if self.is_assign_op() {
                    return Err(FrontendError::unsupported(self.span(), "chained assignment"));
                }
                return Ok(Stmt::new(StmtKind::Assign { lhs: e, op, rhs }, span));
            }
        }
        Ok(Stmt::new(StmtKind::Expr(e), span))
    }

    fn is_assign_op(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Punct("=" | "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<=" | ">>=")
        )
    }

    // ------------------------------------------------------------------
    // expressions

    fn expr_stmt_level(&mut self) -> PResult<Expr> {
        let e = self.conditional()?;
        if self.is_punct(",") {
            return Err(FrontendError::unsupported(self.span(), "comma operator"));
        }
        Ok(e)
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let e = self.conditional()?;
        if self.is_assign_op() {
            return Err(FrontendError::unsupported(self.span(), "assignment inside expression"));
        }
        if self.is_punct("++") || self.is_punct("--") {
            return Err(FrontendError::unsupported(self.span(), "increment inside expression"));
        }
        Ok(e)
    }

    fn conditional(&mut self) -> PResult<Expr> {
        let e = self.binary(1)?;
        if self.is_punct("?") {
            return Err(FrontendError::unsupported(self.span(), "conditional operator"));
        }
        Ok(e)
    }

    fn binop(&self) -> Option<(BinOp, u8)> {
        let Tok::Punct(p) = self.peek() else { return None };
        Some(match *p {
            "||" => (BinOp::LOr, 1),
            "&&" => (BinOp::LAnd, 2),
            "|" => (BinOp::BitOr, 3),
            "^" => (BinOp::BitXor, 4),
            "&" => (BinOp::BitAnd, 5),
            "==" => (BinOp::Eq, 6),
            "!=" => (BinOp::Ne, 6),
            "<" => (BinOp::Lt, 7),
            "<=" => (BinOp::Le, 7),
            ">" => (BinOp::Gt, 7),
            ">=" => (BinOp::Ge, 7),
            "<<" => (BinOp::Shl, 8),
            ">>" => (BinOp::Shr, 8),
            "+" => (BinOp::Add, 9),
            "-" => (BinOp::Sub, 9),
            "*" => (BinOp::Mul, 10),
            "/" => (BinOp::Div, 10),
            "%" => (BinOp::Rem, 10),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binop() {
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Punct("-") => Some(UnaryOp::Neg),
            Tok::Punct("!") => Some(UnaryOp::Not),
            Tok::Punct("~") => Some(UnaryOp::BitNot),
            Tok::Punct("*") => Some(UnaryOp::Deref),
            Tok::Punct("&") => Some(UnaryOp::AddrOf),
            Tok::Punct("+") => {
                self.advance();
                return self.unary();
            }
            Tok::Punct("++") | Tok::Punct("--") => {
                return Err(FrontendError::unsupported(span, "increment inside expression"))
            }
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let a = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(a)), span));
        }
        if self.eat_word("sizeof") {
            if self.is_punct("(") && self.type_follows(1) {
                self.advance();
                let t = self.type_name()?;
                self.expect(")")?;
                return Ok(Expr::new(ExprKind::SizeofType(t), span));
            }
            let a = self.unary()?;
            return Ok(Expr::new(ExprKind::SizeofExpr(Box::new(a)), span));
        }
        if self.is_punct("(") && self.type_follows(1) {
            self.advance();
            let t = self.type_name()?;
            self.expect(")")?;
            let a = self.unary()?;
            return Ok(Expr::new(ExprKind::Cast(t, Box::new(a)), span));
        }
        self.postfix()
    }

    fn type_follows(&self, k: usize) -> bool {
        match self.peek_at(k) {
            Tok::Ident(s) => TYPE_WORDS.contains(&s.as_str()) || self.typedefs.contains_key(s),
            _ => false,
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let span = self.span();
            if self.eat_punct("[") {
                let i = self.expr()?;
                self.expect("]")?;
                let s = e.span;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(i)), s);
            } else if self.eat_punct(".") {
                let (m, _) = self.ident()?;
                let s = e.span;
                e = Expr::new(ExprKind::Member(Box::new(e), m, false), s);
            } else if self.eat_punct("->") {
                let (m, _) = self.ident()?;
                let s = e.span;
                e = Expr::new(ExprKind::Member(Box::new(e), m, true), s);
            } else if self.is_punct("(") {
                return Err(FrontendError::unsupported(span, "call through expression"));
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v, unsigned, _) => {
                self.advance();
                let ty = if unsigned || v > i32::MAX as u64 {
                    Ty::U32
                } else {
                    Ty::I32
                };
                Ok(Expr::new(ExprKind::Int(v as u32, ty), span))
            }
            Tok::Char(c) => {
                self.advance();
                Ok(Expr::int(c, span))
            }
            Tok::Str => Err(FrontendError::unsupported(span, "string literal")),
            Tok::Punct("(") => {
                self.advance();
                if self.is_punct("*") && matches!(self.peek_at(1), Tok::Punct(")")) {
                    return Err(FrontendError::unsupported(span, "function pointer"));
                }
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) if !is_keyword(&name) => {
                self.advance();
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    return Ok(Expr::new(ExprKind::Call(name, args), span));
                }
                Ok(Expr::new(ExprKind::Var(name, VarRef::Unresolved), span))
            }
            _ => Err(self.error("expected expression")),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "int" | "char" | "void" | "unsigned" | "signed" | "struct" | "union" | "enum" | "const"
            | "volatile" | "short" | "long" | "float" | "double" | "_Bool" | "if" | "else"
            | "while" | "for" | "do" | "switch" | "case" | "default" | "break" | "continue"
            | "return" | "goto" | "sizeof" | "typedef" | "static" | "extern"
    )
}
