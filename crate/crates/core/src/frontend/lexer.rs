use super::ast::Span;
use super::FrontendError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Value, explicit unsigned suffix, written in hex or octal.
    Int(u64, bool, bool),
    Char(i32),
    Str,
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~",
    "&", "|", "^", "(", ")", "[", "]", "{", "}", ";", ",", ".", "?", ":",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    macro_rules! bump {
        () => {{
            if bytes[i] == b'\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            bump!();
            continue;
        }
        let span = Span::new(line, col);
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!();
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            bump!();
            bump!();
            loop {
                if i + 1 >= bytes.len() {
                    return Err(FrontendError::parse(span, "unterminated comment"));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c == b'#' {
            return Err(FrontendError::parse(span, "preprocessor directives are not supported"));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                bump!();
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                span,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                bump!();
            }
            out.push(Token {
                tok: number(&src[start..i], span)?,
                span,
            });
            continue;
        }
        if c == b'\'' {
            bump!();
            let v = if i < bytes.len() && bytes[i] == b'\\' {
                bump!();
                let e = *bytes.get(i).ok_or_else(|| FrontendError::parse(span, "bad char literal"))?;
                bump!();
                match e {
                    b'n' => 10,
                    b't' => 9,
                    b'r' => 13,
                    b'0' => 0,
                    b'\\' => 92,
                    b'\'' => 39,
                    b'"' => 34,
                    b'x' => {
                        let s = i;
                        while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
                            bump!();
                        }
                        let v = u8::from_str_radix(&src[s..i], 16)
                            .map_err(|_| FrontendError::parse(span, "bad hex escape"))?;
                        v as i8 as i32
                    }
                    _ => return Err(FrontendError::parse(span, "unknown escape sequence")),
                }
            } else if i < bytes.len() && bytes[i].is_ascii() && bytes[i] != b'\'' {
                let v = bytes[i] as i32;
                bump!();
                v
            } else {
                return Err(FrontendError::parse(span, "bad char literal"));
            };
            if bytes.get(i) != Some(&b'\'') {
                return Err(FrontendError::parse(span, "unterminated char literal"));
            }
            bump!();
            out.push(Token {
                tok: Tok::Char(v),
                span,
            });
            continue;
        }
        if c == b'"' {
            bump!();
            while i < bytes.len() && bytes[i] != b'"' {
                if bytes[i] == b'\\' {
                    bump!();
                }
                if i < bytes.len() {
                    bump!();
                }
            }
            if i >= bytes.len() {
                return Err(FrontendError::parse(span, "unterminated string literal"));
            }
            bump!();
            out.push(Token { tok: Tok::Str, span });
            continue;
        }
        let rest = &src[i..];
        let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
            return Err(FrontendError::parse(
                span,
                format!("unexpected character `{}`", rest.chars().next().unwrap_or('?')),
            ));
        };
        for _ in 0..p.len() {
            bump!();
        }
        out.push(Token {
            tok: Tok::Punct(p),
            span,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col),
    });
    Ok(out)
}

fn number(text: &str, span: Span) -> Result<Tok, FrontendError> {
    let lower = text.to_ascii_lowercase();
    let digits = lower.trim_end_matches(['u', 'l']);
    let suffix = &lower[digits.len()..];
    if suffix.chars().filter(|&c| c == 'u').count() > 1 {
        return Err(FrontendError::parse(span, format!("bad integer literal `{text}`")));
    }
    let unsigned = suffix.contains('u');
    let (radix, body) = if let Some(h) = digits.strip_prefix("0x") {
        (16, h)
    } else if digits.len() > 1 && digits.starts_with('0') {
        (8, &digits[1..])
    } else {
        (10, digits)
    };
    let v = u64::from_str_radix(body, radix)
        .map_err(|_| FrontendError::parse(span, format!("bad integer literal `{text}`")))?;
    if v > u32::MAX as u64 {
        return Err(FrontendError::parse(span, format!("integer literal `{text}` does not fit 32 bits")));
    }
    Ok(Tok::Int(v, unsigned, radix != 10))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn longest_punct_wins() {
        assert_eq!(
            toks("a<<=b->c"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("<<="),
                Tok::Ident("b".into()),
                Tok::Punct("->"),
                Tok::Ident("c".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn literals() {
        assert_eq!(toks("0x52 10u 017 'a' '\\n'")[..5], [
            Tok::Int(0x52, false, true),
            Tok::Int(10, true, false),
            Tok::Int(15, false, true),
            Tok::Char(97),
            Tok::Char(10),
        ]);
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("// x\n/* y\n */ int").unwrap();
        assert_eq!(t[0].span, Span::new(3, 5));
    }
}
