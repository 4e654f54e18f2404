//! Lexing, parsing, and checking of the C dialect.

mod ast;
mod check;
mod lexer;
mod parser;
mod pretty;

pub use ast::*;
pub use check::check_and_fold;
pub use parser::parse_translation_unit;
pub use pretty::{pretty_expr, pretty_print, pretty_stmt};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("{span}: parse error: {message}")]
    Parse { span: Span, message: String },
    #[error("{span}: unsupported construct: {construct}{}", in_function(.function))]
    Unsupported {
        span: Span,
        construct: String,
        function: Option<String>,
    },
    #[error("{span}: type error: {message}")]
    Type { span: Span, message: String },
    #[error("{span}: negative or zero array length {len}")]
    NegativeArrayLength { span: Span, len: i64 },
}

fn in_function(f: &Option<String>) -> String {
    match f {
        Some(name) => format!(" (function `{name}` skipped)"),
        None => String::new(),
    }
}

impl FrontendError {
    pub fn parse(span: Span, message: impl Into<String>) -> Self {
        FrontendError::Parse {
            span,
            message: message.into(),
        }
    }

    pub fn unsupported(span: Span, construct: impl Into<String>) -> Self {
        FrontendError::Unsupported {
            span,
            construct: construct.into(),
            function: None,
        }
    }

    pub fn type_error(span: Span, message: impl Into<String>) -> Self {
        FrontendError::Type {
            span,
            message: message.into(),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            FrontendError::Parse { span, .. }
            | FrontendError::Unsupported { span, .. }
            | FrontendError::Type { span, .. }
            | FrontendError::NegativeArrayLength { span, .. } => *span,
        }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, FrontendError::Unsupported { .. })
    }

    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        let severity = if self.is_unsupported() { "warning" } else { "error" };
        let text = self.to_string();
        let msg = text.split_once(": ").map(|(_, m)| m).unwrap_or(&text);
        format!("{file}:{}: {severity}: {msg}", self.span())
    }
}

/// Parses and checks `source` in one go.
pub fn load_program(source: &str) -> Result<Program, FrontendError> {
    let p = parse_translation_unit(source)?;
    check_and_fold(p)
}
