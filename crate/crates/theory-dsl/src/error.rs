use thiserror::Error;

use crate::ast::Span;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    SyntaxError { span: Span, message: String },

    #[error("{span}: duplicate name `{name}`")]
    DuplicateName { span: Span, name: String },

    #[error("{span}: unknown identifier `{name}`")]
    UnknownIdentifier { span: Span, name: String },

    #[error("{span}: `{action}` takes {expected} argument(s), got {got}")]
    ArityMismatch { span: Span, action: String, expected: String, got: usize },

    #[error("{span}: {message}")]
    DomainMismatch { span: Span, message: String },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::SyntaxError { span, .. }
            | ParseError::DuplicateName { span, .. }
            | ParseError::UnknownIdentifier { span, .. }
            | ParseError::ArityMismatch { span, .. }
            | ParseError::DomainMismatch { span, .. } => *span,
        }
    }
}
