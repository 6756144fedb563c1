//! Lexer-backed rewriting of code snippets under the preprocessing
//! configurations `C1`..`C8`.

mod config;
pub mod lexer;
pub mod rules;

pub use config::{
    apply_config, ClassRename, ExtractError, ExtractErrorKind, PreprocessConfig, RenameMap, RenameMapError,
    RenameProvenance, PRESET_NAMES,
};
pub use lexer::{lex_java, lexer_for, CodeToken, JavaLexer, LexError, Lexer, TokenKind};
pub use rules::{
    rename_primary_class, strip_all_imports, strip_comments, strip_formatting, strip_package_declaration,
    strip_self_imports, RuleError,
};
