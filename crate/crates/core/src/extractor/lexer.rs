//! Lossless Java lexer.
//!
//! Every byte of the input belongs to exactly one token, so concatenating the
//! lexemes in order reproduces the source. Comments and literals are kept as
//! single tokens; that is what lets the rewriting rules strip comments and
//! imports without ever touching the inside of a string.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    LiteralString,
    LiteralChar,
    LiteralNumber,
    Punctuation,
    CommentLine,
    CommentBlock,
    Whitespace,
    Other,
}

impl TokenKind {
    pub fn is_comment(self) -> bool {
        matches!(self, TokenKind::CommentLine | TokenKind::CommentBlock)
    }

    pub fn is_literal_text(self) -> bool {
        matches!(self, TokenKind::LiteralString | TokenKind::LiteralChar)
    }

    /// Whitespace and comments carry no syntax.
    pub fn is_trivia(self) -> bool {
        self == TokenKind::Whitespace || self.is_comment()
    }
}

/// One lexeme with its byte offset in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeToken {
    pub kind: TokenKind,
    pub lexeme: String,
    pub offset: usize,
}

impl CodeToken {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_punct(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Punctuation, lexeme)
    }

    pub fn is_keyword(&self, lexeme: &str) -> bool {
        self.is(TokenKind::Keyword, lexeme)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unterminated {
    BlockComment,
    String,
    TextBlock,
    Char,
}

impl fmt::Display for Unterminated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unterminated::BlockComment => "block comment",
            Unterminated::String => "string literal",
            Unterminated::TextBlock => "text block",
            Unterminated::Char => "character literal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unterminated {what} starting at byte offset {offset}")]
pub struct LexError {
    pub what: Unterminated,
    pub offset: usize,
}

/// A language front end for the rewriting engine.
pub trait Lexer: Send + Sync {
    fn language(&self) -> &'static str;
    fn lex(&self, text: &str) -> Result<Vec<CodeToken>, LexError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct JavaLexer;

impl Lexer for JavaLexer {
    fn language(&self) -> &'static str {
        "java"
    }

    fn lex(&self, text: &str) -> Result<Vec<CodeToken>, LexError> {
        lex_java(text)
    }
}

/// Looks up the lexer for a snippet language tag.
pub fn lexer_for(language: &str) -> Option<&'static dyn Lexer> {
    static JAVA: JavaLexer = JavaLexer;
    match language {
        "java" => Some(&JAVA),
        _ => None,
    }
}

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "false", "final", "finally",
    "float", "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "null", "package", "private", "protected", "public", "return", "short",
    "static", "strictfp", "super", "switch", "synchronized", "this", "throw", "throws",
    "transient", "true", "try", "void", "volatile", "while",
];

pub fn is_java_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

// Longest first so that maximal munch falls out of a linear scan.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=", "<<", ">>",
];

const SINGLE_PUNCT: &str = "(){}[];,.@=><!~?:+-*/&|^%";

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

pub(crate) fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

fn is_java_whitespace(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0C')
}

/// Splits Java source into a lossless token stream.
pub fn lex_java(text: &str) -> Result<Vec<CodeToken>, LexError> {
    let mut cursor = Cursor { text, pos: 0 };
    let mut tokens = Vec::new();
    while let Some(c) = cursor.peek() {
        let start = cursor.pos;
        let kind = if is_java_whitespace(c) {
            cursor.eat_while(is_java_whitespace);
            TokenKind::Whitespace
        } else if cursor.starts_with("//") {
            cursor.eat_while(|c| c != '\n' && c != '\r');
            TokenKind::CommentLine
        } else if cursor.starts_with("/*") {
            cursor.pos += 2;
            match cursor.rest().find("*/") {
                Some(end) => cursor.pos += end + 2,
                None => return Err(LexError { what: Unterminated::BlockComment, offset: start }),
            }
            TokenKind::CommentBlock
        } else if cursor.starts_with("\"\"\"") {
            cursor.pos += 3;
            cursor.lex_text_block(start)?;
            TokenKind::LiteralString
        } else if c == '"' {
            cursor.lex_quoted('"', Unterminated::String, start)?;
            TokenKind::LiteralString
        } else if c == '\'' {
            cursor.lex_quoted('\'', Unterminated::Char, start)?;
            TokenKind::LiteralChar
        } else if c.is_ascii_digit()
            || (c == '.' && cursor.peek_nth(1).is_some_and(|d| d.is_ascii_digit()))
        {
            cursor.lex_number();
            TokenKind::LiteralNumber
        } else if is_ident_start(c) {
            cursor.eat_while(is_ident_continue);
            if is_java_keyword(&text[start..cursor.pos]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if let Some(op) = OPERATORS.iter().find(|op| cursor.starts_with(op)) {
            cursor.pos += op.len();
            TokenKind::Punctuation
        } else if SINGLE_PUNCT.contains(c) {
            cursor.pos += c.len_utf8();
            TokenKind::Punctuation
        } else {
            cursor.pos += c.len_utf8();
            TokenKind::Other
        };
        tokens.push(CodeToken { kind, lexeme: text[start..cursor.pos].to_string(), offset: start });
    }
    Ok(tokens)
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.rest().starts_with(s)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    /// Single-line quoted literal; a line break before the closing quote is an error.
    fn lex_quoted(&mut self, quote: char, what: Unterminated, start: usize) -> Result<(), LexError> {
        self.bump();
        loop {
            match self.bump() {
                None | Some('\n') | Some('\r') => return Err(LexError { what, offset: start }),
                Some('\\') => {
                    if matches!(self.peek(), None | Some('\n') | Some('\r')) {
                        return Err(LexError { what, offset: start });
                    }
                    self.bump();
                }
                Some(c) if c == quote => return Ok(()),
                Some(_) => {}
            }
        }
    }

    fn lex_text_block(&mut self, start: usize) -> Result<(), LexError> {
        loop {
            if self.starts_with("\"\"\"") {
                self.pos += 3;
                return Ok(());
            }
            match self.bump() {
                None => return Err(LexError { what: Unterminated::TextBlock, offset: start }),
                Some('\\') => {
                    self.bump();
                }
                Some(_) => {}
            }
        }
    }

    fn lex_number(&mut self) {
        let hex = self.starts_with("0x") || self.starts_with("0X");
        if hex {
            self.pos += 2;
        }
        while let Some(c) = self.peek() {
            let exponent = if hex { matches!(c, 'p' | 'P') } else { matches!(c, 'e' | 'E') };
            if exponent && matches!(self.peek_nth(1), Some('+') | Some('-')) {
                self.pos += 2;
            } else if c.is_ascii_alphanumeric() || c == '_' || (c == '.' && fraction_follows(self.peek_nth(1))) {
                self.pos += 1;
            } else {
                break;
            }
        }
    }
}

/// Whether a `.` after digits continues the number (`1.5`, `1.e3`, `2.f`)
/// rather than starting a member access or a `..` sequence.
fn fraction_follows(next: Option<char>) -> bool {
    match next {
        None => true,
        Some('.') => false,
        Some('e' | 'E' | 'f' | 'F' | 'd' | 'D') => true,
        Some(c) => !is_ident_start(c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_lexemes(text: &str) -> Vec<(TokenKind, String)> {
        lex_java(text).unwrap().into_iter().map(|t| (t.kind, t.lexeme)).collect()
    }

    #[test]
    fn keyword_table_is_sorted() {
        let mut sorted = KEYWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, KEYWORDS);
    }

    #[test]
    fn lexes_declaration_with_trailing_comment() {
        use TokenKind::*;
        let expected = vec![
            (Keyword, "int"),
            (Whitespace, " "),
            (Identifier, "x"),
            (Whitespace, " "),
            (Punctuation, "="),
            (Whitespace, " "),
            (LiteralNumber, "5"),
            (Punctuation, ";"),
            (Whitespace, " "),
            (CommentLine, "// c"),
        ];
        let expected: Vec<_> = expected.into_iter().map(|(k, l)| (k, l.to_string())).collect();
        assert_eq!(kinds_and_lexemes("int x = 5; // c"), expected);
    }

    #[test]
    fn empty_input_yields_no_tokens() {
        assert!(lex_java("").unwrap().is_empty());
    }

    #[test]
    fn url_stays_inside_string_literal() {
        let tokens = lex_java("String u = \"http://x\";").unwrap();
        assert!(tokens.iter().all(|t| !t.kind.is_comment()));
        let literal: Vec<_> = tokens.iter().filter(|t| t.kind == TokenKind::LiteralString).collect();
        assert_eq!(literal.len(), 1);
        assert_eq!(literal[0].lexeme, "\"http://x\"");
    }

    #[test]
    fn escaped_quotes_do_not_end_literals() {
        let tokens = lex_java(r#"s = "a \" /* b"; c = '\''; "#).unwrap();
        let lits: Vec<_> = tokens.iter().filter(|t| t.kind.is_literal_text()).map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lits, vec![r#""a \" /* b""#, r"'\''"]);
    }

    #[test]
    fn text_block_is_one_literal() {
        let src = "String s = \"\"\"\n  // not a comment\n  \"\"\";";
        let tokens = lex_java(src).unwrap();
        assert!(tokens.iter().all(|t| !t.kind.is_comment()));
        assert!(tokens.iter().any(|t| t.kind == TokenKind::LiteralString && t.lexeme.contains("not a comment")));
    }

    #[test]
    fn unterminated_block_comment_reports_offset() {
        let err = lex_java("int a; /* open").unwrap_err();
        assert_eq!(err, LexError { what: Unterminated::BlockComment, offset: 7 });
    }

    #[test]
    fn unterminated_string_reports_offset() {
        let err = lex_java("x = \"abc\ny\";").unwrap_err();
        assert_eq!(err.what, Unterminated::String);
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn numbers_and_member_access() {
        use TokenKind::*;
        let toks = kinds_and_lexemes("a = 0x1F + 1.5e-3f + 10L + .5; b = arr.length;");
        let nums: Vec<_> = toks.iter().filter(|(k, _)| *k == LiteralNumber).map(|(_, l)| l.as_str()).collect();
        assert_eq!(nums, vec!["0x1F", "1.5e-3f", "10L", ".5"]);
        assert!(toks.contains(&(Punctuation, ".".to_string())));
    }

    #[test]
    fn operators_use_maximal_munch() {
        let toks = kinds_and_lexemes("x >>>= 2; y -> z; a::b; i++;");
        let puncts: Vec<_> = toks
            .iter()
            .filter(|(k, _)| *k == TokenKind::Punctuation)
            .map(|(_, l)| l.as_str())
            .collect();
        assert_eq!(puncts, vec![">>>=", ";", "->", ";", "::", ";", "++", ";"]);
    }

    #[test]
    fn unicode_identifiers_and_other_chars() {
        let toks = kinds_and_lexemes("int größe = 1; # \\");
        assert!(toks.contains(&(TokenKind::Identifier, "größe".to_string())));
        assert!(toks.contains(&(TokenKind::Other, "#".to_string())));
        assert!(toks.contains(&(TokenKind::Other, "\\".to_string())));
    }

    #[test]
    fn offsets_are_byte_positions() {
        let src = "é x";
        let toks = lex_java(src).unwrap();
        for t in &toks {
            assert_eq!(&src[t.offset..t.offset + t.lexeme.len()], t.lexeme);
        }
    }
}
