//! Token-level rewriting rules: package, import and comment stripping, primary
//! class renaming, formatting removal.

use thiserror::Error;

use super::lexer::{is_ident_continue, is_java_keyword, lex_java, CodeToken, LexError, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("no top-level type declaration found")]
    NoTypeDeclaration,
    #[error("`{0}` is not a valid class name")]
    InvalidName(String),
    #[error("cannot rename `{from}` to `{to}`: `{to}` is already used in the snippet")]
    NameCollision { from: String, to: String },
}

/// Rebuilds source text from a token stream with some tokens dropped.
///
/// A line that held removed content and is left with only whitespace is
/// deleted together with its line break, and trailing blanks are trimmed from
/// touched lines. Where a removal would glue two tokens into one (`int/**/x`),
/// a single space is kept between them.
fn rebuild(tokens: &[CodeToken], removed: &[bool]) -> String {
    let mut out = String::new();
    let mut line_start = 0;
    let mut touched = false;
    let mut just_removed = false;

    for (tok, &drop) in tokens.iter().zip(removed) {
        if drop {
            touched = true;
            just_removed = true;
            continue;
        }
        let mut lexeme = tok.lexeme.as_str();
        if just_removed {
            just_removed = false;
            if tok.kind == TokenKind::Whitespace && out.ends_with([' ', '\t']) {
                lexeme = lexeme.trim_start_matches([' ', '\t']);
            } else if tok.kind != TokenKind::Whitespace && would_fuse(out.chars().last(), lexeme.chars().next()) {
                out.push(' ');
            }
        }
        for piece in lexeme.split_inclusive('\n') {
            out.push_str(piece);
            if piece.ends_with('\n') {
                finish_line(&mut out, line_start, touched);
                line_start = out.len();
                touched = false;
            }
        }
    }
    if touched {
        let tail = &out[line_start..];
        if tail.trim().is_empty() {
            out.truncate(line_start);
        } else {
            let keep = line_start + tail.trim_end_matches([' ', '\t']).len();
            out.truncate(keep);
        }
    }
    out
}

/// Applies the empty-line and trailing-blank policy to the line that just
/// ended at `out.len()` (its `\n` included).
fn finish_line(out: &mut String, line_start: usize, touched: bool) {
    if !touched {
        return;
    }
    let body = out[line_start..].trim_end_matches(['\n', '\r']);
    if body.trim().is_empty() {
        out.truncate(line_start);
        return;
    }
    let newline = out[line_start + body.len()..].to_string();
    let keep = line_start + body.trim_end_matches([' ', '\t']).len();
    out.truncate(keep);
    out.push_str(&newline);
}

fn would_fuse(left: Option<char>, right: Option<char>) -> bool {
    let (Some(l), Some(r)) = (left, right) else { return false };
    if l.is_whitespace() || r.is_whitespace() {
        return false;
    }
    let wordy = |c: char| is_ident_continue(c) || c == '"' || c == '\'';
    let symbolic = |c: char| "=<>!~?:+-*/&|^%.@".contains(c);
    (wordy(l) && wordy(r)) || (symbolic(l) && symbolic(r))
}

fn brace_depths(tokens: &[CodeToken]) -> Vec<i32> {
    let mut depth = 0;
    tokens
        .iter()
        .map(|t| {
            let here = depth;
            if t.is_punct("{") {
                depth += 1;
            } else if t.is_punct("}") {
                depth -= 1;
            }
            here
        })
        .collect()
}

/// Top-level statements introduced by `keyword` (`package`, `import`), as
/// inclusive token index ranges ending at the terminating `;`.
fn top_level_statements(tokens: &[CodeToken], keyword: &str) -> Vec<(usize, usize)> {
    let depths = brace_depths(tokens);
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if depths[i] == 0 && tokens[i].is_keyword(keyword) {
            if let Some(end) = (i + 1..tokens.len()).find(|&j| tokens[j].is_punct(";")) {
                spans.push((i, end));
                i = end + 1;
                continue;
            }
        }
        i += 1;
    }
    spans
}

/// Significant tokens of a statement span, after the introducing keyword.
fn statement_words(tokens: &[CodeToken], (start, end): (usize, usize)) -> impl Iterator<Item = &CodeToken> {
    tokens[start + 1..end].iter().filter(|t| !t.kind.is_trivia())
}

fn remove_spans(tokens: &[CodeToken], spans: &[(usize, usize)]) -> String {
    let mut removed = vec![false; tokens.len()];
    for &(s, e) in spans {
        removed[s..=e].iter_mut().for_each(|r| *r = true);
    }
    rebuild(tokens, &removed)
}

/// First segment of the declared package (`ch_17` for `package ch_17.exercise17_06;`).
pub fn declared_package_root(text: &str) -> Result<Option<String>, LexError> {
    let tokens = lex_java(text)?;
    Ok(package_root(&tokens))
}

fn package_root(tokens: &[CodeToken]) -> Option<String> {
    let span = *top_level_statements(tokens, "package").first()?;
    statement_words(tokens, span).find(|t| t.kind == TokenKind::Identifier).map(|t| t.lexeme.clone())
}

pub fn strip_package_declaration(text: &str) -> Result<String, RuleError> {
    let tokens = lex_java(text)?;
    let spans = top_level_statements(&tokens, "package");
    if spans.is_empty() {
        return Ok(text.to_string());
    }
    Ok(remove_spans(&tokens, &spans[..1]))
}

/// Whether an import's first package segment names one of the project's own roots.
///
/// A prefix ending in `*` matches any segment starting with the part before it,
/// so `ch_*` covers every chapter package of a book repository.
pub fn matches_project_prefix(segment: &str, prefixes: &[String]) -> bool {
    prefixes.iter().any(|p| match p.strip_suffix('*') {
        Some(stem) => segment.starts_with(stem),
        None => segment == p,
    })
}

/// Removes imports of the project's own packages.
///
/// An import is self-made when its first segment matches a project prefix or
/// the root of the package the snippet itself declares.
pub fn strip_self_imports(text: &str, project_prefixes: &[String]) -> Result<String, RuleError> {
    strip_self_imports_with_root(text, project_prefixes, None)
}

/// Like [`strip_self_imports`], with the package root supplied by the caller
/// (needed once the package declaration has already been stripped).
pub(crate) fn strip_self_imports_with_root(
    text: &str,
    project_prefixes: &[String],
    known_root: Option<&str>,
) -> Result<String, RuleError> {
    let tokens = lex_java(text)?;
    let own_root = known_root.map(str::to_string).or_else(|| package_root(&tokens));
    let spans: Vec<_> = top_level_statements(&tokens, "import")
        .into_iter()
        .filter(|&span| {
            let first = statement_words(&tokens, span).find(|t| !t.is_keyword("static"));
            first.is_some_and(|t| {
                t.kind == TokenKind::Identifier
                    && (own_root.as_deref() == Some(t.lexeme.as_str())
                        || matches_project_prefix(&t.lexeme, project_prefixes))
            })
        })
        .collect();
    if spans.is_empty() {
        return Ok(text.to_string());
    }
    Ok(remove_spans(&tokens, &spans))
}

pub fn strip_all_imports(text: &str) -> Result<String, RuleError> {
    let tokens = lex_java(text)?;
    let spans = top_level_statements(&tokens, "import");
    if spans.is_empty() {
        return Ok(text.to_string());
    }
    Ok(remove_spans(&tokens, &spans))
}

pub fn strip_comments(text: &str) -> Result<String, RuleError> {
    let tokens = lex_java(text)?;
    let removed: Vec<bool> = tokens.iter().map(|t| t.kind.is_comment()).collect();
    if !removed.contains(&true) {
        return Ok(text.to_string());
    }
    Ok(rebuild(&tokens, &removed))
}

pub fn is_valid_class_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !is_java_keyword(name)
}

/// Name of the first type declared at the top level of the file.
pub fn primary_type_name(text: &str) -> Result<Option<String>, LexError> {
    let tokens = lex_java(text)?;
    Ok(primary_type_index(&tokens).map(|i| tokens[i].lexeme.clone()))
}

fn primary_type_index(tokens: &[CodeToken]) -> Option<usize> {
    let depths = brace_depths(tokens);
    let significant: Vec<usize> = (0..tokens.len()).filter(|&i| !tokens[i].kind.is_trivia()).collect();
    significant.windows(2).find_map(|w| {
        let (kw, name) = (&tokens[w[0]], &tokens[w[1]]);
        let introduces_type = kw.is_keyword("class")
            || kw.is_keyword("interface")
            || kw.is_keyword("enum")
            || kw.is(TokenKind::Identifier, "record");
        (depths[w[0]] == 0 && introduces_type && name.kind == TokenKind::Identifier).then_some(w[1])
    })
}

/// Renames the first top-level type and every identifier token equal to its name.
pub fn rename_primary_class(text: &str, new_name: &str) -> Result<String, RuleError> {
    if !is_valid_class_name(new_name) {
        return Err(RuleError::InvalidName(new_name.to_string()));
    }
    let tokens = lex_java(text)?;
    let old = primary_type_index(&tokens)
        .map(|i| tokens[i].lexeme.clone())
        .ok_or(RuleError::NoTypeDeclaration)?;
    if old == new_name {
        return Ok(text.to_string());
    }
    if tokens.iter().any(|t| t.kind == TokenKind::Identifier && t.lexeme == new_name) {
        return Err(RuleError::NameCollision { from: old, to: new_name.to_string() });
    }
    Ok(tokens
        .iter()
        .map(|t| {
            if t.kind == TokenKind::Identifier && t.lexeme == old {
                new_name
            } else {
                t.lexeme.as_str()
            }
        })
        .collect())
}

fn is_formatting_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r')
}

fn collapse_formatting(s: &str, first_run: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_run = false;
    let mut replacement = first_run;
    for c in s.chars() {
        if is_formatting_char(c) {
            if !in_run {
                out.push_str(replacement);
                replacement = " ";
                in_run = true;
            }
        } else {
            in_run = false;
            out.push(c);
        }
    }
    out
}

/// Replaces every run of tabs and line breaks outside literals with one space.
///
/// The line break that ends a `//` comment survives as a single `\n`;
/// otherwise the comment would swallow the code after it.
pub fn strip_formatting(text: &str) -> Result<String, RuleError> {
    let tokens = lex_java(text)?;
    let mut out = String::with_capacity(text.len());
    let mut after_line_comment = false;
    for tok in &tokens {
        match tok.kind {
            TokenKind::Whitespace => {
                let first = if after_line_comment && tok.lexeme.contains(['\n', '\r']) { "\n" } else { " " };
                out.push_str(&collapse_formatting(&tok.lexeme, first));
            }
            TokenKind::CommentBlock => out.push_str(&collapse_formatting(&tok.lexeme, " ")),
            _ => out.push_str(&tok.lexeme),
        }
        after_line_comment = tok.kind == TokenKind::CommentLine;
    }
    Ok(out)
}
