//! Lossless lexer for the Isar outer syntax.
//!
//! Token classes follow the outer-syntax lexical grammar:
//!
//! ```text
//! ident      = letter quasiletter*
//! longident  = ident ('.' ident)+
//! symident   = sym+ | glyph | '\<' name '>'
//! var        = '?' ident ('.' nat)?
//! typevar    = '\'' ident | '?\'' ident
//! nat        = digit+
//! string     = '"' ... '"'            (backslash escapes)
//! cartouche  = '‹' ... '›'            (nested)
//! comment    = '(*' ... '*)'          (nested)
//! ```
//!
//! `letter` covers ASCII letters, Greek glyphs (except λ) and their `\<name>`
//! escapes; `quasiletter` adds digits, `_` and `'`. Words found in the command
//! table become [`TokenKind::Command`], minor keywords become
//! [`TokenKind::Keyword`]. Anything the grammar does not cover, including
//! unterminated strings, cartouches and comments, becomes
//! [`TokenKind::Unknown`] so that lexing never fails.

use serde::{Deserialize, Serialize};

use super::keywords;
use super::span::SourceSpan;
use super::symbols::{is_letter_name, SymbolTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Keyword,
    Command,
    Identifier,
    LongIdentifier,
    SymbolIdentifier,
    Variable,
    TypeVariable,
    NaturalNumber,
    QuotedString,
    Cartouche,
    Comment,
    Whitespace,
    Punctuation,
    Unknown,
}

impl TokenKind {
    /// Whitespace and comments carry no meaning for the outliner.
    pub fn is_trivia(self) -> bool {
        matches!(self, TokenKind::Whitespace | TokenKind::Comment)
    }

    pub fn is_name(self) -> bool {
        matches!(self, TokenKind::Identifier | TokenKind::LongIdentifier | TokenKind::Command | TokenKind::Keyword)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: SourceSpan,
}

const SYM_CHARS: &str = "!#$%&*+-/<=>?@^_|~";
const PUNCTUATION: &str = "()[]{},;:`";

fn is_ascii_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_sym_char(c: char) -> bool {
    SYM_CHARS.contains(c)
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    symbols: &'a SymbolTable,
    tokens: Vec<Token>,
}

/// Split `document` into tokens whose texts concatenate back to `document`.
pub fn tokenize(document: &str) -> Vec<Token> {
    tokenize_with(document, SymbolTable::bundled())
}

/// Like [`tokenize`], classifying glyphs against a course-specific table.
pub fn tokenize_with(document: &str, symbols: &SymbolTable) -> Vec<Token> {
    let mut lexer = Lexer { src: document, pos: 0, symbols, tokens: Vec::new() };
    while lexer.pos < lexer.src.len() {
        lexer.step();
    }
    lexer.tokens
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.src.get(self.pos + offset..).and_then(|s| s.chars().next())
    }

    fn emit(&mut self, kind: TokenKind, end: usize) {
        let span = SourceSpan::new(self.pos, end);
        self.tokens.push(Token { kind, text: self.src[span.range()].to_string(), span });
        self.pos = end;
    }

    fn step(&mut self) {
        let c = self.peek().expect("step called at end of input");
        let rest = self.rest();
        if c.is_whitespace() {
            let end = self.pos + rest.find(|ch: char| !ch.is_whitespace()).unwrap_or(rest.len());
            self.emit(TokenKind::Whitespace, end);
        } else if rest.starts_with("(*") {
            match self.nested_end("(*", "*)") {
                Some(end) => self.emit(TokenKind::Comment, end),
                None => self.emit(TokenKind::Unknown, self.src.len()),
            }
        } else if c == '"' {
            match self.string_end() {
                Some(end) => self.emit(TokenKind::QuotedString, end),
                None => self.emit(TokenKind::Unknown, self.src.len()),
            }
        } else if c == '‹' {
            match self.nested_end("‹", "›") {
                Some(end) => self.emit(TokenKind::Cartouche, end),
                None => self.emit(TokenKind::Unknown, self.src.len()),
            }
        } else if self.letter_len(self.pos).is_some() {
            self.word();
        } else if c.is_ascii_digit() {
            let end = self.pos + rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
            self.emit(TokenKind::NaturalNumber, end);
        } else if c == '?' && self.letter_len(self.pos + 1).is_some() {
            let end = self.ident_end(self.pos + 1);
            let end = self.index_suffix(end);
            self.emit(TokenKind::Variable, end);
        } else if c == '?' && self.peek_at(1) == Some('\'') && self.letter_len(self.pos + 2).is_some() {
            let end = self.ident_end(self.pos + 2);
            let end = self.index_suffix(end);
            self.emit(TokenKind::TypeVariable, end);
        } else if c == '\'' && self.letter_len(self.pos + 1).is_some() {
            let end = self.ident_end(self.pos + 1);
            self.emit(TokenKind::TypeVariable, end);
        } else if rest.starts_with("::") {
            self.emit(TokenKind::Keyword, self.pos + 2);
        } else if rest.starts_with("..") {
            self.emit(TokenKind::Command, self.pos + 2);
        } else if c == '.' {
            self.emit(TokenKind::Command, self.pos + 1);
        } else if PUNCTUATION.contains(c) {
            self.emit(TokenKind::Punctuation, self.pos + 1);
        } else if is_sym_char(c) {
            let len = rest.find(|ch: char| !is_sym_char(ch)).unwrap_or(rest.len());
            let kind = if keywords::SYMBOL_KEYWORDS.contains(&&rest[..len]) {
                TokenKind::Keyword
            } else {
                TokenKind::SymbolIdentifier
            };
            self.emit(kind, self.pos + len);
        } else if c == '›' {
            self.emit(TokenKind::Unknown, self.pos + c.len_utf8());
        } else if let Some(len) = self.escape_len(self.pos) {
            self.emit(TokenKind::SymbolIdentifier, self.pos + len);
        } else if self.symbols.by_glyph(c).is_some() {
            self.emit(TokenKind::SymbolIdentifier, self.pos + c.len_utf8());
        } else {
            self.emit(TokenKind::Unknown, self.pos + c.len_utf8());
        }
    }

    /// Length of a `\<name>` escape at `at`, if well-formed.
    fn escape_len(&self, at: usize) -> Option<usize> {
        let s = self.src.get(at..)?;
        let body = s.strip_prefix("\\<")?;
        let close = body.find('>')?;
        let name = &body[..close];
        let valid = !name.is_empty()
            && name.chars().enumerate().all(|(i, ch)| ch.is_ascii_alphanumeric() || (i == 0 && ch == '^'));
        valid.then_some(2 + close + 1)
    }

    /// Length of a letter starting at `at`: ASCII letter, Greek glyph, or
    /// letter escape.
    fn letter_len(&self, at: usize) -> Option<usize> {
        let s = self.src.get(at..)?;
        let c = s.chars().next()?;
        if is_ascii_letter(c) {
            return Some(1);
        }
        if let Some(entry) = self.symbols.by_glyph(c) {
            return entry.is_letter().then_some(c.len_utf8());
        }
        let len = self.escape_len(at)?;
        let name = &s[2..len - 1];
        is_letter_name(name).then_some(len)
    }

    fn quasiletter_len(&self, at: usize) -> Option<usize> {
        if let Some(len) = self.letter_len(at) {
            return Some(len);
        }
        let s = self.src.get(at..)?;
        let c = s.chars().next()?;
        if c.is_ascii_digit() || c == '_' || c == '\'' {
            return Some(1);
        }
        // subscripts inside identifiers: x\<^sub>1
        if s.starts_with("\\<^sub>") && self.quasiletter_len(at + 7).is_some() {
            return Some(7);
        }
        None
    }

    fn ident_end(&self, start: usize) -> usize {
        let mut end = start + self.letter_len(start).expect("identifier starts with a letter");
        while let Some(len) = self.quasiletter_len(end) {
            end += len;
        }
        end
    }

    /// Optional `.nat` index on schematic variables.
    fn index_suffix(&self, end: usize) -> usize {
        let s = &self.src[end..];
        if let Some(after) = s.strip_prefix('.') {
            let digits = after.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(after.len());
            if digits > 0 {
                return end + 1 + digits;
            }
        }
        end
    }

    fn word(&mut self) {
        let mut end = self.ident_end(self.pos);
        let mut long = false;
        while self.src[end..].starts_with('.') && self.letter_len(end + 1).is_some() {
            end = self.ident_end(end + 1);
            long = true;
        }
        let text = &self.src[self.pos..end];
        let kind = if long {
            TokenKind::LongIdentifier
        } else if keywords::is_command(text) {
            TokenKind::Command
        } else if keywords::is_minor_keyword(text) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        };
        self.emit(kind, end);
    }

    fn string_end(&self) -> Option<usize> {
        let mut chars = self.rest().char_indices().skip(1);
        while let Some((i, ch)) = chars.next() {
            match ch {
                '\\' => {
                    chars.next();
                }
                '"' => return Some(self.pos + i + 1),
                _ => {}
            }
        }
        None
    }

    fn nested_end(&self, open: &str, close: &str) -> Option<usize> {
        let mut depth = 0usize;
        let mut i = self.pos;
        while i < self.src.len() {
            let s = &self.src[i..];
            if s.starts_with(open) {
                depth += 1;
                i += open.len();
            } else if s.starts_with(close) {
                depth -= 1;
                i += close.len();
                if depth == 0 {
                    return Some(i);
                }
            } else {
                i += s.chars().next().map_or(1, char::len_utf8);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(doc: &str) -> Vec<(TokenKind, String)> {
        tokenize(doc).into_iter().map(|t| (t.kind, t.text)).collect()
    }

    fn k(kind: TokenKind, text: &str) -> (TokenKind, String) {
        (kind, text.to_string())
    }

    use TokenKind::*;

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn lemma_header() {
        assert_eq!(
            kinds("lemma foo: \"A\""),
            vec![
                k(Command, "lemma"),
                k(Whitespace, " "),
                k(Identifier, "foo"),
                k(Punctuation, ":"),
                k(Whitespace, " "),
                k(QuotedString, "\"A\""),
            ]
        );
    }

    #[test]
    fn comment_then_method() {
        assert_eq!(
            kinds("(* note *) by auto"),
            vec![
                k(Comment, "(* note *)"),
                k(Whitespace, " "),
                k(Command, "by"),
                k(Whitespace, " "),
                k(Identifier, "auto"),
            ]
        );
    }

    #[test]
    fn nested_comments_and_cartouches() {
        assert_eq!(kinds("(* a (* b *) c *)"), vec![k(Comment, "(* a (* b *) c *)")]);
        assert_eq!(kinds("‹a ‹b› c›"), vec![k(Cartouche, "‹a ‹b› c›")]);
    }

    #[test]
    fn unterminated_regions_become_unknown() {
        assert_eq!(kinds("by \"A"), vec![k(Command, "by"), k(Whitespace, " "), k(Unknown, "\"A")]);
        assert_eq!(kinds("‹a ‹b›"), vec![k(Unknown, "‹a ‹b›")]);
        assert_eq!(kinds("(* x"), vec![k(Unknown, "(* x")]);
    }

    #[test]
    fn string_escapes() {
        assert_eq!(kinds(r#""a \" b""#), vec![k(QuotedString, r#""a \" b""#)]);
    }

    #[test]
    fn variables_and_type_variables() {
        assert_eq!(kinds("?P"), vec![k(Variable, "?P")]);
        assert_eq!(kinds("?x.1"), vec![k(Variable, "?x.1")]);
        assert_eq!(kinds("'a"), vec![k(TypeVariable, "'a")]);
        assert_eq!(kinds("?'b"), vec![k(TypeVariable, "?'b")]);
        assert_eq!(kinds("?thesis"), vec![k(Variable, "?thesis")]);
    }

    #[test]
    fn identifiers_long_and_greek() {
        assert_eq!(kinds("List.map"), vec![k(LongIdentifier, "List.map")]);
        assert_eq!(kinds("x\\<^sub>1"), vec![k(Identifier, "x\\<^sub>1")]);
        assert_eq!(kinds("α'"), vec![k(Identifier, "α'")]);
        assert_eq!(kinds("\\<alpha>1"), vec![k(Identifier, "\\<alpha>1")]);
        assert_eq!(kinds("conjI"), vec![k(Identifier, "conjI")]);
    }

    #[test]
    fn symbols_and_punctuation() {
        assert_eq!(
            kinds("(rule impI)"),
            vec![
                k(Punctuation, "("),
                k(Identifier, "rule"),
                k(Whitespace, " "),
                k(Identifier, "impI"),
                k(Punctuation, ")"),
            ]
        );
        assert_eq!(kinds("==>"), vec![k(SymbolIdentifier, "==>")]);
        assert_eq!(kinds("∧"), vec![k(SymbolIdentifier, "∧")]);
        assert_eq!(kinds("\\<and>"), vec![k(SymbolIdentifier, "\\<and>")]);
        assert_eq!(kinds("x::nat"), vec![k(Identifier, "x"), k(Keyword, "::"), k(Identifier, "nat")]);
        assert_eq!(kinds("proof -"), vec![k(Command, "proof"), k(Whitespace, " "), k(Keyword, "-")]);
    }

    #[test]
    fn dots_are_commands() {
        assert_eq!(kinds(".."), vec![k(Command, "..")]);
        assert_eq!(kinds("."), vec![k(Command, ".")]);
    }

    #[test]
    fn stray_characters() {
        assert_eq!(kinds("\\x"), vec![k(Unknown, "\\"), k(Identifier, "x")]);
        assert_eq!(kinds("☃"), vec![k(Unknown, "☃")]);
        assert_eq!(kinds("›"), vec![k(Unknown, "›")]);
    }

    #[test]
    fn keywords_versus_identifiers() {
        assert_eq!(
            kinds("theory T imports Main begin"),
            vec![
                k(Command, "theory"),
                k(Whitespace, " "),
                k(Identifier, "T"),
                k(Whitespace, " "),
                k(Keyword, "imports"),
                k(Whitespace, " "),
                k(Identifier, "Main"),
                k(Whitespace, " "),
                k(Keyword, "begin"),
            ]
        );
    }
}
