//! The symbol table: glyphs, prover escapes and ASCII abbreviations.
//!
//! The bundled table is read from `data/symbols.tsv`. Each non-comment line is
//! `name<TAB>glyph<TAB>escape<TAB>abbreviation`, the last field optional.
//! Courses may [`extend`](SymbolTable::extend) the table with new entries but
//! never redefine an existing name, glyph, escape or abbreviation.

use std::collections::HashSet;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUNDLED: &str = include_str!("../../data/symbols.tsv");

static BUNDLED_TABLE: LazyLock<SymbolTable> =
    LazyLock::new(|| SymbolTable::parse(BUNDLED).expect("bundled symbol table is well-formed"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolEntry {
    pub name: String,
    pub glyph: char,
    pub escape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abbreviation: Option<String>,
}

impl SymbolEntry {
    /// Greek letters (except lambda) are letters in identifiers, not operators.
    pub fn is_letter(&self) -> bool {
        GREEK_LETTERS.contains(&self.name.as_str())
    }
}

const GREEK_LETTERS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "mu", "nu", "xi", "pi",
    "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega", "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi",
    "Sigma", "Upsilon", "Phi", "Psi", "Omega",
];

/// Whether `\<name>` is a letter symbol.
pub fn is_letter_name(name: &str) -> bool {
    GREEK_LETTERS.contains(&name)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymbolTableError {
    #[error("line {line}: expected 3 or 4 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: glyph `{glyph}` must be exactly one character")]
    Glyph { line: usize, glyph: String },
    #[error("line {line}: escape `{escape}` does not match name `{name}`")]
    Escape { line: usize, name: String, escape: String },
    #[error("symbol `{0}` is already defined")]
    Redefined(String),
}

#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    version: Option<String>,
    entries: Vec<SymbolEntry>,
}

impl SymbolTable {
    /// The table shipped with this crate.
    pub fn bundled() -> &'static SymbolTable {
        &BUNDLED_TABLE
    }

    pub fn parse(text: &str) -> Result<SymbolTable, SymbolTableError> {
        let mut table = SymbolTable::default();
        let mut parsed = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if let Some(comment) = raw.strip_prefix('#') {
                if table.version.is_none() {
                    if let Some(v) = comment.trim().rsplit(' ').next().filter(|v| v.starts_with('v')) {
                        table.version = Some(v.to_string());
                    }
                }
                continue;
            }
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(SymbolTableError::FieldCount { line, found: fields.len() });
            }
            let mut chars = fields[1].chars();
            let glyph = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(SymbolTableError::Glyph { line, glyph: fields[1].to_string() }),
            };
            let name = fields[0].to_string();
            if fields[2] != format!("\\<{name}>") {
                return Err(SymbolTableError::Escape { line, name, escape: fields[2].to_string() });
            }
            let abbreviation = fields.get(3).filter(|a| !a.is_empty()).map(|a| a.to_string());
            parsed.push(SymbolEntry { name, glyph, escape: fields[2].to_string(), abbreviation });
        }
        table.extend(parsed)?;
        Ok(table)
    }

    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    /// Add course-specific entries. Fails without modifying the table if any
    /// entry collides with an existing one.
    pub fn extend(&mut self, extra: impl IntoIterator<Item = SymbolEntry>) -> Result<(), SymbolTableError> {
        let mut names: HashSet<String> = self.entries.iter().map(|e| e.name.clone()).collect();
        let mut glyphs: HashSet<char> = self.entries.iter().map(|e| e.glyph).collect();
        let mut abbrevs: HashSet<String> = self.entries.iter().filter_map(|e| e.abbreviation.clone()).collect();
        let mut added = Vec::new();
        for entry in extra {
            if !names.insert(entry.name.clone()) {
                return Err(SymbolTableError::Redefined(entry.name));
            }
            if !glyphs.insert(entry.glyph) {
                return Err(SymbolTableError::Redefined(entry.glyph.to_string()));
            }
            if let Some(a) = &entry.abbreviation {
                if !abbrevs.insert(a.clone()) {
                    return Err(SymbolTableError::Redefined(a.clone()));
                }
            }
            added.push(entry);
        }
        self.entries.extend(added);
        self.entries.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(())
    }

    /// All entries, ordered by name.
    pub fn entries(&self) -> &[SymbolEntry] {
        &self.entries
    }

    pub fn by_glyph(&self, glyph: char) -> Option<&SymbolEntry> {
        self.entries.iter().find(|e| e.glyph == glyph)
    }

    pub fn by_name(&self, name: &str) -> Option<&SymbolEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn by_abbreviation(&self, abbrev: &str) -> Option<&SymbolEntry> {
        self.entries.iter().find(|e| e.abbreviation.as_deref() == Some(abbrev))
    }

    /// Entries whose name (case-insensitively), abbreviation or glyph contains
    /// `query`, ordered by name. The empty query matches everything.
    pub fn lookup(&self, query: &str) -> Vec<SymbolEntry> {
        let lowered = query.to_lowercase();
        self.entries
            .iter()
            .filter(|e| {
                e.name.to_lowercase().contains(&lowered)
                    || e.abbreviation.as_deref().is_some_and(|a| a.contains(query))
                    || e.glyph.to_string().contains(query)
            })
            .cloned()
            .collect()
    }
}

/// Search the bundled table.
pub fn lookup_symbol(query: &str) -> Vec<SymbolEntry> {
    SymbolTable::bundled().lookup(query)
}
