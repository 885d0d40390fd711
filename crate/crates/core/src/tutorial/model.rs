use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::TutorialError;
use crate::locale::{Locale, Localized};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Course {
    pub id: String,
    pub title: Localized,
    pub locales: BTreeSet<Locale>,
    pub profile: String,
    pub tutorials: Vec<String>,
    pub roster: BTreeSet<String>,
    /// User id of the teacher who created the course.
    pub owner: String,
}

impl Course {
    pub fn validate(&self) -> Result<(), TutorialError> {
        if self.locales.is_empty() {
            return Err(TutorialError::Invariant { id: self.id.clone(), message: "course has no locales".into() });
        }
        let mut seen = HashSet::new();
        for t in &self.tutorials {
            if !seen.insert(t) {
                return Err(TutorialError::Invariant {
                    id: t.clone(),
                    message: format!("tutorial listed twice in course `{}`", self.id),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Text,
    Example,
    Task,
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BlockBody {
    /// Prose per locale, in the markup subset of the tutorial format.
    Text { content: Localized },
    /// Read-only code shown to students.
    Example { code: String },
    /// The only editable kind; `initial` is the starting content.
    Task { initial: String },
    /// Mandatory code that students never see.
    Hidden { code: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: String,
    #[serde(flatten)]
    pub body: BlockBody,
}

impl Block {
    pub fn kind(&self) -> BlockKind {
        match self.body {
            BlockBody::Text { .. } => BlockKind::Text,
            BlockBody::Example { .. } => BlockKind::Example,
            BlockBody::Task { .. } => BlockKind::Task,
            BlockBody::Hidden { .. } => BlockKind::Hidden,
        }
    }

    /// Code contributed to the assembled theory by read-only blocks.
    pub fn fixed_code(&self) -> Option<&str> {
        match &self.body {
            BlockBody::Example { code } | BlockBody::Hidden { code } => Some(code),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub title: Localized,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryHeader {
    pub theory: String,
    pub imports: String,
}

impl TheoryHeader {
    pub fn text(&self) -> String {
        format!("theory {} imports {} begin", self.theory, self.imports)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tutorial {
    pub id: String,
    pub title: Localized,
    /// Id of the syntax profile the tutorial is written for.
    pub profile: String,
    pub header: TheoryHeader,
    pub footer: String,
    pub sections: Vec<Section>,
}

impl Tutorial {
    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.sections.iter().flat_map(|s| s.blocks.iter())
    }

    pub fn block(&self, id: &str) -> Option<&Block> {
        self.blocks().find(|b| b.id == id)
    }

    pub fn task_blocks(&self) -> impl Iterator<Item = (&str, &str)> {
        self.blocks().filter_map(|b| match &b.body {
            BlockBody::Task { initial } => Some((b.id.as_str(), initial.as_str())),
            _ => None,
        })
    }

    pub fn task_ids(&self) -> BTreeSet<String> {
        self.task_blocks().map(|(id, _)| id.to_string()).collect()
    }

    pub fn duplicate_block_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut dups = Vec::new();
        for b in self.blocks() {
            if !seen.insert(b.id.as_str()) && !dups.contains(&b.id) {
                dups.push(b.id.clone());
            }
        }
        dups
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    #[default]
    Unchecked,
    Ok,
    Failed,
}

/// One user's editable content for one tutorial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TutorialState {
    pub user_id: String,
    pub tutorial_id: String,
    pub contents: BTreeMap<String, String>,
    pub outcomes: BTreeMap<String, Outcome>,
}

impl TutorialState {
    /// Every task at its initial content, unchecked.
    pub fn fresh(user_id: impl Into<String>, tutorial: &Tutorial) -> Self {
        let contents: BTreeMap<_, _> =
            tutorial.task_blocks().map(|(id, init)| (id.to_string(), init.to_string())).collect();
        let outcomes = contents.keys().map(|k| (k.clone(), Outcome::Unchecked)).collect();
        TutorialState { user_id: user_id.into(), tutorial_id: tutorial.id.clone(), contents, outcomes }
    }

    pub fn check_belongs_to(&self, tutorial: &Tutorial) -> Result<(), TutorialError> {
        if self.tutorial_id != tutorial.id {
            return Err(TutorialError::StateMismatch(format!(
                "state is for tutorial `{}`, not `{}`",
                self.tutorial_id, tutorial.id
            )));
        }
        let tasks = tutorial.task_ids();
        let keys: BTreeSet<String> = self.contents.keys().cloned().collect();
        if keys != tasks {
            return Err(TutorialError::StateMismatch(format!(
                "state blocks {keys:?} differ from task blocks {tasks:?}"
            )));
        }
        Ok(())
    }

    pub fn set_content(&mut self, block_id: &str, content: String) -> Result<(), TutorialError> {
        match self.contents.get_mut(block_id) {
            Some(slot) => {
                *slot = content;
                Ok(())
            }
            None => Err(TutorialError::UnknownBlock(block_id.to_string())),
        }
    }
}

/// Restore every task to its initial content and clear outcomes.
pub fn reset_progress(state: &TutorialState, tutorial: &Tutorial) -> Result<TutorialState, TutorialError> {
    state.check_belongs_to(tutorial)?;
    Ok(TutorialState::fresh(state.user_id.clone(), tutorial))
}
