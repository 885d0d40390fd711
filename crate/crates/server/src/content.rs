//! Tutorials, syntax profiles and courses known to the server.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use proofbench_core::syntax::{Severity, SyntaxProfile};
use proofbench_core::tutorial::{load_tutorial, validate_tutorial, BlockDiagnostic, Course, Tutorial};

#[derive(Debug, Clone)]
pub struct TutorialEntry {
    pub tutorial: Arc<Tutorial>,
    /// Uploading teacher; `None` for tutorials shipped with the server.
    pub owner: Option<String>,
}

#[derive(Debug, Default)]
pub struct Content {
    tutorials: RwLock<BTreeMap<String, TutorialEntry>>,
    profiles: RwLock<BTreeMap<String, Arc<SyntaxProfile>>>,
    courses: RwLock<BTreeMap<String, Course>>,
}

fn read<T>(l: &RwLock<T>) -> RwLockReadGuard<'_, T> {
    l.read().unwrap_or_else(|e| e.into_inner())
}

fn write<T>(l: &RwLock<T>) -> RwLockWriteGuard<'_, T> {
    l.write().unwrap_or_else(|e| e.into_inner())
}

#[derive(Debug, thiserror::Error)]
pub enum ContentError {
    #[error("{path}: {message}")]
    Load { path: String, message: String },
    #[error("tutorial `{tutorial}` uses unknown profile `{profile}`")]
    UnknownProfile { tutorial: String, profile: String },
    #[error("tutorial `{0}` has validation errors")]
    Invalid(String, Vec<BlockDiagnostic>),
}

impl Content {
    pub fn new() -> Self {
        let c = Content::default();
        c.put_profile(SyntaxProfile::permissive("default"));
        c
    }

    /// Profiles from `dir/profiles/*.toml`, then tutorials from `dir/*.toml`.
    pub fn load_dir(&self, dir: &Path) -> Result<usize, ContentError> {
        let profiles = dir.join("profiles");
        if profiles.is_dir() {
            for path in toml_files(&profiles)? {
                let profile = SyntaxProfile::from_toml(&read_file(&path)?)
                    .map_err(|e| ContentError::Load { path: path.display().to_string(), message: e.to_string() })?;
                self.put_profile(profile);
            }
        }
        let mut n = 0;
        for path in toml_files(dir)? {
            let tutorial = load_tutorial(&read_file(&path)?)
                .map_err(|e| ContentError::Load { path: path.display().to_string(), message: e.to_string() })?;
            self.add_tutorial(tutorial, None)?;
            n += 1;
        }
        Ok(n)
    }

    pub fn put_profile(&self, profile: SyntaxProfile) {
        write(&self.profiles).insert(profile.id.clone(), Arc::new(profile));
    }

    pub fn profile(&self, id: &str) -> Option<Arc<SyntaxProfile>> {
        read(&self.profiles).get(id).cloned()
    }

    /// Validate against the tutorial's profile and register. Returns the
    /// non-error diagnostics.
    pub fn add_tutorial(
        &self,
        tutorial: Tutorial,
        owner: Option<String>,
    ) -> Result<Vec<BlockDiagnostic>, ContentError> {
        let profile = self.profile(&tutorial.profile).ok_or_else(|| ContentError::UnknownProfile {
            tutorial: tutorial.id.clone(),
            profile: tutorial.profile.clone(),
        })?;
        let diagnostics = validate_tutorial(&tutorial, &profile);
        if diagnostics.iter().any(|d| d.diagnostic.severity == Severity::Error) {
            return Err(ContentError::Invalid(tutorial.id.clone(), diagnostics));
        }
        write(&self.tutorials).insert(tutorial.id.clone(), TutorialEntry { tutorial: Arc::new(tutorial), owner });
        Ok(diagnostics)
    }

    pub fn tutorial(&self, id: &str) -> Option<TutorialEntry> {
        read(&self.tutorials).get(id).cloned()
    }

    pub fn tutorial_ids(&self) -> Vec<String> {
        read(&self.tutorials).keys().cloned().collect()
    }

    pub fn course(&self, id: &str) -> Option<Course> {
        read(&self.courses).get(id).cloned()
    }

    pub fn courses(&self) -> Vec<Course> {
        read(&self.courses).values().cloned().collect()
    }

    /// Insert a new course; false if the id is taken.
    pub fn insert_course(&self, course: Course) -> bool {
        let mut all = write(&self.courses);
        if all.contains_key(&course.id) {
            return false;
        }
        all.insert(course.id.clone(), course);
        true
    }

    pub fn update_course<R>(&self, id: &str, f: impl FnOnce(&mut Course) -> R) -> Option<R> {
        write(&self.courses).get_mut(id).map(f)
    }

    /// Courses in which `tutorial_id` is listed.
    pub fn courses_with(&self, tutorial_id: &str) -> Vec<Course> {
        read(&self.courses).values().filter(|c| c.tutorials.iter().any(|t| t == tutorial_id)).cloned().collect()
    }
}

fn read_file(path: &Path) -> Result<String, ContentError> {
    std::fs::read_to_string(path)
        .map_err(|e| ContentError::Load { path: path.display().to_string(), message: e.to_string() })
}

fn toml_files(dir: &Path) -> Result<Vec<std::path::PathBuf>, ContentError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| ContentError::Load { path: dir.display().to_string(), message: e.to_string() })?;
    let mut files: Vec<_> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}
