//! Loading profiles and schedules, schedule hashes and output metadata.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stairwalk_core::rng::GENERATOR_ID;
use stairwalk_core::{ConstantsProfile, PhaseSchedule, PhaseSpec};

use crate::error::{AppError, AppResult};

fn read(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(AppError::io(path))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> AppResult<T> {
    serde_json::from_str(text).map_err(|source| AppError::Parse { path: path.into(), source })
}

/// `paper`, `scaled`, or a path to a profile JSON file.
pub fn load_profile(spec: &str) -> AppResult<ConstantsProfile> {
    let profile = match spec {
        "paper" => ConstantsProfile::paper(),
        "scaled" => ConstantsProfile::scaled(),
        path => {
            let path = Path::new(path);
            parse(path, &read(path)?)?
        }
    };
    profile.validate()?;
    Ok(profile)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScheduleFile {
    Wrapped { schedule: PhaseSchedule },
    Bare(PhaseSchedule),
}

/// Reads a schedule written by `stairwalk schedule`, with or without metadata.
pub fn load_schedule(path: &Path) -> AppResult<PhaseSchedule> {
    let text = read(path)?;
    // Parse twice so a malformed bare schedule reports its real error.
    match serde_json::from_str::<ScheduleFile>(&text) {
        Ok(ScheduleFile::Wrapped { schedule }) | Ok(ScheduleFile::Bare(schedule)) => Ok(schedule),
        Err(_) => parse::<PhaseSchedule>(path, &text),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PhaseFile {
    List(Vec<PhaseSpec>),
    Object { phases: Vec<PhaseSpec> },
}

/// Explicit phases, as a JSON list of `{length, a, threshold}` or `{"phases": [...]}`.
pub fn load_phases(path: &Path) -> AppResult<Vec<PhaseSpec>> {
    let text = read(path)?;
    match serde_json::from_str::<PhaseFile>(&text) {
        Ok(PhaseFile::List(p)) | Ok(PhaseFile::Object { phases: p }) => Ok(p),
        Err(_) => parse::<Vec<PhaseSpec>>(path, &text),
    }
}

/// SHA-256 of the compact JSON encoding of the schedule.
pub fn schedule_hash(schedule: &PhaseSchedule) -> String {
    let bytes = serde_json::to_vec(schedule).expect("schedules serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub generator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ConstantsProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule_hash: Option<String>,
}

impl Metadata {
    pub fn new() -> Self {
        Metadata {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            generator: GENERATOR_ID.into(),
            base_seed: None,
            profile: None,
            schedule_hash: None,
        }
    }

    pub fn for_schedule(schedule: &PhaseSchedule) -> Self {
        Metadata {
            profile: Some(schedule.profile.clone()),
            schedule_hash: Some(schedule_hash(schedule)),
            ..Self::new()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = Some(seed);
        self
    }
}

impl Default for Metadata {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stairwalk_core::schedule::build_paper_schedule;

    #[test]
    fn schedule_files_in_both_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let s = build_paper_schedule(0.5, &ConstantsProfile::scaled()).unwrap();
        let bare = dir.path().join("bare.json");
        fs::write(&bare, serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(load_schedule(&bare).unwrap(), s);
        let wrapped = dir.path().join("wrapped.json");
        let doc = serde_json::json!({"schedule": s, "metadata": Metadata::for_schedule(&s)});
        fs::write(&wrapped, doc.to_string()).unwrap();
        assert_eq!(load_schedule(&wrapped).unwrap(), s);
        let bad = dir.path().join("bad.json");
        fs::write(&bad, r#"{"sigma": 2.0}"#).unwrap();
        assert!(matches!(load_schedule(&bad), Err(AppError::Parse { .. })));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = build_paper_schedule(0.5, &ConstantsProfile::scaled()).unwrap();
        let b = build_paper_schedule(0.4, &ConstantsProfile::scaled()).unwrap();
        assert_eq!(schedule_hash(&a), schedule_hash(&a.clone()));
        assert_ne!(schedule_hash(&a), schedule_hash(&b));
        assert_eq!(schedule_hash(&a).len(), 64);
    }

    #[test]
    fn named_profiles() {
        assert_eq!(load_profile("paper").unwrap(), ConstantsProfile::paper());
        assert!(load_profile("/nonexistent/profile.json").is_err());
    }
}
