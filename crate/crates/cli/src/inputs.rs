//! Loading programs, failure data, short lists and system models from disk,
//! falling back to the bundled case study where a file is optional.

use std::fs;
use std::path::{Path, PathBuf};

use fmr_core::corpus;
use fmr_core::fbd::{parse_program, validate_program, Program};
use fmr_core::fmr::{analyze_with, AnalysisError, AnalysisOptions, Mode, ProfileChoice, ShortList};
use fmr_core::quant::FailureDatabase;
use fmr_core::system::{ImportSource, SystemModel};

use crate::Fail;

pub fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

pub fn program(path: Option<&Path>) -> Result<Program, Fail> {
    match path {
        None => Ok(corpus::drum_level_program()),
        Some(p) => parse_program(&read(p)?).map_err(|e| Fail::input(format!("{}: {e}", p.display()))),
    }
}

pub fn failure_data(path: Option<&Path>) -> Result<FailureDatabase, Fail> {
    match path {
        None => Ok(corpus::case_study_failure_data()),
        Some(p) => FailureDatabase::from_csv(&read(p)?).map_err(|e| Fail::input(format!("{}: {e}", p.display()))),
    }
}

pub fn profile_choice(profile: Option<&str>, no_profile: bool) -> ProfileChoice {
    match (profile, no_profile) {
        (_, true) => ProfileChoice::None,
        (Some(name), false) => ProfileChoice::Named(name.to_string()),
        (None, false) => ProfileChoice::Demand,
    }
}

pub fn analysis_failure(e: AnalysisError) -> Fail {
    match e {
        AnalysisError::Invalid(_) => Fail::finding(e.to_string()),
        _ => Fail::input(e.to_string()),
    }
}

pub fn analyze(p: &Program, target: &str, mode: Mode, profile: ProfileChoice) -> Result<ShortList, Fail> {
    let opts = AnalysisOptions {
        profile,
        ..AnalysisOptions::default()
    };
    analyze_with(p, target, mode, &opts).map_err(analysis_failure)
}

/// Imports resolve relative to the directory of the system file.
pub fn system(path: Option<&Path>) -> Result<SystemModel, Fail> {
    let Some(path) = path else {
        return Ok(corpus::sis_system());
    };
    let text = read(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let mut resolve = |src: &ImportSource| -> Result<ShortList, String> {
        match src {
            ImportSource::ShortList { shortlist } => {
                let file = base.join(shortlist);
                let text = fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
                ShortList::from_json(&text).map_err(|e| format!("{}: {e}", file.display()))
            }
            ImportSource::Program {
                program,
                target,
                mode,
                profile,
            } => {
                let file = base.join(program);
                let text = fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
                let p = parse_program(&text).map_err(|e| format!("{}: {e}", file.display()))?;
                let opts = AnalysisOptions {
                    profile: profile.clone().map(ProfileChoice::Named).unwrap_or_default(),
                    ..AnalysisOptions::default()
                };
                analyze_with(&p, target, *mode, &opts).map_err(|e| format!("{}: {e}", file.display()))
            }
        }
    };
    SystemModel::from_json(&text, &mut resolve).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

/// Diagnostics for a program file, empty when it is valid.
pub fn program_diagnostics(p: &Program) -> Vec<String> {
    validate_program(p).iter().map(ToString::to_string).collect()
}
