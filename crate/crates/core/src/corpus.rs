//! The bundled boiler drum-level case study.

use crate::fbd::{parse_program, Program};
use crate::fmr::{analyze_with, AnalysisOptions, ProfileChoice, ShortList};
use crate::quant::FailureDatabase;
use crate::system::{ImportSource, SystemModel};

/// Input-side safety program: three level channels with pressure correction
/// and 2oo3 low-level voting, two pressure channels with priority selection.
pub const DRUM_LEVEL_SIF: &str = include_str!("../corpus/drum_level_sif.json");

pub fn drum_level_program() -> Program {
    parse_program(DRUM_LEVEL_SIF).expect("bundled program parses")
}

/// Channel-state failure data: HEALTHY as a fixed probability, FAULTY as a
/// repairable rate, HI/LO as dormant undetected failures.
pub const CASE_STUDY_FAILURE_DATA: &str = include_str!("../corpus/case_study_failure_data.csv");

pub fn case_study_failure_data() -> FailureDatabase {
    FailureDatabase::from_csv(CASE_STUDY_FAILURE_DATA).expect("bundled failure data parses")
}

/// Component model of the logic solver and gas-skid final elements, with
/// the input subsystem imported from [`DRUM_LEVEL_SIF`] for both tops.
pub const SIS_SYSTEM: &str = include_str!("../corpus/sis_system.json");

/// Two instances of one CPU type sharing a supply that fails when both of
/// its basic events occur.
pub const CFT_CONTROLLER: &str = include_str!("../corpus/cft_controller.json");

/// Resolves imports against the bundled program and nothing else.
pub fn resolve_bundled(source: &ImportSource) -> Result<ShortList, String> {
    match source {
        ImportSource::Program {
            program,
            target,
            mode,
            profile,
        } if program == "drum_level_sif.json" => {
            let opts = AnalysisOptions {
                profile: profile.clone().map(ProfileChoice::Named).unwrap_or_default(),
                ..AnalysisOptions::default()
            };
            analyze_with(&drum_level_program(), target, *mode, &opts).map_err(|e| e.to_string())
        }
        other => Err(format!("not a bundled source: {other:?}")),
    }
}

pub fn sis_system() -> SystemModel {
    SystemModel::from_json(SIS_SYSTEM, &mut resolve_bundled).expect("bundled system model loads")
}

pub fn cft_controller() -> SystemModel {
    SystemModel::from_json(CFT_CONTROLLER, &mut resolve_bundled).expect("bundled controller model loads")
}
