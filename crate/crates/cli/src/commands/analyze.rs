use std::fs::File;
use std::path::Path;

use hydrostat_core::control::Thresholds;
use hydrostat_core::evaluation::{
    compare_trial_pairs, read_survey, read_trials, render_survey_report, render_trial_table,
    survey_report, trial_report_csv, SurveyReport, TrialReport,
};
use serde::Serialize;

use super::{emit, to_json};
use crate::{AnalyzeArgs, CliError};

#[derive(Serialize)]
struct Output {
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<TrialReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    survey: Option<SurveyReport>,
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn run(args: AnalyzeArgs) -> Result<(), CliError> {
    if args.trials.is_none() && args.survey.is_none() {
        return Err(CliError::Usage(
            "nothing to analyze: pass --trials and/or --survey".into(),
        ));
    }
    let usage = |path: &Path, e: &dyn std::fmt::Display| {
        CliError::Usage(format!("{}: {e}", path.display()))
    };
    let trials = match &args.trials {
        Some(path) => {
            let pairs = read_trials(open(path)?).map_err(|e| usage(path, &e))?;
            Some(compare_trial_pairs(&pairs, &Thresholds::default()).map_err(|e| usage(path, &e))?)
        }
        None => None,
    };
    let survey = match &args.survey {
        Some(path) => {
            let matrix = read_survey(open(path)?).map_err(|e| usage(path, &e))?;
            Some(survey_report(&matrix).map_err(|e| usage(path, &e))?)
        }
        None => None,
    };

    if let (Some(dir), Some(report)) = (&args.out, &trials) {
        emit(
            Some(dir),
            "trials.csv",
            &trial_report_csv(report).map_err(CliError::runtime)?,
        )?;
    }
    let output = Output { trials, survey };
    if args.json {
        print!("{}", to_json(&output));
        return Ok(());
    }
    let mut sections = Vec::new();
    if let Some(t) = &output.trials {
        sections.push(render_trial_table(t));
    }
    if let Some(s) = &output.survey {
        sections.push(render_survey_report(s));
    }
    print!("{}", sections.join("\n"));
    Ok(())
}
