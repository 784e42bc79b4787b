use std::fmt;

use serde::Serialize;

use super::{QARecord, Suite};
use crate::epistemics::first_common_location;
use crate::render::{answer_surface, render_question, render_story};
use crate::simulator::{check_constraints, Story, ViolationList};
use crate::storyboard::{PatternTimes, Storyboard};

/// Result of re-checking one record against its storyboard and the oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordReport {
    pub id: String,
    /// Constraint violations of the events against the rebuilt storyboard.
    pub violations: ViolationList,
    /// Field, oracle and rendering disagreements.
    pub problems: Vec<String>,
}

impl RecordReport {
    /// The events satisfy the storyboard.
    pub fn satisfies_board(&self) -> bool {
        self.violations.is_empty() && !self.problems.iter().any(|p| p.starts_with("rebuild"))
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty() && self.problems.is_empty()
    }
}

impl fmt::Display for RecordReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "{}: ok", self.id);
        }
        writeln!(f, "{}:", self.id)?;
        for v in &self.violations.items {
            writeln!(f, "  t={} {}: {}", v.timestep, v.code.as_str(), v.detail)?;
        }
        for p in &self.problems {
            writeln!(f, "  {p}")?;
        }
        Ok(())
    }
}

/// Checks that a record's size fields describe its storyboard and events,
/// and that the pinned pattern sits where the order and distance put it.
pub fn structural_checks(record: &QARecord, board: &Storyboard) -> Vec<String> {
    let mut out = Vec::new();
    let mut expect = |what: &str, got: String, want: String| {
        if got != want {
            out.push(format!("{what}: record says {got}, storyboard has {want}"));
        }
    };
    expect("horizon", record.horizon.to_string(), board.horizon.to_string());
    expect("event count", record.events.len().to_string(), board.horizon.to_string());
    expect("num_characters", record.num_characters.to_string(), board.characters.len().to_string());
    expect("num_locations", record.num_locations.to_string(), board.graph.vertices.len().to_string());
    expect("environment", record.environment.to_string(), board.environment.to_string());
    if !board.graph.is_complete() {
        out.push("location graph is not fully connected".into());
    }
    let compressed = board.horizon != record.meta.get("nominal_horizon").and_then(|v| v.as_u64()).unwrap_or(board.horizon as u64) as u32;
    if record.suite() != Some(Suite::SallyAnne) && !compressed {
        let want = PatternTimes::new(record.order, record.mislead_distance).pinned();
        let got = board.pinned_times();
        if got != want {
            out.push(format!("pinned timesteps {got:?}, expected {want:?}"));
        }
    }
    out
}

fn oracle_checks(record: &QARecord, story: &Story, out: &mut Vec<String>) {
    let env = record.environment;
    let kind = story.board().entity_kind;
    match record.question.answer(story) {
        Ok(l) => {
            let want = answer_surface(env, &l);
            if record.ground_truth != want {
                out.push(format!("ground_truth `{}`, oracle says `{want}`", record.ground_truth));
            }
        }
        Err(e) => out.push(format!("oracle: {e}")),
    }
    let fcl = first_common_location(story, &record.question.roles.all()).map(|l| answer_surface(env, &l));
    if record.distractors.first_common_location != fcl {
        out.push(format!(
            "first_common_location {:?}, oracle says {fcl:?}",
            record.distractors.first_common_location
        ));
    }
    if fcl.as_deref() == Some(record.ground_truth.as_str()) {
        out.push("first_common_location equals ground_truth".into());
    }
    match story.position(story.len(), &record.question.roles.target) {
        Some(l) if answer_surface(env, l) == record.distractors.true_final_location => {}
        Some(l) => out.push(format!(
            "true_final_location `{}`, story ends at `{}`",
            record.distractors.true_final_location,
            answer_surface(env, l)
        )),
        None => out.push("target does not appear in the story".into()),
    }
    match render_question(&record.question, env, kind) {
        Ok(q) if q == record.question_text => {}
        Ok(q) => out.push(format!("question_text differs from `{q}`")),
        Err(e) => out.push(format!("question: {e}")),
    }
    if !record.paraphrased {
        match render_story(story) {
            Ok(s) if s == record.story_text => {}
            Ok(_) => out.push("story_text differs from the rendered events".into()),
            Err(e) => out.push(format!("story: {e}")),
        }
    }
}

/// Rebuilds the record's storyboard from its parameters and seed, then
/// checks the events, the stored answers and the size fields.
pub fn validate_record(record: &QARecord) -> RecordReport {
    let mut report = RecordReport {
        id: record.id.clone(),
        violations: ViolationList::default(),
        problems: Vec::new(),
    };
    let board = match super::rebuild_board(record) {
        Ok(b) => b,
        Err(e) => {
            report.problems.push(format!("rebuild: {e}"));
            return report;
        }
    };
    report.problems.extend(structural_checks(record, &board));
    let story = match Story::new(board.clone(), record.seed, record.events.clone()) {
        Ok(s) => s,
        Err(e) => {
            report.problems.push(format!("rebuild: {e}"));
            return report;
        }
    };
    report.violations = check_constraints(&story, &board);
    oracle_checks(record, &story, &mut report.problems);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::ViolationCode;
    use crate::suites::{gen_mislead_suite, MisleadConfig};

    fn record() -> QARecord {
        gen_mislead_suite(&MisleadConfig::new(1, vec![20], 1, 2)).unwrap().records.remove(0)
    }

    #[test]
    fn generated_records_pass() {
        let r = validate_record(&record());
        assert!(r.is_ok(), "{r}");
    }

    #[test]
    fn tampered_events_are_caught() {
        let mut r = record();
        let t11 = &mut r.events[10];
        t11.location = if t11.location.as_str() == "room_1" { "room_2" } else { "room_1" }.into();
        let rep = validate_record(&r);
        assert!(!rep.satisfies_board());
        assert!(rep.violations.codes().iter().any(|(c, _)| *c == ViolationCode::PinnedUnmet));
    }

    #[test]
    fn tampered_fields_are_caught() {
        let mut r = record();
        r.ground_truth = r.distractors.true_final_location.clone();
        assert!(validate_record(&r).problems.iter().any(|p| p.starts_with("ground_truth")));
        let mut r = record();
        r.num_locations = 7;
        let rep = validate_record(&r);
        assert!(!rep.is_ok());
        let mut r = record();
        r.horizon = 99;
        assert!(validate_record(&r).problems.iter().any(|p| p.starts_with("horizon")));
    }
}
