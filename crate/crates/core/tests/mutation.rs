//! Corrupting a generated record must never go unnoticed.

use tomsim::storyboard::LocationId;
use tomsim::suites::{
    gen_mislead_suite, gen_sally_anne, gen_tom_wm_triad, validate_record, Dataset, MisleadConfig, QARecord,
    SallyAnneConfig, TriadConfig,
};

fn corpus() -> Vec<QARecord> {
    let sets: Vec<Dataset> = vec![
        gen_mislead_suite(&MisleadConfig::new(1, vec![1, 20], 3, 77)).unwrap(),
        gen_mislead_suite(&MisleadConfig::new(2, vec![5], 3, 77)).unwrap(),
        gen_tom_wm_triad(&TriadConfig::new(2, 77)).unwrap(),
        gen_sally_anne(&SallyAnneConfig::new(3, 77)).unwrap(),
    ];
    sets.into_iter().flat_map(|d| d.records).collect()
}

fn flagged(r: &QARecord) -> bool {
    !validate_record(r).is_ok()
}

#[test]
fn untouched_records_pass() {
    for r in corpus() {
        let report = validate_record(&r);
        assert!(report.is_ok(), "{report}");
    }
}

#[test]
fn moved_pinned_event_is_flagged() {
    for r in corpus() {
        for t in [10usize, 11] {
            if t >= r.events.len() {
                continue;
            }
            let mut bad = r.clone();
            bad.events.swap(t - 1, t);
            bad.events[t - 1].t = t as u32;
            bad.events[t].t = t as u32 + 1;
            if bad.events == r.events {
                continue;
            }
            assert!(flagged(&bad), "{} swap at {t}", r.id);
        }
    }
}

#[test]
fn changed_actor_is_flagged() {
    for r in corpus() {
        for t in 0..r.events.len() {
            let mut bad = r.clone();
            let other = r
                .events
                .iter()
                .map(|e| e.actor.clone())
                .find(|a| *a != r.events[t].actor)
                .unwrap();
            bad.events[t].actor = other;
            assert!(flagged(&bad), "{} actor at {}", r.id, t + 1);
        }
    }
}

#[test]
fn changed_location_or_action_is_flagged() {
    for r in corpus() {
        let mut bad = r.clone();
        let last = bad.events.len() - 1;
        bad.events[last].location = LocationId::from("nowhere");
        assert!(flagged(&bad), "{}", r.id);

        let mut bad = r.clone();
        bad.events[0].action = "teleports".into();
        assert!(flagged(&bad), "{}", r.id);
    }
}

#[test]
fn truncated_or_relabelled_records_are_flagged() {
    for r in corpus() {
        let mut bad = r.clone();
        bad.events.pop();
        assert!(flagged(&bad), "{}", r.id);

        let mut bad = r.clone();
        bad.ground_truth = r.distractors.true_final_location.clone();
        assert!(flagged(&bad), "{}", r.id);

        let mut bad = r.clone();
        bad.story_text.push_str("\nBob exits.");
        assert!(flagged(&bad), "{}", r.id);

        let mut bad = r.clone();
        bad.seed ^= 1;
        assert!(flagged(&bad), "{}", r.id);
    }
}
