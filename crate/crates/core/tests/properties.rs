mod support;

use std::collections::HashMap;

use proptest::prelude::*;

use tomsim::epistemics::{first_common_location, tom1_answer, tom2_answer, track};
use tomsim::eval::{aggregate, extract_answer, score_dataset, wilson_interval, Interval, Label, Mention, ScoreOptions, Z95};
use tomsim::modelgw::{run_dataset, BotKind, Responder, RunOptions};
use tomsim::render::{
    answer_surface, answer_surfaces, build_prompt, guard_tokens, paraphrase_story, parse_event, render_event,
    render_story, Identity, ParaphraseOptions, TextTransformer, TransformError,
};
use tomsim::simulator::{check_constraints, simulate, Event, Story};
use tomsim::storyboard::{
    first_order_board, name_pool, second_order_board, validate_storyboard, EntityKind, EnvironmentTag, EventSpec,
    LocationId, SuiteParams,
};
use tomsim::suites::{
    dataset_to_string, gen_character_suite, gen_mislead_suite, gen_sally_anne, gen_tom_wm_triad, validate_record,
    CharacterConfig, MisleadConfig, SallyAnneConfig, TriadConfig,
};

fn env_strategy() -> impl Strategy<Value = EnvironmentTag> {
    prop::sample::select(EnvironmentTag::ALL.to_vec())
}

/// Valid experiment parameters: order, distance, cast, locations, env.
fn params_strategy() -> impl Strategy<Value = SuiteParams> {
    (1u8..=2, 1u32..=80, 0usize..6, 0usize..3, env_strategy()).prop_map(|(order, d, extra_c, extra_l, env)| {
        let base = SuiteParams::mislead(order, d).with_environment(env);
        SuiteParams {
            num_characters: order as usize + 2 + extra_c,
            num_locations: order as usize + 3 + extra_l,
            ..base
        }
    })
}

fn build(params: &SuiteParams, seed: u64) -> (tomsim::storyboard::Storyboard, tomsim::storyboard::RoleBinding, tomsim::storyboard::ExpectedLocations) {
    if params.order == 1 {
        first_order_board(params, seed).unwrap()
    } else {
        second_order_board(params, seed).unwrap()
    }
}

/// Positions of every character after each timestep, by replay.
fn replay(story: &Story) -> Vec<HashMap<String, LocationId>> {
    let board = story.board();
    let mut pos: HashMap<String, LocationId> = board
        .characters
        .iter()
        .map(|c| (c.to_string(), board.graph.start.clone()))
        .collect();
    let mut out = vec![pos.clone()];
    for e in story.events() {
        pos.insert(e.actor.to_string(), e.location.clone());
        out.push(pos.clone());
    }
    out
}

/// Randomly drops words; keeps the sentence as-is on some attempts.
struct Lossy {
    seed: u64,
}

impl TextTransformer for Lossy {
    fn transform(&self, sentence: &str, _: f64, attempt: u32) -> Result<String, TransformError> {
        let h = sentence.bytes().fold(self.seed ^ u64::from(attempt), |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
        Ok(sentence
            .split(' ')
            .enumerate()
            .filter(|(i, _)| (h >> (i % 60)) & 3 != 0)
            .map(|(_, w)| w)
            .collect::<Vec<_>>()
            .join(" "))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn builders_are_pure_and_valid(params in params_strategy(), seed in any::<u64>()) {
        let (a, ra, ea) = build(&params, seed);
        let (b, rb, eb) = build(&params, seed);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(ra, rb);
        prop_assert_eq!(ea, eb);
        let report = validate_storyboard(&a);
        prop_assert!(report.is_valid(), "{}", report);
        // No protected character is pinned inside one of its windows.
        for spec in &a.event_specs {
            if let (Some(t), chars) = (spec.pinned_time(), spec.characters()) {
                if matches!(spec, EventSpec::MoveAt { .. }) {
                    prop_assert!(chars.iter().all(|c| !a.is_protected(c, t)));
                }
            }
        }
    }

    #[test]
    fn simulated_stories_satisfy_their_boards(params in params_strategy(), seed in any::<u64>()) {
        let (board, roles, expected) = build(&params, seed);
        let story = simulate(&board, seed).unwrap();
        prop_assert!(check_constraints(&story, &board).is_empty());
        prop_assert_eq!(story.len(), params.horizon);

        let positions = replay(&story);
        for (t, row) in positions.iter().enumerate() {
            for c in &board.characters {
                prop_assert_eq!(story.position(t as u32, c), row.get(c.as_str()));
            }
        }
        // Protected characters hold still inside their windows.
        for spec in &board.event_specs {
            if let EventSpec::ExclusiveRandom { protected, t_start, t_end } = spec {
                for c in protected {
                    let at = story.position(t_start - 1, c);
                    for t in *t_start..=*t_end {
                        prop_assert_eq!(story.position(t, c), at);
                    }
                }
            }
        }

        let answer = if params.order == 1 {
            tom1_answer(&story, &roles.s1, &roles.target).unwrap()
        } else {
            tom2_answer(&story, &roles.s1, roles.s2.as_ref().unwrap(), &roles.target).unwrap()
        };
        prop_assert_eq!(&answer, &expected.believed);
        let end = story.position(story.len(), &roles.target).unwrap();
        prop_assert_ne!(&answer, end);
        prop_assert_eq!(end, &expected.actual_final);
        prop_assert_eq!(first_common_location(&story, &roles.all()), Some(expected.first_common));
    }

    #[test]
    fn free_boards_simulate_soundly(seed in any::<u64>()) {
        let story = support::random_story(seed | 1);
        prop_assert!(check_constraints(&story, story.board()).is_empty());
    }

    #[test]
    fn render_parse_round_trip(
        env in env_strategy(),
        inanimate in any::<bool>(),
        actor_ix in 0usize..1000,
        loc_ix in 0usize..64,
    ) {
        let kind = if inanimate { EntityKind::Inanimate } else { EntityKind::Animate };
        let pool: Vec<String> = if inanimate {
            tomsim::storyboard::entity_pool().iter().map(|e| e.to_string()).collect()
        } else {
            name_pool().iter().map(|n| n.to_string()).collect()
        };
        let vertices = env.vertices(env.max_locations().min(16));
        let location = vertices[loc_ix % vertices.len()].clone();
        let e = Event {
            t: 1,
            actor: pool[actor_ix % pool.len()].as_str().into(),
            action: env.action_for(kind, &location),
            location,
        };
        let s = render_event(&e, env, kind).unwrap();
        prop_assert_eq!(parse_event(&s, env, kind).unwrap(), (e.actor, e.action, e.location));
    }

    #[test]
    fn paraphrase_guard_holds(seed in any::<u64>(), d in 1u32..40) {
        let (board, ..) = first_order_board(&SuiteParams::mislead(1, d), seed).unwrap();
        let story = simulate(&board, seed).unwrap();
        let p = paraphrase_story(&story, &Lossy { seed }, &ParaphraseOptions::default()).unwrap();
        prop_assert_eq!(p.lines.len(), story.events().len());
        for (line, e) in p.lines.iter().zip(story.events()) {
            let keeps = guard_tokens(e, board.environment).iter().all(|tok| line.text.contains(tok.as_str()));
            prop_assert!(keeps || line.fallback);
            if line.fallback {
                prop_assert_eq!(&line.text, &render_event(e, board.environment, board.entity_kind).unwrap());
            }
        }
        let same = paraphrase_story(&story, &Identity, &ParaphraseOptions::default()).unwrap();
        prop_assert_eq!(same.text(), render_story(&story).unwrap());
    }

    #[test]
    fn extraction_ignores_case_and_separators(env in env_strategy(), pick in 0usize..64, upper in any::<bool>()) {
        let vertices = env.vertices(env.max_locations().min(16));
        let known = answer_surfaces(env, &vertices);
        let want = &known[pick % known.len()];
        let spaced = want.replace('_', " ");
        let written = if upper { spaced.to_uppercase() } else { spaced };
        let text = format!("After thinking it over, the answer is {written}.");
        let got = extract_answer(&text, &known, Mention::Last);
        prop_assert_eq!(got.as_ref(), Some(want));
        let underscored = want.replace(' ', "_");
        let got = extract_answer(&underscored, &known, Mention::Last);
        prop_assert_eq!(got.as_ref(), Some(want));
    }
}

#[test]
fn distinct_seeds_give_distinct_stories() {
    let params = SuiteParams::mislead(1, 30);
    let (board, ..) = first_order_board(&params, 1).unwrap();
    let pinned = board.pinned_times();
    let free_events = |seed: u64| -> Vec<Event> {
        simulate(&board, seed)
            .unwrap()
            .events()
            .iter()
            .filter(|e| !pinned.contains(&e.t))
            .cloned()
            .collect()
    };
    for pair in 0..100u64 {
        assert_ne!(free_events(2 * pair + 10), free_events(2 * pair + 11), "pair {pair}");
    }
}

#[test]
fn tracker_agrees_with_itself_on_simulated_stories() {
    let (board, roles, _) = second_order_board(&SuiteParams::mislead(2, 12), 4).unwrap();
    let story = simulate(&board, 4).unwrap();
    let tl = track(&story).unwrap();
    let s2 = roles.s2.unwrap();
    assert_eq!(
        tl.tom2(&roles.s1, &s2, &roles.target).unwrap(),
        tom2_answer(&story, &roles.s1, &s2, &roles.target).unwrap()
    );
}

/// The interval endpoints are the roots of
/// (1 + z^2/n) p^2 - (2 phat + z^2/n) p + phat^2 = 0.
fn wilson_by_quadratic(k: u64, n: u64) -> (f64, f64) {
    let (nf, phat, z2) = (n as f64, k as f64 / n as f64, Z95 * Z95);
    let a = 1.0 + z2 / nf;
    let b = -(2.0 * phat + z2 / nf);
    let c = phat * phat;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    ((-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a))
}

#[test]
fn wilson_matches_the_quadratic_roots() {
    for n in 1..=1000u64 {
        for k in [0, 1, n / 2, n] {
            let (lo, hi) = wilson_interval(k, n, Z95);
            let (qlo, qhi) = wilson_by_quadratic(k, n);
            assert!((lo - qlo).abs() < 1e-9 && (hi - qhi).abs() < 1e-9, "n={n} k={k}: {lo},{hi} vs {qlo},{qhi}");
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi);
        }
    }
}

#[test]
fn prompts_are_byte_stable() {
    let story = "Alice enters room_1.\nBob enters room_1.";
    let q = "Where does Bob think Alice is?";
    let a = build_prompt(1, story, q).unwrap();
    assert_eq!(a, build_prompt(1, story, q).unwrap());
    assert!(a.ends_with("\n\nAlice enters room_1.\nBob enters room_1.\n\nQuestion: Where does Bob think Alice is?"));
}

#[test]
fn datasets_are_deterministic_and_cover_their_grid() {
    let sets = || {
        vec![
            gen_mislead_suite(&MisleadConfig::new(1, vec![1, 25], 5, 3)).unwrap(),
            gen_mislead_suite(&MisleadConfig::new(2, vec![4, 30], 5, 3)).unwrap(),
            gen_tom_wm_triad(&TriadConfig::new(4, 3)).unwrap(),
            gen_character_suite(&CharacterConfig::new(
                vec![2, 8, 20],
                3,
                3,
                vec![tomsim::epistemics::QuestionKind::Tom1, tomsim::epistemics::QuestionKind::WmHuman],
            ))
            .unwrap(),
            gen_sally_anne(&SallyAnneConfig::new(3, 3)).unwrap(),
        ]
    };
    for (a, b) in sets().iter().zip(sets()) {
        assert_eq!(dataset_to_string(a), dataset_to_string(&b));
        a.check_manifest().unwrap();
        for cell in &a.manifest.grid {
            assert_eq!(a.records.iter().filter(|r| r.cell() == *cell).count(), a.manifest.trials);
        }
        for r in &a.records {
            let report = validate_record(r);
            assert!(report.is_ok(), "{report}");
            assert_ne!(r.distractors.first_common_location.as_ref(), Some(&r.ground_truth));
        }
    }
}

#[test]
fn conference_and_holes_records_validate() {
    for env in [EnvironmentTag::HolesField, EnvironmentTag::ConferenceCall] {
        for order in [1, 2] {
            let ds = gen_mislead_suite(&MisleadConfig {
                environment: env,
                ..MisleadConfig::new(order, vec![7], 4, 9)
            })
            .unwrap();
            for r in &ds.records {
                let report = validate_record(r);
                assert!(report.is_ok(), "{report}");
                let surfaces = answer_surfaces(env, &env.vertices(r.num_locations));
                assert!(surfaces.contains(&r.ground_truth));
            }
        }
        let triad = gen_tom_wm_triad(&TriadConfig {
            environment: env,
            ..TriadConfig::new(2, 1)
        })
        .unwrap();
        assert!(triad.records.iter().all(|r| validate_record(r).is_ok()));
    }
}

#[test]
fn labels_partition_responses() {
    let ds = gen_mislead_suite(&MisleadConfig::new(1, vec![3, 60], 10, 8)).unwrap();
    let opts = ScoreOptions::default();
    for bot in BotKind::ALL {
        let responses = run_dataset(&Responder::Bot(bot), &ds, &RunOptions::default()).unwrap();
        let scored = score_dataset(&ds, &responses, &opts).unwrap();
        assert_eq!(scored.results.len(), ds.records.len());
        let rows = aggregate(&ds, &scored.results, &["mislead_distance".into()], Interval::Wilson).unwrap();
        for row in rows {
            assert_eq!(row.labels.total(), row.n);
            assert!(row.ci_low <= row.accuracy && row.accuracy <= row.ci_high);
        }
        if bot == BotKind::FirstCommonLocation {
            assert!(scored.results.iter().all(|r| r.label == Label::FirstCommonLocation));
        }
    }
}

#[test]
fn answer_surfaces_are_distinct() {
    for env in EnvironmentTag::ALL {
        let v = env.vertices(env.max_locations().min(16));
        let s = answer_surfaces(env, &v);
        let mut dedup = s.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), s.len(), "{env}");
        assert_eq!(answer_surface(env, &v[0]), s[0]);
    }
}
