use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{Dataset, Distractors, GridCell, Manifest, QARecord, Suite, SuiteError, ENGINE_VERSION};
use crate::epistemics::{first_common_location, Question, QuestionKind};
use crate::render::{
    answer_surface, paraphrase_story, render_question, render_story, ParaphraseOptions, TextTransformer,
    DEFAULT_TEMPLATE,
};
use crate::seed::{derive_seed, rng, Seed, Stream};
use crate::simulator::{compress_unfillable_windows, simulate, Event, Story};
use crate::storyboard::{
    entity_pool, first_order_board, name_pool, sally_anne_board_named, second_order_board, BuilderError,
    CharacterId, EntityKind, EnvironmentTag, RoleBinding, Storyboard, SuiteParams,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MisleadConfig {
    pub order: u8,
    pub distances: Vec<u32>,
    pub trials: usize,
    pub base_seed: Seed,
    pub environment: EnvironmentTag,
    pub template_id: u32,
    pub num_characters: usize,
    pub num_locations: usize,
    pub horizon: u32,
}

impl MisleadConfig {
    pub fn new(order: u8, distances: Vec<u32>, trials: usize, base_seed: Seed) -> Self {
        let p = SuiteParams::mislead(order, 0);
        Self {
            order,
            distances,
            trials,
            base_seed,
            environment: p.environment,
            template_id: DEFAULT_TEMPLATE,
            num_characters: p.num_characters,
            num_locations: p.num_locations,
            horizon: p.horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriadConfig {
    pub trials: usize,
    pub base_seed: Seed,
    pub environment: EnvironmentTag,
    pub template_id: u32,
}

impl TriadConfig {
    pub fn new(trials: usize, base_seed: Seed) -> Self {
        Self {
            trials,
            base_seed,
            environment: EnvironmentTag::HallwaysDoors,
            template_id: DEFAULT_TEMPLATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterConfig {
    pub counts: Vec<usize>,
    pub trials: usize,
    pub base_seed: Seed,
    pub kinds: Vec<QuestionKind>,
    pub mislead_distance: u32,
    pub environment: EnvironmentTag,
    pub template_id: u32,
}

impl CharacterConfig {
    pub fn new(counts: Vec<usize>, trials: usize, base_seed: Seed, kinds: Vec<QuestionKind>) -> Self {
        Self {
            counts,
            trials,
            base_seed,
            kinds,
            mislead_distance: 30,
            environment: EnvironmentTag::HallwaysDoors,
            template_id: DEFAULT_TEMPLATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SallyAnneConfig {
    pub trials: usize,
    pub base_seed: Seed,
    /// Use "Sally" and "Anne" instead of sampling two names per trial.
    pub classic_names: bool,
    pub template_id: u32,
}

impl SallyAnneConfig {
    pub fn new(trials: usize, base_seed: Seed) -> Self {
        Self {
            trials,
            base_seed,
            classic_names: false,
            template_id: DEFAULT_TEMPLATE,
        }
    }
}

/// Everything needed to rebuild a record's storyboard.
#[derive(Debug, Clone)]
struct BoardKey {
    suite: Suite,
    params: SuiteParams,
    seed: Seed,
    inanimate: bool,
    /// Sally-Anne only: use the classic names instead of sampling a pair.
    classic_names: bool,
}

fn invalid(e: BuilderError) -> SuiteError {
    let BuilderError::InvalidParams(msg) = e;
    SuiteError::InvalidParams(msg)
}

fn build_board(key: &BoardKey) -> Result<(Storyboard, RoleBinding), SuiteError> {
    let (board, roles) = match key.suite {
        Suite::SallyAnne => {
            let (o, t) = sally_anne_pair(key.seed, key.classic_names);
            sally_anne_board_named(o, t)
        }
        Suite::Characters => {
            let (b, r, _) = first_order_board(&key.params, key.seed).map_err(invalid)?;
            (compress_unfillable_windows(&b), r)
        }
        Suite::Mislead | Suite::Triad if key.params.order == 2 => {
            let (b, r, _) = second_order_board(&key.params, key.seed).map_err(invalid)?;
            (b, r)
        }
        Suite::Mislead | Suite::Triad => {
            let (b, r, _) = first_order_board(&key.params, key.seed).map_err(invalid)?;
            (b, r)
        }
    };
    if key.inanimate {
        let rename = entity_renaming(&board, key.seed);
        let roles = RoleBinding {
            s1: rename(&roles.s1),
            s2: roles.s2.as_ref().map(&rename),
            target: rename(&roles.target),
        };
        Ok((inanimate_board(&board, &rename), roles))
    } else {
        Ok((board, roles))
    }
}

/// Maps each character to a distinct object from the entity pool.
fn entity_renaming(board: &Storyboard, seed: Seed) -> impl Fn(&CharacterId) -> CharacterId {
    let pool = entity_pool();
    let picks = sample(&mut rng(seed, Stream::Entities), pool.len(), board.characters.len());
    let map: BTreeMap<CharacterId, CharacterId> = board
        .characters
        .iter()
        .cloned()
        .zip(picks.iter().map(|i| CharacterId::new(pool[i].as_str())))
        .collect();
    move |c: &CharacterId| map.get(c).cloned().unwrap_or_else(|| c.clone())
}

fn inanimate_board(board: &Storyboard, rename: &impl Fn(&CharacterId) -> CharacterId) -> Storyboard {
    Storyboard {
        actions: board.environment.actions(EntityKind::Inanimate),
        entity_kind: EntityKind::Inanimate,
        ..board.map_characters(rename)
    }
}

/// The same events told about objects being moved.
fn inanimate_story(story: &Story, board: Storyboard, rename: &impl Fn(&CharacterId) -> CharacterId) -> Story {
    let events = story
        .events()
        .iter()
        .map(|e| Event {
            t: e.t,
            actor: rename(&e.actor),
            action: board.environment.action_for(EntityKind::Inanimate, &e.location),
            location: e.location.clone(),
        })
        .collect();
    Story::new(board, story.seed(), events).expect("renaming preserves references")
}

fn record_id(suite: Suite, cell: &GridCell, trial: usize, seed: Seed) -> String {
    let para = if cell.paraphrased { "-para" } else { "" };
    format!(
        "{suite}-{}-o{}-d{:03}-c{:03}-{}-t{trial:04}-{:08x}{para}",
        cell.environment,
        cell.order,
        cell.mislead_distance,
        cell.num_characters,
        cell.kind,
        seed >> 32,
    )
}

struct Job {
    suite: Suite,
    kind: QuestionKind,
    trial: usize,
    template_id: u32,
    key: BoardKey,
}

/// Simulates the story (or reuses one simulated for the same key) and
/// packages the question about it.
fn make_record(job: &Job, story: &Story, roles: &RoleBinding) -> Result<QARecord, SuiteError> {
    let board = story.board();
    let env = board.environment;
    let cell = GridCell {
        kind: job.kind,
        order: job.key.params.order,
        mislead_distance: job.key.params.mislead_distance,
        num_characters: board.characters.len(),
        environment: env,
        paraphrased: false,
    };
    let id = record_id(job.suite, &cell, job.trial, job.key.seed);
    let fail = |message: String| SuiteError::Generation {
        id: id.clone(),
        message,
    };
    let question = Question::new(job.kind, roles.clone()).map_err(|e| fail(e.to_string()))?;
    let answer = question.answer(story).map_err(|e| fail(e.to_string()))?;
    let fcl = first_common_location(story, &roles.all());
    let final_loc = story
        .position(story.len(), &roles.target)
        .ok_or_else(|| fail("target missing from story".into()))?;

    let mut meta = BTreeMap::new();
    meta.insert("suite".to_owned(), json!(job.suite.as_str()));
    meta.insert("trial".to_owned(), json!(job.trial));
    meta.insert("entity_kind".to_owned(), json!(board.entity_kind.as_str()));
    meta.insert("nominal_horizon".to_owned(), json!(job.key.params.horizon));
    meta.insert("effective_horizon".to_owned(), json!(board.horizon));
    if job.key.classic_names {
        meta.insert("classic_names".to_owned(), json!(true));
    }

    Ok(QARecord {
        id,
        environment: env,
        question_text: render_question(&question, env, board.entity_kind)?,
        question,
        order: job.key.params.order,
        mislead_distance: job.key.params.mislead_distance,
        seed: job.key.seed,
        num_characters: board.characters.len(),
        num_locations: board.graph.vertices.len(),
        horizon: story.len(),
        events: story.events().to_vec(),
        story_text: render_story(story)?,
        prompt_template_id: job.template_id,
        ground_truth: answer_surface(env, &answer),
        distractors: Distractors {
            first_common_location: fcl.map(|l| answer_surface(env, &l)),
            true_final_location: answer_surface(env, final_loc),
        },
        paraphrased: false,
        meta,
    })
}

/// Jobs that share a story are grouped so it is simulated once; the
/// inanimate variant of a triad is derived from the animate story.
fn run_groups(groups: Vec<Vec<Job>>) -> Result<Vec<QARecord>, SuiteError> {
    let nested: Vec<Vec<QARecord>> = groups
        .par_iter()
        .map(|jobs| {
            let first = &jobs[0];
            let animate = BoardKey {
                inanimate: false,
                ..first.key.clone()
            };
            let (board, roles) = build_board(&animate)?;
            let story = simulate(&board, animate.seed).map_err(|e| SuiteError::Generation {
                id: format!("{}-t{:04}", first.suite, first.trial),
                message: e.to_string(),
            })?;
            jobs.iter()
                .map(|job| {
                    if job.key.inanimate {
                        let rename = entity_renaming(&board, job.key.seed);
                        let (ib, iroles) = build_board(&job.key)?;
                        make_record(job, &inanimate_story(&story, ib, &rename), &iroles)
                    } else {
                        make_record(job, &story, &roles)
                    }
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let mut records: Vec<QARecord> = nested.into_iter().flatten().collect();
    sort_canonical(&mut records);
    Ok(records)
}

fn trial_of(r: &QARecord) -> u64 {
    r.meta.get("trial").and_then(Value::as_u64).unwrap_or(0)
}

fn sort_canonical(records: &mut [QARecord]) {
    records.sort_by(|a, b| (a.cell(), trial_of(a), &a.id).cmp(&(b.cell(), trial_of(b), &b.id)));
}

fn dataset(suite: Suite, base_seed: Seed, trials: usize, grid: BTreeSet<GridCell>, records: Vec<QARecord>) -> Dataset {
    Dataset {
        manifest: Manifest {
            suite,
            base_seed,
            engine_version: ENGINE_VERSION.to_owned(),
            trials,
            grid: grid.into_iter().collect(),
            record_count: records.len(),
        },
        records,
    }
}

fn check_template(id: u32) -> Result<(), SuiteError> {
    crate::render::prompt_template(id)
        .map(|_| ())
        .map_err(|e| SuiteError::InvalidParams(e.to_string()))
}

/// ToM questions of one order over a sweep of mislead distances.
pub fn gen_mislead_suite(cfg: &MisleadConfig) -> Result<Dataset, SuiteError> {
    if cfg.order != 1 && cfg.order != 2 {
        return Err(SuiteError::InvalidParams(format!("order must be 1 or 2, got {}", cfg.order)));
    }
    check_template(cfg.template_id)?;
    let kind = if cfg.order == 1 { QuestionKind::Tom1 } else { QuestionKind::Tom2 };
    let distances: BTreeSet<u32> = cfg.distances.iter().copied().collect();
    let mut grid = BTreeSet::new();
    let mut groups = Vec::new();
    for &d in &distances {
        if cfg.order == 2 && d == 0 {
            return Err(SuiteError::InvalidParams(
                "second-order stories need a mislead distance of at least 1".into(),
            ));
        }
        let params = SuiteParams {
            order: cfg.order,
            mislead_distance: d,
            num_characters: cfg.num_characters,
            num_locations: cfg.num_locations,
            horizon: cfg.horizon,
            environment: cfg.environment,
        };
        // Parameter errors surface here, before any work is spawned.
        build_board(&BoardKey {
            suite: Suite::Mislead,
            params: params.clone(),
            seed: 0,
            inanimate: false,
            classic_names: false,
        })?;
        grid.insert(GridCell {
            kind,
            order: cfg.order,
            mislead_distance: d,
            num_characters: cfg.num_characters,
            environment: cfg.environment,
            paraphrased: false,
        });
        for trial in 0..cfg.trials {
            let seed = derive_seed(
                cfg.base_seed,
                &["mislead", cfg.environment.as_str(), &cfg.order.to_string(), &d.to_string(), &trial.to_string()],
            );
            groups.push(vec![Job {
                suite: Suite::Mislead,
                kind,
                trial,
                template_id: cfg.template_id,
                key: BoardKey {
                    suite: Suite::Mislead,
                    params: params.clone(),
                    seed,
                    inanimate: false,
                    classic_names: false,
                },
            }]);
        }
    }
    Ok(dataset(Suite::Mislead, cfg.base_seed, cfg.trials, grid, run_groups(groups)?))
}

/// ToM2, WM-Human and WM-Inanimate questions over one shared second-order
/// story per trial (d = 30, 100 events).
pub fn gen_tom_wm_triad(cfg: &TriadConfig) -> Result<Dataset, SuiteError> {
    check_template(cfg.template_id)?;
    let params = SuiteParams::mislead(2, 30).with_environment(cfg.environment);
    let kinds = [QuestionKind::Tom2, QuestionKind::WmHuman, QuestionKind::WmInanimate];
    let grid = kinds
        .iter()
        .map(|&kind| GridCell {
            kind,
            order: 2,
            mislead_distance: params.mislead_distance,
            num_characters: params.num_characters,
            environment: cfg.environment,
            paraphrased: false,
        })
        .collect();
    let groups = (0..cfg.trials)
        .map(|trial| {
            let seed = derive_seed(cfg.base_seed, &["triad", cfg.environment.as_str(), &trial.to_string()]);
            kinds
                .iter()
                .map(|&kind| Job {
                    suite: Suite::Triad,
                    kind,
                    trial,
                    template_id: cfg.template_id,
                    key: BoardKey {
                        suite: Suite::Triad,
                        params: params.clone(),
                        seed,
                        inanimate: kind == QuestionKind::WmInanimate,
                        classic_names: false,
                    },
                })
                .collect()
        })
        .collect();
    Ok(dataset(Suite::Triad, cfg.base_seed, cfg.trials, grid, run_groups(groups)?))
}

/// First-order stories of 100 events with varying cast sizes. The ToM1 and
/// WM questions of one trial ask about the same story.
pub fn gen_character_suite(cfg: &CharacterConfig) -> Result<Dataset, SuiteError> {
    check_template(cfg.template_id)?;
    let kinds: BTreeSet<QuestionKind> = cfg.kinds.iter().copied().collect();
    if kinds.is_empty() {
        return Err(SuiteError::InvalidParams("no question kinds given".into()));
    }
    if let Some(k) = kinds
        .iter()
        .find(|k| !matches!(k, QuestionKind::Tom1 | QuestionKind::WmHuman))
    {
        return Err(SuiteError::InvalidParams(format!(
            "the character suite asks first-order questions only, not {k}"
        )));
    }
    let counts: BTreeSet<usize> = cfg.counts.iter().copied().collect();
    let mut grid = BTreeSet::new();
    let mut groups = Vec::new();
    for &count in &counts {
        if count < 2 {
            return Err(SuiteError::InvalidParams(format!("need at least 2 characters, got {count}")));
        }
        let params = SuiteParams::mislead(1, cfg.mislead_distance)
            .with_characters(count)
            .with_environment(cfg.environment);
        let probe = BoardKey {
            suite: Suite::Characters,
            params: params.clone(),
            seed: 0,
            inanimate: false,
            classic_names: false,
        };
        build_board(&probe)?;
        for &kind in &kinds {
            grid.insert(GridCell {
                kind,
                order: 1,
                mislead_distance: cfg.mislead_distance,
                num_characters: count,
                environment: cfg.environment,
                paraphrased: false,
            });
        }
        for trial in 0..cfg.trials {
            let seed = derive_seed(
                cfg.base_seed,
                &[
                    "characters",
                    cfg.environment.as_str(),
                    &count.to_string(),
                    &cfg.mislead_distance.to_string(),
                    &trial.to_string(),
                ],
            );
            let key = BoardKey { seed, ..probe.clone() };
            groups.push(
                kinds
                    .iter()
                    .map(|&kind| Job {
                        suite: Suite::Characters,
                        kind,
                        trial,
                        template_id: cfg.template_id,
                        key: key.clone(),
                    })
                    .collect(),
            );
        }
    }
    Ok(dataset(Suite::Characters, cfg.base_seed, cfg.trials, grid, run_groups(groups)?))
}

fn sally_anne_pair(seed: Seed, classic: bool) -> (CharacterId, CharacterId) {
    if classic {
        return ("Sally".into(), "Anne".into());
    }
    let pool = name_pool();
    let idx = sample(&mut rng(seed, Stream::Names), pool.len(), 2);
    (pool[idx.index(0)].as_str().into(), pool[idx.index(1)].as_str().into())
}

/// The five-event false-belief story, once per trial.
pub fn gen_sally_anne(cfg: &SallyAnneConfig) -> Result<Dataset, SuiteError> {
    check_template(cfg.template_id)?;
    let params = SuiteParams {
        order: 1,
        mislead_distance: 1,
        num_characters: 2,
        num_locations: 3,
        horizon: 5,
        environment: EnvironmentTag::HallwaysDoors,
    };
    let grid = BTreeSet::from([GridCell {
        kind: QuestionKind::Tom1,
        order: 1,
        mislead_distance: params.mislead_distance,
        num_characters: params.num_characters,
        environment: params.environment,
        paraphrased: false,
    }]);
    let groups = (0..cfg.trials)
        .map(|trial| {
            let seed = derive_seed(cfg.base_seed, &["sally_anne", &trial.to_string()]);
            vec![Job {
                suite: Suite::SallyAnne,
                kind: QuestionKind::Tom1,
                trial,
                template_id: cfg.template_id,
                key: BoardKey {
                    suite: Suite::SallyAnne,
                    params: params.clone(),
                    seed,
                    inanimate: false,
                    classic_names: cfg.classic_names,
                },
            }]
        })
        .collect();
    Ok(dataset(Suite::SallyAnne, cfg.base_seed, cfg.trials, grid, run_groups(groups)?))
}

fn board_key(record: &QARecord) -> Result<BoardKey, SuiteError> {
    let suite = record
        .suite()
        .ok_or_else(|| SuiteError::InvalidParams(format!("record `{}` does not name its suite", record.id)))?;
    let horizon = record
        .meta
        .get("nominal_horizon")
        .and_then(Value::as_u64)
        .map_or(record.horizon, |h| h as u32);
    Ok(BoardKey {
        suite,
        params: SuiteParams {
            order: record.order,
            mislead_distance: record.mislead_distance,
            num_characters: record.num_characters,
            num_locations: record.num_locations,
            horizon,
            environment: record.environment,
        },
        seed: record.seed,
        inanimate: record.question.kind == QuestionKind::WmInanimate,
        classic_names: record.meta.get("classic_names").and_then(Value::as_bool).unwrap_or(false),
    })
}

/// Re-derives the storyboard a record was generated from, using only the
/// record's parameters and seed.
pub fn rebuild_board(record: &QARecord) -> Result<Storyboard, SuiteError> {
    build_board(&board_key(record)?).map(|(b, _)| b)
}

/// The record's events attached to its rebuilt storyboard.
pub fn rebuild_story(record: &QARecord) -> Result<Story, SuiteError> {
    let board = rebuild_board(record)?;
    Story::new(board, record.seed, record.events.clone()).map_err(|e| SuiteError::Generation {
        id: record.id.clone(),
        message: e.to_string(),
    })
}

/// Appends a paraphrased copy of every template record. Lines that lose an
/// actor or location token keep their template sentence; the affected
/// timesteps are listed in the copy's meta.
pub fn add_paraphrased(
    ds: &Dataset,
    tx: &dyn TextTransformer,
    opts: &ParaphraseOptions,
) -> Result<Dataset, SuiteError> {
    let copies: Vec<QARecord> = ds
        .records
        .iter()
        .filter(|r| !r.paraphrased)
        .map(|r| {
            let story = rebuild_story(r)?;
            let p = paraphrase_story(&story, tx, opts).map_err(|e| SuiteError::Generation {
                id: r.id.clone(),
                message: e.to_string(),
            })?;
            let mut copy = r.clone();
            copy.paraphrased = true;
            copy.id = format!("{}-para", r.id);
            copy.story_text = p.text();
            copy.meta.insert("paraphrase_temperature".into(), json!(opts.temperature));
            copy.meta.insert("paraphrase_fallbacks".into(), json!(p.fallback_timesteps()));
            Ok(copy)
        })
        .collect::<Result<_, SuiteError>>()?;
    let mut grid: BTreeSet<GridCell> = ds.manifest.grid.iter().cloned().collect();
    grid.extend(
        ds.manifest
            .grid
            .iter()
            .filter(|c| !c.paraphrased)
            .map(|c| GridCell { paraphrased: true, ..c.clone() }),
    );
    let mut records = ds.records.clone();
    records.extend(copies);
    sort_canonical(&mut records);
    Ok(dataset(ds.manifest.suite, ds.manifest.base_seed, ds.manifest.trials, grid, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::Identity;
    use crate::simulator::check_constraints;

    #[test]
    fn mislead_grid_and_truths() {
        let ds = gen_mislead_suite(&MisleadConfig::new(1, vec![1, 10, 30], 4, 7)).unwrap();
        assert_eq!(ds.records.len(), 12);
        ds.check_manifest().unwrap();
        for r in &ds.records {
            let (_, _, exp) = first_order_board(
                &SuiteParams::mislead(1, r.mislead_distance),
                r.seed,
            )
            .unwrap();
            assert_eq!(r.ground_truth, exp.believed.as_str());
            assert_eq!(r.distractors.true_final_location, exp.actual_final.as_str());
            assert_eq!(r.distractors.first_common_location.as_deref(), Some(exp.first_common.as_str()));
            assert_eq!(r.horizon, 100);
            let story = rebuild_story(r).unwrap();
            assert!(check_constraints(&story, story.board()).is_empty());
        }
    }

    #[test]
    fn ids_are_stable_across_grids() {
        let a = gen_mislead_suite(&MisleadConfig::new(1, vec![10], 2, 3)).unwrap();
        let b = gen_mislead_suite(&MisleadConfig::new(1, vec![1, 10], 2, 3)).unwrap();
        for r in &a.records {
            assert_eq!(b.get(&r.id), Some(r));
        }
    }

    #[test]
    fn bad_params_are_rejected() {
        let err = |c: MisleadConfig| matches!(gen_mislead_suite(&c), Err(SuiteError::InvalidParams(_)));
        assert!(err(MisleadConfig::new(2, vec![95], 1, 0)));
        assert!(err(MisleadConfig::new(2, vec![0], 1, 0)));
        assert!(err(MisleadConfig::new(3, vec![5], 1, 0)));
        let too_many = CharacterConfig::new(vec![name_pool().len() + 1], 1, 0, vec![QuestionKind::Tom1]);
        assert!(matches!(gen_character_suite(&too_many), Err(SuiteError::InvalidParams(_))));
        let wrong_kind = CharacterConfig::new(vec![8], 1, 0, vec![QuestionKind::Tom2]);
        assert!(matches!(gen_character_suite(&wrong_kind), Err(SuiteError::InvalidParams(_))));
    }

    #[test]
    fn zero_trials_keep_the_grid() {
        let ds = gen_mislead_suite(&MisleadConfig::new(1, vec![1, 2], 0, 1)).unwrap();
        assert!(ds.records.is_empty());
        assert_eq!(ds.manifest.grid.len(), 2);
        ds.check_manifest().unwrap();
    }

    #[test]
    fn triad_shares_one_story() {
        let ds = gen_tom_wm_triad(&TriadConfig::new(2, 5)).unwrap();
        assert_eq!(ds.records.len(), 6);
        let names = name_pool();
        for trial in 0..2 {
            let rs: Vec<_> = ds.records.iter().filter(|r| trial_of(r) == trial).collect();
            assert_eq!(rs.len(), 3);
            assert_eq!(rs[0].ground_truth, rs[1].ground_truth);
            assert_eq!(rs[1].ground_truth, rs[2].ground_truth);
            let animate = rs.iter().find(|r| r.question.kind == QuestionKind::WmHuman).unwrap();
            let objects = rs.iter().find(|r| r.question.kind == QuestionKind::WmInanimate).unwrap();
            let locations = |r: &QARecord| r.events.iter().map(|e| e.location.clone()).collect::<Vec<_>>();
            assert_eq!(locations(animate), locations(objects));
            assert!(objects.story_text.lines().all(|l| l.starts_with("The ")));
            for name in names {
                assert!(!objects.story_text.contains(name.as_str()), "{name}");
            }
            let story = rebuild_story(objects).unwrap();
            assert!(check_constraints(&story, story.board()).is_empty());
        }
    }

    #[test]
    fn two_characters_compress() {
        let ds = gen_character_suite(&CharacterConfig::new(
            vec![2, 3],
            2,
            9,
            vec![QuestionKind::Tom1, QuestionKind::WmHuman],
        ))
        .unwrap();
        assert_eq!(ds.records.len(), 8);
        for r in &ds.records {
            let expect = if r.num_characters == 2 { 12 } else { 100 };
            assert_eq!(r.horizon, expect);
            assert_eq!(r.meta["effective_horizon"], json!(expect));
            assert_eq!(r.meta["nominal_horizon"], json!(100));
            let story = rebuild_story(r).unwrap();
            assert!(check_constraints(&story, story.board()).is_empty());
        }
    }

    #[test]
    fn sally_anne_records() {
        let ds = gen_sally_anne(&SallyAnneConfig {
            classic_names: true,
            ..SallyAnneConfig::new(1, 0)
        })
        .unwrap();
        let r = &ds.records[0];
        assert_eq!(r.horizon, 5);
        assert_eq!(r.ground_truth, "room_2");
        assert_eq!(r.distractors.true_final_location, "room_1");
        assert_eq!(r.question_text, "Where does Sally think Anne is?");
        let again = gen_sally_anne(&SallyAnneConfig::new(3, 4)).unwrap();
        let twice = gen_sally_anne(&SallyAnneConfig::new(3, 4)).unwrap();
        assert_eq!(again, twice);
        assert!(again.records.iter().all(|r| r.ground_truth == "room_2"));
    }

    #[test]
    fn identity_paraphrase_copies() {
        let ds = gen_sally_anne(&SallyAnneConfig::new(2, 1)).unwrap();
        let p = add_paraphrased(&ds, &Identity, &ParaphraseOptions::default()).unwrap();
        assert_eq!(p.records.len(), 4);
        p.check_manifest().unwrap();
        for r in p.records.iter().filter(|r| r.paraphrased) {
            let orig = ds.get(r.id.trim_end_matches("-para")).unwrap();
            assert_eq!(r.story_text, orig.story_text);
            assert_eq!(r.meta["paraphrase_fallbacks"], json!([]));
        }
    }
}
