//! Storyboard-driven generation of false-belief stories, an exact belief
//! oracle for first- and second-order questions, natural-language rendering,
//! and an evaluation harness for language-model responses.
//!
//! The pipeline is:
//!
//! 1. [`storyboard`] describes the cast, the location graph and the pinned
//!    events a story must contain.
//! 2. [`simulator`] fills every other timestep with random but legal moves.
//! 3. [`epistemics`] replays the story and tracks what everyone believes.
//! 4. [`render`] turns events and questions into text and full prompts.
//! 5. [`suites`] assembles experiment datasets from the above.
//! 6. [`modelgw`] collects answers from hosted models or built-in bots.
//! 7. [`eval`] extracts, labels and aggregates those answers.

pub mod epistemics;
pub mod eval;
pub mod modelgw;
pub mod render;
pub mod seed;
pub mod simulator;
pub mod storyboard;
pub mod suites;

pub use epistemics::{track, Belief, BeliefTimeline, Question, QuestionKind};
pub use simulator::{check_constraints, simulate, Event, Story};
pub use storyboard::{
    CharacterId, EntityKind, EnvironmentTag, EventSpec, LocationGraph, LocationId, RoleBinding,
    Storyboard, SuiteParams,
};
