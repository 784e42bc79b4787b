use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EventSpec, GraphIndex, Storyboard};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValidationCode {
    EmptyCharacters,
    DuplicateCharacter,
    EmptyActions,
    ZeroHorizon,
    EmptyGraph,
    DuplicateVertex,
    StartNotVertex,
    SelfLoop,
    EdgeUnknownVertex,
    UnreachableVertex,
    TimestepOutOfRange,
    PinnedClash,
    UnknownCharacter,
    UnknownLocation,
    CrossPathsTooFew,
    CrossPathsDuplicate,
    WindowInverted,
    WindowConflict,
}

impl ValidationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationCode::EmptyCharacters => "EMPTY_CHARACTERS",
            ValidationCode::DuplicateCharacter => "DUPLICATE_CHARACTER",
            ValidationCode::EmptyActions => "EMPTY_ACTIONS",
            ValidationCode::ZeroHorizon => "ZERO_HORIZON",
            ValidationCode::EmptyGraph => "EMPTY_GRAPH",
            ValidationCode::DuplicateVertex => "DUPLICATE_VERTEX",
            ValidationCode::StartNotVertex => "START_NOT_VERTEX",
            ValidationCode::SelfLoop => "SELF_LOOP",
            ValidationCode::EdgeUnknownVertex => "EDGE_UNKNOWN_VERTEX",
            ValidationCode::UnreachableVertex => "UNREACHABLE_VERTEX",
            ValidationCode::TimestepOutOfRange => "TIMESTEP_OUT_OF_RANGE",
            ValidationCode::PinnedClash => "PINNED_CLASH",
            ValidationCode::UnknownCharacter => "UNKNOWN_CHARACTER",
            ValidationCode::UnknownLocation => "UNKNOWN_LOCATION",
            ValidationCode::CrossPathsTooFew => "CROSS_PATHS_TOO_FEW",
            ValidationCode::CrossPathsDuplicate => "CROSS_PATHS_DUPLICATE",
            ValidationCode::WindowInverted => "WINDOW_INVERTED",
            ValidationCode::WindowConflict => "WINDOW_CONFLICT",
        }
    }
}

impl fmt::Display for ValidationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ValidationCode,
    /// Index into `event_specs` when the violation belongs to a spec.
    pub spec_index: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ValidationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ValidationCode, spec_index: Option<usize>, detail: String) {
        self.violations.push(Violation {
            code,
            spec_index,
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match v.spec_index {
                Some(ix) => write!(f, "{} (event {}): {}", v.code, ix, v.detail)?,
                None => write!(f, "{}: {}", v.code, v.detail)?,
            }
        }
        Ok(())
    }
}

/// Lists every invariant violation of `sb`. Never aborts early.
pub fn validate_storyboard(sb: &Storyboard) -> ValidationReport {
    use ValidationCode::*;
    let mut report = ValidationReport::default();

    if sb.characters.is_empty() {
        report.push(EmptyCharacters, None, "no characters".into());
    }
    let mut seen = HashSet::new();
    for c in &sb.characters {
        if !seen.insert(c) {
            report.push(DuplicateCharacter, None, format!("`{c}` listed twice"));
        }
    }
    if sb.actions.is_empty() {
        report.push(EmptyActions, None, "no actions".into());
    }
    if sb.horizon == 0 {
        report.push(ZeroHorizon, None, "horizon must be positive".into());
    }
    check_graph(sb, &mut report);

    let mut pinned: BTreeMap<u32, usize> = BTreeMap::new();
    for (ix, spec) in sb.event_specs.iter().enumerate() {
        for c in spec.characters() {
            if sb.character_index(c).is_none() {
                report.push(UnknownCharacter, Some(ix), format!("`{c}` is not a character"));
            }
        }
        if let Some(l) = spec.location() {
            if !sb.graph.contains(l) {
                report.push(UnknownLocation, Some(ix), format!("`{l}` is not a vertex"));
            }
        }
        match spec {
            EventSpec::MoveAt { t, .. } | EventSpec::CrossPaths { t, .. } => {
                if *t == 0 || *t > sb.horizon {
                    report.push(
                        TimestepOutOfRange,
                        Some(ix),
                        format!("t={t} outside 1..={}", sb.horizon),
                    );
                }
                if let Some(prev) = pinned.insert(*t, ix) {
                    report.push(
                        PinnedClash,
                        Some(ix),
                        format!("t={t} already pinned by event {prev}"),
                    );
                }
            }
            EventSpec::ExclusiveRandom { t_start, t_end, .. } => {
                if t_start > t_end {
                    report.push(
                        WindowInverted,
                        Some(ix),
                        format!("window {t_start}..={t_end} is inverted"),
                    );
                }
                for t in [t_start, t_end] {
                    if *t == 0 || *t > sb.horizon {
                        report.push(
                            TimestepOutOfRange,
                            Some(ix),
                            format!("window bound {t} outside 1..={}", sb.horizon),
                        );
                    }
                }
            }
        }
        if let EventSpec::CrossPaths { characters, .. } = spec {
            if characters.len() < 2 {
                report.push(
                    CrossPathsTooFew,
                    Some(ix),
                    format!("{} character(s), need at least 2", characters.len()),
                );
            }
            let distinct: HashSet<_> = characters.iter().collect();
            if distinct.len() != characters.len() {
                report.push(CrossPathsDuplicate, Some(ix), "repeated character".into());
            }
        }
    }

    // a pinned move of a protected character inside its window contradicts it
    for (ix, spec) in sb.event_specs.iter().enumerate() {
        let EventSpec::ExclusiveRandom {
            protected,
            t_start,
            t_end,
        } = spec
        else {
            continue;
        };
        for (jx, other) in sb.event_specs.iter().enumerate() {
            if let EventSpec::MoveAt { character, t, .. } = other {
                if (*t_start..=*t_end).contains(t) && protected.contains(character) {
                    report.push(
                        WindowConflict,
                        Some(ix),
                        format!("event {jx} moves protected `{character}` at t={t}"),
                    );
                }
            }
        }
    }
    report
}

fn check_graph(sb: &Storyboard, report: &mut ValidationReport) {
    use ValidationCode::*;
    let g = &sb.graph;
    if g.vertices.is_empty() {
        report.push(EmptyGraph, None, "graph has no vertices".into());
        return;
    }
    let mut seen = HashSet::new();
    for v in &g.vertices {
        if !seen.insert(v) {
            report.push(DuplicateVertex, None, format!("`{v}` listed twice"));
        }
    }
    if !g.contains(&g.start) {
        report.push(StartNotVertex, None, format!("start `{}` is not a vertex", g.start));
    }
    let mut endpoints_ok = true;
    for (a, b) in &g.edges {
        if a == b {
            report.push(SelfLoop, None, format!("self-loop on `{a}`"));
        }
        for end in [a, b] {
            if !g.contains(end) {
                endpoints_ok = false;
                report.push(EdgeUnknownVertex, None, format!("edge endpoint `{end}` is not a vertex"));
            }
        }
    }
    if !endpoints_ok || !g.contains(&g.start) {
        return;
    }
    if let Some(index) = GraphIndex::new(g) {
        for (i, reached) in index.reachable_from_start().into_iter().enumerate() {
            if !reached {
                report.push(
                    UnreachableVertex,
                    None,
                    format!("`{}` unreachable from `{}`", index.name(i), g.start),
                );
            }
        }
    }
}
