use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Which mention counts when a response names several locations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mention {
    #[default]
    Last,
    First,
}

/// Lowercases, drops apostrophes and turns every other non-alphanumeric
/// run into a single space, with a space at both ends so that matching
/// `" {key} "` respects word boundaries.
fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push(' ');
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch == '\'' || ch == '\u{2019}' {
            continue;
        }
        if ch.is_alphanumeric() {
            out.push(ch);
        } else if !out.ends_with(' ') {
            out.push(' ');
        }
    }
    if !out.ends_with(' ') {
        out.push(' ');
    }
    out
}

/// A location's matching key: normalized, without a leading article, so
/// "the city hall", "City Hall" and "city_hall" all agree.
fn key(surface: &str) -> String {
    let n = normalize(surface);
    match n.strip_prefix(" the ") {
        Some(rest) if !rest.trim().is_empty() => format!(" {rest}"),
        _ => n,
    }
}

/// Finds the known location mentioned last (or first) in `raw_text`.
/// Matching ignores case, articles and the choice of separator, so
/// "Room 3" and "room_3" both name `room_3`. Returns the known form.
pub fn extract_answer(raw_text: &str, known_locations: &[String], mention: Mention) -> Option<String> {
    let text = normalize(raw_text);
    let mut best: Option<(usize, usize, &String)> = None;
    for loc in known_locations {
        let k = key(loc);
        if k.trim().is_empty() {
            continue;
        }
        let found = match mention {
            Mention::Last => text.rfind(k.as_str()),
            Mention::First => text.find(k.as_str()),
        };
        let Some(start) = found else { continue };
        let end = start + k.len();
        let better = match (best, mention) {
            (None, _) => true,
            // Later end wins; on a tie the longer key is the more specific.
            (Some((s, e, _)), Mention::Last) => end > e || (end == e && start < s),
            (Some((s, e, _)), Mention::First) => start < s || (start == s && end > e),
        };
        if better {
            best = Some((start, end, loc));
        }
    }
    best.map(|(_, _, loc)| loc.clone())
}

/// Case-insensitive substring phrases that mark a refusal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefusalList {
    phrases: Vec<String>,
}

impl RefusalList {
    /// One phrase per line; blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Self {
        let phrases = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        Self { phrases }
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn matches(&self, text: &str) -> bool {
        let lower = text.to_lowercase().replace('\u{2019}', "'");
        self.phrases.iter().any(|p| lower.contains(p.as_str()))
    }
}

impl Default for RefusalList {
    fn default() -> Self {
        static DEFAULT: OnceLock<RefusalList> = OnceLock::new();
        DEFAULT
            .get_or_init(|| RefusalList::from_text(include_str!("../../data/refusals.txt")))
            .clone()
    }
}
