use std::sync::OnceLock;

use super::CharacterId;

static NAMES: OnceLock<Vec<CharacterId>> = OnceLock::new();
static ENTITIES: OnceLock<Vec<CharacterId>> = OnceLock::new();

fn parse_pool(text: &str) -> Vec<CharacterId> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(CharacterId::from)
        .collect()
}

/// Bundled pool of distinct first names for animate characters.
pub fn name_pool() -> &'static [CharacterId] {
    NAMES.get_or_init(|| parse_pool(include_str!("../../data/names.txt")))
}

/// Bundled pool of object names for inanimate stories; disjoint from names.
pub fn entity_pool() -> &'static [CharacterId] {
    ENTITIES.get_or_init(|| parse_pool(include_str!("../../data/entities.txt")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn pools_are_large_distinct_and_disjoint() {
        let names: HashSet<_> = name_pool().iter().collect();
        assert!(names.len() >= 200);
        assert_eq!(names.len(), name_pool().len());
        let ents: HashSet<_> = entity_pool().iter().collect();
        assert_eq!(ents.len(), entity_pool().len());
        let lower: HashSet<String> = name_pool().iter().map(|n| n.as_str().to_lowercase()).collect();
        assert!(entity_pool().iter().all(|e| !lower.contains(e.as_str())));
        // names are single tokens so rendered sentences parse back unambiguously
        assert!(name_pool().iter().all(|n| !n.as_str().contains(' ')));
    }
}
