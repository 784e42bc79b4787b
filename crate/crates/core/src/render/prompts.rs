use std::sync::OnceLock;

use serde::Deserialize;

use super::RenderError;

pub const DEFAULT_TEMPLATE: u32 = 1;
pub const TEMPLATE_IDS: std::ops::RangeInclusive<u32> = 1..=12;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PromptTemplate {
    pub id: u32,
    pub text: String,
}

#[derive(Deserialize)]
struct Library {
    template: Vec<PromptTemplate>,
}

static LIBRARY: OnceLock<Vec<PromptTemplate>> = OnceLock::new();

fn library() -> &'static [PromptTemplate] {
    LIBRARY.get_or_init(|| {
        let lib: Library = toml::from_str(include_str!("../../data/prompt_templates.toml"))
            .expect("bundled prompt templates parse");
        lib.template
    })
}

pub fn prompt_template(id: u32) -> Result<&'static PromptTemplate, RenderError> {
    library()
        .iter()
        .find(|t| t.id == id)
        .ok_or(RenderError::UnknownTemplate(id))
}

/// Instruction, story and question, separated by blank lines.
pub fn build_prompt(template_id: u32, story_text: &str, question_text: &str) -> Result<String, RenderError> {
    let template = prompt_template(template_id)?;
    Ok(format!("{}\n\n{}\n\nQuestion: {}", template.text, story_text, question_text))
}
