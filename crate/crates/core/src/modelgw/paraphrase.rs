use super::{Client, GatewayError};
use crate::render::{TextTransformer, TransformError};

pub const PARAPHRASE_INSTRUCTION: &str = "Rewrite the following sentence so it reads more naturally. \
Keep every name and every place exactly as written. Reply with the rewritten sentence only.";

/// Paraphrases sentences through a chat model.
pub struct ChatTransformer {
    client: Client,
}

impl ChatTransformer {
    pub fn new(client: Client) -> Self {
        Self { client }
    }
}

impl TextTransformer for ChatTransformer {
    fn transform(&self, sentence: &str, temperature: f64, _attempt: u32) -> Result<String, TransformError> {
        let prompt = format!("{PARAPHRASE_INSTRUCTION}\n\n{sentence}");
        match self.client.complete_with(&prompt, temperature) {
            Ok(c) => Ok(c.raw_text.trim().to_owned()),
            Err(e @ (GatewayError::Auth(_) | GatewayError::MissingKey { .. })) => {
                Err(TransformError::Unavailable(e.to_string()))
            }
            Err(e) => Err(TransformError::Failed(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;
    use std::sync::Arc;

    use super::*;
    use crate::modelgw::{ChatReply, EndpointConfig, ReplayTransport};

    #[test]
    fn sends_the_instruction_and_sentence() {
        let prompt = format!("{PARAPHRASE_INSTRUCTION}\n\nBob enters room_2.");
        let t = ReplayTransport::new(HashMap::from([(prompt, ChatReply::text(" Then Bob walks into room_2. "))]));
        let cfg = EndpointConfig {
            model_name: "m".into(),
            api_key_env: None,
            ..EndpointConfig::default()
        };
        let tx = ChatTransformer::new(Client::new(cfg, Arc::new(t)).unwrap());
        assert_eq!(tx.transform("Bob enters room_2.", 1.3, 0).unwrap(), "Then Bob walks into room_2.");
        assert!(matches!(tx.transform("Other.", 1.3, 0), Err(TransformError::Failed(_))));
    }
}
