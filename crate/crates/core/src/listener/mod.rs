//! Reconstructor listeners: `log L(i | o)`, how recoverable an input is from
//! an output text.

mod attribute;
mod reverse;

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mr::{AttributeSchema, Input};
use crate::vocab::{TokenId, Vocabulary};

pub use attribute::{train_attribute_listener, AttributeClassifierListener, ABSENT};
pub use reverse::{reverse_pairs, ReverseSpeakerListener};

pub trait ListenerModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    /// `log L(input | output)`; `output` may carry a trailing EOS.
    fn reconstruction_logprob(&self, input: &Input, output: &[TokenId]) -> Result<f64>;
}

/// Loads an `attribute-nb` or `reverse` listener file. The schema is needed
/// by the reverse flavor to linearize candidate inputs.
pub fn load_listener(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<Arc<dyn ListenerModel>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("type").and_then(|t| t.as_str()) {
        Some("attribute-nb") => Ok(Arc::new(AttributeClassifierListener::from_json_value(value)?)),
        Some("reverse") => {
            let model = value
                .get("model")
                .and_then(|m| m.as_str())
                .ok_or_else(|| Error::Model("reverse listener needs a `model` path".into()))?;
            let base = path.parent().unwrap_or(Path::new("."));
            let speaker = crate::speaker::load_speaker(base.join(model))?;
            Ok(Arc::new(ReverseSpeakerListener::new(speaker, schema.clone())))
        }
        other => Err(Error::Model(format!("unknown listener type {other:?}"))),
    }
}

pub fn reverse_listener_json(model_path: &str) -> String {
    serde_json::json!({ "type": "reverse", "model": model_path }).to_string()
}
