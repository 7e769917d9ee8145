use super::{request_digest, BackendError, CompletionBackend, GenerationParams, RawCompletion};

/// Test backend returning a fixed response template.
///
/// Placeholders: `{source}` is the text of the prompt's last `Source:` line,
/// `{sample_index}` the request's sample index.
#[derive(Debug, Clone)]
pub struct StubBackend {
    template: String,
}

impl StubBackend {
    pub fn new(template: impl Into<String>) -> Self {
        StubBackend {
            template: template.into(),
        }
    }
}

impl Default for StubBackend {
    fn default() -> Self {
        StubBackend::new(
            "The original text is in the source style.\nSample {sample_index} rewrites it.\n[Transferred]: {source}",
        )
    }
}

fn last_source_line(prompt: &str) -> &str {
    prompt
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("Source: "))
        .unwrap_or("")
}

impl CompletionBackend for StubBackend {
    fn backend_id(&self) -> &str {
        "stub"
    }

    fn complete(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<RawCompletion, BackendError> {
        params.validate()?;
        let text = self
            .template
            .replace("{source}", last_source_line(prompt))
            .replace("{sample_index}", &params.sample_index.to_string());
        Ok(RawCompletion {
            text,
            backend_id: "stub".into(),
            cached: false,
            request_digest: request_digest(prompt, params),
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_placeholders() {
        let stub = StubBackend::new("{source}|{sample_index}");
        let out = stub
            .complete(
                "Source: a\nSource: b\nthink",
                &GenerationParams::new("m").with_sample_index(3),
            )
            .unwrap();
        assert_eq!(out.text, "b|3");
        assert!(!out.cached);
    }
}
