use crate::ruledsl::{RuleOrigin, RuleSource};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extraction {
    pub sources: Vec<RuleSource>,
    /// Problems found while scanning, e.g. no blocks or an unclosed fence.
    pub events: Vec<String>,
}

/// Collects every fenced block tagged `rule`, in document order.
pub fn extract_rules(response: &str) -> Extraction {
    let mut out = Extraction::default();
    let mut open: Option<(usize, Vec<&str>)> = None;
    for (n, line) in response.lines().enumerate() {
        let trimmed = line.trim();
        match &mut open {
            None => {
                if let Some(tag) = trimmed.strip_prefix("```") {
                    if tag.trim() == "rule" {
                        open = Some((n + 1, Vec::new()));
                    }
                }
            }
            Some((_, body)) => {
                if trimmed == "```" {
                    let text = body.join("\n") + "\n";
                    out.sources.push(RuleSource::new(text, RuleOrigin::Llm));
                    open = None;
                } else {
                    body.push(line);
                }
            }
        }
    }
    if let Some((line, _)) = open {
        out.events
            .push(format!("unterminated ```rule fence opened on line {line}; block ignored"));
    }
    if out.sources.is_empty() {
        out.events.push("response contains no ```rule block".into());
    }
    out
}
