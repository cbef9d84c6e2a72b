/// Interiors of every fenced block tagged `tag` (case-insensitive), in
/// order. Fences nested inside a block are kept verbatim; an unclosed
/// block runs to the end of the text.
pub fn extract_code_blocks(text: &str, tag: &str) -> Vec<String> {
    extract_code_blocks_any(text, &[tag])
}

/// Like [`extract_code_blocks`] but accepts any of several tags.
pub fn extract_code_blocks_any(text: &str, tags: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Option<(Vec<&str>, usize)> = None;
    for line in text.lines() {
        let trimmed = line.trim();
        match current.as_mut() {
            None => {
                let Some(info) = trimmed.strip_prefix("```") else {
                    continue;
                };
                let info = info.trim_start();
                let len = info
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
                    .unwrap_or(info.len());
                if !tags.iter().any(|t| info[..len].eq_ignore_ascii_case(t)) {
                    continue;
                }
                // opening and closing fence on the same line
                let after = info[len..].trim();
                if let Some(inner) = after.strip_suffix("```") {
                    out.push(inner.trim().to_string());
                    continue;
                }
                let mut body = Vec::new();
                if !after.is_empty() {
                    body.push(after);
                }
                current = Some((body, 0));
            }
            Some((body, depth)) => {
                if trimmed == "```" {
                    if *depth == 0 {
                        out.push(join(body));
                        current = None;
                        continue;
                    }
                    *depth -= 1;
                } else if trimmed.starts_with("```") {
                    *depth += 1;
                }
                body.push(line);
            }
        }
    }
    if let Some((body, _)) = current {
        tracing::warn!(
            tag = tags.first().copied().unwrap_or(""),
            "unclosed code fence extends to end of response"
        );
        out.push(join(&body));
    }
    out
}

fn join(lines: &[&str]) -> String {
    let mut s = lines.join("\n");
    s.push('\n');
    s
}
