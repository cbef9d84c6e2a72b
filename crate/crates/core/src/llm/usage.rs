use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CompletionExchange, Purpose, TokenUsage};

/// Exact token sums over an exchange log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageSummary {
    pub exchanges: usize,
    pub total: TokenUsage,
    pub by_purpose: BTreeMap<Purpose, TokenUsage>,
    pub by_level: BTreeMap<String, BTreeMap<Purpose, TokenUsage>>,
}

impl UsageSummary {
    pub fn level(&self, level: &str) -> TokenUsage {
        self.by_level
            .get(level)
            .map(|m| m.values().fold(TokenUsage::default(), |a, u| a + *u))
            .unwrap_or_default()
    }

    pub fn level_purpose(&self, level: &str, purpose: Purpose) -> TokenUsage {
        self.by_level
            .get(level)
            .and_then(|m| m.get(&purpose))
            .copied()
            .unwrap_or_default()
    }
}

pub fn usage_total(log: &[CompletionExchange]) -> UsageSummary {
    let mut s = UsageSummary::default();
    for x in log {
        s.exchanges += 1;
        s.total += x.usage;
        *s.by_purpose.entry(x.purpose).or_default() += x.usage;
        *s.by_level
            .entry(x.level.clone())
            .or_default()
            .entry(x.purpose)
            .or_default() += x.usage;
    }
    s
}
