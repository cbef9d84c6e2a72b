use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CompletionExchange, LlmError, TokenUsage};

pub const CASSETTE_FORMAT: u32 = 1;

/// Summary line appended when a recording finishes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteMeta {
    pub format: u32,
    pub model: String,
    pub exchanges: usize,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

/// One JSONL line of a cassette.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CassetteRecord {
    Exchange(CompletionExchange),
    Meta(CassetteMeta),
}

/// Recorded exchanges, replayed strictly in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cassette {
    pub exchanges: Vec<CompletionExchange>,
    pub meta: Option<CassetteMeta>,
}

impl Cassette {
    pub fn parse(text: &str) -> Result<Self, LlmError> {
        let mut c = Cassette::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: CassetteRecord =
                serde_json::from_str(line).map_err(|e| LlmError::Cassette(format!("line {}: {e}", i + 1)))?;
            match rec {
                CassetteRecord::Exchange(x) => {
                    if c.meta.is_some() {
                        return Err(LlmError::Cassette(format!("line {}: exchange after summary", i + 1)));
                    }
                    c.exchanges.push(x);
                }
                CassetteRecord::Meta(m) => {
                    if m.format != CASSETTE_FORMAT {
                        return Err(LlmError::Cassette(format!("unsupported cassette format {}", m.format)));
                    }
                    c.meta = Some(m);
                }
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Cassette(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn usage(&self) -> TokenUsage {
        self.exchanges
            .iter()
            .fold(TokenUsage::default(), |acc, x| acc + x.usage)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for x in &self.exchanges {
            out.push_str(&record_line(&CassetteRecord::Exchange(x.clone())));
        }
        if let Some(m) = &self.meta {
            out.push_str(&record_line(&CassetteRecord::Meta(m.clone())));
        }
        out
    }
}

fn record_line(rec: &CassetteRecord) -> String {
    let mut s = serde_json::to_string(rec).expect("cassette records serialize");
    s.push('\n');
    s
}

/// Appends exchanges to a cassette file as they happen.
pub struct CassetteWriter {
    path: PathBuf,
    out: BufWriter<File>,
    exchanges: usize,
    usage: TokenUsage,
}

impl CassetteWriter {
    /// Truncates any existing file at `path`.
    pub fn create(path: &Path) -> Result<Self, LlmError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| LlmError::Cassette(format!("{}: {e}", dir.display())))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)
            .map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))?;
        Ok(CassetteWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            exchanges: 0,
            usage: TokenUsage::default(),
        })
    }

    pub fn append(&mut self, x: &CompletionExchange) -> Result<(), LlmError> {
        self.exchanges += 1;
        self.usage += x.usage;
        self.write(&CassetteRecord::Exchange(x.clone()))
    }

    /// Writes the summary line and flushes.
    pub fn finish(mut self, model: &str) -> Result<PathBuf, LlmError> {
        let meta = CassetteMeta {
            format: CASSETTE_FORMAT,
            model: model.to_string(),
            exchanges: self.exchanges,
            prompt_tokens: self.usage.prompt_tokens,
            completion_tokens: self.usage.completion_tokens,
            total_tokens: self.usage.total(),
        };
        self.write(&CassetteRecord::Meta(meta))?;
        Ok(self.path)
    }

    fn write(&mut self, rec: &CassetteRecord) -> Result<(), LlmError> {
        self.out
            .write_all(record_line(rec).as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|e| LlmError::Cassette(format!("{}: {e}", self.path.display())))
    }
}
