use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::AgentError;
use crate::pddl::{parse_domain, print_domain, DomainAst};
use crate::wmdsl::{PredicateProgram, TransitionProgram};

/// Which episode contributed a library entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub episode: usize,
    pub level: String,
    /// `operator`, `predicate`, `classifier` or `world_model`.
    pub kind: String,
    pub name: String,
}

/// Abstractions and programs carried across a curriculum. Classifiers and
/// world models are kept per environment family; the domain is shared.
#[derive(Debug, Clone, Default)]
pub struct AbstractionLibrary {
    pub domain: DomainAst,
    pub classifiers: BTreeMap<String, BTreeMap<String, PredicateProgram>>,
    pub world_models: BTreeMap<String, TransitionProgram>,
    pub provenance: Vec<Provenance>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: u32,
    provenance: Vec<Provenance>,
}

impl AbstractionLibrary {
    pub fn is_empty(&self) -> bool {
        self.domain.is_empty() && self.world_models.is_empty() && self.classifiers.is_empty()
    }

    /// Printed domain, or the empty string for an empty library.
    pub fn domain_text(&self) -> String {
        if self.domain.is_empty() {
            String::new()
        } else {
            print_domain(&self.domain)
        }
    }

    pub fn domain_hash(&self) -> String {
        hex::encode(Sha256::digest(self.domain_text().as_bytes()))
    }

    pub fn classifiers_for(&self, family: &str) -> BTreeMap<String, PredicateProgram> {
        self.classifiers.get(family).cloned().unwrap_or_default()
    }

    pub fn record(&mut self, episode: usize, level: &str, kind: &str, name: &str) {
        self.provenance.push(Provenance {
            episode,
            level: level.to_string(),
            kind: kind.to_string(),
            name: name.to_string(),
        });
    }

    /// Writes `domain.pddl`, `classifiers/<family>/<predicate>.wmdsl`,
    /// `worldmodels/<family>.wmdsl` and `manifest.json` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), AgentError> {
        let io = |e: std::io::Error| AgentError::Library(format!("{}: {e}", dir.display()));
        if dir.exists() {
            for sub in ["classifiers", "worldmodels"] {
                let p = dir.join(sub);
                if p.exists() {
                    std::fs::remove_dir_all(&p).map_err(io)?;
                }
            }
        }
        std::fs::create_dir_all(dir.join("worldmodels")).map_err(io)?;
        std::fs::write(dir.join("domain.pddl"), self.domain_text()).map_err(io)?;
        for (family, preds) in &self.classifiers {
            let d = dir.join("classifiers").join(family);
            std::fs::create_dir_all(&d).map_err(io)?;
            for (name, prog) in preds {
                std::fs::write(d.join(format!("{name}.wmdsl")), prog.source()).map_err(io)?;
            }
        }
        for (family, prog) in &self.world_models {
            std::fs::write(dir.join("worldmodels").join(format!("{family}.wmdsl")), prog.source()).map_err(io)?;
        }
        let manifest = Manifest {
            format: 1,
            provenance: self.provenance.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), text + "\n").map_err(io)
    }

    pub fn load(dir: &Path) -> Result<Self, AgentError> {
        let err = |what: String| AgentError::Library(format!("{}: {what}", dir.display()));
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| err(format!("{}: {e}", p.display())));
        let domain_text = read(&dir.join("domain.pddl"))?;
        let domain = if domain_text.trim().is_empty() {
            DomainAst::default()
        } else {
            parse_domain(&domain_text).map_err(|e| err(format!("domain.pddl: {e}")))?
        };
        let mut lib = AbstractionLibrary {
            domain,
            ..Default::default()
        };
        let cdir = dir.join("classifiers");
        for family in sorted_entries(&cdir).map_err(|e| err(e.to_string()))? {
            let fam = file_name(&family);
            for file in sorted_entries(&family).map_err(|e| err(e.to_string()))? {
                let pred = file_stem(&file);
                let arity = lib
                    .domain
                    .predicate(&pred)
                    .map(|p| p.arity())
                    .ok_or_else(|| err(format!("classifier for undeclared predicate `{pred}`")))?;
                let prog = PredicateProgram::parse(&read(&file)?, &pred, arity)
                    .map_err(|e| err(format!("{}: {e}", file.display())))?;
                lib.classifiers.entry(fam.clone()).or_default().insert(pred, prog);
            }
        }
        for file in sorted_entries(&dir.join("worldmodels")).map_err(|e| err(e.to_string()))? {
            let prog = TransitionProgram::parse(&read(&file)?).map_err(|e| err(format!("{}: {e}", file.display())))?;
            lib.world_models.insert(file_stem(&file), prog);
        }
        let manifest: Manifest =
            serde_json::from_str(&read(&dir.join("manifest.json"))?).map_err(|e| err(format!("manifest.json: {e}")))?;
        lib.provenance = manifest.provenance;
        Ok(lib)
    }
}

fn sorted_entries(dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut v: Vec<_> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    v.sort();
    Ok(v)
}

fn file_name(p: &Path) -> String {
    p.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

fn file_stem(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}
