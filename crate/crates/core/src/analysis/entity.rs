//! Mapping from domains to the organizations that own them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::filterlist::host_suffixes;
use crate::suffix::SuffixRules;

/// Domain to entity name. Domains are disjoint across entities; anything
/// unmapped falls back to its registrable domain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntityMap {
    by_domain: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct DisconnectEntity {
    #[serde(default)]
    properties: Vec<String>,
    #[serde(default)]
    resources: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EntityFile {
    Disconnect {
        entities: BTreeMap<String, DisconnectEntity>,
    },
    Simple(BTreeMap<String, Vec<String>>),
}

impl EntityMap {
    pub fn from_pairs<E, D, I>(entries: impl IntoIterator<Item = (E, I)>) -> Result<EntityMap>
    where
        E: Into<String>,
        D: Into<String>,
        I: IntoIterator<Item = D>,
    {
        let mut by_domain: BTreeMap<String, String> = BTreeMap::new();
        for (entity, domains) in entries {
            let entity = entity.into();
            for d in domains {
                let d = d.into().trim().trim_start_matches('.').to_ascii_lowercase();
                if d.is_empty() {
                    continue;
                }
                match by_domain.get(&d) {
                    Some(prev) if *prev != entity => {
                        return Err(Error::Schema(format!(
                            "domain {d:?} belongs to both {prev:?} and {entity:?}"
                        )));
                    }
                    _ => {
                        by_domain.insert(d, entity.clone());
                    }
                }
            }
        }
        Ok(EntityMap { by_domain })
    }

    /// Accepts `{entity: [domains]}` or the Disconnect entity-list layout
    /// (`{"entities": {name: {"properties": [...], "resources": [...]}}}`).
    pub fn from_json(text: &str) -> Result<EntityMap> {
        let file: EntityFile =
            serde_json::from_str(text).map_err(|e| Error::json("entity map", e))?;
        match file {
            EntityFile::Disconnect { entities } => EntityMap::from_pairs(
                entities
                    .into_iter()
                    .map(|(name, e)| (name, e.properties.into_iter().chain(e.resources))),
            ),
            EntityFile::Simple(map) => EntityMap::from_pairs(map),
        }
    }

    pub fn load(path: &Path) -> Result<EntityMap> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EntityMap::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.by_domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_domain.is_empty()
    }

    /// The entity for `host`: the most specific mapped suffix of the host,
    /// else the host's registrable domain.
    pub fn entity_for_host(&self, host: &str, suffixes: &SuffixRules) -> String {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let registrable = suffixes.registrable_domain(&host);
        for s in host_suffixes(&host) {
            if let Some(e) = self.by_domain.get(s) {
                return e.clone();
            }
            if s == registrable {
                break;
            }
        }
        registrable
    }
}
