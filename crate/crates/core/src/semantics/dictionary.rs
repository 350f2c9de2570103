//! Gazetteer-backed oracle.
//!
//! Each dictionary file lists the canonical spellings of one semantic type
//! and maps aliases (abbreviations, misspellings) to a canonical spelling:
//!
//! ```json
//! {"type": "country", "canonical": ["US", "UK"], "aliases": {"usa": "US", "u.k.": "UK"}}
//! ```
//!
//! Matches must sit on token boundaries (string edges or non-alphanumeric
//! neighbours). Keys shorter than four characters match case-sensitively,
//! longer keys ignore ASCII case. Overlaps resolve leftmost, then longest,
//! then by type order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{SemanticOracle, SemanticTypeList};
use crate::{Error, Result};

const CASE_SENSITIVE_BELOW: usize = 4;

const BUNDLED: [&str; 5] = [
    include_str!("../../data/dictionaries/country.json"),
    include_str!("../../data/dictionaries/color.json"),
    include_str!("../../data/dictionaries/month.json"),
    include_str!("../../data/dictionaries/weekday.json"),
    include_str!("../../data/dictionaries/continent.json"),
];

#[derive(Debug, Clone, Deserialize)]
pub struct DictionaryFile {
    #[serde(rename = "type")]
    pub type_name: String,
    pub canonical: Vec<String>,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
struct Key {
    chars: Vec<char>,
    canonical: String,
    case_sensitive: bool,
}

#[derive(Debug, Clone)]
struct Entry {
    type_name: String,
    keys: Vec<Key>,
}

#[derive(Debug, Clone, Default)]
pub struct DictionaryOracle {
    entries: Vec<Entry>,
    batch: Option<usize>,
}

impl DictionaryOracle {
    /// The dictionaries shipped with the crate.
    pub fn bundled() -> Self {
        let files = BUNDLED
            .iter()
            .map(|s| serde_json::from_str(s).expect("bundled dictionary is valid"))
            .collect();
        Self::from_files(files).expect("bundled dictionaries are consistent")
    }

    pub fn from_files(files: Vec<DictionaryFile>) -> Result<Self> {
        let mut oracle = Self::default();
        for f in files {
            oracle.add(f)?;
        }
        Ok(oracle)
    }

    /// Loads every `*.json` file of a directory, in file-name order.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut files = Vec::new();
        for p in paths {
            files.push(serde_json::from_str(&std::fs::read_to_string(&p)?)?);
        }
        Self::from_files(files)
    }

    pub fn with_batch_size(mut self, batch: usize) -> Self {
        self.batch = Some(batch);
        self
    }

    fn add(&mut self, file: DictionaryFile) -> Result<()> {
        let key = |text: &str, canonical: &str| Key {
            chars: text.chars().collect(),
            canonical: canonical.to_string(),
            case_sensitive: text.chars().count() < CASE_SENSITIVE_BELOW,
        };
        let mut keys: Vec<Key> = file.canonical.iter().map(|c| key(c, c)).collect();
        for (alias, target) in &file.aliases {
            if !file.canonical.contains(target) {
                return Err(Error::Config(format!(
                    "alias `{alias}` of type `{}` maps to unknown canonical `{target}`",
                    file.type_name
                )));
            }
            keys.push(key(alias, target));
        }
        keys.retain(|k| !k.chars.is_empty());
        match self.entries.iter_mut().find(|e| e.type_name == file.type_name) {
            Some(e) => e.keys.extend(keys),
            None => self.entries.push(Entry {
                type_name: file.type_name,
                keys,
            }),
        }
        Ok(())
    }

    pub fn type_names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.type_name.clone()).collect()
    }

    fn annotate_one(&self, value: &str, types: &SemanticTypeList) -> String {
        let chars: Vec<char> = value.chars().collect();
        let mut active: Vec<&Entry> = self.entries.iter().filter(|e| types.index_of(&e.type_name).is_some()).collect();
        active.sort_by_key(|e| types.index_of(&e.type_name));
        let boundary = |i: usize| i == 0 || i == chars.len() || !chars[i - 1].is_ascii_alphanumeric() || !chars[i].is_ascii_alphanumeric();
        let mut out = String::new();
        let mut i = 0;
        while i < chars.len() {
            let mut best: Option<(usize, &str, &str)> = None;
            if i == 0 || !chars[i - 1].is_ascii_alphanumeric() || !chars[i].is_ascii_alphanumeric() {
                for e in &active {
                    for k in &e.keys {
                        let end = i + k.chars.len();
                        if end > chars.len() || !boundary(end) {
                            continue;
                        }
                        let window = &chars[i..end];
                        let hit = if k.case_sensitive {
                            window == k.chars.as_slice()
                        } else {
                            window.iter().zip(&k.chars).all(|(a, b)| a.eq_ignore_ascii_case(b))
                        };
                        if hit && best.is_none_or(|(len, _, _)| k.chars.len() > len) {
                            best = Some((k.chars.len(), &e.type_name, &k.canonical));
                        }
                    }
                }
            }
            match best {
                Some((len, t, canonical)) => {
                    out.push_str(&format!("{{{t}({canonical})}}"));
                    i += len;
                }
                None => {
                    out.push(chars[i]);
                    i += 1;
                }
            }
        }
        out
    }
}

impl SemanticOracle for DictionaryOracle {
    fn max_batch(&self) -> usize {
        self.batch.unwrap_or(super::DEFAULT_BATCH_SIZE)
    }

    fn supported_types(&self) -> Option<Vec<String>> {
        Some(self.type_names())
    }

    fn annotate(&self, values: &[String], types: &SemanticTypeList) -> Result<Vec<String>> {
        Ok(values.iter().map(|v| self.annotate_one(v, types)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annotate(v: &str) -> String {
        DictionaryOracle::bundled()
            .annotate(&[v.to_string()], &SemanticTypeList::default())
            .unwrap()
            .remove(0)
    }

    #[test]
    fn countries_and_aliases() {
        assert_eq!(annotate("US-123"), "{country(US)}-123");
        assert_eq!(annotate("u.k.-392"), "{country(UK)}-392");
        assert_eq!(annotate("usa_837"), "{country(US)}_837");
        assert_eq!(annotate("IND-674-PRO"), "{country(IND)}-674-PRO");
    }

    #[test]
    fn boundaries_and_case() {
        assert_eq!(annotate("hello"), "hello");
        assert_eq!(annotate("USB-1"), "USB-1");
        assert_eq!(annotate("us-1"), "us-1");
        assert_eq!(annotate("U.K.-1"), "{country(UK)}-1");
        assert_eq!(annotate("JUN"), "JUN");
    }

    #[test]
    fn longest_match_wins() {
        assert_eq!(annotate("dark green 2"), "{color(dark green)} 2");
        assert_eq!(annotate("blue phone 3"), "{color(blue)} phone 3");
    }

    #[test]
    fn respects_requested_types() {
        let only_color = SemanticTypeList::new(vec!["color".into()]).unwrap();
        let out = DictionaryOracle::bundled().annotate(&["red US".into()], &only_color).unwrap();
        assert_eq!(out, vec!["{color(red)} US"]);
    }

    #[test]
    fn rejects_dangling_alias() {
        let f = DictionaryFile {
            type_name: "x".into(),
            canonical: vec!["A".into()],
            aliases: BTreeMap::from([("b".into(), "B".into())]),
        };
        assert!(DictionaryOracle::from_files(vec![f]).is_err());
    }
}
