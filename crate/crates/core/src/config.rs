//! Settings file: `key = value` lines (TOML syntax). Command-line flags override the file,
//! the file overrides built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub beam_width: Option<usize>,
    pub max_depth: Option<usize>,
    /// Extra knowledge-base dumps loaded on top of the bundled one.
    pub kb: Option<Vec<PathBuf>>,
    pub no_bundled_kb: Option<bool>,
    pub paraphrase_table: Option<PathBuf>,
    pub disjoint_actions: Option<PathBuf>,
    pub scorer_url: Option<String>,
    pub scorer_timeout_secs: Option<u64>,
    pub strict: Option<bool>,
    pub syntactic_variation: Option<bool>,
    pub monotonicity: Option<bool>,
    pub align_threshold: Option<f64>,
    pub paraphrase_threshold: Option<f64>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig> {
        toml::from_str(text).map_err(|e| Error::Lookup(format!("config: {}", e.message())))
    }

    /// Loads a file; relative paths inside it resolve against the file's directory.
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.kb.iter_mut().flatten().for_each(fix);
        cfg.paraphrase_table.iter_mut().for_each(fix);
        cfg.disjoint_actions.iter_mut().for_each(fix);
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let c = FileConfig::parse("beam_width = 4\nstrict = true\nkb = [\"a.tsv\"]\nscorer_url = \"http://x\"\n").unwrap();
        assert_eq!(c.beam_width, Some(4));
        assert_eq!(c.strict, Some(true));
        assert_eq!(c.kb.unwrap(), vec![PathBuf::from("a.tsv")]);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(FileConfig::parse("beam = 4\n").is_err());
    }
}
