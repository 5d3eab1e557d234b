use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::ExportFormat;

pub const DEFAULT_SEED: u64 = 0;

/// Everything `run` needs. Relative paths in a config file are resolved
/// against the file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub scenes: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub outcomes: Option<PathBuf>,
    pub houses: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub c: f64,
    pub tolerance: f64,
    pub balanced: bool,
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub min_degree: usize,
    pub format: ExportFormat,
    pub strict: bool,
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scenes: None,
            aliases: None,
            roster: None,
            labels: None,
            outcomes: None,
            houses: None,
            out_dir: PathBuf::from("out"),
            c: 1.0,
            tolerance: crate::model::SmoParams::default().tolerance,
            balanced: false,
            folds: 5,
            repetitions: 100,
            seed: DEFAULT_SEED,
            min_degree: 0,
            format: ExportFormat::Dot,
            strict: false,
            threads: 1,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid value {value:?} for `{key}`")))
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("line {line}: `{key}` expects true or false"))),
    }
}

impl PipelineConfig {
    /// Parses `key = value` lines. `#` starts a comment line.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut out_dir_set = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value, base_dir, line_no)?;
            out_dir_set |= key == "out_dir";
        }
        if !out_dir_set {
            cfg.out_dir = base_dir.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        PipelineConfig::parse(&text, base)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path, line: usize) -> Result<()> {
        let path = || base.join(value);
        match key {
            "scenes" => self.scenes = Some(path()),
            "aliases" => self.aliases = Some(path()),
            "roster" => self.roster = Some(path()),
            "labels" => self.labels = Some(path()),
            "outcomes" => self.outcomes = Some(path()),
            "houses" => self.houses = Some(path()),
            "out_dir" => self.out_dir = path(),
            "C" | "c" => self.c = parse_value(key, value, line)?,
            "tolerance" => self.tolerance = parse_value(key, value, line)?,
            "balanced" => self.balanced = parse_bool(key, value, line)?,
            "folds" => self.folds = parse_value(key, value, line)?,
            "reps" | "repetitions" => self.repetitions = parse_value(key, value, line)?,
            "seed" => self.seed = parse_value(key, value, line)?,
            "min_degree" => self.min_degree = parse_value(key, value, line)?,
            "format" => self.format = value.parse()?,
            "strict" => self.strict = parse_bool(key, value, line)?,
            "threads" => self.threads = parse_value(key, value, line)?,
            other => return Err(Error::Config(format!("line {line}: unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Checks that required inputs are configured and every referenced
    /// input file exists.
    pub fn validate(&self) -> Result<()> {
        let scenes = self.scenes.as_ref().ok_or_else(|| Error::Config("`scenes` is required".into()))?;
        let labels = self.labels.as_ref().ok_or_else(|| Error::Config("`labels` is required".into()))?;
        let inputs = [
            ("scenes", Some(scenes)),
            ("labels", Some(labels)),
            ("aliases", self.aliases.as_ref()),
            ("roster", self.roster.as_ref()),
            ("outcomes", self.outcomes.as_ref()),
            ("houses", self.houses.as_ref()),
        ];
        for (name, path) in inputs {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(Error::Config(format!("{name} file {} does not exist", p.display())));
                }
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.repetitions < 1 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.threads < 1 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}
