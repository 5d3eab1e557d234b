//! Transcript ingestion: the normalized scene format, alias resolution and
//! conversion to [`SceneRecord`]s.
//!
//! The normalized format is line based:
//!
//! ```text
//! ## SCENE s01e01 0
//! ARYA: Not today.
//! HOUND: ...
//!
//! ## SCENE s01e01 1
//! JON: ...
//! ```
//!
//! A `## SCENE <episode_id> <scene_index>` header opens a scene. Every
//! following non-empty line is `<SPEAKER>: <dialogue>`; the dialogue is
//! discarded. A blank line or the next header closes the scene.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Read};

use crate::character::CharacterId;
use crate::error::{Error, Result};

const SCENE_MARKER: &str = "## SCENE";

/// Input format accepted by [`parse_transcript`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TranscriptFormat {
    #[default]
    Normalized,
}

/// One scene block as it appears in the transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawScene {
    pub episode_id: String,
    pub scene_index: u32,
    /// Speaker names in file order, trimmed but otherwise verbatim.
    pub speaker_names: Vec<String>,
}

/// A scene reduced to the set of canonical characters present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneRecord {
    pub episode_id: String,
    pub scene_index: u32,
    pub participants: BTreeSet<CharacterId>,
}

/// Parses a transcript into raw scenes, in file order.
///
/// A header with no speaker lines yields a scene with no speakers; such
/// scenes are dropped later by [`to_scene_records`].
pub fn parse_transcript<R: BufRead>(source: R, format: TranscriptFormat) -> Result<Vec<RawScene>> {
    match format {
        TranscriptFormat::Normalized => parse_normalized(source),
    }
}

/// Convenience wrapper over [`parse_transcript`] for in-memory text.
pub fn parse_str(text: &str) -> Result<Vec<RawScene>> {
    parse_transcript(text.as_bytes(), TranscriptFormat::Normalized)
}

fn parse_normalized<R: BufRead>(mut source: R) -> Result<Vec<RawScene>> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Parse { line: 0, message: format!("unreadable input: {e}") })?;

    let mut scenes: Vec<RawScene> = Vec::new();
    let mut seen: HashSet<(String, u32)> = HashSet::new();
    let mut open = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            open = false;
            continue;
        }
        if let Some(rest) = line.strip_prefix(SCENE_MARKER) {
            let header = parse_header(rest, line_no)?;
            if !seen.insert((header.episode_id.clone(), header.scene_index)) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "duplicate scene index {} in episode {}",
                        header.scene_index, header.episode_id
                    ),
                });
            }
            scenes.push(header);
            open = true;
            continue;
        }
        if !open {
            return Err(Error::Parse { line: line_no, message: "speaker line outside a scene".into() });
        }
        let Some((speaker, _dialogue)) = line.split_once(':') else {
            return Err(Error::Parse {
                line: line_no,
                message: "expected `<SPEAKER>: <dialogue>`".into(),
            });
        };
        let speaker = speaker.trim();
        if speaker.is_empty() {
            return Err(Error::Parse { line: line_no, message: "empty speaker name".into() });
        }
        // `open` implies at least one scene has been pushed.
        scenes.last_mut().expect("open scene").speaker_names.push(speaker.to_string());
    }
    Ok(scenes)
}

fn parse_header(rest: &str, line_no: usize) -> Result<RawScene> {
    let malformed = |why: &str| Error::Parse {
        line: line_no,
        message: format!("malformed scene header: {why}"),
    };
    if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
        return Err(malformed("expected `## SCENE <episode_id> <scene_index>`"));
    }
    let mut parts = rest.split_whitespace();
    let episode_id = parts.next().ok_or_else(|| malformed("missing episode id"))?;
    let index = parts.next().ok_or_else(|| malformed("missing scene index"))?;
    if parts.next().is_some() {
        return Err(malformed("trailing fields"));
    }
    let scene_index = index
        .parse::<u32>()
        .map_err(|_| malformed("scene index must be a non-negative integer"))?;
    Ok(RawScene { episode_id: episode_id.to_string(), scene_index, speaker_names: Vec::new() })
}

fn fold(name: &str) -> String {
    name.trim().to_lowercase()
}

/// Map from case-folded raw names to canonical ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    entries: HashMap<String, CharacterId>,
}

impl AliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `raw → canonical`, also registering `canonical → canonical`.
    ///
    /// Fails if the raw name is already bound to a different id, or if the
    /// new binding would stop some canonical id from mapping to itself.
    pub fn insert(&mut self, raw: &str, canonical: &str) -> Result<()> {
        let key = fold(raw);
        let canonical = canonical.trim();
        if key.is_empty() {
            return Err(Error::InvalidName(raw.to_string()));
        }
        if canonical.is_empty() {
            return Err(Error::AliasConflict(format!("empty canonical id for {raw:?}")));
        }
        let id = CharacterId::new(canonical);
        let canon_key = fold(canonical);

        if let Some(existing) = self.entries.get(&canon_key) {
            if existing != &id {
                return Err(Error::AliasConflict(format!(
                    "canonical id {canonical:?} is already an alias of {existing}"
                )));
            }
        }
        if let Some(existing) = self.entries.get(&key) {
            if existing != &id {
                return Err(Error::AliasConflict(format!(
                    "{raw:?} maps to both {existing} and {canonical}"
                )));
            }
        }
        if key != canon_key && self.entries.values().any(|v| fold(v.as_str()) == key) {
            return Err(Error::AliasConflict(format!(
                "{raw:?} is a canonical id and cannot be re-pointed to {canonical}"
            )));
        }
        self.entries.insert(canon_key, id.clone());
        self.entries.insert(key, id);
        Ok(())
    }

    /// Reads a `raw_name,canonical_id` CSV with a header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["raw_name", "canonical_id"] {
            return Err(Error::format("aliases", "expected header `raw_name,canonical_id`"));
        }
        let mut table = AliasTable::new();
        for row in rdr.records() {
            let row = row?;
            table.insert(&row[0], &row[1])?;
        }
        Ok(table)
    }

    pub fn get(&self, raw: &str) -> Option<&CharacterId> {
        self.entries.get(&fold(raw))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Resolves a raw name; unknown names become their own case-folded id.
pub fn canonicalize(raw_name: &str, aliases: &AliasTable) -> Result<CharacterId> {
    let key = fold(raw_name);
    if key.is_empty() {
        return Err(Error::InvalidName(raw_name.to_string()));
    }
    Ok(aliases.get(&key).cloned().unwrap_or_else(|| CharacterId::new(key)))
}

/// Like [`canonicalize`] but rejects names absent from the table.
pub fn canonicalize_strict(raw_name: &str, aliases: &AliasTable) -> Result<CharacterId> {
    let key = fold(raw_name);
    if key.is_empty() {
        return Err(Error::InvalidName(raw_name.to_string()));
    }
    aliases.get(&key).cloned().ok_or_else(|| Error::UnknownAlias(raw_name.trim().to_string()))
}

/// Canonicalizes every scene. Blank names are skipped and scenes left
/// without participants are dropped; scene order and multiplicity are kept.
pub fn to_scene_records(raw: &[RawScene], aliases: &AliasTable) -> Vec<SceneRecord> {
    raw.iter()
        .filter_map(|scene| {
            let participants: BTreeSet<CharacterId> = scene
                .speaker_names
                .iter()
                .filter_map(|name| canonicalize(name, aliases).ok())
                .collect();
            (!participants.is_empty()).then(|| SceneRecord {
                episode_id: scene.episode_id.clone(),
                scene_index: scene.scene_index,
                participants,
            })
        })
        .collect()
}

/// Strict variant of [`to_scene_records`]: any name missing from the alias
/// table is an error.
pub fn to_scene_records_strict(raw: &[RawScene], aliases: &AliasTable) -> Result<Vec<SceneRecord>> {
    let mut out = Vec::with_capacity(raw.len());
    for scene in raw {
        let mut participants = BTreeSet::new();
        for name in &scene.speaker_names {
            if name.trim().is_empty() {
                continue;
            }
            participants.insert(canonicalize_strict(name, aliases)?);
        }
        if !participants.is_empty() {
            out.push(SceneRecord {
                episode_id: scene.episode_id.clone(),
                scene_index: scene.scene_index,
                participants,
            });
        }
    }
    Ok(out)
}

/// Writes scene records back out in the normalized format, one speaker line
/// per participant (sorted) with empty dialogue.
pub fn write_scene_records(records: &[SceneRecord]) -> String {
    let mut out = String::new();
    for (i, rec) in records.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("{SCENE_MARKER} {} {}\n", rec.episode_id, rec.scene_index));
        for p in &rec.participants {
            out.push_str(p.as_str());
            out.push_str(":\n");
        }
    }
    out
}
