//! Random instance generation and the on-disk formats for profiles and
//! frontiers.
//!
//! # Random profiles
//!
//! Generation is defined bit-for-bit so other implementations can reproduce
//! a corpus from its seeds:
//!
//! * `mix(z)` is the SplitMix64 finalizer:
//!   `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) * 0x94D049BB133111EB; z ^ (z >> 31)`
//!   (wrapping 64-bit arithmetic).
//! * Agent `a` (zero-based) draws from a SplitMix64 stream whose state starts
//!   at `mix(seed ^ mix(a + 1))`. Each draw adds `0x9E3779B97F4A7C15` to the
//!   state and returns `mix(state)`.
//! * A bounded draw in `[0, m)` rejects raw values below `(2^64 - m) mod m`
//!   and returns `x mod m` otherwise.
//! * The ranking starts as `[0, 1, …, n-1]`; for `i = n-1` down to `1`, swap
//!   positions `i` and `bounded(i + 1)`.
//!
//! # Profile files
//!
//! Plain text (`.prefs`): line 1 is `n`, then one line per agent listing
//! one-based room numbers from most to least preferred. Lines starting with
//! `#` are comments; `# seed: S` records the generating seed. The structured
//! form is JSON: `{"n": 2, "preferences": [[1, 2], [2, 1]], "seed": 7}` with
//! `seed` optional.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::enumerator::Frontier;
use crate::error::{Error, Result};
use crate::model::{validate_profile, PreferenceProfile, RoomId};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    /// Independent stream number `index` under `seed`.
    pub fn stream(seed: u64, index: u64) -> Self {
        Self::new(mix64(seed ^ mix64(index.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Unbiased draw from `[0, bound)`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// Uniformly random strict preferences, a pure function of `(n, seed)`.
pub fn random_profile(n: usize, seed: u64) -> Result<PreferenceProfile> {
    if n == 0 {
        return Err(Error::EmptyProfile);
    }
    let prefs = (0..n)
        .map(|agent| {
            let mut ranking: Vec<RoomId> = (0..n).collect();
            SplitMix64::stream(seed, agent as u64).shuffle(&mut ranking);
            ranking
        })
        .collect();
    PreferenceProfile::new(prefs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

impl Format {
    /// Structured for `.json` paths, text otherwise.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Structured,
            _ => Format::Text,
        }
    }
}

/// A profile together with the seed that generated it, if known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceFile {
    pub profile: PreferenceProfile,
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    n: usize,
    preferences: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    parse_error(e.line(), e.column(), e.to_string())
}

fn to_zero_based(rows: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    rows.into_iter()
        .map(|row| row.into_iter().map(|r| r - 1).collect())
        .collect()
}

fn check_declared_n(declared: usize, rows: usize, line: usize) -> Result<()> {
    if declared != rows {
        return Err(parse_error(
            line,
            1,
            format!("declared n = {declared} but found {rows} preference rows"),
        ));
    }
    Ok(())
}

fn parse_text(text: &str) -> Result<InstanceFile> {
    let mut seed = None;
    let mut declared: Option<(usize, usize)> = None;
    let mut rows = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("seed:") {
                let value = value.trim();
                seed = Some(value.parse::<u64>().map_err(|_| {
                    parse_error(line_no, raw.find(value).unwrap_or(0) + 1, "invalid seed")
                })?);
            }
            continue;
        }

        let mut row = Vec::new();
        let mut offset = 0;
        for token in raw.split(|c: char| c.is_whitespace()) {
            let column = offset + 1;
            offset += token.len() + 1;
            if token.is_empty() {
                continue;
            }
            let value = token.parse::<i64>().map_err(|_| {
                parse_error(
                    line_no,
                    column,
                    format!("expected an integer, found `{token}`"),
                )
            })?;
            row.push((value, column));
        }

        match declared {
            None => {
                if row.len() != 1 || row[0].0 < 1 {
                    return Err(parse_error(line_no, 1, "first line must be a positive n"));
                }
                declared = Some((row[0].0 as usize, line_no));
            }
            Some(_) => rows.push(row.into_iter().map(|(v, _)| v).collect::<Vec<_>>()),
        }
    }

    let (n, n_line) = declared.ok_or_else(|| parse_error(last_line.max(1), 1, "missing n"))?;
    check_declared_n(n, rows.len(), n_line)?;
    let profile = validate_profile(&to_zero_based(rows))?;
    Ok(InstanceFile { profile, seed })
}

fn parse_structured(text: &str) -> Result<InstanceFile> {
    let doc: ProfileDoc = serde_json::from_str(text).map_err(json_error)?;
    check_declared_n(doc.n, doc.preferences.len(), 1)?;
    let profile = validate_profile(&to_zero_based(doc.preferences))?;
    Ok(InstanceFile {
        profile,
        seed: doc.seed,
    })
}

/// Parses either format; JSON is recognized by a leading `{`.
pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    if text.trim_start().starts_with('{') {
        parse_structured(text)
    } else {
        parse_text(text)
    }
}

pub fn parse_profile(text: &str) -> Result<PreferenceProfile> {
    parse_instance(text).map(|i| i.profile)
}

pub fn serialize_instance(instance: &InstanceFile, format: Format) -> String {
    let profile = &instance.profile;
    match format {
        Format::Text => {
            let mut out = String::new();
            if let Some(seed) = instance.seed {
                writeln!(out, "# seed: {seed}").unwrap();
            }
            writeln!(out, "{}", profile.n()).unwrap();
            for ranking in profile.rankings() {
                writeln!(out, "{}", join_one_based(ranking)).unwrap();
            }
            out
        }
        Format::Structured => {
            let doc = ProfileDoc {
                n: profile.n(),
                preferences: profile
                    .rankings()
                    .iter()
                    .map(|r| r.iter().map(|&x| x as i64 + 1).collect())
                    .collect(),
                seed: instance.seed,
            };
            let mut s = serde_json::to_string(&doc).expect("profile serializes");
            s.push('\n');
            s
        }
    }
}

pub fn serialize_profile(profile: &PreferenceProfile, format: Format) -> String {
    serialize_instance(
        &InstanceFile {
            profile: profile.clone(),
            seed: None,
        },
        format,
    )
}

pub fn read_instance(path: &Path) -> Result<InstanceFile> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_instance(&text)
}

pub fn write_instance(path: &Path, instance: &InstanceFile, format: Format) -> Result<()> {
    std::fs::write(path, serialize_instance(instance, format)).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn join_one_based(rooms: &[RoomId]) -> String {
    let mut s = String::with_capacity(rooms.len() * 3);
    for (i, r) in rooms.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{}", r + 1).unwrap();
    }
    s
}

/// Serialized view of a frontier. One-based rooms; wall time is left out so
/// output is byte-stable across runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierDoc {
    pub n: usize,
    pub frontier_size: usize,
    pub stats: StatsDoc,
    pub members: Vec<MemberDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub ttc_calls: u64,
    pub states_visited: u64,
    pub allocations_scanned: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberDoc {
    pub allocation: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<Vec<Vec<usize>>>,
}

impl FrontierDoc {
    pub fn new(frontier: &Frontier, with_classes: bool) -> Self {
        let one_based = |a: &[RoomId]| a.iter().map(|r| r + 1).collect::<Vec<_>>();
        let members = frontier
            .members
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let class = frontier.classes.as_ref().map(|cs| &cs[k]);
                MemberDoc {
                    allocation: one_based(m.assign()),
                    class_size: class.map(|c| c.members.len()),
                    class: class
                        .filter(|_| with_classes)
                        .map(|c| c.members.iter().map(|e| one_based(e.assign())).collect()),
                }
            })
            .collect();
        Self {
            n: frontier.n,
            frontier_size: frontier.members.len(),
            stats: StatsDoc {
                ttc_calls: frontier.stats.ttc_calls,
                states_visited: frontier.stats.states_visited,
                allocations_scanned: frontier.stats.allocations_scanned,
            },
            members,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Structured => {
                let mut s = serde_json::to_string_pretty(self).expect("frontier serializes");
                s.push('\n');
                s
            }
            Format::Text => {
                let mut out = String::new();
                writeln!(out, "n {}", self.n).unwrap();
                writeln!(out, "frontier_size {}", self.frontier_size).unwrap();
                writeln!(out, "ttc_calls {}", self.stats.ttc_calls).unwrap();
                writeln!(out, "states_visited {}", self.stats.states_visited).unwrap();
                writeln!(
                    out,
                    "allocations_scanned {}",
                    self.stats.allocations_scanned
                )
                .unwrap();
                for m in &self.members {
                    write!(out, "member {}", join_numbers(&m.allocation)).unwrap();
                    if let Some(size) = m.class_size {
                        write!(out, " class_size {size}").unwrap();
                    }
                    out.push('\n');
                    for e in m.class.iter().flatten() {
                        writeln!(out, "  endowment {}", join_numbers(e)).unwrap();
                    }
                }
                out
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).map_err(json_error);
        }
        parse_frontier_text(text)
    }
}

fn join_numbers(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_frontier_text(text: &str) -> Result<FrontierDoc> {
    let mut header = [None::<u64>; 5];
    const KEYS: [&str; 5] = [
        "n",
        "frontier_size",
        "ttc_calls",
        "states_visited",
        "allocations_scanned",
    ];
    let mut members: Vec<MemberDoc> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut words = line.split_whitespace();
        let Some(key) = words.next() else { continue };
        let numbers = |words: &mut dyn Iterator<Item = &str>| -> Result<Vec<usize>> {
            words
                .map(|w| {
                    w.parse::<usize>()
                        .map_err(|_| parse_error(line_no, 1, format!("bad number `{w}`")))
                })
                .collect()
        };
        if let Some(pos) = KEYS.iter().position(|&k| k == key) {
            let v = numbers(&mut words)?;
            if v.len() != 1 {
                return Err(parse_error(line_no, 1, format!("`{key}` takes one value")));
            }
            header[pos] = Some(v[0] as u64);
        } else if key == "member" {
            let rest: Vec<&str> = words.collect();
            let (alloc, size) = match rest.iter().position(|&w| w == "class_size") {
                Some(p) => (&rest[..p], Some(&rest[p + 1..])),
                None => (&rest[..], None),
            };
            let allocation = numbers(&mut alloc.iter().copied())?;
            let class_size = match size {
                Some(s) => {
                    let v = numbers(&mut s.iter().copied())?;
                    if v.len() != 1 {
                        return Err(parse_error(line_no, 1, "`class_size` takes one value"));
                    }
                    Some(v[0])
                }
                None => None,
            };
            members.push(MemberDoc {
                allocation,
                class_size,
                class: None,
            });
        } else if key == "endowment" {
            let e = numbers(&mut words)?;
            let member = members
                .last_mut()
                .ok_or_else(|| parse_error(line_no, 1, "endowment before any member"))?;
            member.class.get_or_insert_with(Vec::new).push(e);
        } else {
            return Err(parse_error(line_no, 1, format!("unknown key `{key}`")));
        }
    }
    let get =
        |i: usize| header[i].ok_or_else(|| parse_error(1, 1, format!("missing `{}`", KEYS[i])));
    Ok(FrontierDoc {
        n: get(0)? as usize,
        frontier_size: get(1)? as usize,
        stats: StatsDoc {
            ttc_calls: get(2)?,
            states_visited: get(3)?,
            allocations_scanned: get(4)?,
        },
        members,
    })
}

pub fn serialize_frontier(frontier: &Frontier, with_classes: bool, format: Format) -> String {
    FrontierDoc::new(frontier, with_classes).render(format)
}

pub fn parse_frontier(text: &str) -> Result<FrontierDoc> {
    FrontierDoc::parse(text)
}
