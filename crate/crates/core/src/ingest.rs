//! Reading and writing the on-disk JSON record formats.
//!
//! A data directory holds:
//!
//! * `matches.json` – `[{"match_id", "winner": "radiant"|"dire", "duration_min", "slots": [{"account_id": str|null, "hero_id", "side"} x10]}]`
//! * `heroes.json` – `{"hero_count", "attribute_names": [..], "heroes": {"<id>": [..]}}`
//! * `players.json` – `{"<account_id>": {"mmr", "mmr_percentile", "per_hero": {"<hero_id>": {"winrate", "xpm", "gpm", "deaths_pm", ...}}}}`
//! * `replays/<match_id>.json` – `{"minutes", "players": [{"slot", "gold": [..], "xp": [..], "deaths": [..]}]}`
//!
//! Replays are optional. A replay's `slot` is the player's position in the match's `slots` array.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{
    validate_match, Dataset, HeroCatalog, HeroHistory, MatchRecord, PlayerProfile, PlayerSeries,
    PlayerSlot, ProfileMap, ReplaySeries, TeamSide,
};
use crate::error::{Error, Result};

pub const MATCHES_FILE: &str = "matches.json";
pub const HEROES_FILE: &str = "heroes.json";
pub const PLAYERS_FILE: &str = "players.json";
pub const REPLAY_DIR: &str = "replays";

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub matches_read: usize,
    pub matches_kept: usize,
    pub matches_dropped_missing_players: usize,
    pub matches_dropped_invalid: usize,
    /// Fraction of player slots, over the validated matches, without a usable profile.
    pub missing_profile_rate: f64,
    pub replays_loaded: usize,
    pub replays_rejected: usize,
    pub profiles_rejected: usize,
}

impl IngestReport {
    pub fn reconciles(&self) -> bool {
        self.matches_kept + self.matches_dropped_missing_players + self.matches_dropped_invalid
            == self.matches_read
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SlotJson {
    account_id: Option<String>,
    hero_id: i64,
    side: TeamSide,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatchJson {
    match_id: String,
    winner: TeamSide,
    duration_min: i64,
    slots: Vec<SlotJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeroesJson {
    hero_count: u32,
    attribute_names: Vec<String>,
    heroes: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileJson {
    mmr: f64,
    mmr_percentile: f64,
    #[serde(default)]
    per_hero: BTreeMap<String, HeroHistory>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReplayPlayerJson {
    slot: u8,
    gold: Vec<f64>,
    xp: Vec<f64>,
    deaths: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReplayJson {
    minutes: u32,
    players: Vec<ReplayPlayerJson>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Parses `matches.json`. Records that fail validation against `catalog` are skipped;
/// the second value is how many were skipped.
pub fn load_matches(path: &Path, catalog: &HeroCatalog) -> Result<(Vec<MatchRecord>, usize)> {
    let raw: Vec<MatchJson> = read_json(path)?;
    let mut kept = Vec::with_capacity(raw.len());
    let mut invalid = 0;
    for m in raw {
        match to_record(m) {
            Some(rec) if validate_match(&rec, catalog).is_empty() => kept.push(rec),
            _ => invalid += 1,
        }
    }
    Ok((kept, invalid))
}

fn to_record(m: MatchJson) -> Option<MatchRecord> {
    let duration = u32::try_from(m.duration_min).ok()?;
    let slots = m
        .slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            Some(PlayerSlot {
                account_id: s.account_id,
                hero_id: u32::try_from(s.hero_id).ok()?,
                side: s.side,
                slot: u8::try_from(i).ok()?,
            })
        })
        .collect::<Option<Vec<_>>>()?;
    Some(MatchRecord::new(m.match_id, m.winner, slots, duration))
}

pub fn load_hero_stats(path: &Path) -> Result<HeroCatalog> {
    let raw: HeroesJson = read_json(path)?;
    let mut rows = vec![None; raw.hero_count as usize];
    for (key, attrs) in raw.heroes {
        let id: u32 = key
            .parse()
            .map_err(|_| Error::InvalidData(format!("hero key {key:?} is not an integer")))?;
        if id == 0 || id > raw.hero_count {
            return Err(Error::InvalidData(format!(
                "hero id {id} outside 1..={}",
                raw.hero_count
            )));
        }
        rows[id as usize - 1] = Some(attrs);
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| Error::InvalidData(format!("hero {} missing from catalog", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    HeroCatalog::new(raw.hero_count, raw.attribute_names, rows)
}

/// Parses `players.json`; profiles that fail validation are skipped and counted.
pub fn load_player_profiles(path: &Path) -> Result<(ProfileMap, usize)> {
    let raw: BTreeMap<String, ProfileJson> = read_json(path)?;
    let mut out = ProfileMap::new();
    let mut rejected = 0;
    for (account_id, p) in raw {
        let per_hero: Option<BTreeMap<u32, HeroHistory>> = p
            .per_hero
            .into_iter()
            .map(|(k, h)| k.parse().ok().map(|id| (id, h)))
            .collect();
        let Some(per_hero) = per_hero else {
            rejected += 1;
            continue;
        };
        let profile = PlayerProfile {
            account_id: account_id.clone(),
            mmr: p.mmr,
            mmr_percentile: p.mmr_percentile,
            per_hero,
        };
        if profile.validate().is_ok() {
            out.insert(account_id, profile);
        } else {
            rejected += 1;
        }
    }
    Ok((out, rejected))
}

pub fn load_replay_file(path: &Path) -> Result<ReplaySeries> {
    let match_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidData(format!("bad replay file name {}", path.display())))?
        .to_string();
    let raw: ReplayJson = read_json(path)?;
    let players = raw
        .players
        .into_iter()
        .map(|p| PlayerSeries {
            slot: p.slot,
            gold: p.gold,
            xp: p.xp,
            deaths: p.deaths,
        })
        .collect();
    let series = ReplaySeries::new(match_id, players)?;
    if series.minutes() != raw.minutes {
        return Err(Error::InvalidData(format!(
            "replay {} declares {} minutes but holds {}",
            series.match_id,
            raw.minutes,
            series.minutes()
        )));
    }
    Ok(series)
}

/// Loads one replay file, or every `*.json` file of a directory. Invalid replays are
/// skipped and counted; a missing directory yields no replays.
pub fn load_replays(path: &Path) -> Result<(BTreeMap<String, Arc<ReplaySeries>>, usize)> {
    let mut out = BTreeMap::new();
    let mut rejected = 0;
    if !path.exists() {
        return Ok((out, 0));
    }
    let files = if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    for f in files {
        match load_replay_file(&f) {
            Ok(r) => {
                out.insert(r.match_id.clone(), Arc::new(r));
            }
            Err(e @ Error::Io { .. }) => return Err(e),
            Err(_) => rejected += 1,
        }
    }
    Ok((out, rejected))
}

/// Number of slots whose player is private or has no profile.
pub fn missing_players(m: &MatchRecord, profiles: &ProfileMap) -> usize {
    m.slots
        .iter()
        .filter(|s| match &s.account_id {
            Some(a) => !profiles.contains_key(a),
            None => true,
        })
        .count()
}

/// Keeps matches with at most `max_missing_players` missing players.
pub fn filter_matches(d: &Dataset, max_missing_players: usize) -> (Dataset, IngestReport) {
    let mut kept = Vec::new();
    let mut dropped = 0;
    let mut missing_slots = 0;
    for m in &d.matches {
        let missing = missing_players(m, &d.profiles);
        missing_slots += missing;
        if missing <= max_missing_players {
            kept.push(m.clone());
        } else {
            dropped += 1;
        }
    }
    let report = IngestReport {
        matches_read: d.len(),
        matches_kept: kept.len(),
        matches_dropped_missing_players: dropped,
        missing_profile_rate: if d.is_empty() {
            0.0
        } else {
            missing_slots as f64 / (d.len() * crate::data::MATCH_SIZE) as f64
        },
        replays_loaded: d.replays().len(),
        ..IngestReport::default()
    };
    (d.with_matches(kept), report)
}

/// Reads a complete data directory and applies the missing-player filter.
pub fn load_dataset(dir: &Path, max_missing_players: usize) -> Result<(Dataset, IngestReport)> {
    let catalog = load_hero_stats(&dir.join(HEROES_FILE))?;
    let (matches, invalid) = load_matches(&dir.join(MATCHES_FILE), &catalog)?;
    let (profiles, profiles_rejected) = load_player_profiles(&dir.join(PLAYERS_FILE))?;
    let (replays, replays_rejected) = load_replays(&dir.join(REPLAY_DIR))?;
    let all = Dataset::new(matches, Arc::new(catalog), Arc::new(profiles), replays);
    let (kept, mut report) = filter_matches(&all, max_missing_players);
    report.matches_read += invalid;
    report.matches_dropped_invalid = invalid;
    report.replays_rejected = replays_rejected;
    report.profiles_rejected = profiles_rejected;
    Ok((kept, report))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value).map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_matches(path: &Path, matches: &[MatchRecord]) -> Result<()> {
    let raw: Vec<MatchJson> = matches
        .iter()
        .map(|m| {
            let mut slots: Vec<&PlayerSlot> = m.slots.iter().collect();
            slots.sort_by_key(|s| s.slot);
            MatchJson {
                match_id: m.match_id.clone(),
                winner: m.winner,
                duration_min: m.duration_min as i64,
                slots: slots
                    .into_iter()
                    .map(|s| SlotJson {
                        account_id: s.account_id.clone(),
                        hero_id: s.hero_id as i64,
                        side: s.side,
                    })
                    .collect(),
            }
        })
        .collect();
    write_json(path, &raw)
}

pub fn write_hero_stats(path: &Path, catalog: &HeroCatalog) -> Result<()> {
    let heroes = (1..=catalog.hero_count)
        .map(|h| (h.to_string(), catalog.attributes(h).unwrap().to_vec()))
        .collect();
    write_json(
        path,
        &HeroesJson {
            hero_count: catalog.hero_count,
            attribute_names: catalog.attribute_names.clone(),
            heroes,
        },
    )
}

pub fn write_player_profiles(path: &Path, profiles: &ProfileMap) -> Result<()> {
    let raw: BTreeMap<&str, ProfileJson> = profiles
        .iter()
        .map(|(k, p)| {
            (
                k.as_str(),
                ProfileJson {
                    mmr: p.mmr,
                    mmr_percentile: p.mmr_percentile,
                    per_hero: p
                        .per_hero
                        .iter()
                        .map(|(h, s)| (h.to_string(), s.clone()))
                        .collect(),
                },
            )
        })
        .collect();
    write_json(path, &raw)
}

pub fn write_replay(path: &Path, replay: &ReplaySeries) -> Result<()> {
    let raw = ReplayJson {
        minutes: replay.minutes(),
        players: replay
            .players()
            .iter()
            .map(|p| ReplayPlayerJson {
                slot: p.slot,
                gold: p.gold.clone(),
                xp: p.xp.clone(),
                deaths: p.deaths.clone(),
            })
            .collect(),
    };
    write_json(path, &raw)
}

/// Writes a dataset as a data directory readable by [`load_dataset`].
pub fn write_dataset(dir: &Path, d: &Dataset) -> Result<()> {
    let replay_dir = dir.join(REPLAY_DIR);
    fs::create_dir_all(&replay_dir).map_err(|e| Error::io(&replay_dir, e))?;
    write_matches(&dir.join(MATCHES_FILE), &d.matches)?;
    write_hero_stats(&dir.join(HEROES_FILE), &d.catalog)?;
    write_player_profiles(&dir.join(PLAYERS_FILE), &d.profiles)?;
    for (id, r) in d.replays() {
        write_replay(&replay_dir.join(format!("{id}.json")), r)?;
    }
    Ok(())
}
