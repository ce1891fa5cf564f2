//! Core match, hero and player types, validation and train/test splitting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Players per team.
pub const TEAM_SIZE: usize = 5;
/// Players per match.
pub const MATCH_SIZE: usize = 2 * TEAM_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeamSide {
    Radiant,
    Dire,
}

impl TeamSide {
    /// Class label: 1 for Radiant, 0 for Dire.
    pub fn label(self) -> f64 {
        match self {
            TeamSide::Radiant => 1.0,
            TeamSide::Dire => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TeamSide::Radiant => "radiant",
            TeamSide::Dire => "dire",
        }
    }

    pub fn opposite(self) -> TeamSide {
        match self {
            TeamSide::Radiant => TeamSide::Dire,
            TeamSide::Dire => TeamSide::Radiant,
        }
    }

    pub fn from_probability(p_radiant: f64) -> TeamSide {
        // ties go to Radiant
        if p_radiant >= 0.5 {
            TeamSide::Radiant
        } else {
            TeamSide::Dire
        }
    }
}

impl fmt::Display for TeamSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TeamSide::Radiant => f.write_str("radiant"),
            TeamSide::Dire => f.write_str("dire"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSlot {
    /// `None` when the player's profile is private.
    pub account_id: Option<String>,
    pub hero_id: u32,
    pub side: TeamSide,
    /// Position of the player in the source record; replays refer to players by it.
    pub slot: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub winner: TeamSide,
    pub slots: Vec<PlayerSlot>,
    pub duration_min: u32,
    pub has_replay: bool,
}

impl MatchRecord {
    /// Builds a record with slots in canonical order: Radiant first, then within each team
    /// ascending account id with private accounts last.
    pub fn new(
        match_id: impl Into<String>,
        winner: TeamSide,
        mut slots: Vec<PlayerSlot>,
        duration_min: u32,
    ) -> Self {
        canonical_order(&mut slots);
        MatchRecord {
            match_id: match_id.into(),
            winner,
            slots,
            duration_min,
            has_replay: false,
        }
    }

    pub fn label(&self) -> f64 {
        self.winner.label()
    }

    pub fn team(&self, side: TeamSide) -> impl Iterator<Item = &PlayerSlot> {
        self.slots.iter().filter(move |s| s.side == side)
    }

    /// The same match with the two teams exchanged.
    pub fn swapped(&self) -> MatchRecord {
        let slots = self
            .slots
            .iter()
            .map(|s| PlayerSlot {
                side: s.side.opposite(),
                ..s.clone()
            })
            .collect();
        MatchRecord {
            has_replay: self.has_replay,
            ..MatchRecord::new(
                self.match_id.clone(),
                self.winner.opposite(),
                slots,
                self.duration_min,
            )
        }
    }
}

fn canonical_order(slots: &mut [PlayerSlot]) {
    slots.sort_by(|a, b| {
        a.side
            .cmp(&b.side)
            .then_with(|| match (&a.account_id, &b.account_id) {
                (Some(x), Some(y)) => x.cmp(y),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            })
            .then_with(|| a.slot.cmp(&b.slot))
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeroCatalog {
    pub hero_count: u32,
    pub attribute_names: Vec<String>,
    /// Row `hero_id - 1` holds that hero's attributes.
    attributes: Vec<Vec<f64>>,
}

impl HeroCatalog {
    pub fn new(hero_count: u32, attribute_names: Vec<String>, attributes: Vec<Vec<f64>>) -> Result<Self> {
        if attributes.len() != hero_count as usize {
            return Err(Error::InvalidData(format!(
                "catalog declares {hero_count} heroes but lists {}",
                attributes.len()
            )));
        }
        let width = attribute_names.len();
        for (i, row) in attributes.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidData(format!(
                    "hero {} has {} attributes, expected {width}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("hero {} has a non-finite attribute", i + 1)));
            }
        }
        Ok(HeroCatalog {
            hero_count,
            attribute_names,
            attributes,
        })
    }

    pub fn attribute_count(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn contains(&self, hero_id: u32) -> bool {
        hero_id >= 1 && hero_id <= self.hero_count
    }

    pub fn attributes(&self, hero_id: u32) -> Option<&[f64]> {
        if self.contains(hero_id) {
            Some(&self.attributes[hero_id as usize - 1])
        } else {
            None
        }
    }
}

/// Names of the eight per-(player, hero) statistics, in feature order.
pub const HERO_HISTORY_STATS: [&str; 8] = [
    "winrate",
    "xpm",
    "gpm",
    "deaths_pm",
    "kills_pm",
    "assists_pm",
    "last_hits_pm",
    "log_games",
];

/// A player's record on one hero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeroHistory {
    pub winrate: f64,
    pub xpm: f64,
    pub gpm: f64,
    pub deaths_pm: f64,
    #[serde(default)]
    pub kills_pm: f64,
    #[serde(default)]
    pub assists_pm: f64,
    #[serde(default)]
    pub last_hits_pm: f64,
    #[serde(default, rename = "games")]
    pub games_played: u32,
}

impl HeroHistory {
    /// Feature values in [`HERO_HISTORY_STATS`] order; games played is log-scaled.
    pub fn stats(&self) -> [f64; 8] {
        [
            self.winrate,
            self.xpm,
            self.gpm,
            self.deaths_pm,
            self.kills_pm,
            self.assists_pm,
            self.last_hits_pm,
            (1.0 + self.games_played as f64).ln(),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.winrate) {
            return Err(Error::InvalidData(format!("winrate {} outside [0, 1]", self.winrate)));
        }
        let rates = [
            self.xpm,
            self.gpm,
            self.deaths_pm,
            self.kills_pm,
            self.assists_pm,
            self.last_hits_pm,
        ];
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidData("negative or non-finite rate statistic".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerProfile {
    pub account_id: String,
    pub mmr: f64,
    pub mmr_percentile: f64,
    pub per_hero: BTreeMap<u32, HeroHistory>,
}

impl PlayerProfile {
    pub fn validate(&self) -> Result<()> {
        if !self.mmr.is_finite() {
            return Err(Error::InvalidData(format!("account {}: non-finite mmr", self.account_id)));
        }
        if !(0.0..=1.0).contains(&self.mmr_percentile) {
            return Err(Error::InvalidData(format!(
                "account {}: mmr percentile {} outside [0, 1]",
                self.account_id, self.mmr_percentile
            )));
        }
        for h in self.per_hero.values() {
            h.validate()
                .map_err(|e| Error::InvalidData(format!("account {}: {e}", self.account_id)))?;
        }
        Ok(())
    }
}

/// Cumulative per-minute totals of one player; index `t` is minute `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSeries {
    pub slot: u8,
    pub gold: Vec<f64>,
    pub xp: Vec<f64>,
    pub deaths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySeries {
    pub match_id: String,
    players: Vec<PlayerSeries>,
}

impl ReplaySeries {
    /// Rejects ragged, negative, non-finite or decreasing series.
    pub fn new(match_id: impl Into<String>, players: Vec<PlayerSeries>) -> Result<Self> {
        let match_id = match_id.into();
        let len = match players.first() {
            Some(p) => p.gold.len(),
            None => return Err(Error::InvalidData(format!("replay {match_id} has no players"))),
        };
        if len == 0 {
            return Err(Error::InvalidData(format!("replay {match_id} has empty series")));
        }
        let mut seen = BTreeSet::new();
        for p in &players {
            if !seen.insert(p.slot) {
                return Err(Error::InvalidData(format!(
                    "replay {match_id} lists slot {} twice",
                    p.slot
                )));
            }
            for (name, series) in [("gold", &p.gold), ("xp", &p.xp), ("deaths", &p.deaths)] {
                if series.len() != len {
                    return Err(Error::InvalidData(format!(
                        "replay {match_id}: slot {} {name} has {} minutes, expected {len}",
                        p.slot,
                        series.len()
                    )));
                }
                if series.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidData(format!(
                        "replay {match_id}: slot {} {name} has a negative or non-finite value",
                        p.slot
                    )));
                }
                if series.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidData(format!(
                        "replay {match_id}: slot {} {name} decreases",
                        p.slot
                    )));
                }
            }
        }
        Ok(ReplaySeries { match_id, players })
    }

    pub fn players(&self) -> &[PlayerSeries] {
        &self.players
    }

    /// Last minute covered; the series spans minutes `0..=minutes()`.
    pub fn minutes(&self) -> u32 {
        (self.players[0].gold.len() - 1) as u32
    }
}

pub type ProfileMap = BTreeMap<String, PlayerProfile>;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub matches: Vec<MatchRecord>,
    pub catalog: Arc<HeroCatalog>,
    pub profiles: Arc<ProfileMap>,
    replays: BTreeMap<String, Arc<ReplaySeries>>,
    index: HashMap<String, usize>,
}

impl Dataset {
    /// Assembles a dataset; replays without a matching record are discarded and
    /// `has_replay` is set from the replays that remain.
    pub fn new(
        mut matches: Vec<MatchRecord>,
        catalog: Arc<HeroCatalog>,
        profiles: Arc<ProfileMap>,
        replays: BTreeMap<String, Arc<ReplaySeries>>,
    ) -> Self {
        let index: HashMap<String, usize> = matches
            .iter()
            .enumerate()
            .map(|(i, m)| (m.match_id.clone(), i))
            .collect();
        let replays: BTreeMap<_, _> = replays
            .into_iter()
            .filter(|(id, _)| index.contains_key(id))
            .collect();
        for m in &mut matches {
            m.has_replay = replays.contains_key(&m.match_id);
        }
        Dataset {
            matches,
            catalog,
            profiles,
            replays,
            index,
        }
    }

    /// Same catalog, profiles and (filtered) replays over a different match list.
    pub fn with_matches(&self, matches: Vec<MatchRecord>) -> Dataset {
        Dataset::new(
            matches,
            self.catalog.clone(),
            self.profiles.clone(),
            self.replays.clone(),
        )
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn get(&self, match_id: &str) -> Option<&MatchRecord> {
        self.index.get(match_id).map(|&i| &self.matches[i])
    }

    pub fn replay(&self, match_id: &str) -> Option<&ReplaySeries> {
        self.replays.get(match_id).map(|r| r.as_ref())
    }

    pub fn replays(&self) -> &BTreeMap<String, Arc<ReplaySeries>> {
        &self.replays
    }

    pub fn profile(&self, account_id: Option<&str>) -> Option<&PlayerProfile> {
        account_id.and_then(|a| self.profiles.get(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SlotCount { side: TeamSide, count: usize },
    DuplicateHero(u32),
    UnknownHero(u32),
    NonPositiveDuration,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SlotCount { side, count } => {
                write!(f, "slot count: {side} has {count} players, expected {TEAM_SIZE}")
            }
            Violation::DuplicateHero(h) => write!(f, "duplicate hero {h}"),
            Violation::UnknownHero(h) => write!(f, "unknown hero {h}"),
            Violation::NonPositiveDuration => f.write_str("nonpositive duration"),
        }
    }
}

/// Lists every invariant the record breaks; an empty list means the record is valid.
pub fn validate_match(m: &MatchRecord, catalog: &HeroCatalog) -> Vec<Violation> {
    let mut out = Vec::new();
    for side in [TeamSide::Radiant, TeamSide::Dire] {
        let count = m.team(side).count();
        if count != TEAM_SIZE {
            out.push(Violation::SlotCount { side, count });
        }
    }
    let mut seen = BTreeSet::new();
    let mut dup = BTreeSet::new();
    for s in &m.slots {
        if !catalog.contains(s.hero_id) {
            out.push(Violation::UnknownHero(s.hero_id));
        }
        if !seen.insert(s.hero_id) {
            dup.insert(s.hero_id);
        }
    }
    out.extend(dup.into_iter().map(Violation::DuplicateHero));
    if m.duration_min == 0 {
        out.push(Violation::NonPositiveDuration);
    }
    out
}

/// Seeded random partition into (train, test). The test side receives
/// `ceil(n * test_fraction)` matches; both sides keep the original match order.
pub fn split_dataset(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n = d.len();
    let n_test = ((n as f64) * test_fraction - 1e-9).ceil().max(0.0) as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidArgument(format!(
            "splitting {n} matches with test fraction {test_fraction} leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_test = vec![false; n];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(n - n_test), Vec::with_capacity(n_test));
    for (m, t) in d.matches.iter().zip(is_test) {
        if t {
            test.push(m.clone());
        } else {
            train.push(m.clone());
        }
    }
    Ok((d.with_matches(train), d.with_matches(test)))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn valid_match_has_no_violations() {
        let m = simple_match("m1", TeamSide::Radiant);
        assert!(validate_match(&m, &catalog(12, 3)).is_empty());
    }

    #[test]
    fn duplicate_hero_is_reported() {
        let m = match_with("m", TeamSide::Radiant, [7, 2, 3, 4, 5], [7, 8, 9, 10, 11]);
        let v = validate_match(&m, &catalog(12, 3));
        assert_eq!(v, vec![Violation::DuplicateHero(7)]);
        assert!(v[0].to_string().contains("duplicate hero"));
    }

    #[test]
    fn four_radiant_slots_is_a_slot_count_violation() {
        let mut m = simple_match("m", TeamSide::Radiant);
        m.slots.remove(0);
        let v = validate_match(&m, &catalog(12, 3));
        assert_eq!(
            v,
            vec![Violation::SlotCount {
                side: TeamSide::Radiant,
                count: 4
            }]
        );
        assert!(v[0].to_string().starts_with("slot count"));
    }

    #[test]
    fn unknown_hero_and_zero_duration() {
        let mut m = match_with("m", TeamSide::Dire, [1, 2, 3, 4, 5], [6, 7, 8, 9, 99]);
        m.duration_min = 0;
        let v = validate_match(&m, &catalog(12, 3));
        assert!(v.contains(&Violation::UnknownHero(99)));
        assert!(v.contains(&Violation::NonPositiveDuration));
    }

    #[test]
    fn validation_is_pure() {
        let m = match_with("m", TeamSide::Radiant, [7, 2, 3, 4, 5], [7, 8, 9, 10, 11]);
        let before = m.clone();
        let c = catalog(12, 3);
        assert_eq!(validate_match(&m, &c), validate_match(&m, &c));
        assert_eq!(m, before);
    }

    #[test]
    fn slots_are_canonically_ordered() {
        let mut slots = simple_match("m", TeamSide::Radiant).slots;
        slots.reverse();
        slots[9].account_id = None; // a radiant player, now listed last
        let m = MatchRecord::new("m", TeamSide::Radiant, slots, 30);
        let sides: Vec<_> = m.slots.iter().map(|s| s.side).collect();
        assert!(sides[..5].iter().all(|s| *s == TeamSide::Radiant));
        assert_eq!(m.slots[4].account_id, None);
        let ids: Vec<_> = m.slots[..4].iter().map(|s| s.account_id.clone().unwrap()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn swap_exchanges_teams_and_winner() {
        let m = simple_match("m", TeamSide::Radiant);
        let s = m.swapped();
        assert_eq!(s.winner, TeamSide::Dire);
        let r: Vec<u32> = s.team(TeamSide::Radiant).map(|p| p.hero_id).collect();
        assert_eq!(r, vec![6, 7, 8, 9, 10]);
        assert_eq!(s.swapped(), m);
    }

    fn hundred() -> Dataset {
        dataset(
            (0..100)
                .map(|i| simple_match(&format!("m{i}"), TeamSide::Radiant))
                .collect(),
        )
    }

    #[test]
    fn split_sizes_and_partition() {
        let d = hundred();
        let (train, test) = split_dataset(&d, 0.1, 42).unwrap();
        assert_eq!((train.len(), test.len()), (90, 10));
        let mut all: Vec<_> = train
            .matches
            .iter()
            .chain(&test.matches)
            .map(|m| m.match_id.clone())
            .collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 100);
    }

    #[test]
    fn split_is_deterministic() {
        let d = hundred();
        let (a, _) = split_dataset(&d, 0.1, 42).unwrap();
        let (b, _) = split_dataset(&d, 0.1, 42).unwrap();
        let (c, _) = split_dataset(&d, 0.1, 43).unwrap();
        assert_eq!(a.matches, b.matches);
        assert_ne!(a.matches, c.matches);
    }

    #[test]
    fn split_rejects_empty_side() {
        let d = dataset(
            (0..10)
                .map(|i| simple_match(&format!("m{i}"), TeamSide::Radiant))
                .collect(),
        );
        // ceil(10 * 0.95) = 10 test matches, nothing left to train on
        assert!(split_dataset(&d, 0.95, 1).is_err());
        assert!(split_dataset(&d, 0.0, 1).is_err());
        assert!(split_dataset(&d, 1.0, 1).is_err());
        let (train, test) = split_dataset(&d, 0.85, 1).unwrap();
        assert_eq!((train.len(), test.len()), (1, 9));
    }

    #[test]
    fn replay_rejects_decreasing_series() {
        let ok = PlayerSeries {
            slot: 0,
            gold: vec![0.0, 10.0, 20.0],
            xp: vec![0.0, 1.0, 2.0],
            deaths: vec![0.0, 0.0, 1.0],
        };
        assert!(ReplaySeries::new("m", vec![ok.clone()]).is_ok());
        let bad = PlayerSeries {
            gold: vec![0.0, 10.0, 5.0],
            ..ok.clone()
        };
        assert!(ReplaySeries::new("m", vec![bad]).is_err());
        let ragged = PlayerSeries {
            xp: vec![0.0, 1.0],
            ..ok
        };
        assert!(ReplaySeries::new("m", vec![ragged]).is_err());
    }

    #[test]
    fn dataset_drops_orphan_replays() {
        let series = PlayerSeries {
            slot: 0,
            gold: vec![0.0],
            xp: vec![0.0],
            deaths: vec![0.0],
        };
        let mut replays = BTreeMap::new();
        for id in ["m1", "zzz"] {
            replays.insert(
                id.to_string(),
                Arc::new(ReplaySeries::new(id, vec![series.clone()]).unwrap()),
            );
        }
        let d = Dataset::new(
            vec![simple_match("m1", TeamSide::Radiant), simple_match("m2", TeamSide::Dire)],
            Arc::new(catalog(12, 3)),
            Arc::new(ProfileMap::new()),
            replays,
        );
        assert_eq!(d.replays().len(), 1);
        assert!(d.get("m1").unwrap().has_replay);
        assert!(!d.get("m2").unwrap().has_replay);
    }

    proptest::proptest! {
        #[test]
        fn split_partitions_every_size(n in 2usize..200, frac in 0.01f64..0.99, seed in 0u64..1000) {
            let d = dataset((0..n).map(|i| simple_match(&format!("m{i}"), TeamSide::Radiant)).collect());
            if let Ok((train, test)) = split_dataset(&d, frac, seed) {
                proptest::prop_assert_eq!(train.len() + test.len(), n);
                let train_ids: BTreeSet<_> = train.matches.iter().map(|m| &m.match_id).collect();
                proptest::prop_assert!(test.matches.iter().all(|m| !train_ids.contains(&m.match_id)));
            }
        }
    }
}
