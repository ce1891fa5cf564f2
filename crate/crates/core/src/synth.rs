//! Synthetic matches from a known generative process.
//!
//! Each match's latent strength difference is
//! `s = hero_scale·Σ Δstrength + skill_scale·Σ Δskill + affinity_scale·Σ Δaffinity`
//! (Radiant minus Dire), and Radiant wins with probability `sigmoid(s)`. Player profiles
//! and per-hero histories are summaries of simulated background games, so they carry
//! estimation noise. Replays follow a random walk whose drift points toward the winner.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifiers::sigmoid;
use crate::data::{
    Dataset, HeroCatalog, HeroHistory, MatchRecord, PlayerProfile, PlayerSeries, PlayerSlot, ProfileMap,
    ReplaySeries, TeamSide, MATCH_SIZE, TEAM_SIZE,
};
use crate::error::{Error, Result};

/// Generator settings. Every scale is a nonnegative multiplier on one source of signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_matches: usize,
    pub hero_count: u32,
    pub attribute_count: usize,
    pub player_count: usize,
    pub seed: u64,
    pub hero_strength_scale: f64,
    pub player_skill_scale: f64,
    pub hero_player_affinity_scale: f64,
    /// Loading of hero strength on the catalog attributes, against unit noise.
    pub attribute_signal: f64,
    /// Per-minute drift of the team-difference walk, in noise units.
    pub realtime_drift_scale: f64,
    pub realtime_noise_scale: f64,
    /// Drift multiplier for minutes up to `pivot_minute`.
    pub early_drift_factor: f64,
    pub pivot_minute: u32,
    pub replay_fraction: f64,
    pub duration_mean: f64,
    pub duration_sd: f64,
    pub min_duration: u32,
    /// Heroes each player usually picks from.
    pub pool_size: usize,
    pub pool_pick_rate: f64,
    pub private_fraction: f64,
    pub min_history_games: u32,
    pub max_history_games: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_matches: 10_000,
            hero_count: 113,
            attribute_count: 26,
            player_count: 3000,
            seed: 0,
            hero_strength_scale: 0.2,
            player_skill_scale: 0.25,
            hero_player_affinity_scale: 0.2,
            attribute_signal: 0.5,
            realtime_drift_scale: 0.15,
            realtime_noise_scale: 1.0,
            early_drift_factor: 1.0,
            pivot_minute: 20,
            replay_fraction: 0.5,
            duration_mean: 37.75,
            duration_sd: 10.42,
            min_duration: 10,
            pool_size: 12,
            pool_pick_rate: 0.9,
            private_fraction: 0.03,
            min_history_games: 50,
            max_history_games: 200,
        }
    }
}

impl SynthConfig {
    /// No signal anywhere: winners are fair coin flips and series are driftless.
    pub fn null(n_matches: usize, seed: u64) -> Self {
        SynthConfig {
            n_matches,
            seed,
            hero_strength_scale: 0.0,
            player_skill_scale: 0.0,
            hero_player_affinity_scale: 0.0,
            realtime_drift_scale: 0.0,
            ..SynthConfig::default()
        }
    }

    /// Drift toward the loser early and toward the winner after the pivot minute, at
    /// twice the default rate.
    pub fn time_heterogeneous(n_matches: usize, seed: u64) -> Self {
        SynthConfig {
            n_matches,
            seed,
            realtime_drift_scale: 0.3,
            early_drift_factor: -1.0,
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.hero_count as usize) < MATCH_SIZE {
            return Err(Error::InvalidArgument(format!(
                "need at least {MATCH_SIZE} heroes, got {}",
                self.hero_count
            )));
        }
        if self.player_count < MATCH_SIZE {
            return Err(Error::InvalidArgument(format!(
                "need at least {MATCH_SIZE} players, got {}",
                self.player_count
            )));
        }
        let scales = [
            self.hero_strength_scale,
            self.player_skill_scale,
            self.hero_player_affinity_scale,
            self.attribute_signal,
            self.realtime_drift_scale,
            self.realtime_noise_scale,
            self.duration_sd,
        ];
        if scales.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("signal scales must be finite and nonnegative".into()));
        }
        for (name, f) in [
            ("replay_fraction", self.replay_fraction),
            ("pool_pick_rate", self.pool_pick_rate),
            ("private_fraction", self.private_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {f}")));
            }
        }
        if !self.early_drift_factor.is_finite() || !self.duration_mean.is_finite() {
            return Err(Error::InvalidArgument("non-finite generator setting".into()));
        }
        if self.min_duration == 0 || self.min_history_games == 0 || self.min_history_games > self.max_history_games {
            return Err(Error::InvalidArgument("invalid duration or history game bounds".into()));
        }
        if self.pool_size == 0 || self.pool_size > self.hero_count as usize {
            return Err(Error::InvalidArgument("pool size must be between 1 and the hero count".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual value, as used by key-value config files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("invalid value {v:?} for {key}")))
        }
        match key {
            "n_matches" => self.n_matches = parse(key, value)?,
            "hero_count" => self.hero_count = parse(key, value)?,
            "attribute_count" => self.attribute_count = parse(key, value)?,
            "player_count" => self.player_count = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "hero_strength_scale" => self.hero_strength_scale = parse(key, value)?,
            "player_skill_scale" => self.player_skill_scale = parse(key, value)?,
            "hero_player_affinity_scale" => self.hero_player_affinity_scale = parse(key, value)?,
            "attribute_signal" => self.attribute_signal = parse(key, value)?,
            "realtime_drift_scale" => self.realtime_drift_scale = parse(key, value)?,
            "realtime_noise_scale" => self.realtime_noise_scale = parse(key, value)?,
            "early_drift_factor" => self.early_drift_factor = parse(key, value)?,
            "pivot_minute" => self.pivot_minute = parse(key, value)?,
            "replay_fraction" => self.replay_fraction = parse(key, value)?,
            "duration_mean" => self.duration_mean = parse(key, value)?,
            "duration_sd" => self.duration_sd = parse(key, value)?,
            "min_duration" => self.min_duration = parse(key, value)?,
            "pool_size" => self.pool_size = parse(key, value)?,
            "pool_pick_rate" => self.pool_pick_rate = parse(key, value)?,
            "private_fraction" => self.private_fraction = parse(key, value)?,
            "min_history_games" => self.min_history_games = parse(key, value)?,
            "max_history_games" => self.max_history_games = parse(key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown generator setting {key:?}"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub match_id: String,
    /// Latent Radiant-minus-Dire strength.
    pub strength: f64,
    pub p_radiant: f64,
    pub winner: TeamSide,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub rows: Vec<TruthRow>,
}

impl GroundTruth {
    pub fn get(&self, match_id: &str) -> Option<&TruthRow> {
        self.rows.iter().find(|r| r.match_id == match_id)
    }

    /// Rows for the given match ids, in that order.
    pub fn restrict<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> GroundTruth {
        let index: BTreeMap<&str, &TruthRow> = self.rows.iter().map(|r| (r.match_id.as_str(), r)).collect();
        GroundTruth {
            rows: ids.into_iter().filter_map(|id| index.get(id).map(|r| (*r).clone())).collect(),
        }
    }
}

/// Accuracy of predicting the more likely side under the true win probability.
pub fn bayes_accuracy(gt: &GroundTruth) -> f64 {
    if gt.rows.is_empty() {
        return f64::NAN;
    }
    gt.rows.iter().map(|r| r.p_radiant.max(1.0 - r.p_radiant)).sum::<f64>() / gt.rows.len() as f64
}

/// Per-player, per-minute increments of each channel at parity.
const BASE_RATE: [f64; 3] = [0.15, 450.0, 500.0];
/// Size of one noise unit of the team difference walk, per channel. Deaths move against
/// the leading team.
const CHANNEL_UNIT: [f64; 3] = [-0.04, 60.0, 70.0];

struct Player {
    skill: f64,
    pool: Vec<u32>,
    /// Affinity with each pool hero.
    affinity: BTreeMap<u32, f64>,
    private: bool,
}

impl Player {
    fn affinity(&self, hero: u32) -> f64 {
        self.affinity.get(&hero).copied().unwrap_or(0.0)
    }
}

fn account(i: usize) -> String {
    format!("acct{i:06}")
}

fn history(rng: &mut ChaCha8Rng, cfg: &SynthConfig, skill: f64, affinity: f64) -> HeroHistory {
    let games = rng.random_range(cfg.min_history_games..=cfg.max_history_games);
    let g = games as f64;
    let p = sigmoid(0.5 * skill + 0.8 * affinity);
    let wins = Binomial::new(games as u64, p).expect("valid binomial").sample(rng);
    let z = Normal::new(0.0, 1.0 / g.sqrt()).expect("valid normal");
    let mut noisy = |mean: f64, sd: f64| (mean + sd * z.sample(rng)).max(0.0);
    HeroHistory {
        winrate: wins as f64 / g,
        xpm: noisy(500.0 + 40.0 * affinity + 30.0 * skill, 80.0),
        gpm: noisy(450.0 + 40.0 * affinity + 25.0 * skill, 70.0),
        deaths_pm: noisy(0.2 - 0.03 * affinity - 0.02 * skill, 0.08),
        kills_pm: noisy(0.2 + 0.03 * affinity + 0.01 * skill, 0.08),
        assists_pm: noisy(0.3 + 0.01 * affinity + 0.02 * skill, 0.1),
        last_hits_pm: noisy(4.0 + 0.5 * affinity + 0.3 * skill, 1.0),
        games_played: games,
    }
}

fn catalog(rng: &mut ChaCha8Rng, cfg: &SynthConfig, strength: &[f64]) -> Result<HeroCatalog> {
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let loadings: Vec<f64> = (0..cfg.attribute_count).map(|_| std_normal.sample(rng)).collect();
    let names = (0..cfg.attribute_count).map(|j| format!("attr_{j:02}")).collect();
    let rows = strength
        .iter()
        .map(|&h| {
            loadings
                .iter()
                .map(|&l| 10.0 + cfg.attribute_signal * l * h + std_normal.sample(rng))
                .collect()
        })
        .collect();
    HeroCatalog::new(cfg.hero_count, names, rows)
}

fn draw_duration(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> u32 {
    let d = Normal::new(cfg.duration_mean, cfg.duration_sd).expect("valid normal");
    for _ in 0..1000 {
        let v = d.sample(rng).round();
        if v >= cfg.min_duration as f64 {
            return v as u32;
        }
    }
    cfg.min_duration
}

/// Cumulative per-player series whose team-mean difference follows a drifting walk.
fn replay(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    match_id: &str,
    radiant_slots: &[u8],
    dire_slots: &[u8],
    radiant_won: bool,
    duration: u32,
) -> Result<ReplaySeries> {
    let sign = if radiant_won { 1.0 } else { -1.0 };
    let noise = Normal::new(0.0, cfg.realtime_noise_scale).expect("valid normal");
    let len = duration as usize + 1;
    let mut players: Vec<PlayerSeries> = radiant_slots
        .iter()
        .chain(dire_slots)
        .map(|&slot| PlayerSeries {
            slot,
            gold: vec![0.0; len],
            xp: vec![0.0; len],
            deaths: vec![0.0; len],
        })
        .collect();
    for c in 0..3 {
        let share = |rng: &mut ChaCha8Rng| {
            let u: Vec<f64> = (0..TEAM_SIZE).map(|_| rng.random_range(0.5..1.5)).collect();
            let mean = u.iter().sum::<f64>() / TEAM_SIZE as f64;
            u.into_iter().map(|v| v / mean).collect::<Vec<f64>>()
        };
        let shares = [share(rng), share(rng)];
        for t in 1..len {
            let factor = if t as u32 <= cfg.pivot_minute { cfg.early_drift_factor } else { 1.0 };
            let step = sign * cfg.realtime_drift_scale * factor + noise.sample(rng);
            let base = BASE_RATE[c];
            let delta = (CHANNEL_UNIT[c] * step).clamp(-1.9 * base, 1.9 * base);
            let team_inc = [base + delta / 2.0, base - delta / 2.0];
            for (i, p) in players.iter_mut().enumerate() {
                let team = i / TEAM_SIZE;
                let inc = team_inc[team] * shares[team][i % TEAM_SIZE];
                let series = match c {
                    0 => &mut p.deaths,
                    1 => &mut p.gold,
                    _ => &mut p.xp,
                };
                series[t] = series[t - 1] + inc;
            }
        }
    }
    ReplaySeries::new(match_id, players)
}

/// Samples a complete dataset and the latent truth behind it.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<(Dataset, GroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let n_heroes = cfg.hero_count as usize;
    let hero_strength: Vec<f64> = (0..n_heroes).map(|_| std_normal.sample(&mut rng)).collect();
    let catalog = catalog(&mut rng, cfg, &hero_strength)?;
    let all_heroes: Vec<u32> = (1..=cfg.hero_count).collect();

    let players: Vec<Player> = (0..cfg.player_count)
        .map(|_| {
            let skill = std_normal.sample(&mut rng);
            let pool: Vec<u32> = all_heroes.choose_multiple(&mut rng, cfg.pool_size).copied().collect();
            let affinity = pool.iter().map(|&h| (h, std_normal.sample(&mut rng))).collect();
            let private = rng.random_bool(cfg.private_fraction);
            Player {
                skill,
                pool,
                affinity,
                private,
            }
        })
        .collect();

    let mmr: Vec<f64> = players
        .iter()
        .map(|p| 4000.0 + 600.0 * p.skill + 60.0 * std_normal.sample(&mut rng))
        .collect();
    let mut order: Vec<usize> = (0..players.len()).collect();
    order.sort_by(|&a, &b| mmr[a].total_cmp(&mmr[b]));
    let mut percentile = vec![0.0; players.len()];
    let denom = (players.len() - 1).max(1) as f64;
    for (rank, &i) in order.iter().enumerate() {
        percentile[i] = rank as f64 / denom;
    }
    let mut profiles = ProfileMap::new();
    for (i, p) in players.iter().enumerate() {
        if p.private {
            continue;
        }
        let per_hero = p
            .pool
            .iter()
            .map(|&h| (h, history(&mut rng, cfg, p.skill, p.affinity(h))))
            .collect();
        profiles.insert(
            account(i),
            PlayerProfile {
                account_id: account(i),
                mmr: mmr[i],
                mmr_percentile: percentile[i],
                per_hero,
            },
        );
    }

    let player_ids: Vec<usize> = (0..players.len()).collect();
    let mut matches = Vec::with_capacity(cfg.n_matches);
    let mut replays = BTreeMap::new();
    let mut truth = Vec::with_capacity(cfg.n_matches);
    for k in 0..cfg.n_matches {
        let match_id = format!("{}", 1_000_000 + k);
        let mut chosen: Vec<usize> = player_ids.choose_multiple(&mut rng, MATCH_SIZE).copied().collect();
        chosen.shuffle(&mut rng);
        let mut taken = vec![false; n_heroes + 1];
        let mut slots = Vec::with_capacity(MATCH_SIZE);
        let mut strength = 0.0;
        for (slot, &pi) in chosen.iter().enumerate() {
            let p = &players[pi];
            let free_pool: Vec<u32> = p.pool.iter().copied().filter(|&h| !taken[h as usize]).collect();
            let hero = if !free_pool.is_empty() && rng.random_bool(cfg.pool_pick_rate) {
                *free_pool.choose(&mut rng).expect("nonempty")
            } else {
                loop {
                    let h = rng.random_range(1..=cfg.hero_count);
                    if !taken[h as usize] {
                        break h;
                    }
                }
            };
            taken[hero as usize] = true;
            let side = if slot < TEAM_SIZE { TeamSide::Radiant } else { TeamSide::Dire };
            let contribution = cfg.hero_strength_scale * hero_strength[hero as usize - 1]
                + cfg.player_skill_scale * p.skill
                + cfg.hero_player_affinity_scale * p.affinity(hero);
            strength += if side == TeamSide::Radiant { contribution } else { -contribution };
            slots.push(PlayerSlot {
                account_id: (!p.private).then(|| account(pi)),
                hero_id: hero,
                side,
                slot: slot as u8,
            });
        }
        let p_radiant = sigmoid(strength);
        let radiant_won = rng.random_bool(p_radiant);
        let winner = if radiant_won { TeamSide::Radiant } else { TeamSide::Dire };
        let duration = draw_duration(&mut rng, cfg);
        if rng.random_bool(cfg.replay_fraction) {
            let r = replay(&mut rng, cfg, &match_id, &[0, 1, 2, 3, 4], &[5, 6, 7, 8, 9], radiant_won, duration)?;
            replays.insert(match_id.clone(), Arc::new(r));
        }
        truth.push(TruthRow {
            match_id: match_id.clone(),
            strength,
            p_radiant,
            winner,
        });
        matches.push(MatchRecord::new(match_id, winner, slots, duration));
    }
    Ok((
        Dataset::new(matches, Arc::new(catalog), Arc::new(profiles), replays),
        GroundTruth { rows: truth },
    ))
}
