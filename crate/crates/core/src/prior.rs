//! Pre-match feature vectors: hero selection, hero attributes, rival win rates,
//! player ratings and per-(player, hero) history, plus imputation and z-scoring.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{
    HeroCatalog, MatchRecord, ProfileMap, TeamSide, HERO_HISTORY_STATS, MATCH_SIZE, TEAM_SIZE,
};
use crate::error::{Error, Result};

/// Number of (Radiant hero, Dire hero) pairs in a match.
pub const RIVAL_PAIRS: usize = TEAM_SIZE * TEAM_SIZE;
pub const PLAYER_STATS: usize = 2;
pub const HERO_PLAYER_STATS: usize = HERO_HISTORY_STATS.len();
/// Smallest standard deviation a [`Normalizer`] will divide by.
pub const SD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    HeroSelection,
    HeroAttributes,
    RivalRates,
    Player,
    HeroPlayer,
}

impl Segment {
    pub const ALL: [Segment; 5] = [
        Segment::HeroSelection,
        Segment::HeroAttributes,
        Segment::RivalRates,
        Segment::Player,
        Segment::HeroPlayer,
    ];
}

/// Segment sizes of the prior vector for a given catalog shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorLayout {
    pub hero_count: usize,
    pub attribute_count: usize,
}

impl PriorLayout {
    pub fn for_catalog(c: &HeroCatalog) -> Self {
        PriorLayout {
            hero_count: c.hero_count as usize,
            attribute_count: c.attribute_count(),
        }
    }

    pub fn segment_len(&self, s: Segment) -> usize {
        match s {
            Segment::HeroSelection => 2 * self.hero_count,
            Segment::HeroAttributes => MATCH_SIZE * self.attribute_count,
            Segment::RivalRates => RIVAL_PAIRS,
            Segment::Player => MATCH_SIZE * PLAYER_STATS,
            Segment::HeroPlayer => MATCH_SIZE * HERO_PLAYER_STATS,
        }
    }

    pub fn segment(&self, s: Segment) -> Range<usize> {
        let mut start = 0;
        for seg in Segment::ALL {
            let len = self.segment_len(seg);
            if seg == s {
                return start..start + len;
            }
            start += len;
        }
        unreachable!()
    }

    pub fn len(&self) -> usize {
        Segment::ALL.iter().map(|&s| self.segment_len(s)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column_names(&self, attribute_names: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        for side in ["radiant", "dire"] {
            for h in 1..=self.hero_count {
                out.push(format!("pick_{side}_{h}"));
            }
        }
        for slot in 0..MATCH_SIZE {
            for a in 0..self.attribute_count {
                let name = attribute_names.get(a).map(String::as_str).unwrap_or("attr");
                out.push(format!("slot{slot}_{name}"));
            }
        }
        for r in 0..TEAM_SIZE {
            for d in 0..TEAM_SIZE {
                out.push(format!("rival_{r}_{d}"));
            }
        }
        for slot in 0..MATCH_SIZE {
            out.push(format!("slot{slot}_mmr"));
            out.push(format!("slot{slot}_mmr_percentile"));
        }
        for slot in 0..MATCH_SIZE {
            for s in HERO_HISTORY_STATS {
                out.push(format!("slot{slot}_hero_{s}"));
            }
        }
        out
    }
}

/// Which feature families a prior model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Hero,
    Player,
    HeroPlayer,
    All,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [
        FeatureSet::Hero,
        FeatureSet::Player,
        FeatureSet::HeroPlayer,
        FeatureSet::All,
    ];

    pub fn segments(self) -> &'static [Segment] {
        match self {
            FeatureSet::Hero => &[
                Segment::HeroSelection,
                Segment::HeroAttributes,
                Segment::RivalRates,
            ],
            FeatureSet::Player => &[Segment::Player],
            FeatureSet::HeroPlayer => &[Segment::HeroPlayer],
            FeatureSet::All => &Segment::ALL,
        }
    }

    /// Column indices of the full prior vector that this set keeps.
    pub fn columns(self, layout: &PriorLayout) -> Vec<usize> {
        self.segments()
            .iter()
            .flat_map(|&s| layout.segment(s))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Hero => "hero",
            FeatureSet::Player => "player",
            FeatureSet::HeroPlayer => "heroplayer",
            FeatureSet::All => "all",
        }
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hero" => Ok(FeatureSet::Hero),
            "player" => Ok(FeatureSet::Player),
            "heroplayer" | "hero-player" => Ok(FeatureSet::HeroPlayer),
            "all" => Ok(FeatureSet::All),
            _ => Err(Error::InvalidArgument(format!("unknown feature set {s:?}"))),
        }
    }
}

fn pair_key(radiant_hero: u32, dire_hero: u32) -> u64 {
    ((radiant_hero as u64) << 32) | dire_hero as u64
}

/// Radiant win counts for every (Radiant hero, Dire hero) pairing seen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RivalWinrateTable {
    /// packed (radiant hero, dire hero) -> (radiant wins, games)
    pairs: BTreeMap<u64, (u32, u32)>,
    pub default_rate: f64,
    /// Also count each pairing mirrored, with the complementary outcome.
    pub symmetric: bool,
}

impl RivalWinrateTable {
    pub fn new(symmetric: bool) -> Self {
        RivalWinrateTable {
            pairs: BTreeMap::new(),
            default_rate: 0.5,
            symmetric,
        }
    }

    pub fn build<'a>(matches: impl IntoIterator<Item = &'a MatchRecord>, symmetric: bool) -> Self {
        let mut t = RivalWinrateTable::new(symmetric);
        for m in matches {
            t.add_match(m);
        }
        t
    }

    pub fn add_match(&mut self, m: &MatchRecord) {
        let radiant_won = m.winner == TeamSide::Radiant;
        for r in m.team(TeamSide::Radiant) {
            for d in m.team(TeamSide::Dire) {
                let e = self.pairs.entry(pair_key(r.hero_id, d.hero_id)).or_default();
                e.0 += radiant_won as u32;
                e.1 += 1;
                if self.symmetric {
                    let e = self.pairs.entry(pair_key(d.hero_id, r.hero_id)).or_default();
                    e.0 += !radiant_won as u32;
                    e.1 += 1;
                }
            }
        }
    }

    /// (radiant wins, games) for a pairing.
    pub fn counts(&self, radiant_hero: u32, dire_hero: u32) -> (u32, u32) {
        self.pairs
            .get(&pair_key(radiant_hero, dire_hero))
            .copied()
            .unwrap_or((0, 0))
    }

    pub fn rate(&self, radiant_hero: u32, dire_hero: u32) -> f64 {
        match self.counts(radiant_hero, dire_hero) {
            (_, 0) => self.default_rate,
            (w, g) => w as f64 / g as f64,
        }
    }

    /// Rate for a pairing of a match the table was built from, with that match's own
    /// outcome taken out.
    pub fn rate_excluding(&self, radiant_hero: u32, dire_hero: u32, radiant_won: bool) -> f64 {
        match self.counts(radiant_hero, dire_hero) {
            (_, 0 | 1) => self.default_rate,
            (w, g) => (w - radiant_won as u32) as f64 / (g - 1) as f64,
        }
    }
}

/// Means substituted for missing player and (player, hero) statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationTable {
    pub player: [f64; PLAYER_STATS],
    pub hero_player: [f64; HERO_PLAYER_STATS],
}

impl ImputationTable {
    /// Pools every present slot of the given matches; statistics without any
    /// observation impute to 0.
    pub fn fit<'a>(matches: impl IntoIterator<Item = &'a MatchRecord>, profiles: &ProfileMap) -> Self {
        let mut p_sum = [0.0; PLAYER_STATS];
        let mut p_n = 0usize;
        let mut h_sum = [0.0; HERO_PLAYER_STATS];
        let mut h_n = 0usize;
        for m in matches {
            for s in &m.slots {
                let Some(p) = s.account_id.as_ref().and_then(|a| profiles.get(a)) else {
                    continue;
                };
                p_sum[0] += p.mmr;
                p_sum[1] += p.mmr_percentile;
                p_n += 1;
                if let Some(h) = p.per_hero.get(&s.hero_id) {
                    for (acc, v) in h_sum.iter_mut().zip(h.stats()) {
                        *acc += v;
                    }
                    h_n += 1;
                }
            }
        }
        let div = |n: usize| if n == 0 { 1.0 } else { n as f64 };
        ImputationTable {
            player: p_sum.map(|v| v / div(p_n)),
            hero_player: h_sum.map(|v| v / div(h_n)),
        }
    }
}

/// One-hot picks, the ten heroes' attributes and the 25 rival rates.
pub fn extract_hero_features(
    m: &MatchRecord,
    catalog: &HeroCatalog,
    rivals: &RivalWinrateTable,
) -> Result<Vec<f64>> {
    let hero_count = catalog.hero_count as usize;
    let mut out = vec![0.0; 2 * hero_count];
    let mut attrs = Vec::with_capacity(MATCH_SIZE * catalog.attribute_count());
    for s in &m.slots {
        let a = catalog
            .attributes(s.hero_id)
            .ok_or_else(|| Error::InvalidData(format!("match {}: unknown hero {}", m.match_id, s.hero_id)))?;
        let offset = match s.side {
            TeamSide::Radiant => 0,
            TeamSide::Dire => hero_count,
        };
        out[offset + s.hero_id as usize - 1] = 1.0;
        attrs.extend_from_slice(a);
    }
    out.extend(attrs);
    for r in m.team(TeamSide::Radiant) {
        for d in m.team(TeamSide::Dire) {
            out.push(rivals.rate(r.hero_id, d.hero_id));
        }
    }
    Ok(out)
}

/// (mmr, mmr percentile) per slot.
pub fn extract_player_features(
    m: &MatchRecord,
    profiles: &ProfileMap,
    imputation: &ImputationTable,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(MATCH_SIZE * PLAYER_STATS);
    for s in &m.slots {
        match s.account_id.as_ref().and_then(|a| profiles.get(a)) {
            Some(p) => out.extend([p.mmr, p.mmr_percentile]),
            None => out.extend(imputation.player),
        }
    }
    out
}

/// Eight history statistics per slot for the hero that slot picked.
pub fn extract_heroplayer_features(
    m: &MatchRecord,
    profiles: &ProfileMap,
    imputation: &ImputationTable,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(MATCH_SIZE * HERO_PLAYER_STATS);
    for s in &m.slots {
        let history = s
            .account_id
            .as_ref()
            .and_then(|a| profiles.get(a))
            .and_then(|p| p.per_hero.get(&s.hero_id));
        match history {
            Some(h) => out.extend(h.stats()),
            None => out.extend(imputation.hero_player),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorFeatureVector {
    pub values: Vec<f64>,
    pub layout: PriorLayout,
}

impl PriorFeatureVector {
    pub fn segment(&self, s: Segment) -> &[f64] {
        &self.values[self.layout.segment(s)]
    }
}

pub fn assemble_prior_vector(
    m: &MatchRecord,
    catalog: &HeroCatalog,
    profiles: &ProfileMap,
    rivals: &RivalWinrateTable,
    imputation: &ImputationTable,
) -> Result<PriorFeatureVector> {
    let mut values = extract_hero_features(m, catalog, rivals)?;
    values.extend(extract_player_features(m, profiles, imputation));
    values.extend(extract_heroplayer_features(m, profiles, imputation));
    Ok(PriorFeatureVector {
        values,
        layout: PriorLayout::for_catalog(catalog),
    })
}

/// Everything fit on training matches that prior vectors depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorPipeline {
    pub layout: PriorLayout,
    pub rivals: RivalWinrateTable,
    pub imputation: ImputationTable,
}

impl PriorPipeline {
    pub fn fit<'a, I>(matches: I, catalog: &HeroCatalog, profiles: &ProfileMap, symmetric_rivals: bool) -> Self
    where
        I: IntoIterator<Item = &'a MatchRecord>,
        I::IntoIter: Clone,
    {
        let it = matches.into_iter();
        PriorPipeline {
            layout: PriorLayout::for_catalog(catalog),
            rivals: RivalWinrateTable::build(it.clone(), symmetric_rivals),
            imputation: ImputationTable::fit(it, profiles),
        }
    }

    pub fn vector(&self, m: &MatchRecord, catalog: &HeroCatalog, profiles: &ProfileMap) -> Result<Vec<f64>> {
        Ok(assemble_prior_vector(m, catalog, profiles, &self.rivals, &self.imputation)?.values)
    }

    /// One row per match.
    pub fn matrix<'a>(
        &self,
        matches: impl IntoIterator<Item = &'a MatchRecord>,
        catalog: &HeroCatalog,
        profiles: &ProfileMap,
    ) -> Result<Array2<f64>> {
        let d = self.layout.len();
        let mut data = Vec::new();
        let mut rows = 0;
        for m in matches {
            data.extend(self.vector(m, catalog, profiles)?);
            rows += 1;
        }
        Ok(Array2::from_shape_vec((rows, d), data).expect("rows have layout length"))
    }

    /// Rows for matches the pipeline was fit on. Rival rates leave out each row's own
    /// outcome, so a match cannot see its result through the table.
    pub fn training_matrix<'a, I>(&self, matches: I, catalog: &HeroCatalog, profiles: &ProfileMap) -> Result<Array2<f64>>
    where
        I: IntoIterator<Item = &'a MatchRecord>,
        I::IntoIter: Clone,
    {
        let it = matches.into_iter();
        let mut x = self.matrix(it.clone(), catalog, profiles)?;
        let range = self.layout.segment(Segment::RivalRates);
        for (mut row, m) in x.outer_iter_mut().zip(it) {
            let radiant_won = m.winner == TeamSide::Radiant;
            let mut k = range.start;
            for r in m.team(TeamSide::Radiant) {
                for d in m.team(TeamSide::Dire) {
                    row[k] = self.rivals.rate_excluding(r.hero_id, d.hero_id, radiant_won);
                    k += 1;
                }
            }
        }
        Ok(x)
    }
}

/// Per-column z-scoring fit on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Normalizer {
    /// Leaves values untouched.
    pub fn identity(dim: usize) -> Self {
        Normalizer {
            mean: vec![0.0; dim],
            sd: vec![1.0; dim],
        }
    }

    /// Population standard deviations, floored at [`SD_FLOOR`].
    pub fn from_moments(mean: Vec<f64>, variance: Vec<f64>) -> Self {
        let sd = variance.iter().map(|v| v.max(0.0).sqrt().max(SD_FLOOR)).collect();
        Normalizer { mean, sd }
    }

    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("cannot fit a normalizer on zero rows".into()));
        }
        let mean: Vec<f64> = x.columns().into_iter().map(|c| c.sum() / n as f64).collect();
        let var = x
            .columns()
            .into_iter()
            .zip(&mean)
            .map(|(c, m)| c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64)
            .collect();
        Ok(Normalizer::from_moments(mean, var))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }

    pub fn apply_matrix(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.sd) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// Writes `label` followed by one column per prior feature.
pub fn write_feature_csv<W: Write>(
    mut w: W,
    column_names: &[String],
    labels: &[f64],
    x: ArrayView2<'_, f64>,
) -> std::io::Result<()> {
    write!(w, "label")?;
    for c in column_names {
        write!(w, ",{c}")?;
    }
    writeln!(w)?;
    for (label, row) in labels.iter().zip(x.rows()) {
        write!(w, "{label}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
