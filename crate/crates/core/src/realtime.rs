//! In-match features: team-difference series, sliding windows and discretization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{MatchRecord, ReplaySeries, TeamSide, TEAM_SIZE};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 24;
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Deaths,
    Gold,
    Experience,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Deaths, Channel::Gold, Channel::Experience];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Deaths => "deaths",
            Channel::Gold => "gold",
            Channel::Experience => "xp",
        }
    }
}

/// Radiant team mean minus Dire team mean, per minute, for each channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffSeries {
    pub match_id: String,
    /// Indexed by [`Channel::index`].
    pub channels: [Vec<f64>; 3],
}

impl DiffSeries {
    pub fn channel(&self, c: Channel) -> &[f64] {
        &self.channels[c.index()]
    }

    /// Last covered minute.
    pub fn minutes(&self) -> u32 {
        (self.channels[0].len() - 1) as u32
    }

    /// Whether a window ending at `t` (covering `t - len .. t - 1`) exists.
    pub fn covers_window(&self, t: u32, len: usize) -> bool {
        t as usize >= len && t >= 1 && t - 1 <= self.minutes()
    }
}

/// Averages each team's cumulative totals and subtracts Dire from Radiant.
/// Series longer than the match are cut at the final minute.
pub fn compute_diff_series(r: &ReplaySeries, m: &MatchRecord) -> Result<DiffSeries> {
    let mut sides = Vec::with_capacity(r.players().len());
    let mut counts = [0usize; 2];
    for p in r.players() {
        let side = m
            .slots
            .iter()
            .find(|s| s.slot == p.slot)
            .map(|s| s.side)
            .ok_or_else(|| {
                Error::InvalidData(format!(
                    "replay {} refers to slot {} which match {} does not have",
                    r.match_id, p.slot, m.match_id
                ))
            })?;
        counts[(side == TeamSide::Dire) as usize] += 1;
        sides.push(side);
    }
    if counts != [TEAM_SIZE, TEAM_SIZE] {
        return Err(Error::InvalidData(format!(
            "replay {} covers {} Radiant and {} Dire players",
            r.match_id, counts[0], counts[1]
        )));
    }
    let len = (r.minutes() as usize).min(m.duration_min as usize) + 1;
    let mut channels = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    let inv = 1.0 / TEAM_SIZE as f64;
    for (p, side) in r.players().iter().zip(sides) {
        let sign = match side {
            TeamSide::Radiant => inv,
            TeamSide::Dire => -inv,
        };
        for (c, series) in [&p.deaths, &p.gold, &p.xp].into_iter().enumerate() {
            for (acc, v) in channels[c].iter_mut().zip(series) {
                *acc += sign * v;
            }
        }
    }
    Ok(DiffSeries {
        match_id: r.match_id.clone(),
        channels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Equal-frequency edges at empirical quantiles.
    Quantile,
    EqualWidth,
}

impl std::str::FromStr for Binning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "quantile" => Ok(Binning::Quantile),
            "equal_width" => Ok(Binning::EqualWidth),
            _ => Err(Error::InvalidArgument(format!("unknown binning {s:?}"))),
        }
    }
}

/// Ascending interior edges per channel; a value's bin is the number of edges at or below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    pub n_bins: usize,
    pub edges: [Vec<f64>; 3],
}

impl BinEdges {
    pub fn bin(&self, c: Channel, value: f64) -> usize {
        self.edges[c.index()].partition_point(|e| *e <= value)
    }
}

/// `n_bins - 1` strictly ascending edges for one channel's training pool.
pub fn fit_channel_edges(values: &[f64], n_bins: usize, binning: Binning) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot fit bins on an empty pool".into()));
    }
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {n_bins}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in binning pool".into()));
    }
    let n = values.len();
    let mut edges: Vec<f64> = match binning {
        Binning::Quantile => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            (1..n_bins).map(|k| sorted[(k * n / n_bins).min(n - 1)]).collect()
        }
        Binning::EqualWidth => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (1..n_bins)
                .map(|k| lo + (hi - lo) * k as f64 / n_bins as f64)
                .collect()
        }
    };
    for k in 1..edges.len() {
        if edges[k] <= edges[k - 1] {
            edges[k] = edges[k - 1].next_up();
        }
    }
    Ok(edges)
}

pub fn fit_bins<'a>(
    series: impl IntoIterator<Item = &'a DiffSeries>,
    n_bins: usize,
    binning: Binning,
) -> Result<BinEdges> {
    let mut pools: [Vec<f64>; 3] = Default::default();
    for s in series {
        for (pool, values) in pools.iter_mut().zip(&s.channels) {
            pool.extend_from_slice(values);
        }
    }
    let [d, g, x] = pools;
    Ok(BinEdges {
        n_bins,
        edges: [
            fit_channel_edges(&d, n_bins, binning)?,
            fit_channel_edges(&g, n_bins, binning)?,
            fit_channel_edges(&x, n_bins, binning)?,
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSeries {
    pub match_id: String,
    pub channels: [Vec<usize>; 3],
}

impl DiscreteSeries {
    pub fn minutes(&self) -> u32 {
        (self.channels[0].len() - 1) as u32
    }
}

pub fn discretize(d: &DiffSeries, e: &BinEdges) -> DiscreteSeries {
    let channels = Channel::ALL.map(|c| d.channel(c).iter().map(|&v| e.bin(c, v)).collect());
    DiscreteSeries {
        match_id: d.match_id.clone(),
        channels,
    }
}

/// Continuous values of minutes `end_minute - len .. end_minute - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub end_minute: u32,
    pub channels: [Vec<f64>; 3],
}

impl Window {
    /// Channel-major flattening: deaths, then gold, then experience.
    pub fn features(&self) -> Vec<f64> {
        self.channels.concat()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWindow {
    pub end_minute: u32,
    pub channels: [Vec<usize>; 3],
}

fn window_range(t: u32, len: usize, last_minute: u32) -> Result<std::ops::Range<usize>> {
    if len == 0 || (t as usize) < len || t - 1 > last_minute {
        return Err(Error::InvalidArgument(format!(
            "no {len}-minute window ends at minute {t} of a series ending at minute {last_minute}"
        )));
    }
    Ok(t as usize - len..t as usize)
}

pub fn slice_window(d: &DiffSeries, t: u32, len: usize) -> Result<Window> {
    let r = window_range(t, len, d.minutes())?;
    Ok(Window {
        end_minute: t,
        channels: d.channels.clone().map(|c| c[r.clone()].to_vec()),
    })
}

pub fn slice_discrete_window(d: &DiscreteSeries, t: u32, len: usize) -> Result<DiscreteWindow> {
    let r = window_range(t, len, d.minutes())?;
    Ok(DiscreteWindow {
        end_minute: t,
        channels: d.channels.clone().map(|c| c[r.clone()].to_vec()),
    })
}

/// Training window end minutes for a series: every `t` in `len..=T`.
pub fn window_ends(last_minute: u32, len: usize) -> std::ops::RangeInclusive<u32> {
    len as u32..=last_minute
}

pub fn write_diff_csv<W: Write>(mut w: W, d: &DiffSeries) -> std::io::Result<()> {
    writeln!(w, "minute,gold_diff,xp_diff,deaths_diff")?;
    for t in 0..=d.minutes() as usize {
        writeln!(
            w,
            "{t},{},{},{}",
            d.channel(Channel::Gold)[t],
            d.channel(Channel::Experience)[t],
            d.channel(Channel::Deaths)[t]
        )?;
    }
    Ok(())
}
