//! Access-controlled views of training and evaluation matches.
//!
//! Every fitting routine reads matches and replays only through [`TrainingData`], so an
//! attached [`AccessLog`] records exactly which match ids influenced a fit.

use std::collections::BTreeSet;
use std::sync::Mutex;

use crate::data::{Dataset, HeroCatalog, MatchRecord, ProfileMap};
use crate::error::Result;
use crate::realtime::{compute_diff_series, DiffSeries};

/// Set of match ids read while fitting.
#[derive(Debug, Default)]
pub struct AccessLog(Mutex<BTreeSet<String>>);

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, match_id: &str) {
        let mut set = self.0.lock().expect("access log poisoned");
        if !set.contains(match_id) {
            set.insert(match_id.to_string());
        }
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.0.lock().expect("access log poisoned").clone()
    }
}

/// What prior feature extraction needs besides the match itself.
#[derive(Debug, Clone, Copy)]
pub struct FeatureEnv<'a> {
    pub catalog: &'a HeroCatalog,
    pub profiles: &'a ProfileMap,
}

impl<'a> From<&'a Dataset> for FeatureEnv<'a> {
    fn from(d: &'a Dataset) -> Self {
        FeatureEnv {
            catalog: &d.catalog,
            profiles: &d.profiles,
        }
    }
}

/// A match together with its difference series when a replay exists.
#[derive(Debug, Clone)]
pub struct MatchContext<'a> {
    pub record: &'a MatchRecord,
    pub series: Option<DiffSeries>,
}

impl<'a> MatchContext<'a> {
    pub fn new(d: &'a Dataset, record: &'a MatchRecord) -> Result<Self> {
        let series = match d.replay(&record.match_id) {
            Some(r) => Some(compute_diff_series(r, record)?),
            None => None,
        };
        Ok(MatchContext { record, series })
    }

    /// Whether the replay covers minute `t`, so a window ending at `t` exists and the
    /// match counts for real-time evaluation at `t`.
    pub fn live_at(&self, t: u32) -> bool {
        self.record.duration_min >= t && self.series.as_ref().is_some_and(|s| s.minutes() >= t)
    }
}

/// Contexts for every match of a dataset, in dataset order.
pub fn contexts(d: &Dataset) -> Result<Vec<MatchContext<'_>>> {
    d.matches.iter().map(|m| MatchContext::new(d, m)).collect()
}

/// Training matches with their series, read through an optional access log.
#[derive(Clone)]
pub struct TrainingData<'a> {
    pub catalog: &'a HeroCatalog,
    pub profiles: &'a ProfileMap,
    items: Vec<(&'a MatchRecord, Option<&'a DiffSeries>)>,
    log: Option<&'a AccessLog>,
    extra_log: Option<&'a AccessLog>,
}

/// Owned series backing a [`TrainingData`].
pub struct SeriesStore<'a> {
    dataset: &'a Dataset,
    contexts: Vec<MatchContext<'a>>,
}

impl<'a> SeriesStore<'a> {
    pub fn new(d: &'a Dataset) -> Result<Self> {
        Ok(SeriesStore {
            dataset: d,
            contexts: contexts(d)?,
        })
    }

    pub fn contexts(&self) -> &[MatchContext<'a>] {
        &self.contexts
    }

    pub fn training<'s>(&'s self, log: Option<&'s AccessLog>) -> TrainingData<'s> {
        TrainingData {
            catalog: &self.dataset.catalog,
            profiles: &self.dataset.profiles,
            items: self.contexts.iter().map(|c| (c.record, c.series.as_ref())).collect(),
            log,
            extra_log: None,
        }
    }
}

impl<'a> TrainingData<'a> {
    pub fn from_parts(
        catalog: &'a HeroCatalog,
        profiles: &'a ProfileMap,
        items: Vec<(&'a MatchRecord, Option<&'a DiffSeries>)>,
        log: Option<&'a AccessLog>,
    ) -> Self {
        TrainingData {
            catalog,
            profiles,
            items,
            log,
            extra_log: None,
        }
    }

    pub fn env(&self) -> FeatureEnv<'a> {
        FeatureEnv {
            catalog: self.catalog,
            profiles: self.profiles,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn touch(&self, m: &MatchRecord) {
        for log in [self.log, self.extra_log].into_iter().flatten() {
            log.record(&m.match_id);
        }
    }

    /// Every training match.
    pub fn matches(&self) -> impl Iterator<Item = &'a MatchRecord> + Clone + '_ {
        self.items.iter().map(move |(m, _)| {
            self.touch(m);
            *m
        })
    }

    /// Training matches that have a series.
    pub fn replays(&self) -> impl Iterator<Item = (&'a MatchRecord, &'a DiffSeries)> + Clone + '_ {
        self.items.iter().filter_map(move |(m, s)| {
            let s = (*s)?;
            self.touch(m);
            Some((*m, s))
        })
    }

    pub fn replay_count(&self) -> usize {
        self.items.iter().filter(|(_, s)| s.is_some()).count()
    }

    /// Match ids without logging, for fold bookkeeping.
    pub fn ids(&self) -> impl Iterator<Item = &'a str> + '_ {
        self.items.iter().map(|(m, _)| m.match_id.as_str())
    }

    /// The rows at `idx`, sharing the log.
    pub fn subset(&self, idx: &[usize]) -> TrainingData<'a> {
        TrainingData {
            catalog: self.catalog,
            profiles: self.profiles,
            items: idx.iter().map(|&i| self.items[i]).collect(),
            log: self.log,
            extra_log: self.extra_log,
        }
    }

    /// The rows at `idx`, additionally recording accesses in `extra`.
    pub fn subset_logged<'b>(&self, idx: &[usize], extra: &'b AccessLog) -> TrainingData<'b>
    where
        'a: 'b,
    {
        TrainingData {
            catalog: self.catalog,
            profiles: self.profiles,
            items: idx.iter().map(|&i| self.items[i]).collect(),
            log: self.log,
            extra_log: Some(extra),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::{dataset, simple_match};
    use crate::data::TeamSide;

    #[test]
    fn log_records_only_iterated_matches() {
        let d = dataset(vec![
            simple_match("a", TeamSide::Radiant),
            simple_match("b", TeamSide::Dire),
            simple_match("c", TeamSide::Dire),
        ]);
        let store = SeriesStore::new(&d).unwrap();
        let log = AccessLog::new();
        let t = store.training(Some(&log));
        let sub = t.subset(&[0, 2]);
        assert_eq!(sub.matches().count(), 2);
        assert_eq!(sub.replays().count(), 0);
        let ids: Vec<String> = log.ids().into_iter().collect();
        assert_eq!(ids, ["a", "c"]);
    }
}
