//! Attribute sequence model: one bigram transition matrix per channel and outcome over
//! discretized difference series, combined with an outcome prior by Bayes' rule.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifiers::sigmoid;
use crate::error::{Error, Result};
use crate::realtime::{BinEdges, Channel, DiscreteSeries, DiscreteWindow};

pub const ASM_FORMAT: &str = "winpred-asm";
pub const ASM_VERSION: u32 = 1;
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Raw transition counts, indexed `[channel][outcome][from * n_bins + to]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCounts {
    n_bins: usize,
    counts: [[Vec<u64>; 2]; 3],
    outcomes: [u64; 2],
}

impl TransitionCounts {
    pub fn new(n_bins: usize) -> Self {
        let table = || vec![0u64; n_bins * n_bins];
        TransitionCounts {
            n_bins,
            counts: [[table(), table()], [table(), table()], [table(), table()]],
            outcomes: [0, 0],
        }
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Adds every consecutive minute pair of one match's series.
    pub fn add_series(&mut self, s: &DiscreteSeries, radiant_won: bool) -> Result<()> {
        if s.channels.iter().any(|c| c.len() < 2) {
            return Err(Error::InvalidData(format!(
                "series of match {} has fewer than two minutes",
                s.match_id
            )));
        }
        if s.channels.iter().flatten().any(|&b| b >= self.n_bins) {
            return Err(Error::InvalidData(format!(
                "series of match {} has a bin outside 0..{}",
                s.match_id, self.n_bins
            )));
        }
        let y = radiant_won as usize;
        self.outcomes[y] += 1;
        for (c, bins) in s.channels.iter().enumerate() {
            let table = &mut self.counts[c][y];
            for pair in bins.windows(2) {
                table[pair[0] * self.n_bins + pair[1]] += 1;
            }
        }
        Ok(())
    }

    pub fn count(&self, c: Channel, radiant_won: bool, from: usize, to: usize) -> u64 {
        self.counts[c.index()][radiant_won as usize][from * self.n_bins + to]
    }

    pub fn matches(&self, radiant_won: bool) -> u64 {
        self.outcomes[radiant_won as usize]
    }

    /// Adds another table's counts; merging is associative and commutative.
    pub fn merge(&mut self, other: &TransitionCounts) {
        assert_eq!(self.n_bins, other.n_bins, "bin counts differ");
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.outcomes[0] += other.outcomes[0];
        self.outcomes[1] += other.outcomes[1];
    }
}

/// Fitted model. `matrices[c][y][i][j]` is `P(next = j | prev = i, Y = y)` for channel `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    pub n_bins: usize,
    pub alpha: f64,
    /// `P(Radiant wins)`.
    pub prior: f64,
    pub edges: BinEdges,
    pub matrices: [[Vec<Vec<f64>>; 2]; 3],
}

#[derive(Serialize, Deserialize)]
struct AsmFile {
    format: String,
    version: u32,
    model: TransitionModel,
}

impl TransitionModel {
    /// Smoothed maximum-likelihood estimates from counts. A row with no observations
    /// under `alpha = 0` is left uniform.
    pub fn from_counts(counts: &TransitionCounts, edges: BinEdges, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("smoothing must be nonnegative, got {alpha}")));
        }
        let n_matches = counts.outcomes[0] + counts.outcomes[1];
        if n_matches == 0 {
            return Err(Error::InvalidArgument("no training series for the sequence model".into()));
        }
        if edges.n_bins != counts.n_bins {
            return Err(Error::DimensionMismatch {
                expected: counts.n_bins,
                actual: edges.n_bins,
            });
        }
        let k = counts.n_bins;
        let matrices = counts.counts.each_ref().map(|per_y| {
            per_y.each_ref().map(|table| {
                (0..k)
                    .map(|i| {
                        let row = &table[i * k..(i + 1) * k];
                        let total = row.iter().sum::<u64>() as f64 + k as f64 * alpha;
                        if total == 0.0 {
                            vec![1.0 / k as f64; k]
                        } else {
                            row.iter().map(|&n| (n as f64 + alpha) / total).collect()
                        }
                    })
                    .collect()
            })
        });
        let prior = (counts.outcomes[1] as f64 + alpha) / (n_matches as f64 + 2.0 * alpha);
        Ok(TransitionModel {
            n_bins: k,
            alpha,
            prior,
            edges,
            matrices,
        })
    }

    /// A model from explicit matrices, checked for shape and row-stochasticity.
    pub fn from_matrices(prior: f64, edges: BinEdges, matrices: [[Vec<Vec<f64>>; 2]; 3]) -> Result<Self> {
        let k = edges.n_bins;
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::InvalidArgument(format!("prior must lie in (0, 1), got {prior}")));
        }
        for m in matrices.iter().flatten() {
            if m.len() != k || m.iter().any(|r| r.len() != k) {
                return Err(Error::InvalidData(format!("transition matrices must be {k}x{k}")));
            }
            for row in m {
                if row.iter().any(|p| !(*p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidData("transition rows must be probability vectors".into()));
                }
            }
        }
        Ok(TransitionModel {
            n_bins: k,
            alpha: 0.0,
            prior,
            edges,
            matrices,
        })
    }

    pub fn probability(&self, c: Channel, radiant_won: bool, from: usize, to: usize) -> f64 {
        self.matrices[c.index()][radiant_won as usize][from][to]
    }

    /// Sum of log transition probabilities over every within-window step of every channel.
    /// The first value of each channel is conditioned on, not scored.
    pub fn window_log_likelihood(&self, w: &DiscreteWindow, radiant_won: bool) -> f64 {
        let y = radiant_won as usize;
        let mut ll = 0.0;
        for (c, bins) in w.channels.iter().enumerate() {
            let m = &self.matrices[c][y];
            for pair in bins.windows(2) {
                ll += m[pair[0]][pair[1]].ln();
            }
        }
        ll
    }

    /// `P(Radiant wins | window)`. When neither outcome can produce the window the prior is returned.
    pub fn posterior(&self, w: &DiscreteWindow) -> f64 {
        let a = self.prior.ln() + self.window_log_likelihood(w, true);
        let b = (1.0 - self.prior).ln() + self.window_log_likelihood(w, false);
        if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
            return self.prior;
        }
        sigmoid(a - b)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = AsmFile {
            format: ASM_FORMAT.into(),
            version: ASM_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::InvalidData(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: AsmFile =
            serde_json::from_str(s).map_err(|e| Error::InvalidData(format!("sequence model file: {e}")))?;
        if file.format != ASM_FORMAT || file.version != ASM_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported sequence model format {} v{}",
                file.format, file.version
            )));
        }
        Ok(file.model)
    }

    /// Long-format heatmap data: one row per matrix entry.
    pub fn write_heatmap_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "channel,outcome,from_bin,to_bin,probability")?;
        for c in Channel::ALL {
            for y in [false, true] {
                for (i, row) in self.matrices[c.index()][y as usize].iter().enumerate() {
                    for (j, p) in row.iter().enumerate() {
                        writeln!(w, "{},{},{i},{j},{p}", c.name(), y as u8)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Counts every training series and normalizes with add-`alpha` smoothing.
pub fn fit_asm<'a>(
    series: impl IntoIterator<Item = (&'a DiscreteSeries, bool)>,
    edges: BinEdges,
    alpha: f64,
) -> Result<TransitionModel> {
    let mut counts = TransitionCounts::new(edges.n_bins);
    for (s, y) in series {
        counts.add_series(s, y)?;
    }
    TransitionModel::from_counts(&counts, edges, alpha)
}
