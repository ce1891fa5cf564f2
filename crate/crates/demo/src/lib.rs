//! Browser demo: synthetic matches, per-minute predictions and the transition heatmap.
//!
//! Each export takes a JSON object of [`DemoParams`] and returns JSON. The same
//! functions are callable natively for tests.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use winpred_core::data::{split_dataset, Dataset, TeamSide};
use winpred_core::ensemble::{AsmPredictor, ModelConfig};
use winpred_core::evaluation::{minute_curve, MinuteCurve};
use winpred_core::model::{Model, ModelTag};
use winpred_core::realtime::Channel;
use winpred_core::synth::{generate_dataset, SynthConfig};
use winpred_core::training::{contexts, FeatureEnv, SeriesStore};
use winpred_core::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoParams {
    pub n_matches: usize,
    pub seed: u64,
    pub drift: f64,
    pub noise: f64,
    pub early_drift_factor: f64,
    pub bins: usize,
    pub window: usize,
    pub epochs: usize,
    /// Which held-out match to trace.
    pub match_index: usize,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams {
            n_matches: 400,
            seed: 0,
            drift: 0.15,
            noise: 1.0,
            early_drift_factor: 1.0,
            bins: 8,
            window: 5,
            epochs: 100,
            match_index: 0,
        }
    }
}

impl DemoParams {
    fn synth(&self) -> SynthConfig {
        SynthConfig {
            n_matches: self.n_matches,
            player_count: (self.n_matches / 2).max(100),
            seed: self.seed,
            realtime_drift_scale: self.drift,
            realtime_noise_scale: self.noise,
            early_drift_factor: self.early_drift_factor,
            replay_fraction: 1.0,
            ..SynthConfig::default()
        }
    }

    fn model(&self) -> ModelConfig {
        let mut cfg = ModelConfig::default();
        cfg.train.max_epochs = self.epochs;
        cfg.train.seed = self.seed;
        cfg.n_bins = self.bins;
        cfg.window = self.window;
        cfg.min_windows = 5;
        cfg
    }
}

fn parse(params: &str) -> Result<DemoParams, String> {
    if params.trim().is_empty() {
        return Ok(DemoParams::default());
    }
    serde_json::from_str(params).map_err(|e| format!("bad parameters: {e}"))
}

fn text(e: Error) -> String {
    e.to_string()
}

fn split(p: &DemoParams) -> Result<(Dataset, Dataset), String> {
    let (d, _) = generate_dataset(&p.synth()).map_err(text)?;
    split_dataset(&d, 0.2, p.seed).map_err(text)
}

#[derive(Debug, Serialize)]
pub struct TrajectoryView {
    pub match_id: String,
    pub radiant_won: bool,
    pub duration: u32,
    /// (model, [(minute, p_radiant)])
    pub series: Vec<(String, Vec<(u32, f64)>)>,
    /// Gold difference per minute, Radiant minus Dire.
    pub gold_diff: Vec<f64>,
}

/// Predictions of the prior, sequence and combined models over one held-out match.
pub fn trajectory(params: &str) -> Result<String, String> {
    let p = parse(params)?;
    let (tr, te) = split(&p)?;
    let store = SeriesStore::new(&tr).map_err(text)?;
    let train = store.training(None);
    let test = contexts(&te).map_err(text)?;
    let live: Vec<_> = test.iter().filter(|c| c.series.is_some()).collect();
    let ctx = live
        .get(p.match_index % live.len().max(1))
        .ok_or("no held-out match has a replay")?;
    let env = FeatureEnv::from(&te);
    let mut series = Vec::new();
    for tag in [ModelTag::Lr, ModelTag::Asm, ModelTag::Concat] {
        let (m, _) = Model::train(tag, &train, &p.model()).map_err(text)?;
        series.push((tag.name().to_string(), m.trajectory(ctx, env).map_err(text)?.points));
    }
    let view = TrajectoryView {
        match_id: ctx.record.match_id.clone(),
        radiant_won: ctx.record.winner == TeamSide::Radiant,
        duration: ctx.record.duration_min,
        series,
        gold_diff: ctx.series.as_ref().map(|s| s.channel(Channel::Gold).to_vec()).unwrap_or_default(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Held-out accuracy by minute for the prior, sequence and combined models.
pub fn accuracy_curve(params: &str) -> Result<String, String> {
    let p = parse(params)?;
    let (tr, te) = split(&p)?;
    let store = SeriesStore::new(&tr).map_err(text)?;
    let train = store.training(None);
    let test = contexts(&te).map_err(text)?;
    let models = [ModelTag::Lr, ModelTag::Asm, ModelTag::Concat]
        .into_iter()
        .map(|t| Model::train(t, &train, &p.model()).map(|m| m.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(text)?;
    let refs: Vec<&Model> = models.iter().collect();
    let minutes: Vec<u32> = (1..=9).map(|k| 5 * k).collect();
    let curve: MinuteCurve = minute_curve(&refs, &test, FeatureEnv::from(&te), &minutes).map_err(text)?;
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct HeatmapView {
    pub channel: String,
    pub radiant_won: bool,
    pub n_bins: usize,
    /// Bin edges of the channel, in difference units.
    pub edges: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

/// One fitted transition matrix. `channel` is `deaths`, `gold` or `xp`.
pub fn heatmap(params: &str, channel: &str, radiant_won: bool) -> Result<String, String> {
    let p = parse(params)?;
    let c = Channel::ALL
        .into_iter()
        .find(|c| c.name() == channel)
        .ok_or_else(|| format!("unknown channel {channel:?}"))?;
    let (tr, _) = split(&p)?;
    let store = SeriesStore::new(&tr).map_err(text)?;
    let asm = AsmPredictor::fit(&store.training(None), &p.model()).map_err(text)?;
    let view = HeatmapView {
        channel: c.name().to_string(),
        radiant_won,
        n_bins: asm.model.n_bins,
        edges: asm.model.edges.edges[c.index()].clone(),
        matrix: asm.model.matrices[c.index()][radiant_won as usize].clone(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = defaultParams)]
pub fn default_params() -> String {
    serde_json::to_string(&DemoParams::default()).expect("plain struct")
}

#[wasm_bindgen(js_name = trajectory)]
pub fn trajectory_js(params: &str) -> Result<String, JsError> {
    trajectory(params).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = accuracyCurve)]
pub fn accuracy_curve_js(params: &str) -> Result<String, JsError> {
    accuracy_curve(params).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = heatmap)]
pub fn heatmap_js(params: &str, channel: &str, radiant_won: bool) -> Result<String, JsError> {
    heatmap(params, channel, radiant_won).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const SMALL: &str = r#"{"n_matches": 200, "epochs": 30}"#;

    #[test]
    fn trajectory_covers_every_minute() {
        let v: Value = serde_json::from_str(&trajectory(SMALL).unwrap()).unwrap();
        let duration = v["duration"].as_u64().unwrap() as usize;
        let series = v["series"].as_array().unwrap();
        assert_eq!(series.len(), 3);
        for s in series {
            let pts = s[1].as_array().unwrap();
            assert_eq!(pts.len(), duration + 1);
            assert!(pts.iter().all(|p| (0.0..=1.0).contains(&p[1].as_f64().unwrap())));
        }
        assert_eq!(v["gold_diff"].as_array().unwrap().len(), duration + 1);
    }

    #[test]
    fn curve_has_three_models() {
        let v: Value = serde_json::from_str(&accuracy_curve(SMALL).unwrap()).unwrap();
        assert_eq!(v["series"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn heatmap_rows_are_distributions() {
        let v: Value = serde_json::from_str(&heatmap(SMALL, "gold", true).unwrap()).unwrap();
        let rows = v["matrix"].as_array().unwrap();
        assert_eq!(rows.len(), 8);
        for r in rows {
            let s: f64 = r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        assert!(heatmap(SMALL, "mana", true).is_err());
    }

    #[test]
    fn bad_parameters_are_reported() {
        assert!(trajectory("{not json").is_err());
        assert_eq!(parse("").unwrap(), DemoParams::default());
        let round: DemoParams = serde_json::from_str(&default_params()).unwrap();
        assert_eq!(round, DemoParams::default());
    }
}
