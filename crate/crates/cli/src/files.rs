//! On-disk formats owned by the command-line tool.

use std::collections::HashMap;
use std::path::Path;

use arn_core::data::Scaling;
use arn_core::model::{NetWeights, NetworkConfig};
use arn_core::tensor::Tensor;
use arn_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const MODEL_FORMAT: &str = "arn-model";
pub const MODEL_VERSION: u32 = 1;
pub const PREDICTIONS_HEADER: &str = "# arn-predictions 1";

/// Everything needed to rebuild and evaluate a trained network.
#[derive(Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub neuron: String,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub split_seed: u64,
    pub scaling: Scaling,
    pub val_loss: f64,
    pub examples: usize,
    pub weights: NetWeights,
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

pub fn load_model(dir: &Path) -> Result<SavedModel, Failure> {
    let text = read_text(&dir.join("model.json"))?;
    let m: SavedModel = serde_json::from_str(&text).map_err(|e| Failure::Data(format!("model.json: {e}")))?;
    if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
        return Err(Failure::Data(format!("unsupported model format {} v{}", m.format, m.version)));
    }
    Ok(m)
}

/// Per-series prediction rows: `series_id,t,p0..`.
pub fn write_predictions(path: &Path, rows: &[(String, Tensor, usize)]) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::Data(format!("{}: {e}", path.display()));
    let width = rows.first().map_or(0, |r| r.1.cols());
    let mut out = Vec::new();
    out.extend_from_slice(PREDICTIONS_HEADER.as_bytes());
    out.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let mut head = vec!["series_id".to_owned(), "t".to_owned()];
        head.extend((0..width).map(|k| format!("p{k}")));
        w.write_record(&head).map_err(io)?;
        for (id, p, t0) in rows {
            for r in 0..p.rows() {
                let mut rec = vec![id.clone(), (t0 + r).to_string()];
                rec.extend(p.row(r).iter().map(|v| format!("{v:?}")));
                w.write_record(&rec).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    }
    std::fs::write(path, out).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Reads a predictions file into `series_id -> rows ordered by t`.
pub fn read_predictions(path: &Path) -> Result<HashMap<String, Vec<Vec<f64>>>, Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let mut rows: HashMap<String, Vec<(usize, Vec<f64>)>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = || Failure::Data(format!("{}: line {line}: malformed prediction row", path.display()));
        let t: usize = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let vals = rec.iter().skip(2).map(|s| s.parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?;
        rows.entry(rec[0].to_owned()).or_default().push((t, vals));
    }
    Ok(rows
        .into_iter()
        .map(|(id, mut v)| {
            v.sort_by_key(|(t, _)| *t);
            (id, v.into_iter().map(|(_, p)| p).collect())
        })
        .collect())
}
