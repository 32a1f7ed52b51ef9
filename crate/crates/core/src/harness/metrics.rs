use std::path::Path;

use super::HarnessError;
use crate::drqn::{EpisodeMetrics, TrainingMetrics};

/// Column order of metrics files.
pub const METRICS_HEADER: [&str; 4] = ["episode", "cumulative_reward", "mean_loss", "epsilon"];

/// Comma-separated metrics, one row per episode. Floats use the shortest
/// representation that parses back to the same value; missing losses are `NaN`.
pub fn metrics_to_csv(metrics: &TrainingMetrics) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER)
        .and_then(|_| {
            metrics.episodes.iter().try_for_each(|m| {
                w.write_record([
                    m.episode.to_string(),
                    m.cumulative_reward.to_string(),
                    m.mean_loss.to_string(),
                    m.epsilon.to_string(),
                ])
            })
        })
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ASCII output"))
}

pub fn metrics_from_csv(text: &str, origin: &Path) -> Result<TrainingMetrics, HarnessError> {
    let parse_error = |line: u64, message: String| HarnessError::Parse {
        path: origin.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| parse_error(1, e.to_string()))?;
    if header.iter().ne(METRICS_HEADER) {
        return Err(parse_error(1, format!("expected header {}", METRICS_HEADER.join(","))));
    }
    let mut episodes = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| -> Result<f64, HarnessError> {
            record[k]
                .parse::<f64>()
                .map_err(|e| parse_error(line, format!("{}: {e}", METRICS_HEADER[k])))
        };
        let episode = record[0]
            .parse::<usize>()
            .map_err(|e| parse_error(line, format!("episode: {e}")))?;
        episodes.push(EpisodeMetrics {
            episode,
            cumulative_reward: field(1)?,
            mean_loss: field(2)?,
            epsilon: field(3)?,
        });
    }
    Ok(TrainingMetrics {
        episodes,
        wall_clock_secs: 0.0,
    })
}

pub fn write_metrics(metrics: &TrainingMetrics, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, metrics_to_csv(metrics)?).map_err(HarnessError::io(path))
}

pub fn read_metrics(path: &Path) -> Result<TrainingMetrics, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
    metrics_from_csv(&text, path)
}
