use std::io::Write;
use std::path::Path;

use super::{Action, CollisionAvoidanceEnv, EnvError, Observation, RewardBreakdown, StepOutcome};
use crate::State;

/// One line of an episode trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub protected: State,
    pub debris: Vec<State>,
    pub observation: Observation,
    /// `None` for the row written at reset.
    pub action: Option<Action>,
    pub reward: RewardBreakdown,
    pub done: bool,
}

/// Step-by-step record of an episode, exportable as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeTrace {
    pub rows: Vec<TraceRow>,
}

impl EpisodeTrace {
    pub fn new() -> Self {
        Self::default()
    }

    fn snapshot(
        env: &CollisionAvoidanceEnv,
        observation: &Observation,
        action: Option<Action>,
        reward: RewardBreakdown,
        done: bool,
    ) -> Result<TraceRow, EnvError> {
        let state = env.state().ok_or(EnvError::NotReset)?;
        Ok(TraceRow {
            step: state.step_index,
            time: state.time,
            protected: state.protected_state()?,
            debris: state.debris_states()?,
            observation: observation.clone(),
            action,
            reward,
            done,
        })
    }

    pub fn record_reset(&mut self, env: &CollisionAvoidanceEnv, observation: &Observation) -> Result<(), EnvError> {
        let row = Self::snapshot(env, observation, None, RewardBreakdown::default(), false)?;
        self.rows.push(row);
        Ok(())
    }

    pub fn record_step(
        &mut self,
        env: &CollisionAvoidanceEnv,
        action: Action,
        outcome: &StepOutcome,
    ) -> Result<(), EnvError> {
        let row = Self::snapshot(env, &outcome.observation, Some(action), outcome.reward, outcome.done)?;
        self.rows.push(row);
        Ok(())
    }

    fn header(n_debris: usize) -> Vec<String> {
        let mut cols: Vec<String> = vec!["step".into(), "time".into()];
        let vec_cols = |prefix: &str| -> Vec<String> {
            ["x", "y", "z", "dx", "dy", "dz"]
                .iter()
                .map(|c| format!("{prefix}_{c}"))
                .collect()
        };
        cols.extend(vec_cols("true_protected"));
        for k in 0..n_debris {
            cols.extend(vec_cols(&format!("true_debris{k}")));
        }
        cols.extend(vec_cols("obs_protected"));
        for k in 0..n_debris {
            cols.extend(vec_cols(&format!("obs_debris{k}")));
        }
        cols.extend(
            [
                "fuel_fraction",
                "time_fraction",
                "action",
                "collision_penalty",
                "fuel_penalty",
                "deviation_penalty",
                "reward_total",
                "done",
            ]
            .map(String::from),
        );
        cols
    }

    /// Writes the trace as comma-separated text with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EnvError> {
        let io = |e: csv::Error| EnvError::Io(e.to_string());
        let n_debris = self.rows.first().map_or(0, |r| r.debris.len());
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(Self::header(n_debris)).map_err(io)?;
        for row in &self.rows {
            let mut rec: Vec<String> = vec![row.step.to_string(), row.time.to_string()];
            let mut push_state = |p: &crate::Vector3, v: &crate::Vector3| {
                rec.extend(p.0.iter().chain(v.0.iter()).map(|c| c.to_string()));
            };
            push_state(&row.protected.position, &row.protected.velocity);
            for d in &row.debris {
                push_state(&d.position, &d.velocity);
            }
            let obs = &row.observation;
            push_state(&obs.protected_pos, &obs.protected_vel);
            for (p, v) in obs.debris_pos.iter().zip(&obs.debris_vel) {
                push_state(p, v);
            }
            rec.push(obs.fuel_fraction.to_string());
            rec.push(obs.time_fraction.to_string());
            rec.push(row.action.map_or(String::new(), |a| a.index().to_string()));
            rec.push(row.reward.collision_penalty.to_string());
            rec.push(row.reward.fuel_penalty.to_string());
            rec.push(row.reward.deviation_penalty.to_string());
            rec.push(row.reward.total.to_string());
            rec.push(u8::from(row.done).to_string());
            out.write_record(&rec).map_err(io)?;
        }
        out.flush().map_err(|e| EnvError::Io(e.to_string()))
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), EnvError> {
        let file = std::fs::File::create(path).map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
