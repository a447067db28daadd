//! One-factor-at-a-time hyperparameter sweep over the joint stack.

use std::fmt::Write as _;
use std::io::Write;

use super::commands::{load_training_data, train_joint, write_file, TrainOutcome};
use super::config::{PipelineConfig, SweepAxis};
use crate::error::Result;

pub const SWEEP_CSV_HEADER: &str = "axis,value,val_rms,train_rms,seconds\n";

/// Effective config of leg `leg`: the base config with the axis set to
/// `value` and the seed replaced by `seed ^ leg`.
pub fn leg_config(base: &PipelineConfig, axis: SweepAxis, value: usize, leg: usize) -> PipelineConfig {
    let mut cfg = base.clone();
    cfg.seed = base.seed ^ leg as u64;
    match axis {
        SweepAxis::Depth => {
            let width = base.layer_sizes[0];
            cfg.layer_sizes = vec![width; value];
        }
        SweepAxis::HiddenUnits => cfg.layer_sizes = vec![value; base.layer_sizes.len()],
        SweepAxis::BatchSize => cfg.train.batch_size = value,
        SweepAxis::Epochs => cfg.train.epochs = value,
    }
    cfg
}

#[derive(Debug)]
pub struct SweepRow {
    pub value: usize,
    pub outcome: std::result::Result<TrainOutcome, String>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        for r in &self.rows {
            let _ = match &r.outcome {
                Ok(o) => writeln!(
                    out,
                    "{},{},{},{},{:.3}",
                    self.axis.name(),
                    r.value,
                    o.val_rms.map(|v| v.to_string()).unwrap_or_default(),
                    o.train_rms,
                    o.seconds
                ),
                Err(_) => writeln!(out, "{},{},FAILED,FAILED,", self.axis.name(), r.value),
            };
        }
        out
    }
}

/// Trains one stack per grid value on a shared dataset, in grid order. A
/// failing leg is recorded and the sweep moves on. Writes
/// `sweep_<axis>.csv` and one `sweep/<axis>_<value>.conf` per leg.
pub fn cmd_sweep(cfg: &PipelineConfig, progress: &mut dyn Write) -> Result<SweepResult> {
    let axis = cfg.sweep.axis;
    let data = load_training_data(cfg)?;
    let mut rows = Vec::with_capacity(cfg.sweep.values.len());
    for (leg, &value) in cfg.sweep.values.iter().enumerate() {
        let leg_cfg = leg_config(cfg, axis, value, leg);
        write_file(
            &cfg.paths.out.join("sweep").join(format!("{}_{value}.conf", axis.name())),
            leg_cfg.to_text(),
        )?;
        let _ = writeln!(progress, "phase=sweep axis={} value={value}", axis.name());
        let outcome = leg_cfg
            .validate()
            .and_then(|_| train_joint(&leg_cfg, &data, progress))
            .map_err(|e| e.to_string());
        if let Err(msg) = &outcome {
            let _ = writeln!(progress, "phase=sweep axis={} value={value} FAILED: {msg}", axis.name());
        }
        rows.push(SweepRow { value, outcome });
    }
    let result = SweepResult { axis, rows };
    write_file(&cfg.paths.out.join(format!("sweep_{}.csv", axis.name())), result.to_csv())?;
    super::commands::echo_config(cfg, "sweep")?;
    Ok(result)
}
