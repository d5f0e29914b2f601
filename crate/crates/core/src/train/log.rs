use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::StepStats;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRecord {
    pub step: usize,
    pub mode: String,
    pub mean_reward: Option<f64>,
    pub loss: f64,
    pub grad_norm: f64,
    pub wall_ms: u64,
}

/// JSON-lines step log; records are also kept in memory.
pub struct TrainLog {
    sink: Option<BufWriter<File>>,
    step: usize,
    last: Instant,
    pub records: Vec<LogRecord>,
}

impl Default for TrainLog {
    fn default() -> Self {
        Self::new()
    }
}

impl TrainLog {
    pub fn new() -> Self {
        Self {
            sink: None,
            step: 0,
            last: Instant::now(),
            records: Vec::new(),
        }
    }

    pub fn to_file(path: &Path) -> Result<Self> {
        let mut log = Self::new();
        log.sink = Some(BufWriter::new(File::create(path)?));
        Ok(log)
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn record(&mut self, mode: &str, stats: &StepStats) -> Result<()> {
        let now = Instant::now();
        let rec = LogRecord {
            step: self.step,
            mode: mode.to_string(),
            mean_reward: stats.mean_reward,
            loss: stats.loss,
            grad_norm: stats.grad_norm,
            wall_ms: now.duration_since(self.last).as_millis() as u64,
        };
        self.last = now;
        self.step += 1;
        if let Some(w) = &mut self.sink {
            serde_json::to_writer(&mut *w, &rec)?;
            w.write_all(b"\n")?;
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(w) = &mut self.sink {
            w.flush()?;
        }
        Ok(())
    }
}
