//! Evaluation metrics and result files.

use serde::Serialize;

use crate::error::Result;

pub const CSV_HEADER: &str =
    "episode,mean_return,return_variance,return_gd,optimal_risk_rate,noisy_visit_rate";

/// One evaluation row.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MetricsRow {
    /// Cumulative training episodes when the evaluation ran.
    pub episode_count: usize,
    pub mean_return: f64,
    pub return_variance: f64,
    pub return_gd: f64,
    pub optimal_risk_rate: f64,
    pub noisy_visit_rate: f64,
}

impl MetricsRow {
    fn to_csv_line(self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.episode_count,
            self.mean_return,
            self.return_variance,
            self.return_gd,
            self.optimal_risk_rate,
            self.noisy_visit_rate
        )
    }
}

/// All evaluation rows of one run, in recording order.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunMetrics {
    pub rows: Vec<MetricsRow>,
}

impl RunMetrics {
    pub fn push(&mut self, row: MetricsRow) {
        debug_assert!(row.return_variance >= 0.0 && row.return_gd >= 0.0);
        debug_assert!((0.0..=1.0).contains(&row.optimal_risk_rate));
        debug_assert!((0.0..=1.0).contains(&row.noisy_visit_rate));
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv_line());
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Mean of `optimal_risk_rate` over the last `window` rows.
    pub fn final_optimal_risk_rate(&self, window: usize) -> f64 {
        mean_of_tail(&self.rows, window, |r| r.optimal_risk_rate)
    }

    /// Mean of `noisy_visit_rate` over the last `window` rows.
    pub fn final_noisy_visit_rate(&self, window: usize) -> f64 {
        mean_of_tail(&self.rows, window, |r| r.noisy_visit_rate)
    }

    /// Mean of `mean_return` over the last `window` rows.
    pub fn final_mean_return(&self, window: usize) -> f64 {
        mean_of_tail(&self.rows, window, |r| r.mean_return)
    }
}

fn mean_of_tail(rows: &[MetricsRow], window: usize, f: impl Fn(&MetricsRow) -> f64) -> f64 {
    if rows.is_empty() {
        return f64::NAN;
    }
    let start = rows.len().saturating_sub(window.max(1));
    let tail = &rows[start..];
    tail.iter().map(f).sum::<f64>() / tail.len() as f64
}

/// Metadata written next to the metrics CSV.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub config: C,
    pub seed: u64,
    pub build_id: String,
    pub config_hash: String,
    pub wall_time_secs: f64,
    pub training_episodes: usize,
}

/// FNV-1a over bytes; stable across platforms, used for config hashes.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

pub fn build_id() -> String {
    format!("gini-rl-{}", env!("CARGO_PKG_VERSION"))
}
