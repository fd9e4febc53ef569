use std::fmt::Write as _;

use crate::ensemble::Ensemble;
use crate::real::Real;

pub const DIAGNOSTICS_HEADER: &str =
    "iter,sigma2,theta,mean_depth,total_leaves,grow_accept_rate,prune_accept_rate,axis_aligned_rule_fraction";

/// Grow/prune proposal and acceptance counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveCounts {
    pub grow_proposed: usize,
    pub grow_accepted: usize,
    pub prune_proposed: usize,
    pub prune_accepted: usize,
}

impl MoveCounts {
    pub fn add(&mut self, other: &MoveCounts) {
        self.grow_proposed += other.grow_proposed;
        self.grow_accepted += other.grow_accepted;
        self.prune_proposed += other.prune_proposed;
        self.prune_accepted += other.prune_accepted;
    }

    pub fn grow_rate(&self) -> f64 {
        rate(self.grow_accepted, self.grow_proposed)
    }

    pub fn prune_rate(&self) -> f64 {
        rate(self.prune_accepted, self.prune_proposed)
    }
}

fn rate(accepted: usize, proposed: usize) -> f64 {
    if proposed == 0 {
        f64::NAN
    } else {
        accepted as f64 / proposed as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub sigma2: f64,
    pub theta: f64,
    /// Mean over trees of the deepest leaf depth.
    pub mean_depth: f64,
    pub total_leaves: usize,
    pub moves: MoveCounts,
    /// `None` when the ensemble holds no continuous rules.
    pub axis_aligned_fraction: Option<f64>,
}

impl IterationRecord {
    pub fn snapshot<T: Real>(iter: usize, ensemble: &Ensemble<T>, moves: MoveCounts) -> Self {
        let m = ensemble.trees.len().max(1) as f64;
        Self {
            iter,
            sigma2: ensemble.sigma2.as_f64(),
            theta: ensemble.theta.as_f64(),
            mean_depth: ensemble.trees.iter().map(|t| t.height() as f64).sum::<f64>() / m,
            total_leaves: ensemble.trees.iter().map(|t| t.nleaf()).sum(),
            moves,
            axis_aligned_fraction: ensemble.axis_aligned_fraction(),
        }
    }

    fn csv_row(&self) -> String {
        let mut row = String::new();
        let _ = write!(
            row,
            "{},{},{},{},{},{},{},",
            self.iter,
            self.sigma2,
            self.theta,
            self.mean_depth,
            self.total_leaves,
            self.moves.grow_rate(),
            self.moves.prune_rate()
        );
        match self.axis_aligned_fraction {
            Some(f) => {
                let _ = write!(row, "{f}");
            }
            None => row.push_str("NaN"),
        }
        row
    }
}

/// Per-iteration trace of one chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainDiagnostics {
    pub records: Vec<IterationRecord>,
    /// Iterations before this index are burn-in.
    pub burn: usize,
}

impl ChainDiagnostics {
    pub fn kept(&self) -> &[IterationRecord] {
        &self.records[self.burn.min(self.records.len())..]
    }

    pub fn totals(&self) -> MoveCounts {
        let mut total = MoveCounts::default();
        for r in &self.records {
            total.add(&r.moves);
        }
        total
    }

    /// Mean axis-aligned fraction over kept iterations that have continuous rules.
    pub fn mean_axis_aligned_fraction(&self) -> Option<f64> {
        let vals: Vec<f64> = self.kept().iter().filter_map(|r| r.axis_aligned_fraction).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn mean_sigma2(&self) -> f64 {
        let kept = self.kept();
        kept.iter().map(|r| r.sigma2).sum::<f64>() / kept.len().max(1) as f64
    }

    /// Kept iterations as CSV, one row per iteration, with a `chain` column
    /// prepended when `chain` is given.
    pub fn write_csv(&self, out: &mut String, chain: Option<usize>) {
        for r in self.kept() {
            if let Some(c) = chain {
                let _ = write!(out, "{c},");
            }
            out.push_str(&r.csv_row());
            out.push('\n');
        }
    }
}

/// CSV for a set of chains with a leading `chain` column.
pub fn diagnostics_csv(chains: &[ChainDiagnostics]) -> String {
    let mut out = format!("chain,{DIAGNOSTICS_HEADER}\n");
    for (k, chain) in chains.iter().enumerate() {
        chain.write_csv(&mut out, Some(k));
    }
    out
}
