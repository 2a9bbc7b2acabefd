//! Adaptive bin-splitting policy.
//!
//! Bins start at a coarse initial length and are queried uniformly at
//! random inside their extent. A bin at depth `k` may absorb
//! `capacity(k, alpha)` queries; once full, its next selection splits it
//! into 2^d half-length children, the query is drawn from the parent's
//! extent and credited to the child containing it, and the parent retires
//! to an archive. Deep bins therefore appear exactly where the policy
//! keeps querying, concentrating resolution in low-loss regions.

use rand::Rng;

use crate::error::{Error, Result};
use crate::policy::{capacity, select_arm};
use crate::space::{locate_child, make_grid, sample_uniform, split_bin, Bin, DecisionSpace, Point};

/// Lower-confidence-bound search over a self-refining tiling.
#[derive(Debug, Clone)]
pub struct AdaptivePolicy {
    live: Vec<Bin>,
    /// Resolution bonus `mu * length^alpha` per live bin, fixed at creation.
    bias: Vec<f64>,
    /// Confidence bound per live bin, refreshed after every observation.
    lcb: Vec<f64>,
    archive: Vec<Bin>,
    rounds: u64,
    pending: Option<usize>,
    a0: f64,
    alpha: f64,
    mu: f64,
}

impl AdaptivePolicy {
    /// Tiles the space with initial bins of side `a0`.
    pub fn new(space: &DecisionSpace, a0: f64, alpha: f64, mu: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::config(
                "policy.adaptive.alpha",
                format!("alpha {alpha} must lie in (0, 2]"),
            ));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::config("policy.adaptive.mu", format!("mu {mu} must be positive")));
        }
        let live = make_grid(space, a0)?;
        let m = live.len();
        let bias = live.iter().map(|b| mu * b.length().powf(alpha)).collect();
        Ok(AdaptivePolicy {
            live,
            bias,
            lcb: vec![f64::NEG_INFINITY; m],
            archive: Vec::new(),
            rounds: 0,
            pending: None,
            a0,
            alpha,
            mu,
        })
    }

    /// Proposes the next query point.
    ///
    /// Selects the live bin with the smallest confidence bound. A bin
    /// below capacity is queried uniformly inside its own extent. A bin at
    /// capacity is split first: the query is still drawn from the parent's
    /// extent, credited to the child that contains it, and the parent is
    /// archived, never to be selected again.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Point> {
        if self.pending.is_some() {
            return Err(Error::protocol("step called while an observation is outstanding"));
        }
        let chosen = select_arm(&self.lcb, rng);
        let bin = &self.live[chosen];
        if bin.count() < capacity(bin.depth(), self.alpha) {
            let point = sample_uniform(bin, rng);
            self.pending = Some(chosen);
            return Ok(point);
        }
        // Split: replace the parent with its children, then attribute a
        // draw from the parent's extent to the containing child.
        let parent = self.live.swap_remove(chosen);
        self.bias.swap_remove(chosen);
        self.lcb.swap_remove(chosen);
        let children = split_bin(&parent);
        let point = sample_uniform(&parent, rng);
        let child_index = locate_child(&children, &point)?;
        let base = self.live.len();
        for child in children {
            self.bias.push(self.mu * child.length().powf(self.alpha));
            self.lcb.push(f64::NEG_INFINITY);
            self.live.push(child);
        }
        self.archive.push(parent);
        self.pending = Some(base + child_index);
        Ok(point)
    }

    /// Records the loss for the pending query and refreshes every live
    /// bin's confidence bound with the updated round count.
    pub fn observe(&mut self, y: f64) -> Result<()> {
        let chosen = self
            .pending
            .take()
            .ok_or_else(|| Error::protocol("observe called without a pending query"))?;
        self.rounds += 1;
        self.live[chosen].record(self.rounds, y);
        let ln_t = (self.rounds as f64).ln();
        for (i, bin) in self.live.iter().enumerate() {
            self.lcb[i] = if bin.count() == 0 {
                f64::NEG_INFINITY
            } else {
                bin.loss_sum() / bin.count() as f64
                    - self.bias[i]
                    - ln_t / (bin.count() as f64).sqrt()
            };
        }
        Ok(())
    }

    /// Bins currently selectable.
    pub fn live_bins(&self) -> &[Bin] {
        &self.live
    }

    /// Split parents, retired with their query records intact.
    pub fn archived_bins(&self) -> &[Bin] {
        &self.archive
    }

    /// The confidence bounds the next selection will scan, one per live bin.
    pub fn lcb_values(&self) -> &[f64] {
        &self.lcb
    }

    /// Query capacity of the given live bin.
    pub fn capacity_of(&self, bin: &Bin) -> u64 {
        capacity(bin.depth(), self.alpha)
    }

    /// Number of completed query/observation rounds.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Whether a query is awaiting its observation.
    pub fn awaiting_observation(&self) -> bool {
        self.pending.is_some()
    }

    pub fn initial_length(&self) -> f64 {
        self.a0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}
