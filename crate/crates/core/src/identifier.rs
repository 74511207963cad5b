//! On-line fuzzy relational identification of a single-input single-output
//! system.
//!
//! Each cycle first predicts the next output from the next input through the
//! current relation (max-min composition followed by center-of-gravity
//! defuzzification), then learns from the measured pair:
//!
//! 1. prediction error and its running integral,
//! 2. gravity-center adjustment of the output partition,
//! 3. universe expansion for both partitions,
//! 4. fuzzy union of the measured Cartesian product into the relation,
//! 5. exponential smoothing of the relation, entry by entry.
//!
//! Large `alpha` values make the centers move faster than the output
//! dynamics and show up as oscillation in the prediction; very small values
//! leave a persistent error.

use serde::{Deserialize, Serialize};

use crate::algebra::{self, GradeVector, RelationalMatrix, TNorm};
use crate::error::{Error, Result};
use crate::partition::FuzzyPartition;
use crate::smoothing::Smoother;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentifierConfig {
    /// Gravity-center adjustment rate.
    pub alpha: f64,
    /// Universe expansion fraction.
    pub beta: f64,
    /// Relation filter rate, `(0, 1]`; 1 disables filtering.
    pub gamma: f64,
    /// Relation filter order (1 or 2).
    pub filter_order: usize,
    pub n_sets: usize,
    /// Initial input universe half-width (A).
    pub u_init_limit: f64,
    /// Initial output universe half-width (rad/s).
    pub y_init_limit: f64,
    /// Sampling period (s).
    pub dt: f64,
    /// Bound on |error integral|; defaults to `10·y_init_limit/alpha`.
    pub integral_clamp: Option<f64>,
    /// Forgetting rate of the error integral (1/s). Zero gives a pure
    /// running sum.
    pub integral_forgetting: f64,
}

impl Default for IdentifierConfig {
    fn default() -> Self {
        Self {
            alpha: 2.3,
            beta: 0.82,
            gamma: 0.01,
            filter_order: 1,
            n_sets: 7,
            u_init_limit: 10.0,
            y_init_limit: 100.0,
            dt: 1e-3,
            integral_clamp: None,
            integral_forgetting: 10.0,
        }
    }
}

impl IdentifierConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("u_init_limit", self.u_init_limit)?;
        positive("y_init_limit", self.y_init_limit)?;
        positive("dt", self.dt)?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        if !matches!(self.filter_order, 1 | 2) {
            return Err(Error::config(format!(
                "filter_order must be 1 or 2, got {}",
                self.filter_order
            )));
        }
        if let Some(c) = self.integral_clamp {
            positive("integral_clamp", c)?;
        }
        if !(self.integral_forgetting >= 0.0 && self.integral_forgetting.is_finite()) {
            return Err(Error::config(format!(
                "integral_forgetting must be >= 0, got {}",
                self.integral_forgetting
            )));
        }
        if self.n_sets < 3 || self.n_sets.is_multiple_of(2) {
            return Err(Error::config(format!(
                "n_sets must be odd and >= 3, got {}",
                self.n_sets
            )));
        }
        Ok(())
    }

    pub fn effective_integral_clamp(&self) -> f64 {
        self.integral_clamp
            .unwrap_or(10.0 * self.y_init_limit / self.alpha)
    }
}

/// One-step-ahead output estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Crisp predicted output.
    pub y_hat: f64,
    /// Fuzzy predicted output over the output labels.
    pub grades: GradeVector,
    /// False when the relation gave no support and the fallback was used.
    pub from_model: bool,
}

/// Result of one predict-then-update cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub y_hat: f64,
    pub error: f64,
}

/// Serializable view of the learned model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub relation: RelationalMatrix,
    pub input_partition: FuzzyPartition,
    pub output_partition: FuzzyPartition,
    pub error_integral: f64,
    pub sample_count: u64,
}

impl Snapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Snapshot =
            serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        let (rows, cols) = snap.relation.shape();
        if rows != snap.input_partition.n_sets() || cols != snap.output_partition.n_sets() {
            return Err(Error::Snapshot(format!(
                "relation is {rows}x{cols} but partitions have {} and {} sets",
                snap.input_partition.n_sets(),
                snap.output_partition.n_sets()
            )));
        }
        if !snap.error_integral.is_finite() {
            return Err(Error::Snapshot("error_integral is not finite".into()));
        }
        Ok(snap)
    }

    pub fn rules(&self, threshold: f64) -> Result<Vec<algebra::Rule>> {
        algebra::explain_rules(
            &self.relation,
            self.input_partition.labels(),
            self.output_partition.labels(),
            threshold,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identifier {
    cfg: IdentifierConfig,
    relation: RelationalMatrix,
    input: FuzzyPartition,
    output: FuzzyPartition,
    error_integral: f64,
    smoother: Smoother<RelationalMatrix>,
    pending: Option<Prediction>,
    last_output: Option<f64>,
    sample_count: u64,
}

impl Identifier {
    /// Empty relation over uniform partitions.
    pub fn new(cfg: IdentifierConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            relation: RelationalMatrix::zeros(cfg.n_sets, cfg.n_sets),
            input: FuzzyPartition::uniform(cfg.n_sets, cfg.u_init_limit)?,
            output: FuzzyPartition::uniform(cfg.n_sets, cfg.y_init_limit)?,
            error_integral: 0.0,
            smoother: Smoother::new(cfg.gamma, cfg.filter_order)?,
            pending: None,
            last_output: None,
            sample_count: 0,
            cfg,
        })
    }

    /// Continues from a stored model. The relation filter restarts with every
    /// stage at the stored relation.
    pub fn resume(cfg: IdentifierConfig, snap: Snapshot) -> Result<Self> {
        cfg.validate()?;
        if snap.relation.shape() != (cfg.n_sets, cfg.n_sets) {
            return Err(Error::Dimension {
                expected: cfg.n_sets,
                found: snap.relation.rows(),
            });
        }
        let clamp = cfg.effective_integral_clamp();
        Ok(Self {
            smoother: if snap.sample_count > 0 {
                Smoother::primed(cfg.gamma, cfg.filter_order, snap.relation.clone())?
            } else {
                Smoother::new(cfg.gamma, cfg.filter_order)?
            },
            relation: snap.relation,
            input: snap.input_partition,
            output: snap.output_partition,
            error_integral: snap.error_integral.clamp(-clamp, clamp),
            pending: None,
            last_output: None,
            sample_count: snap.sample_count,
            cfg,
        })
    }

    pub fn config(&self) -> &IdentifierConfig {
        &self.cfg
    }

    pub fn relation(&self) -> &RelationalMatrix {
        &self.relation
    }

    pub fn input_partition(&self) -> &FuzzyPartition {
        &self.input
    }

    pub fn output_partition(&self) -> &FuzzyPartition {
        &self.output
    }

    pub fn error_integral(&self) -> f64 {
        self.error_integral
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    fn fallback(&self) -> f64 {
        let (lo, hi) = self.output.center_bounds();
        self.last_output.unwrap_or(0.0).clamp(lo, hi)
    }

    /// Predicts the output that will follow input `u_next` and caches the
    /// prediction for the next [`update`](Self::update).
    pub fn predict(&mut self, u_next: f64) -> Prediction {
        let x = self.input.fuzzify(u_next);
        let grades = algebra::max_min_compose(&x, &self.relation)
            .expect("relation rows match the input partition");
        let fallback = self.fallback();
        let from_model = grades.sum() >= crate::partition::DEFUZZ_EPSILON;
        let y_hat = self
            .output
            .defuzzify(&grades, fallback)
            .expect("relation columns match the output partition");
        let p = Prediction {
            y_hat,
            grades,
            from_model,
        };
        self.pending = Some(p.clone());
        p
    }

    /// Learns from the measured pair `(u, y)` and returns the prediction
    /// error. Without a preceding [`predict`](Self::predict), the error is
    /// taken against the fallback value and the centers are not moved.
    pub fn update(&mut self, u: f64, y: f64) -> Result<f64> {
        if !u.is_finite() || !y.is_finite() {
            return Err(Error::Input(format!("non-finite pair u = {u}, y = {y}")));
        }
        let n = self.cfg.n_sets;
        let prediction = self.pending.take().unwrap_or_else(|| Prediction {
            y_hat: self.fallback(),
            grades: GradeVector::zeros(n),
            from_model: false,
        });

        let error = y - prediction.y_hat;
        let clamp = self.cfg.effective_integral_clamp();
        let keep = (-self.cfg.integral_forgetting * self.cfg.dt).exp();
        self.error_integral = (keep * self.error_integral + error * self.cfg.dt).clamp(-clamp, clamp);

        self.output = self
            .output
            .adjust_centers(self.error_integral, &prediction.grades, self.cfg.alpha)?;

        self.input = self.input.expand_universe(u, self.cfg.beta);
        self.output = self.output.expand_universe(y, self.cfg.beta);

        let measured = algebra::cartesian_product(
            &self.input.fuzzify(u),
            &self.output.fuzzify(y),
            TNorm::Min,
        );
        let joined = algebra::relation_union(&measured, &self.relation)?;
        self.relation = self.smoother.smooth(&joined)?;

        self.last_output = Some(y);
        self.sample_count += 1;
        Ok(error)
    }

    /// Predicts from `u_next`, then learns from `(u_next, y_next)`.
    pub fn step(&mut self, u_next: f64, y_next: f64) -> Result<Step> {
        if !u_next.is_finite() || !y_next.is_finite() {
            return Err(Error::Input(format!(
                "non-finite pair u = {u_next}, y = {y_next}"
            )));
        }
        let y_hat = self.predict(u_next).y_hat;
        let error = self.update(u_next, y_next)?;
        Ok(Step { y_hat, error })
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            relation: self.relation.clone(),
            input_partition: self.input.clone(),
            output_partition: self.output.clone(),
            error_integral: self.error_integral,
            sample_count: self.sample_count,
        }
    }
}
