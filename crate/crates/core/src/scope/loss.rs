//! Pair losses and scores. All values are costs: lower is better.

use nalgebra::{Isometry3, Vector3};
use serde::{Deserialize, Serialize};

use crate::cpf::ContactBelief;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub eta_p: f64,
    pub eta_c: f64,
    pub eta_f: f64,
    pub eta_gamma: f64,
    /// Multiplier on the memory loss. Memory is disabled when zero.
    pub eta_m: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            eta_p: 1.0,
            eta_c: 50.0,
            eta_f: 0.2,
            eta_gamma: 0.5,
            eta_m: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.eta_p, self.eta_c, self.eta_f, self.eta_gamma, self.eta_m];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err("loss weights must be finite and non-negative".into());
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err("at least one loss weight must be positive".into());
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            eta_p: self.eta_p * c,
            eta_c: self.eta_c * c,
            eta_f: self.eta_f * c,
            eta_gamma: self.eta_gamma * c,
            eta_m: self.eta_m * c,
        }
    }
}

/// Unweighted loss components of one pose pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub penetration: f64,
    pub contact: f64,
    pub force: f64,
    pub wrench: f64,
    pub memory: f64,
}

/// `max(0, n_pp - eps_pp)`.
pub fn loss_penetration(n_pp: usize, eps_pp: f64) -> f64 {
    (n_pp as f64 - eps_pp).max(0.0)
}

/// Weighted support of a belief in the world frame: `(r, f, s)` with duplicate
/// samples merged.
pub fn world_support(belief: &ContactBelief, world_from_ee: &Isometry3<f64>) -> Vec<(Vector3<f64>, Vector3<f64>, f64)> {
    belief
        .support()
        .into_iter()
        .map(|(r, f, s)| (world_from_ee.transform_point(&r.into()).coords, world_from_ee.rotation * f, s))
        .collect()
}

/// `sum_t sum_p s_t s_p |r_t - r_p|` over world-frame contact hypotheses.
pub fn loss_contact(t: &[(Vector3<f64>, Vector3<f64>, f64)], p: &[(Vector3<f64>, Vector3<f64>, f64)]) -> f64 {
    let mut total = 0.0;
    for (rt, _, st) in t {
        for (rp, _, sp) in p {
            total += st * sp * (rt - rp).norm();
        }
    }
    total
}

/// `sum_t sum_p s_t s_p |-w_t - w_p|` over world-frame contact forces.
pub fn loss_force_align(t: &[(Vector3<f64>, Vector3<f64>, f64)], p: &[(Vector3<f64>, Vector3<f64>, f64)]) -> f64 {
    let mut total = 0.0;
    for (_, wt, st) in t {
        for (_, wp, sp) in p {
            total += st * sp * (-wt - wp).norm();
        }
    }
    total
}

/// Excess wrench error of both arms over the running minima.
pub fn loss_wrench(eps_t: f64, eps_p: f64, min_t: f64, min_p: f64) -> f64 {
    (eps_t - min_t) + (eps_p - min_p)
}

/// Consistency score, memory excluded.
pub fn score_consistency(terms: &LossTerms, w: &LossWeights) -> f64 {
    w.eta_p * terms.penetration + w.eta_c * terms.contact + w.eta_f * terms.force + w.eta_gamma * terms.wrench
}

/// Full pair score: consistency plus weighted memory.
pub fn score_opp(s_c: f64, l_m: f64, w: &LossWeights) -> f64 {
    s_c + w.eta_m * l_m
}
