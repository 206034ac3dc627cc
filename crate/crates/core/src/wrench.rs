//! Wrench algebra, the point-contact model and the per-contact force solve.

use nalgebra::{Isometry3, Matrix3, Matrix6, Rotation3, Vector3, Vector6};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Frame a wrench is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    ToolEe,
    ProbeEe,
    World,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    /// Force (N).
    pub force: Vector3<f64>,
    /// Torque (N·m).
    pub torque: Vector3<f64>,
    pub frame: Frame,
}

/// Norm applied to wrench differences in the wrench error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WrenchNorm {
    #[default]
    L1,
    L2,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>, frame: Frame) -> Self {
        Self { force, torque, frame }
    }

    pub fn zero(frame: Frame) -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros(), frame)
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>, frame: Frame) -> Self {
        Self::new(v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into(), frame)
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|c| c.is_finite())
    }

    pub fn distance(&self, other: &Wrench, norm: WrenchNorm) -> f64 {
        let d = self.to_vector() - other.to_vector();
        match norm {
            WrenchNorm::L1 => d.iter().map(|c| c.abs()).sum(),
            WrenchNorm::L2 => d.norm(),
        }
    }
}

/// Wrench of a point force `f` applied at `r`: `[f; r x f]`.
pub fn contact_wrench(r: &Vector3<f64>, f: &Vector3<f64>, frame: Frame) -> Wrench {
    Wrench::new(*f, r.cross(f), frame)
}

/// Re-expresses `w` through the rigid transform `x = (R, p)`:
/// `F' = R F`, `T' = R T + p x (R F)`.
pub fn transform_wrench(w: &Wrench, x: &Isometry3<f64>, to: Frame) -> Wrench {
    let f = x.rotation * w.force;
    let t = x.rotation * w.torque + x.translation.vector.cross(&f);
    Wrench::new(f, t, to)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NoiseModelError {
    #[error("covariance is not symmetric")]
    NotSymmetric,
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("need at least two samples to estimate a covariance")]
    TooFewSamples,
}

/// Wrench sensor covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorNoise {
    covariance: Matrix6<f64>,
    information: Matrix6<f64>,
}

pub const DEFAULT_FORCE_SIGMA: f64 = 0.05;
pub const DEFAULT_TORQUE_SIGMA: f64 = 0.005;

impl Default for SensorNoise {
    fn default() -> Self {
        Self::diagonal(DEFAULT_FORCE_SIGMA, DEFAULT_TORQUE_SIGMA)
    }
}

impl SensorNoise {
    pub fn new(covariance: Matrix6<f64>) -> Result<Self, NoiseModelError> {
        if (covariance - covariance.transpose()).amax() > 1e-12 {
            return Err(NoiseModelError::NotSymmetric);
        }
        let chol = covariance
            .cholesky()
            .ok_or(NoiseModelError::NotPositiveDefinite)?;
        let information = chol.inverse();
        Ok(Self {
            covariance,
            information: (information + information.transpose()) * 0.5,
        })
    }

    /// Independent axes with standard deviations `sigma_force` (N) and
    /// `sigma_torque` (N·m).
    pub fn diagonal(sigma_force: f64, sigma_torque: f64) -> Self {
        let (vf, vt) = (sigma_force * sigma_force, sigma_torque * sigma_torque);
        Self::new(Matrix6::from_diagonal(&Vector6::new(vf, vf, vf, vt, vt, vt)))
            .expect("positive diagonal is SPD")
    }

    pub fn identity() -> Self {
        Self::diagonal(1.0, 1.0)
    }

    /// Sample covariance of a static capture.
    pub fn from_samples(samples: &[Vector6<f64>]) -> Result<Self, NoiseModelError> {
        if samples.len() < 2 {
            return Err(NoiseModelError::TooFewSamples);
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<Vector6<f64>>() / n;
        let mut cov = Matrix6::zeros();
        for s in samples {
            let d = s - mean;
            cov += d * d.transpose();
        }
        cov /= n - 1.0;
        Self::new((cov + cov.transpose()) * 0.5)
    }

    pub fn covariance(&self) -> &Matrix6<f64> {
        &self.covariance
    }

    pub fn information(&self) -> &Matrix6<f64> {
        &self.information
    }

    pub fn scaled(&self, c: f64) -> Result<Self, NoiseModelError> {
        Self::new(self.covariance * c)
    }

    /// Covariance of the same sensor after rotating both wrench blocks by `r`.
    pub fn rotated(&self, r: &Rotation3<f64>) -> Self {
        let mut b = Matrix6::zeros();
        b.fixed_view_mut::<3, 3>(0, 0).copy_from(r.matrix());
        b.fixed_view_mut::<3, 3>(3, 3).copy_from(r.matrix());
        let cov = b * self.covariance * b.transpose();
        Self::new((cov + cov.transpose()) * 0.5).expect("rotation preserves SPD")
    }
}

/// Outcome of fitting a point force at one candidate contact location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSolution {
    pub force: Vector3<f64>,
    pub residual: Vector6<f64>,
    pub nll: f64,
}

fn skew(r: &Vector3<f64>) -> Matrix3<f64> {
    r.cross_matrix()
}

/// Weighted least-squares force solver for one measured wrench. The
/// information-weighted measurement is cached so each candidate location costs
/// one 3x3 solve.
#[derive(Debug, Clone)]
pub struct ForceSolver {
    gamma: Vector6<f64>,
    w: Matrix6<f64>,
    w_ff: Matrix3<f64>,
    w_ft: Matrix3<f64>,
    w_tt: Matrix3<f64>,
    wg_f: Vector3<f64>,
    wg_t: Vector3<f64>,
}

impl ForceSolver {
    pub fn new(gamma: &Wrench, noise: &SensorNoise) -> Self {
        let g = gamma.to_vector();
        let w = *noise.information();
        let wg = w * g;
        Self {
            gamma: g,
            w,
            w_ff: w.fixed_view::<3, 3>(0, 0).into(),
            w_ft: w.fixed_view::<3, 3>(0, 3).into(),
            w_tt: w.fixed_view::<3, 3>(3, 3).into(),
            wg_f: wg.fixed_rows::<3>(0).into(),
            wg_t: wg.fixed_rows::<3>(3).into(),
        }
    }

    pub fn solve(&self, r: &Vector3<f64>) -> ContactSolution {
        let k = skew(r);
        let kt = k.transpose();
        let lhs = self.w_ff + self.w_ft * k + kt * self.w_ft.transpose() + kt * self.w_tt * k;
        let rhs = self.wg_f + kt * self.wg_t;
        let force = lhs
            .cholesky()
            .map(|c| c.solve(&rhs))
            .unwrap_or_else(|| lhs.lu().solve(&rhs).unwrap_or_else(Vector3::zeros));
        let torque = r.cross(&force);
        let model = Vector6::new(force.x, force.y, force.z, torque.x, torque.y, torque.z);
        let residual = model - self.gamma;
        let nll = 0.5 * residual.dot(&(self.w * residual));
        ContactSolution { force, residual, nll }
    }
}

/// Penalty for a solved force pulling away from the surface:
/// `weight * max(0, f . n)^2` with `n` the outward normal.
pub fn pull_penalty(force: &Vector3<f64>, outward_normal: &Vector3<f64>, weight: f64) -> f64 {
    let along = force.dot(outward_normal).max(0.0);
    weight * along * along
}

/// Best point force at `r` explaining `gamma` under sensor covariance `noise`.
pub fn solve_contact_force(r: &Vector3<f64>, gamma: &Wrench, noise: &SensorNoise) -> ContactSolution {
    ForceSolver::new(gamma, noise).solve(r)
}

/// Relative wrench noise level: per-axis standard deviations are `n_pct`
/// times the force and torque magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub n_pct: f64,
    pub seed: u64,
}

/// Adds zero-mean Gaussian noise with `sigma_F = n_pct |F|` on each force axis
/// and `sigma_T = n_pct |T|` on each torque axis.
pub fn inject_noise<R: Rng>(gamma: &Wrench, n_pct: f64, rng: &mut R) -> Wrench {
    assert!(n_pct >= 0.0, "noise fraction must be non-negative");
    if n_pct == 0.0 {
        return *gamma;
    }
    let mut perturb = |v: &Vector3<f64>| {
        let sigma = n_pct * v.norm();
        if sigma == 0.0 {
            return *v;
        }
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        v + Vector3::from_fn(|_, _| normal.sample(rng))
    };
    let force = perturb(&gamma.force);
    let torque = perturb(&gamma.torque);
    Wrench::new(force, torque, gamma.frame)
}

/// Score-weighted wrench error of a set of `(r, f, s)` contact hypotheses:
/// `sum_i s_i |[f_i; r_i x f_i] - gamma|`.
pub fn wrench_error<I>(particles: I, gamma: &Wrench, norm: WrenchNorm) -> f64
where
    I: IntoIterator<Item = (Vector3<f64>, Vector3<f64>, f64)>,
{
    particles
        .into_iter()
        .map(|(r, f, s)| s * contact_wrench(&r, &f, gamma.frame).distance(gamma, norm))
        .sum()
}
