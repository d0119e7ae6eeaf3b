//! Posterior variance of `φᵀw` under Bayesian ridge regression, estimated by
//! sampling and compared against the closed form `φᵀΛ⁻¹φ`.
//!
//! With prior `w ~ N(0, I/λ)` and unit Gaussian observation noise, the
//! posterior is `N(μ, Λ⁻¹)` with `Λ = λI + ΦᵀΦ` and `μ = Λ⁻¹Φᵀy`.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, quad_form, ridge_solve, Cholesky, Matrix};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    /// `φᵀΛ⁻¹φ`.
    pub closed_form: f64,
    /// Sampling estimate of `Var(φᵀw)`.
    pub sampled: f64,
}

impl VarianceEstimate {
    /// Relative error of the sampled variance; zero when both are zero.
    pub fn rel_error(&self) -> f64 {
        if self.closed_form == 0.0 {
            if self.sampled == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.sampled - self.closed_form).abs() / self.closed_form
        }
    }
}

/// A linear regression problem `y = Φ w* + ε`, `ε ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct LinearDesign {
    pub phi: Matrix,
    pub targets: Vec<f64>,
    pub lambda: f64,
}

impl LinearDesign {
    /// Standard-normal design rows scaled by `1/√d`, a standard-normal true
    /// weight vector, and unit observation noise.
    pub fn random(d: usize, m: usize, lambda: f64, rng: &mut Rng) -> Result<Self> {
        let scale = 1.0 / (d as f64).sqrt();
        let w_true: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let mut rows = Vec::with_capacity(m);
        let mut targets = Vec::with_capacity(m);
        for _ in 0..m {
            let row: Vec<f64> = (0..d)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let noise: f64 = rng.sample(StandardNormal);
            targets.push(dot(&row, &w_true) + noise);
            rows.push(row);
        }
        Ok(Self {
            phi: Matrix::from_rows(&rows, d)?,
            targets,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    fn precision(&self) -> Matrix {
        let mut g = self.phi.gram();
        g.add_diagonal(self.lambda);
        g
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn check_probe(design: &LinearDesign, probe: &[f64]) -> Result<()> {
    if probe.len() != design.dim() {
        return Err(Error::Dimension(format!(
            "probe of length {} for a {}-dim design",
            probe.len(),
            design.dim()
        )));
    }
    if !(design.lambda > 0.0) {
        return Err(Error::InvalidInput("lambda must be positive".into()));
    }
    Ok(())
}

/// Draws `n_samples` full weight vectors from the Gaussian posterior and
/// returns the sample variance of `φᵀw` next to the closed form.
pub fn posterior_variance_oracle(
    design: &LinearDesign,
    probe: &[f64],
    n_samples: usize,
    rng: &mut Rng,
) -> Result<VarianceEstimate> {
    check_probe(design, probe)?;
    if n_samples < 1000 {
        return Err(Error::InvalidInput(format!(
            "need at least 1000 posterior samples, got {n_samples}"
        )));
    }
    let d = design.dim();
    let precision = design.precision();
    let chol = Cholesky::factor(&precision)?;
    let closed_form = quad_form(&chol.inverse(), probe)?;
    let mean = chol.solve(&design.phi.tmatvec(&design.targets)?)?;

    // w = μ + L⁻ᵀ z has covariance (L Lᵀ)⁻¹ = Λ⁻¹.
    let mut z = vec![0.0; d];
    let draws: Vec<f64> = (0..n_samples)
        .map(|_| {
            z.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            let offset = chol.backward(&z);
            let w: Vec<f64> = mean.iter().zip(&offset).map(|(m, o)| m + o).collect();
            dot(probe, &w)
        })
        .collect();
    Ok(VarianceEstimate {
        closed_form,
        sampled: sample_variance(&draws),
    })
}

/// Pairs bootstrap: resample rows with replacement, refit the ridge, and
/// take the variance of `φᵀŵ` across replicates.
pub fn bootstrap_variance(
    design: &LinearDesign,
    probe: &[f64],
    replicates: usize,
    rng: &mut Rng,
) -> Result<VarianceEstimate> {
    check_probe(design, probe)?;
    if replicates < 2 {
        return Err(Error::InvalidInput("need at least two bootstrap replicates".into()));
    }
    let m = design.phi.rows();
    let d = design.dim();
    let closed_form = quad_form(&Cholesky::factor(&design.precision())?.inverse(), probe)?;
    let mut rows = Vec::with_capacity(m * d);
    let mut ys = Vec::with_capacity(m);
    let draws = (0..replicates)
        .map(|_| {
            rows.clear();
            ys.clear();
            for _ in 0..m {
                let i = rng.random_range(0..m);
                rows.extend_from_slice(design.phi.row(i));
                ys.push(design.targets[i]);
            }
            let phi = Matrix::from_vec(m, d, rows.clone())?;
            Ok(dot(probe, &ridge_solve(&phi, &ys, design.lambda)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(VarianceEstimate {
        closed_form,
        sampled: sample_variance(&draws),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn scalar_single_observation() {
        let design = LinearDesign {
            phi: Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            targets: vec![0.3],
            lambda: 1.0,
        };
        let est = posterior_variance_oracle(&design, &[1.0], 20_000, &mut rng_from(1)).unwrap();
        assert!((est.closed_form - 0.5).abs() < 1e-12);
        assert!(est.rel_error() < 0.05);
    }

    #[test]
    fn zero_probe_has_zero_variance() {
        let design = LinearDesign::random(3, 10, 1.0, &mut rng_from(2)).unwrap();
        let est = posterior_variance_oracle(&design, &[0.0; 3], 1000, &mut rng_from(3)).unwrap();
        assert_eq!(est.closed_form, 0.0);
        assert_eq!(est.sampled, 0.0);
        assert_eq!(est.rel_error(), 0.0);
    }

    #[test]
    fn too_few_samples_rejected() {
        let design = LinearDesign::random(2, 5, 1.0, &mut rng_from(2)).unwrap();
        assert!(posterior_variance_oracle(&design, &[1.0, 0.0], 999, &mut rng_from(0)).is_err());
        assert!(posterior_variance_oracle(&design, &[1.0], 5000, &mut rng_from(0)).is_err());
    }

    #[test]
    fn random_design_within_five_percent() {
        let mut rng = rng_from(10);
        let design = LinearDesign::random(4, 30, 1.0, &mut rng).unwrap();
        let probe: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
        let est = posterior_variance_oracle(&design, &probe, 100_000, &mut rng).unwrap();
        assert!(est.rel_error() < 0.05, "{est:?}");
    }

    #[test]
    fn bootstrap_approaches_posterior_at_large_m() {
        let mut rng = rng_from(17);
        let design = LinearDesign::random(3, 500, 1.0, &mut rng).unwrap();
        let probe: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        let est = bootstrap_variance(&design, &probe, 2000, &mut rng).unwrap();
        assert!(est.rel_error() < 0.15, "{est:?}");
    }
}
