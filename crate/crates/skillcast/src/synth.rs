//! Seeded synthetic data: skill-share panels with controllable trend,
//! seasonality, and cross-skill noise coupling, plus job-ad and employment
//! files that rebuild those panels through the regular ingestion path.
//!
//! Generation is pure given the seed. Ad sampling draws from a per
//! occupation-month derived seed, so record order never affects content.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{EmploymentMode, JobAdRecord, OccupationEmployment, SkillSharePanel};
use crate::months::{MonthRange, DEFAULT_EPOCH_YEAR};
use crate::seed::derive_seed;

fn default_months() -> usize {
    120
}

fn default_period() -> usize {
    12
}

fn default_ads() -> usize {
    200
}

/// Recipe for one synthetic panel. Per-skill vectors may be left empty to
/// mean "zero for every skill" (for `base`, `trend`, `seasonal_amplitude`,
/// `seasonal_phase`); an empty `coupling` means uncorrelated noise.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_skills: usize,
    pub n_occupations: usize,
    #[serde(default = "default_months")]
    pub months: usize,
    /// Latent intercept per skill (pre-squash; 0 maps to share 0.5).
    #[serde(default)]
    pub base: Vec<f64>,
    /// Latent slope per skill, per month.
    #[serde(default)]
    pub trend: Vec<f64>,
    #[serde(default)]
    pub seasonal_amplitude: Vec<f64>,
    #[serde(default = "default_period")]
    pub seasonal_period: usize,
    /// Phase offset in radians per skill.
    #[serde(default)]
    pub seasonal_phase: Vec<f64>,
    #[serde(default)]
    pub noise_std: f64,
    /// Month-to-month carryover of the noise component, in [0, 1). Zero
    /// gives white noise; higher values make disturbances persist, which
    /// leaves the stationary cross-skill correlations untouched.
    #[serde(default)]
    pub noise_persistence: f64,
    /// Target correlation matrix of the per-skill noise components:
    /// symmetric, unit diagonal, positive semidefinite.
    #[serde(default)]
    pub coupling: Vec<Vec<f64>>,
    /// Ads emitted per occupation per month by [`generate_ads`].
    #[serde(default = "default_ads")]
    pub ads_per_month: usize,
    pub seed: u64,
}

struct Resolved {
    base: Vec<f64>,
    trend: Vec<f64>,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
    /// Lower-triangular mixing factor of the coupling matrix.
    factor: Vec<Vec<f64>>,
}

fn per_skill(values: &[f64], n: usize, what: &str) -> Result<Vec<f64>> {
    if values.is_empty() {
        Ok(vec![0.0; n])
    } else if values.len() == n {
        Ok(values.to_vec())
    } else {
        Err(Error::Spec(format!(
            "{what} has {} entries but there are {n} skills",
            values.len()
        )))
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    fn resolve(&self) -> Result<Resolved> {
        if self.n_skills == 0 {
            return Err(Error::Spec("n_skills must be >= 1".into()));
        }
        if self.n_occupations == 0 {
            return Err(Error::Spec("n_occupations must be >= 1".into()));
        }
        if self.months < 2 {
            return Err(Error::Spec("months must be >= 2".into()));
        }
        if self.seasonal_period == 0 {
            return Err(Error::Spec("seasonal_period must be >= 1".into()));
        }
        if self.ads_per_month == 0 {
            return Err(Error::Spec("ads_per_month must be >= 1".into()));
        }
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(Error::Spec(format!(
                "noise_std must be finite and >= 0, got {}",
                self.noise_std
            )));
        }
        if !(0.0..1.0).contains(&self.noise_persistence) {
            return Err(Error::Spec(format!(
                "noise_persistence must lie in [0, 1), got {}",
                self.noise_persistence
            )));
        }
        let n = self.n_skills;
        let coupling = if self.coupling.is_empty() {
            identity(n)
        } else {
            validate_coupling(&self.coupling, n)?;
            self.coupling.clone()
        };
        Ok(Resolved {
            base: per_skill(&self.base, n, "base")?,
            trend: per_skill(&self.trend, n, "trend")?,
            amplitude: per_skill(&self.seasonal_amplitude, n, "seasonal_amplitude")?,
            phase: per_skill(&self.seasonal_phase, n, "seasonal_phase")?,
            factor: cholesky_psd(&coupling)?,
        })
    }

    /// Stable skill names, zero-padded so lexicographic order matches index
    /// order.
    pub fn skill_names(&self) -> Vec<String> {
        (0..self.n_skills).map(|i| format!("skill_{i:03}")).collect()
    }

    /// SOC-style occupation codes.
    pub fn occupation_codes(&self) -> Vec<String> {
        (0..self.n_occupations)
            .map(|j| format!("15-{}", 1010 + j))
            .collect()
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn validate_coupling(matrix: &[Vec<f64>], n: usize) -> Result<()> {
    if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
        return Err(Error::Spec(format!(
            "coupling matrix must be {n}x{n} to match n_skills"
        )));
    }
    for i in 0..n {
        if (matrix[i][i] - 1.0).abs() > 1e-12 {
            return Err(Error::Spec(format!(
                "coupling diagonal entry [{i}][{i}] is {}, must be 1",
                matrix[i][i]
            )));
        }
        for j in 0..i {
            let a = matrix[i][j];
            let b = matrix[j][i];
            if (a - b).abs() > 1e-9 {
                return Err(Error::Spec(format!(
                    "coupling entries [{i}][{j}]={a} and [{j}][{i}]={b} break symmetry"
                )));
            }
            if !a.is_finite() || a.abs() > 1.0 + 1e-12 {
                return Err(Error::Spec(format!(
                    "coupling entry [{i}][{j}]={a} must lie in [-1, 1]"
                )));
            }
        }
    }
    Ok(())
}

/// Lower-triangular factor `L` with `L Lᵀ = matrix`, tolerating rank
/// deficiency (as with perfectly coupled skills). Rejects matrices that are
/// not positive semidefinite.
pub fn cholesky_psd(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = matrix.len();
    let tol = 1e-8;
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum < -tol {
                    return Err(Error::Spec(format!(
                        "coupling matrix is not positive semidefinite \
                         (pivot {i} = {sum:.3e})"
                    )));
                }
                l[i][j] = sum.max(0.0).sqrt();
            } else if l[j][j] > tol {
                l[i][j] = sum / l[j][j];
            } else if sum.abs() > tol {
                return Err(Error::Spec(format!(
                    "coupling matrix is not positive semidefinite \
                     (column {j} is degenerate but entry [{i}][{j}] remains {sum:.3e})"
                )));
            }
        }
    }
    Ok(l)
}

/// Standard normal draws via the Box-Muller transform; the second value of
/// each pair is held for the next call.
struct NormalSource {
    spare: Option<f64>,
}

impl NormalSource {
    fn new() -> Self {
        Self { spare: None }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u keeps the argument of ln strictly positive.
        let u1 = 1.0 - rng.gen::<f64>();
        let u2 = rng.gen::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Number of pre-sample steps run so the persistent noise state starts near
/// its stationary distribution.
const NOISE_WARMUP: usize = 100;

/// A generated panel together with its latent components, row-major
/// `[month][skill]`, for oracle checks against the construction.
#[derive(Clone, Debug)]
pub struct SynthPanel {
    pub panel: SkillSharePanel,
    /// base + trend + seasonal, pre-squash.
    pub deterministic: Vec<Vec<f64>>,
    /// Correlated noise component, pre-squash.
    pub noise: Vec<Vec<f64>>,
    /// deterministic + noise; the panel is the logistic squash of this.
    pub latent: Vec<Vec<f64>>,
}

/// Builds the share panel described by `spec`.
///
/// Per skill, the latent series is intercept + linear trend + sinusoidal
/// seasonality + noise, where the noise innovations are mixed through a
/// factorization of the coupling matrix and optionally carried over month
/// to month. Shares are the logistic squash of the latent series, so they
/// stay inside (0, 1) without clipping artifacts.
pub fn generate_panel(spec: &SynthSpec) -> Result<SynthPanel> {
    let resolved = spec.resolve()?;
    let n = spec.n_skills;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "panel-noise"));
    let mut normals = NormalSource::new();

    let phi = spec.noise_persistence;
    let innovation_scale = (1.0 - phi * phi).sqrt();
    let mut state = vec![0.0; n];
    let mut draws = vec![0.0; n];
    let mut advance = |state: &mut Vec<f64>, draws: &mut Vec<f64>, rng: &mut ChaCha8Rng| {
        for d in draws.iter_mut() {
            *d = normals.next(rng);
        }
        for i in 0..n {
            let mut mixed = 0.0;
            for k in 0..=i {
                mixed += resolved.factor[i][k] * draws[k];
            }
            state[i] = phi * state[i] + innovation_scale * mixed;
        }
    };
    for _ in 0..NOISE_WARMUP {
        advance(&mut state, &mut draws, &mut rng);
    }

    let period = spec.seasonal_period as f64;
    let mut deterministic = Vec::with_capacity(spec.months);
    let mut noise = Vec::with_capacity(spec.months);
    let mut latent = Vec::with_capacity(spec.months);
    let mut values = Vec::with_capacity(spec.months);
    for t in 0..spec.months {
        advance(&mut state, &mut draws, &mut rng);
        let mut det_row = Vec::with_capacity(n);
        let mut noise_row = Vec::with_capacity(n);
        let mut latent_row = Vec::with_capacity(n);
        let mut share_row = Vec::with_capacity(n);
        for i in 0..n {
            let det = resolved.base[i]
                + resolved.trend[i] * t as f64
                + resolved.amplitude[i]
                    * (std::f64::consts::TAU * t as f64 / period + resolved.phase[i]).sin();
            let nz = spec.noise_std * state[i];
            det_row.push(det);
            noise_row.push(nz);
            latent_row.push(det + nz);
            share_row.push(logistic(det + nz));
        }
        deterministic.push(det_row);
        noise.push(noise_row);
        latent.push(latent_row);
        values.push(share_row);
    }

    Ok(SynthPanel {
        panel: SkillSharePanel {
            skills: spec.skill_names(),
            range: MonthRange::new(0, spec.months),
            values,
            employment_mode: EmploymentMode::Contemporaneous,
        },
        deterministic,
        noise,
        latent,
    })
}

/// Skill appended to any sampled ad that would otherwise list no skills.
pub const FILLER_SKILL: &str = "general_requirements";

/// Samples a job-ad corpus plus annual employment records whose rebuilt
/// panel matches `panel` in expectation.
///
/// Every ad in occupation j at month t mentions skill i independently with
/// probability equal to the panel share. Because the employment weights sum
/// to one across occupations, the share definition applied to the sampled
/// ads then has expected value exactly the panel cell, for any employment
/// numbers.
pub fn generate_ads(
    spec: &SynthSpec,
    panel: &SkillSharePanel,
) -> Result<(Vec<JobAdRecord>, Vec<OccupationEmployment>)> {
    for (row, month) in panel.values.iter().zip(panel.range.iter()) {
        for (skill, p) in panel.skills.iter().zip(row) {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Spec(format!(
                    "share of {skill} at month {month} is {p}; cannot be used \
                     as an inclusion probability"
                )));
            }
        }
    }

    let codes = spec.occupation_codes();
    let first_year = DEFAULT_EPOCH_YEAR + panel.range.start.div_euclid(12);
    let last_year = DEFAULT_EPOCH_YEAR + (panel.range.end_exclusive() - 1).div_euclid(12);
    let mut employment = Vec::new();
    for (j, code) in codes.iter().enumerate() {
        for year in first_year..=last_year {
            employment.push(OccupationEmployment {
                occupation: code.clone(),
                year,
                employment: 1000 * (j as u64 + 1),
            });
        }
    }

    let mut ads = Vec::with_capacity(codes.len() * panel.n_months() * spec.ads_per_month);
    for code in &codes {
        for (row, month) in panel.values.iter().zip(panel.range.iter()) {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &format!("ads-{code}-{month}")));
            for a in 0..spec.ads_per_month {
                let mut skills: BTreeSet<String> = panel
                    .skills
                    .iter()
                    .zip(row)
                    .filter(|(_, p)| rng.gen::<f64>() < **p)
                    .map(|(skill, _)| skill.clone())
                    .collect();
                if skills.is_empty() {
                    skills.insert(FILLER_SKILL.to_string());
                }
                ads.push(JobAdRecord {
                    ad_id: format!("{code}-m{month}-{a}"),
                    month,
                    occupation: code.clone(),
                    skills,
                });
            }
        }
    }
    Ok((ads, employment))
}
