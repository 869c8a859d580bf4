//! TOML run configuration. Every table rejects unknown keys.

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticConfig, TauSchedule};
use crate::error::{Error, Result};
use crate::experiments::StepRule;
use crate::model::{Beta, Grid, Kernel, Nonlinearity, Pi, ProblemData, Profile, Source, TimeProfile};
use crate::scalar::ScalarSolveConfig;
use crate::stepper::StepConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridSection,
    #[serde(default)]
    pub coefficients: Coefficients,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Nodes per axis; one entry in 1D, two in 2D.
    pub nodes: Vec<usize>,
    /// Domain side lengths, one per axis.
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub ell: f64,
    pub eta: f64,
    pub epsilon: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self {
            ell: 1.0,
            eta: 1.0,
            epsilon: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub final_time: f64,
    pub steps: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            final_time: 1.0,
            steps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSection {
    Gaussian { sigma: f64, radius: f64 },
    Hat { radius: f64 },
    Zero,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection::Gaussian {
            sigma: 0.1,
            radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    /// Coefficient `c` in `beta(r) = c r^3`; zero switches `beta` off.
    pub beta_coef: f64,
    /// `pi(r) = pi_kappa (pi_center - r)`.
    pub pi_kappa: f64,
    pub pi_center: f64,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        Self {
            beta_coef: 1.0,
            pi_kappa: 1.0,
            pi_center: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant { value: f64 },
    Cosine { mean: f64, amplitude: f64, mode: u32 },
    Gaussian { base: f64, amplitude: f64, center: Vec<f64>, width: f64 },
}

impl ProfileSpec {
    fn to_profile(&self) -> Result<Profile<f64>> {
        Ok(match self {
            ProfileSpec::Constant { value } => Profile::Constant { value: *value },
            ProfileSpec::Cosine { mean, amplitude, mode } => Profile::Cosine {
                mean: *mean,
                amplitude: *amplitude,
                mode: *mode,
            },
            ProfileSpec::Gaussian { base, amplitude, center, width } => Profile::Gaussian {
                base: *base,
                amplitude: *amplitude,
                center: centre(center)?,
                width: *width,
            },
        })
    }
}

fn centre(c: &[f64]) -> Result<[f64; 2]> {
    match c {
        [x] => Ok([*x, 0.0]),
        [x, y] => Ok([*x, *y]),
        _ => Err(Error::InvalidInput(format!(
            "profile center needs 1 or 2 coordinates, got {}",
            c.len()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub theta: ProfileSpec,
    pub phi: ProfileSpec,
    pub v: ProfileSpec,
    /// Required lower bound of `theta`.
    pub theta_floor: f64,
}

impl Default for Initial {
    fn default() -> Self {
        Self {
            theta: ProfileSpec::Cosine {
                mean: 1.0,
                amplitude: 0.5,
                mode: 1,
            },
            phi: ProfileSpec::Cosine {
                mean: 0.0,
                amplitude: 0.5,
                mode: 1,
            },
            v: ProfileSpec::Constant { value: 0.0 },
            theta_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSection {
    #[default]
    Zero,
    /// `amplitude exp(-|x - center|^2 / (2 width^2)) cos(omega t)`.
    Bump {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
        #[serde(default)]
        omega: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub fp_tol: f64,
    pub max_fp_iter: usize,
    pub ratio_floor: f64,
    pub elliptic_tol: f64,
    pub continuation_tol: f64,
    pub max_newton: usize,
    pub positivity_floor: f64,
    pub tau_start: f64,
    pub tau_factor: f64,
    pub tau_min: f64,
    pub scalar_tol: f64,
    pub scalar_max_iter: usize,
    pub bracket_growth: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = StepConfig::<f64>::default();
        Self {
            fp_tol: s.fp_tol,
            max_fp_iter: s.max_fp_iter,
            ratio_floor: s.ratio_floor,
            elliptic_tol: s.elliptic.tol_rel,
            continuation_tol: s.elliptic.continuation_tol_rel,
            max_newton: s.elliptic.max_newton,
            positivity_floor: s.elliptic.positivity_floor,
            tau_start: 0.1,
            tau_factor: 4.0,
            tau_min: 1e-10,
            scalar_tol: s.scalar.tol_abs,
            scalar_max_iter: s.scalar.max_iter,
            bracket_growth: s.scalar.bracket_growth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    /// Coarsest step count of the refinement study; level `k` uses `base_steps 2^k`.
    pub base_steps: usize,
    pub levels: usize,
    pub epsilons: Vec<f64>,
    pub safety: f64,
    pub h_base: f64,
    pub delta: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            base_steps: 16,
            levels: 4,
            epsilons: vec![0.1, 0.05, 0.025, 0.0125],
            safety: 0.25,
            h_base: 0.25,
            delta: 0.25,
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self {
            grid: GridSection {
                nodes: vec![16],
                lengths: vec![1.0],
            },
            coefficients: Coefficients::default(),
            time: TimeSection::default(),
            kernel: KernelSection::default(),
            nonlinearity: NonlinearitySection::default(),
            initial: Initial::default(),
            source: SourceSection::default(),
            solver: SolverSection::default(),
            study: StudySection::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical serialization used for the manifest digest.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn problem(&self) -> Result<ProblemData<f64>> {
        let grid = Grid::new(&self.grid.nodes, &self.grid.lengths)?;
        let kernel = match self.kernel {
            KernelSection::Gaussian { sigma, radius } => Kernel::gaussian(sigma, radius),
            KernelSection::Hat { radius } => Kernel::hat(radius),
            KernelSection::Zero => Kernel::zero(),
        };
        let nl = &self.nonlinearity;
        let nonlin = Nonlinearity {
            beta: if nl.beta_coef == 0.0 {
                Beta::Zero
            } else {
                Beta::Cubic { coef: nl.beta_coef }
            },
            pi: Pi::Linear {
                kappa: nl.pi_kappa,
                center: nl.pi_center,
            },
        };
        let source = match &self.source {
            SourceSection::Zero => Source::Zero,
            SourceSection::Bump { amplitude, center, width, omega } => Source::Separable {
                spatial: Profile::Gaussian {
                    base: 0.0,
                    amplitude: *amplitude,
                    center: centre(center)?,
                    width: *width,
                }
                .sample(&grid),
                time: if *omega == 0.0 {
                    TimeProfile::Constant
                } else {
                    TimeProfile::Cosine { omega: *omega }
                },
            },
        };
        Ok(ProblemData {
            ell: self.coefficients.ell,
            eta: self.coefficients.eta,
            epsilon: self.coefficients.epsilon,
            theta0: self.initial.theta.to_profile()?.sample(&grid),
            phi0: self.initial.phi.to_profile()?.sample(&grid),
            v0: self.initial.v.to_profile()?.sample(&grid),
            grid,
            kernel,
            nonlin,
            source,
            final_time: self.time.final_time,
            theta_min_input: self.initial.theta_floor,
        })
    }

    pub fn step_config(&self) -> StepConfig<f64> {
        let s = &self.solver;
        StepConfig {
            fp_tol: s.fp_tol,
            max_fp_iter: s.max_fp_iter,
            ratio_floor: s.ratio_floor,
            elliptic: EllipticConfig {
                tol_rel: s.elliptic_tol,
                continuation_tol_rel: s.continuation_tol,
                max_newton: s.max_newton,
                positivity_floor: s.positivity_floor,
                schedule: TauSchedule::geometric(s.tau_start, s.tau_factor, s.tau_min),
                direct_when_warm: true,
            },
            scalar: ScalarSolveConfig {
                tol_abs: s.scalar_tol,
                max_iter: s.scalar_max_iter,
                bracket_growth: s.bracket_growth,
                ..ScalarSolveConfig::default()
            },
        }
    }

    pub fn step_rule(&self) -> StepRule {
        StepRule {
            safety: self.study.safety,
            h_base: self.study.h_base,
        }
    }

    /// Nested step counts `base_steps 2^k`, `k < levels`.
    pub fn study_steps(&self, levels: usize) -> Vec<usize> {
        (0..levels).map(|k| self.study.base_steps << k).collect()
    }
}
