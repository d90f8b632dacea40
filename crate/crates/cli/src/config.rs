//! Experiment configuration: one TOML file with `[problem]`, `[solver]`,
//! `[output]` and an optional `[checks]` table. See the repository README for
//! the full schema and an annotated example.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use dfsdca::problems::{generate, load_libsvm, problem_from_dataset, Family, GeneratorSpec};
use dfsdca::{ConvexityClass, GlmKind, Problem};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Synthetic problem from a seeded generator.
    Generate {
        family: FamilyConfig,
        n: usize,
        d: usize,
        lambda: f64,
        seed: u64,
        #[serde(default)]
        noise: Option<f64>,
        #[serde(default)]
        eig_min: Option<f64>,
        #[serde(default)]
        eig_max: Option<f64>,
        #[serde(default)]
        psd_margin: Option<f64>,
        #[serde(default)]
        require_indefinite: Option<bool>,
    },
    /// LIBSVM-format dataset on disk, wrapped in the chosen loss.
    Dataset {
        path: PathBuf,
        loss: LossConfig,
        lambda: f64,
        #[serde(default)]
        d_override: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyConfig {
    Ridge,
    Logistic,
    IndefiniteQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossConfig {
    Squared,
    Logistic,
    SmoothedHinge,
}

impl From<LossConfig> for GlmKind {
    fn from(loss: LossConfig) -> Self {
        match loss {
            LossConfig::Squared => GlmKind::Squared,
            LossConfig::Logistic => GlmKind::Logistic,
            LossConfig::SmoothedHinge => GlmKind::SmoothedHinge,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub eta: EtaConfig,
    pub steps: u64,
    pub seeds: Vec<u64>,
    pub snapshot_every: u64,
    /// SGD step schedule; ignored for the dual-table solver.
    #[serde(default)]
    pub schedule: ScheduleConfig,
    /// Worker threads for the per-seed runs; defaults to the available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Gradient-warm start: alpha0_i = -grad phi_i(w0) at this point. The
    /// default is the all-zero dual table.
    #[serde(default)]
    pub warm_start_w0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Sdca,
    Sgd,
}

/// Either a named rule or an explicit step size.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum EtaConfig {
    Named(EtaMode),
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMode {
    AutoConvex,
    AutoNonconvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleConfig {
    #[default]
    Constant,
    Decaying,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    /// Assert the exact one-step contraction of the regime's Lyapunov
    /// potential at every snapshot.
    #[serde(default)]
    pub contraction: bool,
    /// Assert the self-bound inequality at every snapshot (convex components
    /// only).
    #[serde(default)]
    pub self_bound: bool,
    /// Assert the per-step evolution identities of both base potentials.
    #[serde(default)]
    pub evolution: bool,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: Self = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        let violations = config.static_violations();
        if !violations.is_empty() {
            bail!("invalid config:\n  - {}", violations.join("\n  - "));
        }
        Ok(config)
    }

    /// Every statically checkable violation, so one failed run reports all
    /// problems at once.
    pub fn static_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.problem {
            ProblemConfig::Generate {
                family,
                n,
                d,
                lambda,
                noise,
                eig_min,
                eig_max,
                ..
            } => {
                if *n == 0 {
                    out.push("problem.n must be at least 1".into());
                }
                if *d == 0 {
                    out.push("problem.d must be at least 1".into());
                }
                if lambda.is_nan() || *lambda <= 0.0 {
                    out.push(format!("problem.lambda must be positive, got {lambda}"));
                }
                if let Some(noise) = noise {
                    if *noise < 0.0 {
                        out.push(format!("problem.noise must be nonnegative, got {noise}"));
                    }
                }
                if *family != FamilyConfig::IndefiniteQuadratic
                    && (eig_min.is_some() || eig_max.is_some())
                {
                    out.push("eigenvalue knobs apply only to the indefinite_quadratic family".into());
                }
                if let (Some(lo), Some(hi)) = (eig_min, eig_max) {
                    if lo.is_nan() || hi.is_nan() || lo >= hi {
                        out.push(format!("problem.eig_min {lo} must be below eig_max {hi}"));
                    }
                }
            }
            ProblemConfig::Dataset { lambda, .. } => {
                if lambda.is_nan() || *lambda <= 0.0 {
                    out.push(format!("problem.lambda must be positive, got {lambda}"));
                }
            }
        }
        if self.solver.seeds.is_empty() {
            out.push("solver.seeds must list at least one seed".into());
        }
        if self.solver.snapshot_every == 0 {
            out.push("solver.snapshot_every must be at least 1".into());
        }
        if let EtaConfig::Explicit(eta) = self.solver.eta {
            if eta.is_nan() || eta <= 0.0 {
                out.push(format!("solver.eta must be positive, got {eta}"));
            }
        }
        if self.solver.kind == SolverKind::Sgd {
            if self.checks.contraction {
                out.push("checks.contraction needs the dual-table solver".into());
            }
            if self.checks.evolution {
                out.push("checks.evolution needs the dual-table solver".into());
            }
        }
        out
    }

    /// Builds the problem this config describes.
    pub fn build_problem(&self) -> anyhow::Result<Problem> {
        match &self.problem {
            ProblemConfig::Generate {
                family,
                n,
                d,
                lambda,
                seed,
                noise,
                eig_min,
                eig_max,
                psd_margin,
                require_indefinite,
            } => {
                let mut spec = match family {
                    FamilyConfig::Ridge => GeneratorSpec::ridge(*n, *d, *lambda, *seed),
                    FamilyConfig::Logistic => GeneratorSpec::logistic(*n, *d, *lambda, *seed),
                    FamilyConfig::IndefiniteQuadratic => {
                        GeneratorSpec::indefinite_quadratic(*n, *d, *lambda, *seed)
                    }
                };
                if let Some(noise) = noise {
                    spec.noise = *noise;
                }
                if let Some(lo) = eig_min {
                    spec.eig_range.0 = *lo;
                }
                if let Some(hi) = eig_max {
                    spec.eig_range.1 = *hi;
                }
                if let Some(margin) = psd_margin {
                    spec.psd_margin = *margin;
                }
                if let Some(req) = require_indefinite {
                    spec.require_indefinite = *req;
                }
                debug_assert_eq!(spec.family, family_of(*family));
                generate(&spec).context("problem generation failed")
            }
            ProblemConfig::Dataset {
                path,
                loss,
                lambda,
                d_override,
            } => {
                let rows = load_libsvm(path, *d_override)?;
                if rows.is_empty() {
                    bail!("dataset {} holds no rows", path.display());
                }
                Ok(problem_from_dataset(rows, (*loss).into(), *lambda)?)
            }
        }
    }

    /// Resolves the configured step size against a built problem. The
    /// auto-convex rule insists on an each-convex certificate, and explicit
    /// values must keep beta = eta lambda n below one (checked by the solver's
    /// hyper-parameter construction downstream).
    pub fn resolve_eta(&self, problem: &Problem) -> anyhow::Result<f64> {
        let eta = match self.solver.eta {
            EtaConfig::Named(EtaMode::AutoConvex) => {
                if problem.convexity() != ConvexityClass::EachConvex {
                    bail!(
                        "eta = \"auto_convex\" needs every component convex; this problem is \
                         only convex on average (use \"auto_nonconvex\" or an explicit value)"
                    );
                }
                dfsdca::step_size_convex(problem.smoothness(), problem.lambda(), problem.n())?
            }
            EtaConfig::Named(EtaMode::AutoNonconvex) => {
                dfsdca::step_size_nonconvex(problem.smoothness(), problem.lambda(), problem.n())?
            }
            EtaConfig::Explicit(eta) => eta,
        };
        Ok(eta)
    }
}

fn family_of(family: FamilyConfig) -> Family {
    match family {
        FamilyConfig::Ridge => Family::Ridge,
        FamilyConfig::Logistic => Family::LogisticSynth,
        FamilyConfig::IndefiniteQuadratic => Family::IndefiniteQuadratic,
    }
}
