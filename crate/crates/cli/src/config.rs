//! Scenario configuration: one TOML file, physical units in the key names,
//! paths relative to the file's directory.

use std::path::{Path, PathBuf};

use ptmoments::qstate::{HamiltonianSpec, Model, PartitionSpec, MAX_QUBITS};
use ptmoments::randmeas::Ensemble;
use ptmoments::shadows::{Method, Statistic};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Ghz,
    NeelQuench,
    TfimGround,
    Werner,
    FromFile,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub model: Model,
    pub j0_per_s: Option<f64>,
    pub alpha: Option<f64>,
    pub b_field_per_s: Option<f64>,
    /// Overall TFIM coupling (dimensionless).
    pub j_tfim: Option<f64>,
    /// TFIM field in units of the coupling; 1 is critical.
    pub transverse_field: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WernerConfig {
    pub d: Option<usize>,
    pub alpha: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub alpha_points: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub ab_sizes: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_sweep_statistics")]
    pub statistics: Vec<Statistic>,
}

fn default_sweep_statistics() -> Vec<Statistic> {
    vec![Statistic::P2, Statistic::P3]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub state: StateKind,
    pub n_qubits: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub m: Option<usize>,
    pub p: Option<usize>,
    #[serde(default)]
    pub ensemble: Ensemble,
    #[serde(default)]
    pub depolarize_strength: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub partitions: Vec<String>,
    #[serde(default)]
    pub times_ms: Vec<f64>,
    #[serde(default)]
    pub statistics: Vec<Statistic>,
    #[serde(default)]
    pub dataset_files: Vec<PathBuf>,
    pub method: Option<Method>,
    pub k_groups: Option<usize>,
    pub hamiltonian: Option<HamiltonianConfig>,
    #[serde(default)]
    pub werner: WernerConfig,
    pub sweep: Option<SweepConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that replace config entries.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub m: Option<usize>,
    pub p: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl Config {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<(Config, Vec<u8>)> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
        let mut cfg: Config = toml::from_str(text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.dataset_files = cfg.dataset_files.iter().map(|f| base.join(f)).collect();
        if let Some(m) = overrides.m {
            cfg.m = Some(m);
        }
        if let Some(p) = overrides.p {
            cfg.p = Some(p);
        }
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &overrides.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok((cfg, bytes))
    }

    fn validate(&self) -> CliResult<()> {
        if let Some(n) = self.n_qubits {
            if n == 0 || n > MAX_QUBITS {
                return Err(invalid("n_qubits", format!("{n} outside 1..={MAX_QUBITS}")));
            }
        }
        if !(0.0..=1.0).contains(&self.depolarize_strength) {
            return Err(invalid("depolarize_strength", "must lie in [0, 1]"));
        }
        for (i, t) in self.times_ms.iter().enumerate() {
            if !t.is_finite() || *t < 0.0 {
                return Err(invalid(
                    &format!("times_ms[{i}]"),
                    format!("{t} is not a time >= 0"),
                ));
            }
        }
        if self.m == Some(0) {
            return Err(invalid("m", "must be positive"));
        }
        if self.p == Some(0) {
            return Err(invalid("p", "must be positive"));
        }
        self.partitions()?;
        Ok(())
    }

    pub fn n_qubits(&self) -> CliResult<usize> {
        match self.state {
            StateKind::Werner => Ok(2),
            _ => self
                .n_qubits
                .ok_or_else(|| invalid("n_qubits", "required for this state")),
        }
    }

    /// Configured times, or 0 to 5 ms in 0.5 ms steps.
    pub fn times_ms(&self) -> Vec<f64> {
        if self.times_ms.is_empty() {
            (0..=10).map(|i| i as f64 * 0.5).collect()
        } else {
            self.times_ms.clone()
        }
    }

    pub fn m(&self) -> CliResult<usize> {
        self.m
            .ok_or_else(|| invalid("m", "required (config or --m)"))
    }

    pub fn p(&self) -> CliResult<usize> {
        Ok(self.p.unwrap_or(1))
    }

    /// Parsed partitions; sites are checked against `n_qubits` when known.
    pub fn partitions(&self) -> CliResult<Vec<PartitionSpec>> {
        self.partitions
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let field = format!("partitions[{i}]");
                let part: PartitionSpec = s
                    .parse()
                    .map_err(|e: ptmoments::Error| invalid(&field, e))?;
                let n = match self.state {
                    StateKind::Werner => Some(2),
                    _ => self.n_qubits,
                };
                if let Some(n) = n {
                    part.check_within(n).map_err(|e| invalid(&field, e))?;
                }
                Ok(part)
            })
            .collect()
    }

    pub fn require_partitions(&self) -> CliResult<Vec<PartitionSpec>> {
        let parts = self.partitions()?;
        if parts.is_empty() {
            return Err(invalid("partitions", "at least one partition is required"));
        }
        Ok(parts)
    }

    pub fn hamiltonian_spec(&self, n: usize) -> CliResult<HamiltonianSpec> {
        let h = self
            .hamiltonian
            .as_ref()
            .ok_or_else(|| invalid("hamiltonian", "section required for this state"))?;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| invalid(&format!("hamiltonian.{key}"), "required"))
        };
        let spec = match h.model {
            Model::Xy => HamiltonianSpec::xy(
                n,
                need(h.j0_per_s, "j0_per_s")?,
                need(h.alpha, "alpha")?,
                h.b_field_per_s.unwrap_or(0.0),
            ),
            Model::Tfim => {
                let mut spec = HamiltonianSpec::tfim(n, h.j_tfim.unwrap_or(1.0));
                spec.b_field = h.transverse_field.unwrap_or(1.0);
                spec
            }
        };
        spec.validate().map_err(|e| invalid("hamiltonian", e))?;
        Ok(spec)
    }

    pub fn statistics(&self) -> Vec<Statistic> {
        if self.statistics.is_empty() {
            vec![Statistic::P2, Statistic::P3, Statistic::S3]
        } else {
            self.statistics.clone()
        }
    }

    pub fn werner_d(&self, cli: Option<usize>) -> CliResult<usize> {
        let d = cli.or(self.werner.d).unwrap_or(2);
        if !(2..=8).contains(&d) {
            return Err(invalid("werner.d", format!("{d} outside 2..=8")));
        }
        Ok(d)
    }

    pub fn werner_alpha(&self) -> CliResult<f64> {
        let a = self
            .werner
            .alpha
            .ok_or_else(|| invalid("werner.alpha", "required for a Werner state"))?;
        if !(0.0..=1.0).contains(&a) {
            return Err(invalid("werner.alpha", format!("{a} outside [0, 1]")));
        }
        Ok(a)
    }

    pub fn werner_grid(&self) -> CliResult<Vec<f64>> {
        if let Some(grid) = &self.werner.alpha_grid {
            if grid.is_empty() || grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(invalid("werner.alpha_grid", "values must lie in [0, 1]"));
            }
            return Ok(grid.clone());
        }
        let n = self.werner.alpha_points.unwrap_or(101);
        if n < 2 {
            return Err(invalid("werner.alpha_points", "need at least 2 points"));
        }
        Ok((0..n).map(|i| i as f64 / (n - 1) as f64).collect())
    }

    pub fn sweep(&self) -> CliResult<&SweepConfig> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| invalid("sweep", "section required"))?;
        if s.ab_sizes.is_empty() || s.ab_sizes.iter().any(|&k| k < 2) {
            return Err(invalid("sweep.ab_sizes", "need sizes >= 2"));
        }
        if s.m_grid.is_empty() || s.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(
                "sweep.m_grid",
                "must be non-empty and strictly increasing",
            ));
        }
        if s.trials < 10 {
            return Err(invalid("sweep.trials", "need at least 10 trials"));
        }
        Ok(s)
    }
}
