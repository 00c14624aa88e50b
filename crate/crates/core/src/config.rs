//! TOML job configuration.
//!
//! ```toml
//! scheme = "t2"
//! pda = "p1.pda"            # relative to the config file
//! eta = 2
//! z = 3                     # optional, defaults to the smallest field for F
//! lsym = 1
//! seed = 7                  # optional, OS entropy when absent
//! matrix = "p1_cauchy_gf8.mat"   # or "generated" (default)
//! matrix_check = "strict"   # or "ramp"
//! maps = "scalar"           # or "blocked"
//! input = "files.bin"       # optional, random files when absent
//!
//! [sabotage]
//! zero_pad_keys = false
//! zero_ramp_keys = false
//! identity_matrix = false
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2e::{field_for, FieldSpec, GfError, SymbolVec};
use crate::mapreduce::{split_blob, MapFamily, MapReduceError};
use crate::pda::{parse_pda, validate, ParseError, Pda, PdaError};
use crate::scheme::{random_files, Job, Sabotage, Scheme, SchemeError, SchemeRegistry};
use crate::secret_sharing::{build_cauchy, ingest_literal_matrix, parse_matrix, ShareMatrix, SharingError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid job config: {0}")]
    Toml(String),
    #[error("{path}: {source}")]
    PdaText { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Pda { path: PathBuf, source: PdaError },
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("{path}: {source}")]
    MatrixText { path: PathBuf, source: SharingError },
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: MapReduceError },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixCheck {
    /// Every square submatrix must be full rank.
    #[default]
    Strict,
    /// Invertible, with full-rank key blocks for the PDA's `Z`.
    Ramp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SabotageConfig {
    pub zero_pad_keys: bool,
    pub zero_ramp_keys: bool,
    pub identity_matrix: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub scheme: String,
    pub pda: PathBuf,
    pub eta: usize,
    #[serde(default)]
    pub z: Option<u32>,
    /// Irreducible polynomial for GF(2^z), bit `i` the coefficient of `x^i`.
    #[serde(default)]
    pub poly: Option<u64>,
    pub lsym: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "generated")]
    pub matrix: String,
    #[serde(default)]
    pub matrix_check: MatrixCheck,
    #[serde(default)]
    pub maps: MapFamily,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub sabotage: SabotageConfig,
}

fn generated() -> String {
    "generated".into()
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Reads and validates a PDA file.
pub fn load_pda(path: &Path) -> Result<Pda, ConfigError> {
    let grid = parse_pda(&read(path)?).map_err(|source| ConfigError::PdaText { path: path.to_path_buf(), source })?;
    validate(grid).map_err(|source| ConfigError::Pda { path: path.to_path_buf(), source })
}

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Loads a config file, resolving its paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut config = Self::from_toml(&read(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.pda = base.join(&config.pda);
        if config.matrix != "generated" {
            config.matrix = base.join(&config.matrix).to_string_lossy().into_owned();
        }
        config.input = config.input.map(|p| base.join(p));
        Ok(config)
    }

    pub fn field(&self, pda: &Pda) -> Result<FieldSpec, ConfigError> {
        Ok(match (self.z, self.poly) {
            (Some(z), Some(poly)) => FieldSpec::new(z, poly)?,
            (Some(z), None) => FieldSpec::canonical(z)?,
            (None, Some(_)) => return Err(ConfigError::Toml("poly needs z".into())),
            (None, None) => field_for(pda.f()),
        })
    }

    pub fn sabotage(&self) -> Sabotage {
        Sabotage {
            zero_pad_keys: self.sabotage.zero_pad_keys,
            zero_ramp_keys: self.sabotage.zero_ramp_keys,
            identity_matrix: self.sabotage.identity_matrix,
        }
    }

    /// Seeded RNG, or one from OS entropy.
    pub fn rng(&self) -> ChaCha8Rng {
        match self.seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_entropy(),
        }
    }

    fn share_matrix(&self, pda: &Pda, spec: FieldSpec) -> Result<ShareMatrix, ConfigError> {
        if self.matrix == "generated" {
            return Ok(build_cauchy(pda.f(), spec)?);
        }
        let path = PathBuf::from(&self.matrix);
        let rows = parse_matrix(&read(&path)?).map_err(|source| ConfigError::MatrixText { path: path.clone(), source })?;
        let d = match self.matrix_check {
            MatrixCheck::Strict => ingest_literal_matrix(&rows, spec),
            MatrixCheck::Ramp => ShareMatrix::ramp_checked(&rows, spec, pda.z()),
        };
        d.map_err(|source| ConfigError::MatrixText { path, source })
    }

    /// Resolves the scheme and builds the job.
    pub fn build<'r>(&self, registry: &'r SchemeRegistry) -> Result<(&'r dyn Scheme, Job), ConfigError> {
        let scheme = registry.get(&self.scheme)?;
        let pda = load_pda(&self.pda)?;
        let spec = self.field(&pda)?;
        let needs_matrix = scheme.name() == "t2" && !self.sabotage.identity_matrix;
        let matrix = if needs_matrix { Some(self.share_matrix(&pda, spec)?) } else { None };
        let mut job = Job::new(Arc::new(pda), self.eta, spec, self.lsym)?
            .with_sabotage(self.sabotage())
            .with_family(self.maps);
        if let Some(d) = matrix {
            job = job.with_matrix(d);
        }
        scheme.check(&job)?;
        Ok((scheme, job))
    }

    /// Input files from the configured blob, or sampled from `rng`.
    pub fn files(&self, scheme: &dyn Scheme, job: &Job, rng: &mut ChaCha8Rng) -> Result<Vec<SymbolVec>, ConfigError> {
        let count = scheme.file_count(job.pda(), job.eta());
        match &self.input {
            None => Ok(random_files(job, count, rng)),
            Some(path) => {
                let blob = fs::read(path).map_err(|e| ConfigError::Io { path: path.clone(), message: e.to_string() })?;
                split_blob(&blob, job.spec(), job.file_symbols(), count)
                    .map_err(|source| ConfigError::Input { path: path.clone(), source })
            }
        }
    }
}
