use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use secure_cdc::audit::{audit_all_nodes, audit_eavesdropper, AuditError, AuditReport, Method};
use secure_cdc::config::{load_pda, ConfigError, JobConfig, MatrixCheck, SabotageConfig};
use secure_cdc::gf2e::bits_to_hex;
use secure_cdc::mapreduce::{plaintext_output, MapFamily};
use secure_cdc::pda::{generate_mn_pda, load_coded, load_shuffle, serialize_pda, PdaError};
use secure_cdc::scheme::{SchemeError, SchemeRegistry};
use secure_cdc::secret_sharing::SharingError;

const EXIT_PARSE: u8 = 3;
const EXIT_VALIDATION: u8 = 4;
const EXIT_CONFIG: u8 = 5;
const EXIT_PROTOCOL: u8 = 6;
const EXIT_AUDIT: u8 = 7;

#[derive(Parser)]
#[command(name = "scdc", version, about = "Secure coded distributed computing over placement delivery arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a PDA file and print its parameters and loads.
    Validate { pda: PathBuf },
    /// Run map, shuffle and reduce, then write the transcript.
    Run {
        #[command(flatten)]
        job: JobArgs,
        #[arg(long, default_value = "transcript.txt")]
        transcript: PathBuf,
    },
    /// Exact security audit of a small job.
    Audit {
        #[command(flatten)]
        job: JobArgs,
        #[arg(long, value_enum, default_value_t = View::Default)]
        view: View,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Write the K-node, t-replication MN PDA.
    GenPda {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum View {
    /// Eavesdropper for t1, eavesdropper and every node for t2.
    Default,
    Eavesdropper,
    Nodes,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Enumeration,
    Linear,
}

/// Job settings: a config file, individual flags, or a config file with flag overrides.
#[derive(Args)]
struct JobArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    pda: Option<PathBuf>,
    #[arg(long)]
    eta: Option<usize>,
    #[arg(long)]
    z: Option<u32>,
    #[arg(long)]
    poly: Option<u64>,
    #[arg(long)]
    lsym: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// "generated" or a matrix file.
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long, value_enum)]
    matrix_check: Option<CheckArg>,
    #[arg(long, value_enum)]
    maps: Option<MapsArg>,
    /// Byte blob split into the input files.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    zero_pad_keys: bool,
    /// Zero the ramp-sharing keys (t2).
    #[arg(long)]
    zero_ramp_keys: bool,
    #[arg(long)]
    identity_matrix: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Strict,
    Ramp,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapsArg {
    Scalar,
    Blocked,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

fn scheme_code(e: &SchemeError) -> u8 {
    match e {
        SchemeError::Pda(_) => EXIT_VALIDATION,
        e if e.is_protocol() => EXIT_PROTOCOL,
        _ => EXIT_CONFIG,
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match &e {
            ConfigError::PdaText { .. } => EXIT_PARSE,
            ConfigError::Pda { .. } => EXIT_VALIDATION,
            ConfigError::MatrixText { source: SharingError::Parse { .. } | SharingError::NotSquare { .. }, .. } => EXIT_PARSE,
            ConfigError::Scheme(s) => scheme_code(s),
            _ => EXIT_CONFIG,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<SchemeError> for Failure {
    fn from(e: SchemeError) -> Self {
        Failure::new(scheme_code(&e), e.to_string())
    }
}

impl From<AuditError> for Failure {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::Scheme(s) => s.into(),
            e => Failure::new(EXIT_CONFIG, e.to_string()),
        }
    }
}

impl JobArgs {
    fn resolve(&self) -> Result<JobConfig, Failure> {
        let mut config = match &self.config {
            Some(path) => JobConfig::load(path)?,
            None => {
                let missing = |what: &str| Failure::new(EXIT_CONFIG, format!("--{what} is required without --config"));
                JobConfig {
                    scheme: self.scheme.clone().ok_or_else(|| missing("scheme"))?,
                    pda: self.pda.clone().ok_or_else(|| missing("pda"))?,
                    eta: self.eta.ok_or_else(|| missing("eta"))?,
                    z: None,
                    poly: None,
                    lsym: self.lsym.ok_or_else(|| missing("lsym"))?,
                    seed: None,
                    matrix: "generated".into(),
                    matrix_check: MatrixCheck::Strict,
                    maps: MapFamily::Scalar,
                    input: None,
                    sabotage: SabotageConfig::default(),
                }
            }
        };
        if let Some(v) = &self.scheme {
            config.scheme = v.clone();
        }
        if let Some(v) = &self.pda {
            config.pda = v.clone();
        }
        if let Some(v) = self.eta {
            config.eta = v;
        }
        if let Some(v) = self.lsym {
            config.lsym = v;
        }
        config.z = self.z.or(config.z);
        config.poly = self.poly.or(config.poly);
        config.seed = self.seed.or(config.seed);
        if let Some(v) = &self.matrix {
            config.matrix = v.clone();
        }
        if let Some(v) = self.matrix_check {
            config.matrix_check = match v {
                CheckArg::Strict => MatrixCheck::Strict,
                CheckArg::Ramp => MatrixCheck::Ramp,
            };
        }
        if let Some(v) = self.maps {
            config.maps = match v {
                MapsArg::Scalar => MapFamily::Scalar,
                MapsArg::Blocked => MapFamily::Blocked,
            };
        }
        if let Some(v) = &self.input {
            config.input = Some(v.clone());
        }
        config.sabotage.zero_pad_keys |= self.zero_pad_keys;
        config.sabotage.zero_ramp_keys |= self.zero_ramp_keys;
        config.sabotage.identity_matrix |= self.identity_matrix;
        Ok(config)
    }
}

fn validate(path: &Path) -> Result<(), Failure> {
    let pda = load_pda(path)?;
    let (k, f, z, s) = pda.params();
    println!("valid PDA (K,F,Z,S) = ({k},{f},{z},{s})");
    let histogram: Vec<String> = pda.occurrences().histogram().iter().map(|(g, n)| format!("g={g}:{n}")).collect();
    println!("S_g histogram: {}", histogram.join(" "));
    println!("t1 loads: {}", load_shuffle(&pda));
    match load_coded(&pda) {
        Ok(loads) => println!("t2 loads: {loads}"),
        Err(e) => println!("t2 loads: unavailable ({e})"),
    }
    Ok(())
}

fn gen_pda(k: usize, t: usize, output: Option<&Path>) -> Result<(), Failure> {
    let pda = generate_mn_pda(k, t).map_err(|e: PdaError| Failure::new(EXIT_CONFIG, e.to_string()))?;
    let text = format!("# MN PDA K={k} t={t}\n{}", serialize_pda(&pda));
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
            let (k, f, z, s) = pda.params();
            println!("wrote {} (K,F,Z,S) = ({k},{f},{z},{s})", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(args: &JobArgs, transcript_path: &Path) -> Result<(), Failure> {
    let config = args.resolve()?;
    let registry = SchemeRegistry::builtin();
    let (scheme, job) = config.build(&registry)?;
    let mut rng = config.rng();
    let files = config.files(scheme, &job, &mut rng)?;
    let randomness = scheme.randomness_shape(&job).sample(&mut rng);
    let exec = scheme.execute(&job, &files, &randomness)?;

    println!("scheme: {} ({})", scheme.name(), scheme.summary());
    println!("job: {}", job.describe());
    println!("files: {}", files.len());
    let mut oracle_ok = true;
    for (k, out) in exec.outputs.iter().enumerate() {
        let expected = plaintext_output(&job.map_function(k + 1), &files).map_err(|e| Failure::new(EXIT_PROTOCOL, e.to_string()))?;
        let status = if *out == expected { "ok" } else { "MISMATCH" };
        oracle_ok &= *out == expected;
        println!("node {} output {} oracle {status}", k + 1, bits_to_hex(&out.to_bits()));
    }
    let formula = scheme.formula_loads(job.pda())?;
    println!("measured loads: {}", exec.loads);
    println!("formula loads:  {formula}");
    let header = vec![
        format!("scheme={}", scheme.name()),
        job.describe(),
        format!("seed={}", config.seed.map_or("entropy".to_string(), |s| s.to_string())),
    ];
    fs::write(transcript_path, exec.transcript.to_text(&header))
        .map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", transcript_path.display())))?;
    println!("transcript: {} ({} messages, {} bits)", transcript_path.display(), exec.transcript.len(), exec.transcript.total_bits());
    if exec.loads != formula {
        return Err(Failure::new(EXIT_PROTOCOL, format!("measured loads {} differ from formula {formula}", exec.loads)));
    }
    if !oracle_ok {
        return Err(Failure::new(EXIT_PROTOCOL, "decoded outputs differ from the plaintext oracle"));
    }
    Ok(())
}

fn audit(args: &JobArgs, view: View, method: MethodArg) -> Result<(), Failure> {
    let config = args.resolve()?;
    let registry = SchemeRegistry::builtin();
    let (scheme, job) = config.build(&registry)?;
    let method = match method {
        MethodArg::Auto => Method::Auto,
        MethodArg::Enumeration => Method::Enumeration,
        MethodArg::Linear => Method::Linear,
    };
    let (eavesdropper, nodes) = match view {
        View::Default => (true, scheme.name() == "t2"),
        View::Eavesdropper => (true, false),
        View::Nodes => (false, true),
        View::All => (true, true),
    };
    let mut reports: Vec<AuditReport> = Vec::new();
    if eavesdropper {
        reports.push(audit_eavesdropper(scheme, &job, method)?);
    }
    if nodes {
        reports.extend(audit_all_nodes(scheme, &job, method)?);
    }
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            println!();
        }
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(Failure::new(EXIT_AUDIT, format!("{failed} of {} audits failed", reports.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { pda } => validate(pda),
        Command::Run { job, transcript } => run(job, transcript),
        Command::Audit { job, view, method } => audit(job, *view, *method),
        Command::GenPda { k, t, output } => gen_pda(*k, *t, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
