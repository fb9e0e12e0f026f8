//! `gridres` command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 gated attack whose best
//! restoration plan leaves some critical load unserved.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cve::{CveStore, NvdClient};
use crate::cvss::{parse_vector, CvssVector};
use crate::network::{build_modified_ieee33, load_network, Network};
use crate::report::{summary_csv, CvssBlock, PhaseInputs, RunReport, SummaryRow};
use crate::resilience::{
    baseline_reference, evaluate_attack, plan_restoration, resilience_trajectory, score_with_service, EvalConfig,
    MetricPolicy, ResilienceError,
};
use crate::scenario::{load_scenario, Scenario};
use crate::service::ServicePolicy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "gridres",
    version,
    about = "Cyber-attack resilience of radial distribution feeders"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    GridOnly,
    DerCapacity,
    CriticalPriority,
}

impl From<PolicyArg> for ServicePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::GridOnly => ServicePolicy::GridOnly,
            PolicyArg::DerCapacity => ServicePolicy::DerCapacity,
            PolicyArg::CriticalPriority => ServicePolicy::CriticalPriority,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricPolicyArg {
    FullGraph,
    GridComponent,
}

impl From<MetricPolicyArg> for MetricPolicy {
    fn from(p: MetricPolicyArg) -> Self {
        match p {
            MetricPolicyArg::FullGraph => MetricPolicy::FullGraph,
            MetricPolicyArg::GridComponent => MetricPolicy::GridComponent,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct StoreArgs {
    /// Never query the NVD API.
    #[arg(long)]
    pub offline: bool,
    /// JSON cache file for records fetched from NVD.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Extra CVE records (JSON array) that take precedence over everything else.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Network JSON file; defaults to the bundled modified IEEE 33-bus system.
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "der-capacity")]
    pub policy: PolicyArg,
    #[arg(long, value_enum, default_value = "full-graph")]
    pub metric_policy: MetricPolicyArg,
    /// Minimum CVSS base score that triggers evaluation.
    #[arg(long, default_value_t = crate::resilience::DEFAULT_GATE_THRESHOLD)]
    pub gate: f64,
    #[command(flatten)]
    pub store: StoreArgs,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a CVE id or a CVSS v3.1 vector.
    Score {
        /// CVE identifier, e.g. CVE-2017-7921.
        cve: Option<String>,
        #[arg(long, conflicts_with = "cve")]
        vector: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Run one attack scenario: gate, evaluate, restore.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Run every scenario file in a directory and print a summary table.
    Batch {
        /// Directory of scenario JSON files.
        #[arg(long)]
        scenarios: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Score {
            cve,
            vector,
            format,
            store,
        } => cmd_score(cve.as_deref(), vector.as_deref(), format, &store, stdout),
        Command::Simulate { scenario, format, eval } => cmd_simulate(&scenario, format, &eval, stdout),
        Command::Batch { scenarios, eval } => cmd_batch(&scenarios, &eval, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(stderr, "error: {message}");
            EXIT_INPUT
        }
    }
}

fn build_store(args: &StoreArgs) -> Result<CveStore, String> {
    let mut store = CveStore::offline();
    if let Some(path) = &args.cache {
        store = store.with_cache_file(path).map_err(|e| e.to_string())?;
    }
    if let Some(path) = &args.records {
        store.import_records(path).map_err(|e| e.to_string())?;
    }
    if !args.offline {
        store = store.with_remote(NvdClient::from_env());
    }
    Ok(store)
}

fn load_base_network(path: Option<&Path>) -> Result<Network, String> {
    match path {
        Some(p) => load_network(p).map_err(|e| e.to_string()),
        None => Ok(build_modified_ieee33()),
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

#[derive(Serialize)]
struct ScoreOutput {
    #[serde(flatten)]
    cvss: CvssBlock,
}

pub fn cmd_score(
    cve: Option<&str>,
    vector: Option<&str>,
    format: Format,
    store: &StoreArgs,
    stdout: &mut dyn Write,
) -> Result<i32, String> {
    let (cve, vector): (Option<String>, CvssVector) = match (cve, vector) {
        (_, Some(text)) => (None, parse_vector(text).map_err(|e| e.to_string())?),
        (Some(id), None) => {
            let store = build_store(store)?;
            let record = store.lookup(id).map_err(|e| e.to_string())?;
            let vector = record
                .vector
                .ok_or_else(|| format!("{id} has only a published score, no vector to evaluate"))?;
            (Some(id.to_string()), vector)
        }
        (None, None) => return Err("give a CVE id or --vector".into()),
    };
    let block = CvssBlock::new(cve, &vector, &vector.score());

    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&ScoreOutput { cvss: block }).expect("serializes");
            s.push('\n');
            s
        }
        Format::Csv => format!(
            "vector,base,severity,iss,impact,exploitability\n{},{:.1},{},{:.4},{:.4},{:.4}\n",
            block.vector, block.base, block.severity, block.iss, block.impact, block.exploitability
        ),
        Format::Text => {
            let mut s = String::new();
            if let Some(id) = &block.cve {
                s.push_str(&format!("cve:            {id}\n"));
            }
            s.push_str(&format!("vector:         {}\n", block.vector));
            s.push_str(&format!("base:           {:.1}\n", block.base));
            s.push_str(&format!("severity:       {}\n", block.severity));
            s.push_str(&format!("iss:            {:.4}\n", block.iss));
            s.push_str(&format!("impact:         {:.4}\n", block.impact));
            s.push_str(&format!("exploitability: {:.4}\n", block.exploitability));
            s
        }
    };
    emit(&text, None, stdout)?;
    Ok(EXIT_OK)
}

/// Evaluate one scenario end to end.
pub fn simulate(
    network: &Network,
    scenario: &Scenario,
    store: &CveStore,
    config: &EvalConfig,
) -> Result<RunReport, ResilienceError> {
    let assessment = evaluate_attack(network, scenario, store, config)?;
    let effective = EvalConfig {
        policy: assessment.policy,
        ..*config
    };
    let reference = baseline_reference(network)?;
    let (pre_score, pre_service) = score_with_service(network, &reference, &effective);

    let restored = match &assessment.attacked_network {
        Some(attacked) if assessment.gated => {
            let plan = plan_restoration(attacked, &reference, &effective)?;
            let trajectory = resilience_trajectory(&assessment, &plan)?;
            let network = attacked.close_switches(&plan.closed_switches)?;
            Some((network, plan, trajectory))
        }
        _ => None,
    };

    Ok(RunReport::build(
        &assessment,
        config.metric_policy,
        PhaseInputs {
            base: network,
            pre_attack: (&pre_score, &pre_service),
            restored: restored.as_ref().map(|(n, p, t)| (n, p, t.as_slice())),
        },
    ))
}

fn eval_config(args: &EvalArgs) -> EvalConfig {
    EvalConfig {
        policy: args.policy.into(),
        metric_policy: args.metric_policy.into(),
        gate_threshold: args.gate,
    }
}

fn exit_for(report: &RunReport) -> i32 {
    match &report.restoration {
        Some(r) if report.gated && !r.full_service => EXIT_PARTIAL,
        _ => EXIT_OK,
    }
}

pub fn cmd_simulate(scenario: &Path, format: Format, args: &EvalArgs, stdout: &mut dyn Write) -> Result<i32, String> {
    let network = load_base_network(args.network.as_deref())?;
    let scenario = load_scenario(scenario).map_err(|e| e.to_string())?;
    let store = build_store(&args.store)?;
    let report = simulate(&network, &scenario, &store, &eval_config(args)).map_err(|e| e.to_string())?;
    let text = match format {
        Format::Csv => report.to_csv(),
        Format::Json | Format::Text => report.to_json(),
    };
    emit(&text, args.out.as_deref(), stdout)?;
    Ok(exit_for(&report))
}

pub fn cmd_batch(dir: &Path, args: &EvalArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, String> {
    let network = load_base_network(args.network.as_deref())?;
    let store = build_store(&args.store)?;
    let config = eval_config(args);

    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for file in &files {
        let outcome = load_scenario(file)
            .map_err(|e| e.to_string())
            .and_then(|s| simulate(&network, &s, &store, &config).map_err(|e| e.to_string()));
        match outcome {
            Ok(report) => rows.push(SummaryRow::from(&report)),
            Err(message) => failures.push(format!("{}: {message}", file.display())),
        }
    }
    rows.sort_by(|a, b| a.scenario.cmp(&b.scenario));

    emit(&summary_csv(&rows), args.out.as_deref(), stdout)?;
    for failure in &failures {
        let _ = writeln!(stderr, "error: {failure}");
    }
    Ok(if failures.is_empty() { EXIT_OK } else { EXIT_INPUT })
}
