use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use pbqos::harness::{load_config, run_scenario, write_outputs, RunOptions};
use pbqos::policy::{parse_policy_file, parse_rule};
use pbqos::rms::{compile_with, ClassAllocator, TcRenderer};

/// Environment variable naming the default output directory of `run`.
const OUT_ENV: &str = "PBQOS_OUT";
/// Environment variable naming the staged policy file.
const STAGE_ENV: &str = "PBQOS_STAGE";
const DEFAULT_STAGE: &str = "pbqos-staged.policy";

#[derive(Parser)]
#[command(
    name = "pbqos",
    version,
    about = "Policy-driven DiffServ QoS scenarios on a network simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its series, audit log, summary and manifest.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $PBQOS_OUT, else out/<scenario>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Time compression factor; must divide 1000.
        #[arg(long)]
        compress: Option<u64>,
        /// Staged policy file (default: $PBQOS_STAGE, else ./pbqos-staged.policy).
        #[arg(long)]
        stage: Option<PathBuf>,
        /// Keep staged rules after the run instead of consuming them.
        #[arg(long)]
        keep_stage: bool,
        /// Hash every packet event into the summary.
        #[arg(long)]
        event_log: bool,
    },
    /// Check a scenario file and its policy file.
    Validate { config: PathBuf },
    /// Print the tc commands a policy file compiles to.
    RenderTc { policy: PathBuf },
    /// Stage a rule for the next run.
    ApplyPolicy {
        rule: String,
        #[arg(long)]
        stage: Option<PathBuf>,
    },
}

fn stage_path(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(STAGE_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_STAGE))
}

fn read_stage(path: &Path) -> Result<Vec<pbqos::policy::PolicyRule>> {
    match fs::read_to_string(path) {
        Ok(text) => parse_policy_file(&text).with_context(|| format!("staged rules in {}", path.display())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e).with_context(|| format!("reading {}", path.display())),
    }
}

fn run(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    compress: Option<u64>,
    stage: PathBuf,
    keep_stage: bool,
    event_log: bool,
) -> Result<()> {
    let mut sc = load_config(config)?;
    if let Some(s) = seed {
        sc.config.seed = s;
    }
    if let Some(k) = compress {
        sc.config.time_compression = k;
    }
    sc.config.validate()?;
    let extra_rules = read_stage(&stage)?;
    let out = out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| {
            Path::new("out").join(if sc.config.name.is_empty() {
                "run"
            } else {
                &sc.config.name
            })
        });
    let started = Instant::now();
    let result = run_scenario(
        &sc,
        &RunOptions {
            event_log,
            extra_rules: extra_rules.clone(),
        },
    )?;
    write_outputs(&out, &sc, &result)?;
    if !extra_rules.is_empty() && !keep_stage {
        fs::remove_file(&stage).with_context(|| format!("consuming {}", stage.display()))?;
    }
    let s = &result.summary;
    println!(
        "scenario        {} (seed {}, compression {})",
        s.scenario, s.seed, s.time_compression
    );
    println!("peak aggregate  {:.1} Mbit/s", s.peak_aggregate_bps / 1e6);
    if let Some(v) = s.tagged_egress_min_bps {
        println!("tagged egress   min {:.3} Mbit/s", v / 1e6);
    }
    if let Some(v) = s.max_probe_delay_s {
        println!("probe delay     max {:.1} ms", v * 1e3);
    }
    if let Some(v) = s.max_probe_loss_pct {
        println!("probe loss      max {v:.0} %");
    }
    println!("queue drops     {}", s.total_drops());
    println!(
        "events          {} in {:.1} s",
        s.events,
        started.elapsed().as_secs_f64()
    );
    println!("output          {}", out.display());
    Ok(())
}

fn validate(config: &Path) -> Result<()> {
    let sc = load_config(config)?;
    let rules = match &sc.policy_text {
        Some(text) => parse_policy_file(text)?.len(),
        None => 0,
    };
    println!(
        "{}: ok ({} arrival processes, {} policy rules{})",
        config.display(),
        sc.config.traffic.arrivals.len(),
        rules,
        if sc.config.policies.enabled {
            ""
        } else {
            ", policies disabled"
        }
    );
    Ok(())
}

fn render_tc(policy: &Path) -> Result<()> {
    let text = fs::read_to_string(policy).with_context(|| format!("reading {}", policy.display()))?;
    let rules = parse_policy_file(&text).with_context(|| policy.display().to_string())?;
    let renderer = TcRenderer::default();
    let mut alloc = ClassAllocator::default();
    let mut stdout = std::io::stdout().lock();
    for r in &rules {
        for cmd in compile_with(r, &mut alloc).with_context(|| format!("rule {}", r.id))? {
            for line in renderer.render(&cmd) {
                writeln!(stdout, "{line}")?;
            }
        }
    }
    Ok(())
}

fn apply_policy(rule: &str, stage: PathBuf) -> Result<()> {
    let mut r = parse_rule(rule)?;
    let staged = read_stage(&stage)?;
    if r.id.is_empty() {
        r.id = format!("staged{}", staged.len() + 1);
    }
    if staged.iter().any(|s| s.id == r.id) {
        bail!("a rule with id '{}' is already staged in {}", r.id, stage.display());
    }
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&stage)
        .with_context(|| format!("opening {}", stage.display()))?;
    writeln!(f, "{r}")?;
    println!("staged {r}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run {
            config,
            seed,
            out,
            compress,
            stage,
            keep_stage,
            event_log,
        } => run(&config, seed, out, compress, stage_path(stage), keep_stage, event_log),
        Cmd::Validate { config } => validate(&config),
        Cmd::RenderTc { policy } => render_tc(&policy),
        Cmd::ApplyPolicy { rule, stage } => apply_policy(&rule, stage_path(stage)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
