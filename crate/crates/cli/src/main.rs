//! Command-line driver: experiment orchestration, deterministic seeding, and
//! CSV artifact emission with a checksummed manifest.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use arraydpd_core::complexity::{
    complexity_sweep, flops_learning, flops_transmission, sweep_csv, Architecture, FlopParams,
};
use arraydpd_core::scenarios::{
    never_worse_check, run_scenario_a, run_scenario_b, single_link_demo, ScenarioAResult,
    ScenarioConfig,
};
use arraydpd_core::Error;

#[derive(Parser)]
#[command(
    name = "arraydpd",
    about = "Stream-level DPD simulator for large-array digital beamforming transmitters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Key-value config file (see the manifest of any run for the format).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Trial-parallelism worker count; defaults to available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Config override, repeatable: --set key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-link linearization demo: spectra and metrics without/with DPD.
    Demo(CommonArgs),
    /// Array-size sweep with victim-receiver statistics.
    ScenarioA(CommonArgs),
    /// Fixed-DPD robustness across intended-channel redraws.
    ScenarioB(CommonArgs),
    /// Run the learning loop once and emit the trace and coefficients.
    Learn(CommonArgs),
    /// FLOP complexity model of the competing architectures.
    Complexity {
        #[command(flatten)]
        common: CommonArgs,
        /// Named parameter set; `table1` prints the worked-example totals.
        #[arg(long)]
        preset: Option<String>,
    },
}

fn resolve_config(common: &CommonArgs) -> Result<ScenarioConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => config::load_config(path)?,
        None => ScenarioConfig::default(),
    };
    for kv in &common.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects key=value, got {kv:?}"))?;
        config::apply_kv(&mut cfg, key.trim(), value)?;
    }
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Artifacts accumulated by a command, flushed with a manifest at the end.
struct Emitter {
    dir: PathBuf,
    written: Vec<(String, String)>, // (name, sha256)
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self, String> {
        std::fs::create_dir_all(dir)
            .map_err(|e| format!("cannot create output dir {}: {e}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), String> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        let digest = Sha256::digest(contents.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.written.push((name.to_string(), hex));
        Ok(())
    }

    fn finish(self, command: &str, cfg: &ScenarioConfig) -> Result<(), String> {
        let mut m = String::new();
        m.push_str(&format!("command={command}\n"));
        m.push_str(&format!("seed={}\n", cfg.base_seed));
        m.push_str("\n[config]\n");
        m.push_str(&config::render_config(cfg));
        m.push_str("\n[artifacts]\n");
        for (name, hex) in &self.written {
            m.push_str(&format!("{name} sha256={hex}\n"));
        }
        let path = self.dir.join("manifest");
        std::fs::write(&path, m).map_err(|e| format!("cannot write {}: {e}", path.display()))
    }
}

fn run_in_pool<T: Send>(
    workers: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| format!("cannot build worker pool: {e}"))?;
    Ok(pool.install(job))
}

fn metrics_csv(off: &arraydpd_core::metrics::MetricsReport, on: &arraydpd_core::metrics::MetricsReport) -> String {
    let row = |mode: &str, r: &arraydpd_core::metrics::MetricsReport| {
        format!(
            "{mode},{:.6},{:.4},{:.4},{:.4},{:.1}\n",
            r.evm_percent, r.aclr_db, r.inband_power_db, r.oob_power_db, r.occupied_bw_hz
        )
    };
    let mut out =
        String::from("mode,evm_percent,aclr_db,inband_power_db,oob_power_db,occupied_bw_hz\n");
    out.push_str(&row("off", off));
    out.push_str(&row("on", on));
    out
}

fn never_worse_csv(res: &ScenarioAResult) -> String {
    let check = never_worse_check(&res.draw_pairs, 0.5);
    // Raw per-victim count, reported for context; individual victims in a
    // deep fade of the combined distortion can come out worse by chance.
    let victims_worse = never_worse_check(&res.victim_pairs, 0.5).violators.len();
    let mut out = String::from("metric,value\n");
    out.push_str(&format!("ok,{}\n", check.ok));
    out.push_str(&format!("vacuous,{}\n", check.vacuous));
    out.push_str(&format!("pairs,{}\n", res.draw_pairs.len()));
    out.push_str(&format!("violators,{}\n", check.violators.len()));
    out.push_str(&format!("victim_pairs,{}\n", res.victim_pairs.len()));
    out.push_str(&format!("victims_worse,{victims_worse}\n"));
    out.push_str(&format!("excluded_trials,{}\n", res.excluded_trials));
    for idx in &check.violators {
        let p = res.draw_pairs[*idx];
        out.push_str(&format!(
            "violator_{idx},{:.4}->{:.4}\n",
            p.off_adjacent_db, p.on_adjacent_db
        ));
    }
    out
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Demo(common) => {
            let cfg = resolve_config(&common).map_err(RunError::Config)?;
            let mut em = Emitter::new(&common.out).map_err(RunError::Config)?;
            let res = run_in_pool(common.workers, || single_link_demo(&cfg))
                .map_err(RunError::Config)?
                .map_err(RunError::from)?;
            em.write("spectrum_off.csv", &res.spectrum_off.to_csv())
                .map_err(RunError::Config)?;
            em.write("spectrum_on.csv", &res.spectrum_on.to_csv())
                .map_err(RunError::Config)?;
            em.write("metrics.csv", &metrics_csv(&res.report_off, &res.report_on))
                .map_err(RunError::Config)?;
            em.write("trace.csv", &res.learn.trace_csv())
                .map_err(RunError::Config)?;
            em.finish("demo", &cfg).map_err(RunError::Config)?;
            println!(
                "demo: ACLR {:.1} -> {:.1} dB, EVM {:.2} -> {:.2} %",
                res.report_off.aclr_db,
                res.report_on.aclr_db,
                res.report_off.evm_percent,
                res.report_on.evm_percent
            );
            Ok(())
        }
        Command::ScenarioA(common) => {
            let cfg = resolve_config(&common).map_err(RunError::Config)?;
            let mut em = Emitter::new(&common.out).map_err(RunError::Config)?;
            let res = run_in_pool(common.workers, || run_scenario_a(&cfg))
                .map_err(RunError::Config)?
                .map_err(RunError::from)?;
            em.write("sweep.csv", &res.sweep_csv()).map_err(RunError::Config)?;
            em.write(
                "dist_intended.csv",
                &ScenarioAResult::dist_csv(&res.dist_intended_off, &res.dist_intended_on, cfg.m),
            )
            .map_err(RunError::Config)?;
            em.write(
                "dist_victim.csv",
                &ScenarioAResult::dist_csv(&res.dist_victim_off, &res.dist_victim_on, cfg.m),
            )
            .map_err(RunError::Config)?;
            em.write("never_worse.csv", &never_worse_csv(&res))
                .map_err(RunError::Config)?;
            em.finish("scenario-a", &cfg).map_err(RunError::Config)?;
            println!(
                "scenario-a: intended ACLR median {:.1} -> {:.1} dB, victim {:.1} -> {:.1} dB ({} trials excluded)",
                res.dist_intended_off.p50,
                res.dist_intended_on.p50,
                res.dist_victim_off.p50,
                res.dist_victim_on.p50,
                res.excluded_trials
            );
            Ok(())
        }
        Command::ScenarioB(common) => {
            let cfg = resolve_config(&common).map_err(RunError::Config)?;
            let mut em = Emitter::new(&common.out).map_err(RunError::Config)?;
            let res = run_in_pool(common.workers, || run_scenario_b(&cfg))
                .map_err(RunError::Config)?
                .map_err(RunError::from)?;
            let mut csv = String::from("trial,mode,aclr_db\n");
            for (i, v) in res.dist_off.samples.iter().enumerate() {
                csv.push_str(&format!("{i},off,{v:.4}\n"));
            }
            for (i, v) in res.dist_on.samples.iter().enumerate() {
                csv.push_str(&format!("{i},on,{v:.4}\n"));
            }
            em.write("dist_redraw.csv", &csv).map_err(RunError::Config)?;
            em.finish("scenario-b", &cfg).map_err(RunError::Config)?;
            println!(
                "scenario-b: with-DPD ACLR p5/p50/p95 = {:.1}/{:.1}/{:.1} dB (spread {:.2} dB), median gain {:.1} dB",
                res.dist_on.p5,
                res.dist_on.p50,
                res.dist_on.p95,
                res.dist_on.spread_db(),
                res.dist_on.p50 - res.dist_off.p50
            );
            Ok(())
        }
        Command::Learn(common) => {
            let cfg = resolve_config(&common).map_err(RunError::Config)?;
            let mut em = Emitter::new(&common.out).map_err(RunError::Config)?;
            let res = run_in_pool(common.workers, || single_link_demo(&cfg))
                .map_err(RunError::Config)?
                .map_err(RunError::from)?;
            em.write("trace.csv", &res.learn.trace_csv())
                .map_err(RunError::Config)?;
            em.write("coefficients.txt", &res.learn.coefficients.to_text())
                .map_err(RunError::Config)?;
            em.finish("learn", &cfg).map_err(RunError::Config)?;
            let last = res.learn.trace.last().map_or(f64::NAN, |r| r.residual_corr_norm);
            println!("learn: final residual correlation norm {last:.3e}");
            Ok(())
        }
        Command::Complexity { common, preset } => {
            let cfg = resolve_config(&common).map_err(RunError::Config)?;
            let mut em = Emitter::new(&common.out).map_err(RunError::Config)?;
            let base = FlopParams::table1();
            match preset.as_deref() {
                Some("table1") => {
                    let mut csv = String::from("architecture,phase,gflop\n");
                    for arch in [Architecture::Proposed, Architecture::Reference] {
                        let t = flops_transmission(arch, &base).map_err(RunError::from)?;
                        println!("{} transmission: {:.3} GFLOP", arch.label(), t.total_gflop());
                        csv.push_str(&format!(
                            "{},transmission,{:.6}\n",
                            arch.label(),
                            t.total_gflop()
                        ));
                    }
                    for arch in [Architecture::Proposed, Architecture::Reduced, Architecture::Reference] {
                        let l = flops_learning(arch, &base).map_err(RunError::from)?;
                        println!("{} learning: {:.3} GFLOP", arch.label(), l.total_gflop());
                        csv.push_str(&format!("{},learning,{:.6}\n", arch.label(), l.total_gflop()));
                    }
                    em.write("table1.csv", &csv).map_err(RunError::Config)?;
                }
                Some(other) => {
                    return Err(RunError::Config(format!(
                        "unknown preset {other:?}; available: table1"
                    )))
                }
                None => {
                    let ms: Vec<u64> = cfg.m_sweep.iter().map(|m| *m as u64).collect();
                    let rows = complexity_sweep(&base, &ms).map_err(RunError::from)?;
                    em.write("complexity.csv", &sweep_csv(&rows))
                        .map_err(RunError::Config)?;
                    println!("complexity: {} rows over M sweep {:?}", rows.len(), ms);
                }
            }
            em.finish("complexity", &cfg).map_err(RunError::Config)?;
            Ok(())
        }
    }
}

enum RunError {
    Config(String),
    Divergence(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } => RunError::Divergence(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Divergence(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
