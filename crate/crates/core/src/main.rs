#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mmw_discovery::beambook::{
    build_codebook, fov_beamspace, tradeoff_table, write_tradeoff_csv, CodebookSide,
};
use mmw_discovery::beamformers::{phase_perturbation_study, RxMode};
use mmw_discovery::channel::{
    build_channel, perturbation_scenario, sample_scenario, ArrayGeometry, Scenario,
};
use mmw_discovery::harness::{
    self, ccdf, run_experiment, write_records_csv, write_tradeoff_entries_csv, ExperimentConfig,
    ScenarioTemplate, Scheme,
};
use mmw_discovery::music::{self, angle_grid, MusicBudget, Side, DEFAULT_GRID_STEP_DEG};
use mmw_discovery::power_iter::{run_noisy, PowerIterConfig};
use mmw_discovery::rng::trial_rng;

#[derive(Parser)]
#[command(
    name = "mmw-discovery",
    version,
    about = "Beamforming studies for mmW initial UE discovery"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scheme over a random scenario ensemble and write per-trial and CCDF CSVs.
    Simulate(SimulateArgs),
    /// Design a sweep codebook and export it as JSON.
    Codebook(CodebookArgs),
    /// Tabulate worst-case gain bounds and achieved gain against codebook size.
    Bounds(BoundsArgs),
    /// Beam-sweep loss percentiles against MWB codebook size.
    SweepTradeoff(SweepTradeoffArgs),
    /// Phase-perturbation study on a two-path scenario.
    Perturb(PerturbArgs),
    /// MUSIC pseudospectrum of one simulated training run.
    Music(MusicArgs),
    /// Per-iteration trace of noisy power iteration on one channel.
    PowerIter(PowerIterArgs),
}

#[derive(Args, Clone)]
struct EnsembleArgs {
    /// Number of path clusters.
    #[arg(long, default_value_t = 2)]
    paths: usize,
    #[arg(long, default_value_t = 4)]
    nr: usize,
    #[arg(long, default_value_t = 64)]
    nt: usize,
    /// Forward pre-beamforming SNR in dB (`inf` for noiseless).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    rho_f: f64,
    /// Reverse pre-beamforming SNR in dB.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    rho_r: f64,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [30.0, 150.0])]
    fov: Vec<f64>,
}

impl EnsembleArgs {
    fn template(&self) -> ScenarioTemplate {
        ScenarioTemplate {
            n_paths: self.paths,
            n_r: self.nr,
            n_t: self.nt,
            fov_deg: [self.fov[0], self.fov[1]],
            rho_forward_db: self.rho_f,
            rho_reverse_db: self.rho_r,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum SchemeName {
    Optimal,
    EgtRsv,
    Prop1,
    DirectionalMf,
    DirectionalDd,
    PowerIter,
    Music,
    BeamSweep,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment config; overrides every other experiment flag.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SchemeName::Optimal)]
    scheme: SchemeName,
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Phase shifter resolution for egt-rsv and prop1.
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, default_value_t = 256)]
    n_total: usize,
    #[arg(long, default_value_t = 8)]
    n_noise_avg: usize,
    /// MUSIC uplink snapshots (divides 192).
    #[arg(long, default_value_t = 96)]
    n_up_cov: usize,
    #[arg(long, default_value_t = 16)]
    n_mwb: usize,
    #[arg(long, default_value_t = 4)]
    n_ue: usize,
    /// Subarrays of the broadened MWB beams (1 for CPO beams).
    #[arg(long, default_value_t = 4)]
    m: u8,
    #[arg(long, default_value_t = 1)]
    n_rep: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Per-trial CSV; `.ccdf.csv` and `.json` siblings are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Exit with failure if any trial is flagged.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CodebookArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    beams: usize,
    #[arg(long, default_value_t = 4)]
    m: u8,
    #[arg(long, value_enum, default_value_t = SideArg::Mwb)]
    side: SideArg,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [30.0, 150.0])]
    fov: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy)]
enum SideArg {
    Mwb,
    Ue,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 64)]
    nt: usize,
    #[arg(long, value_delimiter = ',', default_value = "8,16,24,32,40,48,56,64")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    m: u8,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [30.0, 150.0])]
    fov: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepTradeoffArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, value_delimiter = ',', default_value = "8,16,24,32,40,48,56,64")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10,25,50,75,90,95")]
    percentiles: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    n_ue: usize,
    #[arg(long, default_value_t = 4)]
    m: u8,
    #[arg(long, default_value_t = 1)]
    n_rep: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PerturbArgs {
    /// Two-path scenario JSON; the built-in example is used otherwise.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    step_deg: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SingleChannelArgs {
    /// Scenario JSON; otherwise one scenario is drawn from the ensemble flags.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long)]
    seed: u64,
}

impl SingleChannelArgs {
    fn scenario(&self) -> anyhow::Result<Scenario> {
        if let Some(p) = &self.scenario {
            return Scenario::load(p).with_context(|| format!("loading {}", p.display()));
        }
        let t = self.ensemble.template();
        Ok(sample_scenario(
            &mut trial_rng(self.seed, 0),
            t.n_paths,
            ArrayGeometry::ula(t.n_r),
            ArrayGeometry::ula(t.n_t),
            t.fov_deg,
            t.rho_forward_db,
            t.rho_reverse_db,
        )?)
    }
}

#[derive(Args)]
struct MusicArgs {
    #[command(flatten)]
    channel: SingleChannelArgs,
    #[arg(long, value_enum, default_value_t = MusicSide::Uplink)]
    side: MusicSide,
    /// Model order; defaults to the number of paths, reduced below the array size.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 96)]
    n_up_cov: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP_DEG)]
    grid_step_deg: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy)]
enum MusicSide {
    Uplink,
    Downlink,
}

#[derive(Args)]
struct PowerIterArgs {
    #[command(flatten)]
    channel: SingleChannelArgs,
    #[arg(long, default_value_t = 256)]
    n_total: usize,
    #[arg(long, default_value_t = 8)]
    n_noise_avg: usize,
    #[arg(long)]
    out: PathBuf,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn simulate(a: SimulateArgs) -> anyhow::Result<ExitCode> {
    let cfg = match &a.config {
        Some(p) => ExperimentConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => {
            let scheme = match a.scheme {
                SchemeName::Optimal => Scheme::Optimal,
                SchemeName::EgtRsv => Scheme::EgtRsv { bits: a.bits },
                SchemeName::Prop1 => Scheme::Prop1 { bits: a.bits },
                SchemeName::DirectionalMf => Scheme::Directional {
                    rx_mode: RxMode::MatchedFilter,
                },
                SchemeName::DirectionalDd => Scheme::Directional {
                    rx_mode: RxMode::DominantDirection,
                },
                SchemeName::PowerIter => Scheme::PowerIteration {
                    n_total: a.n_total,
                    n_noise_avg: a.n_noise_avg,
                },
                SchemeName::Music => Scheme::Music {
                    budget: MusicBudget::with_up_cov(a.n_up_cov)?,
                    k: None,
                    grid_step_deg: DEFAULT_GRID_STEP_DEG,
                },
                SchemeName::BeamSweep => Scheme::BeamSweep {
                    n_mwb: a.n_mwb,
                    n_ue: a.n_ue,
                    m: a.m,
                    n_rep: a.n_rep,
                },
            };
            ExperimentConfig {
                scenario: a.ensemble.template(),
                scheme,
                n_trials: a.trials,
                master_seed: a.seed,
            }
        }
    };
    let records = run_experiment(&cfg, a.workers)?;
    write_records_csv(&records, create(&a.out)?)?;
    std::fs::write(sibling(&a.out, ".json"), cfg.to_json()? + "\n")?;
    let flagged = records.iter().filter(|r| r.flagged).count();
    match ccdf(&records) {
        Ok(c) => {
            c.write_csv(create(&sibling(&a.out, ".ccdf.csv"))?)?;
            eprintln!(
                "{} trials, median loss {:.4} dB, {flagged} flagged",
                records.len(),
                c.median()
            );
        }
        Err(_) => eprintln!("every trial was flagged"),
    }
    if a.strict && flagged > 0 {
        eprintln!("strict mode: {flagged} flagged trial(s)");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Simulate(a) => return simulate(a),
        Cmd::Codebook(a) => {
            let side = match a.side {
                SideArg::Mwb => CodebookSide::Mwb,
                SideArg::Ue => CodebookSide::Ue,
            };
            let book = build_codebook(
                &ArrayGeometry::ula(a.n),
                [a.fov[0], a.fov[1]],
                a.beams,
                a.m,
                side,
            )?;
            std::fs::write(&a.out, book.to_json()? + "\n")?;
        }
        Cmd::Bounds(a) => {
            let (lo, hi) = fov_beamspace(&ArrayGeometry::ula(a.nt), [a.fov[0], a.fov[1]]);
            let rows = tradeoff_table(a.nt, hi - lo, &a.sizes, a.m)?;
            write_tradeoff_csv(&rows, create(&a.out)?)?;
        }
        Cmd::SweepTradeoff(a) => {
            let base = ExperimentConfig {
                scenario: a.ensemble.template(),
                scheme: Scheme::BeamSweep {
                    n_mwb: a.sizes.first().copied().unwrap_or(1),
                    n_ue: a.n_ue,
                    m: a.m,
                    n_rep: a.n_rep,
                },
                n_trials: a.trials,
                master_seed: a.seed,
            };
            let rows = harness::tradeoff_table(&base, &a.sizes, &a.percentiles, a.workers)?;
            write_tradeoff_entries_csv(&rows, create(&a.out)?)?;
        }
        Cmd::Perturb(a) => {
            let s = match &a.scenario {
                Some(p) => Scenario::load(p)?,
                None => perturbation_scenario(),
            };
            if !(a.step_deg > 0.0) {
                bail!("--step-deg must be positive");
            }
            let n = (360.0 / a.step_deg).round() as usize;
            let grid: Vec<f64> = (0..=n).map(|i| -180.0 + i as f64 * a.step_deg).collect();
            let rows = phase_perturbation_study(&s, &grid)?;
            let mut out = csv::Writer::from_writer(create(&a.out)?);
            for r in rows {
                out.serialize(r)?;
            }
            out.flush()?;
        }
        Cmd::Music(a) => {
            let s = a.channel.scenario()?;
            let h = build_channel(&s)?;
            let budget = MusicBudget::with_up_cov(a.n_up_cov)?;
            let mut rng = trial_rng(a.channel.seed, 1);
            let (side, geom) = match a.side {
                MusicSide::Uplink => (Side::Uplink, s.tx),
                MusicSide::Downlink => (Side::Downlink, s.rx),
            };
            let r =
                music::sample_covariance(&music::simulate_snapshots(&h, side, &budget, &mut rng)?)?;
            let k =
                a.k.unwrap_or(s.n_paths())
                    .min(geom.n_elements.saturating_sub(1))
                    .max(1);
            let grid = angle_grid(s.fov_deg, a.grid_step_deg)?;
            music::pseudospectrum(&r, k, &geom, &grid)?.write_csv(create(&a.out)?)?;
        }
        Cmd::PowerIter(a) => {
            let s = a.channel.scenario()?;
            let h = build_channel(&s)?;
            let cfg =
                PowerIterConfig::new(a.n_total, a.n_noise_avg, s.rho_forward_db, s.rho_reverse_db);
            let trace = run_noisy(&h.h, &cfg, &mut trial_rng(a.channel.seed, 1))?;
            trace.write_csv(create(&a.out)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
