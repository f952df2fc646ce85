use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use netcom_core::num_complex::Complex64;
use netcom_core::pnc::{
    catalog_io, hub_decode, min_ncv_distance, offline_search, pnc_encode, reference, resolves_sfs,
    superimpose, MappingCatalog, Qam4, SourceWord, DEFAULT_TOLERANCE,
};
use netcom_core::protocol::Backhaul;
use netcom_core::sim::{
    channel_dump, constellation_dump, parse_complex_pair, parse_ebno_list, write_channel_csv,
    write_constellation_csv, write_ser_csv, ChannelKind, CsiMode, SimConfig, Simulator, Target,
};

#[derive(Parser)]
#[command(
    name = "netcom",
    version,
    about = "Uplink PNC over a two-AP, two-UE network"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build or check the mapping catalog.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// PNC symbol error rate sweep.
    #[command(subcommand)]
    Ser(RunCmd),
    /// CoMP joint-ML baseline sweep.
    #[command(subcommand)]
    Comp(RunCmd),
    /// Constellation or channel-estimate dumps.
    #[command(subcommand)]
    Dump(DumpCmd),
    /// Backhaul protocol traces.
    #[command(subcommand)]
    Trace(TraceCmd),
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// Run the offline search and write the catalog.
    Build {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a catalog file (or a fresh search) against the published matrices.
    Check {
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RunCmd {
    Run(SimArgs),
}

#[derive(Subcommand)]
enum DumpCmd {
    /// Superimposed points with NCV labels at both APs.
    Constellation(SimArgs),
    /// Estimated vs true per-carrier channel for one trial.
    Channels {
        #[command(flatten)]
        sim: SimArgs,
        /// AP whose channel to dump.
        #[arg(long, default_value_t = 1)]
        ap: usize,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

#[derive(Subcommand)]
enum TraceCmd {
    /// Run rounds end to end and print the backhaul event log.
    Round {
        #[command(flatten)]
        sim: SimArgs,
        /// Consecutive rounds on one backhaul
        #[arg(long, default_value_t = 1)]
        rounds: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CsiArg {
    Perfect,
    Estimated,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Fixed,
    Rayleigh,
}

#[derive(Args)]
struct SimArgs {
    /// TOML config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// dB values as "start:step:stop" or "a,b,c".
    #[arg(long)]
    ebno: Option<String>,
    /// Fixed trial count per point
    #[arg(long, conflicts_with = "error_events")]
    trials: Option<u64>,
    /// Stop each point after this many symbol errors
    #[arg(long)]
    error_events: Option<u64>,
    #[arg(long, value_enum)]
    csi: Option<CsiArg>,
    #[arg(long, value_enum)]
    channel: Option<ChannelArg>,
    /// Gains (h11, h12) at AP1, e.g. "1+0i,0.5+0.5i".
    #[arg(long)]
    h1: Option<String>,
    /// Gains (h21, h22) at AP2.
    #[arg(long)]
    h2: Option<String>,
    /// Enables CFO with this maximum in Hz.
    #[arg(long)]
    cfo_max: Option<f64>,
    /// Enables inter-UE delay with this maximum in samples.
    #[arg(long)]
    delay_max: Option<u32>,
    /// Enables fractional sampling offset.
    #[arg(long)]
    sco: bool,
    /// Backhaul packet loss probability
    #[arg(long)]
    loss: Option<f64>,
    /// Copies sent of each backhaul packet
    #[arg(long)]
    replication: Option<usize>,
    /// Hub wait for an AP's data, in seconds
    #[arg(long)]
    timeout: Option<f64>,
    /// Base RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SimArgs {
    fn resolve(&self) -> Result<SimConfig> {
        let mut c = match &self.config {
            Some(p) => SimConfig::from_file(p)?,
            None => SimConfig::default(),
        };
        if let Some(e) = &self.ebno {
            c.ebno_db = parse_ebno_list(e)?;
        }
        if let Some(n) = self.trials {
            c.trials = Some(n);
            c.error_events = None;
        }
        if let Some(n) = self.error_events {
            c.error_events = Some(n);
            c.trials = None;
        }
        if let Some(m) = self.csi {
            c.csi = match m {
                CsiArg::Perfect => CsiMode::Perfect,
                CsiArg::Estimated => CsiMode::Estimated,
            };
        }
        if let Some(m) = self.channel {
            c.channel = match m {
                ChannelArg::Fixed => ChannelKind::Fixed,
                ChannelArg::Rayleigh => ChannelKind::Rayleigh,
            };
        }
        let pair = |s: &str| -> Result<[[f64; 2]; 2]> {
            let [a, b] = parse_complex_pair(s)?;
            Ok([[a.re, a.im], [b.re, b.im]])
        };
        if let Some(s) = &self.h1 {
            c.h1 = pair(s).context("--h1")?;
        }
        if let Some(s) = &self.h2 {
            c.h2 = pair(s).context("--h2")?;
        }
        if let Some(f) = self.cfo_max {
            c.impairments.cfo = true;
            c.impairments.cfo_max_hz = f;
        }
        if let Some(d) = self.delay_max {
            c.impairments.delay = true;
            c.impairments.delay_max = d;
        }
        if self.sco {
            c.impairments.sco = true;
        }
        if let Some(p) = self.loss {
            c.loss = p;
        }
        if let Some(r) = self.replication {
            c.replication = r;
        }
        if let Some(t) = self.timeout {
            c.timeout_s = t;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn build_catalog() -> Result<MappingCatalog> {
    Ok(offline_search(&Qam4::gray(), DEFAULT_TOLERANCE)?.catalog)
}

fn half_dmin(m: &netcom_core::Gf2Matrix, v: Complex64, c: &Qam4) -> Result<f64> {
    let sc = superimpose([Complex64::new(1.0, 0.0), v], c);
    Ok(min_ncv_distance(&sc, m)?)
}

/// Returns whether the catalog is structurally sound.
fn check_catalog(cat: &MappingCatalog, out: &mut dyn Write) -> Result<bool> {
    let c = cat.constellation();
    let tol = cat.tolerance();
    let v = cat.sfs().values();
    let mut sound = true;
    let mut parity = 0;
    let mut resolved = [0; 2];
    writeln!(
        out,
        "entry index rank top bottom dmin dmin_published roundtrip"
    )?;
    for e in cat.entries() {
        let (i, j) = (e.ap1_sfs, e.ap2_sfs);
        let rank = e.combined.rank();
        let top = resolves_sfs(v[i - 1], &e.top(), c, tol)?;
        let bottom = resolves_sfs(v[j - 1], &e.bottom(), c, tol)?;
        let mut roundtrip = true;
        for w in SourceWord::all() {
            let x1 = pnc_encode(&e.top(), w)?;
            let x2 = pnc_encode(&e.bottom(), w)?;
            roundtrip &= hub_decode(&e.combined, x1, x2)
                .map(|d| d == w)
                .unwrap_or(false);
        }
        let published = reference::appendix_matrix(i, j)
            .map(|m| -> Result<[f64; 2]> {
                let t = m.row_slice(0, 2)?;
                let b = m.row_slice(2, 4)?;
                Ok([half_dmin(&t, v[i - 1], c)?, half_dmin(&b, v[j - 1], c)?])
            })
            .transpose()?;
        let same = published.is_some_and(|p| {
            (0..2).all(|k| (p[k] - e.dmin[k]).abs() <= 1e-9 * p[k].abs().max(1.0))
        });
        parity += usize::from(same);
        resolved[0] += usize::from(top);
        resolved[1] += usize::from(bottom);
        sound &= rank == 4 && roundtrip;
        let fmt = |d: [f64; 2]| format!("{:.4}/{:.4}", d[0], d[1]);
        writeln!(
            out,
            "M{i}{j} {} {rank} {} {} {} {} {}",
            e.mapping_index(),
            if top { "resolves" } else { "no" },
            if bottom { "resolves" } else { "no" },
            fmt(e.dmin),
            published.map_or("-".into(), fmt),
            if roundtrip { "ok" } else { "FAIL" }
        )?;
    }
    let n = cat.entries().len();
    writeln!(out, "top halves resolving: {}/{n}", resolved[0])?;
    writeln!(out, "bottom halves resolving: {}/{n}", resolved[1])?;
    writeln!(out, "d_min parity with published matrices: {parity}/{n}")?;
    writeln!(
        out,
        "structure (rank 4, decode round trip): {}",
        if sound { "ok" } else { "FAIL" }
    )?;
    Ok(sound)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Catalog(CatalogCmd::Build { out }) => {
            let cat = build_catalog()?;
            output(out.as_deref())?.write_all(catalog_io::to_text(&cat).as_bytes())?;
        }
        Cmd::Catalog(CatalogCmd::Check { catalog }) => {
            let cat = match catalog {
                Some(p) => catalog_io::import_catalog(&p)
                    .with_context(|| format!("reading {}", p.display()))?,
                None => build_catalog()?,
            };
            return check_catalog(&cat, &mut io::stdout().lock());
        }
        Cmd::Ser(RunCmd::Run(a)) => sweep(&a, Target::Pnc)?,
        Cmd::Comp(RunCmd::Run(a)) => sweep(&a, Target::Comp)?,
        Cmd::Dump(DumpCmd::Constellation(a)) => {
            let cfg = a.resolve()?;
            let dumps = constellation_dump(cfg.fixed_gains(), &build_catalog()?)?;
            for d in &dumps {
                eprintln!(
                    "ap{}: sfs {} mapping {} clusters {} ncv classes {}",
                    d.ap,
                    d.sfs,
                    d.mapping_index,
                    d.clusters,
                    d.ncv_classes()
                );
            }
            write_constellation_csv(output(cfg.out.as_deref())?, &dumps)?;
        }
        Cmd::Dump(DumpCmd::Channels { sim, ap, trial }) => {
            let cfg = sim.resolve()?;
            let ebno = cfg.ebno_db[0];
            let out = cfg.out.clone();
            let s = Simulator::new(cfg)?;
            write_channel_csv(output(out.as_deref())?, &channel_dump(&s, ebno, trial, ap)?)?;
        }
        Cmd::Trace(TraceCmd::Round { sim, rounds }) => {
            let cfg = sim.resolve()?;
            let ebno = cfg.ebno_db[0];
            let out = cfg.out.clone();
            let s = Simulator::new(cfg)?;
            let mut bh = Backhaul::new(s.cfg.protocol()).with_trace();
            let mut prng = s.session_rng(0);
            for t in 0..rounds {
                s.run_trial(ebno, t, &mut bh, &mut prng)?;
            }
            let mut w = output(out.as_deref())?;
            for line in bh.trace() {
                writeln!(w, "{line}")?;
            }
        }
    }
    Ok(true)
}

fn sweep(a: &SimArgs, target: Target) -> Result<()> {
    let cfg = a.resolve()?;
    let out = cfg.out.clone();
    let report = Simulator::new(cfg)?.run_sweep(target)?;
    write_ser_csv(output(out.as_deref())?, &report)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.to_string().starts_with("config:")) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
