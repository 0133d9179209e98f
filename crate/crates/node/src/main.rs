use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pmpir::audit::{audit_placement, audit_privacy, audit_with, LeakyMasks};
use pmpir::rate_table::{rate_table, render_csv, TableSpec};
use pmpir::sim::{
    build_scheme, cluster_load, fraction, run_repair, run_retrieval, smallest_admissible_prime,
    Cluster, SchemeChoice,
};
use pmpir::store::{read_store, read_symbols, write_store, write_symbols};
use pmpir_core::pir_mbr::{rate_mbr, MbrPattern};
use pmpir_core::pir_msr::{rate_msr, Strategy};
use pmpir_core::pm_codes::{encode_database, validate_params, CodeParams, Family, Geometry};
use pmpir_core::{Error, Field};

#[derive(Parser)]
#[command(name = "pmpir", version, about = "Private information retrieval over product-matrix regenerating codes")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "mbr")]
    family: FamilyArg,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Field size; defaults to the smallest admissible prime.
    #[arg(long, global = true)]
    q: Option<u64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output path (file or directory, depending on the command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// MSR retrieval placement.
    #[arg(long, value_enum, global = true, default_value = "auto")]
    strategy: StrategyArg,
    /// MBR retrieval placement.
    #[arg(long, value_enum, global = true, default_value = "descending")]
    pattern: PatternArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Mbr,
    Msr,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Auto,
    Tail,
    Grouped,
    Search,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    /// Server `n - ((l + s) mod S)` for query `l`, stripe `s`.
    Descending,
    /// Server `k + 1 + ((s - l) mod S)`.
    Ascending,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableMode {
    /// MBR: fixed k, one row per d.
    FixedK,
    /// MBR: d = 2(k - 1), one row per even d.
    Linked,
}

#[derive(Subcommand)]
enum Command {
    /// Validate parameters and print the derived quantities.
    Params,
    /// Encode a raw symbol file (u64 LE) into node files under --out.
    Encode {
        #[arg(long)]
        input: PathBuf,
    },
    /// Privately retrieve one file; writes its symbols to --out.
    Retrieve {
        #[arg(long)]
        store: PathBuf,
        /// 1-based file index.
        #[arg(long)]
        file: usize,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Fail a node and rebuild it from d helpers.
    Repair {
        #[arg(long)]
        store: PathBuf,
        /// 1-based index of the failed node.
        #[arg(long)]
        failed: usize,
        /// 1-based helper indices; defaults to the first d others.
        #[arg(long, value_delimiter = ',')]
        helpers: Option<Vec<usize>>,
    },
    /// Structural and chi-square audit of the query distribution.
    AuditPrivacy {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        files: usize,
        /// Use a mask generator that leaks the target (negative control).
        #[arg(long)]
        plant_leak: bool,
    },
    /// Self-checking CSV of rates and bounds.
    ///
    /// Columns: x,scheme_rate_frac,scheme_rate,dn_rate,lower,upper,collusion_ref.
    /// x is d (MBR) or alpha (MSR). All columns but scheme_rate are exact
    /// fractions. MBR: lower = 1 - k/n, upper = 1 - B/(nd), dn_rate = pB/(dn)
    /// where n = pk + d, collusion_ref = 1 - (B + d - 1)/(nd). MSR: lower =
    /// dn_rate = 1 - d/n, upper = 1 - k/n.
    RateTable {
        #[arg(long, value_enum, default_value = "fixed-k")]
        mode: TableMode,
        #[arg(long)]
        from: Option<usize>,
        #[arg(long)]
        to: Option<usize>,
    },
    /// Time encode, retrieval and repair.
    Bench {
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, default_value_t = 4)]
        files: usize,
    },
}

impl Cli {
    fn family(&self) -> Family {
        match self.family {
            FamilyArg::Mbr => Family::Mbr,
            FamilyArg::Msr => Family::Msr,
        }
    }

    fn choice(&self) -> SchemeChoice {
        SchemeChoice {
            mbr_pattern: match self.pattern {
                PatternArg::Descending => MbrPattern::Descending,
                PatternArg::Ascending => MbrPattern::Ascending,
            },
            msr_strategy: match self.strategy {
                StrategyArg::Auto => Strategy::Auto,
                StrategyArg::Tail => Strategy::Tail,
                StrategyArg::Grouped => Strategy::Grouped,
                StrategyArg::Search => Strategy::Search,
            },
        }
    }

    fn nkd(&self) -> Result<(usize, usize, usize)> {
        match (self.n, self.k, self.d) {
            (Some(n), Some(k), Some(d)) => Ok((n, k, d)),
            _ => bail!("--n, --k and --d are required"),
        }
    }

    fn params(&self) -> Result<CodeParams> {
        let (n, k, d) = self.nkd()?;
        let family = self.family();
        let q = match self.q {
            Some(q) => q,
            None => smallest_admissible_prime(family, n, k, d, self.choice())?,
        };
        validate_params(family, n, k, d, q).map_err(|e| {
            let hint = match e {
                Error::FieldTooSmall(_) | Error::CompositeModulus(_) => {
                    smallest_admissible_prime(family, n, k, d, self.choice())
                        .map(|p| format!(" (try --q {p})"))
                        .unwrap_or_default()
                }
                _ => String::new(),
            };
            anyhow!("{e}{hint}")
        })
    }

    /// Parameters given on the command line, if any, for checking a store.
    fn expected_params(&self) -> Result<Option<CodeParams>> {
        if self.n.is_none() && self.k.is_none() && self.d.is_none() {
            return Ok(None);
        }
        self.params().map(Some)
    }

    fn out(&self) -> Result<&PathBuf> {
        self.out.as_ref().context("--out is required")
    }
}

fn load(cli: &Cli, dir: &Path) -> Result<Cluster> {
    let expected = cli.expected_params()?;
    Ok(cluster_load(dir, expected.as_ref())?)
}

fn cmd_params(cli: &Cli) -> Result<()> {
    let p = cli.params()?;
    let g = p.geometry;
    let (rate, downloads) = match g.family {
        Family::Mbr => (rate_mbr(g.n, g.k, g.d)?, pmpir_core::pir_mbr::download_count_mbr(g.n, g.k, g.d)?),
        Family::Msr => (rate_msr(g.n, g.alpha())?, pmpir_core::pir_msr::download_count_msr(g.n, g.k, g.d)?),
    };
    let points: Vec<String> = p.points().as_slice().iter().map(|x| x.to_string()).collect();
    println!(
        "family={} n={} k={} d={} q={}",
        g.family.name(),
        g.n,
        g.k,
        g.d,
        p.field.modulus()
    );
    println!(
        "B={} S={} alpha={} beta={} file_symbols={} cut_set={}",
        g.stripe_symbols(),
        g.stripes(),
        g.alpha(),
        g.beta(),
        g.file_symbols(),
        g.cut_set_bound()
    );
    println!("points={}", points.join(","));
    println!(
        "downloads={} rate={} ({:.6})",
        downloads,
        fraction(rate),
        *rate.numer() as f64 / *rate.denom() as f64
    );
    if g.family == Family::Msr {
        let (scheme, plan) = build_scheme(&p, cli.choice())?;
        let plan = plan.expect("MSR schemes come with a plan");
        println!("strategy={} plan_digest={}", plan.strategy.name(), plan.digest);
        if let Some(out) = &cli.out {
            std::fs::write(out, serde_json::to_string_pretty(&plan)?)?;
        }
        drop(scheme);
    }
    Ok(())
}

fn cmd_encode(cli: &Cli, input: &Path) -> Result<()> {
    let p = cli.params()?;
    let out = cli.out()?;
    let symbols = read_symbols(input, p.field)?;
    let per_file = p.geometry.file_symbols();
    if symbols.is_empty() || symbols.len() % per_file != 0 {
        bail!(
            "input holds {} symbols, expected a positive multiple of S*B = {per_file}",
            symbols.len()
        );
    }
    let store = encode_database(&symbols, &p)?;
    write_store(out, &p, &store)?;
    println!(
        "encoded {} file(s) of {per_file} symbols into {} node files under {}",
        store.files(),
        p.geometry.n,
        out.display()
    );
    Ok(())
}

fn cmd_retrieve(cli: &Cli, store: &Path, file: usize, transcript: Option<&PathBuf>) -> Result<()> {
    let mut cluster = load(cli, store)?;
    if file == 0 || file > cluster.files() {
        bail!("--file {file} out of range 1..={}", cluster.files());
    }
    let (scheme, _) = build_scheme(cluster.params(), cli.choice())?;
    let (symbols, t) = run_retrieval(&mut cluster, &scheme, file - 1, cli.seed)?;
    if let Some(out) = &cli.out {
        write_symbols(out, &symbols)?;
    }
    let json = serde_json::to_string_pretty(&t)?;
    if let Some(path) = transcript {
        std::fs::write(path, &json)?;
    }
    println!("{json}");
    Ok(())
}

fn cmd_repair(cli: &Cli, store: &Path, failed: usize, helpers: Option<&Vec<usize>>) -> Result<()> {
    let mut cluster = load(cli, store)?;
    let g = cluster.params().geometry;
    if failed == 0 || failed > g.n {
        bail!("--failed {failed} out of range 1..={}", g.n);
    }
    let failed = failed - 1;
    let helpers: Vec<usize> = match helpers {
        Some(h) => {
            if h.iter().any(|&i| i == 0 || i > g.n) {
                bail!("helper indices must lie in 1..={}", g.n);
            }
            h.iter().map(|i| i - 1).collect()
        }
        None => (0..g.n).filter(|&i| i != failed).take(g.d).collect(),
    };
    let original = cluster.server(failed).share().map(<[_]>::to_vec).context("server share missing")?;
    cluster.fail(failed);
    let outcome = run_repair(&mut cluster, failed, &helpers)?;
    let exact = outcome.restored == original;
    println!(
        "repaired node {} from helpers {:?}: {} symbols downloaded ({} per helper), bit-exact: {exact}",
        failed + 1,
        helpers.iter().map(|i| i + 1).collect::<Vec<_>>(),
        outcome.downloaded,
        outcome.per_helper.first().copied().unwrap_or(0)
    );
    if let Some(out) = &cli.out {
        let (params, mut store) = read_store(store)?;
        let mut shares = store.shares().to_vec();
        shares[failed] = outcome.restored.clone();
        store = pmpir_core::pm_codes::NodeStore::from_shares(params.geometry, store.files(), shares)?;
        write_store(out, &params, &store)?;
    }
    if !exact {
        bail!("restored share differs from the original");
    }
    Ok(())
}

fn cmd_audit(cli: &Cli, trials: usize, files: usize, plant_leak: bool) -> Result<bool> {
    let (n, k, d) = cli.nkd()?;
    let g = Geometry::new(cli.family(), n, k, d)?;
    let q = cli.q.context("--q is required for the audit")?;
    let field = Field::new(q)?;
    if trials == 0 || files == 0 {
        bail!("--trials and --files must be positive");
    }
    let placement = audit_placement(&g, cli.choice().msr_strategy)?;
    let report = if plant_leak {
        audit_with(&g, field, files, trials, cli.seed, &placement, |s, t| {
            Box::new(LeakyMasks::new(field, s, t))
        })?
    } else {
        audit_privacy(&g, q, files, trials, cli.seed, &placement)?
    };
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &cli.out {
        std::fs::write(out, &json)?;
    }
    println!("{json}");
    Ok(report.passed())
}

fn cmd_rate_table(cli: &Cli, mode: TableMode, from: Option<usize>, to: Option<usize>) -> Result<bool> {
    let n = cli.n.context("--n is required")?;
    let spec = match (cli.family(), mode) {
        (Family::Msr, _) => TableSpec::Msr { n },
        (Family::Mbr, TableMode::FixedK) => TableSpec::MbrFixedK {
            n,
            k: cli.k.context("--k is required for fixed-k tables")?,
        },
        (Family::Mbr, TableMode::Linked) => TableSpec::MbrLinked { n },
    };
    let (lo, hi) = spec.default_range();
    let rows = rate_table(spec, Some((from.unwrap_or(lo), to.unwrap_or(hi))))?;
    let (csv, violations) = render_csv(&rows);
    match &cli.out {
        Some(out) => std::fs::write(out, &csv)?,
        None => print!("{csv}"),
    }
    for v in &violations {
        eprintln!("self-check failed: {v}");
    }
    Ok(violations.is_empty())
}

fn cmd_bench(cli: &Cli, iterations: usize, files: usize) -> Result<()> {
    let p = cli.params()?;
    let g = p.geometry;
    let per_file = g.file_symbols();
    let symbols: Vec<_> = (0..per_file * files)
        .map(|i| p.field.elem((i as u64).wrapping_mul(2_654_435_761) ^ cli.seed))
        .collect();
    let t = Instant::now();
    let store = encode_database(&symbols, &p)?;
    let encode_ms = t.elapsed().as_secs_f64() * 1e3;
    let (scheme, _) = build_scheme(&p, cli.choice())?;
    let mut cluster = Cluster::new(p.clone(), store)?;
    let t = Instant::now();
    let mut total = 0;
    for it in 0..iterations {
        let (file, tr) = run_retrieval(&mut cluster, &scheme, it % files, cli.seed + it as u64)?;
        if file[..] != symbols[(it % files) * per_file..(it % files + 1) * per_file] {
            bail!("retrieval {it} returned the wrong file");
        }
        total = tr.total_downloaded;
    }
    let retrieve_ms = t.elapsed().as_secs_f64() * 1e3 / iterations.max(1) as f64;
    let t = Instant::now();
    for it in 0..iterations {
        let failed = it % g.n;
        let helpers: Vec<usize> = (0..g.n).filter(|&i| i != failed).take(g.d).collect();
        cluster.fail(failed);
        run_repair(&mut cluster, failed, &helpers)?;
    }
    let repair_ms = t.elapsed().as_secs_f64() * 1e3 / iterations.max(1) as f64;
    println!(
        "family={} n={} k={} d={} q={} files={files} encode_ms={encode_ms:.3} retrieve_ms={retrieve_ms:.3} repair_ms={repair_ms:.3} downloads={total}",
        g.family.name(),
        g.n,
        g.k,
        g.d,
        p.field.modulus()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Params => cmd_params(cli).map(|_| true),
        Command::Encode { input } => cmd_encode(cli, input).map(|_| true),
        Command::Retrieve { store, file, transcript } => {
            cmd_retrieve(cli, store, *file, transcript.as_ref()).map(|_| true)
        }
        Command::Repair { store, failed, helpers } => {
            cmd_repair(cli, store, *failed, helpers.as_ref()).map(|_| true)
        }
        Command::AuditPrivacy { trials, files, plant_leak } => cmd_audit(cli, *trials, *files, *plant_leak),
        Command::RateTable { mode, from, to } => cmd_rate_table(cli, *mode, *from, *to),
        Command::Bench { iterations, files } => cmd_bench(cli, *iterations, *files).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
