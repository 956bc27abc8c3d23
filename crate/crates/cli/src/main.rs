mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fareylat::analysis::{
    bound_ratio_scan, error_growth_scan, loglog_fit, mertens_envelope_scan, mertens_envelope_table,
    BoundFamily, ScanSpec, ScanSummary,
};
use fareylat::farey::{enumerate, farey_stats};
use fareylat::fracsum::{
    lemma33_report, prop31_report, psi_sum, rcount_report, vdc_report, BoundReport, MinSumParams,
    PsiSumParams, DEFAULT_EPSILON,
};
use fareylat::lattice::{error_term, error_term_real, sigma_real};
use fareylat::{build_tables, parse_alpha, Alpha64, ArithTables, Error, Table};
use output::{emit, render_csv, render_json, render_json_records, Format, ManifestInputs};

/// Farey-fraction lattice counts, Mertens sums and fractional-part sum bounds.
///
/// CSV output starts with a `# manifest-sha256:` comment line. The run
/// manifest is written next to `--out` as `<out>.manifest.json`, or to stderr.
/// Exit status: 0 success, 1 failed check, 2 usage error.
#[derive(Debug, Parser)]
#[command(name = "fareylat", version)]
struct Cli {
    /// Worker threads (default: logical cores)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Output file (default: stdout)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump μ, φ, ω and the Mertens function for n ≤ LIMIT
    Tables {
        #[arg(long)]
        limit: u64,
    },
    /// Farey sequence listing and statistics
    #[command(subcommand)]
    Farey(FareyCmd),
    /// Lattice count C(T), moments, error term and Σ(T)
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Constrained ψ-sums
    #[command(subcommand)]
    Fracsum(FracsumCmd),
    /// Compare a sum with the right-hand side of a bound
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Grid scans with log-log fits
    Scan(ScanArgs),
    /// Check E(T) = Σ(T) − #I(T)/2 exactly on a range of orders
    IdentityCheck {
        #[arg(long, default_value_t = 1)]
        from: u64,
        #[arg(long)]
        to: u64,
    },
    /// Least-squares fit of log y against log x from a CSV file
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
}

#[derive(Debug, Clone, Args)]
struct Range {
    #[arg(long)]
    from: u64,
    #[arg(long)]
    to: u64,
    #[arg(long, default_value_t = 1)]
    step: u64,
}

impl Range {
    fn values(&self) -> Result<Vec<u64>, CliError> {
        if self.step == 0 || self.from > self.to {
            return Err(CliError::Usage("--from/--to/--step: need from <= to and step >= 1".into()));
        }
        Ok((self.from..=self.to).step_by(self.step as usize).collect())
    }
}

#[derive(Debug, Subcommand)]
enum FareyCmd {
    /// List ℱ(T) in increasing order
    List {
        #[arg(short = 'T', long)]
        order: u64,
    },
    /// F(T), #I(T) and G(T) for one order or a range
    Stats {
        #[arg(short = 'T', long, conflicts_with = "from")]
        order: Option<u64>,
        #[arg(long, requires = "to")]
        from: Option<u64>,
        #[arg(long)]
        to: Option<u64>,
        #[arg(long, default_value_t = 1)]
        step: u64,
    },
}

#[derive(Debug, Subcommand)]
enum LatticeCmd {
    /// One row for order T
    Compute {
        #[arg(short = 'T', long)]
        order: u64,
        /// Exact rationals instead of floating point
        #[arg(long)]
        exact: bool,
    },
    /// One row per order in a range
    Scan {
        #[command(flatten)]
        range: Range,
        #[arg(long)]
        exact: bool,
    },
}

#[derive(Debug, Clone, Args)]
struct PsiArgs {
    #[arg(long = "N")]
    n: u64,
    #[arg(long)]
    k: u32,
    /// p/q, a decimal, golden, invsqrt2 or sqrt2
    #[arg(long)]
    alpha: String,
    #[arg(long, default_value_t = 1)]
    q: u64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Exact rational arithmetic; decimal α is read as an exact rational
    #[arg(long)]
    exact: bool,
}

#[derive(Debug, Subcommand)]
enum FracsumCmd {
    /// Σ_{N<n≤2N, (n,q)=1} ψ(n^k α)
    Eval(PsiArgs),
}

#[derive(Debug, Subcommand)]
enum BoundsCmd {
    /// |ψ-sum| against the ψ-sum bound with the (Nκ)^ε prefactor
    Prop31(PsiArgs),
    /// |ψ-sum| (q = 1) against the Van der Corput form
    Vdc {
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        exact: bool,
    },
    /// Σ min(L, 1/‖nα‖) against LNα + (N + 1/α) log L + L
    Lemma33 {
        #[arg(long = "M", default_value_t = 0)]
        m: u64,
        #[arg(long = "N")]
        n: u64,
        #[arg(long = "L")]
        l: u64,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        exact: bool,
    },
    /// #{n : ‖nα‖ < δ} against Nα + δN + δ/α + 1
    Rcount {
        #[arg(long = "M", default_value_t = 0)]
        m: u64,
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        exact: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScanKind {
    ErrorGrowth,
    Mertens,
    Prop31,
    Lemma33,
    Rcount,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(value_enum)]
    kind: ScanKind,
    /// JSON scan specification; unset fields take the defaults
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Seed for the random α samples (overrides the spec)
    #[arg(long)]
    seed: Option<u64>,
    /// First T (error-growth) or t (mertens) of an arithmetic grid
    #[arg(long, requires = "to")]
    from: Option<u64>,
    /// Last grid value, inclusive
    #[arg(long)]
    to: Option<u64>,
    /// Grid step
    #[arg(long, default_value_t = 1)]
    step: u64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Check(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => CliError::Usage(m),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// What a command produced, before rendering.
enum Payload {
    Table(Table),
    Json(serde_json::Value),
    /// CSV table, or the JSON summary under `--format json`.
    Scan(Table, ScanSummary),
}

struct Outcome {
    payload: Payload,
    table_limit: u64,
    seed: Option<u64>,
    /// Set when an asserted check failed; the output is still written.
    failure: Option<String>,
}

impl Outcome {
    fn table(table: Table, table_limit: u64) -> Self {
        Self {
            payload: Payload::Table(table),
            table_limit,
            seed: None,
            failure: None,
        }
    }
}

fn alpha_arg(s: &str, exact: bool) -> Result<Alpha64, CliError> {
    parse_alpha(s, exact).map_err(|e| CliError::Usage(format!("--alpha: {e}")))
}

fn tables_for(limit: u64) -> Result<ArithTables, CliError> {
    Ok(build_tables(limit.max(1))?)
}

fn report_table(reports: &[BoundReport<f64>]) -> Table {
    let first = &reports[0];
    let mut header: Vec<String> = first.params.iter().map(|p| p.0.to_string()).collect();
    header.push("lhs".into());
    header.extend(first.rhs.terms.iter().map(|t| t.0.to_string()));
    header.extend(["prefactor".into(), "rhs".into(), "ratio".into()]);
    let mut t = Table::new(header);
    for r in reports {
        let mut row: Vec<String> = r.params.iter().map(|p| p.1.clone()).collect();
        row.push(r.lhs.to_string());
        row.extend(r.rhs.terms.iter().map(|t| t.1.to_string()));
        row.extend([r.rhs.prefactor.to_string(), r.rhs_total.to_string(), r.ratio.to_string()]);
        t.push_row(row);
    }
    t
}

fn psi_params(a: &PsiArgs) -> Result<PsiSumParams<f64>, CliError> {
    let mut p = PsiSumParams::new(a.n, a.k, alpha_arg(&a.alpha, a.exact)?, a.q);
    p.epsilon = a.epsilon;
    p.validate()?;
    Ok(p)
}

fn lattice_row(tables: &ArithTables, order: u64, exact: bool) -> Result<Vec<String>, CliError> {
    if exact {
        let r = error_term(tables, order)?;
        return Ok(vec![
            order.to_string(),
            r.c.to_string(),
            r.f.to_string(),
            r.g.to_string(),
            r.e.to_string(),
            r.sigma.to_string(),
            r.half_count.to_string(),
            r.identity_residual.to_string(),
        ]);
    }
    let r = error_term_real::<f64>(tables, order)?;
    let sigma: f64 = sigma_real(tables, order)?;
    let residual = r.e - sigma + r.half_count as f64 / 2.0;
    Ok(vec![
        order.to_string(),
        r.c.to_string(),
        r.f.to_string(),
        r.g.to_string(),
        r.e.to_string(),
        sigma.to_string(),
        r.half_count.to_string(),
        residual.to_string(),
    ])
}

const LATTICE_HEADER: [&str; 8] = ["T", "C", "F", "G", "E", "Sigma", "Icount", "residual"];

fn load_spec(args: &ScanArgs) -> Result<ScanSpec, CliError> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("--spec {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("--spec {}: {e}", path.display())))?
        }
        None => ScanSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn scan_range(args: &ScanArgs) -> Result<Option<Vec<u64>>, CliError> {
    match (args.from, args.to) {
        (Some(from), Some(to)) => Range { from, to, step: args.step }.values().map(Some),
        _ => Ok(None),
    }
}

/// Bound scans are assertion-tagged: every series slope must be at most this.
const SLOPE_TOLERANCE: f64 = 0.05;
const EXPONENT_WINDOW: (f64, f64) = (1.9, 2.7);

fn run_scan(args: &ScanArgs) -> Result<Outcome, CliError> {
    let spec = load_spec(args)?;
    let range = scan_range(args)?;
    match args.kind {
        ScanKind::ErrorGrowth => {
            let orders = range.unwrap_or_else(|| spec.orders.clone());
            let limit = *orders.last().expect("validated");
            let tables = tables_for(limit)?;
            let scan = error_growth_scan(&tables, &orders)?;
            let mut summary = ScanSummary {
                seed: spec.seed,
                grid: orders,
                ..ScanSummary::default()
            };
            summary.fits.insert("absE".into(), scan.fit.clone());
            if let Some(d) = scan.max_rel_deviation {
                summary.residuals.insert("max_rel_deviation_vs_exact".into(), d.to_string());
            }
            let slope = scan.fit.slope;
            let failure = (!(EXPONENT_WINDOW.0..=EXPONENT_WINDOW.1).contains(&slope))
                .then(|| format!("fitted exponent {slope} outside {EXPONENT_WINDOW:?}"));
            Ok(Outcome {
                payload: Payload::Scan(scan.to_table(), summary),
                table_limit: limit,
                seed: Some(spec.seed),
                failure,
            })
        }
        ScanKind::Mertens => {
            let ts = range.unwrap_or_else(|| vec![16, 100, 1_000, 10_000, 100_000, 1_000_000]);
            let limit = *ts.iter().max().expect("nonempty");
            let tables = tables_for(limit)?;
            let rows = mertens_envelope_scan(&tables, &ts)?;
            let failure = rows
                .iter()
                .find(|r| r.m.unsigned_abs() > r.t)
                .map(|r| format!("|M({})| exceeds t", r.t));
            let mut summary = ScanSummary {
                seed: spec.seed,
                grid: ts,
                ..ScanSummary::default()
            };
            let max_scaled = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
            summary.max_ratios.insert("absM_over_sqrt_t".into(), max_scaled);
            Ok(Outcome {
                payload: Payload::Scan(mertens_envelope_table(&rows), summary),
                table_limit: limit,
                seed: Some(spec.seed),
                failure,
            })
        }
        kind => {
            let family = match kind {
                ScanKind::Prop31 => BoundFamily::Prop31,
                ScanKind::Lemma33 => BoundFamily::Lemma33,
                _ => BoundFamily::Rcount,
            };
            let limit = spec.qs.iter().copied().max().unwrap_or(1);
            let tables = tables_for(limit)?;
            let scan = bound_ratio_scan(&tables, &spec, family)?;
            let summary = ScanSummary::from_bound_scan(&scan, &spec);
            let over: Vec<String> = scan
                .series
                .iter()
                .filter(|s| !s.slope_within(SLOPE_TOLERANCE))
                .map(|s| format!("{} (slope {:.4})", s.key, s.slope().unwrap_or(f64::NAN)))
                .collect();
            let failure = (!over.is_empty())
                .then(|| format!("slope above {SLOPE_TOLERANCE}: {}", over.join(", ")));
            Ok(Outcome {
                payload: Payload::Scan(scan.table, summary),
                table_limit: limit,
                seed: Some(spec.seed),
                failure,
            })
        }
    }
}

fn read_fit_input(path: &Path, x: &str, y: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("--input {}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| CliError::Runtime(e.to_string()))?.clone();
    let col = |name: &str, flag: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("{flag}: no column {name:?} in {}", path.display())))
    };
    let (xi, yi) = (col(x, "--x")?, col(y, "--y")?);
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Runtime(e.to_string()))?;
        let num = |i: usize, flag: &str| {
            rec[i].trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!("{flag}: row {} value {:?} is not a number", line + 1, &rec[i]))
            })
        };
        points.push((num(xi, "--x")?, num(yi, "--y")?));
    }
    Ok(points)
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Tables { limit } => {
            let tables = tables_for(*limit)?;
            Ok(Outcome::table(tables.to_table(*limit)?, *limit))
        }
        Command::Farey(FareyCmd::List { order }) => {
            let mut t = Table::new(["index", "num", "den"]);
            for (i, x) in enumerate(*order)?.enumerate() {
                t.push_row([i.to_string(), x.numer().to_string(), x.denom().to_string()]);
            }
            Ok(Outcome::table(t, *order))
        }
        Command::Farey(FareyCmd::Stats { order, from, to, step }) => {
            let orders = match (order, from, to) {
                (Some(o), _, _) => vec![*o],
                (None, Some(f), Some(t)) => Range { from: *f, to: *t, step: *step }.values()?,
                _ => return Err(CliError::Usage("give --order or --from/--to".into())),
            };
            let limit = *orders.iter().max().expect("nonempty");
            let tables = tables_for(limit)?;
            let mut t = Table::new(["T", "F", "I_count", "G_num", "G_den"]);
            for o in orders {
                let s = farey_stats(&tables, o)?;
                t.push_row([
                    o.to_string(),
                    s.cardinality.to_string(),
                    s.half_count.to_string(),
                    s.second_moment.numer().to_string(),
                    s.second_moment.denom().to_string(),
                ]);
            }
            Ok(Outcome::table(t, limit))
        }
        Command::Lattice(LatticeCmd::Compute { order, exact }) => {
            let tables = tables_for(*order)?;
            let mut t = Table::new(LATTICE_HEADER);
            t.push_row(lattice_row(&tables, *order, *exact)?);
            Ok(Outcome::table(t, *order))
        }
        Command::Lattice(LatticeCmd::Scan { range, exact }) => {
            let orders = range.values()?;
            let limit = *orders.last().expect("nonempty");
            let tables = tables_for(limit)?;
            let mut t = Table::new(LATTICE_HEADER);
            for o in orders {
                t.push_row(lattice_row(&tables, o, *exact)?);
            }
            Ok(Outcome::table(t, limit))
        }
        Command::Fracsum(FracsumCmd::Eval(a)) => {
            let p = psi_params(a)?;
            let r = psi_sum(&p, a.exact)?;
            let mut t = Table::new(["N", "k", "alpha", "q", "terms", "value"]);
            t.push_row([
                p.n.to_string(),
                p.k.to_string(),
                p.alpha.to_string(),
                p.q.to_string(),
                r.terms.to_string(),
                r.value.to_string(),
            ]);
            Ok(Outcome::table(t, 1))
        }
        Command::Bounds(cmd) => {
            let (report, limit) = match cmd {
                BoundsCmd::Prop31(a) => {
                    let p = psi_params(a)?;
                    let tables = tables_for(p.q)?;
                    (prop31_report(&tables, &p)?, p.q)
                }
                BoundsCmd::Vdc { n, k, alpha, exact } => {
                    (vdc_report(*n, *k, &alpha_arg(alpha, *exact)?)?, 1)
                }
                BoundsCmd::Lemma33 { m, n, l, alpha, exact } => {
                    let p = MinSumParams {
                        m: *m,
                        n: *n,
                        l: *l,
                        alpha: alpha_arg(alpha, *exact)?,
                    };
                    (lemma33_report(&p)?, 1)
                }
                BoundsCmd::Rcount { m, n, alpha, delta, exact } => {
                    (rcount_report(*m, *n, &alpha_arg(alpha, *exact)?, *delta)?, 1)
                }
            };
            Ok(Outcome::table(report_table(&[report]), limit))
        }
        Command::Scan(args) => run_scan(args),
        Command::IdentityCheck { from, to } => {
            let orders = Range { from: *from, to: *to, step: 1 }.values()?;
            if orders[0] == 0 {
                return Err(CliError::Usage("--from must be >= 1".into()));
            }
            let tables = tables_for(*to)?;
            let mut t = Table::new(["T", "E", "Sigma", "Icount", "residual"]);
            let mut bad = Vec::new();
            for o in orders {
                let r = error_term(&tables, o)?;
                if !r.identity_holds() {
                    bad.push(o);
                }
                t.push_row([
                    o.to_string(),
                    r.e.to_string(),
                    r.sigma.to_string(),
                    r.half_count.to_string(),
                    r.identity_residual.to_string(),
                ]);
            }
            let mut out = Outcome::table(t, *to);
            if !bad.is_empty() {
                out.failure = Some(format!("nonzero residual at T = {bad:?}"));
            }
            Ok(out)
        }
        Command::Fit { input, x, y } => {
            let points = read_fit_input(input, x, y)?;
            let fit = loglog_fit(&points)?;
            Ok(Outcome {
                payload: Payload::Json(serde_json::to_value(fit).expect("json")),
                table_limit: 0,
                seed: None,
                failure: None,
            })
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            let (code, msg) = match e {
                CliError::Usage(m) => (2, m),
                CliError::Check(m) | CliError::Runtime(m) => (1, m),
            };
            eprintln!("error: {msg}");
            return ExitCode::from(code);
        }
    };
    let inputs = ManifestInputs::new(&argv, outcome.table_limit, outcome.seed);
    let digest = inputs.digest();
    let rendered = match (&outcome.payload, cli.format) {
        (Payload::Json(v), _) => Ok(render_json(v, &digest)),
        (Payload::Scan(_, summary), Format::Json) => Ok(render_json(summary, &digest)),
        (Payload::Table(t), Format::Json) => Ok(render_json_records(t, &digest)),
        (Payload::Table(t) | Payload::Scan(t, _), Format::Csv) => render_csv(t, &digest),
    };
    let result = rendered
        .map_err(CliError::from)
        .and_then(|text| emit(&text, cli.out.as_deref(), inputs).map_err(CliError::from))
        .and_then(|()| outcome.failure.map_or(Ok(()), |m| Err(CliError::Check(m))));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
