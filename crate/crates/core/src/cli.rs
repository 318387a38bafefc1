//! Command-line front end and the on-disk profile cache.
//!
//! The cache is an append-only JSON-lines file. Readers take a snapshot
//! without locking; the single writer holds `<cache>.lock` (created with
//! `create_new`) while appending. Later lines override earlier ones for the
//! same `D`, and malformed lines or records from another engine version are
//! ignored.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::arith::Int;
use crate::enumerate::{int_number, DiscriminantProfile};
use crate::error::Error;
use crate::surd::{deserialize_words, expand, serialize_words, CfKind, QuadPoly, QuadSurd};
use crate::units::{decimal, FundamentalUnit};
use crate::verify::{self, Contingency, MemoSource, ProfileData, Report, TheoremId, VerdictRecord};

pub const ENGINE_VERSION: &str = concat!("quadcal-", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_CACHE: &str = "quadcal-cache.jsonl";
pub const CACHE_ENV: &str = "QUADCAL_CACHE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_COUNTEREXAMPLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// The `profile --json` schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileView {
    #[serde(rename = "D", with = "int_number")]
    pub d: Int,
    pub kappa: u64,
    pub kappa_plus: u64,
    pub h: u64,
    pub h_plus: u64,
    #[serde(with = "decimal")]
    pub t: Int,
    #[serde(with = "decimal")]
    pub u: Int,
    pub unit_norm: i8,
    #[serde(serialize_with = "serialize_words", deserialize_with = "deserialize_words")]
    pub cycles_plus: Vec<Vec<Int>>,
    #[serde(serialize_with = "serialize_words", deserialize_with = "deserialize_words")]
    pub cycles_minus: Vec<Vec<Int>>,
}

impl From<&ProfileData> for ProfileView {
    fn from(data: &ProfileData) -> Self {
        let p = &data.profile;
        ProfileView {
            d: p.d.clone(),
            kappa: p.kappa,
            kappa_plus: p.kappa_plus,
            h: p.h,
            h_plus: p.h_plus,
            t: data.unit.t.clone(),
            u: data.unit.u.clone(),
            unit_norm: data.unit.norm,
            cycles_plus: p.cycles_plus.clone(),
            cycles_minus: p.cycles_minus.clone(),
        }
    }
}

impl From<ProfileView> for ProfileData {
    fn from(v: ProfileView) -> Self {
        ProfileData {
            profile: DiscriminantProfile {
                d: v.d,
                kappa: v.kappa,
                kappa_plus: v.kappa_plus,
                h: v.h,
                h_plus: v.h_plus,
                cycles_plus: v.cycles_plus,
                cycles_minus: v.cycles_minus,
            },
            unit: FundamentalUnit { t: v.t, u: v.u, norm: v.unit_norm },
        }
    }
}

/// One line of the cache file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    #[serde(flatten)]
    pub profile: ProfileView,
    pub engine_version: String,
}

impl CacheRecord {
    pub fn new(data: &ProfileData) -> Self {
        CacheRecord { profile: data.into(), engine_version: ENGINE_VERSION.to_string() }
    }
}

pub struct ProfileCache {
    path: PathBuf,
}

/// Removes the lock file when dropped.
struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl ProfileCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        ProfileCache { path: path.into() }
    }

    /// Flag wins over `QUADCAL_CACHE`, which wins over the default.
    pub fn resolve(flag: Option<PathBuf>) -> Self {
        let path = flag
            .or_else(|| std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE));
        Self::new(path)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn lock_path(&self) -> PathBuf {
        let mut name = self.path.as_os_str().to_owned();
        name.push(".lock");
        PathBuf::from(name)
    }

    /// Current records keyed by `D`; a missing file is an empty cache.
    pub fn load(&self) -> io::Result<HashMap<Int, Arc<ProfileData>>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(HashMap::new()),
            Err(e) => return Err(e),
        };
        let mut out = HashMap::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            let Ok(rec) = serde_json::from_str::<CacheRecord>(&line) else {
                continue;
            };
            if rec.engine_version != ENGINE_VERSION {
                continue;
            }
            let data = ProfileData::from(rec.profile);
            out.insert(data.profile.d.clone(), Arc::new(data));
        }
        Ok(out)
    }

    fn lock(&self) -> io::Result<LockGuard> {
        let lock = self.lock_path();
        for _ in 0..40 {
            match OpenOptions::new().write(true).create_new(true).open(&lock) {
                Ok(_) => return Ok(LockGuard(lock)),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => thread::sleep(Duration::from_millis(50)),
                Err(e) => return Err(e),
            }
        }
        Err(io::Error::new(
            io::ErrorKind::WouldBlock,
            format!("cache is locked by another writer ({})", lock.display()),
        ))
    }

    pub fn append(&self, records: &[Arc<ProfileData>]) -> io::Result<()> {
        if records.is_empty() {
            return Ok(());
        }
        let _guard = self.lock()?;
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        let mut buf = Vec::new();
        for data in records {
            serde_json::to_writer(&mut buf, &CacheRecord::new(data))?;
            buf.push(b'\n');
        }
        file.write_all(&buf)?;
        file.flush()
    }
}

#[derive(Parser, Debug)]
#[command(name = "quadcal", version, about = "Calibers and m-calibers of real quadratic discriminants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Continued fraction expansion of a quadratic surd
    Cf(CfArgs),
    /// Calibers, class numbers, fundamental unit and cycles of one discriminant
    Profile(ProfileArgs),
    /// Check congruences and structural laws over a range of primes
    Verify(VerifyArgs),
    /// Empirical scan of the open kappa_plus(pq) congruence
    ScanConjecture(ScanArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false, id = "number")]
pub struct SurdSpec {
    /// (P + sqrt(D)) / Q
    #[arg(long, num_args = 3, value_names = ["P", "Q", "D"], allow_negative_numbers = true)]
    surd: Option<Vec<Int>>,
    /// sqrt(n), i.e. (0 + sqrt(4n)) / 2
    #[arg(long, value_name = "n")]
    sqrt: Option<Int>,
    /// Larger root of a*X^2 + b*X + c
    #[arg(long, num_args = 3, value_names = ["a", "b", "c"], allow_negative_numbers = true)]
    poly: Option<Vec<Int>>,
}

#[derive(Args, Debug)]
pub struct CfArgs {
    #[command(flatten)]
    number: SurdSpec,
    /// Use the minus (ceiling) expansion
    #[arg(long)]
    minus: bool,
}

#[derive(Args, Debug)]
pub struct CacheArgs {
    /// Profile cache file (default: $QUADCAL_CACHE or ./quadcal-cache.jsonl)
    #[arg(long, value_name = "PATH")]
    cache: Option<PathBuf>,
    /// Neither read nor write the cache
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[arg(value_name = "D", allow_negative_numbers = true)]
    d: Int,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum Format {
    Json,
    #[default]
    Csv,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// 3.1 .. 3.11, cor-3.6 .. cor-3.10, 3.2+3.9, lemma-2.3, lemma-2.5, prop-2.1 or all
    #[arg(value_name = "ID")]
    id: String,
    /// Largest prime (or discriminant, for the lemmas) to check
    #[arg(long, value_name = "N")]
    max: u64,
    /// Worker threads (default: available parallelism)
    #[arg(long, value_name = "k")]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Write records here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long, value_name = "N")]
    max: u64,
    #[arg(long, value_name = "k")]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    cache: CacheArgs,
}

/// A failure carrying the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvariantViolation(_) => EXIT_COUNTEREXAMPLE,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

type CmdResult = Result<i32, Failure>;

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Cf(a) => cmd_cf(a, out),
        Command::Profile(a) => cmd_profile(a, out),
        Command::Verify(a) => cmd_verify(a, out, err),
        Command::ScanConjecture(a) => cmd_scan(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn parse_surd(number: SurdSpec) -> Result<QuadSurd, Error> {
    if let Some(v) = number.surd {
        let [p, q, d]: [Int; 3] = v.try_into().expect("clap enforces three values");
        QuadSurd::new(p, q, d)
    } else if let Some(n) = number.sqrt {
        QuadSurd::sqrt_of(n)
    } else {
        let [a, b, c]: [Int; 3] = number.poly.expect("clap enforces one of the three").try_into().expect("three values");
        Ok(QuadSurd::from_poly(&QuadPoly::new(a, b, c)?))
    }
}

fn word(w: &[Int]) -> String {
    let items: Vec<String> = w.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(","))
}

fn words(ws: &[Vec<Int>]) -> String {
    let items: Vec<String> = ws.iter().map(|w| word(w)).collect();
    format!("[{}]", items.join(","))
}

fn cmd_cf(a: CfArgs, out: &mut dyn Write) -> CmdResult {
    let w = parse_surd(a.number).map_err(|e| usage(e.to_string()))?;
    let kind = if a.minus { CfKind::Minus } else { CfKind::Plus };
    let e = expand(&w, kind)?;
    let sum: Int = e.period.iter().sum();
    let (l, s) = if a.minus { ("l+", "S+") } else { ("l", "S") };
    writeln!(out, "surd: {w}")?;
    writeln!(out, "kind: {}", if a.minus { "minus" } else { "plus" })?;
    writeln!(out, "preperiod: {}", word(&e.preperiod))?;
    writeln!(out, "period: {}", word(&e.period))?;
    writeln!(out, "{l}: {}", e.period.len())?;
    writeln!(out, "{s}: {sum}")?;
    Ok(EXIT_OK)
}

/// The cache named by the flags, or `None` under `--no-cache`.
fn cache_of(args: &CacheArgs) -> Option<ProfileCache> {
    (!args.no_cache).then(|| ProfileCache::resolve(args.cache.clone()))
}

fn cmd_profile(a: ProfileArgs, out: &mut dyn Write) -> CmdResult {
    if !crate::arith::is_valid_discriminant(&a.d) {
        return Err(usage(format!("{} is not a valid discriminant", a.d)));
    }
    let cache = cache_of(&a.cache);
    let cached = match &cache {
        Some(c) => c.load()?.remove(&a.d),
        None => None,
    };
    let data = match cached {
        Some(hit) => hit,
        None => {
            let fresh = Arc::new(ProfileData::compute(&a.d)?);
            if let Some(c) = &cache {
                c.append(std::slice::from_ref(&fresh))?;
            }
            fresh
        }
    };
    let v = ProfileView::from(data.as_ref());
    if a.json {
        writeln!(out, "{}", serde_json::to_string(&v).map_err(io::Error::from)?)?;
    } else {
        writeln!(out, "D: {}", v.d)?;
        writeln!(out, "kappa: {}", v.kappa)?;
        writeln!(out, "kappa_plus: {}", v.kappa_plus)?;
        writeln!(out, "h: {}", v.h)?;
        writeln!(out, "h_plus: {}", v.h_plus)?;
        writeln!(out, "unit: t={} u={} norm={}", v.t, v.u, v.unit_norm)?;
        writeln!(out, "cycles_plus: {}", words(&v.cycles_plus))?;
        writeln!(out, "cycles_minus: {}", words(&v.cycles_minus))?;
    }
    Ok(EXIT_OK)
}

fn jobs_of(jobs: Option<usize>) -> Result<usize, Failure> {
    match jobs {
        Some(0) => Err(usage("--jobs must be at least 1")),
        Some(k) => Ok(k),
        None => Ok(thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn source_of(cache: &Option<ProfileCache>) -> Result<MemoSource, Failure> {
    Ok(match cache {
        Some(c) => MemoSource::with_snapshot(c.load()?),
        None => MemoSource::new(),
    })
}

/// Records go to `--out` (report on stdout) or to stdout (report on stderr).
fn emit(
    path: &Option<PathBuf>,
    body: &str,
    out: &mut dyn Write,
    err: &mut dyn Write,
    report: &str,
) -> Result<(), Failure> {
    match path {
        Some(p) => {
            fs::write(p, body).map_err(|e| usage(format!("cannot write {}: {e}", p.display())))?;
            out.write_all(report.as_bytes())?;
        }
        None => {
            out.write_all(body.as_bytes())?;
            err.write_all(report.as_bytes())?;
        }
    }
    Ok(())
}

fn json_lines<T: Serialize>(items: &[T]) -> Result<String, Failure> {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item).map_err(io::Error::from)?);
        s.push('\n');
    }
    Ok(s)
}

fn verify_body(report: &Report, format: Format) -> Result<String, Failure> {
    match format {
        Format::Json => json_lines(&report.records),
        Format::Csv => {
            let mut s = format!("{}\n", VerdictRecord::CSV_HEADER);
            for r in &report.records {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            Ok(s)
        }
    }
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let Some(ids) = TheoremId::parse_selection(&a.id) else {
        return Err(usage(format!("unknown theorem id '{}'", a.id)));
    };
    let jobs = jobs_of(a.jobs)?;
    let cache = cache_of(&a.cache);
    let src = source_of(&cache)?;
    let report = verify::run(&ids, a.max, jobs, &src)?;
    if let Some(c) = &cache {
        c.append(&src.fresh())?;
    }

    let mut text = String::new();
    for note in &report.notes {
        text.push_str(&format!("note: {note}\n"));
    }
    for r in report.failures() {
        text.push_str(&format!("COUNTEREXAMPLE {}\n", serde_json::to_string(r).map_err(io::Error::from)?));
        let bundle = verify::reproduction_bundle(&r.theorem_id, r.p, r.q, &r.d)?;
        text.push_str(&format!("bundle {bundle}\n"));
    }
    text.push_str(&format!("checked/passed/failed/skipped: {}\n", report.summary()));
    emit(&a.out, &verify_body(&report, a.format)?, out, err, &text)?;
    Ok(if report.failed() == 0 { EXIT_OK } else { EXIT_COUNTEREXAMPLE })
}

fn cmd_scan(a: ScanArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    if a.max < 13 {
        return Err(usage(format!("--max must be at least 13, got {}", a.max)));
    }
    let jobs = jobs_of(a.jobs)?;
    let cache = cache_of(&a.cache);
    let src = source_of(&cache)?;
    let records = verify::scan_conjecture(a.max, &src, jobs)?;
    if let Some(c) = &cache {
        c.append(&src.fresh())?;
    }

    let body = match a.format {
        Format::Json => json_lines(&records)?,
        Format::Csv => {
            let mut s = format!("{}\n", verify::ConjectureRecord::CSV_HEADER);
            for r in &records {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
    };

    let failures: Vec<_> = records.iter().filter(|r| !r.pass).collect();
    let mut text = String::new();
    text.push_str(&format!("pairs: {}\n", records.len()));
    text.push_str(&format!("counterexamples: {}\n", failures.len()));
    for r in &failures {
        text.push_str(&format!("finding {}\n", serde_json::to_string(r).map_err(io::Error::from)?));
        let d = Int::from(r.p * r.q);
        text.push_str(&format!("bundle {}\n", verify::reproduction_bundle("conjecture", Some(r.p), Some(r.q), &d)?));
    }
    text.push_str("note: (1+sqrt(q/p))/2 is read as the discriminant-pq surd (p+sqrt(pq))/(2p)\n");
    text.push_str("unit norm -1, condition l((1+sqrt(pq))/2) = l((p+sqrt(pq))/(2p)) (mod 4):\n");
    text.push_str(&Contingency::of(&records, -1).render("periods agree mod 4", "periods differ mod 4"));
    text.push('\n');
    text.push_str("unit norm +1, condition kappa(pq) = 0 (mod 4):\n");
    text.push_str(&Contingency::of(&records, 1).render("kappa = 0 mod 4", "kappa != 0 mod 4"));
    text.push('\n');
    emit(&a.out, &body, out, err, &text)?;
    Ok(EXIT_OK)
}
