//! Command-line front end.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{relative_l2, BumpDistance, SyntheticField, WindGrid};
use crate::filter_bank::{validate_partition, validate_refinement, validate_telescoping, FilterBank};
use crate::io_formats::{load_coeffs, read_bundle, save_coeffs, save_rule, save_sequence, write_bundle, write_error_map};
use crate::needlet_transform::{decompose, parseval_report, reconstruct, reconstruct_coeffs, ArgConvention, LevelScheme};
use crate::pipeline::{round_trip, sample_raw, time_transforms};
use crate::sphere_geom::{gauss_legendre_rule, load_spherical_design, verify_quadrature_exactness, QuadratureRule, SpherePoint};
use crate::vsh::{cross_route_check, vsh_analysis, vsh_synthesis, VectorCoeffPair};

/// Levels at or above this need `--force`.
pub const MEMORY_GUARD_LEVEL: u32 = 10;
pub const DATA_ENV: &str = "TENSLET_DATA";

const EXIT_FAIL: i32 = 1;
const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tenslet", version, about = "Tensor needlet transforms for tangent fields on the sphere")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or load a quadrature rule and report its exactness.
    Quad(QuadArgs),
    /// Decompose, reconstruct, or run a full round trip.
    Transform(TransformArgs),
    /// Timing table over a range of finest levels.
    Bench(BenchArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QuadKind {
    Gl,
    Sd,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    pub kind: QuadKind,
    /// Gauss–Legendre level.
    #[arg(long, short = 'J', value_parser = clap::value_parser!(u32).range(1..))]
    pub level: Option<u32>,
    /// Spherical design file (relative names are also looked up in $TENSLET_DATA).
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Output directory for the rule file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SchemeArgs {
    /// Finest level J.
    #[arg(long = "level", short = 'J', value_parser = clap::value_parser!(u32).range(1..))]
    pub level: u32,
    /// Coarsest level J0.
    #[arg(long = "coarse", value_parser = clap::value_parser!(u32).range(1..))]
    pub coarse: u32,
    /// `gl` or `sd:DIR` with `level<j>.txt` per level.
    #[arg(long, default_value = "gl")]
    pub rule: String,
    #[arg(long, value_enum, default_value_t = Convention::Degree)]
    pub convention: Convention,
    /// Allow levels at or above the memory guard.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Convention {
    Degree,
    Eigenvalue,
}

impl From<Convention> for ArgConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Degree => ArgConvention::Degree,
            Convention::Eigenvalue => ArgConvention::Eigenvalue,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TransformAction {
    Decompose,
    Reconstruct,
    Roundtrip,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    pub action: TransformAction,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// `a`, `b`, `c`, `file:PATH` (coefficient file) or `wind:PATH` (lat,lon,u,v CSV).
    #[arg(long)]
    pub field: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bundle directory to reconstruct from.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Zero every detail sequence before reconstructing.
    #[arg(long)]
    pub drop_details: bool,
    /// Use chord distance inside the Field B bumps.
    #[arg(long)]
    pub chord: bool,
    /// Analysis degree for Fields B and C.
    #[arg(long, default_value_t = crate::fields::REFERENCE_DEGREE)]
    pub reference_degree: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(2..))]
    pub jmin: u32,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(2..))]
    pub jmax: u32,
    #[arg(long = "coarse", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub coarse: u32,
    /// Timed runs per level after one warmup.
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long)]
    pub force: bool,
    /// Write the table as CSV here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Filters,
    Vsh,
    Frame,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: Suite,
    /// Scale the first high-pass mask by this factor before checking.
    #[arg(long)]
    pub inject_defect: Option<f64>,
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_ERROR;
        }
        // A second initialisation in the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let res = match &cli.command {
        Command::Quad(a) => cmd_quad(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a, cli.seed),
    };
    match res {
        Ok(true) => 0,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn resolve_data_path(p: &Path) -> PathBuf {
    if p.exists() || p.is_absolute() {
        return p.to_path_buf();
    }
    match std::env::var_os(DATA_ENV) {
        Some(dir) => Path::new(&dir).join(p),
        None => p.to_path_buf(),
    }
}

fn load_sd(path: &Path) -> Result<QuadratureRule> {
    let p = resolve_data_path(path);
    let f = File::open(&p).map_err(|e| Error::Config(format!("cannot open {}: {e}", p.display())))?;
    load_spherical_design(std::io::BufReader::new(f))
}

fn cmd_quad(a: &QuadArgs) -> Result<bool> {
    let (rule, name) = match a.kind {
        QuadKind::Gl => {
            let level = a.level.ok_or_else(|| Error::Config("`quad gl` needs --level".into()))?;
            (gauss_legendre_rule(level)?, format!("gl_level{level}.txt"))
        }
        QuadKind::Sd => {
            let file = a.file.as_ref().ok_or_else(|| Error::Config("`quad sd` needs --file".into()))?;
            let r = load_sd(file)?;
            let n = r.len();
            (r, format!("sd_{n}.txt"))
        }
    };
    let report = verify_quadrature_exactness(&rule, rule.exactness_degree());
    let w = rule.weights();
    let equal = w.iter().all(|x| (x - w[0]).abs() <= 1e-14 * w[0]);
    println!("kind={} n={} degree={}", rule.kind().label(), rule.len(), rule.exactness_degree());
    println!(
        "max_deviation={:.3e} weight_sum_error={:.3e} equal_weights={equal}",
        report.max_deviation, report.weight_sum_error
    );
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        save_rule(&path, &rule)?;
        println!("wrote {}", path.display());
    }
    let pass = report.max_deviation < 1e-11 && report.weight_sum_error < 1e-11;
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn check_guard(level: u32, force: bool) -> Result<()> {
    if level >= MEMORY_GUARD_LEVEL && !force {
        return Err(Error::Resource(format!(
            "level {level} is at or above the memory guard ({MEMORY_GUARD_LEVEL}); pass --force to run anyway"
        )));
    }
    Ok(())
}

/// Builds the level scheme described by the flags.
pub fn build_scheme(a: &SchemeArgs) -> Result<LevelScheme> {
    check_guard(a.level, a.force)?;
    if a.coarse > a.level {
        return Err(Error::Config(format!("--coarse {} exceeds --level {}", a.coarse, a.level)));
    }
    let conv = a.convention.into();
    if a.rule == "gl" {
        return LevelScheme::gauss_legendre(a.coarse, a.level, conv);
    }
    let Some(dir) = a.rule.strip_prefix("sd:") else {
        return Err(Error::Config(format!("--rule must be `gl` or `sd:DIR`, got `{}`", a.rule)));
    };
    let dir = resolve_data_path(Path::new(dir));
    let rules = (a.coarse..=a.level)
        .map(|j| load_sd(&dir.join(format!("level{j}.txt"))).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    LevelScheme::with_rules(a.coarse, a.level, conv, rules)
}

/// Raw node values of a `--field` source on `rule`.
pub fn field_values(spec: &str, rule: &Arc<QuadratureRule>, reference_degree: usize, chord: bool) -> Result<Vec<crate::vsh::Vec3>> {
    if let Some(p) = spec.strip_prefix("file:") {
        let c = load_coeffs(Path::new(p))?;
        return Ok(sample_raw(&c, rule));
    }
    if let Some(p) = spec.strip_prefix("wind:") {
        let f = File::open(p).map_err(|e| Error::Config(format!("cannot open {p}: {e}")))?;
        let grid = WindGrid::from_csv(std::io::BufReader::new(f))?;
        return grid.tangent_on_rule(rule);
    }
    let field = SyntheticField::parse(spec)?;
    let dist = if chord { BumpDistance::Chord } else { BumpDistance::Geodesic };
    let c = field.coeffs(reference_degree, dist)?;
    Ok(sample_raw(&c, rule))
}

fn timing_line(level: u32, n: usize, t_dec: f64, t_rec: f64) -> String {
    format!("level={level} n={n} t_dec={t_dec:.6}s t_rec={t_rec:.6}s")
}

fn cmd_transform(a: &TransformArgs) -> Result<bool> {
    let scheme = build_scheme(&a.scheme)?;
    let bank = FilterBank::standard();
    let j = scheme.finest();
    let fine = scheme.rule(j).clone();
    let field = || -> Result<Vec<crate::vsh::Vec3>> {
        let spec = a.field.as_deref().ok_or_else(|| Error::Config("--field is required for this action".into()))?;
        field_values(spec, &fine, a.reference_degree, a.chord)
    };
    match a.action {
        TransformAction::Decompose => {
            let out = a.out.as_ref().ok_or_else(|| Error::Config("decompose needs --out".into()))?;
            let raw = field()?;
            let proj = crate::vsh::project_bandlimited(&raw, &fine, scheme.bandlimit(j))?;
            let t = std::time::Instant::now();
            let d = decompose(&proj.projected, &scheme, &bank)?;
            let t_dec = t.elapsed().as_secs_f64();
            write_bundle(out, &d, &scheme)?;
            let p = parseval_report(&d, proj.projected.norm_sqr());
            println!("parseval_deviation={:.3e}", p.relative_deviation);
            println!("level={j} n={} t_dec={t_dec:.6}s", fine.len());
            Ok(p.relative_deviation < 1e-10)
        }
        TransformAction::Reconstruct => {
            let dir = a.bundle.as_ref().ok_or_else(|| Error::Config("reconstruct needs --bundle".into()))?;
            let (mut d, bank) = read_bundle(dir, &scheme)?;
            if a.drop_details {
                d = d.without_details();
            }
            let t = std::time::Instant::now();
            let c = reconstruct_coeffs(&d, &scheme, &bank)?;
            let rec = vsh_synthesis(&c, &fine);
            let t_rec = t.elapsed().as_secs_f64();
            if let Some(out) = &a.out {
                fs::create_dir_all(out)?;
                save_coeffs(&out.join("reconstructed.tnvc"), &c)?;
                save_sequence(&out.join("reconstructed.tnvs"), &rec)?;
            }
            let mut pass = true;
            if a.field.is_some() {
                let raw = field()?;
                let err = relative_l2(&raw, &rec.unweighted());
                println!("relative_error={err:.6e}");
                if let Some(out) = &a.out {
                    let mut w = BufWriter::new(File::create(out.join("error_map.csv"))?);
                    write_error_map(&mut w, fine.points(), &raw, &rec.unweighted())?;
                }
                pass = err.is_finite();
            }
            println!("level={j} n={} t_rec={t_rec:.6}s", fine.len());
            Ok(pass)
        }
        TransformAction::Roundtrip => {
            let raw = field()?;
            let rt = round_trip(&raw, &scheme, &bank, a.drop_details)?;
            println!("projection_error={:.6e}", rt.projection_error);
            println!("transform_error={:.6e}", rt.transform_error);
            println!("relative_error={:.6e}", rt.total_error);
            println!("parseval_deviation={:.3e}", rt.parseval.relative_deviation);
            println!("tangency={:.3e}", rt.tangency);
            println!("{}", timing_line(j, fine.len(), rt.t_dec.as_secs_f64(), rt.t_rec.as_secs_f64()));
            if let Some(out) = &a.out {
                write_bundle(out, &rt.decomposition, &scheme)?;
                let mut w = BufWriter::new(File::create(out.join("error_map.csv"))?);
                write_error_map(&mut w, fine.points(), &rt.raw, &rt.reconstructed)?;
            }
            let transform_ok = a.drop_details || rt.transform_error < 1e-10;
            Ok(transform_ok && rt.parseval.relative_deviation < 1e-10 && rt.tangency < 1e-10)
        }
    }
}

/// One benchmark row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub level: u32,
    pub nodes: usize,
    pub coefficients: usize,
    pub t_dec: f64,
    pub t_rec: f64,
    pub ratio_dec: Option<f64>,
    pub ratio_rec: Option<f64>,
}

/// Field A timings for `J = jmin..=jmax`, coarsest level `coarse`.
pub fn bench_rows(jmin: u32, jmax: u32, coarse: u32, runs: usize, force: bool) -> Result<Vec<BenchRow>> {
    if jmin > jmax {
        return Err(Error::Config(format!("--jmin {jmin} exceeds --jmax {jmax}")));
    }
    check_guard(jmax, force)?;
    let bank = FilterBank::standard();
    let coeffs = crate::fields::field_a();
    let mut rows: Vec<BenchRow> = Vec::new();
    for j in jmin..=jmax {
        let scheme = LevelScheme::gauss_legendre(coarse.min(j), j, ArgConvention::Degree)?;
        let rule = scheme.rule(j);
        let v = vsh_synthesis(&coeffs.resized(scheme.bandlimit(j).min(coeffs.l_max())), rule);
        let (d, r) = time_transforms(&v, &scheme, &bank, runs)?;
        let (t_dec, t_rec) = (d.as_secs_f64(), r.as_secs_f64());
        let prev = rows.last().copied();
        rows.push(BenchRow {
            level: j,
            nodes: rule.len(),
            coefficients: LevelScheme::coefficient_count(j),
            t_dec,
            t_rec,
            ratio_dec: prev.map(|p| t_dec / p.t_dec),
            ratio_rec: prev.map(|p| t_rec / p.t_rec),
        });
    }
    Ok(rows)
}

fn cmd_bench(a: &BenchArgs) -> Result<bool> {
    let rows = bench_rows(a.jmin, a.jmax, a.coarse, a.runs, a.force)?;
    let fmt_ratio = |r: Option<f64>| r.map_or(String::new(), |x| format!("{x:.3}"));
    let mut csv = String::from("J,N,M,t_dec,t_rec,ratio_dec,ratio_rec\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{:.6},{:.6},{},{}\n",
            r.level,
            r.nodes,
            r.coefficients,
            r.t_dec,
            r.t_rec,
            fmt_ratio(r.ratio_dec),
            fmt_ratio(r.ratio_rec)
        ));
    }
    print!("{csv}");
    for r in &rows {
        println!("{}", timing_line(r.level, r.nodes, r.t_dec, r.t_rec));
    }
    if let Some(p) = &a.out {
        fs::write(p, &csv)?;
    }
    Ok(rows.iter().all(|r| r.t_dec.is_finite() && r.t_rec.is_finite()))
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    fn new(name: &str, value: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            tol,
        }
    }

    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value < self.tol
    }
}

fn random_coeffs(l: usize, rng: &mut ChaCha8Rng) -> VectorCoeffPair {
    let n = VectorCoeffPair::family_len(l);
    let mut g = || (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect::<Vec<_>>();
    let div = g();
    let curl = g();
    VectorCoeffPair::from_parts(l, div, curl).expect("lengths match")
}

fn random_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<SpherePoint> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            SpherePoint::from_angles(z.acos(), phi).expect("valid angles")
        })
        .collect()
}

/// Runs a verification suite against `bank`.
pub fn verify_suite(suite: Suite, bank: &FilterBank, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = suite == Suite::All;
    if all || suite == Suite::Filters {
        out.push(Check::new("filters.partition", validate_partition(bank, 10_000), 1e-12));
        out.push(Check::new("filters.refinement", validate_refinement(bank, 10_000), 1e-12));
        out.push(Check::new("filters.telescoping", validate_telescoping(bank, 10_000), 1e-12));
    }
    if all || suite == Suite::Vsh {
        for level in 1..=6 {
            let r = gauss_legendre_rule(level)?;
            let rep = verify_quadrature_exactness(&r, r.exactness_degree());
            out.push(Check::new(&format!("vsh.quadrature_gl{level}"), rep.max_deviation, 1e-11));
        }
        let rule = Arc::new(gauss_legendre_rule(5)?);
        let (gram, cross) = gram_deviation(&rule, 16);
        out.push(Check::new("vsh.gram", gram, 1e-10));
        out.push(Check::new("vsh.cross_family", cross, 1e-11));
        let pts = random_points(100, &mut rng);
        let rep = cross_route_check(8, &pts);
        out.push(Check::new("vsh.cross_route", rep.max_deviation, 1e-10));
    }
    if all || suite == Suite::Frame {
        let scheme = LevelScheme::gauss_legendre(3, 5, ArgConvention::Degree)?;
        let c = random_coeffs(scheme.bandlimit(5), &mut rng);
        let v = vsh_synthesis(&c, scheme.rule(5));
        let d = decompose(&v, &scheme, bank)?;
        let rec = reconstruct(&d, &scheme, bank)?;
        out.push(Check::new("frame.reconstruction", relative_l2(v.values(), rec.values()), 1e-10));
        out.push(Check::new("frame.parseval", parseval_report(&d, v.norm_sqr()).relative_deviation, 1e-10));
    }
    Ok(out)
}

/// Max Gram deviation of the synthesised basis on `rule` up to degree `l`,
/// and the largest cross-family entry. Uses the transform pair: the analysis
/// of each basis element recovers one row of the Gram matrix.
pub fn gram_deviation(rule: &Arc<QuadratureRule>, l: usize) -> (f64, f64) {
    let n = VectorCoeffPair::family_len(l);
    let mut gram: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for fam in 0..2 {
        for k in 0..n {
            let mut c = VectorCoeffPair::zeros(l);
            if fam == 0 {
                c.div_mut()[k] = C64::new(1.0, 0.0);
            } else {
                c.curl_mut()[k] = C64::new(1.0, 0.0);
            }
            let row = vsh_analysis(&vsh_synthesis(&c, rule), l).coeffs;
            let (same, other) = if fam == 0 { (row.div(), row.curl()) } else { (row.curl(), row.div()) };
            for (i, z) in same.iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                gram = gram.max((z - want).norm());
            }
            cross = other.iter().fold(cross, |m, z| m.max(z.norm()));
        }
    }
    (gram, cross)
}

fn cmd_verify(a: &VerifyArgs, seed: u64) -> Result<bool> {
    let mut bank = FilterBank::standard();
    if let Some(f) = a.inject_defect {
        bank = bank.with_high_scaled(1, f)?;
        println!("injected defect: high-pass 1 scaled by {f}");
    }
    let checks = verify_suite(a.suite, &bank, seed)?;
    let mut pass = true;
    for c in &checks {
        let ok = c.passed();
        pass &= ok;
        println!("{} {} max_deviation={:.3e} tol={:.0e}", if ok { "PASS" } else { "FAIL" }, c.name, c.value, c.tol);
    }
    Ok(pass)
}
