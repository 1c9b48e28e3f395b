use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use planecode::code::{
    check_spectrum_system, derived_design_integral, format_code, q_analogue_parameters, read_code, spectra_all_solids,
    spectrum, verify_t2, write_code, SubspaceCode,
};
use planecode::constructions::{
    almrd_code, build_c, build_c0, build_c_ext, find_line_packing, rspace_aug_code, rspace_code, Context,
};
use planecode::extension::{
    default_decompositions, extension_candidates, extension_upper_bound, match_and_extend_q2, search_extension,
    structured_start, SearchConfig,
};
use planecode::gabidulin::lifted_code;
use planecode::geometry::Ambient;
use planecode::projective::ProjPlane;

const NODE_LIMIT: u64 = 50_000_000;

#[derive(Parser, Debug)]
#[command(name = "planecode", version, about = "Plane subspace codes in PG(6,q)")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    report_format: Format,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BuildName {
    Lmrd,
    Almrd,
    Rspace,
    RspaceAug,
    C0,
    C,
    CExt,
    ExtendQ2,
    ExtendSearch,
}

#[derive(clap::Args, Debug, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3600)]
    budget_secs: u64,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Field tables: modulus, epsilon, d and the subspace W.
    FieldInfo {
        #[arg(long, default_value_t = 2)]
        q: u32,
    },
    /// Construct a code, verify it, and write it.
    Build {
        #[arg(value_enum)]
        name: BuildName,
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Lines `<r> <index>` selecting trivial-class planes.
        #[arg(long)]
        choice_file: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Check that no line lies in two planes.
    Verify { file: PathBuf },
    /// Intersection vector against the special solid or all solids.
    Spectrum {
        file: PathBuf,
        #[arg(long)]
        all_solids: bool,
    },
    /// Invariants of PG(3,q): sigma, ovoids, line orbits, decompositions.
    Invariants {
        #[arg(long, default_value_t = 2)]
        q: u32,
    },
    /// The structured binary extension.
    ExtendQ2 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heuristic extension search.
    ExtendSearch {
        #[arg(long, default_value_t = 3)]
        q: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Parameters of a putative q-analogue of the Fano plane.
    Params {
        #[arg(long, default_value_t = 2)]
        q: u32,
    },
}

enum Failure {
    Verify(String),
    Build(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Input(_) => 2,
            Failure::Build(_) => 3,
        }
    }
}

fn build_err(e: impl Display) -> Failure {
    Failure::Build(e.to_string())
}

fn input_err(e: impl Display) -> Failure {
    Failure::Input(e.to_string())
}

/// Records of key/value fields, printed as `k=v` pairs or tab-separated values.
struct Report {
    format: Format,
}

impl Report {
    fn emit(&self, fields: &[(&str, String)]) {
        let line: Vec<String> = match self.format {
            Format::Text => fields.iter().map(|(k, v)| format!("{k}={v}")).collect(),
            Format::Tsv => fields.iter().map(|(_, v)| v.clone()).collect(),
        };
        let sep = if self.format == Format::Text { " " } else { "\t" };
        say(&line.join(sep));
    }
}

/// Prints a line, ignoring a closed stdout.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn list<T: Display>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn context(q: u32) -> Result<Context, Failure> {
    Context::new(q).map_err(input_err)
}

fn read_choice(path: &Path, n: usize) -> Result<Vec<usize>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let mut choice = vec![0; n];
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || input_err(format!("{}:{}: expected `<r> <index>`", path.display(), i + 1));
        let nums: Vec<usize> = line.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| bad())?;
        match nums[..] {
            [r, idx] if r < n => choice[r] = idx,
            _ => return Err(bad()),
        }
    }
    Ok(choice)
}

fn search_config(s: &SearchArgs) -> SearchConfig {
    SearchConfig {
        seed: s.seed,
        budget: Duration::from_secs(s.budget_secs),
        restarts: s.restarts.max(1),
        ..SearchConfig::default()
    }
}

fn run_search(ctx: &Context, s: &SearchArgs, rep: &Report) -> Result<SubspaceCode, Failure> {
    let c0 = build_c0(ctx).map_err(build_err)?;
    let cands = extension_candidates(ctx);
    let start = structured_start(ctx, &c0).map_err(build_err)?;
    let decomps = default_decompositions(ctx, NODE_LIMIT).map_err(build_err)?;
    let bound = extension_upper_bound(ctx, &c0, &decomps);
    let out = search_extension(&c0, &cands, Some(&start), &search_config(s), &|size, secs| {
        say(&format!("best={size} at {secs:.2}s"));
    })
    .map_err(build_err)?;
    rep.emit(&[
        ("vertices", out.vertices.to_string()),
        ("added", out.added.len().to_string()),
        ("exact", out.exact.to_string()),
        ("bound", bound.to_string()),
    ]);
    Ok(out.code)
}

fn construct(
    name: BuildName,
    q: u32,
    choice: Option<&Path>,
    search: &SearchArgs,
    rep: &Report,
) -> Result<SubspaceCode, Failure> {
    let ctx = context(q)?;
    let choice = choice.map(|p| read_choice(p, ctx.n() as usize)).transpose()?;
    let choice = choice.as_deref();
    match name {
        BuildName::Lmrd => lifted_code(&ctx.amb).map_err(build_err),
        BuildName::Almrd | BuildName::RspaceAug => {
            let packing = find_line_packing(&ctx.proj).map_err(build_err)?;
            if name == BuildName::Almrd {
                almrd_code(&ctx, &packing).map_err(build_err)
            } else {
                rspace_aug_code(&ctx, &packing).map_err(build_err)
            }
        }
        BuildName::Rspace => rspace_code(&ctx).map_err(build_err),
        BuildName::C0 => build_c0(&ctx).map_err(build_err),
        BuildName::C => build_c(&ctx, choice).map_err(build_err),
        BuildName::CExt => build_c_ext(&ctx, choice).map_err(build_err),
        BuildName::ExtendQ2 => extend_q2(&ctx, rep),
        BuildName::ExtendSearch => run_search(&ctx, search, rep),
    }
}

fn extend_q2(ctx: &Context, rep: &Report) -> Result<SubspaceCode, Failure> {
    let c0 = build_c0(ctx).map_err(build_err)?;
    let ext = match_and_extend_q2(ctx, &c0).map_err(build_err)?;
    rep.emit(&[
        ("e_added", ext.e_added.to_string()),
        ("n2_added", ext.n2_added.len().to_string()),
        ("bad_points", list(&ext.bad_points)),
    ]);
    Ok(ext.code)
}

fn finish(code: &SubspaceCode, out: Option<&Path>, rep: &Report) -> Result<(), Failure> {
    let r = verify_t2(code);
    if !r.t2_ok {
        return Err(Failure::Build(format!("{} fails the t=2 check", code.tag())));
    }
    let summary = [("code", code.tag().to_string()), ("size", code.len().to_string()), ("t2", "OK".into())];
    match out {
        Some(p) => {
            write_code(code, p).map_err(build_err)?;
            rep.emit(&summary);
        }
        None => {
            let _ = std::io::stdout().lock().write_all(format_code(code).as_bytes());
            eprintln!("{}", list(summary.iter().map(|(k, v)| format!("{k}={v}"))));
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<SubspaceCode, Failure> {
    read_code(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn verify(path: &Path, rep: &Report) -> Result<(), Failure> {
    let code = load(path)?;
    let r = verify_t2(&code);
    if r.t2_ok {
        rep.emit(&[("size", r.size.to_string()), ("t2", "OK".into())]);
        return Ok(());
    }
    rep.emit(&[("size", r.size.to_string()), ("t2", "FAIL".into())]);
    if let Some((a, b)) = r.violation {
        let pair = SubspaceCode::new(code.q(), vec![a, b], "pair").map_err(input_err)?;
        for line in format_code(&pair).lines().skip(1) {
            say(&format!("shared-line plane: {line}"));
        }
    }
    Err(Failure::Verify(format!("{} planes share a line", path.display())))
}

fn spectra(path: &Path, all: bool, rep: &Report) -> Result<(), Failure> {
    let code = load(path)?;
    let amb = Ambient::for_q(code.q()).map_err(input_err)?;
    let s = spectrum(&code, &amb.special_solid());
    let sys = check_spectrum_system(&s, code.q());
    rep.emit(&[("solid", "S".into()), ("spectrum", list(s.0)), ("system", sys.ok.to_string())]);
    if all {
        let hist = spectra_all_solids(&code).map_err(input_err)?;
        for (sp, count) in &hist {
            let ok = check_spectrum_system(sp, code.q()).ok;
            rep.emit(&[("spectrum", list(sp.0)), ("solids", count.to_string()), ("system", ok.to_string())]);
        }
        if hist.keys().any(|sp| !check_spectrum_system(sp, code.q()).ok) {
            return Err(Failure::Verify("spectrum system violated".into()));
        }
    }
    Ok(())
}

fn field_info(q: u32, rep: &Report) -> Result<(), Failure> {
    let ctx = context(q)?;
    let ft = ctx.ft();
    let log = |x| ft.log(x).map_or("-".to_string(), |l| l.to_string());
    let w: Vec<u32> = ft.w().iter().filter_map(|&x| ft.log(x)).collect();
    rep.emit(&[
        ("q", q.to_string()),
        ("modulus", list(ft.modulus())),
        ("epsilon", log(ft.epsilon())),
        ("d", log(ft.d())),
        ("W", list(w)),
    ]);
    Ok(())
}

fn invariants(q: u32, rep: &Report) -> Result<(), Failure> {
    let ctx = context(q)?;
    let p = &ctx.proj;
    for a in 0..p.n() {
        let s = p.sigma(ProjPlane(a)).map_or("-".to_string(), |s| s.to_string());
        rep.emit(&[("record", "sigma".into()), ("plane", a.to_string()), ("value", s)]);
    }
    for (j, o) in p.ovoid_fibration().ovoids.iter().enumerate() {
        rep.emit(&[("record", "ovoid".into()), ("index", j.to_string()), ("points", list(o))]);
    }
    let table = p.line_orbits();
    for (i, o) in table.orbits.iter().enumerate() {
        rep.emit(&[
            ("record", "orbit".into()),
            ("index", i.to_string()),
            ("rep", list(o.rep.points())),
            ("ovoid", o.ovoid.to_string()),
            ("short", o.short.to_string()),
            ("connection", list(p.connection_set(o))),
        ]);
    }
    for d in default_decompositions(&ctx, NODE_LIMIT).map_err(build_err)? {
        for (k, c) in d.cocliques.iter().enumerate() {
            rep.emit(&[
                ("record", "coclique".into()),
                ("orbit", d.orbit.to_string()),
                ("part", k.to_string()),
                ("members", list(c)),
            ]);
        }
        rep.emit(&[
            ("record", "remainder".into()),
            ("orbit", d.orbit.to_string()),
            ("members", list(&d.remainder)),
            ("optimal", d.optimal.to_string()),
        ]);
    }
    Ok(())
}

fn params(q: u32, rep: &Report) -> Result<(), Failure> {
    if !(2..=5).contains(&q) {
        return Err(input_err(format!("unsupported q={q}")));
    }
    let p = q_analogue_parameters(q);
    rep.emit(&[
        ("q", q.to_string()),
        ("planes", p.size.to_string()),
        ("per_point", p.planes_per_point.to_string()),
        ("f0", p.f0.to_string()),
        ("f1", p.f1.to_string()),
        ("alpha0", list(p.alpha0)),
        ("alpha1", list(p.alpha1)),
        ("derived_integral", derived_design_integral(q, 2, 3, 7).to_string()),
    ]);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let rep = Report { format: cli.report_format };
    match cli.cmd {
        Command::FieldInfo { q } => field_info(q, &rep),
        Command::Build { name, q, out, choice_file, search } => {
            let code = construct(name, q, choice_file.as_deref(), &search, &rep)?;
            finish(&code, out.as_deref(), &rep)
        }
        Command::Verify { file } => verify(&file, &rep),
        Command::Spectrum { file, all_solids } => spectra(&file, all_solids, &rep),
        Command::Invariants { q } => invariants(q, &rep),
        Command::ExtendQ2 { out } => {
            let code = extend_q2(&context(2)?, &rep)?;
            finish(&code, out.as_deref(), &rep)
        }
        Command::ExtendSearch { q, out, search } => {
            let code = run_search(&context(q)?, &search, &rep)?;
            finish(&code, out.as_deref(), &rep)
        }
        Command::Params { q } => params(q, &rep),
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("SUBSPACE_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Verify(m) | Failure::Build(m) | Failure::Input(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
