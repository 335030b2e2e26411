//! Command-line front end for the truncated sphere models: builds a
//! geometry from flags, runs the verification suites, computes index
//! pairings, zeta values and residues, and dumps operators or decay
//! series for offline inspection.
//!
//! Exit codes: 0 on success, 1 when a requested check or computation
//! fails, 2 on configuration errors.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand, ValueEnum};
use podles::analysis::{
    chern_pairing, collect_decay_series, residue_at, run_algebraic_checks, run_decay_checks,
    zeta_partial, beta_monomial_residue, CheckReport, IndexMethod, SuiteConfig,
};
use podles::basis_ops::{BandedOperator, C};
use podles::podles_repr::ModelContext;
use podles::qarith::{HalfInt, Scalar, SoftFloat};
use podles::spin_geometry::{DiracSchedule, SpinGeometry};
use podles::word_algebra::{parse_element, represent};

#[derive(Parser)]
#[command(name = "podles", version, about = "Finite-truncation sphere model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the algebraic and decay suites, writing a JSON report.
    Verify(ModelArgs),
    /// Pair the charged projection with the Fredholm module.
    Index {
        #[command(flatten)]
        model: ModelArgs,
        /// Summation strategy for the pairing.
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
    },
    /// Zeta values and residues of represented elements.
    Zeta {
        #[command(flatten)]
        model: ModelArgs,
        /// Pole order for a residue computation.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        residue: Option<u32>,
        /// Element expression; identifiers xm1, x0, xp1, constants q, t, i,
        /// operators + - * / ^, star(...), parentheses, decimals.
        #[arg(long)]
        elem: Option<String>,
        /// Power k for the compressed (beta beta*)^k monomial residue.
        #[arg(long = "beta-monomial")]
        beta_monomial: Option<u32>,
        /// Argument for a zeta value with the truncation tail restored.
        #[arg(long, allow_hyphen_values = true)]
        z: Option<f64>,
    },
    /// Write the block-norm decay series as CSV.
    Decay(ModelArgs),
    /// Write the entries of a represented element or named operator as CSV.
    Dump {
        #[command(flatten)]
        model: ModelArgs,
        /// Element expression to represent and dump.
        #[arg(long)]
        elem: Option<String>,
        /// Named operator of the geometry to dump.
        #[arg(long, value_enum)]
        op: Option<NamedOp>,
    },
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Deformation parameter, in (0, 1).
    #[arg(long)]
    q: f64,
    /// Family parameter, in [0, 1].
    #[arg(long)]
    t: f64,
    /// Twice the truncation level; parity must match the winding.
    #[arg(long, default_value_t = 21)]
    lmax2: i32,
    /// Mantissa bits; 64 selects hardware binary64, 32..=4096 software floats.
    #[arg(long, default_value_t = 64)]
    prec: u32,
    /// Relative residual tolerance for the algebraic checks.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Levels excluded at the truncated top when comparing identities.
    #[arg(long, default_value_t = 2)]
    guard: i32,
    /// Twice the winding of the spinor tower.
    #[arg(long = "N2", default_value_t = 1)]
    n2: i32,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; each subcommand has a natural default.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Record wall-clock milliseconds per check (off by default so reports
    /// are byte-identical across runs).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Series,
    Trace,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NamedOp {
    Xm1,
    X0,
    Xp1,
    Zm1,
    Z0,
    Zp1,
    D,
    AbsD,
    F,
    Gamma,
}

/// A failure routed to an exit code: 2 for configuration problems, 1 for
/// computations or checks that ran and came out negative.
struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { message: message.into(), code: 2 }
    }

    fn check(message: impl Into<String>) -> Self {
        Failure { message: message.into(), code: 1 }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(model) => dispatch(model, CommandKind::Verify),
        Command::Index { model, method } => dispatch(model, CommandKind::Index(*method)),
        Command::Zeta { model, residue, elem, beta_monomial, z } => dispatch(
            model,
            CommandKind::Zeta {
                residue: *residue,
                elem: elem.clone(),
                beta_monomial: *beta_monomial,
                z: *z,
            },
        ),
        Command::Decay(model) => dispatch(model, CommandKind::Decay),
        Command::Dump { model, elem, op } => {
            dispatch(model, CommandKind::Dump { elem: elem.clone(), op: *op })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

enum CommandKind {
    Verify,
    Index(Method),
    Zeta { residue: Option<u32>, elem: Option<String>, beta_monomial: Option<u32>, z: Option<f64> },
    Decay,
    Dump { elem: Option<String>, op: Option<NamedOp> },
}

/// Validates the shared flags, resolves the precision tier, and runs the
/// subcommand body at the selected scalar type.
fn dispatch(model: &ModelArgs, kind: CommandKind) -> Result<(), Failure> {
    validate(model, matches!(kind, CommandKind::Verify))?;
    let bits = match std::env::var("PODLES_PREC_BITS") {
        Ok(s) => s
            .trim()
            .parse::<u32>()
            .map_err(|_| Failure::config(format!("PODLES_PREC_BITS is not an integer: {s:?}")))?,
        Err(_) => model.prec,
    };
    if bits == 64 {
        run::<f64>(model, (), kind)
    } else if (32..=4096).contains(&bits) {
        run::<SoftFloat>(model, bits, kind)
    } else {
        Err(Failure::config(format!(
            "prec must be 64 (binary64) or lie in 32..=4096 (software), got {bits}"
        )))
    }
}

fn validate(model: &ModelArgs, needs_interior: bool) -> Result<(), Failure> {
    if !(model.q.is_finite() && model.q > 0.0 && model.q < 1.0) {
        return Err(Failure::config("q must lie in (0,1)"));
    }
    if !(model.t.is_finite() && (0.0..=1.0).contains(&model.t)) {
        return Err(Failure::config("t must lie in [0,1]"));
    }
    if model.n2 < 1 {
        return Err(Failure::config(format!("N2 must be at least 1, got {}", model.n2)));
    }
    if model.lmax2 < 5 {
        return Err(Failure::config(format!(
            "lmax2 must be at least 5 so identities have an interior, got {}",
            model.lmax2
        )));
    }
    if (model.lmax2 - model.n2) % 2 != 0 {
        return Err(Failure::config(format!(
            "lmax2 and N2 must have equal parity, got lmax2 {} with N2 {}",
            model.lmax2, model.n2
        )));
    }
    if model.guard < 0 {
        return Err(Failure::config(format!("guard must be nonnegative, got {}", model.guard)));
    }
    if needs_interior && model.lmax2 - 2 * model.guard < model.n2 + 2 {
        return Err(Failure::config(format!(
            "no interior: lmax2 {} minus 2 guard {} leaves fewer than two levels",
            model.lmax2, model.guard
        )));
    }
    if !(model.tol.is_finite() && model.tol > 0.0) {
        return Err(Failure::config(format!("tol must be positive, got {}", model.tol)));
    }
    Ok(())
}

fn run<R: Scalar>(model: &ModelArgs, prec: R::Prec, kind: CommandKind) -> Result<(), Failure> {
    let ctx = ModelContext::<R>::new(
        R::from_f64(model.q, prec),
        R::from_f64(model.t, prec),
        HalfInt::new(model.lmax2),
        DiracSchedule::default(),
    );
    let geom = SpinGeometry::build_with_n(ctx, HalfInt::new(model.n2));
    let suite = SuiteConfig {
        guard: model.guard,
        tolerance: model.tol,
        clock: if model.timing { Some(wall_ms) } else { None },
    };
    match kind {
        CommandKind::Verify => cmd_verify(model, &geom, &suite),
        CommandKind::Index(method) => cmd_index(model, &geom, method),
        CommandKind::Zeta { residue, elem, beta_monomial, z } => {
            cmd_zeta(model, &geom, residue, elem.as_deref(), beta_monomial, z)
        }
        CommandKind::Decay => cmd_decay(model, &geom),
        CommandKind::Dump { elem, op } => cmd_dump(model, &geom, elem.as_deref(), op),
    }
}

fn wall_ms() -> u64 {
    SystemTime::now()
        .duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn emit(model: &ModelArgs, body: &str) -> Result<(), Failure> {
    match &model.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn expect_format(model: &ModelArgs, natural: Format, name: &str) -> Result<(), Failure> {
    match model.format {
        None => Ok(()),
        Some(f) if f == natural => Ok(()),
        Some(_) => Err(Failure::config(format!(
            "{name} supports only its native format ({})",
            match natural {
                Format::Json => "json",
                Format::Csv => "csv",
                Format::Text => "text",
            }
        ))),
    }
}

/// Formats a float with a fixed 17-significant-digit scientific notation so
/// reports are reproducible byte for byte.
fn fnum(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // JSON has no literal for non-finite numbers.
        "null".to_string()
    }
}

fn json_report<R: Scalar>(model: &ModelArgs, geom: &SpinGeometry<R>, checks: &[CheckReport]) -> String {
    let mut s = String::new();
    s.push_str("{\n  \"ctx\": {");
    let _ = write!(
        s,
        "\"q\": {}, \"t\": {}, \"lmax2\": {}, \"n2\": {}, \"prec_bits\": {}, \"guard\": {}, \"tol\": {}",
        fnum(model.q),
        fnum(model.t),
        model.lmax2,
        model.n2,
        geom.ctx.prec_bits(),
        model.guard,
        fnum(model.tol),
    );
    s.push_str("},\n  \"checks\": [\n");
    for (k, r) in checks.iter().enumerate() {
        let _ = write!(
            s,
            "    {{\"id\": \"{}\", \"mode\": \"{}\", \"pass\": {}, \"residual\": {}, \"slope\": {}, \"r2\": {}, \"expected\": {}, \"tol\": {}, \"ms\": {}}}",
            r.id,
            r.mode.as_str(),
            r.pass,
            fnum(r.residual),
            r.slope.map_or("null".to_string(), fnum),
            r.r2.map_or("null".to_string(), fnum),
            r.expected.map_or("null".to_string(), fnum),
            fnum(r.tol),
            r.ms,
        );
        s.push_str(if k + 1 == checks.len() { "\n" } else { ",\n" });
    }
    let passed = checks.iter().filter(|r| r.pass).count();
    let _ = write!(
        s,
        "  ],\n  \"summary\": {{\"pass\": {}, \"fail\": {}}}\n}}\n",
        passed,
        checks.len() - passed
    );
    s
}

fn cmd_verify<R: Scalar>(
    model: &ModelArgs,
    geom: &SpinGeometry<R>,
    suite: &SuiteConfig,
) -> Result<(), Failure> {
    expect_format(model, Format::Json, "verify")?;
    let mut checks = run_algebraic_checks(geom, suite);
    checks.extend(run_decay_checks(geom, suite));
    let body = json_report(model, geom, &checks);
    emit(model, &body)?;
    if checks.iter().all(|r| r.pass) {
        Ok(())
    } else {
        let failed: Vec<&str> = checks.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
        Err(Failure::check(format!("failed checks: {}", failed.join(", "))))
    }
}

fn cmd_index<R: Scalar>(
    model: &ModelArgs,
    geom: &SpinGeometry<R>,
    method: Method,
) -> Result<(), Failure> {
    expect_format(model, Format::Text, "index")?;
    let mut body = String::new();
    let runs: &[(&str, IndexMethod)] = match method {
        Method::Series => &[("series", IndexMethod::Series)],
        Method::Trace => &[("trace", IndexMethod::Trace)],
        Method::Both => &[("series", IndexMethod::Series), ("trace", IndexMethod::Trace)],
    };
    for (name, m) in runs {
        let (value, bound) = chern_pairing(geom, *m).map_err(Failure::check)?;
        let _ = writeln!(body, "index ({name}) = {value:.8} \u{00b1} {bound:.3e}");
    }
    emit(model, &body)
}

fn cmd_zeta<R: Scalar>(
    model: &ModelArgs,
    geom: &SpinGeometry<R>,
    residue: Option<u32>,
    elem: Option<&str>,
    beta_monomial: Option<u32>,
    z: Option<f64>,
) -> Result<(), Failure> {
    expect_format(model, Format::Text, "zeta")?;
    let mut body = String::new();
    match (residue, z, beta_monomial) {
        (None, Some(zv), None) => {
            let expr = elem.unwrap_or("1");
            let a = parse_element(expr, &geom.ctx).map_err(Failure::config)?;
            let value = zeta_partial(&a, C::<f64>::new(zv, 0.0), geom);
            let _ = writeln!(body, "zeta[{expr}]({zv}) = {} + {} i", fnum(value.re), fnum(value.im));
        }
        (Some(pole), None, None) => {
            let expr = elem.ok_or_else(|| {
                Failure::config("a residue computation needs --elem or --beta-monomial")
            })?;
            let a = parse_element(&expr, &geom.ctx).map_err(Failure::config)?;
            let value = residue_at(pole, &a, geom).map_err(Failure::check)?;
            let _ = writeln!(body, "residue_{pole}[{expr}] = {}", fnum(value));
        }
        (Some(1), None, Some(k)) => {
            let value = beta_monomial_residue(k, geom).map_err(Failure::check)?;
            let _ = writeln!(body, "residue_1[P (beta beta*)^{k} Q] = {}", fnum(value));
        }
        (Some(_), None, Some(_)) => {
            return Err(Failure::config("the beta-monomial residue lives at the pole 1"));
        }
        _ => {
            return Err(Failure::config(
                "choose exactly one of --z or --residue (with --elem or --beta-monomial)",
            ));
        }
    }
    emit(model, &body)
}

fn cmd_decay<R: Scalar>(model: &ModelArgs, geom: &SpinGeometry<R>) -> Result<(), Failure> {
    expect_format(model, Format::Csv, "decay")?;
    let mut body = String::from("check_id,series,l2,l,norm\n");
    for s in collect_decay_series(geom) {
        for (l2, v) in &s.points {
            let _ = writeln!(
                body,
                "{},{},{},{:.1},{}",
                s.check_id,
                s.series,
                l2,
                f64::from(*l2) / 2.0,
                fnum(*v)
            );
        }
    }
    emit(model, &body)
}

fn cmd_dump<R: Scalar>(
    model: &ModelArgs,
    geom: &SpinGeometry<R>,
    elem: Option<&str>,
    op: Option<NamedOp>,
) -> Result<(), Failure> {
    expect_format(model, Format::Csv, "dump")?;
    let operator: BandedOperator<R> = match (elem, op) {
        (Some(expr), None) => {
            let a = parse_element(expr, &geom.ctx).map_err(Failure::config)?;
            represent(&a, geom)
        }
        (None, Some(named)) => match named {
            NamedOp::Xm1 => geom.xi(-1).clone(),
            NamedOp::X0 => geom.xi(0).clone(),
            NamedOp::Xp1 => geom.xi(1).clone(),
            NamedOp::Zm1 => geom.zi(-1).clone(),
            NamedOp::Z0 => geom.zi(0).clone(),
            NamedOp::Zp1 => geom.zi(1).clone(),
            NamedOp::D => geom.d.clone(),
            NamedOp::AbsD => geom.abs_d.clone(),
            NamedOp::F => geom.f.clone(),
            NamedOp::Gamma => geom.gamma.clone(),
        },
        _ => return Err(Failure::config("dump needs exactly one of --elem or --op")),
    };
    let mut body = String::from("row_l2,row_m2,row_sigma,col_l2,col_m2,col_sigma,re,im\n");
    for (row, col, v) in operator.iter_entries() {
        let pr = operator.cod().point(row);
        let pc = operator.dom().point(col);
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{}",
            pr.l.twice,
            pr.m.twice,
            pr.sigma,
            pc.l.twice,
            pc.m.twice,
            pc.sigma,
            fnum(v.re.to_f64()),
            fnum(v.im.to_f64())
        );
    }
    emit(model, &body)
}
