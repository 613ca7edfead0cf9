//! Command-line front end: load problem files, dispatch computations,
//! emit machine-readable results.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use specdet_core::files::{load_problem, ProblemFile};
use specdet_core::halfline;
use specdet_core::selfcheck;
use specdet_core::spectra;
use specdet_core::zeta;
use specdet_core::{BcSpec, Error, IntegratorConfig, ZetaConfig, C64};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "specdet",
    about = "Spectra, resolvent traces, determinant ratios, and zeta-regularized \
             determinants of Sturm-Liouville and half-line Schrodinger operators",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct CommonOut {
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the result to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_complex(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re] => re.trim().parse::<f64>().map(|r| (r, 0.0)).map_err(|e| e.to_string()),
        [re, im] => {
            let r = re.trim().parse::<f64>().map_err(|e| e.to_string())?;
            let i = im.trim().parse::<f64>().map_err(|e| e.to_string())?;
            Ok((r, i))
        }
        _ => Err("expected RE or RE,IM".into()),
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected LO,HI".into());
    }
    let lo = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

#[derive(Subcommand)]
enum Cmd {
    /// Locate eigenvalues of an interval problem
    Eig {
        #[arg(long)]
        problem: PathBuf,
        /// Search window LO,HI
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<(f64, f64)>,
        /// Number of eigenvalues to find (from the bottom of the spectrum)
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        common: CommonOut,
    },
    /// Fredholm determinant ratio F(z)/F(z0)
    Det {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: (f64, f64),
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z0: (f64, f64),
        #[command(flatten)]
        common: CommonOut,
    },
    /// Trace of the resolvent -F'(z)/F(z)
    Trace {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: (f64, f64),
        #[command(flatten)]
        common: CommonOut,
    },
    /// Zeta-regularized determinant: absolute for one problem, relative
    /// for a pair sharing the boundary condition; optionally a zeta(s)
    /// sample
    Zeta {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        problem2: Option<PathBuf>,
        /// Evaluate the relative zeta function at s = RE,IM as well
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        s: Option<(f64, f64)>,
        /// Branch-cut angle (default 3 pi / 4)
        #[arg(long)]
        theta: Option<f64>,
        #[command(flatten)]
        common: CommonOut,
    },
    /// Half-line quantities: bound states, m-function, boundary trace
    /// differences, relative determinants
    Halfline {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        problem2: Option<PathBuf>,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        z: Option<(f64, f64)>,
        /// Branch-cut angle (default 3 pi / 4)
        #[arg(long)]
        theta: Option<f64>,
        #[command(flatten)]
        common: CommonOut,
    },
    /// Run the built-in closed-form verification suite
    Selfcheck {
        #[command(flatten)]
        common: CommonOut,
    },
}

#[derive(Serialize)]
struct CNum {
    re: f64,
    im: f64,
}

impl From<C64> for CNum {
    fn from(z: C64) -> CNum {
        CNum { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    integrator: IntegratorConfig,
    theta: f64,
    split: f64,
    quad_rel_tol: f64,
    t_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

impl Provenance {
    fn new(cfg: &ZetaConfig, lambda1: Option<f64>) -> Provenance {
        Provenance {
            tool: "specdet",
            version: env!("CARGO_PKG_VERSION"),
            integrator: cfg.integrator,
            theta: cfg.theta,
            split: cfg.split,
            quad_rel_tol: cfg.quad_rel_tol,
            t_max: cfg.t_max,
            lambda1,
            threads: threads_cap(),
        }
    }
}

#[derive(Serialize)]
struct Output<T: Serialize> {
    command: &'static str,
    provenance: Provenance,
    result: T,
}

fn threads_cap() -> Option<usize> {
    std::env::var("SPECDET_THREADS").ok().and_then(|v| v.parse().ok())
}

fn emit(text: String, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::ProblemFile(format!("{}: {e}", path.display()))),
        None => {
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output")
}

fn require_same_bc(bc: &BcSpec, bc2: &BcSpec) -> Result<(), Error> {
    if bc != bc2 {
        return Err(Error::InvalidProblem(
            "relative determinants need the same boundary condition in both problem files".into(),
        ));
    }
    Ok(())
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    if let Some(n) = threads_cap() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .ok();
    }
    let cfg = ZetaConfig::default();
    let icfg = cfg.integrator;

    match cli.cmd {
        Cmd::Eig { problem, window, count, common } => {
            let file = load_problem(&problem)?;
            let (prob, bc) = file.interval()?;
            if window.is_none() && count.is_none() {
                return Err(Error::InvalidProblem(
                    "pass --window LO,HI or --count N".into(),
                ));
            }
            let spec = spectra::find_eigenvalues(prob, bc, window, count, &icfg)?;
            match common.format {
                Format::Json => {
                    let out = Output {
                        command: "eig",
                        provenance: Provenance::new(&cfg, None),
                        result: &spec,
                    };
                    emit(to_json(&out), &common.out)
                }
                Format::Csv => {
                    let mut text = String::from("index,lambda,multiplicity\n");
                    let mut idx = 1usize;
                    for e in &spec.eigenvalues {
                        text.push_str(&format!("{idx},{:.17e},{}\n", e.lambda, e.multiplicity));
                        idx += e.multiplicity as usize;
                    }
                    emit(text, &common.out)
                }
            }
        }
        Cmd::Det { problem, z, z0, common } => {
            let file = load_problem(&problem)?;
            let (prob, bc) = file.interval()?;
            let zv = C64::new(z.0, z.1);
            let z0v = C64::new(z0.0, z0.1);
            let ratio = spectra::fredholm_det_ratio(prob, bc, zv, z0v, &icfg)?;
            #[derive(Serialize)]
            struct DetResult {
                z: CNum,
                z0: CNum,
                ratio: CNum,
            }
            let result = DetResult {
                z: zv.into(),
                z0: z0v.into(),
                ratio: ratio.into(),
            };
            match common.format {
                Format::Json => {
                    let out = Output {
                        command: "det",
                        provenance: Provenance::new(&cfg, None),
                        result,
                    };
                    emit(to_json(&out), &common.out)
                }
                Format::Csv => emit(
                    format!(
                        "field,re,im\nz,{:.17e},{:.17e}\nz0,{:.17e},{:.17e}\nratio,{:.17e},{:.17e}\n",
                        zv.re, zv.im, z0v.re, z0v.im, ratio.re, ratio.im
                    ),
                    &common.out,
                ),
            }
        }
        Cmd::Trace { problem, z, common } => {
            let file = load_problem(&problem)?;
            let (prob, bc) = file.interval()?;
            let zv = C64::new(z.0, z.1);
            let trace = spectra::trace_resolvent(prob, bc, zv, &icfg)?;
            #[derive(Serialize)]
            struct TraceResult {
                z: CNum,
                trace: CNum,
            }
            let result = TraceResult {
                z: zv.into(),
                trace: trace.into(),
            };
            match common.format {
                Format::Json => {
                    let out = Output {
                        command: "trace",
                        provenance: Provenance::new(&cfg, None),
                        result,
                    };
                    emit(to_json(&out), &common.out)
                }
                Format::Csv => emit(
                    format!(
                        "field,re,im\nz,{:.17e},{:.17e}\ntrace,{:.17e},{:.17e}\n",
                        zv.re, zv.im, trace.re, trace.im
                    ),
                    &common.out,
                ),
            }
        }
        Cmd::Zeta { problem, problem2, s, theta, common } => {
            let mut cfg = cfg;
            if let Some(t) = theta {
                cfg.theta = t;
            }
            let file = load_problem(&problem)?;
            let (prob, bc) = file.interval()?;
            #[derive(Serialize)]
            struct ZetaOut {
                kind: &'static str,
                zeta_prime0: specdet_core::ZetaResult,
                #[serde(skip_serializing_if = "Option::is_none")]
                s: Option<CNum>,
                #[serde(skip_serializing_if = "Option::is_none")]
                zeta_s: Option<CNum>,
            }
            let result = match &problem2 {
                Some(p2) => {
                    let file2 = load_problem(p2)?;
                    let (prob2, bc2) = file2.interval()?;
                    require_same_bc(bc, bc2)?;
                    let r = zeta::relative_zeta_prime0(prob, prob2, bc, &cfg)?;
                    let zeta_s = match s {
                        Some(sv) => Some(CNum::from(zeta::relative_zeta(
                            C64::new(sv.0, sv.1),
                            prob,
                            prob2,
                            bc,
                            &cfg,
                        )?)),
                        None => None,
                    };
                    ZetaOut {
                        kind: "relative",
                        zeta_prime0: r,
                        s: s.map(|sv| CNum { re: sv.0, im: sv.1 }),
                        zeta_s,
                    }
                }
                None => {
                    if s.is_some() {
                        return Err(Error::InvalidProblem(
                            "zeta(s) samples need a pair of problems (--problem2)".into(),
                        ));
                    }
                    let r = zeta::absolute_zeta_prime0(prob, bc, &cfg)?;
                    ZetaOut {
                        kind: "absolute",
                        zeta_prime0: r,
                        s: None,
                        zeta_s: None,
                    }
                }
            };
            match common.format {
                Format::Json => {
                    let out = Output {
                        command: "zeta",
                        provenance: Provenance::new(&cfg, None),
                        result,
                    };
                    emit(to_json(&out), &common.out)
                }
                Format::Csv => {
                    let mut text = String::from("field,value\n");
                    text.push_str(&format!("kind,{}\n", result.kind));
                    text.push_str(&format!("re_part,{:.17e}\n", result.zeta_prime0.re_part));
                    text.push_str(&format!("im_part,{:.17e}\n", result.zeta_prime0.im_part));
                    if let Some(zs) = &result.zeta_s {
                        text.push_str(&format!(
                            "zeta_s_re,{:.17e}\nzeta_s_im,{:.17e}\n",
                            zs.re, zs.im
                        ));
                    }
                    emit(text, &common.out)
                }
            }
        }
        Cmd::Halfline { problem, problem2, z, theta, common } => {
            let mut cfg = cfg;
            if let Some(t) = theta {
                cfg.theta = t;
            }
            let file = load_problem(&problem)?;
            let (prob, alpha, alpha1, alpha2) = match &file {
                ProblemFile::HalfLine { prob, alpha, alpha1, alpha2 } => {
                    (prob, *alpha, *alpha1, *alpha2)
                }
                ProblemFile::Interval { .. } => {
                    return Err(Error::ProblemFile(
                        "halfline command needs a half-line problem file".into(),
                    ))
                }
            };
            let base_alpha = alpha.or(alpha1).unwrap_or(0.0);
            #[derive(Serialize)]
            struct HalflineOut {
                lambda1: f64,
                alpha: f64,
                bound_states: Vec<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                z: Option<CNum>,
                #[serde(skip_serializing_if = "Option::is_none")]
                m_function: Option<CNum>,
                #[serde(skip_serializing_if = "Option::is_none")]
                trace_diff: Option<CNum>,
                #[serde(skip_serializing_if = "Option::is_none")]
                perturbation_det: Option<CNum>,
                #[serde(skip_serializing_if = "Option::is_none")]
                zeta_prime0: Option<specdet_core::ZetaResult>,
            }
            let mut result = HalflineOut {
                lambda1: prob.lambda1,
                alpha: base_alpha,
                bound_states: halfline::bound_states(prob, base_alpha, &icfg)?,
                z: None,
                m_function: None,
                trace_diff: None,
                perturbation_det: None,
                zeta_prime0: None,
            };
            if let Some(zv) = z {
                let zz = C64::new(zv.0, zv.1);
                result.z = Some(zz.into());
                result.m_function = Some(halfline::m_function(prob, base_alpha, zz, &icfg)?.into());
                if let (Some(a1), Some(a2)) = (alpha1, alpha2) {
                    result.trace_diff =
                        Some(halfline::bc_trace_diff(prob, a1, a2, zz, &icfg)?.into());
                }
            }
            match &problem2 {
                Some(p2) => {
                    let file2 = load_problem(p2)?;
                    let alpha_2 = match &file2 {
                        ProblemFile::HalfLine { alpha, alpha1, .. } => {
                            alpha.or(*alpha1).unwrap_or(base_alpha)
                        }
                        _ => base_alpha,
                    };
                    let prob2 = file2.half_line()?;
                    if let Some(zv) = z {
                        if alpha_2 == base_alpha {
                            let zz = C64::new(zv.0, zv.1);
                            result.perturbation_det = Some(
                                halfline::perturbation_det(prob, prob2, base_alpha, zz, &icfg)?
                                    .into(),
                            );
                        }
                    }
                    result.zeta_prime0 = Some(halfline::halfline_relative_zeta_prime0(
                        prob, prob2, base_alpha, alpha_2, &cfg,
                    )?);
                }
                None => {
                    if let (Some(a1), Some(a2)) = (alpha1, alpha2) {
                        result.zeta_prime0 = Some(halfline::halfline_relative_zeta_prime0(
                            prob, prob, a1, a2, &cfg,
                        )?);
                    }
                }
            }
            match common.format {
                Format::Json => {
                    let out = Output {
                        command: "halfline",
                        provenance: Provenance::new(&cfg, Some(prob.lambda1)),
                        result,
                    };
                    emit(to_json(&out), &common.out)
                }
                Format::Csv => {
                    let mut text = String::from("field,value\n");
                    text.push_str(&format!("lambda1,{}\n", result.lambda1));
                    for (i, st) in result.bound_states.iter().enumerate() {
                        text.push_str(&format!("bound_state_{i},{st:.17e}\n"));
                    }
                    if let Some(r) = &result.zeta_prime0 {
                        text.push_str(&format!("zeta_prime0_re,{:.17e}\n", r.re_part));
                        text.push_str(&format!("zeta_prime0_im,{:.17e}\n", r.im_part));
                    }
                    emit(text, &common.out)
                }
            }
        }
        Cmd::Selfcheck { common } => {
            let rows = selfcheck::run_all();
            let all_pass = rows.iter().all(|r| r.pass);
            eprint!("{}", selfcheck::render_table(&rows));
            match common.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct SelfcheckOut {
                        passed: usize,
                        total: usize,
                        checks: Vec<selfcheck::Check>,
                    }
                    let result = SelfcheckOut {
                        passed: rows.iter().filter(|r| r.pass).count(),
                        total: rows.len(),
                        checks: rows,
                    };
                    let out = Output {
                        command: "selfcheck",
                        provenance: Provenance::new(&cfg, None),
                        result,
                    };
                    emit(to_json(&out), &common.out)?;
                }
                Format::Csv => {
                    let mut text =
                        String::from("id,name,measured,expected,tolerance,pass,seconds\n");
                    for r in &rows {
                        text.push_str(&format!(
                            "{},{},{:.17e},{:.17e},{:.3e},{},{:.3}\n",
                            r.id, r.name, r.measured, r.expected, r.tolerance, r.pass, r.seconds
                        ));
                    }
                    emit(text, &common.out)?;
                }
            }
            if !all_pass {
                return Err(Error::Integration("selfcheck found failing benchmarks".into()));
            }
            Ok(())
        }
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            // machine-readable error object on stderr
            let obj = serde_json::json!({
                "error": e.to_string(),
                "class": if e.is_validation() { "validation" } else { "numerical" },
            });
            eprintln!("{obj}");
            std::process::exit(if e.is_validation() { 2 } else { 3 });
        }
    }
}
