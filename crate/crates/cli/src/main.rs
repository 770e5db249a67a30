//! `lorentz3` command line.

mod table;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use serde_json::{json, Value};

use lorentz3::curvature::{E, F, H};
use lorentz3::dsl::{merge_params, parse_field_file, parse_metric_file, MetricBody, Params};
use lorentz3::lie::{repar_check, LieError};
use lorentz3::psl2::{build_irrep, elliptic_fixed_vector, invariant_form, orbit_closedness_certificate, Psl2Error};
use lorentz3::scenarios::{
    analyze, box_grid, glue_metrics, glue_side_points, parse_points, torus_strip_check, verify_killing_field, AnalysisOptions,
    SCHEMA_VERSION,
};
use lorentz3::selftest::jet_selftest;

use table::Table;

/// Largest Lie-derivative entry accepted by `verify-killing` by default.
const KILLING_TOL: f64 = 1e-9;
const C1_TOL: f64 = 1e-12;
const REPAR_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "lorentz3", version, about = "Curvature, Killing generators and local symmetry of 3-dimensional Lorentz metrics")]
struct Cli {
    /// Write the JSON report here; without it the JSON follows the table on stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full per-point analysis of a metric file.
    Analyze {
        metric: PathBuf,
        /// A points file, or `box:x1,x2,x3:y1,y2,y3[:n]` for an n×n×n grid (n = 3 by default).
        #[arg(long)]
        points: String,
        /// Parameter overrides, `name=value`, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<String>,
        #[arg(long, default_value_t = 7)]
        order: usize,
    },
    /// Lie derivative of the metric along each field of a field file.
    VerifyKilling {
        metric: PathBuf,
        fields: PathBuf,
        #[arg(long, default_value = "box:-0.5,-0.5,0.5:0.5,0.5,1.5:2")]
        points: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<String>,
        #[arg(long, default_value_t = KILLING_TOL)]
        tol: f64,
    },
    /// C¹ gluing of two metrics x3^α g0 and analysis of both sides.
    Glue {
        #[arg(long, allow_negative_numbers = true)]
        alpha1: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha2: f64,
    },
    /// Strip of the torus construction: continuity, boundary factors, translations.
    Torus {
        #[arg(long, allow_negative_numbers = true)]
        alpha1: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha2: f64,
    },
    /// Compares exp(tξ) with the reparametrized product for ξ = (A, v), Av = ηv.
    Repar {
        /// One of E, H, F.
        #[arg(long = "A")]
        a: String,
        /// One of e, h, f, or three comma separated frame components.
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, default_value_t = 2.0)]
        tmax: f64,
        #[arg(long, default_value_t = 41)]
        samples: usize,
    },
    /// Irreducible representation of dimension 2k+1: form, fixed vector, orbit certificate.
    Psl2 {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        a1: f64,
        #[arg(long, default_value_t = 100)]
        words: usize,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Jet arithmetic against closed forms and finite differences.
    JetSelftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Input(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

struct Outcome {
    command: &'static str,
    json: Value,
    table: String,
    ok: bool,
}

fn to_value<T: Serialize>(command: &str, v: &T) -> Value {
    let mut v = serde_json::to_value(v).expect("report types serialize");
    if let Value::Object(map) = &mut v {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
        map.insert("command".into(), json!(command));
    }
    v
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_overrides(items: &[String]) -> Result<BTreeMap<String, f64>, Failure> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item.split_once('=').ok_or_else(|| Failure::Input(format!("parameter `{item}` is not name=value")))?;
        let v: f64 = v.trim().parse().map_err(|e| Failure::Input(format!("parameter `{item}`: {e}")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn triple(s: &str) -> Result<[f64; 3], Failure> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| Failure::Input(format!("`{s}` is not three comma separated numbers")))
}

fn points_from(spec: &str) -> Result<Vec<[f64; 3]>, Failure> {
    if let Some(rest) = spec.strip_prefix("box:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let (lo, hi, n) = match parts.as_slice() {
            [lo, hi] => (triple(lo)?, triple(hi)?, 3),
            [lo, hi, n] => (triple(lo)?, triple(hi)?, n.parse::<usize>()?),
            _ => return Err(Failure::Input(format!("bad box `{spec}`"))),
        };
        if n == 0 {
            return Err(Failure::Input("box grid needs n >= 1".into()));
        }
        return Ok(box_grid(lo, hi, n));
    }
    Ok(parse_points(&read(Path::new(spec))?)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.6e}"))
}

fn run_analyze(metric: &Path, points: &str, params: &[String], order: usize) -> Result<Outcome, Failure> {
    let file = parse_metric_file(&read(metric)?)?;
    let params = merge_params(&file.params, &parse_overrides(params)?);
    let pts = points_from(points)?;
    let opts = AnalysisOptions { order, ..AnalysisOptions::default() };
    let rep = analyze(&metric.display().to_string(), &file.body, &params, &pts, &opts)?;
    let mut t = Table::new(&["point", "dims", "iso", "type", "sigma", "b", "label", "trusted"]);
    for p in &rep.points {
        t.row(vec![
            format!("({:.4}, {:.4}, {:.4})", p.point[0], p.point[1], p.point[2]),
            p.stabilized_dim().map_or("-".into(), |d| d.to_string()),
            p.isotropy_dim.to_string(),
            p.isotropy.as_ref().map_or("-".into(), |i| format!("{:?}", i.kind).to_lowercase()),
            fmt_opt(p.sigma),
            fmt_opt(p.b),
            p.error.clone().map_or(p.label.clone(), |e| format!("error: {e}")),
            if p.trusted { "yes".into() } else { format!("no ({})", p.failed_checks.join(", ")) },
        ]);
    }
    let mut table = t.render();
    table.push_str(&format!(
        "rank constancy: {} {:?}\n",
        if rep.rank_constancy.constant { "constant" } else { "varies" },
        rep.rank_constancy.distinct
    ));
    for c in &rep.interfaces {
        table.push_str(&format!(
            "interface x3 = {}: value {:.1e}, derivative {:.1e}, second-derivative jump {:.3e}\n",
            c.x3, c.value_residual, c.derivative_residual, c.second_derivative_jump
        ));
    }
    let ok = rep.trusted;
    Ok(Outcome { command: "analyze", json: to_value("analyze", &rep), table, ok })
}

fn run_verify(metric: &Path, fields: &Path, points: &str, params: &[String], tol: f64) -> Result<Outcome, Failure> {
    let mfile = parse_metric_file(&read(metric)?)?;
    let ffile = parse_field_file(&read(fields)?)?;
    let params = merge_params(&merge_params(&mfile.params, &ffile.params), &parse_overrides(params)?);
    let pts = points_from(points)?;
    #[derive(Serialize)]
    struct FieldResult {
        name: String,
        max_residual: f64,
        killing: bool,
    }
    let mut results = Vec::new();
    let mut t = Table::new(&["field", "max |L_X g|", "Killing"]);
    for f in &ffile.fields {
        let mut worst = 0.0f64;
        for p in &pts {
            let spec = mfile.body.spec_at(p[2])?;
            worst = worst.max(verify_killing_field(spec, &params, f, std::slice::from_ref(p))?);
        }
        let killing = worst <= tol;
        t.row(vec![f.name.clone(), format!("{worst:.3e}"), if killing { "yes" } else { "no" }.into()]);
        results.push(FieldResult { name: f.name.clone(), max_residual: worst, killing });
    }
    let ok = results.iter().all(|r| r.killing);
    let json = json!({
        "metric": metric.display().to_string(),
        "params": params,
        "points": pts,
        "tolerance": tol,
        "fields": results,
    });
    Ok(Outcome { command: "verify-killing", json: to_value("verify-killing", &json), table: t.render(), ok })
}

fn run_glue(alpha1: f64, alpha2: f64) -> Result<Outcome, Failure> {
    let g = glue_metrics(alpha1, alpha2)?;
    let body = MetricBody::Piecewise(g.metric.clone());
    let (inner, outer) = glue_side_points(&g);
    let mut sides = Vec::new();
    let mut t = Table::new(&["side", "alpha", "point", "label", "trusted"]);
    let mut ok = g.check.value_residual < C1_TOL && g.check.derivative_residual < C1_TOL && g.check.second_derivative_jump != 0.0;
    for (name, alpha, pts) in [("inner", g.inner_alpha, inner), ("outer", g.outer_alpha, outer)] {
        let rep = analyze("glue", &body, &Params::new(), &pts, &AnalysisOptions::default())?;
        for p in &rep.points {
            t.row(vec![
                name.into(),
                alpha.to_string(),
                format!("({}, {}, {})", p.point[0], p.point[1], p.point[2]),
                p.label.clone(),
                if p.trusted { "yes" } else { "no" }.into(),
            ]);
        }
        ok &= rep.trusted;
        sides.push(json!({ "side": name, "alpha": alpha, "points": rep.points }));
    }
    let c = &g.check;
    let mut table = format!(
        "z = {} (swapped relation gives {}), value {:.1e}, derivative {:.1e}, second-derivative jump {:.6}\n",
        g.z, g.z_alternative, c.value_residual, c.derivative_residual, c.second_derivative_jump
    );
    table.push_str(&t.render());
    let mut json = to_value("glue", &g);
    json["sides"] = json!(sides);
    Ok(Outcome { command: "glue", json, table, ok })
}

fn run_torus(alpha1: f64, alpha2: f64) -> Result<Outcome, Failure> {
    let r = torus_strip_check(alpha1, alpha2)?;
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("strip", format!("[{}, 1] and [1, {}]", r.lower, r.upper)),
        ("continuity at x3 = 1", format!("{:e}", r.continuity_residual)),
        ("factor at lower boundary", r.lower_factor.to_string()),
        ("factor at upper boundary", r.upper_factor.to_string()),
        ("ratio upper/lower", r.factor_ratio.to_string()),
        ("translation along x3", r.translation.to_string()),
        ("d1, d2 Killing residual", format!("{:e}", r.translation_killing_residual)),
    ] {
        t.row(vec![k.into(), v]);
    }
    let ok = r.continuity_residual == 0.0 && r.translation_killing_residual < C1_TOL;
    Ok(Outcome { command: "torus", json: to_value("torus", &r), table: t.render(), ok })
}

fn run_repar(a: &str, v: &str, tmax: f64, samples: usize) -> Result<Outcome, Failure> {
    let m: Matrix3<f64> = match a {
        "E" => E,
        "H" => H,
        "F" => F,
        _ => return Err(Failure::Input(format!("--A must be E, H or F, got `{a}`"))),
    };
    let vec = match v {
        "e" => Vector3::new(1.0, 0.0, 0.0),
        "h" => Vector3::new(0.0, 1.0, 0.0),
        "f" => Vector3::new(0.0, 0.0, 1.0),
        other => Vector3::from(triple(other)?),
    };
    if samples < 2 || !(tmax > 0.0) {
        return Err(Failure::Input("need --samples >= 2 and --tmax > 0".into()));
    }
    let grid: Vec<f64> = (0..samples).map(|i| -tmax + 2.0 * tmax * i as f64 / (samples - 1) as f64).collect();
    let r = match repar_check(&m, &vec, &grid) {
        Err(LieError::NotEigen(miss)) => return Err(Failure::Input(format!("v is not an eigenvector of A (|Av - ηv| = {miss:e})"))),
        other => other?,
    };
    let ok = r.max_residual < REPAR_TOL;
    let table = format!("A = {a}, v = {v}, eta = {}, {samples} samples on [-{tmax}, {tmax}], max residual {:.3e}\n", r.eta, r.max_residual);
    let json =
        json!({ "A": a, "v": [vec.x, vec.y, vec.z], "tmax": tmax, "samples": samples, "eta": r.eta, "max_residual": r.max_residual });
    Ok(Outcome { command: "repar", json: to_value("repar", &json), table, ok })
}

fn run_psl2(k: usize, a1: f64, words: usize, max_len: usize, seed: u64) -> Result<Outcome, Failure> {
    let spec = build_irrep(k)?;
    let form = invariant_form(k, a1)?;
    let (v, decision) = elliptic_fixed_vector(&spec)?;
    let cert = orbit_closedness_certificate(&spec, &form, &v, words, max_len, seed);
    let ok = cert.is_ok();
    let mut t = Table::new(&["quantity", "value"]);
    t.row(vec!["dimension".into(), spec.dim().to_string()]);
    t.row(vec!["H weights".into(), format!("{:?}", spec.weights())]);
    t.row(vec!["sl2 relations residual".into(), format!("{:.1e}", spec.sl2_residual())]);
    t.row(vec!["form coefficients".into(), format!("{:?}", form.coefficients)]);
    t.row(vec!["invariance residual".into(), format!("{:.1e}", form.invariance_residual(&spec))]);
    t.row(vec!["signature".into(), format!("{:?}", form.signature())]);
    t.row(vec!["fixed vector".into(), format!("{:?}", v.as_slice())]);
    t.row(vec!["g(v, v)".into(), form.eval(&v, &v).to_string()]);
    t.row(vec![
        "orbit certificate".into(),
        match &cert {
            Ok(c) => format!("{} words, max relative residual {:.1e}", c.words, c.max_relative_residual),
            Err(e) => format!("failed: {e}"),
        },
    ]);
    let json = json!({
        "k": k,
        "dimension": spec.dim(),
        "weights": spec.weights(),
        "sl2_residual": spec.sl2_residual(),
        "form": form,
        "invariance_residual": form.invariance_residual(&spec),
        "signature": form.signature(),
        "fixed_vector": v.as_slice(),
        "fixed_vector_rank": decision,
        "level": form.eval(&v, &v),
        "certificate": cert.as_ref().ok(),
        "certificate_error": cert.as_ref().err().map(Psl2Error::to_string),
    });
    Ok(Outcome { command: "psl2", json: to_value("psl2", &json), table: t.render(), ok })
}

fn run_selftest(seed: u64) -> Result<Outcome, Failure> {
    let r = jet_selftest(seed)?;
    let mut t = Table::new(&["case", "residual", "tolerance", "pass"]);
    for c in &r.cases {
        t.row(vec![c.name.into(), format!("{:.2e}", c.residual), format!("{:.0e}", c.tolerance), if c.pass { "yes" } else { "NO" }.into()]);
    }
    Ok(Outcome { command: "jet-selftest", json: to_value("jet-selftest", &r), table: t.render(), ok: r.pass })
}

fn dispatch(cmd: &Cmd) -> Result<Outcome, Failure> {
    match cmd {
        Cmd::Analyze { metric, points, params, order } => run_analyze(metric, points, params, *order),
        Cmd::VerifyKilling { metric, fields, points, params, tol } => run_verify(metric, fields, points, params, *tol),
        Cmd::Glue { alpha1, alpha2 } => run_glue(*alpha1, *alpha2),
        Cmd::Torus { alpha1, alpha2 } => run_torus(*alpha1, *alpha2),
        Cmd::Repar { a, v, tmax, samples } => run_repar(a, v, *tmax, *samples),
        Cmd::Psl2 { k, a1, words, max_len, seed } => run_psl2(*k, *a1, *words, *max_len, *seed),
        Cmd::JetSelftest { seed } => run_selftest(*seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match dispatch(&cli.cmd) {
        Ok(o) => o,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let text = serde_json::to_string_pretty(&outcome.json).expect("json");
    let mut stdout = std::io::stdout().lock();
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = stdout.write_all(outcome.table.as_bytes());
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => {
            let _ = writeln!(stdout, "\n{text}");
        }
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}: diagnostic check failed", outcome.command);
        ExitCode::from(2)
    }
}
