//! Reproducible experiment runner: every command produces a deterministic,
//! exact report that embeds the configuration which produced it.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use difftk::criteria::{decide_certificate_with, verify_certificate, DecideOptions, Decision, Verification};
use difftk::operators::{validate_pair, Case, OperatorPair, Role};
use difftk::relation_finder::{
    find_relation, sigma_dimension_profile, sigma_probe, RelationOutcome, RelationQuery, SeriesSource,
};
use difftk::series_core::parse::parse_polynomial;
use difftk::series_core::{
    rational_to_series, rationality_guess, FieldElem, Locus, Polynomial, RationalFunction, SeriesRecord,
    TruncatedPuiseux,
};
use difftk::special_functions::{basic_hypergeometric, mahler_power_sum, thue_morse_product, NamedSeries};
use difftk::systems::{residual_check, solve_order1, Residual};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Io(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<difftk::Error> for CliError {
    fn from(e: difftk::Error) -> Self {
        match e {
            difftk::Error::Invariant(m) => CliError::Invariant(m),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Validate,
    Solve,
    Certificate,
    Relation,
    Corpus,
    Independence,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Validate => "validate",
            Command::Solve => "solve",
            Command::Certificate => "certificate",
            Command::Relation => "relation",
            Command::Corpus => "corpus",
            Command::Independence => "independence",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationMode {
    Relation,
    Probe,
    Profile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsConfig {
    #[serde(rename = "D")]
    pub d: u32,
    #[serde(rename = "Dx")]
    pub dx: u32,
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "K_max")]
    pub kmax: u64,
    #[serde(rename = "i_max")]
    pub imax: u32,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            d: 2,
            dx: 2,
            n: 100,
            kmax: difftk::criteria::DEFAULT_KMAX,
            imax: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<Case>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    pub role: Role,
    pub inputs: Vec<String>,
    pub bounds: BoundsConfig,
    pub mode: RelationMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            case: None,
            phi: None,
            sigma: None,
            role: Role::Phi,
            inputs: Vec::new(),
            bounds: BoundsConfig::default(),
            mode: RelationMode::Relation,
            out: None,
            seed: None,
        }
    }

    pub fn with_pair(mut self, case: Case, phi: &str, sigma: &str) -> Self {
        self.case = Some(case);
        self.phi = Some(phi.into());
        self.sigma = Some(sigma.into());
        self
    }

    pub fn with_inputs<S: Into<String>>(mut self, inputs: impl IntoIterator<Item = S>) -> Self {
        self.inputs = inputs.into_iter().map(Into::into).collect();
        self
    }

    pub fn pair(&self) -> CliResult<OperatorPair> {
        match (&self.case, &self.phi, &self.sigma) {
            (Some(c), Some(p), Some(s)) => Ok(OperatorPair::parse(*c, p, s)?),
            _ => Err(CliError::Invalid("this command needs --case, --phi and --sigma".into())),
        }
    }

    fn input(&self, i: usize, what: &str) -> CliResult<&str> {
        self.inputs
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| CliError::Invalid(format!("missing input {}: {what}", i + 1)))
    }

    fn query(&self) -> RelationQuery {
        RelationQuery::new(self.bounds.d, self.bounds.dx, self.bounds.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// A produced object failed its own exact check.
    Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub verdict: String,
    pub status: Status,
    pub result: Value,
    pub summary: Vec<String>,
}

impl Report {
    fn new(config: &ExperimentConfig, verdict: &str, result: Value, summary: Vec<String>) -> Self {
        Report {
            config: config.clone(),
            verdict: verdict.into(),
            status: Status::Ok,
            result,
            summary,
        }
    }

    fn violation(mut self) -> Self {
        self.status = Status::Violation;
        self
    }

    /// Pretty JSON with a trailing newline; identical input gives identical
    /// bytes.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Violation => 3,
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("records serialize")
}

fn residual_summary(r: &Residual) -> String {
    match r {
        Residual::Zero { order } => format!("residual vanishes below order {order}"),
        Residual::Nonzero { exponent, coefficient } => {
            format!("residual has coefficient {coefficient} at exponent {exponent}")
        }
    }
}

/// A series named on the command line.
///
/// Grammar: `power_sum:P`, `thue_morse:P`, `hypergeometric:A1,..|B1,..|Q`,
/// `rational:R`, `order1:ROLE:A[:B]` (solution of `op(y) = A·y + B`), and
/// `poly:P(f):SPEC` (the polynomial `P` applied to another input).
pub enum InputSeries {
    Named(NamedSeries),
    Rational {
        func: RationalFunction,
        locus: Locus,
    },
    Order1 {
        a: RationalFunction,
        b: RationalFunction,
        pair: OperatorPair,
        role: Role,
    },
    Poly {
        poly: Polynomial,
        inner: Box<InputSeries>,
    },
}

impl InputSeries {
    pub fn parse(spec: &str, pair: Option<&OperatorPair>, order: i64) -> CliResult<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| CliError::Invalid(format!("series spec {spec:?} has no kind prefix")))?;
        let need_pair = || pair.ok_or_else(|| CliError::Invalid(format!("{kind} inputs need an operator pair")));
        Ok(match kind.trim() {
            "power_sum" => InputSeries::Named(mahler_power_sum(parse_exponent(rest)?, order)?),
            "thue_morse" => InputSeries::Named(thue_morse_product(parse_exponent(rest)?, order)?),
            "hypergeometric" => {
                let parts: Vec<&str> = rest.split('|').collect();
                if parts.len() != 3 {
                    return Err(CliError::Invalid("hypergeometric:ALPHAS|BETAS|Q".into()));
                }
                let list = |s: &str| -> CliResult<Vec<FieldElem>> {
                    s.split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse::<FieldElem>().map_err(CliError::from))
                        .collect()
                };
                let q: FieldElem = parts[2].trim().parse()?;
                InputSeries::Named(basic_hypergeometric(&list(parts[0])?, &list(parts[1])?, &q, order)?)
            }
            "rational" => InputSeries::Rational {
                func: rest.parse()?,
                locus: pair.map_or(Locus::AtZero, |p| p.case().locus()),
            },
            "order1" => {
                let parts: Vec<&str> = rest.splitn(3, ':').collect();
                if parts.len() < 2 {
                    return Err(CliError::Invalid("order1:ROLE:A[:B]".into()));
                }
                InputSeries::Order1 {
                    role: parts[0].parse()?,
                    a: parts[1].parse()?,
                    b: match parts.get(2) {
                        Some(b) => b.parse()?,
                        None => RationalFunction::from_int(0),
                    },
                    pair: need_pair()?.clone(),
                }
            }
            "poly" => {
                let (p, inner) = rest
                    .split_once(':')
                    .ok_or_else(|| CliError::Invalid("poly:P(f):SPEC".into()))?;
                InputSeries::Poly {
                    poly: parse_polynomial(p, "f")?,
                    inner: Box::new(InputSeries::parse(inner, pair, order)?),
                }
            }
            other => return Err(CliError::Invalid(format!("unknown series kind {other:?}"))),
        })
    }

    /// Equation-defined inputs with their residual at `order`, if any.
    fn solve_record(&self, order: i64) -> CliResult<Option<Value>> {
        Ok(match self {
            InputSeries::Named(ns) => {
                let rs = ns
                    .equations()
                    .map(|eq| residual_check(eq, &difftk::series_core::Expansion::AtZero(ns.series.clone()), None))
                    .collect::<difftk::Result<Vec<_>>>()?;
                Some(json!({
                    "source": ns.provenance,
                    "equations": ns.equations().map(|e| to_value(&e.record())).collect::<Vec<_>>(),
                    "residuals": rs,
                }))
            }
            InputSeries::Order1 { a, b, pair, role } => {
                let sol = solve_order1(a, b, pair, *role, order)?;
                let r = residual_check(&sol.equation, &sol.series, None)?;
                Some(json!({
                    "source": "solve_order1",
                    "equation": to_value(&sol.equation.record()),
                    "residuals": [r],
                }))
            }
            InputSeries::Poly { inner, .. } => inner.solve_record(order)?,
            InputSeries::Rational { .. } => None,
        })
    }
}

fn parse_exponent(s: &str) -> CliResult<u64> {
    Ok(difftk::series_core::parse::parse_positive_int(s)?)
}

fn eval_poly(p: &Polynomial, f: &TruncatedPuiseux, order: i64) -> TruncatedPuiseux {
    // Horner
    let mut acc = TruncatedPuiseux::zero(order);
    for c in p.coeffs().iter().rev() {
        acc = acc.mul(f).add(&TruncatedPuiseux::one(order).scale(c));
    }
    acc
}

impl SeriesSource for InputSeries {
    fn label(&self) -> String {
        match self {
            InputSeries::Named(ns) => ns.provenance.clone(),
            InputSeries::Rational { func, .. } => format!("rational({func})"),
            InputSeries::Order1 { a, b, role, .. } => format!("order1({role}; a={a}; b={b})"),
            InputSeries::Poly { poly, inner } => format!("({}) at f={}", poly.fmt_var("f"), inner.label()),
        }
    }

    fn expand(&self, order: i64) -> difftk::Result<TruncatedPuiseux> {
        match self {
            InputSeries::Named(ns) => ns.expand(order),
            InputSeries::Rational { func, locus } => Ok(rational_to_series(func, *locus, order).inner().clone()),
            InputSeries::Order1 { a, b, pair, role } => {
                Ok(solve_order1(a, b, pair, *role, order)?.series.inner().clone())
            }
            InputSeries::Poly { poly, inner } => {
                let f = inner.expand(order)?;
                Ok(eval_poly(poly, &f, order))
            }
        }
    }

    fn extendable(&self) -> bool {
        true
    }
}

/// Writes the report to `out` (if set) and returns its rendering.
pub fn emit(report: &Report) -> CliResult<String> {
    let text = report.render();
    if let Some(out) = &report.config.out {
        ensure_parent(Path::new(out))?;
        std::fs::write(out, &text)?;
    }
    Ok(text)
}

fn side_file(out: &str, suffix: &str) -> PathBuf {
    let p = Path::new(out);
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    p.with_file_name(format!("{stem}.{suffix}.json"))
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn write_json(path: &Path, v: &Value) -> CliResult<()> {
    ensure_parent(path)?;
    let mut s = serde_json::to_string_pretty(v).expect("records serialize");
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn run(config: &ExperimentConfig) -> CliResult<Report> {
    match config.command {
        Command::Validate => cmd_validate(config),
        Command::Solve => cmd_solve(config),
        Command::Certificate => cmd_certificate(config),
        Command::Relation => cmd_relation(config),
        Command::Corpus => cmd_corpus(config),
        Command::Independence => cmd_independence(config),
    }
}

pub fn cmd_validate(config: &ExperimentConfig) -> CliResult<Report> {
    let pair = config.pair()?;
    let v = validate_pair(&pair);
    let verdict = if v.accepted() {
        "accepted"
    } else if v.independent {
        "outside_theorem_scope"
    } else {
        "dependent"
    };
    let mut summary = vec![format!("pair {}: {}", pair.case(), verdict.replace('_', " "))];
    for e in &v.entries {
        summary.push(format!("{}: {}", e.condition, e.detail));
    }
    Ok(Report::new(config, verdict, to_value(&v), summary))
}

pub fn cmd_solve(config: &ExperimentConfig) -> CliResult<Report> {
    let pair = config.pair()?;
    let a: RationalFunction = config.input(0, "coefficient a")?.parse()?;
    let b: RationalFunction = match config.inputs.get(1) {
        Some(s) => s.parse()?,
        None => RationalFunction::from_int(0),
    };
    let n = config.bounds.n;
    match solve_order1(&a, &b, &pair, config.role, n) {
        Ok(sol) => {
            let residual = residual_check(&sol.equation, &sol.series, None)?;
            let record = to_value(&SeriesRecord::from(&sol.series));
            let mut result = json!({
                "equation": to_value(&sol.equation.record()),
                "series": record,
                "normalization": sol.normalization,
                "initial_value": sol.initial_value,
                "verified_order": sol.verified_order.to_string(),
                "residual": residual,
            });
            if let Some(out) = &config.out {
                let sf = side_file(out, "series");
                write_json(&sf, &record)?;
                result["series_file"] = json!(sf.to_string_lossy());
            }
            let summary = vec![
                format!("solved {} to order {}", sol.equation.op, sol.verified_order),
                residual_summary(&residual),
            ];
            let rep = Report::new(config, "solved", result, summary);
            Ok(if residual.is_zero() { rep } else { rep.violation() })
        }
        Err(difftk::Error::Resonance { exponent }) => Ok(Report::new(
            config,
            "resonance",
            json!({ "exponent": exponent.to_string() }),
            vec![format!("linear step is singular with a nonzero obstruction at exponent {exponent}")],
        )),
        Err(difftk::Error::NoFormalSolution(why)) => Ok(Report::new(
            config,
            "no_formal_solution",
            json!({ "reason": why }),
            vec![format!("no formal series solution: {why}")],
        )),
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_certificate(config: &ExperimentConfig) -> CliResult<Report> {
    let pair = config.pair()?;
    let a: RationalFunction = config.input(0, "coefficient a")?.parse()?;
    let opts = DecideOptions {
        kmax: config.bounds.kmax,
        ..DecideOptions::default()
    };
    let decision = decide_certificate_with(&a, &pair, config.role, &opts)?;
    let mut result = json!({ "decision": to_value(&decision) });
    let (verdict, mut summary, ok) = match &decision {
        Decision::Certificate { certificate } => {
            let v = verify_certificate(&a, certificate, &pair, config.role)?;
            result["verification"] = to_value(&v);
            let ok = matches!(v, Verification::Valid);
            (
                "certificate",
                vec![format!(
                    "a = c*x^n*op(b)/b with c = {}, n = {}, b = {}",
                    certificate.c, certificate.n, certificate.b
                )],
                ok,
            )
        }
        Decision::NoCertificate { reason, .. } => ("no_certificate", vec![format!("no certificate: {reason}")], true),
        Decision::Inconclusive { bound, reason } => (
            "inconclusive",
            vec![format!("inconclusive within search bound {bound}: {reason}")],
            true,
        ),
    };
    if !ok {
        summary.push("certificate failed exact verification".into());
    }
    let rep = Report::new(config, verdict, result, summary);
    Ok(if ok { rep } else { rep.violation() })
}

fn relation_report(config: &ExperimentConfig, outcome: &RelationOutcome, query: &RelationQuery) -> Report {
    let r = outcome.report(query.bounds());
    let rep = Report::new(config, &r.verdict.clone(), to_value(&r), vec![r.statement.clone()]);
    if matches!(outcome, RelationOutcome::Spurious { .. }) {
        rep.violation()
    } else {
        rep
    }
}

fn parse_inputs(config: &ExperimentConfig, pair: Option<&OperatorPair>) -> CliResult<Vec<InputSeries>> {
    if config.inputs.is_empty() {
        return Err(CliError::Invalid("no input series".into()));
    }
    config
        .inputs
        .iter()
        .map(|s| InputSeries::parse(s, pair, config.bounds.n))
        .collect()
}

pub fn cmd_relation(config: &ExperimentConfig) -> CliResult<Report> {
    let pair = config.pair().ok();
    let inputs = parse_inputs(config, pair.as_ref())?;
    let query = config.query();
    match config.mode {
        RelationMode::Relation => {
            let refs: Vec<&dyn SeriesSource> = inputs.iter().map(|s| s as &dyn SeriesSource).collect();
            let outcome = find_relation(&refs, &query)?;
            Ok(relation_report(config, &outcome, &query))
        }
        RelationMode::Probe => {
            let pair = config.pair()?;
            let outcome = sigma_probe(&inputs[0], &pair, config.bounds.imax, &query, None)?;
            Ok(relation_report(config, &outcome, &query))
        }
        RelationMode::Profile => {
            let pair = config.pair()?;
            let prof = sigma_dimension_profile(&inputs[0], &pair, config.bounds.imax, &query, None)?;
            let shape = if prof.is_strictly_increasing() {
                "strictly_increasing"
            } else if prof.d.windows(2).last().is_some_and(|w| w[0] == w[1]) {
                "eventually_constant"
            } else {
                "nondecreasing"
            };
            let summary = vec![format!(
                "profile {:?} at D = {}, Dx = {}, N = {}",
                prof.d, prof.bounds.d, prof.bounds.dx, prof.bounds.n
            )];
            Ok(Report::new(config, shape, to_value(&prof), summary))
        }
    }
}

pub fn cmd_corpus(config: &ExperimentConfig) -> CliResult<Report> {
    let spec = config.input(0, "corpus member")?;
    let InputSeries::Named(ns) = InputSeries::parse(spec, None, config.bounds.n)? else {
        return Err(CliError::Invalid(format!("{spec:?} is not a corpus member")));
    };
    let series = to_value(&SeriesRecord::from(&ns.series));
    let equations: Vec<Value> = ns.equations().map(|e| to_value(&e.record())).collect();
    let mut result = json!({
        "name": ns.provenance,
        "generator": to_value(&ns.generator),
        "series": series,
        "equations": equations,
    });
    if let Some(out) = &config.out {
        let sf = side_file(out, "series");
        let ef = side_file(out, "equation");
        write_json(&sf, &series)?;
        write_json(&ef, &Value::Array(equations))?;
        result["manifest"] = json!([{
            "name": ns.provenance,
            "params": to_value(&ns.generator),
            "series_file": sf.to_string_lossy(),
            "equation_file": ef.to_string_lossy(),
        }]);
    }
    let summary = vec![format!(
        "{} to order {} with {} attached equation(s), all with zero residual",
        ns.provenance,
        ns.order(),
        ns.equations().count()
    )];
    Ok(Report::new(config, "generated", result, summary))
}

/// Largest rationality-guess bound the trusted coefficients support.
fn guess_bound(s: &TruncatedPuiseux) -> usize {
    const CAP: usize = 20;
    let span = s.order() - s.valuation().min(s.order());
    (((span - 2) / 2).max(0) as usize).min(CAP)
}

pub fn cmd_independence(config: &ExperimentConfig) -> CliResult<Report> {
    let pair = config.pair()?;
    if config.inputs.len() != 2 {
        return Err(CliError::Invalid("independence takes exactly two inputs f and g".into()));
    }
    let validation = validate_pair(&pair);
    let inputs = parse_inputs(config, Some(&pair))?;
    let n = config.bounds.n;
    let names = ["f", "g"];
    let mut solved = serde_json::Map::new();
    for (name, inp) in names.iter().zip(&inputs) {
        if let Some(rec) = inp.solve_record(n)? {
            let bad = rec["residuals"]
                .as_array()
                .is_some_and(|rs| rs.iter().any(|r| r["verdict"] != "zero"));
            if bad {
                return Err(CliError::Invariant(format!("input {name} does not satisfy its own equation")));
            }
            solved.insert((*name).into(), rec);
        }
    }
    let mut result = json!({
        "validation": to_value(&validation),
        "solve": Value::Object(solved),
    });
    let mut summary = Vec::new();
    if !validation.accepted() {
        summary.push("operator pair does not meet the independence hypotheses; the search below is still exact".into());
    }
    let variable = if pair.case().locus() == Locus::AtInfinity { "t = 1/x" } else { "x" };
    for (name, inp) in names.iter().zip(&inputs) {
        let s = inp.expand(n)?;
        if let Some(w) = rationality_guess(&s, guess_bound(&s))? {
            result["rational_witness"] = json!({
                "input": name,
                "witness": w.fmt_var(if variable == "x" { "x" } else { "t" }),
                "variable": variable,
                "agrees_to_order": n,
            });
            summary.push(format!(
                "{name} is rational: it agrees with {} to order {n}; algebraic independence is excluded",
                w
            ));
            return Ok(Report::new(config, "rational_witness", result, summary));
        }
    }
    let query = config.query();
    let refs: Vec<&dyn SeriesSource> = inputs.iter().map(|s| s as &dyn SeriesSource).collect();
    let outcome = find_relation(&refs, &query)?;
    let r = outcome.report(query.bounds());
    result["relation"] = to_value(&r);
    summary.push(r.statement.clone());
    let rep = Report::new(config, &r.verdict, result, summary);
    Ok(if matches!(outcome, RelationOutcome::Spurious { .. }) {
        rep.violation()
    } else {
        rep
    })
}
