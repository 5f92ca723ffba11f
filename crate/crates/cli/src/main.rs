use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use affine_core::io::{self, LoadedStructure, TheoryFile, FORMAT_VERSION};
use affine_core::pra_qe::{self, FiniteAlgebra};
use affine_core::proofcheck::{self, ProofNode};
use affine_core::satisfiability::{self, SatVerdict, Separation};
use affine_core::scalar::{format_decimal, format_rational, parse_rational};
use affine_core::structures::{self, Assignment, FiniteStructure};
use affine_core::syntax::{parse_condition, parse_formula, Signature, Theory};
use affine_core::types::{self, FormulaBasis, Provenance};
use affine_core::ultramean::{self, Charge, DEFAULT_CAP};
use affine_core::Rational;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "affine", version, about = "Affine continuous logic over finite metric structures")]
struct Cli {
    /// Write a JSON run manifest (input hashes, output hash, exit code) to this file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check metric axioms, ranges and Lipschitz bounds.
    Validate { structure: PathBuf },
    /// Evaluate a formula at an assignment.
    Eval {
        structure: PathBuf,
        formula: String,
        /// `var=point`, repeatable.
        #[arg(long = "assign", value_name = "VAR=POINT")]
        assign: Vec<String>,
        #[arg(long, default_value_t = 1)]
        p: u32,
        /// Also print a decimal rendering with this many digits.
        #[arg(long, value_name = "DIGITS")]
        decimal: Option<usize>,
    },
    /// Build the ultramean of structures under a charge.
    Mean {
        charge: PathBuf,
        #[arg(required = true)]
        structures: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replay the ultramean identity for this formula at every assignment.
        #[arg(long, value_name = "FORMULA")]
        check_ultramean: Option<String>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Decide satisfiability of a closed theory over ultrameans of a family.
    Sat {
        theory: PathBuf,
        #[arg(required = true)]
        structures: Vec<PathBuf>,
        /// Report how far this closed condition follows.
        #[arg(long, value_name = "CONDITION")]
        target: Option<String>,
    },
    /// Look for an affine combination of basis sentences separating two families.
    Separate { family_a: PathBuf, family_b: PathBuf, basis: PathBuf },
    /// Type polytope of a basis over a family.
    Types {
        basis: PathBuf,
        #[arg(required = true)]
        structures: Vec<PathBuf>,
        /// Two type vectors, comma separated rationals.
        #[arg(long, num_args = 2, value_names = ["P", "Q"])]
        metrics: Option<Vec<String>>,
    },
    /// Quantifier elimination for probability algebras.
    Qe {
        formula: String,
        /// Compare with brute force on uniform algebras with 1..=K atoms.
        #[arg(long, value_name = "K")]
        oracle: Option<usize>,
    },
    /// Check a proof against a theory.
    CheckProof {
        proof: PathBuf,
        theory: PathBuf,
        /// Evaluate every node on the structures in this directory.
        #[arg(long, value_name = "DIR")]
        probe: Option<PathBuf>,
    },
    /// Values of the n-point rendez-vous sentences.
    Rendezvous {
        structure: PathBuf,
        #[arg(long)]
        n: usize,
    },
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

fn input(kind: &'static str, e: impl ToString) -> Failure {
    Failure { code: 2, kind, message: e.to_string() }
}

struct Report {
    stdout: String,
    semantic: Option<(&'static str, String)>,
}

impl Report {
    fn ok(stdout: String) -> Self {
        Report { stdout, semantic: None }
    }

    fn fail(stdout: String, kind: &'static str, message: impl Into<String>) -> Self {
        Report { stdout, semantic: Some((kind, message.into())) }
    }
}

#[derive(Default)]
struct Run {
    inputs: Vec<(String, String)>,
    outputs: Vec<(String, String)>,
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let text = fs::read_to_string(path).map_err(|e| input("io", format!("{}: {e}", path.display())))?;
        self.inputs.push((path.display().to_string(), sha(text.as_bytes())));
        Ok(text)
    }

    fn write(&mut self, path: &Path, text: &str) -> Result<(), Failure> {
        fs::write(path, text).map_err(|e| input("io", format!("{}: {e}", path.display())))?;
        self.outputs.push((path.display().to_string(), sha(text.as_bytes())));
        Ok(())
    }

    fn structure(&mut self, path: &Path) -> Result<LoadedStructure, Failure> {
        let text = self.read(path)?;
        io::read_structure(&text).map_err(|e| input("structure", format!("{}: {e}", path.display())))
    }

    /// Structures sharing the first one's signature.
    fn family(&mut self, paths: &[PathBuf]) -> Result<(Vec<FiniteStructure>, Signature), Failure> {
        let mut family = Vec::new();
        let mut sig = None;
        for p in paths {
            let loaded = self.structure(p)?;
            if let Some(first) = family.first() {
                loaded
                    .structure
                    .same_symbols(first)
                    .map_err(|e| input("structure", format!("{}: {e}", p.display())))?;
            }
            sig.get_or_insert(loaded.signature);
            family.push(loaded.structure);
        }
        Ok((family, sig.unwrap_or_default()))
    }

    /// Every `*.json` file in `dir`, by file name.
    fn directory(&mut self, dir: &Path) -> Result<(Vec<FiniteStructure>, Signature, Vec<String>), Failure> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| input("io", format!("{}: {e}", dir.display())))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(input("structure", format!("{}: no .json structures", dir.display())));
        }
        let (family, sig) = self.family(&paths)?;
        Ok((family, sig, paths.iter().map(|p| stem(p)).collect()))
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn rat(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

fn rats(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(rat).collect())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn theory_with(run: &mut Run, path: &Path, fallback: &Signature) -> Result<(Theory, Signature), Failure> {
    let text = run.read(path)?;
    let file = TheoryFile::parse(&text).map_err(|e| input("theory", e))?;
    let sig = file.signature().map_err(|e| input("theory", e))?.unwrap_or_else(|| fallback.clone());
    let theory = file.theory(&sig).map_err(|e| input("theory", e))?;
    Ok((theory, sig))
}

fn validate(run: &mut Run, path: &Path) -> Result<Report, Failure> {
    let loaded = run.structure(path)?;
    let report = structures::validate(&loaded.structure, &loaded.signature).map_err(|e| input("structure", e))?;
    let mut out = String::new();
    for v in &report.violations {
        out.push_str(&format!("{v}\n"));
    }
    if report.is_valid() {
        out.push_str("valid\n");
        Ok(Report::ok(out))
    } else {
        let n = report.violations.len();
        out.push_str(&format!("invalid: {n} violation(s)\n"));
        Ok(Report::fail(out, "invalid_structure", format!("{n} violation(s)")))
    }
}

fn eval(run: &mut Run, path: &Path, text: &str, assign: &[String], p: u32, decimal: Option<usize>) -> Result<Report, Failure> {
    let loaded = run.structure(path)?;
    let m = &loaded.structure;
    let f = parse_formula(text, &loaded.signature).map_err(|e| input("syntax", e))?;
    let mut asg = Assignment::new();
    for a in assign {
        let (var, point) = a.split_once('=').ok_or_else(|| input("assignment", format!("expected VAR=POINT, got `{a}`")))?;
        let idx = m.point_index(point.trim()).ok_or_else(|| input("assignment", format!("no point named `{}`", point.trim())))?;
        asg.insert(var.trim().to_string(), idx);
    }
    let v = structures::eval(m, &f, &asg, p).map_err(|e| input("eval", e))?;
    let mut out = format_rational(&v);
    if let Some(d) = decimal {
        out.push('\t');
        out.push_str(&format_decimal(&v, d));
    }
    out.push('\n');
    Ok(Report::ok(out))
}

struct MeanArgs<'a> {
    charge: &'a Path,
    structures: &'a [PathBuf],
    p: u32,
    out: Option<&'a Path>,
    check: Option<&'a str>,
    cap: usize,
}

fn mean(run: &mut Run, a: MeanArgs) -> Result<Report, Failure> {
    let text = run.read(a.charge)?;
    let mu: Charge = io::read_charge(&text).map_err(|e| input("charge", e))?;
    let (family, sig) = run.family(a.structures)?;
    let mean = ultramean::ultramean_with_cap(&family, &mu, a.p, a.cap).map_err(|e| input("mean", e))?;
    let file = io::write_structure(&mean.structure, &sig);
    let mut out = String::new();
    match a.out {
        Some(path) => run.write(path, &file)?,
        None if a.check.is_none() => out.push_str(&file),
        None => {}
    }
    let Some(text) = a.check else {
        return Ok(Report::ok(out));
    };
    let f = parse_formula(text, &sig).map_err(|e| input("syntax", e))?;
    let report = ultramean::check_identity(&family, &mean, &f, a.p).map_err(|e| input("eval", e))?;
    if let Some((tuples, lhs, rhs)) = &report.mismatch {
        let at: Vec<String> = tuples.iter().map(|(v, t)| format!("{v}={t:?}")).collect();
        let msg = format!("mean gives {} but the weighted sum is {} at {}", format_rational(lhs), format_rational(rhs), at.join(" "));
        out.push_str(&format!("FAIL: {msg}\n"));
        return Ok(Report::fail(out, "ultramean_mismatch", msg));
    }
    out.push_str(&format!("ultramean identity holds at {} assignment(s)\n", report.cases));
    if f.is_sentence() {
        let mut terms = Vec::new();
        for i in mu.support() {
            let v = structures::eval_sentence(&family[i], &f, a.p).map_err(|e| input("eval", e))?;
            terms.push(format!("{}*({})", format_rational(&mu.weights()[i]), format_rational(&v)));
        }
        let v = structures::eval_sentence(&mean.structure, &f, a.p).map_err(|e| input("eval", e))?;
        out.push_str(&format!("{} = {}\n", terms.join(" + "), format_rational(&v)));
    }
    Ok(Report::ok(out))
}

fn sat(run: &mut Run, theory: &Path, paths: &[PathBuf], target: Option<&str>) -> Result<Report, Failure> {
    let (family, ssig) = run.family(paths)?;
    let (theory, sig) = theory_with(run, theory, &ssig)?;
    let names: Vec<String> = paths.iter().map(|p| stem(p)).collect();
    let charge_json = |c: &Charge| -> Value {
        let mut weights = serde_json::Map::new();
        for (n, w) in names.iter().zip(c.weights()) {
            weights.insert(n.clone(), rat(w));
        }
        Value::Object(weights)
    };
    if let Some(text) = target {
        let target = parse_condition(text, &sig).map_err(|e| input("syntax", e))?;
        let c = match satisfiability::consequence_margin(&theory, &target, &family) {
            Ok(c) => c,
            Err(satisfiability::SatError::Unsatisfiable { .. }) => {
                let v = json!({"format_version": FORMAT_VERSION, "verdict": "unsat"});
                return Ok(Report::fail(pretty(&v), "unsat", "the theory has no model over this family"));
            }
            Err(e) => return Err(input("sat", e)),
        };
        let follows = c.follows();
        let v = json!({
            "format_version": FORMAT_VERSION,
            "target": target.to_string(),
            "follows": follows,
            "margin": rat(&c.value),
            "worst_charge": charge_json(&c.charge),
            "multipliers": rats(&c.multipliers),
            "offset": rat(&c.offset),
        });
        return Ok(if follows {
            Report::ok(pretty(&v))
        } else {
            Report::fail(pretty(&v), "not_a_consequence", format!("margin {}", format_rational(&c.value)))
        });
    }
    match satisfiability::sat_over_family(&theory, &family).map_err(|e| input("sat", e))? {
        SatVerdict::Sat(c) => {
            let v = json!({"format_version": FORMAT_VERSION, "verdict": "sat", "charge": charge_json(&c)});
            Ok(Report::ok(pretty(&v)))
        }
        SatVerdict::Unsat { certificate, margin } => {
            let combined = satisfiability::certificate_condition(&theory, &certificate);
            let cert: Vec<Value> = certificate
                .iter()
                .map(|(j, r)| json!({"condition": theory.conditions[*j].to_string(), "multiplier": rat(r)}))
                .collect();
            let v = json!({
                "format_version": FORMAT_VERSION,
                "verdict": "unsat",
                "certificate": cert,
                "combined": combined.to_string(),
                "margin": rat(&margin),
            });
            Ok(Report::fail(pretty(&v), "unsat", format!("violated by at least {}", format_rational(&margin))))
        }
    }
}

fn separate(run: &mut Run, a: &Path, b: &Path, basis: &Path) -> Result<Report, Failure> {
    let (fa, sig, _) = run.directory(a)?;
    let (fb, _, _) = run.directory(b)?;
    let text = run.read(basis)?;
    let (_, formulas) = io::read_basis(&text, &sig).map_err(|e| input("basis", e))?;
    let result = satisfiability::separate(&fa, &fb, &formulas).map_err(|e| input("separate", e))?;
    match result {
        Separation::Separated { coeffs, r, s } => {
            let psi = affine_core::syntax::Formula::sum_all(
                formulas.iter().zip(&coeffs).map(|(f, c)| affine_core::syntax::Formula::scale(c.clone(), f.clone())),
            );
            let v = json!({
                "format_version": FORMAT_VERSION,
                "separated": true,
                "coefficients": rats(&coeffs),
                "sentence": psi.to_string(),
                "max_on_a": rat(&r),
                "min_on_b": rat(&s),
            });
            Ok(Report::ok(pretty(&v)))
        }
        Separation::NotSeparable => {
            let v = json!({"format_version": FORMAT_VERSION, "separated": false});
            Ok(Report::fail(pretty(&v), "not_separable", "the families have overlapping theory hulls"))
        }
    }
}

fn parse_vector(text: &str) -> Result<Vec<Rational>, Failure> {
    text.split(',').map(|t| parse_rational(t).map_err(|e| input("vector", e))).collect()
}

fn types_cmd(run: &mut Run, basis: &Path, paths: &[PathBuf], metrics: Option<&[String]>) -> Result<Report, Failure> {
    let (family, sig) = run.family(paths)?;
    let names: Vec<String> = paths.iter().map(|p| stem(p)).collect();
    let text = run.read(basis)?;
    let (vars, formulas) = io::read_basis(&text, &sig).map_err(|e| input("basis", e))?;
    let basis = FormulaBasis::new(vars, formulas, &family).map_err(|e| input("types", e))?;
    let poly = types::type_polytope(&family, &basis).map_err(|e| input("types", e))?;
    let generators: Vec<Value> = poly
        .generators
        .iter()
        .map(|g| {
            let realized: Vec<Value> = match &g.provenance {
                Provenance::Realized(w) => w
                    .iter()
                    .map(|(i, t)| {
                        let pts: Vec<&str> = t.iter().map(|&a| family[*i].points()[a].as_str()).collect();
                        json!({"structure": names[*i], "tuple": pts})
                    })
                    .collect(),
                Provenance::Combination(_) => Vec::new(),
            };
            json!({"values": rats(&g.values), "realized_by": realized})
        })
        .collect();
    let mut report = json!({
        "format_version": FORMAT_VERSION,
        "vars": basis.vars,
        "formulas": basis.formulas.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "norms": rats(basis.norms()),
        "generators": generators,
        "vertices": poly.vertices,
    });
    if let Some([p, q]) = metrics {
        let (p, q) = (parse_vector(p)?, parse_vector(q)?);
        for v in [&p, &q] {
            if v.len() != basis.len() {
                return Err(input("vector", format!("expected {} coordinates, found {}", basis.len(), v.len())));
            }
        }
        let mut logic = serde_json::Map::new();
        for (m, n) in family.iter().zip(&names) {
            let d = match types::logic_distance(&p, &q, m, &basis) {
                Ok(d) => rat(&d),
                Err(types::TypeError::NotRealized(_)) => Value::Null,
                Err(e) => return Err(input("types", e)),
            };
            logic.insert(n.clone(), d);
        }
        report["metrics"] = json!({
            "norm_distance": rat(&types::norm_distance(&p, &q, &basis)),
            "logic_distance": logic,
        });
    }
    Ok(Report::ok(pretty(&report)))
}

fn qe(text: &str, oracle: Option<usize>) -> Result<Report, Failure> {
    let f = parse_formula(text, &Signature::probability_algebra()).map_err(|e| input("syntax", e))?;
    let out_f = pra_qe::qe(&f).map_err(|e| input("qe", e))?;
    let mut out = format!("{}\n", out_f.to_formula());
    let Some(kmax) = oracle else {
        return Ok(Report::ok(out));
    };
    if kmax == 0 || kmax > 4 {
        return Err(input("qe", "oracle atoms must be between 1 and 4"));
    }
    let vars: Vec<String> = f.free_vars().into_iter().collect();
    let mut mismatches = 0usize;
    for k in 1..=kmax {
        let alg = FiniteAlgebra::uniform(k);
        let events = 1usize << k;
        let total = events.pow(vars.len() as u32);
        let mut agree = 0usize;
        for code in 0..total {
            let mut rest = code;
            let asg: BTreeMap<String, u32> = vars
                .iter()
                .map(|v| {
                    let e = (rest % events) as u32;
                    rest /= events;
                    (v.clone(), e)
                })
                .collect();
            let expect = pra_qe::oracle_eval(&f, &alg, &asg).map_err(|e| input("qe", e))?;
            let got = out_f.eval(&alg, &asg).map_err(|e| input("qe", e))?;
            if expect == got {
                agree += 1;
            } else {
                mismatches += 1;
                out.push_str(&format!(
                    "k={k} {asg:?}: oracle {} eliminated {}\n",
                    format_rational(&expect),
                    format_rational(&got)
                ));
            }
        }
        out.push_str(&format!("k={k}: {agree}/{total} assignments agree\n"));
    }
    if mismatches > 0 {
        return Ok(Report::fail(out, "oracle_mismatch", format!("{mismatches} disagreement(s)")));
    }
    Ok(Report::ok(out))
}

fn check_proof(run: &mut Run, proof: &Path, theory: &Path, probe: Option<&Path>) -> Result<Report, Failure> {
    let text = run.read(proof)?;
    let (node, psig): (ProofNode, Signature) = io::read_proof(&text).map_err(|e| input("proof", e))?;
    let (gamma, sig) = theory_with(run, theory, &psig)?;
    let node = if psig.symbols().is_empty() && !sig.symbols().is_empty() {
        let file: io::ProofFile = serde_json::from_str(&text).map_err(|e| input("proof", e))?;
        file.proof.to_node(&sig, &mut Vec::new()).map_err(|e| input("proof", e))?
    } else {
        node
    };
    let mut out = String::new();
    if let Err(e) = proofcheck::check(&node, &gamma, &sig) {
        out.push_str(&format!("invalid: {e}\n"));
        return Ok(Report::fail(out, "invalid_proof", e.to_string()));
    }
    out.push_str(&format!("valid: {} node(s), conclusion {}\n", node.size(), node.conclusion));
    let Some(dir) = probe else {
        return Ok(Report::ok(out));
    };
    let (family, _, names) = run.directory(dir)?;
    let report = proofcheck::soundness_probe(&node, &gamma, &family).map_err(|e| input("eval", e))?;
    out.push_str(&format!(
        "probe: {} structure(s) satisfy the hypotheses, {} skipped\n",
        report.satisfying, report.skipped
    ));
    if let Some(m) = &report.min_margin {
        out.push_str(&format!("probe: least margin {}\n", format_rational(m)));
    }
    for v in &report.violations {
        let m = &family[v.structure];
        let at: Vec<String> = v.witness.iter().map(|(x, &a)| format!("{x}={}", m.points()[a])).collect();
        out.push_str(&format!(
            "probe: node {:?} fails in {} at [{}] by {}\n",
            v.node,
            names[v.structure],
            at.join(","),
            format_rational(&v.margin)
        ));
    }
    if !report.sound() {
        let n = report.violations.len();
        return Ok(Report::fail(out, "unsound", format!("{n} violation(s)")));
    }
    Ok(Report::ok(out))
}

fn rendezvous(run: &mut Run, path: &Path, n: usize) -> Result<Report, Failure> {
    if n == 0 {
        return Err(input("rendezvous", "n must be at least 1"));
    }
    let loaded = run.structure(path)?;
    if loaded.structure.power() != 1 {
        return Err(input("rendezvous", "structure stores a power of the metric"));
    }
    let (lower, upper) = structures::rendezvous_value(&loaded.structure, n);
    let v = json!({
        "format_version": FORMAT_VERSION,
        "n": n,
        "lower": rat(&lower),
        "upper": rat(&upper),
        "gap": rat(&(upper.clone() - lower.clone())),
    });
    Ok(Report::ok(pretty(&v)))
}

fn dispatch(run: &mut Run, command: &Command) -> Result<Report, Failure> {
    match command {
        Command::Validate { structure } => validate(run, structure),
        Command::Eval { structure, formula, assign, p, decimal } => eval(run, structure, formula, assign, *p, *decimal),
        Command::Mean { charge, structures, p, out, check_ultramean, cap } => mean(
            run,
            MeanArgs {
                charge,
                structures,
                p: *p,
                out: out.as_deref(),
                check: check_ultramean.as_deref(),
                cap: *cap,
            },
        ),
        Command::Sat { theory, structures, target } => sat(run, theory, structures, target.as_deref()),
        Command::Separate { family_a, family_b, basis } => separate(run, family_a, family_b, basis),
        Command::Types { basis, structures, metrics } => types_cmd(run, basis, structures, metrics.as_deref()),
        Command::Qe { formula, oracle } => qe(formula, *oracle),
        Command::CheckProof { proof, theory, probe } => check_proof(run, proof, theory, probe.as_deref()),
        Command::Rendezvous { structure, n } => rendezvous(run, structure, *n),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            eprintln!("{}", json!({"error": {"kind": "usage", "message": message.trim_end(), "exit_code": 2}}));
            return ExitCode::from(2);
        }
    };
    let mut run = Run::default();
    let (stdout, failure) = match dispatch(&mut run, &cli.command) {
        Ok(Report { stdout, semantic: None }) => (stdout, None),
        Ok(Report { stdout, semantic: Some((kind, message)) }) => (stdout, Some(Failure { code: 1, kind, message })),
        Err(f) => (String::new(), Some(f)),
    };
    print!("{stdout}");
    let code = failure.as_ref().map_or(0, |f| f.code);
    if let Some(f) = &failure {
        eprintln!("{}", json!({"error": {"kind": f.kind, "message": f.message, "exit_code": f.code}}));
    }
    if let Some(path) = &cli.manifest {
        let args: Vec<String> = std::env::args().skip(1).collect();
        let inputs: Vec<Value> = run.inputs.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect();
        let mut outputs: Vec<Value> = run.outputs.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect();
        outputs.push(json!({"path": "<stdout>", "sha256": sha(stdout.as_bytes())}));
        let mut all = Sha256::new();
        for (_, h) in &run.inputs {
            all.update(h.as_bytes());
        }
        let manifest = json!({
            "format_version": FORMAT_VERSION,
            "args": args,
            "inputs": inputs,
            "inputs_sha256": hex::encode(all.finalize()),
            "outputs": outputs,
            "exit_code": code,
        });
        if let Err(e) = fs::write(path, pretty(&manifest)) {
            eprintln!("{}", json!({"error": {"kind": "io", "message": format!("{}: {e}", path.display()), "exit_code": 2}}));
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
