use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use treelike::decide::{self, complexity_bound, Budget, SearchOptions, Sizes, ValidVerdict, Verdict};
use treelike::formula::{parse, render, Formula};
use treelike::kripke::{check_frame, unfold, BiFrame};
use treelike::model::{build_question_tree, build_stream_space, Model, Neighborhood};
use treelike::partition::{build_stable_partitions, extract_finite_model, filtrate, SizeReport};
use treelike::pointset::PointSet;
use treelike::proofsys::{
    atom_names, check_proof, formula_pool, scheme_instances, soundness_suite, Proof, SoundnessConfig, System, Violation,
};
use treelike::random::{random_treelike_model, seeded, RandomModelConfig};
use treelike::schemes::{parse_scheme_list, SchemaTemplate};

/// Knowledge and effort over treelike subset spaces.
#[derive(Parser, Debug)]
#[command(name = "treelike", version, about)]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for parallel searches.
    #[arg(long, global = true, env = "TREELIKE_JOBS", value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a formula and print it back in canonical form.
    Parse {
        #[command(flatten)]
        formula: FormulaArg,
        /// Print the desugared syntax tree instead.
        #[arg(long)]
        ast: bool,
    },
    /// Evaluate a formula at one neighborhood of a model.
    Check {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long)]
        point: String,
        #[arg(long)]
        open: String,
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Decide whether a formula holds at every neighborhood of a model.
    ValidInModel {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Report whether every two opens are nested or disjoint.
    TreelikeCheck {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
    },
    /// Print the stable family and remainders for each subformula.
    Partition {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Replace the opens of a model by the finite filtration classes.
    Filtrate {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
        #[command(flatten)]
        out: ModelOutput,
    },
    /// Filtrate, then merge points, giving a small equivalent model.
    Extract {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[command(flatten)]
        formula: FormulaArg,
        #[command(flatten)]
        out: ModelOutput,
    },
    /// Search for a finite model of a formula.
    Sat {
        #[command(flatten)]
        formula: FormulaArg,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Search for a finite countermodel to a formula.
    Valid {
        #[command(flatten)]
        formula: FormulaArg,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Check a Hilbert-style proof file.
    Prove {
        #[arg(long, value_name = "FILE")]
        proof: PathBuf,
        /// Axiom system: mp, mp* or mpt.
        #[arg(long, default_value = "mpt")]
        system: System,
    },
    /// Check axiom scheme instances on every small enumerated model.
    Soundness {
        #[arg(long, default_value_t = 3)]
        max_points: usize,
        /// Largest family size; unlimited when omitted.
        #[arg(long)]
        max_opens: Option<usize>,
        /// Built-in schemes, e.g. `1-12` or `13,15`.
        #[arg(long, default_value = "1-12")]
        schemes: String,
        /// Extra scheme over phi, psi, chi and A; repeatable.
        #[arg(long, value_name = "TEXT")]
        custom: Vec<String>,
        /// Number of atoms (A, B, ...).
        #[arg(long, default_value_t = 2)]
        atoms: usize,
        /// Nesting depth of the instantiation pool.
        #[arg(long, default_value_t = 1)]
        depth: usize,
        /// Enumerate all families, not only treelike ones.
        #[arg(long)]
        non_treelike: bool,
        /// Also check this many seeded random treelike models with up to 6 points.
        #[arg(long, default_value_t = 0, value_name = "N")]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Witnesses to print.
        #[arg(long, default_value_t = 3, value_name = "N")]
        witnesses: usize,
    },
    /// Unfold a birelational frame into a treelike model.
    Unfold {
        #[arg(long, value_name = "FILE")]
        frame: PathBuf,
        #[arg(long)]
        root: String,
        #[command(flatten)]
        out: ModelOutput,
    },
    /// Build the tree of answers to a sequence of yes/no questions.
    BuildOracle {
        /// Comma-separated point names.
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<String>,
        /// `NAME=p1,p2,...`: the points answering yes; repeatable, in order.
        #[arg(long = "question", value_name = "NAME=POINTS")]
        questions: Vec<String>,
        #[arg(short = 'o', long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Build the space of binary strings with prefix cylinders.
    BuildStream {
        #[arg(long)]
        depth: usize,
        #[arg(short = 'o', long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct FormulaArg {
    /// Formula in concrete syntax.
    #[arg(required_unless_present = "formula_file", conflicts_with = "formula_file")]
    formula: Option<String>,
    /// Read the formula from a file.
    #[arg(long, value_name = "FILE")]
    formula_file: Option<PathBuf>,
}

impl FormulaArg {
    fn load(&self) -> Result<Formula> {
        let text = match (&self.formula, &self.formula_file) {
            (Some(t), _) => t.clone(),
            (None, Some(p)) => read(p)?,
            (None, None) => bail!("no formula given"),
        };
        parse(text.trim()).map_err(|e| anyhow!("{e}"))
    }
}

#[derive(Args, Debug)]
struct ModelOutput {
    /// Write the model here instead of stdout.
    #[arg(short = 'o', long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Write the size report here.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = 4, conflicts_with = "use_bound")]
    max_points: usize,
    #[arg(long, default_value_t = 4, conflicts_with = "use_bound")]
    max_opens: usize,
    /// Search up to the formula's size bound when it is below the cap.
    #[arg(long)]
    use_bound: bool,
    #[arg(long, default_value_t = 8)]
    cap_points: usize,
    #[arg(long, default_value_t = 8)]
    cap_opens: usize,
    /// Search all subset spaces, not only treelike ones.
    #[arg(long)]
    non_treelike: bool,
    /// Write the witness model here.
    #[arg(short = 'o', long, value_name = "FILE")]
    output: Option<PathBuf>,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            budget: if self.use_bound {
                Budget::UseBound
            } else {
                Budget::Sizes(Sizes { max_points: self.max_points, max_opens: self.max_opens })
            },
            treelike: !self.non_treelike,
            cap: Sizes { max_points: self.cap_points, max_opens: self.cap_opens },
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<Model> {
    Model::from_json(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn count(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("1 {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

fn set_text(m: &Model, s: &PointSet) -> String {
    format!("{{{}}}", m.space.names_of(s).join(", "))
}

struct Run {
    json: bool,
}

impl Run {
    fn say(&self, text: impl AsRef<str>, value: Value) {
        if self.json {
            println!("{}", pretty(&value));
        } else {
            println!("{}", text.as_ref());
        }
    }

    fn dispatch(&self, command: Command) -> Result<u8> {
        match command {
            Command::Parse { formula, ast } => {
                let f = formula.load()?;
                let text = if ast { f.ast_dump().trim_end().to_string() } else { render(&f) };
                self.say(&text, json!({ "formula": render(&f), "ast": f.ast_dump() }));
                Ok(0)
            }
            Command::Check { model, point, open, formula } => {
                let m = load_model(&model)?;
                let f = formula.load()?;
                let n = m.neighborhood(&point, &open)?;
                let v = m.satisfies(n, &f)?;
                self.say(v.to_string(), json!({ "value": v }));
                Ok(u8::from(!v))
            }
            Command::ValidInModel { model, formula } => {
                let m = load_model(&model)?;
                let f = formula.load()?;
                match m.counterexample(&f) {
                    None => {
                        self.say("true", json!({ "valid": true }));
                        Ok(0)
                    }
                    Some(n) => {
                        let (p, o) = (&m.space.points()[n.point], &m.space.opens()[n.open].name);
                        self.say(format!("false: fails at {}", m.describe(n)), json!({ "valid": false, "point": p, "open": o }));
                        Ok(1)
                    }
                }
            }
            Command::TreelikeCheck { model } => {
                let m = load_model(&model)?;
                match m.space.treelike_violation() {
                    None => {
                        self.say("treelike", json!({ "treelike": true }));
                        Ok(0)
                    }
                    Some((a, b)) => {
                        let (a, b) = (&m.space.opens()[a].name, &m.space.opens()[b].name);
                        self.say(
                            format!("not treelike: {a} and {b} overlap without nesting"),
                            json!({ "treelike": false, "witness": [a, b] }),
                        );
                        Ok(1)
                    }
                }
            }
            Command::Partition { model, formula } => {
                let m = load_model(&model)?;
                let f = formula.load()?;
                let table = build_stable_partitions(&m, &f)?;
                let mut lines = Vec::new();
                let mut stages = Vec::new();
                for st in &table.stages {
                    lines.push(render(&st.formula));
                    let mut members = Vec::new();
                    for (i, member) in st.family.iter().enumerate() {
                        let rem: Vec<&str> = st.remainders[i].iter().map(|&v| m.space.opens()[v].name.as_str()).collect();
                        lines.push(format!(
                            "  {} remainder [{}] true at {}",
                            set_text(&m, member),
                            rem.join(", "),
                            set_text(&m, &st.truth[i])
                        ));
                        members.push(json!({
                            "member": m.space.names_of(member),
                            "remainder": rem,
                            "truth": m.space.names_of(&st.truth[i]),
                        }));
                    }
                    stages.push(json!({ "formula": render(&st.formula), "family": members }));
                }
                self.say(lines.join("\n"), json!({ "stages": stages }));
                Ok(0)
            }
            Command::Filtrate { model, formula, out } => {
                let m = load_model(&model)?;
                let f = formula.load()?;
                let r = filtrate(&m, &f)?;
                let bound = complexity_bound(&f);
                let report = SizeReport {
                    family_sizes: r.table.stages.iter().map(|s| (render(&s.formula), s.family.len())).collect(),
                    output_points: r.model.space.num_points(),
                    output_opens: r.model.space.opens().len(),
                    bound_points: bound.max_points,
                    bound_opens: bound.max_opens,
                };
                self.emit_model(&r.model, &report, &out)
            }
            Command::Extract { model, formula, out } => {
                let m = load_model(&model)?;
                let f = formula.load()?;
                let ext = extract_finite_model(&m, &f)?;
                self.emit_model(ext.model(), &ext.report, &out)
            }
            Command::Sat { formula, search } => {
                let f = formula.load()?;
                let out = decide::satisfiable(&f, &search.options())?;
                eprintln!("models checked: {}, elapsed: {:.3?}", out.models_checked, out.elapsed);
                let searched = json!({ "max_points": out.searched.max_points, "max_opens": out.searched.max_opens });
                match &out.verdict {
                    Verdict::Sat { model, at } => {
                        self.witness("sat", model, *at, &search, searched)?;
                        Ok(0)
                    }
                    Verdict::UnsatProved => {
                        self.say("unsat_proved", json!({ "verdict": "unsat_proved", "searched": searched }));
                        Ok(1)
                    }
                    Verdict::UnsatWithin => {
                        self.say(
                            format!("unsat_within points<={} opens<={}", out.searched.max_points, out.searched.max_opens),
                            json!({ "verdict": "unsat_within", "searched": searched }),
                        );
                        Ok(2)
                    }
                }
            }
            Command::Valid { formula, search } => {
                let f = formula.load()?;
                let out = decide::valid(&f, &search.options())?;
                eprintln!("models checked: {}, elapsed: {:.3?}", out.models_checked, out.elapsed);
                let searched = json!({ "max_points": out.searched.max_points, "max_opens": out.searched.max_opens });
                match &out.verdict {
                    ValidVerdict::Valid => {
                        self.say("valid", json!({ "verdict": "valid", "searched": searched }));
                        Ok(0)
                    }
                    ValidVerdict::Countermodel { model, at } => {
                        self.witness("countermodel", model, *at, &search, searched)?;
                        Ok(1)
                    }
                    ValidVerdict::ValidWithin => {
                        self.say(
                            format!("valid_within points<={} opens<={}", out.searched.max_points, out.searched.max_opens),
                            json!({ "verdict": "valid_within", "searched": searched }),
                        );
                        Ok(2)
                    }
                }
            }
            Command::Prove { proof, system } => {
                let p = Proof::from_json(&read(&proof)?)?;
                match check_proof(&p, system) {
                    Ok(c) => {
                        self.say(format!("accepted: {}", render(&c)), json!({ "accepted": true, "conclusion": render(&c) }));
                        Ok(0)
                    }
                    Err(r) => {
                        self.say(
                            format!("rejected at line {}: {}", r.line, r.reason),
                            json!({ "accepted": false, "line": r.line, "reason": r.reason }),
                        );
                        Ok(1)
                    }
                }
            }
            Command::Soundness {
                max_points,
                max_opens,
                schemes,
                custom,
                atoms,
                depth,
                non_treelike,
                random,
                seed,
                witnesses,
            } => {
                let mut templates = Vec::new();
                for id in parse_scheme_list(&schemes).map_err(|e| anyhow!(e))? {
                    templates.push(SchemaTemplate::builtin(id)?);
                }
                for (i, text) in custom.iter().enumerate() {
                    templates.push(SchemaTemplate::custom(format!("custom{}", i + 1), text)?);
                }
                let cfg = SoundnessConfig {
                    max_points,
                    max_opens: max_opens.unwrap_or(usize::MAX),
                    atoms,
                    depth,
                    schemes: templates,
                    treelike: !non_treelike,
                    keep_witnesses: witnesses,
                };
                let mut report = soundness_suite(&cfg);
                let extra = random_violations(&cfg, random, seed);
                report.models += random as u64;
                report.checks += random as u64 * report.instances;
                report.violation_count += extra.len() as u64;
                for w in extra {
                    if report.violations.len() < witnesses {
                        report.violations.push(w);
                    }
                }
                let mut lines = vec![format!(
                    "{} models, {} instances, {} checks",
                    report.models, report.instances, report.checks
                )];
                for v in &report.violations {
                    lines.push(format!(
                        "scheme {}: `{}` fails at ({}, {}) in {}",
                        v.scheme,
                        v.instance,
                        v.point,
                        v.open,
                        serde_json::to_string(&v.model).expect("model serializes")
                    ));
                }
                lines.push(format!("{} violations", report.violation_count));
                self.say(lines.join("\n"), serde_json::to_value(&report)?);
                Ok(u8::from(report.violation_count > 0))
            }
            Command::Unfold { frame, root, out } => {
                let fr = BiFrame::from_json(&read(&frame)?).with_context(|| format!("loading {}", frame.display()))?;
                let checks = check_frame(&fr);
                if !checks.all_pass() {
                    for c in checks.checks.iter().filter(|c| !c.passed) {
                        eprintln!("frame check {} failed: {:?}", c.name, c.witness.as_deref().unwrap_or_default());
                    }
                    return Ok(1);
                }
                let u = unfold(&fr, &root)?;
                write_or_print(out.output.as_deref(), &u.model.to_json())?;
                if let Some(p) = &out.report {
                    let sizes: Vec<usize> = u.model.space.opens().iter().map(|o| o.members.len()).collect();
                    let r = json!({ "points": u.model.space.num_points(), "open_sizes": sizes, "checks": checks });
                    write_or_print(Some(p), &pretty(&r))?;
                }
                Ok(0)
            }
            Command::BuildOracle { points, questions, output } => {
                let mut qs = Vec::new();
                for q in &questions {
                    let (name, yes) = q.split_once('=').ok_or_else(|| anyhow!("question `{q}` is not NAME=POINTS"))?;
                    let yes = yes.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
                    qs.push((name.trim().to_string(), yes));
                }
                let m = build_question_tree(&points, &qs)?;
                write_or_print(output.as_deref(), &m.to_json())?;
                Ok(0)
            }
            Command::BuildStream { depth, output } => {
                let m = build_stream_space(depth)?;
                write_or_print(output.as_deref(), &m.to_json())?;
                Ok(0)
            }
        }
    }

    fn emit_model(&self, m: &Model, report: &SizeReport, out: &ModelOutput) -> Result<u8> {
        write_or_print(out.output.as_deref(), &m.to_json())?;
        if let Some(p) = &out.report {
            write_or_print(Some(p), &serde_json::to_string_pretty(report)?)?;
        } else if out.output.is_some() {
            self.say(
                format!("{}, {}", count(report.output_points, "point"), count(report.output_opens, "open")),
                serde_json::to_value(report)?,
            );
        }
        Ok(0)
    }

    fn witness(&self, label: &str, m: &Model, at: Neighborhood, search: &SearchArgs, searched: Value) -> Result<()> {
        let (p, o) = (&m.space.points()[at.point], &m.space.opens()[at.open].name);
        if let Some(path) = &search.output {
            write_or_print(Some(path), &m.to_json())?;
        }
        self.say(
            format!(
                "{label} at {} with {}, {}",
                m.describe(at),
                count(m.space.num_points(), "point"),
                count(m.space.opens().len(), "open")
            ),
            json!({ "verdict": label, "point": p, "open": o, "searched": searched, "model": m.to_file() }),
        );
        Ok(())
    }
}

fn random_violations(cfg: &SoundnessConfig, count: usize, seed: u64) -> Vec<Violation> {
    if count == 0 {
        return Vec::new();
    }
    let atoms = atom_names(cfg.atoms);
    let pool = formula_pool(&atoms, cfg.depth);
    let model_cfg = RandomModelConfig { atoms: atoms.clone(), ..Default::default() };
    let mut rng = seeded(seed);
    let mut out = Vec::new();
    for _ in 0..count {
        let m = random_treelike_model(&mut rng, &model_cfg);
        for t in &cfg.schemes {
            for f in scheme_instances(t, &atoms, &pool) {
                if let Some(n) = m.counterexample(&f) {
                    out.push(Violation {
                        scheme: t.name.clone(),
                        instance: render(&f),
                        point: m.space.points()[n.point].clone(),
                        open: m.space.opens()[n.open].name.clone(),
                        model: m.to_file(),
                    });
                }
            }
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let run = Run { json: cli.json };
    match run.dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

