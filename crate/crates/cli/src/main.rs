use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mechord::bbn::validate;
use mechord::dot::{bbn_to_dot, ordering_to_dot};
use mechord::io::{self, BbnFile, ChangeFile, FormatError, ModelKind};
use mechord::{
    affected_variables, apply_change, bbn_to_sem, causal_ordering, check_equivalence, compare_marginals, intervene_bbn,
    roundtrip_check, sample, sem_structure, triangularize, Bbn, CausalOrdering, EquationId, InterventionError,
    StructuralChange, StructureMatrix, SystemError, ThresholdEquationSystem, TriangularError, VariableId,
};

#[derive(Parser)]
#[command(name = "mechord", version, about = "Causal ordering of equation systems and belief networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report self-containment and acyclicity of a system, or validate a network.
    Check { model: PathBuf },
    /// Print the causal ordering as a cluster table.
    Order {
        model: PathBuf,
        /// Also write the ordering as Graphviz DOT.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
    },
    /// Permute a system to lower-triangular form.
    Triangularize { model: PathBuf },
    /// Convert a belief network into its threshold-equation system.
    ToSem {
        model: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Compare a network with its threshold-equation system.
    Verify {
        model: PathBuf,
        /// Check against this system instead of the one derived from the network.
        #[arg(long, value_name = "PATH")]
        sem: Option<PathBuf>,
    },
    /// Sample a network or threshold-equation system and tabulate the draws.
    Sample {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        count: u64,
    },
    /// Apply an intervention or structural change.
    Intervene {
        model: PathBuf,
        #[arg(long, value_name = "NAME")]
        node: Option<String>,
        /// Replacement distribution, comma separated.
        #[arg(long, value_name = "CSV")]
        dist: Option<String>,
        /// Change file.
        #[arg(long, value_name = "PATH")]
        change: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Print a network, or the causal ordering of a system, as Graphviz DOT.
    Graph {
        model: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

/// A failure reported on stderr as `error:<category>: <message>`.
struct Failure {
    category: &'static str,
    message: String,
}

impl Failure {
    fn new(category: &'static str, message: impl Display) -> Self {
        Failure { category, message: message.to_string() }
    }

    fn exit_code(&self) -> u8 {
        match self.category {
            "validation" | "cyclic" | "not-self-contained" => 1,
            _ => 2,
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Json(e) => Failure::new("parse", e),
            FormatError::System(e) => e.into(),
            other => Failure::new("validation", other),
        }
    }
}

impl From<SystemError> for Failure {
    fn from(e: SystemError) -> Self {
        match e {
            e @ SystemError::NotSelfContained(_) => Failure::new("not-self-contained", e),
            other => Failure::new("validation", other),
        }
    }
}

impl From<InterventionError> for Failure {
    fn from(e: InterventionError) -> Self {
        match e {
            InterventionError::System(e) => e.into(),
            other => Failure::new("validation", other),
        }
    }
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("error:usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error:{}: {}", f.category, f.message);
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Check { model } => check(&model),
        Command::Order { model, dot } => order(&model, dot.as_deref()),
        Command::Triangularize { model } => triangular(&model),
        Command::ToSem { model, out } => to_sem(&model, out.as_deref()),
        Command::Verify { model, sem } => verify(&model, sem.as_deref()),
        Command::Sample { model, seed, count } => sample_cmd(&model, seed, count),
        Command::Intervene { model, node, dist, change, out } => {
            intervene(&model, node.as_deref(), dist.as_deref(), change.as_deref(), out.as_deref())
        }
        Command::Graph { model, out } => graph(&model, out.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// loading

enum Model {
    System(StructureMatrix),
    Bbn(Bbn),
    Sem(ThresholdEquationSystem),
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Model, Failure> {
    let text = read(path)?;
    Ok(match io::detect_kind(&text)? {
        ModelKind::System => Model::System(io::parse_system(&text)?),
        ModelKind::Bbn => Model::Bbn(io::parse_bbn(&text)?),
        ModelKind::Sem => Model::Sem(io::parse_sem(&text)?),
    })
}

fn load_bbn(path: &Path) -> Result<Bbn, Failure> {
    match load(path)? {
        Model::Bbn(b) => Ok(b),
        _ => Err(Failure::new("usage", format!("{} is not a network file", path.display()))),
    }
}

/// The structure matrix behind any model kind.
fn structure(model: Model) -> StructureMatrix {
    match model {
        Model::System(m) => m,
        Model::Bbn(b) => sem_structure(&bbn_to_sem(&b)),
        Model::Sem(s) => sem_structure(&s),
    }
}

// ---------------------------------------------------------------------------
// output helpers

fn join<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Left-aligned columns separated by two spaces.
fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (k, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if k > 0 {
                s.push_str("  ");
            }
            s.push_str(cell);
            s.extend(std::iter::repeat_n(' ', w - cell.chars().count()));
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(headers.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn var_names(m: &StructureMatrix, vars: &BTreeSet<VariableId>) -> String {
    join(vars.iter().map(|&v| m.variable_name(v)))
}

fn eq_labels(m: &StructureMatrix, eqs: &BTreeSet<EquationId>) -> String {
    join(eqs.iter().map(|&e| m.equation_label(e)))
}

fn ordering_report(m: &StructureMatrix, o: &CausalOrdering) -> String {
    let rows: Vec<Vec<String>> = o
        .clusters
        .iter()
        .map(|c| {
            vec![c.order.to_string(), c.degree.to_string(), eq_labels(m, &c.equations), var_names(m, &c.variables)]
        })
        .collect();
    let mut out = table(&["order", "degree", "equations", "variables"], &rows);
    if !o.variable_edges.is_empty() {
        out.push_str("\nedges:\n");
        let mut edges: Vec<(VariableId, VariableId)> = o.variable_edges.iter().copied().collect();
        edges.sort_by_key(|&(u, v)| (o.cluster_of_variable(u), o.cluster_of_variable(v), u, v));
        for (u, v) in edges {
            out.push_str(&format!("  {} -> {}\n", m.variable_name(u), m.variable_name(v)));
        }
    }
    out
}

fn emit(text: String, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => {
            write(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

// ---------------------------------------------------------------------------
// subcommands

fn check(path: &Path) -> Outcome {
    let text = read(path)?;
    match io::detect_kind(&text)? {
        ModelKind::System => check_system(io::parse_system(&text)?),
        ModelKind::Bbn => {
            let file: BbnFile = serde_json::from_str(&text).map_err(FormatError::from)?;
            let nodes = file.to_nodes()?;
            let report = validate(&nodes);
            if !report.is_valid() {
                for issue in &report.issues {
                    println!("{}", issue.describe(&nodes));
                }
                let category = if report.cycle().is_some() { "cyclic" } else { "validation" };
                return Err(Failure::new(category, format!("{} issue(s) in network", report.issues.len())));
            }
            let bbn = Bbn::new(nodes).map_err(|e| Failure::new("validation", e))?;
            Ok(format!(
                "nodes: {}\narcs: {}\njoint configurations: {}\nvalid: yes\n",
                bbn.len(),
                bbn.edges().len(),
                bbn.configuration_count()
            ))
        }
        ModelKind::Sem => {
            let sem = io::parse_sem(&text)?;
            Ok(format!("equations: {}\njoint configurations: {}\nvalid: yes\n", sem.len(), sem.configuration_count()))
        }
    }
}

fn check_system(m: StructureMatrix) -> Outcome {
    let report = m.check_system();
    let mut out = format!("equations: {}\nvariables: {}\n", m.n(), m.n());
    if !report.self_contained {
        out.push_str("self-contained: no\n");
        if !report.unused_variables.is_empty() {
            out.push_str(&format!(
                "unused variables: {}\n",
                join(report.unused_variables.iter().map(|&v| m.variable_name(v)))
            ));
        }
        if let Some(w) = &report.witness {
            out.push_str(&format!(
                "witness: {{{}}} over {{{}}}\n",
                eq_labels(&m, &w.equations),
                var_names(&m, &w.variables)
            ));
        }
        print!("{out}");
        let message = match &report.witness {
            Some(w) => format!(
                "equations {{{}}} contain only {{{}}}",
                eq_labels(&m, &w.equations),
                var_names(&m, &w.variables)
            ),
            None => "system is not self-contained".into(),
        };
        return Err(Failure::new("not-self-contained", message));
    }
    out.push_str("self-contained: yes\n");
    let o = causal_ordering(&m)?;
    if o.is_acyclic() {
        out.push_str("acyclic: yes\n");
    } else {
        out.push_str("acyclic: no\n");
        for c in o.clusters.iter().filter(|c| c.degree > 1) {
            out.push_str(&format!(
                "feedback: {{{}}} over {{{}}}\n",
                eq_labels(&m, &c.equations),
                var_names(&m, &c.variables)
            ));
        }
    }
    Ok(out)
}

fn ordering_of(m: &StructureMatrix) -> Result<CausalOrdering, Failure> {
    causal_ordering(m).map_err(|e| match e {
        SystemError::NotSelfContained(report) => match &report.witness {
            Some(w) => Failure::new(
                "not-self-contained",
                format!("equations {{{}}} contain only {{{}}}", eq_labels(m, &w.equations), var_names(m, &w.variables)),
            ),
            None => Failure::new("not-self-contained", "system is not self-contained"),
        },
        other => other.into(),
    })
}

fn order(path: &Path, dot: Option<&Path>) -> Outcome {
    let m = structure(load(path)?);
    let o = ordering_of(&m)?;
    if let Some(dot) = dot {
        write(dot, &ordering_to_dot(&o))?;
    }
    Ok(ordering_report(&m, &o))
}

fn triangular(path: &Path) -> Outcome {
    let m = structure(load(path)?);
    ordering_of(&m)?;
    match triangularize(&m) {
        Ok(t) => {
            let mut out = format!(
                "row order:    {}\ncolumn order: {}\n\n",
                t.row_perm.iter().map(|&e| m.equation_label(e)).collect::<Vec<_>>().join(" "),
                t.col_perm.iter().map(|&v| m.variable_name(v)).collect::<Vec<_>>().join(" ")
            );
            let rows: Vec<Vec<String>> = t
                .row_perm
                .iter()
                .map(|&e| vec![m.equation_label(e).to_string(), m.variable_name(t.determined_by[&e]).to_string()])
                .collect();
            out.push_str(&table(&["equation", "determines"], &rows));
            Ok(out)
        }
        Err(TriangularError::CyclicStructure(rest)) => Err(Failure::new(
            "cyclic",
            format!("no remaining equation has a single remaining variable; witness {{{}}}", eq_labels(&m, &rest)),
        )),
        Err(TriangularError::System(e)) => Err(e.into()),
    }
}

fn to_sem(path: &Path, out: Option<&Path>) -> Outcome {
    let bbn = load_bbn(path)?;
    emit(io::sem_to_json(&bbn_to_sem(&bbn)), out)
}

fn verify(path: &Path, sem_path: Option<&Path>) -> Outcome {
    let bbn = load_bbn(path)?;
    let sem = match sem_path {
        Some(p) => io::parse_sem(&read(p)?)?,
        None => bbn_to_sem(&bbn),
    };
    let deviation = check_equivalence(&bbn, &sem).map_err(|e| Failure::new("validation", e))?;
    let roundtrip = roundtrip_check(&bbn);
    let line = format!("max deviation {deviation:.1e}; roundtrip: {}\n", if roundtrip { "ok" } else { "FAILED" });
    if deviation > 1e-12 || !roundtrip {
        print!("{line}");
        return Err(Failure::new("validation", "network and threshold system disagree"));
    }
    Ok(line)
}

fn sample_cmd(path: &Path, seed: u64, count: u64) -> Outcome {
    if count == 0 {
        return Err(Failure::new("usage", "--count must be at least 1"));
    }
    let sem = match load(path)? {
        Model::Bbn(b) => bbn_to_sem(&b),
        Model::Sem(s) => s,
        Model::System(_) => return Err(Failure::new("usage", "sampling needs a network or threshold system")),
    };
    let tally = sample(&sem, seed, count);
    let mut headers: Vec<&str> = sem.variable_names().iter().map(String::as_str).collect();
    headers.extend(["count", "frequency", "exact"]);
    let rows: Vec<Vec<String>> = tally
        .counts
        .iter()
        .map(|(a, &c)| {
            let mut row: Vec<String> =
                a.0.iter().enumerate().map(|(v, &j)| sem.outcome_labels(VariableId(v))[j].clone()).collect();
            row.push(c.to_string());
            row.push(format!("{:.6}", tally.frequency(a)));
            row.push(format!("{:.6}", sem.sem_joint(a).unwrap_or(f64::NAN)));
            row
        })
        .collect();
    let mut out = format!("seed: {seed}\ndraws: {count}\n\n");
    out.push_str(&table(&headers, &rows));
    if let Ok(tv) = tally.total_variation(&sem) {
        out.push_str(&format!("\ntotal variation: {tv:.6}\n"));
    }
    Ok(out)
}

fn parse_dist(csv: &str) -> Result<Vec<f64>, Failure> {
    csv.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Failure::new("usage", format!("--dist: `{}` is not a number", x.trim())))
        })
        .collect()
}

fn intervene(
    path: &Path,
    node: Option<&str>,
    dist: Option<&str>,
    change: Option<&Path>,
    out: Option<&Path>,
) -> Outcome {
    let change_file: Option<ChangeFile> = match change {
        Some(p) => Some(io::parse_change(&read(p)?)?),
        None => None,
    };
    if change_file.is_some() && (node.is_some() || dist.is_some()) {
        return Err(Failure::new("usage", "give either --change or --node/--dist, not both"));
    }
    match load(path)? {
        Model::Bbn(bbn) => {
            let (target, dist) = match (&change_file, node, dist) {
                (Some(c), _, _) => match c.resolve_for_bbn(&bbn)? {
                    StructuralChange::SetBbnNode { node, dist } => (node, dist),
                    other => {
                        return Err(Failure::new("usage", format!("`{}` does not apply to a network", other.kind())))
                    }
                },
                (None, Some(name), Some(csv)) => {
                    let v = bbn
                        .node_by_name(name)
                        .ok_or_else(|| Failure::new("usage", format!("unknown node `{name}`")))?;
                    (v, parse_dist(csv)?)
                }
                _ => return Err(Failure::new("usage", "a network needs --node and --dist, or --change")),
            };
            let after = intervene_bbn(&bbn, target, &dist).map_err(|e| Failure::new("validation", e))?;
            let deviations = compare_marginals(&bbn, &after).map_err(|e| Failure::new("validation", e))?;
            let downstream = bbn.descendants(target);
            let rows: Vec<Vec<String>> = deviations
                .iter()
                .map(|(&v, dev)| {
                    let may_change = v == target || downstream.contains(&v);
                    vec![
                        bbn.node(v).name.clone(),
                        format!("{dev:.3e}"),
                        if may_change { "yes" } else { "no" }.to_string(),
                    ]
                })
                .collect();
            let mut text = emit(io::bbn_to_json(&after), out)?;
            if !text.is_empty() {
                text.push('\n');
            }
            text.push_str(&table(&["node", "deviation", "affected"], &rows));
            Ok(text)
        }
        Model::System(m) => {
            let c = change_file.ok_or_else(|| Failure::new("usage", "an equation system needs --change"))?;
            let change = c.resolve_for_system(&m)?;
            let before = ordering_of(&m)?;
            let edited = apply_change(&m, &change)?;
            let after = causal_ordering(&edited)?;
            let affected = match &change {
                StructuralChange::ReplaceEquation { equation, .. } => {
                    var_names(&m, &affected_variables(&before, *equation)?)
                }
                StructuralChange::SetBbnNode { node, .. } => {
                    let e = before.clusters[before.cluster_of_variable(*node).expect("every variable has a cluster")]
                        .equations
                        .iter()
                        .next()
                        .copied()
                        .expect("clusters are non-empty");
                    var_names(&m, &affected_variables(&before, e)?)
                }
                StructuralChange::AddExogenousVariable { .. } => {
                    var_names(&edited, &affected_variables(&after, EquationId(edited.n() - 1))?)
                }
            };
            let mut text = emit(io::system_to_json(&edited), out)?;
            if !text.is_empty() {
                text.push('\n');
            }
            text.push_str(&format!("affected: {affected}\n\n"));
            text.push_str(&ordering_report(&edited, &after));
            Ok(text)
        }
        Model::Sem(_) => Err(Failure::new("usage", "intervene takes a network or an equation system")),
    }
}

fn graph(path: &Path, out: Option<&Path>) -> Outcome {
    let dot = match load(path)? {
        Model::Bbn(b) => bbn_to_dot(&b),
        model => {
            let m = structure(model);
            ordering_to_dot(&ordering_of(&m)?)
        }
    };
    emit(dot, out)
}
