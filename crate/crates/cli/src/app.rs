//! Command-line front end: argument parsing and one function per command.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use prospect_core::acceptability::{attitude, attitude_matrix, Scope};
use prospect_core::alignment::{
    alignment_report, godet_to_mychoice, mychoice_to_godet, AlignmentMap,
};
use prospect_core::corpus::{read_criteria_csv, read_sources_csv, Corpus};
use prospect_core::delphi::{aggregate, confirm_keys, generate_questionnaire, DelphiBallot};
use prospect_core::matcher::{self, Matcher, DEFAULT_THRESHOLD};
use prospect_core::ontology::{godet_stats, mychoice_stats, OntologyStats};
use prospect_core::project::{Action, Project};
use prospect_core::store::{self, ProjectLock};
use prospect_core::structural::{
    self, build_matrix, key_variables, micmac, rank_variables, InfluenceMatrix,
    StructuralScores, DEFAULT_K_MAX, DEFAULT_N_KEYS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "prospect",
    version,
    about = "Build and analyse the shared ontology of a collaborative prospective study"
)]
pub struct Cli {
    /// Project file.
    #[arg(long, global = true, default_value = "project.prospect.json")]
    pub project: PathBuf,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Minimum similarity for suggestions, in [0, 1].
    #[arg(long, global = true, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Highest matrix power tried by MICMAC.
    #[arg(long, global = true, default_value_t = DEFAULT_K_MAX)]
    pub k_max: usize,
    /// Number of key variables.
    #[arg(long, global = true, default_value_t = DEFAULT_N_KEYS)]
    pub n_keys: usize,
    /// Choices per Delphi ballot (defaults to the project setting).
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add sources and criteria to the project, creating it if needed.
    Ingest(IngestArgs),
    /// Rank criterion-to-concept and concept-merge suggestions.
    Suggest {
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Record decisions in the journal.
    Apply(ApplyArgs),
    /// Criteria, concept and variable counts for both schemas.
    Stats,
    /// Influence relations between concepts.
    #[command(subcommand)]
    Relations(RelationsCommand),
    /// MICMAC influence and dependence scores.
    Micmac {
        /// Analyse a matrix CSV instead of the project's relations.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Key variables ranked by influence plus dependence.
    Keys {
        /// Record the result as the project's key variables.
        #[arg(long)]
        mark: bool,
    },
    /// Godet and MyChoice alignment.
    #[command(subcommand)]
    Align(AlignCommand),
    /// A stakeholder's attitude toward the alternative.
    Attitude(AttitudeArgs),
    /// Delphi questionnaire, tallies and key-variable confirmation.
    #[command(subcommand)]
    Delphi(DelphiCommand),
    /// Serve the project over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Directory of static web assets served at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Journal access.
    #[command(subcommand)]
    Journal(JournalCommand),
    /// Influence matrix access.
    #[command(subcommand)]
    Matrix(MatrixCommand),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// CSV with id, kind, title, stakeholder_category, date.
    #[arg(long, requires = "criteria")]
    pub sources: Option<PathBuf>,
    /// CSV with criterion_id, raw_text, source_id, span_start, span_end.
    #[arg(long, requires = "sources")]
    pub criteria: Option<PathBuf>,
    /// Corpus JSON document (or a project file to copy the corpus from).
    #[arg(long, conflicts_with_all = ["sources", "criteria"])]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "facilitator")]
    pub actor: String,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("decision").required(true).args(["accept", "reject", "actions"])))]
pub struct ApplyArgs {
    #[arg(long)]
    pub accept: Option<String>,
    #[arg(long)]
    pub reject: Option<String>,
    /// JSON array or JSON-lines file of actions.
    #[arg(long)]
    pub actions: Option<PathBuf>,
    #[arg(long, default_value = "facilitator")]
    pub actor: String,
    /// Refuse to apply unless the journal is at this sequence number.
    #[arg(long)]
    pub expect_seq: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum RelationsCommand {
    /// Import a CSV of from_concept, to_concept, weight, source_id.
    Import {
        file: PathBuf,
        #[arg(long, default_value = "facilitator")]
        actor: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum AlignCommand {
    /// Side-by-side comparison and blocking discrepancies.
    Report {
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Convert the Godet ontology into a MyChoice dataset.
    ToMychoice {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert the MyChoice dataset into a Godet fragment.
    ToGodet {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct AttitudeArgs {
    #[arg(long, required_unless_present = "matrix")]
    pub stakeholder: Option<String>,
    /// Defaults to the dataset's alternative.
    #[arg(long)]
    pub alternative: Option<String>,
    /// `global`, `mcriterion:<id>` or `aim:<id>`.
    #[arg(long, default_value = "global")]
    pub scope: String,
    /// Every stakeholder at every scope.
    #[arg(long, conflicts_with = "stakeholder")]
    pub matrix: bool,
}

#[derive(Debug, Subcommand)]
pub enum DelphiCommand {
    /// Print the questionnaire over the current variables.
    Gen,
    /// Approval counts for one round.
    Aggregate(RoundArgs),
    /// Compare the consultation with the structural key variables.
    Confirm(RoundArgs),
}

#[derive(Debug, Args)]
pub struct RoundArgs {
    #[arg(long, default_value_t = 1)]
    pub round: u32,
    /// JSON array of ballots; defaults to the ballots recorded in the project.
    #[arg(long)]
    pub ballots: Option<PathBuf>,
    /// Number of experts invited, for the response rate.
    #[arg(long)]
    pub invited: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum JournalCommand {
    /// Print every decision record (JSON lines, or CSV).
    Export,
}

#[derive(Debug, Subcommand)]
pub enum MatrixCommand {
    /// Print the variable influence matrix (CSV with a header of labels).
    Export,
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) if is_broken_pipe(&e) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

/// A closed stdout (as with `| head`) ends the command quietly.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        let io = cause.downcast_ref::<std::io::Error>().or_else(|| {
            cause.downcast_ref::<csv::Error>().and_then(|c| match c.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            })
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn load(path: &Path) -> Result<Project> {
    store::load(path).with_context(|| format!("loading {}", path.display()))
}

fn json_line(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn no_csv(command: &str) -> anyhow::Error {
    anyhow!("{command} has no CSV output; use --format text or json")
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Ingest(args) => ingest(cli, args, out),
        Command::Suggest { limit } => suggest(cli, *limit, out),
        Command::Apply(args) => apply(cli, args, out),
        Command::Stats => stats(cli, out),
        Command::Relations(RelationsCommand::Import { file, actor }) => {
            import_relations(cli, file, actor, out)
        }
        Command::Micmac { matrix } => run_micmac(cli, matrix.as_deref(), out),
        Command::Keys { mark } => keys(cli, *mark, out),
        Command::Align(cmd) => align(cli, cmd, out, err),
        Command::Attitude(args) => run_attitude(cli, args, out),
        Command::Delphi(cmd) => delphi(cli, cmd, out),
        Command::Serve { bind, static_dir } => {
            let project = load(&cli.project)?;
            crate::server::serve(project, cli, bind, static_dir.clone())
        }
        Command::Journal(JournalCommand::Export) => journal_export(cli, out),
        Command::Matrix(MatrixCommand::Export) => matrix_export(cli, out),
    }
}

/// Applies actions under the project lock and saves once at the end.
fn commit(path: &Path, actor: &str, expect_seq: Option<u64>, actions: Vec<Action>) -> Result<Project> {
    let lock = ProjectLock::acquire(path)?;
    let mut project = lock.load_or_new()?;
    if let Some(seq) = expect_seq {
        if project.seq() != seq {
            bail!("project is at decision {}, expected {seq}", project.seq());
        }
    }
    for (i, action) in actions.into_iter().enumerate() {
        let name = action.name();
        project
            .apply(actor, action)
            .with_context(|| format!("action {} ({name})", i + 1))?;
    }
    lock.write(&project)?;
    Ok(project)
}

fn ingest(cli: &Cli, args: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let incoming: Corpus = match (&args.corpus, &args.sources, &args.criteria) {
        (Some(path), _, _) => prospect_core::corpus::load_corpus(path)?,
        (None, Some(s), Some(c)) => {
            let open = |p: &PathBuf| {
                std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))
            };
            Corpus::from_parts(read_sources_csv(open(s)?)?, read_criteria_csv(open(c)?)?)?
        }
        _ => bail!("give --corpus, or both --sources and --criteria"),
    };
    let existing = if cli.project.exists() {
        load(&cli.project)?.state().corpus.clone()
    } else {
        Corpus::default()
    };
    let mut actions = Vec::new();
    let (mut new_sources, mut new_criteria) = (0, 0);
    for source in incoming.sources.values() {
        match existing.sources.get(&source.id) {
            Some(old) if old == source => {}
            Some(_) => bail!("source {:?} already exists with different content", source.id),
            None => {
                new_sources += 1;
                actions.push(Action::AddSource {
                    source: source.clone(),
                })
            }
        }
    }
    for c in incoming.criteria.values() {
        match existing.criteria.get(&c.id) {
            Some(old) if old.raw_text == c.raw_text && old.source_id == c.source_id => {}
            Some(_) => bail!("criterion {:?} already exists with different content", c.id),
            None => {
                new_criteria += 1;
                actions.push(Action::AddCriterion {
                    id: c.id.clone(),
                    raw_text: c.raw_text.clone(),
                    source_id: c.source_id.clone(),
                    span: c.span,
                })
            }
        }
    }
    let project = commit(&cli.project, &args.actor, None, actions)?;
    let counts = project.state().corpus.counts();
    match cli.format {
        Format::Json => json_line(
            out,
            &serde_json::json!({
                "added_sources": new_sources,
                "added_criteria": new_criteria,
                "sources": counts,
                "criteria": project.state().corpus.criteria.len(),
                "seq": project.seq(),
            }),
        ),
        Format::Text => {
            writeln!(
                out,
                "added {new_sources} sources and {new_criteria} criteria; corpus now has {} sources ({} interviews, {} documents) and {} criteria",
                counts.total,
                counts.interviews,
                counts.documents,
                project.state().corpus.criteria.len()
            )?;
            Ok(())
        }
        Format::Csv => Err(no_csv("ingest")),
    }
}

fn suggest(cli: &Cli, limit: usize, out: &mut dyn Write) -> Result<()> {
    let project = load(&cli.project)?;
    let s = project.state();
    let batch = Matcher::default().suggest(
        &s.ontology,
        &s.corpus,
        &s.suggestions.rejected,
        cli.threshold,
        limit,
    )?;
    match cli.format {
        Format::Json => json_line(out, &batch),
        Format::Csv => Ok(matcher::write_csv(&batch, out)?),
        Format::Text => {
            if batch.is_empty() {
                writeln!(out, "no suggestions at threshold {}", cli.threshold)?;
            }
            for sug in &batch {
                writeln!(
                    out,
                    "{:>3}  {:.3}  {:<28}  {} -> {}",
                    sug.rank, sug.score, sug.id, sug.subject_label, sug.target_label
                )?;
            }
            Ok(())
        }
    }
}

fn read_actions(path: &Path) -> Result<Vec<Action>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1))
        })
        .collect()
}

fn apply(cli: &Cli, args: &ApplyArgs, out: &mut dyn Write) -> Result<()> {
    let actions = match (&args.accept, &args.reject, &args.actions) {
        (Some(id), _, _) => vec![Action::AcceptSuggestion {
            suggestion_id: id.clone(),
        }],
        (_, Some(id), _) => vec![Action::RejectSuggestion {
            suggestion_id: id.clone(),
        }],
        (_, _, Some(path)) => read_actions(path)?,
        _ => bail!("nothing to apply"),
    };
    if !cli.project.exists() {
        bail!("project file {} does not exist", cli.project.display());
    }
    let before = load(&cli.project)?.seq();
    let project = commit(&cli.project, &args.actor, args.expect_seq, actions)?;
    let records = &project.journal()[before as usize..];
    match cli.format {
        Format::Json => json_line(out, &serde_json::json!({ "seq": project.seq(), "records": records })),
        Format::Text => {
            for r in records {
                writeln!(out, "#{} {} by {}", r.seq, r.action.name(), r.actor)?;
            }
            writeln!(out, "journal at decision {}", project.seq())?;
            Ok(())
        }
        Format::Csv => Err(no_csv("apply")),
    }
}

fn stats_row(name: &str, s: &OntologyStats) -> String {
    format!(
        "{name:<9} criteria {:>4}  concepts {:>4}  variables {:>3}  criteria/concept mean {:.4} max {}  variables/concept mean {:.4} max {}",
        s.criteria,
        s.concepts,
        s.variables,
        s.mean_criteria_per_concept,
        s.max_criteria_per_concept,
        s.mean_variables_per_concept,
        s.max_variables_per_concept
    )
}

fn stats(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let project = load(&cli.project)?;
    let s = project.state();
    let godet = godet_stats(&s.corpus, &s.ontology);
    let mychoice = mychoice_stats(&s.mychoice);
    match cli.format {
        Format::Json => json_line(
            out,
            &serde_json::json!({
                "sources": s.corpus.counts(),
                "godet": godet,
                "mychoice": mychoice,
            }),
        ),
        Format::Csv => {
            writeln!(out, "side,criteria,concepts,variables,mean_criteria_per_concept,max_criteria_per_concept,mean_variables_per_concept,max_variables_per_concept")?;
            for (name, st) in [("godet", &godet), ("mychoice", &mychoice)] {
                writeln!(
                    out,
                    "{name},{},{},{},{:.4},{},{:.4},{}",
                    st.criteria,
                    st.concepts,
                    st.variables,
                    st.mean_criteria_per_concept,
                    st.max_criteria_per_concept,
                    st.mean_variables_per_concept,
                    st.max_variables_per_concept
                )?;
            }
            Ok(())
        }
        Format::Text => {
            let c = s.corpus.counts();
            writeln!(
                out,
                "sources   {} ({} interviews, {} documents)",
                c.total, c.interviews, c.documents
            )?;
            writeln!(out, "{}", stats_row("godet", &godet))?;
            writeln!(out, "{}", stats_row("mychoice", &mychoice))?;
            Ok(())
        }
    }
}

fn import_relations(cli: &Cli, file: &Path, actor: &str, out: &mut dyn Write) -> Result<()> {
    let f = std::fs::File::open(file).with_context(|| format!("opening {}", file.display()))?;
    let relations = structural::read_relations_csv(f)?;
    let n = relations.len();
    let actions = relations
        .into_iter()
        .map(|relation| Action::AddRelation { relation })
        .collect();
    let project = commit(&cli.project, actor, None, actions)?;
    match cli.format {
        Format::Json => json_line(
            out,
            &serde_json::json!({ "imported": n, "relations": project.state().relations.len(), "seq": project.seq() }),
        ),
        _ => {
            writeln!(
                out,
                "imported {n} relations; project has {}",
                project.state().relations.len()
            )?;
            Ok(())
        }
    }
}

fn project_scores(cli: &Cli, project: &Project) -> Result<StructuralScores> {
    let m = build_matrix(&project.state().ontology, &project.state().relations)?;
    Ok(micmac(&m, cli.k_max)?)
}

fn run_micmac(cli: &Cli, matrix: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let scores = match matrix {
        Some(path) => {
            let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let m = InfluenceMatrix::read_csv(f, &BTreeMap::new())?;
            micmac(&m, cli.k_max)?
        }
        None => project_scores(cli, &load(&cli.project)?)?,
    };
    match cli.format {
        Format::Json => json_line(out, &scores),
        Format::Csv => Ok(structural::write_scores_csv(&scores, &BTreeSet::new(), out)?),
        Format::Text => {
            writeln!(
                out,
                "k_used {} ({})",
                scores.k_used,
                if scores.converged {
                    "rank order stable"
                } else {
                    "k_max reached before the rank order stabilised"
                }
            )?;
            writeln!(out, "{:<32} {:>12} {:>12}  quadrant", "variable", "influence", "dependence")?;
            for v in &scores.scores {
                writeln!(
                    out,
                    "{:<32} {:>12} {:>12}  {}",
                    v.label, v.influence, v.dependence, v.quadrant
                )?;
            }
            Ok(())
        }
    }
}

fn keys(cli: &Cli, mark: bool, out: &mut dyn Write) -> Result<()> {
    let project = load(&cli.project)?;
    let scores = project_scores(cli, &project)?;
    let keys = key_variables(&scores, cli.n_keys)?;
    if mark {
        commit(
            &cli.project,
            "facilitator",
            Some(project.seq()),
            vec![Action::MarkKeys {
                variable_ids: keys.clone(),
            }],
        )?;
    }
    let ranked: Vec<_> = rank_variables(&scores)
        .into_iter()
        .take(keys.len())
        .collect();
    match cli.format {
        Format::Json => json_line(out, &ranked),
        Format::Csv => {
            writeln!(out, "rank,variable_id,label,influence,dependence,quadrant")?;
            for (i, v) in ranked.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},\"{}\",{},{},{}",
                    i + 1,
                    v.variable_id,
                    v.label.replace('"', "\"\""),
                    v.influence,
                    v.dependence,
                    v.quadrant
                )?;
            }
            Ok(())
        }
        Format::Text => {
            for (i, v) in ranked.iter().enumerate() {
                writeln!(
                    out,
                    "{}. {} ({}): influence {}, dependence {}, {}",
                    i + 1,
                    v.label,
                    v.variable_id,
                    v.influence,
                    v.dependence,
                    v.quadrant
                )?;
            }
            Ok(())
        }
    }
}

fn read_map(project: &Project, path: Option<&Path>) -> Result<AlignmentMap> {
    match path {
        None => Ok(project.state().alignment.clone()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            AlignmentMap::from_json(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn write_json_to(out: &mut dyn Write, path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    match path {
        Some(p) => {
            let mut text = serde_json::to_string_pretty(value)?;
            text.push('\n');
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => json_line(out, value),
    }
}

fn align(cli: &Cli, cmd: &AlignCommand, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let project = load(&cli.project)?;
    let s = project.state();
    match cmd {
        AlignCommand::Report { map } => {
            let map = read_map(&project, map.as_deref())?;
            let report = alignment_report(&s.godet_fragment(), &s.mychoice, &map);
            match cli.format {
                Format::Json => json_line(out, &report),
                Format::Text => Ok(write!(out, "{}", report.render_text())?),
                Format::Csv => Err(no_csv("align report")),
            }
        }
        AlignCommand::ToMychoice { map, out: path } => {
            let map = read_map(&project, map.as_deref())?;
            let (dataset, notes) = godet_to_mychoice(
                &s.godet_fragment(),
                &map,
                &s.mychoice.mcriteria,
                &s.mychoice.alternative,
            )?;
            for (c, v) in &notes.dropped_memberships {
                writeln!(err, "note: concept {c} leaves variable {v}")?;
            }
            if !notes.unassigned_criteria.is_empty() {
                writeln!(
                    err,
                    "note: {} criteria outside any concept were not converted",
                    notes.unassigned_criteria.len()
                )?;
            }
            write_json_to(out, path.as_deref(), &dataset)
        }
        AlignCommand::ToGodet { map, out: path } => {
            let map = read_map(&project, map.as_deref())?;
            let (fragment, _) = mychoice_to_godet(&s.mychoice, &map, &s.ontology.variables)?;
            let value = serde_json::json!({
                "corpus": fragment.corpus.to_document(),
                "ontology": fragment.ontology,
            });
            write_json_to(out, path.as_deref(), &value)
        }
    }
}

fn run_attitude(cli: &Cli, args: &AttitudeArgs, out: &mut dyn Write) -> Result<()> {
    let project = load(&cli.project)?;
    let ds = &project.state().mychoice;
    let alternative = args.alternative.clone().unwrap_or_else(|| ds.alternative.id.clone());
    if args.matrix {
        let table = attitude_matrix(ds, &alternative)?;
        return match cli.format {
            Format::Json => json_line(out, &table),
            _ => Ok(table.write_csv(out)?),
        };
    }
    let stakeholder = args.stakeholder.as_deref().expect("clap requires it");
    let scope: Scope = args.scope.parse()?;
    let a = attitude(ds, stakeholder, &alternative, &scope)?;
    match cli.format {
        Format::Json => json_line(out, &a),
        Format::Csv => {
            writeln!(out, "stakeholder,alternative,scope,value,exact")?;
            writeln!(
                out,
                "{},{},{},{:.4},{}",
                a.stakeholder_id, a.alternative_id, a.scope, a.value, a.exact
            )?;
            Ok(())
        }
        Format::Text => {
            writeln!(
                out,
                "{} toward {} at {}: {:.4} ({})",
                a.stakeholder_id, a.alternative_id, a.scope, a.value, a.exact
            )?;
            Ok(())
        }
    }
}

fn ballots_for(project: &Project, args: &RoundArgs) -> Result<Vec<DelphiBallot>> {
    match &args.ballots {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let ballots: Vec<DelphiBallot> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok(ballots.into_iter().filter(|b| b.round == args.round).collect())
        }
        None => Ok(project.state().delphi.ballots_of_round(args.round)),
    }
}

fn delphi(cli: &Cli, cmd: &DelphiCommand, out: &mut dyn Write) -> Result<()> {
    let project = load(&cli.project)?;
    let k = cli.k.unwrap_or(project.state().delphi.k);
    let questionnaire = generate_questionnaire(&project.state().ontology, k)?;
    match cmd {
        DelphiCommand::Gen => match cli.format {
            Format::Json => json_line(out, &questionnaire),
            Format::Text => Ok(write!(out, "{}", questionnaire.render_text())?),
            Format::Csv => {
                writeln!(out, "variable_id,label,modalities")?;
                for o in &questionnaire.options {
                    writeln!(out, "{},\"{}\",\"{}\"", o.variable_id, o.label, o.modalities.join("; "))?;
                }
                Ok(())
            }
        },
        DelphiCommand::Aggregate(args) => {
            let ballots = ballots_for(&project, args)?;
            let mut tally = aggregate(&questionnaire, &ballots, args.invited)?;
            tally.round = args.round;
            match cli.format {
                Format::Json => json_line(out, &tally),
                Format::Csv => Ok(tally.write_csv(out)?),
                Format::Text => Ok(write!(out, "{}", tally.feedback_sheet())?),
            }
        }
        DelphiCommand::Confirm(args) => {
            let ballots = ballots_for(&project, args)?;
            let tally = aggregate(&questionnaire, &ballots, args.invited)?;
            let scores = project_scores(cli, &project)?;
            let keys = key_variables(&scores, cli.n_keys)?;
            let c = confirm_keys(&tally, &keys)?;
            match cli.format {
                Format::Json => json_line(out, &c),
                Format::Csv => {
                    writeln!(out, "variable_id,status")?;
                    for (list, status) in [
                        (&c.confirmed, "confirmed"),
                        (&c.demotions, "demoted"),
                        (&c.promotions, "promoted"),
                    ] {
                        for v in list {
                            writeln!(out, "{v},{status}")?;
                        }
                    }
                    Ok(())
                }
                Format::Text => {
                    writeln!(out, "confirmed: {}", c.confirmed.join(", "))?;
                    writeln!(out, "demoted:   {}", c.demotions.join(", "))?;
                    writeln!(out, "promoted:  {}", c.promotions.join(", "))?;
                    Ok(())
                }
            }
        }
    }
}

fn journal_export(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let project = load(&cli.project)?;
    match cli.format {
        Format::Csv => {
            writeln!(out, "seq,actor,timestamp,action,payload")?;
            for r in project.journal() {
                let value = serde_json::to_value(&r.action)?;
                let payload = serde_json::to_string(&value["payload"])?;
                let ts = serde_json::to_value(r)?["timestamp"].as_str().unwrap_or_default().to_owned();
                writeln!(
                    out,
                    "{},{},{},{},\"{}\"",
                    r.seq,
                    r.actor,
                    ts,
                    r.action.name(),
                    payload.replace('"', "\"\"")
                )?;
            }
            Ok(())
        }
        _ => {
            for r in project.journal() {
                serde_json::to_writer(&mut *out, r)?;
                writeln!(out)?;
            }
            Ok(())
        }
    }
}

fn matrix_export(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let project = load(&cli.project)?;
    let m = build_matrix(&project.state().ontology, &project.state().relations)?;
    match cli.format {
        Format::Json => json_line(out, &m),
        _ => Ok(m.write_csv(out)?),
    }
}

