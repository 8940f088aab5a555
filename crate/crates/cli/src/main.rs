//! `localframe`: parse filter lists, decide test pages, run the conformance
//! catalog, and analyze crawl logs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use localframe_core::analysis::{analyze, load_logs, mini_list, render_text};
use localframe_core::conformance::render_table;
use localframe_core::filterlist::{load_list, load_resources};
use localframe_core::{
    builtin_catalog, run_profiles, run_test, ActualMatrix, AnalysisContext, AttributionPolicy,
    Catalog, EntityMap, Error, PageSpec, RuleSet, SuffixRules, ToolProfile,
};

const EXIT_CONFORMANCE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "localframe",
    version,
    about = "Local-frame attribution for content blockers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Table)]
    format: Format,

    /// Omit the tool/version header, for golden comparisons.
    #[arg(long, global = true)]
    no_meta: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a filter list and report rule counts.
    Parse {
        #[arg(long)]
        rules: PathBuf,
    },
    /// Run every probe of a test page under one policy.
    Decide {
        /// Page spec (JSON).
        #[arg(long, conflicts_with = "test", required_unless_present = "test")]
        page: Option<PathBuf>,
        /// Catalog test as ID or ID/VARIANT; supplies the page and rules.
        #[arg(long)]
        test: Option<String>,
        /// Filter list; overrides the catalog rules of --test.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Redirect resources (JSON object of name to body).
        #[arg(long)]
        resources: Option<PathBuf>,
        #[arg(long, default_value = "spec-correct")]
        policy: String,
    },
    /// Run the conformance catalog against tool profiles.
    Conformance {
        /// Catalog directory; the built-in catalog by default.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Only profiles whose name, tool, or platform contains this text.
        #[arg(long)]
        profile: Option<String>,
    },
    /// Summarize crawl logs.
    Analyze {
        /// Directory of *.jsonl crawl logs.
        #[arg(long)]
        logs: PathBuf,
        /// Filter list; the built-in 50-rule list by default.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Entity map (JSON); registrable domains stand in when absent.
        #[arg(long)]
        entities: Option<PathBuf>,
        /// Public suffix list; the built-in rules by default.
        #[arg(long)]
        suffixes: Option<PathBuf>,
        #[arg(long, default_value = "spec-correct")]
        policy: String,
    },
}

enum Failure {
    Conformance(String),
    Core(Error),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Conformance(_) => EXIT_CONFORMANCE,
            Failure::Core(e) if e.is_io() => EXIT_IO,
            Failure::Core(_) | Failure::Config(_) => EXIT_CONFIG,
        }
    }
}

#[derive(Serialize)]
struct Meta {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<String>,
}

struct Output {
    format: Format,
    meta: Option<Meta>,
}

impl Output {
    fn emit(&self, json: Value, table: String) -> String {
        match self.format {
            Format::Json => {
                let mut obj = serde_json::Map::new();
                if let Some(m) = &self.meta {
                    obj.insert(
                        "meta".into(),
                        serde_json::to_value(m).expect("meta serializes"),
                    );
                }
                obj.insert("report".into(), json);
                let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
                s.push('\n');
                s
            }
            Format::Table => {
                let mut s = String::new();
                if let Some(m) = &self.meta {
                    let _ = write!(s, "# {} {} {}", m.tool, m.version, m.command);
                    if let Some(p) = &m.policy {
                        let _ = write!(s, " policy={p}");
                    }
                    s.push_str("\n\n");
                }
                s.push_str(&table);
                s
            }
        }
    }
}

fn parse_policy(name: &str) -> Result<AttributionPolicy, Failure> {
    name.parse::<AttributionPolicy>().map_err(Failure::Core)
}

fn read_rules(path: &Path) -> Result<RuleSet, Failure> {
    Ok(load_list(path)?.0)
}

fn columns(rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..rows.first().map_or(0, Vec::len))
        .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (c, w) in r.iter().zip(&widths) {
            let _ = write!(line, "{c:<w$}  ");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn cmd_parse(rules: &Path, out: &Output) -> Result<String, Failure> {
    let (_, report) = load_list(rules)?;
    let c = &report.counts;
    let mut rows = vec![vec!["Category".to_string(), "Rules".to_string()]];
    for (k, v) in [
        ("network", c.network),
        ("cosmetic", c.cosmetic),
        ("scriptlet", c.scriptlet),
        ("comment", c.comment),
        ("unsupported", c.unsupported),
        ("party-modified", report.party_modified),
        ("party-modified lines", report.party_modified_lines),
    ] {
        rows.push(vec![k.to_string(), v.to_string()]);
    }
    let mut table = columns(&rows);
    if !report.unsupported.is_empty() {
        table.push_str("\nUnsupported lines\n");
        for u in &report.unsupported {
            let _ = writeln!(table, "  {}: {} ({})", u.line, u.text, u.reason);
        }
    }
    let json = serde_json::to_value(&report).expect("report serializes");
    Ok(out.emit(json, table))
}

fn matrix_table(m: &ActualMatrix) -> String {
    let mut rows = vec![vec![
        "Frame".to_string(),
        "Probe".to_string(),
        "Value".to_string(),
    ]];
    rows.extend(
        m.cells
            .iter()
            .map(|c| vec![c.frame.clone(), c.probe.clone(), c.value.clone()]),
    );
    columns(&rows)
}

fn cmd_decide(
    page: Option<&Path>,
    test: Option<&str>,
    rules: Option<&Path>,
    resources: Option<&Path>,
    policy: AttributionPolicy,
    out: &Output,
) -> Result<String, Failure> {
    let catalog = builtin_catalog();
    let (page, catalog_rules) = match (page, test) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.display().to_string(),
                source: e,
            })?;
            (PageSpec::from_json(&text)?, String::new())
        }
        (None, Some(t)) => {
            let (id, variant) = t.split_once('/').unwrap_or((t, "default"));
            let entry = catalog
                .entry(id, variant)
                .ok_or_else(|| Failure::Config(format!("no catalog test {t:?}")))?;
            (entry.page.clone(), entry.rules_text.clone())
        }
        (None, None) => {
            return Err(Failure::Config(
                "either --page or --test is required".into(),
            ))
        }
    };
    let rules = match rules {
        Some(p) => read_rules(p)?,
        None => localframe_core::parse_list(&catalog_rules).0,
    };
    let res = match resources {
        Some(p) => load_resources(p)?,
        None => catalog.resources.clone(),
    };
    let rules = rules.with_resources(res);
    let matrix = run_test(&page, &rules, policy)?;
    let json = serde_json::to_value(&matrix).expect("matrix serializes");
    Ok(out.emit(json, matrix_table(&matrix)))
}

fn cmd_conformance(
    catalog: Option<&Path>,
    filter: Option<&str>,
    out: &Output,
) -> Result<String, Failure> {
    let catalog = match catalog {
        Some(dir) => Catalog::load_dir(dir)?,
        None => builtin_catalog(),
    };
    let fallback = ToolProfile::spec_correct("Reference");
    let reference = catalog
        .profiles
        .iter()
        .find(|p| p.reference)
        .unwrap_or(&fallback);
    let mut profiles: Vec<&ToolProfile> = match filter {
        Some(f) => {
            let found = catalog.filter_profiles(f);
            if found.is_empty() {
                return Err(Failure::Config(format!("no profile matches {f:?}")));
            }
            found
        }
        None => catalog.profiles.iter().collect(),
    };
    // The standard-policy run always takes part in the verdict.
    if !profiles.iter().any(|p| p.reference) {
        profiles.insert(0, reference);
    }
    let report = run_profiles(&catalog, &profiles)?;
    let json = serde_json::to_value(&report).expect("report serializes");
    let text = out.emit(json, render_table(&report));
    if report.ok {
        Ok(text)
    } else {
        Err(Failure::Conformance(text))
    }
}

fn cmd_analyze(
    logs: &Path,
    rules: Option<&Path>,
    entities: Option<&Path>,
    suffixes: Option<&Path>,
    policy: AttributionPolicy,
    out: &Output,
) -> Result<String, Failure> {
    let rules = match rules {
        Some(p) => read_rules(p)?,
        None => mini_list(),
    };
    let suffix_rules;
    let mut ctx = AnalysisContext::new(&rules);
    if let Some(p) = suffixes {
        suffix_rules = SuffixRules::load(p)?;
        ctx.suffixes = &suffix_rules;
    }
    if let Some(p) = entities {
        ctx.entities = EntityMap::load(p)?;
    }
    ctx.policy = policy;
    let logs = load_logs(logs)?;
    let report = analyze(&logs, &ctx)?;
    let json = serde_json::to_value(&report).expect("report serializes");
    Ok(out.emit(json, render_text(&report)))
}

fn run(cli: Cli) -> Result<String, Failure> {
    let meta = |command, policy: Option<&AttributionPolicy>| {
        (!cli.no_meta).then(|| Meta {
            tool: "localframe",
            version: env!("CARGO_PKG_VERSION"),
            command,
            policy: policy.map(ToString::to_string),
        })
    };
    let output = |meta| Output {
        format: cli.format,
        meta,
    };
    match &cli.command {
        Command::Parse { rules } => cmd_parse(rules, &output(meta("parse", None))),
        Command::Decide {
            page,
            test,
            rules,
            resources,
            policy,
        } => {
            let policy = parse_policy(policy)?;
            cmd_decide(
                page.as_deref(),
                test.as_deref(),
                rules.as_deref(),
                resources.as_deref(),
                policy,
                &output(meta("decide", Some(&policy))),
            )
        }
        Command::Conformance { catalog, profile } => cmd_conformance(
            catalog.as_deref(),
            profile.as_deref(),
            &output(meta("conformance", None)),
        ),
        Command::Analyze {
            logs,
            rules,
            entities,
            suffixes,
            policy,
        } => {
            let policy = parse_policy(policy)?;
            cmd_analyze(
                logs,
                rules.as_deref(),
                entities.as_deref(),
                suffixes.as_deref(),
                policy,
                &output(meta("analyze", Some(&policy))),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            let code = f.code();
            match f {
                Failure::Conformance(text) => print!("{text}"),
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Config(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(code)
        }
    }
}
