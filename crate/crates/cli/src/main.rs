use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use decorator_engine::lint::{exit_code, lint_message, split_messages};
use decorator_engine::meta::{self, export, ExportFormat};
use decorator_engine::scope::clear_with_report;
use decorator_engine::{
    DecoratorDefinition, Engine, ParseMode, Registry, SessionState, SystemClock,
};
use decorator_gateway::GatewayConfig;

#[derive(Parser)]
#[command(
    name = "decorators",
    version,
    about = "Compile, lint and serve +++Name(params) prompt decorators"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Reject malformed decorator lines (default)
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,
    /// Treat malformed decorator lines as body text, with a warning
    #[arg(long, global = true)]
    lenient: bool,
    /// Gateway config file; its extensions and parse mode apply to every command
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compile one message and print the directive block, `---`, then the body
    Expand {
        /// Message file; standard input when omitted
        file: Option<PathBuf>,
        /// Session file to load and update
        #[arg(long)]
        session: Option<PathBuf>,
        /// Do not write the session file back
        #[arg(long)]
        dry_run: bool,
    },
    /// Check message files for unknown decorators, schema errors and conflicts
    Lint {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Files hold several messages separated by lines containing `===`
        #[arg(long)]
        split: bool,
    },
    /// Inspect the decorator catalog
    Registry {
        #[command(subcommand)]
        command: RegistryCommand,
    },
    /// Inspect or reset a session file
    Session {
        #[command(subcommand)]
        command: SessionCommand,
    },
    /// Export a session transcript
    Export {
        #[arg(long)]
        session: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Write to a file instead of standard output
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP gateway until interrupted (requires --config)
    Serve,
}

#[derive(Subcommand)]
enum RegistryCommand {
    /// Print the catalog table
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum SessionCommand {
    /// Print the chat scope and turn count
    Show { path: PathBuf },
    /// Remove every chat-scope decorator
    Clear { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Markdown,
    Json,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ExportFormat::Text,
            Format::Markdown => ExportFormat::Markdown,
            Format::Json => ExportFormat::Json,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

struct Setup {
    engine: Engine,
    config: Option<GatewayConfig>,
}

fn context(global: &Global) -> Result<Setup> {
    let config = match &global.config {
        Some(path) => Some(GatewayConfig::load(path)?),
        None => None,
    };
    let registry = match &config {
        Some(c) => c.registry()?,
        None => Registry::builtin(),
    };
    let mode = if global.lenient {
        ParseMode::Lenient
    } else if global.strict {
        ParseMode::Strict
    } else {
        config.as_ref().map_or(ParseMode::Strict, |c| c.parse_mode)
    };
    Ok(Setup {
        engine: Engine::new(registry, mode),
        config,
    })
}

fn run(cli: Cli) -> Result<u8> {
    let ctx = context(&cli.global)?;
    match cli.command {
        Command::Expand {
            file,
            session,
            dry_run,
        } => expand(&ctx.engine, file.as_deref(), session.as_deref(), dry_run),
        Command::Lint { paths, split } => lint(&ctx.engine, &paths, split),
        Command::Registry {
            command: RegistryCommand::List { json },
        } => {
            let registry = ctx.engine.registry();
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(
                        &registry
                            .catalog()
                            .iter()
                            .map(AsRef::as_ref)
                            .collect::<Vec<&DecoratorDefinition>>()
                    )?
                );
            } else {
                println!(
                    "{}",
                    meta::available_decs(&SessionState::default(), registry)
                );
            }
            Ok(0)
        }
        Command::Session { command } => match command {
            SessionCommand::Show { path } => {
                let state = load_session(&ctx.engine, &path, false)?;
                println!("{}", meta::active_decs(&state));
                eprintln!(
                    "session {}: {} turn(s)",
                    state.session_id, state.turn_counter
                );
                Ok(0)
            }
            SessionCommand::Clear { path } => {
                let state = load_session(&ctx.engine, &path, false)?;
                let (cleared, report) = clear_with_report(&state, &[]);
                save_session(&path, &cleared)?;
                if report.removed.is_empty() {
                    println!("Chat scope was already empty.");
                } else {
                    println!(
                        "Cleared all active decorators: {}.",
                        report.removed.join(", ")
                    );
                }
                Ok(0)
            }
        },
        Command::Export {
            session,
            format,
            output,
        } => {
            let state = match &session {
                Some(path) => load_session(&ctx.engine, path, false)?,
                None => SessionState::default(),
            };
            let doc = export(&state, format.into(), &SystemClock);
            match output {
                Some(path) => std::fs::write(&path, doc.content + "\n")
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{}", doc.content),
            }
            Ok(0)
        }
        Command::Serve => {
            let Some(config) = ctx.config else {
                bail!("serve needs --config <path>");
            };
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .init();
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(decorator_gateway::serve(&config))?;
            Ok(0)
        }
    }
}

fn read_input(file: Option<&Path>) -> Result<String> {
    match file {
        Some(path) => {
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
        }
        None => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text)?;
            Ok(text)
        }
    }
}

/// Loads a session file; a missing file is a fresh session when `create` is set.
fn load_session(engine: &Engine, path: &Path, create: bool) -> Result<SessionState> {
    if create && !path.exists() {
        let id = path
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        return Ok(SessionState::new(id));
    }
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SessionState::from_json(&text, engine.registry())
        .with_context(|| format!("loading session {}", path.display()))
}

fn save_session(path: &Path, state: &SessionState) -> Result<()> {
    std::fs::write(path, state.to_json() + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn expand(
    engine: &Engine,
    file: Option<&Path>,
    session: Option<&Path>,
    dry_run: bool,
) -> Result<u8> {
    let text = read_input(file)?;
    let state = match session {
        Some(path) => load_session(engine, path, true)?,
        None => SessionState::default(),
    };
    let (next, prompt) = match engine.compile_turn(&state, &text) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
    };
    for w in &prompt.warnings {
        eprintln!("warning: {w}");
    }
    for m in &prompt.meta_outputs {
        for line in m.text.lines() {
            eprintln!("[meta] {line}");
        }
    }
    let mut stdout = std::io::stdout().lock();
    if !prompt.directive_block.is_empty() {
        writeln!(stdout, "{}", prompt.directive_block.rendered)?;
    }
    writeln!(stdout, "---")?;
    if !prompt.body.is_empty() {
        write!(stdout, "{}", prompt.body)?;
        if !prompt.body.ends_with('\n') {
            writeln!(stdout)?;
        }
    }
    if let (Some(path), false) = (session, dry_run) {
        save_session(path, &next)?;
    }
    Ok(0)
}

fn lint(engine: &Engine, paths: &[PathBuf], split: bool) -> Result<u8> {
    let mut all = Vec::new();
    for path in paths {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let parts = if split {
            split_messages(&text)
        } else {
            vec![decorator_engine::lint::MessageSlice {
                first_line: 0,
                text: &text,
            }]
        };
        for part in parts {
            for d in lint_message(engine.registry(), part.text, engine.mode()) {
                eprintln!(
                    "{}:{}: {}[{}]: {}",
                    path.display(),
                    part.first_line + d.line,
                    d.severity.as_str(),
                    d.code,
                    d.message
                );
                all.push(d);
            }
        }
    }
    Ok(exit_code(&all) as u8)
}
