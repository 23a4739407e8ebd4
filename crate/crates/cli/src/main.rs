mod repl;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atcg_core::bridge::TreeDto;
use atcg_core::codegen::TemplateRegistry;
use atcg_core::expr::Binding;
use atcg_core::ingest::parse_design_model;
use atcg_core::model::validate_model;
use atcg_core::netgen::{compile_model, NetgenOptions};
use atcg_core::petri::{compile_net, reach_graph, test_tree, Bounds, PrTNet, TestTree, VertexKind};
use atcg_core::pipeline::{load_net, LoadError};
use atcg_core::pnml::{read_pnml, write_pnml};
use atcg_core::sim::SimSession;
use atcg_core::testgen::{format_model_tests, format_traces, scenarios};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "atcg",
    version,
    about = "Design models to Petri nets, test scenarios and test scripts"
)]
struct Cli {
    #[command(flatten)]
    bounds: BoundsArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BoundsArgs {
    /// Exploration depth bound.
    #[arg(long, global = true, default_value_t = Bounds::default().max_depth)]
    max_depth: usize,
    /// Exploration state bound.
    #[arg(long, global = true, default_value_t = Bounds::default().max_states)]
    max_states: usize,
    /// Back-iterations allowed per loop fragment when compiling a model.
    #[arg(long, global = true)]
    loop_unroll: Option<u32>,
}

impl BoundsArgs {
    fn bounds(&self) -> Bounds {
        Bounds {
            max_depth: self.max_depth,
            max_states: self.max_states,
            loop_unroll: self.loop_unroll,
        }
    }

    fn netgen(&self) -> NetgenOptions {
        NetgenOptions {
            loop_unroll: self.loop_unroll,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a design model.
    Validate { model: PathBuf },
    /// Compile a design model into a net file.
    Build {
        model: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a net file.
    Compile { net: PathBuf },
    /// Print the reachability graph.
    Reach { net: PathBuf },
    /// Print the round-trip test tree.
    Tree {
        net: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print model-level tests.
    Tests {
        net: PathBuf,
        /// Every scenario, not only maximal ones.
        #[arg(long)]
        all: bool,
        /// Print state traces instead of calls.
        #[arg(long)]
        traces: bool,
    },
    /// Render a test script.
    Code {
        net: PathBuf,
        #[arg(long, default_value = "fixture-style")]
        template: String,
        /// Extra `<id>.<ext>.tmpl` files.
        #[arg(long)]
        template_dir: Option<PathBuf>,
        /// Output file, or a directory to receive `<net>Tester_RT.<ext>`.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        all: bool,
    },
    /// Play the token game interactively.
    Simulate {
        #[arg(required_unless_present = "connect")]
        net: Option<PathBuf>,
        /// Drive a running `serve` instance instead of a local session.
        #[arg(long)]
        connect: Option<String>,
    },
    /// Serve the simulation bridge on localhost.
    Serve {
        net: PathBuf,
        /// Overridden by ATCG_PORT.
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

/// Exit codes.
const USAGE: u8 = 1;
const PARSE: u8 = 2;
const INVALID: u8 = 3;
const BOUNDS: u8 = 4;

struct Failure(u8, String);

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure(PARSE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure(PARSE, format!("{}: {e}", path.display())))
}

fn load(path: &Path, opts: NetgenOptions) -> Result<PrTNet, Failure> {
    load_net(&read(path)?, opts).map_err(|e: LoadError| {
        let code = if e.is_parse() { PARSE } else { INVALID };
        Failure(code, format!("{}: {e}", path.display()))
    })
}

fn binding_text(b: &Binding) -> String {
    if b.is_empty() {
        return String::new();
    }
    let items: Vec<String> = b.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(" {{{}}}", items.join(", "))
}

fn tree_text(tree: &TestTree, sim: &SimSession) -> String {
    let mut out = String::new();
    for vx in &tree.vertices {
        let indent = "  ".repeat(vx.depth);
        let kind = match vx.kind {
            VertexKind::Interior => "",
            VertexKind::RoundTrip => " (round-trip)",
            VertexKind::Dead => " (dead)",
            VertexKind::DepthLimit => " (depth-limit)",
        };
        match &vx.firing {
            None => {
                let _ = writeln!(out, "m{} {}{kind}", vx.state, vx.marking);
            }
            Some((t, b)) => {
                let _ = writeln!(out, "{indent}{t} {} -> m{}{kind}", sim.call_text(t, b), vx.state);
            }
        }
    }
    out
}

fn bounded(truncated: bool) -> u8 {
    if truncated {
        eprintln!("warning: exploration bounds reached; output is partial");
        BOUNDS
    } else {
        0
    }
}

fn run(cli: Cli) -> Outcome {
    let opts = cli.bounds.netgen();
    let bounds = cli.bounds.bounds();
    match cli.command {
        Command::Validate { model } => {
            let m =
                parse_design_model(&read(&model)?).map_err(|e| Failure(PARSE, format!("{}: {e}", model.display())))?;
            let report = validate_model(&m.classes, &m.sequence);
            eprint!("{report}");
            if report.is_clean() {
                println!("{}: valid ({} warnings)", model.display(), report.warnings.len());
                Ok(0)
            } else {
                Ok(INVALID)
            }
        }
        Command::Build { model, output } => {
            let m =
                parse_design_model(&read(&model)?).map_err(|e| Failure(PARSE, format!("{}: {e}", model.display())))?;
            let net = compile_model(&m, opts).map_err(|e| Failure(INVALID, e.to_string()))?;
            write(&output, &write_pnml(&net))?;
            Ok(0)
        }
        Command::Compile { net } => {
            let n = read_pnml(&read(&net)?).map_err(|e| Failure(PARSE, format!("{}: {e}", net.display())))?;
            let report = compile_net(&n);
            eprint!("{report}");
            if !report.is_clean() {
                return Ok(INVALID);
            }
            println!(
                "{}: {} places, {} transitions, {} arcs",
                n.id,
                n.places.len(),
                n.transitions.len(),
                n.arcs.len()
            );
            Ok(0)
        }
        Command::Reach { net } => {
            let n = load(&net, opts)?;
            let g = reach_graph(&n, &bounds);
            println!("states: {}", g.states.len());
            for (i, m) in g.states.iter().enumerate() {
                println!("m{i} {m}");
            }
            println!("edges: {}", g.edges.len());
            for e in &g.edges {
                println!("m{} -{}-> m{}{}", e.from, e.transition, e.to, binding_text(&e.binding));
            }
            Ok(bounded(g.truncated))
        }
        Command::Tree { net, json } => {
            let n = load(&net, opts)?;
            let tree = test_tree(&n, &bounds);
            if json {
                let dto = TreeDto::from_tree(&tree, &n);
                println!("{}", serde_json::to_string_pretty(&dto).expect("tree serializes"));
            } else {
                print!("{}", tree_text(&tree, &SimSession::new(n.clone())));
            }
            Ok(bounded(tree.truncated))
        }
        Command::Tests { net, all, traces } => {
            let n = load(&net, opts)?;
            let tree = test_tree(&n, &bounds);
            let suite = scenarios(&tree, &n);
            if traces {
                print!("{}", format_traces(&suite, !all));
            } else {
                print!("{}", format_model_tests(&suite, !all));
            }
            Ok(bounded(tree.truncated))
        }
        Command::Code {
            net,
            template,
            template_dir,
            output,
            all,
        } => {
            let n = load(&net, opts)?;
            let mut registry = TemplateRegistry::default();
            if let Some(dir) = template_dir {
                registry.load_dir(&dir).map_err(|e| Failure(PARSE, e.to_string()))?;
            }
            let tree = test_tree(&n, &bounds);
            let mut suite = scenarios(&tree, &n);
            if !all {
                suite = suite.maximal_suite();
            }
            let script = registry.render(&suite, &template).map_err(|e| {
                let known: Vec<&str> = registry.ids().collect();
                Failure(USAGE, format!("{e} (known: {})", known.join(", ")))
            })?;
            let path = if output.is_dir() {
                output.join(&script.file_name)
            } else {
                output
            };
            write(&path, script.body.as_bytes())?;
            println!("{}", path.display());
            Ok(bounded(tree.truncated))
        }
        Command::Simulate { net, connect } => {
            let stdin = std::io::stdin();
            let mut stdout = std::io::stdout();
            let result = match connect {
                Some(url) => {
                    let mut backend = repl::Remote::new(&url).map_err(|e| Failure(PARSE, e.to_string()))?;
                    repl::run(&mut backend, stdin.lock(), &mut stdout)
                }
                None => {
                    let net = net.expect("clap requires a net without --connect");
                    let mut session = SimSession::new(load(&net, opts)?);
                    repl::run(&mut session, stdin.lock(), &mut stdout)
                }
            };
            result.map_err(|e| Failure(PARSE, e.to_string()))?;
            Ok(0)
        }
        Command::Serve { net, port } => {
            let n = load(&net, opts)?;
            let port = match std::env::var("ATCG_PORT") {
                Ok(v) => v
                    .parse()
                    .map_err(|_| Failure(USAGE, format!("ATCG_PORT `{v}` is not a port number")))?,
                Err(_) => port,
            };
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .init();
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure(PARSE, e.to_string()))?;
            rt.block_on(async {
                let listener = atcg_server::bind(port).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                atcg_server::serve(listener, n, bounds).await
            })
            .map_err(|e| Failure(PARSE, e.to_string()))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
