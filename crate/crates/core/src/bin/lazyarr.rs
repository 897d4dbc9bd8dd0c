use std::fs::OpenOptions;
use std::io::{self, IsTerminal, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lazyarr::bench::{results_match, run_benchmark, BenchOptions, Benchmark};
use lazyarr::report::{load_reports, render_table};
use lazyarr::repl::Repl;
use lazyarr::server::{serve, ArrayServer, ServerConfig, DEFAULT_ELEMENT_BUDGET};
use lazyarr::{Client, ClientConfig, Error};

#[derive(Parser)]
#[command(name = "lazyarr", version, about = "Array server, optimizing client and graph benchmarks")]
struct Cli {
    #[arg(long, global = true, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, global = true, default_value_t = 5555)]
    port: u16,
    /// Default seed for generated inputs and unseeded randint calls.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the array server until interrupted or told to shut down.
    Serve {
        #[arg(long, default_value_t = DEFAULT_ELEMENT_BUDGET)]
        element_budget: usize,
        #[arg(long, default_value = "info")]
        log_level: String,
    },
    /// Run one benchmark and print its report as a JSON line.
    Bench {
        #[arg(value_parser = parse_benchmark)]
        benchmark: Benchmark,
        /// kn:N, path:N, star:N, gnp:N:P:SEED, rand:N:LO:HI:SEED or a .mtx file.
        #[arg(long)]
        input: String,
        #[command(flatten)]
        client: ClientArgs,
        /// Also run the other mode and require equal results.
        #[arg(long)]
        check_pair: bool,
        /// Source vertex for bc.
        #[arg(long, default_value_t = 0)]
        source: usize,
        /// Append the report to this file as well.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Read statements from stdin and evaluate them against a server.
    Repl {
        #[command(flatten)]
        client: ClientArgs,
    },
    /// Tabulate saved reports, or show live server counters with no files.
    Report { paths: Vec<PathBuf> },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Base,
    Opt,
}

#[derive(Args)]
struct ClientArgs {
    #[arg(long, value_enum, default_value = "opt")]
    mode: Mode,
    /// Use a server inside this process instead of connecting.
    #[arg(long)]
    embedded: bool,
    #[arg(long, overrides_with = "no_lazy")]
    lazy: bool,
    #[arg(long)]
    no_lazy: bool,
    #[arg(long, overrides_with = "no_dead_elim")]
    dead_elim: bool,
    #[arg(long)]
    no_dead_elim: bool,
    #[arg(long, overrides_with = "no_store_reuse")]
    store_reuse: bool,
    #[arg(long)]
    no_store_reuse: bool,
    #[arg(long, overrides_with = "no_array_cache")]
    array_cache: bool,
    #[arg(long)]
    no_array_cache: bool,
    #[arg(long, overrides_with = "no_cse")]
    cse: bool,
    #[arg(long)]
    no_cse: bool,
    #[arg(long, overrides_with = "no_reduce_memo")]
    reduce_memo: bool,
    #[arg(long)]
    no_reduce_memo: bool,
    #[arg(long)]
    buffer_cap: Option<usize>,
}

impl ClientArgs {
    fn config(&self, mode: Mode) -> ClientConfig {
        let mut c = match mode {
            Mode::Base => ClientConfig::baseline(),
            Mode::Opt => ClientConfig::optimized(),
        }
        .with_env();
        let flags = [
            ("lazy", self.lazy, self.no_lazy),
            ("dead_elim", self.dead_elim, self.no_dead_elim),
            ("store_reuse", self.store_reuse, self.no_store_reuse),
            ("array_cache", self.array_cache, self.no_array_cache),
            ("cse", self.cse, self.no_cse),
            ("reduce_memo", self.reduce_memo, self.no_reduce_memo),
        ];
        for (name, on, off) in flags {
            if on {
                c.set_flag(name, true);
            } else if off {
                c.set_flag(name, false);
            }
        }
        if let Some(cap) = self.buffer_cap {
            c.buffer_cap = cap;
        }
        c
    }
}

fn parse_benchmark(s: &str) -> Result<Benchmark, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Verification(String),
    Usage(String),
    Connection(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Connection(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

struct Connector {
    host: String,
    port: u16,
    embedded: Option<Arc<ArrayServer>>,
}

impl Connector {
    fn new(cli: &Cli, embedded: bool) -> Connector {
        Connector {
            host: cli.host.clone(),
            port: cli.port,
            embedded: embedded.then(|| ArrayServer::new(ServerConfig::default())),
        }
    }

    fn connect(&self, config: ClientConfig) -> Result<Client, Failure> {
        match &self.embedded {
            Some(server) => Ok(Client::local(server, config)?),
            None => Client::connect((self.host.as_str(), self.port), config).map_err(|e| {
                Failure::Connection(format!("cannot reach {}:{}: {e}", self.host, self.port))
            }),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Cmd::Serve { element_budget, log_level } => {
            env_logger::Builder::new().parse_filters(log_level).init();
            let listener = TcpListener::bind((cli.host.as_str(), cli.port))
                .map_err(|e| Failure::Usage(format!("cannot bind {}:{}: {e}", cli.host, cli.port)))?;
            let server = ArrayServer::new(ServerConfig { element_budget: *element_budget });
            let stop = Arc::clone(&server);
            ctrlc::set_handler(move || stop.request_shutdown())
                .map_err(|e| Failure::Usage(format!("cannot install signal handler: {e}")))?;
            eprintln!("listening on {}", listener.local_addr()?);
            serve(listener, server)?;
            Ok(())
        }
        Cmd::Bench { benchmark, input, client, check_pair, source, output } => {
            let connector = Connector::new(&cli, client.embedded);
            let options = BenchOptions { source: *source, seed: cli.seed, ..BenchOptions::default() };
            let mut c = connector.connect(client.config(client.mode))?;
            let mut report = run_benchmark(&mut c, *benchmark, input, &options)?;
            if *check_pair {
                let other = match client.mode {
                    Mode::Base => Mode::Opt,
                    Mode::Opt => Mode::Base,
                };
                let mut paired = connector.connect(client.config(other))?;
                let twin = run_benchmark(&mut paired, *benchmark, input, &options)?;
                report.pair_match = Some(results_match(&report.result, &twin.result, 1e-12));
            }
            let line = report.to_json();
            println!("{line}");
            if let Some(path) = output {
                let mut f = OpenOptions::new().create(true).append(true).open(path)?;
                writeln!(f, "{line}")?;
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verification(format!(
                    "{benchmark} on {input}: verified={:?} pair_match={:?}",
                    report.verified, report.pair_match
                )))
            }
        }
        Cmd::Repl { client } => {
            let connector = Connector::new(&cli, client.embedded);
            let c = connector.connect(client.config(client.mode))?;
            let mut repl = Repl::new(c, cli.seed);
            let stdin = io::stdin();
            let prompt = stdin.is_terminal();
            repl.run(stdin.lock(), io::stdout().lock(), prompt)?;
            repl.close()?;
            Ok(())
        }
        Cmd::Report { paths } if paths.is_empty() => {
            let connector = Connector::new(&cli, false);
            let mut c = connector.connect(ClientConfig::baseline())?;
            let mut server = c.client_metrics()?.server.expect("stats reply");
            // leave out this probe's own connect and stats requests
            server.messages_handled = server.messages_handled.saturating_sub(2);
            println!("{}", serde_json::to_string_pretty(&server).expect("metrics serialize"));
            Ok(())
        }
        Cmd::Report { paths } => {
            let mut reports = Vec::new();
            for p in paths {
                reports.extend(load_reports(p)?);
            }
            print!("{}", render_table(&reports));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Connection(msg)) => {
            eprintln!("connection error: {msg}");
            ExitCode::from(3)
        }
    }
}
