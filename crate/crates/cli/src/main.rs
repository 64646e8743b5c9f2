use clap::{Arg, ArgAction, ArgMatches, Command};
use robinspec_cli::config::RunConfig;
use robinspec_cli::params::{specs, CommandName, Kind};
use robinspec_cli::{run, WORKERS_ENV};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

fn common_args(cmd: Command) -> Command {
    cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("flat TOML file of key = value parameters (flags override it)"),
    )
    .arg(
        Arg::new("output")
            .long("output")
            .short('o')
            .value_name("DIR")
            .value_parser(clap::value_parser!(PathBuf))
            .help("output directory [default: robinspec-out/<command>]"),
    )
    .arg(
        Arg::new("seed")
            .long("seed")
            .value_name("N")
            .value_parser(clap::value_parser!(u64))
            .help("seed echoed into every record [default: 0]"),
    )
}

fn subcommand(name: CommandName) -> Command {
    let mut cmd = common_args(Command::new(name.as_str()).about(name.about()));
    for spec in specs(name) {
        let help = match spec.default {
            None => format!("{} (required)", spec.help),
            Some("") => spec.help.to_string(),
            Some(d) => format!("{} [default: {d}]", spec.help),
        };
        let mut arg = Arg::new(spec.key)
            .long(spec.flag())
            .value_name(spec.key.to_uppercase())
            .allow_hyphen_values(true)
            .help(help);
        if let Some(alias) = spec.alias {
            arg = arg.visible_alias(alias);
        }
        if spec.kind == Kind::Flag {
            arg = arg.num_args(0..=1).default_missing_value("true");
        }
        cmd = cmd.arg(arg);
    }
    if name == CommandName::Sweep {
        cmd = cmd
            .arg(
                Arg::new("set")
                    .long("set")
                    .value_name("KEY=VALUE")
                    .action(ArgAction::Append)
                    .help("fixed parameter of the target command; repeatable"),
            )
            .after_help(format!(
                "Cells run concurrently on at most ${WORKERS_ENV} workers. Results go to \
                 <output>/cell-NNNN/ and the aggregate to <output>/sweep.csv."
            ));
    }
    cmd
}

fn cli() -> Command {
    let mut cmd = common_args(
        Command::new("robinspec")
            .version(env!("CARGO_PKG_VERSION"))
            .about("Spectral toolkit for the magnetic Robin Laplacian")
            .after_help("Exit codes: 0 success, 2 invalid configuration, 3 solver or module error."),
    );
    for name in CommandName::ALL {
        cmd = cmd.subcommand(subcommand(name));
    }
    cmd
}

struct Invocation {
    command: Option<CommandName>,
    flags: BTreeMap<String, String>,
    config: Option<PathBuf>,
    output: Option<PathBuf>,
    seed: Option<u64>,
}

fn invocation(matches: &ArgMatches) -> Result<Invocation, String> {
    let mut inv = Invocation {
        command: None,
        flags: BTreeMap::new(),
        config: matches.get_one::<PathBuf>("config").cloned(),
        output: matches.get_one::<PathBuf>("output").cloned(),
        seed: matches.get_one::<u64>("seed").copied(),
    };
    if let Some((name, sub)) = matches.subcommand() {
        let command: CommandName = name.parse().map_err(|e| format!("{e}"))?;
        inv.command = Some(command);
        inv.config = sub.get_one::<PathBuf>("config").cloned().or(inv.config);
        inv.output = sub.get_one::<PathBuf>("output").cloned().or(inv.output);
        inv.seed = sub.get_one::<u64>("seed").copied().or(inv.seed);
        for spec in specs(command) {
            if let Some(v) = sub.get_one::<String>(spec.key) {
                inv.flags.insert(spec.key.to_string(), v.clone());
            }
        }
        if command == CommandName::Sweep {
            for pair in sub.get_many::<String>("set").into_iter().flatten() {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| format!("--set expects KEY=VALUE, got '{pair}'"))?;
                inv.flags.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    Ok(inv)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let config = invocation(&matches).map_err(|m| m.to_string()).and_then(|inv| {
        if inv.command.is_none() && inv.config.is_none() {
            return Err("no command given; see robinspec --help".into());
        }
        RunConfig::from_sources(inv.command, inv.config.as_deref(), inv.flags, inv.output, inv.seed)
            .map_err(|e| e.to_string())
    });
    let config = match config {
        Ok(c) => c,
        Err(message) => {
            eprintln!("robinspec: {message}");
            return ExitCode::from(2);
        }
    };
    let outcome = run(&config);
    match &outcome.record.error {
        Some(e) => eprintln!("robinspec: {}", e.message),
        None => println!(
            "robinspec {}: results in {}",
            config.command,
            config.output.display()
        ),
    }
    ExitCode::from(outcome.exit_code as u8)
}
