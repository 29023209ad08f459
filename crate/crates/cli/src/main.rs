//! Command-line front end: resolves a run config, dispatches to the
//! library and writes artifacts plus a manifest.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use serde_json::{json, Map, Value};

use commands::{run, SPECS};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<alloclab::Error> for CliError {
    fn from(e: alloclab::Error) -> Self {
        match e {
            alloclab::Error::InvalidInput(_) | alloclab::Error::NotApplicable(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn cli() -> Command {
    let common = [
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("JSON config file or manifest"),
        Arg::new("out")
            .long("out")
            .value_name("DIR")
            .default_value("out")
            .help("output directory"),
        Arg::new("workers")
            .long("workers")
            .value_name("N")
            .value_parser(clap::value_parser!(usize))
            .help("worker threads"),
    ];
    let mut app = Command::new("alloclab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Stable allocations of space to random centers")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in SPECS {
        let mut sub = Command::new(spec.name)
            .about(spec.about)
            .args(common.clone());
        for &(key, help) in spec.keys {
            sub = sub.arg(
                Arg::new(key)
                    .long(key)
                    .value_name("VALUE")
                    .help(help)
                    .action(ArgAction::Set),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

fn execute(name: &str, m: &ArgMatches) -> Result<(), CliError> {
    let spec = SPECS
        .iter()
        .find(|s| s.name == name)
        .expect("registered command");
    if let Some(&n) = m.get_one::<usize>("workers") {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let file = match m.get_one::<String>("config") {
        Some(path) => config::read_file(path.as_ref(), name)?,
        None => Map::new(),
    };
    let mut flags = Map::new();
    for &(key, _) in spec.keys {
        if let Some(raw) = m.get_one::<String>(key) {
            flags.insert(key.to_string(), config::parse_flag(raw));
        }
    }
    let Value::Object(defaults) = (spec.defaults)() else {
        unreachable!("defaults are objects")
    };
    let params = config::resolve(defaults, config::seed_from_env()?, file, flags);

    let dir = PathBuf::from(m.get_one::<String>("out").expect("has default"));
    std::fs::create_dir_all(&dir).map_err(|e| {
        CliError::Runtime(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    log::info!("running {name}");
    let artifacts = run(name, &params, &dir)?;
    let manifest = json!({
        "tool": "alloclab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "parameters": artifacts.parameters,
        "artifacts": artifacts.files,
    });
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    let path = dir.join("manifest.json");
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    log::info!(
        "wrote {} artifacts to {}",
        artifacts.files.len() + 1,
        dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match execute(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_table_is_consistent() {
        cli().debug_assert();
        for spec in SPECS {
            let Value::Object(d) = (spec.defaults)() else {
                panic!("{} defaults", spec.name)
            };
            for key in d.keys() {
                assert!(
                    spec.keys.iter().any(|k| k.0 == key),
                    "{}: default for unknown key {key}",
                    spec.name
                );
            }
        }
    }
}
