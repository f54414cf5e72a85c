use ballistic_cli::commands;
use ballistic_cli::output::{self, Entry};
use ballistic_cli::{CliError, Layers, RunConfig};
use clap::Parser;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Simulation and checks for diffusions in random environments.
///
/// `ballistic <command> [stage]` runs one stage and writes the resolved
/// config, a JSON report and CSV tables to `<out>/<config hash>/`.
/// Commands: env, sde, criterion, oned, green, example.
/// `ballistic registry` lists earlier runs, `ballistic rerun <hash>`
/// recomputes one and compares its report byte for byte, and
/// `ballistic config <command> [stage]` prints the resolved config.
#[derive(Parser, Debug)]
#[command(name = "ballistic", version)]
struct Args {
    /// Command, or one of registry, rerun, config.
    command: String,
    /// Stage of the command, or the hash for rerun.
    rest: Vec<String>,
    /// Config file in `[section]` / `key = value` form.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Directory holding one subdirectory per run.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Override any config key, as `section.key=value`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    c3: Option<String>,
    #[arg(long)]
    c7: Option<String>,
    #[arg(long)]
    c12: Option<String>,
    #[arg(long)]
    c20: Option<String>,
}

fn layers(args: &Args, command: &str, stage: Option<&str>) -> Result<Layers, CliError> {
    let mut l = Layers::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        l.read_text(&text)?;
    }
    l.read_env(std::env::vars())?;
    l.set("run", "command", command)?;
    if let Some(s) = stage {
        l.set("run", "stage", s)?;
    }
    if let Some(s) = args.seed {
        l.set("run", "seed", &s.to_string())?;
    }
    if let Some(w) = args.workers {
        l.set("run", "workers", &w.to_string())?;
    }
    for s in &args.sets {
        l.read_assignment(s)?;
    }
    let flags = [("kappa", &args.kappa), ("c3", &args.c3), ("c7", &args.c7), ("c12", &args.c12), ("c20", &args.c20)];
    for (key, v) in flags {
        if let Some(v) = v {
            l.set("constants", key, v)?;
        }
    }
    Ok(l)
}

fn resolve(args: &Args, command: &str, rest: &[String]) -> Result<RunConfig, CliError> {
    if rest.len() > 1 {
        return Err(CliError::invalid(format!("unexpected arguments: {}", rest[1..].join(" "))));
    }
    layers(args, command, rest.first().map(String::as_str))?.resolve()
}

fn run(args: &Args) -> Result<(), CliError> {
    match args.command.as_str() {
        "registry" => {
            for e in output::registry(&args.out)? {
                say(&output::format_entry(&e));
            }
            Ok(())
        }
        "rerun" => {
            let [hash] = args.rest.as_slice() else {
                return Err(CliError::invalid("rerun takes exactly one config hash"));
            };
            rerun(&args.out, hash, args.workers)
        }
        "config" => {
            let (command, rest) = args.rest.split_first().ok_or_else(|| CliError::invalid("config needs a command"))?;
            say(resolve(args, command, rest)?.render().trim_end());
            Ok(())
        }
        _ => {
            let cfg = resolve(args, &args.command, &args.rest)?;
            let out = commands::run(&cfg)?;
            let dir = output::write_run(&args.out, &cfg, &out)?;
            say(&dir.display().to_string());
            for (k, v) in &out.headline {
                say(&format!("  {k} = {v}"));
            }
            Ok(())
        }
    }
}

fn rerun(root: &Path, hash: &str, workers: Option<usize>) -> Result<(), CliError> {
    let dir = root.join(hash);
    let text = fs::read_to_string(dir.join(output::CONFIG_FILE)).map_err(|e| CliError::invalid(format!("{}: {e}", dir.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if output::config_hash(&cfg) != hash {
        return Err(CliError::other(format!("{hash}: stored config hashes to {}", output::config_hash(&cfg))));
    }
    let stored = fs::read_to_string(dir.join(output::REPORT_FILE)).map_err(|e| CliError::other(format!("{}: {e}", dir.display())))?;
    let out = commands::run(&cfg)?;
    let fresh = output::report_json(&cfg, hash, &out);
    if fresh == stored {
        say(&format!("{hash}: report reproduced exactly"));
        for e in output::registry(root)? {
            if matches!(&e, Entry::Run { hash: h, .. } if h == hash) {
                say(&output::format_entry(&e));
            }
        }
        Ok(())
    } else {
        Err(CliError::other(format!("{hash}: recomputed report differs from the stored one")))
    }
}

/// Prints a line; a closed pipe (`| head`) is not an error.
fn say(line: &str) {
    let _ = writeln!(io::stdout().lock(), "{line}");
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
