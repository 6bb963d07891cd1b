use std::fs;
use std::path::Path;

use anyhow::Context;
use drivegym::bench::{benchmark, episode_seeds, mae_per_step, run_episode, run_episode_with, TrajectoryRecord};
use drivegym::control::{Controller, Hysteresis, PiCascade, Scripted};
use drivegym::converter::{Action, ActionSpace};
use drivegym::env::{EnvConfig, Environment};
use serde_json::{json, Value};

use crate::args::{BenchArgs, Cli, Command, ControllerArgs, ControllerKind, EnvArgs, ExportArgs, ExportKind, PlotArgs, RunArgs};
use crate::{plot, refcsv, CliError};

type Result<T> = std::result::Result<T, CliError>;

/// Runs the parsed command; progress goes to the log, results to stdout or `--out`.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Export(a) => export(a),
        Command::Plot(a) => plot_cmd(a),
    }
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Runtime(e.into())
}

fn load_config(args: &EnvArgs) -> Result<EnvConfig> {
    match (&args.config, &args.id) {
        (Some(path), id) => {
            let cfg = EnvConfig::from_path(path).map_err(|e| CliError::Config(e.into()))?;
            if let Some(id) = id {
                if *id != cfg.id() {
                    return Err(CliError::config(format!("--id {id} disagrees with {} ({})", path.display(), cfg.id())));
                }
            }
            Ok(cfg)
        }
        (None, Some(id)) => Ok(EnvConfig::from_id(id)?),
        (None, None) => Err(CliError::config("either --config or --id is required")),
    }
}

/// Parses a JSON array of actions. Discrete entries are integers; continuous
/// entries are arrays of duty cycles, or a bare number for one channel.
pub(crate) fn parse_actions(text: &str, space: &ActionSpace) -> anyhow::Result<Vec<Action>> {
    let values: Vec<Value> = serde_json::from_str(text).context("actions must be a JSON array")?;
    values
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let action = match (space, v) {
                (ActionSpace::Discrete { .. }, Value::Number(n)) => {
                    n.as_u64().map(|c| Action::Discrete(c as usize))
                }
                (ActionSpace::Continuous { .. }, Value::Number(n)) => n.as_f64().map(|x| Action::Continuous(vec![x])),
                (ActionSpace::Continuous { .. }, Value::Array(xs)) => {
                    xs.iter().map(Value::as_f64).collect::<Option<Vec<_>>>().map(Action::Continuous)
                }
                _ => None,
            };
            action.ok_or_else(|| anyhow::anyhow!("action {t} ({v}) does not fit {space:?}"))
        })
        .collect()
}

fn make_controller(env: &Environment, args: &ControllerArgs, actions: Option<&[Action]>) -> drivegym::Result<Box<dyn Controller>> {
    Ok(match args.controller {
        ControllerKind::Pi => Box::new(PiCascade::new(env)?),
        ControllerKind::Hysteresis => Box::new(Hysteresis::new(env, args.band)?),
        ControllerKind::External => Box::new(Scripted::new(env, actions.unwrap_or_default().to_vec())?),
    })
}

/// Loads the external action file and checks the controller fits the environment.
fn prepare_controller(env: &Environment, args: &ControllerArgs) -> Result<Option<Vec<Action>>> {
    let actions = match (args.controller, &args.actions) {
        (ControllerKind::External, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(CliError::Config)?;
            let actions = parse_actions(&text, &env.action_space())
                .with_context(|| path.display().to_string())
                .map_err(CliError::Config)?;
            Some(actions)
        }
        (ControllerKind::External, None) => return Err(CliError::config("--controller external needs --actions <file>")),
        (_, Some(_)) => return Err(CliError::config("--actions only applies to --controller external")),
        _ => None,
    };
    make_controller(env, args, actions.as_deref()).map_err(CliError::config)?;
    Ok(actions)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(runtime)
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = load_config(&args.env)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let mut env = Environment::new(cfg)?;
    let actions = prepare_controller(&env, &args.controller)?;
    let reference = match &args.reference {
        Some(path) => Some(refcsv::read_reference(path, env.observation_layout()).map_err(CliError::Config)?),
        None => None,
    };
    let mut controller = make_controller(&env, &args.controller, actions.as_deref())?;
    let record = run_episode_with(&mut env, &mut controller, Some(seed), reference).map_err(|e| match e {
        drivegym::Error::Input(_) if args.reference.is_some() => CliError::Config(e.into()),
        e => e.into(),
    })?;
    record.write_csv(&args.out)?;
    let summary = json!({
        "env_id": env.id(),
        "seed": seed,
        "steps": record.len(),
        "violated": record.ended_early(env.config().episode_length),
        "mae": mae_per_step(&record, env.weights(), env.widths()),
        "total_reward": record.rows.iter().map(|r| r.reward).sum::<f64>(),
    });
    println!("{summary}");
    log::info!("wrote {} rows to {}", record.len(), args.out.display());
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    if args.episodes == 0 {
        return Err(CliError::config("--episodes must be at least 1"));
    }
    let cfg = load_config(&args.env)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let probe = Environment::new(cfg.clone())?;
    let actions = prepare_controller(&probe, &args.controller)?;
    log::info!("benchmarking {} over {} episodes, seed {seed}", cfg.id(), args.episodes);
    let report = benchmark(&cfg, |env| make_controller(env, &args.controller, actions.as_deref()), args.episodes, seed)?;

    if let Some(dir) = &args.records {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(runtime)?;
        let mut env = probe;
        for (i, s) in episode_seeds(seed, args.episodes).into_iter().enumerate() {
            let mut controller = make_controller(&env, &args.controller, actions.as_deref())?;
            let record: TrajectoryRecord = run_episode(&mut env, &mut controller, Some(s))?;
            record.write_csv(&dir.join(format!("episode_{i:04}.csv")))?;
        }
    }

    match &args.out {
        Some(path) => {
            write_text(path, &report.to_json())?;
            println!(
                "{}: min {:.4} mean {:.4} max {:.4} violations {}/{}",
                report.env_id,
                report.min_mae,
                report.mean_mae,
                report.max_mae,
                report.violations,
                report.episodes.len()
            );
        }
        None => println!("{}", report.to_json()),
    }
    Ok(())
}

fn export(args: &ExportArgs) -> Result<()> {
    let cfg = load_config(&args.env)?;
    match args.what {
        ExportKind::Config => write_text(&args.out, &cfg.to_toml_string()),
        ExportKind::Reference => {
            let seed = args.seed.unwrap_or(cfg.seed);
            let mut env = Environment::new(cfg)?;
            env.reset(Some(seed))?;
            let reference = env.reference().expect("reset creates a reference");
            refcsv::write_reference(&args.out, env.observation_layout(), env.tau(), reference).map_err(runtime)
        }
    }
}

fn plot_cmd(args: &PlotArgs) -> Result<()> {
    let cfg = load_config(&args.env)?;
    let record = TrajectoryRecord::read_csv(&args.input).map_err(|e| CliError::Config(e.into()))?;
    let entries = if args.entries.is_empty() {
        let tracked: Vec<String> = (0..record.entry_names.len())
            .filter(|&k| record.rows.iter().any(|r| r.reference[k].is_some()))
            .map(|k| record.entry_names[k].clone())
            .collect();
        if tracked.is_empty() { record.entry_names.clone() } else { tracked }
    } else {
        args.entries.clone()
    };
    if let Some(bad) = entries.iter().find(|e| record.entry_index(e).is_none()) {
        return Err(CliError::config(format!("unknown entry '{bad}', available: {:?}", record.entry_names)));
    }
    plot::plot_record(&record, &entries, cfg.safety_margin, &args.out).map_err(runtime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn actions_follow_the_space() {
        let disc = ActionSpace::Discrete { n: 3 };
        assert_eq!(parse_actions("[0, 2, 1]", &disc).unwrap(), vec![Action::Discrete(0), Action::Discrete(2), Action::Discrete(1)]);
        assert!(parse_actions("[0.5]", &disc).is_err());
        let cont = ActionSpace::Continuous { low: vec![0.0], high: vec![1.0] };
        assert_eq!(
            parse_actions("[0.5, [0.25]]", &cont).unwrap(),
            vec![Action::Continuous(vec![0.5]), Action::Continuous(vec![0.25])]
        );
        assert!(parse_actions("{\"a\": 1}", &cont).is_err());
        assert!(parse_actions("[\"x\"]", &cont).is_err());
    }
}
