use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use citytrail_core::content::{bari_demo_pack, ContentPack, Difficulty};
use citytrail_sim::{
    generate_trace, parse_route, replay_api, replay_engine, AnswerPolicy, ApiTarget, Scenario,
    SimError,
};
use clap::Parser;

/// Replay a synthetic trip and compare fired triggers with the oracle.
///
/// Exit status: 0 when triggers match the oracle, 1 on a mismatch, 2 on a
/// usage, configuration or connection error.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Content pack directory; the bundled Bari demo when absent.
    #[arg(long)]
    pack: Option<PathBuf>,
    /// Waypoints file, one `lat,lon` per line.
    #[arg(long)]
    route: PathBuf,
    /// Travel speed in m/s.
    #[arg(long, default_value_t = 5.0)]
    speed: f64,
    /// Seconds between position fixes.
    #[arg(long, default_value_t = 1.0)]
    period: f64,
    /// Standard deviation of positional noise in metres.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "easy")]
    difficulty: Difficulty,
    #[arg(long, value_enum, default_value_t = AnswerPolicy::AlwaysCorrect)]
    policy: AnswerPolicy,
    #[arg(long)]
    language: Option<String>,
    /// Play through the API at this base URL instead of the local engine.
    #[arg(long)]
    api: Option<String>,
    /// Account for --api; a throwaway account is registered when absent.
    #[arg(long, requires = "password")]
    user: Option<String>,
    #[arg(long, env = "CITYTRAIL_SIM_PASSWORD", requires = "user")]
    password: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn run(args: Args) -> Result<bool, String> {
    let pack = match &args.pack {
        Some(dir) => ContentPack::load_dir(dir).map_err(|e| e.to_string())?,
        None => bari_demo_pack(),
    };
    let route_text = std::fs::read_to_string(&args.route)
        .map_err(|e| format!("{}: {e}", args.route.display()))?;
    let waypoints = parse_route(&route_text).map_err(|e| e.to_string())?;
    let trace = generate_trace(&waypoints, args.speed, args.period, args.noise, args.seed)
        .map_err(|e| e.to_string())?;
    let scenario = Scenario {
        difficulty: args.difficulty,
        policy: args.policy,
        seed: args.seed,
        language: args.language,
    };
    let report = match &args.api {
        Some(url) => {
            let target = ApiTarget {
                base_url: url.clone(),
                credentials: args.user.zip(args.password),
            };
            replay_api(&trace, &scenario, &pack, &target)
        }
        None => replay_engine(&trace, &scenario, Arc::new(pack)),
    }
    .map_err(|e: SimError| e.to_string())?;

    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    match &args.report {
        Some(path) => {
            std::fs::write(path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => println!("{json}"),
    }
    Ok(report.matches)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("simulate: fired triggers differ from the oracle");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::from(2)
        }
    }
}
