//! `copilot`: run missions, serve the control API, export PDDL and analyse logs.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use copilot_core::analysis::{
    cursor_samples, deployment_times, filter_inactive, heatmap, usage_breakdown, write_deployment_csv,
    write_grid_csv, write_pgm, write_usage_csv, HeatmapConfig,
};
use copilot_core::model::{generate_tasks, parse_robot_list, RobotId};
use copilot_core::planner::pddl::{check_pddl, export_pddl};
use copilot_core::service::{load_template, run_scenario, AutoOperator, MissionControl};
use copilot_core::sim::Scenario;
use copilot_core::store::{read_log_file, Store, WallClock};
use copilot_server::{spawn_ticker, AppState};

#[derive(Parser)]
#[command(name = "copilot", version, about = "Multi-robot mission orchestration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the PDDL domain and problem for a mission template.
    ExportPddl {
        /// `default`, `baseline`, or a template file.
        #[arg(long, default_value = "default")]
        mission: String,
        /// Robot count or comma separated robot ids.
        #[arg(long, default_value = "4")]
        robots: String,
        /// Directory for `domain.pddl` and `problem.pddl`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario headless with the scripted operator.
    Sim {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's template.
        #[arg(long)]
        template: Option<String>,
        /// Robot count or comma separated robot ids; overrides the scenario's fleet.
        #[arg(long)]
        robots: Option<String>,
        /// Event log destination (JSON lines).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Serve the control API while the scenario runs in real time.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        template: Option<String>,
        #[arg(long)]
        robots: Option<String>,
        #[arg(long)]
        log: Option<PathBuf>,
        /// Let the scripted operator answer gates and reviews and start the mission.
        #[arg(long)]
        auto_operator: bool,
    },
    /// Post-mission analysis of an event log.
    Analyze {
        log: PathBuf,
        /// Deployment-time table.
        #[arg(long)]
        deployment: bool,
        /// Time share per console view.
        #[arg(long)]
        usage: bool,
        /// Cursor heatmap.
        #[arg(long)]
        heatmap: bool,
        #[arg(long, default_value_t = 96.0)]
        dpi: f64,
        /// Output directory; tables go to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    match Cli::parse().command {
        Command::ExportPddl { mission, robots, out } => export(&mission, &robots, out.as_deref()),
        Command::Sim { scenario, template, robots, log } => sim(&scenario, template, robots, log.as_deref()),
        Command::Serve { scenario, port, template, robots, log, auto_operator } => {
            serve(&scenario, port, template, robots, log.as_deref(), auto_operator)
        }
        Command::Analyze { log, deployment, usage, heatmap, dpi, out } => {
            analyze(&log, deployment, usage, heatmap, dpi, out.as_deref())
        }
    }
}

/// `4` means `spot1..spot4`; anything else is a comma separated id list.
fn robots_arg(arg: &str) -> Result<Vec<RobotId>> {
    let robots = match arg.trim().parse::<usize>() {
        Ok(n) => (1..=n).map(|i| RobotId::new(format!("spot{i}"))).collect(),
        Err(_) => parse_robot_list(arg),
    };
    if robots.is_empty() {
        bail!("no robots given");
    }
    Ok(robots)
}

fn export(mission: &str, robots: &str, out: Option<&Path>) -> Result<()> {
    let template = load_template(mission)?;
    let graph = generate_tasks(&template, &robots_arg(robots)?)?;
    let (domain, problem) = export_pddl(&graph, 0.0, template.resources.pit_crew_capacity);
    check_pddl(&domain, &problem).context("exported PDDL failed the grammar check")?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("domain.pddl"), domain)?;
            fs::write(dir.join("problem.pddl"), problem)?;
        }
        None => write!(io::stdout(), "{domain}\n{problem}")?,
    }
    Ok(())
}

struct Setup {
    scenario: Scenario,
    template: copilot_core::model::MissionTemplate,
    robots: Vec<RobotId>,
    store: Store,
}

fn setup(path: &Path, template: Option<String>, robots: Option<String>, log: Option<&Path>) -> Result<Setup> {
    let scenario = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    let name = template.or_else(|| scenario.template.clone()).unwrap_or_else(|| "default".into());
    let template = load_template(&name)?;
    let robots = match robots {
        Some(r) => robots_arg(&r)?,
        None if !scenario.robots.is_empty() => scenario.robots.clone(),
        None => bail!("the scenario lists no robots; pass --robots"),
    };
    let clock = WallClock::simulated(scenario.sim.time_scale);
    let store = match log {
        Some(p) => Store::create(p, clock).with_context(|| format!("creating {}", p.display()))?,
        None => Store::in_memory(clock),
    };
    Ok(Setup { scenario, template, robots, store })
}

fn sim(path: &Path, template: Option<String>, robots: Option<String>, log: Option<&Path>) -> Result<()> {
    let s = setup(path, template, robots, log)?;
    let (summary, _) = run_scenario(s.template, &s.scenario, s.robots, s.store)?;
    writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn serve(
    path: &Path,
    port: u16,
    template: Option<String>,
    robots: Option<String>,
    log: Option<&Path>,
    auto_operator: bool,
) -> Result<()> {
    let s = setup(path, template, robots, log)?;
    let selection = s.template.robot_selection_task.clone();
    let mut control = MissionControl::new(s.template, &s.scenario, s.robots.clone(), s.store)?;
    let state = if auto_operator {
        control.start()?;
        let op = AutoOperator::new(s.scenario.operator.clone(), s.robots, selection.as_deref(), s.scenario.sim.seed);
        AppState::with_operator(control, op)
    } else {
        AppState::new(control)
    };
    let period = Duration::from_secs_f64(s.scenario.tick / s.scenario.sim.time_scale);
    let tick = s.scenario.tick;
    tokio::runtime::Runtime::new()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
        eprintln!("serving {} on {}", s.scenario.name, listener.local_addr()?);
        let _ticker = spawn_ticker(state.clone(), tick, period);
        copilot_server::serve(listener, state).await?;
        Ok(())
    })
}

fn analyze(log: &Path, deployment: bool, usage: bool, show_heatmap: bool, dpi: f64, out: Option<&Path>) -> Result<()> {
    let events = read_log_file(log).with_context(|| format!("reading {}", log.display()))?;
    let all = !(deployment || usage || show_heatmap);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let sink = |name: &str| -> Result<Box<dyn Write>> {
        Ok(match out {
            Some(dir) => Box::new(BufWriter::new(File::create(dir.join(name))?)),
            None => Box::new(io::stdout().lock()),
        })
    };
    if deployment || all {
        let table = deployment_times(&events);
        write_deployment_csv(&table, sink("deployment.csv")?)?;
        eprintln!(
            "{} robots, span {:.1} s, {:.1} s per robot, goal {} s: {}",
            table.count,
            table.span,
            table.average_per_robot,
            table.goal,
            if table.meets_goal { "met" } else { "missed" }
        );
    }
    if usage || all {
        write_usage_csv(&usage_breakdown(&events), sink("usage.csv")?)?;
    }
    if show_heatmap || all {
        let config = HeatmapConfig::for_dpi(dpi)?;
        let samples = cursor_samples(&events);
        let kept = filter_inactive(&samples, &config);
        let map = heatmap(&kept, &config)?;
        eprintln!(
            "heatmap {}x{}: {} of {} samples active, {} off screen",
            map.width,
            map.height,
            kept.len(),
            samples.len(),
            map.clipped
        );
        match out {
            Some(dir) => {
                write_pgm(&map, BufWriter::new(File::create(dir.join("heatmap.pgm"))?))?;
                write_grid_csv(&map, sink("heatmap.csv")?)?;
            }
            None => write_grid_csv(&map, sink("heatmap.csv")?)?,
        }
    }
    Ok(())
}
