//! The `sandpile` command line.
//!
//! Exit codes: 0 on success, 1 for invalid input (bad arguments, schema or
//! graph errors), 2 when a solver fails or a transport check does not pass.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::evolution::{
    converge_p_experiment, mass_balance, solve_collapse, solve_growth, solve_p_flow, Forcing, Trajectory,
};
use crate::graph::WeightedGraph;
use crate::io::{field_csv, fmt_num, load_field, write_trajectory};
use crate::proximal::{project, ConstraintKind, ConstraintSet};
use crate::scenario::{load_scenario, Mode, Scenario};
use crate::transport::{growth_step_instance, kantorovich_pairing, ot_cost_oracle, verify_potential};

#[derive(Parser, Debug)]
#[command(
    name = "sandpile",
    version,
    about = "Sandpile growth and collapse on weighted graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario in its own mode and write the trajectory CSV.
    Simulate {
        scenario: PathBuf,
        /// Overrides the scenario's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Collapse the scenario's initial datum and print the limit.
    Collapse {
        scenario: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        /// Also write the rescaled trajectory here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare p-flows with the growth model; prints `p,sup_error`.
    ConvergeP {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        p_list: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Project a field onto the stable set of a graph.
    Project {
        /// Edge-list file.
        graph: PathBuf,
        /// Field file with `<vertex> <value>` lines.
        field: PathBuf,
        #[arg(long, default_value = "uniform")]
        kind: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Check that a growth solution is a Kantorovich potential at time `t`.
    TransportCheck {
        scenario: PathBuf,
        #[arg(long)]
        t: f64,
    },
}

/// Failure of a CLI command, with the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Error(Error),
    CheckFailed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(Error::Io(e))
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Normal output goes to `out`, diagnostics
/// to `err`.
pub fn run_command<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match run(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Error(e)) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
        Err(Failure::CheckFailed(msg)) => {
            let _ = writeln!(err, "check failed: {msg}");
            2
        }
    }
}

fn run(command: Command, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match command {
        Command::Simulate { scenario, output } => simulate(&scenario, output, out),
        Command::Collapse { scenario, dt, output } => collapse(&scenario, dt, output, out),
        Command::ConvergeP {
            scenario,
            p_list,
            output,
        } => converge(&scenario, &p_list, output, out),
        Command::Project {
            graph,
            field,
            kind,
            tol,
        } => project_cmd(&graph, &field, &kind, tol, out),
        Command::TransportCheck { scenario, t } => transport_check(&scenario, t, out),
    }
}

fn output_path(sc: &Scenario, cli: Option<PathBuf>) -> PathBuf {
    cli.or_else(|| sc.output.clone()).unwrap_or_else(|| {
        PathBuf::from(format!(
            "{}.csv",
            if sc.name.is_empty() { "trajectory" } else { &sc.name }
        ))
    })
}

fn print_events(g: &WeightedGraph, traj: &Trajectory, out: &mut dyn Write) -> std::io::Result<()> {
    let name = |id: &usize| {
        let e = &g.edges()[*id];
        format!("{}-{}", g.label(e.a), g.label(e.b))
    };
    for e in traj.events() {
        let mut parts: Vec<String> = e.activated.iter().map(|id| format!("+{}", name(id))).collect();
        parts.extend(e.released.iter().map(|id| format!("-{}", name(id))));
        writeln!(out, "event t={} {}", fmt_num(e.t), parts.join(" "))?;
    }
    Ok(())
}

fn simulate(path: &Path, output: Option<PathBuf>, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let sc = load_scenario(path)?;
    let opts = sc.solver_options();
    let g = &sc.graph;
    let (traj, forcing_is_collapse) = match sc.mode {
        Mode::PFlow { p } => (
            solve_p_flow(
                g,
                &sc.constraints,
                p,
                &sc.u0,
                &sc.source,
                sc.require_t_end()?,
                sc.dt,
                &opts,
            )?,
            false,
        ),
        Mode::Growth => (
            solve_growth(
                g,
                &sc.constraints,
                &sc.u0,
                &sc.source,
                sc.require_t_end()?,
                sc.dt,
                &opts,
            )?,
            false,
        ),
        Mode::Collapse => (
            solve_collapse(g, &sc.constraints, &sc.u0, sc.dt, &opts)?.trajectory,
            true,
        ),
    };
    let report = if forcing_is_collapse {
        mass_balance(g, &traj, Forcing::Collapse)
    } else {
        mass_balance(g, &traj, Forcing::Source(&sc.source))
    };
    let path = output_path(&sc, output);
    write_trajectory(g, &traj, &path)?;
    writeln!(out, "mode {}: {} samples", sc.mode.name(), traj.len())?;
    print_events(g, &traj, out)?;
    writeln!(out, "max |mass residual| = {}", fmt_num(report.max_abs))?;
    if let Some(last) = traj.last() {
        writeln!(out, "u_end = {last}")?;
    }
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn collapse(
    path: &Path,
    dt: Option<f64>,
    output: Option<PathBuf>,
    out: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    let sc = load_scenario(path)?;
    let dt = dt.unwrap_or(sc.dt);
    let c = solve_collapse(&sc.graph, &sc.constraints, &sc.u0, dt, &sc.solver_options())?;
    writeln!(out, "L = {}", fmt_num(c.slope))?;
    writeln!(out, "tau = {}", fmt_num(c.tau))?;
    print_events(&sc.graph, &c.trajectory, out)?;
    if let Some(path) = output {
        write_trajectory(&sc.graph, &c.trajectory, &path)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    writeln!(out, "u_inf = {}", c.u_infinity)?;
    Ok(())
}

fn converge(
    path: &Path,
    p_list: &[f64],
    output: Option<PathBuf>,
    out: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    let sc = load_scenario(path)?;
    if p_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("--p-list must be increasing".into()).into());
    }
    let rows = converge_p_experiment(
        &sc.graph,
        &sc.constraints,
        &sc.u0,
        &sc.source,
        p_list,
        sc.require_t_end()?,
        sc.dt,
        &sc.solver_options(),
    )?;
    let mut table = String::from("p,sup_error\n");
    for r in &rows {
        table.push_str(&format!("{},{}\n", r.p, fmt_num(r.sup_error)));
    }
    if let Some(path) = output {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, &table)?;
    }
    write!(out, "{table}")?;
    Ok(())
}

fn project_cmd(
    graph: &Path,
    field: &Path,
    kind: &str,
    tol: f64,
    out: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    let g = WeightedGraph::load(graph)?;
    let kind: ConstraintKind = kind.parse()?;
    if kind == ConstraintKind::Custom {
        return Err(Error::InvalidParameter("--kind custom needs a scenario file".into()).into());
    }
    let k = ConstraintSet::of_kind(&g, kind)?;
    let z = load_field(&g, field)?;
    let u = project(&g, &k, &z, tol, crate::proximal::DEFAULT_MAX_SWEEPS)?;
    write!(out, "{}", field_csv(&g, &u))?;
    Ok(())
}

fn transport_check(path: &Path, t: f64, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let sc = load_scenario(path)?;
    let t_end = sc.require_t_end()?;
    if !(t >= 0.0 && t < t_end) {
        return Err(Error::InvalidParameter(format!("--t must lie in [0, {t_end}), got {t}")).into());
    }
    let g = &sc.graph;
    let run_to = (t + 2.0 * sc.dt).min(t_end);
    let traj = solve_growth(
        g,
        &sc.constraints,
        &sc.u0,
        &sc.source,
        run_to,
        sc.dt,
        &sc.solver_options(),
    )?;
    let dist = match sc.constraints.kind() {
        ConstraintKind::Uniform => g.distance_table(),
        _ => g.constraint_distance_table(sc.constraints.bounds())?,
    };
    let (inst, u) = growth_step_instance(g, dist, &traj, &sc.source, t)?;
    let tol = (10.0 * sc.dt).max(1e-9);
    let pairing = kantorovich_pairing(g, &u, inst.f0(), inst.f1());
    let cost = ot_cost_oracle(&inst)?;
    let verified = verify_potential(&inst, &u, tol)?;
    writeln!(out, "pairing = {}", fmt_num(pairing))?;
    writeln!(out, "ot_cost = {}", fmt_num(cost))?;
    writeln!(out, "gap = {}", fmt_num(cost - pairing))?;
    writeln!(out, "potential = {}", if verified { "verified" } else { "rejected" })?;
    if verified {
        Ok(())
    } else {
        Err(Failure::CheckFailed(format!(
            "duality gap {} exceeds {tol}",
            cost - pairing
        )))
    }
}
