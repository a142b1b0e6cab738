use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sgp_design::design::{
    default_k_max, degree_objective, objective_tau_form, sweep_k_with, DesignResult,
};
use sgp_design::experiment::{
    design_for, load_topologies, run_comparison, run_config, Arm, ExperimentConfig, OutputPaths,
    RunOutput, TopologySource,
};
use sgp_design::graph::{
    format_link_list, parse_edge_list, parse_link_list, BaseTopology, UndirectedGraph,
};
use sgp_design::mixing::uniform_column_stochastic;
use sgp_design::schedule::{build_conflict_graph_with, greedy_color};
use sgp_design::sim::{Algorithm, ProblemSpec};
use sgp_design::topology::GeneratorSpec;
use sgp_design::verify::{all_passed, format_reports, run_verify, Level};

#[derive(Parser)]
#[command(
    name = "sgp-design",
    version,
    about = "Design, schedule and simulate communication graphs for decentralized SGD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated base topology as an edge list.
    Generate {
        /// Generator, e.g. `windmill:3,21` or `rg:33,0.5,7`.
        #[arg(long = "gen")]
        spec: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design an activated graph and its slot schedule.
    Design {
        #[command(flatten)]
        topo: TopologyArgs,
        #[command(flatten)]
        design: DesignArgs,
        /// Recorded in the report for provenance.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Schedule a set of directed links (the full base topology by default).
    Schedule {
        #[command(flatten)]
        topo: TopologyArgs,
        /// Directed link list `i j` per line.
        #[arg(long)]
        links: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run SGP or D-PSGD and write the convergence trace.
    Simulate(SimulateArgs),
    /// Evaluate every K up to a limit and report the best.
    SweepK {
        #[command(flatten)]
        topo: TopologyArgs,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        skip_step4: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the brute-force cross-checks.
    Verify {
        #[arg(long, default_value = "quick")]
        level: Level,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Clone, Default)]
struct TopologyArgs {
    /// Edge list file of the base topology.
    #[arg(long, conflicts_with = "gen")]
    topology: Option<PathBuf>,
    /// Generator spec for the base topology.
    #[arg(long)]
    gen: Option<String>,
    /// Edge list of the interference graph, if it differs from the base.
    #[arg(long)]
    interference: Option<PathBuf>,
}

impl TopologyArgs {
    fn source(&self) -> Option<TopologySource> {
        match (&self.topology, &self.gen) {
            (Some(p), _) => Some(TopologySource::File(p.clone())),
            (None, Some(g)) => Some(TopologySource::Generator(g.clone())),
            (None, None) => None,
        }
    }

    fn load(&self) -> Result<(BaseTopology, UndirectedGraph)> {
        let Some(source) = self.source() else {
            bail!("missing topology: pass --topology <file> or --gen <spec>");
        };
        let base = source.load().context("loading base topology")?;
        let interference = match &self.interference {
            Some(path) => {
                let g = parse_edge_list(&read(path)?)?;
                if g.n() != base.n() {
                    bail!(
                        "interference graph has {} nodes, base topology has {}",
                        g.n(),
                        base.n()
                    );
                }
                g
            }
            None => base.graph().clone(),
        };
        Ok((base, interference))
    }
}

#[derive(Args, Clone, Default)]
struct DesignArgs {
    /// Number of distance-reducing edges; sweeps K when omitted.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    skip_step4: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    topo: TopologyArgs,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, value_parser = parse_algo)]
    algo: Option<Algorithm>,
    /// Run SGP on the full base topology.
    #[arg(long)]
    vanilla: bool,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Run sgp-designed, dpsgd-vanilla and sgp-vanilla on the same problem.
    #[arg(long)]
    compare: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_algo(s: &str) -> std::result::Result<Algorithm, String> {
    match s {
        "sgp" => Ok(Algorithm::Sgp),
        "dpsgd" => Ok(Algorithm::Dpsgd),
        other => Err(format!(
            "unknown algorithm `{other}` (expected sgp or dpsgd)"
        )),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { spec, out } => {
            let base = spec.parse::<GeneratorSpec>()?.build()?;
            match out {
                Some(path) => {
                    write(&path, &base.to_edge_list())?;
                    println!(
                        "wrote {} nodes, {} edges to {}",
                        base.n(),
                        base.graph().edge_count(),
                        path.display()
                    );
                }
                None => print!("{}", base.to_edge_list()),
            }
        }
        Command::Design {
            topo,
            design,
            seed,
            out,
        } => cmd_design(&topo, &design, seed, out.as_deref())?,
        Command::Schedule { topo, links, out } => {
            cmd_schedule(&topo, links.as_deref(), out.as_deref())?
        }
        Command::Simulate(args) => cmd_simulate(args)?,
        Command::SweepK {
            topo,
            k_max,
            skip_step4,
            out,
        } => cmd_sweep(&topo, k_max, skip_step4, out.as_deref())?,
        Command::Verify { level, seed } => {
            let reports = run_verify(level, seed);
            print!("{}", format_reports(&reports));
            if !all_passed(&reports) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn summary(r: &DesignResult) -> String {
    format!(
        "K={} links={} tau={} diameter={} max_out={} max_in={} delta={:.6} objective={}",
        r.k,
        r.g_a.link_count(),
        r.tau,
        r.diameter,
        r.max_out,
        r.max_in,
        r.delta,
        r.degree_objective
    )
}

fn cmd_design(
    topo: &TopologyArgs,
    args: &DesignArgs,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<()> {
    let (base, interference) = topo.load()?;
    let cfg = design_config(topo, args)?;
    let result = design_for(&cfg, &base, &interference)?;
    println!("{}", summary(&result));
    if let Some(dir) = out {
        let report = result.report(seed);
        write(
            &dir.join("design.json"),
            &serde_json::to_string_pretty(&report)?,
        )?;
        write(&dir.join("schedule.json"), &result.schedule.to_json()?)?;
        write(&dir.join("links.txt"), &format_link_list(&result.g_a))?;
        write(
            &dir.join("mixing.txt"),
            &uniform_column_stochastic(&result.g_a).to_coo(),
        )?;
        println!("wrote design files to {}", dir.display());
    }
    Ok(())
}

/// Design settings expressed as an experiment config so the library's
/// K selection is reused.
fn design_config(topo: &TopologyArgs, args: &DesignArgs) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        topology: topo.source().context("missing topology")?,
        interference: topo.interference.clone(),
        algorithm: Algorithm::Sgp,
        vanilla: false,
        k: args.k,
        k_max: args.k_max,
        skip_step4: args.skip_step4,
        problem: ProblemSpec::default(),
        eta: None,
        t_planned: 1,
        eps: 1.0,
        max_iters: 1,
        seed: 0,
        init_spread: 0.0,
        output: OutputPaths::default(),
    })
}

fn cmd_schedule(topo: &TopologyArgs, links: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let (base, interference) = topo.load()?;
    let g_a = match links {
        Some(path) => parse_link_list(&read(path)?, base.n())?,
        None => base.full_digraph(),
    };
    let schedule = greedy_color(&build_conflict_graph_with(&g_a, &base, &interference)?);
    let (max_out, max_in) = g_a.max_degrees();
    print!(
        "links={} tau={} max_out={max_out} max_in={max_in}",
        g_a.link_count(),
        schedule.tau()
    );
    match degree_objective(&g_a) {
        Ok(obj) => println!(
            " diameter={} objective={} objective_tau_form={}",
            g_a.diameter()?,
            obj,
            objective_tau_form(&g_a, schedule.tau())?
        ),
        Err(_) => println!(" (not strongly connected)"),
    }
    if let Some(dir) = out {
        write(&dir.join("schedule.json"), &schedule.to_json()?)?;
    }
    Ok(())
}

fn cmd_sweep(
    topo: &TopologyArgs,
    k_max: Option<usize>,
    skip_step4: bool,
    out: Option<&Path>,
) -> Result<()> {
    let (base, interference) = topo.load()?;
    let k_max = k_max.unwrap_or_else(|| default_k_max(&base));
    let sweep = sweep_k_with(&base, &interference, k_max, skip_step4)?;
    let mut csv =
        String::from("k,links,tau,diameter,max_out,max_in,log_objective,log_objective_tau_form\n");
    for r in &sweep.results {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.k,
            r.g_a.link_count(),
            r.tau,
            r.diameter,
            r.max_out,
            r.max_in,
            r.degree_objective.ln,
            r.objective_tau_form.ln
        ));
    }
    match out {
        Some(dir) => write(&dir.join("sweep.csv"), &csv)?,
        None => print!("{csv}"),
    }
    println!("best {}", summary(sweep.best()));
    Ok(())
}

fn simulate_config(args: &SimulateArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => {
            let topology = args
                .topo
                .source()
                .context("missing topology: pass --config, --topology or --gen")?;
            let eps = args
                .eps
                .context("missing required setting --eps (or a config file)")?;
            let seed = args
                .seed
                .context("missing required setting --seed (or a config file)")?;
            let mut cfg = design_config(&args.topo, &args.design)?;
            cfg.topology = topology;
            cfg.eps = eps;
            cfg.seed = seed;
            cfg.t_planned = 10_000;
            cfg.max_iters = 100_000;
            cfg
        }
    };
    if let Some(source) = args.topo.source() {
        cfg.topology = source;
    }
    if args.topo.interference.is_some() {
        cfg.interference = args.topo.interference.clone();
    }
    if args.design.k.is_some() {
        cfg.k = args.design.k;
    }
    if args.design.k_max.is_some() {
        cfg.k_max = args.design.k_max;
    }
    cfg.skip_step4 |= args.design.skip_step4;
    cfg.vanilla |= args.vanilla;
    if let Some(a) = args.algo {
        cfg.algorithm = a;
    }
    if let Some(e) = args.eps {
        cfg.eps = e;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.eta.is_some() {
        cfg.eta = args.eta;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_run(run: &RunOutput, trace_path: Option<&Path>) -> Result<()> {
    let t = &run.trace;
    match (t.converged_at, t.slots_to_converge()) {
        (Some(iters), Some(slots)) => println!(
            "{}: converged after {iters} iterations, {slots} slots ({} slots/iteration)",
            run.arm.name(),
            t.slots_per_iter
        ),
        _ => println!(
            "{}: not converged after {} iterations (running average {:e})",
            run.arm.name(),
            t.iterations(),
            t.records
                .last()
                .map_or(f64::NAN, |r| r.running_avg_grad_norm_sq)
        ),
    }
    if let Some(path) = trace_path {
        write(path, &t.to_csv())?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = simulate_config(&args)?;
    let dir = args.out.clone();
    if args.compare {
        // fail early on a bad topology before spawning the arms
        load_topologies(&cfg)?;
        for run in run_comparison(&cfg)? {
            let path = dir
                .as_ref()
                .map(|d| d.join(format!("trace-{}.csv", run.arm.name())));
            report_run(&run, path.as_deref())?;
        }
    } else {
        let run = run_config(&cfg)?;
        let path = dir
            .as_ref()
            .map(|d| d.join("trace.csv"))
            .or_else(|| cfg.output.trace.clone());
        report_run(&run, path.as_deref())?;
        if let (Some(design), Some(path)) = (&run.design, cfg.output.design.as_ref()) {
            write(
                path,
                &serde_json::to_string_pretty(&design.report(Some(cfg.seed)))?,
            )?;
        }
        if run.arm == Arm::SgpDesigned {
            if let Some(d) = &run.design {
                println!("design: {}", summary(d));
            }
        }
    }
    Ok(())
}
