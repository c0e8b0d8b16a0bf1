use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gwpt::classical::Estimator;
use gwpt::harness::config::parse_rational;
use gwpt::harness::pipeline::{
    compare_runs, jtilde_all, nz2_self_convergence, run_classical, run_gwpt, run_reference, timing,
    zdiag,
};
use gwpt::harness::report::{
    error_table, profile_csv, timing_table, values_csv, zdiag_table, ReportWriter,
};
use gwpt::harness::{ExperimentConfig, OutputKind, StageTimings, TestId};
use gwpt::observables::{density, expectation_values, stats, CurrentEvaluator, ObservableSeries};
use gwpt::{Error, Result, Stage};

#[derive(Parser)]
#[command(
    name = "gwpt",
    version,
    about = "Gaussian wave packet transform solver with stochastic collocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the GWPT pipeline and write profiles and statistics.
    Run(Common),
    /// Compare GWPT with the reference solver and write an error table.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        sweep: Option<Sweep>,
    },
    /// Classical-limit density, current and moments.
    Classical(Common),
    /// Maximum z-derivatives of Re ψ and Re w over the ε sweep.
    Zdiag(Common),
    /// Wall-clock comparison of GWPT and the reference solver.
    Timing {
        #[command(flatten)]
        common: Common,
        /// ε values (default 1/256,1/512,1/640).
        #[arg(long, value_delimiter = ',')]
        eps_list: Vec<String>,
        /// Skip the untimed warm-up runs.
        #[arg(long)]
        no_warmup: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    Eps,
    Nz2,
    Time,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin test (a1i, a1ii, a2, a3, a4, b, c, d).
    #[arg(long)]
    test: Option<String>,
    /// ε as a number or ratio, e.g. 1/256.
    #[arg(long)]
    eps: Option<String>,
    /// Final time.
    #[arg(long = "T", alias = "t-final")]
    t_final: Option<String>,
    #[arg(long)]
    nz1: Option<usize>,
    #[arg(long)]
    nz2: Option<usize>,
    #[arg(long)]
    nz3: Option<usize>,
    #[arg(long)]
    nz4: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.test) {
            (Some(path), _) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
            (None, Some(t)) => ExperimentConfig::preset(t.parse()?, 1.0 / 256.0),
            (None, None) => ExperimentConfig::preset(TestId::A1ii, 1.0 / 256.0),
        };
        if let Some(e) = &self.eps {
            cfg.eps = parse_rational(e)
                .ok_or_else(|| Error::config("eps", format!("cannot parse `{e}`")))?;
        }
        if let Some(t) = &self.t_final {
            cfg.t_final = parse_rational(t)
                .ok_or_else(|| Error::config("T", format!("cannot parse `{t}`")))?;
        }
        for (dst, src) in [
            (&mut cfg.nz1, self.nz1),
            (&mut cfg.nz2, self.nz2),
            (&mut cfg.nz3, self.nz3),
            (&mut cfg.nz4, self.nz4),
        ] {
            if let Some(n) = src {
                *dst = n;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let stage = e
                .stage()
                .map_or_else(|| "error".to_string(), |s| s.to_string());
            eprintln!("gwpt: [{stage}] {e}");
            ExitCode::from(exit_code(e.stage()))
        }
    }
}

fn exit_code(stage: Option<Stage>) -> u8 {
    match stage {
        None => 1,
        Some(Stage::Config) => 2,
        Some(Stage::Ode) => 3,
        Some(Stage::Wprop) => 4,
        Some(Stage::Reconstruct) => 5,
        Some(Stage::Reference) => 6,
        Some(Stage::Stats) => 7,
        Some(Stage::Classical) => 8,
        Some(Stage::Output) => 9,
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(c) => cmd_run(&c.config()?, &c.out),
        Command::Compare { common, sweep } => cmd_compare(&common.config()?, &common.out, sweep),
        Command::Classical(c) => cmd_classical(&c.config()?, &c.out),
        Command::Zdiag(c) => cmd_zdiag(&c.config()?, &c.out),
        Command::Timing {
            common,
            eps_list,
            no_warmup,
        } => {
            let mut cfg = common.config()?;
            if common.t_final.is_none() {
                cfg.t_final = 0.3;
            }
            let eps: Vec<f64> = if eps_list.is_empty() {
                vec![1.0 / 256.0, 1.0 / 512.0, 1.0 / 640.0]
            } else {
                eps_list
                    .iter()
                    .map(|s| {
                        parse_rational(s)
                            .ok_or_else(|| Error::config("eps", format!("cannot parse `{s}`")))
                    })
                    .collect::<Result<_>>()?
            };
            cmd_timing(&cfg, &common.out, &eps, !no_warmup)
        }
    }
}

fn out_err<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ Error::Stage { .. } => e,
        e => Error::Stage {
            stage: Stage::Output,
            source: Box::new(e),
        },
    })
}

fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let g = run_gwpt(cfg, true)?;
    let psi = g.psi()?;
    let mut w = out_err(ReportWriter::new(out))?;
    let mut timings = g.timings;
    let per_node_rho: Vec<Vec<f64>> = psi.iter().map(density).collect();
    let mut ev = CurrentEvaluator::new(cfg.x.n);
    let per_node_j: Vec<Vec<f64>> = psi.iter().map(|f| ev.current(f)).collect();
    if cfg.wants(OutputKind::Rho) {
        let s = stats("rho", per_node_rho, &g.m3)?;
        out_err(w.write("rho_profile.csv", Stage::Stats, &profile_csv(&cfg.x, &s)))?;
    }
    if cfg.wants(OutputKind::J) {
        let s = stats("j", per_node_j, &g.m3)?;
        out_err(w.write("j_profile.csv", Stage::Stats, &profile_csv(&cfg.x, &s)))?;
    }
    if cfg.wants(OutputKind::Stats) {
        let jt = jtilde_all(psi);
        let (qs, ps): (Vec<f64>, Vec<f64>) = psi.iter().map(expectation_values).unzip();
        let masses: Vec<f64> = psi.iter().map(|f| f.mass()).collect();
        let mut text = String::from("observable,mean,sd\n");
        for (name, vals) in [("jtilde", jt), ("q", qs), ("p", ps), ("mass", masses)] {
            let s = ObservableSeries::scalar(name, &vals, &g.m3)?;
            text.push_str(&format!("{name},{:.10e},{:.10e}\n", s.mean[0], s.sd[0]));
        }
        out_err(w.write("stats.csv", Stage::Stats, &text))?;
    }
    if cfg.wants(OutputKind::Psi) {
        let mut text = String::from("node,x,re,im\n");
        for (k, f) in psi.iter().enumerate() {
            for (j, v) in f.values.iter().enumerate() {
                text.push_str(&format!(
                    "{k},{:.10e},{:.10e},{:.10e}\n",
                    cfg.x.point(j),
                    v.re,
                    v.im
                ));
            }
        }
        out_err(w.write("psi_nodes.csv", Stage::Reconstruct, &text))?;
    }
    if cfg.wants(OutputKind::Zdiag) {
        let d = zdiag(cfg, &g)?;
        out_err(w.write("zdiag.csv", Stage::Stats, &zdiag_table(&[d])))?;
    }
    if cfg.wants(OutputKind::Classical) {
        let c = run_classical(cfg, cfg.classical_estimator)?;
        out_err(w.write(
            "classical_density.csv",
            Stage::Classical,
            &values_csv(&cfg.x, "density", &c.density.values),
        ))?;
        out_err(w.write(
            "classical_current.csv",
            Stage::Classical,
            &values_csv(&cfg.x, "current", &c.current.values),
        ))?;
    }
    if cfg.wants(OutputKind::Errors) {
        let r = run_reference(cfg)?;
        timings.reference = r.timings.reference;
        let row = compare_runs(cfg, &g, &r)?;
        out_err(w.write(
            "errors.csv",
            Stage::Stats,
            &error_table(&[row], cfg.wants(OutputKind::Timing)),
        ))?;
    }
    let timing = cfg.wants(OutputKind::Timing).then_some(timings);
    let prov = out_err(w.finish("run", cfg, timing))?;
    println!("wrote {}", prov.display());
    Ok(())
}

fn cmd_compare(cfg: &ExperimentConfig, out: &Path, sweep: Option<Sweep>) -> Result<()> {
    let mut rows = Vec::new();
    let mut name = "errors";
    match sweep {
        None => rows.push(compare_one(cfg)?),
        Some(Sweep::Eps) => {
            name = "errors_eps";
            for &e in &cfg.sweep.eps {
                rows.push(compare_one(&cfg.with_eps(e))?);
            }
        }
        Some(Sweep::Nz2) => {
            name = "errors_nz2";
            for &n in &cfg.sweep.nz2 {
                rows.push(nz2_self_convergence(&ExperimentConfig {
                    nz2: n,
                    ..cfg.clone()
                })?);
            }
        }
        Some(Sweep::Time) => {
            name = "errors_time";
            for &t in &cfg.sweep.times {
                rows.push(compare_one(&ExperimentConfig {
                    t_final: t,
                    ..cfg.clone()
                })?);
            }
        }
    }
    for r in &rows {
        println!(
            "eps={:.6e} Nz2={} T={:.4} Er_psi={:.4e} Er1_j={:.4e} Er2_j={:.4e}",
            r.eps, r.nz2, r.t, r.er_psi, r.j.er1, r.j.er2
        );
    }
    let mut w = out_err(ReportWriter::new(out))?;
    let timing = cfg.wants(OutputKind::Timing);
    out_err(w.write(
        &format!("{name}.csv"),
        Stage::Stats,
        &error_table(&rows, timing),
    ))?;
    let total = rows
        .iter()
        .fold(StageTimings::default(), |a, r| StageTimings {
            ode: a.ode + r.timings.ode,
            wprop: a.wprop + r.timings.wprop,
            reconstruct: a.reconstruct + r.timings.reconstruct,
            reference: a.reference + r.timings.reference,
        });
    out_err(w.finish("compare", cfg, timing.then_some(total)))?;
    Ok(())
}

fn compare_one(cfg: &ExperimentConfig) -> Result<gwpt::harness::ComparisonRow> {
    let g = run_gwpt(cfg, true)?;
    let r = run_reference(cfg)?;
    compare_runs(cfg, &g, &r)
}

fn cmd_classical(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let mut w = out_err(ReportWriter::new(out))?;
    for est in [Estimator::Histogram, Estimator::Derivative] {
        let c = run_classical(cfg, est)?;
        let tag = match est {
            Estimator::Histogram => "histogram",
            Estimator::Derivative => "derivative",
        };
        out_err(w.write(
            &format!("classical_density_{tag}.csv"),
            Stage::Classical,
            &values_csv(&cfg.x, "density", &c.density.values),
        ))?;
        out_err(w.write(
            &format!("classical_current_{tag}.csv"),
            Stage::Classical,
            &values_csv(&cfg.x, "current", &c.current.values),
        ))?;
        if est == cfg.classical_estimator {
            let m = c.moments;
            let text = format!(
                "mean_q,var_q,mean_p,var_p\n{:.10e},{:.10e},{:.10e},{:.10e}\n",
                m.mean_q, m.var_q, m.mean_p, m.var_p
            );
            out_err(w.write("classical_moments.csv", Stage::Classical, &text))?;
            println!(
                "E[q]={:.6} Var[q]={:.6} E[p]={:.6} Var[p]={:.6}",
                m.mean_q, m.var_q, m.mean_p, m.var_p
            );
            if !c.density.caustic_cells.is_empty() {
                println!("caustic cells: {}", c.density.caustic_cells.len());
            }
        }
    }
    out_err(w.finish("classical", cfg, None))?;
    Ok(())
}

fn cmd_zdiag(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for &e in &cfg.sweep.eps {
        let c = cfg.with_eps(e);
        let g = run_gwpt(&c, true)?;
        let d = zdiag(&c, &g)?;
        println!(
            "eps={:.6e} max dz Re psi={:.4} max dz Re w={:.4}",
            d.eps, d.psi, d.w
        );
        rows.push(d);
    }
    let mut w = out_err(ReportWriter::new(out))?;
    out_err(w.write("zdiag.csv", Stage::Stats, &zdiag_table(&rows)))?;
    out_err(w.finish("zdiag", cfg, None))?;
    Ok(())
}

fn cmd_timing(cfg: &ExperimentConfig, out: &Path, eps: &[f64], warmup: bool) -> Result<()> {
    let mut rows = Vec::new();
    for &e in eps {
        let r = timing(&cfg.with_eps(e), warmup)?;
        println!(
            "eps={:.6e} n_x={} gwpt={:.3}s ds={:.3}s ratio={:.2}",
            r.eps,
            r.n_x,
            r.timings.gwpt_total(),
            r.timings.reference,
            r.ratio()
        );
        rows.push(r);
    }
    let mut w = out_err(ReportWriter::new(out))?;
    out_err(w.write("timing.csv", Stage::Reference, &timing_table(&rows)))?;
    out_err(w.finish("timing", cfg, None))?;
    Ok(())
}
