use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use qmdp_core::bench::{self, BenchRow};
use qmdp_core::dp::value_iteration;
use qmdp_core::eval::exact_distribution_capped;
use qmdp_core::io::{policy_from_json, policy_to_json, value_dump_csv, Problem};
use qmdp_core::mdp;
use qmdp_core::quantile::{iteration_bound, HorizonMode};
use qmdp_core::wealth::WealthKind;
use qmdp_core::{
    backward_induction, brute_force_optimal_quantile, quantile_certificate, simulate, solve_quantile,
    standard_backward_induction, Criterion, DataCenterConfig, Error, GarnetConfig, Horizon, Mdp, QuantileQuery,
    Result, SolveReport, WealthDistribution, WealthSpace,
};
use serde_json::json;

use crate::output::{emit, write_atomic};
use crate::{BenchDatacenterArgs, BenchGarnetArgs, DatacenterArgs, EvalArgs, GarnetArgs, HorizonArg, OracleArgs, SolveArgs};

/// Confidence level of the band reported for Monte Carlo evaluations.
const MC_CONFIDENCE: f64 = 0.99;

fn load_problem(path: &Path) -> Result<Problem> {
    Problem::from_json(&fs::read_to_string(path)?)
}

fn space_for(m: &Mdp, gamma: Option<f64>) -> Result<WealthSpace> {
    match gamma {
        Some(g) => WealthSpace::discounted(m, g),
        None => Ok(WealthSpace::additive(m)),
    }
}

/// Replaces the horizon and refits the wealth bounds to it.
fn with_horizon(problem: Problem, horizon: Horizon) -> Result<Problem> {
    let mdp = problem.mdp.with_horizon(horizon);
    let space = match problem.space.kind() {
        WealthKind::Additive => WealthSpace::additive(&mdp),
        WealthKind::Discounted { gamma } => WealthSpace::discounted(&mdp, *gamma)?,
        WealthKind::Ordinal(_) => problem.space,
    };
    Ok(Problem::new(mdp, space))
}

pub fn generate_garnet(a: &GarnetArgs) -> Result<()> {
    let mut cfg = GarnetConfig::new(a.states, a.actions, a.seed);
    if let Some(b) = a.branching {
        cfg.branching = b;
    }
    cfg.horizon = Horizon::Finite(a.horizon);
    cfg.reward_low = a.reward_low;
    cfg.reward_high = a.reward_high;
    cfg.skew = a.skew;
    let m = mdp::generate_garnet(&cfg)?;
    let space = space_for(&m, a.gamma)?;
    write_atomic(&a.out, &Problem::new(m, space).to_json()?)?;
    println!(
        "garnet G({}, {}, {}), horizon {}, seed {} -> {}",
        cfg.n_states,
        cfg.n_actions,
        cfg.branching,
        a.horizon,
        a.seed,
        a.out.display()
    );
    Ok(())
}

pub fn generate_datacenter(a: &DatacenterArgs) -> Result<()> {
    let mut cfg = DataCenterConfig::new(a.servers);
    cfg.horizon = Horizon::Finite(a.horizon);
    cfg.alpha = a.alpha;
    cfg.beta = a.beta;
    cfg.kappa = a.kappa;
    let m = mdp::generate_datacenter(&cfg)?;
    let space = space_for(&m, a.gamma)?;
    let (n_states, n_actions) = (m.n_states(), m.n_actions());
    write_atomic(&a.out, &Problem::new(m, space).to_json()?)?;
    println!(
        "datacenter with {} servers: {n_states} states, {n_actions} actions, horizon {} -> {}",
        a.servers,
        a.horizon,
        a.out.display()
    );
    Ok(())
}

fn describe(space: &WealthSpace, w: f64) -> String {
    match space.ordinal_scale() {
        Some(scale) if w >= 0.0 && (w as usize) < scale.len() => format!("{} ({w})", scale.classes()[w as usize]),
        _ => format!("{w}"),
    }
}

fn iteration_log(report: &SolveReport) -> String {
    let mut out = String::from("iteration,w,p,accepted\n");
    for (i, r) in report.log.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i + 1, r.w, r.p, r.accepted);
    }
    if let Some(r) = report.final_solve {
        let _ = writeln!(out, "final,{},{},{}", r.w, r.p, r.accepted);
    }
    out
}

pub fn solve(a: &SolveArgs) -> Result<()> {
    let mut problem = load_problem(&a.problem)?;
    match a.horizon {
        Some(HorizonArg::Finite(t)) => problem = with_horizon(problem, Horizon::Finite(t))?,
        Some(HorizonArg::Infinite) => problem = with_horizon(problem, Horizon::Infinite)?,
        None => {}
    }
    let mode = match problem.mdp.horizon() {
        Horizon::Finite(_) => HorizonMode::Finite,
        Horizon::Infinite => HorizonMode::Infinite { eps_conv: a.eps_conv, max_sweeps: a.max_sweeps },
    };
    let mut query = QuantileQuery::new(a.tau, a.criterion, a.epsilon)?.with_horizon_mode(mode);
    if let Some((lo, hi)) = a.bounds {
        query = query.with_bounds(lo, hi);
    }
    let (m, space) = (&problem.mdp, &problem.space);
    let report = solve_quantile(m, space, &query)?;

    println!("{} {}-quantile estimate: {}", a.criterion, a.tau, describe(space, report.quantile_estimate));
    println!("bracket: [{}, {}]", report.bracket.0, report.bracket.1);
    println!("iterations: {} (bound {})", report.iterations, iteration_bound(space, &query));
    if report.at_bottom {
        println!("note: no threshold was accepted; the optimum is at the bottom of the search range");
    }
    if mode == HorizonMode::Finite {
        match quantile_certificate(m, space, &report, &query) {
            Ok(ok) => println!("certificate: {}", if ok { "holds" } else { "fails" }),
            Err(Error::Resource(msg)) => println!("certificate: skipped ({msg})"),
            Err(e) => return Err(e),
        }
    }

    if let Some(path) = &a.out {
        write_atomic(path, &policy_to_json(&report.policy)?)?;
    }
    if let Some(path) = &a.log {
        write_atomic(path, &iteration_log(&report))?;
    }
    if let Some(path) = &a.dump_values {
        // the threshold whose solve produced the returned policy
        let w = report
            .final_solve
            .map(|r| r.w)
            .or_else(|| report.log.iter().rev().find(|r| r.accepted).map(|r| r.w))
            .unwrap_or(report.bracket.0);
        let strict = a.criterion.strict();
        let values = match mode {
            HorizonMode::Finite => backward_induction(m, space, w, strict)?.values,
            HorizonMode::Infinite { eps_conv, max_sweeps } => value_iteration(m, space, w, strict, eps_conv, max_sweeps)?.values,
        };
        write_atomic(path, &value_dump_csv(&values))?;
    }
    Ok(())
}

enum Method {
    Exact,
    MonteCarlo { samples: usize, band: f64 },
}

fn quantile_or_none(d: &WealthDistribution, tau: f64, criterion: Criterion) -> Option<f64> {
    d.quantile(tau, criterion).ok()
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let problem = load_problem(&a.problem)?;
    let (m, space) = (&problem.mdp, &problem.space);
    let policy = match &a.policy {
        Some(path) => policy_from_json(&fs::read_to_string(path)?)?,
        None => standard_backward_induction(m, space)?.policy(),
    };
    if let Err(e) = policy.check_shape(m.n_states(), m.n_actions(), m.horizon().finite()) {
        return Err(Error::Config(format!("policy does not fit the problem: {e}")));
    }

    let (dist, method) = match exact_distribution_capped(m, space, &policy, a.atom_cap) {
        Ok(d) => (d, Method::Exact),
        Err(Error::Resource(msg)) => {
            eprintln!("note: {msg}; simulating {} episodes instead", a.samples);
            let samples = simulate(m, space, &policy, a.samples, a.seed)?;
            // Dvoretzky-Kiefer-Wolfowitz band on the empirical CDF
            let band = ((2.0 / (1.0 - MC_CONFIDENCE)).ln() / (2.0 * a.samples as f64)).sqrt();
            (WealthDistribution::empirical(&samples)?, Method::MonteCarlo { samples: a.samples, band })
        }
        Err(e) => return Err(e),
    };

    let ordinal = space.ordinal_scale();
    let mut csv = String::from(if ordinal.is_some() { "wealth,class,probability,F,G\n" } else { "wealth,probability,F,G\n" });
    for (w, p, f, g) in dist.table() {
        match ordinal {
            Some(scale) => {
                let _ = writeln!(csv, "{w},{},{p},{f},{g}", scale.classes()[w as usize]);
            }
            None => {
                let _ = writeln!(csv, "{w},{p},{f},{g}");
            }
        }
    }
    emit(a.out.as_deref(), &csv)?;

    let quantiles: Vec<_> = a
        .taus
        .iter()
        .map(|&tau| {
            json!({
                "tau": tau,
                "lower": quantile_or_none(&dist, tau, Criterion::Lower),
                "upper": quantile_or_none(&dist, tau, Criterion::Upper),
            })
        })
        .collect();
    let mut summary = json!({
        "policy": if a.standard { "expectation-optimal" } else { "file" },
        "atoms": dist.len(),
        "mean": if ordinal.is_some() { None } else { Some(dist.mean()) },
        "quantiles": quantiles,
    });
    match method {
        Method::Exact => summary["method"] = json!("exact"),
        Method::MonteCarlo { samples, band } => {
            summary["method"] = json!("monte_carlo");
            summary["samples"] = json!(samples);
            summary["seed"] = json!(a.seed);
            summary["cdf_band"] = json!(band);
            summary["confidence"] = json!(MC_CONFIDENCE);
        }
    }
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    match &a.summary {
        Some(path) => write_atomic(path, &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn report_rows(header: &str, rows: &[BenchRow], out: Option<&Path>) -> Result<()> {
    emit(out, &bench::rows_to_csv(header, rows))?;
    let trending = rows.windows(2).all(|w| w[0].mean_secs <= w[1].mean_secs);
    eprintln!("runtime nondecreasing over the grid: {}", if trending { "yes" } else { "no" });
    Ok(())
}

pub fn bench_garnet(a: &BenchGarnetArgs) -> Result<()> {
    let rows = bench::bench_garnet(&a.states, a.actions, a.horizon, a.reps, a.seed)?;
    report_rows("n_states", &rows, a.out.as_deref())
}

pub fn bench_datacenter(a: &BenchDatacenterArgs) -> Result<()> {
    let rows = bench::bench_datacenter(a.servers, &a.horizons, a.reps)?;
    report_rows("horizon", &rows, a.out.as_deref())
}

pub fn oracle_check(a: &OracleArgs) -> Result<()> {
    let mut runs = 0;
    let mut failures = 0;
    for i in 0..a.instances {
        let mut cfg = GarnetConfig::new(4, 2, a.seed.wrapping_add(i as u64));
        cfg.branching = 2;
        cfg.horizon = Horizon::Finite(3);
        let m = mdp::generate_garnet(&cfg)?;
        let space = WealthSpace::additive(&m);
        for tau in [0.1, 0.5, 0.9] {
            for criterion in [Criterion::Lower, Criterion::Upper] {
                let query = QuantileQuery::new(tau, criterion, a.epsilon)?;
                let report = solve_quantile(&m, &space, &query)?;
                let (best, _) = brute_force_optimal_quantile(&m, &space, tau, criterion)?;
                let certified = quantile_certificate(&m, &space, &report, &query)?;
                runs += 1;
                if (report.quantile_estimate - best).abs() > a.epsilon || !certified {
                    failures += 1;
                    println!(
                        "mismatch: seed {} tau {tau} {criterion}: solver {} oracle {best} certificate {certified}",
                        cfg.seed, report.quantile_estimate
                    );
                }
            }
        }
    }
    println!("oracle-check: {}/{runs} runs agree within {}", runs - failures, a.epsilon);
    if failures > 0 {
        std::process::exit(1);
    }
    Ok(())
}
