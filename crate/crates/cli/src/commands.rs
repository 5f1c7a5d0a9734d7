use std::fs;
use std::io::Write;
use std::path::Path;

use binmarket::arbitrage::find_arbitrage;
use binmarket::cps::{construct_cps, verify_cps, CpsTolerance};
use binmarket::format::{fmt_num, round_sig};
use binmarket::solver::{m_lambda_membership, solve_lambda_c, LambdaCReport, MembershipStatus, SolverConfig};
use binmarket::{compute_rho, MarketConfig, MarketTree, Measure};
use serde_json::Value;

use crate::{Command, Failure, RunConfig};

type Outcome<T = ()> = Result<T, Failure>;

const ARGMAX_NUDGE: f64 = 1e-6;

pub fn run(cfg: &RunConfig) -> Outcome {
    let market = load_config(cfg)?;
    match cfg.command {
        Command::Validate => validate(cfg, &market),
        Command::LambdaC => lambda_c(cfg, &market.to_tree()?),
        Command::Sweep => sweep(cfg, &market.to_tree()?),
        Command::Rho => rho(cfg, &market.to_tree()?),
        Command::Cps => cps(cfg, &market.to_tree()?),
        Command::Arbitrage => arbitrage(cfg, &market.to_tree()?),
    }
}

fn load_config(cfg: &RunConfig) -> Outcome<MarketConfig> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| Failure::Usage("--input is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    MarketConfig::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(cfg: &RunConfig, bytes: &[u8]) -> Outcome {
    let result = match &cfg.output {
        Some(path) => fs::write(path, bytes).map_err(|e| (path.as_path(), e)),
        None => std::io::stdout().write_all(bytes).map_err(|e| (Path::new("stdout"), e)),
    };
    result.map_err(|(p, e)| Failure::Usage(format!("{}: {e}", p.display())))
}

fn solver_config(cfg: &RunConfig) -> SolverConfig {
    let base = SolverConfig {
        grid_m: cfg.grid,
        refine_budget: cfg.budget,
        seed: cfg.seed,
        ..SolverConfig::default()
    };
    if cfg.numeric_only {
        base.numeric_only()
    } else {
        base
    }
}

fn require_lambda(cfg: &RunConfig) -> Outcome<f64> {
    cfg.lambda.ok_or_else(|| Failure::Usage("--lambda is required".into()))
}

/// Rounds every float in a JSON tree to the shared output precision.
fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            *v = serde_json::json!(round_sig(n.as_f64().expect("f64 number")));
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn validate(cfg: &RunConfig, market: &MarketConfig) -> Outcome {
    let tree = market.build_unchecked()?;
    let violations = tree.validate();
    let mut out = String::new();
    if violations.is_empty() {
        out.push_str(&format!("valid: N={}, {} nodes\n", tree.horizon(), (1usize << tree.horizon()) - 1));
        emit(cfg, out.as_bytes())
    } else {
        for v in &violations {
            out.push_str(&format!("{v}\n"));
        }
        emit(cfg, out.as_bytes())?;
        Err(Failure::Domain(format!("{} node constraint violation(s)", violations.len())))
    }
}

fn lambda_c(cfg: &RunConfig, tree: &MarketTree) -> Outcome {
    let report = solve_lambda_c(tree, &solver_config(cfg))?;
    let mut value = serde_json::to_value(&report).expect("report serializes");
    round_floats(&mut value);
    let mut text = serde_json::to_string_pretty(&value).expect("json value serializes");
    text.push('\n');
    emit(cfg, text.as_bytes())
}

fn status_name(s: MembershipStatus) -> &'static str {
    match s {
        MembershipStatus::Member => "member",
        MembershipStatus::BoundaryOnly => "boundary_only",
        MembershipStatus::NonMember => "non_member",
    }
}

fn sweep(cfg: &RunConfig, tree: &MarketTree) -> Outcome {
    let range = cfg
        .sweep
        .ok_or_else(|| Failure::Usage("--sweep start:stop:count is required".into()))?;
    let report = solve_lambda_c(tree, &solver_config(cfg))?;
    let q = &report.argmax_measure;
    let score = compute_rho(tree, q)?.score();
    let lambdas = range.values();

    // rows are independent; compute them in parallel and emit in order
    let rows: Vec<Outcome<String>> = std::thread::scope(|s| {
        let handles: Vec<_> = lambdas
            .iter()
            .map(|&lambda| {
                s.spawn(move || -> Outcome<String> {
                    let arbitrage = find_arbitrage(tree, lambda, cfg.lp_cap)?.is_some();
                    let member = m_lambda_membership(tree, q, lambda, cfg.tol)?;
                    Ok(format!(
                        "{},{},{},{}\n",
                        fmt_num(lambda),
                        arbitrage,
                        status_name(member.status),
                        fmt_num(score - (1.0 - lambda))
                    ))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep row panicked")).collect()
    });
    let mut out = String::from("lambda,arbitrage_exists,membership_of_Qstar,rho_gap\n");
    for row in rows {
        out.push_str(&row?);
    }
    emit(cfg, out.as_bytes())
}

/// The measure named by `--measure`, with the solver report when one was
/// needed to find it.
fn pick_measure(cfg: &RunConfig, tree: &MarketTree) -> Outcome<(Measure, Option<LambdaCReport>)> {
    match cfg.measure.as_str() {
        "q0" => Ok((tree.emm_q0()?, None)),
        "one-step" => Ok((tree.one_step_measure(), None)),
        "argmax" => {
            let report = solve_lambda_c(tree, &solver_config(cfg))?;
            Ok((report.argmax_measure.clone(), Some(report)))
        }
        path => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            let q: Measure =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            if q.horizon() != tree.horizon() {
                return Err(Failure::Domain(format!(
                    "measure has horizon {} but the market has N={}",
                    q.horizon(),
                    tree.horizon()
                )));
            }
            Ok((q, None))
        }
    }
}

fn rho(cfg: &RunConfig, tree: &MarketTree) -> Outcome {
    let (q, _) = pick_measure(cfg, tree)?;
    let mut out = Vec::new();
    compute_rho(tree, &q)?.write_csv(&mut out).expect("write to memory");
    emit(cfg, &out)
}

fn cps(cfg: &RunConfig, tree: &MarketTree) -> Outcome {
    let lambda = require_lambda(cfg)?;
    let (q, report) = pick_measure(cfg, tree)?;
    // The maximizer may sit on the boundary; nudge it inside so Q ~ P.
    let q = if report.is_some() { q.interiorized(ARGMAX_NUDGE) } else { q };
    let process = construct_cps(tree, &q, lambda, cfg.selection.into(), cfg.tol)?;
    let tolerance = CpsTolerance {
        bounds: cfg.tol,
        ..CpsTolerance::default()
    };
    let violations = verify_cps(tree, &q, &process, lambda, tolerance)?;
    if !violations.is_empty() {
        let listing: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure::NoCps(format!(
            "constructed process fails verification:\n{}",
            listing.join("\n")
        )));
    }
    let mut out = Vec::new();
    process.write_csv(tree, &mut out).expect("write to memory");
    emit(cfg, &out)
}

fn arbitrage(cfg: &RunConfig, tree: &MarketTree) -> Outcome {
    let lambda = require_lambda(cfg)?;
    match find_arbitrage(tree, lambda, cfg.lp_cap)? {
        Some(strategy) => {
            let mut out = Vec::new();
            strategy.write_csv(tree, lambda, &mut out).expect("write to memory");
            emit(cfg, &out)
        }
        None => {
            eprintln!("no arbitrage at lambda = {}", fmt_num(lambda));
            Ok(())
        }
    }
}
