use std::path::{Path, PathBuf};

use stot_nts::calib::{self, CalibOptions, CalibResult, ErrorReport, Metric, ModelKind, OptionQuote};
use stot_nts::garch;
use stot_nts::nts::TailShape;
use stot_nts::pricer::{self, OptionKind, ScenarioCube, SimulationOptions};
use stot_nts::tails::{self, ArimaFitReport};

use crate::config::RunConfig;
use crate::error::{input, CliError};
use crate::io::{self, num, Report};

fn csv_writer(path: &Path) -> Result<csv::Writer<std::io::BufWriter<std::fs::File>>, CliError> {
    Ok(csv::Writer::from_writer(io::create(path)?))
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| input(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str, key: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| input(format!("no {what} file: pass it as an argument or set input.{key}")))
}

pub fn fit_garch(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let path = required(&cfg.input.returns, "returns", "returns")?;
    let returns = io::read_returns(path)?;
    let windows = garch::rolling_residual_sets(&returns, cfg.fit.window, cfg.fit.step)?;

    let mut rows = Vec::new();
    let mut archive = io::ResidualArchive::new();
    let mut failed = 0;
    for w in &windows {
        match &w.outcome {
            Ok(f) => {
                let p = &f.params;
                let mut row = vec![w.end.to_string(), "ok".into()];
                row.extend([p.c, p.a, p.b, p.kappa, p.xi, p.zeta, f.last_sigma, f.last_residual, f.last_y, f.log_likelihood].map(num));
                rows.push(row);
                archive.insert(w.end, f.residuals.clone());
            }
            Err(e) => {
                failed += 1;
                let mut row = vec![w.end.to_string(), e.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 10));
                rows.push(row);
            }
        }
    }
    write_rows(
        &out.join("garch_params.csv"),
        &["window_end", "status", "c", "a", "b", "kappa", "xi", "zeta", "last_sigma", "last_residual", "last_y", "log_likelihood"],
        &rows,
    )?;
    if archive.is_empty() {
        let first = windows.into_iter().next().and_then(|w| w.outcome.err());
        return Err(first.map_or_else(|| input("no windows fitted"), CliError::from));
    }
    io::write_residuals(&out.join("residuals.csv"), &archive)?;

    let mut rep = Report::new("fit-garch", cfg.seed, &cfg.hash);
    rep.kv("observations", returns.len());
    rep.kv("window", cfg.fit.window);
    rep.kv("step", cfg.fit.step);
    rep.kv("windows", windows.len());
    rep.kv("failed_windows", failed);
    if let Some(f) = windows.iter().rev().find_map(|w| w.outcome.as_ref().ok()) {
        rep.section("latest");
        let p = &f.params;
        for (k, v) in [("c", p.c), ("a", p.a), ("b", p.b), ("kappa", p.kappa), ("xi", p.xi), ("zeta", p.zeta)] {
            rep.num(k, v);
        }
        rep.num("sigma0", f.last_sigma);
        rep.num("eps0", f.last_residual);
        rep.num("y0", f.last_y);
        rep.num("log_likelihood", f.log_likelihood);
    }
    rep.write(&out.join("fit_garch_report.txt"))?;
    println!("fitted {} of {} windows", windows.len() - failed, windows.len());
    Ok(())
}

fn write_arima(rep: &mut Report, r: &ArimaFitReport) {
    for e in &r.estimates {
        rep.num(e.name, e.estimate);
        rep.num(&format!("{}_std_error", e.name), e.std_error);
        rep.num(&format!("{}_t", e.name), e.t_statistic);
        rep.num(&format!("{}_p", e.name), e.p_value);
    }
    rep.num("log_likelihood", r.log_likelihood);
    rep.kv("unit_root_warning", r.unit_root_warning);
    rep.kv("degenerate", r.degenerate);
}

pub fn fit_tails(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let path = required(&cfg.input.residuals, "residual archive", "residuals")?;
    let archive = io::read_residuals(path)?;
    let points: Vec<(f64, f64)> = archive.values().map(|r| garch::sample_moments(r)).collect::<Result<_, _>>()?;

    let mut rep = Report::new("fit-tails", cfg.seed, &cfg.hash);
    rep.kv("windows", archive.len());
    rep.section("tail_shape");
    let (alpha, theta) = if points.len() >= tails::MIN_CURVE_POINTS {
        let fit = tails::fit_alpha_theta(&points)?;
        rep.kv("source", "fitted");
        rep.num("mse", fit.mse);
        (fit.alpha, fit.theta)
    } else if let Some(t) = cfg.tails {
        eprintln!(
            "warning: {} windows are too few to fit alpha and theta (need {}); using [tails] from the config",
            points.len(),
            tails::MIN_CURVE_POINTS
        );
        rep.kv("source", "config");
        (t.alpha, t.theta)
    } else {
        return Err(input(format!(
            "fitting alpha and theta needs at least {} windows, got {}; set [tails] to fit B only",
            tails::MIN_CURVE_POINTS,
            points.len()
        )));
    };
    rep.num("alpha", alpha);
    rep.num("theta", theta);

    let mut rows = Vec::new();
    let mut bs = Vec::new();
    for ((end, res), (s, k)) in archive.iter().zip(&points) {
        let fit = tails::fit_b(res, alpha, theta, Some(cfg.fit.b_table_grid))?;
        bs.push(fit.b);
        rows.push(vec![end.to_string(), num(*s), num(*k), num(fit.b), num(fit.objective)]);
    }
    write_rows(&out.join("b_series.csv"), &["window_end", "skewness", "excess_kurtosis", "b", "objective"], &rows)?;

    rep.section("b_dynamics");
    if bs.len() >= tails::MIN_ARIMA_LENGTH {
        let (d, r) = tails::fit_arima110(&bs, cfg.fit.include_constant)?;
        write_arima(&mut rep, &r);
        rep.num("sigma_b", d.sigma_b);
        rep.num("b0", d.b0);
        rep.num("db0", d.db0);
    } else {
        eprintln!("warning: {} B values are too few for the ARIMA fit (need {})", bs.len(), tails::MIN_ARIMA_LENGTH);
        rep.kv("status", "skipped");
        rep.num("b0", *bs.last().unwrap());
    }
    rep.write(&out.join("tails_report.txt"))?;
    println!("alpha = {alpha:.6}, theta = {theta:.6}, {} B values", bs.len());
    Ok(())
}

fn simulate_cube(cfg: &RunConfig) -> Result<ScenarioCube, CliError> {
    let (g, mkt, t, d) = (cfg.garch()?, cfg.market()?, cfg.tails()?, cfg.dynamics()?);
    let sim = &cfg.simulation;
    let shape = TailShape::new(t.alpha, t.theta)?;
    let randoms = pricer::generate_randoms(sim.paths, sim.steps, cfg.seed)?;
    let table = pricer::subordinator_table(shape, sim.table_grid)?;
    let opts = SimulationOptions { use_dividend: sim.use_dividend, table_grid: sim.table_grid };
    Ok(pricer::simulate_with_table(&randoms, &d, &g, &mkt, shape, &table, &opts)?)
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let cube = simulate_cube(cfg)?;
    let path = out.join("scenarios.csv");
    cube.write_csv(io::create(&path)?)?;
    let terminal: Vec<f64> = cube.prices_at(cube.steps).collect();
    let mut rep = Report::new("simulate", cfg.seed, &cfg.hash);
    rep.kv("paths", cube.paths);
    rep.kv("steps", cube.steps);
    rep.kv("use_dividend", cfg.simulation.use_dividend);
    rep.num("mean_terminal_price", stot_nts::stats::mean(&terminal));
    rep.write(&out.join("simulate_report.txt"))?;
    println!("wrote {} paths x {} steps to {}", cube.paths, cube.steps, path.display());
    Ok(())
}

pub fn price(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let p = &cfg.pricing;
    if p.strikes.is_empty() || p.maturities.is_empty() {
        return Err(input("[pricing] needs non-empty strikes and maturities"));
    }
    let r = cfg.market()?.r;
    let cube = simulate_cube(cfg)?;
    let mut rows = Vec::new();
    for &t in &p.maturities {
        for &k in &p.strikes {
            for kind in [OptionKind::Call, OptionKind::Put] {
                let (v, se) = pricer::price_european(&cube, k, t, r, kind)?;
                rows.push(vec![t.to_string(), num(k), io::kind_name(kind).into(), num(v), num(se)]);
            }
        }
    }
    write_rows(&out.join("prices.csv"), &["maturity", "strike", "kind", "price", "std_error"], &rows)?;
    let mut rep = Report::new("price", cfg.seed, &cfg.hash);
    rep.kv("paths", cube.paths);
    rep.kv("steps", cube.steps);
    rep.kv("prices", rows.len());
    rep.write(&out.join("price_report.txt"))?;
    println!("priced {} options", rows.len());
    Ok(())
}

fn write_errors(rep: &mut Report, e: &ErrorReport) {
    rep.num("aae", e.aae);
    rep.num("ape", e.ape);
    rep.num("arpe", e.arpe);
    rep.num("rmsre", e.rmsre);
}

fn write_comparison(rep: &mut Report, nts: &ErrorReport, stot: &ErrorReport) {
    rep.section("comparison");
    rep.kv("hypothesis", "mean error of garch_nts exceeds stot (paired one-sided t-test)");
    for (name, metric) in [("ape", Metric::Ape), ("arpe", Metric::Arpe)] {
        match calib::compare_reports(nts, stot, metric) {
            Ok(t) => {
                rep.num(&format!("{name}_mean_diff"), t.mean_diff);
                rep.num(&format!("{name}_t"), t.t_statistic);
                rep.num(&format!("{name}_p"), t.p_value);
            }
            Err(e) => rep.kv(&format!("{name}_test"), format!("failed: {e}")),
        }
    }
}

pub fn calibrate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let chain_path = required(&cfg.input.chain, "option chain", "chain")?;
    let cal_path = required(&cfg.input.calendar, "calendar", "calendar")?;
    let rows = io::read_chain(chain_path)?;
    let calendar = io::read_calendar(cal_path)?;
    let (g, mkt) = (cfg.garch()?, cfg.market()?);
    let start = cfg.calibration_start()?;

    let date = rows.first().ok_or_else(|| input(format!("{}: chain is empty", chain_path.display())))?.date;
    if let Some(r) = rows.iter().find(|r| r.date != date) {
        return Err(input(format!("chain mixes valuation dates {date} and {}", r.date)));
    }
    let mut quotes = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        let steps = io::steps_between(&calendar, date, r.expiry)?;
        if steps == 0 {
            continue;
        }
        let q = OptionQuote::new(r.strike, steps, r.kind, r.bid, r.ask)
            .map_err(|e| input(format!("{}: row {}: {e}", chain_path.display(), k + 1)))?;
        quotes.push(q);
    }
    let otm = calib::select_otm(&quotes, mkt.s0);

    let mut rep = Report::new("calibrate", cfg.seed, &cfg.hash);
    rep.kv("valuation_date", date);
    rep.kv("quotes", rows.len());
    rep.kv("selected_otm", otm.len());
    if otm.is_empty() {
        eprintln!("warning: no out-of-the-money quotes inside the maturity limit; nothing to calibrate");
        rep.kv("status", "no_otm_quotes");
        return rep.write(&out.join("calibration_report.txt"));
    }

    let horizon = otm.iter().map(|q| q.maturity_steps).max().unwrap();
    let randoms = pricer::generate_randoms(cfg.simulation.paths, horizon, cfg.seed)?;
    let opts = CalibOptions {
        sim: SimulationOptions { use_dividend: cfg.simulation.use_dividend, table_grid: cfg.calibration.table_grid },
        max_evals: cfg.calibration.max_evals,
        restarts: cfg.calibration.restarts,
        seed: cfg.seed,
    };
    rep.kv("paths", randoms.paths);
    rep.kv("horizon_steps", horizon);
    let mids: Vec<f64> = otm.iter().map(|q| q.mid()).collect();

    let mut results: Vec<Result<(CalibResult, ErrorReport), CliError>> = Vec::new();
    for (name, model) in [("garch_nts", ModelKind::GarchNts), ("stot", ModelKind::Stot)] {
        let res = calib::calibrate(&otm, &randoms, &g, &mkt, &start, model, &opts)
            .and_then(|c| calib::error_report(&c.model_prices, &mids).map(|e| (c, e)))
            .map_err(CliError::from);
        rep.section(name);
        match &res {
            Ok((c, e)) => {
                let t = &c.theta_vec;
                rep.kv("status", "ok");
                for (k, v) in [("alpha", t.alpha), ("theta", t.theta), ("a_b", t.a_b), ("sigma_b", t.sigma_b), ("b0", t.b0), ("lambda", t.lambda)] {
                    rep.num(k, v);
                }
                rep.num("objective", c.objective);
                rep.num("start_objective", c.start_objective);
                rep.kv("evaluations", c.evals);
                rep.kv("converged", c.converged);
                write_errors(&mut rep, e);
            }
            Err(e) => {
                eprintln!("warning: {name} calibration failed: {e}");
                rep.kv("status", format!("failed: {e}"));
            }
        }
        results.push(res);
    }
    if let [Ok((_, nts)), Ok((_, stot))] = &results[..] {
        write_comparison(&mut rep, nts, stot);
    }
    rep.write(&out.join("calibration_report.txt"))?;

    let price_of = |r: &Result<(CalibResult, ErrorReport), CliError>, i: usize| match r {
        Ok((c, _)) => num(c.model_prices[i]),
        Err(_) => String::new(),
    };
    let table: Vec<Vec<String>> = otm
        .iter()
        .enumerate()
        .map(|(i, q)| {
            vec![q.maturity_steps.to_string(), num(q.strike), io::kind_name(q.kind).into(), num(mids[i]), price_of(&results[0], i), price_of(&results[1], i)]
        })
        .collect();
    write_rows(&out.join("calibration_prices.csv"), &["maturity", "strike", "kind", "market", "garch_nts", "stot"], &table)?;

    let failures = results.iter().filter(|r| r.is_err()).count();
    match results.into_iter().find_map(|r| r.err()) {
        Some(e) if failures == 2 => Err(e),
        _ => {
            println!("calibrated {} quotes", otm.len());
            Ok(())
        }
    }
}

/// Error measures and model comparison from a `calibration_prices.csv`.
pub fn evaluate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let path = required(&cfg.input.prices, "model price", "prices")?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| input(format!("{}: {e}", path.display())))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| input(format!("{}: missing column {name:?}", path.display())))
    };
    let cols = [col("market")?, col("garch_nts")?, col("stot")?];
    let mut v: [Vec<f64>; 3] = Default::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| input(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (k, &c) in cols.iter().enumerate() {
            let raw = rec.get(c).unwrap_or("");
            let x = raw.parse().map_err(|_| input(format!("{}: line {line}: invalid price {raw:?}", path.display())))?;
            v[k].push(x);
        }
    }
    let nts = calib::error_report(&v[1], &v[0])?;
    let stot = calib::error_report(&v[2], &v[0])?;
    let mut rep = Report::new("evaluate", cfg.seed, &cfg.hash);
    rep.kv("quotes", v[0].len());
    rep.section("garch_nts");
    write_errors(&mut rep, &nts);
    rep.section("stot");
    write_errors(&mut rep, &stot);
    write_comparison(&mut rep, &nts, &stot);
    rep.write(&out.join("evaluation_report.txt"))?;
    println!("APE garch_nts {:.4}%, stot {:.4}%", 100.0 * nts.ape, 100.0 * stot.ape);
    Ok(())
}
