use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use stot_nts::calib::{self, OptionQuote, ThetaVec};
use stot_nts::garch::{self, FilterInit, GarchParams};
use stot_nts::nts::StdNtsParams;
use stot_nts::pricer::{self, MarketState, OptionKind, SimulationOptions};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stot-nts")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report_value(text: &str, section: &str, key: &str) -> Option<String> {
    let mut current = String::new();
    for line in text.lines() {
        if let Some(s) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = s.to_string();
        } else if let Some((k, v)) = line.split_once(" = ") {
            if current == section && k == key {
                return Some(v.to_string());
            }
        }
    }
    None
}

const MODEL_CONFIG: &str = r#"
seed = 11

[garch]
kappa = 4.4115e-6
xi = 0.2289
zeta = 0.7177

[market]
sigma0 = 0.0096
eps0 = 0.5
r = "0.4bp"
d = "0.2bp"
lambda = 0.3

[tails]
alpha = 1.8245
theta = 1.5063

[dynamics]
a_b = -0.4793
sigma_b = 0.0532
b0 = -0.2895

[simulation]
paths = 400
steps = 12
table_grid = 512

[pricing]
strikes = [0.0, 0.95, 1.0, 1.05]
maturities = [1, 6, 12]
"#;

fn garch_returns(n: usize) -> String {
    let g = GarchParams::new(0.0, 0.0, 0.0, 4.4115e-6, 0.2289, 0.7177).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let e: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y = garch::simulate(&g, FilterInit::new(0.0091, 0.0), &e);
    let mut s = String::from("date,return\n");
    for (k, v) in y.iter().enumerate() {
        s.push_str(&format!("{k},{v:.16e}\n"));
    }
    s
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&run(dir.path(), &["simulate", "--paths", "many"])), 1);
}

#[test]
fn fit_garch_on_a_single_window() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("returns.csv"), garch_returns(1000)).unwrap();
    let o = run(dir.path(), &["fit-garch", "returns.csv", "--window", "1000", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let params = fs::read_to_string(dir.path().join("out/garch_params.csv")).unwrap();
    assert_eq!(params.lines().count(), 2);
    let residuals = fs::read_to_string(dir.path().join("out/residuals.csv")).unwrap();
    assert_eq!(residuals.lines().count(), 1001);
    let rep = fs::read_to_string(dir.path().join("out/fit_garch_report.txt")).unwrap();
    assert_eq!(report_value(&rep, "", "config_sha256").unwrap(), "none");
    assert_eq!(report_value(&rep, "", "version").unwrap(), stot_nts::VERSION);
    let xi: f64 = report_value(&rep, "latest", "xi").unwrap().parse().unwrap();
    assert!(xi > 0.1 && xi < 0.4, "{xi}");
}

#[test]
fn malformed_return_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = garch_returns(400);
    text = text.replacen("\n7,", "\n7,oops", 1);
    fs::write(dir.path().join("r.csv"), text).unwrap();
    let o = run(dir.path(), &["fit-garch", "r.csv", "--window", "300"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 9"), "{}", stderr(&o));
}

#[test]
fn missing_input_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["fit-garch", "absent.csv"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("absent.csv"));
}

fn write_archive(path: &Path, windows: &[(f64, usize)], seed: u64) {
    let mut s = String::from("window_end,index,residual\n");
    for (w, &(b, n)) in windows.iter().enumerate() {
        let p = StdNtsParams::new(1.8043, 1.2544, b).unwrap();
        let table = pricer::subordinator_table(p.shape(), 1024).unwrap();
        let r = pricer::generate_randoms(1, n, seed + w as u64).unwrap();
        for (k, (&u, &x)) in r.u.iter().zip(&r.x).enumerate() {
            let v = p.from_subordinator(table.quantile(u).unwrap(), x);
            s.push_str(&format!("{},{k},{v:.16e}\n", 1000 + w));
        }
    }
    fs::write(path, s).unwrap();
}

#[test]
fn fit_tails_recovers_the_b_path() {
    let dir = tempfile::tempdir().unwrap();
    let bs: Vec<f64> = (0..12).map(|k| -0.6 + 0.1 * k as f64).collect();
    let windows: Vec<(f64, usize)> = bs.iter().map(|&b| (b, 2500)).collect();
    write_archive(&dir.path().join("res.csv"), &windows, 40);
    let o = run(dir.path(), &["fit-tails", "res.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = fs::read_to_string(dir.path().join("tails_report.txt")).unwrap();
    assert_eq!(report_value(&rep, "tail_shape", "source").unwrap(), "fitted");
    assert_eq!(report_value(&rep, "b_dynamics", "status").unwrap(), "skipped");
    let series = fs::read_to_string(dir.path().join("b_series.csv")).unwrap();
    let fitted: Vec<f64> = series.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(fitted.len(), 12);
    for (b, f) in bs.iter().zip(&fitted) {
        assert!((b - f).abs() < 0.25, "{b} vs {f}");
    }
}

#[test]
fn single_window_needs_a_configured_shape() {
    let dir = tempfile::tempdir().unwrap();
    write_archive(&dir.path().join("res.csv"), &[(-0.4, 500)], 7);
    assert_eq!(code(&run(dir.path(), &["fit-tails", "res.csv"])), 1);

    fs::write(dir.path().join("cfg.toml"), "[tails]\nalpha = 1.8043\ntheta = 1.2544\n").unwrap();
    let o = run(dir.path(), &["fit-tails", "res.csv", "--config", "cfg.toml"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("b_series.csv")).unwrap().lines().count(), 2);

    fs::write(dir.path().join("empty.csv"), "window_end,index,residual\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["fit-tails", "empty.csv"])), 1);
}

#[test]
fn simulate_and_price_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), MODEL_CONFIG).unwrap();
    for out in ["a", "b"] {
        let o = run(dir.path(), &["price", "--config", "cfg.toml", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = run(dir.path(), &["simulate", "--config", "cfg.toml", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["prices.csv", "scenarios.csv", "price_report.txt", "simulate_report.txt"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let o = run(dir.path(), &["simulate", "--config", "cfg.toml", "--seed", "12", "--out", "c"]);
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(dir.path().join("a/scenarios.csv")).unwrap(), fs::read(dir.path().join("c/scenarios.csv")).unwrap());

    let scen = fs::read_to_string(dir.path().join("a/scenarios.csv")).unwrap();
    assert_eq!(scen.lines().count(), 1 + 400 * 12);

    let prices = fs::read_to_string(dir.path().join("a/prices.csv")).unwrap();
    let rows: Vec<Vec<String>> = prices.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 3 * 4 * 2);
    for r in &rows {
        if r[1].parse::<f64>().unwrap() == 0.0 && r[2] == "put" {
            assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
        }
    }
    let rep = fs::read_to_string(dir.path().join("a/price_report.txt")).unwrap();
    assert_eq!(report_value(&rep, "", "seed").unwrap(), "11");
    assert_eq!(report_value(&rep, "", "config_sha256").unwrap().len(), 64);
}

#[test]
fn dividend_flag_changes_the_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), MODEL_CONFIG).unwrap();
    assert_eq!(code(&run(dir.path(), &["simulate", "--config", "cfg.toml", "--out", "a"])), 0);
    assert_eq!(code(&run(dir.path(), &["simulate", "--config", "cfg.toml", "--use-dividend", "--out", "b"])), 0);
    assert_ne!(fs::read(dir.path().join("a/scenarios.csv")).unwrap(), fs::read(dir.path().join("b/scenarios.csv")).unwrap());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), MODEL_CONFIG).unwrap();
    assert_eq!(code(&run(dir.path(), &["simulate", "--config", "cfg.toml", "--paths", "50"])), 1);
    assert_eq!(code(&run(dir.path(), &["simulate", "--config", "missing.toml"])), 1);
    fs::write(dir.path().join("bad.toml"), MODEL_CONFIG.replace("xi = 0.2289", "xi = 0.4")).unwrap();
    assert_eq!(code(&run(dir.path(), &["simulate", "--config", "bad.toml"])), 1);
    fs::write(dir.path().join("typo.toml"), format!("{MODEL_CONFIG}\n[extra]\nx = 1\n")).unwrap();
    assert_eq!(code(&run(dir.path(), &["simulate", "--config", "typo.toml"])), 1);
}

#[test]
fn exploding_mgf_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = MODEL_CONFIG
        .replace("kappa = 4.4115e-6", "kappa = 1.0")
        .replace("xi = 0.2289", "xi = 0.0")
        .replace("zeta = 0.7177", "zeta = 0.0")
        .replace("theta = 1.5063", "theta = 0.3")
        .replace("b0 = -0.2895", "b0 = 0.9");
    fs::write(dir.path().join("cfg.toml"), cfg).unwrap();
    let o = run(dir.path(), &["simulate", "--config", "cfg.toml"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("mgf"));
}

const CALENDAR: &str = "# trading days\n2017-05-08\n2017-05-09\n2017-05-10\n2017-05-11\n2017-05-12\n2017-05-15\n2017-05-16\n2017-05-17\n2017-05-18\n2017-05-19\n2017-05-22\n2017-05-23\n2017-05-24\n2017-05-25\n2017-05-26\n";

const CALIB_CONFIG: &str = r#"
seed = 5

[input]
calendar = "calendar.txt"

[garch]
kappa = 4.4115e-6
xi = 0.2289
zeta = 0.7177

[market]
sigma0 = 0.0046
eps0 = 0.1651
r = "0.4bp"

[simulation]
paths = 300

[calibration]
max_evals = 150
restarts = 1
table_grid = 256

[calibration.start]
alpha = 1.5
theta = 1.1
a_b = -0.3
sigma_b = 0.05
b0 = -0.2
lambda = 0.3
"#;

/// Chain priced by the model itself at `truth` on the CLI's own random cube.
fn synthetic_chain(truth: &ThetaVec) -> String {
    let g = GarchParams::new(0.0, 0.0, 0.0, 4.4115e-6, 0.2289, 0.7177).unwrap();
    let mkt = MarketState { s0: 1.0, sigma0: 0.0046, eps0: 0.1651, y0: 0.0, r: 0.4e-4, d: 0.0, lambda: 0.0 };
    // expiries 5 and 10 trading days after 2017-05-10
    let expiries = [("2017-05-17", 5usize), ("2017-05-24", 10)];
    let mut quotes = Vec::new();
    for &(_, t) in &expiries {
        for (k, kind) in [(0.97, OptionKind::Put), (0.985, OptionKind::Put), (1.015, OptionKind::Call), (1.03, OptionKind::Call)] {
            quotes.push(OptionQuote::new(k, t, kind, 0.0, 0.0).unwrap());
        }
    }
    let rnd = pricer::generate_randoms(300, 10, 5).unwrap();
    let sim = SimulationOptions { use_dividend: false, table_grid: 256 };
    let prices = calib::model_prices(truth, &quotes, &rnd, &g, &mkt, &sim).unwrap();
    let mut s = String::from("date,expiry,strike,kind,bid,ask\n");
    for (q, p) in quotes.iter().zip(prices) {
        let exp = expiries.iter().find(|e| e.1 == q.maturity_steps).unwrap().0;
        let kind = if q.kind == OptionKind::Put { "P" } else { "C" };
        s.push_str(&format!("2017-05-10,{exp},{},{kind},{:.16e},{:.16e}\n", q.strike, p * 0.99, p * 1.01));
    }
    // an in-the-money quote that selection must drop
    s.push_str("2017-05-10,2017-05-24,1.05,P,0.05,0.06\n");
    s
}

#[test]
fn calibrate_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let truth = ThetaVec { alpha: 1.6, theta: 1.0, a_b: -0.3, sigma_b: 0.05, b0: -0.3, lambda: 0.2 };
    fs::write(dir.path().join("calendar.txt"), CALENDAR).unwrap();
    fs::write(dir.path().join("cfg.toml"), CALIB_CONFIG).unwrap();
    fs::write(dir.path().join("chain.csv"), synthetic_chain(&truth)).unwrap();

    for out in ["a", "b"] {
        let o = run(dir.path(), &["calibrate", "chain.csv", "--config", "cfg.toml", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let rep = fs::read_to_string(dir.path().join("a/calibration_report.txt")).unwrap();
    assert_eq!(rep, fs::read_to_string(dir.path().join("b/calibration_report.txt")).unwrap());
    assert_eq!(report_value(&rep, "", "selected_otm").unwrap(), "8");
    assert_eq!(report_value(&rep, "", "horizon_steps").unwrap(), "10");
    for model in ["garch_nts", "stot"] {
        assert_eq!(report_value(&rep, model, "status").unwrap(), "ok");
    }
    assert_eq!(report_value(&rep, "garch_nts", "sigma_b").unwrap().parse::<f64>().unwrap(), 0.0);
    let obj = |m| report_value(&rep, m, "objective").unwrap().parse::<f64>().unwrap();
    let start = |m| report_value(&rep, m, "start_objective").unwrap().parse::<f64>().unwrap();
    assert!(obj("stot") <= start("stot") && obj("garch_nts") <= start("garch_nts"));
    assert!(report_value(&rep, "comparison", "ape_p").is_some());

    let o = run(dir.path(), &["evaluate", "a/calibration_prices.csv", "--out", "a"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ev = fs::read_to_string(dir.path().join("a/evaluation_report.txt")).unwrap();
    for model in ["garch_nts", "stot"] {
        assert_eq!(report_value(&ev, model, "ape"), report_value(&rep, model, "ape"));
    }
}

#[test]
fn all_in_the_money_chain_is_not_calibrated() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("calendar.txt"), CALENDAR).unwrap();
    fs::write(dir.path().join("cfg.toml"), CALIB_CONFIG).unwrap();
    fs::write(
        dir.path().join("chain.csv"),
        "date,expiry,strike,kind,bid,ask\n2017-05-10,2017-05-24,1.05,put,0.05,0.06\n2017-05-10,2017-05-24,0.95,call,0.05,0.06\n",
    )
    .unwrap();
    let o = run(dir.path(), &["calibrate", "chain.csv", "--config", "cfg.toml"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));
    let rep = fs::read_to_string(dir.path().join("calibration_report.txt")).unwrap();
    assert_eq!(report_value(&rep, "", "status").unwrap(), "no_otm_quotes");
    assert!(!dir.path().join("calibration_prices.csv").exists());
}

#[test]
fn chain_with_bad_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("calendar.txt"), CALENDAR).unwrap();
    fs::write(dir.path().join("cfg.toml"), CALIB_CONFIG).unwrap();
    fs::write(dir.path().join("chain.csv"), "date,expiry,strike,kind,bid,ask\n2017-05-10,2017-05-24,1.05,straddle,0.05,0.06\n").unwrap();
    let o = run(dir.path(), &["calibrate", "chain.csv", "--config", "cfg.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}
