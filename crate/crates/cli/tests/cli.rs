use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn bridgelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bridgelab")).args(args).env_remove("BRIDGELAB_THREADS").output().expect("binary runs")
}

fn run(sub: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let path = dir.join(format!("{sub}.toml"));
    fs::write(&path, config).unwrap();
    let mut args = vec![sub, "--config", path.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    bridgelab(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const PRIOR: &str = "[prior]\nepsilon = 0.3\n[prior.nonzero]\nkind = \"point_mass\"\nm = 1.0\n";

#[test]
fn theory_curve_single_method() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("delta = 0.8\nsigma = 0.5\natpp_grid = [0.2, 0.4]\n[[methods]]\nmethod = \"two_stage\"\nq = 2.0\n{PRIOR}");
    let o = run("theory-curve", &cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csvs: Vec<_> = fs::read_dir(dir.path()).unwrap().filter_map(|e| e.ok()).filter(|e| e.path().extension().is_some_and(|x| x == "csv")).collect();
    assert_eq!(csvs.len(), 1);
    let text = fs::read_to_string(csvs[0].path()).unwrap();
    assert_eq!(text.lines().next(), Some("method,q,lambda,s,atpp,afdp"));
    assert_eq!(text.lines().count(), 3);
    let m = manifest(dir.path());
    assert_eq!(m["outputs"].as_array().unwrap().len(), 1);
    assert_eq!(m["outputs"][0].as_str().unwrap(), csvs[0].file_name().to_str().unwrap());
}

#[test]
fn theory_curve_sigma_list_gives_one_file_per_level() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(
        "delta = 0.8\nsigma = [0.5, 0.22, 0.15]\natpp_grid = [0.3, 0.6]\n[[methods]]\nmethod = \"lasso\"\n[[methods]]\nmethod = \"two_stage\"\nq = 2.0\n{PRIOR}"
    );
    let o = run("theory-curve", &cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(manifest(dir.path())["outputs"].as_array().unwrap().len(), 6);
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("delta = 0.8\nsigma = 0.5\nsigmaa = 1.0\n[[methods]]\nmethod = \"lasso\"\n{PRIOR}");
    let o = run("theory-curve", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigmaa"), "{}", stderr(&o));
}

#[test]
fn nested_schema_error_reports_path() {
    let dir = TempDir::new().unwrap();
    let cfg = "delta = 0.6\nsigma = 0.0\nq = 2.0\n[prior]\nepsilon = 0.4\n[prior.nonzero]\nkind = \"point_mass\"\nm = \"eight\"\n";
    let o = run("tune", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("prior.nonzero"), "{}", stderr(&o));
}

const SPIKE: &str = "[prior]\nepsilon = 0.4\n[prior.nonzero]\nkind = \"point_mass\"\nm = 8.0\n";

fn parse_row(row: &[String]) -> Vec<f64> {
    row.iter().map(|c| c.parse().unwrap()).collect()
}

#[test]
fn tune_reproduces_noiseless_ridge_amse() {
    let dir = TempDir::new().unwrap();
    let o = run("tune", &format!("delta = 0.6\nsigma = 0.0\nq = 2.0\n{SPIKE}"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("q,alpha,tau,lambda,amse\n"));
    let amse = parse_row(&rows(&dir.path().join("tune.csv"))[0])[4];
    assert!((amse - 10.2).abs() < 0.15, "amse {amse}");
}

#[test]
fn lambda_map_round_trips_tuned_lambda() {
    let dir = TempDir::new().unwrap();
    let head = "delta = 0.6\nsigma = 0.5\n";
    let o = run("tune", &format!("{head}q = [1.5, 2.0]\n{SPIKE}"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for row in rows(&dir.path().join("tune.csv")) {
        let v = parse_row(&row);
        let (q, alpha, tau, lambda, amse) = (v[0], v[1], v[2], v[3], v[4]);
        let map = TempDir::new().unwrap();
        let o = run("lambda-map", &format!("{head}q = {q}\nlambdas = [{lambda:.16e}]\n{SPIKE}"), map.path(), &[]);
        assert!(o.status.success(), "{}", stderr(&o));
        let back = parse_row(&rows(&map.path().join("lambda_map.csv"))[0]);
        assert_eq!(back[0], lambda);
        assert!((back[1] - alpha).abs() < 1e-6 * alpha, "q={q}: {} vs {alpha}", back[1]);
        assert!((back[2] - tau).abs() < 1e-6 * tau);
        assert!((back[3] - amse).abs() < 1e-6 * amse);
    }
}

#[test]
fn asymptote_c_q_peaks_at_two() {
    let dir = TempDir::new().unwrap();
    let o = run("asymptote", "regime = \"c_q\"\nq_range = [1.1, 4.0, 0.1]\n", dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&dir.path().join("asymptote.csv"));
    assert_eq!(r.len(), 30);
    let best = r.iter().max_by(|a, b| a[2].parse::<f64>().unwrap().total_cmp(&b[2].parse::<f64>().unwrap())).unwrap();
    assert!((best[0].parse::<f64>().unwrap() - 2.0).abs() < 1e-9);
    assert!((best[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
    assert!(r.iter().all(|row| row[1] == "c_q"));
}

#[test]
fn asymptote_regime_violation_exits_4() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("regime = \"low_noise\"\nq = [1.5]\nsigma = 0.01\ndelta = 0.5\n{PRIOR}");
    let o = run("asymptote", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

fn simulate_config(replicates: usize) -> String {
    format!(
        "p = 200\ndelta = 0.8\nsigma = 0.5\nreplicates = {replicates}\nseed = 7\natpp_grid = [0.2, 0.5]\n\
         [[methods]]\nmethod = \"lasso\"\n[[methods]]\nmethod = \"two_stage\"\nq = 2.0\n{PRIOR}"
    )
}

#[test]
fn simulate_is_byte_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let start = std::time::Instant::now();
    let oa = run("simulate", &simulate_config(3), a.path(), &["--threads", "1"]);
    assert!(oa.status.success(), "{}", stderr(&oa));
    assert!(start.elapsed().as_secs() < 60);
    let ob = run("simulate", &simulate_config(3), b.path(), &["--threads", "1"]);
    assert!(ob.status.success(), "{}", stderr(&ob));
    let (ra, rb) = (fs::read(a.path().join("report.csv")).unwrap(), fs::read(b.path().join("report.csv")).unwrap());
    assert_eq!(ra, rb);
    assert!(String::from_utf8(ra).unwrap().starts_with("method,q,atpp,mean_fdp,std_fdp,mean_mse\n"));
    let m = manifest(a.path());
    assert_eq!(m["seed"], 7);
    assert_eq!(m["tasks"].as_array().unwrap().len(), 3);
    assert_eq!(m["config"]["p"], 200);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let o = run("simulate", &simulate_config(1), dir.path(), &["--seed", "99"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(manifest(dir.path())["seed"], 99);
}

#[test]
fn zero_replicates_exit_2() {
    let dir = TempDir::new().unwrap();
    let o = run("simulate", &simulate_config(0), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn knockoff_needs_tall_design() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("fdr_target = 0.2\n{}", simulate_config(1));
    let o = run("knockoff", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn knockoff_writes_replicate_table() {
    let dir = TempDir::new().unwrap();
    let cfg = "p = 40\ndelta = 3.0\nsigma = 0.5\nreplicates = 2\nseed = 3\nfdr_target = 0.2\n[[methods]]\nmethod = \"two_stage\"\nq = 1.0\n[prior]\nepsilon = 0.2\n[prior.nonzero]\nkind = \"point_mass\"\nm = 3.0\n";
    let o = run("knockoff", cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&dir.path().join("knockoff.csv"));
    assert_eq!(r.len(), 2);
    assert!(manifest(dir.path())["summary"]["mean_fdp"].is_number());
}

#[test]
fn zero_threads_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run("tune", &format!("delta = 0.6\nsigma = 0.1\nq = 2.0\n{PRIOR}"), dir.path(), &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
