use clap::{Parser, Subcommand, ValueEnum};
use num::bigint::BigUint;
use quadfix::asreg::{RateCalc, SigmaVariant};
use quadfix::config::{Config, OracleCfg};
use quadfix::engine::{
    check_embedding, kkt_oracle, mu_scaled_embedding, residuals, run_with_monitors, vip_residual,
    ProblemInstance, Trajectory,
};
use quadfix::hilbert::HilbertPoint;
use quadfix::meta::{Counterfunction, MetaParams};
use quadfix::ratekit::{ExtNat, DEFAULT_CAP};
use quadfix::report::Report;
use quadfix::verify::{
    find_metastable_n, verify_asreg, verify_cauchy_gap, xu_lemma_oracle, Combinator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;

#[derive(Parser)]
#[command(name = "quadfix", about = "Xu iteration solver, rate calculator and verifier")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Saturation cap for rate values.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: u64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Overrides verify.kmax from the config.
    #[arg(long, global = true)]
    kmax: Option<u64>,
    /// Overrides verify.budget from the config.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the iteration and write the trajectory with residuals.
    Solve,
    /// Tabulate every rate function for k up to kmax.
    Rates,
    /// Run a verification suite; exit 0 only if all checks pass.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Check that the iteration reproduces Yamada's hybrid steepest
    /// descent recursion, plus a mu-scaled variant.
    CompareYamada,
    /// Solve the reference problem exactly and report the gap to the
    /// iterate, with a variational-inequality residual.
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Asreg,
    Gap,
    Meta,
    Xulemma,
    Tau,
    Embedding,
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => exit(0),
        Ok(false) => exit(1),
        Err(e) => {
            eprintln!("error: {e}");
            exit(2);
        }
    }
}

fn run(cli: &Cli) -> Result<bool, String> {
    match cli.cmd {
        Cmd::Solve => cmd_solve(cli),
        Cmd::Rates => cmd_rates(cli),
        Cmd::Verify { suite } => cmd_verify(cli, suite),
        Cmd::CompareYamada => cmd_compare_yamada(cli),
        Cmd::Oracle => cmd_oracle(cli),
    }
}

fn load_config(cli: &Cli) -> Result<Config, String> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| "--config is required for this command".to_string())?;
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Config::from_json(&text).map_err(|e| e.to_string())
}

fn write_atomic(dir: &Path, name: &str, content: &str) -> Result<PathBuf, String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let dest = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, content).map_err(|e| format!("{}: {e}", tmp.display()))?;
    fs::rename(&tmp, &dest).map_err(|e| format!("{}: {e}", dest.display()))?;
    Ok(dest)
}

fn oracle_point(cfg: &Config, inst: &ProblemInstance) -> Result<Option<HilbertPoint>, String> {
    match &cfg.oracle {
        None => Ok(None),
        Some(OracleCfg::Affine { span, offset }) => kkt_oracle(&inst.a, &inst.u, span, offset)
            .map(Some)
            .map_err(|e| e.to_string()),
        Some(OracleCfg::Ball { center, radius }) => {
            // nearest-point formula; only valid when A is the identity
            let d = inst.dim();
            let id = nalgebra::DMatrix::<f64>::identity(d, d);
            if (inst.a.matrix() - id).norm() > 1e-12 {
                return Err("ball oracle requires A to be the identity".into());
            }
            let c = nalgebra::DVector::from_column_slice(center);
            let diff = inst.u.coords() - &c;
            let n = diff.norm();
            let x = if n <= *radius { inst.u.coords().clone() } else { c + diff * (*radius / n) };
            Ok(Some(HilbertPoint::from_dvector(x)))
        }
    }
}

fn cmd_solve(cli: &Cli) -> Result<bool, String> {
    let cfg = load_config(cli)?;
    let inst = cfg.build_instance().map_err(|e| e.to_string())?;
    let steps = cfg.run.steps;
    let x_star = oracle_point(&cfg, &inst)?;
    let mut traj = Trajectory::new(&inst);
    let mut csv = String::from("n,alpha,rTilde,gapL,distToOracle\n");
    for n in 0..=steps {
        let r = residuals(&mut traj, n).map_err(|e| e.to_string())?;
        let alpha = inst.schedule.alpha(n).map_err(|e| e.to_string())?;
        let dist = match &x_star {
            Some(p) => format!("{:.17e}", (traj.point(n).unwrap() - p.coords()).norm()),
            None => String::new(),
        };
        csv.push_str(&format!(
            "{n},{:.17e},{:.17e},{:.17e},{dist}\n",
            alpha, r.r_tilde, r.gap_l
        ));
    }
    let path = write_atomic(&cli.out, "trajectory.csv", &csv)?;
    let monitor_steps = steps.min(10_000);
    let stats = run_with_monitors(&inst, monitor_steps, cfg.run.probes, cli.seed)
        .map_err(|e| e.to_string())?;
    println!(
        "{{\"trajectory\": \"{}\", \"steps\": {steps}, \"monitorChecks\": {}, \"monitorViolations\": {}}}",
        path.display(),
        stats.checks,
        stats.violations.len()
    );
    Ok(stats.ok())
}

fn ext_str(v: &ExtNat, cap: u64) -> String {
    match v.as_big() {
        Some(b) => b.to_string(),
        None => format!("Exceeded({cap})"),
    }
}

fn cmd_rates(cli: &Cli) -> Result<bool, String> {
    let cfg = load_config(cli)?;
    let inst = cfg.build_instance().map_err(|e| e.to_string())?;
    let variant = SigmaVariant::parse(&cfg.verify.variant).map_err(|e| e.to_string())?;
    let k_max = cli.kmax.unwrap_or(cfg.verify.kmax);
    let calc = RateCalc::new(&inst.bounds, &inst.schedule, cli.cap);
    let tau = inst.family.tau_rate().map_err(|e| e.to_string())?;
    let f = cfg
        .verify
        .counterfunction
        .clone()
        .unwrap_or(Counterfunction::Affine { a: 1, b: 10 });
    let params = MetaParams::new(&calc, variant, tau.clone());
    let cap_big = BigUint::from(cli.cap);
    let mut csv =
        String::from("k,Q,K,psiUpper,psiLimsup,sigmaGap,phi,phiTilde,n4,e,omega\n");
    for k in 0..=k_max {
        let kb = BigUint::from(k);
        let psi_u = calc.psi_upper(&kb);
        let psi_l = calc.psi(&kb).map_err(|e| e.to_string())?;
        let gap = calc.sigma_gap(variant, &kb).map_err(|e| e.to_string())?;
        let phi = calc.phi(variant, &kb).map_err(|e| e.to_string())?;
        let phit = calc
            .phi_tilde(variant, &tau, &kb)
            .map_err(|e| e.to_string())?;
        let n4 = match calc.n4_big(&kb).map_err(|e| e.to_string())? {
            Some(v) => ExtNat::from_big(v, &cap_big),
            None => ExtNat::Exceeded,
        };
        let e = quadfix::meta::e_bound(&inst.bounds, &kb, &cap_big);
        let omega = params.omega(&kb, &f).map_err(|e| e.to_string())?;
        csv.push_str(&format!(
            "{k},{},{},{},{},{},{},{},{},{},{}\n",
            inst.bounds.q,
            inst.bounds.k_bound,
            ext_str(&psi_u, cli.cap),
            ext_str(&psi_l, cli.cap),
            ext_str(&gap, cli.cap),
            ext_str(&phi, cli.cap),
            ext_str(&phit, cli.cap),
            ext_str(&n4, cli.cap),
            ext_str(&e, cli.cap),
            ext_str(&omega, cli.cap),
        ));
    }
    let path = write_atomic(&cli.out, "rates.csv", &csv)?;
    print!("{csv}");
    println!("{{\"rates\": \"{}\"}}", path.display());
    Ok(true)
}

fn emit_report(cli: &Cli, name: &str, report: &Report) -> Result<bool, String> {
    write_atomic(&cli.out, &format!("{name}.csv"), &report.to_csv())?;
    write_atomic(&cli.out, &format!("{name}-summary.json"), &report.summary_json())?;
    println!("{}", report.summary_json());
    Ok(report.all_pass())
}

fn cmd_verify(cli: &Cli, suite: Suite) -> Result<bool, String> {
    match suite {
        Suite::Asreg | Suite::Gap => {
            let cfg = load_config(cli)?;
            let inst = cfg.build_instance().map_err(|e| e.to_string())?;
            let variant = SigmaVariant::parse(&cfg.verify.variant).map_err(|e| e.to_string())?;
            let k_max = cli.kmax.unwrap_or(cfg.verify.kmax);
            let budget = cli.budget.unwrap_or(cfg.verify.budget);
            let (name, report) = match suite {
                Suite::Asreg => (
                    "verify-asreg",
                    verify_asreg(&inst, variant, k_max, budget).map_err(|e| e.to_string())?,
                ),
                _ => (
                    "verify-gap",
                    verify_cauchy_gap(&inst, variant, k_max, budget).map_err(|e| e.to_string())?,
                ),
            };
            emit_report(cli, name, &report)
        }
        Suite::Meta => {
            let cfg = load_config(cli)?;
            let inst = cfg.build_instance().map_err(|e| e.to_string())?;
            let budget = cli.budget.unwrap_or(cfg.verify.budget);
            let k = cli.kmax.unwrap_or(cfg.verify.k);
            let f = cfg
                .verify
                .counterfunction
                .clone()
                .unwrap_or(Counterfunction::Affine { a: 1, b: 10 });
            f.validate().map_err(|e| e.to_string())?;
            let found = find_metastable_n(&inst, k, &f, budget).map_err(|e| e.to_string())?;
            let mut report = Report::default();
            match found {
                Some(n) => report.push("metastable", k, n, n as f64, budget as f64, true),
                None => report.push("metastable", k, budget, f64::INFINITY, budget as f64, false),
            }
            if let Some(n) = found {
                println!("{{\"metastableN\": {n}, \"k\": {k}}}");
            }
            emit_report(cli, "verify-meta", &report)
        }
        Suite::Xulemma => {
            let k_max = cli.kmax.unwrap_or(10);
            let mut report = Report::default();
            for comb in [
                Combinator::Sigma0,
                Combinator::Sigma0Star,
                Combinator::XuMetaSigma,
                Combinator::XuMetaSigmaStar,
            ] {
                report.merge(xu_lemma_oracle(comb, 100, cli.seed, k_max));
            }
            emit_report(cli, "verify-xulemma", &report)
        }
        Suite::Tau => {
            let cfg = load_config(cli)?;
            let inst = cfg.build_instance().map_err(|e| e.to_string())?;
            let k_max = cli.kmax.unwrap_or(cfg.verify.kmax);
            let found = quadfix::verify::falsify_tau(
                &inst.family,
                inst.bounds.k_bound,
                1_000,
                cli.seed,
                50,
                k_max,
            )
            .map_err(|e| e.to_string())?;
            let mut report = Report::default();
            match &found {
                Some(c) => {
                    eprintln!(
                        "tau counterexample at m={}, k={}: composite residual {:.3e}, individual {:.3e}",
                        c.m, c.k, c.composite_residual, c.individual_residual
                    );
                    report.push("tau", c.k, c.m, c.individual_residual, 1.0 / (c.k as f64 + 1.0), false);
                }
                None => report.push("tau", k_max, 0, 0.0, 1.0, true),
            }
            emit_report(cli, "verify-tau", &report)
        }
        Suite::Embedding => {
            let cfg = load_config(cli)?;
            let inst = cfg.build_instance().map_err(|e| e.to_string())?;
            let steps = cli.budget.unwrap_or(10_000);
            let dev = check_embedding(&inst, steps).map_err(|e| e.to_string())?;
            let mut report = Report::default();
            report.push("yamada-embedding", 0, steps, dev, 1e-10, dev <= 1e-10);
            emit_report(cli, "verify-embedding", &report)
        }
    }
}

fn cmd_compare_yamada(cli: &Cli) -> Result<bool, String> {
    let cfg = load_config(cli)?;
    let inst = cfg.build_instance().map_err(|e| e.to_string())?;
    let steps = cli.budget.unwrap_or(10_000);
    let dev = check_embedding(&inst, steps).map_err(|e| e.to_string())?;
    let mu = 1.0 / inst.a.norm_upper();
    let scaled = mu_scaled_embedding(&inst, mu).map_err(|e| e.to_string())?;
    let dev_mu = check_embedding(&scaled, steps).map_err(|e| e.to_string())?;
    let body = format!(
        "{{\"deviation\": {dev:e}, \"mu\": {mu}, \"muScaledDeviation\": {dev_mu:e}}}"
    );
    write_atomic(&cli.out, "compare-yamada.json", &body)?;
    println!("{body}");
    Ok(dev <= 1e-10 && dev_mu <= 1e-10)
}

fn feasible_samples(cfg: &Config, inst: &ProblemInstance, seed: u64) -> Vec<HilbertPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    match &cfg.oracle {
        Some(OracleCfg::Affine { span, offset }) => {
            for _ in 0..100 {
                let mut x = nalgebra::DVector::from_column_slice(offset);
                for b in span {
                    let t: f64 = rng.gen_range(-1.0..1.0);
                    x += nalgebra::DVector::from_column_slice(b) * t;
                }
                out.push(HilbertPoint::from_dvector(x));
            }
        }
        Some(OracleCfg::Ball { center, radius }) => {
            let d = inst.dim();
            for _ in 0..100 {
                let mut dir = nalgebra::DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
                let n = dir.norm();
                if n > 0.0 {
                    dir *= rng.gen_range(0.0..*radius) / n;
                }
                out.push(HilbertPoint::from_dvector(
                    nalgebra::DVector::from_column_slice(center) + dir,
                ));
            }
        }
        None => {}
    }
    out
}

fn cmd_oracle(cli: &Cli) -> Result<bool, String> {
    let cfg = load_config(cli)?;
    let inst = cfg.build_instance().map_err(|e| e.to_string())?;
    let x_star = oracle_point(&cfg, &inst)?
        .ok_or_else(|| "config has no oracle section".to_string())?;
    let samples = feasible_samples(&cfg, &inst, cli.seed);
    let vip = vip_residual(&inst.a, &inst.u, &x_star, &samples).map_err(|e| e.to_string())?;
    let steps = cfg.run.steps;
    let mut traj = Trajectory::new(&inst);
    traj.ensure(steps).map_err(|e| e.to_string())?;
    let dist = (traj.point(steps).unwrap() - x_star.coords()).norm();
    let coords: Vec<String> = x_star.coords().iter().map(|c| format!("{c:e}")).collect();
    let body = format!(
        "{{\"xStar\": [{}], \"steps\": {steps}, \"dist\": {dist:e}, \"vipResidual\": {vip:e}}}",
        coords.join(", ")
    );
    write_atomic(&cli.out, "oracle.json", &body)?;
    println!("{body}");
    Ok(true)
}
