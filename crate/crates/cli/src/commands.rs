use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use hubspoke::formation::{
    admissibility, deputy_position, enumerate_designs, mass_ratio_for, phase_scan, FormationKind,
};
use hubspoke::harness::{optimize_mass_ratio, run_scenario, write_timeseries_csv, OptimizationResult, ScenarioReport};
use hubspoke::perturb::prop3_hypothesis;
use hubspoke::system::{stability_deputy, stability_rigid, validate_params, vertical_equilibrium};
use hubspoke::topology::{entanglement_verdict, known_braided, Entanglement};
use hubspoke::{AdmissibilityReport, Error, FormationSpec};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::config::{Config, ConfigError};

pub enum Outcome {
    Pass,
    CheckFailed,
}

pub enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_)
            | Error::InvalidSpec(_)
            | Error::InvalidArgument(_)
            | Error::RatioInfeasible { .. }
            | Error::MassRatioMismatch { .. }
            | Error::EquilibriumInfeasible { .. }
            | Error::AmplitudeTooLarge { .. }
            | Error::CollidingFormation { .. }
            | Error::UnbalancedSpec
            | Error::SpecMismatch { .. } => Failure::Config(format!("config-invalid: {e}")),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type CmdResult = Result<Outcome, Failure>;

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn verdict_name(e: Entanglement) -> &'static str {
    match e {
        Entanglement::NoneDetected => "none-detected",
        Entanglement::Weak => "weak",
        Entanglement::Strong => "strong",
    }
}

pub fn design(cfg: &Config, max: u32, out: &Path) -> CmdResult {
    if max < 2 {
        return Err(Failure::Config("config-invalid: --max must be at least 2".into()));
    }
    let d = &cfg.design;
    if d.phase_grid < 1 || d.scan_samples < 16 {
        return Err(Failure::Config(
            "config-invalid: design.phase_grid must be positive and design.scan_samples at least 16".into(),
        ));
    }
    let rows = enumerate_designs(max, max, d.n_max);
    let mut csv = create(out, "design.csv")?;
    writeln!(csv, "p,q,mass_ratio,type_i_n,type_i_entanglement,prop3_n,type_ii_n")?;
    println!(
        "{:<6} {:<8} {:<22} {:<18} Type I entanglement (Type II: all N)",
        "p/q", "NmD/mC", "Type I admissible N", "cancellation N"
    );
    for row in &rows {
        let mut verdicts = Vec::new();
        for &n in &row.type_i_n {
            let spec = FormationSpec::with_phi0(FormationKind::TypeI, row.p, row.q, n, 1.0, Rational64::new(1, 4))?;
            let mut v = verdict_name(entanglement_verdict(&spec)).to_string();
            if known_braided(&spec) {
                v.push_str("(braided)");
            }
            verdicts.push(format!("{n}:{v}"));
        }
        let prop3: Vec<usize> = row
            .type_i_n
            .iter()
            .copied()
            .filter(|&n| prop3_hypothesis(row.p, row.q, n))
            .collect();
        writeln!(
            csv,
            "{},{},{},{},{},{},all",
            row.p,
            row.q,
            row.mass_ratio,
            join(&row.type_i_n),
            verdicts.join(" "),
            join(&prop3)
        )?;
        println!(
            "{:<6} {:<8} {:<22} {:<18} {}",
            format!("{}/{}", row.p, row.q),
            row.mass_ratio,
            join(&row.type_i_n),
            join(&prop3),
            verdicts.join(" ")
        );
    }
    csv.flush()?;

    let grid: Vec<Rational64> = (0..d.phase_grid).map(|k| Rational64::new(k, d.phase_grid)).collect();
    let mut scan = create(out, "phase_scan.csv")?;
    writeln!(scan, "kind,p,q,n,phi0,delta_min")?;
    println!();
    println!("{:<8} {:<6} {:<4} {:<10} best delta_min", "kind", "p/q", "N", "best phi0");
    for row in &rows {
        let cases = row
            .type_i_n
            .iter()
            .filter(|&&n| n <= d.scan_n_max)
            .map(|&n| (FormationKind::TypeI, n))
            .chain((2..=d.scan_n_max).map(|n| (FormationKind::TypeII, n)));
        for (kind, n) in cases {
            let label = match kind {
                FormationKind::TypeI => "type-i",
                FormationKind::TypeII => "type-ii",
            };
            let values = phase_scan(kind, row.p, row.q, n, &grid, d.scan_samples)?;
            let mut best: Option<(Rational64, f64)> = None;
            for (phi0, dmin) in &values {
                match dmin {
                    Some(v) => {
                        writeln!(scan, "{label},{},{},{n},{},{v:.16e}", row.p, row.q, phi0)?;
                        if best.map_or(true, |(_, b)| *v > b) {
                            best = Some((*phi0, *v));
                        }
                    }
                    None => writeln!(scan, "{label},{},{},{n},{},", row.p, row.q, phi0)?,
                }
            }
            match best {
                Some((f, v)) => println!(
                    "{:<8} {:<6} {:<4} {:<10} {v:.4}",
                    label,
                    format!("{}/{}", row.p, row.q),
                    n,
                    f.to_string()
                ),
                None => println!(
                    "{:<8} {:<6} {:<4} {:<10} colliding on every grid phase",
                    label,
                    format!("{}/{}", row.p, row.q),
                    n,
                    "-"
                ),
            }
        }
    }
    scan.flush()?;
    Ok(Outcome::Pass)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub parameter_violations: Vec<String>,
    pub stability_rigid: bool,
    pub stability_deputy: bool,
    pub equilibrium_stretched_length_m: Option<f64>,
    pub mass_ratio: f64,
    pub nominal_mass_ratio: String,
    pub admissibility: AdmissibilityReport,
    pub phi0: f64,
    pub entanglement: Entanglement,
    pub known_braided: bool,
    /// `None` for Type II formations, to which the cancellation result does
    /// not apply.
    pub prop3_cancellation: Option<bool>,
    pub require_center_free: bool,
    pub pass: bool,
}

pub fn check(cfg: &Config, out: &Path) -> CmdResult {
    let params = cfg.system_params()?;
    let spec = cfg.formation_spec(cfg.simulation.kappa_deg.to_radians() * cfg.system.l0_m)?;
    let violations: Vec<String> = validate_params(&params).iter().map(|v| v.to_string()).collect();
    let valid = violations.is_empty();
    let rigid = valid && stability_rigid(&params);
    let deputy = valid && stability_deputy(&params);
    let adm = admissibility(&spec);
    let require_c = cfg.check.require_center_free;
    let pass = valid && rigid && deputy && adm.balanced && adm.collision_free && (adm.center_free || !require_c);
    let report = CheckReport {
        schema_version: crate::config::SCHEMA_VERSION,
        parameter_violations: violations,
        stability_rigid: rigid,
        stability_deputy: deputy,
        equilibrium_stretched_length_m: vertical_equilibrium(&params).ok().map(|e| e.stretched_length),
        mass_ratio: params.mass_ratio(),
        nominal_mass_ratio: mass_ratio_for(spec.p, spec.q)?.to_string(),
        admissibility: adm,
        phi0: spec.phi0(),
        entanglement: entanglement_verdict(&spec),
        known_braided: known_braided(&spec),
        prop3_cancellation: (spec.kind == FormationKind::TypeI)
            .then(|| prop3_hypothesis(spec.p, spec.q, spec.n_deputies)),
        require_center_free: require_c,
        pass,
    };
    let mark = |b: bool| if b { "pass" } else { "FAIL" };
    for v in &report.parameter_violations {
        println!("parameter violation: {v}");
    }
    println!("rigid tether condition      {}", mark(report.stability_rigid));
    println!("deputy stability condition  {}", mark(report.stability_deputy));
    println!("A balance                   {}", mark(adm.balanced));
    println!("B no collisions             {}", mark(adm.collision_free));
    println!(
        "C centre free               {}{}",
        mark(adm.center_free),
        if require_c { "" } else { " (not required)" }
    );
    println!(
        "mass ratio                  {:.6} (nominal {})",
        report.mass_ratio, report.nominal_mass_ratio
    );
    println!(
        "entanglement                {}{}",
        verdict_name(report.entanglement),
        if report.known_braided { " (known braid-like entanglement)" } else { "" }
    );
    match report.prop3_cancellation {
        Some(b) => println!("second-order cancellation   {}", if b { "yes" } else { "no" }),
        None => println!("second-order cancellation   n/a"),
    }
    println!("overall                     {}", mark(pass));
    let mut f = create(out, "check.json")?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    writeln!(f)?;
    f.flush()?;
    Ok(if pass { Outcome::Pass } else { Outcome::CheckFailed })
}

pub fn simulate(cfg: &Config, out: &Path, full_state: bool) -> CmdResult {
    let scenario = cfg.scenario()?;
    let outcome = run_scenario(&scenario)?;
    let t_l = scenario.reference_frequencies()?.lissajous_period(scenario.spec.p);
    let mut csv = create(out, "timeseries.csv")?;
    write_timeseries_csv(&mut csv, &outcome.report, &outcome.trajectory, t_l, full_state)?;
    csv.flush()?;
    let report = ScenarioReport::new(&scenario, &outcome);
    let mut f = create(out, "report.json")?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    writeln!(f)?;
    f.flush()?;
    println!("delta_min          {:.6}", report.delta_min);
    println!("max delta_D        {:.6}", report.max_delta_d);
    println!("max delta_C        {:.6}", report.max_delta_c);
    match report.stability_horizon {
        hubspoke::StabilityHorizon::EntireRun => println!("stability horizon  entire-run"),
        hubspoke::StabilityHorizon::At(t) => println!(
            "stability horizon  {:.1} s ({:.3} orbital periods)",
            t,
            t / scenario.orbital_period()
        ),
    }
    Ok(Outcome::Pass)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OptimizeEntry {
    pub kappa_deg: f64,
    pub result: OptimizationResult,
}

pub fn optimize(cfg: &Config, out: &Path) -> CmdResult {
    let mut tuned = cfg.clone();
    if let Some(n) = cfg.optimize.n_deputies {
        tuned.formation.n_deputies = n;
    }
    let base = tuned.scenario()?;
    let interval = (cfg.optimize.offset_min, cfg.optimize.offset_max);
    let mut entries = Vec::new();
    let mut csv = create(out, "table2.csv")?;
    writeln!(csv, "kappa_deg,delta_alpha_opt,max_delta_D_unadjusted,max_delta_D_adjusted")?;
    println!("{:<8} {:<12} {:<14} {:<14}", "kappa", "dalpha_opt", "maxD (dα=0)", "maxD (opt)");
    for &kappa in &cfg.optimize.kappa_deg {
        let mut scenario = base.clone();
        scenario.kappa_deg = kappa;
        scenario.validate()?;
        let r = optimize_mass_ratio(&scenario, interval)?;
        writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            kappa, r.delta_alpha, r.unadjusted_max_delta_d, r.max_delta_d
        )?;
        println!(
            "{:<8} {:<12.4} {:<14.4} {:<14.4}",
            kappa, r.delta_alpha, r.unadjusted_max_delta_d, r.max_delta_d
        );
        entries.push(OptimizeEntry { kappa_deg: kappa, result: r });
    }
    csv.flush()?;
    let mut f = create(out, "optimize.json")?;
    serde_json::to_writer_pretty(&mut f, &entries)?;
    writeln!(f)?;
    f.flush()?;
    Ok(Outcome::Pass)
}

pub fn trace(cfg: &Config, out: &Path) -> CmdResult {
    let kappa = cfg.trace.kappa_deg.unwrap_or(cfg.simulation.kappa_deg);
    let spec = cfg.formation_spec(kappa.to_radians() * cfg.system.l0_m)?;
    let samples = cfg.trace.samples;
    if samples < 1000 {
        return Err(Failure::Config("config-invalid: trace.samples must be at least 1000".into()));
    }
    for i in 1..=spec.n_deputies {
        let mut f = create(out, &format!("trace_deputy_{i}.csv"))?;
        writeln!(f, "tau,x_m,y_m")?;
        for k in 0..=samples {
            let tau = k as f64 / samples as f64;
            let (x, y) = deputy_position(&spec, i, tau);
            writeln!(f, "{tau:.16e},{x:.16e},{y:.16e}")?;
        }
        f.flush()?;
    }
    println!("wrote {} curves of {} samples to {}", spec.n_deputies, samples + 1, out.display());
    Ok(Outcome::Pass)
}
