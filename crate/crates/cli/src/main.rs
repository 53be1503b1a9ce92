//! Command-line frontend: closed-form transfer matrices, Lyapunov spectrum
//! estimation, density certificates, and critical-energy scans, with CSV or
//! JSON output and a flat key=value config file.

mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{resolve_config_path, OutputFormat, Settings};
use lyap_core::liealgebra::{span_certificate, scan_critical_energies, ScanParams, SpanCertificate};
use lyap_core::lyapunov::{
    lyapunov_spectrum, separability_report, top_exponent_sum_wedge, PipelineParams,
};
use lyap_core::transfer::{transfer_matrix, transfer_matrix_ode, ModelConfig, OmegaPair};
use lyap_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "lyap",
    version,
    about = "Transfer-matrix toolkit: Lyapunov spectra and density certificates"
)]
struct Cli {
    /// Config file (flat key = value); default: $LYAP_CONFIG or ./lyap.conf
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// PRNG seed for all sampling
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format (csv or json); default: csv for scan, json otherwise
    #[arg(long, global = true)]
    format: Option<String>,
    /// Write output to a file instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the one-cell transfer matrix at an energy and coupling pair
    Transfer {
        #[arg(long)]
        energy: f64,
        /// Coupling pair as two comma-separated reals, e.g. 0,1
        #[arg(long)]
        omega: String,
        /// Integrate the cell ODE instead of using the closed form
        #[arg(long)]
        oracle: bool,
        /// Runge-Kutta step for --oracle (default 1e-4)
        #[arg(long)]
        step: Option<f64>,
    },
    /// Estimate the Lyapunov spectrum and report separation γ₁ > γ₂ > 0
    Lyapunov {
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long = "reorth-every")]
        reorth_every: Option<u64>,
        /// Also run the exterior-power estimators (γ₁ and γ₁+γ₂)
        #[arg(long)]
        wedge: bool,
    },
    /// Run the Lie-algebra density certificate at one energy
    Certify {
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long = "max-m")]
        max_m: Option<u64>,
        #[arg(long = "tol-f")]
        tol_f: Option<f64>,
    },
    /// Scan an energy interval for certificate failures and sign changes
    Scan {
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Grid step (default from config, 0.01)
        #[arg(long)]
        grid: Option<f64>,
    },
}

/// Failures carrying their process exit code: 2 for bad input or energies
/// below the spectrum, 3 for exhausted power searches, 1 otherwise.
enum Failure {
    Usage(String),
    Exhausted(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Exhausted(_) => 3,
            Failure::Other(_) => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Exhausted(m) | Failure::Other(m) => m,
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::EnergyBelowSpectrum => Failure::Usage(e.to_string()),
            CoreError::SearchExhausted => Failure::Exhausted(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut settings = Settings::default();
    if let Some(path) = resolve_config_path(cli.config.as_deref()).map_err(Failure::Usage)? {
        let text = fs::read_to_string(&path)
            .map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))?;
        let map = config::parse_file(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        settings.apply_file(&map).map_err(Failure::Usage)?;
    }
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    if let Some(fmt) = cli.format.as_deref() {
        settings.format = Some(OutputFormat::parse(fmt).map_err(Failure::Usage)?);
    }

    let output = match cli.cmd {
        Cmd::Transfer {
            energy,
            omega,
            oracle,
            step,
        } => cmd_transfer(&settings, energy, &omega, oracle, step)?,
        Cmd::Lyapunov {
            energy,
            steps,
            reorth_every,
            wedge,
        } => {
            if let Some(s) = steps {
                settings.steps = s;
            }
            if let Some(r) = reorth_every {
                settings.reorth_every = r;
            }
            settings.validate().map_err(Failure::Usage)?;
            cmd_lyapunov(&settings, energy, wedge)?
        }
        Cmd::Certify {
            energy,
            delta,
            max_m,
            tol_f,
        } => {
            if let Some(d) = delta {
                settings.delta = d;
            }
            if let Some(m) = max_m {
                settings.m_max = m;
            }
            if let Some(t) = tol_f {
                settings.tol_f = t;
            }
            settings.validate().map_err(Failure::Usage)?;
            cmd_certify(&settings, energy)?
        }
        Cmd::Scan { from, to, grid } => {
            if let Some(g) = grid {
                settings.grid_step = g;
            }
            settings.validate().map_err(Failure::Usage)?;
            cmd_scan(&settings, from, to)?
        }
    };

    match cli.out {
        Some(path) => {
            let mut f = fs::File::create(&path)
                .map_err(|e| Failure::Other(format!("creating {}: {e}", path.display())))?;
            f.write_all(output.as_bytes())
                .map_err(|e| Failure::Other(format!("writing {}: {e}", path.display())))?;
        }
        None => print!("{output}"),
    }
    Ok(())
}

fn parse_omega(s: &str) -> Result<OmegaPair, Failure> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Failure::Usage(format!("omega {s:?}: expected two comma-separated reals")))?;
    let w1: f64 = a
        .trim()
        .parse()
        .map_err(|e| Failure::Usage(format!("omega first entry {a:?}: {e}")))?;
    let w2: f64 = b
        .trim()
        .parse()
        .map_err(|e| Failure::Usage(format!("omega second entry {b:?}: {e}")))?;
    Ok(OmegaPair::new(w1, w2))
}

fn model_from(settings: &Settings) -> ModelConfig {
    ModelConfig::new(settings.support.clone(), settings.seed)
}

fn format_or(settings: &Settings, default: OutputFormat) -> OutputFormat {
    settings.format.unwrap_or(default)
}

fn cert_json(c: &SpanCertificate) -> serde_json::Value {
    json!({
        "energy": c.energy,
        "powers": c.powers,
        "f1": c.f1,
        "f2": c.f2,
        "f1_scaled": c.f1_scaled,
        "f2_scaled": c.f2_scaled,
        "rank": c.rank,
        "verdict": c.verdict.to_string(),
    })
}

fn render_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json rendering cannot fail");
    s.push('\n');
    s
}

fn cmd_transfer(
    settings: &Settings,
    energy: f64,
    omega: &str,
    oracle: bool,
    step: Option<f64>,
) -> Result<String, Failure> {
    let w = parse_omega(omega)?;
    // both paths require the energy above the cell spectrum
    let closed = transfer_matrix(energy, w)?;
    let matrix = if oracle {
        let h = step.unwrap_or(1e-4);
        if !(h > 0.0 && h <= 0.1) {
            return Err(Failure::Usage(format!("step must lie in (0, 0.1], got {h}")));
        }
        transfer_matrix_ode(energy, w, h)
    } else {
        closed.a
    };
    let defect = lyap_core::linalg::symplectic_defect(&matrix);
    let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
    match format_or(settings, OutputFormat::Json) {
        OutputFormat::Json => Ok(render_json(&json!({
            "energy": energy,
            "omega": [w.w1, w.w2],
            "matrix": flat,
            "symplectic_defect": defect,
        }))),
        OutputFormat::Csv => {
            let mut s = String::from("energy,omega1,omega2");
            for i in 0..4 {
                for j in 0..4 {
                    s.push_str(&format!(",m{i}{j}"));
                }
            }
            s.push_str(",symplectic_defect\n");
            s.push_str(&format!("{energy},{},{}", w.w1, w.w2));
            for x in &flat {
                s.push_str(&format!(",{x}"));
            }
            s.push_str(&format!(",{defect}\n"));
            Ok(s)
        }
    }
}

fn cmd_lyapunov(settings: &Settings, energy: f64, wedge: bool) -> Result<String, Failure> {
    let model = model_from(settings);
    let params = PipelineParams {
        delta: settings.delta,
        m_max: settings.m_max,
        tol_f: settings.tol_f,
        steps: settings.steps,
        reorth_every: settings.reorth_every,
    };
    let report = separability_report(&model, energy, &params)?;
    let wedge_results = if wedge {
        let p1 = top_exponent_sum_wedge(&model, energy, 1, settings.steps)?;
        let p2 = top_exponent_sum_wedge(&model, energy, 2, settings.steps)?;
        Some((p1, p2))
    } else {
        None
    };
    match format_or(settings, OutputFormat::Json) {
        OutputFormat::Json => {
            let mut v = json!({
                "energy": energy,
                "seed": report.spectrum.seed,
                "steps": report.spectrum.steps,
                "reorth_every": settings.reorth_every,
                "gammas": report.spectrum.gammas,
                "stderr": report.spectrum.stderr,
                "certificate": cert_json(&report.certificate),
                "separable": report.separable,
                "margin": report.margin,
            });
            if let Some((p1, p2)) = &wedge_results {
                v["wedge"] = json!({
                    "p1": {"value": p1.value, "stderr": p1.stderr, "steps": p1.steps},
                    "p2": {"value": p2.value, "stderr": p2.stderr, "steps": p2.steps},
                });
            }
            Ok(render_json(&v))
        }
        OutputFormat::Csv => {
            let g = &report.spectrum.gammas;
            let se = &report.spectrum.stderr;
            let mut header = String::from(
                "energy,gamma1,gamma2,gamma3,gamma4,se1,se2,se3,se4,separable,margin",
            );
            let mut row = format!(
                "{energy},{},{},{},{},{},{},{},{},{},{}",
                g[0], g[1], g[2], g[3], se[0], se[1], se[2], se[3], report.separable, report.margin
            );
            if let Some((p1, p2)) = &wedge_results {
                header.push_str(",wedge1,wedge1_se,wedge2,wedge2_se");
                row.push_str(&format!(",{},{},{},{}", p1.value, p1.stderr, p2.value, p2.stderr));
            }
            Ok(format!("{header}\n{row}\n"))
        }
    }
}

fn cmd_certify(settings: &Settings, energy: f64) -> Result<String, Failure> {
    let cert = span_certificate(energy, settings.delta, settings.m_max, settings.tol_f)?;
    match format_or(settings, OutputFormat::Json) {
        OutputFormat::Json => Ok(render_json(&cert_json(&cert))),
        OutputFormat::Csv => Ok(format!(
            "energy,f1,f2,rank,verdict\n{},{},{},{},{}\n",
            cert.energy, cert.f1_scaled, cert.f2_scaled, cert.rank, cert.verdict
        )),
    }
}

fn cmd_scan(settings: &Settings, from: f64, to: f64) -> Result<String, Failure> {
    if !(from > 2.0) {
        return Err(Failure::Usage(format!(
            "scan range must start above 2 (largest corner eigenvalue), got {from}"
        )));
    }
    if !(to > from) {
        return Err(Failure::Usage(format!(
            "scan range must satisfy from < to, got [{from}, {to}]"
        )));
    }
    let model = model_from(settings);
    let params = ScanParams {
        delta: settings.delta,
        m_max: settings.m_max,
        tol_f: settings.tol_f,
        flag_threshold: settings.flag_threshold,
        bisect_width: settings.bisect_width,
    };
    let scan = scan_critical_energies(from, to, settings.grid_step, &params);
    let mut spectra = Vec::with_capacity(scan.energies.len());
    for &e in &scan.energies {
        spectra.push(lyapunov_spectrum(
            &model,
            e,
            settings.steps,
            settings.reorth_every,
        )?);
    }
    match format_or(settings, OutputFormat::Csv) {
        OutputFormat::Csv => {
            let mut s = String::from("energy,f1,f2,rank,verdict,gamma1,gamma2,se1,se2\n");
            for (i, &e) in scan.energies.iter().enumerate() {
                let sp = &spectra[i];
                match &scan.certificates[i] {
                    Some(c) => s.push_str(&format!(
                        "{e},{},{},{},{},{},{},{},{}\n",
                        c.f1_scaled,
                        c.f2_scaled,
                        c.rank,
                        c.verdict,
                        sp.gammas[0],
                        sp.gammas[1],
                        sp.stderr[0],
                        sp.stderr[1]
                    )),
                    None => s.push_str(&format!(
                        "{e},,,0,UNRESOLVED,{},{},{},{}\n",
                        sp.gammas[0], sp.gammas[1], sp.stderr[0], sp.stderr[1]
                    )),
                }
            }
            s.push_str("left,right,reason\n");
            for f in &scan.flagged {
                s.push_str(&format!("{},{},{}\n", f.left, f.right, f.reason));
            }
            Ok(s)
        }
        OutputFormat::Json => {
            let points: Vec<serde_json::Value> = scan
                .energies
                .iter()
                .enumerate()
                .map(|(i, &e)| {
                    let sp = &spectra[i];
                    match &scan.certificates[i] {
                        Some(c) => json!({
                            "energy": e,
                            "f1": c.f1_scaled,
                            "f2": c.f2_scaled,
                            "rank": c.rank,
                            "verdict": c.verdict.to_string(),
                            "gamma1": sp.gammas[0],
                            "gamma2": sp.gammas[1],
                            "se1": sp.stderr[0],
                            "se2": sp.stderr[1],
                        }),
                        None => json!({
                            "energy": e,
                            "f1": null,
                            "f2": null,
                            "rank": 0,
                            "verdict": "UNRESOLVED",
                            "gamma1": sp.gammas[0],
                            "gamma2": sp.gammas[1],
                            "se1": sp.stderr[0],
                            "se2": sp.stderr[1],
                        }),
                    }
                })
                .collect();
            let flagged: Vec<serde_json::Value> = scan
                .flagged
                .iter()
                .map(|f| {
                    json!({"left": f.left, "right": f.right, "reason": f.reason.to_string()})
                })
                .collect();
            Ok(render_json(&json!({
                "from": from,
                "to": to,
                "grid_step": settings.grid_step,
                "seed": settings.seed,
                "steps": settings.steps,
                "points": points,
                "flagged": flagged,
            })))
        }
    }
}
