//! The `ionlink` command line.
//!
//! Every subcommand produces one primary document (CSV or JSON). With `--out`
//! it is written into that directory, otherwise to standard output. Failures
//! exit non-zero with `{"error": {"kind": ..., "message": ...}}` on standard
//! error; a fit that does not converge still writes its report first.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_ions, TrapFile};
use crate::constants;
use crate::coupling::CouplingResult;
use crate::dynamics::{bell_fidelity, evolve_fock, mean_phonons, ExchangeModel, FockState};
use crate::equilibrium::{solve_equilibrium, IonConfiguration};
use crate::error::{Error, Result};
use crate::fitting::{
    fit_avoided_crossing_with, fit_exchange_with, fit_spectra_with, read_crossing_csv, read_exchange_csv, FitResult,
    FitSettings, SpectraDataset, SpectraFitOptions,
};
use crate::modes::{auto_range, enhancement_report, mode_frequencies, scan_crossing};
use crate::output::{csv_document, json_document, write_file, Provenance};
use crate::potential::{calibrate_symmetric, AxialPotential, IonSpecies};

/// Exit status for errors raised by a computation or bad input.
pub const EXIT_ERROR: i32 = 1;
/// Exit status for command-line usage errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for a fit that finished without converging.
pub const EXIT_UNCONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ionlink", version, about = "Coupled ion strings in a double-well trap")]
pub struct Cli {
    /// Directory for output files (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for fit restarts and synthetic noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

/// Trap from a file, or a symmetric calibration from (r, f).
#[derive(Debug, Args)]
pub struct TrapArgs {
    /// Trap file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Well separation, m (instead of --config).
    #[arg(long, requires = "freq", conflicts_with = "config")]
    pub r: Option<f64>,
    /// Well frequency, Hz (instead of --config).
    #[arg(long, requires = "r")]
    pub freq: Option<f64>,
    /// Ion species; overrides the trap file.
    #[arg(long)]
    pub species: Option<String>,
    /// Control-voltage response of the linear coefficient, J/m per V.
    #[arg(long)]
    pub tune1: Option<f64>,
    /// Control-voltage response of the quadratic coefficient, J/m^2 per V.
    #[arg(long)]
    pub tune2: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Potential coefficients from well separation and frequency.
    Calibrate {
        /// Well separation, m.
        #[arg(long)]
        r: f64,
        /// Well frequency, Hz.
        #[arg(long)]
        freq: f64,
        /// Ion species (Ca40, Be9, Mg24).
        #[arg(long, default_value = "Ca40")]
        species: String,
        #[arg(long, default_value_t = 0.0)]
        tune1: f64,
        #[arg(long, default_value_t = 0.0)]
        tune2: f64,
    },
    /// Equilibrium positions.
    Equilibria {
        #[command(flatten)]
        trap: TrapArgs,
        /// Ions per well, `n_left,n_right`.
        #[arg(long)]
        ions: Option<String>,
        /// Control voltage, V.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        u: f64,
    },
    /// Normal-mode spectrum at one control voltage.
    Modes {
        #[command(flatten)]
        trap: TrapArgs,
        /// Ions per well, `n_left,n_right`.
        #[arg(long)]
        ions: Option<String>,
        /// Control voltage, V.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        u: f64,
    },
    /// Lowest mode pair against control voltage, with the extracted splitting.
    Scan {
        #[command(flatten)]
        trap: TrapArgs,
        /// Ions per well, `n_left,n_right`.
        #[arg(long)]
        ions: Option<String>,
        /// `auto` or `u_min,u_max` in V.
        #[arg(long, allow_hyphen_values = true)]
        u_range: Option<String>,
        /// Number of voltages (default: trap file, else 101).
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Splitting of each configuration next to the point-charge prediction.
    Enhance {
        #[command(flatten)]
        trap: TrapArgs,
        /// Largest number of ions per well.
        #[arg(long, default_value_t = 3)]
        max: usize,
    },
    /// Damped mean-phonon exchange trace of well 1.
    Exchange {
        /// Initial mean phonon number of well 1.
        #[arg(long)]
        n1: f64,
        /// Initial mean phonon number of well 2.
        #[arg(long)]
        n2: f64,
        /// Swap time, s.
        #[arg(long)]
        fswap: f64,
        /// Damping time, s (default: no damping).
        #[arg(long)]
        tau_damp: Option<f64>,
        /// Heating rate, phonons/s.
        #[arg(long, default_value_t = 0.0)]
        heating: f64,
        /// Last waiting time, s.
        #[arg(long)]
        until: f64,
        /// Number of waiting times.
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Relative Gaussian noise; adds a sigma column.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Exact two-mode evolution of a Fock state.
    Evolve {
        /// Initial phonon number of well 1.
        #[arg(long)]
        n1: usize,
        /// Initial phonon number of well 2.
        #[arg(long)]
        n2: usize,
        /// Swap time, s.
        #[arg(long)]
        fswap: f64,
        /// Evolution time, s (default: one swap time).
        #[arg(long)]
        time: Option<f64>,
        /// Largest total phonon number kept.
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Fit one potential to spectra of several configurations.
    FitSpectra {
        /// CSV: config_label, u_ax_V, frequency_Hz, sigma_Hz, timestamp_s.
        #[arg(long)]
        data: PathBuf,
        /// Trap file giving species, starting point and frozen parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Ion species; overrides the trap file.
        #[arg(long)]
        species: Option<String>,
        /// Parameters to hold fixed (repeatable).
        #[arg(long)]
        freeze: Vec<String>,
        /// Number of simplex restarts.
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Fit the damped exchange model to a measured trace.
    FitExchange {
        /// CSV: tau_s, n1_mean[, sigma].
        #[arg(long)]
        data: PathBuf,
        /// Uncertainty for rows without a sigma column.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Number of simplex restarts.
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Fit a two-level hyperbola to one avoided crossing.
    FitCrossing {
        /// CSV: u_ax_V, nu_Hz, sigma_Hz, or a `scan` output file.
        #[arg(long)]
        data: PathBuf,
        /// Uncertainty for scan-file input, Hz.
        #[arg(long, default_value_t = 10.0)]
        sigma: f64,
        /// Number of simplex restarts.
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Physical constants used.
    Constants,
}

/// Parse `args` (program name first), run, and report. Returns the exit status.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            report_error(stderr, "usage", &e.to_string().trim().replace('\n', " "));
            return EXIT_USAGE;
        }
    };
    match execute(&cli, &args) {
        Ok(done) => {
            let status = match &done.unconverged {
                Some(msg) => {
                    report_error(stderr, "fit_failed", msg);
                    EXIT_UNCONVERGED
                }
                None => 0,
            };
            if let Err(e) = emit(&cli, &done, stdout) {
                report_error(stderr, e.kind(), &e.to_string());
                return EXIT_ERROR;
            }
            status
        }
        Err(e) => {
            report_error(stderr, e.kind(), &e.to_string());
            EXIT_ERROR
        }
    }
}

fn report_error(stderr: &mut dyn Write, kind: &str, message: &str) {
    let _ = writeln!(stderr, "{}", json!({ "error": { "kind": kind, "message": message } }));
}

/// Files produced by one run; the first is the primary document.
struct Done {
    files: Vec<(String, Vec<u8>)>,
    unconverged: Option<String>,
}

impl Done {
    fn one(name: &str, bytes: Vec<u8>) -> Self {
        Self { files: vec![(name.to_owned(), bytes)], unconverged: None }
    }
}

fn emit(cli: &Cli, done: &Done, stdout: &mut dyn Write) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            for (name, bytes) in &done.files {
                let path = write_file(dir, name, bytes)?;
                writeln!(stdout, "{}", path.display())?;
            }
        }
        None => stdout.write_all(&done.files[0].1)?,
    }
    Ok(())
}

/// Arguments without file paths: `--out` names where results go, and input
/// files enter the hash by content, so moving them changes nothing.
fn hashed_args(args: &[OsString]) -> Vec<Vec<u8>> {
    const PATH_FLAGS: [&str; 3] = ["--out", "--data", "--config"];
    let mut out = Vec::new();
    let mut skip = false;
    for a in args.iter().skip(1) {
        let s = a.to_string_lossy();
        if skip {
            skip = false;
        } else if PATH_FLAGS.contains(&s.as_ref()) {
            skip = true;
        } else if !PATH_FLAGS.iter().any(|f| s.starts_with(&format!("{f}="))) {
            out.push(s.as_bytes().to_vec());
        }
    }
    out
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

struct Trap {
    potential: AxialPotential,
    species: IonSpecies,
    file: TrapFile,
}

fn load_trap(t: &TrapArgs, inputs: &mut Vec<Vec<u8>>) -> Result<Trap> {
    let file = match &t.config {
        Some(path) => {
            let bytes = read_input(path)?;
            let text = String::from_utf8(bytes.clone()).map_err(|e| Error::Parse(e.to_string()))?;
            inputs.push(bytes);
            TrapFile::parse(&text)?
        }
        None => TrapFile::default(),
    };
    let species = match &t.species {
        Some(name) => IonSpecies::by_name(name)?,
        None => file.species()?,
    };
    let mut potential = match (t.r, t.freq) {
        (Some(r), Some(f)) => calibrate_symmetric(r, f, &species)?,
        _ if t.config.is_some() => file.potential(&species)?,
        _ => return Err(Error::InvalidParameter("give --config or both --r and --freq".into())),
    };
    if let Some(v) = t.tune1 {
        potential.tune1 = v;
    }
    if let Some(v) = t.tune2 {
        potential.tune2 = v;
    }
    Ok(Trap { potential, species, file })
}

fn ion_config(trap: &Trap, ions: &Option<String>) -> Result<IonConfiguration> {
    let label = ions
        .clone()
        .or_else(|| trap.file.scan.ions.clone())
        .ok_or_else(|| Error::InvalidParameter("give --ions n_left,n_right".into()))?;
    let (l, r) = parse_ions(&label)?;
    IonConfiguration::new(trap.species.clone(), l, r)
}

fn sci(v: f64) -> String {
    format!("{v:.12e}")
}

fn csv_body(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(header)?;
    for row in rows {
        wr.write_record(&row)?;
    }
    wr.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn settings(seed: Option<u64>, file_seed: Option<u64>, restarts: Option<usize>) -> FitSettings {
    let mut s = FitSettings::default();
    if let Some(seed) = seed.or(file_seed) {
        s.seed = seed;
    }
    if let Some(r) = restarts {
        s.restarts = r;
    }
    s
}

fn fit_done(name: &str, prov: &Provenance, fit: &FitResult) -> Result<Done> {
    let unconverged = (!fit.converged).then(|| {
        let mut msg = "fit did not converge".to_owned();
        for w in &fit.warnings {
            msg.push_str("; ");
            msg.push_str(w);
        }
        msg
    });
    Ok(Done { files: vec![(name.to_owned(), json_document(prov, fit)?)], unconverged })
}

fn execute(cli: &Cli, args: &[OsString]) -> Result<Done> {
    let mut inputs = hashed_args(args);
    match &cli.command {
        Command::Calibrate { r, freq, species, tune1, tune2 } => {
            let s = IonSpecies::by_name(species)?;
            let p = calibrate_symmetric(*r, *freq, &s)?.with_tuning(*tune1, *tune2);
            let wells = p.find_wells(0.0, &s)?;
            let prov = Provenance::from_inputs(&inputs);
            let report = json!({
                "species": s,
                "alpha1_j_per_m": p.alpha1,
                "alpha2_j_per_m2": p.alpha2,
                "alpha4_j_per_m4": p.alpha4,
                "tune1_j_per_m_per_v": p.tune1,
                "tune2_j_per_m2_per_v": p.tune2,
                "wells_at_zero_control": wells,
            });
            let mut toml = prov.comment_header().into_bytes();
            toml.extend_from_slice(TrapFile::from_potential(&p, &s.label).to_toml()?.as_bytes());
            Ok(Done {
                files: vec![("calibrate.json".into(), json_document(&prov, &report)?), ("trap.toml".into(), toml)],
                unconverged: None,
            })
        }
        Command::Equilibria { trap, ions, u } => {
            let t = load_trap(trap, &mut inputs)?;
            let cfg = ion_config(&t, ions)?;
            let eq = solve_equilibrium(&t.potential, *u, &cfg, None)?.into_valid()?;
            let rows = eq.positions.iter().enumerate().map(|(i, z)| {
                let well = if i < eq.n_left_found { "left" } else { "right" };
                vec![i.to_string(), sci(*z), well.to_owned()]
            });
            let body = csv_body(&["ion", "z_m", "well"], rows)?;
            let prov = Provenance::from_inputs(&inputs);
            let extra = [
                ("ions".to_owned(), cfg.label()),
                ("u_ax_V".to_owned(), sci(*u)),
                ("total_energy_J".to_owned(), sci(eq.total_energy)),
                ("grad_norm_N".to_owned(), sci(eq.grad_norm)),
            ];
            Ok(Done::one("equilibria.csv", csv_document(&prov, &extra, &body)))
        }
        Command::Modes { trap, ions, u } => {
            let t = load_trap(trap, &mut inputs)?;
            let cfg = ion_config(&t, ions)?;
            let s = mode_frequencies(&t.potential, *u, &cfg)?;
            let rows = s.frequencies.iter().zip(&s.left_weight).enumerate().map(|(k, (f, w))| {
                vec![k.to_string(), sci(*f), format!("{:.6}", w.max(0.0))]
            });
            let body = csv_body(&["mode", "frequency_Hz", "left_weight"], rows)?;
            let prov = Provenance::from_inputs(&inputs);
            let extra = [("ions".to_owned(), cfg.label()), ("u_ax_V".to_owned(), sci(*u))];
            Ok(Done::one("modes.csv", csv_document(&prov, &extra, &body)))
        }
        Command::Scan { trap, ions, u_range, steps } => {
            let t = load_trap(trap, &mut inputs)?;
            let cfg = ion_config(&t, ions)?;
            let (lo, hi) = match u_range.as_deref() {
                None if t.file.scan.u_min_v.is_some() || t.file.scan.u_max_v.is_some() => {
                    match (t.file.scan.u_min_v, t.file.scan.u_max_v) {
                        (Some(a), Some(b)) => (a, b),
                        _ => return Err(Error::InvalidParameter("[scan] needs both u_min_v and u_max_v".into())),
                    }
                }
                None | Some("auto") => auto_range(&t.potential, &cfg)?,
                Some(text) => {
                    let parts: Vec<f64> = text
                        .split(',')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::Parse(format!("--u-range must be 'auto' or 'u_min,u_max', got '{text}'")))?;
                    match parts.as_slice() {
                        [a, b] => (*a, *b),
                        _ => return Err(Error::Parse(format!("--u-range must be 'auto' or 'u_min,u_max', got '{text}'"))),
                    }
                }
            };
            let steps = steps.or(t.file.scan.steps).unwrap_or(101);
            let scan = scan_crossing(&t.potential, &cfg, lo, hi, steps)?;
            let mut body = Vec::new();
            scan.write_csv(&mut body)?;
            let prov = Provenance::from_inputs(&inputs);
            let extra = [
                ("ions".to_owned(), cfg.label()),
                ("splitting_Hz".to_owned(), sci(scan.splitting)),
                ("resonance_voltage_V".to_owned(), sci(scan.resonance_voltage)),
            ];
            Ok(Done::one("scan.csv", csv_document(&prov, &extra, &body)))
        }
        Command::Enhance { trap, max } => {
            let t = load_trap(trap, &mut inputs)?;
            let rows = enhancement_report(&t.potential, &t.species, *max)?;
            let base = rows.first().map(|r| r.splitting).unwrap_or(f64::NAN);
            let body = csv_body(
                &["config_label", "splitting_Hz", "point_charge_Hz", "enhancement", "resonance_voltage_V"],
                rows.iter().map(|r| {
                    vec![
                        format!("{}+{}", r.n_left, r.n_right),
                        sci(r.splitting),
                        sci(r.point_charge_prediction),
                        format!("{:.6}", r.splitting / base),
                        sci(r.resonance_voltage),
                    ]
                }),
            )?;
            let prov = Provenance::from_inputs(&inputs);
            Ok(Done::one("enhance.csv", csv_document(&prov, &[], &body)))
        }
        Command::Exchange { n1, n2, fswap, tau_damp, heating, until, points, noise } => {
            if *points < 2 || !(*until > 0.0) {
                return Err(Error::InvalidParameter("need --points >= 2 and --until > 0".into()));
            }
            let omega = PI / fswap;
            let model = ExchangeModel::new(*n1, *n2, omega, tau_damp.unwrap_or(f64::INFINITY), *heating)?;
            let taus: Vec<f64> = (0..*points).map(|k| until * k as f64 / (*points - 1) as f64).collect();
            let prov = Provenance::from_inputs(&inputs);
            let body = match noise {
                None => csv_body(
                    &["tau_s", "n1_mean"],
                    taus.iter().map(|&tau| vec![sci(tau), sci(model.eval(tau))]),
                )?,
                Some(rel) => {
                    if !(*rel > 0.0) {
                        return Err(Error::InvalidParameter(format!("--noise must be positive, got {rel}")));
                    }
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(FitSettings::default().seed));
                    let normal = Normal::new(0.0, 1.0).expect("unit normal");
                    let rows: Vec<Vec<String>> = taus
                        .iter()
                        .map(|&tau| {
                            let v = model.eval(tau);
                            let sigma = rel * v.abs().max(f64::MIN_POSITIVE);
                            vec![sci(tau), sci(v + sigma * normal.sample(&mut rng)), sci(sigma)]
                        })
                        .collect();
                    csv_body(&["tau_s", "n1_mean", "sigma"], rows)?
                }
            };
            let extra = [("coupling_Hz".to_owned(), sci(omega / TAU))];
            Ok(Done::one("exchange.csv", csv_document(&prov, &extra, &body)))
        }
        Command::Evolve { n1, n2, fswap, time, cutoff } => {
            let c = CouplingResult::new(PI / fswap)?;
            let t = time.unwrap_or(*fswap);
            let cutoff = cutoff.unwrap_or_else(|| FockState::default_cutoff((*n1).max(*n2)));
            let start = FockState::fock_with_cutoff(*n1, *n2, cutoff)?;
            let end = evolve_fock(&start, c.omega_c, t)?;
            let (m1, m2) = mean_phonons(&end);
            let before = start.manifold_populations();
            let manifold_drift = end
                .manifold_populations()
                .iter()
                .zip(&before)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let swapped = FockState::fock_with_cutoff(*n2, *n1, cutoff)?;
            let bell = evolve_fock(&FockState::fock(0, 1), c.omega_c, 0.5 * c.t_swap)?;
            let mut populations = BTreeMap::new();
            for (a, b, amp) in end.components() {
                if amp.norm_sqr() > 1e-15 {
                    populations.insert(format!("{a},{b}"), amp.norm_sqr());
                }
            }
            let report = EvolveReport {
                initial: [*n1, *n2],
                coupling_hz: c.omega_c / TAU,
                t_swap_s: c.t_swap,
                t_gate_s: c.t_gate,
                time_s: t,
                cutoff,
                mean_n1: m1,
                mean_n2: m2,
                norm: end.norm_squared(),
                manifold_max_deviation: manifold_drift,
                swapped_fidelity: end.fidelity(&swapped),
                bell_fidelity_at_half_swap: bell_fidelity(&bell),
                populations,
            };
            let prov = Provenance::from_inputs(&inputs);
            Ok(Done::one("evolve.json", json_document(&prov, &report)?))
        }
        Command::FitSpectra { data, config, species, freeze, restarts } => {
            let bytes = read_input(data)?;
            inputs.push(bytes.clone());
            let ds = SpectraDataset::read_csv(bytes.as_slice())?;
            let mut opts = SpectraFitOptions::default();
            let mut file_seed = None;
            let mut file_restarts = None;
            let sp = match config {
                Some(path) => {
                    let trap_args = TrapArgs {
                        config: Some(path.clone()),
                        r: None,
                        freq: None,
                        species: species.clone(),
                        tune1: None,
                        tune2: None,
                    };
                    let t = load_trap(&trap_args, &mut inputs)?;
                    opts.initial = Some(t.potential);
                    opts.freeze.extend(t.file.fit.freeze.iter().cloned());
                    if let Some(r) = t.file.fit.approx_separation_m {
                        opts.approx_separation = r;
                    }
                    if let Some(f) = t.file.fit.approx_freq_hz {
                        opts.approx_freq = f;
                    }
                    file_seed = t.file.fit.seed;
                    file_restarts = t.file.fit.restarts;
                    t.species
                }
                None => species.as_deref().map(IonSpecies::by_name).transpose()?.unwrap_or_else(IonSpecies::ca40),
            };
            opts.freeze.extend(freeze.iter().cloned());
            opts.settings = settings(cli.seed, file_seed, restarts.or(file_restarts));
            let fit = fit_spectra_with(&ds, &sp, &opts)?;
            fit_done("fit_spectra.json", &Provenance::from_inputs(&inputs), &fit)
        }
        Command::FitExchange { data, sigma, restarts } => {
            let bytes = read_input(data)?;
            inputs.push(bytes.clone());
            let pts = read_exchange_csv(bytes.as_slice(), *sigma)?;
            let fit = fit_exchange_with(&pts, &settings(cli.seed, None, *restarts))?;
            fit_done("fit_exchange.json", &Provenance::from_inputs(&inputs), &fit)
        }
        Command::FitCrossing { data, sigma, restarts } => {
            let bytes = read_input(data)?;
            inputs.push(bytes.clone());
            let pts = read_crossing_csv(bytes.as_slice(), *sigma)?;
            let fit = fit_avoided_crossing_with(&pts, &settings(cli.seed, None, *restarts))?;
            fit_done("fit_crossing.json", &Provenance::from_inputs(&inputs), &fit)
        }
        Command::Constants => {
            let body = csv_body(
                &["name", "value", "unit"],
                constants::table().into_iter().map(|(n, v, u)| vec![n.to_owned(), format!("{v:.15e}"), u.to_owned()]),
            )?;
            let prov = Provenance::from_inputs(&inputs);
            Ok(Done::one("constants.csv", csv_document(&prov, &[], &body)))
        }
    }
}

#[derive(Serialize)]
struct EvolveReport {
    initial: [usize; 2],
    coupling_hz: f64,
    t_swap_s: f64,
    t_gate_s: f64,
    time_s: f64,
    cutoff: usize,
    mean_n1: f64,
    mean_n2: f64,
    norm: f64,
    manifold_max_deviation: f64,
    /// Overlap with the initial state with the wells exchanged.
    swapped_fidelity: f64,
    /// |0,1> evolved for half a swap time, against the target Bell state.
    bell_fidelity_at_half_swap: f64,
    /// Occupation probabilities above 1e-15, keyed `n1,n2`.
    populations: BTreeMap<String, f64>,
}
