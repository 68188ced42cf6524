use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use qrc_core::dynamics::{evolve, spectral_evolve, EvolveOptions, InputSignal};
use qrc_core::encodings::GaussianState;
use qrc_core::linearity::{
    interior_grid, probe_continuous, probe_continuous_gaussian, probe_discrete, probe_gaussian_channel, ProbeRun,
    Protocol, Verdict,
};
use qrc_core::operator::DensityMatrix;
use qrc_core::reservoir::{
    sine_estimation, stm_capacity, stm_inputs, DiscreteReservoir, GaussianReservoir, SineReport, SineTask,
};

use crate::config::{Encoding, ExperimentConfig, Format, TaskSpec};
use crate::output::Outputs;
use crate::{CliError, RunArgs};

/// Largest node deviation accepted by `crosscheck`.
pub const CROSSCHECK_TOL: f64 = 1e-8;

#[derive(Serialize)]
struct CatalogEntry {
    name: &'static str,
    mode: &'static str,
    expected: &'static str,
    note: &'static str,
}

const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "reinit-pure-sqrt",
        mode: "discrete",
        expected: "expected-nonlinear(X)",
        note: "|psi> = sqrt(1-u)|0> + sqrt(u)|1>; <Z> = 1 - 2u, <X> = 2 sqrt(u(1-u))",
    },
    CatalogEntry {
        name: "reinit-mixed",
        mode: "discrete",
        expected: "expected-linear",
        note: "rho = (1-u)|0><0| + u|1><1|",
    },
    CatalogEntry {
        name: "channel-mixture",
        mode: "discrete",
        expected: "expected-linear",
        note: "sum_k w_k(u) E_k with affine weights on the simplex",
    },
    CatalogEntry {
        name: "parameterized-unitary",
        mode: "discrete",
        expected: "expected-nonlinear",
        note: "exp(-i theta(u) G); nodes are trigonometric in theta",
    },
    CatalogEntry {
        name: "eigenphase-unitary",
        mode: "discrete",
        expected: "expected-nonlinear",
        note: "sum_k exp(i phi_k(u)) P_k; coherences pick up phase differences",
    },
    CatalogEntry {
        name: "displacement",
        mode: "gaussian",
        expected: "expected-linear",
        note: "D(beta(u)) with affine beta; means shift, covariance fixed",
    },
    CatalogEntry {
        name: "coherent-reinit",
        mode: "gaussian",
        expected: "expected-linear",
        note: "reset to |beta(u)>; means affine, vacuum covariance",
    },
    CatalogEntry {
        name: "squeezed-reinit",
        mode: "gaussian",
        expected: "expected-nonlinear(VarX,CovXP,VarP)",
        note: "reset to S(r(u)) vacuum; covariance depends on exp(+-2r)",
    },
    CatalogEntry {
        name: "hamiltonian-drive",
        mode: "continuous",
        expected: "expected-nonlinear",
        note: "finite-dimensional Lindblad drive; nodes depend on exp(t L(u))",
    },
    CatalogEntry {
        name: "random-drive",
        mode: "continuous",
        expected: "expected-nonlinear",
        note: "seeded random Hamiltonian drive with lowering jumps",
    },
    CatalogEntry {
        name: "displacement-drive",
        mode: "continuous-gaussian",
        expected: "expected-linear(X,P)",
        note: "damped mode under H = F_x(u) P - F_p(u) X; means affine in u",
    },
];

pub fn catalog(format: Format) -> Result<u8, CliError> {
    if format == Format::Json {
        let text = serde_json::to_string_pretty(CATALOG).map_err(|e| CliError::Output(e.to_string()))?;
        println!("{text}");
    } else {
        for e in CATALOG {
            println!("{:<22} {:<20} {:<38} {}", e.name, e.mode, e.expected, e.note);
        }
    }
    Ok(0)
}

struct Loaded {
    cfg: ExperimentConfig,
    out: PathBuf,
    format: Format,
}

fn load(args: &RunArgs) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.probe.seed = seed;
    }
    let out = args.out.clone().or_else(|| cfg.output.directory.clone()).unwrap_or_else(|| PathBuf::from("qrc-out"));
    let format = args.format.unwrap_or(cfg.output.formats);
    Ok(Loaded { cfg, out, format })
}

fn evolve_options(cfg: &ExperimentConfig) -> EvolveOptions {
    cfg.probe.dt.map(EvolveOptions::with_dt).unwrap_or_default()
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn analyze(args: &RunArgs) -> Result<u8, CliError> {
    let Loaded { cfg, out, format } = load(args)?;
    let system = cfg.system.build()?;
    let encoding = cfg.encoding.build(&system, cfg.probe.seed)?;
    let domain = cfg.probe.domain.clone().unwrap_or_else(|| encoding.default_domain());
    let grid = interior_grid(&domain, cfg.probe.grid_points);
    let tol = cfg.probe.tolerances;
    let continuous = matches!(encoding, Encoding::Drive(_) | Encoding::GaussianDrive(_));
    if !continuous && (cfg.probe.protocol.is_some() || cfg.probe.read_times.is_some()) {
        return Err(CliError::Config("probe.protocol and probe.read_times apply to continuous encodings only".into()));
    }
    let protocol = cfg.probe.protocol.clone().unwrap_or(Protocol::ConstantLevel);
    let read_times = cfg.probe.read_times.clone().unwrap_or_else(|| vec![1.0]);
    let run: ProbeRun = match &encoding {
        Encoding::Discrete(ch) => {
            let basis = system.basis.as_ref().expect("finite system has a basis");
            probe_discrete(ch, basis, &cfg.priors(), &grid, &tol)?
        }
        Encoding::Gaussian(ch) => probe_gaussian_channel(ch, &cfg.priors(), &grid, &tol)?,
        Encoding::Drive(g) => {
            let basis = system.basis.as_ref().expect("finite system has a basis");
            let rho0 = DensityMatrix::basis_state(&system.dims, 0);
            probe_continuous(g, &rho0, &protocol, &grid, &read_times, basis, &evolve_options(&cfg), &tol)?
        }
        Encoding::GaussianDrive(d) => probe_continuous_gaussian(
            d,
            &GaussianState::vacuum(),
            &protocol,
            &grid,
            &read_times,
            &evolve_options(&cfg),
            &tol,
        )?,
    };

    let report = &run.report;
    let mut outputs = Outputs::default();
    if format.json() {
        outputs.json("report.json", report)?;
    }
    if format.csv() {
        let n = domain.len();
        let header: Vec<String> = (0..n)
            .map(|k| format!("u_{k}"))
            .chain(["node_index", "value", "residual"].map(String::from))
            .collect();
        let rows = run.cells.iter().map(|c| {
            let mut row: Vec<String> = c.u.iter().copied().map(fmt).collect();
            row.extend([c.node.to_string(), fmt(c.value), fmt(c.residual)]);
            row
        });
        outputs.csv("nodes.csv", &header, rows)?;
    }
    outputs.commit(&out)?;

    for node in &report.nodes {
        println!("{:<12} {:<14} {:e}", node.label, format!("{:?}", node.verdict).to_lowercase(), node.relative_residual);
    }
    let overall = report.overall();
    println!("overall: {}", format!("{overall:?}").to_lowercase());
    Ok(if overall == Verdict::Indeterminate && cfg.output.fail_on_indeterminate { 2 } else { 0 })
}

pub fn benchmark(args: &RunArgs) -> Result<u8, CliError> {
    let Loaded { cfg, out, format } = load(args)?;
    let task = cfg.task.clone().ok_or_else(|| CliError::Config("benchmark needs a `task` section".into()))?;
    let system = cfg.system.build()?;
    let encoding = cfg.encoding.build(&system, cfg.probe.seed)?;
    let reservoir = cfg.reservoir.clone().unwrap_or_default();
    let mut outputs = Outputs::default();
    let mut code = 0;
    match (task, encoding) {
        (TaskSpec::Stm { length, delays, lambda }, Encoding::Discrete(ch)) => {
            let basis = system.basis.clone().expect("finite system has a basis");
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.probe.seed);
            let internal = reservoir.internal.build(&system.dims, &mut rng)?;
            let res = DiscreteReservoir::new(ch, basis)?.with_internal(internal)?;
            let inputs = stm_inputs(length, cfg.probe.seed);
            let report = stm_capacity(&res, &inputs, &delays, lambda)?;
            if format.json() {
                outputs.json("benchmark.json", &report)?;
            }
            if format.csv() {
                let rows = report.delays.iter().zip(&report.r2).map(|(d, r)| vec![d.to_string(), fmt(*r)]);
                outputs.csv("benchmark.csv", &["delay".into(), "r2".into()], rows)?;
            }
            outputs.commit(&out)?;
            for (d, r) in report.delays.iter().zip(&report.r2) {
                println!("delay {d:<4} r2 {r:.6}");
            }
            println!("capacity {:.6}", report.capacity);
        }
        (
            TaskSpec::SineEstimation { omega, amplitude, phase, read_times, encodings, params, param_range, lambda },
            Encoding::GaussianDrive(drive),
        ) => {
            let (lo, hi) = param_range;
            if !(lo < hi) || params < 2 {
                return Err(CliError::Config("sine task needs param_range lo < hi and at least 2 params".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.probe.seed);
            let values: Vec<f64> = (0..params).map(|_| rng.random_range(lo..hi)).collect();
            let res = GaussianReservoir::new(drive, reservoir.allow_undamped)?;
            let task = SineTask { omega, amplitude, phase, read_times, lambda, tolerances: cfg.probe.tolerances };
            let reports: Vec<SineReport> = encodings
                .iter()
                .map(|&enc| sine_estimation(&res, &task, enc, &values))
                .collect::<Result<_, _>>()?;
            if format.json() {
                outputs.json("benchmark.json", &reports)?;
            }
            if format.csv() {
                let rows = reports.iter().map(|r| vec![encoding_name(r), fmt(r.readout.test_nmse)]);
                outputs.csv("benchmark.csv", &["param".into(), "nmse".into()], rows)?;
            }
            outputs.commit(&out)?;
            for r in &reports {
                let verdict = r.first_moment_verdict();
                println!(
                    "{:<10} test nmse {:.3e}  node linearity {}",
                    encoding_name(r),
                    r.readout.test_nmse,
                    format!("{verdict:?}").to_lowercase()
                );
                if verdict == Verdict::Indeterminate && cfg.output.fail_on_indeterminate {
                    code = 2;
                }
            }
        }
        (TaskSpec::Stm { .. }, _) => {
            return Err(CliError::Config("the memory task needs a discrete finite-dimensional encoding".into()))
        }
        (TaskSpec::SineEstimation { .. }, _) => {
            return Err(CliError::Config("the sine task needs a displacement-drive encoding".into()))
        }
        (TaskSpec::Crosscheck { .. }, _) => {
            return Err(CliError::Config("a crosscheck task runs with the crosscheck command".into()))
        }
    }
    Ok(code)
}

fn encoding_name(r: &SineReport) -> String {
    serde_json::to_value(r.encoding).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

#[derive(Serialize)]
struct CrosscheckReport {
    schema_version: u32,
    u: Vec<f64>,
    t: f64,
    labels: Vec<String>,
    spectral: Vec<f64>,
    stepped: Vec<f64>,
    max_deviation: f64,
    tolerance: f64,
}

pub fn crosscheck(args: &RunArgs) -> Result<u8, CliError> {
    let Loaded { cfg, out, format } = load(args)?;
    let Some(TaskSpec::Crosscheck { u, t }) = cfg.task.clone() else {
        return Err(CliError::Config("crosscheck needs a task of kind `crosscheck`".into()));
    };
    if !(t.is_finite() && t >= 0.0) {
        return Err(CliError::Config(format!("crosscheck time {t} must be finite and non-negative")));
    }
    let system = cfg.system.build()?;
    let Encoding::Drive(gen) = cfg.encoding.build(&system, cfg.probe.seed)? else {
        return Err(CliError::Config("crosscheck needs a finite-dimensional drive encoding".into()));
    };
    let basis = system.basis.as_ref().expect("finite system has a basis");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.probe.seed);
    let rho0 = DensityMatrix::ginibre(&system.dims, &mut rng);

    let spectral = spectral_evolve(&rho0, &gen, &u, t)?;
    let signal = InputSignal::constant(u.clone())?;
    let traj = evolve(&rho0, &gen, &signal, (0.0, t), &evolve_options(&cfg), Some(basis))?;
    let stepped = traj.nodes.last().expect("trajectory has a final sample").real();
    let exact = basis.expectations(&spectral.state)?.real();
    let max_deviation = exact.iter().zip(&stepped).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let report = CrosscheckReport {
        schema_version: crate::config::CONFIG_SCHEMA_VERSION,
        u,
        t,
        labels: basis.labels().to_vec(),
        spectral: exact,
        stepped,
        max_deviation,
        tolerance: CROSSCHECK_TOL,
    };
    let mut outputs = Outputs::default();
    if format.json() {
        outputs.json("crosscheck.json", &report)?;
    }
    if format.csv() {
        let rows = (0..report.labels.len())
            .map(|k| vec![report.labels[k].clone(), fmt(report.spectral[k]), fmt(report.stepped[k])]);
        outputs.csv("crosscheck.csv", &["node".into(), "spectral".into(), "stepped".into()], rows)?;
    }
    outputs.commit(&out)?;
    println!("max node deviation {max_deviation:e} (tolerance {CROSSCHECK_TOL:e})");
    if max_deviation <= CROSSCHECK_TOL {
        Ok(0)
    } else {
        eprintln!("error: spectral and stepped solutions disagree");
        Ok(1)
    }
}
