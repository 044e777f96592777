//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fail. Takes about half an hour; run it with
//! `cargo test --release -p crosskerr-cli --test acceptance`.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use crosskerr_core::device::{quality_factor, OscillatingTerm, TimeDependentOperator};
use crosskerr_core::dynamics::{lindblad_rhs, lindblad_rhs_dense, step_pure, Channel};
use crosskerr_core::experiments::*;
use crosskerr_core::operator::{annihilation, identity, Term};
use crosskerr_core::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gate_base(gamma_us: f64, eta_us: f64) -> DeviceParams {
    DeviceParams {
        omega_a_ghz: 3.5,
        omega_b_ghz: 6.5,
        delta_a_ghz: -0.3,
        delta_b_ghz: 0.7,
        g_mhz: 50.0,
        mu_mhz: 0.0,
        g_ab_mhz: 5.0,
        k: 1,
        rates: DecayRates::from_times(gamma_us, eta_us),
    }
}

fn cat_base() -> DeviceParams {
    DeviceParams {
        omega_a_ghz: 3.5,
        omega_b_ghz: 6.5,
        delta_a_ghz: -1.0,
        delta_b_ghz: 1.696,
        g_mhz: 150.0,
        mu_mhz: 200.0,
        g_ab_mhz: 15.0,
        k: 1,
        rates: DecayRates::from_times(0.1, 5.0),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn gate_anchor() -> Outcome {
    let start = Instant::now();
    let r = run_gate_point(&gate_base(10.0, 20.0), 0.7, true, &RunOptions::default()).unwrap();
    let f = r.fidelity_lossy.unwrap();
    let secs = start.elapsed().as_secs_f64();
    check(
        r.status.is_ok() && within(f, 0.994, 0.015) && secs <= 120.0,
        format!("F = {f:.5} (target 0.994 +/- 0.015), {secs:.1} s, {}", r.status.label()),
    )
}

fn decoherence_anchors() -> Outcome {
    let start = Instant::now();
    let targets = [0.949, 0.972, 0.983, 0.987, 0.991];
    let opts = RunOptions {
        workers: 5,
        ..RunOptions::default()
    };
    let recs = run_gate_heatmap(&gate_base(1.0, 1.0), 0.7, &QUOTED_DECOHERENCE, &opts).unwrap();
    let f: Vec<f64> = recs.iter().map(|r| r.fidelity_lossy.unwrap()).collect();
    let secs = start.elapsed().as_secs_f64();
    let close = f.iter().zip(targets).all(|(x, t)| within(*x, t, 0.02));
    let monotone = f.windows(2).all(|w| w[0] < w[1]);
    let ok = recs.iter().all(|r| r.status.is_ok());
    check(
        close && monotone && ok && secs <= 900.0,
        format!("F = {f:.5?} (targets {targets:?} +/- 0.02), monotone {monotone}, {secs:.1} s"),
    )
}

fn cat_anchors() -> Outcome {
    let start = Instant::now();
    let targets = [0.9675, 0.9703, 0.9708, 0.9709];
    let opts = RunOptions {
        dim_a: Some(10),
        dim_b: Some(10),
        dt_ns: Some(0.0035),
        ..RunOptions::default()
    };
    let recs = run_cat_points(&cat_base(), 8.48, &[4, 5, 6, 7], CatAmplitudes::default(), &opts).unwrap();
    let f: Vec<f64> = recs.iter().map(|r| r.fidelity_lossy.unwrap()).collect();
    let secs = start.elapsed().as_secs_f64();
    let close = f.iter().zip(targets).all(|(x, t)| within(*x, t, 0.02));
    let monotone = f.windows(2).all(|w| w[0] <= w[1]);
    check(
        close && monotone && secs <= 1800.0,
        format!(
            "F = {f:.5?} (targets {targets:?} +/- 0.02), monotone {monotone}, {secs:.0} s, {}",
            recs[0].status.label()
        ),
    )
}

fn derived_arithmetic() -> Outcome {
    let gate = gate_params(&gate_base(10.0, 20.0), 0.7).unwrap();
    let d = derive(&gate).unwrap();
    let qa = quality_factor(3.5, 20.0);
    let qb = quality_factor(6.5, 20.0);
    let cat = derive(&cat_params(&cat_base(), 8.48).unwrap()).unwrap();
    let ok = within(d.chi_mhz, 4.2, 0.02 * 4.2)
        && within(gate.mu_mhz, 342.0, 0.01 * 342.0)
        && within(qa, 4.4e5, 0.02 * 4.4e5)
        && within(qb, 8.2e5, 0.02 * 8.2e5)
        && within(cat.chi_mhz, 0.83, 0.02 * 0.83);
    check(
        ok,
        format!(
            "chi {:.4} MHz, mu {:.2} MHz, Q_a {qa:.4e}, Q_b {qb:.4e}, cat chi {:.4} MHz",
            d.chi_mhz, gate.mu_mhz, cat.chi_mhz
        ),
    )
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn gate_fidelity(kind: HamiltonianKind, dim: usize, phase_per_step: f64) -> (f64, Trajectory) {
    let space = HilbertSpace::new(dim, dim).unwrap();
    let params = gate_params(&gate_base(10.0, 20.0), 0.7).unwrap();
    let spec = HamiltonianSpec::new(kind, params, space).unwrap();
    let model = LindbladModel::from_spec(&spec).unwrap();
    let t = derive(&spec.params).unwrap().t_gate_ns;
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let input = states::gate_input(space, h, h, h, h).unwrap();
    let ideal = states::ideal_gate_output(space, h, h, h, h).unwrap();
    let cfg = IntegratorConfig::new(phase_per_step / model.max_frequency(), t).unwrap();
    let traj = integrate(&model, &input, &cfg).unwrap();
    (fidelity(&ideal, &traj.final_state).unwrap(), traj)
}

fn property_suite() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut note = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };

    // Physicality and step-size convergence on the lossy gate.
    let (f1, traj) = gate_fidelity(HamiltonianKind::FullCrosstalk, 4, 0.1);
    note(traj.max_trace_deviation() <= 1e-8, format!("trace {:e}", traj.max_trace_deviation()));
    note(traj.min_eigenvalue >= -1e-6, format!("positivity {:e}", traj.min_eigenvalue));
    let (f_half, _) = gate_fidelity(HamiltonianKind::FullCrosstalk, 4, 0.05);
    note((f1 - f_half).abs() <= 1e-7, format!("dt halving {:e}", (f1 - f_half).abs()));
    let (f8, _) = gate_fidelity(HamiltonianKind::FullCrosstalk, 8, 0.1);
    note((f1 - f8).abs() <= 5e-4, format!("dim doubling {:e}", (f1 - f8).abs()));
    let (fr, _) = gate_fidelity(HamiltonianKind::RotatingFrame, 4, 0.025);
    note((f1 - fr).abs() <= 1e-5, format!("rotating frame {:e}", (f1 - fr).abs()));

    // Structured against dense operators and right-hand sides.
    let space = HilbertSpace::new(5, 5).unwrap();
    let params = gate_params(&gate_base(10.0, 20.0), 0.7).unwrap();
    let psi = CVector::from_fn(space.total(), |i, _| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
    let psi = psi.normalize();
    let mut worst: f64 = 0.0;
    for kind in [HamiltonianKind::FullCrosstalk, HamiltonianKind::Effective3, HamiltonianKind::Effective4] {
        let spec = HamiltonianSpec::new(kind, params.clone(), space).unwrap();
        for t in [0.0, 13.7, 88.1] {
            let h = build_hamiltonian(&spec, t).unwrap();
            let d = h.apply_vector(&psi).unwrap() - h.to_dense() * &psi;
            worst = worst.max(d.camax());
        }
        if kind == HamiltonianKind::FullCrosstalk {
            let model = LindbladModel::from_spec(&spec).unwrap();
            let rho = &psi * psi.adjoint();
            let a = lindblad_rhs(&model, &rho, 21.3).unwrap();
            worst = worst.max(max_abs(&(a - lindblad_rhs_dense(&model, &rho, 21.3))));
        }
    }
    note(worst <= 1e-12, format!("structured vs dense {worst:e}"));

    // Analytic decay.
    let small = HilbertSpace::new(3, 2).unwrap();
    let kappa = 0.05;
    let zero = Term::new(C64::new(0.0, 0.0), identity(3), identity(3), identity(2));
    let h0 = TimeDependentOperator::new(small, vec![OscillatingTerm { term: zero, frequency: 0.0 }]).unwrap();
    let a = QOperator::product(small, C64::new(1.0, 0.0), identity(3), annihilation(3).unwrap(), identity(2)).unwrap();
    let model = LindbladModel::new(
        h0,
        vec![Channel {
            label: "a".into(),
            operator: a,
            rate: kappa,
        }],
    )
    .unwrap();
    let traj = integrate(
        &model,
        &QState::basis(small, Level::G, 1, 0),
        &IntegratorConfig::new(0.05, 20.0).unwrap().with_monitor_every(20),
    )
    .unwrap();
    let decay = traj
        .samples
        .iter()
        .map(|s| (s.n_a - (-kappa * s.t).exp()).abs())
        .fold(0.0, f64::max);
    note(decay <= 1e-6, format!("decay oracle {decay:e}"));

    // Cross-Kerr closed form against stepping.
    let space = HilbertSpace::new(4, 4).unwrap();
    let spec = HamiltonianSpec::new(HamiltonianKind::CrossKerr, params.clone(), space).unwrap();
    let t = derive(&params).unwrap().t_cat_ns;
    let psi0 = QState::pure_normalized(space, CVector::from_fn(space.total(), |i, _| C64::new(1.0 + i as f64, 0.5)))
        .unwrap();
    let closed = evolve_unitary(&spec, &psi0, t, None).unwrap();
    let h = hamiltonian_terms(&spec).unwrap();
    let stepped = step_pure(&h, psi0.as_pure().unwrap(), t, Some(0.004 / h.max_frequency())).unwrap();
    let diff = (closed.as_pure().unwrap() - stepped).camax();
    note(diff <= 1e-10, format!("closed form vs stepped {diff:e}"));

    // Gate condition identities.
    let sol = solve_gate_parameters(50.0, -0.3, 0.7, 1).unwrap();
    let d = derive(&params).unwrap();
    let stark = 50.0 * 50.0 / 300.0 * sol.t_gate_ns * 1e-3;
    let ident = (stark - 1.0).abs().max((d.theta_mhz.abs() * sol.t_gate_ns * 1e-3 - 0.5).abs());
    note(ident <= 1e-10, format!("gate identities {ident:e}"));

    // Dispersive scaling of the effective-model deficit.
    let report = validate_effective(&params, (1, 1), &[1.0, 4.0], None, &RunOptions::default()).unwrap();
    for pair in [CHAIN[0], CHAIN[1]] {
        let (d1, d4) = (report.deficit(pair, 1.0).unwrap(), report.deficit(pair, 4.0).unwrap());
        note(d1 / d4 >= 4.0, format!("{} vs {} scaling {:.2}", pair.reference, pair.approximation, d1 / d4));
    }

    let secs = start.elapsed().as_secs_f64();
    note(secs <= 1200.0, format!("runtime {secs:.0} s"));
    if failures.is_empty() {
        check(true, format!("all properties hold, {secs:.0} s"))
    } else {
        check(false, failures.join("; "))
    }
}

fn determinism() -> Outcome {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/gate_sweep.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for (i, workers) in ["1", "1", "8"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let status = Command::new(env!("CARGO_BIN_EXE_crosskerr"))
            .args(["gate-sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--workers", workers])
            .output()
            .unwrap()
            .status;
        if !status.success() {
            return check(false, format!("gate-sweep exited with {status}"));
        }
        csvs.push(std::fs::read(out.join("gate_sweep.csv")).unwrap());
    }
    let same = csvs[0] == csvs[1] && csvs[0] == csvs[2];
    check(same, format!("gate_sweep.csv identical across two runs and workers 1/8: {same}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("gate anchor", gate_anchor),
        ("decoherence anchors", decoherence_anchors),
        ("derived parameters", derived_arithmetic),
        ("property suite", property_suite),
        ("determinism", determinism),
        ("cat-state anchors", cat_anchors),
    ];
    let numbers = [1, 2, 4, 5, 6, 3];
    let mut all = true;
    for ((name, f), n) in criteria.iter().zip(numbers) {
        let o = f();
        all &= o.pass;
        println!("criterion {n} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
