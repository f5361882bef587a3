//! The acceptance criteria, run in order in one test so the runtime limits are
//! measured without competing tests. Each criterion prints one PASS/FAIL line.

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use cqed_core::analysis::{excitation_balance, overlap_visibility};
use cqed_core::dynamics::validate::run_case;
use cqed_core::dynamics::{integrate_master, AnalyticCase, Channel, Controls, FnDrive, SolverOptions, TrajectoryOptions};
use cqed_core::protocol::{
    absorption_trajectories, efficiency_budget, fringe_point, overlap_fields, prepare_fringe, run_single_photon,
    transfer_efficiency, transfer_probability, AbsorptionPlan,
};
use cqed_core::{Level, State, SystemParams, C64};
use cqed_lab::lab::FringeWindow;
use cqed_lab::output::write_atomic;
use cqed_lab::{run, Command, Lab, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    passed: bool,
    failures: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { passed: true, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.passed = false;
            self.failures.push(what());
        }
    }
}

/// Written straight to the process stderr so the lines show up even when the
/// harness captures test output.
fn report(id: usize, name: &str, v: &Verdict, detail: &str, elapsed: Duration) {
    let tag = if v.passed { "PASS" } else { "FAIL" };
    let mut line = format!("{tag} criterion {id:>2}: {name} ({detail}; {:.1} s)", elapsed.as_secs_f64());
    if !v.passed {
        line += &format!(" :: {}", v.failures.join("; "));
    }
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn lossless(g: f64, delta: f64, cutoff: usize) -> SystemParams {
    SystemParams {
        g,
        kappa_in: 0.0,
        kappa_out: 0.0,
        kappa_loss: 0.0,
        gamma_a: 0.0,
        gamma_b: 0.0,
        delta,
        delta2: 0.0,
        fock_cutoff: cutoff,
    }
}

fn analytic_oracles() -> (Verdict, String) {
    let mut v = Verdict::new();
    let mut detail = Vec::new();
    for case in AnalyticCase::ALL {
        let r = run_case(case).unwrap();
        v.check(r.passed && r.max_error < case.threshold(), || format!("{case} error {:e}", r.max_error));
        detail.push(format!("{case} {:.1e}", r.max_error));
    }
    // vacuum Rabi period from the first revival of |b,1⟩
    let p = lossless(1.0, 0.0, 4);
    let h = PI / 4000.0;
    let options = SolverOptions { sample_dt: h, ..Default::default() };
    let run = integrate_master(&State::basis(p.space().unwrap(), Level::B, 1), &Controls::OFF, &p, (0.0, 1.5 * PI), &options)
        .unwrap();
    let s = &run.series;
    let i = (1..s.len() - 1)
        .filter(|&i| s.t[i] > 0.5 * PI)
        .min_by(|&a, &b| s.p_e[a].total_cmp(&s.p_e[b]))
        .unwrap();
    let (y0, y1, y2) = (s.p_e[i - 1], s.p_e[i], s.p_e[i + 1]);
    let period = s.t[i] + 0.5 * h * (y0 - y2) / (y0 - 2.0 * y1 + y2);
    let rel = (period - PI).abs() / PI;
    v.check(rel < 1e-4, || format!("Rabi period relative error {rel:e}"));
    detail.push(format!("period {rel:.1e}"));
    (v, detail.join(", "))
}

fn ideal_transfer() -> (Verdict, String) {
    let mut v = Verdict::new();
    let p = lossless(1.0, 10.0 / 16.0, 4);
    let ramp = 300.0;
    let theta_end = (2.0_f64 * 1000.0_f64.sqrt()).atan();
    // mixing angle tan θ = Ω/2g follows a smooth sin² profile
    let drive = FnDrive {
        f: move |t: f64| {
            let x = (t / ramp).clamp(0.0, 1.0);
            let theta = theta_end * (0.5 * PI * x).sin().powi(2);
            Controls { omega: 2.0 * p.g * theta.tan(), ..Controls::OFF }
        },
        max_step: Some(0.5),
    };
    let options = SolverOptions { sample_dt: 0.5, ..Default::default() };
    let space = p.space().unwrap();
    let run = integrate_master(&State::basis(space, Level::A, 0), &drive, &p, (0.0, ramp), &options).unwrap();
    let rho = run.final_state.to_density_matrix();
    let k = space.index(Level::B, 1);
    let fidelity = rho.as_slice()[k * space.total_dim() + k].re;
    let max_pe = run.series.p_e.iter().cloned().fold(0.0, f64::max);
    v.check(ramp >= 100.0 / p.g, || "ramp shorter than 100/g".into());
    v.check(fidelity >= 0.999, || format!("fidelity {fidelity}"));
    v.check(max_pe < 1e-3, || format!("max P_e {max_pe:e}"));
    (v, format!("fidelity {fidelity:.6}, max P_e {max_pe:.1e}, ramp {ramp}/g"))
}

fn state_sanity(lab: &Lab) -> (Verdict, String) {
    let mut v = Verdict::new();
    let mut setup = lab.setup();
    setup.solver = SolverOptions { sample_dt: 2e-9, check_positivity: true, ..setup.solver };
    let mut tracks = Vec::new();
    for (t1, omega1) in [(0.0, true), (-0.2e-6, true), (0.2e-6, true), (0.0, false)] {
        let plan = AbsorptionPlan::new(&setup, t1, omega1).unwrap();
        tracks.push(integrate_master(&plan.initial, &plan.schedule, &plan.params, plan.span, &setup.solver).unwrap().series);
    }
    let a0 = State::basis(setup.params.space().unwrap(), Level::A, 0);
    let emission = run_single_photon(&setup, &a0).unwrap();
    tracks.push(emission.series.clone());
    for omega1 in [true, false] {
        let branch = prepare_fringe(&setup, omega1, 1e-6).unwrap();
        for theta in [0.0, 2.0] {
            tracks.push(fringe_point(&setup, &branch, theta).unwrap());
        }
    }
    let trace = tracks.iter().map(|s| s.max_trace_residual()).fold(0.0, f64::max);
    let herm = tracks.iter().map(|s| s.max_hermiticity_residual()).fold(0.0, f64::max);
    let eig = tracks.iter().map(|s| s.min_eigenvalue_overall().unwrap()).fold(f64::INFINITY, f64::min);
    let balance = excitation_balance(&emission.series, &setup.params).unwrap();
    v.check(trace < 1e-8, || format!("trace residual {trace:e}"));
    v.check(herm < 1e-10, || format!("hermiticity {herm:e}"));
    v.check(eig >= -1e-8, || format!("min eigenvalue {eig:e}"));
    v.check((balance - 1.0).abs() < 1e-4, || format!("excitation balance {balance}"));
    (
        v,
        format!(
            "{} runs, trace {trace:.1e}, hermiticity {herm:.1e}, min eig {eig:.1e}, balance {:.1e}",
            tracks.len(),
            (balance - 1.0).abs()
        ),
    )
}

fn trajectory_equivalence(lab: &Lab) -> (Verdict, String) {
    let mut v = Verdict::new();
    let setup = lab.setup();
    let n = 10_000;
    let ens = absorption_trajectories(&setup, 0, 0.0, true, n, 17).unwrap();
    let [pa, _, _] = ens.final_populations();
    let exact = transfer_probability(&setup, 0.0, true).unwrap();
    let z = (pa.mean - exact).abs() / pa.std_err;
    v.check(z < 3.0, || format!("P_a {} ± {} vs {exact}", pa.mean, pa.std_err));

    let bare = SystemParams { g: 0.0, ..setup.params };
    let initial = State::basis(bare.space().unwrap(), Level::B, 1);
    let span = (0.0, 30.0 / bare.kappa());
    let ens = cqed_core::dynamics::run_trajectories(&initial, &Controls::OFF, &bare, span, n, 23, &TrajectoryOptions::default())
        .unwrap();
    let expected = bare.kappa_out / bare.kappa();
    let f = ens.fraction_with(Channel::Out);
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    v.check((f - expected).abs() < 3.0 * sigma, || format!("out fraction {f} vs {expected}"));
    (
        v,
        format!("P_a {:.4} ± {:.4} vs {exact:.4} ({z:.2} se); out fraction {f:.4} vs {expected:.4}", pa.mean, pa.std_err),
    )
}

struct SweepScalars {
    r: Vec<f64>,
    p_a: Vec<f64>,
}

fn sweep_shape(lab: &Lab, dir: &Path) -> (Verdict, String, SweepScalars) {
    let mut v = Verdict::new();
    let s = lab.sweep().unwrap();
    write_atomic(&dir.join("sweep.csv"), &lab.sweep_table(&s).render()).unwrap();
    let k = s.peak_index();
    let tol = 1e-6;
    let unimodal = s.r[..=k].windows(2).all(|w| w[1] >= w[0] - tol) && s.r[k..].windows(2).all(|w| w[1] <= w[0] + tol);
    v.check(s.t1.len() == 15, || format!("{} grid points", s.t1.len()));
    v.check(unimodal, || format!("r not single-peaked: {:?}", s.r));
    v.check(s.r[k] > 1.0, || format!("r_max {}", s.r[k]));
    v.check(s.t1[k].abs() <= lab.config.lambda_width_ns * 1e-9, || format!("peak at {}", s.t1[k]));
    for (i, &t) in s.t1.iter().enumerate() {
        if t >= 1.5e-6 {
            v.check((s.r[i] - 1.0).abs() <= 0.1, || format!("r({t}) = {}", s.r[i]));
        }
        if t <= -1.5e-6 {
            v.check(s.r[i] < 1.0, || format!("r({t}) = {}", s.r[i]));
        }
    }
    let detail = format!(
        "r_max {:.3} at t1 = {:.0} ns, r(+2 us) {:.6}, r(-2 us) {:.1e}, p_i {:.4}, n_traj {}",
        s.r[k],
        s.t1[k] * 1e9,
        s.r[s.r.len() - 1],
        s.r[0],
        s.p_i,
        s.n_traj
    );
    (v, detail, SweepScalars { r: s.r, p_a: s.p_a })
}

fn fringe_behavior(lab: &Lab, dir: &Path) -> (Verdict, String, Vec<FringeWindow>) {
    let mut v = Verdict::new();
    let windows = lab.fringe().unwrap();
    for (i, w) in windows.iter().enumerate() {
        let name = if i == 0 { "fringe.csv".to_string() } else { format!("fringe_{i}.csv") };
        write_atomic(&dir.join(name), &lab.fringe_table(w).render()).unwrap();
    }
    v.check(lab.config.theta_points == 16, || "not 16 phases".into());
    for w in &windows {
        let (a, i) = (&w.result.fit_a, &w.result.fit_i);
        let ns = w.result.window * 1e9;
        v.check(a.v > 0.2, || format!("v_a({ns:.0} ns) = {}", a.v));
        v.check(a.rms_residual < 0.05 * a.amplitude(), || format!("rms {} vs amplitude {}", a.rms_residual, a.amplitude()));
        v.check(i.v < 0.05, || format!("v_i({ns:.0} ns) = {}", i.v));
    }
    let short = windows.iter().find(|w| (w.result.window - 200e-9).abs() < 1e-12);
    let long = windows.iter().find(|w| (w.result.window - 1e-6).abs() < 1e-12);
    let (short, long) = (short.expect("200 ns window"), long.expect("1 us window"));
    v.check(short.result.fit_a.v > long.result.fit_a.v, || {
        format!("v(200 ns) {} <= v(1 us) {}", short.result.fit_a.v, long.result.fit_a.v)
    });
    let detail = format!(
        "v_a 200 ns {:.4} ± {:.1e}, 1 us {:.4}; v_i {:.1e} / {:.1e}; rms/amplitude {:.1e}",
        short.result.fit_a.v,
        short.result.fit_a.sigma_v,
        long.result.fit_a.v,
        short.result.fit_i.v,
        long.result.fit_i.v,
        short.result.fit_a.rms_residual / short.result.fit_a.amplitude()
    );
    (v, detail, windows)
}

fn efficiency(lab: &Lab, sweep: &SweepScalars) -> (Verdict, String, f64) {
    let mut v = Verdict::new();
    let p = &lab.params;
    let budget = efficiency_budget(p.kappa_in, p.kappa_out, p.kappa_loss, 1).unwrap();
    let n_bar = lab.config.n_bar_in;
    let mut worst = 0.0_f64;
    for &pa in &sweep.p_a {
        let zeta = transfer_efficiency(pa, n_bar).unwrap();
        worst = worst.max(zeta);
        v.check(zeta <= budget, || format!("zeta {zeta} > budget {budget}"));
    }
    let p_i = transfer_probability(&lab.setup(), 0.0, false).unwrap();
    v.check(transfer_efficiency(p_i, n_bar).unwrap() <= budget, || "incoherent zeta above budget".into());
    let two_pol = efficiency_budget(1.0, 1.0, 0.0, 2).unwrap();
    let one_sided = efficiency_budget(0.9, 0.0, 0.1, 1).unwrap();
    v.check(two_pol == 0.25, || format!("symmetric two-polarization budget {two_pol}"));
    v.check((one_sided - 0.9).abs() < 1e-15, || format!("one-sided budget {one_sided}"));
    let zeta = transfer_efficiency(transfer_probability(&lab.setup(), 0.0, true).unwrap(), n_bar).unwrap();
    v.check((0.02..=0.25).contains(&zeta), || format!("zeta {zeta}"));
    (v, format!("zeta {zeta:.4}, max over sweep {worst:.4} <= budget {budget:.4}; 0.25 and 0.9 exact"), zeta)
}

/// Composite 5-point Gauss-Legendre rule.
fn gauss_legendre(f: impl Fn(f64) -> C64, a: f64, b: f64, panels: usize) -> C64 {
    const X: [f64; 5] = [0.0, -0.5384693101056831, 0.5384693101056831, -0.906179845938664, 0.906179845938664];
    const W: [f64; 5] = [0.5688888888888889, 0.47862867049936647, 0.47862867049936647, 0.23692688505618908, 0.23692688505618908];
    let h = (b - a) / panels as f64;
    let mut s = C64::new(0.0, 0.0);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W) {
            s += f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    s
}

type Envelope = Vec<(f64, f64, f64, f64, f64)>;

fn random_envelope(rng: &mut ChaCha8Rng) -> Envelope {
    let terms = rng.random_range(1..=3);
    (0..terms)
        .map(|_| {
            (
                rng.random_range(0.2..2.0),
                rng.random_range(-PI..PI),
                rng.random_range(0.5..2.5),
                rng.random_range(0.15..0.8),
                rng.random_range(-2.0..2.0),
            )
        })
        .collect()
}

fn eval(env: &Envelope, t: f64) -> C64 {
    env.iter()
        .map(|&(amp, phase, center, width, chirp)| {
            let u = (t - center) / width;
            C64::from_polar(amp * (-u * u).exp(), phase + chirp * u)
        })
        .sum()
}

fn overlap_oracle(lab: &Lab, fringe: &[FringeWindow]) -> (Verdict, String) {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 2.5e-6;
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let (ea, eb) = (random_envelope(&mut rng), random_envelope(&mut rng));
        let start = rng.random_range(0.0..1.0);
        let len = rng.random_range(0.5..1.9);
        // grid offset so the window edges fall between samples
        let t0 = start - rng.random_range(1.0..2.0) * h;
        let t: Vec<f64> = (0..=((len + 4.0 * h) / h) as usize).map(|k| t0 + k as f64 * h).collect();
        let alpha: Vec<C64> = t.iter().map(|&x| eval(&ea, x)).collect();
        let beta: Vec<C64> = t.iter().map(|&x| eval(&eb, x)).collect();
        let got = overlap_visibility(&t, &alpha, &beta, start, len).unwrap();
        let cross = gauss_legendre(|x| eval(&ea, x).conj() * eval(&eb, x), start, start + len, 2000);
        let na = gauss_legendre(|x| C64::new(eval(&ea, x).norm_sqr(), 0.0), start, start + len, 2000).re;
        let nb = gauss_legendre(|x| C64::new(eval(&eb, x).norm_sqr(), 0.0), start, start + len, 2000).re;
        let expected = 2.0 * cross.norm() / (na + nb);
        worst = worst.max((got - expected).abs());
    }
    v.check(worst < 1e-10, || format!("worst deviation {worst:e}"));

    let setup = lab.setup();
    let branch = prepare_fringe(&setup, true, 1e-6).unwrap();
    let fields = overlap_fields(&setup, &branch).unwrap();
    let mut est = Vec::new();
    for w in fringe {
        let x = overlap_visibility(&fields.t, &fields.alpha, &fields.beta, w.adiabatic.window_start, w.result.window).unwrap();
        v.check((0.4..=0.8).contains(&x), || format!("v_est {x} for {} s window", w.result.window));
        v.check((x - w.overlap).abs() < 1e-12, || "estimate differs from the fringe report".into());
        est.push(format!("{x:.3}"));
    }
    (v, format!("100 pairs, worst {worst:.1e}; default v_est {}", est.join(" / ")))
}

fn truncation(config: &RunConfig, sweep: &SweepScalars, fringe: &[FringeWindow], zeta: f64) -> (Verdict, String) {
    let mut v = Verdict::new();
    let lab6 = Lab::new(RunConfig { fock_cutoff: 6, n_traj: 0, ..config.clone() }).unwrap();
    let s6 = lab6.sweep().unwrap();
    let f6 = lab6.fringe().unwrap();
    let zeta6 = transfer_efficiency(transfer_probability(&lab6.setup(), 0.0, true).unwrap(), config.n_bar_in).unwrap();
    let mut worst = 0.0_f64;
    let mut track = |name: &str, a: f64, b: f64, v: &mut Verdict| {
        let d = (a - b).abs();
        worst = worst.max(d);
        v.check(d < 1e-3, || format!("{name}: {a} -> {b}"));
    };
    for (i, (&a, &b)) in sweep.r.iter().zip(&s6.r).enumerate() {
        track(&format!("r[{i}]"), a, b, &mut v);
    }
    for (w4, w6) in fringe.iter().zip(&f6) {
        track("v_a", w4.result.fit_a.v, w6.result.fit_a.v, &mut v);
        track("v_i", w4.result.fit_i.v, w6.result.fit_i.v, &mut v);
        track("rms", w4.result.fit_a.rms_residual, w6.result.fit_a.rms_residual, &mut v);
        track("v_est", w4.overlap, w6.overlap, &mut v);
    }
    track("zeta", zeta, zeta6, &mut v);
    (v, format!("largest change {worst:.1e}"))
}

fn determinism(config: &RunConfig, first: &Path) -> (Verdict, String) {
    let mut v = Verdict::new();
    let dir = tempfile::tempdir().unwrap();
    let serial = RunConfig { workers: 1, out_dir: Some(dir.path().to_path_buf()), ..config.clone() };
    run(Command::Sweep, serial.clone()).unwrap();
    run(Command::Fringe, serial).unwrap();
    let mut compared = 0;
    for (a, b) in [("sweep.csv", "sweep.csv"), ("fringe.csv", "fringe.csv"), ("fringe_1.csv", "fringe_1000ns.csv")] {
        let x = std::fs::read(first.join(a)).unwrap();
        let y = std::fs::read(dir.path().join(b)).unwrap();
        v.check(x == y, || format!("{a} differs from the serial {b}"));
        compared += 1;
    }
    (v, format!("{compared} files identical at {} and 1 workers", config.workers))
}

#[test]
fn acceptance_criteria() {
    let mut all = true;
    let mut record = |id, name, v: Verdict, detail: String, t: Instant, limit: Option<Duration>| {
        let elapsed = t.elapsed();
        let mut v = v;
        if let Some(limit) = limit {
            v.check(elapsed < limit, || format!("took {:.1} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs()));
        }
        report(id, name, &v, &detail, elapsed);
        all &= v.passed;
    };

    let t = Instant::now();
    let (v, d) = analytic_oracles();
    record(1, "analytic oracle suite", v, d, t, Some(Duration::from_secs(5)));

    let t = Instant::now();
    let (v, d) = ideal_transfer();
    record(2, "ideal adiabatic transfer", v, d, t, Some(Duration::from_secs(5)));

    let out = tempfile::tempdir().unwrap();
    let config = RunConfig { workers: 4, out_dir: Some(out.path().to_path_buf()), ..RunConfig::default() };
    let lab = Lab::new(config.clone()).unwrap();

    let t = Instant::now();
    let (v, d) = state_sanity(&lab);
    record(3, "state sanity and excitation balance", v, d, t, None);

    let t = Instant::now();
    let (v, d) = trajectory_equivalence(&lab);
    record(4, "trajectory/master equivalence", v, d, t, Some(Duration::from_secs(120)));

    let t = Instant::now();
    let (v, d, sweep) = sweep_shape(&lab, out.path());
    record(5, "arrival-time sweep shape", v, d, t, Some(Duration::from_secs(600)));

    let t = Instant::now();
    let (v, d, fringe) = fringe_behavior(&lab, out.path());
    record(6, "fringe behavior", v, d, t, Some(Duration::from_secs(600)));

    let t = Instant::now();
    let (v, d, zeta) = efficiency(&lab, &sweep);
    record(7, "efficiency budget", v, d, t, None);

    let t = Instant::now();
    let (v, d) = overlap_oracle(&lab, &fringe);
    record(8, "overlap visibility", v, d, t, None);

    let t = Instant::now();
    let (v, d) = truncation(&config, &sweep, &fringe, zeta);
    record(9, "Fock truncation convergence", v, d, t, None);

    let t = Instant::now();
    let (v, d) = determinism(&config, out.path());
    record(10, "determinism across worker counts", v, d, t, None);

    assert!(all, "acceptance criteria failed; see the FAIL lines above");
}
