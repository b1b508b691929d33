//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use etsmc::discretize::{discretize_shift, to_delta, ContinuousLti, DualRate};
use etsmc::matlib::{dot, Mat};
use etsmc::observability::MultirateMaps;
use etsmc::scenario::ScenarioConfig;
use etsmc::simkit::{DisturbanceSpec, SimTrace};
use etsmc::smc::{lyapunov_residual, place_sliding_vector, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn random_observable(rng: &mut ChaCha8Rng) -> ContinuousLti {
    loop {
        let n = rng.gen_range(1..=6);
        let p = rng.gen_range(1..=2usize).min(n);
        let mut fill = |r, c, scale: f64| Mat::from_fn(r, c, |_, _| rng.gen_range(-scale..scale));
        let a = fill(n, n, 2.0);
        let b = fill(n, 1, 1.0);
        let c = fill(p, n, 1.0);
        if let Ok(sys) = ContinuousLti::new(a, b, c, 0.0) {
            return sys;
        }
    }
}

fn factorization_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let sys = random_observable(&mut rng);
        let min_n = sys.n().div_ceil(sys.outputs());
        let n_fast = rng.gen_range(min_n..=8);
        let delta = 10f64.powf(rng.gen_range(-6.0..-1.0));
        let dual = match DualRate::new(&sys, delta * n_fast as f64, n_fast) {
            Ok(d) => d,
            Err(e) => return outcome(false, format!("dual-rate model failed: {e}")),
        };
        let maps = match MultirateMaps::from_dual(&dual) {
            Ok(m) => m,
            Err(e) => return outcome(false, format!("stacks failed: {e}")),
        };
        worst = worst.max(maps.factorization_residual().observability);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-9 && secs < 5.0,
        format!("max relative residual {worst:.3e} over 200 systems in {secs:.2} s"),
    )
}

fn table_reproduction() -> Outcome {
    let start = Instant::now();
    let cfg = ScenarioConfig::example1();
    let report = match cfg.conditioning(&[1e-4, 2.5e-5]) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let close =
        |got: &[f64], want: &[f64]| got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 5e-5);
    let mut ok = close(&report.continuous.singular_values, &[7.0, 7.0, 1.0, 1.0]);
    let printed = [
        ([2.0, 0.0002, 0.0, 0.0], [7.0004, 6.9997, 1.0, 1.0]),
        ([2.0, 0.0001, 0.0, 0.0], [7.0001, 6.9999, 1.0, 1.0]),
    ];
    for (p, (shift, delta)) in report.periods.iter().zip(&printed) {
        ok &= close(&p.shift.singular_values, shift);
        ok &= close(&p.delta_form.singular_values, delta);
        ok &= p.delta_form.rank == 4;
        ok &= p.shift.singular_values[1] / p.shift.singular_values[0] < 1e-3;
    }
    let secs = start.elapsed().as_secs_f64();
    let ranks: Vec<String> = report
        .periods
        .iter()
        .map(|p| {
            format!(
                "Δ={}: delta rank {}, shift σ2/σ1 {:.2e}",
                p.delta,
                p.delta_form.rank,
                p.shift.singular_values[1] / p.shift.singular_values[0]
            )
        })
        .collect();
    outcome(
        ok && secs < 1.0,
        format!("{} in {secs:.3} s", ranks.join("; ")),
    )
}

fn example_matrices() -> Outcome {
    let start = Instant::now();
    let sig = |got: f64, want: f64| {
        if want == 0.0 {
            got.abs() < 1e-12
        } else {
            ((got - want) / want).abs() <= 5e-4
        }
    };
    let ex1 = ScenarioConfig::example1().plant().expect("preset plant");
    let s1 = discretize_shift(&ex1, 1e-4).expect("discretize");
    let d1 = to_delta(&s1);
    let mut bad = Vec::new();
    let a_tau = [
        [1.0, 1e-4, 3.5e-8, 1.1667e-12],
        [0.0, 1.0, 7e-4, 3.5e-8],
        [0.0, 0.0, 1.0, 1e-4],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let a_delta = [
        [0.0, 1.0, 3.5e-4, 1.1667e-8],
        [0.0, 0.0, 7.0, 3.5e-4],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ];
    for i in 0..4 {
        for j in 0..4 {
            if !sig(s1.a_tau[(i, j)], a_tau[i][j]) {
                bad.push(format!("A_tau[{i},{j}]"));
            }
            if !sig(d1.a_delta[(i, j)], a_delta[i][j]) {
                bad.push(format!("A_delta[{i},{j}]"));
            }
        }
    }
    for (i, (bt, bd)) in [
        (2.9167e-17, 2.9167e-13),
        (1.1667e-12, 1.1667e-8),
        (5e-9, 5e-5),
        (1e-4, 1.0),
    ]
    .iter()
    .enumerate()
    {
        if !sig(s1.b_tau[(i, 0)], *bt) {
            bad.push(format!("B_tau[{i}]"));
        }
        if !sig(d1.b_delta[(i, 0)], *bd) {
            bad.push(format!("B_delta[{i}]"));
        }
    }
    let ex2 = ScenarioConfig::example2().plant().expect("preset plant");
    let d2 = to_delta(&discretize_shift(&ex2, 1e-2).expect("discretize"));
    let a2 = [
        [-1.9900, 0.9900, 0.0050],
        [-1.9850, -0.0100, 1.0000],
        [-0.9900, -0.0050, -0.0000],
    ];
    for i in 0..3 {
        for j in 0..3 {
            if (d2.a_delta[(i, j)] - a2[i][j]).abs() > 5e-5 {
                bad.push(format!("ex2 A_delta[{i},{j}]"));
            }
        }
    }
    for (i, p) in [0.0249, 5.0198, 3.9999].iter().enumerate() {
        if (d2.b_delta[(i, 0)] - p).abs() > 5e-5 {
            bad.push(format!("ex2 B_delta[{i}]"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if bad.is_empty() {
        outcome(
            secs < 1.0,
            format!("all displayed entries agree, {secs:.3} s"),
        )
    } else {
        outcome(false, format!("mismatch at {}", bad.join(", ")))
    }
}

fn band_formulas() -> Outcome {
    let start = Instant::now();
    let r1 = ScenarioConfig::example1().design();
    let r2 = ScenarioConfig::example2().design();
    let secs = start.elapsed().as_secs_f64();
    match (r1, r2) {
        (Ok(r1), Ok(r2)) => {
            let ok1 = (r1.omega1 - 0.0286).abs() <= 1e-3;
            let ok2 = (r2.omega1 - 0.1119).abs() <= 5e-3;
            outcome(
                ok1 && ok2 && secs < 1.0,
                format!(
                    "example1 Ω₁ = {:.5} ({}), example2 Ω₁ = {:.5} ({}, target 0.1119 ± 0.005), {secs:.3} s",
                    r1.omega1,
                    if ok1 { "ok" } else { "off" },
                    r2.omega1,
                    if ok2 { "ok" } else { "off" },
                ),
            )
        }
        (a, b) => outcome(
            false,
            format!("design failed: {:?} / {:?}", a.err(), b.err()),
        ),
    }
}

fn closed_loop_example1() -> Outcome {
    let start = Instant::now();
    let event_cfg = ScenarioConfig::example1();
    let mut periodic_cfg = event_cfg.clone();
    periodic_cfg.mode = Mode::Periodic;
    let (ev, per) = match (event_cfg.simulate(), periodic_cfg.simulate()) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            return outcome(
                false,
                format!("simulation failed: {:?} / {:?}", a.err(), b.err()),
            )
        }
    };
    let secs = start.elapsed().as_secs_f64();
    let s = &ev.summary;
    let a = per.summary.trigger_count == 600_000 && per.summary.periodic_count == 600_000;
    let b = (s.trigger_count as f64 - 90475.0).abs() <= 0.10 * 90475.0;
    let gap = s.max_gap_s.unwrap_or(0.0);
    let c = (gap - 0.0581).abs() <= 0.15 * 0.0581;
    let entry = s.band_entry_s;
    let d = entry.is_some_and(|t| (t - 2.6).abs() <= 0.5);
    let e = s
        .first_entry_step
        .is_some_and(|k| ev.s[k..].iter().all(|v| v.abs() <= s.omega1 + 1e-6));
    let mark = |v: bool| if v { "ok" } else { "FAIL" };
    outcome(
        a && b && c && d && e && secs < 60.0,
        format!(
            "(a) periodic updates {} {}; (b) event triggers {} {}; (c) max gap {gap:.4} s {}; (d) entry {:?} s {}; (e) band held after entry {}; {secs:.1} s",
            per.summary.trigger_count,
            mark(a),
            s.trigger_count,
            mark(b),
            mark(c),
            entry,
            mark(d),
            mark(e),
        ),
    )
}

fn equivalent_disturbance() -> Outcome {
    let start = Instant::now();
    let tr = match ScenarioConfig::example2().simulate() {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = start.elapsed().as_secs_f64();
    let s = &tr.summary;
    let d_ok = (s.max_abs_d - 0.0501).abs() <= 5e-4;
    let sup = s.sup_abs_s_after_entry;
    let s_ok = sup.is_some_and(|v| v <= 0.1119 + 1e-3);
    outcome(
        d_ok && s_ok && secs < 5.0,
        format!(
            "max |d̂| = {:.5}, sup |s| after entry at {:?} s = {:?}, {secs:.2} s",
            s.max_abs_d, s.band_entry_s, sup
        ),
    )
}

fn estimator_exactness() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for base in [ScenarioConfig::example1(), ScenarioConfig::example2()] {
        let mut cfg = base.clone();
        cfg.enforce_gain_condition = false;
        cfg.disturbance = DisturbanceSpec::None;
        let setup = match cfg.setup() {
            Ok(s) => s,
            Err(e) => return outcome(false, e.to_string()),
        };
        let tr = etsmc::simkit::run_closed_loop(&setup, &cfg.sim_options(), &cfg.disturbance)
            .expect("run");
        let err0 = tr.max_estimation_error();
        ok &= err0 < 1e-7;

        let value = 0.03;
        cfg.disturbance = DisturbanceSpec::Constant { value };
        let tr = etsmc::simkit::run_closed_loop(&setup, &cfg.sim_options(), &cfg.disturbance)
            .expect("run");
        let lu = setup.gains.lu.col_vec(0);
        let mut worst = 0.0f64;
        for k in 1..tr.len() {
            for i in 0..tr.n {
                let gap = tr.xi_at(k)[i] - tr.xi_bar_at(k)[i];
                worst = worst.max((gap - lu[i] * value).abs());
            }
        }
        ok &= worst < 1e-8;
        notes.push(format!(
            "{}: d≡0 max error {err0:.2e}, constant d identity off by {worst:.2e}",
            base.name
        ));
    }
    outcome(ok, notes.join("; "))
}

fn lemma_two() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut runs = 0;
    for (base, horizon) in [
        (ScenarioConfig::example1(), 2.0),
        (ScenarioConfig::example2(), 20.0),
    ] {
        let mut cfg = base;
        cfg.mode = Mode::Periodic;
        cfg.horizon = horizon;
        cfg.enforce_gain_condition = false;
        let setup = cfg.setup().expect("setup");
        let f = setup.design.feedback_row();
        for _ in 0..10 {
            let n = setup.n();
            cfg.xhat0 = Some((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect());
            let tr = match etsmc::simkit::run_closed_loop(
                &setup,
                &cfg.sim_options(),
                &cfg.disturbance,
            ) {
                Ok(t) => t,
                Err(e) => return outcome(false, e.to_string()),
            };
            runs += 1;
            for k in 1..tr.len() {
                let x = tr.x_bar_at(k);
                let g1 = setup.design.switching_term(tr.s_bar[k]);
                let lemma = dot(&f, x) + g1;
                let scale =
                    1.0 + f.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>() + g1.abs();
                worst = worst.max((tr.u[k] - lemma).abs() / scale);
            }
        }
    }
    outcome(
        worst <= 1e-14,
        format!(
            "{runs} periodic runs, max |u − (F·x̄ + g₁)| / scale = {worst:.2e} (rounding level)"
        ),
    )
}

fn trigger_soundness() -> Outcome {
    let mut traces: Vec<(String, f64, f64, SimTrace)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (base, short) in [
        (ScenarioConfig::example1(), 5.0),
        (ScenarioConfig::example2(), 60.0),
    ] {
        let mut cfg = base.clone();
        cfg.enforce_gain_condition = false;
        let setup = cfg.setup().expect("setup");
        let sa = setup.design.sigma * setup.design.alpha;
        let alpha = setup.design.alpha;
        let tr = etsmc::simkit::run_closed_loop(&setup, &cfg.sim_options(), &cfg.disturbance)
            .expect("run");
        traces.push((format!("{} default", base.name), sa, alpha, tr));
        cfg.horizon = short;
        for i in 0..3 {
            cfg.xhat0 = Some((0..setup.n()).map(|_| rng.gen_range(-3.0..3.0)).collect());
            let tr = etsmc::simkit::run_closed_loop(&setup, &cfg.sim_options(), &cfg.disturbance)
                .expect("run");
            traces.push((format!("{} random x̂(0) #{i}", base.name), sa, alpha, tr));
        }
    }
    let mut problems = Vec::new();
    let mut max_held = 0.0f64;
    for (name, sa, alpha, tr) in &traces {
        let steps = tr.len() - 1;
        for k in 1..steps {
            if tr.trigger[k] != (tr.metric[k] >= *sa) {
                problems.push(format!("{name}: rule mismatch at k={k}"));
                break;
            }
        }
        let held = tr.held_metric();
        let peak = held.iter().copied().fold(0.0, f64::max);
        max_held = max_held.max(peak / alpha);
        if peak >= *alpha {
            problems.push(format!("{name}: held error metric {peak} ≥ α"));
        }
        if tr.summary.min_gap_steps.is_some_and(|g| g < 1) {
            problems.push(format!("{name}: zero gap"));
        }
    }
    if problems.is_empty() {
        outcome(
            true,
            format!(
                "{} event traces; held metric peaks at {:.3}·α, min gap ≥ 1 step",
                traces.len(),
                max_held
            ),
        )
    } else {
        outcome(false, problems.join("; "))
    }
}

fn band_order() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut checked = 0;
    let mut attempts = 0;
    let mut worst = f64::INFINITY;
    while checked < 100 && attempts < 1000 {
        attempts += 1;
        let mut cfg = if rng.gen_bool(0.5) {
            ScenarioConfig::example1()
        } else {
            ScenarioConfig::example2()
        };
        cfg.enforce_gain_condition = true;
        cfg.alpha = rng.gen_range(0.0..0.4);
        cfg.sigma = rng.gen_range(0.05..0.95);
        let probe = match cfg.setup() {
            Ok(s) => s,
            Err(_) => continue,
        };
        let m = probe.n() - 1;
        let poles: Vec<f64> = (0..m).map(|_| -rng.gen_range(0.2..4.0)).collect();
        match place_sliding_vector(&probe.rf, &poles) {
            Ok(c) => cfg.c = c,
            Err(_) => continue,
        }
        let probe = match cfg.setup() {
            Ok(s) => s,
            Err(_) => continue,
        };
        cfg.epsilon = probe.design.gain_threshold(Mode::Event) + rng.gen_range(0.01..0.5);
        if let Ok(r) = cfg.design() {
            checked += 1;
            worst = worst.min(r.omega1 - r.omega);
        }
    }
    outcome(
        checked == 100 && worst >= 0.0,
        format!("{checked} feasible designs, min Ω₁ − Ω = {worst:.3e}"),
    )
}

fn lyapunov() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for cfg in [ScenarioConfig::example1(), ScenarioConfig::example2()] {
        let setup = match cfg.setup() {
            Ok(s) => s,
            Err(e) => return outcome(false, e.to_string()),
        };
        let r = &setup.bands;
        let res = lyapunov_residual(&setup.design.a_cl, setup.design.tau, &r.p, &r.q);
        let pd = r.p.cholesky().is_some();
        ok &= res < 1e-8 && pd && r.q == Mat::identity(r.q.rows());
        notes.push(format!("{}: residual {res:.2e}, P ≻ 0 {pd}", cfg.name));
    }
    outcome(ok, notes.join("; "))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Outcome); 11] = [
        ("factorization identity", factorization_identity),
        ("conditioning table", table_reproduction),
        ("example matrices", example_matrices),
        ("band formulas", band_formulas),
        ("closed loop example1", closed_loop_example1),
        ("equivalent disturbance", equivalent_disturbance),
        ("estimator exactness", estimator_exactness),
        ("control law decomposition", lemma_two),
        ("trigger rule soundness", trigger_soundness),
        ("band order", band_order),
        ("lyapunov residual", lyapunov),
    ];
    let mut passed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let o = check();
        if o.ok {
            passed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if o.ok { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {passed}/{} passed", checks.len());
    if passed == checks.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
