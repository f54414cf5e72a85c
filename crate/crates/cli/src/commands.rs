//! Dispatch from a validated [`RunConfig`] to the library.

use crate::config::{Command, DomainKind, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Outcome, Table};
use ballistic::effective::*;
use ballistic::env::verify_env_axioms;
use ballistic::example::*;
use ballistic::greenslab::{envelope_pairs, fit_envelopes, gamma_sums, green_apply, ProfileFn, SlabKernel};
use ballistic::oned::*;
use ballistic::rng::{env_seed, hash_words, tag, StreamKey};
use ballistic::sde::{estimate_exit_stats, exit_counts, mean_exit_time, rho_cap, Domain, Sim};
use ballistic::EnvSpec;
use ballistic::{sample_environment, Environment, Exec, MCEstimate};

type Res = Result<Outcome, CliError>;

macro_rules! row {
    ($($v:expr),* $(,)?) => { [$(Cell::from($v)),*] };
}

pub fn run(cfg: &RunConfig) -> Res {
    cfg.validate()?;
    match cfg.command {
        Command::Env => env_axioms(cfg),
        Command::Sde => sde(cfg),
        Command::Criterion => criterion(cfg),
        Command::Oned => oned(cfg),
        Command::Green => green(cfg),
        Command::Example => example(cfg),
    }
}

/// Numbers that may be infinite, for headlines (JSON has no infinity).
fn extended(x: f64) -> serde_json::Value {
    if x.is_finite() {
        x.into()
    } else {
        format!("{x}").into()
    }
}

fn kappa(cfg: &RunConfig) -> f64 {
    cfg.constants.kappa.unwrap_or(0.5)
}

fn exec(cfg: &RunConfig) -> Exec {
    Exec::with_workers(cfg.workers)
}

fn sim(cfg: &RunConfig, length: f64) -> Sim {
    let s = Sim::new(cfg.budget.dt.unwrap_or_else(|| example_dt(length))).with_exec(exec(cfg));
    match cfg.budget.max_time {
        Some(t) => s.with_max_time(t),
        None => s,
    }
}

fn budget(cfg: &RunConfig, length: f64) -> Budget {
    let mut b = Budget::new(cfg.budget.n_env, cfg.budget.n_path, 1.0);
    b.sim = sim(cfg, length);
    b
}

fn point(d: usize, x1: f64) -> Vec<f64> {
    let mut x = vec![0.0; d];
    x[0] = x1;
    x
}

fn environments(cfg: &RunConfig) -> Result<Vec<Environment>, CliError> {
    (0..cfg.budget.n_env).map(|i| sample_environment(&cfg.env, env_seed(cfg.seed, i as u64)).map_err(CliError::from)).collect()
}

fn path_key(cfg: &RunConfig, env_index: usize) -> StreamKey {
    StreamKey::new(cfg.seed, tag::PATH, env_index as u64)
}

fn annealed(xs: &[f64]) -> MCEstimate {
    MCEstimate::from_samples(xs)
}

fn env_axioms(cfg: &RunConfig) -> Res {
    let env = sample_environment(&cfg.env, env_seed(cfg.seed, 0))?;
    let rep = verify_env_axioms(&env, cfg.budget.n_env.max(100));
    let mut t = Table::new(
        "drift_profile",
        "drift of environment 0 along the e1 axis",
        &[("x1", "position along e1"), ("b_e1", "drift component along e1"), ("b_norm", "Euclidean norm of the drift")],
    );
    let l = cfg.geometry.l;
    let steps = (8.0 * l).ceil() as i64;
    for k in -steps..=steps {
        let x1 = k as f64 * l / steps as f64;
        let b = env.drift_at(&point(cfg.env.dim, x1));
        t.push(row![x1, b[0], b.iter().map(|v| v * v).sum::<f64>().sqrt()]);
    }
    Ok(Outcome::new(&rep)?.headline("all_ok", rep.all_ok()).headline("max_drift", rep.max_drift).headline("mean_drift", rep.mean_drift.mean).table(t))
}

fn domain(cfg: &RunConfig, x0: &[f64]) -> Domain {
    let g = &cfg.geometry;
    match g.domain {
        DomainKind::Slab => Domain::Slab { half_width: g.l },
        DomainKind::Interval => Domain::Interval { half_width: g.l },
        DomainKind::Box => Domain::criterion_box(cfg.env.dim, g.l, g.l_tilde, cfg.env.range),
        DomainKind::Tube => Domain::Tube { center: x0.to_vec(), length: g.l, halfwidth: g.l_tilde },
    }
}

fn sde(cfg: &RunConfig) -> Res {
    let x0 = point(cfg.env.dim, cfg.geometry.x1);
    let dom = domain(cfg, &x0);
    let s = sim(cfg, cfg.geometry.l);
    let envs = environments(cfg)?;
    if cfg.stage == "exit-time" {
        let mut t = Table::new(
            "exit_time",
            "mean exit time per environment",
            &[
                ("env", "environment index"),
                ("mean", "mean exit time"),
                ("stderr", "standard error over paths"),
                ("positive", "paths leaving through the positive face"),
                ("negative", "paths leaving through the negative face"),
                ("lateral", "paths leaving through a lateral face"),
                ("timeout", "paths stopped at the time horizon"),
                ("bracket_within", "3-sigma interval meets [2/3, 2](L^2 - x1^2); empty when not applicable"),
            ],
        );
        let mut per = Vec::new();
        let mut reports = Vec::new();
        for (i, env) in envs.iter().enumerate() {
            let e = mean_exit_time(env, &x0, &dom, cfg.budget.n_path, &s, path_key(cfg, i))?;
            let c = &e.counts;
            let within = e.bracket.map_or(Cell::from(""), |b| Cell::from(b.within));
            t.push([
                Cell::from(i),
                e.estimate.mean.into(),
                e.estimate.stderr.into(),
                c.positive.into(),
                c.negative.into(),
                c.lateral.into(),
                c.timeout.into(),
                within,
            ]);
            per.push(e.estimate.mean);
            reports.push(e);
        }
        let a = annealed(&per);
        return Ok(Outcome::new(&reports)?.headline("mean_exit_time", a.mean).headline("stderr", a.stderr).table(t));
    }
    let cap = rho_cap(kappa(cfg), cfg.geometry.l);
    let mut t = Table::new(
        "exit_stats",
        "exit frequencies and smoothed odds per environment",
        &[
            ("env", "environment index"),
            ("p_hat", "frequency of leaving through the positive face"),
            ("q_hat", "frequency of leaving through any other face"),
            ("rho_hat", "smoothed odds q/p, capped"),
            ("rho_stderr", "delta-method standard error of rho_hat"),
            ("capped", "rho_hat hit the ellipticity cap"),
        ],
    );
    let mut rhos = Vec::new();
    let mut stats = Vec::new();
    for (i, env) in envs.iter().enumerate() {
        let st = estimate_exit_stats(env, &x0, &dom, cfg.budget.n_path, &s, path_key(cfg, i), cap)?;
        t.push(row![i, st.p_hat.mean, st.q_hat.mean, st.rho_hat, st.rho_stderr, st.capped]);
        rhos.push(st.rho_hat);
        stats.push(st);
    }
    let a = annealed(&rhos);
    Ok(Outcome::new(&stats)?.headline("mean_rho", a.mean).headline("stderr", a.stderr).table(t))
}

fn criterion(cfg: &RunConfig) -> Res {
    let g = &cfg.geometry;
    let q = &cfg.constants;
    let spec = &cfg.env;
    match cfg.stage.as_str() {
        "evaluate" => {
            let input = CriterionInput { l: g.l, l_tilde: g.l_tilde, a_grid: g.a_grid.clone(), kappa: kappa(cfg), c7: q.c7, extra_boxes: vec![] };
            let rep = evaluate_effective_criterion(spec, &input, &budget(cfg, g.l), cfg.seed)?;
            let mut t = Table::new(
                "moments",
                "moment estimates and criterion left-hand side per box and exponent",
                &[
                    ("l", "box depth L"),
                    ("l_tilde", "box half-width"),
                    ("a", "moment exponent"),
                    ("moment", "estimated E[rho^a] (add-1/2 smoothing)"),
                    ("stderr", "environment-level standard error"),
                    ("moment_add_one", "estimate with add-1 smoothing"),
                    ("lhs", "criterion left-hand side"),
                ],
            );
            for b in &rep.boxes {
                for (m, lhs) in b.moments.iter().zip(&b.lhs) {
                    t.push(row![b.l, b.l_tilde, m.a, m.estimate.mean, m.estimate.stderr, m.add_one.mean, *lhs]);
                }
            }
            Ok(Outcome::new(&rep)?.headline("best_lhs", rep.best_lhs).headline("best_a", rep.best_a).headline("decision", rep.decision).table(t))
        }
        "mirror" => {
            let rep = mirror_duality(spec, g.l, g.l_tilde, kappa(cfg), &budget(cfg, g.l), cfg.seed)?;
            Ok(Outcome::new(&rep)?.headline("ks_statistic", rep.ks.statistic).headline("p_value", rep.ks.p_value).headline("pass", rep.pass))
        }
        "decay" => {
            let scan = slab_exit_decay_scan(spec, g.b_back, &g.l_list, &budget(cfg, g.l), cfg.seed)?;
            let mut t = Table::new(
                "decay",
                "annealed backtrack probability per slab size",
                &[
                    ("l", "slab size L"),
                    ("estimate", "annealed probability of the back exit"),
                    ("stderr", "environment-level standard error"),
                    ("positive", "paths leaving forward"),
                    ("negative", "paths leaving backward"),
                    ("upper_bound", "rule-of-three bound when no path backtracked; empty otherwise"),
                ],
            );
            for r in &scan.rows {
                let ub = r.upper_bound.map_or(Cell::from(""), Cell::from);
                t.push([r.l.into(), r.estimate.mean.into(), r.estimate.stderr.into(), r.counts.positive.into(), r.counts.negative.into(), ub]);
            }
            let mut out = Outcome::new(&scan)?.table(t);
            if let Some((c, se)) = scan.rate {
                out = out.headline("rate", c).headline("rate_stderr", se);
            }
            Ok(out)
        }
        "kappa" => {
            let k = estimate_kappa(spec, g.l_probe, &budget(cfg, g.l_probe), cfg.seed)?;
            Ok(Outcome::new(&k)?.headline("kappa", k.kappa))
        }
        _ => {
            let h = build_hierarchy(g.l, g.l_tilde, g.u0, g.a, spec.range, g.k_max + 1)?;
            let rows = check_recursion(spec, &h, g.k_max, kappa(cfg), q.c3, &budget(cfg, g.l), cfg.budget.max_steps, cfg.seed)?;
            let mut t = Table::new(
                "levels",
                "renormalisation levels and the recursion check",
                &[
                    ("k", "level"),
                    ("l", "L_k"),
                    ("l_tilde", "box half-width at level k"),
                    ("n", "scale ratio N_k"),
                    ("a", "moment exponent a_k"),
                    ("u", "u_k"),
                    ("target", "kappa^(u_k L_k)"),
                    ("phi", "estimated phi_k; empty when not simulated"),
                    ("status", "resolved, unresolved or infeasible"),
                ],
            );
            for r in &rows {
                let lv = &r.level;
                let phi = r.phi.map_or(Cell::from(""), |p| Cell::from(p.mean));
                let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
                t.push([
                    lv.k.into(),
                    lv.l.into(),
                    lv.l_tilde.into(),
                    lv.n.into(),
                    lv.a.into(),
                    lv.u.into(),
                    r.target.into(),
                    phi,
                    Cell::from(status.as_str()),
                ]);
            }
            let resolved = rows.iter().filter(|r| r.pass.is_some()).count();
            let passed = rows.iter().filter(|r| r.pass == Some(true)).count();
            Ok(Outcome::new(&(h, &rows))?.headline("levels_resolved", resolved).headline("levels_passed", passed).table(t))
        }
    }
}

fn oned(cfg: &RunConfig) -> Res {
    let g = &cfg.geometry;
    let b = &cfg.budget;
    let spec = &cfg.env;
    let ex = exec(cfg);
    match cfg.stage.as_str() {
        "rho" => {
            let s = sim(cfg, g.l);
            let mut t = Table::new(
                "rho",
                "exact exit odds and quenched Monte Carlo per environment",
                &[
                    ("env", "environment index"),
                    ("log_rho", "exact log rho_L from the scale function"),
                    ("p_right", "exact probability of leaving (-L, L) to the right from 0"),
                    ("p_right_mc", "Monte Carlo frequency of the same event"),
                    ("stderr", "its standard error"),
                    ("agree", "exact value inside the 3-sigma interval"),
                ],
            );
            let mut logs = Vec::new();
            let mut agree = 0;
            for (i, env) in environments(cfg)?.iter().enumerate() {
                let p = ScaleProfile::new(env, g.l, b.quad_step)?;
                let lr = log_rho_l(&p, g.l);
                let exact = hit_right_probability(&p, 0.0, -g.l, g.l);
                let c = exit_counts(env, &[0.0], &Domain::Interval { half_width: g.l }, b.n_path, &s, path_key(cfg, i))?;
                let mc = MCEstimate::proportion(c.positive, c.completed());
                let ok = mc.within(exact, 3.0, 0.0);
                agree += ok as usize;
                t.push(row![i, lr, exact, mc.mean, mc.stderr, ok]);
                logs.push(lr);
            }
            let m = annealed(&logs);
            Ok(Outcome::new(&m)?.headline("mean_log_rho", m.mean).headline("mc_agree", agree).table(t))
        }
        "identity" => {
            let r = check_identity_275(spec, g.l, b.n_env, b.quad_step, cfg.seed, &ex)?;
            Ok(Outcome::new(&r)?.headline("lhs", r.lhs.mean).headline("rhs", r.rhs.mean).headline("pass", r.pass))
        }
        "dichotomy" => {
            let db = DichotomyBudget { n_env: b.n_env, horizon: b.horizon, dt: b.dt.unwrap_or(0.05), quad_step: b.quad_step };
            let r = solomon_dichotomy(spec, g.l, &g.a_grid, &db, cfg.seed, &ex)?;
            let verdict = serde_json::to_value(r.verdict).map_err(|e| CliError::other(e.to_string()))?;
            Ok(Outcome::new(&r)?.headline("verdict", verdict).headline("agreement", r.agreement).headline("mean_log_rho", r.mean_log_rho.mean))
        }
        "chain" => {
            let env = sample_environment(spec, env_seed(cfg.seed, 0))?;
            let c = ChainSpec::from_environment(&env, g.l0, -g.n_window, g.n_window, b.quad_step)?;
            let mut t = Table::new(
                "chain",
                "embedded slab chain of environment 0",
                &[
                    ("i", "slab index"),
                    ("rho_hat", "odds of stepping left at slab i; empty at the absorbing ends"),
                    ("p_left", "probability of absorption at the left end from slab i"),
                ],
            );
            for i in c.left..=c.right {
                let r = if i == c.left || i == c.right { Cell::from("") } else { Cell::from(c.rho_at(i)) };
                t.push([Cell::from(i), r, chain_exit_probability(&c, i).into()]);
            }
            Ok(Outcome::new(&c)?.headline("p_left_from_0", chain_exit_probability(&c, 0)).table(t))
        }
        _ => {
            let r = eta_delta_recursion(spec, g.l0, g.n_window, b.n_env, b.quad_step, EtaSeed::Absorbing, cfg.seed, &ex)?;
            let s = &r.example;
            let mut t = Table::new(
                "eta_delta",
                "eta and delta sequences of environment 0",
                &[
                    ("n", "slab index"),
                    ("p", "forward step probability"),
                    ("q", "backward step probability"),
                    ("rho_hat", "q/p"),
                    ("eta", "eta_n"),
                    ("log_delta", "log delta_n"),
                ],
            );
            for n in -s.n_window..=s.n_window {
                t.push(row![n, s.at(&s.p, n), s.at(&s.q, n), s.at(&s.rho_hat, n), s.at(&s.eta, n), s.at(&s.log_delta, n)]);
            }
            Ok(Outcome::new(&r)?.headline("slope", r.slope.mean).headline("predicted", r.predicted.mean).headline("pass", r.pass).table(t))
        }
    }
}

fn green(cfg: &RunConfig) -> Res {
    let g = &cfg.geometry;
    let d = cfg.env.dim;
    let kern = SlabKernel::new(d, g.l)?;
    match cfg.stage.as_str() {
        "kernel" => {
            let mut t = Table::new(
                "kernel",
                "slab Green function and heat kernel at probe points",
                &[
                    ("x1", "probe position along e1"),
                    ("g_unit", "g(x, x + e2)"),
                    ("free_unit", "free-space Green function at distance 1"),
                    ("dg_dx1", "e1 component of the gradient of g(., x + e2) at x"),
                    ("heat_unit", "slab heat kernel p(1, x, x + e2)"),
                ],
            );
            let mut rows = Vec::new();
            for p in &g.probes {
                let x = point(d, p * g.l);
                let mut y = x.clone();
                y[1] += 1.0;
                let (gv, grad, heat) = (kern.green_function(&x, &y)?, kern.green_gradient(&x, &y)?[0], kern.heat_kernel(1.0, &x, &y)?);
                t.push(row![x[0], gv, kern.free_green(1.0), grad, heat]);
                rows.push((x[0], gv, grad, heat));
            }
            Ok(Outcome::new(&rows)?.headline("gamma_d", kern.gamma_d()).table(t))
        }
        "apply" => {
            let l = g.l;
            let bump = move |y: f64| (-(2.0 * y / l).powi(2)).exp();
            let one = ProfileFn { f: |_| 1.0, sup: 1.0 };
            let smooth = ProfileFn { f: bump, sup: 1.0 };
            let brownian = sample_environment(&EnvSpec::brownian(d), env_seed(cfg.seed, 0))?;
            let s = sim(cfg, l);
            let mut t = Table::new(
                "apply",
                "Green operator by quadrature against pathwise Brownian estimates",
                &[
                    ("x1", "probe position along e1"),
                    ("function", "one or bump"),
                    ("quadrature", "Green operator of f by quadrature"),
                    ("quadrature_error", "reported quadrature error"),
                    ("exact", "L^2 - x1^2 for f = 1; empty otherwise"),
                    ("pathwise", "mean of the integral of f along Brownian paths to the slab exit"),
                    ("pathwise_stderr", "its standard error"),
                    ("agree", "quadrature inside the 3-sigma interval of the pathwise estimate"),
                ],
            );
            let mut worst: f64 = 0.0;
            let mut agree = 0;
            for (j, p) in g.probes.iter().enumerate() {
                let x = point(d, p * l);
                let key = StreamKey::new(cfg.seed, tag::PATH, j as u64);
                let exact = l * l - x[0] * x[0];
                let cases: [(&str, &dyn ballistic::greenslab::SlabFunction, Option<f64>); 2] = [("one", &one, Some(exact)), ("bump", &smooth, None)];
                for (k, (name, f, ex)) in cases.into_iter().enumerate() {
                    let q = green_apply(&kern, f, &x)?;
                    let mc = green_op_quenched(&brownian, &|y: &[f64], _: &[f64]| f.value(y), &x, l, cfg.budget.n_path, &s, key.child(k as u64))?;
                    let ok = mc.estimate.within(q.value, 3.0, q.error);
                    agree += ok as usize;
                    if let Some(e) = ex {
                        worst = worst.max((q.value - e).abs() / e);
                    }
                    t.push([
                        x[0].into(),
                        Cell::from(name),
                        q.value.into(),
                        q.error.into(),
                        ex.map_or(Cell::from(""), Cell::from),
                        mc.estimate.mean.into(),
                        mc.estimate.stderr.into(),
                        ok.into(),
                    ]);
                }
            }
            Ok(Outcome::new(&worst)?.headline("max_rel_error_one", worst).headline("pathwise_agree", agree).table(t))
        }
        "gamma" => {
            let probes: Vec<f64> = g.probes.iter().map(|p| p * g.l).collect();
            let s = gamma_sums(&kern, &probes, cfg.env.range, cfg.constants.c17)?;
            let mut t = Table::new(
                "gamma_sums",
                "deterministic variance sums per probe and cube family",
                &[
                    ("probe_x1", "probe position along e1"),
                    ("family_e1", "parity of the cube index along e1"),
                    ("odd_transverse", "number of transverse axes with odd cube index"),
                    ("l2_gamma_sq", "L^2 times the sum of gamma^2"),
                    ("l2_gamma_tilde_sq", "L^2 times the sum of gamma-tilde^2"),
                ],
            );
            for r in &s.rows {
                t.push(row![r.probe_x1, r.family_e1 as usize, r.odd_transverse, r.l2_gamma_sq, r.l2_gamma_tilde_sq]);
            }
            Ok(Outcome::new(&s)?
                .headline("max_l2_gamma_sq", s.max_l2_gamma_sq())
                .headline("max_l2_gamma_tilde_sq", s.max_l2_gamma_tilde_sq())
                .table(t))
        }
        _ => {
            let n = cfg.budget.n_path;
            let calib = envelope_pairs(d, g.l, n, cfg.seed);
            let fit = fit_envelopes(&kern, &calib, cfg.constants.c17, 1.25)?;
            let held = envelope_pairs(d, g.l, n, hash_words(&[cfg.seed, 1]));
            let (vg, vgrad) = fit.violations(&kern, &held)?;
            Ok(Outcome::new(&fit)?
                .headline("c16", fit.c16)
                .headline("c18", fit.c18)
                .headline("c19", fit.c19)
                .headline("held_out_violations", vg + vgrad))
        }
    }
}

/// Example scales from the config: `N`, `c₁₂`, `a` and the transverse cap.
pub fn example_params(cfg: &RunConfig) -> Result<ExampleParams, CliError> {
    let spec = &cfg.env;
    let mut p = ExampleParams::new(spec)?;
    if let Some(n) = cfg.geometry.n_scale {
        p = p.with_n(n, spec)?;
    }
    if let Some(c) = cfg.constants.c12 {
        p = p.with_c12(c, spec)?;
    }
    p = p.with_a(cfg.geometry.a)?;
    if let Some(cap) = cfg.geometry.transverse_cap {
        p = p.with_transverse_cap(cap)?;
    }
    Ok(p)
}

fn example(cfg: &RunConfig) -> Res {
    let p = example_params(cfg)?;
    let spec = &cfg.env;
    let l = p.l;
    let s = sim(cfg, l);
    let n = cfg.budget.n_path;
    let probes: Vec<Vec<f64>> = cfg.geometry.probes.iter().map(|f| point(spec.dim, f * l)).collect();
    let stamp = |o: Outcome| o.headline("regime", p.regime.clone());
    match cfg.stage.as_str() {
        "green" => {
            let one = |_: &[f64], _: &[f64]| 1.0;
            let mut t = Table::new(
                "quenched_green",
                "quenched Green operator of 1 and of b1 per environment and probe",
                &[
                    ("env", "environment index"),
                    ("x1", "probe position along e1"),
                    ("exit_time", "Green operator of 1: mean slab exit time"),
                    ("exit_time_stderr", "its standard error"),
                    ("bracket_ok", "3-sigma interval meets [2/3, 2](L^2 - x1^2)"),
                    ("green_b1", "Green operator of b1"),
                    ("green_b1_stderr", "its standard error"),
                    ("bound_ok", "|G b1| <= L/2 at the 3-sigma level"),
                ],
            );
            let mut rows = Vec::new();
            for (i, env) in environments(cfg)?.iter().enumerate() {
                for (j, x) in probes.iter().enumerate() {
                    let key = path_key(cfg, i).child(j as u64);
                    let t1 = green_op_quenched(env, &one, x, l, n, &s, key.child(0))?;
                    let gb = green_op_quenched(env, &drift_e1, x, l, n, &s, key.child(1))?;
                    let base = l * l - x[0] * x[0];
                    let (lo, hi) = t1.estimate.ci(3.0);
                    let bracket = hi >= 2.0 / 3.0 * base && lo <= 2.0 * base;
                    let bound = gb.estimate.mean.abs() - 3.0 * gb.estimate.stderr <= l / 2.0;
                    t.push(row![i, x[0], t1.estimate.mean, t1.estimate.stderr, bracket, gb.estimate.mean, gb.estimate.stderr, bound]);
                    rows.push((bracket, bound));
                }
            }
            let env0 = sample_environment(spec, env_seed(cfg.seed, 0))?;
            let fl = fluctuation_std(&env0, &SlabKernel::new(spec.dim, l)?, &point(spec.dim, 0.0)).ok();
            let mut out = Outcome::new(&fl)?.headline("bracket_ok", rows.iter().all(|r| r.0)).headline("bound_ok", rows.iter().all(|r| r.1)).table(t);
            if let Some(f) = fl {
                out = out.headline("fluctuation_std", f.std);
            }
            Ok(stamp(out))
        }
        "phat" => {
            let mut t = Table::new(
                "phat",
                "exit-side formula against the direct exit frequency",
                &[
                    ("env", "environment index"),
                    ("x1", "start position along e1"),
                    ("direct", "frequency of leaving the slab through x1 = L"),
                    ("direct_stderr", "its standard error"),
                    ("formula", "(x1 + L + G b1)/(2L)"),
                    ("formula_stderr", "its standard error"),
                    ("agree", "the two agree within 3 combined sigma"),
                    ("green_bound_ok", "|G b1| <= L/2 at the 3-sigma level"),
                ],
            );
            let mut all = Vec::new();
            for (i, env) in environments(cfg)?.iter().enumerate() {
                for (j, x) in probes.iter().enumerate() {
                    let c = phat_formula_vs_mc(env, x, l, n, &s, path_key(cfg, i).child(j as u64))?;
                    t.push(row![i, x[0], c.direct.mean, c.direct.stderr, c.formula.mean, c.formula.stderr, c.agree, c.green_bound_ok]);
                    all.push(c);
                }
            }
            let agree = all.iter().filter(|c| c.agree).count();
            Ok(stamp(Outcome::new(&all)?.headline("agree", agree).headline("checks", all.len()).table(t)))
        }
        "rhohat" => {
            let grid = v_grid(&p, cfg.constants.spacing.unwrap_or(p.range / 2.0));
            let rep = rhohat_estimate(spec, &p, &budget(cfg, l), &grid, cfg.seed)?;
            let mut t = Table::new(
                "rhohat",
                "supremum of the exit-odds ratio per environment",
                &[
                    ("env", "environment index"),
                    ("rho_hat", "sup over the grid of the odds ratio"),
                    ("argmax_x1", "e1 coordinate of the maximiser"),
                    ("green_at_argmax", "Green operator of b1 at the maximiser"),
                ],
            );
            for (i, e) in rep.per_env.iter().enumerate() {
                t.push(row![i, e.rho_hat, e.argmax[0], e.green_at_argmax]);
            }
            Ok(stamp(
                Outcome::new(&rep)?
                    .headline("estimate", rep.estimate.mean)
                    .headline("below_one", rep.below_one)
                    .headline("cap_violations", rep.cap_violations)
                    .table(t),
            ))
        }
        "perturb" => {
            let bump = move |y: f64| (-(2.0 * y / l).powi(2)).exp();
            let mut t = Table::new(
                "perturbation",
                "perturbation identity residuals",
                &[
                    ("env", "environment index"),
                    ("x1", "probe position along e1"),
                    ("lhs", "quenched Green operator of f"),
                    ("free", "Brownian Green operator of f"),
                    ("correction", "quenched Green operator of b . grad G f"),
                    ("residual", "lhs - free - correction"),
                    ("residual_stderr", "its standard error"),
                    ("residual_minus", "residual with the correction subtracted instead"),
                    ("pass", "residual within 3 sigma of zero"),
                ],
            );
            let mut reps = Vec::new();
            for (i, env) in environments(cfg)?.iter().enumerate() {
                let rep = check_perturbation_identity(env, bump, &probes, l, n, &s, path_key(cfg, i))?;
                for r in &rep.rows {
                    t.push(row![
                        i,
                        r.x[0],
                        r.lhs.mean,
                        r.free,
                        r.correction.mean,
                        r.residual.mean,
                        r.residual.stderr,
                        r.residual_printed_sign.mean,
                        r.pass
                    ]);
                }
                reps.push(rep);
            }
            let pass = reps.iter().filter(|r| r.pass).count();
            Ok(stamp(Outcome::new(&reps)?.headline("environments_passing", pass).table(t)))
        }
        "displacement" => {
            let c20 = cfg.constants.c20.unwrap_or(p.range);
            let mut t = Table::new(
                "displacement",
                "tube displacement against the Green operator of b1",
                &[
                    ("env", "environment index"),
                    ("x1", "start position along e1"),
                    ("delta_e1", "mean e1 displacement at the tube exit"),
                    ("green_b1", "Green operator of b1"),
                    ("gap", "delta_e1 - green_b1"),
                    ("gap_stderr", "its standard error"),
                    ("lateral_fraction", "fraction of paths leaving through the lateral faces"),
                    ("within_c20", "|gap| <= c20 at the 3-sigma level"),
                ],
            );
            let mut rows = Vec::new();
            for (i, env) in environments(cfg)?.iter().enumerate() {
                for r in displacement_check(env, &probes, l, p.h, n, &s, path_key(cfg, i))? {
                    let ok = r.gap.mean.abs() - 3.0 * r.gap.stderr <= c20;
                    t.push(row![i, r.x[0], r.delta_e1.mean, r.green_b1.mean, r.gap.mean, r.gap.stderr, r.lateral_fraction, ok]);
                    rows.push(r);
                }
            }
            let worst = rows.iter().map(|r| r.gap.mean.abs()).fold(0.0, f64::max);
            Ok(stamp(Outcome::new(&rows)?.headline("max_abs_gap", worst).headline("c20", c20).table(t)))
        }
        "backtrack" => {
            let mut t = Table::new(
                "backtrack",
                "backtrack probability from the right edge against its bound",
                &[
                    ("env", "environment index"),
                    ("estimate", "probability of reaching -L + R/2 before L + R/2"),
                    ("stderr", "its standard error"),
                    ("bound", "supermartingale bound"),
                    ("pass", "estimate below the bound at the 3-sigma level"),
                ],
            );
            let mut reps = Vec::new();
            for (i, env) in environments(cfg)?.iter().enumerate() {
                let r = supermartingale_exit_bound(env, l, n, &s, path_key(cfg, i))?;
                t.push(row![i, r.estimate.mean, r.estimate.stderr, r.bound, r.pass]);
                reps.push(r);
            }
            let pass = reps.iter().filter(|r| r.pass).count();
            Ok(stamp(Outcome::new(&reps)?.headline("environments_passing", pass).table(t)))
        }
        "delta" => {
            let d = delta_condition(&p);
            Ok(stamp(Outcome::new(&(&p, d))?.headline("inv_delta", d.inv_delta).headline("pass", d.pass)))
        }
        _ => {
            let b = budget(cfg, l);
            let budgets = Prop33Budgets { rho_hat: b, p_l: b, direct: b, spacing: cfg.constants.spacing.unwrap_or(p.range / 2.0) };
            let consts = Prop33Constants { kappa: kappa(cfg), c: cfg.constants.harnack_c };
            let rep = assemble_prop33(spec, &p, &budgets, consts, cfg.seed)?;
            Ok(stamp(
                Outcome::new(&rep)?
                    .headline("log_bound", extended(rep.log_bound))
                    .headline("log_second", extended(rep.log_second))
                    .headline("first_vacuous", rep.first_vacuous)
                    .headline("direct_within_bound", rep.direct_within_bound),
            ))
        }
    }
}
