//! Acceptance run: one PASS/FAIL line per criterion at its pinned tolerance.
//!
//! Criteria known to be out of reach at desk scale are still evaluated and
//! printed; they do not fail the run. Any other failure does.

use ballistic::effective::{evaluate_effective_criterion, mirror_duality, slab_exit_decay_scan, Budget, CriterionInput};
use ballistic::example::*;
use ballistic::greenslab::{gamma_sums, green_apply, FieldFn, ProfileFn, SlabKernel};
use ballistic::oned::*;
use ballistic::quad::GaussLegendre;
use ballistic::rng::StreamKey;
use ballistic::sde::{exit_counts, mean_exit_time, Domain, Sim};
use ballistic::{sample_environment, EnvSpec, Exec, MCEstimate};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

/// Budget level: the pinned one, or a small one for the determinism replay.
#[derive(Clone, Copy, PartialEq)]
enum Level {
    Full,
    Replay,
}

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
    /// Not reachable at this scale; reported, not fatal.
    out_of_reach: bool,
}

#[derive(Default)]
struct Out {
    lines: Vec<Line>,
    /// Every reported number, for the bit-identity comparison.
    bits: Vec<u64>,
}

impl Out {
    fn line(&mut self, id: &'static str, pass: bool, detail: String) {
        self.lines.push(Line { id, pass, detail, out_of_reach: false });
    }

    fn record(&mut self, xs: &[f64]) {
        self.bits.extend(xs.iter().map(|x| x.to_bits()));
    }

    fn est(&mut self, m: &MCEstimate) {
        self.record(&[m.mean, m.stderr]);
    }
}

fn pick<T>(level: Level, full: T, replay: T) -> T {
    if level == Level::Full {
        full
    } else {
        replay
    }
}

fn c1(level: Level, exec: Exec, out: &mut Out) {
    let n = pick(level, 100_000, 200);
    let sim = Sim::new(1e-4).with_exec(exec);
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [1usize, 3] {
        let env = sample_environment(&EnvSpec::brownian(d), 0).unwrap();
        for x1 in [0.0, 0.5] {
            let mut x = vec![0.0; d];
            x[0] = x1;
            let key = StreamKey::new(1, d as u64, (x1 * 10.0) as u64);
            let e = mean_exit_time(&env, &x, &Domain::Slab { half_width: 1.0 }, n, &sim, key).unwrap();
            let target = 1.0 - x1 * x1;
            ok &= e.estimate.within(target, 3.0, 0.0);
            out.est(&e.estimate);
            detail.push(format!("d={d} x1={x1}: {:.4}±{:.4} (exact {target})", e.estimate.mean, e.estimate.stderr));
        }
    }
    out.line("1", ok, detail.join("; "));
}

fn c2(level: Level, exec: Exec, out: &mut Out) {
    let (beta, l) = (0.1, 5.0);
    let env = sample_environment(&EnvSpec::constant(1, beta), 0).unwrap();
    let p = ScaleProfile::new(&env, l, 1e-3).unwrap();
    let rho = rho_l_exact(&p, l);
    let exact_ok = (rho - (-1.0f64).exp()).abs() < 1e-6;
    let sim = Sim::new(5e-3).with_exec(exec);
    let c = exit_counts(&env, &[0.0], &Domain::Interval { half_width: l }, pick(level, 10_000, 200), &sim, StreamKey::new(2, 0, 0)).unwrap();
    let mc = MCEstimate::proportion(c.positive, c.completed());
    let p_right = 1.0 / (1.0 + (-1.0f64).exp());
    let mc_ok = mc.within(p_right, 3.0, 0.0);
    let id = check_identity_275(&EnvSpec::new(1, 0.2, 0.08), l, pick(level, 500, 20), 1e-3, 2, &exec).unwrap();
    out.record(&[rho]);
    out.est(&mc);
    out.est(&id.difference);
    out.line(
        "2",
        exact_ok && mc_ok && id.pass,
        format!(
            "ρ_L = {rho:.9} (e⁻¹ = {:.9}); MC P[right] = {:.4}±{:.4} vs {p_right:.4}; identity diff {:.2e}±{:.1e} over {} envs",
            (-1.0f64).exp(),
            mc.mean,
            mc.stderr,
            id.difference.mean,
            id.difference.stderr,
            id.n_env
        ),
    );
}

/// Exact solution of the hitting system `(1 + ρ_k)u_k − ρ_k u_{k−1} − u_{k+1} = 0`,
/// `u_left = 1`, `u_right = 0`, by Thomas elimination over the rationals.
fn tridiagonal_oracle(chain: &ChainSpec) -> Vec<f64> {
    let one = BigRational::one();
    let rho: Vec<BigRational> = chain.rho.iter().map(|r| BigRational::from_float(*r).unwrap()).collect();
    let m = rho.len();
    let mut c: Vec<BigRational> = Vec::with_capacity(m);
    let mut d: Vec<BigRational> = Vec::with_capacity(m);
    for k in 0..m {
        let (sub, diag) = (-rho[k].clone(), &one + &rho[k]);
        let (c_prev, d_prev) = if k == 0 { (BigRational::zero(), BigRational::zero()) } else { (c[k - 1].clone(), d[k - 1].clone()) };
        let rhs = if k == 0 { rho[0].clone() } else { BigRational::zero() };
        let pivot = diag - &sub * &c_prev;
        c.push(-&one / &pivot);
        d.push((rhs - &sub * &d_prev) / pivot);
    }
    let mut u = vec![BigRational::zero(); m];
    u[m - 1] = d[m - 1].clone();
    for k in (0..m - 1).rev() {
        u[k] = &d[k] - &c[k] * &u[k + 1];
    }
    u.iter().map(|x| x.to_f64().unwrap()).collect()
}

/// 100 random chains of 5–200 sites with their exact solutions.
fn chains() -> &'static [(ChainSpec, Vec<f64>)] {
    static CHAINS: OnceLock<Vec<(ChainSpec, Vec<f64>)>> = OnceLock::new();
    CHAINS.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        (0..100)
            .map(|_| {
                let n: i64 = rng.random_range(5..=200);
                let rho: Vec<f64> = (0..n - 1).map(|_| (rng.random::<f64>() * 1.2 - 0.6).exp()).collect();
                let c = ChainSpec::new(0, n, rho).unwrap();
                let u = tridiagonal_oracle(&c);
                (c, u)
            })
            .collect()
    })
}

fn c3(out: &mut Out) {
    let mut worst: f64 = 0.0;
    for (c, exact) in chains() {
        for (k, u) in exact.iter().enumerate() {
            let f = chain_exit_probability(c, k as i64 + 1);
            worst = worst.max((f - u).abs());
            out.record(&[f]);
        }
    }
    out.line("3", worst <= 1e-12, format!("max |chain − solve| = {worst:.2e} over 100 chains"));
}

fn time_integral(kern: &SlabKernel, x: &[f64], y: &[f64]) -> f64 {
    let l = kern.half_width();
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let gl = GaussLegendre::new(24);
    let (mut t0, t_end) = (r2 * 1e-3, 60.0 * l * l);
    let mut total = 0.0;
    while t0 < t_end {
        let t1 = (t0 * 1.5).min(t_end);
        total += gl.integrate(t0, t1, |t| kern.heat_kernel(t, x, y).unwrap());
        t0 = t1;
    }
    total
}

fn c4(out: &mut Out) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let l = 1.0;
    let kern = SlabKernel::new(4, l).unwrap();
    let pt = |rng: &mut ChaCha8Rng, a: f64| -> Vec<f64> {
        (0..4).map(|i| if i == 0 { rng.random_range(-a..a) } else { rng.random_range(-1.5..1.5) }).collect()
    };
    let (mut boundary, mut sym, mut grad) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..300 {
        let x = pt(&mut rng, 0.95 * l);
        let mut y = pt(&mut rng, 0.95 * l);
        let z = y.clone();
        y[0] = if i % 2 == 0 { l } else { -l };
        boundary = boundary.max(kern.green_function(&x, &y).unwrap().abs());
        let (a, b) = (kern.green_function(&x, &z).unwrap(), kern.green_function(&z, &x).unwrap());
        sym = sym.max((a - b).abs() / a.abs().max(1e-300));
        let r: f64 = x.iter().zip(&z).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        if r > 0.1 {
            let g = kern.green_gradient(&x, &z).unwrap();
            let scale = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let h = 1e-5;
            for k in 0..4 {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[k] += h;
                xm[k] -= h;
                let fd = (kern.green_function(&xp, &z).unwrap() - kern.green_function(&xm, &z).unwrap()) / (2.0 * h);
                grad = grad.max((fd - g[k]).abs() / scale);
            }
        }
    }
    let big = SlabKernel::new(4, 2.0).unwrap();
    let one = ProfileFn { f: |_| 1.0, sup: 1.0 };
    let mut exit = 0.0f64;
    for x1 in [0.0, 0.8, -1.5, 1.9] {
        let exact = 4.0 - x1 * x1;
        let r = green_apply(&big, &one, &[x1, 0.3, 0.0, 0.0]).unwrap();
        exit = exit.max(((r.value - exact) / exact).abs());
    }
    let f = FieldFn { f: |y: &[f64]| (PI * y[0] / 2.0).cos() * (-(y[1] * y[1] + y[2] * y[2] + y[3] * y[3]) / 2.0).exp(), sup: 1.0 };
    let mut pde = 0.0f64;
    let h = 0.05;
    for x in [vec![0.0; 4], vec![0.4, 0.3, -0.2, 0.1]] {
        let g = |p: &[f64]| green_apply(&kern, &f, p).unwrap().value;
        let g0 = g(&x);
        let mut lap = 0.0;
        for i in 0..4 {
            let at = |s: f64| {
                let mut p = x.clone();
                p[i] += s;
                g(&p)
            };
            lap += (-at(2.0 * h) + 16.0 * at(h) - 30.0 * g0 + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h);
        }
        let fx = (f.f)(&x);
        pde = pde.max((-0.5 * lap - fx).abs() / fx);
    }
    let mut heat = 0.0f64;
    for (x, y) in [([0.2, 0.0, 0.0, 0.0], [-0.3, 0.2, 0.1, 0.0]), ([0.7, 0.0, 0.0, 0.0], [0.1, 0.9, -0.4, 0.0])] {
        heat = heat.max((kern.green_function(&x, &y).unwrap() - time_integral(&kern, &x, &y)).abs());
    }
    out.record(&[boundary, sym, exit, pde, grad, heat]);
    let pass = boundary <= 1e-10 && sym <= 1e-14 && exit <= 1e-3 && pde <= 1e-3 && grad <= 1e-4 && heat <= 1e-6;
    out.line(
        "4",
        pass,
        format!("boundary {boundary:.1e}, symmetry {sym:.1e}, f≡1 {exit:.1e}, PDE {pde:.1e}, gradient {grad:.1e}, time integral {heat:.1e}"),
    );
}

fn c5(out: &mut Out) {
    let r5 = EnvSpec::new(5, 0.0, 0.0).range;
    let r4 = EnvSpec::new(4, 0.0, 0.0).range;
    let (mut s5, mut s4) = (Vec::new(), Vec::new());
    for l in [8.0, 16.0, 32.0] {
        s5.push(gamma_sums(&SlabKernel::new(5, l).unwrap(), &[0.0], r5, 1.0).unwrap().max_l2_gamma_sq());
        s4.push(gamma_sums(&SlabKernel::new(4, l).unwrap(), &[0.0], r4, 1.0).unwrap().max_l2_gamma_tilde_sq() / f64::ln(l));
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) / v.iter().cloned().fold(f64::MAX, f64::min);
    out.record(&s5);
    out.record(&s4);
    out.line(
        "5",
        spread(&s5) <= 2.0 && spread(&s4) <= 2.0,
        format!("d=5 L²Σγ² {s5:.3?} (spread {:.3}); d=4 L²Σγ̃²/log L {s4:.3?} (spread {:.3})", spread(&s5), spread(&s4)),
    );
}

fn c6(level: Level, exec: Exec, out: &mut Out) {
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, eps) in [0.01, 0.02, 0.05].into_iter().enumerate() {
        let l = half_width_for(eps).unwrap();
        let env = sample_environment(&EnvSpec::new(4, eps, eps / 4.0), 60 + k as u64).unwrap();
        let probes: Vec<Vec<f64>> = [-0.6, -0.3, 0.0, 0.3, 0.6].iter().map(|s| vec![s * l, 0.2, -0.1, 0.0]).collect();
        let f = move |y: f64| (-(2.0 * y / l).powi(2)).exp();
        let sim = Sim::new(example_dt(l)).with_exec(exec);
        let rep = check_perturbation_identity(&env, f, &probes, l, pick(level, 400, 4), &sim, StreamKey::new(6, k as u64, 0)).unwrap();
        ok &= rep.pass;
        let worst = rep.rows.iter().map(|r| r.residual.mean.abs() / (3.0 * r.residual.stderr).max(1e-300)).fold(0.0, f64::max);
        for r in &rep.rows {
            out.est(&r.residual);
        }
        detail.push(format!("ε={eps}: max |res|/3σ = {worst:.2}"));
    }
    out.line("6", ok, detail.join("; "));
}

fn c7(level: Level, exec: Exec, out: &mut Out) {
    let eps = 0.025;
    let spec = EnvSpec::new(4, eps, 0.01);
    let p = ExampleParams::new(&spec).unwrap();
    let sim = Sim::new(example_dt(p.l)).with_exec(exec);
    let n_env = pick(level, 10, 2);
    let mut agree = 0;
    for i in 0..n_env {
        let env = sample_environment(&spec, 70 + i as u64).unwrap();
        let c = phat_formula_vs_mc(&env, &[0.5, 0.0, 0.0, 0.0], p.l, pick(level, 600, 6), &sim, StreamKey::new(7, i as u64, 0)).unwrap();
        agree += c.agree as usize;
        out.est(&c.direct);
        out.est(&c.formula);
    }
    let budget = Budget::new(n_env.max(2), pick(level, 10, 2), example_dt(p.l)).with_exec(exec);
    let rep = rhohat_estimate(&spec, &p, &budget, &v_grid(&p, p.range / 2.0), 7).unwrap();
    out.est(&rep.estimate);
    let max_rho = rep.per_env.iter().map(|e| e.rho_hat).fold(0.0, f64::max);
    out.line(
        "7",
        agree == n_env && rep.cap_applies && rep.cap_violations == 0,
        format!(
            "p̂ agrees on {agree}/{n_env} environments; ρ̂ max {max_rho:.3} over {} grid points, cap violations {} (L = {} ≥ 3R = {:.2})",
            rep.grid_points,
            rep.cap_violations,
            p.l,
            3.0 * p.range
        ),
    );
}

fn c8(level: Level, exec: Exec, out: &mut Out) {
    let eps = 0.2;
    let budget = Budget::new(pick(level, 40, 2), pick(level, 50, 4), 0.02).with_exec(exec);
    let input = CriterionInput { l: 10.0, l_tilde: 13.0, a_grid: vec![0.25, 0.5, 1.0], kappa: 0.5, c7: 1.0, extra_boxes: vec![] };
    let fwd = evaluate_effective_criterion(&EnvSpec::new(2, eps, eps), &input, &budget, 8).unwrap();
    let back = evaluate_effective_criterion(&EnvSpec::new(2, eps, -eps), &input, &budget, 8).unwrap();
    out.record(&[fwd.best_lhs, back.best_lhs]);
    out.lines.push(Line {
        id: "8a",
        pass: fwd.decision,
        detail: format!("λ = ε: decision {} with lhs {:.3e} (a = {})", fwd.decision, fwd.best_lhs, fwd.best_a),
        out_of_reach: true,
    });
    out.line("8b", !back.decision, format!("λ = −ε: decision {} with lhs {:.3e}", back.decision, back.best_lhs));
    let dual_budget = Budget::new(pick(level, 200, 2), pick(level, 30, 4), 0.02).with_exec(exec);
    let m = mirror_duality(&EnvSpec::new(2, eps, 0.1), 10.0, 13.0, 0.5, &dual_budget, 8).unwrap();
    out.record(&[m.ks.statistic, m.ks.p_value]);
    out.line(
        "8c",
        m.pass,
        format!(
            "mirror KS D = {:.3}, p = {:.3} (naive 1/ρ: D = {:.3}, p = {:.2e})",
            m.ks.statistic, m.ks.p_value, m.naive_inverse.statistic, m.naive_inverse.p_value
        ),
    );
}

fn c9(level: Level, exec: Exec, out: &mut Out) {
    let budget = Budget::new(pick(level, 4, 2), pick(level, 5000, 20), 0.01).with_exec(exec);
    let scan = slab_exit_decay_scan(&EnvSpec::constant(1, 0.1), 1.0, &[5.0, 10.0, 15.0], &budget, 9).unwrap();
    for r in &scan.rows {
        out.est(&r.estimate);
    }
    match scan.rate {
        Some((c, se)) => {
            out.record(&[c, se]);
            out.line("9", (c - 0.2).abs() <= 0.02, format!("fitted rate {c:.4}±{se:.4} vs 2b = 0.2"));
        }
        None => out.line("9", false, format!("no fit: {:?}", scan.diagnostic)),
    }
}

fn c10(level: Level, exec: Exec, out: &mut Out) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let budget = DichotomyBudget { n_env: pick(level, 100, 4), horizon: pick(level, 4000.0, 40.0), dt: 0.05, quad_step: 1e-3 };
    let a_grid = [0.25, 0.5, 1.0];
    let mut agree = 0;
    let n_specs: u64 = pick(level, 10, 2);
    for k in 0..n_specs {
        let eps: f64 = rng.random_range(0.1..0.3);
        let lam = rng.random_range(0.25 * eps..=eps) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let r = solomon_dichotomy(&EnvSpec::new(1, eps, lam), 20.0, &a_grid, &budget, 100 + k, &exec).unwrap();
        let want = if lam > 0.0 { Verdict::Positive } else { Verdict::Negative };
        agree += (r.agreement && r.verdict == want) as u64;
        out.est(&r.mean_log_rho);
        out.est(&r.fraction_right);
    }
    let sym = solomon_dichotomy(&EnvSpec::new(1, 0.2, 0.0), 20.0, &a_grid, &budget, 99, &exec).unwrap();
    out.est(&sym.mean_log_rho);
    out.line(
        "10",
        agree == n_specs && sym.verdict == Verdict::Inconclusive,
        format!("{agree}/{n_specs} specs agree on (i), (ii), (v) and the sign of λ; symmetric spec verdict {:?}", sym.verdict),
    );
}

fn c11(out: &mut Out) {
    let spec = EnvSpec::new(4, 0.01, 0.005).with_eta(0.5);
    let p = ExampleParams::paper_scale(&spec).unwrap();
    let c = delta_condition(&p);
    let l = 1.0 / (4.0 * 0.01);
    let n = l * l * l;
    let lp = l + spec.range / 2.0;
    let gamma = 0.25 * (4f64.powf(-1.5) / 3.0) / 5.0;
    let first = (-gamma * n / 128.0).exp();
    let pos = ((n * lp).powi(2).floor() / (2.0 * lp * lp * n) - 4.0 / gamma).max(0.0);
    let second = 10.0 * n / gamma * (-(gamma * n / 32.0) * pos * pos).exp();
    let scaling_ok =
        p.n == n && (c.first - first).abs() <= 1e-15 && (c.second - second).abs() <= 1e-15 && (c.positive_part - pos).abs() <= 1e-9 * pos;
    let d = delta_inverse(0.5, 4.0, 100.0, 100.0);
    let degenerate_ok = d.positive_part == 0.0 && d.second == 10.0 * 4.0 / 0.5;
    out.record(&[c.first, c.second, c.inv_delta, d.second]);
    out.line(
        "11",
        scaling_ok && degenerate_ok,
        format!(
            "N = {n}, δ⁻¹ = {:.3e} (first {:.3e}, positive part {:.1}); degenerate second term {} = 10N/γ",
            c.inv_delta, c.first, c.positive_part, d.second
        ),
    );
}

type Criterion = fn(Level, Exec, &mut Out);
type Deterministic = fn(&mut Out);

fn main() {
    let mc: [(&str, Criterion); 7] = [("1", c1), ("2", c2), ("6", c6), ("7", c7), ("8", c8), ("9", c9), ("10", c10)];
    let det: [(&str, Deterministic); 4] = [("3", c3), ("4", c4), ("5", c5), ("11", c11)];
    let exec = Exec::all_cores();
    let mut lines = Vec::new();
    let started = Instant::now();
    // Criterion ids given on the command line restrict the run.
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| only.is_empty() || only.iter().any(|o| o == id);
    let mut run = |id: &str, f: &dyn Fn(&mut Out)| {
        if !wanted(id) {
            return;
        }
        let t = Instant::now();
        let mut out = Out::default();
        f(&mut out);
        eprintln!("criterion {id}: {:.1}s", t.elapsed().as_secs_f64());
        lines.extend(out.lines);
    };
    for (id, f) in mc.iter().take(2) {
        run(id, &|o| f(Level::Full, exec, o));
    }
    for (id, f) in det.iter().take(3) {
        run(id, &|o| f(o));
    }
    for (id, f) in mc.iter().skip(2) {
        run(id, &|o| f(Level::Full, exec, o));
    }
    run(det[3].0, &|o| (det[3].1)(o));

    // Replays at reduced budgets under one and eight workers.
    let mut same = Vec::new();
    let replay = wanted("12");
    for (id, f) in mc.iter().filter(|_| replay) {
        let mut a = Out::default();
        let mut b = Out::default();
        f(Level::Replay, Exec::with_workers(1), &mut a);
        f(Level::Replay, Exec::with_workers(8), &mut b);
        same.push((id, !a.bits.is_empty() && a.bits == b.bits));
    }
    for (id, f) in det.iter().filter(|_| replay) {
        let mut a = Out::default();
        let mut b = Out::default();
        f(&mut a);
        f(&mut b);
        same.push((id, !a.bits.is_empty() && a.bits == b.bits));
    }
    let differing: Vec<&str> = same.iter().filter(|(_, s)| !s).map(|(id, _)| **id).collect();
    if replay {
        lines.push(Line {
            id: "12",
            pass: differing.is_empty(),
            detail: if differing.is_empty() {
                format!("{} criteria bit-identical under workers 1 and 8", same.len())
            } else {
                format!("differing: {differing:?}")
            },
            out_of_reach: false,
        });
    }

    let mut fatal = 0;
    for l in &lines {
        let tag = if l.pass { "PASS" } else { "FAIL" };
        let note = if !l.pass && l.out_of_reach { " [out of reach at desk scale]" } else { "" };
        println!("{tag} criterion {:<3} {}{note}", l.id, l.detail);
        fatal += (!l.pass && !l.out_of_reach) as usize;
    }
    println!("acceptance finished in {:.0}s", started.elapsed().as_secs_f64());
    if fatal > 0 {
        std::process::exit(1);
    }
}
