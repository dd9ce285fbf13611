//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::time::Instant;

use expfunc::asymptotics::{asymptotic_density_deriv, ratio_table, AsymptoticForm};
use expfunc::bernstein::validate_inequalities;
use expfunc::bgamma::{arg_phistar_diagnostic, e_phis, log_w, stirling_parts, t_phis};
use expfunc::fixtures::{self, POSITIVE_INCREASE};
use expfunc::inversion::{density_deriv, density_deriv_report, moment, tail};
use expfunc::montecarlo::{sample_batch, SimConfig};
use expfunc::phi_star::varphi_star;
use expfunc::quad::{adaptive, Tolerance};
use expfunc::{BernsteinSpec, C64};

type Check = Result<String, String>;

fn spec(name: &str) -> BernsteinSpec {
    fixtures::spec(name).expect("fixture exists").expect("fixture builds")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn fail_if(bad: Vec<String>, ok: String) -> Check {
    if bad.is_empty() {
        Ok(ok)
    } else {
        Err(bad.join("; "))
    }
}

/// exp(log W(n+1)) against ∏ φ(k), n = 1..15.
fn criterion_1() -> Check {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for name in POSITIVE_INCREASE {
        let s = spec(name);
        let mut log_prod = 0.0;
        for n in 1..=15 {
            log_prod += s.phi_real(n as f64).map_err(|e| e.to_string())?.ln();
            let lw = log_w(&s, C64::new(n as f64 + 1.0, 0.0)).map_err(|e| e.to_string())?;
            let err = (C64::new(lw.re - log_prod, lw.im).exp() - 1.0).norm();
            worst = worst.max(err);
            if err > 1e-8 {
                bad.push(format!("{name} n={n}: {err:.2e}"));
            }
        }
    }
    fail_if(bad, format!("worst relative error {worst:.2e} over {} fixtures", POSITIVE_INCREASE.len()))
}

/// PureKill{q=1}: density, asymptotic and T.
fn criterion_2() -> Check {
    let s = spec("pure_kill_q1");
    let mut bad = Vec::new();
    let t = t_phis(&s).map_err(|e| e.to_string())?;
    let t_exact = 1.0 - 0.5 * (2.0 * std::f64::consts::PI).ln();
    if (t - t_exact).abs() > 1e-7 {
        bad.push(format!("T = {t}"));
    }
    let mut worst = 0.0f64;
    for x in [0.5f64, 1.0, 2.0, 5.0, 10.0] {
        for n in 0..=2 {
            let exact = if n % 2 == 0 { 1.0 } else { -1.0 } * (-x).exp();
            let d = density_deriv(&s, x, n, 1e-10).map_err(|e| e.to_string())?.value;
            let a = asymptotic_density_deriv(&s, x, n).map_err(|e| e.to_string())?.value;
            for (what, v) in [("density", d), ("asymptotic", a)] {
                let r = rel(v, exact);
                worst = worst.max(r);
                if r > 1e-6 {
                    bad.push(format!("{what} x={x} n={n}: {r:.2e}"));
                }
            }
        }
    }
    fail_if(bad, format!("T = {t:.10}, worst relative error {worst:.2e}"))
}

/// Gamma(2,1) law from φ(λ) = λ/(1+λ).
fn criterion_3() -> Check {
    let s = spec("exp_jump_cpp");
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for x in [0.5f64, 1.0, 2.0, 4.0, 8.0] {
        let d = density_deriv(&s, x, 0, 1e-8).map_err(|e| e.to_string())?.value;
        let t = tail(&s, x, 1e-8).map_err(|e| e.to_string())?.value;
        for (what, v, exact) in [("density", d, x * (-x).exp()), ("tail", t, (1.0 + x) * (-x).exp())] {
            let r = rel(v, exact);
            worst = worst.max(r);
            if r > 1e-4 {
                bad.push(format!("{what} x={x}: {r:.2e}"));
            }
        }
    }
    let mut fact = 1.0;
    for n in 0..=6usize {
        fact *= (n + 1) as f64;
        let m = moment(&s, n).map_err(|e| e.to_string())?;
        if rel(m, fact) > 1e-12 {
            bad.push(format!("moment({n}) = {m}"));
        }
    }
    fail_if(bad, format!("worst relative error {worst:.2e}; moments (n+1)! for n ≤ 6"))
}

/// Stable ratios at varphi ≈ 10 and at the first x with varphi ≥ 50.
fn criterion_4() -> Check {
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for (name, alpha) in [("stable_a03", 0.3), ("stable_a07", 0.7), ("stable", 0.5)] {
        let s = spec(name);
        // varphi(x) = x^{1/(1−α)} for c = 1
        let x10 = 10f64.powf(1.0 - alpha);
        let mut x50 = 50f64.powf(1.0 - alpha);
        while varphi_star(&s, x50).map_err(|e| e.to_string())? < 50.0 {
            x50 *= 1.0 + 1e-12;
        }
        for n in 0..=1 {
            let rows = ratio_table(&s, &[x10, x50], n, 1e-9, AsymptoticForm::General).map_err(|e| e.to_string())?;
            let (d10, d50) = ((rows[0].ratio - 1.0).abs(), (rows[1].ratio - 1.0).abs());
            notes.push(format!("α={alpha} n={n}: {d10:.4} → {d50:.4}"));
            if d50 > 0.05 || d50 >= d10 {
                bad.push(format!("α={alpha} n={n}: |ratio−1| {d10:.4} at varphi=10, {d50:.4} at varphi=50"));
            }
        }
    }
    let v = asymptotic_density_deriv(&spec("stable"), 2.0, 0).map_err(|e| e.to_string())?.value;
    if rel(v, 0.17096) > 1e-3 {
        bad.push(format!("asymptotic at x=2 is {v}"));
    }
    fail_if(bad, format!("{}; α=½ asymptotic(2) = {v:.6}", notes.join(", ")))
}

/// Atoms{(1,1)}: density against C e^{−x} at x = 30.
fn criterion_5() -> Check {
    let s = spec("cpp_atoms");
    let row = ratio_table(&s, &[30.0], 0, 1e-9, AsymptoticForm::CompoundPoisson).map_err(|e| e.to_string())?[0];
    if (0.95..=1.05).contains(&row.ratio) {
        Ok(format!("ratio {:.12} at x = 30 (density {:.6e})", row.ratio, row.density))
    } else {
        Err(format!("ratio {} at x = 30", row.ratio))
    }
}

/// Inequality suite and the arg φ* diagnostic on every fixture.
fn criterion_6() -> Check {
    let a_grid: Vec<f64> = (0..=12).map(|i| 10f64.powf(-2.0 + i as f64 / 3.0)).collect();
    let t_grid: Vec<f64> = (0..=16).map(|i| 10f64.powf(-3.0 + i as f64 / 2.0)).collect();
    let mut bad = Vec::new();
    let mut total = 0;
    for (name, _) in fixtures::FIXTURES {
        let s = spec(name);
        let r = validate_inequalities(&s, 10_000, 42).map_err(|e| e.to_string())?;
        total += r.records.iter().map(|r| r.samples).max().unwrap_or(0);
        if r.total_violations() > 0 {
            let ids: Vec<_> = r.records.iter().filter(|r| r.violations > 0).map(|r| format!("{}×{}", r.id, r.violations)).collect();
            bad.push(format!("{name}: {} evaluation failures, {}", r.evaluation_failures, ids.join(",")));
        }
        let args = arg_phistar_diagnostic(&s, &a_grid, &t_grid).map_err(|e| e.to_string())?;
        if !args.nonnegative {
            bad.push(format!("{name}: arg φ* reaches {}", args.min_arg));
        }
    }
    fail_if(bad, format!("{total} points over {} fixtures, no violations, arg φ* ≥ 0 on the grid", fixtures::FIXTURES.len()))
}

/// A in closed form and uniform convergence of E to T.
fn criterion_7() -> Check {
    let mut bad = Vec::new();
    let k = spec("pure_kill_q1");
    let a = stirling_parts(&k, C64::new(1.0, 1.0)).map_err(|e| e.to_string())?.a;
    let exact = 1f64.atan() - 0.5 * 2f64.ln();
    if (a - exact).abs() > 1e-10 {
        bad.push(format!("A = {a}"));
    }
    let mut worst = 0.0f64;
    for name in ["pure_kill_q1", "pure_kill_q2", "stable", "stable_a03", "stable_a07"] {
        let s = spec(name);
        let t = t_phis(&s).map_err(|e| e.to_string())?;
        for im in [0.0, 10.0, 100.0] {
            let e = e_phis(&s, C64::new(200.0, im)).map_err(|e| e.to_string())?;
            let d = (e - t).norm();
            worst = worst.max(d);
            if d > 1e-3 {
                bad.push(format!("{name} Im z={im}: |E − T| = {d:.2e}"));
            }
        }
    }
    fail_if(bad, format!("|A − exact| = {:.1e}, max |E(200+ib) − T| = {worst:.2e}", (a - exact).abs()))
}

/// Monte Carlo against moment(1) and the inverted tail.
fn criterion_8() -> Check {
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for name in ["cpp_atoms", "exp_jump_cpp"] {
        let s = spec(name);
        let config = SimConfig::new(1_000_000, 2024);
        let b = sample_batch(&s, &config).map_err(|e| e.to_string())?;
        let m1 = moment(&s, 1).map_err(|e| e.to_string())?;
        let z_mean = (b.summary.mean - m1) / b.summary.std_error;
        // the stopping bias is at most stop_level·E[I]
        if (b.summary.mean - m1).abs() > 3.0 * b.summary.std_error + b.truncation_bias_bound {
            bad.push(format!("{name}: mean {} vs {m1} (z = {z_mean:.2})", b.summary.mean));
        }
        let mut zs = vec![format!("{z_mean:+.2}")];
        for x in [1.0, 2.0, 4.0] {
            let p = tail(&s, x, 1e-9).map_err(|e| e.to_string())?.value;
            let se = (p * (1.0 - p) / b.draws.len() as f64).sqrt();
            let z = (b.empirical_tail(x) - p) / se;
            zs.push(format!("{z:+.2}"));
            if z.abs() > 4.0 {
                bad.push(format!("{name}: tail at {x} has z = {z:.2}"));
            }
        }
        let again = sample_batch(&s, &config).map_err(|e| e.to_string())?;
        if again.draws.iter().zip(&b.draws).any(|(a, b)| a.to_bits() != b.to_bits()) {
            bad.push(format!("{name}: rerun differs"));
        }
        notes.push(format!("{name} z-scores [{}]", zs.join(" ")));
    }
    fail_if(bad, format!("{}; reruns bit-identical", notes.join(", ")))
}

/// ∫f + tail = 1, f′ against finite differences, and the imaginary residue.
fn criterion_9() -> Check {
    let mut bad = Vec::new();
    let mut worst_norm = 0.0f64;
    let mut worst_fd = 0.0f64;
    let mut worst_im = 0.0f64;
    for name in POSITIVE_INCREASE {
        let s = spec(name);
        let err = |e: expfunc::Error| format!("{name}: {e}");
        // first X on a doubling grid with varphi(X) ≥ 20
        let mut hi = 2.0;
        while varphi_star(&s, hi).map_err(err)? < 20.0 {
            hi *= 2.0;
        }
        let started = Instant::now();
        // below LO the mass is about LO·f(LO)
        const LO: f64 = 1e-7;
        let f0 = |x: f64| density_deriv(&s, x, 0, 1e-9).map(|r| r.value);
        let below = LO * f0(LO).map_err(err)?;
        let g = |t: f64| f0(t.exp()).map(|v| v * t.exp());
        let mut pieces = vec![LO.ln(), 1e-3f64.ln()];
        pieces.extend((0..=4).map(|i| 1e-2f64.ln() + (hi.ln() - 1e-2f64.ln()) * i as f64 / 4.0));
        let body = below + adaptive(g, &pieces, Tolerance::new(1e-8, 1e-8), 200, "normalization").map_err(err)?.value;
        let t_norm = started.elapsed().as_secs_f64();
        let total = body + tail(&s, hi, 1e-10).map_err(err)?.value;
        worst_norm = worst_norm.max((total - 1.0).abs());
        if (total - 1.0).abs() > 1e-6 {
            bad.push(format!("{name}: ∫f + tail = {total}"));
        }
        for x in [0.5, 2.0] {
            let h = 1e-4 * x;
            let f = |x: f64| density_deriv(&s, x, 0, 1e-12).map(|r| r.value).map_err(err);
            let fd = (f(x + h)? - f(x - h)?) / (2.0 * h);
            let exact = density_deriv(&s, x, 1, 1e-12).map_err(err)?.value;
            let r = rel(fd, exact);
            worst_fd = worst_fd.max(r);
            if r > 1e-4 {
                bad.push(format!("{name}: f′ at {x} off by {r:.1e}"));
            }
            for n in 0..=1 {
                let rep = density_deriv_report(&s, x, n, 1e-10).map_err(err)?;
                let im = rep.imag_residue.unwrap_or(f64::INFINITY);
                worst_im = worst_im.max(im);
                if im > 1e-10 {
                    bad.push(format!("{name}: imaginary residue {im:.1e} at x={x} n={n}"));
                }
            }
        }
        if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
            eprintln!("  {name}: X = {hi}, ∫f + tail − 1 = {:.1e}, {t_norm:.1}s + {:.1}s", total - 1.0, started.elapsed().as_secs_f64() - t_norm);
        }
    }
    fail_if(bad, format!("max |∫f + tail − 1| = {worst_norm:.1e}, max f′ mismatch {worst_fd:.1e}, max residue {worst_im:.1e}"))
}

fn main() {
    // a filter argument that matches nothing (as passed by `cargo test <name>`) skips the run
    // numeric arguments pick criteria; any other filter that does not match skips the run
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let picked: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if args.iter().any(|a| a.parse::<usize>().is_err() && !"acceptance".contains(a.as_str())) {
        return;
    }
    let criteria: [(&str, fn() -> Check); 9] = [
        ("Bernstein-gamma integer consistency", criterion_1),
        ("exponential clock end to end", criterion_2),
        ("Gamma(2,1) law", criterion_3),
        ("stable asymptotic convergence", criterion_4),
        ("compound Poisson asymptotic", criterion_5),
        ("inequality suite and arg diagnostic", criterion_6),
        ("Stirling parts", criterion_7),
        ("Monte Carlo cross-check", criterion_8),
        ("inversion self-consistency", criterion_9),
    ];
    let mut failed = 0;
    let mut run = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        if !picked.is_empty() && !picked.contains(&(i + 1)) {
            continue;
        }
        run += 1;
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {title}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {title}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", run - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
