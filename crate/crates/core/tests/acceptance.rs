//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a nonzero status if any criterion fails.

use std::f64::consts::{E, PI};
use std::io::Write;
use std::time::Instant;

use otmonge::problem::trapezoid_masses;
use otmonge::scheme::DeltaStencil;
use otmonge::verification::{
    consistency_rate, consistency_rate_with, extremal_slopes, mass_mismatch, monotonicity_probe,
    oracle_gap, proper_identity_gap, psi_identity_gap, solve_entry, transport_support,
    ConvergenceRow, RateOptions,
};
use otmonge::{
    build_context, build_grids, make_problem, newton_solve, normalize_mean_zero, BenchmarkId,
    InitialGuess, SchemeOptions, SolutionVector, SolverConfig,
};

const LADDER: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];
const SEED: u64 = 20_240_917;

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(id: usize, title: &str, outcome: &Outcome) {
    let status = if outcome.passed { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{status} criterion {id:>2} ({title}): {}",
        outcome.detail
    )
    .unwrap();
    out.flush().unwrap();
}

/// Every ladder solve from the zero initial guess, shared by several criteria.
struct LadderRuns {
    runs: Vec<(BenchmarkId, Vec<(ConvergenceRow, SolutionVector)>)>,
}

impl LadderRuns {
    fn compute() -> Self {
        let cfg = SolverConfig::default();
        let runs = BenchmarkId::ALL
            .iter()
            .map(|&id| {
                let spec = make_problem(id);
                let entries = LADDER
                    .iter()
                    .map(|&n| solve_entry(&spec, n, &cfg).unwrap())
                    .collect();
                (id, entries)
            })
            .collect();
        Self { runs }
    }

    fn get(&self, id: BenchmarkId, n: usize) -> &(ConvergenceRow, SolutionVector) {
        let (_, entries) = self.runs.iter().find(|(b, _)| *b == id).unwrap();
        entries.iter().find(|(row, _)| row.n == n).unwrap()
    }

    fn errors(&self, id: BenchmarkId) -> Vec<f64> {
        LADDER
            .iter()
            .map(|&n| self.get(id, n).0.max_error)
            .collect()
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|e| format!("{e:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_1(runs: &LadderRuns, elapsed: f64) -> Outcome {
    let rect = runs.errors(BenchmarkId::Rectangular);
    let van = runs.errors(BenchmarkId::Vanishing);
    let curved = runs.errors(BenchmarkId::Curved);
    let decreasing = |e: &[f64]| e.windows(2).all(|w| w[1] < w[0]);
    let converged = runs
        .runs
        .iter()
        .all(|(_, e)| e.iter().all(|(r, _)| r.converged));
    let rect_ok = rect[rect.len() - 1] < rect[0];
    let van_ok = decreasing(&van);
    let curved_ok = decreasing(&curved);
    Outcome {
        passed: converged && rect_ok && van_ok && curved_ok,
        detail: format!(
            "all converged={converged}; rectangular end<start={rect_ok} [{}]; vanishing strictly decreasing={van_ok} [{}]; curved strictly decreasing={curved_ok} [{}]; {elapsed:.1} s",
            fmt_list(&rect),
            fmt_list(&van),
            fmt_list(&curved)
        ),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let rate = consistency_rate(BenchmarkId::Rectangular, &[64, 256, 1024, 4096]).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let p = rate.fitted_exponent;
    let residuals: Vec<f64> = rate.samples.iter().map(|s| s.1).collect();

    // Diagnostics only: the same fit restricted to x in [0.2, 0.8], and the
    // vanishing benchmark whose density is zero on the target boundary.
    let inner = RateOptions {
        x_window: Some((0.2, 0.8)),
        ..Default::default()
    };
    let rect_inner =
        consistency_rate_with(BenchmarkId::Rectangular, &[64, 256, 1024, 4096], &inner).unwrap();
    let van_inner =
        consistency_rate_with(BenchmarkId::Vanishing, &[64, 256, 1024, 4096], &inner).unwrap();
    Outcome {
        passed: (0.45..=0.95).contains(&p) && elapsed < 60.0,
        detail: format!(
            "exponent {p:.3} (window [0.45, 0.95]), residuals [{}], {elapsed:.1} s (limit 60 s); diagnostics on x in [0.2, 0.8]: rectangular {:.3}, vanishing {:.3}",
            fmt_list(&residuals),
            rect_inner.fitted_exponent,
            van_inner.fitted_exponent
        ),
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for id in BenchmarkId::ALL {
        let spec = make_problem(id);
        let grids = build_grids(spec.x_domain, spec.y_square, 256).unwrap();
        let ctx = build_context(&spec, &grids).unwrap();
        let probe = monotonicity_probe(&ctx, 10_000, SEED);
        let swapped = ctx.with_options(SchemeOptions {
            stencil: DeltaStencil::Swapped,
            ..ctx.options
        });
        let control = monotonicity_probe(&swapped, 10_000, SEED);
        ok &= probe.passed() && !control.passed();
        parts.push(format!(
            "{id}: {} violations, swapped control {} violations",
            probe.violations, control.violations
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    Outcome {
        passed: ok && elapsed < 30.0,
        detail: format!("{}; {elapsed:.1} s (limit 30 s)", parts.join("; ")),
    }
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for id in BenchmarkId::ALL {
        let spec = make_problem(id);
        let grids = build_grids(spec.x_domain, spec.y_square, 128).unwrap();
        let ctx = build_context(&spec, &grids).unwrap();
        worst = worst.max(proper_identity_gap(&ctx, 100, SEED).unwrap());
    }
    Outcome {
        passed: worst <= 1e-13,
        detail: format!(
            "max relative deviation {worst:.3e} over 100 draws per benchmark (limit 1e-13)"
        ),
    }
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    for id in BenchmarkId::ALL {
        for n in [64, 512] {
            let spec = make_problem(id);
            let grids = build_grids(spec.x_domain, spec.y_square, n).unwrap();
            let ctx = build_context(&spec, &grids).unwrap();
            worst = worst.max(psi_identity_gap(&spec, &ctx));
        }
    }
    Outcome {
        passed: worst <= 1e-12,
        detail: format!("max |psi - g| / (1 + |g|) = {worst:.3e} (limit 1e-12)"),
    }
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + inner + f(b)) * h / 3.0
}

/// `(∫f, ∫g)` by Simpson quadrature in coordinates adapted to each target:
/// `s = y₁ + y₂`, `t = y₂ − y₁` (Jacobian ½) for the rotated rectangles and
/// `w = √(1 − y₁²) − y₂` (Jacobian 1) for the curved strip.
fn independent_masses(id: BenchmarkId) -> (f64, f64) {
    let spec = make_problem(id);
    let source = simpson(|x| (spec.source)(x), 0.0, 1.0, 2000);
    let target = match id {
        BenchmarkId::Rectangular => {
            simpson(|s| simpson(|_t| 0.5 * s, -1.0, 1.0, 2), 1.0, E + 2.0, 2000)
        }
        BenchmarkId::Vanishing => simpson(
            |s| simpson(|t| 0.5 * s * (2.0 - s) * (4.0 - t * t), -2.0, 2.0, 200),
            0.0,
            2.0,
            200,
        ),
        BenchmarkId::Curved => simpson(|_y1| simpson(|w| w, 0.0, PI / 2.0, 200), -1.0, 1.0, 200),
    };
    (source, target)
}

fn criterion_6() -> Outcome {
    let analytic = [
        (BenchmarkId::Rectangular, E * E / 2.0 + 2.0 * E + 1.5),
        (BenchmarkId::Vanishing, 64.0 / 9.0),
        (BenchmarkId::Curved, PI * PI / 4.0),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (id, exact) in analytic {
        let (f, g) = independent_masses(id);
        let quad_ok = (f - exact).abs() <= 1e-6 && (g - exact).abs() <= 1e-6;

        let n = 512;
        let working = mass_mismatch(id, n).unwrap();
        let spec = make_problem(id);
        let grids = build_grids(spec.x_domain, spec.y_square, n).unwrap();
        let mismatch = |refine: usize| {
            let (sf, tg) = trapezoid_masses(&spec, refine * n, refine * grids.m_y);
            (sf - tg).abs() / sf
        };
        let (coarse, fine) = (mismatch(4), mismatch(16));
        let this_ok = quad_ok && working <= 1e-2 && fine < coarse;
        ok &= this_ok;
        parts.push(format!(
            "{id}: int f={f:.9} int g={g:.9} vs {exact:.9}, mismatch 4x {coarse:.2e} -> 16x {fine:.2e}"
        ));
    }
    Outcome {
        passed: ok,
        detail: parts.join("; "),
    }
}

fn criterion_7(runs: &LadderRuns) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for id in BenchmarkId::ALL {
        let spec = make_problem(id);
        for n in [64, 512, 4096] {
            let (row, zero) = runs.get(id, n);
            let grids = build_grids(spec.x_domain, spec.y_square, n).unwrap();
            let ctx = build_context(&spec, &grids).unwrap();
            let bowl = newton_solve(
                &ctx,
                &SolverConfig {
                    initial_guess: InitialGuess::QuadraticBowl,
                    ..Default::default()
                },
            )
            .unwrap();
            let a = normalize_mean_zero(&zero.u);
            let b = normalize_mean_zero(&bowl.u);
            let gap = a
                .iter()
                .zip(&b)
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            let this_ok = zero.converged
                && zero.final_residual_norm <= 1e-10
                && row.newton_iterations <= 100
                && bowl.converged
                && gap <= 1e-9;
            ok &= this_ok;
            parts.push(format!(
                "{id}/{n}: {} its, res {:.1e}, bowl {} its, gap {gap:.1e}",
                row.newton_iterations, zero.final_residual_norm, bowl.iterations
            ));
        }
    }
    Outcome {
        passed: ok,
        detail: parts.join("; "),
    }
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let expected = [
        (BenchmarkId::Rectangular, 1.0, E),
        (BenchmarkId::Curved, 0.0, PI / 2.0),
    ];
    for (id, left, right) in expected {
        let spec = make_problem(id);
        let mut ratios = Vec::new();
        for n in [64, 512, 4096] {
            let grids = build_grids(spec.x_domain, spec.y_square, n).unwrap();
            let ctx = build_context(&spec, &grids).unwrap();
            let (l, r) = extremal_slopes(&ctx);
            let err = (l - left).abs().max((r - right).abs());
            ratios.push(err / grids.h_y);
        }
        ok &= ratios.iter().all(|&q| q <= 2.0);
        parts.push(format!("{id}: slope error / h_y = [{}]", fmt_list(&ratios)));
    }
    Outcome {
        passed: ok,
        detail: format!("{} (bound 2)", parts.join("; ")),
    }
}

fn criterion_9() -> Outcome {
    let gaps: Vec<_> = [64, 256, 1024, 4096]
        .iter()
        .map(|&n| oracle_gap(BenchmarkId::Rectangular, n).unwrap())
        .collect();
    let constants: Vec<f64> = gaps.iter().map(|g| g.constant).collect();
    let mean = constants.iter().sum::<f64>() / constants.len() as f64;
    let stable = constants.iter().all(|c| (c - mean).abs() <= 0.5 * mean);
    Outcome {
        passed: stable,
        detail: format!(
            "C over N = 64, 256, 1024, 4096: [{}], mean {mean:.3e}, all within 50% = {stable}",
            fmt_list(&constants)
        ),
    }
}

fn criterion_10(runs: &LadderRuns) -> Outcome {
    let spec = make_problem(BenchmarkId::Rectangular);
    let mut ok = true;
    let mut parts = Vec::new();
    let mut per_m = Vec::new();
    for n in [64, 512] {
        let (_, sol) = runs.get(BenchmarkId::Rectangular, n);
        let grids = build_grids(spec.x_domain, spec.y_square, n).unwrap();
        let ctx = build_context(&spec, &grids).unwrap();
        let mut worst_ratio: f64 = 0.0;
        let mut max_count = 0;
        for i in 1..n {
            let x = grids.x_nodes[i];
            let support = transport_support(&ctx, sol, i).unwrap();
            max_count = max_count.max(support.len());
            for s in &support {
                let distance = (s.y[0] + s.y[1] - 2.0 * x - x.exp()).abs() / 2f64.sqrt();
                worst_ratio = worst_ratio.max(distance / (2.0 * s.eps));
            }
        }
        ok &= worst_ratio <= 1.0;
        per_m.push(max_count as f64 / grids.m_y as f64);
        parts.push(format!(
            "N={n}: max distance / 2eps = {worst_ratio:.3}, max count {max_count}, M = {}",
            grids.m_y
        ));
    }
    let spread = per_m.iter().cloned().fold(0.0, f64::max)
        / per_m.iter().cloned().fold(f64::INFINITY, f64::min);
    ok &= spread <= 2.0;
    Outcome {
        passed: ok,
        detail: format!(
            "{}; count/M ratio spread {spread:.2} (bound 2)",
            parts.join("; ")
        ),
    }
}

fn main() {
    let mut failures = 0;
    let mut record = |id: usize, title: &str, outcome: Outcome| {
        report(id, title, &outcome);
        if !outcome.passed {
            failures += 1;
        }
    };

    let start = Instant::now();
    let runs = LadderRuns::compute();
    let ladder_seconds = start.elapsed().as_secs_f64();

    record(1, "benchmark trends", criterion_1(&runs, ladder_seconds));
    record(2, "consistency rate", criterion_2());
    record(3, "monotonicity suite", criterion_3());
    record(4, "proper identity", criterion_4());
    record(5, "psi equals g", criterion_5());
    record(6, "mass balance", criterion_6());
    record(7, "solver robustness", criterion_7(&runs));
    record(8, "boundary consistency", criterion_8());
    record(9, "oracle agreement", criterion_9());
    record(10, "support geometry", criterion_10(&runs));

    println!("{} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
