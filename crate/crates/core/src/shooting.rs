//! Shooting solver for the discrete system.
//!
//! Interior row `i` is non-increasing in `u_{i+1}`, so given `u_{i−1}` and
//! `u_i` it has at most one root in `u_{i+1}` once its curvature term is
//! active. Starting from `u_0` and the left boundary row, the rows can be
//! solved one after another; the right boundary row then measures how far
//! `u_0` is from the discrete solution, and every intermediate value is
//! non-decreasing in `u_0`.
//!
//! A row with `f_i + ρ u_i = 0` and a vanishing curvature sum is satisfied
//! by a whole half-line of `u_{i+1}`. When the bracket on the current
//! parameter collapses onto such a row, the row is fixed and the search
//! continues with `u_{i+1} − u_i` as the new parameter.

use crate::scheme::{GridFunction, SchemeContext};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    /// Row `i` needs larger values (`f_i + ρ u_i < 0`).
    TooLow(usize),
    /// Row `i` cannot reach its target for any `u_{i+1}`.
    TooHigh(usize),
    /// All rows but the right boundary hold.
    Complete(f64),
}

impl Outcome {
    /// `−1` when the parameter must grow, `+1` when it must shrink.
    fn direction(self) -> i8 {
        match self {
            Outcome::TooLow(_) => -1,
            Outcome::TooHigh(_) => 1,
            Outcome::Complete(m) if m < 0.0 => -1,
            Outcome::Complete(m) if m > 0.0 => 1,
            Outcome::Complete(_) => 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Trial {
    param: f64,
    outcome: Outcome,
    u0: f64,
    /// `steps[i] = u_i − u_{i−1}`, filled up to the row that stopped the sweep.
    steps: Vec<f64>,
}

const MAX_EXPANSIONS: usize = 200;
const MAX_ROW_ITERS: usize = 200;
const MAX_BRACKET_ITERS: usize = 200;

enum RowRoot {
    Step(f64),
    TooLow,
    TooHigh,
}

/// `(max c_xx, f_i + ρ u_i)` for row `i`.
fn row_data(ctx: &SchemeContext, i: usize, ui: f64) -> (f64, f64) {
    (ctx.c_xx_max(i), ctx.source[i] + ctx.rho_int() * ui)
}

/// Whether the curvature sum of row `i` grows without bound as `u_{i+1} → ∞`.
fn reachable(ctx: &SchemeContext, i: usize, s_prev: f64) -> bool {
    s_prev / ctx.h_x() < ctx.reach_bound(i)
}

/// Solves interior row `i` for `s = u_{i+1} − u_i` given `u_i` and `u_i − u_{i−1}`.
fn solve_row(ctx: &SchemeContext, i: usize, ui: f64, s_prev: f64) -> RowRoot {
    let h = ctx.h_x();
    let eval = |s: f64| ctx.interior_local(i, ui, s_prev, -s, true);
    let (c_xx_max, flat) = row_data(ctx, i, ui);
    // `flat == 0` leaves a half-line of roots; reporting it as too low lets
    // the outer search collapse onto this row and fix it as degenerate.
    if flat <= 0.0 {
        return RowRoot::TooLow;
    }
    let lo0 = s_prev - h * h * c_xx_max;
    if !reachable(ctx, i, s_prev) {
        return RowRoot::TooHigh;
    }

    // The row value is `flat > 0` at `lo0` and non-increasing in `s`.
    // Newton from the previous increment, safeguarded by the bracket.
    let (mut lo, mut f_lo) = (lo0, flat);
    let mut hi = f64::INFINITY;
    let mut f_hi = f64::NEG_INFINITY;
    let mut width = h * h * (1.0 + c_xx_max.abs());
    let mut s = if s_prev > lo0 { s_prev } else { lo0 + width };
    for _ in 0..MAX_ROW_ITERS {
        let (f, row) = eval(s);
        // below this the row value is rounding noise of the curvature sum
        if f.abs() <= 64.0 * f64::EPSILON * flat {
            return RowRoot::Step(s);
        }
        if f > 0.0 {
            lo = s;
            f_lo = f;
        } else {
            hi = s;
            f_hi = f;
        }
        let slope = row[2];
        let newton = s - f / slope;
        let next = if slope < 0.0 && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            width *= 2.0;
            lo + width
        };
        if !(next > lo && next < hi) || !next.is_finite() {
            break;
        }
        s = next;
    }
    if !hi.is_finite() {
        return RowRoot::TooHigh;
    }
    RowRoot::Step(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

/// Largest `s` for which row `i` has a zero curvature sum, or `None` if the
/// sum vanishes for every `s`.
fn dead_threshold(ctx: &SchemeContext, i: usize, ui: f64, s_prev: f64) -> Option<f64> {
    if !reachable(ctx, i, s_prev) {
        return None;
    }
    let h = ctx.h_x();
    let (c_xx_max, flat) = row_data(ctx, i, ui);
    let sum = |s: f64| flat - ctx.interior_local(i, ui, s_prev, -s, false).0;
    let mut lo = s_prev - h * h * c_xx_max;
    let mut width = h * h * (1.0 + c_xx_max.abs());
    let mut hi = lo + width;
    while !(sum(hi) > 0.0) {
        lo = hi;
        width *= 2.0;
        hi = lo + width;
        if !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..MAX_BRACKET_ITERS {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if sum(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(lo)
}

/// Solves rows `start..N` given `steps[..=start]` and `u_start`.
fn sweep_tail(ctx: &SchemeContext, steps: &mut [f64], start: usize, u_start: f64) -> Outcome {
    let n = ctx.grids.n_x;
    let h = ctx.h_x();
    let mut ui = u_start;
    for i in start..n {
        match solve_row(ctx, i, ui, steps[i]) {
            RowRoot::Step(s) => {
                steps[i + 1] = s;
                ui += s;
            }
            RowRoot::TooLow => return Outcome::TooLow(i),
            RowRoot::TooHigh => return Outcome::TooHigh(i),
        }
    }
    Outcome::Complete(steps[n] / h - ctx.right_slope + h * ui)
}

/// One shooting parameter: either `u_0`, or the increment after a row that
/// has been fixed as degenerate.
#[derive(Debug, Clone)]
enum Level {
    Left,
    After {
        row: usize,
        u0: f64,
        prefix: Vec<f64>,
    },
}

impl Level {
    fn run(&self, ctx: &SchemeContext, param: f64) -> Trial {
        let n = ctx.grids.n_x;
        let h = ctx.h_x();
        match self {
            Level::Left => {
                let mut steps = vec![0.0; n + 1];
                steps[1] = h * (ctx.left_slope + h * param);
                let u1 = param + steps[1];
                let outcome = sweep_tail(ctx, &mut steps, 1, u1);
                Trial {
                    param,
                    outcome,
                    u0: param,
                    steps,
                }
            }
            Level::After { row, u0, prefix } => {
                let mut steps = prefix.clone();
                steps[row + 1] = param;
                let u_next = *u0 + steps[1..=row + 1].iter().sum::<f64>();
                let outcome = if row + 1 < n {
                    sweep_tail(ctx, &mut steps, row + 1, u_next)
                } else {
                    Outcome::Complete(param / h - ctx.right_slope + h * u_next)
                };
                Trial {
                    param,
                    outcome,
                    u0: *u0,
                    steps,
                }
            }
        }
    }
}

enum LevelResult {
    Solved,
    Degenerate(Level),
    Stuck,
}

struct Search<'a> {
    ctx: &'a SchemeContext,
    best: Option<(f64, GridFunction)>,
}

impl Search<'_> {
    fn run(&mut self, level: &Level, param: f64) -> Trial {
        let trial = level.run(self.ctx, param);
        if let Outcome::Complete(m) = trial.outcome {
            if self.best.as_ref().is_none_or(|(b, _)| m.abs() < *b) {
                self.best = Some((
                    m.abs(),
                    GridFunction::from_steps(trial.u0, trial.steps.clone()),
                ));
            }
        }
        trial
    }

    /// Brackets and narrows the parameter of one level.
    fn solve_level(&mut self, level: &Level, start: f64, upper: f64, scale: f64) -> LevelResult {
        let first = self.run(level, start);
        let dir = first.outcome.direction();
        if dir == 0 {
            return LevelResult::Solved;
        }
        let (mut lo, mut hi) = (first.clone(), first);
        let mut width = scale;
        let mut found = false;
        for _ in 0..MAX_EXPANSIONS {
            let probe = if dir < 0 {
                hi.param + width
            } else {
                lo.param - width
            };
            if !probe.is_finite() || probe > upper {
                break;
            }
            let t = self.run(level, probe);
            match t.outcome.direction() {
                0 => return LevelResult::Solved,
                d if d == dir => {
                    lo = t.clone();
                    hi = t;
                }
                d if d < 0 => {
                    lo = t;
                    found = true;
                    break;
                }
                _ => {
                    hi = t;
                    found = true;
                    break;
                }
            }
            width *= 2.0;
        }
        if !found {
            return LevelResult::Stuck;
        }

        // Illinois regula falsi while both ends are complete sweeps, bisection otherwise.
        let mut side = 0i8;
        let (mut w_lo, mut w_hi) = (1.0, 1.0);
        for _ in 0..MAX_BRACKET_ITERS {
            let (a, b) = (lo.param, hi.param);
            let mid = match (lo.outcome, hi.outcome) {
                (Outcome::Complete(m_lo), Outcome::Complete(m_hi)) => {
                    let (fa, fb) = (w_lo * m_lo, w_hi * m_hi);
                    let t = a - fa * (b - a) / (fb - fa);
                    if t > a && t < b {
                        t
                    } else {
                        0.5 * (a + b)
                    }
                }
                _ => 0.5 * (a + b),
            };
            if !(mid > a && mid < b) {
                break;
            }
            let t = self.run(level, mid);
            match t.outcome.direction() {
                0 => return LevelResult::Solved,
                d if d < 0 => {
                    lo = t;
                    w_lo = 1.0;
                    if side < 0 {
                        w_hi *= 0.5;
                    }
                    side = -1;
                }
                _ => {
                    hi = t;
                    w_hi = 1.0;
                    if side > 0 {
                        w_lo *= 0.5;
                    }
                    side = 1;
                }
            }
        }
        match lo.outcome {
            Outcome::TooLow(row) => LevelResult::Degenerate(Level::After {
                row,
                u0: lo.u0,
                prefix: lo.steps,
            }),
            Outcome::Complete(_) if matches!(hi.outcome, Outcome::Complete(_)) => {
                LevelResult::Solved
            }
            _ => LevelResult::Stuck,
        }
    }
}

/// Searches for the discrete solution starting from `u_0 = start`. Returns
/// the best state found, which satisfies every row but possibly the right
/// boundary row up to the collapse of the final bracket.
pub(crate) fn shoot(ctx: &SchemeContext, start: f64) -> Option<GridFunction> {
    let mut search = Search { ctx, best: None };
    let h = ctx.h_x();
    let mut result =
        search.solve_level(&Level::Left, start, f64::INFINITY, 1.0f64.max(start.abs()));
    let mut last_row = 0;
    while let LevelResult::Degenerate(level) = result {
        let Level::After {
            row,
            u0,
            ref prefix,
        } = level
        else {
            break;
        };
        if row < last_row.max(1) {
            break;
        }
        last_row = row + 1;
        let u_row = u0 + prefix[1..=row].iter().sum::<f64>();
        let (upper, begin) = match dead_threshold(ctx, row, u_row, prefix[row]) {
            Some(t) => (t, t),
            None => (f64::INFINITY, prefix[row]),
        };
        result = search.solve_level(&level, begin, upper, h);
    }
    search.best.map(|(_, s)| s)
}
