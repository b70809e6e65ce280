//! Powell's direction-set minimizer with golden-ratio bracketing and Brent line minimization.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;
/// 1 − 1/φ, the golden-section step fraction.
const GOLDEN_SECTION: f64 = 0.381_966_011_250_105;
/// Largest parabolic extrapolation step during bracketing, in units of the current bracket.
const PARABOLIC_LIMIT: f64 = 100.0;
const MAX_BRACKET_STEPS: usize = 500;
const MAX_BRENT_ITERATIONS: usize = 200;
/// Absolute floor on the Brent tolerance, for minima sitting at t = 0.
const ABS_EPS: f64 = 1e-12;
const TINY: f64 = 1e-20;

/// A function of one real variable to minimize along a line.
pub trait LineFunction {
    fn value(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64> LineFunction for F {
    fn value(&self, t: f64) -> f64 {
        self(t)
    }
}

/// An N-dimensional cost function.
pub trait Objective {
    fn value(&mut self, x: &[f64]) -> f64;

    /// The cost along coordinate `axis` through `x`, as a function of the offset added to
    /// `x[axis]`, when the objective can provide it more cheaply than point evaluations.
    fn axis_line(&mut self, _x: &[f64], _axis: usize) -> Option<Box<dyn LineFunction>> {
        None
    }
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn value(&mut self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowellOptions {
    pub max_iterations: usize,
    /// Stop once an outer iteration lowers the cost by less than this relative amount.
    pub cost_tolerance: f64,
    /// Fractional tolerance handed to the Brent line minimizer.
    pub line_tolerance: f64,
    /// Cap on cost evaluations across the whole run. A full evaluation at a point and the
    /// construction of one axis restriction each count once; probes of a restriction are free.
    pub max_cost_evaluations: usize,
}

impl Default for PowellOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tolerance: 1e-6,
            line_tolerance: 1e-6,
            max_cost_evaluations: 5_000,
        }
    }
}

impl PowellOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.max_cost_evaluations == 0 {
            return Err(Error::argument("Powell budgets must be positive"));
        }
        if !(self.cost_tolerance > 0.0 && self.line_tolerance > 0.0) {
            return Err(Error::argument("Powell tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowellResult {
    pub best_params: Vec<f64>,
    pub best_cost: f64,
    pub iterations: usize,
    pub cost_evaluations: usize,
    /// How many of `cost_evaluations` were axis restrictions.
    pub axis_restrictions: usize,
    /// Cost at the start point followed by the cost after each outer iteration.
    pub history: Vec<f64>,
    /// False when a budget ran out before the relative-decrease test was met.
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineMinimum {
    pub t: f64,
    pub value: f64,
    pub evaluations: usize,
}

struct CountingLine<'a> {
    f: &'a dyn LineFunction,
    evaluations: usize,
}

impl CountingLine<'_> {
    fn eval(&mut self, t: f64) -> Result<f64> {
        self.evaluations += 1;
        let v = self.f.value(t);
        if !v.is_finite() {
            return Err(Error::Numeric {
                at: t,
                detail: format!("line objective returned {v}"),
            });
        }
        Ok(v)
    }
}

/// Brackets a minimum starting from `origin` and `origin + direction_scale`, then refines it
/// with Brent's method to fractional tolerance `tol`.
pub fn bracket_and_brent(
    objective: &dyn LineFunction,
    origin: f64,
    direction_scale: f64,
    tol: f64,
) -> Result<LineMinimum> {
    line_minimize(objective, origin, None, direction_scale, tol)
}

fn line_minimize(
    objective: &dyn LineFunction,
    origin: f64,
    origin_value: Option<f64>,
    direction_scale: f64,
    tol: f64,
) -> Result<LineMinimum> {
    if !(tol > 0.0) {
        return Err(Error::argument(format!(
            "line tolerance {tol} must be positive"
        )));
    }
    if !(direction_scale.is_finite() && direction_scale != 0.0) {
        return Err(Error::argument(format!(
            "initial step {direction_scale} must be finite and non-zero"
        )));
    }
    let mut f = CountingLine {
        f: objective,
        evaluations: 0,
    };
    let origin_value = match origin_value {
        Some(v) => v,
        None => f.eval(origin)?,
    };
    let bracket = bracket(&mut f, origin, origin_value, origin + direction_scale)?;
    let (t, value) = brent(&mut f, bracket, tol)?;
    Ok(LineMinimum {
        t,
        value,
        evaluations: f.evaluations,
    })
}

/// `(a, b, c)` with `b` between `a` and `c`, and `f(b)` no larger than either end.
#[derive(Clone, Copy, Debug)]
struct Bracket {
    a: f64,
    b: f64,
    c: f64,
    fb: f64,
}

fn bracket(f: &mut CountingLine<'_>, a0: f64, fa0: f64, b0: f64) -> Result<Bracket> {
    let (mut a, mut fa) = (a0, fa0);
    let (mut b, mut fb) = (b0, f.eval(b0)?);
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + GOLDEN_RATIO * (b - a);
    let mut fc = f.eval(c)?;
    let mut steps = 0;
    while fb > fc {
        steps += 1;
        if steps > MAX_BRACKET_STEPS {
            return Err(Error::Numeric {
                at: c,
                detail: "could not bracket a minimum; objective looks unbounded below".into(),
            });
        }
        let r = (b - a) * (fb - fc);
        let q = (b - c) * (fb - fa);
        let denom = 2.0 * (q - r).abs().max(TINY).copysign(q - r);
        let mut u = b - ((b - c) * q - (b - a) * r) / denom;
        let u_limit = b + PARABOLIC_LIMIT * (c - b);
        let mut fu;
        if (b - u) * (u - c) > 0.0 {
            // parabolic minimum between b and c
            fu = f.eval(u)?;
            if fu < fc {
                return Ok(Bracket {
                    a: b,
                    b: u,
                    c,
                    fb: fu,
                });
            } else if fu > fb {
                return Ok(Bracket { a, b, c: u, fb });
            }
            u = c + GOLDEN_RATIO * (c - b);
            fu = f.eval(u)?;
        } else if (c - u) * (u - u_limit) > 0.0 {
            // parabolic step beyond c but within the limit
            fu = f.eval(u)?;
            if fu < fc {
                b = c;
                c = u;
                u = c + GOLDEN_RATIO * (c - b);
                fb = fc;
                fc = fu;
                fu = f.eval(u)?;
            }
        } else if (u - u_limit) * (u_limit - c) >= 0.0 {
            u = u_limit;
            fu = f.eval(u)?;
        } else {
            u = c + GOLDEN_RATIO * (c - b);
            fu = f.eval(u)?;
        }
        a = b;
        b = c;
        c = u;
        fa = fb;
        fb = fc;
        fc = fu;
    }
    Ok(Bracket { a, b, c, fb })
}

fn brent(f: &mut CountingLine<'_>, bracket: Bracket, tol: f64) -> Result<(f64, f64)> {
    let mut a = bracket.a.min(bracket.c);
    let mut b = bracket.a.max(bracket.c);
    let (mut x, mut w, mut v) = (bracket.b, bracket.b, bracket.b);
    let (mut fx, mut fw, mut fv) = (bracket.fb, bracket.fb, bracket.fb);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..MAX_BRENT_ITERATIONS {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + ABS_EPS;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_old = e;
            e = d;
            if p.abs() < (0.5 * q * e_old).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN_SECTION * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f.eval(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Ok((x, fx))
}

/// The single non-zero component of `direction`, if it is axis-aligned.
fn axis_of(direction: &[f64]) -> Option<(usize, f64)> {
    let mut found = None;
    for (i, &v) in direction.iter().enumerate() {
        if v != 0.0 {
            if found.is_some() {
                return None;
            }
            found = Some((i, v));
        }
    }
    found
}

struct Minimizer<'o> {
    objective: &'o mut dyn Objective,
    line_tolerance: f64,
    evaluations: usize,
    axis_restrictions: usize,
}

impl Minimizer<'_> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = self.objective.value(x);
        if !v.is_finite() {
            return Err(Error::Numeric {
                at: 0.0,
                detail: format!("objective returned {v}"),
            });
        }
        Ok(v)
    }

    /// Minimizes along `direction` from `x` (whose cost is `fx`), moving `x` to the minimum.
    fn line_search(&mut self, x: &mut [f64], fx: f64, direction: &[f64]) -> Result<(f64, f64)> {
        let restricted = match axis_of(direction) {
            Some((axis, scale)) => self.objective.axis_line(x, axis).map(|line| (line, scale)),
            None => None,
        };
        let found = match restricted {
            Some((line, scale)) => {
                self.evaluations += 1;
                self.axis_restrictions += 1;
                let along = |t: f64| line.value(scale * t);
                line_minimize(&along, 0.0, Some(fx), 1.0, self.line_tolerance)?
            }
            None => {
                let found = self.probe_line(x, fx, direction)?;
                self.evaluations += found.evaluations;
                found
            }
        };
        for (xi, di) in x.iter_mut().zip(direction) {
            *xi += found.t * di;
        }
        Ok((found.t, found.value))
    }

    fn probe_line(&mut self, x: &[f64], fx: f64, direction: &[f64]) -> Result<LineMinimum> {
        let objective = RefCell::new(&mut *self.objective);
        let point = RefCell::new(x.to_vec());
        let along = |t: f64| {
            let mut p = point.borrow_mut();
            for ((pi, xi), di) in p.iter_mut().zip(x).zip(direction) {
                *pi = xi + t * di;
            }
            objective.borrow_mut().value(&p)
        };
        line_minimize(&along, 0.0, Some(fx), 1.0, self.line_tolerance)
    }
}

/// Minimizes `objective` from `x0` with Powell's direction-set method.
///
/// Each outer iteration line-minimizes along every direction in turn, then tries the net
/// displacement: if the extrapolation test accepts it, the cost is line-minimized along it
/// and it replaces the direction that gave the largest single decrease. Directions are reset
/// to the coordinate basis every N iterations.
pub fn powell_minimize(
    objective: &mut dyn Objective,
    x0: &[f64],
    options: &PowellOptions,
) -> Result<PowellResult> {
    options.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(Error::argument("cannot minimize over zero parameters"));
    }
    let mut m = Minimizer {
        objective,
        line_tolerance: options.line_tolerance,
        evaluations: 0,
        axis_restrictions: 0,
    };
    let mut x = x0.to_vec();
    let mut fx = m.eval(&x)?;
    let mut history = vec![fx];
    let mut directions = identity(n);
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < options.max_iterations {
        if iterations > 0 && iterations % n == 0 {
            directions = identity(n);
        }
        iterations += 1;
        let x_start = x.clone();
        let f_start = fx;
        let mut largest_drop = 0.0;
        let mut largest_index = 0;
        for (i, direction) in directions.iter().enumerate() {
            if m.evaluations >= options.max_cost_evaluations {
                history.push(fx);
                break 'outer;
            }
            let f_before = fx;
            let (_, f_new) = m.line_search(&mut x, fx, direction)?;
            fx = f_new.min(fx);
            if f_before - fx > largest_drop {
                largest_drop = f_before - fx;
                largest_index = i;
            }
        }

        if 2.0 * (f_start - fx) <= options.cost_tolerance * (f_start.abs() + fx.abs()) + TINY {
            history.push(fx);
            converged = true;
            break;
        }

        let displacement: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        let extrapolated: Vec<f64> = x.iter().zip(&displacement).map(|(a, d)| a + d).collect();
        let f_extrapolated = m.eval(&extrapolated)?;
        if f_extrapolated < f_start {
            let t =
                2.0 * (f_start - 2.0 * fx + f_extrapolated) * (f_start - fx - largest_drop).powi(2)
                    - largest_drop * (f_start - f_extrapolated).powi(2);
            if t < 0.0 {
                let (_, f_new) = m.line_search(&mut x, fx, &displacement)?;
                fx = f_new.min(fx);
                directions[largest_index] = displacement;
            }
        }
        history.push(fx);
        if m.evaluations >= options.max_cost_evaluations {
            break;
        }
    }

    Ok(PowellResult {
        best_params: x,
        best_cost: fx,
        iterations,
        cost_evaluations: m.evaluations,
        axis_restrictions: m.axis_restrictions,
        history,
        converged,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect()
}
