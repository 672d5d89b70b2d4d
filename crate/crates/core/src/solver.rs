//! Damped Newton inversion of the state equation: given a target point and a
//! noise realization, find the pre-image `x` with `transition(x, w, k) = target`.

use serde::{Deserialize, Serialize};

use crate::model::{transition_jacobian_with_step, StateSpaceModel, StateVector, FD_STEP};

/// Most step halvings tried per Newton iteration.
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Max-norm tolerance on `transition(x, w) - target`.
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Initial step factor in `(0, 1]`.
    pub damping: f64,
    /// Relative finite-difference step, used when the model has no analytic Jacobian.
    pub fd_step: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { residual_tol: 1e-10, max_iters: 50, damping: 1.0, fd_step: FD_STEP }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.residual_tol > 0.0) {
            return Err("solve.residual_tol must be > 0".into());
        }
        if self.max_iters < 1 {
            return Err("solve.max_iters must be >= 1".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err("solve.damping must lie in (0, 1]".into());
        }
        if !(self.fd_step > 0.0) {
            return Err("solve.fd_step must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub root: StateVector,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Reusable buffers for repeated solves of one dimension.
#[derive(Debug, Clone)]
pub struct SolverWorkspace {
    d: usize,
    x: Vec<f64>,
    trial: Vec<f64>,
    f: Vec<f64>,
    residual: Vec<f64>,
    step: Vec<f64>,
    jac: Vec<f64>,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl SolverWorkspace {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            x: vec![0.0; d],
            trial: vec![0.0; d],
            f: vec![0.0; d],
            residual: vec![0.0; d],
            step: vec![0.0; d],
            jac: vec![0.0; d * d],
            lu: vec![0.0; d * d],
            perm: vec![0; d],
        }
    }

    /// Current iterate; holds the root after [`solve_in_place`] returns.
    pub fn root(&self) -> &[f64] {
        &self.x
    }
}

/// Outcome of a solve performed inside a [`SolverWorkspace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStatus {
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, a| if a.is_nan() { f64::NAN } else { m.max(a.abs()) })
}

/// Solves `transition(x, w, k) = target` for `x`, starting from `guess`.
///
/// Non-convergence is reported through `converged = false`, never as an error.
pub fn implicit_solve<M: StateSpaceModel + ?Sized>(
    model: &M,
    target: &[f64],
    w: &[f64],
    k: usize,
    guess: &[f64],
    cfg: &SolveConfig,
) -> SolveResult {
    let mut ws = SolverWorkspace::new(model.state_dim());
    let st = solve_in_place(model, target, w, k, guess, cfg, &mut ws, None);
    SolveResult {
        root: StateVector(ws.x.clone()),
        residual_norm: st.residual_norm,
        iterations: st.iterations,
        converged: st.converged,
    }
}

/// Allocation-free solve. When `trace` is given, the residual norm of every
/// accepted iterate (starting with the guess) is pushed onto it.
#[allow(clippy::too_many_arguments)]
pub fn solve_in_place<M: StateSpaceModel + ?Sized>(
    model: &M,
    target: &[f64],
    w: &[f64],
    k: usize,
    guess: &[f64],
    cfg: &SolveConfig,
    ws: &mut SolverWorkspace,
    mut trace: Option<&mut Vec<f64>>,
) -> SolveStatus {
    let d = ws.d;
    ws.x.copy_from_slice(guess);
    if !model.domain_guard(&ws.x) {
        return SolveStatus { residual_norm: f64::INFINITY, iterations: 0, converged: false };
    }
    model.transition(&ws.x, w, k, &mut ws.f);
    for i in 0..d {
        ws.residual[i] = ws.f[i] - target[i];
    }
    let mut rn = max_norm(&ws.residual);
    if let Some(t) = trace.as_deref_mut() {
        t.push(rn);
    }
    let mut iters = 0;
    while !(rn <= cfg.residual_tol) && iters < cfg.max_iters && rn.is_finite() {
        iters += 1;
        transition_jacobian_with_step(model, &ws.x, w, k, &mut ws.jac, cfg.fd_step);
        for i in 0..d {
            ws.step[i] = -ws.residual[i];
        }
        ws.lu.copy_from_slice(&ws.jac);
        if !lu_solve(&mut ws.lu, d, &mut ws.perm, &mut ws.step) {
            // Nearly singular: nudge the diagonal and retry once.
            for i in 0..d {
                let a = ws.jac[i * d + i];
                ws.jac[i * d + i] = a + 1e-10 * (1.0 + a.abs());
                ws.step[i] = -ws.residual[i];
            }
            ws.lu.copy_from_slice(&ws.jac);
            if !lu_solve(&mut ws.lu, d, &mut ws.perm, &mut ws.step) {
                break;
            }
        }

        let mut t = cfg.damping;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            for i in 0..d {
                ws.trial[i] = ws.x[i] + t * ws.step[i];
            }
            if model.domain_guard(&ws.trial) {
                model.transition(&ws.trial, w, k, &mut ws.f);
                let mut trial_norm = 0.0_f64;
                for i in 0..d {
                    trial_norm = trial_norm.max((ws.f[i] - target[i]).abs());
                }
                if trial_norm < rn {
                    std::mem::swap(&mut ws.x, &mut ws.trial);
                    for i in 0..d {
                        ws.residual[i] = ws.f[i] - target[i];
                    }
                    rn = trial_norm;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(rn);
        }
    }
    SolveStatus { residual_norm: rn, iterations: iters, converged: rn <= cfg.residual_tol }
}

/// In-place LU with partial pivoting; solves `a x = b`, overwriting `b`.
/// Returns `false` when a pivot is numerically zero.
fn lu_solve(a: &mut [f64], n: usize, perm: &mut [usize], b: &mut [f64]) -> bool {
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !scale.is_finite() || scale == 0.0 {
        return false;
    }
    let tiny = scale * 1e-14;
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() <= tiny {
            return false;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
            perm.swap(col, piv);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f != 0.0 {
                a[r * n + col] = f;
                for c in col + 1..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r * n + c] * b[c];
        }
        b[r] = s / a[r * n + r];
    }
    true
}
