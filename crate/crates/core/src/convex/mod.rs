//! Log-barrier interior-point solver for small smooth convex programs.
//!
//! Maximizes a concave objective subject to `g_i(x) <= 0` with convex `g_i`.
//! Each function is a sum of [`Term`]s that touch a few variables, so the
//! Newton system is assembled sparsely: terms and constraints with a narrow
//! support land in a band matrix, constraints spanning many variables are
//! added as rank-one corrections through the Woodbury identity.

pub mod linalg;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use linalg::{Band, Dense};

/// A smooth function of a handful of variables.
pub trait Term {
    fn vars(&self) -> &[usize];

    /// Evaluates at the local values `x` (ordered as [`Term::vars`]). When
    /// requested, writes the gradient and the row-major Hessian.
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>, hess: Option<&mut [f64]>) -> f64;

    /// Affine terms contribute no curvature.
    fn is_affine(&self) -> bool {
        false
    }
}

/// `sum c_k x_k`.
pub struct Linear {
    vars: Vec<usize>,
    coefs: Vec<f64>,
}

impl Linear {
    pub fn new(vars: Vec<usize>, coefs: Vec<f64>) -> Self {
        assert_eq!(vars.len(), coefs.len());
        Self { vars, coefs }
    }
}

impl Term for Linear {
    fn vars(&self) -> &[usize] {
        &self.vars
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>, hess: Option<&mut [f64]>) -> f64 {
        if let Some(g) = grad {
            g.copy_from_slice(&self.coefs);
        }
        if let Some(h) = hess {
            h.fill(0.0);
        }
        x.iter().zip(&self.coefs).map(|(a, b)| a * b).sum()
    }

    fn is_affine(&self) -> bool {
        true
    }
}

/// `0.5 x^T Q x + c^T x` with a dense symmetric `Q`.
pub struct Quadratic {
    vars: Vec<usize>,
    q: Vec<f64>,
    c: Vec<f64>,
}

impl Quadratic {
    pub fn new(vars: Vec<usize>, q: Vec<f64>, c: Vec<f64>) -> Self {
        let k = vars.len();
        assert_eq!(q.len(), k * k);
        assert_eq!(c.len(), k);
        Self { vars, q, c }
    }
}

impl Term for Quadratic {
    fn vars(&self) -> &[usize] {
        &self.vars
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>, hess: Option<&mut [f64]>) -> f64 {
        let k = self.vars.len();
        let mut v = 0.0;
        let mut g = [0.0; 16];
        assert!(k <= 16, "quadratic term too wide");
        for i in 0..k {
            let qi: f64 = (0..k).map(|j| self.q[i * k + j] * x[j]).sum();
            g[i] = qi + self.c[i];
            v += x[i] * (0.5 * qi + self.c[i]);
        }
        if let Some(out) = grad {
            out.copy_from_slice(&g[..k]);
        }
        if let Some(h) = hess {
            h.copy_from_slice(&self.q);
        }
        v
    }
}

/// A term given by a closure with the same contract as [`Term::eval`].
pub struct FnTerm<F> {
    vars: Vec<usize>,
    f: F,
}

impl<F> FnTerm<F>
where
    F: Fn(&[f64], Option<&mut [f64]>, Option<&mut [f64]>) -> f64,
{
    pub fn new(vars: Vec<usize>, f: F) -> Self {
        Self { vars, f }
    }
}

impl<F> Term for FnTerm<F>
where
    F: Fn(&[f64], Option<&mut [f64]>, Option<&mut [f64]>) -> f64,
{
    fn vars(&self) -> &[usize] {
        &self.vars
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>, hess: Option<&mut [f64]>) -> f64 {
        (self.f)(x, grad, hess)
    }
}

/// `offset + sum terms <= 0`.
#[derive(Default)]
pub struct Constraint {
    pub terms: Vec<Box<dyn Term>>,
    pub offset: f64,
}

impl Constraint {
    pub fn new(offset: f64) -> Self {
        Self { terms: Vec::new(), offset }
    }

    pub fn with(mut self, term: impl Term + 'static) -> Self {
        self.terms.push(Box::new(term));
        self
    }

    pub fn push(&mut self, term: impl Term + 'static) {
        self.terms.push(Box::new(term));
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.offset + self.terms.iter().map(|t| eval_plain(t.as_ref(), x, &mut buf)).sum::<f64>()
    }
}

fn eval_plain(t: &dyn Term, x: &[f64], buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(t.vars().iter().map(|&i| x[i]));
    t.eval(buf, None, None)
}

/// Maximize `sum objective` subject to every constraint, with some variables pinned.
#[derive(Default)]
pub struct ConvexProgram {
    pub dim: usize,
    pub objective: Vec<Box<dyn Term>>,
    pub constraints: Vec<Constraint>,
    pub fixings: Vec<(usize, f64)>,
}

impl ConvexProgram {
    pub fn new(dim: usize) -> Self {
        Self { dim, ..Self::default() }
    }

    pub fn add_objective(&mut self, term: impl Term + 'static) {
        self.objective.push(Box::new(term));
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn fix(&mut self, var: usize, value: f64) {
        self.fixings.push((var, value));
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.objective.iter().map(|t| eval_plain(t.as_ref(), x, &mut buf)).sum()
    }

    /// Largest constraint value at `x`; negative means strictly feasible.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.value(x)).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub mu_init: f64,
    pub mu_final: f64,
    pub mu_factor: f64,
    pub armijo: f64,
    pub shrink: f64,
    /// Centering stops once half the squared Newton decrement drops below this.
    pub newton_tol: f64,
    pub max_newton_per_stage: usize,
    pub max_newton_total: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mu_init: 1.0,
            mu_final: 1e-8,
            mu_factor: 10.0,
            armijo: 1e-4,
            shrink: 0.5,
            newton_tol: 1e-10,
            max_newton_per_stage: 80,
            max_newton_total: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `m * mu` at the last centered point.
    pub duality_gap: f64,
    /// Infinity norm of the Lagrangian gradient with barrier multipliers.
    pub kkt_residual: f64,
    pub newton_steps: usize,
    pub stages: usize,
    /// Objective after each barrier stage.
    pub stage_objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexError {
    Dimension { expected: usize, got: usize },
    InfeasibleStart { constraint: usize, value: f64 },
    MaxIterations { best: ConvexSolution },
}

impl fmt::Display for ConvexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexError::Dimension { expected, got } => write!(f, "start point has {got} entries, expected {expected}"),
            ConvexError::InfeasibleStart { constraint, value } => {
                write!(f, "start point violates constraint {constraint} (value {value:e})")
            }
            ConvexError::MaxIterations { best } => {
                write!(f, "Newton budget exhausted after {} steps (gap {:e})", best.newton_steps, best.duality_gap)
            }
        }
    }
}

impl core::error::Error for ConvexError {}

/// Constraints whose support spans more variables than this are treated as
/// low-rank corrections.
const NARROW_SPAN: usize = 48;
const DENSE_DIM: usize = 64;

struct Layout {
    free: Vec<bool>,
    /// Union of variables per constraint, sorted.
    cvars: Vec<Vec<usize>>,
    /// For each constraint and term, the positions of the term variables in `cvars`.
    cpos: Vec<Vec<Vec<usize>>>,
    narrow: Vec<bool>,
    dense: bool,
    bw: usize,
    max_arity: usize,
}

fn span(vars: &[usize], free: &[bool]) -> usize {
    let mut lo = usize::MAX;
    let mut hi = 0;
    for &v in vars {
        if free[v] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo == usize::MAX {
        0
    } else {
        hi - lo
    }
}

impl Layout {
    fn new(prog: &ConvexProgram) -> Self {
        let n = prog.dim;
        let mut free = vec![true; n];
        for &(i, _) in &prog.fixings {
            free[i] = false;
        }
        let mut bw = 0;
        let mut max_arity = 1;
        for t in &prog.objective {
            max_arity = max_arity.max(t.vars().len());
            if !t.is_affine() {
                bw = bw.max(span(t.vars(), &free));
            }
        }
        let mut cvars = Vec::with_capacity(prog.constraints.len());
        let mut cpos = Vec::with_capacity(prog.constraints.len());
        let mut narrow = Vec::with_capacity(prog.constraints.len());
        for c in &prog.constraints {
            let mut vars: Vec<usize> = c.terms.iter().flat_map(|t| t.vars().iter().copied()).collect();
            vars.sort_unstable();
            vars.dedup();
            let pos: Vec<Vec<usize>> = c
                .terms
                .iter()
                .map(|t| t.vars().iter().map(|v| vars.binary_search(v).unwrap()).collect())
                .collect();
            let s = span(&vars, &free);
            let is_narrow = s <= NARROW_SPAN;
            if is_narrow {
                bw = bw.max(s);
            } else {
                for t in &c.terms {
                    if !t.is_affine() {
                        bw = bw.max(span(t.vars(), &free));
                    }
                }
            }
            for t in &c.terms {
                max_arity = max_arity.max(t.vars().len());
            }
            cvars.push(vars);
            cpos.push(pos);
            narrow.push(is_narrow);
        }
        let dense = n <= DENSE_DIM || 4 * bw >= n;
        Self { free, cvars, cpos, narrow, dense, bw, max_arity }
    }
}

enum Hess {
    Dense(Dense),
    Band(Band),
}

impl Hess {
    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        match self {
            Hess::Dense(d) => d.add_lower(i, j, v),
            Hess::Band(b) => b.add_lower(i, j, v),
        }
    }

    fn diag_max(&self, n: usize) -> f64 {
        (0..n)
            .map(|i| match self {
                Hess::Dense(d) => d.get(i, i),
                Hess::Band(b) => b.get(i, i),
            })
            .fold(0.0, f64::max)
    }

    fn cholesky(&mut self) -> bool {
        match self {
            Hess::Dense(d) => d.cholesky(),
            Hess::Band(b) => b.cholesky(),
        }
    }

    fn solve(&self, b: &mut [f64]) {
        match self {
            Hess::Dense(d) => d.solve(b),
            Hess::Band(m) => m.solve(b),
        }
    }

    /// Symmetric product from the stored lower triangle.
    fn mul(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Hess::Dense(d) => {
                let n = v.len();
                let mut out = vec![0.0; n];
                for i in 0..n {
                    for j in 0..i {
                        let a = d.get(i, j);
                        out[i] += a * v[j];
                        out[j] += a * v[i];
                    }
                    out[i] += d.get(i, i) * v[i];
                }
                out
            }
            Hess::Band(b) => b.mul_sym(v),
        }
    }

    fn duplicate(&self) -> Hess {
        match self {
            Hess::Dense(d) => Hess::Dense(d.clone()),
            Hess::Band(b) => Hess::Band(b.clone()),
        }
    }
}

struct Scratch {
    xl: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    cg: Vec<f64>,
    ch: Vec<f64>,
}

struct Evaluation {
    /// Barrier gradient `-t grad f + sum grad g / (-g)`.
    grad: Vec<f64>,
    hess: Hess,
    /// Low-rank columns `grad g / (-g)` of the wide constraints.
    low_rank: Vec<Vec<f64>>,
}

struct Solver<'a> {
    prog: &'a ConvexProgram,
    lay: Layout,
    s: Scratch,
}

impl<'a> Solver<'a> {
    fn gather(&mut self, vars: &[usize], x: &[f64]) {
        self.s.xl.clear();
        self.s.xl.extend(vars.iter().map(|&i| x[i]));
    }

    /// Barrier value `-t f - sum ln(-g)`, or `None` outside the domain.
    ///
    /// Also returns a bound on the rounding error of that value, so the line
    /// search can tell a genuine increase from noise once `t` is large.
    fn barrier(&mut self, x: &[f64], t: f64) -> Option<(f64, f64)> {
        let prog = self.prog;
        let mut f = 0.0;
        let mut f_abs = 0.0;
        for term in &prog.objective {
            self.gather(term.vars(), x);
            let v = term.eval(&self.s.xl, None, None);
            f += v;
            f_abs += v.abs();
        }
        if !f.is_finite() {
            return None;
        }
        let mut phi = -t * f;
        let mut noise = t * f_abs;
        for c in &prog.constraints {
            let mut g = c.offset;
            let mut g_abs = c.offset.abs();
            for term in &c.terms {
                self.gather(term.vars(), x);
                let v = term.eval(&self.s.xl, None, None);
                g += v;
                g_abs += v.abs();
            }
            if !(g < 0.0) {
                return None;
            }
            let l = math::ln(-g);
            phi -= l;
            noise += l.abs() + g_abs / -g;
        }
        phi.is_finite().then_some((phi, 8.0 * f64::EPSILON * noise))
    }

    fn evaluate(&mut self, x: &[f64], t: f64) -> Option<Evaluation> {
        let prog = self.prog;
        let n = prog.dim;
        let lay = &self.lay;
        let mut hess = if lay.dense { Hess::Dense(Dense::zeros(n)) } else { Hess::Band(Band::zeros(n, lay.bw)) };
        let mut grad = vec![0.0; n];
        let mut fgrad = vec![0.0; n];
        let mut low_rank = Vec::new();
        let mut f = 0.0;
        let s = &mut self.s;

        for term in &prog.objective {
            let vars = term.vars();
            let k = vars.len();
            s.xl.clear();
            s.xl.extend(vars.iter().map(|&i| x[i]));
            let affine = term.is_affine();
            let v = term.eval(&s.xl, Some(&mut s.g[..k]), if affine { None } else { Some(&mut s.h[..k * k]) });
            f += v;
            for a in 0..k {
                fgrad[vars[a]] += s.g[a];
            }
            if !affine {
                for a in 0..k {
                    for b in 0..k {
                        if vars[a] >= vars[b] {
                            hess.add(vars[a], vars[b], -t * s.h[a * k + b]);
                        }
                    }
                }
            }
        }
        for i in 0..n {
            grad[i] = -t * fgrad[i];
        }

        for (ci, c) in prog.constraints.iter().enumerate() {
            let cvars = &lay.cvars[ci];
            let m = cvars.len();
            s.cg.clear();
            s.cg.resize(m, 0.0);
            s.ch.clear();
            let mut g = c.offset;
            for (ti, term) in c.terms.iter().enumerate() {
                let vars = term.vars();
                let k = vars.len();
                s.xl.clear();
                s.xl.extend(vars.iter().map(|&i| x[i]));
                let affine = term.is_affine();
                let start = s.ch.len();
                if !affine {
                    s.ch.resize(start + k * k, 0.0);
                }
                let h = if affine { None } else { Some(&mut s.ch[start..start + k * k]) };
                g += term.eval(&s.xl, Some(&mut s.g[..k]), h);
                for (a, &p) in lay.cpos[ci][ti].iter().enumerate() {
                    s.cg[p] += s.g[a];
                }
            }
            if !(g < 0.0) || !g.is_finite() {
                return None;
            }
            let inv = 1.0 / -g;
            // Term curvature, weighted by 1/(-g).
            let mut off = 0;
            for term in &c.terms {
                if term.is_affine() {
                    continue;
                }
                let vars = term.vars();
                let k = vars.len();
                for a in 0..k {
                    for b in 0..k {
                        if vars[a] >= vars[b] {
                            hess.add(vars[a], vars[b], inv * s.ch[off + a * k + b]);
                        }
                    }
                }
                off += k * k;
            }
            for (p, &i) in cvars.iter().enumerate() {
                grad[i] += inv * s.cg[p];
            }
            if lay.narrow[ci] || lay.dense {
                for a in 0..m {
                    let ua = inv * s.cg[a];
                    if ua == 0.0 {
                        continue;
                    }
                    for b in 0..=a {
                        hess.add(cvars[a], cvars[b], ua * inv * s.cg[b]);
                    }
                }
            } else {
                let mut u = vec![0.0; n];
                for (p, &i) in cvars.iter().enumerate() {
                    u[i] = inv * s.cg[p];
                }
                low_rank.push(u);
            }
        }
        if !f.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return None;
        }
        Some(Evaluation { grad, hess, low_rank })
    }

    /// Solves for the Newton step, pinning fixed variables.
    fn newton_step(&self, ev: &mut Evaluation) -> Option<Vec<f64>> {
        let n = self.prog.dim;
        let free = &self.lay.free;
        // Pin fixed variables: identity rows, zero right-hand side.
        let pin = |h: &mut Hess| {
            for i in 0..n {
                if !free[i] {
                    match h {
                        Hess::Dense(d) => {
                            for j in 0..n {
                                d.a[i * n + j] = 0.0;
                                d.a[j * n + i] = 0.0;
                            }
                            d.a[i * n + i] = 1.0;
                        }
                        Hess::Band(b) => {
                            let bw = b.bw;
                            for j in i.saturating_sub(bw)..n.min(i + bw + 1) {
                                let v = b.get(i, j);
                                b.add_lower(i.max(j), i.min(j), -v);
                            }
                            b.add_lower(i, i, 1.0);
                        }
                    }
                }
            }
        };
        pin(&mut ev.hess);
        for u in &mut ev.low_rank {
            for i in 0..n {
                if !free[i] {
                    u[i] = 0.0;
                }
            }
        }
        let rhs: Vec<f64> = ev.grad.iter().zip(free).map(|(g, &fr)| if fr { -g } else { 0.0 }).collect();

        let scale = ev.hess.diag_max(n).max(1e-300);
        let mut reg = 0.0;
        let factor = loop {
            let mut h = ev.hess.duplicate();
            if reg > 0.0 {
                for i in 0..n {
                    h.add(i, i, reg);
                }
            }
            if h.cholesky() {
                break h;
            }
            reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
            if reg > 1e6 * scale {
                return None;
            }
        };

        // Woodbury: (A + U U^T)^{-1} r = y - Z (I + U^T Z)^{-1} U^T y.
        let k = ev.low_rank.len();
        let mut z = ev.low_rank.clone();
        for col in &mut z {
            factor.solve(col);
        }
        let mut m = Dense::zeros(k);
        for a in 0..k {
            for b in 0..=a {
                let dot: f64 = ev.low_rank[a].iter().zip(&z[b]).map(|(p, q)| p * q).sum();
                m.add_lower(a, b, dot + if a == b { 1.0 } else { 0.0 });
            }
        }
        if k > 0 && !m.cholesky() {
            return None;
        }
        let apply = |r: &mut [f64]| {
            factor.solve(r);
            if k > 0 {
                let mut w: Vec<f64> = ev.low_rank.iter().map(|u| u.iter().zip(r.iter()).map(|(p, q)| p * q).sum()).collect();
                m.solve(&mut w);
                for (col, wb) in z.iter().zip(&w) {
                    for i in 0..n {
                        r[i] -= col[i] * wb;
                    }
                }
            }
        };
        // Residual of the full system, pinned rows excluded.
        let residual = |dx: &[f64]| -> Vec<f64> {
            let mut r = ev.hess.mul(dx);
            for u in &ev.low_rank {
                let ud: f64 = u.iter().zip(dx).map(|(p, q)| p * q).sum();
                for i in 0..n {
                    r[i] += u[i] * ud;
                }
            }
            for i in 0..n {
                r[i] = if free[i] { -ev.grad[i] - r[i] } else { 0.0 };
            }
            r
        };
        let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

        let mut dx = rhs;
        apply(&mut dx);
        // Near the boundary the low-rank update dwarfs the band part and the
        // Woodbury correction cancels badly; one round of iterative
        // refinement recovers the lost digits.
        // `m` holds its Cholesky factor here, so this is a 1e8 test on `m`.
        let stiff = (0..k).any(|a| m.get(a, a) > 1e4);
        if stiff {
            let mut res = residual(&dx);
            let before = norm(&res);
            apply(&mut res);
            let trial: Vec<f64> = dx.iter().zip(&res).map(|(a, b)| a + b).collect();
            if norm(&residual(&trial)) < before {
                dx = trial;
            }
        }
        let rhs = dx;
        rhs.iter().all(|v| v.is_finite()).then_some(rhs)
    }
}

/// Solves `prog` from the strictly feasible point `x0`.
pub fn solve_convex(prog: &ConvexProgram, x0: &[f64], opts: &SolverOptions) -> Result<ConvexSolution, ConvexError> {
    let n = prog.dim;
    if x0.len() != n {
        return Err(ConvexError::Dimension { expected: n, got: x0.len() });
    }
    let mut x = x0.to_vec();
    for &(i, v) in &prog.fixings {
        x[i] = v;
    }
    for (ci, c) in prog.constraints.iter().enumerate() {
        let g = c.value(&x);
        if !(g < 0.0) {
            return Err(ConvexError::InfeasibleStart { constraint: ci, value: g });
        }
    }
    let lay = Layout::new(prog);
    let a = lay.max_arity;
    let scratch = Scratch {
        xl: Vec::with_capacity(a),
        g: vec![0.0; a],
        h: vec![0.0; a * a],
        cg: Vec::new(),
        ch: Vec::new(),
    };
    let mut solver = Solver { prog, lay, s: scratch };
    let m = prog.constraints.len() as f64;

    let mut mu = opts.mu_init;
    let mut steps = 0;
    let mut stages = 0;
    let mut stage_objectives = Vec::new();
    let mut kkt = f64::INFINITY;
    let mut budget_hit = false;

    loop {
        let t = 1.0 / mu;
        for _ in 0..opts.max_newton_per_stage {
            if steps >= opts.max_newton_total {
                budget_hit = true;
                break;
            }
            let Some(mut ev) = solver.evaluate(&x, t) else { break };
            kkt = ev
                .grad
                .iter()
                .zip(&solver.lay.free)
                .filter(|(_, &fr)| fr)
                .map(|(g, _)| (g / t).abs())
                .fold(0.0, f64::max);
            let Some(dx) = solver.newton_step(&mut ev) else { break };
            let slope: f64 = ev.grad.iter().zip(&dx).map(|(g, d)| g * d).sum();
            if -slope / 2.0 <= opts.newton_tol || slope >= 0.0 {
                break;
            }
            steps += 1;
            let (phi0, noise0) = solver.barrier(&x, t).unwrap_or((f64::INFINITY, 0.0));
            let mut s = 1.0;
            let mut accepted = false;
            let mut trial = x.clone();
            for _ in 0..80 {
                for i in 0..n {
                    trial[i] = x[i] + s * dx[i];
                }
                if let Some((phi, noise)) = solver.barrier(&trial, t) {
                    if phi <= phi0 + opts.armijo * s * slope + noise0 + noise {
                        accepted = true;
                        break;
                    }
                }
                s *= opts.shrink;
            }
            if !accepted {
                break;
            }
            core::mem::swap(&mut x, &mut trial);
        }
        stages += 1;
        stage_objectives.push(prog.objective_value(&x));
        if budget_hit || mu <= opts.mu_final * (1.0 + 1e-12) {
            break;
        }
        mu /= opts.mu_factor;
    }

    let sol = ConvexSolution {
        objective: prog.objective_value(&x),
        x,
        duality_gap: m * mu,
        kkt_residual: kkt,
        newton_steps: steps,
        stages,
        stage_objectives,
    };
    if budget_hit {
        Err(ConvexError::MaxIterations { best: sol })
    } else {
        Ok(sol)
    }
}
