//! Small dense semidefinite programs.
//!
//! Problems are posed over symmetric positive semidefinite blocks and
//! nonnegative scalars:
//!
//! ```text
//! minimize    Σ_b ⟨C_b, X_b⟩ + Σ_s c_s x_s
//! subject to  Σ_b ⟨A_ib, X_b⟩ + Σ_s a_is x_s  (= | ≤ | ≥)  b_i
//!             X_b ⪰ 0,  x_s ≥ 0
//! ```
//!
//! The solver is an infeasible-start primal-dual path-following method using
//! the HKM search direction with Mehrotra's predictor-corrector. Scalars and
//! inequality slacks live in one extra diagonal block, which the iteration
//! keeps diagonal.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

/// One linear term.
#[derive(Debug, Clone, PartialEq)]
pub enum Term<T: Scalar> {
    /// `⟨A, X_b⟩` with symmetric `A`.
    Block(usize, DMatrix<T>),
    /// `a · x_s`.
    Scalar(usize, T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T: Scalar> {
    pub terms: Vec<Term<T>>,
    pub sense: Sense,
    pub rhs: T,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem<T: Scalar> {
    pub block_sizes: Vec<usize>,
    pub num_scalars: usize,
    /// Minimized.
    pub objective: Vec<Term<T>>,
    pub constraints: Vec<Constraint<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Ratio below which a dual (primal) improving ray certifies primal (dual)
    /// infeasibility.
    pub infeasibility_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-7,
            max_iterations: 200,
            infeasibility_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SdpStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    Stalled,
}

/// Farkas ray `y` with `bᵀy = 1` and `−Σ y_i A_i ⪰ 0` (approximately).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub ray: Vec<f64>,
    /// `‖Σ y_i A_i + Z‖ / bᵀy` at the last iterate.
    pub residual: f64,
    /// Constraint labels sorted by decreasing ray weight.
    pub dominant: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution<T: Scalar> {
    pub status: SdpStatus,
    pub blocks: Vec<DMatrix<T>>,
    pub scalars: Vec<T>,
    /// Dual multipliers, one per constraint.
    pub dual: Vec<T>,
    /// Dual slack blocks `Z_b`.
    pub dual_blocks: Vec<DMatrix<T>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    /// `Σ ⟨X, Z⟩` at exit.
    pub complementarity: f64,
    pub iterations: usize,
    pub certificate: Option<Certificate>,
}

impl<T: Scalar> SdpProblem<T> {
    pub fn new(block_sizes: Vec<usize>, num_scalars: usize) -> Self {
        SdpProblem {
            block_sizes,
            num_scalars,
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_constraint(&mut self, terms: Vec<Term<T>>, sense: Sense, rhs: T, label: impl Into<String>) {
        self.constraints.push(Constraint {
            terms,
            sense,
            rhs,
            label: label.into(),
        });
    }

    pub fn count_sense(&self, sense: Sense) -> usize {
        self.constraints.iter().filter(|c| c.sense == sense).count()
    }

    fn validate(&self) -> Result<()> {
        let check = |t: &Term<T>, what: &str| -> Result<()> {
            match t {
                Term::Block(b, a) => {
                    let n = *self.block_sizes.get(*b).ok_or_else(|| {
                        Error::Dimension(format!("{what}: block {b} does not exist"))
                    })?;
                    if a.shape() != (n, n) {
                        return Err(Error::Dimension(format!(
                            "{what}: block {b} expects {n}x{n}, got {:?}",
                            a.shape()
                        )));
                    }
                    let asym = (a - a.transpose()).amax();
                    if asym > lit::<T>(1e-9) * (T::one() + a.amax()) {
                        return Err(Error::Invariant(format!("{what}: coefficient not symmetric")));
                    }
                }
                Term::Scalar(s, _) => {
                    if *s >= self.num_scalars {
                        return Err(Error::Dimension(format!("{what}: scalar {s} does not exist")));
                    }
                }
            }
            Ok(())
        };
        for t in &self.objective {
            check(t, "objective")?;
        }
        for c in &self.constraints {
            for t in &c.terms {
                check(t, &c.label)?;
            }
        }
        Ok(())
    }

    /// Evaluates the left-hand sides at a primal point.
    pub fn evaluate(&self, blocks: &[DMatrix<T>], scalars: &[T]) -> Vec<T> {
        self.constraints
            .iter()
            .map(|c| eval_terms(&c.terms, blocks, scalars))
            .collect()
    }

    pub fn objective_value(&self, blocks: &[DMatrix<T>], scalars: &[T]) -> T {
        eval_terms(&self.objective, blocks, scalars)
    }

    pub fn solve(&self) -> Result<SdpSolution<T>> {
        self.solve_with(&SolverOptions::default())
    }

    pub fn solve_with(&self, opts: &SolverOptions) -> Result<SdpSolution<T>> {
        self.validate()?;
        let std = StandardForm::build(self)?;
        let raw = std.solve(opts)?;
        Ok(std.unpack(self, raw))
    }
}

fn eval_terms<T: Scalar>(terms: &[Term<T>], blocks: &[DMatrix<T>], scalars: &[T]) -> T {
    terms.iter().fold(T::zero(), |acc, t| match t {
        Term::Block(b, a) => acc + a.dot(&blocks[*b]),
        Term::Scalar(s, a) => acc + *a * scalars[*s],
    })
}

/// Equality form over `K = ⊕ S^{n_b}_+`, the last block holding scalars and
/// slacks on its diagonal.
struct StandardForm<T: Scalar> {
    sizes: Vec<usize>,
    /// `a[i]`: sparse list of `(block, coefficient)`.
    a: Vec<Vec<(usize, DMatrix<T>)>>,
    b: DVector<T>,
    c: Vec<DMatrix<T>>,
    row_scale: Vec<T>,
    b_scale: T,
    c_scale: T,
    lp_block: Option<usize>,
    labels: Vec<String>,
}

struct RawIterate<T: Scalar> {
    status: SdpStatus,
    x: Vec<DMatrix<T>>,
    y: DVector<T>,
    z: Vec<DMatrix<T>>,
    pobj: f64,
    dobj: f64,
    relgap: f64,
    pinf: f64,
    dinf: f64,
    compl: f64,
    iterations: usize,
    certificate: Option<Certificate>,
}

fn unit_diag<T: Scalar>(n: usize, k: usize, v: T) -> DMatrix<T> {
    let mut m = DMatrix::zeros(n, n);
    m[(k, k)] = v;
    m
}

fn sym_min_eig<T: Scalar>(m: &DMatrix<T>) -> T {
    let e = SymmetricEigen::new(m.clone());
    e.eigenvalues.iter().copied().fold(lit(f64::INFINITY), |a, b| a.min(b))
}

/// Largest step `α` with `X + αΔX ⪰ 0` (infinity when unconstrained).
fn max_step<T: Scalar>(x: &DMatrix<T>, dx: &DMatrix<T>) -> Option<f64> {
    let l = Cholesky::new(x.clone())?.unpack();
    let tmp = l.solve_lower_triangular(dx)?;
    let s = l.solve_lower_triangular(&tmp.transpose())?;
    let s = (&s + s.transpose()).scale(lit(0.5));
    let lmin = to_f64(sym_min_eig(&s));
    Some(if lmin < 0.0 { -1.0 / lmin } else { f64::INFINITY })
}

fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()).scale(lit(0.5))
}

impl<T: Scalar> StandardForm<T> {
    fn build(p: &SdpProblem<T>) -> Result<Self> {
        let nineq = p.constraints.iter().filter(|c| c.sense != Sense::Eq).count();
        let nlp = p.num_scalars + nineq;
        let mut sizes = p.block_sizes.clone();
        let lp_block = if nlp > 0 {
            sizes.push(nlp);
            Some(sizes.len() - 1)
        } else {
            None
        };
        let lift = |terms: &[Term<T>]| -> Vec<(usize, DMatrix<T>)> {
            let mut out: Vec<(usize, DMatrix<T>)> = Vec::new();
            let mut add = |blk: usize, m: DMatrix<T>| {
                if let Some(e) = out.iter_mut().find(|(b, _)| *b == blk) {
                    e.1 += m;
                } else {
                    out.push((blk, m));
                }
            };
            for t in terms {
                match t {
                    Term::Block(b, a) => add(*b, symmetrize(a)),
                    Term::Scalar(s, v) => add(lp_block.unwrap(), unit_diag(nlp, *s, *v)),
                }
            }
            out
        };

        let m = p.constraints.len();
        let mut a = Vec::with_capacity(m);
        let mut b = DVector::zeros(m);
        let mut row_scale = Vec::with_capacity(m);
        let mut next_slack = p.num_scalars;
        for (i, con) in p.constraints.iter().enumerate() {
            let mut terms = lift(&con.terms);
            match con.sense {
                Sense::Eq => {}
                Sense::Le | Sense::Ge => {
                    let sign = if con.sense == Sense::Le { T::one() } else { -T::one() };
                    let k = next_slack;
                    next_slack += 1;
                    let blk = lp_block.unwrap();
                    let d = unit_diag(nlp, k, sign);
                    if let Some(e) = terms.iter_mut().find(|(bb, _)| *bb == blk) {
                        e.1 += d;
                    } else {
                        terms.push((blk, d));
                    }
                }
            }
            let norm = terms
                .iter()
                .fold(T::zero(), |acc, (_, mm)| acc + mm.norm_squared())
                .sqrt();
            if norm == T::zero() {
                return Err(Error::Invariant(format!(
                    "constraint '{}' has no coefficients",
                    con.label
                )));
            }
            for (_, mm) in terms.iter_mut() {
                *mm /= norm;
            }
            b[i] = con.rhs / norm;
            row_scale.push(norm);
            a.push(terms);
        }

        let mut c: Vec<DMatrix<T>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (blk, mm) in lift(&p.objective) {
            c[blk] += mm;
        }

        let b_scale = T::one().max(b.norm());
        let c_norm = c.iter().fold(T::zero(), |acc, mm| acc + mm.norm_squared()).sqrt();
        let c_scale = T::one().max(c_norm);
        b /= b_scale;
        for mm in c.iter_mut() {
            *mm /= c_scale;
        }
        Ok(StandardForm {
            sizes,
            a,
            b,
            c,
            row_scale,
            b_scale,
            c_scale,
            lp_block,
            labels: p.constraints.iter().map(|c| c.label.clone()).collect(),
        })
    }

    fn op_a(&self, x: &[DMatrix<T>]) -> DVector<T> {
        DVector::from_iterator(
            self.a.len(),
            self.a
                .iter()
                .map(|row| row.iter().fold(T::zero(), |acc, (blk, m)| acc + m.dot(&x[*blk]))),
        )
    }

    fn op_at(&self, y: &DVector<T>) -> Vec<DMatrix<T>> {
        let mut out: Vec<DMatrix<T>> = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (i, row) in self.a.iter().enumerate() {
            for (blk, m) in row {
                out[*blk] += m.scale(y[i]);
            }
        }
        out
    }

    fn initial_point(&self) -> (Vec<DMatrix<T>>, Vec<DMatrix<T>>) {
        let mut xs = Vec::with_capacity(self.sizes.len());
        let mut zs = Vec::with_capacity(self.sizes.len());
        for (blk, &n) in self.sizes.iter().enumerate() {
            let nf = n as f64;
            let mut xi: f64 = 10f64.max(nf.sqrt());
            let mut eta: f64 = 10f64.max(nf.sqrt()).max(to_f64(self.c[blk].norm()));
            for (i, row) in self.a.iter().enumerate() {
                if let Some((_, m)) = row.iter().find(|(bb, _)| *bb == blk) {
                    let an = to_f64(m.norm());
                    xi = xi.max(nf * (1.0 + to_f64(self.b[i]).abs()) / (1.0 + an));
                    eta = eta.max(an);
                }
            }
            xs.push(DMatrix::identity(n, n).scale(lit(xi)));
            zs.push(DMatrix::identity(n, n).scale(lit(eta)));
        }
        (xs, zs)
    }

    fn solve(&self, opts: &SolverOptions) -> Result<RawIterate<T>> {
        let m = self.a.len();
        let nblk = self.sizes.len();
        let ntot: usize = self.sizes.iter().sum();
        let (mut x, mut z) = self.initial_point();
        let mut y = DVector::<T>::zeros(m);
        let b_norm = to_f64(self.b.norm());
        let c_norm = self.c.iter().fold(0.0, |a, mm| a + to_f64(mm.norm_squared())).sqrt();
        let mut stall = 0usize;

        let mut iter = 0usize;
        loop {
            // Residuals and stopping tests.
            let ax = self.op_a(&x);
            let rp = &self.b - &ax;
            let aty = self.op_at(&y);
            let rd: Vec<DMatrix<T>> = (0..nblk).map(|k| &self.c[k] - &z[k] - &aty[k]).collect();
            let pobj: f64 = (0..nblk).map(|k| to_f64(self.c[k].dot(&x[k]))).sum();
            let dobj = to_f64(self.b.dot(&y));
            let compl: f64 = (0..nblk).map(|k| to_f64(x[k].dot(&z[k]))).sum();
            let relgap = (compl.max((pobj - dobj).abs())) / (1.0 + pobj.abs() + dobj.abs());
            let pinf = to_f64(rp.norm()) / (1.0 + b_norm);
            let dinf = rd.iter().fold(0.0, |a, mm| a + to_f64(mm.norm_squared())).sqrt() / (1.0 + c_norm);
            log::trace!("sdp it {iter}: pobj {pobj:.6e} dobj {dobj:.6e} gap {relgap:.2e} pinf {pinf:.2e} dinf {dinf:.2e}");

            macro_rules! done {
                ($status:expr, $cert:expr) => {
                    return Ok(RawIterate {
                        status: $status,
                        x,
                        y,
                        z,
                        pobj,
                        dobj,
                        relgap,
                        pinf,
                        dinf,
                        compl,
                        iterations: iter,
                        certificate: $cert,
                    })
                };
            }

            if relgap < opts.tolerance && pinf < opts.tolerance && dinf < opts.tolerance {
                done!(SdpStatus::Optimal, None);
            }
            if dobj > 0.0 {
                let ray = (0..nblk)
                    .fold(0.0, |a, k| a + to_f64((&aty[k] + &z[k]).norm_squared()))
                    .sqrt();
                if ray / dobj < opts.infeasibility_tolerance {
                    let cert = self.certificate(&y, dobj, ray / dobj);
                    done!(SdpStatus::PrimalInfeasible, Some(cert));
                }
            }
            if pobj < 0.0 && to_f64(ax.norm()) / (-pobj) < opts.infeasibility_tolerance {
                done!(SdpStatus::DualInfeasible, None);
            }
            if iter >= opts.max_iterations {
                done!(SdpStatus::MaxIterations, None);
            }
            if stall >= 5 {
                done!(SdpStatus::Stalled, None);
            }
            iter += 1;

            let mu = compl / ntot as f64;
            let zinv: Vec<DMatrix<T>> = match z
                .iter()
                .map(|zk| Cholesky::new(zk.clone()).map(|ch| ch.inverse()))
                .collect::<Option<Vec<_>>>()
            {
                Some(v) => v,
                None => done!(SdpStatus::Stalled, None),
            };

            // Schur complement M_ij = ⟨A_i, X A_j Z^{-1}⟩.
            let mut schur = DMatrix::<T>::zeros(m, m);
            let mut by_block: Vec<Vec<(usize, &DMatrix<T>)>> = vec![Vec::new(); nblk];
            for (i, row) in self.a.iter().enumerate() {
                for (blk, mm) in row {
                    by_block[*blk].push((i, mm));
                }
            }
            for (blk, rows) in by_block.iter().enumerate() {
                for &(j, aj) in rows {
                    let w = &x[blk] * aj * &zinv[blk];
                    for &(i, ai) in rows {
                        if i <= j {
                            schur[(i, j)] += ai.dot(&w);
                        }
                    }
                }
            }
            for j in 0..m {
                for i in 0..j {
                    schur[(j, i)] = schur[(i, j)];
                }
            }
            let solver = SchurSolver::new(schur);
            let solver = match solver {
                Some(s) => s,
                None => done!(SdpStatus::Stalled, None),
            };

            let x_rd_zinv: Vec<DMatrix<T>> = (0..nblk).map(|k| &x[k] * &rd[k] * &zinv[k]).collect();
            let direction = |sigma_mu: T, corr: Option<&Vec<DMatrix<T>>>| -> Option<(Vec<DMatrix<T>>, DVector<T>, Vec<DMatrix<T>>)> {
                // G = σμ Z^{-1} − X R_d Z^{-1} − corr Z^{-1};  h = b − A(G)
                let g: Vec<DMatrix<T>> = (0..nblk)
                    .map(|k| {
                        let mut gk = zinv[k].scale(sigma_mu) - &x_rd_zinv[k];
                        if let Some(c) = corr {
                            gk -= &c[k] * &zinv[k];
                        }
                        gk
                    })
                    .collect();
                let h = &self.b - self.op_a(&g);
                let dy = solver.solve(&h)?;
                let atdy = self.op_at(&dy);
                let dz: Vec<DMatrix<T>> = (0..nblk).map(|k| &rd[k] - &atdy[k]).collect();
                let dx: Vec<DMatrix<T>> = (0..nblk)
                    .map(|k| {
                        let mut d = zinv[k].scale(sigma_mu) - &x[k] - &x[k] * &dz[k] * &zinv[k];
                        if let Some(c) = corr {
                            d -= &c[k] * &zinv[k];
                        }
                        symmetrize(&d)
                    })
                    .collect();
                Some((dx, dy, dz))
            };
            let steps = |dx: &[DMatrix<T>], dz: &[DMatrix<T>]| -> Option<(f64, f64)> {
                let mut ap = f64::INFINITY;
                let mut ad = f64::INFINITY;
                for k in 0..nblk {
                    ap = ap.min(max_step(&x[k], &dx[k])?);
                    ad = ad.min(max_step(&z[k], &dz[k])?);
                }
                Some((ap, ad))
            };

            // Predictor.
            let Some((dxa, _, dza)) = direction(T::zero(), None) else {
                done!(SdpStatus::Stalled, None);
            };
            let Some((apa, ada)) = steps(&dxa, &dza) else {
                done!(SdpStatus::Stalled, None);
            };
            let apa = apa.min(1.0);
            let ada = ada.min(1.0);
            let mu_aff: f64 = (0..nblk)
                .map(|k| to_f64((&x[k] + dxa[k].scale(lit(apa))).dot(&(&z[k] + dza[k].scale(lit(ada))))))
                .sum::<f64>()
                / ntot as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // Corrector.
            let corr: Vec<DMatrix<T>> = (0..nblk).map(|k| &dxa[k] * &dza[k]).collect();
            let Some((dx, dy, dz)) = direction(lit(sigma * mu), Some(&corr)) else {
                done!(SdpStatus::Stalled, None);
            };
            let Some((ap, ad)) = steps(&dx, &dz) else {
                done!(SdpStatus::Stalled, None);
            };
            let gamma = 0.9 + 0.09 * apa.min(ada);
            let ap = (gamma * ap).min(1.0);
            let ad = (gamma * ad).min(1.0);
            if ap < 1e-10 && ad < 1e-10 {
                stall += 1;
            } else {
                stall = 0;
            }
            for k in 0..nblk {
                x[k] += dx[k].scale(lit(ap));
                z[k] += dz[k].scale(lit(ad));
                x[k] = symmetrize(&x[k]);
                z[k] = symmetrize(&z[k]);
            }
            y += dy.scale(lit(ad));
        }
    }

    fn certificate(&self, y: &DVector<T>, dobj: f64, residual: f64) -> Certificate {
        // Back to the caller's constraint scaling: y_i / ν_i.
        let ray: Vec<f64> = (0..y.len())
            .map(|i| to_f64(y[i] / self.row_scale[i]) / (dobj * to_f64(self.b_scale)))
            .collect();
        let mut order: Vec<usize> = (0..ray.len()).collect();
        let weight: Vec<f64> = (0..y.len()).map(|i| to_f64(y[i]).abs()).collect();
        order.sort_by(|&a, &b| weight[b].partial_cmp(&weight[a]).unwrap());
        let top = weight.iter().copied().fold(0.0, f64::max);
        let dominant = order
            .into_iter()
            .filter(|&i| weight[i] > 1e-3 * top)
            .map(|i| self.labels[i].clone())
            .collect();
        Certificate {
            ray,
            residual,
            dominant,
        }
    }

    fn unpack(&self, p: &SdpProblem<T>, raw: RawIterate<T>) -> SdpSolution<T> {
        let nuser = p.block_sizes.len();
        let bs = self.b_scale;
        let cs = self.c_scale;
        let blocks: Vec<DMatrix<T>> = raw.x[..nuser].iter().map(|m| m.scale(bs)).collect();
        let dual_blocks: Vec<DMatrix<T>> = raw.z[..nuser].iter().map(|m| m.scale(cs)).collect();
        let scalars: Vec<T> = match self.lp_block {
            Some(k) => (0..p.num_scalars).map(|s| raw.x[k][(s, s)] * bs).collect(),
            None => Vec::new(),
        };
        let dual = (0..raw.y.len()).map(|i| raw.y[i] * cs / self.row_scale[i]).collect();
        let scale = to_f64(bs * cs);
        SdpSolution {
            status: raw.status,
            blocks,
            scalars,
            dual,
            dual_blocks,
            primal_objective: raw.pobj * scale,
            dual_objective: raw.dobj * scale,
            relative_gap: raw.relgap,
            primal_infeasibility: raw.pinf,
            dual_infeasibility: raw.dinf,
            complementarity: raw.compl * scale,
            iterations: raw.iterations,
            certificate: raw.certificate,
        }
    }
}

enum SchurSolver<T: Scalar> {
    Chol(Cholesky<T, nalgebra::Dyn>),
    Lu(nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>),
}

impl<T: Scalar> SchurSolver<T> {
    fn new(mut m: DMatrix<T>) -> Option<Self> {
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Some(SchurSolver::Chol(ch));
        }
        let n = m.nrows();
        let diag_max = (0..n).fold(T::zero(), |a, i| a.max(m[(i, i)]));
        for i in 0..n {
            m[(i, i)] += diag_max * lit(1e-13);
        }
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Some(SchurSolver::Chol(ch));
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(SchurSolver::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, h: &DVector<T>) -> Option<DVector<T>> {
        match self {
            SchurSolver::Chol(c) => Some(c.solve(h)),
            SchurSolver::Lu(l) => l.solve(h),
        }
    }
}

/// Minimum eigenvalue helper exposed for verification code.
pub fn min_eigenvalue<T: Scalar>(m: &DMatrix<T>) -> T {
    sym_min_eig(m)
}

/// Number of constraints of each sense, `(eq, le, ge)`.
pub fn constraint_counts<T: Scalar>(p: &SdpProblem<T>) -> (usize, usize, usize) {
    (p.count_sense(Sense::Eq), p.count_sense(Sense::Le), p.count_sense(Sense::Ge))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_program_as_scalars() {
        // min x0 + 2 x1  s.t. x0 + x1 ≥ 1, x0 ≤ 0.25
        let mut p = SdpProblem::<f64>::new(vec![], 2);
        p.objective = vec![Term::Scalar(0, 1.0), Term::Scalar(1, 2.0)];
        p.add_constraint(vec![Term::Scalar(0, 1.0), Term::Scalar(1, 1.0)], Sense::Ge, 1.0, "sum");
        p.add_constraint(vec![Term::Scalar(0, 1.0)], Sense::Le, 0.25, "cap");
        let sol = p.solve().unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective - 1.75).abs() < 1e-6);
        assert!((sol.scalars[0] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let mut p = SdpProblem::<f64>::new(vec![2], 0);
        p.add_constraint(vec![Term::Block(0, DMatrix::identity(3, 3))], Sense::Eq, 1.0, "bad");
        assert!(matches!(p.solve(), Err(Error::Dimension(_))));
        let mut q = SdpProblem::<f64>::new(vec![2], 0);
        q.add_constraint(vec![Term::Block(0, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]))], Sense::Eq, 1.0, "asym");
        assert!(matches!(q.solve(), Err(Error::Invariant(_))));
    }
}
