//! Joint radar-communication precoder design.
//!
//! The max-min positioning objective is lifted to transmit covariances and
//! solved as a semidefinite program per subcarrier. Receiver streams get one
//! covariance block each; every radar-only stream enters the constraints only
//! through the total covariance `R_F`, so those streams share a single
//! aggregated block. Beamformers are then recovered from the blocks and every
//! constraint is re-checked on the recovered precoder.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channel::{tx_steering, CsiReport};
use crate::error::{Error, Result};
use crate::linalg::{embed_hermitian, extract_hermitian, hermitian_eig, quad_form, CMat, CVec};
use crate::metrics::{
    achieved_sinr, crlb_constants, directed_power_cov, radar_snr, TargetEstimate,
};
use crate::scalar::{lit, modulus, to_f64, Scalar};
use crate::scenario::Scenario;
use crate::sdp::{SdpProblem, SdpSolution, SdpStatus, Sense, SolverOptions, Term};
use crate::waveform::PrecoderSet;

/// Which subcarriers get their own SDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubcarrierPolicy {
    /// Solve at the carrier and reuse the precoder everywhere.
    #[default]
    CenterOnly,
    All,
    /// Solve every `k`-th subcarrier; the rest reuse the nearest solved one.
    Stride(usize),
}

impl SubcarrierPolicy {
    pub fn designed(self, num_subcarriers: usize) -> Vec<usize> {
        match self {
            SubcarrierPolicy::CenterOnly => vec![num_subcarriers / 2],
            SubcarrierPolicy::All => (0..num_subcarriers).collect(),
            SubcarrierPolicy::Stride(k) => (0..num_subcarriers).step_by(k.max(1)).collect(),
        }
    }
}

impl FromStr for SubcarrierPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "center" | "center-only" | "centre" => Ok(SubcarrierPolicy::CenterOnly),
            "all" => Ok(SubcarrierPolicy::All),
            _ => {
                let k = t
                    .strip_prefix("stride:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k > 0)
                    .ok_or_else(|| Error::Parse(format!("unknown subcarrier policy '{s}'")))?;
                Ok(SubcarrierPolicy::Stride(k))
            }
        }
    }
}

impl fmt::Display for SubcarrierPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubcarrierPolicy::CenterOnly => f.write_str("center"),
            SubcarrierPolicy::All => f.write_str("all"),
            SubcarrierPolicy::Stride(k) => write!(f, "stride:{k}"),
        }
    }
}

/// `ω_p = SNR_p / (κ_R + κ_Θ(Θ_p) R_p²)`, normalized so the largest weight is 1.
///
/// With this choice `ω_p P(Θ_p)` is proportional to the positioning accuracy
/// of target `p`.
pub fn compute_weights(targets: &[TargetEstimate], s: &Scenario) -> Vec<f64> {
    let raw: Vec<f64> = targets
        .iter()
        .map(|t| {
            match crlb_constants(t.azimuth_rad, s) {
                Ok((kr, kt)) => radar_snr(t.gain_abs2, s) / (kr + kt * t.range_m * t.range_m),
                Err(_) => {
                    log::warn!(
                        "target at {:.2} deg sits at endfire; its weight is negligible",
                        t.azimuth_rad.to_degrees()
                    );
                    f64::MIN_POSITIVE
                }
            }
        })
        .collect();
    let top = raw.iter().copied().fold(0.0, f64::max);
    if top > 0.0 && top.is_finite() {
        raw.iter().map(|w| w / top).collect()
    } else {
        vec![1.0; targets.len()]
    }
}

/// Azimuth of a receiver inferred from its CSI by a transmit beam scan.
pub fn receiver_azimuth<T: Scalar>(csi: &CsiReport<T>, q: usize, s: &Scenario) -> f64 {
    let n = s.ofdm.num_subcarriers / 2;
    let g = csi.response(q, n);
    let score = |sin: f64| -> f64 {
        let u = tx_steering::<T>(n, sin.clamp(-1.0, 1.0).asin(), s);
        to_f64(modulus((u.adjoint() * &g)[(0, 0)]))
    };
    let grid = 2048;
    let (mut best, mut best_v) = (0.0, f64::NEG_INFINITY);
    for i in 0..=grid {
        let x = -1.0 + 2.0 * i as f64 / grid as f64;
        let v = score(x);
        if v > best_v {
            best = x;
            best_v = v;
        }
    }
    // Golden-section polish inside one grid cell.
    let (mut a, mut b) = (best - 2.0 / grid as f64, best + 2.0 / grid as f64);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if score(c) > score(d) {
            b = d;
        } else {
            a = c;
        }
    }
    (0.5 * (a + b)).clamp(-1.0, 1.0).asin()
}

/// Directions of interest: targets first, then receivers not already covered
/// by a target within `1/N_tx` in `sin Θ`.
pub fn angle_set(target_az: &[f64], receiver_az: &[f64], num_tx: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &a in target_az.iter().chain(receiver_az) {
        if out
            .iter()
            .all(|&b: &f64| (a.sin() - b.sin()).abs() >= 1.0 / num_tx as f64)
        {
            out.push(a);
        }
    }
    out
}

/// Inputs of one design call.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderProblem<T: Scalar> {
    pub csi: CsiReport<T>,
    pub targets: Vec<TargetEstimate>,
    pub weights: Vec<f64>,
    /// Linear SINR floor per receiver; zero drops the constraint.
    pub sinr_floor: Vec<f64>,
    pub power_budget: f64,
    pub correlation_limit: f64,
    pub angle_set: Vec<f64>,
    pub policy: SubcarrierPolicy,
}

impl<T: Scalar> PrecoderProblem<T> {
    pub fn new(
        s: &Scenario,
        csi: CsiReport<T>,
        targets: Vec<TargetEstimate>,
        policy: SubcarrierPolicy,
    ) -> Result<Self> {
        if csi.num_receivers() != s.receivers.len() {
            return Err(Error::Dimension(format!(
                "CSI covers {} receivers, scenario has {}",
                csi.num_receivers(),
                s.receivers.len()
            )));
        }
        let weights = compute_weights(&targets, s);
        let rx_az: Vec<f64> = (0..csi.num_receivers())
            .map(|q| receiver_azimuth(&csi, q, s))
            .collect();
        let tgt_az: Vec<f64> = targets.iter().map(|t| t.azimuth_rad).collect();
        let angle_set = angle_set(&tgt_az, &rx_az, s.array.num_tx);
        let problem = PrecoderProblem {
            csi,
            targets,
            weights,
            sinr_floor: s.receivers.iter().map(|q| q.min_sinr_linear).collect(),
            power_budget: s.radio.total_tx_power_w,
            correlation_limit: s.correlation_limit,
            angle_set,
            policy,
        };
        problem.validate(s)?;
        Ok(problem)
    }

    pub fn validate(&self, s: &Scenario) -> Result<()> {
        let mrx = self.csi.num_receivers();
        if self.sinr_floor.len() != mrx {
            return Err(Error::Dimension("one SINR floor per receiver is required".into()));
        }
        if self.weights.len() != self.targets.len() {
            return Err(Error::Dimension("one weight per target is required".into()));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Invariant("target weights must be positive".into()));
        }
        if self.angle_set.len() > mrx + self.targets.len() {
            return Err(Error::Invariant(format!(
                "{} directions exceed receivers plus targets",
                self.angle_set.len()
            )));
        }
        if mrx > s.array.num_tx {
            return Err(Error::Invariant(format!(
                "{mrx} receivers exceed {} transmit streams",
                s.array.num_tx
            )));
        }
        if !(self.power_budget > 0.0) || !(self.correlation_limit > 0.0) {
            return Err(Error::Invariant("power budget and correlation limit must be positive".into()));
        }
        Ok(())
    }

    /// Overrides every receiver's SINR floor (`None` disables the constraint).
    pub fn with_eta_db(mut self, eta_db: Option<f64>) -> Self {
        let v = eta_db.map(|d| 10f64.powf(d / 10.0)).unwrap_or(0.0);
        self.sinr_floor.iter_mut().for_each(|e| *e = v);
        self
    }

    pub fn num_receivers(&self) -> usize {
        self.csi.num_receivers()
    }

    /// Largest SINR receiver `q` can reach on subcarrier `n` with all power
    /// beamformed to it and no interference.
    pub fn mrt_ceiling(&self, q: usize, n: usize) -> f64 {
        let g = self.csi.response(q, n);
        let gain = to_f64(g.iter().fold(T::zero(), |a, z| a + z.norm_sqr()));
        gain * self.power_budget / to_f64(self.csi.noise_var_hat[q])
    }
}

fn half_embed<T: Scalar>(m: &CMat<T>) -> DMatrix<T> {
    embed_hermitian(m).scale(lit(0.5))
}

fn outer<T: Scalar>(a: &CVec<T>, b: &CVec<T>) -> CMat<T> {
    a * b.adjoint()
}

/// Block layout of the assembled SDP: receivers `0..M_rx`, then the radar block.
pub fn radar_block(num_receivers: usize) -> usize {
    num_receivers
}

/// Builds the P-SDP for subcarrier `n` over the real embedding.
pub fn assemble_sdp<T: Scalar>(p: &PrecoderProblem<T>, n: usize, s: &Scenario) -> Result<SdpProblem<T>> {
    let ntx = s.array.num_tx;
    let mrx = p.num_receivers();
    for q in 0..mrx {
        let eta = p.sinr_floor[q];
        let ceiling = p.mrt_ceiling(q, n);
        if eta > 0.0 && eta > ceiling {
            return Err(Error::Infeasible(format!(
                "receiver {q}: SINR floor {:.2} dB exceeds the {:.2} dB reachable with all power beamformed to it",
                10.0 * eta.log10(),
                10.0 * ceiling.log10()
            )));
        }
    }
    let nblk = mrx + 1;
    let has_targets = !p.targets.is_empty();
    let mut sdp = SdpProblem::new(vec![2 * ntx; nblk], usize::from(has_targets));
    let all_blocks = |coef: &DMatrix<T>| -> Vec<Term<T>> {
        (0..nblk).map(|b| Term::Block(b, coef.clone())).collect()
    };

    let identity = half_embed(&CMat::<T>::identity(ntx, ntx));
    sdp.add_constraint(all_blocks(&identity), Sense::Le, lit(p.power_budget), "power");

    for q in 0..mrx {
        let eta = p.sinr_floor[q];
        if !(eta > 0.0) {
            continue;
        }
        let g = p.csi.response(q, n);
        let inv_noise = T::one() / p.csi.noise_var_hat[q];
        let h = half_embed(&outer(&g, &g)).scale(inv_noise);
        let terms = (0..nblk)
            .map(|b| {
                if b == q {
                    Term::Block(b, h.scale(lit(1.0 / eta)))
                } else {
                    Term::Block(b, -h.clone())
                }
            })
            .collect();
        sdp.add_constraint(terms, Sense::Ge, T::one(), format!("sinr[{q}]"));
    }

    let bound = lit::<T>(p.correlation_limit / 2f64.sqrt());
    let steer: Vec<CVec<T>> = p.angle_set.iter().map(|&a| tx_steering(n, a, s)).collect();
    let half: T = lit(0.5);
    for k in 0..steer.len() {
        for l in k + 1..steer.len() {
            // Re/Im of u_k^† R u_l as traces against Hermitian matrices.
            let lk = outer(&steer[l], &steer[k]);
            let kl = outer(&steer[k], &steer[l]);
            let re = (&lk + &kl).map(|z| z.scale(half));
            let im = (&lk - &kl).map(|z| z * nalgebra::Complex::new(T::zero(), -half));
            for (part, m) in [("re", re), ("im", im)] {
                let coef = half_embed(&m);
                let tag = format!("corr[{k},{l}].{part}");
                sdp.add_constraint(all_blocks(&coef), Sense::Le, bound, format!("{tag}<="));
                sdp.add_constraint(all_blocks(&coef), Sense::Ge, -bound, format!("{tag}>="));
            }
        }
    }

    if has_targets {
        for (i, t) in p.targets.iter().enumerate() {
            let u = tx_steering::<T>(n, t.azimuth_rad, s);
            let coef = half_embed(&outer(&u, &u)).scale(lit(p.weights[i]));
            let mut terms = all_blocks(&coef);
            terms.push(Term::Scalar(0, -T::one()));
            sdp.add_constraint(terms, Sense::Ge, T::zero(), format!("target[{i}]"));
        }
        sdp.objective = vec![Term::Scalar(0, -T::one())];
    } else {
        sdp.objective = all_blocks(&identity);
    }
    Ok(sdp)
}

/// Solver statistics of one subcarrier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub subcarrier: usize,
    pub status: SdpStatus,
    pub iterations: usize,
    pub objective: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

/// Covariance blocks recovered from one SDP solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierDesign<T: Scalar> {
    pub subcarrier: usize,
    /// `R_q` for every receiver, then the aggregated radar covariance.
    pub blocks: Vec<CMat<T>>,
    pub tau: f64,
    pub stats: SolveStats,
}

pub fn solve_subcarrier<T: Scalar>(
    p: &PrecoderProblem<T>,
    n: usize,
    s: &Scenario,
    opts: &SolverOptions,
) -> Result<SubcarrierDesign<T>> {
    let sdp = assemble_sdp(p, n, s)?;
    let sol: SdpSolution<T> = sdp.solve_with(opts)?;
    let stats = SolveStats {
        subcarrier: n,
        status: sol.status,
        iterations: sol.iterations,
        objective: -sol.primal_objective,
        relative_gap: sol.relative_gap,
        primal_infeasibility: sol.primal_infeasibility,
        dual_infeasibility: sol.dual_infeasibility,
    };
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::PrimalInfeasible => {
            let names = sol
                .certificate
                .as_ref()
                .map(|c| c.dominant.join(", "))
                .unwrap_or_default();
            return Err(Error::Infeasible(format!(
                "subcarrier {n}: constraints cannot hold together (certificate weights on: {names})"
            )));
        }
        SdpStatus::DualInfeasible => {
            return Err(Error::Numerical(format!("subcarrier {n}: design problem is unbounded")));
        }
        SdpStatus::MaxIterations | SdpStatus::Stalled => {
            let loose = 1e3 * opts.tolerance;
            if sol.relative_gap < loose && sol.primal_infeasibility < loose && sol.dual_infeasibility < loose {
                log::warn!(
                    "subcarrier {n}: solver stopped ({:?}) at gap {:.1e}; accepting iterate",
                    sol.status,
                    sol.relative_gap
                );
            } else {
                return Err(Error::Numerical(format!(
                    "subcarrier {n}: solver {:?} after {} iterations (gap {:.1e}, pinf {:.1e}, dinf {:.1e})",
                    sol.status, sol.iterations, sol.relative_gap, sol.primal_infeasibility, sol.dual_infeasibility
                )));
            }
        }
    }
    let blocks = sol.blocks.iter().map(extract_hermitian).collect();
    let tau = sol.scalars.first().map_or(0.0, |&t| to_f64(t));
    Ok(SubcarrierDesign {
        subcarrier: n,
        blocks,
        tau,
        stats,
    })
}

/// `1 − λ_max / tr` of a PSD block (0 for an exactly rank-one or empty block).
pub fn rank_one_gap<T: Scalar>(r: &CMat<T>) -> f64 {
    let (vals, _) = hermitian_eig(r);
    let tr: f64 = vals.iter().map(|&v| to_f64(v).max(0.0)).sum();
    if tr <= 0.0 {
        0.0
    } else {
        1.0 - to_f64(vals[0]).max(0.0) / tr
    }
}

/// Top eigenpair beam `√λ v` of a PSD block.
pub fn top_eigen_beam<T: Scalar>(r: &CMat<T>) -> CVec<T> {
    let (vals, vecs) = hermitian_eig(r);
    let lam = vals.first().copied().unwrap_or(T::zero()).max(T::zero());
    vecs.column(0).map(|z| z.scale(lam.sqrt()))
}

/// Recovers an `N_tx × N_tx` precoder from solved covariance blocks.
///
/// Receiver `q`'s stream is `f_q = R_q g_q / √(g_q^† R_q g_q)`, which keeps
/// the received signal power `g^† R_q g` of the block and satisfies
/// `f_q f_q^† ⪯ R_q`. What the receiver blocks do not use joins the radar
/// covariance, whose leading `N_tx − M_rx` eigen-beams fill the remaining
/// columns. Returns the precoder and the radar power that did not fit.
pub fn extract_precoder<T: Scalar>(
    design: &SubcarrierDesign<T>,
    csi: &CsiReport<T>,
    num_tx: usize,
) -> (CMat<T>, f64) {
    let mrx = csi.num_receivers();
    let n = design.subcarrier;
    let mut f = CMat::<T>::zeros(num_tx, num_tx);
    let mut radar = design.blocks[radar_block(mrx)].clone();
    for q in 0..mrx {
        let r = &design.blocks[q];
        let g = csi.response(q, n);
        let rg = r * &g;
        let power = quad_form(r, &g).re;
        let tr = r.trace().re;
        let beam = if power > tr * lit(1e-12) && power > T::zero() {
            rg.map(|z| z.unscale(power.sqrt()))
        } else {
            top_eigen_beam(r)
        };
        radar += r - &beam * beam.adjoint();
        f.set_column(q, &beam);
    }
    let (vals, vecs) = hermitian_eig(&radar);
    let free = num_tx - mrx;
    let mut dropped = 0.0;
    for (i, &lam) in vals.iter().enumerate() {
        let lam = lam.max(T::zero());
        if i < free {
            f.set_column(mrx + i, &vecs.column(i).map(|z| z.scale(lam.sqrt())));
        } else {
            dropped += to_f64(lam);
        }
    }
    (f, dropped)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCorrelation {
    pub angle_k_deg: f64,
    pub angle_l_deg: f64,
    pub max_abs: f64,
}

/// Constraint re-evaluation on the recovered precoder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub designed_subcarriers: Vec<usize>,
    pub power_budget_w: f64,
    pub max_power_w: f64,
    pub sinr_floor_db: Vec<Option<f64>>,
    /// Minimum over the designed subcarriers, per receiver.
    pub min_sinr_designed_db: Vec<f64>,
    /// Minimum over every subcarrier, per receiver.
    pub min_sinr_all_db: Vec<f64>,
    pub correlation_limit_w: f64,
    /// Largest `|Q_F[k,l]|` over pairs and designed subcarriers.
    pub max_correlation_w: f64,
    pub correlations: Vec<PairCorrelation>,
    pub angle_set_deg: Vec<f64>,
    pub target_directed_power_w: Vec<f64>,
    pub target_weighted_power: Vec<f64>,
    pub rank_one_gap: Vec<Vec<f64>>,
    pub radar_power_dropped_w: f64,
    pub solver: Vec<SolveStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution<T: Scalar> {
    pub precoders: PrecoderSet<T>,
    pub designs: Vec<SubcarrierDesign<T>>,
    pub report: VerificationReport,
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Largest `|u_k^† R u_l|` for each pair of directions.
pub fn pair_correlations<T: Scalar>(cov: &CMat<T>, angles: &[f64], n: usize, s: &Scenario) -> Vec<f64> {
    let steer: Vec<CVec<T>> = angles.iter().map(|&a| tx_steering(n, a, s)).collect();
    let mut out = Vec::new();
    for k in 0..steer.len() {
        for l in k + 1..steer.len() {
            out.push(to_f64(modulus((steer[k].adjoint() * cov * &steer[l])[(0, 0)])));
        }
    }
    out
}

pub fn verify<T: Scalar>(
    p: &PrecoderProblem<T>,
    precoders: &PrecoderSet<T>,
    designs: &[SubcarrierDesign<T>],
    dropped: f64,
    s: &Scenario,
) -> Result<VerificationReport> {
    let designed: Vec<usize> = designs.iter().map(|d| d.subcarrier).collect();
    let powers: Vec<f64> = precoders.powers().into_iter().map(to_f64).collect();
    let sinr = achieved_sinr(precoders, &p.csi)?;
    let min_over = |idx: &mut dyn Iterator<Item = usize>, q: usize| {
        idx.map(|n| to_f64(sinr.per_subcarrier[q][n]))
            .fold(f64::INFINITY, f64::min)
    };
    let mrx = p.num_receivers();
    let min_sinr_designed_db = (0..mrx)
        .map(|q| to_db(min_over(&mut designed.iter().copied(), q)))
        .collect();
    let min_sinr_all_db = (0..mrx)
        .map(|q| to_db(min_over(&mut (0..precoders.matrices.len()), q)))
        .collect();

    let npairs = p.angle_set.len() * p.angle_set.len().saturating_sub(1) / 2;
    let mut pair_max = vec![0.0f64; npairs];
    for &n in &designed {
        let cov = precoders.covariance(n);
        for (i, v) in pair_correlations(&cov, &p.angle_set, n, s).into_iter().enumerate() {
            pair_max[i] = pair_max[i].max(v);
        }
    }
    let mut correlations = Vec::with_capacity(npairs);
    let mut idx = 0;
    for k in 0..p.angle_set.len() {
        for l in k + 1..p.angle_set.len() {
            correlations.push(PairCorrelation {
                angle_k_deg: p.angle_set[k].to_degrees(),
                angle_l_deg: p.angle_set[l].to_degrees(),
                max_abs: pair_max[idx],
            });
            idx += 1;
        }
    }

    let covs: Vec<CMat<T>> = (0..precoders.matrices.len()).map(|n| precoders.covariance(n)).collect();
    let target_directed_power_w: Vec<f64> = p
        .targets
        .iter()
        .map(|t| to_f64(directed_power_cov(&covs, t.azimuth_rad, s)))
        .collect();
    let target_weighted_power = target_directed_power_w
        .iter()
        .zip(&p.weights)
        .map(|(pw, w)| pw * w)
        .collect();

    Ok(VerificationReport {
        designed_subcarriers: designed,
        power_budget_w: p.power_budget,
        max_power_w: powers.iter().copied().fold(0.0, f64::max),
        sinr_floor_db: p
            .sinr_floor
            .iter()
            .map(|&e| if e > 0.0 { Some(to_db(e)) } else { None })
            .collect(),
        min_sinr_designed_db,
        min_sinr_all_db,
        correlation_limit_w: p.correlation_limit,
        max_correlation_w: pair_max.iter().copied().fold(0.0, f64::max),
        correlations,
        angle_set_deg: p.angle_set.iter().map(|a| a.to_degrees()).collect(),
        target_directed_power_w,
        target_weighted_power,
        rank_one_gap: designs
            .iter()
            .map(|d| d.blocks.iter().map(rank_one_gap).collect())
            .collect(),
        radar_power_dropped_w: dropped,
        solver: designs.iter().map(|d| d.stats.clone()).collect(),
    })
}

/// Solves the designed subcarriers, recovers beamformers and fills every
/// subcarrier with the nearest designed precoder.
pub fn design<T: Scalar>(p: &PrecoderProblem<T>, s: &Scenario) -> Result<BeamformerSolution<T>> {
    design_with(p, s, &SolverOptions::default())
}

pub fn design_with<T: Scalar>(
    p: &PrecoderProblem<T>,
    s: &Scenario,
    opts: &SolverOptions,
) -> Result<BeamformerSolution<T>> {
    p.validate(s)?;
    let nsc = s.ofdm.num_subcarriers;
    let ntx = s.array.num_tx;
    let designed = p.policy.designed(nsc);
    let mut designs = Vec::with_capacity(designed.len());
    let mut matrices = Vec::with_capacity(designed.len());
    let mut dropped = 0.0f64;
    for &n in &designed {
        let d = solve_subcarrier(p, n, s, opts)?;
        let (f, lost) = extract_precoder(&d, &p.csi, ntx);
        dropped = dropped.max(lost);
        matrices.push(f);
        designs.push(d);
    }
    let full = (0..nsc)
        .map(|n| {
            let nearest = designed
                .iter()
                .enumerate()
                .min_by_key(|(_, &m)| m.abs_diff(n))
                .map(|(i, _)| i)
                .unwrap_or(0);
            matrices[nearest].clone()
        })
        .collect();
    let precoders = PrecoderSet { matrices: full };
    let report = verify(p, &precoders, &designs, dropped, s)?;
    Ok(BeamformerSolution {
        precoders,
        designs,
        report,
    })
}

